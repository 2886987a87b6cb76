//! Binary and CSV dumps of grid data.
//!
//! Binary layout, all little-endian:
//!
//! | offset | size | content                         |
//! |--------|------|---------------------------------|
//! | 0      | 8    | magic `QREFLDMP`                |
//! | 8      | 8    | `u64` format version (1)        |
//! | 16     | 8    | `u64` plane count `P`           |
//! | 24     | 8    | `u64` `N_rho`                   |
//! | 32     | 8    | `u64` `N_z`                     |
//! | 40     | 8    | `f64` extent in `rho`           |
//! | 48     | 8    | `f64` extent in `z`             |
//! | 56     | 8    | `f64` time                      |
//! | 64     | ...  | `P` planes of `N_rho * N_z` `f64`, row-major, `z` fastest |

use std::io::{self, BufWriter, Read, Write};

use num_complex::Complex;

use crate::field::{Grid2D, WaveField};
use crate::scalar::Real;

pub const MAGIC: &[u8; 8] = b"QREFLDMP";
pub const VERSION: u64 = 1;
pub const HEADER_LEN: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct Dump {
    pub n_rho: usize,
    pub n_z: usize,
    pub extent_rho: f64,
    pub extent_z: f64,
    pub time: f64,
    pub planes: Vec<Vec<f64>>,
}

pub fn write_dump<W: Write>(out: W, dump: &Dump) -> io::Result<()> {
    let mut w = BufWriter::new(out);
    w.write_all(MAGIC)?;
    for v in [VERSION, dump.planes.len() as u64, dump.n_rho as u64, dump.n_z as u64] {
        w.write_all(&v.to_le_bytes())?;
    }
    for v in [dump.extent_rho, dump.extent_z, dump.time] {
        w.write_all(&v.to_le_bytes())?;
    }
    for plane in &dump.planes {
        if plane.len() != dump.n_rho * dump.n_z {
            return Err(io::Error::new(io::ErrorKind::InvalidInput, "plane size does not match dims"));
        }
        for v in plane {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()
}

pub fn read_dump<R: Read>(mut input: R) -> io::Result<Dump> {
    let bad = |m: &str| io::Error::new(io::ErrorKind::InvalidData, m.to_string());
    let mut head = [0u8; HEADER_LEN];
    input.read_exact(&mut head)?;
    if &head[..8] != MAGIC {
        return Err(bad("not a dump file"));
    }
    let u = |i: usize| u64::from_le_bytes(head[i..i + 8].try_into().expect("8 bytes"));
    let f = |i: usize| f64::from_le_bytes(head[i..i + 8].try_into().expect("8 bytes"));
    if u(8) != VERSION {
        return Err(bad("unsupported dump version"));
    }
    let (p, n_rho, n_z) = (u(16) as usize, u(24) as usize, u(32) as usize);
    let n = n_rho.checked_mul(n_z).ok_or_else(|| bad("dims overflow"))?;
    let mut planes = Vec::with_capacity(p);
    let mut buf = vec![0u8; n * 8];
    for _ in 0..p {
        input.read_exact(&mut buf)?;
        planes.push(buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect());
    }
    Ok(Dump { n_rho, n_z, extent_rho: f(40), extent_z: f(48), time: f(56), planes })
}

/// One real plane on `grid`.
pub fn scalar_dump<T: Real>(grid: &Grid2D<T>, values: &[T], time: f64) -> Dump {
    Dump {
        n_rho: grid.n_rho,
        n_z: grid.n_z,
        extent_rho: grid.extent_rho.as_f64(),
        extent_z: grid.extent_z.as_f64(),
        time,
        planes: vec![values.iter().map(|v| v.as_f64()).collect()],
    }
}

/// Real and imaginary planes of a field.
pub fn field_dump<T: Real>(field: &WaveField<T>) -> Dump {
    let g = &field.grid;
    Dump {
        n_rho: g.n_rho,
        n_z: g.n_z,
        extent_rho: g.extent_rho.as_f64(),
        extent_z: g.extent_z.as_f64(),
        time: field.time.as_f64(),
        planes: vec![
            field.psi.iter().map(|p| p.re.as_f64()).collect(),
            field.psi.iter().map(|p| p.im.as_f64()).collect(),
        ],
    }
}

/// Rebuilds a field from a two-plane dump.
pub fn field_from_dump(dump: &Dump) -> crate::Result<WaveField<f64>> {
    if dump.planes.len() != 2 {
        return Err(crate::Error::InvalidArgument(format!("field dump needs 2 planes, found {}", dump.planes.len())));
    }
    let grid = crate::field::make_grid((dump.extent_rho, dump.extent_z), dump.n_rho, dump.n_z, 0.0)?;
    let psi = dump.planes[0].iter().zip(dump.planes[1].iter()).map(|(&r, &i)| Complex::new(r, i)).collect();
    Ok(WaveField { grid, psi, time: dump.time })
}

/// `rho_um,z_um,V_natural` for every node.
pub fn write_scalar_csv<T: Real, W: Write>(out: W, grid: &Grid2D<T>, values: &[T], header: &str) -> io::Result<()> {
    let mut w = BufWriter::new(out);
    writeln!(w, "rho_um,z_um,{header}")?;
    for (ir, rho) in grid.rho.iter().enumerate() {
        for (iz, z) in grid.z.iter().enumerate() {
            writeln!(w, "{},{},{}", rho.as_f64(), z.as_f64(), values[grid.index(ir, iz)].as_f64())?;
        }
    }
    w.flush()
}

/// `|psi|^2` averaged over blocks so that neither axis exceeds `max_side` points.
pub fn write_density_csv<T: Real, W: Write>(out: W, field: &WaveField<T>, max_side: usize) -> io::Result<()> {
    let g = &field.grid;
    let br = g.n_rho.div_ceil(max_side).max(1);
    let bz = g.n_z.div_ceil(max_side).max(1);
    let mut w = BufWriter::new(out);
    writeln!(w, "rho_um,z_um,density")?;
    for r0 in (0..g.n_rho).step_by(br) {
        for z0 in (0..g.n_z).step_by(bz) {
            let (mut s, mut rho, mut z, mut n) = (0.0, 0.0, 0.0, 0.0);
            for ir in r0..(r0 + br).min(g.n_rho) {
                for iz in z0..(z0 + bz).min(g.n_z) {
                    s += field.psi[g.index(ir, iz)].norm_sqr().as_f64();
                    rho += g.rho[ir].as_f64();
                    z += g.z[iz].as_f64();
                    n += 1.0;
                }
            }
            writeln!(w, "{},{},{}", rho / n, z / n, s / n)?;
        }
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{gaussian_packet, Grid2D};

    #[test]
    fn header_layout() {
        let d = Dump { n_rho: 2, n_z: 3, extent_rho: 1.5, extent_z: 2.5, time: 0.25, planes: vec![vec![1.0; 6]] };
        let mut buf = Vec::new();
        write_dump(&mut buf, &d).unwrap();
        assert_eq!(buf.len(), HEADER_LEN + 6 * 8);
        assert_eq!(&buf[..8], b"QREFLDMP");
        assert_eq!(u64::from_le_bytes(buf[16..24].try_into().unwrap()), 1);
        assert_eq!(u64::from_le_bytes(buf[24..32].try_into().unwrap()), 2);
        assert_eq!(u64::from_le_bytes(buf[32..40].try_into().unwrap()), 3);
        assert_eq!(f64::from_le_bytes(buf[48..56].try_into().unwrap()), 2.5);
        assert_eq!(f64::from_le_bytes(buf[64..72].try_into().unwrap()), 1.0);
    }

    #[test]
    fn field_round_trip() {
        let g = Grid2D::<f64>::square(64).unwrap();
        let f = gaussian_packet(&g, 2.0, 0.3, 1.0, 4.0).unwrap();
        let mut buf = Vec::new();
        write_dump(&mut buf, &field_dump(&f)).unwrap();
        let back = field_from_dump(&read_dump(&buf[..]).unwrap()).unwrap();
        assert_eq!(back.psi, f.psi);
        assert_eq!(back.grid, f.grid);
    }

    #[test]
    fn rejects_garbage() {
        assert!(read_dump(&[0u8; 80][..]).is_err());
    }

    #[test]
    fn density_csv_is_downsampled() {
        let g = Grid2D::<f64>::square(128).unwrap();
        let f = gaussian_packet(&g, 2.0, 0.0, 1.0, 1.0).unwrap();
        let mut buf = Vec::new();
        write_density_csv(&mut buf, &f, 32).unwrap();
        let lines = String::from_utf8(buf).unwrap().lines().count();
        assert_eq!(lines, 1 + 32 * 32);
    }
}
