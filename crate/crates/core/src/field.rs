//! The uniform `(rho, z)` grid, its spectral dual and the wavefunction.

use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Default domain width in both directions, natural length.
pub const DEFAULT_EXTENT: f64 = 25.0;
/// Smallest accepted point count per axis.
pub const MIN_POINTS: usize = 1 << 6;

/// Cell-centred grid. Nodes sit at `-extent/2 + (i + 1/2) spacing`, so none lies
/// on `z = 0` and the pore rim is never sampled.
///
/// Storage is row-major with `z` fastest: index `i_rho * n_z + i_z`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid2D<T> {
    pub extent_rho: T,
    pub extent_z: T,
    pub n_rho: usize,
    pub n_z: usize,
    pub spacing_rho: T,
    pub spacing_z: T,
    pub rho: Vec<T>,
    pub z: Vec<T>,
    /// Wavenumbers in standard FFT order.
    pub k_rho: Vec<T>,
    pub k_z: Vec<T>,
}

fn axis<T: Real>(extent: T, n: usize) -> (Vec<T>, Vec<T>) {
    let h = extent / T::of_usize(n);
    let half = T::of(0.5);
    let x = (0..n).map(|i| -extent * half + (T::of_usize(i) + half) * h).collect();
    let dk = T::TAU() / extent;
    let k = (0..n)
        .map(|i| if i < n / 2 { T::of_usize(i) * dk } else { -T::of_usize(n - i) * dk })
        .collect();
    (x, k)
}

/// Builds a centred grid with extents `(rho, z)`.
pub fn make_grid<T: Real>(extent: (T, T), n_rho: usize, n_z: usize, d: T) -> Result<Grid2D<T>> {
    for (name, n) in [("N_rho", n_rho), ("N_z", n_z)] {
        if !n.is_power_of_two() || n < MIN_POINTS {
            return Err(Error::invalid(format!("{name} must be a power of two >= {MIN_POINTS}, got {n}")));
        }
    }
    let (er, ez) = extent;
    if !(er > T::zero() && ez > T::zero()) || !er.is_finite() || !ez.is_finite() {
        return Err(Error::invalid(format!("extents must be positive, got {er} x {ez}")));
    }
    let (rho, k_rho) = axis(er, n_rho);
    let (z, k_z) = axis(ez, n_z);
    let grid = Grid2D {
        extent_rho: er,
        extent_z: ez,
        n_rho,
        n_z,
        spacing_rho: er / T::of_usize(n_rho),
        spacing_z: ez / T::of_usize(n_z),
        rho,
        z,
        k_rho,
        k_z,
    };
    grid.check_clear_of_rim(d)?;
    Ok(grid)
}

impl<T: Real> Grid2D<T> {
    /// Square grid of the default extent.
    pub fn square(n: usize) -> Result<Self> {
        let e = T::of(DEFAULT_EXTENT);
        make_grid((e, e), n, n, T::zero())
    }

    pub fn len(&self) -> usize {
        self.n_rho * self.n_z
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i_rho: usize, i_z: usize) -> usize {
        i_rho * self.n_z + i_z
    }

    pub fn cell_area(&self) -> T {
        self.spacing_rho * self.spacing_z
    }

    /// Area element of the spectral grid with the unnormalised forward FFT,
    /// chosen so that `k_area * sum |fft psi|^2 = cell_area * sum |psi|^2`.
    pub fn spectral_weight(&self) -> T {
        self.cell_area() / T::of_usize(self.len())
    }

    /// Fails if any node lies on the rim circle `|rho| = d/2, z = 0`.
    pub fn check_clear_of_rim(&self, d: T) -> Result<()> {
        let r = d * T::of(0.5);
        let on_plane = self.z.iter().any(|&z| z == T::zero());
        let on_rim = self.rho.iter().any(|&rho| rho.abs() == r);
        if on_plane && on_rim {
            return Err(Error::SingularPoint { rho: r.as_f64(), z: 0.0 });
        }
        Ok(())
    }
}

/// Wavefunction on a grid at a given time.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveField<T> {
    pub grid: Grid2D<T>,
    pub psi: Vec<Complex<T>>,
    pub time: T,
}

impl<T: Real> WaveField<T> {
    pub fn zeros(grid: Grid2D<T>) -> Self {
        let psi = vec![Complex::new(T::zero(), T::zero()); grid.len()];
        Self { grid, psi, time: T::zero() }
    }

    /// `sum |psi|^2 * cell_area`, accumulated in `f64` in a fixed order.
    pub fn norm(&self) -> f64 {
        weighted_norm(&self.psi, self.grid.n_z, self.grid.cell_area().as_f64())
    }

    /// Multiplies by `e^{i phi}`.
    pub fn apply_global_phase(&mut self, phi: T) {
        let c = Complex::from_polar(T::one(), phi);
        self.psi.par_iter_mut().for_each(|p| *p = *p * c);
    }

    pub fn density(&self) -> Vec<T> {
        self.psi.iter().map(|p| p.norm_sqr()).collect()
    }
}

/// Row sums in parallel, then a sequential sum over rows, so the result does
/// not depend on the thread count.
pub(crate) fn weighted_norm<T: Real>(psi: &[Complex<T>], row: usize, weight: f64) -> f64 {
    let rows: Vec<f64> = psi
        .par_chunks(row)
        .map(|r| r.iter().map(|p| p.norm_sqr().as_f64()).sum::<f64>())
        .collect();
    rows.iter().sum::<f64>() * weight
}

/// Normalised Gaussian starting at `(z, rho) = (r cos theta, r sin theta)` with
/// momentum `-p0 (cos theta, sin theta)`, aimed at the origin. `sigma` is the
/// standard deviation of `|psi|^2` along each axis.
pub fn gaussian_packet<T: Real>(grid: &Grid2D<T>, r: T, theta: T, sigma: T, p0: T) -> Result<WaveField<T>> {
    if !(sigma > T::zero()) {
        return Err(Error::invalid(format!("sigma must be positive, got {sigma}")));
    }
    let (c, s) = (theta.cos(), theta.sin());
    let z0 = r * c;
    let rho0 = r * s;
    let margin = T::of(3.0) * sigma;
    let half = T::of(0.5);
    let fits = |x: T, extent: T| x - margin >= -extent * half && x + margin <= extent * half;
    if !fits(z0, grid.extent_z) || !fits(rho0, grid.extent_rho) {
        return Err(Error::invalid(format!(
            "packet at (z, rho) = ({z0}, {rho0}) with sigma {sigma} is within 3 sigma of the boundary"
        )));
    }
    let (kz, kr) = (-p0 * c, -p0 * s);
    let inv = T::one() / (T::of(4.0) * sigma * sigma);
    let mut field = WaveField::zeros(grid.clone());
    field
        .psi
        .par_chunks_mut(grid.n_z)
        .zip(grid.rho.par_iter())
        .for_each(|(row, &rho)| {
            let dr = rho - rho0;
            for (p, &z) in row.iter_mut().zip(grid.z.iter()) {
                let dz = z - z0;
                let amp = (-(dz * dz + dr * dr) * inv).exp();
                *p = Complex::from_polar(amp, kz * z + kr * rho);
            }
        });
    let n = field.norm();
    if !(n > 0.0) {
        return Err(Error::invalid("packet is not resolved by the grid"));
    }
    let scale = T::of(1.0 / n.sqrt());
    field.psi.par_iter_mut().for_each(|p| *p = *p * scale);
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::expectation_values;

    #[test]
    fn spacing_of_default_fine_grid() {
        let g = make_grid((25.0f64, 25.0), 1 << 12, 1 << 12, 1.0).unwrap();
        assert!((g.spacing_z - 25.0 / 4096.0).abs() < 1e-15);
        assert!((g.spacing_z - 6.1e-3).abs() < 1e-4);
    }

    #[test]
    fn anisotropic_grid() {
        let g = make_grid((25.0, 25.0), 1 << 7, 1 << 11, 4.0).unwrap();
        assert_eq!(g.len(), 128 * 2048);
        assert!(g.spacing_rho > g.spacing_z);
    }

    #[test]
    fn wavenumber_layout() {
        let g = make_grid((25.0f64, 20.0), 64, 128, 0.0).unwrap();
        assert!((g.k_z[1] - std::f64::consts::TAU / 20.0).abs() < 1e-14);
        let kmax = g.k_z.iter().fold(0.0f64, |m, k| m.max(k.abs()));
        assert!((kmax - std::f64::consts::PI / g.spacing_z).abs() < 1e-12);
        assert_eq!(g.k_z[64], -kmax);
        assert_eq!(g.k_z[127], -g.k_z[1]);
    }

    #[test]
    fn no_node_on_plate_plane() {
        let g = make_grid((25.0f64, 25.0), 64, 64, 25.0 / 64.0).unwrap();
        assert!(g.z.iter().all(|&z| z != 0.0));
        assert!(g.z.iter().any(|&z| (z - 0.5 * g.spacing_z).abs() < 1e-15));
    }

    #[test]
    fn rejects_bad_counts() {
        assert!(make_grid((25.0, 25.0), 100, 64, 0.0).is_err());
        assert!(make_grid((25.0, 25.0), 32, 64, 0.0).is_err());
        assert!(make_grid((0.0, 25.0), 64, 64, 0.0).is_err());
    }

    #[test]
    fn normal_incidence_packet() {
        let g = Grid2D::<f64>::square(256).unwrap();
        let f = gaussian_packet(&g, 4.0, 0.0, 1.0, 10.0).unwrap();
        assert!((f.norm() - 1.0).abs() < 1e-12);
        let m = expectation_values(&f);
        assert!((m.position.z - 4.0).abs() < g.spacing_z / 10.0);
        assert!(m.position.rho.abs() < g.spacing_rho / 10.0);
        assert!((m.momentum.z + 10.0).abs() < 1e-6 * 10.0);
    }

    #[test]
    fn oblique_packet_moments() {
        let n = 1 << 12;
        let g = Grid2D::<f64>::square(n).unwrap();
        let theta = 0.3 * std::f64::consts::PI;
        let p0 = 36.2;
        let f = gaussian_packet(&g, 4.0, theta, 1.0, p0).unwrap();
        let m = expectation_values(&f);
        assert!((m.position.z - 4.0 * theta.cos()).abs() < g.spacing_z / 10.0);
        assert!((m.position.rho - 4.0 * theta.sin()).abs() < g.spacing_rho / 10.0);
        assert!((m.momentum.z + p0 * theta.cos()).abs() < 1e-6 * p0);
        assert!((m.momentum.rho + p0 * theta.sin()).abs() < 1e-6 * p0);
        assert!((m.width.z / 1.0 - 1.0).abs() < 1e-3);
        assert!((m.width.rho / 1.0 - 1.0).abs() < 1e-3);
    }

    #[test]
    fn refinement_keeps_norm() {
        let a = gaussian_packet(&Grid2D::<f64>::square(128).unwrap(), 4.0, 0.2, 1.0, 5.0).unwrap();
        let b = gaussian_packet(&Grid2D::<f64>::square(256).unwrap(), 4.0, 0.2, 1.0, 5.0).unwrap();
        assert!((a.norm() - b.norm()).abs() < 1e-10);
        // unnormalised sampled mass is a property of the continuum Gaussian
        let g = Grid2D::<f64>::square(128).unwrap();
        let h = Grid2D::<f64>::square(256).unwrap();
        let raw = |g: &Grid2D<f64>| {
            g.rho
                .iter()
                .flat_map(|&r| g.z.iter().map(move |&z| (-((z - 4.0f64).powi(2) + r * r) / 2.0).exp()))
                .sum::<f64>()
                * g.cell_area()
        };
        assert!((raw(&g) - raw(&h)).abs() < 1e-10);
    }

    #[test]
    fn packet_too_close_to_edge() {
        let g = Grid2D::<f64>::square(128).unwrap();
        assert!(gaussian_packet(&g, 11.0, 0.0, 1.0, 1.0).is_err());
        assert!(gaussian_packet(&g, 4.0, 0.0, 3.0, 1.0).is_err());
    }

    #[test]
    fn single_precision_packet() {
        let g = Grid2D::<f32>::square(128).unwrap();
        let f = gaussian_packet(&g, 4.0f32, 0.0, 1.0, 5.0).unwrap();
        assert!((f.norm() - 1.0).abs() < 1e-5);
    }
}
