//! 2D FFT over row-major `(rho, z)` data with rayon-parallel rows.
//!
//! Columns are handled by transposing. [`Fft2::forward_to_transposed`] leaves the
//! spectrum in `(z, rho)` order so a transform round trip costs two transposes
//! instead of four.

use std::sync::Arc;

use num_complex::Complex;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::scalar::Real;

const BLOCK: usize = 16;

pub struct Fft2<T: Real> {
    n_rho: usize,
    n_z: usize,
    fwd_z: Arc<dyn Fft<T>>,
    inv_z: Arc<dyn Fft<T>>,
    fwd_rho: Arc<dyn Fft<T>>,
    inv_rho: Arc<dyn Fft<T>>,
}

impl<T: Real> std::fmt::Debug for Fft2<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft2").field("n_rho", &self.n_rho).field("n_z", &self.n_z).finish()
    }
}

fn rows<T: Real>(plan: &Arc<dyn Fft<T>>, data: &mut [Complex<T>], len: usize) {
    let scratch_len = plan.get_inplace_scratch_len();
    data.par_chunks_mut(len).for_each_init(
        || vec![Complex::new(T::zero(), T::zero()); scratch_len],
        |scratch, row| plan.process_with_scratch(row, scratch),
    );
}

/// `dst[j * rows + i] = src[i * cols + j]` for a `rows x cols` source.
pub fn transpose<T: Real>(src: &[Complex<T>], dst: &mut [Complex<T>], rows: usize, cols: usize) {
    assert_eq!(src.len(), rows * cols);
    assert_eq!(dst.len(), rows * cols);
    dst.par_chunks_mut(BLOCK * rows).enumerate().for_each(|(b, out)| {
        let j0 = b * BLOCK;
        let nb = out.len() / rows;
        for i in 0..rows {
            let line = &src[i * cols + j0..i * cols + j0 + nb];
            for (jj, v) in line.iter().enumerate() {
                out[jj * rows + i] = *v;
            }
        }
    });
}

impl<T: Real> Fft2<T> {
    pub fn new(n_rho: usize, n_z: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n_rho,
            n_z,
            fwd_z: planner.plan_fft_forward(n_z),
            inv_z: planner.plan_fft_inverse(n_z),
            fwd_rho: planner.plan_fft_forward(n_rho),
            inv_rho: planner.plan_fft_inverse(n_rho),
        }
    }

    /// Unnormalised forward transform of `data` (`rho`-major). The spectrum is
    /// written to `out` in `z`-major order; `data` is used as workspace.
    pub fn forward_to_transposed(&self, data: &mut [Complex<T>], out: &mut [Complex<T>]) {
        rows(&self.fwd_z, data, self.n_z);
        transpose(data, out, self.n_rho, self.n_z);
        rows(&self.fwd_rho, out, self.n_rho);
    }

    /// Unnormalised inverse of [`Self::forward_to_transposed`]: consumes a `z`-major
    /// spectrum in `spec` and writes the `rho`-major field to `out`.
    pub fn inverse_from_transposed(&self, spec: &mut [Complex<T>], out: &mut [Complex<T>]) {
        rows(&self.inv_rho, spec, self.n_rho);
        transpose(spec, out, self.n_z, self.n_rho);
        rows(&self.inv_z, out, self.n_z);
    }

    /// Unnormalised forward transform in place, `rho`-major in and out.
    pub fn forward(&self, data: &mut [Complex<T>]) {
        let mut tmp = data.to_vec();
        self.forward_to_transposed(data, &mut tmp);
        transpose(&tmp, data, self.n_z, self.n_rho);
    }

    /// Unnormalised inverse transform in place.
    pub fn inverse(&self, data: &mut [Complex<T>]) {
        let mut tmp = data.to_vec();
        transpose(data, &mut tmp, self.n_rho, self.n_z);
        self.inverse_from_transposed(&mut tmp, data);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dft(data: &[Complex<f64>], nr: usize, nz: usize) -> Vec<Complex<f64>> {
        let mut out = vec![Complex::new(0.0, 0.0); nr * nz];
        for kr in 0..nr {
            for kz in 0..nz {
                let mut acc = Complex::new(0.0, 0.0);
                for r in 0..nr {
                    for z in 0..nz {
                        let ph = -std::f64::consts::TAU * ((kr * r) as f64 / nr as f64 + (kz * z) as f64 / nz as f64);
                        acc += data[r * nz + z] * Complex::from_polar(1.0, ph);
                    }
                }
                out[kr * nz + kz] = acc;
            }
        }
        out
    }

    fn sample(nr: usize, nz: usize) -> Vec<Complex<f64>> {
        (0..nr * nz)
            .map(|i| Complex::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect()
    }

    #[test]
    fn matches_naive_dft() {
        let (nr, nz) = (8, 16);
        let data = sample(nr, nz);
        let mut fast = data.clone();
        Fft2::new(nr, nz).forward(&mut fast);
        let slow = naive_dft(&data, nr, nz);
        for (a, b) in fast.iter().zip(slow.iter()) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn round_trip() {
        let (nr, nz) = (64, 32);
        let data = sample(nr, nz);
        let mut x = data.clone();
        let f = Fft2::new(nr, nz);
        f.forward(&mut x);
        f.inverse(&mut x);
        let n = (nr * nz) as f64;
        for (a, b) in x.iter().zip(data.iter()) {
            assert!((a / n - b).norm() < 1e-12);
        }
    }

    #[test]
    fn transpose_non_square() {
        let (r, c) = (5, 37);
        let src: Vec<Complex<f64>> = (0..r * c).map(|i| Complex::new(i as f64, 0.0)).collect();
        let mut dst = vec![Complex::new(0.0, 0.0); r * c];
        transpose(&src, &mut dst, r, c);
        for i in 0..r {
            for j in 0..c {
                assert_eq!(dst[j * r + i], src[i * c + j]);
            }
        }
    }
}
