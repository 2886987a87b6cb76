//! Electrostatic image potential of a perfectly conducting plate with a
//! circular hole of diameter `d`, for a dipole tilted by `theta` from the plate
//! normal inside the `(rho, z)` plane of motion.

use crate::error::{Error, Result};
use crate::scalar::Real;

use super::PotentialParams;

/// Below this diameter the hole is treated as absent and the closed-form
/// plate limit is used.
pub const ZERO_DIAMETER: f64 = 1e-12;

/// On-axis points closer to the plate than this fraction of the hole radius
/// use a series for the bracketed terms, which cancel to `O((z/a)³)`.
const AXIS_SERIES_THRESHOLD: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShorthandValues<T> {
    pub p: T,
    pub q_plus: T,
    pub q_minus: T,
    pub r_plus: T,
    pub r_minus: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XiCoefficients<T> {
    pub rho: T,
    pub phi: T,
    pub z: T,
}

pub fn shorthands<T: Real>(rho: T, z: T, d: T) -> ShorthandValues<T> {
    let a = d * T::of(0.5);
    let rho2 = rho * rho;
    let z2 = z * z;
    let a2 = a * a;
    ShorthandValues {
        p: rho2 + z2 - a2,
        q_plus: rho2 + z2 + a2,
        q_minus: rho2 - z2 - a2,
        r_plus: ((rho + a) * (rho + a) + z2).sqrt(),
        r_minus: ((rho - a) * (rho - a) + z2).sqrt(),
    }
}

/// `pi/2 + arctan(P / (d z))` for `d z > 0`, written as a two-argument
/// arctangent so it stays accurate when `P / (d z)` is large and negative.
fn half_pi_plus_arctan<T: Real>(p: T, dz: T) -> T {
    dz.atan2(-p)
}

pub fn xi_coefficients<T: Real>(rho: T, z: T, d: T) -> Result<XiCoefficients<T>> {
    if d < T::zero() {
        return Err(Error::invalid(format!("hole diameter must be non-negative, got {d}")));
    }
    if z <= T::zero() {
        if z == T::zero() && (d.as_f64() < ZERO_DIAMETER || rho.abs() >= d * T::of(0.5)) {
            return Err(Error::SingularPoint { rho: rho.as_f64(), z: 0.0 });
        }
        return Err(Error::Domain(format!("image potential is evaluated for z > 0 only, got z = {z}")));
    }
    let rho = rho.abs();
    if d.as_f64() < ZERO_DIAMETER {
        return Ok(plate_limit(z));
    }
    if rho == T::zero() {
        return Ok(on_axis(z, d));
    }

    let s = shorthands(rho, z, d);
    if s.r_plus == T::zero() || s.r_minus == T::zero() {
        return Err(Error::SingularPoint { rho: rho.as_f64(), z: z.as_f64() });
    }
    let one = T::one();
    let dz = d * z;
    let rr = s.r_plus * s.r_minus;
    let rr2 = rr * rr;
    let rr3 = rr2 * rr;
    let rr4 = rr2 * rr2;
    let rr5 = rr4 * rr;
    let rho2 = rho * rho;
    let z3 = z * z * z;
    let d3_term = d * d * d / (T::of(6.0) * rr3);
    let angle = half_pi_plus_arctan(s.p, dz);

    let xi_rho = d * rho2 / rr5 * (s.p * s.p - d * d * z * z)
        + d3_term
        + one / (T::of(4.0) * z3) * (angle + dz / rr4 * s.q_minus * s.q_minus * s.p);
    let xi_phi = d3_term + one / (T::of(4.0) * z3) * (angle + dz / rr2 * s.p);
    let xi_z = d / rr5 * (z * z * s.q_plus * s.q_plus - d * d * T::of(0.25) * s.q_minus * s.q_minus)
        + d3_term
        + one / (T::of(2.0) * z3)
            * (angle + dz / rr2 * s.q_minus + T::of(2.0) * d * rho2 * z3 / rr4 * s.p);

    Ok(XiCoefficients { rho: xi_rho, phi: xi_phi, z: xi_z })
}

fn plate_limit<T: Real>(z: T) -> XiCoefficients<T> {
    let z3 = z * z * z;
    let quarter = T::PI() / (T::of(4.0) * z3);
    XiCoefficients { rho: quarter, phi: quarter, z: quarter + quarter }
}

/// `rho = 0`, where `R+ = R- = sqrt(a² + z²)` and the bracketed terms reduce to
/// functions of `t = z / a`.
fn on_axis<T: Real>(z: T, d: T) -> XiCoefficients<T> {
    let a = d * T::of(0.5);
    let t = z / a;
    let r2 = a * a + z * z;
    let r6 = r2 * r2 * r2;
    let d3_term = d * d * d / (T::of(6.0) * r6);
    let a3 = a * a * a;

    // bracket_z  = 2 atan t - 2t/(1+t²)           = sum_n -4n(-1)^n t^(2n+1)/(2n+1)
    // bracket_rp = 2 atan t + 2t(t²-1)/(1+t²)²    = sum_n 8n(n+1)(-1)^(n+1) t^(2n+1)/(2n+1)
    // Both are divided by z³ = a³ t³.
    let (bz_over_t3, brp_over_t3) = if t.as_f64() < AXIS_SERIES_THRESHOLD {
        let t2 = t * t;
        let mut pow = T::one();
        let mut sz = T::zero();
        let mut srp = T::zero();
        for n in 1..=10usize {
            let sign = if n % 2 == 0 { T::one() } else { -T::one() };
            let denom = T::of_usize(2 * n + 1);
            sz = sz - sign * T::of_usize(4 * n) / denom * pow;
            srp = srp - sign * T::of_usize(8 * n * (n + 1)) / denom * pow;
            pow = pow * t2;
        }
        (sz, srp)
    } else {
        let t2 = t * t;
        let t3 = t2 * t;
        let at = T::of(2.0) * t.atan();
        let bz = at - T::of(2.0) * t / (T::one() + t2);
        let brp = at + T::of(2.0) * t * (t2 - T::one()) / ((T::one() + t2) * (T::one() + t2));
        (bz / t3, brp / t3)
    };

    let transverse = d3_term + brp_over_t3 / (T::of(4.0) * a3);
    let xi_z = d * (z * z - a * a) / r6 + d3_term + bz_over_t3 / (T::of(2.0) * a3);
    XiCoefficients { rho: transverse, phi: transverse, z: xi_z }
}

/// Energy shift `V = -(C3/pi) (Xi_rho sin²theta + Xi_z cos²theta)`.
pub fn bare_potential<T: Real>(rho: T, z: T, params: &PotentialParams<T>) -> Result<T> {
    bare_potential_raw(rho, z, params.theta, params.d, params.c3)
}

pub(crate) fn bare_potential_raw<T: Real>(rho: T, z: T, theta: T, d: T, c3: T) -> Result<T> {
    let xi = xi_coefficients(rho, z, d)?;
    let (s, c) = theta.sin_cos();
    Ok(-(c3 / T::PI()) * (xi.rho * s * s + xi.z * c * c))
}
