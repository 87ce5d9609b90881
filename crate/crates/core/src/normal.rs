//! Standard normal CDF and quantile, evaluated in double precision
//! regardless of the caller's scalar type.

use libm::erfc;
use statrs::function::erf::erfc_inv;

use crate::scalar::Real;

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

fn phi_f64(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// Φ(x)
pub fn phi<T: Real>(x: T) -> T {
    let x = x.to_f64().expect("finite scalar");
    T::from_f64(phi_f64(x)).expect("probability representable")
}

/// Two-sided p-value `2Φ(-|x|)`, computed as `erfc(|x|/√2)` to keep
/// precision in the far tail.
pub fn two_sided_p<T: Real>(x: T) -> T {
    let x = x.to_f64().expect("finite scalar").abs();
    T::from_f64(erfc(x / SQRT_2)).expect("probability representable")
}

fn quantile_f64(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    // the series inverse is good to ~1e-10; two Halley steps polish it
    let mut z = -SQRT_2 * erfc_inv(2.0 * p);
    for _ in 0..2 {
        let dens = INV_SQRT_2PI * (-0.5 * z * z).exp();
        if !(dens > 0.0) {
            break;
        }
        let u = (phi_f64(z) - p) / dens;
        z -= u / (1.0 + 0.5 * z * u);
    }
    z
}

/// Φ⁻¹(p) for p in (0, 1).
pub fn phi_inv<T: Real>(p: T) -> T {
    let p = p.to_f64().expect("finite scalar");
    T::from_f64(quantile_f64(p)).expect("quantile representable")
}

/// `z_{t/2} = Φ⁻¹(t/2)`, the (negative) critical value of a two-sided test.
pub fn z_half<T: Real>(t: T) -> T {
    let t = t.to_f64().expect("finite scalar");
    T::from_f64(quantile_f64(0.5 * t)).expect("quantile representable")
}
