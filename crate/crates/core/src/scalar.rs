use std::fmt::{Debug, Display};

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

pub use nalgebra::Complex;

/// Real scalar backing every numerical routine.
///
/// Implemented for `f32` and `f64`. Tolerances and reported residuals are
/// always exchanged as `f64`.
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + Display + Debug + Send + Sync + 'static
{
    /// Converts an `f64` literal. Panics only if the target cannot represent
    /// finite `f64` values, which never happens for the implemented types.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 literal")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn machine_epsilon() -> f64;
}

impl Real for f32 {
    fn machine_epsilon() -> f64 {
        f32::EPSILON as f64
    }
}

impl Real for f64 {
    fn machine_epsilon() -> f64 {
        f64::EPSILON
    }
}

pub(crate) fn c<T: Real>(re: f64, im: f64) -> Complex<T> {
    Complex::new(T::lit(re), T::lit(im))
}

pub(crate) fn czero<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::zero())
}

pub(crate) fn cone<T: Real>() -> Complex<T> {
    Complex::new(T::one(), T::zero())
}

pub(crate) fn creal<T: Real>(x: T) -> Complex<T> {
    Complex::new(x, T::zero())
}

/// `exp(2 pi i k / n)`.
pub fn root_of_unity<T: Real>(k: i64, n: usize) -> Complex<T> {
    let n = n as i64;
    let k = k.rem_euclid(n);
    let theta = 2.0 * std::f64::consts::PI * (k as f64) / (n as f64);
    // exact values at the quarter turns keep Fourier matrices clean
    match (4 * k) % n {
        0 => {
            let q = 4 * k / n;
            match q {
                0 => cone(),
                1 => c(0.0, 1.0),
                2 => c(-1.0, 0.0),
                _ => c(0.0, -1.0),
            }
        }
        _ => c(theta.cos(), theta.sin()),
    }
}

pub(crate) fn abs<T: Real>(z: Complex<T>) -> T {
    z.norm_sqr().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roots_of_unity_are_exact_on_quarter_turns() {
        let i: Complex<f64> = root_of_unity(1, 4);
        assert_eq!(i, Complex::new(0.0, 1.0));
        let m: Complex<f64> = root_of_unity(3, 6);
        assert_eq!(m, Complex::new(-1.0, 0.0));
        let w: Complex<f64> = root_of_unity(1, 3);
        assert!((w.re + 0.5).abs() < 1e-15);
        assert!((abs(w) - 1.0).abs() < 1e-15);
        let neg: Complex<f64> = root_of_unity(-1, 3);
        assert!((neg - w.conj()).norm() < 1e-15);
    }
}
