//! Adaptive Gauss–Kronrod (7/15) quadrature.

use thiserror::Error;

use crate::Real;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum QuadError {
    #[error("quadrature did not reach tolerance {tol:e} on [{a}, {b}] (error estimate {err:e})")]
    NoConvergence { a: f64, b: f64, tol: f64, err: f64 },
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_DEPTH: u32 = 48;

/// One Kronrod panel: (kronrod estimate, |kronrod - gauss|).
fn panel<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T) -> (T, T) {
    let half = (b - a) / T::lit(2.0);
    let mid = (a + b) / T::lit(2.0);
    let fc = f(mid);
    let mut kron = fc * T::lit(WGK[7]);
    let mut gauss = fc * T::lit(WG[3]);
    for j in 0..7 {
        let dx = half * T::lit(XGK[j]);
        let s = f(mid - dx) + f(mid + dx);
        kron = kron + s * T::lit(WGK[j]);
        if j % 2 == 1 {
            gauss = gauss + s * T::lit(WG[j / 2]);
        }
    }
    (kron * half, ((kron - gauss) * half).abs())
}

fn adapt<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T, tol: T, depth: u32) -> Result<T, QuadError> {
    let (est, err) = panel(f, a, b);
    if err <= tol {
        return Ok(est);
    }
    if depth >= MAX_DEPTH || !est.is_finite() {
        return Err(QuadError::NoConvergence {
            a: a.as_f64(),
            b: b.as_f64(),
            tol: tol.as_f64(),
            err: err.as_f64(),
        });
    }
    let mid = (a + b) / T::lit(2.0);
    let half_tol = tol / T::lit(2.0);
    Ok(adapt(f, a, mid, half_tol, depth + 1)? + adapt(f, mid, b, half_tol, depth + 1)?)
}

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`.
pub fn integrate<T: Real, F: Fn(T) -> T>(f: F, a: T, b: T, tol: T) -> Result<T, QuadError> {
    adapt(&f, a, b, tol, 0)
}

/// Integrates `f` over `[0, ∞)` via the map `x = t / (1 - t)`.
///
/// `f` must decay fast enough that `f(x) (1 + x)^2 → 0`.
pub fn integrate_half_line<T: Real, F: Fn(T) -> T>(f: F, tol: T) -> Result<T, QuadError> {
    let one = T::one();
    let g = |t: T| {
        let s = one - t;
        let v = f(t / s) / (s * s);
        if v.is_finite() {
            v
        } else {
            T::zero()
        }
    };
    adapt(&g, T::zero(), one, tol, 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let v = integrate(|x: f64| x.powi(5) - 3.0 * x, 0.0, 2.0, 1e-13).unwrap();
        assert!((v - (64.0 / 6.0 - 6.0)).abs() < 1e-12);
    }

    #[test]
    fn exponential_half_line() {
        let v = integrate_half_line(|x: f64| (-2.0 * x).exp(), 1e-12).unwrap();
        assert!((v - 0.5).abs() < 1e-11);
        let g = integrate_half_line(|x: f64| x * x * (-x).exp(), 1e-12).unwrap();
        assert!((g - 2.0).abs() < 1e-11);
    }

    #[test]
    fn works_in_single_precision() {
        let v = integrate(|x: f32| x.sin(), 0.0, std::f32::consts::PI, 1e-5).unwrap();
        assert!((v - 2.0).abs() < 1e-5);
    }

    #[test]
    fn non_finite_integrand_fails() {
        let r = integrate(|x: f64| 1.0 / x.abs(), -1.0, 1.0, 1e-10);
        assert!(r.is_err());
    }
}
