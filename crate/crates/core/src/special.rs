//! Complex gamma function and Gauss rules.

use core::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{bail, Result};
use crate::prelude::*;

const LANCZOS_G: f64 = 671.0 / 128.0;
const LANCZOS_C0: f64 = 0.999_999_999_999_997_1;
const LANCZOS: [f64; 14] = [
    57.156_235_665_862_92,
    -59.597_960_355_475_49,
    14.136_097_974_741_746,
    -0.491_913_816_097_620_2,
    3.399_464_998_481_189e-5,
    4.652_362_892_704_858e-5,
    -9.837_447_530_487_956e-5,
    1.580_887_032_249_125e-4,
    -2.102_644_417_241_048_8e-4,
    2.174_396_181_152_126_5e-4,
    -1.643_181_065_367_639e-4,
    8.441_822_398_385_275e-5,
    -2.619_083_840_158_140_8e-5,
    3.689_918_265_953_162_5e-6,
];
const SQRT_2PI: f64 = 2.506_628_274_631_000_5;

/// `ln Γ(z)` for `Re z >= 1/2` (any branch; callers exponentiate).
fn ln_gamma_right(z: Complex64) -> Complex64 {
    let tmp = z + LANCZOS_G;
    let mut ser = Complex64::new(LANCZOS_C0, 0.0);
    let mut y = z;
    for c in LANCZOS {
        y += 1.0;
        ser += c / y;
    }
    (z + 0.5) * tmp.ln() - tmp + (ser * SQRT_2PI / z).ln()
}

/// `Γ(z)`; infinite at the poles.
pub fn gamma(z: Complex64) -> Complex64 {
    if z.re >= 0.5 {
        ln_gamma_right(z).exp()
    } else {
        let s = (z * PI).sin();
        Complex64::new(PI, 0.0) / (s * ln_gamma_right(1.0 - z).exp())
    }
}

/// `1 / Γ(z)`, an entire function.
pub fn recip_gamma(z: Complex64) -> Complex64 {
    if z.re >= 0.5 {
        (-ln_gamma_right(z)).exp()
    } else {
        (z * PI).sin() * ln_gamma_right(1.0 - z).exp() / PI
    }
}

/// `γ_k(z) = Γ(k) / (Γ(z) Γ(k - z))` for `0 < Re z < k`.
pub fn gamma_k(z: Complex64, k: u32) -> Result<Complex64> {
    if !(z.re > 0.0) || !(f64::from(k) > z.re) || !z.im.is_finite() {
        bail!(InvalidParameter, "gamma_k needs 0 < Re z < k, got z = {z}, k = {k}");
    }
    let kc = Complex64::new(f64::from(k), 0.0);
    let lg_k: f64 = (1..k).map(|j| f64::from(j).ln()).sum();
    Ok(recip_gamma(z) * recip_gamma(kc - z) * lg_k.exp())
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j + 1) as f64 * z * p2 - j as f64 * p3) / (j + 1) as f64;
            }
            pp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let dz = p1 / pp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Gauss–Legendre rule mapped to `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    (x.iter().map(|t| c + h * t).collect(), w.iter().map(|t| h * t).collect())
}

/// `L_n(x)` and `L_{n-1}(x)` with a running power-of-two scale, returned as
/// `(L_n, L_{n-1}, log_scale)` where the true values are multiplied by
/// `exp(log_scale)`.
fn laguerre_scaled(n: usize, x: f64) -> (f64, f64, f64) {
    let (mut p1, mut p2) = (1.0f64, 0.0f64);
    let mut log_scale = 0.0;
    for j in 0..n {
        let p3 = p2;
        p2 = p1;
        p1 = ((2 * j + 1) as f64 - x) * p2 / (j + 1) as f64 - j as f64 * p3 / (j + 1) as f64;
        if p1.abs() > 1e150 {
            p1 *= 1e-150;
            p2 *= 1e-150;
            log_scale += 150.0 * core::f64::consts::LN_10;
        }
    }
    (p1, p2, log_scale)
}

/// Gauss–Laguerre rule for `∫_0^∞ f(v) dv`, returned as nodes `v_i` and
/// *scaled* weights `w_i e^{v_i}` so that `Σ W_i f(v_i)` approximates the
/// integral directly. Nodes come from the Jacobi matrix and are polished by
/// Newton steps on the three-term recurrence.
pub fn gauss_laguerre_scaled(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        bail!(InvalidParameter, "Gauss–Laguerre needs at least one node");
    }
    let jac = DMatrix::<f64>::from_fn(n, n, |i, j| {
        if i == j {
            (2 * i + 1) as f64
        } else if i + 1 == j {
            j as f64
        } else if j + 1 == i {
            i as f64
        } else {
            0.0
        }
    });
    let mut nodes: Vec<f64> = SymmetricEigen::new(jac).eigenvalues.iter().copied().collect();
    nodes.sort_by(|a, b| a.total_cmp(b));
    let mut weights = Vec::with_capacity(n);
    for x in nodes.iter_mut() {
        for _ in 0..20 {
            let (ln, lnm1, _) = laguerre_scaled(n, *x);
            let d = ln - lnm1;
            if d == 0.0 {
                break;
            }
            let dx = *x * ln / (n as f64 * d);
            *x -= dx;
            if dx.abs() <= 4.0 * f64::EPSILON * x.abs() {
                break;
            }
        }
        let (lnp1, _, s) = laguerre_scaled(n + 1, *x);
        // w e^x = x / ((n+1)^2 L_{n+1}(x)^2) e^x
        let log_w = x.ln() - 2.0 * ((n + 1) as f64).ln() - 2.0 * (lnp1.abs().ln() + s) + *x;
        weights.push(log_w.exp());
    }
    if nodes.iter().any(|v| !(v.is_finite() && *v > 0.0)) || weights.iter().any(|w| !w.is_finite()) {
        bail!(NumericalFailure, "Gauss–Laguerre rule with {n} nodes failed");
    }
    Ok((nodes, weights))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_known_values() {
        let g = gamma(Complex64::new(0.5, 0.0));
        assert!((g.re - PI.sqrt()).abs() < 1e-14);
        let g = gamma(Complex64::new(5.0, 0.0));
        assert!((g.re - 24.0).abs() < 1e-12);
        let g = gamma(Complex64::new(-0.5, 0.0));
        assert!((g.re + 2.0 * PI.sqrt()).abs() < 1e-13);
        // |Γ(i)|^2 = π / sinh π
        let g = gamma(Complex64::new(0.0, 1.0));
        assert!((g.norm_sqr() - PI / PI.sinh()).abs() < 1e-14);
    }

    #[test]
    fn gamma_recurrence_in_the_plane() {
        for &(re, im) in &[(0.3, 2.0), (1.7, -4.5), (7.2, 0.4), (-2.3, 1.1), (12.5, 6.0)] {
            let z = Complex64::new(re, im);
            let lhs = gamma(z + 1.0);
            let rhs = z * gamma(z);
            assert!((lhs - rhs).norm() <= 1e-13 * lhs.norm(), "z = {z}");
        }
    }

    #[test]
    fn laguerre_rule_integrates_polynomials() {
        let (v, w) = gauss_laguerre_scaled(120).unwrap();
        // ∫ v^k e^{-v} = k!
        for k in 0..12u32 {
            let s: f64 = v.iter().zip(&w).map(|(x, wi)| wi * (-x).exp() * x.powi(k as i32)).sum();
            let fact: f64 = (1..=k).map(f64::from).product();
            assert!((s - fact).abs() <= 1e-12 * fact, "k = {k}: {s} vs {fact}");
        }
        // ∫ e^{-v} / (1 + v) = e E_1(1)
        let s: f64 = v.iter().zip(&w).map(|(x, wi)| wi * (-x).exp() / (1.0 + x)).sum();
        assert!((s - 0.596_347_362_323_194_1).abs() < 1e-12);
    }

    #[test]
    fn legendre_rule_is_exact_for_high_degree() {
        let (x, w) = gauss_legendre_on(64, 2.0, 3.0);
        let s: f64 = x.iter().zip(&w).map(|(t, wi)| wi * t.powi(20)).sum();
        let exact = (3f64.powi(21) - 2f64.powi(21)) / 21.0;
        assert!((s - exact).abs() < 1e-12 * exact);
    }
}
