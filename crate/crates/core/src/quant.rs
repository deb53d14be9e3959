//! Weyl quantization in the Hermite basis of `L^2(R)`.

use core::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::cpow::{nested_trapezoid, QuadResult, QuadValue, QuadratureScheme};
use crate::error::{bail, Result};
use crate::prelude::*;
use crate::special::{gamma_k, gauss_laguerre_scaled};
use crate::symalg::poly::coeff_to_c64;
use crate::symalg::SymExpr;

pub type CMatrix = DMatrix<Complex64>;

const HERMITIAN_TOL: f64 = 1e-10;

/// Finite section of a Weyl operator in the Hermite basis.
#[derive(Clone, Debug, PartialEq)]
pub struct HermiteOperator {
    matrix: CMatrix,
    n_pad: usize,
    hermitian: bool,
}

fn adjoint_defect(m: &CMatrix) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

impl HermiteOperator {
    pub fn new(matrix: CMatrix, n_pad: usize) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() == 0 {
            bail!(
                InvalidInput,
                "operator matrix must be square and non-empty, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            );
        }
        let scale = matrix.iter().map(|c| c.norm()).fold(1.0, f64::max);
        let hermitian = adjoint_defect(&matrix) <= HERMITIAN_TOL * scale;
        Ok(HermiteOperator {
            n_pad: n_pad.max(matrix.nrows()),
            matrix,
            hermitian,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![Complex64::new(1.0, 0.0); n])
    }

    pub fn diagonal(values: &[Complex64]) -> Self {
        let m = CMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(values));
        Self::new(m, values.len()).expect("diagonal of non-empty input")
    }

    pub fn n_basis(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn n_pad(&self) -> usize {
        self.n_pad
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.matrix[(i, j)]
    }

    pub fn adjoint_defect(&self) -> f64 {
        adjoint_defect(&self.matrix)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Self::new(&self.matrix * &other.matrix, self.n_pad.max(other.n_pad))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Self::new(&self.matrix + &other.matrix, self.n_pad.max(other.n_pad))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Self::new(&self.matrix - &other.matrix, self.n_pad.max(other.n_pad))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self::new(&self.matrix * c, self.n_pad).expect("same shape")
    }

    /// Leading `n x n` block.
    pub fn crop(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.n_basis() {
            bail!(InvalidParameter, "cannot crop {} states to {n}", self.n_basis());
        }
        Self::new(self.matrix.view((0, 0), (n, n)).into_owned(), self.n_pad)
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.n_basis() != other.n_basis() {
            bail!(
                InvalidInput,
                "basis sizes differ: {} vs {}",
                self.n_basis(),
                other.n_basis()
            );
        }
        Ok(())
    }

    /// Entries in row-major order.
    pub fn to_row_major(&self) -> Vec<Complex64> {
        let n = self.n_basis();
        (0..n * n).map(|k| self.matrix[(k / n, k % n)]).collect()
    }

    pub fn from_row_major(n: usize, data: &[Complex64], n_pad: usize) -> Result<Self> {
        if data.len() != n * n {
            bail!(
                InvalidInput,
                "expected {} entries for dimension {n}, got {}",
                n * n,
                data.len()
            );
        }
        Self::new(CMatrix::from_row_slice(n, n, data), n_pad)
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_same(other)?;
        Ok((&self.matrix - &other.matrix)
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max))
    }
}

/// `X = (a + a†)/√2` on the first `n` Hermite functions.
pub fn position_matrix(n: usize) -> CMatrix {
    let mut m = CMatrix::zeros(n, n);
    for k in 0..n.saturating_sub(1) {
        let v = Complex64::new(((k + 1) as f64 / 2.0).sqrt(), 0.0);
        m[(k, k + 1)] = v;
        m[(k + 1, k)] = v;
    }
    m
}

/// `P = -i d/dx = i(a† - a)/√2` on the first `n` Hermite functions.
pub fn momentum_matrix(n: usize) -> CMatrix {
    let mut m = CMatrix::zeros(n, n);
    for k in 0..n.saturating_sub(1) {
        let v = ((k + 1) as f64 / 2.0).sqrt();
        m[(k + 1, k)] = Complex64::new(0.0, v);
        m[(k, k + 1)] = Complex64::new(0.0, -v);
    }
    m
}

pub const MAX_POLY_DEGREE: u32 = 10;

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
}

/// Weyl quantization of a polynomial symbol in `(x, ξ)`, `d = 1`.
///
/// Each monomial uses `Op(x^m ξ^n) = 2^{-m} Σ_k C(m,k) X^k P^n X^{m-k}`,
/// built on `max(n_pad, n_basis + 2 deg)` states and cropped.
pub fn quantize_poly(sigma: &SymExpr, n_basis: usize, n_pad: Option<usize>) -> Result<HermiteOperator> {
    let reg = sigma.registry();
    if reg.dim() != 1 {
        bail!(UnsupportedSymbol, "quantization is implemented for d = 1 only");
    }
    if n_basis == 0 {
        bail!(InvalidParameter, "n_basis must be positive");
    }
    let Some(poly) = sigma.as_poly() else {
        bail!(UnsupportedSymbol, "`{sigma}` is not a polynomial");
    };
    if (2..poly.nvars()).any(|v| poly.degree_in(v) > 0) {
        bail!(UnsupportedSymbol, "symbol depends on parameters");
    }
    let deg = poly.degree();
    if deg > MAX_POLY_DEGREE {
        bail!(UnsupportedSymbol, "degree {deg} exceeds {MAX_POLY_DEGREE}");
    }
    let pad = n_pad.unwrap_or(0).max(n_basis + 2 * deg as usize);
    let x = position_matrix(pad);
    let p = momentum_matrix(pad);
    let mut xp = vec![CMatrix::identity(pad, pad)];
    let mut pp = vec![CMatrix::identity(pad, pad)];
    for k in 1..=deg as usize {
        xp.push(&xp[k - 1] * &x);
        pp.push(&pp[k - 1] * &p);
    }
    let mut acc = CMatrix::zeros(pad, pad);
    for (mono, c) in poly.terms() {
        let (m, n) = (mono.0[0], mono.0[1]);
        let c = coeff_to_c64(c) * 0.5f64.powi(m as i32);
        let mut term = CMatrix::zeros(pad, pad);
        for k in 0..=m {
            let inner = &pp[n as usize] * &xp[(m - k) as usize];
            term += (&xp[k as usize] * inner) * Complex64::new(binomial(m, k), 0.0);
        }
        acc += term * c;
    }
    HermiteOperator::new(acc.view((0, 0), (n_basis, n_basis)).into_owned(), pad)
}

/// Node counts of the phase-space quadrature behind [`quantize_general`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QuantConfig {
    /// Gauss–Laguerre nodes in `v = r^2`.
    pub radial: usize,
    /// Equispaced angles.
    pub angular: usize,
}

impl QuantConfig {
    pub fn for_basis(n_basis: usize) -> Self {
        QuantConfig {
            radial: 4 * n_basis,
            angular: 4 * n_basis,
        }
    }
}

/// Polar phase-space grid carrying the Laguerre closed form of the
/// cross-Wigner functions.
#[derive(Clone, Debug)]
pub struct QuantGrid {
    n_basis: usize,
    v: Vec<f64>,
    weights: Vec<f64>,
    angular: usize,
    window: f64,
}

/// Tail weight above which [`QuantGrid::quantize`] raises its warning.
pub const TAIL_TOLERANCE: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct Quantized {
    pub op: HermiteOperator,
    /// Largest entry contributed by nodes outside radius `√(2 n_basis) + 8`,
    /// relative to the largest entry.
    pub tail: f64,
    pub warning: bool,
}

impl QuantGrid {
    pub fn new(n_basis: usize, cfg: QuantConfig) -> Result<Self> {
        if n_basis == 0 {
            bail!(InvalidParameter, "n_basis must be positive");
        }
        if cfg.angular < 2 * n_basis {
            bail!(
                InvalidParameter,
                "need at least {} angles for {n_basis} states",
                2 * n_basis
            );
        }
        let (v, weights) = gauss_laguerre_scaled(cfg.radial)?;
        let window = (2.0 * n_basis as f64).sqrt() + 8.0;
        Ok(QuantGrid {
            n_basis,
            v,
            weights,
            angular: cfg.angular,
            window,
        })
    }

    pub fn n_basis(&self) -> usize {
        self.n_basis
    }

    /// Nodes `(x, ξ)`, radius-major.
    pub fn points(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(self.v.len() * self.angular);
        for &v in &self.v {
            let r = v.sqrt();
            for l in 0..self.angular {
                let th = 2.0 * PI * l as f64 / self.angular as f64;
                out.push((r * th.cos(), r * th.sin()));
            }
        }
        out
    }

    /// `A_{mn} = (-1)^{min(m,n)} ∫_0^∞ ℓ_{min}^{(|m-n|)}(2v) σ̂_{m-n}(√v) dv` with
    /// `σ̂_j(r) = (2π)^{-1} ∫ σ(r cos θ, r sin θ) e^{ijθ} dθ` and `ℓ` the
    /// normalised Laguerre functions.
    pub fn quantize(&self, values: &[Complex64]) -> Result<Quantized> {
        let (nr, na, n) = (self.v.len(), self.angular, self.n_basis);
        if values.len() != nr * na {
            bail!(InvalidInput, "expected {} symbol values, got {}", nr * na, values.len());
        }
        if let Some(k) = values.iter().position(|c| !(c.re.is_finite() && c.im.is_finite())) {
            bail!(NumericalFailure, "symbol value {k} is not finite");
        }
        let twiddle: Vec<Complex64> = (0..na)
            .map(|l| Complex64::from_polar(1.0, 2.0 * PI * l as f64 / na as f64))
            .collect();
        let mut inner = CMatrix::zeros(n, n);
        let mut tail = CMatrix::zeros(n, n);
        let mut hat = vec![Complex64::new(0.0, 0.0); 2 * n - 1];
        let mut ell = vec![0.0; n];
        for (i, &v) in self.v.iter().enumerate() {
            let row = &values[i * na..(i + 1) * na];
            for (jj, h) in hat.iter_mut().enumerate() {
                let j = jj as i64 - (n as i64 - 1);
                let mut s = Complex64::new(0.0, 0.0);
                for (l, val) in row.iter().enumerate() {
                    s += val * twiddle[(j.rem_euclid(na as i64) as usize * l) % na];
                }
                *h = s / na as f64;
            }
            let target = if v.sqrt() > self.window { &mut tail } else { &mut inner };
            let y = 2.0 * v;
            for k in 0..n {
                laguerre_functions(k, y, &mut ell[..n - k]);
                for lo in 0..n - k {
                    let sign = if lo % 2 == 0 { 1.0 } else { -1.0 };
                    let f = sign * self.weights[i] * ell[lo];
                    if f == 0.0 {
                        continue;
                    }
                    target[(lo + k, lo)] += hat[n - 1 + k] * f;
                    if k > 0 {
                        target[(lo, lo + k)] += hat[n - 1 - k] * f;
                    }
                }
            }
        }
        let total = &inner + &tail;
        let scale = total.iter().map(|c| c.norm()).fold(f64::MIN_POSITIVE, f64::max);
        let tail_rel = tail.iter().map(|c| c.norm()).fold(0.0, f64::max) / scale;
        Ok(Quantized {
            op: HermiteOperator::new(total, n)?,
            tail: tail_rel,
            warning: tail_rel > TAIL_TOLERANCE,
        })
    }
}

/// `ℓ_n^{(k)}(y) = √(n!/(n+k)!) y^{k/2} e^{-y/2} L_n^{(k)}(y)` for `n < out.len()`.
pub fn laguerre_functions(k: usize, y: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    let kf = k as f64;
    let ln_kfact: f64 = (1..=k).map(|i| (i as f64).ln()).sum();
    out[0] = if y == 0.0 {
        if k == 0 {
            1.0
        } else {
            0.0
        }
    } else {
        (0.5 * kf * y.ln() - 0.5 * y - 0.5 * ln_kfact).exp()
    };
    if out.len() > 1 {
        out[1] = (1.0 + kf - y) * (1.0 / (1.0 + kf)).sqrt() * out[0];
    }
    for m in 1..out.len().saturating_sub(1) {
        let mf = m as f64;
        let a = (2.0 * mf + 1.0 + kf - y) * ((mf + 1.0) / (mf + kf + 1.0)).sqrt();
        let b = (mf + kf) * (mf * (mf + 1.0) / ((mf + kf) * (mf + kf + 1.0))).sqrt();
        out[m + 1] = (a * out[m] - b * out[m - 1]) / (mf + 1.0);
    }
}

/// Weyl quantization of a sampled symbol through [`QuantGrid`].
pub fn quantize_general(
    sigma: &mut dyn FnMut(f64, f64) -> Result<Complex64>,
    n_basis: usize,
    cfg: QuantConfig,
) -> Result<Quantized> {
    let grid = QuantGrid::new(n_basis, cfg)?;
    let values = grid
        .points()
        .into_iter()
        .map(|(x, xi)| sigma(x, xi))
        .collect::<Result<Vec<_>>>()?;
    grid.quantize(&values)
}

/// `f(A)` through the Hermitian eigendecomposition.
pub fn matrix_function(a: &HermiteOperator, f: &dyn Fn(f64) -> Complex64) -> Result<HermiteOperator> {
    if !a.is_hermitian() {
        bail!(InvalidInput, "functional calculus needs a Hermitian operator");
    }
    let m = a.matrix();
    let sym = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(sym);
    let vals: Vec<Complex64> = eig.eigenvalues.iter().map(|&l| f(l)).collect();
    if vals.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
        bail!(NumericalFailure, "function is not finite on the spectrum");
    }
    let v = &eig.eigenvectors;
    let mut scaled = v.clone();
    for (j, &fv) in vals.iter().enumerate() {
        scaled.column_mut(j).scale_mut(fv.re);
        if fv.im != 0.0 {
            let col = v.column(j) * Complex64::new(0.0, fv.im);
            let mut c = scaled.column_mut(j);
            c += col;
        }
    }
    HermiteOperator::new(scaled * v.adjoint(), a.n_pad())
}

/// Eigenvalues of a Hermitian operator, ascending.
pub fn eigenvalues(a: &HermiteOperator) -> Result<Vec<f64>> {
    if !a.is_hermitian() {
        bail!(InvalidInput, "eigenvalues need a Hermitian operator");
    }
    let m = a.matrix();
    let sym = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let mut ev: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    Ok(ev)
}

impl QuadValue for CMatrix {
    fn add_assign(&mut self, other: &Self) {
        *self += other;
    }

    fn scaled(&self, h: f64) -> Self {
        self * Complex64::new(h, 0.0)
    }

    fn size(&self) -> f64 {
        self.norm()
    }
}

/// `γ_k(z) ∫_0^∞ λ^{z-1} (A (A + λ)^{-1})^k dλ` with one LU solve per node.
pub fn balakrishnan_matrix(
    a: &HermiteOperator,
    z: Complex64,
    k: u32,
    quad: &QuadratureScheme,
) -> Result<(HermiteOperator, QuadResult)> {
    let gamma = gamma_k(z, k)?;
    let n = a.n_basis();
    let m = a.matrix();
    let id = CMatrix::identity(n, n);
    let (value, info) = nested_trapezoid(quad, |u| {
        let (ll, jac) = quad.map(u);
        // for λ > 1 use A(A+λ)^{-1} = μA(1+μA)^{-1}, μ = 1/λ
        let (shifted, prefactor) = if ll <= 0.0 {
            (m + &id * Complex64::new(ll.exp(), 0.0), (z * ll).exp() * jac)
        } else {
            (
                &id + m * Complex64::new((-ll).exp(), 0.0),
                ((z - f64::from(k)) * ll).exp() * jac,
            )
        };
        if prefactor == Complex64::new(0.0, 0.0) {
            return Ok(CMatrix::zeros(n, n));
        }
        let Some(res) = shifted.lu().solve(m) else {
            bail!(NumericalFailure, "singular resolvent at ln λ = {ll}");
        };
        let mut pw = res.clone();
        for _ in 1..k {
            pw = &pw * &res;
        }
        Ok(pw * prefactor)
    })?;
    let op = HermiteOperator::new(value * gamma, a.n_pad())?;
    Ok((
        op,
        QuadResult {
            value: gamma,
            error: info.error * gamma.norm(),
            ..info
        },
    ))
}

/// Comparison of two finite sections on a range of states.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralReport {
    /// Compared states `lo..hi`.
    pub states: (usize, usize),
    /// `‖(A - B) e_n‖ / ‖A e_n‖` for each compared state.
    pub errors: Vec<f64>,
    /// Operator norm of `A - B` on the compared block.
    pub block_norm: f64,
    /// `block_norm` over the operator norm of `A` on the block.
    pub relative_block_norm: f64,
    pub metadata: BTreeMap<String, String>,
}

impl SpectralReport {
    pub fn max_error(&self) -> f64 {
        self.errors.iter().copied().fold(0.0, f64::max)
    }

    pub fn median_error(&self) -> f64 {
        let mut e = self.errors.clone();
        e.sort_by(|a, b| a.total_cmp(b));
        let n = e.len();
        if n == 0 {
            0.0
        } else if n % 2 == 1 {
            e[n / 2]
        } else {
            0.5 * (e[n / 2 - 1] + e[n / 2])
        }
    }

    pub fn with_meta(mut self, key: &str, value: impl ToString) -> Self {
        self.metadata.insert(key.to_string(), value.to_string());
        self
    }
}

fn spectral_norm(m: &CMatrix) -> f64 {
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .fold(0.0, f64::max)
}

/// Per-state and block discrepancies of `B` against the reference `A`.
pub fn spectral_compare(a: &HermiteOperator, b: &HermiteOperator, states: (usize, usize)) -> Result<SpectralReport> {
    let n = a.n_basis();
    if b.n_basis() != n {
        bail!(InvalidInput, "basis sizes differ: {n} vs {}", b.n_basis());
    }
    let (lo, hi) = states;
    if !(lo < hi && hi <= n) {
        bail!(InvalidParameter, "state range {lo}..{hi} not within 0..{n}");
    }
    let diff = a.matrix() - b.matrix();
    let mut errors = Vec::with_capacity(hi - lo);
    for s in lo..hi {
        let den = a.matrix().column(s).norm();
        let num = diff.column(s).norm();
        errors.push(if den == 0.0 {
            if num == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            num / den
        });
    }
    let block = diff.view((lo, lo), (hi - lo, hi - lo)).into_owned();
    let ablock = a.matrix().view((lo, lo), (hi - lo, hi - lo)).into_owned();
    let block_norm = spectral_norm(&block);
    let an = spectral_norm(&ablock);
    let relative_block_norm = if an == 0.0 { block_norm } else { block_norm / an };
    Ok(SpectralReport {
        states,
        errors,
        block_norm,
        relative_block_norm,
        metadata: BTreeMap::new(),
    })
}
