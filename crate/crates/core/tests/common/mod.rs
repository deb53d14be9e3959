#![allow(dead_code)]

use std::sync::Arc;

use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;
use weylcalc::fsring::FormalSeries;
use weylcalc::symalg::poly::{Coeff, Monomial, Poly};
use weylcalc::{Registry, SymExpr};

pub fn c(re: i64, im: i64, den: i64) -> Coeff {
    Complex::new(
        BigRational::new(re.into(), den.into()),
        BigRational::new(im.into(), den.into()),
    )
}

pub fn osc_registry() -> Arc<Registry> {
    Registry::builder(1)
        .param("lambda")
        .unwrap()
        .param("mu")
        .unwrap()
        .base("a", "1 + x^2 + xi^2")
        .unwrap()
        .base("al", "1 + x^2 + xi^2 + lambda")
        .unwrap()
        .base("am", "1 + x^2 + xi^2 + mu")
        .unwrap()
        .build()
        .unwrap()
}

pub fn ex(reg: &Arc<Registry>, s: &str) -> SymExpr {
    SymExpr::parse(reg, s).unwrap()
}

/// Sharp product by summing over ordered sequences of elementary pairings.
/// Each step either puts `∂_{ξ_i}` on the left factor and `D_{x_i}` on the
/// right, or `D_{x_i}` on the left and `∂_{ξ_i}` on the right with a sign;
/// a length-`l` sequence carries weight `1/(l! 2^l)`.
pub fn naive_sharp(a: &[SymExpr], b: &[SymExpr], n: usize) -> Vec<SymExpr> {
    let reg = a[0].registry().clone();
    let d = reg.dim();
    let minus_i = c(0, -1, 1);
    fn walk(fa: &SymExpr, fb: &SymExpr, steps: u32, d: usize, minus_i: &Coeff, acc: &mut SymExpr) {
        if fa.is_zero() || fb.is_zero() {
            return;
        }
        if steps == 0 {
            *acc = &*acc + &fa.mul(fb).unwrap();
            return;
        }
        let reg = fa.registry().clone();
        for i in 0..d {
            let a1 = fa.derivative(reg.xi(i));
            let b1 = fb.derivative(reg.x(i)).scale(minus_i);
            walk(&a1, &b1, steps - 1, d, minus_i, acc);
            let a2 = fa.derivative(reg.x(i)).scale(minus_i).scale(&c(-1, 0, 1));
            let b2 = fb.derivative(reg.xi(i));
            walk(&a2, &b2, steps - 1, d, minus_i, acc);
        }
    }
    let mut out = Vec::new();
    for j in 0..n {
        let mut cj = SymExpr::zero(&reg);
        for s in 0..=j {
            for k in 0..=(j - s) {
                let l = (j - s - k) as u32;
                let mut acc = SymExpr::zero(&reg);
                walk(&a[s], &b[k], l, d, &minus_i, &mut acc);
                let mut w: i64 = 1;
                for t in 1..=l {
                    w *= 2 * t as i64;
                }
                cj = &cj + &acc.scale(&c(1, 0, w));
            }
        }
        out.push(cj);
    }
    out
}

/// Random real polynomial of degree <= `deg` in the phase variables.
pub fn poly_strategy(reg: Arc<Registry>, deg: u32) -> impl Strategy<Value = SymExpr> {
    let nphase = 2 * reg.dim();
    let nv = reg.nvars();
    prop::collection::vec((prop::collection::vec(0u32..=deg, nphase), -3i64..=3), 0..5).prop_map(move |terms| {
        let mut p = Poly::zero(nv);
        for (mut m, k) in terms {
            while m.iter().sum::<u32>() > deg {
                let i = m.iter().position(|&e| e > 0).unwrap();
                m[i] -= 1;
            }
            m.resize(nv, 0);
            p = p.add(&Poly::monomial(Monomial(m), c(k, 0, 1)));
        }
        SymExpr::poly(&reg, p)
    })
}

pub fn series_strategy(reg: Arc<Registry>, deg: u32, n: usize) -> impl Strategy<Value = FormalSeries> {
    prop::collection::vec(poly_strategy(reg, deg), n).prop_map(|t| FormalSeries::new(t).unwrap())
}

pub fn is_one(c: &Coeff) -> bool {
    c.re.is_one() && c.im.is_zero()
}
