//! Floating-point snapshots of expressions for repeated evaluation.

use super::expr::SymExpr;
use super::poly::{coeff_to_c64, Poly};
use super::registry::Var;
use crate::error::{bail, Result};
use crate::prelude::*;

#[derive(Clone, Debug)]
struct CPoly {
    terms: Vec<(Complex64, Vec<(usize, i32)>)>,
}

impl CPoly {
    fn new(p: &Poly) -> Self {
        let terms = p
            .terms()
            .map(|(m, c)| {
                let pows =
                    m.0.iter()
                        .enumerate()
                        .filter(|(_, &e)| e > 0)
                        .map(|(v, &e)| (v, e as i32))
                        .collect();
                (coeff_to_c64(c), pows)
            })
            .collect();
        CPoly { terms }
    }

    fn eval(&self, vars: &[f64]) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (c, pows) in &self.terms {
            let mut m = 1.0;
            for &(v, e) in pows {
                m *= vars[v].powi(e);
            }
            acc += c * m;
        }
        acc
    }

    /// Coefficients in `var` after fixing every other variable.
    fn collect_in(&self, vars: &[f64], var: usize) -> Vec<Complex64> {
        let mut out: Vec<Complex64> = Vec::new();
        for (c, pows) in &self.terms {
            let mut m = 1.0;
            let mut deg = 0usize;
            for &(v, e) in pows {
                if v == var {
                    deg = e as usize;
                } else {
                    m *= vars[v].powi(e);
                }
            }
            if out.len() <= deg {
                out.resize(deg + 1, Complex64::new(0.0, 0.0));
            }
            out[deg] += c * m;
        }
        out
    }
}

#[derive(Clone, Debug)]
struct CPart {
    num: CPoly,
    exps: Vec<(usize, f64)>,
    exp: bool,
}

/// Expression compiled to `f64` arithmetic.
#[derive(Clone, Debug)]
pub struct Compiled {
    nvars: usize,
    bases: Vec<CPoly>,
    base_names: Vec<String>,
    exp: Option<(usize, Box<Compiled>)>,
    parts: Vec<CPart>,
}

impl Compiled {
    pub fn new(e: &SymExpr) -> Self {
        let reg = e.registry();
        let parts = e
            .raw()
            .parts
            .iter()
            .map(|(k, p)| CPart {
                num: CPoly::new(&p.num),
                exps: k
                    .frac
                    .iter()
                    .zip(&p.den)
                    .enumerate()
                    .filter_map(|(i, (f, &d))| {
                        use num_traits::ToPrimitive;
                        let v = f.to_f64().unwrap_or(0.0) - d as f64;
                        (v != 0.0).then_some((i, v))
                    })
                    .collect(),
                exp: k.exp,
            })
            .collect();
        let exp = reg.exp_atom().filter(|_| e.has_exp()).map(|atom| {
            let arg = SymExpr::from_raw(reg, atom.arg.clone());
            (atom.param.0, Box::new(Compiled::new(&arg)))
        });
        Compiled {
            nvars: reg.nvars(),
            bases: reg.bases().iter().map(|b| CPoly::new(&b.poly)).collect(),
            base_names: reg.bases().iter().map(|b| b.name.clone()).collect(),
            exp,
            parts,
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn eval(&self, vars: &[f64]) -> Result<Complex64> {
        let mut bvals = vec![f64::NAN; self.bases.len()];
        let mut exp_val = Complex64::new(1.0, 0.0);
        if let Some((t, arg)) = &self.exp {
            exp_val = (-arg.eval(vars)? * vars[*t]).exp();
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for part in &self.parts {
            let mut v = part.num.eval(vars);
            for &(i, e) in &part.exps {
                if bvals[i].is_nan() {
                    bvals[i] = self.bases[i].eval(vars).re;
                }
                let b = bvals[i];
                if !(b > 0.0) {
                    bail!(
                        DomainViolation,
                        "base `{}` is {b} (not positive) at {vars:?}",
                        self.base_names[i]
                    );
                }
                v *= if e.fract() == 0.0 { b.powi(e as i32) } else { b.powf(e) };
            }
            if part.exp {
                v *= exp_val;
            }
            acc += v;
        }
        Ok(acc)
    }

    /// Restricts to a function of a single variable with all others fixed.
    /// The exponential atom is not supported here.
    pub fn specialize(&self, vars: &[f64], var: Var) -> Result<Univariate> {
        if self.exp.is_some() {
            bail!(
                UnsupportedOperation,
                "specialization of expressions with the exponential atom"
            );
        }
        let bases: Vec<Vec<f64>> = self
            .bases
            .iter()
            .map(|b| b.collect_in(vars, var.0).iter().map(|c| c.re).collect())
            .collect();
        let parts = self
            .parts
            .iter()
            .map(|p| (p.num.collect_in(vars, var.0), p.exps.clone()))
            .collect();
        Ok(Univariate {
            bases,
            names: self.base_names.clone(),
            parts,
        })
    }
}

/// A compiled expression restricted to one real variable.
#[derive(Clone, Debug)]
pub struct Univariate {
    bases: Vec<Vec<f64>>,
    names: Vec<String>,
    parts: Vec<(Vec<Complex64>, Vec<(usize, f64)>)>,
}

fn horner_re(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * x + a)
}

fn horner_c(c: &[Complex64], x: f64) -> Complex64 {
    c.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &a| acc * x + a)
}

impl Univariate {
    /// Numerator coefficients (by power) and base exponents of every part.
    pub fn parts(&self) -> impl Iterator<Item = (&[Complex64], &[(usize, f64)])> {
        self.parts.iter().map(|(n, e)| (n.as_slice(), e.as_slice()))
    }

    /// Coefficients of base `i` as a polynomial in the free variable.
    pub fn base_coeffs(&self, i: usize) -> &[f64] {
        &self.bases[i]
    }

    pub fn eval(&self, x: f64) -> Result<Complex64> {
        let mut acc = Complex64::new(0.0, 0.0);
        for (num, exps) in &self.parts {
            let mut v = horner_c(num, x);
            for &(i, e) in exps {
                let b = horner_re(&self.bases[i], x);
                if !(b > 0.0) {
                    bail!(DomainViolation, "base `{}` is {b} (not positive) at {x}", self.names[i]);
                }
                v *= if e.fract() == 0.0 { b.powi(e as i32) } else { b.powf(e) };
            }
            acc += v;
        }
        Ok(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symalg::Registry;

    #[test]
    fn compiled_matches_exact_evaluation() {
        let reg = Registry::builder(1)
            .param("lambda")
            .unwrap()
            .base("a", "1+x^2+xi^2")
            .unwrap()
            .base("al", "1+x^2+xi^2+lambda")
            .unwrap()
            .build()
            .unwrap();
        let e = SymExpr::parse(&reg, "x*a^(-1/2) + (2+i)*lambda^2*al^(-3) - xi*al^(1/4)").unwrap();
        let c = Compiled::new(&e);
        let vars = [0.3, -1.2, 2.5];
        let d = c.eval(&vars).unwrap() - e.eval_vars(&vars).unwrap();
        assert!(d.norm() < 1e-14);
        let u = c.specialize(&vars, reg.param("lambda").unwrap()).unwrap();
        assert!((u.eval(2.5).unwrap() - e.eval_vars(&vars).unwrap()).norm() < 1e-13);
    }
}
