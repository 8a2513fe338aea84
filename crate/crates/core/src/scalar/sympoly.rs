use num_rational::BigRational;
use num_traits::{One, Zero};
use std::collections::BTreeMap;
use std::fmt;

/// Laurent polynomial over `Q` in a fixed number of formal symbols.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymPoly {
    nvars: usize,
    t: BTreeMap<Vec<i32>, BigRational>,
}

impl SymPoly {
    pub fn zero(nvars: usize) -> Self {
        SymPoly { nvars, t: BTreeMap::new() }
    }
    pub fn constant(nvars: usize, r: BigRational) -> Self {
        let mut t = BTreeMap::new();
        if !r.is_zero() {
            t.insert(vec![0; nvars], r);
        }
        SymPoly { nvars, t }
    }
    pub fn one(nvars: usize) -> Self {
        Self::constant(nvars, BigRational::one())
    }
    /// `c · Π x_i^{e_i}`.
    pub fn monomial(c: BigRational, exps: Vec<i32>) -> Self {
        let nvars = exps.len();
        let mut t = BTreeMap::new();
        if !c.is_zero() {
            t.insert(exps, c);
        }
        SymPoly { nvars, t }
    }
    /// The symbol `x_i^k`.
    pub fn var(nvars: usize, i: usize, k: i32) -> Self {
        let mut e = vec![0; nvars];
        e[i] = k;
        Self::monomial(BigRational::one(), e)
    }
    pub fn nvars(&self) -> usize {
        self.nvars
    }
    pub fn is_zero(&self) -> bool {
        self.t.is_empty()
    }
    pub fn constant_value(&self) -> Option<BigRational> {
        match self.t.len() {
            0 => Some(BigRational::zero()),
            1 => self.t.get(&vec![0; self.nvars]).cloned(),
            _ => None,
        }
    }
    pub fn add(&self, o: &Self) -> Self {
        let mut t = self.t.clone();
        for (e, c) in &o.t {
            *t.entry(e.clone()).or_insert_with(BigRational::zero) += c;
        }
        t.retain(|_, c| !c.is_zero());
        SymPoly { nvars: self.nvars, t }
    }
    pub fn neg(&self) -> Self {
        SymPoly { nvars: self.nvars, t: self.t.iter().map(|(e, c)| (e.clone(), -c)).collect() }
    }
    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }
    pub fn scale(&self, r: &BigRational) -> Self {
        if r.is_zero() {
            return Self::zero(self.nvars);
        }
        SymPoly { nvars: self.nvars, t: self.t.iter().map(|(e, c)| (e.clone(), c * r)).collect() }
    }
    pub fn mul(&self, o: &Self) -> Self {
        let mut t: BTreeMap<Vec<i32>, BigRational> = BTreeMap::new();
        for (e1, c1) in &self.t {
            for (e2, c2) in &o.t {
                let e: Vec<i32> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                *t.entry(e).or_insert_with(BigRational::zero) += c1 * c2;
            }
        }
        t.retain(|_, c| !c.is_zero());
        SymPoly { nvars: self.nvars, t }
    }
    pub fn pow(&self, k: u32) -> Self {
        (0..k).fold(Self::one(self.nvars), |acc, _| acc.mul(self))
    }
    /// Evaluate at rational values of the symbols.
    pub fn eval(&self, vals: &[BigRational]) -> BigRational {
        let mut s = BigRational::zero();
        for (e, c) in &self.t {
            let mut term = c.clone();
            for (v, k) in vals.iter().zip(e) {
                let pw = num_traits::pow(v.clone(), k.unsigned_abs() as usize);
                term *= if *k >= 0 { pw } else { pw.recip() };
            }
            s += term;
        }
        s
    }
}

impl fmt::Display for SymPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.t.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .t
            .iter()
            .map(|(e, c)| {
                let mono: Vec<String> = e
                    .iter()
                    .enumerate()
                    .filter(|(_, k)| **k != 0)
                    .map(|(i, k)| format!("x{i}^{k}"))
                    .collect();
                if mono.is_empty() {
                    c.to_string()
                } else {
                    format!("{}*{}", c, mono.join("*"))
                }
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// Power series in `X` truncated after `X^order`, coefficients in [`SymPoly`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymSeries {
    pub c: Vec<SymPoly>,
}

impl SymSeries {
    pub fn zero(nvars: usize, order: usize) -> Self {
        SymSeries { c: vec![SymPoly::zero(nvars); order + 1] }
    }
    pub fn constant(p: SymPoly, order: usize) -> Self {
        let nv = p.nvars();
        let mut s = Self::zero(nv, order);
        s.c[0] = p;
        s
    }
    pub fn order(&self) -> usize {
        self.c.len() - 1
    }
    /// `1 / (1 - a X^k)` truncated.
    pub fn geometric(a: &SymPoly, k: usize, order: usize) -> Self {
        let mut s = Self::zero(a.nvars(), order);
        let mut pw = SymPoly::one(a.nvars());
        let mut e = 0;
        while e <= order {
            s.c[e] = pw.clone();
            pw = pw.mul(a);
            e += k;
        }
        s
    }
    pub fn add(&self, o: &Self) -> Self {
        SymSeries { c: self.c.iter().zip(&o.c).map(|(a, b)| a.add(b)).collect() }
    }
    pub fn sub(&self, o: &Self) -> Self {
        SymSeries { c: self.c.iter().zip(&o.c).map(|(a, b)| a.sub(b)).collect() }
    }
    pub fn scale(&self, p: &SymPoly) -> Self {
        SymSeries { c: self.c.iter().map(|a| a.mul(p)).collect() }
    }
    pub fn mul(&self, o: &Self) -> Self {
        let n = self.order().min(o.order());
        let nv = self.c[0].nvars();
        let mut c = vec![SymPoly::zero(nv); n + 1];
        for i in 0..=n {
            if self.c[i].is_zero() {
                continue;
            }
            for j in 0..=(n - i) {
                if !o.c[j].is_zero() {
                    c[i + j] = c[i + j].add(&self.c[i].mul(&o.c[j]));
                }
            }
        }
        SymSeries { c }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{rat, rint};

    #[test]
    fn laurent_symbols() {
        let x = SymPoly::var(2, 0, 1);
        let xi = SymPoly::var(2, 0, -1);
        assert_eq!(x.mul(&xi), SymPoly::one(2));
        let y = SymPoly::var(2, 1, 1);
        let s = x.add(&y).pow(2);
        assert_eq!(s.eval(&[rint(2), rint(3)]), rint(25));
        assert_eq!(xi.eval(&[rat(1, 2), rint(1)]), rint(2));
    }

    #[test]
    fn geometric_inverse() {
        let t = SymPoly::var(1, 0, 1);
        let g = SymSeries::geometric(&t, 1, 5);
        let mut one_minus = SymSeries::constant(SymPoly::one(1), 5);
        one_minus.c[1] = t.neg();
        let p = g.mul(&one_minus);
        assert_eq!(p, SymSeries::constant(SymPoly::one(1), 5));
    }
}
