//! Exact integration: additive boxes, multiplicative shells with `|·|^s`
//! weights and certified geometric tails, and the norm-one torus.

use crate::error::{Error, Result};
use crate::ring::{ipow, units_f, FieldContext, Gr, Padic};
use crate::scalar::{qpow, Cyc, LPoly, LaurentRational};
use crate::schwartz::Level;
use std::collections::BTreeMap;

/// `Σ_v S_v X^{w·v}`, with an optional tail `S_v = S_{v0}·t^{v−v0}` for `v ≥ v0`.
#[derive(Clone, Debug)]
pub struct ShellSum {
    pub base: u64,
    pub weight: i32,
    pub shells: BTreeMap<i32, Cyc>,
    pub tail: Option<(i32, Cyc)>,
}

impl ShellSum {
    pub fn new(base: u64, weight: i32) -> Self {
        ShellSum { base, weight, shells: BTreeMap::new(), tail: None }
    }
    pub fn set(&mut self, v: i32, s: Cyc) {
        self.shells.insert(v, s);
    }
    /// Declare the tail from `v0` on; the two shells after `v0` must already
    /// be present and follow the ratio.
    pub fn certify_tail(&mut self, v0: i32, t: Cyc) -> Result<()> {
        let get = |v: i32| self.shells.get(&v).cloned().ok_or_else(|| {
            Error::Verification(format!("tail certificate needs shell {v}"))
        });
        let s0 = get(v0)?;
        let s1 = get(v0 + 1)?;
        let s2 = get(v0 + 2)?;
        if s1 != s0.mul(&t) || s2 != s1.mul(&t) {
            return Err(Error::Verification(format!("shells after {v0} are not geometric with the claimed ratio")));
        }
        self.shells.retain(|&v, _| v <= v0);
        self.tail = Some((v0, t));
        Ok(())
    }
    pub fn to_laurent(&self) -> LaurentRational {
        let mut poly = LPoly::zero();
        for (&v, s) in &self.shells {
            if self.tail.as_ref().is_some_and(|(v0, _)| v >= *v0) {
                continue;
            }
            poly = poly.add(&LPoly::monomial(s.clone(), self.weight * v));
        }
        let head = LaurentRational::from_poly(self.base, poly);
        match &self.tail {
            None => head,
            Some((v0, t)) => {
                let s0 = self.shells.get(v0).cloned().unwrap_or_else(Cyc::zero);
                let tail = LaurentRational::monomial(self.base, s0, self.weight * v0)
                    .mul(&LaurentRational::geometric(self.base, t.clone(), self.weight));
                head.add(&tail)
            }
        }
    }
}

/// `∫ f dx` over `P^{-n}` at smoothness `P^m` on `F`.
pub fn int_additive(ctx: &FieldContext, lv: Level, mut f: impl FnMut(&Padic) -> Result<Cyc>) -> Result<Cyc> {
    let size = ipow(ctx.p, lv.width());
    let mut s = Cyc::zero();
    for i in 0..size {
        let x = Padic::new(ctx.p, ctx.prec, -lv.n, i as i64);
        s = s.add(&f(&x)?);
    }
    Ok(s.mul(&Cyc::from_rational(qpow(ctx.p, -(lv.m as i64)))))
}

/// `∫_{p^v O^×} f(a) d*a` with `f` constant on `p^v(1+P^k)`.
pub fn int_shell(ctx: &FieldContext, v: i32, k: u32, mut f: impl FnMut(&Padic) -> Result<Cyc>) -> Result<Cyc> {
    let k = k.max(1);
    let mut s = Cyc::zero();
    for u in units_f(ctx.p, k) {
        let a = Padic::new(ctx.p, ctx.prec, v, u as i64);
        s = s.add(&f(&a)?);
    }
    Ok(s.mul(&Cyc::from_rational(qpow(ctx.p, -(k as i64)))))
}

/// Multiplicative integral `Σ_v X^{w v} ∫_{|a| = q^{-v}} f` over `v ∈ [lo, hi]`,
/// optionally closed by a certified tail starting at `hi - 2`.
pub fn int_mult(
    ctx: &FieldContext,
    base: u64,
    weight: i32,
    range: (i32, i32),
    tail_ratio: Option<Cyc>,
    mut shell: impl FnMut(i32) -> Result<Cyc>,
) -> Result<LaurentRational> {
    let mut ss = ShellSum::new(base, weight);
    for v in range.0..=range.1 {
        ss.set(v, shell(v)?);
    }
    if let Some(t) = tail_ratio {
        if range.1 - range.0 < 2 {
            return Err(Error::Invalid("tail needs at least three shells".into()));
        }
        ss.certify_tail(range.1 - 2, t)?;
    }
    let _ = ctx;
    Ok(ss.to_laurent())
}

/// `∫_{E¹} f(u) du` with `vol(E¹) = 1`, `f` constant on `E¹ ∩ (1 + P^m)`.
pub fn int_norm_one(ctx: &FieldContext, m: u32, mut f: impl FnMut(Gr) -> Result<Cyc>) -> Result<Cyc> {
    if m > ctx.prec {
        return Err(Error::Precision(format!("norm-one level {m} beyond precision {}", ctx.prec)));
    }
    let reps = crate::ring::norm_one_reps(ctx, m.max(1))?;
    let mut s = Cyc::zero();
    for &u in &reps {
        s = s.add(&f(u)?);
    }
    Ok(s.scale(&crate::scalar::rat(1, reps.len() as i64)))
}

/// `∫_{P^{-n}} F(x) dx` for a rational-function valued integrand constant on
/// `P^m`-cosets; the `x`-part of a cell integral.
pub fn int_cell(
    ctx: &FieldContext,
    base: u64,
    lv: Level,
    mut f: impl FnMut(&Padic) -> Result<LaurentRational>,
) -> Result<LaurentRational> {
    let size = ipow(ctx.p, lv.width());
    let mut s = LaurentRational::zero(base);
    for i in 0..size {
        let x = Padic::new(ctx.p, ctx.prec, -lv.n, i as i64);
        s = s.add(&f(&x)?);
    }
    Ok(s.scale(&Cyc::from_rational(qpow(ctx.p, -(lv.m as i64)))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::character::{enumerate_chars, psi_angle, Side, UnitGroup};
    use crate::ring::{make_context, ExtKind};

    fn c3() -> FieldContext {
        make_context(3, 8, ExtKind::Unramified).unwrap()
    }

    #[test]
    fn additive_cases() {
        let c = c3();
        let one = int_additive(&c, Level { n: 0, m: 0 }, |_| Ok(Cyc::one())).unwrap();
        assert!(one.is_one());
        let psi = |x: &Padic| Ok(psi_angle(x)?.root());
        assert!(int_additive(&c, Level { n: 1, m: 0 }, psi).unwrap().is_zero());
        assert!(int_additive(&c, Level { n: 0, m: 0 }, psi).unwrap().is_one());
        // mesh halving does not change the value
        let a = int_additive(&c, Level { n: 2, m: 1 }, |x| Ok(if x.is_zero() || x.v >= -1 { psi(x)? } else { Cyc::zero() })).unwrap();
        let b = int_additive(&c, Level { n: 2, m: 2 }, |x| Ok(if x.is_zero() || x.v >= -1 { psi(x)? } else { Cyc::zero() })).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn multiplicative_cases() {
        let c = c3();
        // ∫_{1+P^m} d*a = q^{-m}
        for m in 1..4u32 {
            let v = int_shell(&c, 0, m, |a| Ok(if (a.u - 1) % ipow(3, m) == 0 { Cyc::one() } else { Cyc::zero() })).unwrap();
            assert_eq!(v, Cyc::from_rational(qpow(3, -(m as i64))));
        }
        let g = UnitGroup::new(&c, Side::F, 2).unwrap();
        for chi in enumerate_chars(&g, 2, &Cyc::one()).unwrap() {
            let v = int_shell(&c, 0, 2, |a| chi.eval_f(a)).unwrap();
            assert_eq!(v.is_zero(), chi.degree > 0);
        }
        // ∫_{O ∖ 0} |a|^s d*a = (1 - q^{-1}) / (1 - X)
        let z = int_mult(&c, 3, 1, (0, 3), Some(Cyc::one()), |_| Ok(Cyc::from_ratio(2, 3))).unwrap();
        let want = LaurentRational::geometric(3, Cyc::one(), 1).scale(&Cyc::from_ratio(2, 3));
        assert!(z.eq_exact(&want));
        // series of the tail matches the truncated sum
        let s = z.series(6).unwrap();
        assert!(s.iter().all(|x| *x == Cyc::from_ratio(2, 3)));
        assert!(int_mult(&c, 3, 1, (0, 3), Some(Cyc::from_int(2)), |_| Ok(Cyc::one())).is_err());
    }

    #[test]
    fn norm_one_cases() {
        let c = c3();
        assert!(int_norm_one(&c, 2, |_| Ok(Cyc::one())).unwrap().is_one());
        let g = crate::character::NormOneGroup::new(&c, 2).unwrap();
        for chi in crate::character::enumerate_norm_one_chars(&g, 2) {
            let v = int_norm_one(&c, 2, |u| Ok(chi.eval(u))).unwrap();
            assert_eq!(v.is_zero(), chi.k != 0);
        }
    }

    #[test]
    fn cell_cases() {
        let c = c3();
        // constant in x over |x| ≤ q^{-i}
        for i in 0..3 {
            let v = int_cell(&c, 3, Level { n: 0, m: i }, |x| {
                Ok(if x.is_zero() || x.v >= i { LaurentRational::one(3) } else { LaurentRational::zero(3) })
            })
            .unwrap();
            assert!(v.eq_exact(&LaurentRational::from_cyc(3, Cyc::from_rational(qpow(3, -(i as i64))))));
        }
    }
}
