//! Exponential sums over `O^×` and `E¹`: Gauss sums, the Kloosterman-type
//! integrals `F_χ(k, a)`, norm-one sums `F_χ(a)`, nonvanishing searches and
//! stability radii.

use crate::character::{enumerate_chars, enumerate_norm_one_chars, MultChar, NormOneChar, NormOneGroup, Side, UnitGroup};
use crate::error::{Error, Result};
use crate::ring::{inv_mod, ipow, units_f, ExtNumber, FieldContext, Padic};
use crate::scalar::{qpow, Cyc, IntAccum};
use crate::weil::{theta_torus_w_gl2, WKernel};
use num_integer::Integer;
use rayon::prelude::*;
use std::collections::HashMap;

/// `c·u^power` inside `ψ(·)`, `power = ±1`.
#[derive(Clone, Copy, Debug)]
pub struct SumTerm {
    pub coef: Padic,
    pub power: i32,
}

/// Tables for repeated sums `∫_{O^×} χ^{±1}(u) ψ(Σ c_i u^{±1}) d*u` at one level.
pub struct UnitSumPlan {
    p: u64,
    level: u32,
    order: u64,
    units: Vec<u64>,
    chi_angle: Vec<u64>,
    inv: Vec<u64>,
}

impl UnitSumPlan {
    /// `max_k` bounds `-v(c_i)` for the terms to be evaluated.
    pub fn new(p: u64, chi: &MultChar, inverse: bool, max_k: u32) -> Result<Self> {
        if chi.side != Side::F {
            return Err(Error::Invalid("unit sums take characters of F^×".into()));
        }
        let level = max_k.max(chi.degree).max(1);
        let md = ipow(p, level);
        let cexp = chi.group.exponent.max(1);
        let order = cexp.lcm(&ipow(p, max_k));
        let gm = chi.group.modulus.max(1);
        let units = units_f(p, level);
        let mut chi_angle = Vec::with_capacity(units.len());
        let mut inv = Vec::with_capacity(units.len());
        for &u in &units {
            let a = chi.unit_angle((u % gm, 0)).ok_or_else(|| Error::Invalid("not a unit".into()))?;
            let a = if inverse { (cexp - a) % cexp } else { a };
            chi_angle.push(a * (order / cexp));
            inv.push(inv_mod(u, md).expect("unit"));
        }
        Ok(UnitSumPlan { p, level, order, units, chi_angle, inv })
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    /// The unnormalized sum over `(O/P^level)^×` as roots of unity.
    pub fn accumulate(&self, terms: &[SumTerm], acc: &mut IntAccum) -> Result<()> {
        acc.clear();
        let mut parts: Vec<(u64, u64, bool, u64)> = Vec::new();
        for t in terms {
            if t.coef.is_zero() || t.coef.v >= 0 {
                continue;
            }
            let k = (-t.coef.v) as u32;
            if k > self.level {
                return Err(Error::Invalid(format!("term needs level {k}, plan has {}", self.level)));
            }
            if k > t.coef.prec {
                return Err(Error::Precision(format!("coefficient known to {} digits, needs {k}", t.coef.prec)));
            }
            let pk = ipow(self.p, k);
            parts.push((t.coef.u % pk, pk, t.power < 0, self.order / pk));
        }
        for (i, &u) in self.units.iter().enumerate() {
            let mut ang = self.chi_angle[i];
            for &(c, pk, use_inv, scale) in &parts {
                let x = if use_inv { self.inv[i] } else { u };
                ang += crate::ring::mul_mod(c, x % pk, pk) * scale;
            }
            acc.add_root(ang % self.order, 1);
        }
        Ok(())
    }

    pub fn new_accum(&self) -> IntAccum {
        IntAccum::new(self.order)
    }

    pub fn measure(&self) -> Cyc {
        Cyc::from_rational(qpow(self.p, -(self.level as i64)))
    }

    pub fn eval(&self, terms: &[SumTerm]) -> Result<Cyc> {
        let mut acc = self.new_accum();
        self.accumulate(terms, &mut acc)?;
        Ok(acc.to_cyc().mul(&self.measure()))
    }
}

fn max_k(terms: &[SumTerm]) -> u32 {
    terms.iter().filter(|t| !t.coef.is_zero()).map(|t| (-t.coef.v).max(0) as u32).max().unwrap_or(0)
}

/// `∫_{O^×} χ^{±1}(u) ψ(Σ c_i u^{p_i}) d*u`, `vol(O^×) = 1 − q^{-1}`.
pub fn unit_sum(ctx: &FieldContext, chi: &MultChar, inverse: bool, terms: &[SumTerm]) -> Result<Cyc> {
    UnitSumPlan::new(ctx.p, chi, inverse, max_k(terms))?.eval(terms)
}

/// `∫_{O^×} χ(u) ψ(p^k u) d*u`.
pub fn gauss_unit_sum(ctx: &FieldContext, chi: &MultChar, k: i32) -> Result<Cyc> {
    let need = (chi.degree as i64).max(-(k as i64));
    if need > ctx.prec as i64 {
        return Err(Error::Precision(format!("Gauss sum at k = {k} needs {need} digits")));
    }
    let t = SumTerm { coef: Padic::p_pow(ctx.p, ctx.prec, k), power: 1 };
    unit_sum(ctx, chi, false, &[t])
}

/// `F_χ(k, a) = ∫_{|x| = q^k} ψ(x + a x^{-1}) χ(x) d*x`.
pub fn kloosterman(ctx: &FieldContext, chi: &MultChar, k: i32, a: &Padic) -> Result<Cyc> {
    if a.is_zero() {
        return Err(Error::Invalid("a must be nonzero".into()));
    }
    let s = unit_sum(ctx, chi, false, &kloosterman_terms(ctx, k, a))?;
    Ok(s.mul(&chi.at_p.pow(-(k as i64))?))
}

fn kloosterman_terms(ctx: &FieldContext, k: i32, a: &Padic) -> [SumTerm; 2] {
    [
        SumTerm { coef: Padic::p_pow(ctx.p, ctx.prec, -k), power: 1 },
        SumTerm { coef: a.mul(&Padic::p_pow(ctx.p, ctx.prec, k)), power: -1 },
    ]
}

/// Expected nonvanishing of `F_χ(k, a)` for `|a| = q^n`, `1 ≤ k < n`, `h = deg χ`.
pub fn kloosterman_nonzero_expected(h: u32, n: i32, k: i32) -> bool {
    let h = h as i32;
    let even = n % 2 == 0;
    if h == 0 {
        return even && 2 * k == n;
    }
    (even && n >= 2 * h && 2 * k == n)
        || (even && h < n && n < 2 * h && (2 * k == n || k == h || k == n - h))
        || (!even && h < n && n < 2 * h && (k == h || k == n - h))
}

/// Nonvanishing of `F_χ(k, p^{-n} a_0)` for unramified `χ` and odd `p` by
/// stationary phase: the phase `p^{-k}(u + a_0 u^{-1})` has a critical point
/// exactly when `n = 2k` and `a_0` is a square modulo `p`.
/// For `k = 1` the integral is a complete Kloosterman sum over the residue
/// field, which does not vanish for the primes exercised here.
pub fn unramified_kloosterman_nonzero(p: u64, n: i32, k: i32, a0: u64) -> bool {
    n == 2 * k && (k == 1 || (1..p).any(|x| x * x % p == a0 % p))
}

/// `F_χ(a) = ∫_{E¹} χ(u) ψ(sign·tr(a u)) du` with `vol(E¹) = 1`.
pub fn e1_sum(ctx: &FieldContext, chi: &NormOneChar, a: &ExtNumber, sign: i32) -> Result<Cyc> {
    let n = if a.is_zero() { 0 } else { (-a.v).max(0) as u32 };
    if n == 0 {
        return Ok(if chi.k == 0 { Cyc::one() } else { Cyc::zero() });
    }
    if n > a.prec {
        return Err(Error::Precision(format!("tr(a u) needs {n} digits of a")));
    }
    let level = n.max(chi.level()).max(1);
    let reps = crate::ring::norm_one_reps(ctx, level)?;
    let pn = ipow(ctx.p, n);
    let ring = ctx.galois_ring(n);
    let ares = ring.reduce((a.a, a.b));
    let corder = chi.group.order;
    let order = corder.lcm(&pn);
    let mut acc = IntAccum::new(order);
    for &u in &reps {
        let t = ring.trace(ring.mul(ares, ring.reduce(u))) % pn;
        let t = if sign < 0 { (pn - t) % pn } else { t };
        acc.add_root(chi.angle(u) * (order / corder) + t * (order / pn), 1);
    }
    Ok(acc.to_cyc().scale(&crate::scalar::rat(1, reps.len() as i64)))
}

/// One evaluated sum with the vanishing prediction it is checked against.
#[derive(Clone, Debug)]
pub struct SumReport {
    pub chi: String,
    pub degree: u32,
    pub k: i32,
    pub n: i32,
    /// Residue of the unit part of `a` that determines the result.
    pub a_class: u64,
    /// Modulus of that residue.
    pub a_modulus: u64,
    pub value: Cyc,
    pub is_zero: bool,
    pub predicate: bool,
}

impl SumReport {
    pub fn matches(&self) -> bool {
        self.is_zero != self.predicate
    }
    pub const CSV_HEADER: &'static str = "chi,k,n,a_class,a_modulus,value,is_zero,predicate_nonzero,match";
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},\"{}\",{},{},{}",
            self.chi,
            self.k,
            self.n,
            self.a_class,
            self.a_modulus,
            self.value,
            self.is_zero,
            self.predicate,
            self.matches()
        )
    }
}

/// How representatives of `a` are chosen in a Kloosterman sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepMode {
    /// Every unit `a_0` modulo `p^{n−k}`, the modulus the sum actually sees.
    Exhaustive,
    /// Units modulo `p^{min(k, n−k)}`: for `c ∈ 1 + P^k` one has
    /// `S(a_0) = χ(c) S(a_0 c^{-1})`, so vanishing is constant on these classes.
    Classes,
}

/// Vanishing of `F_χ(k, p^{-n} a_0)` against the prediction for all unit
/// characters of degree `≤ max_deg`, `1 ≤ k < n ≤ max_n`.
pub fn kloosterman_sweep(ctx: &FieldContext, max_n: i32, max_deg: u32, mode: SweepMode) -> Result<Vec<SumReport>> {
    let g = UnitGroup::new(ctx, Side::F, max_deg.max(1))?;
    let chars = enumerate_chars(&g, max_deg, &Cyc::one())?;
    let mut jobs = Vec::new();
    for n in 2..=max_n {
        for k in 1..n {
            for chi in &chars {
                jobs.push((n, k, chi.clone()));
            }
        }
    }
    let p = ctx.p;
    let out: Result<Vec<Vec<SumReport>>> = jobs
        .par_iter()
        .map(|(n, k, chi)| {
            let (n, k) = (*n, *k);
            let cls = match mode {
                SweepMode::Exhaustive => (n - k) as u32,
                SweepMode::Classes => k.min(n - k) as u32,
            };
            let plan = UnitSumPlan::new(p, chi, false, k.max(n - k) as u32)?;
            let mut acc = plan.new_accum();
            let at_p = chi.at_p.pow(-(k as i64))?;
            let predicate = kloosterman_nonzero_expected(chi.degree, n, k);
            let mut rows = Vec::new();
            for a0 in units_f(p, cls) {
                let a = Padic::new(p, ctx.prec, -n, a0 as i64);
                plan.accumulate(&kloosterman_terms(ctx, k, &a), &mut acc)?;
                let value = acc.to_cyc().mul(&plan.measure()).mul(&at_p);
                let is_zero = acc.is_zero();
                rows.push(SumReport { chi: chi.id(), degree: chi.degree, k, n, a_class: a0, a_modulus: ipow(p, cls), value, is_zero, predicate });
            }
            Ok(rows)
        })
        .collect();
    Ok(out?.into_iter().flatten().collect())
}

/// The first character of `E¹` (by degree) with `F_χ(a) ≠ 0`; degree is at
/// most `max(n, 1)` for `|a|_E^{1/2} = q^n`.
pub fn find_nonvanishing_e1(ctx: &FieldContext, a: &ExtNumber, sign: i32) -> Result<(NormOneChar, Cyc)> {
    let n = if a.is_zero() { 0 } else { (-a.v).max(0) as u32 };
    let grp = NormOneGroup::new(ctx, n.max(1))?;
    for chi in enumerate_norm_one_chars(&grp, n.max(1)) {
        let v = e1_sum(ctx, &chi, a, sign)?;
        if !v.is_zero() {
            return Ok((chi, v));
        }
    }
    Err(Error::Verification(format!("no character of E¹ of degree ≤ {n} has F_χ(a) ≠ 0")))
}

/// Values of `χ(p)` tried in order; `q^{∓1}` with trivial unit part would be
/// `|·|^{±1}` and is skipped.
fn at_p_candidates(q: u64) -> Vec<Cyc> {
    let q = q as i64;
    [Cyc::one(), Cyc::from_int(-1), Cyc::from_int(2), Cyc::from_ratio(1, 2), Cyc::from_int(q * q), Cyc::from_ratio(1, q * q)]
        .into_iter()
        .collect()
}

fn is_abs_power(chi: &MultChar, q: u64) -> bool {
    chi.degree == 0 && (chi.at_p == Cyc::from_int(q as i64) || chi.at_p == Cyc::from_ratio(1, q as i64))
}

/// Search for `χ` with `θ^{m,χ}(t(a)w) ≠ 0` on the `GL₂` side, caching the
/// successful character per `(n, unit coset of a)`.
pub struct NonvanishingSearch {
    pub kernel: WKernel,
    pub m: i32,
    cache: HashMap<(i32, u64), MultChar>,
}

impl NonvanishingSearch {
    pub fn new(kernel: WKernel, m: i32) -> Self {
        NonvanishingSearch { kernel, m, cache: HashMap::new() }
    }

    pub fn find(&mut self, ctx: &FieldContext, a: &Padic) -> Result<(MultChar, Cyc)> {
        let n = (-a.v).max(0);
        if n > 2 * self.m {
            return Err(Error::Invalid(format!("|a| = q^{n} needs m ≥ {}", (n + 1) / 2)));
        }
        let key_mod = ipow(ctx.p, n.max(1) as u32);
        let key = (a.v, a.u % key_mod);
        if let Some(chi) = self.cache.get(&key) {
            let v = theta_torus_w_gl2(ctx, self.kernel, self.m, chi, a)?;
            if !v.is_zero() {
                return Ok((chi.clone(), v));
            }
        }
        let deg_bound = n.max(1) as u32;
        let g = UnitGroup::new(ctx, Side::F, deg_bound)?;
        let units = enumerate_chars(&g, deg_bound, &Cyc::one())?;
        for chi0 in &units {
            for t in at_p_candidates(ctx.q()) {
                let chi = chi0.with_at_p(t)?;
                if is_abs_power(&chi, ctx.q()) {
                    continue;
                }
                let v = theta_torus_w_gl2(ctx, self.kernel, self.m, &chi, a)?;
                if !v.is_zero() {
                    self.cache.insert(key, chi.clone());
                    return Ok((chi, v));
                }
            }
        }
        Err(Error::Verification(format!("no character of degree ≤ {deg_bound} has θ(t(a)w) ≠ 0 for |a| = q^{n}")))
    }
}

/// `d = max(deg χ, N)` together with a check that `θ^{m,χ}(t(a_0 a)w)` does not
/// depend on `a_0 ∈ 1 + P^d` for `a` over the shells of `P^{-N}` and units
/// modulo `p^{unit_level}`.
pub fn stability_radius(ctx: &FieldContext, kernel: WKernel, chi: &MultChar, big_n: i32, m: i32, unit_level: u32) -> Result<u32> {
    let d = (chi.degree as i32).max(big_n).max(1) as u32;
    if let Some((a, a0)) = stability_violation(ctx, kernel, chi, big_n, m, d, unit_level)? {
        return Err(Error::Verification(format!(
            "θ(t(a_0 a)w) ≠ θ(t(a)w) for a = p^{}·{}, a_0 = {}",
            a.v, a.u, a0.u
        )));
    }
    Ok(d)
}

/// First `(a, a_0)` with `a_0 ∈ 1 + P^d` and `θ(t(a_0 a)w) ≠ θ(t(a)w)`.
pub fn stability_violation(
    ctx: &FieldContext,
    kernel: WKernel,
    chi: &MultChar,
    big_n: i32,
    m: i32,
    d: u32,
    unit_level: u32,
) -> Result<Option<(Padic, Padic)>> {
    if big_n > 2 * m {
        return Err(Error::Invalid("stability check needs N ≤ 2m".into()));
    }
    let pd = ipow(ctx.p, d) as i64;
    let shifts: Vec<Padic> = (1..ctx.p as i64).map(|j| ctx.f(1 + pd * j)).collect();
    for v in -big_n..=1 {
        for u in units_f(ctx.p, unit_level.max(1)) {
            let a = Padic::new(ctx.p, ctx.prec, v, u as i64);
            let base = theta_torus_w_gl2(ctx, kernel, m, chi, &a)?;
            for a0 in &shifts {
                let moved = theta_torus_w_gl2(ctx, kernel, m, chi, &a0.mul(&a))?;
                if moved != base {
                    return Ok(Some((a, *a0)));
                }
            }
        }
    }
    Ok(None)
}
