//! Flat sections, Tate integrals, unramified zeta integrals, zeta integrals of
//! Howe data on the `N T N̄` cell, and γ/ε assembly.
//!
//! Every `s`-dependent quantity is a [`LaurentRational`]. `U(1,1)` uses
//! `X_E = q^{-2s}`; `GL₂` and Tate integrals use `X = q^{-s}`.

use crate::character::{check_compat, check_compat_gl2, psi_angle, MultChar, NormOneChar, Side};
use crate::error::{Error, Result};
use crate::integrate::{int_mult, int_shell};
use crate::ring::{is_norm, ExtNumber, FieldContext, Padic};
use crate::scalar::{
    poly_divrem, poly_gcd, qpow, Cyc, LPoly, LaurentRational, SymPoly, SymSeries,
};
use crate::schwartz::{Domain, SchwartzFn};
use crate::weil::{gl2_nbar, u11_nbar, u11_t, Gl2, Mat2, WKernel, WeilGl2, WeilU11, U11};
use serde::Serialize;

/// The variable `X = base^{-s}` and how many powers of it one `F`-shell of
/// `|r|_F^{·s}` carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SVar {
    pub base: u64,
    pub weight: i32,
}

impl SVar {
    /// Tate integrals on `F`: `|r|^s`.
    pub fn f(ctx: &FieldContext) -> Self {
        SVar { base: ctx.p, weight: 1 }
    }
    /// `U(1,1)` sections: `|r|_E^s = X_E^{v(r)}`.
    pub fn u11(ctx: &FieldContext) -> Self {
        SVar { base: ctx.p * ctx.p, weight: 1 }
    }
    /// `GL₂` sections: `|r|^{2s} = X^{2 v(r)}`.
    pub fn gl2(ctx: &FieldContext) -> Self {
        SVar { base: ctx.p, weight: 2 }
    }
}

fn qc(p: u64, k: i64) -> Cyc {
    Cyc::from_rational(qpow(p, k))
}

/// `Σ_{v ≥ lo} X^{w v} ∫_{p^v O^×} f(r) d*r`, where from `v0` on every shell is
/// the previous one times `ratio`; the tail is certified on three shells.
fn shell_series(
    ctx: &FieldContext,
    sv: SVar,
    lo: i32,
    v0: i32,
    ratio: Cyc,
    level: impl Fn(i32) -> i64,
    mut f: impl FnMut(&Padic) -> Result<Cyc>,
) -> Result<LaurentRational> {
    let v0 = v0.max(lo);
    int_mult(ctx, sv.base, sv.weight, (lo, v0 + 2), Some(ratio), |v| {
        let k = level(v).max(1);
        if k > ctx.prec as i64 {
            return Err(Error::Precision(format!("shell {v} needs unit level {k}")));
        }
        int_shell(ctx, v, k as u32, &mut f)
    })
}

/// `z = ∫_{F^×} Φ((0, r) g) ξ(r) |r|^{w s} d*r` for `g ∈ GL₂(F)`.
///
/// For `U(1,1)` pass `ξ = η|_{F^×}` and [`SVar::u11`]; for `GL₂` pass
/// `ξ = η₁η₂^{-1}` and [`SVar::gl2`].
pub fn z_section(ctx: &FieldContext, sv: SVar, g: &Gl2, phi: &SchwartzFn, xi: &MultChar) -> Result<LaurentRational> {
    if phi.domain != Domain::F2 {
        return Err(Error::Invalid("sections need Φ on F²".into()));
    }
    let (c, d) = (g.e[2], g.e[3]);
    if c.is_zero() && d.is_zero() {
        return Err(Error::Invalid("singular matrix".into()));
    }
    let (l0, l1) = (phi.levels[0], phi.levels[1]);
    let axes = [(c, l0), (d, l1)];
    let live = || axes.iter().filter(|(e, _)| !e.is_zero());
    let lo = live().map(|(e, l)| -l.n - e.v).max().unwrap();
    let v0 = live().map(|(e, l)| l.m - e.v).max().unwrap();
    let xl = xi.level() as i64;
    let level = |v: i32| live().map(|(e, l)| (l.m - v - e.v) as i64).max().unwrap().max(xl);
    let ratio = xi.eval_on_f(&Padic::p_pow(ctx.p, ctx.prec, 1))?;
    shell_series(ctx, sv, lo, v0, ratio, level, |r| {
        let val = phi.eval_f2(&r.mul(&c), &r.mul(&d))?;
        if val.is_zero() {
            return Ok(val);
        }
        Ok(val.mul(&xi.eval_on_f(r)?))
    })
}

/// Shell values `∫_{p^v O^×} Φ((0, r) g) ξ₀(r) d*r` with the value at `p` set to
/// one, so that a symbolic `ξ(p)^v` can be attached by the caller.
pub fn z_section_shells(
    ctx: &FieldContext,
    g: &Gl2,
    phi: &SchwartzFn,
    xi: &MultChar,
    range: (i32, i32),
) -> Result<Vec<(i32, Cyc)>> {
    let unit = xi.with_at_p(Cyc::one())?;
    let (c, d) = (g.e[2], g.e[3]);
    let (l0, l1) = (phi.levels[0], phi.levels[1]);
    let mut out = Vec::new();
    for v in range.0..=range.1 {
        let mut k = xi.level() as i64;
        for (e, l) in [(c, l0), (d, l1)] {
            if !e.is_zero() {
                k = k.max((l.m - v - e.v) as i64);
            }
        }
        let val = int_shell(ctx, v, k.max(1) as u32, |r| {
            let x = phi.eval_f2(&r.mul(&c), &r.mul(&d))?;
            if x.is_zero() {
                return Ok(x);
            }
            Ok(x.mul(&unit.eval_on_f(r)?))
        })?;
        out.push((v, val));
    }
    Ok(out)
}

/// `a` with `a / ā = d` for `d ∈ E¹`: `a = b + d b̄` for the first `b ∈ {1, ω}`
/// giving a nonzero value.
pub fn hilbert90(ctx: &FieldContext, d: &ExtNumber) -> Result<ExtNumber> {
    if !d.norm().eq_value(&ctx.f(1)) {
        return Err(Error::Invalid("Hilbert 90 needs a norm-one element".into()));
    }
    for b in [ctx.e(1, 0), ctx.e(0, 1)] {
        let a = b.add(&d.mul(&b.conj()));
        if !a.is_zero() {
            return Ok(a);
        }
    }
    Err(Error::Precision("no solution of a/ā = d found at this precision".into()))
}

/// `f(s, h, Φ, η) = η(a)|a|_E^s z(s, g, Φ, η)` for the decomposition
/// `h = t(a) g`, `g ∈ SL₂(F)`.
pub fn flat_section_u11_at(
    ctx: &FieldContext,
    h: &U11,
    a: &ExtNumber,
    phi: &SchwartzFn,
    eta: &MultChar,
) -> Result<LaurentRational> {
    if eta.side != Side::E {
        return Err(Error::Invalid("η must be a character of E^×".into()));
    }
    let g = u11_t(a)?.inv()?.mul(h);
    let mut ge = Vec::with_capacity(4);
    for x in &g.e {
        ge.push(x.to_f().ok_or_else(|| Error::Verification("t(a)^{-1} h is not in SL₂(F)".into()))?);
    }
    let g = Mat2::new(ge[0], ge[1], ge[2], ge[3]);
    if !g.det().eq_value(&ctx.f(1)) {
        return Err(Error::Verification("t(a)^{-1} h does not have determinant one".into()));
    }
    let z = z_section(ctx, SVar::u11(ctx), &g, phi, eta)?;
    Ok(z.mul(&LaurentRational::monomial(ctx.p * ctx.p, eta.eval_e(a)?, a.v)))
}

/// The `U(1,1)` flat section, evaluated through two Hilbert-90 decompositions
/// `h = t(a)g = t(ac)(t(c)^{-1}g)` with `c = p(1+p)`; they must agree.
pub fn flat_section_u11(ctx: &FieldContext, h: &U11, phi: &SchwartzFn, eta: &MultChar) -> Result<LaurentRational> {
    if !crate::weil::in_u11(h) {
        return Err(Error::Invalid("h is not in U(1,1)".into()));
    }
    let a = hilbert90(ctx, &h.det())?;
    let c = ExtNumber::from_f(&Padic::new(ctx.p, ctx.prec, 1, 1 + ctx.p as i64), ctx.omega);
    let v1 = flat_section_u11_at(ctx, h, &a, phi, eta)?;
    let v2 = flat_section_u11_at(ctx, h, &a.mul(&c), phi, eta)?;
    if !v1.eq_exact(&v2) {
        return Err(Error::Verification("flat section depends on the decomposition".into()));
    }
    Ok(v1)
}

/// `f(h, s, Φ, η) = η₁(det h)|det h|^s ∫ Φ((0, r)h) η₁η₂^{-1}(r) |r|^{2s} d*r`.
pub fn flat_section_gl2(
    ctx: &FieldContext,
    h: &Gl2,
    phi: &SchwartzFn,
    eta1: &MultChar,
    eta2: &MultChar,
) -> Result<LaurentRational> {
    let xi = eta1.mul_char(ctx, &eta2.inverse()?)?;
    let det = h.det();
    let z = z_section(ctx, SVar::gl2(ctx), h, phi, &xi)?;
    Ok(z.mul(&LaurentRational::monomial(ctx.p, eta1.eval_f(&det)?, det.v)))
}

/// `∫_{|y| ≤ q^n} ξ^{-1}(y) ψ(y) |y|^{w s} d*y`.
pub fn tate_c_bounded(ctx: &FieldContext, sv: SVar, xi: &MultChar, n: i32) -> Result<LaurentRational> {
    let xinv = xi.inverse()?;
    let xl = xi.level() as i64;
    let ratio = xinv.eval_on_f(&Padic::p_pow(ctx.p, ctx.prec, 1))?;
    shell_series(ctx, sv, -n, 0, ratio, |v| (-v as i64).max(xl), |y| {
        Ok(xinv.eval_on_f(y)?.mul(&psi_angle(y)?.root()))
    })
}

/// `c(s, ξ, ψ) = ∫_{|y| ≤ q^l} ξ^{-1}(y) ψ(y) |y|^{w s} d*y`.
pub fn tate_c(ctx: &FieldContext, sv: SVar, xi: &MultChar, l: i32) -> Result<LaurentRational> {
    tate_c_bounded(ctx, sv, xi, l)
}

/// Closed form of the section at `n̄(x)` for `Φ_{i,l}`: `q^{-l}` on `|x| ≤ q^{-i}`.
pub fn section_nbar_closed(ctx: &FieldContext, sv: SVar, i: i32, l: i32, x: &Padic) -> LaurentRational {
    if x.is_zero() || x.v >= i {
        LaurentRational::from_cyc(sv.base, qc(ctx.p, -l as i64))
    } else {
        LaurentRational::zero(sv.base)
    }
}

/// Closed form of the section at `w n(x)` for `Φ̂_{i,l}` and `η*`, at `1 − s`:
/// `q^{-l-i} ∫_{|y| ≤ q^{n}} ψ(y) ξ^{-1}(y) |y|^{w(1-s)} d*y` with `n = l` when
/// `|x| ≤ q^{i-l}` and `n = i + v(x)` (that is `|y| ≤ q^i |x|^{-1}`) otherwise.
pub fn section_wn_closed(
    ctx: &FieldContext,
    sv: SVar,
    i: i32,
    l: i32,
    xi: &MultChar,
    x: &Padic,
) -> Result<LaurentRational> {
    let n = if x.is_zero() || -x.v <= i - l { l } else { i + x.v };
    Ok(tate_c_bounded(ctx, sv, xi, n)?.dualize().scale(&qc(ctx.p, -(l + i) as i64)))
}

/// `Z(s, η, Φ) = ∫_{F^×} Φ(x) η(x) |x|^s d*x`.
pub fn tate_zeta(ctx: &FieldContext, phi: &SchwartzFn, eta: &MultChar) -> Result<LaurentRational> {
    if phi.domain != Domain::F {
        return Err(Error::Invalid("Tate integrals need Φ on F".into()));
    }
    let lv = phi.levels[0];
    let el = eta.level() as i64;
    let ratio = eta.eval_on_f(&Padic::p_pow(ctx.p, ctx.prec, 1))?;
    shell_series(ctx, SVar::f(ctx), -lv.n, lv.m, ratio, |v| ((lv.m - v) as i64).max(el), |x| {
        let val = phi.eval_f(x)?;
        if val.is_zero() {
            return Ok(val);
        }
        Ok(val.mul(&eta.eval_on_f(x)?))
    })
}

/// The probe functions used for Tate γ-factors, with labels.
pub fn tate_probes(ctx: &FieldContext, deg: u32) -> Result<Vec<(String, SchwartzFn)>> {
    let d = deg.max(1) as i32;
    let p = ctx.p as i64;
    let coset = SchwartzFn::coset_f(ctx, 1, d)?;
    let mut out = vec![
        ("1_O".to_string(), SchwartzFn::ball_f(ctx, 0)),
        ("1_{1+P}".to_string(), SchwartzFn::coset_f(ctx, 1, 1)?),
        ("1_P".to_string(), SchwartzFn::ball_f(ctx, 1)),
    ];
    if d > 1 {
        out.push((format!("1_{{1+P^{d}}}"), coset.clone()));
    }
    if crate::ring::rem(-1, crate::ring::ipow(ctx.p, d as u32)) != 1 {
        out.push((format!("1_{{-1+P^{d}}}"), SchwartzFn::coset_f(ctx, -1, d)?));
    }
    out.push((format!("1_{{p(1+P^{d})}}"), SchwartzFn::coset_f(ctx, p, d + 1)?));
    out.push((
        format!("1_{{p^-1(1+P^{d})}}"),
        coset.dilate_axis(0, &Padic::p_pow(ctx.p, ctx.prec, 1))?,
    ));
    Ok(out)
}

/// Tate's γ: `Z(1−s, η^{-1}, Φ̂) / Z(s, η, Φ)` with `Φ̂(y) = ∫ Φ(x) ψ(xy) dx`,
/// computed for every probe with a nonzero denominator; at least three probes
/// must be usable and agree.
pub fn tate_gamma(ctx: &FieldContext, eta: &MultChar) -> Result<TateGamma> {
    let einv = eta.inverse()?;
    let mut value: Option<LaurentRational> = None;
    let mut used = Vec::new();
    for (label, phi) in tate_probes(ctx, eta.degree)? {
        let z = tate_zeta(ctx, &phi, eta)?;
        if z.is_zero() {
            continue;
        }
        let zd = tate_zeta(ctx, &phi.fourier_axis(0, 1)?, &einv)?.dualize();
        let g = zd.div(&z)?;
        if let Some(v) = &value {
            if !v.eq_exact(&g) {
                return Err(Error::Verification(format!("Tate γ from probe {label} differs")));
            }
        } else {
            value = Some(g);
        }
        used.push(label);
    }
    let value = value.ok_or_else(|| Error::Verification("every probe has a zero Tate integral".into()))?;
    if used.len() < 3 {
        return Err(Error::Verification(format!("only {} usable probes", used.len())));
    }
    Ok(TateGamma { value: value.reduce()?, probes: used })
}

#[derive(Clone, Debug)]
pub struct TateGamma {
    pub value: LaurentRational,
    pub probes: Vec<String>,
}

/// Where a γ-factor came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Provenance {
    DirectFe,
    Multiplicativity,
    UnramifiedLRatio,
    Transformed,
}

#[derive(Clone, Debug)]
pub struct GammaFactor {
    pub value: LaurentRational,
    pub provenance: Provenance,
    pub params: String,
}

impl GammaFactor {
    pub fn same_value(&self, o: &GammaFactor) -> bool {
        self.value.eq_exact(&o.value)
    }
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "provenance": self.provenance,
            "params": self.params,
            "value": self.value.to_json(),
        })
    }
}

/// Change of additive character or conjugation by a non-norm.
#[derive(Clone, Debug)]
pub enum PsiRule {
    /// `ψ' ↦ ψ'_b`, `b ∈ F^×`: factor `η(b)|b|_E^{s−1}`.
    ShiftB(Padic),
    /// `ψ ↦ ψ_{aā}^{-1}`-type change, `a ∈ E^×`: factor `η(aā)|aā|_F^{2s−1}`.
    NormShift(ExtNumber),
    /// `ψ ↦ ψ_κ`, `κ` not a norm: factor `η(κ)|κ|_F^{2s−1}`.
    Kappa(Padic),
}

/// The monomial `c·X_E^k` a rule multiplies γ by (`U(1,1)`, `X_E = q^{-2s}`).
pub fn transform_factor(ctx: &FieldContext, eta: &MultChar, rule: &PsiRule) -> Result<LaurentRational> {
    let qe = ctx.p * ctx.p;
    // |c|_F^{2s-1} for c ∈ F with v(c) = v: q^{v} X_E^{v}
    let f_power = |c: &Padic| -> Result<LaurentRational> {
        Ok(LaurentRational::monomial(qe, eta.eval_on_f(c)?.mul(&qc(ctx.p, c.v as i64)), c.v))
    };
    match rule {
        PsiRule::ShiftB(b) => {
            if b.is_zero() {
                return Err(Error::Invalid("b must be nonzero".into()));
            }
            // |b|_E^{s-1} = q_E^{v} X_E^{v}
            Ok(LaurentRational::monomial(qe, eta.eval_on_f(b)?.mul(&qc(ctx.p, 2 * b.v as i64)), b.v))
        }
        PsiRule::NormShift(a) => {
            if a.is_zero() {
                return Err(Error::Invalid("a must be nonzero".into()));
            }
            f_power(&a.norm())
        }
        PsiRule::Kappa(k) => {
            if k.is_zero() || is_norm(ctx, k)? {
                return Err(Error::Invalid("κ must be a non-norm".into()));
            }
            f_power(k)
        }
    }
}

pub fn gamma_transform(ctx: &FieldContext, g: &GammaFactor, eta: &MultChar, rule: &PsiRule) -> Result<GammaFactor> {
    let f = transform_factor(ctx, eta, rule)?;
    Ok(GammaFactor {
        value: g.value.try_mul(&f)?,
        provenance: Provenance::Transformed,
        params: format!("{} ∘ {:?}", g.params, rule_label(rule)),
    })
}

fn rule_label(r: &PsiRule) -> String {
    match r {
        PsiRule::ShiftB(b) => format!("shift(v={}, u={})", b.v, b.u),
        PsiRule::NormShift(a) => format!("norm_shift(v={}, a={}, b={})", a.v, a.a, a.b),
        PsiRule::Kappa(k) => format!("kappa(v={}, u={})", k.v, k.u),
    }
}

/// Generator `1/P` of the fractional ideal spanned by `values`, with `P(0) = 1`.
pub fn l_extract(values: &[LaurentRational]) -> Result<LaurentRational> {
    let first = values.first().ok_or_else(|| Error::Invalid("empty family".into()))?;
    let base = first.base;
    let mut num_gcd: Option<Vec<Cyc>> = None;
    let mut den_lcm: Vec<Cyc> = vec![Cyc::one()];
    for v in values {
        if v.base != base {
            return Err(Error::Invalid("mixed variables in the family".into()));
        }
        if v.is_zero() {
            continue;
        }
        let r = v.reduce()?;
        // monomials are units of C[X, X^{-1}]
        let n = r.num.c.clone();
        num_gcd = Some(match num_gcd {
            None => poly_gcd(&n, &n)?,
            Some(g) => poly_gcd(&g, &n)?,
        });
        let g = poly_gcd(&den_lcm, &r.den.c)?;
        let (q, rem) = poly_divrem(&r.den.c, &g)?;
        debug_assert!(rem.is_empty());
        den_lcm = LPoly::from_coeffs(0, den_lcm).mul(&LPoly::from_coeffs(0, q)).c;
    }
    let g = num_gcd.ok_or_else(|| Error::Invalid("family is identically zero".into()))?;
    if g.len() != 1 {
        return Err(Error::Verification("the family does not span an ideal containing 1".into()));
    }
    let c0 = den_lcm[0].inv()?;
    let den: Vec<Cyc> = den_lcm.iter().map(|c| c.mul(&c0)).collect();
    LaurentRational::new(base, LPoly::constant(Cyc::one()), LPoly::from_coeffs(0, den))
}

/// `ε = γ · L(s) / L(1−s, η*)`.
pub fn epsilon(gamma: &LaurentRational, l: &LaurentRational, l_dual: &LaurentRational) -> Result<LaurentRational> {
    gamma.try_mul(l)?.div(&l_dual.dualize())
}

/// Rational generating function of `Σ c_n X^n` via Berlekamp–Massey; at least
/// `2L + 4` terms must be supplied for a recurrence of length `L`, and the
/// result must reproduce every supplied term.
pub fn rational_from_series(base: u64, coeffs: &[Cyc]) -> Result<LaurentRational> {
    let n = coeffs.len();
    let mut c: Vec<Cyc> = vec![Cyc::one()];
    let mut b: Vec<Cyc> = vec![Cyc::one()];
    let mut l = 0usize;
    let mut m = 1usize;
    let mut bd = Cyc::one();
    for i in 0..n {
        let mut d = coeffs[i].clone();
        for j in 1..=l.min(c.len() - 1) {
            d = d.add(&c[j].mul(&coeffs[i - j]));
        }
        if d.is_zero() {
            m += 1;
            continue;
        }
        let coef = d.div(&bd)?;
        let t = c.clone();
        if c.len() < b.len() + m {
            c.resize(b.len() + m, Cyc::zero());
        }
        for (j, bj) in b.iter().enumerate() {
            c[j + m] = c[j + m].sub(&coef.mul(bj));
        }
        if 2 * l <= i {
            l = i + 1 - l;
            b = t;
            bd = d;
            m = 1;
        } else {
            m += 1;
        }
    }
    c.truncate(l + 1);
    if n < 2 * l + 4 {
        return Err(Error::Verification(format!("{n} terms cannot certify a recurrence of length {l}")));
    }
    let mut num = vec![Cyc::zero(); l];
    for (k, slot) in num.iter_mut().enumerate() {
        for j in 0..=k.min(c.len() - 1) {
            *slot = slot.add(&c[j].mul(&coeffs[k - j]));
        }
    }
    let r = LaurentRational::new(base, LPoly::from_coeffs(0, num), LPoly::from_coeffs(0, c))?;
    let s = r.series(n - 1)?;
    if s.as_slice() != coeffs {
        return Err(Error::Verification("recovered rational function misses a coefficient".into()));
    }
    Ok(r)
}

fn ident(ctx: &FieldContext) -> Gl2 {
    Mat2::new(ctx.f(1), ctx.f(0), ctx.f(0), ctx.f(1))
}

fn one_o2(ctx: &FieldContext) -> Result<SchwartzFn> {
    SchwartzFn::tensor(&SchwartzFn::ball_f(ctx, 0), &SchwartzFn::ball_f(ctx, 0))
}

/// `vol(E¹ ∖ O_E^×) = 1 − q^{-2}` for `vol(O_E^×) = 1 − q^{-2}`, `vol(E¹) = 1`.
pub fn vol_e1_quotient(ctx: &FieldContext) -> Cyc {
    Cyc::one().sub(&qc(ctx.p, -2))
}

/// The constant in `Ψ = c·L_E(s, μην) L_E(s, μην^{-1})` for spherical data.
pub fn unram_constant(ctx: &FieldContext) -> Cyc {
    vol_e1_quotient(ctx).mul(&Cyc::one().sub(&qc(ctx.p, -1)))
}

/// Casselman–Shalika on `U(1,1)`: `W(t(a)) = 0` for `|a|_E > 1`, otherwise
/// `|p^n|(ν^n − ν^{-n-1}) / (1 − ν^{-1})` with `n = v(a)`.
pub fn cs_whittaker(ctx: &FieldContext, nu: &Cyc, a: &ExtNumber) -> Result<Cyc> {
    if nu.is_one() {
        return Err(Error::Invalid("ν(p) = 1 is a pole of the Casselman–Shalika formula".into()));
    }
    if a.is_zero() {
        return Err(Error::Invalid("a must be nonzero".into()));
    }
    let n = a.v as i64;
    if n < 0 {
        return Ok(Cyc::zero());
    }
    let num = nu.pow(n)?.sub(&nu.pow(-n - 1)?);
    let den = Cyc::one().sub(&nu.inv()?);
    Ok(num.div(&den)?.mul(&qc(ctx.p, -n)))
}

/// The same value with `ν` symbolic (variable 0 of `nvars`): `q^{-n} Σ_{|j| ≤ n} ν^j`.
pub fn cs_whittaker_sym(ctx: &FieldContext, nvars: usize, n: i32) -> SymPoly {
    if n < 0 {
        return SymPoly::zero(nvars);
    }
    let mut s = SymPoly::zero(nvars);
    for j in -n..=n {
        s = s.add(&SymPoly::var(nvars, 0, j));
    }
    s.scale(&qpow(ctx.p, -(n as i64)))
}

/// `W_σ(t(p^n)) = (ω_{μ,ψ^{-1}}(t(p^n)) 1_{O_E})(1)`, computed in the Weil
/// representation.
pub fn weil_sph_whittaker(ctx: &FieldContext, mu: &MultChar, n: i32) -> Result<Cyc> {
    let grp = crate::character::NormOneGroup::new(ctx, 1)?;
    let rep = WeilU11::new(mu.clone(), -1, NormOneChar::trivial(grp));
    let phi = SchwartzFn::ball_e(ctx, 0)?;
    let a = ExtNumber::new(ctx.p, ctx.prec, ctx.omega, n, 1, 0);
    rep.act_t(&a, &phi)?.eval_e(&ctx.e(1, 0))
}

/// Casselman–Shalika on `GL₂` with Satake parameters `(α₁, α₂)`:
/// `W(t(p^n)) = q^{-n/2} Σ_{j=0}^{n} α₁^j α₂^{n-j}`.
pub fn cs_whittaker_gl2(ctx: &FieldContext, alpha: &(Cyc, Cyc), n: i32) -> Result<Cyc> {
    if n < 0 {
        return Ok(Cyc::zero());
    }
    let mut s = Cyc::zero();
    for j in 0..=n as i64 {
        s = s.add(&alpha.0.pow(j)?.mul(&alpha.1.pow(n as i64 - j)?));
    }
    Ok(s.mul(&Cyc::sqrt_prime_power(ctx.p, -(n as i64))))
}

/// The two computations of the unramified `U(1,1)` zeta integral.
#[derive(Clone, Debug)]
pub struct UnramZeta {
    /// `vol(E¹∖O_E^×) · f(s, 1) · Σ_n W_π W_σ η(p)^n |p^n|_E^{s−1}` from shell sums.
    pub direct: LaurentRational,
    /// `c · L_E(s, μην) L_E(s, μην^{-1})`.
    pub closed: LaurentRational,
    pub direct_series: Vec<Cyc>,
    pub closed_series: Vec<Cyc>,
    pub constant: Cyc,
}

impl UnramZeta {
    pub fn matches(&self) -> bool {
        self.direct.eq_exact(&self.closed) && self.direct_series == self.closed_series
    }
}

fn require_unramified_e(c: &MultChar, what: &str) -> Result<()> {
    if c.side != Side::E || !c.is_unramified() {
        return Err(Error::Invalid(format!("{what} must be an unramified character of E^×")));
    }
    Ok(())
}

/// Unramified `U(1,1)` zeta integral with Satake value `ν`, `μ(p) = −1`.
pub fn unram_zeta_u11(ctx: &FieldContext, nu: &Cyc, mu: &MultChar, eta: &MultChar, order: usize) -> Result<UnramZeta> {
    ctx.require_unramified()?;
    require_unramified_e(mu, "μ")?;
    require_unramified_e(eta, "η")?;
    if mu.at_p != Cyc::from_int(-1) {
        return Err(Error::Invalid("the unramified calculation needs μ(p) = −1".into()));
    }
    let qe = ctx.p * ctx.p;
    let terms = (order + 1).max(16);
    let mut torus = Vec::with_capacity(terms);
    for n in 0..terms as i32 {
        let a = ExtNumber::new(ctx.p, ctx.prec, ctx.omega, n, 1, 0);
        let w = cs_whittaker(ctx, nu, &a)?.mul(&weil_sph_whittaker(ctx, mu, n)?);
        // η(p^n)|p^n|_E^{-1}; the X_E^n is the position
        torus.push(w.mul(&eta.at_p.pow(n as i64)?).mul(&qc(ctx.p, 2 * n as i64)));
    }
    let torus = rational_from_series(qe, &torus)?;
    let f1 = z_section(ctx, SVar::u11(ctx), &ident(ctx), &one_o2(ctx)?, eta)?;
    let direct = torus.mul(&f1).scale(&vol_e1_quotient(ctx));
    let t = mu.at_p.mul(&eta.at_p);
    let constant = unram_constant(ctx);
    let closed = LaurentRational::geometric(qe, t.mul(nu), 1)
        .mul(&LaurentRational::geometric(qe, t.mul(&nu.inv()?), 1))
        .scale(&constant);
    Ok(UnramZeta {
        direct_series: direct.series(order)?,
        closed_series: closed.series(order)?,
        direct,
        closed,
        constant,
    })
}

/// Fully symbolic run in `(ν, η(p))`: the truncated direct series times
/// `(1 − μ(p)ην X)(1 − μ(p)ην^{-1} X)` must equal the constant `c` up to `X^order`.
pub fn unram_zeta_u11_symbolic(ctx: &FieldContext, mu: &MultChar, order: usize) -> Result<(SymSeries, bool)> {
    ctx.require_unramified()?;
    require_unramified_e(mu, "μ")?;
    let nv = 2;
    let rq = |c: &Cyc| c.as_rational().ok_or_else(|| Error::Invalid("expected a rational value".into()));
    let eta_sym = |k: i32| SymPoly::var(nv, 1, k);
    let mut torus = SymSeries::zero(nv, order);
    for n in 0..=order as i32 {
        let ws = rq(&weil_sph_whittaker(ctx, mu, n)?)?;
        let c = cs_whittaker_sym(ctx, nv, n).mul(&eta_sym(n)).scale(&ws).scale(&qpow(ctx.p, 2 * n as i64));
        torus.c[n as usize] = c;
    }
    let triv = MultChar::trivial(ctx, Side::E)?;
    let mut f1 = SymSeries::zero(nv, order);
    for (v, val) in z_section_shells(ctx, &ident(ctx), &one_o2(ctx)?, &triv, (0, order as i32))? {
        f1.c[v as usize] = eta_sym(v).scale(&rq(&val)?);
    }
    let vol = SymPoly::constant(nv, rq(&vol_e1_quotient(ctx))?);
    let direct = torus.mul(&f1).scale(&vol);
    let m = rq(&mu.at_p)?;
    let lin = |k: i32| {
        let mut s = SymSeries::constant(SymPoly::one(nv), order);
        s.c[1] = SymPoly::monomial(-m.clone(), vec![k, 1]);
        s
    };
    let crossed = direct.mul(&lin(1)).mul(&lin(-1));
    let c = SymPoly::constant(nv, rq(&unram_constant(ctx))?);
    let ok = crossed.c[0] == c && crossed.c[1..].iter().all(|x| x.is_zero());
    Ok((direct, ok))
}

/// `γ`, `L`, `L*` and `ε` for unramified `U(1,1)` data.
#[derive(Clone, Debug)]
pub struct UnramGamma {
    pub gamma: GammaFactor,
    pub from_l_ratio: GammaFactor,
    pub l: LaurentRational,
    pub l_star: LaurentRational,
    pub epsilon: LaurentRational,
}

fn spherical_fourier_check(ctx: &FieldContext) -> Result<()> {
    let phi = one_o2(ctx)?;
    if !phi.fourier2(None)?.same_as(&phi)? {
        return Err(Error::Verification("the Fourier transform of 1_{O²} is not 1_{O²}".into()));
    }
    Ok(())
}

/// `γ = Ψ(1−s, Φ̂, η*) / Ψ(s, Φ, η)` for spherical `U(1,1)` data, with
/// `η*(a) = η(ā)^{-1}`.
pub fn gamma_from_fe_u11_unram(ctx: &FieldContext, nu: &Cyc, mu: &MultChar, eta: &MultChar) -> Result<UnramGamma> {
    spherical_fourier_check(ctx)?;
    let eta_star = MultChar::unramified(ctx, Side::E, eta.at_p.inv()?)?;
    let z = unram_zeta_u11(ctx, nu, mu, eta, 12)?;
    let zs = unram_zeta_u11(ctx, nu, mu, &eta_star, 12)?;
    if z.direct.is_zero() {
        return Err(Error::DivisionByZero);
    }
    let value = zs.direct.dualize().div(&z.direct)?;
    let l = l_extract(std::slice::from_ref(&z.direct))?;
    let l_star = l_extract(std::slice::from_ref(&zs.direct))?;
    let eps = epsilon(&value, &l, &l_star)?;
    let params = format!("U11 ν={nu} η(p)={} μ(p)={}", eta.at_p, mu.at_p);
    Ok(UnramGamma {
        gamma: GammaFactor { value, provenance: Provenance::DirectFe, params: params.clone() },
        from_l_ratio: GammaFactor {
            value: l_star.dualize().div(&l)?,
            provenance: Provenance::UnramifiedLRatio,
            params,
        },
        l,
        l_star,
        epsilon: eps,
    })
}

/// `Ψ(s, W, θ, Φ, η₁)` for spherical `W` (Satake `α`), `θ` the spherical
/// Whittaker function of `ω_{ψ^{-1},χ}` on `1_{O²}`, `Φ = 1_{O²}`:
/// `∫_{F^×} W θ η₁(a)|a|^{s−1} d*a · f(s, 1, Φ, (η₁, η₂))`.
pub fn sph_zeta_gl2(ctx: &FieldContext, alpha: &(Cyc, Cyc), chi: &MultChar, eta1: &MultChar, eta2: &MultChar) -> Result<LaurentRational> {
    for c in [chi, eta1, eta2] {
        if c.side != Side::F || !c.is_unramified() {
            return Err(Error::Unsupported("the Iwasawa route needs unramified characters of F^×".into()));
        }
    }
    let omega = MultChar::unramified(ctx, Side::F, alpha.0.mul(&alpha.1))?;
    if !check_compat_gl2(ctx, &omega, chi, eta1, eta2)? {
        return Err(Error::Invalid("ω_π χ η₁ η₂ ≠ 1".into()));
    }
    let rep = WeilGl2::new(-1, WKernel::Derived, chi.clone());
    let phi = one_o2(ctx)?;
    let unit_vol = Cyc::one().sub(&qc(ctx.p, -1));
    let mut torus = Vec::new();
    for n in 0..16 {
        let a = Padic::p_pow(ctx.p, ctx.prec, n);
        let th = rep.whittaker_torus(ctx, &phi, &a)?;
        let w = cs_whittaker_gl2(ctx, alpha, n)?;
        torus.push(w.mul(&th).mul(&eta1.at_p.pow(n as i64)?).mul(&qc(ctx.p, n as i64)).mul(&unit_vol));
    }
    let torus = rational_from_series(ctx.p, &torus)?;
    Ok(torus.mul(&flat_section_gl2(ctx, &ident(ctx), &phi, eta1, eta2)?))
}

fn unit_of(ctx: &FieldContext, c: &MultChar) -> Result<MultChar> {
    c.lift(ctx, c.level())
}

/// `γ(s, π, ω_{ψ^{-1},χ}, η₁)` from the functional equation on spherical data:
/// `Ψ(1−s, W, θ, Φ̂, η₂) / Ψ(s, W, θ, Φ, η₁)` with `η₂ = (ω_π χ η₁)^{-1}`.
pub fn gamma_from_fe_gl2(ctx: &FieldContext, alpha: &(Cyc, Cyc), chi: &MultChar, eta1: &MultChar) -> Result<GammaFactor> {
    spherical_fourier_check(ctx)?;
    let omega = MultChar::unramified(ctx, Side::F, alpha.0.mul(&alpha.1))?;
    let eta2 = crate::character::solve_eta2(ctx, &omega, chi, eta1)?;
    let z = sph_zeta_gl2(ctx, alpha, chi, eta1, &eta2)?;
    let zs = sph_zeta_gl2(ctx, alpha, chi, &eta2, eta1)?;
    if z.is_zero() {
        return Err(Error::DivisionByZero);
    }
    Ok(GammaFactor {
        value: zs.dualize().div(&z)?.reduce()?,
        provenance: Provenance::DirectFe,
        params: format!("GL2 α=({}, {}) χ={} η₁={}", alpha.0, alpha.1, chi.id(), eta1.id()),
    })
}

/// `γ(s, π⊗η₁) γ(s, π⊗χη₁)` for `π = π(ν₁, ν₂)` unramified with Satake
/// values `α`, as a product of four Tate γ-factors.
pub fn gamma_mult(ctx: &FieldContext, alpha: &(Cyc, Cyc), chi: &MultChar, eta1: &MultChar) -> Result<GammaFactor> {
    if chi.is_unramified() && (chi.at_p == qc(ctx.p, -1) || chi.at_p == qc(ctx.p, 1)) {
        return Err(Error::Invalid("χ = |·|^{±1}: the Weil representation is reducible".into()));
    }
    let chi_eta = chi.mul_char(ctx, eta1)?;
    let mut value = LaurentRational::one(ctx.p);
    for a in [&alpha.0, &alpha.1] {
        for base in [eta1, &chi_eta] {
            let c = unit_of(ctx, base)?.with_at_p(base.at_p.mul(a))?;
            value = value.mul(&tate_gamma(ctx, &c)?.value);
        }
    }
    Ok(GammaFactor {
        value: value.reduce()?,
        provenance: Provenance::Multiplicativity,
        params: format!("GL2 α=({}, {}) χ={} η₁={}", alpha.0, alpha.1, chi.id(), eta1.id()),
    })
}

/// A Whittaker function: spherical (Casselman–Shalika) or realized by a
/// vector of a Weil representation.
#[derive(Clone, Debug)]
pub enum WhittakerDatum {
    SphericalU11 { nu: Cyc },
    SphericalGl2 { alpha: (Cyc, Cyc) },
    Gl2 { rep: WeilGl2, vec: SchwartzFn },
    U11 { rep: WeilU11, vec: SchwartzFn },
}

/// Section data: `η` on `E^×`, or `(η₁, η₂)` on `T ⊂ GL₂`.
#[derive(Clone, Debug)]
pub enum SectionData {
    U11 { eta: MultChar },
    Gl2 { eta1: MultChar, eta2: MultChar },
}

/// Discretization of the cell `N T N̄`: `x` runs over `P^{x_support} / P^{x_mesh}`
/// and `v(a)` over `shells`, closed by a certified geometric tail.
#[derive(Clone, Copy, Debug)]
pub struct Cell {
    pub x_support: i32,
    pub x_mesh: i32,
    pub shells: (i32, i32),
}

/// `Ψ = ∫∫ W(t(a)n̄(x)) θ(t(a)n̄(x)) η₁(a)|a|^{s−1} f(s, n̄(x), Φ, η) dx d*a`
/// over the cell, with `dh = |a|^{-1} dy d*a dx`.
pub fn zeta_cell(
    ctx: &FieldContext,
    w: &WhittakerDatum,
    theta: &WhittakerDatum,
    phi: &SchwartzFn,
    sec: &SectionData,
    cell: &Cell,
) -> Result<LaurentRational> {
    if cell.x_mesh < cell.x_support {
        return Err(Error::Invalid("x mesh coarser than the support".into()));
    }
    let count = crate::ring::ipow(ctx.p, (cell.x_mesh - cell.x_support) as u32);
    let xs: Vec<Padic> = (0..count).map(|j| Padic::new(ctx.p, ctx.prec, cell.x_support, j as i64)).collect();
    let dx = qc(ctx.p, -(cell.x_mesh as i64));
    match (w, theta, sec) {
        (
            WhittakerDatum::Gl2 { rep: rw, vec: v },
            WhittakerDatum::Gl2 { rep: rt, vec: t },
            SectionData::Gl2 { eta1, eta2 },
        ) => {
            if rw.sign != 1 || rt.sign != -1 {
                return Err(Error::Invalid("W must be ψ-generic and θ ψ^{-1}-generic".into()));
            }
            if !check_compat_gl2(ctx, &rw.chi, &rt.chi, eta1, eta2)? {
                return Err(Error::Invalid("ω_π χ η₁ η₂ ≠ 1".into()));
            }
            let mut total = LaurentRational::zero(ctx.p);
            for x in &xs {
                let f = flat_section_gl2(ctx, &gl2_nbar(x), phi, eta1, eta2)?;
                if f.is_zero() {
                    continue;
                }
                let vx = rw.act_nbar(x, v)?;
                let tx = rt.act_nbar(x, t)?;
                total = total.add(&f.mul(&torus_gl2(ctx, rw, &vx, rt, &tx, eta1, cell.shells)?));
            }
            Ok(total.scale(&dx))
        }
        (
            WhittakerDatum::U11 { rep: rw, vec: v },
            WhittakerDatum::U11 { rep: rt, vec: t },
            SectionData::U11 { eta },
        ) => {
            if rw.sign != 1 || rt.sign != -1 {
                return Err(Error::Invalid("W must be ψ-generic and θ ψ^{-1}-generic".into()));
            }
            let lvl = [rw.chi.level(), rt.chi.level(), rw.mu.level(), eta.level(), 1].into_iter().max().unwrap();
            let omega = rw.mu.restrict_e1(ctx, lvl)?.lift(ctx, lvl)?.mul(&rw.chi.lift(ctx, lvl)?)?;
            if !check_compat(ctx, &omega, &rt.mu, &rt.chi, eta)? {
                return Err(Error::Invalid("ω_π μ χ η is not trivial on E¹".into()));
            }
            let mut total = LaurentRational::zero(ctx.p * ctx.p);
            for x in &xs {
                let f = flat_section_u11(ctx, &u11_nbar(ctx, x), phi, eta)?;
                if f.is_zero() {
                    continue;
                }
                let vx = rw.act_nbar(x, v)?;
                let tx = rt.act_nbar(x, t)?;
                if vx.gamma + tx.gamma != 0 {
                    return Err(Error::Unsupported("the integrand carries a power of γ_ψ".into()));
                }
                total = total.add(&f.mul(&torus_u11(ctx, rw, &vx, rt, &tx, eta, cell.shells)?));
            }
            Ok(total.scale(&dx))
        }
        (WhittakerDatum::SphericalU11 { .. } | WhittakerDatum::SphericalGl2 { .. }, _, _)
        | (_, WhittakerDatum::SphericalU11 { .. } | WhittakerDatum::SphericalGl2 { .. }, _) => Err(
            Error::Unsupported("spherical data go through the Iwasawa route (unram_zeta_u11, sph_zeta_gl2)".into()),
        ),
        _ => Err(Error::Invalid("Whittaker data and section belong to different groups".into())),
    }
}

fn f_unit_level(phi: &SchwartzFn) -> i64 {
    phi.levels.iter().map(|l| (l.m + l.n) as i64).min().unwrap_or(1)
}

/// `Σ_v X^v q^v ∫_{p^v O^×} W(t(a)) θ(t(a)) η₁(a) d*a` on `GL₂`.
fn torus_gl2(
    ctx: &FieldContext,
    rw: &WeilGl2,
    v: &SchwartzFn,
    rt: &WeilGl2,
    t: &SchwartzFn,
    eta1: &MultChar,
    shells: (i32, i32),
) -> Result<LaurentRational> {
    let k = [
        f_unit_level(v),
        f_unit_level(t),
        rw.chi.level() as i64,
        rt.chi.level() as i64,
        eta1.level() as i64,
        1,
    ]
    .into_iter()
    .max()
    .unwrap() as u32;
    let shell = |s: i32| -> Result<Cyc> {
        let val = int_shell(ctx, s, k, |a| {
            let w = rw.whittaker_torus(ctx, v, a)?;
            if w.is_zero() {
                return Ok(w);
            }
            let th = rt.whittaker_torus(ctx, t, a)?;
            if th.is_zero() {
                return Ok(th);
            }
            Ok(w.mul(&th).mul(&eta1.eval_f(a)?))
        })?;
        Ok(val.mul(&qc(ctx.p, s as i64)))
    };
    if !shell(shells.0 - 1)?.is_zero() {
        return Err(Error::Verification(format!("integrand is nonzero below shell {}", shells.0)));
    }
    let ratio = eta1.eval_f(&Padic::p_pow(ctx.p, ctx.prec, 1))?;
    int_mult(ctx, ctx.p, 1, shells, Some(ratio), shell)
}

/// `Σ_v X_E^v q_E^v ∫_{p^v O_E^×} W(t(a)) θ(t(a)) η(a) d*a` on `U(1,1)`; the
/// integrand is `E¹`-invariant, and `vol(E¹) = 1`.
fn torus_u11(
    ctx: &FieldContext,
    rw: &WeilU11,
    v: &SchwartzFn,
    rt: &WeilU11,
    t: &SchwartzFn,
    eta: &MultChar,
    shells: (i32, i32),
) -> Result<LaurentRational> {
    let k = [
        f_unit_level(v),
        f_unit_level(t),
        rw.mu.level() as i64,
        rt.mu.level() as i64,
        eta.level() as i64,
        1,
    ]
    .into_iter()
    .max()
    .unwrap() as u32;
    let ring = ctx.galois_ring(k);
    let units = ring.units();
    let shell = |s: i32| -> Result<Cyc> {
        let mut acc = Cyc::zero();
        for &u in &units {
            let a = ExtNumber::from_residue(ctx.p, ctx.prec, ctx.omega, s, u);
            let w = v.eval_e(&a)?;
            if w.is_zero() {
                continue;
            }
            let th = t.eval_e(&a)?;
            if th.is_zero() {
                continue;
            }
            let c = rw.mu.eval_e(&a)?.mul(&rt.mu.eval_e(&a)?).mul(&eta.eval_e(&a)?);
            acc = acc.add(&w.mul(&th).mul(&c));
        }
        // |a|_E^{1/2} twice from the torus action and |a|_E^{-1} from the measure cancel
        Ok(acc.mul(&qc(ctx.p, -2 * k as i64)))
    };
    if !shell(shells.0 - 1)?.is_zero() {
        return Err(Error::Verification(format!("integrand is nonzero below shell {}", shells.0)));
    }
    let ratio = rw.mu.at_p.mul(&rt.mu.at_p).mul(&eta.at_p);
    int_mult(ctx, ctx.p * ctx.p, 1, shells, Some(ratio), shell)
}

/// A cell zeta integral of Howe data together with its predicted constant.
#[derive(Clone, Debug)]
pub struct HoweZeta {
    pub m: i32,
    pub i: i32,
    pub l: i32,
    pub value: LaurentRational,
    pub expected: Cyc,
    pub eta: Vec<String>,
}

impl HoweZeta {
    pub fn matches(&self) -> bool {
        self.value.eq_exact(&LaurentRational::from_cyc(self.value.base, self.expected.clone()))
    }
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "m": self.m, "i": self.i, "l": self.l,
            "value": self.value.to_json(),
            "expected": crate::scalar::cyc_json(&self.expected),
            "eta": self.eta,
            "match": self.matches(),
        })
    }
}

/// `GL₂`: `W` from the Howe vector of `ω_{ψ,1}`, `θ` the `ψ^{-1}`-Whittaker
/// function of `φ^m` in `ω_{ψ^{-1},χ}`, `Φ = Φ_{i,l}`, `η₂ = (χη₁)^{-1}`.
pub fn howe_zeta_gl2(ctx: &FieldContext, m: i32, i: i32, chi: &MultChar, eta1: &MultChar, extra_mesh: i32) -> Result<HoweZeta> {
    let rw = WeilGl2::new(1, WKernel::Derived, MultChar::trivial(ctx, Side::F)?);
    let seed = crate::schwartz::make_phi_m(ctx, 1)?.scale(&qc(ctx.p, 1));
    let v = crate::weil::howe_vector_gl2(ctx, &rw, &seed, m)?;
    let rt = WeilGl2::new(-1, WKernel::Derived, chi.clone());
    let t = crate::schwartz::make_phi_m(ctx, m)?;
    let eta2 = crate::character::solve_eta2(ctx, &rw.chi, chi, eta1)?;
    let l = (eta1.mul_char(ctx, &eta2.inverse()?)?.degree as i32).max(1);
    let phi = crate::schwartz::make_phi_il(ctx, i, l)?;
    let cell = Cell { x_support: i, x_mesh: i + extra_mesh, shells: (-2, 3) };
    let value = zeta_cell(
        ctx,
        &WhittakerDatum::Gl2 { rep: rw, vec: v },
        &WhittakerDatum::Gl2 { rep: rt, vec: t },
        &phi,
        &SectionData::Gl2 { eta1: eta1.clone(), eta2: eta2.clone() },
        &cell,
    )?
    .reduce()?;
    Ok(HoweZeta {
        m,
        i,
        l,
        value,
        expected: qc(ctx.p, -(l + i + 2 * m) as i64),
        eta: vec![eta1.id(), eta2.id()],
    })
}

/// The least-degree character `η` of `E^×` (unramified at `p`) with
/// `ω_π μ χ η = 1` on `E¹`, up to degree `max_degree`.
pub fn find_eta_u11(
    ctx: &FieldContext,
    omega_pi: &NormOneChar,
    mu: &MultChar,
    chi: &NormOneChar,
    max_degree: u32,
) -> Result<MultChar> {
    let grp = crate::character::UnitGroup::new(ctx, Side::E, max_degree.max(1))?;
    let mut cands = crate::character::enumerate_chars(&grp, max_degree, &Cyc::one())?;
    cands.sort_by_key(|c| c.degree);
    for c in cands {
        if check_compat(ctx, omega_pi, mu, chi, &c)? {
            return Ok(c);
        }
    }
    Err(Error::Invalid(format!("no compatible η of degree ≤ {max_degree}")))
}

/// `U(1,1)`: `W` from the Howe vector of `ω_{μ,ψ,1}`, `θ` from `φ^{m,χ}` in
/// `ω_{μ,ψ^{-1},χ}`, `μ` unramified with `μ(p) = −1`, `Φ = Φ_{i,l}`, `l = deg η`.
pub fn howe_zeta_u11(ctx: &FieldContext, m: i32, i: i32, chi: &NormOneChar, extra_mesh: i32) -> Result<HoweZeta> {
    let mu = MultChar::unramified(ctx, Side::E, Cyc::from_int(-1))?;
    let triv = NormOneChar::trivial(crate::character::NormOneGroup::new(ctx, 1)?);
    let rw = WeilU11::new(mu.clone(), 1, triv.clone());
    let seed = crate::schwartz::make_phi_m_chi(ctx, 1, &triv)?;
    let v = crate::weil::howe_vector_u11(ctx, &rw, &seed, m)?;
    let rt = WeilU11::new(mu.clone(), -1, chi.clone());
    let t = crate::schwartz::make_phi_m_chi(ctx, m as u32, chi)?;
    let eta = find_eta_u11(ctx, &triv, &mu, chi, m as u32)?;
    let l = (eta.degree as i32).max(1);
    let phi = crate::schwartz::make_phi_il(ctx, i, l)?;
    let cell = Cell { x_support: i, x_mesh: i + extra_mesh, shells: (-2, 3) };
    let value = zeta_cell(
        ctx,
        &WhittakerDatum::U11 { rep: rw, vec: v },
        &WhittakerDatum::U11 { rep: rt, vec: t },
        &phi,
        &SectionData::U11 { eta: eta.clone() },
        &cell,
    )?
    .reduce()?;
    let expected = qc(ctx.p, -(l + i + 2 * m) as i64).mul(&Cyc::from_int(ctx.p as i64 + 1)).mul(&qc(ctx.p, (m - 1) as i64));
    Ok(HoweZeta { m, i, l, value, expected, eta: vec![eta.id()] })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::character::{enumerate_chars, enumerate_norm_one_chars, NormOneGroup, UnitGroup};
    use crate::ring::{make_context, ExtKind};
    use crate::schwartz::make_phi_il;
    use crate::weil::{gl2_n, gl2_w, u11_n, u11_w};
    use proptest::prelude::*;

    fn c3() -> FieldContext {
        make_context(3, 10, ExtKind::Unramified).unwrap()
    }
    fn pa(v: i32, n: i64) -> Padic {
        Padic::new(3, 10, v, n)
    }
    fn xs() -> Vec<Padic> {
        let mut v = vec![Padic::zero(3, 10)];
        for k in -3..=5 {
            v.push(pa(k, 1));
            v.push(pa(k, 2));
            v.push(pa(k, 5));
        }
        v
    }
    fn f_chars(c: &FieldContext, deg: u32) -> Vec<MultChar> {
        let g = UnitGroup::new(c, Side::F, deg).unwrap();
        let mut out = Vec::new();
        for ch in enumerate_chars(&g, deg, &Cyc::one()).unwrap() {
            out.push(ch.with_at_p(Cyc::from_int(-1)).unwrap());
            out.push(ch);
        }
        out
    }
    fn e_chars(c: &FieldContext, deg: u32) -> Vec<MultChar> {
        let g = UnitGroup::new(c, Side::E, deg).unwrap();
        enumerate_chars(&g, deg, &Cyc::from_int(2)).unwrap()
    }

    #[test]
    fn gl2_sections_match_closed_forms() {
        let c = c3();
        for i in 1..=4 {
            for l in 1..=2 {
                let phi = make_phi_il(&c, i, l).unwrap();
                let phih = phi.fourier2(None).unwrap();
                for eta1 in f_chars(&c, l as u32).iter().take(4) {
                    for eta2 in f_chars(&c, l as u32).iter().step_by(3).take(3) {
                        let xi = eta1.mul_char(&c, &eta2.inverse().unwrap()).unwrap();
                        if (xi.degree as i32) > l {
                            continue;
                        }
                        for x in xs() {
                            let a = flat_section_gl2(&c, &gl2_nbar(&x), &phi, eta1, eta2).unwrap();
                            assert!(a.eq_exact(&section_nbar_closed(&c, SVar::gl2(&c), i, l, &x)), "n̄ i={i} l={l} x={x:?}");
                            let h = gl2_w(&c).mul(&gl2_n(&x));
                            let b = flat_section_gl2(&c, &h, &phih, eta2, eta1).unwrap().dualize();
                            let want = section_wn_closed(&c, SVar::gl2(&c), i, l, &xi, &x).unwrap();
                            assert!(b.eq_exact(&want), "wn i={i} l={l} x={x:?}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn u11_sections_match_closed_forms() {
        let c = c3();
        for i in 1..=3 {
            for l in 1..=2 {
                let phi = make_phi_il(&c, i, l).unwrap();
                let phih = phi.fourier2(None).unwrap();
                for eta in e_chars(&c, l as u32).iter().step_by(5).take(5) {
                    let xi = eta.restrict_f(&c).unwrap();
                    if (xi.degree as i32) > l {
                        continue;
                    }
                    let star = eta.conj_inverse(&c).unwrap();
                    for x in xs() {
                        let a = flat_section_u11(&c, &u11_nbar(&c, &x), &phi, eta).unwrap();
                        assert!(a.eq_exact(&section_nbar_closed(&c, SVar::u11(&c), i, l, &x)));
                        let h = u11_w(&c).mul(&u11_n(&c, &x));
                        let b = flat_section_u11(&c, &h, &phih, &star).unwrap().dualize();
                        let want = section_wn_closed(&c, SVar::u11(&c), i, l, &xi, &x).unwrap();
                        assert!(b.eq_exact(&want), "wn i={i} l={l} x={x:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn sections_are_b_equivariant() {
        let c = c3();
        let phi = make_phi_il(&c, 2, 1).unwrap();
        let eta = &e_chars(&c, 1)[3];
        let h = u11_nbar(&c, &pa(1, 2)).mul(&u11_n(&c, &pa(-1, 1)));
        let base = flat_section_u11(&c, &h, &phi, eta).unwrap();
        for (v, u) in [(0, (1u64, 1u64)), (1, (2, 0)), (-1, (1, 2))] {
            let a = ExtNumber::from_residue(3, 10, c.omega, v, u);
            let b = u11_n(&c, &pa(0, 4));
            let g = b.mul(&u11_t(&a).unwrap()).mul(&h);
            let got = flat_section_u11(&c, &g, &phi, eta).unwrap();
            let factor = LaurentRational::monomial(9, eta.eval_e(&a).unwrap(), v);
            assert!(got.eq_exact(&base.mul(&factor)));
        }
        let (e1, e2) = (&f_chars(&c, 1)[1], &f_chars(&c, 1)[2]);
        let g0 = gl2_nbar(&pa(2, 1));
        let base = flat_section_gl2(&c, &g0, &phi, e1, e2).unwrap();
        let (a1, a2) = (pa(1, 2), pa(-1, 4));
        let g = gl2_n(&pa(0, 7)).mul(&crate::weil::gl2_t(&a1, &a2)).mul(&g0);
        let got = flat_section_gl2(&c, &g, &phi, e1, e2).unwrap();
        // η₁(a₁)η₂(a₂)|a₁/a₂|^s
        let f = e1.eval_f(&a1).unwrap().mul(&e2.eval_f(&a2).unwrap());
        assert!(got.eq_exact(&base.mul(&LaurentRational::monomial(3, f, a1.v - a2.v))));
    }

    #[test]
    fn tate_gamma_unramified_and_ramified() {
        let c = c3();
        for t in [Cyc::one(), Cyc::from_int(-1), Cyc::from_int(2)] {
            let eta = MultChar::unramified(&c, Side::F, t.clone()).unwrap();
            let g = tate_gamma(&c, &eta).unwrap();
            let num = LaurentRational::from_poly(3, LPoly::constant(Cyc::one()).sub(&LPoly::monomial(t.clone(), 1)));
            let den = LaurentRational::from_poly(
                3,
                LPoly::constant(Cyc::one()).sub(&LPoly::monomial(t.inv().unwrap().mul(&qc(3, -1)), -1)),
            );
            assert!(g.value.eq_exact(&num.div(&den).unwrap()));
            assert!(g.probes.len() >= 3);
        }
        for eta in f_chars(&c, 2).into_iter().filter(|e| e.degree > 0) {
            let g = tate_gamma(&c, &eta).unwrap();
            // ramified: a monomial, and γ(s, η) γ(1−s, η^{-1}) = η(−1)
            let (_, k) = g.value.as_monomial().expect("monomial");
            assert_eq!(k, eta.degree as i32);
            let gi = tate_gamma(&c, &eta.inverse().unwrap()).unwrap();
            let prod = g.value.mul(&gi.value.dualize());
            assert!(prod.eq_exact(&LaurentRational::from_cyc(3, eta.eval_f(&c.f(-1)).unwrap())));
        }
    }

    #[test]
    fn transform_laws() {
        let c = c3();
        let eta = &e_chars(&c, 1)[2];
        let g = GammaFactor { value: LaurentRational::geometric(9, Cyc::from_int(2), 1), provenance: Provenance::DirectFe, params: String::new() };
        let (b, b2) = (pa(1, 2), pa(-2, 5));
        let one = gamma_transform(&c, &gamma_transform(&c, &g, eta, &PsiRule::ShiftB(b)).unwrap(), eta, &PsiRule::ShiftB(b2)).unwrap();
        let two = gamma_transform(&c, &g, eta, &PsiRule::ShiftB(b.mul(&b2))).unwrap();
        assert!(one.same_value(&two));
        assert_eq!(one.provenance, Provenance::Transformed);
        let kappa = pa(1, 1);
        let kk = gamma_transform(&c, &gamma_transform(&c, &g, eta, &PsiRule::Kappa(kappa)).unwrap(), eta, &PsiRule::Kappa(kappa)).unwrap();
        let ns = gamma_transform(&c, &g, eta, &PsiRule::NormShift(ExtNumber::from_f(&kappa, c.omega))).unwrap();
        assert!(kk.same_value(&ns));
        assert!(gamma_transform(&c, &g, eta, &PsiRule::Kappa(pa(2, 1))).is_err());
        // a unit shift leaves γ alone up to η(b)
        let u = gamma_transform(&c, &g, eta, &PsiRule::ShiftB(pa(0, 1))).unwrap();
        assert!(u.same_value(&g));
    }

    #[test]
    fn l_extraction() {
        let q = 9;
        let l1 = LaurentRational::geometric(q, Cyc::from_int(2), 1);
        let l2 = LaurentRational::geometric(q, Cyc::from_int(3), 1);
        let fam = vec![
            l1.scale(&Cyc::from_int(5)),
            l1.mul(&l2).scale(&Cyc::from_int(-1)),
            LaurentRational::monomial(q, Cyc::one(), 2),
        ];
        assert!(l_extract(&fam).unwrap().eq_exact(&l1.mul(&l2)));
        assert!(l_extract(&[]).is_err());
        let bad = LaurentRational::from_poly(q, LPoly::constant(Cyc::one()).sub(&LPoly::monomial(Cyc::from_int(2), 1)));
        assert!(l_extract(&[bad]).is_err());
    }

    #[test]
    fn rational_recovery() {
        let r = LaurentRational::geometric(3, Cyc::from_int(2), 1)
            .mul(&LaurentRational::geometric(3, Cyc::from_ratio(1, 3), 1))
            .scale(&Cyc::from_int(7));
        let s = r.series(12).unwrap();
        assert!(rational_from_series(3, &s).unwrap().eq_exact(&r));
        assert!(rational_from_series(3, &s[..4]).is_err());
    }

    #[test]
    fn unramified_u11_zeta_matches_closed_form() {
        let c = c3();
        let mu = MultChar::unramified(&c, Side::E, Cyc::from_int(-1)).unwrap();
        for nu in [Cyc::from_int(2), Cyc::from_int(-1), Cyc::from_ratio(1, 5), Cyc::root(8, 1)] {
            for t in [Cyc::one(), Cyc::from_int(3), Cyc::root(6, 1)] {
                let eta = MultChar::unramified(&c, Side::E, t).unwrap();
                let z = unram_zeta_u11(&c, &nu, &mu, &eta, 12).unwrap();
                assert!(z.matches(), "ν={nu}");
            }
        }
        assert!(unram_zeta_u11(&c, &Cyc::one(), &mu, &MultChar::trivial(&c, Side::E).unwrap(), 8).is_err());
        let (_, ok) = unram_zeta_u11_symbolic(&c, &mu, 12).unwrap();
        assert!(ok);
    }

    #[test]
    fn unramified_u11_gamma_and_epsilon() {
        let c = c3();
        let mu = MultChar::unramified(&c, Side::E, Cyc::from_int(-1)).unwrap();
        let eta = MultChar::unramified(&c, Side::E, Cyc::from_int(2)).unwrap();
        let g = gamma_from_fe_u11_unram(&c, &Cyc::from_int(3), &mu, &eta).unwrap();
        assert!(g.epsilon.eq_exact(&LaurentRational::one(9)));
        assert!(g.gamma.same_value(&g.from_l_ratio));
    }

    #[test]
    fn gl2_spherical_gamma_is_multiplicative() {
        let c = c3();
        let alpha = (Cyc::from_int(2), Cyc::from_ratio(1, 5));
        for chi_p in [Cyc::one(), Cyc::from_int(-1), Cyc::from_int(7)] {
            let chi = MultChar::unramified(&c, Side::F, chi_p).unwrap();
            for e in [Cyc::one(), Cyc::from_int(3)] {
                let eta1 = MultChar::unramified(&c, Side::F, e).unwrap();
                let fe = gamma_from_fe_gl2(&c, &alpha, &chi, &eta1).unwrap();
                let mult = gamma_mult(&c, &alpha, &chi, &eta1).unwrap();
                assert!(fe.same_value(&mult), "{}", fe.params);
            }
        }
        let bad = MultChar::unramified(&c, Side::F, qc(3, -1)).unwrap();
        assert!(gamma_mult(&c, &alpha, &bad, &MultChar::trivial(&c, Side::F).unwrap()).is_err());
    }

    #[test]
    fn howe_cell_gl2_constant() {
        let c = c3();
        let triv = MultChar::trivial(&c, Side::F).unwrap();
        let chi = f_chars(&c, 1).into_iter().find(|x| x.degree == 1).unwrap();
        for (m, chi) in [(1, &triv), (1, &chi)] {
            for i in [3 * m, 3 * m + 1] {
                let z = howe_zeta_gl2(&c, m, i, chi, &triv, 0).unwrap();
                assert!(z.matches(), "m={m} i={i} got {:?}", z.value.to_json());
            }
        }
        let fine = howe_zeta_gl2(&c, 1, 3, &triv, &triv, 1).unwrap();
        assert!(fine.matches());
        let chi2 = f_chars(&c, 2).into_iter().find(|x| x.degree == 2).unwrap();
        let eta1 = f_chars(&c, 1).into_iter().find(|x| x.degree == 1).unwrap();
        let z = howe_zeta_gl2(&c, 2, 6, &chi2, &eta1, 0).unwrap();
        assert!(z.matches(), "got {:?}", z.value.to_json());
    }

    #[test]
    fn howe_cell_u11_constant() {
        let c = c3();
        let g = NormOneGroup::new(&c, 1).unwrap();
        for chi in enumerate_norm_one_chars(&g, 1).into_iter().take(2) {
            let z = howe_zeta_u11(&c, 1, 3, &chi, 0).unwrap();
            assert!(z.matches(), "got {:?}", z.value.to_json());
        }
        let g2 = NormOneGroup::new(&c, 2).unwrap();
        let chi = enumerate_norm_one_chars(&g2, 2).into_iter().find(|x| x.degree == 2).unwrap();
        let z = howe_zeta_u11(&c, 2, 6, &chi, 0).unwrap();
        assert!(z.matches(), "got {:?}", z.value.to_json());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn nbar_section_is_constant_on_the_ball(k in 0i64..81, i in 1i32..4) {
            let c = c3();
            let phi = make_phi_il(&c, i, 1).unwrap();
            let eta = MultChar::trivial(&c, Side::E).unwrap();
            let x = pa(i, k);
            let a = flat_section_u11(&c, &u11_nbar(&c, &x), &phi, &eta).unwrap();
            prop_assert!(a.eq_exact(&section_nbar_closed(&c, SVar::u11(&c), i, 1, &x)));
        }
    }
}
