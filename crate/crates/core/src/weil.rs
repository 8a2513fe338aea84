//! `GL₂(F)` and `U(1,1)` elements, Bruhat cells, the involutions of the
//! unitary group, and the two Weil representations acting on Schwartz tables.

use crate::character::{psi_angle, MultChar, NormOneChar};
use crate::charsums::{e1_sum, unit_sum, SumTerm};
use crate::error::{Error, Result};
use crate::ring::{is_norm, ExtNumber, FieldContext, Padic};
use crate::scalar::{qpow, Cyc};
use crate::schwartz::{chi_project_f2, SchwartzFn};
use std::fmt::Debug;

/// Arithmetic needed for 2×2 matrices over `F` or `E`.
pub trait Entry: Clone + Debug {
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    fn inv(&self) -> Result<Self>;
    fn is_zero(&self) -> bool;
    fn conj(&self) -> Self;
    fn eq_value(&self, o: &Self) -> bool;
    fn zero_like(&self) -> Self;
    fn one_like(&self) -> Self;
}

impl Entry for Padic {
    fn add(&self, o: &Self) -> Self {
        Padic::add(self, o)
    }
    fn sub(&self, o: &Self) -> Self {
        Padic::sub(self, o)
    }
    fn mul(&self, o: &Self) -> Self {
        Padic::mul(self, o)
    }
    fn neg(&self) -> Self {
        Padic::neg(self)
    }
    fn inv(&self) -> Result<Self> {
        Padic::inv(self)
    }
    fn is_zero(&self) -> bool {
        Padic::is_zero(self)
    }
    fn conj(&self) -> Self {
        *self
    }
    fn eq_value(&self, o: &Self) -> bool {
        Padic::eq_value(self, o)
    }
    fn zero_like(&self) -> Self {
        Padic::zero(self.p, self.prec)
    }
    fn one_like(&self) -> Self {
        Padic::from_int(self.p, self.prec, 1)
    }
}

impl Entry for ExtNumber {
    fn add(&self, o: &Self) -> Self {
        ExtNumber::add(self, o)
    }
    fn sub(&self, o: &Self) -> Self {
        ExtNumber::sub(self, o)
    }
    fn mul(&self, o: &Self) -> Self {
        ExtNumber::mul(self, o)
    }
    fn neg(&self) -> Self {
        ExtNumber::neg(self)
    }
    fn inv(&self) -> Result<Self> {
        ExtNumber::inv(self)
    }
    fn is_zero(&self) -> bool {
        ExtNumber::is_zero(self)
    }
    fn conj(&self) -> Self {
        ExtNumber::conj(self)
    }
    fn eq_value(&self, o: &Self) -> bool {
        ExtNumber::eq_value(self, o)
    }
    fn zero_like(&self) -> Self {
        ExtNumber::zero(self.p, self.prec, self.om)
    }
    fn one_like(&self) -> Self {
        ExtNumber::from_ints(self.p, self.prec, self.om, 1, 0)
    }
}

/// Row-major `[[a, b], [c, d]]`.
#[derive(Clone, Debug)]
pub struct Mat2<T> {
    pub e: [T; 4],
}

pub type Gl2 = Mat2<Padic>;
pub type U11 = Mat2<ExtNumber>;

impl<T: Entry> Mat2<T> {
    pub fn new(a: T, b: T, c: T, d: T) -> Self {
        Mat2 { e: [a, b, c, d] }
    }
    pub fn mul(&self, o: &Self) -> Self {
        let [a, b, c, d] = &self.e;
        let [x, y, z, w] = &o.e;
        Mat2::new(
            a.mul(x).add(&b.mul(z)),
            a.mul(y).add(&b.mul(w)),
            c.mul(x).add(&d.mul(z)),
            c.mul(y).add(&d.mul(w)),
        )
    }
    pub fn det(&self) -> T {
        self.e[0].mul(&self.e[3]).sub(&self.e[1].mul(&self.e[2]))
    }
    pub fn inv(&self) -> Result<Self> {
        let di = self.det().inv()?;
        let [a, b, c, d] = &self.e;
        Ok(Mat2::new(d.mul(&di), b.neg().mul(&di), c.neg().mul(&di), a.mul(&di)))
    }
    pub fn eq_value(&self, o: &Self) -> bool {
        self.e.iter().zip(&o.e).all(|(x, y)| x.eq_value(y))
    }
    pub fn conj_transpose(&self) -> Self {
        let [a, b, c, d] = &self.e;
        Mat2::new(a.conj(), c.conj(), b.conj(), d.conj())
    }
    fn one(&self) -> T {
        self.e[0].one_like()
    }
    pub fn upper(x: &T) -> Self {
        Mat2::new(x.one_like(), x.clone(), x.zero_like(), x.one_like())
    }
    pub fn lower(x: &T) -> Self {
        Mat2::new(x.one_like(), x.zero_like(), x.clone(), x.one_like())
    }
    pub fn diag(a: &T, d: &T) -> Self {
        Mat2::new(a.clone(), a.zero_like(), a.zero_like(), d.clone())
    }
    pub fn weyl(like: &T) -> Self {
        Mat2::new(like.zero_like(), like.one_like(), like.one_like().neg(), like.zero_like())
    }
}

impl Gl2 {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({"side": "GL2", "entries": self.e.iter().map(padic_json).collect::<Vec<_>>()})
    }
}
impl U11 {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({"side": "U11", "entries": self.e.iter().map(|x| serde_json::json!({
            "v": if x.is_zero() { None } else { Some(x.v) }, "a": x.a, "b": x.b, "prec": x.prec
        })).collect::<Vec<_>>()})
    }
}
fn padic_json(x: &Padic) -> serde_json::Value {
    serde_json::json!({"v": if x.is_zero() { None } else { Some(x.v) }, "u": x.u, "prec": x.prec})
}

pub fn gl2_n(b: &Padic) -> Gl2 {
    Mat2::upper(b)
}
pub fn gl2_nbar(x: &Padic) -> Gl2 {
    Mat2::lower(x)
}
pub fn gl2_t(a1: &Padic, a2: &Padic) -> Gl2 {
    Mat2::diag(a1, a2)
}
pub fn gl2_w(ctx: &FieldContext) -> Gl2 {
    Mat2::weyl(&ctx.f(1))
}
/// `d_m = diag(p^{-m}, p^m)`.
pub fn gl2_d(ctx: &FieldContext, m: i32) -> Gl2 {
    Mat2::diag(&Padic::p_pow(ctx.p, ctx.prec, -m), &Padic::p_pow(ctx.p, ctx.prec, m))
}

fn ext(ctx: &FieldContext, x: &Padic) -> ExtNumber {
    ExtNumber::from_f(x, ctx.omega)
}
pub fn u11_n(ctx: &FieldContext, b: &Padic) -> U11 {
    Mat2::upper(&ext(ctx, b))
}
pub fn u11_nbar(ctx: &FieldContext, x: &Padic) -> U11 {
    Mat2::lower(&ext(ctx, x))
}
/// `t(a) = diag(a, ā^{-1})`.
pub fn u11_t(a: &ExtNumber) -> Result<U11> {
    Ok(Mat2::diag(a, &a.conj().inv()?))
}
pub fn u11_w(ctx: &FieldContext) -> U11 {
    Mat2::weyl(&ctx.e(1, 0))
}

/// `g J ᵗḡ = J` with `J = [[0, 1], [-1, 0]]`.
pub fn in_u11(g: &U11) -> bool {
    let j = Mat2::weyl(&g.e[0]);
    g.mul(&j).mul(&g.conj_transpose()).eq_value(&j)
}

/// `g = diag(t1, t2)·n(b)` or `g = n(x)·diag(t1, t2)·w·n(y)`.
#[derive(Clone, Debug)]
pub enum Bruhat<T> {
    Borel { t1: T, t2: T, b: T },
    Big { x: T, t1: T, t2: T, y: T },
}

pub fn bruhat_decompose<T: Entry>(g: &Mat2<T>) -> Result<Bruhat<T>> {
    let [a, b, c, d] = &g.e;
    let det = g.det();
    if det.is_zero() {
        return Err(Error::Invalid("singular matrix".into()));
    }
    if c.is_zero() {
        return Ok(Bruhat::Borel { t1: a.clone(), t2: d.clone(), b: b.mul(&a.inv()?) });
    }
    let ci = c.inv()?;
    Ok(Bruhat::Big { x: a.mul(&ci), t1: det.neg().mul(&ci), t2: c.neg(), y: d.mul(&ci) })
}

pub fn bruhat_assemble<T: Entry>(br: &Bruhat<T>) -> Mat2<T> {
    match br {
        Bruhat::Borel { t1, t2, b } => Mat2::diag(t1, t2).mul(&Mat2::upper(b)),
        Bruhat::Big { x, t1, t2, y } => Mat2::upper(x)
            .mul(&Mat2::diag(t1, t2))
            .mul(&Mat2::weyl(x))
            .mul(&Mat2::upper(y)),
    }
}

/// `w·n(x) = b·n̄(x^{-1})` with `b = [[-x^{-1}, 1], [0, -x]]`.
pub fn w_n_to_borel<T: Entry>(x: &T) -> Result<(Mat2<T>, Mat2<T>)> {
    let xi = x.inv()?;
    let b = Mat2::new(xi.neg(), x.one_like(), x.zero_like(), x.neg());
    Ok((b, Mat2::lower(&xi)))
}

#[derive(Clone, Debug)]
pub enum Involution {
    Kappa(Padic),
    Delta,
    Alpha,
    Theta(Padic),
    Beta(Padic),
}

/// The involutions of `U(1,1)`; `κ` must be a non-norm.
pub fn involution(ctx: &FieldContext, g: &U11, kind: &Involution) -> Result<U11> {
    let [a, b, c, d] = &g.e;
    let kappa = |k: &Padic| -> Result<(ExtNumber, ExtNumber)> {
        if is_norm(ctx, k)? {
            return Err(Error::Invalid("κ must not be a norm".into()));
        }
        let ke = ext(ctx, k);
        Ok((ke, ke.inv()?))
    };
    Ok(match kind {
        Involution::Kappa(k) => {
            let (k, ki) = kappa(k)?;
            Mat2::new(*a, k.mul(b), ki.mul(c), *d)
        }
        Involution::Delta => Mat2::new(a.conj(), b.conj().neg(), c.conj().neg(), d.conj()),
        Involution::Alpha => Mat2::new(d.conj(), c.conj(), b.conj(), a.conj()),
        Involution::Theta(k) => {
            let (k, ki) = kappa(k)?;
            Mat2::new(*a, ki.mul(c).neg(), k.mul(b).neg(), *d)
        }
        Involution::Beta(k) => {
            let h = involution(ctx, g, &Involution::Kappa(*k))?;
            involution(ctx, &h, &Involution::Alpha)?
        }
    })
}

/// The congruence data `K_m`, `J_m = d_m K_m d_m^{-1}`, `N_m`, `N̄_m`.
#[derive(Clone, Copy, Debug)]
pub struct HoweLevel {
    pub m: i32,
}

fn val_at_least<T: Entry>(x: &T, v: i32, vof: impl Fn(&T) -> i32) -> bool {
    x.is_zero() || vof(x) >= v
}

impl HoweLevel {
    fn shape<T: Entry>(&self, g: &Mat2<T>, vof: impl Fn(&T) -> i32 + Copy, dm: i32) -> bool {
        let one = g.one();
        let m = self.m;
        val_at_least(&g.e[0].sub(&one), m, vof)
            && val_at_least(&g.e[1], m - dm, vof)
            && val_at_least(&g.e[2], m + dm, vof)
            && val_at_least(&g.e[3].sub(&one), m, vof)
    }
    pub fn in_k_gl2(&self, g: &Gl2) -> bool {
        self.shape(g, |x| x.v, 0)
    }
    pub fn in_j_gl2(&self, g: &Gl2) -> bool {
        self.shape(g, |x| x.v, 2 * self.m)
    }
    pub fn in_j_u11(&self, g: &U11) -> bool {
        in_u11(g) && self.shape(g, |x| x.v, 2 * self.m)
    }
    /// `ψ_m(j) = τ_m(d_m^{-1} j d_m) = ψ(j_{12})`.
    pub fn psi_m_gl2(&self, j: &Gl2) -> Result<Cyc> {
        Ok(psi_angle(&j.e[1])?.root())
    }
    /// Representatives of `N_m = n(P^{-m})` modulo `n(P^{m})`.
    pub fn n_reps(&self, ctx: &FieldContext) -> Vec<Padic> {
        let size = crate::ring::ipow(ctx.p, (2 * self.m) as u32);
        (0..size).map(|j| Padic::new(ctx.p, ctx.prec, -self.m, j as i64)).collect()
    }
    /// A generating sample of `N̄_m = n̄(P^{3m})`.
    pub fn nbar_reps(&self, ctx: &FieldContext, depth: u32) -> Vec<Padic> {
        let size = crate::ring::ipow(ctx.p, depth);
        (1..size).map(|j| Padic::new(ctx.p, ctx.prec, 3 * self.m, j as i64)).collect()
    }
    /// Representatives of `1 + P^m` modulo `1 + P^{m+depth}`.
    pub fn unit_reps(&self, ctx: &FieldContext, depth: u32) -> Vec<Padic> {
        let size = crate::ring::ipow(ctx.p, depth);
        let pm = crate::ring::ipow(ctx.p, self.m as u32) as i64;
        (0..size).map(|j| Padic::from_int(ctx.p, ctx.prec, 1 + pm * j as i64)).collect()
    }
}

/// Kernel of the `w`-action in the `F²` model: the one displayed in the
/// source, `ψ(xv − yu)`, or the one obtained by conjugating the standard
/// oscillator action through the partial Fourier transform, `ψ(xv + yu)`.
/// Only the latter satisfies `ω(w)² = ω(t(−1, −1))`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WKernel {
    Derived,
    Displayed,
}

/// `ω_{ψ^sign}` of `GL₂(F)` on `S(F²)`, with the central character `χ` used
/// for projections.
#[derive(Clone, Debug)]
pub struct WeilGl2 {
    pub sign: i32,
    pub kernel: WKernel,
    pub chi: MultChar,
}

impl WeilGl2 {
    pub fn new(sign: i32, kernel: WKernel, chi: MultChar) -> Self {
        WeilGl2 { sign, kernel, chi }
    }
    pub fn act_n(&self, b: &Padic, phi: &SchwartzFn) -> Result<SchwartzFn> {
        phi.twist_xy(b, self.sign)
    }
    pub fn act_t(&self, a1: &Padic, a2: &Padic, phi: &SchwartzFn) -> Result<SchwartzFn> {
        let s = (a1.v - a2.v) as i64;
        let f = phi.dilate_axis(0, a1)?.dilate_axis(1, &a2.inv()?)?;
        Ok(f.scale(&Cyc::sqrt_prime_power(phi.p, -s)))
    }
    fn w_signs(&self, inverse: bool) -> (i32, i32) {
        let e = if inverse { -self.sign } else { self.sign };
        match self.kernel {
            WKernel::Derived => (e, e),
            WKernel::Displayed => (self.sign, -self.sign),
        }
    }
    pub fn act_w(&self, phi: &SchwartzFn) -> Result<SchwartzFn> {
        let (s1, s0) = self.w_signs(false);
        phi.fourier_axis(1, s1)?.fourier_axis(0, s0)?.swap()
    }
    pub fn act_w_inv(&self, phi: &SchwartzFn) -> Result<SchwartzFn> {
        let (s1, s0) = self.w_signs(true);
        phi.fourier_axis(1, s1)?.fourier_axis(0, s0)?.swap()
    }
    pub fn act_nbar(&self, x: &Padic, phi: &SchwartzFn) -> Result<SchwartzFn> {
        // n̄(x) = w^{-1} n(−x) w
        self.act_w_inv(&self.act_n(&x.neg(), &self.act_w(phi)?)?)
    }
    pub fn act(&self, g: &Gl2, phi: &SchwartzFn) -> Result<SchwartzFn> {
        match bruhat_decompose(g)? {
            Bruhat::Borel { t1, t2, b } => self.act_t(&t1, &t2, &self.act_n(&b, phi)?),
            Bruhat::Big { x, t1, t2, y } => {
                let f = self.act_w(&self.act_n(&y, phi)?)?;
                self.act_n(&x, &self.act_t(&t1, &t2, &f)?)
            }
        }
    }
    /// `θ(h) = (ω(h)φ)_χ(1, 1)`.
    pub fn whittaker(&self, ctx: &FieldContext, phi: &SchwartzFn, g: &Gl2) -> Result<Cyc> {
        let f = self.act(g, phi)?;
        chi_project_f2(&f, &self.chi, &ctx.f(1), &ctx.f(1))
    }
    /// `θ(t(a)) = |a|^{1/2} φ_χ(a, 1)` without building the dilated table.
    pub fn whittaker_torus(&self, ctx: &FieldContext, phi: &SchwartzFn, a: &Padic) -> Result<Cyc> {
        let v = chi_project_f2(phi, &self.chi, a, &ctx.f(1))?;
        Ok(v.mul(&Cyc::sqrt_prime_power(ctx.p, -(a.v as i64))))
    }
    /// `θ(t(a)w) = |a|^{1/2} (ω(w)φ)_χ(a, 1)`.
    pub fn whittaker_torus_w(&self, ctx: &FieldContext, phi: &SchwartzFn, a: &Padic) -> Result<Cyc> {
        self.whittaker_torus(ctx, &self.act_w(phi)?, a)
    }
}

/// A value carrying a power of the symbolic Weil index `γ_ψ`.
#[derive(Clone, Debug, PartialEq)]
pub struct GammaCyc {
    pub value: Cyc,
    pub gamma: i32,
}

impl GammaCyc {
    /// Equality as elements of `Q(ζ)[γ, γ^{-1}]`.
    pub fn same(&self, o: &GammaCyc) -> bool {
        (self.value.is_zero() && o.value.is_zero()) || (self.gamma == o.gamma && self.value == o.value)
    }
}

/// `ω_{μ, ψ^sign, χ}` of `U(1,1)` on `S(E)`.
#[derive(Clone, Debug)]
pub struct WeilU11 {
    pub mu: MultChar,
    pub sign: i32,
    pub chi: NormOneChar,
}

impl WeilU11 {
    pub fn new(mu: MultChar, sign: i32, chi: NormOneChar) -> Self {
        WeilU11 { mu, sign, chi }
    }
    pub fn act_n(&self, b: &Padic, phi: &SchwartzFn) -> Result<SchwartzFn> {
        phi.twist_norm(b, self.sign)
    }
    /// `μ(a)|a|_E^{1/2} φ(xa)`, `|a|_E^{1/2} = q^{-v(a)}`.
    pub fn act_t(&self, a: &ExtNumber, phi: &SchwartzFn) -> Result<SchwartzFn> {
        let c = self.mu.eval_e(a)?.mul(&Cyc::from_rational(qpow(phi.p, -(a.v as i64))));
        Ok(phi.dilate_e(a)?.scale(&c))
    }
    /// `γ_{ψ^sign} ∫ ψ^sign(−tr(x ȳ)) φ(y) dy`.
    pub fn act_w(&self, phi: &SchwartzFn) -> Result<SchwartzFn> {
        let mut f = phi.fourier_e(-self.sign)?;
        f.gamma += self.sign;
        Ok(f)
    }
    pub fn act_w_inv(&self, phi: &SchwartzFn) -> Result<SchwartzFn> {
        let mut f = phi.fourier_e(self.sign)?;
        f.gamma -= self.sign;
        Ok(f)
    }
    pub fn act_nbar(&self, x: &Padic, phi: &SchwartzFn) -> Result<SchwartzFn> {
        self.act_w_inv(&self.act_n(&x.neg(), &self.act_w(phi)?)?)
    }
    pub fn act(&self, g: &U11, phi: &SchwartzFn) -> Result<SchwartzFn> {
        let in_f = |x: &ExtNumber| {
            x.to_f().ok_or_else(|| Error::Invalid("unipotent entry outside F: not in U(1,1)".into()))
        };
        match bruhat_decompose(g)? {
            Bruhat::Borel { t1, b, .. } => self.act_t(&t1, &self.act_n(&in_f(&b)?, phi)?),
            Bruhat::Big { x, t1, y, .. } => {
                let f = self.act_w(&self.act_n(&in_f(&y)?, phi)?)?;
                self.act_n(&in_f(&x)?, &self.act_t(&t1, &f)?)
            }
        }
    }
    /// `W(h) = (ω(h)φ)(1)`.
    pub fn whittaker(&self, ctx: &FieldContext, phi: &SchwartzFn, g: &U11) -> Result<GammaCyc> {
        let f = self.act(g, phi)?;
        Ok(GammaCyc { value: f.eval_e(&ctx.e(1, 0))?, gamma: f.gamma })
    }
}

/// Closed form of `θ^{m,χ}(t(a)w)` on the `GL₂` side for `φ^m` and `ω_{ψ^{-1}}`:
/// `|a|^{1/2} q^{-2m} ∫_{q^{-m} ≤ |u| ≤ q^{m-n}} χ^{-1}(u) ψ(s_y u^{-1} + s_x a u) d*u`
/// with `(s_y, s_x) = (1, −1)` for the displayed kernel and `(−1, −1)` for the
/// derived one.
pub fn theta_torus_w_gl2(ctx: &FieldContext, kernel: WKernel, m: i32, chi: &MultChar, a: &Padic) -> Result<Cyc> {
    if a.is_zero() {
        return Err(Error::Invalid("a must be nonzero".into()));
    }
    let n = -a.v;
    if n > 2 * m {
        return Err(Error::Invalid(format!("|a| = q^{n} outside the range n ≤ 2m = {}", 2 * m)));
    }
    let (sy, sx) = match kernel {
        WKernel::Displayed => (1i64, -1i64),
        WKernel::Derived => (-1, -1),
    };
    let mut total = Cyc::zero();
    for j in (n - m)..=m {
        let terms = [
            SumTerm { coef: Padic::p_pow(ctx.p, ctx.prec, -j).mul(&ctx.f(sy)), power: -1 },
            SumTerm { coef: a.mul(&Padic::p_pow(ctx.p, ctx.prec, j)).mul(&ctx.f(sx)), power: 1 },
        ];
        let s = unit_sum(ctx, chi, true, &terms)?;
        if s.is_zero() {
            continue;
        }
        total = total.add(&s.mul(&chi.at_p.pow(-(j as i64))?));
    }
    let vol = Cyc::from_rational(qpow(ctx.p, -2 * m as i64));
    Ok(total.mul(&vol).mul(&Cyc::sqrt_prime_power(ctx.p, n as i64)))
}

/// Orientation of the additive character inside `F_χ(ā)` for the `U(1,1)`
/// closed form.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Orientation {
    Psi,
    PsiInverse,
}

/// Closed form of `(ω_{μ,ψ^{-1},χ}(t(a)w)φ^{m,χ})(1)`:
/// `μ(a)|a|^{1/2} γ_{ψ^{-1}} vol(1+P_E^m) vol(E¹∩(1+P_E^m))^{-1} F_χ(ā)`.
pub fn theta_torus_w_u11(
    ctx: &FieldContext,
    mu: &MultChar,
    chi: &NormOneChar,
    m: u32,
    a: &ExtNumber,
    orient: Orientation,
) -> Result<GammaCyc> {
    if a.is_zero() || a.v < -(m as i32) {
        return Err(Error::Invalid("a must lie in P_E^{-m} ∖ 0".into()));
    }
    let p = ctx.p;
    let vol = Cyc::from_rational(qpow(p, -2 * m as i64));
    let index = Cyc::from_int(((p + 1) * crate::ring::ipow(p, m - 1)) as i64);
    let sign = match orient {
        Orientation::Psi => 1,
        Orientation::PsiInverse => -1,
    };
    let f = e1_sum(ctx, chi, &a.conj(), sign)?;
    let c = mu.eval_e(a)?.mul(&Cyc::from_rational(qpow(p, -(a.v as i64))));
    Ok(GammaCyc { value: c.mul(&vol).mul(&index).mul(&f), gamma: -1 })
}

/// `v_m = vol(N_m)^{-1} ∫_{N_m} ψ^sign(n)^{-1} ω(n) v dn` by summation over
/// `n(P^{-m}/P^{m'})`, `m'` the smoothness needed by the seed.
pub fn howe_vector_gl2(ctx: &FieldContext, rep: &WeilGl2, seed: &SchwartzFn, m: i32) -> Result<SchwartzFn> {
    let w1 = rep.whittaker(ctx, seed, &gl2_t(&ctx.f(1), &ctx.f(1)))?;
    if !w1.is_one() {
        return Err(Error::Invalid(format!("seed has W(1) = {w1}, not 1")));
    }
    let mp = (seed.levels[0].n + seed.levels[1].n).max(0);
    average_n(ctx, m, mp, rep.sign, |b| rep.act_n(b, seed))
}

pub fn howe_vector_u11(ctx: &FieldContext, rep: &WeilU11, seed: &SchwartzFn, m: i32) -> Result<SchwartzFn> {
    let w1 = rep.whittaker(ctx, seed, &u11_t(&ctx.e(1, 0))?)?;
    if !w1.value.is_one() || w1.gamma != 0 {
        return Err(Error::Invalid("seed has W(1) ≠ 1".into()));
    }
    let mp = (2 * seed.levels[0].n).max(0);
    average_n(ctx, m, mp, rep.sign, |b| rep.act_n(b, seed))
}

fn average_n(
    ctx: &FieldContext,
    m: i32,
    mp: i32,
    sign: i32,
    act: impl Fn(&Padic) -> Result<SchwartzFn>,
) -> Result<SchwartzFn> {
    let count = crate::ring::ipow(ctx.p, (m + mp) as u32);
    let mut acc: Option<SchwartzFn> = None;
    for j in 0..count {
        let b = Padic::new(ctx.p, ctx.prec, -m, j as i64);
        let mut ang = psi_angle(&b)?;
        if sign > 0 {
            ang = ang.neg();
        }
        let term = act(&b)?.scale(&ang.root());
        acc = Some(match acc {
            None => term,
            Some(a) => a.add(&term)?,
        });
    }
    let out = acc.expect("nonempty average");
    Ok(out.scale(&Cyc::from_ratio(1, count as i64)).compact()?)
}

/// One evaluation of a Howe-vector Whittaker function on the torus.
#[derive(Clone, Debug)]
pub struct SupportRow {
    pub shell: i32,
    pub unit: u64,
    pub at_t: Cyc,
    pub at_tw: GammaCyc,
}

/// `W_{v_m}(t(a))` and `W_{v_m}(t(a)w)` for `a = p^v u` over shells and unit
/// representatives modulo `1 + P^{unit_level}`; fails on a support violation.
pub fn howe_support_scan_gl2(
    ctx: &FieldContext,
    rep: &WeilGl2,
    v: &SchwartzFn,
    m: i32,
    shells: (i32, i32),
    unit_level: u32,
) -> Result<Vec<SupportRow>> {
    let vw = rep.act_w(v)?;
    let mut rows = Vec::new();
    for s in shells.0..=shells.1 {
        for u in crate::ring::units_f(ctx.p, unit_level) {
            let a = Padic::new(ctx.p, ctx.prec, s, u as i64);
            let at_t = rep.whittaker_torus(ctx, v, &a)?;
            let at_tw = rep.whittaker_torus(ctx, &vw, &a)?;
            let in_unit = s == 0 && (u as i64 - 1).rem_euclid(crate::ring::ipow(ctx.p, m as u32) as i64) == 0;
            if !at_t.is_zero() && !in_unit {
                return Err(Error::Verification(format!("W(t(a)) ≠ 0 at a = p^{s}·{u} outside 1+P^{m}")));
            }
            if !at_tw.is_zero() && s < -3 * m {
                return Err(Error::Verification(format!("W(t(a)w) ≠ 0 at |a| = q^{}", -s)));
            }
            rows.push(SupportRow { shell: s, unit: u, at_t, at_tw: GammaCyc { value: at_tw, gamma: 0 } });
        }
    }
    Ok(rows)
}

/// The `U(1,1)` scan over `a = p^v u`, `u` running over `O_E^×` modulo
/// `1 + P_E^{unit_level}`; support claims are on `a ā`.
pub fn howe_support_scan_u11(
    ctx: &FieldContext,
    rep: &WeilU11,
    v: &SchwartzFn,
    m: i32,
    shells: (i32, i32),
    unit_level: u32,
) -> Result<Vec<SupportRow>> {
    let vw = rep.act_w(v)?;
    let ring = ctx.galois_ring(unit_level);
    let pm = crate::ring::ipow(ctx.p, m as u32);
    let mut rows = Vec::new();
    for s in shells.0..=shells.1 {
        for u in ring.units() {
            let a = ExtNumber::from_residue(ctx.p, ctx.prec, ctx.omega, s, u);
            let at_t = rep.act_t(&a, v)?.eval_e(&ctx.e(1, 0))?;
            let f = rep.act_t(&a, &vw)?;
            let at_tw = GammaCyc { value: f.eval_e(&ctx.e(1, 0))?, gamma: f.gamma };
            let nm = ring.norm(u);
            let norm_in_unit = s == 0 && (nm + ring.modulus - 1) % pm == 0;
            if !at_t.is_zero() && !norm_in_unit {
                return Err(Error::Verification(format!("W(t(a)) ≠ 0 with a ā ∉ 1+P^{m} (shell {s})")));
            }
            if !at_tw.value.is_zero() && 2 * s < -3 * m {
                return Err(Error::Verification(format!("W(t(a)w) ≠ 0 with |a ā| = q^{}", -2 * s)));
            }
            rows.push(SupportRow { shell: s, unit: ring.index(u), at_t, at_tw });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::character::{enumerate_chars, enumerate_norm_one_chars, NormOneGroup, Side, UnitGroup};
    use crate::ring::{make_context, ExtKind};
    use crate::schwartz::{make_phi_m, make_phi_m_chi, Domain, Level};
    use proptest::prelude::*;

    fn c3() -> FieldContext {
        make_context(3, 10, ExtKind::Unramified).unwrap()
    }
    fn pa(v: i32, n: i64) -> Padic {
        Padic::new(3, 10, v, n)
    }
    fn mu0(c: &FieldContext) -> MultChar {
        MultChar::unramified(c, Side::E, Cyc::from_int(-1)).unwrap()
    }
    fn small_f2(c: &FieldContext) -> SchwartzFn {
        // a non-symmetric function at level (1, 1) per axis
        let mut f = SchwartzFn::empty(c, Domain::F2, vec![Level { n: 1, m: 1 }, Level { n: 1, m: 1 }]);
        for i in 0..9u64 {
            for j in 0..9u64 {
                if (i * 7 + j * 5 + i * j) % 4 == 1 {
                    f.set([i, j], Cyc::from_int((1 + i + 2 * j) as i64));
                }
            }
        }
        f
    }

    #[test]
    fn bruhat_examples() {
        let c = c3();
        let x = pa(-1, 2);
        let (b, nb) = w_n_to_borel(&x).unwrap();
        assert!(gl2_w(&c).mul(&gl2_n(&x)).eq_value(&b.mul(&nb)));
        assert!(b.e[2].is_zero());
        let g = gl2_t(&pa(1, 2), &pa(0, 5)).mul(&gl2_n(&pa(-2, 4)));
        assert!(matches!(bruhat_decompose(&g).unwrap(), Bruhat::Borel { .. }));
        let h = gl2_n(&pa(0, 1)).mul(&gl2_w(&c)).mul(&gl2_n(&pa(1, 1)));
        let br = bruhat_decompose(&h).unwrap();
        assert!(bruhat_assemble(&br).eq_value(&h));
    }

    #[test]
    fn unitary_membership_and_involutions() {
        let c = c3();
        let kappa = c.f(3);
        let t = u11_t(&c.e(2, 1)).unwrap();
        let h = u11_n(&c, &pa(-1, 1)).mul(&t).mul(&u11_w(&c)).mul(&u11_n(&c, &pa(0, 4)));
        assert!(in_u11(&h));
        assert!(!in_u11(&Mat2::upper(&c.e(0, 1))));
        let br = bruhat_decompose(&h).unwrap();
        assert!(bruhat_assemble(&br).eq_value(&h));
        // n(b)^α = n̄(b)
        let b = pa(-1, 2);
        let na = involution(&c, &u11_n(&c, &b), &Involution::Alpha).unwrap();
        assert!(na.eq_value(&u11_nbar(&c, &b)));
        // θ is an involutive anti-automorphism and equals (h^β)^{-1}
        let th = |g: &U11| involution(&c, g, &Involution::Theta(kappa)).unwrap();
        let h2 = u11_nbar(&c, &pa(2, 1)).mul(&u11_t(&c.e(1, 1)).unwrap());
        assert!(th(&h.mul(&h2)).eq_value(&th(&h2).mul(&th(&h))));
        assert!(th(&th(&h)).eq_value(&h));
        let beta = involution(&c, &h, &Involution::Beta(kappa)).unwrap();
        assert!(th(&h).eq_value(&beta.inv().unwrap()));
        for k in [Involution::Delta, Involution::Alpha] {
            let once = involution(&c, &h, &k).unwrap();
            assert!(involution(&c, &once, &k).unwrap().eq_value(&h));
            assert!(in_u11(&once));
        }
        let hk = involution(&c, &h, &Involution::Kappa(kappa)).unwrap();
        assert!(in_u11(&hk));
        let prod = involution(&c, &h.mul(&h2), &Involution::Kappa(kappa)).unwrap();
        assert!(prod.eq_value(&hk.mul(&involution(&c, &h2, &Involution::Kappa(kappa)).unwrap())));
        // a norm is rejected
        assert!(involution(&c, &h, &Involution::Kappa(c.f(9))).is_err());
    }

    #[test]
    fn howe_level_shapes() {
        let c = c3();
        let hl = HoweLevel { m: 1 };
        let k = Mat2::new(c.f(4), c.f(3), c.f(6), c.f(1));
        assert!(hl.in_k_gl2(&k));
        let d = gl2_d(&c, 1);
        let j = d.mul(&k).mul(&d.inv().unwrap());
        assert!(hl.in_j_gl2(&j));
        assert!(j.e[1].v == -1 && j.e[2].v >= 3);
        // ψ_m agrees with ψ on N_m
        let b = pa(-1, 2);
        assert_eq!(hl.psi_m_gl2(&gl2_n(&b)).unwrap(), psi_angle(&b).unwrap().root());
    }

    #[test]
    fn gl2_generator_formulas() {
        let c = c3();
        let chi = MultChar::trivial(&c, Side::F).unwrap();
        let rep = WeilGl2::new(-1, WKernel::Derived, chi);
        for m in 1..=2 {
            let phi = make_phi_m(&c, m).unwrap();
            for b in (HoweLevel { m }).n_reps(&c) {
                let lhs = rep.act_n(&b, &phi).unwrap();
                let rhs = phi.scale(&psi_angle(&b).unwrap().neg().root());
                assert!(lhs.same_as(&rhs).unwrap());
            }
        }
        let f = small_f2(&c);
        let (a1, a2) = (pa(1, 2), pa(-1, 4));
        let g = rep.act_t(&a1, &a2, &f).unwrap();
        let x = pa(-1, 5);
        let y = pa(0, 7);
        let want = f.eval_f2(&a1.mul(&x), &a2.inv().unwrap().mul(&y)).unwrap().mul(&Cyc::from_ratio(1, 3));
        assert_eq!(g.eval_f2(&x, &y).unwrap(), want);
    }

    #[test]
    fn gl2_weyl_square() {
        let c = c3();
        let chi = MultChar::trivial(&c, Side::F).unwrap();
        let f = small_f2(&c);
        let der = WeilGl2::new(-1, WKernel::Derived, chi.clone());
        let ww = der.act_w(&der.act_w(&f).unwrap()).unwrap();
        let m1 = c.f(-1);
        assert!(ww.same_as(&der.act_t(&m1, &m1, &f).unwrap()).unwrap());
        assert!(der.act_w_inv(&der.act_w(&f).unwrap()).unwrap().same_as(&f).unwrap());
        // the displayed kernel squares to the identity instead
        let dis = WeilGl2::new(-1, WKernel::Displayed, chi);
        let ww = dis.act_w(&dis.act_w(&f).unwrap()).unwrap();
        assert!(ww.same_as(&f).unwrap());
        assert!(!ww.same_as(&dis.act_t(&m1, &m1, &f).unwrap()).unwrap());
        // with sign −1 the displayed kernel is the symplectic transform
        assert!(dis.act_w(&f).unwrap().same_as(&f.fourier2(None).unwrap()).unwrap());
    }

    fn rand_gl2(c: &FieldContext, s: &[i64; 5]) -> Gl2 {
        let t1 = Padic::new(3, c.prec, (s[0] % 2) as i32, 1 + 3 * (s[0] % 4) + (s[0] % 2));
        let t2 = Padic::new(3, c.prec, -((s[1] % 2) as i32), 2 + 3 * (s[1] % 3));
        let x = Padic::new(3, c.prec, 0, s[2] % 9);
        let y = Padic::new(3, c.prec, 0, s[3] % 9);
        let g = gl2_n(&x).mul(&gl2_t(&t1, &t2));
        if s[4] % 3 == 0 {
            g.mul(&gl2_n(&y))
        } else {
            g.mul(&gl2_w(c)).mul(&gl2_n(&y))
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]
        #[test]
        fn gl2_representation_property(s1 in prop::array::uniform5(0i64..1000), s2 in prop::array::uniform5(0i64..1000)) {
            let c = c3();
            let chi = MultChar::trivial(&c, Side::F).unwrap();
            let rep = WeilGl2::new(-1, WKernel::Derived, chi);
            let f = make_phi_m(&c, 1).unwrap();
            let (g1, g2) = (rand_gl2(&c, &s1), rand_gl2(&c, &s2));
            let lhs = rep.act(&g1, &rep.act(&g2, &f).unwrap()).unwrap();
            let rhs = rep.act(&g1.mul(&g2), &f).unwrap();
            prop_assert!(lhs.same_as(&rhs).unwrap());
        }
    }

    #[test]
    fn gl2_nbar_fixes_phi_m() {
        let c = c3();
        let chi = MultChar::trivial(&c, Side::F).unwrap();
        for kernel in [WKernel::Derived, WKernel::Displayed] {
            let rep = WeilGl2::new(-1, kernel, chi.clone());
            for m in 1..=2 {
                let phi = make_phi_m(&c, m).unwrap();
                for x in (HoweLevel { m }).nbar_reps(&c, 2) {
                    assert!(rep.act_nbar(&x, &phi).unwrap().same_as(&phi).unwrap());
                }
                // one step outside N̄_m moves φ^m
                let x = Padic::new(3, c.prec, 3 * m - 1 - m, 1);
                assert!(!rep.act_nbar(&x, &phi).unwrap().same_as(&phi).unwrap());
            }
        }
    }

    #[test]
    fn gl2_whittaker_values() {
        let c = c3();
        let g = UnitGroup::new(&c, Side::F, 2).unwrap();
        for chi in enumerate_chars(&g, 1, &Cyc::one()).unwrap() {
            let rep = WeilGl2::new(-1, WKernel::Derived, chi);
            let phi = make_phi_m(&c, 1).unwrap();
            let one = c.f(1);
            assert_eq!(rep.whittaker(&c, &phi, &gl2_t(&one, &one)).unwrap(), Cyc::from_ratio(1, 3));
            // θ(t(a)) = q^{-m} on 1 + P^m
            let a = c.f(4);
            assert_eq!(rep.whittaker_torus(&c, &phi, &a).unwrap(), Cyc::from_ratio(1, 3));
            // ψ^{-1}-equivariance on the left
            let h = gl2_w(&c).mul(&gl2_n(&pa(0, 1)));
            let x = pa(-1, 1);
            let lhs = rep.whittaker(&c, &phi, &gl2_n(&x).mul(&h)).unwrap();
            let rhs = rep.whittaker(&c, &phi, &h).unwrap().mul(&psi_angle(&x).unwrap().neg().root());
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn u11_generator_formulas() {
        let c = c3();
        let grp = NormOneGroup::new(&c, 2).unwrap();
        for chi in enumerate_norm_one_chars(&grp, 2) {
            let rep = WeilU11::new(mu0(&c), -1, chi.clone());
            for m in [1u32, 2] {
                if chi.degree > m {
                    continue;
                }
                let phi = make_phi_m_chi(&c, m, &chi).unwrap();
                let hl = HoweLevel { m: m as i32 };
                for b in hl.n_reps(&c) {
                    let lhs = rep.act_n(&b, &phi).unwrap();
                    assert!(lhs.same_as(&phi.scale(&psi_angle(&b).unwrap().neg().root())).unwrap());
                }
                for x in hl.nbar_reps(&c, 1) {
                    assert!(rep.act_nbar(&x, &phi).unwrap().same_as(&phi).unwrap());
                }
            }
        }
    }

    #[test]
    fn u11_weyl_square_and_relations() {
        let c = c3();
        let grp = NormOneGroup::new(&c, 1).unwrap();
        let rep = WeilU11::new(mu0(&c), -1, NormOneChar::trivial(grp));
        let phi = SchwartzFn::ball_e(&c, 0).unwrap().add(&SchwartzFn::ball_e(&c, 1).unwrap()).unwrap();
        let mut phi = phi;
        phi.set([1, 2], Cyc::from_int(5));
        let ww = rep.act_w(&rep.act_w(&phi).unwrap()).unwrap();
        let tm = rep.act_t(&c.e(-1, 0), &phi).unwrap();
        assert_eq!(ww.gamma, -2);
        let mut tm2 = tm.clone();
        tm2.gamma = -2;
        assert!(ww.same_as(&tm2).unwrap());
        // t(a) n(b) t(a)^{-1} = n(a ā b)
        let a = c.e(1, 1);
        let b = pa(-1, 1);
        let lhs = rep.act_t(&a, &rep.act_n(&b, &phi).unwrap()).unwrap();
        let rhs = rep.act_n(&a.norm().mul(&b), &rep.act_t(&a, &phi).unwrap()).unwrap();
        assert!(lhs.same_as(&rhs).unwrap());
        // ω(n(x)) on the Whittaker function: ψ^{-1}(x) W(h)
        let chi1 = rep.chi.clone();
        let phi1 = make_phi_m_chi(&c, 1, &chi1).unwrap();
        let h = u11_w(&c);
        let x = pa(-1, 2);
        let lhs = rep.whittaker(&c, &phi1, &u11_n(&c, &x).mul(&h)).unwrap();
        let rhs = rep.whittaker(&c, &phi1, &h).unwrap();
        assert_eq!(lhs.value, rhs.value.mul(&psi_angle(&x).unwrap().neg().root()));
    }

    #[test]
    fn theta_closed_forms_small() {
        let c = c3();
        let g = UnitGroup::new(&c, Side::F, 1).unwrap();
        let phi = make_phi_m(&c, 1).unwrap();
        for kernel in [WKernel::Derived, WKernel::Displayed] {
            for chi in enumerate_chars(&g, 1, &Cyc::one()).unwrap() {
                let rep = WeilGl2::new(-1, kernel, chi.clone());
                for n in -1..=2 {
                    for u in [1i64, 2, 4] {
                        let a = Padic::new(3, c.prec, -n, u);
                        let direct = rep.whittaker_torus_w(&c, &phi, &a).unwrap();
                        let closed = theta_torus_w_gl2(&c, kernel, 1, &chi, &a).unwrap();
                        assert_eq!(direct, closed, "n={n} u={u} {kernel:?}");
                    }
                }
            }
        }
        let grp = NormOneGroup::new(&c, 1).unwrap();
        for chi in enumerate_norm_one_chars(&grp, 1) {
            let rep = WeilU11::new(mu0(&c), -1, chi.clone());
            let phi = make_phi_m_chi(&c, 1, &chi).unwrap();
            let a = ExtNumber::new(3, c.prec, c.omega, -1, 1, 1);
            let direct = {
                let f = rep.act_t(&a, &rep.act_w(&phi).unwrap()).unwrap();
                GammaCyc { value: f.eval_e(&c.e(1, 0)).unwrap(), gamma: f.gamma }
            };
            let closed = theta_torus_w_u11(&c, &rep.mu, &chi, 1, &a, Orientation::Psi).unwrap();
            assert!(direct.same(&closed));
        }
    }

    #[test]
    fn howe_vectors_small() {
        let c = c3();
        let chi = MultChar::trivial(&c, Side::F).unwrap();
        let rep = WeilGl2::new(-1, WKernel::Derived, chi);
        let seed = make_phi_m(&c, 1).unwrap().scale(&Cyc::from_int(3));
        let v1 = howe_vector_gl2(&c, &rep, &seed, 1).unwrap();
        let v2 = howe_vector_gl2(&c, &rep, &seed, 2).unwrap();
        let one = c.f(1);
        assert!(rep.whittaker(&c, &v2, &gl2_t(&one, &one)).unwrap().is_one());
        // nesting: averaging v_1 at level 2 gives v_2
        assert!(howe_vector_gl2(&c, &rep, &v1, 2).unwrap().same_as(&v2).unwrap());
        // fixed point
        assert!(howe_vector_gl2(&c, &rep, &v2, 2).unwrap().same_as(&v2).unwrap());
        let rows = howe_support_scan_gl2(&c, &rep, &v1, 1, (-2, 2), 2).unwrap();
        assert!(rows.iter().any(|r| !r.at_t.is_zero()));
        assert!(howe_vector_gl2(&c, &rep, &make_phi_m(&c, 1).unwrap(), 1).is_err());
    }
}
