//! Characters: additive `ψ`, multiplicative quasi-characters of `F^×` and
//! `E^×`, and characters of the norm-one torus `E¹`.

use crate::error::{Error, Result};
use crate::ring::{
    ipow, is_norm, mul_mod, norm_one_reps, pow_mod, units_f, ExtNumber, FieldContext, GaloisRing,
    Gr, Omega, Padic,
};
use crate::scalar::{factor_small, Cyc, RationalAngle};
use num_integer::Integer;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    F,
    E,
}

fn element_order(g: u64, group_order: u64, m: u64) -> u64 {
    let mut ord = group_order;
    for (r, _) in factor_small(group_order) {
        while ord % r == 0 && pow_mod(g, ord / r, m) == 1 % m {
            ord /= r;
        }
    }
    ord
}

/// `(O/P^L)^×` or `(O_E/P_E^L)^×` as a product of cyclic groups with a
/// dense discrete-log table.
#[derive(Debug)]
pub struct UnitGroup {
    pub side: Side,
    pub p: u64,
    pub level: u32,
    pub modulus: u64,
    pub om: Omega,
    pub gens: Vec<Gr>,
    pub orders: Vec<u64>,
    /// Least common multiple of the generator orders.
    pub exponent: u64,
    table: Vec<u32>,
}

const NOT_UNIT: u32 = u32::MAX;

impl UnitGroup {
    pub fn new(ctx: &FieldContext, side: Side, level: u32) -> Result<Arc<UnitGroup>> {
        let p = ctx.p;
        let modulus = ipow(p, level);
        let (gens, orders): (Vec<Gr>, Vec<u64>) = match side {
            Side::F => {
                if level == 0 {
                    (vec![], vec![])
                } else if p == 2 {
                    match level {
                        1 => (vec![], vec![]),
                        2 => (vec![(3, 0)], vec![2]),
                        _ => (vec![(modulus - 1, 0), (5, 0)], vec![2, ipow(2, level - 2)]),
                    }
                } else {
                    let phi = (p - 1) * ipow(p, level - 1);
                    let g = (2..modulus)
                        .find(|&g| g % p != 0 && element_order(g, phi, modulus) == phi)
                        .unwrap();
                    (vec![(g, 0)], vec![phi])
                }
            }
            Side::E => {
                ctx.require_unramified()?;
                if p == 2 {
                    return Err(Error::Unsupported(
                        "characters of E^x for residue characteristic 2".into(),
                    ));
                }
                if level == 0 {
                    (vec![], vec![])
                } else {
                    let g1 = GaloisRing::new(p, 1, ctx.om());
                    let q2 = p * p - 1;
                    let g0 = g1
                        .units()
                        .into_iter()
                        .find(|&u| {
                            factor_small(q2).iter().all(|(r, _)| g1.pow(u, q2 / r) != (1, 0))
                        })
                        .unwrap();
                    let gl = GaloisRing::new(p, level, ctx.om());
                    let tau = gl.pow(g0, ipow(p, 2 * (level - 1)));
                    let mut gens = vec![tau];
                    let mut orders = vec![q2];
                    if level > 1 {
                        let o = ipow(p, level - 1);
                        gens.push((1 + p, 0));
                        orders.push(o);
                        gens.push((1, p));
                        orders.push(o);
                    }
                    (gens, orders)
                }
            }
        };
        let exponent = orders.iter().fold(1u64, |a, o| a.lcm(o));
        let size = match side {
            Side::F => modulus as usize,
            Side::E => (modulus * modulus) as usize,
        };
        let total: u64 = orders.iter().product();
        if total > u32::MAX as u64 / 2 {
            return Err(Error::Invalid("unit group too large".into()));
        }
        let mut table = vec![NOT_UNIT; size.max(1)];
        let gr = GaloisRing::new(p, level, ctx.om());
        let idx = |x: Gr| -> usize {
            match side {
                Side::F => x.0 as usize,
                Side::E => gr.index(x) as usize,
            }
        };
        let mut filled = 0u64;
        let mut digits = vec![0u64; gens.len()];
        let mut code = 0u32;
        loop {
            let mut x = (1 % modulus.max(1), 0);
            for (g, e) in gens.iter().zip(&digits) {
                x = match side {
                    Side::F => (mul_mod(x.0, pow_mod(g.0, *e, modulus), modulus), 0),
                    Side::E => gr.mul(x, gr.pow(*g, *e)),
                };
            }
            let i = idx(x);
            if table[i] != NOT_UNIT {
                return Err(Error::Verification(format!(
                    "unit generators are not independent at level {level}"
                )));
            }
            table[i] = code;
            filled += 1;
            code += 1;
            let mut k = 0;
            loop {
                if k == digits.len() {
                    break;
                }
                digits[k] += 1;
                if digits[k] < orders[k] {
                    break;
                }
                digits[k] = 0;
                k += 1;
            }
            if k == digits.len() {
                break;
            }
        }
        let expected = match side {
            Side::F if level == 0 => 1,
            Side::F => (p - 1) * ipow(p, level - 1),
            Side::E if level == 0 => 1,
            Side::E => (p * p - 1) * ipow(p * p, level - 1),
        };
        if filled != expected {
            return Err(Error::Verification(format!(
                "unit generators fill {filled} of {expected} classes"
            )));
        }
        Ok(Arc::new(UnitGroup { side, p, level, modulus, om: ctx.om(), gens, orders, exponent, table }))
    }

    pub fn order(&self) -> u64 {
        self.orders.iter().product()
    }

    /// Exponent vector of a unit residue (already reduced mod `p^level`).
    pub fn dlog(&self, x: Gr) -> Option<Vec<u64>> {
        let i = match self.side {
            Side::F => x.0 % self.modulus.max(1),
            Side::E => {
                let m = self.modulus.max(1);
                (x.0 % m) * m + x.1 % m
            }
        };
        let mut code = *self.table.get(i as usize)?;
        if code == NOT_UNIT {
            return None;
        }
        let mut out = Vec::with_capacity(self.orders.len());
        for o in &self.orders {
            out.push(code as u64 % o);
            code /= *o as u32;
        }
        Some(out)
    }

    /// Residues of a generating set of `1 + P^d` (all units when `d = 0`).
    fn principal_generators(&self, d: u32) -> Vec<Gr> {
        if d >= self.level {
            return vec![];
        }
        let m = self.modulus;
        let p = self.p;
        if d == 0 || (p == 2 && d == 1) {
            return self.gens.clone();
        }
        let pd = ipow(p, d);
        match self.side {
            Side::F => vec![((1 + pd) % m, 0)],
            Side::E => vec![((1 + pd) % m, 0), (1, pd % m)],
        }
    }
}

impl FieldContext {
    pub fn om(&self) -> Omega {
        self.omega
    }
}

/// Multiplicative quasi-character `χ(p^v u) = at_p^v · χ_0(u)`.
#[derive(Clone, Debug)]
pub struct MultChar {
    pub side: Side,
    pub group: Arc<UnitGroup>,
    /// `χ_0(g_i) = ζ_{ord_i}^{exps_i}`.
    pub exps: Vec<u64>,
    pub at_p: Cyc,
    pub degree: u32,
}

impl PartialEq for MultChar {
    fn eq(&self, o: &Self) -> bool {
        self.side == o.side
            && self.group.level == o.group.level
            && self.exps == o.exps
            && self.at_p == o.at_p
    }
}

impl MultChar {
    pub fn new(group: Arc<UnitGroup>, exps: Vec<u64>, at_p: Cyc) -> Result<Self> {
        if exps.len() != group.orders.len() {
            return Err(Error::Invalid("exponent vector length".into()));
        }
        if at_p.is_zero() {
            return Err(Error::Invalid("value at p must be nonzero".into()));
        }
        let exps: Vec<u64> = exps.iter().zip(&group.orders).map(|(e, o)| e % o).collect();
        let mut c = MultChar { side: group.side, group, exps, at_p, degree: 0 };
        c.degree = c.compute_degree();
        Ok(c)
    }
    /// Unramified quasi-character with `χ(p) = t`.
    pub fn unramified(ctx: &FieldContext, side: Side, t: Cyc) -> Result<Self> {
        let g = UnitGroup::new(ctx, side, 0)?;
        Self::new(g, vec![], t)
    }
    pub fn trivial(ctx: &FieldContext, side: Side) -> Result<Self> {
        Self::unramified(ctx, side, Cyc::one())
    }
    /// Constructor checking a claimed degree.
    pub fn make(group: Arc<UnitGroup>, exps: Vec<u64>, at_p: Cyc, degree: u32) -> Result<Self> {
        if degree > group.level {
            return Err(Error::Precision(format!("degree {degree} exceeds level {}", group.level)));
        }
        let c = Self::new(group, exps, at_p)?;
        if c.degree != degree {
            return Err(Error::Invalid(format!("claimed degree {degree}, actual {}", c.degree)));
        }
        Ok(c)
    }
    pub fn level(&self) -> u32 {
        self.group.level
    }
    pub fn is_unramified(&self) -> bool {
        self.degree == 0
    }
    /// `χ_0(u) = ζ_{exponent}^{angle}` for a unit residue.
    pub fn unit_angle(&self, x: Gr) -> Option<u64> {
        let e = self.group.dlog(x)?;
        let n = self.group.exponent;
        let mut s = 0u64;
        for ((ei, ki), oi) in e.iter().zip(&self.exps).zip(&self.group.orders) {
            s = (s + (ei * ki % oi) * (n / oi)) % n;
        }
        Some(s)
    }
    fn angle_on(&self, x: Gr) -> u64 {
        self.unit_angle(x).expect("unit residue")
    }
    fn compute_degree(&self) -> u32 {
        for d in 0..=self.group.level {
            if self.group.principal_generators(d).iter().all(|&g| self.angle_on(g) == 0) {
                return d;
            }
        }
        self.group.level
    }
    pub fn unit_value(&self, x: Gr) -> Result<Cyc> {
        let a = self.unit_angle(x).ok_or_else(|| Error::Invalid("not a unit".into()))?;
        Ok(Cyc::root(self.group.exponent, a as i64))
    }
    pub fn eval_f(&self, x: &Padic) -> Result<Cyc> {
        if self.side != Side::F {
            return Err(Error::Invalid("F-element passed to an E-character".into()));
        }
        if x.is_zero() {
            return Err(Error::Invalid("character at zero".into()));
        }
        if x.prec < self.level() {
            return Err(Error::Precision("unit part too short for the character level".into()));
        }
        let u = x.u % self.group.modulus.max(1);
        Ok(self.at_p.pow(x.v as i64)?.mul(&self.unit_value((u, 0))?))
    }
    pub fn eval_e(&self, x: &ExtNumber) -> Result<Cyc> {
        if self.side != Side::E {
            return Err(Error::Invalid("E-element passed to an F-character".into()));
        }
        if x.is_zero() {
            return Err(Error::Invalid("character at zero".into()));
        }
        if x.prec < self.level() {
            return Err(Error::Precision("unit part too short for the character level".into()));
        }
        let m = self.group.modulus.max(1);
        Ok(self.at_p.pow(x.v as i64)?.mul(&self.unit_value((x.a % m, x.b % m))?))
    }
    /// Value on an element of `F^×` regarded inside `E^×` when the character
    /// lives on `E`.
    pub fn eval_on_f(&self, x: &Padic) -> Result<Cyc> {
        match self.side {
            Side::F => self.eval_f(x),
            Side::E => self.eval_e(&x.into_ext(self.group.om)),
        }
    }
    pub fn inverse(&self) -> Result<Self> {
        let exps = self.exps.iter().zip(&self.group.orders).map(|(e, o)| (o - e) % o).collect();
        Self::new(self.group.clone(), exps, self.at_p.inv()?)
    }
    /// Re-express on the unit group of a higher level.
    pub fn lift(&self, ctx: &FieldContext, level: u32) -> Result<Self> {
        if level < self.level() {
            return Err(Error::Invalid("cannot lower the level of a character".into()));
        }
        if level == self.level() {
            return Ok(self.clone());
        }
        let g = UnitGroup::new(ctx, self.side, level)?;
        let n = self.group.exponent;
        let mut exps = Vec::new();
        for (gen, o) in g.gens.iter().zip(&g.orders) {
            let m = self.group.modulus.max(1);
            let a = self.angle_on((gen.0 % m, gen.1 % m));
            // χ(gen) = ζ_n^a must be an o-th root of unity: ζ_o^{a·o/n}
            if (a * o) % n != 0 {
                return Err(Error::Verification("lifted generator value has wrong order".into()));
            }
            exps.push(a * o / n);
        }
        Self::new(g, exps, self.at_p.clone())
    }
    pub fn mul_char(&self, ctx: &FieldContext, o: &Self) -> Result<Self> {
        let lvl = self.level().max(o.level());
        let a = self.lift(ctx, lvl)?;
        let b = o.lift(ctx, lvl)?;
        let exps = a.exps.iter().zip(&b.exps).zip(&a.group.orders).map(|((x, y), m)| (x + y) % m).collect();
        Self::new(a.group.clone(), exps, a.at_p.mul(&b.at_p))
    }
    /// Same unit part, new value at `p`.
    pub fn with_at_p(&self, t: Cyc) -> Result<Self> {
        Self::new(self.group.clone(), self.exps.clone(), t)
    }
    /// Restriction to `E¹` as a character of `E¹/(E¹ ∩ (1+P^m))`.
    pub fn restrict_e1(&self, ctx: &FieldContext, m: u32) -> Result<NormOneChar> {
        if self.side != Side::E {
            return Err(Error::Invalid("restriction to E^1 needs an E-character".into()));
        }
        let grp = NormOneGroup::new(ctx, m.max(self.level()).max(1))?;
        let c = self.lift(ctx, grp.level)?;
        let a = c.angle_on(grp.gen);
        let n = c.group.exponent;
        if (a * grp.order) % n != 0 {
            return Err(Error::Verification("restriction value has wrong order".into()));
        }
        NormOneChar::new(grp.clone(), a * grp.order / n)
    }
    /// `η|_{F^×}` for an `E`-character.
    pub fn restrict_f(&self, ctx: &FieldContext) -> Result<Self> {
        if self.side != Side::E {
            return Err(Error::Invalid("restriction to F needs an E-character".into()));
        }
        let g = UnitGroup::new(ctx, Side::F, self.level())?;
        let n = self.group.exponent;
        let m = self.group.modulus.max(1);
        let mut exps = Vec::new();
        for (gen, o) in g.gens.iter().zip(&g.orders) {
            let a = self.angle_on((gen.0 % m, 0));
            if (a * o) % n != 0 {
                return Err(Error::Verification("restricted generator value has wrong order".into()));
            }
            exps.push(a * o / n);
        }
        Self::new(g, exps, self.at_p.clone())
    }
    /// `η*(a) = η(ā)^{-1}` for an `E`-character.
    pub fn conj_inverse(&self, ctx: &FieldContext) -> Result<Self> {
        if self.side != Side::E {
            return Err(Error::Invalid("η* needs an E-character".into()));
        }
        let n = self.group.exponent;
        let m = self.group.modulus.max(1);
        if self.level() == 0 {
            return self.inverse();
        }
        let ring = ctx.galois_ring(self.level());
        let mut exps = Vec::new();
        for (gen, o) in self.group.gens.iter().zip(&self.group.orders) {
            let bar = ring.conj((gen.0 % m, gen.1 % m));
            let a = (n - self.angle_on(bar)) % n;
            exps.push(a * o / n);
        }
        Self::new(self.group.clone(), exps, self.at_p.inv()?)
    }
    pub fn id(&self) -> String {
        format!(
            "{}:L{}:[{}]:p={}",
            match self.side {
                Side::F => "F",
                Side::E => "E",
            },
            self.level(),
            self.exps.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(","),
            self.at_p
        )
    }
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "side": format!("{:?}", self.side),
            "level": self.level(),
            "generators": self.group.gens,
            "orders": self.group.orders,
            "generator_images": self.exps,
            "uniformizer_value": crate::scalar::cyc_json(&self.at_p),
            "degree": self.degree,
        })
    }
}

/// All characters of `(O/P^L)^×` (resp. `O_E`) of degree at most `max_degree`,
/// each extended by `χ(p) = at_p`.
pub fn enumerate_chars(group: &Arc<UnitGroup>, max_degree: u32, at_p: &Cyc) -> Result<Vec<MultChar>> {
    let mut out = Vec::new();
    let mut digits = vec![0u64; group.orders.len()];
    loop {
        let c = MultChar::new(group.clone(), digits.clone(), at_p.clone())?;
        if c.degree <= max_degree {
            out.push(c);
        }
        let mut k = 0;
        loop {
            if k == digits.len() {
                break;
            }
            digits[k] += 1;
            if digits[k] < group.orders[k] {
                break;
            }
            digits[k] = 0;
            k += 1;
        }
        if k == digits.len() {
            break;
        }
    }
    out.sort_by_key(|c| c.degree);
    Ok(out)
}

/// `E¹ / (E¹ ∩ (1 + P_E^m))`, cyclic of order `(q+1) q^{m-1}` for odd `p`.
#[derive(Debug)]
pub struct NormOneGroup {
    pub p: u64,
    pub level: u32,
    pub order: u64,
    pub gen: Gr,
    pub reps: Vec<Gr>,
    ring: GaloisRing,
    dlog: Vec<u32>,
}

impl NormOneGroup {
    pub fn new(ctx: &FieldContext, m: u32) -> Result<Arc<NormOneGroup>> {
        ctx.require_unramified()?;
        if ctx.p == 2 {
            return Err(Error::Unsupported("E^1 characters for residue characteristic 2".into()));
        }
        let m = m.max(1);
        static MEMO: OnceLock<Mutex<HashMap<(u64, Omega, u32), Arc<NormOneGroup>>>> = OnceLock::new();
        let memo = MEMO.get_or_init(Default::default);
        if let Some(g) = memo.lock().expect("memo lock").get(&(ctx.p, ctx.omega, m)) {
            return Ok(g.clone());
        }
        let g = Self::build(ctx, m)?;
        memo.lock().expect("memo lock").insert((ctx.p, ctx.omega, m), g.clone());
        Ok(g)
    }

    fn build(ctx: &FieldContext, m: u32) -> Result<Arc<NormOneGroup>> {
        let reps = norm_one_reps(ctx, m)?;
        let p = ctx.p;
        let order = (p + 1) * ipow(p, m - 1);
        if reps.len() as u64 != order {
            return Err(Error::Verification(format!("E^1 has {} classes, expected {order}", reps.len())));
        }
        let ring = ctx.galois_ring(m);
        let one = (1 % ring.modulus, 0);
        let is_gen = |g: Gr| factor_small(order).iter().all(|(r, _)| ring.pow(g, order / r) != one);
        let gen = *reps.iter().find(|&&g| is_gen(g)).ok_or_else(|| {
            Error::Verification("no generator of E^1 found".into())
        })?;
        let mut dlog = vec![u32::MAX; (ring.modulus * ring.modulus) as usize];
        let mut x = one;
        for k in 0..order {
            dlog[ring.index(x) as usize] = k as u32;
            x = ring.mul(x, gen);
        }
        if x != one {
            return Err(Error::Verification("E^1 generator order mismatch".into()));
        }
        Ok(Arc::new(NormOneGroup { p, level: m, order, gen, reps, ring, dlog }))
    }
    /// Discrete log of a norm-one residue (any level ≥ this one).
    pub fn log(&self, x: Gr) -> Option<u64> {
        let r = self.ring.reduce(x);
        let v = self.dlog[self.ring.index(r) as usize];
        (v != u32::MAX).then_some(v as u64)
    }
    pub fn ring(&self) -> &GaloisRing {
        &self.ring
    }
}

/// Character of `E¹` trivial on `E¹ ∩ (1 + P_E^m)`: `χ(gen) = ζ_order^k`.
#[derive(Clone, Debug)]
pub struct NormOneChar {
    pub group: Arc<NormOneGroup>,
    pub k: u64,
    pub degree: u32,
}

impl PartialEq for NormOneChar {
    fn eq(&self, o: &Self) -> bool {
        // compare as functions on the finer of the two levels
        let (a, b) = if self.group.level >= o.group.level { (self, o) } else { (o, self) };
        a.group.reps.iter().all(|&u| a.angle(u) * b.group.order == b.angle(u) * a.group.order)
    }
}

impl NormOneChar {
    pub fn new(group: Arc<NormOneGroup>, k: u64) -> Result<Self> {
        let k = k % group.order;
        let q = group.p;
        let m = group.level;
        let degree = if k == 0 {
            0
        } else {
            (1..=m).find(|&i| k % ipow(q, m - i) == 0).unwrap()
        };
        Ok(NormOneChar { group, k, degree })
    }
    pub fn trivial(group: Arc<NormOneGroup>) -> Self {
        NormOneChar { group, k: 0, degree: 0 }
    }
    pub fn level(&self) -> u32 {
        self.group.level
    }
    /// `χ(u) = ζ_order^{angle}`.
    pub fn angle(&self, u: Gr) -> u64 {
        let l = self.group.log(u).expect("norm-one residue");
        l * self.k % self.group.order
    }
    pub fn eval(&self, u: Gr) -> Cyc {
        Cyc::root(self.group.order, self.angle(u) as i64)
    }
    pub fn inverse(&self) -> Self {
        NormOneChar { group: self.group.clone(), k: (self.group.order - self.k) % self.group.order, degree: self.degree }
    }
    pub fn mul(&self, o: &Self) -> Result<Self> {
        if self.group.level != o.group.level {
            return Err(Error::Invalid("E^1 characters at different levels".into()));
        }
        Self::new(self.group.clone(), self.k + o.k)
    }
    /// Value table on the representatives, in their canonical order.
    pub fn table(&self) -> Vec<(Gr, Cyc)> {
        self.group.reps.iter().map(|&u| (u, self.eval(u))).collect()
    }
    /// Express at a higher level.
    pub fn lift(&self, ctx: &FieldContext, m: u32) -> Result<Self> {
        if m == self.level() {
            return Ok(self.clone());
        }
        if m < self.level() {
            return Err(Error::Invalid("cannot lower the level of an E^1 character".into()));
        }
        let g = NormOneGroup::new(ctx, m)?;
        let a = self.angle(g.gen);
        Self::new(g.clone(), a * g.order / self.group.order)
    }
}

pub fn enumerate_norm_one_chars(group: &Arc<NormOneGroup>, max_degree: u32) -> Vec<NormOneChar> {
    let mut v: Vec<NormOneChar> = (0..group.order)
        .map(|k| NormOneChar::new(group.clone(), k).unwrap())
        .filter(|c| c.degree <= max_degree)
        .collect();
    v.sort_by_key(|c| c.degree);
    v
}

/// `ψ(x)` for the level-zero character: the fractional part of `x`.
pub fn psi_angle(x: &Padic) -> Result<RationalAngle> {
    if x.is_zero() || x.v >= 0 {
        return Ok(RationalAngle::zero());
    }
    let k = (-x.v) as u32;
    if k > x.prec {
        return Err(Error::Precision(format!("fractional part needs {k} digits, have {}", x.prec)));
    }
    let m = ipow(x.p, k);
    Ok(RationalAngle::new((x.u % m) as i64, m))
}

/// `ψ_E(x) = ψ(½ tr x)`.
pub fn psi_e_angle(x: &ExtNumber) -> Result<RationalAngle> {
    if x.p == 2 {
        return Err(Error::Unsupported("ψ_E needs p odd".into()));
    }
    let half = Padic::from_ratio(x.p, x.prec, 1, 2)?;
    psi_angle(&x.trace().mul(&half))
}

/// Additive character `x ↦ ψ(a x)^sign`.
#[derive(Clone, Debug, PartialEq)]
pub struct AddChar {
    pub side: Side,
    pub shift: Padic,
    pub sign: i32,
}

impl AddChar {
    pub fn base(ctx: &FieldContext, side: Side) -> Self {
        AddChar { side, shift: ctx.f(1), sign: 1 }
    }
    pub fn shifted(&self, a: &Padic) -> Self {
        AddChar { shift: self.shift.mul(a), ..self.clone() }
    }
    pub fn inverse(&self) -> Self {
        AddChar { sign: -self.sign, ..self.clone() }
    }
    pub fn eval_f(&self, x: &Padic) -> Result<RationalAngle> {
        let a = psi_angle(&self.shift.mul(x))?;
        Ok(if self.sign < 0 { a.neg() } else { a })
    }
    pub fn eval_e(&self, x: &ExtNumber) -> Result<RationalAngle> {
        let a = psi_e_angle(&x.mul(&self.shift.into_ext(x.om)))?;
        Ok(if self.sign < 0 { a.neg() } else { a })
    }
}

pub fn psi_eval(psi: &AddChar, x: &Padic) -> Result<RationalAngle> {
    psi.eval_f(x)
}

/// `ε_{E/F}(a) = ±1` according to whether `a` is a norm.
pub fn epsilon_ef(ctx: &FieldContext, a: &Padic) -> Result<i32> {
    Ok(if is_norm(ctx, a)? { 1 } else { -1 })
}

/// `μ|_{F^×} = ε_{E/F}`, checked on `p` and on the generators of `O_F^×`.
pub fn check_mu(ctx: &FieldContext, mu: &MultChar) -> Result<bool> {
    if mu.side != Side::E {
        return Err(Error::Invalid("μ must be a character of E^x".into()));
    }
    if mu.at_p != Cyc::from_int(epsilon_ef(ctx, &ctx.f(ctx.p as i64))? as i64) {
        return Ok(false);
    }
    let lvl = mu.level().max(1);
    let fg = UnitGroup::new(ctx, Side::F, lvl)?;
    let gr = ctx.galois_ring(lvl);
    for g in &fg.gens {
        let u = (g.0 % gr.modulus, 0);
        let eps = epsilon_ef(ctx, &Padic::new(ctx.p, lvl, 0, u.0 as i64))?;
        let m = mu.group.modulus.max(1);
        if mu.unit_value((u.0 % m, 0))? != Cyc::from_int(eps as i64) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `ω_π · μ · χ · η` restricted to `E¹` is trivial.
pub fn check_compat(
    ctx: &FieldContext,
    omega_pi: &NormOneChar,
    mu: &MultChar,
    chi: &NormOneChar,
    eta: &MultChar,
) -> Result<bool> {
    let m = [omega_pi.level(), chi.level(), mu.level(), eta.level(), 1].into_iter().max().unwrap();
    let grp = NormOneGroup::new(ctx, m)?;
    let parts = [
        omega_pi.lift(ctx, m)?,
        mu.restrict_e1(ctx, m)?.lift(ctx, m)?,
        chi.lift(ctx, m)?,
        eta.restrict_e1(ctx, m)?.lift(ctx, m)?,
    ];
    let total = parts.iter().map(|c| c.k).sum::<u64>() % grp.order;
    Ok(total == 0)
}

/// The split analogue: `ω_π · χ · η₁ · η₂ = 1` on `F^×`.
pub fn check_compat_gl2(
    ctx: &FieldContext,
    omega_pi: &MultChar,
    chi: &MultChar,
    eta1: &MultChar,
    eta2: &MultChar,
) -> Result<bool> {
    let prod = omega_pi.mul_char(ctx, chi)?.mul_char(ctx, eta1)?.mul_char(ctx, eta2)?;
    Ok(prod.exps.iter().all(|&e| e == 0) && prod.at_p.is_one())
}

/// Solve `η₂ = (ω_π χ η₁)^{-1}`.
pub fn solve_eta2(ctx: &FieldContext, omega_pi: &MultChar, chi: &MultChar, eta1: &MultChar) -> Result<MultChar> {
    omega_pi.mul_char(ctx, chi)?.mul_char(ctx, eta1)?.inverse()
}

/// All unit residues of `Z/p^level` paired with a character's angle; used by
/// the exponential-sum kernels.
pub fn angle_table_f(chi: &MultChar, level: u32) -> Vec<(u64, u64)> {
    let m = chi.group.modulus.max(1);
    units_f(chi.group.p, level).into_iter().map(|u| (u, chi.angle_on((u % m, 0)))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::{make_context, ExtKind};

    fn c3() -> FieldContext {
        make_context(3, 4, ExtKind::Unramified).unwrap()
    }

    #[test]
    fn psi_values() {
        let c = c3();
        assert_eq!(psi_angle(&c.f(7)).unwrap(), RationalAngle::zero());
        let x = Padic::new(3, 4, -1, 1);
        assert_eq!(psi_angle(&x).unwrap(), RationalAngle::new(1, 3));
        let e = ExtNumber::from_f(&x, c.omega);
        assert_eq!(psi_e_angle(&e).unwrap(), psi_angle(&x).unwrap());
        // level-zero depth: ψ(1/9) is a primitive 9th root
        let y = Padic::new(3, 4, -2, 1);
        assert_eq!(psi_angle(&y).unwrap().den, 9);
        let deep = Padic::new(3, 2, -3, 1);
        assert!(psi_angle(&deep).is_err());
    }

    #[test]
    fn psi_additive_and_shift() {
        let c = c3();
        let psi = AddChar::base(&c, Side::F);
        for a in 1..20i64 {
            for b in 1..20i64 {
                let x = Padic::new(3, 4, -2, a);
                let y = Padic::new(3, 4, -3, b);
                let s = x.add(&y);
                assert_eq!(psi.eval_f(&s).unwrap(), psi.eval_f(&x).unwrap().add(&psi.eval_f(&y).unwrap()));
                // ψ_a ψ_b = ψ_{a+b}
                let pa = psi.shifted(&c.f(a));
                let pb = psi.shifted(&c.f(b));
                let pab = psi.shifted(&c.f(a + b));
                assert_eq!(pab.eval_f(&y).unwrap(), pa.eval_f(&y).unwrap().add(&pb.eval_f(&y).unwrap()));
            }
        }
    }

    #[test]
    fn unit_groups_fill() {
        for p in [2u64, 3, 5] {
            let c = make_context(p, 6, ExtKind::None).unwrap();
            for l in 0..=4 {
                let g = UnitGroup::new(&c, Side::F, l).unwrap();
                let expect = if l == 0 { 1 } else { (p - 1) * ipow(p, l - 1) };
                assert_eq!(g.order(), expect, "p = {p}, L = {l}");
            }
        }
        let c = c3();
        for l in 1..=3 {
            let g = UnitGroup::new(&c, Side::E, l).unwrap();
            assert_eq!(g.order(), 8 * ipow(9, l - 1));
        }
        let c2 = make_context(2, 3, ExtKind::Unramified).unwrap();
        assert!(UnitGroup::new(&c2, Side::E, 2).is_err());
    }

    #[test]
    fn char_counts_and_degrees() {
        let c = c3();
        let g1 = UnitGroup::new(&c, Side::F, 1).unwrap();
        assert_eq!(enumerate_chars(&g1, 1, &Cyc::one()).unwrap().len(), 2);
        let g2 = UnitGroup::new(&c, Side::F, 2).unwrap();
        let all = enumerate_chars(&g2, 2, &Cyc::one()).unwrap();
        assert_eq!(all.len(), 6);
        assert_eq!(all.iter().filter(|x| x.degree == 2).count(), 4);
        // degree-2 character on a generator of (Z/9)^x is a primitive 6th root
        let chi = all.iter().find(|x| x.exps == vec![1]).unwrap();
        assert_eq!(chi.degree, 2);
        let v = chi.unit_value(g2.gens[0]).unwrap();
        assert_eq!(v, Cyc::root(6, 1));
        // p = 2: no degree-one characters
        let c2 = make_context(2, 6, ExtKind::None).unwrap();
        let g = UnitGroup::new(&c2, Side::F, 3).unwrap();
        let ch = enumerate_chars(&g, 3, &Cyc::one()).unwrap();
        assert_eq!(ch.len(), 4);
        assert!(ch.iter().all(|x| x.degree != 1));
    }

    #[test]
    fn degree_of_product() {
        let c = c3();
        let g = UnitGroup::new(&c, Side::F, 3).unwrap();
        let all = enumerate_chars(&g, 3, &Cyc::one()).unwrap();
        for a in &all {
            for b in &all {
                let ab = a.mul_char(&c, b).unwrap();
                assert!(ab.degree <= a.degree.max(b.degree));
                if a.degree != b.degree {
                    assert_eq!(ab.degree, a.degree.max(b.degree));
                }
            }
        }
    }

    #[test]
    fn multiplicative_evaluation() {
        let c = c3();
        let g = UnitGroup::new(&c, Side::F, 2).unwrap();
        let chi = MultChar::new(g, vec![1], Cyc::from_int(5)).unwrap();
        let x = Padic::new(3, 4, 2, 7);
        let y = Padic::new(3, 4, -1, 5);
        let lhs = chi.eval_f(&x.mul(&y)).unwrap();
        let rhs = chi.eval_f(&x).unwrap().mul(&chi.eval_f(&y).unwrap());
        assert_eq!(lhs, rhs);
        let t = MultChar::unramified(&c, Side::F, Cyc::from_int(2)).unwrap();
        assert_eq!(t.eval_f(&Padic::new(3, 4, 2, 5)).unwrap(), Cyc::from_int(4));
        let triv = MultChar::trivial(&c, Side::F).unwrap();
        assert!(triv.eval_f(&y).unwrap().is_one());
        let lifted = chi.lift(&c, 4).unwrap();
        for u in units_f(3, 4) {
            let x = Padic::new(3, 4, 0, u as i64);
            assert_eq!(lifted.eval_f(&x).unwrap(), chi.eval_f(&x).unwrap());
        }
    }

    #[test]
    fn norm_one_characters() {
        let c = c3();
        let g = NormOneGroup::new(&c, 1).unwrap();
        assert_eq!(enumerate_norm_one_chars(&g, 1).len(), 4);
        let g2 = NormOneGroup::new(&c, 2).unwrap();
        let all = enumerate_norm_one_chars(&g2, 2);
        assert_eq!(all.len(), 12);
        // degree 0 only for the trivial character; degree ≤ 1 is the dual of level 1
        assert_eq!(all.iter().filter(|x| x.degree == 0).count(), 1);
        assert_eq!(all.iter().filter(|x| x.degree <= 1).count(), 4);
        for x in &all {
            // direct check of the degree definition
            let d = (0..=2)
                .find(|&i| {
                    all[0].group.reps.iter().all(|&u| {
                        let in_sub = i == 0 || {
                            let pi = ipow(3, i);
                            (u.0 + pi - 1) % pi == 0 && u.1 % pi == 0
                        };
                        !in_sub || x.angle(u) == 0
                    })
                })
                .unwrap();
            assert_eq!(d, x.degree);
        }
    }

    #[test]
    fn epsilon_and_mu() {
        let c = c3();
        assert_eq!(epsilon_ef(&c, &c.f(3)).unwrap(), -1);
        assert_eq!(epsilon_ef(&c, &c.f(2)).unwrap(), 1);
        let a = c.f(6);
        let b = c.f(15);
        assert_eq!(
            epsilon_ef(&c, &a.mul(&b)).unwrap(),
            epsilon_ef(&c, &a).unwrap() * epsilon_ef(&c, &b).unwrap()
        );
        let mu = MultChar::unramified(&c, Side::E, Cyc::from_int(-1)).unwrap();
        assert!(check_mu(&c, &mu).unwrap());
        let triv = MultChar::trivial(&c, Side::E).unwrap();
        assert!(!check_mu(&c, &triv).unwrap());
        // nontrivial on F-units: pick an E-character whose restriction to (Z/3)^x is nontrivial
        let g = UnitGroup::new(&c, Side::E, 1).unwrap();
        let bad = enumerate_chars(&g, 1, &Cyc::from_int(-1))
            .unwrap()
            .into_iter()
            .find(|x| x.unit_value((2, 0)).unwrap() != Cyc::one())
            .unwrap();
        assert!(!check_mu(&c, &bad).unwrap());
    }

    #[test]
    fn compatibility() {
        let c = c3();
        let g = NormOneGroup::new(&c, 1).unwrap();
        let triv = NormOneChar::trivial(g.clone());
        let mu = MultChar::unramified(&c, Side::E, Cyc::from_int(-1)).unwrap();
        let eta = MultChar::trivial(&c, Side::E).unwrap();
        assert!(check_compat(&c, &triv, &mu, &triv, &eta).unwrap());
        let chi = NormOneChar::new(g, 1).unwrap();
        assert!(!check_compat(&c, &triv, &mu, &chi, &eta).unwrap());
        let fc = make_context(3, 4, ExtKind::None).unwrap();
        let gf = UnitGroup::new(&fc, Side::F, 2).unwrap();
        let om = MultChar::new(gf.clone(), vec![1], Cyc::from_int(2)).unwrap();
        let ch = MultChar::new(gf.clone(), vec![4], Cyc::from_int(3)).unwrap();
        let e1 = MultChar::new(gf, vec![2], Cyc::from_ratio(1, 5)).unwrap();
        let e2 = solve_eta2(&fc, &om, &ch, &e1).unwrap();
        assert!(check_compat_gl2(&fc, &om, &ch, &e1, &e2).unwrap());
    }

    #[test]
    fn dual_group_orders() {
        let c = c3();
        for l in 1..=3 {
            let g = UnitGroup::new(&c, Side::F, l).unwrap();
            assert_eq!(enumerate_chars(&g, l, &Cyc::one()).unwrap().len() as u64, g.order());
            let n = NormOneGroup::new(&c, l).unwrap();
            assert_eq!(enumerate_norm_one_chars(&n, l).len() as u64, n.order);
        }
    }
}
