//! Schwartz–Bruhat functions on `F`, `F²` and `E` as finite tables.
//!
//! An axis with level `(n, m)` carries functions supported in `P^{-n}` and
//! constant modulo `P^m`; index `i ∈ [0, p^{n+m})` stands for the coset of
//! `p^{-n}·i`. On `E` the index is a residue pair `(i0, i1) = i0 + i1·ω`.

use crate::character::NormOneChar;
use crate::error::{Error, Result};
use crate::ring::{inv_mod, ipow, mul_mod, ExtNumber, FieldContext, GaloisRing, Omega, Padic};
use crate::scalar::{cyc_json, qpow, Cyc, IntAccum};
use std::collections::BTreeMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Domain {
    F,
    F2,
    E,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Level {
    /// Support exponent: the function vanishes outside `P^{-n}`.
    pub n: i32,
    /// Smoothness exponent: constant on cosets of `P^m`.
    pub m: i32,
}

impl Level {
    pub fn new(n: i32, m: i32) -> Result<Level> {
        if n + m < 0 {
            return Err(Error::Invalid(format!("level ({n}, {m}) has negative width")));
        }
        Ok(Level { n, m })
    }
    pub fn width(&self) -> u32 {
        (self.n + self.m) as u32
    }
    fn join(&self, o: &Level) -> Level {
        Level { n: self.n.max(o.n), m: self.m.max(o.m) }
    }
}

pub type Key = [u64; 2];

/// `ψ(p^e · k)` as an exponent of `ζ_{p^{-e}}`; `None` when `e ≥ 0`.
fn psi_int(p: u64, e: i32, k: u64) -> Option<(u64, u64)> {
    if e >= 0 {
        return None;
    }
    let d = ipow(p, (-e) as u32);
    Some((d, k % d))
}

#[derive(Clone, Debug)]
pub struct SchwartzFn {
    pub p: u64,
    pub prec: u32,
    pub om: Omega,
    pub domain: Domain,
    pub levels: Vec<Level>,
    /// Every entry carries the factor `γ_ψ^gamma` of the symbolic Weil index.
    pub gamma: i32,
    pub table: BTreeMap<Key, Cyc>,
}

impl SchwartzFn {
    pub fn empty(ctx: &FieldContext, domain: Domain, levels: Vec<Level>) -> Self {
        SchwartzFn { p: ctx.p, prec: ctx.prec, om: ctx.omega, domain, levels, gamma: 0, table: BTreeMap::new() }
    }
    fn like(&self, levels: Vec<Level>) -> Self {
        SchwartzFn { levels, table: BTreeMap::new(), ..self.clone() }
    }
    pub fn axis_size(&self, k: usize) -> u64 {
        ipow(self.p, self.levels[k].width())
    }
    pub fn set(&mut self, key: Key, v: Cyc) {
        if v.is_zero() {
            self.table.remove(&key);
        } else {
            self.table.insert(key, v);
        }
    }
    pub fn is_zero(&self) -> bool {
        self.table.is_empty()
    }

    /// `1_{P^i}` on `F`.
    pub fn ball_f(ctx: &FieldContext, i: i32) -> Self {
        let mut f = Self::empty(ctx, Domain::F, vec![Level { n: -i, m: i }]);
        f.set([0, 0], Cyc::one());
        f
    }
    /// `1_{c + P^l}` on `F` for integral `c`, `l ≥ 1`.
    pub fn coset_f(ctx: &FieldContext, c: i64, l: i32) -> Result<Self> {
        let lv = Level::new(0, l)?;
        let mut f = Self::empty(ctx, Domain::F, vec![lv]);
        f.set([crate::ring::rem(c, ipow(ctx.p, l as u32)), 0], Cyc::one());
        Ok(f)
    }
    /// `1_{P_E^i}` on `E`.
    pub fn ball_e(ctx: &FieldContext, i: i32) -> Result<Self> {
        ctx.require_unramified()?;
        let mut f = Self::empty(ctx, Domain::E, vec![Level { n: -i, m: i }]);
        f.set([0, 0], Cyc::one());
        Ok(f)
    }
    /// `f ⊗ g` on `F²` from two functions on `F`.
    pub fn tensor(f: &Self, g: &Self) -> Result<Self> {
        if f.domain != Domain::F || g.domain != Domain::F {
            return Err(Error::Invalid("tensor needs two functions on F".into()));
        }
        let mut out = SchwartzFn {
            domain: Domain::F2,
            levels: vec![f.levels[0], g.levels[0]],
            gamma: f.gamma + g.gamma,
            table: BTreeMap::new(),
            ..f.clone()
        };
        for (a, x) in &f.table {
            for (b, y) in &g.table {
                out.set([a[0], b[0]], x.mul(y));
            }
        }
        Ok(out)
    }

    fn point_f(&self, k: usize, i: u64) -> Padic {
        Padic::new(self.p, self.prec, -self.levels[k].n, i as i64)
    }
    fn point_e(&self, key: Key) -> ExtNumber {
        ExtNumber::new(self.p, self.prec, self.om, -self.levels[0].n, key[0] as i64, key[1] as i64)
    }
    /// Table index of `x` on axis `k`, or `None` outside the support.
    fn index_f(&self, k: usize, x: &Padic) -> Result<Option<u64>> {
        let lv = self.levels[k];
        if x.is_zero() {
            return Ok(Some(0));
        }
        if x.v < -lv.n {
            return Ok(None);
        }
        Ok(Some(x.scaled_residue(lv.n, lv.width())?))
    }
    fn index_e(&self, x: &ExtNumber) -> Result<Option<Key>> {
        let lv = self.levels[0];
        if x.is_zero() {
            return Ok(Some([0, 0]));
        }
        if x.v < -lv.n {
            return Ok(None);
        }
        let (a, b) = x.scaled_residue(lv.n, lv.width())?;
        Ok(Some([a, b]))
    }
    fn entry(&self, key: Key) -> Cyc {
        self.table.get(&key).cloned().unwrap_or_else(Cyc::zero)
    }
    /// Value at a point of `F` (the `γ` factor is left symbolic).
    pub fn eval_f(&self, x: &Padic) -> Result<Cyc> {
        if self.domain != Domain::F {
            return Err(Error::Invalid("eval_f on a non-F function".into()));
        }
        Ok(match self.index_f(0, x)? {
            Some(i) => self.entry([i, 0]),
            None => Cyc::zero(),
        })
    }
    pub fn eval_f2(&self, x: &Padic, y: &Padic) -> Result<Cyc> {
        if self.domain != Domain::F2 {
            return Err(Error::Invalid("eval_f2 on a non-F² function".into()));
        }
        Ok(match (self.index_f(0, x)?, self.index_f(1, y)?) {
            (Some(i), Some(j)) => self.entry([i, j]),
            _ => Cyc::zero(),
        })
    }
    pub fn eval_e(&self, x: &ExtNumber) -> Result<Cyc> {
        if self.domain != Domain::E {
            return Err(Error::Invalid("eval_e on a non-E function".into()));
        }
        Ok(match self.index_e(x)? {
            Some(k) => self.entry(k),
            None => Cyc::zero(),
        })
    }

    /// Re-express at coarser support / finer smoothness on every axis.
    pub fn refine(&self, levels: &[Level]) -> Result<Self> {
        if levels.len() != self.levels.len() {
            return Err(Error::Invalid("level count mismatch".into()));
        }
        for (a, b) in self.levels.iter().zip(levels) {
            if b.n < a.n || b.m < a.m {
                return Err(Error::Invalid("refine can only widen a level".into()));
            }
        }
        if levels == self.levels.as_slice() {
            return Ok(self.clone());
        }
        let p = self.p;
        let comp = |k: usize, i: u64| -> Vec<u64> {
            let (a, b) = (self.levels[k], levels[k]);
            let base = i * ipow(p, (b.n - a.n) as u32);
            let step = ipow(p, (b.n + a.m) as u32);
            (0..ipow(p, (b.m - a.m) as u32)).map(|t| base + t * step).collect()
        };
        let mut out = self.like(levels.to_vec());
        for (key, v) in &self.table {
            match self.domain {
                Domain::F => {
                    for i in comp(0, key[0]) {
                        out.table.insert([i, 0], v.clone());
                    }
                }
                Domain::F2 => {
                    let js = comp(1, key[1]);
                    for i in comp(0, key[0]) {
                        for &j in &js {
                            out.table.insert([i, j], v.clone());
                        }
                    }
                }
                Domain::E => {
                    let js = comp(0, key[1]);
                    for i in comp(0, key[0]) {
                        for &j in &js {
                            out.table.insert([i, j], v.clone());
                        }
                    }
                }
            }
        }
        Ok(out)
    }
    fn common(&self, o: &Self) -> Result<(Self, Self)> {
        if self.domain != o.domain || self.p != o.p {
            return Err(Error::Invalid("functions on different domains".into()));
        }
        let lv: Vec<Level> = self.levels.iter().zip(&o.levels).map(|(a, b)| a.join(b)).collect();
        Ok((self.refine(&lv)?, o.refine(&lv)?))
    }
    pub fn add(&self, o: &Self) -> Result<Self> {
        if o.is_zero() {
            return Ok(self.clone());
        }
        if self.is_zero() {
            return Ok(o.clone());
        }
        if self.gamma != o.gamma {
            return Err(Error::Invalid("adding functions with different powers of γ".into()));
        }
        let (mut a, b) = self.common(o)?;
        for (k, v) in b.table {
            let s = a.entry(k).add(&v);
            a.set(k, s);
        }
        Ok(a)
    }
    pub fn scale(&self, c: &Cyc) -> Self {
        let mut out = self.like(self.levels.clone());
        for (k, v) in &self.table {
            out.set(*k, v.mul(c));
        }
        out
    }
    pub fn sub(&self, o: &Self) -> Result<Self> {
        self.add(&o.scale(&Cyc::from_int(-1)))
    }
    /// Exact equality as functions (including the `γ` power unless both vanish).
    pub fn same_as(&self, o: &Self) -> Result<bool> {
        if self.is_zero() || o.is_zero() {
            return Ok(self.is_zero() && o.is_zero());
        }
        if self.gamma != o.gamma {
            return Ok(false);
        }
        let (a, b) = self.common(o)?;
        Ok(a.table == b.table)
    }
    /// Smallest certificate: shrink support and coarsen smoothness as far as
    /// the table allows.
    pub fn compact(&self) -> Result<Self> {
        let mut cur = self.clone();
        loop {
            let mut changed = false;
            for k in 0..cur.axis_count() {
                if let Some(c) = cur.try_shrink(k)? {
                    cur = c;
                    changed = true;
                }
                if let Some(c) = cur.try_coarsen(k)? {
                    cur = c;
                    changed = true;
                }
            }
            if !changed {
                return Ok(cur);
            }
        }
    }
    fn axis_count(&self) -> usize {
        self.levels.len()
    }
    fn comps(&self, k: usize, key: &Key) -> Vec<u64> {
        match self.domain {
            Domain::E => vec![key[0], key[1]],
            _ => vec![key[k]],
        }
    }
    fn try_shrink(&self, k: usize) -> Result<Option<Self>> {
        let lv = self.levels[k];
        if lv.width() == 0 {
            return Ok(None);
        }
        let p = self.p;
        if !self.table.keys().all(|key| self.comps(k, key).iter().all(|c| c % p == 0)) {
            return Ok(None);
        }
        let mut levels = self.levels.clone();
        levels[k] = Level { n: lv.n - 1, m: lv.m };
        let mut out = self.like(levels);
        for (key, v) in &self.table {
            let mut nk = *key;
            match self.domain {
                Domain::E => {
                    nk = [key[0] / p, key[1] / p];
                }
                _ => nk[k] = key[k] / p,
            }
            out.table.insert(nk, v.clone());
        }
        Ok(Some(out))
    }
    fn try_coarsen(&self, k: usize) -> Result<Option<Self>> {
        let lv = self.levels[k];
        if lv.width() == 0 {
            return Ok(None);
        }
        let mut levels = self.levels.clone();
        levels[k] = Level { n: lv.n, m: lv.m - 1 };
        let small = ipow(self.p, lv.width() - 1);
        let mut out = self.like(levels);
        for (key, v) in &self.table {
            let mut nk = *key;
            match self.domain {
                Domain::E => nk = [key[0] % small, key[1] % small],
                _ => nk[k] = key[k] % small,
            }
            out.table.insert(nk, v.clone());
        }
        let back = out.refine(&self.levels)?;
        Ok((back.table == self.table).then_some(out))
    }

    /// Multiply each entry by `ψ(angle(key))` where `angle` returns
    /// `(den, num)`, i.e. `ζ_den^num`.
    fn twist_by(&self, mut angle: impl FnMut(&Key) -> Option<(u64, u64)>) -> Self {
        let mut out = self.like(self.levels.clone());
        for (k, v) in &self.table {
            let val = match angle(k) {
                Some((d, a)) => v.mul_root(d, a as i64),
                None => v.clone(),
            };
            out.set(*k, val);
        }
        out
    }

    /// `(x, y) ↦ ψ(sign·b·x·y) Φ(x, y)`.
    pub fn twist_xy(&self, b: &Padic, sign: i32) -> Result<Self> {
        if self.domain != Domain::F2 {
            return Err(Error::Invalid("twist_xy needs F²".into()));
        }
        if b.is_zero() {
            return Ok(self.clone());
        }
        let (l0, l1) = (self.levels[0], self.levels[1]);
        let levels = vec![
            Level { n: l0.n, m: l0.m.max(l1.n - b.v) },
            Level { n: l1.n, m: l1.m.max(l0.n - b.v) },
        ];
        let f = self.refine(&levels)?;
        let e = b.v - levels[0].n - levels[1].n;
        if e < 0 && (-e) as u32 > b.prec {
            return Err(Error::Precision("multiplier known to too few digits".into()));
        }
        let p = self.p;
        let md = if e < 0 { ipow(p, (-e) as u32) } else { 1 };
        let ub = if sign < 0 { (md - b.u % md) % md } else { b.u % md };
        Ok(f.twist_by(|k| psi_int(p, e, mul_mod(mul_mod(ub, k[0] % md, md), k[1] % md, md))))
    }

    /// `x ↦ ψ(sign·b·x·x̄) φ(x)` on `E`, `b ∈ F`.
    pub fn twist_norm(&self, b: &Padic, sign: i32) -> Result<Self> {
        if self.domain != Domain::E {
            return Err(Error::Invalid("twist_norm needs E".into()));
        }
        if b.is_zero() {
            return Ok(self.clone());
        }
        let l = self.levels[0];
        let f = self.refine(&[Level { n: l.n, m: l.m.max(l.n - b.v) }])?;
        let lv = f.levels[0];
        let e = b.v - 2 * lv.n;
        if e < 0 && (-e) as u32 > b.prec {
            return Err(Error::Precision("multiplier known to too few digits".into()));
        }
        let p = self.p;
        let md = if e < 0 { ipow(p, (-e) as u32) } else { 1 };
        let ub = if sign < 0 { (md - b.u % md) % md } else { b.u % md };
        let g = GaloisRing::new(p, (-e).max(0) as u32, self.om);
        Ok(f.twist_by(|k| {
            let nm = g.norm((k[0] % md, k[1] % md));
            psi_int(p, e, mul_mod(ub, nm, md))
        }))
    }

    /// Axis `k` of an `F`/`F²` function: `x ↦ f(a·x)`.
    pub fn dilate_axis(&self, k: usize, a: &Padic) -> Result<Self> {
        if self.domain == Domain::E {
            return Err(Error::Invalid("dilate_axis is for F-axes".into()));
        }
        if a.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let lv = self.levels[k];
        let nl = Level { n: lv.n + a.v, m: lv.m - a.v };
        let size = ipow(self.p, lv.width());
        if lv.width() > a.prec {
            return Err(Error::Precision("dilation unit known to too few digits".into()));
        }
        let uinv = inv_mod(a.u % size.max(1), size.max(1)).unwrap_or(0);
        let mut levels = self.levels.clone();
        levels[k] = nl;
        let mut out = self.like(levels);
        for (key, v) in &self.table {
            let mut nk = *key;
            nk[k] = mul_mod(key[k], uinv, size.max(1));
            out.table.insert(nk, v.clone());
        }
        Ok(out)
    }
    /// `x ↦ φ(a·x)` on `E`.
    pub fn dilate_e(&self, a: &ExtNumber) -> Result<Self> {
        if self.domain != Domain::E {
            return Err(Error::Invalid("dilate_e needs E".into()));
        }
        if a.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let lv = self.levels[0];
        if lv.width() > a.prec {
            return Err(Error::Precision("dilation unit known to too few digits".into()));
        }
        let g = GaloisRing::new(self.p, lv.width(), self.om);
        let uinv = g.inv(g.reduce(a.unit())).ok_or(Error::DivisionByZero)?;
        let mut out = self.like(vec![Level { n: lv.n + a.v, m: lv.m - a.v }]);
        for (key, v) in &self.table {
            let r = g.mul((key[0], key[1]), uinv);
            out.table.insert([r.0, r.1], v.clone());
        }
        Ok(out)
    }
    /// Exchange the two axes of an `F²` function.
    pub fn swap(&self) -> Result<Self> {
        if self.domain != Domain::F2 {
            return Err(Error::Invalid("swap needs F²".into()));
        }
        let mut out = self.like(vec![self.levels[1], self.levels[0]]);
        for (k, v) in &self.table {
            out.table.insert([k[1], k[0]], v.clone());
        }
        Ok(out)
    }

    /// One-variable transform on axis `k`: `ξ ↦ ∫ f(x) ψ(sign·x·ξ) dx`.
    pub fn fourier_axis(&self, k: usize, sign: i32) -> Result<Self> {
        if self.domain == Domain::E {
            return Err(Error::Invalid("fourier_axis is for F-axes".into()));
        }
        let lv = self.levels[k];
        let size = ipow(self.p, lv.width());
        let mut levels = self.levels.clone();
        levels[k] = Level { n: lv.m, m: lv.n };
        let mut out = self.like(levels);
        let vol = Cyc::from_rational(qpow(self.p, -(lv.m as i64)));
        // group by the other coordinate, then by value
        let mut groups: BTreeMap<u64, Vec<(u64, Cyc)>> = BTreeMap::new();
        for (key, v) in &self.table {
            let other = if self.domain == Domain::F2 { key[1 - k] } else { 0 };
            groups.entry(other).or_default().push((key[k], v.clone()));
        }
        for (other, entries) in groups {
            let classes = value_classes(&entries);
            for j in 0..size {
                let mut total = Cyc::zero();
                for (val, idx) in &classes {
                    let mut acc = IntAccum::new(size);
                    for &i in idx {
                        let t = mul_mod(i, j, size);
                        acc.add_root(if sign < 0 { (size - t) % size } else { t }, 1);
                    }
                    if acc.is_zero() {
                        continue;
                    }
                    total = total.add(&acc.to_cyc().mul(val));
                }
                if !total.is_zero() {
                    let mut key = [0u64; 2];
                    key[k] = j;
                    if self.domain == Domain::F2 {
                        key[1 - k] = other;
                    }
                    out.table.insert(key, total.mul(&vol));
                }
            }
        }
        Ok(out)
    }

    /// `Φ̂(x, y) = ∫ Φ(u, v) ψ(b(uy − vx)) du dv` (`b = 1` gives the standard
    /// transform of the functional equation).
    pub fn fourier2(&self, b: Option<&Padic>) -> Result<Self> {
        if self.domain != Domain::F2 {
            return Err(Error::Invalid("fourier2 needs F²".into()));
        }
        // axis 0 (u) pairs with y through +, axis 1 (v) pairs with x through −
        let t = self.fourier_axis(0, 1)?.fourier_axis(1, -1)?.swap()?;
        match b {
            None => Ok(t),
            Some(b) => t.dilate_axis(0, b)?.dilate_axis(1, b),
        }
    }

    /// `I(f)(x, y) = ∫ ψ^{-1}(yz) f(x, z) dz`.
    pub fn partial_fourier(&self) -> Result<Self> {
        self.fourier_axis(1, -1)
    }
    pub fn partial_fourier_inverse(&self) -> Result<Self> {
        self.fourier_axis(1, 1)
    }

    /// `x ↦ ∫_E φ(y) ψ(sign·tr(x ȳ)) dy` with `vol(O_E) = 1`.
    pub fn fourier_e(&self, sign: i32) -> Result<Self> {
        if self.domain != Domain::E {
            return Err(Error::Invalid("fourier_e needs E".into()));
        }
        let lv = self.levels[0];
        let w = lv.width();
        let size = ipow(self.p, w);
        let g = GaloisRing::new(self.p, w, self.om);
        let mut out = self.like(vec![Level { n: lv.m, m: lv.n }]);
        let vol = Cyc::from_rational(qpow(self.p, -2 * lv.m as i64));
        let entries: Vec<(u64, Cyc)> = self
            .table
            .iter()
            .map(|(k, v)| (k[0] * size + k[1], v.clone()))
            .collect();
        let classes = value_classes(&entries);
        let classes: Vec<(Cyc, Vec<(u64, u64)>)> = classes
            .into_iter()
            .map(|(v, idx)| (v, idx.into_iter().map(|c| (c / size, c % size)).collect()))
            .collect();
        for j0 in 0..size {
            for j1 in 0..size {
                let jc = g.conj((j0, j1));
                let mut total = Cyc::zero();
                for (val, idx) in &classes {
                    let mut acc = IntAccum::new(size);
                    for &y in idx {
                        let t = g.trace(g.mul(jc, y)) % size;
                        acc.add_root(if sign < 0 { (size - t) % size } else { t }, 1);
                    }
                    if acc.is_zero() {
                        continue;
                    }
                    total = total.add(&acc.to_cyc().mul(val));
                }
                if !total.is_zero() {
                    out.table.insert([j0, j1], total.mul(&vol));
                }
            }
        }
        Ok(out)
    }

    /// `(gΦ)(x, y) = Φ((x, y)·g)` for `g = [[g11, g12], [g21, g22]]` over `F`.
    pub fn translate(&self, g: &[Padic; 4]) -> Result<Self> {
        if self.domain != Domain::F2 {
            return Err(Error::Invalid("translate needs F²".into()));
        }
        let det = g[0].mul(&g[3]).sub(&g[1].mul(&g[2]));
        if det.is_zero() {
            return Err(Error::Invalid("singular matrix".into()));
        }
        let di = det.inv()?;
        let ginv = [g[3].mul(&di), g[1].neg().mul(&di), g[2].neg().mul(&di), g[0].mul(&di)];
        let vmin = |m: &[Padic; 4]| m.iter().filter(|x| !x.is_zero()).map(|x| x.v).min().unwrap();
        let nmax = self.levels[0].n.max(self.levels[1].n);
        let mmax = self.levels[0].m.max(self.levels[1].m);
        let lv = Level::new(nmax - vmin(&ginv), mmax - vmin(g))?;
        let mut out = self.like(vec![lv, lv]);
        let size = ipow(self.p, lv.width());
        for i in 0..size {
            let x = out.point_f(0, i);
            for j in 0..size {
                let y = out.point_f(1, j);
                let xx = x.mul(&g[0]).add(&y.mul(&g[2]));
                let yy = x.mul(&g[1]).add(&y.mul(&g[3]));
                let v = self.eval_f2(&xx, &yy)?;
                out.set([i, j], v);
            }
        }
        Ok(out)
    }

    /// `∫ f dx` over the whole domain (`vol(O) = 1` per axis, `vol(O_E) = 1`).
    pub fn integral(&self) -> Cyc {
        let mut s = Cyc::zero();
        for v in self.table.values() {
            s = s.add(v);
        }
        let k: i64 = match self.domain {
            Domain::F => self.levels[0].m as i64,
            Domain::F2 => (self.levels[0].m + self.levels[1].m) as i64,
            Domain::E => 2 * self.levels[0].m as i64,
        };
        s.mul(&Cyc::from_rational(qpow(self.p, -k)))
    }
    /// `∫ |f|²`.
    pub fn norm2(&self) -> Cyc {
        let sq = SchwartzFn {
            table: self.table.iter().map(|(k, v)| (*k, v.mul(&v.conj()))).collect(),
            ..self.clone()
        };
        sq.integral()
    }

    /// Representative points of every stored entry (`F²`).
    pub fn points_f2(&self) -> Vec<(Padic, Padic, Cyc)> {
        self.table.iter().map(|(k, v)| (self.point_f(0, k[0]), self.point_f(1, k[1]), v.clone())).collect()
    }
    pub fn points_e(&self) -> Vec<(ExtNumber, Cyc)> {
        self.table.iter().map(|(k, v)| (self.point_e(*k), v.clone())).collect()
    }

    /// Pointwise `φ_χ(a) = ∫_{E¹} χ^{-1}(u) φ(ua) du` with `vol(E¹) = 1`.
    pub fn chi_project_e(&self, ctx: &FieldContext, chi: &NormOneChar, a: &ExtNumber) -> Result<Cyc> {
        if self.domain != Domain::E {
            return Err(Error::Invalid("chi_project_e needs E".into()));
        }
        if a.is_zero() {
            return Ok(if chi.k == 0 { self.eval_e(a)? } else { Cyc::zero() });
        }
        // u ↦ φ(ua) is constant on E¹ ∩ (1 + P^k) once k + v(a) ≥ m
        let lv = self.levels[0];
        let k = ((lv.m - a.v).max(chi.level() as i32)).max(1) as u32;
        let c = chi.lift(ctx, k)?;
        let mut s = Cyc::zero();
        for &u in &c.group.reps {
            let ue = ExtNumber::from_residue(self.p, self.prec, self.om, 0, u);
            let val = self.eval_e(&ue.mul(a))?;
            if !val.is_zero() {
                s = s.add(&val.mul(&c.eval(u).conj()));
            }
        }
        Ok(s.scale(&crate::scalar::rat(1, c.group.order as i64)))
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "domain": format!("{:?}", self.domain),
            "p": self.p,
            "levels": self.levels.iter().map(|l| serde_json::json!({"n": l.n, "m": l.m})).collect::<Vec<_>>(),
            "gamma_power": self.gamma,
            "entries": self.table.iter().map(|(k, v)| serde_json::json!({"key": k, "value": cyc_json(v)})).collect::<Vec<_>>(),
        })
    }
}

fn value_classes(entries: &[(u64, Cyc)]) -> Vec<(Cyc, Vec<u64>)> {
    let mut classes: Vec<(Cyc, Vec<u64>)> = Vec::new();
    for (i, v) in entries {
        match classes.iter_mut().find(|(c, _)| c == v) {
            Some((_, idx)) => idx.push(*i),
            None => classes.push((v.clone(), vec![*i])),
        }
    }
    classes
}

/// `Φ_{i,l}(x, y) = [x ∈ P^i]·[y ∈ 1 + P^l]`.
pub fn make_phi_il(ctx: &FieldContext, i: i32, l: i32) -> Result<SchwartzFn> {
    if l < 1 {
        return Err(Error::Invalid("Φ_{i,l} needs l ≥ 1".into()));
    }
    SchwartzFn::tensor(&SchwartzFn::ball_f(ctx, i), &SchwartzFn::coset_f(ctx, 1, l)?)
}

/// `φ^m(x, y) = [x ∈ 1 + P^m]·[y ∈ 1 + P^m]`.
pub fn make_phi_m(ctx: &FieldContext, m: i32) -> Result<SchwartzFn> {
    let c = SchwartzFn::coset_f(ctx, 1, m)?;
    SchwartzFn::tensor(&c, &c)
}

/// `φ^{m,χ}`: supported on `E¹(1 + P_E^m)` with `φ(zu) = χ(z)`.
pub fn make_phi_m_chi(ctx: &FieldContext, m: u32, chi: &NormOneChar) -> Result<SchwartzFn> {
    ctx.require_unramified()?;
    if m < chi.degree || m == 0 {
        return Err(Error::Invalid(format!("φ^(m,χ) needs m ≥ max(deg χ, 1), got m = {m}, deg = {}", chi.degree)));
    }
    let c = chi.lift(ctx, m.max(chi.level()))?;
    let md = ipow(ctx.p, m);
    let mut f = SchwartzFn::empty(ctx, Domain::E, vec![Level { n: 0, m: m as i32 }]);
    for &u in &c.group.reps {
        f.set([u.0 % md, u.1 % md], c.eval(u));
    }
    // two decompositions of the same coset must give the same value
    let fine = chi.lift(ctx, m.max(chi.level()) + 1)?;
    for &u in &fine.group.reps {
        let key = [u.0 % md, u.1 % md];
        if f.entry(key) != fine.eval(u) {
            return Err(Error::Verification("φ^(m,χ) is not well defined".into()));
        }
    }
    Ok(f)
}

/// `χ`-projection on `F²` evaluated at a point:
/// `φ_χ(x, y) = ∫_{F^×} χ^{-1}(a) φ(ax, a^{-1}y) d*a`.
pub fn chi_project_f2(
    phi: &SchwartzFn,
    chi: &crate::character::MultChar,
    x: &Padic,
    y: &Padic,
) -> Result<Cyc> {
    if phi.domain != Domain::F2 {
        return Err(Error::Invalid("chi_project_f2 needs F²".into()));
    }
    if x.is_zero() || y.is_zero() {
        return Err(Error::Unsupported("projection at a point on an axis".into()));
    }
    let (l0, l1) = (phi.levels[0], phi.levels[1]);
    // ax ∈ P^{-n0} and a^{-1}y ∈ P^{-n1}
    let vlo = -l0.n - x.v;
    let vhi = l1.n + y.v;
    let p = phi.p;
    let mut total = Cyc::zero();
    for v in vlo..=vhi {
        let k = (l0.m - v - x.v).max(l1.m + v - y.v).max(chi.level() as i32).max(1) as u32;
        if k > phi.prec {
            return Err(Error::Precision(format!("projection needs level {k}")));
        }
        let md = ipow(p, k);
        let mut shell = Cyc::zero();
        let mut acc_vals: Vec<(Cyc, Cyc)> = Vec::new();
        for u in crate::ring::units_f(p, k) {
            let a = Padic::new(p, phi.prec, v, u as i64);
            let val = phi.eval_f2(&a.mul(x), &a.inv()?.mul(y))?;
            if val.is_zero() {
                continue;
            }
            let cu = chi.unit_value((u % chi.group.modulus.max(1), 0))?.conj();
            acc_vals.push((val, cu));
        }
        for (val, cu) in acc_vals {
            shell = shell.add(&val.mul(&cu));
        }
        if shell.is_zero() {
            continue;
        }
        let chi_p = chi.at_p.pow(-(v as i64))?;
        let _ = md;
        total = total.add(&shell.mul(&chi_p).mul(&Cyc::from_rational(qpow(p, -(k as i64)))));
    }
    Ok(total)
}
