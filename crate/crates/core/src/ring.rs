//! Truncated arithmetic in `F = Q_p` and the quadratic extension `E = F(ω)`.
//!
//! A nonzero element is stored as `p^v · u` with `u` a unit residue known to
//! `prec` relative digits. Residue-level helpers (`pow_mod`, the Galois ring
//! `GaloisRing`) are used directly by the hot loops elsewhere.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

pub const ZERO_VAL: i32 = i32::MAX;

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

pub fn ipow(p: u64, e: u32) -> u64 {
    p.checked_pow(e).expect("p^e overflows u64")
}

#[inline]
pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut r = 1u64;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, b, m);
        }
        b = mul_mod(b, b, m);
        e >>= 1;
    }
    r
}

pub fn inv_mod(a: u64, m: u64) -> Option<u64> {
    if m == 1 {
        return Some(0);
    }
    let (mut t, mut nt) = (0i128, 1i128);
    let (mut r, mut nr) = (m as i128, (a % m) as i128);
    while nr != 0 {
        let q = r / nr;
        (t, nt) = (nt, t - q * nt);
        (r, nr) = (nr, r - q * nr);
    }
    if r != 1 {
        return None;
    }
    Some(t.rem_euclid(m as i128) as u64)
}

/// `n mod m` for signed `n`.
#[inline]
pub fn rem(n: i64, m: u64) -> u64 {
    (n as i128).rem_euclid(m as i128) as u64
}

/// p-adic valuation of a nonzero integer.
pub fn val_u(mut n: u64, p: u64) -> u32 {
    assert!(n != 0);
    let mut k = 0;
    while n % p == 0 {
        n /= p;
        k += 1;
    }
    k
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ExtKind {
    None,
    Unramified,
    Ramified,
}

/// `ω² = a + b·ω`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Omega {
    pub a: i64,
    pub b: i64,
}

impl Omega {
    /// Unramified generator: `ω² = d` with `d` the least non-residue for odd
    /// `p`, and `ω² + ω + 1 = 0` for `p = 2`.
    pub fn unramified(p: u64) -> Omega {
        if p == 2 {
            return Omega { a: -1, b: -1 };
        }
        let d = (2..p).find(|&d| pow_mod(d, (p - 1) / 2, p) == p - 1).unwrap();
        Omega { a: d as i64, b: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldContext {
    pub p: u64,
    pub prec: u32,
    pub ext: ExtKind,
    pub omega: Omega,
    /// Minimum number of relative digits an arithmetic result may keep.
    pub floor: u32,
}

pub fn make_context(p: u64, prec: u32, ext: ExtKind) -> Result<FieldContext> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    if prec == 0 {
        return Err(Error::Invalid("precision must be at least 1".into()));
    }
    if (p as f64).powi(2 * prec as i32 + 2) > 9.0e18 {
        return Err(Error::Invalid(format!("p^{prec} too large for 64-bit residues")));
    }
    let omega = match ext {
        ExtKind::Ramified if p == 2 => return Err(Error::RamifiedResidueTwo),
        ExtKind::Ramified => Omega { a: p as i64, b: 0 },
        _ => Omega::unramified(p),
    };
    Ok(FieldContext { p, prec, ext, omega, floor: 1 })
}

impl FieldContext {
    pub fn q(&self) -> u64 {
        self.p
    }
    pub fn q_e(&self) -> u64 {
        self.p * self.p
    }
    pub fn modulus(&self) -> u64 {
        ipow(self.p, self.prec)
    }
    /// The integer `i_{E/F}`; zero in the unramified case.
    pub fn i_ef(&self) -> u32 {
        match self.ext {
            ExtKind::Ramified => 1,
            _ => 0,
        }
    }
    pub fn require_unramified(&self) -> Result<()> {
        match self.ext {
            ExtKind::Unramified => Ok(()),
            ExtKind::None => Err(Error::Unsupported("context has no extension".into())),
            ExtKind::Ramified => Err(Error::Unsupported(
                "E-side computations are implemented for unramified E only".into(),
            )),
        }
    }
    pub fn galois_ring(&self, level: u32) -> GaloisRing {
        GaloisRing::new(self.p, level, self.omega)
    }
    pub fn f(&self, n: i64) -> Padic {
        Padic::from_int(self.p, self.prec, n)
    }
    pub fn e(&self, a: i64, b: i64) -> ExtNumber {
        ExtNumber::from_ints(self.p, self.prec, self.omega, a, b)
    }
}

/// Residues of `O_F[ω]` modulo `p^level`, as pairs `(x0, x1) = x0 + x1·ω`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GaloisRing {
    pub p: u64,
    pub level: u32,
    pub modulus: u64,
    pub a: u64,
    pub b: u64,
}

pub type Gr = (u64, u64);

impl GaloisRing {
    pub fn new(p: u64, level: u32, om: Omega) -> Self {
        let modulus = ipow(p, level);
        GaloisRing { p, level, modulus, a: rem(om.a, modulus), b: rem(om.b, modulus) }
    }
    #[inline]
    pub fn add(&self, x: Gr, y: Gr) -> Gr {
        ((x.0 + y.0) % self.modulus, (x.1 + y.1) % self.modulus)
    }
    #[inline]
    pub fn sub(&self, x: Gr, y: Gr) -> Gr {
        let m = self.modulus;
        ((x.0 + m - y.0 % m) % m, (x.1 + m - y.1 % m) % m)
    }
    #[inline]
    pub fn mul(&self, x: Gr, y: Gr) -> Gr {
        let m = self.modulus as u128;
        let (x0, x1, y0, y1) = (x.0 as u128, x.1 as u128, y.0 as u128, y.1 as u128);
        let bd = x1 * y1 % m;
        let c0 = (x0 * y0 + bd * self.a as u128) % m;
        let c1 = (x0 * y1 + x1 * y0 + bd * self.b as u128) % m;
        (c0 as u64, c1 as u64)
    }
    #[inline]
    pub fn conj(&self, x: Gr) -> Gr {
        let m = self.modulus;
        ((x.0 + mul_mod(x.1, self.b, m)) % m, (m - x.1 % m) % m)
    }
    #[inline]
    pub fn norm(&self, x: Gr) -> u64 {
        self.mul(x, self.conj(x)).0
    }
    #[inline]
    pub fn trace(&self, x: Gr) -> u64 {
        self.add(x, self.conj(x)).0
    }
    pub fn is_unit(&self, x: Gr) -> bool {
        self.norm(x) % self.p != 0
    }
    pub fn inv(&self, x: Gr) -> Option<Gr> {
        let n = inv_mod(self.norm(x), self.modulus)?;
        let c = self.conj(x);
        Some((mul_mod(c.0, n, self.modulus), mul_mod(c.1, n, self.modulus)))
    }
    pub fn pow(&self, mut x: Gr, mut e: u64) -> Gr {
        let mut r = (1 % self.modulus, 0);
        while e > 0 {
            if e & 1 == 1 {
                r = self.mul(r, x);
            }
            x = self.mul(x, x);
            e >>= 1;
        }
        r
    }
    pub fn reduce(&self, x: Gr) -> Gr {
        (x.0 % self.modulus, x.1 % self.modulus)
    }
    /// All unit residues in lexicographic order.
    pub fn units(&self) -> Vec<Gr> {
        let m = self.modulus;
        let mut out = Vec::with_capacity(((self.p * self.p - 1) * m * m / (self.p * self.p)) as usize);
        for x0 in 0..m {
            for x1 in 0..m {
                if x0 % self.p != 0 || x1 % self.p != 0 {
                    out.push((x0, x1));
                }
            }
        }
        out
    }
    /// Index of a residue pair in `[0, modulus²)`.
    #[inline]
    pub fn index(&self, x: Gr) -> u64 {
        x.0 * self.modulus + x.1
    }
}

/// Units of `Z/p^m` in increasing order.
pub fn units_f(p: u64, m: u32) -> Vec<u64> {
    (0..ipow(p, m)).filter(|u| u % p != 0).collect()
}

/// Element `p^v·u` of `F`, `u` known modulo `p^prec`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Padic {
    pub p: u64,
    pub v: i32,
    pub u: u64,
    pub prec: u32,
}

impl Padic {
    pub fn zero(p: u64, prec: u32) -> Self {
        Padic { p, v: ZERO_VAL, u: 0, prec }
    }
    pub fn is_zero(&self) -> bool {
        self.v == ZERO_VAL
    }
    /// `p^v · n` for an arbitrary integer `n` (which may contain powers of p).
    pub fn new(p: u64, prec: u32, v: i32, n: i64) -> Self {
        if n == 0 {
            return Self::zero(p, prec);
        }
        let mut n = n as i128;
        let mut v = v;
        while n % p as i128 == 0 {
            n /= p as i128;
            v += 1;
        }
        let m = ipow(p, prec) as i128;
        Padic { p, v, u: n.rem_euclid(m) as u64, prec }
    }
    pub fn from_int(p: u64, prec: u32, n: i64) -> Self {
        Self::new(p, prec, 0, n)
    }
    pub fn from_ratio(p: u64, prec: u32, num: i64, den: i64) -> Result<Self> {
        if den == 0 {
            return Err(Error::DivisionByZero);
        }
        Ok(Self::from_int(p, prec, num).mul(&Self::from_int(p, prec, den).inv()?))
    }
    /// Uniformizer power `p^v`.
    pub fn p_pow(p: u64, prec: u32, v: i32) -> Self {
        Padic { p, v, u: 1 % ipow(p, prec), prec }
    }
    pub fn modulus(&self) -> u64 {
        ipow(self.p, self.prec)
    }
    pub fn valuation(&self) -> Option<i32> {
        (!self.is_zero()).then_some(self.v)
    }
    pub fn neg(&self) -> Self {
        if self.is_zero() {
            return *self;
        }
        let m = self.modulus();
        Padic { u: (m - self.u) % m, ..*self }
    }
    pub fn checked_add(&self, o: &Self) -> Result<Self> {
        self.add_with_floor(o, 1)
    }
    /// Addition that fails when fewer than `floor` relative digits survive.
    /// A sum that vanishes at the known precision is returned as zero.
    pub fn add_with_floor(&self, o: &Self, floor: u32) -> Result<Self> {
        if self.is_zero() {
            return Ok(*o);
        }
        if o.is_zero() {
            return Ok(*self);
        }
        let (x, y) = if self.v <= o.v { (self, o) } else { (o, self) };
        let d = (y.v - x.v) as u32;
        let r = x.prec.min(d.saturating_add(y.prec));
        let m = ipow(self.p, r);
        let sum = if d >= r {
            x.u % m
        } else {
            (x.u % m + mul_mod(y.u % m, ipow(self.p, d), m)) % m
        };
        if sum == 0 {
            return Ok(Self::zero(self.p, r));
        }
        let k = val_u(sum, self.p);
        if r - k < floor {
            return Err(Error::Precision(format!("cancellation left {} digits", r - k)));
        }
        Ok(Padic { p: self.p, v: x.v + k as i32, u: sum / ipow(self.p, k), prec: r - k })
    }
    pub fn add(&self, o: &Self) -> Self {
        self.checked_add(o).expect("p-adic addition lost all precision")
    }
    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }
    pub fn mul(&self, o: &Self) -> Self {
        if self.is_zero() || o.is_zero() {
            return Self::zero(self.p, self.prec.min(o.prec));
        }
        let r = self.prec.min(o.prec);
        let m = ipow(self.p, r);
        Padic { p: self.p, v: self.v + o.v, u: mul_mod(self.u % m, o.u % m, m), prec: r }
    }
    pub fn inv(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let m = self.modulus();
        Ok(Padic { p: self.p, v: -self.v, u: inv_mod(self.u, m).unwrap(), prec: self.prec })
    }
    pub fn div(&self, o: &Self) -> Result<Self> {
        Ok(self.mul(&o.inv()?))
    }
    /// `x · p^shift mod p^k`, provided `x · p^shift` is integral and known to
    /// that precision.
    pub fn scaled_residue(&self, shift: i32, k: u32) -> Result<u64> {
        if k == 0 || self.is_zero() {
            return Ok(0);
        }
        let w = self.v as i64 + shift as i64;
        if w < 0 {
            return Err(Error::Invalid("element not integral after scaling".into()));
        }
        if w >= k as i64 {
            return Ok(0);
        }
        let w = w as u32;
        let need = k - w;
        if need > self.prec {
            return Err(Error::Precision(format!("need {need} digits, have {}", self.prec)));
        }
        let m = ipow(self.p, k);
        Ok(mul_mod(self.u % ipow(self.p, need), ipow(self.p, w), m))
    }
    pub fn abs_exponent(&self) -> Option<i32> {
        self.valuation().map(|v| -v)
    }
    /// Exact rational value of the stored representative.
    pub fn to_rational(&self) -> num_rational::BigRational {
        use num_bigint::BigInt;
        use num_rational::BigRational;
        use num_traits::{One, Zero};
        if self.is_zero() {
            return BigRational::zero();
        }
        let base = BigInt::from(self.p);
        let pv = if self.v >= 0 {
            BigRational::from_integer(num_traits::pow(base, self.v as usize))
        } else {
            BigRational::one() / BigRational::from_integer(num_traits::pow(base, (-self.v) as usize))
        };
        pv * BigRational::from_integer(BigInt::from(self.u))
    }
    pub fn eq_value(&self, o: &Self) -> bool {
        if self.is_zero() || o.is_zero() {
            return self.is_zero() == o.is_zero();
        }
        let r = self.prec.min(o.prec);
        let m = ipow(self.p, r);
        self.v == o.v && self.u % m == o.u % m
    }
}

/// Element `p^v · (a + b·ω)` of `E` with `(a, b)` a unit residue pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ExtNumber {
    pub p: u64,
    pub v: i32,
    pub a: u64,
    pub b: u64,
    pub prec: u32,
    pub om: Omega,
}

impl ExtNumber {
    pub fn zero(p: u64, prec: u32, om: Omega) -> Self {
        ExtNumber { p, v: ZERO_VAL, a: 0, b: 0, prec, om }
    }
    pub fn is_zero(&self) -> bool {
        self.v == ZERO_VAL
    }
    fn ring(&self, r: u32) -> GaloisRing {
        GaloisRing::new(self.p, r, self.om)
    }
    pub fn new(p: u64, prec: u32, om: Omega, v: i32, a: i64, b: i64) -> Self {
        if a == 0 && b == 0 {
            return Self::zero(p, prec, om);
        }
        let (mut a, mut b, mut v) = (a as i128, b as i128, v);
        while a % p as i128 == 0 && b % p as i128 == 0 {
            a /= p as i128;
            b /= p as i128;
            v += 1;
        }
        let m = ipow(p, prec) as i128;
        ExtNumber { p, v, a: a.rem_euclid(m) as u64, b: b.rem_euclid(m) as u64, prec, om }
    }
    pub fn from_ints(p: u64, prec: u32, om: Omega, a: i64, b: i64) -> Self {
        Self::new(p, prec, om, 0, a, b)
    }
    pub fn from_f(x: &Padic, om: Omega) -> Self {
        if x.is_zero() {
            return Self::zero(x.p, x.prec, om);
        }
        ExtNumber { p: x.p, v: x.v, a: x.u, b: 0, prec: x.prec, om }
    }
    /// `p^v · (r.0 + r.1 ω)` for a residue pair (which need not be a unit).
    pub fn from_residue(p: u64, prec: u32, om: Omega, v: i32, r: Gr) -> Self {
        Self::new(p, prec, om, v, r.0 as i64, r.1 as i64)
    }
    pub fn modulus(&self) -> u64 {
        ipow(self.p, self.prec)
    }
    pub fn unit(&self) -> Gr {
        (self.a, self.b)
    }
    pub fn valuation(&self) -> Option<i32> {
        (!self.is_zero()).then_some(self.v)
    }
    pub fn is_in_f(&self) -> bool {
        self.is_zero() || self.b % self.modulus() == 0
    }
    pub fn to_f(&self) -> Option<Padic> {
        if self.is_zero() {
            return Some(Padic::zero(self.p, self.prec));
        }
        self.is_in_f().then_some(Padic { p: self.p, v: self.v, u: self.a, prec: self.prec })
    }
    pub fn neg(&self) -> Self {
        if self.is_zero() {
            return *self;
        }
        let m = self.modulus();
        ExtNumber { a: (m - self.a) % m, b: (m - self.b) % m, ..*self }
    }
    pub fn checked_add(&self, o: &Self) -> Result<Self> {
        if self.is_zero() {
            return Ok(*o);
        }
        if o.is_zero() {
            return Ok(*self);
        }
        let (x, y) = if self.v <= o.v { (self, o) } else { (o, self) };
        let d = (y.v - x.v) as u32;
        let r = x.prec.min(d.saturating_add(y.prec));
        let m = ipow(self.p, r);
        let (s0, s1) = if d >= r {
            (x.a % m, x.b % m)
        } else {
            let pd = ipow(self.p, d);
            ((x.a % m + mul_mod(y.a % m, pd, m)) % m, (x.b % m + mul_mod(y.b % m, pd, m)) % m)
        };
        if s0 == 0 && s1 == 0 {
            return Ok(Self::zero(self.p, r, self.om));
        }
        let k = match (s0, s1) {
            (0, s) | (s, 0) => val_u(s, self.p),
            (s, t) => val_u(s, self.p).min(val_u(t, self.p)),
        };
        if r - k < 1 {
            return Err(Error::Precision(format!("cancellation left {} digits", r - k)));
        }
        let pk = ipow(self.p, k);
        Ok(ExtNumber { p: self.p, v: x.v + k as i32, a: s0 / pk, b: s1 / pk, prec: r - k, om: self.om })
    }
    pub fn add(&self, o: &Self) -> Self {
        self.checked_add(o).expect("extension addition lost all precision")
    }
    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }
    pub fn mul(&self, o: &Self) -> Self {
        if self.is_zero() || o.is_zero() {
            return Self::zero(self.p, self.prec.min(o.prec), self.om);
        }
        let r = self.prec.min(o.prec);
        let g = self.ring(r);
        let (a, b) = g.mul(g.reduce(self.unit()), g.reduce(o.unit()));
        ExtNumber { p: self.p, v: self.v + o.v, a, b, prec: r, om: self.om }
    }
    pub fn conj(&self) -> Self {
        if self.is_zero() {
            return *self;
        }
        let (a, b) = self.ring(self.prec).conj(self.unit());
        ExtNumber { a, b, ..*self }
    }
    pub fn norm(&self) -> Padic {
        if self.is_zero() {
            return Padic::zero(self.p, self.prec);
        }
        let n = self.ring(self.prec).norm(self.unit());
        let r = Padic::new(self.p, self.prec, 2 * self.v, n as i64);
        Padic { prec: r.prec.min(self.prec), ..r }
    }
    pub fn trace(&self) -> Padic {
        self.add(&self.conj()).to_f().expect("trace lies in F")
    }
    pub fn inv(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let g = self.ring(self.prec);
        let (a, b) = g.inv(self.unit()).ok_or(Error::DivisionByZero)?;
        Ok(ExtNumber { v: -self.v, a, b, ..*self })
    }
    pub fn div(&self, o: &Self) -> Result<Self> {
        Ok(self.mul(&o.inv()?))
    }
    /// Residue pair of `x · p^shift mod p^k`, which must be integral.
    pub fn scaled_residue(&self, shift: i32, k: u32) -> Result<Gr> {
        if k == 0 || self.is_zero() {
            return Ok((0, 0));
        }
        let w = self.v as i64 + shift as i64;
        if w < 0 {
            return Err(Error::Invalid("element not integral after scaling".into()));
        }
        if w >= k as i64 {
            return Ok((0, 0));
        }
        let w = w as u32;
        let need = k - w;
        if need > self.prec {
            return Err(Error::Precision(format!("need {need} digits, have {}", self.prec)));
        }
        let m = ipow(self.p, k);
        let mn = ipow(self.p, need);
        let pw = ipow(self.p, w);
        Ok((mul_mod(self.a % mn, pw, m), mul_mod(self.b % mn, pw, m)))
    }
    pub fn eq_value(&self, o: &Self) -> bool {
        if self.is_zero() || o.is_zero() {
            return self.is_zero() == o.is_zero();
        }
        let r = self.prec.min(o.prec);
        let m = ipow(self.p, r);
        self.v == o.v && self.a % m == o.a % m && self.b % m == o.b % m
    }
}

pub fn conj(x: &ExtNumber) -> ExtNumber {
    x.conj()
}
pub fn norm(x: &ExtNumber) -> Padic {
    x.norm()
}
pub fn trace(x: &ExtNumber) -> Padic {
    x.trace()
}

/// Membership in `Nm(E^×)`: for unramified `E` this is parity of the valuation.
pub fn is_norm(ctx: &FieldContext, a: &Padic) -> Result<bool> {
    if a.is_zero() {
        return Err(Error::Invalid("is_norm of zero".into()));
    }
    ctx.require_unramified()?;
    Ok(a.v % 2 == 0)
}

/// Representatives of `p^v · (O^× / (1 + P^m))` in `F`.
pub fn enumerate_shell(ctx: &FieldContext, v: i32, m: u32) -> Result<Vec<Padic>> {
    if m == 0 || m > ctx.prec {
        return Err(Error::Invalid(format!("shell level {m} outside 1..={}", ctx.prec)));
    }
    Ok(units_f(ctx.p, m)
        .into_iter()
        .map(|u| Padic { p: ctx.p, v, u, prec: m })
        .collect())
}

/// Representatives of `p^v · (O_E^× / (1 + P_E^m))`.
pub fn enumerate_shell_ext(ctx: &FieldContext, v: i32, m: u32) -> Result<Vec<ExtNumber>> {
    ctx.require_unramified()?;
    if m == 0 || m > ctx.prec {
        return Err(Error::Invalid(format!("shell level {m} outside 1..={}", ctx.prec)));
    }
    Ok(ctx
        .galois_ring(m)
        .units()
        .into_iter()
        .map(|(a, b)| ExtNumber { p: ctx.p, v, a, b, prec: m, om: ctx.omega })
        .collect())
}

/// Residues `u` with `u·ū ≡ 1 mod p^m`: representatives of `E¹/(E¹ ∩ (1+P_E^m))`.
pub fn norm_one_reps(ctx: &FieldContext, m: u32) -> Result<Vec<Gr>> {
    ctx.require_unramified()?;
    static MEMO: OnceLock<Mutex<HashMap<(u64, Omega, u32), Vec<Gr>>>> = OnceLock::new();
    let key = (ctx.p, ctx.omega, m.max(1));
    let memo = MEMO.get_or_init(Default::default);
    if let Some(r) = memo.lock().expect("memo lock").get(&key) {
        return Ok(r.clone());
    }
    let g = ctx.galois_ring(m.max(1));
    let one = 1 % g.modulus;
    let reps: Vec<Gr> = g.units().into_iter().filter(|&u| g.norm(u) == one).collect();
    memo.lock().expect("memo lock").insert(key, reps.clone());
    Ok(reps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ctx3() -> FieldContext {
        make_context(3, 4, ExtKind::Unramified).unwrap()
    }

    #[test]
    fn context_construction() {
        let c = make_context(3, 4, ExtKind::None).unwrap();
        assert_eq!(c.q(), 3);
        let e = make_context(3, 3, ExtKind::Unramified).unwrap();
        assert_eq!(e.q_e(), 9);
        assert_eq!(e.galois_ring(3).modulus, 27);
        assert_eq!(make_context(2, 3, ExtKind::Ramified), Err(Error::RamifiedResidueTwo));
        assert_eq!(make_context(6, 3, ExtKind::None), Err(Error::NotPrime(6)));
        assert!(make_context(5, 3, ExtKind::Ramified).is_ok());
    }

    #[test]
    fn basic_arith() {
        let c = ctx3();
        let p = c.f(3);
        assert_eq!(p.mul(&p).valuation(), Some(2));
        let x = c.f(17);
        assert!(x.add(&x.neg()).is_zero());
        let u = c.f(5);
        let ui = u.inv().unwrap();
        assert!(u.mul(&ui).eq_value(&c.f(1)));
        assert_eq!(c.f(0).inv(), Err(Error::DivisionByZero));
    }

    #[test]
    fn cancellation_keeps_remaining_digits() {
        let c = ctx3();
        // 1 + 8 = 9 = 3^2: two digits are lost.
        let s = c.f(1).add(&c.f(8));
        assert_eq!(s.v, 2);
        assert_eq!(s.prec, 2);
        // 1 + (3^4 - 1) cancels every digit.
        assert!(c.f(1).add(&c.f(80)).is_zero());
        // A number with a single digit cannot absorb cancellation.
        let short = Padic { p: 3, v: 0, u: 1, prec: 1 };
        let other = Padic { p: 3, v: 0, u: 2, prec: 1 };
        assert!(short.checked_add(&other).unwrap().is_zero());
        let tiny = Padic { p: 3, v: 0, u: 1, prec: 2 };
        let bump = Padic { p: 3, v: 0, u: 5, prec: 2 };
        assert_eq!(tiny.checked_add(&bump).unwrap().prec, 1);
        assert!(matches!(tiny.add_with_floor(&bump, 2), Err(Error::Precision(_))));
    }

    #[test]
    fn conj_norm_trace() {
        let c = ctx3();
        let a = c.e(7, 0);
        assert_eq!(a.conj(), a);
        let w = c.e(0, 1);
        // ω² = d for p = 3, so Nm(ω) = -d
        let d = c.omega.a;
        assert!(w.norm().eq_value(&c.f(-d)));
        // brute-force product in the Galois ring
        let g = c.galois_ring(4);
        let prod = g.mul(w.unit(), w.conj().unit());
        assert_eq!(prod.1, 0);
        assert_eq!(prod.0, w.norm().u);
        let x = c.e(4, 5);
        // tr(a + bω) = 2a + b·tr(ω) and tr(ω) = b-coefficient of ω²
        let expect = 2 * 4 + 5 * c.omega.b;
        assert!(x.trace().eq_value(&c.f(expect)));
        assert!(x.trace().eq_value(&x.add(&x.conj()).to_f().unwrap()));
    }

    #[test]
    fn p2_extension_ring() {
        let c = make_context(2, 4, ExtKind::Unramified).unwrap();
        let g = c.galois_ring(4);
        let w = (0, 1);
        // ω² + ω + 1 = 0
        let w2 = g.mul(w, w);
        assert_eq!(g.add(g.add(w2, w), (1, 0)), (0, 0));
        assert_eq!(g.conj(g.conj((3, 5))), (3, 5));
        assert_eq!(g.units().len(), 3 * 64);
    }

    #[test]
    fn is_norm_against_enumeration() {
        let c = make_context(3, 3, ExtKind::Unramified).unwrap();
        let g = c.galois_ring(2);
        // norms of units at level 2 cover every unit class mod 9
        let mut seen: Vec<u64> = g.units().iter().map(|&u| g.norm(u)).collect();
        seen.sort();
        seen.dedup();
        assert_eq!(seen, units_f(3, 2));
        // norms of p^k·u have valuation 2k, so p is not a norm and p^2 is
        assert!(!is_norm(&c, &c.f(3)).unwrap());
        assert!(is_norm(&c, &c.f(9)).unwrap());
        assert!(is_norm(&c, &c.f(2)).unwrap());
        for x in 1..20i64 {
            let nx = c.e(x, 1).mul(&Padic::p_pow(3, 3, (x % 3) as i32).into_ext(c.omega)).norm();
            assert!(is_norm(&c, &nx).unwrap());
        }
    }

    #[test]
    fn shell_counts() {
        let c = ctx3();
        let s: Vec<u64> = enumerate_shell(&c, 0, 1).unwrap().iter().map(|x| x.u).collect();
        assert_eq!(s, vec![1, 2]);
        assert_eq!(enumerate_shell(&c, 0, 2).unwrap().len(), 6);
        assert_eq!(enumerate_shell_ext(&c, 0, 1).unwrap().len(), 8);
        assert!(enumerate_shell(&c, 0, 5).is_err());
    }

    #[test]
    fn norm_one_counts() {
        let c3 = ctx3();
        assert_eq!(norm_one_reps(&c3, 1).unwrap().len(), 4);
        assert_eq!(norm_one_reps(&c3, 2).unwrap().len(), 12);
        let c5 = make_context(5, 2, ExtKind::Unramified).unwrap();
        assert_eq!(norm_one_reps(&c5, 1).unwrap().len(), 6);
    }

    #[test]
    fn norm_surjective_on_principal_units() {
        // Every a with a·ā ∈ 1 + P^m lies in E¹·(1 + P_E^m).
        let c = ctx3();
        for m in 1..=2u32 {
            let g = c.galois_ring(m + 1);
            let gm = c.galois_ring(m);
            let e1: Vec<Gr> = norm_one_reps(&c, m + 1).unwrap();
            let pm = ipow(3, m);
            for u in g.units() {
                if g.norm(u) % pm != 1 % pm {
                    continue;
                }
                let found = e1.iter().any(|&z| {
                    let q = g.mul(u, g.inv(z).unwrap());
                    gm.reduce(q) == (1 % gm.modulus, 0)
                });
                assert!(found, "{u:?} at level {m}");
            }
        }
    }

    #[test]
    fn ramified_rejects_e_side() {
        let c = make_context(3, 3, ExtKind::Ramified).unwrap();
        assert!(norm_one_reps(&c, 1).is_err());
        assert!(is_norm(&c, &c.f(3)).is_err());
    }

    proptest! {
        #[test]
        fn norm_multiplicative(a0 in 0i64..81, a1 in 0i64..81, b0 in 0i64..81, b1 in 0i64..81) {
            let c = ctx3();
            let x = c.e(a0, a1);
            let y = c.e(b0, b1);
            prop_assume!(!x.is_zero() && !y.is_zero());
            prop_assert!(x.mul(&y).norm().eq_value(&x.norm().mul(&y.norm())));
            let s = x.checked_add(&y);
            if let Ok(s) = s {
                if !s.is_zero() {
                    let t = x.trace().checked_add(&y.trace());
                    if let Ok(t) = t {
                        prop_assert!(s.trace().eq_value(&t) || s.trace().prec < 4);
                    }
                }
            }
        }

        #[test]
        fn conj_involution(a0 in -100i64..100, a1 in -100i64..100) {
            let c = ctx3();
            let x = c.e(a0, a1);
            prop_assert_eq!(x.conj().conj(), x);
        }

        #[test]
        fn norm_parity_law(v1 in -5i32..5, v2 in -5i32..5, u1 in 1i64..50, u2 in 1i64..50) {
            let c = ctx3();
            prop_assume!(u1 % 3 != 0 && u2 % 3 != 0);
            let a = Padic::new(3, 4, v1, u1);
            let b = Padic::new(3, 4, v2, u2);
            let ab = a.mul(&b);
            prop_assert_eq!(is_norm(&c, &ab).unwrap(), is_norm(&c, &a).unwrap() == is_norm(&c, &b).unwrap());
        }

        #[test]
        fn shell_reps_distinct(m in 1u32..4, v in -3i32..3) {
            let c = ctx3();
            let reps = enumerate_shell(&c, v, m).unwrap();
            let mut keys: Vec<u64> = reps.iter().map(|x| x.u).collect();
            keys.sort();
            keys.dedup();
            prop_assert_eq!(keys.len(), (2 * ipow(3, m - 1)) as usize);
        }
    }
}

impl Padic {
    pub fn into_ext(self, om: Omega) -> ExtNumber {
        ExtNumber::from_f(&self, om)
    }
}
