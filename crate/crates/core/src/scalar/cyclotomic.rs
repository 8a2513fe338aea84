use crate::error::{Error, Result};
use crate::ring::{inv_mod, ipow};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

pub fn factor_small(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            let mut a = 0;
            while n % d == 0 {
                n /= d;
                a += 1;
            }
            out.push((d, a));
        }
        d += 1;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// Data for one prime of the reduction: exponents `j` whose `p`-component has
/// top digit `p - 1` are rewritten using `Σ_t ζ^{j - t·N/p} = 0`.
#[derive(Clone, Copy)]
struct PrimeStep {
    p: u64,
    pa: u64,
    pa1: u64,
    inv: u64,
    s: u64,
}

fn steps(n: u64) -> Vec<PrimeStep> {
    factor_small(n)
        .into_iter()
        .map(|(p, a)| {
            let pa = ipow(p, a);
            let cof = n / pa;
            PrimeStep { p, pa, pa1: pa / p, inv: inv_mod(cof % pa, pa).unwrap(), s: n / p }
        })
        .collect()
}

impl PrimeStep {
    #[inline]
    fn is_top(&self, j: u64) -> bool {
        let x = (j % self.pa) * self.inv % self.pa;
        x / self.pa1 == self.p - 1
    }
}

fn canonicalize(n: u64, mut m: BTreeMap<u32, BigRational>) -> BTreeMap<u32, BigRational> {
    for st in steps(n) {
        let mut out: BTreeMap<u32, BigRational> = BTreeMap::new();
        for (j, c) in m {
            if c.is_zero() {
                continue;
            }
            if st.is_top(j as u64) {
                for t in 1..st.p {
                    let k = ((j as u64 + n - (t * st.s) % n) % n) as u32;
                    let e = out.entry(k).or_insert_with(BigRational::zero);
                    *e -= &c;
                }
            } else {
                let e = out.entry(j).or_insert_with(BigRational::zero);
                *e += c;
            }
        }
        out.retain(|_, c| !c.is_zero());
        m = out;
    }
    m.retain(|_, c| !c.is_zero());
    m
}

/// Element of `Q(ζ_N)` in the canonical basis (tensor product over prime
/// powers of `{ζ^x : top digit of x < p - 1}`).
#[derive(Clone, Debug)]
pub struct Cyc {
    n: u64,
    c: BTreeMap<u32, BigRational>,
}

impl Cyc {
    pub fn zero() -> Self {
        Cyc { n: 1, c: BTreeMap::new() }
    }
    pub fn one() -> Self {
        Self::from_rational(BigRational::one())
    }
    pub fn from_rational(r: BigRational) -> Self {
        let mut c = BTreeMap::new();
        if !r.is_zero() {
            c.insert(0, r);
        }
        Cyc { n: 1, c }
    }
    pub fn from_int(k: i64) -> Self {
        Self::from_rational(BigRational::from_integer(BigInt::from(k)))
    }
    pub fn from_ratio(a: i64, b: i64) -> Self {
        Self::from_rational(BigRational::new(BigInt::from(a), BigInt::from(b)))
    }
    /// `ζ_n^k`.
    pub fn root(n: u64, k: i64) -> Self {
        assert!(n >= 1);
        let j = k.rem_euclid(n as i64) as u32;
        let mut c = BTreeMap::new();
        c.insert(j, BigRational::one());
        Cyc { n, c: canonicalize(n, c) }.minimized()
    }
    pub fn from_terms(n: u64, terms: impl IntoIterator<Item = (u64, BigRational)>) -> Self {
        let mut c: BTreeMap<u32, BigRational> = BTreeMap::new();
        for (j, v) in terms {
            *c.entry((j % n) as u32).or_insert_with(BigRational::zero) += v;
        }
        Cyc { n, c: canonicalize(n, c) }.minimized()
    }
    pub fn order(&self) -> u64 {
        self.n
    }
    pub fn terms(&self) -> impl Iterator<Item = (u32, &BigRational)> {
        self.c.iter().map(|(j, v)| (*j, v))
    }
    pub fn is_zero(&self) -> bool {
        self.c.is_empty()
    }
    pub fn is_one(&self) -> bool {
        self.as_rational().map(|r| r.is_one()).unwrap_or(false)
    }
    pub fn as_rational(&self) -> Option<BigRational> {
        match self.c.len() {
            0 => Some(BigRational::zero()),
            1 => self.c.get(&0).cloned(),
            _ => None,
        }
    }
    /// Express in `Q(ζ_{n2})` for a multiple `n2` of the current order.
    pub fn lift(&self, n2: u64) -> Self {
        assert!(n2 % self.n == 0, "lift to non-multiple order");
        if n2 == self.n {
            return self.clone();
        }
        let f = n2 / self.n;
        let c = self.c.iter().map(|(j, v)| ((*j as u64 * f) as u32, v.clone())).collect();
        Cyc { n: n2, c: canonicalize(n2, c) }
    }
    /// Re-express over the smallest order dividing all exponents.
    fn minimized(self) -> Self {
        if self.c.is_empty() {
            return Cyc::zero();
        }
        let mut g = self.n;
        for j in self.c.keys() {
            g = g.gcd(&(*j as u64));
        }
        if g <= 1 {
            return self;
        }
        let n2 = self.n / g;
        let c = self.c.into_iter().map(|(j, v)| ((j as u64 / g) as u32, v)).collect();
        Cyc { n: n2, c: canonicalize(n2, c) }
    }
    fn common(&self, o: &Self) -> (Self, Self) {
        let n = self.n.lcm(&o.n);
        (self.lift(n), o.lift(n))
    }
    pub fn add(&self, o: &Self) -> Self {
        if o.is_zero() {
            return self.clone();
        }
        if self.is_zero() {
            return o.clone();
        }
        let (mut a, b) = self.common(o);
        for (j, v) in b.c {
            *a.c.entry(j).or_insert_with(BigRational::zero) += v;
        }
        a.c.retain(|_, v| !v.is_zero());
        a.minimized()
    }
    pub fn neg(&self) -> Self {
        Cyc { n: self.n, c: self.c.iter().map(|(j, v)| (*j, -v)).collect() }
    }
    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }
    pub fn scale(&self, r: &BigRational) -> Self {
        if r.is_zero() {
            return Cyc::zero();
        }
        Cyc { n: self.n, c: self.c.iter().map(|(j, v)| (*j, v * r)).collect() }
    }
    pub fn mul(&self, o: &Self) -> Self {
        if self.is_zero() || o.is_zero() {
            return Cyc::zero();
        }
        if let Some(r) = o.as_rational() {
            return self.scale(&r);
        }
        if let Some(r) = self.as_rational() {
            return o.scale(&r);
        }
        let (a, b) = self.common(o);
        let n = a.n;
        let mut raw: BTreeMap<u32, BigRational> = BTreeMap::new();
        for (i, x) in &a.c {
            for (j, y) in &b.c {
                let k = ((*i as u64 + *j as u64) % n) as u32;
                *raw.entry(k).or_insert_with(BigRational::zero) += x * y;
            }
        }
        Cyc { n, c: canonicalize(n, raw) }.minimized()
    }
    /// Multiply by `ζ_m^k`.
    pub fn mul_root(&self, m: u64, k: i64) -> Self {
        self.mul(&Cyc::root(m, k))
    }
    /// Complex conjugation `ζ ↦ ζ^{-1}`.
    pub fn conj(&self) -> Self {
        let n = self.n;
        let c = self.c.iter().map(|(j, v)| (((n - *j as u64) % n) as u32, v.clone())).collect();
        Cyc { n, c: canonicalize(n, c) }
    }
    pub fn pow(&self, e: i64) -> Result<Self> {
        if e < 0 {
            return self.inv()?.pow(-e);
        }
        let mut r = Cyc::one();
        let mut b = self.clone();
        let mut e = e as u64;
        while e > 0 {
            if e & 1 == 1 {
                r = r.mul(&b);
            }
            e >>= 1;
            if e > 0 {
                b = b.mul(&b);
            }
        }
        Ok(r)
    }
    /// Basis exponents of `Q(ζ_n)` in increasing order.
    fn basis(n: u64) -> Vec<u32> {
        let st = steps(n);
        (0..n).filter(|&j| st.iter().all(|s| !s.is_top(j))).map(|j| j as u32).collect()
    }
    /// Exact inverse by solving the multiplication-matrix system over `Q`.
    pub fn inv(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        if let Some(r) = self.as_rational() {
            return Ok(Cyc::from_rational(r.recip()));
        }
        let n = self.n;
        let basis = Self::basis(n);
        let pos: BTreeMap<u32, usize> = basis.iter().enumerate().map(|(i, j)| (*j, i)).collect();
        let d = basis.len();
        // column k = coordinates of self·ζ^{basis[k]}
        let mut mat = vec![vec![BigRational::zero(); d + 1]; d];
        for (k, &j) in basis.iter().enumerate() {
            let prod = self.mul(&Cyc::root(n, j as i64)).lift(n);
            for (e, v) in prod.c {
                mat[pos[&e]][k] = v;
            }
        }
        mat[pos[&0]][d] = BigRational::one();
        for col in 0..d {
            let piv = (col..d).find(|&r| !mat[r][col].is_zero()).ok_or(Error::DivisionByZero)?;
            mat.swap(col, piv);
            let inv = mat[col][col].recip();
            for x in mat[col].iter_mut() {
                *x *= &inv;
            }
            let prow = mat[col].clone();
            for (r, row) in mat.iter_mut().enumerate() {
                if r != col && !row[col].is_zero() {
                    let f = row[col].clone();
                    for (x, y) in row.iter_mut().zip(prow.iter()) {
                        if !y.is_zero() {
                            *x -= &f * y;
                        }
                    }
                }
            }
        }
        Ok(Cyc::from_terms(n, basis.iter().enumerate().map(|(k, &j)| (j as u64, mat[k][d].clone()))))
    }
    pub fn div(&self, o: &Self) -> Result<Self> {
        Ok(self.mul(&o.inv()?))
    }
    /// Image under `ζ_N ↦ e^{2πi/N}`.
    pub fn embed_complex(&self) -> (f64, f64) {
        let mut re = 0.0;
        let mut im = 0.0;
        for (j, v) in &self.c {
            let ang = 2.0 * std::f64::consts::PI * (*j as f64) / (self.n as f64);
            let x = v.to_f64().unwrap_or(f64::NAN);
            re += x * ang.cos();
            im += x * ang.sin();
        }
        (re, im)
    }
    pub fn abs_f64(&self) -> f64 {
        let (a, b) = self.embed_complex();
        a.hypot(b)
    }
    /// Exact `p^{k/2}`: the square root of `p` comes from the quadratic Gauss
    /// sum (and `ζ_8 + ζ_8^{-1}` for `p = 2`).
    pub fn sqrt_prime_power(p: u64, k: i64) -> Self {
        let half = k.div_euclid(2);
        let r = Cyc::from_rational(super::qpow(p, half));
        if k.rem_euclid(2) == 0 {
            return r;
        }
        r.mul(&Self::sqrt_prime(p))
    }
    pub fn sqrt_prime(p: u64) -> Self {
        if p == 2 {
            return Cyc::root(8, 1).add(&Cyc::root(8, -1));
        }
        let g = (1..p).fold(Cyc::zero(), |acc, a| {
            let leg = crate::ring::pow_mod(a, (p - 1) / 2, p);
            let s = if leg == 1 { 1 } else { -1 };
            acc.add(&Cyc::root(p, a as i64).scale(&super::rint(s)))
        });
        if p % 4 == 1 {
            g
        } else {
            g.mul(&Cyc::root(4, 1)).neg()
        }
    }
    pub fn to_plain_string(&self) -> String {
        format!("{self}")
    }
    /// Dense coefficient list of length `N` in the canonical basis.
    pub fn dense(&self) -> Vec<BigRational> {
        let mut v = vec![BigRational::zero(); self.n as usize];
        for (j, c) in &self.c {
            v[*j as usize] = c.clone();
        }
        v
    }
    pub fn from_dense(n: u64, coeffs: &[BigRational]) -> Self {
        Cyc::from_terms(n, coeffs.iter().enumerate().map(|(j, c)| (j as u64, c.clone())))
    }
}

impl PartialEq for Cyc {
    fn eq(&self, o: &Self) -> bool {
        if self.n == o.n {
            return self.c == o.c;
        }
        let (a, b) = self.common(o);
        a.c == b.c
    }
}
impl Eq for Cyc {}

impl fmt::Display for Cyc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.c.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (j, v) in &self.c {
            let neg = v.is_negative();
            let a = v.abs();
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { "-" } else { "+" })?;
            }
            first = false;
            if *j == 0 {
                write!(f, "{a}")?;
            } else if a.is_one() {
                write!(f, "z{}^{}", self.n, j)?;
            } else {
                write!(f, "{a}*z{}^{}", self.n, j)?;
            }
        }
        Ok(())
    }
}

/// Integer combination of `N`-th roots of unity, for hot exponential sums.
#[derive(Clone, Debug)]
pub struct IntAccum {
    n: u64,
    c: Vec<i64>,
}

impl IntAccum {
    pub fn new(n: u64) -> Self {
        IntAccum { n, c: vec![0; n as usize] }
    }
    pub fn order(&self) -> u64 {
        self.n
    }
    #[inline]
    pub fn add_root(&mut self, k: u64, mult: i64) {
        self.c[(k % self.n) as usize] += mult;
    }
    pub fn clear(&mut self) {
        self.c.iter_mut().for_each(|x| *x = 0);
    }
    pub fn reduce(&mut self) {
        let n = self.n;
        for st in steps(n) {
            for j in 0..n {
                let cj = self.c[j as usize];
                if cj != 0 && st.is_top(j) {
                    for t in 1..st.p {
                        let k = (j + n - (t * st.s) % n) % n;
                        self.c[k as usize] -= cj;
                    }
                    self.c[j as usize] = 0;
                }
            }
        }
    }
    /// Exact vanishing test (reduces in place).
    pub fn is_zero(&mut self) -> bool {
        self.reduce();
        self.c.iter().all(|&x| x == 0)
    }
    pub fn to_cyc(&self) -> Cyc {
        Cyc::from_terms(
            self.n,
            self.c
                .iter()
                .enumerate()
                .filter(|(_, &x)| x != 0)
                .map(|(j, &x)| (j as u64, BigRational::from_integer(BigInt::from(x)))),
        )
    }
}

/// A rational number modulo 1, reduced, in `[0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RationalAngle {
    pub num: u64,
    pub den: u64,
}

impl RationalAngle {
    pub fn new(num: i64, den: u64) -> Self {
        assert!(den > 0);
        let r = num.rem_euclid(den as i64) as u64;
        let g = r.gcd(&den);
        RationalAngle { num: r / g, den: den / g }
    }
    pub fn zero() -> Self {
        RationalAngle { num: 0, den: 1 }
    }
    pub fn add(&self, o: &Self) -> Self {
        let den = self.den.lcm(&o.den);
        let a = self.num * (den / self.den) + o.num * (den / o.den);
        RationalAngle::new(a as i64, den)
    }
    pub fn neg(&self) -> Self {
        RationalAngle::new(-(self.num as i64), self.den)
    }
    pub fn root(&self) -> Cyc {
        Cyc::root(self.den, self.num as i64)
    }
}

pub fn angle_root(a: RationalAngle) -> Cyc {
    a.root()
}
