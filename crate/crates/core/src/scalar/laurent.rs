use super::cyclotomic::Cyc;
use super::qpow;
use crate::error::{Error, Result};
use std::fmt;

/// Laurent polynomial `Σ c[k] X^{lo + k}`, trimmed at both ends.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LPoly {
    pub lo: i32,
    pub c: Vec<Cyc>,
}

impl LPoly {
    pub fn zero() -> Self {
        LPoly { lo: 0, c: vec![] }
    }
    pub fn constant(c: Cyc) -> Self {
        LPoly { lo: 0, c: vec![c] }.trimmed()
    }
    pub fn monomial(c: Cyc, k: i32) -> Self {
        LPoly { lo: k, c: vec![c] }.trimmed()
    }
    /// From coefficients of `X^lo, X^{lo+1}, ...`.
    pub fn from_coeffs(lo: i32, c: Vec<Cyc>) -> Self {
        LPoly { lo, c }.trimmed()
    }
    fn trimmed(mut self) -> Self {
        while self.c.last().map(|x| x.is_zero()).unwrap_or(false) {
            self.c.pop();
        }
        let lead = self.c.iter().take_while(|x| x.is_zero()).count();
        if lead > 0 {
            self.c.drain(..lead);
            self.lo += lead as i32;
        }
        if self.c.is_empty() {
            self.lo = 0;
        }
        self
    }
    pub fn is_zero(&self) -> bool {
        self.c.is_empty()
    }
    pub fn hi(&self) -> i32 {
        self.lo + self.c.len() as i32 - 1
    }
    pub fn coeff(&self, k: i32) -> Cyc {
        if self.is_zero() || k < self.lo || k > self.hi() {
            Cyc::zero()
        } else {
            self.c[(k - self.lo) as usize].clone()
        }
    }
    pub fn add(&self, o: &Self) -> Self {
        if self.is_zero() {
            return o.clone();
        }
        if o.is_zero() {
            return self.clone();
        }
        let lo = self.lo.min(o.lo);
        let hi = self.hi().max(o.hi());
        let c = (lo..=hi).map(|k| self.coeff(k).add(&o.coeff(k))).collect();
        LPoly { lo, c }.trimmed()
    }
    pub fn neg(&self) -> Self {
        LPoly { lo: self.lo, c: self.c.iter().map(|x| x.neg()).collect() }
    }
    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }
    pub fn scale(&self, s: &Cyc) -> Self {
        LPoly { lo: self.lo, c: self.c.iter().map(|x| x.mul(s)).collect() }.trimmed()
    }
    pub fn shift(&self, k: i32) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        LPoly { lo: self.lo + k, c: self.c.clone() }
    }
    pub fn mul(&self, o: &Self) -> Self {
        if self.is_zero() || o.is_zero() {
            return LPoly::zero();
        }
        let mut c = vec![Cyc::zero(); self.c.len() + o.c.len() - 1];
        for (i, x) in self.c.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (j, y) in o.c.iter().enumerate() {
                if !y.is_zero() {
                    c[i + j] = c[i + j].add(&x.mul(y));
                }
            }
        }
        LPoly { lo: self.lo + o.lo, c }.trimmed()
    }
    /// `P(X) ↦ P(q^{-1} X^{-1})`.
    pub fn dualize(&self, q: u64) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let c = self
            .c
            .iter()
            .enumerate()
            .rev()
            .map(|(i, x)| x.scale(&qpow(q, -((self.lo + i as i32) as i64))))
            .collect();
        LPoly { lo: -self.hi(), c }.trimmed()
    }
    /// Substitute `X ↦ X^k` for `k ≥ 1`.
    pub fn inflate(&self, k: i32) -> Self {
        assert!(k >= 1);
        if self.is_zero() {
            return self.clone();
        }
        let mut c = vec![Cyc::zero(); (self.c.len() - 1) * k as usize + 1];
        for (i, x) in self.c.iter().enumerate() {
            c[i * k as usize] = x.clone();
        }
        LPoly { lo: self.lo * k, c }.trimmed()
    }
    pub fn eval_f64(&self, x: (f64, f64)) -> (f64, f64) {
        let mut acc = (0.0, 0.0);
        let xp = cpow(x, self.lo);
        let mut pw = xp;
        for c in &self.c {
            let v = c.embed_complex();
            acc = (acc.0 + v.0 * pw.0 - v.1 * pw.1, acc.1 + v.0 * pw.1 + v.1 * pw.0);
            pw = (pw.0 * x.0 - pw.1 * x.1, pw.0 * x.1 + pw.1 * x.0);
        }
        acc
    }
}

fn cpow(x: (f64, f64), k: i32) -> (f64, f64) {
    let (r, t) = (x.0.hypot(x.1), x.1.atan2(x.0));
    let rk = r.powi(k);
    (rk * (t * k as f64).cos(), rk * (t * k as f64).sin())
}

/// Ordinary polynomial division helpers (coefficients low to high, lo = 0).
pub(crate) fn poly_divrem(a: &[Cyc], b: &[Cyc]) -> Result<(Vec<Cyc>, Vec<Cyc>)> {
    let mut r: Vec<Cyc> = a.to_vec();
    let db = b.len() - 1;
    let lead_inv = b[db].inv()?;
    if r.len() < b.len() {
        return Ok((vec![], r));
    }
    let mut q = vec![Cyc::zero(); r.len() - db];
    for k in (0..q.len()).rev() {
        let c = r[k + db].mul(&lead_inv);
        if !c.is_zero() {
            for (i, bi) in b.iter().enumerate() {
                r[k + i] = r[k + i].sub(&c.mul(bi));
            }
        }
        q[k] = c;
    }
    r.truncate(db);
    while r.last().map(|x| x.is_zero()).unwrap_or(false) {
        r.pop();
    }
    Ok((q, r))
}

pub(crate) fn poly_gcd(a: &[Cyc], b: &[Cyc]) -> Result<Vec<Cyc>> {
    let (mut x, mut y) = (a.to_vec(), b.to_vec());
    while !y.is_empty() {
        let (_, r) = poly_divrem(&x, &y)?;
        x = y;
        y = r;
    }
    if x.is_empty() {
        return Ok(vec![Cyc::one()]);
    }
    let inv = x.last().unwrap().inv()?;
    Ok(x.iter().map(|c| c.mul(&inv)).collect())
}

/// Rational function `num/den` in `X = base^{-s}` with cyclotomic coefficients.
///
/// Canonical form: `den` has lowest degree 0 and constant term 1.
#[derive(Clone, Debug)]
pub struct LaurentRational {
    pub base: u64,
    pub num: LPoly,
    pub den: LPoly,
}

impl LaurentRational {
    pub fn new(base: u64, num: LPoly, den: LPoly) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(LaurentRational { base, num, den }.canonical())
    }
    fn canonical(mut self) -> Self {
        if self.num.is_zero() {
            self.den = LPoly::constant(Cyc::one());
            return self;
        }
        let shift = self.den.lo;
        self.den = self.den.shift(-shift);
        self.num = self.num.shift(-shift);
        let c0 = self.den.c[0].clone();
        if !c0.is_one() {
            let inv = c0.inv().expect("nonzero constant term");
            self.den = self.den.scale(&inv);
            self.num = self.num.scale(&inv);
        }
        self
    }
    pub fn zero(base: u64) -> Self {
        Self::from_cyc(base, Cyc::zero())
    }
    pub fn one(base: u64) -> Self {
        Self::from_cyc(base, Cyc::one())
    }
    pub fn from_cyc(base: u64, c: Cyc) -> Self {
        LaurentRational { base, num: LPoly::constant(c), den: LPoly::constant(Cyc::one()) }
    }
    pub fn monomial(base: u64, c: Cyc, k: i32) -> Self {
        LaurentRational { base, num: LPoly::monomial(c, k), den: LPoly::constant(Cyc::one()) }
    }
    pub fn from_poly(base: u64, num: LPoly) -> Self {
        LaurentRational { base, num, den: LPoly::constant(Cyc::one()) }
    }
    /// `1 / (1 - t X^k)`.
    pub fn geometric(base: u64, t: Cyc, k: i32) -> Self {
        let den = LPoly::constant(Cyc::one()).add(&LPoly::monomial(t.neg(), k));
        Self::new(base, LPoly::constant(Cyc::one()), den).expect("nonzero")
    }
    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }
    fn check_base(&self, o: &Self) -> Result<()> {
        if self.base != o.base {
            return Err(Error::Invalid(format!(
                "mixing X = {}^(-s) with X = {}^(-s)",
                self.base, o.base
            )));
        }
        Ok(())
    }
    pub fn try_add(&self, o: &Self) -> Result<Self> {
        self.check_base(o)?;
        if o.is_zero() {
            return Ok(self.clone());
        }
        if self.is_zero() {
            return Ok(o.clone());
        }
        if self.den == o.den {
            return Ok(LaurentRational { base: self.base, num: self.num.add(&o.num), den: self.den.clone() }
                .canonical());
        }
        Self::new(self.base, self.num.mul(&o.den).add(&o.num.mul(&self.den)), self.den.mul(&o.den))
    }
    pub fn add(&self, o: &Self) -> Self {
        self.try_add(o).expect("base mismatch")
    }
    pub fn neg(&self) -> Self {
        LaurentRational { base: self.base, num: self.num.neg(), den: self.den.clone() }
    }
    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }
    pub fn try_mul(&self, o: &Self) -> Result<Self> {
        self.check_base(o)?;
        Self::new(self.base, self.num.mul(&o.num), self.den.mul(&o.den))
    }
    pub fn mul(&self, o: &Self) -> Self {
        self.try_mul(o).expect("base mismatch")
    }
    pub fn scale(&self, c: &Cyc) -> Self {
        LaurentRational { base: self.base, num: self.num.scale(c), den: self.den.clone() }.canonical()
    }
    pub fn div(&self, o: &Self) -> Result<Self> {
        self.check_base(o)?;
        if o.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Self::new(self.base, self.num.mul(&o.den), self.den.mul(&o.num))
    }
    pub fn inv(&self) -> Result<Self> {
        Self::one(self.base).div(self)
    }
    /// Exact equality by cross-multiplication.
    pub fn eq_exact(&self, o: &Self) -> bool {
        self.base == o.base && self.num.mul(&o.den) == o.num.mul(&self.den)
    }
    /// `s ↦ 1 - s`, i.e. `X ↦ q^{-1} X^{-1}`.
    pub fn dualize(&self) -> Self {
        Self::new(self.base, self.num.dualize(self.base), self.den.dualize(self.base)).expect("nonzero")
    }
    /// Rewrite a function of `X_E = q_E^{-s}` from one of `X = q^{-s}`: `X_E = X²`.
    pub fn to_square_base(&self) -> Self {
        Self::new(self.base * self.base, self.num.clone(), self.den.clone())
            .expect("nonzero")
    }
    /// Rewrite a function of `X = q^{-s}` as one of `X_F` with `X = X_F²`.
    pub fn from_square_base(&self, root: u64) -> Result<Self> {
        if root * root != self.base {
            return Err(Error::Invalid("base is not the square of the given root".into()));
        }
        Self::new(root, self.num.inflate(2), self.den.inflate(2))
    }
    /// Taylor coefficients of `X^0 .. X^order`. Errors if the function has a
    /// pole at `X = 0`.
    pub fn series(&self, order: usize) -> Result<Vec<Cyc>> {
        let (lo, c) = self.laurent_series(order as i32)?;
        if lo < 0 {
            return Err(Error::Invalid("function has a pole at X = 0".into()));
        }
        let mut out = vec![Cyc::zero(); order + 1];
        for (k, v) in c.into_iter().enumerate() {
            let e = lo as usize + k;
            if e <= order {
                out[e] = v;
            }
        }
        Ok(out)
    }
    /// Laurent coefficients from the lowest degree `lo` up to `X^upto`.
    pub fn laurent_series(&self, upto: i32) -> Result<(i32, Vec<Cyc>)> {
        if self.num.is_zero() {
            return Ok((0, vec![]));
        }
        let lo = self.num.lo;
        if upto < lo {
            return Ok((lo, vec![]));
        }
        let len = (upto - lo + 1) as usize;
        let mut s: Vec<Cyc> = Vec::with_capacity(len);
        for k in 0..len {
            let mut v = self.num.coeff(lo + k as i32);
            for i in 1..=k.min(self.den.c.len().saturating_sub(1)) {
                let d = &self.den.c[i];
                if !d.is_zero() {
                    v = v.sub(&d.mul(&s[k - i]));
                }
            }
            s.push(v);
        }
        Ok((lo, s))
    }
    /// Remove common factors of numerator and denominator.
    pub fn reduce(&self) -> Result<Self> {
        if self.num.is_zero() {
            return Ok(self.clone());
        }
        let g = poly_gcd(&self.num.c, &self.den.c)?;
        if g.len() == 1 {
            return Ok(self.clone());
        }
        let (nq, nr) = poly_divrem(&self.num.c, &g)?;
        let (dq, dr) = poly_divrem(&self.den.c, &g)?;
        debug_assert!(nr.is_empty() && dr.is_empty());
        Self::new(self.base, LPoly::from_coeffs(self.num.lo, nq), LPoly::from_coeffs(self.den.lo, dq))
    }
    /// `Some((c, k))` when the function equals `c·X^k`.
    pub fn as_monomial(&self) -> Option<(Cyc, i32)> {
        if self.num.is_zero() {
            return None;
        }
        if self.num.c.len() != self.den.c.len() {
            return None;
        }
        let c = self.num.c[0].clone();
        let k = self.num.lo - self.den.lo;
        let lhs = self.num.clone();
        let rhs = self.den.scale(&c).shift(k);
        (lhs == rhs).then_some((c, k))
    }
    pub fn eval_f64(&self, x: (f64, f64)) -> (f64, f64) {
        let a = self.num.eval_f64(x);
        let b = self.den.eval_f64(x);
        let d = b.0 * b.0 + b.1 * b.1;
        ((a.0 * b.0 + a.1 * b.1) / d, (a.1 * b.0 - a.0 * b.1) / d)
    }
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "base": self.base,
            "num_coeffs": self.num.c.iter().map(cyc_json).collect::<Vec<_>>(),
            "den_coeffs": self.den.c.iter().map(cyc_json).collect::<Vec<_>>(),
            "min_degree": self.num.lo,
        })
    }
    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let bad = || Error::Invalid("malformed LaurentRational JSON".into());
        let base = v["base"].as_u64().ok_or_else(bad)?;
        let lo = v["min_degree"].as_i64().ok_or_else(bad)? as i32;
        let parse = |k: &str| -> Result<Vec<Cyc>> {
            v[k].as_array().ok_or_else(bad)?.iter().map(cyc_from_json).collect()
        };
        Self::new(base, LPoly::from_coeffs(lo, parse("num_coeffs")?), LPoly::from_coeffs(0, parse("den_coeffs")?))
    }
}

pub fn cyc_json(c: &Cyc) -> serde_json::Value {
    serde_json::json!({
        "N": c.order(),
        "coeffs": c.dense().iter().map(|r| r.to_string()).collect::<Vec<_>>(),
    })
}

pub fn cyc_from_json(v: &serde_json::Value) -> Result<Cyc> {
    let bad = || Error::Invalid("malformed cyclotomic JSON".into());
    let n = v["N"].as_u64().ok_or_else(bad)?;
    let coeffs = v["coeffs"]
        .as_array()
        .ok_or_else(bad)?
        .iter()
        .map(|s| s.as_str().and_then(|s| s.parse().ok()).ok_or_else(bad))
        .collect::<Result<Vec<_>>>()?;
    Ok(Cyc::from_dense(n, &coeffs))
}

impl PartialEq for LaurentRational {
    fn eq(&self, o: &Self) -> bool {
        self.eq_exact(o)
    }
}

impl fmt::Display for LPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, c) in self.c.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            let k = self.lo + i as i32;
            match k {
                0 => write!(f, "({c})")?,
                1 => write!(f, "({c})X")?,
                _ => write!(f, "({c})X^{k}")?,
            }
        }
        Ok(())
    }
}

impl fmt::Display for LaurentRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] / [{}]", self.num, self.den)
    }
}
