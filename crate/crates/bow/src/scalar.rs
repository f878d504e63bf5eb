//! Scalar arithmetic and the transcendental building blocks used everywhere else:
//! finite and infinite q-Pochhammer symbols, the odd Jacobi theta function, the
//! delta section, and Heine's basic hypergeometric series with its classical
//! transformations.
//!
//! Two backends share one interface: exact rationals (arbitrary precision) and
//! complex floats. Exact arithmetic never touches an infinite product; the float
//! backend truncates tails under an explicit `|q| < 1` guard.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{BowError, Result};

/// Equivariant and formal symbols a scalar-level monomial can carry.
///
/// `A(i)` is the i-th D5 equivariant parameter (0-based), `HbarSqrt` and `QSqrt`
/// are the primitive half-power symbols; `hbar` and `q` are their squares.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug, Hash, Serialize, Deserialize)]
pub enum Symbol {
    A(usize),
    HbarSqrt,
    QSqrt,
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Symbol::A(i) => write!(f, "a{}", i + 1),
            Symbol::HbarSqrt => write!(f, "h^(1/2)"),
            Symbol::QSqrt => write!(f, "q^(1/2)"),
        }
    }
}

/// A field element in one of the two backends.
///
/// JSON form: rationals as strings "p/q", complex floats as {"re": .., "im": ..}.
#[derive(Clone, Debug)]
pub enum Scalar {
    Rat(BigRational),
    Cplx { re: f64, im: f64 },
}

impl Serialize for Scalar {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Scalar::Rat(r) => s.serialize_str(&r.to_string()),
            Scalar::Cplx { re, im } => {
                use serde::ser::SerializeStruct;
                let mut st = s.serialize_struct("Complex", 2)?;
                st.serialize_field("re", re)?;
                st.serialize_field("im", im)?;
                st.end()
            }
        }
    }
}

impl<'de> Deserialize<'de> for Scalar {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Scalar, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            S(String),
            C { re: f64, im: f64 },
        }
        match Raw::deserialize(d)? {
            Raw::S(s) => Scalar::parse_rational(&s).map_err(serde::de::Error::custom),
            Raw::C { re, im } => Ok(Scalar::Cplx { re, im }),
        }
    }
}

impl Scalar {
    pub fn zero_like(&self) -> Scalar {
        match self {
            Scalar::Rat(_) => Scalar::rat_int(0),
            Scalar::Cplx { .. } => Scalar::cplx(0.0, 0.0),
        }
    }

    pub fn one_like(&self) -> Scalar {
        match self {
            Scalar::Rat(_) => Scalar::rat_int(1),
            Scalar::Cplx { .. } => Scalar::cplx(1.0, 0.0),
        }
    }

    pub fn rat_int(n: i64) -> Scalar {
        Scalar::Rat(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn rat(num: i64, den: i64) -> Scalar {
        Scalar::Rat(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn cplx(re: f64, im: f64) -> Scalar {
        Scalar::Cplx { re, im }
    }

    pub fn as_complex(&self) -> Complex64 {
        match self {
            Scalar::Rat(r) => Complex64::new(ratio_to_f64(r), 0.0),
            Scalar::Cplx { re, im } => Complex64::new(*re, *im),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Rat(r) => r.is_zero(),
            Scalar::Cplx { re, im } => *re == 0.0 && *im == 0.0,
        }
    }

    pub fn is_one(&self) -> bool {
        match self {
            Scalar::Rat(r) => r.is_one(),
            Scalar::Cplx { re, im } => *re == 1.0 && *im == 0.0,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Scalar::Rat(_))
    }

    pub fn abs(&self) -> f64 {
        match self {
            Scalar::Rat(r) => ratio_to_f64(r).abs(),
            Scalar::Cplx { re, im } => Complex64::new(*re, *im).norm(),
        }
    }

    pub fn add(&self, other: &Scalar) -> Scalar {
        match (self, other) {
            (Scalar::Rat(a), Scalar::Rat(b)) => Scalar::Rat(a + b),
            _ => {
                let c = self.as_complex() + other.as_complex();
                Scalar::cplx(c.re, c.im)
            }
        }
    }

    pub fn sub(&self, other: &Scalar) -> Scalar {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Scalar {
        match self {
            Scalar::Rat(a) => Scalar::Rat(-a),
            Scalar::Cplx { re, im } => Scalar::cplx(-re, -im),
        }
    }

    pub fn mul(&self, other: &Scalar) -> Scalar {
        match (self, other) {
            (Scalar::Rat(a), Scalar::Rat(b)) => Scalar::Rat(a * b),
            _ => {
                let c = self.as_complex() * other.as_complex();
                Scalar::cplx(c.re, c.im)
            }
        }
    }

    pub fn div(&self, other: &Scalar) -> Result<Scalar> {
        if other.is_zero() {
            return Err(BowError::DivisionByZero("scalar division by zero".into()));
        }
        Ok(match (self, other) {
            (Scalar::Rat(a), Scalar::Rat(b)) => Scalar::Rat(a / b),
            _ => {
                let c = self.as_complex() / other.as_complex();
                Scalar::cplx(c.re, c.im)
            }
        })
    }

    pub fn inv(&self) -> Result<Scalar> {
        self.one_like().div(self)
    }

    /// Integer power, negative exponents allowed for nonzero values.
    pub fn pow_i64(&self, e: i64) -> Result<Scalar> {
        if e == 0 {
            return Ok(self.one_like());
        }
        if self.is_zero() && e < 0 {
            return Err(BowError::DivisionByZero("0 raised to negative power".into()));
        }
        match self {
            Scalar::Rat(r) => {
                let p = r.pow(e.unsigned_abs().try_into().map_err(|_| {
                    BowError::Domain("exponent too large for exact power".into())
                })?);
                if e < 0 {
                    Ok(Scalar::Rat(p.recip()))
                } else {
                    Ok(Scalar::Rat(p))
                }
            }
            Scalar::Cplx { re, im } => {
                let c = Complex64::new(*re, *im).powi(e as i32);
                Ok(Scalar::cplx(c.re, c.im))
            }
        }
    }

    /// Exact equality for rationals, bitwise for floats.
    pub fn eq_scalar(&self, other: &Scalar) -> bool {
        match (self, other) {
            (Scalar::Rat(a), Scalar::Rat(b)) => a == b,
            _ => {
                let (x, y) = (self.as_complex(), other.as_complex());
                x.re == y.re && x.im == y.im
            }
        }
    }

    /// Parse "p/q" or "p" rational literals, or decimal floats.
    pub fn parse_rational(s: &str) -> Result<Scalar> {
        let s = s.trim();
        if let Some((p, q)) = s.split_once('/') {
            let num = BigInt::from_str(p.trim())
                .map_err(|_| BowError::Parse(format!("bad rational numerator {p:?}"), 0))?;
            let den = BigInt::from_str(q.trim())
                .map_err(|_| BowError::Parse(format!("bad rational denominator {q:?}"), 0))?;
            if den.is_zero() {
                return Err(BowError::DivisionByZero(format!("rational {s:?} has zero denominator")));
            }
            Ok(Scalar::Rat(BigRational::new(num, den)))
        } else {
            let num = BigInt::from_str(s)
                .map_err(|_| BowError::Parse(format!("bad rational literal {s:?}"), 0))?;
            Ok(Scalar::Rat(BigRational::from_integer(num)))
        }
    }
}

fn ratio_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // fall back through numerator/denominator magnitudes
        let n = r.numer().to_f64().unwrap_or(f64::MAX);
        let d = r.denom().to_f64().unwrap_or(f64::MAX);
        n / d
    })
}

/// Assignment of the equivariant symbols to scalar values.
///
/// `hbar_sqrt` and `q_sqrt` are primitive; `hbar` and `q` are their squares.
#[derive(Clone, Debug)]
pub struct ParameterPoint {
    pub a: Vec<Scalar>,
    pub hbar_sqrt: Scalar,
    pub q_sqrt: Scalar,
}

impl ParameterPoint {
    pub fn new(a: Vec<Scalar>, hbar_sqrt: Scalar, q_sqrt: Scalar) -> Result<Self> {
        for (i, v) in a.iter().enumerate() {
            if v.is_zero() {
                return Err(BowError::Domain(format!("a_{} assigned zero", i + 1)));
            }
        }
        if hbar_sqrt.is_zero() || q_sqrt.is_zero() {
            return Err(BowError::Domain("hbar and q must be nonzero".into()));
        }
        Ok(ParameterPoint { a, hbar_sqrt, q_sqrt })
    }

    pub fn n_d5(&self) -> usize {
        self.a.len()
    }

    pub fn hbar(&self) -> Scalar {
        self.hbar_sqrt.mul(&self.hbar_sqrt)
    }

    pub fn q(&self) -> Scalar {
        self.q_sqrt.mul(&self.q_sqrt)
    }

    pub fn is_exact(&self) -> bool {
        self.q_sqrt.is_exact()
    }

    /// Guard for infinite products: float backend with |q| < 1.
    pub fn require_float_q_inside_disk(&self) -> Result<()> {
        if self.is_exact() {
            return Err(BowError::Domain(
                "infinite products are not evaluated in the exact backend".into(),
            ));
        }
        if self.q().abs() >= 1.0 {
            return Err(BowError::Domain(format!(
                "|q| = {} >= 1: infinite product diverges",
                self.q().abs()
            )));
        }
        Ok(())
    }

    pub fn value(&self, sym: Symbol) -> Result<Scalar> {
        match sym {
            Symbol::A(i) => self
                .a
                .get(i)
                .cloned()
                .ok_or_else(|| BowError::Domain(format!("a_{} not assigned", i + 1))),
            Symbol::HbarSqrt => Ok(self.hbar_sqrt.clone()),
            Symbol::QSqrt => Ok(self.q_sqrt.clone()),
        }
    }
}

/// Signed Laurent monomial in the equivariant symbols.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug, Hash, Serialize, Deserialize)]
pub struct Monomial {
    pub sign: i8,
    pub exps: BTreeMap<Symbol, i64>,
}

impl Monomial {
    pub fn one() -> Monomial {
        Monomial { sign: 1, exps: BTreeMap::new() }
    }

    pub fn symbol(sym: Symbol, e: i64) -> Monomial {
        let mut m = Monomial::one();
        m.set(sym, e);
        m
    }

    pub fn a(i: usize) -> Monomial {
        Monomial::symbol(Symbol::A(i), 1)
    }

    /// hbar^e for integer e (stored on the half-power symbol).
    pub fn hbar_pow(e: i64) -> Monomial {
        Monomial::symbol(Symbol::HbarSqrt, 2 * e)
    }

    pub fn q_pow(e: i64) -> Monomial {
        Monomial::symbol(Symbol::QSqrt, 2 * e)
    }

    /// (-hbar^(1/2))^e: carries the sign (-1)^e.
    pub fn neg_hbar_sqrt_pow(e: i64) -> Monomial {
        let mut m = Monomial::symbol(Symbol::HbarSqrt, e);
        if e.rem_euclid(2) == 1 {
            m.sign = -1;
        }
        m
    }

    pub fn set(&mut self, sym: Symbol, e: i64) {
        if e == 0 {
            self.exps.remove(&sym);
        } else {
            self.exps.insert(sym, e);
        }
    }

    pub fn exp(&self, sym: Symbol) -> i64 {
        self.exps.get(&sym).copied().unwrap_or(0)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut exps = self.exps.clone();
        for (s, e) in &other.exps {
            let v = exps.entry(*s).or_insert(0);
            *v += e;
            if *v == 0 {
                exps.remove(s);
            }
        }
        Monomial { sign: self.sign * other.sign, exps }
    }

    pub fn inv(&self) -> Monomial {
        Monomial { sign: self.sign, exps: self.exps.iter().map(|(s, e)| (*s, -e)).collect() }
    }

    pub fn pow(&self, k: i64) -> Monomial {
        let sign = if self.sign < 0 && k.rem_euclid(2) == 1 { -1 } else { 1 };
        Monomial {
            sign,
            exps: self
                .exps
                .iter()
                .filter_map(|(s, e)| {
                    let v = e * k;
                    (v != 0).then_some((*s, v))
                })
                .collect(),
        }
    }

    pub fn is_one(&self) -> bool {
        self.sign == 1 && self.exps.is_empty()
    }

    /// Square root, defined iff the sign is + and every exponent is even.
    pub fn sqrt(&self) -> Result<Monomial> {
        if self.sign < 0 {
            return Err(BowError::Domain("square root of a negative monomial".into()));
        }
        let mut exps = BTreeMap::new();
        for (s, e) in &self.exps {
            if e % 2 != 0 {
                return Err(BowError::Domain(format!("square root: odd exponent on {s}")));
            }
            exps.insert(*s, e / 2);
        }
        Ok(Monomial { sign: 1, exps })
    }

    /// Net exponent of each a_i.
    pub fn a_exps(&self) -> Vec<(usize, i64)> {
        self.exps
            .iter()
            .filter_map(|(s, e)| match s {
                Symbol::A(i) => Some((*i, *e)),
                _ => None,
            })
            .collect()
    }

    pub fn has_a_part(&self) -> bool {
        self.exps.keys().any(|s| matches!(s, Symbol::A(_)))
    }

    /// Strip the a-part, returning (a-part, hbar/q scalar part).
    pub fn split_a(&self) -> (Monomial, Monomial) {
        let mut a = Monomial::one();
        let mut rest = Monomial { sign: self.sign, exps: BTreeMap::new() };
        for (s, e) in &self.exps {
            match s {
                Symbol::A(_) => a.set(*s, *e),
                _ => rest.set(*s, *e),
            }
        }
        (a, rest)
    }

    /// Substitute each a_i by a monomial, keeping hbar/q powers.
    pub fn substitute_a(&self, map: &dyn Fn(usize) -> Monomial) -> Monomial {
        let mut out = Monomial { sign: self.sign, exps: BTreeMap::new() };
        for (s, e) in &self.exps {
            match s {
                Symbol::A(i) => {
                    let img = map(*i).pow(*e);
                    out = out.mul(&img);
                }
                _ => {
                    let v = out.exp(*s) + e;
                    out.set(*s, v);
                }
            }
        }
        out
    }

    pub fn eval(&self, p: &ParameterPoint) -> Result<Scalar> {
        let mut acc = if self.sign < 0 {
            Scalar::rat_int(-1)
        } else {
            Scalar::rat_int(1)
        };
        if !p.is_exact() {
            acc = Scalar::cplx(if self.sign < 0 { -1.0 } else { 1.0 }, 0.0);
        }
        for (s, e) in &self.exps {
            let v = p.value(*s)?.pow_i64(*e)?;
            acc = acc.mul(&v);
        }
        Ok(acc)
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.sign < 0 {
            write!(f, "-")?;
        }
        if self.exps.is_empty() {
            return write!(f, "1");
        }
        let mut first = true;
        for (s, e) in &self.exps {
            if !first {
                write!(f, "*")?;
            }
            first = false;
            if *e == 1 {
                write!(f, "{s}")?;
            } else {
                write!(f, "{s}^{e}")?;
            }
        }
        Ok(())
    }
}

/// Finite q-Pochhammer (x)_d = prod_{i=0}^{d-1} (1 - x q^i), extended to d < 0
/// by (x)_d = Phi(x)/Phi(q^d x), i.e. prod_{i=1}^{-d} (1 - x q^{-i})^{-1}.
pub fn pochhammer(x: &Scalar, d: i64, p: &ParameterPoint) -> Result<Scalar> {
    let q = p.q();
    let one = x.one_like();
    if d >= 0 {
        let mut acc = one.clone();
        let mut qi = one.clone();
        for _ in 0..d {
            acc = acc.mul(&one.sub(&x.mul(&qi)));
            qi = qi.mul(&q);
        }
        Ok(acc)
    } else {
        let mut acc = one.clone();
        let qinv = q.inv()?;
        let mut qi = qinv.clone();
        for i in 1..=(-d) {
            let factor = one.sub(&x.mul(&qi));
            if factor.is_zero() {
                return Err(BowError::DivisionByZero(format!(
                    "pochhammer pole: factor (1 - x q^-{i}) vanishes"
                )));
            }
            acc = acc.mul(&factor);
            qi = qi.mul(&qinv);
        }
        acc.inv()
    }
}

/// Truncation of Phi(x) = prod_{i>=0} (1 - x q^i) to `n_terms` factors.
pub fn phi_truncated(x: &Scalar, n_terms: usize, p: &ParameterPoint) -> Result<Scalar> {
    if x.is_zero() {
        return Ok(x.one_like());
    }
    if !p.is_exact() {
        p.require_float_q_inside_disk()?;
    }
    let q = p.q();
    let one = x.one_like();
    let mut acc = one.clone();
    let mut qi = one.clone();
    for _ in 0..n_terms {
        acc = acc.mul(&one.sub(&x.mul(&qi)));
        qi = qi.mul(&q);
    }
    Ok(acc)
}

/// Number of Phi factors needed so the dropped tail is below ~1e-30.
pub fn default_phi_terms(p: &ParameterPoint) -> usize {
    let aq = p.q().abs();
    if aq <= 0.0 || aq >= 1.0 {
        return 64;
    }
    let n = (-30.0 * std::f64::consts::LN_10 / aq.ln()).ceil();
    (n as usize).clamp(16, 4096)
}

/// Odd Jacobi theta function with an explicitly chosen square root of x:
/// theta(x) = (x^(1/2) - x^(-1/2)) prod_{n>0} (1 - q^n x)(1 - q^n / x).
pub fn theta_with_sqrt(x_sqrt: &Scalar, n_terms: usize, p: &ParameterPoint) -> Result<Scalar> {
    p.require_float_q_inside_disk()?;
    let x = x_sqrt.mul(x_sqrt);
    if x.is_zero() {
        return Err(BowError::Domain("theta at x = 0".into()));
    }
    let one = x.one_like();
    let mut acc = x_sqrt.sub(&x_sqrt.inv()?);
    let q = p.q();
    let xinv = x.inv()?;
    let mut qn = q.clone();
    for _ in 0..n_terms {
        acc = acc.mul(&one.sub(&qn.mul(&x)));
        acc = acc.mul(&one.sub(&qn.mul(&xinv)));
        qn = qn.mul(&q);
    }
    Ok(acc)
}

/// Theta with the principal branch square root (float backend only).
pub fn theta(x: &Scalar, n_terms: usize, p: &ParameterPoint) -> Result<Scalar> {
    match x {
        Scalar::Rat(_) => Err(BowError::Domain(
            "theta on the exact backend needs an explicit square root; use theta_with_sqrt".into(),
        )),
        Scalar::Cplx { re, im } => {
            let s = Complex64::new(*re, *im).sqrt();
            theta_with_sqrt(&Scalar::cplx(s.re, s.im), n_terms, p)
        }
    }
}

/// delta(t, z) = theta(t z) / (theta(t) theta(z)).
pub fn delta(t: &Scalar, z: &Scalar, n_terms: usize, p: &ParameterPoint) -> Result<Scalar> {
    let th_t = theta(t, n_terms, p)?;
    let th_z = theta(z, n_terms, p)?;
    if th_t.is_zero() || th_z.is_zero() {
        return Err(BowError::Pole("delta pole: theta(t) or theta(z) vanishes".into()));
    }
    let tz = t.mul(z);
    let th_tz = theta(&tz, n_terms, p)?;
    // principal square roots do not compose multiplicatively; fix the branch so
    // that sqrt(tz) = sqrt(t) sqrt(z)
    let st = t.as_complex().sqrt();
    let sz = z.as_complex().sqrt();
    let stz = tz.as_complex().sqrt();
    let prod = st * sz;
    let th_tz = if (prod + stz).norm() < (prod - stz).norm() {
        th_tz.neg()
    } else {
        th_tz
    };
    th_tz.div(&th_t.mul(&th_z))
}

/// Heine's basic hypergeometric series 2phi1(a, b; c; z) truncated at `n_terms`.
pub fn hyp_2phi1(
    a: &Scalar,
    b: &Scalar,
    c: &Scalar,
    z: &Scalar,
    n_terms: usize,
    p: &ParameterPoint,
) -> Result<Scalar> {
    let q = p.q();
    let one = z.one_like();
    let mut sum = one.clone();
    let mut term = one.clone();
    let mut qd = one.clone();
    for d in 0..n_terms as i64 {
        // term_{d+1}/term_d = (1 - a q^d)(1 - b q^d) z / ((1 - q^{d+1})(1 - c q^d))
        let num = one.sub(&a.mul(&qd)).mul(&one.sub(&b.mul(&qd))).mul(z);
        let qd1 = qd.mul(&q);
        let den = one.sub(&qd1).mul(&one.sub(&c.mul(&qd)));
        if den.is_zero() {
            return Err(BowError::DivisionByZero(format!(
                "2phi1 denominator vanishes at index {}",
                d + 1
            )));
        }
        term = term.mul(&num.div(&den)?);
        sum = sum.add(&term);
        qd = qd1;
    }
    Ok(sum)
}

/// |Phi(c)/Phi(b) 2phi1(a,b;c;z) - Phi(az)/Phi(z) 2phi1(c/b, z; az; b)|.
pub fn heine_residual(
    a: &Scalar,
    b: &Scalar,
    c: &Scalar,
    z: &Scalar,
    n_terms: usize,
    p: &ParameterPoint,
) -> Result<f64> {
    p.require_float_q_inside_disk()?;
    if z.abs() >= 1.0 || b.abs() >= 1.0 {
        return Err(BowError::Domain(format!(
            "Heine domain violated: |z| = {}, |b| = {} (both must be < 1)",
            z.abs(),
            b.abs()
        )));
    }
    let nphi = default_phi_terms(p).max(n_terms);
    let lhs = phi_truncated(c, nphi, p)?
        .div(&phi_truncated(b, nphi, p)?)?
        .mul(&hyp_2phi1(a, b, c, z, n_terms, p)?);
    let az = a.mul(z);
    let rhs = phi_truncated(&az, nphi, p)?
        .div(&phi_truncated(z, nphi, p)?)?
        .mul(&hyp_2phi1(&c.div(b)?, z, &az, b, n_terms, p)?);
    Ok(lhs.sub(&rhs).abs())
}

/// Residual of Watson's connection formula for 2phi1.
pub fn watson_residual(
    a: &Scalar,
    b: &Scalar,
    c: &Scalar,
    z: &Scalar,
    n_terms: usize,
    p: &ParameterPoint,
) -> Result<f64> {
    p.require_float_q_inside_disk()?;
    let q = p.q();
    let nphi = default_phi_terms(p).max(n_terms);
    let phi = |x: &Scalar| phi_truncated(x, nphi, p);
    let ab = a.div(b)?;
    let ba = b.div(a)?;
    if phi(&ab)?.is_zero() || phi(&ba)?.is_zero() {
        return Err(BowError::Pole("Watson formula degenerates at a = b q^k".into()));
    }
    let zarg = c.mul(&q).div(&a.mul(b).mul(z))?;
    for s in [z, &zarg] {
        if s.abs() >= 1.0 {
            return Err(BowError::Domain(format!(
                "Watson domain violated: series argument |{}| >= 1",
                s.abs()
            )));
        }
    }
    let lhs = hyp_2phi1(a, b, c, z, n_terms, p)?;

    let bz = b.mul(z);
    let az = a.mul(z);
    let t1 = phi(a)?
        .mul(&phi(&c.div(b)?)?)
        .div(&phi(c)?.mul(&phi(&ab)?))?
        .mul(&phi(&bz)?.mul(&phi(&q.div(&bz)?)?).div(&phi(z)?.mul(&phi(&q.div(z)?)?))?)
        .mul(&hyp_2phi1(
            b,
            &b.mul(&q).div(c)?,
            &b.mul(&q).div(a)?,
            &zarg,
            n_terms,
            p,
        )?);
    let t2 = phi(b)?
        .mul(&phi(&c.div(a)?)?)
        .div(&phi(c)?.mul(&phi(&ba)?))?
        .mul(&phi(&az)?.mul(&phi(&q.div(&az)?)?).div(&phi(z)?.mul(&phi(&q.div(z)?)?))?)
        .mul(&hyp_2phi1(
            a,
            &a.mul(&q).div(c)?,
            &a.mul(&q).div(b)?,
            &zarg,
            n_terms,
            p,
        )?);
    Ok(lhs.sub(&t1.add(&t2)).abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn float_point(q: f64, hbar: f64) -> ParameterPoint {
        ParameterPoint::new(
            vec![Scalar::cplx(2.0, 0.0), Scalar::cplx(3.0, 0.0)],
            Scalar::cplx(hbar.sqrt(), 0.0),
            Scalar::cplx(q.sqrt(), 0.0),
        )
        .unwrap()
    }

    fn rat_point(q: (i64, i64), hbar: (i64, i64)) -> ParameterPoint {
        // q and hbar given through their square roots
        ParameterPoint::new(
            vec![Scalar::rat(2, 1), Scalar::rat(3, 1)],
            Scalar::rat(hbar.0, hbar.1),
            Scalar::rat(q.0, q.1),
        )
        .unwrap()
    }

    #[test]
    fn pochhammer_empty_product() {
        let p = rat_point((1, 3), (1, 2));
        let x = Scalar::rat(5, 7);
        assert!(pochhammer(&x, 0, &p).unwrap().is_one());
    }

    #[test]
    fn pochhammer_negative_one() {
        // (x)_{-1} = 1/(1 - x/q)
        let p = rat_point((1, 3), (1, 2));
        let q = p.q();
        let x = Scalar::rat(5, 7);
        let lhs = pochhammer(&x, -1, &p).unwrap();
        let rhs = x.one_like().sub(&x.div(&q).unwrap()).inv().unwrap();
        assert!(lhs.eq_scalar(&rhs));
    }

    #[test]
    fn pochhammer_negative_identity() {
        // (x)_{-d} = (-q/x)^d q^{d(d-1)/2} / (q/x)_d for d = 1..5
        let p = rat_point((2, 3), (1, 2));
        let q = p.q();
        let x = Scalar::rat(5, 7);
        for d in 1..=5i64 {
            let lhs = pochhammer(&x, -d, &p).unwrap();
            let pref = q.div(&x).unwrap().neg().pow_i64(d).unwrap();
            let qpow = q.pow_i64(d * (d - 1) / 2).unwrap();
            let den = pochhammer(&q.div(&x).unwrap(), d, &p).unwrap();
            let rhs = pref.mul(&qpow).div(&den).unwrap();
            assert!(lhs.eq_scalar(&rhs), "d = {d}");
        }
    }

    #[test]
    fn pochhammer_cocycle() {
        // (x)_{d+e} = (x)_d (q^d x)_e on signed indices
        let p = rat_point((3, 5), (1, 2));
        let q = p.q();
        let x = Scalar::rat(3, 11);
        for d in -3..=3i64 {
            for e in -3..=3i64 {
                let lhs = pochhammer(&x, d + e, &p).unwrap();
                let shifted = q.pow_i64(d).unwrap().mul(&x);
                let rhs = pochhammer(&x, d, &p).unwrap().mul(&pochhammer(&shifted, e, &p).unwrap());
                assert!(lhs.eq_scalar(&rhs), "d = {d}, e = {e}");
            }
        }
    }

    #[test]
    fn phi_ratio_telescopes_to_pochhammer() {
        // Phi(x)/Phi(q^3 x) with a shared truncation at N factors equals
        // (x)_3 / (q^N x)_3, so the tail cancels as N grows
        let p = rat_point((1, 4), (1, 2));
        let q = p.q();
        let x = Scalar::rat(2, 9);
        let n = 20i64;
        let mut num = x.one_like();
        let mut den = x.one_like();
        for i in 0..n {
            num = num.mul(&x.one_like().sub(&x.mul(&q.pow_i64(i).unwrap())));
            den = den.mul(&x.one_like().sub(&x.mul(&q.pow_i64(i + 3).unwrap())));
        }
        let ratio = num.div(&den).unwrap();
        let head = pochhammer(&x, 3, &p).unwrap();
        let tail = pochhammer(&x.mul(&q.pow_i64(n).unwrap()), 3, &p).unwrap();
        assert!(ratio.eq_scalar(&head.div(&tail).unwrap()));
    }

    #[test]
    fn phi_truncation_stable() {
        let p = float_point(0.1, 0.5);
        let x = Scalar::cplx(0.5, 0.0);
        let a = phi_truncated(&x, 40, &p).unwrap();
        let b = phi_truncated(&x, 60, &p).unwrap();
        assert!(a.sub(&b).abs() < 1e-30);
    }

    #[test]
    fn theta_zeros() {
        let p = float_point(0.1, 0.5);
        let n = default_phi_terms(&p);
        let th1 = theta(&Scalar::cplx(1.0, 0.0), n, &p).unwrap();
        assert!(th1.abs() < 1e-14);
        let thq = theta(&p.q(), n, &p).unwrap();
        assert!(thq.abs() < 1e-14);
    }

    #[test]
    fn theta_quasi_periods() {
        // theta(q^k x)/theta(x) = (-1)^k q^{-k^2/2} x^{-k} for k in -2..=2
        let p = float_point(0.1, 0.5);
        let n = default_phi_terms(&p);
        let x = Scalar::cplx(2.0, 0.0);
        let th_x = theta(&x, n, &p).unwrap();
        for k in -2..=2i64 {
            let qk = p.q().pow_i64(k).unwrap();
            let lhs = theta(&qk.mul(&x), n, &p).unwrap().div(&th_x).unwrap();
            let sign = if k.rem_euclid(2) == 1 { -1.0 } else { 1.0 };
            let qpow = p.q_sqrt.pow_i64(-k * k).unwrap();
            let rhs = Scalar::cplx(sign, 0.0).mul(&qpow).mul(&x.pow_i64(-k).unwrap());
            assert!(lhs.sub(&rhs).abs() < 1e-12, "k = {k}");
        }
    }

    #[test]
    fn delta_symmetry_and_quasi_period() {
        let p = float_point(0.1, 0.5);
        let n = default_phi_terms(&p);
        let t = Scalar::cplx(2.0, 0.0);
        let z = Scalar::cplx(3.0, 0.0);
        let d1 = delta(&t, &z, n, &p).unwrap();
        let d2 = delta(&z, &t, n, &p).unwrap();
        assert!(d1.sub(&d2).abs() < 1e-12);
        // delta(q x, y)/delta(x, y) = y^{-1}
        let qt = p.q().mul(&t);
        let lhs = delta(&qt, &z, n, &p).unwrap().div(&d1).unwrap();
        assert!(lhs.sub(&z.inv().unwrap()).abs() < 1e-12);
        // delta(t,z) theta(t) theta(z) = theta(tz)
        let prod = d1
            .mul(&theta(&t, n, &p).unwrap())
            .mul(&theta(&z, n, &p).unwrap());
        let th_tz = theta(&t.mul(&z), n, &p).unwrap();
        assert!(prod.sub(&th_tz).abs() < 1e-12);
    }

    #[test]
    fn hyp_at_zero_and_q_binomial_collapse() {
        let p = float_point(0.1, 0.5);
        let a = Scalar::cplx(0.7, 0.0);
        let b = Scalar::cplx(0.3, 0.0);
        let v = hyp_2phi1(&a, &b, &b, &Scalar::cplx(0.0, 0.0), 30, &p).unwrap();
        assert!(v.is_one());
        // 2phi1(q, b; b; z) = 1/(1-z) to truncation order
        let z = Scalar::cplx(0.4, 0.0);
        let v = hyp_2phi1(&p.q(), &b, &b, &z, 200, &p).unwrap();
        let expected = z.one_like().sub(&z).inv().unwrap();
        assert!(v.sub(&expected).abs() < 1e-12);
    }

    #[test]
    fn hyp_partial_sums_cauchy() {
        // successive truncations converge geometrically under |z|, |q| < 1
        let p = float_point(0.2, 0.5);
        let a = Scalar::cplx(0.7, 0.0);
        let b = Scalar::cplx(0.4, 0.0);
        let c = Scalar::cplx(0.3, 0.0);
        let z = Scalar::cplx(0.5, 0.0);
        let mut prev = f64::INFINITY;
        for n in [10, 20, 40, 80] {
            let s1 = hyp_2phi1(&a, &b, &c, &z, n, &p).unwrap();
            let s2 = hyp_2phi1(&a, &b, &c, &z, n + 5, &p).unwrap();
            let gap = s1.sub(&s2).abs();
            assert!(gap < prev.max(1e-30));
            prev = gap;
        }
        assert!(prev < 1e-20);
    }

    #[test]
    fn heine_small_residual() {
        let p = float_point(0.1, 0.5);
        let r = heine_residual(
            &Scalar::cplx(0.3, 0.0),
            &Scalar::cplx(0.2, 0.0),
            &Scalar::cplx(0.5, 0.0),
            &Scalar::cplx(0.4, 0.0),
            120,
            &p,
        )
        .unwrap();
        assert!(r < 1e-10, "residual {r}");
    }

    #[test]
    fn heine_b_equals_c() {
        let p = float_point(0.1, 0.5);
        let b = Scalar::cplx(0.25, 0.0);
        let r = heine_residual(&Scalar::cplx(0.6, 0.0), &b, &b, &Scalar::cplx(0.35, 0.0), 120, &p)
            .unwrap();
        assert!(r < 1e-10);
    }

    #[test]
    fn watson_small_residual() {
        let p = float_point(0.1, 0.5);
        let r = watson_residual(
            &Scalar::cplx(0.4, 0.0),
            &Scalar::cplx(0.9, 0.0),
            &Scalar::cplx(0.2, 0.0),
            &Scalar::cplx(0.5, 0.0),
            160,
            &p,
        )
        .unwrap();
        assert!(r < 1e-9, "residual {r}");
    }

    #[test]
    fn watson_degenerate_a_equals_b() {
        let p = float_point(0.1, 0.5);
        let a = Scalar::cplx(0.4, 0.0);
        let err = watson_residual(&a, &a, &Scalar::cplx(0.2, 0.0), &Scalar::cplx(0.5, 0.0), 40, &p);
        assert!(err.is_err());
    }

    #[test]
    fn monomial_sqrt() {
        let m = Monomial::a(0).mul(&Monomial::a(0)).mul(&Monomial::hbar_pow(1));
        let r = m.sqrt().unwrap();
        assert_eq!(r.exp(Symbol::A(0)), 1);
        assert_eq!(r.exp(Symbol::HbarSqrt), 1);
        assert!(Monomial::a(0).sqrt().is_err());
    }
}
