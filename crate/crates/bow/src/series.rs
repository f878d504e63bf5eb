//! Truncated multivariate power series in Kahler symbols Q_i and chamber-ordered
//! ratio symbols u_j, with substitution maps for the various parameter
//! specializations (phi*, psi*, the mirror map, MSver and HW shifts).
//!
//! Exponents are non-negative; truncation is by total degree, tracked separately
//! for the Q-group and the u-group.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{BowError, Result};
use crate::scalar::Scalar;

/// Ordered variable roster: Q-symbols first, then u-symbols.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct Roster {
    pub q_vars: Vec<String>,
    pub u_vars: Vec<String>,
}

impl Roster {
    pub fn new(q_vars: Vec<String>, u_vars: Vec<String>) -> Roster {
        Roster { q_vars, u_vars }
    }

    pub fn q_only(m: usize) -> Roster {
        Roster::new((1..=m).map(|i| format!("Q{i}")).collect(), vec![])
    }

    pub fn standard(m: usize, n: usize) -> Roster {
        Roster::new(
            (1..=m).map(|i| format!("Q{i}")).collect(),
            (1..=n).map(|j| format!("u{j}")).collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.q_vars.len() + self.u_vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn name(&self, idx: usize) -> &str {
        if idx < self.q_vars.len() {
            &self.q_vars[idx]
        } else {
            &self.u_vars[idx - self.q_vars.len()]
        }
    }
}

/// Total-degree truncation orders for the two variable groups.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct Truncation {
    pub q_order: u32,
    pub u_order: u32,
}

impl Truncation {
    pub fn new(q_order: u32, u_order: u32) -> Truncation {
        Truncation { q_order, u_order }
    }

    pub fn min(self, other: Truncation) -> Truncation {
        Truncation {
            q_order: self.q_order.min(other.q_order),
            u_order: self.u_order.min(other.u_order),
        }
    }
}

fn split_degrees(roster: &Roster, exps: &[i64]) -> (i64, i64) {
    let nq = roster.q_vars.len();
    let dq: i64 = exps[..nq].iter().sum();
    let du: i64 = exps[nq..].iter().sum();
    (dq, du)
}

/// Dense-by-exponent-map truncated power series with Scalar coefficients.
#[derive(Clone, Debug)]
pub struct TruncatedSeries {
    pub roster: Roster,
    pub trunc: Truncation,
    pub terms: BTreeMap<Vec<i64>, Scalar>,
}

impl TruncatedSeries {
    pub fn zero(roster: Roster, trunc: Truncation) -> TruncatedSeries {
        TruncatedSeries { roster, trunc, terms: BTreeMap::new() }
    }

    pub fn constant(roster: Roster, trunc: Truncation, c: Scalar) -> TruncatedSeries {
        let mut s = TruncatedSeries::zero(roster, trunc);
        if !c.is_zero() {
            s.terms.insert(vec![0; s.roster.len()], c);
        }
        s
    }

    pub fn one(roster: Roster, trunc: Truncation) -> TruncatedSeries {
        TruncatedSeries::constant(roster, trunc, Scalar::rat_int(1))
    }

    pub fn monomial_term(
        roster: Roster,
        trunc: Truncation,
        exps: Vec<i64>,
        c: Scalar,
    ) -> TruncatedSeries {
        let mut s = TruncatedSeries::zero(roster, trunc);
        s.insert(exps, c);
        s
    }

    pub fn within(&self, exps: &[i64]) -> bool {
        let (dq, du) = split_degrees(&self.roster, exps);
        dq <= self.trunc.q_order as i64 && du <= self.trunc.u_order as i64
    }

    pub fn insert(&mut self, exps: Vec<i64>, c: Scalar) {
        debug_assert_eq!(exps.len(), self.roster.len());
        if c.is_zero() || !self.within(&exps) {
            return;
        }
        match self.terms.entry(exps) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let v = e.get().add(&c);
                if v.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = v;
                }
            }
        }
    }

    pub fn coeff(&self, exps: &[i64]) -> Scalar {
        self.terms.get(exps).cloned().unwrap_or(Scalar::rat_int(0))
    }

    pub fn constant_term(&self) -> Scalar {
        self.coeff(&vec![0; self.roster.len()])
    }

    fn check_roster(&self, other: &TruncatedSeries) -> Result<()> {
        if self.roster != other.roster {
            return Err(BowError::Domain(format!(
                "roster mismatch: {:?} vs {:?}",
                self.roster, other.roster
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &TruncatedSeries) -> Result<TruncatedSeries> {
        self.check_roster(other)?;
        let mut out =
            TruncatedSeries::zero(self.roster.clone(), self.trunc.min(other.trunc));
        for (e, c) in self.terms.iter().chain(other.terms.iter()) {
            out.insert(e.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &TruncatedSeries) -> Result<TruncatedSeries> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> TruncatedSeries {
        TruncatedSeries {
            roster: self.roster.clone(),
            trunc: self.trunc,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), c.neg())).collect(),
        }
    }

    pub fn scalar_mul(&self, c: &Scalar) -> TruncatedSeries {
        if c.is_zero() {
            return TruncatedSeries::zero(self.roster.clone(), self.trunc);
        }
        TruncatedSeries {
            roster: self.roster.clone(),
            trunc: self.trunc,
            terms: self.terms.iter().map(|(e, v)| (e.clone(), v.mul(c))).collect(),
        }
    }

    pub fn mul(&self, other: &TruncatedSeries) -> Result<TruncatedSeries> {
        self.check_roster(other)?;
        let mut out =
            TruncatedSeries::zero(self.roster.clone(), self.trunc.min(other.trunc));
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let e: Vec<i64> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                if out.within(&e) {
                    out.insert(e, c1.mul(c2));
                }
            }
        }
        Ok(out)
    }

    /// Multiply by a single monomial c * x^shift (shift over this roster).
    pub fn shift_mul(&self, shift: &[i64], c: &Scalar) -> TruncatedSeries {
        let mut out = TruncatedSeries::zero(self.roster.clone(), self.trunc);
        for (e, v) in &self.terms {
            let ne: Vec<i64> = e.iter().zip(shift).map(|(a, b)| a + b).collect();
            out.insert(ne, v.mul(c));
        }
        out
    }

    /// Inverse of a series with invertible constant term, up to truncation.
    pub fn invert(&self) -> Result<TruncatedSeries> {
        let c0 = self.constant_term();
        if c0.is_zero() {
            return Err(BowError::Domain(
                "cannot invert a series with vanishing constant term".into(),
            ));
        }
        let c0_inv = c0.inv()?;
        let mut out = TruncatedSeries::zero(self.roster.clone(), self.trunc);
        let zero_exp = vec![0i64; self.roster.len()];
        out.insert(zero_exp.clone(), c0_inv.clone());
        // graded recursion: b_e = -c0^{-1} sum_{0 < f <= e} a_f b_{e-f}
        let mut grades: Vec<Vec<i64>> = vec![];
        collect_grades(&self.roster, self.trunc, &mut grades);
        for e in grades {
            if e == zero_exp {
                continue;
            }
            let mut acc = Scalar::rat_int(0);
            for (f, af) in &self.terms {
                if f == &zero_exp {
                    continue;
                }
                if f.iter().zip(&e).all(|(a, b)| a <= b) {
                    let rem: Vec<i64> = e.iter().zip(f).map(|(a, b)| a - b).collect();
                    if let Some(b) = out.terms.get(&rem) {
                        acc = acc.add(&af.mul(b));
                    }
                }
            }
            if !acc.is_zero() {
                out.insert(e, acc.neg().mul(&c0_inv));
            }
        }
        Ok(out)
    }

    /// Exact division self/div, requiring divisibility by the lowest term of div.
    ///
    /// `div` is factored as c * x^gamma * (1 + higher); self must be divisible by
    /// x^gamma within the truncation window.
    pub fn divide_exact(&self, div: &TruncatedSeries) -> Result<TruncatedSeries> {
        self.check_roster(div)?;
        if div.terms.is_empty() {
            return Err(BowError::DivisionByZero("series division by zero".into()));
        }
        // lowest term by (total degree, lex)
        let gamma = div
            .terms
            .keys()
            .min_by_key(|e| {
                let (dq, du) = split_degrees(&div.roster, e);
                (dq + du, (*e).clone())
            })
            .unwrap()
            .clone();
        let mut shifted_div = TruncatedSeries::zero(self.roster.clone(), self.trunc);
        for (e, c) in &div.terms {
            if e.iter().zip(&gamma).all(|(a, b)| a >= b) {
                let ne: Vec<i64> = e.iter().zip(&gamma).map(|(a, b)| a - b).collect();
                shifted_div.insert(ne, c.clone());
            } else {
                return Err(BowError::Domain(
                    "divisor lowest term does not divide all its terms".into(),
                ));
            }
        }
        let mut shifted_num = TruncatedSeries::zero(self.roster.clone(), self.trunc);
        for (e, c) in &self.terms {
            if e.iter().zip(&gamma).all(|(a, b)| a >= b) {
                let ne: Vec<i64> = e.iter().zip(&gamma).map(|(a, b)| a - b).collect();
                shifted_num.insert(ne, c.clone());
            } else {
                return Err(BowError::Domain(format!(
                    "series not divisible: term {e:?} below divisor valuation {gamma:?}"
                )));
            }
        }
        shifted_num.mul(&shifted_div.invert()?)
    }

    /// Retruncate to stricter orders.
    pub fn truncate(&self, trunc: Truncation) -> TruncatedSeries {
        let mut out = TruncatedSeries::zero(self.roster.clone(), self.trunc.min(trunc));
        for (e, c) in &self.terms {
            out.insert(e.clone(), c.clone());
        }
        out
    }

    /// Slice of fixed u-degree 0: the "constant term in a" of the ring R.
    pub fn u_constant_slice(&self) -> TruncatedSeries {
        let nq = self.roster.q_vars.len();
        let mut out = TruncatedSeries::zero(self.roster.clone(), self.trunc);
        for (e, c) in &self.terms {
            if e[nq..].iter().all(|x| *x == 0) {
                out.insert(e.clone(), c.clone());
            }
        }
        out
    }

    /// Largest coefficient magnitude (float comparison aid).
    pub fn max_abs(&self) -> f64 {
        self.terms.values().map(|c| c.abs()).fold(0.0, f64::max)
    }

    pub fn eval(&self, values: &[Scalar]) -> Result<Scalar> {
        if values.len() != self.roster.len() {
            return Err(BowError::Domain("eval: wrong number of values".into()));
        }
        let mut acc = Scalar::rat_int(0);
        for (e, c) in &self.terms {
            let mut t = c.clone();
            for (x, k) in values.iter().zip(e) {
                t = t.mul(&x.pow_i64(*k)?);
            }
            acc = acc.add(&t);
        }
        Ok(acc)
    }
}

fn collect_grades_rec(
    roster: &Roster,
    trunc: Truncation,
    idx: usize,
    cur: &mut Vec<i64>,
    out: &mut Vec<Vec<i64>>,
) {
    if idx == roster.len() {
        out.push(cur.clone());
        return;
    }
    let nq = roster.q_vars.len();
    let (dq, du) = split_degrees(roster, cur);
    let room = if idx < nq {
        trunc.q_order as i64 - dq
    } else {
        trunc.u_order as i64 - du
    };
    for k in 0..=room.max(0) {
        cur[idx] = k;
        collect_grades_rec(roster, trunc, idx + 1, cur, out);
    }
    cur[idx] = 0;
}

/// All exponent vectors within truncation, sorted by total degree then lex.
pub fn collect_grades(roster: &Roster, trunc: Truncation, out: &mut Vec<Vec<i64>>) {
    let mut cur = vec![0i64; roster.len()];
    collect_grades_rec(roster, trunc, 0, &mut cur, out);
    out.sort_by_key(|e| {
        let (dq, du) = split_degrees(roster, e);
        (dq + du, e.clone())
    });
}

/// Expansion of (1 - c x^beta)^{sign} with sign1 = +1 or -1 (geometric series
/// when inverting). `beta` must have positive total degree, or be constant with
/// c != 1 when inverting.
pub fn expand_rational_factor(
    roster: &Roster,
    trunc: Truncation,
    c: &Scalar,
    beta: &[i64],
    invert: bool,
) -> Result<TruncatedSeries> {
    let total: i64 = beta.iter().sum();
    if beta.iter().any(|&b| b < 0) {
        return Err(BowError::Domain(
            "expand_rational_factor needs non-negative exponents".into(),
        ));
    }
    let one = Scalar::rat_int(1);
    if total == 0 {
        let v = one.sub(c);
        if invert {
            if v.is_zero() {
                return Err(BowError::DivisionByZero(
                    "cannot invert (1 - m) with m of zero degree and scalar part 1".into(),
                ));
            }
            return Ok(TruncatedSeries::constant(roster.clone(), trunc, v.inv()?));
        }
        return Ok(TruncatedSeries::constant(roster.clone(), trunc, v));
    }
    let mut out = TruncatedSeries::one(roster.clone(), trunc);
    if !invert {
        out.insert(beta.to_vec(), c.neg());
        return Ok(out);
    }
    // 1 + (c x^beta) + (c x^beta)^2 + ...
    let (dq, du) = split_degrees(roster, beta);
    let kmax = {
        let kq = if dq == 0 { i64::MAX } else { trunc.q_order as i64 / dq };
        let ku = if du == 0 { i64::MAX } else { trunc.u_order as i64 / du };
        kq.min(ku)
    };
    let mut pow = one;
    for k in 1..=kmax {
        pow = pow.mul(c);
        let e: Vec<i64> = beta.iter().map(|b| b * k).collect();
        out.insert(e, pow.clone());
    }
    Ok(out)
}

/// Equality up to the given orders; returns the first differing exponent
/// and the magnitude of the worst difference.
pub struct SeriesComparison {
    pub equal: bool,
    pub first_difference: Option<Vec<i64>>,
    pub max_abs_difference: f64,
}

pub fn series_equal(
    s1: &TruncatedSeries,
    s2: &TruncatedSeries,
    trunc: Truncation,
) -> Result<SeriesComparison> {
    if s1.roster != s2.roster {
        return Err(BowError::Domain("series_equal: incompatible rosters".into()));
    }
    let a = s1.truncate(trunc);
    let b = s2.truncate(trunc);
    let diff = a.sub(&b)?;
    let mut worst = 0.0f64;
    let mut first: Option<Vec<i64>> = None;
    for (e, c) in &diff.terms {
        let m = c.abs();
        if m > 0.0 && first.is_none() {
            first = Some(e.clone());
        }
        worst = worst.max(m);
    }
    Ok(SeriesComparison { equal: diff.terms.is_empty(), first_difference: first, max_abs_difference: worst })
}

/// Target of one variable under a substitution: coeff * prod target_vars^exps.
#[derive(Clone, Debug)]
pub struct SubTarget {
    pub coeff: Scalar,
    pub exps: Vec<i64>,
}

/// A ring homomorphism up to truncation, defined variable by variable.
///
/// Substituting a pure scalar (all exponents zero) is rejected unless
/// `allow_constant` asserts convergence; this guards the specialization of a
/// Kahler variable at a boundary-of-convergence point.
#[derive(Clone, Debug)]
pub struct SubstitutionMap {
    pub source: Roster,
    pub target: Roster,
    pub targets: Vec<SubTarget>,
    pub allow_constant: bool,
}

impl SubstitutionMap {
    /// Identity on a roster.
    pub fn identity(roster: &Roster) -> SubstitutionMap {
        let n = roster.len();
        let targets = (0..n)
            .map(|i| {
                let mut e = vec![0i64; n];
                e[i] = 1;
                SubTarget { coeff: Scalar::rat_int(1), exps: e }
            })
            .collect();
        SubstitutionMap {
            source: roster.clone(),
            target: roster.clone(),
            targets,
            allow_constant: false,
        }
    }

    pub fn apply(&self, s: &TruncatedSeries) -> Result<TruncatedSeries> {
        if s.roster != self.source {
            return Err(BowError::Domain("substitution source roster mismatch".into()));
        }
        for (i, t) in self.targets.iter().enumerate() {
            if t.exps.iter().all(|e| *e == 0) && !t.coeff.is_zero() && !self.allow_constant {
                return Err(BowError::SubstitutionGuard(format!(
                    "variable {} maps to a scalar; a power series cannot be specialized at a \
                     boundary-of-convergence point without an explicit convergence assertion",
                    self.source.name(i)
                )));
            }
        }
        let mut out = TruncatedSeries::zero(self.target.clone(), s.trunc);
        'terms: for (e, c) in &s.terms {
            let mut coeff = c.clone();
            let mut exps = vec![0i64; self.target.len()];
            for (i, k) in e.iter().enumerate() {
                if *k == 0 {
                    continue;
                }
                let t = &self.targets[i];
                coeff = coeff.mul(&t.coeff.pow_i64(*k)?);
                if coeff.is_zero() {
                    continue 'terms;
                }
                for (slot, te) in exps.iter_mut().zip(&t.exps) {
                    *slot += te * k;
                }
            }
            if out.within(&exps) {
                out.insert(exps, coeff);
            }
        }
        Ok(out)
    }

    /// Composition other after self (apply self first).
    pub fn then(&self, other: &SubstitutionMap) -> Result<SubstitutionMap> {
        if self.target != other.source {
            return Err(BowError::Domain("substitution composition roster mismatch".into()));
        }
        let mut targets = vec![];
        for t in &self.targets {
            let mut coeff = t.coeff.clone();
            let mut exps = vec![0i64; other.target.len()];
            for (i, k) in t.exps.iter().enumerate() {
                if *k == 0 {
                    continue;
                }
                let ot = &other.targets[i];
                coeff = coeff.mul(&ot.coeff.pow_i64(*k)?);
                for (slot, te) in exps.iter_mut().zip(&ot.exps) {
                    *slot += te * k;
                }
            }
            targets.push(SubTarget { coeff, exps });
        }
        Ok(SubstitutionMap {
            source: self.source.clone(),
            target: other.target.clone(),
            targets,
            allow_constant: self.allow_constant || other.allow_constant,
        })
    }
}

/// Canonical JSON form, stable across runs (used for cache keys).
#[derive(Serialize, Deserialize)]
pub struct SeriesJson {
    pub variables: Vec<String>,
    pub truncation: TruncationJson,
    pub terms: Vec<TermJson>,
}

#[derive(Serialize, Deserialize)]
pub struct TruncationJson {
    pub q_order: u32,
    pub u_order: u32,
    pub n_q_vars: usize,
}

#[derive(Serialize, Deserialize)]
pub struct TermJson {
    pub exp: Vec<i64>,
    pub coeff: CoeffJson,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
pub enum CoeffJson {
    Rational(String),
    Complex { re: f64, im: f64 },
}

impl TruncatedSeries {
    pub fn to_json(&self) -> SeriesJson {
        SeriesJson {
            variables: (0..self.roster.len()).map(|i| self.roster.name(i).to_string()).collect(),
            truncation: TruncationJson {
                q_order: self.trunc.q_order,
                u_order: self.trunc.u_order,
                n_q_vars: self.roster.q_vars.len(),
            },
            terms: self
                .terms
                .iter()
                .map(|(e, c)| TermJson {
                    exp: e.clone(),
                    coeff: match c {
                        Scalar::Rat(r) => CoeffJson::Rational(r.to_string()),
                        Scalar::Cplx { re, im } => CoeffJson::Complex { re: *re, im: *im },
                    },
                })
                .collect(),
        }
    }

    pub fn from_json(j: &SeriesJson) -> Result<TruncatedSeries> {
        let nq = j.truncation.n_q_vars;
        let roster = Roster::new(
            j.variables[..nq].to_vec(),
            j.variables[nq..].to_vec(),
        );
        let mut s = TruncatedSeries::zero(
            roster,
            Truncation::new(j.truncation.q_order, j.truncation.u_order),
        );
        for t in &j.terms {
            let c = match &t.coeff {
                CoeffJson::Rational(r) => Scalar::parse_rational(r)?,
                CoeffJson::Complex { re, im } => Scalar::cplx(*re, *im),
            };
            s.insert(t.exp.clone(), c);
        }
        Ok(s)
    }
}

impl fmt::Display for TruncatedSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({:?})", c)?;
            for (i, k) in e.iter().enumerate() {
                if *k > 0 {
                    write!(f, " {}^{}", self.roster.name(i), k)?;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn random_sparse(roster: &Roster, trunc: Truncation, rng: &mut SplitMix64) -> TruncatedSeries {
        let mut grades = vec![];
        collect_grades(roster, trunc, &mut grades);
        let mut s = TruncatedSeries::zero(roster.clone(), trunc);
        for e in grades {
            if rng.next_u64() % 3 == 0 {
                let num = (rng.next_u64() % 19) as i64 - 9;
                let den = (rng.next_u64() % 7 + 1) as i64;
                s.insert(e, Scalar::rat(num, den));
            }
        }
        s
    }

    #[test]
    fn mul_associative_up_to_truncation() {
        let roster = Roster::standard(2, 2);
        let trunc = Truncation::new(3, 3);
        let mut rng = SplitMix64::new(7);
        for _ in 0..10 {
            let a = random_sparse(&roster, trunc, &mut rng);
            let b = random_sparse(&roster, trunc, &mut rng);
            let c = random_sparse(&roster, trunc, &mut rng);
            let lhs = a.mul(&b).unwrap().mul(&c).unwrap();
            let rhs = a.mul(&b.mul(&c).unwrap()).unwrap();
            assert!(series_equal(&lhs, &rhs, trunc).unwrap().equal);
        }
    }

    #[test]
    fn invert_roundtrip() {
        let roster = Roster::standard(1, 2);
        let trunc = Truncation::new(4, 4);
        let mut rng = SplitMix64::new(13);
        for _ in 0..10 {
            let mut s = random_sparse(&roster, trunc, &mut rng);
            let e0 = vec![0i64; roster.len()];
            s.terms.insert(e0, Scalar::rat_int(1));
            let inv = s.invert().unwrap();
            let prod = s.mul(&inv).unwrap();
            let one = TruncatedSeries::one(roster.clone(), trunc);
            assert!(series_equal(&prod, &one, trunc).unwrap().equal);
            let twice = inv.invert().unwrap();
            assert!(series_equal(&twice, &s, trunc).unwrap().equal);
        }
    }

    #[test]
    fn substitution_identity_and_monomial() {
        let roster = Roster::standard(1, 0);
        let trunc = Truncation::new(5, 0);
        // sum Q^d
        let mut s = TruncatedSeries::zero(roster.clone(), trunc);
        for d in 0..=5i64 {
            s.insert(vec![d], Scalar::rat_int(1));
        }
        let id = SubstitutionMap::identity(&roster);
        assert!(series_equal(&id.apply(&s).unwrap(), &s, trunc).unwrap().equal);
        // Q -> qQ with q = 1/2
        let sub = SubstitutionMap {
            source: roster.clone(),
            target: roster.clone(),
            targets: vec![SubTarget { coeff: Scalar::rat(1, 2), exps: vec![1] }],
            allow_constant: false,
        };
        let t = sub.apply(&s).unwrap();
        for d in 0..=5i64 {
            let expected = Scalar::rat(1, 2).pow_i64(d).unwrap();
            assert!(t.coeff(&[d]).eq_scalar(&expected));
        }
    }

    #[test]
    fn substitution_guard_rejects_scalar_target() {
        let roster = Roster::standard(1, 0);
        let trunc = Truncation::new(3, 0);
        let s = TruncatedSeries::one(roster.clone(), trunc);
        let sub = SubstitutionMap {
            source: roster.clone(),
            target: roster.clone(),
            targets: vec![SubTarget { coeff: Scalar::rat(1, 2), exps: vec![0] }],
            allow_constant: false,
        };
        assert!(matches!(sub.apply(&s), Err(BowError::SubstitutionGuard(_))));
    }

    #[test]
    fn substitution_composes() {
        let roster = Roster::standard(2, 1);
        let trunc = Truncation::new(3, 3);
        let mut rng = SplitMix64::new(99);
        let s = random_sparse(&roster, trunc, &mut rng);
        let sub1 = SubstitutionMap {
            source: roster.clone(),
            target: roster.clone(),
            targets: vec![
                SubTarget { coeff: Scalar::rat(1, 3), exps: vec![1, 0, 0] },
                SubTarget { coeff: Scalar::rat_int(2), exps: vec![0, 1, 1] },
                SubTarget { coeff: Scalar::rat_int(1), exps: vec![0, 0, 1] },
            ],
            allow_constant: false,
        };
        let sub2 = SubstitutionMap {
            source: roster.clone(),
            target: roster.clone(),
            targets: vec![
                SubTarget { coeff: Scalar::rat(2, 5), exps: vec![0, 1, 0] },
                SubTarget { coeff: Scalar::rat_int(1), exps: vec![1, 0, 0] },
                SubTarget { coeff: Scalar::rat(7, 2), exps: vec![0, 0, 1] },
            ],
            allow_constant: false,
        };
        let lhs = sub2.apply(&sub1.apply(&s).unwrap()).unwrap();
        let rhs = sub1.then(&sub2).unwrap().apply(&s).unwrap();
        assert!(series_equal(&lhs, &rhs, trunc).unwrap().equal);
    }

    #[test]
    fn geometric_expansion() {
        let roster = Roster::standard(0, 1);
        let trunc = Truncation::new(0, 5);
        let s =
            expand_rational_factor(&roster, trunc, &Scalar::rat_int(1), &[1], true).unwrap();
        for k in 0..=5i64 {
            assert!(s.coeff(&[k]).is_one());
        }
        // 1/(1 - q u1 u2) pattern with two variables
        let roster = Roster::standard(0, 2);
        let trunc = Truncation::new(0, 6);
        let q = Scalar::rat(1, 2);
        let s = expand_rational_factor(&roster, trunc, &q, &[1, 1], true).unwrap();
        for k in 0..=3i64 {
            let expected = q.pow_i64(k).unwrap();
            assert!(s.coeff(&[k, k]).eq_scalar(&expected));
        }
    }

    #[test]
    fn equality_reports_first_difference() {
        let roster = Roster::standard(1, 0);
        let trunc = Truncation::new(4, 0);
        let geo =
            expand_rational_factor(&roster, trunc, &Scalar::rat_int(1), &[1], true).unwrap();
        let mut partial = TruncatedSeries::zero(roster.clone(), trunc);
        for d in 0..=2i64 {
            partial.insert(vec![d], Scalar::rat_int(1));
        }
        let cmp = series_equal(&geo, &partial, trunc).unwrap();
        assert!(!cmp.equal);
        assert_eq!(cmp.first_difference, Some(vec![3]));
    }

    #[test]
    fn json_roundtrip_is_bit_identical() {
        let roster = Roster::standard(2, 1);
        let trunc = Truncation::new(3, 2);
        let mut rng = SplitMix64::new(5);
        let s = random_sparse(&roster, trunc, &mut rng);
        let j = serde_json::to_string(&s.to_json()).unwrap();
        let back = TruncatedSeries::from_json(&serde_json::from_str(&j).unwrap()).unwrap();
        assert!(series_equal(&s, &back, trunc).unwrap().equal);
        let j2 = serde_json::to_string(&back.to_json()).unwrap();
        assert_eq!(j, j2);
    }
}
