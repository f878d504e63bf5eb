//! Vertex-function engines and normalizations.
//!
//! Two independent engines compute the localization sum for separated diagrams
//! with weight-one D5 branes: the reverse-plane-partition sum over chain
//! butterflies ([`vertex_rpp`]) and the refined theta-sum ([`vertex_flag`]).
//! Arbitrary D5 weights route through the maximal D5 resolution and the phi*
//! substitution of the equivariant symbols ([`vertex_general`]); co-separated
//! diagrams route through the separated dictionary with a calibrated Kahler
//! shift ([`vertex_coseparated`]). On top of these sit the MSver shift, the
//! flag limits, the permutation property, and the aggregate HW shift check.

use serde::{Deserialize, Serialize};

use crate::brane::BraneDiagram;
use crate::error::{BowError, Result};
use crate::fixed_points::{Chamber, FixedPoint};
use crate::scalar::{Monomial, ParameterPoint, Scalar, Symbol};
use crate::series::{Roster, SubTarget, SubstitutionMap, TruncatedSeries, Truncation};

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum Mode {
    /// Coefficients are scalars; the a_i are evaluated at the parameter point.
    Numeric,
    /// The a-dependence is expanded in chamber-ordered u-symbols.
    Expansion,
}

/// A separated weight-one-D5 localization problem: possibly the image of a
/// resolution or of the co-separated dictionary, so D5 slots carry arbitrary
/// equivariant monomials.
#[derive(Clone, Debug)]
pub struct SeparatedW1 {
    /// NS5 weights w(Z_1)..w(Z_m) of the working separated diagram.
    pub ns5_weights: Vec<u32>,
    /// Row of the unique tie of each D5 slot (0-based).
    pub sigma: Vec<usize>,
    /// Equivariant monomial carried by each D5 slot.
    pub slots: Vec<Monomial>,
}

impl SeparatedW1 {
    pub fn m(&self) -> usize {
        self.ns5_weights.len()
    }

    pub fn n_slots(&self) -> usize {
        self.slots.len()
    }

    /// NS5-gap dimensions d_1..d_m of the working diagram (d_k counts the
    /// chains already started).
    pub fn gap_dims(&self) -> Vec<u32> {
        let m = self.m();
        (1..=m)
            .map(|k| self.sigma.iter().filter(|&&s| s + 1 <= k).count() as u32)
            .collect()
    }

    /// Taut-determinant exponents of the polarization along the quasimap for
    /// the NS5 gaps: p_k = d_{k-1} - d_{k+1} (1-based k = 1..m-1).
    pub fn p_exponents(&self) -> Vec<i64> {
        let m = self.m();
        let d = self.gap_dims();
        let n = self.n_slots() as i64;
        let dim = |k: i64| -> i64 {
            if k <= 0 {
                0
            } else if (k as usize) <= m {
                d[k as usize - 1] as i64
            } else {
                // weight-one D5 block: d_{m+t} = n - t
                n - (k - m as i64)
            }
        };
        (1..m as i64).map(|k| dim(k - 1) - dim(k + 1)).collect()
    }
}

/// Evaluation context shared by the engines.
pub struct VertexCtx<'a> {
    pub params: &'a ParameterPoint,
    pub mode: Mode,
    /// Output roster; q-part has one variable per NS5 gap of the *output*
    /// diagram, u-part one variable per consecutive chamber ratio.
    pub roster: Roster,
    pub trunc: Truncation,
    /// Chamber over the original a-indices (expansion mode).
    pub chamber: Option<Chamber>,
    /// Maps the working-diagram gap l (0-based, l = 0..m-2) to the q-variable
    /// index in the roster.
    pub gap_var: Vec<usize>,
}

impl<'a> VertexCtx<'a> {
    /// Standard context for a separated problem computed in its own variables.
    pub fn for_separated(
        problem: &SeparatedW1,
        params: &'a ParameterPoint,
        mode: Mode,
        trunc: Truncation,
        chamber: Option<Chamber>,
    ) -> VertexCtx<'a> {
        let m = problem.m();
        let n_u = match mode {
            Mode::Numeric => 0,
            Mode::Expansion => {
                chamber.as_ref().map(|c| c.order.len().saturating_sub(1)).unwrap_or(0)
            }
        };
        let roster = Roster::new(
            (1..m).map(|i| format!("Q{i}")).collect(),
            (1..=n_u).map(|j| format!("u{j}")).collect(),
        );
        VertexCtx {
            params,
            mode,
            roster,
            trunc,
            chamber,
            gap_var: (0..m.saturating_sub(1)).collect(),
        }
    }

    fn n_q(&self) -> usize {
        self.roster.q_vars.len()
    }

    fn n_u(&self) -> usize {
        self.roster.u_vars.len()
    }

    /// Scalar part and u-exponents of a monomial. Exponents may be of either
    /// sign; totally mixed signs are possible and are handled by the factor
    /// expansion.
    fn mono_term(&self, m: &Monomial) -> Result<(Scalar, Vec<i64>)> {
        match self.mode {
            Mode::Numeric => Ok((m.eval(self.params)?, vec![0; self.n_u()])),
            Mode::Expansion => {
                let chamber = self
                    .chamber
                    .as_ref()
                    .ok_or_else(|| BowError::Domain("expansion mode needs a chamber".into()))?;
                let (a_part, rest) = m.split_a();
                let coeff = rest.eval(self.params)?;
                let n = chamber.order.len();
                let mut e = vec![0i64; n];
                for (i, k) in a_part.a_exps() {
                    if i >= n {
                        return Err(BowError::Domain(format!(
                            "monomial references a_{} outside the chamber",
                            i + 1
                        )));
                    }
                    e[i] = k;
                }
                if e.iter().sum::<i64>() != 0 {
                    return Err(BowError::Domain(format!(
                        "a-part of {m} is not a ratio (nonzero total degree)"
                    )));
                }
                // u_t = a_{ord(t)} / a_{ord(t+1)}; exponent of u_t is the
                // partial sum of e along the chamber order
                let mut exps = vec![0i64; self.n_u()];
                let mut acc = 0i64;
                for t in 0..n.saturating_sub(1) {
                    acc += e[chamber.order[t]];
                    exps[t] = acc;
                }
                Ok((coeff, exps))
            }
        }
    }

    fn full_exps(&self, q_exps: &[i64], u_exps: &[i64]) -> Vec<i64> {
        let mut e = vec![0i64; self.roster.len()];
        e[..self.n_q()].copy_from_slice(q_exps);
        e[self.n_q()..].copy_from_slice(u_exps);
        e
    }

}

/// One multiplicative factor of a localization term: the finite Pochhammer
/// (x)_t, kept in the numerator (invert = false) or denominator.
#[derive(Clone, Debug)]
struct PochFactor {
    x: Monomial,
    t: i64,
    invert: bool,
}

/// A localization term under assembly: scalar coefficient, Kahler exponents,
/// and the list of Pochhammer factors.
struct TermBuilder {
    coeff: Scalar,
    q_exps: Vec<i64>,
    factors: Vec<PochFactor>,
}

impl TermBuilder {
    fn new(n_q: usize) -> TermBuilder {
        TermBuilder { coeff: Scalar::rat_int(1), q_exps: vec![0; n_q], factors: vec![] }
    }

    fn poch(&mut self, x: Monomial, t: i64, invert: bool) {
        if t != 0 {
            self.factors.push(PochFactor { x, t, invert });
        }
    }

    fn scale(&mut self, c: Scalar) {
        self.coeff = self.coeff.mul(&c);
    }

    /// Expand the term. Chamber-large factors are rewritten through
    /// (1 - X) = -X (1 - X^{-1}); the monomial parts accumulate into a single
    /// net shift so the chamber-small product only needs that much headroom.
    fn eval(self, ctx: &VertexCtx) -> Result<TruncatedSeries> {
        if self.coeff.is_zero() {
            return Ok(TruncatedSeries::zero(ctx.roster.clone(), ctx.trunc));
        }
        // elements (1 - x q^s)^{pow}; descriptors (coeff, u-exps, invert)
        let mut coeff = self.coeff.clone();
        let mut shift = ctx.full_exps(&self.q_exps, &vec![0; ctx.n_u()]);
        let mut small: Vec<(Scalar, Vec<i64>, bool)> = vec![];
        for f in &self.factors {
            let elements: Vec<(Monomial, bool)> = if f.t >= 0 {
                (0..f.t).map(|s| (f.x.mul(&Monomial::q_pow(s)), f.invert)).collect()
            } else {
                (1..=(-f.t)).map(|s| (f.x.mul(&Monomial::q_pow(-s)), !f.invert)).collect()
            };
            for (arg, invert) in elements {
                let (c, e) = ctx.mono_term(&arg)?;
                let has_pos = e.iter().any(|&v| v > 0);
                let has_neg = e.iter().any(|&v| v < 0);
                if has_pos && has_neg {
                    return Err(BowError::Domain(format!(
                        "factor (1 - {arg}) has mixed chamber signs; no valid expansion"
                    )));
                }
                if !has_neg {
                    small.push((c, e, invert));
                    continue;
                }
                // (1 - c u^e)^{p} = (-c u^e)^{p} (1 - c^{-1} u^{-e})^{p}
                let cinv = c.inv().map_err(|_| {
                    BowError::DivisionByZero(format!(
                        "factor (1 - {arg}) with vanishing coefficient"
                    ))
                })?;
                let inv_e: Vec<i64> = e.iter().map(|v| -v).collect();
                if invert {
                    coeff = coeff.mul(&cinv.neg());
                    for (s, v) in shift[ctx.n_q()..].iter_mut().zip(&inv_e) {
                        *s += v;
                    }
                } else {
                    coeff = coeff.mul(&c.neg());
                    for (s, v) in shift[ctx.n_q()..].iter_mut().zip(&e) {
                        *s += v;
                    }
                }
                small.push((cinv, inv_e, invert));
            }
        }
        let net_neg: i64 = shift.iter().map(|&v| (-v).max(0)).sum();
        let working =
            Truncation::new(ctx.trunc.q_order, ctx.trunc.u_order + net_neg as u32);
        let mut term =
            TruncatedSeries::monomial_term(ctx.roster.clone(), working, shift, coeff);
        for (c, e, invert) in small {
            if term.terms.is_empty() {
                break;
            }
            let exps = ctx.full_exps(&vec![0; ctx.n_q()], &e);
            let factor =
                crate::series::expand_rational_factor(&ctx.roster, working, &c, &exps, invert)?;
            term = term.mul(&factor)?;
        }
        Ok(term.truncate(ctx.trunc))
    }
}

/// Provenance record attached to every computed vertex series.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Provenance {
    pub diagram: String,
    pub fixed_point: Vec<Vec<u8>>,
    pub engine: String,
    pub polarization: String,
    pub q_order: u32,
    pub u_order: u32,
    pub mode: Mode,
}

#[derive(Clone, Debug)]
pub struct VertexResult {
    pub series: TruncatedSeries,
    pub provenance: Provenance,
}

impl VertexResult {
    fn check_unit_constant(&self) -> Result<()> {
        if !self.series.constant_term().is_one() {
            return Err(BowError::Consistency("vertex series constant term is not 1".into()));
        }
        for (e, _) in &self.series.terms {
            if e.iter().any(|&v| v < 0) {
                return Err(BowError::Consistency(
                    "vertex series has a leftover negative exponent".into(),
                ));
            }
        }
        Ok(())
    }
}

/// theta value with out-of-range indices treated as 0. `k` is a 0-based gap.
fn theta_at(problem: &SeparatedW1, theta: &[Vec<u32>], i: usize, k: i64) -> i64 {
    let m = problem.m() as i64;
    if k < problem.sigma[i] as i64 || k >= m - 1 {
        return 0;
    }
    theta[i][(k as usize) - problem.sigma[i]] as i64
}

/// Enumerate the theta data of the refined formula: theta[i][k - sigma(i)] for
/// 0-based gaps k in sigma(i)..m-2, with weighted total Q-degree <= q_order.
fn enumerate_theta(
    problem: &SeparatedW1,
    q_order: u32,
    visit: &mut dyn FnMut(&[Vec<u32>]) -> Result<()>,
) -> Result<()> {
    let m = problem.m();
    let n = problem.n_slots();
    let mut positions: Vec<(usize, usize, u32)> = vec![];
    for i in 0..n {
        for k in problem.sigma[i]..m.saturating_sub(1) {
            positions.push((i, k - problem.sigma[i], (k - problem.sigma[i] + 1) as u32));
        }
    }
    let mut theta: Vec<Vec<u32>> = (0..n)
        .map(|i| vec![0u32; (m - 1).saturating_sub(problem.sigma[i])])
        .collect();
    fn rec(
        idx: usize,
        budget: u32,
        positions: &[(usize, usize, u32)],
        theta: &mut Vec<Vec<u32>>,
        visit: &mut dyn FnMut(&[Vec<u32>]) -> Result<()>,
    ) -> Result<()> {
        if idx == positions.len() {
            return visit(theta);
        }
        let (i, off, cost) = positions[idx];
        let kmax = budget / cost;
        for v in 0..=kmax {
            theta[i][off] = v;
            rec(idx + 1, budget - v * cost, positions, theta, visit)?;
        }
        theta[i][off] = 0;
        Ok(())
    }
    rec(0, q_order, &positions, &mut theta, visit)
}

/// Refined weight-one flag formula for the vertex function.
pub fn vertex_flag_engine(problem: &SeparatedW1, ctx: &VertexCtx) -> Result<TruncatedSeries> {
    let m = problem.m();
    let n = problem.n_slots();
    let p = ctx.params;
    let q = p.q();
    let hbar = p.hbar();
    let qh = q.mul(&hbar);
    let w = &problem.ns5_weights;
    // gap coefficient (-q hbar^(1/2))^{-w_l - w_{l+1}} (0-based gap l)
    let gap_coeff: Vec<Scalar> = (0..m.saturating_sub(1))
        .map(|l| {
            let e = -((w[l] + w[l + 1]) as i64);
            Monomial::neg_hbar_sqrt_pow(e).mul(&Monomial::q_pow(e)).eval(p)
        })
        .collect::<Result<_>>()?;

    let mut total = TruncatedSeries::zero(ctx.roster.clone(), ctx.trunc);
    enumerate_theta(problem, ctx.trunc.q_order, &mut |theta| {
        let mut term = TermBuilder::new(ctx.n_q());
        // F1: Kahler monomials, F2: self factors
        for i in 0..n {
            for k in problem.sigma[i]..m - 1 {
                let t = theta[i][k - problem.sigma[i]] as i64;
                if t == 0 {
                    continue;
                }
                for l in problem.sigma[i]..=k {
                    term.q_exps[ctx.gap_var[l]] += t;
                    term.scale(gap_coeff[l].pow_i64(t)?);
                }
                let num = crate::scalar::pochhammer(&hbar.inv()?, t, p)?;
                let den = crate::scalar::pochhammer(&q, t, p)?;
                term.scale(num.div(&den)?.mul(&qh.pow_i64(t)?));
            }
        }
        // F3: pairs with sigma(i) < sigma(j); F4: sigma(i) = sigma(j), i < j
        for i in 0..n {
            for j in 0..n {
                let ratio = problem.slots[i].mul(&problem.slots[j].inv());
                if problem.sigma[i] < problem.sigma[j] {
                    // 1-based k runs sigma(j)+1 ..= m
                    for k1 in (problem.sigma[j] + 1)..=m {
                        let k = k1 as i64;
                        let th_i_km1 = theta_at(problem, theta, i, k - 2);
                        let th_i_k = theta_at(problem, theta, i, k - 1);
                        let th_j_k = theta_at(problem, theta, j, k - 1);
                        let s_k: i64 = ((k - 1)..(m as i64))
                            .map(|l| theta_at(problem, theta, i, l) - theta_at(problem, theta, j, l))
                            .sum();
                        let s_gt: i64 = (k..(m as i64))
                            .map(|l| theta_at(problem, theta, i, l) - theta_at(problem, theta, j, l))
                            .sum();
                        if th_i_km1 != 0 {
                            let base = ratio.mul(&Monomial::q_pow(s_k));
                            term.poch(base.mul(&Monomial::hbar_pow(-1)), th_i_km1, false);
                            term.poch(base.mul(&Monomial::q_pow(1)), th_i_km1, true);
                            term.scale(qh.pow_i64(th_i_km1)?);
                        }
                        if th_i_k != 0 {
                            let base = ratio.mul(&Monomial::q_pow(-th_j_k + s_gt));
                            term.poch(
                                base.mul(&Monomial::q_pow(1)).mul(&Monomial::hbar_pow(1)),
                                th_i_k,
                                false,
                            );
                            term.poch(base, th_i_k, true);
                        }
                    }
                } else if problem.sigma[i] == problem.sigma[j] && i < j {
                    // raw pair product, telescoped: an overall
                    // (q hbar Y)_{S_s} / (Y)_{S_s} with S_s the full theta
                    // difference, then per-gap factors indexed by theta^j
                    let s_full: i64 = (problem.sigma[j] as i64..(m as i64))
                        .map(|l| theta_at(problem, theta, i, l) - theta_at(problem, theta, j, l))
                        .sum();
                    if s_full != 0 {
                        term.poch(ratio.mul(&Monomial::q_pow(1)).mul(&Monomial::hbar_pow(1)), s_full, false);
                        term.poch(ratio.clone(), s_full, true);
                    }
                    for k1 in (problem.sigma[j] + 1)..=(m - 1) {
                        let k = k1 as i64;
                        let th_j_k = theta_at(problem, theta, j, k - 1);
                        let s_k: i64 = ((k - 1)..(m as i64))
                            .map(|l| theta_at(problem, theta, i, l) - theta_at(problem, theta, j, l))
                            .sum();
                        let s_gt: i64 = (k..(m as i64))
                            .map(|l| theta_at(problem, theta, i, l) - theta_at(problem, theta, j, l))
                            .sum();
                        if th_j_k != 0 {
                            let base = ratio.mul(&Monomial::q_pow(s_k));
                            term.poch(base.mul(&Monomial::hbar_pow(-1)), th_j_k, false);
                            term.poch(base.mul(&Monomial::q_pow(1)), th_j_k, true);
                            term.scale(qh.pow_i64(th_j_k)?);
                            let base2 = ratio.mul(&Monomial::q_pow(s_gt - th_j_k));
                            term.poch(
                                base2.mul(&Monomial::q_pow(1)).mul(&Monomial::hbar_pow(1)),
                                th_j_k,
                                false,
                            );
                            term.poch(base2, th_j_k, true);
                        }
                    }
                }
            }
        }
        total = total.add(&term.eval(ctx)?)?;
        Ok(())
    })?;
    Ok(total)
}

/// The chain-butterfly localization sum: the general reverse-plane-partition
/// formula specialized to weight-one separated diagrams, where butterflies are
/// chains. Independent of the refined engine.
pub fn vertex_rpp_engine(problem: &SeparatedW1, ctx: &VertexCtx) -> Result<TruncatedSeries> {
    let m = problem.m();
    let n = problem.n_slots();
    // chain i occupies 1-based columns sigma(i)+1 ..= m; pi vanishes at col m
    let col_lo = |i: usize| problem.sigma[i] + 1;
    let weight =
        |i: usize, col: usize| problem.slots[i].mul(&Monomial::hbar_pow(col as i64 - m as i64));

    let mut chains: Vec<Vec<u32>> = (0..n)
        .map(|i| vec![0u32; (m - 1).saturating_sub(problem.sigma[i])])
        .collect();
    let mut total = TruncatedSeries::zero(ctx.roster.clone(), ctx.trunc);

    // enumerate non-increasing chains with total sum <= q_order
    fn enumerate(
        i: usize,
        j: usize,
        budget: u32,
        cap: u32,
        chains: &mut Vec<Vec<u32>>,
        visit: &mut dyn FnMut(&[Vec<u32>]) -> Result<()>,
    ) -> Result<()> {
        if i == chains.len() {
            return visit(chains);
        }
        if j == chains[i].len() {
            return enumerate(i + 1, 0, budget, u32::MAX, chains, visit);
        }
        let hi = cap.min(budget);
        for v in 0..=hi {
            chains[i][j] = v;
            enumerate(i, j + 1, budget - v, v, chains, visit)?;
        }
        chains[i][j] = 0;
        Ok(())
    }

    enumerate(0, 0, ctx.trunc.q_order, u32::MAX, &mut chains, &mut |chains| {
        let pi = |i: usize, col: usize| -> i64 {
            // 1-based column
            if col < col_lo(i) || col >= m {
                return 0;
            }
            chains[i][col - col_lo(i)] as i64
        };
        let in_range = |i: usize, col: usize| col >= col_lo(i) && col <= m;
        let mut term = TermBuilder::new(ctx.n_q());
        let mut n_pi = 0i64;
        for (i, ch) in chains.iter().enumerate() {
            for (off, &v) in ch.iter().enumerate() {
                let col = col_lo(i) + off; // 1-based gap column
                term.q_exps[ctx.gap_var[col - 1]] += v as i64;
            }
        }
        for col in 1..m {
            for i in 0..n {
                if !in_range(i, col) {
                    continue;
                }
                for j in 0..n {
                    if !in_range(j, col + 1) {
                        continue;
                    }
                    n_pi += pi(j, col + 1) - pi(i, col);
                }
            }
        }
        // prefactor (-q hbar^(1/2))^{N(pi)}: equal to the symmetrized
        // (-q hbar)^{N/2} q^{deg P/2} for this polarization, with the
        // half-integer sign resolved by the worked closed forms
        term.scale(Monomial::neg_hbar_sqrt_pow(n_pi).mul(&Monomial::q_pow(n_pi)).eval(ctx.params)?);
        // adjacent-column pairs
        for col in 1..m {
            for i in 0..n {
                if !in_range(i, col) {
                    continue;
                }
                for j in 0..n {
                    if !in_range(j, col + 1) {
                        continue;
                    }
                    let d = pi(j, col + 1) - pi(i, col);
                    if d == 0 {
                        continue;
                    }
                    let ratio = weight(j, col + 1).mul(&weight(i, col).inv());
                    term.poch(ratio.mul(&Monomial::hbar_pow(-1)), d, false);
                    term.poch(ratio.mul(&Monomial::q_pow(1)), d, true);
                }
            }
        }
        // same-column pairs
        for col in 1..m {
            for i in 0..n {
                if !in_range(i, col) {
                    continue;
                }
                for j in 0..n {
                    if i == j || !in_range(j, col) {
                        continue;
                    }
                    let d = pi(j, col) - pi(i, col);
                    if d == 0 {
                        continue;
                    }
                    let ratio = weight(j, col).mul(&weight(i, col).inv());
                    term.poch(ratio.mul(&Monomial::q_pow(1)), d, false);
                    term.poch(ratio.mul(&Monomial::hbar_pow(-1)), d, true);
                }
            }
        }
        total = total.add(&term.eval(ctx)?)?;
        Ok(())
    })?;
    Ok(total)
}

/// Build the weight-one problem directly from a separated diagram.
pub fn w1_problem(d: &BraneDiagram, f: &FixedPoint) -> Result<SeparatedW1> {
    if !d.is_separated() {
        return Err(BowError::Domain("diagram is not separated".into()));
    }
    if d.d5_weights().iter().any(|&w| w != 1) {
        return Err(BowError::Domain(
            "diagram has a D5 brane of weight >= 2; resolve first".into(),
        ));
    }
    let sigma = f.sigma()?;
    let slots = (0..d.n_d5()).map(Monomial::a).collect();
    Ok(SeparatedW1 { ns5_weights: d.ns5_weights(), sigma, slots })
}

/// Maximal D5 resolution of a separated diagram at a fixed point: each weight-w
/// brane becomes a chain of w weight-one slots with equivariant values
/// (a hbar^{-(w-1)}, ..., a hbar^{-1}, a); the distinguished resolution assigns
/// the ties with no two new ties crossing (leftmost slot takes the largest row).
pub fn resolve_problem_separated(d: &BraneDiagram, f: &FixedPoint) -> Result<SeparatedW1> {
    if !d.is_separated() {
        return Err(BowError::Domain(
            "resolve_problem_separated needs a separated diagram".into(),
        ));
    }
    let weights = d.d5_weights();
    let (_, c) = d.charges();
    let mut sigma = vec![];
    let mut slots = vec![];
    for (j, &w) in weights.iter().enumerate() {
        let mut rows: Vec<usize> = (0..f.rows()).filter(|&i| f.entry(i, j) == 1).collect();
        if rows.len() as i64 != c[j] {
            return Err(BowError::Consistency(
                "fixed point margins disagree with charges".into(),
            ));
        }
        if rows.len() != w as usize {
            return Err(BowError::Domain(format!(
                "separated column {} has {} ties but weight {}",
                j + 1,
                rows.len(),
                w
            )));
        }
        rows.sort_unstable();
        rows.reverse();
        for (t, &row) in rows.iter().enumerate() {
            // slot t (left to right) carries a_j hbar^{-(w-1-t)}
            sigma.push(row);
            slots.push(Monomial::a(j).mul(&Monomial::hbar_pow(-(w as i64 - 1 - t as i64))));
        }
    }
    Ok(SeparatedW1 { ns5_weights: d.ns5_weights(), sigma, slots })
}

/// Chamber on the original a-indices attached to a resolved problem, refining
/// the sigma-order of the slots: a_i before a_j when the sorted sigma list of
/// the slots of a_i precedes that of a_j (ties by index). For weight-one
/// diagrams this is the canonical C_f.
pub fn chamber_for_problem(problem: &SeparatedW1, n_orig: usize) -> Chamber {
    let mut keys: Vec<(Vec<usize>, usize)> = (0..n_orig)
        .map(|i| {
            let mut ks: Vec<usize> = problem
                .slots
                .iter()
                .zip(&problem.sigma)
                .filter(|(s, _)| s.exp(Symbol::A(i)) != 0)
                .map(|(_, &sg)| sg)
                .collect();
            ks.sort_unstable();
            (ks, i)
        })
        .collect();
    keys.sort();
    Chamber { order: keys.into_iter().map(|(_, i)| i).collect() }
}

fn provenance(
    d: &BraneDiagram,
    f: &FixedPoint,
    engine: &str,
    polarization: &str,
    trunc: Truncation,
    mode: Mode,
) -> Provenance {
    Provenance {
        diagram: d.render(),
        fixed_point: f.bct.clone(),
        engine: engine.to_string(),
        polarization: polarization.to_string(),
        q_order: trunc.q_order,
        u_order: trunc.u_order,
        mode,
    }
}

/// Localization sum over stable reverse plane partitions (weight-one separated).
pub fn vertex_rpp(
    d: &BraneDiagram,
    f: &FixedPoint,
    params: &ParameterPoint,
    mode: Mode,
    trunc: Truncation,
) -> Result<VertexResult> {
    let problem = w1_problem(d, f)?;
    let chamber = match mode {
        Mode::Numeric => None,
        Mode::Expansion => Some(Chamber::from_sigma(&problem.sigma)),
    };
    let ctx = VertexCtx::for_separated(&problem, params, mode, trunc, chamber);
    let series = vertex_rpp_engine(&problem, &ctx)?;
    let out = VertexResult {
        series,
        provenance: provenance(d, f, "rpp", "hbar(alpha+beta)^dual", trunc, mode),
    };
    out.check_unit_constant()?;
    Ok(out)
}

/// Refined flag formula (weight-one separated).
pub fn vertex_flag(
    d: &BraneDiagram,
    f: &FixedPoint,
    params: &ParameterPoint,
    mode: Mode,
    trunc: Truncation,
) -> Result<VertexResult> {
    let problem = w1_problem(d, f)?;
    let chamber = match mode {
        Mode::Numeric => None,
        Mode::Expansion => Some(Chamber::from_sigma(&problem.sigma)),
    };
    let ctx = VertexCtx::for_separated(&problem, params, mode, trunc, chamber);
    let series = vertex_flag_engine(&problem, &ctx)?;
    let out = VertexResult {
        series,
        provenance: provenance(d, f, "flag", "hbar(alpha+beta)^dual", trunc, mode),
    };
    out.check_unit_constant()?;
    Ok(out)
}

/// General separated diagrams: fully resolve every weight >= 2 D5 brane, take
/// the distinguished resolution of the fixed point, compute with the flag
/// engine, and read the result through the phi* chain substitution.
pub fn vertex_general(
    d: &BraneDiagram,
    f: &FixedPoint,
    params: &ParameterPoint,
    mode: Mode,
    trunc: Truncation,
) -> Result<VertexResult> {
    if !d.is_separated() {
        return Err(BowError::Domain("vertex_general needs a separated diagram".into()));
    }
    let problem = resolve_problem_separated(d, f)?;
    let chamber = match mode {
        Mode::Numeric => None,
        Mode::Expansion => Some(chamber_for_problem(&problem, d.n_d5())),
    };
    let ctx = VertexCtx::for_separated(&problem, params, mode, trunc, chamber);
    let series = vertex_flag_engine(&problem, &ctx)?;
    let out = VertexResult {
        series,
        provenance: provenance(d, f, "resolved-flag", "hbar(alpha+beta)^dual", trunc, mode),
    };
    out.check_unit_constant()?;
    Ok(out)
}

/// Data of the co-separated dictionary: the separated problem plus the chamber.
pub struct CosepDictionary {
    pub problem: SeparatedW1,
    pub chamber: Chamber,
}

/// Build the dictionary problem for a co-separated diagram at a fixed point.
///
/// D5 branes of weight w resolve into chains with values (a, a hbar, ...,
/// a hbar^{w-1}); the zeros of the column distribute one per resolved slot.
/// The dictionary problem has reversed NS5 weights and sigma'(slot) =
/// m - 1 - zero_row(slot).
pub fn cosep_dictionary(d: &BraneDiagram, f: &FixedPoint) -> Result<CosepDictionary> {
    if !d.is_coseparated() {
        return Err(BowError::Domain("cosep_dictionary needs a co-separated diagram".into()));
    }
    let m = d.n_ns5();
    let weights = d.d5_weights();
    let (_, c) = d.charges();
    let mut sigma = vec![];
    let mut slots = vec![];
    for (j, &w) in weights.iter().enumerate() {
        let mut zero_rows: Vec<usize> = (0..f.rows()).filter(|&i| f.entry(i, j) == 0).collect();
        let ties = (f.rows() - zero_rows.len()) as i64;
        if ties != c[j] {
            return Err(BowError::Consistency(
                "fixed point margins disagree with charges".into(),
            ));
        }
        if zero_rows.len() != w as usize {
            return Err(BowError::Domain(format!(
                "co-separated column {} has {} zeros but weight {}",
                j + 1,
                zero_rows.len(),
                w
            )));
        }
        // distinguished co-separated resolution: leftmost slot takes the
        // smallest zero-row, so the dictionary sigma' decreases along the
        // chain like the separated distinguished resolution
        zero_rows.sort_unstable();
        for (t, &row) in zero_rows.iter().enumerate() {
            sigma.push(m - 1 - row);
            slots.push(Monomial::a(j).mul(&Monomial::hbar_pow(t as i64)));
        }
    }
    let mut rev_weights = d.ns5_weights();
    rev_weights.reverse();
    let problem = SeparatedW1 { ns5_weights: rev_weights, sigma, slots };
    let chamber = chamber_for_problem(&problem, d.n_d5());
    Ok(CosepDictionary { problem, chamber })
}

/// Vertex function of a co-separated diagram (polarization alpha + beta), via
/// the separated dictionary plus the calibrated polarization shift q^{beta_k}.
pub fn vertex_coseparated(
    d: &BraneDiagram,
    f: &FixedPoint,
    params: &ParameterPoint,
    mode: Mode,
    trunc: Truncation,
    pol_shift: &[i64],
) -> Result<VertexResult> {
    let dict = cosep_dictionary(d, f)?;
    let m = d.n_ns5();
    let chamber = match mode {
        Mode::Numeric => None,
        Mode::Expansion => Some(dict.chamber.clone()),
    };
    let n_u = match mode {
        Mode::Numeric => 0,
        Mode::Expansion => d.n_d5().saturating_sub(1),
    };
    // output roster: Q-variables of the co-separated diagram in their own order
    let roster = Roster::new(
        (1..m).map(|i| format!("Q{i}")).collect(),
        (1..=n_u).map(|j| format!("u{j}")).collect(),
    );
    // dictionary gap l (0-based) maps to co-separated gap m-2-l
    let gap_var: Vec<usize> = (0..m.saturating_sub(1)).map(|l| m - 2 - l).collect();
    let ctx = VertexCtx { params, mode, roster, trunc, chamber, gap_var };
    let series = vertex_flag_engine(&dict.problem, &ctx)?;
    let series = shift_q(&series, params, pol_shift)?;
    let out = VertexResult {
        series,
        provenance: provenance(d, f, "cosep-dictionary", "alpha+beta", trunc, mode),
    };
    out.check_unit_constant()?;
    Ok(out)
}

/// Apply Q_k -> q^{e_k} Q_k.
pub fn shift_q(
    s: &TruncatedSeries,
    params: &ParameterPoint,
    exps: &[i64],
) -> Result<TruncatedSeries> {
    if exps.iter().all(|&e| e == 0) {
        return Ok(s.clone());
    }
    let n = s.roster.len();
    let nq = s.roster.q_vars.len();
    let mut targets = vec![];
    for i in 0..n {
        let mut e = vec![0i64; n];
        e[i] = 1;
        let coeff =
            if i < nq { params.q().pow_i64(exps[i])? } else { Scalar::rat_int(1) };
        targets.push(SubTarget { coeff, exps: e });
    }
    SubstitutionMap {
        source: s.roster.clone(),
        target: s.roster.clone(),
        targets,
        allow_constant: false,
    }
    .apply(s)
}

/// Apply the MSver normalization shift Q_i -> Q_i (-hbar^(1/2))^{w_i - w_{i+1}}.
pub fn msver_shift(
    s: &TruncatedSeries,
    params: &ParameterPoint,
    ns5_weights: &[u32],
) -> Result<TruncatedSeries> {
    let n = s.roster.len();
    let nq = s.roster.q_vars.len();
    debug_assert_eq!(nq + 1, ns5_weights.len());
    let mut targets = vec![];
    for i in 0..n {
        let mut e = vec![0i64; n];
        e[i] = 1;
        let coeff = if i < nq {
            let d = ns5_weights[i] as i64 - ns5_weights[i + 1] as i64;
            Monomial::neg_hbar_sqrt_pow(d).eval(params)?
        } else {
            Scalar::rat_int(1)
        };
        targets.push(SubTarget { coeff, exps: e });
    }
    SubstitutionMap {
        source: s.roster.clone(),
        target: s.roster.clone(),
        targets,
        allow_constant: false,
    }
    .apply(s)
}

/// The normalized vertex entering every mirror statement.
pub fn msver(
    d: &BraneDiagram,
    f: &FixedPoint,
    params: &ParameterPoint,
    mode: Mode,
    trunc: Truncation,
) -> Result<VertexResult> {
    let (base, engine) = if d.is_separated() {
        (vertex_general(d, f, params, mode, trunc)?, "msver/separated")
    } else if d.is_coseparated() {
        (
            vertex_coseparated(d, f, params, mode, trunc, &vec![0; d.n_ns5() - 1])?,
            "msver/cosep",
        )
    } else {
        return Err(BowError::Domain(
            "msver needs a separated or co-separated diagram; apply HW moves first".into(),
        ));
    };
    let shifted = msver_shift(&base.series, params, &d.ns5_weights())?;
    Ok(VertexResult {
        series: shifted,
        provenance: Provenance { engine: engine.into(), ..base.provenance },
    })
}

/// A formal product of Phi factors Phi(coeff * X^exps)^{power}.
#[derive(Clone, Debug, Default)]
pub struct PhiProduct {
    pub factors: Vec<(Scalar, Vec<i64>, i32)>,
}

impl PhiProduct {
    /// Expand using Euler's expansions Phi(x) = sum (-1)^k q^{k(k-1)/2} x^k/(q)_k
    /// and 1/Phi(x) = sum x^k/(q)_k. Exponent vectors are over the full roster.
    pub fn expand(
        &self,
        roster: &Roster,
        trunc: Truncation,
        params: &ParameterPoint,
    ) -> Result<TruncatedSeries> {
        let q = params.q();
        let mut out = TruncatedSeries::one(roster.clone(), trunc);
        for (c, exps, power) in &self.factors {
            let total: i64 = exps.iter().sum();
            if total <= 0 {
                return Err(BowError::Domain(
                    "PhiProduct factor needs a positive-degree argument".into(),
                ));
            }
            let kmax = ((trunc.q_order + trunc.u_order) as i64) / total;
            let mut factor = TruncatedSeries::zero(roster.clone(), trunc);
            let mut poch_q = Scalar::rat_int(1);
            let mut cpow = Scalar::rat_int(1);
            for k in 0..=kmax {
                if k > 0 {
                    poch_q = poch_q.mul(&Scalar::rat_int(1).sub(&q.pow_i64(k)?));
                    cpow = cpow.mul(c);
                }
                let coeff = if *power > 0 {
                    let sgn = if k % 2 == 0 { Scalar::rat_int(1) } else { Scalar::rat_int(-1) };
                    sgn.mul(&q.pow_i64(k * (k - 1) / 2)?).div(&poch_q)?
                } else {
                    Scalar::rat_int(1).div(&poch_q)?
                };
                let e: Vec<i64> = exps.iter().map(|x| x * k).collect();
                factor.insert(e, coeff.mul(&cpow));
            }
            for _ in 0..power.unsigned_abs() {
                out = out.mul(&factor)?;
            }
        }
        Ok(out)
    }
}

/// flaglim^X(Q): the a -> 0 limit of the plain vertex of a weight-one separated
/// diagram, as a Phi-ratio product in positive Q-monomials (exponents in the
/// gap variables only).
pub fn flaglim_product(ns5_weights: &[u32], params: &ParameterPoint) -> Result<PhiProduct> {
    let m = ns5_weights.len();
    let mut factors = vec![];
    let qh = params.q().mul(&params.hbar());
    for i in 1..m {
        for j in 1..=ns5_weights[i - 1] as i64 {
            for k in i..m {
                // B = prod_{i<=l<=k} (q hbar)^{w_{l+1}} (-q hbar^(1/2))^{-w_l-w_{l+1}} Q_l
                let mut coeff = qh.pow_i64(j)?;
                let mut exps = vec![0i64; m - 1];
                for l in i..=k {
                    let e = -((ns5_weights[l - 1] + ns5_weights[l]) as i64);
                    let mono = Monomial::neg_hbar_sqrt_pow(e)
                        .mul(&Monomial::q_pow(e))
                        .mul(&Monomial::hbar_pow(ns5_weights[l] as i64))
                        .mul(&Monomial::q_pow(ns5_weights[l] as i64));
                    coeff = coeff.mul(&mono.eval(params)?);
                    exps[l - 1] += 1;
                }
                factors.push((coeff.mul(&params.hbar().inv()?), exps.clone(), 1));
                factors.push((coeff, exps, -1));
            }
        }
    }
    Ok(PhiProduct { factors })
}

/// MSflaglim^X(Q) = lim_{a->0} MSver^X(Q^{-1}): Phi-ratio product in the formal
/// inverse variables T_l = Q_l^{-1}.
pub fn msflaglim_product(ns5_weights: &[u32], params: &ParameterPoint) -> Result<PhiProduct> {
    let m = ns5_weights.len();
    let mut factors = vec![];
    let qh = params.q().mul(&params.hbar());
    for i in 1..m {
        for j in 1..=ns5_weights[i - 1] as i64 {
            for k in i..m {
                let mut coeff = qh.pow_i64(j)?;
                let mut exps = vec![0i64; m - 1];
                for l in i..=k {
                    coeff = coeff.mul(&params.q().pow_i64(-(ns5_weights[l - 1] as i64))?);
                    exps[l - 1] += 1;
                }
                factors.push((coeff.mul(&params.hbar().inv()?), exps.clone(), 1));
                factors.push((coeff, exps, -1));
            }
        }
    }
    Ok(PhiProduct { factors })
}

/// msflaglim as a series in the inverse-Q variables, optionally verified
/// independent of the fixed point against the u-constant slice of msver.
pub fn msflaglim(
    d: &BraneDiagram,
    params: &ParameterPoint,
    trunc: Truncation,
    verify_against_fixed_points: bool,
) -> Result<TruncatedSeries> {
    if !d.is_separated() || d.d5_weights().iter().any(|&w| w != 1) {
        return Err(BowError::Domain("msflaglim needs a separated weight-one diagram".into()));
    }
    let m = d.n_ns5();
    let roster = Roster::new((1..m).map(|i| format!("Qinv{i}")).collect(), vec![]);
    let product = msflaglim_product(&d.ns5_weights(), params)?;
    let closed = product.expand(&roster, trunc, params)?;
    if verify_against_fixed_points {
        for f in crate::fixed_points::enumerate_fixed_points(d) {
            let ms = msver(d, &f, params, Mode::Expansion, trunc)?;
            let slice = ms.series.u_constant_slice();
            // the series in Q read at Q^{-1} is the same coefficient list in
            // the inverse variables
            let mut renamed = TruncatedSeries::zero(roster.clone(), trunc);
            let nq = ms.series.roster.q_vars.len();
            for (e, c) in &slice.terms {
                renamed.insert(e[..nq].to_vec(), c.clone());
            }
            let cmp = crate::series::series_equal(&renamed, &closed, trunc)?;
            if !cmp.equal {
                return Err(BowError::Consistency(format!(
                    "msflaglim limit differs from the a->0 limit of msver at {:?} \
                     (first difference at {:?})",
                    f.bct, cmp.first_difference
                )));
            }
        }
    }
    Ok(closed)
}

/// Permutation property: V^X_f(a, Q) = V^{sigma X}_{sigma f}(sigma a, Q).
/// Returns the max coefficient difference (0 required).
pub fn permute_check(
    d: &BraneDiagram,
    perm: &[usize],
    f: &FixedPoint,
    params: &ParameterPoint,
    trunc: Truncation,
) -> Result<f64> {
    if !d.is_separated() {
        return Err(BowError::Domain("permute_check needs a separated diagram".into()));
    }
    let n = d.n_d5();
    if perm.len() != n {
        return Err(BowError::Domain("permutation length mismatch".into()));
    }
    let base = vertex_general(d, f, params, Mode::Numeric, trunc)?;
    let mut inv = vec![0usize; n];
    for (i, &p) in perm.iter().enumerate() {
        inv[p] = i;
    }
    let (r, c) = d.charges();
    let new_c: Vec<i64> = (0..n).map(|i| c[inv[i]]).collect();
    let d2 = BraneDiagram::separated_from_charges(&r, &new_c)?;
    let f2 = FixedPoint {
        bct: (0..f.rows())
            .map(|i| (0..n).map(|j| f.entry(i, inv[j])).collect())
            .collect(),
    };
    let params2 = ParameterPoint::new(
        (0..n).map(|i| params.a[inv[i]].clone()).collect(),
        params.hbar_sqrt.clone(),
        params.q_sqrt.clone(),
    )?;
    let permuted = vertex_general(&d2, &f2, &params2, Mode::Numeric, trunc)?;
    let cmp = crate::series::series_equal(&base.series, &permuted.series, trunc)?;
    Ok(cmp.max_abs_difference)
}

/// Calibrate the polarization shift of the co-separated route: the unique
/// integer vector beta with |beta_k| <= bound such that the shifted series
/// satisfies the co-separated Macdonald eigen-equation to order 3.
pub fn calibrate_pol_shift(
    d: &BraneDiagram,
    params: &ParameterPoint,
    bound: i64,
) -> Result<Vec<i64>> {
    if d.is_separated() {
        return Ok(vec![0; d.n_ns5().saturating_sub(1)]);
    }
    if !d.is_coseparated() {
        return Err(BowError::Domain("calibrate_pol_shift needs a co-separated diagram".into()));
    }
    if d.d5_weights().iter().any(|&w| w != 1) {
        return Err(BowError::Domain(
            "calibration uses the weight-one eigen-equation; resolve D5 branes first".into(),
        ));
    }
    let m = d.n_ns5();
    if m < 2 {
        return Ok(vec![]);
    }
    let points = crate::fixed_points::enumerate_fixed_points(d);
    let f = points
        .first()
        .ok_or_else(|| BowError::Domain("no fixed point to calibrate against".into()))?;
    let trunc = Truncation::new(3, 3);
    let mut found: Vec<Vec<i64>> = vec![];
    let mut shift = vec![0i64; m - 1];
    fn rec(
        k: usize,
        bound: i64,
        shift: &mut Vec<i64>,
        d: &BraneDiagram,
        f: &FixedPoint,
        params: &ParameterPoint,
        trunc: Truncation,
        found: &mut Vec<Vec<i64>>,
    ) -> Result<()> {
        if k == shift.len() {
            let v = vertex_coseparated(d, f, params, Mode::Expansion, trunc, shift)?;
            let residual =
                crate::macdonald::eigen_residual_coseparated(d, f, &v.series, params, trunc)?;
            if residual == 0.0 {
                found.push(shift.clone());
            }
            return Ok(());
        }
        for b in -bound..=bound {
            shift[k] = b;
            rec(k + 1, bound, shift, d, f, params, trunc, found)?;
        }
        shift[k] = 0;
        Ok(())
    }
    rec(0, bound, &mut shift, d, f, params, trunc, &mut found)?;
    match found.len() {
        0 => Err(BowError::Calibration(format!(
            "no shift within |beta| <= {bound} satisfies the co-separated eigen-equation"
        ))),
        1 => Ok(found.pop().unwrap()),
        k => Err(BowError::Calibration(format!("{k} shifts satisfy the eigen-equation"))),
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HwShiftReport {
    pub residual: f64,
    pub per_gap_move_counts: Vec<i64>,
    pub per_move_ok: bool,
    pub corcosep_power: i64,
    pub polarization_exponents: Vec<i64>,
}

/// Aggregate HW shift check.
///
/// The co-separated vertex (polarization alpha + beta on both ends of the HW
/// chain) equals the separated one with every gap shifted: the corcosepV
/// aggregate contributes q^{n} per gap and the polarization bookkeeping
/// contributes q^{p_k}, so with the engines' conventions
/// V^{cosep}(Q) = V^{sep}(Q_k q^{-n - p_k}). The per-move law is audited
/// through the replayable move log: each gap is crossed exactly n times.
pub fn hw_aggregate_check(
    d_sep: &BraneDiagram,
    params: &ParameterPoint,
    trunc: Truncation,
) -> Result<HwShiftReport> {
    if !d_sep.is_separated() {
        return Err(BowError::Domain("hw_aggregate_check needs a separated diagram".into()));
    }
    let (r, c) = d_sep.charges();
    let d_cosep = BraneDiagram::coseparated_from_charges(&r, &c)?;
    let n = d_sep.n_d5() as i64;
    let m = d_sep.n_ns5();
    let mut worst = 0.0f64;
    let table = shifted_separated_table(d_sep, params, trunc)?;
    let mut seen: Vec<usize> = vec![];
    for f in crate::fixed_points::enumerate_fixed_points(&d_cosep) {
        let cosep =
            vertex_coseparated(&d_cosep, &f, params, Mode::Numeric, trunc, &vec![0; m - 1])?;
        let mut best: Option<(usize, f64)> = None;
        for (idx, (_, shifted)) in table.iter().enumerate() {
            let cmp = crate::series::series_equal(&cosep.series, shifted, trunc)?;
            let res = if cmp.equal { 0.0 } else { cmp.max_abs_difference };
            if best.map_or(true, |(_, b)| res < b) {
                best = Some((idx, res));
            }
        }
        let (idx, res) = best.ok_or_else(|| BowError::Domain("no separated points".into()))?;
        worst = worst.max(res);
        if seen.contains(&idx) {
            return Err(BowError::Consistency(
                "HW shift pairing is not a bijection on fixed points".into(),
            ));
        }
        seen.push(idx);
    }
    let p_exps = if let Some(f0) = crate::fixed_points::enumerate_fixed_points(d_sep).first() {
        resolve_problem_separated(d_sep, f0)?.p_exponents()
    } else {
        vec![0; m.saturating_sub(1)]
    };
    let (_, log) = d_sep.coseparate()?;
    let mut counts = vec![0i64; m.saturating_sub(1)];
    for mv in &log {
        if let Some(g) = mv.gap_shifted {
            counts[g] += mv.direction as i64;
        }
    }
    let per_move_ok = counts.iter().all(|&x| x == n);
    Ok(HwShiftReport {
        residual: worst,
        per_gap_move_counts: counts,
        per_move_ok,
        corcosep_power: n,
        polarization_exponents: p_exps,
    })
}

/// The separated fixed point paired with a co-separated one along the HW chain,
/// recognized empirically: the unique separated point whose uniformly shifted
/// vertex matches. Returns (partner, residual of the match).
pub fn separated_partner(
    d_sep: &BraneDiagram,
    d_cosep: &BraneDiagram,
    f_cosep: &FixedPoint,
    params: &ParameterPoint,
    trunc: Truncation,
) -> Result<(FixedPoint, f64)> {
    let m = d_sep.n_ns5();
    let n = d_sep.n_d5() as i64;
    let cosep =
        vertex_coseparated(d_cosep, f_cosep, params, Mode::Numeric, trunc, &vec![0; m - 1])?;
    let mut best: Option<(FixedPoint, f64)> = None;
    for f in crate::fixed_points::enumerate_fixed_points(d_sep) {
        let sep = vertex_general(d_sep, &f, params, Mode::Numeric, trunc)?;
        let p_exps = resolve_problem_separated(d_sep, &f)?.p_exponents();
        let shift: Vec<i64> = (0..m - 1).map(|k| -(n + p_exps[k])).collect();
        let shifted = shift_q(&sep.series, params, &shift)?;
        let cmp = crate::series::series_equal(&cosep.series, &shifted, trunc)?;
        let res = if cmp.equal { 0.0 } else { cmp.max_abs_difference };
        if best.as_ref().map_or(true, |(_, b)| res < *b) {
            best = Some((f, res));
        }
    }
    best.ok_or_else(|| BowError::Domain("no separated fixed points".into()))
}

/// All separated vertices shifted by the aggregate law, precomputed once.
fn shifted_separated_table(
    d_sep: &BraneDiagram,
    params: &ParameterPoint,
    trunc: Truncation,
) -> Result<Vec<(FixedPoint, TruncatedSeries)>> {
    let m = d_sep.n_ns5();
    let n = d_sep.n_d5() as i64;
    let mut out = vec![];
    for f in crate::fixed_points::enumerate_fixed_points(d_sep) {
        let sep = vertex_general(d_sep, &f, params, Mode::Numeric, trunc)?;
        let p_exps = resolve_problem_separated(d_sep, &f)?.p_exponents();
        let shift: Vec<i64> = (0..m - 1).map(|k| -(n + p_exps[k])).collect();
        let shifted = shift_q(&sep.series, params, &shift)?;
        out.push((f, shifted));
    }
    Ok(out)
}

#[cfg(test)]
mod calibration_tests {
    use super::*;

    #[test]
    fn calibrate_tp1_and_separated() {
        let params = ParameterPoint::new(
            vec![Scalar::rat(2, 13), Scalar::rat(3, 14)],
            Scalar::rat(1, 2),
            Scalar::rat(1, 3),
        )
        .unwrap();
        // separated input: zero vector
        let d = BraneDiagram::parse("/1/2\\1\\").unwrap();
        assert_eq!(calibrate_pol_shift(&d, &params, 2).unwrap(), vec![0]);
        // co-separated T*P1: the eigen-equation pins the dictionary's own
        // normalization (shift 0); any other shift fails uniqueness
        let dc = BraneDiagram::parse("\\1\\2/1/").unwrap();
        assert_eq!(calibrate_pol_shift(&dc, &params, 2).unwrap(), vec![0]);
    }
}
