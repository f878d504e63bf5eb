//! The first Macdonald difference operator, its gauge transforms, the printed
//! eigenvalues, the eigen-equation verifier, and the uniqueness-recursion
//! solver used as an independent oracle for vertex functions.

use crate::brane::BraneDiagram;
use crate::error::{BowError, Result};
use crate::fixed_points::{
    enumerate_fixed_points, normal_decomposition, tangent_w1_separated, Chamber, FixedPoint,
    WeightCharacter,
};
use crate::scalar::{pochhammer, Monomial, ParameterPoint, Scalar};
use crate::series::{collect_grades, Roster, TruncatedSeries, Truncation};
use crate::vertex::{
    cosep_dictionary, flaglim_product, vertex_coseparated, vertex_flag, Mode, PhiProduct,
    SeparatedW1,
};

/// The combinatorial data of the gauged operator D_f = delta_f^{-1} D_n delta_f:
/// per D5 slot the rational prefactor A_i (stored as an expandable product),
/// the Kahler gauge monomial M_i, and the shift T_{a_i}.
pub struct GaugedOperator {
    pub chamber: Chamber,
    pub roster: Roster,
    /// (a-index, A_i series, M_i scalar coefficient, M_i Kahler exponents)
    pub terms: Vec<(usize, TruncatedSeries, Scalar, Vec<i64>)>,
    pub eigenvalue: TruncatedSeries,
}

/// u-exponents of a monomial with respect to a chamber (partial sums of the
/// a-exponents along the chamber order), plus the scalar part.
fn mono_coeff_uexps(
    params: &ParameterPoint,
    chamber: &Chamber,
    roster: &Roster,
    m: &Monomial,
) -> Result<(Scalar, Vec<i64>)> {
    let (a_part, rest) = m.split_a();
    let coeff = rest.eval(params)?;
    let n = chamber.order.len();
    let mut e = vec![0i64; n];
    for (i, k) in a_part.a_exps() {
        e[i] = k;
    }
    if e.iter().sum::<i64>() != 0 {
        return Err(BowError::Domain(format!("monomial {m} is not an a-ratio")));
    }
    let mut exps = vec![0i64; roster.len()];
    let nq = roster.q_vars.len();
    let mut acc = 0i64;
    for t in 0..n.saturating_sub(1) {
        acc += e[chamber.order[t]];
        exps[nq + t] = acc;
    }
    Ok((coeff, exps))
}

/// Expansion of prod_{j != i} (hbar q a_i - a_j)/(a_i - a_j) in the chamber
/// ratio variables.
fn prefactor_series(
    params: &ParameterPoint,
    chamber: &Chamber,
    roster: &Roster,
    trunc: Truncation,
    i: usize,
) -> Result<TruncatedSeries> {
    let n = chamber.order.len();
    let qh = params.q().mul(&params.hbar());
    let mut out = TruncatedSeries::one(roster.clone(), trunc);
    for j in 0..n {
        if j == i {
            continue;
        }
        let y = Monomial::a(j).mul(&Monomial::a(i).inv());
        let (_, exps) = mono_coeff_uexps(params, chamber, roster, &y)?;
        let small = exps.iter().sum::<i64>() >= 0 && exps.iter().all(|&v| v >= 0);
        if small {
            // (hbar q - y)/(1 - y) = hbar q (1 - y/(hbar q)) / (1 - y)
            let f1 = crate::series::expand_rational_factor(
                roster,
                trunc,
                &qh.inv()?,
                &exps,
                false,
            )?;
            let f2 =
                crate::series::expand_rational_factor(roster, trunc, &Scalar::rat_int(1), &exps, true)?;
            out = out.mul(&f1)?.mul(&f2)?.scalar_mul(&qh);
        } else {
            // (1 - hbar q y^{-1})/(1 - y^{-1}) with y^{-1} chamber-small
            let inv: Vec<i64> = exps.iter().map(|v| -v).collect();
            if inv.iter().any(|&v| v < 0) {
                return Err(BowError::Domain("chamber not generic for the prefactor".into()));
            }
            let f1 = crate::series::expand_rational_factor(roster, trunc, &qh, &inv, false)?;
            let f2 =
                crate::series::expand_rational_factor(roster, trunc, &Scalar::rat_int(1), &inv, true)?;
            out = out.mul(&f1)?.mul(&f2)?;
        }
    }
    Ok(out)
}

/// Pairing exponent of T_{a_i} on a u-monomial.
fn shift_pairing(chamber: &Chamber, roster: &Roster, i: usize, exps: &[i64]) -> i64 {
    let nq = roster.q_vars.len();
    let n = chamber.order.len();
    let mut p = 0i64;
    for t in 0..n.saturating_sub(1) {
        let e = exps[nq + t];
        if e == 0 {
            continue;
        }
        if chamber.order[t] == i {
            p += e;
        }
        if chamber.order[t + 1] == i {
            p -= e;
        }
    }
    p
}

/// Apply T_{a_i} to a series: each u-monomial scales by q^{pairing}.
fn apply_shift(
    s: &TruncatedSeries,
    params: &ParameterPoint,
    chamber: &Chamber,
    i: usize,
) -> Result<TruncatedSeries> {
    let mut out = TruncatedSeries::zero(s.roster.clone(), s.trunc);
    for (e, c) in &s.terms {
        let p = shift_pairing(chamber, &s.roster, i, e);
        out.insert(e.clone(), c.mul(&params.q().pow_i64(p)?));
    }
    Ok(out)
}

/// The dictionary form of the operator data: for a separated diagram this is
/// the fixed point's own sigma and weights; for a co-separated one it is the
/// image under the gap-reversing dictionary.
struct OperatorData {
    problem: SeparatedW1,
    chamber: Chamber,
    gap_var: Vec<usize>,
    n_orig: usize,
}

fn operator_data(d: &BraneDiagram, f: &FixedPoint) -> Result<OperatorData> {
    if d.d5_weights().iter().any(|&w| w != 1) {
        return Err(BowError::Domain(
            "Macdonald machinery needs weight-one D5 branes".into(),
        ));
    }
    let m = d.n_ns5();
    if d.is_separated() {
        let sigma = f.sigma()?;
        let problem = SeparatedW1 {
            ns5_weights: d.ns5_weights(),
            sigma: sigma.clone(),
            slots: (0..d.n_d5()).map(Monomial::a).collect(),
        };
        Ok(OperatorData {
            chamber: Chamber::from_sigma(&sigma),
            problem,
            gap_var: (0..m.saturating_sub(1)).collect(),
            n_orig: d.n_d5(),
        })
    } else if d.is_coseparated() {
        let dict = cosep_dictionary(d, f)?;
        Ok(OperatorData {
            chamber: dict.chamber.clone(),
            problem: dict.problem,
            gap_var: (0..m.saturating_sub(1)).map(|l| m - 2 - l).collect(),
            n_orig: d.n_d5(),
        })
    } else {
        Err(BowError::Domain("diagram must be separated or co-separated".into()))
    }
}

/// The printed eigenvalue e^X(Q) in the diagram's own Kahler variables.
pub fn eigenvalue_e(
    d: &BraneDiagram,
    params: &ParameterPoint,
    roster: &Roster,
    trunc: Truncation,
    ms_shift: bool,
) -> Result<TruncatedSeries> {
    // the dictionary turns the co-separated display into the separated one
    let m = d.n_ns5();
    let (weights, gap_var): (Vec<u32>, Vec<usize>) = if d.is_separated() {
        (d.ns5_weights(), (0..m.saturating_sub(1)).collect())
    } else if d.is_coseparated() {
        let mut w = d.ns5_weights();
        w.reverse();
        (w, (0..m.saturating_sub(1)).map(|l| m - 2 - l).collect())
    } else {
        return Err(BowError::Domain("eigenvalue needs (co)separated input".into()));
    };
    eigenvalue_from_weights(&weights, &gap_var, params, roster, trunc, ms_shift)
}

fn eigenvalue_from_weights(
    weights: &[u32],
    gap_var: &[usize],
    params: &ParameterPoint,
    roster: &Roster,
    trunc: Truncation,
    ms_shift: bool,
) -> Result<TruncatedSeries> {
    let m = weights.len();
    let qh = params.q().mul(&params.hbar());
    let mut out = TruncatedSeries::zero(roster.clone(), trunc);
    for i in 1..=m {
        // (sum_{j=0}^{w_i - 1} (q hbar)^j) (q hbar)^{sum_{k<i} w_k}
        let mut block = Scalar::rat_int(0);
        for j in 0..weights[i - 1] as i64 {
            block = block.add(&qh.pow_i64(j)?);
        }
        let offset: i64 = weights[..i - 1].iter().map(|&w| w as i64).sum();
        let mut coeff = block.mul(&qh.pow_i64(offset)?);
        let mut exps = vec![0i64; roster.len()];
        for l in i..m {
            let e = (weights[l - 1] + weights[l]) as i64;
            let mono = if ms_shift {
                // (-hbar^(1/2))^{w_l + w_{l+1}} Q_l with Q_l already MS-shifted
                // by (-hbar^(1/2))^{w_l - w_{l+1}}: net (-hbar^(1/2))^{2 w_l} = hbar^{w_l}
                Monomial::hbar_pow(weights[l - 1] as i64)
            } else {
                Monomial::neg_hbar_sqrt_pow(e)
            };
            coeff = coeff.mul(&mono.eval(params)?);
            exps[gap_var[l - 1]] += 1;
        }
        let term = TruncatedSeries::monomial_term(roster.clone(), trunc, exps, coeff);
        out = out.add(&term)?;
    }
    Ok(out)
}

/// Build the gauged operator at a fixed point (weight-one D5 branes).
pub fn build_gauged_operator(
    d: &BraneDiagram,
    f: &FixedPoint,
    params: &ParameterPoint,
    roster: &Roster,
    trunc: Truncation,
    ms_shift: bool,
) -> Result<GaugedOperator> {
    let data = operator_data(d, f)?;
    let m = data.problem.m();
    let w = &data.problem.ns5_weights;
    let mut terms = vec![];
    for slot in 0..data.problem.n_slots() {
        let a_index = {
            // weight-one problems have plain a-slots
            data.problem.slots[slot]
                .a_exps()
                .first()
                .map(|(i, _)| *i)
                .ok_or_else(|| BowError::Domain("slot without equivariant symbol".into()))?
        };
        let a_series = prefactor_series(params, &data.chamber, roster, trunc, a_index)?;
        let mut coeff = Scalar::rat_int(1);
        let mut exps = vec![0i64; roster.len()];
        for l in (data.problem.sigma[slot] + 1)..=(m - 1) {
            let e = (w[l - 1] + w[l]) as i64;
            let mono = if ms_shift {
                Monomial::hbar_pow(w[l - 1] as i64)
            } else {
                Monomial::neg_hbar_sqrt_pow(e)
            };
            coeff = coeff.mul(&mono.eval(params)?);
            exps[data.gap_var[l - 1]] += 1;
        }
        terms.push((a_index, a_series, coeff, exps));
    }
    let eigenvalue =
        eigenvalue_from_weights(w, &data.gap_var, params, roster, trunc, ms_shift)?;
    Ok(GaugedOperator { chamber: data.chamber, roster: roster.clone(), terms, eigenvalue })
}

impl GaugedOperator {
    /// Apply the operator to a series in the same roster.
    pub fn apply(&self, s: &TruncatedSeries, params: &ParameterPoint) -> Result<TruncatedSeries> {
        let mut out = TruncatedSeries::zero(s.roster.clone(), s.trunc);
        for (a_index, a_series, coeff, exps) in &self.terms {
            let shifted = apply_shift(s, params, &self.chamber, *a_index)?;
            let t = a_series.mul(&shifted)?.shift_mul(exps, coeff);
            out = out.add(&t)?;
        }
        Ok(out)
    }
}

/// Phi((q - hbar^{-1}) C) as a series: prod over weights of Phi(q w)/Phi(hbar^{-1} w).
pub fn phi_character_series(
    c: &WeightCharacter,
    params: &ParameterPoint,
    chamber: &Chamber,
    roster: &Roster,
    trunc: Truncation,
) -> Result<TruncatedSeries> {
    let mut factors = vec![];
    for (w, mult) in &c.weights {
        let (coeff, exps) = mono_coeff_uexps(params, chamber, roster, w)?;
        if exps.iter().any(|&v| v < 0) {
            return Err(BowError::Domain(format!(
                "phi character weight {w} is not chamber-small"
            )));
        }
        factors.push((params.q().mul(&coeff), exps.clone(), *mult as i32));
        factors.push((params.hbar().inv()?.mul(&coeff), exps, -(*mult as i32)));
    }
    PhiProduct { factors }.expand(roster, trunc, params)
}

/// The repelling tangent character N^-_f for the canonical chamber C_f.
pub fn n_minus(d: &BraneDiagram, f: &FixedPoint) -> Result<(WeightCharacter, Chamber)> {
    let data = operator_data(d, f)?;
    let tangent = tangent_w1_separated(&data.problem.sigma, &data.problem.slots);
    let (minus, _) = normal_decomposition(&tangent, &data.chamber)?;
    Ok((minus, data.chamber))
}

/// Residual of the gauged eigen-equation D_f (Phi_C V) = e (Phi_C V) for a
/// given vertex series V (exact zero when the identity holds).
pub fn eigen_residual(
    d: &BraneDiagram,
    f: &FixedPoint,
    v: &TruncatedSeries,
    params: &ParameterPoint,
    trunc: Truncation,
) -> Result<f64> {
    let roster = v.roster.clone();
    let op = build_gauged_operator(d, f, params, &roster, trunc, false)?;
    let (minus, chamber) = n_minus(d, f)?;
    let phi = phi_character_series(&minus, params, &chamber, &roster, trunc)?;
    let fser = phi.mul(v)?;
    let lhs = op.apply(&fser, params)?;
    let rhs = op.eigenvalue.mul(&fser)?;
    // both sides are complete on the full window: the gauge monomials only
    // raise Kahler degree, so degree-d output draws on degree <= d input
    let cmp = crate::series::series_equal(&lhs, &rhs, trunc)?;
    Ok(if cmp.equal { 0.0 } else { cmp.max_abs_difference })
}

/// Verify the eigen-equation with the localization engine's vertex.
pub fn verify_eigen_equation(
    d: &BraneDiagram,
    f: &FixedPoint,
    params: &ParameterPoint,
    trunc: Truncation,
) -> Result<f64> {
    let v = if d.is_separated() {
        vertex_flag(d, f, params, Mode::Expansion, trunc)?
    } else {
        vertex_coseparated(d, f, params, Mode::Expansion, trunc, &vec![0; d.n_ns5() - 1])?
    };
    eigen_residual(d, f, &v.series, params, trunc)
}

/// Calibration hook: residual for an externally supplied co-separated series.
pub fn eigen_residual_coseparated(
    d: &BraneDiagram,
    f: &FixedPoint,
    v: &TruncatedSeries,
    params: &ParameterPoint,
    trunc: Truncation,
) -> Result<f64> {
    eigen_residual(d, f, v, params, trunc)
}

/// Partial-fraction sanity property: the operator applied to the constant
/// series 1 has u-constant slice equal to the eigenvalue.
pub fn operator_on_one_check(
    d: &BraneDiagram,
    f: &FixedPoint,
    params: &ParameterPoint,
    trunc: Truncation,
) -> Result<f64> {
    let m = d.n_ns5();
    let n = d.n_d5();
    let roster = Roster::standard(m - 1, n - 1);
    let op = build_gauged_operator(d, f, params, &roster, trunc, false)?;
    let one = TruncatedSeries::one(roster.clone(), trunc);
    let image = op.apply(&one, params)?;
    let cmp = crate::series::series_equal(
        &image.u_constant_slice(),
        &op.eigenvalue,
        Truncation::new(trunc.q_order, 0),
    )?;
    Ok(if cmp.equal { 0.0 } else { cmp.max_abs_difference })
}

/// Solve the gauged q-difference equation by the triangular recursion over
/// u-monomials, anchored at the a -> 0 limit. Returns Phi_{C_f} V_f.
pub fn solve_qde(
    d: &BraneDiagram,
    f: &FixedPoint,
    params: &ParameterPoint,
    trunc: Truncation,
) -> Result<TruncatedSeries> {
    if !d.is_separated() {
        return Err(BowError::Domain("solve_qde expects a separated diagram".into()));
    }
    let m = d.n_ns5();
    let n = d.n_d5();
    let roster = Roster::standard(m - 1, n - 1);
    // pivot polynomials can have positive Kahler valuation, which costs top
    // Q-degrees at each u-step; work with enough headroom and truncate at the
    // end
    let work = Truncation::new(
        trunc.q_order + trunc.u_order * (m as u32 - 1),
        trunc.u_order,
    );
    let op = build_gauged_operator(d, f, params, &roster, work, false)?;
    let chamber = op.chamber.clone();

    // base slice: flaglim as a Q-only series
    let flaglim = {
        let product = flaglim_product(&d.ns5_weights(), params)?;
        let full = PhiProduct {
            factors: product
                .factors
                .iter()
                .map(|(c, e, s)| {
                    let mut fe = vec![0i64; roster.len()];
                    fe[..e.len()].copy_from_slice(e);
                    (c.clone(), fe, *s)
                })
                .collect(),
        };
        full.expand(&roster, work, params)?
    };

    // A_{i,0} and the u-expansions of the prefactors
    let q = params.q();
    let mut solution = flaglim.clone();
    // enumerate u-monomials in graded order
    let u_roster = Roster::new(vec![], roster.u_vars.clone());
    let mut alphas = vec![];
    collect_grades(&u_roster, Truncation::new(0, work.u_order), &mut alphas);
    let nq = roster.q_vars.len();
    for alpha in alphas {
        if alpha.iter().all(|&x| x == 0) {
            continue;
        }
        // pivot polynomial P_alpha(Q) = sum_i A_{i,0} (q^{p_i(alpha)} - 1) M_i
        let mut full_alpha = vec![0i64; roster.len()];
        full_alpha[nq..].copy_from_slice(&alpha);
        let mut pivot = TruncatedSeries::zero(roster.clone(), work);
        for (a_index, a_series, coeff, exps) in &op.terms {
            let a0 = a_series.constant_term();
            let p = shift_pairing(&chamber, &roster, *a_index, &full_alpha);
            let factor = q.pow_i64(p)?.sub(&Scalar::rat_int(1));
            let c = a0.mul(&factor).mul(coeff);
            pivot = pivot.add(&TruncatedSeries::monomial_term(
                roster.clone(),
                work,
                exps.clone(),
                c,
            ))?;
        }
        if pivot.terms.is_empty() {
            return Err(BowError::Calibration(format!(
                "vanishing pivot at u-degree {alpha:?}: non-generic (q, hbar); re-sample"
            )));
        }
        // right side: -(sum_i M_i sum_{0 < gamma <= alpha} A_{i,gamma}
        //   q^{p_i(alpha - gamma)} F_{alpha - gamma})
        let mut rhs = TruncatedSeries::zero(roster.clone(), work);
        for (a_index, a_series, coeff, exps) in &op.terms {
            let mut inner = TruncatedSeries::zero(roster.clone(), work);
            for (ge, gc) in &a_series.terms {
                let gamma = &ge[nq..];
                if gamma.iter().all(|&x| x == 0) {
                    continue;
                }
                if !gamma.iter().zip(&alpha).all(|(g, a)| g <= a) {
                    continue;
                }
                let rem: Vec<i64> = alpha.iter().zip(gamma).map(|(a, g)| a - g).collect();
                // F_{rem}: the Q-slice of the solution at u-exponent rem
                let mut slice = TruncatedSeries::zero(roster.clone(), work);
                for (se, sc) in &solution.terms {
                    if se[nq..] == rem[..] {
                        let mut qonly = se.clone();
                        qonly[nq..].iter_mut().for_each(|x| *x = 0);
                        slice.insert(qonly, sc.clone());
                    }
                }
                if slice.terms.is_empty() {
                    continue;
                }
                let mut full_rem = vec![0i64; roster.len()];
                full_rem[nq..].copy_from_slice(&rem);
                let p = shift_pairing(&chamber, &roster, *a_index, &full_rem);
                let scaled = slice.scalar_mul(&gc.mul(&q.pow_i64(p)?));
                inner = inner.add(&scaled)?;
            }
            rhs = rhs.add(&inner.shift_mul(exps, coeff))?;
        }
        let rhs = rhs.neg();
        let f_alpha = rhs.divide_exact(&pivot)?;
        // accumulate F_alpha u^alpha
        for (qe, qc) in &f_alpha.terms {
            let mut full = qe.clone();
            full[nq..].copy_from_slice(&alpha);
            solution.insert(full, qc.clone());
        }
    }
    Ok(solution.truncate(trunc))
}

/// Exact check that solve_qde reproduces Phi_{C_f} V_f from localization.
pub fn solve_qde_matches_localization(
    d: &BraneDiagram,
    f: &FixedPoint,
    params: &ParameterPoint,
    trunc: Truncation,
) -> Result<f64> {
    let solved = solve_qde(d, f, params, trunc)?;
    let v = vertex_flag(d, f, params, Mode::Expansion, trunc)?;
    let (minus, chamber) = n_minus(d, f)?;
    let phi = phi_character_series(&minus, params, &chamber, &v.series.roster, trunc)?;
    let direct = phi.mul(&v.series)?;
    // both sides are complete only below the operator's Kahler span; compare
    // in the full window since no operator was applied to either side
    let cmp = crate::series::series_equal(&solved, &direct, trunc)?;
    Ok(if cmp.equal { 0.0 } else { cmp.max_abs_difference })
}

/// The Phi-factor list of Phi_f = Phi((q - hbar^{-1}) P|_f) in the displayed
/// product form: pairs (argument monomial, power).
pub fn phi_f_factors(d: &BraneDiagram, f: &FixedPoint) -> Result<Vec<(Monomial, i32)>> {
    let data = operator_data(d, f)?;
    let sigma = &data.problem.sigma;
    let n = data.n_orig;
    let m = data.problem.m();
    let q = Monomial::q_pow(1);
    let hinv = Monomial::hbar_pow(-1);
    let qh = Monomial::q_pow(1).mul(&Monomial::hbar_pow(1));
    let mut out = vec![];
    if d.is_separated() {
        for i in 1..m {
            for j in 0..n {
                for k in 0..n {
                    if j != k && sigma[j] + 1 <= i && sigma[k] + 1 <= i {
                        let x = Monomial::a(j).mul(&Monomial::a(k).inv());
                        out.push((q.mul(&x), 1));
                        out.push((x.clone(), 1));
                        out.push((hinv.mul(&x), -1));
                        out.push((qh.mul(&x), -1));
                    }
                }
            }
        }
        for k in 0..n {
            for l in 0..n {
                if sigma[k] < sigma[l] {
                    let x = Monomial::a(k).mul(&Monomial::a(l).inv());
                    out.push((q.mul(&x), 1));
                    out.push((hinv.mul(&x), -1));
                }
            }
        }
    } else {
        // co-separated: the dictionary reverses the sigma order, so the
        // displayed condition sigma!(j) < sigma!(k) reads sigma'(j) > sigma'(k)
        for j in 0..n {
            for k in 0..n {
                if sigma[j] > sigma[k] {
                    let x = Monomial::a(k).mul(&Monomial::a(j).inv());
                    out.push((q.mul(&x), 1));
                    out.push((hinv.mul(&x), -1));
                }
            }
        }
    }
    Ok(out)
}

/// T_{a_i}(prod Phi(x)^s)/(prod Phi(x)^s) at a rational point: each factor with
/// T_i(x) = q^k x contributes (x)_k^{-s} since Phi(q^k x)/Phi(x) = 1/(x)_k.
fn phi_shift_ratio_factors(
    factors: &[(Monomial, i32)],
    i: usize,
    params: &ParameterPoint,
) -> Result<Scalar> {
    let mut acc = Scalar::rat_int(1);
    for (x, s) in factors {
        let k = x.exp(crate::scalar::Symbol::A(i));
        if k == 0 {
            continue;
        }
        let poch = pochhammer(&x.eval(params)?, k, params)?;
        acc = acc.mul(&poch.pow_i64(-(*s as i64))?);
    }
    Ok(acc)
}

/// T_{a_i}(Phi((q - hbar^{-1}) C))/same, as factors (q w, +mult), (hbar^{-1} w, -mult).
fn phi_character_factors(c: &WeightCharacter) -> Vec<(Monomial, i32)> {
    let mut out = vec![];
    for (w, mult) in &c.weights {
        out.push((Monomial::q_pow(1).mul(w), *mult as i32));
        out.push((Monomial::hbar_pow(-1).mul(w), -(*mult as i32)));
    }
    out
}

/// Gauge replacement lemma: T_{a_i}(Phi_f)/Phi_f = T_{a_i}(Phi_{C_f})/Phi_{C_f}
/// as rational functions, checked exactly at seeded rational points.
pub fn phi_gauge_check(
    d: &BraneDiagram,
    f: &FixedPoint,
    i: usize,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let mut rng = crate::rng::SplitMix64::new(seed);
    let phi_f = phi_f_factors(d, f)?;
    let data = operator_data(d, f)?;
    let tangent = tangent_w1_separated(&data.problem.sigma, &data.problem.slots);
    let (minus, _) = normal_decomposition(&tangent, &data.chamber)?;
    let phi_c = phi_character_factors(&minus);
    let mut worst = 0.0f64;
    let mut done = 0;
    let mut attempts = 0;
    while done < samples {
        attempts += 1;
        if attempts > samples * 20 {
            return Err(BowError::Domain("phi_gauge_check: too many poles; re-seed".into()));
        }
        let params = match random_rational_point(d.n_d5(), &mut rng) {
            Ok(p) => p,
            Err(_) => continue,
        };
        let lhs = match phi_shift_ratio_factors(&phi_f, i, &params) {
            Ok(v) => v,
            Err(_) => continue, // accidental pole: re-sample
        };
        let rhs = match phi_shift_ratio_factors(&phi_c, i, &params) {
            Ok(v) => v,
            Err(_) => continue,
        };
        let diff = lhs.sub(&rhs).abs();
        worst = worst.max(diff);
        done += 1;
    }
    Ok(worst)
}

/// A random rational parameter point with small numerators and denominators.
pub fn random_rational_point(
    n: usize,
    rng: &mut crate::rng::SplitMix64,
) -> Result<ParameterPoint> {
    let mut a = vec![];
    for _ in 0..n {
        let num = rng.below(23) as i64 + 2;
        let den = rng.below(19) as i64 + 25;
        a.push(Scalar::rat(num, den));
    }
    let hbar_sqrt = Scalar::rat(rng.below(5) as i64 + 2, rng.below(4) as i64 + 9);
    let q_sqrt = Scalar::rat(rng.below(4) as i64 + 2, rng.below(5) as i64 + 11);
    ParameterPoint::new(a, hbar_sqrt, q_sqrt)
}

/// Run the eigen-equation on all fixed points of a diagram.
pub fn eigen_report(
    d: &BraneDiagram,
    params: &ParameterPoint,
    trunc: Truncation,
) -> Result<Vec<f64>> {
    enumerate_fixed_points(d)
        .iter()
        .map(|f| verify_eigen_equation(d, f, params, trunc))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixed_points::enumerate_fixed_points;
    use crate::scalar::Symbol;

    fn rat_params(n: usize) -> ParameterPoint {
        let primes = [2i64, 3, 5, 7, 11];
        ParameterPoint::new(
            (0..n).map(|i| Scalar::rat(primes[i % 5], 13 + i as i64)).collect(),
            Scalar::rat(1, 2),
            Scalar::rat(1, 3),
        )
        .unwrap()
    }

    #[test]
    fn eigenvalue_tp1() {
        // separated T*P1: e = hbar Q + hbar q
        let d = BraneDiagram::parse("/1/2\\1\\").unwrap();
        let params = rat_params(2);
        let roster = Roster::standard(1, 1);
        let trunc = Truncation::new(2, 2);
        let e = eigenvalue_e(&d, &params, &roster, trunc, false).unwrap();
        let hbar = params.hbar();
        let q = params.q();
        assert!(e.coeff(&[0, 0]).eq_scalar(&hbar.mul(&q)));
        assert!(e.coeff(&[1, 0]).eq_scalar(&hbar));
        assert_eq!(e.terms.len(), 2);
    }

    #[test]
    fn eigenvalue_single_ns5() {
        // m = 1, weight w: e = sum_{j<w} (q hbar)^j, Q-free
        let d = BraneDiagram::parse("/3\\1\\1\\1\\").unwrap();
        let params = rat_params(3);
        let roster = Roster::standard(0, 2);
        let trunc = Truncation::new(0, 2);
        let e = eigenvalue_e(&d, &params, &roster, trunc, false).unwrap();
        let qh = params.q().mul(&params.hbar());
        let expected = Scalar::rat_int(1).add(&qh).add(&qh.mul(&qh));
        assert!(e.constant_term().eq_scalar(&expected));
        assert_eq!(e.terms.len(), 1);
    }

    #[test]
    fn eigenvalue_coseparated_matches_separated() {
        let d = BraneDiagram::parse("/1/2\\1\\").unwrap();
        let dc = BraneDiagram::parse("\\1\\2/1/").unwrap();
        let params = rat_params(2);
        let roster = Roster::standard(1, 1);
        let trunc = Truncation::new(2, 2);
        let e1 = eigenvalue_e(&d, &params, &roster, trunc, false).unwrap();
        let e2 = eigenvalue_e(&dc, &params, &roster, trunc, false).unwrap();
        assert!(crate::series::series_equal(&e1, &e2, trunc).unwrap().equal);
    }

    #[test]
    fn gauge_monomials_tp1() {
        // f with sigma = id: M_1 = hbar Q, M_2 = 1
        let d = BraneDiagram::parse("/1/2\\1\\").unwrap();
        let params = rat_params(2);
        let roster = Roster::standard(1, 1);
        let trunc = Truncation::new(3, 3);
        let pts = enumerate_fixed_points(&d);
        let ident = pts.iter().find(|f| f.bct == vec![vec![1, 0], vec![0, 1]]).unwrap();
        let op = build_gauged_operator(&d, ident, &params, &roster, trunc, false).unwrap();
        let by_index: std::collections::BTreeMap<usize, (Scalar, Vec<i64>)> = op
            .terms
            .iter()
            .map(|(i, _, c, e)| (*i, (c.clone(), e.clone())))
            .collect();
        let (c1, e1) = &by_index[&0];
        assert!(c1.eq_scalar(&params.hbar()));
        assert_eq!(e1[0], 1);
        let (c2, e2) = &by_index[&1];
        assert!(c2.is_one());
        assert_eq!(e2[0], 0);
    }

    #[test]
    fn operator_on_one_matches_eigenvalue() {
        let params = rat_params(2);
        let trunc = Truncation::new(3, 3);
        for text in ["/1/2\\1\\", "/1/2/3\\2\\1\\"] {
            let d = BraneDiagram::parse(text).unwrap();
            let params = rat_params(d.n_d5());
            for f in enumerate_fixed_points(&d) {
                let r = operator_on_one_check(&d, &f, &params, trunc).unwrap();
                assert_eq!(r, 0.0, "diagram {text}");
            }
        }
        let _ = params;
    }

    #[test]
    fn eigen_equation_tp1_both_points() {
        let d = BraneDiagram::parse("/1/2\\1\\").unwrap();
        let params = rat_params(2);
        let trunc = Truncation::new(4, 4);
        for f in enumerate_fixed_points(&d) {
            let r = verify_eigen_equation(&d, &f, &params, trunc).unwrap();
            assert_eq!(r, 0.0, "fp {:?}", f.bct);
        }
    }

    #[test]
    fn eigen_equation_cosep_tp1() {
        let d = BraneDiagram::parse("\\1\\2/1/").unwrap();
        let params = rat_params(2);
        let trunc = Truncation::new(4, 4);
        for f in enumerate_fixed_points(&d) {
            let r = verify_eigen_equation(&d, &f, &params, trunc).unwrap();
            assert_eq!(r, 0.0, "fp {:?}", f.bct);
        }
    }

    #[test]
    fn eigen_equation_gr02() {
        // "/2\1\": V = 1 and the equation reduces to the eigenvalue identity
        let d = BraneDiagram::parse("/2\\1\\").unwrap();
        let params = rat_params(2);
        let trunc = Truncation::new(3, 3);
        for f in enumerate_fixed_points(&d) {
            let r = verify_eigen_equation(&d, &f, &params, trunc).unwrap();
            assert_eq!(r, 0.0);
        }
    }

    #[test]
    fn solve_qde_tp1() {
        let d = BraneDiagram::parse("/1/2\\1\\").unwrap();
        let params = rat_params(2);
        let trunc = Truncation::new(3, 3);
        for f in enumerate_fixed_points(&d) {
            let r = solve_qde_matches_localization(&d, &f, &params, trunc).unwrap();
            assert_eq!(r, 0.0, "fp {:?}", f.bct);
        }
    }

    #[test]
    fn solve_qde_full_flag() {
        let d = BraneDiagram::parse("/1/2/3\\2\\1\\").unwrap();
        let params = rat_params(3);
        let trunc = Truncation::new(2, 2);
        for f in enumerate_fixed_points(&d) {
            let r = solve_qde_matches_localization(&d, &f, &params, trunc).unwrap();
            assert_eq!(r, 0.0, "fp {:?}", f.bct);
        }
    }

    #[test]
    fn phi_gauge_tp1() {
        let d = BraneDiagram::parse("/1/2\\1\\").unwrap();
        for f in enumerate_fixed_points(&d) {
            for i in 0..2 {
                let r = phi_gauge_check(&d, &f, i, 5, 17).unwrap();
                assert_eq!(r, 0.0);
            }
        }
    }

    #[test]
    fn phi_gauge_flag_and_cosep() {
        let d = BraneDiagram::parse("/1/2/3\\2\\1\\").unwrap();
        for f in enumerate_fixed_points(&d) {
            for i in 0..3 {
                let r = phi_gauge_check(&d, &f, i, 3, 23).unwrap();
                assert_eq!(r, 0.0);
            }
        }
        let dc = BraneDiagram::parse("\\1\\2/1/").unwrap();
        for f in enumerate_fixed_points(&dc) {
            for i in 0..2 {
                let r = phi_gauge_check(&dc, &f, i, 3, 29).unwrap();
                assert_eq!(r, 0.0);
            }
        }
    }

    #[test]
    fn chamber_pairing_sanity() {
        let chamber = Chamber { order: vec![0, 1, 2] };
        let roster = Roster::standard(1, 2);
        // u_1 = a_1/a_2: T_{a_1} multiplies by q
        let mut e = vec![0i64, 1, 0];
        assert_eq!(shift_pairing(&chamber, &roster, 0, &e), 1);
        assert_eq!(shift_pairing(&chamber, &roster, 1, &e), -1);
        assert_eq!(shift_pairing(&chamber, &roster, 2, &e), 0);
        e = vec![0, 1, 1];
        // u_1 u_2 = a_1/a_3
        assert_eq!(shift_pairing(&chamber, &roster, 0, &e), 1);
        assert_eq!(shift_pairing(&chamber, &roster, 1, &e), 0);
        assert_eq!(shift_pairing(&chamber, &roster, 2, &e), -1);
        let _ = Symbol::A(0);
    }
}
