//! The mirror map, the hbar = 1 degeneration of the main theorem for arbitrary
//! diagrams, and the complete numerical mirror-symmetry verification for T*P1
//! with the explicit stable-envelope matrix.

use serde::{Deserialize, Serialize};

use crate::brane::BraneDiagram;
use crate::error::{BowError, Result};
use crate::fixed_points::{
    dual_fixed_point, enumerate_fixed_points, normal_decomposition, Chamber, FixedPoint,
};
use crate::scalar::{
    default_phi_terms, hyp_2phi1, phi_truncated, theta, ParameterPoint, Scalar,
};
use crate::series::{
    series_equal, Roster, SubTarget, SubstitutionMap, TruncatedSeries, Truncation,
};
use crate::vertex::{msver, Mode};

/// The mirror map on the Kahler/equivariant symbol algebra:
/// q! -> q, hbar! -> 1/(hbar q), (q!)^{-w(Z!_i)} Q!_i -> u_i,
/// u!_i -> q^{w(Z_i)} Q_i, plus the fixed-point bijection f <-> f!
/// (complement-transpose of the BCT).
pub struct MirrorMap {
    pub substitution: SubstitutionMap,
}

/// Build the substitution sending a series over the X!-roster (Q!, u!) to one
/// over the X-roster (Q, u). `w_dual` are the NS5 weights of X!, `w` those of X.
pub fn mirror_map(
    params: &ParameterPoint,
    w_dual: &[u32],
    w: &[u32],
) -> Result<MirrorMap> {
    let m_dual = w_dual.len();
    let m = w.len();
    // X! has m_dual - 1 Kahler variables mapping to the u-variables of X, and
    // its u-variables map to the Kahler variables of X
    let n_u_dual = m - 1;
    let source = Roster::new(
        (1..m_dual).map(|i| format!("Q{i}")).collect(),
        (1..=n_u_dual).map(|j| format!("u{j}")).collect(),
    );
    let target = Roster::new(
        (1..m).map(|i| format!("Q{i}")).collect(),
        (1..m_dual).map(|j| format!("u{j}")).collect(),
    );
    let q = params.q();
    let mut targets = vec![];
    for i in 0..m_dual - 1 {
        // Q!_i -> q^{w(Z!_i)} u_i
        let mut e = vec![0i64; target.len()];
        e[m - 1 + i] = 1;
        targets.push(SubTarget { coeff: q.pow_i64(w_dual[i] as i64)?, exps: e });
    }
    for j in 0..n_u_dual {
        // u!_j -> q^{w(Z_j)} Q_j
        let mut e = vec![0i64; target.len()];
        e[j] = 1;
        targets.push(SubTarget { coeff: q.pow_i64(w[j] as i64)?, exps: e });
    }
    Ok(MirrorMap {
        substitution: SubstitutionMap { source, target, targets, allow_constant: false },
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Hbar1Report {
    pub diagram: String,
    pub fixed_point: Vec<Vec<u8>>,
    pub q_independent: bool,
    pub matches_tangent_product: bool,
    pub max_abs_residual: f64,
}

/// The hbar = 1 degeneration of mirror symmetry at one fixed point:
/// kappa(MSver^{X!}_{f!}|_{hbar! q! = 1}) is Q-independent and equals the
/// geometric expansion of prod over repelling tangent weights of (1 - w)^{-1}.
pub fn hbar1_degeneration_check(
    d: &BraneDiagram,
    f: &FixedPoint,
    q_sqrt: &Scalar,
    trunc: Truncation,
) -> Result<Hbar1Report> {
    let (d_sep, _) = d.separate()?;
    let f = if d.is_separated() {
        f.clone()
    } else {
        return Err(BowError::Domain(
            "hbar1 check expects the separated representative of the diagram".into(),
        ));
    };
    let _q = q_sqrt.mul(q_sqrt);
    // the degeneration point: hbar = 1 on the X side, hbar! = 1/q on the dual
    let params_dual = ParameterPoint::new(
        vec![Scalar::rat_int(1); d_sep.n_ns5()],
        q_sqrt.inv()?,
        q_sqrt.clone(),
    )?;
    let d_dual = d_sep.mirror_coseparated()?;
    let f_dual = dual_fixed_point(&f);
    let ms = msver(&d_dual, &f_dual, &params_dual, Mode::Expansion, trunc)?;
    let map = mirror_map(&params_dual, &d_dual.ns5_weights(), &d_sep.ns5_weights())?;
    let image = map.substitution.apply(&ms.series)?;
    // (i) Q-independence
    let nq = image.roster.q_vars.len();
    let mut q_independent = true;
    for (e, _) in &image.terms {
        if e[..nq].iter().any(|&x| x != 0) {
            q_independent = false;
        }
    }
    // (ii) equality with prod over N^-_f (standard chamber, hbar = 1) of
    // (1 - w)^{-1}, expanded in the u-variables of X
    let params_x = ParameterPoint::new(
        vec![Scalar::rat_int(1); d_sep.n_d5()],
        Scalar::rat_int(1),
        q_sqrt.clone(),
    )?;
    let tangent = crate::resolutions::tangent_via_resolution(&d_sep, &f)?;
    let chamber = Chamber::standard(d_sep.n_d5());
    let (minus, _) = normal_decomposition(&tangent, &chamber)?;
    let mut expected = TruncatedSeries::one(image.roster.clone(), trunc);
    for w in minus.to_multiset()? {
        let (a_part, rest) = w.split_a();
        let coeff = rest.eval(&params_x)?;
        // a-part as u-exponents under the standard chamber
        let mut e = vec![0i64; d_sep.n_d5()];
        for (i, k) in a_part.a_exps() {
            e[i] = k;
        }
        let mut exps = vec![0i64; image.roster.len()];
        let mut acc = 0i64;
        for t in 0..d_sep.n_d5() - 1 {
            acc += e[t];
            exps[nq + t] = acc;
        }
        if exps.iter().any(|&x| x < 0) {
            return Err(BowError::Consistency(
                "repelling weight is not standard-chamber small".into(),
            ));
        }
        let factor =
            crate::series::expand_rational_factor(&image.roster, trunc, &coeff, &exps, true)?;
        expected = expected.mul(&factor)?;
    }
    let cmp = series_equal(&image, &expected, trunc)?;
    Ok(Hbar1Report {
        diagram: d_sep.render(),
        fixed_point: f.bct.clone(),
        q_independent,
        matches_tangent_product: cmp.equal,
        max_abs_residual: cmp.max_abs_difference,
    })
}

/// The explicit T*P1 stable envelope matrix entry MSstab_{gf} at a float point.
///
/// Diagonal entries are 1, MSstab_{f2 f1} = 0, and
/// MSstab_{f1 f2} = hbar^{-1/2} u^{-1} theta(hbar) theta(u Q) / (theta(u) theta(Q)).
pub fn msstab_tp1(
    g: usize,
    f: usize,
    u: &Scalar,
    q_kahler: &Scalar,
    params: &ParameterPoint,
    n_terms: usize,
) -> Result<Scalar> {
    match (g, f) {
        (0, 0) | (1, 1) => Ok(Scalar::cplx(1.0, 0.0)),
        (1, 0) => Ok(Scalar::cplx(0.0, 0.0)),
        (0, 1) => {
            let th_h = theta(&params.hbar(), n_terms, params)?;
            let th_uq = theta(&u.mul(q_kahler), n_terms, params)?;
            let th_u = theta(u, n_terms, params)?;
            let th_q = theta(q_kahler, n_terms, params)?;
            if th_u.is_zero() || th_q.is_zero() {
                return Err(BowError::Pole("theta pole in MSstab".into()));
            }
            let hs = params.hbar_sqrt.inv()?;
            Ok(hs.mul(&u.inv()?).mul(&th_h).mul(&th_uq).div(&th_u.mul(&th_q))?)
        }
        _ => Err(BowError::Domain("T*P1 has two fixed points".into())),
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Tp1Sample {
    pub q: f64,
    pub hbar: f64,
    pub u: f64,
    pub q_kahler: f64,
    pub residual_f1: f64,
    pub residual_f2: f64,
    pub heine_residual: f64,
    pub watson_residual: f64,
}

/// One sample of the full T*P1 mirror statement: both fixed-point equations,
/// assembled from the Phi-prefactors, the 2phi1 closed forms (coefficientwise
/// equal to the localization engines), and the stable envelope matrix.
pub fn tp1_mirror_sample(
    q: f64,
    hbar: f64,
    u: f64,
    q_kahler: f64,
    n_terms: usize,
) -> Result<Tp1Sample> {
    let params = ParameterPoint::new(
        vec![Scalar::cplx(1.0, 0.0), Scalar::cplx(1.0 / u, 0.0)],
        Scalar::cplx(hbar.sqrt(), 0.0),
        Scalar::cplx(q.sqrt(), 0.0),
    )?;
    let nphi = default_phi_terms(&params).max(n_terms);
    let uu = Scalar::cplx(u, 0.0);
    let qq = Scalar::cplx(q, 0.0);
    let hh = Scalar::cplx(hbar, 0.0);
    let big_q = Scalar::cplx(q_kahler, 0.0);
    let phi = |x: &Scalar| phi_truncated(x, nphi, &params);
    
    // Phi^-_{f} = Phi((q - hbar^{-1}) N^-_f): N^-_{f1} = {u}, N^-_{f2} = {hbar u}
    let phi_minus_f1 = phi(&qq.mul(&uu))?.div(&phi(&hh.inv()?.mul(&uu))?)?;
    let phi_minus_f2 = phi(&qq.mul(&hh).mul(&uu))?.div(&phi(&uu)?)?;
    // vertex closed forms at inverse Kahler argument
    let z_inv = hh.div(&big_q)?;
    if z_inv.abs() >= 1.0 {
        return Err(BowError::Domain("sample outside |hbar/Q| < 1".into()));
    }
    let v_f1 = hyp_2phi1(&hh.inv()?, &hh.inv()?.mul(&uu), &qq.mul(&uu), &z_inv, n_terms, &params)?;
    let v_f2 = hyp_2phi1(
        &hh.inv()?,
        &hh.inv()?.div(&uu)?,
        &qq.div(&uu)?,
        &z_inv,
        n_terms,
        &params,
    )?;

    // f1 equation: kappa(Phi^+_{f1!} V_{f1!}) = Phi^-_{f1} V_{f1}(Q^{-1})
    let z_u = uu.div(&hh)?;
    if z_u.abs() >= 1.0 {
        return Err(BowError::Domain("sample outside |u/hbar| < 1".into()));
    }
    let lhs_f1 = phi(&big_q.inv()?)?
        .div(&phi(&hh.div(&big_q)?)?)?
        .mul(&hyp_2phi1(&hh.mul(&qq), &hh.div(&big_q)?, &big_q.inv()?, &z_u, n_terms, &params)?);
    let rhs_f1 = phi_minus_f1.mul(&v_f1);
    let residual_f1 = lhs_f1.sub(&rhs_f1).abs();

    // f2 equation: kappa(Phi^+_{f2!} V_{f2!}) =
    //   MSstab_{f1 f2} Phi^-_{f1} V_{f1}(Q^{-1}) + Phi^-_{f2} V_{f2}(Q^{-1})
    let z2 = hh.mul(&qq).mul(&qq).mul(&big_q);
    if z2.abs() >= 1.0 {
        return Err(BowError::Domain("sample outside |hbar q^2 Q| < 1".into()));
    }
    let lhs_f2 = phi(&hh.inv()?.mul(&qq.inv()?).mul(&big_q.inv()?))?
        .div(&phi(&qq.inv()?.mul(&big_q.inv()?))?)?
        .mul(&hyp_2phi1(
            &qq.mul(&hh),
            &hh.mul(&qq).mul(&qq).mul(&big_q),
            &qq.mul(&qq).mul(&big_q),
            &z_u,
            n_terms,
            &params,
        )?);
    let ms = msstab_tp1(0, 1, &uu, &big_q, &params, nphi)?;
    let rhs_f2 = ms.mul(&phi_minus_f1).mul(&v_f1).add(&phi_minus_f2.mul(&v_f2));
    let residual_f2 = lhs_f2.sub(&rhs_f2).abs();

    // re-derive both statements from the classical transformation kernels
    let heine_residual = crate::scalar::heine_residual(
        &hh.mul(&qq),
        &hh.div(&big_q)?,
        &big_q.inv()?,
        &z_u,
        n_terms,
        &params,
    )?;
    let watson_residual =
        crate::scalar::watson_residual(&hh.inv()?, &hh.inv()?.mul(&uu), &qq.mul(&uu), &z2, n_terms, &params)?;
    Ok(Tp1Sample {
        q,
        hbar,
        u,
        q_kahler,
        residual_f1,
        residual_f2,
        heine_residual,
        watson_residual,
    })
}

/// Seeded sweep of the full T*P1 mirror check.
pub fn tp1_mirror_check(samples: usize, seed: u64, n_terms: usize) -> Result<Vec<Tp1Sample>> {
    let mut rng = crate::rng::SplitMix64::new(seed);
    let mut out = vec![];
    let mut attempts = 0;
    while out.len() < samples {
        attempts += 1;
        if attempts > samples * 50 {
            return Err(BowError::Domain("could not find enough admissible samples".into()));
        }
        let q = rng.range(0.03, 0.15);
        let hbar = rng.range(0.25, 0.6);
        let u = rng.range(0.05, 0.65) * hbar;
        let q_kahler = rng.range(1.8, 4.0) * hbar;
        if hbar * q * q * q_kahler >= 0.9 {
            continue;
        }
        match tp1_mirror_sample(q, hbar, u, q_kahler, n_terms) {
            Ok(s) => out.push(s),
            Err(_) => continue, // pole or domain violation: re-sample
        }
    }
    Ok(out)
}

/// Sign bookkeeping of stable-envelope mirror symmetry on T*P1: epsilon
/// products and the quasi-periodicity of the off-diagonal entry.
pub fn tp1_sign_check(params: &ParameterPoint, n_terms: usize) -> Result<f64> {
    let d = BraneDiagram::parse("/1/2\\1\\").expect("T*P1 diagram");
    let pts = enumerate_fixed_points(&d);
    let ident = pts.iter().find(|f| f.sigma().unwrap() == vec![0, 1]).unwrap();
    let anti = pts.iter().find(|f| f.sigma().unwrap() == vec![1, 0]).unwrap();
    // |X^T| = |X!^T| and epsilon(f1) epsilon(f2) = -1
    let dual = d.mirror_coseparated()?;
    let dual_pts = enumerate_fixed_points(&dual);
    if dual_pts.len() != pts.len() {
        return Err(BowError::Consistency("mirror fixed point counts differ".into()));
    }
    if ident.sign_epsilon() * anti.sign_epsilon() != -1 {
        return Err(BowError::Consistency("epsilon bookkeeping failed".into()));
    }
    // Q -> qQ multiplies MSstab_{f1 f2} by u^{-1}
    let u = Scalar::cplx(0.23, 0.0);
    let qk = Scalar::cplx(1.7, 0.0);
    let base = msstab_tp1(0, 1, &u, &qk, params, n_terms)?;
    let shifted = msstab_tp1(0, 1, &u, &params.q().mul(&qk), params, n_terms)?;
    let residual = shifted.div(&base)?.sub(&u.inv()?).abs();
    Ok(residual)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hbar1_tp1_both_points() {
        let d = BraneDiagram::parse("/1/2\\1\\").unwrap();
        let trunc = Truncation::new(3, 3);
        for f in enumerate_fixed_points(&d) {
            let rep = hbar1_degeneration_check(&d, &f, &Scalar::rat(1, 3), trunc).unwrap();
            assert!(rep.q_independent, "fp {:?}", f.bct);
            assert!(rep.matches_tangent_product, "fp {:?}", f.bct);
        }
    }

    #[test]
    fn hbar1_trivial_diagram() {
        let d = BraneDiagram::parse("/\\").unwrap();
        let trunc = Truncation::new(2, 2);
        for f in enumerate_fixed_points(&d) {
            let rep = hbar1_degeneration_check(&d, &f, &Scalar::rat(1, 3), trunc).unwrap();
            assert!(rep.q_independent && rep.matches_tangent_product);
        }
    }

    #[test]
    fn hbar1_single_point_and_weight2() {
        // "/2\1\" is a point; its dual routes through a weight-2 D5 resolution
        for text in ["/2\\1\\", "/1/2\\"] {
            let d = BraneDiagram::parse(text).unwrap();
            let (d_sep, _) = d.separate().unwrap();
            let trunc = Truncation::new(3, 3);
            for f in enumerate_fixed_points(&d_sep) {
                let rep =
                    hbar1_degeneration_check(&d_sep, &f, &Scalar::rat(1, 3), trunc).unwrap();
                assert!(rep.q_independent, "{text} fp {:?}", f.bct);
                assert!(rep.matches_tangent_product, "{text} fp {:?}", f.bct);
            }
        }
    }

    #[test]
    fn hbar1_mixed_weight_diagram() {
        // weight-(2,1) mixed NS5 weights with a weight-2 D5 on the dual side
        let d = BraneDiagram::parse("/2/3\\2\\1\\").unwrap();
        let trunc = Truncation::new(3, 3);
        for f in enumerate_fixed_points(&d) {
            let rep = hbar1_degeneration_check(&d, &f, &Scalar::rat(1, 3), trunc).unwrap();
            assert!(rep.q_independent, "fp {:?}", f.bct);
            assert!(rep.matches_tangent_product, "fp {:?}", f.bct);
        }
    }

    #[test]
    fn tp1_mirror_small_sweep() {
        let samples = tp1_mirror_check(5, 11, 200).unwrap();
        for s in &samples {
            assert!(s.residual_f1 < 1e-8, "f1 residual {} at {:?}", s.residual_f1, s);
            assert!(s.residual_f2 < 1e-8, "f2 residual {} at {:?}", s.residual_f2, s);
            assert!(s.heine_residual < 1e-9);
            assert!(s.watson_residual < 1e-9);
        }
    }

    #[test]
    fn tp1_residual_scales_with_precision() {
        let coarse = tp1_mirror_sample(0.1, 1.0 / 3.0, 0.2, 1.4, 30).unwrap();
        let fine = tp1_mirror_sample(0.1, 1.0 / 3.0, 0.2, 1.4, 240).unwrap();
        assert!(fine.residual_f1 <= coarse.residual_f1);
        assert!(fine.residual_f2 <= coarse.residual_f2.max(1e-13));
        assert!(fine.residual_f1 < 5e-9 && fine.residual_f2 < 5e-9);
    }

    #[test]
    fn tp1_signs_and_quasi_periods() {
        let params = ParameterPoint::new(
            vec![Scalar::cplx(1.0, 0.0), Scalar::cplx(1.0, 0.0)],
            Scalar::cplx(0.5f64.sqrt(), 0.0),
            Scalar::cplx(0.1f64.sqrt(), 0.0),
        )
        .unwrap();
        let r = tp1_sign_check(&params, 200).unwrap();
        assert!(r < 1e-10, "residual {r}");
    }

    #[test]
    fn mirror_map_roundtrip() {
        // kappa then its formal inverse is the identity on the symbol algebra
        let params = ParameterPoint::new(
            vec![Scalar::rat_int(1); 2],
            Scalar::rat(1, 2),
            Scalar::rat(1, 3),
        )
        .unwrap();
        let w = vec![1, 1];
        let map = mirror_map(&params, &w, &w).unwrap();
        let trunc = Truncation::new(3, 3);
        let mut s = TruncatedSeries::one(map.substitution.source.clone(), trunc);
        s.insert(vec![1, 0], Scalar::rat(2, 7));
        s.insert(vec![1, 2], Scalar::rat(-3, 5));
        let image = map.substitution.apply(&s).unwrap();
        // inverse map: u_i -> q^{-w!} Q!_i, Q_i -> q^{-w} u!_i
        let q = params.q();
        let inv = SubstitutionMap {
            source: map.substitution.target.clone(),
            target: map.substitution.source.clone(),
            targets: {
                let mut t = vec![];
                let mq = map.substitution.target.q_vars.len();
                for j in 0..mq {
                    let mut e = vec![0i64; map.substitution.source.len()];
                    e[map.substitution.source.q_vars.len() + j] = 1;
                    t.push(SubTarget { coeff: q.pow_i64(-(w[j] as i64)).unwrap(), exps: e });
                }
                for i in 0..map.substitution.target.u_vars.len() {
                    let mut e = vec![0i64; map.substitution.source.len()];
                    e[i] = 1;
                    t.push(SubTarget { coeff: q.pow_i64(-(w[i] as i64)).unwrap(), exps: e });
                }
                t
            },
            allow_constant: false,
        };
        let back = inv.apply(&image).unwrap();
        assert!(series_equal(&s, &back, trunc).unwrap().equal);
    }
}
