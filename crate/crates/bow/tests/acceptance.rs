//! Acceptance suite: one check per exit criterion, each printed as a pass/fail
//! line with its residual and runtime. Every tolerance is pinned here.
//!
//! Run with `cargo test --release -p bow --test acceptance -- --nocapture`
//! to see the lines and enforce the runtime budgets (debug builds check
//! correctness but skip the wall-clock assertions).

use std::time::Instant;

/// Debug builds run every criterion on a reduced corpus (the smallest
/// diagrams, always including T*P1) so the default `cargo test --workspace`
/// stays quick; release builds use the full corpus and enforce the runtime
/// budgets.
fn cap(mut v: Vec<BraneDiagram>) -> Vec<BraneDiagram> {
    if cfg!(debug_assertions) {
        v.sort_by_key(|d| (enumerate_fixed_points(d).len(), d.branes.len()));
        v.truncate(3);
    }
    v
}

fn full_scope() -> bool {
    !cfg!(debug_assertions)
}

use bow::brane::BraneDiagram;
use bow::fixed_points::{enumerate_fixed_points, FixedPoint};
use bow::scalar::{
    pochhammer, ParameterPoint, Scalar,
};
use bow::series::{series_equal, Roster, TruncatedSeries, Truncation};
use bow::suites::RunConfig;
use bow::vertex::Mode;

struct Criterion {
    name: &'static str,
    budget_secs: f64,
}

fn run(c: Criterion, f: impl FnOnce() -> Result<(bool, f64, String), bow::error::BowError>) {
    let start = Instant::now();
    let (passed, residual, detail) = f().unwrap_or_else(|e| (false, f64::INFINITY, format!("{e}")));
    let secs = start.elapsed().as_secs_f64();
    println!(
        "[{}] {}: residual {residual:.3e} ({detail}) in {secs:.2}s (budget {}s)",
        if passed { "PASS" } else { "FAIL" },
        c.name,
        c.budget_secs
    );
    assert!(passed, "{} failed with residual {residual}", c.name);
    if !cfg!(debug_assertions) {
        assert!(
            secs <= c.budget_secs,
            "{} exceeded its runtime budget: {secs:.1}s > {}s",
            c.name,
            c.budget_secs
        );
    }
}

fn rational_point(n: usize) -> ParameterPoint {
    RunConfig::default().rational_point(n).unwrap()
}

/// Independent oracle for the T*P1 closed form: the basic hypergeometric
/// series with arguments (hbar^{-1}, hbar^{-1} x; q x; hbar Q), expanded as a
/// (Q, u)-series by direct Pochhammer products.
fn tp1_phi21_series(params: &ParameterPoint, trunc: Truncation) -> TruncatedSeries {
    let roster = Roster::standard(1, 1);
    let q = params.q();
    let hbar = params.hbar();
    let mut out = TruncatedSeries::zero(roster.clone(), trunc);
    for d in 0..=trunc.q_order as i64 {
        let scalar_part = pochhammer(&hbar.inv().unwrap(), d, params)
            .unwrap()
            .div(&pochhammer(&q, d, params).unwrap())
            .unwrap()
            .mul(&hbar.pow_i64(d).unwrap());
        // (hbar^{-1} x)_d / (q x)_d expanded in the ratio variable x = u
        let mut factor = TruncatedSeries::one(roster.clone(), trunc);
        for s in 0..d {
            let num = bow::series::expand_rational_factor(
                &roster,
                trunc,
                &hbar.inv().unwrap().mul(&q.pow_i64(s).unwrap()),
                &[0, 1],
                false,
            )
            .unwrap();
            let den = bow::series::expand_rational_factor(
                &roster,
                trunc,
                &q.pow_i64(s + 1).unwrap(),
                &[0, 1],
                true,
            )
            .unwrap();
            factor = factor.mul(&num).unwrap().mul(&den).unwrap();
        }
        out = out.add(&factor.shift_mul(&[d, 0], &scalar_part)).unwrap();
    }
    out
}

#[test]
fn acceptance() {
    let config = RunConfig::default();

    run(Criterion { name: "1 T*P1 closed forms (order 6, exact)", budget_secs: 1.0 }, || {
        let trunc = Truncation::new(6, 6);
        let d = BraneDiagram::parse("/1/2\\1\\")?;
        let params = rational_point(2);
        let oracle = tp1_phi21_series(&params, trunc);
        let mut worst = 0.0f64;
        let mut ok = true;
        for f in enumerate_fixed_points(&d) {
            for engine in ["flag", "rpp"] {
                let v = if engine == "flag" {
                    bow::vertex::vertex_flag(&d, &f, &params, Mode::Expansion, trunc)?
                } else {
                    bow::vertex::vertex_rpp(&d, &f, &params, Mode::Expansion, trunc)?
                };
                // both fixed points have the same closed form in their own
                // chamber ratio variable
                let cmp = series_equal(&v.series, &oracle, trunc)?;
                ok &= cmp.equal;
                worst = worst.max(cmp.max_abs_difference);
            }
        }
        Ok((ok, worst, "both fixed points, both engines vs 2phi1".into()))
    });

    run(Criterion { name: "2 fixed-point combinatorics (corpus)", budget_secs: 10.0 }, || {
        let report = bow::suites::suite_fixed_points(&config);
        let parse = bow::suites::suite_parse(&config);
        let n = bow::corpus::combinatorics_corpus().len();
        Ok((
            report.failures == 0 && parse.failures == 0 && n >= 40,
            (report.failures + parse.failures) as f64,
            format!("{n} diagrams, HW/duality/Gale-Ryser + printed 6x5 data"),
        ))
    });

    run(Criterion { name: "3 Macdonald eigen-equation (4,4) exact", budget_secs: 120.0 }, || {
        let trunc = Truncation::new(4, 4);
        let mut worst = 0.0f64;
        let mut diagrams = 0;
        for d in cap(bow::corpus::weight_one_separated()) {
            let params = rational_point(d.n_d5());
            for f in enumerate_fixed_points(&d) {
                worst = worst.max(bow::macdonald::verify_eigen_equation(&d, &f, &params, trunc)?);
            }
            diagrams += 1;
        }
        for cosep in cap(bow::corpus::weight_one_coseparated()) {
            let params = rational_point(cosep.n_d5());
            for f in enumerate_fixed_points(&cosep) {
                worst =
                    worst.max(bow::macdonald::verify_eigen_equation(&cosep, &f, &params, trunc)?);
            }
            diagrams += 1;
        }
        Ok((worst == 0.0 && (diagrams >= 8 || !full_scope()), worst, format!("{diagrams} diagrams, sep + cosep")))
    });

    run(Criterion { name: "4 oracle equivalence solve_qde (3,3)", budget_secs: 120.0 }, || {
        let trunc = Truncation::new(3, 3);
        let mut worst = 0.0f64;
        let mut count = 0;
        for d in cap(bow::corpus::weight_one_separated()) {
            let params = rational_point(d.n_d5());
            for f in enumerate_fixed_points(&d) {
                worst = worst
                    .max(bow::macdonald::solve_qde_matches_localization(&d, &f, &params, trunc)?);
                count += 1;
            }
        }
        Ok((worst == 0.0, worst, format!("{count} fixed points")))
    });

    run(Criterion { name: "5 HW shifts (aggregate, order 5)", budget_secs: 60.0 }, || {
        let trunc = Truncation::new(5, 0);
        let mut worst = 0.0f64;
        let mut ok = true;
        let mut tp1_power = 0;
        for d in cap(bow::corpus::weight_one_separated()) {
            let params = rational_point(d.n_d5());
            let report = bow::vertex::hw_aggregate_check(&d, &params, trunc)?;
            worst = worst.max(report.residual);
            ok &= report.per_move_ok;
            if d.render() == "/1/2\\1\\" {
                tp1_power = report.corcosep_power;
            }
        }
        ok &= tp1_power == 2;
        Ok((ok && worst == 0.0, worst, "per-move audit + T*P1 net q^2".into()))
    });

    run(Criterion { name: "6 D5 split-order independence (order 4)", budget_secs: 120.0 }, || {
        let trunc = Truncation::new(4, 0);
        let collapse = {
            let d = BraneDiagram::parse("/1/2\\")?;
            let f = &enumerate_fixed_points(&d)[0];
            bow::resolutions::verify_d5(&d, 0, 1, 1, f, &rational_point(1), trunc)?
        };
        let mut worst = collapse;
        let mut heavy = 0;
        for d in bow::corpus::heavy_d5_separated() {
            let params = rational_point(d.n_d5());
            for (j, &w) in d.d5_weights().iter().enumerate() {
                if w < 2 {
                    continue;
                }
                for f in enumerate_fixed_points(&d).iter().take(3) {
                    worst = worst
                        .max(bow::resolutions::d5_split_order_residual(&d, j, f, &params, trunc)?);
                }
            }
            heavy += 1;
        }
        Ok((worst == 0.0 && heavy >= 4, worst, format!("{heavy} heavy diagrams + collapse case")))
    });

    run(Criterion { name: "7 NS5 property (psi*, const ratio, closed form)", budget_secs: 120.0 }, || {
        let report = bow::suites::suite_ns5(&config);
        let worst = report.checks.iter().map(|c| c.residual).fold(0.0f64, f64::max);
        Ok((report.failures == 0, worst, "operator + tangent + const ratio + 50 float samples".into()))
    });

    run(Criterion { name: "8 mirror hbar=1 degeneration (3,3) exact", budget_secs: 180.0 }, || {
        let trunc = Truncation::new(3, 3);
        let q_sqrt = Scalar::rat(1, 3);
        let mut diagrams = 0;
        let mut ok = true;
        let mut heavy_present = false;
        let mut list = bow::corpus::weight_one_separated();
        list.truncate(6);
        for t in ["/2\\1\\", "/1/2\\", "/2/3\\2\\1\\", "/1/3\\1\\", "/1/4\\1\\"] {
            list.push(BraneDiagram::parse(t)?);
        }
        for d in list {
            heavy_present |= d.ns5_weights().iter().any(|&w| w >= 2)
                || d.d5_weights().iter().any(|&w| w >= 2);
            for f in enumerate_fixed_points(&d) {
                let rep = bow::mirror::hbar1_degeneration_check(&d, &f, &q_sqrt, trunc)?;
                ok &= rep.q_independent && rep.matches_tangent_product;
            }
            diagrams += 1;
        }
        Ok((ok && heavy_present && (diagrams >= 8 || !full_scope()), 0.0, format!("{diagrams} diagrams, every fixed point")))
    });

    run(Criterion { name: "9 full T*P1 mirror symmetry", budget_secs: 60.0 }, || {
        let samples = bow::mirror::tp1_mirror_check(25, config.seed, config.n_terms)?;
        let worst_eq = samples
            .iter()
            .map(|s| s.residual_f1.max(s.residual_f2))
            .fold(0.0f64, f64::max);
        // independent Heine/Watson residuals at 100 seeded points
        let mut rng = bow::rng::SplitMix64::new(config.seed.wrapping_add(3));
        let mut worst_hw = 0.0f64;
        let mut done = 0;
        while done < 100 {
            let q = rng.range(0.03, 0.2);
            let params = ParameterPoint::new(
                vec![Scalar::cplx(1.0, 0.0)],
                Scalar::cplx(0.7, 0.0),
                Scalar::cplx(q.sqrt(), 0.0),
            )?;
            let a = Scalar::cplx(rng.range(0.1, 0.9), 0.0);
            let b = Scalar::cplx(rng.range(0.05, 0.7), 0.0);
            let c = Scalar::cplx(rng.range(0.1, 0.9), 0.0);
            let z = Scalar::cplx(rng.range(0.05, 0.7), 0.0);
            let zarg = c.mul(&params.q()).div(&a.mul(&b).mul(&z))?.abs();
            if zarg > 0.7 {
                continue;
            }
            let h = match bow::scalar::heine_residual(&a, &b, &c, &z, config.n_terms, &params) {
                Ok(r) => r,
                Err(_) => continue,
            };
            let w = match bow::scalar::watson_residual(&a, &b, &c, &z, config.n_terms, &params) {
                Ok(r) => r,
                Err(_) => continue,
            };
            worst_hw = worst_hw.max(h).max(w);
            done += 1;
        }
        Ok((
            worst_eq < 1e-8 && worst_hw < 1e-9,
            worst_eq.max(worst_hw),
            "25 mirror points + 100 kernel points".into(),
        ))
    });

    run(Criterion { name: "10 special-function kernel", budget_secs: 5.0 }, || {
        let p = ParameterPoint::new(
            vec![Scalar::cplx(2.0, 0.0)],
            Scalar::cplx(0.5f64.sqrt(), 0.0),
            Scalar::cplx(0.1f64.sqrt(), 0.0),
        )?;
        let n = bow::scalar::default_phi_terms(&p);
        let mut worst = 0.0f64;
        // theta quasi-period theta(q^k x) = (-1)^k q^{-k^2/2} x^{-k} theta(x)
        let x = Scalar::cplx(2.0, 0.0);
        let th = bow::scalar::theta(&x, n, &p)?;
        for k in -2..=2i64 {
            let lhs = bow::scalar::theta(&p.q().pow_i64(k)?.mul(&x), n, &p)?.div(&th)?;
            let sign = if k.rem_euclid(2) == 1 { -1.0 } else { 1.0 };
            let rhs = Scalar::cplx(sign, 0.0)
                .mul(&p.q_sqrt.pow_i64(-k * k)?)
                .mul(&x.pow_i64(-k)?);
            worst = worst.max(lhs.sub(&rhs).abs());
        }
        // delta quasi-period delta(q x, y)/delta(x, y) = y^{-1}
        let y = Scalar::cplx(3.0, 0.0);
        let d0 = bow::scalar::delta(&x, &y, n, &p)?;
        let d1 = bow::scalar::delta(&p.q().mul(&x), &y, n, &p)?;
        worst = worst.max(d1.div(&d0)?.sub(&y.inv()?).abs());
        let float_ok = worst < 1e-12;
        // negative Pochhammer identity, exact rationals, d = 1..6
        let pr = rational_point(1);
        let q = pr.q();
        let xr = Scalar::rat(5, 7);
        let mut exact_ok = true;
        for d in 1..=6i64 {
            let lhs = pochhammer(&xr, -d, &pr)?;
            let pref = q.div(&xr)?.neg().pow_i64(d)?;
            let rhs = pref
                .mul(&q.pow_i64(d * (d - 1) / 2)?)
                .div(&pochhammer(&q.div(&xr)?, d, &pr)?)?;
            exact_ok &= lhs.eq_scalar(&rhs);
        }
        Ok((float_ok && exact_ok, worst, "theta/delta quasi-periods + (x)_{-d} identity".into()))
    });
}
