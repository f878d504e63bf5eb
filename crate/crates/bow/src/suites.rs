//! Verification suites, JSON reporting, and the on-disk result cache.
//!
//! Every check reports the anchor it verifies, its residual, and timing;
//! `run_suite` aggregates them with a nonzero failure count when any check
//! fails. Identical (config, seed) runs produce byte-identical reports apart
//! from the timing fields.

use std::path::PathBuf;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::brane::BraneDiagram;
use crate::error::{BowError, Result};
use crate::fixed_points::enumerate_fixed_points;
use crate::scalar::{ParameterPoint, Scalar};
use crate::series::{SeriesJson, TruncatedSeries, Truncation};
use crate::vertex::Mode;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunConfig {
    pub q_order: u32,
    pub u_order: u32,
    /// rational parameter assignments as "p/q" strings; defaults provided
    pub q_sqrt: String,
    pub hbar_sqrt: String,
    pub float_q: f64,
    pub float_hbar: f64,
    pub n_terms: usize,
    pub tolerance: f64,
    pub seed: u64,
    pub cache_dir: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            q_order: 4,
            u_order: 4,
            q_sqrt: "1/3".into(),
            hbar_sqrt: "1/2".into(),
            float_q: 0.1,
            float_hbar: 0.45,
            n_terms: 200,
            tolerance: 1e-9,
            seed: 1,
            cache_dir: None,
        }
    }
}

impl RunConfig {
    pub fn rational_point(&self, n: usize) -> Result<ParameterPoint> {
        let primes = [2i64, 3, 5, 7, 11, 13, 17];
        ParameterPoint::new(
            (0..n).map(|i| Scalar::rat(primes[i % 7], 19 + i as i64)).collect(),
            Scalar::parse_rational(&self.hbar_sqrt)?,
            Scalar::parse_rational(&self.q_sqrt)?,
        )
    }

    pub fn float_point(&self, a: Vec<f64>) -> Result<ParameterPoint> {
        ParameterPoint::new(
            a.into_iter().map(|x| Scalar::cplx(x, 0.0)).collect(),
            Scalar::cplx(self.float_hbar.sqrt(), 0.0),
            Scalar::cplx(self.float_q.sqrt(), 0.0),
        )
    }

    pub fn trunc(&self) -> Truncation {
        Truncation::new(self.q_order, self.u_order)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    /// short name of the identity this check verifies
    pub anchor: String,
    pub passed: bool,
    pub residual: f64,
    pub detail: String,
    pub millis: u128,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub checks: Vec<CheckResult>,
    pub failures: usize,
}

fn check(
    name: &str,
    anchor: &str,
    out: &mut Vec<CheckResult>,
    f: impl FnOnce() -> Result<(bool, f64, String)>,
) {
    let start = Instant::now();
    let (passed, residual, detail) = match f() {
        Ok(x) => x,
        Err(e) => (false, f64::INFINITY, format!("error: {e}")),
    };
    out.push(CheckResult {
        name: name.into(),
        anchor: anchor.into(),
        passed,
        residual,
        detail,
        millis: start.elapsed().as_millis(),
    });
}

fn finish(suite: &str, checks: Vec<CheckResult>) -> SuiteReport {
    let failures = checks.iter().filter(|c| !c.passed).count();
    SuiteReport { suite: suite.into(), checks, failures }
}

/// Parse suite: canonical round trips and the printed charge vectors.
pub fn suite_parse(_config: &RunConfig) -> SuiteReport {
    let mut checks = vec![];
    check("parse-roundtrip", "brane diagram DSL round-trip", &mut checks, || {
        for d in crate::corpus::combinatorics_corpus() {
            let back = BraneDiagram::parse(&d.render())?;
            if back != d {
                return Ok((false, 1.0, d.render()));
            }
        }
        Ok((true, 0.0, "all corpus diagrams round-trip".into()))
    });
    check("charges-6x5", "charge vectors of the 6x5 example", &mut checks, || {
        let d = BraneDiagram::parse(crate::corpus::SIX_BY_FIVE)?;
        let (r, c) = d.charges();
        let ok = r == vec![2, 1, 1, 2, 3, 2] && c == vec![5, 2, 2, 0, 2];
        Ok((ok, 0.0, format!("r = {r:?}, c = {c:?}")))
    });
    finish("parse", checks)
}

/// Fixed-point suite: counts invariant under HW moves and duality, Gale-Ryser
/// agreement, and the printed 6x5 table.
pub fn suite_fixed_points(config: &RunConfig) -> SuiteReport {
    let mut checks = vec![];
    check(
        "counts-hw-duality-gale-ryser",
        "fixed points = binary contingency tables",
        &mut checks,
        || {
            let mut rng = crate::rng::SplitMix64::new(config.seed);
            for d in crate::corpus::combinatorics_corpus() {
                let pts = enumerate_fixed_points(&d);
                if pts.is_empty() != !d.gale_ryser_nonempty() {
                    return Ok((false, 1.0, format!("Gale-Ryser mismatch at {}", d.render())));
                }
                // a few random HW moves preserve the count
                let mut moved = d.clone();
                for _ in 0..4 {
                    let candidates: Vec<usize> = (0..moved.branes.len() - 1)
                        .filter(|&p| moved.hw_move(p).is_ok())
                        .collect();
                    if candidates.is_empty() {
                        break;
                    }
                    moved = moved
                        .hw_move(candidates[rng.below(candidates.len() as u64) as usize])?
                        .0;
                }
                if enumerate_fixed_points(&moved).len() != pts.len() {
                    return Ok((false, 1.0, format!("HW count changed at {}", d.render())));
                }
                if enumerate_fixed_points(&d.dual()).len() != pts.len() {
                    return Ok((false, 1.0, format!("dual count changed at {}", d.render())));
                }
            }
            Ok((true, 0.0, format!("{} diagrams", crate::corpus::combinatorics_corpus().len())))
        },
    );
    check("printed-bct", "printed 6x5 contingency table", &mut checks, || {
        let d = BraneDiagram::parse(crate::corpus::SIX_BY_FIVE)?;
        let printed = crate::fixed_points::FixedPoint {
            bct: vec![
                vec![1, 1, 0, 0, 0],
                vec![1, 0, 0, 0, 0],
                vec![0, 0, 1, 0, 0],
                vec![1, 0, 1, 0, 0],
                vec![1, 1, 0, 0, 1],
                vec![1, 0, 0, 0, 1],
            ],
        };
        let ok = enumerate_fixed_points(&d).contains(&printed);
        Ok((ok, 0.0, "6x5 example".into()))
    });
    finish("fixed-points", checks)
}

/// Macdonald suite: eigen-equation residual exactly zero, separated and
/// co-separated, plus the oracle equivalence of the recursion solver.
pub fn suite_macdonald(config: &RunConfig) -> SuiteReport {
    let mut checks = vec![];
    let trunc = config.trunc();
    for d in crate::corpus::weight_one_separated() {
        let name = format!("eigen-separated {}", d.render());
        check(&name, "Macdonald eigen-equation", &mut checks, || {
            let params = config.rational_point(d.n_d5())?;
            let mut worst = 0.0f64;
            for f in enumerate_fixed_points(&d) {
                worst = worst.max(crate::macdonald::verify_eigen_equation(&d, &f, &params, trunc)?);
            }
            Ok((worst == 0.0, worst, format!("{} fixed points", enumerate_fixed_points(&d).len())))
        });
    }
    for cosep in crate::corpus::weight_one_coseparated() {
        let name = format!("eigen-coseparated {}", cosep.render());
        check(&name, "Macdonald eigen-equation", &mut checks, || {
            let params = config.rational_point(cosep.n_d5())?;
            let mut worst = 0.0f64;
            for f in enumerate_fixed_points(&cosep) {
                worst =
                    worst.max(crate::macdonald::verify_eigen_equation(&cosep, &f, &params, trunc)?);
            }
            Ok((worst == 0.0, worst, String::new()))
        });
    }
    check("solve-qde-oracle", "uniqueness recursion oracle", &mut checks, || {
        let small = Truncation::new(config.q_order.min(3), config.u_order.min(3));
        let mut worst = 0.0f64;
        let mut count = 0;
        for d in crate::corpus::weight_one_separated() {
            let params = config.rational_point(d.n_d5())?;
            for f in enumerate_fixed_points(&d) {
                worst = worst.max(crate::macdonald::solve_qde_matches_localization(
                    &d, &f, &params, small,
                )?);
                count += 1;
            }
        }
        Ok((worst == 0.0, worst, format!("{count} fixed points")))
    });
    finish("macdonald", checks)
}

/// Vertex suite: the two engines agree, constant terms are one, permutation
/// property, and the T*P1 closed forms.
pub fn suite_vertex(config: &RunConfig) -> SuiteReport {
    let mut checks = vec![];
    let trunc = config.trunc();
    check("engines-agree", "two localization engines agree", &mut checks, || {
        let mut worst = 0.0f64;
        for d in crate::corpus::weight_one_separated() {
            let params = config.rational_point(d.n_d5())?;
            for f in enumerate_fixed_points(&d) {
                let a = crate::vertex::vertex_rpp(&d, &f, &params, Mode::Numeric, trunc)?;
                let b = crate::vertex::vertex_flag(&d, &f, &params, Mode::Numeric, trunc)?;
                let cmp = crate::series::series_equal(&a.series, &b.series, trunc)?;
                if !cmp.equal {
                    worst = worst.max(cmp.max_abs_difference);
                }
            }
        }
        Ok((worst == 0.0, worst, String::new()))
    });
    check("permutation", "D5 permutation equivariance", &mut checks, || {
        let mut rng = crate::rng::SplitMix64::new(config.seed);
        let mut worst = 0.0f64;
        for d in crate::corpus::weight_one_separated().into_iter().take(5) {
            let n = d.n_d5();
            let params = config.rational_point(n)?;
            let mut perm: Vec<usize> = (0..n).collect();
            for i in (1..n).rev() {
                perm.swap(i, rng.below(i as u64 + 1) as usize);
            }
            for f in enumerate_fixed_points(&d).into_iter().take(2) {
                worst = worst.max(crate::vertex::permute_check(
                    &d,
                    &perm,
                    &f,
                    &params,
                    Truncation::new(trunc.q_order.min(3), 0),
                )?);
            }
        }
        Ok((worst == 0.0, worst, String::new()))
    });
    finish("vertex", checks)
}

/// HW suite: the aggregate co-separation shift and the per-move audit.
pub fn suite_hw(config: &RunConfig) -> SuiteReport {
    let mut checks = vec![];
    let trunc = Truncation::new(config.q_order.max(5), 0);
    for d in crate::corpus::weight_one_separated() {
        let name = format!("hw-aggregate {}", d.render());
        check(&name, "Hanany-Witten Kahler shift", &mut checks, || {
            let params = config.rational_point(d.n_d5())?;
            let report = crate::vertex::hw_aggregate_check(&d, &params, trunc)?;
            let ok = report.residual == 0.0 && report.per_move_ok;
            Ok((
                ok,
                report.residual,
                format!(
                    "corcosep power q^{}, polarization exponents {:?}",
                    report.corcosep_power, report.polarization_exponents
                ),
            ))
        });
    }
    finish("hw", checks)
}

/// D5 suite: split-order independence and the worked collapse case.
pub fn suite_d5(config: &RunConfig) -> SuiteReport {
    let mut checks = vec![];
    let trunc = Truncation::new(config.q_order.min(4), 0);
    check("collapse-case", "D5 collapse case", &mut checks, || {
        let d = BraneDiagram::parse(crate::corpus::D5_COLLAPSE)?;
        let f = &enumerate_fixed_points(&d)[0];
        let params = config.rational_point(d.n_d5())?;
        let r = crate::resolutions::verify_d5(&d, 0, 1, 1, f, &params, trunc)?;
        Ok((r == 0.0, r, String::new()))
    });
    for d in crate::corpus::heavy_d5_separated() {
        let name = format!("split-order {}", d.render());
        check(&name, "D5 resolution identity", &mut checks, || {
            let params = config.rational_point(d.n_d5())?;
            let weights = d.d5_weights();
            let mut worst = 0.0f64;
            for (j, &w) in weights.iter().enumerate() {
                if w < 2 {
                    continue;
                }
                for f in enumerate_fixed_points(&d).iter().take(3) {
                    worst = worst.max(crate::resolutions::d5_split_order_residual(
                        &d, j, f, &params, trunc,
                    )?);
                }
            }
            Ok((worst == 0.0, worst, String::new()))
        });
    }
    finish("d5", checks)
}

/// NS5 suite: operator and eigenvalue compatibility, the constant-ratio
/// cancellation, tangent relations, and the closed-form identity.
pub fn suite_ns5(config: &RunConfig) -> SuiteReport {
    let mut checks = vec![];
    check("operator-compat", "NS5 operator compatibility under psi*", &mut checks, || {
        let mut worst = 0.0f64;
        for (text, idx) in [("/2\\1\\", 0), ("/3\\2\\1\\", 0), ("/1/3\\2\\1\\", 1), ("/2/3\\2\\1\\", 0)] {
            let d = BraneDiagram::parse(text)?;
            let params = config.rational_point(d.n_d5())?;
            let w = d.ns5_weights()[idx];
            let res = crate::resolutions::ns5_resolve(&d, idx, 1, w - 1)?;
            for f in enumerate_fixed_points(&d).iter().take(2) {
                for resolved in crate::resolutions::resolutions_of(&res, f)?.iter().take(2) {
                    worst = worst.max(crate::resolutions::ns5_operator_compat(
                        &res, f, resolved, &params,
                    )?);
                }
            }
        }
        Ok((worst == 0.0, worst, String::new()))
    });
    check("tangent-relation", "NS5 tangent relation", &mut checks, || {
        let mut worst = 0u64;
        for (text, idx) in [("/2\\1\\", 0), ("/2/3\\2\\1\\", 0), ("/3\\2\\1\\", 0)] {
            let d = BraneDiagram::parse(text)?;
            let w = d.ns5_weights()[idx];
            let res = crate::resolutions::ns5_resolve(&d, idx, 1, w - 1)?;
            for f in enumerate_fixed_points(&d) {
                for resolved in crate::resolutions::resolutions_of(&res, &f)? {
                    worst = worst.max(crate::resolutions::tangent_relation_check(&res, &f, &resolved)?);
                }
            }
        }
        Ok((worst == 0, worst as f64, String::new()))
    });
    check("const-ratio", "NS5 constant-ratio cancellation", &mut checks, || {
        let params = config.rational_point(4)?;
        let mut leftovers = 0usize;
        for (text, idx, wl, wr) in [
            ("/2\\1\\", 0usize, 1u32, 1u32),
            ("/3/4\\3\\2\\1\\", 0, 1, 2),
            ("/3/4\\3\\2\\1\\", 0, 2, 1),
            ("/2/3\\2\\1\\", 0, 1, 1),
            ("/4\\3\\2\\1\\", 0, 2, 2),
        ] {
            let d = BraneDiagram::parse(text)?;
            let res = crate::resolutions::ns5_resolve(&d, idx, wl, wr)?;
            leftovers += crate::resolutions::const_ratio_check(&res, &params)?;
        }
        Ok((leftovers == 0, leftovers as f64, "resolved-brane-leftmost splits".into()))
    });
    check("closed-form", "NS5 closed-form specialization", &mut checks, || {
        let mut rng = crate::rng::SplitMix64::new(config.seed);
        let mut worst = 0.0f64;
        let mut done = 0;
        while done < 50 {
            let q = rng.range(0.05, 0.2);
            let hbar = rng.range(0.3, 0.7);
            let u = rng.range(0.05, 0.6) * hbar;
            let params = ParameterPoint::new(
                vec![Scalar::cplx(u, 0.0), Scalar::cplx(1.0, 0.0)],
                Scalar::cplx(hbar.sqrt(), 0.0),
                Scalar::cplx(q.sqrt(), 0.0),
            )?;
            match crate::resolutions::verify_ns5_closed_form(false, &params, config.n_terms) {
                Ok((psi, heine)) => {
                    worst = worst.max(psi).max(heine);
                    done += 1;
                }
                Err(_) => continue,
            }
        }
        Ok((worst < config.tolerance, worst, "50 seeded samples, both resolutions".into()))
    });
    check("lemma-L", "L-factor lemma", &mut checks, || {
        let d = BraneDiagram::parse("/2\\1\\")?;
        let res = crate::resolutions::ns5_resolve(&d, 0, 1, 1)?;
        let f = &enumerate_fixed_points(&d)[0];
        let mut rng = crate::rng::SplitMix64::new(config.seed.wrapping_add(7));
        let mut worst = 0.0f64;
        for _ in 0..10 {
            let params = ParameterPoint::new(
                vec![
                    Scalar::cplx(rng.range(0.1, 0.4), 0.0),
                    Scalar::cplx(rng.range(1.1, 1.9), 0.0),
                ],
                Scalar::cplx(rng.range(0.4, 0.8).sqrt(), 0.0),
                Scalar::cplx(rng.range(0.05, 0.15).sqrt(), 0.0),
            )?;
            for gbar in crate::resolutions::resolutions_of(&res, f)? {
                match crate::resolutions::lemma_l_check(&res, f, f, &gbar, &params, config.n_terms)
                {
                    Ok(r) => worst = worst.max(r),
                    Err(BowError::Pole(_)) => continue,
                    Err(e) => return Err(e),
                }
            }
        }
        Ok((worst < config.tolerance, worst, String::new()))
    });
    finish("ns5", checks)
}

/// Mirror degeneration suite: Q-independence and the tangent-weight product.
pub fn suite_mirror_hbar1(config: &RunConfig) -> SuiteReport {
    let mut checks = vec![];
    let trunc = Truncation::new(config.q_order.min(3), config.u_order.min(3));
    let q_sqrt = Scalar::parse_rational(&config.q_sqrt).unwrap_or(Scalar::rat(1, 3));
    let mut diagrams = crate::corpus::weight_one_separated();
    diagrams.truncate(6);
    for t in ["/2\\1\\", "/1/2\\", "/2/3\\2\\1\\", "/1/3\\1\\"] {
        if let Ok(d) = BraneDiagram::parse(t) {
            diagrams.push(d);
        }
    }
    for d in diagrams {
        let name = format!("hbar1 {}", d.render());
        check(&name, "mirror degeneration at hbar = 1", &mut checks, || {
            let mut ok = true;
            let mut worst = 0.0f64;
            for f in enumerate_fixed_points(&d) {
                let rep = crate::mirror::hbar1_degeneration_check(&d, &f, &q_sqrt, trunc)?;
                ok &= rep.q_independent && rep.matches_tangent_product;
                worst = worst.max(rep.max_abs_residual);
            }
            Ok((ok, worst, format!("{} fixed points", enumerate_fixed_points(&d).len())))
        });
    }
    finish("mirror-hbar1", checks)
}

/// Full T*P1 mirror suite.
pub fn suite_tp1(config: &RunConfig) -> SuiteReport {
    let mut checks = vec![];
    check("mirror-equations", "T*P1 mirror equations", &mut checks, || {
        let samples = crate::mirror::tp1_mirror_check(25, config.seed, config.n_terms)?;
        let worst = samples
            .iter()
            .map(|s| s.residual_f1.max(s.residual_f2))
            .fold(0.0f64, f64::max);
        Ok((worst < 1e-8, worst, "25 seeded admissible points".into()))
    });
    check("heine-watson", "Heine and Watson kernels", &mut checks, || {
        let mut rng = crate::rng::SplitMix64::new(config.seed.wrapping_add(3));
        let mut worst = 0.0f64;
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
            // keep the Watson argument comfortably inside the disk
            let zarg = c.mul(&params.q()).div(&a.mul(&b).mul(&z)).unwrap().abs();
            if zarg > 0.7 {
                continue;
            }
            let h = match crate::scalar::heine_residual(&a, &b, &c, &z, config.n_terms, &params) {
                Ok(r) => r,
                Err(_) => continue,
            };
            let w = match crate::scalar::watson_residual(&a, &b, &c, &z, config.n_terms, &params) {
                Ok(r) => r,
                Err(_) => continue,
            };
            worst = worst.max(h).max(w);
            done += 1;
        }
        Ok((worst < 1e-9, worst, "100 seeded admissible points".into()))
    });
    check("stab-signs", "stable envelope signs and quasi-periods", &mut checks, || {
        let params = ParameterPoint::new(
            vec![Scalar::cplx(1.0, 0.0), Scalar::cplx(1.0, 0.0)],
            Scalar::cplx(config.float_hbar.sqrt(), 0.0),
            Scalar::cplx(config.float_q.sqrt(), 0.0),
        )?;
        let r = crate::mirror::tp1_sign_check(&params, config.n_terms)?;
        Ok((r < config.tolerance, r, String::new()))
    });
    finish("tp1", checks)
}

pub fn run_suite(name: &str, config: &RunConfig) -> Result<Vec<SuiteReport>> {
    let all = [
        "parse",
        "fixed-points",
        "vertex",
        "macdonald",
        "d5",
        "ns5",
        "hw",
        "mirror-hbar1",
        "tp1",
    ];
    let names: Vec<&str> = if name == "all" {
        all.to_vec()
    } else if all.contains(&name) {
        vec![name]
    } else {
        return Err(BowError::Domain(format!("unknown suite {name:?}")));
    };
    Ok(names
        .into_iter()
        .map(|n| match n {
            "parse" => suite_parse(config),
            "fixed-points" => suite_fixed_points(config),
            "vertex" => suite_vertex(config),
            "macdonald" => suite_macdonald(config),
            "d5" => suite_d5(config),
            "ns5" => suite_ns5(config),
            "hw" => suite_hw(config),
            "mirror-hbar1" => suite_mirror_hbar1(config),
            "tp1" => suite_tp1(config),
            _ => unreachable!(),
        })
        .collect())
}

/// Content-addressed series cache: the key hashes the canonical JSON of the
/// provenance data, so concurrent writers of the same key are idempotent.
pub struct SeriesCache {
    pub dir: PathBuf,
}

/// FNV-1a over the canonical bytes.
pub fn content_hash(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

pub const CODE_VERSION_TAG: &str = "bow-0.1";

#[derive(Serialize)]
struct CacheKey<'a> {
    version: &'a str,
    diagram: &'a str,
    fixed_point: &'a [Vec<u8>],
    engine: &'a str,
    q_order: u32,
    u_order: u32,
    params: String,
}

impl SeriesCache {
    pub fn new(dir: impl Into<PathBuf>) -> Result<SeriesCache> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir)?;
        Ok(SeriesCache { dir })
    }

    pub fn key(
        &self,
        diagram: &BraneDiagram,
        f: &crate::fixed_points::FixedPoint,
        engine: &str,
        trunc: Truncation,
        params_tag: &str,
    ) -> Result<u64> {
        let key = CacheKey {
            version: CODE_VERSION_TAG,
            diagram: &diagram.render(),
            fixed_point: &f.bct,
            engine,
            q_order: trunc.q_order,
            u_order: trunc.u_order,
            params: params_tag.to_string(),
        };
        Ok(content_hash(serde_json::to_string(&key)?.as_bytes()))
    }

    fn path(&self, key: u64) -> PathBuf {
        self.dir.join(format!("{key:016x}.json"))
    }

    pub fn get(&self, key: u64) -> Option<TruncatedSeries> {
        let path = self.path(key);
        let bytes = std::fs::read(&path).ok()?;
        // integrity: stored as {hash, series}; mismatch is a miss
        let stored: serde_json::Value = serde_json::from_slice(&bytes).ok()?;
        let h = stored.get("hash")?.as_u64()?;
        let series = stored.get("series")?;
        let canonical = serde_json::to_string(series).ok()?;
        if content_hash(canonical.as_bytes()) != h {
            return None;
        }
        let j: SeriesJson = serde_json::from_value(series.clone()).ok()?;
        TruncatedSeries::from_json(&j).ok()
    }

    pub fn put(&self, key: u64, series: &TruncatedSeries) -> Result<()> {
        let j = series.to_json();
        // canonical form: serde_json::Value orders map keys, so hash that
        let canonical = serde_json::to_string(&serde_json::to_value(&j)?)?;
        let h = content_hash(canonical.as_bytes());
        let wrapped = serde_json::json!({ "hash": h, "series": j });
        let tmp = self.path(key).with_extension("tmp");
        std::fs::write(&tmp, serde_json::to_vec(&wrapped)?)?;
        std::fs::rename(&tmp, self.path(key))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::Roster;

    #[test]
    fn cache_roundtrip_and_integrity() {
        let dir = std::env::temp_dir().join(format!("bow-cache-test-{}", std::process::id()));
        let cache = SeriesCache::new(&dir).unwrap();
        let d = BraneDiagram::parse("/1/2\\1\\").unwrap();
        let f = &enumerate_fixed_points(&d)[0];
        let trunc = Truncation::new(2, 2);
        let mut s = TruncatedSeries::one(Roster::standard(1, 1), trunc);
        s.insert(vec![1, 1], Scalar::rat(3, 7));
        let key = cache.key(&d, f, "flag", trunc, "q=1/9").unwrap();
        assert!(cache.get(key).is_none());
        cache.put(key, &s).unwrap();
        let back = cache.get(key).unwrap();
        assert!(crate::series::series_equal(&s, &back, trunc).unwrap().equal);
        // version tag changes the key
        let key2 = cache.key(&d, f, "flag", trunc, "q=1/4").unwrap();
        assert_ne!(key, key2);
        // corrupted entry is treated as a miss
        std::fs::write(cache.path(key), b"{\"hash\": 1, \"series\": {}}").unwrap();
        assert!(cache.get(key).is_none());
        let _ = std::fs::remove_dir_all(&dir);
    }

    #[test]
    fn reports_are_deterministic() {
        // identical (config, seed) gives byte-identical reports up to timings
        let config = RunConfig { seed: 5, ..RunConfig::default() };
        let strip = |mut r: SuiteReport| {
            for c in &mut r.checks {
                c.millis = 0;
            }
            serde_json::to_string(&r).unwrap()
        };
        let a = strip(suite_fixed_points(&config));
        let b = strip(suite_fixed_points(&config));
        assert_eq!(a, b);
        let a = strip(suite_tp1(&config));
        let b = strip(suite_tp1(&config));
        assert_eq!(a, b);
    }

    #[test]
    fn suite_parse_passes() {
        let report = suite_parse(&RunConfig::default());
        assert_eq!(report.failures, 0);
    }
}
