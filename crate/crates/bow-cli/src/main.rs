//! Command-line surface for the bow crate: diagram combinatorics, fixed
//! points, vertex functions, and the verification suites.

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use bow::brane::BraneDiagram;
use bow::error::BowError;
use bow::fixed_points::enumerate_fixed_points;
use bow::series::Truncation;
use bow::suites::{run_suite, RunConfig, SeriesCache};
use bow::vertex::Mode;

#[derive(Parser)]
#[command(name = "bow", about = "Brane diagrams, fixed points and vertex functions")]
struct Cli {
    /// flat key = value config file
    #[arg(long, global = true)]
    config: Option<String>,
    /// emit compact JSON (reports are JSON either way)
    #[arg(long, global = true)]
    json: bool,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    cache_dir: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a diagram and print its combinatorial data
    Parse { dsl: String },
    /// Swap NS5 and D5 branes in place
    Dual { dsl: String },
    /// Apply Hanany-Witten moves to a normal form
    Hw {
        dsl: String,
        #[arg(long, value_parser = ["separated", "coseparated"])]
        to: String,
    },
    /// List the torus fixed points with their equivariant data
    FixedPoints { dsl: String },
    /// Compute a vertex function series (MSver normalization)
    Vertex {
        dsl: String,
        #[arg(long)]
        fixed_point: usize,
        #[arg(long, default_value_t = 4)]
        order: u32,
        #[arg(long, default_value_t = 3)]
        u_order: u32,
        #[arg(long, value_parser = ["numeric", "expansion"], default_value = "expansion")]
        mode: String,
        /// JSON file with {"a": ["p/q", ..], "hbar_sqrt": "p/q", "q_sqrt": "p/q"}
        #[arg(long)]
        params: Option<String>,
    },
    /// Run a verification suite
    Verify {
        /// parse | fixed-points | vertex | macdonald | d5 | ns5 | hw | mirror-hbar1 | tp1 | all
        suite: String,
        /// optional diagram for the targeted per-diagram checks
        dsl: Option<String>,
        /// orders Dq,Du for the targeted checks
        #[arg(long)]
        orders: Option<String>,
        /// D5/NS5 brane index for the resolution checks (0-based)
        #[arg(long)]
        brane: Option<usize>,
        /// split "w',w''" for the resolution checks
        #[arg(long)]
        split: Option<String>,
        #[arg(long)]
        tolerance: Option<f64>,
    },
}

fn diagram_json(d: &BraneDiagram) -> serde_json::Value {
    let (r, c) = d.charges();
    serde_json::json!({
        "diagram": d.render(),
        "branes": d.branes.iter().map(|b| match b.kind {
            bow::brane::BraneKind::Ns5 => format!("Z{}", b.label + 1),
            bow::brane::BraneKind::D5 => format!("A{}", b.label + 1),
        }).collect::<Vec<_>>(),
        "dims": d.dims,
        "r": r,
        "c": c,
        "ns5_weights": d.ns5_weights(),
        "d5_weights": d.d5_weights(),
        "separated": d.is_separated(),
        "coseparated": d.is_coseparated(),
    })
}

fn load_config(cli: &Cli) -> Result<RunConfig, BowError> {
    let mut config = RunConfig::default();
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path)?;
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| BowError::Parse(format!("bad config line {line:?}"), 0))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "q_order" => config.q_order = value.parse().map_err(bad(key))?,
                "u_order" => config.u_order = value.parse().map_err(bad(key))?,
                "q_sqrt" => config.q_sqrt = value.into(),
                "hbar_sqrt" => config.hbar_sqrt = value.into(),
                "float_q" => config.float_q = value.parse().map_err(bad(key))?,
                "float_hbar" => config.float_hbar = value.parse().map_err(bad(key))?,
                "n_terms" => config.n_terms = value.parse().map_err(bad(key))?,
                "tolerance" => config.tolerance = value.parse().map_err(bad(key))?,
                "seed" => config.seed = value.parse().map_err(bad(key))?,
                "cache_dir" => config.cache_dir = Some(value.into()),
                _ => return Err(BowError::Parse(format!("unknown config key {key:?}"), 0)),
            }
        }
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(dir) = &cli.cache_dir {
        config.cache_dir = Some(dir.clone());
    }
    Ok(config)
}

fn bad<E>(key: &str) -> impl Fn(E) -> BowError + '_ {
    move |_| BowError::Parse(format!("bad value for config key {key:?}"), 0)
}

fn parse_orders(orders: &Option<String>, config: &RunConfig) -> Result<Truncation, BowError> {
    match orders {
        None => Ok(config.trunc()),
        Some(text) => {
            let (a, b) = text
                .split_once(',')
                .ok_or_else(|| BowError::Parse("orders must be Dq,Du".into(), 0))?;
            Ok(Truncation::new(
                a.trim().parse().map_err(|_| BowError::Parse("bad Dq".into(), 0))?,
                b.trim().parse().map_err(|_| BowError::Parse("bad Du".into(), 0))?,
            ))
        }
    }
}

fn run(cli: &Cli) -> Result<serde_json::Value, BowError> {
    let mut config = load_config(cli)?;
    match &cli.command {
        Command::Parse { dsl } => {
            let d = BraneDiagram::parse(dsl)?;
            Ok(diagram_json(&d))
        }
        Command::Dual { dsl } => {
            let d = BraneDiagram::parse(dsl)?;
            Ok(diagram_json(&d.dual()))
        }
        Command::Hw { dsl, to } => {
            let d = BraneDiagram::parse(dsl)?;
            let (out, moves) = if to == "separated" { d.separate()? } else { d.coseparate()? };
            let mut j = diagram_json(&out);
            j["moves"] = serde_json::to_value(&moves)?;
            Ok(j)
        }
        Command::FixedPoints { dsl } => {
            let d = BraneDiagram::parse(dsl)?;
            let mut points = vec![];
            for f in enumerate_fixed_points(&d) {
                let sigma =
                    f.sigma().ok().map(|s| s.iter().map(|x| x + 1).collect::<Vec<_>>());
                let tangent = bow::resolutions::tangent_via_resolution(&d, &f).ok().map(|t| {
                    t.weights.iter().map(|(m, k)| format!("{k} * {m}")).collect::<Vec<_>>()
                });
                points.push(serde_json::json!({
                    "bct": f.bct,
                    "ties": f.ties().iter().map(|(i, j)| (i + 1, j + 1)).collect::<Vec<_>>(),
                    "sigma": sigma,
                    "epsilon": f.sign_epsilon(),
                    "tangent": tangent,
                }));
            }
            Ok(serde_json::json!({
                "diagram": d.render(),
                "count": points.len(),
                "fixed_points": points,
            }))
        }
        Command::Vertex { dsl, fixed_point, order, u_order, mode, params } => {
            let d = BraneDiagram::parse(dsl)?;
            let points = enumerate_fixed_points(&d);
            let f = points.get(*fixed_point).ok_or_else(|| {
                BowError::Domain(format!("fixed point index {fixed_point} out of range"))
            })?;
            let mode = if mode == "numeric" { Mode::Numeric } else { Mode::Expansion };
            let point = match params {
                None => config.rational_point(d.n_d5())?,
                Some(path) => {
                    let v: serde_json::Value =
                        serde_json::from_str(&std::fs::read_to_string(path)?)?;
                    let scalar = |v: &serde_json::Value| -> Result<bow::scalar::Scalar, BowError> {
                        serde_json::from_value(v.clone()).map_err(BowError::from)
                    };
                    let a = v
                        .get("a")
                        .and_then(|x| x.as_array())
                        .ok_or_else(|| BowError::Domain("params file needs an \"a\" list".into()))?
                        .iter()
                        .map(scalar)
                        .collect::<Result<Vec<_>, _>>()?;
                    let hbar_sqrt = scalar(
                        v.get("hbar_sqrt")
                            .ok_or_else(|| BowError::Domain("params file needs hbar_sqrt".into()))?,
                    )?;
                    let q_sqrt = scalar(
                        v.get("q_sqrt")
                            .ok_or_else(|| BowError::Domain("params file needs q_sqrt".into()))?,
                    )?;
                    bow::scalar::ParameterPoint::new(a, hbar_sqrt, q_sqrt)?
                }
            };
            let trunc = Truncation::new(*order, *u_order);
            let params_tag = format!(
                "q_sqrt={:?};hbar_sqrt={:?};a={:?};mode={mode:?}",
                point.q_sqrt, point.hbar_sqrt, point.a
            );
            let cache =
                config.cache_dir.as_ref().map(SeriesCache::new).transpose()?;
            let engine = if d.is_separated() { "resolved-flag" } else { "cosep-dictionary" };
            let key = cache
                .as_ref()
                .map(|c| c.key(&d, f, engine, trunc, &params_tag))
                .transpose()?;
            let mut cached = false;
            let series = match (&cache, key) {
                (Some(c), Some(k)) => match c.get(k) {
                    Some(s) => {
                        cached = true;
                        s
                    }
                    None => {
                        let v = bow::vertex::msver(&d, f, &point, mode, trunc)?;
                        c.put(k, &v.series)?;
                        v.series
                    }
                },
                _ => bow::vertex::msver(&d, f, &point, mode, trunc)?.series,
            };
            Ok(serde_json::json!({
                "diagram": d.render(),
                "fixed_point": f.bct,
                "engine": engine,
                "normalization": "msver",
                "cached": cached,
                "series": series.to_json(),
            }))
        }
        Command::Verify { suite, dsl, orders, brane, split, tolerance } => {
            let trunc = parse_orders(orders, &config)?;
            if let Some(t) = tolerance {
                config.tolerance = *t;
            }
            if let Some(dsl) = dsl {
                let d = BraneDiagram::parse(dsl)?;
                return targeted_verify(suite, &d, trunc, brane, split, &config);
            }
            let reports = run_suite(suite, &config)?;
            let failures: usize = reports.iter().map(|r| r.failures).sum();
            Ok(serde_json::json!({
                "suites": reports,
                "failures": failures,
            }))
        }
    }
}

fn targeted_verify(
    suite: &str,
    d: &BraneDiagram,
    trunc: Truncation,
    brane: &Option<usize>,
    split: &Option<String>,
    config: &RunConfig,
) -> Result<serde_json::Value, BowError> {
    let params = config.rational_point(d.n_d5())?;
    match suite {
        "macdonald" => {
            let residuals: Vec<f64> = enumerate_fixed_points(d)
                .iter()
                .map(|f| bow::macdonald::verify_eigen_equation(d, f, &params, trunc))
                .collect::<Result<_, _>>()?;
            Ok(serde_json::json!({
                "diagram": d.render(),
                "anchor": "Macdonald eigen-equation",
                "residuals": residuals,
                "passed": residuals.iter().all(|&r| r == 0.0),
            }))
        }
        "d5" => {
            let j = brane.ok_or_else(|| BowError::Domain("--brane required".into()))?;
            let (wl, wr) = parse_split(split)?;
            let mut residuals = vec![];
            for f in enumerate_fixed_points(d) {
                residuals.push(bow::resolutions::verify_d5(d, j, wl, wr, &f, &params, trunc)?);
            }
            Ok(serde_json::json!({
                "diagram": d.render(),
                "anchor": "D5 resolution identity",
                "residuals": residuals,
                "passed": residuals.iter().all(|&r| r == 0.0),
            }))
        }
        "ns5" => {
            let j = brane.ok_or_else(|| BowError::Domain("--brane required".into()))?;
            let (wl, wr) = parse_split(split)?;
            let res = bow::resolutions::ns5_resolve(d, j, wl, wr)?;
            let mut rows = vec![];
            let mut passed = true;
            for f in enumerate_fixed_points(d) {
                for resolved in bow::resolutions::resolutions_of(&res, &f)? {
                    let op = bow::resolutions::ns5_operator_compat(&res, &f, &resolved, &params)?;
                    let tangent = bow::resolutions::tangent_relation_check(&res, &f, &resolved)?;
                    passed &= op == 0.0 && tangent == 0;
                    rows.push(serde_json::json!({
                        "fixed_point": f.bct,
                        "resolution": resolved.bct,
                        "operator_residual": op,
                        "tangent_mismatches": tangent,
                    }));
                }
            }
            let leftover = bow::resolutions::const_ratio_check(&res, &params)?;
            let edge_regime = bow::resolutions::has_left_spectator_blocks(&res);
            Ok(serde_json::json!({
                "diagram": d.render(),
                "anchor": "NS5 operator compatibility under psi*",
                "const_ratio_leftover": leftover,
                "const_ratio_edge_regime": edge_regime,
                "rows": rows,
                "passed": passed && (leftover == 0 || edge_regime),
            }))
        }
        "hw" => {
            let report = bow::vertex::hw_aggregate_check(d, &params, trunc)?;
            Ok(serde_json::to_value(report)?)
        }
        "mirror-hbar1" => {
            let q_sqrt = bow::scalar::Scalar::parse_rational(&config.q_sqrt)?;
            let mut rows = vec![];
            let mut passed = true;
            for f in enumerate_fixed_points(d) {
                let rep = bow::mirror::hbar1_degeneration_check(d, &f, &q_sqrt, trunc)?;
                passed &= rep.q_independent && rep.matches_tangent_product;
                rows.push(serde_json::to_value(rep)?);
            }
            Ok(serde_json::json!({ "diagram": d.render(), "rows": rows, "passed": passed }))
        }
        other => {
            Err(BowError::Domain(format!("suite {other:?} does not take a diagram argument")))
        }
    }
}

fn parse_split(split: &Option<String>) -> Result<(u32, u32), BowError> {
    let text =
        split.as_ref().ok_or_else(|| BowError::Domain("--split w',w'' required".into()))?;
    let (a, b) = text
        .split_once(',')
        .ok_or_else(|| BowError::Parse("split must be w',w''".into(), 0))?;
    Ok((
        a.trim().parse().map_err(|_| BowError::Parse("bad split".into(), 0))?,
        b.trim().parse().map_err(|_| BowError::Parse("bad split".into(), 0))?,
    ))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let compact = cli.json;
    match run(&cli) {
        Ok(value) => {
            let text = if compact {
                serde_json::to_string(&value).expect("serializable")
            } else {
                serde_json::to_string_pretty(&value).expect("serializable")
            };
            println!("{text}");
            let failed = value
                .get("failures")
                .and_then(|f| f.as_u64())
                .map(|f| f > 0)
                .or_else(|| value.get("passed").and_then(|p| p.as_bool()).map(|p| !p))
                .unwrap_or(false);
            if failed {
                ExitCode::FAILURE
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
