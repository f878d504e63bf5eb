//! The bundled diagram corpus driving the verification suites: the worked
//! examples plus a deterministic sweep of small separated diagrams.

use crate::brane::BraneDiagram;

/// Named diagrams from the worked examples.
pub const TP1: &str = "/1/2\\1\\";
pub const TP1_COSEP: &str = "\\1\\2/1/";
pub const GR02: &str = "/2\\1\\";
pub const D5_COLLAPSE: &str = "/1/2\\";
pub const TRIVIAL: &str = "/\\";
pub const SIX_BY_FIVE: &str = "/2\\2/2\\4/3/3/4\\3/2\\2\\";
pub const ELEVEN_BRANE: &str = "/1/2\\2/2/3\\3\\3/2\\2/1\\1/";

/// Separated diagrams with weight-one D5 branes (complete and partial flags),
/// m, n <= 4. These feed the Macdonald and oracle suites.
pub fn weight_one_separated() -> Vec<BraneDiagram> {
    let texts = [
        "/1/2\\1\\",
        "/1/2/3\\2\\1\\",
        "/1/2/3/4\\3\\2\\1\\",
        "/1/3\\2\\1\\",
        "/2/3\\2\\1\\",
        "/2/4\\3\\2\\1\\",
        "/3/4\\3\\2\\1\\",
        "/1/4\\3\\2\\1\\",
        "/2/3/4\\3\\2\\1\\",
        "/1/3/4\\3\\2\\1\\",
        "/1/2/4\\3\\2\\1\\",
    ];
    texts
        .iter()
        .filter_map(|t| BraneDiagram::parse(t).ok())
        .filter(|d| {
            d.is_separated()
                && d.d5_weights().iter().all(|&w| w == 1)
                && d.gale_ryser_nonempty()
        })
        .collect()
}

/// Co-separated diagrams with weight-one D5 branes (the D5 charge is m - 1),
/// feeding the co-separated eigen-equation checks.
pub fn weight_one_coseparated() -> Vec<BraneDiagram> {
    let charge_lists: &[(&[i64], &[i64])] = &[
        (&[1, 1], &[1, 1]),
        (&[2, 1, 1], &[2, 2]),
        (&[1, 2, 1], &[2, 2]),
        (&[1, 1, 2], &[2, 2]),
        (&[2, 2, 2], &[2, 2, 2]),
        (&[3, 2, 1], &[2, 2, 2]),
        (&[1, 2, 3], &[2, 2, 2]),
        (&[2, 2, 1, 1], &[3, 3]),
        (&[1, 2, 2, 1], &[3, 3]),
        (&[3, 1, 2], &[2, 2, 2]),
    ];
    charge_lists
        .iter()
        .filter_map(|(r, c)| BraneDiagram::coseparated_from_charges(r, c).ok())
        .filter(|d| {
            d.d5_weights().iter().all(|&w| w == 1)
                && !crate::fixed_points::enumerate_fixed_points(d).is_empty()
        })
        .collect()
}

/// Separated diagrams containing a D5 brane of weight 2 or 3.
pub fn heavy_d5_separated() -> Vec<BraneDiagram> {
    let texts = [
        "/1/2\\",
        "/1/3\\1\\",
        "/3\\1\\",
        "/1/4\\1\\",
        "/4\\1\\",
        "/2/3\\1\\",
        "/1/2/3\\1\\",
        "/2/4\\2\\",
        "/1/3\\2\\",
        "/2/4\\1\\1\\",
    ];
    texts
        .iter()
        .filter_map(|t| BraneDiagram::parse(t).ok())
        .filter(|d| {
            d.is_separated()
                && d.d5_weights().iter().any(|&w| w >= 2)
                && d.gale_ryser_nonempty()
                && !crate::fixed_points::enumerate_fixed_points(d).is_empty()
        })
        .collect()
}

/// The combinatorics sweep: every separated diagram built from charge vectors
/// with m, n <= 4 and entries <= 4 that is feasible, up to roughly forty.
pub fn combinatorics_corpus() -> Vec<BraneDiagram> {
    let mut out: Vec<BraneDiagram> = vec![];
    for t in [TP1, TP1_COSEP, GR02, D5_COLLAPSE, TRIVIAL, ELEVEN_BRANE] {
        if let Ok(d) = BraneDiagram::parse(t) {
            out.push(d);
        }
    }
    let charge_lists: &[(&[i64], &[i64])] = &[
        (&[1, 1], &[1, 1]),
        (&[2], &[1, 1]),
        (&[1, 1], &[2]),
        (&[2, 1], &[1, 1, 1]),
        (&[1, 1, 1], &[2, 1]),
        (&[1, 2], &[2, 1]),
        (&[2, 2], &[1, 1, 1, 1]),
        (&[1, 1, 1], &[1, 1, 1]),
        (&[2, 1, 1], &[2, 1, 1]),
        (&[3, 1], &[1, 1, 1, 1]),
        (&[2, 2], &[2, 1, 1]),
        (&[1, 1, 1, 1], &[2, 2]),
        (&[3, 2], &[2, 2, 1]),
        (&[2, 1], &[3]),
        (&[3], &[1, 1, 1]),
        (&[4], &[1, 1, 1, 1]),
        (&[1, 3], &[2, 2]),
        (&[2, 2, 1], &[2, 2, 1]),
        (&[1, 2, 1], &[2, 1, 1]),
        (&[3, 1, 1], &[2, 2, 1]),
        (&[2, 3], &[2, 2, 1]),
        (&[1, 1, 2], &[2, 2]),
        (&[2, 1, 1, 1], &[2, 2, 1]),
        (&[1, 1, 1, 1], &[1, 1, 1, 1]),
        (&[4, 2], &[2, 2, 1, 1]),
        (&[2, 2, 2], &[3, 2, 1]),
        (&[3, 2, 1], &[2, 2, 2]),
        (&[1, 2, 3], &[3, 2, 1]),
        (&[2, 4], &[2, 2, 1, 1]),
        (&[3, 3], &[2, 2, 1, 1]),
        (&[1, 2, 2], &[2, 2, 1]),
        (&[2, 2, 1, 1], &[3, 2, 1]),
        (&[4, 1, 1], &[2, 2, 2]),
        (&[1, 4], &[2, 1, 1, 1]),
        (&[2, 1, 2], &[2, 2, 1]),
        (&[3, 1, 2], &[2, 2, 2]),
        (&[1, 1, 2, 2], &[2, 2, 2]),
        (&[2, 2, 2, 2], &[4, 2, 1, 1]),
        (&[4, 3], &[2, 2, 2, 1]),
        (&[1, 3, 2], &[3, 2, 1]),
        (&[2, 3, 1], &[3, 2, 1]),
        (&[3, 2, 2], &[3, 2, 2]),
    ];
    for (r, c) in charge_lists {
        if let Ok(d) = BraneDiagram::separated_from_charges(r, c) {
            if !out.contains(&d) {
                out.push(d);
            }
        }
    }
    out
}
