//! Brane diagrams: the DSL, charges and weights, Hanany-Witten moves,
//! separated/co-separated normal forms, duality, and Gale-Ryser feasibility.
//!
//! The DSL matches the inline notation: "/" is an NS5 brane, "\" is a D5 brane,
//! and the non-negative integer between two branes is the D3 multiplicity.
//! Multiplicity outside the outermost branes is implicitly 0.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{BowError, Result};

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum BraneKind {
    Ns5,
    D5,
}

/// One 5-brane with its stable label (Z_k or A_k, assigned at parse time and
/// preserved by HW moves).
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct Brane {
    pub kind: BraneKind,
    /// 0-based index among branes of the same kind in the original diagram.
    pub label: usize,
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct BraneDiagram {
    pub branes: Vec<Brane>,
    /// dims.len() == branes.len() - 1
    pub dims: Vec<u32>,
}

/// One Hanany-Witten move in a replayable log.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct HwMove {
    /// Position of the left brane of the swapped pair before the move.
    pub position: usize,
    /// Kahler gap index (0-based) whose variable picks up the q-shift when a D5
    /// moves from the right to the left of an NS5 brane, if any.
    pub gap_shifted: Option<usize>,
    /// +1 when the D5 moved right-to-left, -1 for the inverse move.
    pub direction: i8,
}

impl BraneDiagram {
    /// Parse the DSL: brane, then repeated (integer, brane). Whitespace ignored.
    pub fn parse(text: &str) -> Result<BraneDiagram> {
        let mut branes = vec![];
        let mut dims = vec![];
        let mut expecting_brane = true;
        let mut pending_int: Option<u32> = None;
        let mut n_ns5 = 0;
        let mut n_d5 = 0;
        let bytes = text.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            let ch = bytes[i] as char;
            if ch.is_whitespace() {
                i += 1;
                continue;
            }
            match ch {
                '/' | '\\' => {
                    if !expecting_brane && pending_int.is_none() {
                        // two branes in a row means multiplicity 0 between them
                        dims.push(0);
                    } else if let Some(d) = pending_int.take() {
                        dims.push(d);
                    }
                    let kind = if ch == '/' { BraneKind::Ns5 } else { BraneKind::D5 };
                    let label = match kind {
                        BraneKind::Ns5 => {
                            n_ns5 += 1;
                            n_ns5 - 1
                        }
                        BraneKind::D5 => {
                            n_d5 += 1;
                            n_d5 - 1
                        }
                    };
                    branes.push(Brane { kind, label });
                    expecting_brane = false;
                    i += 1;
                }
                '0'..='9' => {
                    if expecting_brane {
                        return Err(BowError::Parse(
                            "diagram must start with a brane".into(),
                            i,
                        ));
                    }
                    if pending_int.is_some() {
                        return Err(BowError::Parse(
                            "two integers adjacent without a brane between them".into(),
                            i,
                        ));
                    }
                    let start = i;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                    let d: u32 = text[start..i]
                        .parse()
                        .map_err(|_| BowError::Parse("bad multiplicity".into(), start))?;
                    pending_int = Some(d);
                }
                _ => {
                    return Err(BowError::Parse(format!("unexpected character {ch:?}"), i));
                }
            }
        }
        if branes.is_empty() {
            return Err(BowError::Parse("empty input".into(), 0));
        }
        if pending_int.is_some() {
            return Err(BowError::Parse("diagram must end with a brane".into(), bytes.len()));
        }
        Ok(BraneDiagram { branes, dims })
    }

    /// Canonical DSL rendering; render(parse(t)) is the canonical form of t.
    pub fn render(&self) -> String {
        let mut s = String::new();
        for (i, b) in self.branes.iter().enumerate() {
            s.push(match b.kind {
                BraneKind::Ns5 => '/',
                BraneKind::D5 => '\\',
            });
            if i < self.dims.len() {
                s.push_str(&self.dims[i].to_string());
            }
        }
        s
    }

    pub fn n_ns5(&self) -> usize {
        self.branes.iter().filter(|b| b.kind == BraneKind::Ns5).count()
    }

    pub fn n_d5(&self) -> usize {
        self.branes.iter().filter(|b| b.kind == BraneKind::D5).count()
    }

    /// Multiplicity immediately left of brane position p (0 outside).
    pub fn dim_left(&self, p: usize) -> u32 {
        if p == 0 {
            0
        } else {
            self.dims[p - 1]
        }
    }

    /// Multiplicity immediately right of brane position p (0 outside).
    pub fn dim_right(&self, p: usize) -> u32 {
        if p == self.dims.len() {
            0
        } else {
            self.dims[p]
        }
    }

    /// Positions of NS5 branes, left to right.
    pub fn ns5_positions(&self) -> Vec<usize> {
        self.branes
            .iter()
            .enumerate()
            .filter_map(|(p, b)| (b.kind == BraneKind::Ns5).then_some(p))
            .collect()
    }

    pub fn d5_positions(&self) -> Vec<usize> {
        self.branes
            .iter()
            .enumerate()
            .filter_map(|(p, b)| (b.kind == BraneKind::D5).then_some(p))
            .collect()
    }

    /// Charge vectors (r, c): r_k = ch(Z_k), c_j = ch(A_j), labelled left to right.
    pub fn charges(&self) -> (Vec<i64>, Vec<i64>) {
        let mut r = vec![];
        let mut c = vec![];
        let mut d5_left = 0i64;
        for (p, b) in self.branes.iter().enumerate() {
            match b.kind {
                BraneKind::Ns5 => {
                    let jump = self.dim_right(p) as i64 - self.dim_left(p) as i64;
                    r.push(jump + d5_left);
                }
                BraneKind::D5 => d5_left += 1,
            }
        }
        let mut ns5_right = 0i64;
        for (p, b) in self.branes.iter().enumerate().rev() {
            match b.kind {
                BraneKind::D5 => {
                    let jump = self.dim_left(p) as i64 - self.dim_right(p) as i64;
                    c.push(jump + ns5_right);
                }
                BraneKind::Ns5 => ns5_right += 1,
            }
        }
        c.reverse();
        (r, c)
    }

    /// Local multiplicity jump |d+ - d-| at brane position p.
    pub fn weight_at(&self, p: usize) -> u32 {
        self.dim_right(p).abs_diff(self.dim_left(p))
    }

    /// Weights of NS5 branes, left to right.
    pub fn ns5_weights(&self) -> Vec<u32> {
        self.ns5_positions().iter().map(|&p| self.weight_at(p)).collect()
    }

    pub fn d5_weights(&self) -> Vec<u32> {
        self.d5_positions().iter().map(|&p| self.weight_at(p)).collect()
    }

    pub fn is_separated(&self) -> bool {
        let mut seen_d5 = false;
        for b in &self.branes {
            match b.kind {
                BraneKind::D5 => seen_d5 = true,
                BraneKind::Ns5 if seen_d5 => return false,
                _ => {}
            }
        }
        true
    }

    pub fn is_coseparated(&self) -> bool {
        let mut seen_ns5 = false;
        for b in &self.branes {
            match b.kind {
                BraneKind::Ns5 => seen_ns5 = true,
                BraneKind::D5 if seen_ns5 => return false,
                _ => {}
            }
        }
        true
    }

    /// Hanany-Witten transition at the adjacent pair (position, position + 1):
    /// d1 / d2 \ d3  <->  d1 \ (d1 + d3 - d2 + 1) / d3.
    pub fn hw_move(&self, position: usize) -> Result<(BraneDiagram, HwMove)> {
        if position + 1 >= self.branes.len() {
            return Err(BowError::Diagram("hw_move position out of range".into()));
        }
        let (b1, b2) = (self.branes[position], self.branes[position + 1]);
        if b1.kind == b2.kind {
            return Err(BowError::Diagram(
                "hw_move requires an adjacent NS5/D5 or D5/NS5 pair".into(),
            ));
        }
        let d1 = self.dim_left(position) as i64;
        let d2 = self.dims[position] as i64;
        let d3 = self.dim_right(position + 1) as i64;
        let new_mid = d1 + d3 - d2 + 1;
        if new_mid < 0 {
            return Err(BowError::Diagram(format!(
                "hw_move would create negative multiplicity {new_mid} (empty variety)"
            )));
        }
        let mut out = self.clone();
        out.branes.swap(position, position + 1);
        out.dims[position] = new_mid as u32;
        // when a D5 moves from the right to the left of NS5 brane Z_{k+1}, the
        // Kahler variable Q_k of the gap (Z_k, Z_{k+1}) picks up a factor q
        let (gap_shifted, direction) = match (b1.kind, b2.kind) {
            (BraneKind::Ns5, BraneKind::D5) => {
                // D5 moves right-to-left across this NS5 brane; affected gap is
                // the one ending at this NS5 brane, i.e. between it and the
                // previous NS5 brane.
                let ns5_index = self
                    .ns5_positions()
                    .iter()
                    .position(|&p| p == position)
                    .expect("position is an NS5 brane");
                (if ns5_index >= 1 { Some(ns5_index - 1) } else { None }, 1)
            }
            (BraneKind::D5, BraneKind::Ns5) => {
                let ns5_index = self
                    .ns5_positions()
                    .iter()
                    .position(|&p| p == position + 1)
                    .expect("position + 1 is an NS5 brane");
                (if ns5_index >= 1 { Some(ns5_index - 1) } else { None }, -1)
            }
            _ => unreachable!(),
        };
        Ok((out, HwMove { position, gap_shifted, direction }))
    }

    /// Move all NS5 branes to the left of all D5 branes.
    pub fn separate(&self) -> Result<(BraneDiagram, Vec<HwMove>)> {
        let mut d = self.clone();
        let mut log = vec![];
        loop {
            let mut moved = false;
            for p in 0..d.branes.len() - 1 {
                if d.branes[p].kind == BraneKind::D5 && d.branes[p + 1].kind == BraneKind::Ns5 {
                    let (nd, mv) = d.hw_move(p)?;
                    d = nd;
                    log.push(mv);
                    moved = true;
                    break;
                }
            }
            if !moved {
                return Ok((d, log));
            }
        }
    }

    /// Move all NS5 branes to the right of all D5 branes.
    pub fn coseparate(&self) -> Result<(BraneDiagram, Vec<HwMove>)> {
        let mut d = self.clone();
        let mut log = vec![];
        loop {
            let mut moved = false;
            for p in 0..d.branes.len() - 1 {
                if d.branes[p].kind == BraneKind::Ns5 && d.branes[p + 1].kind == BraneKind::D5 {
                    let (nd, mv) = d.hw_move(p)?;
                    d = nd;
                    log.push(mv);
                    moved = true;
                    break;
                }
            }
            if !moved {
                return Ok((d, log));
            }
        }
    }

    /// Swap NS5 and D5 branes in place, multiplicities unchanged.
    pub fn dual(&self) -> BraneDiagram {
        let mut n_ns5 = 0;
        let mut n_d5 = 0;
        let branes = self
            .branes
            .iter()
            .map(|b| match b.kind {
                BraneKind::Ns5 => {
                    n_d5 += 1;
                    Brane { kind: BraneKind::D5, label: n_d5 - 1 }
                }
                BraneKind::D5 => {
                    n_ns5 += 1;
                    Brane { kind: BraneKind::Ns5, label: n_ns5 - 1 }
                }
            })
            .collect();
        BraneDiagram { branes, dims: self.dims.clone() }
    }

    /// True iff a 0/1 matrix with row sums r and column sums c exists.
    pub fn gale_ryser_nonempty(&self) -> bool {
        let (r, c) = self.charges();
        gale_ryser(&r, &c)
    }

    /// The canonical co-separated diagram with NS5 charges `r` and D5 charges `c`.
    ///
    /// Used to realize the mirror dual concretely: the dual of a diagram with
    /// charges (r, c) is the co-separated diagram with charges (c, r).
    pub fn coseparated_from_charges(r: &[i64], c: &[i64]) -> Result<BraneDiagram> {
        let m = r.len();
        let n = c.len();
        if r.iter().sum::<i64>() != c.iter().sum::<i64>() {
            return Err(BowError::Diagram("charge sums differ".into()));
        }
        let mut dims: Vec<i64> = vec![];
        let mut cur = 0i64;
        for &cj in c {
            cur += m as i64 - cj;
            dims.push(cur);
        }
        for &rk in r.iter().take(m - 1) {
            cur += rk - n as i64;
            dims.push(cur);
        }
        if dims.iter().any(|&d| d < 0) {
            return Err(BowError::Diagram(format!(
                "no co-separated diagram with charges r = {r:?}, c = {c:?}"
            )));
        }
        let mut branes = vec![];
        for j in 0..n {
            branes.push(Brane { kind: BraneKind::D5, label: j });
        }
        for k in 0..m {
            branes.push(Brane { kind: BraneKind::Ns5, label: k });
        }
        Ok(BraneDiagram { branes, dims: dims.iter().map(|&d| d as u32).collect() })
    }

    /// The canonical separated diagram with the given charges.
    pub fn separated_from_charges(r: &[i64], c: &[i64]) -> Result<BraneDiagram> {
        let m = r.len();
        let n = c.len();
        if r.iter().sum::<i64>() != c.iter().sum::<i64>() {
            return Err(BowError::Diagram("charge sums differ".into()));
        }
        let mut dims: Vec<i64> = vec![];
        let mut cur = 0i64;
        for &rk in r {
            cur += rk;
            dims.push(cur);
        }
        for &cj in c.iter().take(n - 1) {
            cur -= cj;
            dims.push(cur);
        }
        if dims.iter().any(|&d| d < 0) {
            return Err(BowError::Diagram(format!(
                "no separated diagram with charges r = {r:?}, c = {c:?}"
            )));
        }
        let mut branes = vec![];
        for k in 0..m {
            branes.push(Brane { kind: BraneKind::Ns5, label: k });
        }
        for j in 0..n {
            branes.push(Brane { kind: BraneKind::D5, label: j });
        }
        Ok(BraneDiagram { branes, dims: dims.iter().map(|&d| d as u32).collect() })
    }

    /// The mirror dual realized co-separated: the canonical co-separated form
    /// of dual(D), whose charges are (m - c, n - r).
    pub fn mirror_coseparated(&self) -> Result<BraneDiagram> {
        let (r, c) = self.charges();
        let m = self.n_ns5() as i64;
        let n = self.n_d5() as i64;
        let r_dual: Vec<i64> = c.iter().map(|x| m - x).collect();
        let c_dual: Vec<i64> = r.iter().map(|x| n - x).collect();
        BraneDiagram::coseparated_from_charges(&r_dual, &c_dual)
    }
}

/// Gale-Ryser feasibility for a 0/1 matrix with row sums r and column sums c.
pub fn gale_ryser(r: &[i64], c: &[i64]) -> bool {
    if r.iter().any(|&x| x < 0) || c.iter().any(|&x| x < 0) {
        return false;
    }
    if r.iter().any(|&x| x > c.len() as i64) || c.iter().any(|&x| x > r.len() as i64) {
        return false;
    }
    let sr: i64 = r.iter().sum();
    let sc: i64 = c.iter().sum();
    if sr != sc {
        return false;
    }
    let mut rs: Vec<i64> = r.to_vec();
    rs.sort_unstable_by(|a, b| b.cmp(a));
    // sum_{i<=k} r_i <= sum_j min(c_j, k) for every k
    let mut prefix = 0i64;
    for k in 1..=rs.len() {
        prefix += rs[k - 1];
        let bound: i64 = c.iter().map(|&cj| cj.min(k as i64)).sum();
        if prefix > bound {
            return false;
        }
    }
    true
}

impl fmt::Display for BraneDiagram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    #[test]
    fn parse_tp1() {
        let d = BraneDiagram::parse("/1/2\\1\\").unwrap();
        assert_eq!(d.branes.len(), 4);
        assert_eq!(d.dims, vec![1, 2, 1]);
        let (r, c) = d.charges();
        assert_eq!(r, vec![1, 1]);
        assert_eq!(c, vec![1, 1]);
        assert_eq!(d.render(), "/1/2\\1\\");
    }

    #[test]
    fn parse_six_by_five_example() {
        let d = BraneDiagram::parse("/2\\2/2\\4/3/3/4\\3/2\\2\\").unwrap();
        let (r, c) = d.charges();
        assert_eq!(r, vec![2, 1, 1, 2, 3, 2]);
        assert_eq!(c, vec![5, 2, 2, 0, 2]);
    }

    #[test]
    fn parse_trivial_and_errors() {
        let d = BraneDiagram::parse("/\\").unwrap();
        assert_eq!(d.dims, vec![0]);
        assert!(BraneDiagram::parse("").is_err());
        assert!(BraneDiagram::parse("1/2\\").is_err());
        assert!(BraneDiagram::parse("/1 2\\").is_err());
        assert!(BraneDiagram::parse("/1/2\\1").is_err());
    }

    #[test]
    fn charges_zero_dims() {
        let d = BraneDiagram::parse("/\\/\\").unwrap();
        let (r, c) = d.charges();
        // r_i = #D5 left of Z_i, c_j = #NS5 right of A_j when all dims vanish
        assert_eq!(r, vec![0, 1]);
        assert_eq!(c, vec![1, 0]);
    }

    #[test]
    fn hw_move_tp1() {
        let d = BraneDiagram::parse("/1/2\\1\\").unwrap();
        // swap Z2 and A1 (positions 1, 2): 1 / 2 \ 1 -> 1 \ 1 / 1
        let (d2, _) = d.hw_move(1).unwrap();
        assert_eq!(d2.render(), "/1\\1/1\\");
        // involution
        let (d3, _) = d2.hw_move(1).unwrap();
        assert_eq!(d3, d);
    }

    #[test]
    fn coseparate_tp1() {
        let d = BraneDiagram::parse("/1/2\\1\\").unwrap();
        let (cosep, log) = d.coseparate().unwrap();
        assert_eq!(cosep.render(), "\\1\\2/1/");
        assert!(!log.is_empty());
        let (r, c) = cosep.charges();
        assert_eq!((r, c), (vec![1, 1], vec![1, 1]));
        // already co-separated input: identity log
        let (again, log2) = cosep.coseparate().unwrap();
        assert_eq!(again, cosep);
        assert!(log2.is_empty());
    }

    #[test]
    fn separate_eleven_brane_example() {
        let d = BraneDiagram::parse("/2\\2/2\\4/3/3/4\\3/2\\2\\").unwrap();
        let (r0, c0) = d.charges();
        let (sep, _) = d.separate().unwrap();
        assert!(sep.is_separated());
        assert_eq!(sep.charges(), (r0.clone(), c0.clone()));
        let (cosep, _) = d.coseparate().unwrap();
        assert!(cosep.is_coseparated());
        assert_eq!(cosep.charges(), (r0, c0));
    }

    #[test]
    fn separated_coseparated_canonical_reconstruction() {
        // separate/coseparate outputs are the unique diagrams for fixed charges
        let d = BraneDiagram::parse("/2\\2/2\\4/3/3/4\\3/2\\2\\").unwrap();
        let (r, c) = d.charges();
        let (sep, _) = d.separate().unwrap();
        assert_eq!(sep, BraneDiagram::separated_from_charges(&r, &c).unwrap());
        let (cosep, _) = d.coseparate().unwrap();
        assert_eq!(cosep, BraneDiagram::coseparated_from_charges(&r, &c).unwrap());
    }

    #[test]
    fn dual_involution_and_tp1() {
        let d = BraneDiagram::parse("/1/2\\1\\").unwrap();
        let dd = d.dual();
        assert_eq!(dd.render(), "\\1\\2/1/");
        assert_eq!(dd.dual(), d);
        // T*P1 charges swap under duality
        let (r, c) = d.charges();
        let (rd, cd) = dd.charges();
        assert_eq!((rd, cd), (c, r));
    }

    #[test]
    fn mirror_coseparated_tp1_matches_worked_example() {
        let d = BraneDiagram::parse("/1/2\\1\\").unwrap();
        let m = d.mirror_coseparated().unwrap();
        assert_eq!(m.render(), "\\1\\2/1/");
    }

    #[test]
    fn gale_ryser_cases() {
        assert!(gale_ryser(&[1, 1], &[1, 1]));
        assert!(gale_ryser(&[2], &[1, 1]));
        assert!(!gale_ryser(&[2], &[2, 0]));
        assert!(gale_ryser(&[2, 1, 1, 2, 3, 2], &[5, 2, 2, 0, 2]));
    }

    #[test]
    fn charge_invariance_under_random_hw_moves() {
        let mut rng = SplitMix64::new(42);
        let d0 = BraneDiagram::parse("/1/2\\1\\2/1\\").unwrap();
        let (r0, c0) = d0.charges();
        let mut d = d0;
        for _ in 0..50 {
            let candidates: Vec<usize> = (0..d.branes.len() - 1)
                .filter(|&p| {
                    d.branes[p].kind != d.branes[p + 1].kind && d.hw_move(p).is_ok()
                })
                .collect();
            if candidates.is_empty() {
                break;
            }
            let p = candidates[rng.below(candidates.len() as u64) as usize];
            d = d.hw_move(p).unwrap().0;
            assert_eq!(d.charges(), (r0.clone(), c0.clone()));
        }
    }

    #[test]
    fn gale_ryser_preserved_by_dual() {
        let diagrams = ["/1/2\\1\\", "/2\\1\\", "/1/2\\", "/2\\2/2\\", "/\\", "/3/1\\2\\2\\"];
        for t in diagrams {
            let d = BraneDiagram::parse(t).unwrap();
            assert_eq!(
                d.gale_ryser_nonempty(),
                d.dual().gale_ryser_nonempty(),
                "diagram {t}"
            );
        }
    }
}
