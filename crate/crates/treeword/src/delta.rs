//! Sets in `Z^d` seen through a finite window: box densities, difference-set
//! membership, and block sequences whose combination sums land in `A - A`.

use std::collections::BTreeSet;
use std::io::{self, Write};

use num_rational::Ratio;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::expr::{parse_expr, PointExpr};
use crate::poly::IntPolyVec;
use crate::search::{check_well_formed, enumerate_combinations, search_with_goal, Blocks, Goal, SearchError, SearchInstance};
use crate::tree::{Node, ROOT};
use crate::words::{Symbol, Word};

/// Largest number of cells in a scene window.
pub const MAX_WINDOW_CELLS: u64 = 1 << 24;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DeltaError {
    #[error("empty window or box")]
    EmptyBox,
    #[error("box {lo:?}..{hi:?} is not inside the window")]
    OutsideWindow { lo: Vec<i64>, hi: Vec<i64> },
    #[error("window has more than {MAX_WINDOW_CELLS} cells")]
    WindowTooLarge,
    #[error("expected dimension {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("shift {0:?} exceeds the window span")]
    OutOfWindow(Vec<i64>),
    #[error("point file line {line}: {message}")]
    PointFile { line: usize, message: String },
    #[error("bad expression: {0}")]
    Expression(String),
    #[error("the polynomial map must vanish at the origin")]
    NonzeroAtOrigin,
    #[error(transparent)]
    Search(#[from] SearchError),
}

/// A set `A` restricted to the window `[lo, hi)`.
#[derive(Clone, Debug)]
pub struct DeltaScene {
    lo: Vec<i64>,
    hi: Vec<i64>,
    cells: Vec<bool>,
    members: Vec<Vec<i64>>,
}

fn ratio_text<S: Serializer>(r: &Ratio<u64>, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}

fn ratio_from_text<'de, D: Deserializer<'de>>(d: D) -> Result<Ratio<u64>, D::Error> {
    let text = String::deserialize(d)?;
    text.parse().map_err(|_| serde::de::Error::custom(format!("bad fraction '{text}'")))
}

impl DeltaScene {
    fn build(lo: Vec<i64>, hi: Vec<i64>, mut member: impl FnMut(&[i64]) -> bool) -> Result<Self, DeltaError> {
        if lo.len() != hi.len() {
            return Err(DeltaError::DimensionMismatch { expected: lo.len(), got: hi.len() });
        }
        if lo.is_empty() || lo.iter().zip(&hi).any(|(a, b)| a >= b) {
            return Err(DeltaError::EmptyBox);
        }
        let volume = lo
            .iter()
            .zip(&hi)
            .try_fold(1u64, |acc, (a, b)| acc.checked_mul((b - a) as u64))
            .filter(|&v| v <= MAX_WINDOW_CELLS)
            .ok_or(DeltaError::WindowTooLarge)?;
        let mut scene = DeltaScene {
            lo,
            hi,
            cells: vec![false; volume as usize],
            members: Vec::new(),
        };
        for i in 0..volume as usize {
            let point = scene.point_of(i);
            if member(&point) {
                scene.cells[i] = true;
                scene.members.push(point);
            }
        }
        Ok(scene)
    }

    /// `A = {x : expr(x) != 0}` on the window.
    pub fn from_predicate(predicate: &PointExpr, lo: Vec<i64>, hi: Vec<i64>) -> Result<Self, DeltaError> {
        if predicate.dim() != lo.len() {
            return Err(DeltaError::DimensionMismatch { expected: lo.len(), got: predicate.dim() });
        }
        Self::build(lo, hi, |x| predicate.eval(x) != 0)
    }

    /// `A` given by its points; points outside the window are dropped.
    pub fn from_points(points: &[Vec<i64>], lo: Vec<i64>, hi: Vec<i64>) -> Result<Self, DeltaError> {
        if let Some(p) = points.iter().find(|p| p.len() != lo.len()) {
            return Err(DeltaError::DimensionMismatch { expected: lo.len(), got: p.len() });
        }
        let set: BTreeSet<&[i64]> = points.iter().map(Vec::as_slice).collect();
        Self::build(lo, hi, |x| set.contains(x))
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn window(&self) -> (&[i64], &[i64]) {
        (&self.lo, &self.hi)
    }

    /// Points of `A` in the window, in row-major order.
    pub fn members(&self) -> &[Vec<i64>] {
        &self.members
    }

    fn point_of(&self, mut i: usize) -> Vec<i64> {
        let mut point = vec![0; self.dim()];
        for k in (0..self.dim()).rev() {
            let side = (self.hi[k] - self.lo[k]) as usize;
            point[k] = self.lo[k] + (i % side) as i64;
            i /= side;
        }
        point
    }

    fn index_of(&self, point: &[i64]) -> Option<usize> {
        let mut i = 0usize;
        for k in 0..self.dim() {
            if point[k] < self.lo[k] || point[k] >= self.hi[k] {
                return None;
            }
            i = i * (self.hi[k] - self.lo[k]) as usize + (point[k] - self.lo[k]) as usize;
        }
        Some(i)
    }

    /// Membership in `A`; always false outside the window.
    pub fn contains(&self, point: &[i64]) -> bool {
        point.len() == self.dim() && self.index_of(point).is_some_and(|i| self.cells[i])
    }

    pub fn window_density(&self) -> Ratio<u64> {
        Ratio::new(self.members.len() as u64, self.cells.len() as u64)
    }
}

/// Parse a point list: one integer vector per line, entries separated by
/// whitespace or commas; blank lines and `#` comments are skipped.
pub fn parse_points(text: &str) -> Result<Vec<Vec<i64>>, DeltaError> {
    let mut out: Vec<Vec<i64>> = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let point = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<i64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| DeltaError::PointFile { line: n + 1, message: e.to_string() })?;
        if let Some(first) = out.first() {
            if first.len() != point.len() {
                return Err(DeltaError::PointFile {
                    line: n + 1,
                    message: format!("expected {} coordinates, got {}", first.len(), point.len()),
                });
            }
        }
        out.push(point);
    }
    Ok(out)
}

/// `|A ∩ [lo, hi)| / |[lo, hi)|`, exactly. The box must lie in the window.
pub fn box_density(scene: &DeltaScene, lo: &[i64], hi: &[i64]) -> Result<Ratio<u64>, DeltaError> {
    for v in [lo, hi] {
        if v.len() != scene.dim() {
            return Err(DeltaError::DimensionMismatch { expected: scene.dim(), got: v.len() });
        }
    }
    if lo.iter().zip(hi).any(|(a, b)| a >= b) {
        return Err(DeltaError::EmptyBox);
    }
    let inside = (0..scene.dim()).all(|k| lo[k] >= scene.lo[k] && hi[k] <= scene.hi[k]);
    if !inside {
        return Err(DeltaError::OutsideWindow { lo: lo.to_vec(), hi: hi.to_vec() });
    }
    let volume: u64 = lo.iter().zip(hi).map(|(a, b)| (b - a) as u64).product();
    let count = scene
        .members
        .iter()
        .filter(|p| p.iter().enumerate().all(|(k, &x)| x >= lo[k] && x < hi[k]))
        .count();
    Ok(Ratio::new(count as u64, volume))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoxDensity {
    pub lo: Vec<i64>,
    #[serde(serialize_with = "ratio_text", deserialize_with = "ratio_from_text")]
    pub density: Ratio<u64>,
}

/// Densities of every translate of a box of the given side lengths inside
/// the window. The best value is a lower bound for the upper Banach density
/// along this box family, not the density itself.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DensitySweep {
    pub side: Vec<i64>,
    pub boxes: Vec<BoxDensity>,
    pub best: BoxDensity,
}

pub fn density_sweep(scene: &DeltaScene, side: &[i64]) -> Result<DensitySweep, DeltaError> {
    if side.len() != scene.dim() {
        return Err(DeltaError::DimensionMismatch { expected: scene.dim(), got: side.len() });
    }
    if side.iter().any(|&s| s <= 0) {
        return Err(DeltaError::EmptyBox);
    }
    let span: Vec<i64> = (0..scene.dim()).map(|k| scene.hi[k] - scene.lo[k] - side[k] + 1).collect();
    if span.iter().any(|&s| s <= 0) {
        return Err(DeltaError::OutsideWindow {
            lo: scene.lo.clone(),
            hi: scene.lo.iter().zip(side).map(|(a, s)| a + s).collect(),
        });
    }
    let count: i64 = span.iter().product();
    let boxes = (0..count)
        .into_par_iter()
        .map(|mut i| {
            // row-major corner offsets
            let mut lo = scene.lo.clone();
            for k in (0..lo.len()).rev() {
                lo[k] += i % span[k];
                i /= span[k];
            }
            let hi: Vec<i64> = lo.iter().zip(side).map(|(a, s)| a + s).collect();
            box_density(scene, &lo, &hi).map(|density| BoxDensity { lo, density })
        })
        .collect::<Result<Vec<_>, _>>()?;
    // first box attaining the maximum
    let best = boxes
        .iter()
        .fold(None::<&BoxDensity>, |best, b| match best {
            Some(x) if x.density >= b.density => Some(x),
            _ => Some(b),
        })
        .cloned()
        .ok_or(DeltaError::EmptyBox)?;
    Ok(DensitySweep { side: side.to_vec(), boxes, best })
}

/// CSV with one row per box: the corner coordinates, then the density as a
/// fraction and as a decimal.
pub fn write_sweep_csv(sweep: &DensitySweep, out: &mut impl Write) -> io::Result<()> {
    let header: Vec<String> = (0..sweep.side.len()).map(|k| format!("lo{k}")).collect();
    writeln!(out, "{},density,value", header.join(","))?;
    for b in &sweep.boxes {
        let corner: Vec<String> = b.lo.iter().map(i64::to_string).collect();
        let value = *b.density.numer() as f64 / *b.density.denom() as f64;
        writeln!(out, "{},{},{value:.6}", corner.join(","), b.density)?;
    }
    Ok(())
}

/// Outcome of a difference-set membership test.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeltaCheck {
    pub member: bool,
    /// Least `a` in `A` with `a + g` in `A`.
    pub witness: Option<Vec<i64>>,
    /// `|g|` exceeds half the window span in some coordinate, so a negative
    /// answer may be an artifact of the window.
    pub near_edge: bool,
}

/// Whether `g` lies in `A - A`, decided inside the window.
pub fn delta_membership(scene: &DeltaScene, g: &[i64]) -> Result<DeltaCheck, DeltaError> {
    if g.len() != scene.dim() {
        return Err(DeltaError::DimensionMismatch { expected: scene.dim(), got: g.len() });
    }
    let spans: Vec<i64> = (0..scene.dim()).map(|k| scene.hi[k] - scene.lo[k]).collect();
    if g.iter().zip(&spans).any(|(x, s)| x.unsigned_abs() > *s as u64) {
        return Err(DeltaError::OutOfWindow(g.to_vec()));
    }
    let near_edge = g.iter().zip(&spans).any(|(x, s)| 2 * x.unsigned_abs() > *s as u64);
    let witness = scene
        .members
        .iter()
        .find(|a| {
            let b: Vec<i64> = a.iter().zip(g).map(|(x, y)| x + y).collect();
            scene.contains(&b)
        })
        .cloned();
    Ok(DeltaCheck { member: witness.is_some(), witness, near_edge })
}

/// Weights `g_j(t)` in `Z^m` for position `j` and node `t`, one expression
/// per coordinate in the variables `j` and `t`.
#[derive(Clone, Debug)]
pub struct GSequence {
    components: Vec<PointExpr>,
}

impl GSequence {
    pub fn parse(texts: &[&str]) -> Result<Self, DeltaError> {
        let components = texts
            .iter()
            .map(|t| {
                let ast = parse_expr(t).map_err(|e| DeltaError::Expression(e.to_string()))?;
                PointExpr::from_ast_named(ast, &["j", "t"]).map_err(DeltaError::Expression)
            })
            .collect::<Result<Vec<_>, _>>()?;
        if components.is_empty() {
            return Err(DeltaError::Expression("at least one weight component is required".into()));
        }
        Ok(GSequence { components })
    }

    pub fn components(&self) -> &[PointExpr] {
        &self.components
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn at(&self, j: i64, t: Node) -> Vec<i64> {
        self.components.iter().map(|e| e.eval(&[j, t as i64])).collect()
    }

    /// Sum of `g_j(t)` over the entries `(j, $t)` of `w` with `t` off the
    /// root. Nonlocated words use string indices as positions.
    pub fn weigh(&self, w: &Word) -> Vec<i64> {
        let mut total = vec![0i64; self.dim()];
        for (j, s) in w.positioned_symbols() {
            if let Symbol::Var(t) = s {
                if t != ROOT {
                    for (acc, v) in total.iter_mut().zip(self.at(j as i64, t)) {
                        *acc = acc.wrapping_add(v);
                    }
                }
            }
        }
        total
    }
}

/// The configuration every combination must produce: `p(sum) ∈ A - A`.
pub struct DeltaProblem<'a> {
    pub scene: &'a DeltaScene,
    pub weights: &'a GSequence,
    /// Identity when absent.
    pub map: Option<&'a IntPolyVec>,
}

impl DeltaProblem<'_> {
    fn validate(&self) -> Result<(), DeltaError> {
        let target = self.map.map_or(self.weights.dim(), IntPolyVec::dim);
        if target != self.scene.dim() {
            return Err(DeltaError::DimensionMismatch { expected: self.scene.dim(), got: target });
        }
        if let Some(p) = self.map {
            if p.vars() != self.weights.dim() {
                return Err(DeltaError::DimensionMismatch { expected: self.weights.dim(), got: p.vars() });
            }
            if !p.zero_at_origin() {
                return Err(DeltaError::NonzeroAtOrigin);
            }
        }
        Ok(())
    }

    /// Sum over all coordinates of the tuple, then its image under the map.
    pub fn image(&self, words: &[Word]) -> Option<(Vec<i64>, Vec<i64>)> {
        let mut sum = vec![0i64; self.weights.dim()];
        for w in words {
            for (acc, v) in sum.iter_mut().zip(self.weights.weigh(w)) {
                *acc = acc.checked_add(v)?;
            }
        }
        let image = match self.map {
            Some(p) => p.eval(&sum).ok()?,
            None => sum.clone(),
        };
        Some((sum, image))
    }

    fn accepts(&self, words: &[Word]) -> bool {
        self.image(words)
            .and_then(|(_, image)| delta_membership(self.scene, &image).ok())
            .is_some_and(|c| c.member)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeltaSample {
    pub index_sets: Vec<Vec<usize>>,
    pub sum: Option<Vec<i64>>,
    pub image: Option<Vec<i64>>,
    pub check: Option<DeltaCheck>,
}

/// Result of checking every combination of a block sequence.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeltaReport {
    pub combinations: usize,
    pub passed: usize,
    /// Combinations whose image came close to the window edge.
    pub near_edge: usize,
    pub first_failure: Option<DeltaSample>,
    pub malformed: Option<String>,
}

impl DeltaReport {
    pub fn is_ok(&self) -> bool {
        self.malformed.is_none() && self.first_failure.is_none()
    }
}

/// Independent check: enumerate all combinations and test each image with
/// `delta_membership`.
pub fn check_delta_witness(inst: &SearchInstance, problem: &DeltaProblem<'_>, blocks: &Blocks) -> DeltaReport {
    let mut report = DeltaReport {
        combinations: 0,
        passed: 0,
        near_edge: 0,
        first_failure: None,
        malformed: None,
    };
    if let Err(e) = problem.validate() {
        report.malformed = Some(e.to_string());
        return report;
    }
    if let Err(e) = check_well_formed(inst, blocks) {
        report.malformed = Some(e);
        return report;
    }
    let combos = match enumerate_combinations(inst, blocks) {
        Ok(c) => c,
        Err(e) => {
            report.malformed = Some(e.to_string());
            return report;
        }
    };
    report.combinations = combos.len();
    for c in combos {
        let image = problem.image(&c.words);
        let check = image.as_ref().and_then(|(_, g)| delta_membership(problem.scene, g).ok());
        if let Some(ch) = &check {
            report.near_edge += usize::from(ch.near_edge);
        }
        if check.as_ref().is_some_and(|ch| ch.member) {
            report.passed += 1;
        } else if report.first_failure.is_none() {
            report.first_failure = Some(DeltaSample {
                index_sets: c.index_sets,
                sum: image.as_ref().map(|i| i.0.clone()),
                image: image.map(|i| i.1),
                check,
            });
        }
    }
    report
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DeltaOutcome {
    Found { blocks: Blocks, report: DeltaReport, warnings: Vec<String> },
    /// No blocks within the bound; not a refutation.
    Exhausted { nodes: u64, warnings: Vec<String> },
}

/// Search for blocks whose every combination maps into `A - A`; the result
/// is re-checked by `check_delta_witness`. The instance's coloring is not
/// used.
pub fn furstenberg_search(inst: &SearchInstance, problem: &DeltaProblem<'_>) -> Result<DeltaOutcome, DeltaError> {
    problem.validate()?;
    let mut warnings = Vec::new();
    if problem.scene.members().is_empty() {
        warnings.push("the set is empty on the window, so the positive density hypothesis fails".to_string());
    }
    let accepts = |words: &[Word]| problem.accepts(words);
    let (found, nodes) = search_with_goal(inst, &Goal::EveryCombination(&accepts), true)?;
    let Some(blocks) = found else {
        return Ok(DeltaOutcome::Exhausted { nodes, warnings });
    };
    let report = check_delta_witness(inst, problem, &blocks);
    if !report.is_ok() {
        return Err(SearchError::VerificationFailed(format!("{report:?}")).into());
    }
    if report.near_edge > 0 {
        warnings.push(format!("{} combinations have images beyond half the window span", report.near_edge));
    }
    Ok(DeltaOutcome::Found { blocks, report, warnings })
}
