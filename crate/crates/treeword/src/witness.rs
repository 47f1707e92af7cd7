//! Witness and certificate files: running an instance to produce one, and
//! checking one from scratch.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::delta::{check_delta_witness, density_sweep, furstenberg_search, BoxDensity, DeltaError, DeltaOutcome, DeltaProblem, DeltaReport};
use crate::dsl::{emit_instance, instance_digest, parse_instance, parse_word, BuiltInstance, DslError, InstanceSpec, RunMode};
use crate::search::{
    check_block_witness, search_block_sequence, threshold, Blocks, CoverageReport, SearchError, SearchInstance, SearchOutcome,
    ThresholdOutcome, Verdict,
};

pub const WITNESS_FORMAT: &str = "treeword-witness/1";
pub const ENGINE_VERSION: &str = concat!("treeword ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Error)]
pub enum WitnessError {
    #[error(transparent)]
    Dsl(#[from] DslError),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Delta(#[from] DeltaError),
    #[error("malformed witness file: {0}")]
    Format(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WitnessKind {
    Search,
    Threshold,
    DeltaScan,
}

impl WitnessKind {
    /// The run an instance asks for; `verify` instances are searched and
    /// the result checked.
    pub fn for_mode(mode: RunMode) -> Self {
        match mode {
            RunMode::Search | RunMode::Verify => WitnessKind::Search,
            RunMode::Threshold => WitnessKind::Threshold,
            RunMode::DeltaScan => WitnessKind::DeltaScan,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Found,
    Exhausted,
    Certified,
    Unknown,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub side: Vec<i64>,
    pub boxes: usize,
    pub best: BoxDensity,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeltaSummary {
    /// Density of the set on the whole window, as a fraction.
    pub window_density: String,
    pub sweep: Option<SweepSummary>,
    pub report: Option<DeltaReport>,
    pub warnings: Vec<String>,
}

/// A search, threshold or delta-scan result together with the canonical
/// instance it came from. Every field is always present, `null` when unused.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessFile {
    pub format: String,
    pub kind: WitnessKind,
    pub engine_version: String,
    pub seed: u64,
    pub instance_digest: String,
    /// Canonical instance text with referenced files inlined.
    pub instance: String,
    pub verdict: Outcome,
    /// Word text indexed by factor, step and node.
    pub blocks: Option<Vec<Vec<Vec<String>>>>,
    pub coverage: Option<CoverageReport>,
    /// Search nodes spent when nothing was found.
    pub nodes: Option<u64>,
    pub threshold: Option<ThresholdOutcome>,
    pub delta: Option<DeltaSummary>,
}

fn blocks_text(inst: &SearchInstance, blocks: &Blocks) -> Vec<Vec<Vec<String>>> {
    blocks
        .iter()
        .zip(&inst.factors)
        .map(|(steps, f)| steps.iter().map(|row| row.iter().map(|w| f.ctx.format_word(w)).collect()).collect())
        .collect()
}

fn parse_blocks(inst: &SearchInstance, text: &[Vec<Vec<String>>]) -> Result<Blocks, WitnessError> {
    if text.len() != inst.factors.len() {
        return Err(WitnessError::Format(format!("blocks for {} factors, instance has {}", text.len(), inst.factors.len())));
    }
    text.iter()
        .zip(&inst.factors)
        .map(|(steps, f)| {
            steps
                .iter()
                .map(|row| row.iter().map(|w| parse_word(w, &f.ctx, f.mode).map_err(WitnessError::from)).collect())
                .collect()
        })
        .collect()
}

fn delta_problem(built: &BuiltInstance) -> Result<(&crate::dsl::DeltaSetup, DeltaProblem<'_>), WitnessError> {
    let setup = built
        .delta
        .as_ref()
        .ok_or_else(|| WitnessError::Format("delta-scan needs a [delta] section".into()))?;
    let problem = DeltaProblem { scene: &setup.scene, weights: &setup.weights, map: setup.map.as_ref() };
    Ok((setup, problem))
}

/// Run `spec` in the given role and record the result. Files the instance
/// refers to are read relative to `base` and inlined.
pub fn run_instance(spec: &InstanceSpec, kind: WitnessKind, seed: u64, base: &Path) -> Result<WitnessFile, WitnessError> {
    let spec = spec.inline_files(base)?;
    let built = spec.build(base)?;
    let mut file = WitnessFile {
        format: WITNESS_FORMAT.into(),
        kind,
        engine_version: ENGINE_VERSION.into(),
        seed,
        instance_digest: instance_digest(&spec),
        instance: emit_instance(&spec),
        verdict: Outcome::Exhausted,
        blocks: None,
        coverage: None,
        nodes: None,
        threshold: None,
        delta: None,
    };
    match kind {
        WitnessKind::Search => match search_block_sequence(&built.search)? {
            SearchOutcome::Found(w) => {
                file.verdict = Outcome::Found;
                file.blocks = Some(blocks_text(&built.search, &w.blocks));
                file.coverage = Some(w.report.coverage);
            }
            SearchOutcome::Exhausted { nodes } => file.nodes = Some(nodes),
        },
        WitnessKind::Threshold => {
            let outcome = threshold(&built.search, built.colors, spec.bound, spec.budget)?;
            file.verdict = match outcome {
                ThresholdOutcome::Certified { .. } => Outcome::Certified,
                ThresholdOutcome::Unknown { .. } => Outcome::Unknown,
            };
            file.threshold = Some(outcome);
        }
        WitnessKind::DeltaScan => {
            let (setup, problem) = delta_problem(&built)?;
            let sweep = if setup.sweep.is_empty() {
                None
            } else {
                let s = density_sweep(&setup.scene, &setup.sweep)?;
                Some(SweepSummary { side: s.side, boxes: s.boxes.len(), best: s.best })
            };
            let mut summary = DeltaSummary {
                window_density: setup.scene.window_density().to_string(),
                sweep,
                report: None,
                warnings: Vec::new(),
            };
            match furstenberg_search(&built.search, &problem)? {
                DeltaOutcome::Found { blocks, report, warnings } => {
                    file.verdict = Outcome::Found;
                    file.blocks = Some(blocks_text(&built.search, &blocks));
                    summary.report = Some(report);
                    summary.warnings = warnings;
                }
                DeltaOutcome::Exhausted { nodes, warnings } => {
                    file.nodes = Some(nodes);
                    summary.warnings = warnings;
                }
            }
            file.delta = Some(summary);
        }
    }
    Ok(file)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub ok: bool,
    pub kind: WitnessKind,
    pub verdict: Outcome,
    pub instance_digest: String,
    /// Checks that passed, in order.
    pub checks: Vec<String>,
    pub failure: Option<String>,
    /// Offending combinations, one text line each.
    pub violation: Vec<String>,
}

impl VerifyReport {
    fn pass(&mut self, check: impl Into<String>) {
        self.checks.push(check.into());
    }

    fn fail(mut self, reason: impl Into<String>) -> Self {
        self.ok = false;
        self.failure = Some(reason.into());
        self
    }
}

/// Re-derive the verdict of `file` from its instance text alone.
pub fn verify_witness(file: &WitnessFile) -> Result<VerifyReport, WitnessError> {
    let mut report = VerifyReport {
        ok: true,
        kind: file.kind,
        verdict: file.verdict,
        instance_digest: file.instance_digest.clone(),
        checks: Vec::new(),
        failure: None,
        violation: Vec::new(),
    };
    if file.format != WITNESS_FORMAT {
        return Ok(report.fail(format!("unknown format '{}'", file.format)));
    }
    let spec = parse_instance(&file.instance)?;
    if emit_instance(&spec) != file.instance {
        return Ok(report.fail("instance text is not in canonical form"));
    }
    if instance_digest(&spec) != file.instance_digest {
        return Ok(report.fail("instance digest does not match the instance text"));
    }
    report.pass("digest");
    let built = spec.build(Path::new("."))?;
    let inst = &built.search;
    match (file.kind, file.verdict) {
        (WitnessKind::Search, Outcome::Found) => {
            let text = file.blocks.as_ref().ok_or_else(|| WitnessError::Format("missing blocks".into()))?;
            let blocks = parse_blocks(inst, text)?;
            let checked = check_block_witness(inst, &blocks);
            match &checked.verdict {
                Verdict::Ok => {}
                Verdict::Violation { first, second } => {
                    report.violation = vec![first.line(inst), second.line(inst)];
                    return Ok(report.fail("combinations with the same least elements have different colors"));
                }
                Verdict::Uncolored { combination } => {
                    report.violation = vec![combination.line(inst)];
                    return Ok(report.fail("a combination has no color"));
                }
                Verdict::Malformed { reason } => return Ok(report.fail(format!("malformed blocks: {reason}"))),
            }
            report.pass("monochromatic groups");
            if file.coverage.as_ref() != Some(&checked.coverage) {
                return Ok(report.fail("coverage report differs from the recomputed one"));
            }
            report.pass("coverage");
        }
        (WitnessKind::Search, Outcome::Exhausted) => match search_block_sequence(inst)? {
            SearchOutcome::Exhausted { nodes } if Some(nodes) == file.nodes => report.pass("exhausted again"),
            SearchOutcome::Exhausted { nodes } => return Ok(report.fail(format!("exhausted after {nodes} nodes, file says {:?}", file.nodes))),
            SearchOutcome::Found(_) => return Ok(report.fail("the search finds blocks")),
        },
        (WitnessKind::Threshold, Outcome::Certified | Outcome::Unknown) => {
            let outcome = threshold(inst, built.colors, spec.bound, spec.budget)?;
            if file.threshold.as_ref() != Some(&outcome) {
                return Ok(report.fail("threshold certificates differ from the recomputed ones"));
            }
            let expected = if matches!(outcome, ThresholdOutcome::Certified { .. }) { Outcome::Certified } else { Outcome::Unknown };
            if expected != file.verdict {
                return Ok(report.fail("verdict does not match the certificates"));
            }
            report.pass("certificates");
        }
        (WitnessKind::DeltaScan, Outcome::Found) => {
            let (_, problem) = delta_problem(&built)?;
            let text = file.blocks.as_ref().ok_or_else(|| WitnessError::Format("missing blocks".into()))?;
            let blocks = parse_blocks(inst, text)?;
            let checked = check_delta_witness(inst, &problem, &blocks);
            if let Some(reason) = &checked.malformed {
                return Ok(report.fail(format!("malformed blocks: {reason}")));
            }
            if let Some(sample) = &checked.first_failure {
                report.violation = vec![serde_json::to_string(sample).unwrap_or_default()];
                return Ok(report.fail("a combination maps outside A - A"));
            }
            report.pass("every combination in A - A");
            if file.delta.as_ref().and_then(|d| d.report.as_ref()) != Some(&checked) {
                return Ok(report.fail("delta report differs from the recomputed one"));
            }
            report.pass("delta report");
        }
        (WitnessKind::DeltaScan, Outcome::Exhausted) => {
            let (_, problem) = delta_problem(&built)?;
            match furstenberg_search(inst, &problem)? {
                DeltaOutcome::Exhausted { nodes, .. } if Some(nodes) == file.nodes => report.pass("exhausted again"),
                _ => return Ok(report.fail("the delta search does not reproduce the recorded exhaustion")),
            }
        }
        (kind, verdict) => return Ok(report.fail(format!("verdict {verdict:?} does not fit a {kind:?} file"))),
    }
    Ok(report)
}
