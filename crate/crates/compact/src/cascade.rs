//! The cascade model: staged evaluation, exact cost metering, metrics,
//! and canonical serialization.
//!
//! A cascade is a sequence of stages `f_k` with weights `alpha_k` and
//! rejection thresholds `T_k`. An example is evaluated stage by stage; as
//! soon as the running score fails an interior threshold (`F_k + T_k <= 0`,
//! strictly: a zero margin rejects) the example exits with prediction `-1`.
//! The last stage never rejects: its threshold, when present, only matters
//! while training continues or when another stage is appended behind it.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Label};
use crate::error::{Error, Result};
use crate::pool::{FamilyManifest, TriggerState};
use crate::tree::Tree;
use crate::util;

pub const MODEL_VERSION: u64 = 1;

/// Scores produced by an external scorer, keyed by example id.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExternalScores {
    pub scores: BTreeMap<u64, f64>,
}

impl ExternalScores {
    pub fn get(&self, id: u64) -> Option<f64> {
        self.scores.get(&id).copied()
    }

    pub fn validate(&self) -> Result<()> {
        for (id, s) in &self.scores {
            if !s.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "external score for example {id} is not finite"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StageLearner {
    /// A fitted tree evaluated on the example's features.
    Tree(Tree),
    /// A terminal stage whose output is supplied per example at evaluation
    /// time. Charged no feature cost: the external scorer meters itself.
    External,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub learner: StageLearner,
    pub alpha: f64,
    /// Rejection threshold. Interior stages always carry one; only the final
    /// stage may omit it.
    pub threshold: Option<f64>,
}

impl Stage {
    /// Distinct features this stage reads.
    pub fn features_used(&self) -> Vec<usize> {
        match &self.learner {
            StageLearner::Tree(t) => t.features_used(),
            StageLearner::External => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMetadata {
    pub config_digest: String,
    pub manifest_digest: String,
    pub seed: u64,
    pub tool_version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cascade {
    pub version: u64,
    pub metadata: ModelMetadata,
    pub stages: Vec<Stage>,
}

/// Everything observed while evaluating one example.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalTrace {
    /// Running score at exit (the full score for survivors).
    pub score: f64,
    /// 1-based stage that rejected the example, `None` for survivors.
    pub rejected_at: Option<usize>,
    pub stages_evaluated: usize,
    /// Exact cost charged: per evaluated stage, its distinct features' unit
    /// costs plus any trigger fired for the first time on this example.
    pub total_omega: f64,
    /// `total_omega / m` where `m` is the full cascade length, regardless of
    /// where evaluation stopped.
    pub average_omega: f64,
    pub survived: bool,
}

impl EvalTrace {
    pub fn prediction(&self) -> Label {
        if self.survived && self.score > 0.0 {
            Label::Positive
        } else {
            Label::Negative
        }
    }
}

impl Cascade {
    pub fn new(metadata: ModelMetadata, stages: Vec<Stage>) -> Result<Cascade> {
        let c = Cascade {
            version: MODEL_VERSION,
            metadata,
            stages,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn len(&self) -> usize {
        self.stages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stages.is_empty()
    }

    pub fn has_external_stage(&self) -> bool {
        self.stages
            .iter()
            .any(|s| matches!(s.learner, StageLearner::External))
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != MODEL_VERSION {
            return Err(Error::Version {
                found: self.version,
                expected: MODEL_VERSION,
            });
        }
        if self.stages.is_empty() {
            return Err(Error::schema("stages", "cascade must have at least one stage"));
        }
        let last = self.stages.len() - 1;
        for (k, stage) in self.stages.iter().enumerate() {
            let at = |field: &str| format!("stages[{k}].{field}");
            if !stage.alpha.is_finite() {
                return Err(Error::schema(at("alpha"), "must be finite"));
            }
            match stage.threshold {
                Some(t) if !t.is_finite() => {
                    return Err(Error::schema(at("threshold"), "must be finite"));
                }
                None if k < last => {
                    return Err(Error::schema(
                        at("threshold"),
                        "only the final stage may omit its threshold",
                    ));
                }
                _ => {}
            }
            match &stage.learner {
                StageLearner::Tree(t) => {
                    t.validate()
                        .map_err(|e| Error::schema(at("learner"), e.to_string()))?;
                }
                StageLearner::External => {
                    if k < last {
                        return Err(Error::schema(
                            at("learner"),
                            "an external stage must be the final stage",
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    /// Survival indicator `r_k`: did the example pass every threshold of
    /// stages `1..k-1`? `k` is 1-based; `r_1` is always true and `k` may be
    /// `m + 1` (survived the whole cascade, last threshold included when
    /// present). A zero margin rejects.
    pub fn rejection_indicator(&self, features: &[f64], k: usize) -> Result<bool> {
        if k == 0 || k > self.stages.len() + 1 {
            return Err(Error::InvalidInput(format!(
                "stage index {k} out of range 1..={}",
                self.stages.len() + 1
            )));
        }
        let mut score = 0.0;
        for stage in &self.stages[..k - 1] {
            let out = match &stage.learner {
                StageLearner::Tree(t) => t.apply(features) as f64,
                // A terminal external stage carries no threshold, so its
                // contribution is never compared against one.
                StageLearner::External => 0.0,
            };
            score += stage.alpha * out;
            if let Some(t) = stage.threshold {
                if score + t <= 0.0 {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// Evaluate one example, metering cost exactly as incurred.
    ///
    /// `external` supplies the output of a terminal external stage if the
    /// cascade has one and the example reaches it.
    pub fn evaluate(
        &self,
        features: &[f64],
        manifest: &FamilyManifest,
        external: Option<f64>,
    ) -> Result<EvalTrace> {
        self.evaluate_rule(features, manifest, external, false)
    }

    /// Like [`evaluate`](Cascade::evaluate) but optionally applying the last
    /// stage's threshold too, which is the survival rule seen during
    /// training (a further stage would be appended behind it).
    pub(crate) fn evaluate_rule(
        &self,
        features: &[f64],
        manifest: &FamilyManifest,
        external: Option<f64>,
        gate_last: bool,
    ) -> Result<EvalTrace> {
        self.validate()?;
        let m = self.stages.len();
        let mut state = TriggerState::EMPTY;
        let mut total = 0.0;
        let mut score = 0.0;
        let mut evaluated = 0;
        let mut rejected_at = None;
        for (k, stage) in self.stages.iter().enumerate() {
            let out = match &stage.learner {
                StageLearner::Tree(t) => {
                    let (cost, next) = manifest.cost_for_example(t.features_used(), state)?;
                    state = next;
                    total += cost;
                    t.apply(features) as f64
                }
                StageLearner::External => external.ok_or_else(|| {
                    Error::InvalidInput("an external score is required to evaluate this cascade".into())
                })?,
            };
            score += stage.alpha * out;
            evaluated = k + 1;
            let gates = k + 1 < m || gate_last;
            if gates {
                if let Some(t) = stage.threshold {
                    if score + t <= 0.0 {
                        rejected_at = Some(k + 1);
                        break;
                    }
                }
            }
        }
        Ok(EvalTrace {
            score,
            rejected_at,
            stages_evaluated: evaluated,
            total_omega: total,
            average_omega: total / m as f64,
            survived: rejected_at.is_none(),
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.validate()?;
        let s = util::canonical_json(self)?;
        util::write_atomic(path, s.as_bytes())
    }

    pub fn to_canonical_json(&self) -> Result<String> {
        self.validate()?;
        util::canonical_json(self)
    }

    pub fn load(path: &Path) -> Result<Cascade> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Cascade::from_json_str(&s)
    }

    pub fn from_json_str(s: &str) -> Result<Cascade> {
        // Check the version first so an old or future file reports a version
        // mismatch rather than a confusing field error.
        #[derive(Deserialize)]
        struct VersionProbe {
            version: u64,
        }
        if let Ok(p) = serde_json::from_str::<VersionProbe>(s) {
            if p.version != MODEL_VERSION {
                return Err(Error::Version {
                    found: p.version,
                    expected: MODEL_VERSION,
                });
            }
        }
        let c: Cascade = util::from_json_str(s)?;
        c.validate()?;
        Ok(c)
    }
}

// === batch metrics ========================================================

/// Distribution summary of per-example total cost (nearest-rank percentiles).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostSummary {
    pub mean: f64,
    pub p50: f64,
    pub p90: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchMetrics {
    pub examples: usize,
    pub survivors: usize,
    /// Error of the deployed rule: positive iff survived and score > 0.
    pub error: f64,
    /// False positive rate; absent when the batch has no negatives.
    pub fpr: Option<f64>,
    /// False negative rate; absent when the batch has no positives.
    pub fnr: Option<f64>,
    pub mean_average_omega: f64,
    pub cost_negatives: Option<CostSummary>,
    pub cost_positives: Option<CostSummary>,
    /// Operating points swept over survivor scores (rejected examples count
    /// as predicted negative at every threshold). Empty unless both classes
    /// are present.
    pub roc: Vec<RocPoint>,
}

fn cost_summary(mut costs: Vec<f64>) -> Option<CostSummary> {
    if costs.is_empty() {
        return None;
    }
    costs.sort_by(|a, b| a.partial_cmp(b).expect("finite costs"));
    let n = costs.len();
    let rank = |q: f64| costs[((q * n as f64).ceil() as usize).clamp(1, n) - 1];
    Some(CostSummary {
        mean: costs.iter().sum::<f64>() / n as f64,
        p50: rank(0.5),
        p90: rank(0.9),
        max: costs[n - 1],
    })
}

pub fn batch_metrics(
    cascade: &Cascade,
    dataset: &Dataset,
    manifest: &FamilyManifest,
    external: Option<&ExternalScores>,
) -> Result<BatchMetrics> {
    cascade.validate()?;

    // Fail up front, naming every example that reaches the external stage
    // without a score. Examples rejected earlier never need one.
    if cascade.has_external_stage() {
        let mut missing: Vec<u64> = Vec::new();
        for ex in &dataset.examples {
            let reaches = cascade.rejection_indicator(&ex.features, cascade.len())?;
            if reaches && external.and_then(|e| e.get(ex.id)).is_none() {
                missing.push(ex.id);
            }
        }
        if !missing.is_empty() {
            missing.sort_unstable();
            let shown: Vec<String> = missing.iter().take(10).map(|id| id.to_string()).collect();
            let suffix = if missing.len() > shown.len() {
                format!(" (+{} more)", missing.len() - shown.len())
            } else {
                String::new()
            };
            return Err(Error::MissingScores {
                count: missing.len(),
                ids: format!("{}{}", shown.join(", "), suffix),
            });
        }
    }

    let mut survivors = 0;
    let mut wrong = 0usize;
    let mut fp = 0usize;
    let mut fn_ = 0usize;
    let mut pos = 0usize;
    let mut neg = 0usize;
    let mut avg_sum = 0.0;
    let mut cost_pos = Vec::new();
    let mut cost_neg = Vec::new();
    // Effective score for ROC sweeping: rejected examples sit below every
    // threshold.
    let mut eff: Vec<(f64, Label)> = Vec::with_capacity(dataset.len());

    for ex in &dataset.examples {
        let ext = external.and_then(|e| e.get(ex.id));
        let trace = cascade.evaluate(&ex.features, manifest, ext)?;
        if trace.survived {
            survivors += 1;
        }
        let pred = trace.prediction();
        if pred != ex.label {
            wrong += 1;
            match ex.label {
                Label::Negative => fp += 1,
                Label::Positive => fn_ += 1,
            }
        }
        match ex.label {
            Label::Positive => {
                pos += 1;
                cost_pos.push(trace.total_omega);
            }
            Label::Negative => {
                neg += 1;
                cost_neg.push(trace.total_omega);
            }
        }
        avg_sum += trace.average_omega;
        eff.push((
            if trace.survived {
                trace.score
            } else {
                f64::NEG_INFINITY
            },
            ex.label,
        ));
    }

    let n = dataset.len();
    let roc = if pos > 0 && neg > 0 {
        roc_points(&mut eff, pos, neg)
    } else {
        Vec::new()
    };
    Ok(BatchMetrics {
        examples: n,
        survivors,
        error: wrong as f64 / n as f64,
        fpr: (neg > 0).then(|| fp as f64 / neg as f64),
        fnr: (pos > 0).then(|| fn_ as f64 / pos as f64),
        mean_average_omega: avg_sum / n as f64,
        cost_negatives: cost_summary(cost_neg),
        cost_positives: cost_summary(cost_pos),
        roc,
    })
}

const ROC_MAX_POINTS: usize = 201;

fn roc_points(eff: &mut [(f64, Label)], pos: usize, neg: usize) -> Vec<RocPoint> {
    // Descending by score; predictions at threshold t are `score >= t`.
    eff.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("scores ordered"));
    let mut points = Vec::new();
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < eff.len() {
        let t = eff[i].0;
        if t == f64::NEG_INFINITY {
            break;
        }
        while i < eff.len() && eff[i].0 == t {
            match eff[i].1 {
                Label::Positive => tp += 1,
                Label::Negative => fp += 1,
            }
            i += 1;
        }
        points.push(RocPoint {
            threshold: t,
            fpr: fp as f64 / neg as f64,
            tpr: tp as f64 / pos as f64,
        });
    }
    if points.len() > ROC_MAX_POINTS {
        let step = (points.len() + ROC_MAX_POINTS - 1) / ROC_MAX_POINTS;
        let last = points.len() - 1;
        let mut kept: Vec<RocPoint> = points.iter().step_by(step).cloned().collect();
        if kept.last().map(|p| p.threshold) != Some(points[last].threshold) {
            kept.push(points[last].clone());
        }
        return kept;
    }
    points
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Example;
    use crate::pool::{FeatureFamily, TriggerGroup};
    use crate::tree::{Node, Stump};

    fn meta() -> ModelMetadata {
        ModelMetadata {
            config_digest: "cfg".into(),
            manifest_digest: "man".into(),
            seed: 0,
            tool_version: "test".into(),
        }
    }

    fn stump_stage(feature: usize, threshold: f64, alpha: f64, t: Option<f64>) -> Stage {
        let s = Stump {
            feature,
            threshold,
            polarity: 1,
        };
        Stage {
            learner: StageLearner::Tree(Tree {
                nodes: vec![
                    Node::Split {
                        feature: s.feature,
                        threshold: s.threshold,
                        left: 1,
                        right: 2,
                    },
                    Node::Leaf { output: -1 },
                    Node::Leaf { output: 1 },
                ],
            }),
            alpha,
            threshold: t,
        }
    }

    fn manifest_two() -> FamilyManifest {
        FamilyManifest::new(
            vec![
                FeatureFamily {
                    name: "a".into(),
                    count: 1,
                    unit_cost: 1.0,
                    trigger: None,
                },
                FeatureFamily {
                    name: "b".into(),
                    count: 1,
                    unit_cost: 4.0,
                    trigger: None,
                },
            ],
            vec![],
        )
        .unwrap()
    }

    /// Two stages with costs 1 and 4, both alpha 1, first threshold 0.
    fn cascade_two() -> Cascade {
        Cascade::new(
            meta(),
            vec![
                stump_stage(0, 0.5, 1.0, Some(0.0)),
                stump_stage(1, 0.5, 1.0, Some(0.0)),
            ],
        )
        .unwrap()
    }

    #[test]
    fn rejected_at_stage_one_pays_only_stage_one() {
        let c = cascade_two();
        let m = manifest_two();
        // Feature 0 below 0.5 -> output -1, score -1, -1 + 0 <= 0: rejected.
        let trace = c.evaluate(&[0.0, 9.0], &m, None).unwrap();
        assert_eq!(trace.rejected_at, Some(1));
        assert_eq!(trace.stages_evaluated, 1);
        assert_eq!(trace.total_omega, 1.0);
        assert_eq!(trace.average_omega, 0.5);
        assert!(!trace.survived);
        assert_eq!(trace.prediction(), Label::Negative);
    }

    #[test]
    fn survivor_pays_all_stages() {
        let c = cascade_two();
        let m = manifest_two();
        let trace = c.evaluate(&[1.0, 1.0], &m, None).unwrap();
        assert_eq!(trace.rejected_at, None);
        assert_eq!(trace.total_omega, 5.0);
        assert_eq!(trace.average_omega, 2.5);
        assert_eq!(trace.score, 2.0);
        assert_eq!(trace.prediction(), Label::Positive);
    }

    #[test]
    fn zero_margin_rejects() {
        let c = cascade_two();
        let m = manifest_two();
        // Stage 1 output -1 with alpha 1 and threshold 1.0: score + T = 0.
        let c2 = Cascade::new(
            meta(),
            vec![
                stump_stage(0, 0.5, 1.0, Some(1.0)),
                stump_stage(1, 0.5, 1.0, Some(0.0)),
            ],
        )
        .unwrap();
        let trace = c2.evaluate(&[0.0, 9.0], &m, None).unwrap();
        assert_eq!(trace.rejected_at, Some(1));
        drop(c);
    }

    #[test]
    fn last_threshold_never_rejects_at_eval() {
        let m = manifest_two();
        let c = Cascade::new(
            meta(),
            vec![
                stump_stage(0, 0.5, 1.0, Some(10.0)),
                stump_stage(1, 0.5, 1.0, Some(0.0)),
            ],
        )
        .unwrap();
        // Ends on the margin (score 0), which the last threshold would
        // reject, but the last stage never gates at evaluation time.
        let trace = c.evaluate(&[1.0, 0.0], &m, None).unwrap();
        assert!(trace.survived);
        assert_eq!(trace.score, 0.0);
        assert_eq!(trace.prediction(), Label::Negative);
        // Training-time rule does apply it.
        let gated = c.evaluate_rule(&[1.0, 0.0], &m, None, true).unwrap();
        assert_eq!(gated.rejected_at, Some(2));
    }

    #[test]
    fn trigger_charged_once_across_stages() {
        let manifest = FamilyManifest::new(
            vec![FeatureFamily {
                name: "deep".into(),
                count: 2,
                unit_cost: 2.0,
                trigger: Some("net".into()),
            }],
            vec![TriggerGroup {
                name: "net".into(),
                cost: 50.0,
            }],
        )
        .unwrap();
        let c = Cascade::new(
            meta(),
            vec![
                stump_stage(0, 0.5, 1.0, Some(1e6)),
                stump_stage(1, 0.5, 1.0, Some(1e6)),
            ],
        )
        .unwrap();
        let trace = c.evaluate(&[1.0, 1.0], &manifest, None).unwrap();
        // 50 (once) + 2 + 2.
        assert_eq!(trace.total_omega, 54.0);
    }

    #[test]
    fn rejection_indicator_matches_definition() {
        let c = cascade_two();
        let x_rejected = [0.0, 9.0];
        let x_survivor = [1.0, 1.0];
        assert!(c.rejection_indicator(&x_rejected, 1).unwrap());
        assert!(!c.rejection_indicator(&x_rejected, 2).unwrap());
        assert!(!c.rejection_indicator(&x_rejected, 3).unwrap());
        assert!(c.rejection_indicator(&x_survivor, 3).unwrap());
        assert!(c.rejection_indicator(&x_survivor, 2).unwrap());
        assert!(c.rejection_indicator(&[0.0, 0.0], 0).is_err());
        assert!(c.rejection_indicator(&[0.0, 0.0], 4).is_err());
    }

    #[test]
    fn interior_stage_requires_threshold() {
        let err = Cascade::new(
            meta(),
            vec![
                stump_stage(0, 0.5, 1.0, None),
                stump_stage(1, 0.5, 1.0, Some(0.0)),
            ],
        )
        .unwrap_err();
        match err {
            Error::Schema { path, .. } => assert_eq!(path, "stages[0].threshold"),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn external_must_be_last() {
        let err = Cascade::new(
            meta(),
            vec![
                Stage {
                    learner: StageLearner::External,
                    alpha: 1.0,
                    threshold: Some(0.0),
                },
                stump_stage(0, 0.5, 1.0, None),
            ],
        )
        .unwrap_err();
        assert!(matches!(err, Error::Schema { ref path, .. } if path == "stages[0].learner"));
    }

    #[test]
    fn serialization_is_canonical_and_round_trips() {
        let c = cascade_two();
        let s1 = c.to_canonical_json().unwrap();
        let back = Cascade::from_json_str(&s1).unwrap();
        assert_eq!(back, c);
        let s2 = back.to_canonical_json().unwrap();
        assert_eq!(s1, s2, "serialize/deserialize/serialize must be byte-identical");
        assert!(s1.ends_with('\n'));
    }

    #[test]
    fn deserialize_reports_field_path() {
        let c = cascade_two();
        let s = c.to_canonical_json().unwrap();
        let bad = s.replace("\"threshold\":0.0", "\"threshold\":\"zero\"");
        assert_ne!(bad, s);
        let err = Cascade::from_json_str(&bad).unwrap_err();
        match err {
            Error::Schema { path, .. } => {
                assert!(path.starts_with("stages[0]"), "path was {path}");
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn version_mismatch_is_reported() {
        let c = cascade_two();
        let s = c.to_canonical_json().unwrap().replace("\"version\":1", "\"version\":9");
        let err = Cascade::from_json_str(&s).unwrap_err();
        assert!(matches!(err, Error::Version { found: 9, expected: 1 }));
    }

    #[test]
    fn metrics_on_separable_batch() {
        let c = cascade_two();
        let m = manifest_two();
        let examples = vec![
            Example {
                id: 0,
                label: Label::Positive,
                features: vec![1.0, 1.0],
            },
            Example {
                id: 1,
                label: Label::Negative,
                features: vec![0.0, 9.0],
            },
            Example {
                id: 2,
                label: Label::Negative,
                features: vec![1.0, 0.0],
            },
        ];
        let ds = Dataset::new(examples, 2).unwrap();
        let metrics = batch_metrics(&c, &ds, &m, None).unwrap();
        assert_eq!(metrics.examples, 3);
        // id 2 survives (last threshold does not gate) with score 0: predicted
        // negative, correct.
        assert_eq!(metrics.survivors, 2);
        assert_eq!(metrics.error, 0.0);
        assert_eq!(metrics.fpr, Some(0.0));
        assert_eq!(metrics.fnr, Some(0.0));
        // Rejected negative pays 1, surviving negative pays 5.
        let neg = metrics.cost_negatives.unwrap();
        assert_eq!(neg.max, 5.0);
        assert_eq!(neg.mean, 3.0);
        assert!(!metrics.roc.is_empty());
    }

    #[test]
    fn metrics_without_negatives_omit_fpr() {
        let c = cascade_two();
        let m = manifest_two();
        let ds = Dataset::new(
            vec![Example {
                id: 0,
                label: Label::Positive,
                features: vec![1.0, 1.0],
            }],
            2,
        )
        .unwrap();
        let metrics = batch_metrics(&c, &ds, &m, None).unwrap();
        assert_eq!(metrics.fpr, None);
        assert_eq!(metrics.fnr, Some(0.0));
        assert!(metrics.roc.is_empty());
        assert!(metrics.cost_negatives.is_none());
    }

    #[test]
    fn survivors_pay_at_least_what_stage_one_rejects_pay() {
        let c = cascade_two();
        let m = manifest_two();
        let survivor = c.evaluate(&[1.0, 1.0], &m, None).unwrap();
        let rejected = c.evaluate(&[0.0, 0.0], &m, None).unwrap();
        assert_eq!(rejected.rejected_at, Some(1));
        assert!(survivor.total_omega >= rejected.total_omega);
    }
}
