//! Boosting rounds under a complexity budget: candidate scoring, selection,
//! step sizes, stage thresholds, negative bootstrapping, and the training
//! loop that ties them together.
//!
//! Each round descends the joint objective `R_E + eta * R_C`. The
//! classification part scores a candidate by its weighted edge over the whole
//! training set; the complexity part charges the candidate's evaluation cost
//! on the examples that are still active, scaled by `eta / (m + 1)` so the
//! pressure fades as the cascade grows.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cascade::{Cascade, ExternalScores, ModelMetadata, Stage, StageLearner};
use crate::data::{Dataset, Example, Label};
use crate::error::{Error, Result};
use crate::pool::{FamilyManifest, TriggerState};
use crate::risk::ComplexityLoss;
use crate::tree::{fit_tree, FeatureColumns, Node, Tree};
use crate::util;

/// Smoothing added to both weight sums in the closed-form step size.
pub const ALPHA_EPSILON: f64 = 1e-10;

/// Hard cap on step sizes: `0.5 * ln(1e12)`, the value the closed form
/// reaches when one side holds a million-million times more weight.
pub fn alpha_max() -> f64 {
    0.5 * 1e12f64.ln()
}

/// Bracket tolerance for the golden-section step search.
pub const LINE_SEARCH_TOL: f64 = 1e-8;

/// Safety margin added to calibrated thresholds so the boundary positive
/// itself survives the strict `F + T > 0` test.
pub const THRESHOLD_MARGIN: f64 = 1e-12;

// === selection scores =====================================================

/// Full steepest-descent score of one candidate:
///
/// `D = (1/N) * sum_i y_i * [ w_i g_i + eta * active_i * psi_i * cost_i / (m+1) ]`
///
/// The classification part runs over every example; the active flag gates
/// only the complexity part, so an inactive example's cost can never move
/// the score.
#[allow(clippy::too_many_arguments)]
pub fn score_direction(
    outputs: &[i8],
    labels: &[f64],
    weights: &[f64],
    active: &[bool],
    psi: &[f64],
    costs: &[f64],
    m: usize,
    eta: f64,
) -> Result<f64> {
    let n = outputs.len();
    if labels.len() != n
        || weights.len() != n
        || active.len() != n
        || psi.len() != n
        || costs.len() != n
    {
        return Err(Error::InvalidInput(
            "score_direction inputs must all have the same length".into(),
        ));
    }
    if n == 0 {
        return Err(Error::InvalidInput(
            "score_direction needs at least one example".into(),
        ));
    }
    let mut edge = 0.0;
    let mut comp = 0.0;
    for i in 0..n {
        edge += labels[i] * weights[i] * outputs[i] as f64;
        if active[i] {
            comp += labels[i] * psi[i] * costs[i];
        }
    }
    let nf = n as f64;
    Ok(edge / nf + (eta / (m as f64 + 1.0)) * (comp / nf))
}

/// What evaluating one candidate costs across the active set.
#[derive(Debug, Clone, PartialEq)]
pub enum LearnerCost {
    /// Every active example is charged the same amount. This is the normal
    /// case during training: actives share one trigger history, so a
    /// candidate either fires a new trigger for all of them or for none.
    Uniform(f64),
    /// A full-length per-example cost vector (mixed trigger histories).
    PerExample(Vec<f64>),
}

impl LearnerCost {
    /// The single cost shared by all active examples, or the sentinel error
    /// when costs genuinely differ and the fast score would be wrong.
    pub fn uniform_over(&self, active: &[bool]) -> Result<f64> {
        match self {
            LearnerCost::Uniform(c) => Ok(*c),
            LearnerCost::PerExample(v) => {
                if v.len() != active.len() {
                    return Err(Error::InvalidInput(
                        "per-example costs must match the active mask length".into(),
                    ));
                }
                let mut shared: Option<f64> = None;
                for i in 0..v.len() {
                    if !active[i] {
                        continue;
                    }
                    match shared {
                        None => shared = Some(v[i]),
                        Some(c) if c == v[i] => {}
                        Some(_) => return Err(Error::CostNotUniform),
                    }
                }
                // With no active examples the complexity term vanishes.
                Ok(shared.unwrap_or(0.0))
            }
        }
    }
}

/// Label-only form of the score for example-independent costs:
///
/// `D = edge - (eta / (m+1)) * active_neg_fraction * cost`
///
/// `edge` is already normalized (`(1/N) sum y w g`) and `active_neg_fraction`
/// counts active negatives relative to the full set. The cost witness is
/// checked; mixed per-example costs return a sentinel error rather than a
/// wrong number.
pub fn score_direction_fast(
    edge: f64,
    cost: &LearnerCost,
    active: &[bool],
    active_neg_fraction: f64,
    m: usize,
    eta: f64,
) -> Result<f64> {
    let c = cost.uniform_over(active)?;
    Ok(edge - (eta / (m as f64 + 1.0)) * (active_neg_fraction * c))
}

// === candidate selection ==================================================

/// A fitted weak learner with everything selection needs to know about it.
#[derive(Debug, Clone)]
pub struct Candidate {
    pub tree: Tree,
    /// Learner output on every example.
    pub outputs: Vec<i8>,
    /// Unnormalized fitted edge `sum y w g` over the full set.
    pub edge: f64,
    pub cost: LearnerCost,
    /// Distinct-feature unit costs only, before trigger charges.
    pub base_cost: f64,
    /// Index of the family the candidate was fitted on.
    pub family: usize,
    /// Trigger groups the candidate's features belong to.
    pub triggers: TriggerState,
}

impl Candidate {
    fn lowest_feature(&self) -> usize {
        self.tree.features_used().first().copied().unwrap_or(usize::MAX)
    }

    fn root_threshold(&self) -> f64 {
        match self.tree.nodes.first() {
            Some(Node::Split { threshold, .. }) => *threshold,
            _ => f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SelectionOutcome {
    pub index: usize,
    /// Normalized score of the winner.
    pub d_value: f64,
    /// Its classification share, `(1/N) sum y w g`.
    pub edge_term: f64,
    /// Its complexity share (zero when `eta` is zero, never positive
    /// otherwise).
    pub complexity_term: f64,
}

/// Pick the candidate with the highest score.
///
/// Scores are compared unnormalized (`N * D`), which keeps the `eta = 0`
/// comparison an exact edge comparison. Ties resolve by smaller base cost,
/// then smaller lowest feature id, then smaller root threshold, then first
/// candidate in iteration order.
pub fn select_weak_learner(
    candidates: &[Candidate],
    labels: &[f64],
    weights: &[f64],
    active: &[bool],
    psi: &[f64],
    m: usize,
    eta: f64,
) -> Result<SelectionOutcome> {
    if candidates.is_empty() {
        return Err(Error::Config("no weak learner candidates to select from".into()));
    }
    let n = labels.len();
    if weights.len() != n || active.len() != n || psi.len() != n {
        return Err(Error::InvalidInput(
            "selection context lists must all have the same length".into(),
        ));
    }
    // sum over active examples of y * psi; with the hinge this is minus the
    // number of active negatives.
    let mut psi_sum = 0.0;
    for i in 0..n {
        if active[i] {
            psi_sum += labels[i] * psi[i];
        }
    }
    let scale = eta / (m as f64 + 1.0);

    let mut best: Option<(usize, f64, f64)> = None; // (index, U, comp_unnorm)
    for (idx, cand) in candidates.iter().enumerate() {
        if cand.outputs.len() != n {
            return Err(Error::InvalidInput(format!(
                "candidate {idx} outputs length {} does not match {n} examples",
                cand.outputs.len()
            )));
        }
        let comp = match cand.cost.uniform_over(active) {
            Ok(c) => c * psi_sum,
            Err(Error::CostNotUniform) => {
                let LearnerCost::PerExample(v) = &cand.cost else {
                    unreachable!("only per-example costs can be non-uniform");
                };
                let mut s = 0.0;
                for i in 0..n {
                    if active[i] {
                        s += labels[i] * psi[i] * v[i];
                    }
                }
                s
            }
            Err(e) => return Err(e),
        };
        let u = cand.edge + scale * comp;
        let better = match &best {
            None => true,
            Some((bi, bu, _)) => {
                u > *bu
                    || (u == *bu && {
                        let b = &candidates[*bi];
                        cand.base_cost < b.base_cost
                            || (cand.base_cost == b.base_cost
                                && (cand.lowest_feature() < b.lowest_feature()
                                    || (cand.lowest_feature() == b.lowest_feature()
                                        && cand.root_threshold() < b.root_threshold())))
                    })
            }
        };
        if better {
            best = Some((idx, u, comp));
        }
    }
    let (index, u, comp) = best.expect("candidates are non-empty");
    let nf = n as f64;
    Ok(SelectionOutcome {
        index,
        d_value: u / nf,
        edge_term: candidates[index].edge / nf,
        complexity_term: scale * comp / nf,
    })
}

// === step sizes ===========================================================

/// Optimal step for a binary learner:
/// `0.5 * ln((W_correct + eps) / (W_wrong + eps))`, clamped to
/// `[-alpha_max, alpha_max]`.
pub fn closed_form_alpha(labels: &[f64], weights: &[f64], outputs: &[i8]) -> Result<f64> {
    let n = labels.len();
    if weights.len() != n || outputs.len() != n {
        return Err(Error::InvalidInput(
            "closed_form_alpha inputs must all have the same length".into(),
        ));
    }
    let mut correct = 0.0;
    let mut wrong = 0.0;
    for i in 0..n {
        if labels[i] * outputs[i] as f64 > 0.0 {
            correct += weights[i];
        } else {
            wrong += weights[i];
        }
    }
    let a = 0.5 * ((correct + ALPHA_EPSILON) / (wrong + ALPHA_EPSILON)).ln();
    Ok(a.clamp(-alpha_max(), alpha_max()))
}

/// Golden-section minimization of the exponential risk of `F + alpha * g`
/// over `alpha` in `[0, alpha_max]`.
///
/// The objective is convex in `alpha`, so the bracket converges to the
/// global optimum on the interval. The complexity share of the joint
/// objective does not depend on `alpha` for a fixed learner, so it is not
/// part of the search. An identically zero `g` (or an empty set) returns 0.
pub fn line_search_alpha(labels: &[f64], scores: &[f64], outputs: &[f64]) -> Result<f64> {
    let n = labels.len();
    if scores.len() != n || outputs.len() != n {
        return Err(Error::InvalidInput(
            "line_search_alpha inputs must all have the same length".into(),
        ));
    }
    if n == 0 || outputs.iter().all(|g| *g == 0.0) {
        return Ok(0.0);
    }
    let risk = |alpha: f64| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            s += (-labels[i] * (scores[i] + alpha * outputs[i])).exp();
        }
        s / n as f64
    };
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (0.0, alpha_max());
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = risk(c);
    let mut fd = risk(d);
    while b - a > LINE_SEARCH_TOL {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = risk(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = risk(d);
        }
    }
    Ok(0.5 * (a + b))
}

// === stage thresholds =====================================================

/// How each stage's rejection threshold is chosen after the stage is fitted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdPolicy {
    /// A fixed threshold. A very large value disables rejection entirely,
    /// turning the cascade into monolithic boosting.
    Constant(f64),
    /// Keep at least this fraction of the training positives: the threshold
    /// is minus the `(1-q)`-quantile of positive scores, plus a hair so the
    /// boundary positive passes the strict test. `1.0` keeps them all.
    PositiveRecall(f64),
}

impl Default for ThresholdPolicy {
    fn default() -> Self {
        ThresholdPolicy::PositiveRecall(1.0)
    }
}

impl ThresholdPolicy {
    pub fn validate(&self) -> Result<()> {
        match self {
            ThresholdPolicy::Constant(t) if !t.is_finite() => Err(Error::InvalidInput(
                "constant threshold must be finite".into(),
            )),
            ThresholdPolicy::PositiveRecall(q) if !(*q > 0.0 && *q <= 1.0) => Err(
                Error::InvalidInput(format!("recall target must be in (0, 1], got {q}")),
            ),
            _ => Ok(()),
        }
    }
}

/// Threshold for the stage just fitted, from the scores of the positives
/// that are still active.
pub fn calibrate_threshold(policy: &ThresholdPolicy, positive_scores: &[f64]) -> Result<f64> {
    policy.validate()?;
    match policy {
        ThresholdPolicy::Constant(t) => Ok(*t),
        ThresholdPolicy::PositiveRecall(q) => {
            if positive_scores.is_empty() {
                return Err(Error::InvalidInput(
                    "threshold calibration needs at least one positive score".into(),
                ));
            }
            let mut sorted = positive_scores.to_vec();
            sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite scores"));
            let n = sorted.len();
            // floor errs toward keeping more positives.
            let k = (((1.0 - q) * n as f64).floor() as usize).min(n - 1);
            Ok(-sorted[k] + THRESHOLD_MARGIN)
        }
    }
}

// === bootstrapping ========================================================

#[derive(Debug, Clone)]
pub struct BootstrapOutcome {
    /// Hard negatives: pool members that survive the cascade, highest final
    /// score first.
    pub negatives: Vec<Example>,
    /// How many short of the target the pool came up.
    pub shortfall: usize,
}

/// Select replacement negatives from a pool: score every pool negative with
/// the cascade (early exit respected, every threshold applied; during
/// training the newest stage's threshold is live) and keep the
/// `target` highest-scoring survivors.
pub fn bootstrap_negatives(
    cascade: &Cascade,
    manifest: &FamilyManifest,
    pool: &Dataset,
    target: usize,
) -> Result<BootstrapOutcome> {
    let traces: Vec<(usize, f64, bool)> = pool
        .examples
        .par_iter()
        .enumerate()
        .filter(|(_, ex)| ex.label == Label::Negative)
        .map(|(i, ex)| {
            let trace = cascade.evaluate_rule(&ex.features, manifest, None, true)?;
            Ok((i, trace.score, trace.survived))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut survivors: Vec<(usize, f64)> = traces
        .into_iter()
        .filter(|(_, _, s)| *s)
        .map(|(i, f, _)| (i, f))
        .collect();
    survivors.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .expect("finite scores")
            .then(a.0.cmp(&b.0))
    });
    survivors.truncate(target);
    let negatives: Vec<Example> = survivors
        .iter()
        .map(|(i, _)| pool.examples[*i].clone())
        .collect();
    let shortfall = target - negatives.len();
    Ok(BootstrapOutcome {
        negatives,
        shortfall,
    })
}

// === training =============================================================

/// Which features each per-family candidate may use.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateFeatures {
    /// Every feature of the family.
    All,
    /// A seeded random subset of at most this many features per family.
    Sample(usize),
}

impl Default for CandidateFeatures {
    fn default() -> Self {
        CandidateFeatures::Sample(256)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Number of boosting rounds, and therefore stages.
    pub rounds: usize,
    #[serde(default = "default_tree_depth")]
    pub tree_depth: usize,
    /// Complexity pressure. Zero reduces training to plain boosting with
    /// thresholds bolted on.
    #[serde(default)]
    pub eta: f64,
    #[serde(default)]
    pub threshold_policy: ThresholdPolicy,
    /// Stage counts after which the negatives are replaced from the pool
    /// (1-based, strictly increasing, all below `rounds`).
    #[serde(default)]
    pub bootstrap_schedule: Vec<usize>,
    #[serde(default)]
    pub candidate_features: CandidateFeatures,
    #[serde(default)]
    pub seed: u64,
}

fn default_tree_depth() -> usize {
    2
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rounds == 0 {
            return Err(Error::Config("rounds must be at least 1".into()));
        }
        if self.tree_depth == 0 || self.tree_depth > 16 {
            return Err(Error::Config(format!(
                "tree depth must be in 1..=16, got {}",
                self.tree_depth
            )));
        }
        if !self.eta.is_finite() || self.eta < 0.0 {
            return Err(Error::Config(format!(
                "eta must be finite and nonnegative, got {}",
                self.eta
            )));
        }
        self.threshold_policy
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        for (i, w) in self.bootstrap_schedule.windows(2).enumerate() {
            if w[1] <= w[0] {
                return Err(Error::Config(format!(
                    "bootstrap schedule must be strictly increasing (entry {} is {} after {})",
                    i + 1,
                    w[1],
                    w[0]
                )));
            }
        }
        if let Some(first) = self.bootstrap_schedule.first() {
            if *first == 0 {
                return Err(Error::Config(
                    "bootstrap schedule entries are 1-based stage counts".into(),
                ));
            }
        }
        if let Some(last) = self.bootstrap_schedule.last() {
            if *last >= self.rounds {
                return Err(Error::Config(format!(
                    "bootstrap after stage {last} is outside a {}-round run",
                    self.rounds
                )));
            }
        }
        if let CandidateFeatures::Sample(k) = self.candidate_features {
            if k == 0 {
                return Err(Error::Config(
                    "candidate feature sample size must be at least 1".into(),
                ));
            }
        }
        Ok(())
    }
}

/// One row of the training log.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoundRecord {
    /// 1-based stage index.
    pub round: usize,
    pub family: String,
    /// Normalized selection score of the winning candidate.
    pub d_value: f64,
    /// Its classification share.
    pub edge: f64,
    /// Its complexity share; exactly zero when eta is zero.
    pub complexity: f64,
    pub alpha: f64,
    pub threshold: f64,
    /// Unit costs of the stage's distinct features.
    pub base_cost: f64,
    /// Base cost plus trigger charges newly fired by this stage.
    pub stage_cost: f64,
    /// Active examples after this stage's rejection (and bootstrap, when one
    /// ran this round).
    pub active: usize,
    pub active_negatives: usize,
    /// Training error before this stage's threshold is applied, under the
    /// deployed prediction rule (rejected, or scored at zero or below, means
    /// negative).
    pub train_error: f64,
    pub bootstrapped: bool,
    pub shortfall: usize,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub cascade: Cascade,
    pub log: Vec<RoundRecord>,
}

struct WorkingSet {
    examples: Vec<Example>,
    columns: FeatureColumns,
    labels: Vec<f64>,
    psi: Vec<f64>,
    scores: Vec<f64>,
    active: Vec<bool>,
    fit_mask: Vec<bool>,
}

impl WorkingSet {
    fn fresh(examples: Vec<Example>, feature_count: usize, loss: ComplexityLoss) -> WorkingSet {
        let n = examples.len();
        let columns = FeatureColumns::from_examples(&examples, feature_count);
        let labels: Vec<f64> = examples.iter().map(|e| e.label.sign()).collect();
        let psi: Vec<f64> = examples.iter().map(|e| loss.psi(e.label)).collect();
        WorkingSet {
            examples,
            columns,
            labels,
            psi,
            scores: vec![0.0; n],
            active: vec![true; n],
            fit_mask: vec![true; n],
        }
    }

    fn len(&self) -> usize {
        self.examples.len()
    }
}

/// Train a cascade of `config.rounds` stages.
///
/// Per round: recompute margin weights from the running scores; fit one
/// candidate tree per feature family; select by the complexity-aware score;
/// take the closed-form step; calibrate the new stage's threshold on the
/// active positives; retire newly rejected examples; and, when scheduled,
/// replace the negatives with hard ones from `pool`. Fully deterministic
/// given `(dataset, manifest, pool, config)`.
pub fn train_compact(
    dataset: &Dataset,
    manifest: &FamilyManifest,
    pool: Option<&Dataset>,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    config.validate()?;
    manifest.validate()?;
    dataset.require_both_classes()?;
    if dataset.feature_count != manifest.feature_count() {
        return Err(Error::Config(format!(
            "dataset has {} features but the manifest describes {}",
            dataset.feature_count,
            manifest.feature_count()
        )));
    }
    if let Some(p) = pool {
        if p.feature_count != dataset.feature_count {
            return Err(Error::Config(
                "negative pool feature count does not match the dataset".into(),
            ));
        }
    }
    if !config.bootstrap_schedule.is_empty() && pool.is_none() {
        return Err(Error::Config(
            "bootstrapping is scheduled but no negative pool was provided".into(),
        ));
    }

    let loss = ComplexityLoss::Hinge;
    let metadata = ModelMetadata {
        config_digest: util::sha256_hex(util::canonical_json(config)?.as_bytes()),
        manifest_digest: util::sha256_hex(util::canonical_json(manifest)?.as_bytes()),
        seed: config.seed,
        tool_version: env!("CARGO_PKG_VERSION").into(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);

    let target_negatives = dataset.class_counts().1;
    let mut work = WorkingSet::fresh(dataset.examples.clone(), dataset.feature_count, loss);
    let mut stages: Vec<Stage> = Vec::with_capacity(config.rounds);
    let mut fired = TriggerState::EMPTY;
    let mut log: Vec<RoundRecord> = Vec::with_capacity(config.rounds);

    for round in 0..config.rounds {
        let m = stages.len();
        let n = work.len();
        let weights: Vec<f64> = (0..n)
            .map(|i| (-work.labels[i] * work.scores[i]).exp())
            .collect();

        let candidates = build_candidates(
            &work.columns,
            manifest,
            config,
            &mut rng,
            &work.labels,
            &weights,
            &work.fit_mask,
            fired,
        )?;
        let sel = select_weak_learner(
            &candidates,
            &work.labels,
            &weights,
            &work.active,
            &work.psi,
            m,
            config.eta,
        )?;
        let mut picked = candidates;
        let cand = picked.swap_remove(sel.index);

        let alpha = closed_form_alpha(&work.labels, &weights, &cand.outputs)?;
        for i in 0..n {
            work.scores[i] += alpha * cand.outputs[i] as f64;
        }

        // Error under the deployed rule, before this stage's threshold
        // exists: an example already rejected, or scoring at or below zero,
        // is predicted negative.
        let mut wrong = 0usize;
        for i in 0..n {
            let pred = if work.active[i] && work.scores[i] > 0.0 {
                1.0
            } else {
                -1.0
            };
            if pred != work.labels[i] {
                wrong += 1;
            }
        }
        let train_error = wrong as f64 / n as f64;

        let positive_scores: Vec<f64> = (0..n)
            .filter(|&i| work.active[i] && work.labels[i] > 0.0)
            .map(|i| work.scores[i])
            .collect();
        let threshold = calibrate_threshold(&config.threshold_policy, &positive_scores)
            .map_err(|e| Error::Config(format!("stage {}: {e}", m + 1)))?;

        let stage_cost = cand
            .cost
            .uniform_over(&work.active)
            .expect("training candidates carry uniform costs");
        stages.push(Stage {
            learner: StageLearner::Tree(cand.tree),
            alpha,
            threshold: Some(threshold),
        });
        fired = fired.union(cand.triggers);
        for i in 0..n {
            if work.active[i] && work.scores[i] + threshold <= 0.0 {
                work.active[i] = false;
            }
        }

        let mut bootstrapped = false;
        let mut shortfall = 0;
        if config.bootstrap_schedule.contains(&(round + 1)) {
            let pool = pool.expect("validated above");
            let interim = Cascade::new(metadata.clone(), stages.clone())?;
            let outcome = bootstrap_negatives(&interim, manifest, pool, target_negatives)?;
            shortfall = outcome.shortfall;
            bootstrapped = true;
            work = rebuild_after_bootstrap(&interim, manifest, work, outcome.negatives, loss)?;
        }

        let active = work.active.iter().filter(|a| **a).count();
        let active_negatives = (0..work.len())
            .filter(|&i| work.active[i] && work.labels[i] < 0.0)
            .count();
        log.push(RoundRecord {
            round: round + 1,
            family: manifest.family_name(cand.family).to_string(),
            d_value: sel.d_value,
            edge: sel.edge_term,
            complexity: sel.complexity_term,
            alpha,
            threshold,
            base_cost: cand.base_cost,
            stage_cost,
            active,
            active_negatives,
            train_error,
            bootstrapped,
            shortfall,
        });
    }

    let cascade = Cascade::new(metadata, stages)?;
    Ok(TrainOutcome { cascade, log })
}

/// Replace the working set's negatives with bootstrapped ones, keeping every
/// positive (rejected positives included: their weights still shape the
/// classification term). Scores and flags for the newcomers are recomputed
/// from scratch through the cascade built so far.
fn rebuild_after_bootstrap(
    cascade: &Cascade,
    manifest: &FamilyManifest,
    work: WorkingSet,
    negatives: Vec<Example>,
    loss: ComplexityLoss,
) -> Result<WorkingSet> {
    let feature_count = work.columns.feature_count();
    let mut examples: Vec<Example> = Vec::with_capacity(work.len());
    let mut scores: Vec<f64> = Vec::with_capacity(work.len());
    let mut active: Vec<bool> = Vec::with_capacity(work.len());
    for (i, ex) in work.examples.iter().enumerate() {
        if ex.label == Label::Positive {
            examples.push(ex.clone());
            scores.push(work.scores[i]);
            active.push(work.active[i]);
        }
    }
    for ex in negatives {
        let trace = cascade.evaluate_rule(&ex.features, manifest, None, true)?;
        debug_assert!(trace.survived, "bootstrap returns survivors only");
        examples.push(ex);
        scores.push(trace.score);
        active.push(true);
    }
    let mut rebuilt = WorkingSet::fresh(examples, feature_count, loss);
    rebuilt.scores = scores;
    rebuilt.active = active;
    Ok(rebuilt)
}

#[allow(clippy::too_many_arguments)]
fn build_candidates(
    columns: &FeatureColumns,
    manifest: &FamilyManifest,
    config: &TrainConfig,
    rng: &mut ChaCha8Rng,
    labels: &[f64],
    weights: &[f64],
    fit_mask: &[bool],
    fired: TriggerState,
) -> Result<Vec<Candidate>> {
    // Draw the per-family subsets sequentially so the RNG stream is fixed,
    // then fit in parallel (collect preserves family order).
    let mut subsets: Vec<(usize, Vec<usize>)> = Vec::with_capacity(manifest.families.len());
    let mut start = 0;
    for (fi, fam) in manifest.families.iter().enumerate() {
        let all: Vec<usize> = (start..start + fam.count).collect();
        let chosen = match config.candidate_features {
            CandidateFeatures::All => all,
            CandidateFeatures::Sample(k) if fam.count <= k => all,
            CandidateFeatures::Sample(k) => {
                let mut picked = rand::seq::index::sample(rng, fam.count, k).into_vec();
                picked.sort_unstable();
                picked.into_iter().map(|j| start + j).collect()
            }
        };
        subsets.push((fi, chosen));
        start += fam.count;
    }

    subsets
        .par_iter()
        .map(|(fi, features)| {
            let fit = fit_tree(
                columns,
                features,
                config.tree_depth,
                labels,
                weights,
                fit_mask,
            )?;
            let used = fit.tree.features_used();
            let base_cost = manifest.base_cost(used.iter().copied())?;
            let triggers = manifest.triggers_of(used.iter().copied())?;
            let mut cost = base_cost;
            for t in 0..manifest.triggers.len() {
                if triggers.fired(t) && !fired.fired(t) {
                    cost += manifest.triggers[t].cost;
                }
            }
            Ok(Candidate {
                tree: fit.tree,
                outputs: fit.outputs,
                edge: fit.edge,
                cost: LearnerCost::Uniform(cost),
                base_cost,
                family: *fi,
                triggers,
            })
        })
        .collect()
}

// === external stage embedding =============================================

/// Append a terminal stage whose output is an externally computed score.
///
/// The step size comes from a line search over the examples still active
/// under the cascade (every threshold applied: the former last stage's
/// threshold now gates entry to the new stage). The terminal stage itself
/// carries no threshold.
pub fn embed_external_stage(
    cascade: &Cascade,
    scores: &ExternalScores,
    dataset: &Dataset,
    manifest: &FamilyManifest,
) -> Result<Cascade> {
    cascade.validate()?;
    scores.validate()?;
    if cascade.has_external_stage() {
        return Err(Error::InvalidInput(
            "the cascade already ends in an external stage".into(),
        ));
    }

    let mut labels = Vec::new();
    let mut running = Vec::new();
    let mut outputs = Vec::new();
    let mut missing: Vec<u64> = Vec::new();
    for ex in &dataset.examples {
        let trace = cascade.evaluate_rule(&ex.features, manifest, None, true)?;
        if !trace.survived {
            continue;
        }
        match scores.get(ex.id) {
            Some(s) => {
                labels.push(ex.label.sign());
                running.push(trace.score);
                outputs.push(s);
            }
            None => missing.push(ex.id),
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

    let alpha = line_search_alpha(&labels, &running, &outputs)?;
    let mut stages = cascade.stages.clone();
    stages.push(Stage {
        learner: StageLearner::External,
        alpha,
        threshold: None,
    });
    Cascade::new(cascade.metadata.clone(), stages)
}
