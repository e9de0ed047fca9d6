//! Feature families, evaluation costs, and the synthetic benchmark generator.
//!
//! Features come in families. Using a feature costs its family's unit cost,
//! and some families sit behind a trigger: a one-time setup charge (think
//! "run the conv net once, then its activations are cheap to read") that an
//! example pays the first time any feature of that family touches it.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::data::{Dataset, Example, Label};
use crate::error::{Error, Result};
use crate::util;

/// Most triggers fit comfortably in a bitmask; the cap keeps per-example
/// trigger state `Copy`.
pub const MAX_TRIGGER_GROUPS: usize = 64;

// === manifest =============================================================

/// One family of features: the columns `start..end` share a unit cost and,
/// optionally, a trigger group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureFamily {
    pub name: String,
    pub start: usize,
    /// Exclusive.
    pub end: usize,
    pub unit_cost: f64,
    pub trigger_group: Option<String>,
    /// How well this family's features separate the classes, in [0, 1].
    /// Only the synthetic generator gives it meaning; manifests describing
    /// real data carry 0.
    #[serde(default)]
    pub disc: f64,
}

impl FeatureFamily {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }
}

/// A one-time per-example charge shared by every family that names it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriggerGroup {
    pub id: String,
    pub trigger_cost: f64,
}

/// The cost structure of a feature pool: families tiling the feature columns
/// plus the trigger groups they may reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyManifest {
    pub families: Vec<FeatureFamily>,
    #[serde(default)]
    pub trigger_groups: Vec<TriggerGroup>,
}

impl FamilyManifest {
    pub fn new(
        families: Vec<FeatureFamily>,
        trigger_groups: Vec<TriggerGroup>,
    ) -> Result<FamilyManifest> {
        let m = FamilyManifest {
            families,
            trigger_groups,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        self.check(true)
    }

    /// Validation without the trigger-cost floor, for pools that deliberately
    /// model a cheap trigger.
    pub fn validate_lenient(&self) -> Result<()> {
        self.check(false)
    }

    fn check(&self, enforce_trigger_floor: bool) -> Result<()> {
        if self.families.is_empty() {
            return Err(Error::schema("families", "at least one family is required"));
        }
        if self.trigger_groups.len() > MAX_TRIGGER_GROUPS {
            return Err(Error::schema(
                "trigger_groups",
                format!("at most {MAX_TRIGGER_GROUPS} trigger groups are supported"),
            ));
        }
        let mut seen = std::collections::BTreeSet::new();
        for (i, t) in self.trigger_groups.iter().enumerate() {
            if t.id.is_empty() {
                return Err(Error::schema(format!("trigger_groups[{i}].id"), "empty id"));
            }
            if !seen.insert(t.id.as_str()) {
                return Err(Error::schema(
                    format!("trigger_groups[{i}].id"),
                    format!("duplicate trigger group {:?}", t.id),
                ));
            }
            if !t.trigger_cost.is_finite() || t.trigger_cost <= 0.0 {
                return Err(Error::schema(
                    format!("trigger_groups[{i}].trigger_cost"),
                    "trigger cost must be finite and positive",
                ));
            }
        }
        let mut fam_names = std::collections::BTreeSet::new();
        for (i, f) in self.families.iter().enumerate() {
            if f.name.is_empty() {
                return Err(Error::schema(format!("families[{i}].name"), "empty name"));
            }
            if !fam_names.insert(f.name.as_str()) {
                return Err(Error::schema(
                    format!("families[{i}].name"),
                    format!("duplicate family name {:?}", f.name),
                ));
            }
            if f.end <= f.start {
                return Err(Error::schema(
                    format!("families[{i}].end"),
                    format!("empty feature range {}..{}", f.start, f.end),
                ));
            }
            if !f.unit_cost.is_finite() || f.unit_cost <= 0.0 {
                return Err(Error::schema(
                    format!("families[{i}].unit_cost"),
                    "unit cost must be finite and positive",
                ));
            }
            if !f.disc.is_finite() || !(0.0..=1.0).contains(&f.disc) {
                return Err(Error::schema(
                    format!("families[{i}].disc"),
                    "disc must be in [0, 1]",
                ));
            }
            if let Some(t) = &f.trigger_group {
                if !self.trigger_groups.iter().any(|g| &g.id == t) {
                    return Err(Error::schema(
                        format!("families[{i}].trigger_group"),
                        format!("unknown trigger group {t:?}"),
                    ));
                }
            }
        }
        // The ranges must tile 0..total: sorted by start, each family begins
        // exactly where the previous one ended.
        let mut order: Vec<usize> = (0..self.families.len()).collect();
        order.sort_by_key(|&i| self.families[i].start);
        let mut expected = 0usize;
        for &i in &order {
            let f = &self.families[i];
            if f.start != expected {
                let message = if f.start < expected {
                    format!("range {}..{} overlaps another family", f.start, f.end)
                } else {
                    format!("gap before range {}..{}", f.start, f.end)
                };
                return Err(Error::schema(format!("families[{i}].start"), message));
            }
            expected = f.end;
        }
        if enforce_trigger_floor {
            for (t, g) in self.trigger_groups.iter().enumerate() {
                let max_unit = self
                    .families
                    .iter()
                    .filter(|f| f.trigger_group.as_deref() == Some(g.id.as_str()))
                    .map(|f| f.unit_cost)
                    .fold(f64::NEG_INFINITY, f64::max);
                if max_unit > g.trigger_cost {
                    return Err(Error::schema(
                        format!("trigger_groups[{t}].trigger_cost"),
                        format!(
                            "trigger cost {} is below a member family's unit cost {max_unit}",
                            g.trigger_cost
                        ),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn feature_count(&self) -> usize {
        self.families.iter().map(|f| f.end).max().unwrap_or(0)
    }

    /// Index of the family owning feature column `feature`.
    pub fn family_of_feature(&self, feature: usize) -> Result<usize> {
        for (i, f) in self.families.iter().enumerate() {
            if (f.start..f.end).contains(&feature) {
                return Ok(i);
            }
        }
        Err(Error::InvalidInput(format!(
            "feature {feature} is out of range (pool has {} features)",
            self.feature_count()
        )))
    }

    /// Trigger index (position in `trigger_groups`) for a family, if any.
    pub fn trigger_of_family(&self, family: usize) -> Option<usize> {
        let id = self.families[family].trigger_group.as_deref()?;
        self.trigger_groups.iter().position(|t| t.id == id)
    }

    pub fn family_name(&self, family: usize) -> &str {
        &self.families[family].name
    }

    /// Sum of unit costs over the distinct features used by a learner.
    /// Repeats are deduplicated: reading a feature twice costs once.
    pub fn base_cost(&self, features: impl IntoIterator<Item = usize>) -> Result<f64> {
        let mut ids: Vec<usize> = features.into_iter().collect();
        ids.sort_unstable();
        ids.dedup();
        let mut cost = 0.0;
        for id in ids {
            let fam = self.family_of_feature(id)?;
            cost += self.families[fam].unit_cost;
        }
        Ok(cost)
    }

    /// Trigger groups touched by a feature set, as a bitmask.
    pub fn triggers_of(&self, features: impl IntoIterator<Item = usize>) -> Result<TriggerState> {
        let mut state = TriggerState::EMPTY;
        for id in features {
            let fam = self.family_of_feature(id)?;
            if let Some(t) = self.trigger_of_family(fam) {
                state = state.fire(t);
            }
        }
        Ok(state)
    }

    /// Cost of evaluating a feature set on one example whose already-fired
    /// triggers are `state`. Returns the charge and the updated state.
    pub fn cost_for_example(
        &self,
        features: impl IntoIterator<Item = usize> + Clone,
        state: TriggerState,
    ) -> Result<(f64, TriggerState)> {
        let mut cost = self.base_cost(features.clone())?;
        let needed = self.triggers_of(features)?;
        let mut next = state;
        for t in 0..self.trigger_groups.len() {
            if needed.fired(t) && !state.fired(t) {
                cost += self.trigger_groups[t].trigger_cost;
                next = next.fire(t);
            }
        }
        Ok((cost, next))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let s = util::canonical_json(self)?;
        util::write_atomic(path, s.as_bytes())
    }

    pub fn load(path: &Path) -> Result<FamilyManifest> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let m: FamilyManifest = util::from_json_str(&s)?;
        m.validate()?;
        Ok(m)
    }
}

/// Per-example record of which trigger groups have fired.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TriggerState {
    bits: u64,
}

impl TriggerState {
    pub const EMPTY: TriggerState = TriggerState { bits: 0 };

    pub fn fired(self, idx: usize) -> bool {
        debug_assert!(idx < MAX_TRIGGER_GROUPS);
        self.bits & (1u64 << idx) != 0
    }

    #[must_use]
    pub fn fire(self, idx: usize) -> TriggerState {
        debug_assert!(idx < MAX_TRIGGER_GROUPS);
        TriggerState {
            bits: self.bits | (1u64 << idx),
        }
    }

    #[must_use]
    pub fn union(self, other: TriggerState) -> TriggerState {
        TriggerState {
            bits: self.bits | other.bits,
        }
    }

    pub fn is_empty(self) -> bool {
        self.bits == 0
    }
}

// === synthetic generator ==================================================

/// Generator-side description of one family: count-based (ranges are
/// assigned cumulatively in declaration order) plus how well its features
/// separate the classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub name: String,
    pub count: usize,
    pub unit_cost: f64,
    #[serde(default)]
    pub trigger_group: Option<String>,
    /// Per-feature discriminability: class means sit at `±disc * delta`.
    pub disc: f64,
}

/// Synthetic binary task: Gaussian features with class-dependent means,
/// optionally correlated within a family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub families: Vec<FamilySpec>,
    #[serde(default)]
    pub trigger_groups: Vec<TriggerGroup>,
    pub n_pos: usize,
    pub n_neg: usize,
    /// Global separation scale multiplying every family's `disc`.
    pub delta: f64,
    /// Within-family correlation in [0, 1). Marginals stay N(±disc*delta, 1).
    #[serde(default)]
    pub correlation: f64,
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        self.manifest()?;
        if self.n_pos == 0 || self.n_neg == 0 {
            return Err(Error::Config(
                "generator needs at least one example of each class".into(),
            ));
        }
        if !self.delta.is_finite() || self.delta <= 0.0 {
            return Err(Error::Config("delta must be finite and positive".into()));
        }
        if !(0.0..1.0).contains(&self.correlation) {
            return Err(Error::Config(format!(
                "correlation must be in [0, 1), got {}",
                self.correlation
            )));
        }
        Ok(())
    }

    /// The cost manifest matching this generator. Depends only on the config,
    /// never on the seed.
    pub fn manifest(&self) -> Result<FamilyManifest> {
        let mut families = Vec::with_capacity(self.families.len());
        let mut start = 0;
        for f in &self.families {
            families.push(FeatureFamily {
                name: f.name.clone(),
                start,
                end: start + f.count,
                unit_cost: f.unit_cost,
                trigger_group: f.trigger_group.clone(),
                disc: f.disc,
            });
            start += f.count;
        }
        FamilyManifest::new(families, self.trigger_groups.clone())
    }

    /// Theoretical single-feature error of family `i` under a threshold at 0:
    /// `Phi(-disc * delta)`.
    pub fn family_bayes_error(&self, i: usize) -> f64 {
        gaussian_cdf(-self.families[i].disc * self.delta)
    }
}

/// Draw a dataset. Pure function of `(config, seed)`: the same pair always
/// produces the same bytes.
pub fn synth_generate(config: &GeneratorConfig, seed: u64) -> Result<(Dataset, FamilyManifest)> {
    config.validate()?;
    let manifest = config.manifest()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0);

    let total = config.n_pos + config.n_neg;
    let feature_count = manifest.feature_count();
    let rho = config.correlation;
    let shared = rho.sqrt();
    let indep = (1.0 - rho).sqrt();

    let mut examples = Vec::with_capacity(total);
    for id in 0..total {
        let label = if id < config.n_pos {
            Label::Positive
        } else {
            Label::Negative
        };
        let mut features = Vec::with_capacity(feature_count);
        for fam in &config.families {
            // One latent per (example, family) carries the correlation; each
            // feature mixes it with its own noise so the marginal stays unit
            // variance: rho + (1 - rho) = 1.
            let u: f64 = rng.sample(StandardNormal);
            let mean = label.sign() * fam.disc * config.delta;
            for _ in 0..fam.count {
                let eps: f64 = rng.sample(StandardNormal);
                features.push(mean + shared * u + indep * eps);
            }
        }
        examples.push(Example {
            id: id as u64,
            label,
            features,
        });
    }
    Ok((Dataset::new(examples, feature_count)?, manifest))
}

/// The benchmark pool used throughout the docs and tests: four directly
/// readable families in a cost ladder, plus a strong family gated behind a
/// one-time trigger charge.
pub fn default_cost_ladder() -> GeneratorConfig {
    let fam = |name: &str, count, unit_cost, disc, trigger: Option<&str>| FamilySpec {
        name: name.into(),
        count,
        unit_cost,
        disc,
        trigger_group: trigger.map(|s| s.into()),
    };
    GeneratorConfig {
        families: vec![
            fam("lum", 24, 1.0, 0.15, None),
            fam("grad", 16, 2.0, 0.2, None),
            fam("hog", 12, 4.0, 0.25, None),
            fam("gabor", 8, 9.0, 0.3, None),
            // Cheap per feature once the shared trigger has been paid, and
            // far more informative: expensive to wake up, then worth it.
            fam("deep", 8, 1.0, 0.6, Some("cnn")),
        ],
        trigger_groups: vec![TriggerGroup {
            id: "cnn".into(),
            trigger_cost: 50.0,
        }],
        n_pos: 1000,
        n_neg: 1000,
        delta: 3.0,
        correlation: 0.3,
    }
}

/// Standard normal CDF (Abramowitz & Stegun 7.1.26 erf fit, |err| < 1.5e-7).
pub fn gaussian_cdf(x: f64) -> f64 {
    let t = x / std::f64::consts::SQRT_2;
    0.5 * (1.0 + erf(t))
}

fn erf(x: f64) -> f64 {
    let sign = if x < 0.0 { -1.0 } else { 1.0 };
    let x = x.abs();
    let t = 1.0 / (1.0 + 0.3275911 * x);
    let poly = t
        * (0.254829592 + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
    sign * (1.0 - poly * (-x * x).exp())
}
