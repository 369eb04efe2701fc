//! Labeled database of pre-fault operating conditions.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sampling::{condition_rng, LoadSampler};
use super::ScenarioError;
use crate::grid::{
    assess_security, solve_dc_power_flow, solve_dcopf, GridModel, LineId, PreFaultCondition, SecurityLabel,
    CORRECTIVE_RANGE_MW,
};

/// Per-condition cap on rejected draws before the generator gives up.
const MAX_ATTEMPTS_PER_CONDITION: usize = 1_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Calib,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Calib => "calib",
            Split::Test => "test",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "train" => Some(Split::Train),
            "calib" => Some(Split::Calib),
            "test" => Some(Split::Test),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSizes {
    pub train: usize,
    pub calib: usize,
    pub test: usize,
}

impl SplitSizes {
    pub fn total(&self) -> usize {
        self.train + self.calib + self.test
    }

    /// Split tags by sampling order: train, then calib, then test.
    pub fn tags(&self) -> Vec<Split> {
        let mut tags = vec![Split::Train; self.train];
        tags.extend(std::iter::repeat_n(Split::Calib, self.calib));
        tags.extend(std::iter::repeat_n(Split::Test, self.test));
        tags
    }
}

/// One pre-fault state and its security label for every contingency in scope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatingCondition {
    pub id: u64,
    pub loads_mw: Vec<f64>,
    pub dispatch_mw: Vec<f64>,
    pub angles_rad: Vec<f64>,
    pub flows_mw: Vec<f64>,
    pub split: Split,
    /// Aligned with [`LabeledDatabase::contingencies`].
    pub labels: Vec<SecurityLabel>,
}

impl OperatingCondition {
    /// Feature vector ordered loads, generator outputs, angles, flows.
    pub fn features(&self) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.feature_len());
        x.extend_from_slice(&self.loads_mw);
        x.extend_from_slice(&self.dispatch_mw);
        x.extend_from_slice(&self.angles_rad);
        x.extend_from_slice(&self.flows_mw);
        x
    }

    pub fn feature_len(&self) -> usize {
        self.loads_mw.len() + self.dispatch_mw.len() + self.angles_rad.len() + self.flows_mw.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDatabase {
    pub seed: u64,
    pub contingencies: Vec<LineId>,
    pub conditions: Vec<OperatingCondition>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationConfig {
    pub seed: u64,
    pub splits: SplitSizes,
    pub contingencies: Vec<LineId>,
    pub corrective_range_mw: f64,
    pub sampler: LoadSampler,
}

impl GenerationConfig {
    pub fn new(seed: u64, splits: SplitSizes, contingencies: Vec<LineId>) -> Self {
        Self {
            seed,
            splits,
            contingencies,
            corrective_range_mw: CORRECTIVE_RANGE_MW,
            sampler: LoadSampler::default(),
        }
    }
}

/// Training-split class counts for one contingency.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClassCounts {
    pub insecure: usize,
    pub secure: usize,
}

impl ClassCounts {
    pub fn total(&self) -> usize {
        self.insecure + self.secure
    }

    /// `(π⁰, π¹)`.
    pub fn priors(&self) -> (f64, f64) {
        let n = self.total() as f64;
        let p0 = self.insecure as f64 / n;
        (p0, 1.0 - p0)
    }

    pub fn majority(&self) -> SecurityLabel {
        SecurityLabel::from_secure(self.secure >= self.insecure)
    }
}

/// Samples, dispatches, solves and labels `splits.total()` conditions.
///
/// Pre-fault infeasible draws are rejected and redrawn from the same
/// per-condition stream, so the result does not depend on thread count.
pub fn build_database(grid: &GridModel, config: &GenerationConfig) -> Result<LabeledDatabase, ScenarioError> {
    let n = config.splits.total();
    if n == 0 {
        return Err(ScenarioError::InvalidConfig(
            "database needs at least one condition".into(),
        ));
    }
    for &c in &config.contingencies {
        grid.line(c)?;
    }
    let load_buses = grid.load_buses();
    if load_buses.len() != config.sampler.dims {
        return Err(ScenarioError::InvalidConfig(format!(
            "sampler draws {} loads but the network has {} load buses",
            config.sampler.dims,
            load_buses.len()
        )));
    }
    let chol = config.sampler.cholesky()?;
    let tags = config.splits.tags();

    let rows: Vec<(OperatingCondition, usize)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = condition_rng(config.seed, i as u64);
            let mut rejected = 0;
            loop {
                let loads = config.sampler.draw(&chol, &mut rng);
                let per_bus = grid.expand_loads(&loads)?;
                let dispatch = solve_dcopf(grid, &per_bus, None)?;
                if !dispatch.feasible {
                    rejected += 1;
                    if rejected >= MAX_ATTEMPTS_PER_CONDITION {
                        return Err(ScenarioError::GenerationStalled { rejected, accepted: 0 });
                    }
                    continue;
                }
                let injection = grid.injection(&dispatch.outputs_mw, &per_bus)?;
                let flow = solve_dc_power_flow(grid, &injection, None)?;
                let pre_fault = PreFaultCondition {
                    loads_mw: per_bus,
                    dispatch_mw: dispatch.outputs_mw.clone(),
                };
                let labels = config
                    .contingencies
                    .iter()
                    .map(|&c| assess_security(grid, &pre_fault, c, config.corrective_range_mw))
                    .collect::<Result<Vec<_>, _>>()?;
                let condition = OperatingCondition {
                    id: i as u64,
                    loads_mw: loads,
                    dispatch_mw: dispatch.outputs_mw,
                    angles_rad: flow.angles_rad,
                    flows_mw: flow.flows_mw,
                    split: tags[i],
                    labels,
                };
                return Ok((condition, rejected));
            }
        })
        .collect::<Result<_, ScenarioError>>()?;

    let rejected: usize = rows.iter().map(|(_, r)| r).sum();
    if rejected > n {
        return Err(ScenarioError::GenerationStalled { rejected, accepted: n });
    }
    Ok(LabeledDatabase {
        seed: config.seed,
        contingencies: config.contingencies.clone(),
        conditions: rows.into_iter().map(|(c, _)| c).collect(),
    })
}

impl LabeledDatabase {
    pub fn len(&self) -> usize {
        self.conditions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.conditions.is_empty()
    }

    pub fn contingency_index(&self, c: LineId) -> Result<usize, ScenarioError> {
        self.contingencies
            .iter()
            .position(|&x| x == c)
            .ok_or(ScenarioError::UnknownContingency(c))
    }

    pub fn indices(&self, split: Split) -> Vec<usize> {
        (0..self.conditions.len())
            .filter(|&i| self.conditions[i].split == split)
            .collect()
    }

    pub fn split_sizes(&self) -> SplitSizes {
        let count = |s| self.conditions.iter().filter(|c| c.split == s).count();
        SplitSizes {
            train: count(Split::Train),
            calib: count(Split::Calib),
            test: count(Split::Test),
        }
    }

    /// Feature rows and labels of one split for one contingency.
    pub fn split_data(
        &self,
        split: Split,
        contingency: LineId,
    ) -> Result<(Vec<Vec<f64>>, Vec<SecurityLabel>), ScenarioError> {
        let k = self.contingency_index(contingency)?;
        Ok(self
            .conditions
            .iter()
            .filter(|c| c.split == split)
            .map(|c| (c.features(), c.labels[k]))
            .unzip())
    }

    pub fn class_counts(&self, split: Split, contingency: LineId) -> Result<ClassCounts, ScenarioError> {
        let k = self.contingency_index(contingency)?;
        let mut counts = ClassCounts { insecure: 0, secure: 0 };
        for c in self.conditions.iter().filter(|c| c.split == split) {
            match c.labels[k] {
                SecurityLabel::Secure => counts.secure += 1,
                SecurityLabel::Insecure => counts.insecure += 1,
            }
        }
        Ok(counts)
    }

    /// Copy with split tags reassigned by a seeded shuffle; sizes are kept.
    pub fn resplit(&self, seed: u64) -> LabeledDatabase {
        let mut tags = self.split_sizes().tags();
        tags.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let mut db = self.clone();
        for (c, t) in db.conditions.iter_mut().zip(tags) {
            c.split = t;
        }
        db
    }
}
