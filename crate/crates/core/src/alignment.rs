//! Degree of alignment between norms and values.
//!
//! For a normative world with bounded path set `P`, the degree of alignment
//! is the mean over paths of each path's mean per-transition preference:
//!
//! ```text
//! D = 1/|P| * sum_{p in P} 1/|p| * sum_{d=1..|p|} R(pI[d], pF[d])
//! ```
//!
//! With [`Weighting::ProbabilityWeighted`] the outer mean becomes a weighted
//! mean, each path weighted by the product of its transition probabilities,
//! normalized over all of `P`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::norms::{apply_norm_set, Norm, NormError, NormSummary, NormativeWorld};
use crate::paths::{enumerate_paths, Path, PathError, PathSet, DEFAULT_HORIZON};
use crate::preferences::{pairwise_sum, Agent, PrefError, ValueId};
use crate::world::{Transition, World};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Weighting {
    /// Every path counts equally.
    #[default]
    Uniform,
    /// Paths weighted by their normalized probability. Transitions without
    /// a declared probability share their `(from, action)` group equally.
    ProbabilityWeighted,
}

impl std::fmt::Display for Weighting {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Weighting::Uniform => "uniform",
            Weighting::ProbabilityWeighted => "probability_weighted",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AlignOptions {
    pub horizon: usize,
    pub weighting: Weighting,
}

impl Default for AlignOptions {
    fn default() -> Self {
        AlignOptions { horizon: DEFAULT_HORIZON, weighting: Weighting::Uniform }
    }
}

impl AlignOptions {
    pub fn horizon(horizon: usize) -> Self {
        AlignOptions { horizon, ..Self::default() }
    }

    pub fn weighted(mut self, weighting: Weighting) -> Self {
        self.weighting = weighting;
        self
    }
}

/// Which agents and values a per-transition preference averages over.
#[derive(Debug, Clone)]
pub struct Scope<'a> {
    pub agents: Vec<&'a Agent>,
    pub values: Vec<ValueId>,
}

impl<'a> Scope<'a> {
    pub fn single(agent: &'a Agent, value: impl Into<ValueId>) -> Self {
        Scope { agents: vec![agent], values: vec![value.into()] }
    }

    pub fn new(agents: Vec<&'a Agent>, values: Vec<ValueId>) -> Self {
        Scope { agents, values }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AlignError {
    #[error(transparent)]
    Norm(#[from] NormError),
    #[error(transparent)]
    Path(#[from] PathError),
    #[error(transparent)]
    Preference(#[from] PrefError),
}

impl AlignError {
    /// Short machine-readable name of the failure.
    pub fn kind(&self) -> &'static str {
        match self {
            AlignError::Norm(e) => e.kind(),
            AlignError::Path(PathError::NoPaths) => "NoPaths",
            AlignError::Path(PathError::ZeroHorizon) => "ZeroHorizon",
            AlignError::Path(_) => "InvalidPath",
            AlignError::Preference(e) => e.kind(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathScore {
    pub path: Path,
    /// Per-transition preference changes along the path.
    pub deltas: Vec<f64>,
    /// Mean of `deltas`.
    pub mean: f64,
    /// Normalized weight of this path in the degree.
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlignmentReport {
    pub norms: Vec<String>,
    pub agents: Vec<String>,
    pub values: Vec<ValueId>,
    pub horizon: usize,
    pub weighting: Weighting,
    pub degree: f64,
    pub path_count: usize,
    pub mean_path_length: f64,
    pub paths: Vec<PathScore>,
    pub summary: NormSummary,
}

/// Degree of alignment of one norm with one value for one agent.
pub fn degree_of_alignment(
    world: &World,
    norm: &Norm,
    agent: &Agent,
    value: impl Into<ValueId>,
    opts: AlignOptions,
) -> Result<AlignmentReport, AlignError> {
    aggregated_alignment(world, std::slice::from_ref(norm), &Scope::single(agent, value), opts)
}

/// Degree of alignment of an ordered norm set with a scope of agents and
/// values. The per-transition preference is the mean over agents of the mean
/// over values. An empty norm set measures the base world.
pub fn aggregated_alignment(
    world: &World,
    norms: &[Norm],
    scope: &Scope<'_>,
    opts: AlignOptions,
) -> Result<AlignmentReport, AlignError> {
    let normative = apply_norm_set(world, norms)?;
    let paths = enumerate_paths(&normative.world, opts.horizon)?;
    align_paths(&normative, &paths, scope, opts)
}

/// Scores an already enumerated path set of a normative world.
pub fn align_paths(
    normative: &NormativeWorld,
    paths: &PathSet,
    scope: &Scope<'_>,
    opts: AlignOptions,
) -> Result<AlignmentReport, AlignError> {
    if scope.agents.is_empty() {
        return Err(PrefError::EmptyScope("agent").into());
    }
    if scope.values.is_empty() {
        return Err(PrefError::EmptyScope("value").into());
    }
    if paths.is_empty() {
        return Err(PathError::NoPaths.into());
    }
    let world = &normative.world;

    let mut scores = Vec::with_capacity(paths.len());
    for path in paths.iter() {
        let deltas =
            path.steps().iter().map(|t| transition_preference(world, t, scope)).collect::<Result<Vec<_>, _>>()?;
        let mean = pairwise_sum(&deltas) / deltas.len() as f64;
        scores.push(PathScore { path: path.clone(), deltas, mean, weight: 0.0 });
    }

    let weights = path_weights(world, paths, opts.weighting);
    for (score, w) in scores.iter_mut().zip(&weights) {
        score.weight = *w;
    }
    let degree = match opts.weighting {
        Weighting::Uniform => pairwise_sum(&scores.iter().map(|s| s.mean).collect::<Vec<_>>()) / scores.len() as f64,
        Weighting::ProbabilityWeighted => pairwise_sum(&scores.iter().map(|s| s.mean * s.weight).collect::<Vec<_>>()),
    };
    let lengths: Vec<f64> = paths.iter().map(|p| p.len() as f64).collect();

    Ok(AlignmentReport {
        norms: normative.norms_applied.clone(),
        agents: scope.agents.iter().map(|a| a.id.clone()).collect(),
        values: scope.values.clone(),
        horizon: paths.horizon,
        weighting: opts.weighting,
        degree,
        path_count: paths.len(),
        mean_path_length: pairwise_sum(&lengths) / lengths.len() as f64,
        paths: scores,
        summary: normative.summary.clone(),
    })
}

fn transition_preference(world: &World, t: &Transition, scope: &Scope<'_>) -> Result<f64, PrefError> {
    let s = world.state(t.from.as_str()).expect("validated transition");
    let s_next = world.state(t.to.as_str()).expect("validated transition");
    let per_agent = scope
        .agents
        .iter()
        .map(|agent| {
            let prefs =
                scope.values.iter().map(|v| agent.spec(v)?.preference(s, s_next)).collect::<Result<Vec<_>, _>>()?;
            Ok(pairwise_sum(&prefs) / prefs.len() as f64)
        })
        .collect::<Result<Vec<_>, PrefError>>()?;
    Ok(pairwise_sum(&per_agent) / per_agent.len() as f64)
}

/// Normalized path weights for the chosen weighting.
pub fn path_weights(world: &World, paths: &PathSet, weighting: Weighting) -> Vec<f64> {
    let n = paths.len();
    match weighting {
        Weighting::Uniform => vec![1.0 / n as f64; n],
        Weighting::ProbabilityWeighted => {
            let raw: Vec<f64> = paths
                .iter()
                .map(|p| p.steps().iter().map(|t| t.prob.unwrap_or_else(|| 1.0 / world.group_size(t) as f64)).product())
                .collect();
            let total = pairwise_sum(&raw);
            raw.into_iter().map(|w| w / total).collect()
        }
    }
}

/// Both degrees and their difference; positive favors `first`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelativeAlignment {
    pub first: AlignmentReport,
    pub second: AlignmentReport,
    pub difference: f64,
}

pub fn relative_alignment(
    world: &World,
    first: &Norm,
    second: &Norm,
    scope: &Scope<'_>,
    opts: AlignOptions,
) -> Result<RelativeAlignment, AlignError> {
    let first = aggregated_alignment(world, std::slice::from_ref(first), scope, opts)?;
    let second = aggregated_alignment(world, std::slice::from_ref(second), scope, opts)?;
    let difference = first.degree - second.degree;
    Ok(RelativeAlignment { first, second, difference })
}

/// Norm-by-value grid; failing cells keep their error.
#[derive(Debug, Clone)]
pub struct AlignmentMatrix {
    pub norms: Vec<String>,
    pub values: Vec<ValueId>,
    pub cells: Vec<Vec<Result<AlignmentReport, AlignError>>>,
}

impl AlignmentMatrix {
    pub fn cell(&self, norm: usize, value: usize) -> &Result<AlignmentReport, AlignError> {
        &self.cells[norm][value]
    }

    pub fn any_ok(&self) -> bool {
        self.cells.iter().flatten().any(Result::is_ok)
    }
}

pub fn alignment_matrix(
    world: &World,
    norms: &[Norm],
    agents: &[&Agent],
    values: &[ValueId],
    opts: AlignOptions,
) -> AlignmentMatrix {
    let cells = norms
        .iter()
        .map(|norm| {
            let prepared = apply_norm_set(world, std::slice::from_ref(norm))
                .map_err(AlignError::from)
                .and_then(|nw| Ok((enumerate_paths(&nw.world, opts.horizon)?, nw)));
            values
                .iter()
                .map(|value| match &prepared {
                    Ok((paths, nw)) => align_paths(nw, paths, &Scope::new(agents.to_vec(), vec![value.clone()]), opts),
                    Err(e) => Err(e.clone()),
                })
                .collect()
        })
        .collect();
    AlignmentMatrix { norms: norms.iter().map(|n| n.id.clone()).collect(), values: values.to_vec(), cells }
}
