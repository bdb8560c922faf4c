//! Value-based revealed preferences and their pointwise aggregation.
//!
//! A preference compares a state `s` with a successor `s'` for one agent and
//! one value and yields a degree in `[-1, 1]`; positive means `s'` is the
//! better state under that value.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{BindScope, ExprError, Guard};
use crate::world::{Schema, State, StateId};

/// Tolerance used when checking `table(a, b) = -table(b, a)`.
pub const ANTISYMMETRY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ValueId(pub String);

impl ValueId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl std::fmt::Display for ValueId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ValueId {
    fn from(s: &str) -> Self {
        ValueId(s.to_string())
    }
}

impl std::borrow::Borrow<str> for ValueId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PrefError {
    #[error("agent '{agent}' holds no spec for value '{value}'")]
    UnknownValue { agent: String, value: ValueId },
    #[error("value '{value}' has no preference information for state '{state}'")]
    MissingPreference { value: ValueId, state: StateId },
    #[error("value '{value}' has no table entry for ('{from}', '{to}')")]
    MissingPair { value: ValueId, from: StateId, to: StateId },
    #[error("value '{value}': {source}")]
    Formula {
        value: ValueId,
        #[source]
        source: ExprError,
    },
    #[error("cannot aggregate over an empty {0} set")]
    EmptyScope(&'static str),
}

impl PrefError {
    pub fn kind(&self) -> &'static str {
        match self {
            PrefError::UnknownValue { .. } => "UnknownValue",
            PrefError::MissingPreference { .. } | PrefError::MissingPair { .. } => "MissingPreference",
            PrefError::Formula { .. } => "SchemaMismatch",
            PrefError::EmptyScope(_) => "EmptyScope",
        }
    }
}

/// How a value turns a pair of states into a preference degree.
#[derive(Debug, Clone, PartialEq)]
pub enum PreferenceKind {
    /// Utility in `[0, 1]` per state; preference is `u(s') - u(s)`.
    UtilityMap(BTreeMap<StateId, f64>),
    /// Explicit preferences in `[-1, 1]`; a missing direction is the
    /// negation of the listed one.
    PairwiseTable(BTreeMap<(StateId, StateId), f64>),
    /// Satisfaction probability of a formula; preference is `p(s') - p(s)`.
    /// States absent from `satisfaction` use 1 when the formula holds and 0
    /// otherwise.
    Predicate { formula: Guard, satisfaction: BTreeMap<StateId, f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValueSpec {
    pub value: ValueId,
    pub description: Option<String>,
    pub kind: PreferenceKind,
}

impl ValueSpec {
    pub fn new(value: impl Into<ValueId>, kind: PreferenceKind) -> Self {
        ValueSpec { value: value.into(), description: None, kind }
    }

    pub fn utility<I, S>(value: &str, entries: I) -> Self
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<StateId>,
    {
        ValueSpec::new(value, PreferenceKind::UtilityMap(entries.into_iter().map(|(s, u)| (s.into(), u)).collect()))
    }

    /// `f_v(p, p') = p' - p` over satisfaction probabilities.
    pub fn satisfaction(&self, state: &State) -> Result<f64, PrefError> {
        match &self.kind {
            PreferenceKind::Predicate { formula, satisfaction } => match satisfaction.get(&state.id) {
                Some(p) => Ok(*p),
                None => formula
                    .holds(&state.vars, None)
                    .map(|b| if b { 1.0 } else { 0.0 })
                    .map_err(|source| PrefError::Formula { value: self.value.clone(), source }),
            },
            _ => Err(PrefError::MissingPreference { value: self.value.clone(), state: state.id.clone() }),
        }
    }

    pub fn preference(&self, s: &State, s_next: &State) -> Result<f64, PrefError> {
        match &self.kind {
            PreferenceKind::UtilityMap(map) => {
                let u = |st: &State| {
                    map.get(&st.id)
                        .copied()
                        .ok_or_else(|| PrefError::MissingPreference { value: self.value.clone(), state: st.id.clone() })
                };
                let (a, b) = (u(s)?, u(s_next)?);
                Ok((b - a).clamp(-1.0, 1.0))
            }
            PreferenceKind::PairwiseTable(table) => {
                if s.id == s_next.id {
                    return Ok(0.0);
                }
                if let Some(p) = table.get(&(s.id.clone(), s_next.id.clone())) {
                    return Ok(*p);
                }
                if let Some(p) = table.get(&(s_next.id.clone(), s.id.clone())) {
                    return Ok(-p);
                }
                Err(PrefError::MissingPair { value: self.value.clone(), from: s.id.clone(), to: s_next.id.clone() })
            }
            PreferenceKind::Predicate { .. } => Ok(self.satisfaction(s_next)? - self.satisfaction(s)?),
        }
    }

    /// Checks the formula of a predicate spec against a schema.
    pub fn bind(&self, schema: &Schema) -> Result<(), ExprError> {
        match &self.kind {
            PreferenceKind::Predicate { formula, .. } => formula.bind(&BindScope { schema, actions: None }),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Agent {
    pub id: String,
    pub description: Option<String>,
    pub bindings: BTreeMap<ValueId, ValueSpec>,
}

impl Agent {
    pub fn new(id: impl Into<String>, specs: impl IntoIterator<Item = ValueSpec>) -> Self {
        Agent { id: id.into(), description: None, bindings: specs.into_iter().map(|s| (s.value.clone(), s)).collect() }
    }

    pub fn spec(&self, value: &ValueId) -> Result<&ValueSpec, PrefError> {
        self.bindings.get(value).ok_or_else(|| PrefError::UnknownValue { agent: self.id.clone(), value: value.clone() })
    }
}

/// `R_pr` for one agent and value.
pub fn eval_pref(agent: &Agent, value: &ValueId, s: &State, s_next: &State) -> Result<f64, PrefError> {
    agent.spec(value)?.preference(s, s_next)
}

/// Mean of [`eval_pref`] over a set of values.
pub fn aggregate_values(agent: &Agent, values: &[ValueId], s: &State, s_next: &State) -> Result<f64, PrefError> {
    if values.is_empty() {
        return Err(PrefError::EmptyScope("value"));
    }
    let prefs = values.iter().map(|v| eval_pref(agent, v, s, s_next)).collect::<Result<Vec<_>, _>>()?;
    Ok(pairwise_sum(&prefs) / prefs.len() as f64)
}

/// Mean of [`eval_pref`] over a set of agents.
pub fn aggregate_agents(agents: &[&Agent], value: &ValueId, s: &State, s_next: &State) -> Result<f64, PrefError> {
    if agents.is_empty() {
        return Err(PrefError::EmptyScope("agent"));
    }
    let prefs = agents.iter().map(|a| eval_pref(a, value, s, s_next)).collect::<Result<Vec<_>, _>>()?;
    Ok(pairwise_sum(&prefs) / prefs.len() as f64)
}

/// Deterministic pairwise summation.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        2 => xs[0] + xs[1],
        n => {
            let (a, b) = xs.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

// ---------------------------------------------------------------------------
// validation

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "violation")]
pub enum SpecViolation {
    RangeViolation { state: String, got: f64, min: f64, max: f64 },
    AntisymmetryViolation { from: StateId, to: StateId, forward: f64, backward: f64 },
    DiagonalViolation { state: StateId, got: f64 },
}

impl std::fmt::Display for SpecViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SpecViolation::RangeViolation { state, got, min, max } => {
                write!(f, "RangeViolation: {state} = {got} outside [{min}, {max}]")
            }
            SpecViolation::AntisymmetryViolation { from, to, forward, backward } => {
                write!(f, "AntisymmetryViolation: table({from}, {to}) = {forward} but table({to}, {from}) = {backward}")
            }
            SpecViolation::DiagonalViolation { state, got } => {
                write!(f, "DiagonalViolation: table({state}, {state}) = {got}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpecCheck {
    /// Where the spec lives, e.g. `values.Safety` or `agents.driver.Safety`.
    pub location: String,
    pub value: ValueId,
    pub violations: Vec<SpecViolation>,
}

impl SpecCheck {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<SpecCheck>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(SpecCheck::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &SpecCheck> {
        self.checks.iter().filter(|c| !c.passed())
    }
}

/// Shared value specs plus the agents holding them.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Catalog {
    pub values: BTreeMap<ValueId, ValueSpec>,
    pub agents: BTreeMap<String, Agent>,
}

impl Catalog {
    pub fn agent(&self, id: &str) -> Option<&Agent> {
        self.agents.get(id)
    }

    pub fn all_agents(&self) -> Vec<&Agent> {
        self.agents.values().collect()
    }

    pub fn value_ids(&self) -> Vec<ValueId> {
        self.values.keys().cloned().collect()
    }
}

pub fn check_spec(location: String, spec: &ValueSpec) -> SpecCheck {
    let mut violations = Vec::new();
    let range = |violations: &mut Vec<SpecViolation>, state: String, got: f64, min: f64, max: f64| {
        if !(got >= min && got <= max) {
            violations.push(SpecViolation::RangeViolation { state, got, min, max });
        }
    };
    match &spec.kind {
        PreferenceKind::UtilityMap(map) => {
            for (s, u) in map {
                range(&mut violations, s.to_string(), *u, 0.0, 1.0);
            }
        }
        PreferenceKind::Predicate { satisfaction, .. } => {
            for (s, p) in satisfaction {
                range(&mut violations, s.to_string(), *p, 0.0, 1.0);
            }
        }
        PreferenceKind::PairwiseTable(table) => {
            for ((a, b), p) in table {
                if a == b {
                    if *p != 0.0 {
                        violations.push(SpecViolation::DiagonalViolation { state: a.clone(), got: *p });
                    }
                    continue;
                }
                range(&mut violations, format!("({a}, {b})"), *p, -1.0, 1.0);
                if a < b {
                    if let Some(q) = table.get(&(b.clone(), a.clone())) {
                        if (p + q).abs() > ANTISYMMETRY_TOLERANCE || (p + q).is_nan() {
                            violations.push(SpecViolation::AntisymmetryViolation {
                                from: a.clone(),
                                to: b.clone(),
                                forward: *p,
                                backward: *q,
                            });
                        }
                    }
                }
            }
        }
    }
    SpecCheck { location, value: spec.value.clone(), violations }
}

/// Checks every spec in the catalog. Never fails; failures are reported.
pub fn validate_specs(catalog: &Catalog) -> ValidationReport {
    let mut checks: Vec<SpecCheck> =
        catalog.values.iter().map(|(id, spec)| check_spec(format!("values.{id}"), spec)).collect();
    for agent in catalog.agents.values() {
        for (id, spec) in &agent.bindings {
            // inherited shared specs were already checked above
            if catalog.values.get(id) == Some(spec) {
                continue;
            }
            checks.push(check_spec(format!("agents.{}.{id}", agent.id), spec));
        }
    }
    ValidationReport { checks }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{Assignment, Scalar};

    fn st(id: &str) -> State {
        State::new(id, Assignment::new())
    }

    fn money(id: &str, m: i64) -> State {
        State::new(id, Assignment::from([("M".to_string(), Scalar::from(m))]))
    }

    fn safety() -> ValueSpec {
        ValueSpec::utility("Safety", [("Safe", 1.0), ("Unsafe", 0.8), ("Accident", 0.4)])
    }

    fn efficiency() -> ValueSpec {
        ValueSpec::utility("Efficiency", [("Safe", 0.3), ("Unsafe", 0.9), ("Accident", 0.0)])
    }

    fn table(entries: &[(&str, &str, f64)]) -> ValueSpec {
        ValueSpec::new(
            "Comfort",
            PreferenceKind::PairwiseTable(
                entries.iter().map(|(a, b, p)| ((StateId::from(*a), StateId::from(*b)), *p)).collect(),
            ),
        )
    }

    #[test]
    fn driving_safety_deltas() {
        let agent = Agent::new("driver", [safety()]);
        let v = ValueId::from("Safety");
        let d1 = eval_pref(&agent, &v, &st("Safe"), &st("Unsafe")).unwrap();
        let d2 = eval_pref(&agent, &v, &st("Unsafe"), &st("Accident")).unwrap();
        assert!((d1 + 0.2).abs() < 1e-12, "{d1}");
        assert!((d2 + 0.4).abs() < 1e-12, "{d2}");
        assert_eq!(eval_pref(&agent, &v, &st("Safe"), &st("Safe")).unwrap(), 0.0);
    }

    #[test]
    fn predicate_on_rewritten_states() {
        let spec = ValueSpec::new(
            "Wealth",
            PreferenceKind::Predicate { formula: Guard::parse("M >= 140").unwrap(), satisfaction: BTreeMap::new() },
        );
        assert_eq!(spec.preference(&money("a", 150), &money("b", 140)).unwrap(), 0.0);
        assert_eq!(spec.preference(&money("a", 100), &money("b", 140)).unwrap(), 1.0);
        let mut partial = spec.clone();
        if let PreferenceKind::Predicate { satisfaction, .. } = &mut partial.kind {
            satisfaction.insert("a".into(), 0.25);
        }
        assert_eq!(partial.preference(&money("a", 100), &money("b", 140)).unwrap(), 0.75);
    }

    #[test]
    fn missing_preference_for_unknown_state() {
        let agent = Agent::new("driver", [safety()]);
        let err = eval_pref(&agent, &"Safety".into(), &st("Safe"), &st("@[risk=5]")).unwrap_err();
        assert_eq!(err.kind(), "MissingPreference");
        let err = eval_pref(&agent, &"Speed".into(), &st("Safe"), &st("Safe")).unwrap_err();
        assert_eq!(err.kind(), "UnknownValue");
        let t = table(&[("a", "b", 0.3)]);
        assert_eq!(t.preference(&st("a"), &st("c")).unwrap_err().kind(), "MissingPreference");
    }

    #[test]
    fn pairwise_table_infers_reverse() {
        let t = table(&[("a", "b", 0.3)]);
        assert_eq!(t.preference(&st("a"), &st("b")).unwrap(), 0.3);
        assert_eq!(t.preference(&st("b"), &st("a")).unwrap(), -0.3);
        assert_eq!(t.preference(&st("b"), &st("b")).unwrap(), 0.0);
    }

    #[test]
    fn aggregation() {
        let agent = Agent::new("driver", [safety(), efficiency()]);
        let (s, u) = (st("Safe"), st("Unsafe"));
        let safety_only = aggregate_values(&agent, &["Safety".into()], &s, &u).unwrap();
        assert_eq!(safety_only, eval_pref(&agent, &"Safety".into(), &s, &u).unwrap());
        let both = aggregate_values(&agent, &["Safety".into(), "Efficiency".into()], &s, &u).unwrap();
        assert!((both - 0.2).abs() < 1e-12, "{both}");
        let thrice = aggregate_values(&agent, &["Safety".into(), "Safety".into(), "Safety".into()], &s, &u).unwrap();
        assert!((thrice - safety_only).abs() < 1e-15);
        assert!(aggregate_values(&agent, &[], &s, &u).is_err());

        let up = Agent::new("up", [ValueSpec::utility("v", [("x", 0.1), ("y", 0.5)])]);
        let down = Agent::new("down", [ValueSpec::utility("v", [("x", 0.5), ("y", 0.1)])]);
        let g = aggregate_agents(&[&up, &down], &"v".into(), &st("x"), &st("y")).unwrap();
        assert_eq!(g, 0.0);
        let single = aggregate_agents(&[&up], &"v".into(), &st("x"), &st("y")).unwrap();
        assert_eq!(single, eval_pref(&up, &"v".into(), &st("x"), &st("y")).unwrap());
    }

    #[test]
    fn validation_report() {
        let mut catalog = Catalog::default();
        catalog
            .values
            .insert("ok".into(), ValueSpec { value: "ok".into(), ..table(&[("a", "b", 0.3), ("b", "a", -0.3)]) });
        catalog
            .values
            .insert("skew".into(), ValueSpec { value: "skew".into(), ..table(&[("a", "b", 0.3), ("b", "a", 0.1)]) });
        catalog.values.insert("big".into(), ValueSpec::utility("big", [("a", 1.2)]));
        catalog.values.insert("diag".into(), ValueSpec { value: "diag".into(), ..table(&[("a", "a", 0.5)]) });
        let report = validate_specs(&catalog);
        assert!(!report.passed());
        let by_value: BTreeMap<&str, &SpecCheck> = report.checks.iter().map(|c| (c.value.as_str(), c)).collect();
        assert!(by_value["ok"].passed());
        assert!(matches!(by_value["skew"].violations[..], [SpecViolation::AntisymmetryViolation { .. }]));
        assert!(matches!(by_value["big"].violations[..], [SpecViolation::RangeViolation { .. }]));
        assert!(matches!(by_value["diag"].violations[..], [SpecViolation::DiagonalViolation { .. }]));
    }

    #[test]
    fn pairwise_sum_matches_naive_on_small_inputs() {
        assert_eq!(pairwise_sum(&[]), 0.0);
        assert_eq!(pairwise_sum(&[1.0, 2.0, 3.0, 4.0, 5.0]), 15.0);
    }
}
