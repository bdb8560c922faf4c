//! The base world: a finite labeled transition system over typed state
//! assignments.

use std::borrow::Borrow;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decimal::Decimal;

/// Tolerance on the sum of a probability group.
pub const PROB_SUM_TOLERANCE: f64 = 1e-9;

macro_rules! id_newtype {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                $name(s.to_string())
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                $name(s)
            }
        }

        impl Borrow<str> for $name {
            fn borrow(&self) -> &str {
                &self.0
            }
        }
    };
}

id_newtype!(
    /// Identifier of a state.
    StateId
);
id_newtype!(
    /// Identifier of an action label.
    ActionId
);

/// A scalar bound to a state variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Bool(bool),
    Num(Decimal),
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Bool(b) => write!(f, "{b}"),
            Scalar::Num(n) => write!(f, "{n}"),
        }
    }
}

impl From<bool> for Scalar {
    fn from(b: bool) -> Self {
        Scalar::Bool(b)
    }
}

impl From<i64> for Scalar {
    fn from(v: i64) -> Self {
        Scalar::Num(Decimal::from_int(v))
    }
}

impl From<Decimal> for Scalar {
    fn from(v: Decimal) -> Self {
        Scalar::Num(v)
    }
}

/// Variable name to value. The assignment is a state's identity.
pub type Assignment = BTreeMap<String, Scalar>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarKind {
    Bool,
    Int,
    Decimal,
}

/// Declared type and optional inclusive range of one state variable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VarDomain {
    #[serde(rename = "type")]
    pub kind: VarKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<Decimal>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<Decimal>,
}

impl VarDomain {
    pub fn new(kind: VarKind) -> Self {
        VarDomain { kind, min: None, max: None }
    }

    pub fn with_range(kind: VarKind, min: Decimal, max: Decimal) -> Self {
        VarDomain { kind, min: Some(min), max: Some(max) }
    }

    /// Returns a reason when `value` is outside the domain.
    pub fn check(&self, value: &Scalar) -> Result<(), String> {
        match (self.kind, value) {
            (VarKind::Bool, Scalar::Bool(_)) => Ok(()),
            (VarKind::Bool, Scalar::Num(n)) => Err(format!("expected bool, found {n}")),
            (_, Scalar::Bool(b)) => Err(format!("expected number, found {b}")),
            (kind, Scalar::Num(n)) => {
                if kind == VarKind::Int && !n.is_integer() {
                    return Err(format!("expected integer, found {n}"));
                }
                if let Some(min) = self.min {
                    if *n < min {
                        return Err(format!("{n} below minimum {min}"));
                    }
                }
                if let Some(max) = self.max {
                    if *n > max {
                        return Err(format!("{n} above maximum {max}"));
                    }
                }
                Ok(())
            }
        }
    }
}

pub type Schema = BTreeMap<String, VarDomain>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct State {
    pub id: StateId,
    pub vars: Assignment,
}

impl State {
    pub fn new(id: impl Into<StateId>, vars: Assignment) -> Self {
        State { id: id.into(), vars }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Transition {
    pub from: StateId,
    pub action: ActionId,
    pub to: StateId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prob: Option<f64>,
}

impl Transition {
    pub fn new(from: impl Into<StateId>, action: impl Into<ActionId>, to: impl Into<StateId>) -> Self {
        Transition { from: from.into(), action: action.into(), to: to.into(), prob: None }
    }

    pub fn with_prob(mut self, prob: f64) -> Self {
        self.prob = Some(prob);
        self
    }

    /// Identity of the transition, ignoring its probability.
    pub fn key(&self) -> (&StateId, &ActionId, &StateId) {
        (&self.from, &self.action, &self.to)
    }
}

impl fmt::Display for Transition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -{}-> {}", self.from, self.action, self.to)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WorldError {
    #[error("duplicate state '{id}'")]
    DuplicateState { id: StateId },
    #[error("states '{first}' and '{second}' have identical variable assignments")]
    DuplicateAssignment { first: StateId, second: StateId },
    #[error("duplicate action '{0}'")]
    DuplicateAction(ActionId),
    #[error("duplicate transition {0}")]
    DuplicateTransition(String),
    #[error("transition {transition} references undeclared {missing}")]
    DanglingTransition { transition: String, missing: String },
    #[error("probability {prob} on {transition} is outside (0, 1]")]
    BadProbability { transition: String, prob: f64 },
    #[error("probabilities out of ({from}, {action}) {reason}")]
    BadProbabilityGroup { from: StateId, action: ActionId, reason: String },
    #[error("initial state set is empty")]
    EmptyInitialSet,
    #[error("initial state '{0}' is not declared")]
    UnknownInitialState(StateId),
    #[error("state '{state}': {reason}")]
    SchemaViolation { state: StateId, reason: String },
    #[error("unknown state '{0}'")]
    UnknownState(StateId),
}

impl WorldError {
    pub fn kind(&self) -> &'static str {
        match self {
            WorldError::DuplicateState { .. } | WorldError::DuplicateAssignment { .. } => "DuplicateState",
            WorldError::DuplicateAction(_) => "DuplicateAction",
            WorldError::DuplicateTransition(_) => "DuplicateTransition",
            WorldError::DanglingTransition { .. } => "DanglingTransition",
            WorldError::BadProbability { .. } | WorldError::BadProbabilityGroup { .. } => "BadProbabilityGroup",
            WorldError::EmptyInitialSet | WorldError::UnknownInitialState(_) => "EmptyInitialSet",
            WorldError::SchemaViolation { .. } => "SchemaViolation",
            WorldError::UnknownState(_) => "UnknownState",
        }
    }
}

/// Unvalidated world parts, as read from a file or built in code.
#[derive(Debug, Clone, Default)]
pub struct RawWorld {
    pub schema: Schema,
    pub states: Vec<State>,
    pub actions: Vec<ActionId>,
    pub transitions: Vec<Transition>,
    /// `None` means every state is initial.
    pub initial_states: Option<Vec<StateId>>,
}

/// A validated world `(S, A, T)` with its initial states.
///
/// Transitions are kept sorted by `(from, action, to)` so that successor
/// queries and path enumeration are deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct World {
    schema: Schema,
    states: BTreeMap<StateId, State>,
    by_assignment: BTreeMap<Assignment, StateId>,
    actions: BTreeSet<ActionId>,
    transitions: Vec<Transition>,
    out_ranges: BTreeMap<StateId, (usize, usize)>,
    initial_states: BTreeSet<StateId>,
}

pub fn validate_world(raw: RawWorld) -> Result<World, WorldError> {
    let RawWorld { schema, states: state_list, actions: action_list, mut transitions, initial_states } = raw;

    let mut states = BTreeMap::new();
    let mut by_assignment: BTreeMap<Assignment, StateId> = BTreeMap::new();
    for state in state_list {
        let names: BTreeSet<&String> = state.vars.keys().collect();
        let expected: BTreeSet<&String> = schema.keys().collect();
        if names != expected {
            let missing: Vec<_> = expected.difference(&names).map(|s| s.as_str()).collect();
            let extra: Vec<_> = names.difference(&expected).map(|s| s.as_str()).collect();
            return Err(WorldError::SchemaViolation {
                state: state.id.clone(),
                reason: format!("variables do not match schema (missing {missing:?}, unexpected {extra:?})"),
            });
        }
        for (name, value) in &state.vars {
            schema[name].check(value).map_err(|reason| WorldError::SchemaViolation {
                state: state.id.clone(),
                reason: format!("{name}: {reason}"),
            })?;
        }
        if states.contains_key(&state.id) {
            return Err(WorldError::DuplicateState { id: state.id });
        }
        if let Some(first) = by_assignment.get(&state.vars) {
            return Err(WorldError::DuplicateAssignment { first: first.clone(), second: state.id });
        }
        by_assignment.insert(state.vars.clone(), state.id.clone());
        states.insert(state.id.clone(), state);
    }

    let mut actions = BTreeSet::new();
    for action in action_list {
        if !actions.insert(action.clone()) {
            return Err(WorldError::DuplicateAction(action));
        }
    }

    for t in &transitions {
        let missing = if !states.contains_key(&t.from) {
            Some(format!("state '{}'", t.from))
        } else if !actions.contains(&t.action) {
            Some(format!("action '{}'", t.action))
        } else if !states.contains_key(&t.to) {
            Some(format!("state '{}'", t.to))
        } else {
            None
        };
        if let Some(missing) = missing {
            return Err(WorldError::DanglingTransition { transition: t.to_string(), missing });
        }
        if let Some(p) = t.prob {
            if !(p > 0.0 && p <= 1.0) {
                return Err(WorldError::BadProbability { transition: t.to_string(), prob: p });
            }
        }
    }

    transitions.sort_by(|a, b| a.key().cmp(&b.key()));
    for pair in transitions.windows(2) {
        if pair[0].key() == pair[1].key() {
            return Err(WorldError::DuplicateTransition(pair[1].to_string()));
        }
    }

    let mut out_ranges = BTreeMap::new();
    let mut start = 0;
    while start < transitions.len() {
        let from = &transitions[start].from;
        let end = start + transitions[start..].iter().take_while(|t| &t.from == from).count();
        out_ranges.insert(from.clone(), (start, end));
        check_probability_groups(&transitions[start..end])?;
        start = end;
    }

    let initial_states: BTreeSet<StateId> = match initial_states {
        None => states.keys().cloned().collect(),
        Some(list) => {
            for id in &list {
                if !states.contains_key(id) {
                    return Err(WorldError::UnknownInitialState(id.clone()));
                }
            }
            list.into_iter().collect()
        }
    };
    if initial_states.is_empty() {
        return Err(WorldError::EmptyInitialSet);
    }

    Ok(World { schema, states, by_assignment, actions, transitions, out_ranges, initial_states })
}

/// `group` holds all transitions out of one state, sorted by action.
fn check_probability_groups(group: &[Transition]) -> Result<(), WorldError> {
    for chunk in group.chunk_by(|a, b| a.action == b.action) {
        let with_prob = chunk.iter().filter(|t| t.prob.is_some()).count();
        if with_prob == 0 {
            continue;
        }
        let (from, action) = (chunk[0].from.clone(), chunk[0].action.clone());
        if with_prob != chunk.len() {
            return Err(WorldError::BadProbabilityGroup {
                from,
                action,
                reason: "mix transitions with and without probabilities".into(),
            });
        }
        let sum: f64 = chunk.iter().filter_map(|t| t.prob).sum();
        if (sum - 1.0).abs() > PROB_SUM_TOLERANCE {
            return Err(WorldError::BadProbabilityGroup { from, action, reason: format!("sum to {sum}") });
        }
    }
    Ok(())
}

impl World {
    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn states(&self) -> impl Iterator<Item = &State> {
        self.states.values()
    }

    pub fn state(&self, id: &str) -> Option<&State> {
        self.states.get(id)
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn contains_state(&self, id: &str) -> bool {
        self.states.contains_key(id)
    }

    pub fn state_by_assignment(&self, vars: &Assignment) -> Option<&StateId> {
        self.by_assignment.get(vars)
    }

    pub fn actions(&self) -> &BTreeSet<ActionId> {
        &self.actions
    }

    /// All transitions, sorted by `(from, action, to)`.
    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn initial_states(&self) -> &BTreeSet<StateId> {
        &self.initial_states
    }

    pub(crate) fn outgoing(&self, s: &str) -> &[Transition] {
        match self.out_ranges.get(s) {
            Some(&(a, b)) => &self.transitions[a..b],
            None => &[],
        }
    }

    /// Transitions leaving `s`, optionally restricted to one action, in
    /// `(action, to)` order.
    pub fn successors(&self, s: &str, action: Option<&str>) -> Result<Vec<&Transition>, WorldError> {
        if !self.states.contains_key(s) {
            return Err(WorldError::UnknownState(s.into()));
        }
        Ok(self.outgoing(s).iter().filter(|t| action.is_none_or(|a| t.action.as_str() == a)).collect())
    }

    /// Number of transitions sharing `t`'s source and action.
    pub fn group_size(&self, t: &Transition) -> usize {
        self.outgoing(t.from.as_str()).iter().filter(|o| o.action == t.action).count()
    }

    /// Decomposes the world back into unvalidated parts.
    pub fn to_raw(&self) -> RawWorld {
        RawWorld {
            schema: self.schema.clone(),
            states: self.states.values().cloned().collect(),
            actions: self.actions.iter().cloned().collect(),
            transitions: self.transitions.clone(),
            initial_states: Some(self.initial_states.iter().cloned().collect()),
        }
    }
}

pub fn successors<'w>(world: &'w World, s: &str, action: Option<&str>) -> Result<Vec<&'w Transition>, WorldError> {
    world.successors(s, action)
}
