//! Bounded enumeration of maximal paths.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::world::{StateId, Transition, World};

/// Default number of transitions per enumerated path.
pub const DEFAULT_HORIZON: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PathError {
    #[error("horizon must be at least 1")]
    ZeroHorizon,
    #[error("path is empty")]
    EmptyPath,
    #[error("step {index} starts at '{found}' but the previous step ends at '{expected}'")]
    Broken { index: usize, expected: StateId, found: StateId },
    #[error("no initial state has an outgoing transition")]
    NoPaths,
}

/// A nonempty chain of transitions where each step starts where the
/// previous one ended.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(into = "PathView")]
pub struct Path {
    steps: Vec<Transition>,
}

impl Path {
    pub fn new(steps: Vec<Transition>) -> Result<Self, PathError> {
        if steps.is_empty() {
            return Err(PathError::EmptyPath);
        }
        for (i, pair) in steps.windows(2).enumerate() {
            if pair[0].to != pair[1].from {
                return Err(PathError::Broken {
                    index: i + 1,
                    expected: pair[0].to.clone(),
                    found: pair[1].from.clone(),
                });
            }
        }
        Ok(Path { steps })
    }

    pub fn steps(&self) -> &[Transition] {
        &self.steps
    }

    /// Number of transitions, `|p|`.
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn first_state(&self) -> &StateId {
        &self.steps[0].from
    }

    pub fn last_state(&self) -> &StateId {
        &self.steps[self.steps.len() - 1].to
    }

    /// The `len() + 1` visited states in order.
    pub fn states(&self) -> impl Iterator<Item = &StateId> {
        std::iter::once(self.first_state()).chain(self.steps.iter().map(|t| &t.to))
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.first_state())?;
        for t in &self.steps {
            write!(f, " -{}-> {}", t.action, t.to)?;
        }
        Ok(())
    }
}

#[derive(Serialize)]
struct PathView {
    states: Vec<String>,
    actions: Vec<String>,
}

impl From<Path> for PathView {
    fn from(p: Path) -> Self {
        PathView {
            states: p.states().map(|s| s.0.clone()).collect(),
            actions: p.steps.iter().map(|t| t.action.0.clone()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    pub paths: Vec<Path>,
    pub horizon: usize,
}

impl PathSet {
    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Path> {
        self.paths.iter()
    }
}

/// Enumerates every maximal path from each initial state.
///
/// A path is maximal when it has exactly `horizon` transitions or ends in a
/// state without outgoing transitions. Cycles are unrolled up to the
/// horizon. Output is ordered by initial state, then by the `(action, to)`
/// choice at each step.
pub fn enumerate_paths(world: &World, horizon: usize) -> Result<PathSet, PathError> {
    if horizon == 0 {
        return Err(PathError::ZeroHorizon);
    }
    let mut paths = Vec::new();
    let mut stack: Vec<&Transition> = Vec::with_capacity(horizon);
    for start in world.initial_states() {
        extend(world, start, horizon, &mut stack, &mut paths);
    }
    if paths.is_empty() {
        return Err(PathError::NoPaths);
    }
    Ok(PathSet { paths, horizon })
}

fn extend<'w>(world: &'w World, at: &StateId, horizon: usize, stack: &mut Vec<&'w Transition>, out: &mut Vec<Path>) {
    let next = world.outgoing(at.as_str());
    if stack.len() == horizon || next.is_empty() {
        if !stack.is_empty() {
            out.push(Path { steps: stack.iter().map(|t| (*t).clone()).collect() });
        }
        return;
    }
    for t in next {
        stack.push(t);
        extend(world, &t.to, horizon, stack, out);
        stack.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::tests::{driving_raw, risk_state};
    use crate::world::{validate_world, RawWorld};

    #[test]
    fn slow_only_world_has_one_cycle_path() {
        let mut raw = driving_raw();
        raw.transitions.retain(|t| t.action.as_str() == "DriveSlow");
        raw.initial_states = Some(vec!["Safe".into()]);
        let w = validate_world(raw).unwrap();
        let set = enumerate_paths(&w, 3).unwrap();
        assert_eq!(set.len(), 1);
        assert_eq!(set.paths[0].to_string(), "Safe -DriveSlow-> Safe -DriveSlow-> Safe -DriveSlow-> Safe");
    }

    #[test]
    fn dead_end_truncates() {
        let raw = RawWorld {
            schema: driving_raw().schema,
            states: vec![risk_state("s", 0), risk_state("t", 1)],
            actions: vec!["a".into()],
            transitions: vec![Transition::new("s", "a", "t")],
            initial_states: Some(vec!["s".into()]),
        };
        let w = validate_world(raw).unwrap();
        let set = enumerate_paths(&w, 5).unwrap();
        assert_eq!(set.len(), 1);
        assert_eq!(set.paths[0].len(), 1);
    }

    #[test]
    fn errors() {
        let w = validate_world(driving_raw()).unwrap();
        assert_eq!(enumerate_paths(&w, 0), Err(PathError::ZeroHorizon));
        let mut raw = driving_raw();
        raw.initial_states = Some(vec!["Accident".into()]);
        let w = validate_world(raw).unwrap();
        assert_eq!(enumerate_paths(&w, 3), Err(PathError::NoPaths));
    }

    #[test]
    fn path_chaining_is_checked() {
        let ok = Path::new(vec![Transition::new("a", "x", "b"), Transition::new("b", "x", "c")]).unwrap();
        assert_eq!(ok.states().map(|s| s.as_str()).collect::<Vec<_>>(), ["a", "b", "c"]);
        assert!(matches!(
            Path::new(vec![Transition::new("a", "x", "b"), Transition::new("c", "x", "d")]),
            Err(PathError::Broken { index: 1, .. })
        ));
        assert_eq!(Path::new(vec![]), Err(PathError::EmptyPath));
    }

    #[test]
    fn base_driving_world_paths() {
        let w = validate_world(driving_raw()).unwrap();
        let set = enumerate_paths(&w, 2).unwrap();
        let got: Vec<String> = set.iter().map(|p| p.to_string()).collect();
        assert_eq!(
            got,
            [
                "Safe -DriveFast-> Unsafe -DriveFast-> Accident",
                "Safe -DriveSlow-> Safe -DriveFast-> Unsafe",
                "Safe -DriveSlow-> Safe -DriveSlow-> Safe",
                "Unsafe -DriveFast-> Accident",
            ]
        );
    }
}
