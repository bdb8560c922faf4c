//! The world file: one JSON document carrying a world together with its
//! values, agents and norms.
//!
//! See `docs/world-file.md` for the full grammar. Loading happens in two
//! stages. Text that is not well-formed JSON, or does not match the
//! document shape, is a [`LoadError::Parse`]. A well-formed document whose
//! contents break an invariant yields [`LoadError::Invalid`] with one
//! [`Diagnostic`] per problem found.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path as FsPath;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::Guard;
use crate::norms::{ArithExpr, Effect, Norm, NormRule};
use crate::preferences::{check_spec, Agent, Catalog, PreferenceKind, ValueId, ValueSpec};
use crate::world::{validate_world, ActionId, RawWorld, Schema, State, StateId, Transition, World, WorldError};

/// Name of the agent created when a file declares no agents.
pub const DEFAULT_AGENT: &str = "default";

// ---------------------------------------------------------------------------
// serialized shape

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldFile {
    #[serde(default)]
    pub schema: Schema,
    pub states: Vec<State>,
    pub actions: Vec<ActionId>,
    #[serde(default)]
    pub transitions: Vec<Transition>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_states: Option<Vec<StateId>>,
    #[serde(default)]
    pub values: BTreeMap<ValueId, ValueSpecFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agents: Option<BTreeMap<String, AgentFile>>,
    #[serde(default)]
    pub norms: Vec<NormFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ValueSpecFile {
    Utility {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        description: Option<String>,
        utilities: BTreeMap<StateId, f64>,
    },
    Pairwise {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        description: Option<String>,
        table: Vec<PairEntry>,
    },
    Predicate {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        description: Option<String>,
        formula: String,
        #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
        satisfaction: BTreeMap<StateId, f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairEntry {
    pub from: StateId,
    pub to: StateId,
    pub pref: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    /// Per-value overrides of the shared specs.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub bindings: BTreeMap<ValueId, ValueSpecFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormFile {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub rules: Vec<RuleFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleFile {
    pub when: String,
    pub effect: EffectFile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EffectFile {
    Forbid,
    Rewrite(BTreeMap<String, String>),
}

// ---------------------------------------------------------------------------
// errors

/// One validation finding, located by file section and entity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub section: String,
    pub entity: String,
    /// Name of the violated invariant.
    pub kind: String,
    pub message: String,
}

impl Diagnostic {
    fn new(section: &str, entity: impl fmt::Display, kind: &str, message: impl fmt::Display) -> Self {
        Diagnostic {
            section: section.into(),
            entity: entity.to_string(),
            kind: kind.into(),
            message: message.to_string(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}]: {}: {}", self.section, self.entity, self.kind, self.message)
    }
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("{} validation error(s); first: {}", .0.len(), .0[0])]
    Invalid(Vec<Diagnostic>),
}

// ---------------------------------------------------------------------------
// document

/// A loaded, validated world file.
#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub world: World,
    pub catalog: Catalog,
    pub norms: Vec<Norm>,
    /// False when the file declared no agents and [`DEFAULT_AGENT`] was
    /// synthesized.
    pub explicit_agents: bool,
}

impl Document {
    pub fn load(path: impl AsRef<FsPath>) -> Result<Document, LoadError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|source| LoadError::Io { path: path.display().to_string(), source })?;
        Document::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Document, LoadError> {
        let file: WorldFile = serde_json::from_str(text)?;
        Document::from_file(file)
    }

    pub fn from_file(file: WorldFile) -> Result<Document, LoadError> {
        let mut diags = Vec::new();
        let raw = RawWorld {
            schema: file.schema,
            states: file.states,
            actions: file.actions,
            transitions: file.transitions,
            initial_states: file.initial_states,
        };
        let world = match validate_world(raw) {
            Ok(w) => Some(w),
            Err(e) => {
                diags.push(world_diagnostic(&e));
                None
            }
        };

        let mut values = BTreeMap::new();
        for (id, spec) in file.values {
            if let Some(spec) = build_spec(&format!("values.{id}"), &id, spec, world.as_ref(), &mut diags) {
                values.insert(id, spec);
            }
        }

        let explicit_agents = file.agents.is_some();
        let agent_files = file.agents.unwrap_or_else(|| {
            BTreeMap::from([(DEFAULT_AGENT.to_string(), AgentFile { description: None, bindings: BTreeMap::new() })])
        });
        let mut agents = BTreeMap::new();
        for (agent_id, agent_file) in agent_files {
            let mut bindings = values.clone();
            for (value_id, spec) in agent_file.bindings {
                let location = format!("agents.{agent_id}.{value_id}");
                if !values.contains_key(&value_id) {
                    diags.push(Diagnostic::new(
                        "agents",
                        &location,
                        "UnknownValue",
                        format!("value '{value_id}' is not declared in 'values'"),
                    ));
                    continue;
                }
                if let Some(spec) = build_spec(&location, &value_id, spec, world.as_ref(), &mut diags) {
                    bindings.insert(value_id, spec);
                }
            }
            agents.insert(agent_id.clone(), Agent { id: agent_id, description: agent_file.description, bindings });
        }

        let mut norms = Vec::new();
        let mut seen = BTreeSet::new();
        for nf in file.norms {
            if !seen.insert(nf.id.clone()) {
                diags.push(Diagnostic::new("norms", &nf.id, "DuplicateNorm", "norm id declared twice"));
                continue;
            }
            if let Some(norm) = build_norm(nf, &mut diags) {
                if let Some(w) = &world {
                    if let Err(e) = norm.bind(w) {
                        diags.push(Diagnostic::new("norms", &norm.id, e.kind(), &e));
                        continue;
                    }
                }
                norms.push(norm);
            }
        }

        match world {
            Some(world) if diags.is_empty() => {
                Ok(Document { world, catalog: Catalog { values, agents }, norms, explicit_agents })
            }
            _ => Err(LoadError::Invalid(diags)),
        }
    }

    pub fn norm(&self, id: &str) -> Option<&Norm> {
        self.norms.iter().find(|n| n.id == id)
    }

    /// The same document over a different world, e.g. a normative one.
    pub fn with_world(&self, world: World) -> Document {
        Document { world, ..self.clone() }
    }

    pub fn to_file(&self) -> WorldFile {
        let raw = self.world.to_raw();
        let agents = self.explicit_agents.then(|| {
            self.catalog
                .agents
                .values()
                .map(|agent| {
                    let bindings = agent
                        .bindings
                        .iter()
                        .filter(|(id, spec)| self.catalog.values.get(*id) != Some(*spec))
                        .map(|(id, spec)| (id.clone(), spec_to_file(spec)))
                        .collect();
                    (agent.id.clone(), AgentFile { description: agent.description.clone(), bindings })
                })
                .collect()
        });
        WorldFile {
            schema: raw.schema,
            states: raw.states,
            actions: raw.actions,
            transitions: raw.transitions,
            initial_states: raw.initial_states,
            values: self.catalog.values.iter().map(|(id, s)| (id.clone(), spec_to_file(s))).collect(),
            agents,
            norms: self.norms.iter().map(norm_to_file).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(&self.to_file()).expect("world file serializes");
        text.push('\n');
        text
    }

    pub fn save(&self, path: impl AsRef<FsPath>) -> std::io::Result<()> {
        std::fs::write(path, self.to_json())
    }
}

fn world_diagnostic(e: &WorldError) -> Diagnostic {
    let (section, entity) = match e {
        WorldError::DuplicateState { id } => ("states", id.to_string()),
        WorldError::DuplicateAssignment { second, .. } => ("states", second.to_string()),
        WorldError::SchemaViolation { state, .. } => ("states", state.to_string()),
        WorldError::DuplicateAction(a) => ("actions", a.to_string()),
        WorldError::DuplicateTransition(t)
        | WorldError::DanglingTransition { transition: t, .. }
        | WorldError::BadProbability { transition: t, .. } => ("transitions", t.clone()),
        WorldError::BadProbabilityGroup { from, action, .. } => ("transitions", format!("({from}, {action})")),
        WorldError::EmptyInitialSet => ("initial_states", String::new()),
        WorldError::UnknownInitialState(s) | WorldError::UnknownState(s) => ("initial_states", s.to_string()),
    };
    Diagnostic::new(section, entity, e.kind(), e)
}

fn build_spec(
    location: &str,
    value: &ValueId,
    file: ValueSpecFile,
    world: Option<&World>,
    diags: &mut Vec<Diagnostic>,
) -> Option<ValueSpec> {
    let section = location.split('.').next().unwrap_or("values");
    let (description, kind, referenced): (_, _, Vec<StateId>) = match file {
        ValueSpecFile::Utility { description, utilities } => {
            let refs = utilities.keys().cloned().collect();
            (description, PreferenceKind::UtilityMap(utilities), refs)
        }
        ValueSpecFile::Pairwise { description, table } => {
            let mut map = BTreeMap::new();
            let mut refs = Vec::new();
            for entry in table {
                refs.extend([entry.from.clone(), entry.to.clone()]);
                if map.insert((entry.from.clone(), entry.to.clone()), entry.pref).is_some() {
                    diags.push(Diagnostic::new(
                        section,
                        location,
                        "DuplicateEntry",
                        format!("pair ({}, {}) listed twice", entry.from, entry.to),
                    ));
                }
            }
            (description, PreferenceKind::PairwiseTable(map), refs)
        }
        ValueSpecFile::Predicate { description, formula, satisfaction } => {
            let formula = match Guard::parse(&formula) {
                Ok(g) => g,
                Err(e) => {
                    diags.push(Diagnostic::new(section, location, "SchemaMismatch", e));
                    return None;
                }
            };
            let refs = satisfaction.keys().cloned().collect();
            (description, PreferenceKind::Predicate { formula, satisfaction }, refs)
        }
    };
    let spec = ValueSpec { value: value.clone(), description, kind };
    for v in check_spec(location.to_string(), &spec).violations {
        let kind = serde_json::to_value(&v).ok().and_then(|j| j["violation"].as_str().map(String::from));
        diags.push(Diagnostic::new(section, location, kind.as_deref().unwrap_or("SpecViolation"), &v));
    }
    if let Some(world) = world {
        if let Err(e) = spec.bind(world.schema()) {
            diags.push(Diagnostic::new(section, location, "SchemaMismatch", e));
        }
        for s in referenced.iter().collect::<BTreeSet<_>>() {
            if !world.contains_state(s.as_str()) {
                diags.push(Diagnostic::new(section, location, "UnknownState", format!("state '{s}' is not declared")));
            }
        }
    }
    Some(spec)
}

fn build_norm(file: NormFile, diags: &mut Vec<Diagnostic>) -> Option<Norm> {
    let mut rules = Vec::new();
    let mut ok = true;
    for (i, rule) in file.rules.into_iter().enumerate() {
        let entity = format!("{}.rules[{i}]", file.id);
        let guard =
            Guard::parse(&rule.when).map_err(|e| diags.push(Diagnostic::new("norms", &entity, "SchemaMismatch", e)));
        let effect = match rule.effect {
            EffectFile::Forbid => Ok(Effect::Forbid),
            EffectFile::Rewrite(map) => {
                let mut out = BTreeMap::new();
                let mut good = true;
                for (var, src) in map {
                    match ArithExpr::parse(&src) {
                        Ok(e) => {
                            out.insert(var, e);
                        }
                        Err(e) => {
                            diags.push(Diagnostic::new("norms", &entity, "SchemaMismatch", format!("{var}: {e}")));
                            good = false;
                        }
                    }
                }
                if good {
                    Ok(Effect::Rewrite(out))
                } else {
                    Err(())
                }
            }
        };
        match (guard, effect) {
            (Ok(guard), Ok(effect)) => rules.push(NormRule { guard, effect }),
            _ => ok = false,
        }
    }
    ok.then_some(Norm { id: file.id, description: file.description, rules })
}

fn spec_to_file(spec: &ValueSpec) -> ValueSpecFile {
    let description = spec.description.clone();
    match &spec.kind {
        PreferenceKind::UtilityMap(map) => ValueSpecFile::Utility { description, utilities: map.clone() },
        PreferenceKind::PairwiseTable(map) => ValueSpecFile::Pairwise {
            description,
            table: map
                .iter()
                .map(|((from, to), pref)| PairEntry { from: from.clone(), to: to.clone(), pref: *pref })
                .collect(),
        },
        PreferenceKind::Predicate { formula, satisfaction } => ValueSpecFile::Predicate {
            description,
            formula: formula.source().to_string(),
            satisfaction: satisfaction.clone(),
        },
    }
}

fn norm_to_file(norm: &Norm) -> NormFile {
    NormFile {
        id: norm.id.clone(),
        description: norm.description.clone(),
        rules: norm
            .rules
            .iter()
            .map(|r| RuleFile {
                when: r.guard.source().to_string(),
                effect: match &r.effect {
                    Effect::Forbid => EffectFile::Forbid,
                    Effect::Rewrite(map) => {
                        EffectFile::Rewrite(map.iter().map(|(k, v)| (k.clone(), v.source().to_string())).collect())
                    }
                },
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"{
      "schema": {"risk": {"type": "int", "min": 0, "max": 2}},
      "states": [
        {"id": "Safe", "vars": {"risk": 0}},
        {"id": "Unsafe", "vars": {"risk": 1}}
      ],
      "actions": ["go"],
      "transitions": [{"from": "Safe", "action": "go", "to": "Unsafe"}],
      "values": {
        "Safety": {"kind": "utility", "utilities": {"Safe": 1.0, "Unsafe": 0.8}},
        "Calm": {"kind": "pairwise", "table": [{"from": "Safe", "to": "Unsafe", "pref": -0.5}]},
        "Low": {"kind": "predicate", "formula": "risk < 1"}
      },
      "norms": [{"id": "stop", "rules": [{"when": "action == \"go\"", "effect": "forbid"}]}]
    }"#;

    #[test]
    fn loads_with_default_agent() {
        let doc = Document::from_json(SMALL).unwrap();
        assert!(!doc.explicit_agents);
        let agent = doc.catalog.agent(DEFAULT_AGENT).unwrap();
        assert_eq!(agent.bindings.len(), 3);
        assert_eq!(doc.norms.len(), 1);
        assert_eq!(doc.world.initial_states().len(), 2);
    }

    #[test]
    fn round_trip_is_stable() {
        let doc = Document::from_json(SMALL).unwrap();
        let text = doc.to_json();
        let again = Document::from_json(&text).unwrap();
        assert_eq!(again, doc);
        assert_eq!(again.to_json(), text);
    }

    #[test]
    fn unknown_keys_are_parse_errors() {
        let bad = SMALL.replacen("\"schema\"", "\"extra\": 1, \"schema\"", 1);
        assert!(matches!(Document::from_json(&bad), Err(LoadError::Parse(_))));
        assert!(matches!(Document::from_json("{"), Err(LoadError::Parse(_))));
    }

    #[test]
    fn invalid_contents_are_diagnosed() {
        let bad = SMALL
            .replace("\"pref\": -0.5}]", "\"pref\": -0.5}, {\"from\": \"Unsafe\", \"to\": \"Safe\", \"pref\": -0.5}]")
            .replace("\"Unsafe\": 0.8}", "\"Unsafe\": 1.8}")
            .replace("action == \\\"go\\\"", "speed > 1");
        let Err(LoadError::Invalid(diags)) = Document::from_json(&bad) else { panic!("expected diagnostics") };
        let kinds: Vec<(&str, &str, &str)> =
            diags.iter().map(|d| (d.section.as_str(), d.entity.as_str(), d.kind.as_str())).collect();
        assert!(kinds.contains(&("values", "values.Calm", "AntisymmetryViolation")), "{kinds:?}");
        assert!(kinds.contains(&("values", "values.Safety", "RangeViolation")), "{kinds:?}");
        assert!(kinds.contains(&("norms", "stop", "SchemaMismatch")), "{kinds:?}");
    }

    #[test]
    fn world_errors_name_their_section() {
        let bad = SMALL.replace("\"to\": \"Unsafe\"}", "\"to\": \"X\"}");
        let Err(LoadError::Invalid(diags)) = Document::from_json(&bad) else { panic!() };
        assert_eq!(diags[0].section, "transitions");
        assert_eq!(diags[0].kind, "DanglingTransition");
    }
}
