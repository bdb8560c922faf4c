//! Norms as ordered guarded rewrite rules over transitions, and the
//! normative worlds they produce.
//!
//! Each transition of the input world is offered to a norm's rules in order.
//! The first rule whose guard holds on the transition's source state and
//! action decides its fate:
//!
//! * [`Effect::Forbid`] drops the transition;
//! * [`Effect::Rewrite`] computes a new destination assignment from the
//!   destination's variables and redirects the transition to the state with
//!   that assignment, creating it if needed.
//!
//! Transitions matched by no rule pass through untouched. A norm set is
//! applied left to right, each norm seeing the output of the previous one.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::expr::{BindScope, Env, Expr, ExprError, Guard, Type};
use crate::world::{
    validate_world, ActionId, Assignment, RawWorld, State, StateId, Transition, VarKind, World, WorldError,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NormError {
    #[error("norm '{norm}' rule {rule}: {source}")]
    SchemaMismatch {
        norm: String,
        rule: usize,
        #[source]
        source: ExprError,
    },
    #[error("norm '{norm}' has no rules")]
    EmptyNorm { norm: String },
    #[error("norm '{norm}' sets '{var}' to {value} on {transition}: {reason}")]
    DomainOverflow { norm: String, var: String, value: String, transition: String, reason: String },
    #[error("norm '{norm}' needs fresh state '{id}' but that id names a different assignment")]
    IdCollision { norm: String, id: StateId },
    #[error("norm '{norm}' produced an invalid world: {source}")]
    InvalidResult {
        norm: String,
        #[source]
        source: WorldError,
    },
}

impl NormError {
    pub fn kind(&self) -> &'static str {
        match self {
            NormError::SchemaMismatch { .. } | NormError::EmptyNorm { .. } => "SchemaMismatch",
            NormError::DomainOverflow { .. } => "DomainOverflow",
            NormError::IdCollision { .. } => "IdCollision",
            NormError::InvalidResult { .. } => "InvalidResult",
        }
    }
}

/// Assignment expression with its source text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArithExpr {
    source: String,
    expr: Expr,
}

impl ArithExpr {
    pub fn parse(source: &str) -> Result<Self, ExprError> {
        Ok(ArithExpr { source: source.to_string(), expr: Expr::parse(source)? })
    }

    pub fn source(&self) -> &str {
        &self.source
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Effect {
    Forbid,
    /// Variable name to new value, evaluated over the destination state.
    Rewrite(BTreeMap<String, ArithExpr>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormRule {
    pub guard: Guard,
    pub effect: Effect,
}

impl NormRule {
    pub fn forbid(guard: Guard) -> Self {
        NormRule { guard, effect: Effect::Forbid }
    }

    pub fn rewrite(guard: Guard, assignments: BTreeMap<String, ArithExpr>) -> Self {
        NormRule { guard, effect: Effect::Rewrite(assignments) }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Norm {
    pub id: String,
    pub description: Option<String>,
    pub rules: Vec<NormRule>,
}

impl Norm {
    pub fn new(id: impl Into<String>, rules: Vec<NormRule>) -> Self {
        Norm { id: id.into(), description: None, rules }
    }

    /// Checks every guard and rewrite against the world's schema and actions.
    pub fn bind(&self, world: &World) -> Result<(), NormError> {
        if self.rules.is_empty() {
            return Err(NormError::EmptyNorm { norm: self.id.clone() });
        }
        let mismatch =
            |rule: usize, source: ExprError| NormError::SchemaMismatch { norm: self.id.clone(), rule, source };
        let guard_scope = BindScope { schema: world.schema(), actions: Some(world.actions()) };
        let rewrite_scope = BindScope { schema: world.schema(), actions: None };
        for (i, rule) in self.rules.iter().enumerate() {
            rule.guard.bind(&guard_scope).map_err(|e| mismatch(i, e))?;
            if let Effect::Rewrite(assignments) = &rule.effect {
                for (var, rhs) in assignments {
                    let Some(domain) = world.schema().get(var) else {
                        return Err(mismatch(i, ExprError::UnknownVariable(var.clone())));
                    };
                    let ty = rhs.expr.check(&rewrite_scope).map_err(|e| mismatch(i, e))?;
                    let want = if domain.kind == VarKind::Bool { Type::Bool } else { Type::Num };
                    if ty != want {
                        return Err(mismatch(
                            i,
                            ExprError::Type(format!("'{var}' expects {want:?}, rewrite yields {ty:?}")),
                        ));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Bookkeeping on what a norm set changed.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct NormSummary {
    pub states_added: Vec<StateId>,
    pub states_removed: Vec<StateId>,
    pub transitions_forbidden: usize,
    pub transitions_rewritten: usize,
}

/// The world after applying an ordered set of norms, `(S_N, A, N, T_N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormativeWorld {
    pub base: World,
    pub norms_applied: Vec<String>,
    pub world: World,
    pub summary: NormSummary,
}

/// Canonical id for a state created by a rewrite.
pub fn fresh_state_id(vars: &Assignment) -> StateId {
    let body: Vec<String> = vars.iter().map(|(k, v)| format!("{k}={v}")).collect();
    StateId(format!("@[{}]", body.join(",")))
}

pub fn apply_norm(world: &World, norm: &Norm) -> Result<NormativeWorld, NormError> {
    apply_norm_set(world, std::slice::from_ref(norm))
}

pub fn apply_norm_set(world: &World, norms: &[Norm]) -> Result<NormativeWorld, NormError> {
    let mut current = world.clone();
    let mut forbidden = 0;
    let mut rewritten = 0;
    for norm in norms {
        let (next, f, r) = apply_one(&current, norm)?;
        current = next;
        forbidden += f;
        rewritten += r;
    }
    let states_added =
        current.states().filter(|s| !world.contains_state(s.id.as_str())).map(|s| s.id.clone()).collect();
    Ok(NormativeWorld {
        base: world.clone(),
        norms_applied: norms.iter().map(|n| n.id.clone()).collect(),
        world: current,
        summary: NormSummary {
            states_added,
            states_removed: Vec::new(),
            transitions_forbidden: forbidden,
            transitions_rewritten: rewritten,
        },
    })
}

fn apply_one(world: &World, norm: &Norm) -> Result<(World, usize, usize), NormError> {
    norm.bind(world)?;
    let expr_err = |rule: usize, source: ExprError| NormError::SchemaMismatch { norm: norm.id.clone(), rule, source };

    let mut states: BTreeMap<StateId, State> = world.states().map(|s| (s.id.clone(), s.clone())).collect();
    let mut by_assignment: BTreeMap<Assignment, StateId> =
        world.states().map(|s| (s.vars.clone(), s.id.clone())).collect();
    // (from, action, to) -> accumulated probability
    let mut kept: BTreeMap<(StateId, ActionId, StateId), Option<f64>> = BTreeMap::new();
    let mut forbidden = 0;
    let mut rewritten = 0;

    for t in world.transitions() {
        let source = &states[&t.from].vars;
        let mut matched = None;
        for (i, rule) in norm.rules.iter().enumerate() {
            if rule.guard.holds(source, Some(t.action.as_str())).map_err(|e| expr_err(i, e))? {
                matched = Some((i, rule));
                break;
            }
        }
        let to = match matched {
            None => t.to.clone(),
            Some((_, NormRule { effect: Effect::Forbid, .. })) => {
                forbidden += 1;
                continue;
            }
            Some((i, NormRule { effect: Effect::Rewrite(assignments), .. })) => {
                let dest = &states[&t.to].vars;
                let env = Env { vars: dest, action: None };
                let mut vars = dest.clone();
                for (var, rhs) in assignments {
                    let overflow = |value: String, reason: String| NormError::DomainOverflow {
                        norm: norm.id.clone(),
                        var: var.clone(),
                        value,
                        transition: t.to_string(),
                        reason,
                    };
                    let value = match rhs.expr.eval(&env) {
                        Ok(v) => v.into_scalar().ok_or_else(|| expr_err(i, ExprError::Type("string value".into())))?,
                        Err(ExprError::Arithmetic(e)) => return Err(overflow(rhs.source.clone(), e.to_string())),
                        Err(e) => return Err(expr_err(i, e)),
                    };
                    world.schema()[var].check(&value).map_err(|reason| overflow(value.to_string(), reason))?;
                    vars.insert(var.clone(), value);
                }
                let id = match by_assignment.get(&vars) {
                    Some(id) => id.clone(),
                    None => {
                        let id = fresh_state_id(&vars);
                        if states.contains_key(&id) {
                            return Err(NormError::IdCollision { norm: norm.id.clone(), id });
                        }
                        by_assignment.insert(vars.clone(), id.clone());
                        states.insert(id.clone(), State { id: id.clone(), vars });
                        id
                    }
                };
                if id != t.to {
                    rewritten += 1;
                }
                id
            }
        };
        let slot = kept.entry((t.from.clone(), t.action.clone(), to)).or_insert(Some(0.0));
        *slot = match (*slot, t.prob) {
            (Some(acc), Some(p)) => Some(acc + p),
            _ => None,
        };
    }

    // guards only see (source, action), so Forbid drops whole probability groups
    let transitions: Vec<Transition> =
        kept.into_iter().map(|((from, action, to), prob)| Transition { from, action, to, prob }).collect();

    let raw = RawWorld {
        schema: world.schema().clone(),
        states: states.into_values().collect(),
        actions: world.actions().iter().cloned().collect(),
        transitions,
        initial_states: Some(world.initial_states().iter().cloned().collect()),
    };
    let next = validate_world(raw).map_err(|source| NormError::InvalidResult { norm: norm.id.clone(), source })?;
    Ok((next, forbidden, rewritten))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decimal::Decimal;
    use crate::world::tests::driving_raw;
    use crate::world::{Scalar, Schema, VarDomain};

    fn driving() -> World {
        validate_world(driving_raw()).unwrap()
    }

    fn forbid(id: &str, guard: &str) -> Norm {
        Norm::new(id, vec![NormRule::forbid(Guard::parse(guard).unwrap())])
    }

    fn rewrite(id: &str, guard: &str, var: &str, rhs: &str) -> Norm {
        Norm::new(
            id,
            vec![NormRule::rewrite(
                Guard::parse(guard).unwrap(),
                BTreeMap::from([(var.to_string(), ArithExpr::parse(rhs).unwrap())]),
            )],
        )
    }

    fn money(m: &str) -> Assignment {
        Assignment::from([
            ("M".to_string(), Scalar::Num(m.parse().unwrap())),
            ("S".to_string(), Scalar::Num("50".parse().unwrap())),
        ])
    }

    fn tax_world() -> World {
        let dec = VarDomain::with_range(VarKind::Decimal, Decimal::ZERO, Decimal::from_int(1000));
        validate_world(RawWorld {
            schema: Schema::from([("M".to_string(), dec.clone()), ("S".to_string(), dec)]),
            states: vec![State::new("m100", money("100")), State::new("m150", money("150"))],
            actions: vec!["pay_salary".into()],
            transitions: vec![Transition::new("m100", "pay_salary", "m150")],
            initial_states: None,
        })
        .unwrap()
    }

    #[test]
    fn always_drive_slow_forbids_fast() {
        let nw = apply_norm(&driving(), &forbid("n1", "action == \"DriveFast\"")).unwrap();
        assert!(nw.world.transitions().iter().all(|t| t.action.as_str() == "DriveSlow"));
        assert_eq!(nw.world.transitions().len(), 1);
        assert_eq!(nw.summary.transitions_forbidden, 2);
        assert_eq!(nw.world.state_count(), 3);
        assert_eq!(nw.base, driving());
    }

    #[test]
    fn tax_rewrite_lands_on_m_plus_s_times_one_minus_t() {
        let nw = apply_norm(&tax_world(), &rewrite("tax", "action == \"pay_salary\"", "M", "M - 0.2 * S")).unwrap();
        let t = &nw.world.transitions()[0];
        let dest = nw.world.state(t.to.as_str()).unwrap();
        assert_eq!(dest.vars, money("140"));
        assert_eq!(t.to.as_str(), "@[M=140,S=50]");
        assert_eq!(nw.summary.states_added, vec![StateId::from("@[M=140,S=50]")]);
        assert_eq!(nw.summary.transitions_rewritten, 1);
        // unreachable states are retained
        assert!(nw.world.contains_state("m150"));
    }

    #[test]
    fn constant_false_guard_is_identity() {
        let w = driving();
        let nw = apply_norm(&w, &forbid("noop", "false")).unwrap();
        assert_eq!(nw.world, w);
        let nw = apply_norm_set(&w, &[]).unwrap();
        assert_eq!(nw.world, w);
        assert!(nw.norms_applied.is_empty());
    }

    #[test]
    fn first_matching_rule_wins() {
        let norm = Norm::new(
            "mixed",
            vec![
                NormRule::forbid(Guard::parse("risk == 0 && action == \"DriveFast\"").unwrap()),
                NormRule::rewrite(
                    Guard::always(),
                    BTreeMap::from([("risk".into(), ArithExpr::parse("risk").unwrap())]),
                ),
                NormRule::forbid(Guard::always()),
            ],
        );
        let nw = apply_norm(&driving(), &norm).unwrap();
        let got: Vec<String> = nw.world.transitions().iter().map(|t| t.to_string()).collect();
        assert_eq!(got, ["Safe -DriveSlow-> Safe", "Unsafe -DriveFast-> Accident"]);
        // the identity rewrite keeps existing state ids
        assert_eq!(nw.summary.transitions_rewritten, 0);
        assert!(nw.summary.states_added.is_empty());
    }

    #[test]
    fn schema_mismatch_and_overflow() {
        let w = driving();
        let err = apply_norm(&w, &forbid("bad", "speed > 3")).unwrap_err();
        assert_eq!(err.kind(), "SchemaMismatch");
        let err = apply_norm(&w, &forbid("bad", "action == \"Fly\"")).unwrap_err();
        assert_eq!(err.kind(), "SchemaMismatch");
        let err = apply_norm(&w, &rewrite("bad", "true", "speed", "1")).unwrap_err();
        assert_eq!(err.kind(), "SchemaMismatch");
        let err = apply_norm(&w, &rewrite("bad", "true", "risk", "risk + 5")).unwrap_err();
        assert_eq!(err.kind(), "DomainOverflow");
        let err = apply_norm(&w, &rewrite("bad", "true", "risk", "risk * 0.5")).unwrap_err();
        assert_eq!(err.kind(), "DomainOverflow", "{err}");
        let err = apply_norm(&w, &Norm::new("empty", vec![])).unwrap_err();
        assert_eq!(err.kind(), "SchemaMismatch");
    }

    #[test]
    fn collapsed_probabilities_are_summed() {
        let mut raw = driving_raw();
        raw.transitions = vec![
            Transition::new("Safe", "DriveFast", "Unsafe").with_prob(0.8),
            Transition::new("Safe", "DriveFast", "Accident").with_prob(0.2),
        ];
        let w = validate_world(raw).unwrap();
        let nw = apply_norm(&w, &rewrite("cap", "true", "risk", "1")).unwrap();
        assert_eq!(nw.world.transitions().len(), 1);
        assert!((nw.world.transitions()[0].prob.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn forbid_removes_whole_probability_groups() {
        let mut raw = driving_raw();
        raw.transitions = vec![
            Transition::new("Safe", "DriveFast", "Unsafe").with_prob(0.75),
            Transition::new("Safe", "DriveFast", "Accident").with_prob(0.25),
            Transition::new("Safe", "DriveSlow", "Safe").with_prob(1.0),
        ];
        let w = validate_world(raw).unwrap();
        let nw = apply_norm(&w, &forbid("slow", "action == \"DriveFast\"")).unwrap();
        assert_eq!(nw.summary.transitions_forbidden, 2);
        assert_eq!(nw.world.transitions(), &[Transition::new("Safe", "DriveSlow", "Safe").with_prob(1.0)]);
    }

    #[test]
    fn sequential_rewrites_do_not_commute() {
        let w = tax_world();
        let tax = rewrite("tax", "action == \"pay_salary\"", "M", "M - 0.2 * S");
        let bonus = rewrite("bonus", "action == \"pay_salary\"", "M", "M * 1.1");
        let dest = |norms: &[Norm]| {
            let nw = apply_norm_set(&w, norms).unwrap();
            let t = &nw.world.transitions()[0];
            nw.world.state(t.to.as_str()).unwrap().vars["M"]
        };
        // 150 -> 140 -> 154 versus 150 -> 165 -> 155
        assert_eq!(dest(&[tax.clone(), bonus.clone()]), Scalar::Num("154".parse().unwrap()));
        assert_eq!(dest(&[bonus, tax]), Scalar::Num("155".parse().unwrap()));
    }
}
