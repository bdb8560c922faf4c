//! Independent reference implementation and random world generator shared by
//! the integration tests and the acceptance gate.
//!
//! The oracle works on plain integers: every generated state carries one
//! distinct int variable `x`, so a state is identified by its `x`. Norms are
//! applied by direct pattern matching, paths are grown breadth-first by
//! scanning the full transition list, and degrees are exact rationals.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::seq::SliceRandom;
use rand::Rng;

use normalign::decimal::Decimal;
use normalign::expr::Guard;
use normalign::norms::{ArithExpr, Norm, NormRule};
use normalign::preferences::{Agent, PreferenceKind, ValueSpec};
use normalign::world::{Schema, VarDomain, VarKind};
use normalign::{RawWorld, Scalar, State, Transition};

pub const DRIVING: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/driving/world.json");
pub const TAXATION: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/taxation/world.json");

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().expect("finite rational")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OGuard {
    Always,
    Action(usize),
    AtLeast(i64),
    Both(i64, usize),
}

impl OGuard {
    fn holds(self, x: i64, action: usize) -> bool {
        match self {
            OGuard::Always => true,
            OGuard::Action(a) => a == action,
            OGuard::AtLeast(v) => x >= v,
            OGuard::Both(v, a) => x == v && a == action,
        }
    }

    fn source(self) -> String {
        match self {
            OGuard::Always => "true".into(),
            OGuard::Action(a) => format!("action == \"a{a}\""),
            OGuard::AtLeast(v) => format!("x >= {v}"),
            OGuard::Both(v, a) => format!("x == {v} && action == \"a{a}\""),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OEffect {
    Forbid,
    /// `x := x_dest + c`
    Shift(i64),
}

#[derive(Debug, Clone)]
pub struct ORule {
    pub guard: OGuard,
    pub effect: OEffect,
}

/// A generated world in the oracle's own terms.
#[derive(Debug, Clone)]
pub struct Case {
    /// `x` value of each base state, indexed by state number.
    pub xs: Vec<i64>,
    pub actions: usize,
    /// (from, action, to) by state number.
    pub transitions: Vec<(usize, usize, usize)>,
    pub initial: Vec<usize>,
    /// One utility vector (in twentieths) per agent.
    pub utilities: Vec<Vec<i64>>,
    pub rules: Vec<ORule>,
    pub horizon: usize,
}

pub const X_MAX: i64 = 20;

pub fn random_case<R: Rng>(rng: &mut R) -> Case {
    let n = rng.gen_range(1..=6);
    let actions = rng.gen_range(1..=3);
    let mut pool: Vec<i64> = (0..=8).collect();
    pool.shuffle(rng);
    let xs: Vec<i64> = pool[..n].to_vec();

    let density = rng.gen_range(0.15..0.7);
    let mut transitions = Vec::new();
    for from in 0..n {
        for a in 0..actions {
            for to in 0..n {
                if rng.gen_bool(density) {
                    transitions.push((from, a, to));
                }
            }
        }
    }
    let mut initial: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.6)).collect();
    if initial.is_empty() {
        initial.push(rng.gen_range(0..n));
    }
    let agents = rng.gen_range(1..=2);
    let utilities = (0..agents).map(|_| (0..n).map(|_| rng.gen_range(0..=20)).collect()).collect();

    let rule_count = rng.gen_range(0..=2);
    let rules = (0..rule_count)
        .map(|_| {
            let guard = match rng.gen_range(0..4) {
                0 => OGuard::Always,
                1 => OGuard::Action(rng.gen_range(0..actions)),
                2 => OGuard::AtLeast(rng.gen_range(0..=8)),
                _ => OGuard::Both(xs[rng.gen_range(0..n)], rng.gen_range(0..actions)),
            };
            let effect = if rng.gen_bool(0.5) { OEffect::Forbid } else { OEffect::Shift(rng.gen_range(0..=3)) };
            ORule { guard, effect }
        })
        .collect();
    Case { xs, actions, transitions, initial, utilities, rules, horizon: rng.gen_range(1..=4) }
}

impl Case {
    pub fn state_id(i: usize) -> String {
        format!("s{i}")
    }

    pub fn raw(&self) -> RawWorld {
        RawWorld {
            schema: Schema::from([(
                "x".to_string(),
                VarDomain::with_range(VarKind::Int, Decimal::ZERO, Decimal::from_int(X_MAX)),
            )]),
            states: self
                .xs
                .iter()
                .enumerate()
                .map(|(i, x)| {
                    State::new(
                        Self::state_id(i),
                        BTreeMap::from([("x".to_string(), Scalar::Num(Decimal::from_int(*x)))]),
                    )
                })
                .collect(),
            actions: (0..self.actions).map(|a| format!("a{a}").into()).collect(),
            transitions: self
                .transitions
                .iter()
                .map(|&(f, a, t)| Transition::new(Self::state_id(f), format!("a{a}"), Self::state_id(t)))
                .collect(),
            initial_states: Some(self.initial.iter().map(|&i| Self::state_id(i).into()).collect()),
        }
    }

    /// `None` when the case has no rules; the engine then runs on the base world.
    pub fn norm(&self) -> Option<Norm> {
        if self.rules.is_empty() {
            return None;
        }
        let rules = self
            .rules
            .iter()
            .map(|r| {
                let guard = Guard::parse(&r.guard.source()).unwrap();
                match r.effect {
                    OEffect::Forbid => NormRule::forbid(guard),
                    OEffect::Shift(c) => NormRule::rewrite(
                        guard,
                        BTreeMap::from([("x".to_string(), ArithExpr::parse(&format!("x + {c}")).unwrap())]),
                    ),
                }
            })
            .collect();
        Some(Norm::new("random", rules))
    }

    pub fn rewrites(&self) -> bool {
        self.rules.iter().any(|r| matches!(r.effect, OEffect::Shift(_)))
    }

    /// Agents scoring the value "v": utility maps over the base states when
    /// no rule rewrites, otherwise the predicate `x >= 4` (which also covers
    /// states created by rewrites).
    pub fn agents(&self) -> Vec<Agent> {
        self.utilities
            .iter()
            .enumerate()
            .map(|(k, us)| {
                let spec = if self.rewrites() {
                    ValueSpec::new(
                        "v",
                        PreferenceKind::Predicate {
                            formula: Guard::parse("x >= 4").unwrap(),
                            satisfaction: BTreeMap::new(),
                        },
                    )
                } else {
                    ValueSpec::utility("v", us.iter().enumerate().map(|(i, u)| (Self::state_id(i), *u as f64 / 20.0)))
                };
                Agent::new(format!("g{k}"), [spec])
            })
            .collect()
    }

    /// Normative transitions over `x` values, deduplicated.
    pub fn normative(&self) -> BTreeSet<(i64, usize, i64)> {
        let mut out = BTreeSet::new();
        for &(f, a, t) in &self.transitions {
            let (xf, xt) = (self.xs[f], self.xs[t]);
            match self.rules.iter().find(|r| r.guard.holds(xf, a)).map(|r| r.effect) {
                None => {
                    out.insert((xf, a, xt));
                }
                Some(OEffect::Forbid) => {}
                Some(OEffect::Shift(c)) => {
                    out.insert((xf, a, xt + c));
                }
            }
        }
        out
    }

    /// Exact preference of one step, averaged over agents.
    fn pref(&self, from: i64, to: i64) -> BigRational {
        let index = |x: i64| self.xs.iter().position(|&y| y == x);
        let total = self.utilities.iter().fold(BigRational::zero(), |acc, us| {
            let d = if self.rewrites() {
                let sat = |x: i64| if x >= 4 { 1 } else { 0 };
                rat(sat(to) - sat(from), 1)
            } else {
                let u = |x: i64| us[index(x).expect("base state")];
                rat(u(to) - u(from), 20)
            };
            acc + d
        });
        total / rat(self.utilities.len() as i64, 1)
    }

    /// Maximal bounded paths as `x` sequences plus the action labels.
    pub fn paths(&self) -> Vec<(Vec<i64>, Vec<usize>)> {
        let ts = self.normative();
        let out_of = |x: i64| ts.iter().filter(move |t| t.0 == x).copied().collect::<Vec<_>>();
        let mut frontier: Vec<(Vec<i64>, Vec<usize>)> =
            self.initial.iter().map(|&i| (vec![self.xs[i]], vec![])).collect();
        let mut done = Vec::new();
        while let Some((xs, acts)) = frontier.pop() {
            let last = *xs.last().unwrap();
            let next = out_of(last);
            if acts.len() == self.horizon || next.is_empty() {
                if !acts.is_empty() {
                    done.push((xs, acts));
                }
                continue;
            }
            for (_, a, to) in next {
                let mut xs2 = xs.clone();
                xs2.push(to);
                let mut acts2 = acts.clone();
                acts2.push(a);
                frontier.push((xs2, acts2));
            }
        }
        done.sort();
        done
    }

    /// Exact uniform degree, `None` when there are no paths.
    pub fn degree(&self) -> Option<BigRational> {
        let paths = self.paths();
        if paths.is_empty() {
            return None;
        }
        let sum = paths.iter().fold(BigRational::zero(), |acc, (xs, _)| {
            let steps = xs.windows(2).fold(BigRational::zero(), |a, w| a + self.pref(w[0], w[1]));
            acc + steps / rat((xs.len() - 1) as i64, 1)
        });
        Some(sum / rat(paths.len() as i64, 1))
    }

    /// Exact probability-weighted degree with uniform outcome probabilities.
    pub fn weighted_degree(&self) -> Option<BigRational> {
        let ts = self.normative();
        let group = |x: i64, a: usize| ts.iter().filter(|t| t.0 == x && t.1 == a).count() as i64;
        let paths = self.paths();
        if paths.is_empty() {
            return None;
        }
        let mut num = BigRational::zero();
        let mut den = BigRational::zero();
        for (xs, acts) in &paths {
            let w = xs.windows(2).zip(acts).fold(rat(1, 1), |acc, (w, &a)| acc * rat(1, group(w[0], a)));
            let steps = xs.windows(2).fold(BigRational::zero(), |a, w| a + self.pref(w[0], w[1]));
            num += w.clone() * steps / rat((xs.len() - 1) as i64, 1);
            den += w;
        }
        Some(num / den)
    }
}

/// `x` value of a state in an engine world.
pub fn x_of(state: &State) -> i64 {
    match state.vars["x"] {
        Scalar::Num(d) => d.to_i64().expect("integral x"),
        Scalar::Bool(_) => panic!("x is an int"),
    }
}

/// Exact rational from a shortest decimal rendering such as `0.8`.
pub fn rat_of(x: f64) -> BigRational {
    let s = format!("{x}");
    let (neg, s) = s.strip_prefix('-').map_or((false, s.as_str()), |r| (true, r));
    let (int, frac) = s.split_once('.').unwrap_or((s, ""));
    let digits: BigInt = format!("{int}{frac}").parse().unwrap();
    let r = BigRational::new(digits, num_traits::pow(BigInt::from(10), frac.len()));
    if neg {
        -r
    } else {
        r
    }
}

/// A world described only by string triples, for hand-checked fixtures.
pub struct Plain {
    pub transitions: Vec<(String, String, String)>,
    pub initial: Vec<String>,
}

impl Plain {
    /// Reads the transitions and initial states straight out of a world file.
    pub fn from_file(path: &str) -> Plain {
        let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
        let transitions = doc["transitions"]
            .as_array()
            .unwrap()
            .iter()
            .map(|t| {
                let s = |k: &str| t[k].as_str().unwrap().to_string();
                (s("from"), s("action"), s("to"))
            })
            .collect();
        let initial = match doc.get("initial_states") {
            Some(v) => v.as_array().unwrap().iter().map(|s| s.as_str().unwrap().to_string()).collect(),
            None => doc["states"].as_array().unwrap().iter().map(|s| s["id"].as_str().unwrap().to_string()).collect(),
        };
        Plain { transitions, initial }
    }

    pub fn without(mut self, drop: impl Fn(&str, &str) -> bool) -> Plain {
        self.transitions.retain(|(f, a, _)| !drop(f, a));
        self
    }

    /// Maximal bounded paths as state sequences.
    pub fn paths(&self, horizon: usize) -> Vec<Vec<String>> {
        let mut done = Vec::new();
        let mut frontier: Vec<Vec<String>> = self.initial.iter().map(|s| vec![s.clone()]).collect();
        while let Some(p) = frontier.pop() {
            let last = p.last().unwrap();
            let next: Vec<_> = self.transitions.iter().filter(|t| &t.0 == last).collect();
            if p.len() - 1 == horizon || next.is_empty() {
                if p.len() > 1 {
                    done.push(p);
                }
                continue;
            }
            for t in next {
                let mut q = p.clone();
                q.push(t.2.clone());
                frontier.push(q);
            }
        }
        done.sort();
        done
    }

    /// Exact uniform degree for a utility-map value.
    pub fn degree(&self, utilities: &BTreeMap<&str, f64>, horizon: usize) -> Option<BigRational> {
        let paths = self.paths(horizon);
        if paths.is_empty() {
            return None;
        }
        let u = |s: &String| rat_of(utilities[s.as_str()]);
        let total = paths.iter().fold(BigRational::zero(), |acc, p| {
            let sum = p.windows(2).fold(BigRational::zero(), |a, w| a + u(&w[1]) - u(&w[0]));
            acc + sum / rat((p.len() - 1) as i64, 1)
        });
        Some(total / rat(paths.len() as i64, 1))
    }
}

pub fn driving_safety() -> BTreeMap<&'static str, f64> {
    BTreeMap::from([("Safe", 1.0), ("Unsafe", 0.8), ("Accident", 0.4)])
}
