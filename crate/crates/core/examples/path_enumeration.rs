//! Bounded path enumeration over a world built in code.
//!
//! Run with `cargo run --example path_enumeration`.

use std::collections::BTreeMap;

use normalign::decimal::Decimal;
use normalign::world::{Schema, VarDomain, VarKind};
use normalign::{enumerate_paths, validate_world, RawWorld, Scalar, State, Transition};

fn level(id: &str, n: i64) -> State {
    State::new(id, BTreeMap::from([("level".to_string(), Scalar::Num(Decimal::from_int(n)))]))
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let world = validate_world(RawWorld {
        schema: Schema::from([("level".to_string(), VarDomain::new(VarKind::Int))]),
        states: vec![level("low", 0), level("mid", 1), level("high", 2)],
        actions: vec!["up".into(), "down".into()],
        transitions: vec![
            Transition::new("low", "up", "mid"),
            Transition::new("mid", "up", "high"),
            Transition::new("mid", "down", "low"),
            Transition::new("high", "down", "mid"),
        ],
        initial_states: Some(vec!["low".into()]),
    })?;

    for horizon in 1..=4 {
        let paths = enumerate_paths(&world, horizon)?;
        println!("horizon {horizon}: {} path(s)", paths.len());
        for p in paths.iter() {
            println!("    {p}");
        }
    }
    Ok(())
}
