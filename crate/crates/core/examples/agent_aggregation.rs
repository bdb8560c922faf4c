//! Per-agent and aggregated alignment: agents can bind the same value to
//! different preferences.
//!
//! Run with `cargo run --example agent_aggregation`.

use normalign::{aggregated_alignment, AlignOptions, Document, Scope, ValueId};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let doc = Document::load(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/driving/world.json"))?;
    let norm = [doc.norm("n2").expect("fixture norm").clone()];
    let values: Vec<ValueId> = vec!["Safety".into(), "Efficiency".into()];
    let opts = AlignOptions::horizon(2);

    for agent in doc.catalog.all_agents() {
        for v in &values {
            let r = aggregated_alignment(&doc.world, &norm, &Scope::new(vec![agent], vec![v.clone()]), opts)?;
            println!("{:<11} {:<11} {:+.6}", agent.id, v.as_str(), r.degree);
        }
    }
    let everyone = Scope::new(doc.catalog.all_agents(), values);
    let r = aggregated_alignment(&doc.world, &norm, &everyone, opts)?;
    println!("all agents, both values: {:+.6}", r.degree);
    Ok(())
}
