//! Uniform versus probability-weighted path averaging.
//!
//! Run with `cargo run --example probability_weighting`.

use normalign::{aggregated_alignment, AlignOptions, Document, Scope, Weighting};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let doc = Document::load(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/taxation/world.json"))?;
    let agent = doc.catalog.agent("default").expect("synthesized agent");
    let tax = [doc.norm("income_tax").expect("fixture norm").clone()];
    let scope = Scope::single(agent, "wealth");

    for w in [Weighting::Uniform, Weighting::ProbabilityWeighted] {
        let r = aggregated_alignment(&doc.world, &tax, &scope, AlignOptions::default().weighted(w))?;
        println!("{w}: D = {:.6}", r.degree);
        for p in &r.paths {
            println!("    weight {:.4}  mean {:+.3}  {}", p.weight, p.mean, p.path);
        }
    }
    Ok(())
}
