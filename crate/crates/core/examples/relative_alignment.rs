//! How much more one norm is aligned than another.
//!
//! Run with `cargo run --example relative_alignment`.

use normalign::{relative_alignment, AlignOptions, Document, Scope};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let doc = Document::load(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/driving/world.json"))?;
    let scope = Scope::new(doc.catalog.all_agents(), vec!["Safety".into()]);
    let (n1, n2) = (doc.norm("n1").expect("fixture"), doc.norm("n2").expect("fixture"));

    for horizon in 1..=4 {
        let r = relative_alignment(&doc.world, n1, n2, &scope, AlignOptions::horizon(horizon))?;
        println!(
            "horizon {horizon}: D(n1) = {:+.6}, D(n2) = {:+.6}, n1 - n2 = {:+.6}",
            r.first.degree, r.second.degree, r.difference
        );
    }
    Ok(())
}
