//! Degree of alignment of the two driving norms with safety.
//!
//! Run with `cargo run --example driving_alignment`.

use normalign::{aggregated_alignment, AlignOptions, Document, Scope};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let doc = Document::load(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/driving/world.json"))?;
    let driver = doc.catalog.agent("driver").expect("fixture declares a driver");

    for id in ["n1", "n2"] {
        let norm = doc.norm(id).expect("fixture norm").clone();
        let report =
            aggregated_alignment(&doc.world, &[norm], &Scope::single(driver, "Safety"), AlignOptions::horizon(2))?;
        println!("{id}: D = {:+.6} over {} path(s)", report.degree, report.path_count);
        for p in &report.paths {
            println!("    {:+.3}  {}", p.mean, p.path);
        }
    }
    Ok(())
}
