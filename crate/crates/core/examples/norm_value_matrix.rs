//! Every norm against every value, keeping failed cells.
//!
//! Run with `cargo run --example norm_value_matrix`.

use normalign::report::{render_matrix, Format};
use normalign::{alignment_matrix, AlignOptions, Document};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for fixture in ["driving", "taxation"] {
        let path = format!("{}/fixtures/{fixture}/world.json", env!("CARGO_MANIFEST_DIR"));
        let doc = Document::load(&path)?;
        let agents = doc.catalog.all_agents();
        let ids: Vec<String> = agents.iter().map(|a| a.id.clone()).collect();
        let opts = AlignOptions::default();
        let m = alignment_matrix(&doc.world, &doc.norms, &agents, &doc.catalog.value_ids(), opts);
        print!("{}", render_matrix(&m, &ids, opts.horizon, opts.weighting, Format::Table));
        println!();
    }
    Ok(())
}
