//! Writing norms in code: ordered guarded rules, first match wins, and norm
//! sets that apply left to right.
//!
//! Run with `cargo run --example custom_norms`.

use std::collections::BTreeMap;

use normalign::norms::ArithExpr;
use normalign::{apply_norm_set, Document, Guard, Norm, NormRule};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let doc = Document::load(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/taxation/world.json"))?;

    let progressive = Norm::new(
        "progressive_tax",
        vec![
            // richer workers are matched first
            NormRule::rewrite(
                Guard::parse("action == \"work\" && M >= 150")?,
                BTreeMap::from([("M".to_string(), ArithExpr::parse("M - 0.4 * S")?)]),
            ),
            NormRule::rewrite(
                Guard::parse("action == \"work\"")?,
                BTreeMap::from([("M".to_string(), ArithExpr::parse("M - 0.1 * S")?)]),
            ),
        ],
    );
    let no_spending = Norm::new("frugal", vec![NormRule::forbid(Guard::parse("action == \"spend\"")?)]);

    let nw = apply_norm_set(&doc.world, &[progressive, no_spending])?;
    println!("norms applied: {:?}", nw.norms_applied);
    for t in nw.world.transitions() {
        println!("    {t}");
    }
    println!("{:?}", nw.summary);
    Ok(())
}
