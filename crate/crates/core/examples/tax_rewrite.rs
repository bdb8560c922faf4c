//! An income tax norm rewrites where salary transitions land.
//!
//! Run with `cargo run --example tax_rewrite`.

use normalign::{apply_norm, Document};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let doc = Document::load(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/taxation/world.json"))?;
    let tax = doc.norm("income_tax").expect("fixture norm");
    let taxed = apply_norm(&doc.world, tax)?;

    println!("before:");
    for t in doc.world.transitions() {
        println!("    {t}");
    }
    println!("after {}:", tax.id);
    for t in taxed.world.transitions() {
        let to = taxed.world.state(t.to.as_str()).expect("validated");
        println!("    {t}   M = {}", to.vars["M"]);
    }
    println!("new states: {:?}", taxed.summary.states_added);
    Ok(())
}
