//! Degree-of-alignment analysis between behavioral norms and values.
//!
//! A [`World`] is a finite labeled transition system over typed state
//! variables. A [`Norm`] rewrites or forbids transitions, producing a
//! normative world. Agents hold preferences over state changes for named
//! values, and [`aggregated_alignment`] scores how well the paths of a
//! normative world agree with those preferences.
//!
//! ```
//! use normalign::{aggregated_alignment, AlignOptions, Document, Scope};
//!
//! let doc = Document::load(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/driving/world.json")).unwrap();
//! let driver = doc.catalog.agent("driver").unwrap();
//! let n1 = doc.norm("n1").unwrap().clone();
//! let report = aggregated_alignment(&doc.world, &[n1], &Scope::single(driver, "Safety"), AlignOptions::default()).unwrap();
//! assert_eq!(report.degree, 0.0);
//! ```

pub mod alignment;
pub mod cli;
pub mod decimal;
pub mod expr;
pub mod io;
pub mod norms;
pub mod paths;
pub mod preferences;
pub mod report;
pub mod world;

pub use alignment::{
    aggregated_alignment, alignment_matrix, degree_of_alignment, relative_alignment, AlignError, AlignOptions,
    AlignmentMatrix, AlignmentReport, RelativeAlignment, Scope, Weighting,
};
pub use decimal::Decimal;
pub use expr::Guard;
pub use io::{Diagnostic, Document, LoadError};
pub use norms::{apply_norm, apply_norm_set, Effect, Norm, NormRule, NormativeWorld};
pub use paths::{enumerate_paths, Path, PathSet, DEFAULT_HORIZON};
pub use preferences::{Agent, Catalog, PreferenceKind, ValueId, ValueSpec};
pub use world::{validate_world, RawWorld, Scalar, State, StateId, Transition, World};
