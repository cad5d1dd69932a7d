//! Library learning for corpora of stroke-sequence glyph programs.
//!
//! A glyph is written as a flat list program over a fixed stroke alphabet,
//! e.g. `(list S HZ H H H)`. The learner repeatedly adds the single
//! λ-abstraction that most reduces the total description length of the
//! rewritten corpus plus the library, and stops once no abstraction pays
//! for its own body.
//!
//! Modules:
//! - [`lang`]: program terms, parsing/printing, expansion, cost, optimal rewriting.
//! - [`learner`]: abstraction search and the iterative learning loop.
//! - [`evaluation`]: span extraction, bracket scoring, baseline trees, radical alignment.
//! - [`metrics`]: complexity reports and cross-script comparisons.
//! - [`ingestion`]: Bézier fitting and k-means stroke alphabets for raw trajectories.
//! - [`formats`]: the JSON Lines and text file formats used by the CLI.

pub mod error;
pub mod evaluation;
pub mod formats;
pub mod ingestion;
pub mod lang;
pub mod learner;
pub mod metrics;

pub use error::{Error, LangError, Result};
pub use lang::{
    cost, expand, parse, print, rewrite, Abstraction, Corpus, CostModel, Expr, Library,
    PrimitiveAlphabet,
};
pub use learner::{learn_library, LearnConfig, LearnOutcome, LearnTrace};

