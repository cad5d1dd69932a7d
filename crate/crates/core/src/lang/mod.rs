//! Program representation: terms, parsing and printing, flattening
//! semantics, description-length cost, and optimal rewriting.

mod alphabet;
mod corpus;
mod cost;
mod expr;
mod library;
pub(crate) mod rewrite;
pub(crate) mod semantics;

pub use alphabet::{PrimitiveAlphabet, LIST_KEYWORD, STANDARD_STROKES};
pub use corpus::Corpus;
pub use cost::{cost, CostModel};
pub use expr::{parse, print, Expr};
pub use library::{Abstraction, Library};
pub use rewrite::{rewrite, rewrite_body, rewrite_sequence};
pub use semantics::{expand, Item, Template};

/// Sum of body costs of the learned abstractions; base primitives are free.
pub fn library_dl(library: &Library, model: &CostModel) -> u64 {
    library
        .learned()
        .iter()
        .map(|abs| cost(&abs.body, model))
        .sum()
}
