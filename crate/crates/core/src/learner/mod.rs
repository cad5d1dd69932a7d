//! Iterative library learning.
//!
//! Each iteration searches for the single abstraction whose addition most
//! reduces corpus DL + library DL, adds it, and rewrites the programs it
//! applies to. The loop stops when no abstraction has positive utility.

mod search;
mod stats;

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lang::rewrite::{derive, derive_with, library_matches, sym_tokens, Base, FnRef, Matches};
use crate::lang::semantics::Tok;
use crate::lang::{cost, library_dl, Abstraction, Corpus, CostModel, Expr, Library, PrimitiveAlphabet};
use search::{Found, SavingsCache, Space};

pub use stats::{hierarchy_stats, usage_counts, HierarchyStats, Usage};

/// One position of a [`Pattern`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Slot {
    Stroke(u32),
    Hole,
}

/// A list pattern with holes. `head` patterns start with a hole standing
/// for a list prefix, `(#0 S HZ)`; the others start with `list`. Holes are
/// numbered left to right when the pattern becomes an abstraction.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Pattern {
    pub head: bool,
    pub slots: Vec<Slot>,
}

impl Pattern {
    pub fn anchored(slots: Vec<Slot>) -> Self {
        Self { head: false, slots }
    }

    pub fn headed(slots: Vec<Slot>) -> Self {
        Self { head: true, slots }
    }

    /// Number of holes, the head included.
    pub fn arity(&self) -> usize {
        usize::from(self.head) + self.element_holes()
    }

    pub fn element_holes(&self) -> usize {
        self.slots.iter().filter(|s| **s == Slot::Hole).count()
    }

    pub fn fixed(&self) -> usize {
        self.slots.len() - self.element_holes()
    }

    /// The literal body, e.g. `(#0 S HZ #1)`.
    pub fn to_expr(&self, alphabet: &PrimitiveAlphabet) -> Expr {
        let mut next = usize::from(self.head);
        let head = if self.head { Expr::Var(0) } else { Expr::ListHead };
        Expr::apply(
            head,
            self.slots.iter().map(|slot| match slot {
                Slot::Stroke(s) => Expr::prim(alphabet.name(*s)),
                Slot::Hole => {
                    next += 1;
                    Expr::Var(next - 1)
                }
            }),
        )
    }

    /// Renders the pattern with stroke names from `alphabet`.
    pub fn display<'a>(&'a self, alphabet: &'a PrimitiveAlphabet) -> impl fmt::Display + 'a {
        struct Shown<'a>(&'a Pattern, &'a PrimitiveAlphabet);
        impl fmt::Display for Shown<'_> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.0.to_expr(self.1))
            }
        }
        Shown(self, alphabet)
    }
}

/// A use of a function: the glyph and the stroke span `[start, end)` its
/// items cover.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Location {
    pub glyph: String,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchSet {
    pub pattern: Pattern,
    pub locations: Vec<Location>,
    pub uses: usize,
}

/// The best abstraction of one search round with its exact utility: the
/// drop in corpus DL when it is added, minus the cost of its body.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UtilityEstimate {
    pub pattern: Pattern,
    pub body: Expr,
    pub arity: usize,
    pub utility: i64,
    pub matches: MatchSet,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LearnConfig {
    pub max_arity: usize,
    /// Upper limit on learned functions; reaching it stops the loop early.
    pub max_iterations: usize,
}

impl Default for LearnConfig {
    fn default() -> Self {
        Self {
            max_arity: 3,
            max_iterations: 5000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iter: usize,
    #[serde(rename = "fn")]
    pub name: String,
    pub body: String,
    pub arity: usize,
    pub utility: i64,
    pub uses: usize,
    pub corpus_dl_before: u64,
    pub corpus_dl: u64,
    pub library_dl: u64,
}

impl TraceRecord {
    pub fn total_dl(&self) -> u64 {
        self.corpus_dl + self.library_dl
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LearnTrace {
    /// Corpus DL of the literal programs, before any learning.
    pub initial_dl: u64,
    pub records: Vec<TraceRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnOutcome {
    pub library: Library,
    pub rewritten: Corpus,
    pub trace: LearnTrace,
    /// Set when the loop stopped at `max_iterations` with abstractions of
    /// positive utility still available.
    pub hit_iteration_cap: bool,
}

/// Finds the abstraction with maximal positive utility for a corpus already
/// rewritten under `library`, or `None` if nothing compresses.
pub fn best_abstraction(
    corpus: &Corpus,
    library: &Library,
    model: &CostModel,
    max_arity: usize,
) -> Result<Option<UtilityEstimate>> {
    if corpus.alphabet() != library.base() {
        return Err(Error::Invalid(
            "library alphabet differs from corpus alphabet".into(),
        ));
    }
    let seqs = corpus.expand_all(library)?;
    let toks: Vec<Vec<Tok>> = seqs.iter().map(|s| sym_tokens(s)).collect();
    let (matches, prefix): (Vec<Matches>, Vec<Vec<u64>>) =
        toks.par_iter().map(|t| analyze(t, library, model)).unzip();
    let cache = SavingsCache::new(toks.len());
    let space = Space {
        lib: library,
        model: *model,
        toks: &toks,
        prefix: &prefix,
        matches: &matches,
        cache: &cache,
    };
    let ids: Vec<&str> = corpus.ids().collect();
    Ok(space.best(max_arity).0.map(|found| estimate(&space, &found, &ids)))
}

/// Learns a library for `corpus`, whose programs must expand under the base
/// alphabet alone.
pub fn learn_library(corpus: &Corpus, model: &CostModel, config: &LearnConfig) -> Result<LearnOutcome> {
    let mut library = Library::new(corpus.alphabet().clone());
    let seqs = corpus.expand_all(&library)?;
    let toks: Vec<Vec<Tok>> = seqs.iter().map(|s| sym_tokens(s)).collect();
    let (mut matches, mut prefix): (Vec<Matches>, Vec<Vec<u64>>) =
        toks.par_iter().map(|t| analyze(t, &library, model)).unzip();
    let corpus_dl = |prefix: &[Vec<u64>]| -> u64 { prefix.iter().map(|c| c[c.len() - 1]).sum() };
    let mut cache = SavingsCache::new(toks.len());
    let mut trace = LearnTrace {
        initial_dl: corpus_dl(&prefix),
        records: Vec::new(),
    };
    let mut hit_iteration_cap = false;

    loop {
        let space = Space {
            lib: &library,
            model: *model,
            toks: &toks,
            prefix: &prefix,
            matches: &matches,
            cache: &cache,
        };
        let (found, fresh) = space.best(config.max_arity);
        cache.insert(fresh);
        let Some(found) = found else {
            break;
        };
        if library.len() >= config.max_iterations {
            log::warn!(
                "stopping at the iteration cap of {} with compressible structure left",
                config.max_iterations
            );
            hit_iteration_cap = true;
            break;
        }
        let before = corpus_dl(&prefix);
        let name = format!("fn_{}", library.len());
        library.push(Abstraction::new(&name, found.template.arity(), found.body.clone()))?;
        let updated: Vec<(Matches, Vec<u64>)> = found
            .programs
            .par_iter()
            .map(|&p| analyze(&toks[p as usize], &library, model))
            .collect();
        for (&p, (m, c)) in found.programs.iter().zip(updated) {
            matches[p as usize] = m;
            prefix[p as usize] = c;
        }
        cache.advance(&found.programs);
        let after = corpus_dl(&prefix);
        let record = TraceRecord {
            iter: library.len(),
            name,
            body: found.printed.clone(),
            arity: found.template.arity(),
            utility: found.utility,
            uses: found.uses,
            corpus_dl_before: before,
            corpus_dl: after,
            library_dl: library_dl(&library, model),
        };
        debug_assert_eq!(
            before as i64 - found.utility,
            (after + cost(&found.body, model)) as i64
        );
        log::debug!(
            "{} := {} utility {} uses {}",
            record.name,
            record.body,
            record.utility,
            record.uses
        );
        trace.records.push(record);
    }

    let programs: Vec<Expr> = toks
        .par_iter()
        .map(|t| derive(t, Base::ListHead, &library, None, model).to_expr(&library))
        .collect();
    Ok(LearnOutcome {
        rewritten: corpus.with_programs(programs),
        library,
        trace,
        hit_iteration_cap,
    })
}

/// Library matches and optimal prefix costs of a token sequence.
fn analyze(toks: &[Tok], library: &Library, model: &CostModel) -> (Matches, Vec<u64>) {
    let matches = library_matches(toks, Base::ListHead, library);
    let prefix = derive_with(toks, Base::ListHead, library, &matches, None, model).prefix_costs();
    (matches, prefix)
}

fn estimate(space: &Space<'_>, found: &Found, ids: &[&str]) -> UtilityEstimate {
    let mut locations = Vec::new();
    for &p in &found.programs {
        let d = derive_with(
            &space.toks[p as usize],
            Base::ListHead,
            space.lib,
            &space.matches[p as usize],
            Some(&found.template),
            &space.model,
        );
        let mut spans = d.calls(FnRef::Extra);
        spans.reverse();
        for (start, end) in spans {
            locations.push(Location {
                glyph: ids[p as usize].to_string(),
                start,
                end,
            });
        }
    }
    UtilityEstimate {
        pattern: found.pattern.clone(),
        body: found.body.clone(),
        arity: found.template.arity(),
        utility: found.utility,
        matches: MatchSet {
            pattern: found.pattern.clone(),
            uses: locations.len(),
            locations,
        },
    }
}
