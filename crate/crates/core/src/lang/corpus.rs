use indexmap::IndexMap;
use rayon::prelude::*;

use super::alphabet::PrimitiveAlphabet;
use super::cost::{cost, CostModel};
use super::expr::Expr;
use super::library::Library;
use super::rewrite::rewrite_sequence;
use super::semantics::expand_ids;
use crate::error::{Error, LangError, Result};

/// Glyph programs keyed by glyph id, in insertion order.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    alphabet: PrimitiveAlphabet,
    entries: IndexMap<String, Expr>,
}

impl Corpus {
    pub fn new(alphabet: PrimitiveAlphabet) -> Self {
        Self {
            alphabet,
            entries: IndexMap::new(),
        }
    }

    /// Builds a literal corpus of `(list ...)` programs from stroke names.
    pub fn from_sequences<I, K, S>(alphabet: PrimitiveAlphabet, seqs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (K, Vec<S>)>,
        K: Into<String>,
        S: Into<String>,
    {
        let lib = Library::new(alphabet.clone());
        let mut corpus = Self::new(alphabet);
        for (id, strokes) in seqs {
            corpus.insert(id, Expr::list(strokes), &lib)?;
        }
        Ok(corpus)
    }

    /// Adds a program after checking that it expands, under `library`, to a
    /// non-empty stroke sequence over this corpus' alphabet.
    pub fn insert(&mut self, id: impl Into<String>, program: Expr, library: &Library) -> Result<()> {
        let id = id.into();
        if library.base() != &self.alphabet {
            return Err(Error::Invalid(
                "library alphabet differs from corpus alphabet".into(),
            ));
        }
        if expand_ids(&program, library)?.is_empty() {
            return Err(LangError::EmptyExpansion.into());
        }
        if self.entries.contains_key(&id) {
            return Err(Error::DuplicateGlyph(id));
        }
        self.entries.insert(id, program);
        Ok(())
    }

    pub fn alphabet(&self) -> &PrimitiveAlphabet {
        &self.alphabet
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Expr> {
        self.entries.get(id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.entries.contains_key(id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Expr)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// Expanded stroke ids of every entry, in entry order.
    pub fn expand_all(&self, library: &Library) -> Result<Vec<Vec<u32>>, LangError> {
        self.entries
            .values()
            .map(|e| expand_ids(e, library))
            .collect()
    }

    /// Sum of entry costs.
    pub fn description_length(&self, model: &CostModel) -> u64 {
        self.entries.values().map(|e| cost(e, model)).sum()
    }

    /// Rewrites every entry optimally under `library`. Entries are processed
    /// in parallel; the result keeps entry order.
    pub fn rewrite_with(&self, library: &Library, model: &CostModel) -> Result<Corpus, LangError> {
        let seqs = self.expand_all(library)?;
        let programs: Vec<Expr> = seqs
            .par_iter()
            .map(|ids| rewrite_sequence(ids, library, model).0)
            .collect();
        Ok(Corpus {
            alphabet: self.alphabet.clone(),
            entries: self.entries.keys().cloned().zip(programs).collect(),
        })
    }

    /// Same ids in the same order, new programs. Used by the learner.
    pub(crate) fn with_programs(&self, programs: Vec<Expr>) -> Corpus {
        Corpus {
            alphabet: self.alphabet.clone(),
            entries: self.entries.keys().cloned().zip(programs).collect(),
        }
    }

    /// Restricts to the given ids, keeping this corpus' order.
    pub fn subset<'a>(&self, keep: impl Fn(&str) -> bool + 'a) -> Corpus {
        Corpus {
            alphabet: self.alphabet.clone(),
            entries: self
                .entries
                .iter()
                .filter(|(k, _)| keep(k))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
        }
    }
}
