use std::collections::HashMap;

use super::alphabet::{is_valid_symbol, PrimitiveAlphabet, LIST_KEYWORD};
use super::expr::Expr;
use super::semantics::{self, Item, Template, Tok};
use crate::error::LangError;

/// A named λ-abstraction `name(#0 .. #arity-1) := body`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Abstraction {
    pub name: String,
    pub arity: usize,
    pub body: Expr,
}

impl Abstraction {
    pub fn new(name: impl Into<String>, arity: usize, body: Expr) -> Self {
        Self {
            name: name.into(),
            arity,
            body,
        }
    }
}

/// Base alphabet plus learned abstractions in definition order. Every body
/// only refers to primitives and earlier abstractions.
#[derive(Debug, Clone)]
pub struct Library {
    base: PrimitiveAlphabet,
    learned: Vec<Abstraction>,
    templates: Vec<Template>,
    index: HashMap<String, usize>,
    trie: Trie,
}

impl Library {
    pub fn new(base: PrimitiveAlphabet) -> Self {
        Self {
            base,
            learned: Vec::new(),
            templates: Vec::new(),
            index: HashMap::new(),
            trie: Trie::default(),
        }
    }

    pub fn with_learned(
        base: PrimitiveAlphabet,
        learned: impl IntoIterator<Item = Abstraction>,
    ) -> Result<Self, LangError> {
        let mut lib = Self::new(base);
        for abs in learned {
            lib.push(abs)?;
        }
        Ok(lib)
    }

    /// Appends an abstraction after validating its name and compiling its body.
    pub fn push(&mut self, abs: Abstraction) -> Result<usize, LangError> {
        if !is_valid_symbol(&abs.name) || abs.name == LIST_KEYWORD {
            return Err(LangError::InvalidName(abs.name));
        }
        if self.base.contains(&abs.name) || self.index.contains_key(&abs.name) {
            return Err(LangError::DuplicateName(abs.name));
        }
        let template = semantics::compile(&abs.body, abs.arity, self).map_err(|reason| {
            LangError::BadAbstraction {
                name: abs.name.clone(),
                reason,
            }
        })?;
        let idx = self.learned.len();
        self.trie.insert(&template, idx);
        self.index.insert(abs.name.clone(), idx);
        self.templates.push(template);
        self.learned.push(abs);
        Ok(idx)
    }

    pub fn base(&self) -> &PrimitiveAlphabet {
        &self.base
    }

    pub fn learned(&self) -> &[Abstraction] {
        &self.learned
    }

    pub fn len(&self) -> usize {
        self.learned.len()
    }

    pub fn is_empty(&self) -> bool {
        self.learned.is_empty()
    }

    pub fn function(&self, idx: usize) -> &Abstraction {
        &self.learned[idx]
    }

    pub fn function_index(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn template(&self, idx: usize) -> &Template {
        &self.templates[idx]
    }

    pub fn templates(&self) -> &[Template] {
        &self.templates
    }

    /// Library restricted to its first `n` learned functions.
    pub fn prefix(&self, n: usize) -> Library {
        Library::with_learned(self.base.clone(), self.learned[..n].iter().cloned())
            .expect("a prefix of a valid library is valid")
    }

    /// Calls `found(fn_idx, end)` for every learned template whose items
    /// match `toks` starting at `start`.
    pub(crate) fn matches_from(&self, toks: &[Tok], start: usize, found: impl FnMut(usize, usize)) {
        self.trie.walk(toks, start, &self.templates, found);
    }
}

impl PartialEq for Library {
    fn eq(&self, other: &Self) -> bool {
        self.base == other.base && self.learned == other.learned
    }
}

/// Prefix tree over template items. Element parameters are wildcard edges.
#[derive(Debug, Clone, Default)]
struct Trie {
    nodes: Vec<TrieNode>,
}

#[derive(Debug, Clone, Default)]
struct TrieNode {
    fixed: HashMap<u32, usize>,
    params: Vec<(usize, usize)>,
    complete: Vec<usize>,
}

impl Trie {
    fn insert(&mut self, template: &Template, idx: usize) {
        if self.nodes.is_empty() {
            self.nodes.push(TrieNode::default());
        }
        let mut node = 0;
        for item in template.items() {
            let next = match *item {
                Item::Fixed(s) => self.nodes[node].fixed.get(&s).copied(),
                Item::Param(p) => self.nodes[node]
                    .params
                    .iter()
                    .find(|(q, _)| *q == p)
                    .map(|(_, n)| *n),
            };
            node = match next {
                Some(n) => n,
                None => {
                    let n = self.nodes.len();
                    self.nodes.push(TrieNode::default());
                    match *item {
                        Item::Fixed(s) => self.nodes[node].fixed.insert(s, n),
                        Item::Param(p) => {
                            self.nodes[node].params.push((p, n));
                            None
                        }
                    };
                    n
                }
            };
        }
        self.nodes[node].complete.push(idx);
    }

    fn walk(
        &self,
        toks: &[Tok],
        start: usize,
        templates: &[Template],
        mut found: impl FnMut(usize, usize),
    ) {
        if self.nodes.is_empty() {
            return;
        }
        let mut stack = vec![(0usize, start)];
        while let Some((node, pos)) = stack.pop() {
            let n = &self.nodes[node];
            for &idx in &n.complete {
                let t = &templates[idx];
                if !t.has_repeated_params() || t.bindings_consistent(toks, start) {
                    found(idx, pos);
                }
            }
            let Some(tok) = toks.get(pos) else { continue };
            if let Tok::Sym(s) = tok {
                if let Some(&child) = n.fixed.get(s) {
                    stack.push((child, pos + 1));
                }
            }
            for &(_, child) in &n.params {
                stack.push((child, pos + 1));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse;

    #[test]
    fn names_must_be_unique_across_base_and_learned() {
        let mut lib = Library::new(PrimitiveAlphabet::standard());
        let body = parse("(list S HZ)", &lib).unwrap();
        assert_eq!(
            lib.push(Abstraction::new("H", 0, body.clone())),
            Err(LangError::DuplicateName("H".into()))
        );
        lib.push(Abstraction::new("fn_0", 0, body.clone())).unwrap();
        assert_eq!(
            lib.push(Abstraction::new("fn_0", 0, body.clone())),
            Err(LangError::DuplicateName("fn_0".into()))
        );
        assert!(lib.push(Abstraction::new("list", 0, body)).is_err());
    }

    #[test]
    fn forward_references_are_rejected() {
        let lib = Library::new(PrimitiveAlphabet::standard());
        let mut other = lib.clone();
        other
            .push(Abstraction::new("fn_0", 0, parse("(list S)", &lib).unwrap()))
            .unwrap();
        let body = parse("(fn_0 H)", &other).unwrap();
        let mut lib = lib;
        assert!(matches!(
            lib.push(Abstraction::new("fn_1", 0, body)),
            Err(LangError::BadAbstraction { .. })
        ));
    }

    #[test]
    fn trie_finds_all_matches() {
        let mut lib = Library::new(PrimitiveAlphabet::standard());
        for (name, arity, body) in [
            ("a", 0, "(list S HZ)"),
            ("b", 1, "(#0 S HZ H)"),
            ("c", 2, "(#0 S #1)"),
        ] {
            let body = parse(body, &lib).unwrap();
            lib.push(Abstraction::new(name, arity, body)).unwrap();
        }
        let toks: Vec<Tok> = ["S", "HZ", "H"]
            .iter()
            .map(|s| Tok::Sym(lib.base().id(s).unwrap()))
            .collect();
        let mut hits = Vec::new();
        lib.matches_from(&toks, 0, |f, end| hits.push((f, end)));
        hits.sort();
        assert_eq!(hits, vec![(0, 2), (1, 3), (2, 2)]);
        let mut hits = Vec::new();
        lib.matches_from(&toks, 1, |f, end| hits.push((f, end)));
        assert!(hits.is_empty());
    }
}
