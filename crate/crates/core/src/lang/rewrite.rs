//! Minimum-cost rewriting of a stroke sequence with a library.
//!
//! A list-valued term always denotes a prefix of the target sequence, so the
//! cheapest term for every prefix `toks[..i]` can be computed left to right:
//! either append one element to the best term for `toks[..i-1]`, or call a
//! function whose items end at `i` (passing the best term for the remaining
//! prefix as its head argument when it has one).
//!
//! Ties are broken by definition order: the earliest-defined function wins,
//! any function beats a plain append.

use super::cost::{cost, CostModel};
use super::expr::Expr;
use super::library::Library;
use super::semantics::{self, Item, Template, Tok};
use crate::error::LangError;

/// What the empty prefix is written as.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Base {
    ListHead,
    /// Body of an abstraction whose list head is parameter `#k`.
    HeadVar(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) enum FnRef {
    Lib(usize),
    /// A candidate abstraction not (yet) in the library; it is ordered
    /// after every library function.
    Extra,
}

#[derive(Debug, Clone, Copy)]
enum Choice {
    Base,
    Append,
    Call {
        func: FnRef,
        start: usize,
        has_head: bool,
    },
}

/// Optimal derivations of every prefix of a token sequence.
pub(crate) struct Derivation<'a> {
    toks: &'a [Tok],
    base: Base,
    costs: Vec<u64>,
    choices: Vec<Choice>,
}

/// Library calls available in a token sequence, grouped by end position.
pub(crate) struct Matches {
    ending: Vec<Vec<(usize, usize)>>,
}

pub(crate) fn library_matches(toks: &[Tok], base: Base, lib: &Library) -> Matches {
    let allow_anchored = base == Base::ListHead;
    let mut ending = vec![Vec::new(); toks.len() + 1];
    for start in 0..toks.len() {
        lib.matches_from(toks, start, |f, end| {
            if !lib.template(f).is_anchored() || (allow_anchored && start == 0) {
                ending[end].push((f, start));
            }
        });
    }
    for calls in &mut ending {
        calls.sort_unstable();
    }
    Matches { ending }
}

pub(crate) fn derive<'a>(
    toks: &'a [Tok],
    base: Base,
    lib: &Library,
    extra: Option<&Template>,
    model: &CostModel,
) -> Derivation<'a> {
    derive_with(toks, base, lib, &library_matches(toks, base, lib), extra, model)
}

/// Like [`derive`], reusing precomputed library matches for `toks`.
pub(crate) fn derive_with<'a>(
    toks: &'a [Tok],
    base: Base,
    lib: &Library,
    matches: &Matches,
    extra: Option<&Template>,
    model: &CostModel,
) -> Derivation<'a> {
    let n = toks.len();
    let t = model.terminal;
    let a = model.application;

    let mut extra_start = vec![None; n + 1];
    if let Some(tmpl) = extra {
        let starts = if !tmpl.is_anchored() {
            0..(n + 1).saturating_sub(tmpl.len())
        } else if base == Base::ListHead {
            0..1
        } else {
            0..0
        };
        for start in starts {
            if start + tmpl.len() <= n && tmpl.matches_at(toks, start) {
                extra_start[start + tmpl.len()] = Some(start);
            }
        }
    }

    let call_cost = |tmpl: &Template, costs: &[u64], start: usize| {
        let head_cost = if tmpl.head().is_some() { costs[start] } else { 0 };
        t + tmpl.arity() as u64 * a + tmpl.element_params() as u64 * t + head_cost
    };

    let mut costs = Vec::with_capacity(n + 1);
    let mut choices = Vec::with_capacity(n + 1);
    costs.push(t);
    choices.push(Choice::Base);
    for i in 1..=n {
        let mut best = (costs[i - 1] + t + a, Choice::Append);
        // Entries are sorted by function index, so the first of equal cost wins.
        for &(f, start) in &matches.ending[i] {
            let tmpl = lib.template(f);
            let c = call_cost(tmpl, &costs, start);
            if c < best.0 || (c == best.0 && matches!(best.1, Choice::Append)) {
                best = (
                    c,
                    Choice::Call {
                        func: FnRef::Lib(f),
                        start,
                        has_head: tmpl.head().is_some(),
                    },
                );
            }
        }
        if let (Some(tmpl), Some(start)) = (extra, extra_start[i]) {
            let c = call_cost(tmpl, &costs, start);
            if c < best.0 {
                best = (
                    c,
                    Choice::Call {
                        func: FnRef::Extra,
                        start,
                        has_head: tmpl.head().is_some(),
                    },
                );
            }
        }
        costs.push(best.0);
        choices.push(best.1);
    }
    Derivation {
        toks,
        base,
        costs,
        choices,
    }
}

impl Derivation<'_> {
    pub fn cost(&self) -> u64 {
        *self.costs.last().expect("non-empty cost table")
    }

    /// Optimal cost of every prefix, the empty one included.
    pub fn prefix_costs(self) -> Vec<u64> {
        self.costs
    }

    /// Number of calls to `func` in the optimal term for the whole sequence.
    pub fn uses(&self, func: FnRef) -> usize {
        self.calls(func).len()
    }

    /// Token spans `[start, end)` covered by the items of each call to `func`,
    /// right to left.
    pub fn calls(&self, func: FnRef) -> Vec<(usize, usize)> {
        let mut spans = Vec::new();
        let mut i = self.toks.len();
        loop {
            match self.choices[i] {
                Choice::Base => return spans,
                Choice::Append => i -= 1,
                Choice::Call {
                    func: f,
                    start,
                    has_head,
                } => {
                    if f == func {
                        spans.push((start, i));
                    }
                    if !has_head {
                        return spans;
                    }
                    i = start;
                }
            }
        }
    }

    /// The optimal term over `lib`. Only valid for derivations without an
    /// extra template.
    pub fn to_expr(&self, lib: &Library) -> Expr {
        self.build(self.toks.len(), lib)
    }

    fn build(&self, i: usize, lib: &Library) -> Expr {
        match self.choices[i] {
            Choice::Base => match self.base {
                Base::ListHead => Expr::ListHead,
                Base::HeadVar(k) => Expr::Var(k),
            },
            Choice::Append => Expr::app(self.build(i - 1, lib), self.leaf(i - 1, lib)),
            Choice::Call { func, start, .. } => {
                let FnRef::Lib(f) = func else {
                    panic!("derivation uses an unnamed template")
                };
                let (name, tmpl) = (lib.function(f).name.as_str(), lib.template(f));
                let mut args: Vec<Option<Expr>> = vec![None; tmpl.arity()];
                if let Some(h) = tmpl.head() {
                    args[h] = Some(self.build(start, lib));
                }
                for (offset, item) in tmpl.items().iter().enumerate() {
                    if let Item::Param(p) = *item {
                        if args[p].is_none() {
                            args[p] = Some(self.leaf(start + offset, lib));
                        }
                    }
                }
                Expr::apply(
                    Expr::lib_ref(name),
                    args.into_iter().map(|a| a.expect("every parameter bound")),
                )
            }
        }
    }

    fn leaf(&self, pos: usize, lib: &Library) -> Expr {
        match self.toks[pos] {
            Tok::Sym(s) => Expr::prim(lib.base().name(s)),
            Tok::Var(k) => Expr::Var(k),
        }
    }
}

pub(crate) fn sym_tokens(ids: &[u32]) -> Vec<Tok> {
    ids.iter().map(|&s| Tok::Sym(s)).collect()
}

/// Rewrites `expr` into the cheapest term over `library` with the same
/// expansion.
pub fn rewrite(expr: &Expr, library: &Library, model: &CostModel) -> Result<Expr, LangError> {
    let ids = semantics::expand_ids(expr, library)?;
    if ids.is_empty() {
        return Ok(expr.clone());
    }
    let toks = sym_tokens(&ids);
    let derivation = derive(&toks, Base::ListHead, library, None, model);
    let rewritten = derivation.to_expr(library);
    if cost(&rewritten, model) <= cost(expr, model) {
        Ok(rewritten)
    } else {
        Ok(expr.clone())
    }
}

/// Cheapest body over `library` denoting the same template as `body`, an
/// abstraction body with `arity` parameters.
pub fn rewrite_body(
    body: &Expr,
    arity: usize,
    library: &Library,
    model: &CostModel,
) -> Result<Expr, LangError> {
    let template = semantics::compile(body, arity, library).map_err(|reason| {
        LangError::BadAbstraction {
            name: body.to_string(),
            reason,
        }
    })?;
    let (toks, base) = template_tokens(&template);
    Ok(derive(&toks, base, library, None, model).to_expr(library))
}

/// Tokens and base for deriving the body of `template`.
pub(crate) fn template_tokens(template: &Template) -> (Vec<Tok>, Base) {
    let toks = template
        .items()
        .iter()
        .map(|item| match *item {
            Item::Fixed(s) => Tok::Sym(s),
            Item::Param(p) => Tok::Var(p),
        })
        .collect();
    let base = match template.head() {
        Some(h) => Base::HeadVar(h),
        None => Base::ListHead,
    };
    (toks, base)
}

/// Cheapest program for a stroke sequence, with its cost.
pub fn rewrite_sequence(ids: &[u32], library: &Library, model: &CostModel) -> (Expr, u64) {
    let toks = sym_tokens(ids);
    let derivation = derive(&toks, Base::ListHead, library, None, model);
    (derivation.to_expr(library), derivation.cost())
}
