//! Best-first search for the abstraction with the largest exact utility.
//!
//! Every abstraction denotes a template: an optional head parameter followed
//! by fixed strokes and element parameters. Templates are grown left to
//! right from the token sequences of the corpus. A node carries the
//! positions where its items occur and an upper bound on the utility of any
//! template that extends it, so whole subtrees are discarded once the bound
//! drops below the best exact utility found so far.
//!
//! Candidates are ranked by exact utility (a full optimal rewrite of every
//! program the template occurs in), then smaller arity, more uses, and the
//! lexicographically smallest printed body. Nothing with a bound equal to
//! the incumbent is pruned, so the winner is the same for any evaluation
//! order and any number of worker threads.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap, HashMap};

use rayon::prelude::*;

use super::{Pattern, Slot};
use crate::lang::rewrite::{derive, derive_with, template_tokens, Base, FnRef, Matches};
use crate::lang::semantics::{Item, Template, Tok};
use crate::lang::{CostModel, Expr, Library};

const BATCH: usize = 64;

/// Token sequences, their current optimal prefix costs and library matches.
pub(crate) struct Space<'a> {
    pub lib: &'a Library,
    pub model: CostModel,
    pub toks: &'a [Vec<Tok>],
    pub prefix: &'a [Vec<u64>],
    pub matches: &'a [Matches],
    pub cache: &'a SavingsCache,
}

/// Corpus-side savings of candidates evaluated in earlier rounds. An entry
/// stays valid until one of the programs the pattern occurs in changes.
#[derive(Default)]
pub(crate) struct SavingsCache {
    round: usize,
    changed: Vec<usize>,
    entries: HashMap<Pattern, Saved>,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Saved {
    round: usize,
    saved: i64,
    uses: usize,
}

impl SavingsCache {
    pub fn new(programs: usize) -> Self {
        Self {
            round: 0,
            changed: vec![0; programs],
            entries: HashMap::new(),
        }
    }

    /// Starts a new round after `programs` were rewritten.
    pub fn advance(&mut self, programs: &[u32]) {
        self.round += 1;
        for &p in programs {
            self.changed[p as usize] = self.round;
        }
    }

    fn get(&self, pattern: &Pattern, programs: &[u32]) -> Option<Saved> {
        let hit = self.entries.get(pattern)?;
        programs
            .iter()
            .all(|&p| self.changed[p as usize] <= hit.round)
            .then_some(*hit)
    }
}

/// A scored candidate.
#[derive(Debug, Clone)]
pub(crate) struct Found {
    pub pattern: Pattern,
    pub template: Template,
    pub body: Expr,
    pub printed: String,
    pub utility: i64,
    pub uses: usize,
    /// Programs the template occurs in.
    pub programs: Vec<u32>,
}

impl Found {
    fn rank(&self, other: &Found) -> Ordering {
        other
            .utility
            .cmp(&self.utility)
            .then(self.template.arity().cmp(&other.template.arity()))
            .then(other.uses.cmp(&self.uses))
            .then_with(|| self.printed.cmp(&other.printed))
    }
}

struct Node {
    pattern: Pattern,
    holes: usize,
    /// (program, start) pairs, sorted.
    occ: Vec<(u32, u32)>,
    bound: i64,
}

struct HeapEntry {
    bound: i64,
    seq: Reverse<u64>,
    node: Node,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        (self.bound, self.seq) == (other.bound, other.seq)
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.bound, self.seq).cmp(&(other.bound, other.seq))
    }
}

struct Expansion {
    found: Option<Found>,
    fresh: Option<(Pattern, Saved)>,
    children: Vec<Node>,
}

impl Space<'_> {
    /// Best candidate, plus savings computed this round for the cache.
    pub fn best(&self, max_arity: usize) -> (Option<Found>, Vec<(Pattern, Saved)>) {
        let mut fresh = Vec::new();
        let mut heap = BinaryHeap::new();
        let mut seq = 0u64;
        let mut best: Option<Found> = None;
        let threshold = |best: &Option<Found>| best.as_ref().map_or(1, |b| b.utility.max(1));
        let mut expanded = 0usize;

        for node in self.roots(max_arity) {
            heap.push(HeapEntry {
                bound: node.bound,
                seq: Reverse(seq),
                node,
            });
            seq += 1;
        }

        loop {
            let floor = threshold(&best);
            let mut batch = Vec::with_capacity(BATCH);
            while batch.len() < BATCH {
                match heap.peek() {
                    Some(top) if top.bound >= floor => {
                        batch.push(heap.pop().expect("peeked").node);
                    }
                    _ => break,
                }
            }
            if batch.is_empty() {
                break;
            }
            let results: Vec<Expansion> = batch
                .par_iter()
                .map(|node| self.expand(node, max_arity, floor))
                .collect();
            expanded += results.len();
            for result in results {
                fresh.extend(result.fresh);
                if let Some(found) = result.found {
                    let better = match &best {
                        None => true,
                        Some(b) => found.rank(b) == Ordering::Less,
                    };
                    if better {
                        best = Some(found);
                    }
                }
                let floor = threshold(&best);
                for child in result.children {
                    if child.bound >= floor {
                        heap.push(HeapEntry {
                            bound: child.bound,
                            seq: Reverse(seq),
                            node: child,
                        });
                        seq += 1;
                    }
                }
            }
        }
        log::trace!(
            "search expanded {expanded} nodes, {} exact evaluations",
            fresh.len()
        );
        (best, fresh)
    }

    fn roots(&self, max_arity: usize) -> Vec<Node> {
        let mut anchored: BTreeMap<u32, Vec<(u32, u32)>> = BTreeMap::new();
        let mut headed: BTreeMap<u32, Vec<(u32, u32)>> = BTreeMap::new();
        let mut all_starts = Vec::new();
        for (p, toks) in self.toks.iter().enumerate() {
            let p = p as u32;
            all_starts.push((p, 0));
            for (i, tok) in toks.iter().enumerate() {
                let Tok::Sym(s) = *tok else { continue };
                if i == 0 {
                    anchored.entry(s).or_default().push((p, 0));
                }
                if max_arity >= 1 {
                    headed.entry(s).or_default().push((p, i as u32));
                }
            }
        }
        let mut roots = Vec::new();
        for (s, occ) in anchored {
            roots.push((Pattern::anchored(vec![Slot::Stroke(s)]), occ));
        }
        if max_arity >= 1 {
            roots.push((Pattern::anchored(vec![Slot::Hole]), all_starts));
        }
        for (s, occ) in headed {
            roots.push((Pattern::headed(vec![Slot::Stroke(s)]), occ));
        }
        roots
            .into_par_iter()
            .filter_map(|(pattern, occ)| self.node(pattern, occ, 1))
            .collect()
    }

    /// A node for `pattern`, unless it can not reach `floor`.
    fn node(&self, pattern: Pattern, occ: Vec<(u32, u32)>, floor: i64) -> Option<Node> {
        let holes = pattern.arity();
        let mut node = Node {
            pattern,
            holes,
            occ,
            bound: 0,
        };
        if !self.enough_uses(&node) {
            return None;
        }
        node.bound = self.subtree_bound(&node);
        (node.bound >= floor).then_some(node)
    }

    /// Any template used once costs more than it saves, so a node needs at
    /// least two non-overlapping occurrences.
    fn enough_uses(&self, node: &Node) -> bool {
        let len = node.pattern.slots.len() as u32;
        let mut count = 0;
        for_each_program(&node.occ, |_, starts| {
            count += non_overlapping(starts, len);
        });
        count >= 2
    }

    fn cost(&self, p: u32) -> i64 {
        *self.prefix[p as usize].last().expect("prefix costs") as i64
    }

    /// Upper bound on the utility of every extension of `node`.
    fn subtree_bound(&self, node: &Node) -> i64 {
        let mut total = 0i64;
        for_each_program(&node.occ, |p, starts| {
            total += self.saving_cap(node, p, starts);
        });
        // A body that pays off has at least two leaves.
        total - (2 * self.model.terminal + self.model.application) as i64
    }

    /// Most that any extension of `node` can save in program `p`.
    ///
    /// An extension is only called where `node` occurs and costs at least
    /// as much per call. Letting such a call cover everything up to the end
    /// of the program, a rewrite costs at least the cheapest prefix before
    /// an occurrence plus one call.
    ///
    /// Independently, replacing a call by plain appends of the tokens it
    /// covers gives a term over the old library, so one use saves at most
    /// `fixed items - 1` leaves (`fixed items` when anchored); uses in a
    /// program are disjoint and lie after the first occurrence.
    fn saving_cap(&self, node: &Node, p: u32, starts: &[(u32, u32)]) -> i64 {
        let t = self.model.terminal as i64;
        let a = self.model.application as i64;
        let elems = node.pattern.element_holes() as i64;
        let call = t + node.pattern.arity() as i64 * a + elems * t;
        let prefix = &self.prefix[p as usize];
        let current = self.cost(p);
        let len = self.toks[p as usize].len() as i64;
        let (leaves, floor) = if node.pattern.head {
            let cheapest = starts
                .iter()
                .map(|&(_, s)| prefix[s as usize])
                .min()
                .expect("non-empty run") as i64;
            (len - starts[0].1 as i64 - elems - 1, cheapest + call)
        } else {
            (len - elems, call)
        };
        (current - t).min((t + a) * leaves).min(current - floor).max(0)
    }

    fn expand(&self, node: &Node, max_arity: usize, floor: i64) -> Expansion {
        let (found, fresh) = if matches!(node.pattern.slots.last(), Some(Slot::Stroke(_))) {
            self.evaluate(node, floor)
        } else {
            (None, None)
        };

        let len = node.pattern.slots.len() as u32;
        let mut by_next: BTreeMap<u32, Vec<(u32, u32)>> = BTreeMap::new();
        let mut any_next = Vec::new();
        for &(p, start) in &node.occ {
            let toks = &self.toks[p as usize];
            let Some(tok) = toks.get((start + len) as usize) else {
                continue;
            };
            if let Tok::Sym(s) = *tok {
                by_next.entry(s).or_default().push((p, start));
            }
            any_next.push((p, start));
        }
        let mut children: Vec<Node> = by_next
            .into_iter()
            .filter_map(|(s, occ)| self.node(node.pattern.extended(Slot::Stroke(s)), occ, floor))
            .collect();
        if node.holes < max_arity && !any_next.is_empty() {
            children.extend(self.node(node.pattern.extended(Slot::Hole), any_next, floor));
        }
        Expansion {
            found,
            fresh,
            children,
        }
    }

    fn evaluate(&self, node: &Node, floor: i64) -> (Option<Found>, Option<(Pattern, Saved)>) {
        let leaf = (self.model.terminal + self.model.application) as i64;
        let template = node.pattern.template();
        let (body_toks, base) = template_tokens(&template);
        let body_derivation = derive(&body_toks, base, self.lib, None, &self.model);
        let body_cost = body_derivation.cost() as i64;

        // Per use, the node itself saves at most `fixed - 1` leaves
        // (`fixed` when anchored).
        let fixed = node.pattern.fixed() as i64;
        let per_use = if node.pattern.head { fixed - 1 } else { fixed };
        let len = node.pattern.slots.len() as u32;
        let mut estimate = -body_cost;
        let mut programs = Vec::new();
        for_each_program(&node.occ, |p, starts| {
            let uses = non_overlapping(starts, len) as i64;
            estimate += self.saving_cap(node, p, starts).min(leaf * uses * per_use);
            programs.push(p);
        });
        if estimate < floor {
            return (None, None);
        }

        let (saved, fresh) = match self.cache.get(&node.pattern, &programs) {
            Some(hit) => (hit, None),
            None => {
                let mut saved = 0i64;
                let mut uses = 0usize;
                for &p in &programs {
                    let d = derive_with(
                        &self.toks[p as usize],
                        Base::ListHead,
                        self.lib,
                        &self.matches[p as usize],
                        Some(&template),
                        &self.model,
                    );
                    saved += self.cost(p) - d.cost() as i64;
                    uses += d.uses(FnRef::Extra);
                }
                let entry = Saved {
                    round: self.cache.round,
                    saved,
                    uses,
                };
                (entry, Some((node.pattern.clone(), entry)))
            }
        };
        let utility = saved.saved - body_cost;
        if utility < floor {
            return (None, fresh);
        }
        let body = renumber(&body_derivation.to_expr(self.lib));
        let found = Found {
            pattern: node.pattern.clone(),
            template,
            printed: body.to_string(),
            body,
            utility,
            uses: saved.uses,
            programs,
        };
        (Some(found), fresh)
    }
}

impl SavingsCache {
    pub fn insert(&mut self, fresh: Vec<(Pattern, Saved)>) {
        self.entries.extend(fresh);
    }
}

/// Calls `f(program, occurrences)` for each run of one program in `occ`.
fn for_each_program(occ: &[(u32, u32)], mut f: impl FnMut(u32, &[(u32, u32)])) {
    let mut i = 0;
    while i < occ.len() {
        let p = occ[i].0;
        let mut j = i + 1;
        while j < occ.len() && occ[j].0 == p {
            j += 1;
        }
        f(p, &occ[i..j]);
        i = j;
    }
}

/// Leftmost-first count of disjoint occurrences of length `len`.
fn non_overlapping(starts: &[(u32, u32)], len: u32) -> usize {
    let mut count = 0;
    let mut free_from = 0;
    for &(_, s) in starts {
        if s >= free_from {
            count += 1;
            free_from = s + len;
        }
    }
    count
}

/// Renames variables to `#0, #1, ...` in order of first appearance.
pub(crate) fn renumber(expr: &Expr) -> Expr {
    let mut order = Vec::new();
    expr.visit(&mut |e| {
        if let Expr::Var(i) = e {
            if !order.contains(i) {
                order.push(*i);
            }
        }
    });
    if order.iter().enumerate().all(|(k, v)| k == *v) {
        return expr.clone();
    }
    fn go(e: &Expr, order: &[usize]) -> Expr {
        match e {
            Expr::Var(i) => Expr::Var(order.iter().position(|v| v == i).expect("seen")),
            Expr::App(f, x) => Expr::app(go(f, order), go(x, order)),
            other => other.clone(),
        }
    }
    go(expr, &order)
}

impl Pattern {
    fn extended(&self, slot: Slot) -> Pattern {
        let mut slots = self.slots.clone();
        slots.push(slot);
        Pattern {
            head: self.head,
            slots,
        }
    }

    /// Head parameter is `#0` when present; element holes follow in order.
    pub(crate) fn template(&self) -> Template {
        let mut next = usize::from(self.head);
        let items = self
            .slots
            .iter()
            .map(|slot| match slot {
                Slot::Stroke(s) => Item::Fixed(*s),
                Slot::Hole => {
                    next += 1;
                    Item::Param(next - 1)
                }
            })
            .collect();
        Template::new(self.head.then_some(0), items, next)
    }
}
