use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::lang::{Corpus, Expr, Library};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Usage {
    pub uses: usize,
    /// Share of learned functions used at most as often as this one, in %.
    pub percentile: f64,
}

/// Number of times each learned function is invoked when the rewritten
/// corpus is evaluated, in definition order. A reference inside a body
/// counts once per invocation of the enclosing function.
pub fn usage_counts(rewritten: &Corpus, library: &Library) -> IndexMap<String, Usage> {
    let n = library.len();
    let mut uses = vec![0usize; n];
    let refs = |e: &Expr, f: &mut dyn FnMut(usize)| {
        e.visit(&mut |node| {
            if let Expr::LibRef(name) = node {
                if let Some(i) = library.function_index(name) {
                    f(i);
                }
            }
        });
    };
    for (_, program) in rewritten.iter() {
        refs(program, &mut |i| uses[i] += 1);
    }
    // Bodies only refer to earlier functions, so totals settle back to front.
    for g in (0..n).rev() {
        let times = uses[g];
        refs(&library.function(g).body, &mut |i| uses[i] += times);
    }
    library
        .learned()
        .iter()
        .zip(&uses)
        .map(|(abs, &u)| {
            let at_most = uses.iter().filter(|&&v| v <= u).count();
            let usage = Usage {
                uses: u,
                percentile: 100.0 * at_most as f64 / n as f64,
            };
            (abs.name.clone(), usage)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HierarchyStats {
    pub learned_count: usize,
    pub hierarchical_count: usize,
    pub hierarchical_fraction: f64,
    /// Longest chain of function references down to base strokes; a
    /// function whose body uses only strokes has depth 1.
    pub max_depth: usize,
}

pub fn hierarchy_stats(library: &Library) -> HierarchyStats {
    let mut depth = Vec::with_capacity(library.len());
    let mut hierarchical = 0;
    for abs in library.learned() {
        let mut deepest = 0;
        abs.body.visit(&mut |node| {
            if let Expr::LibRef(name) = node {
                if let Some(i) = library.function_index(name) {
                    deepest = deepest.max(depth[i]);
                }
            }
        });
        if deepest > 0 {
            hierarchical += 1;
        }
        depth.push(deepest + 1);
    }
    let learned_count = library.len();
    HierarchyStats {
        learned_count,
        hierarchical_count: hierarchical,
        hierarchical_fraction: if learned_count == 0 {
            0.0
        } else {
            hierarchical as f64 / learned_count as f64
        },
        max_depth: depth.into_iter().max().unwrap_or(0),
    }
}
