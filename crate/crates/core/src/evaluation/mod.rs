//! Span-tree evaluation of learned decompositions.
//!
//! A rewritten glyph program induces a set of stroke intervals, one per
//! learned-function occurrence. These are compared against gold component
//! trees with constituency-style bracket scores, against simple baseline
//! bracketings, and against expert radical inventories.

mod baseline;
mod radicals;
mod score;
mod spans;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use baseline::{baseline_tree, baseline_trees, BaselineKind};
pub use radicals::{align_radicals, NearMiss, Radical, RadicalAlignment, RadicalInventory};
pub use score::{score, ScoreOptions, ScoreReport};
pub use spans::{extract_spans, extract_all, SpanMode, SpanOptions};

/// Half-open stroke interval `[start, end)`.
pub type Span = (usize, usize);

/// Gold decompositions keyed by glyph id.
pub type GoldStandard = BTreeMap<String, SpanTree>;

/// A laminar family of stroke intervals over one glyph, always containing
/// the full span.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SpanRecord", into = "SpanRecord")]
pub struct SpanTree {
    glyph: String,
    n_strokes: usize,
    spans: Vec<Span>,
}

#[derive(Serialize, Deserialize)]
struct SpanRecord {
    id: String,
    n: usize,
    spans: Vec<[usize; 2]>,
}

impl SpanTree {
    /// Validates bounds and laminarity; the full span is added if missing.
    pub fn new(glyph: impl Into<String>, n_strokes: usize, spans: impl IntoIterator<Item = Span>) -> Result<Self> {
        let glyph = glyph.into();
        if n_strokes == 0 {
            return Err(Error::Invalid(format!("glyph `{glyph}` has no strokes")));
        }
        let mut all: Vec<Span> = spans.into_iter().collect();
        for &(s, e) in &all {
            if s >= e || e > n_strokes {
                return Err(Error::Invalid(format!(
                    "glyph `{glyph}`: span [{s}, {e}) is outside [0, {n_strokes})"
                )));
            }
        }
        all.push((0, n_strokes));
        all.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)));
        all.dedup();
        if let Some((a, b)) = crossing_pair(&all) {
            return Err(Error::Invalid(format!(
                "glyph `{glyph}`: spans [{}, {}) and [{}, {}) cross",
                a.0, a.1, b.0, b.1
            )));
        }
        Ok(Self {
            glyph,
            n_strokes,
            spans: all,
        })
    }

    pub fn glyph(&self) -> &str {
        &self.glyph
    }

    pub fn n_strokes(&self) -> usize {
        self.n_strokes
    }

    /// All spans ordered by start, outer spans first.
    pub fn spans(&self) -> &[Span] {
        &self.spans
    }

    pub fn full_span(&self) -> Span {
        (0, self.n_strokes)
    }

    /// Spans other than the full span.
    pub fn non_trivial(&self) -> impl Iterator<Item = Span> + '_ {
        let full = self.full_span();
        self.spans.iter().copied().filter(move |s| *s != full)
    }

    pub fn contains(&self, span: Span) -> bool {
        self.spans.binary_search_by(|a| a.0.cmp(&span.0).then(span.1.cmp(&a.1))).is_ok()
    }
}

impl fmt::Display for SpanTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {{", self.glyph)?;
        for (i, (s, e)) in self.spans.iter().enumerate() {
            let sep = if i == 0 { "" } else { ", " };
            write!(f, "{sep}[{s},{e})")?;
        }
        write!(f, "}}")
    }
}

impl TryFrom<SpanRecord> for SpanTree {
    type Error = Error;

    fn try_from(r: SpanRecord) -> Result<Self> {
        SpanTree::new(r.id, r.n, r.spans.into_iter().map(|[s, e]| (s, e)))
    }
}

impl From<SpanTree> for SpanRecord {
    fn from(t: SpanTree) -> Self {
        SpanRecord {
            id: t.glyph,
            n: t.n_strokes,
            spans: t.spans.into_iter().map(|(s, e)| [s, e]).collect(),
        }
    }
}

/// First pair of crossing spans in a list sorted by start, outer first.
fn crossing_pair(sorted: &[Span]) -> Option<(Span, Span)> {
    let mut open: Vec<Span> = Vec::new();
    for &span in sorted {
        while open.last().is_some_and(|top| top.1 <= span.0) {
            open.pop();
        }
        if let Some(&top) = open.last() {
            if span.1 > top.1 {
                return Some((top, span));
            }
        }
        open.push(span);
    }
    None
}

pub(crate) fn nested_or_disjoint(a: Span, b: Span) -> bool {
    a.1 <= b.0 || b.1 <= a.0 || (a.0 <= b.0 && b.1 <= a.1) || (b.0 <= a.0 && a.1 <= b.1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn span_tree_adds_full_span_and_rejects_crossings() {
        let t = SpanTree::new("g", 4, [(0, 2), (2, 4)]).unwrap();
        assert_eq!(t.spans(), &[(0, 4), (0, 2), (2, 4)]);
        assert_eq!(t.non_trivial().collect::<Vec<_>>(), vec![(0, 2), (2, 4)]);
        assert!(t.contains((2, 4)) && !t.contains((1, 3)));
        assert!(SpanTree::new("g", 4, [(0, 2), (1, 3)]).is_err());
        assert!(SpanTree::new("g", 4, [(0, 5)]).is_err());
        assert!(SpanTree::new("g", 4, [(2, 2)]).is_err());
        assert!(SpanTree::new("g", 0, []).is_err());
    }

    #[test]
    fn span_tree_json_round_trip() {
        let t: SpanTree = serde_json::from_str(r#"{"id":"颢","n":6,"spans":[[0,4],[4,6],[0,2]]}"#).unwrap();
        assert_eq!(t.spans(), &[(0, 6), (0, 4), (0, 2), (4, 6)]);
        let back: SpanTree = serde_json::from_str(&serde_json::to_string(&t).unwrap()).unwrap();
        assert_eq!(back, t);
        assert!(serde_json::from_str::<SpanTree>(r#"{"id":"x","n":3,"spans":[[0,2],[1,3]]}"#).is_err());
    }
}
