use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use super::{GoldStandard, Span, SpanTree};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreOptions {
    /// Score the whole-glyph span like any other bracket.
    pub include_full_span: bool,
}

/// Micro-averaged bracket scores, all in percent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
    pub exact_match: f64,
    /// Gold glyphs scored, including those without a prediction.
    pub glyphs: usize,
    /// Gold glyphs with no prediction, scored with zero recall.
    pub missing_predictions: usize,
    /// Predicted glyphs absent from gold, ignored.
    pub extra_predictions: usize,
}

/// Scores predicted span trees against gold over the gold glyph set.
pub fn score(predicted: &BTreeMap<String, SpanTree>, gold: &GoldStandard, options: ScoreOptions) -> Result<ScoreReport> {
    let shared = gold.keys().filter(|id| predicted.contains_key(*id)).count();
    if shared == 0 {
        return Err(Error::Invalid("no glyph is both predicted and in the gold standard".into()));
    }
    let scored = |t: &SpanTree| -> HashSet<Span> {
        if options.include_full_span {
            t.spans().iter().copied().collect()
        } else {
            t.non_trivial().collect()
        }
    };
    let (mut hits, mut n_pred, mut n_gold, mut exact) = (0usize, 0usize, 0usize, 0usize);
    for (id, g) in gold {
        let gs = scored(g);
        n_gold += gs.len();
        let Some(p) = predicted.get(id) else {
            continue;
        };
        if p.n_strokes() != g.n_strokes() {
            return Err(Error::Invalid(format!(
                "glyph `{id}`: predicted tree covers {} strokes, gold covers {}",
                p.n_strokes(),
                g.n_strokes()
            )));
        }
        let ps = scored(p);
        n_pred += ps.len();
        hits += ps.intersection(&gs).count();
        if p.non_trivial().eq(g.non_trivial()) {
            exact += 1;
        }
    }
    let precision = percent(hits, n_pred, n_gold == 0);
    let recall = percent(hits, n_gold, n_pred == 0);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(ScoreReport {
        f1,
        precision,
        recall,
        exact_match: 100.0 * exact as f64 / gold.len() as f64,
        glyphs: gold.len(),
        missing_predictions: gold.len() - shared,
        extra_predictions: predicted.len() - shared,
    })
}

/// `100 · num / den`; an empty denominator scores 100 only when the other
/// side is empty too.
fn percent(num: usize, den: usize, other_empty: bool) -> f64 {
    if den == 0 {
        if other_empty {
            100.0
        } else {
            0.0
        }
    } else {
        100.0 * num as f64 / den as f64
    }
}
