use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{GoldStandard, Span, SpanTree};
use crate::error::{Error, Result};

/// Binary bracketings used as reference points for span scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineKind {
    Balanced,
    Random,
    Left,
    Right,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 4] = [Self::Balanced, Self::Random, Self::Left, Self::Right];
}

impl FromStr for BaselineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "balanced" => Ok(Self::Balanced),
            "random" => Ok(Self::Random),
            "left" => Ok(Self::Left),
            "right" => Ok(Self::Right),
            _ => Err(Error::Invalid(format!(
                "unknown baseline `{s}` (expected balanced, random, left or right)"
            ))),
        }
    }
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Balanced => "balanced",
            Self::Random => "random",
            Self::Left => "left",
            Self::Right => "right",
        })
    }
}

/// Span tree of a binary bracketing over `n_strokes` leaves. Single-stroke
/// leaves are not spans.
pub fn baseline_tree(glyph: &str, n_strokes: usize, kind: BaselineKind, seed: u64) -> Result<SpanTree> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    tree_with(glyph, n_strokes, kind, &mut rng)
}

/// One baseline tree per gold glyph, drawing random trees from a single
/// stream in glyph-id order.
pub fn baseline_trees(gold: &GoldStandard, kind: BaselineKind, seed: u64) -> Result<BTreeMap<String, SpanTree>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    gold.iter()
        .map(|(id, g)| Ok((id.clone(), tree_with(id, g.n_strokes(), kind, &mut rng)?)))
        .collect()
}

fn tree_with(glyph: &str, n: usize, kind: BaselineKind, rng: &mut impl Rng) -> Result<SpanTree> {
    if n == 0 {
        return Err(Error::Invalid(format!("glyph `{glyph}` has no strokes")));
    }
    let mut spans = Vec::new();
    match kind {
        BaselineKind::Left => spans.extend((2..=n).map(|e| (0, e))),
        BaselineKind::Right => spans.extend((0..n - 1).map(|s| (s, n))),
        BaselineKind::Balanced => split(0, n, &mut spans, &mut |_, len| len / 2),
        BaselineKind::Random => {
            let ln_catalan = ln_catalan_table(n);
            split(0, n, &mut spans, &mut |_, len| random_split(len, &ln_catalan, rng))
        }
    }
    SpanTree::new(glyph, n, spans)
}

/// Recursively brackets `[start, start + len)`; `choose` gives the size of
/// the left part.
fn split(start: usize, len: usize, spans: &mut Vec<Span>, choose: &mut dyn FnMut(usize, usize) -> usize) {
    if len < 2 {
        return;
    }
    spans.push((start, start + len));
    let left = choose(start, len);
    split(start, left, spans, choose);
    split(start + left, len - left, spans, choose);
}

/// Left size `k` of a uniformly random binary tree with `len` leaves: there
/// are Cat(k-1)·Cat(len-k-1) trees with that root split.
fn random_split(len: usize, ln_catalan: &[f64], rng: &mut impl Rng) -> usize {
    let ln_w: Vec<f64> = (1..len).map(|k| ln_catalan[k - 1] + ln_catalan[len - k - 1]).collect();
    let max = ln_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights = ln_w.iter().map(|w| (w - max).exp());
    let dist = WeightedIndex::new(weights).expect("split weights are positive");
    1 + dist.sample(rng)
}

/// ln Cat(m) for m < n, via ln Cat(m) = ln (2m)! − ln (m+1)! − ln m!.
fn ln_catalan_table(n: usize) -> Vec<f64> {
    let mut ln_fact = vec![0.0f64; 2 * n + 2];
    for i in 1..ln_fact.len() {
        ln_fact[i] = ln_fact[i - 1] + (i as f64).ln();
    }
    (0..n).map(|m| ln_fact[2 * m] - ln_fact[m + 1] - ln_fact[m]).collect()
}

#[cfg(test)]
mod tests {
    use std::collections::HashMap;

    use super::*;

    fn spans(n: usize, kind: BaselineKind, seed: u64) -> Vec<Span> {
        let mut s = baseline_tree("g", n, kind, seed).unwrap().spans().to_vec();
        s.sort();
        s
    }

    #[test]
    fn fixed_bracketings_of_four_leaves() {
        assert_eq!(spans(4, BaselineKind::Right, 0), vec![(0, 4), (1, 4), (2, 4)]);
        assert_eq!(spans(4, BaselineKind::Left, 0), vec![(0, 2), (0, 3), (0, 4)]);
        assert_eq!(spans(4, BaselineKind::Balanced, 0), vec![(0, 2), (0, 4), (2, 4)]);
        assert_eq!(spans(1, BaselineKind::Random, 0), vec![(0, 1)]);
    }

    #[test]
    fn random_tree_is_a_full_binary_bracketing() {
        for seed in 0..20 {
            let t = baseline_tree("g", 9, BaselineKind::Random, seed).unwrap();
            assert_eq!(t.spans().len(), 8);
        }
        assert_eq!(spans(7, BaselineKind::Random, 5), spans(7, BaselineKind::Random, 5));
    }

    #[test]
    fn ln_catalan_matches_small_values() {
        let expected = [1.0, 1.0, 2.0, 5.0, 14.0, 42.0, 132.0];
        for (ln_c, c) in ln_catalan_table(7).iter().zip(expected) {
            assert!((ln_c.exp() - c).abs() < 1e-9 * c);
        }
    }

    #[test]
    fn random_sampler_is_uniform_over_bracketings() {
        let catalan = [1usize, 1, 1, 2, 5, 14, 42];
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for (n, &shapes) in catalan.iter().enumerate().skip(2) {
            let draws = 100_000;
            let mut counts: HashMap<Vec<Span>, usize> = HashMap::new();
            for _ in 0..draws {
                let mut s = tree_with("g", n, BaselineKind::Random, &mut rng).unwrap().spans().to_vec();
                s.sort();
                *counts.entry(s).or_default() += 1;
            }
            assert_eq!(counts.len(), shapes);
            let tv: f64 = counts
                .values()
                .map(|&c| (c as f64 / draws as f64 - 1.0 / shapes as f64).abs())
                .sum::<f64>()
                / 2.0;
            assert!(tv < 0.02, "n = {n}: total variation {tv}");
        }
    }

    #[test]
    fn kind_names_parse() {
        for kind in BaselineKind::ALL {
            assert_eq!(kind.to_string().parse::<BaselineKind>().unwrap(), kind);
        }
        assert!("zigzag".parse::<BaselineKind>().is_err());
    }
}
