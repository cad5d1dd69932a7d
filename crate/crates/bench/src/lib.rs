//! Synthetic inputs for the benchmarks.

use glyphlearn::{Corpus, PrimitiveAlphabet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A corpus with shared structure: a pool of components is built from
/// strokes and smaller components, and each glyph strings a few of them
/// together with some loose strokes.
pub fn component_corpus(seed: u64, glyphs: usize) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let alphabet = PrimitiveAlphabet::standard();
    let n = alphabet.len();
    let mut parts: Vec<Vec<String>> = Vec::new();
    for i in 0..(glyphs / 8).max(8) {
        let mut part = Vec::new();
        if i > 4 && rng.random_bool(0.5) {
            part.extend(parts[rng.random_range(0..i)].iter().cloned());
        }
        for _ in 0..rng.random_range(2..=4) {
            part.push(alphabet.name(rng.random_range(0..n) as u32).to_string());
        }
        parts.push(part);
    }
    let seqs = (0..glyphs).map(|g| {
        let mut seq = Vec::new();
        for _ in 0..rng.random_range(1..=3) {
            if rng.random_bool(0.3) {
                seq.push(alphabet.name(rng.random_range(0..n) as u32).to_string());
            }
            seq.extend(parts[rng.random_range(0..parts.len())].iter().cloned());
        }
        (format!("g{g}"), seq)
    });
    Corpus::from_sequences(alphabet.clone(), seqs).expect("generated corpus is valid")
}

/// Points sampled along a random cubic Bézier curve.
pub fn cubic_samples(seed: u64, points: usize) -> Vec<[f64; 2]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ctrl: Vec<[f64; 2]> = (0..4)
        .map(|_| [rng.random::<f64>(), rng.random::<f64>()])
        .collect();
    (0..points)
        .map(|i| {
            let t = i as f64 / (points - 1) as f64;
            let u = 1.0 - t;
            let w = [u * u * u, 3.0 * u * u * t, 3.0 * u * t * t, t * t * t];
            let mut p = [0.0; 2];
            for (wk, c) in w.iter().zip(&ctrl) {
                p[0] += wk * c[0];
                p[1] += wk * c[1];
            }
            p
        })
        .collect()
}
