use std::time::Instant;

use glyphlearn::{learn_library, CostModel, LearnConfig};

fn main() {
    env_logger::init();
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1000);
    let corpus = glyphlearn_bench::component_corpus(1, n);
    let start = Instant::now();
    let out = learn_library(&corpus, &CostModel::default(), &LearnConfig::default()).unwrap();
    let last = out.trace.records.last().map(|r| r.corpus_dl).unwrap_or(out.trace.initial_dl);
    println!(
        "{n} glyphs: {} functions, ratio {:.2}, {:.1?}",
        out.library.len(),
        out.trace.initial_dl as f64 / last as f64,
        start.elapsed()
    );
}
