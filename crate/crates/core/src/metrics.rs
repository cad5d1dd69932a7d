//! Writing-system complexity reports and comparisons across scripts.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lang::{library_dl, Corpus, CostModel, Expr, Library};
use crate::learner::{learn_library, LearnConfig, LearnOutcome};

/// Description-length summary of one script under its learned library.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityReport {
    pub corpus_id: String,
    pub glyphs: usize,
    /// Corpus DL of the literal programs.
    pub dl_base: u64,
    /// Corpus DL of the rewritten programs.
    pub dl_star: u64,
    pub library_dl: u64,
    /// `dl_star + library_dl`, the complexity objective.
    pub c_of_w: u64,
    /// Base strokes, the `list` constructor and learned functions.
    pub library_size: usize,
    pub learned_count: usize,
    /// `dl_base / dl_star`.
    pub compression_ratio: f64,
    /// `dl_base / c_of_w`, charging the library as well.
    pub objective_compression_ratio: f64,
    /// Mean over glyphs of literal leaf count over rewritten leaf count.
    pub per_char_function_ratio: f64,
    /// As above, with `list` heads not counted as functions.
    pub per_char_function_ratio_without_list: f64,
}

/// Builds the report for `corpus` rewritten under `learned`.
pub fn complexity_report(
    corpus_id: &str,
    corpus: &Corpus,
    learned: &Library,
    rewritten: &Corpus,
    model: &CostModel,
) -> Result<ComplexityReport> {
    let ids: BTreeSet<&str> = corpus.ids().collect();
    let rewritten_ids: BTreeSet<&str> = rewritten.ids().collect();
    if ids != rewritten_ids {
        let missing = ids.symmetric_difference(&rewritten_ids).next().copied().unwrap_or_default();
        return Err(Error::Invalid(format!(
            "corpus and rewritten corpus hold different glyphs (e.g. `{missing}`)"
        )));
    }
    if ids.is_empty() {
        return Err(Error::Invalid("corpus is empty".into()));
    }
    let base = Library::new(corpus.alphabet().clone());
    let dl_base = corpus.description_length(model);
    let dl_star = rewritten.description_length(model);
    let lib_dl = library_dl(learned, model);

    let (mut ratio, mut ratio_without_list) = (0.0, 0.0);
    // Sorted ids keep the floating-point sums independent of entry order.
    for id in &ids {
        let literal = corpus.get(id).expect("id from corpus");
        let program = rewritten.get(id).expect("id from rewritten corpus");
        if crate::expand(literal, &base)? != crate::expand(program, learned)? {
            return Err(Error::Invalid(format!(
                "rewritten program for `{id}` does not expand to the original strokes"
            )));
        }
        ratio += literal.leaf_count() as f64 / program.leaf_count() as f64;
        ratio_without_list += non_list_leaves(literal) as f64 / non_list_leaves(program) as f64;
    }
    let n = ids.len() as f64;
    let c_of_w = dl_star + lib_dl;
    Ok(ComplexityReport {
        corpus_id: corpus_id.to_string(),
        glyphs: ids.len(),
        dl_base,
        dl_star,
        library_dl: lib_dl,
        c_of_w,
        library_size: corpus.alphabet().len() + 1 + learned.len(),
        learned_count: learned.len(),
        compression_ratio: dl_base as f64 / dl_star as f64,
        objective_compression_ratio: dl_base as f64 / c_of_w as f64,
        per_char_function_ratio: ratio / n,
        per_char_function_ratio_without_list: ratio_without_list / n,
    })
}

fn non_list_leaves(e: &Expr) -> usize {
    let mut heads = 0;
    e.visit(&mut |node| {
        if matches!(node, Expr::ListHead) {
            heads += 1;
        }
    });
    (e.leaf_count() - heads).max(1)
}

/// Learns a library for `corpus` and reports on the result.
pub fn learn_and_report(
    corpus_id: &str,
    corpus: &Corpus,
    model: &CostModel,
    config: &LearnConfig,
) -> Result<(ComplexityReport, LearnOutcome)> {
    let outcome = learn_library(corpus, model, config)?;
    let report = complexity_report(corpus_id, corpus, &outcome.library, &outcome.rewritten, model)?;
    Ok((report, outcome))
}

/// How an earlier script compares with a later one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioComparison {
    pub earlier: String,
    pub later: String,
    /// Earlier over later.
    pub c_of_w_ratio: f64,
    pub dl_base_ratio: f64,
    /// Earlier minus later.
    pub compression_ratio_difference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiachronicTable {
    /// One report per script, in the order given.
    pub reports: Vec<ComplexityReport>,
    /// Every pair of scripts, earlier first.
    pub comparisons: Vec<RatioComparison>,
    pub warnings: Vec<String>,
}

/// Learns each script's library independently; scripts are listed from
/// oldest to newest.
pub fn diachronic_compare(corpora: &[(String, Corpus)], model: &CostModel, config: &LearnConfig) -> Result<DiachronicTable> {
    if corpora.len() < 2 {
        return Err(Error::Invalid("a diachronic comparison needs at least two corpora".into()));
    }
    let mut warnings = Vec::new();
    let sizes: BTreeSet<usize> = corpora.iter().map(|(_, c)| c.alphabet().len()).collect();
    if sizes.len() > 1 {
        let msg = format!("stroke alphabets differ in size across scripts: {sizes:?}");
        log::warn!("{msg}");
        warnings.push(msg);
    }
    let mut reports = Vec::with_capacity(corpora.len());
    for (id, corpus) in corpora {
        let (report, outcome) = learn_and_report(id, corpus, model, config)?;
        if outcome.hit_iteration_cap {
            warnings.push(format!("`{id}` stopped at the iteration cap"));
        }
        reports.push(report);
    }
    let mut comparisons = Vec::new();
    for (i, a) in reports.iter().enumerate() {
        for b in &reports[i + 1..] {
            comparisons.push(RatioComparison {
                earlier: a.corpus_id.clone(),
                later: b.corpus_id.clone(),
                c_of_w_ratio: a.c_of_w as f64 / b.c_of_w as f64,
                dl_base_ratio: a.dl_base as f64 / b.dl_base as f64,
                compression_ratio_difference: a.compression_ratio - b.compression_ratio,
            });
        }
    }
    Ok(DiachronicTable {
        reports,
        comparisons,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairConfig {
    pub learn: LearnConfig,
    /// Smallest acceptable share of glyphs present in both corpora,
    /// relative to the larger corpus.
    pub min_alignment: f64,
}

impl Default for PairConfig {
    fn default() -> Self {
        Self {
            learn: LearnConfig::default(),
            min_alignment: 0.9,
        }
    }
}

/// Two scripts compared on their shared glyphs. Gaps are
/// `100 · (a − b) / b` percent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairReport {
    pub a: ComplexityReport,
    pub b: ComplexityReport,
    pub aligned: usize,
    pub dl_base_gap_pct: f64,
    pub dl_star_gap_pct: f64,
    pub c_of_w_gap_pct: f64,
    /// `a` ratio minus `b` ratio.
    pub compression_ratio_gap: f64,
}

pub fn script_pair_compare(
    a: (&str, &Corpus),
    b: (&str, &Corpus),
    model: &CostModel,
    config: &PairConfig,
) -> Result<PairReport> {
    let shared: BTreeSet<&str> = a.1.ids().filter(|id| b.1.contains(id)).collect();
    let larger = a.1.len().max(b.1.len());
    let alignment = if larger == 0 { 0.0 } else { shared.len() as f64 / larger as f64 };
    if shared.is_empty() || alignment < config.min_alignment {
        return Err(Error::Invalid(format!(
            "`{}` ({} glyphs) and `{}` ({} glyphs) share {} glyphs, an alignment of {:.3} below the required {}",
            a.0,
            a.1.len(),
            b.0,
            b.1.len(),
            shared.len(),
            alignment,
            config.min_alignment
        )));
    }
    let keep = |id: &str| shared.contains(id);
    let (ra, _) = learn_and_report(a.0, &a.1.subset(keep), model, &config.learn)?;
    let (rb, _) = learn_and_report(b.0, &b.1.subset(keep), model, &config.learn)?;
    let gap = |x: u64, y: u64| 100.0 * (x as f64 - y as f64) / y as f64;
    Ok(PairReport {
        aligned: shared.len(),
        dl_base_gap_pct: gap(ra.dl_base, rb.dl_base),
        dl_star_gap_pct: gap(ra.dl_star, rb.dl_star),
        c_of_w_gap_pct: gap(ra.c_of_w, rb.c_of_w),
        compression_ratio_gap: ra.compression_ratio - rb.compression_ratio,
        a: ra,
        b: rb,
    })
}

/// One CSV row per report, columns in field order.
pub fn reports_csv(reports: &[ComplexityReport]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in reports {
        w.serialize(r).map_err(|e| Error::Invalid(format!("csv: {e}")))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Invalid(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::lang::{Abstraction, PrimitiveAlphabet};

    fn toy() -> Corpus {
        Corpus::from_sequences(
            PrimitiveAlphabet::standard(),
            [
                ("旦", vec!["S", "HZ", "H", "H", "H"]),
                ("见", vec!["S", "HZ", "SP", "SWG"]),
                ("日", vec!["S", "HZ", "H", "H"]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn toy_report_matches_hand_costs() {
        let corpus = toy();
        let mut lib = Library::new(corpus.alphabet().clone());
        let b0 = Expr::parse("(list S HZ)", &lib).unwrap();
        lib.push(Abstraction::new("fn_0", 0, b0)).unwrap();
        let b1 = Expr::parse("(fn_0 H H)", &lib).unwrap();
        lib.push(Abstraction::new("fn_1", 0, b1)).unwrap();
        let programs = ["(fn_1 H)", "(fn_0 SP SWG)", "fn_1"].map(|t| Expr::parse(t, &lib).unwrap());
        let rewritten = corpus.with_programs(programs.to_vec());
        let r = complexity_report("toy", &corpus, &lib, &rewritten, &CostModel::default()).unwrap();
        // Literal programs have 6, 5 and 5 leaves: (t + a)·leaves − a each.
        assert_eq!(r.dl_base, 605 + 504 + 504);
        // (fn_1 H) 201, (fn_0 SP SWG) 302, fn_1 100.
        assert_eq!(r.dl_star, 603);
        // (list S HZ) 302, (fn_0 H H) 302.
        assert_eq!(r.library_dl, 604);
        assert_eq!(r.c_of_w, 1207);
        assert_eq!(r.library_size, 33 + 1 + 2);
        assert_eq!(r.compression_ratio, 1613.0 / 603.0);
        assert_eq!(r.objective_compression_ratio, 1613.0 / 1207.0);
        assert!((r.per_char_function_ratio - (6.0 / 2.0 + 5.0 / 3.0 + 5.0) / 3.0).abs() < 1e-12);
        assert!((r.per_char_function_ratio_without_list - (5.0 / 2.0 + 4.0 / 3.0 + 4.0) / 3.0).abs() < 1e-12);
    }

    #[test]
    fn empty_library_ratio_is_one() {
        let corpus = toy();
        let lib = Library::new(corpus.alphabet().clone());
        let r = complexity_report("toy", &corpus, &lib, &corpus, &CostModel::default()).unwrap();
        assert_eq!((r.compression_ratio, r.c_of_w), (1.0, r.dl_base));
        assert_eq!(r.per_char_function_ratio, 1.0);
    }

    #[test]
    fn mismatched_glyphs_are_rejected() {
        let corpus = toy();
        let lib = Library::new(corpus.alphabet().clone());
        let fewer = corpus.subset(|id| id != "日");
        assert!(complexity_report("toy", &corpus, &lib, &fewer, &CostModel::default()).is_err());
        let wrong = corpus.with_programs(vec![
            Expr::list(["H"]),
            corpus.get("见").unwrap().clone(),
            corpus.get("日").unwrap().clone(),
        ]);
        assert!(complexity_report("toy", &corpus, &lib, &wrong, &CostModel::default()).is_err());
    }

    #[test]
    fn identical_scripts_compare_evenly() {
        let corpora = vec![("a".to_string(), toy()), ("b".to_string(), toy())];
        let t = diachronic_compare(&corpora, &CostModel::default(), &LearnConfig::default()).unwrap();
        let (a, b) = (&t.reports[0], &t.reports[1]);
        assert_eq!((a.c_of_w, a.compression_ratio), (b.c_of_w, b.compression_ratio));
        assert_eq!(t.comparisons[0].c_of_w_ratio, 1.0);
        assert!(t.warnings.is_empty());
        assert!(diachronic_compare(&corpora[..1], &CostModel::default(), &LearnConfig::default()).is_err());

        let p = script_pair_compare(("a", &toy()), ("b", &toy()), &CostModel::default(), &PairConfig::default()).unwrap();
        assert_eq!((p.dl_base_gap_pct, p.dl_star_gap_pct, p.c_of_w_gap_pct, p.compression_ratio_gap), (0.0, 0.0, 0.0, 0.0));
        assert_eq!(p.aligned, 3);
    }

    #[test]
    fn duplicated_corpus_compresses_at_least_as_well() {
        let a = toy();
        let seqs: Vec<(String, Vec<String>)> = (0..3)
            .flat_map(|copy| {
                a.iter()
                    .map(move |(id, e)| (format!("{id}{copy}"), crate::expand(e, &Library::new(PrimitiveAlphabet::standard())).unwrap()))
            })
            .collect();
        let b = Corpus::from_sequences(PrimitiveAlphabet::standard(), seqs).unwrap();
        let model = CostModel::default();
        let (ra, _) = learn_and_report("a", &a, &model, &LearnConfig::default()).unwrap();
        let (rb, _) = learn_and_report("b", &b, &model, &LearnConfig::default()).unwrap();
        assert!(rb.compression_ratio >= ra.compression_ratio);
    }

    #[test]
    fn doubled_strokes_raise_base_dl_and_misaligned_pairs_abort() {
        let a = toy();
        let mut seqs: Vec<(String, Vec<&str>)> = vec![
            ("旦".into(), vec!["S", "HZ", "H", "H", "H"]),
            ("见".into(), vec!["S", "HZ", "SP", "SWG"]),
            ("日".into(), vec!["S", "HZ", "H", "H", "S", "HZ", "H", "H"]),
        ];
        let b = Corpus::from_sequences(PrimitiveAlphabet::standard(), seqs.clone()).unwrap();
        let model = CostModel::default();
        let p = script_pair_compare(("b", &b), ("a", &a), &model, &PairConfig::default()).unwrap();
        assert!(p.a.dl_base > p.b.dl_base && p.dl_base_gap_pct > 0.0);

        seqs[0].0 = "x".into();
        seqs[1].0 = "y".into();
        let c = Corpus::from_sequences(PrimitiveAlphabet::standard(), seqs).unwrap();
        assert!(script_pair_compare(("c", &c), ("a", &a), &model, &PairConfig::default()).is_err());
    }

    #[test]
    fn csv_has_a_header_and_one_row_per_report() {
        let corpus = toy();
        let lib = Library::new(corpus.alphabet().clone());
        let r = complexity_report("toy", &corpus, &lib, &corpus, &CostModel::default()).unwrap();
        let text = reports_csv(&[r.clone(), r]).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with("corpus_id,glyphs,dl_base,dl_star,library_dl,c_of_w"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn report_is_order_invariant_and_never_worse_than_base(
            seqs in prop::collection::vec(prop::collection::vec(0usize..5, 2..10), 2..8),
            rotate in 0usize..8,
        ) {
            let names = &crate::lang::STANDARD_STROKES[..5];
            let entries: Vec<(String, Vec<&str>)> = seqs
                .iter()
                .enumerate()
                .map(|(i, s)| (format!("g{i}"), s.iter().map(|&k| names[k]).collect()))
                .collect();
            let mut rotated = entries.clone();
            rotated.rotate_left(rotate % entries.len());
            rotated.reverse();
            let model = CostModel::default();
            let config = LearnConfig::default();
            let a = Corpus::from_sequences(PrimitiveAlphabet::standard(), entries).unwrap();
            let b = Corpus::from_sequences(PrimitiveAlphabet::standard(), rotated).unwrap();
            let (ra, outcome) = learn_and_report("x", &a, &model, &config).unwrap();
            let (rb, _) = learn_and_report("x", &b, &model, &config).unwrap();
            prop_assert_eq!(&ra, &rb);
            prop_assert!(ra.c_of_w <= ra.dl_base);
            prop_assert!(ra.compression_ratio >= 1.0);

            // Each accepted abstraction lowers the objective at report level.
            let mut last = ra.dl_base;
            for k in 0..=outcome.library.len() {
                let lib = outcome.library.prefix(k);
                let rewritten = a.rewrite_with(&lib, &model).unwrap();
                let r = complexity_report("x", &a, &lib, &rewritten, &model).unwrap();
                prop_assert!(k == 0 || r.c_of_w < last);
                prop_assert!(r.per_char_function_ratio >= 1.0);
                last = r.c_of_w;
            }
        }
    }
}
