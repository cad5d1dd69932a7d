use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::Args;
use glyphlearn::evaluation::{
    align_radicals, baseline_trees, extract_all, score, BaselineKind, ScoreOptions, ScoreReport, SpanOptions,
};
use glyphlearn::formats;
use glyphlearn::ingestion::{self, DerivedAlphabet, EncodeOptions, Encoded, IngestConfig};
use glyphlearn::learner::{hierarchy_stats, usage_counts};
use glyphlearn::metrics::{self, ComplexityReport, PairConfig};
use glyphlearn::{learn_library, Corpus, Library, PrimitiveAlphabet};
use serde::Serialize;
use serde_json::Value;

use crate::artifacts::{csv_document, json_document, provenance, write_csv, Input, Outputs};
use crate::config::RunConfig;
use crate::{CliError, Status};

fn in_file(path: &Path) -> impl Fn(glyphlearn::Error) -> CliError + '_ {
    move |e| CliError::BadInput(format!("{}: {e}", path.display()))
}

/// Provenance of a corpus artifact, which also records its alphabet so the
/// file can be loaded without further flags.
fn corpus_provenance(base: &Value, alphabet: &PrimitiveAlphabet) -> Value {
    let mut p = base.clone();
    p["alphabet"] = serde_json::to_value(alphabet).expect("alphabet serializes");
    p
}

/// Alphabet of a corpus file: the override if given, else the one recorded
/// in its provenance, else the standard strokes.
fn corpus_alphabet(input: &Input, alphabet: Option<&DerivedAlphabet>) -> Result<PrimitiveAlphabet, CliError> {
    if let Some(a) = alphabet {
        return Ok(a.primitives());
    }
    match formats::provenance(&input.text).and_then(|p| p.get("alphabet").cloned()) {
        Some(v) => serde_json::from_value(v)
            .map_err(|e| CliError::BadInput(format!("{}: recorded alphabet: {e}", input.path.display()))),
        None => Ok(PrimitiveAlphabet::standard()),
    }
}

fn load_corpus(input: &Input, alphabet: Option<&DerivedAlphabet>) -> Result<Corpus, CliError> {
    let base = corpus_alphabet(input, alphabet)?;
    formats::parse_corpus(&input.text, &Library::new(base)).map_err(in_file(&input.path))
}

fn load_alphabet(path: Option<&PathBuf>) -> Result<Option<(Input, DerivedAlphabet)>, CliError> {
    let Some(path) = path else {
        return Ok(None);
    };
    let input = Input::read(path)?;
    let alphabet = formats::parse_alphabet(&input.text).map_err(in_file(path))?;
    Ok(Some((input, alphabet)))
}

fn announce(written: &[PathBuf]) {
    for p in written {
        log::info!("wrote {}", p.display());
    }
}

#[derive(Debug, Args)]
pub struct LearnArgs {
    /// Corpus file, JSON Lines of {"id", "program"}.
    pub corpus: PathBuf,
    /// Alphabet file for corpora over derived primitives.
    #[arg(long, value_name = "FILE")]
    pub alphabet: Option<PathBuf>,
}

#[derive(Serialize)]
struct LearnReport<'a> {
    report: &'a ComplexityReport,
    hierarchy: glyphlearn::learner::HierarchyStats,
    hit_iteration_cap: bool,
}

pub fn learn(args: &LearnArgs, config: &RunConfig) -> Result<Status, CliError> {
    let input = Input::read(&args.corpus)?;
    let alphabet = load_alphabet(args.alphabet.as_ref())?;
    let corpus = load_corpus(&input, alphabet.as_ref().map(|a| &a.1))?;
    let model = config.cost_model()?;
    let outcome = learn_library(&corpus, &model, &config.learn_config()).map_err(in_file(&input.path))?;
    let report = metrics::complexity_report(&input.stem(), &corpus, &outcome.library, &outcome.rewritten, &model)
        .map_err(CliError::internal)?;

    let mut inputs = vec![&input];
    inputs.extend(alphabet.as_ref().map(|a| &a.0));
    let prov = provenance("learn", config, &inputs);
    let usage = usage_counts(&outcome.rewritten, &outcome.library);
    let mut out = Outputs::new(config);
    out.add(
        "library.txt",
        formats::library_to_text(&outcome.library, Some(&usage), &[format!("provenance {prov}")]),
    );
    out.add(
        "rewritten.jsonl",
        formats::corpus_to_jsonl(&outcome.rewritten, Some(&corpus_provenance(&prov, corpus.alphabet()))),
    );
    out.add("trace.jsonl", formats::trace_to_jsonl(&outcome.trace, Some(&prov)));
    let summary = LearnReport {
        report: &report,
        hierarchy: hierarchy_stats(&outcome.library),
        hit_iteration_cap: outcome.hit_iteration_cap,
    };
    out.add("report.json", json_document(&prov, &summary)?);
    announce(&out.commit()?);

    println!(
        "learned {} functions: DL {} -> {} (corpus {} + library {}), compression ratio {:.4}",
        report.learned_count, report.dl_base, report.c_of_w, report.dl_star, report.library_dl, report.compression_ratio
    );
    Ok(if outcome.hit_iteration_cap {
        Status::CapHit(config.iters)
    } else {
        Status::Done
    })
}

#[derive(Debug, Args)]
pub struct RewriteArgs {
    /// Corpus file to rewrite.
    pub corpus: PathBuf,
    /// Library file to rewrite with.
    #[arg(long, value_name = "FILE")]
    pub library: PathBuf,
}

pub fn rewrite(args: &RewriteArgs, config: &RunConfig) -> Result<Status, CliError> {
    let lib_input = Input::read(&args.library)?;
    let input = Input::read(&args.corpus)?;
    let library = formats::parse_library(&lib_input.text, &corpus_alphabet(&input, None)?).map_err(in_file(&lib_input.path))?;
    let corpus = formats::parse_corpus(&input.text, &library).map_err(in_file(&input.path))?;
    let model = config.cost_model()?;
    let rewritten = corpus.rewrite_with(&library, &model).map_err(|e| in_file(&input.path)(e.into()))?;

    let prov = provenance("rewrite", config, &[&input, &lib_input]);
    let mut out = Outputs::new(config);
    out.add(
        "rewritten.jsonl",
        formats::corpus_to_jsonl(&rewritten, Some(&corpus_provenance(&prov, corpus.alphabet()))),
    );
    announce(&out.commit()?);
    println!(
        "rewrote {} programs: DL {} -> {}",
        corpus.len(),
        corpus.description_length(&model),
        rewritten.description_length(&model)
    );
    Ok(Status::Done)
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Rewritten corpus produced by `learn` or `rewrite`.
    pub rewritten: PathBuf,
    /// Library the corpus was rewritten with.
    #[arg(long, value_name = "FILE")]
    pub library: PathBuf,
    /// Gold decompositions, JSON Lines of {"id", "n", "spans"}.
    #[arg(long, value_name = "FILE")]
    pub gold: PathBuf,
    /// Also score the balanced, random, left- and right-branching trees.
    #[arg(long)]
    pub baselines: bool,
    /// Count function calls inside library bodies as spans too.
    #[arg(long)]
    pub through_bodies: bool,
    /// Radical inventory to align with the library, JSON Lines of {"id", "strokes"}.
    #[arg(long, value_name = "FILE")]
    pub radicals: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct ScoreRow {
    model: String,
    f1: f64,
    precision: f64,
    recall: f64,
    exact_match: f64,
    glyphs: usize,
    missing_predictions: usize,
    extra_predictions: usize,
}

impl ScoreRow {
    fn new(model: impl Into<String>, r: ScoreReport) -> Self {
        Self {
            model: model.into(),
            f1: r.f1,
            precision: r.precision,
            recall: r.recall,
            exact_match: r.exact_match,
            glyphs: r.glyphs,
            missing_predictions: r.missing_predictions,
            extra_predictions: r.extra_predictions,
        }
    }
}

#[derive(Serialize)]
struct EvalReport {
    span_options: SpanOptions,
    include_full_span: bool,
    rows: Vec<ScoreRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    radicals: Option<glyphlearn::evaluation::RadicalAlignment>,
}

pub fn eval(args: &EvalArgs, config: &RunConfig) -> Result<Status, CliError> {
    let lib_input = Input::read(&args.library)?;
    let input = Input::read(&args.rewritten)?;
    let gold_input = Input::read(&args.gold)?;
    let radical_input = args.radicals.as_deref().map(Input::read).transpose()?;

    let library = formats::parse_library(&lib_input.text, &corpus_alphabet(&input, None)?).map_err(in_file(&lib_input.path))?;
    let rewritten = formats::parse_corpus(&input.text, &library).map_err(in_file(&input.path))?;
    let gold = formats::parse_gold(&gold_input.text).map_err(in_file(&gold_input.path))?;
    let span_options = SpanOptions {
        mode: config.span_mode,
        through_bodies: args.through_bodies,
    };
    let trees = extract_all(&rewritten, &library, span_options).map_err(in_file(&input.path))?;
    let predicted: BTreeMap<String, _> = trees.iter().map(|t| (t.glyph().to_string(), t.clone())).collect();
    let options = ScoreOptions {
        include_full_span: config.include_full_span,
    };
    let mut rows = vec![ScoreRow::new(
        "library-learning",
        score(&predicted, &gold, options).map_err(in_file(&gold_input.path))?,
    )];
    if args.baselines {
        for kind in BaselineKind::ALL {
            let trees = baseline_trees(&gold, kind, config.seed).map_err(CliError::internal)?;
            rows.push(ScoreRow::new(kind.to_string(), score(&trees, &gold, options).map_err(CliError::internal)?));
        }
    }
    let radicals = match &radical_input {
        Some(r) => {
            let inventory = formats::parse_radicals(&r.text).map_err(in_file(&r.path))?;
            Some(align_radicals(&library, &inventory).map_err(in_file(&r.path))?)
        }
        None => None,
    };

    let mut inputs = vec![&input, &lib_input, &gold_input];
    inputs.extend(radical_input.as_ref());
    let prov = provenance("eval", config, &inputs);
    for r in &rows {
        println!(
            "{:<18} F1 {:6.2}  P {:6.2}  R {:6.2}  EM {:6.2}",
            r.model, r.f1, r.precision, r.recall, r.exact_match
        );
    }
    if let Some(a) = &radicals {
        println!("radicals discovered: {}/{} ({:.1}%)", a.matched.len(), a.matched.len() + a.unmatched.len(), 100.0 * a.discovered_fraction);
    }
    let mut out = Outputs::new(config);
    out.add("spans.jsonl", formats::span_trees_to_jsonl(&trees, Some(&prov)));
    out.add("scores.csv", csv_document(&prov, &write_csv(&rows)?));
    let report = EvalReport {
        span_options,
        include_full_span: config.include_full_span,
        rows,
        radicals,
    };
    out.add("scores.json", json_document(&prov, &report)?);
    announce(&out.commit()?);
    Ok(Status::Done)
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    /// Corpus files, in epoch order for a diachronic table.
    #[arg(required = true)]
    pub corpora: Vec<PathBuf>,
    /// Compare exactly two aligned corpora of the same glyphs.
    #[arg(long)]
    pub pair: bool,
    /// Smallest share of shared glyphs accepted by `--pair`.
    #[arg(long, value_name = "FRACTION", default_value_t = PairConfig::default().min_alignment)]
    pub min_alignment: f64,
    /// Comma-separated corpus names; defaults to the file names.
    #[arg(long, value_delimiter = ',')]
    pub names: Vec<String>,
    /// Alphabet file for corpora over derived primitives.
    #[arg(long, value_name = "FILE")]
    pub alphabet: Option<PathBuf>,
}

#[derive(Serialize)]
struct GapRow<'a> {
    a: &'a str,
    b: &'a str,
    aligned: usize,
    dl_base_gap_pct: f64,
    dl_star_gap_pct: f64,
    c_of_w_gap_pct: f64,
    compression_ratio_gap: f64,
}

pub fn metrics(args: &MetricsArgs, config: &RunConfig) -> Result<Status, CliError> {
    let alphabet = load_alphabet(args.alphabet.as_ref())?;
    let inputs: Vec<Input> = args.corpora.iter().map(|p| Input::read(p)).collect::<Result<_, _>>()?;
    let names: Vec<String> = if args.names.is_empty() {
        inputs.iter().map(Input::stem).collect()
    } else if args.names.len() == inputs.len() {
        args.names.clone()
    } else {
        return Err(CliError::BadInput(format!("{} names given for {} corpora", args.names.len(), inputs.len())));
    };
    for (i, n) in names.iter().enumerate() {
        if names[..i].contains(n) {
            return Err(CliError::BadInput(format!("corpus name `{n}` is used twice; pass --names")));
        }
    }
    let corpora: Vec<(String, Corpus)> = names
        .iter()
        .cloned()
        .zip(&inputs)
        .map(|(n, i)| Ok((n, load_corpus(i, alphabet.as_ref().map(|a| &a.1))?)))
        .collect::<Result<_, CliError>>()?;
    let model = config.cost_model()?;
    let mut all_inputs: Vec<&Input> = inputs.iter().collect();
    all_inputs.extend(alphabet.as_ref().map(|a| &a.0));
    let prov = provenance("metrics", config, &all_inputs);
    let mut out = Outputs::new(config);
    let mut status = Status::Done;

    let reports = if args.pair {
        let [(a, ca), (b, cb)] = corpora.as_slice() else {
            return Err(CliError::BadInput(format!("--pair needs exactly two corpora, got {}", corpora.len())));
        };
        let pair_config = PairConfig {
            learn: config.learn_config(),
            min_alignment: args.min_alignment,
        };
        let pair = metrics::script_pair_compare((a, ca), (b, cb), &model, &pair_config).map_err(|e| CliError::BadInput(e.to_string()))?;
        let gap = GapRow {
            a,
            b,
            aligned: pair.aligned,
            dl_base_gap_pct: pair.dl_base_gap_pct,
            dl_star_gap_pct: pair.dl_star_gap_pct,
            c_of_w_gap_pct: pair.c_of_w_gap_pct,
            compression_ratio_gap: pair.compression_ratio_gap,
        };
        println!(
            "{a} vs {b} on {} glyphs: DL_base {:+.1}%, DL* {:+.1}%, C(W) {:+.1}%",
            pair.aligned, pair.dl_base_gap_pct, pair.dl_star_gap_pct, pair.c_of_w_gap_pct
        );
        out.add("pair.csv", csv_document(&prov, &write_csv(&[gap])?));
        out.add("metrics.json", json_document(&prov, &serde_json::json!({ "pair": pair }))?);
        vec![pair.a, pair.b]
    } else if corpora.len() == 1 {
        let (name, corpus) = &corpora[0];
        let (report, outcome) = metrics::learn_and_report(name, corpus, &model, &config.learn_config()).map_err(in_file(&inputs[0].path))?;
        if outcome.hit_iteration_cap {
            status = Status::CapHit(config.iters);
        }
        out.add("metrics.json", json_document(&prov, &serde_json::json!({ "reports": [&report] }))?);
        vec![report]
    } else {
        let table = metrics::diachronic_compare(&corpora, &model, &config.learn_config()).map_err(|e| CliError::BadInput(e.to_string()))?;
        for w in &table.warnings {
            log::warn!("{w}");
        }
        out.add("comparisons.csv", csv_document(&prov, &write_csv(&table.comparisons)?));
        out.add("metrics.json", json_document(&prov, &table)?);
        table.reports
    };
    for r in &reports {
        println!(
            "{}: {} glyphs, DL_base {}, DL* {}, |L| {}, compression ratio {:.4}",
            r.corpus_id, r.glyphs, r.dl_base, r.dl_star, r.library_size, r.compression_ratio
        );
    }
    out.add("metrics.csv", csv_document(&prov, &metrics::reports_csv(&reports).map_err(CliError::internal)?));
    announce(&out.commit()?);
    Ok(status)
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Trajectory files, JSON Lines of {"id", "strokes"}; one per script.
    #[arg(required = true)]
    pub trajectories: Vec<PathBuf>,
    /// Number of stroke primitives to derive.
    #[arg(long, default_value_t = IngestConfig::default().k)]
    pub k: usize,
    /// Cluster the strokes of all scripts together into one alphabet.
    #[arg(long, conflicts_with = "alphabet")]
    pub joint: bool,
    /// Encode with this alphabet instead of deriving one.
    #[arg(long, value_name = "FILE")]
    pub alphabet: Option<PathBuf>,
    /// Exclude glyphs with a stroke farther than this from every centroid.
    #[arg(long, value_name = "DISTANCE")]
    pub max_distance: Option<f64>,
}

#[derive(Serialize)]
struct IngestReport<'a> {
    glyphs: usize,
    encoded: usize,
    excluded: &'a [ingestion::Exclusion],
}

pub fn ingest(args: &IngestArgs, config: &RunConfig) -> Result<Status, CliError> {
    if args.max_distance.is_some_and(|d| d.is_nan() || d < 0.0) {
        return Err(CliError::BadInput("--max-distance must be a non-negative number".into()));
    }
    let fixed = load_alphabet(args.alphabet.as_ref())?;
    let inputs: Vec<Input> = args.trajectories.iter().map(|p| Input::read(p)).collect::<Result<_, _>>()?;
    let stems: Vec<String> = inputs.iter().map(Input::stem).collect();
    for (i, s) in stems.iter().enumerate() {
        if stems[..i].contains(s) {
            return Err(CliError::BadInput(format!("two trajectory files share the name `{s}`")));
        }
    }
    let scripts: Vec<Vec<ingestion::Trajectory>> = inputs
        .iter()
        .map(|i| formats::parse_trajectories(&i.text).map_err(in_file(&i.path)))
        .collect::<Result<_, _>>()?;
    let ingest_config = IngestConfig {
        k: args.k,
        seed: config.seed,
        encode: EncodeOptions {
            max_distance: args.max_distance,
        },
        ..IngestConfig::default()
    };
    let bad = |e: glyphlearn::Error| CliError::BadInput(e.to_string());

    let mut all_inputs: Vec<&Input> = inputs.iter().collect();
    all_inputs.extend(fixed.as_ref().map(|a| &a.0));
    let prov = provenance("ingest", config, &all_inputs);
    let mut out = Outputs::new(config);
    let encoded: Vec<Encoded> = if let Some((_, alphabet)) = &fixed {
        scripts
            .iter()
            .map(|s| ingestion::encode_corpus(s, alphabet, &ingest_config.fit, &ingest_config.encode))
            .collect::<Result<_, _>>()
            .map_err(bad)?
    } else if args.joint {
        let (alphabet, encoded) = ingestion::ingest_joint(&scripts, &ingest_config).map_err(bad)?;
        out.add("alphabet.json", json_document(&prov, &alphabet)?);
        encoded
    } else {
        let mut encoded = Vec::new();
        for (stem, s) in stems.iter().zip(&scripts) {
            let (alphabet, e) = ingestion::ingest(s, &ingest_config).map_err(|e| CliError::BadInput(format!("{stem}: {e}")))?;
            out.add(format!("{stem}.alphabet.json"), json_document(&prov, &alphabet)?);
            encoded.push(e);
        }
        encoded
    };
    for ((stem, s), e) in stems.iter().zip(&scripts).zip(&encoded) {
        out.add(
            format!("{stem}.corpus.jsonl"),
            formats::corpus_to_jsonl(&e.corpus, Some(&corpus_provenance(&prov, e.corpus.alphabet()))),
        );
        let report = IngestReport {
            glyphs: s.len(),
            encoded: e.corpus.len(),
            excluded: &e.excluded,
        };
        out.add(format!("{stem}.report.json"), json_document(&prov, &report)?);
        println!(
            "{stem}: {} of {} glyphs encoded over {} primitives",
            e.corpus.len(),
            s.len(),
            e.corpus.alphabet().len()
        );
    }
    announce(&out.commit()?);
    Ok(Status::Done)
}
