//! Text file formats.
//!
//! Corpora, gold standards, radical inventories and trajectories are JSON
//! Lines. A line holding only `{"provenance": ...}` is metadata and is
//! skipped by every reader. Libraries are plain text, one definition per
//! line:
//!
//! ```text
//! ; comment
//! @alphabet T N H S P D ...
//! fn_0(#0) := (#0 S HZ H) ; uses 3342 (100%)
//! fn_1() := (fn_0 H H)
//! ```
//!
//! The `@alphabet` line is optional and defaults to the caller's alphabet.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use indexmap::IndexMap;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::evaluation::{GoldStandard, Radical, RadicalInventory, SpanTree};
use crate::ingestion::{DerivedAlphabet, Trajectory};
use crate::lang::{Abstraction, Corpus, Expr, Library, PrimitiveAlphabet};
use crate::learner::{LearnTrace, Usage};

const ALPHABET_DIRECTIVE: &str = "@alphabet";

pub fn read_text(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Non-blank, non-provenance lines deserialized, with 1-based line numbers.
fn jsonl<T: DeserializeOwned>(text: &str) -> Result<Vec<(usize, T)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(line).map_err(|e| Error::format(line_no, e.to_string()))?;
        if is_provenance(&value) {
            continue;
        }
        let item = T::deserialize(value).map_err(|e| Error::format(line_no, e.to_string()))?;
        out.push((line_no, item));
    }
    Ok(out)
}

fn is_provenance(value: &Value) -> bool {
    value
        .as_object()
        .is_some_and(|o| o.len() == 1 && o.contains_key("provenance"))
}

fn to_jsonl<T: Serialize>(provenance: Option<&Value>, items: impl IntoIterator<Item = T>) -> String {
    let mut out = String::new();
    if let Some(p) = provenance {
        out.push_str(&serde_json::json!({ "provenance": p }).to_string());
        out.push('\n');
    }
    for item in items {
        out.push_str(&serde_json::to_string(&item).expect("serializable record"));
        out.push('\n');
    }
    out
}

/// The provenance record of a JSON Lines file, if it has one.
pub fn provenance(text: &str) -> Option<Value> {
    let first = text.lines().find(|l| !l.trim().is_empty())?;
    let mut value: Value = serde_json::from_str(first).ok()?;
    if !is_provenance(&value) {
        return None;
    }
    value.get_mut("provenance").map(Value::take)
}

#[derive(Serialize, Deserialize)]
struct CorpusLine {
    id: String,
    program: String,
}

/// Parses a corpus whose programs may call functions of `library`. An
/// empty file gives an empty corpus and a warning.
pub fn parse_corpus(text: &str, library: &Library) -> Result<Corpus> {
    let mut corpus = Corpus::new(library.base().clone());
    for (line, rec) in jsonl::<CorpusLine>(text)? {
        let program = Expr::parse(&rec.program, library).map_err(|e| Error::format(line, format!("glyph `{}`: {e}", rec.id)))?;
        corpus
            .insert(rec.id, program, library)
            .map_err(|e| Error::format(line, e.to_string()))?;
    }
    if corpus.is_empty() {
        log::warn!("corpus file has no entries");
    }
    Ok(corpus)
}

/// Loads a corpus of literal programs over the standard stroke alphabet.
pub fn load_canonical(path: impl AsRef<Path>) -> Result<Corpus> {
    parse_corpus(&read_text(path)?, &Library::new(PrimitiveAlphabet::standard()))
}

pub fn corpus_to_jsonl(corpus: &Corpus, provenance: Option<&Value>) -> String {
    to_jsonl(
        provenance,
        corpus.iter().map(|(id, p)| CorpusLine {
            id: id.to_string(),
            program: p.to_string(),
        }),
    )
}

/// Parses a library file. `default_base` is used when the file has no
/// `@alphabet` line.
pub fn parse_library(text: &str, default_base: &PrimitiveAlphabet) -> Result<Library> {
    let mut library: Option<Library> = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split(';').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix(ALPHABET_DIRECTIVE) {
            if library.is_some() {
                return Err(Error::format(line_no, "`@alphabet` must precede every definition and appear once"));
            }
            let base = PrimitiveAlphabet::new(rest.split_whitespace()).map_err(|e| Error::format(line_no, e.to_string()))?;
            library = Some(Library::new(base));
            continue;
        }
        let lib = library.get_or_insert_with(|| Library::new(default_base.clone()));
        let abs = parse_definition(line, lib).map_err(|m| Error::format(line_no, m))?;
        lib.push(abs).map_err(|e| Error::format(line_no, e.to_string()))?;
    }
    Ok(library.unwrap_or_else(|| Library::new(default_base.clone())))
}

fn parse_definition(line: &str, library: &Library) -> std::result::Result<Abstraction, String> {
    let (head, body) = line.split_once(":=").ok_or("expected `name(params) := body`")?;
    let head = head.trim();
    let (name, params) = head
        .strip_suffix(')')
        .and_then(|h| h.split_once('('))
        .ok_or_else(|| format!("malformed definition head `{head}`"))?;
    let params: Vec<&str> = params
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|p| !p.is_empty())
        .collect();
    for (i, p) in params.iter().enumerate() {
        if *p != format!("#{i}") {
            return Err(format!("parameter {} of `{name}` should be `#{i}`, found `{p}`", i + 1));
        }
    }
    let body = Expr::parse(body.trim(), library).map_err(|e| format!("`{name}`: {e}"))?;
    Ok(Abstraction::new(name.trim(), params.len(), body))
}

/// Library text. `comments` become leading `;` lines; `usage`, when given,
/// annotates each definition with its use count and percentile.
pub fn library_to_text(library: &Library, usage: Option<&IndexMap<String, Usage>>, comments: &[String]) -> String {
    let mut out = String::new();
    for c in comments {
        for line in c.lines() {
            let _ = writeln!(out, "; {line}");
        }
    }
    let _ = writeln!(out, "{ALPHABET_DIRECTIVE} {}", library.base().names().join(" "));
    for abs in library.learned() {
        let params: Vec<String> = (0..abs.arity).map(|i| format!("#{i}")).collect();
        let _ = write!(out, "{}({}) := {}", abs.name, params.join(", "), abs.body);
        if let Some(u) = usage.and_then(|u| u.get(&abs.name)) {
            let _ = write!(out, " ; uses {} ({:.0}%)", u.uses, u.percentile);
        }
        out.push('\n');
    }
    out
}

pub fn parse_gold(text: &str) -> Result<GoldStandard> {
    let mut gold = BTreeMap::new();
    for (line, tree) in jsonl::<SpanTree>(text)? {
        if gold.contains_key(tree.glyph()) {
            return Err(Error::format(line, format!("duplicate glyph id `{}`", tree.glyph())));
        }
        gold.insert(tree.glyph().to_string(), tree);
    }
    Ok(gold)
}

/// Span trees in the gold-standard format.
pub fn span_trees_to_jsonl<'a>(trees: impl IntoIterator<Item = &'a SpanTree>, provenance: Option<&Value>) -> String {
    to_jsonl(provenance, trees)
}

pub fn parse_radicals(text: &str) -> Result<RadicalInventory> {
    let radicals: Vec<Radical> = jsonl::<Radical>(text)?.into_iter().map(|(_, r)| r).collect();
    RadicalInventory::new(radicals)
}

pub fn parse_trajectories(text: &str) -> Result<Vec<Trajectory>> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (line, t) in jsonl::<Trajectory>(text)? {
        if !seen.insert(t.id.clone()) {
            return Err(Error::format(line, format!("duplicate glyph id `{}`", t.id)));
        }
        out.push(t);
    }
    Ok(out)
}

pub fn trajectories_to_jsonl(trajectories: &[Trajectory]) -> String {
    to_jsonl(None, trajectories)
}

pub fn parse_alphabet(text: &str) -> Result<DerivedAlphabet> {
    serde_json::from_str(text).map_err(|e| Error::format(e.line(), e.to_string()))
}

/// One JSON record per learner iteration.
pub fn trace_to_jsonl(trace: &LearnTrace, provenance: Option<&Value>) -> String {
    to_jsonl(provenance, &trace.records)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::lang::{CostModel, STANDARD_STROKES};
    use crate::learner::{learn_library, usage_counts, LearnConfig};

    fn toy() -> Corpus {
        let lib = Library::new(PrimitiveAlphabet::standard());
        parse_corpus(
            concat!(
                "{\"id\":\"旦\",\"program\":\"(list S HZ H H H)\"}\n",
                "{\"id\":\"见\",\"program\":\"(list S HZ SP SWG)\"}\n",
                "\n",
                "{\"id\":\"日\",\"program\":\"(list S HZ H H)\"}\n",
            ),
            &lib,
        )
        .unwrap()
    }

    fn line_of(err: Error) -> usize {
        match err {
            Error::Format { line, .. } => line,
            other => panic!("expected a format error, got {other}"),
        }
    }

    #[test]
    fn parses_a_literal_corpus_line() {
        let lib = Library::new(PrimitiveAlphabet::standard());
        let c = parse_corpus(r#"{"id":"认","program":"(list D HZT SP N)"}"#, &lib).unwrap();
        assert_eq!(c.get("认").unwrap().to_string(), "(list D HZT SP N)");
    }

    #[test]
    fn corpus_errors_name_the_line() {
        let lib = Library::new(PrimitiveAlphabet::standard());
        let err = parse_corpus("{\"id\":\"a\",\"program\":\"(list H)\"}\n{\"id\":\"b\",\"program\":\"(list H XX)\"}", &lib).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 2") && msg.contains("XX"), "{msg}");
        let err = parse_corpus("{\"id\":\"a\",\"program\":\"(list H)\"}\n\n{\"id\":\"a\",\"program\":\"(list S)\"}", &lib).unwrap_err();
        assert_eq!(line_of(err), 3);
        assert_eq!(line_of(parse_corpus("{\"id\": 1,", &lib).unwrap_err()), 1);
        assert!(parse_corpus("", &lib).unwrap().is_empty());
    }

    #[test]
    fn provenance_lines_are_skipped() {
        let corpus = toy();
        let p = serde_json::json!({"seed": 3});
        let text = corpus_to_jsonl(&corpus, Some(&p));
        assert_eq!(provenance(&text), Some(p));
        let back = parse_corpus(&text, &Library::new(PrimitiveAlphabet::standard())).unwrap();
        assert_eq!(back, corpus);
        assert_eq!(provenance(&corpus_to_jsonl(&corpus, None)), None);
    }

    #[test]
    fn learned_library_and_rewritten_corpus_round_trip() {
        let corpus = toy();
        let out = learn_library(&corpus, &CostModel::default(), &LearnConfig::default()).unwrap();
        let usage = usage_counts(&out.rewritten, &out.library);
        let text = library_to_text(&out.library, Some(&usage), &["learned".into()]);
        assert!(text.contains("fn_0() := (list S HZ) ; uses 3"), "{text}");
        assert!(text.contains("fn_1() := (fn_0 H H)"), "{text}");
        let lib = parse_library(&text, &PrimitiveAlphabet::new(["Q"]).unwrap()).unwrap();
        assert_eq!(lib, out.library);
        let rewritten = parse_corpus(&corpus_to_jsonl(&out.rewritten, None), &lib).unwrap();
        assert_eq!(rewritten, out.rewritten);
    }

    #[test]
    fn table_style_definitions_parse() {
        let base = PrimitiveAlphabet::standard();
        let lib = parse_library("fn_0(#0) := (#0 S HZ H)\nfn_1(#0, #1) := (fn_0 #0 #1)\nfn_2() := (fn_1 (list H) T)\n", &base).unwrap();
        assert_eq!(lib.len(), 3);
        assert_eq!(lib.function(1).arity, 2);
        assert!(library_to_text(&lib, None, &[]).contains("fn_1(#0, #1) := (fn_0 #0 #1)"));
        assert_eq!(line_of(parse_library("fn_0(#1) := (#1 S)", &base).unwrap_err()), 1);
        assert_eq!(line_of(parse_library("fn_0() := (list S)\nfn_1 = (fn_0 H)", &base).unwrap_err()), 2);
        assert_eq!(line_of(parse_library("fn_0() := (list S)\n@alphabet A B", &base).unwrap_err()), 2);
        assert_eq!(line_of(parse_library("fn_0() := (list S)\nfn_0() := (list H)", &base).unwrap_err()), 2);
    }

    #[test]
    fn gold_and_radicals() {
        let gold = parse_gold("{\"id\":\"颢\",\"n\":19,\"spans\":[[0,12],[12,19],[0,4]]}\n").unwrap();
        assert_eq!(gold["颢"].spans().len(), 4);
        let text = span_trees_to_jsonl(gold.values(), None);
        assert_eq!(parse_gold(&text).unwrap(), gold);
        assert!(parse_gold("{\"id\":\"a\",\"n\":4,\"spans\":[[0,3],[2,4]]}").is_err());
        assert_eq!(line_of(parse_gold("{\"id\":\"a\",\"n\":2,\"spans\":[]}\n{\"id\":\"a\",\"n\":2,\"spans\":[]}").unwrap_err()), 2);
        let inv = parse_radicals("{\"id\":\"口\",\"strokes\":[\"S\",\"HZ\",\"H\"]}\n").unwrap();
        assert_eq!(inv.len(), 1);
    }

    #[test]
    fn trajectories_reject_duplicates() {
        let line = r#"{"id":"glyph-042","strokes":[[[0.1,0.2],[0.3,0.4]]]}"#;
        assert_eq!(parse_trajectories(line).unwrap().len(), 1);
        assert_eq!(line_of(parse_trajectories(&format!("{line}\n{line}")).unwrap_err()), 2);
    }

    proptest! {
        #[test]
        fn canonical_corpus_round_trips(seqs in prop::collection::vec(prop::collection::vec(0usize..33, 1..12), 0..20)) {
            let corpus = Corpus::from_sequences(
                PrimitiveAlphabet::standard(),
                seqs.iter().enumerate().map(|(i, s)| (format!("g{i}"), s.iter().map(|&j| STANDARD_STROKES[j]).collect::<Vec<_>>())),
            ).unwrap();
            let back = parse_corpus(&corpus_to_jsonl(&corpus, None), &Library::new(PrimitiveAlphabet::standard())).unwrap();
            prop_assert_eq!(back, corpus);
        }
    }
}
