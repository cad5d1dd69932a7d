use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{nested_or_disjoint, Span, SpanTree};
use crate::error::{Error, LangError, Result};
use crate::lang::semantics::expand_ids;
use crate::lang::{Corpus, Expr, Library};

/// How a function occurrence maps to a stroke interval.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpanMode {
    /// Every stroke the occurrence's expansion produces, arguments included.
    #[default]
    Subtree,
    /// Only the strokes produced by the function's own body.
    #[serde(alias = "body")]
    BodyContribution,
}

impl FromStr for SpanMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "subtree" => Ok(Self::Subtree),
            "body-contribution" | "body" => Ok(Self::BodyContribution),
            _ => Err(Error::Invalid(format!(
                "unknown span mode `{s}` (expected subtree or body-contribution)"
            ))),
        }
    }
}

impl fmt::Display for SpanMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Subtree => "subtree",
            Self::BodyContribution => "body-contribution",
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpanOptions {
    pub mode: SpanMode,
    /// Also count occurrences inside library bodies, not only those written
    /// in the program itself.
    pub through_bodies: bool,
}

/// Span tree of one rewritten program: one interval per learned-function
/// occurrence, reduced to a laminar family, plus the full span.
pub fn extract_spans(glyph: &str, rewritten: &Expr, library: &Library, options: SpanOptions) -> Result<SpanTree> {
    let (n, spans) = occurrence_spans(rewritten, library, options)?;
    SpanTree::new(glyph, n, laminar_subset(spans))
}

/// Stroke count and one interval per selected function occurrence.
fn occurrence_spans(rewritten: &Expr, library: &Library, options: SpanOptions) -> Result<(usize, Vec<Span>)> {
    let ids = expand_ids(rewritten, library)?;
    if ids.is_empty() {
        return Err(LangError::EmptyExpansion.into());
    }
    let mut tracer = Tracer {
        lib: library,
        frames: Vec::new(),
        serial: 0,
    };
    let out = match tracer.eval(rewritten, &[], None)? {
        Traced::Seq(strokes) => strokes,
        Traced::Elem(s) => vec![s],
        Traced::Partial(..) => return Err(LangError::EmptyExpansion.into()),
    };
    debug_assert_eq!(out.len(), ids.len());

    let selected = |f: &Frame| options.through_bodies || f.parent.is_none();
    let hull = |hit: &dyn Fn(&Stroke) -> bool| -> Option<Span> {
        let first = out.iter().position(hit)?;
        let last = out.iter().rposition(hit)?;
        Some((first, last + 1))
    };
    let mut spans: Vec<Span> = Vec::new();
    for (id, frame) in tracer.frames.iter().enumerate() {
        if !selected(frame) {
            continue;
        }
        let span = match options.mode {
            SpanMode::Subtree => {
                let own: HashSet<u32> = frame.result.iter().copied().collect();
                hull(&|s| own.contains(&s.serial))
            }
            SpanMode::BodyContribution => hull(&|s| tracer.owned_by(s.owner, id as u32)),
        };
        spans.extend(span);
    }
    Ok((out.len(), spans))
}

/// Span trees for every program of a rewritten corpus, in corpus order.
pub fn extract_all(rewritten: &Corpus, library: &Library, options: SpanOptions) -> Result<Vec<SpanTree>> {
    let programs: Vec<(&str, &Expr)> = rewritten.iter().collect();
    programs
        .par_iter()
        .map(|(id, e)| extract_spans(id, e, library, options))
        .collect()
}

/// Keeps the largest spans first and drops any span crossing one already
/// kept.
fn laminar_subset(mut spans: Vec<Span>) -> Vec<Span> {
    spans.sort_by(|a, b| (b.1 - b.0).cmp(&(a.1 - a.0)).then(a.0.cmp(&b.0)));
    spans.dedup();
    let mut kept: Vec<Span> = Vec::with_capacity(spans.len());
    for span in spans {
        if kept.iter().all(|&k| nested_or_disjoint(k, span)) {
            kept.push(span);
        }
    }
    kept
}

#[derive(Debug, Clone, Copy)]
struct Stroke {
    serial: u32,
    /// Innermost call whose body wrote this stroke; `None` for strokes
    /// written in the program itself.
    owner: Option<u32>,
}

#[derive(Debug, Clone)]
enum Traced {
    Elem(Stroke),
    Seq(Vec<Stroke>),
    Partial(usize, Vec<Traced>),
}

struct Frame {
    /// Call whose body contains this call.
    parent: Option<u32>,
    result: Vec<u32>,
}

/// Evaluates a program while recording every function call and which
/// call's body wrote each stroke.
struct Tracer<'a> {
    lib: &'a Library,
    frames: Vec<Frame>,
    serial: u32,
}

impl Tracer<'_> {
    fn eval(&mut self, expr: &Expr, env: &[Traced], ctx: Option<u32>) -> Result<Traced, LangError> {
        match expr {
            Expr::Prim(_) => {
                self.serial += 1;
                Ok(Traced::Elem(Stroke {
                    serial: self.serial,
                    owner: ctx,
                }))
            }
            Expr::Var(i) => env.get(*i).cloned().ok_or(LangError::FreeVariable(*i)),
            Expr::ListHead => Ok(Traced::Seq(Vec::new())),
            Expr::LibRef(name) => {
                let idx = self
                    .lib
                    .function_index(name)
                    .ok_or_else(|| LangError::UnknownAtom(name.clone()))?;
                if self.lib.template(idx).arity() == 0 {
                    self.call(idx, Vec::new(), ctx)
                } else {
                    Ok(Traced::Partial(idx, Vec::new()))
                }
            }
            Expr::App(f, x) => {
                let f = self.eval(f, env, ctx)?;
                let x = self.eval(x, env, ctx)?;
                match f {
                    Traced::Seq(mut strokes) => match x {
                        Traced::Elem(s) => {
                            strokes.push(s);
                            Ok(Traced::Seq(strokes))
                        }
                        _ => Err(LangError::NestedList),
                    },
                    Traced::Partial(idx, mut args) => {
                        args.push(x);
                        if args.len() == self.lib.template(idx).arity() {
                            self.call(idx, args, ctx)
                        } else {
                            Ok(Traced::Partial(idx, args))
                        }
                    }
                    Traced::Elem(_) => Err(LangError::PrimitiveHead(expr.spine().0.to_string())),
                }
            }
        }
    }

    fn call(&mut self, idx: usize, args: Vec<Traced>, ctx: Option<u32>) -> Result<Traced, LangError> {
        let id = self.frames.len() as u32;
        self.frames.push(Frame {
            parent: ctx,
            result: Vec::new(),
        });
        let lib = self.lib;
        let value = self.eval(&lib.function(idx).body, &args, Some(id))?;
        let Traced::Seq(strokes) = value else {
            return Err(LangError::NestedList);
        };
        self.frames[id as usize].result = strokes.iter().map(|s| s.serial).collect();
        Ok(Traced::Seq(strokes))
    }

    /// Is `frame` the owner of a stroke or one of the owner's callers?
    fn owned_by(&self, mut owner: Option<u32>, frame: u32) -> bool {
        while let Some(o) = owner {
            if o == frame {
                return true;
            }
            owner = self.frames[o as usize].parent;
        }
        false
    }
}
