//! Flattening semantics of program terms.
//!
//! Every well-formed list-valued term denotes a *template*: an optional
//! leading head parameter (a list prefix supplied by the caller) followed by
//! items that are fixed strokes or element parameters. A closed program
//! denotes a template with no parameters, i.e. a plain stroke sequence.

use super::expr::Expr;
use super::library::Library;
use crate::error::LangError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Item {
    Fixed(u32),
    Param(usize),
}

/// Compiled meaning of an abstraction body.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    head: Option<usize>,
    items: Vec<Item>,
    arity: usize,
    repeated: bool,
}

impl Template {
    pub fn new(head: Option<usize>, items: Vec<Item>, arity: usize) -> Self {
        let mut seen = vec![false; arity];
        let mut repeated = false;
        for item in &items {
            if let Item::Param(p) = *item {
                repeated |= std::mem::replace(&mut seen[p], true);
            }
        }
        Self {
            head,
            items,
            arity,
            repeated,
        }
    }

    /// Index of the parameter in list-head position, if any.
    pub fn head(&self) -> Option<usize> {
        self.head
    }

    pub fn items(&self) -> &[Item] {
        &self.items
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// A template without a head parameter only ever denotes a whole list
    /// starting at stroke 0.
    pub fn is_anchored(&self) -> bool {
        self.head.is_none()
    }

    pub fn element_params(&self) -> usize {
        self.arity - usize::from(self.head.is_some())
    }

    /// The strokes contributed by the body itself, with every parameter
    /// instantiated to nothing.
    pub fn fixed_strokes(&self) -> Vec<u32> {
        self.items
            .iter()
            .filter_map(|item| match item {
                Item::Fixed(s) => Some(*s),
                Item::Param(_) => None,
            })
            .collect()
    }

    pub(crate) fn has_repeated_params(&self) -> bool {
        self.repeated
    }

    /// Does the item list match `toks[start..start + len]`?
    pub(crate) fn matches_at(&self, toks: &[Tok], start: usize) -> bool {
        let Some(window) = toks.get(start..start + self.items.len()) else {
            return false;
        };
        let fixed_ok = self.items.iter().zip(window).all(|(item, tok)| match item {
            Item::Fixed(s) => *tok == Tok::Sym(*s),
            Item::Param(_) => true,
        });
        fixed_ok && (!self.repeated || self.bindings_consistent(toks, start))
    }

    /// Repeated element parameters must bind equal tokens.
    pub(crate) fn bindings_consistent(&self, toks: &[Tok], start: usize) -> bool {
        let mut bound: Vec<Option<Tok>> = vec![None; self.arity];
        for (offset, item) in self.items.iter().enumerate() {
            if let Item::Param(p) = *item {
                let tok = toks[start + offset];
                match bound[p] {
                    Some(prev) if prev != tok => return false,
                    _ => bound[p] = Some(tok),
                }
            }
        }
        true
    }
}

/// Token of a sequence being rewritten: a stroke, or a body parameter when
/// rewriting the body of a candidate abstraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub(crate) enum Tok {
    Sym(u32),
    Var(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Head,
    Elem,
}

#[derive(Debug, Clone)]
enum Value {
    Elem(Item),
    Seq(Option<usize>, Vec<Item>),
    Partial(usize, Vec<Value>),
    Param(usize),
}

struct Evaluator<'a> {
    lib: &'a Library,
    kinds: Vec<Option<Kind>>,
}

impl<'a> Evaluator<'a> {
    fn new(lib: &'a Library) -> Self {
        Self {
            lib,
            kinds: Vec::new(),
        }
    }

    fn set_kind(&mut self, param: usize, kind: Kind) -> Result<(), LangError> {
        if self.kinds.len() <= param {
            self.kinds.resize(param + 1, None);
        }
        match self.kinds[param] {
            Some(k) if k != kind => Err(LangError::ParamKind(param)),
            _ => {
                self.kinds[param] = Some(kind);
                Ok(())
            }
        }
    }

    fn eval(&mut self, expr: &Expr) -> Result<Value, LangError> {
        match expr {
            Expr::Prim(name) => self
                .lib
                .base()
                .id(name)
                .map(|id| Value::Elem(Item::Fixed(id)))
                .ok_or_else(|| LangError::UnknownAtom(name.clone())),
            Expr::Var(i) => Ok(Value::Param(*i)),
            Expr::ListHead => Ok(Value::Seq(None, Vec::new())),
            Expr::LibRef(name) => {
                let idx = self
                    .lib
                    .function_index(name)
                    .ok_or_else(|| LangError::UnknownAtom(name.clone()))?;
                if self.lib.template(idx).arity() == 0 {
                    self.instantiate(idx, Vec::new())
                } else {
                    Ok(Value::Partial(idx, Vec::new()))
                }
            }
            Expr::App(f, x) => {
                let f = self.eval(f)?;
                let x = self.eval(x)?;
                self.apply(f, x)
            }
        }
    }

    fn apply(&mut self, f: Value, x: Value) -> Result<Value, LangError> {
        match f {
            Value::Seq(head, mut items) => {
                items.push(self.as_elem(x)?);
                Ok(Value::Seq(head, items))
            }
            Value::Param(i) => {
                self.set_kind(i, Kind::Head)?;
                Ok(Value::Seq(Some(i), vec![self.as_elem(x)?]))
            }
            Value::Elem(item) => Err(LangError::PrimitiveHead(self.item_name(item))),
            Value::Partial(idx, mut args) => {
                args.push(x);
                if args.len() == self.lib.template(idx).arity() {
                    self.instantiate(idx, args)
                } else {
                    Ok(Value::Partial(idx, args))
                }
            }
        }
    }

    fn as_elem(&mut self, v: Value) -> Result<Item, LangError> {
        match v {
            Value::Elem(item) => Ok(item),
            Value::Param(i) => {
                self.set_kind(i, Kind::Elem)?;
                Ok(Item::Param(i))
            }
            Value::Seq(..) => Err(LangError::NestedList),
            Value::Partial(idx, _) => Err(self.arity_error(idx)),
        }
    }

    fn as_seq(&mut self, v: Value) -> Result<(Option<usize>, Vec<Item>), LangError> {
        match v {
            Value::Seq(head, items) => Ok((head, items)),
            Value::Param(i) => {
                self.set_kind(i, Kind::Head)?;
                Ok((Some(i), Vec::new()))
            }
            Value::Elem(item) => Err(LangError::PrimitiveHead(self.item_name(item))),
            Value::Partial(idx, _) => Err(self.arity_error(idx)),
        }
    }

    fn instantiate(&mut self, idx: usize, args: Vec<Value>) -> Result<Value, LangError> {
        let lib = self.lib;
        let template = lib.template(idx);
        let mut elems: Vec<Option<Item>> = vec![None; template.arity()];
        let mut head = (None, Vec::new());
        for (p, arg) in args.into_iter().enumerate() {
            if template.head() == Some(p) {
                head = self.as_seq(arg)?;
            } else {
                elems[p] = Some(self.as_elem(arg)?);
            }
        }
        let (head_param, mut items) = head;
        items.reserve(template.len());
        for item in template.items() {
            items.push(match *item {
                Item::Fixed(_) => *item,
                Item::Param(p) => elems[p].expect("element parameter bound"),
            });
        }
        Ok(Value::Seq(head_param, items))
    }

    fn arity_error(&self, idx: usize) -> LangError {
        LangError::ArityMismatch {
            name: self.lib.function(idx).name.clone(),
            expected: self.lib.template(idx).arity(),
        }
    }

    fn item_name(&self, item: Item) -> String {
        match item {
            Item::Fixed(id) => self.lib.base().name(id).to_string(),
            Item::Param(p) => format!("#{p}"),
        }
    }
}

/// Expands a closed program to its stroke ids.
pub(crate) fn expand_ids(expr: &Expr, lib: &Library) -> Result<Vec<u32>, LangError> {
    let mut ev = Evaluator::new(lib);
    match ev.eval(expr)? {
        Value::Elem(Item::Fixed(id)) => Ok(vec![id]),
        Value::Elem(Item::Param(p)) | Value::Param(p) | Value::Seq(Some(p), _) => {
            Err(LangError::FreeVariable(p))
        }
        Value::Seq(None, items) => items
            .into_iter()
            .map(|item| match item {
                Item::Fixed(id) => Ok(id),
                Item::Param(p) => Err(LangError::FreeVariable(p)),
            })
            .collect(),
        Value::Partial(idx, _) => Err(ev.arity_error(idx)),
    }
}

/// Fully β-reduces and flattens `expr` into its base primitive names.
pub fn expand(expr: &Expr, library: &Library) -> Result<Vec<String>, LangError> {
    Ok(expand_ids(expr, library)?
        .into_iter()
        .map(|id| library.base().name(id).to_string())
        .collect())
}

/// Rejects terms that can never be well formed regardless of how free
/// variables are bound: nested lists, applied primitives, partial
/// applications used as values.
pub(crate) fn check_structure(expr: &Expr, lib: &Library) -> Result<(), LangError> {
    match Evaluator::new(lib).eval(expr) {
        Ok(_) => Ok(()),
        Err(
            e @ (LangError::NestedList
            | LangError::PrimitiveHead(_)
            | LangError::ParamKind(_)
            | LangError::ArityMismatch { .. }),
        ) => Err(e),
        Err(_) => Ok(()),
    }
}

/// Compiles an abstraction body against the functions already in `lib`.
pub(crate) fn compile(body: &Expr, arity: usize, lib: &Library) -> Result<Template, String> {
    let mut ev = Evaluator::new(lib);
    let value = ev.eval(body).map_err(|e| e.to_string())?;
    let (head, items) = ev
        .as_seq(value)
        .map_err(|_| "body must denote a list".to_string())?;
    if items.is_empty() {
        return Err("body contributes no strokes".into());
    }
    let mut used = vec![false; arity];
    let params = head
        .into_iter()
        .chain(items.iter().filter_map(|item| match item {
            Item::Param(p) => Some(*p),
            Item::Fixed(_) => None,
        }));
    for p in params {
        if p >= arity {
            return Err(format!("variable #{p} exceeds arity {arity}"));
        }
        used[p] = true;
    }
    if let Some(p) = used.iter().position(|u| !u) {
        return Err(format!("parameter #{p} is never used"));
    }
    Ok(Template::new(head, items, arity))
}
