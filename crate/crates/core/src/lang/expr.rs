use std::fmt;

use super::alphabet::LIST_KEYWORD;
use super::library::Library;
use super::semantics;
use crate::error::LangError;

/// A curried program term.
///
/// `(list A B C)` is `App(App(App(ListHead, A), B), C)`; application is the
/// only compound form. Whether an `App` appends a list element or passes an
/// argument is decided by what its head evaluates to.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Prim(String),
    Var(usize),
    LibRef(String),
    ListHead,
    App(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn prim(name: impl Into<String>) -> Self {
        Expr::Prim(name.into())
    }

    pub fn lib_ref(name: impl Into<String>) -> Self {
        Expr::LibRef(name.into())
    }

    pub fn app(f: Expr, x: Expr) -> Self {
        Expr::App(Box::new(f), Box::new(x))
    }

    /// Left-fold `head` over `args`: `apply(f, [a, b]) == App(App(f, a), b)`.
    pub fn apply(head: Expr, args: impl IntoIterator<Item = Expr>) -> Self {
        args.into_iter().fold(head, Expr::app)
    }

    /// A flat list program `(list p0 p1 ...)`.
    pub fn list<S: Into<String>>(prims: impl IntoIterator<Item = S>) -> Self {
        Expr::apply(Expr::ListHead, prims.into_iter().map(Expr::prim))
    }

    /// Parses one s-expression. See [`parse`].
    pub fn parse(text: &str, library: &Library) -> Result<Self, LangError> {
        parse(text, library)
    }

    /// Splits an application spine into its head and arguments, left to right.
    pub fn spine(&self) -> (&Expr, Vec<&Expr>) {
        let mut args = Vec::new();
        let mut head = self;
        while let Expr::App(f, x) = head {
            args.push(&**x);
            head = f;
        }
        args.reverse();
        (head, args)
    }

    /// Number of leaves (Prim, Var, LibRef, ListHead).
    pub fn leaf_count(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |e| {
            if !matches!(e, Expr::App(..)) {
                n += 1;
            }
        });
        n
    }

    /// Pre-order traversal, function before argument.
    pub fn visit<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        f(self);
        if let Expr::App(g, x) = self {
            g.visit(f);
            x.visit(f);
        }
    }

    /// Largest variable index + 1, or 0 if the term is closed.
    pub fn var_bound(&self) -> usize {
        let mut bound = 0;
        self.visit(&mut |e| {
            if let Expr::Var(i) = e {
                bound = bound.max(i + 1);
            }
        });
        bound
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Prim(name) | Expr::LibRef(name) => f.write_str(name),
            Expr::Var(i) => write!(f, "#{i}"),
            Expr::ListHead => f.write_str(LIST_KEYWORD),
            Expr::App(..) => {
                let (head, args) = self.spine();
                write!(f, "({head}")?;
                for arg in args {
                    write!(f, " {arg}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// Renders a term with the application spine flattened: `(list S HZ H)`.
pub fn print(expr: &Expr) -> String {
    expr.to_string()
}

/// Parses an s-expression program. Applications are left-associative, so
/// `((list A B) C)` and `(list A B C)` denote the same term. Atoms resolve to
/// `list`, `#k` variables, learned function names, then base primitives.
///
/// Terms that place a list-valued subterm in element position (nested lists)
/// or apply a primitive like a function are rejected.
pub fn parse(text: &str, library: &Library) -> Result<Expr, LangError> {
    let mut parser = Parser {
        text,
        pos: 0,
        library,
    };
    parser.skip_ws();
    if parser.pos == text.len() {
        return Err(LangError::EmptyInput);
    }
    let expr = parser.term()?;
    parser.skip_ws();
    if parser.pos != text.len() {
        return Err(if text[parser.pos..].starts_with(')') {
            LangError::Unbalanced(parser.pos)
        } else {
            LangError::TrailingInput(parser.pos)
        });
    }
    semantics::check_structure(&expr, library)?;
    Ok(expr)
}

struct Parser<'a> {
    text: &'a str,
    pos: usize,
    library: &'a Library,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        let rest = &self.text[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn term(&mut self) -> Result<Expr, LangError> {
        self.skip_ws();
        let rest = &self.text[self.pos..];
        match rest.chars().next() {
            None => Err(LangError::Unbalanced(self.pos)),
            Some(')') => Err(LangError::Unbalanced(self.pos)),
            Some('(') => {
                let open = self.pos;
                self.pos += 1;
                let mut items = Vec::new();
                loop {
                    self.skip_ws();
                    match self.text[self.pos..].chars().next() {
                        None => return Err(LangError::Unbalanced(open)),
                        Some(')') => {
                            self.pos += 1;
                            break;
                        }
                        Some(_) => items.push(self.term()?),
                    }
                }
                let mut items = items.into_iter();
                let head = items.next().ok_or(LangError::EmptyInput)?;
                Ok(Expr::apply(head, items))
            }
            Some(_) => {
                let len = rest
                    .find(|c: char| c.is_whitespace() || c == '(' || c == ')')
                    .unwrap_or(rest.len());
                let atom = &rest[..len];
                self.pos += len;
                self.atom(atom)
            }
        }
    }

    fn atom(&self, atom: &str) -> Result<Expr, LangError> {
        if atom == LIST_KEYWORD {
            return Ok(Expr::ListHead);
        }
        if let Some(digits) = atom.strip_prefix('#') {
            return digits
                .parse::<usize>()
                .map(Expr::Var)
                .map_err(|_| LangError::UnknownAtom(atom.to_string()));
        }
        if self.library.function_index(atom).is_some() {
            return Ok(Expr::LibRef(atom.to_string()));
        }
        if self.library.base().contains(atom) {
            return Ok(Expr::Prim(atom.to_string()));
        }
        Err(LangError::UnknownAtom(atom.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{Abstraction, PrimitiveAlphabet};

    fn toy_library() -> Library {
        let mut lib = Library::new(PrimitiveAlphabet::standard());
        let fn0 = parse("(list S HZ)", &lib).unwrap();
        lib.push(Abstraction::new("fn_0", 0, fn0)).unwrap();
        let fn1 = parse("(fn_0 H H)", &lib).unwrap();
        lib.push(Abstraction::new("fn_1", 0, fn1)).unwrap();
        lib
    }

    #[test]
    fn parses_flat_list_as_left_spine() {
        let lib = Library::new(PrimitiveAlphabet::standard());
        let e = parse("(list D HZT SP N)", &lib).unwrap();
        let expected = Expr::app(
            Expr::app(
                Expr::app(Expr::app(Expr::ListHead, Expr::prim("D")), Expr::prim("HZT")),
                Expr::prim("SP"),
            ),
            Expr::prim("N"),
        );
        assert_eq!(e, expected);
        assert_eq!(e, Expr::list(["D", "HZT", "SP", "N"]));
    }

    #[test]
    fn single_atom_and_library_reference() {
        let lib = toy_library();
        assert_eq!(parse("H", &lib).unwrap(), Expr::prim("H"));
        assert_eq!(parse("  fn_1 ", &lib).unwrap(), Expr::lib_ref("fn_1"));
        let e = parse("(fn_0 H H H)", &lib).unwrap();
        assert_eq!(
            e,
            Expr::apply(Expr::lib_ref("fn_0"), ["H", "H", "H"].map(Expr::prim))
        );
    }

    #[test]
    fn redundant_parentheses_flatten() {
        let lib = Library::new(PrimitiveAlphabet::standard());
        let a = parse("((list S HZ) H)", &lib).unwrap();
        let b = parse("(list S HZ H)", &lib).unwrap();
        assert_eq!(a, b);
        assert_eq!(print(&a), "(list S HZ H)");
        assert_eq!(parse("(H)", &lib).unwrap(), Expr::prim("H"));
    }

    #[test]
    fn printing_matches_program_listings() {
        let lib = toy_library();
        for text in ["(list S HZ H H)", "(fn_1 H)", "(fn_0 SP SWG)", "fn_1", "T"] {
            assert_eq!(print(&parse(text, &lib).unwrap()), text);
        }
        assert_eq!(
            print(&Expr::app(Expr::lib_ref("fn_1"), Expr::prim("H"))),
            "(fn_1 H)"
        );
        assert_eq!(print(&Expr::prim("T")), "T");
    }

    #[test]
    fn parse_errors() {
        let lib = toy_library();
        assert_eq!(parse("", &lib), Err(LangError::EmptyInput));
        assert_eq!(parse("   ", &lib), Err(LangError::EmptyInput));
        assert_eq!(parse("()", &lib), Err(LangError::EmptyInput));
        assert_eq!(parse("(list S", &lib), Err(LangError::Unbalanced(0)));
        assert_eq!(parse("(list S))", &lib), Err(LangError::Unbalanced(8)));
        assert_eq!(parse("H S", &lib), Err(LangError::TrailingInput(2)));
        assert_eq!(
            parse("(list XX)", &lib),
            Err(LangError::UnknownAtom("XX".into()))
        );
        assert_eq!(parse("#x", &lib), Err(LangError::UnknownAtom("#x".into())));
    }

    #[test]
    fn nested_lists_are_rejected() {
        let lib = toy_library();
        assert_eq!(parse("(list H (list S))", &lib), Err(LangError::NestedList));
        assert_eq!(parse("(list H fn_0)", &lib), Err(LangError::NestedList));
        assert_eq!(
            parse("(H S)", &lib),
            Err(LangError::PrimitiveHead("H".into()))
        );
    }

    #[test]
    fn variables_parse_and_print() {
        let lib = toy_library();
        let e = parse("(#0 S HZ H)", &lib).unwrap();
        assert_eq!(e.var_bound(), 1);
        assert_eq!(print(&e), "(#0 S HZ H)");
        assert_eq!(e.leaf_count(), 4);
    }
}
