//! RDF terms, triples and documents with a small line-based text format.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize)]
pub struct Variable(pub String);

impl Variable {
    pub fn new(name: impl Into<String>) -> Self {
        Variable(name.into())
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "?{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize)]
pub enum Term {
    Iri(String),
    Literal(String),
    Blank(String),
    Var(Variable),
}

impl Term {
    pub fn iri(s: impl Into<String>) -> Self {
        Term::Iri(s.into())
    }

    pub fn lit(s: impl Into<String>) -> Self {
        Term::Literal(s.into())
    }

    pub fn var(s: impl Into<String>) -> Self {
        Term::Var(Variable::new(s))
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    pub fn as_var(&self) -> Option<&Variable> {
        match self {
            Term::Var(v) => Some(v),
            _ => None,
        }
    }

    /// Allowed in a subject slot (B ∪ I, plus variables in patterns).
    pub fn subject_ok(&self) -> bool {
        !matches!(self, Term::Literal(_))
    }

    /// Allowed in a predicate slot (I, plus variables in patterns).
    pub fn predicate_ok(&self) -> bool {
        matches!(self, Term::Iri(_) | Term::Var(_))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Iri(s) => write!(f, "{s}"),
            Term::Literal(s) => write!(f, "\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\"")),
            Term::Blank(s) => write!(f, "_:{s}"),
            Term::Var(v) => write!(f, "{v}"),
        }
    }
}

/// A ground triple; constructed only through [`Triple::new`], which checks slot kinds.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triple {
    s: Term,
    p: Term,
    o: Term,
}

impl Triple {
    pub fn new(s: Term, p: Term, o: Term) -> Result<Self> {
        let t = Triple { s, p, o };
        if t.s.is_var() || t.p.is_var() || t.o.is_var() || !t.s.subject_ok() || !t.p.predicate_ok() {
            return Err(Error::Kind(format!("invalid triple {t}")));
        }
        Ok(t)
    }

    pub fn subject(&self) -> &Term {
        &self.s
    }

    pub fn predicate(&self) -> &Term {
        &self.p
    }

    pub fn object(&self) -> &Term {
        &self.o
    }

    pub fn terms(&self) -> [&Term; 3] {
        [&self.s, &self.p, &self.o]
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.s, self.p, self.o)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Document {
    triples: BTreeSet<Triple>,
}

impl Document {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, t: Triple) -> bool {
        self.triples.insert(t)
    }

    pub fn contains(&self, t: &Triple) -> bool {
        self.triples.contains(t)
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Triple> {
        self.triples.iter()
    }
}

impl FromIterator<Triple> for Document {
    fn from_iter<I: IntoIterator<Item = Triple>>(iter: I) -> Self {
        Document { triples: iter.into_iter().collect() }
    }
}

impl fmt::Display for Document {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for t in &self.triples {
            writeln!(f, "{t}")?;
        }
        Ok(())
    }
}

/// Shared lexer for every text format in the crate.
pub(crate) mod lex {
    use crate::error::{Error, Result};

    #[derive(Debug, Clone, PartialEq, Eq)]
    pub enum Tok {
        Ident(String),
        Var(String),
        Str(String),
        Blank(String),
        Sym(&'static str),
    }

    const SYMS: [&str; 14] = ["<-", "->", "&&", "||", "(", ")", ",", "=", "!", ".", ";", "{", "}", "*"];

    fn ident_char(c: char) -> bool {
        c.is_alphanumeric() || matches!(c, '_' | '-' | '/' | '#' | '@' | '+' | ':')
    }

    pub fn tokenize(src: &str, line: usize) -> Result<Vec<Tok>> {
        let chars: Vec<char> = src.chars().collect();
        let mut i = 0;
        let mut out = Vec::new();
        let err = |msg: String| Error::Syntax { line, msg };
        while i < chars.len() {
            let c = chars[i];
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            if c == '"' || c == '\'' {
                let quote = c;
                let mut s = String::new();
                i += 1;
                loop {
                    match chars.get(i) {
                        None => return Err(err("unterminated string".into())),
                        Some('\\') => {
                            match chars.get(i + 1) {
                                Some(&e) => s.push(e),
                                None => return Err(err("unterminated string".into())),
                            }
                            i += 2;
                        }
                        Some(&q) if q == quote => {
                            i += 1;
                            break;
                        }
                        Some(&ch) => {
                            s.push(ch);
                            i += 1;
                        }
                    }
                }
                out.push(Tok::Str(s));
                continue;
            }
            if c == '?' {
                let start = i + 1;
                i = start;
                while i < chars.len() && ident_char(chars[i]) {
                    i += 1;
                }
                if i == start {
                    return Err(err("empty variable name".into()));
                }
                out.push(Tok::Var(chars[start..i].iter().collect()));
                continue;
            }
            if c == '_' && chars.get(i + 1) == Some(&':') {
                let start = i + 2;
                i = start;
                while i < chars.len() && ident_char(chars[i]) {
                    i += 1;
                }
                if i == start {
                    return Err(err("empty blank node label".into()));
                }
                out.push(Tok::Blank(chars[start..i].iter().collect()));
                continue;
            }
            if ident_char(c) && !(c == '-' && chars.get(i + 1) == Some(&'>')) {
                let start = i;
                while i < chars.len() && ident_char(chars[i]) {
                    if chars[i] == '-' && chars.get(i + 1) == Some(&'>') {
                        break;
                    }
                    i += 1;
                }
                out.push(Tok::Ident(chars[start..i].iter().collect()));
                continue;
            }
            let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
            match SYMS.iter().find(|s| rest.starts_with(**s)) {
                Some(s) => {
                    out.push(Tok::Sym(s));
                    i += s.chars().count();
                }
                None => return Err(err(format!("unexpected character '{c}'"))),
            }
        }
        Ok(out)
    }

    /// Cursor over a token list.
    pub struct Cursor {
        pub toks: Vec<Tok>,
        lines: Vec<usize>,
        pub pos: usize,
        line: usize,
    }

    impl Cursor {
        pub fn new(toks: Vec<Tok>, line: usize) -> Self {
            let lines = vec![line; toks.len()];
            Cursor { toks, lines, pos: 0, line }
        }

        /// Tokenizes a multi-line text, dropping `#` comments.
        pub fn from_text(text: &str) -> Result<Self> {
            let mut toks = Vec::new();
            let mut lines = Vec::new();
            let mut last = 1;
            for (i, raw) in text.lines().enumerate() {
                let ts = tokenize(super::strip_comment(raw), i + 1)?;
                lines.extend(std::iter::repeat(i + 1).take(ts.len()));
                toks.extend(ts);
                last = i + 1;
            }
            Ok(Cursor { toks, lines, pos: 0, line: last })
        }

        pub fn current_line(&self) -> usize {
            self.lines.get(self.pos).copied().unwrap_or(self.line)
        }

        pub fn peek(&self) -> Option<&Tok> {
            self.toks.get(self.pos)
        }

        pub fn next(&mut self) -> Option<Tok> {
            let t = self.toks.get(self.pos).cloned();
            self.pos += 1;
            t
        }

        pub fn at_end(&self) -> bool {
            self.pos >= self.toks.len()
        }

        pub fn err(&self, msg: impl Into<String>) -> Error {
            Error::Syntax { line: self.current_line(), msg: msg.into() }
        }

        pub fn is_sym(&self, s: &str) -> bool {
            matches!(self.peek(), Some(Tok::Sym(x)) if *x == s)
        }

        pub fn is_kw(&self, kw: &str) -> bool {
            matches!(self.peek(), Some(Tok::Ident(x)) if x == kw)
        }

        pub fn eat_sym(&mut self, s: &str) -> bool {
            if self.is_sym(s) {
                self.pos += 1;
                true
            } else {
                false
            }
        }

        pub fn expect_sym(&mut self, s: &str) -> Result<()> {
            if self.eat_sym(s) {
                Ok(())
            } else {
                Err(self.err(format!("expected '{s}', found {}", self.describe())))
            }
        }

        pub fn describe(&self) -> String {
            match self.peek() {
                None => "end of input".into(),
                Some(Tok::Ident(s)) => format!("'{s}'"),
                Some(Tok::Var(s)) => format!("'?{s}'"),
                Some(Tok::Str(s)) => format!("\"{s}\""),
                Some(Tok::Blank(s)) => format!("'_:{s}'"),
                Some(Tok::Sym(s)) => format!("'{s}'"),
            }
        }
    }
}

/// Parses a term token: bare tokens are IRIs, quoted strings literals.
pub(crate) fn term_from_tok(t: &lex::Tok) -> Option<Term> {
    match t {
        lex::Tok::Ident(s) => Some(Term::Iri(s.clone())),
        lex::Tok::Str(s) => Some(Term::Literal(s.clone())),
        lex::Tok::Blank(s) => Some(Term::Blank(s.clone())),
        lex::Tok::Var(s) => Some(Term::var(s.clone())),
        lex::Tok::Sym(_) => None,
    }
}

/// Parses `(s, p, o)` with any term kinds; the caller checks kinds.
pub(crate) fn parse_term_triple(c: &mut lex::Cursor) -> Result<[Term; 3]> {
    c.expect_sym("(")?;
    let mut out = Vec::with_capacity(3);
    for i in 0..3 {
        let tok = c.next().ok_or_else(|| c.err("unexpected end of input in triple"))?;
        let term = term_from_tok(&tok).ok_or_else(|| c.err(format!("expected a term, found {tok:?}")))?;
        out.push(term);
        if i < 2 {
            c.expect_sym(",")?;
        }
    }
    c.expect_sym(")")?;
    Ok([out[0].clone(), out[1].clone(), out[2].clone()])
}

pub fn strip_comment(line: &str) -> &str {
    let mut in_str: Option<char> = None;
    for (i, ch) in line.char_indices() {
        match in_str {
            Some(q) if ch == q => in_str = None,
            Some(_) => {}
            None if ch == '"' || ch == '\'' => in_str = Some(ch),
            None if ch == '#' && (i == 0 || line[..i].trim().is_empty() || line[..i].ends_with(char::is_whitespace)) => {
                return &line[..i]
            }
            None => {}
        }
    }
    line
}

pub fn parse_document(text: &str) -> Result<Document> {
    let mut doc = Document::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = strip_comment(raw).trim();
        if body.is_empty() {
            continue;
        }
        let mut c = lex::Cursor::new(lex::tokenize(body, line)?, line);
        let [s, p, o] = parse_term_triple(&mut c)?;
        if !c.at_end() {
            return Err(c.err(format!("trailing input {}", c.describe())));
        }
        let t = Triple::new(s, p, o).map_err(|e| match e {
            Error::Kind(m) => Error::Kind(format!("line {line}: {m}")),
            other => other,
        })?;
        doc.insert(t);
    }
    Ok(doc)
}

pub fn serialize_document(d: &Document) -> String {
    d.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_single_triple() {
        let d = parse_document("(0, c, 1)").unwrap();
        let t = Triple::new(Term::iri("0"), Term::iri("c"), Term::iri("1")).unwrap();
        assert_eq!(d.len(), 1);
        assert!(d.contains(&t));
    }

    #[test]
    fn empty_and_duplicates() {
        assert!(parse_document("").unwrap().is_empty());
        let d = parse_document("(a, b, 1)\n# note\n(a,b,1)\n").unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(serialize_document(&d), "(a, b, 1)\n");
        assert_eq!(serialize_document(&Document::new()), "");
    }

    #[test]
    fn kind_errors() {
        assert!(matches!(parse_document("(\"l\", b, c)"), Err(Error::Kind(_))));
        assert!(matches!(parse_document("(a, _:b, c)"), Err(Error::Kind(_))));
        assert!(matches!(parse_document("(a, b, ?c)"), Err(Error::Kind(_))));
        assert!(matches!(parse_document("(a, b c)"), Err(Error::Syntax { line: 1, .. })));
    }

    #[test]
    fn literal_escapes_round_trip() {
        let d = parse_document(r#"(_:x, p, "say \"hi\" # not a comment")"#).unwrap();
        assert_eq!(parse_document(&serialize_document(&d)).unwrap(), d);
    }
}
