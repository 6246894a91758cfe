use std::collections::BTreeMap;
use std::fmt::Write;

use super::eno::ns;
use super::{Datatype, EventPlotGraph, GraphError, Iri, Literal, Term, Triple};

pub(crate) fn escape_string(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '"' => out.push_str("\\\""),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if c.is_control() => {
                let _ = write!(out, "\\u{:04X}", c as u32);
            }
            c => out.push(c),
        }
    }
    out
}

fn is_local_name(s: &str) -> bool {
    !s.is_empty()
        && !s.starts_with('-')
        && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

fn write_iri(out: &mut String, iri: &Iri) {
    let best = ns::PREFIXES
        .iter()
        .filter(|(_, base)| iri.as_str().starts_with(base))
        .max_by_key(|(_, base)| base.len());
    if let Some((prefix, base)) = best {
        let local = &iri.as_str()[base.len()..];
        if is_local_name(local) {
            let _ = write!(out, "{prefix}:{local}");
            return;
        }
    }
    let _ = write!(out, "<{iri}>");
}

fn write_term(out: &mut String, t: &Term) {
    match t {
        Term::Iri(i) => write_iri(out, i),
        Term::Literal(l) => {
            let _ = write!(out, "\"{}\"", escape_string(l.lexical()));
            if l.datatype() == Datatype::DateTime {
                out.push_str("^^xsd:dateTime");
            }
        }
    }
}

/// Canonical Turtle: subjects, then predicates within a subject, then
/// objects within a predicate, each in term order.
pub fn serialize_turtle(g: &EventPlotGraph) -> String {
    let mut out = String::new();
    for (prefix, base) in ns::PREFIXES {
        let _ = writeln!(out, "@prefix {prefix}: <{base}> .");
    }
    let rdf_type = ns::rdf_type();
    let mut grouped: BTreeMap<&Iri, BTreeMap<&Iri, Vec<&Term>>> = BTreeMap::new();
    for t in g.iter() {
        grouped.entry(&t.s).or_default().entry(&t.p).or_default().push(&t.o);
    }
    for (s, preds) in grouped {
        out.push('\n');
        write_iri(&mut out, s);
        let n = preds.len();
        for (i, (p, objs)) in preds.into_iter().enumerate() {
            out.push_str("\n    ");
            if *p == rdf_type {
                out.push('a');
            } else {
                write_iri(&mut out, p);
            }
            out.push(' ');
            for (j, o) in objs.iter().enumerate() {
                if j > 0 {
                    out.push_str(", ");
                }
                write_term(&mut out, o);
            }
            out.push_str(if i + 1 == n { " .\n" } else { " ;" });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Prefix,
    IriRef(String),
    PName(String, String),
    A,
    Str(String),
    Carets,
    Dot,
    Semi,
    Comma,
    Eof,
}

struct Lexer<'a> {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    col: usize,
    _src: &'a str,
}

type Positioned = (Tok, usize, usize);

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Self {
            chars: src.chars().collect(),
            pos: 0,
            line: 1,
            col: 1,
            _src: src,
        }
    }

    fn err(line: usize, column: usize, message: impl Into<String>) -> GraphError {
        GraphError::TurtleSyntax {
            line,
            column,
            message: message.into(),
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn skip_trivia(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.bump();
            } else if c == '#' {
                while let Some(c) = self.peek() {
                    if c == '\n' {
                        break;
                    }
                    self.bump();
                }
            } else {
                break;
            }
        }
    }

    fn next(&mut self) -> Result<Positioned, GraphError> {
        self.skip_trivia();
        let (line, col) = (self.line, self.col);
        let Some(c) = self.peek() else {
            return Ok((Tok::Eof, line, col));
        };
        let tok = match c {
            '.' => {
                self.bump();
                Tok::Dot
            }
            ';' => {
                self.bump();
                Tok::Semi
            }
            ',' => {
                self.bump();
                Tok::Comma
            }
            '^' => {
                self.bump();
                if self.bump() != Some('^') {
                    return Err(Self::err(line, col, "expected '^^'"));
                }
                Tok::Carets
            }
            '<' => {
                self.bump();
                let mut s = String::new();
                loop {
                    match self.bump() {
                        Some('>') => break,
                        Some(c) if c.is_whitespace() => return Err(Self::err(line, col, "whitespace inside IRI")),
                        Some(c) => s.push(c),
                        None => return Err(Self::err(line, col, "unterminated IRI")),
                    }
                }
                Tok::IriRef(s)
            }
            '"' => {
                self.bump();
                let mut s = String::new();
                loop {
                    match self.bump() {
                        Some('"') => break,
                        Some('\\') => {
                            let (el, ec) = (self.line, self.col);
                            match self.bump() {
                                Some('"') => s.push('"'),
                                Some('\\') => s.push('\\'),
                                Some('n') => s.push('\n'),
                                Some('r') => s.push('\r'),
                                Some('t') => s.push('\t'),
                                Some('u') => {
                                    let hex: String = (0..4).filter_map(|_| self.bump()).collect();
                                    let ch = u32::from_str_radix(&hex, 16)
                                        .ok()
                                        .and_then(char::from_u32)
                                        .ok_or_else(|| Self::err(el, ec, "bad \\u escape"))?;
                                    s.push(ch);
                                }
                                _ => return Err(Self::err(el, ec, "unknown escape sequence")),
                            }
                        }
                        Some('\n') | None => return Err(Self::err(line, col, "unterminated string literal")),
                        Some(c) => s.push(c),
                    }
                }
                if self.peek() == Some('@') {
                    return Err(Self::err(self.line, self.col, "language tags are not supported"));
                }
                Tok::Str(s)
            }
            '@' => {
                self.bump();
                let word = self.word();
                if word != "prefix" {
                    return Err(Self::err(line, col, format!("unsupported directive @{word}")));
                }
                Tok::Prefix
            }
            c if c.is_alphabetic() || c == ':' || c == '_' => {
                let word = self.word();
                match word.split_once(':') {
                    Some((p, l)) => Tok::PName(p.to_string(), l.to_string()),
                    None if word == "a" => Tok::A,
                    None => return Err(Self::err(line, col, format!("unexpected word {word:?}"))),
                }
            }
            c => return Err(Self::err(line, col, format!("unexpected character {c:?}"))),
        };
        Ok((tok, line, col))
    }

    /// A run of name characters. A trailing '.' belongs to the statement.
    fn word(&mut self) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek() {
            let continues = c.is_alphanumeric() || matches!(c, '_' | '-' | ':')
                || (c == '.' && self.chars.get(self.pos + 1).is_some_and(|n| n.is_alphanumeric() || *n == '_'));
            if !continues {
                break;
            }
            s.push(c);
            self.bump();
        }
        s
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    look: Positioned,
    prefixes: BTreeMap<String, String>,
}

impl<'a> Parser<'a> {
    fn advance(&mut self) -> Result<Positioned, GraphError> {
        let next = self.lexer.next()?;
        Ok(std::mem::replace(&mut self.look, next))
    }

    fn fail<T>(&self, message: impl Into<String>) -> Result<T, GraphError> {
        Err(Lexer::err(self.look.1, self.look.2, message))
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), GraphError> {
        if self.look.0 == want {
            self.advance()?;
            Ok(())
        } else {
            self.fail(format!("expected {what}, found {:?}", self.look.0))
        }
    }

    fn resolve(&self, tok: &Tok, line: usize, col: usize) -> Result<Iri, GraphError> {
        let text = match tok {
            Tok::IriRef(s) => s.clone(),
            Tok::PName(p, l) => {
                let base = self
                    .prefixes
                    .get(p)
                    .ok_or_else(|| Lexer::err(line, col, format!("undeclared prefix {p:?}")))?;
                format!("{base}{l}")
            }
            Tok::A => return Ok(ns::rdf_type()),
            other => return Err(Lexer::err(line, col, format!("expected an IRI, found {other:?}"))),
        };
        Iri::new(text).map_err(|e| Lexer::err(line, col, e.to_string()))
    }

    fn object(&mut self) -> Result<Term, GraphError> {
        let (tok, line, col) = self.advance()?;
        match tok {
            Tok::Str(s) => {
                if self.look.0 != Tok::Carets {
                    return Ok(Term::Literal(Literal::string(s)));
                }
                self.advance()?;
                let (dt_tok, dl, dc) = self.advance()?;
                let dt = self.resolve(&dt_tok, dl, dc)?;
                let datatype = if dt.as_str() == Datatype::DateTime.iri() {
                    Datatype::DateTime
                } else if dt.as_str() == Datatype::String.iri() {
                    Datatype::String
                } else {
                    return Err(Lexer::err(dl, dc, format!("unsupported datatype {dt}")));
                };
                Literal::typed(s, datatype)
                    .map(Term::Literal)
                    .map_err(|e| Lexer::err(line, col, e.to_string()))
            }
            Tok::A => Err(Lexer::err(line, col, "'a' is only allowed as a predicate")),
            other => self.resolve(&other, line, col).map(Term::Iri),
        }
    }

    fn parse(mut self) -> Result<EventPlotGraph, GraphError> {
        let mut g = EventPlotGraph::new();
        loop {
            match self.look.0.clone() {
                Tok::Eof => return Ok(g),
                Tok::Prefix => {
                    self.advance()?;
                    let (tok, line, col) = self.advance()?;
                    let Tok::PName(prefix, local) = tok else {
                        return Err(Lexer::err(line, col, "expected a prefix name"));
                    };
                    if !local.is_empty() {
                        return Err(Lexer::err(line, col, "prefix name must end with ':'"));
                    }
                    let (tok, line, col) = self.advance()?;
                    let Tok::IriRef(base) = tok else {
                        return Err(Lexer::err(line, col, "expected <namespace IRI>"));
                    };
                    self.prefixes.insert(prefix, base);
                    self.expect(Tok::Dot, "'.'")?;
                }
                Tok::A => return self.fail("'a' cannot be a subject"),
                _ => {
                    let (tok, line, col) = self.advance()?;
                    let subject = self.resolve(&tok, line, col)?;
                    loop {
                        let (tok, line, col) = self.advance()?;
                        let pred = self.resolve(&tok, line, col)?;
                        loop {
                            let o = self.object()?;
                            g.insert(Triple::new(subject.clone(), pred.clone(), o));
                            if self.look.0 == Tok::Comma {
                                self.advance()?;
                            } else {
                                break;
                            }
                        }
                        if self.look.0 == Tok::Semi {
                            while self.look.0 == Tok::Semi {
                                self.advance()?;
                            }
                            if self.look.0 == Tok::Dot {
                                break;
                            }
                        } else {
                            break;
                        }
                    }
                    self.expect(Tok::Dot, "'.'")?;
                }
            }
        }
    }
}

/// Parses the Turtle subset written by [`serialize_turtle`]: prefix
/// directives, IRIs, prefixed names, `a`, predicate and object lists, and
/// string or `xsd:dateTime` literals.
pub fn parse_turtle(text: &str) -> Result<EventPlotGraph, GraphError> {
    let mut lexer = Lexer::new(text);
    let look = lexer.next()?;
    Parser {
        lexer,
        look,
        prefixes: BTreeMap::new(),
    }
    .parse()
}
