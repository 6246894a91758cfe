use std::collections::BTreeMap;

use super::{Group, PatternTerm, QueryError, RegexFilter, SelectQuery, TriplePattern};
use crate::graph::{ns, Datatype, Iri, Literal};

const UNSUPPORTED: &[&str] = &[
    "OPTIONAL", "MINUS", "GRAPH", "SERVICE", "BIND", "VALUES", "ORDER", "LIMIT", "OFFSET", "GROUP", "HAVING",
    "CONSTRUCT", "ASK", "DESCRIBE", "INSERT", "DELETE", "FROM", "REDUCED", "NOT", "EXISTS", "BASE", "LOAD", "CLEAR",
];

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Var(String),
    IriRef(String),
    PName(String, String),
    Word(String),
    Str(String),
    Carets,
    LBrace,
    RBrace,
    LParen,
    RParen,
    Dot,
    Comma,
    Semi,
    Star,
    Num(String),
    Eof,
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> QueryError {
    QueryError::QuerySyntax {
        line,
        column,
        message: message.into(),
    }
}

fn lex(text: &str) -> Result<Vec<Spanned>, QueryError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    macro_rules! bump {
        () => {{
            let c = chars[i];
            i += 1;
            if c == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            c
        }};
    }
    let name_char = |c: char| c.is_alphanumeric() || matches!(c, '_' | '-' | ':');
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            bump!();
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                bump!();
            }
            continue;
        }
        let (l, cl) = (line, col);
        let tok = match c {
            '{' => {
                bump!();
                Tok::LBrace
            }
            '}' => {
                bump!();
                Tok::RBrace
            }
            '(' => {
                bump!();
                Tok::LParen
            }
            ')' => {
                bump!();
                Tok::RParen
            }
            '.' => {
                bump!();
                Tok::Dot
            }
            ',' => {
                bump!();
                Tok::Comma
            }
            ';' => {
                bump!();
                Tok::Semi
            }
            '*' => {
                bump!();
                Tok::Star
            }
            '^' if chars.get(i + 1) == Some(&'^') => {
                bump!();
                bump!();
                Tok::Carets
            }
            '^' | '/' | '|' | '+' => return Err(QueryError::UnsupportedFeature("property path".into())),
            '[' | ']' => return Err(QueryError::UnsupportedFeature("blank node".into())),
            '?' | '$' => {
                bump!();
                let mut name = String::new();
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    name.push(bump!());
                }
                if name.is_empty() {
                    return Err(syntax(l, cl, "expected a variable name"));
                }
                Tok::Var(name)
            }
            '<' => {
                bump!();
                let mut s = String::new();
                loop {
                    if i >= chars.len() {
                        return Err(syntax(l, cl, "unterminated IRI"));
                    }
                    let c = bump!();
                    if c == '>' {
                        break;
                    }
                    if c.is_whitespace() {
                        return Err(syntax(l, cl, "whitespace inside IRI"));
                    }
                    s.push(c);
                }
                Tok::IriRef(s)
            }
            '"' | '\'' => {
                let quote = bump!();
                let mut s = String::new();
                loop {
                    if i >= chars.len() {
                        return Err(syntax(l, cl, "unterminated string literal"));
                    }
                    let c = bump!();
                    if c == quote {
                        break;
                    }
                    if c == '\n' {
                        return Err(syntax(l, cl, "unterminated string literal"));
                    }
                    if c == '\\' {
                        if i >= chars.len() {
                            return Err(syntax(l, cl, "unterminated string literal"));
                        }
                        let (el, ec) = (line, col);
                        match bump!() {
                            'n' => s.push('\n'),
                            't' => s.push('\t'),
                            'r' => s.push('\r'),
                            '"' => s.push('"'),
                            '\'' => s.push('\''),
                            '\\' => s.push('\\'),
                            other => return Err(syntax(el, ec, format!("unknown escape \\{other}"))),
                        }
                    } else {
                        s.push(c);
                    }
                }
                if i < chars.len() && chars[i] == '@' {
                    return Err(QueryError::UnsupportedFeature("language-tagged literal".into()));
                }
                Tok::Str(s)
            }
            c if c.is_ascii_digit() => {
                let mut s = String::new();
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    s.push(bump!());
                }
                Tok::Num(s)
            }
            c if name_char(c) => {
                let mut s = String::new();
                while i < chars.len() {
                    let c = chars[i];
                    let dot_inside = c == '.' && s.contains(':') && chars.get(i + 1).is_some_and(|n| n.is_alphanumeric() || *n == '_');
                    if name_char(c) || dot_inside {
                        s.push(bump!());
                    } else {
                        break;
                    }
                }
                if s.starts_with("_:") {
                    return Err(QueryError::UnsupportedFeature("blank node".into()));
                }
                match s.split_once(':') {
                    Some((p, local)) => Tok::PName(p.to_string(), local.to_string()),
                    None => Tok::Word(s),
                }
            }
            other => return Err(syntax(l, cl, format!("unexpected character {other:?}"))),
        };
        out.push(Spanned { tok, line: l, col: cl });
    }
    out.push(Spanned {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    prefixes: BTreeMap<String, String>,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn here(&self) -> (usize, usize) {
        (self.toks[self.pos].line, self.toks[self.pos].col)
    }

    fn next(&mut self) -> Spanned {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, QueryError> {
        let (l, c) = self.here();
        Err(syntax(l, c, message))
    }

    fn is_word(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Word(w) if w.eq_ignore_ascii_case(kw))
    }

    /// Rejects out-of-scope keywords by name before they reach the grammar.
    fn check_unsupported(&self) -> Result<(), QueryError> {
        if let Tok::Word(w) = self.peek() {
            let upper = w.to_ascii_uppercase();
            if UNSUPPORTED.contains(&upper.as_str()) {
                return Err(QueryError::UnsupportedFeature(upper));
            }
        }
        Ok(())
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), QueryError> {
        if *self.peek() == want {
            self.next();
            Ok(())
        } else {
            self.err(format!("expected {what}, found {}", describe(self.peek())))
        }
    }

    fn expect_word(&mut self, kw: &str) -> Result<(), QueryError> {
        self.check_unsupported()?;
        if self.is_word(kw) {
            self.next();
            Ok(())
        } else {
            self.err(format!("expected {kw}, found {}", describe(self.peek())))
        }
    }

    fn iri(&self, tok: &Tok, line: usize, col: usize) -> Result<Iri, QueryError> {
        let text = match tok {
            Tok::IriRef(s) => s.clone(),
            Tok::PName(p, l) => {
                let base = self
                    .prefixes
                    .get(p)
                    .ok_or_else(|| syntax(line, col, format!("undeclared prefix {p:?}")))?;
                format!("{base}{l}")
            }
            _ => return Err(syntax(line, col, format!("expected an IRI, found {}", describe(tok)))),
        };
        Iri::new(text).map_err(|e| syntax(line, col, e.to_string()))
    }

    fn term(&mut self, position: &str) -> Result<PatternTerm, QueryError> {
        self.check_unsupported()?;
        let Spanned { tok, line, col } = self.next();
        match tok {
            Tok::Var(v) => Ok(PatternTerm::Var(v)),
            Tok::IriRef(_) | Tok::PName(..) => self.iri(&tok, line, col).map(PatternTerm::Iri),
            Tok::Word(w) if w == "a" && position == "predicate" => Ok(PatternTerm::Iri(ns::rdf_type())),
            Tok::Str(s) if position == "object" => {
                if *self.peek() != Tok::Carets {
                    return Ok(PatternTerm::Literal(Literal::string(s)));
                }
                self.next();
                let Spanned { tok, line: dl, col: dc } = self.next();
                let dt = self.iri(&tok, dl, dc)?;
                let datatype = match dt.as_str() {
                    s if s == Datatype::DateTime.iri() => Datatype::DateTime,
                    s if s == Datatype::String.iri() => Datatype::String,
                    _ => return Err(QueryError::UnsupportedFeature(format!("datatype {dt}"))),
                };
                Literal::typed(s, datatype)
                    .map(PatternTerm::Literal)
                    .map_err(|e| syntax(line, col, e.to_string()))
            }
            Tok::Str(_) => Err(syntax(line, col, format!("a literal cannot be the {position}"))),
            Tok::Num(_) => Err(QueryError::UnsupportedFeature("numeric literal".into())),
            other => Err(syntax(line, col, format!("expected {position}, found {}", describe(&other)))),
        }
    }

    fn triples(&mut self, out: &mut Vec<TriplePattern>) -> Result<(), QueryError> {
        let s = self.term("subject")?;
        loop {
            let p = self.term("predicate")?;
            loop {
                let o = self.term("object")?;
                out.push(TriplePattern {
                    s: s.clone(),
                    p: p.clone(),
                    o,
                });
                if *self.peek() == Tok::Comma {
                    self.next();
                } else {
                    break;
                }
            }
            if *self.peek() != Tok::Semi {
                return Ok(());
            }
            while *self.peek() == Tok::Semi {
                self.next();
            }
            if matches!(self.peek(), Tok::Dot | Tok::RBrace) {
                return Ok(());
            }
        }
    }

    fn filter(&mut self) -> Result<RegexFilter, QueryError> {
        self.expect_word("FILTER")?;
        let wrapped = *self.peek() == Tok::LParen;
        if wrapped {
            self.next();
        }
        match self.peek() {
            Tok::Word(w) if w.eq_ignore_ascii_case("regex") => {
                self.next();
            }
            Tok::Word(w) => return Err(QueryError::UnsupportedFeature(format!("FILTER {}", w.to_ascii_uppercase()))),
            _ => return Err(QueryError::UnsupportedFeature("FILTER expression other than regex".into())),
        }
        self.expect(Tok::LParen, "'('")?;
        let variable = if self.is_word("str") {
            self.next();
            self.expect(Tok::LParen, "'('")?;
            let v = self.variable()?;
            self.expect(Tok::RParen, "')'")?;
            v
        } else {
            self.variable()?
        };
        self.expect(Tok::Comma, "','")?;
        let (pl, pc) = self.here();
        let Tok::Str(pattern) = self.next().tok else {
            return Err(syntax(pl, pc, "expected a regex string"));
        };
        let mut case_insensitive = true;
        if *self.peek() == Tok::Comma {
            self.next();
            let Tok::Str(flags) = self.next().tok else {
                return self.err("expected a flags string");
            };
            if let Some(bad) = flags.chars().find(|c| !matches!(c, 'i' | 's' | 'm' | 'x')) {
                return Err(QueryError::UnsupportedFeature(format!("regex flag {bad:?}")));
            }
            case_insensitive = flags.contains('i');
        }
        self.expect(Tok::RParen, "')'")?;
        if wrapped {
            self.expect(Tok::RParen, "')'")?;
        }
        RegexFilter::new(&variable, &pattern, case_insensitive)
    }

    fn variable(&mut self) -> Result<String, QueryError> {
        match self.next() {
            Spanned { tok: Tok::Var(v), .. } => Ok(v),
            Spanned { tok, line, col } => Err(syntax(line, col, format!("expected a variable, found {}", describe(&tok)))),
        }
    }

    /// Contents of a UNION alternative: patterns and filters, no nesting.
    fn group(&mut self) -> Result<Group, QueryError> {
        self.expect(Tok::LBrace, "'{'")?;
        let mut g = Group::default();
        loop {
            self.check_unsupported()?;
            match self.peek() {
                Tok::RBrace => {
                    self.next();
                    return Ok(g);
                }
                Tok::Dot => {
                    self.next();
                }
                Tok::LBrace => return Err(QueryError::UnsupportedFeature("nested group pattern".into())),
                Tok::Eof => return self.err("expected '}'"),
                _ if self.is_word("FILTER") => g.filters.push(self.filter()?),
                _ => self.triples(&mut g.patterns)?,
            }
        }
    }

    fn query(mut self) -> Result<SelectQuery, QueryError> {
        while self.is_word("PREFIX") {
            self.next();
            let Spanned { tok, line, col } = self.next();
            let Tok::PName(prefix, local) = tok else {
                return Err(syntax(line, col, "expected a prefix name such as narr:"));
            };
            if !local.is_empty() {
                return Err(syntax(line, col, "prefix name must end with ':'"));
            }
            let Spanned { tok, line, col } = self.next();
            let Tok::IriRef(base) = tok else {
                return Err(syntax(line, col, "expected <namespace IRI>"));
            };
            self.prefixes.insert(prefix, base);
        }
        self.expect_word("SELECT")?;
        let distinct = self.is_word("DISTINCT");
        if distinct {
            self.next();
        }
        self.check_unsupported()?;
        let mut projection = Vec::new();
        let mut star = false;
        if *self.peek() == Tok::Star {
            self.next();
            star = true;
        } else {
            while let Tok::Var(v) = self.peek().clone() {
                self.next();
                if !projection.contains(&v) {
                    projection.push(v);
                }
            }
            if projection.is_empty() {
                return self.err("expected projected variables or '*'");
            }
        }
        if self.is_word("WHERE") {
            self.next();
        }
        self.check_unsupported()?;
        self.expect(Tok::LBrace, "'{'")?;

        let mut patterns = Vec::new();
        let mut filters = Vec::new();
        let mut union: Option<Vec<Group>> = None;
        loop {
            self.check_unsupported()?;
            match self.peek() {
                Tok::RBrace => {
                    self.next();
                    break;
                }
                Tok::Dot => {
                    self.next();
                }
                Tok::Eof => return self.err("expected '}'"),
                Tok::LBrace => {
                    if union.is_some() {
                        return Err(QueryError::UnsupportedFeature("more than one UNION block".into()));
                    }
                    let mut groups = vec![self.group()?];
                    while self.is_word("UNION") {
                        self.next();
                        groups.push(self.group()?);
                    }
                    union = Some(groups);
                }
                _ if self.is_word("UNION") => return self.err("UNION must follow a '{ ... }' group"),
                _ if self.is_word("FILTER") => filters.push(self.filter()?),
                _ => self.triples(&mut patterns)?,
            }
        }
        self.check_unsupported()?;
        if *self.peek() != Tok::Eof {
            return self.err(format!("unexpected {} after the query", describe(self.peek())));
        }

        let mut q = SelectQuery {
            distinct,
            projection,
            patterns,
            filters,
            union,
        };
        let vars = q.variables();
        if vars.is_empty() && q.patterns.is_empty() && q.union.iter().flatten().all(|g| g.patterns.is_empty()) {
            return Err(syntax(1, 1, "WHERE clause has no triple patterns"));
        }
        if star {
            q.projection = vars;
        } else if let Some(v) = q.projection.iter().find(|v| !vars.contains(v)) {
            return Err(syntax(1, 1, format!("projected variable ?{v} is not bound by any pattern")));
        }
        Ok(q)
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Var(v) => format!("?{v}"),
        Tok::IriRef(s) => format!("<{s}>"),
        Tok::PName(p, l) => format!("{p}:{l}"),
        Tok::Word(w) => format!("'{w}'"),
        Tok::Str(s) => format!("{s:?}"),
        Tok::Carets => "'^^'".into(),
        Tok::LBrace => "'{'".into(),
        Tok::RBrace => "'}'".into(),
        Tok::LParen => "'('".into(),
        Tok::RParen => "')'".into(),
        Tok::Dot => "'.'".into(),
        Tok::Comma => "','".into(),
        Tok::Semi => "';'".into(),
        Tok::Star => "'*'".into(),
        Tok::Num(n) => n.clone(),
        Tok::Eof => "end of input".into(),
    }
}

/// Parses a SELECT query. The `epg:`, `narr:`, `rdf:`, `rdfs:` and `xsd:`
/// prefixes are predeclared; PREFIX lines may add or override them.
pub fn parse_query(text: &str) -> Result<SelectQuery, QueryError> {
    let toks = lex(text)?;
    let prefixes = ns::PREFIXES.iter().map(|(p, b)| (p.to_string(), b.to_string())).collect();
    Parser {
        toks,
        pos: 0,
        prefixes,
    }
    .query()
}
