//! Text syntax for pattern declarations and queries.
//!
//! ```text
//! pattern p1 {
//!   vertex s: SHSService;
//!   vertex pr: Probe [status = "sepsis"];
//!   edge e: invokes(s -> pm);
//!   forbid { vertex i: Issue; edge a: annotates(i -> pm); }
//! }
//! query phi1 = p1, !(E<0,3600> p1_2)
//! ```

use std::fmt::{self, Write as _};

use super::ast::{Mtgc, OpInterval, Query, QueryFile};
use crate::model::pattern::{AttrRhs, EdgeDecl, PatternDecl, VertexDecl};
use crate::model::Value;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{line}:{col}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Str(String),
    Int(i64),
    /// `U<`, `S<`, `E<`, `O<`
    Op(char),
    Sym(&'static str),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Str(s) => write!(f, "{s:?}"),
            Tok::Int(i) => write!(f, "`{i}`"),
            Tok::Op(c) => write!(f, "`{c}<`"),
            Tok::Sym(s) => write!(f, "`{s}`"),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

const SYMS: &[&str] = &["->", "{", "}", "[", "]", "(", ")", ";", ":", ",", "=", "!", "&", "<", ">", "."];

fn lex(src: &str) -> Result<Vec<(Tok, usize, usize)>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let mut out = Vec::new();
    let err = |line, col, m: String| ParseError { line, col, message: m };
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' || (c == '/' && chars.get(i + 1) == Some(&'/')) {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let (l0, c0) = (line, col);
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            col += i - start;
            if matches!(word.as_str(), "U" | "S" | "E" | "O") && chars.get(i) == Some(&'<') {
                i += 1;
                col += 1;
                out.push((Tok::Op(word.chars().next().unwrap()), l0, c0));
            } else {
                out.push((Tok::Ident(word), l0, c0));
            }
            continue;
        }
        if c.is_ascii_digit() || (c == '-' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            i += 1;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            col += i - start;
            let v = text.parse().map_err(|_| err(l0, c0, format!("integer `{text}` out of range")))?;
            out.push((Tok::Int(v), l0, c0));
            continue;
        }
        if c == '"' {
            let mut s = String::new();
            i += 1;
            col += 1;
            loop {
                match chars.get(i) {
                    None | Some('\n') => return Err(err(l0, c0, "unterminated string".into())),
                    Some('"') => break,
                    Some('\\') if chars.get(i + 1).is_some() => {
                        s.push(chars[i + 1]);
                        i += 2;
                        col += 2;
                    }
                    Some(ch) => {
                        s.push(*ch);
                        i += 1;
                        col += 1;
                    }
                }
            }
            i += 1;
            col += 1;
            out.push((Tok::Str(s), l0, c0));
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        match SYMS.iter().find(|s| rest.starts_with(**s)) {
            Some(s) => {
                i += s.len();
                col += s.len();
                out.push((Tok::Sym(s), l0, c0));
            }
            None => return Err(err(l0, c0, format!("unexpected character `{c}`"))),
        }
    }
    out.push((Tok::Eof, line, col));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize, usize)>,
    at: usize,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn peek2(&self) -> &Tok {
        &self.toks[(self.at + 1).min(self.toks.len() - 1)].0
    }

    fn error_here(&self, message: String) -> ParseError {
        let (_, line, col) = self.toks[self.at];
        ParseError { line, col, message }
    }

    fn next(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn eat(&mut self, sym: &str) -> bool {
        if *self.peek() == Tok::Sym(leak(sym)) {
            self.next();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, sym: &str) -> PResult<()> {
        if self.eat(sym) {
            Ok(())
        } else {
            Err(self.error_here(format!("expected `{sym}`, found {}", self.peek())))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.next();
                Ok(s)
            }
            t => Err(self.error_here(format!("expected identifier, found {t}"))),
        }
    }

    fn keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn file(&mut self) -> PResult<QueryFile> {
        let mut file = QueryFile::default();
        loop {
            if self.keyword("pattern") {
                self.next();
                let at = self.at;
                let name = self.ident()?;
                if file.pattern(&name).is_some() {
                    self.at = at;
                    return Err(self.error_here(format!("pattern `{name}` declared twice")));
                }
                self.expect("{")?;
                let mut p = self.pattern_body()?;
                p.name = name;
                file.patterns.push(p);
            } else if self.keyword("query") {
                self.next();
                let at = self.at;
                let name = self.ident()?;
                if file.query(&name).is_some() {
                    self.at = at;
                    return Err(self.error_here(format!("query `{name}` declared twice")));
                }
                self.expect("=")?;
                let start = self.at;
                let root = self.ident()?;
                self.expect(",")?;
                let condition = self.condition()?;
                let q = Query { name, root, condition };
                check_scopes(&file, &q).map_err(|m| {
                    self.at = start;
                    self.error_here(m)
                })?;
                file.queries.push(q);
                self.eat(";");
            } else if *self.peek() == Tok::Eof {
                return Ok(file);
            } else {
                return Err(self.error_here(format!("expected `pattern` or `query`, found {}", self.peek())));
            }
        }
    }

    /// Parses up to and including the closing brace.
    fn pattern_body(&mut self) -> PResult<PatternDecl> {
        let mut p = PatternDecl::default();
        loop {
            if self.eat("}") {
                return Ok(p);
            }
            let kw = self.ident()?;
            match kw.as_str() {
                "vertex" => {
                    let name = self.ident()?;
                    self.expect(":")?;
                    let ty = self.ident()?;
                    let mut constraints = Vec::new();
                    if self.eat("[") {
                        loop {
                            let attr = self.ident()?;
                            self.expect("=")?;
                            let rhs = match self.next() {
                                Tok::Str(s) => AttrRhs::Const(Value::Str(s)),
                                Tok::Int(i) => AttrRhs::Const(Value::Int(i)),
                                Tok::Ident(v) => {
                                    self.expect(".")?;
                                    AttrRhs::Ref { vertex: v, attr: self.ident()? }
                                }
                                t => {
                                    self.at -= 1;
                                    return Err(self.error_here(format!("expected attribute value, found {t}")));
                                }
                            };
                            constraints.push((attr, rhs));
                            if !self.eat(",") {
                                break;
                            }
                        }
                        self.expect("]")?;
                    }
                    p.vertices.push(VertexDecl { name, ty, constraints });
                    self.expect(";")?;
                }
                "edge" => {
                    let name = self.ident()?;
                    self.expect(":")?;
                    let ty = self.ident()?;
                    self.expect("(")?;
                    let source = self.ident()?;
                    self.expect("->")?;
                    let target = self.ident()?;
                    self.expect(")")?;
                    p.edges.push(EdgeDecl { name, ty, source, target });
                    self.expect(";")?;
                }
                "bind" => {
                    loop {
                        p.bind.push(self.ident()?);
                        if !self.eat(",") {
                            break;
                        }
                    }
                    self.expect(";")?;
                }
                "forbid" => {
                    self.expect("{")?;
                    p.forbid.push(self.pattern_body()?);
                    self.eat(";");
                }
                other => {
                    self.at -= 1;
                    return Err(self.error_here(format!("unknown pattern item `{other}`")));
                }
            }
        }
    }

    fn condition(&mut self) -> PResult<Mtgc> {
        let mut c = self.temporal()?;
        while self.eat("&") {
            c = Mtgc::and(c, self.temporal()?);
        }
        Ok(c)
    }

    fn temporal(&mut self) -> PResult<Mtgc> {
        let left = self.unary()?;
        match self.peek() {
            Tok::Op(op @ ('U' | 'S')) => {
                let op = *op;
                self.next();
                let i = self.interval()?;
                let right = self.temporal()?;
                Ok(if op == 'U' { Mtgc::until(i, left, right) } else { Mtgc::since(i, left, right) })
            }
            _ => Ok(left),
        }
    }

    fn unary(&mut self) -> PResult<Mtgc> {
        if self.eat("!") {
            return Ok(Mtgc::not(self.unary()?));
        }
        match self.peek() {
            Tok::Op(op @ ('E' | 'O')) => {
                let op = *op;
                self.next();
                let i = self.interval()?;
                let c = self.unary()?;
                Ok(if op == 'E' { Mtgc::eventually(i, c) } else { Mtgc::once(i, c) })
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> PResult<Mtgc> {
        if self.eat("(") {
            let c = if matches!(self.peek(), Tok::Ident(_)) && *self.peek2() == Tok::Sym(",") {
                let name = self.ident()?;
                self.expect(",")?;
                Mtgc::exists(&name, self.condition()?)
            } else {
                self.condition()?
            };
            self.expect(")")?;
            return Ok(c);
        }
        if self.keyword("TOP") {
            self.next();
            return Ok(Mtgc::Top);
        }
        match self.peek().clone() {
            Tok::Ident(name) => {
                self.next();
                Ok(Mtgc::pattern(&name))
            }
            t => Err(self.error_here(format!("expected condition, found {t}"))),
        }
    }

    /// After the `<` that belongs to the operator token.
    fn interval(&mut self) -> PResult<OpInterval> {
        let start = self.at;
        let bound = |p: &mut Parser| match p.next() {
            Tok::Int(v) if v >= 0 => Ok(v as u64),
            t => {
                p.at -= 1;
                Err(p.error_here(format!("expected non-negative interval bound, found {t}")))
            }
        };
        let lo = bound(self)?;
        self.expect(",")?;
        let hi = bound(self)?;
        self.expect(">")?;
        OpInterval::new(lo, hi).ok_or_else(|| {
            self.at = start;
            self.error_here(format!("empty interval <{lo},{hi}>"))
        })
    }
}

fn leak(sym: &str) -> &'static str {
    SYMS.iter().find(|s| **s == sym).copied().expect("known symbol")
}

/// Checks pattern references, bound vertices and shadowing for every
/// existential in the query.
fn check_scopes(file: &QueryFile, q: &Query) -> Result<(), String> {
    fn walk(file: &QueryFile, c: &Mtgc, scope: &mut Vec<String>) -> Result<(), String> {
        match c {
            Mtgc::Top => Ok(()),
            Mtgc::Exists { pattern, child } => {
                let p = file.pattern(pattern).ok_or_else(|| format!("undeclared pattern `{pattern}`"))?;
                for b in &p.bind {
                    if !scope.contains(b) {
                        return Err(format!(
                            "pattern `{pattern}` binds `{b}`, which is not bound by an enclosing pattern"
                        ));
                    }
                }
                let before = scope.len();
                for v in &p.vertices {
                    if scope.contains(&v.name) {
                        return Err(format!("vertex `{}` of pattern `{pattern}` shadows an enclosing vertex", v.name));
                    }
                    scope.push(v.name.clone());
                }
                let r = walk(file, child, scope);
                scope.truncate(before);
                r
            }
            Mtgc::Not(a) => walk(file, a, scope),
            Mtgc::And(a, b) | Mtgc::Until { left: a, right: b, .. } | Mtgc::Since { left: a, right: b, .. } => {
                walk(file, a, scope)?;
                walk(file, b, scope)
            }
        }
    }
    walk(file, &q.formula(), &mut Vec::new())
}

pub fn parse(src: &str) -> Result<QueryFile, ParseError> {
    let mut p = Parser { toks: lex(src)?, at: 0 };
    p.file()
}

/// Parses a condition on its own, without scope checks.
pub fn parse_condition(src: &str) -> Result<Mtgc, ParseError> {
    let mut p = Parser { toks: lex(src)?, at: 0 };
    let c = p.condition()?;
    if *p.peek() != Tok::Eof {
        return Err(p.error_here(format!("unexpected {}", p.peek())));
    }
    Ok(c)
}

pub fn render_condition(c: &Mtgc) -> String {
    fn wrapped(c: &Mtgc) -> String {
        match c {
            Mtgc::And(..) | Mtgc::Until { .. } | Mtgc::Since { .. } => format!("({})", render_condition(c)),
            _ => render_condition(c),
        }
    }
    match c {
        Mtgc::Top => "TOP".into(),
        Mtgc::Exists { pattern, child } => match **child {
            Mtgc::Top => pattern.clone(),
            _ => format!("({pattern}, {})", render_condition(child)),
        },
        Mtgc::Not(a) => format!("!{}", wrapped(a)),
        Mtgc::And(a, b) => format!("{} & {}", wrapped(a), wrapped(b)),
        Mtgc::Until { interval, left, right } => format!("{} U{interval} {}", wrapped(left), wrapped(right)),
        Mtgc::Since { interval, left, right } => format!("{} S{interval} {}", wrapped(left), wrapped(right)),
    }
}

fn render_pattern_body(p: &PatternDecl, indent: usize, out: &mut String) {
    let pad = " ".repeat(indent);
    if !p.bind.is_empty() {
        let _ = writeln!(out, "{pad}bind {};", p.bind.join(", "));
    }
    for v in &p.vertices {
        let _ = write!(out, "{pad}vertex {}: {}", v.name, v.ty);
        if !v.constraints.is_empty() {
            let cs: Vec<String> = v
                .constraints
                .iter()
                .map(|(a, rhs)| match rhs {
                    AttrRhs::Const(Value::Str(s)) => format!("{a} = {s:?}"),
                    AttrRhs::Const(Value::Int(i)) => format!("{a} = {i}"),
                    AttrRhs::Ref { vertex, attr } => format!("{a} = {vertex}.{attr}"),
                })
                .collect();
            let _ = write!(out, " [{}]", cs.join(", "));
        }
        out.push_str(";\n");
    }
    for e in &p.edges {
        let _ = writeln!(out, "{pad}edge {}: {}({} -> {});", e.name, e.ty, e.source, e.target);
    }
    for f in &p.forbid {
        let _ = writeln!(out, "{pad}forbid {{");
        render_pattern_body(f, indent + 2, out);
        let _ = writeln!(out, "{pad}}}");
    }
}

pub fn render(file: &QueryFile) -> String {
    let mut out = String::new();
    for p in &file.patterns {
        let _ = writeln!(out, "pattern {} {{", p.name);
        render_pattern_body(p, 2, &mut out);
        out.push_str("}\n");
    }
    for q in &file.queries {
        let _ = writeln!(out, "query {} = {}, {}", q.name, q.root, render_condition(&q.condition));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const SHS: &str = r#"
        pattern p1 {
          vertex s: SHSService;
          vertex pm: PMonitoringService;
          vertex pr: Probe [status = "sepsis"];
          edge e1: invokes(s -> pm);
          edge e2: probe(pm -> pr);
          forbid { vertex i: Issue; edge a: annotates(i -> pm); }
        }
        pattern p1_1 { bind s, pm; vertex r: Probe [status = "release"]; edge e: probe(pm -> r); }
        pattern p1_2 {
          bind s, pm;
          vertex d: DrugService [patientID = pm.patientID];
          vertex pa: Probe [status = "antibiotics"];
          edge e3: invokes(s -> d);
          edge e4: probe(d -> pa);
        }
        query phi1 = p1, !(E<0,3600> p1_2)
        query phi2 = p1, !(!p1_1 U<0,3600> p1_2)
    "#;

    fn iv(lo: u64, hi: u64) -> OpInterval {
        OpInterval::new(lo, hi).unwrap()
    }

    #[test]
    fn shs_queries() {
        let f = parse(SHS).unwrap();
        assert_eq!(f.patterns.len(), 3);
        assert_eq!(f.pattern("p1").unwrap().forbid.len(), 1);
        let phi1 = f.query("phi1").unwrap();
        assert_eq!(phi1.root, "p1");
        assert_eq!(phi1.condition, Mtgc::not(Mtgc::eventually(iv(0, 3600), Mtgc::pattern("p1_2"))));
        let phi2 = f.query("phi2").unwrap();
        assert_eq!(
            phi2.condition,
            Mtgc::not(Mtgc::until(iv(0, 3600), Mtgc::not(Mtgc::pattern("p1_1")), Mtgc::pattern("p1_2")))
        );
    }

    #[test]
    fn zeta() {
        let src = "pattern n1 { vertex a: A; } pattern n1_1 { bind a; vertex b: B; } \
                   pattern n1_2 { bind a; vertex c: C; } query zeta = n1, (n1_1 U<0,2> n1_2)";
        let q = parse(src).unwrap().queries.remove(0);
        assert_eq!(q.condition, Mtgc::until(iv(0, 2), Mtgc::pattern("n1_1"), Mtgc::pattern("n1_2")));
    }

    #[test]
    fn errors_carry_positions() {
        let e = parse("pattern a { vertex x: X; }\nquery q = a, E<5,2> a").unwrap_err();
        assert_eq!((e.line, e.message.contains("empty interval")), (2, true));
        let e = parse("pattern a { bind y; vertex x: X; }\nquery q = a, TOP").unwrap_err();
        assert!(e.message.contains("not bound"), "{e}");
        let e = parse("query q = a, TOP").unwrap_err();
        assert!(e.message.contains("undeclared"), "{e}");
        let e = parse("pattern a { vertex x: X; }\nquery q = a, (a, TOP)").unwrap_err();
        assert!(e.message.contains("shadows"), "{e}");
        let e = parse("pattern a { vertex x: X;\n  nonsense }").unwrap_err();
        assert_eq!((e.line, e.col), (2, 3));
        assert!(parse_condition("a & ").is_err());
    }

    #[test]
    fn precedence() {
        let c = parse_condition("!a U<0,1> b & c S<1,2> d").unwrap();
        let want = Mtgc::and(
            Mtgc::until(iv(0, 1), Mtgc::not(Mtgc::pattern("a")), Mtgc::pattern("b")),
            Mtgc::since(iv(1, 2), Mtgc::pattern("c"), Mtgc::pattern("d")),
        );
        assert_eq!(c, want);
        let c = parse_condition("a U<0,1> b U<2,3> c").unwrap();
        assert!(matches!(c, Mtgc::Until { ref right, .. } if matches!(**right, Mtgc::Until { .. })));
    }

    #[test]
    fn render_round_trip() {
        let f = parse(SHS).unwrap();
        assert_eq!(parse(&render(&f)).unwrap(), f);
        for src in ["(a, b & !c) & TOP", "E<0,3> (x, O<1,2> y)", "a & b & c", "a & (b & c)", "!(a S<0,0> b)"] {
            let c = parse_condition(src).unwrap();
            assert_eq!(parse_condition(&render_condition(&c)).unwrap(), c, "{src}");
        }
    }
}
