//! Concrete syntax reader.
//!
//! ```text
//! prog   := stmts
//! stmts  := stmt (';' stmt)* [';']
//! block  := '{' stmts '}'
//! stmt   := 'skip' | 'score' '(' expr ')'
//!         | 'ifz' expr block 'else' block
//!         | 'for' var 'in' 'range' '(' INT ')' block
//!         | 'loop_fixpt_noacc' '(' INT ')' block
//!         | 'extend_index' '(' STR ',' INT ')' block
//!         | 'extended_loop_with_shift' '(' STR ',' INT ')' block
//!         | 'shift' '(' STR ')'
//!         | var ':=' ('fetch' '(' index ')' | 'lookup_index' '(' STR ')' | expr)
//! var    := IDENT [':' ('int' | 'real')]
//! expr   := INT | REAL | var | IDENT '(' expr (',' expr)* ')'
//! index  := '[' [ '(' STR ',' expr ')' (';' '(' STR ',' expr ')')* ] ']'
//! ```
//!
//! Untagged variables are real, except the counter of a `for` loop, which is
//! always an integer. Comments run from `#` to the end of the line.

use crate::ast::{Cmd, Expr, IndexExpr, Tier, Ty, Var};
use crate::error::{Error, Result};
use crate::index::{Index, Name};
use crate::prim::Prim;

pub const GRAMMAR_VERSION: &str = "vl-1";

const KEYWORDS: &[&str] = &[
    "skip",
    "score",
    "fetch",
    "ifz",
    "else",
    "for",
    "in",
    "range",
    "loop_fixpt_noacc",
    "extend_index",
    "lookup_index",
    "shift",
    "extended_loop_with_shift",
    "int",
    "real",
    "inf",
    "NaN",
];

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Real(f64),
    Str(String),
    Sym(&'static str),
    Eof,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(src: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut p, mut line, mut col) = (0usize, 1usize, 1usize);
    let err = |line, col, msg: String| Error::Syntax { line, col, msg };
    while p < chars.len() {
        let c = chars[p];
        let (tl, tc) = (line, col);
        let mut advance = |n: usize, p: &mut usize| {
            for _ in 0..n {
                if chars[*p] == '\n' {
                    line += 1;
                    col = 1;
                } else {
                    col += 1;
                }
                *p += 1;
            }
        };
        if c.is_whitespace() {
            advance(1, &mut p);
            continue;
        }
        if c == '#' {
            while p < chars.len() && chars[p] != '\n' {
                advance(1, &mut p);
            }
            continue;
        }
        let push = |out: &mut Vec<Token>, tok| out.push(Token { tok, line: tl, col: tc });
        if c == ':' && chars.get(p + 1) == Some(&'=') {
            push(&mut out, Tok::Sym(":="));
            advance(2, &mut p);
            continue;
        }
        if let Some(sym) = ["(", ")", "{", "}", "[", "]", ";", ",", ":"].iter().find(|s| s.starts_with(c)) {
            push(&mut out, Tok::Sym(sym));
            advance(1, &mut p);
            continue;
        }
        if c == '"' {
            let mut s = String::new();
            let mut q = p + 1;
            loop {
                match chars.get(q) {
                    None | Some('\n') => return Err(err(tl, tc, "unterminated string".into())),
                    Some('"') => break,
                    Some('\\') => {
                        match chars.get(q + 1) {
                            Some('"') => s.push('"'),
                            Some('\\') => s.push('\\'),
                            Some('n') => s.push('\n'),
                            _ => return Err(err(tl, tc, "bad escape in string".into())),
                        }
                        q += 2;
                    }
                    Some(ch) => {
                        s.push(*ch);
                        q += 1;
                    }
                }
            }
            push(&mut out, Tok::Str(s));
            advance(q + 1 - p, &mut p);
            continue;
        }
        let starts_number = c.is_ascii_digit()
            || (c == '-' && chars.get(p + 1).is_some_and(|d| d.is_ascii_digit() || *d == 'i'));
        if starts_number {
            let mut q = p + 1;
            if c == '-' && chars[q] == 'i' {
                let word: String = chars[q..].iter().take_while(|ch| ch.is_alphanumeric()).collect();
                if word != "inf" {
                    return Err(err(tl, tc, "expected number".into()));
                }
                push(&mut out, Tok::Real(f64::NEG_INFINITY));
                advance(4, &mut p);
                continue;
            }
            let mut real = false;
            while q < chars.len() {
                let d = chars[q];
                if d.is_ascii_digit() {
                    q += 1;
                } else if d == '.' && chars.get(q + 1).is_some_and(|e| e.is_ascii_digit()) {
                    real = true;
                    q += 1;
                } else if (d == 'e' || d == 'E')
                    && (chars.get(q + 1).is_some_and(|e| e.is_ascii_digit())
                        || (matches!(chars.get(q + 1), Some('-') | Some('+'))
                            && chars.get(q + 2).is_some_and(|e| e.is_ascii_digit())))
                {
                    real = true;
                    q += 2;
                } else {
                    break;
                }
            }
            let text: String = chars[p..q].iter().collect();
            let tok = if real {
                Tok::Real(text.parse().map_err(|_| err(tl, tc, format!("bad real literal {text}")))?)
            } else {
                Tok::Int(text.parse().map_err(|_| err(tl, tc, format!("bad integer literal {text}")))?)
            };
            push(&mut out, tok);
            advance(q - p, &mut p);
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let word: String = chars[p..].iter().take_while(|ch| ch.is_alphanumeric() || **ch == '_').collect();
            let n = word.chars().count();
            push(&mut out, Tok::Ident(word));
            advance(n, &mut p);
            continue;
        }
        return Err(err(tl, tc, format!("unexpected character {c:?}")));
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek2(&self) -> &Tok {
        &self.toks[(self.pos + 1).min(self.toks.len() - 1)].tok
    }

    fn fail<T>(&self, msg: impl Into<String>) -> Result<T> {
        let t = &self.toks[self.pos];
        Err(Error::Syntax {
            line: t.line,
            col: t.col,
            msg: msg.into(),
        })
    }

    fn next(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn sym(&mut self, s: &str) -> Result<()> {
        if self.is_sym(s) {
            self.next();
            Ok(())
        } else {
            self.fail(format!("expected `{s}`, found {}", describe(self.peek())))
        }
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(t) if *t == s)
    }

    fn keyword(&mut self, k: &str) -> Result<()> {
        if matches!(self.peek(), Tok::Ident(w) if w == k) {
            self.next();
            Ok(())
        } else {
            self.fail(format!("expected `{k}`, found {}", describe(self.peek())))
        }
    }

    fn string(&mut self) -> Result<Name> {
        match self.next() {
            Tok::Str(s) => Ok(s.into()),
            t => {
                self.pos -= 1;
                self.fail(format!("expected a string literal, found {}", describe(&t)))
            }
        }
    }

    fn count(&mut self) -> Result<u32> {
        match self.peek().clone() {
            Tok::Int(k) if k >= 1 && k <= i64::from(u32::MAX) => {
                self.next();
                Ok(k as u32)
            }
            t => self.fail(format!("expected a positive loop count, found {}", describe(&t))),
        }
    }

    fn stmts(&mut self) -> Result<Cmd> {
        let mut cmds = vec![self.stmt()?];
        while self.is_sym(";") {
            self.next();
            if self.is_sym("}") || *self.peek() == Tok::Eof {
                break;
            }
            cmds.push(self.stmt()?);
        }
        Ok(Cmd::seq(cmds))
    }

    fn block(&mut self) -> Result<Cmd> {
        self.sym("{")?;
        let c = self.stmts()?;
        self.sym("}")?;
        Ok(c)
    }

    fn stmt(&mut self) -> Result<Cmd> {
        let word = match self.peek() {
            Tok::Ident(w) => w.clone(),
            t => return self.fail(format!("expected a command, found {}", describe(t))),
        };
        match word.as_str() {
            "skip" => {
                self.next();
                Ok(Cmd::Skip)
            }
            "score" => {
                self.next();
                self.sym("(")?;
                let e = self.expr()?;
                self.sym(")")?;
                Ok(Cmd::Score(e))
            }
            "ifz" => {
                self.next();
                let z = self.expr()?;
                let a = self.block()?;
                self.keyword("else")?;
                let b = self.block()?;
                Ok(Cmd::ifz(z, a, b))
            }
            "for" => {
                self.next();
                let x = self.ident()?;
                if self.is_sym(":") {
                    self.next();
                    self.keyword("int")?;
                }
                self.keyword("in")?;
                self.keyword("range")?;
                self.sym("(")?;
                let n = self.count()?;
                self.sym(")")?;
                let body = self.block()?;
                Ok(Cmd::For(x, n, Box::new(body)))
            }
            "loop_fixpt_noacc" => {
                self.next();
                self.sym("(")?;
                let n = self.count()?;
                self.sym(")")?;
                Ok(Cmd::LoopFixpt(n, Box::new(self.block()?)))
            }
            "extend_index" | "extended_loop_with_shift" => {
                self.next();
                self.sym("(")?;
                let s = self.string()?;
                self.sym(",")?;
                let n = self.count()?;
                self.sym(")")?;
                let body = Box::new(self.block()?);
                Ok(if word == "extend_index" {
                    Cmd::ExtendIndex(s, n, body)
                } else {
                    Cmd::ExtendedLoop(s, n, body)
                })
            }
            "shift" => {
                self.next();
                self.sym("(")?;
                let s = self.string()?;
                self.sym(")")?;
                Ok(Cmd::Shift(s))
            }
            _ => self.assignment(),
        }
    }

    fn assignment(&mut self) -> Result<Cmd> {
        let x = self.var()?;
        self.sym(":=")?;
        match self.peek() {
            Tok::Ident(w) if w == "fetch" && *self.peek2() == Tok::Sym("(") => {
                self.next();
                self.sym("(")?;
                let ie = self.index()?;
                self.sym(")")?;
                if x.ty != Ty::Real {
                    return self.fail("fetch assigns a real variable");
                }
                Ok(Cmd::Fetch(x.name, ie))
            }
            Tok::Ident(w) if w == "lookup_index" && *self.peek2() == Tok::Sym("(") => {
                self.next();
                self.sym("(")?;
                let s = self.string()?;
                self.sym(")")?;
                if x.ty != Ty::Int {
                    return self.fail("lookup_index assigns an int variable");
                }
                Ok(Cmd::LookupIndex(x.name, s))
            }
            _ => Ok(Cmd::Assign(x, self.expr()?)),
        }
    }

    fn ident(&mut self) -> Result<Name> {
        match self.peek().clone() {
            Tok::Ident(w) if !KEYWORDS.contains(&w.as_str()) && Prim::from_name(&w).is_none() => {
                self.next();
                Ok(w.into())
            }
            t => self.fail(format!("expected a variable name, found {}", describe(&t))),
        }
    }

    fn var(&mut self) -> Result<Var> {
        let name = self.ident()?;
        let mut ty = Ty::Real;
        if self.is_sym(":") {
            self.next();
            match self.next() {
                Tok::Ident(w) if w == "int" => ty = Ty::Int,
                Tok::Ident(w) if w == "real" => ty = Ty::Real,
                t => {
                    self.pos -= 1;
                    return self.fail(format!("expected `int` or `real`, found {}", describe(&t)));
                }
            }
        }
        Ok(Var { name, ty })
    }

    fn expr(&mut self) -> Result<Expr> {
        match self.peek().clone() {
            Tok::Int(k) => {
                self.next();
                Ok(Expr::Int(k))
            }
            Tok::Real(r) => {
                self.next();
                Ok(Expr::Real(r))
            }
            Tok::Ident(w) if w == "inf" => {
                self.next();
                Ok(Expr::Real(f64::INFINITY))
            }
            Tok::Ident(w) if w == "NaN" => {
                self.next();
                Ok(Expr::Real(f64::NAN))
            }
            Tok::Ident(w) if *self.peek2() == Tok::Sym("(") => {
                let Some(p) = Prim::from_name(&w) else {
                    return self.fail(format!("unknown primitive `{w}`"));
                };
                self.next();
                self.sym("(")?;
                let mut args = vec![self.expr()?];
                while self.is_sym(",") {
                    self.next();
                    args.push(self.expr()?);
                }
                self.sym(")")?;
                if args.len() != p.arity() {
                    return self.fail(format!("{} takes {} arguments", p.name(), p.arity()));
                }
                Ok(Expr::Prim(p, args))
            }
            Tok::Ident(_) => Ok(Expr::Var(self.var()?)),
            t => self.fail(format!("expected an expression, found {}", describe(&t))),
        }
    }

    fn index(&mut self) -> Result<IndexExpr> {
        self.sym("[")?;
        let mut pairs: Vec<(Name, Expr)> = Vec::new();
        if !self.is_sym("]") {
            loop {
                self.sym("(")?;
                let s = self.string()?;
                self.sym(",")?;
                let z = self.expr()?;
                self.sym(")")?;
                if pairs.iter().any(|(t, _)| *t == s) {
                    return Err(Error::DuplicateIndexString(s.to_string()));
                }
                pairs.push((s, z));
                if self.is_sym(";") {
                    self.next();
                } else {
                    break;
                }
            }
        }
        self.sym("]")?;
        Ok(IndexExpr(pairs))
    }

    /// A literal index `[("s",k);…]`.
    fn literal_index(&mut self) -> Result<Index> {
        let ie = self.index()?;
        let mut pairs = Vec::new();
        for (s, z) in ie.0 {
            match z {
                Expr::Int(k) => pairs.push((s, k)),
                _ => return self.fail("index components must be integer literals"),
            }
        }
        Index::new(pairs)
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(w) => format!("`{w}`"),
        Tok::Int(k) => format!("`{k}`"),
        Tok::Real(r) => format!("`{r:?}`"),
        Tok::Str(s) => format!("{s:?}"),
        Tok::Sym(s) => format!("`{s}`"),
        Tok::Eof => "end of input".into(),
    }
}

/// Parses and validates a program of the given tier.
pub fn parse(text: &str, tier: Tier) -> Result<Cmd> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
    };
    let c = p.stmts()?;
    if *p.peek() != Tok::Eof {
        return p.fail(format!("unexpected {}", describe(p.peek())));
    }
    c.validate(tier)?;
    Ok(c)
}

/// Parses an index literal such as `[("z",0);("t",2)]`.
pub fn parse_index(text: &str) -> Result<Index> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
    };
    let i = p.literal_index()?;
    if *p.peek() != Tok::Eof {
        return p.fail(format!("unexpected {}", describe(p.peek())));
    }
    Ok(i)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simple_source() {
        let c = parse("x := 0.0; score(x)", Tier::Source).unwrap();
        assert_eq!(
            c,
            Cmd::Seq(vec![
                Cmd::Assign(Var::real("x"), Expr::Real(0.0)),
                Cmd::Score(Expr::Var(Var::real("x"))),
            ])
        );
    }

    #[test]
    fn target_forms() {
        let text = r#"extend_index("vec",10){ loop_fixpt_noacc(10){ shift("vec"); t:int := lookup_index("vec"); skip } }"#;
        let c = parse(text, Tier::Target).unwrap();
        let body = Cmd::seq([
            Cmd::Shift("vec".into()),
            Cmd::LookupIndex("t".into(), "vec".into()),
            Cmd::Skip,
        ]);
        let want = Cmd::ExtendIndex("vec".into(), 10, Box::new(Cmd::LoopFixpt(10, Box::new(body))));
        assert_eq!(c, want);
    }

    #[test]
    fn tier_violations() {
        let e = parse(r#"shift("a")"#, Tier::Source).unwrap_err();
        assert!(matches!(e, Error::TierViolation { .. }));
        let e = parse(r#"extended_loop_with_shift("a",2){skip}"#, Tier::Target).unwrap_err();
        assert!(matches!(e, Error::TierViolation { .. }));
        let e = parse(r#"loop_fixpt_noacc(2){skip}"#, Tier::Relaxed).unwrap_err();
        assert!(matches!(e, Error::TierViolation { .. }));
        let e = parse(r#"x := fetch([("$loop0", 1)])"#, Tier::Source).unwrap_err();
        assert!(matches!(e, Error::TierViolation { .. }));
        assert!(parse(r#"x := fetch([("$loop0", 1)])"#, Tier::Target).is_ok());
    }

    #[test]
    fn duplicate_index_string() {
        let e = parse(r#"x := fetch([("z",0);("z",1)])"#, Tier::Source).unwrap_err();
        assert_eq!(e, Error::DuplicateIndexString("z".into()));
    }

    #[test]
    fn syntax_error_location() {
        let e = parse("skip;\n  score(", Tier::Source).unwrap_err();
        assert!(matches!(e, Error::Syntax { line: 2, .. }), "{e:?}");
    }

    #[test]
    fn type_errors() {
        assert!(matches!(parse("x:int := 1.0", Tier::Source), Err(Error::Type(_))));
        assert!(matches!(parse("score(1)", Tier::Source), Err(Error::Type(_))));
        assert!(matches!(parse("ifz 1.0 {skip} else {skip}", Tier::Source), Err(Error::Type(_))));
    }

    #[test]
    fn literals_and_comments() {
        let c = parse("# note\nx := -1.5e-3; # trailing\ny:int := -4;", Tier::Source).unwrap();
        assert_eq!(
            c,
            Cmd::seq([
                Cmd::Assign(Var::real("x"), Expr::Real(-1.5e-3)),
                Cmd::Assign(Var::int("y"), Expr::Int(-4)),
            ])
        );
    }

    #[test]
    fn index_literal() {
        let i = parse_index(r#"[("z",0);("t",-2)]"#).unwrap();
        assert_eq!(i, crate::index::idx(&[("z", 0), ("t", -2)]));
        assert_eq!(parse_index("[]").unwrap(), Index::empty());
    }
}
