//! Pretty printer producing text that `parse` reads back to the same AST.

use std::fmt::Write as _;

use crate::ast::{Cmd, Expr, IndexExpr};
use crate::index::quote;

pub fn print_expr(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(&mut out, e);
    out
}

fn write_expr(out: &mut String, e: &Expr) {
    match e {
        Expr::Int(k) => {
            let _ = write!(out, "{k}");
        }
        Expr::Real(r) => out.push_str(&real_literal(*r)),
        Expr::Var(v) => {
            let _ = write!(out, "{v}");
        }
        Expr::Prim(p, args) => {
            out.push_str(p.name());
            out.push('(');
            for (n, a) in args.iter().enumerate() {
                if n > 0 {
                    out.push_str(", ");
                }
                write_expr(out, a);
            }
            out.push(')');
        }
    }
}

/// Shortest text that parses back to the same bits (`{:?}` always keeps a
/// decimal point or exponent).
pub fn real_literal(r: f64) -> String {
    if r.is_nan() {
        "NaN".into()
    } else if r.is_infinite() {
        if r > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{r:?}")
    }
}

fn write_index(out: &mut String, ie: &IndexExpr) {
    out.push('[');
    for (n, (s, z)) in ie.0.iter().enumerate() {
        if n > 0 {
            out.push_str("; ");
        }
        let _ = write!(out, "({}, ", quote(s));
        write_expr(out, z);
        out.push(')');
    }
    out.push(']');
}

pub fn print(c: &Cmd) -> String {
    let mut out = String::new();
    write_cmd(&mut out, c, 0);
    out.push('\n');
    out
}

fn indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str("  ");
    }
}

fn write_block(out: &mut String, c: &Cmd, depth: usize) {
    out.push_str("{\n");
    indent(out, depth + 1);
    write_cmd(out, c, depth + 1);
    out.push('\n');
    indent(out, depth);
    out.push('}');
}

fn write_cmd(out: &mut String, c: &Cmd, depth: usize) {
    match c {
        Cmd::Skip => out.push_str("skip"),
        Cmd::Score(e) => {
            out.push_str("score(");
            write_expr(out, e);
            out.push(')');
        }
        Cmd::Fetch(x, ie) => {
            let _ = write!(out, "{x} := fetch(");
            write_index(out, ie);
            out.push(')');
        }
        Cmd::Assign(x, e) => {
            let _ = write!(out, "{x} := ");
            write_expr(out, e);
        }
        Cmd::Seq(cs) => {
            for (n, c) in cs.iter().enumerate() {
                if n > 0 {
                    out.push_str(";\n");
                    indent(out, depth);
                }
                write_cmd(out, c, depth);
            }
        }
        Cmd::Ifz(z, a, b) => {
            out.push_str("ifz ");
            write_expr(out, z);
            out.push(' ');
            write_block(out, a, depth);
            out.push_str(" else ");
            write_block(out, b, depth);
        }
        Cmd::For(x, n, body) => {
            let _ = write!(out, "for {x}:int in range({n}) ");
            write_block(out, body, depth);
        }
        Cmd::LoopFixpt(n, body) => {
            let _ = write!(out, "loop_fixpt_noacc({n}) ");
            write_block(out, body, depth);
        }
        Cmd::ExtendIndex(s, n, body) => {
            let _ = write!(out, "extend_index({}, {n}) ", quote(s));
            write_block(out, body, depth);
        }
        Cmd::ExtendedLoop(s, n, body) => {
            let _ = write!(out, "extended_loop_with_shift({}, {n}) ", quote(s));
            write_block(out, body, depth);
        }
        Cmd::LookupIndex(x, s) => {
            let _ = write!(out, "{x}:int := lookup_index({})", quote(s));
        }
        Cmd::Shift(s) => {
            let _ = write!(out, "shift({})", quote(s));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::Tier;
    use crate::parse::parse;

    #[test]
    fn skip_prints_bare() {
        assert_eq!(print(&Cmd::Skip), "skip\n");
    }

    #[test]
    fn round_trip_target_text() {
        let text = r#"
            y := 0.0;
            extend_index("vec", 3) {
              loop_fixpt_noacc(3) {
                shift("vec");
                t:int := lookup_index("vec");
                x := fetch([("z", t:int)]);
                score(normal_logpdf(x, y, 1.0));
                score(normal_logpdf(0.0, x, 1.0));
                y := x
              }
            }"#;
        let c = parse(text, Tier::Target).unwrap();
        assert_eq!(parse(&print(&c), Tier::Target).unwrap(), c);
    }

    #[test]
    fn odd_reals_round_trip() {
        for r in [0.1, -2.5e-300, 1e22, f64::INFINITY, f64::NEG_INFINITY, -0.0] {
            let c = Cmd::Score(Expr::Real(r));
            let back = parse(&print(&c), Tier::Source).unwrap();
            let Cmd::Score(Expr::Real(b)) = back else { panic!() };
            assert_eq!(b.to_bits(), r.to_bits());
        }
    }
}
