//! Syntactic translations between the tiers.
//!
//! `vectorise` turns every `for` loop into a speculative parallel loop over a
//! fresh index string. Fresh strings are `$loop<k>`, numbered in preorder; the
//! `$` sigil is rejected in source programs, so they cannot clash with any
//! string the program fetches with.

use crate::ast::{Cmd, RESERVED_SIGIL};
use crate::index::Name;

/// Fresh string for the `k`-th loop in preorder.
pub fn loop_string(k: usize) -> Name {
    format!("{RESERVED_SIGIL}loop{k}").into()
}

/// Re-tags a source program as a target program. The syntax tree is shared,
/// so this is the identity on commands.
pub fn embed(c: &Cmd) -> Cmd {
    c.clone()
}

/// Translates a source program into the target tier.
pub fn vectorise(c: &Cmd) -> Cmd {
    translate(c, &mut 0, &|s, n, x, body| {
        Cmd::ExtendIndex(
            s.clone(),
            n,
            Box::new(Cmd::LoopFixpt(
                n,
                Box::new(Cmd::seq([Cmd::Shift(s.clone()), Cmd::LookupIndex(x, s), body])),
            )),
        )
    })
}

/// Translates a source program into the relaxed tier.
pub fn vectorise_relaxed(c: &Cmd) -> Cmd {
    translate(c, &mut 0, &|s, n, x, body| {
        Cmd::ExtendedLoop(s.clone(), n, Box::new(Cmd::seq([Cmd::LookupIndex(x, s), body])))
    })
}

fn translate(c: &Cmd, next: &mut usize, wrap: &impl Fn(Name, u32, Name, Cmd) -> Cmd) -> Cmd {
    match c {
        Cmd::Seq(cs) => Cmd::seq(cs.iter().map(|c| translate(c, next, wrap))),
        Cmd::Ifz(z, a, b) => {
            let a = translate(a, next, wrap);
            let b = translate(b, next, wrap);
            Cmd::ifz(z.clone(), a, b)
        }
        Cmd::For(x, n, body) => {
            let s = loop_string(*next);
            *next += 1;
            let body = translate(body, next, wrap);
            wrap(s, *n, x.clone(), body)
        }
        _ => c.clone(),
    }
}

/// Lowers a relaxed program to the target tier.
pub fn lower_relaxed(c: &Cmd) -> Cmd {
    match c {
        Cmd::Seq(cs) => Cmd::seq(cs.iter().map(lower_relaxed)),
        Cmd::Ifz(z, a, b) => Cmd::ifz(z.clone(), lower_relaxed(a), lower_relaxed(b)),
        Cmd::For(x, n, b) => Cmd::For(x.clone(), *n, Box::new(lower_relaxed(b))),
        Cmd::ExtendedLoop(s, n, b) => Cmd::ExtendIndex(
            s.clone(),
            *n,
            Box::new(Cmd::LoopFixpt(*n, Box::new(Cmd::seq([Cmd::Shift(s.clone()), lower_relaxed(b)])))),
        ),
        _ => c.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::Tier;
    use crate::parse::parse;
    use crate::print::print;

    const HMM: &str = r#"
        for t:int in range(10) {
            x := fetch([("z", t:int)]);
            score(normal_logpdf(x, y, 1.0));
            score(normal_logpdf(0.0, x, 1.0));
            y := x
        }"#;

    #[test]
    fn hmm_matches_translated_shape() {
        let c = parse(HMM, Tier::Source).unwrap();
        let want = parse(
            r#"
            extend_index("$loop0", 10) {
                loop_fixpt_noacc(10) {
                    shift("$loop0");
                    t:int := lookup_index("$loop0");
                    x := fetch([("z", t:int)]);
                    score(normal_logpdf(x, y, 1.0));
                    score(normal_logpdf(0.0, x, 1.0));
                    y := x
                }
            }"#,
            Tier::Target,
        )
        .unwrap();
        assert_eq!(vectorise(&c), want);
        assert_eq!(lower_relaxed(&vectorise_relaxed(&c)), want);
    }

    #[test]
    fn skip_is_fixed() {
        assert_eq!(vectorise(&Cmd::Skip), Cmd::Skip);
        assert_eq!(vectorise_relaxed(&Cmd::Skip), Cmd::Skip);
        assert_eq!(embed(&Cmd::Skip), Cmd::Skip);
    }

    #[test]
    fn nested_loops_get_distinct_strings() {
        let c = parse("for t:int in range(2) { for u:int in range(3) { skip } }", Tier::Source).unwrap();
        let v = vectorise(&c);
        let text = print(&v);
        assert!(text.contains("\"$loop0\"") && text.contains("\"$loop1\""));
        assert_eq!(parse(&text, Tier::Target).unwrap(), v);
    }

    #[test]
    fn relaxed_for_loop_shape() {
        let c = parse("for t:int in range(2) { skip }", Tier::Source).unwrap();
        let want = parse(
            r#"extended_loop_with_shift("$loop0", 2) { t:int := lookup_index("$loop0"); skip }"#,
            Tier::Relaxed,
        )
        .unwrap();
        assert_eq!(vectorise_relaxed(&c), want);
    }

    #[test]
    fn lowering_one_loop() {
        let c = parse(r#"extended_loop_with_shift("v", 2) { skip }"#, Tier::Relaxed).unwrap();
        let want = parse(r#"extend_index("v", 2) { loop_fixpt_noacc(2) { shift("v"); skip } }"#, Tier::Target).unwrap();
        assert_eq!(lower_relaxed(&c), want);
    }
}
