//! Greedy deterministic shrinking of failing programs.

use crate::ast::Cmd;

/// Upper bound on predicate evaluations per shrink.
pub const MAX_EVALS: usize = 2000;

/// One-step reductions of `c`, anywhere in the tree.
pub fn candidates(c: &Cmd) -> Vec<Cmd> {
    let mut out = Vec::new();
    if *c != Cmd::Skip {
        out.push(Cmd::Skip);
    }
    let boxed = |b: &Cmd| Box::new(b.clone());
    match c {
        Cmd::Seq(cs) => {
            for k in 0..cs.len() {
                let mut rest = cs.clone();
                rest.remove(k);
                out.push(Cmd::seq(rest));
            }
            for (k, child) in cs.iter().enumerate() {
                for r in candidates(child) {
                    let mut cs2 = cs.clone();
                    cs2[k] = r;
                    out.push(Cmd::seq(cs2));
                }
            }
        }
        Cmd::Ifz(z, a, b) => {
            out.push((**a).clone());
            out.push((**b).clone());
            for r in candidates(a) {
                out.push(Cmd::Ifz(z.clone(), Box::new(r), b.clone()));
            }
            for r in candidates(b) {
                out.push(Cmd::Ifz(z.clone(), a.clone(), Box::new(r)));
            }
        }
        Cmd::For(_, n, body) | Cmd::LoopFixpt(n, body) | Cmd::ExtendIndex(_, n, body) | Cmd::ExtendedLoop(_, n, body) => {
            let rebuild = |n: u32, b: Box<Cmd>| match c {
                Cmd::For(x, ..) => Cmd::For(x.clone(), n, b),
                Cmd::LoopFixpt(..) => Cmd::LoopFixpt(n, b),
                Cmd::ExtendIndex(s, ..) => Cmd::ExtendIndex(s.clone(), n, b),
                Cmd::ExtendedLoop(s, ..) => Cmd::ExtendedLoop(s.clone(), n, b),
                _ => unreachable!(),
            };
            out.push((**body).clone());
            if *n > 1 {
                out.push(rebuild(1, boxed(body)));
            }
            if *n > 2 {
                out.push(rebuild(n - 1, boxed(body)));
            }
            for r in candidates(body) {
                out.push(rebuild(*n, Box::new(r)));
            }
        }
        _ => {}
    }
    out
}

/// A rough measure used to order candidates: tree size, then total loop length.
fn weight(c: &Cmd) -> (usize, u64) {
    let mut len = 0u64;
    c.walk(&mut |n| {
        if let Cmd::For(_, k, _) | Cmd::LoopFixpt(k, _) | Cmd::ExtendIndex(_, k, _) | Cmd::ExtendedLoop(_, k, _) = n {
            len += u64::from(*k);
        }
    });
    (c.size(), len)
}

/// Repeatedly replaces `c` by its smallest one-step reduction on which
/// `fails` still holds. Returns the result and the number of steps taken.
pub fn shrink(c: &Cmd, mut fails: impl FnMut(&Cmd) -> bool) -> (Cmd, usize) {
    let mut cur = c.clone();
    let mut steps = 0;
    let mut evals = 0;
    'outer: loop {
        let mut cands = candidates(&cur);
        cands.sort_by_key(weight);
        cands.dedup();
        for cand in cands {
            if weight(&cand) >= weight(&cur) {
                continue;
            }
            if evals >= MAX_EVALS {
                break 'outer;
            }
            evals += 1;
            if fails(&cand) {
                cur = cand;
                steps += 1;
                continue 'outer;
            }
        }
        break;
    }
    (cur, steps)
}
