use proptest::prelude::*;
use proptest::sample::subsequence;

use vecloop_core::harness::lemmas::trial;
use vecloop_core::harness::{gen_program, GenConfig, Law};
use vecloop_core::parse::parse;
use vecloop_core::print::print;
use vecloop_core::{AChain, Axes, DenseMap, Index, PMap, Tier};

const STRINGS: [&str; 3] = ["q", "r", "p"];

/// Indices over `q`, `r`, `p`, always in that order so that every generated
/// map has a dense layout.
fn index() -> impl Strategy<Value = Index> {
    subsequence(STRINGS.to_vec(), 0..=3).prop_flat_map(|ss| {
        let n = ss.len();
        proptest::collection::vec(0i64..4, n).prop_map(move |ks| Index::new(ss.iter().copied().zip(ks)).unwrap())
    })
}

fn rooted_map() -> impl Strategy<Value = PMap<i64>> {
    (any::<i8>(), proptest::collection::vec((index(), -50i64..50), 0..12)).prop_map(|(root, es)| {
        let mut m = PMap::from_entries(es);
        m.insert(Index::empty(), i64::from(root));
        m
    })
}

fn update_map() -> impl Strategy<Value = PMap<i64>> {
    proptest::collection::vec((index(), -50i64..50), 0..8).prop_map(PMap::from_entries)
}

fn antichain() -> impl Strategy<Value = AChain> {
    proptest::collection::vec(index(), 0..6).prop_map(|is| {
        let mut keep: Vec<Index> = Vec::new();
        for i in is {
            if keep.iter().all(|j| !j.is_prefix_of(&i) && !i.is_prefix_of(j)) {
                keep.push(i);
            }
        }
        AChain::new(keep).unwrap()
    })
}

/// Small integers keep float addition exact, so the laws hold bit for bit.
fn tensor() -> impl Strategy<Value = PMap<f64>> {
    proptest::collection::vec((index(), -20i32..20), 0..8)
        .prop_map(|es| PMap::from_entries(es.into_iter().map(|(i, v)| (i, f64::from(v)))))
}

/// Longest prefix of `i` stored in `m`, found by walking up from `i`.
fn extend_by_walk(m: &PMap<i64>, i: &Index) -> Option<i64> {
    (0..=i.len()).rev().find_map(|k| m.get(i.prefix(k).pairs()))
}

fn probes(maps: &[&PMap<i64>], extra: &[Index]) -> Vec<Index> {
    let mut out: Vec<Index> = extra.to_vec();
    for m in maps {
        out.extend(m.domain().cloned());
    }
    let mut more = Vec::new();
    for i in &out {
        for s in STRINGS {
            if !i.binds(s) {
                more.push(i.extended(s.into(), 7).unwrap());
            }
        }
    }
    out.extend(more);
    out.push(Index::empty());
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn prefix_order_is_a_partial_order(i in index(), a in 0usize..4, b in 0usize..4, j in index()) {
        let (a, b) = (a.min(i.len()), b.min(i.len()));
        prop_assert!(i.is_prefix_of(&i));
        prop_assert_eq!(i.prefix(a).is_prefix_of(&i.prefix(b)), a <= b);
        if i.is_prefix_of(&j) && j.is_prefix_of(&i) {
            prop_assert_eq!(&i, &j);
        }
        if let Some(p) = i.parent() {
            prop_assert!(p.is_prefix_of(&i));
            prop_assert_eq!(p.len() + 1, i.len());
        }
    }

    #[test]
    fn extend_reads_the_longest_stored_prefix(m in rooted_map(), i in index()) {
        for p in probes(&[&m], &[i]) {
            prop_assert_eq!(m.extend(p.pairs()), extend_by_walk(&m, &p));
        }
    }

    #[test]
    fn update_overrides_below_written_indices(m in rooted_map(), t in update_map(), i in index()) {
        let u = m.update(&t);
        for p in probes(&[&m, &t], &[i]) {
            let want = extend_by_walk(&t, &p).or_else(|| extend_by_walk(&m, &p));
            prop_assert_eq!(u.extend(p.pairs()), want, "at {}", p);
        }
    }

    #[test]
    fn update_with_nothing_is_identity(m in rooted_map()) {
        prop_assert!(m.update(&PMap::new()).same_entries(&m));
    }

    #[test]
    fn tensor_addition_laws(t1 in tensor(), t2 in tensor(), t3 in tensor(), a in antichain()) {
        prop_assert!(t1.add(&t2).same_entries(&t2.add(&t1)));
        prop_assert!(t1.add(&t2).add(&t3).same_entries(&t1.add(&t2.add(&t3))));
        let on_a = PMap::tabulate(&a, |i| t1.get(i.pairs()).unwrap_or(1.0));
        prop_assert!(on_a.add(&PMap::zeros(&a)).same_entries(&on_a));
        prop_assert_eq!(t1.add(&t2).total(), t1.total() + t2.total());
    }

    #[test]
    fn dense_round_trip(m in rooted_map(), t in update_map(), i in index()) {
        let axes = Axes::new(STRINGS.iter().map(|s| (*s).into()).collect()).unwrap();
        let d = DenseMap::encode(&m, &axes).unwrap();
        prop_assert!(d.to_pmap().same_function(&m));
        let du = d.update(&t, &axes).unwrap();
        let u = m.update(&t);
        for p in probes(&[&m, &t], &[i]) {
            prop_assert_eq!(d.decode(p.pairs()), m.extend(p.pairs()));
            prop_assert_eq!(du.decode(p.pairs()), u.extend(p.pairs()));
        }
    }

    #[test]
    fn index_text_round_trip(i in index()) {
        prop_assert_eq!(vecloop_core::parse::parse_index(&i.to_string()).unwrap(), i);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn print_parse_round_trip(seed in any::<u64>(), tier in 0usize..3) {
        let tier = [Tier::Source, Tier::Target, Tier::Relaxed][tier];
        let c = gen_program(&GenConfig::default().with_seed(seed).with_tier(tier));
        let text = print(&c);
        let back = parse(&text, tier).unwrap();
        prop_assert_eq!(print(&back), text);
        prop_assert_eq!(back, c);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lstate_closure(seed in any::<u64>()) {
        for law in [Law::LStateUpdate, Law::LStatePreservation] {
            let o = trial(law, seed, 0);
            prop_assert!(!o.is_fail(), "{}: {:?}", law, o);
        }
    }

    #[test]
    fn relaxed_commands_respect_their_flag(seed in any::<u64>()) {
        for law in [Law::RelaxedCmd, Law::FlagDomain] {
            let o = trial(law, seed, 0);
            prop_assert!(!o.is_fail(), "{}: {:?}", law, o);
        }
    }
}
