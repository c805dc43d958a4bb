//! Random program generation, differential oracles and shrinking.

pub mod gen;
pub mod lemmas;
pub mod oracle;
pub mod shrink;

pub use gen::{gen_program, GenConfig};
pub use oracle::{
    check_backends, check_embedding, check_int_vs_fixpoint, check_relaxed, check_soundness, fuzz_one, replay,
    CheckReport, Oracle, Outcome, Verdict,
};
pub use lemmas::{check_law, Law, LawReport};
pub use shrink::shrink;
