//! Speculative loop vectorisation for score-computing programs.
//!
//! The crate provides interpreters for a small source language and for its
//! vectorised target language, the translation between them, a relaxed
//! fixed-point semantics driven by read/write flags, and differential oracles
//! that check the translation on random programs.

pub mod ast;
pub mod bench;
pub mod dense;
pub mod error;
pub mod harness;
pub mod index;
pub mod parse;
pub mod pmap;
pub mod prim;
pub mod print;
pub mod rdb;
pub mod relaxed;
pub mod source;
pub mod state;
pub mod target;
pub mod vectorise;

pub use ast::{Cmd, Expr, IndexExpr, Tier, Ty, Var};
pub use dense::{Axes, DenseMap};
pub use error::{Error, Result};
pub use index::{AChain, Index, Name};
pub use pmap::{IndexInj, PMap, Scalar, Tensor};
pub use prim::{Prim, Val};
pub use rdb::Rdb;

pub use source::{run_src, SrcState};
pub use state::{Dense, Sparse, Store, TgtState};

pub use target::{run_tgt, run_tgt_with, run_under_empty, Mode, Mutant, TgtConfig, TgtOutcome, Trace};
pub use vectorise::{embed, lower_relaxed, vectorise, vectorise_relaxed};
pub use relaxed::{fixcheck, run_relaxed, Flag, RelaxedOutcome};
