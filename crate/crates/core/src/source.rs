//! Reference interpreter for the source language.

use std::collections::BTreeMap;

use crate::ast::{Cmd, Tier, Ty, Var};
use crate::error::{Error, Result};
use crate::prim::{eval, eval_index, Env, Val};
use crate::rdb::Rdb;

/// Scalar state. Variables without an entry hold 0 or 0.0.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SrcState {
    vals: BTreeMap<Var, Val>,
}

impl SrcState {
    pub fn new() -> Self {
        SrcState::default()
    }

    pub fn from_map(vals: BTreeMap<Var, Val>) -> Result<Self> {
        for (x, v) in &vals {
            if x.ty != v.ty() {
                return Err(Error::Type(format!("{x} cannot hold {v}")));
            }
        }
        Ok(SrcState { vals })
    }

    pub fn get(&self, x: &Var) -> Val {
        self.vals.get(x).copied().unwrap_or(match x.ty {
            Ty::Int => Val::Int(0),
            Ty::Real => Val::Real(0.0),
        })
    }

    pub fn set(&mut self, x: &Var, v: Val) {
        self.vals.insert(x.clone(), v);
    }

    pub fn vars(&self) -> impl Iterator<Item = (&Var, Val)> + '_ {
        self.vals.iter().map(|(x, v)| (x, *v))
    }

    pub fn as_map(&self) -> &BTreeMap<Var, Val> {
        &self.vals
    }
}

impl Env for SrcState {
    fn read(&self, v: &Var) -> Val {
        self.get(v)
    }
}

/// Runs a source program. The score is the sum of every `score` in
/// execution order.
pub fn run_src(c: &Cmd, db: &Rdb, sigma: &SrcState) -> Result<(SrcState, f64)> {
    c.validate(Tier::Source)?;
    let mut st = sigma.clone();
    let r = exec(c, db, &mut st)?;
    if r.is_nan() {
        return Err(Error::NaNScore(crate::index::Index::empty()));
    }
    Ok((st, r))
}

/// Runs without tier validation; used on embedded programs and fixtures.
pub(crate) fn exec(c: &Cmd, db: &Rdb, st: &mut SrcState) -> Result<f64> {
    match c {
        Cmd::Skip => Ok(0.0),
        Cmd::Score(e) => Ok(eval(e, st).map_err(|e| e.within("score"))?.as_real()),
        Cmd::Fetch(x, ie) => {
            let i = eval_index(ie, st).map_err(|e| e.within("fetch"))?;
            st.set(&Var { name: x.clone(), ty: Ty::Real }, Val::Real(db.lookup(&i)));
            Ok(0.0)
        }
        Cmd::Assign(x, e) => {
            let v = eval(e, st).map_err(|e| e.within(&format!("assign {x}")))?;
            st.set(x, v);
            Ok(0.0)
        }
        Cmd::Seq(cs) => {
            let mut r = 0.0;
            for (n, c) in cs.iter().enumerate() {
                r += exec(c, db, st).map_err(|e| e.within(&format!("seq[{n}]")))?;
            }
            Ok(r)
        }
        Cmd::Ifz(z, a, b) => {
            if eval(z, st).map_err(|e| e.within("ifz"))?.as_int() == 0 {
                exec(a, db, st).map_err(|e| e.within("ifz.then"))
            } else {
                exec(b, db, st).map_err(|e| e.within("ifz.else"))
            }
        }
        Cmd::For(x, n, body) => {
            let x = Var { name: x.clone(), ty: Ty::Int };
            let mut r = 0.0;
            for k in 0..*n {
                st.set(&x, Val::Int(i64::from(k)));
                r += exec(body, db, st).map_err(|e| e.within(&format!("for[{k}]")))?;
            }
            Ok(r)
        }
        Cmd::LoopFixpt(..) | Cmd::ExtendIndex(..) | Cmd::LookupIndex(..) | Cmd::Shift(_) | Cmd::ExtendedLoop(..) => {
            Err(Error::TierViolation {
                construct: "target-only command".into(),
                tier: Tier::Source.to_string(),
            })
        }
    }
}
