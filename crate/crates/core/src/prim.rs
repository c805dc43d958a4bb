//! The primitive operation table and expression evaluation.
//!
//! Integer predicates (`eq`, `lt`) return 0 for true and 1 for false, so that
//! `ifz eq(a, b) { … } else { … }` takes the first branch when `a = b`.

use std::f64::consts::PI;
use std::fmt;

use crate::ast::{Expr, IndexExpr, Ty, Var};
use crate::error::{Error, Result};
use crate::index::Index;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Prim {
    Add,
    Sub,
    Mul,
    Mod,
    Eq,
    Lt,
    Div,
    Neg,
    Exp,
    Log,
    NormalLogpdf,
    ToReal,
}

pub const ALL_PRIMS: [Prim; 12] = [
    Prim::Add,
    Prim::Sub,
    Prim::Mul,
    Prim::Mod,
    Prim::Eq,
    Prim::Lt,
    Prim::Div,
    Prim::Neg,
    Prim::Exp,
    Prim::Log,
    Prim::NormalLogpdf,
    Prim::ToReal,
];

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Val {
    Int(i64),
    Real(f64),
}

impl Val {
    pub fn ty(self) -> Ty {
        match self {
            Val::Int(_) => Ty::Int,
            Val::Real(_) => Ty::Real,
        }
    }

    pub fn as_int(self) -> i64 {
        match self {
            Val::Int(k) => k,
            Val::Real(_) => panic!("expected an integer value"),
        }
    }

    pub fn as_real(self) -> f64 {
        match self {
            Val::Real(r) => r,
            Val::Int(_) => panic!("expected a real value"),
        }
    }

    /// Bit-level equality for reals.
    pub fn same(self, other: Val) -> bool {
        match (self, other) {
            (Val::Int(a), Val::Int(b)) => a == b,
            (Val::Real(a), Val::Real(b)) => a.to_bits() == b.to_bits(),
            _ => false,
        }
    }
}

impl fmt::Display for Val {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Val::Int(k) => write!(f, "{k}"),
            Val::Real(r) => write!(f, "{r:?}"),
        }
    }
}

impl Prim {
    pub fn name(self) -> &'static str {
        match self {
            Prim::Add => "add",
            Prim::Sub => "sub",
            Prim::Mul => "mul",
            Prim::Mod => "mod",
            Prim::Eq => "eq",
            Prim::Lt => "lt",
            Prim::Div => "div",
            Prim::Neg => "neg",
            Prim::Exp => "exp",
            Prim::Log => "log",
            Prim::NormalLogpdf => "normal_logpdf",
            Prim::ToReal => "to_real",
        }
    }

    pub fn from_name(s: &str) -> Option<Prim> {
        ALL_PRIMS.into_iter().find(|p| p.name() == s)
    }

    pub fn arity(self) -> usize {
        match self {
            Prim::Neg | Prim::Exp | Prim::Log | Prim::ToReal => 1,
            Prim::NormalLogpdf => 3,
            _ => 2,
        }
    }

    pub fn result_type(self, args: &[Ty]) -> Result<Ty> {
        let bad = || {
            let tys: Vec<String> = args.iter().map(Ty::to_string).collect();
            Err(Error::Type(format!("{}({}) is not defined", self.name(), tys.join(", "))))
        };
        if args.len() != self.arity() {
            return bad();
        }
        use Ty::{Int, Real};
        match (self, args) {
            (Prim::Add | Prim::Sub | Prim::Mul, [a, b]) if a == b => Ok(*a),
            (Prim::Mod, [Int, Int]) => Ok(Int),
            (Prim::Eq | Prim::Lt, [a, b]) if a == b => Ok(Int),
            (Prim::Div, [Real, Real]) => Ok(Real),
            (Prim::Neg | Prim::Exp | Prim::Log, [Real]) => Ok(Real),
            (Prim::NormalLogpdf, [Real, Real, Real]) => Ok(Real),
            (Prim::ToReal, [Int]) => Ok(Real),
            _ => bad(),
        }
    }

    /// Applies the primitive to already-typed arguments.
    pub fn apply(self, args: &[Val]) -> Result<Val> {
        let domain = || {
            let shown: Vec<String> = args.iter().map(Val::to_string).collect();
            Err(Error::PrimitiveDomain {
                op: self.name().into(),
                args: shown.join(", "),
                path: String::new(),
            })
        };
        let flag = |b: bool| Val::Int(if b { 0 } else { 1 });
        use Val::{Int, Real};
        Ok(match (self, args) {
            (Prim::Add, [Int(a), Int(b)]) => Int(a.wrapping_add(*b)),
            (Prim::Sub, [Int(a), Int(b)]) => Int(a.wrapping_sub(*b)),
            (Prim::Mul, [Int(a), Int(b)]) => Int(a.wrapping_mul(*b)),
            (Prim::Add, [Real(a), Real(b)]) => Real(a + b),
            (Prim::Sub, [Real(a), Real(b)]) => Real(a - b),
            (Prim::Mul, [Real(a), Real(b)]) => Real(a * b),
            (Prim::Mod, [Int(_), Int(0)]) => return domain(),
            (Prim::Mod, [Int(a), Int(b)]) => Int(a.wrapping_rem_euclid(*b)),
            (Prim::Eq, [Int(a), Int(b)]) => flag(a == b),
            (Prim::Lt, [Int(a), Int(b)]) => flag(a < b),
            (Prim::Eq, [Real(a), Real(b)]) => flag(a == b),
            (Prim::Lt, [Real(a), Real(b)]) => flag(a < b),
            (Prim::Div, [Real(_), Real(b)]) if *b == 0.0 => return domain(),
            (Prim::Div, [Real(a), Real(b)]) => Real(a / b),
            (Prim::Neg, [Real(a)]) => Real(-a),
            (Prim::Exp, [Real(a)]) => Real(a.exp()),
            (Prim::Log, [Real(a)]) if *a <= 0.0 || a.is_nan() => return domain(),
            (Prim::Log, [Real(a)]) => Real(a.ln()),
            (Prim::NormalLogpdf, [Real(_), Real(_), Real(s)]) if !(*s > 0.0) => return domain(),
            (Prim::NormalLogpdf, [Real(x), Real(m), Real(s)]) => Real(normal_logpdf(*x, *m, *s)),
            (Prim::ToReal, [Int(a)]) => Real(*a as f64),
            _ => return Err(Error::Type(format!("ill-typed arguments to {}", self.name()))),
        })
    }
}

/// Log density of `N(mean, sd²)` at `x`.
pub fn normal_logpdf(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    -0.5 * z * z - sd.ln() - 0.5 * (2.0 * PI).ln()
}

/// Supplies variable values to the evaluator.
pub trait Env {
    fn read(&self, v: &Var) -> Val;
}

pub fn eval(e: &Expr, env: &impl Env) -> Result<Val> {
    match e {
        Expr::Int(k) => Ok(Val::Int(*k)),
        Expr::Real(r) => Ok(Val::Real(*r)),
        Expr::Var(v) => Ok(env.read(v)),
        Expr::Prim(p, args) => {
            let vals = args.iter().map(|a| eval(a, env)).collect::<Result<Vec<_>>>()?;
            p.apply(&vals)
        }
    }
}

pub fn eval_index(ie: &IndexExpr, env: &impl Env) -> Result<Index> {
    let mut pairs = Vec::with_capacity(ie.0.len());
    for (s, z) in &ie.0 {
        pairs.push((s.clone(), eval(z, env)?.as_int()));
    }
    Index::new(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn predicates_use_zero_for_true() {
        assert_eq!(Prim::Eq.apply(&[Val::Int(3), Val::Int(3)]).unwrap(), Val::Int(0));
        assert_eq!(Prim::Eq.apply(&[Val::Int(3), Val::Int(4)]).unwrap(), Val::Int(1));
        assert_eq!(Prim::Lt.apply(&[Val::Real(-1.0), Val::Real(0.0)]).unwrap(), Val::Int(0));
    }

    #[test]
    fn domain_errors() {
        assert!(Prim::Mod.apply(&[Val::Int(3), Val::Int(0)]).is_err());
        assert!(Prim::Log.apply(&[Val::Real(0.0)]).is_err());
        assert!(Prim::Div.apply(&[Val::Real(1.0), Val::Real(0.0)]).is_err());
        let e = Prim::NormalLogpdf.apply(&[Val::Real(0.0), Val::Real(0.0), Val::Real(0.0)]);
        assert!(matches!(e, Err(Error::PrimitiveDomain { .. })));
    }

    #[test]
    fn mod_is_euclidean() {
        assert_eq!(Prim::Mod.apply(&[Val::Int(-1), Val::Int(3)]).unwrap(), Val::Int(2));
    }

    #[test]
    fn normal_logpdf_standard() {
        let c = -0.5 * (2.0 * PI).ln();
        assert_eq!(normal_logpdf(0.0, 0.0, 1.0), c);
        assert!((normal_logpdf(1.0, 0.0, 2.0) - (c - 0.125 - 2f64.ln())).abs() < 1e-15);
    }

    #[test]
    fn typing() {
        assert_eq!(Prim::Add.result_type(&[Ty::Int, Ty::Int]).unwrap(), Ty::Int);
        assert!(Prim::Add.result_type(&[Ty::Int, Ty::Real]).is_err());
        assert_eq!(Prim::Lt.result_type(&[Ty::Real, Ty::Real]).unwrap(), Ty::Int);
        assert!(Prim::Exp.result_type(&[Ty::Real, Ty::Real]).is_err());
    }
}
