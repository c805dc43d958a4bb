//! Abstract syntax shared by the source, target and relaxed tiers.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};
use crate::index::Name;
use crate::prim::Prim;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Ty {
    Int,
    Real,
}

impl fmt::Display for Ty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Ty::Int => "int",
            Ty::Real => "real",
        })
    }
}

/// A variable is a name together with its base type; `x:int` and `x:real`
/// are different variables.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var {
    pub name: Name,
    pub ty: Ty,
}

impl Var {
    pub fn int(name: &str) -> Self {
        Var {
            name: name.into(),
            ty: Ty::Int,
        }
    }

    pub fn real(name: &str) -> Self {
        Var {
            name: name.into(),
            ty: Ty::Real,
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.ty {
            Ty::Int => write!(f, "{}:int", self.name),
            Ty::Real => f.write_str(&self.name),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Int(i64),
    Real(f64),
    Var(Var),
    Prim(Prim, Vec<Expr>),
}

/// `[(s₁,Z₁);…;(s_k,Z_k)]` with distinct strings.
#[derive(Clone, Debug, PartialEq)]
pub struct IndexExpr(pub Vec<(Name, Expr)>);

#[derive(Clone, Debug, PartialEq)]
pub enum Cmd {
    Skip,
    Score(Expr),
    /// `x := fetch(I)`; the target is always a real variable.
    Fetch(Name, IndexExpr),
    Assign(Var, Expr),
    /// Two or more commands; never nested directly inside another `Seq`.
    Seq(Vec<Cmd>),
    Ifz(Expr, Box<Cmd>, Box<Cmd>),
    /// `for x:int in range(n) C`.
    For(Name, u32, Box<Cmd>),
    LoopFixpt(u32, Box<Cmd>),
    ExtendIndex(Name, u32, Box<Cmd>),
    /// `x:int := lookup_index(s)`.
    LookupIndex(Name, Name),
    Shift(Name),
    ExtendedLoop(Name, u32, Box<Cmd>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tier {
    Source,
    Target,
    Relaxed,
}

impl std::str::FromStr for Tier {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "source" => Ok(Tier::Source),
            "target" => Ok(Tier::Target),
            "relaxed" => Ok(Tier::Relaxed),
            _ => Err(Error::Invalid(format!("unknown tier {s:?}"))),
        }
    }
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Tier::Source => "source",
            Tier::Target => "target",
            Tier::Relaxed => "relaxed",
        })
    }
}

/// Strings starting with this sigil are reserved for translation output.
pub const RESERVED_SIGIL: char = '$';

impl Expr {
    pub fn var(v: Var) -> Self {
        Expr::Var(v)
    }

    pub fn prim(p: Prim, args: Vec<Expr>) -> Self {
        Expr::Prim(p, args)
    }

    pub fn free_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        match self {
            Expr::Var(v) => {
                out.insert(v.clone());
            }
            Expr::Prim(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
            Expr::Int(_) | Expr::Real(_) => {}
        }
    }

    pub fn type_of(&self) -> Result<Ty> {
        match self {
            Expr::Int(_) => Ok(Ty::Int),
            Expr::Real(_) => Ok(Ty::Real),
            Expr::Var(v) => Ok(v.ty),
            Expr::Prim(p, args) => {
                let tys = args.iter().map(Expr::type_of).collect::<Result<Vec<_>>>()?;
                p.result_type(&tys)
            }
        }
    }
}

impl IndexExpr {
    pub fn free_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        for (_, e) in &self.0 {
            e.collect_vars(&mut out);
        }
        out
    }
}

impl Cmd {
    /// Sequences commands, flattening nested sequences and dropping the
    /// wrapper for a single command. An empty list gives `skip`.
    pub fn seq(cmds: impl IntoIterator<Item = Cmd>) -> Cmd {
        let mut out = Vec::new();
        for c in cmds {
            match c {
                Cmd::Seq(cs) => out.extend(cs),
                c => out.push(c),
            }
        }
        match out.len() {
            0 => Cmd::Skip,
            1 => out.pop().expect("one element"),
            _ => Cmd::Seq(out),
        }
    }

    pub fn ifz(z: Expr, c1: Cmd, c2: Cmd) -> Cmd {
        Cmd::Ifz(z, Box::new(c1), Box::new(c2))
    }

    pub fn for_loop(x: &str, n: u32, body: Cmd) -> Cmd {
        Cmd::For(x.into(), n, Box::new(body))
    }

    /// Every string appearing in the command.
    pub fn strings(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.walk(&mut |c| match c {
            Cmd::Fetch(_, ie) => out.extend(ie.0.iter().map(|(s, _)| s.clone())),
            Cmd::ExtendIndex(s, _, _)
            | Cmd::LookupIndex(_, s)
            | Cmd::Shift(s)
            | Cmd::ExtendedLoop(s, _, _) => {
                out.insert(s.clone());
            }
            _ => {}
        });
        out
    }

    /// Every variable the command mentions, read or written.
    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.walk(&mut |c| match c {
            Cmd::Score(e) => e.collect_vars(&mut out),
            Cmd::Fetch(x, ie) => {
                out.insert(Var { name: x.clone(), ty: Ty::Real });
                out.extend(ie.free_vars());
            }
            Cmd::Assign(x, e) => {
                out.insert(x.clone());
                e.collect_vars(&mut out);
            }
            Cmd::Ifz(z, _, _) => z.collect_vars(&mut out),
            Cmd::For(x, _, _) | Cmd::LookupIndex(x, _) => {
                out.insert(Var { name: x.clone(), ty: Ty::Int });
            }
            _ => {}
        });
        out
    }

    /// Preorder traversal.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Cmd)) {
        f(self);
        match self {
            Cmd::Seq(cs) => cs.iter().for_each(|c| c.walk(f)),
            Cmd::Ifz(_, a, b) => {
                a.walk(f);
                b.walk(f);
            }
            Cmd::For(_, _, b) | Cmd::LoopFixpt(_, b) | Cmd::ExtendIndex(_, _, b) | Cmd::ExtendedLoop(_, _, b) => {
                b.walk(f)
            }
            _ => {}
        }
    }

    /// Number of AST nodes, used to rank shrink candidates.
    pub fn size(&self) -> usize {
        let mut n = 0;
        self.walk(&mut |_| n += 1);
        n
    }

    /// Checks tier membership, loop counts, index strings and types.
    pub fn validate(&self, tier: Tier) -> Result<()> {
        let mut err = None;
        self.walk(&mut |c| {
            if err.is_none() {
                if let Err(e) = c.validate_node(tier) {
                    err = Some(e);
                }
            }
        });
        err.map_or(Ok(()), Err)
    }

    fn validate_node(&self, tier: Tier) -> Result<()> {
        let violation = |construct: &str| Error::TierViolation {
            construct: construct.into(),
            tier: tier.to_string(),
        };
        let check_string = |s: &Name| {
            if tier == Tier::Source && s.starts_with(RESERVED_SIGIL) {
                Err(violation(&format!("reserved string {s:?}")))
            } else {
                Ok(())
            }
        };
        let check_n = |n: u32| {
            if n == 0 {
                Err(Error::Invalid("loop count must be at least 1".into()))
            } else {
                Ok(())
            }
        };
        let expect = |e: &Expr, want: Ty, what: &str| {
            let got = e.type_of()?;
            if got == want {
                Ok(())
            } else {
                Err(Error::Type(format!("{what} expects {want}, found {got}")))
            }
        };
        match self {
            Cmd::Skip => Ok(()),
            Cmd::Score(e) => expect(e, Ty::Real, "score"),
            Cmd::Fetch(_, ie) => {
                let mut seen = BTreeSet::new();
                for (s, z) in &ie.0 {
                    check_string(s)?;
                    if !seen.insert(s) {
                        return Err(Error::DuplicateIndexString(s.to_string()));
                    }
                    expect(z, Ty::Int, "index component")?;
                }
                Ok(())
            }
            Cmd::Assign(x, e) => expect(e, x.ty, &format!("assignment to {x}")),
            Cmd::Seq(cs) => {
                if cs.len() < 2 || cs.iter().any(|c| matches!(c, Cmd::Seq(_))) {
                    Err(Error::Invalid("malformed sequence".into()))
                } else {
                    Ok(())
                }
            }
            Cmd::Ifz(z, _, _) => expect(z, Ty::Int, "ifz"),
            Cmd::For(_, n, _) => check_n(*n),
            Cmd::LoopFixpt(n, _) => {
                if tier != Tier::Target {
                    return Err(violation("loop_fixpt_noacc"));
                }
                check_n(*n)
            }
            Cmd::ExtendIndex(s, n, _) => {
                if tier != Tier::Target {
                    return Err(violation("extend_index"));
                }
                check_n(*n)?;
                check_string(s)
            }
            Cmd::Shift(_) => {
                if tier != Tier::Target {
                    return Err(violation("shift"));
                }
                Ok(())
            }
            Cmd::LookupIndex(..) => {
                if tier == Tier::Source {
                    return Err(violation("lookup_index"));
                }
                Ok(())
            }
            Cmd::ExtendedLoop(_, n, _) => {
                if tier != Tier::Relaxed {
                    return Err(violation("extended_loop_with_shift"));
                }
                check_n(*n)
            }
        }
    }
}
