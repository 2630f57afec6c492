//! Variables of the jet space and interned symbolic parameters.
//!
//! A [`Var`] is one of: a field variable `u^i`, a jet variable `u^i_(k)`
//! (`k >= 1`, `u^i_(1) = u^i_x`), a test-covector jet `psi_{a,i,(k)}`
//! (three slots `a = 0,1,2`, `k >= 0`), a symbolic parameter, or an
//! interned radical atom `sqrt(...)`. All five kinds are packed into a
//! single `u32` so monomial keys compare cheaply.

use std::collections::HashMap;
use std::fmt;
use std::sync::{OnceLock, RwLock};

const KIND_SHIFT: u32 = 28;
const KIND_FIELD: u32 = 1;
const KIND_JET: u32 = 2;
const KIND_COV: u32 = 3;
const KIND_PARAM: u32 = 4;
const KIND_RADICAL: u32 = 5;

/// Interned name of a symbolic parameter (`c1`, `d5`, `alpha`, `eps`, `lambda`, ...).
#[derive(Copy, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Symbol(pub(crate) u32);

struct Interner {
    names: Vec<String>,
    ids: HashMap<String, u32>,
}

fn interner() -> &'static RwLock<Interner> {
    static INTERNER: OnceLock<RwLock<Interner>> = OnceLock::new();
    INTERNER.get_or_init(|| {
        RwLock::new(Interner {
            names: Vec::new(),
            ids: HashMap::new(),
        })
    })
}

impl Symbol {
    /// Interns `name` and returns its symbol. Idempotent.
    pub fn new(name: &str) -> Symbol {
        {
            let int = interner().read().unwrap();
            if let Some(&id) = int.ids.get(name) {
                return Symbol(id);
            }
        }
        let mut int = interner().write().unwrap();
        if let Some(&id) = int.ids.get(name) {
            return Symbol(id);
        }
        let id = int.names.len() as u32;
        int.names.push(name.to_string());
        int.ids.insert(name.to_string(), id);
        Symbol(id)
    }

    pub fn name(&self) -> String {
        interner().read().unwrap().names[self.0 as usize].clone()
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())
    }
}

/// Identifier of an interned radical atom; see [`crate::expr`] for the registry.
#[derive(Copy, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct RadId(pub(crate) u32);

/// A dependent variable, parameter, or radical atom, packed into 32 bits.
///
/// The packed layout gives a fixed total order: fields < jets < covector
/// jets < parameters < radicals, with component and jet order breaking
/// ties. This order is the variable ordering of the polynomial kernel.
#[derive(Copy, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(u32);

impl Var {
    /// Field variable `u^i` (0-based component index).
    pub fn field(comp: usize) -> Var {
        debug_assert!(comp < 256);
        Var((KIND_FIELD << KIND_SHIFT) | (comp as u32) << 16)
    }

    /// Jet variable `u^i_(k)`, `k >= 1`; `jet(i, 0)` is the field variable itself.
    pub fn jet(comp: usize, order: usize) -> Var {
        if order == 0 {
            return Var::field(comp);
        }
        debug_assert!(comp < 256 && order < 65536);
        Var((KIND_JET << KIND_SHIFT) | (comp as u32) << 16 | order as u32)
    }

    /// Test-covector jet `psi_{slot,comp,(order)}`; `order = 0` is the covector itself.
    pub fn cov(slot: usize, comp: usize, order: usize) -> Var {
        debug_assert!(slot < 8 && comp < 16 && order < 65536);
        Var((KIND_COV << KIND_SHIFT) | (slot as u32) << 24 | (comp as u32) << 16 | order as u32)
    }

    /// Symbolic parameter.
    pub fn param(sym: Symbol) -> Var {
        Var((KIND_PARAM << KIND_SHIFT) | sym.0)
    }

    pub(crate) fn radical(id: RadId) -> Var {
        Var((KIND_RADICAL << KIND_SHIFT) | id.0)
    }

    fn kind(&self) -> u32 {
        self.0 >> KIND_SHIFT
    }

    pub(crate) fn raw(&self) -> u32 {
        self.0
    }

    pub fn is_param(&self) -> bool {
        self.kind() == KIND_PARAM
    }

    pub fn is_radical(&self) -> bool {
        self.kind() == KIND_RADICAL
    }

    /// `Some(symbol)` when this is a parameter.
    pub fn as_param(&self) -> Option<Symbol> {
        (self.kind() == KIND_PARAM).then(|| Symbol(self.0 & 0x0fff_ffff))
    }

    pub(crate) fn as_radical(&self) -> Option<RadId> {
        (self.kind() == KIND_RADICAL).then(|| RadId(self.0 & 0x0fff_ffff))
    }

    /// `Some((comp, order))` for a field (`order = 0`) or jet variable.
    pub fn as_jet(&self) -> Option<(usize, usize)> {
        match self.kind() {
            KIND_FIELD => Some((((self.0 >> 16) & 0xff) as usize, 0)),
            KIND_JET => Some((((self.0 >> 16) & 0xff) as usize, (self.0 & 0xffff) as usize)),
            _ => None,
        }
    }

    /// `Some((slot, comp, order))` for a covector jet.
    pub fn as_cov(&self) -> Option<(usize, usize, usize)> {
        (self.kind() == KIND_COV).then(|| {
            (
                ((self.0 >> 24) & 0x0f) as usize,
                ((self.0 >> 16) & 0xff) as usize,
                (self.0 & 0xffff) as usize,
            )
        })
    }

    /// Total x-derivative of this variable, if it is a field, jet or covector jet.
    pub(crate) fn x_derivative(&self) -> Option<Var> {
        match self.kind() {
            KIND_FIELD => {
                let (i, _) = self.as_jet().unwrap();
                Some(Var::jet(i, 1))
            }
            KIND_JET => {
                let (i, k) = self.as_jet().unwrap();
                Some(Var::jet(i, k + 1))
            }
            KIND_COV => {
                let (a, i, k) = self.as_cov().unwrap();
                Some(Var::cov(a, i, k + 1))
            }
            _ => None,
        }
    }

    /// Jet order contributing to the homogeneity degree (`deg u^i_(k) = k`).
    pub fn jet_degree(&self) -> usize {
        match self.as_jet() {
            Some((_, k)) => k,
            None => 0,
        }
    }

    /// Jet order for the order cap, counting covector jets as well.
    pub fn jet_order(&self) -> usize {
        match self.kind() {
            KIND_JET => (self.0 & 0xffff) as usize,
            KIND_COV => (self.0 & 0xffff) as usize,
            _ => 0,
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind() {
            KIND_FIELD => {
                let (i, _) = self.as_jet().unwrap();
                write!(f, "u{}", i + 1)
            }
            KIND_JET => {
                let (i, k) = self.as_jet().unwrap();
                if k <= 3 {
                    write!(f, "u{}{}", i + 1, "x".repeat(k))
                } else {
                    write!(f, "u{}_{}", i + 1, k)
                }
            }
            KIND_COV => {
                let (a, i, k) = self.as_cov().unwrap();
                if k == 0 {
                    write!(f, "p{}_{}", a + 1, i + 1)
                } else if k <= 3 {
                    write!(f, "p{}_{}{}", a + 1, i + 1, "x".repeat(k))
                } else {
                    write!(f, "p{}_{}_{}", a + 1, i + 1, k)
                }
            }
            KIND_PARAM => write!(f, "{}", self.as_param().unwrap()),
            KIND_RADICAL => write!(f, "#rad{}", self.as_radical().unwrap().0),
            _ => write!(f, "#bad"),
        }
    }
}

impl fmt::Debug for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Component count and jet-order cap for a computation.
///
/// Every operation that raises the jet order checks the cap and fails
/// loudly instead of truncating.
#[derive(Copy, Clone, Debug)]
pub struct JetCtx {
    pub m: usize,
    pub max_jet_order: usize,
}

/// Default cap: third-order operators under bracket and adjoint reach jets
/// of order ~7; a little headroom on top of that.
pub const DEFAULT_MAX_JET_ORDER: usize = 9;

impl JetCtx {
    pub fn new(m: usize) -> JetCtx {
        JetCtx {
            m,
            max_jet_order: DEFAULT_MAX_JET_ORDER,
        }
    }

    pub fn with_cap(m: usize, max_jet_order: usize) -> JetCtx {
        JetCtx { m, max_jet_order }
    }

    /// Same components, cap raised to at least `cap`.
    pub fn raised(&self, cap: usize) -> JetCtx {
        JetCtx {
            m: self.m,
            max_jet_order: self.max_jet_order.max(cap),
        }
    }
}
