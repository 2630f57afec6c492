//! Exact scalar expressions on the jet space.
//!
//! An [`Expr`] is a rational function of field variables, jet variables,
//! test-covector jets and symbolic parameters, possibly extended by opaque
//! square-root atoms. The rational fragment is kept in canonical form
//! (see [`Rat`]), so equality there is decidable structurally; expressions
//! containing radicals are compared by sampling at random rational points
//! (a semi-decision, documented with tolerance 1e-9).
//!
//! Radical atoms are interned globally: two `sqrt` nodes with equal
//! canonical arguments are the same variable of the polynomial kernel. A
//! perfect-square argument collapses to its rational root at construction;
//! no other rewriting across radicals is performed.

use std::collections::HashMap;
use std::sync::{OnceLock, RwLock};

use num_rational::BigRational;
use num_traits::ToPrimitive;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::poly::{rational_to_f64, Poly};
use crate::rat::Rat;
use crate::sym::{RadId, Symbol, Var};

struct RadicalReg {
    args: Vec<Rat>,
    ids: HashMap<Rat, u32>,
}

fn registry() -> &'static RwLock<RadicalReg> {
    static REG: OnceLock<RwLock<RadicalReg>> = OnceLock::new();
    REG.get_or_init(|| {
        RwLock::new(RadicalReg {
            args: Vec::new(),
            ids: HashMap::new(),
        })
    })
}

fn intern_radical(arg: Rat) -> RadId {
    {
        let reg = registry().read().unwrap();
        if let Some(&id) = reg.ids.get(&arg) {
            return RadId(id);
        }
    }
    let mut reg = registry().write().unwrap();
    if let Some(&id) = reg.ids.get(&arg) {
        return RadId(id);
    }
    let id = reg.args.len() as u32;
    reg.args.push(arg.clone());
    reg.ids.insert(arg, id);
    RadId(id)
}

pub(crate) fn radical_arg(id: RadId) -> Rat {
    registry().read().unwrap().args[id.0 as usize].clone()
}

/// An exact scalar expression; see the module docs.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Expr(Rat);

impl Expr {
    pub fn zero() -> Expr {
        Expr(Rat::zero())
    }

    pub fn one() -> Expr {
        Expr(Rat::one())
    }

    pub fn int(n: i64) -> Expr {
        Expr(Rat::from_int(n))
    }

    /// Rational literal `n/d`.
    pub fn frac(n: i64, d: i64) -> Expr {
        Expr(Rat::from_frac(n, d))
    }

    pub fn rational(c: BigRational) -> Expr {
        Expr(Rat::from_rational(c))
    }

    pub fn var(v: Var) -> Expr {
        Expr(Rat::from_poly(Poly::var(v)))
    }

    /// Field variable `u^(i+1)` (0-based index).
    pub fn field(i: usize) -> Expr {
        Expr::var(Var::field(i))
    }

    /// Jet variable; `jet(i, 1)` is `u^(i+1)_x`.
    pub fn jet(i: usize, k: usize) -> Expr {
        Expr::var(Var::jet(i, k))
    }

    pub fn cov(slot: usize, comp: usize, order: usize) -> Expr {
        Expr::var(Var::cov(slot, comp, order))
    }

    pub fn param(name: &str) -> Expr {
        Expr::var(Var::param(Symbol::new(name)))
    }

    pub(crate) fn from_rat(r: Rat) -> Expr {
        Expr(r)
    }

    /// The canonical fraction behind this expression.
    pub fn rat(&self) -> &Rat {
        &self.0
    }

    /// Square root. Perfect squares collapse to their rational root;
    /// everything else becomes an opaque interned atom.
    pub fn sqrt(&self) -> Expr {
        if self.0.is_zero() {
            return Expr::zero();
        }
        // sqrt(n/d): try exact roots of numerator and denominator.
        if let (Some(sn), Some(sd)) = (self.0.num().try_sqrt(), self.0.den().try_sqrt()) {
            return Expr(Rat::new(sn, sd));
        }
        let id = intern_radical(self.0.clone());
        Expr::var(Var::radical(id))
    }

    pub fn add(&self, other: &Expr) -> Expr {
        Expr(self.0.add(&other.0))
    }

    pub fn sub(&self, other: &Expr) -> Expr {
        Expr(self.0.sub(&other.0))
    }

    pub fn neg(&self) -> Expr {
        Expr(self.0.neg())
    }

    pub fn mul(&self, other: &Expr) -> Expr {
        Expr(self.0.mul(&other.0))
    }

    pub fn div(&self, other: &Expr) -> Expr {
        Expr(self.0.div(&other.0))
    }

    pub fn pow(&self, n: i32) -> Expr {
        Expr(self.0.pow(n))
    }

    pub fn scale(&self, n: i64, d: i64) -> Expr {
        self.mul(&Expr::frac(n, d))
    }

    pub fn as_constant(&self) -> Option<BigRational> {
        self.0.as_constant()
    }

    /// True when no radical atom occurs (transitively).
    pub fn is_rational(&self) -> bool {
        !self
            .all_vars()
            .iter()
            .any(|v| v.is_radical())
    }

    /// Variables of the canonical fraction, radical atoms unexpanded.
    pub fn top_vars(&self) -> Vec<Var> {
        let mut vs = self.0.num().vars();
        for v in self.0.den().vars() {
            if let Err(pos) = vs.binary_search(&v) {
                vs.insert(pos, v);
            }
        }
        vs
    }

    /// All variables, looking through radical arguments; radical atoms
    /// themselves are included as well.
    pub fn all_vars(&self) -> Vec<Var> {
        let mut out = Vec::new();
        let mut stack = self.top_vars();
        while let Some(v) = stack.pop() {
            if let Err(pos) = out.binary_search(&v) {
                out.insert(pos, v);
                if let Some(id) = v.as_radical() {
                    let arg = radical_arg(id);
                    let mut vs = arg.num().vars();
                    for w in arg.den().vars() {
                        if let Err(p) = vs.binary_search(&w) {
                            vs.insert(p, w);
                        }
                    }
                    stack.extend(vs);
                }
            }
        }
        out
    }

    /// Largest jet order among field and covector jets (through radicals).
    pub fn max_jet_order(&self) -> usize {
        self.all_vars()
            .iter()
            .map(|v| v.jet_order())
            .max()
            .unwrap_or(0)
    }

    /// Partial derivative with respect to a single variable, with the
    /// chain rule through radical atoms.
    pub fn partial(&self, v: Var) -> Expr {
        Expr(rat_partial(&self.0, v))
    }

    /// Exact zero test on the rational fragment; sampling otherwise.
    pub fn is_zero(&self) -> bool {
        self.try_is_zero().expect("zero test failed to sample valid points")
    }

    pub fn try_is_zero(&self) -> Result<bool> {
        if self.is_rational() {
            return Ok(self.0.is_zero());
        }
        self.is_zero_sampled(8, DEFAULT_ZERO_TEST_SEED)
    }

    /// Numeric zero test at `n` random rational points, tolerance 1e-9
    /// relative to the term magnitude. A semi-decision for radical
    /// expressions.
    pub fn is_zero_sampled(&self, n: usize, seed: u64) -> Result<bool> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vars = self.all_vars();
        let mut accepted = 0;
        for _ in 0..(n * 50) {
            let point = sample_point(&vars, &mut rng);
            match self.eval_f64(&|v| point.get(&v).copied()) {
                Ok(val) => {
                    let scale = self
                        .magnitude_f64(&|v| point.get(&v).copied())
                        .unwrap_or(1.0)
                        .max(1.0);
                    if val.abs() > 1e-9 * scale {
                        return Ok(false);
                    }
                    accepted += 1;
                    if accepted >= n {
                        return Ok(true);
                    }
                }
                Err(_) => continue,
            }
        }
        Err(Error::Undecided(
            "could not sample enough valid points for the zero test".into(),
        ))
    }

    pub fn equals(&self, other: &Expr) -> bool {
        self.sub(other).is_zero()
    }

    /// IEEE double evaluation at a full assignment. Radical atoms are
    /// resolved recursively and memoized per call.
    pub fn eval_f64(&self, point: &dyn Fn(Var) -> Option<f64>) -> Result<f64> {
        let mut cache: HashMap<Var, f64> = HashMap::new();
        let num = eval_poly(self.0.num(), point, &mut cache)?;
        let den = eval_poly(self.0.den(), point, &mut cache)?;
        if den.abs() < 1e-12 {
            return Err(Error::PoleAtPoint);
        }
        Ok(num / den)
    }

    /// Magnitude proxy: sum of absolute term values of the numerator over
    /// the absolute denominator.
    fn magnitude_f64(&self, point: &dyn Fn(Var) -> Option<f64>) -> Result<f64> {
        let mut cache: HashMap<Var, f64> = HashMap::new();
        let num = eval_poly_abs(self.0.num(), point, &mut cache)?;
        let den = eval_poly(self.0.den(), point, &mut cache)?;
        if den.abs() < 1e-12 {
            return Err(Error::PoleAtPoint);
        }
        Ok(num / den.abs())
    }

    /// Substitutes variables by expressions. Variables not mapped stay.
    /// Radical arguments are substituted recursively and re-canonicalized.
    pub fn substitute(&self, map: &dyn Fn(Var) -> Option<Expr>) -> Expr {
        let num = subst_poly(self.0.num(), map);
        let den = subst_poly(self.0.den(), map);
        num.div(&den)
    }

    /// Substitute parameters by expressions.
    pub fn subst_params(&self, assign: &HashMap<Symbol, Expr>) -> Expr {
        self.substitute(&|v| v.as_param().and_then(|s| assign.get(&s).cloned()))
    }
}

const DEFAULT_ZERO_TEST_SEED: u64 = 0x48414d54;

fn eval_poly(
    p: &Poly,
    point: &dyn Fn(Var) -> Option<f64>,
    cache: &mut HashMap<Var, f64>,
) -> Result<f64> {
    let mut acc = 0.0;
    for (m, c) in p.terms() {
        let mut t = rational_to_f64(c);
        for (v, e) in m.vars() {
            let x = eval_var(v, point, cache)?;
            t *= x.powi(e as i32);
        }
        acc += t;
    }
    Ok(acc)
}

fn eval_poly_abs(
    p: &Poly,
    point: &dyn Fn(Var) -> Option<f64>,
    cache: &mut HashMap<Var, f64>,
) -> Result<f64> {
    let mut acc = 0.0;
    for (m, c) in p.terms() {
        let mut t = rational_to_f64(c).abs();
        for (v, e) in m.vars() {
            let x = eval_var(v, point, cache)?;
            t *= x.abs().powi(e as i32);
        }
        acc += t;
    }
    Ok(acc)
}

fn eval_var(
    v: Var,
    point: &dyn Fn(Var) -> Option<f64>,
    cache: &mut HashMap<Var, f64>,
) -> Result<f64> {
    if let Some(&x) = cache.get(&v) {
        return Ok(x);
    }
    let x = if let Some(id) = v.as_radical() {
        let arg = radical_arg(id);
        let n = eval_poly(arg.num(), point, cache)?;
        let d = eval_poly(arg.den(), point, cache)?;
        if d.abs() < 1e-12 {
            return Err(Error::PoleAtPoint);
        }
        let val = n / d;
        if val < 0.0 {
            return Err(Error::NegativeRadicand);
        }
        val.sqrt()
    } else {
        point(v).ok_or_else(|| Error::Domain(format!("unassigned variable {}", v)))?
    };
    cache.insert(v, x);
    Ok(x)
}

fn subst_poly(p: &Poly, map: &dyn Fn(Var) -> Option<Expr>) -> Expr {
    let mut acc = Expr::zero();
    for (m, c) in p.terms() {
        let mut t = Expr::rational(c.clone());
        for (v, e) in m.vars() {
            let base = subst_var(v, map);
            t = t.mul(&base.pow(e as i32));
        }
        acc = acc.add(&t);
    }
    acc
}

fn subst_var(v: Var, map: &dyn Fn(Var) -> Option<Expr>) -> Expr {
    if let Some(e) = map(v) {
        return e;
    }
    if let Some(id) = v.as_radical() {
        let arg = radical_arg(id);
        let num = subst_poly(arg.num(), map);
        let den = subst_poly(arg.den(), map);
        let new_arg = num.div(&den);
        if new_arg.rat() == &arg {
            return Expr::var(v);
        }
        return new_arg.sqrt();
    }
    Expr::var(v)
}

/// Partial derivative of a canonical fraction, chaining through radicals:
/// d sqrt(f)/dv = (df/dv) / (2 sqrt(f)).
fn rat_partial(r: &Rat, v: Var) -> Rat {
    let dn = poly_partial(r.num(), v);
    if r.den().is_one() {
        return dn;
    }
    if !r.den().contains_var(v) && !den_has_radical_in(r.den(), v) {
        // (n/d)' = n'/d with d free of v.
        return dn.mul(&Rat::new(Poly::one(), r.den().clone()));
    }
    let dd = poly_partial(r.den(), v);
    if let (Some(_dd_poly), Some(dn_poly)) = (poly_of(&dd), poly_of(&dn)) {
        // With d = c prod f_i^(e_i):
        // (n/d)' = (n' P - n sum_i e_i f_i' P/f_i) / (d P), P = prod f_i.
        // Every product here is big-by-small; no large gcd runs.
        let factors = crate::poly::split_factors(r.den());
        let mut p_all = Poly::one();
        for (f, _) in factors.iter() {
            p_all = p_all.mul(f);
        }
        let mut log_term = Poly::zero();
        for (f, e) in factors.iter() {
            let df = f.partial_raw(v);
            if df.is_zero() {
                continue;
            }
            let cofactor = p_all.div_exact(f).expect("factor divides product");
            log_term = log_term.add(
                &df.mul(&cofactor)
                    .mul_scalar(&num_rational::BigRational::from_integer((*e).into())),
            );
        }
        let num = dn_poly.mul(&p_all).sub(&r.num().mul(&log_term));
        let den = r.den().mul(&p_all);
        return Rat::new(num, den);
    }
    // Radical chain terms present: fall back to the quotient rule.
    let den_sq = Rat::new(Poly::one(), r.den().mul(r.den()));
    dn.mul(&Rat::from_poly(r.den().clone()))
        .sub(&dd.mul(&Rat::from_poly(r.num().clone())))
        .mul(&den_sq)
}

fn poly_of(r: &Rat) -> Option<Poly> {
    r.den().is_one().then(|| r.num().clone())
}

fn den_has_radical_in(den: &Poly, v: Var) -> bool {
    den.vars().iter().any(|w| {
        w.as_radical()
            .map(|id| {
                let arg = radical_arg(id);
                arg.num().contains_var(v) || arg.den().contains_var(v)
                    || den_has_radical_in(arg.num(), v)
                    || den_has_radical_in(arg.den(), v)
            })
            .unwrap_or(false)
    })
}

/// Partial derivative of a polynomial over the extended variable set.
fn poly_partial(p: &Poly, v: Var) -> Rat {
    // Direct part: v as an ordinary variable.
    let mut out = Rat::from_poly(p.partial_raw(v));
    // Chain parts through radical atoms that depend on v.
    for w in p.vars() {
        if let Some(id) = w.as_radical() {
            let arg = radical_arg(id);
            let darg = rat_partial(&arg, v);
            if darg.is_zero() {
                continue;
            }
            // d/dv (w^e terms) = (dp/dw) * darg / (2 w)
            let dp_dw = Rat::from_poly(p.partial_raw(w));
            let two_w = Rat::from_poly(Poly::var(w).mul_scalar(&BigRational::from_integer(2.into())));
            out = out.add(&dp_dw.mul(&darg).div(&two_w));
        }
    }
    out
}

fn sample_point(vars: &[Var], rng: &mut impl Rng) -> HashMap<Var, f64> {
    let mut point = HashMap::new();
    for &v in vars {
        if v.is_radical() {
            continue;
        }
        let (lo, hi) = default_range(v);
        // Dyadic rational in [lo, hi): exact in f64.
        let steps = 512;
        let k: u32 = rng.gen_range(1..steps);
        point.insert(v, lo + (hi - lo) * (k as f64) / steps as f64);
    }
    point
}

/// Default sampling domain: u1 in [1,2], u2 in [2,3], everything else in
/// [1,2]; keeps clear of poles at u1 = 0.
fn default_range(v: Var) -> (f64, f64) {
    match v.as_jet() {
        Some((1, 0)) => (2.0, 3.0),
        _ => (1.0, 2.0),
    }
}

impl std::fmt::Debug for Expr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", crate::text::pretty(self))
    }
}

impl std::fmt::Display for Expr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", crate::text::pretty(self))
    }
}

/// Converts a rational to f64 by way of `ToPrimitive`, for report output.
pub fn rational_as_f64(c: &BigRational) -> f64 {
    c.to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_of_perfect_square_collapses() {
        let u1 = Expr::field(0);
        let p = u1.add(&Expr::int(1)).pow(2);
        assert_eq!(p.sqrt(), u1.add(&Expr::int(1)));
        let c = Expr::frac(9, 4);
        assert_eq!(c.sqrt(), Expr::frac(3, 2));
    }

    #[test]
    fn sqrt_opaque_and_interned() {
        let u1 = Expr::field(0);
        let u2 = Expr::field(1);
        let arg = u2.pow(2).sub(&u1.mul(&u2).scale(2, 1));
        let s1 = arg.sqrt();
        let s2 = arg.sqrt();
        assert_eq!(s1, s2);
        assert!(!s1.is_rational());
    }

    #[test]
    fn radical_zero_test_by_sampling() {
        let u1 = Expr::field(0);
        let u2 = Expr::field(1);
        let arg = u1.mul(&u2).add(&Expr::int(1));
        let s = arg.sqrt();
        // s^2 - arg == 0, detectable only numerically (no rewriting).
        let diff = s.mul(&s).sub(&arg);
        assert!(!diff.is_rational());
        assert!(diff.is_zero());
        // s - arg is nonzero.
        assert!(!s.sub(&arg).is_zero());
    }

    #[test]
    fn eval_numeric_examples() {
        let u1 = Expr::field(0);
        let u2 = Expr::field(1);
        // (u2+1)/u1 at u1=2, u2=3 -> 2.0
        let e = u2.add(&Expr::int(1)).div(&u1);
        let point = |v: Var| match v.as_jet() {
            Some((0, 0)) => Some(2.0),
            Some((1, 0)) => Some(3.0),
            _ => None,
        };
        assert_eq!(e.eval_f64(&point).unwrap(), 2.0);
        // sqrt((u2)^2 - 2 u1 u2) at u1=1, u2=-1 -> sqrt(3)
        let s = u2.pow(2).sub(&u1.mul(&u2).scale(2, 1)).sqrt();
        let point2 = |v: Var| match v.as_jet() {
            Some((0, 0)) => Some(1.0),
            Some((1, 0)) => Some(-1.0),
            _ => None,
        };
        assert!((s.eval_f64(&point2).unwrap() - 3f64.sqrt()).abs() < 1e-12);
        // 1/u1 at u1=0 -> pole
        let inv = Expr::one().div(&u1);
        let point3 = |v: Var| match v.as_jet() {
            Some((0, 0)) => Some(0.0),
            _ => None,
        };
        assert!(matches!(inv.eval_f64(&point3), Err(Error::PoleAtPoint)));
        // negative radicand
        let point4 = |v: Var| match v.as_jet() {
            Some((0, 0)) => Some(1.0),
            Some((1, 0)) => Some(1.0),
            _ => None,
        };
        assert!(matches!(s.eval_f64(&point4), Err(Error::NegativeRadicand)));
    }

    #[test]
    fn substitution_reaches_radical_args() {
        let u1 = Expr::field(0);
        let s = u1.add(&Expr::int(1)).sqrt();
        // u1 -> 3 turns sqrt(u1+1) into 2.
        let subbed = s.substitute(&|v| {
            (v == Var::field(0)).then(|| Expr::int(3))
        });
        assert_eq!(subbed, Expr::int(2));
    }

    #[test]
    fn partial_through_radical() {
        // d/du1 sqrt(u1) = 1/(2 sqrt(u1)); check numerically.
        let u1 = Expr::field(0);
        let s = u1.sqrt();
        let d = s.partial(Var::field(0));
        let expect = Expr::one().div(&s.scale(2, 1));
        assert!(d.sub(&expect).is_zero());
    }
}
