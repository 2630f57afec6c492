//! Sparse multivariate polynomials over exact rationals.
//!
//! Monomials are sorted exponent vectors over [`Var`] keys, compared in
//! lexicographic order (which is multiplication-compatible, so leading
//! terms behave under division). Polynomials are monomial-to-coefficient
//! maps with no explicit zero coefficients; the zero polynomial is the
//! empty map.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use smallvec::SmallVec;

use crate::sym::Var;

/// A power product of variables; the empty product is 1.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Monomial(SmallVec<[(Var, u32); 4]>);

impl Monomial {
    pub fn one() -> Monomial {
        Monomial(SmallVec::new())
    }

    pub fn var(v: Var) -> Monomial {
        Monomial(smallvec::smallvec![(v, 1)])
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn exponent(&self, v: Var) -> u32 {
        self.0
            .iter()
            .find(|(w, _)| *w == v)
            .map(|(_, e)| *e)
            .unwrap_or(0)
    }

    pub fn vars(&self) -> impl Iterator<Item = (Var, u32)> + '_ {
        self.0.iter().copied()
    }

    pub fn total_degree(&self) -> u32 {
        self.0.iter().map(|(_, e)| e).sum()
    }

    /// Degree with `deg u^i_(k) = k` and everything else 0.
    pub fn jet_degree(&self) -> i64 {
        self.0
            .iter()
            .map(|(v, e)| v.jet_degree() as i64 * *e as i64)
            .sum()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut out = SmallVec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].0.cmp(&other.0[j].0) {
                Ordering::Less => {
                    out.push(self.0[i]);
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(other.0[j]);
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((self.0[i].0, self.0[i].1 + other.0[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.0[i..]);
        out.extend_from_slice(&other.0[j..]);
        Monomial(out)
    }

    /// Componentwise minimum; the gcd of two power products.
    pub fn gcd(&self, other: &Monomial) -> Monomial {
        let mut out = SmallVec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].0.cmp(&other.0[j].0) {
                Ordering::Less => i += 1,
                Ordering::Greater => j += 1,
                Ordering::Equal => {
                    out.push((self.0[i].0, self.0[i].1.min(other.0[j].1)));
                    i += 1;
                    j += 1;
                }
            }
        }
        Monomial(out)
    }

    /// Exact quotient, or `None` when `other` does not divide `self`.
    pub fn div(&self, other: &Monomial) -> Option<Monomial> {
        let mut out = SmallVec::new();
        let mut j = 0;
        for &(v, e) in &self.0 {
            if j < other.0.len() && other.0[j].0 == v {
                let oe = other.0[j].1;
                j += 1;
                if oe > e {
                    return None;
                }
                if e > oe {
                    out.push((v, e - oe));
                }
            } else {
                out.push((v, e));
            }
        }
        if j < other.0.len() {
            return None;
        }
        Some(Monomial(out))
    }

    /// Raise every exponent by a factor.
    pub fn pow_m(&self, e: u32) -> Monomial {
        if e == 0 {
            return Monomial::one();
        }
        Monomial(self.0.iter().map(|(v, ex)| (*v, ex * e)).collect())
    }

    /// Remove a single variable, returning its exponent.
    fn without(&self, v: Var) -> (u32, Monomial) {
        let mut e = 0;
        let rest = self
            .0
            .iter()
            .filter(|(w, we)| {
                if *w == v {
                    e = *we;
                    false
                } else {
                    true
                }
            })
            .copied()
            .collect();
        (e, Monomial(rest))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Monomial {
    /// Lexicographic order: scan variables in increasing [`Var`] order;
    /// the first differing exponent decides, larger exponent first.
    fn cmp(&self, other: &Self) -> Ordering {
        let (mut i, mut j) = (0, 0);
        loop {
            match (self.0.get(i), other.0.get(j)) {
                (None, None) => return Ordering::Equal,
                (Some(_), None) => return Ordering::Greater,
                (None, Some(_)) => return Ordering::Less,
                (Some(&(va, ea)), Some(&(vb, eb))) => match va.cmp(&vb) {
                    // `self` has a positive exponent on an earlier variable.
                    Ordering::Less => return Ordering::Greater,
                    Ordering::Greater => return Ordering::Less,
                    Ordering::Equal => {
                        if ea != eb {
                            return ea.cmp(&eb);
                        }
                        i += 1;
                        j += 1;
                    }
                },
            }
        }
    }
}

impl fmt::Debug for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_one() {
            return write!(f, "1");
        }
        for (idx, (v, e)) in self.0.iter().enumerate() {
            if idx > 0 {
                write!(f, "*")?;
            }
            if *e == 1 {
                write!(f, "{}", v)?;
            } else {
                write!(f, "{}^{}", v, e)?;
            }
        }
        Ok(())
    }
}

/// Sparse multivariate polynomial with `BigRational` coefficients.
#[derive(Clone, PartialEq, Eq, Default, Hash)]
pub struct Poly {
    terms: BTreeMap<Monomial, BigRational>,
}

impl Poly {
    pub fn zero() -> Poly {
        Poly {
            terms: BTreeMap::new(),
        }
    }

    pub fn one() -> Poly {
        Poly::constant(BigRational::one())
    }

    pub fn constant(c: BigRational) -> Poly {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(Monomial::one(), c);
        }
        Poly { terms }
    }

    pub fn from_int(n: i64) -> Poly {
        Poly::constant(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn var(v: Var) -> Poly {
        let mut terms = BTreeMap::new();
        terms.insert(Monomial::var(v), BigRational::one());
        Poly { terms }
    }

    pub fn from_terms(it: impl IntoIterator<Item = (Monomial, BigRational)>) -> Poly {
        let mut p = Poly::zero();
        for (m, c) in it {
            p.add_term(m, c);
        }
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1
            && self
                .terms
                .get(&Monomial::one())
                .map_or(false, |c| c.is_one())
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty() || (self.terms.len() == 1 && self.terms.keys().next().unwrap().is_one())
    }

    /// The constant value when `is_constant()`.
    pub fn as_constant(&self) -> Option<BigRational> {
        if self.is_zero() {
            return Some(BigRational::zero());
        }
        if self.is_constant() {
            return Some(self.terms.values().next().unwrap().clone());
        }
        None
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &BigRational)> {
        self.terms.iter()
    }

    pub fn add_term(&mut self, m: Monomial, c: BigRational) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }

    pub fn neg(&self) -> Poly {
        Poly {
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.clone(), -c.clone()))
                .collect(),
        }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let t0 = std::time::Instant::now();
        let out = self.mul_inner(other);
        gcd_stats::add(&gcd_stats::MUL_NANOS, t0.elapsed().as_nanos() as u64);
        out
    }

    fn mul_inner(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        // Multiply with the smaller operand outermost.
        let (a, b) = if self.terms.len() <= other.terms.len() {
            (self, other)
        } else {
            (other, self)
        };
        let mut out = Poly::zero();
        for (ma, ca) in &a.terms {
            for (mb, cb) in &b.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }

    pub fn mul_scalar(&self, c: &BigRational) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self
                .terms
                .iter()
                .map(|(m, k)| (m.clone(), k * c))
                .collect(),
        }
    }

    pub fn mul_monomial(&self, m: &Monomial) -> Poly {
        Poly {
            terms: self
                .terms
                .iter()
                .map(|(k, c)| (k.mul(m), c.clone()))
                .collect(),
        }
    }

    pub fn pow(&self, n: u32) -> Poly {
        let mut out = Poly::one();
        for _ in 0..n {
            out = out.mul(self);
        }
        out
    }

    /// All variables occurring with positive exponent.
    pub fn vars(&self) -> Vec<Var> {
        let mut vs: Vec<Var> = Vec::new();
        for m in self.terms.keys() {
            for (v, _) in m.vars() {
                if let Err(pos) = vs.binary_search(&v) {
                    vs.insert(pos, v);
                }
            }
        }
        vs
    }

    pub fn contains_var(&self, v: Var) -> bool {
        self.terms.keys().any(|m| m.exponent(v) > 0)
    }

    pub fn degree_in(&self, v: Var) -> u32 {
        self.terms.keys().map(|m| m.exponent(v)).max().unwrap_or(0)
    }

    /// Partial derivative treating every variable (including radical
    /// atoms) as independent.
    pub fn partial_raw(&self, v: Var) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let e = m.exponent(v);
            if e == 0 {
                continue;
            }
            let (_, rest) = m.without(v);
            let reduced = if e > 1 {
                rest.mul(&Monomial(smallvec::smallvec![(v, e - 1)]))
            } else {
                rest
            };
            out.add_term(reduced, c * BigRational::from_integer(BigInt::from(e)));
        }
        out
    }

    /// View as univariate in `v`: exponent -> coefficient polynomial.
    pub fn coeffs_in(&self, v: Var) -> BTreeMap<u32, Poly> {
        let mut out: BTreeMap<u32, Poly> = BTreeMap::new();
        for (m, c) in &self.terms {
            let (e, rest) = m.without(v);
            out.entry(e).or_default().add_term(rest, c.clone());
        }
        out.retain(|_, p| !p.is_zero());
        out
    }

    /// Rebuild from a univariate view.
    pub fn from_coeffs_in(v: Var, coeffs: &BTreeMap<u32, Poly>) -> Poly {
        let mut out = Poly::zero();
        for (e, p) in coeffs {
            let m = if *e == 0 {
                Monomial::one()
            } else {
                Monomial(smallvec::smallvec![(v, *e)])
            };
            out = out.add(&p.mul_monomial(&m));
        }
        out
    }

    /// Leading term in the monomial (lex) order.
    pub fn leading(&self) -> Option<(&Monomial, &BigRational)> {
        self.terms.iter().next_back()
    }

    /// Common monomial factor of all terms.
    pub fn monomial_content(&self) -> Monomial {
        let mut it = self.terms.keys();
        let mut acc = match it.next() {
            Some(m) => m.clone(),
            None => return Monomial::one(),
        };
        for m in it {
            if acc.is_one() {
                break;
            }
            acc = acc.gcd(m);
        }
        acc
    }

    /// Exact quotient `self / d`, or `None` when `d` does not divide `self`.
    pub fn div_exact(&self, d: &Poly) -> Option<Poly> {
        let t0 = std::time::Instant::now();
        let out = self.div_exact_inner(d);
        gcd_stats::add(&gcd_stats::DIV_NANOS, t0.elapsed().as_nanos() as u64);
        out
    }

    fn div_exact_inner(&self, d: &Poly) -> Option<Poly> {
        if d.is_zero() {
            return None;
        }
        if let Some(c) = d.as_constant() {
            return Some(self.mul_scalar(&(BigRational::one() / c)));
        }
        let (dm, dc) = d.leading().unwrap();
        let mut rem = self.clone();
        let mut quot = Poly::zero();
        while let Some((rm, rc)) = rem.leading() {
            let qm = rm.div(dm)?;
            let qc = rc / dc;
            let mut piece = Poly::zero();
            piece.add_term(qm.clone(), qc.clone());
            quot.add_term(qm, qc);
            rem = rem.sub(&piece.mul(d));
        }
        Some(quot)
    }

    /// Splits into `(rational content, primitive integer polynomial)` with
    /// positive leading coefficient. Zero splits as `(0, 0)`.
    pub fn primitive(&self) -> (BigRational, Poly) {
        if self.is_zero() {
            return (BigRational::zero(), Poly::zero());
        }
        let mut den_lcm = BigInt::one();
        for c in self.terms.values() {
            den_lcm = den_lcm.lcm(c.denom());
        }
        let mut num_gcd = BigInt::zero();
        for c in self.terms.values() {
            let scaled = c.numer() * (&den_lcm / c.denom());
            num_gcd = num_gcd.gcd(&scaled);
        }
        let lead_neg = self.leading().unwrap().1.is_negative();
        if lead_neg {
            num_gcd = -num_gcd;
        }
        let content = BigRational::new(num_gcd.clone(), den_lcm);
        let scale = BigRational::one() / content.clone();
        (content, self.mul_scalar(&scale))
    }

    /// Primitive part: integer coefficients, coprime, positive leading sign.
    pub fn primitive_part(&self) -> Poly {
        self.primitive().1
    }

    /// Substitute every variable by an `f64` value.
    pub fn eval_f64(&self, point: &dyn Fn(Var) -> Option<f64>) -> Option<f64> {
        let mut acc = 0.0;
        for (m, c) in &self.terms {
            let mut t = rational_to_f64(c);
            for (v, e) in m.vars() {
                let x = point(v)?;
                t *= x.powi(e as i32);
            }
            acc += t;
        }
        Some(acc)
    }

    /// Sum of absolute values of the evaluated terms; a magnitude scale
    /// for relative zero tests.
    pub fn eval_f64_abs(&self, point: &dyn Fn(Var) -> Option<f64>) -> Option<f64> {
        let mut acc = 0.0;
        for (m, c) in &self.terms {
            let mut t = rational_to_f64(c).abs();
            for (v, e) in m.vars() {
                let x = point(v)?;
                t *= x.abs().powi(e as i32);
            }
            acc += t;
        }
        Some(acc)
    }

    /// Substitute every variable by an exact rational value.
    pub fn eval_rational(&self, point: &dyn Fn(Var) -> Option<BigRational>) -> Option<BigRational> {
        let mut acc = BigRational::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (v, e) in m.vars() {
                let x = point(v)?;
                for _ in 0..e {
                    t *= &x;
                }
            }
            acc += t;
        }
        Some(acc)
    }

    /// Exact square root, when `self` is a perfect square.
    pub fn try_sqrt(&self) -> Option<Poly> {
        if self.is_zero() {
            return Some(Poly::zero());
        }
        if let Some(c) = self.as_constant() {
            return rational_sqrt(&c).map(Poly::constant);
        }
        // Main variable: any occurring variable; use the one from the
        // leading monomial for determinism.
        let v = self.leading().unwrap().0.vars().next().unwrap().0;
        let coeffs = self.coeffs_in(v);
        let deg = *coeffs.keys().next_back().unwrap();
        if deg % 2 != 0 {
            return None;
        }
        let d = deg / 2;
        let lead = coeffs.get(&deg)?;
        let qd = lead.try_sqrt()?;
        let two = BigRational::from_integer(BigInt::from(2));
        let mut q: BTreeMap<u32, Poly> = BTreeMap::new();
        q.insert(d, qd.clone());
        let get = |map: &BTreeMap<u32, Poly>, k: u32| map.get(&k).cloned().unwrap_or_else(Poly::zero);
        for jj in (0..d).rev() {
            // Coefficient of x^(d+jj) in q^2 must equal p_(d+jj):
            // p_(d+jj) = 2 q_d q_jj + sum over ordered pairs (a,b), a+b = d+jj,
            // jj < a,b < d, of q_a q_b.
            let mut cross = Poly::zero();
            for a in (jj + 1)..d {
                let b = d + jj - a;
                cross = cross.add(&get(&q, a).mul(&get(&q, b)));
            }
            let target = get(&coeffs, d + jj).sub(&cross);
            let qj = target.div_exact(&qd.mul_scalar(&two))?;
            if !qj.is_zero() {
                q.insert(jj, qj);
            }
        }
        let cand = Poly::from_coeffs_in(v, &q);
        if cand.mul(&cand) == *self {
            Some(cand)
        } else {
            None
        }
    }
}

pub fn rational_to_f64(c: &BigRational) -> f64 {
    bigint_to_f64(c.numer()) / bigint_to_f64(c.denom())
}

fn bigint_to_f64(n: &BigInt) -> f64 {
    // Good enough for sampling-scale integers; exactness is not needed here.
    let s = n.to_string();
    s.parse::<f64>().unwrap_or(f64::NAN)
}

/// Square root of a nonnegative rational, when exact.
pub fn rational_sqrt(c: &BigRational) -> Option<BigRational> {
    if c.is_negative() {
        return None;
    }
    let n = c.numer().sqrt();
    let d = c.denom().sqrt();
    if &(&n * &n) == c.numer() && &(&d * &d) == c.denom() {
        Some(BigRational::new(n, d))
    } else {
        None
    }
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.terms.iter().rev().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            if m.is_one() {
                write!(f, "{}", c)?;
            } else if c.is_one() {
                write!(f, "{:?}", m)?;
            } else {
                write!(f, "{}*{:?}", c, m)?;
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Multivariate gcd
// ---------------------------------------------------------------------------

/// Splits a small polynomial into pairwise nontrivial factors using
/// gcds with its partial derivatives. Not a full factorization: factors
/// with identical variable support and multiplicity one may stay fused,
/// which only costs a fallback to the general gcd elsewhere.
fn split_factors_uncached(f: &Poly) -> Vec<(Poly, u32)> {
    let mut result = vec![f.primitive_part()];
    let mut changed = true;
    let mut rounds = 0;
    while changed && rounds < 64 {
        changed = false;
        rounds += 1;
        'outer: for idx in 0..result.len() {
            if result[idx].is_constant() {
                continue;
            }
            let p = result[idx].clone();
            for v in p.vars() {
                let d = p.partial_raw(v);
                if d.is_zero() {
                    continue;
                }
                let g = poly_gcd(&p, &d);
                if !g.is_constant() && g != p && g.neg() != p {
                    if let Some(q) = p.div_exact(&g) {
                        result[idx] = g;
                        result.push(q.primitive_part());
                        changed = true;
                        break 'outer;
                    }
                }
            }
        }
    }
    result.retain(|p| !p.is_constant());
    // Group equal factors into powers.
    let mut grouped: Vec<(Poly, u32)> = Vec::new();
    'next: for p in result {
        for (q, e) in grouped.iter_mut() {
            if *q == p {
                *e += 1;
                continue 'next;
            }
        }
        grouped.push((p, 1));
    }
    grouped
}

/// Memoized factor split; denominators repeat heavily across a
/// computation, so this cache is load-bearing for performance.
pub fn split_factors(f: &Poly) -> std::sync::Arc<Vec<(Poly, u32)>> {
    use std::collections::HashMap;
    use std::sync::{Arc, OnceLock, RwLock};
    static CACHE: OnceLock<RwLock<HashMap<Poly, Arc<Vec<(Poly, u32)>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| RwLock::new(HashMap::new()));
    {
        let rd = cache.read().unwrap();
        if let Some(hit) = rd.get(f) {
            return hit.clone();
        }
    }
    let computed = Arc::new(split_factors_uncached(f));
    let mut wr = cache.write().unwrap();
    wr.entry(f.clone()).or_insert_with(|| computed.clone());
    wr.get(f).unwrap().clone()
}

/// Fast necessary condition for `f | p`: the univariate images must
/// divide (sound to use as a rejection filter only).
fn divides_image(f: &Poly, p: &Poly) -> bool {
    let fvars = f.vars();
    let Some(&v) = fvars.first() else {
        return true;
    };
    if p.degree_in(v) < f.degree_in(v) {
        return false;
    }
    for round in 0..2u64 {
        let point = |w: Var| -> u64 { splitmix(w.raw() as u64 ^ (round << 40)) % 65521 + 2 };
        let (fi, pi) = match (eval_univariate(f, v, &point), eval_univariate(p, v, &point)) {
            (Some(x), Some(y)) => (x, y),
            _ => return true,
        };
        if fi.keys().next_back().copied().unwrap_or(0) != f.degree_in(v) {
            continue; // leading coefficient vanished; try another point
        }
        return univariate_divides_mod(&fi, &pi);
    }
    true
}

fn univariate_divides_mod(f: &BTreeMap<u32, u64>, p: &BTreeMap<u32, u64>) -> bool {
    if f.is_empty() {
        return p.is_empty();
    }
    let fd = *f.keys().next_back().unwrap();
    let finv = powmod_inv(*f.get(&fd).unwrap());
    let mut r = p.clone();
    loop {
        let rd = match r.keys().next_back() {
            Some(d) => *d,
            None => return true,
        };
        if rd < fd {
            return false;
        }
        let q = mulmod(*r.get(&rd).unwrap(), finv);
        r.remove(&rd);
        for (e, c) in f {
            if *e == fd {
                continue;
            }
            let shifted = e + rd - fd;
            let sub = mulmod(q, *c);
            let entry = r.entry(shifted).or_insert(0);
            *entry = (*entry + IMAGE_PRIME - sub) % IMAGE_PRIME;
        }
        r.retain(|_, c| *c != 0);
    }
}

/// Trial division with the image filter in front.
fn div_exact_filtered(p: &Poly, f: &Poly) -> Option<Poly> {
    if !divides_image(f, p) {
        return None;
    }
    p.div_exact(f)
}

/// Cancels every factor of a small denominator out of `num`/`den`.
/// Leaves only same-support partial overlaps for the general gcd.
pub(crate) fn cancel_common_small_den(num: &mut Poly, den: &mut Poly) {
    if den.is_constant() || num.is_zero() {
        return;
    }
    let factors = split_factors(den);
    for (f, _) in factors.iter() {
        loop {
            let Some(d2) = div_exact_filtered(den, f) else { break };
            let Some(n2) = div_exact_filtered(num, f) else { break };
            *den = d2;
            *num = n2;
        }
        if den.is_constant() {
            break;
        }
    }
}

/// Profiling counters for the gcd machinery (nanoseconds and calls).
pub mod gcd_stats {
    use std::sync::atomic::{AtomicU64, Ordering};
    pub static GCD_NANOS: AtomicU64 = AtomicU64::new(0);
    pub static GCD_CALLS: AtomicU64 = AtomicU64::new(0);
    pub static PRS_NANOS: AtomicU64 = AtomicU64::new(0);
    pub static PRS_CALLS: AtomicU64 = AtomicU64::new(0);
    pub static IMG_NANOS: AtomicU64 = AtomicU64::new(0);
    pub static DIV_NANOS: AtomicU64 = AtomicU64::new(0);
    pub static MUL_NANOS: AtomicU64 = AtomicU64::new(0);

    pub fn add(counter: &AtomicU64, nanos: u64) {
        counter.fetch_add(nanos, Ordering::Relaxed);
    }

    pub fn report() -> String {
        format!(
            "gcd: {} calls {:.2}s | prs: {} calls {:.2}s | img {:.2}s | div {:.2}s | mul {:.2}s",
            GCD_CALLS.load(Ordering::Relaxed),
            GCD_NANOS.load(Ordering::Relaxed) as f64 / 1e9,
            PRS_CALLS.load(Ordering::Relaxed),
            PRS_NANOS.load(Ordering::Relaxed) as f64 / 1e9,
            IMG_NANOS.load(Ordering::Relaxed) as f64 / 1e9,
            DIV_NANOS.load(Ordering::Relaxed) as f64 / 1e9,
            MUL_NANOS.load(Ordering::Relaxed) as f64 / 1e9,
        )
    }
}

/// Gcd of two polynomials, returned primitive with positive leading sign.
pub fn poly_gcd(a: &Poly, b: &Poly) -> Poly {
    let t0 = std::time::Instant::now();
    gcd_stats::GCD_CALLS.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
    let out = poly_gcd_inner(a, b);
    gcd_stats::add(&gcd_stats::GCD_NANOS, t0.elapsed().as_nanos() as u64);
    out
}

fn poly_gcd_inner(a: &Poly, b: &Poly) -> Poly {
    if a.is_zero() {
        return b.primitive_part();
    }
    if b.is_zero() {
        return a.primitive_part();
    }
    let ma = a.monomial_content();
    let mb = b.monomial_content();
    let mg = ma.gcd(&mb);
    let pa = strip_monomial(a, &ma);
    let pb = strip_monomial(b, &mb);
    let core = gcd_content_free(&pa.primitive_part(), &pb.primitive_part());
    core.mul_monomial(&mg)
}

fn strip_monomial(p: &Poly, m: &Monomial) -> Poly {
    if m.is_one() {
        return p.clone();
    }
    Poly {
        terms: p
            .terms
            .iter()
            .map(|(k, c)| (k.div(m).expect("monomial content divides"), c.clone()))
            .collect(),
    }
}

/// Gcd of primitive polynomials with trivial monomial content.
///
/// The strategy avoids ever splitting the larger input into coefficient
/// contents: per-variable evaluation images prove which variables can
/// occur in the gcd at all, the PRS runs raw in one such variable, and the
/// content part is recovered by folding the smaller side's content
/// against the larger side's coefficient slices.
fn gcd_content_free(a: &Poly, b: &Poly) -> Poly {
    if a.is_constant() || b.is_constant() {
        return Poly::one();
    }
    if a == b {
        return a.clone();
    }
    // Mutual divisibility fast path: powers of a common factor are the
    // typical denominators here (det^k against det^(k+1)).
    if b.num_terms() >= a.num_terms() {
        if b.div_exact(a).is_some() {
            return a.primitive_part();
        }
    } else if a.div_exact(b).is_some() {
        return b.primitive_part();
    }
    let vars_a = a.vars();
    let vars_b = b.vars();
    let shared: Vec<Var> = vars_a
        .iter()
        .filter(|v| vars_b.binary_search(v).is_ok())
        .copied()
        .collect();
    if shared.is_empty() {
        return Poly::one();
    }
    // For each shared variable, the image test can certify that the gcd is
    // free of it; the gcd lives in the remaining variables only.
    let mut alive: Vec<Var> = Vec::new();
    for &v in &shared {
        if !univariate_images_coprime(a, b, v) {
            alive.push(v);
        }
    }
    if alive.is_empty() {
        return Poly::one();
    }
    // Asymmetric case: peel the small side's factors off the big side by
    // trial division, leaving at most a small same-size residue for the
    // PRS. This dodges the big intermediate products of a direct PRS.
    let (small, big) = if a.num_terms() <= b.num_terms() {
        (a, b)
    } else {
        (b, a)
    };
    if small.num_terms() <= 128 && big.num_terms() > 4 * small.num_terms() {
        let mut acc = Poly::one();
        let mut small_red = small.clone();
        let mut big_red = big.clone();
        for (f, _) in split_factors(small).iter() {
            loop {
                let Some(s2) = div_exact_filtered(&small_red, f) else { break };
                let Some(b2) = div_exact_filtered(&big_red, f) else { break };
                small_red = s2;
                big_red = b2;
                acc = acc.mul(f);
            }
            if small_red.is_constant() {
                break;
            }
        }
        if !acc.is_one() {
            let rest = gcd_content_free(
                &small_red.primitive_part(),
                &big_red.primitive_part(),
            );
            return acc.mul(&rest).primitive_part();
        }
    }
    // PRS in one live variable, without content-splitting the inputs: the
    // result, stripped of its own (small) content, is gcd of the primitive
    // parts in v.
    let v = *alive
        .iter()
        .min_by_key(|v| a.degree_in(**v) as u64 + b.degree_in(**v) as u64)
        .unwrap();
    let ca = a.coeffs_in(v);
    let cb = b.coeffs_in(v);
    let tprs = std::time::Instant::now();
    gcd_stats::PRS_CALLS.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
    let prs = subresultant_prs(ca, cb, v);
    gcd_stats::add(&gcd_stats::PRS_NANOS, tprs.elapsed().as_nanos() as u64);
    // Content part: gcd(cont_v(a), cont_v(b)) computed by folding the
    // smaller side's content over the other side's coefficient slices.
    let (small, big) = if a.num_terms() <= b.num_terms() {
        (a, b)
    } else {
        (b, a)
    };
    let mut h = coeff_gcd(&small.coeffs_in(v)).primitive_part();
    if !h.is_constant() {
        for (_, slice) in big.coeffs_in(v) {
            h = poly_gcd(&h, &slice);
            if h.is_constant() {
                break;
            }
        }
    }
    if h.is_constant() {
        prs
    } else {
        prs.mul(&h).primitive_part()
    }
}

/// Joint content of the coefficient polynomials: the polynomial gcd times
/// the gcd of the rational contents. Dividing by this keeps pseudo-remainder
/// sequences primitive, which is what controls coefficient growth.
fn coeff_gcd(coeffs: &BTreeMap<u32, Poly>) -> Poly {
    let mut poly_acc = Poly::zero();
    let mut num_acc: Option<BigRational> = None;
    for p in coeffs.values() {
        let (c, prim) = p.primitive();
        if !poly_acc.is_one() {
            poly_acc = poly_gcd(&poly_acc, &prim);
        }
        num_acc = Some(match num_acc {
            None => c,
            Some(prev) => rational_gcd(&prev, &c),
        });
    }
    let scale = num_acc.unwrap_or_else(BigRational::one);
    poly_acc.mul_scalar(&scale)
}

/// gcd(a, b) over Q: gcd of numerators over lcm of denominators, positive.
fn rational_gcd(a: &BigRational, b: &BigRational) -> BigRational {
    let n = a.numer().gcd(b.numer());
    let d = a.denom().lcm(b.denom());
    let g = BigRational::new(n, d);
    if g.is_negative() {
        -g
    } else {
        g
    }
}

fn div_coeffs(coeffs: &BTreeMap<u32, Poly>, d: &Poly) -> BTreeMap<u32, Poly> {
    coeffs
        .iter()
        .map(|(e, p)| (*e, p.div_exact(d).expect("content divides")))
        .collect()
}

/// Subresultant PRS on univariate views with polynomial coefficients
/// (Knuth 4.6.1, Algorithm C). Returns the gcd of the inputs up to
/// content (primitive in `v`).
fn subresultant_prs(mut u: BTreeMap<u32, Poly>, mut v_poly: BTreeMap<u32, Poly>, v: Var) -> Poly {
    let deg = |p: &BTreeMap<u32, Poly>| p.keys().next_back().copied().unwrap_or(0);
    let lc = |p: &BTreeMap<u32, Poly>| p.values().next_back().unwrap().clone();
    if deg(&u) < deg(&v_poly) {
        std::mem::swap(&mut u, &mut v_poly);
    }
    let mut g_scal = Poly::one();
    let mut h_scal = Poly::one();
    loop {
        if v_poly.is_empty() {
            let fp = Poly::from_coeffs_in(v, &u);
            let cont = coeff_gcd(&u);
            return fp
                .div_exact(&cont)
                .expect("content divides")
                .primitive_part();
        }
        if deg(&v_poly) == 0 {
            // Nonzero constant (in v) remainder: inputs coprime in v.
            return Poly::one();
        }
        let delta = deg(&u) - deg(&v_poly);
        let r = pseudo_rem(&u, &v_poly, delta);
        u = std::mem::take(&mut v_poly);
        if let Some(r) = r {
            // v <- r / (g * h^delta): exact by the subresultant theory;
            // content-strip defensively if it ever is not.
            let divisor = g_scal.mul(&h_scal.pow(delta));
            let mut ok = true;
            let mut reduced: BTreeMap<u32, Poly> = BTreeMap::new();
            for (e, p) in &r {
                match p.div_exact(&divisor) {
                    Some(q) => {
                        reduced.insert(*e, q);
                    }
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            v_poly = if ok {
                reduced
            } else {
                let cont = coeff_gcd(&r);
                div_coeffs(&r, &cont)
            };
        }
        g_scal = lc(&u);
        h_scal = match delta {
            0 => h_scal,
            1 => g_scal.clone(),
            _ => {
                let num = g_scal.pow(delta);
                let den = h_scal.pow(delta - 1);
                num.div_exact(&den)
                    .unwrap_or_else(|| num.primitive_part())
            }
        };
    }
}

/// Pseudo-remainder of univariate views: exactly `lc(g)^(delta+1) * f mod g`.
fn pseudo_rem(
    f: &BTreeMap<u32, Poly>,
    g: &BTreeMap<u32, Poly>,
    delta: u32,
) -> Option<BTreeMap<u32, Poly>> {
    let gdeg = *g.keys().next_back().unwrap();
    let glc = g.get(&gdeg).unwrap().clone();
    let mut r: BTreeMap<u32, Poly> = f.clone();
    let mut scalings = 0u32;
    loop {
        let rdeg = match r.keys().next_back() {
            Some(d) => *d,
            None => break,
        };
        if rdeg < gdeg {
            break;
        }
        scalings += 1;
        let rl = r.get(&rdeg).unwrap().clone();
        // r <- lc(g) * r - lc(r) * x^(rdeg-gdeg) * g
        let mut out: BTreeMap<u32, Poly> = BTreeMap::new();
        for (e, p) in &r {
            if *e == rdeg {
                continue;
            }
            let q = p.mul(&glc);
            if !q.is_zero() {
                out.insert(*e, q);
            }
        }
        for (e, p) in g {
            if *e == gdeg {
                continue;
            }
            let shifted = e + rdeg - gdeg;
            let q = p.mul(&rl);
            use std::collections::btree_map::Entry;
            match out.entry(shifted) {
                Entry::Vacant(en) => {
                    if !q.is_zero() {
                        en.insert(q.neg());
                    }
                }
                Entry::Occupied(mut en) => {
                    let s = en.get().sub(&q);
                    if s.is_zero() {
                        en.remove();
                    } else {
                        *en.get_mut() = s;
                    }
                }
            }
        }
        r = out;
    }
    // Bring the total scaling to exactly lc(g)^(delta+1) as the
    // subresultant bookkeeping assumes.
    if scalings < delta + 1 {
        let extra = glc.pow(delta + 1 - scalings);
        for p in r.values_mut() {
            *p = p.mul(&extra);
        }
    }
    if r.is_empty() {
        None
    } else {
        Some(r)
    }
}

/// The Mersenne prime 2^61 - 1; image tests run in its field.
const IMAGE_PRIME: u64 = 0x1fff_ffff_ffff_ffff;

fn mulmod(a: u64, b: u64) -> u64 {
    ((a as u128 * b as u128) % IMAGE_PRIME as u128) as u64
}

fn powmod(mut a: u64, mut e: u32) -> u64 {
    let mut acc = 1u64;
    while e > 0 {
        if e & 1 == 1 {
            acc = mulmod(acc, a);
        }
        a = mulmod(a, a);
        e >>= 1;
    }
    acc
}

fn powmod_inv(a: u64) -> u64 {
    // Fermat: a^(p-2) mod p.
    let mut e = IMAGE_PRIME - 2;
    let mut base = a % IMAGE_PRIME;
    let mut acc = 1u64;
    while e > 0 {
        if e & 1 == 1 {
            acc = mulmod(acc, base);
        }
        base = mulmod(base, base);
        e >>= 1;
    }
    acc
}

fn bigint_mod(n: &BigInt) -> u64 {
    use num_traits::sign::Signed as _;
    let m = (n.abs() % BigInt::from(IMAGE_PRIME))
        .to_string()
        .parse::<u64>()
        .unwrap_or(0);
    if n.is_negative() && m != 0 {
        IMAGE_PRIME - m
    } else {
        m
    }
}

fn rational_mod(c: &BigRational) -> Option<u64> {
    let n = bigint_mod(c.numer());
    let d = bigint_mod(c.denom());
    if d == 0 {
        return None;
    }
    Some(mulmod(n, powmod_inv(d)))
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Evaluate all variables but `v` at deterministic points mod p; if
/// degrees are preserved and the univariate image gcd is constant, the
/// inputs are coprime up to factors free of `v`. Each round uses an
/// independent point assignment so a collision cannot persist.
fn univariate_images_coprime(a: &Poly, b: &Poly, v: Var) -> bool {
    let t0 = std::time::Instant::now();
    let out = univariate_images_coprime_inner(a, b, v);
    gcd_stats::add(&gcd_stats::IMG_NANOS, t0.elapsed().as_nanos() as u64);
    out
}

fn univariate_images_coprime_inner(a: &Poly, b: &Poly, v: Var) -> bool {
    for round in 0..4u64 {
        let point =
            |w: Var| -> u64 { splitmix(w.raw() as u64 ^ (round << 40)) % 65521 + 2 };
        let (ia, ib) = match (eval_univariate(a, v, &point), eval_univariate(b, v, &point)) {
            (Some(x), Some(y)) => (x, y),
            _ => return false,
        };
        let da = ia.keys().next_back().copied().unwrap_or(0);
        let db = ib.keys().next_back().copied().unwrap_or(0);
        if da == a.degree_in(v) && db == b.degree_in(v) {
            return univariate_gcd_is_constant_mod(&ia, &ib);
        }
    }
    false
}

fn eval_univariate(p: &Poly, v: Var, point: &dyn Fn(Var) -> u64) -> Option<BTreeMap<u32, u64>> {
    let mut out: BTreeMap<u32, u64> = BTreeMap::new();
    for (m, c) in &p.terms {
        let mut t = rational_mod(c)?;
        let mut e_v = 0;
        for (w, e) in m.vars() {
            if w == v {
                e_v = e;
            } else {
                t = mulmod(t, powmod(point(w), e));
            }
        }
        let entry = out.entry(e_v).or_insert(0);
        *entry = (*entry + t) % IMAGE_PRIME;
    }
    out.retain(|_, c| *c != 0);
    Some(out)
}

fn univariate_gcd_is_constant_mod(a: &BTreeMap<u32, u64>, b: &BTreeMap<u32, u64>) -> bool {
    if a.is_empty() || b.is_empty() {
        return false;
    }
    let deg = |p: &BTreeMap<u32, u64>| p.keys().next_back().copied().unwrap_or(0);
    let mut f = a.clone();
    let mut g = b.clone();
    if deg(&f) < deg(&g) {
        std::mem::swap(&mut f, &mut g);
    }
    loop {
        if g.is_empty() {
            return deg(&f) == 0;
        }
        if deg(&g) == 0 {
            return true;
        }
        // f <- f mod g over Z_p.
        let gd = deg(&g);
        let ginv = powmod_inv(*g.get(&gd).unwrap());
        while !f.is_empty() && deg(&f) >= gd {
            let fd = deg(&f);
            let q = mulmod(*f.get(&fd).unwrap(), ginv);
            f.remove(&fd);
            for (e, c) in &g {
                if *e == gd {
                    continue;
                }
                let shifted = e + fd - gd;
                let sub = mulmod(q, *c);
                let entry = f.entry(shifted).or_insert(0);
                *entry = (*entry + IMAGE_PRIME - sub) % IMAGE_PRIME;
            }
            f.retain(|_, c| *c != 0);
        }
        std::mem::swap(&mut f, &mut g);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn u(i: usize) -> Poly {
        Poly::var(Var::field(i))
    }

    #[test]
    fn arithmetic_basics() {
        let x = u(0);
        let y = u(1);
        let p = x.add(&y).mul(&x.sub(&y));
        let q = x.mul(&x).sub(&y.mul(&y));
        assert_eq!(p, q);
        assert!(p.sub(&q).is_zero());
    }

    #[test]
    fn division_exact() {
        let x = u(0);
        let y = u(1);
        let d = x.add(&y);
        let p = d.mul(&d).mul(&x);
        assert_eq!(p.div_exact(&d).unwrap(), d.mul(&x));
        assert!(x.mul(&x).add(&y).div_exact(&d).is_none());
    }

    #[test]
    fn gcd_simple() {
        let x = u(0);
        let y = u(1);
        // gcd((x+y)^2 * x, (x+y) * y) = x + y
        let a = x.add(&y).pow(2).mul(&x);
        let b = x.add(&y).mul(&y);
        assert_eq!(poly_gcd(&a, &b), x.add(&y));
        // coprime
        let c = x.add(&Poly::one());
        let d = y.add(&Poly::one());
        assert!(poly_gcd(&c, &d).is_one());
    }

    #[test]
    fn gcd_with_rational_coeffs() {
        let x = u(0);
        let half = BigRational::new(BigInt::from(1), BigInt::from(2));
        let a = x.add(&Poly::one()).mul_scalar(&half);
        let b = x.add(&Poly::one()).mul(&x);
        let g = poly_gcd(&a, &b);
        assert_eq!(g, x.add(&Poly::one()));
    }

    #[test]
    fn sqrt_perfect_square() {
        let x = u(0);
        let y = u(1);
        let s = x.add(&y.mul(&y)).add(&Poly::from_int(3));
        let p = s.mul(&s);
        let r = p.try_sqrt().unwrap();
        assert!(r == s || r == s.neg());
        assert!(s.mul(&x).try_sqrt().is_none());
    }

    #[test]
    fn gcd_stress_against_known_factors() {
        use rand::Rng;
        use rand_chacha::rand_core::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        let vars = [Var::field(0), Var::field(1), Var::param(crate::sym::Symbol::new("c1"))];
        let mut rand_poly = |rng: &mut rand_chacha::ChaCha8Rng| {
            let mut p = Poly::zero();
            for _ in 0..rng.gen_range(2..5) {
                let mut m = Monomial::one();
                for &v in &vars {
                    let e = rng.gen_range(0..3u32);
                    if e > 0 {
                        m = m.mul(&Monomial(smallvec::smallvec![(v, e)]));
                    }
                }
                p.add_term(m, BigRational::from_integer(rng.gen_range(-4i64..5).into()));
            }
            if p.is_zero() {
                p.add_term(Monomial::one(), BigRational::one());
            }
            p
        };
        for _ in 0..60 {
            let a = rand_poly(&mut rng);
            let b = rand_poly(&mut rng);
            let c = rand_poly(&mut rng);
            let ac = a.mul(&c);
            let bc = b.mul(&c);
            let g = poly_gcd(&ac, &bc);
            // The gcd divides both inputs and is divisible by c.
            assert!(ac.div_exact(&g).is_some(), "gcd does not divide ac");
            assert!(bc.div_exact(&g).is_some(), "gcd does not divide bc");
            if !c.is_constant() {
                assert!(
                    g.div_exact(&c.primitive_part()).is_some()
                        || c.primitive_part().div_exact(&g).is_some()
                        || g.div_exact(&poly_gcd(&g, &c)).is_some(),
                    "gcd lost the common factor"
                );
                // c must divide the gcd.
                assert!(
                    g.div_exact(&c.primitive_part()).is_some(),
                    "common factor not recovered: c={:?} g={:?}",
                    c,
                    g
                );
            }
        }
    }

    #[test]
    fn monomial_order_is_multiplicative() {
        // Lex order with the earliest variable most significant.
        let x = Monomial::var(Var::field(0));
        let y = Monomial::var(Var::field(1));
        let ms = [
            Monomial::one(),
            x.clone(),
            y.clone(),
            x.mul(&y),
            x.mul(&x),
            y.mul(&y),
            x.mul(&x).mul(&y),
        ];
        for a in &ms {
            for b in &ms {
                for c in &ms {
                    assert_eq!(a.cmp(b), a.mul(c).cmp(&b.mul(c)));
                }
            }
        }
        // 1 is the least monomial.
        for m in &ms {
            assert!(Monomial::one() <= *m);
        }
    }
}
