//! Matrix differential operators in the total derivative.
//!
//! A [`ScalarDiffOp`] is a finite sum `sum_k a_k Dx^k` with [`Expr`]
//! coefficients; a [`MatrixDiffOp`] is an m-by-m matrix of those. The
//! deformation parameter `eps` and pencil parameter `lambda` live inside
//! coefficients as ordinary symbolic parameters, so a [`Pencil`] is just an
//! operator whose coefficients are polynomial in them.

use std::collections::BTreeMap;

use num_rational::BigRational;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::jet::{has_degree, total_derivative, total_derivative_n};
use crate::sym::{JetCtx, Symbol, Var};

/// `sum_k a_k Dx^k`; zero coefficients are absent from the map.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct ScalarDiffOp {
    terms: BTreeMap<usize, Expr>,
}

impl ScalarDiffOp {
    pub fn zero() -> ScalarDiffOp {
        ScalarDiffOp {
            terms: BTreeMap::new(),
        }
    }

    /// The multiplication operator by `a` (order 0).
    pub fn mult(a: Expr) -> ScalarDiffOp {
        let mut op = ScalarDiffOp::zero();
        op.add_term(0, a);
        op
    }

    /// `a * Dx^k`.
    pub fn dx(a: Expr, k: usize) -> ScalarDiffOp {
        let mut op = ScalarDiffOp::zero();
        op.add_term(k, a);
        op
    }

    pub fn identity() -> ScalarDiffOp {
        ScalarDiffOp::mult(Expr::one())
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn order(&self) -> Option<usize> {
        self.terms.keys().next_back().copied()
    }

    pub fn coeff(&self, k: usize) -> Expr {
        self.terms.get(&k).cloned().unwrap_or_else(Expr::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (usize, &Expr)> {
        self.terms.iter().map(|(k, e)| (*k, e))
    }

    pub fn add_term(&mut self, k: usize, a: Expr) {
        if a.rat().is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(k) {
            Entry::Vacant(e) => {
                e.insert(a);
            }
            Entry::Occupied(mut e) => {
                let s = e.get().add(&a);
                if s.rat().is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = s;
                }
            }
        }
    }

    pub fn add(&self, other: &ScalarDiffOp) -> ScalarDiffOp {
        let mut out = self.clone();
        for (k, a) in other.terms() {
            out.add_term(k, a.clone());
        }
        out
    }

    pub fn sub(&self, other: &ScalarDiffOp) -> ScalarDiffOp {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> ScalarDiffOp {
        ScalarDiffOp {
            terms: self.terms.iter().map(|(k, a)| (*k, a.neg())).collect(),
        }
    }

    pub fn mul_expr(&self, c: &Expr) -> ScalarDiffOp {
        let mut out = ScalarDiffOp::zero();
        for (k, a) in self.terms() {
            out.add_term(k, a.mul(c));
        }
        out
    }

    /// Operator product with Leibniz expansion:
    /// `Dx^k (a .) = sum_j C(k,j) Dx^j(a) Dx^(k-j)`.
    pub fn compose(&self, ctx: &JetCtx, other: &ScalarDiffOp) -> Result<ScalarDiffOp> {
        let mut out = ScalarDiffOp::zero();
        for (k, a) in self.terms() {
            for (l, b) in other.terms() {
                // a Dx^k (b Dx^l .) = a sum_j C(k,j) Dx^j(b) Dx^(k-j+l)
                let mut db = b.clone();
                for j in 0..=k {
                    if j > 0 {
                        db = total_derivative(ctx, &db)?;
                    }
                    let c = binomial(k, j);
                    out.add_term(k - j + l, a.mul(&db).mul(&Expr::rational(c)));
                }
            }
        }
        Ok(out)
    }

    /// Formal adjoint: `(a Dx^k)^dagger = (-Dx)^k (a .)`, fully expanded.
    pub fn adjoint(&self, ctx: &JetCtx) -> Result<ScalarDiffOp> {
        let mut out = ScalarDiffOp::zero();
        for (k, a) in self.terms() {
            let mut da = a.clone();
            for j in 0..=k {
                if j > 0 {
                    da = total_derivative(ctx, &da)?;
                }
                let sign = if k % 2 == 0 { 1 } else { -1 };
                let c = binomial(k, j) * BigRational::from_integer(sign.into());
                out.add_term(k - j, da.mul(&Expr::rational(c)));
            }
        }
        Ok(out)
    }

    /// Applies the operator to a scalar expression.
    pub fn apply(&self, ctx: &JetCtx, psi: &Expr) -> Result<Expr> {
        let mut out = Expr::zero();
        for (k, a) in self.terms() {
            out = out.add(&a.mul(&total_derivative_n(ctx, psi, k)?));
        }
        Ok(out)
    }

    /// Coefficient map under an expression transformation.
    pub fn map_coeffs(&self, f: &dyn Fn(&Expr) -> Expr) -> ScalarDiffOp {
        let mut out = ScalarDiffOp::zero();
        for (k, a) in self.terms() {
            out.add_term(k, f(a));
        }
        out
    }
}

fn binomial(n: usize, k: usize) -> BigRational {
    let mut num = num_bigint::BigInt::from(1);
    for i in 0..k {
        num *= n - i;
    }
    let mut den = num_bigint::BigInt::from(1);
    for i in 1..=k {
        den *= i;
    }
    BigRational::new(num, den)
}

impl std::fmt::Debug for ScalarDiffOp {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, a) in self.terms.iter().rev() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            if *k == 0 {
                write!(f, "({})", a)?;
            } else if *k == 1 {
                write!(f, "({})*Dx", a)?;
            } else {
                write!(f, "({})*Dx^{}", a, k)?;
            }
        }
        Ok(())
    }
}

/// m-by-m matrix of scalar differential operators.
#[derive(Clone, PartialEq, Eq)]
pub struct MatrixDiffOp {
    m: usize,
    entries: Vec<ScalarDiffOp>,
}

impl MatrixDiffOp {
    pub fn zero(m: usize) -> MatrixDiffOp {
        MatrixDiffOp {
            m,
            entries: vec![ScalarDiffOp::zero(); m * m],
        }
    }

    pub fn from_entries(m: usize, entries: Vec<ScalarDiffOp>) -> Result<MatrixDiffOp> {
        if entries.len() != m * m {
            return Err(Error::DimensionMismatch {
                expected: m * m,
                got: entries.len(),
            });
        }
        Ok(MatrixDiffOp { m, entries })
    }

    /// `Dx^k` times the identity matrix.
    pub fn dx_identity(m: usize, k: usize) -> MatrixDiffOp {
        let mut op = MatrixDiffOp::zero(m);
        for i in 0..m {
            *op.entry_mut(i, i) = ScalarDiffOp::dx(Expr::one(), k);
        }
        op
    }

    pub fn size(&self) -> usize {
        self.m
    }

    pub fn entry(&self, i: usize, j: usize) -> &ScalarDiffOp {
        &self.entries[i * self.m + j]
    }

    pub fn entry_mut(&mut self, i: usize, j: usize) -> &mut ScalarDiffOp {
        &mut self.entries[i * self.m + j]
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|e| e.is_zero())
    }

    /// Largest Dx order over all entries.
    pub fn order(&self) -> usize {
        self.entries
            .iter()
            .filter_map(|e| e.order())
            .max()
            .unwrap_or(0)
    }

    pub fn add(&self, other: &MatrixDiffOp) -> MatrixDiffOp {
        assert_eq!(self.m, other.m);
        MatrixDiffOp {
            m: self.m,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a.add(b))
                .collect(),
        }
    }

    pub fn sub(&self, other: &MatrixDiffOp) -> MatrixDiffOp {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> MatrixDiffOp {
        MatrixDiffOp {
            m: self.m,
            entries: self.entries.iter().map(|e| e.neg()).collect(),
        }
    }

    pub fn scale_expr(&self, c: &Expr) -> MatrixDiffOp {
        MatrixDiffOp {
            m: self.m,
            entries: self.entries.iter().map(|e| e.mul_expr(c)).collect(),
        }
    }

    /// Matrix product with operator composition in each entry.
    pub fn compose(&self, ctx: &JetCtx, other: &MatrixDiffOp) -> Result<MatrixDiffOp> {
        assert_eq!(self.m, other.m);
        let mut out = MatrixDiffOp::zero(self.m);
        for i in 0..self.m {
            for j in 0..self.m {
                let mut acc = ScalarDiffOp::zero();
                for k in 0..self.m {
                    acc = acc.add(&self.entry(i, k).compose(ctx, other.entry(k, j))?);
                }
                *out.entry_mut(i, j) = acc;
            }
        }
        Ok(out)
    }

    /// Formal adjoint: `(P^dagger)^(ij) = sum_k (-Dx)^k (a^(ji)_k .)`.
    pub fn adjoint(&self, ctx: &JetCtx) -> Result<MatrixDiffOp> {
        let mut out = MatrixDiffOp::zero(self.m);
        for i in 0..self.m {
            for j in 0..self.m {
                *out.entry_mut(i, j) = self.entry(j, i).adjoint(ctx)?;
            }
        }
        Ok(out)
    }

    pub fn is_skew_adjoint(&self, ctx: &JetCtx) -> Result<bool> {
        let adj = self.adjoint(ctx)?;
        let sum = adj.add(self);
        for e in &sum.entries {
            for (_, a) in e.terms() {
                if !a.try_is_zero()? {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// Applies to a covector of expressions: `(P psi)^i = sum_j P^(ij) psi_j`.
    pub fn apply(&self, ctx: &JetCtx, psi: &[Expr]) -> Result<Vec<Expr>> {
        if psi.len() != self.m {
            return Err(Error::DimensionMismatch {
                expected: self.m,
                got: psi.len(),
            });
        }
        let mut out = Vec::with_capacity(self.m);
        for i in 0..self.m {
            let mut acc = Expr::zero();
            for j in 0..self.m {
                acc = acc.add(&self.entry(i, j).apply(ctx, &psi[j])?);
            }
            out.push(acc);
        }
        Ok(out)
    }

    pub fn map_coeffs(&self, f: &dyn Fn(&Expr) -> Expr) -> MatrixDiffOp {
        MatrixDiffOp {
            m: self.m,
            entries: self.entries.iter().map(|e| e.map_coeffs(f)).collect(),
        }
    }

    /// Substitutes parameters in every coefficient.
    pub fn subst_params(&self, assign: &std::collections::HashMap<Symbol, Expr>) -> MatrixDiffOp {
        self.map_coeffs(&|e| e.subst_params(assign))
    }

    /// Structural equality of canonical coefficients.
    pub fn equal(&self, other: &MatrixDiffOp) -> bool {
        self.m == other.m
            && self
                .entries
                .iter()
                .zip(&other.entries)
                .all(|(a, b)| a.sub(b).is_zero())
    }

    /// Tests `self = kappa * other` for a nonzero rational constant kappa,
    /// returning it.
    pub fn equal_up_to_scale(&self, other: &MatrixDiffOp) -> Option<BigRational> {
        if self.m != other.m {
            return None;
        }
        if self.is_zero() && other.is_zero() {
            return Some(BigRational::from_integer(1.into()));
        }
        // Find the first entry/order where both are nonzero.
        let mut kappa: Option<BigRational> = None;
        for (a, b) in self.entries.iter().zip(&other.entries) {
            for (k, ca) in a.terms() {
                let cb = b.coeff(k);
                if cb.rat().is_zero() {
                    return None;
                }
                let ratio = ca.div(&cb);
                let c = ratio.as_constant()?;
                match &kappa {
                    None => kappa = Some(c),
                    Some(prev) if *prev != c => return None,
                    _ => {}
                }
            }
            // Entries of `other` with orders absent in `self` must be zero.
            for (k, cb) in b.terms() {
                if a.coeff(k).rat().is_zero() && !cb.rat().is_zero() {
                    return None;
                }
            }
        }
        kappa.filter(|c| !num_traits::Zero::is_zero(c))
    }
}

impl std::fmt::Debug for MatrixDiffOp {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "[")?;
        for i in 0..self.m {
            write!(f, "  [")?;
            for j in 0..self.m {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{:?}", self.entry(i, j))?;
            }
            writeln!(f, "]")?;
        }
        write!(f, "]")
    }
}

/// Pullback of `p` under the point map `phi` (new coordinates as functions
/// of the old): `(J P J^T)^(ij) = sum_{k,l} J^i_k P^(kl) (J^j_l .)` with all
/// coefficients kept as functions of the old coordinates.
pub fn point_transform_pullback(
    ctx: &JetCtx,
    p: &MatrixDiffOp,
    phi: &[Expr],
) -> Result<MatrixDiffOp> {
    let m = p.size();
    if phi.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: phi.len(),
        });
    }
    let jac: Vec<Expr> = (0..m)
        .flat_map(|i| (0..m).map(move |k| (i, k)))
        .map(|(i, k)| phi[i].partial(Var::field(k)))
        .collect();
    let det = crate::linalg::det_expr(m, &|i, k| jac[i * m + k].clone());
    if det.try_is_zero()? {
        return Err(Error::SingularJacobian);
    }
    let mut out = MatrixDiffOp::zero(m);
    for i in 0..m {
        for j in 0..m {
            let mut acc = ScalarDiffOp::zero();
            for k in 0..m {
                for l in 0..m {
                    let left = &jac[i * m + k];
                    let right = &jac[j * m + l];
                    if left.rat().is_zero() || right.rat().is_zero() {
                        continue;
                    }
                    let mid = p
                        .entry(k, l)
                        .compose(ctx, &ScalarDiffOp::mult(right.clone()))?;
                    acc = acc.add(&mid.mul_expr(left));
                }
            }
            *out.entry_mut(i, j) = acc;
        }
    }
    Ok(out)
}

/// Operator in the new coordinates `u~ = phi(u)`: pullback, then rewrite
/// every coefficient via the inverse map (`phi_inv` gives the old
/// coordinates as expressions in the new ones, written in the same
/// variable names).
pub fn point_transform(
    ctx: &JetCtx,
    p: &MatrixDiffOp,
    phi: &[Expr],
    phi_inv: &[Expr],
) -> Result<MatrixDiffOp> {
    let m = p.size();
    if phi_inv.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: phi_inv.len(),
        });
    }
    let pulled = point_transform_pullback(ctx, p, phi)?;
    let mut maxk = 0usize;
    for i in 0..m {
        for j in 0..m {
            for (_, a) in pulled.entry(i, j).terms() {
                maxk = maxk.max(a.max_jet_order());
            }
        }
    }
    // Jets of the old coordinates in terms of the new:
    // u^i_(k) -> Dx^k(phi_inv^i).
    let ctx_sub = ctx.raised(maxk + 1);
    let mut table: Vec<Vec<Expr>> = Vec::with_capacity(m);
    for inv in phi_inv {
        let mut row = vec![inv.clone()];
        for k in 1..=maxk {
            let next = total_derivative(&ctx_sub, &row[k - 1])?;
            row.push(next);
        }
        table.push(row);
    }
    Ok(pulled.map_coeffs(&|a| {
        a.substitute(&|v| {
            v.as_jet()
                .and_then(|(i, k)| table.get(i).and_then(|row| row.get(k)).cloned())
        })
    }))
}

/// Graded coefficient table of a pencil; see [`extract_graded`].
pub struct GradedCoefficients {
    pub m: usize,
    /// `(k, l) -> A_(1;k,l)`: eps^k coefficients on the lambda side.
    pub side1: BTreeMap<(usize, usize), Vec<Expr>>,
    /// `(k, l) -> A_(2;k,l)`: eps^k coefficients on the lambda-free side.
    pub side2: BTreeMap<(usize, usize), Vec<Expr>>,
    /// Hydrodynamic part `(g2 - lambda g1) Dx + ...` of the pencil.
    pub dispersionless: MatrixDiffOp,
}

impl GradedCoefficients {
    pub fn coeff(&self, side: usize, k: usize, l: usize, i: usize, j: usize) -> Expr {
        let table = if side == 1 { &self.side1 } else { &self.side2 };
        table
            .get(&(k, l))
            .map(|m| m[i * self.m + j].clone())
            .unwrap_or_else(Expr::zero)
    }
}

/// A lambda-linear pencil of operators with deformation parameter eps,
/// stored as a single operator whose coefficients are polynomial in both.
#[derive(Clone)]
pub struct Pencil {
    pub op: MatrixDiffOp,
}

pub fn eps_sym() -> Symbol {
    Symbol::new("eps")
}

pub fn lambda_sym() -> Symbol {
    Symbol::new("lambda")
}

impl Pencil {
    /// `side2 + eps^weight * deformation - lambda * side1` where the
    /// deformation order sets the eps weight (R_n enters at eps^(n-1)).
    pub fn of_trio(side2: &MatrixDiffOp, deformation: &MatrixDiffOp, side1: &MatrixDiffOp) -> Pencil {
        let eps = Expr::param("eps");
        let lambda = Expr::param("lambda");
        let weight = deformation.order().saturating_sub(1) as i32;
        let op = side2
            .add(&deformation.scale_expr(&eps.pow(weight)))
            .sub(&side1.scale_expr(&lambda));
        Pencil { op }
    }

    /// Dual arrangement `side2 - lambda (side1 + eps^weight * deformation)`.
    pub fn of_trio_dual(
        side2: &MatrixDiffOp,
        side1: &MatrixDiffOp,
        deformation: &MatrixDiffOp,
    ) -> Pencil {
        let eps = Expr::param("eps");
        let lambda = Expr::param("lambda");
        let weight = deformation.order().saturating_sub(1) as i32;
        let op = side2.sub(
            &side1
                .add(&deformation.scale_expr(&eps.pow(weight)))
                .scale_expr(&lambda),
        );
        Pencil { op }
    }
}

/// Extracts the polynomial coefficient in a parameter from an expression.
pub fn param_coeff(e: &Expr, sym: Symbol, degree: usize) -> Result<Expr> {
    let v = Var::param(sym);
    let r = e.rat();
    if r.den().contains_var(v) {
        return Err(Error::Domain(format!(
            "expression is not polynomial in {}",
            sym
        )));
    }
    let coeffs = r.num().coeffs_in(v);
    Ok(coeffs
        .get(&(degree as u32))
        .map(|p| Expr::from_rat(crate::rat::Rat::new(p.clone(), r.den().clone())))
        .unwrap_or_else(Expr::zero))
}

/// Splits the pencil into graded homogeneous coefficients
/// `A^(ij)_(a;k,l)` at `eps^k`, `Dx^(k-l+1)`, checking that each carries
/// homogeneous degree `l`. Reassembly reproduces the pencil.
pub fn extract_graded(pencil: &Pencil) -> Result<GradedCoefficients> {
    let m = pencil.op.size();
    let eps = eps_sym();
    let lambda = lambda_sym();
    let mut side1: BTreeMap<(usize, usize), Vec<Expr>> = BTreeMap::new();
    let mut side2: BTreeMap<(usize, usize), Vec<Expr>> = BTreeMap::new();
    let mut dispersionless = MatrixDiffOp::zero(m);

    // Maximum eps power present.
    let mut max_eps = 0usize;
    for i in 0..m {
        for j in 0..m {
            for (_, a) in pencil.op.entry(i, j).terms() {
                max_eps = max_eps.max(a.rat().num().degree_in(Var::param(eps)) as usize);
            }
        }
    }

    for i in 0..m {
        for j in 0..m {
            for (p, a) in pencil.op.entry(i, j).terms() {
                // Split off lambda (pencil must be linear in lambda).
                for ldeg in 0..=1usize {
                    let al = param_coeff(a, lambda, ldeg)?;
                    if al.rat().is_zero() {
                        continue;
                    }
                    for k in 0..=max_eps {
                        let c_raw = param_coeff(&al, eps, k)?;
                        if c_raw.rat().is_zero() {
                            continue;
                        }
                        if k == 0 {
                            // The hydrodynamic part keeps lambda explicit.
                            let coeff = if ldeg == 1 {
                                c_raw.mul(&Expr::param("lambda"))
                            } else {
                                c_raw
                            };
                            let term = ScalarDiffOp::dx(coeff, p);
                            let e = dispersionless.entry_mut(i, j);
                            *e = e.add(&term);
                            continue;
                        }
                        // A_(1;k,l) enters the pencil with a -lambda factor.
                        let c = if ldeg == 1 { c_raw.neg() } else { c_raw };
                        // Dx power p = k - l + 1  =>  l = k + 1 - p.
                        if p > k + 1 {
                            return Err(Error::NotGraded { order: k, degree: 0 });
                        }
                        let l = k + 1 - p;
                        if !has_degree(&c, l as i64) {
                            return Err(Error::NotGraded {
                                order: k,
                                degree: l,
                            });
                        }
                        let table = if ldeg == 1 { &mut side1 } else { &mut side2 };
                        let slot = table
                            .entry((k, l))
                            .or_insert_with(|| vec![Expr::zero(); m * m]);
                        slot[i * m + j] = slot[i * m + j].add(&c);
                    }
                }
                // Quadratic or higher lambda terms are rejected.
                if a.rat().num().degree_in(Var::param(lambda)) > 1 {
                    return Err(Error::Domain(
                        "pencil is not linear in lambda".into(),
                    ));
                }
            }
        }
    }
    Ok(GradedCoefficients {
        m,
        side1,
        side2,
        dispersionless,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx2() -> JetCtx {
        JetCtx::new(2)
    }

    #[test]
    fn compose_examples() {
        let ctx = JetCtx::new(1);
        // Dx o u1 = u1 Dx + u1x
        let dx = ScalarDiffOp::dx(Expr::one(), 1);
        let mu = ScalarDiffOp::mult(Expr::field(0));
        let c = dx.compose(&ctx, &mu).unwrap();
        assert_eq!(c.coeff(1), Expr::field(0));
        assert_eq!(c.coeff(0), Expr::jet(0, 1));
        // Dx o (1/u1) o Dx = (1/u1) Dx^2 - (u1x/u1^2) Dx
        let inv = ScalarDiffOp::mult(Expr::one().div(&Expr::field(0)));
        let c2 = dx.compose(&ctx, &inv.compose(&ctx, &dx).unwrap()).unwrap();
        assert_eq!(c2.coeff(2), Expr::one().div(&Expr::field(0)));
        assert_eq!(
            c2.coeff(1),
            Expr::jet(0, 1).neg().div(&Expr::field(0).pow(2))
        );
        assert!(c2.coeff(0).rat().is_zero());
        // identity o A = A
        let id = ScalarDiffOp::identity();
        assert_eq!(id.compose(&ctx, &c2).unwrap(), c2);
    }

    #[test]
    fn adjoint_examples() {
        let ctx = JetCtx::new(1);
        // adjoint(Dx) = -Dx
        let dx = ScalarDiffOp::dx(Expr::one(), 1);
        assert_eq!(dx.adjoint(&ctx).unwrap(), dx.neg());
        // adjoint(u1 Dx) = -u1 Dx - u1x
        let udx = ScalarDiffOp::dx(Expr::field(0), 1);
        let adj = udx.adjoint(&ctx).unwrap();
        assert_eq!(adj.coeff(1), Expr::field(0).neg());
        assert_eq!(adj.coeff(0), Expr::jet(0, 1).neg());
        // involution
        assert_eq!(adj.adjoint(&ctx).unwrap(), udx);
    }

    #[test]
    fn apply_and_dimensions() {
        let ctx = ctx2();
        let op = MatrixDiffOp::dx_identity(2, 1);
        let out = op
            .apply(&ctx, &[Expr::field(0), Expr::field(1)])
            .unwrap();
        assert_eq!(out[0], Expr::jet(0, 1));
        assert_eq!(out[1], Expr::jet(1, 1));
        assert!(matches!(
            op.apply(&ctx, &[Expr::field(0)]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn adjoint_anti_homomorphism() {
        let ctx = JetCtx::new(2);
        let a = ScalarDiffOp::dx(Expr::field(0), 1);
        let b = ScalarDiffOp::dx(Expr::field(1).mul(&Expr::field(0)), 2);
        let ab = a.compose(&ctx, &b).unwrap();
        let lhs = ab.adjoint(&ctx).unwrap();
        let rhs = b
            .adjoint(&ctx)
            .unwrap()
            .compose(&ctx, &a.adjoint(&ctx).unwrap())
            .unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn scale_equality() {
        let a = MatrixDiffOp::dx_identity(2, 3);
        let b = a.scale_expr(&Expr::frac(1, 4));
        let kappa = b.equal_up_to_scale(&a).unwrap();
        assert_eq!(kappa, BigRational::new(1.into(), 4.into()));
        let c = MatrixDiffOp::dx_identity(2, 2);
        assert!(b.equal_up_to_scale(&c).is_none());
    }

    #[test]
    fn point_transform_examples() {
        let ctx = JetCtx::new(1);
        let r3 = MatrixDiffOp::dx_identity(1, 3);
        // identity map
        let same = point_transform(&ctx, &r3, &[Expr::field(0)], &[Expr::field(0)]).unwrap();
        assert!(same.equal(&r3));
        // u -> 2u sends Dx^3 to 4 Dx^3
        let two_u = Expr::field(0).scale(2, 1);
        let half_u = Expr::field(0).scale(1, 2);
        let t = point_transform(&ctx, &r3, &[two_u], &[half_u]).unwrap();
        assert!(t.equal(&r3.scale_expr(&Expr::int(4))));
        // singular map fails
        let sq = Expr::field(0).pow(2);
        let err = point_transform_pullback(&JetCtx::new(1), &r3, &[sq.sub(&sq)]);
        assert!(matches!(err, Err(Error::SingularJacobian)));
    }

    #[test]
    fn point_transform_functorial_spot() {
        let ctx = JetCtx::new(2);
        let mut p = MatrixDiffOp::zero(2);
        *p.entry_mut(0, 1) = ScalarDiffOp::dx(Expr::one(), 1);
        *p.entry_mut(1, 0) = ScalarDiffOp::dx(Expr::one(), 1);
        // phi: (u1, u2) -> (u1 + u2^2, u2); chi: (v1, v2) -> (2 v1, v2 + v1)
        let phi = [Expr::field(0).add(&Expr::field(1).pow(2)), Expr::field(1)];
        let phi_inv = [Expr::field(0).sub(&Expr::field(1).pow(2)), Expr::field(1)];
        let chi = [
            Expr::field(0).scale(2, 1),
            Expr::field(1).add(&Expr::field(0)),
        ];
        let chi_inv = [
            Expr::field(0).scale(1, 2),
            Expr::field(1).sub(&Expr::field(0).scale(1, 2)),
        ];
        let step = point_transform(&ctx, &p, &phi, &phi_inv).unwrap();
        let two_step = point_transform(&ctx, &step, &chi, &chi_inv).unwrap();
        // chi o phi
        let comp: Vec<Expr> = chi
            .iter()
            .map(|c| c.substitute(&|v| v.as_jet().filter(|&(_, k)| k == 0).map(|(i, _)| phi[i].clone())))
            .collect();
        let comp_inv: Vec<Expr> = phi_inv
            .iter()
            .map(|c| {
                c.substitute(&|v| v.as_jet().filter(|&(_, k)| k == 0).map(|(i, _)| chi_inv[i].clone()))
            })
            .collect();
        let direct = point_transform(&ctx, &p, &comp, &comp_inv).unwrap();
        assert!(two_step.equal(&direct));
    }

    #[test]
    fn extract_graded_scalar_kdv() {
        // Pi = 2u Dx + u_x - lambda Dx + eps^2 Dx^3 (m = 1)
        let m = 1;
        let mut q1 = MatrixDiffOp::zero(m);
        *q1.entry_mut(0, 0) = ScalarDiffOp::dx(Expr::field(0).scale(2, 1), 1)
            .add(&ScalarDiffOp::mult(Expr::jet(0, 1)));
        let mut p1 = MatrixDiffOp::zero(m);
        *p1.entry_mut(0, 0) = ScalarDiffOp::dx(Expr::one(), 1);
        let r3 = MatrixDiffOp::dx_identity(m, 3);
        let pencil = Pencil::of_trio(&q1, &r3, &p1);
        let graded = extract_graded(&pencil).unwrap();
        // A_(2;2,0) = 1, everything else empty.
        assert_eq!(graded.coeff(2, 2, 0, 0, 0), Expr::one());
        assert!(graded.side1.is_empty());
        assert_eq!(graded.side2.len(), 1);
    }
}
