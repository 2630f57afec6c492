//! Canonical homogeneous operators, the four metric families with their
//! quadratic varieties, branch parameterizations and pencil tables, the
//! ansatz re-derivation of the classification, and matching of known
//! systems onto family instantiations.

use std::collections::HashMap;

use num_rational::BigRational;

use crate::diffop::{MatrixDiffOp, ScalarDiffOp};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::geometry::{op_from_metric_connection, Connection, Metric};
use crate::jet::{euler, Dependent};
use crate::linalg;
use crate::poisson::schouten_integrand;
use crate::sym::{JetCtx, Symbol, Var};

pub mod examples;
pub mod families;
pub mod verify;

pub use families::{family, pencil_table, FamilyTag, ParamFamily, PencilRule};

/// Tags of the canonical higher-order operators.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum CanonicalTag {
    R2,
    R3_1,
    R3_2,
    R3_3,
}

impl CanonicalTag {
    pub fn name(&self) -> &'static str {
        match self {
            CanonicalTag::R2 => "R2",
            CanonicalTag::R3_1 => "R3_1",
            CanonicalTag::R3_2 => "R3_2",
            CanonicalTag::R3_3 => "R3_3",
        }
    }

    pub fn parse(s: &str) -> Option<CanonicalTag> {
        match s {
            "R2" => Some(CanonicalTag::R2),
            "R3_1" => Some(CanonicalTag::R3_1),
            "R3_2" => Some(CanonicalTag::R3_2),
            "R3_3" => Some(CanonicalTag::R3_3),
            _ => None,
        }
    }
}

fn dx() -> ScalarDiffOp {
    ScalarDiffOp::dx(Expr::one(), 1)
}

fn sandwich(mid: MatrixDiffOp) -> MatrixDiffOp {
    let ctx = JetCtx::with_cap(2, 12);
    let d = MatrixDiffOp::dx_identity(2, 1);
    d.compose(&ctx, &mid).unwrap().compose(&ctx, &d).unwrap()
}

/// The second-order canonical operator `((0, 1), (-1, 0)) Dx^2`.
pub fn r2() -> MatrixDiffOp {
    let mut op = MatrixDiffOp::zero(2);
    *op.entry_mut(0, 1) = ScalarDiffOp::dx(Expr::one(), 2);
    *op.entry_mut(1, 0) = ScalarDiffOp::dx(Expr::int(-1), 2);
    op
}

/// `((0, 1), (1, 0)) Dx^3`.
pub fn r3_1() -> MatrixDiffOp {
    let mut op = MatrixDiffOp::zero(2);
    *op.entry_mut(0, 1) = ScalarDiffOp::dx(Expr::one(), 3);
    *op.entry_mut(1, 0) = ScalarDiffOp::dx(Expr::one(), 3);
    op
}

/// Third-order canonical operator with leading metric
/// `((0, 1/u1), (1/u1, 2 u2/u1^2))`, expanded from its sandwich form.
pub fn r3_2() -> MatrixDiffOp {
    let ctx = JetCtx::with_cap(2, 12);
    let inv_u1 = Expr::one().div(&Expr::field(0));
    let w = Expr::field(1).div(&Expr::field(0).pow(2));
    let mut mid = MatrixDiffOp::zero(2);
    *mid.entry_mut(0, 1) = dx().compose(&ctx, &ScalarDiffOp::mult(inv_u1.clone())).unwrap();
    *mid.entry_mut(1, 0) = ScalarDiffOp::dx(inv_u1, 1);
    *mid.entry_mut(1, 1) = ScalarDiffOp::dx(w.clone(), 1)
        .add(&dx().compose(&ctx, &ScalarDiffOp::mult(w)).unwrap());
    sandwich(mid)
}

/// Third-order canonical operator with the non-flat leading metric
/// `((1, u2/u1), (u2/u1, ((u2)^2 + 1)/(u1)^2))`.
pub fn r3_3() -> MatrixDiffOp {
    let ctx = JetCtx::with_cap(2, 12);
    let w12 = Expr::field(1).div(&Expr::field(0));
    let w22 = Expr::field(1)
        .pow(2)
        .add(&Expr::one())
        .div(&Expr::field(0).pow(2).scale(2, 1));
    let mut mid = MatrixDiffOp::zero(2);
    *mid.entry_mut(0, 0) = dx();
    *mid.entry_mut(0, 1) = dx().compose(&ctx, &ScalarDiffOp::mult(w12.clone())).unwrap();
    *mid.entry_mut(1, 0) = ScalarDiffOp::dx(w12, 1);
    *mid.entry_mut(1, 1) = ScalarDiffOp::dx(w22.clone(), 1)
        .add(&dx().compose(&ctx, &ScalarDiffOp::mult(w22)).unwrap());
    sandwich(mid)
}

pub fn canonical(tag: CanonicalTag) -> MatrixDiffOp {
    match tag {
        CanonicalTag::R2 => r2(),
        CanonicalTag::R3_1 => r3_1(),
        CanonicalTag::R3_2 => r3_2(),
        CanonicalTag::R3_3 => r3_3(),
    }
}

/// Leading metric `l^(ij)` of a canonical third-order operator (the
/// coefficient matrix of Dx^3).
pub fn leading_metric(tag: CanonicalTag) -> Metric {
    let op = canonical(tag);
    let mut entries = Vec::with_capacity(4);
    for i in 0..2 {
        for j in 0..2 {
            entries.push(op.entry(i, j).coeff(3));
        }
    }
    Metric::new(2, entries).expect("leading metric is symmetric")
}

/// `c^(ij)_k` of the canonical form `Dx (l Dx + c_k u^k_x) Dx`, read off
/// the expanded operator: the Dx^2 coefficient is `Dx(l) + c_k u^k_x`.
pub fn third_order_c(tag: CanonicalTag) -> Vec<Expr> {
    let op = canonical(tag);
    let mut out = vec![Expr::zero(); 8];
    for i in 0..2 {
        for j in 0..2 {
            let a2 = op.entry(i, j).coeff(2);
            // Subtract Dx(l^(ij)) contribution: a2 = 2 Dx(l) + c u_x... the
            // sandwich expansion gives a2 = 2 l_x + (c u_x) with
            // l_x = d(l)/dx; recover c_k by differentiating w.r.t. u^k_x
            // after removing the Dx(l) part.
            let l = op.entry(i, j).coeff(3);
            let ctx = JetCtx::with_cap(2, 12);
            let lx = crate::jet::total_derivative(&ctx, &l).unwrap();
            let rest = a2.sub(&lx.scale(2, 1));
            for k in 0..2 {
                out[(i * 2 + j) * 2 + k] = rest.partial(Var::jet(k, 1));
            }
        }
    }
    out
}

/// The scalar (m = 1) sanity trio `(Dx, 2u Dx + u_x, Dx^3)`.
pub fn scalar_trio() -> (MatrixDiffOp, MatrixDiffOp, MatrixDiffOp) {
    let p1 = MatrixDiffOp::dx_identity(1, 1);
    let q1 = MatrixDiffOp::from_entries(
        1,
        vec![ScalarDiffOp::dx(Expr::field(0).scale(2, 1), 1)
            .add(&ScalarDiffOp::mult(Expr::jet(0, 1)))],
    )
    .unwrap();
    let r3 = MatrixDiffOp::dx_identity(1, 3);
    (p1, q1, r3)
}

// ---------------------------------------------------------------------------
// Ansatz search
// ---------------------------------------------------------------------------

/// Basis functions of `u` used for metric entries.
pub fn metric_basis() -> Vec<Expr> {
    let u1 = Expr::field(0);
    let u2 = Expr::field(1);
    vec![
        Expr::one(),
        u1.clone(),
        u2.clone(),
        u2.pow(2).div(&u1),
        u2.div(&u1),
        Expr::one().div(&u1),
    ]
}

/// Basis for connection entries: the metric basis together with its
/// u1-derivative images (the Levi-Civita symbols of the families need
/// 1/u1^2 terms).
pub fn connection_basis() -> Vec<Expr> {
    let u1 = Expr::field(0);
    let u2 = Expr::field(1);
    let mut out = metric_basis();
    out.push(Expr::one().div(&u1.pow(2)));
    out.push(u2.div(&u1.pow(2)));
    out.push(u2.pow(2).div(&u1.pow(2)));
    out
}

/// Result of the linear bracket solve: a basis of `(g, Gamma)` pairs.
pub struct AnsatzSolution {
    /// Basis metrics, each as the three independent entries (g11, g12, g22).
    pub metrics: Vec<[Expr; 3]>,
    /// Matching contravariant Christoffels, 8 entries each, `[i][j][k]`.
    pub connections: Vec<Vec<Expr>>,
}

impl AnsatzSolution {
    pub fn dimension(&self) -> usize {
        self.metrics.len()
    }
}

/// Solves `[P1, R] = 0` over skew first-order candidates
/// `P1 = g Dx + Gamma_k u^k_x` with `g` in the metric-basis span and
/// `Gamma^(ij)_k = (d_k g^(ij))/2 + eps^(ij) b_k` (the split keeps `P1`
/// skew-adjoint for every parameter value, as the bracket requires).
/// Returns a basis of the solution space.
pub fn ansatz_search(r: &MatrixDiffOp) -> Result<AnsatzSolution> {
    let ctx = JetCtx::new(2);
    let gb = metric_basis();
    let bb = connection_basis();
    // Unknowns: 3 metric entries over gb, then b_1, b_2 over bb.
    let n_g = 3 * gb.len();
    let n_b = 2 * bb.len();
    let n = n_g + n_b;
    let syms: Vec<Symbol> = (0..n).map(|i| Symbol::new(&format!("__a{}", i))).collect();
    let a = |i: usize| Expr::var(Var::param(syms[i]));

    let lin = |offset: usize, basis: &[Expr]| -> Expr {
        let mut acc = Expr::zero();
        for (k, phi) in basis.iter().enumerate() {
            acc = acc.add(&a(offset + k).mul(phi));
        }
        acc
    };
    let g11 = lin(0, &gb);
    let g12 = lin(gb.len(), &gb);
    let g22 = lin(2 * gb.len(), &gb);
    let b1 = lin(n_g, &bb);
    let b2 = lin(n_g + bb.len(), &bb);

    let g = Metric::sym2(g11.clone(), g12.clone(), g22.clone());
    let mut conn = Connection::zero(2);
    let gref = [[&g11, &g12], [&g12, &g22]];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                let sym_part = gref[i][j].partial(Var::field(k)).scale(1, 2);
                let anti = if i == 0 && j == 1 {
                    if k == 0 {
                        b1.clone()
                    } else {
                        b2.clone()
                    }
                } else if i == 1 && j == 0 {
                    if k == 0 {
                        b1.neg()
                    } else {
                        b2.neg()
                    }
                } else {
                    Expr::zero()
                };
                *conn.entry_mut(i, j, k) = sym_part.add(&anti);
            }
        }
    }
    let p1 = op_from_metric_connection(&g, &conn);
    let t = schouten_integrand(&ctx, &p1, r)?;

    // Euler residuals; each vanishes iff a linear system in the unknowns
    // holds identically in the jet and covector variables. Rows are keyed
    // per residual: equations from different residuals stay separate.
    let mut rows: HashMap<(usize, crate::poly::Monomial), Vec<BigRational>> = HashMap::new();
    let ectx = ctx.raised(40);
    let mut residuals = Vec::new();
    for i in 0..2 {
        residuals.push(euler(&ectx, &t.expr, Dependent::Field(i))?);
    }
    for slot in 0..3 {
        for i in 0..2 {
            residuals.push(euler(&ectx, &t.expr, Dependent::Cov(slot, i))?);
        }
    }
    for (res_idx, res) in residuals.iter().enumerate() {
        let num = res.rat().num();
        for (mono, coeff) in num.terms() {
            // Split the unknown part off the monomial.
            let mut unknown: Option<usize> = None;
            let mut rest = crate::poly::Monomial::one();
            for (v, e) in mono.vars() {
                let idx = v
                    .as_param()
                    .and_then(|s| syms.iter().position(|t| *t == s));
                match idx {
                    Some(i) => {
                        if e != 1 || unknown.is_some() {
                            return Err(Error::Domain(
                                "bracket residual is not linear in the ansatz unknowns".into(),
                            ));
                        }
                        unknown = Some(i);
                    }
                    None => {
                        rest = rest.mul(&crate::poly::Monomial::var(v).pow_m(e));
                    }
                }
            }
            let Some(ui) = unknown else {
                return Err(Error::Domain(
                    "bracket residual has a term free of the unknowns".into(),
                ));
            };
            let row = rows.entry((res_idx, rest)).or_insert_with(|| {
                vec![BigRational::from_integer(0.into()); n]
            });
            row[ui] += coeff;
        }
    }
    let system: Vec<Vec<BigRational>> = rows.into_values().collect();
    let basis = linalg::nullspace(system, n);

    let mut metrics = Vec::new();
    let mut connections = Vec::new();
    for vec in &basis {
        let assign: HashMap<Symbol, Expr> = syms
            .iter()
            .zip(vec)
            .map(|(s, c)| (*s, Expr::rational(c.clone())))
            .collect();
        metrics.push([
            g11.subst_params(&assign),
            g12.subst_params(&assign),
            g22.subst_params(&assign),
        ]);
        let mut conn_vec = Vec::with_capacity(8);
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    conn_vec.push(conn.entry(i, j, k).subst_params(&assign));
                }
            }
        }
        connections.push(conn_vec);
    }
    Ok(AnsatzSolution {
        metrics,
        connections,
    })
}

/// Expresses a target metric as a rational combination of the solution
/// basis; returns the combination and the induced connection.
pub fn fit_metric(
    sol: &AnsatzSolution,
    target: &[Expr; 3],
) -> Option<(Vec<BigRational>, Vec<Expr>)> {
    // Collect linear equations: for each basis function position, match
    // coefficients. Work over the span of u-monomials appearing anywhere.
    let mut rows: Vec<Vec<BigRational>> = Vec::new();
    let mut rhs: Vec<BigRational> = Vec::new();
    let mut keys: Vec<(usize, crate::poly::Monomial)> = Vec::new();
    let mut key_index: HashMap<(usize, crate::poly::Monomial), usize> = HashMap::new();

    let add_rows = |entry_idx: usize, e: &Expr, col: Option<usize>, ncols: usize,
                        rows: &mut Vec<Vec<BigRational>>, rhs: &mut Vec<BigRational>,
                        keys: &mut Vec<(usize, crate::poly::Monomial)>,
                        key_index: &mut HashMap<(usize, crate::poly::Monomial), usize>| {
        // Clear denominators against u1^2 to compare as polynomials.
        let u1sq = Expr::field(0).pow(2);
        let cleared = e.mul(&u1sq);
        let num = cleared.rat().num().clone();
        let den = cleared.rat().den();
        debug_assert!(den.is_one());
        for (m, c) in num.terms() {
            let key = (entry_idx, m.clone());
            let idx = *key_index.entry(key.clone()).or_insert_with(|| {
                keys.push(key.clone());
                rows.push(vec![BigRational::from_integer(0.into()); ncols]);
                rhs.push(BigRational::from_integer(0.into()));
                rows.len() - 1
            });
            match col {
                Some(cidx) => rows[idx][cidx] += c,
                None => rhs[idx] += c,
            }
        }
    };

    let ncols = sol.metrics.len();
    for (entry_idx, _) in ["g11", "g12", "g22"].iter().enumerate() {
        for (col, m) in sol.metrics.iter().enumerate() {
            add_rows(entry_idx, &m[entry_idx], Some(col), ncols, &mut rows, &mut rhs, &mut keys, &mut key_index);
        }
        add_rows(entry_idx, &target[entry_idx], None, ncols, &mut rows, &mut rhs, &mut keys, &mut key_index);
    }
    let x = linalg::solve(&rows, &rhs)?;
    // Verify the fit exactly and build the connection.
    let mut conn = vec![Expr::zero(); 8];
    let mut fitted = [Expr::zero(), Expr::zero(), Expr::zero()];
    for (col, coef) in x.iter().enumerate() {
        if coef == &BigRational::from_integer(0.into()) {
            continue;
        }
        let c = Expr::rational(coef.clone());
        for e in 0..3 {
            fitted[e] = fitted[e].add(&sol.metrics[col][e].mul(&c));
        }
        for e in 0..8 {
            conn[e] = conn[e].add(&sol.connections[col][e].mul(&c));
        }
    }
    for e in 0..3 {
        if !fitted[e].sub(&target[e]).try_is_zero().ok()? {
            return None;
        }
    }
    Some((x, conn))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poisson;

    #[test]
    fn canonical_operators_are_skew() {
        let ctx = JetCtx::with_cap(2, 40);
        for tag in [
            CanonicalTag::R2,
            CanonicalTag::R3_1,
            CanonicalTag::R3_2,
            CanonicalTag::R3_3,
        ] {
            assert!(canonical(tag).is_skew_adjoint(&ctx).unwrap(), "{:?}", tag);
        }
    }

    #[test]
    fn r3_2_expansion_matches_cited_coefficients() {
        // Leading Dx^3 coefficient of the (1,2) entry is 1/u1.
        let op = r3_2();
        assert!(op
            .entry(0, 1)
            .coeff(3)
            .sub(&Expr::one().div(&Expr::field(0)))
            .is_zero());
        // (1,1) entry vanishes identically.
        assert!(op.entry(0, 0).is_zero());
    }

    #[test]
    fn leading_metrics_flatness() {
        // l^(2) flat, l^(3) non-flat.
        assert!(crate::geometry::is_flat(&leading_metric(CanonicalTag::R3_2)).unwrap());
        assert!(!crate::geometry::is_flat(&leading_metric(CanonicalTag::R3_3)).unwrap());
    }

    #[test]
    fn scalar_trio_mutually_compatible() {
        let ctx = JetCtx::new(1);
        let (p1, q1, r3) = scalar_trio();
        assert!(poisson::are_compatible(&ctx, &p1, &q1).unwrap());
        assert!(poisson::are_compatible(&ctx, &p1, &r3).unwrap());
        assert!(poisson::are_compatible(&ctx, &q1, &r3).unwrap());
    }
}
