//! Hamiltonian and compatibility testing via the Schouten bracket.
//!
//! The bracket of two skew-adjoint operators is represented by its
//! trivector integrand in three formal covectors; the bracket vanishes
//! exactly when the integrand is a total derivative, which the Euler
//! operator decides. The third-order canonical-form conditions and the
//! second-order form check live here as well.

use crate::diffop::{MatrixDiffOp, ScalarDiffOp};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::geometry::{self, Metric};
use crate::jet::{euler, is_total_derivative, total_derivative_n, Dependent};
use crate::sym::{JetCtx, Var};

/// Trilinear integrand of the Schouten bracket `[P, Q]` in the covectors
/// `psi_1, psi_2, psi_3` and their jets.
pub struct TrivectorIntegrand {
    pub expr: Expr,
    pub m: usize,
}

/// Jet cap used for bracket computations; raised locally because the
/// directional derivatives prolong covector jets well past the default.
fn bracket_ctx(ctx: &JetCtx) -> JetCtx {
    ctx.raised(40)
}

/// Directional derivative of the coefficients of `p` along the
/// evolutionary field `x`: each coefficient `a` becomes
/// `sum_(i,k) (da/du^i_(k)) Dx^k(x^i)`.
fn directional_derivative(ctx: &JetCtx, p: &MatrixDiffOp, x: &[Expr]) -> Result<MatrixDiffOp> {
    let m = p.size();
    // Highest u-jet order appearing in any coefficient.
    let mut max_order = 0usize;
    for i in 0..m {
        for j in 0..m {
            for (_, a) in p.entry(i, j).terms() {
                for v in a.all_vars() {
                    if let Some((_, k)) = v.as_jet() {
                        max_order = max_order.max(k);
                    }
                }
            }
        }
    }
    // Prolongations Dx^k(x^i).
    let mut prolonged: Vec<Vec<Expr>> = Vec::with_capacity(m);
    for xi in x {
        let mut row = vec![xi.clone()];
        for k in 1..=max_order {
            let next = crate::jet::total_derivative(ctx, &row[k - 1])?;
            row.push(next);
        }
        prolonged.push(row);
    }
    let mut out = MatrixDiffOp::zero(m);
    for i in 0..m {
        for j in 0..m {
            let mut entry = ScalarDiffOp::zero();
            for (ord, a) in p.entry(i, j).terms() {
                let mut acc = Expr::zero();
                for comp in 0..m {
                    for k in 0..=max_order {
                        let da = a.partial(Var::jet(comp, k));
                        if da.rat().is_zero() {
                            continue;
                        }
                        acc = acc.add(&da.mul(&prolonged[comp][k]));
                    }
                }
                entry.add_term(ord, acc);
            }
            *out.entry_mut(i, j) = entry;
        }
    }
    Ok(out)
}

/// `psi . M(phi)` for covector slots: contracts the matrix operator
/// between two covectors.
fn sandwich(ctx: &JetCtx, left_slot: usize, op: &MatrixDiffOp, right_slot: usize) -> Result<Expr> {
    let m = op.size();
    let right: Vec<Expr> = (0..m).map(|i| Expr::cov(right_slot, i, 0)).collect();
    let applied = op.apply(ctx, &right)?;
    let mut acc = Expr::zero();
    for (i, a) in applied.iter().enumerate() {
        acc = acc.add(&Expr::cov(left_slot, i, 0).mul(a));
    }
    Ok(acc)
}

/// The Schouten-bracket integrand
/// `T = sum_cyc psi_1 . (DP[Q psi_2])(psi_3) + (P <-> Q)`;
/// `[P, Q] = 0` iff `T` is a total derivative.
pub fn schouten_integrand(
    ctx: &JetCtx,
    p: &MatrixDiffOp,
    q: &MatrixDiffOp,
) -> Result<TrivectorIntegrand> {
    let m = p.size();
    if q.size() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: q.size(),
        });
    }
    let ctx = bracket_ctx(ctx);
    if !p.is_skew_adjoint(&ctx)? || !q.is_skew_adjoint(&ctx)? {
        return Err(Error::NotSkewAdjoint);
    }
    let mut total = Expr::zero();
    // Cyclic permutations of the three covector slots.
    for cyc in 0..3usize {
        let s1 = cyc;
        let s2 = (cyc + 1) % 3;
        let s3 = (cyc + 2) % 3;
        for (a, b) in [(p, q), (q, p)] {
            // psi_(s1) . (Da[b psi_(s2)])(psi_(s3))
            let psi2: Vec<Expr> = (0..m).map(|i| Expr::cov(s2, i, 0)).collect();
            let b_psi2 = b.apply(&ctx, &psi2)?;
            let da = directional_derivative(&ctx, a, &b_psi2)?;
            total = total.add(&sandwich(&ctx, s1, &da, s3)?);
        }
    }
    Ok(TrivectorIntegrand { expr: total, m })
}

/// Euler-annihilation test of the integrand over fields and covectors.
fn integrand_is_exact(ctx: &JetCtx, t: &TrivectorIntegrand) -> Result<bool> {
    let ctx = bracket_ctx(ctx);
    is_total_derivative(&ctx, &t.expr)
}

/// `[P, Q] = 0`, decided exactly through the Euler operator.
pub fn are_compatible(ctx: &JetCtx, p: &MatrixDiffOp, q: &MatrixDiffOp) -> Result<bool> {
    let t = schouten_integrand(ctx, p, q)?;
    integrand_is_exact(ctx, &t)
}

/// Hamiltonianity: skew-adjoint with vanishing self-bracket.
pub fn is_hamiltonian(ctx: &JetCtx, p: &MatrixDiffOp) -> Result<bool> {
    let bctx = bracket_ctx(ctx);
    if !p.is_skew_adjoint(&bctx)? {
        return Ok(false);
    }
    are_compatible(ctx, p, p)
}

/// Geometric criterion for nondegenerate first-order operators: flat
/// metric with its Levi-Civita connection. Used as the cross-check of the
/// bracket route.
pub fn is_hamiltonian_first_order(ctx: &JetCtx, p: &MatrixDiffOp) -> Result<bool> {
    let _ = ctx;
    let (g, conn) = geometry::metric_connection_of_op(p)?;
    if g.is_degenerate() {
        return Err(Error::DegenerateMetric);
    }
    for r in geometry::levi_civita_residuals(&g, &conn) {
        if !r.try_is_zero()? {
            return Ok(false);
        }
    }
    geometry::is_flat(&g)
}

/// Residuals of the third-order canonical-form conditions for
/// `R_3 = Dx (l^(ij) Dx + c^(ij)_k u^k_x) Dx`:
/// `c_(nkm) = (l_(nm,k) - l_(nk,m))/3`,
/// `l_(mn,k) + l_(nk,m) + l_(km,n) = 0`,
/// `c_(mnk,l) = -l^(pq) c_(pml) c_(qnk)`.
pub fn third_order_conditions(l: &Metric, c_upper: &[Expr]) -> Result<Vec<Expr>> {
    let m = l.size();
    if c_upper.len() != m * m * m {
        return Err(Error::DimensionMismatch {
            expected: m * m * m,
            got: c_upper.len(),
        });
    }
    let l_cov = l.inverse()?;
    let low = |i: usize, j: usize| &l_cov[i * m + j];
    // c_(ijk) = l_(iq) l_(jp) c^(qp)_k
    let mut c = vec![Expr::zero(); m * m * m];
    for i in 0..m {
        for j in 0..m {
            for k in 0..m {
                let mut acc = Expr::zero();
                for qq in 0..m {
                    for pp in 0..m {
                        acc = acc.add(
                            &low(i, qq)
                                .mul(low(j, pp))
                                .mul(&c_upper[(qq * m + pp) * m + k]),
                        );
                    }
                }
                c[(i * m + j) * m + k] = acc;
            }
        }
    }
    let cl = |i: usize, j: usize, k: usize| &c[(i * m + j) * m + k];
    let mut residuals = Vec::new();
    // (4): c_(nkm) = 1/3 (l_(nm,k) - l_(nk,m))
    for n in 0..m {
        for k in 0..m {
            for mm in 0..m {
                let rhs = low(n, mm)
                    .partial(Var::field(k))
                    .sub(&low(n, k).partial(Var::field(mm)))
                    .scale(1, 3);
                residuals.push(cl(n, k, mm).sub(&rhs));
            }
        }
    }
    // (6): l_(mn,k) + l_(nk,m) + l_(km,n) = 0
    for mm in 0..m {
        for n in 0..m {
            for k in 0..m {
                residuals.push(
                    low(mm, n)
                        .partial(Var::field(k))
                        .add(&low(n, k).partial(Var::field(mm)))
                        .add(&low(k, mm).partial(Var::field(n))),
                );
            }
        }
    }
    // (7): c_(mnk,l) = -l^(pq) c_(pml) c_(qnk)
    for mm in 0..m {
        for n in 0..m {
            for k in 0..m {
                for ll in 0..m {
                    let lhs = cl(mm, n, k).partial(Var::field(ll));
                    let mut rhs = Expr::zero();
                    for pp in 0..m {
                        for qq in 0..m {
                            rhs = rhs.add(&l.entry(pp, qq).mul(cl(pp, mm, ll)).mul(cl(qq, n, k)));
                        }
                    }
                    residuals.push(lhs.add(&rhs));
                }
            }
        }
    }
    Ok(residuals)
}

/// Second-order canonical form data: `l_(ij) = T_(ijk) u^k + T0_(ij)` with
/// totally antisymmetric `T` and antisymmetric `T0`.
pub fn second_order_form_check(m: usize, t: &[Expr], t0: &[Expr]) -> Result<bool> {
    if t.len() != m * m * m || t0.len() != m * m {
        return Err(Error::DimensionMismatch {
            expected: m * m * m + m * m,
            got: t.len() + t0.len(),
        });
    }
    let at = |i: usize, j: usize, k: usize| &t[(i * m + j) * m + k];
    for i in 0..m {
        for j in 0..m {
            if !t0[i * m + j].add(&t0[j * m + i]).try_is_zero()? {
                return Ok(false);
            }
            for k in 0..m {
                // Total antisymmetry: swapping any adjacent pair negates.
                if !at(i, j, k).add(at(j, i, k)).try_is_zero()? {
                    return Ok(false);
                }
                if !at(i, j, k).add(at(i, k, j)).try_is_zero()? {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// Euler residuals of the integrand, for diagnostics and reports.
pub fn bracket_residuals(ctx: &JetCtx, t: &TrivectorIntegrand) -> Result<Vec<Expr>> {
    let ctx = bracket_ctx(ctx);
    let mut out = Vec::new();
    for i in 0..ctx.m {
        out.push(euler(&ctx, &t.expr, Dependent::Field(i))?);
    }
    for slot in 0..3 {
        for i in 0..ctx.m {
            out.push(euler(&ctx, &t.expr, Dependent::Cov(slot, i))?);
        }
    }
    Ok(out)
}

/// Prolongs an evolutionary field to a given jet order (helper shared with
/// the hierarchy module).
pub fn prolong(ctx: &JetCtx, x: &[Expr], order: usize) -> Result<Vec<Vec<Expr>>> {
    let mut out = Vec::with_capacity(x.len());
    for xi in x {
        let mut row = vec![xi.clone()];
        for k in 1..=order {
            let next = total_derivative_n(ctx, &row[k - 1], 1)?;
            row.push(next);
        }
        out.push(row);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_op(entries: ScalarDiffOp) -> MatrixDiffOp {
        MatrixDiffOp::from_entries(1, vec![entries]).unwrap()
    }

    #[test]
    fn constant_operators_have_zero_integrand() {
        let ctx = JetCtx::new(1);
        let dx = MatrixDiffOp::dx_identity(1, 1);
        let t = schouten_integrand(&ctx, &dx, &dx).unwrap();
        assert!(t.expr.rat().is_zero());
        assert!(are_compatible(&ctx, &dx, &dx).unwrap());
    }

    #[test]
    fn kdv_scalar_trio_pairwise_compatible() {
        let ctx = JetCtx::new(1);
        let p1 = MatrixDiffOp::dx_identity(1, 1);
        let q1 = scalar_op(
            ScalarDiffOp::dx(Expr::field(0).scale(2, 1), 1)
                .add(&ScalarDiffOp::mult(Expr::jet(0, 1))),
        );
        let r3 = MatrixDiffOp::dx_identity(1, 3);
        // P = Dx, Q = 2u Dx + u_x: integrand reduces to a total derivative.
        let t = schouten_integrand(&ctx, &p1, &q1).unwrap();
        assert!(!t.expr.rat().is_zero());
        assert!(is_total_derivative(&JetCtx::with_cap(1, 40), &t.expr).unwrap());
        assert!(are_compatible(&ctx, &p1, &q1).unwrap());
        // Magri pair.
        assert!(are_compatible(&ctx, &q1, &r3).unwrap());
        assert!(are_compatible(&ctx, &p1, &r3).unwrap());
        // All three are Hamiltonian.
        for op in [&p1, &q1, &r3] {
            assert!(is_hamiltonian(&ctx, op).unwrap());
        }
    }

    #[test]
    fn non_skew_rejected() {
        let ctx = JetCtx::new(1);
        let bad = scalar_op(ScalarDiffOp::mult(Expr::field(0)));
        assert!(matches!(
            schouten_integrand(&ctx, &bad, &bad),
            Err(Error::NotSkewAdjoint)
        ));
    }

    #[test]
    fn non_hamiltonian_first_order_detected() {
        let ctx = JetCtx::new(2);
        // Non-flat metric: geometric and bracket answers both say no.
        let g = crate::geometry::Metric::sym2(
            Expr::field(1).pow(2).add(&Expr::int(1)),
            Expr::zero(),
            Expr::field(0).pow(2).add(&Expr::int(1)),
        );
        let op = crate::geometry::op_from_metric(&g).unwrap();
        assert!(!crate::geometry::is_flat(&g).unwrap());
        assert!(!is_hamiltonian_first_order(&ctx, &op).unwrap());
        assert!(!is_hamiltonian(&ctx, &op).unwrap());
    }

    #[test]
    fn second_order_form_examples() {
        // m = 2: T0 = ((0,1),(-1,0)), T = 0.
        let t = vec![Expr::zero(); 8];
        let t0 = vec![Expr::zero(), Expr::one(), Expr::int(-1), Expr::zero()];
        assert!(second_order_form_check(2, &t, &t0).unwrap());
        // symmetric T0 fails
        let t0_bad = vec![Expr::zero(), Expr::one(), Expr::one(), Expr::zero()];
        assert!(!second_order_form_check(2, &t, &t0_bad).unwrap());
        // m = 3: Levi-Civita symbol passes
        let mut t3 = vec![Expr::zero(); 27];
        let eps = |i: usize, j: usize, k: usize| -> i64 {
            match (i, j, k) {
                (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1,
                (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1,
                _ => 0,
            }
        };
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    t3[(i * 3 + j) * 3 + k] = Expr::int(eps(i, j, k));
                }
            }
        }
        let t0_zero = vec![Expr::zero(); 9];
        assert!(second_order_form_check(3, &t3, &t0_zero).unwrap());
    }
}
