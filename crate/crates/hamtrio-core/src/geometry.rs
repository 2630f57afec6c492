//! (Pseudo-)Riemannian machinery for contravariant metrics: Levi-Civita
//! connections, curvature, flatness, and flat-pencil verification.
//!
//! Conventions: a metric is stored contravariantly as `g^(ij)(u)`;
//! connections are the contravariant Christoffel symbols
//! `Gamma^(ij)_k = -g^(il) Gamma^j_(lk)` of the spec's first-order
//! operator `g^(ij) Dx + Gamma^(ij)_k u^k_x`.

use crate::diffop::{MatrixDiffOp, ScalarDiffOp};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::linalg::{det_expr, invert_expr};
use crate::sym::Var;

/// Symmetric contravariant 2-tensor `g^(ij)(u)`.
#[derive(Clone, PartialEq, Eq)]
pub struct Metric {
    m: usize,
    entries: Vec<Expr>,
}

impl Metric {
    /// Builds a metric, checking symmetry (nondegeneracy is checked where
    /// an operation needs it).
    pub fn new(m: usize, entries: Vec<Expr>) -> Result<Metric> {
        if entries.len() != m * m {
            return Err(Error::DimensionMismatch {
                expected: m * m,
                got: entries.len(),
            });
        }
        let g = Metric { m, entries };
        for i in 0..m {
            for j in (i + 1)..m {
                if !g.entry(i, j).sub(&g.entry(j, i)).try_is_zero()? {
                    return Err(Error::Domain(format!(
                        "metric is not symmetric at ({}, {})",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        Ok(g)
    }

    /// 2x2 shorthand from the three independent entries.
    pub fn sym2(g11: Expr, g12: Expr, g22: Expr) -> Metric {
        Metric {
            m: 2,
            entries: vec![g11, g12.clone(), g12, g22],
        }
    }

    /// Scalar (m = 1) metric.
    pub fn scalar(g: Expr) -> Metric {
        Metric {
            m: 1,
            entries: vec![g],
        }
    }

    pub fn size(&self) -> usize {
        self.m
    }

    pub fn entry(&self, i: usize, j: usize) -> &Expr {
        &self.entries[i * self.m + j]
    }

    pub fn det(&self) -> Expr {
        det_expr(self.m, &|i, j| self.entry(i, j).clone())
    }

    pub fn is_degenerate(&self) -> bool {
        self.det().try_is_zero().unwrap_or(true)
    }

    /// Covariant inverse `g_(ij)`.
    pub fn inverse(&self) -> Result<Vec<Expr>> {
        invert_expr(self.m, &|i, j| self.entry(i, j).clone()).ok_or(Error::DegenerateMetric)
    }

    pub fn add(&self, other: &Metric) -> Metric {
        assert_eq!(self.m, other.m);
        Metric {
            m: self.m,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a.add(b))
                .collect(),
        }
    }

    pub fn scale(&self, c: &Expr) -> Metric {
        Metric {
            m: self.m,
            entries: self.entries.iter().map(|a| a.mul(c)).collect(),
        }
    }

    pub fn sub(&self, other: &Metric) -> Metric {
        self.add(&other.scale(&Expr::int(-1)))
    }

    /// The pencil `g - lambda h` with `lambda` symbolic.
    pub fn pencil(&self, h: &Metric) -> Metric {
        self.sub(&h.scale(&Expr::param("lambda")))
    }

    pub fn map(&self, f: &dyn Fn(&Expr) -> Expr) -> Metric {
        Metric {
            m: self.m,
            entries: self.entries.iter().map(f).collect(),
        }
    }

    /// Pushforward along a point map: `g~^(ij) = J^i_k J^j_l g^(kl)`,
    /// coefficients kept in the old coordinates.
    pub fn pushforward_pullback(&self, phi: &[Expr]) -> Metric {
        let m = self.m;
        let jac: Vec<Expr> = (0..m)
            .flat_map(|i| (0..m).map(move |k| (i, k)))
            .map(|(i, k)| phi[i].partial(Var::field(k)))
            .collect();
        let mut entries = vec![Expr::zero(); m * m];
        for i in 0..m {
            for j in 0..m {
                let mut acc = Expr::zero();
                for k in 0..m {
                    for l in 0..m {
                        acc = acc.add(
                            &jac[i * m + k]
                                .mul(&jac[j * m + l])
                                .mul(self.entry(k, l)),
                        );
                    }
                }
                entries[i * m + j] = acc;
            }
        }
        Metric { m, entries }
    }
}

impl std::fmt::Debug for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "[")?;
        for i in 0..self.m {
            write!(f, "  [")?;
            for j in 0..self.m {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", self.entry(i, j))?;
            }
            writeln!(f, "]")?;
        }
        write!(f, "]")
    }
}

/// Contravariant Christoffel symbols `Gamma^(ij)_k(u)`.
#[derive(Clone)]
pub struct Connection {
    m: usize,
    entries: Vec<Expr>, // [i][j][k]
}

impl Connection {
    pub fn new(m: usize, entries: Vec<Expr>) -> Result<Connection> {
        if entries.len() != m * m * m {
            return Err(Error::DimensionMismatch {
                expected: m * m * m,
                got: entries.len(),
            });
        }
        Ok(Connection { m, entries })
    }

    pub fn zero(m: usize) -> Connection {
        Connection {
            m,
            entries: vec![Expr::zero(); m * m * m],
        }
    }

    pub fn size(&self) -> usize {
        self.m
    }

    pub fn entry(&self, i: usize, j: usize, k: usize) -> &Expr {
        &self.entries[(i * self.m + j) * self.m + k]
    }

    pub fn entry_mut(&mut self, i: usize, j: usize, k: usize) -> &mut Expr {
        &mut self.entries[(i * self.m + j) * self.m + k]
    }

    pub fn add(&self, other: &Connection) -> Connection {
        assert_eq!(self.m, other.m);
        Connection {
            m: self.m,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a.add(b))
                .collect(),
        }
    }

    pub fn scale(&self, c: &Expr) -> Connection {
        Connection {
            m: self.m,
            entries: self.entries.iter().map(|a| a.mul(c)).collect(),
        }
    }

    pub fn sub(&self, other: &Connection) -> Connection {
        self.add(&other.scale(&Expr::int(-1)))
    }
}

/// Covariant Christoffel symbols `Gamma^j_(hk)` of the Levi-Civita
/// connection of the covariant metric `g_(ij) = (g^(ij))^(-1)`.
fn covariant_christoffel(g: &Metric) -> Result<Vec<Expr>> {
    let m = g.size();
    let ginv = g.inverse()?; // covariant g_(ij)
    let lower = |i: usize, j: usize| &ginv[i * m + j];
    // Gamma^j_(hk) = 1/2 g^(jl) (d_h g_(lk) + d_k g_(lh) - d_l g_(hk))
    let mut out = vec![Expr::zero(); m * m * m]; // [j][h][k]
    for j in 0..m {
        for h in 0..m {
            for k in 0..m {
                let mut acc = Expr::zero();
                for l in 0..m {
                    let t = lower(l, k)
                        .partial(Var::field(h))
                        .add(&lower(l, h).partial(Var::field(k)))
                        .sub(&lower(h, k).partial(Var::field(l)));
                    acc = acc.add(&g.entry(j, l).mul(&t));
                }
                out[(j * m + h) * m + k] = acc.scale(1, 2);
            }
        }
    }
    Ok(out)
}

/// Contravariant Christoffels `Gamma^(ij)_k = -g^(il) Gamma^j_(lk)` of the
/// Levi-Civita connection; satisfies the Levi-Civita conditions by
/// construction.
pub fn levi_civita(g: &Metric) -> Result<Connection> {
    let cov = covariant_christoffel(g)?;
    Ok(contravariant_from_covariant(g, &cov))
}

fn contravariant_from_covariant(g: &Metric, cov: &[Expr]) -> Connection {
    let m = g.size();
    let mut conn = Connection::zero(m);
    for i in 0..m {
        for j in 0..m {
            for k in 0..m {
                let mut acc = Expr::zero();
                for l in 0..m {
                    acc = acc.add(&g.entry(i, l).mul(&cov[(j * m + l) * m + k]));
                }
                *conn.entry_mut(i, j, k) = acc.neg();
            }
        }
    }
    conn
}

/// Residuals of the Levi-Civita conditions
/// `g^(is) Gamma^(jk)_s = g^(js) Gamma^(ik)_s` and
/// `Gamma^(ij)_k + Gamma^(ji)_k = d_k g^(ij)`, left minus right.
pub fn levi_civita_residuals(g: &Metric, conn: &Connection) -> Vec<Expr> {
    let m = g.size();
    let mut out = Vec::new();
    for i in 0..m {
        for j in 0..m {
            for k in 0..m {
                let mut lhs = Expr::zero();
                let mut rhs = Expr::zero();
                for s in 0..m {
                    lhs = lhs.add(&g.entry(i, s).mul(conn.entry(j, k, s)));
                    rhs = rhs.add(&g.entry(j, s).mul(conn.entry(i, k, s)));
                }
                out.push(lhs.sub(&rhs));
            }
        }
    }
    for i in 0..m {
        for j in 0..m {
            for k in 0..m {
                let sym = conn.entry(i, j, k).add(conn.entry(j, i, k));
                out.push(sym.sub(&g.entry(i, j).partial(Var::field(k))));
            }
        }
    }
    out
}

/// One curvature component `R^i_(jkl)` from precomputed covariant
/// Christoffels.
fn riemann_component(
    cov: &[Expr],
    m: usize,
    i: usize,
    j: usize,
    k: usize,
    l: usize,
) -> Expr {
    let gam = |i: usize, h: usize, k: usize| &cov[(i * m + h) * m + k];
    // R^i_(jkl) = d_k Gamma^i_(lj) - d_l Gamma^i_(kj)
    //           + Gamma^i_(ks) Gamma^s_(lj) - Gamma^i_(ls) Gamma^s_(kj)
    let mut acc = gam(i, l, j)
        .partial(Var::field(k))
        .sub(&gam(i, k, j).partial(Var::field(l)));
    for s in 0..m {
        acc = acc
            .add(&gam(i, k, s).mul(gam(s, l, j)))
            .sub(&gam(i, l, s).mul(gam(s, k, j)));
    }
    acc
}

/// Riemann tensor `R^i_(jkl)` of the Levi-Civita connection of the
/// covariant metric `g^(-1)`.
pub fn riemann(g: &Metric) -> Result<Vec<Expr>> {
    let m = g.size();
    let cov = covariant_christoffel(g)?;
    let mut out = vec![Expr::zero(); m * m * m * m];
    for i in 0..m {
        for j in 0..m {
            for k in 0..m {
                for l in (k + 1)..m {
                    let r = riemann_component(&cov, m, i, j, k, l);
                    out[((i * m + j) * m + l) * m + k] = r.neg();
                    out[((i * m + j) * m + k) * m + l] = r;
                }
            }
        }
    }
    Ok(out)
}

/// Checks vanishing curvature from precomputed Christoffels, stopping at
/// the first nonzero component.
fn curvature_vanishes(cov: &[Expr], m: usize) -> Result<bool> {
    for i in 0..m {
        for j in 0..m {
            for k in 0..m {
                for l in (k + 1)..m {
                    if !riemann_component(cov, m, i, j, k, l).try_is_zero()? {
                        return Ok(false);
                    }
                }
            }
        }
    }
    Ok(true)
}

/// Flatness with symbolic parameters: identically vanishing curvature.
pub fn is_flat(g: &Metric) -> Result<bool> {
    if g.is_degenerate() {
        return Err(Error::DegenerateMetric);
    }
    let cov = covariant_christoffel(g)?;
    curvature_vanishes(&cov, g.size())
}

/// Which flat-pencil condition failed, if any.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PencilDiagnostic {
    Flat,
    CurvatureNonzero,
    ChristoffelNotAdditive,
}

/// Checks that `g - lambda h` is flat for every lambda and that its
/// Christoffel symbols are the pencil of the endpoints' symbols; lambda is
/// treated as a polynomial indeterminate, so both are finitely many exact
/// identities.
pub fn flat_pencil_check(g: &Metric, h: &Metric) -> Result<(bool, PencilDiagnostic)> {
    if g.is_degenerate() || h.is_degenerate() {
        return Err(Error::DegenerateMetric);
    }
    let glam = g.pencil(h);
    if glam.is_degenerate() {
        return Err(Error::DegeneratePencil);
    }
    // Christoffel additivity first (cheaper, and its covariant symbols are
    // reused for the curvature).
    let cov = covariant_christoffel(&glam)?;
    let conn_pencil = contravariant_from_covariant(&glam, &cov);
    let conn_g = levi_civita(g)?;
    let conn_h = levi_civita(h)?;
    let expected = conn_g.sub(&conn_h.scale(&Expr::param("lambda")));
    let m = g.size();
    for i in 0..m {
        for j in 0..m {
            for k in 0..m {
                let diff = conn_pencil.entry(i, j, k).sub(expected.entry(i, j, k));
                if !diff.try_is_zero()? {
                    return Ok((false, PencilDiagnostic::ChristoffelNotAdditive));
                }
            }
        }
    }
    if !curvature_vanishes(&cov, m)? {
        return Ok((false, PencilDiagnostic::CurvatureNonzero));
    }
    Ok((true, PencilDiagnostic::Flat))
}

/// Hydrodynamic-type operator `g^(ij) Dx + Gamma^(ij)_k u^k_x` with the
/// Levi-Civita connection of `g`.
pub fn op_from_metric(g: &Metric) -> Result<MatrixDiffOp> {
    let conn = levi_civita(g)?;
    Ok(op_from_metric_connection(g, &conn))
}

/// Hydrodynamic-type operator with an explicitly given connection.
pub fn op_from_metric_connection(g: &Metric, conn: &Connection) -> MatrixDiffOp {
    let m = g.size();
    let mut op = MatrixDiffOp::zero(m);
    for i in 0..m {
        for j in 0..m {
            let mut entry = ScalarDiffOp::dx(g.entry(i, j).clone(), 1);
            let mut low = Expr::zero();
            for k in 0..m {
                low = low.add(&conn.entry(i, j, k).mul(&Expr::jet(k, 1)));
            }
            entry.add_term(0, low);
            *op.entry_mut(i, j) = entry;
        }
    }
    op
}

/// Reads `(g, Gamma)` off a first-order operator.
pub fn metric_connection_of_op(op: &MatrixDiffOp) -> Result<(Metric, Connection)> {
    let m = op.size();
    if op.order() > 1 {
        return Err(Error::Domain(
            "operator is not of hydrodynamic type".into(),
        ));
    }
    let mut entries = Vec::with_capacity(m * m);
    for i in 0..m {
        for j in 0..m {
            entries.push(op.entry(i, j).coeff(1));
        }
    }
    let g = Metric::new(m, entries)?;
    let mut conn = Connection::zero(m);
    for i in 0..m {
        for j in 0..m {
            let low = op.entry(i, j).coeff(0);
            // Gamma^(ij)_k = d(low)/d(u^k_x); the zero-order coefficient
            // must be linear in the first jets with u-dependent factors.
            for k in 0..m {
                let c = low.partial(Var::jet(k, 1));
                if c.max_jet_order() > 0 {
                    return Err(Error::Domain(
                        "operator is not of hydrodynamic type".into(),
                    ));
                }
                *conn.entry_mut(i, j, k) = c;
            }
        }
    }
    Ok((g, conn))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_metric_is_flat_with_zero_connection() {
        let g = Metric::sym2(Expr::int(0), Expr::one(), Expr::int(0));
        let conn = levi_civita(&g).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    assert!(conn.entry(i, j, k).rat().is_zero());
                }
            }
        }
        assert!(is_flat(&g).unwrap());
        assert!(riemann(&g).unwrap().iter().all(|r| r.rat().is_zero()));
    }

    #[test]
    fn levi_civita_residuals_vanish_for_lc_pair() {
        // g = ((2u1, u2), (u2, -2)): the AKNS first-order metric.
        let g = Metric::sym2(
            Expr::field(0).scale(2, 1),
            Expr::field(1),
            Expr::int(-2),
        );
        let conn = levi_civita(&g).unwrap();
        for r in levi_civita_residuals(&g, &conn) {
            assert!(r.is_zero());
        }
        assert!(is_flat(&g).unwrap());
    }

    #[test]
    fn op_from_metric_examples() {
        // g = ((0,1),(1,0)) -> P1 = ((0, Dx), (Dx, 0))
        let g = Metric::sym2(Expr::zero(), Expr::one(), Expr::zero());
        let p1 = op_from_metric(&g).unwrap();
        assert_eq!(p1.entry(0, 1).coeff(1), Expr::one());
        assert!(p1.entry(0, 0).is_zero());
        assert!(p1.entry(0, 1).coeff(0).rat().is_zero());
        // scalar g = 2u -> 2u Dx + u_x
        let q = op_from_metric(&Metric::scalar(Expr::field(0).scale(2, 1))).unwrap();
        assert_eq!(q.entry(0, 0).coeff(1), Expr::field(0).scale(2, 1));
        assert_eq!(q.entry(0, 0).coeff(0), Expr::jet(0, 1));
        // AKNS Q1 = ((2u Dx + u_x, v Dx), (Dx v, -2 Dx))
        let g2 = Metric::sym2(
            Expr::field(0).scale(2, 1),
            Expr::field(1),
            Expr::int(-2),
        );
        let q1 = op_from_metric(&g2).unwrap();
        assert_eq!(q1.entry(0, 0).coeff(0), Expr::jet(0, 1));
        assert!(q1.entry(0, 1).coeff(0).rat().is_zero());
        assert_eq!(q1.entry(1, 0).coeff(0), Expr::jet(1, 1));
        // round trip
        let (g_back, conn_back) = metric_connection_of_op(&q1).unwrap();
        assert!(g_back.entry(0, 0).sub(g2.entry(0, 0)).is_zero());
        let lc = levi_civita(&g2).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    assert!(conn_back.entry(i, j, k).sub(lc.entry(i, j, k)).is_zero());
                }
            }
        }
    }

    #[test]
    fn riemann_symmetries_on_random_metric() {
        // A rational nonconstant 2x2 metric.
        let g = Metric::sym2(
            Expr::field(0).mul(&Expr::field(1)).add(&Expr::int(3)),
            Expr::field(1).pow(2),
            Expr::field(0).add(&Expr::int(1)),
        );
        let r = riemann(&g).unwrap();
        let m = 2;
        let at = |i: usize, j: usize, k: usize, l: usize| &r[((i * m + j) * m + k) * m + l];
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    for l in 0..m {
                        // antisymmetry in the last pair
                        assert!(at(i, j, k, l).add(at(i, j, l, k)).is_zero());
                    }
                }
            }
        }
        // first Bianchi identity
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    for l in 0..m {
                        let b = at(i, j, k, l).add(at(i, k, l, j)).add(at(i, l, j, k));
                        assert!(b.is_zero());
                    }
                }
            }
        }
    }

    #[test]
    fn flat_pencil_trivial_case() {
        let g = Metric::sym2(
            Expr::field(0).scale(2, 1),
            Expr::field(1),
            Expr::int(-2),
        );
        let (ok, diag) = flat_pencil_check(&g, &g).unwrap();
        assert!(ok);
        assert_eq!(diag, PencilDiagnostic::Flat);
    }

    #[test]
    fn degenerate_pencil_detected() {
        let g = Metric::sym2(Expr::zero(), Expr::one(), Expr::zero());
        let zero_det = Metric::sym2(Expr::one(), Expr::one(), Expr::one());
        // det(h) = 0: degenerate endpoint.
        assert!(matches!(
            flat_pencil_check(&g, &zero_det),
            Err(Error::DegenerateMetric)
        ));
    }
}
