//! Exact linear algebra: small symbolic determinants and inverses, and
//! Gaussian elimination over the rationals and over expression fields.

use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::expr::Expr;

/// Determinant of a small matrix of expressions by cofactor expansion.
pub fn det_expr(m: usize, entry: &dyn Fn(usize, usize) -> Expr) -> Expr {
    match m {
        0 => Expr::one(),
        1 => entry(0, 0),
        _ => {
            let mut acc = Expr::zero();
            for j in 0..m {
                let minor = |r: usize, c: usize| entry(r + 1, if c < j { c } else { c + 1 });
                let cof = det_expr(m - 1, &minor);
                let term = entry(0, j).mul(&cof);
                acc = if j % 2 == 0 {
                    acc.add(&term)
                } else {
                    acc.sub(&term)
                };
            }
            acc
        }
    }
}

/// Symbolic inverse via the adjugate; `None` when the determinant is zero.
pub fn invert_expr(m: usize, entry: &dyn Fn(usize, usize) -> Expr) -> Option<Vec<Expr>> {
    let det = det_expr(m, entry);
    if det.try_is_zero().unwrap_or(true) {
        return None;
    }
    let mut out = vec![Expr::zero(); m * m];
    for i in 0..m {
        for j in 0..m {
            // Cofactor C_ji / det.
            let minor = |r: usize, c: usize| {
                entry(
                    if r < j { r } else { r + 1 },
                    if c < i { c } else { c + 1 },
                )
            };
            let mut cof = det_expr(m - 1, &minor);
            if (i + j) % 2 == 1 {
                cof = cof.neg();
            }
            out[i * m + j] = cof.div(&det);
        }
    }
    Some(out)
}

/// Reduced row echelon form over the rationals, in place. Returns the
/// pivot column of each pivot row.
pub fn rref(rows: &mut Vec<Vec<BigRational>>) -> Vec<usize> {
    let nrows = rows.len();
    if nrows == 0 {
        return Vec::new();
    }
    let ncols = rows[0].len();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        if r >= nrows {
            break;
        }
        let Some(p) = (r..nrows).find(|&i| !rows[i][c].is_zero()) else {
            continue;
        };
        rows.swap(r, p);
        let inv = BigRational::one() / rows[r][c].clone();
        for x in rows[r].iter_mut() {
            *x *= &inv;
        }
        for i in 0..nrows {
            if i != r && !rows[i][c].is_zero() {
                let f = rows[i][c].clone();
                for cc in 0..ncols {
                    let sub = &rows[r][cc] * &f;
                    rows[i][cc] -= sub;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    rows.retain(|row| row.iter().any(|x| !x.is_zero()));
    pivots
}

/// Basis of the nullspace of the homogeneous system `rows * x = 0`.
pub fn nullspace(mut rows: Vec<Vec<BigRational>>, ncols: usize) -> Vec<Vec<BigRational>> {
    for row in &rows {
        assert_eq!(row.len(), ncols);
    }
    let pivots = rref(&mut rows);
    let mut basis = Vec::new();
    let is_pivot = |c: usize| pivots.binary_search(&c).is_ok();
    for free in 0..ncols {
        if is_pivot(free) {
            continue;
        }
        let mut v = vec![BigRational::zero(); ncols];
        v[free] = BigRational::one();
        for (ri, &pc) in pivots.iter().enumerate() {
            v[pc] = -rows[ri][free].clone();
        }
        basis.push(v);
    }
    basis
}

/// One solution of `A x = b` over the rationals, or `None` if inconsistent.
pub fn solve(a: &[Vec<BigRational>], b: &[BigRational]) -> Option<Vec<BigRational>> {
    let nrows = a.len();
    if nrows == 0 {
        return Some(Vec::new());
    }
    let ncols = a[0].len();
    let mut aug: Vec<Vec<BigRational>> = a
        .iter()
        .zip(b)
        .map(|(row, rhs)| {
            let mut r = row.clone();
            r.push(rhs.clone());
            r
        })
        .collect();
    let pivots = rref(&mut aug);
    // Inconsistent when a pivot lands in the rhs column.
    if pivots.last() == Some(&ncols) {
        return None;
    }
    let mut x = vec![BigRational::zero(); ncols];
    for (ri, &pc) in pivots.iter().enumerate() {
        x[pc] = aug[ri][ncols].clone();
    }
    Some(x)
}

/// Rank of a rational matrix.
pub fn rank(rows: Vec<Vec<BigRational>>) -> usize {
    let mut rows = rows;
    rref(&mut rows).len()
}

/// One solution of `A x = b` over the field of expressions (pivoting on
/// symbolically nonzero entries), or `None` if inconsistent within the
/// ansatz class.
pub fn solve_expr(a: &[Vec<Expr>], b: &[Expr]) -> Option<Vec<Expr>> {
    let nrows = a.len();
    if nrows == 0 {
        return Some(Vec::new());
    }
    let ncols = a[0].len();
    let mut aug: Vec<Vec<Expr>> = a
        .iter()
        .zip(b)
        .map(|(row, rhs)| {
            let mut r = row.clone();
            r.push(rhs.clone());
            r
        })
        .collect();
    let mut pivots: Vec<(usize, usize)> = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        if r >= nrows {
            break;
        }
        let Some(p) = (r..nrows).find(|&i| !aug[i][c].try_is_zero().unwrap_or(false)) else {
            continue;
        };
        aug.swap(r, p);
        let pivot = aug[r][c].clone();
        for x in aug[r].iter_mut() {
            *x = x.div(&pivot);
        }
        for i in 0..nrows {
            if i != r && !aug[i][c].try_is_zero().unwrap_or(false) {
                let f = aug[i][c].clone();
                for cc in 0..=ncols {
                    let sub = aug[r][cc].mul(&f);
                    aug[i][cc] = aug[i][cc].sub(&sub);
                }
            }
        }
        pivots.push((r, c));
        r += 1;
    }
    // Inconsistent when a zero row has nonzero rhs.
    for i in r..nrows {
        if !aug[i][ncols].try_is_zero().unwrap_or(false) {
            return None;
        }
    }
    let mut x = vec![Expr::zero(); ncols];
    for &(ri, pc) in &pivots {
        x[pc] = aug[ri][ncols].clone();
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64) -> BigRational {
        BigRational::from_integer(n.into())
    }

    #[test]
    fn nullspace_of_rank_one() {
        // x + y + z = 0 has a 2-dimensional nullspace.
        let rows = vec![vec![q(1), q(1), q(1)]];
        let basis = nullspace(rows, 3);
        assert_eq!(basis.len(), 2);
        for v in &basis {
            assert!(v.iter().cloned().sum::<BigRational>().is_zero());
        }
    }

    #[test]
    fn solve_consistent_and_not() {
        let a = vec![vec![q(1), q(2)], vec![q(3), q(4)]];
        let x = solve(&a, &[q(5), q(11)]).unwrap();
        assert_eq!(x, vec![q(1), q(2)]);
        let sing = vec![vec![q(1), q(1)], vec![q(2), q(2)]];
        assert!(solve(&sing, &[q(1), q(3)]).is_none());
        assert!(solve(&sing, &[q(1), q(2)]).is_some());
    }

    #[test]
    fn determinant_and_inverse() {
        let u1 = Expr::field(0);
        let u2 = Expr::field(1);
        let g = vec![u1.clone(), u2.clone(), u2.clone(), Expr::int(2)];
        let entry = |i: usize, j: usize| g[i * 2 + j].clone();
        let d = det_expr(2, &entry);
        assert_eq!(d, u1.scale(2, 1).sub(&u2.pow(2)));
        let inv = invert_expr(2, &entry).unwrap();
        // g * g^-1 = id
        for i in 0..2 {
            for j in 0..2 {
                let mut acc = Expr::zero();
                for k in 0..2 {
                    acc = acc.add(&entry(i, k).mul(&inv[k * 2 + j]));
                }
                let expect = if i == j { Expr::one() } else { Expr::zero() };
                assert!(acc.sub(&expect).is_zero());
            }
        }
    }

    #[test]
    fn solve_over_expression_field() {
        let alpha = Expr::param("alpha");
        let a = vec![
            vec![alpha.clone(), Expr::one()],
            vec![Expr::zero(), alpha.clone()],
        ];
        let b = vec![alpha.add(&Expr::one()), alpha.clone()];
        let x = solve_expr(&a, &b).unwrap();
        assert!(x[1].sub(&Expr::one()).is_zero());
        // alpha * x0 + 1 = alpha + 1  =>  x0 = 1
        assert!(x[0].sub(&Expr::one()).is_zero());
    }
}
