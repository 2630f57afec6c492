//! Differential algebra on the jet space: total derivative, Euler
//! (variational derivative) operator, homogeneity grading, exactness.

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::sym::{JetCtx, Var};

/// Total x-derivative by the chain rule over all field, jet and covector
/// variables. Fails with `JetOrderExceeded` instead of truncating.
pub fn total_derivative(ctx: &JetCtx, e: &Expr) -> Result<Expr> {
    let vars = e.all_vars();
    let mut out = Expr::zero();
    for v in vars {
        let dv = match v.x_derivative() {
            Some(w) => w,
            None => continue, // parameters and radicals-as-atoms: radicals
                              // are reached through the chain rule below.
        };
        if dv.jet_order() > ctx.max_jet_order {
            return Err(Error::JetOrderExceeded {
                order: dv.jet_order(),
                cap: ctx.max_jet_order,
            });
        }
        let de = e.partial(v);
        if de.try_is_zero().unwrap_or(false) {
            continue;
        }
        out = out.add(&de.mul(&Expr::var(dv)));
    }
    Ok(out)
}

/// `k`-fold total derivative.
pub fn total_derivative_n(ctx: &JetCtx, e: &Expr, k: usize) -> Result<Expr> {
    let mut out = e.clone();
    for _ in 0..k {
        out = total_derivative(ctx, &out)?;
    }
    Ok(out)
}

/// The dependent variable a variational derivative is taken against:
/// either a field component or a covector slot/component.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Dependent {
    Field(usize),
    Cov(usize, usize),
}

impl Dependent {
    fn jet(&self, k: usize) -> Var {
        match *self {
            Dependent::Field(i) => Var::jet(i, k),
            Dependent::Cov(a, i) => Var::cov(a, i, k),
        }
    }
}

/// Euler operator: `delta e / delta v = sum_k (-Dx)^k (de/dv_(k))`.
pub fn euler(ctx: &JetCtx, e: &Expr, v: Dependent) -> Result<Expr> {
    let max_k = e.max_jet_order();
    // The alternating-sign total derivatives need headroom above the cap.
    let ctx = ctx.raised(2 * max_k + 2);
    let mut out = Expr::zero();
    for k in 0..=max_k {
        let de = e.partial(v.jet(k));
        if de.try_is_zero().unwrap_or(false) {
            continue;
        }
        let mut term = de;
        for _ in 0..k {
            term = total_derivative(&ctx, &term)?;
        }
        if k % 2 == 1 {
            term = term.neg();
        }
        out = out.add(&term);
    }
    Ok(out)
}

/// Variational gradient with respect to all `m` field variables.
pub fn variational_gradient(ctx: &JetCtx, density: &Expr) -> Result<Vec<Expr>> {
    (0..ctx.m)
        .map(|i| euler(ctx, density, Dependent::Field(i)))
        .collect()
}

/// Exactness test: `e` is a total x-derivative iff every Euler residual
/// (fields and test covectors alike) vanishes identically.
pub fn is_total_derivative(ctx: &JetCtx, e: &Expr) -> Result<bool> {
    for i in 0..ctx.m {
        if !euler(ctx, e, Dependent::Field(i))?.try_is_zero()? {
            return Ok(false);
        }
    }
    for slot in 0..3 {
        for i in 0..ctx.m {
            if !euler(ctx, e, Dependent::Cov(slot, i))?.try_is_zero()? {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Homogeneity degree with `deg u^i_(k) = k` (fields carry degree 0).
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum JetDegree {
    /// The zero expression, homogeneous of every degree.
    Zero,
    Homogeneous(i64),
}

/// Degree of a homogeneous differential expression, or `NotHomogeneous`.
/// Rational expressions are graded as numerator degree minus denominator
/// degree when both parts are themselves homogeneous.
pub fn homogeneous_degree(e: &Expr) -> Result<JetDegree> {
    if !e.is_rational() {
        return Err(Error::NotHomogeneous);
    }
    let r = e.rat();
    if r.is_zero() {
        return Ok(JetDegree::Zero);
    }
    let dn = poly_degree(r.num()).ok_or(Error::NotHomogeneous)?;
    let dd = poly_degree(r.den()).ok_or(Error::NotHomogeneous)?;
    Ok(JetDegree::Homogeneous(dn - dd))
}

/// True when homogeneous of exactly degree `l` (zero passes every degree).
pub fn has_degree(e: &Expr, l: i64) -> bool {
    match homogeneous_degree(e) {
        Ok(JetDegree::Zero) => true,
        Ok(JetDegree::Homogeneous(d)) => d == l,
        Err(_) => false,
    }
}

fn poly_degree(p: &crate::poly::Poly) -> Option<i64> {
    let mut deg = None;
    for (m, _) in p.terms() {
        let d = m.jet_degree();
        match deg {
            None => deg = Some(d),
            Some(prev) if prev != d => return None,
            _ => {}
        }
    }
    deg
}

/// Formal antiderivative: finds `F` with `Dx F = e`, for differential
/// polynomials in the jets with rational-in-`u` coefficients. Returns
/// `None` when `e` is not exact, or when the antiderivative leaves the
/// rational class (logarithmic cases).
pub fn anti_total_derivative(ctx: &JetCtx, e: &Expr) -> Result<Option<Expr>> {
    if !e.is_rational() {
        return Ok(None);
    }
    let ctx = ctx.raised(e.max_jet_order() + 2);
    let mut rem = e.clone();
    let mut acc = Expr::zero();
    loop {
        if rem.try_is_zero()? {
            return Ok(Some(acc));
        }
        if rem.rat().den().vars().iter().any(|v| v.jet_order() > 0) {
            // Not polynomial in the jets.
            return Ok(None);
        }
        let k = rem.max_jet_order();
        if k == 0 {
            // A nonzero function of u alone is never a total derivative.
            return Ok(None);
        }
        // Dx F is linear in its top-order jets with lower-order
        // coefficients; anything else is not exact.
        let coeffs: Vec<Expr> = (0..ctx.m)
            .map(|i| rem.partial(Var::jet(i, k)))
            .collect();
        for b in &coeffs {
            if b.max_jet_order() >= k {
                return Ok(None);
            }
        }
        let piece = if k >= 2 {
            scaling_homotopy(&coeffs, k - 1, ctx.m)?
        } else {
            match laurent_potential(&coeffs, ctx.m)? {
                Some(p) => p,
                None => return Ok(None),
            }
        };
        let dpiece = total_derivative(&ctx, &piece)?;
        rem = rem.sub(&dpiece);
        if rem.max_jet_order() >= k {
            // Top order did not drop: integrability failed.
            return Ok(None);
        }
        acc = acc.add(&piece);
    }
}

/// Line-integral reconstruction of `F` from `dF/dw_i = b_i` in the
/// variables `w_i = u^i_(k)`, `k >= 1`: `F = sum_i w_i Int_0^1 b_i(t w) dt`.
fn scaling_homotopy(b: &[Expr], k: usize, m: usize) -> Result<Expr> {
    let t = Expr::param("__homotopy_t");
    let mut total = Expr::zero();
    for (i, bi) in b.iter().enumerate() {
        if bi.try_is_zero()? {
            continue;
        }
        let scaled = bi.substitute(&|v| match v.as_jet() {
            Some((j, kk)) if kk == k && j < m => Some(Expr::jet(j, k).mul(&t)),
            _ => None,
        });
        let integrated = integrate_unit_interval(&scaled, "__homotopy_t")?;
        total = total.add(&Expr::jet(i, k).mul(&integrated));
    }
    Ok(total)
}

/// Integrates a polynomial-in-`name` expression over `[0, 1]`.
fn integrate_unit_interval(e: &Expr, name: &str) -> Result<Expr> {
    let v = Var::param(crate::sym::Symbol::new(name));
    let r = e.rat();
    if r.den().contains_var(v) {
        return Err(Error::Domain(
            "homotopy integrand must be polynomial in the scaling parameter".into(),
        ));
    }
    let mut acc = Expr::zero();
    for (deg, p) in r.num().coeffs_in(v) {
        let piece = Expr::from_rat(crate::rat::Rat::new(p, r.den().clone()))
            .scale(1, (deg as i64) + 1);
        acc = acc.add(&piece);
    }
    Ok(acc)
}

/// Potential `F(u)` with `dF/du^i = b_i`, for Laurent-style `b_i` whose
/// denominators are monomials. `None` for logarithmic or non-integrable
/// data.
fn laurent_potential(b: &[Expr], m: usize) -> Result<Option<Expr>> {
    let mut acc = Expr::zero();
    for i in 0..m {
        let target = b[i].sub(&acc.partial(Var::field(i)));
        if target.try_is_zero()? {
            continue;
        }
        // The residual may only involve u^i and later fields.
        for j in 0..i {
            if !target.partial(Var::field(j)).try_is_zero()? {
                return Ok(None);
            }
        }
        match laurent_integrate(&target, Var::field(i)) {
            Some(p) => acc = acc.add(&p),
            None => return Ok(None),
        }
    }
    // Check the reconstruction.
    for i in 0..m {
        if !acc.partial(Var::field(i)).sub(&b[i]).try_is_zero()? {
            return Ok(None);
        }
    }
    Ok(Some(acc))
}

/// Termwise integral in `v` when the denominator is a monomial; `None`
/// when an exponent -1 appears (would need a logarithm).
fn laurent_integrate(e: &Expr, v: Var) -> Option<Expr> {
    let r = e.rat();
    if r.den().num_terms() != 1 {
        return None;
    }
    let (dm, dc) = {
        let (m, c) = r.den().terms().next().unwrap();
        (m.clone(), c.clone())
    };
    let dexp = dm.exponent(v) as i64;
    let mut acc = Expr::zero();
    for (nm, nc) in r.num().terms() {
        let exp = nm.exponent(v) as i64 - dexp;
        if exp == -1 {
            return None;
        }
        // term = nc/dc * v^exp * (rest of nm)/(rest of dm)
        let mut t = Expr::rational(nc / &dc);
        for (w, we) in nm.vars() {
            if w != v {
                t = t.mul(&Expr::var(w).pow(we as i32));
            }
        }
        for (w, we) in dm.vars() {
            if w != v {
                t = t.div(&Expr::var(w).pow(we as i32));
            }
        }
        t = t.mul(&Expr::var(v).pow((exp + 1) as i32));
        acc = acc.add(&t.scale(1, exp + 1));
    }
    Some(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx2() -> JetCtx {
        JetCtx::new(2)
    }

    #[test]
    fn total_derivative_examples() {
        let ctx = ctx2();
        // u1*u2 -> u1x u2 + u1 u2x
        let e = Expr::field(0).mul(&Expr::field(1));
        let d = total_derivative(&ctx, &e).unwrap();
        let expect = Expr::jet(0, 1)
            .mul(&Expr::field(1))
            .add(&Expr::field(0).mul(&Expr::jet(1, 1)));
        assert_eq!(d, expect);
        // constant c1 -> 0
        let c = Expr::param("c1");
        assert!(total_derivative(&ctx, &c).unwrap().is_zero());
        // 1/u1 -> -u1x/u1^2
        let inv = Expr::one().div(&Expr::field(0));
        let d2 = total_derivative(&ctx, &inv).unwrap();
        let expect2 = Expr::jet(0, 1).neg().div(&Expr::field(0).pow(2));
        assert_eq!(d2, expect2);
    }

    #[test]
    fn jet_cap_fails_loudly() {
        let ctx = JetCtx::with_cap(1, 2);
        let e = Expr::jet(0, 2);
        assert!(matches!(
            total_derivative(&ctx, &e),
            Err(Error::JetOrderExceeded { .. })
        ));
    }

    #[test]
    fn euler_examples() {
        let ctx = ctx2();
        // euler((u1x)^2/2, u1) = -u1xx
        let e = Expr::jet(0, 1).pow(2).scale(1, 2);
        let d = euler(&ctx, &e, Dependent::Field(0)).unwrap();
        assert_eq!(d, Expr::jet(0, 2).neg());
        // euler(u2/u1, u1) = -u2/u1^2 ; euler(u2/u1, u2) = 1/u1
        let c2 = Expr::field(1).div(&Expr::field(0));
        assert_eq!(
            euler(&ctx, &c2, Dependent::Field(0)).unwrap(),
            Expr::field(1).neg().div(&Expr::field(0).pow(2))
        );
        assert_eq!(
            euler(&ctx, &c2, Dependent::Field(1)).unwrap(),
            Expr::one().div(&Expr::field(0))
        );
    }

    #[test]
    fn euler_kills_total_derivatives() {
        let ctx = ctx2();
        let f = Expr::field(0)
            .pow(2)
            .mul(&Expr::jet(1, 1))
            .add(&Expr::field(1).div(&Expr::field(0)));
        let df = total_derivative(&ctx, &f).unwrap();
        for i in 0..2 {
            assert!(euler(&ctx, &df, Dependent::Field(i))
                .unwrap()
                .is_zero());
        }
    }

    #[test]
    fn exactness_test() {
        let ctx = ctx2();
        let exact = Expr::jet(0, 1)
            .mul(&Expr::field(1))
            .add(&Expr::field(0).mul(&Expr::jet(1, 1)));
        assert!(is_total_derivative(&ctx, &exact).unwrap());
        let not_exact = Expr::jet(0, 1).mul(&Expr::field(1));
        assert!(!is_total_derivative(&ctx, &not_exact).unwrap());
        assert!(is_total_derivative(&ctx, &Expr::zero()).unwrap());
    }

    #[test]
    fn homogeneity_examples() {
        // u1x*u2x -> 2
        let e = Expr::jet(0, 1).mul(&Expr::jet(1, 1));
        assert!(has_degree(&e, 2));
        // u1 + u1x -> mixed
        let mixed = Expr::field(0).add(&Expr::jet(0, 1));
        assert!(homogeneous_degree(&mixed).is_err());
        // u2*u1xx/u1^3 -> 2 (only jets carry degree)
        let r = Expr::field(1)
            .mul(&Expr::jet(0, 2))
            .div(&Expr::field(0).pow(3));
        assert!(has_degree(&r, 2));
    }

    #[test]
    fn antiderivative_roundtrip() {
        let ctx = ctx2();
        let f = Expr::jet(0, 1)
            .mul(&Expr::jet(1, 1))
            .add(&Expr::field(0).pow(3));
        let df = total_derivative(&ctx, &f).unwrap();
        let back = anti_total_derivative(&ctx, &df).unwrap().unwrap();
        // F recovered up to a constant; compare derivatives.
        let dback = total_derivative(&ctx, &back).unwrap();
        assert_eq!(dback, df);
        // u2 alone is not exact.
        assert!(anti_total_derivative(&ctx, &Expr::field(1))
            .unwrap()
            .is_none());
    }
}
