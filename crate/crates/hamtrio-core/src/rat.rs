//! Rational functions in canonical form.
//!
//! A [`Rat`] is a gcd-reduced fraction of [`Poly`]s. The denominator is a
//! primitive integer polynomial with positive leading coefficient, so every
//! rational function has exactly one representation and equality is
//! structural.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::poly::{poly_gcd, Poly};

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Rat {
    num: Poly,
    den: Poly,
}

impl Rat {
    /// Builds `num/den` in canonical form. Panics when `den` is zero.
    pub fn new(mut num: Poly, mut den: Poly) -> Rat {
        assert!(!den.is_zero(), "zero denominator");
        if num.is_zero() {
            return Rat {
                num: Poly::zero(),
                den: Poly::one(),
            };
        }
        // Denominators stay small in this domain; cancel their factors out
        // of the numerator cheaply before the general reduction.
        if !den.is_constant() && den.num_terms() <= 128 {
            crate::poly::cancel_common_small_den(&mut num, &mut den);
        }
        let g = poly_gcd(&num, &den);
        let (num, den) = if g.is_one() {
            (num, den)
        } else {
            (
                num.div_exact(&g).expect("gcd divides"),
                den.div_exact(&g).expect("gcd divides"),
            )
        };
        let (c, den) = den.primitive();
        let num = num.mul_scalar(&(BigRational::one() / c));
        Rat { num, den }
    }

    pub fn from_poly(p: Poly) -> Rat {
        if p.is_zero() {
            return Rat::zero();
        }
        Rat {
            num: p,
            den: Poly::one(),
        }
    }

    pub fn zero() -> Rat {
        Rat {
            num: Poly::zero(),
            den: Poly::one(),
        }
    }

    pub fn one() -> Rat {
        Rat {
            num: Poly::one(),
            den: Poly::one(),
        }
    }

    pub fn num(&self) -> &Poly {
        &self.num
    }

    pub fn den(&self) -> &Poly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.num.is_one() && self.den.is_one()
    }

    pub fn as_constant(&self) -> Option<BigRational> {
        match (self.num.as_constant(), self.den.as_constant()) {
            (Some(n), Some(d)) => Some(n / d),
            _ => None,
        }
    }

    pub fn add(&self, other: &Rat) -> Rat {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        if self.den == other.den {
            return Rat::new(self.num.add(&other.num), self.den.clone());
        }
        let g = poly_gcd(&self.den, &other.den);
        if g.is_one() {
            let num = self
                .num
                .mul(&other.den)
                .add(&other.num.mul(&self.den));
            let den = self.den.mul(&other.den);
            // The cross terms are coprime to the product denominator except
            // through new cancellations in the sum; reduce to be safe.
            return Rat::new(num, den);
        }
        let da = self.den.div_exact(&g).expect("gcd divides");
        let db = other.den.div_exact(&g).expect("gcd divides");
        let num = self.num.mul(&db).add(&other.num.mul(&da));
        let den = self.den.mul(&db);
        Rat::new(num, den)
    }

    pub fn sub(&self, other: &Rat) -> Rat {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Rat {
        Rat {
            num: self.num.neg(),
            den: self.den.clone(),
        }
    }

    pub fn mul(&self, other: &Rat) -> Rat {
        if self.is_zero() || other.is_zero() {
            return Rat::zero();
        }
        // Cross-cancel before multiplying.
        let g1 = poly_gcd(&self.num, &other.den);
        let g2 = poly_gcd(&other.num, &self.den);
        let n1 = self.num.div_exact(&g1).expect("gcd divides");
        let d2 = other.den.div_exact(&g1).expect("gcd divides");
        let n2 = other.num.div_exact(&g2).expect("gcd divides");
        let d1 = self.den.div_exact(&g2).expect("gcd divides");
        let num = n1.mul(&n2);
        let den = d1.mul(&d2);
        let (c, den) = den.primitive();
        Rat {
            num: num.mul_scalar(&(BigRational::one() / c)),
            den,
        }
    }

    pub fn div(&self, other: &Rat) -> Rat {
        assert!(!other.is_zero(), "division by zero expression");
        self.mul(&other.inv())
    }

    pub fn inv(&self) -> Rat {
        assert!(!self.is_zero(), "inverse of zero expression");
        let (c, num) = self.num.primitive();
        let den = self.den.mul_scalar(&(BigRational::one() / c));
        Rat { num: den, den: num }
    }

    pub fn mul_scalar(&self, c: &BigRational) -> Rat {
        if c.is_zero() {
            return Rat::zero();
        }
        Rat {
            num: self.num.mul_scalar(c),
            den: self.den.clone(),
        }
    }

    pub fn pow(&self, n: i32) -> Rat {
        if n == 0 {
            return Rat::one();
        }
        let base = if n < 0 { self.inv() } else { self.clone() };
        let mut out = base.clone();
        for _ in 1..n.unsigned_abs() {
            out = out.mul(&base);
        }
        out
    }

    pub fn from_int(n: i64) -> Rat {
        Rat::from_poly(Poly::from_int(n))
    }

    pub fn from_rational(c: BigRational) -> Rat {
        Rat::from_poly(Poly::constant(c))
    }

    pub fn from_frac(n: i64, d: i64) -> Rat {
        Rat::from_rational(BigRational::new(BigInt::from(n), BigInt::from(d)))
    }
}

impl fmt::Debug for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_one() {
            write!(f, "{:?}", self.num)
        } else {
            write!(f, "({:?})/({:?})", self.num, self.den)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sym::Var;

    fn x() -> Rat {
        Rat::from_poly(Poly::var(Var::field(0)))
    }

    fn y() -> Rat {
        Rat::from_poly(Poly::var(Var::field(1)))
    }

    #[test]
    fn canonical_reduction() {
        // (x^2 - y^2)/(x + y) == x - y
        let r = x().mul(&x()).sub(&y().mul(&y())).div(&x().add(&y()));
        assert_eq!(r, x().sub(&y()));
    }

    #[test]
    fn canonical_den_normalization() {
        // 1/(-2x) and -1/(2x) must agree structurally.
        let a = Rat::one().div(&x().mul_scalar(&BigRational::from_integer((-2).into())));
        let b = Rat::from_frac(-1, 2).div(&x());
        assert_eq!(a, b);
    }

    #[test]
    fn field_axioms_spot_check() {
        let r = x().div(&y()).add(&y().div(&x()));
        // x/y + y/x = (x^2 + y^2)/(x y)
        let expect = x()
            .mul(&x())
            .add(&y().mul(&y()))
            .div(&x().mul(&y()));
        assert_eq!(r, expect);
        assert!(r.sub(&r).is_zero());
        assert!(r.div(&r).is_one());
    }

    #[test]
    fn canonical_is_idempotent() {
        let r = x().add(&y()).div(&x().sub(&y()));
        let again = Rat::new(r.num().clone(), r.den().clone());
        assert_eq!(r, again);
    }
}
