//! Exact arithmetic in the quadratic field Q(γ), γ = (1+√5)/2.
//!
//! Elements are stored as `a + bγ` with arbitrary-precision rational
//! coefficients. The only relation needed is γ² = γ + 1; signs are decided by
//! comparing a non-negative rational against γ through the minimal polynomial
//! X² − X − 1, so no floating point ever enters an exact path.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Floating value of γ, only for diagnostics and float-side formulas.
pub const GAMMA_F64: f64 = 1.618_033_988_749_895;

/// `a + bγ` with rational `a`, `b`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GoldenRational {
    a: BigRational,
    b: BigRational,
}

impl GoldenRational {
    pub fn new(a: BigRational, b: BigRational) -> Self {
        // Ratio keeps itself reduced with a positive denominator.
        GoldenRational { a, b }
    }

    pub fn from_ints(a: i64, b: i64) -> Self {
        GoldenRational::new(int(a), int(b))
    }

    /// The rational `num/den` (panics on a zero denominator, like `Ratio`).
    pub fn from_ratio(num: i64, den: i64) -> Self {
        GoldenRational::new(
            BigRational::new(BigInt::from(num), BigInt::from(den)),
            BigRational::zero(),
        )
    }

    pub fn rational(a: BigRational) -> Self {
        GoldenRational::new(a, BigRational::zero())
    }

    pub fn zero() -> Self {
        GoldenRational::from_ints(0, 0)
    }

    pub fn one() -> Self {
        GoldenRational::from_ints(1, 0)
    }

    pub fn gamma() -> Self {
        GoldenRational::from_ints(0, 1)
    }

    /// 1/γ = γ − 1.
    pub fn inv_gamma() -> Self {
        GoldenRational::from_ints(-1, 1)
    }

    /// The rational coefficient.
    pub fn a(&self) -> &BigRational {
        &self.a
    }

    /// The coefficient of γ.
    pub fn b(&self) -> &BigRational {
        &self.b
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    /// True when both coefficients are integers, i.e. the value lies in Z[γ].
    pub fn is_lattice(&self) -> bool {
        self.a.is_integer() && self.b.is_integer()
    }

    /// Galois conjugate: γ ↦ 1 − γ.
    pub fn conjugate(&self) -> Self {
        GoldenRational::new(&self.a + &self.b, -&self.b)
    }

    /// Field norm a² + ab − b².
    pub fn norm(&self) -> BigRational {
        &self.a * &self.a + &self.a * &self.b - &self.b * &self.b
    }

    pub fn recip(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let n = self.norm();
        let c = self.conjugate();
        Ok(GoldenRational::new(c.a / &n, c.b / &n))
    }

    pub fn checked_div(&self, rhs: &Self) -> Result<Self> {
        Ok(self * &rhs.recip()?)
    }

    pub fn scale(&self, k: &BigRational) -> Self {
        GoldenRational::new(&self.a * k, &self.b * k)
    }

    /// Exact sign of the real number `a + bγ`.
    pub fn signum(&self) -> Ordering {
        let pa = self.a.cmp(&BigRational::zero());
        let pb = self.b.cmp(&BigRational::zero());
        match (pa, pb) {
            (x, Ordering::Equal) => x,
            (Ordering::Equal, y) => y,
            (x, y) if x == y => x,
            // a < 0 < b: positive iff γ > -a/b.
            (Ordering::Less, Ordering::Greater) => {
                let t = -&self.a / &self.b;
                if rational_below_gamma(&t) {
                    Ordering::Greater
                } else {
                    Ordering::Less
                }
            }
            // b < 0 < a: positive iff a/|b| > γ.
            _ => {
                let t = &self.a / -&self.b;
                if rational_below_gamma(&t) {
                    Ordering::Less
                } else {
                    Ordering::Greater
                }
            }
        }
    }

    /// Exact floor, found by bracketing with rational bounds 8/5 < γ < 13/8 and
    /// a binary search over the candidate integers.
    pub fn floor(&self) -> BigInt {
        let lo_g = BigRational::new(BigInt::from(8), BigInt::from(5));
        let hi_g = BigRational::new(BigInt::from(13), BigInt::from(8));
        let (lo, hi) = if self.b.is_negative() {
            (&self.a + &self.b * &hi_g, &self.a + &self.b * &lo_g)
        } else {
            (&self.a + &self.b * &lo_g, &self.a + &self.b * &hi_g)
        };
        // Invariant: lo_i <= floor(x) <= hi_i.
        let mut lo_i = lo.floor().to_integer();
        let mut hi_i = hi.floor().to_integer();
        while lo_i < hi_i {
            let mid: BigInt = (&lo_i + &hi_i + BigInt::one()).div_floor(&BigInt::from(2));
            if self.cmp_int(&mid) == Ordering::Less {
                hi_i = mid - 1;
            } else {
                lo_i = mid;
            }
        }
        lo_i
    }

    fn cmp_int(&self, k: &BigInt) -> Ordering {
        (self - &GoldenRational::rational(BigRational::from_integer(k.clone()))).signum()
    }

    pub fn to_f64(&self) -> f64 {
        let a = self.a.to_f64().unwrap_or(f64::NAN);
        let b = self.b.to_f64().unwrap_or(f64::NAN);
        a + b * GAMMA_F64
    }
}

/// For rational t ≥ 0: t < γ ⟺ t² − t − 1 < 0.
fn rational_below_gamma(t: &BigRational) -> bool {
    debug_assert!(!t.is_negative());
    let q = t * t - t - BigRational::one();
    q.is_negative()
}

fn int(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

impl PartialOrd for GoldenRational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for GoldenRational {
    fn cmp(&self, other: &Self) -> Ordering {
        (self - other).signum()
    }
}

impl fmt::Display for GoldenRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + {}γ", self.a, self.b)
    }
}

macro_rules! forward_binop {
    ($tr:ident, $m:ident, $body:expr) => {
        impl<'a> $tr<&'a GoldenRational> for &'a GoldenRational {
            type Output = GoldenRational;
            fn $m(self, rhs: &'a GoldenRational) -> GoldenRational {
                let f: fn(&GoldenRational, &GoldenRational) -> GoldenRational = $body;
                f(self, rhs)
            }
        }
        impl $tr<GoldenRational> for GoldenRational {
            type Output = GoldenRational;
            fn $m(self, rhs: GoldenRational) -> GoldenRational {
                (&self).$m(&rhs)
            }
        }
        impl<'a> $tr<&'a GoldenRational> for GoldenRational {
            type Output = GoldenRational;
            fn $m(self, rhs: &'a GoldenRational) -> GoldenRational {
                (&self).$m(rhs)
            }
        }
    };
}

forward_binop!(Add, add, |x, y| GoldenRational::new(&x.a + &y.a, &x.b + &y.b));
forward_binop!(Sub, sub, |x, y| GoldenRational::new(&x.a - &y.a, &x.b - &y.b));
// (a+bγ)(c+dγ) = (ac+bd) + (ad+bc+bd)γ
forward_binop!(Mul, mul, |x, y| {
    let bd = &x.b * &y.b;
    GoldenRational::new(&x.a * &y.a + &bd, &x.a * &y.b + &x.b * &y.a + bd)
});

impl Neg for GoldenRational {
    type Output = GoldenRational;
    fn neg(self) -> GoldenRational {
        GoldenRational::new(-self.a, -self.b)
    }
}

impl Neg for &GoldenRational {
    type Output = GoldenRational;
    fn neg(self) -> GoldenRational {
        GoldenRational::new(-&self.a, -&self.b)
    }
}

/// Binary field operation selector, mirroring the four field operations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

pub fn arith(x: &GoldenRational, y: &GoldenRational, op: ArithOp) -> Result<GoldenRational> {
    match op {
        ArithOp::Add => Ok(x + y),
        ArithOp::Sub => Ok(x - y),
        ArithOp::Mul => Ok(x * y),
        ArithOp::Div => x.checked_div(y),
    }
}

/// Fibonacci numbers indexed from −2: F₋₂ = 1, F₋₁ = 0, F₀ = F₁ = 1.
pub fn fib(n: i64) -> Result<u64> {
    if n < -2 {
        return Err(Error::FibonacciDomain(n));
    }
    let (mut prev, mut cur) = (1u64, 0u64); // F₋₂, F₋₁
    if n == -2 {
        return Ok(1);
    }
    for _ in -1..n {
        let next = prev.checked_add(cur).ok_or(Error::FibonacciOverflow(n))?;
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// Panicking shorthand for indices known to be in range.
pub(crate) fn fib_u(n: usize) -> usize {
    fib(n as i64).expect("Fibonacci index in range") as usize
}

/// Which one-sided limit a circle coordinate's coding follows at the
/// partition points. `Right` codes with arcs `[a, b)`, `Left` with `(a, b]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum Side {
    #[default]
    Right,
    Left,
}

impl Side {
    pub fn flip(self) -> Side {
        match self {
            Side::Right => Side::Left,
            Side::Left => Side::Right,
        }
    }
}

/// A point of the circle R/Z, stored as its representative in `[0, 1)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CirclePoint(GoldenRational);

impl CirclePoint {
    pub fn zero() -> Self {
        CirclePoint(GoldenRational::zero())
    }

    pub fn value(&self) -> &GoldenRational {
        &self.0
    }

    pub fn into_value(self) -> GoldenRational {
        self.0
    }

    /// Rotation by −k·γ, i.e. `rotate(self, -k)`.
    pub fn rotate_back(&self, k: i64) -> Self {
        rotate(self, -k)
    }

    /// One step of T_γ; cheaper than `rotate(self, 1)` since it only needs a
    /// single comparison to reduce.
    pub fn step(&self) -> Self {
        // t + γ ≡ t + (γ − 1) with γ − 1 ∈ (0, 1).
        let t = &self.0 + &GoldenRational::inv_gamma();
        if t >= GoldenRational::one() {
            CirclePoint(t - GoldenRational::one())
        } else {
            CirclePoint(t)
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64()
    }
}

impl fmt::Display for CirclePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// `x − ⌊x⌋`, computed exactly.
pub fn mod1(x: &GoldenRational) -> CirclePoint {
    let k = x.floor();
    CirclePoint(x - &GoldenRational::rational(BigRational::from_integer(k)))
}

/// `T_γ^k(t) = t + kγ (mod 1)`.
pub fn rotate(t: &CirclePoint, k: i64) -> CirclePoint {
    mod1(&(&t.0 + &GoldenRational::from_ints(0, k)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn g(a: i64, b: i64) -> GoldenRational {
        GoldenRational::from_ints(a, b)
    }

    #[test]
    fn defining_relations() {
        let gamma = GoldenRational::gamma();
        assert_eq!(&gamma * &gamma, g(1, 1));
        assert_eq!(GoldenRational::one().checked_div(&gamma).unwrap(), g(-1, 1));
        assert_eq!(g(1, 1) + g(2, -1), g(3, 0));
        assert_eq!(gamma.recip().unwrap(), GoldenRational::inv_gamma());
    }

    #[test]
    fn arith_dispatch_and_division_by_zero() {
        let x = g(2, 3);
        let y = g(-1, 1);
        assert_eq!(arith(&x, &y, ArithOp::Add).unwrap(), g(1, 4));
        assert_eq!(arith(&x, &y, ArithOp::Sub).unwrap(), g(3, 2));
        let q = arith(&x, &y, ArithOp::Div).unwrap();
        assert_eq!(arith(&q, &y, ArithOp::Mul).unwrap(), x);
        assert_eq!(
            arith(&x, &GoldenRational::zero(), ArithOp::Div),
            Err(Error::DivisionByZero)
        );
    }

    #[test]
    fn comparisons() {
        let gamma = GoldenRational::gamma();
        assert_eq!(gamma.cmp(&GoldenRational::from_ratio(3, 2)), Ordering::Greater);
        assert_eq!(gamma.cmp(&gamma), Ordering::Equal);
        let inv_sq = (&gamma * &gamma).recip().unwrap();
        assert_eq!(g(2, -1).cmp(&inv_sq), Ordering::Equal);
        // 13/8 > γ > 8/5
        assert_eq!(gamma.cmp(&GoldenRational::from_ratio(13, 8)), Ordering::Less);
        assert_eq!(gamma.cmp(&GoldenRational::from_ratio(8, 5)), Ordering::Greater);
    }

    #[test]
    fn fibonacci_indexing() {
        assert_eq!(fib(-2), Ok(1));
        assert_eq!(fib(-1), Ok(0));
        assert_eq!(fib(0), Ok(1));
        assert_eq!(fib(1), Ok(1));
        assert_eq!(fib(2), Ok(2));
        assert_eq!(fib(10), Ok(89));
        assert_eq!(fib(-3), Err(Error::FibonacciDomain(-3)));
        assert!(fib(90).is_ok());
        assert_eq!(fib(200), Err(Error::FibonacciOverflow(200)));
    }

    #[test]
    fn binet_consistency() {
        let s5 = 5f64.sqrt();
        for n in 0..=40i64 {
            let binet = (GAMMA_F64.powi(n as i32 + 1) - (-1.0 / GAMMA_F64).powi(n as i32 + 1)) / s5;
            assert!((fib(n).unwrap() as f64 - binet).abs() < 1e-6, "n={n}");
        }
    }

    #[test]
    fn mod1_and_rotation() {
        assert_eq!(mod1(&g(0, 2)), CirclePoint(g(-3, 2)));
        assert_eq!(mod1(&GoldenRational::inv_gamma()), CirclePoint(g(-1, 1)));
        assert_eq!(mod1(&GoldenRational::gamma()), CirclePoint(g(-1, 1)));
        assert_eq!(mod1(&g(-5, 0)), CirclePoint::zero());
        assert_eq!(rotate(&CirclePoint::zero(), 1), CirclePoint(g(-1, 1)));
        assert_eq!(rotate(&CirclePoint(g(-3, 2)), 1), CirclePoint(g(-4, 3)));
        let t = mod1(&GoldenRational::from_ratio(2, 7));
        assert_eq!(rotate(&t, 0), t);
        assert_eq!(t.step(), rotate(&t, 1));
    }

    #[test]
    fn floor_near_integers() {
        // F₂₀/F₁₉ approximates γ extremely well; the float floor of
        // F₁₉·γ − F₂₀ is unreliable near 0, the exact one is not.
        let f19 = fib(19).unwrap() as i64;
        let f20 = fib(20).unwrap() as i64;
        let x = g(-f20, f19);
        let expected = if x.signum() == Ordering::Less { -1 } else { 0 };
        assert_eq!(x.floor(), BigInt::from(expected));
    }

    fn small_golden() -> impl Strategy<Value = GoldenRational> {
        (-500i64..500, 1i64..60, -500i64..500, 1i64..60).prop_map(|(p, q, r, s)| {
            GoldenRational::new(
                BigRational::new(p.into(), q.into()),
                BigRational::new(r.into(), s.into()),
            )
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn order_matches_real_embedding(x in small_golden(), y in small_golden()) {
            let fx = x.to_f64();
            let fy = y.to_f64();
            if (fx - fy).abs() > 1e-9 {
                prop_assert_eq!(x.cmp(&y), fx.partial_cmp(&fy).unwrap());
            }
            prop_assert_eq!(x.cmp(&y), y.cmp(&x).reverse());
        }

        #[test]
        fn floor_brackets(x in small_golden()) {
            let k = GoldenRational::rational(BigRational::from_integer(x.floor()));
            prop_assert!(k <= x);
            prop_assert!(x < k + GoldenRational::one());
        }

        #[test]
        fn rotations_compose(p in -50i64..50, q in 1i64..40, k in -30i64..30, m in -30i64..30) {
            let t = mod1(&GoldenRational::from_ratio(p, q));
            prop_assert_eq!(rotate(&rotate(&t, k), m), rotate(&t, k + m));
        }

        #[test]
        fn inverse_is_inverse(x in small_golden()) {
            prop_assume!(!x.is_zero());
            prop_assert_eq!(&x * &x.recip().unwrap(), GoldenRational::one());
        }
    }
}
