//! Potentials of the form g(x)/n^α with d(x, K) = 2^{-n}, the
//! renormalization operator
//!
//!   (RV)(x) = V(σHx) + V(Hx) on [0],   (RV)(x) = V(Hx) on [1],
//!
//! its iterates, the fixed point Ṽ and integration against μ_K.

use num_rational::BigRational;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fibword::{cylinder_interval, factors, substitute_prefix, Symbol, Word};
use crate::golden::{fib_u, GoldenRational, GAMMA_F64};
use crate::metric::{dist_to_k, kappa_tilde_pair, n_star, DistanceResult, Point};
use crate::par;

/// Density g of a potential, locally constant at a finite depth.
#[derive(Clone, Debug, PartialEq)]
pub enum DensitySpec {
    Constant(f64),
    /// Values for all 2^depth words, indexed with the first symbol as the
    /// most significant bit.
    DepthTable { depth: usize, table: Vec<f64> },
    /// γ²/(2γ−1) on [0] and γ/(2γ−1) on [1]: the density of Ṽ.
    Tilde,
}

impl DensitySpec {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        match self {
            DensitySpec::Constant(c) if !positive(*c) => Err(Error::InvalidPotential(format!(
                "constant density must be positive, got {c}"
            ))),
            DensitySpec::DepthTable { depth, table } => {
                if *depth > 20 {
                    return Err(Error::InvalidPotential(format!("depth {depth} too large")));
                }
                if table.len() != 1 << depth {
                    return Err(Error::InvalidPotential(format!(
                        "depth {depth} needs {} values, got {}",
                        1usize << depth,
                        table.len()
                    )));
                }
                if let Some(v) = table.iter().find(|v| !positive(**v)) {
                    return Err(Error::InvalidPotential(format!("table value {v} is not positive")));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Number of leading symbols the density reads.
    pub fn depth(&self) -> usize {
        match self {
            DensitySpec::Constant(_) => 0,
            DensitySpec::DepthTable { depth, .. } => *depth,
            DensitySpec::Tilde => 1,
        }
    }

    /// g on the cylinder of `head`, which must have at least `depth` symbols.
    pub fn value(&self, head: &[Symbol]) -> f64 {
        match self {
            DensitySpec::Constant(c) => *c,
            DensitySpec::DepthTable { depth, table } => {
                let idx = head[..*depth]
                    .iter()
                    .fold(0usize, |acc, &s| (acc << 1) | s as usize);
                table[idx]
            }
            DensitySpec::Tilde => {
                let root5 = 2.0 * GAMMA_F64 - 1.0;
                if head[0] == 0 {
                    GAMMA_F64 * GAMMA_F64 / root5
                } else {
                    GAMMA_F64 / root5
                }
            }
        }
    }

    pub fn eval(&self, x: &Point) -> f64 {
        self.value(x.take(self.depth()).symbols())
    }

    /// g on the cylinder of `w` as an exact element of Q(γ).
    fn exact_value(&self, w: &Word) -> GoldenRational {
        let from_f64 = |v: f64| {
            GoldenRational::rational(BigRational::from_float(v).expect("finite density value"))
        };
        match self {
            DensitySpec::Tilde => {
                let root5 = GoldenRational::from_ints(-1, 2);
                let num = if w.symbols()[0] == 0 {
                    GoldenRational::from_ints(1, 1)
                } else {
                    GoldenRational::gamma()
                };
                num.checked_div(&root5).expect("√5 is nonzero")
            }
            _ => from_f64(self.value(w.symbols())),
        }
    }
}

/// V(x) = g(x)/n^α where d(x, K) = 2^{-n}, and V = 0 on K. The correction
/// term of the class X_α is taken to be zero.
#[derive(Clone, Debug, PartialEq)]
pub struct Potential {
    alpha: f64,
    density: DensitySpec,
}

impl Potential {
    pub fn new(alpha: f64, density: DensitySpec) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::InvalidPotential(format!("alpha must be positive, got {alpha}")));
        }
        density.validate()?;
        Ok(Potential { alpha, density })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn density(&self) -> &DensitySpec {
        &self.density
    }
}

/// Something that can be evaluated at a point; the argument of R.
pub trait PotentialFn: Sync {
    fn eval(&self, x: &Point, cap: usize) -> Result<f64>;
}

impl PotentialFn for Potential {
    fn eval(&self, x: &Point, cap: usize) -> Result<f64> {
        eval_potential(self, x, cap)
    }
}

/// The fixed point Ṽ as an evaluator.
#[derive(Clone, Copy, Debug, Default)]
pub struct TildeV;

impl PotentialFn for TildeV {
    fn eval(&self, x: &Point, cap: usize) -> Result<f64> {
        Ok(tilde_v(x, cap)?.value())
    }
}

impl<F> PotentialFn for F
where
    F: Fn(&Point, usize) -> Result<f64> + Sync,
{
    fn eval(&self, x: &Point, cap: usize) -> Result<f64> {
        self(x, cap)
    }
}

pub fn eval_potential(v: &Potential, x: &Point, cap: usize) -> Result<f64> {
    match dist_to_k(x, cap) {
        DistanceResult::Infinite => Ok(0.0),
        DistanceResult::Finite(n) => Ok(v.density.eval(x) / (n as f64).powf(v.alpha)),
        DistanceResult::CapExhausted(cap) => Err(Error::CapExhausted { cap }),
    }
}

/// (RV)(x).
pub fn apply_r<V: PotentialFn + ?Sized>(v: &V, x: &Point, cap: usize) -> Result<f64> {
    let hx = x.substitute();
    let mut s = v.eval(&hx, cap)?;
    if x.first_symbol() == 0 {
        s += v.eval(&hx.shift(), cap)?;
    }
    Ok(s)
}

/// (R^n V)(x) by n nested applications of R, each evaluation computing its
/// own distance to K.
pub fn iterate_r_direct<V: PotentialFn + ?Sized>(v: &V, n: usize, x: &Point, cap: usize) -> Result<f64> {
    if n == 0 {
        return v.eval(x, cap);
    }
    let hx = x.substitute();
    let mut s = iterate_r_direct(v, n - 1, &hx, cap)?;
    if x.first_symbol() == 0 {
        s += iterate_r_direct(v, n - 1, &hx.shift(), cap)?;
    }
    Ok(s)
}

/// (R^n V)(x) as the ergodic sum Σ_{j<F_{n*}} V(σ^j H^n x), with the
/// distance of σ^j H^n x read off as N − j, N = |H^n(w)| + F_{n+2} − 2 for
/// the longest factor prefix w of x.
pub fn iterate_r_closed(v: &Potential, n: usize, x: &Point, cap: usize) -> Result<f64> {
    let (k0, k1) = match kappa_tilde_pair(x, cap) {
        Ok(k) => k,
        Err(Error::UndefinedOnK) => return Ok(0.0),
        Err(e) => return Err(e),
    };
    let terms = fib_u(n_star(x.first_symbol(), n));
    let big_n = fib_u(n + 1) * k0 + fib_u(n) * k1 + fib_u(n + 2) - 2;
    let depth = v.density.depth();
    let len = terms + depth;
    // Every symbol expands to at least F_n symbols under H^n.
    let hn = substitute_prefix(&x.take(len / fib_u(n) + 1), n, len);
    let s = hn.symbols();
    Ok((0..terms)
        .map(|j| v.density.value(&s[j..j + depth]) / ((big_n - j) as f64).powf(v.alpha))
        .sum())
}

/// Value of a function that is only defined off K and extended by zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Evaluation {
    OffK(f64),
    OnK,
}

impl Evaluation {
    pub fn value(self) -> f64 {
        match self {
            Evaluation::OffK(v) => v,
            Evaluation::OnK => 0.0,
        }
    }
}

fn tilde_args(k0: f64, k1: f64, first: Symbol) -> f64 {
    let g = GAMMA_F64;
    let base = if first == 0 {
        k0 + k1 / g + g
    } else {
        g * k0 + k1 + g * g
    };
    // log(b/(b−1)) without cancellation for large b.
    -(-1.0 / base).ln_1p()
}

/// Ṽ(x).
pub fn tilde_v(x: &Point, cap: usize) -> Result<Evaluation> {
    match kappa_tilde_pair(x, cap) {
        Ok((k0, k1)) => Ok(Evaluation::OffK(tilde_args(k0 as f64, k1 as f64, x.first_symbol()))),
        Err(Error::UndefinedOnK) => Ok(Evaluation::OnK),
        Err(e) => Err(e),
    }
}

/// Argument of the logarithm in Ṽ for the given counters, in Q(γ).
fn tilde_fraction(k0: u64, k1: u64, first: Symbol) -> GoldenRational {
    let k0 = GoldenRational::from_ints(k0 as i64, 0);
    let k1 = GoldenRational::from_ints(k1 as i64, 0);
    let g = GoldenRational::gamma();
    let base = if first == 0 {
        &k0 + &(&k1 * &GoldenRational::inv_gamma()) + g
    } else {
        &(&g * &k0) + &k1 + &g * &g
    };
    let den = &base - &GoldenRational::one();
    base.checked_div(&den).expect("denominator exceeds γ − 1 > 0")
}

/// Exact check that one application of R maps Ṽ to itself at a point with
/// counters (κ̃₀, κ̃₁) = (n, m): the logarithms' arguments multiply out.
pub fn fixed_point_check_exact(kappa0: u64, kappa1: u64, first: Symbol) -> bool {
    let (n, m) = (kappa0, kappa1);
    let target = tilde_fraction(n, m, first);
    // H(x) ∈ [0] with counters (n+m+1, n); on [0] also σH(x) ∈ [1] with (n+m, n).
    let image = tilde_fraction(n + m + 1, n, 0);
    let image = if first == 0 {
        &image * &tilde_fraction(n + m, n, 1)
    } else {
        image
    };
    image == target
}

/// μ_K([w]) as the exact length of the coding arc.
pub fn mu_k_cylinder(w: &Word) -> GoldenRational {
    cylinder_interval(w).length()
}

/// ∫ g dμ_K, exact for densities with exactly representable values.
pub fn integrate_density(g: &DensitySpec) -> GoldenRational {
    factors(g.depth())
        .iter()
        .map(|w| &g.exact_value(w) * &mu_k_cylinder(w))
        .fold(GoldenRational::zero(), |acc, t| acc + t)
}

/// (1/F)·Σ_{j=0}^{F} 1/(X − j/F), a Riemann sum for log(X/(X−1)).
pub fn toeplitz_limit_check(x: f64, f: u64) -> f64 {
    let ff = f as f64;
    (0..=f).map(|j| 1.0 / (x - j as f64 / ff)).sum::<f64>() / ff
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub k: usize,
    pub value: f64,
    /// ∫g dμ_K · Ṽ(x); only meaningful for α = 1.
    pub target: Option<f64>,
    pub ratio: Option<f64>,
}

/// R^k V(x) for k = 0..=k_max, with the α = 1 limit as target.
pub fn convergence_experiment(
    v: &Potential,
    x: &Point,
    k_max: usize,
    cap: usize,
) -> Result<Vec<ConvergenceRow>> {
    if k_max > 40 {
        return Err(Error::InvalidArgument(format!("k_max {k_max} exceeds 40")));
    }
    let target = if v.alpha == 1.0 {
        Some(integrate_density(&v.density).to_f64() * tilde_v(x, cap)?.value())
    } else {
        None
    };
    let ks: Vec<usize> = (0..=k_max).collect();
    par::map_ordered(&ks, |&k| {
        let value = iterate_r_closed(v, k, x, cap)?;
        Ok(ConvergenceRow {
            k,
            value,
            target,
            ratio: target.filter(|t| *t != 0.0).map(|t| value / t),
        })
    })
    .into_iter()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fibword::w;
    use crate::metric::{Tail, DEFAULT_CAP};
    use proptest::prelude::*;

    fn p(s: &str) -> Point {
        s.parse().unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn potential_values() {
        let v = Potential::new(1.0, DensitySpec::Constant(1.0)).unwrap();
        // 0100 is a factor, 01001 too; 010011 is not.
        let x = p("01001:per=1");
        assert_eq!(dist_to_k(&x, 100), DistanceResult::Finite(5));
        assert!(close(eval_potential(&v, &x, 100).unwrap(), 0.2, 1e-15));
        assert_eq!(eval_potential(&v, &Point::rho(), 100).unwrap(), 0.0);
        let t = Potential::new(1.0, DensitySpec::Tilde).unwrap();
        let x = Point::with_prefix(crate::fibword::rho_prefix(10), Tail::Periodic(w("1")));
        let n = dist_to_k(&x, 100).finite().unwrap();
        let g0 = GAMMA_F64 * GAMMA_F64 / (2.0 * GAMMA_F64 - 1.0);
        assert!(close(eval_potential(&t, &x, 100).unwrap(), g0 / n as f64, 1e-15));
    }

    #[test]
    fn invalid_potentials() {
        assert!(Potential::new(0.0, DensitySpec::Constant(1.0)).is_err());
        assert!(Potential::new(1.0, DensitySpec::Constant(-1.0)).is_err());
        let bad = DensitySpec::DepthTable {
            depth: 2,
            table: vec![1.0; 3],
        };
        assert!(Potential::new(1.0, bad).is_err());
    }

    #[test]
    fn depth_table_indexing() {
        let g = DensitySpec::DepthTable {
            depth: 2,
            table: vec![1.0, 2.0, 3.0, 4.0],
        };
        assert_eq!(g.value(&[0, 0]), 1.0);
        assert_eq!(g.value(&[0, 1]), 2.0);
        assert_eq!(g.value(&[1, 0]), 3.0);
    }

    #[test]
    fn r_on_one_cylinder_is_composition() {
        let v = Potential::new(1.0, DensitySpec::Constant(1.0)).unwrap();
        let x = p("1101:rho");
        let direct = apply_r(&v, &x, DEFAULT_CAP).unwrap();
        assert_eq!(direct, eval_potential(&v, &x.substitute(), DEFAULT_CAP).unwrap());
        let zero = |_: &Point, _: usize| Ok(0.0);
        assert_eq!(apply_r(&zero, &p("0110:per=1"), DEFAULT_CAP).unwrap(), 0.0);
    }

    #[test]
    fn tilde_is_fixed_numerically() {
        for s in ["011:rho", "0100110:per=0", "0010:k=1/3", "01001010011:rho"] {
            let x = p(s);
            let a = apply_r(&TildeV, &x, DEFAULT_CAP).unwrap();
            let b = tilde_v(&x, DEFAULT_CAP).unwrap().value();
            assert!(close(a, b, 1e-13), "{s}: {a} vs {b}");
        }
    }

    #[test]
    fn tilde_examples() {
        // κ̃ = (0, 0) is impossible on actual points; check the formula directly.
        assert!(close(tilde_args(0.0, 0.0, 0), (GAMMA_F64 * GAMMA_F64).ln(), 1e-14));
        let g2 = GAMMA_F64 * GAMMA_F64;
        assert!(close(tilde_args(0.0, 1.0, 1), ((1.0 + g2) / g2).ln(), 1e-14));
        assert_eq!(tilde_v(&Point::rho(), 100).unwrap(), Evaluation::OnK);
        // "11…": the longest factor prefix is "1".
        let v = tilde_v(&p("11:rho"), 100).unwrap().value();
        assert!(close(v, ((1.0 + g2) / g2).ln(), 1e-14));
    }

    #[test]
    fn fixed_point_exact_examples() {
        assert!(fixed_point_check_exact(0, 0, 0));
        assert!(fixed_point_check_exact(5, 3, 1));
        assert!(!{
            // Perturbed counters break the identity.
            let t = tilde_fraction(5, 3, 1);
            t == tilde_fraction(5 + 3 + 1, 5, 1)
        });
    }

    #[test]
    fn closed_form_examples() {
        let v = Potential::new(1.0, DensitySpec::Tilde).unwrap();
        let x = p("0110:per=01");
        assert!(close(
            iterate_r_closed(&v, 0, &x, DEFAULT_CAP).unwrap(),
            eval_potential(&v, &x, DEFAULT_CAP).unwrap(),
            1e-15
        ));
        let y = p("1001:per=1");
        assert!(close(
            iterate_r_closed(&v, 1, &y, DEFAULT_CAP).unwrap(),
            eval_potential(&v, &y.substitute(), DEFAULT_CAP).unwrap(),
            1e-15
        ));
        assert_eq!(iterate_r_closed(&v, 5, &Point::rho(), DEFAULT_CAP).unwrap(), 0.0);
    }

    #[test]
    fn measures() {
        assert_eq!(mu_k_cylinder(&w("0")), GoldenRational::inv_gamma());
        assert_eq!(mu_k_cylinder(&w("1")), GoldenRational::from_ints(2, -1));
        assert!(mu_k_cylinder(&w("11")).is_zero());
        for m in 0..=12 {
            let total = factors(m)
                .iter()
                .fold(GoldenRational::zero(), |acc, w| acc + mu_k_cylinder(w));
            assert_eq!(total, GoldenRational::one(), "m = {m}");
        }
    }

    #[test]
    fn integrals() {
        assert_eq!(integrate_density(&DensitySpec::Tilde), GoldenRational::one());
        assert_eq!(
            integrate_density(&DensitySpec::Constant(2.5)),
            GoldenRational::from_ratio(5, 2)
        );
        let ones = DensitySpec::DepthTable {
            depth: 2,
            table: vec![1.0; 4],
        };
        assert_eq!(integrate_density(&ones), GoldenRational::one());
    }

    #[test]
    fn toeplitz_sums() {
        assert!(close(toeplitz_limit_check(2.0, 1_000_000), 2f64.ln(), 1e-5));
        let g2 = GAMMA_F64 * GAMMA_F64;
        assert!(close(toeplitz_limit_check(g2, 1_000_000), (g2 / (g2 - 1.0)).ln(), 1e-5));
        assert!(close(toeplitz_limit_check(3.0, 1), 1.0 / 3.0 + 0.5, 1e-15));
        let err = |f| (toeplitz_limit_check(2.0, f) - 2f64.ln()).abs();
        let (e3, e4, e5) = (err(1_000), err(10_000), err(100_000));
        assert!(e4 < e3 / 5.0 && e5 < e4 / 5.0, "{e3} {e4} {e5}");
    }

    #[test]
    fn tilde_density_along_rho_prefixes() {
        // n·Ṽ(x) = g(x) + O(1/n) with constant about 1.53, so the 10⁻² band is
        // entered around n = 155.
        for len in [100usize, 150, 400, 1000, 3000] {
            for first in [0u8, 1] {
                let start = (1..).find(|&s| crate::fibword::rho_prefix(s + 1).symbols()[s] == first).unwrap();
                let pre = crate::fibword::rho_prefix(start + len).slice(start, start + len);
                let x = Point::with_prefix(pre, Tail::Periodic(w("11")));
                let n = dist_to_k(&x, DEFAULT_CAP).finite().unwrap();
                assert!(n >= len);
                let dens = n as f64 * tilde_v(&x, DEFAULT_CAP).unwrap().value();
                let expect = DensitySpec::Tilde.value(&[first]);
                assert!(close(dens, expect, 2.0 / n as f64), "n {n}: {dens} vs {expect}");
                if n >= 200 {
                    assert!(close(dens, expect, 1e-2));
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn closed_matches_direct(
            prefix in proptest::collection::vec(0u8..2, 1..10),
            per in proptest::collection::vec(0u8..2, 1..4),
            n in 0usize..6,
        ) {
            let x = Point::with_prefix(Word::new(prefix).unwrap(), Tail::Periodic(Word::new(per).unwrap()));
            prop_assume!(dist_to_k(&x, DEFAULT_CAP) != DistanceResult::Infinite);
            let v = Potential::new(1.0, DensitySpec::Tilde).unwrap();
            let a = iterate_r_closed(&v, n, &x, DEFAULT_CAP).unwrap();
            let b = iterate_r_direct(&v, n, &x, DEFAULT_CAP).unwrap();
            prop_assert!((a - b).abs() <= 1e-10, "{} vs {}", a, b);
        }
    }
}
