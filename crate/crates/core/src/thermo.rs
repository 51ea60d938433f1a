//! Pressure of potentials vanishing on K, computed through the first-return
//! map to the cylinder [11]. Since 11 never occurs in ρ, a return word
//! determines the Birkhoff sum of the potential along the excursion, and the
//! induced transfer operator reduces to the scalar series
//!
//!   λ(Z, β) = Σ_words exp(β·S_nφ(word) − n·Z).
//!
//! The pressure P(β) solves λ(P(β), β) = 1 when λ(0, β) > 1 and is 0
//! otherwise.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fibword::{FactorSet, Symbol, Word};
use crate::metric::{dist_to_k, DistanceResult, Point};
use crate::par::{self, Mode};
use crate::renorm::DensitySpec;

/// Largest supported return time; return words must fit in 64 bits.
pub const MAX_RETURN_TIME: usize = 60;

const SPLIT_DEPTH: usize = 12;
const TAIL_FIT_BUCKETS: usize = 6;
const MAX_BISECTION: usize = 200;

/// φ(x) = −log((m+1)/m) where d(x, K) = 2^{-m}; 0 on K.
pub fn phi_log(x: &Point, cap: usize) -> Result<f64> {
    match dist_to_k(x, cap) {
        DistanceResult::Finite(m) => Ok(log_step(m)),
        DistanceResult::Infinite => Ok(0.0),
        DistanceResult::CapExhausted(cap) => Err(Error::CapExhausted { cap }),
    }
}

#[inline]
fn log_step(m: usize) -> f64 {
    -(1.0 / m as f64).ln_1p()
}

/// The potential summed along excursions: φ itself, or −V for V = g/m.
#[derive(Clone, Debug, PartialEq)]
pub enum StepPotential {
    Log,
    /// −g(x)/m with a density of depth at most 3.
    Density(DensitySpec),
}

impl StepPotential {
    pub fn validate(&self) -> Result<()> {
        if let StepPotential::Density(g) = self {
            g.validate()?;
            if g.depth() > 3 {
                return Err(Error::InvalidPotential(format!(
                    "density depth {} exceeds the 3 symbols a return word fixes",
                    g.depth()
                )));
            }
        }
        Ok(())
    }

    /// Value at a point with distance index `m` whose first symbols are the
    /// low bits of `head`.
    #[inline]
    fn term(&self, m: usize, head: u64) -> f64 {
        match self {
            StepPotential::Log => log_step(m),
            StepPotential::Density(g) => {
                let s = [head as u8 & 1, (head >> 1) as u8 & 1, (head >> 2) as u8 & 1];
                -g.value(&s) / m as f64
            }
        }
    }
}

/// y₀…y_{n+1} with y₀y₁ = y_ny_{n+1} = 11 and no other occurrence of 11.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReturnWord {
    pub word: Word,
    pub n: usize,
    pub birkhoff: f64,
}

/// Return time of a first-return word, or why it is not one.
pub fn validate_return(word: &Word) -> Result<usize> {
    let s = word.symbols();
    let bad = |reason| Error::InvalidReturnWord {
        word: word.to_string(),
        reason,
    };
    if s.len() < 3 {
        return Err(bad("too short"));
    }
    let n = s.len() - 2;
    if s[0] != 1 || s[1] != 1 {
        return Err(bad("does not start with 11"));
    }
    if s[n] != 1 || s[n + 1] != 1 {
        return Err(bad("does not end with 11"));
    }
    if (1..n).any(|i| s[i] == 1 && s[i + 1] == 1) {
        return Err(bad("11 occurs before the return"));
    }
    Ok(n)
}

/// S_nφ along a return word, with each distance read from the word itself.
pub fn birkhoff_on_return(word: &Word) -> Result<f64> {
    let n = validate_return(word)?;
    let s = word.symbols();
    let set = FactorSet::standard();
    let mut sum = 0.0;
    for k in 0..n {
        // 11 is not a factor, so the longest factor prefix ends inside the word.
        let rest = &s[k..];
        let m = (1..=rest.len())
            .take_while(|&l| set.contains(Word::from_vec_unchecked(rest[..l].to_vec()).to_bits(), l))
            .last()
            .unwrap_or(0);
        sum += log_step(m);
    }
    Ok(sum)
}

/// A node of the right-to-left search: the suffix y_k…y_{n+1} of a return
/// word still being built.
#[derive(Clone, Copy, Debug)]
struct Node {
    /// Suffix with y_k at bit 0.
    bits: u64,
    /// Symbols prepended so far, n − k.
    depth: usize,
    /// Longest factor prefix of the suffix.
    m: usize,
    /// Σ of the step potential over the prepended positions.
    sum: f64,
}

impl Node {
    fn root() -> Node {
        Node {
            bits: 0b11,
            depth: 0,
            m: 1,
            sum: 0.0,
        }
    }

    fn front(&self) -> u64 {
        self.bits & 1
    }
}

enum Step {
    Complete(Node),
    Continue(Node),
}

struct Search<'a> {
    factors: &'a FactorSet,
    potential: &'a StepPotential,
    l_max: usize,
}

impl Search<'_> {
    fn prepend(&self, node: &Node, a: u64) -> Step {
        let bits = (node.bits << 1) | a;
        let depth = node.depth + 1;
        if a == 1 && node.front() == 1 {
            // Reached the opening marker; its distance index is 1.
            let sum = node.sum + self.potential.term(1, bits);
            return Step::Complete(Node { bits, depth, m: 1, sum });
        }
        // Subwords of factors are factors, so m shrinks from at most m + 1.
        let total = depth + 2;
        let mut m = (node.m + 1).min(total);
        while m > 1 && !self.factors.contains(bits & mask(m), m) {
            m -= 1;
        }
        let sum = node.sum + self.potential.term(m, bits);
        Step::Continue(Node { bits, depth, m, sum })
    }

    /// Visits every completion below `node` in a fixed order.
    fn walk(&self, node: &Node, visit: &mut dyn FnMut(&Node)) {
        if node.depth >= self.l_max {
            return;
        }
        for a in [0, 1] {
            match self.prepend(node, a) {
                Step::Complete(done) => visit(&done),
                Step::Continue(next) => self.walk(&next, visit),
            }
        }
    }

    /// Like `walk`, but stops descending at `split` and returns the cut
    /// nodes in order.
    fn frontier(&self, node: &Node, split: usize, visit: &mut dyn FnMut(&Node), out: &mut Vec<Node>) {
        if node.depth >= self.l_max {
            return;
        }
        if node.depth == split {
            out.push(*node);
            return;
        }
        for a in [0, 1] {
            match self.prepend(node, a) {
                Step::Complete(done) => visit(&done),
                Step::Continue(next) => self.frontier(&next, split, visit, out),
            }
        }
    }
}

#[inline]
fn mask(len: usize) -> u64 {
    if len >= 64 {
        u64::MAX
    } else {
        (1u64 << len) - 1
    }
}

fn node_word(node: &Node) -> Word {
    let len = node.depth + 2;
    Word::from_bits(node.bits, len)
}

fn check_l_max(l_max: usize) -> Result<()> {
    if !(1..=MAX_RETURN_TIME).contains(&l_max) {
        return Err(Error::InvalidArgument(format!(
            "return time bound {l_max} outside 1..={MAX_RETURN_TIME}"
        )));
    }
    Ok(())
}

/// completions[f][r]: number of return words reachable from a node with
/// front symbol f using at most r more symbols.
fn completion_counts(l_max: usize) -> [Vec<f64>; 2] {
    let mut c0 = vec![0.0; l_max + 1];
    let mut c1 = vec![0.0; l_max + 1];
    for r in 1..=l_max {
        c0[r] = c0[r - 1] + c1[r - 1];
        c1[r] = 1.0 + c0[r - 1];
    }
    [c0, c1]
}

/// Return words of time ≤ l_max together with an upper bound on the weight
/// of the words cut by pruning.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Enumeration {
    pub words: Vec<ReturnWord>,
    pub pruned_mass: f64,
}

/// Depth-first enumeration of return words for φ. A branch is cut when its
/// partial weight exp(β·S − (symbols so far)·Z), which only decreases along
/// the branch for β, Z ≥ 0, is below `prune_threshold`; the cut branch adds
/// its partial weight times its number of completions to `pruned_mass`.
pub fn enumerate_returns(l_max: usize, prune_threshold: f64, beta: f64, z: f64) -> Result<Enumeration> {
    check_l_max(l_max)?;
    if [prune_threshold, beta, z].iter().any(|v| v.is_nan() || *v < 0.0) {
        return Err(Error::InvalidArgument(
            "prune threshold, beta and Z must be non-negative".into(),
        ));
    }
    let search = Search {
        factors: FactorSet::standard(),
        potential: &StepPotential::Log,
        l_max,
    };
    let counts = completion_counts(l_max);
    let mut words = Vec::new();
    let mut pruned = 0.0;
    let weight = |node: &Node| (beta * node.sum - node.depth as f64 * z).exp();
    fn go(
        search: &Search<'_>,
        node: &Node,
        threshold: f64,
        counts: &[Vec<f64>; 2],
        weight: &dyn Fn(&Node) -> f64,
        words: &mut Vec<ReturnWord>,
        pruned: &mut f64,
    ) {
        if node.depth >= search.l_max {
            return;
        }
        let w = weight(node);
        if w < threshold {
            *pruned += w * counts[node.front() as usize][search.l_max - node.depth];
            return;
        }
        for a in [0, 1] {
            match search.prepend(node, a) {
                Step::Complete(done) => {
                    if weight(&done) < threshold {
                        *pruned += weight(&done);
                    } else {
                        words.push(ReturnWord {
                            word: node_word(&done),
                            n: done.depth,
                            birkhoff: done.sum,
                        });
                    }
                }
                Step::Continue(next) => go(search, &next, threshold, counts, weight, words, pruned),
            }
        }
    }
    go(&search, &Node::root(), prune_threshold, &counts, &weight, &mut words, &mut pruned);
    Ok(Enumeration {
        words,
        pruned_mass: pruned,
    })
}

/// Neumaier-compensated running sum.
#[derive(Clone, Copy, Debug, Default)]
struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Birkhoff sums of every return word up to a bound, bucketed by return time
/// in a fixed order.
#[derive(Clone, Debug)]
pub struct ReturnTable {
    l_max: usize,
    sums: Vec<Vec<f64>>,
}

impl ReturnTable {
    pub fn build(l_max: usize, potential: &StepPotential) -> Result<Self> {
        Self::build_with(Mode::Parallel, l_max, potential)
    }

    pub fn build_with(mode: Mode, l_max: usize, potential: &StepPotential) -> Result<Self> {
        check_l_max(l_max)?;
        potential.validate()?;
        let search = Search {
            factors: FactorSet::standard(),
            potential,
            l_max,
        };
        let mut sums = vec![Vec::new(); l_max + 1];
        let mut frontier = Vec::new();
        search.frontier(
            &Node::root(),
            SPLIT_DEPTH.min(l_max),
            &mut |done| sums[done.depth].push(done.sum),
            &mut frontier,
        );
        let parts = par::map_ordered_with(mode, &frontier, |node| {
            let mut local = vec![Vec::new(); l_max + 1];
            search.walk(node, &mut |done| local[done.depth].push(done.sum));
            local
        });
        for part in parts {
            for (n, v) in part.into_iter().enumerate() {
                sums[n].extend(v);
            }
        }
        Ok(ReturnTable { l_max, sums })
    }

    pub fn l_max(&self) -> usize {
        self.l_max
    }

    /// Number of return words with return time n.
    pub fn count(&self, n: usize) -> usize {
        self.sums.get(n).map_or(0, Vec::len)
    }

    pub fn birkhoff_sums(&self, n: usize) -> &[f64] {
        &self.sums[n]
    }

    /// A_n(β) = Σ_{|word| = n} exp(β·S) for n = 0..=l_max.
    pub fn bucket_weights(&self, beta: f64) -> Vec<f64> {
        self.bucket_weights_with(Mode::Parallel, beta)
    }

    pub fn bucket_weights_with(&self, mode: Mode, beta: f64) -> Vec<f64> {
        par::map_ordered_with(mode, &self.sums, |v| {
            let mut acc = CompensatedSum::default();
            for s in v {
                acc.add((beta * s).exp());
            }
            acc.value()
        })
    }
}

/// λ^{(L)}(Z, β) with its tail estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LambdaValue {
    pub value: f64,
    /// Geometric extrapolation of the omitted return times; infinite when
    /// the fitted ratio is not below 1.
    pub tail: f64,
}

/// λ from per-length weights A_n.
fn lambda_from_buckets(buckets: &[f64], z: f64) -> LambdaValue {
    let mut acc = CompensatedSum::default();
    let terms: Vec<f64> = buckets
        .iter()
        .enumerate()
        .map(|(n, a)| a * (-(n as f64) * z).exp())
        .collect();
    for t in &terms {
        acc.add(*t);
    }
    LambdaValue {
        value: acc.value(),
        tail: geometric_tail(&terms),
    }
}

/// Least-squares fit of log b_n over the last buckets, summed past the end.
fn geometric_tail(terms: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = terms
        .iter()
        .enumerate()
        .rev()
        .take(TAIL_FIT_BUCKETS)
        .filter(|(_, b)| **b > 0.0)
        .map(|(n, b)| (n as f64, b.ln()))
        .collect();
    if pts.is_empty() {
        return 0.0;
    }
    if pts.len() < 2 {
        return f64::INFINITY;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    if slope >= 0.0 {
        return f64::INFINITY;
    }
    let r = slope.exp();
    let last_n = (terms.len() - 1) as f64;
    let last = (my + slope * (last_n - mx)).exp();
    last * r / (1.0 - r)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    TruncationLimited,
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Status::Converged => "converged",
            Status::TruncationLimited => "truncation-limited",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PressureSample {
    pub beta: f64,
    pub pressure: f64,
    /// λ^{(L)}(0, β).
    pub lambda0: f64,
    pub truncation: usize,
    /// Tail estimate at the reported pressure.
    pub tail_estimate: f64,
    /// Root of λ^{(L)} + tail = 1; the tail may move the pressure this far.
    pub pressure_with_tail: f64,
    pub status: Status,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BetaCBracket {
    pub lo: f64,
    pub hi: f64,
    pub truncation: usize,
    pub lambda0_lo: f64,
    pub lambda0_hi: f64,
    pub tail_lo: f64,
    pub tail_hi: f64,
    /// Where λ^{(L)}(0, β) alone falls to 1. Truncation only removes
    /// positive terms, so λ(0, β) > 1 below this point.
    pub lower_without_tail: f64,
    pub iterations: usize,
    pub status: Status,
}

/// Pressure computations over a fixed return table.
#[derive(Clone, Debug)]
pub struct PressureSolver {
    table: ReturnTable,
    mode: Mode,
}

impl PressureSolver {
    pub fn new(l_max: usize, potential: &StepPotential) -> Result<Self> {
        Self::with_mode(Mode::Parallel, l_max, potential)
    }

    pub fn with_mode(mode: Mode, l_max: usize, potential: &StepPotential) -> Result<Self> {
        Ok(PressureSolver {
            table: ReturnTable::build_with(mode, l_max, potential)?,
            mode,
        })
    }

    pub fn table(&self) -> &ReturnTable {
        &self.table
    }

    fn buckets(&self, beta: f64) -> Result<Vec<f64>> {
        if !beta.is_finite() || beta < 0.0 {
            return Err(Error::InvalidArgument(format!("beta must be finite and non-negative, got {beta}")));
        }
        Ok(self.table.bucket_weights_with(self.mode, beta))
    }

    pub fn lambda(&self, z: f64, beta: f64) -> Result<LambdaValue> {
        if z.is_nan() || z < 0.0 {
            return Err(Error::InvalidArgument(format!("Z must be non-negative, got {z}")));
        }
        let v = lambda_from_buckets(&self.buckets(beta)?, z);
        if !v.value.is_finite() {
            return Err(Error::Divergence { z, beta });
        }
        Ok(v)
    }

    /// P(β) at this truncation, solving λ(Z, β) = 1 by bisection on
    /// [0, log 2] to within `tol`.
    pub fn pressure(&self, beta: f64, tol: f64) -> Result<PressureSample> {
        if tol.is_nan() || tol <= 0.0 {
            return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
        }
        let buckets = self.buckets(beta)?;
        let at0 = lambda_from_buckets(&buckets, 0.0);
        let lam = |z: f64| lambda_from_buckets(&buckets, z);
        let solve = |f: &dyn Fn(f64) -> f64| -> Option<f64> {
            let (mut lo, mut hi) = (0.0, std::f64::consts::LN_2);
            if f(lo) <= 1.0 {
                return Some(0.0);
            }
            if f(hi) > 1.0 {
                return None;
            }
            for _ in 0..MAX_BISECTION {
                if hi - lo <= tol {
                    break;
                }
                let mid = 0.5 * (lo + hi);
                if f(mid) > 1.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Some(0.5 * (lo + hi))
        };
        let root = solve(&|z| lam(z).value);
        let root_tail = solve(&|z| {
            let v = lam(z);
            v.value + v.tail
        });
        let pressure = root.unwrap_or(std::f64::consts::LN_2);
        let with_tail = root_tail.unwrap_or(f64::INFINITY);
        let converged = root.is_some() && root_tail.is_some() && (with_tail - pressure) <= tol;
        Ok(PressureSample {
            beta,
            pressure,
            lambda0: at0.value,
            truncation: self.table.l_max,
            tail_estimate: lam(pressure).tail,
            pressure_with_tail: with_tail,
            status: if converged {
                Status::Converged
            } else {
                Status::TruncationLimited
            },
        })
    }

    pub fn pressure_curve(&self, beta_grid: &[f64], tol: f64) -> Result<Vec<PressureSample>> {
        if beta_grid.windows(2).any(|w| w[0].partial_cmp(&w[1]).is_none_or(|o| o.is_gt())) {
            return Err(Error::InvalidArgument("beta grid must be sorted".into()));
        }
        beta_grid.iter().map(|&b| self.pressure(b, tol)).collect()
    }

    /// Bracket of the β where λ(0, β) + tail crosses 1.
    pub fn beta_c(&self, tol: f64) -> Result<BetaCBracket> {
        if tol.is_nan() || tol <= 0.0 {
            return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
        }
        let at = |b: f64| -> Result<LambdaValue> { Ok(lambda_from_buckets(&self.buckets(b)?, 0.0)) };
        let frozen = |v: &LambdaValue| v.value + v.tail <= 1.0;
        let mut lo = 0.0;
        let mut lo_v = at(lo)?;
        if frozen(&lo_v) {
            return Err(Error::InvalidArgument("λ(0, 0) does not exceed 1".into()));
        }
        let mut hi = 1.0;
        let mut hi_v = at(hi)?;
        let mut iterations = 0;
        while !frozen(&hi_v) {
            lo = hi;
            lo_v = hi_v;
            hi *= 2.0;
            hi_v = at(hi)?;
            iterations += 1;
            if hi > 1e6 {
                return Err(Error::InvalidArgument("no freezing below β = 10⁶".into()));
            }
        }
        while hi - lo > tol && iterations < MAX_BISECTION {
            let mid = 0.5 * (lo + hi);
            let v = at(mid)?;
            if frozen(&v) {
                hi = mid;
                hi_v = v;
            } else {
                lo = mid;
                lo_v = v;
            }
            iterations += 1;
        }
        let (mut a, mut b) = (0.0, hi);
        while b - a > tol {
            let mid = 0.5 * (a + b);
            if at(mid)?.value > 1.0 {
                a = mid;
            } else {
                b = mid;
            }
        }
        let status = if lo_v.tail.is_finite() && hi_v.tail <= tol {
            Status::Converged
        } else {
            Status::TruncationLimited
        };
        Ok(BetaCBracket {
            lo,
            hi,
            truncation: self.table.l_max,
            lambda0_lo: lo_v.value,
            lambda0_hi: hi_v.value,
            tail_lo: lo_v.tail,
            tail_hi: hi_v.tail,
            lower_without_tail: 0.5 * (a + b),
            iterations,
            status,
        })
    }
}

/// λ^{(L)}(Z, β) for φ.
pub fn lambda(z: f64, beta: f64, l_max: usize) -> Result<LambdaValue> {
    PressureSolver::new(l_max, &StepPotential::Log)?.lambda(z, beta)
}

/// P(β) for φ at truncation `l_max`.
pub fn pressure(beta: f64, l_max: usize, tol: f64) -> Result<PressureSample> {
    PressureSolver::new(l_max, &StepPotential::Log)?.pressure(beta, tol)
}

pub fn beta_c(l_max: usize, tol: f64) -> Result<BetaCBracket> {
    PressureSolver::new(l_max, &StepPotential::Log)?.beta_c(tol)
}

pub fn pressure_curve(beta_grid: &[f64], l_max: usize, tol: f64) -> Result<Vec<PressureSample>> {
    PressureSolver::new(l_max, &StepPotential::Log)?.pressure_curve(beta_grid, tol)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GeneralPressure {
    /// Largest κ with −V ≤ κφ: the minimum of the density.
    pub kappa: f64,
    /// Upper end of the β_c bracket for φ.
    pub beta0: f64,
    /// β₀/κ, past which the pressure of −βV must vanish.
    pub onset_bound: f64,
    pub samples: Vec<PressureSample>,
    /// All samples with β ≥ onset_bound have zero pressure.
    pub plateau_verified: bool,
}

/// Pressure of −βV for V = g/m, compared against φ through −V ≤ κφ.
pub fn general_potential_pressure(
    density: &DensitySpec,
    beta_grid: &[f64],
    l_max: usize,
    tol: f64,
) -> Result<GeneralPressure> {
    let potential = StepPotential::Density(density.clone());
    potential.validate()?;
    let kappa = (0..1usize << density.depth())
        .map(|i| {
            let head: Vec<Symbol> = (0..density.depth())
                .map(|b| ((i >> (density.depth() - 1 - b)) & 1) as Symbol)
                .collect();
            density.value(&head)
        })
        .fold(f64::INFINITY, f64::min);
    // g/m ≥ κ/m ≥ κ·log(1 + 1/m), so −V ≤ κφ.
    let beta0 = beta_c(l_max, tol)?.hi;
    let onset_bound = beta0 / kappa;
    let samples = PressureSolver::new(l_max, &potential)?.pressure_curve(beta_grid, tol)?;
    let plateau_verified = samples
        .iter()
        .filter(|s| s.beta >= onset_bound)
        .all(|s| s.pressure == 0.0);
    Ok(GeneralPressure {
        kappa,
        beta0,
        onset_bound,
        samples,
        plateau_verified,
    })
}
