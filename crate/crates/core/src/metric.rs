//! Points of the full shift, their distance to K, and executable versions of
//! the coincidence and accident lemmas for the Fibonacci substitution.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;

use crate::error::{Error, Result};
use crate::fibword::{
    code, cylinder_interval, rho, substitute, FactorAutomaton, Symbol, Word,
};
use crate::golden::{fib_u, mod1, rotate, CirclePoint, GoldenRational, Side};

/// Default scan length for distance computations: 10·F₁₅ symbols.
pub const DEFAULT_CAP: usize = 9870;

/// Circle coordinate of ρ: the orbit of 2γ (mod 1) codes ρ.
pub fn rho_coordinate() -> CirclePoint {
    mod1(&GoldenRational::from_ints(0, 2))
}

fn side_sensitive(t: &CirclePoint) -> bool {
    let v = t.value();
    v.is_lattice() && *v.b() <= BigRational::from_integer(BigInt::from(1))
}

/// Everything after the explicit prefix of a [`Point`].
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Tail {
    /// Itinerary of `t` under the golden rotation; a point of K.
    K { t: CirclePoint, side: Side },
    /// `p p p …`; need not lie in K.
    Periodic(Word),
    /// σ^offset(ρ).
    Rho { offset: usize },
}

impl Tail {
    pub fn k(t: CirclePoint) -> Tail {
        Tail::k_sided(t, Side::Right)
    }

    /// Canonicalises the side: it only matters for coordinates whose forward
    /// orbit meets a partition point, i.e. t ≡ qγ (mod 1) with integer q ≤ 1.
    pub fn k_sided(t: CirclePoint, side: Side) -> Tail {
        let side = if side_sensitive(&t) { side } else { Side::Right };
        Tail::K { t, side }
    }

    /// Circle coordinate and side when the tail lies in K.
    fn k_coordinate(&self) -> Option<(CirclePoint, Side)> {
        match self {
            Tail::K { t, side } => Some((t.clone(), *side)),
            Tail::Rho { offset } => Some((rotate(&rho_coordinate(), *offset as i64), Side::Right)),
            Tail::Periodic(_) => None,
        }
    }
}

/// A point of Σ = {0,1}^ℕ: finite prefix followed by a described tail.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Point {
    prefix: Word,
    tail: Tail,
}

impl Point {
    pub fn new(prefix: Word, tail: Tail) -> Result<Self> {
        if let Tail::Periodic(p) = &tail {
            if p.is_empty() {
                return Err(Error::InvalidArgument("periodic tail must be nonempty".into()));
            }
        }
        Ok(Point { prefix, tail })
    }

    pub fn rho() -> Self {
        Point {
            prefix: Word::empty(),
            tail: Tail::Rho { offset: 0 },
        }
    }

    pub fn k(t: CirclePoint) -> Self {
        Point {
            prefix: Word::empty(),
            tail: Tail::k(t),
        }
    }

    pub fn with_prefix(prefix: Word, tail: Tail) -> Self {
        Point::new(prefix, tail).expect("valid tail")
    }

    pub fn prefix(&self) -> &Word {
        &self.prefix
    }

    pub fn tail(&self) -> &Tail {
        &self.tail
    }

    pub fn symbols(&self) -> Symbols<'_> {
        Symbols {
            point: self,
            pos: 0,
            tail: None,
        }
    }

    pub fn first_symbol(&self) -> Symbol {
        self.symbols().next().expect("infinite stream")
    }

    /// The first `len` symbols.
    pub fn take(&self, len: usize) -> Word {
        Word::from_vec_unchecked(self.symbols().take(len).collect())
    }

    /// σ(x).
    pub fn shift(&self) -> Point {
        if !self.prefix.is_empty() {
            return Point {
                prefix: self.prefix.slice(1, self.prefix.len()),
                tail: self.tail.clone(),
            };
        }
        let tail = match &self.tail {
            Tail::K { t, side } => Tail::k_sided(t.step(), *side),
            Tail::Periodic(p) => {
                let s = p.symbols();
                let mut v = s[1..].to_vec();
                v.push(s[0]);
                Tail::Periodic(Word::from_vec_unchecked(v))
            }
            Tail::Rho { offset } => Tail::Rho { offset: offset + 1 },
        };
        Point {
            prefix: Word::empty(),
            tail,
        }
    }

    pub fn shift_by(&self, k: usize) -> Point {
        if k <= self.prefix.len() {
            return Point {
                prefix: self.prefix.slice(k, self.prefix.len()),
                tail: self.tail.clone(),
            };
        }
        (self.prefix.len()..k).fold(
            Point {
                prefix: Word::empty(),
                tail: self.tail.clone(),
            },
            |p, _| p.shift(),
        )
    }

    /// H(x), applied symbolwise to the prefix and exactly to the tail.
    pub fn substitute(&self) -> Point {
        let tail = match &self.tail {
            Tail::Rho { offset } => Tail::Rho {
                offset: substitute(&rho().prefix(*offset), 1).len(),
            },
            Tail::Periodic(p) => Tail::Periodic(substitute(p, 1)),
            Tail::K { t, side } => {
                let (v, s) = substitute_coordinate(t, *side);
                Tail::k_sided(v, s)
            }
        };
        Point {
            prefix: substitute(&self.prefix, 1),
            tail,
        }
    }

    /// H^n(x).
    pub fn substitute_n(&self, n: usize) -> Point {
        (0..n).fold(self.clone(), |p, _| p.substitute())
    }
}

/// Image of a coding under H, as a coding. H reverses orientation on the
/// circle: with c = 1/γ,
///   u ↦ c² − u·c on the 0-arc and u ↦ 1 − u·c on the 1-arc,
/// and the one-sided convention flips.
fn substitute_coordinate(t: &CirclePoint, side: Side) -> (CirclePoint, Side) {
    let c = GoldenRational::inv_gamma();
    let c2 = GoldenRational::from_ints(2, -1);
    let u = t.value();
    let in_zero_arc = match side {
        Side::Right => *u < c,
        Side::Left => !u.is_zero() && *u <= c,
    };
    let v = if in_zero_arc {
        &c2 - &(u * &c)
    } else {
        // 0 under the left convention stands for 1⁻.
        let u1 = if u.is_zero() { GoldenRational::one() } else { u.clone() };
        GoldenRational::one() - &u1 * &c
    };
    (mod1(&v), side.flip())
}

/// Infinite symbol stream of a point.
pub struct Symbols<'a> {
    point: &'a Point,
    pos: usize,
    tail: Option<TailState>,
}

enum TailState {
    K(CirclePoint, Side),
    Periodic(usize),
    Rho { next: usize, buf: Word },
}

impl Iterator for Symbols<'_> {
    type Item = Symbol;

    fn next(&mut self) -> Option<Symbol> {
        let prefix = self.point.prefix.symbols();
        if self.pos < prefix.len() {
            self.pos += 1;
            return Some(prefix[self.pos - 1]);
        }
        self.pos += 1;
        let state = self.tail.get_or_insert_with(|| match &self.point.tail {
            Tail::K { t, side } => TailState::K(t.clone(), *side),
            Tail::Periodic(_) => TailState::Periodic(0),
            Tail::Rho { offset } => TailState::Rho {
                next: *offset,
                buf: rho().prefix(offset + 64),
            },
        });
        let s = match state {
            TailState::K(t, side) => {
                let s = code(t, *side);
                *t = t.step();
                s
            }
            TailState::Periodic(i) => {
                let Tail::Periodic(p) = &self.point.tail else { unreachable!() };
                let s = p.symbols()[*i];
                *i = (*i + 1) % p.len();
                s
            }
            TailState::Rho { next, buf } => {
                if *next >= buf.len() {
                    *buf = rho().prefix(2 * buf.len() + 64);
                }
                let s = buf.symbols()[*next];
                *next += 1;
                s
            }
        };
        Some(s)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:", self.prefix)?;
        match &self.tail {
            Tail::Rho { offset: 0 } => write!(f, "rho"),
            Tail::Rho { offset } => write!(f, "rho+{offset}"),
            Tail::Periodic(p) => write!(f, "per={p}"),
            Tail::K { t, side } => {
                let v = t.value();
                write!(f, "k={},{}", v.a(), v.b())?;
                if *side == Side::Left {
                    write!(f, ",left")?;
                }
                Ok(())
            }
        }
    }
}

fn parse_rational(s: &str) -> Result<BigRational> {
    let bad = || Error::InvalidArgument(format!("bad rational {s:?}"));
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n, d),
        None => (s, "1"),
    };
    let n: BigInt = n.trim().parse().map_err(|_| bad())?;
    let d: BigInt = d.trim().parse().map_err(|_| bad())?;
    if d == BigInt::from(0) {
        return Err(bad());
    }
    Ok(BigRational::new(n, d))
}

/// `PREFIX:TAIL` with TAIL one of `rho`, `rho+OFFSET`, `per=WORD`,
/// `k=A[,B][,left]` (the coordinate A + Bγ mod 1, A and B rationals `p/q`).
impl FromStr for Point {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (prefix, tail) = s
            .split_once(':')
            .ok_or_else(|| Error::InvalidArgument(format!("point {s:?} lacks ':'")))?;
        let prefix: Word = prefix.parse()?;
        let tail = if tail == "rho" {
            Tail::Rho { offset: 0 }
        } else if let Some(off) = tail.strip_prefix("rho+") {
            Tail::Rho {
                offset: off
                    .parse()
                    .map_err(|_| Error::InvalidArgument(format!("bad offset {off:?}")))?,
            }
        } else if let Some(p) = tail.strip_prefix("per=") {
            Tail::Periodic(p.parse()?)
        } else if let Some(k) = tail.strip_prefix("k=") {
            let mut parts: Vec<&str> = k.split(',').collect();
            let side = if parts.last() == Some(&"left") {
                parts.pop();
                Side::Left
            } else {
                Side::Right
            };
            let a = parse_rational(parts.first().copied().unwrap_or("0"))?;
            let b = match parts.get(1) {
                Some(b) => parse_rational(b)?,
                None => BigRational::from_integer(BigInt::from(0)),
            };
            if parts.len() > 2 {
                return Err(Error::InvalidArgument(format!("bad K tail {k:?}")));
            }
            Tail::k_sided(mod1(&GoldenRational::new(a, b)), side)
        } else {
            return Err(Error::InvalidArgument(format!("unknown tail {tail:?}")));
        };
        Point::new(prefix, tail)
    }
}

/// d(x, K) = 2^{-n}.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DistanceResult {
    Finite(usize),
    /// x ∈ K.
    Infinite,
    /// Every prefix up to the cap is a factor but membership in K is not
    /// decided.
    CapExhausted(usize),
}

impl DistanceResult {
    pub fn finite(self) -> Result<usize> {
        match self {
            DistanceResult::Finite(n) => Ok(n),
            DistanceResult::Infinite => Err(Error::UndefinedOnK),
            DistanceResult::CapExhausted(cap) => Err(Error::CapExhausted { cap }),
        }
    }
}

/// Length of the longest prefix of `x` in the factor language.
pub fn dist_to_k(x: &Point, cap: usize) -> DistanceResult {
    let owned;
    let aut = if cap <= FactorAutomaton::standard().max_len() {
        FactorAutomaton::standard()
    } else {
        owned = FactorAutomaton::new(cap + 1);
        &owned
    };
    let plen = x.prefix.len();
    if let Some((t, side)) = x.tail.k_coordinate() {
        // Decide membership in K exactly: the tail is the coding of t, so x is
        // the coding of t − |prefix|·γ iff that coordinate is in the prefix
        // cylinder.
        if plen == 0 {
            return DistanceResult::Infinite;
        }
        if let Some(n) = aut.longest_factor_prefix(x.prefix.symbols().iter().copied(), plen + 1) {
            if n < plen {
                return DistanceResult::Finite(n);
            }
        }
        // When the tail's own orbit avoids the partition points, the prefix
        // may follow either one-sided coding of u.
        let u = rotate(&t, -(plen as i64));
        let cyl = cylinder_interval(&x.prefix);
        if cyl.contains(&u, side) || (!side_sensitive(&t) && cyl.contains(&u, side.flip())) {
            return DistanceResult::Infinite;
        }
    }
    match aut.longest_factor_prefix(x.symbols(), cap) {
        Some(n) => DistanceResult::Finite(n),
        None => DistanceResult::CapExhausted(cap),
    }
}

/// κ̃_a(x): occurrences of `a` in the longest factor prefix of `x`.
pub fn kappa_tilde(x: &Point, a: Symbol, cap: usize) -> Result<usize> {
    let n = dist_to_k(x, cap).finite()?;
    Ok(x.symbols().take(n).filter(|&s| s == a).count())
}

/// Both counters at once, (κ̃₀, κ̃₁).
pub fn kappa_tilde_pair(x: &Point, cap: usize) -> Result<(usize, usize)> {
    let n = dist_to_k(x, cap).finite()?;
    let ones = x.symbols().take(n).filter(|&s| s == 1).count();
    Ok((n - ones, ones))
}

/// Positions 1 ≤ j ≤ horizon where d(σ^j x, K) ≤ d(σ^{j-1} x, K). Steps
/// starting from a point of K are never reported.
pub fn accidents(x: &Point, horizon: usize, cap: usize) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = x.clone();
    let mut prev = dist_to_k(&cur, cap);
    for j in 1..=horizon {
        cur = cur.shift();
        let d = dist_to_k(&cur, cap);
        if let DistanceResult::CapExhausted(cap) = d {
            return Err(Error::CapExhausted { cap });
        }
        match prev {
            DistanceResult::Finite(p) => {
                let hit = match d {
                    DistanceResult::Finite(n) => n >= p,
                    _ => true,
                };
                if hit {
                    out.push(j);
                }
            }
            DistanceResult::Infinite => {}
            DistanceResult::CapExhausted(cap) => return Err(Error::CapExhausted { cap }),
        }
        prev = d;
    }
    Ok(out)
}

/// Length of the maximal common prefix of two points.
pub fn common_prefix_len(x: &Point, y: &Point, cap: usize) -> Result<usize> {
    x.symbols()
        .zip(y.symbols())
        .take(cap)
        .position(|(a, b)| a != b)
        .ok_or(Error::IdenticalStreams { cap })
}

/// Length of the maximal common prefix of H^n(x) and H^n(y).
pub fn coincidence_length(x: &Point, y: &Point, n: usize, cap: usize) -> Result<usize> {
    common_prefix_len(&x.substitute_n(n), &y.substitute_n(n), cap)
}

/// T_n(w) + F_{n+2} − 2, where T_n(w) = |H^n(w)|.
pub fn predicted_coincidence(common: &Word, n: usize) -> usize {
    substitute(common, n).len() + fib_u(n + 2) - 2
}

/// n* = n + 1 on [0] and n on [1].
pub fn n_star(first: Symbol, n: usize) -> usize {
    if first == 0 {
        n + 1
    } else {
        n
    }
}

/// True iff H^n(x) has no accident among its first F_{n*} − 1 shifts.
pub fn check_no_accident(x: &Point, n: usize, cap: usize) -> Result<bool> {
    let horizon = fib_u(n_star(x.first_symbol(), n)) - 1;
    Ok(accidents(&x.substitute_n(n), horizon, cap)?.is_empty())
}

/// A point of K at distance exactly d(x, K) from `x`: it continues the
/// longest factor prefix `w` of `x` with the other symbol, which keeps `w·ā`
/// in the language since every factor extends to the right.
pub fn closest_k_point(x: &Point, cap: usize) -> Result<Point> {
    let d = dist_to_k(x, cap).finite()?;
    let mut target = x.take(d + 1).into_symbols();
    target[d] ^= 1;
    let cyl = cylinder_interval(&Word::from_vec_unchecked(target));
    let lo = cyl.lo().ok_or_else(|| {
        Error::InvalidArgument("longest factor prefix has no extension in K".into())
    })?;
    Ok(Point::k(lo.clone()))
}

/// d(H^n x, K) = d(H^n x, H^n y) for the point y ∈ K closest to x.
pub fn check_h_preserves_closest(x: &Point, n: usize, cap: usize) -> Result<bool> {
    let y = closest_k_point(x, cap)?;
    let hx = x.substitute_n(n);
    let hy = y.substitute_n(n);
    let dist = dist_to_k(&hx, cap);
    let coinc = common_prefix_len(&hx, &hy, cap)?;
    Ok(dist == DistanceResult::Finite(coinc))
}
