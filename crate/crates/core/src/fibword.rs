//! The Fibonacci substitution H: 0 → 01, 1 → 0, its fixed word ρ, and the
//! factor language of the subshift K generated by ρ.
//!
//! Two independent factor oracles live here. The exact one intersects the
//! rotated coding arcs of the golden rotation in Q(γ); the fast one searches a
//! finite window of ρ. Everything downstream that needs speed goes through
//! [`FactorSet`] or [`FactorAutomaton`], both built from the window, and the
//! tests pin the window against the exact oracle.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;
use std::sync::{OnceLock, RwLock};

use crate::error::{Error, Result};
use crate::golden::{fib_u, rotate, CirclePoint, GoldenRational, Side};

pub type Symbol = u8;

/// A finite word over {0, 1}.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(Vec<Symbol>);

impl Word {
    pub fn new(symbols: Vec<Symbol>) -> Result<Self> {
        if let Some(&bad) = symbols.iter().find(|&&s| s > 1) {
            return Err(Error::InvalidSymbol(char::from(b'0' + bad.min(9))));
        }
        Ok(Word(symbols))
    }

    pub(crate) fn from_vec_unchecked(symbols: Vec<Symbol>) -> Self {
        debug_assert!(symbols.iter().all(|&s| s <= 1));
        Word(symbols)
    }

    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.0
    }

    pub fn into_symbols(self) -> Vec<Symbol> {
        self.0
    }

    pub fn first(&self) -> Option<Symbol> {
        self.0.first().copied()
    }

    pub fn push(&mut self, a: Symbol) {
        assert!(a <= 1, "symbol out of alphabet");
        self.0.push(a);
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    pub fn slice(&self, start: usize, end: usize) -> Word {
        Word(self.0[start..end].to_vec())
    }

    pub fn reversed(&self) -> Word {
        Word(self.0.iter().rev().copied().collect())
    }

    /// Packs the word into the low bits of a `u64`, symbol `i` at bit `i`.
    pub fn to_bits(&self) -> u64 {
        assert!(self.len() <= 64);
        self.0
            .iter()
            .enumerate()
            .fold(0u64, |acc, (i, &s)| acc | (u64::from(s) << i))
    }

    pub fn from_bits(bits: u64, len: usize) -> Word {
        Word((0..len).map(|i| ((bits >> i) & 1) as Symbol).collect())
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &s in &self.0 {
            f.write_str(if s == 0 { "0" } else { "1" })?;
        }
        Ok(())
    }
}

impl serde::Serialize for Word {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.collect_str(self)
    }
}

impl FromStr for Word {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(Error::InvalidSymbol(other)),
            })
            .collect::<Result<Vec<_>>>()
            .map(Word)
    }
}

/// Parses a literal word; for tests and constants.
pub fn w(s: &str) -> Word {
    s.parse().expect("valid binary literal")
}

fn substitute_once(symbols: &[Symbol]) -> Vec<Symbol> {
    let mut out = Vec::with_capacity(symbols.len() * 2);
    for &s in symbols {
        if s == 0 {
            out.extend_from_slice(&[0, 1]);
        } else {
            out.push(0);
        }
    }
    out
}

/// H^n(w).
pub fn substitute(word: &Word, n: usize) -> Word {
    let mut cur = word.0.clone();
    for _ in 0..n {
        cur = substitute_once(&cur);
    }
    Word(cur)
}

/// The first `len` symbols of H^n(w), without materialising the rest.
pub fn substitute_prefix(word: &Word, n: usize, len: usize) -> Word {
    // |H^n(a)| is F_{n+1} for a = 0 and F_n for a = 1; take just enough of w.
    let (l0, l1) = (fib_u(n + 1), fib_u(n));
    let mut acc = 0usize;
    let mut cut = 0usize;
    for &s in word.symbols() {
        if acc >= len {
            break;
        }
        acc += if s == 0 { l0 } else { l1 };
        cut += 1;
    }
    let mut out = substitute(&word.slice(0, cut), n);
    out.0.truncate(len);
    out
}

/// Number of occurrences of `a` in `w`.
pub fn kappa(word: &Word, a: Symbol) -> usize {
    word.0.iter().filter(|&&s| s == a).count()
}

/// Left inverse of H: splits `w` into blocks `0` and `01` and maps them to
/// `1` and `0`. A trailing lone `0` is read as a complete block.
pub fn inverse_substitute(word: &Word) -> Result<Word> {
    let s = word.symbols();
    if s.first() == Some(&1) {
        return Err(Error::Decomposition {
            word: word.to_string(),
            reason: "starts with 1",
        });
    }
    let mut out = Vec::with_capacity(s.len());
    let mut i = 0;
    while i < s.len() {
        if s[i] == 1 {
            return Err(Error::Decomposition {
                word: word.to_string(),
                reason: "contains 11",
            });
        }
        if s.get(i + 1) == Some(&1) {
            out.push(0);
            i += 2;
        } else {
            out.push(1);
            i += 1;
        }
    }
    Ok(Word(out))
}

/// Memoized prefix of ρ. Grows under a write lock; readers never observe a
/// partially extended buffer.
#[derive(Debug)]
pub struct RhoBuffer {
    inner: RwLock<Vec<Symbol>>,
    fault: Option<usize>,
}

impl RhoBuffer {
    pub fn new() -> Self {
        RhoBuffer {
            inner: RwLock::new(vec![0]),
            fault: None,
        }
    }

    /// A buffer whose symbol at `index` is flipped. Used to check that the
    /// self-test notices a corrupted ρ.
    pub fn with_fault(index: usize) -> Self {
        RhoBuffer {
            inner: RwLock::new(vec![0]),
            fault: Some(index),
        }
    }

    pub fn prefix(&self, len: usize) -> Word {
        {
            let buf = self.inner.read().expect("rho buffer lock");
            if buf.len() >= len {
                return Word(buf[..len].to_vec());
            }
        }
        let mut buf = self.inner.write().expect("rho buffer lock");
        while buf.len() < len {
            // Every iterate H^k(0) is a prefix of the next one.
            let mut next = substitute_once(&buf);
            if let Some(i) = self.fault {
                if i < next.len() {
                    next[i] ^= 1;
                }
            }
            *buf = next;
        }
        Word(buf[..len].to_vec())
    }
}

impl Default for RhoBuffer {
    fn default() -> Self {
        RhoBuffer::new()
    }
}

/// The shared process-wide ρ buffer.
pub fn rho() -> &'static RhoBuffer {
    static RHO: OnceLock<RhoBuffer> = OnceLock::new();
    RHO.get_or_init(RhoBuffer::new)
}

pub fn rho_prefix(len: usize) -> Word {
    rho().prefix(len)
}

/// Length of the ρ window searched by the fast factor oracle for words of
/// length `n`.
pub fn factor_window(n: usize) -> usize {
    // γ³ = 2γ + 1
    ((2.0 * crate::golden::GAMMA_F64 + 1.0) * n as f64).ceil() as usize + 8
}

/// A half-open arc `[lo, lo + len)` of the circle, `0 < len ≤ 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
struct Arc {
    lo: CirclePoint,
    len: GoldenRational,
}

impl Arc {
    fn full() -> Arc {
        Arc {
            lo: CirclePoint::zero(),
            len: GoldenRational::one(),
        }
    }

    /// Offset of `t` from `lo` going forward, in [0, 1).
    fn offset(&self, t: &CirclePoint) -> GoldenRational {
        let d = t.value() - self.lo.value();
        if d < GoldenRational::zero() {
            d + GoldenRational::one()
        } else {
            d
        }
    }

    fn intersect(&self, other: &Arc) -> Option<Arc> {
        if self.len == GoldenRational::one() {
            return Some(other.clone());
        }
        if other.len == GoldenRational::one() {
            return Some(self.clone());
        }
        // Work in coordinates where self = [0, l1).
        let l1 = &self.len;
        let d = self.offset(&other.lo);
        let end2 = &d + &other.len;
        let one = GoldenRational::one();
        let mut pieces: Vec<(GoldenRational, GoldenRational)> = Vec::with_capacity(2);
        if &d < l1 {
            let hi = if &end2 < l1 { end2.clone() } else { l1.clone() };
            pieces.push((d.clone(), hi));
        }
        if end2 > one {
            let wrap_end = &end2 - &one;
            let hi = if &wrap_end < l1 { wrap_end } else { l1.clone() };
            if hi > GoldenRational::zero() {
                pieces.push((GoldenRational::zero(), hi));
            }
        }
        match pieces.len() {
            0 => None,
            1 => {
                let (s, e) = pieces.pop().unwrap();
                let len = &e - &s;
                let lo = crate::golden::mod1(&(self.lo.value() + &s));
                Some(Arc { lo, len })
            }
            _ => panic!("cylinder split into two arcs; Sturmian cylinders are connected"),
        }
    }
}

/// The set of circle coordinates whose (right-continuous) itinerary under
/// T_γ begins with a given word.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CylinderInterval {
    arc: Option<Arc>,
}

impl CylinderInterval {
    pub fn full() -> Self {
        CylinderInterval {
            arc: Some(Arc::full()),
        }
    }

    pub fn empty() -> Self {
        CylinderInterval { arc: None }
    }

    pub fn is_empty(&self) -> bool {
        self.arc.is_none()
    }

    pub fn lo(&self) -> Option<&CirclePoint> {
        self.arc.as_ref().map(|a| &a.lo)
    }

    /// Right endpoint, reduced mod 1.
    pub fn hi(&self) -> Option<CirclePoint> {
        self.arc
            .as_ref()
            .map(|a| crate::golden::mod1(&(a.lo.value() + &a.len)))
    }

    /// True when the arc passes through 0 (or is the whole circle).
    pub fn wraps(&self) -> bool {
        self.arc
            .as_ref()
            .is_some_and(|a| a.lo.value() + &a.len > GoldenRational::one() || a.len == GoldenRational::one())
    }

    /// Exact Lebesgue length; zero for the empty cylinder.
    pub fn length(&self) -> GoldenRational {
        self.arc
            .as_ref()
            .map_or_else(GoldenRational::zero, |a| a.len.clone())
    }

    /// Membership of `t` with the given one-sided convention: `[lo, hi)` for
    /// [`Side::Right`], `(lo, hi]` for [`Side::Left`].
    pub fn contains(&self, t: &CirclePoint, side: Side) -> bool {
        let Some(arc) = &self.arc else { return false };
        if arc.len == GoldenRational::one() {
            return true;
        }
        let off = arc.offset(t);
        match side {
            Side::Right => off < arc.len,
            Side::Left => off > GoldenRational::zero() && off <= arc.len,
        }
    }

    /// Restricts to coordinates whose symbol at time `k` is `a`.
    pub fn refine(&self, k: usize, a: Symbol) -> CylinderInterval {
        let Some(arc) = &self.arc else {
            return CylinderInterval::empty();
        };
        let sym = symbol_arc(a);
        let rotated = Arc {
            lo: rotate(&sym.lo, -(k as i64)),
            len: sym.len,
        };
        CylinderInterval {
            arc: arc.intersect(&rotated),
        }
    }
}

/// Coding arc of a symbol: 0 on [0, γ−1), 1 on [γ−1, 1).
fn symbol_arc(a: Symbol) -> Arc {
    let boundary = GoldenRational::inv_gamma();
    if a == 0 {
        Arc {
            lo: CirclePoint::zero(),
            len: boundary,
        }
    } else {
        Arc {
            lo: crate::golden::mod1(&boundary),
            len: GoldenRational::one() - boundary,
        }
    }
}

/// Symbol of the coordinate `t` under the coding partition.
pub fn code(t: &CirclePoint, side: Side) -> Symbol {
    let boundary = GoldenRational::inv_gamma();
    let v = t.value();
    match side {
        Side::Right => u8::from(*v >= boundary),
        Side::Left => {
            // Left limit: 0 on (0, γ−1], 1 on (γ−1, 1] with 0 read as 1⁻.
            if v.is_zero() || *v > boundary {
                1
            } else {
                0
            }
        }
    }
}

/// Exact cylinder of `w` on the circle.
pub fn cylinder_interval(word: &Word) -> CylinderInterval {
    let mut cyl = CylinderInterval::full();
    for (k, &a) in word.symbols().iter().enumerate() {
        cyl = cyl.refine(k, a);
        if cyl.is_empty() {
            break;
        }
    }
    cyl
}

/// Ground-truth factor test: the cylinder is nonempty.
pub fn is_factor_exact(word: &Word) -> bool {
    !cylinder_interval(word).is_empty()
}

/// Fast factor test: occurrence inside a finite window of ρ.
pub fn is_factor_window(word: &Word) -> bool {
    if word.is_empty() {
        return true;
    }
    let window = rho_prefix(factor_window(word.len()));
    window
        .symbols()
        .windows(word.len())
        .any(|win| win == word.symbols())
}

/// Membership in the language A_K of factors of ρ.
pub fn is_factor(word: &Word) -> bool {
    is_factor_window(word)
}

/// Distinct factors of length `n`, read off the ρ window.
pub fn factors_in(buffer: &RhoBuffer, n: usize) -> Vec<Word> {
    if n == 0 {
        return vec![Word::empty()];
    }
    let window = buffer.prefix(factor_window(n));
    let set: HashSet<&[Symbol]> = window.symbols().windows(n).collect();
    let mut out: Vec<Word> = set.into_iter().map(|s| Word(s.to_vec())).collect();
    out.sort();
    out
}

pub fn factors(n: usize) -> Vec<Word> {
    factors_in(rho(), n)
}

pub fn complexity_in(buffer: &RhoBuffer, n: usize) -> usize {
    factors_in(buffer, n).len()
}

/// Number of length-`n` factors; n + 1 for a Sturmian language.
pub fn complexity(n: usize) -> usize {
    complexity_in(rho(), n)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpecialWords {
    pub left: Word,
    pub right: Word,
}

fn extension_sets(buffer: &RhoBuffer, n: usize) -> (HashSet<Word>, Vec<Word>) {
    let longer: HashSet<Word> = factors_in(buffer, n + 1).into_iter().collect();
    (longer, factors_in(buffer, n))
}

/// The left- and right-special factors of length `n`. Returns `None` if the
/// language does not have exactly one of each, which cannot happen for ρ.
pub fn special_words_in(buffer: &RhoBuffer, n: usize) -> Option<SpecialWords> {
    let (longer, base) = extension_sets(buffer, n);
    let ext = |pre: Option<Symbol>, w: &Word, post: Option<Symbol>| {
        let mut v = Vec::with_capacity(w.len() + 1);
        v.extend(pre);
        v.extend_from_slice(w.symbols());
        v.extend(post);
        longer.contains(&Word(v))
    };
    let left: Vec<&Word> = base
        .iter()
        .filter(|w| ext(Some(0), w, None) && ext(Some(1), w, None))
        .collect();
    let right: Vec<&Word> = base
        .iter()
        .filter(|w| ext(None, w, Some(0)) && ext(None, w, Some(1)))
        .collect();
    match (left.as_slice(), right.as_slice()) {
        ([l], [r]) => Some(SpecialWords {
            left: (*l).clone(),
            right: (*r).clone(),
        }),
        _ => None,
    }
}

pub fn special_words(n: usize) -> Option<SpecialWords> {
    special_words_in(rho(), n)
}

/// Lengths `1 ≤ n ≤ max_len` at which the left-special factor is also
/// right-special.
pub fn bispecial_lengths_in(buffer: &RhoBuffer, max_len: usize) -> Vec<usize> {
    (1..=max_len)
        .filter(|&n| special_words_in(buffer, n).is_some_and(|s| s.left == s.right))
        .collect()
}

pub fn bispecial_lengths(max_len: usize) -> Vec<usize> {
    bispecial_lengths_in(rho(), max_len)
}

/// All factors of length ≤ 64 as packed bit patterns, one hash set per length.
#[derive(Debug, Clone)]
pub struct FactorSet {
    by_len: Vec<HashSet<u64>>,
}

impl FactorSet {
    pub fn new(max_len: usize) -> Self {
        assert!(max_len <= 64, "packed factors are limited to 64 symbols");
        let window = rho_prefix(factor_window(max_len));
        let s = window.symbols();
        let mut by_len = vec![HashSet::new(); max_len + 1];
        by_len[0].insert(0);
        for start in 0..s.len() {
            let mut bits = 0u64;
            for len in 1..=max_len.min(s.len() - start) {
                bits |= u64::from(s[start + len - 1]) << (len - 1);
                by_len[len].insert(bits);
            }
        }
        FactorSet { by_len }
    }

    /// The shared set for lengths up to 64.
    pub fn standard() -> &'static FactorSet {
        static SET: OnceLock<FactorSet> = OnceLock::new();
        SET.get_or_init(|| FactorSet::new(64))
    }

    pub fn max_len(&self) -> usize {
        self.by_len.len() - 1
    }

    /// `bits` holds the word with symbol `i` at bit `i`.
    #[inline]
    pub fn contains(&self, bits: u64, len: usize) -> bool {
        self.by_len[len].contains(&bits)
    }
}

/// Suffix automaton of a ρ window, used to find the longest prefix of a
/// symbol stream that is a factor in time linear in that prefix.
#[derive(Debug)]
pub struct FactorAutomaton {
    next: Vec<[u32; 2]>,
    max_len: usize,
}

const NONE: u32 = u32::MAX;

impl FactorAutomaton {
    /// Automaton exact for factors of length up to `max_len`.
    pub fn new(max_len: usize) -> Self {
        let window = rho_prefix(factor_window(max_len));
        let s = window.symbols();
        let cap = 2 * s.len() + 2;
        let mut next: Vec<[u32; 2]> = Vec::with_capacity(cap);
        let mut link: Vec<u32> = Vec::with_capacity(cap);
        let mut len: Vec<usize> = Vec::with_capacity(cap);
        next.push([NONE; 2]);
        link.push(NONE);
        len.push(0);
        let mut last = 0u32;
        for &c in s {
            let c = c as usize;
            let cur = next.len() as u32;
            next.push([NONE; 2]);
            link.push(NONE);
            len.push(len[last as usize] + 1);
            let mut p = last;
            while p != NONE && next[p as usize][c] == NONE {
                next[p as usize][c] = cur;
                p = link[p as usize];
            }
            if p == NONE {
                link[cur as usize] = 0;
            } else {
                let q = next[p as usize][c];
                if len[p as usize] + 1 == len[q as usize] {
                    link[cur as usize] = q;
                } else {
                    let clone = next.len() as u32;
                    next.push(next[q as usize]);
                    link.push(link[q as usize]);
                    len.push(len[p as usize] + 1);
                    while p != NONE && next[p as usize][c] == q {
                        next[p as usize][c] = clone;
                        p = link[p as usize];
                    }
                    link[q as usize] = clone;
                    link[cur as usize] = clone;
                }
            }
            last = cur;
        }
        FactorAutomaton { next, max_len }
    }

    pub fn standard() -> &'static FactorAutomaton {
        static AUT: OnceLock<FactorAutomaton> = OnceLock::new();
        AUT.get_or_init(|| FactorAutomaton::new(crate::metric::DEFAULT_CAP + 1))
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    /// Feeds symbols until the read prefix leaves the language. Returns the
    /// length of the longest factor prefix, or `None` when `limit` symbols were
    /// all accepted.
    pub fn longest_factor_prefix<I>(&self, symbols: I, limit: usize) -> Option<usize>
    where
        I: IntoIterator<Item = Symbol>,
    {
        let limit = limit.min(self.max_len);
        let mut state = 0u32;
        let mut read = 0usize;
        for s in symbols {
            if read == limit {
                return None;
            }
            let nxt = self.next[state as usize][s as usize];
            if nxt == NONE {
                return Some(read);
            }
            state = nxt;
            read += 1;
        }
        if read == limit {
            None
        } else {
            Some(read)
        }
    }
}
