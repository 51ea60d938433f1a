//! Consistency checks run by `fibrenorm selftest`.

use std::time::{Duration, Instant};

use fibrenorm::fibword::{
    bispecial_lengths_in, complexity_in, is_factor_exact, is_factor_window, rho, RhoBuffer, Word,
};
use fibrenorm::golden::GoldenRational;
use fibrenorm::metric::{
    check_h_preserves_closest, check_no_accident, coincidence_length, predicted_coincidence, Point,
    Tail, DEFAULT_CAP,
};
use fibrenorm::renorm::{
    fixed_point_check_exact, integrate_density, iterate_r_closed, iterate_r_direct, mu_k_cylinder,
    DensitySpec, Potential,
};
use fibrenorm::thermo::{birkhoff_on_return, enumerate_returns, validate_return};

use crate::sampling::seeded_points;

pub struct CheckResult {
    pub name: &'static str,
    pub outcome: Result<(), String>,
    pub elapsed: Duration,
}

type Check = fn(&Context) -> Result<(), String>;

pub struct Context {
    pub seed: u64,
    buffer: Option<RhoBuffer>,
}

impl Context {
    pub fn new(seed: u64, fault: Option<usize>) -> Self {
        Context {
            seed,
            buffer: fault.map(RhoBuffer::with_fault),
        }
    }

    fn rho(&self) -> &RhoBuffer {
        self.buffer.as_ref().unwrap_or_else(|| rho())
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn complexity(ctx: &Context) -> Result<(), String> {
    for n in 0..=30 {
        let c = complexity_in(ctx.rho(), n);
        ensure(c == n + 1, || format!("complexity({n}) = {c}, expected {}", n + 1))?;
    }
    Ok(())
}

fn bispecial(ctx: &Context) -> Result<(), String> {
    let got = bispecial_lengths_in(ctx.rho(), 100);
    ensure(got == [1, 3, 6, 11, 19, 32, 53, 87], || format!("bi-special lengths {got:?}"))
}

fn factor_oracles(_: &Context) -> Result<(), String> {
    for len in 1..=10usize {
        for bits in 0..1u64 << len {
            let w = Word::from_bits(bits, len);
            ensure(is_factor_exact(&w) == is_factor_window(&w), || format!("oracles disagree on {w}"))?;
        }
    }
    Ok(())
}

fn fixed_point(_: &Context) -> Result<(), String> {
    for k0 in 0..=50 {
        for k1 in 0..=50 {
            for a in [0, 1] {
                ensure(fixed_point_check_exact(k0, k1, a), || {
                    format!("identity fails at ({k0}, {k1}) on [{a}]")
                })?;
            }
        }
    }
    Ok(())
}

fn closed_form(ctx: &Context) -> Result<(), String> {
    let v = Potential::new(1.0, DensitySpec::Tilde).map_err(|e| e.to_string())?;
    for x in seeded_points(ctx.seed, 10) {
        for n in 0..=6 {
            let a = iterate_r_closed(&v, n, &x, DEFAULT_CAP).map_err(|e| e.to_string())?;
            let b = iterate_r_direct(&v, n, &x, DEFAULT_CAP).map_err(|e| e.to_string())?;
            ensure((a - b).abs() <= 1e-10, || format!("R^{n}V({x}): closed {a} vs direct {b}"))?;
        }
    }
    Ok(())
}

fn coincidence(_: &Context) -> Result<(), String> {
    let tails = [Tail::Rho { offset: 0 }, Tail::Periodic(Word::new(vec![1, 0]).unwrap())];
    for len in 0..=5usize {
        for bits in 0..1u64 << len {
            let w = Word::from_bits(bits, len);
            for tail in &tails {
                let mut a = w.clone();
                a.push(0);
                let mut b = w.clone();
                b.push(1);
                let x = Point::with_prefix(a, tail.clone());
                let y = Point::with_prefix(b, tail.clone());
                for n in 0..=5 {
                    let got = coincidence_length(&x, &y, n, DEFAULT_CAP).map_err(|e| e.to_string())?;
                    let want = predicted_coincidence(&w, n);
                    ensure(got == want, || format!("w = {w}, n = {n}: {got} vs {want}"))?;
                }
            }
        }
    }
    Ok(())
}

fn no_accident(ctx: &Context) -> Result<(), String> {
    for x in seeded_points(ctx.seed ^ 1, 8) {
        for n in 0..=8 {
            let ok = check_no_accident(&x, n, DEFAULT_CAP).map_err(|e| e.to_string())?;
            ensure(ok, || format!("accident in H^{n}({x})"))?;
        }
    }
    Ok(())
}

fn closest(ctx: &Context) -> Result<(), String> {
    for x in seeded_points(ctx.seed ^ 2, 10) {
        for n in 0..=4 {
            let ok = check_h_preserves_closest(&x, n, DEFAULT_CAP).map_err(|e| e.to_string())?;
            ensure(ok, || format!("closest point not preserved for {x}, n = {n}"))?;
        }
    }
    Ok(())
}

fn measures(ctx: &Context) -> Result<(), String> {
    for m in 0..=10 {
        let total = fibrenorm::fibword::factors_in(ctx.rho(), m)
            .iter()
            .fold(GoldenRational::zero(), |acc, w| acc + mu_k_cylinder(w));
        ensure(total == GoldenRational::one(), || format!("cylinder measures of length {m} sum to {total}"))?;
    }
    let t = integrate_density(&DensitySpec::Tilde);
    ensure(t == GoldenRational::one(), || format!("∫ g̃ dμ = {t}"))
}

fn return_words(_: &Context) -> Result<(), String> {
    let e = enumerate_returns(14, 0.0, 0.0, 0.0).map_err(|e| e.to_string())?;
    let mut counts = [0usize; 15];
    for r in &e.words {
        let n = validate_return(&r.word).map_err(|e| e.to_string())?;
        ensure(n == r.n, || format!("{} has return time {n}", r.word))?;
        let s = birkhoff_on_return(&r.word).map_err(|e| e.to_string())?;
        ensure((s - r.birkhoff).abs() <= 1e-12, || format!("Birkhoff sum of {}", r.word))?;
        counts[n] += 1;
    }
    for n in 5..=14 {
        ensure(counts[n] == counts[n - 1] + counts[n - 2], || format!("return counts {counts:?}"))?;
    }
    Ok(())
}

pub const CHECKS: &[(&str, Check)] = &[
    ("complexity", complexity),
    ("bispecial-lengths", bispecial),
    ("factor-oracles", factor_oracles),
    ("fixed-point", fixed_point),
    ("closed-form", closed_form),
    ("coincidence", coincidence),
    ("no-accident", no_accident),
    ("closest-point", closest),
    ("measures", measures),
    ("return-words", return_words),
];

pub fn run(ctx: &Context) -> Vec<CheckResult> {
    CHECKS
        .iter()
        .map(|(name, check)| {
            let start = Instant::now();
            let outcome = check(ctx);
            CheckResult {
                name,
                outcome,
                elapsed: start.elapsed(),
            }
        })
        .collect()
}

pub fn render(results: &[CheckResult], verbose: bool) -> String {
    let mut s = String::new();
    for r in results {
        match &r.outcome {
            Ok(()) => s.push_str(&format!("ok   {}", r.name)),
            Err(e) => s.push_str(&format!("FAIL {}: {e}", r.name)),
        }
        if verbose {
            s.push_str(&format!(" ({:.1} ms)", r.elapsed.as_secs_f64() * 1e3));
        }
        s.push('\n');
    }
    s
}
