//! Acceptance gate: one line per criterion, nonzero exit if any fails.

use std::f64::consts::LN_2;
use std::process::Command;
use std::time::{Duration, Instant};

use fibrenorm::fibword::{
    bispecial_lengths, complexity, factors, is_factor_window, CylinderInterval, Word,
};
use fibrenorm::golden::GoldenRational;
use fibrenorm::metric::{
    check_h_preserves_closest, check_no_accident, coincidence_length, predicted_coincidence, Point,
    Tail, DEFAULT_CAP,
};
use fibrenorm::renorm::{
    convergence_experiment, fixed_point_check_exact, integrate_density, iterate_r_closed,
    iterate_r_direct, mu_k_cylinder, DensitySpec, Potential,
};
use fibrenorm::thermo::{PressureSolver, Status, StepPotential};
use fibrenorm_cli::commands::sweep_summary;
use fibrenorm_cli::sampling::seeded_points;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn secs(d: Duration) -> String {
    format!("{:.2} s", d.as_secs_f64())
}

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let mut failures = Vec::new();
    for k0 in 0..=50u64 {
        for k1 in 0..=50u64 {
            for a in [0, 1] {
                if !fixed_point_check_exact(k0, k1, a) {
                    failures.push((k0, k1, a));
                }
            }
        }
    }
    let t = start.elapsed();
    verdict(
        failures.is_empty() && t < Duration::from_secs(1),
        format!("exact fixed point: {} of 5202 identities fail ({})", failures.len(), secs(t)),
    )
}

fn criterion_2() -> Verdict {
    let start = Instant::now();
    let potentials = [
        Potential::new(1.0, DensitySpec::Tilde).unwrap(),
        Potential::new(
            1.5,
            DensitySpec::DepthTable {
                depth: 2,
                table: vec![1.0, 2.0, 0.5, 3.0],
            },
        )
        .unwrap(),
    ];
    let mut worst = 0.0f64;
    for x in seeded_points(20_240_601, 20) {
        for v in &potentials {
            for n in 0..=8 {
                let a = iterate_r_closed(v, n, &x, DEFAULT_CAP).unwrap();
                let b = iterate_r_direct(v, n, &x, DEFAULT_CAP).unwrap();
                worst = worst.max((a - b).abs());
            }
        }
    }
    let t = start.elapsed();
    verdict(
        worst <= 1e-10 && t < Duration::from_secs(30),
        format!("closed form vs nested R, 20 points, n <= 8: max deviation {worst:.3e} ({})", secs(t)),
    )
}

fn criterion_3() -> Verdict {
    let points: Vec<Point> = ["11:rho", "0110:per=01", "0100110:per=0", "1001:per=1", "00:k=1/3", "10:per=011"]
        .iter()
        .map(|s| s.parse().unwrap())
        .collect();
    let k_max = 22;
    let limit = Duration::from_secs(120);

    let start = Instant::now();
    let tilde = Potential::new(1.0, DensitySpec::Tilde).unwrap();
    let ratios: Vec<f64> = points
        .iter()
        .map(|x| convergence_experiment(&tilde, x, k_max, DEFAULT_CAP).unwrap()[k_max].ratio.unwrap())
        .collect();
    let t1 = start.elapsed();
    let within = ratios.iter().filter(|r| (0.95..=1.05).contains(*r)).count();
    let ok1 = within >= 5 && t1 < limit;

    let start = Instant::now();
    let decay = Potential::new(2.0, DensitySpec::Constant(1.0)).unwrap();
    let decays: Vec<f64> = points
        .iter()
        .map(|x| {
            let rows = convergence_experiment(&decay, x, k_max, DEFAULT_CAP).unwrap();
            rows[k_max].value / rows[0].value
        })
        .collect();
    let t2 = start.elapsed();
    let worst_decay = decays.iter().copied().fold(0.0, f64::max);
    let ok2 = worst_decay < 1e-2 && t2 < limit;

    let start = Instant::now();
    let grow = Potential::new(0.5, DensitySpec::Constant(1.0)).unwrap();
    let peaks: Vec<f64> = points
        .iter()
        .map(|x| {
            convergence_experiment(&grow, x, k_max, DEFAULT_CAP)
                .unwrap()
                .iter()
                .map(|r| r.value)
                .fold(0.0, f64::max)
        })
        .collect();
    let t3 = start.elapsed();
    let smallest_peak = peaks.iter().copied().fold(f64::INFINITY, f64::min);
    let largest_peak = peaks.iter().copied().fold(0.0, f64::max);
    let ok3 = smallest_peak > 1e3 && t3 < limit;

    let mark = |b| if b { "ok" } else { "FAILED" };
    verdict(
        ok1 && ok2 && ok3,
        format!(
            "trichotomy at k = {k_max}: alpha=1 {} ({within}/6 ratios in [0.95, 1.05], {}); \
             alpha=2 {} (final/initial <= {worst_decay:.2e}, {}); \
             alpha=1/2 {} (peak values {smallest_peak:.1} to {largest_peak:.1}, need > 1e3, {})",
            mark(ok1),
            secs(t1),
            mark(ok2),
            secs(t2),
            mark(ok3),
            secs(t3)
        ),
    )
}

/// Exact cylinders along the prefix tree against the ρ-window oracle, for
/// every binary word of length ≤ max_len.
fn oracle_disagreements(max_len: usize) -> usize {
    fn go(w: &mut Vec<u8>, cyl: &CylinderInterval, max_len: usize, bad: &mut usize) {
        let word = Word::new(w.clone()).unwrap();
        if cyl.is_empty() == is_factor_window(&word) {
            *bad += 1;
        }
        if w.len() == max_len {
            return;
        }
        for a in [0u8, 1] {
            let next = cyl.refine(w.len(), a);
            w.push(a);
            go(w, &next, max_len, bad);
            w.pop();
        }
    }
    let mut bad = 0;
    go(&mut Vec::new(), &CylinderInterval::full(), max_len, &mut bad);
    bad
}

fn criterion_4() -> Verdict {
    let start = Instant::now();
    let complexity_ok = (0..=30).all(|n| complexity(n) == n + 1);
    let bi = bispecial_lengths(100);
    let bi_ok = bi == [1, 3, 6, 11, 19, 32, 53, 87];
    let bad = oracle_disagreements(16);
    verdict(
        complexity_ok && bi_ok && bad == 0,
        format!(
            "complexity n+1 for n <= 30: {complexity_ok}; bi-special lengths {bi:?}; \
             oracle disagreements over all words of length <= 16: {bad} ({})",
            secs(start.elapsed())
        ),
    )
}

fn criterion_5() -> Verdict {
    let start = Instant::now();
    let tails = [Tail::Rho { offset: 0 }, Tail::Periodic(Word::new(vec![1, 0]).unwrap())];
    let mut law_failures = 0;
    let mut law_cases = 0;
    for len in 0..=8usize {
        for bits in 0..1u64 << len {
            let w = Word::from_bits(bits, len);
            for tail in &tails {
                let mut a = w.clone();
                a.push(0);
                let mut b = w.clone();
                b.push(1);
                let x = Point::with_prefix(a, tail.clone());
                let y = Point::with_prefix(b, tail.clone());
                for n in 0..=8 {
                    law_cases += 1;
                    if coincidence_length(&x, &y, n, DEFAULT_CAP).unwrap() != predicted_coincidence(&w, n) {
                        law_failures += 1;
                    }
                }
            }
        }
    }

    let candidates = seeded_points(7_000_001, 60);
    let mut by_symbol = [0usize; 2];
    let mut accident_failures = 0;
    for x in &candidates {
        let a = x.first_symbol() as usize;
        if by_symbol[a] == 5 {
            continue;
        }
        by_symbol[a] += 1;
        for n in 0..=10 {
            if !check_no_accident(x, n, DEFAULT_CAP).unwrap() {
                accident_failures += 1;
            }
        }
    }

    let mut closest_failures = 0;
    for x in seeded_points(5_050_505, 50) {
        for n in 0..=6 {
            if !check_h_preserves_closest(&x, n, DEFAULT_CAP).unwrap() {
                closest_failures += 1;
            }
        }
    }
    verdict(
        law_failures == 0 && by_symbol == [5, 5] && accident_failures == 0 && closest_failures == 0,
        format!(
            "coincidence law {law_failures}/{law_cases} failures; no-accident failures {accident_failures} \
             on {by_symbol:?} points per first symbol, n <= 10; closest-point failures {closest_failures} \
             on 50 points, n <= 6 ({})",
            secs(start.elapsed())
        ),
    )
}

fn criterion_6() -> Verdict {
    let one = GoldenRational::one();
    let sums_ok = (0..=12).all(|m| {
        factors(m)
            .iter()
            .fold(GoldenRational::zero(), |acc, w| acc + mu_k_cylinder(w))
            == one
    });
    let zero = mu_k_cylinder(&Word::new(vec![0]).unwrap()) == GoldenRational::inv_gamma();
    let gamma2 = GoldenRational::gamma() * GoldenRational::gamma();
    let one_cyl = mu_k_cylinder(&Word::new(vec![1]).unwrap()) == gamma2.recip().unwrap();
    let integral = integrate_density(&DensitySpec::Tilde);
    verdict(
        sums_ok && zero && one_cyl && integral == one,
        format!(
            "cylinder sums exact for m <= 12: {sums_ok}; mu[0] = 1/gamma: {zero}; \
             mu[1] = 1/gamma^2: {one_cyl}; integral of tilde density = {integral}"
        ),
    )
}

fn criterion_7() -> Verdict {
    let start = Instant::now();
    let solver = PressureSolver::new(30, &StepPotential::Log).unwrap();
    let p = solver.pressure(0.0, 1e-10).unwrap();
    let t = start.elapsed();
    let err = (p.pressure - LN_2).abs();
    verdict(
        err < 1e-3 && t < Duration::from_secs(300),
        format!("P(0) = {:.6} at L = 30, |P(0) - log 2| = {err:.2e} ({})", p.pressure, secs(t)),
    )
}

fn criterion_8() -> Verdict {
    let start = Instant::now();
    let solver = PressureSolver::new(30, &StepPotential::Log).unwrap();
    let bracket = solver.beta_c(1e-3).unwrap();
    let hi = bracket.hi;
    let grid: Vec<f64> = (0..40).map(|i| 2.0 * hi * i as f64 / 39.0).collect();
    let curve = solver.pressure_curve(&grid, 1e-10).unwrap();
    let plateau_ok = curve
        .iter()
        .filter(|s| s.beta >= hi)
        .all(|s| s.pressure == 0.0 && s.status == Status::Converged);
    let plateau_len = curve.iter().filter(|s| s.beta >= hi).count();
    let monotone = curve.windows(2).all(|w| w[1].pressure <= w[0].pressure);
    let min_second = curve
        .windows(3)
        .map(|w| w[0].pressure - 2.0 * w[1].pressure + w[2].pressure)
        .fold(f64::INFINITY, f64::min);
    verdict(
        plateau_ok && plateau_len > 0 && monotone && min_second >= -1e-6,
        format!(
            "beta_c bracket [{:.4}, {:.4}] at L = 30; zero and converged on all {plateau_len} grid points \
             past hi: {plateau_ok}; non-increasing: {monotone}; min second difference {min_second:.2e} ({})",
            bracket.lo,
            hi,
            secs(start.elapsed())
        ),
    )
}

fn criterion_9() -> Verdict {
    let start = Instant::now();
    let brackets: Vec<_> = [22, 24, 26]
        .iter()
        .map(|&l| PressureSolver::new(l, &StepPotential::Log).unwrap().beta_c(1e-3).unwrap())
        .collect();
    let (overlap, shift) = sweep_summary(&brackets);
    let listing: Vec<String> = brackets
        .iter()
        .map(|b| format!("L={}: [{:.4}, {:.4}]", b.truncation, b.lo, b.hi))
        .collect();
    verdict(
        overlap && shift < 0.05,
        format!(
            "beta_c brackets {}; overlap: {overlap}; max endpoint shift {:.2}% ({})",
            listing.join(", "),
            100.0 * shift,
            secs(start.elapsed())
        ),
    )
}

fn criterion_10() -> Verdict {
    let dir = std::env::temp_dir().join(format!("fibrenorm-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let run = |threads: &str, name: &str| -> Vec<u8> {
        let path = dir.join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_fibrenorm"))
            .args(["pressure", "--betas", "0:5:21", "--l-max", "26", "--threads", threads, "--out"])
            .arg(&path)
            .env_remove("FIBRENORM_OUTPUT_DIR")
            .status()
            .expect("run fibrenorm");
        assert!(status.success());
        std::fs::read(&path).unwrap()
    };
    let one = run("1", "one.csv");
    let eight = run("8", "eight.csv");
    let again = run("1", "again.csv");
    verdict(
        one == eight && one == again && !one.is_empty(),
        format!(
            "pressure CSV with 1 and 8 threads: {} bytes, identical: {}",
            one.len(),
            one == eight && one == again
        ),
    )
}

fn main() {
    let criteria: [(usize, fn() -> Verdict); 10] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
        (10, criterion_10),
    ];
    let mut failed = Vec::new();
    for (id, check) in criteria {
        let v = check();
        println!("criterion {id:>2} {} {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        if !v.pass {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all 10 criteria pass");
    } else {
        println!("acceptance: failing criteria {failed:?}");
        std::process::exit(1);
    }
}
