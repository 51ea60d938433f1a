//! The experiment subcommands. Each renders its full output as a string.

use fibrenorm::fibword::special_words;
use fibrenorm::fibword::{complexity, rho_prefix};
use fibrenorm::metric::{Point, DEFAULT_CAP};
use fibrenorm::renorm::{convergence_experiment, DensitySpec, Potential};
use fibrenorm::thermo::{BetaCBracket, PressureSolver, Status, StepPotential};
use serde_json::json;

use crate::config::{Format, RunConfig};
use crate::output::{csv, json, metadata, num, opt_num};
use crate::CliError;

pub struct Report {
    pub text: String,
    pub truncation_limited: bool,
}

impl Report {
    fn exact(text: String) -> Report {
        Report {
            text,
            truncation_limited: false,
        }
    }
}

fn core_err(e: fibrenorm::Error) -> CliError {
    match e {
        fibrenorm::Error::InvalidArgument(_)
        | fibrenorm::Error::InvalidPotential(_)
        | fibrenorm::Error::InvalidSymbol(_) => CliError::Usage(e.to_string()),
        other => CliError::Runtime(other.to_string()),
    }
}

pub fn parse_density(s: &str) -> Result<DensitySpec, CliError> {
    let bad = || CliError::Usage(format!("bad density {s:?}; use tilde, const:C or table:M:V1,V2,…"));
    let density = if s == "tilde" {
        DensitySpec::Tilde
    } else if let Some(c) = s.strip_prefix("const:") {
        DensitySpec::Constant(c.parse().map_err(|_| bad())?)
    } else if let Some(rest) = s.strip_prefix("table:") {
        let (m, vals) = rest.split_once(':').ok_or_else(bad)?;
        let depth = m.parse().map_err(|_| bad())?;
        let table = vals
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| bad())?;
        DensitySpec::DepthTable { depth, table }
    } else {
        return Err(bad());
    };
    density.validate().map_err(core_err)?;
    Ok(density)
}

/// `a,b,c` or `START:STOP:COUNT` (inclusive, evenly spaced); must be sorted.
pub fn parse_grid(s: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Usage(format!("bad grid {s:?}"));
    let grid: Vec<f64> = if let [a, b, n] = s.split(':').collect::<Vec<_>>()[..] {
        let (a, b): (f64, f64) = (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?);
        let n: usize = n.parse().map_err(|_| bad())?;
        match n {
            0 => Vec::new(),
            1 => vec![a],
            _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
        }
    } else {
        s.split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<_, _>>()?
    };
    if grid.iter().any(|b| !b.is_finite() || *b < 0.0) {
        return Err(CliError::Usage(format!("grid {s:?} must hold finite non-negative values")));
    }
    if grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(CliError::Usage(format!("grid {s:?} is not sorted")));
    }
    Ok(grid)
}

pub fn words(cfg: &RunConfig) -> Result<Report, CliError> {
    let n: usize = cfg.parse("n")?;
    if n > 2000 {
        return Err(CliError::Usage("n must be at most 2000".into()));
    }
    let mut meta = metadata(cfg);
    meta.push(("rho_prefix".into(), rho_prefix(n).to_string()));
    let rows: Vec<(usize, usize, String, String, bool)> = (1..=n)
        .map(|len| {
            let sw = special_words(len).expect("Sturmian language has special words");
            let bi = sw.left == sw.right;
            (len, complexity(len), sw.left.to_string(), sw.right.to_string(), bi)
        })
        .collect();
    let text = match cfg.format()? {
        Format::Csv => csv(
            &meta,
            &["n", "complexity", "left_special", "right_special", "bispecial"],
            &rows
                .iter()
                .map(|r| vec![r.0.to_string(), r.1.to_string(), r.2.clone(), r.3.clone(), r.4.to_string()])
                .collect::<Vec<_>>(),
        ),
        Format::Json => json(
            &meta,
            json!({ "rows": rows.iter().map(|r| json!({
                "n": r.0, "complexity": r.1, "left_special": r.2, "right_special": r.3, "bispecial": r.4,
            })).collect::<Vec<_>>() }),
        ),
    };
    Ok(Report::exact(text))
}

pub fn renorm(cfg: &RunConfig) -> Result<Report, CliError> {
    let alpha: f64 = cfg.parse("alpha")?;
    let density = parse_density(cfg.get("density"))?;
    let point: Point = cfg.get("point").parse().map_err(core_err)?;
    let k_max: usize = cfg.parse("k_max")?;
    let v = Potential::new(alpha, density).map_err(core_err)?;
    let rows = convergence_experiment(&v, &point, k_max, DEFAULT_CAP).map_err(core_err)?;
    let mut meta = metadata(cfg);
    meta.push(("cap".into(), DEFAULT_CAP.to_string()));
    let text = match cfg.format()? {
        Format::Csv => csv(
            &meta,
            &["k", "value", "target", "ratio"],
            &rows
                .iter()
                .map(|r| vec![r.k.to_string(), num(r.value), opt_num(r.target), opt_num(r.ratio)])
                .collect::<Vec<_>>(),
        ),
        Format::Json => json(&meta, json!({ "rows": rows })),
    };
    Ok(Report::exact(text))
}

pub fn pressure(cfg: &RunConfig) -> Result<Report, CliError> {
    let grid = parse_grid(cfg.get("betas"))?;
    let l_max: usize = cfg.parse("l_max")?;
    let tol: f64 = cfg.parse("tol")?;
    let solver = PressureSolver::new(l_max, &StepPotential::Log).map_err(core_err)?;
    let samples = solver.pressure_curve(&grid, tol).map_err(core_err)?;
    let limited = samples.iter().any(|s| s.status == Status::TruncationLimited);
    let meta = metadata(cfg);
    let text = match cfg.format()? {
        Format::Csv => csv(
            &meta,
            &["beta", "pressure", "lambda0", "L", "tail", "status"],
            &samples
                .iter()
                .map(|s| {
                    vec![
                        num(s.beta),
                        num(s.pressure),
                        num(s.lambda0),
                        s.truncation.to_string(),
                        num(s.tail_estimate),
                        s.status.to_string(),
                    ]
                })
                .collect::<Vec<_>>(),
        ),
        Format::Json => json(&meta, json!({ "rows": samples })),
    };
    Ok(Report {
        text,
        truncation_limited: limited,
    })
}

/// Whether consecutive brackets intersect, and the largest relative move of
/// either endpoint between consecutive truncations.
pub fn sweep_summary(brackets: &[BetaCBracket]) -> (bool, f64) {
    let overlap = brackets.windows(2).all(|w| w[0].lo <= w[1].hi && w[1].lo <= w[0].hi);
    let shift = brackets
        .windows(2)
        .map(|w| {
            let lo = (w[1].lo - w[0].lo).abs() / w[0].lo;
            let hi = (w[1].hi - w[0].hi).abs() / w[0].hi;
            lo.max(hi)
        })
        .fold(0.0, f64::max);
    (overlap, shift)
}

pub fn betac(cfg: &RunConfig) -> Result<Report, CliError> {
    let l_max: usize = cfg.parse("l_max")?;
    let tol: f64 = cfg.parse("tol")?;
    let sweep: Vec<usize> = match cfg.get("sweep") {
        "" => Vec::new(),
        s => s
            .split(',')
            .map(|v| v.trim().parse().map_err(|_| CliError::Usage(format!("bad sweep {s:?}"))))
            .collect::<Result<_, _>>()?,
    };
    let bracket = |l: usize| -> Result<BetaCBracket, CliError> {
        PressureSolver::new(l, &StepPotential::Log)
            .and_then(|s| s.beta_c(tol))
            .map_err(core_err)
    };
    let main = bracket(l_max)?;
    let swept = sweep.iter().map(|&l| bracket(l)).collect::<Result<Vec<_>, _>>()?;
    let limited = std::iter::once(&main)
        .chain(&swept)
        .any(|b| b.status == Status::TruncationLimited);
    let meta = metadata(cfg);
    let text = match cfg.format()? {
        Format::Json => {
            let mut body = json!({ "lo": main.lo, "hi": main.hi, "diagnostics": main });
            if !swept.is_empty() {
                let (overlap, shift) = sweep_summary(&swept);
                body["sweep"] = json!({ "brackets": swept, "overlap": overlap, "max_relative_shift": shift });
            }
            json(&meta, body)
        }
        Format::Csv => csv(
            &meta,
            &[
                "L", "lo", "hi", "lower_without_tail", "lambda0_lo", "lambda0_hi", "tail_lo", "tail_hi", "status",
            ],
            &std::iter::once(&main)
                .chain(swept.iter().filter(|b| b.truncation != main.truncation))
                .map(|b| {
                    vec![
                        b.truncation.to_string(),
                        num(b.lo),
                        num(b.hi),
                        num(b.lower_without_tail),
                        num(b.lambda0_lo),
                        num(b.lambda0_hi),
                        num(b.tail_lo),
                        num(b.tail_hi),
                        b.status.to_string(),
                    ]
                })
                .collect::<Vec<_>>(),
        ),
    };
    Ok(Report {
        text,
        truncation_limited: limited,
    })
}
