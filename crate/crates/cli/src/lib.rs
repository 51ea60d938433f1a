//! Command-line front end: configuration, subcommands and output.

pub mod commands;
pub mod config;
pub mod output;
pub mod sampling;
pub mod selftest;

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;

use crate::config::{Cli, Command, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_TRUNCATED: i32 = 3;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Runtime(m) => f.write_str(m),
        }
    }
}

/// Output of one invocation, before it is written anywhere.
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Parses arguments, runs the command and writes any output file.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            return if code == EXIT_OK {
                Outcome { code, stdout: text, stderr: String::new() }
            } else {
                Outcome { code, stdout: String::new(), stderr: text }
            };
        }
    };
    match execute(&cli) {
        Ok(o) => o,
        Err(CliError::Usage(m)) => Outcome {
            code: EXIT_USAGE,
            stdout: String::new(),
            stderr: format!("error: {m}\n"),
        },
        Err(CliError::Runtime(m)) => Outcome {
            code: EXIT_FAILURE,
            stdout: String::new(),
            stderr: format!("error: {m}\n"),
        },
    }
}

fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    let cfg = RunConfig::resolve(cli)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cfg.threads {
        builder = builder.num_threads(t);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Runtime(format!("thread pool: {e}")))?;
    pool.install(|| dispatch(&cfg))
}

fn dispatch(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let report = match &cfg.command {
        Command::Selftest { verbose, inject_fault } => {
            let seed: u64 = cfg.parse("seed")?;
            let results = selftest::run(&selftest::Context::new(seed, *inject_fault));
            let failed = results.iter().any(|r| r.outcome.is_err());
            return Ok(Outcome {
                code: if failed { EXIT_FAILURE } else { EXIT_OK },
                stdout: selftest::render(&results, *verbose),
                stderr: String::new(),
            });
        }
        Command::Words { .. } => commands::words(cfg)?,
        Command::Renorm { .. } => commands::renorm(cfg)?,
        Command::Pressure { .. } => commands::pressure(cfg)?,
        Command::Betac { .. } => commands::betac(cfg)?,
    };
    let mut stderr = String::new();
    let code = if report.truncation_limited && cfg.strict {
        stderr.push_str("error: result is truncation-limited\n");
        EXIT_TRUNCATED
    } else {
        EXIT_OK
    };
    let stdout = match cfg.out_path() {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)
                    .map_err(|e| CliError::Runtime(format!("{}: {e}", dir.display())))?;
            }
            let mut f = std::fs::File::create(&path)
                .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
            f.write_all(report.text.as_bytes())
                .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
            String::new()
        }
        None => report.text,
    };
    Ok(Outcome { code, stdout, stderr })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> Outcome {
        run(std::iter::once("fibrenorm").chain(args.iter().copied()))
    }

    #[test]
    fn words_table() {
        let o = run_args(&["words", "--n", "7"]);
        assert_eq!(o.code, EXIT_OK);
        let rows: Vec<&str> = o.stdout.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
        let complexity: Vec<usize> = rows.iter().map(|r| r.split(',').nth(1).unwrap().parse().unwrap()).collect();
        assert_eq!(complexity, (2..=8).collect::<Vec<_>>());
        let o = run_args(&["words", "--n", "0"]);
        let body: Vec<&str> = o.stdout.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(body, ["n,complexity,left_special,right_special,bispecial"]);
    }

    #[test]
    fn words_bispecial_rows() {
        let o = run_args(&["words", "--n", "33"]);
        let bi: Vec<usize> = o
            .stdout
            .lines()
            .filter(|l| l.ends_with(",true"))
            .map(|l| l.split(',').next().unwrap().parse().unwrap())
            .collect();
        assert_eq!(bi, [1, 3, 6, 11, 19, 32]);
    }

    #[test]
    fn renorm_rows() {
        let o = run_args(&["renorm", "--k-max", "0", "--point", "0110:per=01"]);
        assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
        let body: Vec<&str> = o.stdout.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(body.len(), 2);
        let o = run_args(&["renorm", "--alpha", "2", "--density", "const:1", "--k-max", "10"]);
        let vals: Vec<f64> = o
            .stdout
            .lines()
            .filter(|l| !l.starts_with('#'))
            .skip(1)
            .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
            .collect();
        assert!(vals.last().unwrap() < vals.first().unwrap());
        let o = run_args(&["renorm", "--k-max", "18"]);
        let last = o.stdout.lines().last().unwrap();
        let ratio: f64 = last.split(',').nth(3).unwrap().parse().unwrap();
        assert!((ratio - 1.0).abs() < 0.05);
    }

    #[test]
    fn pressure_rows_and_usage_errors() {
        let o = run_args(&["pressure", "--betas", "0,50", "--l-max", "24"]);
        assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
        let rows: Vec<Vec<String>> = o
            .stdout
            .lines()
            .filter(|l| !l.starts_with('#'))
            .skip(1)
            .map(|l| l.split(',').map(String::from).collect())
            .collect();
        let p0: f64 = rows[0][1].parse().unwrap();
        assert!((p0 - std::f64::consts::LN_2).abs() < 5e-3);
        assert_eq!(rows[1][1], "0");
        assert_eq!(rows[1][5], "converged");
        assert_eq!(run_args(&["pressure", "--betas", "1,0"]).code, EXIT_USAGE);
        assert_eq!(run_args(&["pressure", "--bogus"]).code, EXIT_USAGE);
        assert_eq!(run_args(&["renorm", "--density", "nope"]).code, EXIT_USAGE);
    }

    #[test]
    fn strict_truncation_exit() {
        let o = run_args(&["pressure", "--betas", "0", "--l-max", "16", "--strict"]);
        assert_eq!(o.code, EXIT_TRUNCATED);
        let o = run_args(&["pressure", "--betas", "50", "--l-max", "16", "--strict"]);
        assert_eq!(o.code, EXIT_OK);
    }

    #[test]
    fn betac_json() {
        let o = run_args(&["betac", "--l-max", "18"]);
        assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
        let v: serde_json::Value = serde_json::from_str(&o.stdout).unwrap();
        let (lo, hi) = (v["lo"].as_f64().unwrap(), v["hi"].as_f64().unwrap());
        assert!(0.0 < lo && lo < hi);
        assert!(hi - lo <= 1e-3);
        let half = run_args(&["betac", "--l-max", "18", "--tol", "5e-4"]);
        let v: serde_json::Value = serde_json::from_str(&half.stdout).unwrap();
        assert!(v["hi"].as_f64().unwrap() - v["lo"].as_f64().unwrap() <= 5e-4);
        assert_eq!(v["metadata"]["command"], "betac");
    }

    #[test]
    fn selftest_passes_and_detects_faults() {
        let o = run_args(&["selftest", "--verbose"]);
        assert_eq!(o.code, EXIT_OK, "{}", o.stdout);
        assert!(o.stdout.lines().all(|l| l.starts_with("ok") && l.ends_with("ms)")));
        let bad = run_args(&["selftest", "--inject-fault", "20"]);
        assert_eq!(bad.code, EXIT_FAILURE);
        assert!(bad.stdout.contains("FAIL complexity"));
    }

    #[test]
    fn output_file_and_directory_override() {
        let dir = std::env::temp_dir().join(format!("fibrenorm-out-{}", std::process::id()));
        let path = dir.join("words.json");
        let o = run_args(&["words", "--n", "5", "--format", "json", "--out", path.to_str().unwrap()]);
        assert_eq!(o.code, EXIT_OK);
        assert!(o.stdout.is_empty());
        let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(v["rows"].as_array().unwrap().len(), 5);
    }
}
