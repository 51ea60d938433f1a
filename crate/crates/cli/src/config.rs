//! Run configuration: command-line flags over a `key=value` file over
//! built-in defaults.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Parser, Debug)]
#[command(name = "fibrenorm", version, about = "Renormalization and pressure experiments for the Fibonacci subshift")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// File of `key=value` lines supplying parameters not given as flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Output file; relative paths resolve under $FIBRENORM_OUTPUT_DIR when set.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    /// Worker threads; defaults to one per core.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Exit with status 3 when a result is truncation-limited.
    #[arg(long, global = true)]
    pub strict: bool,

    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Prefix of ρ with complexity and special factors by length.
    Words {
        #[arg(long)]
        n: Option<usize>,
    },
    /// Runs the built-in consistency checks.
    Selftest {
        #[arg(long)]
        verbose: bool,
        /// Flip one symbol of the ρ buffer used by the checks.
        #[arg(long, hide = true)]
        inject_fault: Option<usize>,
    },
    /// R^k V(x) for k = 0..=k_max.
    Renorm {
        #[arg(long)]
        alpha: Option<f64>,
        /// `tilde`, `const:C` or `table:M:V1,V2,…` (2^M values, first symbol most significant).
        #[arg(long)]
        density: Option<String>,
        /// `PREFIX:TAIL` with TAIL `rho`, `rho+K`, `per=WORD` or `k=A[,B][,left]`.
        #[arg(long)]
        point: Option<String>,
        #[arg(long)]
        k_max: Option<usize>,
    },
    /// Pressure along a grid of inverse temperatures.
    Pressure {
        /// Comma-separated list or `START:STOP:COUNT`.
        #[arg(long)]
        betas: Option<String>,
        #[arg(long)]
        l_max: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Bracket for the freezing point.
    Betac {
        #[arg(long)]
        l_max: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
        /// Comma-separated truncations to compare, e.g. `22,24,26`.
        #[arg(long)]
        sweep: Option<String>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Words { .. } => "words",
            Command::Selftest { .. } => "selftest",
            Command::Renorm { .. } => "renorm",
            Command::Pressure { .. } => "pressure",
            Command::Betac { .. } => "betac",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Json => "json",
        })
    }
}

/// Every key a config file may set.
pub const KEYS: &[&str] = &[
    "alpha", "betas", "density", "format", "k_max", "l_max", "n", "out", "point", "seed", "strict",
    "sweep", "threads", "tol",
];

/// Keys that do not change the computed numbers and stay out of the hash.
const UNHASHED: &[&str] = &["out", "threads"];

fn defaults(command: &str) -> &'static [(&'static str, &'static str)] {
    match command {
        "words" => &[("n", "33"), ("format", "csv")],
        "selftest" => &[("seed", "0")],
        "renorm" => &[
            ("alpha", "1"),
            ("density", "tilde"),
            ("point", "11:rho"),
            ("k_max", "18"),
            ("format", "csv"),
        ],
        "pressure" => &[
            ("betas", "0:6:13"),
            ("l_max", "30"),
            ("tol", "1e-10"),
            ("format", "csv"),
        ],
        "betac" => &[("l_max", "26"), ("tol", "1e-3"), ("sweep", ""), ("format", "json")],
        _ => &[],
    }
}

/// Fully resolved parameters of one run.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub command: Command,
    pub params: BTreeMap<String, String>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub strict: bool,
}

pub fn parse_config_file(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    parse_config_text(&text)
}

pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected key=value", i + 1)))?;
        let k = k.trim();
        if !KEYS.contains(&k) {
            return Err(CliError::Usage(format!("config line {}: unknown key {k:?}", i + 1)));
        }
        map.insert(k.to_string(), v.trim().to_string());
    }
    Ok(map)
}

impl RunConfig {
    pub fn resolve(cli: &Cli) -> Result<RunConfig, CliError> {
        let file = match &cli.config {
            Some(p) => parse_config_file(p)?,
            None => BTreeMap::new(),
        };
        let name = cli.command.name();
        let mut flags: BTreeMap<&str, String> = BTreeMap::new();
        let mut set = |k: &'static str, v: Option<String>| {
            if let Some(v) = v {
                flags.insert(k, v);
            }
        };
        match &cli.command {
            Command::Words { n } => set("n", n.map(|v| v.to_string())),
            Command::Selftest { .. } => {}
            Command::Renorm {
                alpha,
                density,
                point,
                k_max,
            } => {
                set("alpha", alpha.map(|v| v.to_string()));
                set("density", density.clone());
                set("point", point.clone());
                set("k_max", k_max.map(|v| v.to_string()));
            }
            Command::Pressure { betas, l_max, tol } => {
                set("betas", betas.clone());
                set("l_max", l_max.map(|v| v.to_string()));
                set("tol", tol.map(|v| v.to_string()));
            }
            Command::Betac { l_max, tol, sweep } => {
                set("l_max", l_max.map(|v| v.to_string()));
                set("tol", tol.map(|v| v.to_string()));
                set("sweep", sweep.clone());
            }
        }
        set("format", cli.format.map(|f| f.to_string()));
        set("seed", cli.seed.map(|s| s.to_string()));

        let mut params = BTreeMap::new();
        for (k, default) in defaults(name) {
            let v = flags
                .get(k)
                .cloned()
                .or_else(|| file.get(*k).cloned())
                .unwrap_or_else(|| default.to_string());
            params.insert(k.to_string(), v);
        }
        let out = cli
            .out
            .clone()
            .or_else(|| file.get("out").filter(|s| !s.is_empty()).map(PathBuf::from));
        let threads = match cli.threads {
            Some(t) => Some(t),
            None => file
                .get("threads")
                .map(|s| s.parse().map_err(|_| CliError::Usage(format!("bad threads {s:?}"))))
                .transpose()?,
        };
        if threads == Some(0) {
            return Err(CliError::Usage("threads must be at least 1".into()));
        }
        let strict = cli.strict
            || match file.get("strict").map(String::as_str) {
                None | Some("false") => false,
                Some("true") => true,
                Some(other) => return Err(CliError::Usage(format!("bad strict {other:?}"))),
            };
        Ok(RunConfig {
            command: cli.command.clone(),
            params,
            out,
            threads,
            strict,
        })
    }

    pub fn get(&self, key: &str) -> &str {
        self.params.get(key).map(String::as_str).unwrap_or("")
    }

    pub fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<T, CliError> {
        let v = self.get(key);
        v.parse()
            .map_err(|_| CliError::Usage(format!("bad value for {key}: {v:?}")))
    }

    pub fn format(&self) -> Result<Format, CliError> {
        match self.get("format") {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(CliError::Usage(format!("unknown format {other:?}"))),
        }
    }

    /// SHA-256 over the command and every parameter that affects results.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.command.name().as_bytes());
        h.update(b"\n");
        for (k, v) in &self.params {
            if !UNHASHED.contains(&k.as_str()) {
                h.update(format!("{k}={v}\n").as_bytes());
            }
        }
        hex::encode(h.finalize())
    }

    /// Target path, honouring the output-directory override.
    pub fn out_path(&self) -> Option<PathBuf> {
        let out = self.out.as_ref()?;
        match std::env::var_os("FIBRENORM_OUTPUT_DIR") {
            Some(dir) if out.is_relative() => Some(PathBuf::from(dir).join(out)),
            _ => Some(out.clone()),
        }
    }
}
