//! Command-line driver: parse a run configuration, execute the harness and
//! write `replications.csv`, `summary.csv` and optional SVG figures.

use std::ffi::OsString;
use std::fs;
use std::io::BufWriter;
use std::path::PathBuf;

use clap::{ArgAction, CommandFactory, Parser};

use crate::error::{Error, Result};
use crate::estimators::{parse_methods, MethodSpec};
use crate::report::{write_figures, write_replications, write_summary};
use crate::sim::{
    parse_scenario_file, run_grid, scenario_grid, summarize, GridKind, Job, RunOptions, Scenario,
    DEFAULT_N,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FATAL: i32 = 1;
pub const EXIT_PARTIAL: i32 = 2;

/// Environment variable supplying the default worker count.
pub const WORKERS_ENV: &str = "SPCONF_WORKERS";

#[derive(Parser, Debug)]
#[command(
    name = "spconf",
    version,
    about = "Monte Carlo comparison of spatial-confounding adjustment estimators",
    args_override_self = true
)]
struct Args {
    /// File of `key = value` lines using the long option names below
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,

    /// main, appendix_a, appendix_b, or a path to a scenario file
    #[arg(long, default_value = "main")]
    grid: String,

    /// Comma-separated methods, e.g. NS,F-DF:50,PS:K=500,E-PS:K=500:logit,Spatial+:K=500
    #[arg(long, default_value = "NS,PS:K=500,E-PS:K=500")]
    methods: String,

    /// Replications per scenario
    #[arg(long, default_value_t = 100)]
    reps: usize,

    /// Master seed
    #[arg(long, default_value_t = 1)]
    seed: u64,

    /// Sample size override for every scenario
    #[arg(long)]
    n: Option<usize>,

    /// Worker threads
    #[arg(long, env = WORKERS_ENV, default_value_t = 1)]
    workers: usize,

    /// Output directory
    #[arg(long, default_value = "spconf-out")]
    out: PathBuf,

    /// Write one SVG figure per σx² value
    #[arg(long, num_args = 0..=1, default_value = "false", default_missing_value = "true", action = ArgAction::Set)]
    plots: bool,

    /// Record wall-clock times (makes output non-reproducible)
    #[arg(long, num_args = 0..=1, default_value = "false", default_missing_value = "true", action = ArgAction::Set)]
    timing: bool,
}

const CONFIG_KEYS: [&str; 9] = [
    "grid", "methods", "reps", "seed", "n", "workers", "out", "plots", "timing",
];

#[derive(Debug, Clone, PartialEq)]
pub enum GridSource {
    Named(GridKind),
    File(PathBuf),
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub grid: GridSource,
    pub methods: Vec<MethodSpec>,
    pub n_reps: usize,
    pub master_seed: u64,
    pub n: Option<usize>,
    pub workers: usize,
    pub out_dir: PathBuf,
    pub emit_plots: bool,
    pub timing: bool,
}

impl RunConfig {
    /// Scenarios of the configured grid with the sample-size override
    /// applied.
    pub fn scenarios(&self) -> Result<Vec<Scenario>> {
        let mut s = match &self.grid {
            GridSource::Named(kind) => scenario_grid(*kind),
            GridSource::File(path) => {
                let text = fs::read_to_string(path).map_err(|e| {
                    Error::Usage(format!("--grid: cannot read {}: {e}", path.display()))
                })?;
                parse_scenario_file(&text, self.n.unwrap_or(DEFAULT_N))?
            }
        };
        if let Some(n) = self.n {
            for sc in &mut s {
                sc.n = n;
            }
        }
        Ok(s)
    }

    pub fn validate(&self) -> Result<Vec<Scenario>> {
        if self.methods.is_empty() {
            return Err(Error::Usage(
                "--methods: at least one method is required".into(),
            ));
        }
        if self.n_reps == 0 {
            return Err(Error::Usage("--reps: must be at least 1".into()));
        }
        if self.workers == 0 {
            return Err(Error::Usage("--workers: must be at least 1".into()));
        }
        if self.out_dir.exists() && !self.out_dir.is_dir() {
            return Err(Error::Usage(format!(
                "--out: {} is not a directory",
                self.out_dir.display()
            )));
        }
        let scenarios = self.scenarios()?;
        for sc in &scenarios {
            sc.validate()
                .map_err(|e| Error::Usage(format!("--grid: {e}")))?;
            for m in &self.methods {
                m.validate(sc.n)
                    .map_err(|e| Error::Usage(format!("--methods: {e}")))?;
            }
        }
        Ok(scenarios)
    }

    pub fn run_options(&self) -> RunOptions {
        RunOptions::new(self.n_reps, self.master_seed)
            .workers(self.workers)
            .timing(self.timing)
    }
}

/// Turns `key = value` lines into command-line arguments.
pub fn config_file_args(text: &str) -> Result<Vec<String>> {
    let mut args = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or_default().trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Usage(format!("config line {}: expected `key = value`", i + 1))
        })?;
        let key = key.trim();
        if !CONFIG_KEYS.contains(&key) {
            return Err(Error::Usage(format!(
                "config line {}: unknown key {key:?}",
                i + 1
            )));
        }
        args.push(format!("--{key}"));
        args.push(value.trim().to_string());
    }
    Ok(args)
}

fn usage(e: clap::Error) -> Error {
    Error::Usage(e.to_string().trim_end().to_string())
}

/// Parses command-line arguments (program name first). Options given on
/// the command line override those read from `--config`.
pub fn parse_config<I, T>(args: I) -> Result<RunConfig>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let first = Args::try_parse_from(&argv).map_err(usage)?;
    let parsed = match &first.config {
        None => first,
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| {
                Error::Usage(format!("--config: cannot read {}: {e}", path.display()))
            })?;
            let mut merged: Vec<OsString> = argv.iter().take(1).cloned().collect();
            merged.extend(config_file_args(&text)?.into_iter().map(OsString::from));
            merged.extend(argv.iter().skip(1).cloned());
            Args::try_parse_from(merged).map_err(usage)?
        }
    };
    let grid = match parsed.grid.parse::<GridKind>() {
        Ok(kind) => GridSource::Named(kind),
        Err(_) => {
            let path = PathBuf::from(&parsed.grid);
            if !path.is_file() {
                return Err(Error::Usage(format!(
                    "--grid: {:?} is neither main, appendix_a, appendix_b nor a readable file",
                    parsed.grid
                )));
            }
            GridSource::File(path)
        }
    };
    let methods =
        parse_methods(&parsed.methods).map_err(|e| Error::Usage(format!("--methods: {e}")))?;
    let config = RunConfig {
        grid,
        methods,
        n_reps: parsed.reps,
        master_seed: parsed.seed,
        n: parsed.n,
        workers: parsed.workers,
        out_dir: parsed.out,
        emit_plots: parsed.plots,
        timing: parsed.timing,
    };
    config.validate()?;
    Ok(config)
}

/// Executes a configuration. Returns the process exit code: 0 on success,
/// 2 when some estimator fits failed, 1 on a fatal error.
pub fn run(config: &RunConfig) -> i32 {
    match execute(config) {
        Ok(failures) if failures > 0 => {
            eprintln!("spconf: {failures} estimator fits failed; see the failed column of replications.csv");
            EXIT_PARTIAL
        }
        Ok(_) => EXIT_OK,
        Err(e) => {
            eprintln!("spconf: {e}");
            EXIT_FATAL
        }
    }
}

fn execute(config: &RunConfig) -> Result<usize> {
    let scenarios = config.validate()?;
    let jobs: Vec<Job> = scenarios
        .iter()
        .map(|s| Job {
            scenario: s.clone(),
            methods: config.methods.clone(),
        })
        .collect();
    let records = run_grid(&jobs, &config.run_options())?;
    let rows = summarize(&jobs, &records);
    fs::create_dir_all(&config.out_dir)?;
    let rep_path = config.out_dir.join("replications.csv");
    write_replications(
        BufWriter::new(fs::File::create(&rep_path)?),
        &scenarios,
        &records,
    )?;
    let sum_path = config.out_dir.join("summary.csv");
    write_summary(BufWriter::new(fs::File::create(&sum_path)?), &rows)?;
    println!("wrote {} ({} rows)", rep_path.display(), records.len());
    println!("wrote {} ({} rows)", sum_path.display(), rows.len());
    if config.emit_plots {
        for p in write_figures(&config.out_dir, &scenarios, &rows)? {
            println!("wrote {}", p.display());
        }
    }
    Ok(records.iter().filter(|r| r.failed).count())
}

/// Entry point used by the binary.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = args.into_iter().map(Into::into).collect();
    match Args::try_parse_from(&argv) {
        Err(e)
            if matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            ) =>
        {
            let _ = e.print();
            return EXIT_OK;
        }
        _ => {}
    }
    match parse_config(argv) {
        Ok(cfg) => run(&cfg),
        Err(e) => {
            eprintln!("spconf: {e}");
            EXIT_FATAL
        }
    }
}

/// Help text, for documentation.
pub fn help() -> String {
    Args::command().render_long_help().to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Result<RunConfig> {
        let mut v = vec!["spconf"];
        v.extend_from_slice(args);
        parse_config(v)
    }

    #[test]
    fn documented_invocations() {
        let c = parse(&[
            "--grid",
            "main",
            "--methods",
            "NS,PS:K=500,E-PS:K=500",
            "--reps",
            "100",
            "--seed",
            "42",
        ])
        .unwrap();
        assert_eq!(c.grid, GridSource::Named(GridKind::Main));
        assert_eq!(c.methods.len(), 3);
        assert_eq!((c.n_reps, c.master_seed), (100, 42));
        let c = parse(&["--grid", "appendix_b", "--methods", "E-PS:K=500:probit"]).unwrap();
        assert_eq!(c.methods[0].to_string(), "E-PS:K=500:probit");
    }

    #[test]
    fn basis_larger_than_n_rejected() {
        let e = parse(&["--methods", "F-DF:999999"]).unwrap_err();
        assert!(e.to_string().contains("--methods"), "{e}");
        assert!(parse(&["--methods", "PS:K=500", "--n", "300"]).is_err());
    }

    #[test]
    fn bad_flags_named() {
        let e = parse(&["--bogus", "1"]).unwrap_err();
        assert!(e.to_string().contains("--bogus"));
        assert!(parse(&["--reps", "0"])
            .unwrap_err()
            .to_string()
            .contains("--reps"));
        assert!(parse(&["--grid", "nowhere"])
            .unwrap_err()
            .to_string()
            .contains("--grid"));
    }

    #[test]
    fn config_file_and_override() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        fs::write(
            &path,
            "# desk run\ngrid = appendix_a\nreps = 7\nplots = true\nworkers = 3\n",
        )
        .unwrap();
        let c = parse(&["--config", path.to_str().unwrap(), "--reps", "9"]).unwrap();
        assert_eq!(c.grid, GridSource::Named(GridKind::AppendixA));
        assert_eq!(c.n_reps, 9);
        assert_eq!(c.workers, 3);
        assert!(c.emit_plots);
        fs::write(&path, "colour = red\n").unwrap();
        let e = parse(&["--config", path.to_str().unwrap()]).unwrap_err();
        assert!(e.to_string().contains("colour"));
    }

    #[test]
    fn boolean_flags() {
        assert!(parse(&["--plots"]).unwrap().emit_plots);
        assert!(!parse(&["--plots", "false"]).unwrap().emit_plots);
        assert!(!parse(&[]).unwrap().timing);
    }

    #[test]
    fn custom_grid_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("grid.csv");
        fs::write(
            &path,
            "c1,NA,0.5,0.04,0.6,NA,1.5,3,1,0,9,0.5,0.5,continuous\n",
        )
        .unwrap();
        let c = parse(&[
            "--grid",
            path.to_str().unwrap(),
            "--n",
            "300",
            "--methods",
            "NS",
        ])
        .unwrap();
        let s = c.scenarios().unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].n, 300);
    }

    #[test]
    fn help_mentions_flags() {
        let h = help();
        for k in CONFIG_KEYS {
            assert!(h.contains(&format!("--{k}")), "{k}");
        }
    }
}
