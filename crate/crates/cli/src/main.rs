//! `slopecls table` and `slopecls rate`.
//!
//! Exit codes: 0 on success, 2 on configuration errors, 3 when a solver
//! diverges, 1 for anything else (I/O).

mod config;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use slopecls::experiments::{
    emit_report, run_rate_check, run_table, GridPoint, RateConfig, TableConfig,
};

use config::{ConfigError, RunArgs, RATE_DEFAULTS, TABLE_DEFAULTS};

#[derive(Debug, Parser)]
#[command(name = "slopecls", version, about = "Sparse classifier benchmarks on synthetic Gaussian data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compare L1, L2 and Slope estimators for SVM and logistic regression
    Table(RunArgs),
    /// Fit the log-log slope of estimation error against (k*/n) log(p/k*)
    Rate(RunArgs),
}

enum Failure {
    Config(String),
    Divergence(String),
    Other(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<slopecls::Error> for Failure {
    fn from(e: slopecls::Error) -> Self {
        use slopecls::Error as E;
        match e {
            E::Divergence { .. } | E::ZeroLipschitz => Failure::Divergence(e.to_string()),
            E::Config(_) | E::InvalidWeights(_) | E::DegenerateRegression(_) | E::Domain(_) => {
                Failure::Config(e.to_string())
            }
            E::DimensionMismatch { .. } | E::Io(_) | E::Csv(_) => Failure::Other(e.to_string()),
        }
    }
}

fn table(args: &RunArgs) -> Result<(), Failure> {
    let s = args.resolve(&TABLE_DEFAULTS)?;
    let cfg = TableConfig {
        spec: s.spec,
        replications: s.replications,
        methods: s.methods,
        losses: s.losses,
        path: s.path,
    };
    let report = run_table(&cfg)?;
    emit_report(&report, s.format, &s.out)?;
    Ok(())
}

fn rate(args: &RunArgs) -> Result<(), Failure> {
    let s = args.resolve(&RATE_DEFAULTS)?;
    let [method] = s.methods[..] else {
        return Err(Failure::Config("rate takes exactly one method".into()));
    };
    let [loss] = s.losses[..] else {
        return Err(Failure::Config("rate takes exactly one loss".into()));
    };
    let grid = s
        .ns
        .iter()
        .map(|&n| GridPoint { n, p: s.spec.p, k_star: s.spec.k_star })
        .collect();
    let cfg = RateConfig {
        base: s.spec,
        grid,
        replications: s.replications,
        loss,
        method,
        path: s.path,
    };
    let report = run_rate_check(&cfg)?;
    emit_report(&report, s.format, &s.out)?;
    Ok(())
}

fn run(cli: &Cli) -> u8 {
    let outcome = match &cli.command {
        Command::Table(args) => table(args),
        Command::Rate(args) => rate(args),
    };
    let (code, msg) = match outcome {
        Ok(()) => return 0,
        Err(Failure::Config(msg)) => (2, msg),
        Err(Failure::Divergence(msg)) => (3, msg),
        Err(Failure::Other(msg)) => (1, msg),
    };
    eprintln!("error: {msg}");
    code
}

fn main() -> ExitCode {
    ExitCode::from(run(&Cli::parse()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::Path;

    const SMALL: &[&str] = &[
        "--n", "20", "--p", "30", "--k-star", "3", "--seed", "5", "--replications", "2", "--grid-size", "6",
        "--val-size", "100", "--test-size", "100",
    ];

    fn invoke(sub: &str, extra: &[&str], out: &Path) -> u8 {
        let mut argv = vec!["slopecls", sub];
        argv.extend_from_slice(SMALL);
        argv.extend_from_slice(extra);
        argv.push("--out");
        argv.push(out.to_str().unwrap());
        run(&Cli::try_parse_from(argv).unwrap())
    }

    #[test]
    fn table_writes_csv_with_documented_header() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("t.csv");
        assert_eq!(invoke("table", &["--methods", "l1,slope", "--losses", "svm"], &out), 0);
        let text = std::fs::read_to_string(&out).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "method,loss,n,p,k_star,rho,replication,aggregate,l2_estimation_error,misclassification,selected_eta,degenerate,l2e_stderr,misc_stderr"
        );
        // 2 methods x 1 loss x 2 replications, plus one aggregate per pair
        assert_eq!(lines.count(), 6);
    }

    #[test]
    fn markdown_format() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("t.md");
        assert_eq!(invoke("table", &["--methods", "slope", "--format", "markdown"], &out), 0);
        let text = std::fs::read_to_string(&out).unwrap();
        assert!(text.contains("| Slope SVM |"), "{text}");
        assert!(text.contains("| Slope LR |"), "{text}");
    }

    #[test]
    fn config_file_is_overridden_by_flags() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.toml");
        std::fs::write(&cfg, "methods = [\"l2\"]\nlosses = [\"logreg\"]\nrho = 0.0\n").unwrap();
        let out = dir.path().join("t.csv");
        assert_eq!(invoke("table", &["--config", cfg.to_str().unwrap(), "--methods", "l1"], &out), 0);
        let text = std::fs::read_to_string(&out).unwrap();
        for line in text.lines().skip(1) {
            assert!(line.starts_with("l1,logreg,20,30,3,0,"), "{line}");
        }
    }

    #[test]
    fn configuration_errors_exit_with_code_2() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("x.csv");
        let cases: &[&[&str]] = &[
            &["--methods", "lasso"],
            &["--rho", "1.5"],
            &["--tau", "0"],
            &["--losses", "quantile"],
            &["--t-max", "0"],
            &["--format", "html"],
        ];
        for extra in cases {
            assert_eq!(invoke("table", extra, &out), 2, "{extra:?}");
        }
        let missing = dir.path().join("missing.toml");
        assert_eq!(invoke("table", &["--config", missing.to_str().unwrap()], &out), 2);
    }

    #[test]
    fn rate_rejects_degenerate_grid_and_multiple_methods() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("r.csv");
        assert_eq!(invoke("rate", &["--ns", "40,40,80"], &out), 2);
        assert!(!out.exists());
        assert_eq!(invoke("rate", &["--methods", "l1,slope", "--ns", "20,40,60,80"], &out), 2);
    }

    #[test]
    fn rate_writes_one_row_per_grid_point() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("r.csv");
        assert_eq!(invoke("rate", &["--ns", "20,40,60,80"], &out), 0);
        let text = std::fs::read_to_string(&out).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "method,loss,n,p,k_star,rate,replications,mean_l2_estimation_error,l2e_stderr,slope,slope_stderr"
        );
        assert_eq!(lines.count(), 4);
    }

    #[test]
    fn error_kinds_map_to_exit_codes() {
        let code = |e: slopecls::Error| match Failure::from(e) {
            Failure::Config(_) => 2,
            Failure::Divergence(_) => 3,
            Failure::Other(_) => 1,
        };
        assert_eq!(code(slopecls::Error::Divergence { iteration: 4 }), 3);
        assert_eq!(code(slopecls::Error::ZeroLipschitz), 3);
        assert_eq!(code(slopecls::Error::Config("x".into())), 2);
        assert_eq!(code(slopecls::Error::DegenerateRegression("x".into())), 2);
    }
}
