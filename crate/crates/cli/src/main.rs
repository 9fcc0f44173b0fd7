//! `taylornet`: build, certify and sweep explicit ReLU / ReLU² approximation networks.

mod cases;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;
use taylornet::metrics::{loglog_slope, CsvRow};
use taylornet::targets::{catalog, catalog_ids};

use cases::{Kind, KINDS};
use config::{Config, Overrides};

#[derive(Parser)]
#[command(name = "taylornet", version, about = "Explicit ReLU / ReLU² networks for smooth functions, with certified Sobolev error bounds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a network, write it as JSON and print its size against the formulas.
    Build(Opts),
    /// Measure errors against the certified bounds; exits 1 if any check fails.
    Certify(Opts),
    /// Certify over a list of sizes and emit CSV plus plot data.
    Sweep(Opts),
    /// List catalog targets and primitive ids.
    Catalog(Opts),
}

#[derive(clap::Args)]
struct Opts {
    /// TOML file with the same keys as the flags (command line wins).
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
}

impl Opts {
    fn resolve(&self) -> Result<Config, String> {
        let file = config::load_file(self.config.as_deref())?;
        Ok(Config::resolve(&self.overrides, &file))
    }
}

#[derive(Serialize)]
struct RunReport<'a> {
    command: &'a str,
    config: &'a Config,
    config_hash: &'a str,
    entries: Vec<serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    slope: Option<f64>,
    pass: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Build(o) => o.resolve().and_then(|c| cmd_build(&c)),
        Command::Certify(o) => o.resolve().and_then(|c| cmd_certify(&c)),
        Command::Sweep(o) => o.resolve().and_then(|c| cmd_sweep(&c)),
        Command::Catalog(o) => o.resolve().and_then(|c| cmd_catalog(&c)),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn kind(cfg: &Config) -> Result<Kind, String> {
    cfg.function.parse()
}

fn cmd_build(cfg: &Config) -> Result<bool, String> {
    let kind = kind(cfg)?;
    let pairs = cfg.grid_pairs(2);
    output::ensure_dir(&cfg.out)?;
    let mut table = String::new();
    for &(n, l) in &pairs {
        let built = cases::build(kind, cfg, n, l).map_err(|e| e.to_string())?;
        let name = if pairs.len() == 1 { "network.json".to_string() } else { format!("network-N{n}-L{l}.json") };
        let json = built.network.to_json_pretty().map_err(|e| e.to_string())?;
        output::write_text(&cfg.out.join(&name), &json)?;
        table.push_str(&format!("# {} N={n} L={l} -> {name}\n", cases::label(kind, cfg)));
        table.push_str(&output::budget_table(&built.rows));
    }
    print!("{table}");
    output::write_text(&cfg.out.join("budget.txt"), &table)?;
    Ok(true)
}

fn run_all(kind: Kind, cfg: &Config, pairs: &[(u64, u64)], hash: &str) -> Result<(Vec<CsvRow>, Vec<serde_json::Value>), String> {
    let mut rows = Vec::new();
    let mut entries = Vec::new();
    for &(n, l) in pairs {
        let case = cases::run_case(kind, cfg, n, l, hash).map_err(|e| e.to_string())?;
        rows.extend(case.rows);
        entries.push(case.report);
    }
    Ok((rows, entries))
}

fn cmd_certify(cfg: &Config) -> Result<bool, String> {
    let kind = kind(cfg)?;
    let hash = cfg.hash();
    let (rows, entries) = run_all(kind, cfg, &cfg.grid_pairs(2), &hash)?;
    let pass = rows.iter().all(|r| r.pass);
    output::ensure_dir(&cfg.out)?;
    output::write_csv(&cfg.out.join("results.csv"), &rows)?;
    let report = RunReport { command: "certify", config: cfg, config_hash: &hash, entries, slope: None, pass };
    output::write_json(&cfg.out.join("report.json"), &report)?;
    print!("{}", output::results_table(&rows));
    println!("config {hash}; {}", if pass { "all checks pass" } else { "some checks FAIL" });
    Ok(pass)
}

fn cmd_sweep(cfg: &Config) -> Result<bool, String> {
    let kind = kind(cfg)?;
    let hash = cfg.hash();
    let pairs = cfg.zipped_pairs(&[1, 2, 3, 4])?;
    let (rows, entries) = run_all(kind, cfg, &pairs, &hash)?;
    let sup_rows: Vec<&CsvRow> = rows.iter().filter(|r| r.p == "inf").collect();
    let points: Vec<(f64, f64, f64)> = sup_rows.iter().map(|r| ((r.n * r.l) as f64, r.measured, r.bound)).collect();
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    let slope = loglog_slope(&xs, &ys);
    let pass = rows.iter().all(|r| r.pass);
    output::ensure_dir(&cfg.out)?;
    output::write_csv(&cfg.out.join("sweep.csv"), &rows)?;
    output::write_text(&cfg.out.join("plot.dat"), &output::plot_data(["NL", "measured", "bound"], &points))?;
    let report = RunReport { command: "sweep", config: cfg, config_hash: &hash, entries, slope, pass };
    output::write_json(&cfg.out.join("report.json"), &report)?;
    print!("{}", output::results_table(&rows));
    match slope {
        Some(s) => println!("log-log slope of measured error vs NL: {s:.3}"),
        None => println!("log-log slope: not enough positive points"),
    }
    Ok(pass)
}

fn cmd_catalog(cfg: &Config) -> Result<bool, String> {
    println!("targets (d = {}, s = {}):", cfg.d, cfg.s);
    let ids = catalog_ids(cfg.d);
    let width = ids.iter().map(String::len).max().unwrap_or(0);
    for f in catalog(cfg.d, cfg.s) {
        println!("  {:<width$}  bound {:.4}  scale {:.6}  [{}]", f.id, f.certified_bound, f.scale, f.derivation);
    }
    println!("functions:");
    for (id, _, about) in KINDS {
        println!("  {id:<16}  {about}");
    }
    Ok(true)
}
