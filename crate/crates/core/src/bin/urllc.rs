use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use urllc::channel_model::{build_f_table, FTable, DEFAULT_BINS, DEFAULT_Z_MAX};
use urllc::cli::{
    emit_config, emit_fairness, format_summary, parse_config, run_sweep, SweepSpec, SweptParameter,
    Variant,
};
use urllc::pilot_scheduler::PilotPolicy;
use urllc::simulator::{run_simulation, SimConfig};
use urllc::{Error, Result};

#[derive(Parser)]
#[command(name = "urllc", version, about = "URLLC uplink allocation simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration and print a summary.
    Run {
        #[command(flatten)]
        config: ConfigArgs,
        /// Print the effective configuration instead of running.
        #[arg(long)]
        print_config: bool,
    },
    /// Sweep one parameter and write plot-ready CSV.
    Sweep {
        #[command(flatten)]
        config: ConfigArgs,
        /// eta | W | gamma | N
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        /// Comma-separated `allocator[:policy]` combinations.
        #[arg(long, value_delimiter = ',', default_value = "gba,bca")]
        variants: Vec<String>,
        /// GBA computational delay per N, e.g. `100:2,150:3`.
        #[arg(long, value_delimiter = ',')]
        w_by_n: Vec<String>,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Served fraction per distance bin for several pilot policies.
    Fairness {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, value_delimiter = ',', default_value = "round-robin,dynamic")]
        policies: Vec<String>,
        #[arg(long, default_value_t = 10)]
        bins: usize,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Build a quantile table and write it as text.
    Ftable {
        #[arg(long, default_value_t = 0.95)]
        gamma: f64,
        #[arg(long, default_value_t = 0.99999)]
        rho: f64,
        #[arg(long, default_value_t = DEFAULT_BINS)]
        bins: usize,
        #[arg(long, default_value_t = DEFAULT_Z_MAX)]
        z_max: f64,
        /// Defaults to an age range where the no-CSI fallback is accurate.
        #[arg(long)]
        max_age: Option<u32>,
        #[arg(long, short)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct ConfigArgs {
    /// key = value config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Extra `key=value` settings, applied after the file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    eta: Option<String>,
    #[arg(long = "W")]
    w: Option<String>,
    #[arg(long)]
    allocator: Option<String>,
    #[arg(long)]
    pilot_policy: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Check every allocation with the schedule validator.
    #[arg(long)]
    validate: bool,
}

impl ConfigArgs {
    fn load(&self) -> Result<SimConfig> {
        let mut overrides = Vec::new();
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::config(kv.as_str(), "expected KEY=VALUE"))?;
            overrides.push((k.trim().to_string(), v.trim().to_string()));
        }
        let flags = [
            ("eta", &self.eta),
            ("W", &self.w),
            ("allocator", &self.allocator),
            ("pilot_policy", &self.pilot_policy),
            ("seed", &self.seed),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                overrides.push((k.to_string(), v.clone()));
            }
        }
        if self.validate {
            overrides.push(("validate".into(), "true".into()));
        }
        parse_config(self.config.as_deref(), &overrides)
    }
}

fn parse_w_by_n(items: &[String]) -> Result<BTreeMap<usize, u32>> {
    items
        .iter()
        .map(|item| {
            let bad = || Error::config("w_by_n", format!("expected N:W, got `{item}`"));
            let (n, w) = item.split_once(':').ok_or_else(bad)?;
            Ok((
                n.trim().parse().map_err(|_| bad())?,
                w.trim().parse().map_err(|_| bad())?,
            ))
        })
        .collect()
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            config,
            print_config,
        } => {
            let cfg = config.load()?;
            if print_config {
                print!("{}", emit_config(&cfg));
                return Ok(());
            }
            let m = run_simulation(&cfg)?;
            print!("{}", format_summary(&cfg, &m));
        }
        Command::Sweep {
            config,
            param,
            values,
            variants,
            w_by_n,
            out,
        } => {
            let spec = SweepSpec {
                base: config.load()?,
                parameter: param.parse::<SweptParameter>()?,
                values,
                variants: variants
                    .iter()
                    .map(|v| v.parse::<Variant>())
                    .collect::<Result<_>>()?,
                gba_w_by_n: parse_w_by_n(&w_by_n)?,
                output_path: out,
            };
            let rows = run_sweep(&spec)?;
            for r in rows {
                println!(
                    "{}={} {}:{} W={} served {:.4} +- {:.4}",
                    r.parameter,
                    r.value,
                    r.allocator,
                    r.pilot_policy,
                    r.w,
                    r.metrics.fraction_served_mean,
                    r.metrics.fraction_served_std
                );
            }
        }
        Command::Fairness {
            config,
            policies,
            bins,
            out,
        } => {
            let base = config.load()?;
            let mut series = Vec::new();
            for p in &policies {
                let policy: PilotPolicy = p.parse()?;
                let cfg = SimConfig {
                    pilot_policy: policy,
                    fairness_bins: bins,
                    ..base.clone()
                };
                let m = run_simulation(&cfg)?;
                println!(
                    "{}:{} served {:.4}",
                    cfg.allocator, policy, m.fraction_served_mean
                );
                series.push((
                    format!("{}:{}", cfg.allocator, policy),
                    m.served_by_distance,
                ));
            }
            emit_fairness(&series, &out)?;
        }
        Command::Ftable {
            gamma,
            rho,
            bins,
            z_max,
            max_age,
            out,
        } => {
            let max_age = max_age.unwrap_or_else(|| FTable::suggested_max_age(gamma, z_max));
            let table = build_f_table(gamma, rho, bins, z_max, max_age)?;
            if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).map_err(|source| Error::Io {
                    path: dir.to_path_buf(),
                    source,
                })?;
            }
            table.save(&out)?;
            println!(
                "wrote {} ages x {} bins to {}",
                max_age,
                bins + 1,
                out.display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
