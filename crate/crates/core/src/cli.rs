//! Configuration files, parameter sweeps and CSV output.
//!
//! Configs are flat `key = value` text; `#` starts a comment. Every key of
//! [`SimConfig`] is settable and unset keys keep their defaults.
//!
//! Sweep CSV columns, in order:
//! `parameter,value,allocator,pilot_policy,W,fraction_served_mean,`
//! `fraction_served_std,rus_per_served_device,alloc_ms_mean,`
//! `decode_failure_rate,transmissions,schedule_violations`.
//!
//! Fairness CSV columns: `label,bin_center_m,bin_lo_m,bin_hi_m,devices,served_fraction`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::pilot_scheduler::PilotPolicy;
use crate::simulator::{run_simulation, AllocatorKind, DistanceBin, Metrics, SimConfig};

/// Config keys in emission order.
pub const CONFIG_KEYS: &[&str] = &[
    "N",
    "C",
    "T",
    "delta",
    "eta",
    "W",
    "gamma",
    "rho",
    "L",
    "alpha",
    "gamma_T_db",
    "ell",
    "tau",
    "B",
    "Y_M",
    "n_cycles",
    "n_topologies",
    "seed",
    "pilot_policy",
    "pilot_threshold",
    "allocator",
    "n_c",
    "n_t",
    "redraw_interference",
    "validate",
    "fairness_bins",
    "timing_repeats",
];

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::config(key, format!("cannot parse `{value}`")))
}

/// Set one field from its textual value.
pub fn apply_setting(cfg: &mut SimConfig, key: &str, value: &str) -> Result<()> {
    let v = value.trim();
    match key {
        "N" => cfg.n_devices = parse_value(key, v)?,
        "C" => cfg.channels = parse_value(key, v)?,
        "T" => cfg.slots = parse_value(key, v)?,
        "delta" => cfg.delta = parse_value(key, v)?,
        "eta" => cfg.eta = parse_value(key, v)?,
        "W" => cfg.w = parse_value(key, v)?,
        "gamma" => cfg.gamma = parse_value(key, v)?,
        "rho" => cfg.rho = parse_value(key, v)?,
        "L" => cfg.radius_m = parse_value(key, v)?,
        "alpha" => cfg.alpha = parse_value(key, v)?,
        "gamma_T_db" => cfg.gamma_t_db = parse_value(key, v)?,
        "ell" => cfg.ell = parse_value(key, v)?,
        "tau" => cfg.slot_s = parse_value(key, v)?,
        "B" => cfg.bandwidth_hz = parse_value(key, v)?,
        "Y_M" => cfg.y_max = parse_value(key, v)?,
        "n_cycles" => cfg.n_cycles = parse_value(key, v)?,
        "n_topologies" => cfg.n_topologies = parse_value(key, v)?,
        "seed" => cfg.seed = parse_value(key, v)?,
        "pilot_policy" => {
            cfg.pilot_policy =
                PilotPolicy::from_str(v).map_err(|e| Error::config(key, e.to_string()))?
        }
        "pilot_threshold" => cfg.pilot_threshold_m = parse_value(key, v)?,
        "allocator" => cfg.allocator = AllocatorKind::from_str(v)?,
        "n_c" => cfg.n_c = parse_value(key, v)?,
        "n_t" => cfg.n_t = parse_value(key, v)?,
        "redraw_interference" => cfg.redraw_interference = parse_value(key, v)?,
        "validate" => cfg.validate = parse_value(key, v)?,
        "fairness_bins" => cfg.fairness_bins = parse_value(key, v)?,
        "timing_repeats" => cfg.timing_repeats = parse_value(key, v)?,
        other => return Err(Error::config(other, "unknown key")),
    }
    Ok(())
}

/// Parse config text on top of the defaults, apply `overrides` in order,
/// then validate.
pub fn parse_config_str(text: &str, overrides: &[(String, String)]) -> Result<SimConfig> {
    let mut cfg = SimConfig::default();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Format {
            line: n + 1,
            reason: format!("expected `key = value`, got `{line}`"),
        })?;
        apply_setting(&mut cfg, key.trim(), value)?;
    }
    for (key, value) in overrides {
        apply_setting(&mut cfg, key, value)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Read a config file (or start from defaults when `path` is `None`).
pub fn parse_config(path: Option<&Path>, overrides: &[(String, String)]) -> Result<SimConfig> {
    let text = match path {
        Some(p) => fs::read_to_string(p).map_err(|source| Error::Io {
            path: p.to_path_buf(),
            source,
        })?,
        None => String::new(),
    };
    parse_config_str(&text, overrides)
}

/// Config text that parses back to `cfg`.
pub fn emit_config(cfg: &SimConfig) -> String {
    let mut out = String::new();
    for key in CONFIG_KEYS {
        let value = match *key {
            "N" => cfg.n_devices.to_string(),
            "C" => cfg.channels.to_string(),
            "T" => cfg.slots.to_string(),
            "delta" => cfg.delta.to_string(),
            "eta" => cfg.eta.to_string(),
            "W" => cfg.w.to_string(),
            "gamma" => cfg.gamma.to_string(),
            "rho" => cfg.rho.to_string(),
            "L" => cfg.radius_m.to_string(),
            "alpha" => cfg.alpha.to_string(),
            "gamma_T_db" => cfg.gamma_t_db.to_string(),
            "ell" => cfg.ell.to_string(),
            "tau" => cfg.slot_s.to_string(),
            "B" => cfg.bandwidth_hz.to_string(),
            "Y_M" => cfg.y_max.to_string(),
            "n_cycles" => cfg.n_cycles.to_string(),
            "n_topologies" => cfg.n_topologies.to_string(),
            "seed" => cfg.seed.to_string(),
            "pilot_policy" => cfg.pilot_policy.to_string(),
            "pilot_threshold" => cfg.pilot_threshold_m.to_string(),
            "allocator" => cfg.allocator.to_string(),
            "n_c" => cfg.n_c.to_string(),
            "n_t" => cfg.n_t.to_string(),
            "redraw_interference" => cfg.redraw_interference.to_string(),
            "validate" => cfg.validate.to_string(),
            "fairness_bins" => cfg.fairness_bins.to_string(),
            "timing_repeats" => cfg.timing_repeats.to_string(),
            _ => unreachable!("key list and emitter out of sync"),
        };
        let _ = writeln!(out, "{key} = {value}");
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweptParameter {
    Eta,
    W,
    Gamma,
    N,
}

impl SweptParameter {
    pub fn name(&self) -> &'static str {
        match self {
            SweptParameter::Eta => "eta",
            SweptParameter::W => "W",
            SweptParameter::Gamma => "gamma",
            SweptParameter::N => "N",
        }
    }

    fn apply(&self, cfg: &mut SimConfig, value: f64) -> Result<()> {
        let integral = |v: f64| {
            if v >= 0.0 && v.fract() == 0.0 {
                Ok(v)
            } else {
                Err(Error::config(
                    self.name(),
                    format!("`{v}` is not a non-negative integer"),
                ))
            }
        };
        match self {
            SweptParameter::Eta => cfg.eta = value,
            SweptParameter::Gamma => cfg.gamma = value,
            SweptParameter::W => cfg.w = integral(value)? as u32,
            SweptParameter::N => cfg.n_devices = integral(value)? as usize,
        }
        Ok(())
    }
}

impl FromStr for SweptParameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "eta" => Ok(SweptParameter::Eta),
            "W" => Ok(SweptParameter::W),
            "gamma" => Ok(SweptParameter::Gamma),
            "N" => Ok(SweptParameter::N),
            other => Err(Error::config(
                "parameter",
                format!("cannot sweep `{other}` (eta | W | gamma | N)"),
            )),
        }
    }
}

/// One allocator / pilot policy combination evaluated at every sweep point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Variant {
    pub allocator: AllocatorKind,
    pub pilot_policy: PilotPolicy,
}

impl FromStr for Variant {
    type Err = Error;

    /// `allocator` or `allocator:policy`, e.g. `gba:dynamic`.
    fn from_str(s: &str) -> Result<Self> {
        let (a, p) = s.split_once(':').unwrap_or((s, "round-robin"));
        Ok(Variant {
            allocator: a.parse()?,
            pilot_policy: p
                .parse()
                .map_err(|e: Error| Error::config("variant", e.to_string()))?,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub base: SimConfig,
    pub parameter: SweptParameter,
    pub values: Vec<f64>,
    pub variants: Vec<Variant>,
    /// Per-N computational delay for GBA when sweeping N, modeling its
    /// longer running time; BCA keeps the base W.
    pub gba_w_by_n: BTreeMap<usize, u32>,
    pub output_path: PathBuf,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub parameter: &'static str,
    pub value: f64,
    pub allocator: AllocatorKind,
    pub pilot_policy: PilotPolicy,
    pub w: u32,
    pub metrics: Metrics,
}

pub const SWEEP_COLUMNS: &[&str] = &[
    "parameter",
    "value",
    "allocator",
    "pilot_policy",
    "W",
    "fraction_served_mean",
    "fraction_served_std",
    "rus_per_served_device",
    "alloc_ms_mean",
    "decode_failure_rate",
    "transmissions",
    "schedule_violations",
];

impl SweepSpec {
    /// Configuration of one sweep point; rejects values that do not yield
    /// a valid config.
    pub fn config_for(&self, value: f64, variant: &Variant) -> Result<SimConfig> {
        let mut cfg = self.base.clone();
        cfg.allocator = variant.allocator;
        cfg.pilot_policy = variant.pilot_policy;
        self.parameter.apply(&mut cfg, value)?;
        if self.parameter == SweptParameter::N && variant.allocator == AllocatorKind::Gba {
            if let Some(&w) = self.gba_w_by_n.get(&cfg.n_devices) {
                cfg.w = w;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::config("values", "sweep needs at least one value"));
        }
        if self.variants.is_empty() {
            return Err(Error::config(
                "variants",
                "sweep needs at least one variant",
            ));
        }
        for &v in &self.values {
            for variant in &self.variants {
                self.config_for(v, variant)?;
            }
        }
        Ok(())
    }
}

/// Run every (value, variant) point; rows are in value-major order.
pub fn sweep_rows(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let mut rows = Vec::new();
    for &value in &spec.values {
        for variant in &spec.variants {
            let cfg = spec.config_for(value, variant)?;
            rows.push(SweepRow {
                parameter: spec.parameter.name(),
                value,
                allocator: cfg.allocator,
                pilot_policy: cfg.pilot_policy,
                w: cfg.w,
                metrics: run_simulation(&cfg)?,
            });
        }
    }
    Ok(rows)
}

fn csv_error(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

pub fn write_sweep_csv(rows: &[SweepRow], path: &Path) -> Result<()> {
    let err = csv_error(path);
    let mut w = csv::Writer::from_path(path).map_err(&err)?;
    w.write_record(SWEEP_COLUMNS).map_err(&err)?;
    for r in rows {
        let m = &r.metrics;
        w.write_record([
            r.parameter.to_string(),
            r.value.to_string(),
            r.allocator.to_string(),
            r.pilot_policy.to_string(),
            r.w.to_string(),
            format!("{:.6}", m.fraction_served_mean),
            format!("{:.6}", m.fraction_served_std),
            format!("{:.4}", m.rus_per_served_device),
            format!("{:.4}", m.alloc_ms_mean),
            format!("{:.3e}", m.failure_rate()),
            m.transmissions.to_string(),
            m.schedule_violations.to_string(),
        ])
        .map_err(&err)?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Run the sweep and write its CSV to `spec.output_path`.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    let rows = sweep_rows(spec)?;
    write_sweep_csv(&rows, &spec.output_path)?;
    Ok(rows)
}

/// Fairness histograms, one labelled series per run.
pub fn emit_fairness(series: &[(String, Vec<DistanceBin>)], path: &Path) -> Result<()> {
    let err = csv_error(path);
    let mut w = csv::Writer::from_path(path).map_err(&err)?;
    w.write_record([
        "label",
        "bin_center_m",
        "bin_lo_m",
        "bin_hi_m",
        "devices",
        "served_fraction",
    ])
    .map_err(&err)?;
    for (label, bins) in series {
        for b in bins {
            w.write_record([
                label.clone(),
                format!("{:.3}", b.center()),
                format!("{:.3}", b.lo),
                format!("{:.3}", b.hi),
                b.devices.to_string(),
                b.fraction().map_or_else(String::new, |f| format!("{f:.6}")),
            ])
            .map_err(&err)?;
        }
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Human-readable run summary.
pub fn format_summary(cfg: &SimConfig, m: &Metrics) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "allocator            {}", cfg.allocator);
    let _ = writeln!(out, "pilot_policy         {}", cfg.pilot_policy);
    let _ = writeln!(out, "eta / W              {} / {}", cfg.eta, cfg.w);
    let _ = writeln!(
        out,
        "fraction_served      {:.4} +- {:.4}",
        m.fraction_served_mean, m.fraction_served_std
    );
    let _ = writeln!(out, "rus_per_served       {:.3}", m.rus_per_served_device);
    let _ = writeln!(
        out,
        "decode_failures      {} / {} ({:.2e})",
        m.reliability_violations,
        m.transmissions,
        m.failure_rate()
    );
    let _ = writeln!(out, "alloc_ms_mean        {:.4}", m.alloc_ms_mean);
    if cfg.validate {
        let _ = writeln!(out, "schedule_violations  {}", m.schedule_violations);
    }
    out
}
