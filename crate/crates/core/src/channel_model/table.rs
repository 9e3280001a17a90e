use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use rayon::prelude::*;

use super::check_gamma;
use super::conditional::{gm_params, inverse_conditional_cdf, QuantileSource};
use crate::error::{Error, Result};

pub const DEFAULT_BINS: usize = 64;
pub const DEFAULT_Z_MAX: f64 = 8.0;
pub const DEFAULT_MAX_AGE: u32 = 50;

const HEADER: &str = "gamma,rho,n_bins,z_max,max_age";
const ROW_HEADER: &str = "t,bin,value";

/// Offline table of outage quantiles `F_t^{-1}(1 - rho | z)`.
///
/// Rows are CSI ages `1..=max_age`. Columns are `n_bins` uniform bins on
/// `[0, z_max)`, represented by their midpoints, plus one overflow bin for
/// `z >= z_max` that is evaluated at `z_max` itself. Ages past `max_age`
/// fall back to the no-CSI quantile `-ln(rho)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FTable {
    gamma: f64,
    rho: f64,
    n_bins: usize,
    z_max: f64,
    max_age: u32,
    entries: Vec<f64>,
}

pub fn build_f_table(
    gamma: f64,
    rho: f64,
    n_bins: usize,
    z_max: f64,
    max_age: u32,
) -> Result<FTable> {
    check_gamma(gamma)?;
    check_layout(rho, n_bins, z_max, max_age)?;
    let skeleton = FTable {
        gamma,
        rho,
        n_bins,
        z_max,
        max_age,
        entries: Vec::new(),
    };
    let cols = n_bins + 1;
    let rows: Vec<Vec<f64>> = (1..=max_age)
        .into_par_iter()
        .map(|t| {
            let params = gm_params(gamma, t)?;
            (0..cols)
                .map(|r| inverse_conditional_cdf(1.0 - rho, skeleton.bin_value(r), &params))
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(FTable {
        entries: rows.concat(),
        ..skeleton
    })
}

fn check_layout(rho: f64, n_bins: usize, z_max: f64, max_age: u32) -> Result<()> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::param(
            "rho",
            format!("must lie in (0, 1), got {rho}"),
        ));
    }
    if n_bins < 2 {
        return Err(Error::param("n_bins", "need at least two bins"));
    }
    if !(z_max > 0.0 && z_max.is_finite()) {
        return Err(Error::param(
            "z_max",
            format!("must be positive, got {z_max}"),
        ));
    }
    if max_age < 1 {
        return Err(Error::param("max_age", "need at least one age row"));
    }
    Ok(())
}

impl FTable {
    /// Table with the default quantization (64 bins on [0, 8], 50 ages).
    pub fn with_defaults(gamma: f64, rho: f64) -> Result<Self> {
        build_f_table(gamma, rho, DEFAULT_BINS, DEFAULT_Z_MAX, DEFAULT_MAX_AGE)
    }

    /// Smallest age range for which the no-CSI fallback is harmless: rows
    /// continue until `gamma^(2t) z_max` drops below 1e-3, never fewer than
    /// the default 50 and capped at 1000.
    pub fn suggested_max_age(gamma: f64, z_max: f64) -> u32 {
        if gamma <= 0.0 {
            return DEFAULT_MAX_AGE;
        }
        let t = (1e-3 / z_max).ln() / (2.0 * gamma.ln());
        (t.ceil() as u32).clamp(DEFAULT_MAX_AGE, 1000)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn z_max(&self) -> f64 {
        self.z_max
    }

    pub fn max_age(&self) -> u32 {
        self.max_age
    }

    fn width(&self) -> f64 {
        self.z_max / self.n_bins as f64
    }

    /// Column holding `z`; `n_bins` is the overflow column.
    pub fn bin_of(&self, z: f64) -> usize {
        if z >= self.z_max {
            return self.n_bins;
        }
        ((z.max(0.0) / self.width()) as usize).min(self.n_bins - 1)
    }

    /// Representative measured power of column `r`.
    pub fn bin_value(&self, r: usize) -> f64 {
        if r >= self.n_bins {
            self.z_max
        } else {
            (r as f64 + 0.5) * self.width()
        }
    }

    /// Raw entry for age `t` in `1..=max_age` and column `r`.
    pub fn entry(&self, t: u32, r: usize) -> f64 {
        assert!((1..=self.max_age).contains(&t), "age {t} outside table");
        self.entries[(t as usize - 1) * (self.n_bins + 1) + r]
    }

    /// Table lookup; never fails.
    pub fn lookup(&self, age: u32, z: f64) -> f64 {
        if age > self.max_age {
            return -self.rho.ln();
        }
        self.entry(age.max(1), self.bin_of(z))
    }

    pub fn write_text<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{HEADER}")?;
        writeln!(
            w,
            "{},{},{},{},{}",
            self.gamma, self.rho, self.n_bins, self.z_max, self.max_age
        )?;
        writeln!(w, "{ROW_HEADER}")?;
        for t in 1..=self.max_age {
            for r in 0..=self.n_bins {
                writeln!(w, "{t},{r},{}", self.entry(t, r))?;
            }
        }
        w.flush()
    }

    pub fn read_text<R: Read>(r: R) -> Result<Self> {
        let mut lines = BufReader::new(r).lines().enumerate();
        let mut next_line = |what: &str| -> Result<(usize, String)> {
            match lines.next() {
                Some((i, Ok(l))) => Ok((i + 1, l)),
                Some((i, Err(e))) => Err(Error::Format {
                    line: i + 1,
                    reason: e.to_string(),
                }),
                None => Err(Error::Format {
                    line: 0,
                    reason: format!("unexpected end of input, expected {what}"),
                }),
            }
        };
        let bad = |line: usize, reason: String| Error::Format { line, reason };

        let (ln, header) = next_line("header")?;
        if header.trim() != HEADER {
            return Err(bad(ln, format!("expected `{HEADER}`")));
        }
        let (ln, meta) = next_line("table parameters")?;
        let fields: Vec<&str> = meta.trim().split(',').collect();
        if fields.len() != 5 {
            return Err(bad(ln, "expected five comma-separated parameters".into()));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|e| bad(ln, format!("`{s}`: {e}")));
        let int = |s: &str| s.parse::<u64>().map_err(|e| bad(ln, format!("`{s}`: {e}")));
        let gamma = num(fields[0])?;
        let rho = num(fields[1])?;
        let n_bins = int(fields[2])? as usize;
        let z_max = num(fields[3])?;
        let max_age = int(fields[4])? as u32;
        check_gamma(gamma)?;
        check_layout(rho, n_bins, z_max, max_age)?;

        let (ln, rows) = next_line("row header")?;
        if rows.trim() != ROW_HEADER {
            return Err(bad(ln, format!("expected `{ROW_HEADER}`")));
        }
        let cols = n_bins + 1;
        let mut entries = vec![f64::NAN; max_age as usize * cols];
        for _ in 0..entries.len() {
            let (ln, row) = next_line("table row")?;
            let parts: Vec<&str> = row.trim().split(',').collect();
            if parts.len() != 3 {
                return Err(bad(ln, "expected `t,bin,value`".into()));
            }
            let t: u32 = parts[0].parse().map_err(|_| bad(ln, "bad age".into()))?;
            let r: usize = parts[1].parse().map_err(|_| bad(ln, "bad bin".into()))?;
            let v: f64 = parts[2].parse().map_err(|_| bad(ln, "bad value".into()))?;
            if !(1..=max_age).contains(&t) || r >= cols {
                return Err(bad(ln, format!("cell ({t}, {r}) outside the table")));
            }
            if !(v > 0.0) {
                return Err(bad(ln, format!("entry must be positive, got {v}")));
            }
            let slot = &mut entries[(t as usize - 1) * cols + r];
            if !slot.is_nan() {
                return Err(bad(ln, format!("duplicate cell ({t}, {r})")));
            }
            *slot = v;
        }
        Ok(FTable {
            gamma,
            rho,
            n_bins,
            z_max,
            max_age,
            entries,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let io = |source| Error::Io {
            path: path.to_path_buf(),
            source,
        };
        let f = File::create(path).map_err(io)?;
        self.write_text(BufWriter::new(f)).map_err(io)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = File::open(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::read_text(f)
    }
}

impl QuantileSource for FTable {
    fn gamma(&self) -> f64 {
        self.gamma
    }

    fn rho(&self) -> f64 {
        self.rho
    }

    fn quantile(&self, age: u32, z: f64) -> Result<f64> {
        Ok(self.lookup(age, z))
    }
}
