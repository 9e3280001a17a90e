//! Cycle-level Monte Carlo driver.
//!
//! Every cycle each device issues one packet. At the end of cycle `m` the
//! access point knows the pilots received so far and computes the
//! allocation that takes effect in cycle `m + W`. Allocations for the
//! first `W` cycles are computed without CSI. Fading evolves once per
//! cycle; decoding uses the true fading power of the cycle in which the
//! packet is sent.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex, OnceLock};
use std::time::Instant;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::allocators::{bca_allocate, gba_allocate, CycleSchedule, Device};
use crate::channel_model::{
    build_f_table, FTable, FadingCoefficient, GaussMarkov, DEFAULT_BINS, DEFAULT_Z_MAX,
};
use crate::error::{Error, Result};
use crate::link_budget::{decode_success, ChannelInterference, LinkContext, LinkParams};
use crate::pilot_scheduler::{
    distance_threshold_select, dynamic_select, round_robin_select, CsiRecord, PilotPlan,
    PilotPolicy,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AllocatorKind {
    Gba,
    Bca,
}

impl AllocatorKind {
    pub fn name(&self) -> &'static str {
        match self {
            AllocatorKind::Gba => "gba",
            AllocatorKind::Bca => "bca",
        }
    }
}

impl fmt::Display for AllocatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AllocatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gba" => Ok(AllocatorKind::Gba),
            "bca" => Ok(AllocatorKind::Bca),
            other => Err(Error::config(
                "allocator",
                format!("unknown allocator `{other}` (gba | bca)"),
            )),
        }
    }
}

/// Full experiment parameterization. Defaults are the symmetric scenario:
/// 100 devices on 5 channels within 60 m, 50-slot cycles, 25-slot deadline.
#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub n_devices: usize,
    pub channels: usize,
    /// Slots per cycle `T`.
    pub slots: u32,
    /// Deadline `Delta` in slots.
    pub delta: u32,
    /// Fraction of each channel's slots reserved for pilots.
    pub eta: f64,
    /// Computational delay in cycles.
    pub w: u32,
    pub gamma: f64,
    pub rho: f64,
    /// Deployment radius `L` in meters.
    pub radius_m: f64,
    pub alpha: f64,
    pub gamma_t_db: f64,
    pub ell: u32,
    /// Slot duration `tau` in seconds.
    pub slot_s: f64,
    pub bandwidth_hz: f64,
    /// Interference factors are uniform on `[0, y_max]`.
    pub y_max: f64,
    pub n_cycles: u32,
    pub n_topologies: u32,
    pub seed: u64,
    pub pilot_policy: PilotPolicy,
    /// Distance threshold in meters for the distance-threshold policy.
    pub pilot_threshold_m: f64,
    pub allocator: AllocatorKind,
    /// Subcarriers per channel (informational).
    pub n_c: u32,
    /// Symbols per slot (informational).
    pub n_t: u32,
    /// Redraw the interference factors every cycle instead of per topology.
    pub redraw_interference: bool,
    /// Run the schedule validator on every allocation.
    pub validate: bool,
    pub fairness_bins: usize,
    /// Each allocation is timed this many times and the fastest run kept.
    pub timing_repeats: u32,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_devices: 100,
            channels: 5,
            slots: 50,
            delta: 25,
            eta: 0.4,
            w: 2,
            gamma: 0.95,
            rho: 0.99999,
            radius_m: 60.0,
            alpha: 3.0,
            gamma_t_db: 100.0,
            ell: 100,
            slot_s: 0.144e-3,
            bandwidth_hz: 180e3,
            y_max: 4.0,
            n_cycles: 30,
            n_topologies: 10,
            seed: 1,
            pilot_policy: PilotPolicy::RoundRobin,
            pilot_threshold_m: 30.0,
            allocator: AllocatorKind::Gba,
            n_c: 12,
            n_t: 2,
            redraw_interference: false,
            validate: false,
            fairness_bins: 10,
            timing_repeats: 1,
        }
    }
}

impl SimConfig {
    /// Pilot RUs per channel, `floor(eta T)`.
    pub fn pilots_per_channel(&self) -> usize {
        (self.eta * f64::from(self.slots) + 1e-9).floor() as usize
    }

    /// Devices piloting per cycle: one per pilot RU, at most all of them.
    pub fn pilot_devices(&self) -> usize {
        self.pilots_per_channel().min(self.n_devices)
    }

    pub fn link_params(&self) -> Result<LinkParams> {
        LinkParams::new(
            self.gamma_t_db,
            self.alpha,
            self.ell,
            self.bandwidth_hz,
            self.slot_s,
        )
    }

    pub fn validate(&self) -> Result<()> {
        fn check(ok: bool, field: &str, reason: &str) -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(Error::config(field, reason))
            }
        }
        check(self.n_devices >= 1, "N", "at least one device")?;
        check(self.channels >= 1, "C", "at least one channel")?;
        check(self.slots >= 1, "T", "at least one slot")?;
        check(
            self.delta >= 1 && self.delta <= self.slots,
            "delta",
            "must lie in 1..=T",
        )?;
        check((0.0..=1.0).contains(&self.eta), "eta", "must lie in [0, 1]")?;
        check(self.w >= 1, "W", "must be at least 1")?;
        check(
            (0.0..1.0).contains(&self.gamma),
            "gamma",
            "must lie in [0, 1)",
        )?;
        check(
            self.rho > 0.0 && self.rho < 1.0,
            "rho",
            "must lie in (0, 1)",
        )?;
        check(
            self.radius_m > 0.0 && self.radius_m.is_finite(),
            "L",
            "must be positive",
        )?;
        check(
            self.alpha > 0.0 && self.alpha.is_finite(),
            "alpha",
            "must be positive",
        )?;
        check(self.gamma_t_db.is_finite(), "gamma_T_db", "must be finite")?;
        check(self.ell >= 1, "ell", "must be at least 1 bit")?;
        check(
            self.slot_s > 0.0 && self.slot_s.is_finite(),
            "tau",
            "must be positive",
        )?;
        check(
            self.bandwidth_hz > 0.0 && self.bandwidth_hz.is_finite(),
            "B",
            "must be positive",
        )?;
        check(
            self.y_max >= 0.0 && self.y_max.is_finite(),
            "Y_M",
            "must be non-negative",
        )?;
        check(
            self.n_cycles >= 2 * self.w,
            "n_cycles",
            "must be at least 2 W",
        )?;
        check(
            self.n_topologies >= 1,
            "n_topologies",
            "at least one topology",
        )?;
        check(self.fairness_bins >= 1, "fairness_bins", "at least one bin")?;
        check(
            self.timing_repeats >= 1,
            "timing_repeats",
            "at least one run",
        )?;
        check(
            self.pilot_threshold_m >= 0.0 && self.pilot_threshold_m.is_finite(),
            "pilot_threshold",
            "must be non-negative",
        )?;
        Ok(())
    }
}

/// Devices uniform over the disk of radius `L`, issue times uniform on
/// `1..=T`. Ids are `0..N`.
pub fn generate_topology<R: Rng + ?Sized>(cfg: &SimConfig, rng: &mut R) -> Vec<Device> {
    (0..cfg.n_devices as u32)
        .map(|id| {
            let u: f64 = rng.random();
            // keep the distance strictly positive
            let distance = (u.sqrt() * cfg.radius_m).max(1e-3);
            Device {
                id,
                distance,
                issue_time: rng.random_range(1..=cfg.slots),
            }
        })
        .collect()
}

/// `lambda_c = 1 + Y_c` with `Y_c` uniform on `[0, Y_M]`.
pub fn draw_interference<R: Rng + ?Sized>(cfg: &SimConfig, rng: &mut R) -> ChannelInterference {
    let lambda = (0..cfg.channels)
        .map(|_| 1.0 + cfg.y_max * rng.random::<f64>())
        .collect();
    ChannelInterference::new(lambda).expect("factors are at least 1")
}

/// Pilot RUs placed uniformly at random, independently per channel.
pub fn draw_pilot_mask<R: Rng + ?Sized>(cfg: &SimConfig, rng: &mut R) -> Vec<Vec<bool>> {
    let m = cfg.pilots_per_channel();
    (0..cfg.channels)
        .map(|_| {
            let mut row = vec![false; cfg.slots as usize];
            for s in sample(rng, cfg.slots as usize, m) {
                row[s] = true;
            }
            row
        })
        .collect()
}

type TableCache = Mutex<HashMap<(u64, u64), Arc<FTable>>>;

static TABLES: OnceLock<TableCache> = OnceLock::new();

/// Quantile table for `(gamma, rho)`, built once per process.
pub fn shared_table(gamma: f64, rho: f64) -> Result<Arc<FTable>> {
    let key = (gamma.to_bits(), rho.to_bits());
    let cache = TABLES.get_or_init(Default::default);
    if let Some(t) = cache.lock().expect("table cache poisoned").get(&key) {
        return Ok(Arc::clone(t));
    }
    let max_age = FTable::suggested_max_age(gamma, DEFAULT_Z_MAX);
    let table = Arc::new(build_f_table(
        gamma,
        rho,
        DEFAULT_BINS,
        DEFAULT_Z_MAX,
        max_age,
    )?);
    cache
        .lock()
        .expect("table cache poisoned")
        .entry(key)
        .or_insert_with(|| Arc::clone(&table));
    Ok(table)
}

/// Per-device tallies over the measurement window.
#[derive(Clone, Debug, PartialEq)]
pub struct DeviceTally {
    pub distance: f64,
    /// Packets issued.
    pub offered: u32,
    /// Packets that received an allocation.
    pub served: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DistanceBin {
    pub lo: f64,
    pub hi: f64,
    pub devices: usize,
    pub offered: u64,
    pub served: u64,
}

impl DistanceBin {
    pub fn center(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    /// Served fraction; `None` for an empty bin.
    pub fn fraction(&self) -> Option<f64> {
        (self.offered > 0).then(|| self.served as f64 / self.offered as f64)
    }
}

/// Served fraction per distance bin, bins uniform on `[0, radius]`.
pub fn fairness_by_distance(
    tallies: &[DeviceTally],
    radius: f64,
    n_bins: usize,
) -> Vec<DistanceBin> {
    let n_bins = n_bins.max(1);
    let width = radius / n_bins as f64;
    let mut bins: Vec<DistanceBin> = (0..n_bins)
        .map(|k| DistanceBin {
            lo: k as f64 * width,
            hi: (k + 1) as f64 * width,
            devices: 0,
            offered: 0,
            served: 0,
        })
        .collect();
    for t in tallies {
        let k = ((t.distance / width) as usize).min(n_bins - 1);
        bins[k].devices += 1;
        bins[k].offered += u64::from(t.offered);
        bins[k].served += u64::from(t.served);
    }
    bins
}

/// Outcome of one topology run.
#[derive(Clone, Debug, PartialEq)]
pub struct TopologyOutcome {
    /// Served fraction of every cycle in the measurement window.
    pub fraction_per_cycle: Vec<f64>,
    pub devices: Vec<DeviceTally>,
    pub transmissions: u64,
    pub decode_failures: u64,
    pub data_rus: u64,
    pub alloc_seconds: f64,
    pub allocations: u64,
    pub schedule_violations: u64,
    /// Requirement computations whose CSI age disagreed with the pipeline
    /// bookkeeping or read a measurement newer than `use cycle - W`.
    pub pipeline_errors: u64,
}

impl TopologyOutcome {
    pub fn mean_fraction(&self) -> f64 {
        mean(&self.fraction_per_cycle)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Metrics {
    pub topologies: Vec<TopologyOutcome>,
    /// Mean over topologies of the per-topology window average.
    pub fraction_served_mean: f64,
    /// Sample standard deviation of the per-topology averages.
    pub fraction_served_std: f64,
    pub served_by_distance: Vec<DistanceBin>,
    pub transmissions: u64,
    /// Served transmissions that failed to decode.
    pub reliability_violations: u64,
    pub rus_per_served_device: f64,
    pub alloc_ms_mean: f64,
    pub schedule_violations: u64,
    pub pipeline_errors: u64,
}

impl Metrics {
    pub fn failure_rate(&self) -> f64 {
        if self.transmissions == 0 {
            0.0
        } else {
            self.reliability_violations as f64 / self.transmissions as f64
        }
    }

    /// Every device tally across topologies.
    pub fn device_tallies(&self) -> Vec<DeviceTally> {
        self.topologies
            .iter()
            .flat_map(|t| t.devices.iter().cloned())
            .collect()
    }
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// An allocation waiting for its cycle, with the requirements it was sized
/// with.
struct Pending {
    schedule: CycleSchedule,
    needs: Vec<u32>,
}

/// One topology: devices, channels and the evolving state of the run.
pub struct TopologyRun<'a> {
    cfg: &'a SimConfig,
    link: LinkParams,
    table: &'a FTable,
    rng: ChaCha8Rng,
    devices: Vec<Device>,
    interference: ChannelInterference,
    base: CycleSchedule,
    fading: Vec<FadingCoefficient>,
    process: GaussMarkov,
    records: Vec<CsiRecord>,
    measured_at: Vec<Option<u32>>,
    pilots: Vec<u32>,
    cursor: usize,
    queue: BTreeMap<u32, Pending>,
    outcome: TopologyOutcome,
}

impl<'a> TopologyRun<'a> {
    /// Draw topology, interference, pilot layout and initial fading.
    pub fn new(cfg: &'a SimConfig, table: &'a FTable, index: u32) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(u64::from(index));
        let devices = generate_topology(cfg, &mut rng);
        let interference = draw_interference(cfg, &mut rng);
        let base = CycleSchedule::new(
            cfg.slots,
            cfg.channels,
            cfg.delta,
            draw_pilot_mask(cfg, &mut rng),
        )?;
        let fading = (0..cfg.n_devices * cfg.channels)
            .map(|_| FadingCoefficient::stationary(&mut rng))
            .collect();
        let outcome = TopologyOutcome {
            fraction_per_cycle: Vec::new(),
            devices: devices
                .iter()
                .map(|d| DeviceTally {
                    distance: d.distance,
                    offered: 0,
                    served: 0,
                })
                .collect(),
            transmissions: 0,
            decode_failures: 0,
            data_rus: 0,
            alloc_seconds: 0.0,
            allocations: 0,
            schedule_violations: 0,
            pipeline_errors: 0,
        };
        let mut run = Self {
            cfg,
            link: cfg.link_params()?,
            table,
            rng,
            records: devices
                .iter()
                .map(|d| CsiRecord::empty(d.id, cfg.channels))
                .collect(),
            measured_at: vec![None; devices.len()],
            devices,
            interference,
            base,
            fading,
            process: GaussMarkov::new(cfg.gamma)?,
            pilots: Vec::new(),
            cursor: 0,
            queue: BTreeMap::new(),
            outcome,
        };
        run.pilots = run.select_pilots()?;
        Ok(run)
    }

    pub fn devices(&self) -> &[Device] {
        &self.devices
    }

    pub fn records(&self) -> &[CsiRecord] {
        &self.records
    }

    /// Pilot devices of the next cycle to run.
    pub fn pilots(&self) -> &[u32] {
        &self.pilots
    }

    fn context(&self) -> LinkContext<'_> {
        LinkContext {
            link: &self.link,
            interference: &self.interference,
            quantiles: self.table,
        }
    }

    fn select_pilots(&mut self) -> Result<Vec<u32>> {
        let m = self.cfg.pilot_devices();
        let selected = match self.cfg.pilot_policy {
            PilotPolicy::RoundRobin => round_robin_select(&mut self.cursor, &self.devices, m)?,
            PilotPolicy::DistanceThreshold => distance_threshold_select(
                &self.devices,
                self.cfg.pilot_threshold_m,
                m,
                &mut self.cursor,
            )?,
            PilotPolicy::Dynamic => {
                dynamic_select(&self.records, &self.devices, m, self.cfg.w, &self.context())?
            }
        };
        PilotPlan::new(selected.clone(), &self.base)?;
        Ok(selected)
    }

    /// Allocation for `use_cycle` from the records held after cycle
    /// `now` (`None` before the first cycle).
    fn allocate(&mut self, use_cycle: u32, now: Option<u32>) -> Result<Pending> {
        let channels = self.cfg.channels;
        let mut needs = vec![0u32; self.devices.len() * channels];
        for (k, dev) in self.devices.iter().enumerate() {
            let record = &self.records[k];
            let csi_age = if record.valid && now.is_some() {
                let age = record.age_u + (use_cycle - now.unwrap_or(0));
                let measured = self.measured_at[k].expect("valid record has a measurement cycle");
                if use_cycle - measured != age || measured + self.cfg.w > use_cycle {
                    self.outcome.pipeline_errors += 1;
                }
                Some(age)
            } else {
                None
            };
            for c in 0..channels {
                let csi = csi_age.map(|age| (age, record.z[c]));
                needs[k * channels + c] = self.context().required(dev.distance, c, csi)?;
            }
        }
        let req = |d: &Device, c: usize| needs[d.id as usize * channels + c];
        let mut fastest = f64::INFINITY;
        let mut schedule = None;
        for _ in 0..self.cfg.timing_repeats {
            let started = Instant::now();
            let s = match self.cfg.allocator {
                AllocatorKind::Gba => gba_allocate(&self.devices, self.base.cleared(), &req),
                AllocatorKind::Bca => bca_allocate(&self.devices, self.base.cleared(), &req),
            };
            fastest = fastest.min(started.elapsed().as_secs_f64());
            schedule = Some(s);
        }
        let schedule = schedule.expect("at least one timing run");
        self.outcome.alloc_seconds += fastest;
        self.outcome.allocations += 1;
        if self.cfg.validate {
            self.outcome.schedule_violations += schedule.validate(&self.devices, &req).len() as u64;
        }
        Ok(Pending { schedule, needs })
    }

    /// Run cycle `m`; cycles must be run in order from 0.
    pub fn run_cycle(&mut self, m: u32) -> Result<CycleSchedule> {
        let cfg = self.cfg;
        let channels = cfg.channels;
        // 1. fading
        if m > 0 {
            for h in &mut self.fading {
                *h = self.process.step(*h, &mut self.rng);
            }
            if cfg.redraw_interference {
                self.interference = draw_interference(cfg, &mut self.rng);
            }
        }
        // 2. the allocation for this cycle; warm-up cycles run without CSI
        let pending = match self.queue.remove(&m) {
            Some(p) => p,
            None => self.allocate(m, None)?,
        };
        let measuring = m >= cfg.n_cycles / 2;
        for (&id, a) in &pending.schedule.assignments {
            let k = id as usize;
            let dev = &self.devices[k];
            let h2 = self.fading[k * channels + a.channel].power();
            let ok = decode_success(
                dev.distance,
                self.interference.get(a.channel),
                h2,
                a.slots.len() as u32,
                &self.link,
            )?;
            debug_assert_eq!(
                a.slots.len() as u32,
                pending.needs[k * channels + a.channel]
            );
            if measuring {
                self.outcome.transmissions += 1;
                self.outcome.decode_failures += u64::from(!ok);
                self.outcome.data_rus += a.slots.len() as u64;
            }
        }
        if measuring {
            let n = self.devices.len();
            self.outcome
                .fraction_per_cycle
                .push(pending.schedule.served() as f64 / n as f64);
            for (k, t) in self.outcome.devices.iter_mut().enumerate() {
                t.offered += 1;
                t.served += u32::from(pending.schedule.assignments.contains_key(&(k as u32)));
            }
        }
        // 3. pilots measured this cycle
        for r in &mut self.records {
            r.tick();
        }
        for &id in &self.pilots {
            let k = id as usize;
            let z = (0..channels)
                .map(|c| self.fading[k * channels + c].power())
                .collect();
            self.records[k].measure(z);
            self.measured_at[k] = Some(m);
        }
        // 4. next cycle's pilots
        self.pilots = self.select_pilots()?;
        // 5. allocation for cycle m + W
        let use_cycle = m + cfg.w;
        if use_cycle < cfg.n_cycles {
            let p = self.allocate(use_cycle, Some(m))?;
            self.queue.insert(use_cycle, p);
        }
        Ok(pending.schedule)
    }

    pub fn finish(self) -> TopologyOutcome {
        self.outcome
    }
}

/// Run one topology to completion.
pub fn run_topology(cfg: &SimConfig, table: &FTable, index: u32) -> Result<TopologyOutcome> {
    let mut run = TopologyRun::new(cfg, table, index)?;
    for m in 0..cfg.n_cycles {
        run.run_cycle(m)?;
    }
    Ok(run.finish())
}

/// All topologies of a configuration, in parallel. Deterministic for a fixed
/// seed apart from the timing fields.
pub fn run_simulation(cfg: &SimConfig) -> Result<Metrics> {
    cfg.validate()?;
    let table = shared_table(cfg.gamma, cfg.rho)?;
    let topologies = (0..cfg.n_topologies)
        .into_par_iter()
        .map(|k| run_topology(cfg, &table, k))
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(cfg, topologies))
}

fn summarize(cfg: &SimConfig, topologies: Vec<TopologyOutcome>) -> Metrics {
    let per: Vec<f64> = topologies
        .iter()
        .map(TopologyOutcome::mean_fraction)
        .collect();
    let tallies: Vec<DeviceTally> = topologies
        .iter()
        .flat_map(|t| t.devices.iter().cloned())
        .collect();
    let sum = |f: fn(&TopologyOutcome) -> u64| topologies.iter().map(f).sum::<u64>();
    let transmissions = sum(|t| t.transmissions);
    let data_rus = sum(|t| t.data_rus);
    let allocations = sum(|t| t.allocations);
    let alloc_seconds: f64 = topologies.iter().map(|t| t.alloc_seconds).sum();
    Metrics {
        fraction_served_mean: mean(&per),
        fraction_served_std: sample_std(&per),
        served_by_distance: fairness_by_distance(&tallies, cfg.radius_m, cfg.fairness_bins),
        transmissions,
        reliability_violations: sum(|t| t.decode_failures),
        rus_per_served_device: if transmissions == 0 {
            0.0
        } else {
            data_rus as f64 / transmissions as f64
        },
        alloc_ms_mean: if allocations == 0 {
            0.0
        } else {
            1e3 * alloc_seconds / allocations as f64
        },
        schedule_violations: sum(|t| t.schedule_violations),
        pipeline_errors: sum(|t| t.pipeline_errors),
        topologies,
    }
}
