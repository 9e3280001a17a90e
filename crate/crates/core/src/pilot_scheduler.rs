//! Choice of the `M` devices that send pilots in the next cycle.
//!
//! Three policies: plain round robin over device ids, round robin restricted
//! to devices beyond a distance threshold, and a dynamic policy that ranks
//! devices by the RUs a fresh measurement is expected to save.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use crate::allocators::{CycleSchedule, Device};
use crate::channel_model::{conditional_mean, gm_params};
use crate::error::{Error, Result};
use crate::link_budget::LinkContext;

/// Last pilot measurement of one device on every channel.
#[derive(Clone, Debug, PartialEq)]
pub struct CsiRecord {
    pub device_id: u32,
    /// Measured fading power per channel.
    pub z: Vec<f64>,
    /// Cycles since the measurement; 0 right after the measuring cycle.
    pub age_u: u32,
    /// False until the first pilot.
    pub valid: bool,
}

impl CsiRecord {
    pub fn empty(device_id: u32, channels: usize) -> Self {
        Self {
            device_id,
            z: vec![0.0; channels],
            age_u: 0,
            valid: false,
        }
    }

    pub fn measure(&mut self, z: Vec<f64>) {
        self.z = z;
        self.age_u = 0;
        self.valid = true;
    }

    /// One more cycle without a pilot.
    pub fn tick(&mut self) {
        if self.valid {
            self.age_u += 1;
        }
    }
}

/// Devices piloting in a cycle; `selected[k]` uses slot `pru_positions[c][k]`
/// on channel `c`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PilotPlan {
    pub selected: Vec<u32>,
    pub pru_positions: Vec<Vec<u32>>,
}

impl PilotPlan {
    /// Bind selected devices to the schedule's pilot RUs in order. With
    /// fewer devices than pilot RUs per channel the surplus stays idle.
    pub fn new(selected: Vec<u32>, schedule: &CycleSchedule) -> Result<Self> {
        let mut pru_positions: Vec<Vec<u32>> = (0..schedule.channels())
            .map(|c| schedule.pilot_slots(c))
            .collect();
        if pru_positions.iter().any(|row| row.len() < selected.len()) {
            return Err(Error::param(
                "selected",
                format!("{} devices for fewer pilot RUs per channel", selected.len()),
            ));
        }
        pru_positions
            .iter_mut()
            .for_each(|row| row.truncate(selected.len()));
        let mut ids = selected.clone();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::param("selected", "duplicate device id"));
        }
        Ok(Self {
            selected,
            pru_positions,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PilotPolicy {
    RoundRobin,
    /// Round robin over devices beyond a distance threshold.
    DistanceThreshold,
    Dynamic,
}

impl PilotPolicy {
    pub fn name(&self) -> &'static str {
        match self {
            PilotPolicy::RoundRobin => "round-robin",
            PilotPolicy::DistanceThreshold => "distance-threshold",
            PilotPolicy::Dynamic => "dynamic",
        }
    }
}

impl fmt::Display for PilotPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PilotPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "round-robin" => Ok(PilotPolicy::RoundRobin),
            "distance-threshold" => Ok(PilotPolicy::DistanceThreshold),
            "dynamic" => Ok(PilotPolicy::Dynamic),
            other => Err(Error::param(
                "pilot_policy",
                format!("unknown policy `{other}` (round-robin | distance-threshold | dynamic)"),
            )),
        }
    }
}

fn sorted_ids<'a>(devices: impl Iterator<Item = &'a Device>) -> Vec<u32> {
    let mut ids: Vec<u32> = devices.map(|d| d.id).collect();
    ids.sort_unstable();
    ids
}

fn rotate(ids: &[u32], cursor: &mut usize, m: usize) -> Vec<u32> {
    if ids.is_empty() {
        return Vec::new();
    }
    let start = *cursor % ids.len();
    let picked = (0..m.min(ids.len()))
        .map(|k| ids[(start + k) % ids.len()])
        .collect();
    *cursor = (start + m) % ids.len();
    picked
}

/// Next `m` devices in cyclic id order; advances `cursor` by `m`.
pub fn round_robin_select(cursor: &mut usize, devices: &[Device], m: usize) -> Result<Vec<u32>> {
    if m > devices.len() {
        return Err(Error::param(
            "M",
            format!("{m} pilots for {} devices", devices.len()),
        ));
    }
    Ok(rotate(&sorted_ids(devices.iter()), cursor, m))
}

/// Round robin over devices beyond `threshold`. When fewer than `m` are
/// that far, all of them pilot and the rest of the slots rotate over the
/// remaining devices.
pub fn distance_threshold_select(
    devices: &[Device],
    threshold: f64,
    m: usize,
    cursor: &mut usize,
) -> Result<Vec<u32>> {
    if m > devices.len() {
        return Err(Error::param(
            "M",
            format!("{m} pilots for {} devices", devices.len()),
        ));
    }
    let far = sorted_ids(devices.iter().filter(|d| d.distance > threshold));
    if far.len() >= m {
        return Ok(rotate(&far, cursor, m));
    }
    let near = sorted_ids(devices.iter().filter(|d| d.distance <= threshold));
    let mut picked = far.clone();
    picked.extend(rotate(&near, cursor, m - far.len()));
    Ok(picked)
}

fn best_channel(
    ctx: &LinkContext<'_>,
    device: &Device,
    csi: impl Fn(usize) -> (u32, f64),
) -> Result<u32> {
    let mut best = u32::MAX;
    for c in 0..ctx.channels() {
        best = best.min(ctx.required(device.distance, c, Some(csi(c)))?);
    }
    Ok(best)
}

/// Expected RU saving from a pilot in the coming cycle: best-channel count
/// with the stored CSI one cycle older, minus the best-channel count with a
/// new measurement used `w` cycles later. The new measurement is replaced
/// by its conditional mean given the stored one. Devices without CSI get
/// `+inf`.
pub fn pilot_gain(
    record: &CsiRecord,
    device: &Device,
    w: u32,
    ctx: &LinkContext<'_>,
) -> Result<f64> {
    if !record.valid {
        return Ok(f64::INFINITY);
    }
    let u = record.age_u;
    let keep = best_channel(ctx, device, |c| (u + 1, record.z[c]))?;
    let expected: Vec<f64> = if u == 0 {
        record.z.clone()
    } else {
        let params = gm_params(ctx.quantiles.gamma(), u)?;
        record
            .z
            .iter()
            .map(|&z| conditional_mean(z, &params))
            .collect::<Result<_>>()?
    };
    let refresh = best_channel(ctx, device, |c| (w, expected[c]))?;
    Ok(f64::from(keep) - f64::from(refresh))
}

/// The `m` devices with the largest gain; ties go to older CSI, then lower
/// id. A device that never sent a pilot counts as infinitely old.
pub fn dynamic_select(
    records: &[CsiRecord],
    devices: &[Device],
    m: usize,
    w: u32,
    ctx: &LinkContext<'_>,
) -> Result<Vec<u32>> {
    if m > devices.len() {
        return Err(Error::param(
            "M",
            format!("{m} pilots for {} devices", devices.len()),
        ));
    }
    let mut ranked = Vec::with_capacity(devices.len());
    for dev in devices {
        let record = records
            .iter()
            .find(|r| r.device_id == dev.id)
            .ok_or_else(|| Error::param("records", format!("no record for device {}", dev.id)))?;
        let age = if record.valid { record.age_u } else { u32::MAX };
        ranked.push((pilot_gain(record, dev, w, ctx)?, age, dev.id));
    }
    ranked.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap_or(Ordering::Equal)
            .then(b.1.cmp(&a.1))
            .then(a.2.cmp(&b.2))
    });
    Ok(ranked.into_iter().take(m).map(|r| r.2).collect())
}
