//! Per-cycle uplink allocation on a `T x C` grid of resource units.
//!
//! Slots are 1-based. Each device asks for a number of data RUs that
//! depends on the channel; it must receive them on a single channel, in
//! order, starting after both its issue slot and the channel's last
//! allocated slot `beta_c`, skipping pilot RUs, and finishing strictly
//! before `t_i + delta`.
//!
//! [`gba_allocate`] repeatedly matches channels to pending devices with a
//! maximum-weight bipartite matching; [`bca_allocate`] is the greedy
//! earliest-completion baseline.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use crate::error::{Error, Result};
use crate::matching::{max_weight_matching, BipartiteGraph, Matching};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Device {
    pub id: u32,
    /// Distance to the access point in meters.
    pub distance: f64,
    /// Slot in `1..=T` at which the packet is issued.
    pub issue_time: u32,
}

/// Number of data RUs a device needs on a channel.
pub trait RequirementProvider {
    fn required(&self, device: &Device, channel: usize) -> u32;
}

impl<F> RequirementProvider for F
where
    F: Fn(&Device, usize) -> u32,
{
    fn required(&self, device: &Device, channel: usize) -> u32 {
        self(device, channel)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Assignment {
    pub channel: usize,
    pub slots: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CycleSchedule {
    slots: u32,
    channels: usize,
    delta: u32,
    /// `pru_mask[c][s - 1]` is true when slot `s` of channel `c` is a pilot RU.
    pru_mask: Vec<Vec<bool>>,
    beta: Vec<u32>,
    pub assignments: BTreeMap<u32, Assignment>,
    pub excluded: Vec<u32>,
}

impl CycleSchedule {
    pub fn new(slots: u32, channels: usize, delta: u32, pru_mask: Vec<Vec<bool>>) -> Result<Self> {
        if slots == 0 || channels == 0 {
            return Err(Error::param(
                "T/C",
                "need at least one slot and one channel",
            ));
        }
        if pru_mask.len() != channels || pru_mask.iter().any(|row| row.len() != slots as usize) {
            return Err(Error::param(
                "pru_mask",
                format!("must be {channels} x {slots}"),
            ));
        }
        Ok(Self {
            slots,
            channels,
            delta,
            pru_mask,
            beta: vec![0; channels],
            assignments: BTreeMap::new(),
            excluded: Vec::new(),
        })
    }

    /// Grid without pilot RUs.
    pub fn without_pilots(slots: u32, channels: usize, delta: u32) -> Result<Self> {
        Self::new(
            slots,
            channels,
            delta,
            vec![vec![false; slots as usize]; channels],
        )
    }

    /// Fresh schedule sharing this one's grid and pilot layout.
    pub fn cleared(&self) -> Self {
        Self {
            beta: vec![0; self.channels],
            assignments: BTreeMap::new(),
            excluded: Vec::new(),
            ..self.clone()
        }
    }

    pub fn slots(&self) -> u32 {
        self.slots
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn delta(&self) -> u32 {
        self.delta
    }

    pub fn beta(&self) -> &[u32] {
        &self.beta
    }

    pub fn pru_row(&self, channel: usize) -> &[bool] {
        &self.pru_mask[channel]
    }

    pub fn is_pilot(&self, channel: usize, slot: u32) -> bool {
        self.pru_mask[channel][slot as usize - 1]
    }

    /// Pilot slots of a channel in increasing order.
    pub fn pilot_slots(&self, channel: usize) -> Vec<u32> {
        (1..=self.slots)
            .filter(|&s| self.is_pilot(channel, s))
            .collect()
    }

    pub fn served(&self) -> usize {
        self.assignments.len()
    }

    pub fn data_rus_used(&self) -> usize {
        self.assignments.values().map(|a| a.slots.len()).sum()
    }

    /// Place `device` on `channel` over the window `start+1 ..= start+zeta`.
    fn commit(&mut self, device: &Device, channel: usize, start: u32, zeta: u32) {
        let slots = (start + 1..=start + zeta)
            .filter(|&s| !self.is_pilot(channel, s))
            .collect();
        self.beta[channel] = start + zeta;
        self.assignments
            .insert(device.id, Assignment { channel, slots });
    }

    /// Text dump: one tab-separated line per device, `id channel slots status`.
    pub fn dump(&self) -> String {
        let mut rows: Vec<(u32, String)> = self
            .assignments
            .iter()
            .map(|(id, a)| {
                let slots = a
                    .slots
                    .iter()
                    .map(u32::to_string)
                    .collect::<Vec<_>>()
                    .join(",");
                (*id, format!("{id}\t{}\t{slots}\tserved", a.channel))
            })
            .chain(
                self.excluded
                    .iter()
                    .map(|id| (*id, format!("{id}\t-\t-\texcluded"))),
            )
            .collect();
        rows.sort_by_key(|r| r.0);
        let mut out = String::new();
        for (_, line) in rows {
            let _ = writeln!(out, "{line}");
        }
        out
    }

    /// Check every structural invariant against the devices and the
    /// requirements the allocation was computed with.
    pub fn validate<R: RequirementProvider + ?Sized>(
        &self,
        devices: &[Device],
        req: &R,
    ) -> Vec<Violation> {
        let mut out = Vec::new();
        let by_id: BTreeMap<u32, &Device> = devices.iter().map(|d| (d.id, d)).collect();
        let mut owner: Vec<Vec<Option<u32>>> = vec![vec![None; self.slots as usize]; self.channels];
        let mut high = vec![0u32; self.channels];

        for (&id, a) in &self.assignments {
            let Some(dev) = by_id.get(&id) else {
                out.push(Violation::UnknownDevice(id));
                continue;
            };
            if a.channel >= self.channels {
                out.push(Violation::BadChannel {
                    id,
                    channel: a.channel,
                });
                continue;
            }
            let need = req.required(dev, a.channel);
            if a.slots.len() != need as usize {
                out.push(Violation::WrongCount {
                    id,
                    got: a.slots.len(),
                    need,
                });
            }
            for &s in &a.slots {
                if s < 1 || s > self.slots {
                    out.push(Violation::OutsideCycle { id, slot: s });
                    continue;
                }
                if self.is_pilot(a.channel, s) {
                    out.push(Violation::PilotUsed {
                        id,
                        channel: a.channel,
                        slot: s,
                    });
                }
                if s < dev.issue_time || s >= dev.issue_time + self.delta {
                    out.push(Violation::Deadline { id, slot: s });
                }
                let cell = &mut owner[a.channel][s as usize - 1];
                if let Some(other) = cell {
                    out.push(Violation::Overlap {
                        a: *other,
                        b: id,
                        channel: a.channel,
                        slot: s,
                    });
                } else {
                    *cell = Some(id);
                }
                high[a.channel] = high[a.channel].max(s);
            }
        }
        for c in 0..self.channels {
            if high[c] != self.beta[c] {
                out.push(Violation::Beta {
                    channel: c,
                    beta: self.beta[c],
                    max_slot: high[c],
                });
            }
        }
        for d in devices {
            let served = self.assignments.contains_key(&d.id);
            let excluded = self.excluded.contains(&d.id);
            if served == excluded {
                out.push(Violation::Partition(d.id));
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    UnknownDevice(u32),
    BadChannel {
        id: u32,
        channel: usize,
    },
    WrongCount {
        id: u32,
        got: usize,
        need: u32,
    },
    OutsideCycle {
        id: u32,
        slot: u32,
    },
    PilotUsed {
        id: u32,
        channel: usize,
        slot: u32,
    },
    Deadline {
        id: u32,
        slot: u32,
    },
    Overlap {
        a: u32,
        b: u32,
        channel: usize,
        slot: u32,
    },
    Beta {
        channel: usize,
        beta: u32,
        max_slot: u32,
    },
    /// Device neither served nor excluded, or both.
    Partition(u32),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// First slot after which device data may be placed: `max(beta_c, t_i - 1)`.
fn window_start(beta_c: u32, t_i: u32) -> u32 {
    beta_c.max(t_i.saturating_sub(1))
}

/// Window length needed to collect `needed` non-pilot slots starting after
/// `max(beta_c, t_i - 1)`, jumping over pilot RUs. `None` when the window
/// would run past the end of the cycle.
pub fn compute_zeta(beta_c: u32, t_i: u32, pru_row: &[bool], needed: u32) -> Option<u32> {
    let start = window_start(beta_c, t_i);
    let mut got = 0;
    let mut slot = start;
    while got < needed {
        slot += 1;
        if slot as usize > pru_row.len() {
            return None;
        }
        if !pru_row[slot as usize - 1] {
            got += 1;
        }
    }
    Some(slot - start)
}

/// Edge existence: `max(beta_c, t_i - 1) + zeta < t_i + delta`.
pub fn edge_feasible(beta_c: u32, t_i: u32, zeta: u32, delta: u32) -> bool {
    window_start(beta_c, t_i) + zeta < t_i + delta
}

/// Edge weight: free slots left on the channel plus the `delta` offset.
pub fn edge_weight(beta_c: u32, t_i: u32, zeta: u32, slots: u32, delta: u32) -> u64 {
    u64::from(slots + delta) - u64::from(window_start(beta_c, t_i) + zeta)
}

/// One GBA round, kept for inspection in tests and diagnostics.
#[derive(Clone, Debug)]
pub struct GbaIteration {
    pub beta_before: Vec<u32>,
    /// Device ids in right-vertex order.
    pub candidates: Vec<u32>,
    /// Devices dropped for having no feasible channel.
    pub dropped: Vec<u32>,
    pub graph: BipartiteGraph,
    pub matching: Matching,
}

/// Graph-based allocation. Devices are matched to channels in rounds until
/// every device is either placed or has no feasible channel left.
pub fn gba_allocate<R: RequirementProvider + ?Sized>(
    devices: &[Device],
    schedule: CycleSchedule,
    req: &R,
) -> CycleSchedule {
    gba_allocate_traced(devices, schedule, req, None)
}

pub fn gba_allocate_traced<R: RequirementProvider + ?Sized>(
    devices: &[Device],
    mut schedule: CycleSchedule,
    req: &R,
    mut trace: Option<&mut Vec<GbaIteration>>,
) -> CycleSchedule {
    let channels = schedule.channels;
    let needs: Vec<u32> = devices
        .iter()
        .flat_map(|d| (0..channels).map(move |c| (d, c)))
        .map(|(d, c)| req.required(d, c))
        .collect();
    let mut pending: Vec<usize> = (0..devices.len()).collect();
    pending.sort_by_key(|&k| devices[k].id);

    // (channel, start, zeta, weight) per candidate edge
    let mut edges: Vec<(usize, usize, u32, u32, u64)> = Vec::new();
    while !pending.is_empty() {
        edges.clear();
        let mut kept = Vec::with_capacity(pending.len());
        let mut dropped = Vec::new();
        for &k in &pending {
            let dev = &devices[k];
            let before = edges.len();
            for c in 0..channels {
                let need = needs[k * channels + c];
                let Some(zeta) = compute_zeta(
                    schedule.beta[c],
                    dev.issue_time,
                    &schedule.pru_mask[c],
                    need,
                ) else {
                    continue;
                };
                if edge_feasible(schedule.beta[c], dev.issue_time, zeta, schedule.delta) {
                    let start = window_start(schedule.beta[c], dev.issue_time);
                    let w = edge_weight(
                        schedule.beta[c],
                        dev.issue_time,
                        zeta,
                        schedule.slots,
                        schedule.delta,
                    );
                    edges.push((c, kept.len(), start, zeta, w));
                }
            }
            if edges.len() > before {
                kept.push(k);
            } else {
                dropped.push(dev.id);
            }
        }
        schedule.excluded.extend(&dropped);
        if kept.is_empty() {
            if let Some(t) = trace.as_deref_mut() {
                t.push(GbaIteration {
                    beta_before: schedule.beta.clone(),
                    candidates: Vec::new(),
                    dropped,
                    graph: BipartiteGraph::new(channels, 0),
                    matching: Matching::default(),
                });
            }
            break;
        }

        let mut graph = BipartiteGraph::new(channels, kept.len());
        for &(c, r, _, _, w) in &edges {
            graph.add_edge(c, r, w);
        }
        let matching = max_weight_matching(&graph).expect("graph is well formed by construction");
        debug_assert!(!matching.is_empty());

        let beta_before = schedule.beta.clone();
        let mut matched = vec![false; kept.len()];
        for &(c, r) in &matching.pairs {
            let &(_, _, start, zeta, _) = edges
                .iter()
                .find(|e| e.0 == c && e.1 == r)
                .expect("matched pair is an edge");
            schedule.commit(&devices[kept[r]], c, start, zeta);
            matched[r] = true;
        }
        if let Some(t) = trace.as_deref_mut() {
            t.push(GbaIteration {
                beta_before,
                candidates: kept.iter().map(|&k| devices[k].id).collect(),
                dropped,
                graph,
                matching,
            });
        }
        pending = kept
            .into_iter()
            .zip(matched)
            .filter_map(|(k, m)| (!m).then_some(k))
            .collect();
    }
    schedule.excluded.sort_unstable();
    schedule
}

/// Greedy baseline: devices in issue-time order, each on the channel that
/// finishes its transmission earliest (lowest index on ties).
pub fn bca_allocate<R: RequirementProvider + ?Sized>(
    devices: &[Device],
    mut schedule: CycleSchedule,
    req: &R,
) -> CycleSchedule {
    let mut order: Vec<&Device> = devices.iter().collect();
    order.sort_by_key(|d| (d.issue_time, d.id));
    for dev in order {
        let mut best: Option<(u32, usize, u32, u32)> = None;
        for c in 0..schedule.channels {
            let need = req.required(dev, c);
            let Some(zeta) = compute_zeta(
                schedule.beta[c],
                dev.issue_time,
                &schedule.pru_mask[c],
                need,
            ) else {
                continue;
            };
            let start = window_start(schedule.beta[c], dev.issue_time);
            let completion = start + zeta;
            if best.is_none_or(|b| completion < b.0) {
                best = Some((completion, c, start, zeta));
            }
        }
        match best {
            Some((_, c, start, zeta))
                if edge_feasible(schedule.beta[c], dev.issue_time, zeta, schedule.delta) =>
            {
                schedule.commit(dev, c, start, zeta);
            }
            _ => schedule.excluded.push(dev.id),
        }
    }
    schedule.excluded.sort_unstable();
    schedule
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testing::brute_force_matching;
    use proptest::prelude::*;

    fn dev(id: u32, issue_time: u32) -> Device {
        Device {
            id,
            distance: 10.0,
            issue_time,
        }
    }

    fn row(slots: u32, pilots: &[u32]) -> Vec<bool> {
        (1..=slots).map(|s| pilots.contains(&s)).collect()
    }

    #[test]
    fn zeta_jumps_pilots() {
        // beta = 3, t_i = 3, pilots at 6 and 8, four RUs: slots 4,5,7,9
        let pru = row(20, &[6, 8]);
        assert_eq!(compute_zeta(3, 3, &pru, 4), Some(6));
        let mut s = CycleSchedule::new(20, 1, 25, vec![pru]).unwrap();
        s.beta[0] = 3;
        s.commit(&dev(0, 3), 0, 3, 6);
        assert_eq!(s.assignments[&0].slots, vec![4, 5, 7, 9]);
        assert_eq!(s.beta[0], 9);
    }

    #[test]
    fn zeta_edge_cases() {
        let free = row(50, &[]);
        assert_eq!(compute_zeta(7, 2, &free, 5), Some(5));
        assert_eq!(compute_zeta(0, 10, &free, 5), Some(5));
        assert_eq!(compute_zeta(49, 1, &free, 2), None);
        assert_eq!(compute_zeta(49, 1, &free, 1), Some(1));
        // start after the issue slot even on an empty channel
        assert_eq!(compute_zeta(0, 50, &free, 1), Some(1));
        assert_eq!(compute_zeta(0, 50, &free, 2), None);
        let all = row(4, &[1, 2, 3, 4]);
        assert_eq!(compute_zeta(0, 1, &all, 1), None);
    }

    #[test]
    fn feasibility_and_weight() {
        // empty channel, no pilots: reduces to F <= delta - 1 + 1 ... i.e. F < delta + 1
        for f in 1..40 {
            assert_eq!(edge_feasible(0, 1, f, 25), f <= 25);
        }
        assert!(edge_feasible(3, 3, 6, 25));
        assert!(!edge_feasible(3, 3, 25, 25));
        assert!(edge_feasible(3, 3, 24, 25));
        assert_eq!(edge_weight(3, 3, 6, 50, 25), 66);
        assert_eq!(edge_weight(0, 1, 4, 50, 25), 71);
        for k in 0..10 {
            assert_eq!(edge_weight(3, 3, 6 + k, 50, 25), 66 - u64::from(k));
        }
    }

    #[test]
    fn single_device_is_served_from_its_issue_slot() {
        let devices = [dev(7, 12)];
        let req = |_: &Device, _: usize| 4;
        let s = CycleSchedule::without_pilots(50, 1, 25).unwrap();
        let gba = gba_allocate(&devices, s.clone(), &req);
        assert_eq!(gba.assignments[&7].slots, vec![12, 13, 14, 15]);
        assert!(gba.validate(&devices, &req).is_empty());
        assert_eq!(bca_allocate(&devices, s, &req), gba);
    }

    #[test]
    fn one_round_puts_each_device_on_its_best_channel() {
        // device k is cheapest on channel k
        let c = 5;
        let devices: Vec<Device> = (0..c as u32).map(|i| dev(i, 1)).collect();
        let req = |d: &Device, ch: usize| {
            if ch == d.id as usize {
                2
            } else {
                3 + ch as u32
            }
        };
        let s = CycleSchedule::without_pilots(50, c, 25).unwrap();
        let mut trace = Vec::new();
        let out = gba_allocate_traced(&devices, s, &req, Some(&mut trace));
        assert_eq!(trace.len(), 1);
        for d in &devices {
            assert_eq!(out.assignments[&d.id].channel, d.id as usize);
        }
        // brute force over all C! channel permutations
        let weight = |perm: &[usize]| -> u64 {
            perm.iter()
                .enumerate()
                .map(|(k, &ch)| edge_weight(0, 1, req(&devices[k], ch), 50, 25))
                .sum()
        };
        let mut perm: Vec<usize> = (0..c).collect();
        let mut best = 0;
        permute(&mut perm, 0, &mut |p| best = best.max(weight(p)));
        assert_eq!(trace[0].matching.total_weight(&trace[0].graph), best);
    }

    fn permute(v: &mut Vec<usize>, k: usize, f: &mut dyn FnMut(&[usize])) {
        if k == v.len() {
            f(v);
            return;
        }
        for i in k..v.len() {
            v.swap(k, i);
            permute(v, k + 1, f);
            v.swap(k, i);
        }
    }

    #[test]
    fn overload_excludes_devices_but_keeps_invariants() {
        let devices: Vec<Device> = (0..40).map(|i| dev(i, 1 + (i * 7) % 50)).collect();
        let req = |d: &Device, ch: usize| 3 + (d.id + ch as u32) % 5;
        let mask = vec![row(50, &[5, 17, 33]), row(50, &[1, 2]), row(50, &[])];
        let s = CycleSchedule::new(50, 3, 25, mask).unwrap();
        for out in [
            gba_allocate(&devices, s.clone(), &req),
            bca_allocate(&devices, s, &req),
        ] {
            assert!(!out.excluded.is_empty());
            assert_eq!(out.served() + out.excluded.len(), devices.len());
            assert_eq!(out.validate(&devices, &req), vec![]);
        }
    }

    #[test]
    fn greedy_strands_a_device_that_matching_serves() {
        // Found by exhaustive search over 2x2 requirement tables with T=10,
        // delta=5 (see `search_small_instances`): device 0 fits anywhere,
        // device 1 only on channel 0. BCA puts device 0 on channel 0.
        let devices = [dev(0, 1), dev(1, 1)];
        let table = [[2, 2], [5, 6]];
        let req = |d: &Device, c: usize| table[d.id as usize][c];
        let s = CycleSchedule::without_pilots(10, 2, 5).unwrap();
        let bca = bca_allocate(&devices, s.clone(), &req);
        let gba = gba_allocate(&devices, s, &req);
        assert_eq!(bca.served(), 1);
        assert_eq!(gba.served(), 2);
        assert_eq!(gba.assignments[&0].channel, 1);
    }

    #[test]
    fn search_small_instances() {
        // Every 2-device 2-channel table with requirements in 1..=6 and issue
        // slots in 1..=3: GBA never serves fewer, and some table separates them.
        let mut separating = 0;
        for code in 0..6u32.pow(4) {
            let t: Vec<u32> = (0..4).map(|k| 1 + (code / 6u32.pow(k)) % 6).collect();
            for (t0, t1) in [(1, 1), (1, 2), (2, 1), (3, 1)] {
                let devices = [dev(0, t0), dev(1, t1)];
                let req = |d: &Device, c: usize| t[d.id as usize * 2 + c];
                let s = CycleSchedule::without_pilots(10, 2, 5).unwrap();
                let b = bca_allocate(&devices, s.clone(), &req).served();
                let g = gba_allocate(&devices, s, &req).served();
                if b == 1 && g == 2 {
                    separating += 1;
                }
            }
        }
        assert!(separating > 0);
    }

    #[test]
    fn dump_format() {
        let devices = [dev(1, 1), dev(2, 1)];
        let req = |d: &Device, _: usize| if d.id == 1 { 2 } else { 30 };
        let s = CycleSchedule::without_pilots(50, 1, 25).unwrap();
        let out = gba_allocate(&devices, s, &req);
        assert_eq!(out.dump(), "1\t0\t1,2\tserved\n2\t-\t-\texcluded\n");
    }

    #[test]
    fn validator_flags_tampering() {
        let devices = [dev(1, 1), dev(2, 1)];
        let req = |_: &Device, _: usize| 2;
        let mask = vec![row(10, &[5])];
        let s = CycleSchedule::new(10, 1, 5, mask).unwrap();
        let mut out = gba_allocate(&devices, s, &req);
        assert!(out.validate(&devices, &req).is_empty());
        out.assignments.get_mut(&2).unwrap().slots = vec![2, 5];
        let v = out.validate(&devices, &req);
        assert!(v.iter().any(|x| matches!(x, Violation::PilotUsed { .. })));
        assert!(v.iter().any(|x| matches!(x, Violation::Overlap { .. })));
        assert!(v.iter().any(|x| matches!(x, Violation::Beta { .. })));
        out.excluded.push(1);
        assert!(out
            .validate(&devices, &req)
            .contains(&Violation::Partition(1)));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn gba_rounds_are_optimal_and_schedules_valid(
            n in 1usize..=7,
            c in 1usize..=5,
            issue in proptest::collection::vec(1u32..=20, 7),
            needs in proptest::collection::vec(1u32..=9, 35),
            pilots in proptest::collection::vec(proptest::bool::weighted(0.15), 100),
        ) {
            let slots = 20;
            let delta = 10;
            let devices: Vec<Device> = (0..n as u32).map(|i| dev(i * 3 + 1, issue[i as usize])).collect();
            let req = |d: &Device, ch: usize| needs[((d.id as usize - 1) / 3) * 5 + ch];
            let mask: Vec<Vec<bool>> = (0..c).map(|ch| pilots[ch * 20..ch * 20 + 20].to_vec()).collect();
            let s = CycleSchedule::new(slots, c, delta, mask).unwrap();
            let mut trace = Vec::new();
            let out = gba_allocate_traced(&devices, s.clone(), &req, Some(&mut trace));
            prop_assert_eq!(out.validate(&devices, &req), vec![]);
            prop_assert!(trace.len() <= n);
            let mut pending = n;
            let mut prev_beta = vec![0; c];
            for it in &trace {
                prop_assert!(it.beta_before.iter().zip(&prev_beta).all(|(a, b)| a >= b));
                prev_beta = it.beta_before.clone();
                let (best, _) = brute_force_matching(&it.graph);
                prop_assert_eq!(it.matching.total_weight(&it.graph), best);
                let removed = it.dropped.len() + it.matching.len();
                prop_assert!(removed > 0);
                pending -= removed;
            }
            prop_assert_eq!(pending, 0);
            let bca = bca_allocate(&devices, s, &req);
            prop_assert_eq!(bca.validate(&devices, &req), vec![]);
        }
    }
}
