//! Acceptance suite. Runs every criterion in order, writes one PASS/FAIL
//! line per criterion to stderr (uncaptured, so the lines show up in plain
//! `cargo test` output) and fails if any criterion fails.

mod common;

use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Mutex;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use urllc::allocators::compute_zeta;
use urllc::channel_model::{
    conditional_cdf, gm_params, inverse_conditional_cdf, FadingCoefficient, GaussMarkov,
};
use urllc::matching::{max_weight_matching, BipartiteGraph};
use urllc::pilot_scheduler::PilotPolicy;
use urllc::simulator::{run_simulation, AllocatorKind, Metrics, SimConfig};

use common::{exhaustive_optimum, ks_critical_1pct, ks_statistic};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

#[derive(Default)]
struct Validation {
    simulations: u64,
    allocations: u64,
    violations: u64,
    pipeline_errors: u64,
}

static VALIDATION: Mutex<Validation> = Mutex::new(Validation {
    simulations: 0,
    allocations: 0,
    violations: 0,
    pipeline_errors: 0,
});

/// Run with the schedule validator on and tally its findings.
fn simulate(cfg: SimConfig) -> Metrics {
    let cfg = SimConfig {
        validate: true,
        ..cfg
    };
    let m = run_simulation(&cfg).expect("valid configuration");
    let mut v = VALIDATION.lock().unwrap();
    v.simulations += 1;
    v.allocations += m.topologies.iter().map(|t| t.allocations).sum::<u64>();
    v.violations += m.schedule_violations;
    v.pipeline_errors += m.pipeline_errors;
    m
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(start: Instant, limit_s: f64, detail: String) -> Outcome {
    let t = start.elapsed().as_secs_f64();
    if t < limit_s {
        Ok(detail)
    } else {
        Err(format!("{detail}; took {t:.0}s, limit {limit_s:.0}s"))
    }
}

fn criterion_1_conditional_ks() -> Outcome {
    let start = Instant::now();
    let gamma = 0.95;
    let n = 100_000;
    let process = GaussMarkov::new(gamma).unwrap();
    let crit = ks_critical_1pct(n);
    let mut worst: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for z in [0.2, 1.5, 3.0] {
        for t in [1u32, 3, 10] {
            let params = gm_params(gamma, t).unwrap();
            let mut samples: Vec<f64> = (0..n)
                .map(|_| {
                    let mut h = FadingCoefficient::new(f64::sqrt(z), 0.0);
                    for _ in 0..t {
                        h = process.step(h, &mut rng);
                    }
                    h.power()
                })
                .collect();
            let d = ks_statistic(&mut samples, |x| conditional_cdf(x, z, &params).unwrap());
            if d >= crit {
                return Err(format!("z={z} t={t}: KS {d:.5} >= {crit:.5}"));
            }
            worst = worst.max(d);
        }
    }
    within(
        start,
        60.0,
        format!("max KS {worst:.5} < {crit:.5} over 9 (z, t) pairs"),
    )
}

fn criterion_2_closed_form_b() -> Outcome {
    let mut worst_sum: f64 = 0.0;
    let mut worst_unit: f64 = 0.0;
    for gamma in [0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.97, 0.99] {
        for t in 1..=50u32 {
            let p = gm_params(gamma, t).unwrap();
            let literal: f64 =
                (1.0 - gamma * gamma) * (0..t).map(|j| f64::powi(gamma, 2 * j as i32)).sum::<f64>();
            worst_sum = worst_sum.max((p.b - literal).abs());
            worst_unit = worst_unit.max((p.a * p.a + p.b - 1.0).abs());
        }
    }
    check(
        worst_sum <= 1e-12 && worst_unit <= 1e-12,
        format!("max |b - sum| = {worst_sum:.1e}, max |a^2 + b - 1| = {worst_unit:.1e}"),
    )
}

fn criterion_3_quantile_limit() -> Outcome {
    let rho: f64 = 0.99999;
    let p = gm_params(0.95, 500).unwrap();
    let mut worst: f64 = 0.0;
    for z in [0.2, 1.5, 3.0] {
        let x = inverse_conditional_cdf(1.0 - rho, z, &p).map_err(|e| e.to_string())?;
        worst = worst.max((x + rho.ln()).abs());
    }
    check(
        worst <= 1e-6,
        format!("max |F^-1 + ln rho| = {worst:.2e} at t=500"),
    )
}

fn criterion_4_matching_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut agree = 0;
    for _ in 0..1000 {
        let nl = rng.random_range(1..=7);
        let nr = rng.random_range(1..=7);
        let density = rng.random_range(0.1..=1.0);
        let mut g = BipartiteGraph::new(nl, nr);
        for l in 0..nl {
            for r in 0..nr {
                if rng.random_bool(density) {
                    g.add_edge(l, r, rng.random_range(1..=100));
                }
            }
        }
        let m = max_weight_matching(&g).map_err(|e| e.to_string())?;
        if m.total_weight(&g) == exhaustive_optimum(&g) {
            agree += 1;
        }
    }
    if agree != 1000 {
        return Err(format!("{agree}/1000 instances optimal"));
    }
    within(start, 30.0, "1000/1000 instances optimal".into())
}

fn criterion_5_zeta_golden() -> Outcome {
    let mut row = vec![false; 50];
    row[5] = true;
    row[7] = true;
    let zeta = compute_zeta(3, 3, &row, 4);
    let start = 3u32;
    let slots: Vec<u32> = zeta
        .map(|z| {
            (start + 1..=start + z)
                .filter(|&s| !row[s as usize - 1])
                .collect()
        })
        .unwrap_or_default();
    check(
        zeta == Some(6) && slots == [4, 5, 7, 9],
        format!("zeta = {zeta:?}, slots = {slots:?}"),
    )
}

fn criterion_6_reliability() -> Outcome {
    let start = Instant::now();
    let m = simulate(SimConfig {
        rho: 0.99,
        n_topologies: 100,
        seed: 6,
        ..SimConfig::default()
    });
    if m.transmissions < 100_000 {
        return Err(format!("only {} transmissions", m.transmissions));
    }
    let rate = m.failure_rate();
    let detail = format!(
        "{} / {} served transmissions failed ({rate:.4} <= 0.015)",
        m.reliability_violations, m.transmissions
    );
    if rate > 0.015 {
        return Err(detail);
    }
    within(start, 300.0, detail)
}

fn criterion_7_eta_trend() -> Outcome {
    let start = Instant::now();
    let etas: Vec<f64> = (0..10).map(|k| f64::from(k) / 10.0).collect();
    let f: Vec<f64> = etas
        .iter()
        .map(|&eta| {
            simulate(SimConfig {
                eta,
                ..SimConfig::default()
            })
            .fraction_served_mean
        })
        .collect();
    let (best_k, peak) =
        f.iter().enumerate().fold(
            (0, f64::MIN),
            |acc, (k, &v)| if v > acc.1 { (k, v) } else { acc },
        );
    let curve = f
        .iter()
        .map(|v| format!("{v:.3}"))
        .collect::<Vec<_>>()
        .join(" ");
    let falling = f[5..].windows(2).all(|w| w[1] < w[0]);
    let ok = (0.3..=0.5).contains(&etas[best_k]) && f[0] < peak && falling && f[9] <= 0.5 * peak;
    let detail = format!("peak {peak:.3} at eta={:.1}; curve {curve}", etas[best_k]);
    if !ok {
        return Err(detail);
    }
    within(start, 600.0, detail)
}

fn criterion_8_gba_vs_bca() -> Outcome {
    let start = Instant::now();
    let base = SimConfig {
        n_devices: 200,
        channels: 10,
        gamma: 0.95,
        eta: 0.4,
        ..SimConfig::default()
    };
    let (mut g, mut b) = (0.0, 0.0);
    for seed in 1..=10 {
        g += simulate(SimConfig {
            w: 3,
            seed,
            ..base.clone()
        })
        .fraction_served_mean;
        b += simulate(SimConfig {
            w: 2,
            allocator: AllocatorKind::Bca,
            seed,
            ..base.clone()
        })
        .fraction_served_mean;
    }
    let (g, b) = (g / 10.0, b / 10.0);
    let detail = format!(
        "GBA(W=3) {g:.3} vs BCA(W=2) {b:.3}: +{:.1} pp (need 8)",
        100.0 * (g - b)
    );
    if g - b < 0.08 {
        return Err(detail);
    }
    within(start, 1200.0, detail)
}

fn criterion_9_w_sensitivity() -> Outcome {
    let curve = |gamma: f64| -> Vec<f64> {
        (1..=4)
            .map(|w| {
                simulate(SimConfig {
                    gamma,
                    w,
                    eta: 0.4,
                    ..SimConfig::default()
                })
                .fraction_served_mean
            })
            .collect()
    };
    let slow = curve(0.99);
    let fast = curve(0.9);
    let spread = slow.iter().cloned().fold(f64::MIN, f64::max)
        - slow.iter().cloned().fold(f64::MAX, f64::min);
    let decreasing = fast.windows(2).all(|w| w[1] < w[0]);
    let fmt = |v: &[f64]| {
        v.iter()
            .map(|x| format!("{x:.3}"))
            .collect::<Vec<_>>()
            .join(" ")
    };
    check(
        spread < 0.03 && decreasing,
        format!(
            "gamma=0.99 spread {:.1} pp [{}]; gamma=0.9 [{}]",
            100.0 * spread,
            fmt(&slow),
            fmt(&fast)
        ),
    )
}

fn criterion_10_dynamic_fairness() -> Outcome {
    let base = SimConfig {
        n_devices: 150,
        channels: 7,
        gamma: 0.97,
        eta: 0.4,
        w: 2,
        fairness_bins: 5,
        ..SimConfig::default()
    };
    let rr = simulate(SimConfig {
        pilot_policy: PilotPolicy::RoundRobin,
        ..base.clone()
    });
    let dy = simulate(SimConfig {
        pilot_policy: PilotPolicy::Dynamic,
        ..base
    });
    // last of five bins: distances in [0.8 L, L]
    let outer = |m: &Metrics| m.served_by_distance[4].fraction().unwrap_or(0.0);
    let uplift = outer(&dy) - outer(&rr);
    let overall = dy.fraction_served_mean - rr.fraction_served_mean;
    check(
        uplift >= 0.05 && overall >= -0.01,
        format!(
            "outer 20%: dynamic {:.3} vs round-robin {:.3} (+{:.1} pp); overall {:+.1} pp",
            outer(&dy),
            outer(&rr),
            100.0 * uplift,
            100.0 * overall
        ),
    )
}

/// Ratio of allocation time at N=200 to N=100, summed over eta in
/// {0.3, 0.4, 0.5}. The two sizes are measured in interleaved rounds and
/// each configuration keeps its fastest round, so machine-load drift hits
/// both sides alike.
fn cost_ratio(allocator: AllocatorKind, rounds: usize) -> f64 {
    let etas = [0.3, 0.4, 0.5];
    let mut best = [[f64::INFINITY; 3]; 2];
    for _ in 0..rounds {
        for (k, &eta) in etas.iter().enumerate() {
            for (j, n_devices) in [100, 200].into_iter().enumerate() {
                let t = simulate(SimConfig {
                    n_devices,
                    channels: 10,
                    eta,
                    allocator,
                    timing_repeats: 3,
                    n_topologies: 5,
                    ..SimConfig::default()
                })
                .alloc_ms_mean;
                best[j][k] = best[j][k].min(t);
            }
        }
    }
    best[1].iter().sum::<f64>() / best[0].iter().sum::<f64>()
}

fn criterion_11_allocator_cost() -> Outcome {
    let gba = cost_ratio(AllocatorKind::Gba, 7);
    let bca = cost_ratio(AllocatorKind::Bca, 7);
    check(
        gba >= 3.0 && bca <= 2.5,
        format!(
            "time ratio N=200/N=100: GBA {gba:.2} (need >= 3), BCA {bca:.2} (need <= 2 + 25% noise)"
        ),
    )
}

fn criterion_12_schedule_validity() -> Outcome {
    let v = VALIDATION.lock().unwrap();
    check(
        v.simulations > 0 && v.violations == 0 && v.pipeline_errors == 0,
        format!(
            "{} simulations, {} validated allocations, {} violations, {} pipeline-age errors",
            v.simulations, v.allocations, v.violations, v.pipeline_errors
        ),
    )
}

fn run(id: u32, name: &str, f: fn() -> Outcome) -> bool {
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        Err(p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".into()))
    });
    let (tag, detail) = match &outcome {
        Ok(d) => ("PASS", d),
        Err(d) => ("FAIL", d),
    };
    let line = format!(
        "{tag} criterion {id:>2} {name}: {detail} [{:.1}s]",
        start.elapsed().as_secs_f64()
    );
    // bypass the test harness's output capture
    let _ = writeln!(std::io::stderr().lock(), "{line}");
    outcome.is_ok()
}

#[test]
fn acceptance_criteria() {
    let criteria: [Criterion; 12] = [
        (
            "conditional distribution vs Monte Carlo (KS)",
            criterion_1_conditional_ks,
        ),
        ("closed-form b and a^2 + b = 1", criterion_2_closed_form_b),
        (
            "quantile tends to the no-CSI value",
            criterion_3_quantile_limit,
        ),
        (
            "matching equals exhaustive optimum",
            criterion_4_matching_oracle,
        ),
        ("zeta golden case", criterion_5_zeta_golden),
        (
            "reliability calibration at rho=0.99",
            criterion_6_reliability,
        ),
        (
            "served fraction vs eta is interior-peaked",
            criterion_7_eta_trend,
        ),
        ("GBA beats BCA at N=200, C=10", criterion_8_gba_vs_bca),
        (
            "sensitivity to the computational delay W",
            criterion_9_w_sensitivity,
        ),
        (
            "dynamic pilots help far devices",
            criterion_10_dynamic_fairness,
        ),
        ("relative allocator cost", criterion_11_allocator_cost),
        ("schedule validity", criterion_12_schedule_validity),
    ];
    let failed: Vec<u32> = criteria
        .iter()
        .zip(1..)
        .filter_map(|(&(name, f), id)| (!run(id, name, f)).then_some(id))
        .collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
