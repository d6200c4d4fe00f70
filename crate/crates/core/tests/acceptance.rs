//! Acceptance suite: runs the full evaluation matrix and the property checks,
//! printing one PASS/FAIL line per criterion.
//!
//! Exits with status 0 after reporting; set `ACCEPTANCE_STRICT=1` to exit
//! nonzero when any criterion fails.

mod common;

use std::f64::consts::TAU;
use std::process::ExitCode;
use std::time::Instant;

use geodeflect::experiment::{run_scenario, Scenario, ScenarioConfig, ScenarioReport};
use geodeflect::geometry::{try_merge, Angle, Point, Sector};
use geodeflect::routing::merge_all;
use geodeflect::simulator::{Packet, Simulator};
use geodeflect::topology::{Connectivity, Generator, RngSeed};
use geodeflect::{Policy, RoutingConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TABLE_I: [(u32, f64); 5] = [(1, 33.6), (2, 33.0), (3, 32.7), (4, 33.2), (5, 33.6)];
const TABLE_I_REL_TOL: f64 = 0.15;
const TABLE_I_MAX_SPREAD: f64 = 2.0;
const DEFLECTION_MEAN_LOSS_MAX: f64 = 0.04;
const DEFLECTION_POINT_LOSS_MAX: f64 = 0.08;
const HIGH_DENSITY_FROM: f64 = 8.0;
const LOW_DENSITY: f64 = 4.0;
const GREEDY_LOW_DENSITY_LOSS_MIN: f64 = 0.70;
const GREEDY_OVER_DEFLECTION_FACTOR: f64 = 5.0;
const OPTIMIZED_LOSS_DIFF_MAX: f64 = 0.02;
const VOID_LOSS_MARGIN: f64 = 0.15;
const ORACLE_INSTANCES: usize = 200;
const ORACLE_MAX_NODES: usize = 60;
const ALGEBRA_TRIALS: usize = 10_000;

struct Verdict {
    id: u32,
    pass: bool,
    what: &'static str,
    detail: String,
}

fn mean(report: &ScenarioReport, density: f64, k: u32, policy: Policy, f: fn(&geodeflect::experiment::MetricsRecord) -> Option<f64>) -> f64 {
    report.record(density, k, policy).and_then(f).unwrap_or(f64::NAN)
}

fn loss(r: &geodeflect::experiment::MetricsRecord) -> Option<f64> {
    r.loss.map(|s| s.mean)
}

fn route_length(r: &geodeflect::experiment::MetricsRecord) -> Option<f64> {
    r.route_length.map(|s| s.mean)
}

fn save(report: &ScenarioReport) {
    let path = std::path::Path::new(env!("CARGO_TARGET_TMPDIR")).join(format!("acceptance_{}.csv", report.config.scenario));
    match report.to_csv_string().map(|s| std::fs::write(&path, s)) {
        Ok(Ok(())) => eprintln!("  wrote {}", path.display()),
        _ => eprintln!("  could not write {}", path.display()),
    }
}

fn run(scenario: Scenario, policies: &[Policy]) -> ScenarioReport {
    let mut cfg = ScenarioConfig::new(scenario);
    cfg.policies = policies.to_vec();
    let t = Instant::now();
    let report = run_scenario(&cfg).expect("scenario runs");
    eprintln!("  {scenario}: {:.0}s, {} generation failures", t.elapsed().as_secs_f64(), report.failures.len());
    save(&report);
    report
}

fn table_i(k_sweep: &ScenarioReport) -> Verdict {
    let lengths: Vec<(u32, f64, f64)> =
        TABLE_I.iter().map(|&(k, paper)| (k, mean(k_sweep, 8.0, k, Policy::Deflection, route_length), paper)).collect();
    let at = |k: u32| lengths.iter().find(|l| l.0 == k).unwrap().1;
    let ordering = at(3) <= at(1) && at(3) <= at(5);
    let max = lengths.iter().map(|l| l.1).fold(f64::MIN, f64::max);
    let min = lengths.iter().map(|l| l.1).fold(f64::MAX, f64::min);
    let absolute = lengths.iter().all(|&(_, got, paper)| ((got - paper) / paper).abs() <= TABLE_I_REL_TOL);
    let values: Vec<String> = lengths.iter().map(|(k, got, paper)| format!("k={k}: {got:.2} vs {paper}")).collect();
    Verdict {
        id: 1,
        pass: ordering && max - min <= TABLE_I_MAX_SPREAD && absolute,
        what: "k-sweep route length: minimum at k=3, spread <= 2 hops, within 15% of reference",
        detail: format!("ordering={ordering} spread={:.3} absolute={absolute} [{}]", max - min, values.join(", ")),
    }
}

fn deflection_loss(udg: &ScenarioReport) -> Verdict {
    let high: Vec<(f64, f64)> = udg
        .config
        .densities
        .iter()
        .filter(|&&d| d >= HIGH_DENSITY_FROM)
        .map(|&d| (d, mean(udg, d, 3, Policy::Deflection, loss)))
        .collect();
    let avg = high.iter().map(|h| h.1).sum::<f64>() / high.len() as f64;
    let worst = high.iter().map(|h| h.1).fold(f64::MIN, f64::max);
    let values: Vec<String> = high.iter().map(|(d, l)| format!("{d}: {l:.4}")).collect();
    Verdict {
        id: 2,
        pass: avg < DEFLECTION_MEAN_LOSS_MAX && worst < DEFLECTION_POINT_LOSS_MAX,
        what: "UDG deflection loss at density >= 8: mean < 0.04, every point < 0.08",
        detail: format!("mean={avg:.4} worst={worst:.4} [{}]", values.join(", ")),
    }
}

fn greedy_low_density(udg: &ScenarioReport) -> Verdict {
    let greedy = mean(udg, LOW_DENSITY, 3, Policy::Greedy, loss);
    let deflection = mean(udg, LOW_DENSITY, 3, Policy::Deflection, loss);
    let absolute = greedy > GREEDY_LOW_DENSITY_LOSS_MIN;
    let ratio = greedy >= GREEDY_OVER_DEFLECTION_FACTOR * deflection;
    Verdict {
        id: 3,
        pass: absolute || ratio,
        what: "UDG greedy loss at density 4 > 0.70 (or >= 5x deflection loss)",
        detail: format!("greedy={greedy:.4} deflection={deflection:.4} absolute={absolute} ratio={ratio}"),
    }
}

fn optimized_equivalence(udg: &ScenarioReport) -> Verdict {
    let diffs: Vec<(f64, f64)> = udg
        .config
        .densities
        .iter()
        .map(|&d| {
            let a = mean(udg, d, 3, Policy::DeflectionOptimized, loss);
            let b = mean(udg, d, 3, Policy::Deflection, loss);
            (d, (a - b).abs())
        })
        .collect();
    let worst = diffs.iter().map(|d| d.1).fold(0.0, f64::max);
    Verdict {
        id: 4,
        pass: diffs.iter().all(|d| d.1 <= OPTIMIZED_LOSS_DIFF_MAX),
        what: "|loss(optimized) - loss(deflection)| <= 0.02 at every UDG point",
        detail: format!("worst difference={worst:.4}"),
    }
}

fn void_scenario(udg: &ScenarioReport, proxi: &ScenarioReport) -> Verdict {
    let mut ok_margin = true;
    let mut ok_greedy = true;
    let mut ok_length = true;
    let mut values = Vec::new();
    for &d in &proxi.config.densities {
        let pd = mean(proxi, d, 3, Policy::Deflection, loss);
        let pg = mean(proxi, d, 3, Policy::Greedy, loss);
        let ud = mean(udg, d, 3, Policy::Deflection, loss);
        let pl = mean(proxi, d, 3, Policy::Deflection, route_length);
        let ul = mean(udg, d, 3, Policy::Deflection, route_length);
        ok_margin &= pd <= ud + VOID_LOSS_MARGIN;
        ok_greedy &= pd < pg;
        ok_length &= pl > ul;
        values.push(format!("{d}: loss {pd:.3}/udg {ud:.3}/greedy {pg:.3}, length {pl:.2}/udg {ul:.2}"));
    }
    Verdict {
        id: 5,
        pass: ok_margin && ok_greedy && ok_length,
        what: "proxi-graph with void: loss <= UDG + 0.15, < greedy, longer routes than UDG",
        detail: format!("margin={ok_margin} below_greedy={ok_greedy} longer={ok_length} [{}]", values.join("; ")),
    }
}

fn oracle_equivalence() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let cfg = RoutingConfig { sector_generalization: false, ..RoutingConfig::with_policy(Policy::Deflection) };
    let mut packets = 0usize;
    let mut disagreements = 0usize;
    let mut instances = 0usize;
    while instances < ORACLE_INSTANCES {
        let n = rng.random_range(10..=ORACLE_MAX_NODES);
        let radius = rng.random_range(0.25..0.6);
        let Ok(t) = Generator::new(n).with_connectivity(Connectivity::Resample).udg(radius, RngSeed(rng.random())) else {
            continue;
        };
        instances += 1;
        let mut sim = Simulator::new(&t, cfg.clone());
        for src in t.nodes() {
            for dst in t.nodes().filter(|&d| d != src) {
                let mut p = Packet::new(0, 0, src, dst, t.position(dst));
                let got = sim.forward_packet(&mut p, 0).delivered;
                packets += 1;
                if got != common::monotone_reachable(&t, src, dst) {
                    disagreements += 1;
                }
            }
        }
    }
    Verdict {
        id: 6,
        pass: disagreements == 0,
        what: "exact-destination deflection delivers iff a strictly-improving path exists",
        detail: format!("{instances} instances, {packets} packets, {disagreements} disagreements"),
    }
}

fn loop_freedom(reports: &[&ScenarioReport]) -> Verdict {
    let aborts: usize = reports.iter().flat_map(|r| &r.records).map(|r| r.safety_cap_aborts).sum();
    let duplicates: usize = reports.iter().flat_map(|r| &r.records).map(|r| r.duplicate_forwards).sum();
    Verdict {
        id: 7,
        pass: aborts == 0 && duplicates == 0,
        what: "zero safety-cap aborts and zero duplicate forwards across all runs",
        detail: format!("aborts={aborts} duplicates={duplicates}"),
    }
}

fn sector_algebra() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let tol = 1e-7;

    // merge soundness: the merged arc covers both inputs and nothing else
    let mut merged = 0;
    let mut bad_merge = 0;
    for _ in 0..ALGEBRA_TRIALS {
        let delta_d = rng.random_range(0.0..0.2);
        let d1: f64 = rng.random_range(0.0..1.0);
        let d2 = (d1 + 0.999 * rng.random_range(-delta_d..=delta_d)).max(0.0);
        let s1 = common::random_sector(&mut rng, d1);
        let s2 = common::random_sector(&mut rng, d2);
        let Some(m) = try_merge(&s1, &s2, delta_d) else {
            // refusal is only allowed when the arcs are disjoint
            let touching = common::in_arc(&s1, s2.angle_min().radians(), 0.0)
                || common::in_arc(&s2, s1.angle_min().radians(), 0.0);
            if touching {
                bad_merge += 1;
            }
            continue;
        };
        merged += 1;
        let mut ok = m.d_min() == d1.min(d2);
        for _ in 0..32 {
            let a = s1.angle_min().radians() + rng.random_range(0.0..=s1.width());
            let b = s2.angle_min().radians() + rng.random_range(0.0..=s2.width());
            ok &= common::in_arc(&m, a, tol) && common::in_arc(&m, b, tol);
            if !m.is_full() {
                let c = m.angle_min().radians() + rng.random_range(0.0..=m.width());
                ok &= common::in_arc(&s1, c, tol) || common::in_arc(&s2, c, tol);
            }
        }
        if !ok {
            bad_merge += 1;
        }
    }

    // wrap-around containment against an independent atan2 oracle
    let mut bad_wrap = 0;
    let apex = Point::new(0.3, -0.2);
    for _ in 0..ALGEBRA_TRIALS {
        let start = rng.random_range(TAU - 1.0..TAU);
        let width = rng.random_range(1.0..3.0);
        let d_min = rng.random_range(0.0..0.5);
        let s = Sector::from_arc(Angle::new(start), width, d_min).unwrap();
        let p = Point::new(apex.x + rng.random_range(-1.0..1.0), apex.y + rng.random_range(-1.0..1.0));
        let (dx, dy) = (p.x - apex.x, p.y - apex.y);
        let r = dx.hypot(dy);
        let off = common::ccw(start, dy.atan2(dx));
        if (off - width).abs() < 1e-6 || off.min(TAU - off) < 1e-6 || (r - d_min).abs() < 1e-9 {
            continue;
        }
        let expected = r >= d_min && off <= width;
        if s.contains(apex, p) != expected {
            bad_wrap += 1;
        }
    }

    // refusal when minimum distances differ by more than the tolerance
    let mut bad_refusal = 0;
    for _ in 0..ALGEBRA_TRIALS {
        let delta_d = rng.random_range(0.0..0.1);
        let d1 = rng.random_range(0.0..1.0);
        let d2 = d1 + delta_d + rng.random_range(1e-6..0.5);
        let s1 = common::random_sector(&mut rng, d1);
        let s2 = Sector::from_arc(s1.angle_min().rotate(rng.random_range(0.0..s1.width())), 0.5, d2).unwrap();
        let refused = try_merge(&s1, &s2, delta_d).is_none() && try_merge(&s2, &s1, delta_d).is_none();
        if !refused || merge_all(&[s1, s2], delta_d).len() != 2 {
            bad_refusal += 1;
        }
    }

    Verdict {
        id: 8,
        pass: bad_merge == 0 && bad_wrap == 0 && bad_refusal == 0 && merged > 0,
        what: "sector algebra: merge soundness, wrap-around containment, refusal on d_min gap",
        detail: format!(
            "{ALGEBRA_TRIALS} trials each; merged={merged} merge failures={bad_merge} wrap failures={bad_wrap} refusal failures={bad_refusal}"
        ),
    }
}

fn main() -> ExitCode {
    let started = Instant::now();
    eprintln!("running k_sweep, udg_density_sweep and proxigraph_void (single pass each)");
    let k_sweep = run(Scenario::KSweep, &[Policy::Deflection]);
    let udg = run(Scenario::UdgDensitySweep, &Policy::ALL);
    let proxi = run(Scenario::ProxigraphVoid, &Policy::ALL);

    let verdicts = [
        table_i(&k_sweep),
        deflection_loss(&udg),
        greedy_low_density(&udg),
        optimized_equivalence(&udg),
        void_scenario(&udg, &proxi),
        oracle_equivalence(),
        loop_freedom(&[&k_sweep, &udg, &proxi]),
        sector_algebra(),
    ];
    for v in &verdicts {
        println!("{} criterion {}: {} | {}", if v.pass { "PASS" } else { "FAIL" }, v.id, v.what, v.detail);
    }
    let failed: Vec<u32> = verdicts.iter().filter(|v| !v.pass).map(|v| v.id).collect();
    println!(
        "acceptance: {}/{} criteria pass{} ({:.0}s)",
        verdicts.len() - failed.len(),
        verdicts.len(),
        if failed.is_empty() { String::new() } else { format!(", failing: {failed:?}") },
        started.elapsed().as_secs_f64()
    );
    let strict = std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    if strict && !failed.is_empty() {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
