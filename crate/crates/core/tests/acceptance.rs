//! The eleven acceptance criteria, one PASS/FAIL line each.

mod common;

use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use graphflow::config::load_config;
use graphflow::estimates::{loglog_fit, slow_decay_T, PowerLawData};
use graphflow::experiment::{execute, RunArtifacts};
use graphflow::faberkrahn::{
    ball_gamma_check, check_assumptions, dcf_monotonicity_check, dirichlet_p_eigenvalue, fk_profile_bruteforce,
    log_grid, EigenOptions, EigenStatus, FkProfile,
};
use graphflow::graph::{ball, FiniteGraph};
use graphflow::plaplacian::{monotonicity_check, summation_by_parts_residual};
use graphflow::solver::{comparison_check, SolverConfig, Trajectory};
use graphflow::{Field, GraphGenerator, Region, VertexId};

use common::{balance_time_z1, bfs_distances, grid_eigenvalue, small_connected_sets};

type Outcome = Result<String, String>;

fn config_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn run_shipped(name: &str) -> RunArtifacts {
    let cfg = load_config(&config_path(name)).expect("shipped config loads");
    execute(&cfg).expect("shipped config runs")
}

fn k2_z1() -> GraphGenerator {
    GraphGenerator::product(FiniteGraph::complete(2).unwrap(), 1).unwrap()
}

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

struct Runs {
    z1p3: RunArtifacts,
    z1p4: RunArtifacts,
    z2p3: RunArtifacts,
}

fn criterion_1() -> Outcome {
    let g = GraphGenerator::lattice(2).unwrap();
    let b = ball(&g, &g.origin(), 10).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for k in 0..100 {
        let p = [2.5, 3.0, 4.0][k % 3];
        let mut u = Field::new();
        let mut f = Field::new();
        for x in b.vertices() {
            u.set(x.clone(), rng.gen_range(-1.0..1.0)).unwrap();
            if rng.gen_bool(0.5) {
                f.set(x.clone(), rng.gen_range(-1.0..1.0)).unwrap();
            }
        }
        worst = worst.max(summation_by_parts_residual(&g, &u, &f, p).unwrap().relative());
    }
    let mut singletons = Vec::new();
    for g in [GraphGenerator::lattice(1).unwrap(), GraphGenerator::lattice(2).unwrap(), k2_z1()] {
        let region = Region::from_vertices(&g, &[g.origin()]).unwrap();
        for p in [2.5, 3.0, 4.0] {
            singletons.push(dirichlet_p_eigenvalue(&region, p, &EigenOptions::default()).unwrap().value);
        }
    }
    let exact = singletons.iter().all(|&l| l == 2.0);
    ensure(
        worst <= 1e-12 && exact,
        format!("worst relative SBP residual {worst:.2e}; singleton eigenvalues all exactly 2: {exact}"),
    )
}

/// Norms and mass recomputed from the stored states with oracle degrees.
fn criterion_2(runs: &Runs) -> Outcome {
    let g = &runs.z1p3.graph;
    let traj = &runs.z1p3.trajectory;
    let deg: Vec<f64> = traj.region().vertices().iter().map(|x| g.degree(x).unwrap()).collect();
    let states: Vec<&[f64]> = std::iter::once(traj.initial())
        .chain(traj.snapshots().iter().map(|s| s.values.as_slice()))
        .collect();
    let lq = |u: &[f64], q: f64| u.iter().zip(&deg).map(|(v, d)| v.abs().powf(q) * d).sum::<f64>().powf(1.0 / q);
    let m0 = lq(states[0], 1.0);
    let drift = states.iter().map(|u| (lq(u, 1.0) - m0).abs() / m0).fold(0.0, f64::max);
    let mut increases = 0;
    for w in states.windows(2) {
        let sup = |u: &[f64]| u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if sup(w[1]) > sup(w[0]) {
            increases += 1;
        }
        for q in [1.5, 2.0, 4.0] {
            if lq(w[1], q) > lq(w[0], q) {
                increases += 1;
            }
        }
    }
    let t_end = *traj.times().last().unwrap();
    ensure(
        drift <= 1e-6 && increases == 0 && t_end >= 1e3,
        format!("mass drift {drift:.2e} to t = {t_end}; {increases} norm increases over {} instants", states.len()),
    )
}

fn fit_line(art: &RunArtifacts, tag: &str, theory: f64, tol: f64) -> (bool, String) {
    let c = art.report.check(tag).expect("check configured");
    let slope = c.slope.unwrap_or(f64::NAN);
    let ok = (slope - theory).abs() <= tol;
    (ok, format!("{} {tag} slope {slope:.4} vs {theory:.4} (+-{tol})", art.report.name))
}

fn criterion_3(runs: &Runs) -> Outcome {
    // N = 2, p = 3: -N/(N(p-2)+p) = -2/5
    let lines = [
        fit_line(&runs.z1p3, "decay_fit", -0.25, 0.05),
        fit_line(&runs.z1p4, "decay_fit", -1.0 / 6.0, 0.05),
        fit_line(&runs.z2p3, "decay_fit", -0.4, 0.07),
    ];
    ensure(
        lines.iter().all(|l| l.0),
        lines.iter().map(|l| l.1.as_str()).collect::<Vec<_>>().join("; "),
    )
}

fn criterion_4(runs: &Runs) -> Outcome {
    let (ok, line) = fit_line(&runs.z1p3, "propagation_fit", 0.25, 0.05);
    ensure(ok, line)
}

/// `sup u(t) * 2 mu(B_R) >= M` at every instant, with the half-mass radius
/// and the ball measure taken from oracle distances.
fn lower_bound_holds(art: &RunArtifacts) -> (usize, usize) {
    let g = &art.graph;
    let traj: &Trajectory = &art.trajectory;
    let x0 = g.origin();
    let n = traj.n();
    let dist = bfs_distances(g, &x0, 2 * n + 2);
    let region = traj.region();
    let d: Vec<u32> = region.vertices().iter().map(|x| dist[x]).collect();
    let deg: Vec<f64> = region.vertices().iter().map(|x| g.degree(x).unwrap()).collect();
    let mut ball_measure = vec![0.0; (2 * n + 3) as usize];
    for (x, &r) in &dist {
        ball_measure[r as usize] += g.degree(x).unwrap();
    }
    for r in 1..ball_measure.len() {
        ball_measure[r] += ball_measure[r - 1];
    }
    let mass: f64 = traj.initial().iter().zip(&deg).map(|(v, w)| v * w).sum();
    let mut held = 0;
    for s in traj.snapshots() {
        let mut by_r = vec![0.0; (n + 1) as usize];
        for i in 0..s.values.len() {
            by_r[d[i] as usize] += s.values[i].abs() * deg[i];
        }
        let mut acc = 0.0;
        let mut radius = n;
        for (r, m) in by_r.iter().enumerate() {
            acc += m;
            if acc >= 0.5 * mass {
                radius = r as u32;
                break;
            }
        }
        let sup = s.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if sup * 2.0 * ball_measure[radius as usize] >= mass {
            held += 1;
        }
    }
    (held, traj.snapshots().len())
}

fn criterion_5(runs: &Runs) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for art in [&runs.z1p3, &runs.z1p4, &runs.z2p3] {
        let (held, total) = lower_bound_holds(art);
        let lib = art.report.check("lower_bound").is_some_and(|c| c.pass);
        ok &= held == total && lib;
        parts.push(format!("{} {held}/{total} (library check {})", art.report.name, if lib { "pass" } else { "fail" }));
    }
    ensure(ok, parts.join("; "))
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst_margin = f64::INFINITY;
    let mut failures = 0;
    for k in 0..50 {
        let g = GraphGenerator::lattice(1 + k % 2).unwrap();
        let support = ball(&g, &g.origin(), 3).unwrap();
        let mut lo = Field::new();
        let mut hi = Field::new();
        for x in support.vertices() {
            let a = if rng.gen_bool(0.7) { rng.gen_range(0.0..1.0) } else { 0.0 };
            let extra = if rng.gen_bool(0.5) { rng.gen_range(0.0..0.5) } else { 0.0 };
            lo.set(x.clone(), a).unwrap();
            hi.set(x.clone(), a + extra).unwrap();
        }
        if hi.is_zero() {
            hi.set(g.origin(), 1.0).unwrap();
        }
        let mut cfg = SolverConfig::new(3.0, log_grid(0.01, 100.0, 25));
        cfg.n0 = 8;
        let out = comparison_check(&g, &hi, &lo, &cfg).unwrap();
        worst_margin = worst_margin.min(out.worst_gap / hi.sup_norm());
        if !out.pass {
            failures += 1;
        }
    }
    ensure(
        failures == 0,
        format!("50 ordered pairs on Z^1 and Z^2; worst gap / sup u01 = {worst_margin:.2e}; {failures} below -1e-8"),
    )
}

fn criterion_7() -> Outcome {
    let p = 3.0;
    let opts = EigenOptions {
        seed: 7,
        ..EigenOptions::default()
    };
    let g1 = GraphGenerator::lattice(1).unwrap();
    let table = fk_profile_bruteforce(&g1, &g1.origin(), 3, p, &opts).unwrap();
    let mut worst_bf: f64 = 0.0;
    for s in &table.subsets {
        worst_bf = worst_bf.max((s.lambda - grid_eigenvalue(&g1, &s.vertices, p, 1e-3)).abs());
    }
    let mut worst_desc: f64 = 0.0;
    let mut count = 0;
    for g in [GraphGenerator::lattice(2).unwrap(), k2_z1()] {
        for set in small_connected_sets(&g, &g.origin(), 3) {
            let region = Region::from_vertices(&g, &set).unwrap();
            let r = dirichlet_p_eigenvalue(&region, p, &opts).unwrap();
            assert_eq!(r.status, EigenStatus::Converged);
            worst_desc = worst_desc.max((r.value - grid_eigenvalue(&g, &set, p, 1e-3)).abs());
            count += 1;
        }
    }
    ensure(
        worst_bf <= 1e-4 && worst_desc <= 1e-4,
        format!(
            "brute force on Z^1 ({} subsets) worst gap {worst_bf:.2e}; descent on {count} sets of Z^2 and K2xZ^1 worst gap {worst_desc:.2e}",
            table.subsets.len()
        ),
    )
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut violations = 0;
    for _ in 0..10_000 {
        let b = 10f64.powf(rng.gen_range(-3.0..3.0));
        let a = b * (1.0 + 10f64.powf(rng.gen_range(-6.0..3.0)));
        let q = 10f64.powf(rng.gen_range(-1.3..1.0));
        let p = rng.gen_range(2.0..8.0f64).max(2.0 + 1e-9);
        if !monotonicity_check(a, b, q, p).unwrap() {
            violations += 1;
        }
    }
    ensure(violations == 0, format!("10000 samples, {violations} violations"))
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let lattice = FkProfile::lattice(2, 3.0, 1.0).unwrap();
    let table: Vec<(f64, f64)> = (0..40).map(|k| 2f64.powi(k)).map(|v| (v, 0.7 * v.powf(-1.5))).collect();
    let tabulated = FkProfile::tabulated(&table, 3.0, 2.0, 1.5).unwrap();
    let mut worst: f64 = 0.0;
    for prof in [&lattice, &tabulated] {
        for _ in 0..1000 {
            let r = rng.gen_range(1.0..4.0);
            let s = 10f64.powf(rng.gen_range(-6.0..6.0));
            let y = prof.psi(r, s);
            let back = prof.psi(r, prof.psi_inverse(r, y).unwrap());
            worst = worst.max((back - y).abs() / y);
        }
    }
    let mut parts = vec![format!("psi round trip worst {worst:.2e}")];
    let mut ok = worst <= 1e-10;
    for (dim, s_lo) in [(1usize, 1e4), (2, 1e7)] {
        let g = GraphGenerator::lattice(dim).unwrap();
        let prof = FkProfile::lattice(dim, 3.0, 1.0).unwrap();
        let assumptions = check_assumptions(&prof, &log_grid(1e-3, 1e9, 240)).unwrap().all_pass();
        let dcf = dcf_monotonicity_check(&prof, 1.0, &log_grid(1e-2, 1e6, 200), 1e-12).unwrap();
        let gamma = ball_gamma_check(&g, &g.origin(), &prof, 1.0, &log_grid(s_lo, s_lo * 100.0, 41)).unwrap();
        ok &= assumptions && dcf.pass && gamma.spread <= 0.1;
        parts.push(format!(
            "Z^{dim}: assumptions {}, dcf monotone {}, ball gamma {:.4} spread {:.3}",
            assumptions, dcf.pass, gamma.gamma, gamma.spread
        ));
    }
    ensure(ok, parts.join("; "))
}

fn criterion_10() -> Outcome {
    let art = run_shipped("slow_decay_1d.json");
    let c = art.report.check("slow_decay").expect("slow_decay configured");
    let slope = c.slope.unwrap_or(f64::NAN);
    let theory = -1.0 / 7.0;
    let data = PowerLawData::new(1, 0.5);
    let prof = FkProfile::lattice(1, 3.0, 1.0).unwrap();
    // T(R) ~ R^{alpha(p-2)+p} = R^{3.5}
    let radii: Vec<u32> = (5..=11).map(|k| 1 << k).collect();
    let ts: Vec<f64> = radii.iter().map(|&r| slow_decay_T(&data, 4.0, r, &prof).unwrap()).collect();
    let rs: Vec<f64> = radii.iter().map(|&r| r as f64).collect();
    let t_slope = loglog_fit(&rs, &ts).unwrap().slope;
    let mut worst_oracle: f64 = 0.0;
    let mut worst_self: f64 = 0.0;
    for r in [0u32, 1, 4, 16, 64, 256, 1024] {
        let (near, far) = balance_time_z1(0.5, 1.0, 4.0, 3.0, 1.0, r as u64, 1 << 20);
        worst_self = worst_self.max((near - far).abs() / far);
        let lib = slow_decay_T(&data, 4.0, r, &prof).unwrap();
        worst_oracle = worst_oracle.max((lib - far).abs() / far);
    }
    ensure(
        (slope - theory).abs() <= 0.05 && (t_slope - 3.5).abs() <= 0.1 && worst_oracle <= 0.01 && worst_self <= 0.01,
        format!(
            "decay slope {slope:.4} vs {theory:.4}; T slope on R in [32, 2048] {t_slope:.3} vs 3.5; T vs oracle {worst_oracle:.2e} (oracle doubling {worst_self:.2e})"
        ),
    )
}

fn criterion_11(runs: &Runs) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for b in &runs.z1p3.bounds {
        if !["sup_bound", "moment_bound", "entropy_bound"].contains(&b.tag.as_str()) {
            continue;
        }
        let good = b.verdict.is_finite() && b.upper_decade_variation < 0.3;
        ok &= good;
        parts.push(format!("{} sup ratio {:.4} variation {:.3}", b.tag, b.verdict, b.upper_decade_variation));
    }
    ensure(ok && parts.len() == 3, parts.join("; "))
}

fn guarded(f: impl FnOnce() -> Outcome) -> Outcome {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        let msg = e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Err(format!("panicked: {msg}"))
    })
}

#[test]
fn acceptance_criteria() {
    let runs = Runs {
        z1p3: run_shipped("lattice1d_p3_decay.json"),
        z1p4: run_shipped("lattice1d_p4_decay.json"),
        z2p3: run_shipped("lattice2d_p3_decay.json"),
    };
    let results: Vec<(u32, &str, Outcome)> = vec![
        (1, "exact identities", guarded(criterion_1)),
        (2, "conservation and monotonicity", guarded(|| criterion_2(&runs))),
        (3, "decay exponents", guarded(|| criterion_3(&runs))),
        (4, "propagation exponent", guarded(|| criterion_4(&runs))),
        (5, "constant-free lower bound", guarded(|| criterion_5(&runs))),
        (6, "comparison principle", guarded(criterion_6)),
        (7, "Faber-Krahn oracle equivalence", guarded(criterion_7)),
        (8, "monotonicity inequality sweep", guarded(criterion_8)),
        (9, "psi machinery", guarded(criterion_9)),
        (10, "slow decay", guarded(criterion_10)),
        (11, "bound-ratio boundedness", guarded(|| criterion_11(&runs))),
    ];
    // Written to the raw handle so the lines survive libtest's output capture.
    let mut out = std::io::stdout().lock();
    let mut failed = Vec::new();
    for (k, name, r) in &results {
        let (verdict, d) = match r {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed.push(*k);
                ("FAIL", d)
            }
        };
        writeln!(out, "criterion {k:>2} {verdict}  {name}: {d}").unwrap();
    }
    out.flush().unwrap();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

#[test]
fn vertex_ids_are_shared_with_the_oracles() {
    let g = GraphGenerator::lattice(3).unwrap();
    let d = bfs_distances(&g, &g.origin(), 4);
    assert_eq!(d[&VertexId::new(&[1, -2, 1])], 4);
}
