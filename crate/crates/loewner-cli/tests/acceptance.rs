//! Acceptance suite: one test per criterion, each printing a pass/fail line
//! with the measured figure of merit. Tolerances are pinned here.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use num_complex::Complex64;

use loewner::geometry::cayley_inv_raw;
use loewner::{
    autonomous, check_characteristics, check_duality_roundtrip, check_semigroup,
    chordal_field_halfplane, chordal_solve, decreasing_chain, domain_time, duality_transform,
    evolution_family, general_field, hcap_estimate, pde_convergence, pseudo_dist, radial_field,
    reverse_family, solve_forward, trace_hull, transport_to_disk, two_point_check, Atom,
    ChainSamples, ChordalDirection, DiskPoint, DrivingFunction, HalfPlanePoint, HerglotzField,
    HerglotzFunctionSpec, SolverConfig,
};

use loewner::family::{default_spatial_grid, default_time_triples};
use loewner_cli::emit::parse_trajectory_csv;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn zero_driver(horizon: f64) -> DrivingFunction {
    DrivingFunction::constant_real(0.0, horizon).unwrap()
}

fn minus_w(horizon: f64) -> HerglotzField {
    autonomous(
        c(0.0, 0.0),
        HerglotzFunctionSpec::constant(1.0).unwrap(),
        horizon,
    )
    .unwrap()
}

fn radial_one(horizon: f64) -> HerglotzField {
    radial_field(DrivingFunction::constant(c(1.0, 0.0), horizon).unwrap()).unwrap()
}

fn transported_slit(horizon: f64) -> HerglotzField {
    transport_to_disk(&chordal_field_halfplane(zero_driver(horizon)).unwrap()).unwrap()
}

fn general_example(horizon: f64) -> HerglotzField {
    let tau = DrivingFunction::constant(c(0.2, 0.1), horizon).unwrap();
    let p = HerglotzFunctionSpec::new(
        vec![
            Atom {
                weight: 0.6,
                point: c(1.0, 0.0),
            },
            Atom {
                weight: 0.4,
                point: c(0.0, -1.0),
            },
        ],
        0.0,
    )
    .unwrap();
    general_field(tau, vec![(0.0, p)]).unwrap()
}

/// Upper-half-plane branch of the square root.
fn sqrt_upper(w: Complex64) -> Complex64 {
    let r = w.sqrt();
    if r.im < 0.0 {
        -r
    } else {
        r
    }
}

fn report(id: u32, name: &str, pass: bool, detail: &str) {
    println!(
        "criterion {id:02} ({name}): {} — {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {id:02} ({name}) failed: {detail}");
}

#[test]
fn criterion_01_vertical_slit_chordal_oracle() {
    let start = Instant::now();
    let lambda = zero_driver(1.0);
    let cfg = SolverConfig::default();
    let mut worst = 0.0_f64;
    for &re in &[-2.0, -1.0, 0.5, 1.0, 2.0] {
        for &im in &[0.3, 0.7, 1.2, 2.0, 3.0] {
            let z = HalfPlanePoint::from_parts(re, im).unwrap();
            for &t in &[0.25, 0.5, 1.0] {
                let traj =
                    chordal_solve(&lambda, z, t, ChordalDirection::Grow, &cfg).unwrap();
                assert!(traj.is_completed());
                let expect = sqrt_upper(z.value() * z.value() + 4.0 * t);
                worst = worst.max((traj.end_value() - expect).norm());
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    report(
        1,
        "vertical-slit chordal oracle",
        worst < 1e-8 && elapsed < 1.0,
        &format!("max endpoint error {worst:.3e} over 25 points x 3 times, {elapsed:.3} s"),
    );
}

#[test]
fn criterion_02_capacity_normalization() {
    let start = Instant::now();
    let cfg = SolverConfig::default();
    let c0 = hcap_estimate(&zero_driver(1.0), 1.0, 100.0, &cfg)
        .unwrap()
        .coefficient;
    let c5 = hcap_estimate(
        &DrivingFunction::constant_real(5.0, 1.0).unwrap(),
        1.0,
        100.0,
        &cfg,
    )
    .unwrap()
    .coefficient;
    let err = (c0 - 2.0).abs().max((c5 - 2.0).abs());
    let elapsed = start.elapsed().as_secs_f64();
    report(
        2,
        "capacity normalization",
        err < 1e-5 && elapsed < 5.0,
        &format!("lambda=0 gives {c0:.9}, lambda=5 gives {c5:.9}, {elapsed:.3} s"),
    );
}

#[test]
fn criterion_03_hull_tip() {
    let start = Instant::now();
    let trace = trace_hull(&zero_driver(1.0), &[1.0], 1e-4, &SolverConfig::default()).unwrap();
    let err = (trace.tips_refined[0] - c(0.0, 2.0)).norm();
    let elapsed = start.elapsed().as_secs_f64();
    report(
        3,
        "hull tip",
        err < 1e-4 && elapsed < 5.0,
        &format!("tip {} misses 2i by {err:.3e}, {elapsed:.3} s", trace.tips_refined[0]),
    );
}

#[test]
fn criterion_04_radial_first_integral() {
    let start = Instant::now();
    let field = radial_one(1.0);
    let cfg = SolverConfig::default();
    let one = c(1.0, 0.0);
    let kfun = |w: Complex64| w / ((one + w) * (one + w));
    let mut worst = 0.0_f64;
    for &z in default_spatial_grid().iter() {
        for &(s, t) in &[(0.0, 0.7), (0.0, 1.0), (0.3, 1.0)] {
            let traj = solve_forward(&field, DiskPoint::new(z).unwrap(), s, t, &cfg).unwrap();
            let residual = (kfun(traj.end_value()) - (s - t).exp() * kfun(z)).norm();
            worst = worst.max(residual);
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    report(
        4,
        "radial constant-driver first integral",
        worst < 1e-9 && elapsed < 1.0,
        &format!("max residual {worst:.3e} over 25 points, {elapsed:.3} s"),
    );
}

#[test]
fn criterion_05_semigroup_laws() {
    let start = Instant::now();
    let cfg = SolverConfig::default();
    let grid = default_spatial_grid();
    let triples = default_time_triples((0.0, 0.9));
    let mut worst = 0.0_f64;
    for field in [radial_one(1.0), transported_slit(1.0), general_example(1.0)] {
        let fwd = evolution_family(field.clone(), cfg).unwrap();
        let ef2 = check_semigroup(&fwd, &grid, &triples, 1e-8).unwrap();
        assert!(ef2.pass, "EF2 residual {}", ef2.max_residual);
        let rev = reverse_family(field, cfg).unwrap();
        let ref2 = check_semigroup(&rev, &grid, &triples, 1e-8).unwrap();
        assert!(ref2.pass, "REF2 residual {}", ref2.max_residual);
        worst = worst.max(ef2.max_residual).max(ref2.max_residual);
    }
    let elapsed = start.elapsed().as_secs_f64();
    report(
        5,
        "semigroup laws",
        worst < 1e-8 && elapsed < 30.0,
        &format!("max EF2/REF2 residual {worst:.3e} over 3 fields, {elapsed:.2} s"),
    );
}

#[test]
fn criterion_06_duality_roundtrip() {
    let cfg = SolverConfig::default();
    let grid = default_spatial_grid();
    let big_t = 0.9_f64;
    let pairs: Vec<(f64, f64)> = default_time_triples((0.0, big_t))
        .iter()
        .map(|&(s, _, t)| (s, t))
        .collect();
    let mut worst_roundtrip = 0.0_f64;
    for field in [radial_one(1.0), transported_slit(1.0), general_example(1.0)] {
        let r = check_duality_roundtrip(&field, big_t, &grid, &pairs, &cfg, 1e-7).unwrap();
        assert!(r.pass, "roundtrip residual {}", r.max_residual);
        worst_roundtrip = worst_roundtrip.max(r.max_residual);
    }
    // double transform restores the original values
    let mut worst_double = 0.0_f64;
    for field in [radial_one(1.0), transported_slit(1.0)] {
        let rev = reverse_family(field, cfg).unwrap();
        let double = duality_transform(&duality_transform(&rev, big_t).unwrap(), big_t).unwrap();
        for &(s, t) in &pairs {
            for &z in grid.iter().take(8) {
                let a = rev.evaluate(s, t, z).unwrap();
                let b = double.evaluate(s, t, z).unwrap();
                worst_double = worst_double.max((a - b).norm());
            }
        }
    }
    report(
        6,
        "duality round-trip",
        worst_roundtrip < 1e-7 && worst_double < 1e-10,
        &format!("reverse-vs-transformed {worst_roundtrip:.3e}, double transform {worst_double:.3e}"),
    );
}

#[test]
fn criterion_07_pde_residual_convergence() {
    let start = Instant::now();
    let cfg = SolverConfig::default();
    let points = [c(0.25, 0.15), c(-0.3, 0.2)];
    let times = [0.4];
    let steps = [1e-3, 5e-4, 2.5e-4];
    let mut all_ratios = Vec::new();
    for field in [transported_slit(1.0), minus_w(1.0)] {
        let chain = decreasing_chain(field.clone(), cfg).unwrap();
        let conv = pde_convergence(&chain, &field, &points, &times, &steps, 1e-5).unwrap();
        all_ratios.extend(conv.log2_ratios);
    }
    let ok = all_ratios.iter().all(|r| (1.8..=2.2).contains(r));
    let elapsed = start.elapsed().as_secs_f64();
    report(
        7,
        "PDE residual second-order convergence",
        ok && elapsed < 30.0,
        &format!("log2 ratios {all_ratios:.3?}, {elapsed:.2} s"),
    );
}

#[test]
fn criterion_08_characteristic_constancy() {
    let cfg = SolverConfig::default();
    let starts: Vec<DiskPoint> = (0..20)
        .map(|k| {
            let theta = std::f64::consts::TAU * (k as f64 + 0.5) / 20.0;
            DiskPoint::new(Complex64::from_polar(0.3, theta)).unwrap()
        })
        .collect();
    let t_grid: Vec<f64> = (1..=5).map(|i| 0.05 * i as f64).collect();
    let mut worst = 0.0_f64;
    for field in [radial_one(1.0), transported_slit(1.0), general_example(1.0)] {
        let chain = decreasing_chain(field.clone(), cfg).unwrap();
        let r = check_characteristics(&chain, &field, &starts, &t_grid, 1e-8).unwrap();
        assert!(r.pass, "drift {}", r.max_residual);
        worst = worst.max(r.max_residual);
    }
    report(
        8,
        "characteristic constancy",
        worst < 1e-8,
        &format!("max drift {worst:.3e} along 20 characteristics x 3 fields"),
    );
}

#[test]
fn criterion_09_domain_time_oracle() {
    let cfg = SolverConfig::default();
    let auto_chain = decreasing_chain(minus_w(3.0), cfg).unwrap();
    let t_auto = domain_time(&auto_chain, DiskPoint::from_parts(0.5, 0.0).unwrap()).unwrap();
    let err_auto = (t_auto - std::f64::consts::LN_2).abs();
    let slit_chain = decreasing_chain(transported_slit(2.0), cfg).unwrap();
    let mut err_slit = 0.0_f64;
    for &y in &[0.5_f64, 1.0, 2.0] {
        let z = DiskPoint::new(cayley_inv_raw(c(0.0, y))).unwrap();
        let t = domain_time(&slit_chain, z).unwrap();
        err_slit = err_slit.max((t - y * y / 4.0).abs());
    }
    report(
        9,
        "domain-time oracle",
        err_auto < 1e-8 && err_slit < 1e-8,
        &format!("ln 2 error {err_auto:.3e}, chordal y^2/4 error {err_slit:.3e}"),
    );
}

#[test]
fn criterion_10_two_point_characterization() {
    let cfg = SolverConfig::default();
    let chain = decreasing_chain(minus_w(1.5), cfg).unwrap();
    let zeta1 = DiskPoint::from_parts(0.3, 0.0).unwrap();
    let zeta2 = DiskPoint::from_parts(-0.2, 0.25).unwrap();
    let points = vec![
        zeta1.value(),
        zeta2.value(),
        c(0.45, 0.0),
        c(0.0, -0.5),
        c(0.2, 0.4),
        c(-0.35, -0.2),
    ];
    let times: Vec<f64> = (0..=64).map(|i| i as f64 / 64.0).collect();
    let samples = ChainSamples::from_chain(&chain, times.clone(), points.clone()).unwrap();
    let honest = two_point_check(&samples, zeta1, zeta2, 1.0).unwrap();
    let growth_ok = honest
        .level_ratios
        .windows(2)
        .all(|w| w[1] <= 1.05 * w[0] + 1e-12);

    // corrupted samples: marked points frozen, a third point jumps
    let mut corrupted_values = vec![points.clone(); times.len()];
    for (i, row) in corrupted_values.iter_mut().enumerate() {
        if i >= times.len() / 2 {
            row[3] = c(0.6, -0.6);
        }
    }
    let corrupted = two_point_check(
        &ChainSamples::new(times, points, corrupted_values).unwrap(),
        zeta1,
        zeta2,
        1.0,
    )
    .unwrap();
    report(
        10,
        "two-point characterization",
        honest.pass && growth_ok && !corrupted.pass,
        &format!(
            "level ratios {:.6?} (growth < 5%), corrupted flagged = {}",
            honest.level_ratios, !corrupted.pass
        ),
    );
}

#[test]
fn criterion_11_schwarz_pick_monotonicity() {
    let cfg = SolverConfig::default();
    let pairs = [
        (c(0.3, 0.1), c(-0.2, 0.4)),
        (c(0.5, -0.3), c(0.1, 0.1)),
        (c(-0.45, -0.1), c(0.0, 0.55)),
    ];
    let mut worst_growth = 0.0_f64;
    for field in [
        minus_w(1.0),
        radial_one(1.0),
        transported_slit(1.0),
        general_example(1.0),
    ] {
        for &(a, b) in &pairs {
            let mut w1 = DiskPoint::new(a).unwrap();
            let mut w2 = DiskPoint::new(b).unwrap();
            let mut prev = pseudo_dist(w1, w2);
            for k in 1..=12 {
                let t0 = 0.9 * (k - 1) as f64 / 12.0;
                let t1 = 0.9 * k as f64 / 12.0;
                w1 = DiskPoint::new(
                    solve_forward(&field, w1, t0, t1, &cfg).unwrap().end_value(),
                )
                .unwrap();
                w2 = DiskPoint::new(
                    solve_forward(&field, w2, t0, t1, &cfg).unwrap().end_value(),
                )
                .unwrap();
                let now = pseudo_dist(w1, w2);
                worst_growth = worst_growth.max(now - prev);
                prev = now;
            }
        }
    }
    report(
        11,
        "Schwarz-Pick monotonicity",
        worst_growth <= 1e-9,
        &format!("max pseudohyperbolic growth {worst_growth:.3e} over sampled times"),
    );
}

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_loewner")
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn run_to(dir: &Path, command: &str, config: &str) -> std::process::Output {
    Command::new(bin())
        .args([
            command,
            "--config",
            configs_dir().join(config).to_str().unwrap(),
            "--out",
            dir.to_str().unwrap(),
        ])
        .output()
        .unwrap()
}

#[test]
fn criterion_12_cli_contract() {
    let base = std::env::temp_dir().join(format!("loewner-acceptance-{}", std::process::id()));
    let runs = [
        ("chain", "chain_chordal.toml", "chain.csv"),
        ("hull", "hull.toml", "hull.csv"),
        ("verify", "verify_autonomous.toml", "verify.json"),
        ("duality", "duality_radial.toml", "duality.csv"),
    ];
    // exit codes and byte stability across re-runs
    let mut artifacts = Vec::new();
    for (command, config, artifact) in runs {
        let dir_a = base.join(format!("{command}-a"));
        let dir_b = base.join(format!("{command}-b"));
        for dir in [&dir_a, &dir_b] {
            std::fs::create_dir_all(dir).unwrap();
            let out = run_to(dir, command, config);
            assert_eq!(
                out.status.code(),
                Some(0),
                "{command} exit: {}",
                String::from_utf8_lossy(&out.stderr)
            );
        }
        let a = std::fs::read(dir_a.join(artifact)).unwrap();
        let b = std::fs::read(dir_b.join(artifact)).unwrap();
        assert_eq!(a, b, "{command} artifact not byte-stable");
        artifacts.push((command, dir_a.join(artifact)));
    }

    // chain.csv reproduces criterion 1 values
    let chain_text = std::fs::read_to_string(&artifacts[0].1).unwrap();
    let rows = parse_trajectory_csv(&chain_text).unwrap();
    assert_eq!(rows.len(), 75);
    let mut worst_chain = 0.0_f64;
    for row in &rows {
        assert_eq!(row.status, "completed");
        let expect = sqrt_upper(row.z0 * row.z0 + 4.0 * row.t);
        worst_chain = worst_chain.max((row.w - expect).norm());
    }
    assert!(worst_chain < 1e-8, "chain CSV error {worst_chain:.3e}");

    // hull.csv reproduces criteria 2 and 3 values at t = 1
    let hull_text = std::fs::read_to_string(&artifacts[1].1).unwrap();
    let last = hull_text.lines().last().unwrap();
    let fields: Vec<f64> = last.split(',').map(|x| x.parse().unwrap()).collect();
    let (t, tip_re, tip_im, hcap) = (fields[0], fields[3], fields[4], fields[5]);
    assert_eq!(t, 1.0);
    let tip_err = (c(tip_re, tip_im) - c(0.0, 2.0)).norm();
    assert!(tip_err < 1e-4, "tip error {tip_err:.3e}");
    assert!((hcap - 2.0).abs() < 1e-5, "hcap {hcap}");

    // verify bundle passes
    let bundle: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&artifacts[2].1).unwrap()).unwrap();
    assert_eq!(bundle["all_pass"], serde_json::Value::Bool(true));

    // duality residual column stays below the roundtrip tolerance
    let duality_text = std::fs::read_to_string(&artifacts[3].1).unwrap();
    let mut worst_duality = 0.0_f64;
    for line in duality_text.lines().skip(1) {
        let residual: f64 = line.split(',').next_back().unwrap().parse().unwrap();
        worst_duality = worst_duality.max(residual);
    }
    assert!(worst_duality < 1e-7, "duality residual {worst_duality:.3e}");

    report(
        12,
        "CLI contract",
        true,
        &format!(
            "4 configs byte-stable; chain err {worst_chain:.2e}, tip err {tip_err:.2e}, \
             hcap err {:.2e}, duality residual {worst_duality:.2e}",
            (hcap - 2.0).abs()
        ),
    );
}
