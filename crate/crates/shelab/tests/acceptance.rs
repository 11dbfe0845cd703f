//! Acceptance suite: one test per criterion, each printing a single
//! PASS line with the measured numbers when it holds and panicking
//! with them when it does not. Run with `--nocapture` to see the
//! lines for passing criteria.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use shelab::conditions::{hua_check, max_lipschitz};
use shelab::heatinit::{g_rho, heat_kernel, log_grid};
use shelab::invariant::{kb_average_from_samples, kb_convergence, observe, OccupationSample};
use shelab::kernels::{inv_ft_sqrt_triangle, KernelKind};
use shelab::moments::{
    bound_ratio_stabilized, boundedness_diagnostic, estimate_moments, Verdict,
};
use shelab::noise::{build_sampler, empirical_covariance};
use shelab::quad::{integrate_power_lower, integrate_to_inf};
use shelab::solver::{
    compute_y, direct_convolution, evolve, evolve_recorded, factorization_reconstruct,
    init_state, DiffusionCoefficient, SolverConfig,
};
use shelab::weights::{admissibility_scan, classify_admissible, Admissibility, WeightKind};
use shelab::{InitialDatum, LatticeGrid, SpectralModel, Weight};
use std::f64::consts::PI;

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn bc(s: f64, d: usize) -> SpectralModel {
    SpectralModel::new(KernelKind::BesselCorrelation { s }, d).unwrap()
}

fn bs(s: f64, d: usize) -> SpectralModel {
    SpectralModel::new(KernelKind::BesselSpectral { s }, d).unwrap()
}

fn geometric_times(t0: f64, t1: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| t0 * (t1 / t0).powf(i as f64 / (n - 1) as f64))
        .collect()
}

#[test]
fn criterion_01_closed_forms_match_quadrature() {
    // Pinned values first. The spectral-family constant at
    // (d, s, alpha) = (3, 3, 0) is (2pi)^-3 = 4.0311e-3; the
    // alternative value (1/16)pi^-5 sometimes quoted for this family
    // is smaller by exactly 2pi^2 and fails the quadrature
    // cross-check, so the corrected constant is used throughout.
    println!(
        "note: criterion-01 pins the spectral-family constant (2pi)^-3 = {:.6e}; \
         (1/16)pi^-5 = {:.6e} is off by the factor 2pi^2 and is rejected by quadrature",
        (2.0 * PI).powi(-3),
        PI.powi(-5) / 16.0
    );
    let pins = [
        (bc(2.0, 3), 0.0, 1.0 / (4.0 * PI)),
        (bc(3.0, 3), 0.0, 1.0 / (2.0 * PI * PI)),
        (bs(3.0, 3), 0.0, (2.0 * PI).powi(-3)),
    ];
    for (m, alpha, want) in pins {
        let cf = m.upsilon_closed_form(alpha).unwrap();
        assert!(rel_err(cf, want) < 1e-12, "{:?}: {cf} vs {want}", m.kind);
        let q = m.upsilon(alpha, 0.0);
        assert!(rel_err(q, cf) <= 1e-6, "{:?}: quad {q} vs closed {cf}", m.kind);
    }

    // 50 random valid tuples across the three families.
    let mut rng = ChaCha12Rng::seed_from_u64(0xACCE_0001);
    let mut worst: f64 = 0.0;
    for trial in 0..50 {
        let d = 3 + trial % 2;
        let dd = d as f64;
        let alpha: f64 = rng.gen_range(0.0..0.4);
        // Correlation side needs s > d - 2(1 - alpha); spectral side
        // needs min(s, d) > 2(1 - alpha).
        let s_corr = dd - 2.0 * (1.0 - alpha) + rng.gen_range(0.4..2.4);
        let s_spec = 2.0 * (1.0 - alpha) + rng.gen_range(0.3..1.0);
        let model = match trial % 3 {
            0 => bc(s_corr, d),
            1 => bs(s_spec, d),
            _ => SpectralModel::new(
                KernelKind::RieszType {
                    s1: s_spec,
                    s2: s_corr,
                },
                d,
            )
            .unwrap(),
        };
        let cf = model.upsilon_closed_form(alpha).unwrap();
        let q = model.upsilon(alpha, 0.0);
        let err = rel_err(q, cf);
        worst = worst.max(err);
        assert!(
            err <= 1e-6,
            "trial {trial} {:?} d={d} alpha={alpha:.4}: quad {q} vs closed {cf} (rel {err:.2e})",
            model.kind
        );
    }
    println!("PASS criterion-01: 50 random tuples + 3 pins, worst rel err {worst:.2e}");
}

#[test]
fn criterion_02_h_alpha_asymptotics() {
    // Five correlation-side structural cases at d = 3 plus the
    // spectral-side case: the quadrature H_alpha(t) over the listed
    // small-t expansion tends to 1, within 2% at t = 1e-4 and
    // improving monotonically on t = 10^-k, k = 2..6.
    let alpha = 0.25;
    let models = [
        bc(2.5, 3),
        bc(3.0, 3),
        bc(4.0, 3),
        bc(5.0, 3),
        bc(6.0, 3),
        bs(3.0, 3),
    ];
    let mut worst_at_1e4: f64 = 0.0;
    for m in models {
        let terms = m.h_alpha_asymptotic(alpha).unwrap();
        let mut prev = f64::INFINITY;
        for k in 2..=6 {
            let t = 10f64.powi(-k);
            let pred: f64 = terms.iter().map(|c| c.eval(t)).sum();
            let dev = (m.h_alpha(alpha, t) / pred - 1.0).abs();
            if k == 4 {
                assert!(dev <= 0.02, "{:?}: ratio off by {dev:.4} at t=1e-4", m.kind);
                worst_at_1e4 = worst_at_1e4.max(dev);
            }
            assert!(
                dev < prev,
                "{:?}: deviation not improving at k={k}: {dev:.3e} vs {prev:.3e}",
                m.kind
            );
            prev = dev;
        }
    }
    println!(
        "PASS criterion-02: 6 asymptotic cases, worst |ratio-1| at t=1e-4 is {worst_at_1e4:.4}"
    );
}

#[test]
fn criterion_03_h_alpha_upsilon_inequalities() {
    // d = 3, s = 4, alpha = 1/4; slack >= 0 on t in {1e-2..1e3} and
    // the t = 1e3 value within 2% of the limit 2 pi^{3/2}.
    let m = bc(4.0, 3);
    let grid: Vec<f64> = (-2..=3).map(|k| 10f64.powi(k)).collect();
    let rep = hua_check(&m, 0.25, &grid);
    assert!(rep.ok, "{rep:?}");
    assert!(rep.worst_upper_slack >= 0.0, "{rep:?}");
    assert!(rep.worst_lower_slack >= 0.0, "{rep:?}");
    let limit = 2.0 * PI.powf(1.5);
    assert!(rel_err(rep.h_limit, limit) < 1e-7, "limit {}", rep.h_limit);
    assert!(
        (rep.ratio_at_last_t - 1.0).abs() <= 0.02,
        "ratio at t=1e3: {}",
        rep.ratio_at_last_t
    );
    println!(
        "PASS criterion-03: slacks ({:.3e}, {:.3e}) >= 0, t=1e3 ratio {:.4} vs limit 2pi^1.5",
        rep.worst_upper_slack, rep.worst_lower_slack, rep.ratio_at_last_t
    );
}

#[test]
fn criterion_04_fresnel_example() {
    // Oracle: (1/pi) int_0^2 (1/2) sqrt(2-xi) cos(x xi) dxi with the
    // endpoint root removed by substitution; 100 points on [0.1, 10].
    let oracle = |x: f64| {
        integrate_power_lower(|u| (x * (2.0 - u)).cos(), 0.0, 2.0, 0.5, 1e-10, 1e-14)
            .unwrap()
            .value
            / (2.0 * PI)
    };
    let mut worst: f64 = 0.0;
    let mut sign_change = false;
    let mut prev = f64::NAN;
    for i in 0..100 {
        let x = 0.1 + 9.9 * i as f64 / 99.0;
        let got = inv_ft_sqrt_triangle(x);
        let want = oracle(x);
        let err = (got - want).abs() / want.abs().max(1e-3);
        worst = worst.max(err);
        assert!(err <= 1e-6, "x={x}: {got} vs {want} (rel {err:.2e})");
        if i > 0 && got.signum() != prev.signum() {
            sign_change = true;
        }
        prev = got;
    }
    assert!(sign_change, "no sign change on [0.1, 10]");
    println!("PASS criterion-04: 100 quadrature matches (worst rel {worst:.2e}), sign change seen");
}

#[test]
fn criterion_05_heat_kernel_identities() {
    // G(t,x)G(s,y) = G(ts/(t+s), (sx+ty)/(t+s)) G(t+s, x-y) on 1000
    // random draws, d = 1..3, to 1e-12 relative.
    let mut rng = ChaCha12Rng::seed_from_u64(0xACCE_0005);
    let mut worst: f64 = 0.0;
    for trial in 0..1000 {
        let d = 1 + trial % 3;
        let t: f64 = rng.gen_range(0.05..5.0);
        let s: f64 = rng.gen_range(0.05..5.0);
        let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let y: Vec<f64> = (0..d).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let lhs = heat_kernel(t, &x) * heat_kernel(s, &y);
        let mid: Vec<f64> = x
            .iter()
            .zip(&y)
            .map(|(a, b)| (s * a + t * b) / (t + s))
            .collect();
        let diff: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
        let rhs = heat_kernel(t * s / (t + s), &mid) * heat_kernel(t + s, &diff);
        let err = (lhs - rhs).abs() / lhs.max(rhs);
        worst = worst.max(err);
        assert!(err <= 1e-12, "trial {trial}: {lhs} vs {rhs}");
    }
    // Lattice semigroup: discrete convolution of G(t) and G(s)
    // reproduces G(t+s) to Riemann-sum accuracy.
    let grid = LatticeGrid::new(1, 512, 40.0).unwrap();
    let (t, s) = (0.5, 0.8);
    let xs: Vec<f64> = (0..grid.n).map(|j| grid.axis_coordinate(j)).collect();
    let gs: Vec<f64> = xs.iter().map(|&y| heat_kernel(s, &[y])).collect();
    for &x in &[0.0, 0.77, -2.5] {
        let mut conv = 0.0;
        for (j, &y) in xs.iter().enumerate() {
            conv += heat_kernel(t, &[x - y]) * gs[j] * grid.h();
        }
        let exact = heat_kernel(t + s, &[x]);
        assert!((conv - exact).abs() < 1e-8, "x={x}: {conv} vs {exact}");
    }
    println!("PASS criterion-05: product identity worst rel {worst:.2e}, lattice semigroup < 1e-8");
}

#[test]
fn criterion_06_weighted_heat_functional() {
    // Dirac datum, rho = e^{-|x|}, d = 1: closed form
    // (4 pi t)^{-1/2} e^{t/4} erfc(sqrt(t)/2) against the direct
    // quadrature of int G(t,x)^2 rho(x) dx, rel <= 1e-5 on [0.01, 10].
    let mu = InitialDatum::DiracDelta {
        mass: 1.0,
        location: vec![0.0],
    };
    let w = Weight::new(WeightKind::ExpDecay { a: 1.0 }, 1).unwrap();
    let mut worst: f64 = 0.0;
    for &t in &[0.01, 0.03, 0.1, 0.3, 1.0, 3.0, 10.0] {
        let got = g_rho(&mu, &w, t).unwrap();
        let closed = (4.0 * PI * t).powf(-0.5)
            * (t / 4.0).exp()
            * shelab::specfun::erfc(t.sqrt() / 2.0);
        let oracle = 2.0
            * integrate_to_inf(
                |x: f64| heat_kernel(t, &[x]).powi(2) * (-x).exp(),
                0.0,
                1e-12,
                1e-300,
            )
            .unwrap()
            .value;
        let err = rel_err(got, closed).max(rel_err(got, oracle));
        worst = worst.max(err);
        assert!(err <= 1e-5, "t={t}: {got} vs closed {closed} / quad {oracle}");
    }
    // PolyGrowth(1): the profile grows linearly, log-log slope
    // 1.0 +/- 0.1 over t in [10, 1e3].
    let mu = InitialDatum::PolyGrowth { alpha: 1.0 };
    let ts = log_grid(10.0, 1e3, 9);
    let mut sx = 0.0;
    let mut sy = 0.0;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for &t in &ts {
        let x = t.ln();
        let y = g_rho(&mu, &w, t).unwrap().ln();
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let n = ts.len() as f64;
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    assert!((slope - 1.0).abs() <= 0.1, "log-log slope {slope}");
    println!("PASS criterion-06: closed form worst rel {worst:.2e}, growth slope {slope:.3}");
}

#[test]
fn criterion_07_weight_admissibility() {
    // Classification table: exponential always admissible, polynomial
    // admissible iff the exponent beats the dimension, stretched
    // exponential flips at exponent 1.
    for d in 1..=3 {
        for a in [0.1, 1.0, 7.0] {
            assert_eq!(
                classify_admissible(&Weight::new(WeightKind::ExpDecay { a }, d).unwrap()),
                Admissibility::Admissible
            );
        }
        let df = d as f64;
        for (a, want) in [
            (df + 0.1, Admissibility::Admissible),
            (df, Admissibility::NotAdmissible),
            (df - 0.1, Admissibility::NotAdmissible),
        ] {
            assert_eq!(
                classify_admissible(&Weight::new(WeightKind::PolyDecay { a }, d).unwrap()),
                want,
                "poly a={a} d={d}"
            );
        }
        assert_eq!(
            classify_admissible(&Weight::new(WeightKind::StretchedExp { b: 1.0 }, d).unwrap()),
            Admissibility::Admissible
        );
        assert_eq!(
            classify_admissible(
                &Weight::new(WeightKind::StretchedExp { b: 1.0 + 1e-12 }, d).unwrap()
            ),
            Admissibility::NotAdmissible
        );
    }
    // Scan at T = 1/2: bounded sup ratios for e^{-|x|}, at least 2x
    // growth per radius doubling for e^{-|x|^2}.
    let rho1 = Weight::new(WeightKind::ExpDecay { a: 1.0 }, 1).unwrap();
    let cert1 = admissibility_scan(&rho1, 0.5, 5.0, 64).unwrap();
    let (_, a1) = cert1.sup_by_radius[0];
    let (_, a4) = cert1.sup_by_radius[2];
    assert!(
        a4 / a1 < 2.0,
        "exp-decay sup ratios grew: {:?}",
        cert1.sup_by_radius
    );
    assert!(!cert1.blowup_evidence);
    let rho2 = Weight::new(WeightKind::StretchedExp { b: 2.0 }, 1).unwrap();
    let cert2 = admissibility_scan(&rho2, 0.5, 3.0, 64).unwrap();
    let (_, g1) = cert2.sup_by_radius[0];
    let (_, g2) = cert2.sup_by_radius[1];
    let (_, g4) = cert2.sup_by_radius[2];
    assert!(
        g2 >= 2.0 * g1 && g4 >= 2.0 * g2,
        "gaussian sup ratios not doubling: {:?}",
        cert2.sup_by_radius
    );
    assert!(cert2.blowup_evidence);
    println!(
        "PASS criterion-07: table exact; exp ratio growth x{:.3}, gaussian x{:.1}/x{:.1}",
        a4 / a1,
        g2 / g1,
        g4 / g2
    );
}

#[test]
fn criterion_08_noise_covariance() {
    // Triangle correlation max(2-|x|,0)/4: covariance 1/2 at lag 0,
    // 1/4 at physical lag 1, 0 at lag 3; 4 SE at 1e4 samples, n = 256.
    let grid = LatticeGrid::new(1, 256, 8.0).unwrap();
    let model = SpectralModel::new(KernelKind::Triangle1D, 1).unwrap();
    let mut sampler = build_sampler(model, grid, 404).unwrap();
    let fields: Vec<_> = (0..10_000).map(|_| sampler.sample_increment(1.0)).collect();
    let cells_per_unit = (1.0 / grid.h()).round() as i64;
    let lags = vec![vec![0], vec![cells_per_unit], vec![3 * cells_per_unit]];
    let table = empirical_covariance(&fields, &lags).unwrap();
    let mut msg = String::new();
    for (entry, want) in table.iter().zip([0.5, 0.25, 0.0]) {
        let dev = (entry.estimate - want).abs() / entry.standard_error.max(1e-12);
        assert!(
            dev < 4.0,
            "lag {:?}: estimate {} want {want} ({dev:.2} SE)",
            entry.lag,
            entry.estimate
        );
        msg.push_str(&format!("{:.4}({dev:.1}se) ", entry.estimate));
    }
    println!("PASS criterion-08: lags {{0,1,3}} -> {msg}vs {{1/2, 1/4, 0}}");
}

#[test]
fn criterion_09_solver_determinism_and_heat_limit() {
    // b = 0 from a Dirac datum reproduces G(t, .) at t = 1 within 1%
    // relative L2 (d = 1, n = 512, dt = 1e-3).
    let grid = LatticeGrid::new(1, 512, 32.0).unwrap();
    let model = bc(2.0, 1);
    let sampler = build_sampler(model, grid, 12).unwrap();
    let mu = InitialDatum::DiracDelta {
        mass: 1.0,
        location: vec![0.0],
    };
    let cfg = SolverConfig::new(1e-3, 1.0).with_records(vec![1.0]);
    let traj = evolve(
        init_state(&mu, grid).unwrap(),
        &cfg,
        &sampler,
        DiffusionCoefficient::Linear { lambda: 0.0 },
    )
    .unwrap();
    let snap = &traj.snapshots[0];
    let mut num = 0.0;
    let mut den = 0.0;
    for (k, &v) in snap.field.values.iter().enumerate() {
        let g = heat_kernel(snap.time, &[grid.axis_coordinate(k)]);
        num += (v - g) * (v - g);
        den += g * g;
    }
    let rel = (num / den).sqrt();
    assert!(rel <= 0.01, "relative L2 error {rel}");

    // Identical seeds give bit-identical trajectories with noise on.
    let b = DiffusionCoefficient::Linear { lambda: 0.4 };
    let cfg = SolverConfig::new(1e-3, 0.25).with_records(vec![0.1, 0.25]);
    let one = evolve(init_state(&mu, grid).unwrap(), &cfg, &sampler, b).unwrap();
    let sampler2 = build_sampler(model, grid, 12).unwrap();
    let two = evolve(init_state(&mu, grid).unwrap(), &cfg, &sampler2, b).unwrap();
    for (a, c) in one.snapshots.iter().zip(&two.snapshots) {
        for (x, y) in a.field.values.iter().zip(&c.field.values) {
            assert_eq!(x.to_bits(), y.to_bits(), "reseeded run diverged");
        }
    }
    println!("PASS criterion-09: heat-flow rel L2 {rel:.4} <= 1%, reseeded runs bit-identical");
}

#[test]
fn criterion_10_factorization_pathwise() {
    // Reconstruction against the direct stochastic convolution on the
    // same noise: rel L2 <= 5% at dt = 1e-3 (d = 1, n = 256,
    // alpha = 1/4), and smaller again at dt = 5e-4.
    let grid = LatticeGrid::new(1, 256, 8.0).unwrap();
    let model = SpectralModel::new(KernelKind::Triangle1D, 1).unwrap();
    let mu = InitialDatum::DiracDelta {
        mass: 1.0,
        location: vec![0.0],
    };
    let b = DiffusionCoefficient::Linear { lambda: 0.5 };
    let alpha = 0.25;
    let mut errors = Vec::new();
    for dt in [1e-3, 5e-4] {
        let sampler = build_sampler(model, grid, 9).unwrap();
        let cfg = SolverConfig::new(dt, 1.0);
        let (traj, record) =
            evolve_recorded(init_state(&mu, grid).unwrap(), &cfg, &sampler, b).unwrap();
        assert!(traj.blowup.is_none());
        let series = compute_y(&record, b, alpha).unwrap();
        let recon = factorization_reconstruct(&series, alpha, traj.final_state.time).unwrap();
        let direct = direct_convolution(&record, b).unwrap();
        let num: f64 = recon
            .values
            .iter()
            .zip(&direct.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        let den: f64 = direct.values.iter().map(|v| v * v).sum();
        errors.push((num / den).sqrt());
    }
    assert!(errors[0] <= 0.05, "rel error {} at dt=1e-3", errors[0]);
    assert!(
        errors[1] < errors[0],
        "error did not decrease: {errors:?}"
    );
    println!(
        "PASS criterion-10: rel L2 {:.4} at dt=1e-3, {:.4} at dt=5e-4 (decreasing)",
        errors[0], errors[1]
    );
}

#[test]
fn criterion_11_moment_boundedness() {
    let start = std::time::Instant::now();
    // Multiplicative linear model in d = 3 below the admissible
    // Lipschitz constant: weighted second moments stay bounded by a
    // stable multiple of the deterministic reference curve.
    let model = bc(2.0, 3);
    let lambda = 0.3 * max_lipschitz(&model);
    let grid = LatticeGrid::new(3, 32, 16.0).unwrap();
    let w = Weight::new(WeightKind::ExpDecay { a: 1.0 }, 3).unwrap();
    let mu = InitialDatum::DiracDelta {
        mass: 1.0,
        location: vec![0.0, 0.0, 0.0],
    };
    let b = DiffusionCoefficient::Linear { lambda };
    let cfg = SolverConfig::new(5e-3, 20.0).with_records(geometric_times(0.5, 20.0, 12));
    let report = estimate_moments(grid, &cfg, model, b, &mu, &w, 100, 7).unwrap();
    assert!(report.conditions.lip_ok, "{:?}", report.conditions);
    let (verdict, fit) = boundedness_diagnostic(&report).unwrap();
    assert_eq!(
        verdict,
        Verdict::Bounded,
        "verdict {verdict:?} with fit {fit:?}"
    );
    assert_eq!(
        bound_ratio_stabilized(&report, 0.1),
        Some(true),
        "bound ratios {:?}",
        report.bound_ratio
    );
    let max_ratio = report.bound_ratio.iter().cloned().fold(0.0, f64::max);
    println!(
        "PASS criterion-11a: bounded regime (lambda {lambda:.4}) verdict bounded, \
         bound ratio running max {max_ratio:.3} stabilized within 10% \
         [{:.0} s]",
        start.elapsed().as_secs_f64()
    );

    // Negative control: far above the admissible constant in d = 1
    // with triangle noise the growth is detected. The window stays
    // early because at later times the ensemble mean is carried by
    // exponentially rare replicas.
    let grid = LatticeGrid::new(1, 256, 8.0).unwrap();
    let model = SpectralModel::new(KernelKind::Triangle1D, 1).unwrap();
    let w = Weight::new(WeightKind::ExpDecay { a: 1.0 }, 1).unwrap();
    let mu = InitialDatum::ConstantDensity { c: 1.0 };
    let lambda = 5.0 * 0.3133285343288753; // 5x the d=3 reference bound
    let b = DiffusionCoefficient::Linear { lambda };
    let cfg = SolverConfig::new(5e-3, 3.0).with_records(geometric_times(0.3, 3.0, 10));
    let report = estimate_moments(grid, &cfg, model, b, &mu, &w, 1000, 7).unwrap();
    assert!(!report.conditions.lip_ok);
    let (verdict, fit) = boundedness_diagnostic(&report).unwrap();
    assert_eq!(verdict, Verdict::Growing, "fit {fit:?}");
    println!(
        "PASS criterion-11b: negative control (lambda {lambda:.4}) verdict growing \
         (exp rate {:.2}, z = {:.1}) [total {:.0} s]",
        fit.exp_rate,
        fit.exp_rate_z,
        start.elapsed().as_secs_f64()
    );
}

#[test]
fn criterion_12_kb_stabilization() {
    let start = std::time::Instant::now();
    // Synthetic i.i.d. control first: with no drift the window
    // distances sit at the two-sample noise floor and shrink as the
    // windows grow.
    let tau = 1.0;
    let spacing = 0.25;
    let windows = [10.0, 20.0, 40.0];
    let mut rng = ChaCha12Rng::seed_from_u64(0xACCE_0012);
    let synthetic: Vec<Vec<OccupationSample>> = (0..100)
        .map(|_| {
            (0..=160)
                .map(|k| OccupationSample {
                    t: tau + k as f64 * spacing,
                    norm_rho: rng.gen_range(0.0f64..1.0).ln().abs(),
                    projections: Vec::new(),
                })
                .collect()
        })
        .collect();
    let kbs: Vec<_> = windows
        .iter()
        .map(|&t| kb_average_from_samples(&synthetic, tau, t).unwrap())
        .collect();
    let control = kb_convergence(&kbs).unwrap();
    assert!(
        control.converged,
        "i.i.d. control failed to converge: {:?}",
        control
            .pairs
            .iter()
            .map(|p| (p.ks_norm, p.noise_floor))
            .collect::<Vec<_>>()
    );
    println!(
        "PASS criterion-12a: i.i.d. control at the noise floor, KS {:?}",
        control
            .pairs
            .iter()
            .map(|p| format!("{:.4}/{:.4}", p.ks_norm, p.noise_floor))
            .collect::<Vec<_>>()
    );

    // The bounded-regime trajectories themselves (identical seed and
    // stepping as criterion 11, so the integrator replays the same
    // paths; only the record grid differs). From a point datum the
    // occupation law keeps sliding toward the zero field, so each
    // window doubling adds systematically smaller norms.
    let model = bc(2.0, 3);
    let lambda = 0.3 * max_lipschitz(&model);
    let grid = LatticeGrid::new(3, 32, 16.0).unwrap();
    let w = Weight::new(WeightKind::ExpDecay { a: 1.0 }, 3).unwrap();
    let mu = InitialDatum::DiracDelta {
        mass: 1.0,
        location: vec![0.0, 0.0, 0.0],
    };
    let b = DiffusionCoefficient::Linear { lambda };
    let records: Vec<f64> = (0..=160).map(|k| tau + k as f64 * spacing).collect();
    let cfg = SolverConfig::new(5e-3, 41.0).with_records(records);
    let sampler = build_sampler(model, grid, 7).unwrap();
    let mut observed = Vec::with_capacity(100);
    for r in 0..100u64 {
        let state = init_state(&mu, grid).unwrap().with_replica(r);
        let traj = evolve(state, &cfg, &sampler, b).unwrap();
        observed.push(observe(&traj, &w, None).unwrap());
    }
    let kbs: Vec<_> = windows
        .iter()
        .map(|&t| kb_average_from_samples(&observed, tau, t).unwrap())
        .collect();
    let conv = kb_convergence(&kbs).unwrap();
    let detail: Vec<String> = conv
        .pairs
        .iter()
        .map(|p| {
            format!(
                "KS({:.0},{:.0}) = {:.4} (floor {:.4})",
                p.window_a, p.window_b, p.ks_norm, p.noise_floor
            )
        })
        .collect();
    println!(
        "criterion-12b measured: {} [{:.0} s]",
        detail.join(", "),
        start.elapsed().as_secs_f64()
    );
    assert!(
        conv.converged,
        "KB window distances did not stabilize: {}",
        detail.join(", ")
    );
    println!("PASS criterion-12b: KB averages stabilize across T = 10, 20, 40");
}
