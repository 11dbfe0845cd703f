//! The eight subcommands. Every command writes its artifacts plus a
//! manifest into the declared output directory and nowhere else.

use crate::config::{
    build_coefficient, build_datum, build_grid, build_model, build_solver, build_weight,
    build_weight_tilde, model_dimension, runtime, CliError, RunConfig,
};
use serde::Serialize;
use serde_json::json;
use shelab::conditions::{check_conditions, hua_check, max_lipschitz, select_alpha_q, LipschitzSpec};
use shelab::heatinit::{g_rho_profile, log_grid};
use shelab::invariant::{
    kb_average_from_samples, kb_convergence, observe, tightness_from_samples,
    write_tightness_csv, OccupationSample, ProjectionFamily,
};
use shelab::moments::{estimate_moments_with_threads, write_csv as write_moments_csv};
use shelab::noise::{build_sampler, write_field, NoiseError};
use shelab::solver::{
    direct_convolution, evolve, evolve_recorded, factorization_reconstruct, init_state,
    compute_y, SolverConfig, Trajectory,
};
use shelab::weights::{admissibility_scan, classify_admissible, ratio_integrable};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::time::Instant;

/// Serialized writer for the output directory. Artifacts never leave
/// this directory.
pub struct Outputs {
    dir: PathBuf,
    started: Instant,
    pub warnings: Vec<String>,
    files: Vec<String>,
}

impl Outputs {
    pub fn new(dir: &str) -> Result<Self, CliError> {
        let dir = PathBuf::from(dir);
        std::fs::create_dir_all(&dir)
            .map_err(|e| runtime(format!("cannot create output directory: {e}")))?;
        Ok(Outputs {
            dir,
            started: Instant::now(),
            warnings: Vec::new(),
            files: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write_json(&mut self, name: &str, value: &impl Serialize) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(value).map_err(runtime)?;
        std::fs::write(self.path(name), text + "\n").map_err(runtime)?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<(), CliError> {
        std::fs::write(self.path(name), text).map_err(runtime)?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn warn(&mut self, msg: impl Into<String>) {
        self.warnings.push(msg.into());
    }

    /// The manifest goes last so it can list every artifact and the
    /// wall time.
    pub fn finish(self, command: &str, cfg: &RunConfig) -> Result<(), CliError> {
        let manifest = json!({
            "command": command,
            "config": cfg,
            "config_hash": cfg.hash(),
            "versions": {
                "shelab": shelab::VERSION,
                "shelab-cli": env!("CARGO_PKG_VERSION"),
            },
            "seed": cfg.seed,
            "wall_time_s": self.started.elapsed().as_secs_f64(),
            "warnings": self.warnings,
            "artifacts": self.files,
        });
        let text = serde_json::to_string_pretty(&manifest).map_err(runtime)?;
        std::fs::write(self.path("manifest.json"), text + "\n").map_err(runtime)?;
        for w in &self.warnings {
            eprintln!("warning: {w}");
        }
        println!(
            "{} artifacts in {} (config {})",
            command,
            self.dir.display(),
            &cfg.hash()[..12]
        );
        Ok(())
    }
}

fn noise_error(e: NoiseError) -> CliError {
    match e {
        NoiseError::InfiniteMode { .. } | NoiseError::DimensionMismatch { .. } => {
            CliError::config("model", e.to_string())
        }
        other => runtime(other),
    }
}

fn alpha_in_window(cfg: &RunConfig, default: f64) -> Result<f64, CliError> {
    let alpha = cfg.alpha.unwrap_or(default);
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(CliError::config(
            "alpha",
            format!("must lie in (0, 1/2), got {alpha}"),
        ));
    }
    Ok(alpha)
}

fn lipschitz_spec(cfg: &RunConfig) -> Result<LipschitzSpec, CliError> {
    let lip = cfg
        .lipschitz
        .as_ref()
        .ok_or_else(|| CliError::config("lipschitz", "required section is missing"))?;
    LipschitzSpec::new(lip.l_b, lip.l_0).map_err(|e| CliError::config("lipschitz", e))
}

pub fn kernel_report(cfg: &RunConfig) -> Result<(), CliError> {
    let model = build_model(cfg)?;
    let alpha = alpha_in_window(cfg, 0.25)?;
    let beta = cfg.beta.unwrap_or(1.0);
    let t = cfg.t.unwrap_or(1.0);
    let mut out = Outputs::new(cfg.output_dir())?;
    let analysis = model.analyze(alpha, beta, t);
    let closed = model.upsilon_closed_form(alpha).ok();
    let at_zero = model.upsilon(alpha, 0.0);
    let terms: Vec<_> = analysis
        .asymptotic_coefficients
        .iter()
        .map(|a| {
            json!({
                "exponent": a.exponent,
                "log_power": a.log_power,
                "coefficient": a.coefficient,
            })
        })
        .collect();
    let hua_times = cfg
        .times
        .clone()
        .unwrap_or_else(|| log_grid(1e-4, 1e3, 25));
    let hua = hua_check(&model, alpha, &hua_times);
    if !analysis.dalang_finite {
        out.warn("Dalang gate fails for this model: Upsilon_0(0) diverges");
    }
    out.write_json(
        "kernel_report.json",
        &json!({
            "model": cfg.model,
            "alpha": alpha,
            "beta": beta,
            "t": t,
            "upsilon_alpha_beta": analysis.upsilon_alpha_beta,
            "upsilon_alpha_zero": if at_zero.is_finite() { Some(at_zero) } else { None },
            "upsilon_alpha_zero_closed": closed,
            "h_alpha_at_t": analysis.h_alpha_at_t,
            "asymptotic_terms": terms,
            "dalang_finite": analysis.dalang_finite,
            "upsilon_finite": analysis.upsilon_finite,
            "h_alpha_finite": analysis.h_alpha_finite,
            "hua": hua,
        }),
    )?;
    let mut table = String::from("exponent,log_power,coefficient\n");
    for a in &analysis.asymptotic_coefficients {
        table.push_str(&format!(
            "{},{},{}\n",
            a.exponent, a.log_power, a.coefficient
        ));
    }
    out.write_text("asymptotics.csv", &table)?;
    let mut hcsv = String::from("t,h_alpha\n");
    for &ht in &hua_times {
        hcsv.push_str(&format!("{},{}\n", ht, model.h_alpha(alpha, ht)));
    }
    out.write_text("h_alpha.csv", &hcsv)?;
    out.finish("kernel-report", cfg)
}

pub fn conditions(cfg: &RunConfig) -> Result<(), CliError> {
    let model = build_model(cfg)?;
    let lip = lipschitz_spec(cfg)?;
    let mut out = Outputs::new(cfg.output_dir())?;
    let report = check_conditions(&model, &lip);
    let selection = select_alpha_q(&model, &lip);
    if !report.dalang_ok {
        out.warn("Dalang gate fails: Upsilon_0(beta) diverges");
    }
    if !report.lip_ok {
        out.warn(format!(
            "Lipschitz gate fails: L_b = {} exceeds the admissible {}",
            lip.l_b,
            max_lipschitz(&model)
        ));
    }
    out.write_json(
        "conditions.json",
        &json!({
            "model": cfg.model,
            "lipschitz": cfg.lipschitz,
            "conditions": report,
            "max_lipschitz": max_lipschitz(&model),
            "alpha_q": selection,
        }),
    )?;
    out.finish("conditions", cfg)
}

pub fn weights(cfg: &RunConfig) -> Result<(), CliError> {
    let d = model_dimension(cfg)?;
    let w = build_weight(cfg, d)?;
    let wt = build_weight_tilde(cfg, d)?;
    let scan = cfg.scan.clone().unwrap_or(crate::config::ScanCfg {
        t_max: 10.0,
        radius: 20.0,
        resolution: 64,
    });
    let mut out = Outputs::new(cfg.output_dir())?;
    let classification = classify_admissible(&w);
    let certificate =
        admissibility_scan(&w, scan.t_max, scan.radius, scan.resolution).map_err(runtime)?;
    let ratio = wt.as_ref().map(|wt| ratio_integrable(&w, wt));
    out.write_json(
        "weights.json",
        &json!({
            "weight": cfg.weight,
            "weight_tilde": cfg.weight_tilde,
            "d": d,
            "classification": classification,
            "certificate": certificate,
            "ratio_integrable": ratio,
        }),
    )?;
    let mut csv = String::from("radius,sup_ratio\n");
    for (r, v) in &certificate.sup_by_radius {
        csv.push_str(&format!("{r},{v}\n"));
    }
    out.write_text("scan.csv", &csv)?;
    out.finish("weights", cfg)
}

pub fn gr_profile(cfg: &RunConfig) -> Result<(), CliError> {
    let d = model_dimension(cfg)?;
    let w = build_weight(cfg, d)?;
    let mu = build_datum(cfg, d)?;
    let times = cfg
        .times
        .clone()
        .unwrap_or_else(|| log_grid(0.01, 1e3, 40));
    let mut out = Outputs::new(cfg.output_dir())?;
    let profile = g_rho_profile(&mu, &w, &times).map_err(runtime)?;
    if profile.limsup_finite() != Some(true) {
        out.warn("G_rho does not stay bounded at infinity for this datum/weight pair");
    }
    out.write_json(
        "profile.json",
        &json!({
            "datum": cfg.datum,
            "weight": cfg.weight,
            "profile": profile,
            "limsup_finite": profile.limsup_finite(),
        }),
    )?;
    let mut csv = String::from("t,g_rho\n");
    for (t, v) in &profile.samples {
        csv.push_str(&format!("{t},{v}\n"));
    }
    out.write_text("profile.csv", &csv)?;
    out.finish("gr-profile", cfg)
}

pub fn simulate(cfg: &RunConfig) -> Result<(), CliError> {
    let model = build_model(cfg)?;
    let d = model_dimension(cfg)?;
    let grid = build_grid(cfg, d)?;
    let solver_cfg = build_solver(cfg)?;
    let mu = build_datum(cfg, d)?;
    let b = build_coefficient(cfg)?;
    let replicas = cfg.replicas.unwrap_or(1);
    let seed = cfg.seed_or_default();
    let mut out = Outputs::new(cfg.output_dir())?;
    let sampler = build_sampler(model, grid, seed).map_err(noise_error)?;
    let mut summaries = Vec::new();
    for r in 0..replicas {
        let state = init_state(&mu, grid)
            .map_err(|e| CliError::config("datum", e.to_string()))?
            .with_replica(r as u64);
        let traj = evolve(state, &solver_cfg, &sampler, b).map_err(runtime)?;
        let mut files = Vec::new();
        for (i, snap) in traj.snapshots.iter().enumerate() {
            let name = format!("field_r{r}_t{i}.bin");
            let file = File::create(out.path(&name)).map_err(runtime)?;
            let mut bw = BufWriter::new(file);
            write_field(&snap.field, &mut bw).map_err(runtime)?;
            bw.flush().map_err(runtime)?;
            out.files.push(name.clone());
            files.push(json!({ "file": name, "t": snap.time, "step": snap.step }));
        }
        if let Some(bu) = &traj.blowup {
            out.warn(format!(
                "replica {r} blew up at step {} (t = {})",
                bu.step, bu.time
            ));
        }
        summaries.push(json!({
            "replica": r,
            "final_time": traj.final_state.time,
            "final_l2": traj.final_state.field.norm2(),
            "blowup": traj.blowup.map(|b| json!({ "step": b.step, "time": b.time })),
            "snapshots": files,
        }));
    }
    out.write_json(
        "simulate.json",
        &json!({
            "grid": { "d": d, "n": grid.n, "length": grid.length },
            "dt": solver_cfg.dt,
            "t_end": solver_cfg.t_end,
            "record_times": solver_cfg.record_times,
            "replicas": summaries,
        }),
    )?;
    out.finish("simulate", cfg)
}

pub fn moments(cfg: &RunConfig) -> Result<(), CliError> {
    let model = build_model(cfg)?;
    let d = model_dimension(cfg)?;
    let grid = build_grid(cfg, d)?;
    let solver_cfg = build_solver(cfg)?;
    let mu = build_datum(cfg, d)?;
    let b = build_coefficient(cfg)?;
    let w = build_weight(cfg, d)?;
    let replicas = cfg
        .replicas
        .ok_or_else(|| CliError::config("replicas", "required field is missing"))?;
    let seed = cfg.seed_or_default();
    let mut out = Outputs::new(cfg.output_dir())?;
    let report = estimate_moments_with_threads(
        grid,
        &solver_cfg,
        model,
        b,
        &mu,
        &w,
        replicas,
        seed,
        cfg.threads_or_default(),
    )
    .map_err(runtime)?;
    if !report.conditions.lip_ok {
        out.warn("Lipschitz gate fails: the boundedness theory does not cover this coefficient");
    }
    if !report.conditions.dalang_ok {
        out.warn("Dalang gate fails: no L2 solution theory for this model in this dimension");
    }
    if report.partial {
        out.warn(format!(
            "{} of {} replicas blew up and were dropped",
            report.n_blowups, replicas
        ));
    }
    let mut csv = Vec::new();
    write_moments_csv(&report, &mut csv).map_err(runtime)?;
    out.write_text("moments.csv", &String::from_utf8(csv).map_err(runtime)?)?;
    out.write_json("moments.json", &report)?;
    out.finish("moments", cfg)
}

/// Evolves replicas across worker threads and reduces each trajectory
/// to occupation samples immediately; replica-labeled noise streams
/// keep the result identical for every thread count.
#[allow(clippy::too_many_arguments)]
fn observed_replicas(
    cfg: &RunConfig,
    grid: shelab::LatticeGrid,
    solver_cfg: &SolverConfig,
    mu: &shelab::InitialDatum,
    b: shelab::solver::DiffusionCoefficient,
    w: &shelab::Weight,
    wt: Option<&shelab::Weight>,
    family: &ProjectionFamily,
    replicas: usize,
    seed: u64,
) -> Result<(Vec<Vec<OccupationSample>>, Vec<Vec<OccupationSample>>), CliError> {
    let model = build_model(cfg)?;
    let threads = cfg.threads_or_default();
    type Reduced = (usize, Vec<OccupationSample>, Vec<OccupationSample>);
    let reduce = |r: usize, traj: &Trajectory| -> Result<Reduced, CliError> {
        let samples = observe(traj, w, Some(family)).map_err(runtime)?;
        let tilde = match wt {
            Some(wt) => observe(traj, wt, None).map_err(runtime)?,
            None => Vec::new(),
        };
        Ok((r, samples, tilde))
    };
    let mut merged: Vec<Option<Reduced>> = (0..replicas).map(|_| None).collect();
    if threads <= 1 {
        let sampler = build_sampler(model, grid, seed).map_err(noise_error)?;
        for r in 0..replicas {
            let state = init_state(mu, grid)
                .map_err(|e| CliError::config("datum", e.to_string()))?
                .with_replica(r as u64);
            let traj = evolve(state, solver_cfg, &sampler, b).map_err(runtime)?;
            merged[r] = Some(reduce(r, &traj)?);
        }
    } else {
        let batches = std::thread::scope(|scope| {
            let handles: Vec<_> = (0..threads)
                .map(|t| {
                    let reduce = &reduce;
                    scope.spawn(move || -> Result<Vec<Reduced>, CliError> {
                        let sampler = build_sampler(model, grid, seed).map_err(noise_error)?;
                        let mut batch = Vec::new();
                        let mut r = t;
                        while r < replicas {
                            let state = init_state(mu, grid)
                                .map_err(|e| CliError::config("datum", e.to_string()))?
                                .with_replica(r as u64);
                            let traj =
                                evolve(state, solver_cfg, &sampler, b).map_err(runtime)?;
                            batch.push(reduce(r, &traj)?);
                            r += threads;
                        }
                        Ok(batch)
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("invariant worker panicked"))
                .collect::<Vec<_>>()
        });
        for batch in batches {
            for item in batch? {
                let r = item.0;
                merged[r] = Some(item);
            }
        }
    }
    let mut observed = Vec::with_capacity(replicas);
    let mut observed_tilde = Vec::with_capacity(replicas);
    for slot in merged {
        let (_, samples, tilde) = slot.expect("every replica reduced");
        observed.push(samples);
        observed_tilde.push(tilde);
    }
    Ok((observed, observed_tilde))
}

pub fn invariant(cfg: &RunConfig) -> Result<(), CliError> {
    let d = model_dimension(cfg)?;
    let grid = build_grid(cfg, d)?;
    let mu = build_datum(cfg, d)?;
    let b = build_coefficient(cfg)?;
    let w = build_weight(cfg, d)?;
    let wt = build_weight_tilde(cfg, d)?;
    let replicas = cfg
        .replicas
        .ok_or_else(|| CliError::config("replicas", "required field is missing"))?;
    let seed = cfg.seed_or_default();
    let tau = cfg.tau.unwrap_or(1.0);
    if !(tau > 0.0) {
        return Err(CliError::config("tau", "must be positive"));
    }
    let windows = cfg
        .windows
        .clone()
        .ok_or_else(|| CliError::config("windows", "required field is missing"))?;
    if windows.len() < 3 || windows.windows(2).any(|p| p[1] <= p[0]) {
        return Err(CliError::config(
            "windows",
            "need at least 3 strictly increasing windows",
        ));
    }
    let levels = cfg
        .levels
        .clone()
        .unwrap_or_else(|| vec![0.5, 0.9, 0.95, 0.99]);
    let m = cfg.projections.unwrap_or(8);
    let spacing = cfg
        .record_spacing
        .ok_or_else(|| CliError::config("record_spacing", "required field is missing"))?;
    if !(spacing > 0.0) {
        return Err(CliError::config("record_spacing", "must be positive"));
    }
    let mut solver_cfg = build_solver(cfg)?;
    let wmax = *windows.last().unwrap();
    if solver_cfg.t_end + 1e-9 < tau + wmax {
        return Err(CliError::config(
            "solver.t_end",
            format!(
                "must reach tau + max window = {}, got {}",
                tau + wmax,
                solver_cfg.t_end
            ),
        ));
    }
    let steps = (wmax / spacing).round() as usize;
    solver_cfg.record_times = (0..=steps).map(|k| tau + k as f64 * spacing).collect();
    let family = ProjectionFamily::gaussian_bumps(grid, &w, m)
        .map_err(|e| CliError::config("projections", e.to_string()))?;

    let mut out = Outputs::new(cfg.output_dir())?;
    let (observed, observed_tilde) = observed_replicas(
        cfg,
        grid,
        &solver_cfg,
        &mu,
        b,
        &w,
        wt.as_ref(),
        &family,
        replicas,
        seed,
    )?;
    let kbs = windows
        .iter()
        .map(|&t| kb_average_from_samples(&observed, tau, t))
        .collect::<Result<Vec<_>, _>>()
        .map_err(runtime)?;
    let convergence = kb_convergence(&kbs).map_err(runtime)?;
    if !convergence.converged {
        out.warn("KB averages have not converged over the given windows");
    }
    let tight = tightness_from_samples(
        if wt.is_some() { &observed_tilde } else { &observed },
        tau,
        &levels,
    )
    .map_err(runtime)?;
    let kb_summaries: Vec<_> = kbs
        .iter()
        .map(|kb| {
            json!({
                "window": kb.window,
                "n_replicas": kb.n_replicas,
                "n_times": kb.n_times,
                "n_samples": kb.samples.len(),
            })
        })
        .collect();
    out.write_json(
        "invariant.json",
        &json!({
            "tau": tau,
            "windows": windows,
            "projections": m,
            "kb": kb_summaries,
            "convergence": convergence,
            "tightness": tight,
        }),
    )?;
    let mut occ = String::new();
    occ.push_str("t,norm_rho");
    for j in 0..m {
        occ.push_str(&format!(",p{j}"));
    }
    occ.push('\n');
    let largest = kbs.last().unwrap();
    for s in &largest.samples {
        occ.push_str(&format!("{},{}", s.t, s.norm_rho));
        for p in &s.projections {
            occ.push_str(&format!(",{p}"));
        }
        occ.push('\n');
    }
    out.write_text("occupation.csv", &occ)?;
    let mut tcsv = Vec::new();
    write_tightness_csv(&tight, &mut tcsv).map_err(runtime)?;
    out.write_text("tightness.csv", &String::from_utf8(tcsv).map_err(runtime)?)?;
    out.finish("invariant", cfg)
}

pub fn factorization_check(cfg: &RunConfig) -> Result<(), CliError> {
    let model = build_model(cfg)?;
    let d = model_dimension(cfg)?;
    let grid = build_grid(cfg, d)?;
    let solver_cfg = build_solver(cfg)?;
    let mu = build_datum(cfg, d)?;
    let b = build_coefficient(cfg)?;
    if cfg.alpha.is_none() {
        return Err(CliError::config("alpha", "required field is missing"));
    }
    let alpha = alpha_in_window(cfg, 0.25)?;
    let seed = cfg.seed_or_default();
    let mut out = Outputs::new(cfg.output_dir())?;
    let mut errors = Vec::new();
    for halving in 0..2u32 {
        let dt = solver_cfg.dt / f64::from(1 << halving);
        let run_cfg = SolverConfig::new(dt, solver_cfg.t_end);
        let sampler = build_sampler(model, grid, seed).map_err(noise_error)?;
        let state = init_state(&mu, grid)
            .map_err(|e| CliError::config("datum", e.to_string()))?;
        let (traj, record) = evolve_recorded(state, &run_cfg, &sampler, b).map_err(runtime)?;
        if let Some(bu) = traj.blowup {
            return Err(runtime(format!(
                "trajectory blew up at t = {}; cannot compare factorizations",
                bu.time
            )));
        }
        let t_end = traj.final_state.time;
        let series = compute_y(&record, b, alpha).map_err(runtime)?;
        let recon = factorization_reconstruct(&series, alpha, t_end).map_err(runtime)?;
        let direct = direct_convolution(&record, b).map_err(runtime)?;
        let norm: f64 = direct.values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < 1e-300 {
            return Err(runtime(
                "direct convolution vanishes; use a coefficient with nonzero forcing",
            ));
        }
        let diff: f64 = recon
            .values
            .iter()
            .zip(&direct.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        errors.push(json!({ "dt": dt, "rel_error": diff / norm }));
    }
    let e0 = errors[0]["rel_error"].as_f64().unwrap();
    let e1 = errors[1]["rel_error"].as_f64().unwrap();
    out.write_json(
        "factorization.json",
        &json!({
            "alpha": alpha,
            "t": solver_cfg.t_end,
            "runs": errors,
            "error_decreases": e1 < e0,
        }),
    )?;
    out.finish("factorization-check", cfg)
}
