//! Monte Carlo estimation of E‖u(t,·)‖²_ρ across independent replicas,
//! with the boundedness verdict and the ratio against the closed
//! reference curve G_ρ(t;μ*). The estimator never asserts the unknown
//! constant in front of the reference curve; it reports the ratio and
//! whether its running maximum stabilizes.

use crate::conditions::{check_conditions, ConditionReport, LipschitzSpec};
use crate::grid::LatticeGrid;
use crate::heatinit::{g_rho, InitialDatum};
use crate::kernels::SpectralModel;
use crate::noise::{build_sampler, NoiseError};
use crate::solver::{
    evolve, init_state, DiffusionCoefficient, SolverConfig, SolverError,
};
use crate::weights::{weighted_norm, Weight};
use serde::{Deserialize, Serialize};
use std::io::Write;

#[derive(Debug, thiserror::Error)]
pub enum MomentError {
    #[error("solver failure: {0}")]
    Solver(#[from] SolverError),
    #[error("noise failure: {0}")]
    Noise(#[from] NoiseError),
    #[error("weighted norm failure: {0}")]
    Norm(String),
    #[error("reference curve failure: {0}")]
    Reference(String),
    #[error("lipschitz data rejected: {0}")]
    Lipschitz(String),
    #[error("record times must be positive for moment estimation, got {0}")]
    NonPositiveTime(f64),
    #[error("growth diagnostics need at least {required} time points, got {got}")]
    TooFewPoints { required: usize, got: usize },
    #[error("time window [{t0}, {t1}] spans less than one decade")]
    WindowTooNarrow { t0: f64, t1: f64 },
    #[error("moment series must be positive for the growth fit")]
    NonPositiveMoment,
    #[error("no complete replica: all {0} trajectories blew up")]
    NoData(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Bounded,
    Growing,
    Inconclusive,
}

/// Fitted growth parameters over the top half of the time window.
/// `z` values are slope over slope standard error under the weighted
/// least-squares fit; weights are (mean/stderr)², the reciprocal
/// variance of the log under the delta method.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub points_used: usize,
    /// Rate r of the exponential model m(t) = a·e^{rt}.
    pub exp_rate: f64,
    pub exp_rate_z: f64,
    /// Slope p of the power model m(t) = a·t^p.
    pub power_slope: f64,
    pub power_slope_z: f64,
    /// Reduced chi-square of the constant model in log space.
    pub constant_chi2: f64,
}

/// Per-time second moments at the probe sites: the origin and one
/// generic point at |x| = L/4 on the first axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeMoments {
    pub origin: f64,
    pub origin_se: f64,
    pub offset: f64,
    pub offset_se: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MomentReport {
    pub times: Vec<f64>,
    pub mean_norm2: Vec<f64>,
    pub stderr: Vec<f64>,
    pub pointwise: Vec<ProbeMoments>,
    /// mean_norm2 over G_ρ(t;μ*): the reference-curve ratio whose
    /// stabilization is the desk-scale shadow of the moment bound.
    pub bound_ratio: Vec<f64>,
    pub n_replicas: usize,
    pub n_blowups: usize,
    /// Set when blow-ups removed replicas from the aggregation.
    pub partial: bool,
    pub conditions: ConditionReport,
    pub verdict: Verdict,
    pub fit: Option<GrowthFit>,
}

/// Per-replica reduction: fields are dropped as soon as the norms and
/// probe squares are taken.
struct ReplicaRun {
    times: Vec<f64>,
    norms: Vec<f64>,
    origin_sq: Vec<f64>,
    offset_sq: Vec<f64>,
    blown: bool,
}

fn run_replica(
    r: usize,
    sampler: &crate::noise::NoiseSampler,
    grid: LatticeGrid,
    cfg: &SolverConfig,
    b: DiffusionCoefficient,
    mu: &InitialDatum,
    w: &Weight,
    origin: usize,
    offset: usize,
) -> Result<ReplicaRun, MomentError> {
    let state = init_state(mu, grid)?.with_replica(r as u64);
    let traj = evolve(state, cfg, sampler, b)?;
    if traj.blowup.is_some() {
        return Ok(ReplicaRun {
            times: Vec::new(),
            norms: Vec::new(),
            origin_sq: Vec::new(),
            offset_sq: Vec::new(),
            blown: true,
        });
    }
    let mut run = ReplicaRun {
        times: Vec::with_capacity(traj.snapshots.len()),
        norms: Vec::with_capacity(traj.snapshots.len()),
        origin_sq: Vec::with_capacity(traj.snapshots.len()),
        offset_sq: Vec::with_capacity(traj.snapshots.len()),
        blown: false,
    };
    for snap in &traj.snapshots {
        run.times.push(snap.time);
        run.norms
            .push(weighted_norm(&snap.field, w).map_err(MomentError::Norm)?.value);
        run.origin_sq.push(snap.field.values[origin].powi(2));
        run.offset_sq.push(snap.field.values[offset].powi(2));
    }
    Ok(run)
}

/// Runs independent trajectories (replica r uses noise streams
/// (seed, [r, ·])) and aggregates weighted norms and probe squares at
/// the record times. Gate failures in the condition report do not stop
/// the run; they are recorded. Replicas that blow up are dropped from
/// the aggregation and counted.
pub fn estimate_moments(
    grid: LatticeGrid,
    cfg: &SolverConfig,
    model: SpectralModel,
    b: DiffusionCoefficient,
    mu: &InitialDatum,
    w: &Weight,
    replicas: usize,
    seed: u64,
) -> Result<MomentReport, MomentError> {
    estimate_moments_with_threads(grid, cfg, model, b, mu, w, replicas, seed, 1)
}

/// Same estimator with replicas spread across worker threads. Replica
/// r draws from stream (seed, [r, step]) no matter which thread runs
/// it and results merge in replica order, so the report is identical
/// for every thread count.
#[allow(clippy::too_many_arguments)]
pub fn estimate_moments_with_threads(
    grid: LatticeGrid,
    cfg: &SolverConfig,
    model: SpectralModel,
    b: DiffusionCoefficient,
    mu: &InitialDatum,
    w: &Weight,
    replicas: usize,
    seed: u64,
    threads: usize,
) -> Result<MomentReport, MomentError> {
    if cfg.record_times.is_empty() {
        return Err(MomentError::TooFewPoints {
            required: 1,
            got: 0,
        });
    }
    for &t in &cfg.record_times {
        if !(t > 0.0) {
            return Err(MomentError::NonPositiveTime(t));
        }
    }
    let lip = LipschitzSpec::new(b.lipschitz_bound(), b.zero_bound())
        .map_err(MomentError::Lipschitz)?;
    let conditions = check_conditions(&model, &lip);

    let mut origin_multi = vec![grid.n / 2; grid.d];
    let origin = grid.flat_index(&origin_multi);
    origin_multi[0] += grid.n / 4;
    let offset = grid.flat_index(&origin_multi);

    let mut runs: Vec<Option<ReplicaRun>> = (0..replicas).map(|_| None).collect();
    if threads <= 1 {
        let sampler = build_sampler(model, grid, seed)?;
        for (r, slot) in runs.iter_mut().enumerate() {
            *slot = Some(run_replica(r, &sampler, grid, cfg, b, mu, w, origin, offset)?);
        }
    } else {
        let batches = std::thread::scope(|scope| {
            let handles: Vec<_> = (0..threads)
                .map(|t| {
                    scope.spawn(move || -> Result<Vec<(usize, ReplicaRun)>, MomentError> {
                        let sampler = build_sampler(model, grid, seed)?;
                        let mut out = Vec::new();
                        let mut r = t;
                        while r < replicas {
                            out.push((
                                r,
                                run_replica(r, &sampler, grid, cfg, b, mu, w, origin, offset)?,
                            ));
                            r += threads;
                        }
                        Ok(out)
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("moment worker panicked"))
                .collect::<Vec<_>>()
        });
        for batch in batches {
            for (r, run) in batch? {
                runs[r] = Some(run);
            }
        }
    }

    let mut times: Option<Vec<f64>> = None;
    let mut norms: Vec<Vec<f64>> = Vec::new();
    let mut origin_sq: Vec<Vec<f64>> = Vec::new();
    let mut offset_sq: Vec<Vec<f64>> = Vec::new();
    let mut n_blowups = 0usize;
    for run in runs.into_iter().flatten() {
        if run.blown {
            n_blowups += 1;
            continue;
        }
        if times.is_none() {
            norms = vec![Vec::with_capacity(replicas); run.times.len()];
            origin_sq = vec![Vec::with_capacity(replicas); run.times.len()];
            offset_sq = vec![Vec::with_capacity(replicas); run.times.len()];
            times = Some(run.times.clone());
        }
        for i in 0..run.times.len() {
            norms[i].push(run.norms[i]);
            origin_sq[i].push(run.origin_sq[i]);
            offset_sq[i].push(run.offset_sq[i]);
        }
    }
    let times = times.ok_or(MomentError::NoData(replicas))?;
    let n_complete = replicas - n_blowups;

    let mean_se = |xs: &[f64]| -> (f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        if xs.len() < 2 {
            return (mean, 0.0);
        }
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, (var / n).sqrt())
    };
    let mut mean_norm2 = Vec::with_capacity(times.len());
    let mut stderr = Vec::with_capacity(times.len());
    let mut pointwise = Vec::with_capacity(times.len());
    let mut bound_ratio = Vec::with_capacity(times.len());
    let mu_star = mu.mu_star();
    for i in 0..times.len() {
        let (m, se) = mean_se(&norms[i]);
        let (po, po_se) = mean_se(&origin_sq[i]);
        let (pf, pf_se) = mean_se(&offset_sq[i]);
        let reference = g_rho(&mu_star, w, times[i]).map_err(MomentError::Reference)?;
        mean_norm2.push(m);
        stderr.push(se);
        pointwise.push(ProbeMoments {
            origin: po,
            origin_se: po_se,
            offset: pf,
            offset_se: pf_se,
        });
        bound_ratio.push(m / reference);
    }
    let (verdict, fit) = match fit_growth(&times, &mean_norm2, &stderr) {
        Ok((v, f)) => (v, Some(f)),
        Err(
            MomentError::TooFewPoints { .. }
            | MomentError::WindowTooNarrow { .. }
            | MomentError::NonPositiveMoment,
        ) => (Verdict::Inconclusive, None),
        Err(other) => return Err(other),
    };
    Ok(MomentReport {
        times,
        mean_norm2,
        stderr,
        pointwise,
        bound_ratio,
        n_replicas: n_complete,
        n_blowups,
        partial: n_blowups > 0,
        conditions,
        verdict,
        fit,
    })
}

/// Weighted least squares of y against [1, x] with weights w (inverse
/// variances). Returns (intercept, slope, slope standard error).
fn weighted_line_fit(xs: &[f64], ys: &[f64], ws: &[f64]) -> (f64, f64, f64) {
    let (mut s0, mut s1, mut s2, mut t0, mut t1) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for ((&x, &y), &w) in xs.iter().zip(ys).zip(ws) {
        s0 += w;
        s1 += w * x;
        s2 += w * x * x;
        t0 += w * y;
        t1 += w * x * y;
    }
    let det = s0 * s2 - s1 * s1;
    let slope = (s0 * t1 - s1 * t0) / det;
    let intercept = (s2 * t0 - s1 * t1) / det;
    (intercept, slope, (s0 / det).sqrt())
}

fn fit_growth(
    times: &[f64],
    means: &[f64],
    ses: &[f64],
) -> Result<(Verdict, GrowthFit), MomentError> {
    if times.len() < 8 {
        return Err(MomentError::TooFewPoints {
            required: 8,
            got: times.len(),
        });
    }
    let t0 = times[0];
    let t1 = times[times.len() - 1];
    if !(t1 >= 10.0 * t0) {
        return Err(MomentError::WindowTooNarrow { t0, t1 });
    }
    let start = times.len() / 2;
    let mut ts = Vec::new();
    let mut ys = Vec::new();
    let mut ws = Vec::new();
    for i in start..times.len() {
        if !(means[i] > 0.0) {
            return Err(MomentError::NonPositiveMoment);
        }
        ts.push(times[i]);
        ys.push(means[i].ln());
        let rel = (ses[i] / means[i]).max(1e-12);
        ws.push(1.0 / (rel * rel));
    }
    let (_, exp_rate, exp_se) = weighted_line_fit(&ts, &ys, &ws);
    let log_ts: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let (_, power_slope, power_se) = weighted_line_fit(&log_ts, &ys, &ws);
    let wsum: f64 = ws.iter().sum();
    let ybar: f64 = ys.iter().zip(&ws).map(|(y, w)| y * w).sum::<f64>() / wsum;
    let constant_chi2 = ys
        .iter()
        .zip(&ws)
        .map(|(y, w)| w * (y - ybar).powi(2))
        .sum::<f64>()
        / (ys.len() as f64 - 1.0);
    let fit = GrowthFit {
        points_used: ts.len(),
        exp_rate,
        exp_rate_z: exp_rate / exp_se,
        power_slope,
        power_slope_z: power_slope / power_se,
        constant_chi2,
    };
    // Growth must beat the constant model at 3 sigma. Between 2 and 3
    // sigma the separation is too thin to call either way.
    let z_best = fit.exp_rate_z.max(fit.power_slope_z);
    let verdict = if z_best >= 3.0 {
        Verdict::Growing
    } else if z_best > 2.0 {
        Verdict::Inconclusive
    } else {
        Verdict::Bounded
    };
    Ok((verdict, fit))
}

/// Re-runs the growth diagnostics of a report: constant, power, and
/// exponential models fitted to the top half of the window by weighted
/// least squares, verdicts separated at 3 sigma.
pub fn boundedness_diagnostic(report: &MomentReport) -> Result<(Verdict, GrowthFit), MomentError> {
    fit_growth(&report.times, &report.mean_norm2, &report.stderr)
}

/// Whether the running maximum of the bound ratio changed by less than
/// `tol` (fractionally) over the last half of the window. None when
/// there are fewer than two times.
pub fn bound_ratio_stabilized(report: &MomentReport, tol: f64) -> Option<bool> {
    if report.bound_ratio.len() < 2 {
        return None;
    }
    let mut running = Vec::with_capacity(report.bound_ratio.len());
    let mut max = f64::NEG_INFINITY;
    for &r in &report.bound_ratio {
        max = max.max(r);
        running.push(max);
    }
    let half = running[running.len() / 2];
    let last = running[running.len() - 1];
    Some((last - half) / last.abs().max(f64::MIN_POSITIVE) < tol)
}

/// Writes the per-time table as CSV with the schema
/// t,mean_norm2,stderr,bound_ratio,n_replicas.
pub fn write_csv<W: Write>(report: &MomentReport, mut out: W) -> std::io::Result<()> {
    writeln!(out, "t,mean_norm2,stderr,bound_ratio,n_replicas")?;
    for i in 0..report.times.len() {
        writeln!(
            out,
            "{},{},{},{},{}",
            report.times[i],
            report.mean_norm2[i],
            report.stderr[i],
            report.bound_ratio[i],
            report.n_replicas
        )?;
    }
    Ok(())
}
