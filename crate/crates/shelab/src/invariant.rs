//! Krylov-Bogoliubov time-averaged occupation statistics and tightness
//! proxies for the laws of u(t,·) in the weighted space. Weak
//! convergence is proxied by one-dimensional Kolmogorov-Smirnov
//! distances on the norm and on a fixed family of projections: full
//! infinite-dimensional metrics are not estimable, and balls plus
//! finitely many smooth observables are exactly what the tightness
//! argument controls.

use crate::grid::{FieldState, LatticeGrid};
use crate::solver::Trajectory;
use crate::weights::{weighted_norm, Weight};
use serde::{Deserialize, Serialize};
use std::io::Write;

#[derive(Debug, thiserror::Error)]
pub enum InvariantError {
    #[error("no trajectories given")]
    EmptyInput,
    #[error("tau must be positive, got {0}")]
    TauNotPositive(f64),
    #[error("replica {0} blew up; occupation statistics need complete trajectories")]
    BlownReplica(usize),
    #[error("replica {replica} records different times than replica 0 inside the window")]
    MismatchedTimes { replica: usize },
    #[error("window [{tau}, {upper}] not covered: recorded span is [{first}, {last}]")]
    WindowNotCovered {
        tau: f64,
        upper: f64,
        first: f64,
        last: f64,
    },
    #[error("record spacing inside the window is not uniform: gaps range {min_gap} to {max_gap}")]
    NonUniformSpacing { min_gap: f64, max_gap: f64 },
    #[error("need at least {required} recorded times in the window, got {got}")]
    TooFewTimes { required: usize, got: usize },
    #[error("projection family needs 1..={max} bumps on this grid, got {m}")]
    FamilyTooLarge { m: usize, max: usize },
    #[error("bump {0} became numerically dependent during orthonormalization")]
    DegenerateFamily(usize),
    #[error("field lives on a different grid than the projection family")]
    GridMismatch,
    #[error("weighted norm failure: {0}")]
    Norm(String),
    #[error("kb_convergence needs at least 3 windows, got {0}")]
    TooFewWindows(usize),
    #[error("windows must be strictly increasing and share tau and family size")]
    WindowsNotNested,
    #[error("quantile level {0} outside (0, 1]")]
    BadLevel(f64),
}

/// Fixed family of m lattice fields orthonormal in the weighted inner
/// product ⟨a,b⟩_ρ = h^d Σ a_i b_i ρ(x_i): Gram-Schmidt applied to
/// Gaussian bumps centered along the first axis. The construction is
/// deterministic, so projections are reproducible from (grid, weight,
/// m) alone.
#[derive(Debug, Clone)]
pub struct ProjectionFamily {
    grid: LatticeGrid,
    vectors: Vec<Vec<f64>>,
    rho_cell: Vec<f64>,
}

impl ProjectionFamily {
    /// Bump j sits at x = (-L/4 + (j+1/2)·L/(2m), 0, …) with width
    /// L/(4m), half the center spacing: enough overlap to probe the
    /// field between centers, little enough to stay well conditioned.
    pub fn gaussian_bumps(
        grid: LatticeGrid,
        w: &Weight,
        m: usize,
    ) -> Result<Self, InvariantError> {
        let max = grid.n / 2;
        if m == 0 || m > max {
            return Err(InvariantError::FamilyTooLarge { m, max });
        }
        let total = grid.total_points();
        let mut rho_cell = Vec::with_capacity(total);
        let mut x = vec![0.0; grid.d];
        for i in 0..total {
            grid.coords(i, &mut x);
            rho_cell.push(w.eval(&x) * grid.cell_volume());
        }
        let spacing = grid.length / (2.0 * m as f64);
        let sigma = 0.5 * spacing;
        let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(m);
        for j in 0..m {
            let center = -0.25 * grid.length + (j as f64 + 0.5) * spacing;
            let mut v = Vec::with_capacity(total);
            for i in 0..total {
                grid.coords(i, &mut x);
                let mut r2 = (x[0] - center).powi(2);
                for &xi in &x[1..] {
                    r2 += xi * xi;
                }
                v.push((-r2 / (2.0 * sigma * sigma)).exp());
            }
            let raw_norm2 = dot(&v, &v, &rho_cell);
            // Two-pass modified Gram-Schmidt for stability.
            for _ in 0..2 {
                for e in &vectors {
                    let c = dot(&v, e, &rho_cell);
                    for (vi, ei) in v.iter_mut().zip(e) {
                        *vi -= c * ei;
                    }
                }
            }
            let norm2 = dot(&v, &v, &rho_cell);
            if !(norm2 > 1e-12 * raw_norm2) {
                return Err(InvariantError::DegenerateFamily(j));
            }
            let inv = 1.0 / norm2.sqrt();
            for vi in &mut v {
                *vi *= inv;
            }
            vectors.push(v);
        }
        Ok(ProjectionFamily {
            grid,
            vectors,
            rho_cell,
        })
    }

    pub fn m(&self) -> usize {
        self.vectors.len()
    }

    pub fn grid(&self) -> LatticeGrid {
        self.grid
    }

    /// ⟨u, e_j⟩_ρ for j = 0..m.
    pub fn project(&self, field: &FieldState) -> Result<Vec<f64>, InvariantError> {
        if field.grid.d != self.grid.d
            || field.grid.n != self.grid.n
            || field.grid.length != self.grid.length
        {
            return Err(InvariantError::GridMismatch);
        }
        Ok(self
            .vectors
            .iter()
            .map(|e| dot(&field.values, e, &self.rho_cell))
            .collect())
    }
}

fn dot(a: &[f64], b: &[f64], rho_cell: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .zip(rho_cell)
        .map(|((&x, &y), &r)| x * y * r)
        .sum()
}

/// Observable image of one recorded field: time, weighted norm, and
/// the projection coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupationSample {
    pub t: f64,
    pub norm_rho: f64,
    pub projections: Vec<f64>,
}

/// Empirical occupation measure over t in [tau, tau+window] and over
/// replicas; sample count = replicas × recorded times in the window.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KBAverage {
    pub tau: f64,
    pub window: f64,
    pub n_replicas: usize,
    pub n_times: usize,
    pub samples: Vec<OccupationSample>,
}

/// Reduces a trajectory to its observable image: one sample per
/// snapshot. With `family = None` the projections stay empty (enough
/// for quantile tables). This is the memory-light path: fields are
/// dropped replica by replica instead of holding every trajectory.
pub fn observe(
    traj: &Trajectory,
    w: &Weight,
    family: Option<&ProjectionFamily>,
) -> Result<Vec<OccupationSample>, InvariantError> {
    if traj.blowup.is_some() {
        return Err(InvariantError::BlownReplica(
            traj.final_state.replica as usize,
        ));
    }
    traj.snapshots
        .iter()
        .map(|snap| {
            let norm = weighted_norm(&snap.field, w)
                .map_err(InvariantError::Norm)?
                .value
                .sqrt();
            Ok(OccupationSample {
                t: snap.time,
                norm_rho: norm,
                projections: match family {
                    Some(f) => f.project(&snap.field)?,
                    None => Vec::new(),
                },
            })
        })
        .collect()
}

/// Sample times shared by every replica inside [tau, upper], sorted,
/// with per-replica sample indices.
fn collect_window(
    observed: &[Vec<OccupationSample>],
    tau: f64,
    upper: f64,
) -> Result<(Vec<f64>, Vec<Vec<usize>>), InvariantError> {
    if observed.is_empty() {
        return Err(InvariantError::EmptyInput);
    }
    let tol = if upper.is_finite() {
        1e-9 * upper.abs().max(1.0)
    } else {
        1e-9 * tau.abs().max(1.0)
    };
    let mut times: Vec<f64> = Vec::new();
    let mut index: Vec<Vec<usize>> = Vec::with_capacity(observed.len());
    for (r, samples) in observed.iter().enumerate() {
        let mut picked: Vec<(f64, usize)> = samples
            .iter()
            .enumerate()
            .filter(|(_, s)| s.t >= tau - tol && s.t <= upper + tol)
            .map(|(i, s)| (s.t, i))
            .collect();
        picked.sort_by(|a, b| a.0.total_cmp(&b.0));
        if r == 0 {
            times = picked.iter().map(|p| p.0).collect();
        } else if picked.len() != times.len()
            || picked
                .iter()
                .zip(&times)
                .any(|(p, &t)| (p.0 - t).abs() > tol)
        {
            return Err(InvariantError::MismatchedTimes { replica: r });
        }
        index.push(picked.into_iter().map(|p| p.1).collect());
    }
    Ok((times, index))
}

/// Aggregates pre-reduced samples over t in [tau, tau+window].
/// Requires uniform record spacing covering the window; the result is
/// a pure aggregation, invariant under replica relabeling and window
/// ordering.
pub fn kb_average_from_samples(
    observed: &[Vec<OccupationSample>],
    tau: f64,
    window: f64,
) -> Result<KBAverage, InvariantError> {
    if !(tau > 0.0) {
        return Err(InvariantError::TauNotPositive(tau));
    }
    let upper = tau + window;
    let (times, index) = collect_window(observed, tau, upper)?;
    if times.len() < 2 {
        return Err(InvariantError::TooFewTimes {
            required: 2,
            got: times.len(),
        });
    }
    let gaps: Vec<f64> = times.windows(2).map(|p| p[1] - p[0]).collect();
    let min_gap = gaps.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_gap = gaps.iter().cloned().fold(0.0, f64::max);
    if max_gap - min_gap > 1e-6 * max_gap {
        return Err(InvariantError::NonUniformSpacing { min_gap, max_gap });
    }
    let first = times[0];
    let last = times[times.len() - 1];
    if first - tau > 1.5 * max_gap || upper - last > 1.5 * max_gap {
        return Err(InvariantError::WindowNotCovered {
            tau,
            upper,
            first,
            last,
        });
    }
    let mut samples = Vec::with_capacity(observed.len() * times.len());
    for (obs, idx) in observed.iter().zip(&index) {
        for &i in idx {
            samples.push(obs[i].clone());
        }
    }
    Ok(KBAverage {
        tau,
        window,
        n_replicas: observed.len(),
        n_times: times.len(),
        samples,
    })
}

/// Time-and-replica empirical measure of (norm_rho, projections) over
/// t in [tau, tau+window].
pub fn kb_average(
    trajs: &[Trajectory],
    w: &Weight,
    tau: f64,
    window: f64,
    family: &ProjectionFamily,
) -> Result<KBAverage, InvariantError> {
    let observed = trajs
        .iter()
        .map(|t| observe(t, w, Some(family)))
        .collect::<Result<Vec<_>, _>>()?;
    kb_average_from_samples(&observed, tau, window)
}

/// Two-sample Kolmogorov-Smirnov distance.
pub fn ks_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

/// Expected two-sample KS distance between equal distributions:
/// mean of the Kolmogorov law, sqrt(pi/2)·ln 2, times the sample-size
/// factor.
pub fn ks_noise_floor(n1: usize, n2: usize) -> f64 {
    let scale = ((n1 + n2) as f64 / (n1 as f64 * n2 as f64)).sqrt();
    0.868_731_160_6 * scale
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KsPair {
    pub window_a: f64,
    pub window_b: f64,
    pub n_a: usize,
    pub n_b: usize,
    pub ks_norm: f64,
    pub ks_projections: Vec<f64>,
    pub noise_floor: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub pairs: Vec<KsPair>,
    /// Norm distances decrease across pairs and the final one sits
    /// under twice the noise floor.
    pub converged: bool,
    /// Same test per projection coordinate.
    pub projections_converged: Vec<bool>,
}

/// KS distances between successive KB averages (nested windows T,
/// 2T, 4T, …). Report-only: the verdict is a diagnostic, not a
/// certified limit, since no convergence rate is available.
pub fn kb_convergence(kbs: &[KBAverage]) -> Result<ConvergenceReport, InvariantError> {
    if kbs.len() < 3 {
        return Err(InvariantError::TooFewWindows(kbs.len()));
    }
    let m = kbs[0]
        .samples
        .first()
        .map(|s| s.projections.len())
        .unwrap_or(0);
    for pair in kbs.windows(2) {
        let same_family = pair[1]
            .samples
            .first()
            .map(|s| s.projections.len() == m)
            .unwrap_or(false);
        if pair[1].window <= pair[0].window
            || (pair[1].tau - pair[0].tau).abs() > 1e-9
            || !same_family
        {
            return Err(InvariantError::WindowsNotNested);
        }
    }
    let mut pairs = Vec::with_capacity(kbs.len() - 1);
    for win in kbs.windows(2) {
        let (a, b) = (&win[0], &win[1]);
        let norms_a: Vec<f64> = a.samples.iter().map(|s| s.norm_rho).collect();
        let norms_b: Vec<f64> = b.samples.iter().map(|s| s.norm_rho).collect();
        let ks_projections = (0..m)
            .map(|j| {
                let pa: Vec<f64> = a.samples.iter().map(|s| s.projections[j]).collect();
                let pb: Vec<f64> = b.samples.iter().map(|s| s.projections[j]).collect();
                ks_distance(&pa, &pb)
            })
            .collect();
        pairs.push(KsPair {
            window_a: a.window,
            window_b: b.window,
            n_a: a.samples.len(),
            n_b: b.samples.len(),
            ks_norm: ks_distance(&norms_a, &norms_b),
            ks_projections,
            noise_floor: ks_noise_floor(a.samples.len(), b.samples.len()),
        });
    }
    let decreasing = pairs.windows(2).all(|p| p[1].ks_norm < p[0].ks_norm);
    let last = &pairs[pairs.len() - 1];
    let converged = decreasing && last.ks_norm < 2.0 * last.noise_floor;
    let projections_converged = (0..m)
        .map(|j| {
            let dec = pairs
                .windows(2)
                .all(|p| p[1].ks_projections[j] < p[0].ks_projections[j]);
            dec && last.ks_projections[j] < 2.0 * last.noise_floor
        })
        .collect();
    Ok(ConvergenceReport {
        pairs,
        converged,
        projections_converged,
    })
}

/// Quantiles of the weighted norm across replicas at each recorded
/// time t ≥ tau, plus the uniform-in-t envelope per level: with
/// Λ = envelope at level q, the fraction of replicas above Λ is at
/// most 1-q at every recorded time.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TightnessTable {
    pub tau: f64,
    pub levels: Vec<f64>,
    pub times: Vec<f64>,
    /// values[i][j] = level-j quantile of the norm at times[i].
    pub values: Vec<Vec<f64>>,
    pub envelope: Vec<f64>,
}

pub fn tightness_from_samples(
    observed: &[Vec<OccupationSample>],
    tau: f64,
    levels: &[f64],
) -> Result<TightnessTable, InvariantError> {
    if !(tau > 0.0) {
        return Err(InvariantError::TauNotPositive(tau));
    }
    for &q in levels {
        if !(q > 0.0 && q <= 1.0) {
            return Err(InvariantError::BadLevel(q));
        }
    }
    let (times, index) = collect_window(observed, tau, f64::INFINITY)?;
    if times.is_empty() {
        return Err(InvariantError::TooFewTimes {
            required: 1,
            got: 0,
        });
    }
    let mut values = Vec::with_capacity(times.len());
    let mut envelope = vec![f64::NEG_INFINITY; levels.len()];
    for k in 0..times.len() {
        let mut norms: Vec<f64> = observed
            .iter()
            .zip(&index)
            .map(|(obs, idx)| obs[idx[k]].norm_rho)
            .collect();
        norms.sort_by(f64::total_cmp);
        let row: Vec<f64> = levels
            .iter()
            .map(|&q| {
                // Empirical CDF inverse: smallest order statistic with
                // CDF ≥ q, so at most a (1-q)-fraction lies above it.
                let idx = ((q * norms.len() as f64).ceil() as usize).max(1) - 1;
                norms[idx.min(norms.len() - 1)]
            })
            .collect();
        for (e, &v) in envelope.iter_mut().zip(&row) {
            *e = e.max(v);
        }
        values.push(row);
    }
    Ok(TightnessTable {
        tau,
        levels: levels.to_vec(),
        times,
        values,
        envelope,
    })
}

pub fn tightness_quantiles(
    trajs: &[Trajectory],
    w: &Weight,
    tau: f64,
    levels: &[f64],
) -> Result<TightnessTable, InvariantError> {
    let observed = trajs
        .iter()
        .map(|t| observe(t, w, None))
        .collect::<Result<Vec<_>, _>>()?;
    tightness_from_samples(&observed, tau, levels)
}

/// Writes the quantile table as CSV with the schema t,level,value.
pub fn write_tightness_csv<W: Write>(table: &TightnessTable, mut out: W) -> std::io::Result<()> {
    writeln!(out, "t,level,value")?;
    for (i, &t) in table.times.iter().enumerate() {
        for (j, &q) in table.levels.iter().enumerate() {
            writeln!(out, "{},{},{}", t, q, table.values[i][j])?;
        }
    }
    Ok(())
}
