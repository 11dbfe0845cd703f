//! Pseudospectral exponential-Euler integrator for the mild equation
//! on the periodic lattice, with restart semantics and the fractional
//! factorization of the stochastic convolution.
//!
//! One step advances the spectral state by
//!
//!   û_{m+1}(k) = e^{−|ξ_k|²·dt/2} · (û_m(k) + 𝔉[b(u_m)·δW_m](k)),
//!
//! the heat propagator applied exactly and the noise term evaluated at
//! the left endpoint (Itô). Each step costs two transforms: the inverse
//! transform unpacks u and δW together from û + i·δŴ (both spectra are
//! Hermitian, so the real and imaginary parts of the result separate
//! them), and the forward transform returns the product b(u)·δW to
//! spectral space.

use crate::fft::FftPlan;
use crate::grid::{FieldState, LatticeGrid};
use crate::heatinit::{self, InitialDatum};
use crate::noise::NoiseSampler;
use crate::rng::stream;
use crate::specfun::gamma;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::f64::consts::PI;

/// Multiplicative coefficient b acting pointwise on the solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DiffusionCoefficient {
    /// b(u) = λu: the parabolic Anderson model.
    Linear { lambda: f64 },
    /// b(u) = λu + c.
    Affine { lambda: f64, c: f64 },
    /// b(u) = c·sin(u): bounded with bounded slope.
    BoundedSine { c: f64 },
}

impl DiffusionCoefficient {
    pub fn eval(&self, u: f64) -> f64 {
        match *self {
            DiffusionCoefficient::Linear { lambda } => lambda * u,
            DiffusionCoefficient::Affine { lambda, c } => lambda * u + c,
            DiffusionCoefficient::BoundedSine { c } => c * u.sin(),
        }
    }

    /// Declared Lipschitz constant L_b.
    pub fn lipschitz_bound(&self) -> f64 {
        match *self {
            DiffusionCoefficient::Linear { lambda } => lambda.abs(),
            DiffusionCoefficient::Affine { lambda, .. } => lambda.abs(),
            DiffusionCoefficient::BoundedSine { c } => c.abs(),
        }
    }

    /// Declared bound L_0 on |b(0)|.
    pub fn zero_bound(&self) -> f64 {
        match *self {
            DiffusionCoefficient::Linear { .. } => 0.0,
            DiffusionCoefficient::Affine { c, .. } => c.abs(),
            DiffusionCoefficient::BoundedSine { .. } => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    ExpEuler,
}

/// Time-stepping plan. Record times are snapped to the nearest whole
/// step of dt (and so is the horizon t_end); duplicates collapse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub dt: f64,
    pub t_end: f64,
    #[serde(default)]
    pub record_times: Vec<f64>,
    #[serde(default = "default_scheme")]
    pub scheme: Scheme,
    /// Zero the top third of modes of the product b(u)·δW before the
    /// propagator. Off by default.
    #[serde(default)]
    pub dealias: bool,
}

fn default_scheme() -> Scheme {
    Scheme::ExpEuler
}

impl SolverConfig {
    pub fn new(dt: f64, t_end: f64) -> Self {
        SolverConfig {
            dt,
            t_end,
            record_times: Vec::new(),
            scheme: Scheme::ExpEuler,
            dealias: false,
        }
    }

    pub fn with_records(mut self, record_times: Vec<f64>) -> Self {
        self.record_times = record_times;
        self
    }
}

/// Integrator state: the physical field, its clock, and the noise
/// lineage (replica, next step counter) under the sampler's seed. The
/// spectral cache, when present, lets a restarted run resume the exact
/// integrator arithmetic, so a split run is bit-identical to an
/// unbroken one.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub field: FieldState,
    pub time: f64,
    pub replica: u64,
    /// Counter of the next noise increment to draw.
    pub step: u64,
    /// Highest increment counter consumed by the run that produced
    /// this state; restarting below it would replay drawn noise.
    pub frontier: u64,
    pub spectral: Option<Vec<Complex64>>,
}

impl SolverState {
    pub fn with_replica(mut self, replica: u64) -> Self {
        self.replica = replica;
        self
    }
}

/// One recorded field together with its clock and step index.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub time: f64,
    pub step: u64,
    pub field: FieldState,
}

/// Diagnostics of an aborted trajectory: the step at which a
/// non-finite value first appeared.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlowUp {
    pub step: u64,
    pub time: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub snapshots: Vec<Snapshot>,
    /// Last finite state: at t_end normally, earlier after a blow-up.
    pub final_state: SolverState,
    pub blowup: Option<BlowUp>,
}

impl Trajectory {
    /// Turns a recorded snapshot back into a state. It inherits the
    /// trajectory's consumption frontier, so restarting from anywhere
    /// but the end is rejected as noise reuse.
    pub fn state_from_snapshot(&self, index: usize) -> SolverState {
        let snap = &self.snapshots[index];
        SolverState {
            field: snap.field.clone(),
            time: snap.time,
            replica: self.final_state.replica,
            step: snap.step,
            frontier: self.final_state.frontier,
            spectral: None,
        }
    }
}

/// Per-step inputs of the noise term, retained for the fractional
/// factorization: the solution u_m and increment δW_m at each left
/// endpoint t₀ + m·dt.
#[derive(Debug, Clone)]
pub struct ForcingRecord {
    pub grid: LatticeGrid,
    pub dt: f64,
    pub t0: f64,
    pub states: Vec<Vec<f64>>,
    pub increments: Vec<Vec<f64>>,
}

/// Time series of the fractional convolution Y. `fields[m]` holds Y at
/// time t0 + m·dt; the first entry is identically zero.
#[derive(Debug, Clone)]
pub struct YSeries {
    pub grid: LatticeGrid,
    pub dt: f64,
    pub t0: f64,
    pub alpha: f64,
    pub fields: Vec<FieldState>,
}

#[derive(Debug, thiserror::Error)]
pub enum SolverError {
    #[error("sampler grid does not match the state grid")]
    GridMismatch,
    #[error("initial datum not simulable: {0}")]
    BadDatum(String),
    #[error("invalid solver config: {0}")]
    BadConfig(String),
    #[error("singularity exponent must lie in (0, 1/2), got {0}")]
    AlphaOutOfRange(f64),
    #[error("exponent {given} does not match the series exponent {series}")]
    AlphaMismatch { given: f64, series: f64 },
    #[error("noise counters [{step}, {frontier}) were already consumed; restarting here would replay noise")]
    CounterReuse { step: u64, frontier: u64 },
    #[error("series covers [{t0}, {t1}], requested t = {t}")]
    Coverage { t0: f64, t1: f64, t: f64 },
}

/// Samples an initial measure onto the lattice.
///
/// Densities are evaluated pointwise at cell centers. A Dirac mass m
/// at x₀ becomes m/h^d in the nearest cell, the lattice field whose
/// measure m·δ_{cell} has total mass exactly m. The Riesz density is
/// infinite at the origin cell; that cell gets the density's average
/// over the ball of one cell volume. Polynomially growing data are
/// rejected: they are not integrable against the periodic domain.
pub fn init_state(mu: &InitialDatum, grid: LatticeGrid) -> Result<SolverState, SolverError> {
    mu.validate(grid.d).map_err(SolverError::BadDatum)?;
    let mut parts = Vec::new();
    heatinit::flatten(mu, 1.0, &mut parts);
    let mut values = vec![0.0; grid.total_points()];
    let h = grid.h();
    let mut x = vec![0.0; grid.d];
    for (coeff, part) in parts {
        match part {
            InitialDatum::PolyGrowth { .. } => {
                return Err(SolverError::BadDatum(
                    "polynomially growing data are not integrable on the periodic domain".into(),
                ));
            }
            InitialDatum::DiracDelta { mass, location } => {
                let mut multi = vec![0usize; grid.d];
                for (a, &xa) in location.iter().enumerate() {
                    let j = (xa / h).round() + (grid.n / 2) as f64;
                    if j < 0.0 || j >= grid.n as f64 {
                        return Err(SolverError::BadDatum(format!(
                            "Dirac location {xa} lies outside the box [-L/2, L/2)"
                        )));
                    }
                    multi[a] = j as usize;
                }
                values[grid.flat_index(&multi)] += coeff * mass / grid.cell_volume();
            }
            InitialDatum::ConstantDensity { c } => {
                for v in values.iter_mut() {
                    *v += coeff * c;
                }
            }
            InitialDatum::RieszSingular { alpha } => {
                // Average of |x|^{−α} over the ball of volume h^d,
                // used in place of the infinite center-cell value.
                let df = grid.d as f64;
                let ball_radius = h
                    * (gamma(df / 2.0 + 1.0).powf(1.0 / df) / PI.sqrt());
                let center_value = crate::kernels::sphere_area(grid.d)
                    * ball_radius.powf(df - alpha)
                    / ((df - alpha) * grid.cell_volume());
                for (k, v) in values.iter_mut().enumerate() {
                    grid.coords(k, &mut x);
                    let r2: f64 = x.iter().map(|c| c * c).sum();
                    *v += coeff
                        * if r2 == 0.0 {
                            center_value
                        } else {
                            r2.powf(-alpha / 2.0)
                        };
                }
            }
            InitialDatum::SignedCombo { .. } => unreachable!("flattened"),
        }
    }
    Ok(SolverState {
        field: FieldState { grid, values },
        time: 0.0,
        replica: 0,
        step: 0,
        frontier: 0,
        spectral: None,
    })
}

/// Runs the exponential-Euler scheme from `state.time` to the snapped
/// horizon, drawing increment m of replica r from the dedicated stream
/// (seed, [r, m]). Non-finite values abort the trajectory, which then
/// carries the last finite state and the blow-up step index.
pub fn evolve(
    state: SolverState,
    cfg: &SolverConfig,
    sampler: &NoiseSampler,
    b: DiffusionCoefficient,
) -> Result<Trajectory, SolverError> {
    evolve_impl(state, cfg, sampler, b, None)
}

/// Same as [`evolve`], also retaining (u_m, δW_m) per step for
/// [`compute_y`].
pub fn evolve_recorded(
    state: SolverState,
    cfg: &SolverConfig,
    sampler: &NoiseSampler,
    b: DiffusionCoefficient,
) -> Result<(Trajectory, ForcingRecord), SolverError> {
    let mut record = ForcingRecord {
        grid: state.field.grid,
        dt: cfg.dt,
        t0: state.time,
        states: Vec::new(),
        increments: Vec::new(),
    };
    let traj = evolve_impl(state, cfg, sampler, b, Some(&mut record))?;
    Ok((traj, record))
}

/// Continues an existing trajectory with fresh noise counters beyond
/// its consumption frontier. Restarting at time zero from a fresh
/// state is identical to [`evolve`].
pub fn restart(
    state: SolverState,
    cfg: &SolverConfig,
    sampler: &NoiseSampler,
    b: DiffusionCoefficient,
) -> Result<Trajectory, SolverError> {
    if state.step < state.frontier {
        return Err(SolverError::CounterReuse {
            step: state.step,
            frontier: state.frontier,
        });
    }
    evolve_impl(state, cfg, sampler, b, None)
}

fn evolve_impl(
    state: SolverState,
    cfg: &SolverConfig,
    sampler: &NoiseSampler,
    b: DiffusionCoefficient,
    mut record: Option<&mut ForcingRecord>,
) -> Result<Trajectory, SolverError> {
    let grid = state.field.grid;
    let sg = sampler.grid();
    if sg.d != grid.d || sg.n != grid.n || sg.length != grid.length {
        return Err(SolverError::GridMismatch);
    }
    if !(cfg.dt > 0.0) {
        return Err(SolverError::BadConfig(format!("dt must be > 0, got {}", cfg.dt)));
    }
    let t0 = state.time;
    let steps_f = (cfg.t_end - t0) / cfg.dt;
    if steps_f < -1e-9 {
        return Err(SolverError::BadConfig(format!(
            "t_end = {} is before the state time {t0}",
            cfg.t_end
        )));
    }
    let total_steps = steps_f.round().max(0.0) as u64;
    let mut record_steps = BTreeSet::new();
    for &rt in &cfg.record_times {
        let m = ((rt - t0) / cfg.dt).round();
        if m < 0.0 || m > total_steps as f64 {
            return Err(SolverError::BadConfig(format!(
                "record time {rt} is outside the run window [{t0}, {}]",
                cfg.t_end
            )));
        }
        record_steps.insert(m as u64);
    }

    let total = grid.total_points();
    let cell = grid.cell_volume();
    let inv_box = 1.0 / grid.length.powi(grid.d as i32);
    let mut plan = FftPlan::new(grid.d, grid.n);

    // Heat propagator over one step, and the optional dealias mask
    // zeroing modes with any axis index in the top third.
    let propagator: Vec<f64> = (0..total)
        .map(|k| (-grid.frequency_sq(k) * cfg.dt / 2.0).exp())
        .collect();
    let dealias_mask: Option<Vec<bool>> = cfg.dealias.then(|| {
        (0..total)
            .map(|k| {
                let mut rem = k;
                let mut keep = true;
                for _ in 0..grid.d {
                    let idx = rem % grid.n;
                    rem /= grid.n;
                    let signed = if idx <= grid.n / 2 {
                        idx as i64
                    } else {
                        idx as i64 - grid.n as i64
                    };
                    keep &= (signed.unsigned_abs() as f64) < grid.n as f64 / 3.0;
                }
                keep
            })
            .collect()
    });

    let mut uh = match state.spectral {
        Some(spec) => spec,
        None => {
            let mut buf: Vec<Complex64> = state
                .field
                .values
                .iter()
                .map(|&v| Complex64::new(v, 0.0))
                .collect();
            plan.forward(&mut buf);
            for z in buf.iter_mut() {
                *z *= cell;
            }
            buf
        }
    };
    let mut zbuf = vec![Complex64::default(); total];
    let mut u = state.field.values.clone();
    let mut snapshots = Vec::new();
    let mut last_finite = (state.field.values.clone(), t0, state.step);

    let seed = sampler.seed();
    for m in 0..total_steps {
        let gstep = state.step + m;
        let t_m = t0 + m as f64 * cfg.dt;
        let mut rng = stream(seed, &[state.replica, gstep]);
        sampler.fill_spectrum(&mut rng, cfg.dt, &mut zbuf);
        for k in 0..total {
            zbuf[k] = uh[k] + Complex64::new(-zbuf[k].im, zbuf[k].re);
        }
        plan.inverse(&mut zbuf);
        let mut finite = true;
        for (uj, z) in u.iter_mut().zip(&zbuf) {
            *uj = z.re * inv_box;
            finite &= uj.is_finite();
        }
        if !finite {
            return Ok(Trajectory {
                snapshots,
                final_state: SolverState {
                    field: FieldState {
                        grid,
                        values: last_finite.0,
                    },
                    time: last_finite.1,
                    replica: state.replica,
                    step: last_finite.2,
                    frontier: gstep + 1,
                    spectral: None,
                },
                blowup: Some(BlowUp {
                    step: gstep,
                    time: t_m,
                }),
            });
        }
        if record_steps.contains(&m) {
            snapshots.push(Snapshot {
                time: t_m,
                step: gstep,
                field: FieldState {
                    grid,
                    values: u.clone(),
                },
            });
        }
        if let Some(rec) = record.as_deref_mut() {
            rec.states.push(u.clone());
            rec.increments
                .push(zbuf.iter().map(|z| z.im * inv_box).collect());
        }
        last_finite = (u.clone(), t_m, gstep);
        for k in 0..total {
            let w = b.eval(zbuf[k].re * inv_box) * (zbuf[k].im * inv_box);
            zbuf[k] = Complex64::new(w, 0.0);
        }
        plan.forward(&mut zbuf);
        if let Some(mask) = &dealias_mask {
            for (z, &keep) in zbuf.iter_mut().zip(mask) {
                if !keep {
                    *z = Complex64::default();
                }
            }
        }
        for k in 0..total {
            uh[k] = propagator[k] * (uh[k] + zbuf[k] * cell);
        }
    }

    let t_end = t0 + total_steps as f64 * cfg.dt;
    zbuf.copy_from_slice(&uh);
    plan.inverse(&mut zbuf);
    let mut finite = true;
    for (uj, z) in u.iter_mut().zip(&zbuf) {
        *uj = z.re * inv_box;
        finite &= uj.is_finite();
    }
    if !finite {
        return Ok(Trajectory {
            snapshots,
            final_state: SolverState {
                field: FieldState {
                    grid,
                    values: last_finite.0,
                },
                time: last_finite.1,
                replica: state.replica,
                step: last_finite.2,
                frontier: state.step + total_steps,
                spectral: None,
            },
            blowup: Some(BlowUp {
                step: state.step + total_steps,
                time: t_end,
            }),
        });
    }
    if record_steps.contains(&total_steps) {
        snapshots.push(Snapshot {
            time: t_end,
            step: state.step + total_steps,
            field: FieldState {
                grid,
                values: u.clone(),
            },
        });
    }
    Ok(Trajectory {
        snapshots,
        final_state: SolverState {
            field: FieldState { grid, values: u },
            time: t_end,
            replica: state.replica,
            step: state.step + total_steps,
            frontier: state.step + total_steps,
            spectral: Some(uh),
        },
        blowup: None,
    })
}

/// Weight of the cell nearest the fractional-kernel singularity: the
/// midpoint value (dt/2)^{−α}; farther cells use the left endpoint
/// (l·dt)^{−α}.
fn singular_weight(l: u64, dt: f64, alpha: f64) -> f64 {
    if l == 1 {
        (dt / 2.0).powf(-alpha)
    } else {
        (l as f64 * dt).powf(-alpha)
    }
}

/// Fractional stochastic convolution
///
///   Y(s,y) = Σ_{r<s} (s−r)^{−α} [G(s−r,·) * (b(u_r)·δW_r)](y),
///
/// accumulated in spectral space from a forcing record. The factor
/// (s−r)^{−α} is evaluated at the left endpoint of each step except
/// the cell adjacent to r = s, which takes the midpoint value.
pub fn compute_y(
    record: &ForcingRecord,
    b: DiffusionCoefficient,
    alpha: f64,
) -> Result<YSeries, SolverError> {
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(SolverError::AlphaOutOfRange(alpha));
    }
    let grid = record.grid;
    let total = grid.total_points();
    let steps = record.states.len();
    let cell = grid.cell_volume();
    let inv_box = 1.0 / grid.length.powi(grid.d as i32);
    let mut plan = FftPlan::new(grid.d, grid.n);

    // Spectral forcing ŵ_j = 𝔉[b(u_j)·δW_j]·h^d per step.
    let mut forcing = Vec::with_capacity(steps);
    for (uj, dwj) in record.states.iter().zip(&record.increments) {
        let mut buf: Vec<Complex64> = uj
            .iter()
            .zip(dwj)
            .map(|(&u, &dw)| Complex64::new(b.eval(u) * dw, 0.0))
            .collect();
        plan.forward(&mut buf);
        for z in buf.iter_mut() {
            *z *= cell;
        }
        forcing.push(buf);
    }

    // propagator_pow[l][k] = e^{−|ξ_k|²·(l·dt)/2}, built by recurrence.
    let one_step: Vec<f64> = (0..total)
        .map(|k| (-grid.frequency_sq(k) * record.dt / 2.0).exp())
        .collect();
    let mut propagator_pow = Vec::with_capacity(steps + 1);
    propagator_pow.push(vec![1.0; total]);
    for l in 1..=steps {
        let next: Vec<f64> = {
            let prev = &propagator_pow[l - 1];
            (0..total).map(|k| prev[k] * one_step[k]).collect()
        };
        propagator_pow.push(next);
    }

    let mut fields = Vec::with_capacity(steps + 1);
    fields.push(FieldState::zeros(grid));
    let mut acc = vec![Complex64::default(); total];
    for m in 1..=steps {
        acc.iter_mut().for_each(|z| *z = Complex64::default());
        for j in 0..m {
            let l = (m - j) as u64;
            let q = singular_weight(l, record.dt, alpha);
            let pw = &propagator_pow[m - j];
            let fj = &forcing[j];
            for k in 0..total {
                acc[k] += q * pw[k] * fj[k];
            }
        }
        let mut buf = acc.clone();
        plan.inverse(&mut buf);
        fields.push(FieldState {
            grid,
            values: buf.iter().map(|z| z.re * inv_box).collect(),
        });
    }
    Ok(YSeries {
        grid,
        dt: record.dt,
        t0: record.t0,
        alpha,
        fields,
    })
}

/// Inverts the factorization: reconstructs the plain stochastic
/// convolution at time t from the Y series via
///
///   (sin(απ)/π) ∫₀ᵗ (t−s)^{α−1} [G(t−s,·) * Y(s,·)] ds,
///
/// with the singular factor integrated exactly over each step cell
/// ((i+1)^α − i^α)·dt^α/α and Y taken at the cell endpoint nearer t.
pub fn factorization_reconstruct(
    series: &YSeries,
    alpha: f64,
    t: f64,
) -> Result<FieldState, SolverError> {
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(SolverError::AlphaOutOfRange(alpha));
    }
    if (alpha - series.alpha).abs() > 1e-12 {
        return Err(SolverError::AlphaMismatch {
            given: alpha,
            series: series.alpha,
        });
    }
    let steps = series.fields.len() - 1;
    let t1 = series.t0 + steps as f64 * series.dt;
    let m_t = ((t - series.t0) / series.dt).round();
    if m_t < 1.0 || m_t > steps as f64 {
        return Err(SolverError::Coverage {
            t0: series.t0,
            t1,
            t,
        });
    }
    let m_t = m_t as usize;
    let grid = series.grid;
    let total = grid.total_points();
    let cell = grid.cell_volume();
    let inv_box = 1.0 / grid.length.powi(grid.d as i32);
    let mut plan = FftPlan::new(grid.d, grid.n);

    let one_step: Vec<f64> = (0..total)
        .map(|k| (-grid.frequency_sq(k) * series.dt / 2.0).exp())
        .collect();
    let mut pw = vec![1.0; total];
    let mut acc = vec![Complex64::default(); total];
    let dt_alpha = series.dt.powf(alpha);
    for i in 0..m_t {
        // Mass of (t−s)^{α−1} over the cell s ∈ [t−(i+1)dt, t−i·dt].
        let mass = dt_alpha * ((i as f64 + 1.0).powf(alpha) - (i as f64).powf(alpha)) / alpha;
        let mut buf: Vec<Complex64> = series.fields[m_t - i]
            .values
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        plan.forward(&mut buf);
        for k in 0..total {
            acc[k] += mass * pw[k] * buf[k] * cell;
        }
        if i + 1 < m_t {
            for k in 0..total {
                pw[k] *= one_step[k];
            }
        }
    }
    plan.inverse(&mut acc);
    let scale = (alpha * PI).sin() / PI * inv_box;
    Ok(FieldState {
        grid,
        values: acc.iter().map(|z| z.re * scale).collect(),
    })
}

/// Spectral accumulation of the plain stochastic convolution
/// Σ_j G((M−j)dt,·)*(b(u_j)·δW_j) at the end of a record: the oracle
/// the factorization is checked against. For the exponential-Euler
/// scheme this equals the trajectory endpoint minus the heat flow of
/// the initial field, exactly.
pub fn direct_convolution(
    record: &ForcingRecord,
    b: DiffusionCoefficient,
) -> Result<FieldState, SolverError> {
    let grid = record.grid;
    let total = grid.total_points();
    let steps = record.states.len();
    let cell = grid.cell_volume();
    let inv_box = 1.0 / grid.length.powi(grid.d as i32);
    let mut plan = FftPlan::new(grid.d, grid.n);
    let one_step: Vec<f64> = (0..total)
        .map(|k| (-grid.frequency_sq(k) * record.dt / 2.0).exp())
        .collect();
    let mut acc = vec![Complex64::default(); total];
    // Process j from latest to earliest so the propagator power grows
    // one step at a time.
    let mut pw = vec![1.0; total];
    for j in (0..steps).rev() {
        let mut buf: Vec<Complex64> = record.states[j]
            .iter()
            .zip(&record.increments[j])
            .map(|(&u, &dw)| Complex64::new(b.eval(u) * dw, 0.0))
            .collect();
        plan.forward(&mut buf);
        for k in 0..total {
            pw[k] *= one_step[k];
            acc[k] += pw[k] * buf[k] * cell;
        }
    }
    plan.inverse(&mut acc);
    Ok(FieldState {
        grid,
        values: acc.iter().map(|z| z.re * inv_box).collect(),
    })
}
