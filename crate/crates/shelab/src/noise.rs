//! Spectral synthesis of the driving noise: white in time, spatially
//! homogeneous in space with covariance f, sampled on a periodic
//! lattice.
//!
//! Mode k carries amplitude σ_k = √(f̂(ξ_k)·L^d). Drawing complex
//! Gaussians Ŵ_k with E|Ŵ_k|² = dt·σ_k² under the Hermitian pairing
//! Ŵ_{−k} = conj(Ŵ_k), inverting the DFT and dividing by L^d yields a
//! real field with
//!
//!   E[δW(x)δW(y)] = dt·L^{−d} Σ_k f̂(ξ_k) e^{iξ_k·(x−y)},
//!
//! the Riemann sum over the frequency lattice of dt·(2π)^{−d}∫f̂ e^{iξr}dξ
//! = dt·f(x−y). By Poisson summation the lattice covariance is the
//! periodization of f truncated at the Nyquist frequency; both effects
//! are monitored, periodization by the box size and truncation by the
//! ratio of f̂ at the Nyquist point to its maximum over the modes.

use crate::fft::FftPlan;
use crate::grid::{FieldState, LatticeGrid};
use crate::kernels::SpectralModel;
use crate::rng::stream;
use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;
use std::io::{Read, Write};

/// Construction, estimation, and field-dump failures.
#[derive(Debug, thiserror::Error)]
pub enum NoiseError {
    #[error("spectral density is not finite at lattice mode {mode:?}, frequency {frequency:?}")]
    InfiniteMode { mode: Vec<i64>, frequency: Vec<f64> },
    #[error("model dimension {model_d} does not match grid dimension {grid_d}")]
    DimensionMismatch { model_d: usize, grid_d: usize },
    #[error("empirical covariance needs at least {required} fields, got {got}")]
    TooFewFields { required: usize, got: usize },
    #[error("lag has {got} components, grid dimension is {expected}")]
    BadLag { expected: usize, got: usize },
    #[error("fields passed to empirical covariance live on different grids")]
    GridMismatch,
    #[error("field dump i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad field dump: {0}")]
    BadDump(String),
}

/// Generator of noise increments for one (model, grid, seed) triple.
///
/// The sampler state is immutable apart from the stream counter: field
/// number c is produced by the dedicated stream `(seed, [c])`, so
/// replaying a counter range (see [`NoiseSampler::set_counter`])
/// regenerates the same fields bit-exactly.
pub struct NoiseSampler {
    grid: LatticeGrid,
    model: SpectralModel,
    amplitudes: Vec<f64>,
    /// Flat index of the Hermitian partner −k of each mode k.
    pair: Vec<usize>,
    seed: u64,
    counter: u64,
    nyquist_ratio: f64,
    plan: FftPlan,
    spectrum: Vec<Complex64>,
}

/// Builds a sampler, precomputing the per-mode amplitudes.
///
/// Rejected inputs: a model whose spectral density is infinite at any
/// lattice mode (the error names the mode), and a model/grid dimension
/// mismatch.
pub fn build_sampler(
    model: SpectralModel,
    grid: LatticeGrid,
    seed: u64,
) -> Result<NoiseSampler, NoiseError> {
    if model.d != grid.d {
        return Err(NoiseError::DimensionMismatch {
            model_d: model.d,
            grid_d: grid.d,
        });
    }
    let total = grid.total_points();
    let box_volume = grid.length.powi(grid.d as i32);
    let mut amplitudes = vec![0.0; total];
    let mut pair = vec![0usize; total];
    let mut idx = vec![0usize; grid.d];
    let mut xi = vec![0.0; grid.d];
    let mut fhat_max = 0.0_f64;
    for k in 0..total {
        axis_indices(&grid, k, &mut idx);
        for a in 0..grid.d {
            xi[a] = grid.axis_frequency(idx[a]);
        }
        let fhat = model.spectral_density(&xi);
        if !fhat.is_finite() {
            return Err(NoiseError::InfiniteMode {
                mode: idx.iter().map(|&j| signed_mode(grid.n, j)).collect(),
                frequency: xi.clone(),
            });
        }
        fhat_max = fhat_max.max(fhat);
        amplitudes[k] = (fhat * box_volume).sqrt();
        let mut p = 0usize;
        for a in 0..grid.d {
            p = p * grid.n + (grid.n - idx[a]) % grid.n;
        }
        pair[k] = p;
    }
    let mut nyq = vec![0.0; grid.d];
    nyq[0] = grid.axis_frequency(grid.n / 2);
    let nyquist_ratio = if fhat_max > 0.0 {
        model.spectral_density(&nyq) / fhat_max
    } else {
        0.0
    };
    Ok(NoiseSampler {
        grid,
        model,
        amplitudes,
        pair,
        seed,
        counter: 0,
        nyquist_ratio,
        plan: FftPlan::new(grid.d, grid.n),
        spectrum: vec![Complex64::default(); total],
    })
}

impl NoiseSampler {
    pub fn grid(&self) -> LatticeGrid {
        self.grid
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn model(&self) -> SpectralModel {
        self.model
    }

    /// Per-mode standard deviations σ_k in flat row-major mode order.
    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    /// f̂ at the axis Nyquist frequency over its maximum on the mode
    /// lattice: the truncation-aliasing diagnostic. Zero for compactly
    /// supported spectra that vanish before the Nyquist point.
    pub fn nyquist_ratio(&self) -> f64 {
        self.nyquist_ratio
    }

    /// Stream counter of the next field to be sampled.
    pub fn counter(&self) -> u64 {
        self.counter
    }

    /// Rewinds (or advances) the stream so the next call to
    /// [`NoiseSampler::sample_increment`] regenerates field `counter`.
    pub fn set_counter(&mut self, counter: u64) {
        self.counter = counter;
    }

    /// Draws one increment δW over a step of length dt, with
    /// E[δW(x)δW(y)] ≈ dt·f(x−y). The field is real by construction:
    /// the spectrum is exactly Hermitian, so the imaginary part of the
    /// inverse transform is pure floating-point residue.
    pub fn sample_increment(&mut self, dt: f64) -> FieldState {
        let mut rng = stream(self.seed, &[self.counter]);
        self.counter += 1;
        let mut spec = std::mem::take(&mut self.spectrum);
        self.fill_spectrum(&mut rng, dt, &mut spec);
        self.plan.inverse(&mut spec);
        let scale = 1.0 / self.grid.length.powi(self.grid.d as i32);
        let values = spec.iter().map(|z| z.re * scale).collect();
        self.spectrum = spec;
        FieldState {
            grid: self.grid,
            values,
        }
    }

    /// Fills `out` with one spectral increment Ŵ: independent complex
    /// Gaussians per Hermitian pair with E|Ŵ_k|² = dt·σ_k², conjugate
    /// partners, and real self-paired modes. Physical increment =
    /// inverse DFT of `out` divided by L^d. Draw order is flat mode
    /// order, so the stream layout is reproducible.
    pub(crate) fn fill_spectrum<R: Rng>(&self, rng: &mut R, dt: f64, out: &mut [Complex64]) {
        assert!(dt > 0.0, "dt must be positive");
        assert_eq!(out.len(), self.amplitudes.len(), "spectrum length mismatch");
        let half = (dt / 2.0).sqrt();
        let full = dt.sqrt();
        for k in 0..out.len() {
            let p = self.pair[k];
            let sigma = self.amplitudes[k];
            if k < p {
                let g1: f64 = rng.sample(StandardNormal);
                let g2: f64 = rng.sample(StandardNormal);
                out[k] = Complex64::new(sigma * half * g1, sigma * half * g2);
                out[p] = out[k].conj();
            } else if k == p {
                let g: f64 = rng.sample(StandardNormal);
                out[k] = Complex64::new(sigma * full * g, 0.0);
            }
        }
    }
}

/// One entry of the stationary covariance table.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceEstimate {
    /// Lattice offset in grid cells, one signed component per axis.
    pub lag: Vec<i64>,
    pub estimate: f64,
    pub standard_error: f64,
}

/// Estimates the stationary covariance E[u(x)u(x+lag·h)] at the given
/// lattice offsets, averaging over all periodic translations within
/// each field. Per-field averages are unbiased and independent across
/// fields, so the standard error is their sample deviation over √N.
/// Requires at least 100 fields.
pub fn empirical_covariance(
    fields: &[FieldState],
    lags: &[Vec<i64>],
) -> Result<Vec<CovarianceEstimate>, NoiseError> {
    if fields.len() < 100 {
        return Err(NoiseError::TooFewFields {
            required: 100,
            got: fields.len(),
        });
    }
    let grid = fields[0].grid;
    let total = grid.total_points();
    if fields
        .iter()
        .any(|f| f.grid.d != grid.d || f.grid.n != grid.n || f.values.len() != total)
    {
        return Err(NoiseError::GridMismatch);
    }
    let mut table = Vec::with_capacity(lags.len());
    let mut idx = vec![0usize; grid.d];
    for lag in lags {
        if lag.len() != grid.d {
            return Err(NoiseError::BadLag {
                expected: grid.d,
                got: lag.len(),
            });
        }
        let shift: Vec<usize> = (0..total)
            .map(|k| {
                axis_indices(&grid, k, &mut idx);
                let mut s = 0usize;
                for a in 0..grid.d {
                    let j = (idx[a] as i64 + lag[a]).rem_euclid(grid.n as i64) as usize;
                    s = s * grid.n + j;
                }
                s
            })
            .collect();
        let per_field: Vec<f64> = fields
            .iter()
            .map(|f| {
                let mut acc = 0.0;
                for k in 0..total {
                    acc += f.values[k] * f.values[shift[k]];
                }
                acc / total as f64
            })
            .collect();
        let nf = per_field.len() as f64;
        let mean = per_field.iter().sum::<f64>() / nf;
        let var = per_field.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (nf - 1.0);
        table.push(CovarianceEstimate {
            lag: lag.clone(),
            estimate: mean,
            standard_error: (var / nf).sqrt(),
        });
    }
    Ok(table)
}

const FIELD_MAGIC: &[u8; 8] = b"SHEFLD01";

/// Writes a field dump: 32-byte header (8-byte magic, d and n as
/// little-endian u64, L as little-endian f64), then the values in
/// row-major order as little-endian f64.
pub fn write_field<W: Write>(field: &FieldState, mut w: W) -> Result<(), NoiseError> {
    w.write_all(FIELD_MAGIC)?;
    w.write_all(&(field.grid.d as u64).to_le_bytes())?;
    w.write_all(&(field.grid.n as u64).to_le_bytes())?;
    w.write_all(&field.grid.length.to_le_bytes())?;
    for v in &field.values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Reads a field dump written by [`write_field`].
pub fn read_field<R: Read>(mut r: R) -> Result<FieldState, NoiseError> {
    let mut header = [0u8; 32];
    r.read_exact(&mut header)?;
    if &header[..8] != FIELD_MAGIC {
        return Err(NoiseError::BadDump("magic bytes mismatch".into()));
    }
    let d = u64::from_le_bytes(header[8..16].try_into().unwrap()) as usize;
    let n = u64::from_le_bytes(header[16..24].try_into().unwrap()) as usize;
    let length = f64::from_le_bytes(header[24..32].try_into().unwrap());
    let grid = LatticeGrid::new(d, n, length).map_err(NoiseError::BadDump)?;
    let mut values = vec![0.0; grid.total_points()];
    let mut buf = [0u8; 8];
    for v in &mut values {
        r.read_exact(&mut buf)?;
        *v = f64::from_le_bytes(buf);
    }
    Ok(FieldState { grid, values })
}

fn axis_indices(grid: &LatticeGrid, flat: usize, out: &mut [usize]) {
    let mut rem = flat;
    for a in (0..grid.d).rev() {
        out[a] = rem % grid.n;
        rem /= grid.n;
    }
}

fn signed_mode(n: usize, idx: usize) -> i64 {
    if idx <= n / 2 {
        idx as i64
    } else {
        idx as i64 - n as i64
    }
}
