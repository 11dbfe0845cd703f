//! Centered periodic lattices on the box [−L/2, L/2)^d and fields
//! sampled on them.
//!
//! Physical layout everywhere: the flat array index j along one axis
//! carries the coordinate x_j = (j − n/2)h, so the spatial origin is
//! the exact lattice site j = n/2 (n must be even). Initial data,
//! weights, and probe points all go through the same coordinate map;
//! nothing is ever built in FFT layout, which keeps deltas, weights
//! and reported profiles centered on the same site.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Uniform periodic lattice: `n` points per axis over edge length
/// `length`, dimension `d` ≤ 3.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeGrid {
    pub d: usize,
    pub n: usize,
    pub length: f64,
}

impl LatticeGrid {
    pub fn new(d: usize, n: usize, length: f64) -> Result<Self, String> {
        if !(1..=3).contains(&d) {
            return Err(format!("dimension must be 1, 2 or 3, got {d}"));
        }
        if n < 2 || !n.is_power_of_two() {
            return Err(format!("points per axis must be a power of two >= 2, got {n}"));
        }
        if !(length > 0.0) {
            return Err(format!("box length must be positive, got {length}"));
        }
        Ok(LatticeGrid { d, n, length })
    }

    /// Lattice spacing h = L/n.
    pub fn h(&self) -> f64 {
        self.length / self.n as f64
    }

    /// Volume element h^d.
    pub fn cell_volume(&self) -> f64 {
        self.h().powi(self.d as i32)
    }

    /// Total number of lattice sites n^d.
    pub fn total_points(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    /// Coordinate of index j along one axis: (j − n/2)·h.
    pub fn axis_coordinate(&self, j: usize) -> f64 {
        (j as f64 - (self.n / 2) as f64) * self.h()
    }

    /// Writes the coordinates of the flat (row-major) index into `out`.
    pub fn coords(&self, flat: usize, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.d);
        let mut rem = flat;
        for axis in (0..self.d).rev() {
            out[axis] = self.axis_coordinate(rem % self.n);
            rem /= self.n;
        }
        debug_assert_eq!(rem, 0);
    }

    /// Flat index of the multi-index (row-major).
    pub fn flat_index(&self, multi: &[usize]) -> usize {
        debug_assert_eq!(multi.len(), self.d);
        let mut flat = 0;
        for &j in multi {
            debug_assert!(j < self.n);
            flat = flat * self.n + j;
        }
        flat
    }

    /// Flat index of the spatial origin x = 0.
    pub fn center_index(&self) -> usize {
        self.flat_index(&vec![self.n / 2; self.d])
    }

    /// Signed Fourier wavenumber ξ_k = 2πk̃/L of DFT bin k along one
    /// axis, with k̃ = k for k ≤ n/2 and k − n beyond.
    pub fn axis_frequency(&self, k: usize) -> f64 {
        debug_assert!(k < self.n);
        let signed = if k <= self.n / 2 { k as isize } else { k as isize - self.n as isize };
        2.0 * PI * signed as f64 / self.length
    }

    /// |ξ|² of the flat DFT bin (row-major over axes, same layout as
    /// the forward transform output).
    pub fn frequency_sq(&self, flat: usize) -> f64 {
        let mut rem = flat;
        let mut sum = 0.0;
        for _ in 0..self.d {
            let f = self.axis_frequency(rem % self.n);
            sum += f * f;
            rem /= self.n;
        }
        sum
    }

    /// Squared distance from the origin of the flat physical index.
    pub fn radius_sq(&self, flat: usize) -> f64 {
        let mut rem = flat;
        let mut sum = 0.0;
        for _ in 0..self.d {
            let x = self.axis_coordinate(rem % self.n);
            sum += x * x;
            rem /= self.n;
        }
        sum
    }
}

/// A scalar field sampled on a lattice, physical layout.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub grid: LatticeGrid,
    pub values: Vec<f64>,
}

impl FieldState {
    pub fn zeros(grid: LatticeGrid) -> Self {
        FieldState { grid, values: vec![0.0; grid.total_points()] }
    }

    /// Builds a field from a coordinate function.
    pub fn from_fn<F: FnMut(&[f64]) -> f64>(grid: LatticeGrid, mut f: F) -> Self {
        let mut values = vec![0.0; grid.total_points()];
        let mut x = vec![0.0; grid.d];
        for (flat, v) in values.iter_mut().enumerate() {
            grid.coords(flat, &mut x);
            *v = f(&x);
        }
        FieldState { grid, values }
    }

    /// Plain L² lattice norm squared, Σ u² h^d.
    pub fn norm2(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>() * self.grid.cell_volume()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn invariants_are_enforced() {
        assert!(LatticeGrid::new(4, 8, 1.0).is_err());
        assert!(LatticeGrid::new(2, 7, 1.0).is_err());
        assert!(LatticeGrid::new(2, 8, -1.0).is_err());
        assert!(LatticeGrid::new(3, 8, 1.0).is_ok());
    }

    #[test]
    fn coordinates_are_centered() {
        let g = LatticeGrid::new(1, 8, 4.0).unwrap();
        assert_eq!(g.h(), 0.5);
        assert_eq!(g.axis_coordinate(0), -2.0);
        assert_eq!(g.axis_coordinate(4), 0.0);
        assert_eq!(g.axis_coordinate(7), 1.5);
        let g3 = LatticeGrid::new(3, 8, 4.0).unwrap();
        let mut x = [0.0; 3];
        g3.coords(g3.center_index(), &mut x);
        assert_eq!(x, [0.0; 3]);
        // Round trip flat → coords → flat.
        let flat = g3.flat_index(&[1, 5, 7]);
        g3.coords(flat, &mut x);
        assert_eq!(x, [-1.5, 0.5, 1.5]);
        assert_eq!(g3.radius_sq(flat), 1.5f64 * 1.5 + 0.25 + 1.5 * 1.5);
    }

    #[test]
    fn frequencies_follow_fft_layout() {
        let g = LatticeGrid::new(1, 8, 4.0).unwrap();
        assert_eq!(g.axis_frequency(0), 0.0);
        assert!((g.axis_frequency(1) - PI / 2.0).abs() < 1e-15);
        assert!((g.axis_frequency(7) + PI / 2.0).abs() < 1e-15);
        // Nyquist bin keeps the positive sign.
        assert!((g.axis_frequency(4) - 2.0 * PI).abs() < 1e-15);
    }

    #[test]
    fn field_construction_and_norm() {
        let g = LatticeGrid::new(2, 16, 8.0).unwrap();
        let f = FieldState::from_fn(g, |x| if x == [0.0, 0.0] { 2.0 } else { 0.0 });
        // One site of value 2 → norm2 = 4·h².
        assert!((f.norm2() - 4.0 * 0.25).abs() < 1e-15);
        assert_eq!(f.values[g.center_index()], 2.0);
    }
}
