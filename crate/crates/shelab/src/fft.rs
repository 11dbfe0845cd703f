//! Multi-dimensional FFT on row-major cubic lattices, built from
//! cached 1-D plans applied axis by axis. Transforms are unnormalized
//! (forward Σe^{−i...}, inverse Σe^{+i...}); callers own the 1/n^d.

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

pub struct FftPlan {
    d: usize,
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    line: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl FftPlan {
    pub fn new(d: usize, n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        FftPlan {
            d,
            n,
            forward,
            inverse,
            line: vec![Complex64::default(); n],
            scratch: vec![Complex64::default(); scratch_len],
        }
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn forward(&mut self, data: &mut [Complex64]) {
        self.transform(data, true);
    }

    pub fn inverse(&mut self, data: &mut [Complex64]) {
        self.transform(data, false);
    }

    fn transform(&mut self, data: &mut [Complex64], fwd: bool) {
        assert_eq!(data.len(), self.len(), "field size does not match plan");
        let n = self.n;
        let fft = if fwd { &self.forward } else { &self.inverse };
        for axis in 0..self.d {
            let stride = n.pow((self.d - 1 - axis) as u32);
            if stride == 1 {
                for chunk in data.chunks_exact_mut(n) {
                    fft.process_with_scratch(chunk, &mut self.scratch);
                }
            } else {
                let lines = data.len() / n;
                for l in 0..lines {
                    let block = l / stride;
                    let offset = l % stride;
                    let start = block * n * stride + offset;
                    for i in 0..n {
                        self.line[i] = data[start + i * stride];
                    }
                    fft.process_with_scratch(&mut self.line, &mut self.scratch);
                    for i in 0..n {
                        data[start + i * stride] = self.line[i];
                    }
                }
            }
        }
    }
}
