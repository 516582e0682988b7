//! Periodic box discretisation and the FFT plumbing shared by the torus
//! solver and the grid-based Littlewood–Paley tools.
//!
//! Real fields are stored row-major with the last axis contiguous. Spectra use
//! the half-complex layout of a real-to-complex transform along the last axis
//! (`n/2 + 1` slots) and full complex transforms along the remaining axes.
//! Coefficients are normalised so that `f(x) = Σ_k f̂_k e^{ik·x}`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Periodic box `[0, L)^dim` sampled with `n` points per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub dim: usize,
    pub n: usize,
    pub box_len: f64,
}

impl Grid {
    pub fn new(dim: usize, n: usize, box_len: f64) -> Result<Self> {
        let grid = Grid { dim, n, box_len };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.dim) {
            return Err(Error::param("dim", format!("must be 1, 2 or 3, got {}", self.dim)));
        }
        if self.n < 8 || !self.n.is_power_of_two() {
            return Err(Error::param(
                "n",
                format!("must be a power of two >= 8, got {}", self.n),
            ));
        }
        if !(self.box_len.is_finite() && self.box_len > 0.0) {
            return Err(Error::param("box_len", format!("must be positive, got {}", self.box_len)));
        }
        Ok(())
    }

    /// Number of physical grid points.
    pub fn points(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    /// Number of stored spectral slots (half-complex along the last axis).
    pub fn spectral_len(&self) -> usize {
        self.n.pow(self.dim as u32 - 1) * (self.n / 2 + 1)
    }

    /// Fundamental wavenumber `2π/L`.
    pub fn fundamental(&self) -> f64 {
        2.0 * PI / self.box_len
    }

    pub fn spacing(&self) -> f64 {
        self.box_len / self.n as f64
    }

    pub fn volume(&self) -> f64 {
        self.box_len.powi(self.dim as i32)
    }

    pub fn cell_volume(&self) -> f64 {
        self.volume() / self.points() as f64
    }

    /// Physical coordinates of a flat point index (unused axes are 0).
    pub fn position(&self, idx: usize) -> [f64; 3] {
        let mut out = [0.0; 3];
        let mut rem = idx;
        for axis in (0..self.dim).rev() {
            out[axis] = (rem % self.n) as f64 * self.spacing();
            rem /= self.n;
        }
        out
    }

    /// Fill a real field from a function of position.
    pub fn sample(&self, f: impl Fn([f64; 3]) -> f64) -> Vec<f64> {
        (0..self.points()).map(|i| f(self.position(i))).collect()
    }

    /// Whether integer mode `m` survives the 2/3-rule mask.
    pub fn keeps(&self, m: &[i64; 3]) -> bool {
        m.iter().all(|&mi| 3 * mi.unsigned_abs() as usize <= self.n)
    }

    /// Largest retained `|k|` after dealiasing.
    pub fn k_max(&self) -> f64 {
        let m = (self.n / 3) as f64;
        self.fundamental() * m * (self.dim as f64).sqrt()
    }
}

/// One stored spectral slot.
#[derive(Debug, Clone, Copy)]
pub struct Mode {
    /// Integer wave indices (unused axes are 0).
    pub m: [i64; 3],
    /// Angular wavevector `2π m / L`.
    pub k: [f64; 3],
    pub k2: f64,
    /// Parseval multiplicity: 2 for slots standing for a conjugate pair, else 1.
    pub weight: f64,
    /// Retained by the 2/3-rule mask.
    pub kept: bool,
}

impl Mode {
    pub fn k_abs(&self) -> f64 {
        self.k2.sqrt()
    }

    pub fn m2(&self) -> i64 {
        self.m.iter().map(|x| x * x).sum()
    }
}

/// Transforms and wave tables for one [`Grid`].
pub struct SpectralGrid {
    grid: Grid,
    half: usize,
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    modes: Vec<Mode>,
}

impl std::fmt::Debug for SpectralGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralGrid").field("grid", &self.grid).finish()
    }
}

fn signed_index(i: usize, n: usize) -> i64 {
    if i <= n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

impl SpectralGrid {
    pub fn new(grid: Grid) -> Result<Self> {
        grid.validate()?;
        let n = grid.n;
        let half = n / 2 + 1;
        let mut rplanner = RealFftPlanner::<f64>::new();
        let mut cplanner = FftPlanner::<f64>::new();
        let kf = grid.fundamental();

        let mut modes = Vec::with_capacity(grid.spectral_len());
        for slot in 0..grid.spectral_len() {
            let mut m = [0i64; 3];
            let mut rem = slot;
            let last = grid.dim - 1;
            m[last] = (rem % half) as i64;
            rem /= half;
            for axis in (0..last).rev() {
                m[axis] = signed_index(rem % n, n);
                rem /= n;
            }
            let k = [kf * m[0] as f64, kf * m[1] as f64, kf * m[2] as f64];
            let k2 = k.iter().map(|x| x * x).sum();
            let lm = m[last];
            let weight = if lm == 0 || lm as usize == n / 2 { 1.0 } else { 2.0 };
            modes.push(Mode {
                m,
                k,
                k2,
                weight,
                kept: grid.keeps(&m),
            });
        }

        Ok(SpectralGrid {
            grid,
            half,
            r2c: rplanner.plan_fft_forward(n),
            c2r: rplanner.plan_fft_inverse(n),
            fwd: cplanner.plan_fft_forward(n),
            inv: cplanner.plan_fft_inverse(n),
            modes,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    /// Stride (in spectral slots) between neighbours along `axis`.
    fn spectral_stride(&self, axis: usize) -> usize {
        let mut stride = 1;
        for a in (axis + 1)..self.grid.dim {
            stride *= if a == self.grid.dim - 1 { self.half } else { self.grid.n };
        }
        stride
    }

    fn c2c_axes(&self, data: &mut [Complex64], forward: bool) {
        let n = self.grid.n;
        let plan = if forward { &self.fwd } else { &self.inv };
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        for axis in 0..self.grid.dim - 1 {
            let stride = self.spectral_stride(axis);
            let block = stride * n;
            for start in (0..data.len()).step_by(block) {
                for offset in 0..stride {
                    let base = start + offset;
                    for (j, z) in line.iter_mut().enumerate() {
                        *z = data[base + j * stride];
                    }
                    plan.process_with_scratch(&mut line, &mut scratch);
                    for (j, z) in line.iter().enumerate() {
                        data[base + j * stride] = *z;
                    }
                }
            }
        }
    }

    /// Forward transform of a real field, normalised by `1/N`.
    pub fn forward(&self, field: &[f64]) -> Vec<Complex64> {
        assert_eq!(field.len(), self.grid.points(), "field/grid size mismatch");
        let n = self.grid.n;
        let rows = field.len() / n;
        let mut out = vec![Complex64::new(0.0, 0.0); self.grid.spectral_len()];
        let mut input = vec![0.0; n];
        let mut scratch = self.r2c.make_scratch_vec();
        for r in 0..rows {
            input.copy_from_slice(&field[r * n..(r + 1) * n]);
            self.r2c
                .process_with_scratch(&mut input, &mut out[r * self.half..(r + 1) * self.half], &mut scratch)
                .expect("r2c buffer sizes");
        }
        self.c2c_axes(&mut out, true);
        let scale = 1.0 / self.grid.points() as f64;
        out.iter_mut().for_each(|z| *z *= scale);
        out
    }

    /// Inverse transform back to a real field.
    pub fn inverse(&self, spectrum: &[Complex64]) -> Vec<f64> {
        assert_eq!(spectrum.len(), self.grid.spectral_len(), "spectrum/grid size mismatch");
        let n = self.grid.n;
        let mut data = spectrum.to_vec();
        self.c2c_axes(&mut data, false);
        let rows = data.len() / self.half;
        let mut out = vec![0.0; self.grid.points()];
        let mut scratch = self.c2r.make_scratch_vec();
        for r in 0..rows {
            let row = &mut data[r * self.half..(r + 1) * self.half];
            // imaginary parts of the real-axis DC and Nyquist slots carry no information
            row[0].im = 0.0;
            row[self.half - 1].im = 0.0;
            self.c2r
                .process_with_scratch(row, &mut out[r * n..(r + 1) * n], &mut scratch)
                .expect("c2r buffer sizes");
        }
        out
    }

    /// Zero every slot outside the 2/3-rule mask.
    pub fn dealias(&self, spectrum: &mut [Complex64]) {
        for (z, mode) in spectrum.iter_mut().zip(&self.modes) {
            if !mode.kept {
                *z = Complex64::new(0.0, 0.0);
            }
        }
    }

    /// Multiply by `i k_axis`.
    pub fn derivative(&self, spectrum: &[Complex64], axis: usize) -> Vec<Complex64> {
        spectrum
            .iter()
            .zip(&self.modes)
            .map(|(z, mode)| z * Complex64::new(0.0, mode.k[axis]))
            .collect()
    }

    /// Apply a real radial Fourier multiplier `m(|k|)`.
    pub fn multiplier(&self, spectrum: &[Complex64], m: impl Fn(f64) -> f64) -> Vec<Complex64> {
        spectrum
            .iter()
            .zip(&self.modes)
            .map(|(z, mode)| z * m(mode.k_abs()))
            .collect()
    }

    /// `∫ |f|² dx` from the spectrum (Parseval).
    pub fn norm2(&self, spectrum: &[Complex64]) -> f64 {
        self.weighted_norm2(spectrum, |_| 1.0)
    }

    /// `∫ |m(|k|) f̂|²` summed over modes, scaled by the box volume.
    pub fn weighted_norm2(&self, spectrum: &[Complex64], m: impl Fn(f64) -> f64) -> f64 {
        let s: f64 = spectrum
            .iter()
            .zip(&self.modes)
            .map(|(z, mode)| {
                let w = m(mode.k_abs());
                mode.weight * w * w * z.norm_sqr()
            })
            .sum();
        s * self.grid.volume()
    }

    /// `∫ |f|² dx` by physical-space quadrature.
    pub fn norm2_physical(&self, field: &[f64]) -> f64 {
        field.iter().map(|x| x * x).sum::<f64>() * self.grid.cell_volume()
    }

    /// Largest violation of `f̂(-k) = conj f̂(k)` inside the self-conjugate
    /// planes of the half-complex layout, relative to the field's norm.
    pub fn hermitian_defect(&self, spectrum: &[Complex64]) -> f64 {
        let norm = self.norm2(spectrum).sqrt() / self.grid.volume().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        let n = self.grid.n as i64;
        let last = self.grid.dim - 1;
        let mut worst: f64 = 0.0;
        for (slot, mode) in self.modes.iter().enumerate() {
            if mode.weight != 1.0 {
                continue;
            }
            let mut neg = [0i64; 3];
            for axis in 0..self.grid.dim {
                neg[axis] = if axis == last { mode.m[axis] } else { -mode.m[axis] };
            }
            let partner = self.slot_of(&neg.map(|x| x.rem_euclid(n)));
            let d = (spectrum[slot] - spectrum[partner].conj()).norm();
            worst = worst.max(d);
        }
        worst / norm
    }

    /// Slot for non-negative per-axis indices.
    pub fn slot_of(&self, idx: &[i64; 3]) -> usize {
        let mut slot = 0usize;
        for axis in 0..self.grid.dim {
            let len = if axis == self.grid.dim - 1 { self.half } else { self.grid.n };
            slot = slot * len + idx[axis] as usize;
        }
        slot
    }

    /// Slot holding integer mode `m`, together with whether the stored
    /// coefficient is the conjugate of the requested one.
    pub fn slot_for_mode(&self, m: &[i64; 3]) -> (usize, bool) {
        let n = self.grid.n as i64;
        let last = self.grid.dim - 1;
        let (mm, conj) = if m[last] < 0 {
            (m.map(|x| -x), true)
        } else {
            (*m, false)
        };
        (self.slot_of(&mm.map(|x| x.rem_euclid(n))), conj)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid::new(3, 12, 1.0).is_err());
        assert!(Grid::new(4, 16, 1.0).is_err());
        assert!(Grid::new(2, 4, 1.0).is_err());
        assert!(Grid::new(2, 16, 0.0).is_err());
        assert!(Grid::new(2, 16, 2.0).is_ok());
    }

    #[test]
    fn single_mode_lands_in_expected_slot() {
        for dim in 1..=3 {
            let grid = Grid::new(dim, 16, 2.0 * PI).unwrap();
            let sg = SpectralGrid::new(grid).unwrap();
            let axis = dim - 1;
            let f = grid.sample(|x| (3.0 * x[axis]).cos());
            let fh = sg.forward(&f);
            let mut m = [0i64; 3];
            m[axis] = 3;
            let (slot, _) = sg.slot_for_mode(&m);
            assert!((fh[slot].re - 0.5).abs() < 1e-13);
            let back = sg.inverse(&fh);
            for (a, b) in f.iter().zip(&back) {
                assert!((a - b).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn parseval_matches_quadrature() {
        let grid = Grid::new(3, 16, 3.0).unwrap();
        let sg = SpectralGrid::new(grid).unwrap();
        let f = grid.sample(|x| (x[0] * 2.1).sin() * (x[1] - 0.3).cos() + x[2].sin().powi(3));
        let fh = sg.forward(&f);
        let a = sg.norm2(&fh);
        let b = sg.norm2_physical(&f);
        assert!(((a - b) / b).abs() < 1e-12);
        assert!(sg.hermitian_defect(&fh) < 1e-14);
    }

    #[test]
    fn derivative_of_sine() {
        let grid = Grid::new(2, 32, 2.0).unwrap();
        let sg = SpectralGrid::new(grid).unwrap();
        let kx = grid.fundamental() * 2.0;
        let f = grid.sample(|x| (kx * x[0]).sin());
        let df = sg.inverse(&sg.derivative(&sg.forward(&f), 0));
        let expect = grid.sample(|x| kx * (kx * x[0]).cos());
        for (a, b) in df.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-11);
        }
    }
}
