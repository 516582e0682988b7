//! Physical parameters, field containers, the diagnostic `V` vector and the
//! quadratic forcing of the first-order system
//!
//! ```text
//! u_t = v,   v_t = w,   τ w_t = Δu + βΔv − w + (B/A) v w + 2 ∇u·∇v
//! ```

use std::io::{BufRead, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, SpectralGrid};

/// Stability classification of a `(τ, β)` pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// `τ < β`: every non-zero mode is damped.
    Dissipative,
    /// `τ = β`: purely oscillatory modes.
    Critical,
    /// `τ > β`: growing modes exist.
    Unstable,
}

/// Constants of the model in the normalisation `c = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Relaxation time.
    pub tau: f64,
    /// Sound diffusivity.
    pub beta: f64,
    /// Sound speed; always 1.
    pub c: f64,
    /// Nonlinearity coefficient `B/A`.
    pub nl_ratio: f64,
    pub nl_enabled: bool,
}

impl ModelParams {
    pub fn new(tau: f64, beta: f64) -> Result<Self> {
        validate_params(ModelParams {
            tau,
            beta,
            c: 1.0,
            nl_ratio: 0.0,
            nl_enabled: false,
        })
    }

    pub fn with_nonlinearity(mut self, nl_ratio: f64) -> Result<Self> {
        if !nl_ratio.is_finite() {
            return Err(Error::param("nl_ratio", "must be finite"));
        }
        self.nl_ratio = nl_ratio;
        self.nl_enabled = true;
        Ok(self)
    }

    pub fn linear(mut self) -> Self {
        self.nl_enabled = false;
        self
    }

    pub fn regime(&self) -> Regime {
        if self.tau < self.beta {
            Regime::Dissipative
        } else if self.tau == self.beta {
            Regime::Critical
        } else {
            Regime::Unstable
        }
    }

    pub fn dissipative_regime(&self) -> bool {
        self.regime() == Regime::Dissipative
    }
}

/// Check a raw parameter set. `τ ≥ β` is accepted and only labelled through
/// [`ModelParams::regime`], so stability sweeps can cross the threshold.
pub fn validate_params(raw: ModelParams) -> Result<ModelParams> {
    if !(raw.tau.is_finite() && raw.tau > 0.0) {
        return Err(Error::param("tau", format!("must be finite and positive, got {}", raw.tau)));
    }
    if !(raw.beta.is_finite() && raw.beta > 0.0) {
        return Err(Error::param("beta", format!("must be finite and positive, got {}", raw.beta)));
    }
    if raw.c != 1.0 {
        return Err(Error::param("c", format!("sound speed is normalised to 1, got {}", raw.c)));
    }
    if !raw.nl_ratio.is_finite() {
        return Err(Error::param("nl_ratio", "must be finite"));
    }
    Ok(raw)
}

/// `(u, v, w) = (u, u_t, u_tt)` on a periodic grid.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub grid: Grid,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub w: Vec<f64>,
    pub t: f64,
}

impl State {
    pub fn zeros(grid: Grid) -> Self {
        let n = grid.points();
        State {
            grid,
            u: vec![0.0; n],
            v: vec![0.0; n],
            w: vec![0.0; n],
            t: 0.0,
        }
    }

    pub fn from_fields(grid: Grid, u: Vec<f64>, v: Vec<f64>, w: Vec<f64>) -> Result<Self> {
        let n = grid.points();
        if u.len() != n || v.len() != n || w.len() != n {
            return Err(Error::domain("state fields must match the grid size"));
        }
        Ok(State { grid, u, v, w, t: 0.0 })
    }

    /// `α·self + other`, used for linearity checks.
    pub fn axpy(&self, alpha: f64, other: &State) -> State {
        let comb = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| alpha * x + y).collect();
        State {
            grid: self.grid,
            u: comb(&self.u, &other.u),
            v: comb(&self.v, &other.v),
            w: comb(&self.w, &other.w),
            t: self.t,
        }
    }

    pub fn scaled(&self, alpha: f64) -> State {
        let sc = |a: &[f64]| a.iter().map(|x| alpha * x).collect();
        State {
            grid: self.grid,
            u: sc(&self.u),
            v: sc(&self.v),
            w: sc(&self.w),
            t: self.t,
        }
    }

    pub fn to_spectral(&self, sg: &SpectralGrid) -> SpectralState {
        SpectralState {
            u: sg.forward(&self.u),
            v: sg.forward(&self.v),
            w: sg.forward(&self.w),
            t: self.t,
        }
    }
}

/// Fourier coefficients of a [`State`].
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralState {
    pub u: Vec<Complex64>,
    pub v: Vec<Complex64>,
    pub w: Vec<Complex64>,
    pub t: f64,
}

impl SpectralState {
    pub fn zeros(len: usize) -> Self {
        let z = vec![Complex64::new(0.0, 0.0); len];
        SpectralState {
            u: z.clone(),
            v: z.clone(),
            w: z,
            t: 0.0,
        }
    }

    pub fn to_physical(&self, sg: &SpectralGrid) -> State {
        State {
            grid: *sg.grid(),
            u: sg.inverse(&self.u),
            v: sg.inverse(&self.v),
            w: sg.inverse(&self.w),
            t: self.t,
        }
    }

    pub fn is_finite(&self) -> bool {
        [&self.u, &self.v, &self.w]
            .iter()
            .all(|f| f.iter().all(|z| z.re.is_finite() && z.im.is_finite()))
    }
}

/// `V = (v + τw, ∇(u + τv), ∇v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct VVector {
    pub a: Vec<f64>,
    pub b: Vec<Vec<f64>>,
    pub c_: Vec<Vec<f64>>,
}

impl VVector {
    pub fn component_count(&self) -> usize {
        1 + self.b.len() + self.c_.len()
    }

    pub fn components(&self) -> impl Iterator<Item = &Vec<f64>> {
        std::iter::once(&self.a).chain(self.b.iter()).chain(self.c_.iter())
    }

    /// `‖V‖²_{L²}` by grid quadrature.
    pub fn norm2_physical(&self, grid: &Grid) -> f64 {
        self.components()
            .map(|f| f.iter().map(|x| x * x).sum::<f64>())
            .sum::<f64>()
            * grid.cell_volume()
    }
}

/// Assemble the `V` vector with spectral gradients.
pub fn assemble_v(state: &State, params: &ModelParams, sg: &SpectralGrid) -> VVector {
    let s = state.to_spectral(sg);
    let tau = params.tau;
    let dim = state.grid.dim;
    let a = state.v.iter().zip(&state.w).map(|(v, w)| v + tau * w).collect();
    let upv: Vec<Complex64> = s.u.iter().zip(&s.v).map(|(u, v)| u + v * tau).collect();
    let b = (0..dim).map(|ax| sg.inverse(&sg.derivative(&upv, ax))).collect();
    let c_ = (0..dim).map(|ax| sg.inverse(&sg.derivative(&s.v, ax))).collect();
    VVector { a, b, c_ }
}

/// `‖V‖²_{L²} = ‖v+τw‖² + ‖∇(u+τv)‖² + ‖∇v‖²` computed in Fourier space.
pub fn v_norm2_spectral(s: &SpectralState, params: &ModelParams, sg: &SpectralGrid) -> f64 {
    let tau = params.tau;
    let sum: f64 = sg
        .modes()
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let a = s.v[i] + s.w[i] * tau;
            let b = s.u[i] + s.v[i] * tau;
            m.weight * (a.norm_sqr() + m.k2 * (b.norm_sqr() + s.v[i].norm_sqr()))
        })
        .sum();
    sum * sg.grid().volume()
}

/// Pointwise `(B/A) v w + 2 ∇u·∇v` from spectral data, transformed back and
/// not yet dealiased.
pub fn forcing_spectrum_raw(s: &SpectralState, params: &ModelParams, sg: &SpectralGrid) -> Vec<Complex64> {
    let grid = sg.grid();
    let mut f = vec![0.0; grid.points()];
    if params.nl_ratio != 0.0 {
        let v = sg.inverse(&s.v);
        let w = sg.inverse(&s.w);
        for ((fi, vi), wi) in f.iter_mut().zip(&v).zip(&w) {
            *fi = params.nl_ratio * vi * wi;
        }
    }
    for axis in 0..grid.dim {
        let du = sg.inverse(&sg.derivative(&s.u, axis));
        let dv = sg.inverse(&sg.derivative(&s.v, axis));
        for ((fi, a), b) in f.iter_mut().zip(&du).zip(&dv) {
            *fi += 2.0 * a * b;
        }
    }
    sg.forward(&f)
}

/// Dealiased forcing spectrum; zero when the nonlinearity is disabled.
pub fn forcing_spectrum(s: &SpectralState, params: &ModelParams, sg: &SpectralGrid) -> Vec<Complex64> {
    if !params.nl_enabled {
        return vec![Complex64::new(0.0, 0.0); sg.grid().spectral_len()];
    }
    let mut fh = forcing_spectrum_raw(s, params, sg);
    sg.dealias(&mut fh);
    fh
}

/// Physical-space forcing `f = (B/A) v w + 2 ∇u·∇v` after the 2/3 rule.
pub fn nonlinear_forcing(state: &State, params: &ModelParams, sg: &SpectralGrid) -> Vec<f64> {
    sg.inverse(&forcing_spectrum(&state.to_spectral(sg), params, sg))
}

/// Header line of a field snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotHeader {
    pub dim: usize,
    pub n: usize,
    pub box_len: f64,
    pub t: f64,
    pub field_name: String,
}

/// Write one field: a JSON header line followed by little-endian `f64`
/// values in row-major order.
pub fn write_snapshot<W: Write>(mut out: W, grid: &Grid, t: f64, field_name: &str, data: &[f64]) -> Result<()> {
    if data.len() != grid.points() {
        return Err(Error::Format(format!(
            "field `{field_name}` has {} values, grid expects {}",
            data.len(),
            grid.points()
        )));
    }
    let header = SnapshotHeader {
        dim: grid.dim,
        n: grid.n,
        box_len: grid.box_len,
        t,
        field_name: field_name.to_string(),
    };
    let line = serde_json::to_string(&header).map_err(|e| Error::Format(e.to_string()))?;
    out.write_all(line.as_bytes())?;
    out.write_all(b"\n")?;
    let mut buf = Vec::with_capacity(data.len() * 8);
    for x in data {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    out.write_all(&buf)?;
    Ok(())
}

pub fn read_snapshot<R: BufRead>(mut input: R) -> Result<(SnapshotHeader, Vec<f64>)> {
    let mut line = String::new();
    input.read_line(&mut line)?;
    let header: SnapshotHeader =
        serde_json::from_str(line.trim_end()).map_err(|e| Error::Format(format!("header: {e}")))?;
    let grid = Grid::new(header.dim, header.n, header.box_len)?;
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    if bytes.len() != grid.points() * 8 {
        return Err(Error::Format(format!(
            "payload has {} bytes, expected {}",
            bytes.len(),
            grid.points() * 8
        )));
    }
    let data = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    Ok((header, data))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn regime_labels() {
        assert_eq!(ModelParams::new(0.5, 1.0).unwrap().regime(), Regime::Dissipative);
        assert_eq!(ModelParams::new(1.0, 1.0).unwrap().regime(), Regime::Critical);
        assert_eq!(ModelParams::new(2.0, 1.0).unwrap().regime(), Regime::Unstable);
    }

    #[test]
    fn rejects_non_positive_or_non_finite() {
        assert!(ModelParams::new(0.0, 1.0).is_err());
        assert!(ModelParams::new(-1.0, 1.0).is_err());
        assert!(ModelParams::new(0.5, f64::NAN).is_err());
        assert!(ModelParams::new(f64::INFINITY, 1.0).is_err());
        let mut p = ModelParams::new(0.5, 1.0).unwrap();
        p.c = 2.0;
        assert!(validate_params(p).is_err());
    }

    #[test]
    fn zero_state_has_zero_v() {
        let grid = Grid::new(2, 16, 1.0).unwrap();
        let sg = SpectralGrid::new(grid).unwrap();
        let p = ModelParams::new(0.5, 1.0).unwrap();
        let v = assemble_v(&State::zeros(grid), &p, &sg);
        assert_eq!(v.component_count(), 5);
        assert_eq!(v.norm2_physical(&grid), 0.0);
    }

    #[test]
    fn single_mode_v_components() {
        let len = 3.0;
        let grid = Grid::new(1, 32, len).unwrap();
        let sg = SpectralGrid::new(grid).unwrap();
        let p = ModelParams::new(0.5, 1.0).unwrap();
        let k = 2.0 * PI / len;
        let mut s = State::zeros(grid);
        s.v = grid.sample(|x| (k * x[0]).sin());
        let vv = assemble_v(&s, &p, &sg);
        for i in 0..grid.points() {
            let x = grid.position(i)[0];
            assert!((vv.a[i] - (k * x).sin()).abs() < 1e-13);
            assert!((vv.b[0][i] - 0.5 * k * (k * x).cos()).abs() < 1e-12);
            assert!((vv.c_[0][i] - k * (k * x).cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_fields_forcing() {
        let grid = Grid::new(3, 8, 1.0).unwrap();
        let sg = SpectralGrid::new(grid).unwrap();
        let p = ModelParams::new(0.5, 1.0).unwrap().with_nonlinearity(3.0).unwrap();
        let mut s = State::zeros(grid);
        s.v = vec![1.0; grid.points()];
        s.w = vec![2.0; grid.points()];
        let f = nonlinear_forcing(&s, &p, &sg);
        assert!(f.iter().all(|x| (x - 6.0).abs() < 1e-12));
    }

    #[test]
    fn vanishing_velocity_gives_zero_forcing() {
        let grid = Grid::new(2, 16, 2.0 * PI).unwrap();
        let sg = SpectralGrid::new(grid).unwrap();
        let p = ModelParams::new(0.5, 1.0).unwrap().with_nonlinearity(5.0).unwrap();
        let mut s = State::zeros(grid);
        s.u = grid.sample(|x| x[0].sin() * x[1].cos());
        s.w = grid.sample(|x| (2.0 * x[1]).sin());
        let f = nonlinear_forcing(&s, &p, &sg);
        assert!(f.iter().all(|x| x.abs() < 1e-13));
    }

    #[test]
    fn product_identity_for_single_mode() {
        // u = v = sin(kx): 2 u_x v_x = k²(1 + cos 2kx), so only modes 0 and 2k appear
        let grid = Grid::new(1, 32, 2.0 * PI).unwrap();
        let sg = SpectralGrid::new(grid).unwrap();
        let p = ModelParams::new(0.5, 1.0).unwrap().with_nonlinearity(1.0).unwrap();
        let k = 3.0;
        let mut s = State::zeros(grid);
        s.u = grid.sample(|x| (k * x[0]).sin());
        s.v = s.u.clone();
        let fh = forcing_spectrum_raw(&s.to_spectral(&sg), &p, &sg);
        for (i, z) in fh.iter().enumerate() {
            let m = sg.modes()[i].m[0];
            let expect = match m {
                0 => k * k,
                6 => 0.5 * k * k,
                _ => 0.0,
            };
            assert!((z.re - expect).abs() < 1e-12 && z.im.abs() < 1e-12, "mode {m}: {z}");
        }
    }

    #[test]
    fn snapshot_roundtrip() {
        let grid = Grid::new(2, 8, 1.5).unwrap();
        let data = grid.sample(|x| x[0] - 2.0 * x[1]);
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &grid, 0.25, "u", &data).unwrap();
        let first_line = buf.split(|&b| b == b'\n').next().unwrap();
        let header: serde_json::Value = serde_json::from_slice(first_line).unwrap();
        assert_eq!(header["field_name"], "u");
        assert_eq!(buf.len(), first_line.len() + 1 + 64 * 8);
        let (h, back) = read_snapshot(std::io::Cursor::new(buf)).unwrap();
        assert_eq!(h.n, 8);
        assert_eq!(back, data);
    }
}
