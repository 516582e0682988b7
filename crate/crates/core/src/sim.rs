//! Dealiased pseudo-spectral integration of the nonlinear system on a
//! periodic box.
//!
//! The state is kept in Fourier space. Each step is Lawson exponential RK4:
//! the linear flow is advanced exactly by the per-mode propagator and the
//! forcing `(0, 0, f/τ)` enters through classical RK4 stages.
//!
//! Algebraic whole-space decay rates are not expected here: on the torus
//! every non-mean mode sits above a spectral gap and decays exponentially.

use std::collections::HashMap;

use nalgebra::Matrix3;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, SpectralGrid};
use crate::lp::{BesovEvaluator, DyadicPartition, NormSeries};
use crate::modal::{symbol_matrix, ModeEigensystem};
use crate::model::{forcing_spectrum, ModelParams, SpectralState, State};

pub const TORUS_CAVEAT: &str = "periodic box: non-mean modes decay exponentially past the spectral gap, \
so whole-space algebraic rates are not expected";
/// Divergence is declared when `‖U‖²_𝓛²` exceeds this multiple of its
/// initial value.
pub const DIVERGENCE_FACTOR: f64 = 1e6;
const DT_SAFETY: f64 = 0.8;

/// Largest admissible step: `0.8·min(τ/2, 0.5/(β k_max²))`.
pub fn dt_max(grid: &Grid, params: &ModelParams) -> f64 {
    let k = grid.k_max();
    DT_SAFETY * (0.5 * params.tau).min(0.5 / (params.beta * k * k))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum InitialFamily {
    /// `u = v = ε e^{−|x−c|²/(2σ²)}`, `w = 0`, centred in the box.
    GaussianBump { width: f64 },
    /// `u = ε cos(k_m·x)` for the lattice vector `m`.
    SingleMode { mode: [i64; 3] },
    /// Random phases on the shells `m_lo ≤ |m| ≤ m_hi`, all three fields.
    RandomBand { m_lo: f64, m_hi: f64 },
}

impl InitialFamily {
    pub fn parse(name: &str, grid: &Grid) -> Result<Self> {
        match name {
            "gaussian-bump" => Ok(InitialFamily::GaussianBump { width: grid.box_len / 16.0 }),
            "single-mode" => Ok(InitialFamily::SingleMode { mode: [1, 0, 0] }),
            "random-band" => Ok(InitialFamily::RandomBand { m_lo: 1.0, m_hi: (grid.n / 8) as f64 }),
            other => Err(Error::Config(format!(
                "unknown initial family {other:?} (gaussian-bump, single-mode, random-band)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialSpec {
    pub family: InitialFamily,
    pub amplitude: f64,
    pub seed: u64,
}

/// Built-in initial data; the result is dealiased.
pub fn make_initial(spec: &InitialSpec, sg: &SpectralGrid) -> Result<State> {
    let grid = *sg.grid();
    let eps = spec.amplitude;
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::Config(format!("amplitude must be finite and >= 0, got {eps}")));
    }
    let (u, v, w) = match spec.family {
        InitialFamily::GaussianBump { width } => {
            if !(width > 0.0) {
                return Err(Error::Config("gaussian width must be positive".into()));
            }
            let c = 0.5 * grid.box_len;
            let g = grid.sample(|x| {
                let r2: f64 = x[..grid.dim].iter().map(|xi| (xi - c).powi(2)).sum();
                eps * (-r2 / (2.0 * width * width)).exp()
            });
            (g.clone(), g, vec![0.0; grid.points()])
        }
        InitialFamily::SingleMode { mode } => {
            if !grid.keeps(&mode) {
                return Err(Error::Config(format!("mode {mode:?} is removed by dealiasing")));
            }
            let k0 = grid.fundamental();
            let u = grid.sample(|x| {
                let phase: f64 = (0..grid.dim).map(|a| mode[a] as f64 * k0 * x[a]).sum();
                eps * phase.cos()
            });
            (u, vec![0.0; grid.points()], vec![0.0; grid.points()])
        }
        InitialFamily::RandomBand { m_lo, m_hi } => {
            if !(m_hi >= m_lo && m_lo >= 0.0) {
                return Err(Error::Config("random band needs 0 <= m_lo <= m_hi".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            let k0 = grid.fundamental();
            let mut fields = Vec::with_capacity(3);
            for _ in 0..3 {
                let spec_raw: Vec<Complex64> = sg
                    .modes()
                    .iter()
                    .map(|m| {
                        let r = m.k_abs() / k0;
                        let a: f64 = rng.random::<f64>() - 0.5;
                        let b: f64 = rng.random::<f64>() - 0.5;
                        if m.kept && r >= m_lo && r <= m_hi && r > 0.0 {
                            Complex64::new(a, b)
                        } else {
                            Complex64::new(0.0, 0.0)
                        }
                    })
                    .collect();
                // a round trip through physical space restores exact Hermitian symmetry
                let mut f = sg.forward(&sg.inverse(&spec_raw));
                let band = |k: f64| {
                    let r = k / k0;
                    if r >= m_lo && r <= m_hi && r > 0.0 {
                        1.0
                    } else {
                        0.0
                    }
                };
                f = sg.multiplier(&f, band);
                sg.dealias(&mut f);
                let phys = sg.inverse(&f);
                let peak = phys.iter().fold(0.0f64, |m, x| m.max(x.abs()));
                let scale = if peak > 0.0 { eps / peak } else { 0.0 };
                fields.push(phys.into_iter().map(|x| x * scale).collect::<Vec<f64>>());
            }
            let w = fields.pop().expect("three fields");
            let v = fields.pop().expect("three fields");
            let u = fields.pop().expect("three fields");
            (u, v, w)
        }
    };
    let mut s = State::from_fields(grid, u, v, w)?.to_spectral(sg);
    for f in [&mut s.u, &mut s.v, &mut s.w] {
        sg.dealias(f);
    }
    Ok(s.to_physical(sg))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub grid: Grid,
    pub params: ModelParams,
    pub dt: f64,
    pub t_end: f64,
    pub initial: InitialSpec,
    /// Steps between energy reports.
    pub report_stride: usize,
    /// Track the Chemin–Lerner block functional and `M₀`.
    pub track_besov: bool,
    /// Keep the spectral state at every report (for Duhamel checks).
    pub keep_snapshots: bool,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        crate::model::validate_params(self.params)?;
        let limit = dt_max(&self.grid, &self.params);
        if !(self.dt > 0.0) {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if self.dt > limit * (1.0 + 1e-12) {
            return Err(Error::Config(format!(
                "dt = {} exceeds the stability limit {limit}",
                self.dt
            )));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::Config("t_end must be finite and >= 0".into()));
        }
        if self.report_stride == 0 {
            return Err(Error::Config("report stride must be at least 1".into()));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt - 1e-9).ceil().max(0.0) as usize
    }
}

/// Propagators `e^{hΦ}` and `e^{hΦ/2}` per distinct `|m|²`.
#[derive(Debug, Clone)]
struct PropagatorCache {
    index: Vec<u32>,
    full: Vec<Matrix3<f64>>,
    half: Vec<Matrix3<f64>>,
}

fn mode_classes(sg: &SpectralGrid) -> (Vec<u32>, Vec<i64>) {
    let mut ids: HashMap<i64, u32> = HashMap::new();
    let mut m2s = Vec::new();
    let index = sg
        .modes()
        .iter()
        .map(|m| {
            let m2 = m.m2();
            *ids.entry(m2).or_insert_with(|| {
                m2s.push(m2);
                (m2s.len() - 1) as u32
            })
        })
        .collect();
    (index, m2s)
}

impl PropagatorCache {
    fn new(sg: &SpectralGrid, params: &ModelParams, dt: f64) -> Result<Self> {
        let (index, m2s) = mode_classes(sg);
        let k0 = sg.grid().fundamental();
        let pairs: Vec<(Matrix3<f64>, Matrix3<f64>)> = m2s
            .par_iter()
            .map(|&m2| {
                let sys = ModeEigensystem::new(symbol_matrix(k0 * k0 * m2 as f64, params)?);
                Ok((sys.propagator(dt)?.matrix, sys.propagator(0.5 * dt)?.matrix))
            })
            .collect::<Result<_>>()?;
        let (full, half) = pairs.into_iter().unzip();
        Ok(PropagatorCache { index, full, half })
    }
}

/// `y ← M y` mode by mode.
fn apply_modewise(index: &[u32], mats: &[Matrix3<f64>], kept: &[bool], s: &mut SpectralState) {
    (&mut s.u[..], &mut s.v[..], &mut s.w[..])
        .into_par_iter()
        .zip(index.par_iter())
        .zip(kept.par_iter())
        .for_each(|(((u, v, w), &c), &keep)| {
            if !keep {
                *u = Complex64::new(0.0, 0.0);
                *v = Complex64::new(0.0, 0.0);
                *w = Complex64::new(0.0, 0.0);
                return;
            }
            let m = &mats[c as usize];
            let (a, b, d) = (*u, *v, *w);
            *u = a * m[(0, 0)] + b * m[(0, 1)] + d * m[(0, 2)];
            *v = a * m[(1, 0)] + b * m[(1, 1)] + d * m[(1, 2)];
            *w = a * m[(2, 0)] + b * m[(2, 1)] + d * m[(2, 2)];
        });
}

/// `y ← y + α M (0, 0, g)`: the forcing enters only the third component.
fn add_forcing(index: &[u32], mats: Option<&[Matrix3<f64>]>, alpha: f64, g: &[Complex64], s: &mut SpectralState) {
    (&mut s.u[..], &mut s.v[..], &mut s.w[..])
        .into_par_iter()
        .zip(index.par_iter())
        .zip(g.par_iter())
        .for_each(|(((u, v, w), &c), &gi)| {
            let z = gi * alpha;
            match mats {
                Some(m) => {
                    let m = &m[c as usize];
                    *u += z * m[(0, 2)];
                    *v += z * m[(1, 2)];
                    *w += z * m[(2, 2)];
                }
                None => *w += z,
            }
        });
}

/// Seven energy terms, five dissipation terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Functionals {
    /// `‖v+τw‖², ‖∇(v+τw)‖², ‖Δv‖², ‖∇v‖², ‖Δ(u+τv)‖², ‖∇(u+τv)‖², ‖w‖²`.
    pub energy_terms: [f64; 7],
    /// `‖∇v‖², ‖Δv‖², ‖w‖², ‖Δ(u+τv)‖², ‖∇(v+τw)‖²`.
    pub dissipation_terms: [f64; 5],
}

impl Functionals {
    pub fn energy2(&self) -> f64 {
        self.energy_terms.iter().sum()
    }

    pub fn dissipation2(&self) -> f64 {
        self.dissipation_terms.iter().sum()
    }
}

pub fn functionals(s: &SpectralState, params: &ModelParams, sg: &SpectralGrid) -> Functionals {
    let tau = params.tau;
    let mut e = [0.0; 7];
    for (i, m) in sg.modes().iter().enumerate() {
        let (u, v, w) = (s.u[i], s.v[i], s.w[i]);
        let a = (v + w * tau).norm_sqr();
        let b = (u + v * tau).norm_sqr();
        let vv = v.norm_sqr();
        let (k2, k4) = (m.k2, m.k2 * m.k2);
        let wt = m.weight;
        e[0] += wt * a;
        e[1] += wt * k2 * a;
        e[2] += wt * k4 * vv;
        e[3] += wt * k2 * vv;
        e[4] += wt * k4 * b;
        e[5] += wt * k2 * b;
        e[6] += wt * w.norm_sqr();
    }
    let vol = sg.grid().volume();
    let energy_terms = e.map(|x| x * vol);
    let [_, e1, e2, e3, e4, _, e6] = energy_terms;
    Functionals {
        energy_terms,
        dissipation_terms: [e3, e2, e6, e4, e1],
    }
}

/// `‖v‖∞ + ‖v+τw‖∞ + ‖∇(u+τv)‖∞ + ‖∇u‖∞ + ‖∇v‖∞` with vector norms taken
/// pointwise in the Euclidean sense.
pub fn m0_instant(s: &SpectralState, params: &ModelParams, sg: &SpectralGrid) -> f64 {
    let dim = sg.grid().dim;
    let sup = |f: &[f64]| f.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let grad_sup = |spec: &[Complex64]| {
        let comps: Vec<Vec<f64>> = (0..dim).map(|a| sg.inverse(&sg.derivative(spec, a))).collect();
        (0..comps[0].len())
            .map(|i| comps.iter().map(|c| c[i] * c[i]).sum::<f64>().sqrt())
            .fold(0.0f64, f64::max)
    };
    let tau = params.tau;
    let a: Vec<Complex64> = s.v.iter().zip(&s.w).map(|(v, w)| v + w * tau).collect();
    let b: Vec<Complex64> = s.u.iter().zip(&s.v).map(|(u, v)| u + v * tau).collect();
    sup(&sg.inverse(&s.v)) + sup(&sg.inverse(&a)) + grad_sup(&b) + grad_sup(&s.u) + grad_sup(&s.v)
}

/// Blockwise running maxima for the `L̃^∞_t(Ḃ^s_{2,1})` terms.
#[derive(Debug, Clone)]
struct CheminTracker {
    evaluator: BesovEvaluator,
    /// `(label, field index 0/1/2, derivative order, s)`.
    terms: Vec<(&'static str, usize, i32, f64)>,
    maxima: Vec<Vec<f64>>,
}

impl CheminTracker {
    fn new(sg: &SpectralGrid) -> Result<Self> {
        let k: Vec<f64> = sg.modes().iter().map(|m| m.k_abs()).collect();
        let evaluator = BesovEvaluator::covering(&k, true)?;
        let terms = vec![
            ("grad2_u_B1/2", 0, 2, 0.5),
            ("grad2_u_B3/2", 0, 2, 1.5),
            ("v_B1/2", 1, 0, 0.5),
            ("grad_v_B1/2", 1, 1, 0.5),
            ("grad2_v_B1/2", 1, 2, 0.5),
            ("w_B1/2", 2, 0, 0.5),
            ("grad_w_B1/2", 2, 1, 0.5),
        ];
        let nb = evaluator.block_indices().len();
        let maxima = vec![vec![0.0; nb]; terms.len()];
        Ok(CheminTracker { evaluator, terms, maxima })
    }

    fn update(&mut self, s: &SpectralState, sg: &SpectralGrid) {
        let vol = sg.grid().volume();
        for (j, &(_, field, order, _)) in self.terms.iter().enumerate() {
            let f = match field {
                0 => &s.u,
                1 => &s.v,
                _ => &s.w,
            };
            let mass: Vec<f64> = sg
                .modes()
                .iter()
                .zip(f)
                .map(|(m, z)| vol * m.weight * m.k2.powi(order) * z.norm_sqr())
                .collect();
            for (mx, b) in self.maxima[j].iter_mut().zip(self.evaluator.block_norms(&mass)) {
                *mx = mx.max(b);
            }
        }
    }

    fn values(&self) -> Vec<(String, f64)> {
        let qs = self.evaluator.block_indices();
        self.terms
            .iter()
            .zip(&self.maxima)
            .map(|(&(label, _, _, s), mx)| {
                let v = qs.iter().zip(mx).map(|(&q, b)| 2f64.powf(q as f64 * s) * b).sum();
                (label.to_string(), v)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyReport {
    pub t: f64,
    /// `‖U(t)‖²_𝓛²`.
    pub energy2: f64,
    pub energy_terms: [f64; 7],
    /// `ℰ²(t) = sup_{σ≤t} ‖U(σ)‖²_𝓛²`.
    pub cal_e2: f64,
    /// `‖U(t)‖²_𝕃²`.
    pub cal_d2_integrand: f64,
    pub dissipation_terms: [f64; 5],
    /// `𝒟²(t) = ∫₀ᵗ ‖U‖²_𝕃²`.
    pub cal_d2_cum: f64,
    /// Running supremum of the `L^∞` sum.
    pub m0: f64,
    /// `L̃^∞_t(Ḃ^s_{2,1})` terms and their total `M(t)`.
    pub besov_terms: Vec<(String, f64)>,
    /// Smallest `C` with `ℰ²+𝒟² ≤ ℰ²(0) + C(ℰ+M₀)𝒟²` up to `t`.
    pub fitted_c: f64,
}

/// Spectral snapshots at uniform spacing.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<SpectralState>,
}

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub reports: Vec<EnergyReport>,
    pub final_state: SpectralState,
    pub steps: usize,
    /// `sup_t ℰ(t) / ℰ(0)` (square roots of the quadratic functionals).
    pub sup_energy_ratio: f64,
    pub trajectory: Option<Trajectory>,
    pub caveat: &'static str,
}

impl RunRecord {
    /// `(max − min)/max` of the fitted constant over reports with `t ≥ T/2`.
    pub fn c_variation_last_half(&self) -> f64 {
        let Some(last) = self.reports.last() else {
            return 0.0;
        };
        let half = 0.5 * last.t;
        let cs: Vec<f64> = self.reports.iter().filter(|r| r.t >= half).map(|r| r.fitted_c).collect();
        let mx = cs.iter().copied().fold(0.0, f64::max);
        let mn = cs.iter().copied().fold(f64::INFINITY, f64::min);
        if mx == 0.0 {
            0.0
        } else {
            (mx - mn) / mx
        }
    }

    pub fn norm_series(&self) -> Result<Vec<NormSeries>> {
        let t: Vec<f64> = self.reports.iter().map(|r| r.t).collect();
        let col = |f: &dyn Fn(&EnergyReport) -> f64, label: &str| {
            NormSeries::new(t.clone(), self.reports.iter().map(f).collect(), label)
        };
        Ok(vec![
            col(&|r| r.energy2, "energy2")?,
            col(&|r| r.cal_e2, "cal_E2")?,
            col(&|r| r.cal_d2_cum, "cal_D2")?,
            col(&|r| r.m0, "M0")?,
            col(&|r| r.fitted_c, "fitted_C")?,
        ])
    }
}

/// Stepper with cached propagators for one `(grid, params, dt)`.
pub struct Simulator {
    pub sg: SpectralGrid,
    pub params: ModelParams,
    pub dt: f64,
    cache: PropagatorCache,
    kept: Vec<bool>,
}

impl Simulator {
    pub fn new(grid: Grid, params: ModelParams, dt: f64) -> Result<Self> {
        let sg = SpectralGrid::new(grid)?;
        Self::with_spectral_grid(sg, params, dt)
    }

    pub fn with_spectral_grid(sg: SpectralGrid, params: ModelParams, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::domain(format!("dt must be positive, got {dt}")));
        }
        let cache = PropagatorCache::new(&sg, &params, dt)?;
        let kept = sg.modes().iter().map(|m| m.kept).collect();
        Ok(Simulator { sg, params, dt, cache, kept })
    }

    /// `(0, 0, f̂/τ)` reduced to its third component.
    fn forcing(&self, s: &SpectralState) -> Option<Vec<Complex64>> {
        if !self.params.nl_enabled {
            return None;
        }
        let inv_tau = 1.0 / self.params.tau;
        let mut f = forcing_spectrum(s, &self.params, &self.sg);
        f.iter_mut().for_each(|z| *z *= inv_tau);
        Some(f)
    }

    fn propagate(&self, s: &mut SpectralState, half: bool) {
        let mats = if half { &self.cache.half } else { &self.cache.full };
        apply_modewise(&self.cache.index, mats, &self.kept, s);
    }

    /// One Lawson RK4 step.
    pub fn step(&self, s: &SpectralState) -> Result<SpectralState> {
        let dt = self.dt;
        let idx = &self.cache.index;
        let (full, half) = (&self.cache.full[..], &self.cache.half[..]);
        let mut out = s.clone();
        self.propagate(&mut out, false);
        out.t = s.t + dt;
        if let Some(k1) = self.forcing(s) {
            let mut a = s.clone();
            add_forcing(idx, None, 0.5 * dt, &k1, &mut a);
            self.propagate(&mut a, true);
            let k2 = self.forcing(&a).expect("enabled");
            let mut b = s.clone();
            self.propagate(&mut b, true);
            add_forcing(idx, None, 0.5 * dt, &k2, &mut b);
            let k3 = self.forcing(&b).expect("enabled");
            let mut c = s.clone();
            self.propagate(&mut c, false);
            add_forcing(idx, Some(half), dt, &k3, &mut c);
            let k4 = self.forcing(&c).expect("enabled");
            add_forcing(idx, Some(full), dt / 6.0, &k1, &mut out);
            let k23: Vec<Complex64> = k2.iter().zip(&k3).map(|(x, y)| x + y).collect();
            add_forcing(idx, Some(half), dt / 3.0, &k23, &mut out);
            add_forcing(idx, None, dt / 6.0, &k4, &mut out);
        }
        if !out.is_finite() {
            return Err(Error::Divergence {
                t: out.t,
                reason: "non-finite Fourier coefficient".into(),
                last_energy: functionals(s, &self.params, &self.sg).energy2(),
            });
        }
        Ok(out)
    }

    /// Advance `steps` steps without diagnostics.
    pub fn advance(&self, s: &SpectralState, steps: usize) -> Result<SpectralState> {
        let mut cur = s.clone();
        for _ in 0..steps {
            cur = self.step(&cur)?;
        }
        Ok(cur)
    }

    pub fn functionals(&self, s: &SpectralState) -> Functionals {
        functionals(s, &self.params, &self.sg)
    }
}

/// Run a configured simulation with energy reports every `report_stride`
/// steps.
pub fn run(cfg: &SimConfig) -> Result<RunRecord> {
    cfg.validate()?;
    let sim = Simulator::new(cfg.grid, cfg.params, cfg.dt)?;
    let initial = make_initial(&cfg.initial, &sim.sg)?.to_spectral(&sim.sg);
    run_from(&sim, initial, cfg.steps(), cfg.report_stride, cfg.track_besov, cfg.keep_snapshots)
}

pub fn run_from(
    sim: &Simulator,
    initial: SpectralState,
    steps: usize,
    report_stride: usize,
    track_besov: bool,
    keep_snapshots: bool,
) -> Result<RunRecord> {
    run_observed(sim, initial, steps, report_stride, track_besov, keep_snapshots, &mut |_, _| Ok(()))
}

/// Like [`run_from`], calling `observer` with the state and its report at
/// every report time (including `t = 0`).
pub fn run_observed(
    sim: &Simulator,
    initial: SpectralState,
    steps: usize,
    report_stride: usize,
    track_besov: bool,
    keep_snapshots: bool,
    observer: &mut dyn FnMut(&SpectralState, &EnergyReport) -> Result<()>,
) -> Result<RunRecord> {
    let sg = &sim.sg;
    let params = &sim.params;
    let mut tracker = if track_besov { Some(CheminTracker::new(sg)?) } else { None };
    let mut state = initial;
    let f0 = sim.functionals(&state);
    let e2_0 = f0.energy2();
    let mut cal_e2 = e2_0;
    let mut d2_cum = 0.0;
    let mut prev_d = f0.dissipation2();
    let mut m0 = if track_besov { m0_instant(&state, params, sg) } else { 0.0 };
    let mut fitted_c: f64 = 0.0;
    let mut reports = Vec::new();
    let mut snaps = keep_snapshots.then(|| Trajectory { times: Vec::new(), states: Vec::new() });

    let report = |state: &SpectralState, f: &Functionals, cal_e2: f64, d2_cum: f64, m0: f64, fitted_c: f64, tracker: &mut Option<CheminTracker>| {
        let besov_terms = match tracker {
            Some(tr) => {
                tr.update(state, sg);
                let mut v = tr.values();
                let total = v.iter().map(|x| x.1).sum();
                v.push(("M".to_string(), total));
                v
            }
            None => Vec::new(),
        };
        EnergyReport {
            t: state.t,
            energy2: f.energy2(),
            energy_terms: f.energy_terms,
            cal_e2,
            cal_d2_integrand: f.dissipation2(),
            dissipation_terms: f.dissipation_terms,
            cal_d2_cum: d2_cum,
            m0,
            besov_terms,
            fitted_c,
        }
    };

    reports.push(report(&state, &f0, cal_e2, d2_cum, m0, fitted_c, &mut tracker));
    observer(&state, reports.last().expect("just pushed"))?;
    if let Some(tr) = snaps.as_mut() {
        tr.times.push(state.t);
        tr.states.push(state.clone());
    }
    for n in 1..=steps {
        let next = sim.step(&state)?;
        let f = sim.functionals(&next);
        let e2 = f.energy2();
        if !e2.is_finite() || (e2_0 > 0.0 && e2 > DIVERGENCE_FACTOR * e2_0) {
            return Err(Error::Divergence {
                t: next.t,
                reason: format!("energy grew to {e2:e} from {e2_0:e}"),
                last_energy: cal_e2,
            });
        }
        let d = f.dissipation2();
        d2_cum += 0.5 * sim.dt * (prev_d + d);
        prev_d = d;
        cal_e2 = cal_e2.max(e2);
        state = next;
        let at_report = n % report_stride == 0 || n == steps;
        if at_report && track_besov {
            m0 = m0.max(m0_instant(&state, params, sg));
        }
        if d2_cum > 0.0 {
            let num = cal_e2 + d2_cum - e2_0;
            if num > 0.0 {
                let c = num / ((cal_e2.sqrt() + m0) * d2_cum);
                if c.is_finite() {
                    fitted_c = fitted_c.max(c);
                }
            }
        }
        if at_report {
            reports.push(report(&state, &f, cal_e2, d2_cum, m0, fitted_c, &mut tracker));
            observer(&state, reports.last().expect("just pushed"))?;
            if let Some(tr) = snaps.as_mut() {
                tr.times.push(state.t);
                tr.states.push(state.clone());
            }
        }
    }
    let sup_energy_ratio = if e2_0 > 0.0 { (cal_e2 / e2_0).sqrt() } else { 0.0 };
    Ok(RunRecord {
        reports,
        final_state: state,
        steps,
        sup_energy_ratio,
        trajectory: snaps,
        caveat: TORUS_CAVEAT,
    })
}

/// `‖U‖_{𝓑^s_{2,1}} = ‖U‖_𝓛² + (Σ_c ‖c‖²_{Ḃ^s_{2,1}})^{1/2}` over the seven
/// energy components.
pub fn calb_norm(s: &SpectralState, params: &ModelParams, sg: &SpectralGrid, sreg: f64) -> Result<f64> {
    let k: Vec<f64> = sg.modes().iter().map(|m| m.k_abs()).collect();
    let ev = BesovEvaluator::covering(&k, true)?;
    let tau = params.tau;
    let vol = sg.grid().volume();
    let a: Vec<Complex64> = s.v.iter().zip(&s.w).map(|(v, w)| v + w * tau).collect();
    let b: Vec<Complex64> = s.u.iter().zip(&s.v).map(|(u, v)| u + v * tau).collect();
    let comps: [(&[Complex64], i32); 7] = [(&a, 0), (&a, 1), (&s.v, 2), (&s.v, 1), (&b, 2), (&b, 1), (&s.w, 0)];
    let mut sum2 = 0.0;
    for (f, order) in comps {
        let mass: Vec<f64> = sg
            .modes()
            .iter()
            .zip(f)
            .map(|(m, z)| vol * m.weight * m.k2.powi(order) * z.norm_sqr())
            .collect();
        let n = ev.norm(&mass, sreg, crate::lp::SumExponent::One).value;
        sum2 += n * n;
    }
    Ok(functionals(s, params, sg).energy2().sqrt() + sum2.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DuhamelResidual {
    /// `‖Δ_qΛ^ℓ(U − U_rec)‖ / ‖Δ_qΛ^ℓ U‖` at the final snapshot.
    pub residual: f64,
    pub lhs_norm: f64,
    pub snapshots: usize,
    /// Fewer than 3 snapshots make the trapezoid estimate unreliable.
    pub sparse: bool,
}

/// Compare the final snapshot with `e^{TΦ}U₀ + ∫₀ᵀ e^{(T−r)Φ} F(r) dr`, the
/// integral by the trapezoid rule over the recorded snapshots. `q = None`
/// skips the block filter; otherwise `Δ_q` is inhomogeneous (`q ≥ −1`).
pub fn duhamel_residual(sim: &Simulator, traj: &Trajectory, q: Option<i32>, ell: f64) -> Result<DuhamelResidual> {
    let m = traj.states.len();
    if m < 2 || traj.times.len() != m {
        return Err(Error::domain("trajectory needs at least two snapshots"));
    }
    let h = traj.times[1] - traj.times[0];
    if traj.times.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * h) {
        return Err(Error::domain("snapshots must be uniformly spaced"));
    }
    let sg = &sim.sg;
    let t0 = traj.times[0];
    let t_end = traj.times[m - 1];
    let (index, m2s) = mode_classes(sg);
    let k0 = sg.grid().fundamental();
    let systems: Vec<ModeEigensystem> = m2s
        .iter()
        .map(|&m2| ModeEigensystem::for_params(k0 * k0 * m2 as f64, &sim.params))
        .collect::<Result<_>>()?;
    let props_at = |t: f64| -> Result<Vec<Matrix3<f64>>> {
        systems.iter().map(|s| Ok(s.propagator(t)?.matrix)).collect()
    };
    let mut rec = traj.states[0].clone();
    apply_modewise(&index, &props_at(t_end - t0)?, &sim.kept, &mut rec);
    if sim.params.nl_enabled {
        for (j, (t, s)) in traj.times.iter().zip(&traj.states).enumerate() {
            let wgt = if j == 0 || j == m - 1 { 0.5 * h } else { h };
            let g = sim.forcing(s).expect("enabled");
            add_forcing(&index, Some(&props_at(t_end - t)?), wgt, &g, &mut rec);
        }
    }
    let partition = match q {
        Some(q) => {
            let qmax = (sg.grid().k_max().log2().floor() as i32).max(q).max(0);
            let p = DyadicPartition { q_min: -1, q_max: qmax };
            p.check_block(q, false)?;
            Some((p, q))
        }
        None => None,
    };
    let filt = |k: f64| -> f64 {
        let block = match &partition {
            Some((p, q)) => p.block_multiplier(*q, false).expect("checked")(k),
            None => 1.0,
        };
        let lam = if ell == 0.0 { 1.0 } else if k == 0.0 { 0.0 } else { k.powf(ell) };
        block * lam
    };
    let sim_final = &traj.states[m - 1];
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, md) in sg.modes().iter().enumerate() {
        let f = filt(md.k_abs());
        if f == 0.0 {
            continue;
        }
        let w = md.weight * f * f;
        for (a, b) in [(sim_final.u[i], rec.u[i]), (sim_final.v[i], rec.v[i]), (sim_final.w[i], rec.w[i])] {
            num += w * (a - b).norm_sqr();
            den += w * a.norm_sqr();
        }
    }
    let residual = if den == 0.0 {
        if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (num / den).sqrt()
    };
    Ok(DuhamelResidual {
        residual,
        lhs_norm: (den * sg.grid().volume()).sqrt(),
        snapshots: m,
        sparse: m < 3,
    })
}
