//! Whole-space linear decay measured by exact radial evolution in `ℝ³`.
//!
//! Radially symmetric data reduce every `L²`-based norm to a one-dimensional
//! integral in `|ξ|`, and each node evolves exactly under `e^{tΦ(|ξ|)}`, so
//! the only discretisation is the frequency quadrature.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::lp::{radial_weights, BesovEvaluator, BesovNorm, DyadicPartition, NormSeries, SumExponent, ANNULUS_OUTER};
use crate::modal::{spectral_abscissa_profile, default_xi_grid, v_hat_norm2, ModeEigensystem, ModeVector};
use crate::model::ModelParams;
use crate::util::{linear_fit, log_space};

pub const RADIAL_DIM: usize = 3;
pub const DEFAULT_K_NODES: usize = 4096;
pub const DEFAULT_K_MIN: f64 = 1e-4;
pub const DEFAULT_K_MAX: f64 = 1e2;
pub const DEFAULT_WINDOW: (f64, f64) = (1e2, 1e4);
/// Largest admissible `|c|·h/|b|` for a log-log fit `a + b x + c x²`
/// centred on the window of half-width `h`.
pub const CURVATURE_LIMIT: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    pub k_nodes: Vec<f64>,
    /// `(û, v̂, ŵ)` at each node.
    pub modes: Vec<ModeVector>,
    pub dim: usize,
    pub t: f64,
}

impl RadialProfile {
    pub fn new(k_nodes: Vec<f64>, modes: Vec<ModeVector>) -> Result<Self> {
        if k_nodes.len() != modes.len() || k_nodes.len() < 2 {
            return Err(Error::domain("profile needs at least two nodes and one triple per node"));
        }
        if k_nodes[0] <= 0.0 || k_nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::domain("nodes must be positive and strictly increasing"));
        }
        if modes.iter().flatten().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::domain("profile values must be finite"));
        }
        Ok(RadialProfile { k_nodes, modes, dim: RADIAL_DIM, t: 0.0 })
    }

    pub fn from_family(family: &DataFamily, k_nodes: Vec<f64>) -> Result<Self> {
        let modes = k_nodes.iter().map(|&k| family.triple(k)).collect();
        Self::new(k_nodes, modes)
    }

    /// `|V̂|²` per node.
    pub fn v_power(&self, tau: f64) -> Vec<f64> {
        self.k_nodes
            .iter()
            .zip(&self.modes)
            .map(|(&k, m)| v_hat_norm2(m, k * k, tau))
            .collect()
    }

    pub fn w_power(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m[2].norm_sqr()).collect()
    }
}

/// Built-in radial data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum DataFamily {
    /// `û₀ = v̂₀ = ŵ₀ = e^{−|ξ|²/2}`.
    Gaussian,
    /// `|ξ|^a e^{−|ξ|²/2}` in every component.
    PowerGaussian { a: f64 },
    /// `ŵ₀ = 1`, `û₀ = v̂₀ = 0`, on a thin shell next to the origin.
    WOnly,
}

impl DataFamily {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "gaussian" => Ok(DataFamily::Gaussian),
            "w-only" => Ok(DataFamily::WOnly),
            other => match other.strip_prefix("power-gaussian:") {
                Some(a) => a
                    .parse::<f64>()
                    .ok()
                    .filter(|a| *a >= 0.0)
                    .map(|a| DataFamily::PowerGaussian { a })
                    .ok_or_else(|| Error::Config(format!("bad power-gaussian exponent {a:?}"))),
                None => Err(Error::Config(format!(
                    "unknown data family {other:?} (gaussian, power-gaussian:<a>, w-only)"
                ))),
            },
        }
    }

    pub fn triple(&self, k: f64) -> ModeVector {
        let c = |x: f64| Complex64::new(x, 0.0);
        match *self {
            DataFamily::Gaussian => {
                let g = (-0.5 * k * k).exp();
                [c(g); 3]
            }
            DataFamily::PowerGaussian { a } => {
                let g = k.powf(a) * (-0.5 * k * k).exp();
                [c(g); 3]
            }
            DataFamily::WOnly => [c(0.0), c(0.0), c(1.0)],
        }
    }

    /// Largest `s` with `V₀ ∈ Ḃ^{−s}_{2,∞}(ℝ³)`; `None` if the family is not
    /// used for algebraic rates.
    pub fn besov_index(&self) -> Option<f64> {
        match *self {
            DataFamily::Gaussian => Some(1.5),
            DataFamily::PowerGaussian { a } => Some(1.5 + a),
            DataFamily::WOnly => None,
        }
    }

    pub fn default_nodes(&self) -> Vec<f64> {
        match self {
            DataFamily::WOnly => log_space(1e-6, 2e-6, 32),
            _ => log_space(DEFAULT_K_MIN, DEFAULT_K_MAX, DEFAULT_K_NODES),
        }
    }

    pub fn label(&self) -> String {
        match self {
            DataFamily::Gaussian => "gaussian".into(),
            DataFamily::PowerGaussian { a } => format!("power-gaussian:{a}"),
            DataFamily::WOnly => "w-only".into(),
        }
    }
}

fn require_dissipative(params: &ModelParams) -> Result<()> {
    if !params.dissipative_regime() {
        return Err(Error::Regime(format!(
            "whole-space decay needs τ < β (τ = {}, β = {})",
            params.tau, params.beta
        )));
    }
    Ok(())
}

/// Per-node eigensystems, built once and reused for every time.
#[derive(Debug, Clone)]
pub struct RadialEvolver {
    initial: RadialProfile,
    systems: Vec<ModeEigensystem>,
}

impl RadialEvolver {
    pub fn new(initial: RadialProfile, params: &ModelParams) -> Result<Self> {
        require_dissipative(params)?;
        let systems = initial
            .k_nodes
            .par_iter()
            .map(|&k| ModeEigensystem::for_params(k * k, params))
            .collect::<Result<_>>()?;
        Ok(RadialEvolver { initial, systems })
    }

    pub fn at(&self, t: f64) -> Result<RadialProfile> {
        let modes = self
            .systems
            .par_iter()
            .zip(&self.initial.modes)
            .map(|(sys, m)| Ok(sys.propagator(t)?.apply(m)))
            .collect::<Result<_>>()?;
        Ok(RadialProfile {
            k_nodes: self.initial.k_nodes.clone(),
            modes,
            dim: self.initial.dim,
            t: self.initial.t + t,
        })
    }
}

/// `e^{tΦ(|ξ|)}` applied node by node.
pub fn evolve_radial(profile: &RadialProfile, params: &ModelParams, t: f64) -> Result<RadialProfile> {
    RadialEvolver::new(profile.clone(), params)?.at(t)
}

/// `L²` mass density near the origin, modelled as `μ₀ (k/k₀)^γ` from the first
/// two nodes. Returns the `ℓ^r` size of the weighted blocks lying entirely
/// below the first node (homogeneous) or the missing part of `Δ_{−1}`.
fn low_frequency_tail(k: &[f64], mass: &[f64], weights: &[f64], s: f64, r: SumExponent, homogeneous: bool, q_min: i32) -> f64 {
    let (k0, k1) = (k[0], k[1]);
    let d0 = mass[0] / weights[0] * k0 * k0;
    let d1 = mass[1] / weights[1] * k1 * k1;
    if d0 == 0.0 {
        return 0.0;
    }
    // density per unit k is c·k²·P(k); the ratio mass/weight is P(k)
    let gamma = if d1 > 0.0 { (d1 / d0).ln() / (k1 / k0).ln() } else { 0.0 };
    let c = 4.0 * std::f64::consts::PI / (2.0 * std::f64::consts::PI).powi(3);
    let mu0 = c * d0;
    if gamma <= -1.0 {
        return f64::INFINITY;
    }
    let below = |kk: f64| mu0 * k0 * (kk / k0).powf(gamma + 1.0) / (gamma + 1.0);
    if !homogeneous {
        return 2f64.powf(-s) * below(k0).sqrt();
    }
    let q_top = q_min;
    let top = 2f64.powf(q_top as f64 * s) * below((2f64.powi(q_top) * ANNULUS_OUTER).min(k0)).sqrt();
    let ratio = 2f64.powf(s + 0.5 * (gamma + 1.0));
    if ratio <= 1.0 {
        return f64::INFINITY;
    }
    match r {
        SumExponent::One => top / (1.0 - 1.0 / ratio),
        SumExponent::Two => top / (1.0 - 1.0 / (ratio * ratio)).sqrt(),
        SumExponent::Inf => top,
    }
}

/// Precomputed weights and block tables for repeated radial norms.
#[derive(Debug, Clone)]
pub struct RadialNorms {
    k: Vec<f64>,
    weights: Vec<f64>,
    homogeneous: BesovEvaluator,
    inhomogeneous: BesovEvaluator,
}

impl RadialNorms {
    pub fn new(k: &[f64]) -> Result<Self> {
        if k.len() < 2 || k[0] <= 0.0 {
            return Err(Error::domain("radial nodes must be positive"));
        }
        let hom = BesovEvaluator::covering(k, true)?;
        let q_max = hom.partition.q_max.max(0);
        let inh = BesovEvaluator::new(DyadicPartition { q_min: -1, q_max }, false, k);
        Ok(RadialNorms {
            k: k.to_vec(),
            weights: radial_weights(k, RADIAL_DIM),
            homogeneous: hom,
            inhomogeneous: inh,
        })
    }

    /// Norm of the radial function with `|f̂|² = power`, after applying `Λ^ℓ`.
    pub fn norm(&self, power: &[f64], ell: f64, s: f64, r: SumExponent, homogeneous: bool) -> BesovNorm {
        let mass: Vec<f64> = self
            .k
            .iter()
            .zip(&self.weights)
            .zip(power)
            .map(|((&k, &w), &p)| w * p * if ell == 0.0 { 1.0 } else { k.powf(2.0 * ell) })
            .collect();
        let ev = if homogeneous { &self.homogeneous } else { &self.inhomogeneous };
        let mut out = ev.norm(&mass, s, r);
        let tail = low_frequency_tail(&self.k, &mass, &self.weights, s, r, homogeneous, ev.partition.q_min);
        out.truncation_budget += tail;
        if out.warning.is_none() && out.truncation_budget > crate::lp::TRUNCATION_WARN * out.value {
            out.warning = Some(format!(
                "frequencies outside the sampled range may carry {:.3e} against {:.3e}",
                out.truncation_budget, out.value
            ));
        }
        out
    }

    pub fn l2(&self, power: &[f64]) -> f64 {
        self.weights.iter().zip(power).map(|(w, p)| w * p).sum::<f64>().sqrt()
    }
}

/// `‖Λ^ℓ V‖_{Ḃ^s_{2,r}}` (or `B^s_{2,r}`) of a radial profile.
pub fn radial_besov_norm(profile: &RadialProfile, params: &ModelParams, s: f64, r: SumExponent, ell: f64, homogeneous: bool) -> Result<BesovNorm> {
    let norms = RadialNorms::new(&profile.k_nodes)?;
    Ok(norms.norm(&profile.v_power(params.tau), ell, s, r, homogeneous))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    /// The window is not power-law (curvature check failed).
    Inapplicable,
    /// No target exponent; the slope is reported only.
    Observed,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inapplicable => "inapplicable",
            Verdict::Observed => "observed",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayFit {
    pub window: [f64; 2],
    pub slope: f64,
    pub intercept: f64,
    /// Half-width of the 95% confidence interval of the slope.
    pub ci: f64,
    pub theory: Option<f64>,
    pub tolerance: f64,
    /// `|c|·h/|b|` of the centred quadratic fit.
    pub curvature: f64,
    pub samples: usize,
    pub verdict: Verdict,
}

/// Least squares of `ln value` against `ln(1+t)` over `window`.
pub fn fit_decay(series: &NormSeries, theory: Option<f64>, tolerance: f64, window: (f64, f64)) -> Result<DecayFit> {
    let (lo, hi) = window;
    let first = *series
        .times
        .first()
        .ok_or_else(|| Error::domain("empty series"))?;
    if !(lo >= 10.0 * first * (1.0 - 1e-9) && lo > 0.0) {
        return Err(Error::domain(format!(
            "window start {lo} must be at least 10× the first sample {first}"
        )));
    }
    if !((hi / lo).log10() >= 1.5 - 1e-12) {
        return Err(Error::domain(format!("window [{lo}, {hi}] spans less than 1.5 decades")));
    }
    let eps = 1e-9;
    let (x, y): (Vec<f64>, Vec<f64>) = series
        .times
        .iter()
        .zip(&series.values)
        .filter(|(&t, _)| t >= lo * (1.0 - eps) && t <= hi * (1.0 + eps))
        .map(|(&t, &v)| (t, v))
        .map(|(t, v)| ((1.0 + t).ln(), v))
        .unzip();
    if x.len() < 5 {
        return Err(Error::domain(format!("only {} samples in the fit window", x.len())));
    }
    if y.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::domain(format!("{}: non-positive values in the fit window", series.label)));
    }
    let y: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let (intercept, slope, var) = linear_fit(&x, &y);
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let t_crit = StudentsT::new(0.0, 1.0, n - 2.0)
        .map_err(|e| Error::domain(e.to_string()))?
        .inverse_cdf(0.975);
    let ci = t_crit * (var / sxx).sqrt();
    let curvature = curvature_metric(&x, &y);
    let verdict = if !(curvature < CURVATURE_LIMIT) {
        Verdict::Inapplicable
    } else {
        match theory {
            None => Verdict::Observed,
            Some(th) if (slope - th).abs() <= tolerance => Verdict::Pass,
            Some(_) => Verdict::Fail,
        }
    };
    Ok(DecayFit {
        window: [lo, hi],
        slope,
        intercept,
        ci,
        theory,
        tolerance,
        curvature,
        samples: x.len(),
        verdict,
    })
}

fn curvature_metric(x: &[f64], y: &[f64]) -> f64 {
    let (xmin, xmax) = x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let centre = 0.5 * (xmin + xmax);
    let h = 0.5 * (xmax - xmin);
    let mut ata = nalgebra::Matrix3::<f64>::zeros();
    let mut aty = nalgebra::Vector3::<f64>::zeros();
    for (&xi, &yi) in x.iter().zip(y) {
        let d = (xi - centre) / h;
        let row = nalgebra::Vector3::new(1.0, d, d * d);
        ata += row * row.transpose();
        aty += row * yi;
    }
    let Some(coef) = ata.lu().solve(&aty) else {
        return f64::INFINITY;
    };
    // coefficients are in the scaled variable d = (x − centre)/h
    let (b, c) = (coef[1] / h, coef[2] / (h * h));
    if b == 0.0 {
        return f64::INFINITY;
    }
    (c * h / b).abs()
}

/// Norm tracked along a radial run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Quantity {
    /// `‖Λ^ℓ V‖` in `B^{3/2−ℓ}_{2,1}`, switching to `Ḃ^0_{2,1}` at `ℓ = 3/2`.
    LambdaV { ell: f64 },
    /// `‖V‖_{Ḃ^σ_{2,1}}`.
    V { sigma: f64 },
    /// `‖V‖_{Ḃ^σ_{2,1}}` with no target exponent.
    VObserved { sigma: f64 },
    /// `‖w‖_{Ḃ^σ_{2,1}}`.
    W { sigma: f64 },
}

impl Quantity {
    pub fn label(&self) -> String {
        match *self {
            Quantity::LambdaV { ell } => format!("lambda^{ell}_V"),
            Quantity::V { sigma } => format!("V_Bdot^{sigma}"),
            Quantity::VObserved { sigma } => format!("V_Bdot^{sigma}_observed"),
            Quantity::W { sigma } => format!("w_Bdot^{sigma}"),
        }
    }

    pub fn index(&self) -> f64 {
        match *self {
            Quantity::LambdaV { ell } => ell,
            Quantity::V { sigma } | Quantity::VObserved { sigma } | Quantity::W { sigma } => sigma,
        }
    }

    /// Target exponent for data in `Ḃ^{−s}_{2,∞}`.
    pub fn theory(&self, s: Option<f64>) -> Option<f64> {
        let s = s?;
        match *self {
            Quantity::LambdaV { ell } => Some(-(ell + s) / 2.0),
            Quantity::V { sigma } => Some(-(sigma + s) / 2.0),
            Quantity::VObserved { .. } => None,
            Quantity::W { sigma } => Some(-(sigma + s + 1.0) / 2.0),
        }
    }

    fn evaluate(&self, norms: &RadialNorms, profile: &RadialProfile, tau: f64) -> BesovNorm {
        match *self {
            Quantity::LambdaV { ell } => {
                let hom = ell >= 1.5;
                let s = if hom { 0.0 } else { 1.5 - ell };
                norms.norm(&profile.v_power(tau), ell, s, SumExponent::One, hom)
            }
            Quantity::V { sigma } | Quantity::VObserved { sigma } => {
                norms.norm(&profile.v_power(tau), 0.0, sigma, SumExponent::One, true)
            }
            Quantity::W { sigma } => norms.norm(&profile.w_power(), 0.0, sigma, SumExponent::One, true),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayConfig {
    pub params: ModelParams,
    pub family: DataFamily,
    pub k_nodes: usize,
    pub k_min: f64,
    pub k_max: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub t_count: usize,
    pub window: (f64, f64),
    pub tolerance: f64,
}

impl DecayConfig {
    pub fn new(params: ModelParams, family: DataFamily) -> Self {
        DecayConfig {
            params,
            family,
            k_nodes: DEFAULT_K_NODES,
            k_min: DEFAULT_K_MIN,
            k_max: DEFAULT_K_MAX,
            t_min: 1.0,
            t_max: 1e4,
            t_count: 81,
            window: DEFAULT_WINDOW,
            tolerance: 0.05,
        }
    }

    /// Decay over `[1, 10^d]` with the fit on the last two decades.
    pub fn with_decades(mut self, decades: f64) -> Result<Self> {
        if !(decades >= 2.5) {
            return Err(Error::Config(format!("need at least 2.5 decades of time, got {decades}")));
        }
        self.t_max = 10f64.powf(decades);
        self.window = (self.t_max / 100.0, self.t_max);
        self.t_count = (20.0 * decades).round() as usize + 1;
        Ok(self)
    }

    pub fn nodes(&self) -> Vec<f64> {
        match self.family {
            DataFamily::WOnly => self.family.default_nodes(),
            _ => log_space(self.k_min, self.k_max, self.k_nodes),
        }
    }

    pub fn times(&self) -> Vec<f64> {
        log_space(self.t_min, self.t_max, self.t_count)
    }

    pub fn validate(&self) -> Result<()> {
        require_dissipative(&self.params)?;
        if !(self.k_min > 0.0 && self.k_max > self.k_min && self.k_nodes >= 16) {
            return Err(Error::Config("frequency grid needs 0 < k_min < k_max and ≥ 16 nodes".into()));
        }
        if !(self.t_min > 0.0 && self.t_max > self.t_min && self.t_count >= 8) {
            return Err(Error::Config("time grid needs 0 < t_min < t_max and ≥ 8 samples".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::Config("tolerance must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayRow {
    pub quantity: Quantity,
    pub label: String,
    pub s: Option<f64>,
    pub fit: Option<DecayFit>,
    /// Why no fit was produced.
    pub error: Option<String>,
    pub max_truncation: f64,
}

impl DecayRow {
    pub fn verdict(&self) -> Verdict {
        self.fit.as_ref().map_or(Verdict::Fail, |f| f.verdict)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayExperiment {
    pub family: String,
    pub tau: f64,
    pub beta: f64,
    pub rows: Vec<DecayRow>,
    pub series: Vec<NormSeries>,
    /// `τλ < 1` with `λ` the fitted envelope rate.
    pub tau_small_enough: Option<bool>,
    pub lambda: Option<f64>,
}

/// Evolve the configured data and fit every requested quantity.
pub fn run_decay(cfg: &DecayConfig, quantities: &[Quantity]) -> Result<DecayExperiment> {
    cfg.validate()?;
    let nodes = cfg.nodes();
    let profile = RadialProfile::from_family(&cfg.family, nodes.clone())?;
    let evolver = RadialEvolver::new(profile, &cfg.params)?;
    let norms = RadialNorms::new(&nodes)?;
    let times = cfg.times();
    let tau = cfg.params.tau;
    let mut values = vec![Vec::with_capacity(times.len()); quantities.len()];
    let mut truncation = vec![0.0f64; quantities.len()];
    for &t in &times {
        let p = evolver.at(t)?;
        for (j, q) in quantities.iter().enumerate() {
            let n = q.evaluate(&norms, &p, tau);
            truncation[j] = truncation[j].max(n.truncation_budget / n.value.max(f64::MIN_POSITIVE));
            values[j].push(n.value);
        }
    }
    let s = cfg.family.besov_index();
    let mut rows = Vec::new();
    let mut series = Vec::new();
    for ((q, vals), trunc) in quantities.iter().zip(values).zip(truncation) {
        let ns = NormSeries::new(times.clone(), vals, q.label())?;
        let (fit, error) = match fit_decay(&ns, q.theory(s), cfg.tolerance, cfg.window) {
            Ok(f) => (Some(f), None),
            Err(e) => (None, Some(e.to_string())),
        };
        rows.push(DecayRow {
            quantity: *q,
            label: q.label(),
            s,
            fit,
            error,
            max_truncation: trunc,
        });
        series.push(ns);
    }
    Ok(DecayExperiment {
        family: cfg.family.label(),
        tau,
        beta: cfg.params.beta,
        rows,
        series,
        tau_small_enough: None,
        lambda: None,
    })
}

/// `‖Λ^ℓ V‖` for each `ℓ` and `‖V‖_{Ḃ^σ_{2,1}}` for each `σ`.
pub fn linear_decay_experiment(cfg: &DecayConfig, ells: &[f64], sigmas: &[f64]) -> Result<DecayExperiment> {
    let q: Vec<Quantity> = ells
        .iter()
        .map(|&ell| Quantity::LambdaV { ell })
        .chain(sigmas.iter().map(|&sigma| {
            if sigma >= 2.5 {
                Quantity::VObserved { sigma }
            } else {
                Quantity::V { sigma }
            }
        }))
        .collect();
    run_decay(cfg, &q)
}

/// `‖w‖_{Ḃ^σ_{2,1}}` for each `σ`, with the `τλ < 1` flag.
///
/// The `w-only` family lives on the relaxation scale, so its time grid is
/// rescaled to `[0.015τ, 15τ]` with the fit on the last two decades.
pub fn w_decay_experiment(cfg: &DecayConfig, sigmas: &[f64]) -> Result<DecayExperiment> {
    let mut cfg = cfg.clone();
    if cfg.family == DataFamily::WOnly {
        let tau = cfg.params.tau;
        cfg.t_min = 0.015 * tau;
        cfg.t_max = 15.0 * tau;
        cfg.t_count = 61;
        cfg.window = (0.15 * tau, 15.0 * tau);
    }
    let q: Vec<Quantity> = sigmas.iter().map(|&sigma| Quantity::W { sigma }).collect();
    let mut out = run_decay(&cfg, &q)?;
    let profile = spectral_abscissa_profile(&cfg.params, &default_xi_grid())?;
    out.lambda = Some(profile.lambda);
    out.tau_small_enough = Some(cfg.params.tau * profile.lambda < 1.0);
    Ok(out)
}

/// Low-frequency block `‖Λ^k Δ_{−1} V(t)‖` against the closed-form bound
/// `(L₀^{−1/(k+s)} + C₀ N^{−2/(k+s)} t/(k+s))^{−(k+s)}` for its square,
/// `N = ‖V₀‖_{Ḃ^{−s}_{2,∞}}`.
#[derive(Debug, Clone, Serialize)]
pub struct LowFrequencyEnvelope {
    pub k: f64,
    pub s: f64,
    /// Rate constant, matched at the last time.
    pub c0: f64,
    /// `sup_t ‖Λ^kΔ_{−1}V‖² / envelope`.
    pub c1: f64,
    /// Spread of the ratio over the final decade, `max/min − 1`.
    pub late_spread: f64,
}

pub fn low_frequency_envelope(cfg: &DecayConfig, k: f64) -> Result<LowFrequencyEnvelope> {
    cfg.validate()?;
    let s = cfg
        .family
        .besov_index()
        .ok_or_else(|| Error::Precondition("family has no negative Besov index".into()))?;
    let nodes = cfg.nodes();
    let profile = RadialProfile::from_family(&cfg.family, nodes.clone())?;
    let norms = RadialNorms::new(&nodes)?;
    let tau = cfg.params.tau;
    let n0 = norms
        .norm(&profile.v_power(tau), 0.0, -s, SumExponent::Inf, true)
        .value;
    let evolver = RadialEvolver::new(profile, &cfg.params)?;
    let low_block = |p: &RadialProfile| -> f64 {
        let power: Vec<f64> = p
            .v_power(tau)
            .iter()
            .zip(&nodes)
            .map(|(v, &kk)| v * crate::lp::chi(kk).powi(2) * kk.powf(2.0 * k))
            .collect();
        norms.l2(&power).powi(2)
    };
    let times = cfg.times();
    let mut l = Vec::with_capacity(times.len() + 1);
    l.push(low_block(&evolver.at(0.0)?));
    for &t in &times {
        l.push(low_block(&evolver.at(t)?));
    }
    let e = k + s;
    let l0 = l[0];
    let t_last = *times.last().expect("non-empty");
    let l_last = *l.last().expect("non-empty");
    // choose C₀ so that the envelope meets the data at the last time
    let c0 = (l_last.powf(-1.0 / e) - l0.powf(-1.0 / e)) * n0.powf(2.0 / e) * e / t_last;
    let env = |t: f64| (l0.powf(-1.0 / e) + c0 * n0.powf(-2.0 / e) * t / e).powf(-e);
    let all_t: Vec<f64> = std::iter::once(0.0).chain(times.iter().copied()).collect();
    let ratios: Vec<f64> = all_t.iter().zip(&l).map(|(&t, &v)| v / env(t)).collect();
    let c1 = ratios.iter().copied().fold(0.0, f64::max);
    let late: Vec<f64> = all_t
        .iter()
        .zip(&ratios)
        .filter(|(&t, _)| t >= t_last / 10.0)
        .map(|(_, &r)| r)
        .collect();
    let (mn, mx) = late.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
    Ok(LowFrequencyEnvelope {
        k,
        s,
        c0,
        c1,
        late_spread: mx / mn - 1.0,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SegelReport {
    pub a: f64,
    pub b: f64,
    pub hypothesis_holds: bool,
    pub times: Vec<f64>,
    pub integral: Vec<f64>,
    /// `sup_t I(t)(1+t)^{min(a,b)}`.
    pub ratio_max: f64,
    pub fit: Option<DecayFit>,
}

/// `∫₀ᵗ (1+t−r)^{−a} (1+r)^{−b} dr` by double-exponential quadrature on the
/// two halves of the interval.
pub fn segel_integral(a: f64, b: f64, t: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    let f = |r: f64| (1.0 + t - r).powf(-a) * (1.0 + r).powf(-b);
    let tol = 1e-13 * (1.0 + t).powf(-a.min(b));
    let mid = 0.5 * t;
    quadrature::double_exponential::integrate(f, 0.0, mid, tol).integral
        + quadrature::double_exponential::integrate(f, mid, t, tol).integral
}

pub const SEGEL_WINDOW: (f64, f64) = (1e6, 1e8);

pub fn segel_times() -> Vec<f64> {
    log_space(1e5, 1e8, 61)
}

/// Late-time slope of the convolution integral against `−min(a,b)`.
pub fn segel_probe(a: f64, b: f64, t_grid: &[f64], window: (f64, f64), tolerance: f64) -> Result<SegelReport> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::domain(format!("exponents must be positive (a={a}, b={b})")));
    }
    if a.max(b) <= 1.0 {
        return Ok(SegelReport {
            a,
            b,
            hypothesis_holds: false,
            times: t_grid.to_vec(),
            integral: Vec::new(),
            ratio_max: f64::NAN,
            fit: None,
        });
    }
    let integral: Vec<f64> = t_grid.par_iter().map(|&t| segel_integral(a, b, t)).collect();
    let m = a.min(b);
    let ratio_max = t_grid
        .iter()
        .zip(&integral)
        .map(|(&t, &i)| i * (1.0 + t).powf(m))
        .fold(0.0, f64::max);
    let series = NormSeries::new(t_grid.to_vec(), integral.clone(), format!("segel({a},{b})"))?;
    let fit = fit_decay(&series, Some(-m), tolerance, window)?;
    Ok(SegelReport {
        a,
        b,
        hypothesis_holds: true,
        times: t_grid.to_vec(),
        integral,
        ratio_max,
        fit: Some(fit),
    })
}
