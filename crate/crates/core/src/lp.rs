//! Littlewood–Paley blocks, Besov and Chemin–Lerner norms.
//!
//! All norms are `L²`-based and evaluated on the Fourier side through
//! [`SpectralSamples`], a list of frequencies `|ξ|` with the `L²` mass each one
//! carries. Torus spectra and radial whole-space profiles both reduce to it.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::SpectralGrid;

/// Outer radius of the annulus carrying `φ`.
pub const ANNULUS_OUTER: f64 = 8.0 / 3.0;
/// Radius beyond which `χ` vanishes.
pub const BALL_OUTER: f64 = 4.0 / 3.0;
/// Relative out-of-range weight above which a truncation warning is attached.
pub const TRUNCATION_WARN: f64 = 0.01;

fn psi(x: f64) -> f64 {
    if x > 0.0 {
        (-1.0 / x).exp()
    } else {
        0.0
    }
}

/// Smooth monotone transition: 0 for `x ≤ 0`, 1 for `x ≥ 1`.
pub fn smooth_step(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        let a = psi(x);
        a / (a + psi(1.0 - x))
    }
}

/// Radial cutoff: 1 on `|ξ| ≤ 1`, 0 on `|ξ| ≥ 4/3`.
pub fn chi(r: f64) -> f64 {
    smooth_step(4.0 - 3.0 * r.abs())
}

/// `φ(ξ) = χ(ξ/2) − χ(ξ)`, supported in `1 ≤ |ξ| ≤ 8/3`.
pub fn phi(r: f64) -> f64 {
    let r = r.abs();
    if !(1.0..=ANNULUS_OUTER).contains(&r) {
        return 0.0;
    }
    chi(0.5 * r) - chi(r)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DyadicPartition {
    pub q_min: i32,
    pub q_max: i32,
}

pub fn build_partition(q_min: i32, q_max: i32) -> Result<DyadicPartition> {
    if q_min >= q_max {
        return Err(Error::domain(format!("empty block range [{q_min}, {q_max}]")));
    }
    Ok(DyadicPartition { q_min, q_max })
}

impl DyadicPartition {
    pub fn chi(&self, r: f64) -> f64 {
        chi(r)
    }

    pub fn phi(&self, r: f64) -> f64 {
        phi(r)
    }

    /// Smallest block range whose annuli meet `[k_lo, k_hi]`.
    pub fn covering(k_lo: f64, k_hi: f64) -> Result<Self> {
        if !(k_lo > 0.0 && k_hi >= k_lo && k_hi.is_finite()) {
            return Err(Error::domain(format!("bad frequency range [{k_lo}, {k_hi}]")));
        }
        let q_min = (k_lo.log2() - ANNULUS_OUTER.log2()).floor() as i32;
        let q_max = (k_hi.log2().floor() as i32).max(q_min + 1);
        build_partition(q_min, q_max)
    }

    /// Frequencies on which the in-range homogeneous blocks sum to one.
    pub fn covered_range(&self) -> (f64, f64) {
        (
            2f64.powi(self.q_min) * BALL_OUTER,
            2f64.powi(self.q_max + 1),
        )
    }

    pub fn check_block(&self, q: i32, homogeneous: bool) -> Result<()> {
        let lo = if homogeneous { self.q_min } else { -1 };
        if q < lo || q > self.q_max {
            return Err(Error::domain(format!(
                "block {q} outside [{lo}, {}]",
                self.q_max
            )));
        }
        Ok(())
    }

    /// Multiplier of `Δ̇_q` (homogeneous) or `Δ_q` (inhomogeneous, `q ≥ −1`).
    pub fn block_multiplier(&self, q: i32, homogeneous: bool) -> Result<impl Fn(f64) -> f64> {
        self.check_block(q, homogeneous)?;
        let low = !homogeneous && q == -1;
        let scale = 2f64.powi(-q);
        Ok(move |r: f64| if low { chi(r) } else { phi(scale * r) })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SumExponent {
    #[serde(rename = "1")]
    One,
    #[serde(rename = "2")]
    Two,
    #[serde(rename = "inf")]
    Inf,
}

impl SumExponent {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "1" => Ok(SumExponent::One),
            "2" => Ok(SumExponent::Two),
            "inf" | "∞" | "infinity" => Ok(SumExponent::Inf),
            other => Err(Error::domain(format!("summation exponent must be 1, 2 or inf, got {other:?}"))),
        }
    }

    pub fn value(self) -> f64 {
        match self {
            SumExponent::One => 1.0,
            SumExponent::Two => 2.0,
            SumExponent::Inf => f64::INFINITY,
        }
    }

    /// `ℓ^r` norm of non-negative terms, accumulated in the given order.
    pub fn combine(self, terms: impl IntoIterator<Item = f64>) -> f64 {
        match self {
            SumExponent::One => terms.into_iter().sum(),
            SumExponent::Two => terms.into_iter().map(|x| x * x).sum::<f64>().sqrt(),
            SumExponent::Inf => terms.into_iter().fold(0.0, f64::max),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BesovSpec {
    pub s: f64,
    pub p: f64,
    pub r: SumExponent,
    pub homogeneous: bool,
}

impl BesovSpec {
    pub fn new(s: f64, r: SumExponent, homogeneous: bool) -> Result<Self> {
        let spec = BesovSpec { s, p: 2.0, r, homogeneous };
        spec.validate()?;
        Ok(spec)
    }

    pub fn homogeneous(s: f64, r: SumExponent) -> Self {
        BesovSpec { s, p: 2.0, r, homogeneous: true }
    }

    pub fn inhomogeneous(s: f64, r: SumExponent) -> Self {
        BesovSpec { s, p: 2.0, r, homogeneous: false }
    }

    pub fn validate(&self) -> Result<()> {
        if self.p != 2.0 {
            return Err(Error::domain(format!("only p = 2 is supported, got {}", self.p)));
        }
        if !self.s.is_finite() {
            return Err(Error::domain("regularity index must be finite"));
        }
        Ok(())
    }
}

/// Time series of one scalar norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormSeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub label: String,
}

impl NormSeries {
    pub fn new(times: Vec<f64>, values: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::domain(format!(
                "{} times but {} values",
                times.len(),
                values.len()
            )));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::domain("times must be strictly increasing"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("norm values must be finite"));
        }
        Ok(NormSeries { times, values, label: label.into() })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Frequencies `|ξ|` paired with the `L²` mass they carry, so that
/// `‖m(D) f‖² = Σ mass_i m(k_i)²`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSamples {
    pub k: Vec<f64>,
    pub mass: Vec<f64>,
}

/// Area of the unit sphere `S^{d−1}`.
fn sphere_area(dim: usize) -> f64 {
    match dim {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => unreachable!("dimension checked by caller"),
    }
}

/// Quadrature weights for `∫ g(k) dk` by the trapezoid rule in `ln k`.
pub fn log_trapezoid_weights(k: &[f64]) -> Vec<f64> {
    let n = k.len();
    let mut w = vec![0.0; n];
    for i in 0..n.saturating_sub(1) {
        let h = 0.5 * (k[i + 1].ln() - k[i].ln());
        w[i] += h * k[i];
        w[i + 1] += h * k[i + 1];
    }
    w
}

/// Weights `c_i` with `‖f‖² ≈ Σ c_i |f̂(k_i)|²` for a radial profile in
/// dimension `dim`.
pub fn radial_weights(k: &[f64], dim: usize) -> Vec<f64> {
    let c = sphere_area(dim) / (2.0 * PI).powi(dim as i32);
    k.iter()
        .zip(log_trapezoid_weights(k))
        .map(|(&k, w)| c * w * k.powi(dim as i32 - 1))
        .collect()
}

impl SpectralSamples {
    pub fn new(k: Vec<f64>, mass: Vec<f64>) -> Result<Self> {
        if k.len() != mass.len() {
            return Err(Error::domain("frequency and mass lists differ in length"));
        }
        if k.iter().chain(&mass).any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::domain("frequencies and masses must be finite and non-negative"));
        }
        Ok(SpectralSamples { k, mass })
    }

    /// Torus spectrum in the half-complex layout of `sg`.
    pub fn from_grid(sg: &SpectralGrid, spectrum: &[Complex64]) -> Self {
        let vol = sg.grid().volume();
        let (k, mass) = sg
            .modes()
            .iter()
            .zip(spectrum)
            .map(|(m, z)| (m.k_abs(), vol * m.weight * z.norm_sqr()))
            .unzip();
        SpectralSamples { k, mass }
    }

    /// Radial whole-space profile: `power[i] = |f̂(k_i)|²` with the transform
    /// convention `‖f‖² = (2π)^{−d} ∫ |f̂|² dξ`.
    pub fn from_radial(k: &[f64], power: &[f64], dim: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::domain(format!("dimension must be 1, 2 or 3, got {dim}")));
        }
        if k.len() != power.len() || k.len() < 2 {
            return Err(Error::domain("radial profile needs matching k and power lists"));
        }
        if k[0] <= 0.0 || k.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::domain("radial nodes must be positive and strictly increasing"));
        }
        let mass = radial_weights(k, dim)
            .iter()
            .zip(power)
            .map(|(w, p)| w * p)
            .collect();
        SpectralSamples::new(k.to_vec(), mass)
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.total().sqrt()
    }

    /// Samples of `m(D) f`.
    pub fn multiplied(&self, m: impl Fn(f64) -> f64) -> Self {
        let mass = self
            .k
            .iter()
            .zip(&self.mass)
            .map(|(&k, &w)| {
                let a = m(k);
                a * a * w
            })
            .collect();
        SpectralSamples { k: self.k.clone(), mass }
    }

    /// Samples of `Λ^ℓ f`, `Λ = |D|`.
    pub fn lambda_power(&self, ell: f64) -> Self {
        if ell == 0.0 {
            return self.clone();
        }
        self.multiplied(|k| if k == 0.0 { 0.0 } else { k.powf(ell) })
    }

    pub fn positive_range(&self) -> Option<(f64, f64)> {
        self.k
            .iter()
            .zip(&self.mass)
            .filter(|(&k, &m)| k > 0.0 && m > 0.0)
            .fold(None, |acc, (&k, _)| match acc {
                None => Some((k, k)),
                Some((lo, hi)) => Some((lo.min(k), hi.max(k))),
            })
    }
}

/// Apply `Δ̇_q` / `Δ_q` to a torus spectrum.
pub fn dyadic_block(
    sg: &SpectralGrid,
    spectrum: &[Complex64],
    partition: &DyadicPartition,
    q: i32,
    homogeneous: bool,
) -> Result<Vec<Complex64>> {
    let m = partition.block_multiplier(q, homogeneous)?;
    Ok(sg.multiplier(spectrum, m))
}

/// Apply `Δ̇_q` / `Δ_q` to a radial profile sampled at `k`.
pub fn dyadic_block_radial(
    k: &[f64],
    values: &[Complex64],
    partition: &DyadicPartition,
    q: i32,
    homogeneous: bool,
) -> Result<Vec<Complex64>> {
    let m = partition.block_multiplier(q, homogeneous)?;
    Ok(k.iter().zip(values).map(|(&k, z)| z * m(k)).collect())
}

/// Squared block multipliers over a fixed frequency list, stored sparsely.
#[derive(Debug, Clone)]
struct BlockTable {
    qs: Vec<i32>,
    entries: Vec<Vec<(usize, f64)>>,
}

impl BlockTable {
    fn build(k: &[f64], qs: impl Iterator<Item = i32>, homogeneous: bool) -> Self {
        let qs: Vec<i32> = qs.collect();
        let entries = qs
            .iter()
            .map(|&q| {
                let low = !homogeneous && q == -1;
                let scale = 2f64.powi(-q);
                k.iter()
                    .enumerate()
                    .filter_map(|(i, &k)| {
                        let m = if low { chi(k) } else { phi(scale * k) };
                        (m != 0.0).then_some((i, m * m))
                    })
                    .collect()
            })
            .collect();
        BlockTable { qs, entries }
    }

    fn norms(&self, mass: &[f64]) -> Vec<f64> {
        self.entries
            .iter()
            .map(|e| e.iter().map(|&(i, w)| w * mass[i]).sum::<f64>().sqrt())
            .collect()
    }
}

/// Dyadic norm with its per-block breakdown.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BesovNorm {
    pub value: f64,
    /// `(q, 2^{qs}‖Δ_q f‖)` in ascending `q`.
    pub blocks: Vec<(i32, f64)>,
    /// `ℓ^r` size of the weighted blocks outside the partition range that
    /// the samples still populate.
    pub truncation_budget: f64,
    pub warning: Option<String>,
}

/// Precomputed block weights for repeated norms over one frequency list.
#[derive(Debug, Clone)]
pub struct BesovEvaluator {
    pub partition: DyadicPartition,
    pub homogeneous: bool,
    k: Vec<f64>,
    inside: BlockTable,
    outside: BlockTable,
}

impl BesovEvaluator {
    pub fn new(partition: DyadicPartition, homogeneous: bool, k: &[f64]) -> Self {
        let lo = if homogeneous { partition.q_min } else { -1 };
        let inside = BlockTable::build(k, lo..=partition.q_max, homogeneous);
        let positive = k.iter().copied().filter(|&x| x > 0.0);
        let (kmin, kmax) = positive.fold((f64::INFINITY, 0.0f64), |(a, b), x| (a.min(x), b.max(x)));
        let outside_qs: Vec<i32> = if kmax > 0.0 {
            let full = DyadicPartition::covering(kmin, kmax).expect("positive range");
            (full.q_min..=full.q_max)
                .filter(|&q| q > partition.q_max || (homogeneous && q < partition.q_min))
                .collect()
        } else {
            Vec::new()
        };
        let outside = BlockTable::build(k, outside_qs.into_iter(), homogeneous);
        BesovEvaluator {
            partition,
            homogeneous,
            k: k.to_vec(),
            inside,
            outside,
        }
    }

    /// Evaluator whose range covers every positive frequency in `k`.
    pub fn covering(k: &[f64], homogeneous: bool) -> Result<Self> {
        let (lo, hi) = k
            .iter()
            .copied()
            .filter(|&x| x > 0.0)
            .fold((f64::INFINITY, 0.0f64), |(a, b), x| (a.min(x), b.max(x)));
        if hi == 0.0 {
            return Err(Error::domain("no positive frequencies"));
        }
        Ok(Self::new(DyadicPartition::covering(lo, hi)?, homogeneous, k))
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.k
    }

    pub fn block_indices(&self) -> &[i32] {
        &self.inside.qs
    }

    /// Unweighted `‖Δ_q f‖` for every in-range block.
    pub fn block_norms(&self, mass: &[f64]) -> Vec<f64> {
        assert_eq!(mass.len(), self.k.len(), "mass list does not match frequencies");
        self.inside.norms(mass)
    }

    pub fn norm(&self, mass: &[f64], s: f64, r: SumExponent) -> BesovNorm {
        let raw = self.block_norms(mass);
        let blocks: Vec<(i32, f64)> = self
            .inside
            .qs
            .iter()
            .zip(raw)
            .map(|(&q, b)| (q, 2f64.powf(q as f64 * s) * b))
            .collect();
        let value = r.combine(blocks.iter().map(|b| b.1));
        let outside = self
            .outside
            .qs
            .iter()
            .zip(self.outside.norms(mass))
            .map(|(&q, b)| 2f64.powf(q as f64 * s) * b);
        let truncation_budget = r.combine(outside);
        let warning = (truncation_budget > TRUNCATION_WARN * value).then(|| {
            format!(
                "out-of-range blocks carry {truncation_budget:.3e} against a norm of {value:.3e}"
            )
        });
        BesovNorm {
            value,
            blocks,
            truncation_budget,
            warning,
        }
    }

    pub fn norm_of(&self, samples: &SpectralSamples, spec: &BesovSpec) -> Result<BesovNorm> {
        spec.validate()?;
        if spec.homogeneous != self.homogeneous {
            return Err(Error::domain("evaluator and norm disagree on homogeneity"));
        }
        if samples.k != self.k {
            return Err(Error::domain("samples were taken on a different frequency list"));
        }
        Ok(self.norm(&samples.mass, spec.s, spec.r))
    }
}

/// `‖f‖_{Ḃ^s_{2,r}}` (or `B^s_{2,r}`) on the given partition range.
pub fn besov_norm(samples: &SpectralSamples, spec: &BesovSpec, partition: &DyadicPartition) -> Result<BesovNorm> {
    spec.validate()?;
    BesovEvaluator::new(*partition, spec.homogeneous, &samples.k).norm_of(samples, spec)
}

/// Besov norm on the smallest partition covering the populated frequencies.
pub fn besov_norm_auto(samples: &SpectralSamples, spec: &BesovSpec) -> Result<BesovNorm> {
    let (lo, hi) = samples
        .positive_range()
        .ok_or_else(|| Error::domain("field has no spectral mass away from the origin"))?;
    besov_norm(samples, spec, &DyadicPartition::covering(lo, hi)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TimeExponent {
    #[serde(rename = "2")]
    Two,
    #[serde(rename = "inf")]
    Inf,
}

impl TimeExponent {
    pub fn value(self) -> f64 {
        match self {
            TimeExponent::Two => 2.0,
            TimeExponent::Inf => f64::INFINITY,
        }
    }

    fn integrate(self, times: &[f64], values: &[f64]) -> f64 {
        match self {
            TimeExponent::Inf => values.iter().copied().fold(0.0, f64::max),
            TimeExponent::Two => {
                let sq: Vec<f64> = values.iter().map(|v| v * v).collect();
                crate::util::trapezoid(times, &sq).sqrt()
            }
        }
    }
}

fn check_block_series(blocks: &[(i32, NormSeries)]) -> Result<()> {
    let Some((_, first)) = blocks.first() else {
        return Err(Error::domain("no block series"));
    };
    if first.len() < 2 {
        return Err(Error::domain("time series need at least two samples"));
    }
    for (q, s) in blocks {
        if s.times != first.times {
            return Err(Error::domain(format!("block {q} uses a different time grid")));
        }
    }
    let h = first.times[1] - first.times[0];
    if first.times.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * h.abs().max(1.0)) {
        return Err(Error::domain("time grid must be uniform"));
    }
    Ok(())
}

/// `‖f‖_{L̃^θ_T(Ḃ^s_{2,r})}`: time integral inside each block, then `ℓ^r`.
/// `blocks[j] = (q, t ↦ ‖Δ_q f(t)‖)`.
pub fn chemin_lerner_norm(blocks: &[(i32, NormSeries)], theta: TimeExponent, s: f64, r: SumExponent) -> Result<f64> {
    check_block_series(blocks)?;
    let mut ordered: Vec<&(i32, NormSeries)> = blocks.iter().collect();
    ordered.sort_by_key(|b| b.0);
    Ok(r.combine(
        ordered
            .iter()
            .map(|(q, series)| 2f64.powf(*q as f64 * s) * theta.integrate(&series.times, &series.values)),
    ))
}

/// `‖f‖_{L^θ_T(Ḃ^s_{2,r})}`: `ℓ^r` at each time, then the time integral.
pub fn mixed_time_norm(blocks: &[(i32, NormSeries)], theta: TimeExponent, s: f64, r: SumExponent) -> Result<f64> {
    check_block_series(blocks)?;
    let mut ordered: Vec<&(i32, NormSeries)> = blocks.iter().collect();
    ordered.sort_by_key(|b| b.0);
    let times = &ordered[0].1.times;
    let per_time: Vec<f64> = (0..times.len())
        .map(|i| r.combine(ordered.iter().map(|(q, s_)| 2f64.powf(*q as f64 * s) * s_.values[i])))
        .collect();
    Ok(theta.integrate(times, &per_time))
}

/// `‖Λ^k f‖ / (2^{qk}‖f‖)` for `f` spectrally supported in `2^q·{3/4 ≤ |ξ| ≤ 8/3}`.
pub fn bernstein_ratio(samples: &SpectralSamples, k: f64, q: i32) -> Result<f64> {
    let total = samples.total();
    if total == 0.0 {
        return Err(Error::Precondition("zero field".into()));
    }
    let scale = 2f64.powi(q);
    let (lo, hi) = (0.75 * scale, ANNULUS_OUTER * scale);
    let leak: f64 = samples
        .k
        .iter()
        .zip(&samples.mass)
        .filter(|(&kk, _)| kk < lo * (1.0 - 1e-12) || kk > hi * (1.0 + 1e-12))
        .map(|(_, &m)| m)
        .sum();
    if leak > 1e-14 * total {
        return Err(Error::Precondition(format!(
            "spectral mass {:.3e} (relative) outside the annulus of block {q}",
            leak / total
        )));
    }
    if k == 0.0 {
        return Ok(1.0);
    }
    let num = samples.lambda_power(k).total();
    Ok((num / total).sqrt() / scale.powf(k))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InterpolationReport {
    pub theta: f64,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs / rhs`; the inequality constant needed for this field.
    pub ratio: f64,
}

/// `‖Λ^k f‖ ≤ C ‖Λ^{k+m} f‖^θ ‖f‖^{1−θ}_{Ḃ^{−ϱ}_{2,∞}}`, `θ = (ϱ+k)/(ϱ+k+m)`.
pub fn interpolation_check(samples: &SpectralSamples, k: f64, m: f64, varrho: f64) -> Result<InterpolationReport> {
    if !(k >= 0.0 && m > 0.0 && varrho > 0.0) {
        return Err(Error::domain(format!("need k ≥ 0 and m, ϱ > 0 (k={k}, m={m}, ϱ={varrho})")));
    }
    let theta = (varrho + k) / (varrho + k + m);
    let lhs = samples.lambda_power(k).l2_norm();
    let top = samples.lambda_power(k + m).l2_norm();
    let low = besov_norm_auto(samples, &BesovSpec::homogeneous(-varrho, SumExponent::Inf))?.value;
    let rhs = top.powf(theta) * low.powf(1.0 - theta);
    let ratio = lhs / rhs;
    if ![lhs, rhs, ratio].iter().all(|x| x.is_finite()) {
        return Err(Error::domain("non-finite norm in interpolation check"));
    }
    Ok(InterpolationReport { theta, lhs, rhs, ratio })
}
