//! Zero-noise extrapolation with probabilistic error amplification.

use serde::Serialize;

use crate::channel::PauliChannel;
use crate::error::{invalid, Result};
use crate::pec::{sample_outcomes, with_noise, LogicalCircuit};
use crate::stats;

/// Noise scale factors, starting at 1 and strictly increasing.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScaleSchedule {
    scales: Vec<f64>,
}

impl ScaleSchedule {
    pub fn new(scales: Vec<f64>) -> Result<Self> {
        if scales.first() != Some(&1.0) {
            return Err(invalid("schedule must start at scale 1"));
        }
        if scales.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("scales must be distinct and increasing"));
        }
        Ok(Self { scales })
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }
}

impl Default for ScaleSchedule {
    fn default() -> Self {
        Self {
            scales: vec![1.0, 2.0, 3.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RichardsonWeights {
    pub c: Vec<f64>,
    /// `sum |c_j|`, the variance amplification of the extrapolated value.
    pub overhead: f64,
}

/// Lagrange weights of the interpolating polynomial evaluated at zero:
/// `c_j = prod_{m != j} s_m / (s_m - s_j)`.
pub fn richardson_coefficients(scales: &[f64]) -> Result<RichardsonWeights> {
    if scales.is_empty() {
        return Err(invalid("need at least one scale"));
    }
    let mut c = Vec::with_capacity(scales.len());
    for (j, &sj) in scales.iter().enumerate() {
        let mut w = 1.0;
        for (m, &sm) in scales.iter().enumerate() {
            if m != j {
                if sm == sj {
                    return Err(invalid("repeated scale makes the Vandermonde system singular"));
                }
                w *= sm / (sm - sj);
            }
        }
        c.push(w);
    }
    let overhead = c.iter().map(|x| x.abs()).sum();
    Ok(RichardsonWeights { c, overhead })
}

/// `max_k |sum_j c_j s_j^k - delta_k0|` over `k = 0..K`.
pub fn richardson_residual(scales: &[f64], w: &RichardsonWeights) -> f64 {
    (0..scales.len())
        .map(|k| {
            let s: f64 = scales.iter().zip(&w.c).map(|(s, c)| c * s.powi(k as i32)).sum();
            (s - if k == 0 { 1.0 } else { 0.0 }).abs()
        })
        .fold(0.0, f64::max)
}

pub fn extrapolate(values: &[f64], w: &RichardsonWeights) -> f64 {
    values.iter().zip(&w.c).map(|(v, c)| v * c).sum()
}

/// Scales every non-identity mass by `s`.
pub fn amplify_channel(ch: &PauliChannel, s: f64) -> Result<PauliChannel> {
    let mass = ch.error_mass();
    if !(s >= 0.0) || s * mass > 1.0 + 1e-15 {
        return Err(invalid(format!("cannot amplify error mass {mass} by {s}")));
    }
    let mut probs: Vec<f64> = ch.probs().iter().map(|p| p * s).collect();
    probs[0] = 0.0;
    let err: f64 = probs.iter().sum();
    probs[0] = (1.0 - err).max(0.0);
    PauliChannel::new(ch.n_qubits(), probs)
}

/// Channel inserted after each gate so that, to first order, native noise
/// followed by the insertion looks like the native channel amplified by `s`.
pub fn pea_insertion_channel(estimated: &PauliChannel, s: f64) -> Result<PauliChannel> {
    if !(s >= 1.0) {
        return Err(invalid("amplification factor must be at least 1"));
    }
    amplify_channel(estimated, s - 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZneResult {
    pub scales: Vec<f64>,
    pub means: Vec<f64>,
    pub stderrs: Vec<f64>,
    pub coefficients: Vec<f64>,
    pub extrapolated: f64,
    pub stderr: f64,
    pub seed: u64,
}

/// Runs the circuit at every scale with PEA insertions drawn from the
/// circuit's own channels and extrapolates to zero noise.
pub fn run_zne(circ: &LogicalCircuit, schedule: &ScaleSchedule, shots_per_scale: u64, seed: u64) -> Result<ZneResult> {
    if shots_per_scale < 2 {
        return Err(invalid("need at least 2 shots per scale"));
    }
    let w = richardson_coefficients(schedule.scales())?;
    let mut means = Vec::new();
    let mut stderrs = Vec::new();
    for (j, &s) in schedule.scales().iter().enumerate() {
        let noise = circ
            .noise()
            .iter()
            .map(|ch| ch.compose(&pea_insertion_channel(ch, s)?))
            .collect::<Result<_>>()?;
        let amplified = with_noise(circ, noise)?;
        let xs = sample_outcomes(&amplified, shots_per_scale, seed.wrapping_add(j as u64));
        means.push(stats::mean(&xs));
        stderrs.push(stats::std_error(&xs));
    }
    let extrapolated = extrapolate(&means, &w);
    let stderr = w
        .c
        .iter()
        .zip(&stderrs)
        .map(|(c, e)| (c * e).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(ZneResult {
        scales: schedule.scales().to_vec(),
        means,
        stderrs,
        coefficients: w.c,
        extrapolated,
        stderr,
        seed,
    })
}

/// Exact per-scale values `prod_g (1 - 2 s p_g)` and their extrapolation.
pub fn analytic_zne(flip_probs: &[f64], scales: &[f64]) -> Result<(Vec<f64>, f64)> {
    let w = richardson_coefficients(scales)?;
    let values: Vec<f64> = scales
        .iter()
        .map(|s| flip_probs.iter().map(|p| 1.0 - 2.0 * s * p).product())
        .collect();
    let x = extrapolate(&values, &w);
    Ok((values, x))
}
