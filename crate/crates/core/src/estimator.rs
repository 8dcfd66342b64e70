//! Running logical-channel estimates built from per-shot posteriors.
//!
//! A memory shot samples a physical error, decodes its syndrome and records
//! two things: the residual logical class left by the hard correction (the
//! ground truth, only available in simulation) and the decoder posterior in
//! the same frame. Averaging posteriors gives the soft estimator, averaging
//! one-hot residuals gives the hard one.

use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{PauliChannel, PosteriorVector};
use crate::code::{map_unique, CodeLayout, NoiseModel, Syndrome};
use crate::decoder::Decoder;
use crate::error::{invalid, Error, Result};
use crate::exact::{exact_posteriors, syndrome_class_table, Oracle};
use crate::pauli::Pauli;
use crate::rng::{domain, RandomStream};

/// Online mean and second moment per class (weighted Welford).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelEstimate {
    n_qubits: usize,
    n: u64,
    weight: f64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl ChannelEstimate {
    pub fn new(n_qubits: usize) -> Self {
        let k = 1 << (2 * n_qubits);
        Self {
            n_qubits,
            n: 0,
            weight: 0.0,
            mean: vec![0.0; k],
            m2: vec![0.0; k],
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn update(&mut self, posterior: &PosteriorVector) -> Result<()> {
        self.update_probs(&posterior.as_array())
    }

    pub fn update_probs(&mut self, probs: &[f64]) -> Result<()> {
        self.update_weighted(probs, 1.0)
    }

    /// Adds one observation carrying weight `w > 0`.
    pub fn update_weighted(&mut self, probs: &[f64], w: f64) -> Result<()> {
        if probs.len() != self.mean.len() {
            return Err(Error::LengthMismatch {
                expected: self.mean.len(),
                actual: probs.len(),
            });
        }
        if !(w > 0.0 && w.is_finite()) {
            return Err(invalid("observation weight must be positive"));
        }
        self.n += 1;
        self.weight += w;
        let r = w / self.weight;
        for ((m, m2), &x) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(probs) {
            let delta = x - *m;
            *m += r * delta;
            *m2 += w * delta * (x - *m);
        }
        Ok(())
    }

    /// Combines two estimates as if their streams were concatenated.
    pub fn merge(&mut self, other: &ChannelEstimate) -> Result<()> {
        if other.n_qubits != self.n_qubits {
            return Err(Error::LengthMismatch {
                expected: self.n_qubits,
                actual: other.n_qubits,
            });
        }
        if other.n == 0 {
            return Ok(());
        }
        if self.n == 0 {
            *self = other.clone();
            return Ok(());
        }
        let w = self.weight + other.weight;
        for c in 0..self.mean.len() {
            let delta = other.mean[c] - self.mean[c];
            self.m2[c] += other.m2[c] + delta * delta * self.weight * other.weight / w;
            self.mean[c] += delta * other.weight / w;
        }
        self.n += other.n;
        self.weight = w;
        Ok(())
    }

    pub fn channel(&self) -> Result<PauliChannel> {
        if self.n == 0 {
            return Err(invalid("empty estimate"));
        }
        PauliChannel::from_weights(self.n_qubits, self.mean.clone())
    }

    /// Per-shot sample variance per class (unit weights assumed).
    pub fn sample_variance(&self) -> Vec<f64> {
        if self.n < 2 {
            return vec![0.0; self.mean.len()];
        }
        self.m2.iter().map(|m| (m / (self.weight - 1.0)).max(0.0)).collect()
    }

    /// Variance of the running mean, `sample_variance / n`.
    pub fn variance_of_mean(&self) -> Vec<f64> {
        let n = self.weight.max(1.0);
        self.sample_variance().into_iter().map(|v| v / n).collect()
    }

    pub fn stderr(&self) -> Vec<f64> {
        self.variance_of_mean().into_iter().map(f64::sqrt).collect()
    }
}

/// Where per-shot posteriors come from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum PosteriorSource {
    /// Boundary-enforced matching.
    Matching,
    /// Exact coset sums.
    Exact(Oracle),
}

/// One simulated memory shot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MemoryShot {
    /// Logical class left after applying the hard correction.
    pub residual: Pauli,
    /// Posterior over the residual class.
    pub posterior: PosteriorVector,
}

impl MemoryShot {
    pub fn failed(&self) -> bool {
        self.residual != Pauli::I
    }
}

/// Samples memory shots; shot `i` uses substream `i`, so the output does not
/// depend on the thread count.
pub fn sample_memory_shots(
    layout: &CodeLayout,
    noise: &NoiseModel,
    shots: usize,
    seed: u64,
    source: PosteriorSource,
) -> Result<Vec<MemoryShot>> {
    let decoder = Decoder::new(layout, noise)?;
    let drawn: Vec<(Syndrome, Pauli)> = (0..shots as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = RandomStream::substream(seed, domain::SHOTS, i);
            let e = noise.sample(layout, &mut rng)?;
            Ok((layout.syndrome(&e)?, layout.logical_effect(&e)?))
        })
        .collect::<Result<_>>()?;
    let syndromes: Vec<Syndrome> = drawn.iter().map(|(s, _)| s.clone()).collect();
    let decoded = map_unique(&syndromes, |s| {
        let soft = decoder.decode(s)?;
        let post = match source {
            PosteriorSource::Matching => soft.frame(),
            PosteriorSource::Exact(o) => exact_posteriors(layout, noise, s, o)?.relative_to(soft.hard),
        };
        Ok((soft.hard, post))
    })?;
    Ok(drawn
        .iter()
        .zip(decoded)
        .map(|((_, l), (hard, posterior))| MemoryShot {
            residual: l.mul(hard),
            posterior,
        })
        .collect())
}

/// Exact residual channel after hard decoding: `sum_s Pr(s) p(L * hard(s) | s)`.
/// Needs the full syndrome table, so only small codes qualify.
pub fn exact_residual_channel(layout: &CodeLayout, noise: &NoiseModel) -> Result<PosteriorVector> {
    let decoder = Decoder::new(layout, noise)?;
    let table = syndrome_class_table(layout, noise)?;
    let mut est = ChannelEstimate::new(1);
    for (k, row) in table.probs.iter().enumerate() {
        let ps: f64 = row.iter().sum();
        if ps == 0.0 {
            continue;
        }
        let soft = decoder.decode(&table.syndrome(k))?;
        let post = PosteriorVector::from_weights(*row)?.relative_to(soft.hard);
        est.update_weighted(&post.as_array(), ps)?;
    }
    let m = est.mean();
    PosteriorVector::from_weights([m[0], m[1], m[2], m[3]])
}

/// Joint distribution of `(residual, posterior)` for one memory round of a
/// small patch, tabulated over every syndrome so draws are a single lookup.
#[derive(Debug, Clone)]
pub struct PatchSampler {
    cumulative: Vec<f64>,
    outcomes: Vec<(Pauli, PosteriorVector)>,
    channel: PosteriorVector,
}

impl PatchSampler {
    pub fn new(layout: &CodeLayout, noise: &NoiseModel, source: PosteriorSource) -> Result<Self> {
        let decoder = Decoder::new(layout, noise)?;
        let table = syndrome_class_table(layout, noise)?;
        let mut cumulative = Vec::new();
        let mut outcomes = Vec::new();
        let mut acc = crate::stats::KahanSum::new();
        let mut channel = [0.0; 4];
        for (k, row) in table.probs.iter().enumerate() {
            if row.iter().sum::<f64>() == 0.0 {
                continue;
            }
            let s = table.syndrome(k);
            let soft = decoder.decode(&s)?;
            let post = match source {
                PosteriorSource::Matching => soft.frame(),
                PosteriorSource::Exact(_) => PosteriorVector::from_weights(*row)?.relative_to(soft.hard),
            };
            for (l, &w) in row.iter().enumerate() {
                if w > 0.0 {
                    let residual = Pauli::from_index(l).mul(soft.hard);
                    acc.add(w);
                    channel[residual.index()] += w;
                    cumulative.push(acc.value());
                    outcomes.push((residual, post));
                }
            }
        }
        Ok(Self {
            cumulative,
            outcomes,
            channel: PosteriorVector::from_weights(channel)?,
        })
    }

    /// Distribution of the residual class.
    pub fn channel(&self) -> PosteriorVector {
        self.channel
    }

    pub fn sample(&self, rng: &mut RandomStream) -> (Pauli, PosteriorVector) {
        let total = *self.cumulative.last().unwrap();
        let u = rng.uniform() * total;
        let i = self.cumulative.partition_point(|&c| c <= u).min(self.outcomes.len() - 1);
        self.outcomes[i]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarianceComparison {
    pub shots: usize,
    pub mean_soft: [f64; 4],
    pub mean_hard: [f64; 4],
    /// Variance of each estimator's mean.
    pub var_soft: [f64; 4],
    pub var_hard: [f64; 4],
}

fn four(v: &[f64]) -> [f64; 4] {
    [v[0], v[1], v[2], v[3]]
}

/// Soft (posterior mean) and hard (indicator mean) estimators evaluated on
/// the same sampled syndromes.
pub fn soft_vs_hard_variance(
    layout: &CodeLayout,
    noise: &NoiseModel,
    shots: usize,
    seed: u64,
    source: PosteriorSource,
) -> Result<VarianceComparison> {
    if shots < 2 {
        return Err(invalid("variance comparison needs at least 2 shots"));
    }
    let samples = sample_memory_shots(layout, noise, shots, seed, source)?;
    let mut soft = ChannelEstimate::new(1);
    let mut hard = ChannelEstimate::new(1);
    for s in &samples {
        soft.update(&s.posterior)?;
        hard.update(&PosteriorVector::certain(s.residual))?;
    }
    Ok(VarianceComparison {
        shots,
        mean_soft: four(soft.mean()),
        mean_hard: four(hard.mean()),
        var_soft: four(&soft.variance_of_mean()),
        var_hard: four(&hard.variance_of_mean()),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TracePoint {
    pub n: u64,
    pub estimate: [f64; 4],
    pub stderr: [f64; 4],
}

/// Checkpoints 1, 2, 5, 10, 20, 50, ... below `shots`, then `shots` itself.
pub fn log_checkpoints(shots: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut decade = 1u64;
    'outer: loop {
        for m in [1, 2, 5] {
            let c = m * decade;
            if c >= shots {
                break 'outer;
            }
            out.push(c);
        }
        decade *= 10;
    }
    out.push(shots);
    out
}

/// Running soft estimate at logarithmically spaced shot counts.
pub fn convergence_trace(
    layout: &CodeLayout,
    noise: &NoiseModel,
    shots: usize,
    seed: u64,
    source: PosteriorSource,
) -> Result<Vec<TracePoint>> {
    if shots == 0 {
        return Err(invalid("convergence trace needs at least one shot"));
    }
    let samples = sample_memory_shots(layout, noise, shots, seed, source)?;
    let checkpoints = log_checkpoints(shots as u64);
    let mut est = ChannelEstimate::new(1);
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut next = 0;
    for s in &samples {
        est.update(&s.posterior)?;
        if est.n() == checkpoints[next] {
            out.push(TracePoint {
                n: est.n(),
                estimate: four(est.mean()),
                stderr: four(&est.stderr()),
            });
            next += 1;
        }
    }
    Ok(out)
}

/// Warm-up stopping rule: after at least `min_shots`, every class estimate
/// moved by less than `rel_tol` (relative) over the most recent half of the
/// shots.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabilizationRule {
    pub min_shots: u64,
    pub rel_tol: f64,
}

impl Default for StabilizationRule {
    fn default() -> Self {
        Self {
            min_shots: 1000,
            rel_tol: 0.01,
        }
    }
}

impl StabilizationRule {
    /// Compares the estimate at `n` shots with the one at `n / 2`.
    pub fn is_stable(&self, n: u64, half: &[f64], now: &[f64]) -> bool {
        if n < self.min_shots {
            return false;
        }
        half.iter().zip(now).all(|(&a, &b)| {
            if a == b {
                return true;
            }
            let scale = a.abs().max(b.abs());
            (a - b).abs() < self.rel_tol * scale
        })
    }
}

/// Applies a [`StabilizationRule`] online. Snapshots are kept at powers of
/// two, and the rule is checked whenever the count reaches one.
#[derive(Debug, Clone)]
pub struct WarmupTracker {
    rule: StabilizationRule,
    last_snapshot: Option<Vec<f64>>,
    next_check: u64,
}

impl WarmupTracker {
    pub fn new(rule: StabilizationRule) -> Self {
        Self {
            rule,
            last_snapshot: None,
            next_check: 1,
        }
    }

    /// Call after each update; returns true once the estimate is stable.
    pub fn observe(&mut self, n: u64, estimate: &[f64]) -> bool {
        if n != self.next_check {
            return false;
        }
        self.next_check *= 2;
        let stable = self
            .last_snapshot
            .as_ref()
            .is_some_and(|half| self.rule.is_stable(n, half, estimate));
        self.last_snapshot = Some(estimate.to_vec());
        stable
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn first_update_sets_mean() {
        let mut e = ChannelEstimate::new(1);
        let v = PosteriorVector::new([0.9, 0.1, 0.0, 0.0]).unwrap();
        e.update(&v).unwrap();
        assert_eq!(e.n(), 1);
        assert_eq!(e.mean(), &[0.9, 0.1, 0.0, 0.0]);
    }

    #[test]
    fn two_updates_average() {
        let mut e = ChannelEstimate::new(1);
        e.update_probs(&[0.9, 0.1, 0.0, 0.0]).unwrap();
        e.update_probs(&[0.7, 0.3, 0.0, 0.0]).unwrap();
        let m = e.mean();
        assert!((m[0] - 0.8).abs() < 1e-15 && (m[1] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch() {
        let mut e = ChannelEstimate::new(2);
        assert!(e.update_probs(&[1.0, 0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn exhaustive_stream_reproduces_exact_channel() {
        let l = CodeLayout::planar(3).unwrap();
        let noise = NoiseModel::depolarizing(0.05).unwrap();
        let table = syndrome_class_table(&l, &noise).unwrap();
        let mut est = ChannelEstimate::new(1);
        for row in &table.probs {
            let ps: f64 = row.iter().sum();
            if ps > 0.0 {
                let post = PosteriorVector::from_weights(*row).unwrap();
                est.update_weighted(&post.as_array(), ps).unwrap();
            }
        }
        let exact = table.class_marginal();
        for c in 0..4 {
            assert!((est.mean()[c] - exact[c]).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_noise_has_zero_variance() {
        let l = CodeLayout::planar(3).unwrap();
        let noise = NoiseModel::depolarizing(0.0).unwrap();
        let r = soft_vs_hard_variance(&l, &noise, 50, 3, PosteriorSource::Matching).unwrap();
        assert_eq!(r.var_soft, [0.0; 4]);
        assert_eq!(r.var_hard, [0.0; 4]);
    }

    #[test]
    fn soft_variance_not_above_hard() {
        let l = CodeLayout::planar(3).unwrap();
        let noise = NoiseModel::depolarizing(0.03).unwrap();
        let r = soft_vs_hard_variance(&l, &noise, 5000, 11, PosteriorSource::Exact(Oracle::Enumerate)).unwrap();
        for c in 0..4 {
            assert!(r.var_soft[c] <= r.var_hard[c], "{r:?}");
        }
    }

    #[test]
    fn trace_ends_at_full_fold() {
        let l = CodeLayout::planar(3).unwrap();
        let noise = NoiseModel::depolarizing(0.02).unwrap();
        let trace = convergence_trace(&l, &noise, 300, 5, PosteriorSource::Matching).unwrap();
        let shots = sample_memory_shots(&l, &noise, 300, 5, PosteriorSource::Matching).unwrap();
        let mut e = ChannelEstimate::new(1);
        for s in &shots {
            e.update(&s.posterior).unwrap();
        }
        let last = trace.last().unwrap();
        assert_eq!(last.n, 300);
        assert_eq!(last.estimate.to_vec(), e.mean().to_vec());
        assert_eq!(trace.iter().map(|t| t.n).collect::<Vec<_>>(), vec![1, 2, 5, 10, 20, 50, 100, 200, 300]);
    }

    #[test]
    fn exact_residual_channel_matches_sampling() {
        let l = CodeLayout::planar(3).unwrap();
        let noise = NoiseModel::depolarizing(0.05).unwrap();
        let ch = exact_residual_channel(&l, &noise).unwrap();
        let shots = sample_memory_shots(&l, &noise, 20_000, 9, PosteriorSource::Matching).unwrap();
        let fail = shots.iter().filter(|s| s.failed()).count() as f64 / 20_000.0;
        let p = ch.error_probability();
        assert!((fail - p).abs() < 5.0 * (p * (1.0 - p) / 20_000.0).sqrt());
    }

    #[test]
    fn patch_sampler_channel_is_exact_residual_channel() {
        let l = CodeLayout::planar(3).unwrap();
        let noise = NoiseModel::depolarizing(0.05).unwrap();
        let ps = PatchSampler::new(&l, &noise, PosteriorSource::Matching).unwrap();
        let ch = exact_residual_channel(&l, &noise).unwrap();
        for c in 0..4 {
            assert!((ps.channel().as_array()[c] - ch.as_array()[c]).abs() < 1e-12);
        }
        let mut rng = RandomStream::new(2);
        let n = 50_000;
        let fails = (0..n).filter(|_| ps.sample(&mut rng).0 != Pauli::I).count() as f64 / n as f64;
        let p = ch.error_probability();
        assert!((fails - p).abs() < 5.0 * (p * (1.0 - p) / n as f64).sqrt());
    }

    #[test]
    fn stabilization_rule() {
        let rule = StabilizationRule::default();
        assert!(!rule.is_stable(999, &[0.5, 0.5], &[0.5, 0.5]));
        assert!(rule.is_stable(1000, &[0.5, 0.5], &[0.501, 0.499]));
        assert!(!rule.is_stable(1000, &[0.5, 0.0], &[0.5, 1e-6]));
        let mut t = WarmupTracker::new(rule);
        let mut fired = None;
        for n in 1..=5000u64 {
            if t.observe(n, &[0.9, 0.1]) {
                fired = Some(n);
                break;
            }
        }
        assert_eq!(fired, Some(1024));
    }

    fn posterior() -> impl Strategy<Value = [f64; 4]> {
        prop::array::uniform4(0.0f64..1.0).prop_filter_map("zero", |w| {
            let s: f64 = w.iter().sum();
            (s > 1e-3).then(|| w.map(|x| x / s))
        })
    }

    proptest! {
        #[test]
        fn mean_is_order_independent(mut xs in prop::collection::vec(posterior(), 1..40), seed in any::<u64>()) {
            let mut a = ChannelEstimate::new(1);
            for x in &xs { a.update_probs(x).unwrap(); }
            let mut rng = RandomStream::new(seed);
            for i in (1..xs.len()).rev() { xs.swap(i, rng.below(i + 1)); }
            let mut b = ChannelEstimate::new(1);
            for x in &xs { b.update_probs(x).unwrap(); }
            for c in 0..4 { prop_assert!((a.mean()[c] - b.mean()[c]).abs() < 1e-12); }
        }

        #[test]
        fn merge_matches_concatenation(xs in prop::collection::vec(posterior(), 2..40), cut in 0usize..40) {
            let cut = cut % xs.len();
            let mut whole = ChannelEstimate::new(1);
            let (mut l, mut r) = (ChannelEstimate::new(1), ChannelEstimate::new(1));
            for (i, x) in xs.iter().enumerate() {
                whole.update_probs(x).unwrap();
                if i < cut { l.update_probs(x).unwrap() } else { r.update_probs(x).unwrap() }
            }
            l.merge(&r).unwrap();
            prop_assert_eq!(l.n(), whole.n());
            let (vl, vw) = (l.sample_variance(), whole.sample_variance());
            for c in 0..4 {
                prop_assert!((l.mean()[c] - whole.mean()[c]).abs() < 1e-12);
                prop_assert!((vl[c] - vw[c]).abs() < 1e-12);
            }
        }
    }
}
