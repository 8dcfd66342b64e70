//! Soft-information post-selection and runtime abort.

use serde::{Deserialize, Serialize};

use crate::channel::PosteriorVector;
use crate::error::{invalid, Result};
use crate::estimator::MemoryShot;
use crate::rng::{domain, RandomStream};
use crate::stats::KahanSum;

/// Per-shot record: one posterior per logical gate plus the observed outcome.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShotRecord {
    pub per_gate_posteriors: Vec<PosteriorVector>,
    /// `+1` or `-1`; `-1` marks a logical failure in simulation.
    pub outcome: i8,
    pub aborted_at: Option<usize>,
}

impl ShotRecord {
    pub fn new(per_gate_posteriors: Vec<PosteriorVector>, outcome: i8) -> Result<Self> {
        if outcome != 1 && outcome != -1 {
            return Err(invalid("outcome must be +1 or -1"));
        }
        Ok(Self {
            per_gate_posteriors,
            outcome,
            aborted_at: None,
        })
    }

    /// A memory experiment as a one-gate shot.
    pub fn from_memory(shot: &MemoryShot) -> Self {
        Self {
            per_gate_posteriors: vec![shot.posterior],
            outcome: if shot.failed() { -1 } else { 1 },
            aborted_at: None,
        }
    }

    pub fn failed(&self) -> bool {
        self.outcome < 0
    }

    pub fn accumulated_error(&self) -> f64 {
        self.per_gate_posteriors.iter().map(|p| p.error_probability()).sum()
    }

    pub fn max_error(&self) -> f64 {
        self.per_gate_posteriors
            .iter()
            .map(|p| p.error_probability())
            .fold(0.0, f64::max)
    }

    /// First gate index at which the running sum exceeds `tau_abort`.
    pub fn first_abort(&self, tau_abort: f64) -> Option<usize> {
        let mut acc = 0.0;
        for (g, p) in self.per_gate_posteriors.iter().enumerate() {
            acc += p.error_probability();
            if abort_decision(acc, tau_abort) {
                return Some(g);
            }
        }
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionMode {
    MaxPerGate,
    AccumulatedSum,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SelectionPolicy {
    pub mode: SelectionMode,
    pub tau: f64,
}

impl SelectionPolicy {
    pub fn new(mode: SelectionMode, tau: f64) -> Result<Self> {
        if !(tau >= 0.0) {
            return Err(invalid("threshold must be non-negative"));
        }
        Ok(Self { mode, tau })
    }

    pub fn score(&self, shot: &ShotRecord) -> f64 {
        match self.mode {
            SelectionMode::MaxPerGate => shot.max_error(),
            SelectionMode::AccumulatedSum => shot.accumulated_error(),
        }
    }

    pub fn keeps(&self, shot: &ShotRecord) -> bool {
        self.score(shot) <= self.tau
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Selection {
    pub kept: Vec<usize>,
    pub discard_rate: f64,
    pub kept_mean_accumulated: f64,
}

/// Discards shot `i` when its score strictly exceeds `tau`.
pub fn postselect(shots: &[ShotRecord], policy: SelectionPolicy) -> Result<Selection> {
    if shots.is_empty() {
        return Err(invalid("no shots to post-select"));
    }
    let kept: Vec<usize> = (0..shots.len()).filter(|&i| policy.keeps(&shots[i])).collect();
    let mut acc = KahanSum::new();
    for &i in &kept {
        acc.add(shots[i].accumulated_error());
    }
    let kept_mean_accumulated = if kept.is_empty() {
        f64::NAN
    } else {
        acc.value() / kept.len() as f64
    };
    Ok(Selection {
        discard_rate: (shots.len() - kept.len()) as f64 / shots.len() as f64,
        kept,
        kept_mean_accumulated,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub threshold: f64,
    pub discard_rate: f64,
    pub kept_error_rate: f64,
    /// Unfiltered error rate over kept error rate; infinite when no kept
    /// shot failed.
    pub ratio: f64,
    pub stderr: f64,
}

/// Improvement ratio against discard rate. Errors are counted from ground
/// truth outcomes, so this is a simulation-only diagnostic.
pub fn improvement_curve(shots: &[ShotRecord], mode: SelectionMode, thresholds: &[f64]) -> Result<Vec<CurvePoint>> {
    if shots.is_empty() {
        return Err(invalid("no shots to post-select"));
    }
    let n = shots.len() as f64;
    let mut scored: Vec<(f64, bool)> = shots
        .iter()
        .map(|s| {
            let score = match mode {
                SelectionMode::MaxPerGate => s.max_error(),
                SelectionMode::AccumulatedSum => s.accumulated_error(),
            };
            (score, s.failed())
        })
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    // prefix failure counts over shots sorted by score
    let mut prefix = Vec::with_capacity(scored.len() + 1);
    prefix.push(0usize);
    for &(_, f) in &scored {
        prefix.push(prefix.last().unwrap() + f as usize);
    }
    let total_fail = *prefix.last().unwrap() as f64;
    let base = total_fail / n;
    thresholds
        .iter()
        .map(|&tau| {
            SelectionPolicy::new(mode, tau)?;
            let k = scored.partition_point(|&(s, _)| s <= tau);
            let kept_fail = prefix[k] as f64;
            let kept_rate = if k == 0 { f64::NAN } else { kept_fail / k as f64 };
            let ratio = base / kept_rate;
            let stderr = if kept_fail > 0.0 && total_fail > 0.0 {
                let rel2 = (1.0 - kept_rate) / kept_fail + (1.0 - base) / total_fail;
                ratio * rel2.sqrt()
            } else {
                f64::NAN
            };
            Ok(CurvePoint {
                threshold: tau,
                discard_rate: (scored.len() - k) as f64 / n,
                kept_error_rate: kept_rate,
                ratio,
                stderr,
            })
        })
        .collect()
}

/// Abort when the accumulated error estimate strictly exceeds the threshold.
pub fn abort_decision(accumulated: f64, tau_abort: f64) -> bool {
    accumulated > tau_abort
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AbortSavings {
    pub n: u64,
    pub p: f64,
    /// `E[N - K | abort]` with `K` the geometric abort step.
    pub expected_saved: f64,
    pub abort_probability: f64,
}

/// `-ln(1 - p) - p`, accurate for small `p`.
fn log1m_excess(p: f64) -> f64 {
    if p < 0.05 {
        let mut term = p * p;
        let mut s = 0.0;
        for k in 2..40 {
            s += term / k as f64;
            term *= p;
        }
        s
    } else {
        -(-p).ln_1p() - p
    }
}

/// `1/x - 1/(e^x - 1)`.
fn bernoulli_gap(x: f64) -> f64 {
    if x < 0.1 {
        let x2 = x * x;
        0.5 - x / 12.0 + x * x2 / 720.0 - x * x2 * x2 / 30240.0 + x * x2 * x2 * x2 / 1209600.0
    } else {
        1.0 / x - 1.0 / x.exp_m1()
    }
}

/// Closed-form expected saved steps given an abort, for `N` steps with an
/// independent abort probability `p` per step.
///
/// Evaluated as `N - E[K]` with
/// `E[K] = (1/p - 1/L) + N (1/x - 1/(e^x - 1))`, `L = -ln(1-p)`, `x = N L`,
/// which is algebraically the geometric-series formula but free of the
/// cancellations that formula suffers when `pN` is small.
pub fn expected_saved_steps(n: u64, p: f64) -> Result<AbortSavings> {
    if n == 0 {
        return Err(invalid("step count must be at least 1"));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(invalid("abort probability must lie in (0, 1)"));
    }
    let nf = n as f64;
    let l = -(-p).ln_1p();
    let x = nf * l;
    let a = log1m_excess(p) / (p * l);
    let ek = a + nf * bernoulli_gap(x);
    Ok(AbortSavings {
        n,
        p,
        expected_saved: nf - ek,
        abort_probability: -(-x).exp_m1(),
    })
}

/// `sum_k (N - k) Pr(K = k | abort)` term by term.
pub fn expected_saved_steps_direct(n: u64, p: f64) -> Result<f64> {
    if n == 0 || !(p > 0.0 && p < 1.0) {
        return Err(invalid("need N >= 1 and p in (0, 1)"));
    }
    let lq = (-p).ln_1p();
    let mut num = KahanSum::new();
    let mut den = KahanSum::new();
    for k in 1..=n {
        let pk = p * ((k - 1) as f64 * lq).exp();
        num.add((n - k) as f64 * pk);
        den.add(pk);
    }
    Ok(num.value() / den.value())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AbortSimulation {
    pub trials: u64,
    pub aborted: u64,
    pub mean_saved: f64,
    pub stderr: f64,
}

/// Monte Carlo of the abort model: each of `N` steps aborts independently
/// with probability `p`.
pub fn simulate_abort(n: u64, p: f64, trials: u64, seed: u64) -> Result<AbortSimulation> {
    if n == 0 || !(p > 0.0 && p < 1.0) {
        return Err(invalid("need N >= 1 and p in (0, 1)"));
    }
    let lq = (-p).ln_1p();
    let mut saved = Vec::new();
    for t in 0..trials {
        let mut rng = RandomStream::substream(seed, domain::SHOTS, t);
        // geometric first-failure step by inversion
        let u = 1.0 - rng.uniform();
        let k = (u.ln() / lq).floor() as u64 + 1;
        if k <= n {
            saved.push((n - k) as f64);
        }
    }
    Ok(AbortSimulation {
        trials,
        aborted: saved.len() as u64,
        mean_saved: crate::stats::mean(&saved),
        stderr: crate::stats::std_error(&saved),
    })
}

/// Fraction of memory shots whose error posterior exceeds `tau`; the
/// per-step abort probability of the abort model.
pub fn exceedance_rate(shots: &[MemoryShot], tau: f64) -> f64 {
    if shots.is_empty() {
        return f64::NAN;
    }
    let k = shots
        .iter()
        .filter(|s| abort_decision(s.posterior.error_probability(), tau))
        .count();
    k as f64 / shots.len() as f64
}

pub const HISTOGRAM_BIN_WIDTH: f64 = 0.25;
/// Cap for `-log10` of a zero error posterior.
pub const MAX_CONFIDENCE: f64 = 16.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub successes: u64,
    pub failures: u64,
}

/// `-log10(1 - p(I))`, capped at [`MAX_CONFIDENCE`].
pub fn confidence(p: &PosteriorVector) -> f64 {
    let e = p.error_probability();
    if e <= 0.0 {
        MAX_CONFIDENCE
    } else {
        (-e.log10()).min(MAX_CONFIDENCE)
    }
}

/// Histogram of per-shot confidence, split by ground-truth success.
pub fn confidence_histogram(shots: &[MemoryShot], bin_width: f64) -> Result<Vec<HistogramBin>> {
    if !(bin_width > 0.0) {
        return Err(invalid("bin width must be positive"));
    }
    let nbins = (MAX_CONFIDENCE / bin_width).ceil() as usize + 1;
    let mut bins: Vec<HistogramBin> = (0..nbins)
        .map(|i| HistogramBin {
            lo: i as f64 * bin_width,
            hi: (i + 1) as f64 * bin_width,
            successes: 0,
            failures: 0,
        })
        .collect();
    for s in shots {
        let c = confidence(&s.posterior).max(0.0);
        let b = ((c / bin_width).floor() as usize).min(nbins - 1);
        if s.failed() {
            bins[b].failures += 1;
        } else {
            bins[b].successes += 1;
        }
    }
    while bins.last().is_some_and(|b| b.successes + b.failures == 0) {
        bins.pop();
    }
    Ok(bins)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn shot(errs: &[f64], outcome: i8) -> ShotRecord {
        let ps = errs
            .iter()
            .map(|&e| PosteriorVector::new([1.0 - e, e, 0.0, 0.0]).unwrap())
            .collect();
        ShotRecord::new(ps, outcome).unwrap()
    }

    #[test]
    fn infinite_threshold_keeps_all() {
        let shots = vec![shot(&[0.3], -1), shot(&[0.0], 1)];
        let pol = SelectionPolicy::new(SelectionMode::MaxPerGate, f64::INFINITY).unwrap();
        let sel = postselect(&shots, pol).unwrap();
        assert_eq!(sel.kept, vec![0, 1]);
        assert_eq!(sel.discard_rate, 0.0);
    }

    #[test]
    fn zero_threshold_discards_any_error() {
        let shots = vec![shot(&[0.0, 1e-9], 1), shot(&[0.0, 0.0], 1)];
        let pol = SelectionPolicy::new(SelectionMode::AccumulatedSum, 0.0).unwrap();
        let sel = postselect(&shots, pol).unwrap();
        assert_eq!(sel.kept, vec![1]);
        assert_eq!(sel.discard_rate, 0.5);
    }

    #[test]
    fn empty_input_is_an_error() {
        let pol = SelectionPolicy::new(SelectionMode::MaxPerGate, 1.0).unwrap();
        assert!(postselect(&[], pol).is_err());
        assert!(SelectionPolicy::new(SelectionMode::MaxPerGate, -1.0).is_err());
    }

    #[test]
    fn loosest_point_has_unit_ratio() {
        let shots = vec![shot(&[0.3], -1), shot(&[0.01], 1), shot(&[0.2], 1)];
        let c = improvement_curve(&shots, SelectionMode::AccumulatedSum, &[f64::INFINITY, 0.25]).unwrap();
        assert_eq!(c[0].discard_rate, 0.0);
        assert_eq!(c[0].ratio, 1.0);
        assert!((c[1].discard_rate - 1.0 / 3.0).abs() < 1e-15);
        assert!(c[1].ratio.is_infinite());
    }

    #[test]
    fn abort_is_strict() {
        assert!(!abort_decision(0.0, 0.5));
        assert!(abort_decision(0.6, 0.5));
        assert!(!abort_decision(0.5, 0.5));
        assert_eq!(shot(&[0.2, 0.3, 0.1], 1).first_abort(0.5), Some(2));
        assert_eq!(shot(&[0.2, 0.3], 1).first_abort(0.5), None);
    }

    #[test]
    fn single_step_saves_nothing() {
        for p in [1e-9, 0.3, 0.999] {
            assert!(expected_saved_steps(1, p).unwrap().expected_saved.abs() < 1e-12);
        }
    }

    #[test]
    fn savings_limits() {
        let a = expected_saved_steps(100, 1e-6).unwrap().expected_saved;
        assert!((a - 49.5).abs() < 0.01 * 49.5);
        let b = expected_saved_steps(1000, 0.01).unwrap().expected_saved;
        assert!((b - 900.0).abs() < 0.01 * 900.0);
        assert!(expected_saved_steps(10, 0.0).is_err());
        assert!(expected_saved_steps(10, 1.0).is_err());
    }

    #[test]
    fn closed_form_matches_direct_sum() {
        for n in [1u64, 2, 3, 7, 10, 99, 100, 1000, 4321, 10_000] {
            for p in [1e-9, 1e-6, 1e-4, 1e-3, 0.01, 0.1, 0.5, 0.9] {
                let c = expected_saved_steps(n, p).unwrap().expected_saved;
                let d = expected_saved_steps_direct(n, p).unwrap();
                assert!((c - d).abs() < 1e-10, "N={n} p={p}: {c} vs {d}");
            }
        }
    }

    #[test]
    fn monte_carlo_agrees_with_closed_form() {
        let sim = simulate_abort(200, 0.005, 200_000, 4).unwrap();
        let c = expected_saved_steps(200, 0.005).unwrap();
        assert!((sim.mean_saved - c.expected_saved).abs() < 5.0 * sim.stderr);
        let frac = sim.aborted as f64 / sim.trials as f64;
        let se = crate::stats::binomial_stderr(c.abort_probability, 200_000);
        assert!((frac - c.abort_probability).abs() < 5.0 * se);
    }

    #[test]
    fn histogram_bins() {
        let mk = |e: f64, fail| MemoryShot {
            residual: if fail { crate::Pauli::X } else { crate::Pauli::I },
            posterior: PosteriorVector::new([1.0 - e, e, 0.0, 0.0]).unwrap(),
        };
        let shots = vec![mk(0.01, false), mk(0.011, true), mk(0.5, true)];
        let h = confidence_histogram(&shots, HISTOGRAM_BIN_WIDTH).unwrap();
        assert_eq!(h.len(), 9);
        assert_eq!((h[1].successes, h[1].failures), (0, 1));
        assert_eq!((h[7].successes, h[7].failures), (0, 1));
        assert_eq!((h[8].successes, h[8].failures), (1, 0));
    }

    proptest! {
        #[test]
        fn max_policy_is_nested(errs in prop::collection::vec(prop::collection::vec(0.0f64..0.5, 1..5), 1..30),
                                t1 in 0.0f64..0.6, t2 in 0.0f64..0.6) {
            let shots: Vec<_> = errs.iter().map(|e| shot(e, 1)).collect();
            let (lo, hi) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
            let a = postselect(&shots, SelectionPolicy::new(SelectionMode::MaxPerGate, lo).unwrap()).unwrap();
            let b = postselect(&shots, SelectionPolicy::new(SelectionMode::MaxPerGate, hi).unwrap()).unwrap();
            prop_assert!(a.kept.iter().all(|i| b.kept.contains(i)));
        }

        #[test]
        fn closed_form_tracks_direct(n in 1u64..3000, lp in -8.0f64..-0.05) {
            let p = 10f64.powf(lp);
            let c = expected_saved_steps(n, p).unwrap().expected_saved;
            let d = expected_saved_steps_direct(n, p).unwrap();
            prop_assert!((c - d).abs() < 1e-10);
        }
    }
}
