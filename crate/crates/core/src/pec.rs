//! Probabilistic error cancellation on logical Clifford circuits.
//!
//! Circuits are simulated in the Pauli-frame picture. Every gate is followed
//! by a Pauli error on its targets and, when mitigating, by a sampled
//! quasi-probability insertion. Because errors only ever flip the sign of a
//! Pauli observable, an error `E` after gate `g` flips the outcome iff it
//! anticommutes with the observable pulled back to just after `g`. The
//! pipelines use that pulled-back observable directly; [`simulate_logical_shot`]
//! propagates the frame gate by gate and the two are checked against each
//! other in the tests.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{character, class_anticommutes, class_string, walsh_hadamard, PauliChannel};
use crate::error::{invalid, Error, Result};
use crate::estimator::{ChannelEstimate, PatchSampler, StabilizationRule, WarmupTracker};
use crate::pauli::{CliffordGate, Pauli, PauliString};
use crate::rng::{domain, RandomStream};
use crate::stats::{self, KahanSum};

/// Floor applied to estimated class probabilities before inversion.
pub const ESTIMATE_FLOOR: f64 = 1e-12;
/// Shots per deterministic work block.
const BLOCK: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuasiProbDecomposition {
    n_qubits: usize,
    eta: Vec<f64>,
    gamma: f64,
    #[serde(skip)]
    cumulative: Vec<f64>,
}

impl QuasiProbDecomposition {
    fn from_eta(n_qubits: usize, eta: Vec<f64>) -> Self {
        let gamma: f64 = eta.iter().map(|e| e.abs()).sum();
        let mut acc = 0.0;
        let cumulative = eta
            .iter()
            .map(|e| {
                acc += e.abs() / gamma;
                acc
            })
            .collect();
        Self {
            n_qubits,
            eta,
            gamma,
            cumulative,
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn eta(&self) -> &[f64] {
        &self.eta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Draws a class index with probability `|eta| / gamma` and its sign.
    pub fn sample_class(&self, rng: &mut RandomStream) -> (usize, f64) {
        let u = rng.uniform();
        let i = self
            .cumulative
            .partition_point(|&c| c <= u)
            .min(self.eta.len() - 1);
        // skip zero-weight classes that a rounding edge could land on
        let i = (i..self.eta.len()).find(|&j| self.eta[j] != 0.0).unwrap_or(i);
        (i, if self.eta[i] < 0.0 { -1.0 } else { 1.0 })
    }
}

/// Channel inverse as a signed Pauli mixture via the character transform.
pub fn invert_pauli_channel(ch: &PauliChannel) -> Result<QuasiProbDecomposition> {
    let n = ch.n_qubits();
    let lambda = ch.eigenvalues();
    for (i, &l) in lambda.iter().enumerate() {
        if l.abs() < 1e-14 {
            return Err(Error::NonInvertible { index: i, value: l });
        }
    }
    let inv: Vec<f64> = lambda.iter().map(|l| 1.0 / l).collect();
    let scale = 1.0 / lambda.len() as f64;
    let eta = walsh_hadamard(&inv, n).into_iter().map(|x| x * scale).collect();
    Ok(QuasiProbDecomposition::from_eta(n, eta))
}

/// Inverts a finite-shot estimate after flooring tiny entries.
pub fn invert_estimated(ch: &PauliChannel) -> Result<QuasiProbDecomposition> {
    invert_pauli_channel(&ch.clipped(ESTIMATE_FLOOR))
}

pub fn sample_insertion(q: &QuasiProbDecomposition, rng: &mut RandomStream) -> (PauliString, i8) {
    let (c, s) = q.sample_class(rng);
    (class_string(c, q.n_qubits), s as i8)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
struct Frame {
    x: u64,
    z: u64,
}

impl Frame {
    fn from_string(p: &PauliString) -> Self {
        let mut f = Frame::default();
        for (q, pq) in p.support() {
            f.x |= (pq.x() as u64) << q;
            f.z |= (pq.z() as u64) << q;
        }
        f
    }

    fn conjugate(&mut self, g: &CliffordGate) {
        match *g {
            CliffordGate::H(q) => {
                let (x, z) = (self.x >> q & 1, self.z >> q & 1);
                self.x ^= (x ^ z) << q;
                self.z ^= (x ^ z) << q;
            }
            CliffordGate::S(q) => self.z ^= (self.x >> q & 1) << q,
            CliffordGate::Cnot { control, target } => {
                self.x ^= (self.x >> control & 1) << target;
                self.z ^= (self.z >> target & 1) << control;
            }
            CliffordGate::Pauli(..) => {}
        }
    }

    /// Multiplies in gate-local class `c` on `targets` (first target most
    /// significant).
    fn apply_class(&mut self, c: usize, targets: &[usize]) {
        let k = targets.len();
        for (j, &q) in targets.iter().enumerate() {
            let p = Pauli::from_index(c >> (2 * (k - 1 - j)) & 3);
            self.x ^= (p.x() as u64) << q;
            self.z ^= (p.z() as u64) << q;
        }
    }

    fn local_class(&self, targets: &[usize]) -> usize {
        targets.iter().fold(0, |acc, &q| {
            acc * 4 + Pauli::from_bits(self.x >> q & 1 == 1, self.z >> q & 1 == 1).index()
        })
    }

    fn anticommutes(&self, o: &Frame) -> bool {
        ((self.x & o.z) ^ (self.z & o.x)).count_ones() % 2 == 1
    }
}

/// Clifford circuit on logical qubits with a Pauli channel after every gate.
#[derive(Debug, Clone)]
pub struct LogicalCircuit {
    n_logical: usize,
    gates: Vec<CliffordGate>,
    observable: PauliString,
    noise: Vec<PauliChannel>,
    patch: Option<Arc<PatchSampler>>,
    /// Observable pulled back to just after each gate, restricted to its targets.
    pulled_back: Vec<usize>,
    targets: Vec<Vec<usize>>,
}

impl LogicalCircuit {
    /// The ideal value of `observable` is taken to be `+1`.
    pub fn new(
        n_logical: usize,
        gates: Vec<CliffordGate>,
        observable: PauliString,
        noise: Vec<PauliChannel>,
    ) -> Result<Self> {
        if n_logical == 0 || n_logical > 64 {
            return Err(invalid("logical qubit count must be in 1..=64"));
        }
        if observable.len() != n_logical {
            return Err(Error::LengthMismatch {
                expected: n_logical,
                actual: observable.len(),
            });
        }
        if noise.len() != gates.len() {
            return Err(Error::LengthMismatch {
                expected: gates.len(),
                actual: noise.len(),
            });
        }
        let targets: Vec<Vec<usize>> = gates.iter().map(|g| g.targets()).collect();
        for (g, t) in targets.iter().enumerate() {
            if let Some(&q) = t.iter().find(|&&q| q >= n_logical) {
                return Err(Error::OutOfRange { index: q, n: n_logical });
            }
            if t.len() == 2 && t[0] == t[1] {
                return Err(invalid(format!("gate {g} repeats a qubit")));
            }
            if noise[g].n_qubits() != t.len() {
                return Err(invalid(format!("gate {g}: channel arity does not match gate")));
            }
        }
        let mut cur = Frame::from_string(&observable);
        let mut pulled_back = vec![0; gates.len()];
        for g in (0..gates.len()).rev() {
            pulled_back[g] = cur.local_class(&targets[g]);
            // phase-free conjugation by H, S and CNOT is an involution
            cur.conjugate(&gates[g]);
        }
        Ok(Self {
            n_logical,
            gates,
            observable,
            noise,
            patch: None,
            pulled_back,
            targets,
        })
    }

    /// Every gate target suffers one independent memory round of `patch`;
    /// the per-gate channel is the tensor power of the patch channel.
    pub fn with_patch_noise(
        n_logical: usize,
        gates: Vec<CliffordGate>,
        observable: PauliString,
        patch: Arc<PatchSampler>,
    ) -> Result<Self> {
        let one = patch.channel().to_channel();
        let noise = gates
            .iter()
            .map(|g| (1..g.arity()).fold(one.clone(), |acc, _| acc.tensor(&one)))
            .collect();
        let mut c = Self::new(n_logical, gates, observable, noise)?;
        c.patch = Some(patch);
        Ok(c)
    }

    pub fn n_logical(&self) -> usize {
        self.n_logical
    }

    pub fn gates(&self) -> &[CliffordGate] {
        &self.gates
    }

    pub fn observable(&self) -> &PauliString {
        &self.observable
    }

    pub fn noise(&self) -> &[PauliChannel] {
        &self.noise
    }

    pub fn has_soft_information(&self) -> bool {
        self.patch.is_some()
    }

    /// Flip probability of each gate's channel against the pulled-back
    /// observable.
    pub fn flip_probabilities(&self) -> Vec<f64> {
        self.noise
            .iter()
            .zip(&self.pulled_back)
            .map(|(ch, &o)| ch.flip_probability(o))
            .collect()
    }

    /// Noisy expectation `prod_g (1 - 2 p_flip,g)`.
    pub fn analytic_expectation(&self) -> f64 {
        self.flip_probabilities().iter().map(|p| 1.0 - 2.0 * p).product()
    }

    fn gate_samplers(&self) -> Vec<Vec<f64>> {
        self.noise
            .iter()
            .map(|ch| {
                let mut acc = 0.0;
                ch.probs()
                    .iter()
                    .map(|p| {
                        acc += p;
                        acc
                    })
                    .collect()
            })
            .collect()
    }
}

/// Random circuit over `{H, S, CNOT}`. The observable is `Z` on every qubit
/// pushed forward through the circuit, so its ideal value on `|0...0>` is
/// `+1`.
pub fn random_clifford_circuit(
    n_logical: usize,
    n_gates: usize,
    seed: u64,
    noise: impl Fn(&CliffordGate) -> PauliChannel,
) -> Result<LogicalCircuit> {
    let gates = random_gates(n_logical, n_gates, seed)?;
    let obs = forward_observable(n_logical, &gates)?;
    let ch = gates.iter().map(&noise).collect();
    LogicalCircuit::new(n_logical, gates, obs, ch)
}

pub fn random_gates(n_logical: usize, n_gates: usize, seed: u64) -> Result<Vec<CliffordGate>> {
    if n_logical == 0 {
        return Err(invalid("need at least one logical qubit"));
    }
    let mut rng = RandomStream::substream(seed, domain::CIRCUIT, 0);
    Ok((0..n_gates)
        .map(|_| {
            let kind = if n_logical == 1 { rng.below(2) } else { rng.below(3) };
            match kind {
                0 => CliffordGate::H(rng.below(n_logical)),
                1 => CliffordGate::S(rng.below(n_logical)),
                _ => {
                    let control = rng.below(n_logical);
                    let target = (control + 1 + rng.below(n_logical - 1)) % n_logical;
                    CliffordGate::Cnot { control, target }
                }
            }
        })
        .collect())
}

pub fn forward_observable(n_logical: usize, gates: &[CliffordGate]) -> Result<PauliString> {
    let mut obs = PauliString::z_on(n_logical, 0..n_logical);
    for g in gates {
        obs.apply(g)?;
    }
    Ok(obs)
}

fn draw(cumulative: &[f64], rng: &mut RandomStream) -> usize {
    let u = rng.uniform() * cumulative[cumulative.len() - 1];
    cumulative.partition_point(|&c| c <= u).min(cumulative.len() - 1)
}

/// One shot by explicit frame propagation. `insertions[g]` is a gate-local
/// class multiplied in after gate `g`'s error. Noise is drawn from the
/// circuit's channels.
pub fn simulate_logical_shot(
    circ: &LogicalCircuit,
    insertions: Option<&[usize]>,
    rng: &mut RandomStream,
) -> Result<i8> {
    if let Some(ins) = insertions {
        if ins.len() != circ.gates.len() {
            return Err(Error::LengthMismatch {
                expected: circ.gates.len(),
                actual: ins.len(),
            });
        }
    }
    let mut frame = Frame::default();
    for (g, gate) in circ.gates.iter().enumerate() {
        frame.conjugate(gate);
        let cum: Vec<f64> = circ.noise[g]
            .probs()
            .iter()
            .scan(0.0, |a, p| {
                *a += p;
                Some(*a)
            })
            .collect();
        frame.apply_class(draw(&cum, rng), &circ.targets[g]);
        if let Some(ins) = insertions {
            frame.apply_class(ins[g], &circ.targets[g]);
        }
    }
    let obs = Frame::from_string(&circ.observable);
    Ok(if frame.anticommutes(&obs) { -1 } else { 1 })
}

/// Exhaustive expectation over every (error, insertion) pair at each gate.
/// Gates contribute independently, so the joint sum factorises.
pub fn exact_expectation(circ: &LogicalCircuit, decomps: Option<&[QuasiProbDecomposition]>) -> Result<f64> {
    if let Some(d) = decomps {
        check_decomps(circ, d)?;
    }
    let mut total = 1.0;
    for g in 0..circ.gates.len() {
        let o = circ.pulled_back[g];
        let k = circ.targets[g].len();
        let q = circ.noise[g].probs();
        let mut acc = KahanSum::new();
        for (e, &qe) in q.iter().enumerate() {
            match decomps {
                None => acc.add(qe * character(e, o, k)),
                Some(d) => {
                    for (b, &eb) in d[g].eta.iter().enumerate() {
                        // sample b with |eta|/gamma, weight gamma * sign
                        let pb = eb.abs() / d[g].gamma;
                        let w = d[g].gamma * eb.signum();
                        acc.add(qe * pb * w * character(e ^ b, o, k));
                    }
                }
            }
        }
        total *= acc.value();
    }
    Ok(total)
}

fn check_decomps(circ: &LogicalCircuit, d: &[QuasiProbDecomposition]) -> Result<()> {
    if d.len() != circ.gates.len() {
        return Err(Error::LengthMismatch {
            expected: circ.gates.len(),
            actual: d.len(),
        });
    }
    for (g, q) in d.iter().enumerate() {
        if q.n_qubits != circ.targets[g].len() {
            return Err(invalid(format!("gate {g}: decomposition arity does not match gate")));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "lowercase", tag = "mode")]
pub enum PecMode {
    /// True channels inverted directly; estimation bypassed.
    Known,
    /// Warm-up then insertions from running soft-information estimates.
    Type1 {
        rule: StabilizationRule,
        /// Upper bound on warm-up shots; `None` means a tenth of the shots.
        max_warmup: Option<u64>,
    },
    /// Bare execution, channels estimated from all shots, insertions applied
    /// in post-processing.
    Type2,
}

impl PecMode {
    pub fn name(&self) -> &'static str {
        match self {
            PecMode::Known => "known",
            PecMode::Type1 { .. } => "type1",
            PecMode::Type2 => "type2",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PecResult {
    pub mode: &'static str,
    pub mitigated_mean: f64,
    pub mitigated_stderr: f64,
    pub unmitigated_mean: f64,
    pub unmitigated_stderr: f64,
    /// Product of per-gate gammas of the decompositions in use at the end.
    pub total_gamma: f64,
    pub shots_used: u64,
    pub mitigated_shots: u64,
    pub warmup_shots: u64,
    pub seed: u64,
}

/// Bare result of one shot: outcome sign and, with patch noise, the
/// per-gate posteriors.
struct BareShot {
    outcome: f64,
    posteriors: Vec<Vec<f64>>,
}

fn bare_shot(circ: &LogicalCircuit, samplers: &[Vec<f64>], seed: u64, i: u64, want_soft: bool) -> BareShot {
    let mut rng = RandomStream::substream(seed, domain::SHOTS, i);
    let mut outcome = 1.0;
    let mut posteriors = Vec::new();
    for g in 0..circ.gates.len() {
        let k = circ.targets[g].len();
        let e = match &circ.patch {
            Some(patch) => {
                let mut e = 0;
                let mut post = vec![1.0];
                for _ in 0..k {
                    let (r, p) = patch.sample(&mut rng);
                    e = e * 4 + r.index();
                    if want_soft {
                        let p = p.as_array();
                        post = post.iter().flat_map(|a| p.iter().map(move |b| a * b)).collect();
                    }
                }
                if want_soft {
                    posteriors.push(post);
                }
                e
            }
            None => draw(&samplers[g], &mut rng),
        };
        if class_anticommutes(e, circ.pulled_back[g], k) {
            outcome = -outcome;
        }
    }
    BareShot { outcome, posteriors }
}

/// Bare outcomes of `shots` noisy executions.
pub(crate) fn sample_outcomes(circ: &LogicalCircuit, shots: u64, seed: u64) -> Vec<f64> {
    let samplers = circ.gate_samplers();
    (0..shots)
        .into_par_iter()
        .map(|i| bare_shot(circ, &samplers, seed, i, false).outcome)
        .collect()
}

/// Same gates and observable with different per-gate channels.
pub(crate) fn with_noise(circ: &LogicalCircuit, noise: Vec<PauliChannel>) -> Result<LogicalCircuit> {
    LogicalCircuit::new(circ.n_logical, circ.gates.clone(), circ.observable.clone(), noise)
}

/// Sign-weighted flip factor of one shot's insertions.
fn insertion_factor(circ: &LogicalCircuit, decomps: &[QuasiProbDecomposition], seed: u64, i: u64) -> f64 {
    let mut rng = RandomStream::substream(seed, domain::INSERTIONS, i);
    let mut f = 1.0;
    for (g, d) in decomps.iter().enumerate() {
        let (b, s) = d.sample_class(&mut rng);
        f *= s * character(b, circ.pulled_back[g], circ.targets[g].len());
    }
    f
}

fn total_gamma(decomps: &[QuasiProbDecomposition]) -> f64 {
    decomps.iter().map(|d| d.gamma.ln()).sum::<f64>().exp()
}

fn fresh_estimates(circ: &LogicalCircuit) -> Vec<ChannelEstimate> {
    circ.targets.iter().map(|t| ChannelEstimate::new(t.len())).collect()
}

fn decompose(estimates: &[ChannelEstimate]) -> Result<Vec<QuasiProbDecomposition>> {
    estimates.iter().map(|e| invert_estimated(&e.channel()?)).collect()
}

/// Runs shots `range` in fixed blocks; per-block estimates are merged in
/// block order, so the result does not depend on scheduling.
fn run_blocks(
    circ: &LogicalCircuit,
    samplers: &[Vec<f64>],
    seed: u64,
    range: std::ops::Range<u64>,
    decomps: Option<(&[QuasiProbDecomposition], f64)>,
    estimates: &mut [ChannelEstimate],
    bare: &mut Vec<f64>,
    mitigated: &mut Vec<f64>,
) -> Result<()> {
    let starts: Vec<u64> = range.clone().step_by(BLOCK).collect();
    let blocks: Vec<(Vec<ChannelEstimate>, Vec<f64>, Vec<f64>)> = starts
        .par_iter()
        .map(|&s| {
            let end = (s + BLOCK as u64).min(range.end);
            let mut est = fresh_estimates(circ);
            let mut b = Vec::with_capacity((end - s) as usize);
            let mut m = Vec::new();
            for i in s..end {
                let shot = bare_shot(circ, samplers, seed, i, true);
                for (e, p) in est.iter_mut().zip(&shot.posteriors) {
                    e.update_probs(p)?;
                }
                if let Some((d, gamma)) = decomps {
                    m.push(gamma * shot.outcome * insertion_factor(circ, d, seed, i));
                }
                b.push(shot.outcome);
            }
            Ok((est, b, m))
        })
        .collect::<Result<_>>()?;
    for (est, b, m) in blocks {
        for (acc, e) in estimates.iter_mut().zip(&est) {
            acc.merge(e)?;
        }
        bare.extend(b);
        mitigated.extend(m);
    }
    Ok(())
}

pub fn run_pec(circ: &LogicalCircuit, shots: u64, mode: PecMode, seed: u64) -> Result<PecResult> {
    if shots < 2 {
        return Err(invalid("PEC needs at least 2 shots"));
    }
    let samplers = circ.gate_samplers();
    let mut bare = Vec::with_capacity(shots as usize);
    let mut mitigated = Vec::with_capacity(shots as usize);
    let mut warmup_shots = 0;
    let gamma_total;
    match mode {
        PecMode::Known => {
            let decomps: Vec<_> = circ.noise.iter().map(invert_pauli_channel).collect::<Result<_>>()?;
            gamma_total = total_gamma(&decomps);
            let out: Vec<(f64, f64)> = (0..shots)
                .into_par_iter()
                .map(|i| {
                    let b = bare_shot(circ, &samplers, seed, i, false).outcome;
                    (b, gamma_total * b * insertion_factor(circ, &decomps, seed, i))
                })
                .collect();
            for (b, m) in out {
                bare.push(b);
                mitigated.push(m);
            }
        }
        PecMode::Type2 => {
            require_soft(circ)?;
            let mut est = fresh_estimates(circ);
            run_blocks(circ, &samplers, seed, 0..shots, None, &mut est, &mut bare, &mut mitigated)?;
            let decomps = decompose(&est)?;
            gamma_total = total_gamma(&decomps);
            mitigated = (0..shots)
                .into_par_iter()
                .map(|i| gamma_total * bare[i as usize] * insertion_factor(circ, &decomps, seed, i))
                .collect();
        }
        PecMode::Type1 { rule, max_warmup } => {
            require_soft(circ)?;
            if shots <= rule.min_shots {
                return Err(invalid(format!(
                    "type1 needs more than {} shots for warm-up",
                    rule.min_shots
                )));
            }
            let cap = max_warmup.unwrap_or(shots / 10).max(rule.min_shots).min(shots - 1);
            let mut est = fresh_estimates(circ);
            let mut tracker = WarmupTracker::new(rule);
            // warm-up in blocks ending at powers of two, where the rule is checked
            let mut n = 0u64;
            loop {
                let next = (n * 2).max(1).min(cap);
                run_blocks(circ, &samplers, seed, n..next, None, &mut est, &mut bare, &mut mitigated)?;
                n = next;
                let flat: Vec<f64> = est.iter().flat_map(|e| e.mean().to_vec()).collect();
                if tracker.observe(n, &flat) || n >= cap {
                    break;
                }
            }
            warmup_shots = n;
            let mut decomps = decompose(&est)?;
            let mut start = n;
            while start < shots {
                let end = (start + BLOCK as u64).min(shots);
                let g = total_gamma(&decomps);
                run_blocks(
                    circ,
                    &samplers,
                    seed,
                    start..end,
                    Some((&decomps, g)),
                    &mut est,
                    &mut bare,
                    &mut mitigated,
                )?;
                decomps = decompose(&est)?;
                start = end;
            }
            // report the gamma in force for the last block
            gamma_total = total_gamma(&decomps);
        }
    }
    Ok(PecResult {
        mode: mode.name(),
        mitigated_mean: stats::mean(&mitigated),
        mitigated_stderr: stats::std_error(&mitigated),
        unmitigated_mean: stats::mean(&bare),
        unmitigated_stderr: stats::std_error(&bare),
        total_gamma: gamma_total,
        shots_used: shots,
        mitigated_shots: mitigated.len() as u64,
        warmup_shots,
        seed,
    })
}

fn require_soft(circ: &LogicalCircuit) -> Result<()> {
    if circ.patch.is_none() {
        return Err(invalid("estimated-channel PEC needs a circuit with patch-level noise"));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Batch {
    First,
    /// Characterisation draws on `accumulated` earlier shots as well.
    Later { accumulated: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TradeoffRow {
    pub lambda: f64,
    pub bias: f64,
    pub variance: f64,
    pub mse: f64,
}

/// Shot-allocation model. A fraction `lambda` of `N` shots characterises the
/// channels, giving per-class stderr `sqrt(p(1-p)/shots_char)` and a
/// residual bias `N_G` times that; the remaining shots mitigate with variance
/// `gamma^2 / shots_mit`. In a later batch every shot mitigates and the
/// characterisation pool also holds the accumulated earlier shots.
pub fn shot_allocation_tradeoff(
    n: f64,
    lambdas: &[f64],
    n_gates: f64,
    p_avg: f64,
    gamma_total: f64,
    batch: Batch,
) -> Result<Vec<TradeoffRow>> {
    if lambdas.is_empty() || lambdas.iter().any(|&l| !(l > 0.0 && l < 1.0)) {
        return Err(invalid("lambda grid must be non-empty and inside (0, 1)"));
    }
    if !(n > 0.0 && n_gates > 0.0 && p_avg > 0.0 && p_avg < 1.0 && gamma_total >= 1.0) {
        return Err(invalid("invalid tradeoff parameters"));
    }
    Ok(lambdas
        .iter()
        .map(|&lambda| {
            let (char_shots, mit_shots) = match batch {
                Batch::First => (lambda * n, (1.0 - lambda) * n),
                Batch::Later { accumulated } => (accumulated + lambda * n, n),
            };
            let bias = n_gates * (p_avg * (1.0 - p_avg) / char_shots).sqrt();
            let variance = gamma_total * gamma_total / mit_shots;
            TradeoffRow {
                lambda,
                bias,
                variance,
                mse: bias * bias + variance,
            }
        })
        .collect())
}

/// Overhead ratio of PEC on post-selected shots against plain PEC:
/// `exp(-4 N_G p_L (1 - 1/R)) / (1 - d)^N_G`.
pub fn pec_postselect_overhead(n_gates: f64, p_l: f64, r: f64, d: f64) -> Result<f64> {
    if !(r >= 1.0) {
        return Err(invalid("improvement ratio R must be at least 1"));
    }
    if !(0.0..1.0).contains(&d) {
        return Err(invalid("discard rate must lie in [0, 1)"));
    }
    if !(n_gates >= 0.0 && p_l >= 0.0) {
        return Err(invalid("gate count and logical error rate must be non-negative"));
    }
    Ok((-4.0 * n_gates * p_l * (1.0 - 1.0 / r) - n_gates * (-d).ln_1p()).exp())
}
