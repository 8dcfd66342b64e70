use std::fs::File;
use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, ValueEnum};
use serde::Serialize;

use softinfo::channel::{class_label, PauliChannel};
use softinfo::code::{CodeLayout, NoiseModel};
use softinfo::estimator::{self, PatchSampler, PosteriorSource, StabilizationRule};
use softinfo::exact::{self, MpsConfig, Oracle};
use softinfo::multiqubit::{self, LatticeSurgerySoftInputs};
use softinfo::pec::{self, Batch, PecMode};
use softinfo::resources::{self, ArchitectureParams};
use softinfo::select::{self, SelectionMode, ShotRecord};
use softinfo::zne::{self, ScaleSchedule};

use crate::output::{emit, OutputArgs};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleArg {
    /// Boundary-enforced matching only.
    Matching,
    Enumerate,
    Mps,
    /// Enumeration when it fits, MPS otherwise.
    Auto,
}

impl OracleArg {
    fn exact(self, chi: usize) -> Option<Oracle> {
        match self {
            OracleArg::Matching => None,
            OracleArg::Enumerate => Some(Oracle::Enumerate),
            OracleArg::Mps => Some(Oracle::Mps(MpsConfig {
                chi,
                ..MpsConfig::default()
            })),
            OracleArg::Auto => Some(Oracle::Auto),
        }
    }

    fn source(self, chi: usize) -> PosteriorSource {
        match self.exact(chi) {
            None => PosteriorSource::Matching,
            Some(o) => PosteriorSource::Exact(o),
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct MemoryArgs {
    /// Odd code distance.
    #[arg(long, short)]
    pub d: usize,
    /// Depolarizing probability per data qubit.
    #[arg(long, short)]
    pub p: f64,
    #[arg(long)]
    pub shots: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = OracleArg::Matching)]
    pub oracle: OracleArg,
    /// MPS bond dimension.
    #[arg(long, default_value_t = 64)]
    pub chi: usize,
}

impl MemoryArgs {
    fn setup(&self) -> Result<(CodeLayout, NoiseModel), CliError> {
        Ok((CodeLayout::planar(self.d)?, NoiseModel::depolarizing(self.p)?))
    }
}

fn positive(what: &str, n: impl Into<f64>) -> Result<(), CliError> {
    if n.into() > 0.0 {
        Ok(())
    } else {
        Err(CliError::Usage(format!("{what} must be positive")))
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PosteriorsArgs {
    #[command(flatten)]
    pub memory: MemoryArgs,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

#[derive(Debug, Serialize)]
struct PosteriorRow {
    shot: usize,
    residual: char,
    p_i: f64,
    p_x: f64,
    p_y: f64,
    p_z: f64,
}

pub fn posteriors(a: &PosteriorsArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let m = &a.memory;
    positive("shots", m.shots as f64)?;
    let (layout, noise) = m.setup()?;
    let shots = estimator::sample_memory_shots(&layout, &noise, m.shots, m.seed, m.oracle.source(m.chi))?;
    let rows: Vec<PosteriorRow> = shots
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let [p_i, p_x, p_y, p_z] = s.posterior.as_array();
            PosteriorRow {
                shot: i,
                residual: s.residual.symbol(),
                p_i,
                p_x,
                p_y,
                p_z,
            }
        })
        .collect();
    emit("posteriors", a, &rows, &a.output, out)
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BiasArgs {
    /// Comma-separated odd distances.
    #[arg(long, short, value_delimiter = ',', required = true)]
    pub d: Vec<usize>,
    #[arg(long, short, value_delimiter = ',', required = true)]
    pub p: Vec<f64>,
    #[arg(long)]
    pub shots: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = OracleArg::Auto)]
    pub oracle: OracleArg,
    #[arg(long, default_value_t = 64)]
    pub chi: usize,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

pub fn bias(a: &BiasArgs, out: &mut dyn Write) -> Result<(), CliError> {
    positive("shots", a.shots as f64)?;
    let oracle = a
        .oracle
        .exact(a.chi)
        .ok_or_else(|| CliError::Usage("bias needs an exact oracle".into()))?;
    let rows = exact::bias_table(&a.d, &a.p, a.shots, a.seed, oracle)?;
    emit("bias", a, &rows, &a.output, out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeArg {
    MaxPerGate,
    AccumulatedSum,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PostselectArgs {
    #[command(flatten)]
    pub memory: MemoryArgs,
    #[arg(long, value_enum, default_value_t = ModeArg::AccumulatedSum)]
    pub mode: ModeArg,
    /// Comma-separated thresholds; a log grid from 1 to 1e-12 by default.
    #[arg(long, value_delimiter = ',')]
    pub thresholds: Option<Vec<f64>>,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

pub fn default_thresholds() -> Vec<f64> {
    (0..=96).map(|k| 10f64.powf(-(k as f64) / 8.0)).collect()
}

pub fn postselect(a: &PostselectArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let m = &a.memory;
    positive("shots", m.shots as f64)?;
    let (layout, noise) = m.setup()?;
    let shots: Vec<ShotRecord> =
        estimator::sample_memory_shots(&layout, &noise, m.shots, m.seed, m.oracle.source(m.chi))?
            .iter()
            .map(ShotRecord::from_memory)
            .collect();
    let mode = match a.mode {
        ModeArg::MaxPerGate => SelectionMode::MaxPerGate,
        ModeArg::AccumulatedSum => SelectionMode::AccumulatedSum,
    };
    let thresholds = a.thresholds.clone().unwrap_or_else(default_thresholds);
    let rows = select::improvement_curve(&shots, mode, &thresholds)?;
    emit("postselect", a, &rows, &a.output, out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PecModeArg {
    /// Channels known exactly; `--p` is the logical depolarizing rate per gate.
    Known,
    /// Warm-up then mitigation; `--p` is the physical rate of `--patch-d` patches.
    Type1,
    /// Bare execution then post-processing; `--p` as for type1.
    Type2,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CircuitArgs {
    #[arg(long, default_value_t = 5)]
    pub qubits: usize,
    #[arg(long, default_value_t = 50)]
    pub gates: usize,
    #[arg(long, short)]
    pub p: f64,
    /// Seed of the random circuit itself.
    #[arg(long, default_value_t = 1)]
    pub circuit_seed: u64,
}

impl CircuitArgs {
    fn depolarized(&self) -> Result<pec::LogicalCircuit, CliError> {
        PauliChannel::depolarizing(2, self.p)?;
        Ok(pec::random_clifford_circuit(self.qubits, self.gates, self.circuit_seed, |g| {
            PauliChannel::depolarizing(g.arity(), self.p).expect("validated")
        })?)
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PecArgs {
    #[command(flatten)]
    pub circuit: CircuitArgs,
    #[arg(long)]
    pub shots: u64,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = PecModeArg::Known)]
    pub mode: PecModeArg,
    #[arg(long, default_value_t = 3)]
    pub patch_d: usize,
    /// Posterior source for the patch channel.
    #[arg(long, value_enum, default_value_t = OracleArg::Enumerate)]
    pub oracle: OracleArg,
    #[arg(long, default_value_t = 1000)]
    pub min_warmup: u64,
    #[arg(long, default_value_t = 0.01)]
    pub rel_tol: f64,
    #[arg(long)]
    pub max_warmup: Option<u64>,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

#[derive(Debug, Serialize)]
struct PecRow {
    mode: &'static str,
    mitigated_mean: f64,
    mitigated_stderr: f64,
    unmitigated_mean: f64,
    unmitigated_stderr: f64,
    analytic_unmitigated: f64,
    total_gamma: f64,
    shots_used: u64,
    mitigated_shots: u64,
    warmup_shots: u64,
}

pub fn pec(a: &PecArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let c = &a.circuit;
    let (circ, mode) = match a.mode {
        PecModeArg::Known => (c.depolarized()?, PecMode::Known),
        PecModeArg::Type1 | PecModeArg::Type2 => {
            let layout = CodeLayout::planar(a.patch_d)?;
            let noise = NoiseModel::depolarizing(c.p)?;
            let patch = Arc::new(PatchSampler::new(&layout, &noise, a.oracle.source(64))?);
            let gates = pec::random_gates(c.qubits, c.gates, c.circuit_seed)?;
            let obs = pec::forward_observable(c.qubits, &gates)?;
            let circ = pec::LogicalCircuit::with_patch_noise(c.qubits, gates, obs, patch)?;
            let mode = if a.mode == PecModeArg::Type2 {
                PecMode::Type2
            } else {
                PecMode::Type1 {
                    rule: StabilizationRule {
                        min_shots: a.min_warmup,
                        rel_tol: a.rel_tol,
                    },
                    max_warmup: a.max_warmup,
                }
            };
            (circ, mode)
        }
    };
    let r = pec::run_pec(&circ, a.shots, mode, a.seed)?;
    let rows = [PecRow {
        mode: r.mode,
        mitigated_mean: r.mitigated_mean,
        mitigated_stderr: r.mitigated_stderr,
        unmitigated_mean: r.unmitigated_mean,
        unmitigated_stderr: r.unmitigated_stderr,
        analytic_unmitigated: circ.analytic_expectation(),
        total_gamma: r.total_gamma,
        shots_used: r.shots_used,
        mitigated_shots: r.mitigated_shots,
        warmup_shots: r.warmup_shots,
    }];
    emit("pec", a, &rows, &a.output, out)
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ZneArgs {
    #[command(flatten)]
    pub circuit: CircuitArgs,
    #[arg(long)]
    pub shots_per_scale: u64,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    pub scales: Vec<f64>,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

#[derive(Debug, Serialize)]
struct ZneRow {
    /// `0` marks the extrapolated row.
    scale: f64,
    mean: f64,
    stderr: f64,
    coefficient: f64,
    analytic: f64,
}

pub fn zne(a: &ZneArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let circ = a.circuit.depolarized()?;
    let schedule = ScaleSchedule::new(a.scales.clone())?;
    let r = zne::run_zne(&circ, &schedule, a.shots_per_scale, a.seed)?;
    let (analytic, analytic_x) = zne::analytic_zne(&circ.flip_probabilities(), schedule.scales())?;
    let mut rows: Vec<ZneRow> = (0..r.scales.len())
        .map(|j| ZneRow {
            scale: r.scales[j],
            mean: r.means[j],
            stderr: r.stderrs[j],
            coefficient: r.coefficients[j],
            analytic: analytic[j],
        })
        .collect();
    rows.push(ZneRow {
        scale: 0.0,
        mean: r.extrapolated,
        stderr: r.stderr,
        coefficient: f64::NAN,
        analytic: analytic_x,
    });
    emit("zne", a, &rows, &a.output, out)
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ConvergenceArgs {
    #[command(flatten)]
    pub memory: MemoryArgs,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

#[derive(Debug, Serialize)]
struct TraceRow {
    n: u64,
    p_i: f64,
    p_x: f64,
    p_y: f64,
    p_z: f64,
    se_i: f64,
    se_x: f64,
    se_y: f64,
    se_z: f64,
}

pub fn convergence(a: &ConvergenceArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let m = &a.memory;
    let (layout, noise) = m.setup()?;
    let trace = estimator::convergence_trace(&layout, &noise, m.shots, m.seed, m.oracle.source(m.chi))?;
    let rows: Vec<TraceRow> = trace
        .iter()
        .map(|t| TraceRow {
            n: t.n,
            p_i: t.estimate[0],
            p_x: t.estimate[1],
            p_y: t.estimate[2],
            p_z: t.estimate[3],
            se_i: t.stderr[0],
            se_x: t.stderr[1],
            se_y: t.stderr[2],
            se_z: t.stderr[3],
        })
        .collect();
    emit("convergence", a, &rows, &a.output, out)
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TradeoffArgs {
    /// Shots in the batch.
    #[arg(long)]
    pub shots: f64,
    #[arg(long, value_delimiter = ',', default_value = "0.05,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,0.95")]
    pub lambdas: Vec<f64>,
    #[arg(long)]
    pub gates: f64,
    #[arg(long)]
    pub p_avg: f64,
    /// Total PEC gamma of the circuit.
    #[arg(long)]
    pub gamma: f64,
    /// Shots accumulated by earlier batches; omit for the first batch.
    #[arg(long)]
    pub accumulated: Option<f64>,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

pub fn tradeoff(a: &TradeoffArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let batch = match a.accumulated {
        None => Batch::First,
        Some(accumulated) => Batch::Later { accumulated },
    };
    let rows = pec::shot_allocation_tradeoff(a.shots, &a.lambdas, a.gates, a.p_avg, a.gamma, batch)?;
    emit("tradeoff", a, &rows, &a.output, out)
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TcnotArgs {
    #[arg(long, short)]
    pub d: usize,
    #[arg(long, short, value_delimiter = ',', required = true)]
    pub p: Vec<f64>,
    #[arg(long)]
    pub shots: u64,
    #[arg(long)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

#[derive(Debug, Serialize)]
struct TcnotCsvRow {
    d: usize,
    p: f64,
    shots: u64,
    failure_rate: f64,
    stderr: f64,
    identity_violations: u64,
}

pub fn tcnot(a: &TcnotArgs, out: &mut dyn Write) -> Result<(), CliError> {
    positive("shots", a.shots as f64)?;
    let mut rows = Vec::new();
    for &p in &a.p {
        let r = multiqubit::tcnot_experiment(a.d, p, a.shots, a.seed)?;
        rows.push(TcnotCsvRow {
            d: r.d,
            p: r.p,
            shots: r.shots,
            failure_rate: r.failure_rate,
            stderr: r.stderr,
            identity_violations: r.identity_violations,
        });
    }
    emit("tcnot", a, &rows, &a.output, out)
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct LsChannelArgs {
    /// Fixed measurement error probabilities `m1,m2,m3`; skips sampling.
    #[arg(long, value_delimiter = ',')]
    pub pm: Option<Vec<f64>>,
    #[arg(long, short, default_value_t = 3)]
    pub d: usize,
    #[arg(long, short, default_value_t = 0.01)]
    pub p: f64,
    #[arg(long, default_value_t = 1)]
    pub samples: u64,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

#[derive(Debug, Serialize)]
struct LsRow {
    sample: u64,
    pm1: f64,
    pm2: f64,
    pm3: f64,
    class: String,
    prob: f64,
}

fn ls_rows(sample: u64, pm: (f64, f64, f64), ch: &PauliChannel, rows: &mut Vec<LsRow>) {
    for (c, &prob) in ch.probs().iter().enumerate() {
        rows.push(LsRow {
            sample,
            pm1: pm.0,
            pm2: pm.1,
            pm3: pm.2,
            class: class_label(c, 2),
            prob,
        });
    }
}

pub fn ls_channel(a: &LsChannelArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let mut rows = Vec::new();
    if let Some(pm) = &a.pm {
        if pm.len() != 3 {
            return Err(CliError::Usage("--pm takes exactly three values".into()));
        }
        let ch = multiqubit::gate_induced_channel(pm[0], pm[1], pm[2])?;
        ls_rows(0, (pm[0], pm[1], pm[2]), &ch, &mut rows);
    } else {
        let seed = a
            .seed
            .ok_or_else(|| CliError::Usage("sampled ls-channel needs --seed".into()))?;
        let layout = CodeLayout::planar(a.d)?;
        let noise = NoiseModel::depolarizing(a.p)?;
        for s in 0..a.samples {
            let inputs: LatticeSurgerySoftInputs = multiqubit::sample_ls_inputs(&layout, &noise, seed, s)?;
            let ch = multiqubit::compose_ls_channel(&inputs)?;
            ls_rows(s, multiqubit::measurement_error_probs(&inputs), &ch, &mut rows);
        }
    }
    let config = LsConfig {
        args: a,
        step_patch: ["control", "target", "ancilla"],
        idle_patch: ["control", "target"],
    };
    emit("ls-channel", &config, &rows, &a.output, out)
}

/// Echoes the arguments plus the patch each merge step and idle step is
/// assigned to.
#[derive(Serialize)]
struct LsConfig<'a> {
    #[serde(flatten)]
    args: &'a LsChannelArgs,
    step_patch: [&'static str; 3],
    idle_patch: [&'static str; 2],
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ResourcesArgs {
    /// Profiles CSV (`name,n_logical,gate_count,depth,shots`); shipped
    /// illustrative profiles when omitted.
    #[arg(long)]
    pub profiles: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-8)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 0.85)]
    pub p_over_pth: f64,
    #[arg(long, default_value_t = 1.0)]
    pub gst_overhead: f64,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

#[derive(Debug, Serialize)]
struct ResourceRow {
    name: String,
    n_logical: u64,
    gate_count: u64,
    depth: u64,
    shots: u64,
    d_a: u32,
    d_b: u32,
    d_c: u32,
    log10_v_a: f64,
    log10_v_b: f64,
    log10_v_c: f64,
    savings_vs_a_pct: f64,
    savings_vs_b_pct: f64,
}

pub fn resources(a: &ResourcesArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let profiles = match &a.profiles {
        Some(path) => resources::read_profiles(File::open(path)?)?,
        None => resources::shipped_profiles(),
    };
    let params = ArchitectureParams {
        epsilon: a.epsilon,
        p_over_pth: a.p_over_pth,
        gst_shot_overhead: a.gst_overhead,
        ..Default::default()
    };
    let mut rows = Vec::with_capacity(profiles.len());
    for prof in &profiles {
        let r = resources::compare_architectures(prof, &params)?;
        rows.push(ResourceRow {
            name: r.name,
            n_logical: prof.n_logical,
            gate_count: prof.gate_count,
            depth: prof.depth,
            shots: prof.shots,
            d_a: r.d_a,
            d_b: r.d_b,
            d_c: r.d_c,
            log10_v_a: r.v_a.log10(),
            log10_v_b: r.v_b.log10(),
            log10_v_c: r.v_c.log10(),
            savings_vs_a_pct: 100.0 * r.savings_vs_a,
            savings_vs_b_pct: 100.0 * r.savings_vs_b,
        });
    }
    emit("resources", a, &rows, &a.output, out)
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AbortArgs {
    /// Circuit lengths in gates.
    #[arg(long, value_delimiter = ',', default_value = "1,10,100,1000,10000")]
    pub n: Vec<u64>,
    /// Per-gate abort probabilities.
    #[arg(long, short, value_delimiter = ',', default_value = "0.0001,0.001,0.01")]
    pub p: Vec<f64>,
    /// Monte Carlo trials per point; needs `--seed`.
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

#[derive(Debug, Serialize)]
struct AbortRow {
    n: u64,
    p: f64,
    expected_saved: f64,
    direct_sum: f64,
    abort_probability: f64,
    simulated_saved: Option<f64>,
    simulated_stderr: Option<f64>,
}

pub fn abort_savings(a: &AbortArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if a.trials.is_some() && a.seed.is_none() {
        return Err(CliError::Usage("--trials needs --seed".into()));
    }
    let mut rows = Vec::new();
    for &n in &a.n {
        for &p in &a.p {
            let closed = select::expected_saved_steps(n, p)?;
            let sim = match (a.trials, a.seed) {
                (Some(t), Some(seed)) => Some(select::simulate_abort(n, p, t, seed)?),
                _ => None,
            };
            rows.push(AbortRow {
                n,
                p,
                expected_saved: closed.expected_saved,
                direct_sum: select::expected_saved_steps_direct(n, p)?,
                abort_probability: closed.abort_probability,
                simulated_saved: sim.map(|s| s.mean_saved),
                simulated_stderr: sim.map(|s| s.stderr),
            });
        }
    }
    emit("abort-savings", a, &rows, &a.output, out)
}
