//! Soft information for two-qubit logical gates.
//!
//! Transversal CNOT: pre-gate errors are pushed through physical CNOTs
//! (`X` copies control to target, `Z` copies target to control), which
//! correlates the two patches' syndromes. Sequential syndrome transfer first
//! decodes the sectors that propagation leaves untouched (control `X`, target
//! `Z`), then removes their propagated images from the other patch before
//! decoding it.
//!
//! Lattice-surgery CNOT: the effective channel is the decoding channel of
//! every merge/idle step convolved with the channel induced by misread
//! measurement outcomes.

use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{PauliChannel, PosteriorVector};
use crate::code::{CodeLayout, NoiseModel, Syndrome};
use crate::decoder::Decoder;
use crate::error::{check_len, invalid, Result};
use crate::pauli::{Bits, Pauli, PauliString};
use crate::rng::{domain, RandomStream};
use crate::stats;

/// X (`a`) and Z (`b`) error bits on the control (1) and target (2) patches.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TwoPatchError {
    pub a1: Bits,
    pub b1: Bits,
    pub a2: Bits,
    pub b2: Bits,
}

impl TwoPatchError {
    pub fn new(a1: Bits, b1: Bits, a2: Bits, b2: Bits) -> Result<Self> {
        let n = a1.len();
        check_len(n, b1.len())?;
        check_len(n, a2.len())?;
        check_len(n, b2.len())?;
        Ok(Self { a1, b1, a2, b2 })
    }

    pub fn identity(n: usize) -> Self {
        let z = Bits::repeat(false, n);
        Self {
            a1: z.clone(),
            b1: z.clone(),
            a2: z.clone(),
            b2: z,
        }
    }

    pub fn from_patches(control: &PauliString, target: &PauliString) -> Result<Self> {
        Self::new(
            control.x_bits().to_bitvec(),
            control.z_bits().to_bitvec(),
            target.x_bits().to_bitvec(),
            target.z_bits().to_bitvec(),
        )
    }

    pub fn control(&self) -> PauliString {
        PauliString::from_bits(self.a1.clone(), self.b1.clone()).expect("equal lengths")
    }

    pub fn target(&self) -> PauliString {
        PauliString::from_bits(self.a2.clone(), self.b2.clone()).expect("equal lengths")
    }

    pub fn sample(layout: &CodeLayout, noise: &NoiseModel, rng: &mut RandomStream) -> Result<Self> {
        let c = noise.sample(layout, rng)?;
        let t = noise.sample(layout, rng)?;
        Self::from_patches(&c, &t)
    }
}

/// Pushes a pre-gate error through a transversal CNOT.
pub fn propagate_tcnot(e: &TwoPatchError) -> Result<TwoPatchError> {
    let mut out = TwoPatchError::new(e.a1.clone(), e.b1.clone(), e.a2.clone(), e.b2.clone())?;
    out.a2 ^= &e.a1;
    out.b1 ^= &e.b2;
    Ok(out)
}

/// Logical action of CNOT on a two-qubit class index (control most
/// significant): `X1 -> X1 X2`, `Z2 -> Z1 Z2`.
pub fn cnot_class(c: usize) -> usize {
    let p1 = Pauli::from_index(c >> 2);
    let p2 = Pauli::from_index(c & 3);
    let (x1, z1, x2, z2) = (p1.x(), p1.z(), p2.x(), p2.z());
    let q1 = Pauli::from_bits(x1, z1 ^ z2);
    let q2 = Pauli::from_bits(x2 ^ x1, z2);
    q1.index() << 2 | q2.index()
}

fn x_part(bits: &Bits) -> PauliString {
    PauliString::from_bits(bits.clone(), Bits::repeat(false, bits.len())).expect("equal lengths")
}

fn z_part(bits: &Bits) -> PauliString {
    PauliString::from_bits(Bits::repeat(false, bits.len()), bits.clone()).expect("equal lengths")
}

/// Soft decode of one sector. Returns the estimated error bits and the
/// probability that the true sector logical bit differs from the estimate.
struct Sector {
    bits: Bits,
    flip: f64,
}

/// `z_defects` (Z-checks) locate X errors; `x_defects` locate Z errors.
fn decode_x_sector(decoder: &Decoder, z_defects: &Bits) -> Result<Sector> {
    let mut s = decoder.layout().empty_syndrome();
    s.z_defects = z_defects.clone();
    let soft = decoder.decode(&s)?;
    let f = soft.frame().as_array();
    Ok(Sector {
        bits: soft.correction().x_bits().to_bitvec(),
        flip: f[Pauli::X.index()] + f[Pauli::Y.index()],
    })
}

fn decode_z_sector(decoder: &Decoder, x_defects: &Bits) -> Result<Sector> {
    let mut s = decoder.layout().empty_syndrome();
    s.x_defects = x_defects.clone();
    let soft = decoder.decode(&s)?;
    let f = soft.frame().as_array();
    Ok(Sector {
        bits: soft.correction().z_bits().to_bitvec(),
        flip: f[Pauli::Z.index()] + f[Pauli::Y.index()],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TcnotDecode {
    /// Posterior over the post-gate residual class, relative to the applied
    /// correction; index = control class * 4 + target class.
    pub joint: Vec<f64>,
    /// Most likely residual class.
    pub hard: usize,
    /// Flip probabilities of the control X, target Z, control Z and target X
    /// sectors, in decoding order.
    pub sector_flips: [f64; 4],
    /// Residual syndromes after syndrome transfer: target Z-checks and
    /// control X-checks.
    #[serde(skip)]
    pub residual_z2: Bits,
    #[serde(skip)]
    pub residual_x1: Bits,
    /// Estimated pre-gate error.
    #[serde(skip)]
    pub estimate: TwoPatchError,
}

/// Sequential syndrome-transfer decode of the post-gate syndromes
/// `(control, target)` produced by errors before a transversal CNOT.
pub fn sequential_decode_tcnot(decoder: &Decoder, control: &Syndrome, target: &Syndrome) -> Result<TcnotDecode> {
    let layout = decoder.layout();
    layout.check_syndrome(control)?;
    layout.check_syndrome(target)?;
    // untouched by propagation: control X errors, target Z errors
    let c_x = decode_x_sector(decoder, &control.z_defects)?;
    let t_z = decode_z_sector(decoder, &target.x_defects)?;
    // remove the propagated images of the estimates
    let residual_z2 = target.z_defects.clone() ^ &layout.syndrome(&x_part(&c_x.bits))?.z_defects;
    let residual_x1 = control.x_defects.clone() ^ &layout.syndrome(&z_part(&t_z.bits))?.x_defects;
    let t_x = decode_x_sector(decoder, &residual_z2)?;
    let c_z = decode_z_sector(decoder, &residual_x1)?;

    // pre-gate sector flips are treated as independent; map through the CNOT
    let mut joint = vec![0.0; 16];
    for bits in 0..16usize {
        let (x1, z1, x2, z2) = (bits & 1 == 1, bits & 2 == 2, bits & 4 == 4, bits & 8 == 8);
        let pr = |f: f64, on: bool| if on { f } else { 1.0 - f };
        let w = pr(c_x.flip, x1) * pr(c_z.flip, z1) * pr(t_x.flip, x2) * pr(t_z.flip, z2);
        let pre = Pauli::from_bits(x1, z1).index() << 2 | Pauli::from_bits(x2, z2).index();
        joint[cnot_class(pre)] += w;
    }
    let hard = argmax(&joint);
    Ok(TcnotDecode {
        joint,
        hard,
        sector_flips: [c_x.flip, t_z.flip, c_z.flip, t_x.flip],
        residual_z2,
        residual_x1,
        estimate: TwoPatchError::new(c_x.bits, c_z.bits, t_x.bits, t_z.bits)?,
    })
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i] > v[best] {
            best = i;
        }
    }
    best
}

/// Errors after the gate leave the patches independent: the joint posterior
/// is the product of two single-patch posteriors (each relative to its own
/// hard decision).
pub fn independent_decode(decoder: &Decoder, control: &Syndrome, target: &Syndrome) -> Result<Vec<f64>> {
    let a = decoder.decode(control)?.frame().as_array();
    let b = decoder.decode(target)?.frame().as_array();
    Ok((0..16).map(|c| a[c >> 2] * b[c & 3]).collect())
}

/// One transversal-CNOT shot from a pre-gate error.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TcnotShot {
    pub decode: TcnotDecode,
    /// True post-gate residual class relative to the decoder's hard class.
    pub residual: usize,
    /// Whether both syndrome-transfer identities held.
    pub identities_hold: bool,
}

pub fn tcnot_shot(decoder: &Decoder, pre: &TwoPatchError) -> Result<TcnotShot> {
    let layout = decoder.layout();
    let post = propagate_tcnot(pre)?;
    let sc = layout.syndrome(&post.control())?;
    let st = layout.syndrome(&post.target())?;
    let dec = sequential_decode_tcnot(decoder, &sc, &st)?;
    // residual syndromes must equal the syndromes of what is left to find
    let lhs_z2 = layout
        .syndrome(&x_part(&(pre.a2.clone() ^ &pre.a1 ^ &dec.estimate.a1)))?
        .z_defects;
    let lhs_x1 = layout
        .syndrome(&z_part(&(pre.b1.clone() ^ &pre.b2 ^ &dec.estimate.b2)))?
        .x_defects;
    let identities_hold = lhs_z2 == dec.residual_z2 && lhs_x1 == dec.residual_x1;
    // pre-gate residual has trivial syndrome on both patches
    let rc = TwoPatchError::new(
        pre.a1.clone() ^ &dec.estimate.a1,
        pre.b1.clone() ^ &dec.estimate.b1,
        pre.a2.clone() ^ &dec.estimate.a2,
        pre.b2.clone() ^ &dec.estimate.b2,
    )?;
    let l1 = layout.class_of_trivial(&rc.control())?;
    let l2 = layout.class_of_trivial(&rc.target())?;
    let residual = cnot_class(l1.index() << 2 | l2.index()) ^ dec.hard;
    Ok(TcnotShot {
        decode: dec,
        residual,
        identities_hold,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TcnotRow {
    pub d: usize,
    pub p: f64,
    pub shots: u64,
    pub failure_rate: f64,
    pub stderr: f64,
    pub identity_violations: u64,
    pub mean_joint: Vec<f64>,
}

/// Monte Carlo of transversal CNOT with depolarizing pre-gate errors.
pub fn tcnot_experiment(d: usize, p: f64, shots: u64, seed: u64) -> Result<TcnotRow> {
    let layout = CodeLayout::planar(d)?;
    let noise = NoiseModel::depolarizing(p)?;
    let decoder = Decoder::new(&layout, &noise)?;
    let out: Vec<TcnotShot> = (0..shots)
        .into_par_iter()
        .map(|i| {
            let mut rng = RandomStream::substream(seed, domain::PATCHES, i);
            let pre = TwoPatchError::sample(&layout, &noise, &mut rng)?;
            tcnot_shot(&decoder, &pre)
        })
        .collect::<Result<_>>()?;
    let fails: Vec<f64> = out.iter().map(|s| (s.residual != 0) as u8 as f64).collect();
    let mut mean_joint = vec![0.0; 16];
    for s in &out {
        for (m, j) in mean_joint.iter_mut().zip(&s.decode.joint) {
            *m += j;
        }
    }
    mean_joint.iter_mut().for_each(|m| *m /= shots.max(1) as f64);
    Ok(TcnotRow {
        d,
        p,
        shots,
        failure_rate: stats::mean(&fails),
        stderr: stats::std_error(&fails),
        identity_violations: out.iter().filter(|s| !s.identities_hold).count() as u64,
        mean_joint,
    })
}

/// Decoding posteriors of a lattice-surgery CNOT.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LatticeSurgerySoftInputs {
    /// `ZZ` merge (control, ancilla), `XX` merge (ancilla, target), ancilla
    /// `Z` measurement.
    pub steps: [PosteriorVector; 3],
    /// Idle periods of the control and target patches.
    pub idle: [PosteriorVector; 2],
}

impl LatticeSurgerySoftInputs {
    pub fn identity() -> Self {
        let i = PosteriorVector::certain(Pauli::I);
        Self {
            steps: [i; 3],
            idle: [i; 2],
        }
    }
}

/// Which logical qubit each decoding step acts on: `0` control, `1` target,
/// `None` for the ancilla, which only matters through its measurement.
pub const STEP_SUPPORT: [Option<usize>; 3] = [Some(0), Some(1), None];
pub const IDLE_SUPPORT: [usize; 2] = [0, 1];

/// Probabilities that each measurement outcome was misread.
pub fn measurement_error_probs(inputs: &LatticeSurgerySoftInputs) -> (f64, f64, f64) {
    let [s1, s2, s3] = inputs.steps.map(|p| p.as_array());
    let c = |v: f64| v.clamp(0.0, 1.0);
    (c(s1[1] + s1[2]), c(s2[3] + s2[2]), c(s3[3] + s3[2]))
}

const II: usize = 0;
const IX: usize = 1;
const ZI: usize = 12;
const ZX: usize = 13;

/// Channel from wrong `Z^{m2}` (control) and `X^{m1+m3}` (target)
/// corrections.
pub fn gate_induced_channel(pm1: f64, pm2: f64, pm3: f64) -> Result<PauliChannel> {
    for p in [pm1, pm2, pm3] {
        if !(0.0..=1.0).contains(&p) {
            return Err(invalid("measurement error probabilities must lie in [0, 1]"));
        }
    }
    let zi = pm2 * (1.0 - pm1) * (1.0 - pm3) + (1.0 - pm2) * pm1 * pm3;
    let ix = (1.0 - pm2) * (1.0 - pm1) * pm3 + (1.0 - pm2) * pm1 * (1.0 - pm3);
    let zx = pm2 * (1.0 - pm1) * pm3 + pm2 * pm1 * (1.0 - pm3);
    let mut probs = vec![0.0; 16];
    probs[ZI] = zi;
    probs[IX] = ix;
    probs[ZX] = zx;
    probs[II] = (1.0 - zi - ix - zx).max(0.0);
    PauliChannel::new(2, probs)
}

fn on_qubit(p: &PosteriorVector, qubit: usize) -> PauliChannel {
    let one = p.to_channel();
    let id = PauliChannel::identity(1);
    if qubit == 0 {
        one.tensor(&id)
    } else {
        id.tensor(&one)
    }
}

/// Convolution of the per-step decoding channels, placed per
/// [`STEP_SUPPORT`] and [`IDLE_SUPPORT`].
pub fn decoding_channel(inputs: &LatticeSurgerySoftInputs) -> Result<PauliChannel> {
    let mut ch = PauliChannel::identity(2);
    for (p, q) in inputs.steps.iter().zip(STEP_SUPPORT) {
        if let Some(q) = q {
            ch = ch.compose(&on_qubit(p, q))?;
        }
    }
    for (p, q) in inputs.idle.iter().zip(IDLE_SUPPORT) {
        ch = ch.compose(&on_qubit(p, q))?;
    }
    Ok(ch)
}

pub fn compose_ls_channel(inputs: &LatticeSurgerySoftInputs) -> Result<PauliChannel> {
    let (m1, m2, m3) = measurement_error_probs(inputs);
    decoding_channel(inputs)?.compose(&gate_induced_channel(m1, m2, m3)?)
}

/// Lattice-surgery inputs from single-patch memory decodes, one sampled
/// syndrome per step.
pub fn sample_ls_inputs(
    layout: &CodeLayout,
    noise: &NoiseModel,
    seed: u64,
    shot: u64,
) -> Result<LatticeSurgerySoftInputs> {
    let decoder = Decoder::new(layout, noise)?;
    let mut rng = RandomStream::substream(seed, domain::PATCHES, shot);
    let mut draw = || -> Result<PosteriorVector> {
        let e = noise.sample(layout, &mut rng)?;
        Ok(decoder.decode(&layout.syndrome(&e)?)?.frame())
    };
    Ok(LatticeSurgerySoftInputs {
        steps: [draw()?, draw()?, draw()?],
        idle: [draw()?, draw()?],
    })
}
