//! Spacetime-volume accounting for three stacks:
//! (A) QEC only, (B) QEC + PEC with tomographic characterization,
//! (C) QEC + PEC with soft-information characterization.

use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Illustrative benchmark profiles. Gate counts are not taken from any
/// published table.
pub const SHIPPED_PROFILES: &str = include_str!("../data/profiles.csv");

/// Largest PEC exponent `κ N_G p_L` accepted before a distance is treated as
/// infeasible.
pub const MAX_PEC_EXPONENT: f64 = 50.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmProfile {
    pub name: String,
    pub n_logical: u64,
    pub gate_count: u64,
    pub depth: u64,
    pub shots: u64,
}

impl AlgorithmProfile {
    pub fn new(name: impl Into<String>, n_logical: u64, gate_count: u64, depth: u64, shots: u64) -> Result<Self> {
        let p = Self {
            name: name.into(),
            n_logical,
            gate_count,
            depth,
            shots,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_logical == 0 || self.gate_count == 0 || self.depth == 0 || self.shots == 0 {
            return Err(invalid(format!("profile {}: counts must be positive", self.name)));
        }
        Ok(())
    }
}

/// Reads `name,n_logical,gate_count,depth,shots` rows; `#` starts a comment.
pub fn read_profiles<R: Read>(reader: R) -> Result<Vec<AlgorithmProfile>> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(reader);
    let mut out = Vec::new();
    for row in rdr.deserialize() {
        let p: AlgorithmProfile = row.map_err(|e| invalid(format!("profiles: {e}")))?;
        p.validate()?;
        out.push(p);
    }
    Ok(out)
}

pub fn shipped_profiles() -> Vec<AlgorithmProfile> {
    read_profiles(SHIPPED_PROFILES.as_bytes()).expect("shipped profiles parse")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArchitectureParams {
    pub c1: f64,
    pub c2: f64,
    pub p_over_pth: f64,
    pub epsilon: f64,
    /// `κ` in the PEC shot factor `exp(κ N_G p_L)`.
    pub pec_exponent: f64,
    /// Extra shots spent on tomographic characterization in architecture B,
    /// as a fraction of the algorithm's own shots.
    pub gst_shot_overhead: f64,
}

impl Default for ArchitectureParams {
    fn default() -> Self {
        Self {
            c1: 0.03,
            c2: 1.0,
            p_over_pth: 0.85,
            epsilon: 1e-8,
            pec_exponent: 4.0,
            gst_shot_overhead: 1.0,
        }
    }
}

impl ArchitectureParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.p_over_pth > 0.0 && self.p_over_pth < 1.0) {
            return Err(invalid("p/p_th must lie in (0, 1)"));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(invalid("target failure must lie in (0, 1)"));
        }
        if !(self.c1 > 0.0 && self.c2 > 0.0) || self.c2 * self.p_over_pth >= 1.0 {
            return Err(invalid("need C1 > 0 and 0 < C2 p/p_th < 1"));
        }
        if !(self.pec_exponent >= 0.0 && self.gst_shot_overhead >= 0.0) {
            return Err(invalid("overhead constants must be non-negative"));
        }
        Ok(())
    }

    /// Per-gate logical error rate at distance `d`.
    pub fn logical_rate(&self, d: u32) -> f64 {
        self.c1 * (self.c2 * self.p_over_pth).powf(d as f64 / 2.0)
    }
}

/// Unrounded distance meeting total failure `epsilon` over `gate_count` gates.
pub fn raw_distance(epsilon: f64, gate_count: u64, params: &ArchitectureParams) -> Result<f64> {
    let arg = (epsilon / 2.0) / (gate_count as f64 * params.c1);
    let base = params.c2 * params.p_over_pth;
    if !(arg > 0.0 && arg < 1.0) {
        return Err(invalid(format!("log argument {arg} outside (0, 1)")));
    }
    if !(base > 0.0 && base < 1.0) {
        return Err(invalid(format!("C2 p/p_th = {base} must lie in (0, 1)")));
    }
    Ok(2.0 * arg.ln() / base.ln())
}

/// Smallest odd distance at or above the raw formula value.
pub fn required_distance(epsilon: f64, gate_count: u64, params: &ArchitectureParams) -> Result<u32> {
    let raw = raw_distance(epsilon, gate_count, params)?;
    let mut d = raw.ceil().max(3.0) as u32;
    if d.is_multiple_of(2) {
        d += 1;
    }
    Ok(d)
}

/// Data plus ancilla qubits of an unrotated planar patch.
pub fn qubits_per_patch(d: u32) -> u64 {
    let d = d as u64;
    d * d + (d - 1) * (d - 1) + 2 * d * (d - 1)
}

/// Qubits x rounds x shots x overhead; each logical layer takes `d` rounds.
pub fn spacetime_volume(profile: &AlgorithmProfile, d: u32, shots: f64, shot_factor: f64) -> f64 {
    (profile.n_logical * qubits_per_patch(d)) as f64 * (profile.depth * d as u64) as f64 * shots * shot_factor
}

/// `exp(κ N_G p_L(d))`, or `None` past the overflow guard.
pub fn pec_shot_factor(gate_count: u64, d: u32, params: &ArchitectureParams) -> Option<f64> {
    let x = params.pec_exponent * gate_count as f64 * params.logical_rate(d);
    (x <= MAX_PEC_EXPONENT).then(|| x.exp())
}

/// Characterization volume of architecture B at distance `d`.
pub fn characterization_volume(profile: &AlgorithmProfile, d: u32, params: &ArchitectureParams) -> f64 {
    spacetime_volume(profile, d, profile.shots as f64 * params.gst_shot_overhead, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VolumeReport {
    pub name: String,
    pub d_a: u32,
    pub d_b: u32,
    pub d_c: u32,
    pub v_a: f64,
    pub v_b: f64,
    pub v_c: f64,
    pub savings_vs_a: f64,
    pub savings_vs_b: f64,
}

fn best_distance(d_max: u32, volume: impl Fn(u32) -> Option<f64>) -> Option<(u32, f64)> {
    (3..=d_max)
        .step_by(2)
        .filter_map(|d| volume(d).map(|v| (d, v)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
}

pub fn compare_architectures(profile: &AlgorithmProfile, params: &ArchitectureParams) -> Result<VolumeReport> {
    profile.validate()?;
    params.validate()?;
    let shots = profile.shots as f64;
    let d_a = required_distance(params.epsilon, profile.gate_count, params)?;
    let v_a = spacetime_volume(profile, d_a, shots, 1.0);
    let v_c_at = |d| pec_shot_factor(profile.gate_count, d, params).map(|f| spacetime_volume(profile, d, shots, f));
    let infeasible = || Error::InvalidArgument(format!("profile {}: no distance keeps the PEC factor finite", profile.name));
    let (d_c, v_c) = best_distance(d_a, v_c_at).ok_or_else(infeasible)?;
    let (d_b, v_b) =
        best_distance(d_a, |d| v_c_at(d).map(|v| v + characterization_volume(profile, d, params))).ok_or_else(infeasible)?;
    Ok(VolumeReport {
        name: profile.name.clone(),
        d_a,
        d_b,
        d_c,
        v_a,
        v_b,
        v_c,
        savings_vs_a: 1.0 - v_c / v_a,
        savings_vs_b: 1.0 - v_c / v_b,
    })
}
