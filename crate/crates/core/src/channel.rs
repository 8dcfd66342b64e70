//! Pauli channels and single-qubit logical posteriors.
//!
//! Class indices use two bits per qubit with `I=0, X=1, Y=2, Z=3`; qubit 0 is
//! the most significant base-4 digit. In this encoding the Pauli product is
//! the XOR of indices, which makes channel convolution and the character
//! transform one-liners.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::pauli::{Pauli, PauliString};

pub const NORM_TOL: f64 = 1e-12;

/// Pauli classes anticommute iff the number of sites where both are
/// non-identity and different is odd.
#[inline]
pub fn class_anticommutes(a: usize, b: usize, n_qubits: usize) -> bool {
    let mut odd = false;
    for q in 0..n_qubits {
        let pa = (a >> (2 * q)) & 3;
        let pb = (b >> (2 * q)) & 3;
        if pa != 0 && pb != 0 && pa != pb {
            odd = !odd;
        }
    }
    odd
}

/// Character `chi(P, Q) = +1` if commuting, `-1` otherwise.
#[inline]
pub fn character(a: usize, b: usize, n_qubits: usize) -> f64 {
    if class_anticommutes(a, b, n_qubits) {
        -1.0
    } else {
        1.0
    }
}

/// Class index of a Pauli string (qubit 0 most significant).
pub fn class_index(p: &PauliString) -> usize {
    let n = p.len();
    (0..n).fold(0, |acc, q| acc * 4 + p.get(q).index())
}

pub fn class_string(idx: usize, n_qubits: usize) -> PauliString {
    let mut p = PauliString::identity(n_qubits);
    for q in 0..n_qubits {
        let digit = (idx >> (2 * (n_qubits - 1 - q))) & 3;
        p.set(q, Pauli::from_index(digit));
    }
    p
}

pub fn class_label(idx: usize, n_qubits: usize) -> String {
    class_string(idx, n_qubits).to_string()
}

/// Probability vector over the `4^n` Pauli classes of `n` qubits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PauliChannel {
    n_qubits: usize,
    probs: Vec<f64>,
}

impl PauliChannel {
    pub fn new(n_qubits: usize, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != 1 << (2 * n_qubits) {
            return Err(Error::LengthMismatch {
                expected: 1 << (2 * n_qubits),
                actual: probs.len(),
            });
        }
        if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(invalid("channel probabilities must be finite and non-negative"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(invalid(format!("channel probabilities sum to {total}")));
        }
        Ok(Self { n_qubits, probs })
    }

    /// Builds a channel from unnormalised non-negative weights.
    pub fn from_weights(n_qubits: usize, weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(invalid("channel weights sum to zero"));
        }
        Self::new(n_qubits, weights.into_iter().map(|w| w / total).collect())
    }

    pub fn identity(n_qubits: usize) -> Self {
        let mut probs = vec![0.0; 1 << (2 * n_qubits)];
        probs[0] = 1.0;
        Self { n_qubits, probs }
    }

    /// Single-qubit channel from `(q_X, q_Y, q_Z)`.
    pub fn single(qx: f64, qy: f64, qz: f64) -> Result<Self> {
        Self::new(1, vec![1.0 - qx - qy - qz, qx, qy, qz])
    }

    /// Uniform depolarizing channel with total error mass `p`.
    pub fn depolarizing(n_qubits: usize, p: f64) -> Result<Self> {
        let k = (1usize << (2 * n_qubits)) - 1;
        let mut probs = vec![p / k as f64; k + 1];
        probs[0] = 1.0 - p;
        Self::new(n_qubits, probs)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, class: usize) -> f64 {
        self.probs[class]
    }

    /// Total non-identity mass.
    pub fn error_mass(&self) -> f64 {
        self.probs[1..].iter().sum()
    }

    /// Group convolution: the channel of applying `self` then `other`.
    /// Pauli channels commute, so the order does not matter.
    pub fn compose(&self, other: &PauliChannel) -> Result<PauliChannel> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::LengthMismatch {
                expected: self.n_qubits,
                actual: other.n_qubits,
            });
        }
        // terms p[a] q[a^c] and p[a^c] q[a] are paired so that swapping the
        // operands gives bit-identical sums
        let (p, q) = (&self.probs, &other.probs);
        let out = (0..p.len())
            .map(|c| {
                let mut acc = 0.0;
                for a in 0..p.len() {
                    let b = a ^ c;
                    if a < b {
                        acc += p[a] * q[b] + p[b] * q[a];
                    } else if a == b {
                        acc += p[a] * q[a];
                    }
                }
                acc
            })
            .collect();
        Ok(PauliChannel {
            n_qubits: self.n_qubits,
            probs: out,
        })
    }

    /// Tensor product; `self` occupies the leading qubits.
    pub fn tensor(&self, other: &PauliChannel) -> PauliChannel {
        let shift = 2 * other.n_qubits;
        let mut probs = vec![0.0; self.probs.len() * other.probs.len()];
        for (a, &pa) in self.probs.iter().enumerate() {
            for (b, &pb) in other.probs.iter().enumerate() {
                probs[(a << shift) | b] = pa * pb;
            }
        }
        PauliChannel {
            n_qubits: self.n_qubits + other.n_qubits,
            probs,
        }
    }

    /// Transfer-matrix eigenvalues `lambda_P = sum_Q q_Q chi(P, Q)`.
    pub fn eigenvalues(&self) -> Vec<f64> {
        walsh_hadamard(&self.probs, self.n_qubits)
    }

    /// Probability that the sampled Pauli anticommutes with class `obs`.
    pub fn flip_probability(&self, obs: usize) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .filter(|(c, _)| class_anticommutes(*c, obs, self.n_qubits))
            .map(|(_, p)| p)
            .sum()
    }

    /// Floors every entry at `floor` and renormalises.
    pub fn clipped(&self, floor: f64) -> PauliChannel {
        let w: Vec<f64> = self.probs.iter().map(|p| p.max(floor)).collect();
        let t: f64 = w.iter().sum();
        PauliChannel {
            n_qubits: self.n_qubits,
            probs: w.into_iter().map(|p| p / t).collect(),
        }
    }
}

/// `out[P] = sum_Q v[Q] chi(P, Q)`.
pub fn walsh_hadamard(v: &[f64], n_qubits: usize) -> Vec<f64> {
    (0..v.len())
        .map(|p| {
            v.iter()
                .enumerate()
                .map(|(q, &x)| x * character(p, q, n_qubits))
                .sum()
        })
        .collect()
}

/// Normalised distribution over the four logical classes of one qubit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PosteriorVector {
    p: [f64; 4],
}

impl PosteriorVector {
    pub fn new(p: [f64; 4]) -> Result<Self> {
        if p.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(invalid("posterior entries must be finite and non-negative"));
        }
        let s: f64 = p.iter().sum();
        if (s - 1.0).abs() > 1e-9 {
            return Err(invalid(format!("posterior sums to {s}")));
        }
        Ok(Self { p })
    }

    pub fn certain(class: Pauli) -> Self {
        let mut p = [0.0; 4];
        p[class.index()] = 1.0;
        Self { p }
    }

    /// Normalises from natural-log weights; `-inf` marks an impossible class.
    pub fn from_log_weights(logw: [f64; 4]) -> Result<Self> {
        let m = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !m.is_finite() {
            return Err(Error::Internal("all classes have zero weight".into()));
        }
        let w = logw.map(|l| (l - m).exp());
        let s: f64 = w.iter().sum();
        Ok(Self { p: w.map(|x| x / s) })
    }

    pub fn from_weights(w: [f64; 4]) -> Result<Self> {
        let s: f64 = w.iter().sum();
        if !(s > 0.0) {
            return Err(Error::Internal("all classes have zero weight".into()));
        }
        Ok(Self { p: w.map(|x| x / s) })
    }

    pub fn as_array(&self) -> [f64; 4] {
        self.p
    }

    pub fn get(&self, class: Pauli) -> f64 {
        self.p[class.index()]
    }

    /// Total non-identity mass `1 - p(I)`.
    pub fn error_probability(&self) -> f64 {
        self.p[1] + self.p[2] + self.p[3]
    }

    /// Most likely class; ties resolve to the lowest index.
    pub fn argmax(&self) -> Pauli {
        let mut best = 0;
        for i in 1..4 {
            if self.p[i] > self.p[best] {
                best = i;
            }
        }
        Pauli::from_index(best)
    }

    /// Re-expresses the distribution relative to a reference class:
    /// entry `L` of the result is the mass of `L * reference`.
    pub fn relative_to(&self, reference: Pauli) -> Self {
        let r = reference.index();
        let mut p = [0.0; 4];
        for (l, slot) in p.iter_mut().enumerate() {
            *slot = self.p[l ^ r];
        }
        Self { p }
    }

    pub fn to_channel(&self) -> PauliChannel {
        PauliChannel {
            n_qubits: 1,
            probs: self.p.to_vec(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_xor_is_pauli_product() {
        for a in Pauli::ALL {
            for b in Pauli::ALL {
                assert_eq!(Pauli::from_index(a.index() ^ b.index()), a.mul(b));
                assert_eq!(
                    class_anticommutes(a.index(), b.index(), 1),
                    !a.commutes(b)
                );
            }
        }
    }

    #[test]
    fn class_strings_roundtrip() {
        for idx in 0..16 {
            assert_eq!(class_index(&class_string(idx, 2)), idx);
        }
        assert_eq!(class_label(0b11_01, 2), "ZX");
    }

    #[test]
    fn compose_is_commutative_and_identity_neutral() {
        let a = PauliChannel::single(0.02, 0.01, 0.03).unwrap();
        let b = PauliChannel::single(0.1, 0.0, 0.05).unwrap();
        assert_eq!(a.compose(&b).unwrap(), b.compose(&a).unwrap());
        assert_eq!(a.compose(&PauliChannel::identity(1)).unwrap(), a);
    }

    #[test]
    fn eigenvalues_of_depolarizing() {
        let d = PauliChannel::depolarizing(1, 0.03).unwrap();
        let l = d.eigenvalues();
        assert!((l[0] - 1.0).abs() < 1e-15);
        for x in &l[1..] {
            assert!((x - 0.96).abs() < 1e-15);
        }
    }

    #[test]
    fn posterior_relabel_and_argmax() {
        let p = PosteriorVector::new([0.1, 0.6, 0.2, 0.1]).unwrap();
        assert_eq!(p.argmax(), Pauli::X);
        let r = p.relative_to(Pauli::X);
        assert_eq!(r.as_array(), [0.6, 0.1, 0.1, 0.2]);
        assert_eq!(r.argmax(), Pauli::I);
        assert!(PosteriorVector::new([0.5, 0.6, 0.0, 0.0]).is_err());
    }
}
