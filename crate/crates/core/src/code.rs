//! Unrotated planar surface code: geometry, noise sampling, syndromes and the
//! logical effect of an error.
//!
//! The patch lives on a `(2d-1) x (2d-1)` grid. Sites with even `row + col`
//! hold data qubits, `(even, odd)` sites hold Z-type checks and `(odd, even)`
//! sites hold X-type checks. X-error chains end on the left/right boundaries,
//! Z-error chains on the top/bottom boundaries. `logical_x` is X along row 0 and
//! `logical_z` is Z along column 0.

use serde::{Deserialize, Serialize};

use crate::channel::PauliChannel;
use crate::error::{check_len, invalid, Error, Result};
use crate::pauli::{Bits, Pauli, PauliString};
use crate::rng::RandomStream;
use bitvec::prelude::*;

/// One of the four boundaries of the patch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Left,
    Right,
    Top,
    Bottom,
}

/// Which checks a decoding graph is built on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckType {
    /// X-type checks; their defects are caused by Z errors.
    X,
    /// Z-type checks; their defects are caused by X errors.
    Z,
}

impl CheckType {
    /// The pair of boundaries error chains of this graph terminate on.
    pub fn boundaries(self) -> [Boundary; 2] {
        match self {
            CheckType::Z => [Boundary::Left, Boundary::Right],
            CheckType::X => [Boundary::Top, Boundary::Bottom],
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CodeLayout {
    distance: usize,
    n: usize,
    qubit_coords: Vec<(usize, usize)>,
    x_check_coords: Vec<(usize, usize)>,
    z_check_coords: Vec<(usize, usize)>,
    /// Rows of `h_x` as qubit index lists.
    h_x: Vec<Vec<usize>>,
    /// Rows of `h_z` as qubit index lists.
    h_z: Vec<Vec<usize>>,
    logical_x: PauliString,
    logical_z: PauliString,
    boundary_qubits: Vec<(Boundary, Vec<usize>)>,
    #[serde(skip)]
    qubit_x_checks: Vec<Vec<usize>>,
    #[serde(skip)]
    qubit_z_checks: Vec<Vec<usize>>,
    /// Canonical X chain from each Z-check to the right boundary.
    #[serde(skip)]
    z_check_chain: Vec<Vec<usize>>,
    /// Canonical Z chain from each X-check to the bottom boundary.
    #[serde(skip)]
    x_check_chain: Vec<Vec<usize>>,
}

impl CodeLayout {
    /// Builds the distance-`d` unrotated planar code. `d` must be odd.
    pub fn planar(d: usize) -> Result<Self> {
        if d == 0 || d.is_multiple_of(2) {
            return Err(invalid(format!("code distance must be odd and positive, got {d}")));
        }
        let side = 2 * d - 1;
        let mut site_qubit = vec![usize::MAX; side * side];
        let mut qubit_coords = Vec::new();
        let mut x_check_coords = Vec::new();
        let mut z_check_coords = Vec::new();
        for r in 0..side {
            for c in 0..side {
                if (r + c) % 2 == 0 {
                    site_qubit[r * side + c] = qubit_coords.len();
                    qubit_coords.push((r, c));
                } else if r % 2 == 0 {
                    z_check_coords.push((r, c));
                } else {
                    x_check_coords.push((r, c));
                }
            }
        }
        let n = qubit_coords.len();
        let neighbours = |r: usize, c: usize| -> Vec<usize> {
            let mut out = Vec::with_capacity(4);
            if r > 0 {
                out.push(site_qubit[(r - 1) * side + c]);
            }
            if c > 0 {
                out.push(site_qubit[r * side + c - 1]);
            }
            if c + 1 < side {
                out.push(site_qubit[r * side + c + 1]);
            }
            if r + 1 < side {
                out.push(site_qubit[(r + 1) * side + c]);
            }
            out.sort_unstable();
            out
        };
        let h_x: Vec<Vec<usize>> = x_check_coords.iter().map(|&(r, c)| neighbours(r, c)).collect();
        let h_z: Vec<Vec<usize>> = z_check_coords.iter().map(|&(r, c)| neighbours(r, c)).collect();

        let mut qubit_x_checks = vec![Vec::new(); n];
        let mut qubit_z_checks = vec![Vec::new(); n];
        for (j, row) in h_x.iter().enumerate() {
            for &q in row {
                qubit_x_checks[q].push(j);
            }
        }
        for (j, row) in h_z.iter().enumerate() {
            for &q in row {
                qubit_z_checks[q].push(j);
            }
        }

        let logical_x = PauliString::x_on(n, (0..side).step_by(2).map(|c| site_qubit[c]));
        let logical_z = PauliString::z_on(n, (0..side).step_by(2).map(|r| site_qubit[r * side]));

        let on = |pred: &dyn Fn(usize, usize) -> bool| -> Vec<usize> {
            qubit_coords
                .iter()
                .enumerate()
                .filter(|(_, &(r, c))| pred(r, c))
                .map(|(q, _)| q)
                .collect()
        };
        let boundary_qubits = vec![
            (Boundary::Left, on(&|_, c| c == 0)),
            (Boundary::Right, on(&|_, c| c == side - 1)),
            (Boundary::Top, on(&|r, _| r == 0)),
            (Boundary::Bottom, on(&|r, _| r == side - 1)),
        ];

        let z_check_chain = z_check_coords
            .iter()
            .map(|&(r, c)| (c + 1..side).step_by(2).map(|cc| site_qubit[r * side + cc]).collect())
            .collect();
        let x_check_chain = x_check_coords
            .iter()
            .map(|&(r, c)| (r + 1..side).step_by(2).map(|rr| site_qubit[rr * side + c]).collect())
            .collect();

        Ok(Self {
            distance: d,
            n,
            qubit_coords,
            x_check_coords,
            z_check_coords,
            h_x,
            h_z,
            logical_x,
            logical_z,
            boundary_qubits,
            qubit_x_checks,
            qubit_z_checks,
            z_check_chain,
            x_check_chain,
        })
    }

    pub fn distance(&self) -> usize {
        self.distance
    }

    /// Number of data qubits.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_x_checks(&self) -> usize {
        self.h_x.len()
    }

    pub fn num_z_checks(&self) -> usize {
        self.h_z.len()
    }

    pub fn num_checks(&self, t: CheckType) -> usize {
        match t {
            CheckType::X => self.num_x_checks(),
            CheckType::Z => self.num_z_checks(),
        }
    }

    pub fn h_x(&self) -> &[Vec<usize>] {
        &self.h_x
    }

    pub fn h_z(&self) -> &[Vec<usize>] {
        &self.h_z
    }

    pub fn checks(&self, t: CheckType) -> &[Vec<usize>] {
        match t {
            CheckType::X => &self.h_x,
            CheckType::Z => &self.h_z,
        }
    }

    /// Checks of type `t` that qubit `q` participates in.
    pub fn qubit_checks(&self, t: CheckType, q: usize) -> &[usize] {
        match t {
            CheckType::X => &self.qubit_x_checks[q],
            CheckType::Z => &self.qubit_z_checks[q],
        }
    }

    pub fn logical_x(&self) -> &PauliString {
        &self.logical_x
    }

    pub fn logical_z(&self) -> &PauliString {
        &self.logical_z
    }

    pub fn qubit_coords(&self) -> &[(usize, usize)] {
        &self.qubit_coords
    }

    pub fn check_coords(&self, t: CheckType) -> &[(usize, usize)] {
        match t {
            CheckType::X => &self.x_check_coords,
            CheckType::Z => &self.z_check_coords,
        }
    }

    pub fn boundary_qubits(&self, b: Boundary) -> &[usize] {
        self.boundary_qubits
            .iter()
            .find(|(bb, _)| *bb == b)
            .map(|(_, v)| v.as_slice())
            .unwrap_or(&[])
    }

    /// Logical representative for a class (`Y = X * Z`).
    pub fn logical(&self, class: Pauli) -> PauliString {
        let mut p = PauliString::identity(self.n);
        if class.x() {
            p.mul_assign(&self.logical_x).expect("same length");
        }
        if class.z() {
            p.mul_assign(&self.logical_z).expect("same length");
        }
        p
    }

    /// Stabilizer generators: X-type checks first, then Z-type checks.
    pub fn stabilizer_generators(&self) -> Vec<PauliString> {
        self.h_x
            .iter()
            .map(|row| PauliString::x_on(self.n, row.iter().copied()))
            .chain(self.h_z.iter().map(|row| PauliString::z_on(self.n, row.iter().copied())))
            .collect()
    }

    pub fn syndrome(&self, error: &PauliString) -> Result<Syndrome> {
        check_len(self.n, error.len())?;
        Ok(Syndrome {
            x_defects: self.parities(&self.h_x, error.z_bits()),
            z_defects: self.parities(&self.h_z, error.x_bits()),
        })
    }

    fn parities(&self, rows: &[Vec<usize>], bits: &BitSlice<u64, Lsb0>) -> Bits {
        rows.iter()
            .map(|row| row.iter().filter(|&&q| bits[q]).count() % 2 == 1)
            .collect()
    }

    /// The fixed correction `corr(s)`: product of canonical chains from every
    /// defect to the reference boundary (right for Z-defects, bottom for
    /// X-defects).
    pub fn correction(&self, s: &Syndrome) -> Result<PauliString> {
        self.check_syndrome(s)?;
        let mut p = PauliString::identity(self.n);
        for j in s.z_defects.iter_ones() {
            for &q in &self.z_check_chain[j] {
                let b = p.x_bits()[q];
                p.x_bits_mut().set(q, !b);
            }
        }
        for j in s.x_defects.iter_ones() {
            for &q in &self.x_check_chain[j] {
                let b = p.z_bits()[q];
                p.z_bits_mut().set(q, !b);
            }
        }
        Ok(p)
    }

    /// Class of the trivial-syndrome operator `residual`: its X-bit is set iff
    /// it anticommutes with `logical_z`, its Z-bit iff it anticommutes with
    /// `logical_x`.
    pub fn class_of_trivial(&self, residual: &PauliString) -> Result<Pauli> {
        let xbit = residual.symplectic(&self.logical_z)?;
        let zbit = residual.symplectic(&self.logical_x)?;
        Ok(Pauli::from_bits(xbit, zbit))
    }

    /// Logical effect of `E`: the class of `E * corr(synd(E))`.
    pub fn logical_effect(&self, error: &PauliString) -> Result<Pauli> {
        let s = self.syndrome(error)?;
        let mut residual = self.correction(&s)?;
        residual.mul_assign(error)?;
        self.class_of_trivial(&residual)
    }

    pub fn check_syndrome(&self, s: &Syndrome) -> Result<()> {
        check_len(self.num_x_checks(), s.x_defects.len())?;
        check_len(self.num_z_checks(), s.z_defects.len())
    }

    pub fn empty_syndrome(&self) -> Syndrome {
        Syndrome {
            x_defects: bitvec![u64, Lsb0; 0; self.num_x_checks()],
            z_defects: bitvec![u64, Lsb0; 0; self.num_z_checks()],
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("layout serialises")
    }
}

/// Check outcomes. `x_defects` are X-type checks (flipped by Z errors),
/// `z_defects` are Z-type checks (flipped by X errors).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Syndrome {
    pub x_defects: Bits,
    pub z_defects: Bits,
}

impl Syndrome {
    pub fn defects(&self, t: CheckType) -> &Bits {
        match t {
            CheckType::X => &self.x_defects,
            CheckType::Z => &self.z_defects,
        }
    }

    pub fn defects_mut(&mut self, t: CheckType) -> &mut Bits {
        match t {
            CheckType::X => &mut self.x_defects,
            CheckType::Z => &mut self.z_defects,
        }
    }

    pub fn is_trivial(&self) -> bool {
        self.x_defects.not_any() && self.z_defects.not_any()
    }

    pub fn xor(&self, other: &Syndrome) -> Result<Syndrome> {
        check_len(self.x_defects.len(), other.x_defects.len())?;
        check_len(self.z_defects.len(), other.z_defects.len())?;
        Ok(Syndrome {
            x_defects: self.x_defects.clone() ^ &other.x_defects,
            z_defects: self.z_defects.clone() ^ &other.z_defects,
        })
    }

    /// Packs the syndrome into an integer key (X-defects in the low bits).
    /// Only valid when the total number of checks is at most 64.
    pub fn key(&self) -> u64 {
        let mut k = 0u64;
        let nx = self.x_defects.len();
        for j in self.x_defects.iter_ones() {
            k |= 1 << j;
        }
        for j in self.z_defects.iter_ones() {
            k |= 1 << (nx + j);
        }
        k
    }

    pub fn from_key(key: u64, nx: usize, nz: usize) -> Syndrome {
        Syndrome {
            x_defects: (0..nx).map(|j| key >> j & 1 == 1).collect(),
            z_defects: (0..nz).map(|j| key >> (nx + j) & 1 == 1).collect(),
        }
    }
}

/// I.i.d. Pauli noise on data qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    channels: Vec<PauliChannel>,
    uniform: bool,
}

impl NoiseModel {
    pub fn uniform(channel: PauliChannel) -> Result<Self> {
        if channel.n_qubits() != 1 {
            return Err(invalid("per-qubit noise must be a single-qubit channel"));
        }
        Ok(Self {
            channels: vec![channel],
            uniform: true,
        })
    }

    /// Heterogeneous per-qubit channels.
    pub fn per_qubit(channels: Vec<PauliChannel>) -> Result<Self> {
        if channels.iter().any(|c| c.n_qubits() != 1) {
            return Err(invalid("per-qubit noise must be single-qubit channels"));
        }
        Ok(Self {
            channels,
            uniform: false,
        })
    }

    /// Depolarizing noise with total error probability `p`.
    pub fn depolarizing(p: f64) -> Result<Self> {
        Self::uniform(PauliChannel::single(p / 3.0, p / 3.0, p / 3.0)?)
    }

    pub fn from_xyz(qx: f64, qy: f64, qz: f64) -> Result<Self> {
        Self::uniform(PauliChannel::single(qx, qy, qz)?)
    }

    /// Independent X flips (`px`) and Z flips (`pz`): `q_Y = px * pz`.
    pub fn independent_xz(px: f64, pz: f64) -> Result<Self> {
        Self::uniform(PauliChannel::single(
            px * (1.0 - pz),
            px * pz,
            (1.0 - px) * pz,
        )?)
    }

    pub fn channel(&self, qubit: usize) -> &PauliChannel {
        if self.uniform {
            &self.channels[0]
        } else {
            &self.channels[qubit]
        }
    }

    pub fn is_uniform(&self) -> bool {
        self.uniform
    }

    fn check_n(&self, n: usize) -> Result<()> {
        if self.uniform {
            Ok(())
        } else {
            check_len(n, self.channels.len())
        }
    }

    /// Probability of a single-qubit Pauli on `qubit`.
    #[inline]
    pub fn prob(&self, qubit: usize, p: Pauli) -> f64 {
        self.channel(qubit).prob(p.index())
    }

    /// Marginal probability that `qubit` flips checks of type `t`:
    /// `q_X + q_Y` for Z-checks, `q_Z + q_Y` for X-checks.
    pub fn marginal(&self, qubit: usize, t: CheckType) -> f64 {
        let c = self.channel(qubit);
        match t {
            CheckType::Z => c.prob(1) + c.prob(2),
            CheckType::X => c.prob(3) + c.prob(2),
        }
    }

    /// True when the X and Z components are independent on every qubit
    /// (`q_I q_Y = q_X q_Z`), so the two check types decouple exactly.
    pub fn is_xz_independent(&self) -> bool {
        self.channels.iter().all(|c| {
            let p = c.probs();
            (p[0] * p[2] - p[1] * p[3]).abs() <= 1e-15 * (p[0] * p[2]).abs().max(1e-300)
        })
    }

    /// Log-probability of a full error string.
    pub fn log_prob(&self, e: &PauliString) -> f64 {
        (0..e.len()).map(|q| self.prob(q, e.get(q)).ln()).sum()
    }

    pub fn sample(&self, layout: &CodeLayout, rng: &mut RandomStream) -> Result<PauliString> {
        self.check_n(layout.n())?;
        let n = layout.n();
        let mut e = PauliString::identity(n);
        for q in 0..n {
            let c = self.channel(q).probs();
            let u = rng.uniform();
            // cumulative in X, Y, Z order; the identity takes the remainder
            let p = if u < c[1] {
                Pauli::X
            } else if u < c[1] + c[2] {
                Pauli::Y
            } else if u < c[1] + c[2] + c[3] {
                Pauli::Z
            } else {
                Pauli::I
            };
            if p != Pauli::I {
                e.set(q, p);
            }
        }
        Ok(e)
    }
}

pub fn sample_error(
    layout: &CodeLayout,
    noise: &NoiseModel,
    rng: &mut RandomStream,
) -> Result<PauliString> {
    noise.sample(layout, rng)
}

pub fn extract_syndrome(layout: &CodeLayout, error: &PauliString) -> Result<Syndrome> {
    layout.syndrome(error)
}

pub fn logical_effect(layout: &CodeLayout, error: &PauliString) -> Result<Pauli> {
    layout.logical_effect(error)
}

/// Applies `f` once per distinct syndrome (in parallel) and scatters the
/// results back to input order.
pub fn map_unique<T, F>(syndromes: &[Syndrome], f: F) -> Result<Vec<T>>
where
    T: Clone + Send,
    F: Fn(&Syndrome) -> Result<T> + Sync,
{
    use rayon::prelude::*;
    use std::collections::HashMap;

    let mut index: HashMap<&Syndrome, usize> = HashMap::new();
    let mut unique: Vec<&Syndrome> = Vec::new();
    let slot: Vec<usize> = syndromes
        .iter()
        .map(|s| {
            *index.entry(s).or_insert_with(|| {
                unique.push(s);
                unique.len() - 1
            })
        })
        .collect();
    let values: Vec<T> = unique.par_iter().map(|s| f(s)).collect::<Result<_>>()?;
    Ok(slot.into_iter().map(|k| values[k].clone()).collect())
}

/// Ensures a layout-shaped syndrome; used by decoders.
pub(crate) fn require_syndrome(layout: &CodeLayout, s: &Syndrome) -> Result<()> {
    layout
        .check_syndrome(s)
        .map_err(|e| Error::InvalidArgument(format!("syndrome does not match layout: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_even_or_zero_distance() {
        assert!(CodeLayout::planar(0).is_err());
        assert!(CodeLayout::planar(4).is_err());
    }

    #[test]
    fn d1_is_a_bare_qubit() {
        let l = CodeLayout::planar(1).unwrap();
        assert_eq!(l.n(), 1);
        assert_eq!(l.num_x_checks(), 0);
        assert_eq!(l.num_z_checks(), 0);
        assert_eq!(l.logical_x().to_string(), "X");
        assert_eq!(l.logical_z().to_string(), "Z");
    }

    #[test]
    fn counts_follow_unrotated_construction() {
        for d in [3usize, 5, 7] {
            let l = CodeLayout::planar(d).unwrap();
            assert_eq!(l.n(), d * d + (d - 1) * (d - 1));
            assert_eq!(l.num_x_checks(), d * (d - 1));
            assert_eq!(l.num_z_checks(), d * (d - 1));
            assert_eq!(l.logical_x().weight(), d);
            assert_eq!(l.logical_z().weight(), d);
        }
    }

    #[test]
    fn css_and_logical_commutation() {
        for d in [1usize, 3, 5] {
            let l = CodeLayout::planar(d).unwrap();
            let gens = l.stabilizer_generators();
            for a in &gens {
                for b in &gens {
                    assert!(a.commutes(b).unwrap());
                }
                assert!(a.commutes(l.logical_x()).unwrap());
                assert!(a.commutes(l.logical_z()).unwrap());
            }
            assert!(!l.logical_x().commutes(l.logical_z()).unwrap());
        }
    }

    #[test]
    fn syndrome_examples() {
        let l = CodeLayout::planar(3).unwrap();
        let id = PauliString::identity(l.n());
        assert!(l.syndrome(&id).unwrap().is_trivial());
        assert!(l.syndrome(l.logical_x()).unwrap().is_trivial());
        // bulk qubit at (1,1) touches Z-checks (0,1) and (2,1)
        let q = l.qubit_coords().iter().position(|&c| c == (1, 1)).unwrap();
        let s = l.syndrome(&PauliString::single(l.n(), q, Pauli::X)).unwrap();
        assert_eq!(s.z_defects.count_ones(), 2);
        assert_eq!(s.x_defects.count_ones(), 0);
        assert_eq!(s.z_defects.count_ones(), l.qubit_checks(CheckType::Z, q).len());
        assert!(l.syndrome(&PauliString::identity(4)).is_err());
    }

    #[test]
    fn correction_reproduces_syndrome() {
        let l = CodeLayout::planar(5).unwrap();
        let mut rng = RandomStream::new(3);
        let noise = NoiseModel::depolarizing(0.2).unwrap();
        for _ in 0..50 {
            let e = noise.sample(&l, &mut rng).unwrap();
            let s = l.syndrome(&e).unwrap();
            assert_eq!(l.syndrome(&l.correction(&s).unwrap()).unwrap(), s);
        }
    }

    #[test]
    fn logical_effect_examples() {
        let l = CodeLayout::planar(3).unwrap();
        assert_eq!(l.logical_effect(l.logical_x()).unwrap(), Pauli::X);
        assert_eq!(l.logical_effect(l.logical_z()).unwrap(), Pauli::Z);
        assert_eq!(l.logical_effect(&l.logical(Pauli::Y)).unwrap(), Pauli::Y);
        for g in l.stabilizer_generators() {
            assert_eq!(l.logical_effect(&g).unwrap(), Pauli::I);
        }
    }

    #[test]
    fn deterministic_sampling_edges() {
        let l = CodeLayout::planar(3).unwrap();
        let mut rng = RandomStream::new(0);
        let quiet = NoiseModel::from_xyz(0.0, 0.0, 0.0).unwrap();
        assert!(quiet.sample(&l, &mut rng).unwrap().is_identity());
        let all_x = NoiseModel::from_xyz(1.0, 0.0, 0.0).unwrap();
        let e = all_x.sample(&l, &mut rng).unwrap();
        assert_eq!(e, PauliString::x_on(l.n(), 0..l.n()));
    }

    #[test]
    fn sampling_rate_within_binomial_band() {
        let l = CodeLayout::planar(3).unwrap();
        let noise = NoiseModel::depolarizing(0.01).unwrap();
        let mut rng = RandomStream::new(11);
        let draws = 1_000_000 / l.n() + 1;
        let mut hits = 0usize;
        let mut total = 0usize;
        for _ in 0..draws {
            let e = noise.sample(&l, &mut rng).unwrap();
            hits += e.weight();
            total += l.n();
        }
        let p = 0.01;
        let sigma = (p * (1.0 - p) / total as f64).sqrt();
        let rate = hits as f64 / total as f64;
        assert!((rate - p).abs() < 5.0 * sigma, "rate {rate}");
    }

    #[test]
    fn independent_xz_detection() {
        assert!(NoiseModel::independent_xz(0.01, 0.02).unwrap().is_xz_independent());
        assert!(!NoiseModel::depolarizing(0.01).unwrap().is_xz_independent());
        assert!(NoiseModel::from_xyz(0.0, 0.0, 0.1).unwrap().is_xz_independent());
    }

    #[test]
    fn syndrome_key_roundtrip() {
        let l = CodeLayout::planar(3).unwrap();
        for key in [0u64, 1, 0b1010_0110_0101, 4095] {
            let s = Syndrome::from_key(key, 6, 6);
            assert_eq!(s.key(), key);
            l.check_syndrome(&s).unwrap();
        }
    }

    fn arb_error(n: usize) -> impl Strategy<Value = PauliString> {
        proptest::collection::vec(0usize..4, n).prop_map(|v| {
            let mut p = PauliString::identity(v.len());
            for (q, i) in v.into_iter().enumerate() {
                p.set(q, Pauli::from_index(i));
            }
            p
        })
    }

    proptest! {
        #[test]
        fn syndrome_is_linear(a in arb_error(13), b in arb_error(13)) {
            let l = CodeLayout::planar(3).unwrap();
            let sab = l.syndrome(&a.mul(&b).unwrap()).unwrap();
            let sa = l.syndrome(&a).unwrap();
            let sb = l.syndrome(&b).unwrap();
            prop_assert_eq!(sab, sa.xor(&sb).unwrap());
        }

        #[test]
        fn logical_effect_constant_on_cosets(e in arb_error(41), mask in proptest::collection::vec(any::<bool>(), 40)) {
            let l = CodeLayout::planar(5).unwrap();
            let mut f = e.clone();
            for (g, keep) in l.stabilizer_generators().iter().zip(mask) {
                if keep {
                    f.mul_assign(g).unwrap();
                }
            }
            prop_assert_eq!(l.logical_effect(&e).unwrap(), l.logical_effect(&f).unwrap());
            let mut lx = l.logical_x().clone();
            lx.mul_assign(&f).unwrap();
            lx.mul_assign(&e).unwrap();
            prop_assert_eq!(l.logical_effect(&lx).unwrap(), Pauli::X);
        }
    }

    #[test]
    fn logical_effect_is_a_homomorphism_on_low_weight_errors() {
        // exhaust all pairs of weight <= 1 errors at d = 3
        let l = CodeLayout::planar(3).unwrap();
        let mut singles = vec![PauliString::identity(l.n())];
        for q in 0..l.n() {
            for p in [Pauli::X, Pauli::Y, Pauli::Z] {
                singles.push(PauliString::single(l.n(), q, p));
            }
        }
        for a in &singles {
            for b in &singles {
                let ab = a.mul(b).unwrap();
                let want = l.logical_effect(a).unwrap().mul(l.logical_effect(b).unwrap());
                assert_eq!(l.logical_effect(&ab).unwrap(), want);
            }
        }
    }
}
