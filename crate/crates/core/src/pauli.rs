//! Phase-free Pauli operators in the symplectic (x|z) representation.
//!
//! Phases are dropped everywhere: syndromes, logical classes, frame flips and
//! Pauli channels only ever depend on commutation.

use std::fmt;
use std::str::FromStr;

use bitvec::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

pub type Bits = BitVec<u64, Lsb0>;

/// Single-qubit Pauli. The discriminant is the class index used by
/// channels and posteriors: `I=0, X=1, Y=2, Z=3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pauli {
    I = 0,
    X = 1,
    Y = 2,
    Z = 3,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    pub fn from_index(i: usize) -> Self {
        Self::ALL[i & 3]
    }

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    #[inline]
    pub fn x(self) -> bool {
        matches!(self, Pauli::X | Pauli::Y)
    }

    #[inline]
    pub fn z(self) -> bool {
        matches!(self, Pauli::Z | Pauli::Y)
    }

    /// Product modulo phase.
    pub fn mul(self, other: Pauli) -> Pauli {
        Pauli::from_bits(self.x() ^ other.x(), self.z() ^ other.z())
    }

    pub fn commutes(self, other: Pauli) -> bool {
        !((self.x() & other.z()) ^ (self.z() & other.x()))
    }

    pub fn symbol(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn from_symbol(c: char) -> Option<Self> {
        match c {
            'I' | '_' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }
}

impl fmt::Display for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

/// An n-qubit Pauli operator without phase.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PauliString {
    x: Bits,
    z: Bits,
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        Self {
            x: bitvec![u64, Lsb0; 0; n],
            z: bitvec![u64, Lsb0; 0; n],
        }
    }

    pub fn from_bits(x: Bits, z: Bits) -> Result<Self> {
        check_len(x.len(), z.len())?;
        Ok(Self { x, z })
    }

    /// Pure X operator on the given support.
    pub fn x_on(n: usize, support: impl IntoIterator<Item = usize>) -> Self {
        let mut p = Self::identity(n);
        for q in support {
            p.x.set(q, true);
        }
        p
    }

    /// Pure Z operator on the given support.
    pub fn z_on(n: usize, support: impl IntoIterator<Item = usize>) -> Self {
        let mut p = Self::identity(n);
        for q in support {
            p.z.set(q, true);
        }
        p
    }

    pub fn single(n: usize, qubit: usize, p: Pauli) -> Self {
        let mut s = Self::identity(n);
        s.set(qubit, p);
        s
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn x_bits(&self) -> &BitSlice<u64, Lsb0> {
        &self.x
    }

    pub fn z_bits(&self) -> &BitSlice<u64, Lsb0> {
        &self.z
    }

    pub fn x_bits_mut(&mut self) -> &mut BitSlice<u64, Lsb0> {
        &mut self.x
    }

    pub fn z_bits_mut(&mut self) -> &mut BitSlice<u64, Lsb0> {
        &mut self.z
    }

    pub fn get(&self, qubit: usize) -> Pauli {
        Pauli::from_bits(self.x[qubit], self.z[qubit])
    }

    pub fn set(&mut self, qubit: usize, p: Pauli) {
        self.x.set(qubit, p.x());
        self.z.set(qubit, p.z());
    }

    pub fn weight(&self) -> usize {
        (self.x.clone() | &self.z).count_ones()
    }

    pub fn is_identity(&self) -> bool {
        self.x.not_any() && self.z.not_any()
    }

    /// Product modulo phase: componentwise XOR of both bit planes.
    pub fn mul(&self, other: &PauliString) -> Result<PauliString> {
        let mut out = self.clone();
        out.mul_assign(other)?;
        Ok(out)
    }

    pub fn mul_assign(&mut self, other: &PauliString) -> Result<()> {
        check_len(self.len(), other.len())?;
        self.x ^= &other.x;
        self.z ^= &other.z;
        Ok(())
    }

    /// Symplectic inner product `sum_i a.x[i] b.z[i] + a.z[i] b.x[i] (mod 2)`.
    pub fn symplectic(&self, other: &PauliString) -> Result<bool> {
        check_len(self.len(), other.len())?;
        Ok(symplectic_words(
            self.x.as_raw_slice(),
            self.z.as_raw_slice(),
            other.x.as_raw_slice(),
            other.z.as_raw_slice(),
        ))
    }

    pub fn commutes(&self, other: &PauliString) -> Result<bool> {
        self.symplectic(other).map(|s| !s)
    }

    /// Returns `g p g^dagger` (phase discarded).
    pub fn conjugate(&self, gate: &CliffordGate) -> Result<PauliString> {
        let mut out = self.clone();
        out.apply(gate)?;
        Ok(out)
    }

    /// In-place conjugation by a Clifford gate.
    pub fn apply(&mut self, gate: &CliffordGate) -> Result<()> {
        let n = self.len();
        for q in gate.targets() {
            if q >= n {
                return Err(Error::OutOfRange { index: q, n });
            }
        }
        match *gate {
            CliffordGate::H(q) => {
                let (x, z) = (self.x[q], self.z[q]);
                self.x.set(q, z);
                self.z.set(q, x);
            }
            CliffordGate::S(q) => {
                // X -> Y, Y -> X, Z -> Z
                let x = self.x[q];
                let z = self.z[q];
                self.z.set(q, z ^ x);
            }
            CliffordGate::Cnot { control, target } => {
                if control == target {
                    return Err(Error::InvalidArgument("CNOT control equals target".into()));
                }
                let xc = self.x[control];
                let zt = self.z[target];
                let xt = self.x[target];
                let zc = self.z[control];
                self.x.set(target, xt ^ xc);
                self.z.set(control, zc ^ zt);
            }
            CliffordGate::Pauli(_, _) => {}
        }
        Ok(())
    }

    /// Iterator over non-identity sites.
    pub fn support(&self) -> impl Iterator<Item = (usize, Pauli)> + '_ {
        (self.x.clone() | &self.z)
            .iter_ones()
            .map(|q| (q, self.get(q)))
            .collect::<Vec<_>>()
            .into_iter()
    }
}

#[inline]
pub(crate) fn symplectic_words(ax: &[u64], az: &[u64], bx: &[u64], bz: &[u64]) -> bool {
    let mut acc = 0u32;
    for i in 0..ax.len() {
        acc ^= ((ax[i] & bz[i]) ^ (az[i] & bx[i])).count_ones() & 1;
    }
    acc & 1 == 1
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in 0..self.len() {
            write!(f, "{}", self.get(q).symbol())?;
        }
        Ok(())
    }
}

impl fmt::Debug for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PauliString({self})")
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let chars: Vec<char> = s.trim().chars().collect();
        let mut p = PauliString::identity(chars.len());
        for (q, c) in chars.into_iter().enumerate() {
            let pauli = Pauli::from_symbol(c)
                .ok_or_else(|| Error::InvalidArgument(format!("bad Pauli symbol {c:?}")))?;
            p.set(q, pauli);
        }
        Ok(p)
    }
}

impl Serialize for PauliString {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PauliString {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Clifford gates used by logical circuits and error propagation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CliffordGate {
    H(usize),
    S(usize),
    Cnot { control: usize, target: usize },
    /// A Pauli gate. Conjugation by it is trivial up to phase.
    Pauli(usize, Pauli),
}

impl CliffordGate {
    pub fn targets(&self) -> Vec<usize> {
        match *self {
            CliffordGate::H(q) | CliffordGate::S(q) | CliffordGate::Pauli(q, _) => vec![q],
            CliffordGate::Cnot { control, target } => vec![control, target],
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            CliffordGate::Cnot { .. } => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for CliffordGate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliffordGate::H(q) => write!(f, "H {q}"),
            CliffordGate::S(q) => write!(f, "S {q}"),
            CliffordGate::Cnot { control, target } => write!(f, "CNOT {control} {target}"),
            CliffordGate::Pauli(q, p) => write!(f, "{p} {q}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ps(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    #[test]
    fn group_table() {
        assert_eq!(ps("X").mul(&ps("Z")).unwrap(), ps("Y"));
        for p in ["I", "X", "Y", "Z"] {
            assert!(ps(p).mul(&ps(p)).unwrap().is_identity());
        }
        assert_eq!(ps("XI").mul(&ps("XZ")).unwrap(), ps("IZ"));
    }

    #[test]
    fn commutation_examples() {
        assert!(!ps("X").commutes(&ps("Z")).unwrap());
        assert!(ps("XX").commutes(&ps("ZZ")).unwrap());
        for p in ["I", "X", "Y", "Z"] {
            assert!(ps(p).commutes(&ps("I")).unwrap());
        }
    }

    #[test]
    fn length_mismatch_is_error() {
        assert!(matches!(
            ps("XX").mul(&ps("X")),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(ps("XX").commutes(&ps("X")).is_err());
    }

    #[test]
    fn cnot_and_single_qubit_rules() {
        let cx = CliffordGate::Cnot { control: 0, target: 1 };
        assert_eq!(ps("XI").conjugate(&cx).unwrap(), ps("XX"));
        assert_eq!(ps("IZ").conjugate(&cx).unwrap(), ps("ZZ"));
        assert_eq!(ps("ZI").conjugate(&cx).unwrap(), ps("ZI"));
        assert_eq!(ps("IX").conjugate(&cx).unwrap(), ps("IX"));
        assert_eq!(ps("Z").conjugate(&CliffordGate::H(0)).unwrap(), ps("X"));
        assert_eq!(ps("X").conjugate(&CliffordGate::S(0)).unwrap(), ps("Y"));
        assert_eq!(ps("Z").conjugate(&CliffordGate::S(0)).unwrap(), ps("Z"));
        assert!(matches!(
            ps("X").conjugate(&CliffordGate::H(3)),
            Err(Error::OutOfRange { index: 3, n: 1 })
        ));
    }

    #[test]
    fn text_roundtrip_and_weight() {
        let p = ps("IXZY");
        assert_eq!(p.to_string(), "IXZY");
        assert_eq!(p.weight(), 3);
        assert!("IQ".parse::<PauliString>().is_err());
        let json = serde_json::to_string(&p).unwrap();
        assert_eq!(json, "\"IXZY\"");
        assert_eq!(serde_json::from_str::<PauliString>(&json).unwrap(), p);
    }

    fn arb_pauli(n: usize) -> impl Strategy<Value = PauliString> {
        proptest::collection::vec(0usize..4, n).prop_map(|v| {
            let mut p = PauliString::identity(v.len());
            for (q, i) in v.into_iter().enumerate() {
                p.set(q, Pauli::from_index(i));
            }
            p
        })
    }

    fn arb_gate(n: usize) -> impl Strategy<Value = CliffordGate> {
        prop_oneof![
            (0..n).prop_map(CliffordGate::H),
            (0..n).prop_map(CliffordGate::S),
            (0..n, 1..n).prop_map(move |(c, off)| CliffordGate::Cnot {
                control: c,
                target: (c + off) % n
            }),
            (0..n, 0usize..4).prop_map(|(q, i)| CliffordGate::Pauli(q, Pauli::from_index(i))),
        ]
    }

    proptest! {
        #[test]
        fn commutation_symmetric(a in arb_pauli(7), b in arb_pauli(7)) {
            prop_assert_eq!(a.commutes(&b).unwrap(), b.commutes(&a).unwrap());
        }

        #[test]
        fn conjugation_preserves_commutation(a in arb_pauli(5), b in arb_pauli(5), g in arb_gate(5)) {
            let ca = a.conjugate(&g).unwrap();
            let cb = b.conjugate(&g).unwrap();
            prop_assert_eq!(a.commutes(&b).unwrap(), ca.commutes(&cb).unwrap());
        }

        #[test]
        fn product_associative_and_involutive(a in arb_pauli(70), b in arb_pauli(70), c in arb_pauli(70)) {
            let left = a.mul(&b).unwrap().mul(&c).unwrap();
            let right = a.mul(&b.mul(&c).unwrap()).unwrap();
            prop_assert_eq!(&left, &right);
            prop_assert!(a.mul(&a).unwrap().is_identity());
        }
    }
}
