//! Exact coset sums `Z_L(s) = sum_{E in C_{s,L}} p(E)`.
//!
//! Enumeration walks the stabilizer group in Gray-code order starting from
//! `corr(s) * L`, so each step multiplies in one generator. When X and Z
//! errors are independent the two check types decouple and each sector is
//! enumerated over its own stabilizer subgroup.

mod bias;
mod mps;

pub use bias::{bias_table, exact_posteriors, expected_bias, BiasRow, Oracle};
pub use mps::{mps_coset_log_sums, mps_posteriors, MpsConfig};

use rayon::prelude::*;
use serde::Serialize;

use crate::channel::PosteriorVector;
use crate::code::{require_syndrome, CodeLayout, NoiseModel, Syndrome};
use crate::error::{Error, Result};
use crate::pauli::Pauli;
use crate::stats::KahanSum;

/// Largest enumeration (in log2 of summed terms) accepted.
pub const MAX_TERMS_LOG2: u32 = 26;

/// Unnormalised coset masses indexed by class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CosetSums {
    pub z: [f64; 4],
}

impl CosetSums {
    /// `Pr(s)`.
    pub fn total(&self) -> f64 {
        self.z.iter().sum()
    }

    pub fn posterior(&self) -> Result<PosteriorVector> {
        PosteriorVector::from_weights(self.z)
    }
}

fn mask(bits: &bitvec::slice::BitSlice<u64, bitvec::order::Lsb0>) -> u64 {
    bits.iter_ones().fold(0u64, |m, i| m | 1 << i)
}

fn row_mask(row: &[usize]) -> u64 {
    row.iter().fold(0u64, |m, &q| m | 1 << q)
}

fn require_small(layout: &CodeLayout) -> Result<()> {
    if layout.n() > 64 {
        return Err(Error::Capacity {
            what: format!("bit-packed enumeration on {} qubits", layout.n()),
            needed_log2: layout.n() as u32,
            max_log2: 64,
        });
    }
    Ok(())
}

/// Probability of a packed Pauli string.
struct Weigher {
    n: usize,
    uniform: Option<[Vec<f64>; 4]>,
    per_qubit: Vec<[f64; 4]>,
}

impl Weigher {
    fn new(layout: &CodeLayout, noise: &NoiseModel) -> Self {
        let n = layout.n();
        let per_qubit: Vec<[f64; 4]> = (0..n).map(|q| Pauli::ALL.map(|p| noise.prob(q, p))).collect();
        let uniform = noise.is_uniform().then(|| {
            let q = per_qubit[0];
            [0, 1, 2, 3].map(|c| (0..=n).map(|k| q[c].powi(k as i32)).collect())
        });
        Self { n, uniform, per_qubit }
    }

    #[inline]
    fn weight(&self, x: u64, z: u64) -> f64 {
        match &self.uniform {
            Some(pw) => {
                let cx = (x & !z).count_ones() as usize;
                let cy = (x & z).count_ones() as usize;
                let cz = (z & !x).count_ones() as usize;
                pw[0][self.n - cx - cy - cz] * pw[1][cx] * pw[2][cy] * pw[3][cz]
            }
            None => (0..self.n)
                .map(|q| {
                    let idx = [[0, 3], [1, 2]][(x >> q & 1) as usize][(z >> q & 1) as usize];
                    self.per_qubit[q][idx]
                })
                .product(),
        }
    }
}

/// Sum of `w(start ^ prod of any subset of gens)`, Gray-code ordered and split
/// into independent chunks over the highest generators.
fn gray_sum<W>(start: (u64, u64), gens: &[(u64, u64)], w: W) -> f64
where
    W: Fn(u64, u64) -> f64 + Sync,
{
    let k = gens.len();
    let t = if k > 14 { (k - 12).min(8) } else { 0 };
    let low = &gens[..k - t];
    let high = &gens[k - t..];
    let partials: Vec<f64> = (0u64..1 << t)
        .into_par_iter()
        .map(|c| {
            let (mut x, mut z) = start;
            for (j, g) in high.iter().enumerate() {
                if c >> j & 1 == 1 {
                    x ^= g.0;
                    z ^= g.1;
                }
            }
            let mut acc = KahanSum::new();
            acc.add(w(x, z));
            for i in 1u64..1 << low.len() {
                let g = low[i.trailing_zeros() as usize];
                x ^= g.0;
                z ^= g.1;
                acc.add(w(x, z));
            }
            acc.value()
        })
        .collect();
    crate::stats::compensated_sum(partials)
}

/// Exact coset sums over the full stabilizer group (any Pauli noise).
pub fn full_coset_sums(layout: &CodeLayout, noise: &NoiseModel, s: &Syndrome) -> Result<CosetSums> {
    require_syndrome(layout, s)?;
    let needed = layout.n() as u32 + 1;
    if needed > MAX_TERMS_LOG2 {
        return Err(Error::Capacity {
            what: format!("coset enumeration at d={}", layout.distance()),
            needed_log2: needed,
            max_log2: MAX_TERMS_LOG2,
        });
    }
    require_small(layout)?;
    let e0 = layout.correction(s)?;
    let (x0, z0) = (mask(e0.x_bits()), mask(e0.z_bits()));
    let gens: Vec<(u64, u64)> = layout
        .h_x()
        .iter()
        .map(|r| (row_mask(r), 0))
        .chain(layout.h_z().iter().map(|r| (0, row_mask(r))))
        .collect();
    let wt = Weigher::new(layout, noise);
    let lx = mask(layout.logical_x().x_bits());
    let lz = mask(layout.logical_z().z_bits());
    let mut z = [0.0; 4];
    for c in Pauli::ALL {
        let start = (x0 ^ if c.x() { lx } else { 0 }, z0 ^ if c.z() { lz } else { 0 });
        z[c.index()] = gray_sum(start, &gens, |x, zz| wt.weight(x, zz));
    }
    Ok(CosetSums { z })
}

/// Exact coset sums for noise with independent X and Z components: each
/// sector is summed over its own stabilizer subgroup and the class mass is
/// the product of the two sector masses.
pub fn decoupled_coset_sums(layout: &CodeLayout, noise: &NoiseModel, s: &Syndrome) -> Result<CosetSums> {
    require_syndrome(layout, s)?;
    if !noise.is_xz_independent() {
        return Err(crate::error::invalid(
            "decoupled enumeration needs independent X and Z errors (q_I q_Y = q_X q_Z)",
        ));
    }
    let per_sector = layout.num_x_checks().max(layout.num_z_checks()) as u32;
    let needed = per_sector + 2;
    if needed > MAX_TERMS_LOG2 {
        return Err(Error::Capacity {
            what: format!("decoupled enumeration at d={}", layout.distance()),
            needed_log2: needed,
            max_log2: MAX_TERMS_LOG2,
        });
    }
    require_small(layout)?;
    let n = layout.n();
    let e0 = layout.correction(s)?;
    let px: Vec<f64> = (0..n).map(|q| noise.marginal(q, crate::code::CheckType::Z)).collect();
    let pz: Vec<f64> = (0..n).map(|q| noise.marginal(q, crate::code::CheckType::X)).collect();
    let sector = |start: u64, gens: &[Vec<usize>], p: &[f64]| -> f64 {
        let g: Vec<(u64, u64)> = gens.iter().map(|r| (row_mask(r), 0)).collect();
        if noise.is_uniform() {
            let a: Vec<f64> = (0..=n).map(|k| p[0].powi(k as i32)).collect();
            let b: Vec<f64> = (0..=n).map(|k| (1.0 - p[0]).powi(k as i32)).collect();
            gray_sum((start, 0), &g, |x, _| {
                let k = x.count_ones() as usize;
                a[k] * b[n - k]
            })
        } else {
            gray_sum((start, 0), &g, |x, _| {
                (0..n).map(|q| if x >> q & 1 == 1 { p[q] } else { 1.0 - p[q] }).product()
            })
        }
    };
    let x0 = mask(e0.x_bits());
    let z0 = mask(e0.z_bits());
    let lx = mask(layout.logical_x().x_bits());
    let lz = mask(layout.logical_z().z_bits());
    let zx = [sector(x0, layout.h_x(), &px), sector(x0 ^ lx, layout.h_x(), &px)];
    let zz = [sector(z0, layout.h_z(), &pz), sector(z0 ^ lz, layout.h_z(), &pz)];
    let mut z = [0.0; 4];
    for c in Pauli::ALL {
        z[c.index()] = zx[c.x() as usize] * zz[c.z() as usize];
    }
    Ok(CosetSums { z })
}

/// Full enumeration when it fits, otherwise the decoupled form when the
/// noise allows it.
pub fn coset_sums(layout: &CodeLayout, noise: &NoiseModel, s: &Syndrome) -> Result<CosetSums> {
    match full_coset_sums(layout, noise, s) {
        Err(Error::Capacity { .. }) if noise.is_xz_independent() => decoupled_coset_sums(layout, noise, s),
        r => r,
    }
}

/// Exact posterior by enumeration.
pub fn enumerate_posteriors(layout: &CodeLayout, noise: &NoiseModel, s: &Syndrome) -> Result<PosteriorVector> {
    coset_sums(layout, noise, s)?.posterior()
}

/// Joint distribution `Pr(s, L)` for every syndrome, from one sweep over all
/// `4^n` error strings. Row `k` belongs to `Syndrome::from_key(k, ..)`.
#[derive(Debug, Clone)]
pub struct SyndromeTable {
    pub nx: usize,
    pub nz: usize,
    pub probs: Vec<[f64; 4]>,
}

impl SyndromeTable {
    pub fn syndrome(&self, key: usize) -> Syndrome {
        Syndrome::from_key(key as u64, self.nx, self.nz)
    }

    /// `Pr(L)` summed over syndromes.
    pub fn class_marginal(&self) -> [f64; 4] {
        let mut acc = [KahanSum::new(); 4];
        for row in &self.probs {
            for c in 0..4 {
                acc[c].add(row[c]);
            }
        }
        acc.map(|a| a.value())
    }
}

pub fn syndrome_class_table(layout: &CodeLayout, noise: &NoiseModel) -> Result<SyndromeTable> {
    let n = layout.n();
    let nbits = 2 * n;
    if nbits as u32 > MAX_TERMS_LOG2 {
        return Err(Error::Capacity {
            what: format!("full error sweep at d={}", layout.distance()),
            needed_log2: nbits as u32,
            max_log2: MAX_TERMS_LOG2,
        });
    }
    let nx = layout.num_x_checks();
    let nz = layout.num_z_checks();
    let nkeys = 1usize << (nx + nz);
    // bit b < n: X on qubit b; otherwise Z on qubit b - n
    let lx = layout.logical_x();
    let lz = layout.logical_z();
    let mut synd = vec![0u64; nbits];
    let mut cls = vec![0usize; nbits];
    for q in 0..n {
        for &j in layout.qubit_checks(crate::code::CheckType::Z, q) {
            synd[q] |= 1 << (nx + j);
        }
        for &j in layout.qubit_checks(crate::code::CheckType::X, q) {
            synd[n + q] |= 1 << j;
        }
        if lz.z_bits()[q] {
            cls[q] ^= Pauli::X.index();
        }
        if lx.x_bits()[q] {
            cls[n + q] ^= Pauli::Z.index();
        }
    }
    let corr_cls: Vec<usize> = (0..nkeys)
        .map(|k| {
            let s = Syndrome::from_key(k as u64, nx, nz);
            let c = layout.correction(&s)?;
            Ok(layout.class_of_trivial(&c)?.index())
        })
        .collect::<Result<_>>()?;
    let wt = Weigher::new(layout, noise);
    let t = nbits.min(6);
    let low = nbits - t;
    let chunks: Vec<Vec<[KahanSum; 4]>> = (0u64..1 << t)
        .into_par_iter()
        .map(|c| {
            let mut table = vec![[KahanSum::new(); 4]; nkeys];
            let (mut x, mut z, mut key, mut raw) = (0u64, 0u64, 0u64, 0usize);
            let flip = |b: usize, x: &mut u64, z: &mut u64, key: &mut u64, raw: &mut usize| {
                if b < n {
                    *x ^= 1 << b;
                } else {
                    *z ^= 1 << (b - n);
                }
                *key ^= synd[b];
                *raw ^= cls[b];
            };
            for j in 0..t {
                if c >> j & 1 == 1 {
                    flip(low + j, &mut x, &mut z, &mut key, &mut raw);
                }
            }
            table[key as usize][raw].add(wt.weight(x, z));
            for i in 1u64..1 << low {
                flip(i.trailing_zeros() as usize, &mut x, &mut z, &mut key, &mut raw);
                table[key as usize][raw].add(wt.weight(x, z));
            }
            table
        })
        .collect();
    let mut probs = vec![[0.0; 4]; nkeys];
    for k in 0..nkeys {
        for raw in 0..4 {
            let mut acc = KahanSum::new();
            for ch in &chunks {
                acc.add(ch[k][raw].value());
            }
            probs[k][raw ^ corr_cls[k]] = acc.value();
        }
    }
    Ok(SyndromeTable { nx, nz, probs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RandomStream;

    #[test]
    fn distance_one_fixture() {
        let l = CodeLayout::planar(1).unwrap();
        let noise = NoiseModel::from_xyz(0.1, 0.0, 0.0).unwrap();
        let p = enumerate_posteriors(&l, &noise, &l.empty_syndrome()).unwrap();
        assert!((p.as_array()[0] - 0.9).abs() < 1e-15);
        assert!((p.as_array()[1] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn gray_sum_matches_subset_loop() {
        let l = CodeLayout::planar(3).unwrap();
        let noise = NoiseModel::depolarizing(0.05).unwrap();
        let gens = l.stabilizer_generators();
        let mut rng = RandomStream::new(1);
        let e = noise.sample(&l, &mut rng).unwrap();
        let s = l.syndrome(&e).unwrap();
        let got = full_coset_sums(&l, &noise, &s).unwrap();
        let e0 = l.correction(&s).unwrap();
        for c in Pauli::ALL {
            let mut acc = KahanSum::new();
            for subset in 0u32..1 << gens.len() {
                let mut p = e0.mul(&l.logical(c)).unwrap();
                for (j, g) in gens.iter().enumerate() {
                    if subset >> j & 1 == 1 {
                        p.mul_assign(g).unwrap();
                    }
                }
                acc.add(noise.log_prob(&p).exp());
            }
            assert!((acc.value() - got.z[c.index()]).abs() <= 1e-14 * acc.value().max(1e-300));
        }
    }

    #[test]
    fn empty_syndrome_posterior_at_d3() {
        let l = CodeLayout::planar(3).unwrap();
        let noise = NoiseModel::depolarizing(0.01).unwrap();
        let p = enumerate_posteriors(&l, &noise, &l.empty_syndrome()).unwrap();
        assert!(p.as_array()[0] > 0.99);
    }

    #[test]
    fn decoupled_agrees_with_full_for_independent_noise() {
        let l = CodeLayout::planar(3).unwrap();
        let noise = NoiseModel::independent_xz(0.03, 0.02).unwrap();
        let mut rng = RandomStream::new(9);
        for _ in 0..20 {
            let e = noise.sample(&l, &mut rng).unwrap();
            let s = l.syndrome(&e).unwrap();
            let a = full_coset_sums(&l, &noise, &s).unwrap();
            let b = decoupled_coset_sums(&l, &noise, &s).unwrap();
            for c in 0..4 {
                assert!((a.z[c] - b.z[c]).abs() <= 1e-12 * a.z[c]);
            }
        }
        assert!(decoupled_coset_sums(&l, &NoiseModel::depolarizing(0.01).unwrap(), &l.empty_syndrome()).is_err());
    }

    #[test]
    fn capacity_errors() {
        let l = CodeLayout::planar(5).unwrap();
        let dep = NoiseModel::depolarizing(0.01).unwrap();
        assert!(matches!(
            enumerate_posteriors(&l, &dep, &l.empty_syndrome()),
            Err(Error::Capacity { .. })
        ));
        let l7 = CodeLayout::planar(7).unwrap();
        let ind = NoiseModel::independent_xz(0.01, 0.01).unwrap();
        assert!(matches!(
            enumerate_posteriors(&l7, &ind, &l7.empty_syndrome()),
            Err(Error::Capacity { .. })
        ));
    }

    #[test]
    fn table_rows_match_coset_sums() {
        let l = CodeLayout::planar(3).unwrap();
        let noise = NoiseModel::from_xyz(0.02, 0.01, 0.03).unwrap();
        let t = syndrome_class_table(&l, &noise).unwrap();
        let total: f64 = t.class_marginal().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        for key in [0usize, 1, 77, 1234, 4095] {
            let s = t.syndrome(key);
            let c = full_coset_sums(&l, &noise, &s).unwrap();
            for k in 0..4 {
                assert!((c.z[k] - t.probs[key][k]).abs() <= 1e-13 * c.z[k].max(1e-300));
            }
        }
    }
}
