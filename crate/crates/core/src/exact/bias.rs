//! Exact-vs-matching posterior bias over sampled syndromes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{enumerate_posteriors, mps_posteriors, syndrome_class_table, MpsConfig, MAX_TERMS_LOG2};
use crate::channel::PosteriorVector;
use crate::code::{map_unique, CodeLayout, NoiseModel, Syndrome};
use crate::decoder::Decoder;
use crate::error::Result;
use crate::pauli::Pauli;
use crate::rng::{domain, RandomStream};
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Oracle {
    /// Coset enumeration (capacity-limited).
    Enumerate,
    Mps(MpsConfig),
    /// Enumeration when it fits, MPS with the default config otherwise.
    Auto,
}

pub fn exact_posteriors(
    layout: &CodeLayout,
    noise: &NoiseModel,
    s: &Syndrome,
    oracle: Oracle,
) -> Result<PosteriorVector> {
    match oracle {
        Oracle::Enumerate => enumerate_posteriors(layout, noise, s),
        Oracle::Mps(cfg) => mps_posteriors(layout, noise, s, &cfg),
        Oracle::Auto => {
            if (layout.n() as u32) < MAX_TERMS_LOG2 {
                enumerate_posteriors(layout, noise, s)
            } else {
                mps_posteriors(layout, noise, s, &MpsConfig::default())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BiasRow {
    pub d: usize,
    pub p: f64,
    pub class: char,
    pub mean_bias: f64,
    pub stderr: f64,
    pub shots: usize,
}

/// Samples `shots` syndromes under depolarizing noise for every `(d, p)` and
/// reports the mean of `p_exact - p_matching` per class. Both posteriors are
/// taken relative to the matching decoder's hard decision, so the `I` entry
/// is the probability that the applied correction is right.
pub fn bias_table(
    d_list: &[usize],
    p_list: &[f64],
    shots: usize,
    seed: u64,
    oracle: Oracle,
) -> Result<Vec<BiasRow>> {
    let mut rows = Vec::new();
    for &d in d_list {
        let layout = CodeLayout::planar(d)?;
        for (pi, &p) in p_list.iter().enumerate() {
            let noise = NoiseModel::depolarizing(p)?;
            let decoder = Decoder::new(&layout, &noise)?;
            let key = seed ^ (d as u64) << 40 ^ (pi as u64) << 32;
            let samples = per_shot_bias(&layout, &noise, &decoder, shots, key, oracle)?;
            for c in Pauli::ALL {
                let xs: Vec<f64> = samples.iter().map(|b| b[c.index()]).collect();
                rows.push(BiasRow {
                    d,
                    p,
                    class: c.symbol(),
                    mean_bias: stats::mean(&xs),
                    stderr: stats::std_error(&xs),
                    shots,
                });
            }
        }
    }
    Ok(rows)
}

/// Per-shot `p_exact - p_matching` in the decoder frame. Each distinct
/// syndrome is evaluated once.
pub(crate) fn per_shot_bias(
    layout: &CodeLayout,
    noise: &NoiseModel,
    decoder: &Decoder,
    shots: usize,
    seed: u64,
    oracle: Oracle,
) -> Result<Vec<[f64; 4]>> {
    let syndromes: Vec<Syndrome> = (0..shots as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = RandomStream::substream(seed, domain::SYNDROMES, i);
            let e = noise.sample(layout, &mut rng)?;
            layout.syndrome(&e)
        })
        .collect::<Result<_>>()?;
    map_unique(&syndromes, |s| {
        let soft = decoder.decode(s)?;
        let exact = exact_posteriors(layout, noise, s, oracle)?.relative_to(soft.hard);
        let (e, a) = (exact.as_array(), soft.frame().as_array());
        Ok([e[0] - a[0], e[1] - a[1], e[2] - a[2], e[3] - a[3]])
    })
}

/// Population-averaged bias, summed over every syndrome weighted by its
/// probability. Only feasible where the full syndrome table fits.
pub fn expected_bias(layout: &CodeLayout, noise: &NoiseModel, decoder: &Decoder) -> Result<[f64; 4]> {
    let table = syndrome_class_table(layout, noise)?;
    let mut acc = [stats::KahanSum::new(); 4];
    for (k, row) in table.probs.iter().enumerate() {
        let ps: f64 = row.iter().sum();
        if ps == 0.0 {
            continue;
        }
        let s = table.syndrome(k);
        let soft = decoder.decode(&s)?;
        let exact = PosteriorVector::from_weights(*row)?.relative_to(soft.hard);
        let (e, a) = (exact.as_array(), soft.frame().as_array());
        for c in 0..4 {
            acc[c].add(ps * (e[c] - a[c]));
        }
    }
    Ok(acc.map(|k| k.value()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expected_bias_signs_at_d3() {
        let l = CodeLayout::planar(3).unwrap();
        for p in [0.01, 0.05] {
            let noise = NoiseModel::depolarizing(p).unwrap();
            let dec = Decoder::new(&l, &noise).unwrap();
            let b = expected_bias(&l, &noise, &dec).unwrap();
            assert!(b[0] < 0.0, "{p} {b:?}");
            assert!(b[1..].iter().all(|&x| x > 0.0), "{p} {b:?}");
            assert!(b.iter().sum::<f64>().abs() < 1e-12);
        }
    }

    #[test]
    fn sampled_bias_rows_sum_to_zero() {
        let rows = bias_table(&[3], &[0.05], 500, 1, Oracle::Enumerate).unwrap();
        assert_eq!(rows.len(), 4);
        let total: f64 = rows.iter().map(|r| r.mean_bias).sum();
        assert!(total.abs() < 1e-12);
        assert!(rows[0].mean_bias < 0.0);
    }

    #[test]
    fn auto_oracle_switches_to_mps() {
        let l = CodeLayout::planar(5).unwrap();
        let noise = NoiseModel::depolarizing(0.01).unwrap();
        let p = exact_posteriors(&l, &noise, &l.empty_syndrome(), Oracle::Auto).unwrap();
        assert!(p.as_array()[0] > 0.999);
        assert!(exact_posteriors(&l, &noise, &l.empty_syndrome(), Oracle::Enumerate).is_err());
    }
}
