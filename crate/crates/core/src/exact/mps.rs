//! Boundary-MPS contraction of the coset partition function.
//!
//! Every grid site carries one tensor with bond dimension 2 towards each
//! grid neighbour. Check sites are copy tensors over the check's stabilizer
//! exponent; a data site evaluates the noise channel on the error obtained
//! from the fixed representative and the exponents of its neighbouring
//! checks. Columns are absorbed left to right as MPOs into a boundary MPS
//! that is truncated to `chi` after each column.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::channel::PosteriorVector;
use crate::code::{require_syndrome, CodeLayout, NoiseModel, Syndrome};
use crate::error::{invalid, Result};
use crate::pauli::{Pauli, PauliString};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MpsConfig {
    pub chi: usize,
    /// Singular values below `truncation_tol * s_max` are dropped.
    pub truncation_tol: f64,
}

impl Default for MpsConfig {
    fn default() -> Self {
        Self {
            chi: 64,
            truncation_tol: 0.0,
        }
    }
}

/// Grid tensor `T[u, dn, l, r]`.
struct GridTensor {
    dims: [usize; 4],
    data: Vec<f64>,
}

impl GridTensor {
    #[inline]
    fn at(&self, u: usize, dn: usize, l: usize, r: usize) -> f64 {
        let [_, ddn, dl, dr] = self.dims;
        self.data[((u * ddn + dn) * dl + l) * dr + r]
    }
}

/// MPS site `M[a, p, b]`: `a` towards the row above, `b` below.
#[derive(Clone)]
struct Site {
    dl: usize,
    p: usize,
    dr: usize,
    data: Vec<f64>,
}

fn build_grid(layout: &CodeLayout, noise: &NoiseModel, f: &PauliString) -> Vec<Vec<GridTensor>> {
    let side = 2 * layout.distance() - 1;
    let mut qubit_at = vec![usize::MAX; side * side];
    for (q, &(r, c)) in layout.qubit_coords().iter().enumerate() {
        qubit_at[r * side + c] = q;
    }
    let mut grid = Vec::with_capacity(side);
    for r in 0..side {
        let mut row = Vec::with_capacity(side);
        for c in 0..side {
            let dims = [
                if r > 0 { 2 } else { 1 },
                if r + 1 < side { 2 } else { 1 },
                if c > 0 { 2 } else { 1 },
                if c + 1 < side { 2 } else { 1 },
            ];
            let mut data = vec![0.0; dims.iter().product()];
            let q = qubit_at[r * side + c];
            let mut k = 0;
            for u in 0..dims[0] {
                for dn in 0..dims[1] {
                    for l in 0..dims[2] {
                        for rt in 0..dims[3] {
                            data[k] = if q != usize::MAX {
                                let fp = f.get(q);
                                let (vert, horiz) = (u ^ dn == 1, l ^ rt == 1);
                                // (even, even): X-checks above/below, Z-checks left/right
                                let (xflip, zflip) = if r % 2 == 0 { (vert, horiz) } else { (horiz, vert) };
                                let p = Pauli::from_bits(fp.x() ^ xflip, fp.z() ^ zflip);
                                noise.prob(q, p)
                            } else {
                                let legs = [(dims[0], u), (dims[1], dn), (dims[2], l), (dims[3], rt)];
                                let mut vals = legs.iter().filter(|(d, _)| *d == 2).map(|(_, v)| *v);
                                let first = vals.next().unwrap_or(0);
                                if vals.all(|v| v == first) {
                                    1.0
                                } else {
                                    0.0
                                }
                            };
                            k += 1;
                        }
                    }
                }
            }
            row.push(GridTensor { dims, data });
        }
        grid.push(row);
    }
    grid
}

fn first_column(grid: &[Vec<GridTensor>]) -> Vec<Site> {
    grid.iter()
        .map(|row| {
            let t = &row[0];
            let [du, ddn, _, dr] = t.dims;
            let mut data = vec![0.0; du * dr * ddn];
            for a in 0..du {
                for p in 0..dr {
                    for b in 0..ddn {
                        data[(a * dr + p) * ddn + b] = t.at(a, b, 0, p);
                    }
                }
            }
            Site {
                dl: du,
                p: dr,
                dr: ddn,
                data,
            }
        })
        .collect()
}

fn apply_column(mps: &[Site], grid: &[Vec<GridTensor>], c: usize) -> Vec<Site> {
    mps.iter()
        .zip(grid.iter())
        .map(|(m, row)| {
            let t = &row[c];
            let [du, ddn, dl, dr] = t.dims;
            debug_assert_eq!(dl, m.p);
            let (nl, nr) = (m.dl * du, m.dr * ddn);
            let mut data = vec![0.0; nl * dr * nr];
            for a in 0..m.dl {
                for b in 0..m.dr {
                    for l in 0..dl {
                        let v = m.data[(a * m.p + l) * m.dr + b];
                        if v == 0.0 {
                            continue;
                        }
                        for u in 0..du {
                            for dn in 0..ddn {
                                for p in 0..dr {
                                    let w = t.at(u, dn, l, p);
                                    if w != 0.0 {
                                        let i = ((a * du + u) * dr + p) * nr + b * ddn + dn;
                                        data[i] += v * w;
                                    }
                                }
                            }
                        }
                    }
                }
            }
            Site {
                dl: nl,
                p: dr,
                dr: nr,
                data,
            }
        })
        .collect()
}

fn frob(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Canonicalise left to right, truncate right to left. Returns the log of the
/// scale factors removed.
fn compress(mps: &mut [Site], cfg: &MpsConfig) -> f64 {
    let mut log_scale = 0.0;
    let nsites = mps.len();
    for i in 0..nsites - 1 {
        let s = &mps[i];
        let a = DMatrix::from_row_slice(s.dl * s.p, s.dr, &s.data);
        let qr = a.qr();
        let q = qr.q();
        let mut r = qr.r();
        let norm = r.norm();
        if norm == 0.0 {
            return f64::NEG_INFINITY;
        }
        r /= norm;
        log_scale += norm.ln();
        let k = q.ncols();
        let (dl, p) = (s.dl, s.p);
        mps[i] = Site {
            dl,
            p,
            dr: k,
            data: row_major(&q),
        };
        let next = &mps[i + 1];
        let b = DMatrix::from_row_slice(next.dl, next.p * next.dr, &next.data);
        let nb = &r * b;
        mps[i + 1] = Site {
            dl: k,
            p: next.p,
            dr: next.dr,
            data: row_major(&nb),
        };
    }
    for i in (1..nsites).rev() {
        let s = &mps[i];
        let b = DMatrix::from_row_slice(s.dl, s.p * s.dr, &s.data);
        let (u, sv, vt) = jacobi_svd(&b);
        let mut order: Vec<usize> = (0..sv.len()).collect();
        order.sort_by(|&x, &y| sv[y].total_cmp(&sv[x]).then(x.cmp(&y)));
        let smax = sv[order[0]];
        if smax == 0.0 {
            return f64::NEG_INFINITY;
        }
        let keep: Vec<usize> = order
            .into_iter()
            .take(cfg.chi)
            .enumerate()
            .filter(|&(rank, j)| rank == 0 || sv[j] > cfg.truncation_tol * smax)
            .map(|(_, j)| j)
            .collect();
        let kk = keep.len();
        let mut newv = DMatrix::zeros(kk, s.p * s.dr);
        let mut us = DMatrix::zeros(s.dl, kk);
        for (jj, &j) in keep.iter().enumerate() {
            newv.set_row(jj, &vt.row(j));
            us.set_column(jj, &(u.column(j) * (sv[j] / smax)));
        }
        log_scale += smax.ln();
        let (p, dr) = (s.p, s.dr);
        mps[i] = Site {
            dl: kk,
            p,
            dr,
            data: row_major(&newv),
        };
        let prev = &mps[i - 1];
        let a = DMatrix::from_row_slice(prev.dl * prev.p, prev.dr, &prev.data);
        let na = a * us;
        mps[i - 1] = Site {
            dl: prev.dl,
            p: prev.p,
            dr: kk,
            data: row_major(&na),
        };
    }
    let n0 = frob(&mps[0].data);
    if n0 == 0.0 {
        return f64::NEG_INFINITY;
    }
    mps[0].data.iter_mut().for_each(|x| *x /= n0);
    log_scale + n0.ln()
}

/// One-sided Jacobi SVD `a = u diag(s) vt`. Unlike bidiagonal QR it stays
/// accurate when singular values come in degenerate pairs, which the
/// symmetric copy tensors produce routinely.
fn jacobi_svd(a: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>, DMatrix<f64>) {
    if a.nrows() < a.ncols() {
        let (u, s, vt) = jacobi_svd(&a.transpose());
        return (vt.transpose(), s, u.transpose());
    }
    let (m, n) = (a.nrows(), a.ncols());
    let mut w = a.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for i in 0..m {
                    alpha += w[(i, p)] * w[(i, p)];
                    beta += w[(i, q)] * w[(i, q)];
                    gamma += w[(i, p)] * w[(i, q)];
                }
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let (x, y) = (w[(i, p)], w[(i, q)]);
                    w[(i, p)] = c * x - s * y;
                    w[(i, q)] = s * x + c * y;
                }
                for i in 0..n {
                    let (x, y) = (v[(i, p)], v[(i, q)]);
                    v[(i, p)] = c * x - s * y;
                    v[(i, q)] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut s = vec![0.0; n];
    let mut u = DMatrix::zeros(m, n);
    for j in 0..n {
        let norm = w.column(j).norm();
        s[j] = norm;
        if norm > 0.0 {
            u.set_column(j, &(w.column(j) / norm));
        }
    }
    (u, s, v.transpose())
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    let mut out = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(m[(i, j)]);
        }
    }
    out
}

fn log_partition(layout: &CodeLayout, noise: &NoiseModel, f: &PauliString, cfg: &MpsConfig) -> f64 {
    let grid = build_grid(layout, noise, f);
    let side = grid.len();
    let mut mps = first_column(&grid);
    let mut log_scale = compress(&mut mps, cfg);
    for c in 1..side {
        if !log_scale.is_finite() {
            return f64::NEG_INFINITY;
        }
        mps = apply_column(&mps, &grid, c);
        log_scale += compress(&mut mps, cfg);
    }
    if !log_scale.is_finite() {
        return f64::NEG_INFINITY;
    }
    // all horizontal legs are closed: multiply the bond matrices
    let mut v = vec![1.0];
    for s in &mps {
        debug_assert_eq!(s.p, 1);
        let mut nv = vec![0.0; s.dr];
        for a in 0..s.dl {
            for b in 0..s.dr {
                nv[b] += v[a] * s.data[a * s.dr + b];
            }
        }
        v = nv;
    }
    // truncation can leave a tiny negative value; the magnitude is the estimate
    let z = v[0].abs();
    if z == 0.0 {
        f64::NEG_INFINITY
    } else {
        z.ln() + log_scale
    }
}

/// Natural-log coset sums per class.
pub fn mps_coset_log_sums(
    layout: &CodeLayout,
    noise: &NoiseModel,
    s: &Syndrome,
    cfg: &MpsConfig,
) -> Result<[f64; 4]> {
    if cfg.chi < 1 {
        return Err(invalid("bond dimension chi must be at least 1"));
    }
    if !(cfg.truncation_tol >= 0.0) {
        return Err(invalid("truncation tolerance must be non-negative"));
    }
    require_syndrome(layout, s)?;
    let e0 = layout.correction(s)?;
    let mut out = [f64::NEG_INFINITY; 4];
    for c in Pauli::ALL {
        let f = e0.mul(&layout.logical(c))?;
        out[c.index()] = log_partition(layout, noise, &f, cfg);
    }
    Ok(out)
}

pub fn mps_posteriors(
    layout: &CodeLayout,
    noise: &NoiseModel,
    s: &Syndrome,
    cfg: &MpsConfig,
) -> Result<PosteriorVector> {
    PosteriorVector::from_log_weights(mps_coset_log_sums(layout, noise, s, cfg)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::full_coset_sums;
    use crate::rng::RandomStream;

    #[test]
    fn exact_at_d3_including_log_sums() {
        let l = CodeLayout::planar(3).unwrap();
        let noise = NoiseModel::from_xyz(0.03, 0.01, 0.02).unwrap();
        let mut rng = RandomStream::new(4);
        for _ in 0..20 {
            let e = noise.sample(&l, &mut rng).unwrap();
            let s = l.syndrome(&e).unwrap();
            let exact = full_coset_sums(&l, &noise, &s).unwrap();
            let lz = mps_coset_log_sums(&l, &noise, &s, &MpsConfig::default()).unwrap();
            for c in 0..4 {
                assert!((lz[c] - exact.z[c].ln()).abs() < 1e-10, "{c}: {} vs {}", lz[c], exact.z[c].ln());
            }
        }
    }

    #[test]
    fn distance_one_matches_channel() {
        let l = CodeLayout::planar(1).unwrap();
        let noise = NoiseModel::from_xyz(0.1, 0.05, 0.02).unwrap();
        let p = mps_posteriors(&l, &noise, &l.empty_syndrome(), &MpsConfig::default()).unwrap();
        let want = [0.83, 0.1, 0.05, 0.02];
        for c in 0..4 {
            assert!((p.as_array()[c] - want[c]).abs() < 1e-14);
        }
    }

    #[test]
    fn chi_one_is_normalised() {
        let l = CodeLayout::planar(5).unwrap();
        let noise = NoiseModel::depolarizing(0.05).unwrap();
        let mut rng = RandomStream::new(6);
        let cfg = MpsConfig {
            chi: 1,
            truncation_tol: 0.0,
        };
        for _ in 0..5 {
            let e = noise.sample(&l, &mut rng).unwrap();
            let p = mps_posteriors(&l, &noise, &l.syndrome(&e).unwrap(), &cfg).unwrap();
            assert!((p.as_array().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert!(mps_posteriors(&l, &noise, &l.empty_syndrome(), &MpsConfig { chi: 0, truncation_tol: 0.0 }).is_err());
    }

    #[test]
    fn zero_probability_classes() {
        // pure X noise: Z-type logical classes are impossible
        let l = CodeLayout::planar(3).unwrap();
        let noise = NoiseModel::from_xyz(0.05, 0.0, 0.0).unwrap();
        let p = mps_posteriors(&l, &noise, &l.empty_syndrome(), &MpsConfig::default()).unwrap();
        assert_eq!(p.as_array()[2], 0.0);
        assert_eq!(p.as_array()[3], 0.0);
        let exact = full_coset_sums(&l, &noise, &l.empty_syndrome()).unwrap().posterior().unwrap();
        assert!((p.as_array()[1] - exact.as_array()[1]).abs() < 1e-12);
    }
}
