//! Matching decoder with boundary enforcement.
//!
//! Each check type gets its own decoding graph: check vertices plus two
//! boundary supernodes. A data qubit whose error flips two checks is a
//! check-check edge; one flipping a single check is an edge to the supernode
//! of the boundary it sits on. At `d = 1` the lone qubit joins the two
//! supernodes directly.
//!
//! Parity-constrained matching is reduced to a minimum-weight perfect matching
//! on the terminals (defects plus odd supernodes) using shortest-path
//! distances. Free supernodes are modelled by per-terminal boundary copies
//! joined with zero-weight edges.
//!
//! For each logical class the decoder combines one candidate per graph: the
//! unconstrained optimum, or the optimum with both supernode parities
//! flipped, which moves the chain into the other homology class.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::Serialize;

use crate::blossom::min_weight_perfect_matching;
use crate::channel::PosteriorVector;
use crate::code::{require_syndrome, Boundary, CheckType, CodeLayout, NoiseModel, Syndrome};
use crate::error::{invalid, Error, Result};
use crate::pauli::{Pauli, PauliString};

const NONE: usize = usize::MAX;

/// Required fault-degree parity at a boundary supernode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
    Free,
}

impl Parity {
    pub fn from_bool(odd: bool) -> Self {
        if odd {
            Parity::Odd
        } else {
            Parity::Even
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GraphEdge {
    pub u: usize,
    pub v: usize,
    /// Data qubit whose error this edge represents; `None` for merge edges.
    pub qubit: Option<usize>,
    pub probability: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecodingGraph {
    graph_type: CheckType,
    num_checks: usize,
    boundaries: [Boundary; 2],
    edges: Vec<GraphEdge>,
    #[serde(skip)]
    adjacency: Vec<Vec<(usize, usize)>>,
}

/// `ln((1-p)/p)`.
#[inline]
pub fn edge_weight(p: f64) -> f64 {
    ((1.0 - p) / p).ln()
}

impl DecodingGraph {
    /// Builds a graph from explicit edges. Vertices `0..num_checks` are
    /// checks; `num_checks` and `num_checks + 1` are the two supernodes.
    pub fn new(
        graph_type: CheckType,
        num_checks: usize,
        edges: Vec<GraphEdge>,
    ) -> Result<Self> {
        let nv = num_checks + 2;
        let mut adjacency = vec![Vec::new(); nv];
        for (k, e) in edges.iter().enumerate() {
            if e.u >= nv || e.v >= nv || e.u == e.v {
                return Err(invalid(format!("edge {k} has invalid endpoints ({}, {})", e.u, e.v)));
            }
            if !(e.weight >= 0.0) {
                return Err(invalid(format!("edge {k} has negative weight")));
            }
            adjacency[e.u].push((e.v, k));
            adjacency[e.v].push((e.u, k));
        }
        Ok(Self {
            graph_type,
            num_checks,
            boundaries: graph_type.boundaries(),
            edges,
            adjacency,
        })
    }

    pub fn graph_type(&self) -> CheckType {
        self.graph_type
    }

    pub fn num_checks(&self) -> usize {
        self.num_checks
    }

    pub fn num_vertices(&self) -> usize {
        self.num_checks + 2
    }

    pub fn edges(&self) -> &[GraphEdge] {
        &self.edges
    }

    pub fn supernode(&self, i: usize) -> usize {
        self.num_checks + i
    }

    pub fn boundaries(&self) -> [Boundary; 2] {
        self.boundaries
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("graph serialises")
    }
}

/// Decoding graph for one check type. Edge probabilities are the marginal
/// flip probabilities `q_X + q_Y` (Z graph) or `q_Z + q_Y` (X graph).
pub fn build_decoding_graph(
    layout: &CodeLayout,
    noise: &NoiseModel,
    graph_type: CheckType,
) -> Result<DecodingGraph> {
    let m = layout.num_checks(graph_type);
    let side = 2 * layout.distance() - 1;
    let mut edges = Vec::with_capacity(layout.n());
    for q in 0..layout.n() {
        let p = noise.marginal(q, graph_type);
        if p >= 0.5 {
            return Err(invalid(format!(
                "marginal flip probability {p} on qubit {q} is not below 0.5"
            )));
        }
        if p <= 0.0 {
            continue;
        }
        let checks = layout.qubit_checks(graph_type, q);
        let (r, c) = layout.qubit_coords()[q];
        let at_first = match graph_type {
            CheckType::Z => c == 0,
            CheckType::X => r == 0,
        };
        let (u, v) = match checks {
            [] => (m, m + 1),
            [a] => (*a, if at_first { m } else { m + 1 }),
            [a, b] => (*a, *b),
            _ => return Err(Error::Internal(format!("qubit {q} touches {} checks", checks.len()))),
        };
        debug_assert!(checks.len() != 1 || at_first || {
            match graph_type {
                CheckType::Z => c == side - 1,
                CheckType::X => r == side - 1,
            }
        });
        edges.push(GraphEdge {
            u,
            v,
            qubit: Some(q),
            probability: p,
            weight: edge_weight(p),
        });
    }
    DecodingGraph::new(graph_type, m, edges)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchingSolution {
    /// Selected edge indices, ascending.
    pub edges: Vec<usize>,
    pub total_weight: f64,
    /// Fault-degree parity at each supernode (true = odd).
    pub boundary_parities: [bool; 2],
}

impl MatchingSolution {
    /// Data qubits flipped by this solution.
    pub fn qubits<'a>(&'a self, g: &'a DecodingGraph) -> impl Iterator<Item = usize> + 'a {
        self.edges.iter().filter_map(move |&k| g.edges[k].qubit)
    }
}

#[derive(Clone, Copy, PartialEq)]
struct HeapItem(f64, usize);

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Shortest-path trees from every defect and both supernodes.
struct ShortestPaths {
    defects: Vec<usize>,
    source_of: Vec<usize>,
    dist: Vec<Vec<f64>>,
    pred: Vec<Vec<usize>>,
}

impl ShortestPaths {
    fn new(g: &DecodingGraph, defects: Vec<usize>) -> Self {
        let nv = g.num_vertices();
        let mut sources = defects.clone();
        sources.push(g.supernode(0));
        sources.push(g.supernode(1));
        let mut source_of = vec![NONE; nv];
        for (i, &s) in sources.iter().enumerate() {
            source_of[s] = i;
        }
        let mut dist = Vec::with_capacity(sources.len());
        let mut pred = Vec::with_capacity(sources.len());
        for &s in &sources {
            let (d, p) = dijkstra(g, s);
            dist.push(d);
            pred.push(p);
        }
        Self {
            defects,
            source_of,
            dist,
            pred,
        }
    }

    fn d(&self, from: usize, to: usize) -> f64 {
        self.dist[self.source_of[from]][to]
    }

    fn path_edges(&self, from: usize, to: usize, g: &DecodingGraph, out: &mut [bool]) {
        let pred = &self.pred[self.source_of[from]];
        let mut v = to;
        while v != from {
            let k = pred[v];
            out[k] ^= true;
            let e = &g.edges[k];
            v = if e.u == v { e.v } else { e.u };
        }
    }
}

fn dijkstra(g: &DecodingGraph, s: usize) -> (Vec<f64>, Vec<usize>) {
    let nv = g.num_vertices();
    let mut dist = vec![f64::INFINITY; nv];
    let mut pred = vec![NONE; nv];
    let mut heap = BinaryHeap::new();
    dist[s] = 0.0;
    heap.push(HeapItem(0.0, s));
    while let Some(HeapItem(d, v)) = heap.pop() {
        if d > dist[v] {
            continue;
        }
        for &(w, k) in &g.adjacency[v] {
            let nd = d + g.edges[k].weight;
            if nd < dist[w] {
                dist[w] = nd;
                pred[w] = k;
                heap.push(HeapItem(nd, w));
            }
        }
    }
    (dist, pred)
}

fn solve(g: &DecodingGraph, sp: &ShortestPaths, parity: [Parity; 2]) -> Result<MatchingSolution> {
    let mut terminals = sp.defects.clone();
    let mut free = Vec::new();
    for (i, p) in parity.iter().enumerate() {
        match p {
            Parity::Odd => terminals.push(g.supernode(i)),
            Parity::Free => free.push(g.supernode(i)),
            Parity::Even => {}
        }
    }
    let k = terminals.len();
    let mut selected = vec![false; g.edges.len()];
    if k > 0 {
        if free.is_empty() && k % 2 == 1 {
            return Err(Error::Infeasible(format!(
                "{k} terminals with no free boundary on the {:?} graph",
                g.graph_type
            )));
        }
        // nearest free vertex per terminal (ties to the first supernode)
        let nearest: Vec<(usize, f64)> = terminals
            .iter()
            .map(|&t| {
                free.iter()
                    .map(|&f| (f, sp.d(t, f)))
                    .fold((NONE, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a })
            })
            .collect();
        let mut max_d: f64 = 1.0;
        for i in 0..k {
            for j in i + 1..k {
                let d = sp.d(terminals[i], terminals[j]);
                if d.is_finite() {
                    max_d = max_d.max(d);
                }
            }
            if nearest[i].1.is_finite() {
                max_d = max_d.max(nearest[i].1);
            }
        }
        // keeps every integer weight below 2^50
        let scale = (2f64.powi(50) / max_d).min(2f64.powi(32));
        let q = |d: f64| (d * scale).round() as i64;
        let mut medges = Vec::new();
        for i in 0..k {
            for j in i + 1..k {
                let d = sp.d(terminals[i], terminals[j]);
                if d.is_finite() {
                    medges.push((i, j, q(d)));
                }
            }
        }
        let nverts = if free.is_empty() {
            k
        } else {
            for i in 0..k {
                if nearest[i].1.is_finite() {
                    medges.push((i, k + i, q(nearest[i].1)));
                }
                for j in i + 1..k {
                    medges.push((k + i, k + j, 0));
                }
            }
            2 * k
        };
        let mate = min_weight_perfect_matching(nverts, &medges).ok_or_else(|| {
            Error::Infeasible(format!(
                "no fault set matches the defects on the {:?} graph",
                g.graph_type
            ))
        })?;
        for i in 0..k {
            let j = mate[i];
            if j < k {
                if i < j {
                    sp.path_edges(terminals[i], terminals[j], g, &mut selected);
                }
            } else {
                sp.path_edges(nearest[i].0, terminals[i], g, &mut selected);
            }
        }
    }
    Ok(solution_from_mask(g, &selected))
}

fn solution_from_mask(g: &DecodingGraph, selected: &[bool]) -> MatchingSolution {
    let edges: Vec<usize> = (0..selected.len()).filter(|&k| selected[k]).collect();
    let mut par = [false; 2];
    let mut total = 0.0;
    for &k in &edges {
        let e = &g.edges[k];
        total += e.weight;
        for i in 0..2 {
            let s = g.supernode(i);
            if e.u == s || e.v == s {
                par[i] ^= true;
            }
        }
    }
    MatchingSolution {
        edges,
        total_weight: total,
        boundary_parities: par,
    }
}

fn defects_for(g: &DecodingGraph, s: &Syndrome) -> Result<Vec<usize>> {
    let bits = s.defects(g.graph_type);
    if bits.len() != g.num_checks {
        return Err(Error::LengthMismatch {
            expected: g.num_checks,
            actual: bits.len(),
        });
    }
    Ok(bits.iter_ones().collect())
}

/// Minimum-weight fault set with the given supernode parity requirements.
pub fn mwpm_with_parities(
    g: &DecodingGraph,
    s: &Syndrome,
    parity: [Parity; 2],
) -> Result<MatchingSolution> {
    let sp = ShortestPaths::new(g, defects_for(g, s)?);
    solve(g, &sp, parity)
}

/// Unconstrained minimum-weight matching: both supernodes free.
pub fn mwpm(g: &DecodingGraph, s: &Syndrome) -> Result<MatchingSolution> {
    mwpm_with_parities(g, s, [Parity::Free, Parity::Free])
}

/// Algorithm-1 candidate: `flip = false` is the default solution; `flip = true`
/// forces both supernode parities to the complement of the default ones.
pub fn class_candidate(g: &DecodingGraph, s: &Syndrome, flip: bool) -> Result<MatchingSolution> {
    let sp = ShortestPaths::new(g, defects_for(g, s)?);
    let default = solve(g, &sp, [Parity::Free, Parity::Free])?;
    if !flip {
        return Ok(default);
    }
    flipped(g, &sp, &default)
}

fn flipped(g: &DecodingGraph, sp: &ShortestPaths, default: &MatchingSolution) -> Result<MatchingSolution> {
    let [a, b] = default.boundary_parities;
    solve(g, sp, [Parity::from_bool(!a), Parity::from_bool(!b)])
}

/// How a candidate error pattern is turned into an unnormalised weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scoring {
    /// Physical-channel probability of the combined pattern when every class
    /// has non-zero probability on every qubit, edge marginals otherwise.
    #[default]
    Auto,
    /// `prod_q q(E_q)` of the combined X/Z pattern.
    PhysicalChannel,
    /// `prod_{e in E} p_e prod_{e not in E} (1 - p_e)` over both graphs.
    EdgeMarginals,
}

/// Per-shot result of the soft decoder. Class indices are absolute: they
/// describe `candidate * corr(s)`.
#[derive(Debug, Clone)]
pub struct SoftDecode {
    pub posterior: PosteriorVector,
    /// Natural-log unnormalised candidate weights; `-inf` when unreachable.
    pub log_weights: [f64; 4],
    /// Most likely class.
    pub hard: Pauli,
    /// Class of the unconstrained matching.
    pub matching_class: Pauli,
    /// Candidate correction per class.
    pub candidates: [Option<PauliString>; 4],
}

impl SoftDecode {
    /// Posterior relative to the hard decision: entry `I` is the probability
    /// that applying the hard correction leaves no logical error.
    pub fn frame(&self) -> PosteriorVector {
        self.posterior.relative_to(self.hard)
    }

    pub fn correction(&self) -> &PauliString {
        self.candidates[self.hard.index()]
            .as_ref()
            .expect("hard class has a candidate")
    }
}

/// Reusable soft decoder for one layout and noise model.
#[derive(Debug, Clone)]
pub struct Decoder {
    layout: CodeLayout,
    graphs: [DecodingGraph; 2],
    scoring: Scoring,
    ln_q: Vec<[f64; 4]>,
    base_marginal: f64,
}

impl Decoder {
    pub fn new(layout: &CodeLayout, noise: &NoiseModel) -> Result<Self> {
        Self::with_scoring(layout, noise, Scoring::Auto)
    }

    pub fn with_scoring(layout: &CodeLayout, noise: &NoiseModel, scoring: Scoring) -> Result<Self> {
        let gz = build_decoding_graph(layout, noise, CheckType::Z)?;
        let gx = build_decoding_graph(layout, noise, CheckType::X)?;
        let ln_q: Vec<[f64; 4]> = (0..layout.n())
            .map(|q| Pauli::ALL.map(|p| noise.prob(q, p).ln()))
            .collect();
        let scoring = match scoring {
            Scoring::Auto => {
                if ln_q.iter().all(|r| r.iter().all(|x| x.is_finite())) {
                    Scoring::PhysicalChannel
                } else {
                    Scoring::EdgeMarginals
                }
            }
            s => s,
        };
        let base_marginal = [&gz, &gx]
            .iter()
            .flat_map(|g| g.edges.iter())
            .map(|e| (1.0 - e.probability).ln())
            .sum();
        Ok(Self {
            layout: layout.clone(),
            graphs: [gz, gx],
            scoring,
            ln_q,
            base_marginal,
        })
    }

    pub fn layout(&self) -> &CodeLayout {
        &self.layout
    }

    /// Scoring in effect after resolving `Auto`.
    pub fn scoring(&self) -> Scoring {
        self.scoring
    }

    /// `[Z graph, X graph]`.
    pub fn graphs(&self) -> &[DecodingGraph; 2] {
        &self.graphs
    }

    pub fn decode(&self, s: &Syndrome) -> Result<SoftDecode> {
        require_syndrome(&self.layout, s)?;
        let n = self.layout.n();
        // per graph: [default, flipped]
        let mut sols: [[Option<MatchingSolution>; 2]; 2] = [[None, None], [None, None]];
        for (gi, g) in self.graphs.iter().enumerate() {
            let sp = ShortestPaths::new(g, defects_for(g, s)?);
            let def = solve(g, &sp, [Parity::Free, Parity::Free])?;
            sols[gi][1] = match flipped(g, &sp, &def) {
                Ok(f) => Some(f),
                Err(Error::Infeasible(_)) => None,
                Err(e) => return Err(e),
            };
            sols[gi][0] = Some(def);
        }
        let mut log_weights = [f64::NEG_INFINITY; 4];
        let mut candidates: [Option<PauliString>; 4] = Default::default();
        let mut matching_class = Pauli::I;
        for flip in Pauli::ALL {
            let (Some(sz), Some(sx)) = (
                sols[0][flip.x() as usize].as_ref(),
                sols[1][flip.z() as usize].as_ref(),
            ) else {
                continue;
            };
            let mut e = PauliString::identity(n);
            for q in sz.qubits(&self.graphs[0]) {
                e.x_bits_mut().set(q, true);
            }
            for q in sx.qubits(&self.graphs[1]) {
                e.z_bits_mut().set(q, true);
            }
            let class = self.layout.logical_effect(&e)?;
            if flip == Pauli::I {
                matching_class = class;
            }
            log_weights[class.index()] = match self.scoring {
                Scoring::EdgeMarginals => self.base_marginal - sz.total_weight - sx.total_weight,
                _ => (0..n).map(|q| self.ln_q[q][e.get(q).index()]).sum(),
            };
            candidates[class.index()] = Some(e);
        }
        let posterior = PosteriorVector::from_log_weights(log_weights)?;
        let hard = posterior.argmax();
        Ok(SoftDecode {
            posterior,
            log_weights,
            hard,
            matching_class,
            candidates,
        })
    }
}

/// Normalised boundary-enforced matching posteriors, absolute class labels.
pub fn mwpm_posteriors(
    layout: &CodeLayout,
    noise: &NoiseModel,
    syndrome: &Syndrome,
) -> Result<PosteriorVector> {
    Ok(Decoder::new(layout, noise)?.decode(syndrome)?.posterior)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::NoiseModel;
    use crate::rng::RandomStream;
    use proptest::prelude::*;

    fn dep(p: f64) -> NoiseModel {
        NoiseModel::depolarizing(p).unwrap()
    }

    /// Minimum over every fault subset with the right check boundary and the
    /// given first-supernode parity (`None` = any).
    fn brute(g: &DecodingGraph, s: &Syndrome, par0: Option<bool>) -> Option<f64> {
        let defects: Vec<bool> = s.defects(g.graph_type()).iter().map(|b| *b).collect();
        let ne = g.edges().len();
        assert!(ne <= 20);
        let mut best: Option<f64> = None;
        for mask in 0u32..(1 << ne) {
            let mut deg = vec![false; g.num_vertices()];
            let mut w = 0.0;
            for k in 0..ne {
                if mask >> k & 1 == 1 {
                    let e = &g.edges()[k];
                    deg[e.u] ^= true;
                    deg[e.v] ^= true;
                    w += e.weight;
                }
            }
            if deg[..g.num_checks()] != defects[..] {
                continue;
            }
            if let Some(p) = par0 {
                if deg[g.supernode(0)] != p {
                    continue;
                }
            }
            if best.is_none_or(|b| w < b) {
                best = Some(w);
            }
        }
        best
    }

    #[test]
    fn graph_shape_at_d3() {
        let l = CodeLayout::planar(3).unwrap();
        let g = build_decoding_graph(&l, &dep(0.03), CheckType::Z).unwrap();
        assert_eq!(g.edges().len(), 13);
        for e in g.edges() {
            assert!((e.weight - edge_weight(0.02)).abs() < 1e-12);
        }
        let onlyx = NoiseModel::from_xyz(0.01, 0.0, 0.0).unwrap();
        let gx = build_decoding_graph(&l, &onlyx, CheckType::X).unwrap();
        assert!(gx.edges().is_empty());
        let gz = build_decoding_graph(&l, &onlyx, CheckType::Z).unwrap();
        assert!((gz.edges()[0].weight - 4.59511985013459).abs() < 1e-12);
        let bad = NoiseModel::from_xyz(0.3, 0.25, 0.0).unwrap();
        assert!(build_decoding_graph(&l, &bad, CheckType::Z).is_err());
    }

    #[test]
    fn empty_syndrome_and_flip_weights() {
        let l = CodeLayout::planar(3).unwrap();
        let noise = NoiseModel::from_xyz(0.01, 0.0, 0.0).unwrap();
        let g = build_decoding_graph(&l, &noise, CheckType::Z).unwrap();
        let s = l.empty_syndrome();
        let def = mwpm(&g, &s).unwrap();
        assert!(def.edges.is_empty());
        assert_eq!(def.total_weight, 0.0);
        assert_eq!(class_candidate(&g, &s, false).unwrap(), def);
        let f = class_candidate(&g, &s, true).unwrap();
        assert_eq!(f.edges.len(), 3);
        assert!((f.total_weight - 3.0 * 99f64.ln()).abs() < 1e-12);
        assert!((f.total_weight - 13.784).abs() < 2e-3);
        assert!((f.total_weight - brute(&g, &s, Some(true)).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn single_fault_syndromes_match_brute_force() {
        let l = CodeLayout::planar(3).unwrap();
        let noise = dep(0.015);
        let g = build_decoding_graph(&l, &noise, CheckType::Z).unwrap();
        for q in 0..l.n() {
            let e = PauliString::single(l.n(), q, Pauli::X);
            let s = l.syndrome(&e).unwrap();
            let sol = mwpm(&g, &s).unwrap();
            assert_eq!(sol.edges.len(), 1);
            assert_eq!(sol.qubits(&g).collect::<Vec<_>>(), vec![q]);
        }
    }

    #[test]
    fn all_syndromes_match_brute_force_at_d3() {
        let l = CodeLayout::planar(3).unwrap();
        // non-uniform weights to avoid ties
        let chans = (0..l.n())
            .map(|q| {
                let p = 0.01 + 0.003 * q as f64;
                crate::channel::PauliChannel::single(p, 0.001, p * 0.7).unwrap()
            })
            .collect();
        let noise = NoiseModel::per_qubit(chans).unwrap();
        for t in [CheckType::Z, CheckType::X] {
            let g = build_decoding_graph(&l, &noise, t).unwrap();
            for key in 0u64..64 {
                let mut s = l.empty_syndrome();
                for j in 0..6 {
                    s.defects_mut(t).set(j, key >> j & 1 == 1);
                }
                let def = mwpm(&g, &s).unwrap();
                let b = brute(&g, &s, None).unwrap();
                assert!((def.total_weight - b).abs() < 1e-9, "{t:?} {key}");
                let f = class_candidate(&g, &s, true).unwrap();
                let bf = brute(&g, &s, Some(!def.boundary_parities[0])).unwrap();
                assert!((f.total_weight - bf).abs() < 1e-9, "{t:?} {key}");
                assert_ne!(f.boundary_parities[0], def.boundary_parities[0]);
                assert_ne!(f.boundary_parities[1], def.boundary_parities[1]);
            }
        }
    }

    #[test]
    fn odd_parity_without_free_vertex_is_infeasible() {
        let l = CodeLayout::planar(3).unwrap();
        let g = build_decoding_graph(&l, &dep(0.01), CheckType::Z).unwrap();
        let s = l.empty_syndrome();
        let r = mwpm_with_parities(&g, &s, [Parity::Odd, Parity::Even]);
        assert!(matches!(r, Err(Error::Infeasible(_))));
    }

    #[test]
    fn distance_one() {
        let l = CodeLayout::planar(1).unwrap();
        let noise = NoiseModel::from_xyz(0.1, 0.0, 0.0).unwrap();
        let d = Decoder::new(&l, &noise).unwrap();
        let out = d.decode(&l.empty_syndrome()).unwrap();
        assert_eq!(d.scoring(), Scoring::EdgeMarginals);
        let p = out.posterior.as_array();
        assert!((p[0] - 0.9).abs() < 1e-12 && (p[1] - 0.1).abs() < 1e-12);
        assert_eq!(p[2] + p[3], 0.0);
    }

    #[test]
    fn posterior_properties_at_d3() {
        let l = CodeLayout::planar(3).unwrap();
        let noise = dep(0.01);
        let dec = Decoder::new(&l, &noise).unwrap();
        let out = dec.decode(&l.empty_syndrome()).unwrap();
        let sum: f64 = out.posterior.as_array().iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
        assert_eq!(out.hard, Pauli::I);
        let mut rng = RandomStream::new(3);
        for _ in 0..200 {
            let e = noise.sample(&l, &mut rng).unwrap();
            let s = l.syndrome(&e).unwrap();
            let out = dec.decode(&s).unwrap();
            for c in Pauli::ALL {
                if let Some(cand) = &out.candidates[c.index()] {
                    assert_eq!(l.syndrome(cand).unwrap(), s);
                    assert_eq!(l.logical_effect(cand).unwrap(), c);
                }
            }
            // flipped Z-graph candidate differs by a logical-X chain
            let a = out.candidates[out.matching_class.index()].as_ref().unwrap();
            let flip = out.matching_class.mul(Pauli::X);
            let b = out.candidates[flip.index()].as_ref().unwrap();
            let diff = a.mul(b).unwrap();
            assert_eq!(l.logical_effect(&diff).unwrap(), Pauli::X);
        }
    }

    #[test]
    fn failure_rate_grows_with_noise() {
        let l = CodeLayout::planar(3).unwrap();
        let rate = |p: f64| {
            let noise = dep(p);
            let dec = Decoder::new(&l, &noise).unwrap();
            let mut rng = RandomStream::new(11);
            let mut fails = 0;
            for _ in 0..4000 {
                let e = noise.sample(&l, &mut rng).unwrap();
                let out = dec.decode(&l.syndrome(&e).unwrap()).unwrap();
                let r = e.mul(out.correction()).unwrap();
                if l.logical_effect(&r).unwrap() != Pauli::I {
                    fails += 1;
                }
            }
            fails
        };
        assert!(rate(0.01) < rate(0.05));
    }

    #[test]
    fn reflection_symmetry() {
        // mirror the patch left-right: posteriors are unchanged
        let l = CodeLayout::planar(3).unwrap();
        let noise = NoiseModel::independent_xz(0.02, 0.03).unwrap();
        let dec = Decoder::new(&l, &noise).unwrap();
        let side = 5;
        let coords = l.qubit_coords().to_vec();
        let mirror: Vec<usize> = coords
            .iter()
            .map(|&(r, c)| coords.iter().position(|&x| x == (r, side - 1 - c)).unwrap())
            .collect();
        let mut rng = RandomStream::new(8);
        for _ in 0..100 {
            let e = noise.sample(&l, &mut rng).unwrap();
            let mut m = PauliString::identity(l.n());
            for q in 0..l.n() {
                m.set(mirror[q], e.get(q));
            }
            let a = dec.decode(&l.syndrome(&e).unwrap()).unwrap();
            let b = dec.decode(&l.syndrome(&m).unwrap()).unwrap();
            // classes relative to the true error are mirror invariant
            let ra = a.posterior.relative_to(l.logical_effect(&e).unwrap());
            let rb = b.posterior.relative_to(l.logical_effect(&m).unwrap());
            for c in 0..4 {
                assert!((ra.as_array()[c] - rb.as_array()[c]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn edge_order_does_not_change_weights() {
        let l = CodeLayout::planar(5).unwrap();
        let noise = dep(0.03);
        let g = build_decoding_graph(&l, &noise, CheckType::Z).unwrap();
        let mut edges = g.edges().to_vec();
        edges.reverse();
        let h = DecodingGraph::new(CheckType::Z, g.num_checks(), edges).unwrap();
        let mut rng = RandomStream::new(2);
        for _ in 0..50 {
            let e = noise.sample(&l, &mut rng).unwrap();
            let s = l.syndrome(&e).unwrap();
            for flip in [false, true] {
                let a = class_candidate(&g, &s, flip).unwrap();
                let b = class_candidate(&h, &s, flip).unwrap();
                assert!((a.total_weight - b.total_weight).abs() < 1e-9);
            }
        }
    }

    proptest! {
        #[test]
        fn solution_boundary_equals_defects(seed in any::<u64>()) {
            let l = CodeLayout::planar(5).unwrap();
            let noise = dep(0.08);
            let g = build_decoding_graph(&l, &noise, CheckType::X).unwrap();
            let mut rng = RandomStream::new(seed);
            let e = noise.sample(&l, &mut rng).unwrap();
            let s = l.syndrome(&e).unwrap();
            for flip in [false, true] {
                let sol = class_candidate(&g, &s, flip).unwrap();
                let fix = PauliString::z_on(l.n(), sol.qubits(&g));
                prop_assert_eq!(&l.syndrome(&fix).unwrap().x_defects, &s.x_defects);
            }
        }
    }
}
