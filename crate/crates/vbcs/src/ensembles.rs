//! Random biregular weighted sensing graphs, sparse signals and measurements.
//!
//! A sensing graph is an `(n, d_v, d_c)`-biregular bipartite graph with one
//! weight per edge; the measurement operator is the weighted biadjacency
//! matrix. Graphs are sampled from the configuration model (a seeded pairing
//! of variable stubs with check stubs) followed by random edge swaps until no
//! parallel edges remain, which preserves near-uniformity over simple graphs.

use std::collections::HashMap;
use std::fmt::Write as _;

use rand::distributions::{Distribution, Uniform};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::Error;
use crate::rng::rng_from_seed;

/// Edge-weight law for the sensing graph.
///
/// All laws exclude zero, as required for the measurement operator to be
/// injective on single coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightDist {
    /// All weights equal to one.
    Unit,
    /// Continuous uniform on `(lo, hi)`, resampled on an exact zero.
    Uniform { lo: f64, hi: f64 },
    /// Standard Gaussian, resampled on an exact zero.
    Gaussian,
}

/// Value law for the nonzero signal elements.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NonzeroDist {
    /// Standard Gaussian.
    StandardGaussian,
    /// Even integers uniform on `[lo, hi]`, excluding zero so that sampled
    /// support membership and actual nonzeroness coincide.
    UniformEvenInt { lo: i64, hi: i64 },
}

/// Parameters of the graph ensemble.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphParams {
    /// Number of variable nodes (signal length).
    pub n: usize,
    /// Variable-node degree.
    pub dv: usize,
    /// Check-node degree.
    pub dc: usize,
    /// Edge-weight law.
    pub weight_dist: WeightDist,
}

impl GraphParams {
    pub fn new(n: usize, dv: usize, dc: usize, weight_dist: WeightDist) -> Self {
        GraphParams { n, dv, dc, weight_dist }
    }

    /// Number of check nodes `m = n d_v / d_c`.
    pub fn m(&self) -> usize {
        self.n * self.dv / self.dc
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.n == 0 || self.dv == 0 {
            return Err(Error::InvalidParameter("n and d_v must be positive".into()));
        }
        if self.dc < 2 {
            return Err(Error::InvalidParameter("d_c must be at least 2".into()));
        }
        if (self.n * self.dv) % self.dc != 0 {
            return Err(Error::InvalidParameter(format!(
                "n*d_v = {} not divisible by d_c = {}",
                self.n * self.dv,
                self.dc
            )));
        }
        let m = self.m();
        if self.dc > self.n || self.dv > m {
            return Err(Error::InvalidParameter(format!(
                "no simple graph exists: need d_c <= n and d_v <= m (n={}, m={m})",
                self.n
            )));
        }
        if let WeightDist::Uniform { lo, hi } = self.weight_dist {
            if !(lo < hi) {
                return Err(Error::InvalidParameter("uniform weight range requires lo < hi".into()));
            }
        }
        Ok(())
    }
}

/// A weighted `(n, d_v, d_c)`-biregular sensing graph.
///
/// Adjacency is stored flat with fixed stride: variable `v` owns entries
/// `v*d_v .. (v+1)*d_v` of `var_chk`/`var_wt`, and check `c` owns entries
/// `c*d_c .. (c+1)*d_c` of `chk_var`/`chk_wt`. Both views describe the same
/// edge set with identical weights.
#[derive(Debug, Clone)]
pub struct SensingGraph {
    pub params: GraphParams,
    pub m: usize,
    var_chk: Vec<u32>,
    var_wt: Vec<f64>,
    chk_var: Vec<u32>,
    chk_wt: Vec<f64>,
}

impl SensingGraph {
    pub fn n(&self) -> usize {
        self.params.n
    }

    pub fn dv(&self) -> usize {
        self.params.dv
    }

    pub fn dc(&self) -> usize {
        self.params.dc
    }

    /// Neighbors of variable `v` as `(check_index, weight)`.
    pub fn var_adj(&self, v: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let dv = self.params.dv;
        self.var_chk[v * dv..(v + 1) * dv]
            .iter()
            .zip(&self.var_wt[v * dv..(v + 1) * dv])
            .map(|(&c, &w)| (c as usize, w))
    }

    /// Neighbors of check `c` as `(variable_index, weight)`.
    pub fn chk_adj(&self, c: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let dc = self.params.dc;
        self.chk_var[c * dc..(c + 1) * dc]
            .iter()
            .zip(&self.chk_wt[c * dc..(c + 1) * dc])
            .map(|(&v, &w)| (v as usize, w))
    }

    /// Checks the biregularity, simplicity and cross-consistency invariants.
    pub fn check_invariants(&self) -> Result<(), Error> {
        let (n, dv, dc, m) = (self.params.n, self.params.dv, self.params.dc, self.m);
        if self.var_chk.len() != n * dv || self.chk_var.len() != m * dc {
            return Err(Error::InvariantViolation("adjacency size mismatch".into()));
        }
        let mut edges_from_vars: Vec<(u32, u32, u64)> = Vec::with_capacity(n * dv);
        for v in 0..n {
            let mut nbrs: Vec<usize> = self.var_adj(v).map(|(c, _)| c).collect();
            nbrs.sort_unstable();
            nbrs.dedup();
            if nbrs.len() != dv {
                return Err(Error::InvariantViolation(format!("variable {v} has a repeated neighbor")));
            }
            for (c, w) in self.var_adj(v) {
                if w == 0.0 {
                    return Err(Error::InvariantViolation("zero edge weight".into()));
                }
                edges_from_vars.push((c as u32, v as u32, w.to_bits()));
            }
        }
        let mut edges_from_chks: Vec<(u32, u32, u64)> = Vec::with_capacity(m * dc);
        for c in 0..m {
            let mut nbrs: Vec<usize> = self.chk_adj(c).map(|(v, _)| v).collect();
            nbrs.sort_unstable();
            nbrs.dedup();
            if nbrs.len() != dc {
                return Err(Error::InvariantViolation(format!("check {c} has a repeated neighbor")));
            }
            for (v, w) in self.chk_adj(c) {
                edges_from_chks.push((c as u32, v as u32, w.to_bits()));
            }
        }
        edges_from_vars.sort_unstable();
        edges_from_chks.sort_unstable();
        if edges_from_vars != edges_from_chks {
            return Err(Error::InvariantViolation("variable and check views disagree".into()));
        }
        Ok(())
    }

    /// Serializes the graph as a plain-text edge list: header `n m d_v d_c`,
    /// then one `check variable weight` line per edge, ordered by check and
    /// position within the check's adjacency list.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {} {} {}", self.params.n, self.m, self.params.dv, self.params.dc);
        for c in 0..self.m {
            for (v, w) in self.chk_adj(c) {
                let _ = writeln!(out, "{c} {v} {w:?}");
            }
        }
        out
    }

    /// Parses the edge-list format produced by [`SensingGraph::to_edge_list`].
    pub fn from_edge_list(text: &str) -> Result<Self, Error> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("missing header".into()))?;
        let head: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse::<usize>().map_err(|e| Error::Parse(format!("header: {e}"))))
            .collect::<Result<_, _>>()?;
        if head.len() != 4 {
            return Err(Error::Parse("header must be `n m d_v d_c`".into()));
        }
        let (n, m, dv, dc) = (head[0], head[1], head[2], head[3]);
        let params = GraphParams::new(n, dv, dc, WeightDist::Unit);
        params.validate()?;
        if params.m() != m {
            return Err(Error::Parse(format!("header m = {m} inconsistent with n*d_v/d_c")));
        }
        let mut chk_var = Vec::with_capacity(m * dc);
        let mut chk_wt = Vec::with_capacity(m * dc);
        let mut expected_c = 0usize;
        let mut pos = 0usize;
        for line in lines {
            let mut it = line.split_whitespace();
            let c: usize = it
                .next()
                .ok_or_else(|| Error::Parse("short edge line".into()))?
                .parse()
                .map_err(|e| Error::Parse(format!("check index: {e}")))?;
            let v: usize = it
                .next()
                .ok_or_else(|| Error::Parse("short edge line".into()))?
                .parse()
                .map_err(|e| Error::Parse(format!("variable index: {e}")))?;
            let w: f64 = it
                .next()
                .ok_or_else(|| Error::Parse("short edge line".into()))?
                .parse()
                .map_err(|e| Error::Parse(format!("weight: {e}")))?;
            if c != expected_c {
                return Err(Error::Parse(format!("edges out of order at check {c}")));
            }
            if v >= n {
                return Err(Error::Parse(format!("variable index {v} out of range")));
            }
            chk_var.push(v as u32);
            chk_wt.push(w);
            pos += 1;
            if pos == dc {
                pos = 0;
                expected_c += 1;
            }
        }
        if expected_c != m || pos != 0 {
            return Err(Error::Parse("edge count does not match m*d_c".into()));
        }
        let g = graph_from_check_adjacency(params, chk_var, chk_wt)?;
        g.check_invariants()?;
        Ok(g)
    }
}

/// Builds the variable-side view from a complete check-side adjacency.
fn graph_from_check_adjacency(
    params: GraphParams,
    chk_var: Vec<u32>,
    chk_wt: Vec<f64>,
) -> Result<SensingGraph, Error> {
    let (n, dv, dc) = (params.n, params.dv, params.dc);
    let m = params.m();
    let mut var_chk = vec![0u32; n * dv];
    let mut var_wt = vec![0f64; n * dv];
    let mut fill = vec![0usize; n];
    for c in 0..m {
        for k in 0..dc {
            let v = chk_var[c * dc + k] as usize;
            if fill[v] >= dv {
                return Err(Error::GraphConstruction(format!("variable {v} exceeds degree d_v")));
            }
            var_chk[v * dv + fill[v]] = c as u32;
            var_wt[v * dv + fill[v]] = chk_wt[c * dc + k];
            fill[v] += 1;
        }
    }
    if fill.iter().any(|&f| f != dv) {
        return Err(Error::GraphConstruction("some variable has degree below d_v".into()));
    }
    Ok(SensingGraph { params, m, var_chk, var_wt, chk_var, chk_wt })
}

/// Samples a simple biregular weighted graph: configuration-model pairing,
/// then random edge swaps until no parallel edges remain (bounded at
/// `100 * n * d_v` swap attempts).
pub fn sample_biregular_graph(params: GraphParams, seed: u64) -> Result<SensingGraph, Error> {
    params.validate()?;
    let (n, dv, dc) = (params.n, params.dv, params.dc);
    let m = params.m();
    let n_edges = n * dv;
    let mut rng = rng_from_seed(seed);

    // Variable stubs stay in place; shuffling the check stubs performs the
    // uniform pairing.
    let mut edge_var: Vec<u32> = Vec::with_capacity(n_edges);
    for v in 0..n {
        for _ in 0..dv {
            edge_var.push(v as u32);
        }
    }
    let mut edge_chk: Vec<u32> = Vec::with_capacity(n_edges);
    for c in 0..m {
        for _ in 0..dc {
            edge_chk.push(c as u32);
        }
    }
    // Fisher-Yates with the seeded generator.
    for i in (1..n_edges).rev() {
        let j = rng.gen_range(0..=i);
        edge_chk.swap(i, j);
    }

    // Repair parallel edges by random swaps of check endpoints.
    let mut counts: HashMap<(u32, u32), u32> = HashMap::with_capacity(n_edges);
    for i in 0..n_edges {
        *counts.entry((edge_var[i], edge_chk[i])).or_insert(0) += 1;
    }
    let mut dups: Vec<usize> =
        (0..n_edges).filter(|&i| counts[&(edge_var[i], edge_chk[i])] > 1).collect();
    let max_attempts = 100usize.saturating_mul(n_edges);
    let mut attempts = 0usize;
    while let Some(e1) = dups.pop() {
        if counts[&(edge_var[e1], edge_chk[e1])] <= 1 {
            continue; // stale entry
        }
        attempts += 1;
        if attempts > max_attempts {
            return Err(Error::GraphConstruction(format!(
                "edge-swap repair did not converge within {max_attempts} attempts"
            )));
        }
        let e2 = rng.gen_range(0..n_edges);
        if e2 == e1 {
            dups.push(e1);
            continue;
        }
        for &e in &[e1, e2] {
            let cnt = counts.get_mut(&(edge_var[e], edge_chk[e])).unwrap();
            *cnt -= 1;
        }
        edge_chk.swap(e1, e2);
        for &e in &[e1, e2] {
            let cnt = counts.entry((edge_var[e], edge_chk[e])).or_insert(0);
            *cnt += 1;
            if *cnt > 1 {
                dups.push(e);
            }
        }
    }
    debug_assert!(counts.values().all(|&c| c <= 1));

    // Canonical edge order (by check, then variable) fixes both adjacency
    // layouts and the weight stream.
    let mut order: Vec<usize> = (0..n_edges).collect();
    order.sort_unstable_by_key(|&i| (edge_chk[i], edge_var[i]));
    let mut chk_var = Vec::with_capacity(n_edges);
    let mut chk_wt = Vec::with_capacity(n_edges);
    for &i in &order {
        chk_var.push(edge_var[i]);
        let w: f64 = match params.weight_dist {
            WeightDist::Unit => 1.0,
            WeightDist::Uniform { lo, hi } => {
                let d = Uniform::new(lo, hi);
                loop {
                    let x = d.sample(&mut rng);
                    if x != 0.0 {
                        break x;
                    }
                }
            }
            WeightDist::Gaussian => loop {
                let x: f64 = StandardNormal.sample(&mut rng);
                if x != 0.0 {
                    break x;
                }
            },
        };
        chk_wt.push(w);
    }
    graph_from_check_adjacency(params, chk_var, chk_wt)
}

/// A sparse signal with known ground-truth support.
#[derive(Debug, Clone)]
pub struct SparseSignal {
    /// Length-`n` value vector.
    pub values: Vec<f64>,
    /// Sorted indices of the nonzero entries; always `{ i : values[i] != 0 }`.
    pub support: Vec<u32>,
    /// Density factor used to sample the signal.
    pub alpha0: f64,
}

impl SparseSignal {
    pub fn n(&self) -> usize {
        self.values.len()
    }

    /// Rebuilds a signal from raw values, deriving the support.
    pub fn from_values(values: Vec<f64>, alpha0: f64) -> Self {
        let support = values
            .iter()
            .enumerate()
            .filter(|(_, &x)| x != 0.0)
            .map(|(i, _)| i as u32)
            .collect();
        SparseSignal { values, support, alpha0 }
    }
}

/// Samples a signal whose elements are independently nonzero with
/// probability `alpha0`, with nonzero values drawn from `dist`.
pub fn sample_signal(n: usize, alpha0: f64, dist: NonzeroDist, seed: u64) -> SparseSignal {
    let mut rng = rng_from_seed(seed);
    let mut values = vec![0.0f64; n];
    let mut support = Vec::new();
    for (i, slot) in values.iter_mut().enumerate() {
        if rng.gen::<f64>() < alpha0 {
            let x = match dist {
                NonzeroDist::StandardGaussian => loop {
                    let x: f64 = StandardNormal.sample(&mut rng);
                    if x != 0.0 {
                        break x;
                    }
                },
                NonzeroDist::UniformEvenInt { lo, hi } => {
                    // Even integers in [lo, hi], zero excluded.
                    let lo2 = (lo + 1).div_euclid(2);
                    let hi2 = hi.div_euclid(2);
                    loop {
                        let k = rng.gen_range(lo2..=hi2);
                        if k != 0 {
                            break (2 * k) as f64;
                        }
                    }
                }
            };
            *slot = x;
            support.push(i as u32);
        }
    }
    SparseSignal { values, support, alpha0 }
}

/// Samples a signal with exactly `k` nonzero entries at uniformly random
/// positions (partial Fisher-Yates), values drawn from `dist`.
pub fn sample_signal_with_support_size(
    n: usize,
    k: usize,
    dist: NonzeroDist,
    seed: u64,
) -> Result<SparseSignal, Error> {
    if k > n {
        return Err(Error::InvalidParameter(format!("support size {k} exceeds n = {n}")));
    }
    let mut rng = rng_from_seed(seed);
    let mut idx: Vec<u32> = (0..n as u32).collect();
    for i in 0..k {
        let j = rng.gen_range(i..n);
        idx.swap(i, j);
    }
    let mut values = vec![0.0f64; n];
    let mut support: Vec<u32> = idx[..k].to_vec();
    support.sort_unstable();
    for &i in &support {
        values[i as usize] = match dist {
            NonzeroDist::StandardGaussian => loop {
                let x: f64 = StandardNormal.sample(&mut rng);
                if x != 0.0 {
                    break x;
                }
            },
            NonzeroDist::UniformEvenInt { lo, hi } => {
                let lo2 = (lo + 1).div_euclid(2);
                let hi2 = hi.div_euclid(2);
                loop {
                    let k = rng.gen_range(lo2..=hi2);
                    if k != 0 {
                        break (2 * k) as f64;
                    }
                }
            }
        };
    }
    Ok(SparseSignal { values, support, alpha0: k as f64 / n as f64 })
}

/// Largest `n' <= n` with `n' * d_v` divisible by `d_c`.
pub fn round_n_down(n: usize, dv: usize, dc: usize) -> usize {
    let g = gcd(dv, dc);
    let step = dc / g;
    (n / step) * step
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// A measurement vector, possibly noisy.
#[derive(Debug, Clone)]
pub struct MeasurementVector {
    /// Length-`m` measurement values.
    pub values: Vec<f64>,
    /// Standard deviation of the additive noise; zero for noiseless.
    pub noise_sigma: f64,
}

impl MeasurementVector {
    pub fn m(&self) -> usize {
        self.values.len()
    }
}

/// Applies the measurement operator: `c_i = sum over (j, w) in chk_adj(i) of w * v_j`.
pub fn measure(graph: &SensingGraph, signal: &SparseSignal) -> Result<MeasurementVector, Error> {
    if signal.n() != graph.n() {
        return Err(Error::DimensionMismatch { expected: graph.n(), got: signal.n() });
    }
    let mut values = vec![0.0f64; graph.m];
    for (c, slot) in values.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (v, w) in graph.chk_adj(c) {
            acc += w * signal.values[v];
        }
        *slot = acc;
    }
    Ok(MeasurementVector { values, noise_sigma: 0.0 })
}

/// Adds i.i.d. Gaussian noise of standard deviation `sigma` to each measurement.
pub fn add_noise(meas: &MeasurementVector, sigma: f64, seed: u64) -> Result<MeasurementVector, Error> {
    if sigma <= 0.0 {
        return Err(Error::InvalidParameter("sigma must be positive".into()));
    }
    let mut rng = rng_from_seed(seed);
    let values = meas
        .values
        .iter()
        .map(|&c| {
            let z: f64 = StandardNormal.sample(&mut rng);
            c + sigma * z
        })
        .collect();
    Ok(MeasurementVector { values, noise_sigma: sigma })
}
