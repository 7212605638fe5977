//! Node-based verification decoding: Genie, LM, SBB and XH.
//!
//! One iteration consists of two rounds (the Genie uses one). In each round,
//! every check node reports its residual degree and residual value — the
//! measurement minus the weighted sum of verified neighbors — and every still
//! unverified variable node maps its incoming reports to a verification
//! decision. Round 1 applies the value rules (D1CN for degree-one checks,
//! ECN for equal check values); round 2 verifies neighbors of zero-valued
//! checks (ZCN). Rounds are synchronous: all decisions in a round are taken
//! against the same snapshot of check state.
//!
//! ECN decisions additionally pass a structural guard: the candidate variable
//! must be the only unverified common neighbor of its equal-valued checks.
//! On cycle-free neighborhoods the guard never intervenes; on short cycles it
//! suppresses the false verifications that a purely local equal-value rule
//! would commit when two variables share several checks.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::ensembles::{MeasurementVector, SensingGraph, SparseSignal};
use crate::error::Error;
use crate::rng::rng_from_seed;

/// The four recovery algorithms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    /// Support oracle: off-support variables start verified, D1CN only.
    Genie,
    /// D1CN + ZCN.
    Lm,
    /// D1CN + ECN + ZCN.
    Sbb,
    /// Majority ECN (at least `ceil(d_v/2)` equal values) + ZCN. Unreliable
    /// on d_v = 3 graphs, where the majority is two checks and a four-cycle
    /// shared with another support variable can defeat even the structural
    /// uniqueness guard's premises; thresholds for d_v = 3 are not reported.
    Xh,
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Algorithm::Genie => write!(f, "genie"),
            Algorithm::Lm => write!(f, "lm"),
            Algorithm::Sbb => write!(f, "sbb"),
            Algorithm::Xh => write!(f, "xh"),
        }
    }
}

/// Decoder configuration.
#[derive(Debug, Clone, Copy)]
pub struct DecoderConfig {
    pub algorithm: Algorithm,
    /// Iteration cap; `None` defaults to `10 * n`.
    pub max_iterations: Option<usize>,
    /// Absolute tolerance for "two check values are equal" and "a check value
    /// is zero".
    pub eq_tol: f64,
    /// Tie-break seed for picking among conflicting verification values.
    pub seed: u64,
}

impl DecoderConfig {
    pub fn new(algorithm: Algorithm) -> Self {
        DecoderConfig { algorithm, max_iterations: None, eq_tol: 1e-9, seed: 0 }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_eq_tol(mut self, eq_tol: f64) -> Self {
        self.eq_tol = eq_tol;
        self
    }
}

/// Message from a variable node: verification flag plus verified value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarMessage {
    pub verified: bool,
    /// Verified value; zero (and meaningless) while unverified.
    pub value: f64,
}

/// Message from a check node: residual degree and residual value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChkMessage {
    pub residual_degree: usize,
    pub residual_value: f64,
}

/// Check-node map: counts unverified neighbors and subtracts the verified,
/// weight-multiplied values from the measurement.
pub fn check_node_map(measurement: f64, incoming: &[VarMessage], weights: &[f64]) -> ChkMessage {
    debug_assert_eq!(incoming.len(), weights.len());
    let mut degree = incoming.len();
    let mut value = measurement;
    for (m, &w) in incoming.iter().zip(weights) {
        if m.verified {
            degree -= 1;
            value -= w * m.value;
        }
    }
    ChkMessage { residual_degree: degree, residual_value: value }
}

/// Round-1 variable map on weight-divided incoming values, as seen by a
/// single node. `incoming[i].residual_value` must already be divided by the
/// connecting edge weight.
///
/// This is the purely local rule; [`decode`] additionally applies the
/// structural uniqueness guard to ECN candidates, which needs graph context.
pub fn variable_round1(
    algorithm: Algorithm,
    incoming: &[ChkMessage],
    eq_tol: f64,
    rng: &mut ChaCha8Rng,
) -> VarMessage {
    let mut candidates: Vec<f64> = Vec::new();
    match algorithm {
        Algorithm::Genie | Algorithm::Lm => {
            for m in incoming {
                if m.residual_degree == 1 {
                    candidates.push(m.residual_value);
                }
            }
        }
        Algorithm::Sbb => {
            for m in incoming {
                if m.residual_degree == 1 {
                    candidates.push(m.residual_value);
                }
            }
            for cluster in equal_value_clusters(incoming, eq_tol) {
                if cluster.len() >= 2 {
                    candidates.push(incoming[cluster[0]].residual_value);
                }
            }
        }
        Algorithm::Xh => {
            let need = incoming.len().div_ceil(2);
            for cluster in equal_value_clusters(incoming, eq_tol) {
                if cluster.len() >= need {
                    candidates.push(incoming[cluster[0]].residual_value);
                }
            }
        }
    }
    pick_candidate(&candidates, eq_tol, rng)
        .map(|value| VarMessage { verified: true, value })
        .unwrap_or(VarMessage { verified: false, value: 0.0 })
}

/// Round-2 variable map: verified with zero if any incoming residual value is
/// zero within `eq_tol`.
pub fn variable_round2(incoming: &[ChkMessage], eq_tol: f64) -> VarMessage {
    if incoming.iter().any(|m| m.residual_value.abs() <= eq_tol) {
        VarMessage { verified: true, value: 0.0 }
    } else {
        VarMessage { verified: false, value: 0.0 }
    }
}

/// Groups message indices by equal nonzero value (single-link within
/// `eq_tol` on the sorted values). Zero values never form ECN clusters; they
/// belong to the round-2 rule.
fn equal_value_clusters(incoming: &[ChkMessage], eq_tol: f64) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> =
        (0..incoming.len()).filter(|&i| incoming[i].residual_value.abs() > eq_tol).collect();
    idx.sort_by(|&a, &b| incoming[a].residual_value.total_cmp(&incoming[b].residual_value));
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for i in idx {
        match clusters.last_mut() {
            Some(last)
                if incoming[i].residual_value
                    - incoming[*last.last().unwrap()].residual_value
                    <= eq_tol =>
            {
                last.push(i)
            }
            _ => clusters.push(vec![i]),
        }
    }
    clusters
}

/// Collapses candidate values that agree within `eq_tol` and picks one
/// uniformly at random if distinct values remain.
fn pick_candidate(candidates: &[f64], eq_tol: f64, rng: &mut ChaCha8Rng) -> Option<f64> {
    if candidates.is_empty() {
        return None;
    }
    let mut distinct: Vec<f64> = Vec::with_capacity(1);
    for &v in candidates {
        if !distinct.iter().any(|&d| (d - v).abs() <= eq_tol) {
            distinct.push(v);
        }
    }
    if distinct.len() == 1 {
        Some(distinct[0])
    } else {
        Some(distinct[rng.gen_range(0..distinct.len())])
    }
}

/// Why the decoder stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// Every variable is verified.
    Complete,
    /// A full iteration changed no variable's state.
    Stall,
    /// The iteration cap was reached.
    IterationCap,
}

/// One per-iteration trace record, taken at the beginning of the iteration.
#[derive(Debug, Clone, Copy)]
pub struct TraceRow {
    pub iteration: usize,
    /// Fraction of variables that are nonzero and unverified (beta).
    pub beta: f64,
    /// Fraction of variables that are zero-valued and unverified.
    pub unverified_zero_frac: f64,
    /// Variables verified during this iteration.
    pub newly_verified: usize,
}

/// Decoding result.
#[derive(Debug, Clone)]
pub struct DecodeResult {
    /// True iff every variable is verified at stop.
    pub success: bool,
    pub stop_reason: StopReason,
    /// Iterations executed, counting iteration 0.
    pub iterations_run: usize,
    pub recovered: SparseSignal,
    /// Per-variable verification flag at stop; `recovered.values[v]` is
    /// meaningful only where this is set.
    pub verified: Vec<bool>,
    pub trace: Vec<TraceRow>,
    /// Verified variables whose value differs from the truth by more than
    /// 1e-6; zero when no truth was supplied.
    pub false_verifications: usize,
}

impl DecodeResult {
    /// Beta at the beginning of iteration `ell`, if recorded.
    pub fn beta_at(&self, ell: usize) -> Option<f64> {
        self.trace.get(ell).map(|r| r.beta)
    }

    /// Beta at stall/completion time.
    pub fn final_beta(&self) -> f64 {
        self.trace.last().map(|r| r.beta).unwrap_or(0.0)
    }

    /// Serializes the trace as CSV (`iter, beta, unverified_zero_frac,
    /// newly_verified`).
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("iter,beta,unverified_zero_frac,newly_verified\n");
        for row in &self.trace {
            out.push_str(&format!(
                "{},{:.16e},{:.16e},{}\n",
                row.iteration, row.beta, row.unverified_zero_frac, row.newly_verified
            ));
        }
        out
    }
}

struct DecoderState<'a> {
    graph: &'a SensingGraph,
    cfg: DecoderConfig,
    verified: Vec<bool>,
    value: Vec<f64>,
    chk_degree: Vec<u32>,
    chk_value: Vec<f64>,
    /// Ground-truth support membership (used for the beta trace); empty when
    /// no truth is available.
    in_support: Vec<bool>,
    unverified_support: usize,
    unverified_zero: usize,
    /// Variables whose neighborhood changed since their last evaluation, one
    /// flag set per round type.
    pending_r1: Vec<u32>,
    pending_r2: Vec<u32>,
    in_pending_r1: Vec<bool>,
    in_pending_r2: Vec<bool>,
    rng: ChaCha8Rng,
}

impl<'a> DecoderState<'a> {
    fn new(
        graph: &'a SensingGraph,
        meas: &MeasurementVector,
        cfg: DecoderConfig,
        truth: Option<&SparseSignal>,
    ) -> Self {
        let n = graph.n();
        let in_support: Vec<bool> = match truth {
            Some(t) => t.values.iter().map(|&x| x != 0.0).collect(),
            None => vec![false; n],
        };
        let unverified_support = in_support.iter().filter(|&&s| s).count();
        DecoderState {
            graph,
            cfg,
            verified: vec![false; n],
            value: vec![0.0; n],
            chk_degree: vec![graph.dc() as u32; graph.m],
            chk_value: meas.values.clone(),
            in_support,
            unverified_support,
            unverified_zero: n - unverified_support,
            pending_r1: Vec::new(),
            pending_r2: Vec::new(),
            in_pending_r1: vec![false; n],
            in_pending_r2: vec![false; n],
            rng: rng_from_seed(cfg.seed),
        }
    }

    /// Marks a variable verified and propagates its value into the residuals.
    fn commit(&mut self, v: usize, value: f64) {
        debug_assert!(!self.verified[v]);
        self.verified[v] = true;
        self.value[v] = value;
        if self.in_support[v] {
            self.unverified_support -= 1;
        } else {
            self.unverified_zero -= 1;
        }
        for (c, w) in self.graph.var_adj(v) {
            self.chk_degree[c] -= 1;
            self.chk_value[c] -= w * value;
            for (u, _) in self.graph.chk_adj(c) {
                if !self.verified[u] {
                    if !self.in_pending_r1[u] {
                        self.in_pending_r1[u] = true;
                        self.pending_r1.push(u as u32);
                    }
                    if !self.in_pending_r2[u] {
                        self.in_pending_r2[u] = true;
                        self.pending_r2.push(u as u32);
                    }
                }
            }
        }
    }

    /// ECN guard: is `v` the only unverified variable adjacent to every check
    /// in `checks`?
    fn unique_common_neighbor(&self, v: usize, checks: &[usize]) -> bool {
        debug_assert!(!checks.is_empty());
        let first = checks[0];
        'candidates: for (u, _) in self.graph.chk_adj(first) {
            if u == v || self.verified[u] {
                continue;
            }
            for &c in &checks[1..] {
                if !self.graph.chk_adj(c).any(|(x, _)| x == u) {
                    continue 'candidates;
                }
            }
            return false;
        }
        true
    }

    /// Evaluates the round-1 rule for one variable against the current check
    /// snapshot; returns the value to verify with, if any.
    fn eval_round1(&mut self, v: usize) -> Option<f64> {
        let eq_tol = self.cfg.eq_tol;
        let dv = self.graph.dv();
        let mut msgs: Vec<ChkMessage> = Vec::with_capacity(dv);
        let mut chks: Vec<usize> = Vec::with_capacity(dv);
        for (c, w) in self.graph.var_adj(v) {
            msgs.push(ChkMessage {
                residual_degree: self.chk_degree[c] as usize,
                residual_value: self.chk_value[c] / w,
            });
            chks.push(c);
        }
        let mut candidates: Vec<f64> = Vec::new();
        let take_d1cn = matches!(self.cfg.algorithm, Algorithm::Genie | Algorithm::Lm | Algorithm::Sbb);
        if take_d1cn {
            for m in &msgs {
                if m.residual_degree == 1 {
                    candidates.push(m.residual_value);
                }
            }
        }
        let min_cluster = match self.cfg.algorithm {
            Algorithm::Sbb => Some(2),
            Algorithm::Xh => Some(dv.div_ceil(2)),
            _ => None,
        };
        if let Some(need) = min_cluster {
            for cluster in equal_value_clusters(&msgs, eq_tol) {
                if cluster.len() < need {
                    continue;
                }
                let cluster_checks: Vec<usize> = cluster.iter().map(|&i| chks[i]).collect();
                if self.unique_common_neighbor(v, &cluster_checks) {
                    candidates.push(msgs[cluster[0]].residual_value);
                }
            }
        }
        pick_candidate(&candidates, eq_tol, &mut self.rng)
    }

    fn eval_round2(&self, v: usize) -> bool {
        self.graph.var_adj(v).any(|(c, _)| self.chk_value[c].abs() <= self.cfg.eq_tol)
    }

    fn n_unverified(&self) -> usize {
        self.unverified_support + self.unverified_zero
    }
}

/// Runs the selected algorithm on one instance.
///
/// `truth` supplies the support oracle for the Genie (mandatory there) and
/// enables the beta trace and false-verification count for the others.
pub fn decode(
    graph: &SensingGraph,
    meas: &MeasurementVector,
    cfg: &DecoderConfig,
    truth: Option<&SparseSignal>,
) -> Result<DecodeResult, Error> {
    if meas.m() != graph.m {
        return Err(Error::DimensionMismatch { expected: graph.m, got: meas.m() });
    }
    if let Some(t) = truth {
        if t.n() != graph.n() {
            return Err(Error::DimensionMismatch { expected: graph.n(), got: t.n() });
        }
    }
    if cfg.algorithm == Algorithm::Genie && truth.is_none() {
        return Err(Error::InvalidParameter("the Genie needs the ground-truth support".into()));
    }

    let n = graph.n();
    let max_iterations = cfg.max_iterations.unwrap_or(10 * n.max(1));
    let mut st = DecoderState::new(graph, meas, *cfg, truth);
    let mut trace: Vec<TraceRow> = Vec::new();

    // Iteration 0: one round. The Genie verifies the off-support variables;
    // the others apply the zero-check rule to the raw measurements.
    let mut newly = 0usize;
    trace.push(TraceRow {
        iteration: 0,
        beta: st.unverified_support as f64 / n as f64,
        unverified_zero_frac: st.unverified_zero as f64 / n as f64,
        newly_verified: 0,
    });
    match cfg.algorithm {
        Algorithm::Genie => {
            let truth = truth.expect("checked above");
            for v in 0..n {
                if truth.values[v] == 0.0 {
                    st.commit(v, 0.0);
                    newly += 1;
                }
            }
        }
        _ => {
            let zeros: Vec<usize> = (0..n).filter(|&v| st.eval_round2(v)).collect();
            for v in zeros {
                st.commit(v, 0.0);
                newly += 1;
            }
        }
    }
    trace[0].newly_verified = newly;

    let mut iterations_run = 1; // iteration 0 done
    let mut stop_reason = StopReason::IterationCap;
    for ell in 1..=max_iterations {
        if st.n_unverified() == 0 {
            stop_reason = StopReason::Complete;
            break;
        }
        trace.push(TraceRow {
            iteration: ell,
            beta: st.unverified_support as f64 / n as f64,
            unverified_zero_frac: st.unverified_zero as f64 / n as f64,
            newly_verified: 0,
        });
        let mut newly_this_iter = 0usize;

        // Round 1 (the only round for the Genie): value rules against the
        // round-start snapshot; commits are applied after the scan.
        let queue: Vec<u32> = std::mem::take(&mut st.pending_r1);
        let mut decisions: Vec<(usize, f64)> = Vec::new();
        for &vu in &queue {
            let v = vu as usize;
            st.in_pending_r1[v] = false;
            if st.verified[v] {
                continue;
            }
            if let Some(value) = st.eval_round1(v) {
                decisions.push((v, value));
            }
        }
        for &(v, value) in &decisions {
            if !st.verified[v] {
                st.commit(v, value);
                newly_this_iter += 1;
            }
        }

        // Round 2: ZCN for LM/SBB/XH.
        if cfg.algorithm != Algorithm::Genie {
            let queue: Vec<u32> = std::mem::take(&mut st.pending_r2);
            let mut zero_decisions: Vec<usize> = Vec::new();
            for &vu in &queue {
                let v = vu as usize;
                st.in_pending_r2[v] = false;
                if st.verified[v] {
                    continue;
                }
                if st.eval_round2(v) {
                    zero_decisions.push(v);
                }
            }
            for &v in &zero_decisions {
                if !st.verified[v] {
                    st.commit(v, 0.0);
                    newly_this_iter += 1;
                }
            }
        }

        trace.last_mut().unwrap().newly_verified = newly_this_iter;
        iterations_run = ell + 1;
        if newly_this_iter == 0 {
            stop_reason =
                if st.n_unverified() == 0 { StopReason::Complete } else { StopReason::Stall };
            break;
        }
    }
    if st.n_unverified() == 0 {
        stop_reason = StopReason::Complete;
    }
    // Terminal row: the state at the beginning of the iteration that never
    // ran. On a stall the last recorded row already is that state.
    if trace.last().map(|r| r.newly_verified > 0).unwrap_or(true) {
        trace.push(TraceRow {
            iteration: trace.len(),
            beta: st.unverified_support as f64 / n as f64,
            unverified_zero_frac: st.unverified_zero as f64 / n as f64,
            newly_verified: 0,
        });
    }

    let success = st.n_unverified() == 0;
    let false_verifications = match truth {
        Some(t) => count_false(&st, t, 1e-6),
        None => 0,
    };
    let verified = std::mem::take(&mut st.verified);
    let recovered = SparseSignal::from_values(st.value, truth.map(|t| t.alpha0).unwrap_or(0.0));
    Ok(DecodeResult {
        success,
        stop_reason,
        iterations_run,
        recovered,
        verified,
        trace,
        false_verifications,
    })
}

fn count_false(st: &DecoderState, truth: &SparseSignal, tol: f64) -> usize {
    (0..truth.n())
        .filter(|&v| st.verified[v] && (st.value[v] - truth.values[v]).abs() > tol)
        .count()
}

/// Report produced by [`audit`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuditReport {
    /// Verified variables whose value is off by more than the tolerance.
    pub false_verifications: usize,
    /// Variables left unverified.
    pub missed: usize,
    /// Largest absolute error over verified variables.
    pub max_value_error: f64,
    /// True iff the nonzero pattern of the recovered signal equals the true
    /// support and nothing was left unverified.
    pub support_recovered: bool,
}

/// Compares a decode result against the ground truth. Only verified
/// variables can be false verifications; unverified ones count as missed.
pub fn audit(result: &DecodeResult, truth: &SparseSignal, tol: f64) -> Result<AuditReport, Error> {
    if truth.n() != result.recovered.n() {
        return Err(Error::DimensionMismatch { expected: result.recovered.n(), got: truth.n() });
    }
    let mut missed = 0usize;
    let mut false_verifications = 0usize;
    let mut max_err = 0.0f64;
    for v in 0..truth.n() {
        if !result.verified[v] {
            missed += 1;
            continue;
        }
        let err = (result.recovered.values[v] - truth.values[v]).abs();
        if err > tol {
            false_verifications += 1;
        }
        if err > max_err {
            max_err = err;
        }
    }
    let support_recovered = result.success
        && truth
            .values
            .iter()
            .zip(&result.recovered.values)
            .all(|(&t, &r)| (t != 0.0) == (r != 0.0));
    Ok(AuditReport {
        false_verifications,
        missed,
        max_value_error: max_err,
        support_recovered,
    })
}

/// Noisy-measurement preprocessor: snaps small measurements to zero
/// (`|c| < eps1`), then merges clusters of nearly equal measurements
/// (single-link with gap `< eps2` on the sorted values) to their mean.
pub fn preprocess_noisy(meas: &MeasurementVector, eps1: f64, eps2: f64) -> MeasurementVector {
    let mut values = meas.values.clone();
    if eps1 > 0.0 {
        for v in values.iter_mut() {
            if v.abs() < eps1 {
                *v = 0.0;
            }
        }
    }
    if eps2 > 0.0 {
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let mut start = 0;
        while start < order.len() {
            let mut end = start + 1;
            while end < order.len()
                && values[order[end]] - values[order[end - 1]] < eps2
            {
                end += 1;
            }
            if end - start >= 2 {
                let mean: f64 =
                    order[start..end].iter().map(|&i| values[i]).sum::<f64>() / (end - start) as f64;
                for &i in &order[start..end] {
                    values[i] = mean;
                }
            }
            start = end;
        }
    }
    MeasurementVector { values, noise_sigma: meas.noise_sigma }
}
