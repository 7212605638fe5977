//! Density evolution for the Genie, LM and SBB recovery algorithms.
//!
//! Each recursion tracks, over the tree-like ensemble, the probability
//! `alpha` that a variable node is nonzero and unverified at the start of an
//! iteration, together with the group-membership tables for check nodes and
//! variable nodes that drive the update. Iterating the recursion and watching
//! `alpha` decides success or failure for a given initial density factor;
//! bisection on the density factor finds the success threshold.
//!
//! All arithmetic is in `f64` with every stored probability clamped to
//! `[0, 1]`; a conditional probability whose conditioning event has mass
//! below `1e-300` is defined as zero (the population is extinct). Probability
//! families are checked to sum to one within `1e-9` after every step, and
//! `alpha` is checked to be non-increasing; violations surface as errors.

pub mod genie;
pub mod lm;
pub mod sbb;

use crate::error::Error;

pub use genie::GenieDe;
pub use lm::LmDe;
pub use sbb::SbbDe;

/// Mass below which a conditioning event is treated as extinct.
pub(crate) const EXTINCT: f64 = 1e-300;
/// Allowed deviation of a probability family's sum from one.
pub(crate) const SUM_TOL: f64 = 1e-9;
/// Allowed numeric excursion outside `[0, 1]` before clamping is an error.
pub(crate) const RANGE_TOL: f64 = 1e-12;

/// The three algorithms with a density-evolution recursion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeAlgorithm {
    Genie,
    Lm,
    Sbb,
}

impl std::fmt::Display for DeAlgorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DeAlgorithm::Genie => write!(f, "genie"),
            DeAlgorithm::Lm => write!(f, "lm"),
            DeAlgorithm::Sbb => write!(f, "sbb"),
        }
    }
}

/// Parameters of a density-evolution run.
#[derive(Debug, Clone, Copy)]
pub struct DeParams {
    pub algorithm: DeAlgorithm,
    pub dv: usize,
    pub dc: usize,
    pub alpha0: f64,
    /// Success criterion: stop successfully once `alpha <= eps_success`.
    pub eps_success: f64,
    /// Stall criterion: report failure once the per-iteration decrease of
    /// `alpha` falls below `eps_stall` while `alpha > eps_success`.
    pub eps_stall: f64,
    pub max_iterations: usize,
}

impl DeParams {
    pub fn new(algorithm: DeAlgorithm, dv: usize, dc: usize, alpha0: f64) -> Self {
        DeParams {
            algorithm,
            dv,
            dc,
            alpha0,
            eps_success: 1e-7,
            eps_stall: 1e-8,
            max_iterations: 1_000_000,
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.dv == 0 || self.dc < 2 {
            return Err(Error::InvalidParameter("need d_v >= 1 and d_c >= 2".into()));
        }
        if !(0.0..=1.0).contains(&self.alpha0) {
            return Err(Error::InvalidParameter("alpha0 must lie in [0, 1]".into()));
        }
        if !(self.eps_stall > 0.0 && self.eps_stall < self.eps_success && self.eps_success < 1.0) {
            return Err(Error::InvalidParameter("need 0 < eps_stall < eps_success < 1".into()));
        }
        Ok(())
    }
}

/// Terminal status of a density-evolution run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeStatus {
    Success,
    Failure,
    NonConverged,
}

/// Result of iterating a recursion until a stopping criterion fires.
#[derive(Debug, Clone)]
pub struct DeOutcome {
    pub status: DeStatus,
    /// Iteration number at which the run stopped (1-based; `alpha_trace[l-1]`
    /// is the alpha of iteration `l`).
    pub iterations: usize,
    /// `alpha` per iteration, starting from iteration 1 where
    /// `alpha^(1) = alpha^(0)`.
    pub alpha_trace: Vec<f64>,
    /// Probability of a zero-valued unverified variable per iteration;
    /// all zeros for the Genie, which tracks the support set only.
    pub p_delta_trace: Vec<f64>,
}

impl DeOutcome {
    pub fn final_alpha(&self) -> f64 {
        *self.alpha_trace.last().expect("trace is never empty")
    }
}

/// One step of a density-evolution recursion, exposed by the Genie, LM and
/// SBB state structs.
pub trait DeRecursion {
    /// `alpha` of the newest completed iteration.
    fn alpha(&self) -> f64;
    /// `p_Delta` of the newest completed iteration (zero for Genie).
    fn p_delta(&self) -> f64;
    /// Alphas of the iterations already covered by initialization.
    fn initial_alphas(&self) -> Vec<f64>;
    fn initial_p_deltas(&self) -> Vec<f64>;
    /// Advances one iteration.
    fn step(&mut self) -> Result<(), Error>;
}

/// Iterates the recursion for `params.algorithm` until one of the stopping
/// criteria fires: success when `alpha <= eps_success`, failure when the
/// decrease stalls below `eps_stall`, non-convergence at the iteration cap.
pub fn run_de(params: &DeParams) -> Result<DeOutcome, Error> {
    params.validate()?;
    let mut rec: Box<dyn DeRecursion> = match params.algorithm {
        DeAlgorithm::Genie => Box::new(GenieDe::new(params.dv, params.dc, params.alpha0)),
        DeAlgorithm::Lm => Box::new(LmDe::new(params.dv, params.dc, params.alpha0)),
        DeAlgorithm::Sbb => Box::new(SbbDe::new(params.dv, params.dc, params.alpha0)?),
    };
    let mut alpha_trace = rec.initial_alphas();
    let mut p_delta_trace = rec.initial_p_deltas();

    // The stall test compares consecutive iteration outputs; iteration 1 is
    // definitionally alpha^(0), so the comparison starts at iteration 2.
    let fire = |trace: &[f64], params: &DeParams| -> Option<DeStatus> {
        let ell = trace.len();
        let a = trace[ell - 1];
        if a <= params.eps_success {
            return Some(DeStatus::Success);
        }
        if ell >= 2 && (a - trace[ell - 2]).abs() < params.eps_stall {
            return Some(DeStatus::Failure);
        }
        None
    };

    for l in 1..=alpha_trace.len() {
        if let Some(status) = fire(&alpha_trace[..l], params) {
            return Ok(DeOutcome {
                status,
                iterations: l,
                alpha_trace: alpha_trace[..l].to_vec(),
                p_delta_trace: p_delta_trace[..l].to_vec(),
            });
        }
    }
    while alpha_trace.len() < params.max_iterations {
        rec.step()?;
        alpha_trace.push(rec.alpha());
        p_delta_trace.push(rec.p_delta());
        if let Some(status) = fire(&alpha_trace, params) {
            return Ok(DeOutcome {
                status,
                iterations: alpha_trace.len(),
                alpha_trace,
                p_delta_trace,
            });
        }
    }
    Ok(DeOutcome {
        status: DeStatus::NonConverged,
        iterations: alpha_trace.len(),
        alpha_trace,
        p_delta_trace,
    })
}

/// Result of the bisection search for the success threshold.
#[derive(Debug, Clone, Copy)]
pub struct ThresholdResult {
    /// Midpoint of the final bracket.
    pub threshold: f64,
    /// Largest probed density factor for which the run succeeded.
    pub bracket_lo: f64,
    /// Smallest probed density factor for which the run failed.
    pub bracket_hi: f64,
    /// Number of `run_de` evaluations performed.
    pub evaluations: usize,
}

/// Bisects `[lo, hi]` for the success threshold of `algorithm` on
/// `(d_v, d_c)` graphs, stopping when the bracket is narrower than
/// `resolution`. Verifies first that the recursion succeeds at `lo` and
/// fails at `hi`.
pub fn find_threshold(
    algorithm: DeAlgorithm,
    dv: usize,
    dc: usize,
    mut lo: f64,
    mut hi: f64,
    resolution: f64,
) -> Result<ThresholdResult, Error> {
    if !(lo < hi) || !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) {
        return Err(Error::InvalidParameter("need 0 <= lo < hi <= 1".into()));
    }
    if resolution <= 0.0 {
        return Err(Error::InvalidParameter("resolution must be positive".into()));
    }
    let succeeds = |alpha0: f64, evals: &mut usize| -> Result<bool, Error> {
        *evals += 1;
        let out = run_de(&DeParams::new(algorithm, dv, dc, alpha0))?;
        match out.status {
            DeStatus::Success => Ok(true),
            DeStatus::Failure => Ok(false),
            DeStatus::NonConverged => Err(Error::InvariantViolation(format!(
                "density evolution did not converge at alpha0 = {alpha0}"
            ))),
        }
    };
    let mut evaluations = 0usize;
    if !succeeds(lo, &mut evaluations)? {
        return Err(Error::NoTransition(format!("run fails already at lo = {lo}")));
    }
    if succeeds(hi, &mut evaluations)? {
        return Err(Error::NoTransition(format!("run still succeeds at hi = {hi}")));
    }
    while hi - lo > resolution {
        let mid = 0.5 * (lo + hi);
        if succeeds(mid, &mut evaluations)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(ThresholdResult { threshold: 0.5 * (lo + hi), bracket_lo: lo, bracket_hi: hi, evaluations })
}

// ---------------------------------------------------------------------------
// Shared numerics
// ---------------------------------------------------------------------------

/// Pascal's triangle up to row `nmax`, in f64.
pub(crate) fn binom_table(nmax: usize) -> Vec<Vec<f64>> {
    let mut t = vec![vec![0.0f64; nmax + 1]; nmax + 1];
    for (n, row) in t.iter_mut().enumerate() {
        row[0] = 1.0;
        for k in 1..=n {
            row[k] = row[k - 1] * (n - k + 1) as f64 / k as f64;
        }
    }
    t
}

pub(crate) fn clamp01(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

/// `num / den`, defined as zero when the conditioning mass `den` is extinct.
pub(crate) fn guarded_div(num: f64, den: f64) -> f64 {
    if den.abs() < EXTINCT {
        0.0
    } else {
        num / den
    }
}

/// Binomial pmf `C(n,k) p^k (1-p)^(n-k)` for `k = 0..=n`.
pub(crate) fn binom_pmf(binom: &[Vec<f64>], n: usize, p: f64) -> Vec<f64> {
    let q = 1.0 - p;
    (0..=n).map(|k| binom[n][k] * p.powi(k as i32) * q.powi((n - k) as i32)).collect()
}

/// Checks a probability family: entries within `[-RANGE_TOL, 1+RANGE_TOL]`
/// before clamping, sum within `SUM_TOL` of one.
pub(crate) fn validate_family(name: &str, values: &mut [f64]) -> Result<(), Error> {
    let mut sum = 0.0;
    for v in values.iter_mut() {
        if !v.is_finite() || *v < -RANGE_TOL || *v > 1.0 + RANGE_TOL {
            return Err(Error::InvariantViolation(format!("{name}: entry {v} out of range")));
        }
        *v = clamp01(*v);
        sum += *v;
    }
    if (sum - 1.0).abs() > SUM_TOL {
        return Err(Error::InvariantViolation(format!("{name}: sum {sum} differs from 1")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binom_table_matches_known_rows() {
        let t = binom_table(6);
        assert_eq!(t[6][1], 6.0);
        assert_eq!(t[6][3], 20.0);
        assert_eq!(t[4][2], 6.0);
    }

    #[test]
    fn guarded_division_extinct_convention() {
        assert_eq!(guarded_div(0.5, 0.0), 0.0);
        assert_eq!(guarded_div(0.5, 1e-301), 0.0);
        assert_eq!(guarded_div(1.0, 2.0), 0.5);
    }

    #[test]
    fn run_de_alpha_zero_succeeds_immediately() {
        for alg in [DeAlgorithm::Genie, DeAlgorithm::Lm, DeAlgorithm::Sbb] {
            let out = run_de(&DeParams::new(alg, 3, 6, 0.0)).unwrap();
            assert_eq!(out.status, DeStatus::Success);
            assert!(out.iterations <= 1);
        }
    }

    #[test]
    fn run_de_alpha_one_fails() {
        for alg in [DeAlgorithm::Genie, DeAlgorithm::Lm, DeAlgorithm::Sbb] {
            let out = run_de(&DeParams::new(alg, 3, 6, 1.0)).unwrap();
            assert_eq!(out.status, DeStatus::Failure, "{alg}");
        }
    }

    #[test]
    fn find_threshold_rejects_bad_bracket() {
        // Success at both ends: no transition inside [0, 0.01] for Genie (3,6).
        let err = find_threshold(DeAlgorithm::Genie, 3, 6, 0.0, 0.01, 1e-4).unwrap_err();
        assert!(matches!(err, Error::NoTransition(_)));
    }

    #[test]
    fn success_flips_at_published_boundaries() {
        let status = |alg, dv, dc, a0| run_de(&DeParams::new(alg, dv, dc, a0)).unwrap().status;
        assert_eq!(status(DeAlgorithm::Genie, 3, 6, 0.42), DeStatus::Success);
        assert_eq!(status(DeAlgorithm::Genie, 3, 6, 0.44), DeStatus::Failure);
        assert_eq!(status(DeAlgorithm::Lm, 3, 6, 0.17), DeStatus::Success);
        assert_eq!(status(DeAlgorithm::Lm, 3, 6, 0.1703), DeStatus::Failure);
        assert_eq!(status(DeAlgorithm::Sbb, 3, 6, 0.257), DeStatus::Success);
        assert_eq!(status(DeAlgorithm::Sbb, 3, 6, 0.258), DeStatus::Failure);
    }

    #[test]
    fn threshold_spot_checks_against_published_values() {
        let thr = |alg, dv, dc| find_threshold(alg, dv, dc, 0.0, 1.0, 1e-5).unwrap().threshold;
        assert!((thr(DeAlgorithm::Genie, 5, 6) - 0.5509).abs() <= 2e-4);
        assert!((thr(DeAlgorithm::Sbb, 4, 8) - 0.2394).abs() <= 2e-4);
        assert!((thr(DeAlgorithm::Lm, 7, 8) - 0.2385).abs() <= 2e-4);
    }
}
