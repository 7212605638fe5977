//! Density evolution for the Genie decoder.
//!
//! The Genie knows the support set, so the only state is the distribution of
//! check-node residual degrees restricted to unverified support neighbors
//! (`p_n[i]`, `i = 0..=d_c`) and the unverified-support probability `alpha`.
//! One iteration: a fraction of support variables sees a degree-one check and
//! is verified; the check degrees then shift down binomially, with degree-one
//! checks always draining to degree zero because their unique support
//! neighbor is verified with certainty.

use crate::error::Error;

use super::{binom_pmf, binom_table, clamp01, guarded_div, validate_family, DeRecursion, SUM_TOL};

/// Genie recursion state at the start of an iteration.
#[derive(Debug, Clone)]
pub struct GenieDe {
    dv: usize,
    dc: usize,
    /// Probability that a variable is in the unverified support set.
    alpha: f64,
    /// `p_n[i]`: probability that a check node has `i` unverified support
    /// neighbors after the first half-round of the current iteration.
    p_n: Vec<f64>,
    /// `p_k[j]` of the current iteration: probability that an unverified
    /// support variable has `j` neighboring degree-one checks.
    p_k: Vec<f64>,
    binom: Vec<Vec<f64>>,
}

impl GenieDe {
    /// Initial state for iteration 1: `alpha^(1) = alpha^(0)` and the check
    /// degrees are binomial with parameter `alpha0`.
    pub fn new(dv: usize, dc: usize, alpha0: f64) -> Self {
        let binom = binom_table(dv.max(dc));
        let p_n = binom_pmf(&binom, dc, alpha0);
        let mut s = GenieDe { dv, dc, alpha: alpha0, p_n, p_k: Vec::new(), binom };
        s.p_k = s.current_p_k();
        s
    }

    /// Probability that an edge from an unverified support variable reaches a
    /// degree-one check.
    fn edge_prob(&self) -> f64 {
        clamp01(guarded_div(self.p_n[1], self.alpha * self.dc as f64))
    }

    /// The variable-side grouping induced by the current check state.
    fn current_p_k(&self) -> Vec<f64> {
        binom_pmf(&self.binom, self.dv, self.edge_prob())
    }

    pub fn p_n(&self) -> &[f64] {
        &self.p_n
    }

    pub fn p_k(&self) -> &[f64] {
        &self.p_k
    }
}

impl DeRecursion for GenieDe {
    fn alpha(&self) -> f64 {
        self.alpha
    }

    fn p_delta(&self) -> f64 {
        0.0
    }

    fn initial_alphas(&self) -> Vec<f64> {
        vec![self.alpha]
    }

    fn initial_p_deltas(&self) -> Vec<f64> {
        vec![0.0]
    }

    fn step(&mut self) -> Result<(), Error> {
        let p = self.edge_prob();
        let p_k = binom_pmf(&self.binom, self.dv, p);
        let alpha_next = self.alpha * p_k[0];

        // Degree downshift: each unverified support edge into a check of
        // degree >= 2 is removed independently with probability `a`; degree-1
        // checks drain to zero with certainty.
        let a = 1.0 - (1.0 - p).powi(self.dv as i32 - 1);
        let mut next = vec![0.0f64; self.dc + 1];
        next[0] += self.p_n[0] + self.p_n[1];
        for j in 2..=self.dc {
            let mass = self.p_n[j];
            if mass == 0.0 {
                continue;
            }
            for i in 0..=j {
                next[i] += mass * self.binom[j][i] * (1.0 - a).powi(i as i32) * a.powi((j - i) as i32);
            }
        }
        validate_family("genie p_n", &mut next)?;
        let mut p_k_checked = p_k;
        validate_family("genie p_k", &mut p_k_checked)?;
        if alpha_next > self.alpha + SUM_TOL {
            return Err(Error::InvariantViolation(format!(
                "genie alpha increased: {} -> {alpha_next}",
                self.alpha
            )));
        }

        self.p_n = next;
        self.alpha = clamp01(alpha_next);
        self.p_k = self.current_p_k();
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn init_degenerate_density_factors() {
        let s = GenieDe::new(3, 6, 0.0);
        assert_eq!(s.p_n()[0], 1.0);
        assert!(s.p_n()[1..].iter().all(|&x| x == 0.0));

        let s = GenieDe::new(3, 6, 1.0);
        assert_eq!(s.p_n()[6], 1.0);
        assert!(s.p_n()[..6].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn init_binomial_row_hand_value() {
        // d_c = 6, alpha0 = 0.1: p_n[1] = 6 * 0.1 * 0.9^5 = 0.354294.
        let s = GenieDe::new(3, 6, 0.1);
        assert!(close(s.p_n()[1], 0.354294, 1e-12));
    }

    #[test]
    fn one_step_hand_trace() {
        // d_v = 3, d_c = 6, alpha^(1) = 0.1:
        // p = 0.354294 / 0.6 = 0.59049, p_k[0] = (1 - 0.59049)^3,
        // alpha^(2) = 0.1 * p_k[0].
        let mut s = GenieDe::new(3, 6, 0.1);
        assert!(close(s.edge_prob(), 0.59049, 1e-12));
        let pk0 = (1.0 - 0.59049f64).powi(3);
        assert!(close(s.p_k()[0], pk0, 1e-12));
        assert!(close(pk0, 0.0686742, 5e-7));
        s.step().unwrap();
        assert!(close(s.alpha(), 0.1 * pk0, 1e-15));
    }

    #[test]
    fn zero_alpha_is_a_fixed_point() {
        let mut s = GenieDe::new(3, 6, 0.0);
        for _ in 0..5 {
            s.step().unwrap();
            assert_eq!(s.alpha(), 0.0);
        }
    }

    #[test]
    fn alpha_is_monotone_and_families_normalized() {
        let mut s = GenieDe::new(5, 6, 0.4);
        let mut prev = s.alpha();
        for _ in 0..50 {
            s.step().unwrap();
            assert!(s.alpha() <= prev + 1e-12);
            prev = s.alpha();
            let sum: f64 = s.p_n().iter().sum();
            assert!((sum - 1.0).abs() < 1e-9);
        }
    }
}
