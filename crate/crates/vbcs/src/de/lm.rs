//! Density evolution for the LM decoder.
//!
//! State: `alpha` (unverified support probability), `p_delta` (unverified
//! zero-variable probability), and the table `n_tbl[i][j]` giving the
//! probability that a check node has `i` unverified support neighbors and
//! `j` unverified zero neighbors at the end of the previous iteration's
//! second round. One iteration performs, in order:
//!
//! 1. second-index downshift (zero variables verified last round report in),
//! 2. variable regrouping by degree-one nonzero checks and D1CN verification,
//! 3. first-index downshift (support variables verified this round report in),
//! 4. zero-check-driven verification of zero variables (ZCN).
//!
//! Checks that are zero-valued at the end of a round verify all their
//! remaining zero neighbors in that round, so row 0 of the table drains to
//! `(0,0)` at the start of the next iteration.

use crate::error::Error;

use super::{binom_pmf, binom_table, clamp01, guarded_div, validate_family, DeRecursion, SUM_TOL};

/// LM recursion state at the start of an iteration.
#[derive(Debug, Clone)]
pub struct LmDe {
    dv: usize,
    dc: usize,
    alpha: f64,
    p_delta: f64,
    /// `n_tbl[i][j]`, `i + j <= d_c`: check-group probabilities at the end of
    /// the previous iteration (stage R2, half-round 1).
    n_tbl: Vec<Vec<f64>>,
    /// `D` of the previous iteration: probability that an edge from an
    /// unverified zero variable reaches a newly zero-valued check.
    d_prev: f64,
    /// Variable grouping of the last completed iteration.
    p_k: Vec<f64>,
    p_delta_groups: Vec<f64>,
    binom: Vec<Vec<f64>>,
}

impl LmDe {
    /// Iteration-0 terminal state: `alpha^(1) = alpha^(0)`, zero variables
    /// survive the initial ZCN pass with probability
    /// `(1 - (1-alpha)^(d_c-1))^(d_v)`, and every check still has full degree.
    pub fn new(dv: usize, dc: usize, alpha0: f64) -> Self {
        let binom = binom_table(dv.max(dc));
        let q = 1.0 - alpha0;
        let d0 = q.powi(dc as i32 - 1);
        let p_delta = q * (1.0 - d0).powi(dv as i32);
        let mut n_tbl = vec![vec![0.0f64; dc + 1]; dc + 1];
        let row = binom_pmf(&binom, dc, alpha0);
        for (i, &mass) in row.iter().enumerate() {
            n_tbl[i][dc - i] = mass;
        }
        LmDe {
            dv,
            dc,
            alpha: alpha0,
            p_delta,
            n_tbl,
            d_prev: d0,
            p_k: Vec::new(),
            p_delta_groups: Vec::new(),
            binom,
        }
    }

    pub fn p_delta(&self) -> f64 {
        self.p_delta
    }

    pub fn d_prev(&self) -> f64 {
        self.d_prev
    }

    pub fn n_tbl(&self) -> &[Vec<f64>] {
        &self.n_tbl
    }

    pub fn p_k(&self) -> &[f64] {
        &self.p_k
    }

    pub fn p_delta_groups(&self) -> &[f64] {
        &self.p_delta_groups
    }

    fn validate_table(name: &str, tbl: &mut [Vec<f64>]) -> Result<(), Error> {
        let mut flat: Vec<f64> = tbl.iter().flatten().copied().collect();
        validate_family(name, &mut flat)?;
        let mut it = flat.into_iter();
        for row in tbl.iter_mut() {
            for v in row.iter_mut() {
                *v = it.next().unwrap();
            }
        }
        Ok(())
    }
}

impl DeRecursion for LmDe {
    fn alpha(&self) -> f64 {
        self.alpha
    }

    fn p_delta(&self) -> f64 {
        self.p_delta
    }

    fn initial_alphas(&self) -> Vec<f64> {
        vec![self.alpha]
    }

    fn initial_p_deltas(&self) -> Vec<f64> {
        vec![self.p_delta]
    }

    fn step(&mut self) -> Result<(), Error> {
        let (dv, dc) = (self.dv, self.dc);

        // Round 1, half-round 1: zero variables verified in the previous
        // round report in. A zero-edge into a check with i >= 1 survives with
        // probability A; zero-valued checks (row 0) verified all their zero
        // neighbors already, so that row drains.
        let a = clamp01((1.0 - self.d_prev).powi(self.dv as i32 - 1));
        let mut r1 = vec![vec![0.0f64; dc + 1]; dc + 1];
        r1[0][0] = self.n_tbl[0].iter().sum();
        for i in 1..=dc {
            for k in 0..=(dc - i) {
                let mass = self.n_tbl[i][k];
                if mass == 0.0 {
                    continue;
                }
                for j in 0..=k {
                    r1[i][j] +=
                        mass * self.binom[k][j] * a.powi(j as i32) * (1.0 - a).powi((k - j) as i32);
                }
            }
        }
        Self::validate_table("lm n_tbl (R1)", &mut r1)?;

        // Round 1, half-round 2: D1CN. B is the probability that an edge from
        // an unverified support variable reaches a degree-one nonzero check.
        let b = clamp01(guarded_div(r1[1][0], self.alpha * dc as f64));
        let mut p_k = binom_pmf(&self.binom, dv, b);
        validate_family("lm p_k", &mut p_k)?;
        let alpha_next = self.alpha * p_k[0];
        if alpha_next > self.alpha + SUM_TOL {
            return Err(Error::InvariantViolation(format!(
                "lm alpha increased: {} -> {alpha_next}",
                self.alpha
            )));
        }

        // Round 2, half-round 1: support variables verified in round 1 report
        // in. A support edge into a check outside N_{1,0} survives with
        // probability C; checks in N_{1,0} lose their single support edge
        // with certainty.
        let c = clamp01(guarded_div(p_k[0], 1.0 - b));
        let mut r2 = vec![vec![0.0f64; dc + 1]; dc + 1];
        for k in 0..=dc {
            for i in 0..=(dc - k) {
                let mass = r1[i][k];
                if mass == 0.0 {
                    continue;
                }
                if i == 0 {
                    r2[0][k] += mass;
                } else if i == 1 && k == 0 {
                    r2[0][0] += mass;
                } else {
                    for j in 0..=i {
                        r2[j][k] += mass
                            * self.binom[i][j]
                            * c.powi(j as i32)
                            * (1.0 - c).powi((i - j) as i32);
                    }
                }
            }
        }
        Self::validate_table("lm n_tbl (R2)", &mut r2)?;

        // Round 2, half-round 2: ZCN on newly zero-valued checks.
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..=dc {
            for (j, &mass) in r2[i].iter().enumerate().skip(1) {
                den += j as f64 * mass;
                if i == 0 {
                    num += j as f64 * mass;
                }
            }
        }
        let d = clamp01(guarded_div(num, den));
        let mut p_delta_groups = binom_pmf(&self.binom, dv, d);
        validate_family("lm p_delta_groups", &mut p_delta_groups)?;
        let p_delta_next = self.p_delta * p_delta_groups[0];

        self.alpha = clamp01(alpha_next);
        self.p_delta = clamp01(p_delta_next);
        self.n_tbl = r2;
        self.d_prev = d;
        self.p_k = p_k;
        self.p_delta_groups = p_delta_groups;
        Ok(())
    }
}
