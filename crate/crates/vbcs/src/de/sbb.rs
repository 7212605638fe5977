//! Density evolution for the SBB decoder.
//!
//! SBB verifies support variables both through degree-one checks (D1CN) and
//! through pairs of equal-valued checks (ECN), so the recursion must remember
//! how long a check has been the sole support neighbor of a variable. Checks
//! with exactly one unverified support neighbor are therefore split into two
//! families: "plus" checks, which dropped to one support neighbor in the
//! last round and raise the equal-value count of their neighbor, and "C"
//! checks, which were already counted by their neighbor in an earlier
//! iteration. Variables keep the count of distinct plus checks seen so far;
//! a count of two or more verifies by ECN, a count of one verifies only if
//! the counted check also has no unverified zero neighbors (degree one, so
//! D1CN applies — the fractions `f_plus`/`f_c`).
//!
//! The table bookkeeping matches the LM recursion otherwise: second-index
//! downshift in round 1, first-index downshift in round 2, zero-check driven
//! removal of zero variables at the end of each round. In round 2 the plus
//! and C families are split further into checks whose surviving neighbor
//! remains singly-connected (they become the next round's C family) and
//! checks whose neighbor was verified (they drain to zero).

use crate::error::Error;

use super::{binom_pmf, binom_table, clamp01, guarded_div, validate_family, DeRecursion, SUM_TOL};

/// Scalar coefficients of the last completed iteration, for inspection.
#[derive(Debug, Clone, Copy, Default)]
pub struct SbbScalars {
    /// Survival probability of a zero-edge in round 1.
    pub a: f64,
    /// Probability that a support edge reaches a plus check.
    pub b: f64,
    /// Survival probability of a support edge in round 2.
    pub c: f64,
    /// Zero-check hit probability in round 2.
    pub d: f64,
    /// Fraction of count-one variables with a degree-one plus check.
    pub f_plus: f64,
    /// Fraction of count-one variables with a degree-one C check.
    pub f_c: f64,
    /// Unverified fraction of the support surviving this iteration
    /// (`alpha^(l+1) / alpha^(l)`), also the regrouping normalizer.
    pub n_norm: f64,
}

/// SBB recursion state at the start of an iteration.
#[derive(Debug, Clone)]
pub struct SbbDe {
    dv: usize,
    dc: usize,
    alpha0: f64,
    alpha: f64,
    p_delta: f64,
    /// Check-group table rows 0 and 2..=d_c; row 1 lives in the split arrays.
    n_tbl: Vec<Vec<f64>>,
    /// Row 1, plus family, indexed by the zero-neighbor count `j`.
    n1_plus: Vec<f64>,
    /// Row 1, C family.
    n1_c: Vec<f64>,
    /// Normalized variable grouping of the previous iteration: probability of
    /// plus-count 0 and 1.
    pk0_prev: f64,
    pk1_prev: f64,
    d_prev: f64,
    scalars: SbbScalars,
    binom: Vec<Vec<f64>>,
}

impl SbbDe {
    /// Runs iterations 0 and 1 and returns the iteration-1 terminal state,
    /// ready for stepping at iteration 2.
    pub fn new(dv: usize, dc: usize, alpha0: f64) -> Result<Self, Error> {
        let binom = binom_table(dv.max(dc));
        let q = 1.0 - alpha0;
        let d0 = q.powi(dc as i32 - 1);
        let p_delta = q * (1.0 - d0).powi(dv as i32);
        let mut n_tbl = vec![vec![0.0f64; dc + 1]; dc + 1];
        let mut n1_plus = vec![0.0f64; dc];
        let n1_c = vec![0.0f64; dc];
        let row = binom_pmf(&binom, dc, alpha0);
        for (i, &mass) in row.iter().enumerate() {
            if i == 1 {
                // Every check with one support neighbor counts as fresh at
                // iteration 1: no variable has counted it yet.
                n1_plus[dc - 1] = mass;
            } else {
                n_tbl[i][dc - i] = mass;
            }
        }
        let mut state = SbbDe {
            dv,
            dc,
            alpha0,
            alpha: alpha0,
            p_delta,
            n_tbl,
            n1_plus,
            n1_c,
            pk0_prev: 1.0,
            pk1_prev: 0.0,
            d_prev: d0,
            scalars: SbbScalars::default(),
            binom,
        };
        state.step()?;
        Ok(state)
    }

    pub fn p_delta(&self) -> f64 {
        self.p_delta
    }

    pub fn scalars(&self) -> SbbScalars {
        self.scalars
    }

    pub fn n1_plus(&self) -> &[f64] {
        &self.n1_plus
    }

    pub fn n1_c(&self) -> &[f64] {
        &self.n1_c
    }

    pub fn n_tbl(&self) -> &[Vec<f64>] {
        &self.n_tbl
    }

    pub fn pk0(&self) -> f64 {
        self.pk0_prev
    }

    pub fn pk1(&self) -> f64 {
        self.pk1_prev
    }

    /// Downshifts the zero-neighbor index of one table row with edge survival
    /// probability `a`.
    fn shift_second_index(binom: &[Vec<f64>], src: &[f64], a: f64, out: &mut [f64]) {
        for (k, &mass) in src.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            for j in 0..=k {
                out[j] += mass * binom[k][j] * a.powi(j as i32) * (1.0 - a).powi((k - j) as i32);
            }
        }
    }

    fn total_mass(tbl: &[Vec<f64>], n1p: &[f64], n1c: &[f64]) -> f64 {
        tbl.iter().flatten().sum::<f64>() + n1p.iter().sum::<f64>() + n1c.iter().sum::<f64>()
    }
}

impl DeRecursion for SbbDe {
    fn alpha(&self) -> f64 {
        self.alpha
    }

    fn p_delta(&self) -> f64 {
        self.p_delta
    }

    fn initial_alphas(&self) -> Vec<f64> {
        // `new` already produced iteration 1; iteration 1's alpha is alpha0.
        vec![self.alpha0, self.alpha]
    }

    fn initial_p_deltas(&self) -> Vec<f64> {
        vec![self.p_delta, self.p_delta]
    }

    fn step(&mut self) -> Result<(), Error> {
        let (dv, dc) = (self.dv, self.dc);

        // Round 1, half-round 1: zero-edge downshift; row 0 drains.
        let a = clamp01((1.0 - self.d_prev).powi(self.dv as i32 - 1));
        let mut r1 = vec![vec![0.0f64; dc + 1]; dc + 1];
        r1[0][0] = self.n_tbl[0].iter().sum();
        for i in 2..=dc {
            Self::shift_second_index(&self.binom, &self.n_tbl[i][..=(dc - i)], a, &mut r1[i]);
        }
        let mut n1p_r1 = vec![0.0f64; dc];
        let mut n1c_r1 = vec![0.0f64; dc];
        Self::shift_second_index(&self.binom, &self.n1_plus, a, &mut n1p_r1);
        Self::shift_second_index(&self.binom, &self.n1_c, a, &mut n1c_r1);

        let mass = Self::total_mass(&r1, &n1p_r1, &n1c_r1);
        if (mass - 1.0).abs() > SUM_TOL {
            return Err(Error::InvariantViolation(format!("sbb check mass after R1: {mass}")));
        }

        // Round 1, half-round 2: regroup support variables by plus-check
        // count, then verify (ECN for count >= 2, D1CN fractions for count 1).
        let sum_plus: f64 = n1p_r1.iter().sum();
        let sum_c: f64 = n1c_r1.iter().sum();
        let edges_deep: f64 =
            (2..=dc).map(|i| i as f64 * r1[i].iter().sum::<f64>()).sum::<f64>();
        let b = clamp01(guarded_div(sum_plus, sum_plus + edges_deep));
        // Transition rows: from count 0 and count 1 to higher counts.
        let tr0 = binom_pmf(&self.binom, dv, b);
        let tr1: Vec<f64> = (0..=dv)
            .map(|j| {
                if j == 0 {
                    0.0
                } else {
                    self.binom[dv - 1][j - 1]
                        * b.powi(j as i32 - 1)
                        * (1.0 - b).powi((dv - j) as i32)
                }
            })
            .collect();
        let f_plus = clamp01(guarded_div(n1p_r1[0], sum_plus));
        let f_c = clamp01(guarded_div(n1c_r1[0], sum_c));

        let raw0 = self.pk0_prev * tr0[0];
        let raw1p = self.pk0_prev * tr0[1] * (1.0 - f_plus);
        let raw1c = self.pk1_prev * tr1[1] * (1.0 - f_c);
        let n_norm = raw0 + raw1p + raw1c;
        let (pk0, pk1p, pk1c) = if n_norm < super::EXTINCT {
            (1.0, 0.0, 0.0)
        } else {
            (raw0 / n_norm, raw1p / n_norm, raw1c / n_norm)
        };
        let mut pk_family = [pk0, pk1p, pk1c];
        validate_family("sbb p_k", &mut pk_family)?;
        let alpha_next = self.alpha * n_norm;
        if alpha_next > self.alpha + SUM_TOL {
            return Err(Error::InvariantViolation(format!(
                "sbb alpha increased: {} -> {alpha_next}",
                self.alpha
            )));
        }

        // Round 2, half-round 1: support-edge downshift. Edges into checks of
        // count >= 2 survive with probability c. The plus and C families are
        // split by whether their surviving neighbor stays at count one
        // (F: becomes the next C family) or was verified (O: drains).
        let p_r1 = clamp01(guarded_div(sum_plus + sum_c, self.alpha * dc as f64));
        let c_num = raw0 + (raw1p + raw1c) * (dv as f64 - 1.0) / dv as f64;
        let c = clamp01(guarded_div(c_num, 1.0 - p_r1));

        let mut denom_f = 0.0;
        for j in 1..=dv {
            denom_f += j as f64 * self.pk0_prev * tr0[j];
            if j >= 2 {
                denom_f += (j as f64 - 1.0) * self.pk1_prev * tr1[j];
            }
        }
        let frac_f_plus = clamp01(guarded_div(self.pk0_prev * tr0[1], denom_f));
        let tr1_sum: f64 = tr1.iter().sum();
        let frac_f_c = clamp01(guarded_div(tr1[1], tr1_sum));

        let mut r2 = vec![vec![0.0f64; dc + 1]; dc + 1];
        let mut n1p_next = vec![0.0f64; dc];
        let mut n1c_next = vec![0.0f64; dc];
        for k in 0..=dc {
            r2[0][k] += r1[0][k];
        }
        for i in 2..=dc {
            for k in 0..=(dc - i) {
                let mass = r1[i][k];
                if mass == 0.0 {
                    continue;
                }
                for j in 0..=i {
                    let p_move = self.binom[i][j]
                        * c.powi(j as i32)
                        * (1.0 - c).powi((i - j) as i32);
                    if j == 0 {
                        r2[0][k] += mass * p_move;
                    } else if j == 1 {
                        n1p_next[k] += mass * p_move;
                    } else {
                        r2[j][k] += mass * p_move;
                    }
                }
            }
        }
        for k in 0..dc {
            let keep = n1p_r1[k] * frac_f_plus + n1c_r1[k] * frac_f_c;
            let drain = (n1p_r1[k] - n1p_r1[k] * frac_f_plus) + (n1c_r1[k] - n1c_r1[k] * frac_f_c);
            if k == 0 {
                // A kept check with no zero neighbors has degree one; its
                // neighbor was verified by D1CN, so it drains too.
                r2[0][0] += keep + drain;
            } else {
                n1c_next[k] += keep;
                r2[0][k] += drain;
            }
        }
        let mass = Self::total_mass(&r2, &n1p_next, &n1c_next);
        if (mass - 1.0).abs() > SUM_TOL {
            return Err(Error::InvariantViolation(format!("sbb check mass after R2: {mass}")));
        }

        // Round 2, half-round 2: ZCN on newly zero-valued checks.
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..=dc {
            for (j, &m) in r2[i].iter().enumerate().skip(1) {
                den += j as f64 * m;
                if i == 0 {
                    num += j as f64 * m;
                }
            }
        }
        for j in 1..dc {
            den += j as f64 * (n1p_next[j] + n1c_next[j]);
        }
        let d = clamp01(guarded_div(num, den));
        let p_delta_next = self.p_delta * (1.0 - d).powi(dv as i32);

        self.alpha = clamp01(alpha_next);
        self.p_delta = clamp01(p_delta_next);
        self.n_tbl = r2;
        self.n1_plus = n1p_next;
        self.n1_c = n1c_next;
        self.pk0_prev = pk0;
        self.pk1_prev = pk1p + pk1c;
        self.d_prev = d;
        self.scalars = SbbScalars { a, b, c, d, f_plus, f_c, n_norm };
        Ok(())
    }
}
