//! Seeded Monte-Carlo experiment harnesses with deterministic CSV output.
//!
//! Every experiment is a pure function of its spec and base seed: per-trial
//! generators are derived by hashing `(base_seed, purpose, point, trial)`,
//! trials run in parallel, and aggregation is order-independent, so re-runs
//! produce byte-identical CSV regardless of the worker count.

use rayon::prelude::*;

use crate::de::{find_threshold, run_de, DeAlgorithm, DeOutcome, DeParams};
use crate::decoder::{audit, decode, Algorithm, DecodeResult, DecoderConfig, preprocess_noisy};
use crate::ensembles::{
    add_noise, measure, round_n_down, sample_biregular_graph, sample_signal,
    sample_signal_with_support_size, GraphParams, NonzeroDist, SensingGraph, WeightDist,
};
use crate::error::Error;
use crate::rng::derive_seed;

// Purpose tags for seed derivation.
const TAG_GRAPH: u64 = 0x67;
const TAG_SIGNAL: u64 = 0x73;
const TAG_DECODER: u64 = 0x64;
const TAG_NOISE: u64 = 0x6e;

/// Formats a probability-like value with 17 significant digits.
pub fn fmt_prob(x: f64) -> String {
    format!("{x:.16e}")
}

/// Formats a ratio-like value with 6 significant digits.
pub fn fmt_ratio(x: f64) -> String {
    format!("{x:.5e}")
}

/// Specification of a success-ratio sweep over a density-factor grid.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub algorithm: Algorithm,
    pub dv: usize,
    pub dc: usize,
    pub n: usize,
    /// Density factors, ascending.
    pub alpha_grid: Vec<f64>,
    pub trials_per_point: usize,
    pub base_seed: u64,
    /// When false (default) one sensing graph is shared by every trial;
    /// when true each trial draws its own.
    pub fresh_graph_per_trial: bool,
    pub nonzero_dist: NonzeroDist,
}

impl SweepSpec {
    pub fn new(algorithm: Algorithm, dv: usize, dc: usize, n: usize, alpha_grid: Vec<f64>) -> Self {
        SweepSpec {
            algorithm,
            dv,
            dc,
            n,
            alpha_grid,
            trials_per_point: 1000,
            base_seed: 0,
            fresh_graph_per_trial: false,
            nonzero_dist: NonzeroDist::StandardGaussian,
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.trials_per_point == 0 {
            return Err(Error::InvalidParameter("trials_per_point must be positive".into()));
        }
        if self.alpha_grid.is_empty() {
            return Err(Error::InvalidParameter("alpha grid is empty".into()));
        }
        if self.alpha_grid.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidParameter("alpha grid must be ascending".into()));
        }
        if self.alpha_grid.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(Error::InvalidParameter("alpha grid values must lie in [0, 1]".into()));
        }
        GraphParams::new(self.n, self.dv, self.dc, WeightDist::Unit).validate()
    }
}

/// One aggregated sweep point.
#[derive(Debug, Clone, Copy)]
pub struct SweepRow {
    pub alpha0: f64,
    pub successes: usize,
    pub trials: usize,
    pub success_ratio: f64,
    pub mean_iterations: f64,
    pub mean_final_beta: f64,
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("alpha0,successes,trials,success_ratio,mean_iterations,mean_final_beta\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            fmt_prob(r.alpha0),
            r.successes,
            r.trials,
            fmt_ratio(r.success_ratio),
            fmt_ratio(r.mean_iterations),
            fmt_prob(r.mean_final_beta),
        ));
    }
    out
}

fn run_one_trial(
    spec: &SweepSpec,
    shared_graph: Option<&SensingGraph>,
    point: usize,
    alpha0: f64,
    trial: usize,
) -> Result<DecodeResult, Error> {
    let fresh;
    let graph = match shared_graph {
        Some(g) => g,
        None => {
            let seed = derive_seed(spec.base_seed, &[TAG_GRAPH, point as u64, trial as u64]);
            fresh = sample_biregular_graph(
                GraphParams::new(spec.n, spec.dv, spec.dc, WeightDist::Unit),
                seed,
            )?;
            &fresh
        }
    };
    let signal = sample_signal(
        spec.n,
        alpha0,
        spec.nonzero_dist,
        derive_seed(spec.base_seed, &[TAG_SIGNAL, point as u64, trial as u64]),
    );
    let meas = measure(graph, &signal)?;
    let cfg = DecoderConfig::new(spec.algorithm)
        .with_seed(derive_seed(spec.base_seed, &[TAG_DECODER, point as u64, trial as u64]));
    decode(graph, &meas, &cfg, Some(&signal))
}

/// Runs `trials_per_point` seeded decodes per grid point and aggregates.
pub fn success_ratio_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>, Error> {
    spec.validate()?;
    let shared = if spec.fresh_graph_per_trial {
        None
    } else {
        Some(sample_biregular_graph(
            GraphParams::new(spec.n, spec.dv, spec.dc, WeightDist::Unit),
            derive_seed(spec.base_seed, &[TAG_GRAPH]),
        )?)
    };
    let mut rows = Vec::with_capacity(spec.alpha_grid.len());
    for (point, &alpha0) in spec.alpha_grid.iter().enumerate() {
        let results: Result<Vec<DecodeResult>, Error> = (0..spec.trials_per_point)
            .into_par_iter()
            .map(|trial| run_one_trial(spec, shared.as_ref(), point, alpha0, trial))
            .collect();
        let results = results?;
        let successes = results.iter().filter(|r| r.success).count();
        let trials = results.len();
        rows.push(SweepRow {
            alpha0,
            successes,
            trials,
            success_ratio: successes as f64 / trials as f64,
            mean_iterations: results.iter().map(|r| r.iterations_run as f64).sum::<f64>()
                / trials as f64,
            mean_final_beta: results.iter().map(|r| r.final_beta()).sum::<f64>() / trials as f64,
        });
    }
    Ok(rows)
}

/// Checks that success ratios are non-increasing in the density factor up to
/// Monte-Carlo slack `2 / sqrt(trials)`.
pub fn waterfall_is_monotone(rows: &[SweepRow]) -> bool {
    for i in 0..rows.len() {
        for j in (i + 1)..rows.len() {
            let slack = 2.0 / (rows[i].trials.min(rows[j].trials) as f64).sqrt();
            if rows[j].success_ratio > rows[i].success_ratio + slack {
                return false;
            }
        }
    }
    true
}

/// One row of the DE-versus-simulation trace comparison.
#[derive(Debug, Clone, Copy)]
pub struct BetaRow {
    pub ell: usize,
    pub de_alpha: f64,
    pub mc_beta_mean: f64,
    pub mc_beta_std: f64,
}

pub fn beta_csv(rows: &[BetaRow]) -> String {
    let mut out = String::from("ell,de_alpha,mc_beta_mean,mc_beta_std\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.ell,
            fmt_prob(r.de_alpha),
            fmt_prob(r.mc_beta_mean),
            fmt_prob(r.mc_beta_std),
        ));
    }
    out
}

fn de_algorithm_of(alg: Algorithm) -> Result<DeAlgorithm, Error> {
    match alg {
        Algorithm::Genie => Ok(DeAlgorithm::Genie),
        Algorithm::Lm => Ok(DeAlgorithm::Lm),
        Algorithm::Sbb => Ok(DeAlgorithm::Sbb),
        Algorithm::Xh => {
            Err(Error::InvalidParameter("no density evolution is defined for XH".into()))
        }
    }
}

/// Joins the density-evolution alpha trace with the Monte-Carlo mean and
/// standard deviation of beta, per iteration `ell = 0..=max_ell`. Beta at
/// iteration `ell` is the unverified-support fraction at the beginning of
/// iteration `ell`; traces shorter than `max_ell` extend with their final
/// value (the state no longer changes after the decoder stops).
pub fn beta_trace_compare(
    algorithm: Algorithm,
    dv: usize,
    dc: usize,
    alpha0: f64,
    n: usize,
    trials: usize,
    max_ell: usize,
    base_seed: u64,
) -> Result<(Vec<BetaRow>, DeOutcome), Error> {
    let de_alg = de_algorithm_of(algorithm)?;
    let de = run_de(&DeParams::new(de_alg, dv, dc, alpha0))?;
    let spec = SweepSpec {
        trials_per_point: trials,
        base_seed,
        ..SweepSpec::new(algorithm, dv, dc, n, vec![alpha0])
    };
    spec.validate()?;
    let graph = sample_biregular_graph(
        GraphParams::new(n, dv, dc, WeightDist::Unit),
        derive_seed(base_seed, &[TAG_GRAPH]),
    )?;
    let results: Result<Vec<DecodeResult>, Error> = (0..trials)
        .into_par_iter()
        .map(|trial| run_one_trial(&spec, Some(&graph), 0, alpha0, trial))
        .collect();
    let results = results?;

    let beta_at = |r: &DecodeResult, ell: usize| -> f64 {
        r.beta_at(ell).unwrap_or_else(|| r.final_beta())
    };
    let de_alpha_at = |ell: usize| -> f64 {
        if ell == 0 {
            alpha0
        } else {
            *de.alpha_trace.get(ell - 1).unwrap_or_else(|| de.alpha_trace.last().unwrap())
        }
    };
    let mut rows = Vec::with_capacity(max_ell + 1);
    for ell in 0..=max_ell {
        let betas: Vec<f64> = results.iter().map(|r| beta_at(r, ell)).collect();
        let mean = betas.iter().sum::<f64>() / betas.len() as f64;
        let var = if betas.len() > 1 {
            betas.iter().map(|b| (b - mean) * (b - mean)).sum::<f64>() / (betas.len() - 1) as f64
        } else {
            0.0
        };
        rows.push(BetaRow { ell, de_alpha: de_alpha_at(ell), mc_beta_mean: mean, mc_beta_std: var.sqrt() });
    }
    Ok((rows, de))
}

/// One row of the concentration experiment.
#[derive(Debug, Clone, Copy)]
pub struct ConcentrationRow {
    pub n: usize,
    pub mean_beta: f64,
    pub std_beta: f64,
}

pub fn concentration_csv(rows: &[ConcentrationRow]) -> String {
    let mut out = String::from("n,mean_beta,std_beta\n");
    for r in rows {
        out.push_str(&format!("{},{},{}\n", r.n, fmt_prob(r.mean_beta), fmt_prob(r.std_beta)));
    }
    out
}

/// Sample statistics of beta at a fixed iteration `ell` across signal
/// lengths; `n` values are rounded down to the nearest divisible length.
pub fn concentration_stats(
    algorithm: Algorithm,
    dv: usize,
    dc: usize,
    alpha0: f64,
    n_list: &[usize],
    trials: usize,
    ell: usize,
    base_seed: u64,
) -> Result<Vec<ConcentrationRow>, Error> {
    let mut rows = Vec::with_capacity(n_list.len());
    for (point, &n_raw) in n_list.iter().enumerate() {
        let n = round_n_down(n_raw, dv, dc);
        let spec = SweepSpec {
            trials_per_point: trials,
            base_seed: derive_seed(base_seed, &[point as u64]),
            ..SweepSpec::new(algorithm, dv, dc, n, vec![alpha0])
        };
        spec.validate()?;
        let graph = sample_biregular_graph(
            GraphParams::new(n, dv, dc, WeightDist::Unit),
            derive_seed(spec.base_seed, &[TAG_GRAPH]),
        )?;
        let betas: Result<Vec<f64>, Error> = (0..trials)
            .into_par_iter()
            .map(|trial| {
                run_one_trial(&spec, Some(&graph), 0, alpha0, trial)
                    .map(|r| r.beta_at(ell).unwrap_or_else(|| r.final_beta()))
            })
            .collect();
        let betas = betas?;
        let mean = betas.iter().sum::<f64>() / betas.len() as f64;
        let var = if betas.len() > 1 {
            betas.iter().map(|b| (b - mean) * (b - mean)).sum::<f64>() / (betas.len() - 1) as f64
        } else {
            0.0
        };
        rows.push(ConcentrationRow { n, mean_beta: mean, std_beta: var.sqrt() });
    }
    Ok(rows)
}

/// One cell of the threshold table.
#[derive(Debug, Clone, Copy)]
pub struct ThresholdCell {
    pub algorithm: DeAlgorithm,
    pub dv: usize,
    pub dc: usize,
    pub threshold: f64,
    pub evaluations: usize,
    /// Oversampling ratio `d_v / (alpha * d_c)` at the threshold.
    pub oversampling: f64,
}

pub fn threshold_csv(cells: &[ThresholdCell]) -> String {
    let mut out = String::from("algorithm,dv,dc,threshold,evaluations,oversampling_ratio\n");
    for c in cells {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            c.algorithm,
            c.dv,
            c.dc,
            fmt_prob(c.threshold),
            c.evaluations,
            fmt_ratio(c.oversampling),
        ));
    }
    out
}

/// Bisects the success threshold for every `(d_v, d_c)` and algorithm.
pub fn threshold_table(
    graphs: &[(usize, usize)],
    algorithms: &[DeAlgorithm],
    resolution: f64,
) -> Result<Vec<ThresholdCell>, Error> {
    let jobs: Vec<(DeAlgorithm, usize, usize)> = algorithms
        .iter()
        .flat_map(|&a| graphs.iter().map(move |&(dv, dc)| (a, dv, dc)))
        .collect();
    let cells: Result<Vec<ThresholdCell>, Error> = jobs
        .into_par_iter()
        .map(|(alg, dv, dc)| {
            let r = find_threshold(alg, dv, dc, 0.0, 1.0, resolution)?;
            Ok(ThresholdCell {
                algorithm: alg,
                dv,
                dc,
                threshold: r.threshold,
                evaluations: r.evaluations,
                oversampling: dv as f64 / (r.threshold * dc as f64),
            })
        })
        .collect();
    cells
}

/// One row of the noisy-recovery experiment.
#[derive(Debug, Clone, Copy)]
pub struct NoisyRow {
    pub k: usize,
    pub support_success_ratio: f64,
    /// Mean squared error over the trials that recovered the support; NaN
    /// when no trial succeeded.
    pub mse_over_successes: f64,
}

pub fn noisy_csv(rows: &[NoisyRow]) -> String {
    let mut out = String::from("k,support_success_ratio,mse_over_successes\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{}\n",
            r.k,
            fmt_ratio(r.support_success_ratio),
            fmt_ratio(r.mse_over_successes),
        ));
    }
    out
}

/// Noisy SBB recovery with thresholding: even-integer signals of exact
/// support size `k`, Gaussian measurement noise of deviation `sigma`,
/// preprocessing with `eps1`/`eps2`, support-set success accounting.
#[allow(clippy::too_many_arguments)]
pub fn noisy_recovery_experiment(
    n: usize,
    dv: usize,
    dc: usize,
    k_grid: &[usize],
    sigma: f64,
    eps1: f64,
    eps2: f64,
    trials: usize,
    base_seed: u64,
) -> Result<Vec<NoisyRow>, Error> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be positive".into()));
    }
    if sigma < 0.0 || eps1 < 0.0 || eps2 < 0.0 {
        return Err(Error::InvalidParameter("sigma, eps1 and eps2 must be nonnegative".into()));
    }
    let params = GraphParams::new(n, dv, dc, WeightDist::Unit);
    params.validate()?;
    let graph = sample_biregular_graph(params, derive_seed(base_seed, &[TAG_GRAPH]))?;
    let dist = NonzeroDist::UniformEvenInt { lo: -1000, hi: 1000 };
    let mut rows = Vec::with_capacity(k_grid.len());
    for (point, &k) in k_grid.iter().enumerate() {
        let outcomes: Result<Vec<(bool, f64)>, Error> = (0..trials)
            .into_par_iter()
            .map(|trial| {
                let signal = sample_signal_with_support_size(
                    n,
                    k,
                    dist,
                    derive_seed(base_seed, &[TAG_SIGNAL, point as u64, trial as u64]),
                )?;
                let clean = measure(&graph, &signal)?;
                let noisy = if sigma > 0.0 {
                    add_noise(
                        &clean,
                        sigma,
                        derive_seed(base_seed, &[TAG_NOISE, point as u64, trial as u64]),
                    )?
                } else {
                    clean
                };
                let prepped = preprocess_noisy(&noisy, eps1, eps2);
                let cfg = DecoderConfig::new(Algorithm::Sbb).with_seed(derive_seed(
                    base_seed,
                    &[TAG_DECODER, point as u64, trial as u64],
                ));
                let res = decode(&graph, &prepped, &cfg, Some(&signal))?;
                let rep = audit(&res, &signal, f64::INFINITY)?;
                let mse = signal
                    .values
                    .iter()
                    .zip(&res.recovered.values)
                    .map(|(&t, &r)| (t - r) * (t - r))
                    .sum::<f64>()
                    / n as f64;
                Ok((rep.support_recovered, mse))
            })
            .collect();
        let outcomes = outcomes?;
        let successes: Vec<f64> =
            outcomes.iter().filter(|(ok, _)| *ok).map(|&(_, mse)| mse).collect();
        rows.push(NoisyRow {
            k,
            support_success_ratio: successes.len() as f64 / trials as f64,
            mse_over_successes: if successes.is_empty() {
                f64::NAN
            } else {
                successes.iter().sum::<f64>() / successes.len() as f64
            },
        });
    }
    Ok(rows)
}

/// CSV of one density-evolution trace (`ell, alpha, p_delta`).
pub fn de_trace_csv(outcome: &DeOutcome) -> String {
    let mut out = String::from("ell,alpha,p_delta\n");
    for (i, (&a, &p)) in outcome.alpha_trace.iter().zip(&outcome.p_delta_trace).enumerate() {
        out.push_str(&format!("{},{},{}\n", i + 1, fmt_prob(a), fmt_prob(p)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_zero_density_always_succeeds() {
        let spec = SweepSpec {
            trials_per_point: 5,
            ..SweepSpec::new(Algorithm::Sbb, 3, 6, 120, vec![0.0])
        };
        let rows = success_ratio_sweep(&spec).unwrap();
        assert_eq!(rows[0].successes, 5);
        assert_eq!(rows[0].success_ratio, 1.0);
    }

    #[test]
    fn sweep_is_deterministic_and_grid_ordered() {
        let spec = SweepSpec {
            trials_per_point: 8,
            base_seed: 42,
            ..SweepSpec::new(Algorithm::Lm, 3, 6, 240, vec![0.05, 0.1, 0.3])
        };
        let a = success_ratio_sweep(&spec).unwrap();
        let b = success_ratio_sweep(&spec).unwrap();
        assert_eq!(sweep_csv(&a), sweep_csv(&b));
        assert!(a.windows(2).all(|w| w[0].alpha0 <= w[1].alpha0));
        assert!(waterfall_is_monotone(&a));
    }

    #[test]
    fn beta_compare_row_zero_matches_alpha0() {
        let (rows, _) =
            beta_trace_compare(Algorithm::Sbb, 3, 6, 0.15, 600, 10, 5, 3).unwrap();
        assert_eq!(rows[0].ell, 0);
        assert_eq!(rows[0].de_alpha, 0.15);
        // Three standard errors of the mean around alpha0.
        let se = rows[0].mc_beta_std / (10f64).sqrt();
        assert!((rows[0].mc_beta_mean - 0.15).abs() <= 3.0 * se.max(0.02));
    }

    #[test]
    fn beta_compare_rejects_xh() {
        assert!(beta_trace_compare(Algorithm::Xh, 3, 6, 0.1, 120, 2, 3, 0).is_err());
    }

    #[test]
    fn concentration_zero_density_has_zero_std() {
        let rows =
            concentration_stats(Algorithm::Sbb, 3, 6, 0.0, &[120, 240], 4, 2, 1).unwrap();
        for r in rows {
            assert_eq!(r.std_beta, 0.0);
            assert_eq!(r.mean_beta, 0.0);
        }
    }

    #[test]
    fn threshold_table_has_ordering_and_oversampling() {
        let cells = threshold_table(
            &[(3, 4)],
            &[DeAlgorithm::Genie, DeAlgorithm::Sbb, DeAlgorithm::Lm],
            1e-4,
        )
        .unwrap();
        let get = |a: DeAlgorithm| cells.iter().find(|c| c.algorithm == a).unwrap();
        let (g, s, l) = (get(DeAlgorithm::Genie), get(DeAlgorithm::Sbb), get(DeAlgorithm::Lm));
        assert!(g.threshold > s.threshold && s.threshold > l.threshold);
        // r_o for Genie (3,4) is about 1.16.
        assert!((g.oversampling - 1.158).abs() < 0.01, "r_o = {}", g.oversampling);
    }

    #[test]
    fn noisy_experiment_zero_sigma_zero_k() {
        let rows = noisy_recovery_experiment(120, 3, 6, &[0], 0.0, 0.0, 0.0, 4, 9).unwrap();
        assert_eq!(rows[0].support_success_ratio, 1.0);
        assert_eq!(rows[0].mse_over_successes, 0.0);
    }

    #[test]
    fn csv_headers_are_stable() {
        assert!(sweep_csv(&[]).starts_with("alpha0,successes,trials,success_ratio"));
        assert!(beta_csv(&[]).starts_with("ell,de_alpha,mc_beta_mean,mc_beta_std"));
        assert!(concentration_csv(&[]).starts_with("n,mean_beta,std_beta"));
        assert!(threshold_csv(&[]).starts_with("algorithm,dv,dc,threshold"));
        assert!(noisy_csv(&[]).starts_with("k,support_success_ratio,mse_over_successes"));
    }
}
