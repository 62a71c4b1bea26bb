//! Synthetic cross-classified data with known ground truth, recovery
//! reports, and simulation-based calibration of the sampler.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal, StudentT};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hsmlm::{nuts_sample, ModelData, ModelPriors, SamplerConfig};
use crate::posterior::EffectSummary;

/// Specification of one synthetic dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_annotators: usize,
    pub n_items: usize,
    pub n_annotations: usize,
    pub p: usize,
    pub intercept: f64,
    /// Indices of the nonzero coefficients.
    pub support: Vec<usize>,
    /// Magnitudes aligned with `support`.
    pub magnitudes: Vec<f64>,
    pub sigma_a: f64,
    pub sigma_i: f64,
    pub sigma: f64,
    pub seed: u64,
}

/// The generating parameter values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub intercept: f64,
    pub beta: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub sigma_a: f64,
    pub sigma_i: f64,
    pub sigma: f64,
}

/// Generate data: X iid standard Normal, group effects from their Normals,
/// y from the Gaussian likelihood. Pure function of the spec.
pub fn generate(spec: &SyntheticSpec) -> Result<(ModelData, Truth)> {
    if spec.support.len() != spec.magnitudes.len() {
        return Err(Error::Config("support and magnitudes must align".into()));
    }
    if spec.support.iter().any(|&j| j >= spec.p) {
        return Err(Error::Config("support index outside 1..p".into()));
    }
    if spec.sigma < 0.0 || spec.sigma_a < 0.0 || spec.sigma_i < 0.0 {
        return Err(Error::Config("scales must be non-negative".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut beta = vec![0.0; spec.p];
    for (&j, &m) in spec.support.iter().zip(&spec.magnitudes) {
        beta[j] = m;
    }
    let normal = |rng: &mut ChaCha8Rng| -> f64 { rng.sample(StandardNormal) };
    let u: Vec<f64> = (0..spec.n_annotators).map(|_| spec.sigma_a * normal(&mut rng)).collect();
    let v: Vec<f64> = (0..spec.n_items).map(|_| spec.sigma_i * normal(&mut rng)).collect();

    let n = spec.n_annotations;
    let mut x = Vec::with_capacity(n * spec.p);
    let mut y = Vec::with_capacity(n);
    let mut annotator_index = Vec::with_capacity(n);
    let mut item_index = Vec::with_capacity(n);
    for obs in 0..n {
        // Spread observations over items round-robin and draw the annotator
        // at random: partially cross-classified by construction.
        let item = obs % spec.n_items.max(1);
        let annotator = rng.random_range(0..spec.n_annotators.max(1));
        let mut mu = spec.intercept;
        for b in &beta {
            let xv = normal(&mut rng);
            x.push(xv);
            mu += b * xv;
        }
        if spec.n_annotators > 0 {
            mu += u[annotator];
        }
        if spec.n_items > 0 {
            mu += v[item];
        }
        y.push(mu + spec.sigma * normal(&mut rng));
        annotator_index.push(annotator);
        item_index.push(item);
    }
    let data = ModelData::new(
        y,
        x,
        spec.p,
        annotator_index,
        item_index,
        spec.n_annotators,
        spec.n_items,
    )?;
    Ok((
        data,
        Truth {
            intercept: spec.intercept,
            beta,
            u,
            v,
            sigma_a: spec.sigma_a,
            sigma_i: spec.sigma_i,
            sigma: spec.sigma,
        },
    ))
}

/// Default effect names for synthetic fits: x0, x1, ...
pub fn effect_names(p: usize) -> Vec<String> {
    (0..p).map(|j| format!("x{j}")).collect()
}

/// Per-effect recovery outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectRecovery {
    pub name: String,
    pub truth: f64,
    pub median: f64,
    pub survivor: bool,
    pub sign_match: bool,
    pub covered_by_ci90: bool,
}

/// Recovery of the sparse truth by a fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    pub effects: Vec<EffectRecovery>,
    pub n_true_effects: usize,
    /// Among the true nonzeros.
    pub sign_matches: usize,
    pub true_positives: usize,
    pub ci90_covered: usize,
    /// Survivors among the true zeros.
    pub false_positives: usize,
    pub n_true_zeros: usize,
}

/// Compare per-effect summaries (in effect order) against the truth.
pub fn recovery_report(summaries: &[EffectSummary], truth: &Truth) -> Result<RecoveryReport> {
    if summaries.len() != truth.beta.len() {
        return Err(Error::Validation(format!(
            "{} summaries for {} true coefficients",
            summaries.len(),
            truth.beta.len()
        )));
    }
    let mut effects = Vec::with_capacity(summaries.len());
    let mut sign_matches = 0;
    let mut true_positives = 0;
    let mut covered = 0;
    let mut false_positives = 0;
    let mut n_true = 0;
    for (s, &b) in summaries.iter().zip(&truth.beta) {
        let is_true_effect = b != 0.0;
        let sign_match = is_true_effect && s.median.signum() == b.signum();
        let cover = s.ci90_lo <= b && b <= s.ci90_hi;
        if is_true_effect {
            n_true += 1;
            if sign_match {
                sign_matches += 1;
            }
            if s.survivor {
                true_positives += 1;
            }
            if cover {
                covered += 1;
            }
        } else if s.survivor {
            false_positives += 1;
        }
        effects.push(EffectRecovery {
            name: s.name.clone(),
            truth: b,
            median: s.median,
            survivor: s.survivor,
            sign_match,
            covered_by_ci90: cover,
        });
    }
    Ok(RecoveryReport {
        effects,
        n_true_effects: n_true,
        sign_matches,
        true_positives,
        ci90_covered: covered,
        false_positives,
        n_true_zeros: summaries.len() - n_true,
    })
}

/// Configuration for simulation-based calibration of the sampler on a tiny
/// model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SbcConfig {
    pub n_sims: usize,
    pub p: usize,
    pub n_annotators: usize,
    pub n_items: usize,
    pub n_obs: usize,
    pub seed: u64,
    /// Per-fit sampler settings (chains/warmup/draws; the per-sim seed is
    /// derived from `seed`).
    pub fit_chains: usize,
    pub fit_warmup: usize,
    pub fit_draws: usize,
    pub fit_target_accept: f64,
    /// Posterior draws are thinned to this count before ranking, so ranks
    /// take `thin_to + 1` values. Choose bins dividing that.
    pub thin_to: usize,
    pub bins: usize,
}

impl Default for SbcConfig {
    fn default() -> Self {
        SbcConfig {
            n_sims: 200,
            p: 3,
            n_annotators: 10,
            n_items: 10,
            n_obs: 50,
            seed: 0,
            fit_chains: 2,
            fit_warmup: 250,
            fit_draws: 150,
            fit_target_accept: 0.9,
            thin_to: 199,
            bins: 20,
        }
    }
}

/// SBC outcome: the rank histogram inputs and the chi-squared uniformity
/// test per tracked hyperparameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SbcReport {
    pub ranks: BTreeMap<String, Vec<usize>>,
    /// statistic and upper-tail p-value per parameter.
    pub chi2: BTreeMap<String, (f64, f64)>,
    pub n_rank_values: usize,
    pub bins: usize,
    pub n_excluded: usize,
}

/// The parameters whose calibration SBC tracks.
pub const SBC_PARAMS: [&str; 4] = ["intercept", "sigma", "sd_annotator", "sd_item"];

/// Fixed intercept prior for SBC runs (the data-driven default would change
/// the generative model per simulation).
pub fn sbc_priors() -> ModelPriors {
    ModelPriors {
        intercept_loc: Some(0.0),
        intercept_scale: Some(2.5),
        ..ModelPriors::default()
    }
}

fn half_t(rng: &mut ChaCha8Rng, df: f64, scale: f64) -> f64 {
    let t: f64 = StudentT::new(df).expect("valid df").sample(rng);
    t.abs() * scale
}

fn inv_gamma(rng: &mut ChaCha8Rng, shape: f64, rate: f64) -> f64 {
    // If G ~ Gamma(shape, scale = 1/rate) then 1/G ~ InvGamma(shape, rate).
    let g: f64 = Gamma::new(shape, 1.0 / rate).expect("valid shape").sample(rng);
    1.0 / g
}

/// One prior draw of the full generative model, returning the tracked
/// hyperparameters and the induced coefficient vector.
fn prior_draw(
    rng: &mut ChaCha8Rng,
    priors: &ModelPriors,
    p: usize,
) -> (BTreeMap<String, f64>, Vec<f64>, f64, f64, f64, f64) {
    let hs = priors.horseshoe;
    let (loc, scale) = (
        priors.intercept_loc.expect("sbc priors are fixed"),
        priors.intercept_scale.expect("sbc priors are fixed"),
    );
    let t: f64 = StudentT::new(priors.intercept_df).expect("df").sample(rng);
    let intercept = loc + scale * t;
    let sigma = half_t(rng, priors.scale_df, priors.scale_scale);
    let sigma_a = half_t(rng, priors.scale_df, priors.scale_scale);
    let sigma_i = half_t(rng, priors.scale_df, priors.scale_scale);
    let tau = half_t(rng, hs.global_df, hs.global_scale * sigma);
    let c_aux = inv_gamma(rng, hs.slab_df / 2.0, hs.slab_df / 2.0);
    let c = hs.slab_scale * c_aux.sqrt();
    let beta: Vec<f64> = (0..p)
        .map(|_| {
            let lambda = half_t(rng, hs.local_df, 1.0);
            let z: f64 = rng.sample(StandardNormal);
            z * tau * c * lambda / (c * c + tau * tau * lambda * lambda).sqrt()
        })
        .collect();
    let mut tracked = BTreeMap::new();
    tracked.insert("intercept".to_string(), intercept);
    tracked.insert("sigma".to_string(), sigma);
    tracked.insert("sd_annotator".to_string(), sigma_a);
    tracked.insert("sd_item".to_string(), sigma_i);
    (tracked, beta, intercept, sigma, sigma_a, sigma_i)
}

/// Rank of the truth among the draws: #{draw < truth}.
pub fn rank_among(truth: f64, draws: &[f64]) -> usize {
    draws.iter().filter(|&&d| d < truth).count()
}

/// Evenly thin `values` down to `target` entries (deterministic).
pub fn thin(values: &[f64], target: usize) -> Vec<f64> {
    assert!(values.len() >= target && target > 0);
    (0..target)
        .map(|i| values[i * values.len() / target])
        .collect()
}

/// Chi-squared uniformity statistic and p-value over binned ranks.
/// `n_rank_values` must be divisible by `bins`.
pub fn uniformity_chi2(ranks: &[usize], n_rank_values: usize, bins: usize) -> (f64, f64) {
    assert!(n_rank_values.is_multiple_of(bins), "bins must divide the rank range");
    let per_bin = n_rank_values / bins;
    let mut counts = vec![0usize; bins];
    for &r in ranks {
        counts[(r / per_bin).min(bins - 1)] += 1;
    }
    let expected = ranks.len() as f64 / bins as f64;
    let stat: f64 = counts
        .iter()
        .map(|&c| {
            let d = c as f64 - expected;
            d * d / expected
        })
        .sum();
    let p = crate::math::chi2_sf(stat, bins - 1);
    (stat, p)
}

/// Run SBC: draw hyperparameters from the prior, simulate a dataset, fit it,
/// and rank the truth among the thinned posterior draws; then test the rank
/// histogram of each tracked hyperparameter for uniformity.
///
/// Non-converged fits (rank-normalized split R-hat above 1.2 on any tracked
/// parameter) are excluded and counted.
pub fn sbc(config: &SbcConfig) -> Result<SbcReport> {
    if config.n_sims < 100 {
        return Err(Error::Config("sbc needs at least 100 simulations".into()));
    }
    let pooled = config.fit_chains * config.fit_draws;
    if pooled < config.thin_to {
        return Err(Error::Config(format!(
            "{pooled} pooled draws cannot be thinned to {}",
            config.thin_to
        )));
    }
    let priors = sbc_priors();
    let names = effect_names(config.p);

    let results: Vec<Option<BTreeMap<String, usize>>> = (0..config.n_sims)
        .into_par_iter()
        .map(|sim| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(0x5bc0 + sim as u64);
            let (tracked, beta, intercept, sigma, sigma_a, sigma_i) =
                prior_draw(&mut rng, &priors, config.p);
            // Simulate the dataset at the drawn parameters.
            let normal = |rng: &mut ChaCha8Rng| -> f64 { rng.sample(StandardNormal) };
            let u: Vec<f64> = (0..config.n_annotators).map(|_| sigma_a * normal(&mut rng)).collect();
            let v: Vec<f64> = (0..config.n_items).map(|_| sigma_i * normal(&mut rng)).collect();
            let mut x = Vec::with_capacity(config.n_obs * config.p);
            let mut y = Vec::with_capacity(config.n_obs);
            let mut ai = Vec::with_capacity(config.n_obs);
            let mut ii = Vec::with_capacity(config.n_obs);
            for obs in 0..config.n_obs {
                let a = rng.random_range(0..config.n_annotators);
                let it = obs % config.n_items;
                let mut mu = intercept + u[a] + v[it];
                for b in &beta {
                    let xv = normal(&mut rng);
                    x.push(xv);
                    mu += b * xv;
                }
                y.push(mu + sigma * normal(&mut rng));
                ai.push(a);
                ii.push(it);
            }
            let data = ModelData::new(
                y,
                x,
                config.p,
                ai,
                ii,
                config.n_annotators,
                config.n_items,
            )
            .expect("synthetic data is well-formed");
            let sampler = SamplerConfig {
                chains: config.fit_chains,
                warmup: config.fit_warmup,
                draws_per_chain: config.fit_draws,
                target_accept: config.fit_target_accept,
                max_treedepth: 10,
                seed: config.seed ^ (0x9e3779b97f4a7c15u64.wrapping_mul(sim as u64 + 1)),
                init_jitter: 2.0,
            };
            let fit = match nuts_sample(&data, &priors, &sampler, &names) {
                Ok(f) => f,
                Err(_) => return None,
            };
            for name in SBC_PARAMS {
                let d = fit.diagnostics.param(name).expect("tracked param present");
                if !d.rhat.is_finite() || d.rhat > 1.2 {
                    return None;
                }
            }
            let mut ranks = BTreeMap::new();
            for name in SBC_PARAMS {
                let idx = fit.draws.param_index(name).expect("tracked param present");
                let thinned = thin(&fit.draws.pooled(idx), config.thin_to);
                ranks.insert(name.to_string(), rank_among(tracked[name], &thinned));
            }
            Some(ranks)
        })
        .collect();

    let n_excluded = results.iter().filter(|r| r.is_none()).count();
    let mut ranks: BTreeMap<String, Vec<usize>> = SBC_PARAMS
        .iter()
        .map(|n| (n.to_string(), Vec::new()))
        .collect();
    for sim_ranks in results.into_iter().flatten() {
        for (name, rank) in sim_ranks {
            ranks.get_mut(&name).expect("tracked").push(rank);
        }
    }
    let n_rank_values = config.thin_to + 1;
    let chi2 = ranks
        .iter()
        .map(|(name, rs)| {
            (
                name.clone(),
                uniformity_chi2(rs, n_rank_values, config.bins),
            )
        })
        .collect();
    Ok(SbcReport {
        ranks,
        chi2,
        n_rank_values,
        bins: config.bins,
        n_excluded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generate_deterministic_and_degenerate() {
        let spec = SyntheticSpec {
            n_annotators: 4,
            n_items: 5,
            n_annotations: 20,
            p: 2,
            intercept: 3.0,
            support: vec![],
            magnitudes: vec![],
            sigma_a: 0.0,
            sigma_i: 0.0,
            sigma: 0.0,
            seed: 1,
        };
        let (data, truth) = generate(&spec).unwrap();
        assert!(data.y.iter().all(|&y| (y - 3.0).abs() < 1e-12));
        assert_eq!(truth.beta, vec![0.0, 0.0]);

        let (again, _) = generate(&spec).unwrap();
        assert_eq!(data, again);
    }

    #[test]
    fn generated_group_sd_matches_spec() {
        let spec = SyntheticSpec {
            n_annotators: 10_000,
            n_items: 2,
            n_annotations: 2,
            p: 0,
            intercept: 0.0,
            support: vec![],
            magnitudes: vec![],
            sigma_a: 0.7,
            sigma_i: 0.1,
            sigma: 1.0,
            seed: 5,
        };
        let (_, truth) = generate(&spec).unwrap();
        let sd = crate::math::sd_population(&truth.u);
        assert!((sd - 0.7).abs() / 0.7 < 0.03, "sd {sd}");
    }

    #[test]
    fn recovery_with_oracle_summaries() {
        let truth = Truth {
            intercept: 0.0,
            beta: vec![0.5, 0.0, -0.5],
            u: vec![],
            v: vec![],
            sigma_a: 0.3,
            sigma_i: 0.3,
            sigma: 1.0,
        };
        let mk = |name: &str, median: f64, survivor: bool| EffectSummary {
            name: name.into(),
            origin: crate::design::ColumnOrigin::Linguistic,
            median,
            hdi95_lo: median - 0.2,
            hdi95_hi: median + 0.2,
            ci90_lo: median - 0.1,
            ci90_hi: median + 0.1,
            survivor,
        };
        // perfect oracle: draws centered at the truth
        let summaries = vec![mk("x0", 0.5, true), mk("x1", 0.0, false), mk("x2", -0.5, true)];
        let report = recovery_report(&summaries, &truth).unwrap();
        assert_eq!(report.n_true_effects, 2);
        assert_eq!(report.sign_matches, 2);
        assert_eq!(report.true_positives, 2);
        assert_eq!(report.ci90_covered, 2);
        assert_eq!(report.false_positives, 0);
        assert_eq!(report.sign_matches + (report.n_true_effects - report.sign_matches), 2);
    }

    #[test]
    fn recovery_empty_support_counts_false_positives_only() {
        let truth = Truth {
            intercept: 0.0,
            beta: vec![0.0, 0.0],
            u: vec![],
            v: vec![],
            sigma_a: 0.0,
            sigma_i: 0.0,
            sigma: 1.0,
        };
        let mk = |name: &str, survivor: bool| EffectSummary {
            name: name.into(),
            origin: crate::design::ColumnOrigin::Linguistic,
            median: 0.2,
            hdi95_lo: 0.0,
            hdi95_hi: 0.4,
            ci90_lo: 0.05,
            ci90_hi: 0.35,
            survivor,
        };
        let report =
            recovery_report(&[mk("x0", true), mk("x1", false)], &truth).unwrap();
        assert_eq!(report.n_true_effects, 0);
        assert_eq!(report.false_positives, 1);
    }

    #[test]
    fn chi2_binning_expected_counts() {
        // 100 sims over 20 bins: expected count 5 per bin.
        let ranks: Vec<usize> = (0..100).map(|i| (i * 2) % 200).collect();
        let (stat, p) = uniformity_chi2(&ranks, 200, 20);
        // exactly uniform over bins -> statistic 0, p = 1
        assert!(stat.abs() < 1e-12);
        assert!((p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn chi2_detects_u_shape() {
        // all ranks at the extremes
        let ranks: Vec<usize> = (0..100).map(|i| if i % 2 == 0 { 0 } else { 199 }).collect();
        let (_, p) = uniformity_chi2(&ranks, 200, 20);
        assert!(p < 0.01);
    }

    #[test]
    fn sbc_machinery_flags_halved_posterior_sd() {
        // Test double for the rank procedure: a conjugate Normal model whose
        // "sampler" is exact except that posterior draws are shrunk to half
        // the true sd. Ranks must pile up in the extremes (p < 0.01), while
        // the exact sampler stays uniform (p > 0.01).
        use rand::Rng;
        use rand::SeedableRng;
        use rand_distr::StandardNormal;
        let run = |sd_scale: f64| -> f64 {
            let mut rng = ChaCha8Rng::seed_from_u64(424242);
            let mut ranks = Vec::with_capacity(400);
            for _ in 0..400 {
                let truth: f64 = rng.sample(StandardNormal); // mu ~ N(0,1)
                let n = 5usize;
                let ybar = (0..n)
                    .map(|_| truth + rng.sample::<f64, _>(StandardNormal))
                    .sum::<f64>()
                    / n as f64;
                let post_mean = n as f64 * ybar / (n as f64 + 1.0);
                let post_sd = 1.0 / (n as f64 + 1.0).sqrt();
                let draws: Vec<f64> = (0..199)
                    .map(|_| post_mean + sd_scale * post_sd * rng.sample::<f64, _>(StandardNormal))
                    .collect();
                ranks.push(rank_among(truth, &draws));
            }
            uniformity_chi2(&ranks, 200, 20).1
        };
        assert!(run(1.0) > 0.01, "exact sampler must look uniform");
        assert!(run(0.5) < 0.01, "halved posterior sd must be detected");
    }

    #[test]
    fn thinning_is_even_and_deterministic() {
        let values: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        let t = thin(&values, 199);
        assert_eq!(t.len(), 199);
        assert_eq!(t[0], 0.0);
        assert!(t.windows(2).all(|w| w[1] > w[0]));
    }
}
