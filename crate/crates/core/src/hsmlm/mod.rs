//! Gaussian cross-classified multilevel regression with regularized
//! horseshoe priors on all fixed effects, sampled with NUTS.
//!
//! Model, in the unconstrained parameterization actually sampled:
//!
//! ```text
//! y_n   ~ Normal(beta0 + x_n'beta + u_a(n) + v_i(n), sigma)
//! beta_j = z_j * tau * lambda_tilde_j,
//!     lambda_tilde_j^2 = c^2 lambda_j^2 / (c^2 + tau^2 lambda_j^2)
//! z_j   ~ Normal(0, 1)
//! lambda_j ~ half-t(local_df, 0, 1)
//! tau   ~ half-t(global_df, 0, global_scale * sigma)
//! c^2   = slab_scale^2 * c_aux,  c_aux ~ InvGamma(slab_df/2, slab_df/2)
//! u_k   = sigma_a * zu_k,  v_m = sigma_i * zv_m   (non-centered)
//! zu, zv ~ Normal(0, 1)
//! sigma_a, sigma_i, sigma ~ half-t(3, 0, 2.5)
//! beta0 ~ t(3, median(y), 2.5 * mad(y))
//! ```
//!
//! All scale parameters are sampled on the log scale with the Jacobians
//! included in the log density.

mod diagnostics;
mod draws;
mod logp;
mod nuts;

pub use diagnostics::{diagnostics, DiagnosticsReport, ParamDiagnostics};
pub use draws::{ChainDraws, DrawStats, PosteriorDraws};
pub use logp::{grad_log_posterior, log_posterior, likelihood_term, lambda_tilde};
pub use nuts::{nuts_sample_chain, nuts_sample_target, LogDensity, RawChain, RawDraws};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Outcome, fixed-effect matrix, and group indices of one fit.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelData {
    pub y: Vec<f64>,
    /// Row-major n × p.
    pub x: Vec<f64>,
    pub p: usize,
    pub annotator_index: Vec<usize>,
    pub item_index: Vec<usize>,
    pub n_annotators: usize,
    pub n_items: usize,
}

impl ModelData {
    pub fn new(
        y: Vec<f64>,
        x: Vec<f64>,
        p: usize,
        annotator_index: Vec<usize>,
        item_index: Vec<usize>,
        n_annotators: usize,
        n_items: usize,
    ) -> Result<Self> {
        let n = y.len();
        if x.len() != n * p {
            return Err(Error::Validation(format!(
                "x has {} entries, expected {} ({} rows x {} cols)",
                x.len(),
                n * p,
                n,
                p
            )));
        }
        if annotator_index.len() != n || item_index.len() != n {
            return Err(Error::Validation("group index length mismatch".into()));
        }
        if y.iter().any(|v| !v.is_finite()) || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("non-finite entries in model data".into()));
        }
        // With zero groups (n_annotators or n_items of 0) the random
        // intercept term vanishes and the index vector is ignored.
        if n_annotators > 0 {
            if let Some(&bad) = annotator_index.iter().find(|&&a| a >= n_annotators) {
                return Err(Error::Validation(format!("annotator index {bad} out of range")));
            }
        }
        if n_items > 0 {
            if let Some(&bad) = item_index.iter().find(|&&i| i >= n_items) {
                return Err(Error::Validation(format!("item index {bad} out of range")));
            }
        }
        Ok(ModelData {
            y,
            x,
            p,
            annotator_index,
            item_index,
            n_annotators,
            n_items,
        })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    /// Build model data from a design matrix.
    pub fn from_design(design: &crate::design::DesignMatrix) -> Result<Self> {
        ModelData::new(
            design.outcome.clone(),
            design.values.clone(),
            design.n_columns(),
            design.annotator_index.clone(),
            design.item_index.clone(),
            design.annotator_levels.len(),
            design.item_levels.len(),
        )
    }
}

/// Regularized-horseshoe hyperparameters (the compatibility defaults of the
/// reference implementation: local and global df 1, global scale 1 times
/// sigma, slab df 4, slab scale 2).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HorseshoeHyper {
    pub local_df: f64,
    pub global_df: f64,
    pub global_scale: f64,
    pub slab_df: f64,
    pub slab_scale: f64,
}

impl Default for HorseshoeHyper {
    fn default() -> Self {
        HorseshoeHyper {
            local_df: 1.0,
            global_df: 1.0,
            global_scale: 1.0,
            slab_df: 4.0,
            slab_scale: 2.0,
        }
    }
}

impl HorseshoeHyper {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            self.local_df,
            self.global_df,
            self.global_scale,
            self.slab_df,
            self.slab_scale,
        ];
        if fields.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return Err(Error::Config("horseshoe hyperparameters must be positive".into()));
        }
        Ok(())
    }
}

/// Full prior configuration: the horseshoe plus the group/residual scale and
/// intercept priors. When `intercept_loc`/`intercept_scale` are unset they
/// default to median(y) and 2.5 * mad(y) (floored at the sd scale when the
/// outcome is degenerate).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelPriors {
    pub horseshoe: HorseshoeHyper,
    pub scale_df: f64,
    pub scale_scale: f64,
    pub intercept_df: f64,
    pub intercept_loc: Option<f64>,
    pub intercept_scale: Option<f64>,
}

impl Default for ModelPriors {
    fn default() -> Self {
        ModelPriors {
            horseshoe: HorseshoeHyper::default(),
            scale_df: 3.0,
            scale_scale: 2.5,
            intercept_df: 3.0,
            intercept_loc: None,
            intercept_scale: None,
        }
    }
}

impl ModelPriors {
    /// Resolve the intercept prior against the outcome.
    pub fn intercept_prior(&self, y: &[f64]) -> (f64, f64) {
        let loc = self.intercept_loc.unwrap_or_else(|| crate::math::median(y));
        let scale = self.intercept_scale.unwrap_or_else(|| {
            let s = 2.5 * crate::math::mad(y);
            if s > 0.0 {
                s
            } else {
                2.5
            }
        });
        (loc, scale)
    }
}

/// Index layout of the unconstrained parameter vector.
///
/// Order: beta0, z (p), log lambda (p), log tau, log c_aux, zu
/// (n_annotators), log sigma_a, zv (n_items), log sigma_i, log sigma.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamLayout {
    pub p: usize,
    pub n_annotators: usize,
    pub n_items: usize,
}

impl ParamLayout {
    pub fn of(data: &ModelData) -> Self {
        ParamLayout {
            p: data.p,
            n_annotators: data.n_annotators,
            n_items: data.n_items,
        }
    }

    pub fn dim(&self) -> usize {
        2 * self.p + self.n_annotators + self.n_items + 6
    }

    pub fn beta0(&self) -> usize {
        0
    }

    pub fn z(&self, j: usize) -> usize {
        1 + j
    }

    pub fn log_lambda(&self, j: usize) -> usize {
        1 + self.p + j
    }

    pub fn log_tau(&self) -> usize {
        1 + 2 * self.p
    }

    pub fn log_c_aux(&self) -> usize {
        2 + 2 * self.p
    }

    pub fn zu(&self, k: usize) -> usize {
        3 + 2 * self.p + k
    }

    pub fn log_sigma_a(&self) -> usize {
        3 + 2 * self.p + self.n_annotators
    }

    pub fn zv(&self, m: usize) -> usize {
        4 + 2 * self.p + self.n_annotators + m
    }

    pub fn log_sigma_i(&self) -> usize {
        4 + 2 * self.p + self.n_annotators + self.n_items
    }

    pub fn log_sigma(&self) -> usize {
        5 + 2 * self.p + self.n_annotators + self.n_items
    }

    /// Fixed-effect coefficients on the outcome scale, evaluated in the
    /// canonical order z·tau·c·lambda/sqrt(c² + tau²·lambda²) so the algebra
    /// holds bit-exactly.
    pub fn betas(&self, params: &[f64], hyper: &HorseshoeHyper) -> Vec<f64> {
        let tau = params[self.log_tau()].exp();
        let c = hyper.slab_scale * (params[self.log_c_aux()].exp()).sqrt();
        (0..self.p)
            .map(|j| {
                let z = params[self.z(j)];
                let lambda = params[self.log_lambda(j)].exp();
                z * tau * c * lambda / (c * c + tau * tau * lambda * lambda).sqrt()
            })
            .collect()
    }
}

/// Sampler configuration. The reference regime is 4 chains, 2,000 warmup
/// iterations, and 7,500 post-warmup draws per chain (30,000 pooled).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub chains: usize,
    pub warmup: usize,
    pub draws_per_chain: usize,
    pub target_accept: f64,
    pub max_treedepth: usize,
    pub seed: u64,
    /// Initial unconstrained parameters are drawn iid Uniform(-j, j).
    pub init_jitter: f64,
}

impl SamplerConfig {
    pub fn paper_defaults(seed: u64) -> Self {
        SamplerConfig {
            chains: 4,
            warmup: 2000,
            draws_per_chain: 7500,
            target_accept: 0.8,
            max_treedepth: 10,
            seed,
            init_jitter: 2.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.chains == 0 || self.warmup == 0 || self.draws_per_chain == 0 {
            return Err(Error::Config("chains, warmup, and draws must be positive".into()));
        }
        if !(0.0 < self.target_accept && self.target_accept < 1.0) {
            return Err(Error::Config("target_accept must be in (0, 1)".into()));
        }
        if self.max_treedepth == 0 || self.max_treedepth > 20 {
            return Err(Error::Config("max_treedepth must be in 1..=20".into()));
        }
        Ok(())
    }

    pub fn pooled_draws(&self) -> usize {
        self.chains * self.draws_per_chain
    }
}

/// The regression model as a NUTS target.
pub struct HsmlmModel<'d> {
    pub data: &'d ModelData,
    pub priors: ModelPriors,
    pub layout: ParamLayout,
    /// Resolved intercept prior (location, scale).
    pub intercept_prior: (f64, f64),
}

impl<'d> HsmlmModel<'d> {
    pub fn new(data: &'d ModelData, priors: ModelPriors) -> Result<Self> {
        priors.horseshoe.validate()?;
        // A zero-observation model is legal (prior-only density) as long as
        // the intercept prior does not need the outcome to resolve.
        if data.y.is_empty() && (priors.intercept_loc.is_none() || priors.intercept_scale.is_none())
        {
            return Err(Error::Validation(
                "the data-driven intercept prior needs at least one observation; \
                 set intercept_loc/intercept_scale explicitly for prior-only models"
                    .into(),
            ));
        }
        let intercept_prior = priors.intercept_prior(&data.y);
        Ok(HsmlmModel {
            data,
            priors,
            layout: ParamLayout::of(data),
            intercept_prior,
        })
    }

    /// Names of the derived parameters stored in [`PosteriorDraws`]:
    /// intercept, one entry per effect column, then the scales.
    pub fn derived_names(&self, effect_names: &[String]) -> Vec<String> {
        assert_eq!(effect_names.len(), self.layout.p);
        let mut names = Vec::with_capacity(self.layout.p + 6);
        names.push("intercept".to_string());
        names.extend(effect_names.iter().cloned());
        names.push("tau".to_string());
        names.push("c_slab".to_string());
        names.push("sd_annotator".to_string());
        names.push("sd_item".to_string());
        names.push("sigma".to_string());
        names
    }

    /// Map one unconstrained draw to the derived parameter vector.
    pub fn derive(&self, params: &[f64]) -> Vec<f64> {
        let l = &self.layout;
        let mut out = Vec::with_capacity(l.p + 6);
        out.push(params[l.beta0()]);
        out.extend(l.betas(params, &self.priors.horseshoe));
        out.push(params[l.log_tau()].exp());
        out.push(self.priors.horseshoe.slab_scale * params[l.log_c_aux()].exp().sqrt());
        out.push(params[l.log_sigma_a()].exp());
        out.push(params[l.log_sigma_i()].exp());
        out.push(params[l.log_sigma()].exp());
        out
    }
}

impl LogDensity for HsmlmModel<'_> {
    fn dim(&self) -> usize {
        self.layout.dim()
    }

    fn logp_grad(&self, position: &[f64], grad: &mut [f64]) -> Option<f64> {
        logp::eval(self, position, Some(grad)).ok().filter(|v| v.is_finite())
    }
}

/// Result of a fit: named draws, per-parameter diagnostics, and the
/// divergence tally.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub draws: PosteriorDraws,
    pub diagnostics: DiagnosticsReport,
    /// True when more than 10% of post-warmup transitions diverged.
    pub divergence_warning: bool,
}

/// Sample one chain of the model and derive its interpretable parameters.
/// Bit-identical to the corresponding chain of [`nuts_sample`], so fits can
/// resume chain by chain.
pub fn fit_chain(
    data: &ModelData,
    priors: &ModelPriors,
    config: &SamplerConfig,
    effect_names: &[String],
    chain_id: usize,
) -> Result<(Vec<String>, ChainDraws)> {
    let model = HsmlmModel::new(data, *priors)?;
    let raw = nuts_sample_chain(&model, config, chain_id)?;
    let names = model.derived_names(effect_names);
    let n_params = names.len();
    let mut values = Vec::with_capacity(raw.n_draws() * n_params);
    for d in 0..raw.n_draws() {
        values.extend(model.derive(raw.position(d)));
    }
    Ok((
        names,
        ChainDraws {
            n_params,
            values,
            stats: raw.stats,
        },
    ))
}

/// Fit the model: run NUTS, derive the interpretable parameters, and attach
/// diagnostics. `effect_names` label the fixed-effect columns.
pub fn nuts_sample(
    data: &ModelData,
    priors: &ModelPriors,
    config: &SamplerConfig,
    effect_names: &[String],
) -> Result<FitResult> {
    config.validate()?;
    if effect_names.len() != data.p {
        return Err(Error::Config(format!(
            "{} effect names for {} fixed-effect columns",
            effect_names.len(),
            data.p
        )));
    }
    let model = HsmlmModel::new(data, *priors)?;
    let raw = nuts_sample_target(&model, config)?;
    let names = model.derived_names(effect_names);
    let n_params = names.len();
    let chains: Vec<ChainDraws> = raw
        .chains
        .iter()
        .map(|chain| {
            let mut values = Vec::with_capacity(chain.n_draws() * n_params);
            for d in 0..chain.n_draws() {
                values.extend(model.derive(chain.position(d)));
            }
            ChainDraws {
                n_params,
                values,
                stats: chain.stats.clone(),
            }
        })
        .collect();
    let draws = PosteriorDraws { names, chains };
    let report = diagnostics(&draws);
    let total: usize = draws.chains.iter().map(|c| c.stats.len()).sum();
    let divergent: usize = draws
        .chains
        .iter()
        .flat_map(|c| &c.stats)
        .filter(|s| s.divergent)
        .count();
    let divergence_warning = total > 0 && (divergent as f64) > 0.1 * total as f64;
    if divergence_warning {
        eprintln!(
            "WARNING: {divergent}/{total} post-warmup transitions diverged (> 10%); \
             posterior geometry is suspect. Consider raising target_accept (0.95+ is \
             recommended for horseshoe models)."
        );
    }
    Ok(FitResult {
        draws,
        diagnostics: report,
        divergence_warning,
    })
}
