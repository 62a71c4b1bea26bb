//! Log posterior density and its exact gradient in the unconstrained space.
//!
//! All log densities carry their normalizing constants (so the likelihood
//! term equals a sum of complete Normal log densities), and every
//! log-transformed scale parameter contributes its log-Jacobian.

use crate::error::{Error, Result};
use crate::hsmlm::{HsmlmModel, ModelData, ModelPriors};

const LN_2PI: f64 = 1.837877066409345483560659472811;

/// Shrunken local scale of the regularized horseshoe:
/// lambda_tilde = c * lambda / sqrt(c^2 + tau^2 * lambda^2).
pub fn lambda_tilde(lambda: f64, tau: f64, c: f64) -> f64 {
    c * lambda / (c * c + tau * tau * lambda * lambda).sqrt()
}

/// ln of the half-t density with `df` degrees of freedom and scale `s`,
/// evaluated at x > 0.
fn ln_half_t(x: f64, df: f64, s: f64) -> f64 {
    let u = x * x / (df * s * s);
    2f64.ln() + crate::math::ln_gamma((df + 1.0) / 2.0)
        - crate::math::ln_gamma(df / 2.0)
        - 0.5 * (df * std::f64::consts::PI).ln()
        - s.ln()
        - 0.5 * (df + 1.0) * (1.0 + u).ln()
}

/// ln of the Student-t density with location/scale.
fn ln_student_t(x: f64, df: f64, loc: f64, scale: f64) -> f64 {
    let w = (x - loc) / scale;
    crate::math::ln_gamma((df + 1.0) / 2.0)
        - crate::math::ln_gamma(df / 2.0)
        - 0.5 * (df * std::f64::consts::PI).ln()
        - scale.ln()
        - 0.5 * (df + 1.0) * (1.0 + w * w / df).ln()
}

/// Evaluate the log posterior; when `grad` is given, also write the exact
/// gradient. Returns an error naming the first non-finite component.
pub(crate) fn eval(model: &HsmlmModel<'_>, params: &[f64], grad: Option<&mut [f64]>) -> Result<f64> {
    let layout = &model.layout;
    let data = model.data;
    let hs = &model.priors.horseshoe;
    if params.len() != layout.dim() {
        return Err(Error::Validation(format!(
            "parameter vector has {} entries, expected {}",
            params.len(),
            layout.dim()
        )));
    }

    let beta0 = params[layout.beta0()];
    let tau = params[layout.log_tau()].exp();
    let c_aux = params[layout.log_c_aux()].exp();
    let c = hs.slab_scale * c_aux.sqrt();
    let sigma_a = params[layout.log_sigma_a()].exp();
    let sigma_i = params[layout.log_sigma_i()].exp();
    let sigma = params[layout.log_sigma()].exp();
    for (value, component) in [
        (tau, "tau"),
        (c_aux, "c_aux"),
        (sigma_a, "sigma_a"),
        (sigma_i, "sigma_i"),
        (sigma, "sigma"),
    ] {
        if !value.is_finite() || value <= 0.0 {
            return Err(Error::Numerical(format!("non-finite scale {component}")));
        }
    }

    let p = layout.p;
    let mut lambdas = Vec::with_capacity(p);
    let mut betas = Vec::with_capacity(p);
    let mut denoms = Vec::with_capacity(p);
    for j in 0..p {
        let lambda = params[layout.log_lambda(j)].exp();
        let d = c * c + tau * tau * lambda * lambda;
        if !lambda.is_finite() || !d.is_finite() {
            return Err(Error::Numerical(format!("non-finite local scale lambda[{j}]")));
        }
        let beta = params[layout.z(j)] * tau * c * lambda / d.sqrt();
        lambdas.push(lambda);
        betas.push(beta);
        denoms.push(d);
    }

    // Likelihood pass: residuals and the per-target gradient accumulators.
    let n = data.n();
    let inv_sigma2 = 1.0 / (sigma * sigma);
    let mut loglik = 0.0;
    let mut sum_g = 0.0; // sum of r_n / sigma^2
    let mut sum_r2 = 0.0;
    let mut gx = vec![0.0; p]; // sum of g_n * x_nj
    let mut gu = vec![0.0; layout.n_annotators];
    let mut gv = vec![0.0; layout.n_items];
    for i in 0..n {
        let row = &data.x[i * p..(i + 1) * p];
        let mut mu = beta0;
        for (b, x) in betas.iter().zip(row) {
            mu += b * x;
        }
        if layout.n_annotators > 0 {
            mu += sigma_a * params[layout.zu(data.annotator_index[i])];
        }
        if layout.n_items > 0 {
            mu += sigma_i * params[layout.zv(data.item_index[i])];
        }
        let r = data.y[i] - mu;
        loglik += -0.5 * LN_2PI - sigma.ln() - 0.5 * r * r * inv_sigma2;
        let g = r * inv_sigma2;
        sum_g += g;
        sum_r2 += r * r;
        for (acc, x) in gx.iter_mut().zip(row) {
            *acc += g * x;
        }
        if layout.n_annotators > 0 {
            gu[data.annotator_index[i]] += g;
        }
        if layout.n_items > 0 {
            gv[data.item_index[i]] += g;
        }
    }
    if !loglik.is_finite() {
        return Err(Error::Numerical("non-finite likelihood".into()));
    }

    // Priors.
    let mut logp = loglik;
    let (int_loc, int_scale) = model.intercept_prior;
    logp += ln_student_t(beta0, model.priors.intercept_df, int_loc, int_scale);

    for j in 0..p {
        let z = params[layout.z(j)];
        logp += -0.5 * LN_2PI - 0.5 * z * z;
        logp += ln_half_t(lambdas[j], hs.local_df, 1.0) + params[layout.log_lambda(j)];
    }
    let global_s = hs.global_scale * sigma;
    logp += ln_half_t(tau, hs.global_df, global_s) + params[layout.log_tau()];
    let slab_a = hs.slab_df / 2.0;
    let slab_b = hs.slab_df / 2.0;
    logp += slab_a * slab_b.ln() - crate::math::ln_gamma(slab_a)
        - (slab_a + 1.0) * params[layout.log_c_aux()]
        - slab_b / c_aux
        + params[layout.log_c_aux()];
    for k in 0..layout.n_annotators {
        let zu = params[layout.zu(k)];
        logp += -0.5 * LN_2PI - 0.5 * zu * zu;
    }
    for m in 0..layout.n_items {
        let zv = params[layout.zv(m)];
        logp += -0.5 * LN_2PI - 0.5 * zv * zv;
    }
    let sdf = model.priors.scale_df;
    let ssc = model.priors.scale_scale;
    logp += ln_half_t(sigma_a, sdf, ssc) + params[layout.log_sigma_a()];
    logp += ln_half_t(sigma_i, sdf, ssc) + params[layout.log_sigma_i()];
    logp += ln_half_t(sigma, sdf, ssc) + params[layout.log_sigma()];
    if !logp.is_finite() {
        return Err(Error::Numerical("non-finite prior density".into()));
    }

    let Some(grad) = grad else {
        return Ok(logp);
    };
    if grad.len() != layout.dim() {
        return Err(Error::Validation("gradient buffer has the wrong dimension".into()));
    }
    grad.fill(0.0);

    // intercept
    let dw = beta0 - int_loc;
    let idf = model.priors.intercept_df;
    grad[layout.beta0()] =
        sum_g - (idf + 1.0) * dw / (idf * int_scale * int_scale + dw * dw);

    // fixed effects: z, log lambda, log tau, log c_aux
    let mut g_log_tau = 0.0;
    let mut g_log_caux = 0.0;
    for j in 0..p {
        let z = params[layout.z(j)];
        let lambda = lambdas[j];
        let d = denoms[j];
        let d32 = d * d.sqrt();
        let lt = c * lambda / d.sqrt();
        grad[layout.z(j)] = gx[j] * tau * lt - z;
        let chain = gx[j] * z * tau * c * c * c * lambda / d32;
        let u_l = lambda * lambda / hs.local_df;
        grad[layout.log_lambda(j)] = chain - (hs.local_df + 1.0) * u_l / (1.0 + u_l) + 1.0;
        g_log_tau += chain;
        g_log_caux += gx[j] * (c / 2.0) * z * tau * tau * tau * lambda * lambda * lambda / d32;
    }
    let u_g = tau * tau / (hs.global_df * global_s * global_s);
    grad[layout.log_tau()] = g_log_tau - (hs.global_df + 1.0) * u_g / (1.0 + u_g) + 1.0;
    grad[layout.log_c_aux()] = g_log_caux - slab_a + slab_b / c_aux;

    // random intercepts (non-centered)
    let mut g_log_sigma_a = 0.0;
    for k in 0..layout.n_annotators {
        let zu = params[layout.zu(k)];
        grad[layout.zu(k)] = sigma_a * gu[k] - zu;
        g_log_sigma_a += sigma_a * gu[k] * zu;
    }
    let u_a = sigma_a * sigma_a / (sdf * ssc * ssc);
    grad[layout.log_sigma_a()] = g_log_sigma_a - (sdf + 1.0) * u_a / (1.0 + u_a) + 1.0;

    let mut g_log_sigma_i = 0.0;
    for m in 0..layout.n_items {
        let zv = params[layout.zv(m)];
        grad[layout.zv(m)] = sigma_i * gv[m] - zv;
        g_log_sigma_i += sigma_i * gv[m] * zv;
    }
    let u_i = sigma_i * sigma_i / (sdf * ssc * ssc);
    grad[layout.log_sigma_i()] = g_log_sigma_i - (sdf + 1.0) * u_i / (1.0 + u_i) + 1.0;

    // residual scale: likelihood + the tau prior's sigma-dependent scale +
    // its own half-t prior.
    let u_s = sigma * sigma / (sdf * ssc * ssc);
    grad[layout.log_sigma()] = (sum_r2 * inv_sigma2 - n as f64)
        + (-1.0 + (hs.global_df + 1.0) * u_g / (1.0 + u_g))
        - (sdf + 1.0) * u_s / (1.0 + u_s)
        + 1.0;

    if grad.iter().any(|g| !g.is_finite()) {
        let bad = grad.iter().position(|g| !g.is_finite()).unwrap_or(0);
        return Err(Error::Numerical(format!("non-finite gradient component {bad}")));
    }
    Ok(logp)
}

/// Log posterior density (up to nothing: all constants included).
pub fn log_posterior(params: &[f64], data: &ModelData, priors: &ModelPriors) -> Result<f64> {
    let model = HsmlmModel::new(data, *priors)?;
    eval(&model, params, None)
}

/// Exact gradient of [`log_posterior`] in the unconstrained space.
pub fn grad_log_posterior(params: &[f64], data: &ModelData, priors: &ModelPriors) -> Result<Vec<f64>> {
    let model = HsmlmModel::new(data, *priors)?;
    let mut grad = vec![0.0; model.layout.dim()];
    eval(&model, params, Some(&mut grad))?;
    Ok(grad)
}

/// The Gaussian likelihood term alone (complete log densities).
pub fn likelihood_term(params: &[f64], data: &ModelData, priors: &ModelPriors) -> Result<f64> {
    let model = HsmlmModel::new(data, *priors)?;
    let layout = &model.layout;
    let beta0 = params[layout.beta0()];
    let betas = layout.betas(params, &model.priors.horseshoe);
    let sigma_a = params[layout.log_sigma_a()].exp();
    let sigma_i = params[layout.log_sigma_i()].exp();
    let sigma = params[layout.log_sigma()].exp();
    let mut loglik = 0.0;
    for i in 0..data.n() {
        let row = &data.x[i * layout.p..(i + 1) * layout.p];
        let mut mu = beta0;
        for (b, x) in betas.iter().zip(row) {
            mu += b * x;
        }
        if layout.n_annotators > 0 {
            mu += sigma_a * params[layout.zu(data.annotator_index[i])];
        }
        if layout.n_items > 0 {
            mu += sigma_i * params[layout.zv(data.item_index[i])];
        }
        let r = data.y[i] - mu;
        loglik += -0.5 * LN_2PI - sigma.ln() - 0.5 * r * r / (sigma * sigma);
    }
    Ok(loglik)
}
