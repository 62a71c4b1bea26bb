//! Convergence diagnostics: rank-normalized split R-hat, bulk and tail
//! effective sample sizes, and the divergence/treedepth tallies.
//!
//! The statistics follow the rank-normalization construction: draws are
//! replaced by normal scores of their pooled ranks before computing split
//! R-hat and bulk ESS; the reported R-hat is the maximum of the bulk and
//! folded (median-absolute-deviation) variants. Tail ESS is the smaller of
//! the ESSes of the 5% and 95% quantile indicator sequences.

use serde::{Deserialize, Serialize};

use crate::hsmlm::PosteriorDraws;
use crate::math;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamDiagnostics {
    pub name: String,
    pub rhat: f64,
    pub ess_bulk: f64,
    pub ess_tail: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub params: Vec<ParamDiagnostics>,
    pub divergences: usize,
    pub max_treedepth_hits: usize,
    pub n_chains: usize,
    pub n_draws_per_chain: usize,
}

impl DiagnosticsReport {
    pub fn max_rhat(&self) -> f64 {
        self.params.iter().map(|p| p.rhat).fold(f64::NAN, f64::max)
    }

    pub fn min_ess_bulk(&self) -> f64 {
        self.params.iter().map(|p| p.ess_bulk).fold(f64::INFINITY, f64::min)
    }

    pub fn param(&self, name: &str) -> Option<&ParamDiagnostics> {
        self.params.iter().find(|p| p.name == name)
    }
}

/// Compute the report over every stored parameter. Needs at least 2 chains
/// and 4 draws per chain.
pub fn diagnostics(draws: &PosteriorDraws) -> DiagnosticsReport {
    let n_chains = draws.n_chains();
    let n_draws = draws.chains.first().map(|c| c.n_draws()).unwrap_or(0);
    let params = (0..draws.names.len())
        .map(|p| {
            let chains = draws.per_chain(p);
            ParamDiagnostics {
                name: draws.names[p].clone(),
                rhat: rank_normalized_rhat(&chains),
                ess_bulk: ess_bulk(&chains),
                ess_tail: ess_tail(&chains),
            }
        })
        .collect();
    // Max treedepth is not carried in the stats; report hits against the
    // observed maximum (callers with the config at hand use
    // PosteriorDraws::max_treedepth_hits directly).
    let max_depth_seen = draws
        .chains
        .iter()
        .flat_map(|c| &c.stats)
        .map(|s| s.tree_depth)
        .max()
        .unwrap_or(0) as usize;
    DiagnosticsReport {
        params,
        divergences: draws.divergences(),
        max_treedepth_hits: if max_depth_seen == 0 {
            0
        } else {
            draws.max_treedepth_hits(max_depth_seen)
        },
        n_chains,
        n_draws_per_chain: n_draws,
    }
}

fn split(chains: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(chains.len() * 2);
    for chain in chains {
        let n = chain.len() - chain.len() % 2;
        let mid = n / 2;
        out.push(chain[..mid].to_vec());
        out.push(chain[mid..n].to_vec());
    }
    out
}

/// Pooled average ranks mapped through the normal quantile function
/// (the (r − 3/8)/(N + 1/4) convention).
fn rank_normalize(chains: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let total: usize = chains.iter().map(Vec::len).sum();
    let mut indexed: Vec<(f64, usize, usize)> = Vec::with_capacity(total);
    for (ci, chain) in chains.iter().enumerate() {
        for (di, &v) in chain.iter().enumerate() {
            indexed.push((v, ci, di));
        }
    }
    indexed.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("non-finite draw"));
    let mut ranks = vec![0.0; total];
    let mut i = 0;
    while i < total {
        let mut j = i;
        while j < total && indexed[j].0 == indexed[i].0 {
            j += 1;
        }
        let avg = (i + j + 1) as f64 / 2.0;
        for r in ranks.iter_mut().take(j).skip(i) {
            *r = avg;
        }
        i = j;
    }
    let mut out: Vec<Vec<f64>> = chains.iter().map(|c| vec![0.0; c.len()]).collect();
    for (k, &(_, ci, di)) in indexed.iter().enumerate() {
        let p = (ranks[k] - 0.375) / (total as f64 + 0.25);
        out[ci][di] = math::inv_normal_cdf(p);
    }
    out
}

/// Split R-hat over the given (already transformed) chains.
fn split_rhat(chains: &[Vec<f64>]) -> f64 {
    let split = split(chains);
    let m = split.len() as f64;
    let n = split[0].len() as f64;
    if n < 2.0 {
        return f64::NAN;
    }
    let means: Vec<f64> = split.iter().map(|c| math::mean(c)).collect();
    let grand = math::mean(&means);
    let b_over_n = means.iter().map(|mu| (mu - grand) * (mu - grand)).sum::<f64>() / (m - 1.0);
    let w = split
        .iter()
        .map(|c| {
            let mu = math::mean(c);
            c.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / (n - 1.0)
        })
        .sum::<f64>()
        / m;
    if w <= 1e-300 {
        return f64::NAN;
    }
    let var_plus = (n - 1.0) / n * w + b_over_n;
    (var_plus / w).sqrt()
}

/// Rank-normalized split R-hat: max of the bulk and folded statistics.
pub fn rank_normalized_rhat(chains: &[Vec<f64>]) -> f64 {
    let bulk = split_rhat(&rank_normalize(chains));
    let pooled: Vec<f64> = chains.iter().flatten().copied().collect();
    let med = math::median(&pooled);
    let folded: Vec<Vec<f64>> = chains
        .iter()
        .map(|c| c.iter().map(|x| (x - med).abs()).collect())
        .collect();
    let folded_rhat = split_rhat(&rank_normalize(&folded));
    bulk.max(folded_rhat)
}

/// ESS via per-chain autocovariances combined with the between-chain
/// variance, truncated by the initial monotone positive pair sequence.
fn ess_raw(chains: &[Vec<f64>]) -> f64 {
    let split = split(chains);
    let m = split.len();
    let n = split[0].len();
    if n < 4 {
        return f64::NAN;
    }
    let mf = m as f64;
    let nf = n as f64;
    let means: Vec<f64> = split.iter().map(|c| math::mean(c)).collect();
    let vars: Vec<f64> = split
        .iter()
        .zip(&means)
        .map(|(c, mu)| c.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / (nf - 1.0))
        .collect();
    let w = math::mean(&vars);
    if w <= 1e-300 {
        return f64::NAN;
    }
    let grand = math::mean(&means);
    let b_over_n = if m > 1 {
        means.iter().map(|mu| (mu - grand) * (mu - grand)).sum::<f64>() / (mf - 1.0)
    } else {
        0.0
    };
    let var_plus = (nf - 1.0) / nf * w + b_over_n;

    let acov = |lag: usize| -> f64 {
        let mut sum = 0.0;
        for (c, mu) in split.iter().zip(&means) {
            for t in 0..n - lag {
                sum += (c[t] - mu) * (c[t + lag] - mu);
            }
        }
        sum / (mf * nf)
    };

    // rho_t = 1 − (W − mean_c acov_t) / var_plus, paired and truncated at the
    // first negative pair, enforcing monotone non-increase.
    let rho = |lag: usize| 1.0 - (w - acov(lag)) / var_plus;
    let mut tau = -1.0;
    let mut prev_pair = f64::INFINITY;
    let mut lag = 0usize;
    while lag + 1 < n {
        let pair = rho(lag) + rho(lag + 1);
        if pair <= 0.0 {
            break;
        }
        let pair = pair.min(prev_pair);
        prev_pair = pair;
        tau += 2.0 * pair;
        lag += 2;
    }
    let tau = tau.max(1e-3);
    (mf * nf) / tau
}

pub fn ess_bulk(chains: &[Vec<f64>]) -> f64 {
    ess_raw(&rank_normalize(chains))
}

pub fn ess_tail(chains: &[Vec<f64>]) -> f64 {
    let pooled: Vec<f64> = chains.iter().flatten().copied().collect();
    let q05 = math::quantile(&pooled, 0.05);
    let q95 = math::quantile(&pooled, 0.95);
    let lower: Vec<Vec<f64>> = chains
        .iter()
        .map(|c| c.iter().map(|&x| f64::from(u8::from(x <= q05))).collect())
        .collect();
    let upper: Vec<Vec<f64>> = chains
        .iter()
        .map(|c| c.iter().map(|&x| f64::from(u8::from(x >= q95))).collect())
        .collect();
    ess_raw(&lower).min(ess_raw(&upper))
}
