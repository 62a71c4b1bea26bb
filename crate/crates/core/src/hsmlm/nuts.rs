//! No-U-Turn sampler with multinomial trajectory sampling, dual-averaging
//! step-size adaptation, and diagonal mass-matrix adaptation in expanding
//! warmup windows.
//!
//! Chains run as independent parallel tasks; each chain derives its RNG
//! stream deterministically from (seed, chain id), so a run is bit-for-bit
//! reproducible for a fixed configuration regardless of scheduling.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::hsmlm::{DrawStats, SamplerConfig};

/// A differentiable log density over an unconstrained parameter space.
///
/// `logp_grad` returns `None` for numerically unusable points; the sampler
/// treats those as divergent leaves (and rejects them as initial points).
pub trait LogDensity: Sync {
    fn dim(&self) -> usize;
    fn logp_grad(&self, position: &[f64], grad: &mut [f64]) -> Option<f64>;
}

/// Post-warmup positions and sampler statistics of one chain.
#[derive(Debug, Clone)]
pub struct RawChain {
    pub dim: usize,
    /// Row-major draws × dim.
    pub positions: Vec<f64>,
    pub stats: Vec<DrawStats>,
}

impl RawChain {
    pub fn n_draws(&self) -> usize {
        self.stats.len()
    }

    pub fn position(&self, draw: usize) -> &[f64] {
        &self.positions[draw * self.dim..(draw + 1) * self.dim]
    }
}

/// All chains of one run.
#[derive(Debug, Clone)]
pub struct RawDraws {
    pub dim: usize,
    pub chains: Vec<RawChain>,
}

/// Run NUTS on an arbitrary target. Warmup draws are discarded.
pub fn nuts_sample_target<T: LogDensity>(target: &T, config: &SamplerConfig) -> Result<RawDraws> {
    config.validate()?;
    let dim = target.dim();
    if dim == 0 {
        return Err(Error::Config("cannot sample a zero-dimensional target".into()));
    }
    let chains: Vec<Result<RawChain>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..config.chains)
            .map(|chain_id| scope.spawn(move || run_chain(target, config, chain_id)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("chain thread panicked"))
            .collect()
    });
    let chains = chains.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(RawDraws { dim, chains })
}

/// Run a single chain by id, bit-identical to the same chain of a full
/// [`nuts_sample_target`] run (the RNG stream is derived from
/// (seed, chain id)). This is the resume granularity of the fit stage.
pub fn nuts_sample_chain<T: LogDensity>(
    target: &T,
    config: &SamplerConfig,
    chain_id: usize,
) -> Result<RawChain> {
    config.validate()?;
    if chain_id >= config.chains {
        return Err(Error::Config(format!(
            "chain {chain_id} out of range for {} chains",
            config.chains
        )));
    }
    run_chain(target, config, chain_id)
}

struct Hamiltonian<'t, T: LogDensity> {
    target: &'t T,
    /// Diagonal inverse mass (estimated posterior variances).
    inv_mass: Vec<f64>,
}

impl<T: LogDensity> Hamiltonian<'_, T> {
    fn kinetic(&self, momentum: &[f64]) -> f64 {
        0.5 * momentum
            .iter()
            .zip(&self.inv_mass)
            .map(|(p, im)| p * p * im)
            .sum::<f64>()
    }

    fn sample_momentum(&self, rng: &mut ChaCha8Rng, out: &mut [f64]) {
        for (p, im) in out.iter_mut().zip(&self.inv_mass) {
            let z: f64 = rng.sample(StandardNormal);
            *p = z / im.sqrt();
        }
    }

    /// One leapfrog step; returns the new log density, or None when the
    /// target is unusable there.
    fn leapfrog(
        &self,
        position: &mut [f64],
        momentum: &mut [f64],
        grad: &mut [f64],
        step: f64,
    ) -> Option<f64> {
        for (p, g) in momentum.iter_mut().zip(grad.iter()) {
            *p += 0.5 * step * g;
        }
        for ((q, p), im) in position.iter_mut().zip(momentum.iter()).zip(&self.inv_mass) {
            *q += step * p * im;
        }
        let logp = self.target.logp_grad(position, grad)?;
        for (p, g) in momentum.iter_mut().zip(grad.iter()) {
            *p += 0.5 * step * g;
        }
        logp.is_finite().then_some(logp)
    }

    /// U-turn check between two trajectory endpoints.
    fn turned(&self, q_minus: &[f64], q_plus: &[f64], p_minus: &[f64], p_plus: &[f64]) -> bool {
        let mut dot_minus = 0.0;
        let mut dot_plus = 0.0;
        for i in 0..q_minus.len() {
            let dq = q_plus[i] - q_minus[i];
            dot_minus += dq * p_minus[i] * self.inv_mass[i];
            dot_plus += dq * p_plus[i] * self.inv_mass[i];
        }
        dot_minus < 0.0 || dot_plus < 0.0
    }
}

/// One endpoint of a trajectory.
#[derive(Clone)]
struct Edge {
    position: Vec<f64>,
    momentum: Vec<f64>,
    grad: Vec<f64>,
}

/// Result of building one subtree.
struct Subtree {
    minus: Edge,
    plus: Edge,
    proposal: Vec<f64>,
    proposal_logp: f64,
    log_sum_weight: f64,
    sum_alpha: f64,
    n_alpha: usize,
    n_leapfrog: usize,
    diverged: bool,
    turned: bool,
}

const DIVERGENCE_THRESHOLD: f64 = 1000.0;

#[allow(clippy::too_many_arguments)]
fn build_tree<T: LogDensity>(
    ham: &Hamiltonian<'_, T>,
    depth: usize,
    direction: f64,
    from: &Edge,
    joint0: f64,
    step: f64,
    rng: &mut ChaCha8Rng,
) -> Subtree {
    if depth == 0 {
        let mut edge = from.clone();
        let logp = ham.leapfrog(
            &mut edge.position,
            &mut edge.momentum,
            &mut edge.grad,
            direction * step,
        );
        let (joint, logp, usable) = match logp {
            Some(lp) => (lp - ham.kinetic(&edge.momentum), lp, true),
            None => (f64::NEG_INFINITY, f64::NEG_INFINITY, false),
        };
        let diverged = !usable || joint0 - joint > DIVERGENCE_THRESHOLD;
        let log_weight = joint - joint0;
        let alpha = if usable { log_weight.min(0.0).exp() } else { 0.0 };
        Subtree {
            proposal: edge.position.clone(),
            proposal_logp: logp,
            minus: edge.clone(),
            plus: edge,
            log_sum_weight: if diverged { f64::NEG_INFINITY } else { log_weight },
            sum_alpha: alpha,
            n_alpha: 1,
            n_leapfrog: 1,
            diverged,
            turned: false,
        }
    } else {
        let mut first = build_tree(ham, depth - 1, direction, from, joint0, step, rng);
        if first.diverged || first.turned {
            return first;
        }
        let outer = if direction < 0.0 { &first.minus } else { &first.plus };
        let second = build_tree(ham, depth - 1, direction, outer, joint0, step, rng);
        first.n_leapfrog += second.n_leapfrog;
        first.sum_alpha += second.sum_alpha;
        first.n_alpha += second.n_alpha;
        if second.diverged {
            first.diverged = true;
            return first;
        }
        // Progressive multinomial sampling within the combined subtree.
        let combined = crate::math::log_sum_exp(first.log_sum_weight, second.log_sum_weight);
        if combined > f64::NEG_INFINITY {
            let accept_prob = (second.log_sum_weight - combined).exp();
            let u: f64 = rng.random();
            if u < accept_prob {
                first.proposal = second.proposal.clone();
                first.proposal_logp = second.proposal_logp;
            }
        }
        first.log_sum_weight = combined;
        if direction < 0.0 {
            first.minus = second.minus;
        } else {
            first.plus = second.plus;
        }
        first.turned = second.turned
            || ham.turned(
                &first.minus.position,
                &first.plus.position,
                &first.minus.momentum,
                &first.plus.momentum,
            );
        first
    }
}

/// Dual-averaging state (Hoffman & Gelman; gamma 0.05, t0 10, kappa 0.75).
struct DualAveraging {
    mu: f64,
    log_eps: f64,
    log_eps_bar: f64,
    h_bar: f64,
    m: usize,
    target: f64,
}

impl DualAveraging {
    fn new(initial_step: f64, target: f64) -> Self {
        DualAveraging {
            mu: (10.0 * initial_step).ln(),
            log_eps: initial_step.ln(),
            log_eps_bar: 0.0,
            h_bar: 0.0,
            m: 0,
            target,
        }
    }

    fn update(&mut self, accept_stat: f64) {
        const GAMMA: f64 = 0.05;
        const T0: f64 = 10.0;
        const KAPPA: f64 = 0.75;
        self.m += 1;
        let m = self.m as f64;
        let eta = 1.0 / (m + T0);
        self.h_bar = (1.0 - eta) * self.h_bar + eta * (self.target - accept_stat);
        self.log_eps = self.mu - m.sqrt() / GAMMA * self.h_bar;
        let weight = m.powf(-KAPPA);
        self.log_eps_bar = weight * self.log_eps + (1.0 - weight) * self.log_eps_bar;
    }

    fn step(&self) -> f64 {
        self.log_eps.exp()
    }

    fn adapted_step(&self) -> f64 {
        self.log_eps_bar.exp()
    }
}

/// Warmup schedule following the usual three-phase layout: a fast initial
/// buffer (step size only), expanding covariance windows, and a fast
/// terminal buffer. Short warmups scale the buffers proportionally.
struct Windows {
    init_end: usize,
    term_start: usize,
    window_end: usize,
    window_size: usize,
}

impl Windows {
    fn new(warmup: usize) -> Self {
        let (init, term, window) = if warmup < 150 {
            let init = ((warmup as f64) * 0.15) as usize;
            let term = ((warmup as f64) * 0.10) as usize;
            (init, term, warmup.saturating_sub(init + term).max(1))
        } else {
            (75, 50, 25)
        };
        Windows {
            init_end: init,
            term_start: warmup - term,
            window_end: (init + window).min(warmup - term),
            window_size: window,
        }
    }

    fn collecting(&self, m: usize) -> bool {
        m >= self.init_end && m < self.term_start
    }

    /// True when iteration m closes a covariance window.
    fn window_closes(&mut self, m: usize) -> bool {
        if m + 1 == self.window_end && m < self.term_start {
            self.window_size *= 2;
            let next = self.window_end + self.window_size;
            // Extend the final window to the terminal buffer if the next one
            // would not fit.
            self.window_end = if next + self.window_size > self.term_start {
                self.term_start
            } else {
                next
            };
            true
        } else {
            false
        }
    }
}

/// Streaming variance accumulator for the mass-matrix windows.
struct Welford {
    n: usize,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Welford {
    fn new(dim: usize) -> Self {
        Welford {
            n: 0,
            mean: vec![0.0; dim],
            m2: vec![0.0; dim],
        }
    }

    fn push(&mut self, x: &[f64]) {
        self.n += 1;
        let nf = self.n as f64;
        for ((xi, mean), m2) in x.iter().zip(&mut self.mean).zip(&mut self.m2) {
            let delta = xi - *mean;
            *mean += delta / nf;
            *m2 += delta * (xi - *mean);
        }
    }

    /// Regularized variance estimate (shrunk toward 1e-3 as in the usual
    /// windowed adaptation).
    fn regularized_variance(&self) -> Option<Vec<f64>> {
        if self.n < 5 {
            return None;
        }
        let n = self.n as f64;
        let shrink = n / (n + 5.0);
        Some(
            self.m2
                .iter()
                .map(|m2| (shrink * (m2 / (n - 1.0)) + 1e-3 * (1.0 - shrink)).max(1e-10))
                .collect(),
        )
    }
}

fn find_initial_step<T: LogDensity>(
    ham: &Hamiltonian<'_, T>,
    position: &[f64],
    rng: &mut ChaCha8Rng,
) -> f64 {
    let dim = position.len();
    let mut step = 1.0f64;
    let mut momentum = vec![0.0; dim];
    ham.sample_momentum(rng, &mut momentum);
    let mut grad = vec![0.0; dim];
    let Some(logp) = ham.target.logp_grad(position, &mut grad) else {
        return 0.1;
    };
    let joint0 = logp - ham.kinetic(&momentum);

    let joint_after = |step: f64| -> Option<f64> {
        let mut q = position.to_vec();
        let mut p = momentum.clone();
        let mut g = grad.clone();
        let logp = ham.leapfrog(&mut q, &mut p, &mut g, step)?;
        Some(logp - ham.kinetic(&p))
    };

    let mut accept_logp = joint_after(step).map(|j| j - joint0).unwrap_or(f64::NEG_INFINITY);
    let half_ln = 0.5f64.ln();
    let direction: f64 = if accept_logp > half_ln { 1.0 } else { -1.0 };
    for _ in 0..50 {
        step *= 2.0f64.powf(direction);
        accept_logp = joint_after(step).map(|j| j - joint0).unwrap_or(f64::NEG_INFINITY);
        let keep_going = if direction > 0.0 {
            accept_logp > half_ln
        } else {
            accept_logp <= half_ln && step > 1e-10
        };
        if !keep_going {
            break;
        }
    }
    step.clamp(1e-10, 1e5)
}

fn run_chain<T: LogDensity>(
    target: &T,
    config: &SamplerConfig,
    chain_id: usize,
) -> Result<RawChain> {
    let dim = target.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(chain_id as u64 + 1);

    // Initialization: unconstrained iid Uniform(-j, j), redrawn while the
    // target is unusable there.
    let mut position = vec![0.0; dim];
    let mut grad = vec![0.0; dim];
    let mut logp = f64::NEG_INFINITY;
    let mut initialized = false;
    for _attempt in 0..100 {
        for q in position.iter_mut() {
            *q = rng.random_range(-config.init_jitter..config.init_jitter);
        }
        if let Some(lp) = target.logp_grad(&position, &mut grad) {
            if lp.is_finite() {
                logp = lp;
                initialized = true;
                break;
            }
        }
    }
    if !initialized {
        return Err(Error::Numerical(format!(
            "chain {chain_id}: no usable initial point after 100 attempts"
        )));
    }

    let mut ham = Hamiltonian {
        target,
        inv_mass: vec![1.0; dim],
    };
    let step0 = find_initial_step(&ham, &position, &mut rng);
    let mut da = DualAveraging::new(step0, config.target_accept);
    let mut windows = Windows::new(config.warmup);
    let mut welford = Welford::new(dim);

    let total = config.warmup + config.draws_per_chain;
    let mut positions = Vec::with_capacity(config.draws_per_chain * dim);
    let mut stats = Vec::with_capacity(config.draws_per_chain);

    eprintln!("chain {chain_id}: starting ({} warmup + {} draws)", config.warmup, config.draws_per_chain);
    for m in 0..total {
        let warming = m < config.warmup;
        let step = if warming { da.step() } else { da.adapted_step() };

        let mut momentum = vec![0.0; dim];
        ham.sample_momentum(&mut rng, &mut momentum);
        let joint0 = logp - ham.kinetic(&momentum);
        let edge = Edge {
            position: position.clone(),
            momentum: momentum.clone(),
            grad: grad.clone(),
        };
        let mut minus = edge.clone();
        let mut plus = edge;
        let mut proposal = position.clone();
        let mut proposal_logp = logp;
        let mut log_sum_weight = 0.0f64;
        let mut depth = 0usize;
        let mut divergent = false;
        let mut sum_alpha = 0.0;
        let mut n_alpha = 0usize;
        let mut n_leapfrog = 0usize;

        while depth < config.max_treedepth {
            let go_right = rng.random::<bool>();
            let direction = if go_right { 1.0 } else { -1.0 };
            let from = if go_right { &plus } else { &minus };
            let subtree = build_tree(&ham, depth, direction, from, joint0, step, &mut rng);
            n_leapfrog += subtree.n_leapfrog;
            sum_alpha += subtree.sum_alpha;
            n_alpha += subtree.n_alpha;
            if subtree.diverged {
                divergent = true;
                break;
            }
            if subtree.turned {
                break;
            }
            // Biased progressive sampling across subtrees.
            let accept_prob = (subtree.log_sum_weight - log_sum_weight).exp().min(1.0);
            let u: f64 = rng.random();
            if u < accept_prob {
                proposal = subtree.proposal.clone();
                proposal_logp = subtree.proposal_logp;
            }
            log_sum_weight = crate::math::log_sum_exp(log_sum_weight, subtree.log_sum_weight);
            if go_right {
                plus = subtree.plus;
            } else {
                minus = subtree.minus;
            }
            if ham.turned(&minus.position, &plus.position, &minus.momentum, &plus.momentum) {
                depth += 1;
                break;
            }
            depth += 1;
        }

        position = proposal;
        logp = proposal_logp;
        // Refresh the cached gradient at the accepted position.
        if target.logp_grad(&position, &mut grad).is_none() {
            return Err(Error::Numerical(format!(
                "chain {chain_id}: accepted position became unusable"
            )));
        }
        let accept_stat = if n_alpha > 0 { sum_alpha / n_alpha as f64 } else { 0.0 };

        if warming {
            da.update(accept_stat);
            if windows.collecting(m) {
                welford.push(&position);
                if windows.window_closes(m) {
                    if let Some(variance) = welford.regularized_variance() {
                        ham.inv_mass = variance;
                        let fresh = find_initial_step(&ham, &position, &mut rng);
                        da = DualAveraging::new(fresh, config.target_accept);
                        welford = Welford::new(dim);
                    }
                }
            }
            if m + 1 == config.warmup {
                eprintln!(
                    "chain {chain_id}: warmup done (step size {:.3e})",
                    da.adapted_step()
                );
            }
        } else {
            positions.extend_from_slice(&position);
            stats.push(DrawStats {
                divergent,
                tree_depth: depth as u32,
                n_leapfrog: n_leapfrog as u32,
                step_size: step,
                accept_stat,
                energy: -joint0,
            });
        }
    }
    eprintln!("chain {chain_id}: finished");
    Ok(RawChain {
        dim,
        positions,
        stats,
    })
}
