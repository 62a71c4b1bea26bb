//! Draw storage and the columnar export format.
//!
//! Each chain exports to its own CSV (resumable checkpoint granularity is
//! the chain): header `chain,draw,divergent,tree_depth,n_leapfrog,
//! step_size,accept_stat,energy,<param>...`, floats in round-trippable
//! scientific notation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sampler statistics of one transition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DrawStats {
    pub divergent: bool,
    pub tree_depth: u32,
    pub n_leapfrog: u32,
    pub step_size: f64,
    pub accept_stat: f64,
    pub energy: f64,
}

/// Post-warmup draws of one chain over the derived (interpretable)
/// parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainDraws {
    pub n_params: usize,
    /// Row-major draws × n_params.
    pub values: Vec<f64>,
    pub stats: Vec<DrawStats>,
}

impl ChainDraws {
    pub fn n_draws(&self) -> usize {
        self.stats.len()
    }

    pub fn draw(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_params..(i + 1) * self.n_params]
    }
}

/// All chains of one fit, with parameter names. Warmup is already excluded.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorDraws {
    pub names: Vec<String>,
    pub chains: Vec<ChainDraws>,
}

impl PosteriorDraws {
    pub fn n_chains(&self) -> usize {
        self.chains.len()
    }

    pub fn n_pooled(&self) -> usize {
        self.chains.iter().map(ChainDraws::n_draws).sum()
    }

    pub fn param_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// One parameter's draws per chain.
    pub fn per_chain(&self, param: usize) -> Vec<Vec<f64>> {
        self.chains
            .iter()
            .map(|c| (0..c.n_draws()).map(|d| c.draw(d)[param]).collect())
            .collect()
    }

    /// One parameter's draws pooled over chains (chain-major order).
    pub fn pooled(&self, param: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_pooled());
        for c in &self.chains {
            for d in 0..c.n_draws() {
                out.push(c.draw(d)[param]);
            }
        }
        out
    }

    pub fn divergences(&self) -> usize {
        self.chains
            .iter()
            .flat_map(|c| &c.stats)
            .filter(|s| s.divergent)
            .count()
    }

    pub fn max_treedepth_hits(&self, max_treedepth: usize) -> usize {
        self.chains
            .iter()
            .flat_map(|c| &c.stats)
            .filter(|s| s.tree_depth as usize >= max_treedepth)
            .count()
    }

    /// CSV export of one chain.
    pub fn chain_csv(&self, chain: usize) -> String {
        let c = &self.chains[chain];
        let mut out = String::from("chain,draw,divergent,tree_depth,n_leapfrog,step_size,accept_stat,energy");
        for name in &self.names {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for d in 0..c.n_draws() {
            let s = &c.stats[d];
            out.push_str(&format!(
                "{chain},{d},{},{},{},{},{},{}",
                u8::from(s.divergent),
                s.tree_depth,
                s.n_leapfrog,
                fmt(s.step_size),
                fmt(s.accept_stat),
                fmt(s.energy),
            ));
            for v in c.draw(d) {
                out.push(',');
                out.push_str(&fmt(*v));
            }
            out.push('\n');
        }
        out
    }

    /// Rebuild from per-chain CSVs (in chain order).
    pub fn from_chain_csvs(csvs: &[String], file: &str) -> Result<PosteriorDraws> {
        if csvs.is_empty() {
            return Err(Error::Validation("no chain files".into()));
        }
        let mut names: Option<Vec<String>> = None;
        let mut chains = Vec::with_capacity(csvs.len());
        for (ci, src) in csvs.iter().enumerate() {
            let mut lines = src.lines();
            let header = lines
                .next()
                .ok_or_else(|| Error::parse(file, 1, format!("chain {ci}: empty file")))?;
            let cols: Vec<&str> = header.split(',').collect();
            const FIXED: usize = 8;
            if cols.len() <= FIXED {
                return Err(Error::parse(file, 1, format!("chain {ci}: short header")));
            }
            let these: Vec<String> = cols[FIXED..].iter().map(|s| s.to_string()).collect();
            match &names {
                None => names = Some(these),
                Some(prev) => {
                    if *prev != these {
                        return Err(Error::Validation(format!(
                            "chain {ci} has different parameter names"
                        )));
                    }
                }
            }
            let n_params = names.as_ref().map(Vec::len).unwrap_or(0);
            let mut values = Vec::new();
            let mut stats = Vec::new();
            for (lineno, line) in lines.enumerate() {
                if line.is_empty() {
                    continue;
                }
                let fields: Vec<&str> = line.split(',').collect();
                if fields.len() != FIXED + n_params {
                    return Err(Error::parse(
                        file,
                        lineno + 2,
                        format!("chain {ci}: expected {} fields, got {}", FIXED + n_params, fields.len()),
                    ));
                }
                let parse_f = |s: &str, what: &str| -> Result<f64> {
                    s.parse().map_err(|_| {
                        Error::parse(file, lineno + 2, format!("bad {what} `{s}`"))
                    })
                };
                stats.push(DrawStats {
                    divergent: fields[2] == "1",
                    tree_depth: fields[3]
                        .parse()
                        .map_err(|_| Error::parse(file, lineno + 2, "bad tree_depth"))?,
                    n_leapfrog: fields[4]
                        .parse()
                        .map_err(|_| Error::parse(file, lineno + 2, "bad n_leapfrog"))?,
                    step_size: parse_f(fields[5], "step_size")?,
                    accept_stat: parse_f(fields[6], "accept_stat")?,
                    energy: parse_f(fields[7], "energy")?,
                });
                for f in &fields[FIXED..] {
                    values.push(parse_f(f, "draw value")?);
                }
            }
            chains.push(ChainDraws {
                n_params,
                values,
                stats,
            });
        }
        Ok(PosteriorDraws {
            names: names.expect("at least one chain"),
            chains,
        })
    }
}

fn fmt(v: f64) -> String {
    format!("{v:.17e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> PosteriorDraws {
        let stats = DrawStats {
            divergent: false,
            tree_depth: 3,
            n_leapfrog: 7,
            step_size: 0.25,
            accept_stat: 0.91,
            energy: 12.5,
        };
        PosteriorDraws {
            names: vec!["intercept".into(), "sigma".into()],
            chains: vec![
                ChainDraws {
                    n_params: 2,
                    values: vec![1.0, 0.5, 1.1, 0.6],
                    stats: vec![stats, DrawStats { divergent: true, ..stats }],
                },
                ChainDraws {
                    n_params: 2,
                    values: vec![0.9, 0.55],
                    stats: vec![stats],
                },
            ],
        }
    }

    #[test]
    fn pooled_and_per_chain() {
        let d = toy();
        assert_eq!(d.n_pooled(), 3);
        assert_eq!(d.pooled(0), vec![1.0, 1.1, 0.9]);
        assert_eq!(d.per_chain(1), vec![vec![0.5, 0.6], vec![0.55]]);
        assert_eq!(d.divergences(), 1);
    }

    #[test]
    fn csv_round_trip() {
        let d = toy();
        let csvs: Vec<String> = (0..d.n_chains()).map(|c| d.chain_csv(c)).collect();
        let back = PosteriorDraws::from_chain_csvs(&csvs, "draws").unwrap();
        assert_eq!(back, d);
    }
}
