//! Posterior summaries: effect tables, survivor detection, interaction
//! prediction grids, and the report bundle.
//!
//! The survivor rule follows the analysis convention: an effect survives
//! when its 90% equal-tailed interval (0.05 and 0.95 quantiles) excludes
//! zero. Display intervals are 95% highest-density intervals. Both the
//! survival mass and the rule are configurable.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::design::{ColumnOrigin, ContrastSpec, DesignColumn};
use crate::error::{Error, Result};
use crate::hsmlm::{DiagnosticsReport, PosteriorDraws};
use crate::math;

/// Per-effect posterior summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectSummary {
    pub name: String,
    pub origin: ColumnOrigin,
    pub median: f64,
    pub hdi95_lo: f64,
    pub hdi95_hi: f64,
    pub ci90_lo: f64,
    pub ci90_hi: f64,
    pub survivor: bool,
}

/// Shortest contiguous interval containing ceil(mass * n) sorted samples.
/// Ties go to the first (lowest) window.
pub fn hdi(samples: &[f64], mass: f64) -> (f64, f64) {
    assert!(samples.len() >= 10, "hdi needs at least 10 samples");
    assert!(mass > 0.0 && mass < 1.0, "mass must be in (0, 1)");
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("non-finite sample"));
    let n = sorted.len();
    let k = ((mass * n as f64).ceil() as usize).clamp(1, n);
    let mut best = (sorted[0], sorted[k - 1]);
    let mut best_width = sorted[k - 1] - sorted[0];
    for start in 1..=n - k {
        let width = sorted[start + k - 1] - sorted[start];
        if width < best_width {
            best_width = width;
            best = (sorted[start], sorted[start + k - 1]);
        }
    }
    best
}

/// Equal-tailed interval from the type-7 quantiles.
pub fn equal_tailed(samples: &[f64], mass: f64) -> (f64, f64) {
    let alpha = (1.0 - mass) / 2.0;
    (math::quantile(samples, alpha), math::quantile(samples, 1.0 - alpha))
}

/// Summarize every fixed-effect column: median, 95% HDI, 90% equal-tailed
/// interval, and the survivor flag (interval excludes zero at `level`).
pub fn survivors(
    draws: &PosteriorDraws,
    columns: &[DesignColumn],
    level: f64,
) -> Result<Vec<EffectSummary>> {
    assert!(level > 0.0 && level < 1.0);
    let mut out = Vec::with_capacity(columns.len());
    for col in columns {
        let p = draws
            .param_index(&col.name)
            .ok_or_else(|| Error::Validation(format!("effect `{}` not in draws", col.name)))?;
        let pooled = draws.pooled(p);
        let (hdi_lo, hdi_hi) = hdi(&pooled, 0.95);
        let (ci_lo, ci_hi) = equal_tailed(&pooled, level);
        out.push(EffectSummary {
            name: col.name.clone(),
            origin: col.origin,
            median: math::median(&pooled),
            hdi95_lo: hdi_lo,
            hdi95_hi: hdi_hi,
            ci90_lo: ci_lo,
            ci90_hi: ci_hi,
            survivor: ci_lo > 0.0 || ci_hi < 0.0,
        });
    }
    Ok(out)
}

/// One point of an interaction prediction grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    /// Linguistic feature value in standardized units (-1, 0, +1).
    pub feature_sd: f64,
    pub level: String,
    pub mean: f64,
    pub hdi_lo: f64,
    pub hdi_hi: f64,
}

/// Posterior linear-predictor evaluations over feature × level lattice for
/// one linguistic × annotator interaction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionGrid {
    pub feature: String,
    pub characteristic: String,
    pub points: Vec<GridPoint>,
}

/// Compute the prediction grid for `feature` × `characteristic`.
///
/// For every grid point the linear predictor sums the intercept, the
/// feature main effect at x_L, the characteristic's contrast columns at the
/// level, and the matching interaction columns at x_L times the contrast,
/// with every other fixed effect at 0 (the mean of standardized features)
/// and random intercepts at 0 (population-level predictions).
pub fn predict_grid(
    draws: &PosteriorDraws,
    contrasts: &BTreeMap<String, ContrastSpec>,
    feature: &str,
    characteristic: &str,
) -> Result<PredictionGrid> {
    let spec = contrasts.get(characteristic).ok_or_else(|| {
        Error::Validation(format!("unknown characteristic `{characteristic}`"))
    })?;
    if spec.levels.is_empty() {
        return Err(Error::Validation(format!(
            "characteristic `{characteristic}` is interval-coded; grids need levels"
        )));
    }
    let intercept = draws
        .param_index("intercept")
        .ok_or_else(|| Error::Validation("draws lack the intercept".into()))?;
    let beta_l = draws
        .param_index(feature)
        .ok_or_else(|| Error::Validation(format!("unknown feature effect `{feature}`")))?;
    let mut beta_s = Vec::with_capacity(spec.columns.len());
    let mut beta_int = Vec::with_capacity(spec.columns.len());
    for s_col in &spec.columns {
        beta_s.push(
            draws
                .param_index(s_col)
                .ok_or_else(|| Error::Validation(format!("unknown effect `{s_col}`")))?,
        );
        let int_name = format!("{s_col}:{feature}");
        beta_int.push(draws.param_index(&int_name).ok_or_else(|| {
            Error::Validation(format!("unknown interaction `{int_name}`"))
        })?);
    }

    let n = draws.n_pooled();
    let mut points = Vec::new();
    for &x in &[-1.0f64, 0.0, 1.0] {
        for (li, level) in spec.levels.iter().enumerate() {
            let mut eta = Vec::with_capacity(n);
            for chain in &draws.chains {
                for d in 0..chain.n_draws() {
                    let row = chain.draw(d);
                    let mut value = row[intercept] + x * row[beta_l];
                    for (k, contrast) in spec.matrix[li].iter().enumerate() {
                        value += contrast * row[beta_s[k]];
                        value += x * contrast * row[beta_int[k]];
                    }
                    eta.push(value);
                }
            }
            let (lo, hi) = hdi(&eta, 0.95);
            points.push(GridPoint {
                feature_sd: x,
                level: level.clone(),
                mean: math::mean(&eta),
                hdi_lo: lo,
                hdi_hi: hi,
            });
        }
    }
    Ok(PredictionGrid {
        feature: feature.to_string(),
        characteristic: characteristic.to_string(),
        points,
    })
}

/// The machine-readable summary line format:
/// `effect,origin,median,hdi95_lo,hdi95_hi,ci90_lo,ci90_hi,survivor`.
pub fn summaries_csv(summaries: &[EffectSummary]) -> String {
    let mut out = String::from("effect,origin,median,hdi95_lo,hdi95_hi,ci90_lo,ci90_hi,survivor\n");
    for s in summaries {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            s.name,
            origin_tag(s.origin),
            fmt(s.median),
            fmt(s.hdi95_lo),
            fmt(s.hdi95_hi),
            fmt(s.ci90_lo),
            fmt(s.ci90_hi),
            u8::from(s.survivor),
        ));
    }
    out
}

/// Parse a summaries CSV back (inverse of [`summaries_csv`]).
pub fn summaries_from_csv(src: &str, file: &str) -> Result<Vec<EffectSummary>> {
    let mut lines = src.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::parse(file, 1, "empty summary file"))?;
    if header != "effect,origin,median,hdi95_lo,hdi95_hi,ci90_lo,ci90_hi,survivor" {
        return Err(Error::parse(file, 1, "unexpected summary header"));
    }
    let mut out = Vec::new();
    for (idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 8 {
            return Err(Error::parse(file, idx + 1, format!("expected 8 fields, got {}", fields.len())));
        }
        let origin = match fields[1] {
            "intercept" => ColumnOrigin::Intercept,
            "L" => ColumnOrigin::Linguistic,
            "S" => ColumnOrigin::Annotator,
            "S:S" => ColumnOrigin::AnnotatorPair,
            "L:S" => ColumnOrigin::Cross,
            other => {
                return Err(Error::parse(file, idx + 1, format!("unknown origin `{other}`")))
            }
        };
        let num = |s: &str, what: &str| -> Result<f64> {
            s.parse()
                .map_err(|_| Error::parse(file, idx + 1, format!("bad {what} `{s}`")))
        };
        out.push(EffectSummary {
            name: fields[0].to_string(),
            origin,
            median: num(fields[2], "median")?,
            hdi95_lo: num(fields[3], "hdi95_lo")?,
            hdi95_hi: num(fields[4], "hdi95_hi")?,
            ci90_lo: num(fields[5], "ci90_lo")?,
            ci90_hi: num(fields[6], "ci90_hi")?,
            survivor: match fields[7] {
                "1" => true,
                "0" => false,
                other => {
                    return Err(Error::parse(file, idx + 1, format!("bad survivor flag `{other}`")))
                }
            },
        });
    }
    Ok(out)
}

/// Grid export: `feature_sd,level,mean,hdi_lo,hdi_hi`.
pub fn grid_csv(grid: &PredictionGrid) -> String {
    let mut out = String::from("feature_sd,level,mean,hdi_lo,hdi_hi\n");
    for p in &grid.points {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            p.feature_sd,
            p.level,
            fmt(p.mean),
            fmt(p.hdi_lo),
            fmt(p.hdi_hi)
        ));
    }
    out
}

fn origin_tag(origin: ColumnOrigin) -> &'static str {
    match origin {
        ColumnOrigin::Intercept => "intercept",
        ColumnOrigin::Linguistic => "L",
        ColumnOrigin::Annotator => "S",
        ColumnOrigin::AnnotatorPair => "S:S",
        ColumnOrigin::Cross => "L:S",
    }
}

fn fmt(v: f64) -> String {
    format!("{v:.17e}")
}

/// Everything the report stage writes.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportBundle {
    /// Human-readable report text.
    pub text: String,
    /// `summary.csv` — every effect.
    pub summary_csv: String,
    /// `forest.csv` — survivors only, ordered by descending |median|
    /// (forest-plot data).
    pub forest_csv: String,
    /// One CSV per interaction grid, keyed `grid_<characteristic>_<feature>`.
    pub grids: Vec<(String, String)>,
}

/// Assemble the report: survivor listing grouped by origin, plot-data files,
/// and a diagnostics banner when the sampler struggled.
pub fn report(
    summaries: &[EffectSummary],
    grids: &[PredictionGrid],
    diagnostics: &DiagnosticsReport,
) -> ReportBundle {
    let mut survivors: Vec<&EffectSummary> = summaries.iter().filter(|s| s.survivor).collect();
    survivors.sort_by(|a, b| {
        b.median
            .abs()
            .partial_cmp(&a.median.abs())
            .expect("finite medians")
            .then_with(|| a.name.cmp(&b.name))
    });

    let mut text = String::new();
    if diagnostics.divergences > 0 {
        text.push_str(&format!(
            "==================== WARNING ====================\n\
             {} divergent transitions; estimates may be unreliable.\n\
             =================================================\n\n",
            diagnostics.divergences
        ));
    }
    text.push_str(&format!(
        "chains: {}  draws/chain: {}  max R-hat: {:.4}  min bulk ESS: {:.0}\n\n",
        diagnostics.n_chains,
        diagnostics.n_draws_per_chain,
        diagnostics.max_rhat(),
        diagnostics.min_ess_bulk(),
    ));
    if survivors.is_empty() {
        text.push_str("No surviving effects at the 90% rule.\n");
    } else {
        text.push_str(&format!(
            "{} surviving effects (90% interval excludes 0), by origin:\n",
            survivors.len()
        ));
        for origin in [
            ColumnOrigin::Linguistic,
            ColumnOrigin::Annotator,
            ColumnOrigin::AnnotatorPair,
            ColumnOrigin::Cross,
        ] {
            let group: Vec<&&EffectSummary> =
                survivors.iter().filter(|s| s.origin == origin).collect();
            if group.is_empty() {
                continue;
            }
            text.push_str(&format!("\n[{}]\n", origin_tag(origin)));
            for s in group {
                text.push_str(&format!(
                    "  {:<40} median {:+.4}  95% HDI [{:+.4}, {:+.4}]\n",
                    s.name, s.median, s.hdi95_lo, s.hdi95_hi
                ));
            }
        }
    }

    let forest: Vec<EffectSummary> = survivors.iter().map(|s| (*s).clone()).collect();
    ReportBundle {
        text,
        summary_csv: summaries_csv(summaries),
        forest_csv: summaries_csv(&forest),
        grids: grids
            .iter()
            .map(|g| {
                (
                    format!("grid_{}_{}", sanitize(&g.characteristic), sanitize(&g.feature)),
                    grid_csv(g),
                )
            })
            .collect(),
    }
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_alphanumeric() { c } else { '_' })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hsmlm::{ChainDraws, DrawStats};

    fn draws_of(names: &[&str], chains: Vec<Vec<Vec<f64>>>) -> PosteriorDraws {
        let stats = DrawStats {
            divergent: false,
            tree_depth: 1,
            n_leapfrog: 1,
            step_size: 0.1,
            accept_stat: 0.9,
            energy: 0.0,
        };
        PosteriorDraws {
            names: names.iter().map(|s| s.to_string()).collect(),
            chains: chains
                .into_iter()
                .map(|rows| ChainDraws {
                    n_params: names.len(),
                    values: rows.iter().flatten().copied().collect(),
                    stats: vec![stats; rows.len()],
                })
                .collect(),
        }
    }

    #[test]
    fn hdi_uniform_sequence() {
        let samples: Vec<f64> = (1..=100).map(|i| i as f64).collect();
        let (lo, hi) = hdi(&samples, 0.95);
        // ceil(0.95*100) = 95 samples; all windows have width 94, first wins.
        assert_eq!((lo, hi), (1.0, 95.0));
    }

    #[test]
    fn hdi_near_full_mass() {
        let samples: Vec<f64> = (1..=20).map(|i| i as f64).collect();
        let (lo, hi) = hdi(&samples, 0.9999);
        assert_eq!((lo, hi), (1.0, 20.0));
    }

    #[test]
    #[should_panic(expected = "mass must be in (0, 1)")]
    fn hdi_rejects_mass_one() {
        let samples: Vec<f64> = (1..=20).map(|i| i as f64).collect();
        hdi(&samples, 1.0);
    }

    #[test]
    fn hdi_no_wider_than_equal_tailed() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let samples: Vec<f64> = (0..500)
                .map(|_| {
                    let z: f64 = rng.sample(rand_distr::StandardNormal);
                    z * z.abs() // skewed
                })
                .collect();
            let (hlo, hhi) = hdi(&samples, 0.9);
            let (elo, ehi) = equal_tailed(&samples, 0.9);
            assert!(hhi - hlo <= ehi - elo + 1e-12);
        }
    }

    #[test]
    fn hdi_close_to_equal_tailed_for_symmetric_draws() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(10);
        let samples: Vec<f64> = (0..20000).map(|_| rng.sample(rand_distr::StandardNormal)).collect();
        let (hlo, hhi) = hdi(&samples, 0.95);
        let (elo, ehi) = equal_tailed(&samples, 0.95);
        assert!((hlo - elo).abs() < 0.1, "{hlo} vs {elo}");
        assert!((hhi - ehi).abs() < 0.1, "{hhi} vs {ehi}");
    }

    fn column(name: &str, origin: ColumnOrigin) -> DesignColumn {
        DesignColumn {
            name: name.to_string(),
            origin,
            parents: vec![],
        }
    }

    #[test]
    fn survivor_rules() {
        // effect `pos`: all draws > 0 -> survivor. `sym`: symmetric around 0.
        // `edge`: 6% of mass below zero -> not a survivor at 90%.
        let n = 200;
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let pos = 1.0 + (i as f64) / n as f64;
                let sym = if i % 2 == 0 { 1.0 } else { -1.0 } * ((i / 2) as f64 / n as f64);
                // 12 of 200 draws below zero = 6%
                let edge = if i < 12 { -1.0 } else { 1.0 };
                vec![pos, sym, edge]
            })
            .collect();
        let draws = draws_of(&["pos", "sym", "edge"], vec![rows]);
        let cols = vec![
            column("pos", ColumnOrigin::Linguistic),
            column("sym", ColumnOrigin::Annotator),
            column("edge", ColumnOrigin::Cross),
        ];
        let summaries = survivors(&draws, &cols, 0.90).unwrap();
        assert!(summaries[0].survivor);
        assert!(!summaries[1].survivor);
        assert!(!summaries[2].survivor, "5% quantile sits below zero");
        for s in &summaries {
            assert!(s.hdi95_lo <= s.median && s.median <= s.hdi95_hi);
            assert!(s.ci90_lo <= s.median && s.median <= s.ci90_hi);
        }
    }

    #[test]
    fn survivor_sign_symmetry() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let rows: Vec<Vec<f64>> = (0..300)
            .map(|_| {
                let x: f64 = rng.sample::<f64, _>(rand_distr::StandardNormal) + 0.8;
                vec![x, -x]
            })
            .collect();
        let draws = draws_of(&["a", "neg_a"], vec![rows]);
        let cols = vec![
            column("a", ColumnOrigin::Linguistic),
            column("neg_a", ColumnOrigin::Linguistic),
        ];
        let s = survivors(&draws, &cols, 0.9).unwrap();
        assert_eq!(s[0].survivor, s[1].survivor);
        assert!((s[0].median + s[1].median).abs() < 1e-12);
    }

    fn grid_fixture() -> (PosteriorDraws, BTreeMap<String, ContrastSpec>) {
        // 2-level characteristic with known betas: intercept 2, beta_L 0.3,
        // beta_S.L with contrast weights ±1/sqrt(2), beta_int 0.2.
        let s2 = 1.0 / 2.0f64.sqrt();
        let names = ["intercept", "f", "char.L", "char.L:f"];
        let rows: Vec<Vec<f64>> = (0..50).map(|_| vec![2.0, 0.3, 1.0, 0.2]).collect();
        let draws = draws_of(&names, vec![rows]);
        let mut contrasts = BTreeMap::new();
        contrasts.insert(
            "char".to_string(),
            ContrastSpec {
                characteristic: "char".to_string(),
                coding: crate::design::ContrastCoding::OrthogonalPolynomial,
                levels: vec!["lo".to_string(), "hi".to_string()],
                columns: vec!["char.L".to_string()],
                matrix: vec![vec![-s2], vec![s2]],
            },
        );
        (draws, contrasts)
    }

    #[test]
    fn grid_closed_form() {
        let (draws, contrasts) = grid_fixture();
        let grid = predict_grid(&draws, &contrasts, "f", "char").unwrap();
        let s2 = 1.0 / 2.0f64.sqrt();
        for p in &grid.points {
            let contrast = if p.level == "lo" { -s2 } else { s2 };
            let expect = 2.0 + p.feature_sd * 0.3 + contrast * 1.0 + p.feature_sd * contrast * 0.2;
            assert!((p.mean - expect).abs() < 1e-12, "{p:?}");
        }
        // x = 0 points are independent of beta_L, and the 9 lattice points
        // cover 3 x-values x 2 levels = 6 entries... (3 x-values, 2 levels)
        assert_eq!(grid.points.len(), 6);
    }

    #[test]
    fn grid_no_interaction_parallel_curves() {
        let (mut draws, contrasts) = grid_fixture();
        // zero out the interaction column
        for chain in &mut draws.chains {
            for d in 0..chain.n_draws() {
                let base = d * chain.n_params;
                chain.values[base + 3] = 0.0;
            }
        }
        let grid = predict_grid(&draws, &contrasts, "f", "char").unwrap();
        let at = |x: f64, level: &str| {
            grid.points
                .iter()
                .find(|p| p.feature_sd == x && p.level == level)
                .unwrap()
                .mean
        };
        let gap_minus = at(-1.0, "hi") - at(-1.0, "lo");
        let gap_zero = at(0.0, "hi") - at(0.0, "lo");
        let gap_plus = at(1.0, "hi") - at(1.0, "lo");
        assert!((gap_minus - gap_zero).abs() < 1e-12);
        assert!((gap_plus - gap_zero).abs() < 1e-12);
    }

    #[test]
    fn grid_unknown_interaction_errors() {
        let (draws, contrasts) = grid_fixture();
        assert!(predict_grid(&draws, &contrasts, "nope", "char").is_err());
        assert!(predict_grid(&draws, &contrasts, "f", "nope").is_err());
    }

    #[test]
    fn summary_csv_round_trip() {
        let summaries = vec![EffectSummary {
            name: "age.L:n_hateful".into(),
            origin: ColumnOrigin::Cross,
            median: 0.123456789,
            hdi95_lo: -0.1,
            hdi95_hi: 0.4,
            ci90_lo: 0.01,
            ci90_hi: 0.35,
            survivor: true,
        }];
        let csv = summaries_csv(&summaries);
        let back = summaries_from_csv(&csv, "summary").unwrap();
        assert_eq!(back, summaries);
    }

    #[test]
    fn report_mentions_zero_survivors_and_divergences() {
        let diagnostics = DiagnosticsReport {
            params: vec![],
            divergences: 3,
            max_treedepth_hits: 0,
            n_chains: 4,
            n_draws_per_chain: 100,
        };
        let bundle = report(&[], &[], &diagnostics);
        assert!(bundle.text.contains("No surviving effects"));
        assert!(bundle.text.contains("WARNING"));
    }

    #[test]
    fn forest_ordered_by_descending_abs_median() {
        let mk = |name: &str, median: f64| EffectSummary {
            name: name.to_string(),
            origin: ColumnOrigin::Linguistic,
            median,
            hdi95_lo: median - 0.1,
            hdi95_hi: median + 0.1,
            ci90_lo: median - 0.05,
            ci90_hi: median + 0.05,
            survivor: true,
        };
        let summaries = vec![mk("small", 0.2), mk("big", -1.5), mk("mid", 0.7)];
        let diagnostics = DiagnosticsReport {
            params: vec![],
            divergences: 0,
            max_treedepth_hits: 0,
            n_chains: 4,
            n_draws_per_chain: 100,
        };
        let bundle = report(&summaries, &[], &diagnostics);
        let lines: Vec<&str> = bundle.forest_csv.lines().skip(1).collect();
        assert!(lines[0].starts_with("big,"));
        assert!(lines[1].starts_with("mid,"));
        assert!(lines[2].starts_with("small,"));
    }
}
