//! Acceptance suite: one test per criterion, each printing a PASS line on
//! success (run with `-- --nocapture` to see them). Criterion 8 (byte-level
//! pipeline determinism) lives in the CLI crate's acceptance suite, next to
//! the binary it drives.

use annostat::corpus::{AnnotationRecord, AnnotatorId, AnnotatorProfile, CharacteristicType, ItemId, Schema};
use annostat::design::{build_design, count_effects, effect_count_formula, encoded_width, ColumnOrigin, DesignColumn};
use annostat::hsmlm::{
    diagnostics, grad_log_posterior, log_posterior, nuts_sample, nuts_sample_target, ChainDraws,
    LogDensity, ModelPriors, PosteriorDraws, SamplerConfig,
};
use annostat::lexfeat::{
    extract_features, parse_category_lexicon, parse_value_lexicon, tokenize, FeatureMatrix,
    LexiconSet,
};
use annostat::posterior::survivors;
use annostat::select::{
    apply_selection, correlation_matrix, partition_by_threshold, single_linkage_clusters,
};
use annostat::simcheck::{effect_names, generate, recovery_report, sbc, SbcConfig, SyntheticSpec};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

// ---------------------------------------------------------------------------
// 1. Gradient oracle
// ---------------------------------------------------------------------------

#[test]
fn criterion_1_gradient_oracle() {
    let started = std::time::Instant::now();
    let spec = SyntheticSpec {
        n_annotators: 5,
        n_items: 8,
        n_annotations: 40,
        p: 10,
        intercept: 2.0,
        support: vec![0, 5],
        magnitudes: vec![0.8, -0.4],
        sigma_a: 0.4,
        sigma_i: 0.3,
        sigma: 1.0,
        seed: 90,
    };
    let (data, _) = generate(&spec).unwrap();
    let priors = ModelPriors::default();
    let dim = 2 * data.p + data.n_annotators + data.n_items + 6;
    let mut rng = ChaCha8Rng::seed_from_u64(1234);
    let h = 1e-5;
    for point in 0..20 {
        let params: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.5..1.5)).collect();
        let grad = grad_log_posterior(&params, &data, &priors).unwrap();
        for d in 0..dim {
            let mut plus = params.clone();
            plus[d] += h;
            let mut minus = params.clone();
            minus[d] -= h;
            let fd = (log_posterior(&plus, &data, &priors).unwrap()
                - log_posterior(&minus, &data, &priors).unwrap())
                / (2.0 * h);
            let denom = fd.abs().max(grad[d].abs()).max(1e-8);
            let rel = (fd - grad[d]).abs() / denom;
            assert!(
                rel < 1e-5,
                "point {point}, component {d}: relative error {rel:.2e} (analytic {}, fd {fd})",
                grad[d]
            );
        }
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 10, "took {elapsed:?}, budget 10 s");
    println!("ACCEPTANCE 1 (gradient oracle, 20 points, rel err < 1e-5): PASS in {elapsed:?}");
}

// ---------------------------------------------------------------------------
// 2. Conjugate oracle
// ---------------------------------------------------------------------------

struct ConjugateNormal {
    y: Vec<f64>,
}

impl LogDensity for ConjugateNormal {
    fn dim(&self) -> usize {
        1
    }

    fn logp_grad(&self, position: &[f64], grad: &mut [f64]) -> Option<f64> {
        let mu = position[0];
        let mut logp = -0.5 * mu * mu;
        let mut g = -mu;
        for &y in &self.y {
            let r = y - mu;
            logp += -0.5 * r * r;
            g += r;
        }
        grad[0] = g;
        Some(logp)
    }
}

#[test]
fn criterion_2_conjugate_oracle() {
    let started = std::time::Instant::now();
    // y ~ Normal(mu, 1), mu ~ Normal(0, 1): posterior is
    // Normal(n*ybar/(n+1), 1/sqrt(n+1)).
    let y: Vec<f64> = vec![0.3, -1.2, 0.8, 2.1, 0.0, 1.4, -0.5, 0.9, 1.1, 0.2];
    let n = y.len() as f64;
    let ybar = annostat::math::mean(&y);
    let post_mean = n * ybar / (n + 1.0);
    let post_sd = 1.0 / (n + 1.0f64).sqrt();
    for seed in 0..5u64 {
        let config = SamplerConfig {
            chains: 4,
            warmup: 500,
            draws_per_chain: 1000,
            target_accept: 0.8,
            max_treedepth: 10,
            seed,
            init_jitter: 2.0,
        };
        let target = ConjugateNormal { y: y.clone() };
        let raw = nuts_sample_target(&target, &config).unwrap();
        let draws = PosteriorDraws {
            names: vec!["mu".into()],
            chains: raw
                .chains
                .iter()
                .map(|c| ChainDraws {
                    n_params: 1,
                    values: c.positions.clone(),
                    stats: c.stats.clone(),
                })
                .collect(),
        };
        let ess = diagnostics(&draws).params[0].ess_bulk;
        let pooled = draws.pooled(0);
        let mean = annostat::math::mean(&pooled);
        let sd = annostat::math::sd_sample(&pooled);
        let se_mean = post_sd / ess.sqrt();
        let se_sd = post_sd / (2.0 * (ess - 1.0)).sqrt();
        assert!(
            (mean - post_mean).abs() < 3.0 * se_mean,
            "seed {seed}: mean {mean} vs {post_mean} (3 MCSE {})",
            3.0 * se_mean
        );
        assert!(
            (sd - post_sd).abs() < 3.0 * se_sd,
            "seed {seed}: sd {sd} vs {post_sd} (3 MCSE {})",
            3.0 * se_sd
        );
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 60, "took {elapsed:?}, budget 1 min");
    println!("ACCEPTANCE 2 (conjugate oracle, 5 seeds, 3 MCSE): PASS in {elapsed:?}");
}

// ---------------------------------------------------------------------------
// 3. Sparse recovery
// ---------------------------------------------------------------------------

#[test]
fn criterion_3_sparse_recovery() {
    let started = std::time::Instant::now();
    let names = effect_names(50);
    let columns: Vec<DesignColumn> = names
        .iter()
        .map(|name| DesignColumn {
            name: name.clone(),
            origin: ColumnOrigin::Linguistic,
            parents: vec![],
        })
        .collect();
    let mut total_fp = 0usize;
    for seed in 1..=3u64 {
        let spec = SyntheticSpec {
            n_annotators: 200,
            n_items: 200,
            n_annotations: 2000,
            p: 50,
            intercept: 3.0,
            support: vec![3, 12, 25, 33, 47],
            magnitudes: vec![0.5, -0.5, 0.5, -0.5, 0.5],
            sigma_a: 0.3,
            sigma_i: 0.3,
            sigma: 1.0,
            seed,
        };
        let (data, truth) = generate(&spec).unwrap();
        let config = SamplerConfig {
            chains: 4,
            warmup: 500,
            draws_per_chain: 500,
            target_accept: 0.95,
            max_treedepth: 10,
            seed: 100 + seed,
            init_jitter: 2.0,
        };
        let fit = nuts_sample(&data, &ModelPriors::default(), &config, &names).unwrap();
        let summaries = survivors(&fit.draws, &columns, 0.90).unwrap();
        let report = recovery_report(&summaries, &truth).unwrap();
        eprintln!(
            "seed {seed}: {}/5 true effects recovered, {} false positives",
            report.true_positives, report.false_positives
        );
        assert!(
            report.true_positives >= 4,
            "seed {seed}: only {}/5 true effects recovered",
            report.true_positives
        );
        total_fp += report.false_positives;
    }
    let avg_fp = total_fp as f64 / 3.0;
    assert!(avg_fp <= 2.0, "average false positives {avg_fp} > 2");
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 1800, "took {elapsed:?}, budget 30 min");
    println!(
        "ACCEPTANCE 3 (sparse recovery, 3 seeds, >=4/5 TP, avg FP {avg_fp:.2} <= 2): PASS in {elapsed:?}"
    );
}

// ---------------------------------------------------------------------------
// 4. Simulation-based calibration
// ---------------------------------------------------------------------------

#[test]
fn criterion_4_sbc() {
    let started = std::time::Instant::now();
    let config = SbcConfig {
        n_sims: 200,
        seed: 20260808,
        ..SbcConfig::default()
    };
    let report = sbc(&config).unwrap();
    for (name, (stat, p)) in &report.chi2 {
        eprintln!("sbc {name}: chi2 {stat:.2}, p {p:.4}");
        assert!(*p > 0.01, "{name}: rank uniformity rejected (chi2 {stat:.2}, p {p:.4})");
    }
    assert!(report.n_excluded < 20, "{} of 200 fits excluded", report.n_excluded);
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 1200, "took {elapsed:?}, budget 20 min");
    println!(
        "ACCEPTANCE 4 (SBC, 200 sims, chi2 p > 0.01 for intercept/sigma/sd_annotator/sd_item): PASS in {elapsed:?}"
    );
}

// ---------------------------------------------------------------------------
// 5. Feature golden suite
// ---------------------------------------------------------------------------

fn single_feature_row(text: &str, lexicons: &LexiconSet) -> FeatureMatrix {
    let items = vec![tokenize(ItemId::from("t"), text)];
    extract_features(&items, lexicons).unwrap()
}

fn value_of(matrix: &FeatureMatrix, name: &str) -> f64 {
    matrix.get(0, matrix.column_index(name).unwrap_or_else(|| panic!("feature {name}")))
}

#[test]
fn criterion_5_feature_golden_suite() {
    let close = |actual: f64, expected: f64, what: &str| {
        assert!(
            (actual - expected).abs() < 1e-10,
            "{what}: got {actual}, expected {expected}"
        );
    };
    let none = LexiconSet::default();

    // --- readability: three fixtures with hand-counted quantities ---------
    // R1: 6 words, 1 sentence, 6 syllables, 17 letters, 0 polysyllables,
    //     0 long words.
    {
        let m = single_feature_row("The cat sat on the mat.", &none);
        let (w, s, sy, chars, poly, long): (f64, f64, f64, f64, f64, f64) =
            (6.0, 1.0, 6.0, 17.0, 0.0, 0.0);
        close(value_of(&m, "n_syllables"), sy, "R1 n_syllables");
        close(value_of(&m, "n_monosyllables"), 6.0, "R1 n_monosyllables");
        close(value_of(&m, "flesch_reading_ease"), 206.835 - 1.015 * (w / s) - 84.6 * (sy / w), "R1 fre");
        close(value_of(&m, "flesch_kincaid_grade"), 0.39 * (w / s) + 11.8 * (sy / w) - 15.59, "R1 fkg");
        close(value_of(&m, "gunning_fog"), 0.4 * ((w / s) + 100.0 * (poly / w)), "R1 fog");
        close(value_of(&m, "ari"), 4.71 * (chars / w) + 0.5 * (w / s) - 21.43, "R1 ari");
        close(value_of(&m, "smog"), 1.0430 * (poly * 30.0 / s).sqrt() + 3.1291, "R1 smog");
        close(value_of(&m, "cli"), 0.0588 * (100.0 * chars / w) - 0.296 * (100.0 * s / w) - 15.8, "R1 cli");
        close(value_of(&m, "lix"), w / s + 100.0 * (long / w), "R1 lix");
        close(value_of(&m, "rix"), long / s, "R1 rix");
    }
    // R2: 7 words, 2 sentences, 18 syllables, 51 letters, 4 polysyllables,
    //     4 long words (beautiful/elephants/families/together).
    {
        let m = single_feature_row(
            "Beautiful elephants wander. Happy families gather together.",
            &none,
        );
        let (w, s, sy, chars, poly, long): (f64, f64, f64, f64, f64, f64) =
            (7.0, 2.0, 18.0, 51.0, 4.0, 4.0);
        close(value_of(&m, "n_syllables"), sy, "R2 n_syllables");
        close(value_of(&m, "n_polysyllables"), poly, "R2 n_polysyllables");
        close(value_of(&m, "flesch_reading_ease"), 206.835 - 1.015 * (w / s) - 84.6 * (sy / w), "R2 fre");
        close(value_of(&m, "flesch_kincaid_grade"), 0.39 * (w / s) + 11.8 * (sy / w) - 15.59, "R2 fkg");
        close(value_of(&m, "gunning_fog"), 0.4 * ((w / s) + 100.0 * (poly / w)), "R2 fog");
        close(value_of(&m, "ari"), 4.71 * (chars / w) + 0.5 * (w / s) - 21.43, "R2 ari");
        close(value_of(&m, "smog"), 1.0430 * (poly * 30.0 / s).sqrt() + 3.1291, "R2 smog");
        close(value_of(&m, "cli"), 0.0588 * (100.0 * chars / w) - 0.296 * (100.0 * s / w) - 15.8, "R2 cli");
        close(value_of(&m, "lix"), w / s + 100.0 * (long / w), "R2 lix");
        close(value_of(&m, "rix"), long / s, "R2 rix");
    }
    // R3: 7 words, 2 sentences, 8 syllables, 22 letters, 0 polysyllables.
    {
        let m = single_feature_row("Go now! Run fast, run far away.", &none);
        let (w, s, sy, chars, poly, long): (f64, f64, f64, f64, f64, f64) =
            (7.0, 2.0, 8.0, 22.0, 0.0, 0.0);
        close(value_of(&m, "n_syllables"), sy, "R3 n_syllables");
        close(value_of(&m, "flesch_reading_ease"), 206.835 - 1.015 * (w / s) - 84.6 * (sy / w), "R3 fre");
        close(value_of(&m, "flesch_kincaid_grade"), 0.39 * (w / s) + 11.8 * (sy / w) - 15.59, "R3 fkg");
        close(value_of(&m, "gunning_fog"), 0.4 * ((w / s) + 100.0 * (poly / w)), "R3 fog");
        close(value_of(&m, "ari"), 4.71 * (chars / w) + 0.5 * (w / s) - 21.43, "R3 ari");
        close(value_of(&m, "smog"), 1.0430 * (poly * 30.0 / s).sqrt() + 3.1291, "R3 smog");
        close(value_of(&m, "cli"), 0.0588 * (100.0 * chars / w) - 0.296 * (100.0 * s / w) - 15.8, "R3 cli");
        close(value_of(&m, "lix"), w / s + 100.0 * (long / w), "R3 lix");
        close(value_of(&m, "rix"), long / s, "R3 rix");
    }

    // --- richness: three fixtures, all quantities enumerated by hand ------
    {
        // "a b a": N=3, V=2, V1=1, V2=1, sum i^2 Vi = 1 + 4 = 5.
        let m = single_feature_row("a b a", &none);
        close(value_of(&m, "ttr"), 2.0 / 3.0, "aba ttr");
        close(value_of(&m, "rttr"), 2.0 / 3.0f64.sqrt(), "aba rttr");
        close(value_of(&m, "cttr"), 2.0 / 6.0f64.sqrt(), "aba cttr");
        close(value_of(&m, "herdan_c"), 2.0f64.ln() / 3.0f64.ln(), "aba herdan_c");
        close(value_of(&m, "maas_index"), (3.0f64.ln() - 2.0f64.ln()) / 3.0f64.ln().powi(2), "aba maas");
        close(value_of(&m, "dugast_u"), 3.0f64.ln().powi(2) / (3.0f64.ln() - 2.0f64.ln()), "aba dugast");
        close(value_of(&m, "yule_k"), 1e4 * (5.0 - 3.0) / 9.0, "aba yule");
        close(value_of(&m, "herdan_v"), (5.0f64 / 9.0 - 0.5).sqrt(), "aba herdan_v");
        close(value_of(&m, "simpsons_d"), (1.0 * 2.0 * 1.0) / (3.0 * 2.0), "aba simpsons");
        close(value_of(&m, "sichel_s"), 0.5, "aba sichel");
        close(value_of(&m, "n_hapax_legomena"), 1.0, "aba hapax");
        close(value_of(&m, "n_hapax_dislegomena"), 1.0, "aba dislegomena");
        close(value_of(&m, "hdd"), 2.0, "aba hdd (N <= 42 draws everything)");
        close(value_of(&m, "mtld"), 3.0, "aba mtld");
        close(value_of(&m, "msttr"), 2.0 / 3.0, "aba msttr");
        close(value_of(&m, "mattr"), 2.0 / 3.0, "aba mattr");
    }
    {
        // "a a b b": N=4, V=2, V2=2, sum i^2 Vi = 8.
        let m = single_feature_row("a a b b", &none);
        close(value_of(&m, "ttr"), 0.5, "aabb ttr");
        close(value_of(&m, "yule_k"), 1e4 * (8.0 - 4.0) / 16.0, "aabb yule (2500)");
        close(value_of(&m, "simpsons_d"), (2.0 * 2.0 * 1.0) / (4.0 * 3.0), "aabb simpsons");
        close(value_of(&m, "sichel_s"), 1.0, "aabb sichel");
        close(value_of(&m, "herdan_v"), (8.0f64 / 16.0 - 0.5).sqrt(), "aabb herdan_v");
        close(value_of(&m, "hdd"), 2.0, "aabb hdd");
        close(value_of(&m, "mtld"), 2.0, "aabb mtld");
    }
    {
        // "x y z w": all distinct, N=V=4.
        let m = single_feature_row("x y z w", &none);
        close(value_of(&m, "ttr"), 1.0, "dist ttr");
        close(value_of(&m, "yule_k"), 0.0, "dist yule");
        close(value_of(&m, "herdan_c"), 1.0, "dist herdan_c");
        close(value_of(&m, "maas_index"), 0.0, "dist maas");
        close(value_of(&m, "simpsons_d"), 0.0, "dist simpsons");
        close(value_of(&m, "sichel_s"), 0.0, "dist sichel");
        close(value_of(&m, "n_hapax_legomena"), 4.0, "dist hapax");
        close(value_of(&m, "hdd"), 4.0, "dist hdd");
        // dugast_u divides by log N - log V = 0: emitted as 0 with a flag.
        close(value_of(&m, "dugast_u"), 0.0, "dist dugast degenerate");
    }

    // --- entropy: three fixtures ------------------------------------------
    close(value_of(&single_feature_row("a a a a", &none), "entropy"), 0.0, "entropy uniform");
    close(value_of(&single_feature_row("a b", &none), "entropy"), 1.0, "entropy two");
    close(value_of(&single_feature_row("a b a b", &none), "entropy"), 1.0, "entropy half");
    close(
        value_of(&single_feature_row("a a b b c c d d", &none), "entropy"),
        2.0,
        "entropy four symbols",
    );

    // --- sentiment_score: three fixtures -----------------------------------
    let sentiment = parse_category_lexicon("good\tpositive\nbad\tnegative\n", "s", "sentiment").unwrap();
    let with_sentiment = LexiconSet {
        sentiment: Some(sentiment),
        ..LexiconSet::default()
    };
    close(
        value_of(&single_feature_row("good plain words here", &with_sentiment), "sentiment_score"),
        0.25,
        "sentiment 1/4",
    );
    close(
        value_of(&single_feature_row("good bad", &with_sentiment), "sentiment_score"),
        0.0,
        "sentiment balanced",
    );
    close(
        value_of(&single_feature_row("bad bad plain words", &with_sentiment), "sentiment_score"),
        -0.5,
        "sentiment -1/2",
    );

    // --- thirds-based norm counts: three fixtures --------------------------
    // scale [1, 9]: low < 1 + 8/3 = 3.667, high > 1 + 16/3 = 6.333.
    let lex = |entries: &str| LexiconSet {
        values: vec![parse_value_lexicon(
            &format!("# scale_min = 1\n# scale_max = 9\n{entries}"),
            "lex",
            "aoa",
        )
        .unwrap()],
        ..LexiconSet::default()
    };
    {
        let m = single_feature_row("low high other", &lex("low\t2\nhigh\t8\n"));
        close(value_of(&m, "n_high_aoa"), 1.0, "thirds n_high");
        close(value_of(&m, "n_low_aoa"), 1.0, "thirds n_low");
        close(value_of(&m, "avg_aoa"), 5.0, "thirds avg");
    }
    {
        // 6.5 > 1 + 2*(9-1)/3 = 6.333 counts as high; 6.0 does not;
        // 3.5 < 1 + (9-1)/3 = 3.667 counts as low.
        let m = single_feature_row("edge under third", &lex("edge\t6.5\nunder\t6.0\nthird\t3.5\n"));
        close(value_of(&m, "n_high_aoa"), 1.0, "boundary n_high");
        close(value_of(&m, "n_low_aoa"), 1.0, "boundary n_low");
        close(value_of(&m, "avg_aoa"), (6.5 + 6.0 + 3.5) / 3.0, "boundary avg");
    }
    {
        // no matches: counts 0, avg = scale midpoint, item flagged.
        let items = vec![tokenize(ItemId::from("t"), "nothing matches")];
        let m = extract_features(&items, &lex("other\t5\n")).unwrap();
        close(value_of(&m, "n_high_aoa"), 0.0, "nomatch n_high");
        close(value_of(&m, "n_low_aoa"), 0.0, "nomatch n_low");
        close(value_of(&m, "avg_aoa"), 5.0, "nomatch avg = midpoint");
        assert!(m
            .flags
            .get(&ItemId::from("t"))
            .is_some_and(|f| f.contains("norm_no_match:aoa")));
    }

    println!("ACCEPTANCE 5 (feature golden suite, hand-derived values at 1e-10): PASS");
}

// ---------------------------------------------------------------------------
// 6. Effect-count property
// ---------------------------------------------------------------------------

#[test]
fn criterion_6_effect_count_property() {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    for fixture in 0..10 {
        let n_features = rng.random_range(1..=5usize);
        let n_chars = rng.random_range(0..=3usize);
        let mut characteristics = Vec::new();
        for c in 0..n_chars {
            let name = format!("char{c}");
            let ty = match rng.random_range(0..3u8) {
                0 => {
                    let k = rng.random_range(2..=4usize);
                    let levels: Vec<String> = (0..k).map(|l| format!("lv{l}")).collect();
                    CharacteristicType::Nominal {
                        reference: levels[0].clone(),
                        levels,
                    }
                }
                1 => {
                    let k = rng.random_range(2..=5usize);
                    CharacteristicType::Ordinal {
                        levels: (0..k).map(|l| format!("lv{l}")).collect(),
                    }
                }
                _ => CharacteristicType::Interval,
            };
            characteristics.push((name, ty));
        }
        let widths: Vec<usize> = characteristics.iter().map(|(_, t)| encoded_width(t)).collect();
        let schema = Schema {
            scale: 5,
            characteristics: characteristics.clone(),
            pna_tokens: vec![],
            multi_delimiter: ';',
        };

        // Annotators covering the full level grid so every encoding column
        // is realized.
        let mut combos: Vec<Vec<String>> = vec![vec![]];
        for (_, ty) in &characteristics {
            let levels: Vec<String> = match ty {
                CharacteristicType::Nominal { levels, .. } => levels.clone(),
                CharacteristicType::Ordinal { levels } => levels.clone(),
                CharacteristicType::Interval => {
                    (0..3).map(|i| format!("{}", i as f64 + 0.5)).collect()
                }
            };
            combos = combos
                .into_iter()
                .flat_map(|prefix| {
                    levels.iter().map(move |l| {
                        let mut next = prefix.clone();
                        next.push(l.clone());
                        next
                    })
                })
                .collect();
        }
        let profiles: Vec<AnnotatorProfile> = combos
            .iter()
            .enumerate()
            .map(|(i, combo)| AnnotatorProfile {
                annotator_id: AnnotatorId(format!("a{i}")),
                characteristics: characteristics
                    .iter()
                    .zip(combo)
                    .map(|((n, _), v)| (n.clone(), v.clone()))
                    .collect(),
            })
            .collect();

        let n_items = rng.random_range(2..=4usize);
        let features = FeatureMatrix::new_raw(
            (0..n_items).map(|i| ItemId(format!("i{i}"))).collect(),
            (0..n_features).map(|f| format!("f{f}")).collect(),
            (0..n_items * n_features)
                .map(|_| rng.random_range(-1.0..1.0))
                .collect(),
            Default::default(),
        );
        let annotations: Vec<AnnotationRecord> = profiles
            .iter()
            .flat_map(|p| {
                (0..n_items).map(move |i| AnnotationRecord {
                    item_id: ItemId(format!("i{i}")),
                    annotator_id: p.annotator_id.clone(),
                    label: 1 + (i as u32 % 5),
                })
            })
            .collect();
        let design = build_design(&features, &profiles, &schema, &annotations).unwrap();
        let expected = effect_count_formula(n_features, &widths);
        assert_eq!(
            count_effects(&design),
            expected,
            "fixture {fixture}: |L|={n_features}, widths {widths:?}"
        );
    }
    println!("ACCEPTANCE 6 (effect-count formula on 10 randomized schemas): PASS");
}

/// Optional real-data anchor: set ANNOSTAT_POPQUORN_DESIGN_META to the
/// design_meta.json of a pipeline run on the real POPQUORN inputs.
#[test]
#[ignore = "requires the real POPQUORN dataset (not bundled)"]
fn criterion_6_popquorn_effect_count_anchor() {
    let path = std::env::var("ANNOSTAT_POPQUORN_DESIGN_META")
        .expect("set ANNOSTAT_POPQUORN_DESIGN_META to run the real-data suite");
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    let columns = meta["columns"].as_array().unwrap();
    assert_eq!(columns.len(), 455);
}

// ---------------------------------------------------------------------------
// 7. Selection properties
// ---------------------------------------------------------------------------

#[test]
fn criterion_7_selection_properties() {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    for trial in 0..100 {
        let n_items = rng.random_range(20..=40usize);
        let n_base = rng.random_range(2..=4usize);
        let n_features = rng.random_range(4..=9usize);
        // Features are noisy mixtures of a few latent columns, which yields
        // a mix of strongly and weakly correlated pairs.
        let latents: Vec<Vec<f64>> = (0..n_base)
            .map(|_| (0..n_items).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let mut values = vec![0.0; n_items * n_features];
        for f in 0..n_features {
            let base = &latents[rng.random_range(0..n_base)];
            let noise = rng.random_range(0.05..1.5);
            for i in 0..n_items {
                values[i * n_features + f] = base[i] + noise * rng.random_range(-1.0..1.0);
            }
        }
        let matrix = FeatureMatrix::new_raw(
            (0..n_items).map(|i| ItemId(format!("i{i}"))).collect(),
            (0..n_features).map(|f| format!("f{f}")).collect(),
            values,
            Default::default(),
        );
        let corr = correlation_matrix(&matrix).unwrap();
        let (independent, clustered) = partition_by_threshold(&corr, 0.5);
        assert_eq!(independent.len() + clustered.len(), n_features, "partition covers all");

        let report = if clustered.len() >= 2 {
            let idx: Vec<usize> = clustered
                .iter()
                .map(|n| corr.names.iter().position(|c| c == n).unwrap())
                .collect();
            single_linkage_clusters(&corr.subset(&idx), 0.5)
        } else {
            annostat::select::ClusterReport {
                clusters: clustered.iter().map(|n| vec![n.clone()]).collect(),
                cut_distance: 0.5,
                picks: vec![None; clustered.len()],
            }
        };
        // pick the first member of every cluster
        let mut picked = report.clone();
        for (i, members) in report.clusters.iter().enumerate() {
            picked.picks[i] = Some(members[0].clone());
        }
        let (reduced, _) = apply_selection(&matrix, &picked, &independent).unwrap();

        // exactly one representative per cluster
        for (i, members) in picked.clusters.iter().enumerate() {
            let kept: Vec<&String> =
                members.iter().filter(|m| reduced.names.contains(m)).collect();
            assert_eq!(kept.len(), 1, "trial {trial}: cluster {i} kept {kept:?}");
        }
        // independent features pairwise below the threshold, exactly as
        // partitioned
        for a in &independent {
            let ia = corr.names.iter().position(|n| n == a).unwrap();
            for b in &independent {
                if a < b {
                    let ib = corr.names.iter().position(|n| n == b).unwrap();
                    assert!(
                        corr.get(ia, ib).abs() < 0.5,
                        "trial {trial}: independent pair ({a}, {b}) correlates at {}",
                        corr.get(ia, ib)
                    );
                }
            }
        }
    }
    println!("ACCEPTANCE 7 (selection properties, 100 randomized trials): PASS");
}

// ---------------------------------------------------------------------------
// 9. Sampler shape semantics
// ---------------------------------------------------------------------------

#[test]
fn criterion_9_sampler_shape() {
    // Paper-settings arithmetic: 4 chains x 7,500 post-warmup draws pool to
    // 30,000 samples for consideration, with 2,000 warmup iterations
    // discarded per chain.
    let paper = SamplerConfig::paper_defaults(0);
    assert_eq!(paper.chains, 4);
    assert_eq!(paper.warmup, 2000);
    assert_eq!(paper.draws_per_chain, 7500);
    assert_eq!(paper.pooled_draws(), 30_000);

    // Reduced run with the same shape: 4 chains x 500 = 2,000 pooled draws,
    // warmup discarded exactly.
    let spec = SyntheticSpec {
        n_annotators: 5,
        n_items: 5,
        n_annotations: 25,
        p: 2,
        intercept: 3.0,
        support: vec![0],
        magnitudes: vec![0.6],
        sigma_a: 0.2,
        sigma_i: 0.2,
        sigma: 0.8,
        seed: 9,
    };
    let (data, _) = generate(&spec).unwrap();
    let config = SamplerConfig {
        chains: 4,
        warmup: 150,
        draws_per_chain: 500,
        target_accept: 0.85,
        max_treedepth: 10,
        seed: 90,
        init_jitter: 2.0,
    };
    let fit = nuts_sample(&data, &ModelPriors::default(), &config, &effect_names(2)).unwrap();
    assert_eq!(fit.draws.n_chains(), 4);
    for chain in &fit.draws.chains {
        assert_eq!(chain.n_draws(), 500);
    }
    assert_eq!(fit.draws.n_pooled(), 2000);
    println!("ACCEPTANCE 9 (4 chains, warmup discard, 4 x draws pooling): PASS");
}
