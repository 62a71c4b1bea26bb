//! Stage implementations. Every stage reads its inputs from disk (the
//! original files or prior stage outputs), writes its artifacts under the
//! output directory, and records a deterministic manifest. Wall-clock
//! timing goes to `run.log` only, which is the one non-reproducible file.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::time::Duration;

use annostat::corpus::{self, Dataset, Schema};
use annostat::design::{build_design, count_effects, drop_constant_columns, ColumnOrigin, DesignMatrix};
use annostat::hsmlm::{diagnostics, fit_chain, ModelPriors, PosteriorDraws, SamplerConfig};
use annostat::lexfeat::{
    self, default_count_features, extract_features_with, FeatureMatrix, LexiconSet,
    SuiteSelection, TokenizedItem,
};
use annostat::posterior::{
    predict_grid, report as build_report, summaries_from_csv, survivors, PredictionGrid,
};
use annostat::select::{
    apply_selection, correlation_matrix, partition_by_threshold, single_linkage_clusters,
    ClusterReport,
};
use annostat::simcheck::{effect_names, generate, recovery_report, sbc, SbcConfig, SyntheticSpec};

use crate::config::{RunConfig, ScenarioKind};
use crate::CliError;

pub struct Ctx {
    config: RunConfig,
    seed: u64,
    out: PathBuf,
    scenario: ScenarioKind,
}

impl Ctx {
    pub fn new(
        config: RunConfig,
        seed: u64,
        out: PathBuf,
        scenario: ScenarioKind,
    ) -> Result<Ctx, CliError> {
        std::fs::create_dir_all(&out)?;
        Ok(Ctx {
            config,
            seed,
            out,
            scenario,
        })
    }

    fn read(&self, path: &Path) -> Result<String, CliError> {
        std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
    }

    fn read_stage(&self, rel: &str, produced_by: &str) -> Result<String, CliError> {
        let path = self.out.join(rel);
        std::fs::read_to_string(&path).map_err(|_| {
            CliError::Usage(format!(
                "missing stage output {}; run the `{produced_by}` stage first",
                path.display()
            ))
        })
    }

    fn write(&self, rel: &str, contents: &str) -> Result<(), CliError> {
        let path = self.out.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(&path, contents)?;
        Ok(())
    }

    fn write_manifest(&self, stage: &str, extra: serde_json::Value) -> Result<(), CliError> {
        let manifest = serde_json::json!({
            "stage": stage,
            "tool_version": env!("CARGO_PKG_VERSION"),
            "config_hash": self.config.config_hash(self.seed),
            "seed": self.seed,
            "scenario": scenario_name(self.scenario),
            "details": extra,
        });
        self.write(
            &format!("{stage}/manifest.json"),
            &format!("{}\n", serde_json::to_string_pretty(&manifest).expect("manifest serializes")),
        )
    }

    /// Wall-clock log; deliberately outside the reproducible artifact set.
    pub fn log_run(&self, stage: &str, elapsed: Duration) {
        use std::io::Write;
        if let Ok(mut f) = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(self.out.join("run.log"))
        {
            let _ = writeln!(f, "{stage}\t{}ms", elapsed.as_millis());
        }
    }

    fn schema(&self) -> Result<Schema, CliError> {
        let src = self.read(&self.config.paths.schema)?;
        Ok(corpus::parse_schema(&src, &self.config.paths.schema.display().to_string())?)
    }

    fn load_raw_dataset(&self, schema: &Schema) -> Result<Dataset, CliError> {
        let annotations = self.read(&self.config.paths.annotations)?;
        let profiles = self.read(&self.config.paths.profiles)?;
        let items = self.read(&self.config.paths.items)?;
        Ok(corpus::load_dataset(&annotations, &profiles, &items, schema)?)
    }

    fn lexicons(&self) -> Result<LexiconSet, CliError> {
        let mut set = LexiconSet::default();
        let stem = |p: &Path| {
            p.file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "lexicon".to_string())
        };
        for p in &self.config.paths.value_lexicons {
            set.values.push(lexfeat::parse_value_lexicon(
                &self.read(p)?,
                &p.display().to_string(),
                &stem(p),
            )?);
        }
        for p in &self.config.paths.emotion_lexicons {
            set.emotions.push(lexfeat::parse_value_lexicon(
                &self.read(p)?,
                &p.display().to_string(),
                &stem(p),
            )?);
        }
        if let Some(p) = &self.config.paths.sentiment_lexicon {
            set.sentiment = Some(lexfeat::parse_category_lexicon(
                &self.read(p)?,
                &p.display().to_string(),
                &stem(p),
            )?);
        }
        for p in &self.config.paths.domain_lexicons {
            set.domains.push(lexfeat::parse_category_lexicon(
                &self.read(p)?,
                &p.display().to_string(),
                &stem(p),
            )?);
        }
        for p in &self.config.paths.synset_lexicons {
            set.synsets.push(lexfeat::parse_value_lexicon(
                &self.read(p)?,
                &p.display().to_string(),
                &stem(p),
            )?);
        }
        if let Some(p) = &self.config.paths.hedges {
            set.hedges = lexfeat::parse_hedges(&self.read(p)?);
        }
        Ok(set)
    }

    fn labels(&self) -> Vec<String> {
        match self.scenario {
            ScenarioKind::Full => vec!["full".to_string()],
            ScenarioKind::AnnotatorSplit => vec!["half1".to_string(), "half2".to_string()],
            ScenarioKind::BatchSubsets => (1..=self.config.scenario.n_subsets)
                .map(|i| format!("subset{i:02}"))
                .collect(),
        }
    }

    fn load_label_dataset(&self, label: &str, schema: &Schema) -> Result<Dataset, CliError> {
        let annotations = self.read_stage(&format!("preprocess/{label}/annotations.csv"), "preprocess")?;
        let profiles = self.read_stage(&format!("preprocess/{label}/profiles.csv"), "preprocess")?;
        let items = self.read_stage(&format!("preprocess/{label}/items.csv"), "preprocess")?;
        Ok(corpus::load_dataset(&annotations, &profiles, &items, schema)?)
    }

    fn write_dataset(&self, rel_dir: &str, ds: &Dataset) -> Result<(), CliError> {
        self.write(&format!("{rel_dir}/annotations.csv"), &ds.annotations_csv())?;
        self.write(&format!("{rel_dir}/profiles.csv"), &ds.profiles_csv())?;
        self.write(&format!("{rel_dir}/items.csv"), &ds.items_csv())?;
        let summary = ds.summarize();
        self.write(
            &format!("{rel_dir}/summary.json"),
            &format!("{}\n", serde_json::to_string_pretty(&summary).expect("summary serializes")),
        )
    }

    // ---- stages -----------------------------------------------------------

    pub fn validate(&self) -> Result<(), CliError> {
        self.config.validate_paths()?;
        let schema = self.schema()?;
        let ds = self.load_raw_dataset(&schema)?;
        ds.check_integrity()?;
        let lexicons = self.lexicons()?;
        if let Some(p) = &self.config.paths.recode_maps {
            corpus::parse_recode_maps(
                &self.read(p)?,
                &p.display().to_string(),
                schema.multi_delimiter,
            )?;
        }
        let mut conllu_items = 0usize;
        if let Some(p) = &self.config.paths.conllu {
            let items = lexfeat::ingest_conllu(&self.read(p)?, &p.display().to_string())?;
            let have: BTreeSet<&str> = items.iter().map(|i| i.item_id.0.as_str()).collect();
            for item in &ds.items {
                if !have.contains(item.item_id.0.as_str()) {
                    return Err(CliError::Data(format!(
                        "item {} missing from the CoNLL-U file",
                        item.item_id
                    )));
                }
            }
            conllu_items = items.len();
        }
        let summary = ds.summarize();
        eprintln!(
            "validate: {} items, {} annotators, {} annotations, scale 1..={}",
            summary.n_items, summary.n_annotators, summary.n_annotations, schema.scale
        );
        self.write(
            "validate/validation.json",
            &format!(
                "{}\n",
                serde_json::to_string_pretty(&serde_json::json!({
                    "summary": summary,
                    "scale": schema.scale,
                    "characteristics": schema.characteristics.len(),
                    "value_lexicons": lexicons.values.len(),
                    "emotion_lexicons": lexicons.emotions.len(),
                    "domain_lexicons": lexicons.domains.len(),
                    "conllu_items": conllu_items,
                }))
                .expect("json serializes")
            ),
        )?;
        self.write_manifest("validate", serde_json::json!({}))
    }

    pub fn preprocess(&self) -> Result<(), CliError> {
        let schema = self.schema()?;
        let ds = self.load_raw_dataset(&schema)?;
        let ds = ds.drop_conflicting_annotators();
        let pna = self
            .config
            .preprocess
            .pna_tokens
            .clone()
            .unwrap_or_else(|| schema.pna_tokens.clone());
        let ds = ds.drop_missing_and_pna(&pna);
        let ds = match &self.config.paths.recode_maps {
            Some(p) => {
                let maps = corpus::parse_recode_maps(
                    &self.read(p)?,
                    &p.display().to_string(),
                    schema.multi_delimiter,
                )?;
                ds.recode(&maps)?
            }
            None => ds,
        };
        let mut ds = ds;
        for characteristic in &self.config.preprocess.multi_membership {
            ds = ds.drop_multi_membership(characteristic);
        }
        let ds = ds.filter_by_participation(
            self.config.preprocess.min_items_per_annotator,
            self.config.preprocess.min_annotators_per_item,
        );
        ds.check_integrity()?;
        self.write_dataset("preprocess/full", &ds)?;

        let mut warnings: Vec<String> = Vec::new();
        match self.scenario {
            ScenarioKind::Full => {}
            ScenarioKind::AnnotatorSplit => {
                let (h1, h2) = ds.split_annotators(self.config.scenario.fraction, self.seed);
                self.write_dataset("preprocess/half1", &h1)?;
                self.write_dataset("preprocess/half2", &h2)?;
            }
            ScenarioKind::BatchSubsets => {
                let (subsets, warn) = ds.batch_subsets(
                    self.config.scenario.subset_size,
                    self.config.scenario.n_subsets,
                    self.seed,
                );
                warnings = warn;
                for (i, subset) in subsets.iter().enumerate() {
                    self.write_dataset(&format!("preprocess/subset{:02}", i + 1), subset)?;
                }
                if subsets.len() < self.config.scenario.n_subsets {
                    eprintln!(
                        "preprocess: only {} of {} requested subsets available",
                        subsets.len(),
                        self.config.scenario.n_subsets
                    );
                }
            }
        }
        for w in &warnings {
            eprintln!("preprocess warning: {w}");
        }
        self.write_manifest(
            "preprocess",
            serde_json::json!({
                "summary": ds.summarize(),
                "warnings": warnings,
                "thresholds": {
                    "min_items_per_annotator": self.config.preprocess.min_items_per_annotator,
                    "min_annotators_per_item": self.config.preprocess.min_annotators_per_item,
                },
            }),
        )
    }

    fn tokenized_items(&self, ds: &Dataset) -> Result<Vec<TokenizedItem>, CliError> {
        match &self.config.paths.conllu {
            Some(p) => {
                let all = lexfeat::ingest_conllu(&self.read(p)?, &p.display().to_string())?;
                let wanted: BTreeSet<&str> = ds.items.iter().map(|i| i.item_id.0.as_str()).collect();
                let mut by_id: std::collections::BTreeMap<&str, &TokenizedItem> =
                    all.iter().map(|t| (t.item_id.0.as_str(), t)).collect();
                let mut out = Vec::with_capacity(ds.items.len());
                for item in &ds.items {
                    match by_id.remove(item.item_id.0.as_str()) {
                        Some(t) => out.push(t.clone()),
                        None => {
                            return Err(CliError::Data(format!(
                                "item {} missing from the CoNLL-U file",
                                item.item_id
                            )))
                        }
                    }
                }
                let _ = wanted;
                Ok(out)
            }
            None => Ok(ds
                .items
                .iter()
                .map(|i| lexfeat::tokenize(i.item_id.clone(), &i.text))
                .collect()),
        }
    }

    pub fn features(&self) -> Result<(), CliError> {
        let schema = self.schema()?;
        let ds = self.load_label_dataset("full", &schema)?;
        let lexicons = self.lexicons()?;
        let items = self.tokenized_items(&ds)?;
        let suites = SuiteSelection::from_names(&self.config.features.suites)?;
        let raw = extract_features_with(&items, &lexicons, suites)?;
        let counts = default_count_features(&raw.names);
        let normalized = raw.normalize_counts(&counts)?;
        let (standardized, dropped) = normalized.standardize()?;
        self.write("features/features.tsv", &standardized.to_tsv())?;
        self.write(
            "features/features_meta.json",
            &format!("{}\n", serde_json::to_string_pretty(&standardized.metadata_json()).expect("json")),
        )?;
        self.write(
            "features/dropped_constant.txt",
            &(dropped.join("\n") + "\n"),
        )?;
        self.write_manifest(
            "features",
            serde_json::json!({
                "n_items": standardized.n_items(),
                "n_features": standardized.n_features(),
                "dropped_constant": dropped,
                "normalized_counts": counts.iter().cloned().collect::<Vec<_>>(),
            }),
        )
    }

    fn load_features(&self, rel: &str) -> Result<FeatureMatrix, CliError> {
        let tsv = self.read_stage(&format!("{rel}.tsv"), "features")?;
        let meta: serde_json::Value =
            serde_json::from_str(&self.read_stage(&format!("{rel}_meta.json"), "features")?)
                .map_err(|e| CliError::Data(format!("bad feature metadata: {e}")))?;
        Ok(FeatureMatrix::from_tsv(&tsv, &meta, &format!("{rel}.tsv"))?)
    }

    pub fn select(&self) -> Result<(), CliError> {
        let features = self.load_features("features/features")?;
        let corr = correlation_matrix(&features)?;
        let (independent, clustered) = partition_by_threshold(&corr, self.config.select.threshold);
        let report = if clustered.len() >= 2 {
            let idx: Vec<usize> = clustered
                .iter()
                .map(|n| corr.names.iter().position(|c| c == n).expect("clustered name"))
                .collect();
            single_linkage_clusters(&corr.subset(&idx), self.config.select.cut_distance)
        } else {
            ClusterReport {
                clusters: clustered.iter().map(|n| vec![n.clone()]).collect(),
                cut_distance: self.config.select.cut_distance,
                picks: clustered.iter().map(|n| Some(n.clone())).collect(),
            }
        };
        self.write("select/independent.txt", &(independent.join("\n") + "\n"))?;
        self.write("select/clusters.txt", &report.to_text())?;
        self.write(
            "select/clusters.json",
            &format!("{}\n", serde_json::to_string_pretty(&report).expect("json")),
        )?;

        let report = match &self.config.paths.picks {
            Some(p) => report.with_picks(&self.read(p)?, &p.display().to_string())?,
            None => report,
        };
        let all_picked = report.picks.iter().all(Option::is_some);
        if all_picked {
            let (selected, provenance) = apply_selection(&features, &report, &independent)?;
            self.write("select/selected.tsv", &selected.to_tsv())?;
            self.write(
                "select/selected_meta.json",
                &format!("{}\n", serde_json::to_string_pretty(&selected.metadata_json()).expect("json")),
            )?;
            let mut prov = String::from("dropped,cluster,pick\n");
            for (name, cluster, pick) in &provenance {
                prov.push_str(&format!("{name},{cluster},{pick}\n"));
            }
            self.write("select/provenance.csv", &prov)?;
            eprintln!(
                "select: {} independent + {} cluster picks = {} features",
                independent.len(),
                report.clusters.len(),
                selected.n_features()
            );
        } else {
            eprintln!(
                "select: {} clusters need representative picks; inspect select/clusters.txt, \
                 write a picks file (cluster_id<TAB>feature), set paths.picks, and re-run",
                report.picks.iter().filter(|p| p.is_none()).count()
            );
        }
        self.write_manifest(
            "select",
            serde_json::json!({
                "threshold": self.config.select.threshold,
                "cut_distance": self.config.select.cut_distance,
                "n_independent": independent.len(),
                "n_clustered": clustered.len(),
                "n_clusters": report.clusters.len(),
                "selection_applied": all_picked,
            }),
        )
    }

    pub fn design(&self) -> Result<(), CliError> {
        let schema = self.schema()?;
        let selected = self.load_features("select/selected").map_err(|_| {
            CliError::Usage(
                "missing select/selected.tsv; run the `select` stage (with picks) first".into(),
            )
        })?;
        let mut details = Vec::new();
        for label in self.labels() {
            let ds = self.load_label_dataset(&label, &schema)?;
            let design = build_design(&selected, &ds.profiles, &schema, &ds.annotations)?;
            let full_count = count_effects(&design);
            let (design, dropped) = drop_constant_columns(&design);
            self.write(&format!("design/{label}/design.tsv"), &design.to_tsv())?;
            self.write(
                &format!("design/{label}/design_meta.json"),
                &format!("{}\n", serde_json::to_string_pretty(&design.metadata_json()).expect("json")),
            )?;
            self.write(
                &format!("design/{label}/dropped_constant.txt"),
                &(dropped.join("\n") + "\n"),
            )?;
            eprintln!(
                "design[{label}]: {} effects ({} before dropping constants), {} rows",
                count_effects(&design),
                full_count,
                design.n_rows()
            );
            details.push(serde_json::json!({
                "label": label,
                "effects": count_effects(&design),
                "effects_before_constant_drop": full_count,
                "rows": design.n_rows(),
                "dropped": dropped,
            }));
        }
        self.write_manifest("design", serde_json::json!({ "labels": details }))
    }

    fn load_design(&self, label: &str) -> Result<DesignMatrix, CliError> {
        let tsv = self.read_stage(&format!("design/{label}/design.tsv"), "design")?;
        let meta: serde_json::Value = serde_json::from_str(
            &self.read_stage(&format!("design/{label}/design_meta.json"), "design")?,
        )
        .map_err(|e| CliError::Data(format!("bad design metadata: {e}")))?;
        Ok(DesignMatrix::from_tsv(&tsv, &meta, &format!("design/{label}/design.tsv"))?)
    }

    fn sampler_config(&self, label: &str) -> SamplerConfig {
        SamplerConfig {
            chains: self.config.sampler.chains,
            warmup: self.config.sampler.warmup,
            draws_per_chain: self.config.sampler.draws,
            target_accept: self.config.sampler.target_accept,
            max_treedepth: self.config.sampler.max_treedepth,
            seed: self.seed ^ fnv1a(label.as_bytes()),
            init_jitter: 2.0,
        }
    }

    pub fn fit(&self) -> Result<(), CliError> {
        for label in self.labels() {
            let design = self.load_design(&label)?;
            let data = annostat::hsmlm::ModelData::from_design(&design)?;
            let sampler = self.sampler_config(&label);
            let names = design.column_names();
            let priors = ModelPriors::default();

            let mut chain_csvs: Vec<String> = Vec::with_capacity(sampler.chains);
            for chain_id in 0..sampler.chains {
                let rel = format!("fit/{label}/chain_{chain_id}.csv");
                let path = self.out.join(&rel);
                if let Some(existing) = try_load_chain(&path, sampler.draws_per_chain) {
                    eprintln!("fit[{label}]: chain {chain_id} already complete, skipping");
                    chain_csvs.push(existing);
                    continue;
                }
                let (param_names, chain) =
                    fit_chain(&data, &priors, &sampler, &names, chain_id)?;
                let draws = PosteriorDraws {
                    names: param_names,
                    chains: vec![chain],
                };
                let csv = draws.chain_csv_with_id(0, chain_id);
                self.write(&rel, &csv)?;
                chain_csvs.push(csv);
            }
            let draws = PosteriorDraws::from_chain_csvs(&chain_csvs, "fit")?;
            let report = diagnostics(&draws);
            let total: usize = draws.chains.iter().map(|c| c.stats.len()).sum();
            let divergent = draws.divergences();
            if total > 0 && (divergent as f64) > 0.1 * total as f64 {
                eprintln!(
                    "fit[{label}] WARNING: {divergent}/{total} transitions diverged (> 10%); \
                     consider target_accept >= 0.95"
                );
            }
            self.write(
                &format!("fit/{label}/diagnostics.json"),
                &format!("{}\n", serde_json::to_string_pretty(&report).expect("json")),
            )?;
            eprintln!(
                "fit[{label}]: {} pooled draws, max rhat {:.4}, min bulk ESS {:.0}, {} divergences",
                draws.n_pooled(),
                report.max_rhat(),
                report.min_ess_bulk(),
                divergent
            );
        }
        self.write_manifest(
            "fit",
            serde_json::json!({
                "sampler": self.config.sampler,
                "labels": self.labels(),
            }),
        )
    }

    fn load_draws(&self, label: &str) -> Result<PosteriorDraws, CliError> {
        let chains = self.config.sampler.chains;
        let mut csvs = Vec::with_capacity(chains);
        for chain_id in 0..chains {
            csvs.push(self.read_stage(&format!("fit/{label}/chain_{chain_id}.csv"), "fit")?);
        }
        Ok(PosteriorDraws::from_chain_csvs(&csvs, "fit")?)
    }

    pub fn summarize(&self) -> Result<(), CliError> {
        for label in self.labels() {
            let design = self.load_design(&label)?;
            let draws = self.load_draws(&label)?;
            let summaries = survivors(&draws, &design.columns, 0.90)?;
            self.write(
                &format!("summarize/{label}/summary.csv"),
                &annostat::posterior::summaries_csv(&summaries),
            )?;
            let n_survivors = summaries.iter().filter(|s| s.survivor).count();
            eprintln!("summarize[{label}]: {n_survivors} of {} effects survive", summaries.len());
        }
        self.write_manifest("summarize", serde_json::json!({ "level": 0.90 }))
    }

    pub fn predict(&self) -> Result<(), CliError> {
        for label in self.labels() {
            let design = self.load_design(&label)?;
            let draws = self.load_draws(&label)?;
            let interactions: Vec<(String, String)> = if self.config.predict.interactions.is_empty()
            {
                // Default: every surviving cross-level interaction.
                let csv = self.read_stage(&format!("summarize/{label}/summary.csv"), "summarize")?;
                let summaries = summaries_from_csv(&csv, "summary.csv")?;
                let mut pairs = BTreeSet::new();
                for s in summaries.iter().filter(|s| s.survivor && s.origin == ColumnOrigin::Cross) {
                    let column = design
                        .columns
                        .iter()
                        .find(|c| c.name == s.name)
                        .ok_or_else(|| CliError::Data(format!("summary effect `{}` not in design", s.name)))?;
                    let [s_col, l_col] = &column.parents[..] else {
                        continue;
                    };
                    let characteristic = design
                        .contrasts
                        .values()
                        .find(|spec| spec.columns.contains(s_col))
                        .map(|spec| spec.characteristic.clone());
                    if let Some(characteristic) = characteristic {
                        pairs.insert((l_col.clone(), characteristic));
                    }
                }
                pairs.into_iter().collect()
            } else {
                self.config.predict.interactions.clone()
            };
            if interactions.is_empty() {
                eprintln!("predict[{label}]: no interactions to plot");
            }
            for (feature, characteristic) in &interactions {
                let grid = predict_grid(&draws, &design.contrasts, feature, characteristic)?;
                self.write(
                    &format!(
                        "predict/{label}/grid_{}_{}.csv",
                        sanitize(characteristic),
                        sanitize(feature)
                    ),
                    &annostat::posterior::grid_csv(&grid),
                )?;
            }
        }
        self.write_manifest("predict", serde_json::json!({}))
    }

    pub fn report(&self) -> Result<(), CliError> {
        for label in self.labels() {
            let csv = self.read_stage(&format!("summarize/{label}/summary.csv"), "summarize")?;
            let summaries = summaries_from_csv(&csv, "summary.csv")?;
            let diag: annostat::hsmlm::DiagnosticsReport = serde_json::from_str(
                &self.read_stage(&format!("fit/{label}/diagnostics.json"), "fit")?,
            )
            .map_err(|e| CliError::Data(format!("bad diagnostics: {e}")))?;
            // Re-emit any grids computed by the predict stage.
            let grids: Vec<PredictionGrid> = Vec::new();
            let bundle = build_report(&summaries, &grids, &diag);
            self.write(&format!("report/{label}/report.txt"), &bundle.text)?;
            self.write(&format!("report/{label}/summary.csv"), &bundle.summary_csv)?;
            self.write(&format!("report/{label}/forest.csv"), &bundle.forest_csv)?;
        }
        self.write_manifest("report", serde_json::json!({}))
    }

    pub fn simcheck(&self) -> Result<(), CliError> {
        let sc = &self.config.simcheck;
        let spec = SyntheticSpec {
            n_annotators: sc.n_annotators,
            n_items: sc.n_items,
            n_annotations: sc.n_annotations,
            p: sc.p,
            intercept: sc.intercept,
            support: sc.support.clone(),
            magnitudes: sc.magnitudes.clone(),
            sigma_a: sc.sigma_a,
            sigma_i: sc.sigma_i,
            sigma: sc.sigma,
            seed: self.seed,
        };
        let (data, truth) = generate(&spec)?;
        let sampler = self.sampler_config("simcheck");
        let names = effect_names(sc.p);
        let fit = annostat::hsmlm::nuts_sample(&data, &ModelPriors::default(), &sampler, &names)?;
        let columns: Vec<annostat::design::DesignColumn> = names
            .iter()
            .map(|name| annostat::design::DesignColumn {
                name: name.clone(),
                origin: ColumnOrigin::Linguistic,
                parents: vec![],
            })
            .collect();
        let summaries = survivors(&fit.draws, &columns, 0.90)?;
        let recovery = recovery_report(&summaries, &truth)?;
        eprintln!(
            "simcheck: {}/{} true effects recovered, {} false positives",
            recovery.true_positives, recovery.n_true_effects, recovery.false_positives
        );
        self.write(
            "simcheck/recovery.json",
            &format!("{}\n", serde_json::to_string_pretty(&recovery).expect("json")),
        )?;
        if sc.sbc_sims >= 100 {
            let report = sbc(&SbcConfig {
                n_sims: sc.sbc_sims,
                seed: self.seed,
                ..SbcConfig::default()
            })?;
            self.write(
                "simcheck/sbc.json",
                &format!("{}\n", serde_json::to_string_pretty(&report).expect("json")),
            )?;
            for (name, (stat, p)) in &report.chi2 {
                eprintln!("simcheck sbc: {name} chi2 {stat:.2} p {p:.4}");
            }
        }
        self.write_manifest("simcheck", serde_json::json!({ "spec": spec }))
    }
}

fn scenario_name(kind: ScenarioKind) -> &'static str {
    match kind {
        ScenarioKind::Full => "full",
        ScenarioKind::AnnotatorSplit => "annotator-split",
        ScenarioKind::BatchSubsets => "batch-subsets",
    }
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_alphanumeric() { c } else { '_' })
        .collect()
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for b in bytes {
        hash ^= u64::from(*b);
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

/// Load an existing chain CSV when it is complete for the configured draw
/// count; anything unreadable or short triggers a re-run of that chain.
fn try_load_chain(path: &Path, expected_draws: usize) -> Option<String> {
    let contents = std::fs::read_to_string(path).ok()?;
    let draws =
        PosteriorDraws::from_chain_csvs(std::slice::from_ref(&contents), "resume").ok()?;
    (draws.chains[0].n_draws() == expected_draws).then_some(contents)
}

trait ChainCsvWithId {
    fn chain_csv_with_id(&self, chain: usize, id: usize) -> String;
}

impl ChainCsvWithId for PosteriorDraws {
    /// Chain CSV with the real chain id in the first column (the in-memory
    /// container indexes chains from zero).
    fn chain_csv_with_id(&self, chain: usize, id: usize) -> String {
        let csv = self.chain_csv(chain);
        let mut out = String::with_capacity(csv.len());
        for (i, line) in csv.lines().enumerate() {
            if i == 0 || line.is_empty() {
                out.push_str(line);
            } else {
                let rest = line.split_once(',').map(|(_, r)| r).unwrap_or(line);
                out.push_str(&format!("{id},{rest}"));
            }
            out.push('\n');
        }
        out
    }
}
