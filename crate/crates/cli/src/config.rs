//! The declarative run configuration (TOML).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Global seed; the --seed flag overrides it. One of the two is
    /// mandatory.
    pub seed: Option<u64>,
    pub paths: Paths,
    #[serde(default)]
    pub preprocess: Preprocess,
    #[serde(default)]
    pub select: Select,
    #[serde(default)]
    pub features: Features,
    #[serde(default)]
    pub scenario: Scenario,
    #[serde(default)]
    pub sampler: Sampler,
    #[serde(default)]
    pub predict: Predict,
    #[serde(default)]
    pub simcheck: Simcheck,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    pub annotations: PathBuf,
    pub profiles: PathBuf,
    pub items: PathBuf,
    pub schema: PathBuf,
    pub recode_maps: Option<PathBuf>,
    /// Pre-annotated layers; when given, it replaces the built-in tokenizer.
    pub conllu: Option<PathBuf>,
    #[serde(default)]
    pub value_lexicons: Vec<PathBuf>,
    #[serde(default)]
    pub emotion_lexicons: Vec<PathBuf>,
    pub sentiment_lexicon: Option<PathBuf>,
    #[serde(default)]
    pub domain_lexicons: Vec<PathBuf>,
    #[serde(default)]
    pub synset_lexicons: Vec<PathBuf>,
    pub hedges: Option<PathBuf>,
    /// Cluster representative picks (`cluster_id<TAB>feature`).
    pub picks: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Preprocess {
    pub min_items_per_annotator: usize,
    pub min_annotators_per_item: usize,
    /// Characteristics for which multi-valued answers drop the annotator.
    pub multi_membership: Vec<String>,
    /// Override of the schema's PNA tokens.
    pub pna_tokens: Option<Vec<String>>,
}

impl Default for Preprocess {
    fn default() -> Self {
        Preprocess {
            min_items_per_annotator: 10,
            min_annotators_per_item: 3,
            multi_membership: Vec::new(),
            pna_tokens: None,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Features {
    /// Built-in suites to run (surface, readability, richness, info, tags);
    /// empty = all. Lexicon suites follow the configured lexicon paths.
    pub suites: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Select {
    pub threshold: f64,
    pub cut_distance: f64,
}

impl Default for Select {
    fn default() -> Self {
        Select {
            threshold: 0.5,
            cut_distance: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    Full,
    AnnotatorSplit,
    BatchSubsets,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Scenario {
    pub kind: ScenarioKind,
    /// annotator-split: fraction of annotators in the first half.
    pub fraction: f64,
    /// batch-subsets: items per subset and number of subsets.
    pub subset_size: usize,
    pub n_subsets: usize,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            kind: ScenarioKind::Full,
            fraction: 0.5,
            subset_size: 300,
            n_subsets: 3,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Sampler {
    pub chains: usize,
    pub warmup: usize,
    pub draws: usize,
    pub target_accept: f64,
    pub max_treedepth: usize,
}

impl Default for Sampler {
    fn default() -> Self {
        Sampler {
            chains: 4,
            warmup: 2000,
            draws: 7500,
            target_accept: 0.8,
            max_treedepth: 10,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Predict {
    /// (linguistic feature, annotator characteristic) pairs; when empty, the
    /// grids of all surviving cross-level interactions are emitted.
    pub interactions: Vec<(String, String)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Simcheck {
    pub n_annotators: usize,
    pub n_items: usize,
    pub n_annotations: usize,
    pub p: usize,
    pub intercept: f64,
    pub support: Vec<usize>,
    pub magnitudes: Vec<f64>,
    pub sigma_a: f64,
    pub sigma_i: f64,
    pub sigma: f64,
    /// Simulations for the calibration run (0 disables SBC).
    pub sbc_sims: usize,
}

impl Default for Simcheck {
    fn default() -> Self {
        Simcheck {
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
            sbc_sims: 0,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig, CliError> {
        let src = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let config: RunConfig = toml::from_str(&src)
            .map_err(|e| CliError::Usage(format!("bad config {}: {e}", path.display())))?;
        Ok(config)
    }

    /// Check that every referenced path exists.
    pub fn validate_paths(&self) -> Result<(), CliError> {
        let mut required: Vec<&PathBuf> = vec![
            &self.paths.annotations,
            &self.paths.profiles,
            &self.paths.items,
            &self.paths.schema,
        ];
        let optional = [
            self.paths.recode_maps.as_ref(),
            self.paths.conllu.as_ref(),
            self.paths.sentiment_lexicon.as_ref(),
            self.paths.hedges.as_ref(),
            self.paths.picks.as_ref(),
        ];
        required.extend(optional.into_iter().flatten());
        required.extend(self.paths.value_lexicons.iter());
        required.extend(self.paths.emotion_lexicons.iter());
        required.extend(self.paths.domain_lexicons.iter());
        required.extend(self.paths.synset_lexicons.iter());
        for p in required {
            if !p.exists() {
                return Err(CliError::Usage(format!("configured path does not exist: {}", p.display())));
            }
        }
        Ok(())
    }

    /// Stable hash of the resolved configuration (FNV-1a over the canonical
    /// JSON), recorded in every stage manifest for auditability.
    pub fn config_hash(&self, seed: u64) -> String {
        let json = serde_json::to_string(&(self, seed)).expect("config serializes");
        let mut hash: u64 = 0xcbf29ce484222325;
        for b in json.as_bytes() {
            hash ^= u64::from(*b);
            hash = hash.wrapping_mul(0x100000001b3);
        }
        format!("{hash:016x}")
    }
}
