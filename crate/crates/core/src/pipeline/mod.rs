//! End-to-end orchestration: ingest, geometry, transform, reduce, evaluate.
//!
//! The CLI and the HTTP service both go through [`Session`], so identical
//! inputs and seeds give identical numbers on either path.

pub mod service;

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::{self, DocumentMatrix, PreprocessConfig, Preprocessor, TermCounts};
use crate::diffusion::{
    contextual_distributions, diffusion_kernel, ngram_contextual_distributions, DiffusionConfig, FilteredNgrams,
    NgramTable,
};
use crate::error::{Error, Result};
use crate::evaluate::{self, EvaluationReport, Objective, SearchConfig, DEFAULT_K};
use crate::geometry::spec::GeometrySpec;
use crate::geometry::{
    convex_combination, factorize_t, transform, CombinationWeights, Provenance, SimilarityMatrix, TfScaling,
    TransformMatrix,
};
use crate::reduce::{Embedding2D, PointCloud, Reducer};
use crate::taxonomy::{self, Taxonomy};

/// Derives a stage seed from the top-level seed (SplitMix64 over the seed
/// mixed with an FNV-1a hash of the stage name).
pub fn derive_seed(top: u64, stage: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in stage.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut z = (top ^ h).wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// `reducer` with its seed replaced by the one derived from `top`, if given.
pub fn seeded_reducer(reducer: &Reducer, top: Option<u64>) -> Reducer {
    match (reducer, top) {
        (Reducer::Tsne(cfg), Some(top)) => {
            let mut cfg = cfg.clone();
            cfg.seed = derive_seed(top, "reduce");
            Reducer::Tsne(cfg)
        }
        _ => reducer.clone(),
    }
}

fn default_c() -> f64 {
    1.0
}

fn default_pseudo_count() -> f64 {
    taxonomy::ADD_ONE
}

fn default_grid_step() -> f64 {
    0.1
}

/// Geometry method selector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum GeometryConfig {
    Identity,
    /// Hard clustering spec file.
    Manual {
        spec: PathBuf,
    },
    /// Soft-score spec file.
    Soft {
        spec: PathBuf,
    },
    /// Contextual distributions from the estimation corpus (or the corpus itself).
    Diffusion {
        #[serde(default = "default_c")]
        c: f64,
    },
    /// Contextual distributions from the n-gram table.
    Ngram {
        #[serde(default = "default_c")]
        c: f64,
    },
    /// Taxonomy scores, or imported pairwise scores when `scores` is set.
    Taxonomy {
        #[serde(default = "default_pseudo_count")]
        pseudo_count: f64,
        #[serde(default)]
        scores: Option<PathBuf>,
    },
    /// Convex combination; weights are searched on the grid when absent.
    Combine {
        components: Vec<GeometryConfig>,
        #[serde(default)]
        weights: Option<Vec<f64>>,
        #[serde(default = "default_grid_step")]
        grid_step: f64,
        #[serde(default)]
        objective: Objective,
    },
}

impl GeometryConfig {
    pub fn name(&self) -> &'static str {
        match self {
            GeometryConfig::Identity => "identity",
            GeometryConfig::Manual { .. } => "manual",
            GeometryConfig::Soft { .. } => "soft",
            GeometryConfig::Diffusion { .. } => "diffusion",
            GeometryConfig::Ngram { .. } => "ngram",
            GeometryConfig::Taxonomy { .. } => "taxonomy",
            GeometryConfig::Combine { .. } => "combine",
        }
    }

    fn resolve_paths(&mut self, base: &Path) {
        match self {
            GeometryConfig::Manual { spec } | GeometryConfig::Soft { spec } => *spec = base.join(&*spec),
            GeometryConfig::Taxonomy { scores: Some(p), .. } => *p = base.join(&*p),
            GeometryConfig::Combine { components, .. } => components.iter_mut().for_each(|c| c.resolve_paths(base)),
            _ => {}
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvaluationConfig {
    pub k: usize,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        Self { k: DEFAULT_K }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OutputConfig {
    pub embedding: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub geometry: Option<PathBuf>,
}

/// Pipeline configuration file. Relative paths are resolved against the
/// file's directory by [`PipelineConfig::load`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub corpus: PathBuf,
    #[serde(default)]
    pub estimation_corpus: Option<PathBuf>,
    #[serde(default)]
    pub ngrams: Option<PathBuf>,
    #[serde(default)]
    pub taxonomy: Option<PathBuf>,
    #[serde(default)]
    pub preprocess: PreprocessConfig,
    pub geometry: GeometryConfig,
    pub reducer: Reducer,
    #[serde(default)]
    pub scaling: TfScaling,
    /// Top-level seed; the reducer seed is derived from it.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub evaluation: EvaluationConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config: PipelineConfig = serde_json::from_str(&text)
            .map_err(|e| Error::parse(path.display().to_string(), e.line(), e.to_string()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.resolve_paths(base);
        Ok(config)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let join = |p: &mut PathBuf| *p = base.join(&*p);
        join(&mut self.corpus);
        for p in [&mut self.estimation_corpus, &mut self.ngrams, &mut self.taxonomy]
            .into_iter()
            .flatten()
        {
            join(p);
        }
        if let Some(p) = self.preprocess.stopword_file.as_mut() {
            join(p);
        }
        for p in [
            &mut self.output.embedding,
            &mut self.output.report,
            &mut self.output.geometry,
        ]
        .into_iter()
        .flatten()
        {
            join(p);
        }
        self.geometry.resolve_paths(base);
    }

    /// The configured reducer with the derived seed applied.
    pub fn effective_reducer(&self) -> Reducer {
        seeded_reducer(&self.reducer, self.seed)
    }
}

/// Loaded inputs shared by every stage.
#[derive(Debug, Clone)]
pub struct Session {
    pub docs: DocumentMatrix,
    pub preprocessor: Preprocessor,
    pub estimation: Option<TermCounts>,
    pub ngrams: Option<FilteredNgrams>,
    pub taxonomy: Option<Taxonomy>,
    pub scaling: TfScaling,
    pub k: usize,
}

/// A built geometry and, for searched combinations, the chosen weights.
#[derive(Debug, Clone, PartialEq)]
pub struct BuiltGeometry {
    pub transform: TransformMatrix,
    pub weights: Option<CombinationWeights>,
}

impl BuiltGeometry {
    /// Name recorded in embedding and report provenance.
    pub fn label(&self) -> String {
        geometry_label(self.transform.provenance, self.weights.as_ref())
    }
}

pub fn geometry_label(provenance: Provenance, weights: Option<&CombinationWeights>) -> String {
    match weights {
        Some(w) if provenance == Provenance::Combination => {
            let parts: Vec<String> = w.as_slice().iter().map(|v| format!("{v}")).collect();
            format!("combination({})", parts.join(","))
        }
        _ => provenance.to_string(),
    }
}

impl Session {
    /// Reads and ingests every input named by `config`.
    pub fn open(config: &PipelineConfig) -> Result<Self> {
        let ingest = || -> Result<(DocumentMatrix, Preprocessor, Option<TermCounts>)> {
            let docs = corpus::ingest(&corpus::load_corpus(&config.corpus)?, &config.preprocess)?;
            let pre = Preprocessor::from_config(&config.preprocess)?;
            let estimation = match &config.estimation_corpus {
                Some(path) => Some(
                    corpus::ingest_with_vocabulary(&corpus::load_corpus(path)?, docs.vocab(), &config.preprocess)?
                        .counts,
                ),
                None => None,
            };
            Ok((docs, pre, estimation))
        };
        let (docs, preprocessor, estimation) = ingest().map_err(|e| e.in_stage("ingest"))?;
        let ngrams = match &config.ngrams {
            Some(path) => {
                Some(NgramTable::load_filtered(path, &preprocessor, docs.vocab()).map_err(|e| e.in_stage("ingest"))?)
            }
            None => None,
        };
        let taxonomy = match &config.taxonomy {
            Some(path) => Some(
                Taxonomy::load(path)
                    .map_err(|e| e.in_stage("ingest"))?
                    .normalized(&preprocessor),
            ),
            None => None,
        };
        Ok(Self {
            docs,
            preprocessor,
            estimation,
            ngrams,
            taxonomy,
            scaling: config.scaling,
            k: config.evaluation.k,
        })
    }

    /// A session over an already ingested matrix and no auxiliary inputs.
    pub fn from_matrix(docs: DocumentMatrix) -> Result<Self> {
        let preprocessor = Preprocessor::from_config(&docs.preprocess)?;
        Ok(Self {
            docs,
            preprocessor,
            estimation: None,
            ngrams: None,
            taxonomy: None,
            scaling: TfScaling::Relative,
            k: DEFAULT_K,
        })
    }

    /// Counts used to estimate corpus statistics: the estimation corpus when
    /// present, otherwise the visualization corpus.
    pub fn statistics_counts(&self) -> &TermCounts {
        self.estimation.as_ref().unwrap_or(self.docs.unlabeled())
    }

    pub fn build_geometry(&self, config: &GeometryConfig, reducer: &Reducer) -> Result<BuiltGeometry> {
        self.build_geometry_inner(config, reducer)
            .map_err(|e| e.in_stage("geometry"))
    }

    fn build_geometry_inner(&self, config: &GeometryConfig, reducer: &Reducer) -> Result<BuiltGeometry> {
        let plain = |transform| {
            Ok(BuiltGeometry {
                transform,
                weights: None,
            })
        };
        match config {
            GeometryConfig::Identity => plain(TransformMatrix::identity(self.docs.vocab().len())),
            GeometryConfig::Manual { spec } | GeometryConfig::Soft { spec } => {
                plain(self.spec_geometry(&GeometrySpec::load(spec)?)?)
            }
            GeometryConfig::Diffusion { c } => plain(diffusion_geometry(self.statistics_counts(), *c)?),
            GeometryConfig::Ngram { c } => {
                let grams = self
                    .ngrams
                    .as_ref()
                    .ok_or_else(|| Error::InvalidConfig("ngram geometry needs an n-gram table".into()))?;
                plain(ngram_geometry(grams, *c)?)
            }
            GeometryConfig::Taxonomy { pseudo_count, scores } => {
                let t = match scores {
                    Some(path) => {
                        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                        taxonomy::import_similarities(
                            &text,
                            &path.display().to_string(),
                            &self.preprocessor,
                            self.docs.vocab(),
                        )?
                    }
                    None => {
                        let tax = self
                            .taxonomy
                            .as_ref()
                            .ok_or_else(|| Error::InvalidConfig("taxonomy geometry needs a taxonomy file".into()))?;
                        let counts =
                            taxonomy::vocabulary_counts(self.docs.vocab(), &self.statistics_counts().term_totals());
                        let p = taxonomy::concept_probabilities(tax, &counts, *pseudo_count)?;
                        taxonomy::taxonomy_similarity_matrix(tax, &p, self.docs.vocab())?
                    }
                };
                plain(similarity_geometry(&t, Provenance::Taxonomy)?)
            }
            GeometryConfig::Combine {
                components,
                weights,
                grid_step,
                objective,
            } => {
                let built = components
                    .iter()
                    .map(|c| self.build_geometry_inner(c, reducer).map(|b| b.transform))
                    .collect::<Result<Vec<_>>>()?;
                let weights = match weights {
                    Some(w) => CombinationWeights::new(w.clone())?,
                    None => {
                        let config = SearchConfig {
                            reducer: reducer.clone(),
                            grid_step: *grid_step,
                            objective: *objective,
                            k: self.k,
                            scaling: self.scaling,
                        };
                        evaluate::search_convex_combination(&built, &self.docs, &config)?.weights
                    }
                };
                Ok(BuiltGeometry {
                    transform: convex_combination(&built, &weights)?,
                    weights: Some(weights),
                })
            }
        }
    }

    /// Builds a manual or soft spec over this session's vocabulary.
    pub fn spec_geometry(&self, spec: &GeometrySpec) -> Result<TransformMatrix> {
        spec.build(self.docs.vocab(), &self.preprocessor)
    }

    /// Document vectors `Hx`.
    pub fn transform(&self, h: &TransformMatrix) -> Result<PointCloud> {
        transform(h, self.docs.unlabeled(), self.scaling)
            .and_then(|data| PointCloud::new(self.docs.ids.clone(), data))
            .map_err(|e| e.in_stage("transform"))
    }

    pub fn embed(
        &self,
        geometry: &BuiltGeometry,
        reducer: &Reducer,
        cancelled: &(dyn Fn() -> bool + Sync),
    ) -> Result<Embedding2D> {
        let points = self.transform(&geometry.transform)?;
        reducer
            .embed_with_cancel(&points, &geometry.label(), cancelled)
            .map_err(|e| e.in_stage("reduce"))
    }

    /// Scores `embedding` against the document labels; `None` without labels.
    pub fn evaluate(&self, embedding: &Embedding2D) -> Result<Option<EvaluationReport>> {
        match &self.docs.labels {
            Some(labels) => evaluate::evaluate(embedding, labels, self.k)
                .map(Some)
                .map_err(|e| e.in_stage("evaluate")),
            None => Ok(None),
        }
    }
}

/// Factorizes a similarity matrix into a transform tagged `provenance`.
pub fn similarity_geometry(t: &SimilarityMatrix, provenance: Provenance) -> Result<TransformMatrix> {
    let mut h = factorize_t(t)?;
    h.provenance = provenance;
    Ok(h)
}

/// Diffusion geometry from corpus contextual distributions.
pub fn diffusion_geometry(counts: &TermCounts, c: f64) -> Result<TransformMatrix> {
    let table = contextual_distributions(counts)?;
    similarity_geometry(&diffusion_kernel(&table, DiffusionConfig { c })?, Provenance::Diffusion)
}

/// Diffusion geometry from n-gram contextual distributions.
pub fn ngram_geometry(grams: &FilteredNgrams, c: f64) -> Result<TransformMatrix> {
    let table = ngram_contextual_distributions(grams)?;
    similarity_geometry(&diffusion_kernel(&table, DiffusionConfig { c })?, Provenance::Ngram)
}

/// Everything a pipeline run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub geometry: BuiltGeometry,
    pub embedding: Embedding2D,
    pub report: Option<EvaluationReport>,
}

/// Runs every stage and writes the configured outputs.
pub fn run_pipeline(config: &PipelineConfig) -> Result<PipelineOutput> {
    let session = Session::open(config)?;
    let reducer = config.effective_reducer();
    let geometry = session.build_geometry(&config.geometry, &reducer)?;
    let embedding = session.embed(&geometry, &reducer, &|| false)?;
    let report = session.evaluate(&embedding)?;
    let write = || -> Result<()> {
        if let Some(path) = &config.output.geometry {
            geometry.transform.save(path)?;
        }
        if let Some(path) = &config.output.embedding {
            embedding.save_csv(path, session.docs.labels.as_deref())?;
        }
        if let (Some(path), Some(report)) = (&config.output.report, &report) {
            fs::write(path, report.to_json()?).map_err(|e| Error::io(path, e))?;
        }
        Ok(())
    };
    write().map_err(|e| e.in_stage("output"))?;
    Ok(PipelineOutput {
        geometry,
        embedding,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::RawDocument;
    use crate::reduce::TsneConfig;

    fn doc(id: &str, text: &str, label: &str) -> RawDocument {
        RawDocument {
            id: id.into(),
            text: text.into(),
            label: Some(label.into()),
        }
    }

    fn toy_corpus(dir: &Path) -> PathBuf {
        let docs = vec![
            doc("d1", "apple banana apple", "fruit"),
            doc("d2", "banana cherry", "fruit"),
            doc("d3", "apple cherry cherry", "fruit"),
            doc("d4", "engine wheel engine", "car"),
            doc("d5", "wheel brake", "car"),
            doc("d6", "engine brake brake", "car"),
        ];
        let path = dir.join("corpus.jsonl");
        corpus::write_corpus(&path, &docs).unwrap();
        path
    }

    #[test]
    fn seed_derivation_is_fixed_and_stage_specific() {
        assert_eq!(derive_seed(7, "reduce"), derive_seed(7, "reduce"));
        assert_ne!(derive_seed(7, "reduce"), derive_seed(8, "reduce"));
        assert_ne!(derive_seed(7, "reduce"), derive_seed(7, "other"));
        let r = seeded_reducer(&Reducer::Tsne(TsneConfig::default()), Some(7));
        assert_eq!(r.seed(), Some(derive_seed(7, "reduce")));
        assert_eq!(seeded_reducer(&Reducer::Pca, Some(7)), Reducer::Pca);
    }

    #[test]
    fn identity_pipeline_equals_raw_tf_reduction() {
        let dir = tempfile::tempdir().unwrap();
        let config = PipelineConfig {
            corpus: toy_corpus(dir.path()),
            estimation_corpus: None,
            ngrams: None,
            taxonomy: None,
            preprocess: PreprocessConfig::default(),
            geometry: GeometryConfig::Identity,
            reducer: Reducer::Pca,
            scaling: TfScaling::Relative,
            seed: Some(1),
            evaluation: EvaluationConfig { k: 1 },
            output: OutputConfig {
                embedding: Some(dir.path().join("e.csv")),
                report: Some(dir.path().join("r.json")),
                geometry: None,
            },
        };
        let out = run_pipeline(&config).unwrap();

        let docs = corpus::ingest(&corpus::load_corpus(&config.corpus).unwrap(), &config.preprocess).unwrap();
        let raw = nalgebra::DMatrix::from_fn(docs.n_docs(), docs.vocab().len(), |i, j| {
            docs.counts.dense_row(i, true)[j]
        });
        let points = PointCloud::new(docs.ids.clone(), raw).unwrap();
        let direct = Reducer::Pca.embed(&points, "identity").unwrap();
        assert_eq!(out.embedding, direct);
        let report = evaluate::evaluate(&direct, docs.labels.as_ref().unwrap(), 1).unwrap();
        assert_eq!(out.report.as_ref(), Some(&report));
        let written: EvaluationReport =
            serde_json::from_str(&fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
        assert_eq!(written, report);
        assert!(fs::read_to_string(dir.path().join("e.csv"))
            .unwrap()
            .contains("# geometry: identity"));
    }

    #[test]
    fn missing_inputs_report_the_stage() {
        let dir = tempfile::tempdir().unwrap();
        let config: PipelineConfig = serde_json::from_value(serde_json::json!({
            "corpus": toy_corpus(dir.path()),
            "geometry": {"method": "ngram"},
            "reducer": {"reducer": "pca"}
        }))
        .unwrap();
        let err = run_pipeline(&config).unwrap_err();
        assert!(matches!(err, Error::Stage { stage: "geometry", .. }), "{err}");
        let config = PipelineConfig {
            corpus: dir.path().join("missing.jsonl"),
            ..config
        };
        assert!(matches!(
            run_pipeline(&config),
            Err(Error::Stage { stage: "ingest", .. })
        ));
    }

    #[test]
    fn config_paths_resolve_relative_to_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pipeline.json");
        fs::write(
            &path,
            r#"{"corpus": "c.jsonl", "geometry": {"method": "combine", "components": [{"method": "manual", "spec": "m.json"}, {"method": "diffusion"}], "weights": [0.5, 0.5]}, "reducer": {"reducer": "tsne", "perplexity": 5.0}, "seed": 3}"#,
        )
        .unwrap();
        let config = PipelineConfig::load(&path).unwrap();
        assert_eq!(config.corpus, dir.path().join("c.jsonl"));
        let GeometryConfig::Combine {
            components, grid_step, ..
        } = &config.geometry
        else {
            panic!()
        };
        assert_eq!(
            components[0],
            GeometryConfig::Manual {
                spec: dir.path().join("m.json")
            }
        );
        assert_eq!(components[1], GeometryConfig::Diffusion { c: 1.0 });
        assert_eq!(*grid_step, 0.1);
        let Reducer::Tsne(cfg) = config.effective_reducer() else {
            panic!()
        };
        assert_eq!(cfg.perplexity, 5.0);
        assert_eq!(cfg.iterations, 1000);
        assert_eq!(cfg.seed, derive_seed(3, "reduce"));
    }
}
