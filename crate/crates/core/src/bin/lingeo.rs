use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use lingeo::corpus::{self, DocumentMatrix, PreprocessConfig};
use lingeo::diffusion::NgramTable;
use lingeo::evaluate::{self, Objective, SearchConfig};
use lingeo::geometry::{convex_combination, CombinationWeights, TransformMatrix};
use lingeo::pipeline::{self, service, GeometryConfig, PipelineConfig, Session};
use lingeo::reduce::{Embedding2D, Reducer, TsneConfig};
use lingeo::taxonomy::Taxonomy;
use lingeo::{Error, Result};

#[derive(Parser)]
#[command(name = "lingeo", version, about = "Linguistic geometries for document visualization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tokenize, build the vocabulary and count a corpus.
    Ingest {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Preprocessing block as JSON.
        #[arg(long)]
        preprocess: Option<PathBuf>,
    },
    /// Build a geometry transform H over an ingested matrix's vocabulary.
    Geometry {
        #[command(subcommand)]
        method: GeometryMethod,
    },
    /// Transform and reduce documents to 2-D.
    Embed {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        geometry: PathBuf,
        #[arg(long, value_enum, default_value_t = ReducerKind::Tsne)]
        reducer: ReducerKind,
        #[arg(long, default_value_t = 30.0)]
        perplexity: f64,
        #[arg(long, default_value_t = 1000)]
        iters: usize,
        /// Top-level seed; the reducer seed is derived from it.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a labeled embedding CSV.
    Evaluate {
        #[arg(long)]
        embedding: PathBuf,
        /// Take labels from this matrix when the CSV has none.
        #[arg(long)]
        matrix: Option<PathBuf>,
        #[arg(long, default_value_t = 5)]
        k: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Grid search for convex combination weights.
    SearchAlpha {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        components: Vec<PathBuf>,
        #[arg(long, default_value_t = 0.1)]
        grid: f64,
        #[arg(long, value_enum, default_value_t = ReducerKind::Pca)]
        reducer: ReducerKind,
        #[arg(long, default_value_t = 30.0)]
        perplexity: f64,
        #[arg(long, default_value_t = 1000)]
        iters: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value_t = ObjectiveArg::Ii)]
        objective: ObjectiveArg,
        #[arg(long, default_value_t = 5)]
        k: usize,
        /// Write the combined geometry here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a full pipeline configuration.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args)]
struct GeometryOut {
    /// Ingested document matrix.
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum GeometryMethod {
    Identity {
        #[command(flatten)]
        io: GeometryOut,
    },
    Manual {
        #[command(flatten)]
        io: GeometryOut,
        #[arg(long)]
        spec: PathBuf,
    },
    Soft {
        #[command(flatten)]
        io: GeometryOut,
        #[arg(long)]
        spec: PathBuf,
    },
    Diffusion {
        #[command(flatten)]
        io: GeometryOut,
        /// Held-out corpus for the contextual distributions.
        #[arg(long)]
        estimation: Option<PathBuf>,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
    },
    Ngram {
        #[command(flatten)]
        io: GeometryOut,
        #[arg(long)]
        table: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
    },
    Taxonomy {
        #[command(flatten)]
        io: GeometryOut,
        #[arg(long, required_unless_present = "scores")]
        taxonomy: Option<PathBuf>,
        /// Precomputed `word1 word2 score` lines instead of a taxonomy.
        #[arg(long)]
        scores: Option<PathBuf>,
        #[arg(long)]
        estimation: Option<PathBuf>,
        #[arg(long, default_value_t = 1.0)]
        pseudo_count: f64,
    },
    Combine {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        components: Vec<PathBuf>,
        #[arg(long, value_delimiter = ',', required = true)]
        weights: Vec<f64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ReducerKind {
    Pca,
    Tsne,
}

#[derive(Clone, Copy, ValueEnum)]
enum ObjectiveArg {
    I,
    Ii,
    Iii,
    Iv,
}

fn reducer(kind: ReducerKind, perplexity: f64, iters: usize, seed: Option<u64>) -> Reducer {
    let base = match kind {
        ReducerKind::Pca => Reducer::Pca,
        ReducerKind::Tsne => Reducer::Tsne(TsneConfig {
            perplexity,
            iterations: iters,
            ..TsneConfig::default()
        }),
    };
    pipeline::seeded_reducer(&base, seed)
}

fn session_for(matrix: &Path, estimation: Option<&Path>) -> Result<Session> {
    let docs = DocumentMatrix::load(matrix)?;
    let estimation = match estimation {
        Some(path) => {
            Some(corpus::ingest_with_vocabulary(&corpus::load_corpus(path)?, docs.vocab(), &docs.preprocess)?.counts)
        }
        None => None,
    };
    let mut session = Session::from_matrix(docs)?;
    session.estimation = estimation;
    Ok(session)
}

fn build_geometry(method: GeometryMethod) -> Result<()> {
    let (io, estimation, config, aux): (GeometryOut, Option<PathBuf>, GeometryConfig, Option<(bool, PathBuf)>) =
        match method {
            GeometryMethod::Combine {
                out,
                components,
                weights,
            } => {
                let built = components
                    .iter()
                    .map(|p| TransformMatrix::load(p))
                    .collect::<Result<Vec<_>>>()?;
                let h = convex_combination(&built, &CombinationWeights::new(weights)?)?;
                return h.save(&out);
            }
            GeometryMethod::Identity { io } => (io, None, GeometryConfig::Identity, None),
            GeometryMethod::Manual { io, spec } => (io, None, GeometryConfig::Manual { spec }, None),
            GeometryMethod::Soft { io, spec } => (io, None, GeometryConfig::Soft { spec }, None),
            GeometryMethod::Diffusion { io, estimation, c } => (io, estimation, GeometryConfig::Diffusion { c }, None),
            GeometryMethod::Ngram { io, table, c } => (io, None, GeometryConfig::Ngram { c }, Some((true, table))),
            GeometryMethod::Taxonomy {
                io,
                taxonomy,
                scores,
                estimation,
                pseudo_count,
            } => {
                let aux = taxonomy.map(|t| (false, t));
                (io, estimation, GeometryConfig::Taxonomy { pseudo_count, scores }, aux)
            }
        };
    let mut session = session_for(&io.matrix, estimation.as_deref())?;
    match aux {
        Some((true, table)) => {
            session.ngrams = Some(NgramTable::load_filtered(
                &table,
                &session.preprocessor,
                session.docs.vocab(),
            )?)
        }
        Some((false, taxonomy)) => {
            session.taxonomy = Some(Taxonomy::load(&taxonomy)?.normalized(&session.preprocessor))
        }
        None => {}
    }
    let built = session.build_geometry(&config, &Reducer::Pca)?;
    built.transform.save(&io.out)
}

fn write_report(report: &evaluate::EvaluationReport, out: Option<&Path>) -> Result<()> {
    let json = report.to_json()?;
    match out {
        Some(path) => fs::write(path, json).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        }),
        None => {
            println!("{json}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest {
            corpus: input,
            out,
            preprocess,
        } => {
            let config = match preprocess {
                Some(path) => {
                    let text = fs::read_to_string(&path).map_err(|e| Error::Io { path, source: e })?;
                    serde_json::from_str(&text)?
                }
                None => PreprocessConfig::default(),
            };
            let docs = corpus::ingest(&corpus::load_corpus(&input)?, &config)?;
            eprintln!("{} documents, {} terms", docs.n_docs(), docs.vocab().len());
            docs.save(&out)
        }
        Command::Geometry { method } => build_geometry(method),
        Command::Embed {
            matrix,
            geometry,
            reducer: kind,
            perplexity,
            iters,
            seed,
            out,
        } => {
            let session = session_for(&matrix, None)?;
            let h = TransformMatrix::load(&geometry)?;
            let built = pipeline::BuiltGeometry {
                transform: h,
                weights: None,
            };
            let embedding = session.embed(&built, &reducer(kind, perplexity, iters, seed), &|| false)?;
            embedding.save_csv(&out, session.docs.labels.as_deref())
        }
        Command::Evaluate {
            embedding,
            matrix,
            k,
            out,
        } => {
            let (emb, labels) = Embedding2D::load_csv(&embedding)?;
            let labels = match (labels, matrix) {
                (Some(l), _) => l,
                (None, Some(m)) => DocumentMatrix::load(&m)?
                    .labels
                    .ok_or_else(|| Error::Measure("matrix has no labels".into()))?,
                (None, None) => return Err(Error::Measure("embedding has no labels; pass --matrix".into())),
            };
            write_report(&evaluate::evaluate(&emb, &labels, k)?, out.as_deref())
        }
        Command::SearchAlpha {
            matrix,
            components,
            grid,
            reducer: kind,
            perplexity,
            iters,
            seed,
            objective,
            k,
            out,
        } => {
            let docs = DocumentMatrix::load(&matrix)?;
            let built = components
                .iter()
                .map(|p| TransformMatrix::load(p))
                .collect::<Result<Vec<_>>>()?;
            let config = SearchConfig {
                reducer: reducer(kind, perplexity, iters, seed),
                grid_step: grid,
                objective: match objective {
                    ObjectiveArg::I => Objective::IntraInter,
                    ObjectiveArg::Ii => Objective::DaviesBouldin,
                    ObjectiveArg::Iii => Objective::Knn,
                    ObjectiveArg::Iv => Objective::Overlap,
                },
                k,
                ..SearchConfig::default()
            };
            let result = evaluate::search_convex_combination(&built, &docs, &config)?;
            println!("alpha = {:?}", result.weights.as_slice());
            if let Some(path) = out {
                convex_combination(&built, &result.weights)?.save(&path)?;
            }
            write_report(&result.report, None)
        }
        Command::Run { config } => {
            let config = PipelineConfig::load(&config)?;
            let output = pipeline::run_pipeline(&config)?;
            if let Some(report) = &output.report {
                write_report(report, None)?;
            }
            Ok(())
        }
        Command::Serve { port, config } => {
            let config = PipelineConfig::load(&config)?;
            let runtime = tokio::runtime::Runtime::new().map_err(|e| Error::Io {
                path: PathBuf::from("tokio runtime"),
                source: e,
            })?;
            runtime.block_on(service::serve(config, port))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
