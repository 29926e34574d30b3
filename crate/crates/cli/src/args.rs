//! Command-line flags. Every flag overrides the matching `--config` field.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use pinfluence::factorize::NmfInit;
use pinfluence::influence::InfluenceMetric;
use pinfluence::ingest::ColumnOrder;
use pinfluence::similarity::SimilarityMeasure;
use pinfluence::synth::Shape;

use crate::config::{MatrixFormat, RunConfig};
use crate::error::{CliResult, EXIT_CODES};

#[derive(Debug, Parser)]
#[command(
    name = "pinfluence",
    version,
    about = "Extract, validate and compare participant-invariant influence patterns of temporal networks",
    after_help = EXIT_CODES
)]
pub struct Cli {
    /// JSON run configuration; also accepts any JSON artifact written by a previous run.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Output directory [default: out].
    #[arg(
        long,
        short = 'o',
        global = true,
        env = "PINFLUENCE_OUT_DIR",
        value_name = "DIR"
    )]
    pub out: Option<PathBuf>,

    /// Write SVG plots next to the other artifacts.
    #[arg(long, global = true)]
    pub plot: bool,

    /// Print the effective configuration as JSON and exit.
    #[arg(long, global = true)]
    pub print_config: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the aligned influence matrix and factorize it into W and H.
    Extract(ExtractArgs),
    /// Check that H survives participant subsampling.
    Validate(ValidateArgs),
    /// Pairwise similarity of the H patterns listed in a manifest.
    Compare(CompareArgs),
    /// Predict the category of a network from its nearest neighbour.
    Classify(ClassifyArgs),
    /// Generate a planted low-rank instance.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct SourceArgs {
    /// Temporal edge list (`src dst timestamp`), plain or gzip.
    #[arg(long, value_name = "FILE")]
    pub input: Option<PathBuf>,
    /// Aligned matrix from `synth` or `extract --export-matrix` (.csv or .bin).
    #[arg(long, value_name = "FILE", conflicts_with = "input")]
    pub matrix: Option<PathBuf>,
    /// Zero-based source,target,timestamp field positions.
    #[arg(long, value_name = "S,T,TS")]
    pub columns: Option<ColumnOrder>,
    #[arg(long)]
    pub keep_self_loops: bool,
    /// Network label used in outputs.
    #[arg(long)]
    pub name: Option<String>,
    /// Number of equal-edge snapshots.
    #[arg(long)]
    pub snapshots: Option<usize>,
    /// degree, closeness or betweenness.
    #[arg(long)]
    pub metric: Option<InfluenceMetric>,
}

#[derive(Debug, Args)]
pub struct NmfArgs {
    /// Number of roles.
    #[arg(long)]
    pub k: Option<usize>,
    /// random or nndsvd.
    #[arg(long)]
    pub init: Option<NmfInit>,
    #[arg(long)]
    pub max_iterations: Option<usize>,
    /// Relative objective change that stops the iteration.
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Seed for random initialization.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub nmf: NmfArgs,
    /// Also write the aligned matrix.
    #[arg(long, value_enum)]
    pub export_matrix: Option<MatrixFormat>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub nmf: NmfArgs,
    /// Subsampling ratios; each trial keeps a 1 - 1/rho share of the rows.
    #[arg(long = "rho", value_delimiter = ',')]
    pub rhos: Vec<usize>,
    /// Seed for row subsets.
    #[arg(long)]
    pub subset_seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// CSV of `name,category,path` with paths to h.csv or h.json files.
    #[arg(long, value_name = "FILE")]
    pub manifest: Option<PathBuf>,
    /// dtw, dtw-avg, cosine, euclidean; repeat or comma-separate [default: all].
    #[arg(long = "measure", value_delimiter = ',')]
    pub measures: Vec<SimilarityMeasure>,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[arg(long, value_name = "FILE")]
    pub manifest: Option<PathBuf>,
    /// H file of the network to classify.
    #[arg(long, value_name = "FILE")]
    pub query: Option<PathBuf>,
    /// [default: dtw-avg]
    #[arg(long)]
    pub measure: Option<SimilarityMeasure>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Participants (rows).
    #[arg(long)]
    pub n: Option<usize>,
    /// Aligned time steps (columns).
    #[arg(long)]
    pub t: Option<usize>,
    /// Planted rank.
    #[arg(long)]
    pub k: Option<usize>,
    /// decay, plateau or bimodal.
    #[arg(long)]
    pub shape: Option<Shape>,
    /// Noise amplitude as a fraction of the mean entry.
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also write `m_star.bin`.
    #[arg(long, value_enum)]
    pub export_matrix: Option<MatrixFormat>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Task {
    Extract,
    Validate,
    Compare,
    Classify,
    Synth,
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

impl SourceArgs {
    fn apply(self, c: &mut RunConfig) {
        if self.input.is_some() || self.matrix.is_some() {
            c.input.edges = self.input;
            c.input.matrix = self.matrix;
        }
        set(&mut c.input.columns, self.columns);
        if self.keep_self_loops {
            c.input.drop_self_loops = false;
        }
        if self.name.is_some() {
            c.input.name = self.name;
        }
        set(&mut c.snapshot_count, self.snapshots);
        set(&mut c.metric, self.metric);
    }
}

impl NmfArgs {
    fn apply(self, c: &mut RunConfig) {
        set(&mut c.nmf.k, self.k);
        set(&mut c.nmf.init, self.init);
        set(&mut c.nmf.max_iterations, self.max_iterations);
        set(&mut c.nmf.rel_change_tolerance, self.tolerance);
        set(&mut c.nmf.seed, self.seed);
    }
}

impl Cli {
    /// Config file (if any), then flags.
    pub fn resolve(self) -> CliResult<(Task, RunConfig)> {
        let mut c = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if self.out.is_some() {
            c.output_dir = self.out;
        }
        if self.plot {
            c.plot = true;
        }
        match self.command {
            Command::Extract(a) => {
                a.source.apply(&mut c);
                a.nmf.apply(&mut c);
                if a.export_matrix.is_some() {
                    c.export_matrix = a.export_matrix;
                }
                Ok((Task::Extract, c))
            }
            Command::Validate(a) => {
                a.source.apply(&mut c);
                a.nmf.apply(&mut c);
                if !a.rhos.is_empty() {
                    c.validate.rhos = a.rhos;
                }
                set(&mut c.validate.seed, a.subset_seed);
                Ok((Task::Validate, c))
            }
            Command::Compare(a) => {
                if a.manifest.is_some() {
                    c.compare.manifest = a.manifest;
                }
                if !a.measures.is_empty() {
                    c.compare.measures = a.measures;
                }
                Ok((Task::Compare, c))
            }
            Command::Classify(a) => {
                if a.manifest.is_some() {
                    c.compare.manifest = a.manifest;
                }
                if a.query.is_some() {
                    c.compare.query = a.query;
                }
                set(&mut c.compare.classify_measure, a.measure);
                Ok((Task::Classify, c))
            }
            Command::Synth(a) => {
                set(&mut c.synth.n, a.n);
                set(&mut c.synth.t, a.t);
                set(&mut c.synth.k, a.k);
                set(&mut c.synth.shape, a.shape);
                set(&mut c.synth.noise_level, a.noise);
                set(&mut c.synth.seed, a.seed);
                if a.export_matrix.is_some() {
                    c.export_matrix = a.export_matrix;
                }
                Ok((Task::Synth, c))
            }
        }
    }
}
