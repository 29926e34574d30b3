//! Subcommand implementations. Each returns the artifact paths it wrote.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use pinfluence::factorize::{extract, FactorPair};
use pinfluence::influence::{
    align_matrix, compute_influence_matrix, AlignedInfluenceMatrix, InfluenceMetric,
};
use pinfluence::ingest::{
    parse_edge_list_maybe_gzip, plan_snapshots, preprocess, PreprocessConfig, PreprocessReport,
};
use pinfluence::io::{
    decode_matrix_bin, encode_matrix_bin, parse_manifest, read_aligned_csv, read_h_csv,
    write_aligned_csv, write_h_csv, write_similarity_csv, write_uniqueness_table, HDocument,
};
use pinfluence::similarity::{classify_domain, pairwise_similarity, Classification, CorpusEntry};
use pinfluence::synth::{generate_planted, PlantedSpec};
use pinfluence::uniqueness::{run_uniqueness, UniquenessConfig, UniquenessReport};
use serde::Serialize;

use crate::config::{MatrixFormat, RunConfig};
use crate::error::{CliError, CliResult};
use crate::plot::emit_plot;

pub const DEFAULT_OUT_DIR: &str = "out";

struct Artifacts<'a> {
    dir: PathBuf,
    config: &'a RunConfig,
    fingerprint: String,
    written: Vec<PathBuf>,
}

impl<'a> Artifacts<'a> {
    fn new(config: &'a RunConfig) -> CliResult<Self> {
        let dir = config
            .output_dir
            .clone()
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
        std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
        Ok(Artifacts {
            dir,
            config,
            fingerprint: config.fingerprint(),
            written: Vec::new(),
        })
    }

    fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> CliResult<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        self.written.push(path);
        Ok(())
    }

    /// CSV with a `#` provenance line; the readers skip it.
    fn csv(
        &mut self,
        name: &str,
        body: impl FnOnce(&mut Vec<u8>) -> pinfluence::Result<()>,
    ) -> CliResult<()> {
        let mut buf = format!(
            "# pinfluence {} config {}\n",
            env!("CARGO_PKG_VERSION"),
            self.fingerprint
        )
        .into_bytes();
        body(&mut buf)?;
        self.write_bytes(name, &buf)
    }

    fn json<T: Serialize>(&mut self, name: &str, payload: T) -> CliResult<()> {
        #[derive(Serialize)]
        struct Stamped<'c, T> {
            config_fingerprint: &'c str,
            #[serde(flatten)]
            payload: T,
            config: RunConfig,
        }
        let doc = Stamped {
            config_fingerprint: &self.fingerprint,
            payload,
            config: self.config.embedded(),
        };
        let mut bytes = serde_json::to_vec_pretty(&doc).map_err(pinfluence::Error::from)?;
        bytes.push(b'\n');
        self.write_bytes(name, &bytes)
    }

    fn plot(&mut self, name: &str, vectors: &[(String, Vec<f64>)]) -> CliResult<()> {
        let path = self.dir.join(name);
        emit_plot(vectors, &path)?;
        self.written.push(path);
        Ok(())
    }

    fn matrix(
        &mut self,
        stem: &str,
        m: &AlignedInfluenceMatrix,
        format: MatrixFormat,
    ) -> CliResult<()> {
        match format {
            MatrixFormat::Csv => self.csv(&format!("{stem}.csv"), |w| write_aligned_csv(w, m)),
            MatrixFormat::Bin => {
                self.write_bytes(&format!("{stem}.bin"), &encode_matrix_bin(m.values()))
            }
        }
    }
}

fn open(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::io(path, e))
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "network".into())
}

struct Loaded {
    mstar: AlignedInfluenceMatrix,
    name: String,
    preprocess: Option<PreprocessReport>,
    clipped_negative: Option<usize>,
}

fn load_matrix_file(path: &Path) -> CliResult<AlignedInfluenceMatrix> {
    if path.extension().is_some_and(|e| e == "bin") {
        let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
        Ok(AlignedInfluenceMatrix::from_values(decode_matrix_bin(
            &bytes,
        )?)?)
    } else {
        Ok(read_aligned_csv(open(path)?)?)
    }
}

fn load(config: &RunConfig) -> CliResult<Loaded> {
    let input = &config.input;
    let (mstar, path, preprocess_report, clipped) = match (&input.edges, &input.matrix) {
        (Some(edges), None) => {
            let list = parse_edge_list_maybe_gzip(open(edges)?, &input.columns)?;
            let list = preprocess(
                list,
                &PreprocessConfig {
                    drop_self_loops: input.drop_self_loops,
                },
            );
            let plan = plan_snapshots(&list, config.snapshot_count)?;
            let m = compute_influence_matrix(&list, &plan, config.metric)?;
            let report = PreprocessReport::new(&list, &plan);
            (
                align_matrix(&m),
                edges,
                Some(report),
                Some(m.clipped_negative()),
            )
        }
        (None, Some(matrix)) => (load_matrix_file(matrix)?, matrix, None, None),
        (None, None) => return Err(CliError::invalid("one of --input or --matrix is required")),
        (Some(_), Some(_)) => {
            return Err(CliError::invalid(
                "--input and --matrix are mutually exclusive",
            ))
        }
    };
    Ok(Loaded {
        mstar,
        name: input.name.clone().unwrap_or_else(|| stem(path)),
        preprocess: preprocess_report,
        clipped_negative: clipped,
    })
}

#[derive(Serialize)]
struct ExtractReport<'a> {
    network: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    preprocess: Option<&'a PreprocessReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    metric: Option<InfluenceMetric>,
    #[serde(skip_serializing_if = "Option::is_none")]
    clipped_negative: Option<usize>,
    nodes: usize,
    snapshots: usize,
    k: usize,
    relative_residual: f64,
    converged: bool,
    iterations: usize,
}

fn h_vectors(name: &str, pair: &FactorPair) -> Vec<(String, Vec<f64>)> {
    if pair.k() == 1 {
        return vec![(name.to_string(), pair.h.row(0).to_vec())];
    }
    pair.h
        .outer_iter()
        .enumerate()
        .map(|(r, row)| (format!("{name} h{}", r + 1), row.to_vec()))
        .collect()
}

pub fn run_extract(config: &RunConfig) -> CliResult<Vec<PathBuf>> {
    let loaded = load(config)?;
    let pair = extract(&loaded.mstar, &config.nmf)?;
    let mut out = Artifacts::new(config)?;
    out.csv("h.csv", |w| write_h_csv(w, &pair.h))?;
    out.json(
        "h.json",
        HDocument::from_pair(Some(loaded.name.clone()), &pair),
    )?;
    out.json(
        "report.json",
        ExtractReport {
            network: &loaded.name,
            preprocess: loaded.preprocess.as_ref(),
            metric: loaded.preprocess.as_ref().map(|_| config.metric),
            clipped_negative: loaded.clipped_negative,
            nodes: loaded.mstar.nodes(),
            snapshots: loaded.mstar.snapshots(),
            k: pair.k(),
            relative_residual: pair.relative_residual,
            converged: pair.converged,
            iterations: pair.iterations,
        },
    )?;
    if let Some(format) = config.export_matrix {
        out.matrix("m_star", &loaded.mstar, format)?;
    }
    if config.plot {
        out.plot("h.svg", &h_vectors(&loaded.name, &pair))?;
    }
    Ok(out.written)
}

pub fn uniqueness_config(config: &RunConfig) -> UniquenessConfig {
    UniquenessConfig {
        rhos: config.validate.rhos.clone(),
        base_seed: config.validate.seed,
        nmf: config.nmf.clone(),
        thresholds: config.validate.thresholds,
    }
}

#[derive(Serialize)]
struct ValidateOutput<'a> {
    network: &'a str,
    report: &'a UniquenessReport,
}

pub fn run_validate(config: &RunConfig) -> CliResult<(Vec<PathBuf>, UniquenessReport)> {
    let loaded = load(config)?;
    let report = run_uniqueness(&loaded.mstar, &uniqueness_config(config))?;
    let mut out = Artifacts::new(config)?;
    out.json(
        "uniqueness.json",
        ValidateOutput {
            network: &loaded.name,
            report: &report,
        },
    )?;
    out.csv("uniqueness.csv", |w| {
        write_uniqueness_table(w, &[(&loaded.name, &report)])
    })?;
    Ok((out.written, report))
}

/// Leading H row from an `h.csv` or `h.json` file.
pub fn load_h(path: &Path) -> CliResult<Vec<f64>> {
    if path.extension().is_some_and(|e| e == "json") {
        let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
        Ok(HDocument::parse(&bytes)?.rows.swap_remove(0))
    } else {
        Ok(read_h_csv(open(path)?)?.row(0).to_vec())
    }
}

fn load_corpus(config: &RunConfig) -> CliResult<Vec<CorpusEntry>> {
    let manifest = config
        .compare
        .manifest
        .as_ref()
        .ok_or_else(|| CliError::invalid("--manifest is required"))?;
    let base = manifest.parent().unwrap_or(Path::new(""));
    parse_manifest(open(manifest)?)?
        .into_iter()
        .map(|e| {
            let h = load_h(&base.join(&e.path))?;
            Ok(CorpusEntry::new(e.name, e.category, h)?)
        })
        .collect()
}

pub fn run_compare(config: &RunConfig) -> CliResult<Vec<PathBuf>> {
    let corpus = load_corpus(config)?;
    if config.compare.measures.is_empty() {
        return Err(CliError::invalid(
            "at least one similarity measure is required",
        ));
    }
    let matrices = config
        .compare
        .measures
        .iter()
        .map(|&m| pairwise_similarity(&corpus, m))
        .collect::<pinfluence::Result<Vec<_>>>()?;
    let mut out = Artifacts::new(config)?;
    for s in &matrices {
        out.csv(&format!("similarity_{}.csv", s.measure), |w| {
            write_similarity_csv(w, s)
        })?;
    }
    if config.plot {
        let vectors: Vec<_> = corpus
            .iter()
            .map(|e| (e.name.clone(), e.h.clone()))
            .collect();
        out.plot("corpus.svg", &vectors)?;
    }
    Ok(out.written)
}

#[derive(Serialize)]
struct ClassifyOutput<'a> {
    query: &'a Path,
    classification: &'a Classification,
}

pub fn run_classify(config: &RunConfig) -> CliResult<(Vec<PathBuf>, Classification)> {
    let query = config
        .compare
        .query
        .as_ref()
        .ok_or_else(|| CliError::invalid("--query is required"))?;
    let corpus = load_corpus(config)?;
    let h = load_h(query)?;
    let result = classify_domain(&corpus, &h, config.compare.classify_measure)?;
    let mut out = Artifacts::new(config)?;
    out.json(
        "classification.json",
        ClassifyOutput {
            query,
            classification: &result,
        },
    )?;
    Ok((out.written, result))
}

#[derive(Serialize)]
struct PlantedOutput<'a> {
    spec: &'a PlantedSpec,
    h0: Vec<Vec<f64>>,
    w0: Vec<Vec<f64>>,
}

pub fn run_synth(config: &RunConfig) -> CliResult<Vec<PathBuf>> {
    let inst = generate_planted(&config.synth)?;
    let mut out = Artifacts::new(config)?;
    out.csv("m_star.csv", |w| write_aligned_csv(w, &inst.mstar))?;
    if config.export_matrix == Some(MatrixFormat::Bin) {
        out.matrix("m_star", &inst.mstar, MatrixFormat::Bin)?;
    }
    out.csv("h0.csv", |w| write_h_csv(w, &inst.h0))?;
    out.json(
        "planted.json",
        PlantedOutput {
            spec: &inst.spec,
            h0: inst.h0.outer_iter().map(|r| r.to_vec()).collect(),
            w0: inst.w0.outer_iter().map(|r| r.to_vec()).collect(),
        },
    )?;
    if config.plot {
        let vectors: Vec<_> = inst
            .h0
            .outer_iter()
            .enumerate()
            .map(|(r, row)| (format!("h0 role {}", r + 1), row.to_vec()))
            .collect();
        out.plot("h0.svg", &vectors)?;
    }
    Ok(out.written)
}
