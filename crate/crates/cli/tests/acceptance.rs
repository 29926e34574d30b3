//! Acceptance suite. Prints one line per criterion and exits non-zero if any
//! criterion fails. Criterion 5 needs the email-Eu-core Dept3 temporal edge
//! list; point `PINFLUENCE_EMAIL_EU_DEPT3` at it or place it under `data/`.
//! Without it the criterion reports SKIP.

use std::collections::BTreeMap;
use std::fs;
use std::panic;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use ndarray::Array2;
use pinfluence::factorize::{extract, factor_rank1, factor_rank1_values, NmfConfig};
use pinfluence::influence::{
    align_matrix, compute_influence_matrix, AlignedInfluenceMatrix, InfluenceMetric,
};
use pinfluence::ingest::{
    parse_edge_list, parse_edge_list_maybe_gzip, plan_snapshots, preprocess, ColumnOrder,
    PreprocessConfig,
};
use pinfluence::similarity::{
    classify_domain, dtw_distance, minmax_normalize, CorpusEntry, SimilarityMeasure,
};
use pinfluence::synth::{generate_planted, shape_family, svd_rank1_oracle, PlantedSpec, Shape};
use pinfluence::uniqueness::{run_uniqueness, Measurement, UniquenessConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = (&'static str, fn() -> Outcome);

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

use Outcome::{Fail, Pass, Skip};

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Pass(detail)
    } else {
        Fail(detail)
    }
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

fn planted(n: usize, t: usize, shape: Shape, noise: f64, seed: u64) -> PlantedSpec {
    PlantedSpec {
        n,
        t,
        k: 1,
        shape,
        noise_level: noise,
        seed,
    }
}

fn frobenius(m: &Array2<f64>) -> f64 {
    m.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn planted_recovery() -> Outcome {
    let mut worst_cos = 1.0f64;
    let mut worst_res = 0.0f64;
    let mut slowest = 0.0f64;
    for (shape, seed) in [(Shape::Decay, 1), (Shape::Plateau, 2), (Shape::Bimodal, 3)] {
        let inst = generate_planted(&planted(200, 400, shape, 0.0, seed)).unwrap();
        let start = Instant::now();
        let pair = extract(&inst.mstar, &NmfConfig::default()).unwrap();
        slowest = slowest.max(start.elapsed().as_secs_f64());
        let h = pair.leading_h();
        worst_cos = worst_cos.min(cosine(
            h.as_slice().unwrap(),
            inst.h0.row(0).as_slice().unwrap(),
        ));
        worst_res = worst_res.max(pair.relative_residual);
    }
    verdict(
        worst_cos >= 1.0 - 1e-8 && worst_res <= 1e-8 && slowest < 5.0,
        format!(
            "min cosine 1-{:.1e}, max residual {worst_res:.1e}, max runtime {slowest:.3}s",
            1.0 - worst_cos
        ),
    )
}

fn rank1_optimality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xA11CE);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let m = Array2::from_shape_simple_fn((30, 50), || rng.gen::<f64>());
        let ours = factor_rank1_values(&m).unwrap().relative_residual * frobenius(&m);
        let oracle = svd_rank1_oracle(&m).unwrap().residual;
        worst = worst.max(ours / oracle);
    }
    verdict(
        worst <= 1.0 + 1e-6,
        format!("max residual ratio to SVD oracle {worst:.12} over 50 matrices"),
    )
}

fn uniqueness_extremes(noise: f64, seeds: std::ops::Range<u64>) -> (f64, f64, f64) {
    let (mut min_cos, mut max_l1, mut max_l2) = (1.0f64, 0.0f64, 0.0f64);
    for seed in seeds {
        let shape = [Shape::Decay, Shape::Plateau, Shape::Bimodal][seed as usize % 3];
        let inst = generate_planted(&planted(200, 400, shape, noise, seed)).unwrap();
        let report = run_uniqueness(&inst.mstar, &UniquenessConfig::default()).unwrap();
        for cell in &report.cells {
            match cell.measurement {
                Measurement::Cosine => min_cos = min_cos.min(cell.mean),
                Measurement::L1Normalized => max_l1 = max_l1.max(cell.mean),
                Measurement::L2Normalized => max_l2 = max_l2.max(cell.mean),
            }
        }
    }
    (min_cos, max_l1, max_l2)
}

fn uniqueness_exact() -> Outcome {
    let (c, l1, l2) = uniqueness_extremes(0.0, 0..3);
    verdict(
        c >= 1.0 - 1e-9 && l1 <= 1e-9 && l2 <= 1e-9,
        format!(
            "min cosine 1-{:.1e}, max L1 {l1:.1e}, max L2 {l2:.1e}",
            1.0 - c
        ),
    )
}

fn uniqueness_noisy() -> Outcome {
    let (c, l1, l2) = uniqueness_extremes(0.01, 0..20);
    verdict(
        c >= 0.99 && l2 <= 1e-3,
        format!("20 seeds: min cosine {c:.6}, max L2 {l2:.1e} (max L1 {l1:.1e})"),
    )
}

fn dept3_path() -> Option<PathBuf> {
    if let Some(p) = std::env::var_os("PINFLUENCE_EMAIL_EU_DEPT3") {
        return Some(PathBuf::from(p));
    }
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data");
    [
        "email-Eu-core-temporal-Dept3.txt",
        "email-Eu-core-temporal-Dept3.txt.gz",
    ]
    .iter()
    .map(|f| root.join(f))
    .find(|p| p.exists())
}

fn real_data() -> Outcome {
    let Some(path) = dept3_path() else {
        return Skip("email-Eu-core Dept3 edge list not found (offline)".into());
    };
    let start = Instant::now();
    let file = fs::File::open(&path).unwrap();
    let list = parse_edge_list_maybe_gzip(file, &ColumnOrder::default()).unwrap();
    let list = preprocess(list, &PreprocessConfig::default());
    let plan = plan_snapshots(&list, 400).unwrap();
    let m = compute_influence_matrix(&list, &plan, InfluenceMetric::Degree).unwrap();
    let mstar = align_matrix(&m);
    let report = run_uniqueness(&mstar, &UniquenessConfig::default()).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let reference = [(5, 0.86), (10, 0.92), (20, 0.91)];
    let means: Vec<f64> = reference
        .iter()
        .map(|&(rho, _)| report.cell(rho, Measurement::Cosine).unwrap().mean)
        .collect();
    let within = reference
        .iter()
        .zip(&means)
        .all(|(&(_, r), &m)| (m - r).abs() <= 0.1);
    verdict(
        within && elapsed < 10.0,
        format!(
            "{} nodes, {} edges, cosine means {:.3}/{:.3}/{:.3}, {elapsed:.2}s",
            list.node_count(),
            list.len(),
            means[0],
            means[1],
            means[2]
        ),
    )
}

fn random_edge_text(rng: &mut ChaCha8Rng) -> String {
    let nodes = rng.gen_range(2..40u64);
    let edges = rng.gen_range(1..600usize);
    let mut text = String::from("# generated\n");
    let mut ts = rng.gen_range(0..1000i64);
    for _ in 0..edges {
        // repeated timestamps, repeated pairs and self-loops all occur
        ts += rng.gen_range(0..3);
        let a = rng.gen_range(0..nodes);
        let b = rng.gen_range(0..nodes);
        text.push_str(&format!("{a} {b} {ts}\n"));
    }
    text
}

fn conservation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut checked = 0usize;
    let mut worst_frac = 0.0f64;
    for _ in 0..200 {
        let text = random_edge_text(&mut rng);
        let list = parse_edge_list(text.as_bytes(), &ColumnOrder::default()).unwrap();
        let keep_loops = rng.gen_bool(0.3);
        let list = preprocess(
            list,
            &PreprocessConfig {
                drop_self_loops: !keep_loops,
            },
        );
        if list.is_empty() {
            continue;
        }
        let t = rng.gen_range(1..=list.len().min(50));
        let plan = plan_snapshots(&list, t).unwrap();
        let m = compute_influence_matrix(&list, &plan, InfluenceMetric::Degree).unwrap();
        for (i, row) in m.values().outer_iter().enumerate() {
            for &v in row {
                let scaled = v * m.n_i()[i] as f64;
                worst_frac = worst_frac.max((scaled - scaled.round()).abs());
            }
        }
        let expected: Vec<u64> = plan.sizes().iter().map(|&s| 2 * s as u64).collect();
        if m.degree_increment_sums() != expected {
            return Fail(format!("mismatch on network {checked}"));
        }
        checked += 1;
    }
    verdict(
        worst_frac < 1e-9,
        format!(
            "{checked} networks, every snapshot exact (max n_i*M rounding gap {worst_frac:.1e})"
        ),
    )
}

fn all_paths(a: &[f64], b: &[f64]) -> Vec<(f64, usize)> {
    fn walk(
        a: &[f64],
        b: &[f64],
        i: usize,
        j: usize,
        acc: f64,
        len: usize,
        out: &mut Vec<(f64, usize)>,
    ) {
        let acc = acc + (a[i] - b[j]).abs();
        if i + 1 == a.len() && j + 1 == b.len() {
            out.push((acc, len + 1));
            return;
        }
        if i + 1 < a.len() && j + 1 < b.len() {
            walk(a, b, i + 1, j + 1, acc, len + 1, out);
        }
        if i + 1 < a.len() {
            walk(a, b, i + 1, j, acc, len + 1, out);
        }
        if j + 1 < b.len() {
            walk(a, b, i, j + 1, acc, len + 1, out);
        }
    }
    let mut out = Vec::new();
    walk(a, b, 0, 0, 0.0, 0, &mut out);
    out
}

fn dtw_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let grid = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        let len = rng.gen_range(1..=6);
        (0..len)
            .map(|_| rng.gen_range(0..=16) as f64 / 16.0)
            .collect()
    };
    for pair in 0..1000 {
        let (a, b) = (grid(&mut rng), grid(&mut rng));
        let paths = all_paths(&a, &b);
        let best = paths.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
        let d = dtw_distance(&a, &b).unwrap();
        let (m, n) = (a.len(), b.len());
        if d.distance != best || !(m.max(n)..m + n).contains(&d.steps) {
            return Fail(format!(
                "pair {pair}: dp {} vs enumeration {best}, steps {}",
                d.distance, d.steps
            ));
        }
        if !paths.iter().any(|&(c, len)| c == best && len == d.steps) {
            return Fail(format!(
                "pair {pair}: steps {} is not an optimal path length",
                d.steps
            ));
        }
    }
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let len = rng.gen_range(2..64);
        let x: Vec<f64> = (0..len).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let (a, b) = (rng.gen_range(1e-3..1e3), rng.gen_range(-1e3..1e3));
        let y: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        let d = dtw_distance(
            &minmax_normalize(&y).unwrap().values,
            &minmax_normalize(&x).unwrap().values,
        )
        .unwrap();
        worst = worst.max(d.distance);
    }
    verdict(
        worst <= 1e-12,
        format!("1000 pairs match enumeration; affine max distance {worst:.1e}"),
    )
}

fn classification() -> Outcome {
    let t = 200;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut corpus = Vec::new();
    for (shape, category, seed) in [(Shape::Decay, "decay", 80), (Shape::Plateau, "plateau", 81)] {
        for (i, h) in shape_family(shape, 8, t, seed).into_iter().enumerate() {
            // embed each pattern in a noisy rank-1 network and extract it back
            let w: Vec<f64> = (0..40).map(|_| rng.gen_range(0.5..1.5)).collect();
            let mean = w.iter().sum::<f64>() / 40.0 * h.iter().sum::<f64>() / t as f64;
            let m = Array2::from_shape_fn((40, t), |(r, c)| {
                (w[r] * h[c] + 0.01 * mean * rng.gen_range(-1.0..1.0)).max(0.0)
            });
            let pair = factor_rank1(&AlignedInfluenceMatrix::from_values(m).unwrap()).unwrap();
            corpus.push(
                CorpusEntry::new(
                    format!("{category}-{i}"),
                    category,
                    pair.leading_h().to_vec(),
                )
                .unwrap(),
            );
        }
    }
    let mut correct = 0;
    for i in 0..corpus.len() {
        let rest: Vec<_> = corpus
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, e)| e.clone())
            .collect();
        let r = classify_domain(&rest, &corpus[i].h, SimilarityMeasure::DtwAveraged).unwrap();
        correct += usize::from(r.predicted == corpus[i].category);
    }
    verdict(correct == 16, format!("leave-one-out {correct}/16"))
}

fn cli(dir: &Path, threads: &str, args: &[&str]) {
    let out = Command::new(env!("CARGO_BIN_EXE_pinfluence"))
        .current_dir(dir)
        .env("RAYON_NUM_THREADS", threads)
        .env_remove("PINFLUENCE_OUT_DIR")
        .args(args)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn pipeline_run(dir: &Path, threads: &str) -> BTreeMap<PathBuf, Vec<u8>> {
    fs::create_dir_all(dir).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    fs::write(dir.join("edges.txt"), random_edge_text(&mut rng)).unwrap();
    let mut manifest = String::from("name,category,path\n");
    for (i, shape) in ["decay", "plateau", "bimodal", "decay"].iter().enumerate() {
        let s = format!("synth{i}");
        let seed = i.to_string();
        cli(
            dir,
            threads,
            &[
                "synth",
                "--n",
                "40",
                "--t",
                "50",
                "--k",
                "2",
                "--shape",
                shape,
                "--noise",
                "0.02",
                "--seed",
                &seed,
                "--export-matrix",
                "bin",
                "--plot",
                "-o",
                &s,
            ],
        );
        let e = format!("extract{i}");
        cli(
            dir,
            threads,
            &[
                "extract",
                "--matrix",
                &format!("{s}/m_star.csv"),
                "--k",
                "2",
                "--plot",
                "-o",
                &e,
            ],
        );
        manifest.push_str(&format!("net{i},{shape},{e}/h.json\n"));
    }
    fs::write(dir.join("manifest.csv"), manifest).unwrap();
    cli(
        dir,
        threads,
        &[
            "extract",
            "--input",
            "edges.txt",
            "--snapshots",
            "40",
            "--metric",
            "betweenness",
            "--export-matrix",
            "csv",
            "-o",
            "between",
        ],
    );
    cli(
        dir,
        threads,
        &[
            "validate",
            "--matrix",
            "synth0/m_star.bin",
            "--k",
            "2",
            "--rho",
            "5,10",
            "-o",
            "validate",
        ],
    );
    cli(
        dir,
        threads,
        &[
            "compare",
            "--manifest",
            "manifest.csv",
            "--plot",
            "-o",
            "compare",
        ],
    );
    cli(
        dir,
        threads,
        &[
            "classify",
            "--manifest",
            "manifest.csv",
            "--query",
            "extract3/h.csv",
            "-o",
            "classify",
        ],
    );

    let mut files = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().to_path_buf();
                files.insert(rel, fs::read(&path).unwrap());
            }
        }
    }
    files
}

fn reproducibility() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let a = pipeline_run(&tmp.path().join("a"), "1");
    let b = pipeline_run(&tmp.path().join("b"), "4");
    let c = pipeline_run(&tmp.path().join("c"), "0");
    let differing: Vec<_> = a
        .iter()
        .filter(|(k, v)| b.get(*k) != Some(v) || c.get(*k) != Some(v))
        .map(|(k, _)| k.display().to_string())
        .collect();
    verdict(
        differing.is_empty() && a.len() == b.len() && a.len() == c.len(),
        if differing.is_empty() {
            format!(
                "{} artifacts byte-identical across 1, 4 and default threads",
                a.len()
            )
        } else {
            format!("differing: {}", differing.join(", "))
        },
    )
}

fn main() {
    let criteria: [Check; 9] = [
        ("planted recovery", planted_recovery),
        ("rank-1 optimality", rank1_optimality),
        ("uniqueness, exact regime", uniqueness_exact),
        ("uniqueness, noisy regime", uniqueness_noisy),
        ("real data, email-Eu-core Dept3", real_data),
        ("conservation", conservation),
        ("DTW correctness", dtw_correctness),
        ("classification separability", classification),
        ("reproducibility", reproducibility),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failures = 0;
    for (i, (name, check)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = panic::catch_unwind(check).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Fail(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match outcome {
            Pass(d) => ("PASS", d),
            Fail(d) => {
                failures += 1;
                ("FAIL", d)
            }
            Skip(d) => ("SKIP", d),
        };
        println!("criterion {} {tag} {name}: {detail} [{secs:.2}s]", i + 1);
    }
    if failures > 0 {
        println!("{failures} criteria failed");
        std::process::exit(1);
    }
}
