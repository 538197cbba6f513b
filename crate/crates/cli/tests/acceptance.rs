//! Acceptance suite. Runs every criterion in order, prints one PASS/FAIL line
//! each, and exits nonzero if any failed.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use mcca::baselines::{cca_fit, mpca_fit, pca_fit, Method, VectorConfig};
use mcca::ingest::{load_idx, load_idx_labels, load_pnm, read_tensor, write_tensor};
use mcca::linalg::orthonormalize;
use mcca::mcca::{fit, objective_total, FitConfig};
use mcca::metrics::{param_count, principal_angles, read_records, rer, write_records};
use mcca::synth::SynthConfig;
use mcca::tensor::kronecker;
use mcca::{DenseMatrix, DenseTensor, GroupedDataset, ModeCovariances, ModelFile, SymmetricMatrix};
use mcca_cli::{cmd_alpha_scan, cmd_fit, cmd_rer_curve, cmd_synth, ExperimentSpec, RankGrid, SynthSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempfile::TempDir;

const SUITE_SIZE: usize = 100;
const SUITE_SEED: u64 = 0x5eed;
const MONOTONE_SLACK: f64 = 1e-10;
const SUITE_BUDGET: Duration = Duration::from_secs(30);
const UPPER_BOUND_SLACK: f64 = 1e-8;
const FULL_RANK_ALPHA_TOL: f64 = 1e-12;
const KRONECKER_OBJECTIVE_TOL: f64 = 1e-8;
const KRONECKER_IDENTITY_TOL: f64 = 1e-10;
const KRONECKER_MAX_DIM: usize = 64;
const KRONECKER_PAIRS: usize = 50;
const PCA_ANGLE_TOL: f64 = 1e-8;
const PCA_CASES: usize = 20;
const LOSSLESS_RER_TOL: f64 = 1e-10;
const ALPHA_CROSS_MODE_TOL: f64 = 0.05;
const ALPHA_MONOTONE_SLACK: f64 = 1e-12;
const RER_SLACK: f64 = 0.01;
const CURVE_BUDGET: Duration = Duration::from_secs(120);
const COMPLEXITY_RATIO: f64 = 2.0;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn random_orthonormal(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    orthonormalize(&DenseMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))).unwrap()
}

fn random_psd(p: usize, rng: &mut ChaCha8Rng) -> SymmetricMatrix {
    let extra = rng.random_range(0..3);
    let a = DenseMatrix::from_fn(p, p + extra, |_, _| rng.random_range(-1.0..1.0));
    SymmetricMatrix::from_matrix_lower(&a.matmul(&a.transpose()).unwrap()).unwrap()
}

fn random_dataset(shape: &[usize], groups: usize, per_group: usize, rng: &mut ChaCha8Rng) -> GroupedDataset {
    let groups = (0..groups)
        .map(|_| {
            (0..per_group)
                .map(|_| DenseTensor::from_fn(shape.to_vec(), |_| rng.random_range(-1.0..1.0)).unwrap())
                .collect()
        })
        .collect();
    GroupedDataset::new(groups).unwrap()
}

struct Instance {
    cov: ModeCovariances,
    ranks: Vec<usize>,
}

fn random_suite() -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(SUITE_SEED);
    (0..SUITE_SIZE)
        .map(|_| {
            let g = rng.random_range(1..=3);
            let m = rng.random_range(1..=3);
            let shape: Vec<usize> = (0..m).map(|_| rng.random_range(1..=8)).collect();
            let ranks: Vec<usize> = shape.iter().map(|&p| rng.random_range(1..=p)).collect();
            let mats = (0..g).map(|_| shape.iter().map(|&p| random_psd(p, &mut rng)).collect()).collect();
            Instance {
                cov: ModeCovariances::from_matrices(shape, mats).unwrap(),
                ranks,
            }
        })
        .collect()
}

fn suite_fits(suite: &[Instance]) -> Vec<mcca::FitReport> {
    suite
        .iter()
        .map(|inst| fit(&inst.cov, &FitConfig::new(inst.ranks.clone())).unwrap().1)
        .collect()
}

fn monotone_objective() -> Outcome {
    let start = Instant::now();
    let reports = suite_fits(&random_suite());
    let elapsed = start.elapsed();
    let worst = reports.iter().map(|r| r.worst_relative_decrease()).fold(0.0, f64::max);
    let iters: usize = reports.iter().map(|r| r.iterations).sum();
    outcome(
        worst <= MONOTONE_SLACK && elapsed < SUITE_BUDGET,
        format!(
            "{SUITE_SIZE} fits, {iters} iterations, worst relative decrease {worst:.2e}, {:.2}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn surrogate_bounds() -> Outcome {
    let suite = random_suite();
    let reports = suite_fits(&suite);
    let upper_ok = reports.iter().filter(|r| r.upper_bounds_met(UPPER_BOUND_SLACK)).count();
    let lower_ok = reports.iter().filter(|r| r.lower_bounds_met(0.0)).count();
    let by_order: Vec<String> = (1..=3)
        .map(|m| {
            let of_order: Vec<_> = suite.iter().zip(&reports).filter(|(i, _)| i.cov.n_modes() == m).collect();
            let met = of_order.iter().filter(|(_, r)| r.lower_bounds_met(0.0)).count();
            format!("M={m} {met}/{}", of_order.len())
        })
        .collect();
    let worst_ratio = reports
        .iter()
        .flat_map(|r| r.bounds.iter().map(move |b| r.final_objective() / b.upper()))
        .fold(0.0, f64::max);
    outcome(
        upper_ok == reports.len(),
        format!(
            "upper bound held in {upper_ok}/{} (max final/bound {worst_ratio:.12}); lower bound alpha*max held in {:.0}% ({}; reported only)",
            reports.len(),
            100.0 * lower_ok as f64 / reports.len() as f64,
            by_order.join(", ")
        ),
    )
}

fn alpha_range() -> Outcome {
    let suite = random_suite();
    let reports = suite_fits(&suite);
    let mut in_range = true;
    let mut full = 0;
    let mut worst_full = 0.0f64;
    for (inst, rep) in suite.iter().zip(&reports) {
        for (k, &a) in rep.alphas.iter().enumerate() {
            in_range &= (0.0..=1.0).contains(&a);
            if inst.ranks[k] == inst.cov.shape()[k] {
                full += 1;
                worst_full = worst_full.max((a - 1.0).abs());
            }
        }
    }
    outcome(
        in_range && worst_full <= FULL_RANK_ALPHA_TOL && full > 0,
        format!("all alphas in [0,1]: {in_range}; {full} full-rank modes, max |alpha-1| {worst_full:.1e}"),
    )
}

fn naive_kron(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    DenseMatrix::from_fn(a.rows() * b.rows(), a.cols() * b.cols(), |i, j| {
        a.get(i / b.rows(), j / b.cols()) * b.get(i % b.rows(), j % b.cols())
    })
}

fn kronecker_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst_obj = 0.0f64;
    let mut checked = 0;
    for inst in random_suite() {
        let shape = inst.cov.shape();
        if shape.iter().product::<usize>() > KRONECKER_MAX_DIM {
            continue;
        }
        let bases: Vec<DenseMatrix> =
            shape.iter().zip(&inst.ranks).map(|(&p, &r)| random_orthonormal(p, r, &mut rng)).collect();
        let v_star = bases[1..].iter().fold(bases[0].clone(), |acc, v| naive_kron(&acc, v));
        let mut want = 0.0;
        for g in 0..inst.cov.n_groups() {
            let s_star = (1..shape.len())
                .fold(inst.cov.get(g, 0).as_matrix().clone(), |acc, k| naive_kron(&acc, inst.cov.get(g, k).as_matrix()));
            let lam = v_star.t_matmul(&s_star.matmul(&v_star).unwrap()).unwrap();
            want += lam.matmul(&lam).unwrap().trace();
        }
        let got = objective_total(&bases, &inst.cov).unwrap();
        worst_obj = worst_obj.max((got - want).abs() / want.abs().max(f64::MIN_POSITIVE));
        checked += 1;
    }
    let mut worst_id = 0.0f64;
    for _ in 0..KRONECKER_PAIRS {
        let dims: Vec<usize> = (0..6).map(|_| rng.random_range(1..=4)).collect();
        let a = DenseMatrix::from_fn(dims[0], dims[0], |_, _| rng.random_range(-1.0..1.0));
        let b = DenseMatrix::from_fn(dims[1], dims[1], |_, _| rng.random_range(-1.0..1.0));
        let trace_err = (kronecker(&a, &b).trace() - a.trace() * b.trace()).abs();
        let (p, q) = (dims[2], dims[3]);
        let c = DenseMatrix::from_fn(dims[0], p, |_, _| rng.random_range(-1.0..1.0));
        let d = DenseMatrix::from_fn(dims[1], q, |_, _| rng.random_range(-1.0..1.0));
        let lhs = kronecker(&a, &b).matmul(&kronecker(&c, &d)).unwrap();
        let rhs = kronecker(&a.matmul(&c).unwrap(), &b.matmul(&d).unwrap());
        worst_id = worst_id.max(trace_err).max(lhs.max_abs_diff(&rhs));
    }
    outcome(
        worst_obj <= KRONECKER_OBJECTIVE_TOL && worst_id <= KRONECKER_IDENTITY_TOL && checked > 0,
        format!(
            "{checked} instances vs explicit Kronecker trace, max rel err {worst_obj:.1e}; {KRONECKER_PAIRS} pairs, max identity err {worst_id:.1e}"
        ),
    )
}

fn pca_degeneration() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for _ in 0..PCA_CASES {
        let p = rng.random_range(2..=10);
        let r = rng.random_range(1..p);
        let q = random_orthonormal(p, p, &mut rng);
        // distinct eigenvalues p, p-1, ..., 1 scaled by a random factor
        let scale = rng.random_range(0.5..5.0);
        let lam: Vec<f64> = (0..p).map(|i| scale * (p - i) as f64).collect();
        let s = q.matmul(&DenseMatrix::from_diagonal(&lam)).unwrap().matmul(&q.transpose()).unwrap();
        let cov = ModeCovariances::from_matrices(vec![p], vec![vec![SymmetricMatrix::from_matrix_lower(&s).unwrap()]])
            .unwrap();
        let (model, _) = fit(&cov, &FitConfig::new(vec![r])).unwrap();
        let angles = principal_angles(model.basis(0), &q.leading_columns(r)).unwrap();
        worst = worst.max(angles.iter().cloned().fold(0.0, f64::max));
    }
    outcome(worst < PCA_ANGLE_TOL, format!("{PCA_CASES} covariances, max principal angle {worst:.1e}"))
}

fn lossless_full_rank() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut lines = Vec::new();
    let mut pass = true;
    for shape in [vec![4, 3], vec![3, 2, 2]] {
        let data = random_dataset(&shape, 2, 6, &mut rng);
        let p: usize = shape.iter().product();
        let (m, _) = fit(&ModeCovariances::from_dataset(&data).unwrap(), &FitConfig::new(shape.clone())).unwrap();
        let mp = mpca_fit(&data, &FitConfig::new(shape.clone())).unwrap().model;
        let pc = pca_fit(&data, &VectorConfig::new(p)).unwrap();
        let (cc, _) = cca_fit(&data, &VectorConfig::new(p)).unwrap();
        for (name, e) in [
            ("mcca", rer(&data, &m).unwrap()),
            ("mpca", rer(&data, &mp).unwrap()),
            ("pca", rer(&data, &pc).unwrap()),
            ("cca", rer(&data, &cc).unwrap()),
        ] {
            pass &= e < LOSSLESS_RER_TOL;
            lines.push(format!("{name}{shape:?} {e:.1e}"));
        }
    }
    outcome(pass, lines.join(", "))
}

fn idx_bytes(dims: &[u32], payload: &[u8]) -> Vec<u8> {
    let mut b = vec![0, 0, 0x08, dims.len() as u8];
    for d in dims {
        b.extend_from_slice(&d.to_be_bytes());
    }
    b.extend_from_slice(payload);
    b
}

/// 100 random 28×28 byte images with labels cycling over ten classes, and a
/// manifest selecting ten per class.
fn mnist_small(dir: &Path, rng: &mut ChaCha8Rng) -> std::path::PathBuf {
    let n = 100u32;
    let payload: Vec<u8> = (0..n * 784).map(|_| rng.random()).collect();
    fs::write(dir.join("images-idx3-ubyte"), idx_bytes(&[n, 28, 28], &payload)).unwrap();
    let labels: Vec<u8> = (0..n).map(|i| (i % 10) as u8).collect();
    fs::write(dir.join("labels-idx1-ubyte"), idx_bytes(&[n], &labels)).unwrap();
    let mut toml = String::from("version = 1\n");
    for c in 0..10 {
        toml += &format!(
            "[[group]]\nlabel = \"digit{c}\"\nfiles = [\"images-idx3-ubyte\"]\nlabels = \"labels-idx1-ubyte\"\nclass = {c}\nlimit = 10\n"
        );
    }
    let path = dir.join("mnist-small.toml");
    fs::write(&path, toml).unwrap();
    path
}

fn parameter_accounting() -> Outcome {
    let count = param_count(Method::Mcca, &[28, 28], &[8, 8], 100);
    let dir = TempDir::new().unwrap();
    let manifest = mnist_small(dir.path(), &mut ChaCha8Rng::seed_from_u64(7));
    let mut pass = count == 6848;
    let mut lines = vec![format!("param_count = {count}")];
    for (method, ranks) in [
        (Method::Mcca, vec![8, 8]),
        (Method::Mpca, vec![8, 8]),
        (Method::Pca, vec![64]),
        (Method::Cca, vec![16]),
    ] {
        let mut spec = ExperimentSpec::new(&manifest, RankGrid::single(ranks.clone()), dir.path().join(method.as_str()));
        spec.methods = vec![method];
        spec.max_iter = 20;
        let out = cmd_fit(&spec).unwrap();
        let stored = ModelFile::load(&out.model_path).unwrap().parameter_census();
        let expected = param_count(method, &[28, 28], &ranks, 100);
        let cr_census = stored as f64 / (100.0 * 784.0);
        pass &= stored == expected && out.record.params == expected && cr_census == out.record.cr;
        lines.push(format!("{method} census {stored} / formula {expected}"));
    }
    outcome(pass, lines.join(", "))
}

fn alpha_rows(scan: &mcca_cli::AlphaScan, mode: usize) -> BTreeMap<usize, Vec<f64>> {
    let mut by_own: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for r in scan.rows.iter().filter(|r| r.mode == mode) {
        by_own.entry(r.ranks[mode - 1]).or_default().push(r.alpha);
    }
    by_own
}

fn alpha_scan_for(seed: u64, dir: &Path) -> mcca_cli::AlphaScan {
    let manifest = cmd_synth(&SynthSpec {
        config: SynthConfig {
            shape: vec![20, 20],
            ranks: vec![5, 5],
            groups: 5,
            samples_per_group: 20,
            noise: 0.1,
            seed,
        },
        out: dir.join(format!("data{seed}")),
    })
    .unwrap();
    let spec = ExperimentSpec::new(manifest, RankGrid::parse("1-20;1-20", false).unwrap(), dir.join(format!("scan{seed}")));
    cmd_alpha_scan(&spec).unwrap()
}

fn cross_mode_spread(scan: &mcca_cli::AlphaScan, mode: usize) -> f64 {
    alpha_rows(scan, mode)
        .values()
        .map(|v| v.iter().cloned().fold(f64::MIN, f64::max) - v.iter().cloned().fold(f64::MAX, f64::min))
        .fold(0.0, f64::max)
}

fn alpha_scan_shape() -> Outcome {
    let dir = TempDir::new().unwrap();
    let scan = alpha_scan_for(0, dir.path());
    let mut pass = true;
    let mut lines = Vec::new();
    for mode in 1..=2 {
        let other = 3 - mode;
        let mut slices: BTreeMap<usize, Vec<(usize, f64)>> = BTreeMap::new();
        for r in scan.rows.iter().filter(|r| r.mode == mode) {
            slices.entry(r.ranks[other - 1]).or_default().push((r.ranks[mode - 1], r.alpha));
        }
        let monotone = slices.values_mut().all(|s| {
            s.sort_by_key(|p| p.0);
            s.windows(2).all(|w| w[1].1 >= w[0].1 - ALPHA_MONOTONE_SLACK)
        });
        let at_full = alpha_rows(&scan, mode)[&20].iter().all(|a| (a - 1.0).abs() <= FULL_RANK_ALPHA_TOL);
        let spread = cross_mode_spread(&scan, mode);
        pass &= monotone && at_full && spread < ALPHA_CROSS_MODE_TOL;
        lines.push(format!(
            "alpha_{mode}: non-decreasing {monotone}, 1 at R{mode}=20 {at_full}, max spread over R{other} {spread:.4}"
        ));
    }
    let others: Vec<String> = (1..=5)
        .map(|seed| {
            let s = alpha_scan_for(seed, dir.path());
            format!("{:.3}/{:.3}", cross_mode_spread(&s, 1), cross_mode_spread(&s, 2))
        })
        .collect();
    lines.push(format!("spread at seeds 1-5 (informational) {}", others.join(" ")));
    outcome(pass, lines.join("; "))
}

/// Linear interpolation of `(cr, rer)` points sorted by CR; outside the range
/// the nearest end point is used.
fn interpolate(curve: &[(f64, f64)], x: f64) -> f64 {
    if x <= curve[0].0 {
        return curve[0].1;
    }
    for w in curve.windows(2) {
        if x <= w[1].0 {
            let t = (x - w[0].0) / (w[1].0 - w[0].0);
            return w[0].1 + t * (w[1].1 - w[0].1);
        }
    }
    curve[curve.len() - 1].1
}

fn rer_comparison() -> Outcome {
    let start = Instant::now();
    let dir = TempDir::new().unwrap();
    let manifest = cmd_synth(&SynthSpec {
        config: SynthConfig {
            shape: vec![12, 12],
            ranks: vec![4, 4],
            groups: 5,
            samples_per_group: 20,
            noise: 0.1,
            seed: 0,
        },
        out: dir.path().join("data"),
    })
    .unwrap();
    let mut spec = ExperimentSpec::new(manifest, RankGrid::parse("1-6", true).unwrap(), dir.path().join("curve"));
    spec.methods = vec![Method::Mcca, Method::Mpca, Method::Cca];
    spec.vector_ranks = Some((1..=16).collect());
    let records = cmd_rer_curve(&spec).unwrap();
    let elapsed = start.elapsed();

    let of = |m: Method| records.iter().filter(move |r| r.method == m);
    let cca: Vec<(f64, f64)> = of(Method::Cca).map(|r| (r.cr, r.rer)).collect();
    let mut pass = elapsed < CURVE_BUDGET;
    let mut lines = Vec::new();
    for m in of(Method::Mcca) {
        let mpca = of(Method::Mpca).find(|r| r.ranks == m.ranks).unwrap();
        let cca_rer = interpolate(&cca, m.cr);
        let ok = m.rer <= mpca.rer + RER_SLACK && m.rer <= cca_rer + RER_SLACK;
        pass &= ok;
        lines.push(format!(
            "{} cr {:.4}: mcca {:.4} mpca {:.4} cca {:.4}{}",
            m.ranks_label(),
            m.cr,
            m.rer,
            mpca.rer,
            cca_rer,
            if ok { "" } else { " <- exceeds slack" }
        ));
    }
    lines.push(format!("{:.1}s", elapsed.as_secs_f64()));
    outcome(pass, lines.join("; "))
}

fn per_iteration_time(data: &GroupedDataset, iterations: usize) -> Duration {
    let cov = ModeCovariances::from_dataset(data).unwrap();
    let config = FitConfig::new(vec![3, 3]).with_tol(f64::MIN_POSITIVE).with_max_iter(iterations);
    (0..5)
        .map(|_| {
            let start = Instant::now();
            let (_, report) = fit(&cov, &config).unwrap();
            start.elapsed() / report.iterations.max(1) as u32
        })
        .min()
        .unwrap()
}

fn complexity_smoke() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let small = random_dataset(&[10, 10], 3, 20, &mut rng);
    let large = random_dataset(&[10, 10], 3, 200, &mut rng);
    let t_small = per_iteration_time(&small, 20);
    let t_large = per_iteration_time(&large, 20);
    let ratio = t_large.as_secs_f64() / t_small.as_secs_f64();
    outcome(
        ratio < COMPLEXITY_RATIO && ratio > 1.0 / COMPLEXITY_RATIO,
        format!(
            "per iteration {:.1}us at N=60, {:.1}us at N=600, ratio {ratio:.2}",
            t_small.as_secs_f64() * 1e6,
            t_large.as_secs_f64() * 1e6
        ),
    )
}

fn model_bytes(file: &ModelFile) -> Vec<u8> {
    let mut buf = Vec::new();
    file.write(&mut buf).unwrap();
    buf
}

fn format_round_trips() -> Outcome {
    let dir = TempDir::new().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut checks: Vec<(&str, bool)> = Vec::new();

    let payload: Vec<u8> = (0..2 * 3 * 4).map(|_| rng.random()).collect();
    let idx = dir.path().join("fixture-idx3");
    fs::write(&idx, idx_bytes(&[2, 3, 4], &payload)).unwrap();
    let images = load_idx(&idx).unwrap();
    let back: Vec<u8> = images
        .iter()
        .flat_map(|t| (0..3).flat_map(move |r| (0..4).map(move |c| t.get(&[r, c]) as u8)))
        .collect();
    checks.push(("idx images", back == payload && images.iter().all(|t| t.shape() == [3, 4])));
    let labels_path = dir.path().join("fixture-idx1");
    fs::write(&labels_path, idx_bytes(&[5], &[0, 1, 7, 255, 3])).unwrap();
    checks.push(("idx labels", load_idx_labels(&labels_path).unwrap() == vec![0, 1, 7, 255, 3]));

    let mut pgm = b"P5\n# fixture\n3 2\n255\n".to_vec();
    let raster: Vec<u8> = (0..6).map(|_| rng.random()).collect();
    pgm.extend_from_slice(&raster);
    fs::write(dir.path().join("f.pgm"), &pgm).unwrap();
    let t = load_pnm(dir.path().join("f.pgm")).unwrap();
    let pgm_back: Vec<u8> = (0..2).flat_map(|r| (0..3).map(move |c| (r, c))).map(|(r, c)| t.get(&[r, c]) as u8).collect();
    checks.push(("pgm", t.shape() == [2, 3] && pgm_back == raster));
    let mut ppm = b"P6\n2 1\n255\n".to_vec();
    ppm.extend_from_slice(&[1, 2, 3, 4, 5, 6]);
    fs::write(dir.path().join("f.ppm"), &ppm).unwrap();
    let t = load_pnm(dir.path().join("f.ppm")).unwrap();
    checks.push(("ppm", t.shape() == [1, 2, 3] && t.get(&[0, 1, 2]) == 6.0 && t.get(&[0, 0, 1]) == 2.0));

    let mut mctn_ok = true;
    for _ in 0..20 {
        let shape: Vec<usize> = (0..rng.random_range(1..=4)).map(|_| rng.random_range(1..=5)).collect();
        let x = DenseTensor::from_fn(shape, |_| {
            f64::from_bits((rng.random::<u64>() >> 2) | (rng.random::<u64>() & (1 << 63)))
        })
        .unwrap();
        let mut buf = Vec::new();
        write_tensor(&mut buf, &x).unwrap();
        let y = read_tensor(buf.as_slice(), Path::new("mem")).unwrap();
        let mut again = Vec::new();
        write_tensor(&mut again, &y).unwrap();
        mctn_ok &= again == buf && x.data().iter().zip(y.data()).all(|(a, b)| a.to_bits() == b.to_bits());
    }
    checks.push(("mctn", mctn_ok));

    let data = random_dataset(&[5, 4], 3, 5, &mut rng);
    let (m, _) = fit(&ModeCovariances::from_dataset(&data).unwrap(), &FitConfig::new(vec![2, 3])).unwrap();
    let files = [
        ModelFile::from_mcca(&m).with_codes(&data).unwrap(),
        ModelFile::from_mpca(&mpca_fit(&data, &FitConfig::new(vec![3, 2])).unwrap().model).with_codes(&data).unwrap(),
        ModelFile::from_linear(&pca_fit(&data, &VectorConfig::new(4)).unwrap(), &[5, 4]).unwrap().with_codes(&data).unwrap(),
        ModelFile::from_linear(&cca_fit(&data, &VectorConfig::new(3)).unwrap().0, &[5, 4]).unwrap(),
    ];
    let models_ok = files.iter().all(|f| {
        let bytes = model_bytes(f);
        let back = ModelFile::read(&bytes, Path::new("mem")).unwrap();
        back == *f && model_bytes(&back) == bytes
    });
    checks.push(("model containers", models_ok));

    let records: Vec<_> = [Method::Mcca, Method::Mpca]
        .into_iter()
        .flat_map(|method| {
            (1..=3).map(move |r| mcca::CompressionRecord {
                method,
                ranks: vec![r, r + 1],
                params: param_count(method, &[5, 4], &[r, r + 1], 15),
                cr: mcca::cr(method, &[5, 4], &[r, r + 1], 15),
                rer: 1.0 / (r as f64 * 3.0),
            })
        })
        .collect();
    let mut buf = Vec::new();
    write_records(&mut buf, &records).unwrap();
    checks.push(("rer csv", read_records(buf.as_slice()).unwrap() == records));

    let pass = checks.iter().all(|c| c.1);
    let detail: Vec<String> = checks.iter().map(|(n, ok)| format!("{n} {}", if *ok { "ok" } else { "MISMATCH" })).collect();
    outcome(pass, detail.join(", "))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("monotone objective trace", monotone_objective),
        ("surrogate upper bound", surrogate_bounds),
        ("contraction ratio range", alpha_range),
        ("Kronecker objective oracle", kronecker_oracle),
        ("single-mode single-group is PCA", pca_degeneration),
        ("lossless at full rank", lossless_full_rank),
        ("parameter accounting", parameter_accounting),
        ("contraction ratio scan", alpha_scan_shape),
        ("RER at matched CR", rer_comparison),
        ("per-iteration cost independent of N", complexity_smoke),
        ("format round trips", format_round_trips),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let out = run();
        failed += usize::from(!out.pass);
        println!(
            "criterion {:>2} {} {name}: {}",
            i + 1,
            if out.pass { "PASS" } else { "FAIL" },
            out.detail
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
