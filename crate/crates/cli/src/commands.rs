use std::collections::BTreeMap;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use log::{info, warn};
use mcca::baselines::{cca_fit, mpca_fit, pca_fit, LinearModel, Method, VectorConfig};
use mcca::ingest::save_tensor;
use mcca::mcca::{fit, FitConfig, FitReport, ModeSpectra, DEFAULT_EIG_TOL, DEFAULT_MAX_ITER, DEFAULT_TOL};
use mcca::metrics::{format_real, write_records, CompressionRecord, Reconstruct};
use mcca::synth::{generate, write_dataset, SynthConfig};
use mcca::{assemble, mode_covariance, DatasetManifest, GroupedDataset, MccaError, ModeCovariances, ModelFile, Result};

use crate::grid::RankGrid;
use crate::svg::{line_chart, Series};

/// Inputs shared by `fit`, `alpha-scan` and `rer-curve`.
#[derive(Clone, Debug)]
pub struct ExperimentSpec {
    pub manifest: PathBuf,
    pub methods: Vec<Method>,
    pub grid: RankGrid,
    /// Ranks tried by the vector methods in `rer-curve`; by default each grid
    /// point's `Π R_k`, capped at the vectorized dimension.
    pub vector_ranks: Option<Vec<usize>>,
    pub tol: f64,
    pub max_iter: usize,
    pub out: PathBuf,
    pub svg: bool,
}

impl ExperimentSpec {
    pub fn new(manifest: impl Into<PathBuf>, grid: RankGrid, out: impl Into<PathBuf>) -> Self {
        Self {
            manifest: manifest.into(),
            methods: vec![Method::Mcca],
            grid,
            vector_ranks: None,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            out: out.into(),
            svg: false,
        }
    }

    fn fit_config(&self, ranks: Vec<usize>) -> FitConfig {
        FitConfig::new(ranks).with_tol(self.tol).with_max_iter(self.max_iter)
    }

    fn load(&self) -> Result<GroupedDataset> {
        if self.methods.is_empty() {
            return Err(MccaError::InvalidConfig("method list is empty".into()));
        }
        let data = assemble(&DatasetManifest::load(&self.manifest)?)?;
        for &m in &self.methods {
            validate_points(self.grid.points(), m, data.shape())?;
        }
        info!(
            "loaded {} groups, {} samples of shape {:?}",
            data.n_groups(),
            data.total_samples(),
            data.shape()
        );
        Ok(data)
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| MccaError::io(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| MccaError::io(path, e))
}

/// Multilinear methods need one rank per mode; vector methods accept either a
/// single rank or a per-mode tuple whose product is used.
fn validate_points(points: &[Vec<usize>], method: Method, shape: &[usize]) -> Result<()> {
    if method.is_multilinear() {
        return RankGrid::validate_points(points, shape);
    }
    let p: usize = shape.iter().product();
    for point in points {
        if point.len() == 1 {
            RankGrid::validate_points(std::slice::from_ref(point), &[p])?;
        } else {
            RankGrid::validate_points(std::slice::from_ref(point), shape)?;
        }
    }
    Ok(())
}

fn vector_rank(ranks: &[usize], shape: &[usize]) -> usize {
    let p: usize = shape.iter().product();
    if ranks.len() == 1 {
        ranks[0]
    } else {
        ranks.iter().product::<usize>().min(p)
    }
}

enum Fitted {
    Mcca(mcca::MccaModel, FitReport),
    Mpca(mcca::MpcaModel, Vec<f64>, bool),
    Linear(LinearModel, Vec<f64>, bool),
}

impl Fitted {
    fn model(&self) -> &dyn Reconstruct {
        match self {
            Fitted::Mcca(m, _) => m,
            Fitted::Mpca(m, _, _) => m,
            Fitted::Linear(m, _, _) => m,
        }
    }

    fn file(&self, shape: &[usize]) -> Result<ModelFile> {
        match self {
            Fitted::Mcca(m, _) => Ok(ModelFile::from_mcca(m)),
            Fitted::Mpca(m, _, _) => Ok(ModelFile::from_mpca(m)),
            Fitted::Linear(m, _, _) => ModelFile::from_linear(m, shape),
        }
    }

    fn trace(&self) -> &[f64] {
        match self {
            Fitted::Mcca(_, r) => &r.objective_trace,
            Fitted::Mpca(_, t, _) | Fitted::Linear(_, t, _) => t,
        }
    }

    fn converged(&self) -> bool {
        match self {
            Fitted::Mcca(_, r) => r.converged,
            Fitted::Mpca(_, _, c) | Fitted::Linear(_, _, c) => *c,
        }
    }
}

fn fit_method(
    data: &GroupedDataset,
    cov: Option<&ModeCovariances>,
    method: Method,
    ranks: &[usize],
    spec: &ExperimentSpec,
) -> Result<Fitted> {
    Ok(match method {
        Method::Mcca => {
            let config = spec.fit_config(ranks.to_vec());
            let (model, report) = match cov {
                Some(c) => fit(c, &config)?,
                None => fit(&ModeCovariances::from_dataset(data)?, &config)?,
            };
            Fitted::Mcca(model, report)
        }
        Method::Mpca => {
            let f = mpca_fit(data, &spec.fit_config(ranks.to_vec()))?;
            Fitted::Mpca(f.model, f.scatter_trace, f.converged)
        }
        Method::Pca | Method::Cca => {
            let config = VectorConfig {
                fit: spec.fit_config(vec![vector_rank(ranks, data.shape())]),
                cap: mcca::baselines::DEFAULT_VECTOR_CAP,
            };
            if method == Method::Pca {
                let model = pca_fit(data, &config)?;
                let s = mode_covariance(data.pooled().vectorized().group(0), 0)?;
                let captured = s.congruence(model.basis())?.trace();
                Fitted::Linear(model, vec![captured], true)
            } else {
                let (model, report) = cca_fit(data, &config)?;
                Fitted::Linear(model, report.objective_trace, report.converged)
            }
        }
    })
}

fn warn_if_oversized(record: &CompressionRecord) {
    if record.cr > 1.0 {
        warn!(
            "{} at ranks {} stores more than the raw data (CR = {:.4})",
            record.method,
            record.ranks_label(),
            record.cr
        );
    }
}

#[derive(Clone, Debug)]
pub struct FitOutcome {
    pub model_path: PathBuf,
    pub report_path: PathBuf,
    pub record: CompressionRecord,
    pub iterations: usize,
    pub converged: bool,
    pub parameter_census: u64,
}

/// Fits one method at one rank tuple and writes `model.mcca`, `report.csv`
/// and `summary.csv` into the output directory.
///
/// `report.csv` holds the objective after initialization (iteration 0) and
/// after each sweep; MCCA rows add `alpha_k`, `lower_k` and `upper_k` per
/// mode.
pub fn cmd_fit(spec: &ExperimentSpec) -> Result<FitOutcome> {
    let data = spec.load()?;
    let [method] = spec.methods[..] else {
        return Err(MccaError::InvalidConfig("fit takes exactly one method".into()));
    };
    let [ranks] = spec.grid.points() else {
        return Err(MccaError::InvalidConfig("fit takes exactly one rank tuple".into()));
    };
    let fitted = fit_method(&data, None, method, ranks, spec)?;
    let record = CompressionRecord::evaluate(&data, fitted.model())?;
    warn_if_oversized(&record);

    create_dir(&spec.out)?;
    let file = fitted.file(data.shape())?.with_codes(&data)?;
    let model_path = spec.out.join("model.mcca");
    file.save(&model_path)?;

    let report_path = spec.out.join("report.csv");
    let mut w = csv::Writer::from_path(&report_path)?;
    let mut header = vec!["iteration".to_string(), "objective".to_string()];
    if let Fitted::Mcca(_, report) = &fitted {
        for k in 1..=report.bounds.len() {
            header.extend([format!("alpha_{k}"), format!("lower_{k}"), format!("upper_{k}")]);
        }
    }
    w.write_record(&header)?;
    for (i, f) in fitted.trace().iter().enumerate() {
        let mut row = vec![i.to_string(), format_real(*f)];
        if let Fitted::Mcca(_, report) = &fitted {
            for b in &report.bounds {
                row.extend([format_real(b.alpha), format_real(b.lower()), format_real(b.upper())]);
            }
        }
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| MccaError::io(&report_path, e))?;

    let summary = spec.out.join("summary.csv");
    let f = fs::File::create(&summary).map_err(|e| MccaError::io(&summary, e))?;
    write_records(f, std::slice::from_ref(&record))?;

    Ok(FitOutcome {
        model_path,
        report_path,
        iterations: fitted.trace().len() - 1,
        converged: fitted.converged(),
        parameter_census: file.parameter_census(),
        record,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlphaRow {
    pub ranks: Vec<usize>,
    /// One-based mode number.
    pub mode: usize,
    pub alpha: f64,
}

#[derive(Clone, Debug)]
pub struct AlphaScan {
    pub rows: Vec<AlphaRow>,
    /// Per mode, whether `α⁽ᵏ⁾` never decreases as `R_k` grows with the other
    /// ranks held fixed.
    pub monotone: Vec<bool>,
    pub csv_path: PathBuf,
    pub svg_paths: Vec<PathBuf>,
}

/// Groups one mode's rows by the other modes' ranks, each slice sorted by
/// the mode's own rank.
fn slices(rows: &[AlphaRow], mode: usize) -> BTreeMap<Vec<usize>, Vec<(usize, f64)>> {
    let k = mode - 1;
    let mut out: BTreeMap<Vec<usize>, Vec<(usize, f64)>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.mode == mode) {
        let mut others = r.ranks.clone();
        others.remove(k);
        out.entry(others).or_default().push((r.ranks[k], r.alpha));
    }
    out.values_mut().for_each(|v| v.sort_by_key(|p| p.0));
    out
}

/// Contraction ratios of every mode at every grid point, written to
/// `alpha_scan.csv` with columns `r1..rM,mode,alpha`.
pub fn cmd_alpha_scan(spec: &ExperimentSpec) -> Result<AlphaScan> {
    let data = spec.load()?;
    let cov = ModeCovariances::from_dataset(&data)?;
    let spectra = ModeSpectra::compute(&cov, DEFAULT_EIG_TOL)?;
    let mut rows = Vec::new();
    for ranks in spec.grid.points() {
        let alphas = spectra.contraction_ratios(&cov, ranks, DEFAULT_EIG_TOL)?;
        for (k, alpha) in alphas.into_iter().enumerate() {
            rows.push(AlphaRow {
                ranks: ranks.clone(),
                mode: k + 1,
                alpha,
            });
        }
    }
    let m = cov.n_modes();
    let monotone: Vec<bool> = (1..=m)
        .map(|mode| {
            slices(&rows, mode)
                .values()
                .all(|s| s.windows(2).all(|w| w[1].1 >= w[0].1 - 1e-12))
        })
        .collect();
    for (k, ok) in monotone.iter().enumerate() {
        if !ok {
            warn!("alpha_{} decreases along its own rank axis somewhere on the grid", k + 1);
        }
    }

    create_dir(&spec.out)?;
    let csv_path = spec.out.join("alpha_scan.csv");
    let mut w = csv::Writer::from_path(&csv_path)?;
    let mut header: Vec<String> = (1..=m).map(|k| format!("r{k}")).collect();
    header.extend(["mode".into(), "alpha".into()]);
    w.write_record(&header)?;
    for r in &rows {
        let mut rec: Vec<String> = r.ranks.iter().map(usize::to_string).collect();
        rec.extend([r.mode.to_string(), format_real(r.alpha)]);
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| MccaError::io(&csv_path, e))?;

    let mut svg_paths = Vec::new();
    if spec.svg {
        for mode in 1..=m {
            let series: Vec<Series> = slices(&rows, mode)
                .into_iter()
                .map(|(others, pts)| {
                    let label: Vec<String> = (1..=m)
                        .filter(|&j| j != mode)
                        .zip(&others)
                        .map(|(j, r)| format!("R{j}={r}"))
                        .collect();
                    Series {
                        name: label.join(" "),
                        points: pts.into_iter().map(|(r, a)| (r as f64, a)).collect(),
                    }
                })
                .collect();
            let path = spec.out.join(format!("alpha_mode{mode}.svg"));
            write_text(
                &path,
                &line_chart(&format!("alpha_{mode}"), &format!("R{mode}"), "alpha", &series),
            )?;
            svg_paths.push(path);
        }
    }
    Ok(AlphaScan {
        rows,
        monotone,
        csv_path,
        svg_paths,
    })
}

/// Parses a file written by [`cmd_alpha_scan`].
pub fn read_alpha_scan<R: Read>(reader: R) -> Result<Vec<AlphaRow>> {
    let mut r = csv::Reader::from_reader(reader);
    let header = r.headers()?.clone();
    let m = header.len().saturating_sub(2);
    let bad = |msg: String| MccaError::InvalidConfig(format!("alpha scan: {msg}"));
    if m == 0 || &header[m] != "mode" || &header[m + 1] != "alpha" {
        return Err(bad(format!("unexpected header {header:?}")));
    }
    r.records()
        .map(|rec| {
            let rec = rec?;
            let num = |i: usize| rec[i].parse::<usize>().map_err(|_| bad(format!("bad integer '{}'", &rec[i])));
            Ok(AlphaRow {
                ranks: (0..m).map(num).collect::<Result<_>>()?,
                mode: num(m)?,
                alpha: rec[m + 1].parse().map_err(|_| bad(format!("bad real '{}'", &rec[m + 1])))?,
            })
        })
        .collect()
}

/// Fits every method at every grid point and writes `rer_curve.csv`,
/// sorted by method then CR.
pub fn cmd_rer_curve(spec: &ExperimentSpec) -> Result<Vec<CompressionRecord>> {
    let data = spec.load()?;
    let shape = data.shape().to_vec();
    let p: usize = shape.iter().product();
    let cov = if spec.methods.contains(&Method::Mcca) {
        Some(ModeCovariances::from_dataset(&data)?)
    } else {
        None
    };
    let vector_ranks: Vec<usize> = match &spec.vector_ranks {
        Some(v) => v.clone(),
        None => {
            let mut v: Vec<usize> = spec.grid.points().iter().map(|r| vector_rank(r, &shape)).collect();
            v.sort_unstable();
            v.dedup();
            v
        }
    };
    if let Some(&r) = vector_ranks.iter().find(|&&r| r == 0 || r > p) {
        return Err(MccaError::InvalidRanks(format!("vector rank {r} outside 1..={p}")));
    }

    let mut records = Vec::new();
    for &method in &spec.methods {
        let points: Vec<Vec<usize>> = if method.is_multilinear() {
            spec.grid.points().to_vec()
        } else {
            vector_ranks.iter().map(|&r| vec![r]).collect()
        };
        let mut per_method = Vec::with_capacity(points.len());
        for ranks in &points {
            let fitted = fit_method(&data, cov.as_ref(), method, ranks, spec)?;
            let record = CompressionRecord::evaluate(&data, fitted.model())?;
            info!("{} {}: cr {:.5} rer {:.5}", method, record.ranks_label(), record.cr, record.rer);
            warn_if_oversized(&record);
            per_method.push(record);
        }
        per_method.sort_by(|a, b| a.cr.total_cmp(&b.cr).then_with(|| a.ranks.cmp(&b.ranks)));
        records.extend(per_method);
    }

    create_dir(&spec.out)?;
    let csv_path = spec.out.join("rer_curve.csv");
    let f = fs::File::create(&csv_path).map_err(|e| MccaError::io(&csv_path, e))?;
    write_records(f, &records)?;
    if spec.svg {
        let series: Vec<Series> = spec
            .methods
            .iter()
            .map(|&m| Series {
                name: m.to_string(),
                points: records.iter().filter(|r| r.method == m).map(|r| (r.cr, r.rer)).collect(),
            })
            .collect();
        write_text(&spec.out.join("rer_curve.svg"), &line_chart("RER vs CR", "CR", "RER", &series))?;
    }
    Ok(records)
}

#[derive(Clone, Debug)]
pub struct SynthSpec {
    pub config: SynthConfig,
    pub out: PathBuf,
}

/// Generates a dataset, writes its samples and manifest, and stores the
/// planted bases as `basis{k}.mctn` (a `P_k × R_k` 2-mode tensor each).
/// Returns the manifest path.
pub fn cmd_synth(spec: &SynthSpec) -> Result<PathBuf> {
    let synth = generate(&spec.config)?;
    create_dir(&spec.out)?;
    let manifest = write_dataset(&spec.out, &synth.data)?;
    for (k, v) in synth.bases.iter().enumerate() {
        save_tensor(spec.out.join(format!("basis{}.mctn", k + 1)), &v.clone().into_tensor())?;
    }
    Ok(manifest)
}

/// Describes a manifest (`.toml`) or a model file.
pub fn cmd_info(path: &Path) -> Result<String> {
    if path.extension().is_some_and(|e| e == "toml") {
        let data = assemble(&DatasetManifest::load(path)?)?;
        let mut s = format!(
            "dataset: {} groups, {} samples, shape {:?}\n",
            data.n_groups(),
            data.total_samples(),
            data.shape()
        );
        for (label, n) in data.labels().iter().zip(data.group_sizes()) {
            s += &format!("  {label}: {n}\n");
        }
        Ok(s)
    } else {
        let file = ModelFile::load(path)?;
        let mut s = format!(
            "model: {}\nshape: {:?}\nranks: {:?}\ngroups: {}\nsamples: {}\nparameters: {}\n",
            file.method,
            file.shape,
            file.ranks(),
            file.latent.len(),
            file.codes.len(),
            file.parameter_census()
        );
        if !file.alphas.is_empty() {
            let a: Vec<String> = file.alphas.iter().map(|a| format!("{a:.6}")).collect();
            s += &format!("alpha: {}\n", a.join(" "));
        }
        Ok(s)
    }
}
