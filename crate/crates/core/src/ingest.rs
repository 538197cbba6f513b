//! Dataset loaders: IDX image files, binary PGM/PPM, the native MCTN1 tensor
//! container, and TOML manifests that assemble them into grouped datasets.
//!
//! Pixel bytes become reals unchanged (0–255), with no normalization.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::covariance::GroupedDataset;
use crate::error::{MccaError, Result};
use crate::tensor::DenseTensor;

const IDX_U8: u8 = 0x08;
pub const MCTN_MAGIC: &[u8; 5] = b"MCTN1";
pub const MANIFEST_VERSION: u32 = 1;

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| MccaError::io(path, e))
}

/// Parses the IDX header, returning the dimension sizes and the payload.
fn idx_parts<'a>(bytes: &'a [u8], path: &Path) -> Result<(Vec<usize>, &'a [u8])> {
    if bytes.len() < 4 || bytes[0] != 0 || bytes[1] != 0 {
        return Err(MccaError::format(path, "bad IDX magic"));
    }
    if bytes[2] != IDX_U8 {
        return Err(MccaError::format(
            path,
            format!("unsupported IDX element type 0x{:02x}", bytes[2]),
        ));
    }
    let ndim = bytes[3] as usize;
    if ndim == 0 {
        return Err(MccaError::format(path, "IDX file declares zero dimensions"));
    }
    let header_len = 4 + 4 * ndim;
    if bytes.len() < header_len {
        return Err(MccaError::format(path, "truncated IDX header"));
    }
    let dims: Vec<usize> = bytes[4..header_len]
        .chunks_exact(4)
        .map(|c| u32::from_be_bytes([c[0], c[1], c[2], c[3]]) as usize)
        .collect();
    let expected = dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d));
    let payload = &bytes[header_len..];
    match expected {
        Some(n) if payload.len() == n => Ok((dims, payload)),
        Some(n) => Err(MccaError::format(
            path,
            format!("IDX payload has {} bytes, header implies {n}", payload.len()),
        )),
        None => Err(MccaError::format(path, "IDX dimensions overflow")),
    }
}

/// Loads an IDX file of unsigned bytes. The first dimension counts samples;
/// each sample becomes a tensor over the remaining dimensions, so a rank-3
/// file of 28×28 images yields 2-mode tensors with element `(row, col)`.
pub fn load_idx(path: impl AsRef<Path>) -> Result<Vec<DenseTensor>> {
    let path = path.as_ref();
    let bytes = read_file(path)?;
    let (dims, payload) = idx_parts(&bytes, path)?;
    if dims.len() < 2 {
        return Err(MccaError::format(path, "IDX sample file needs at least two dimensions"));
    }
    let shape = dims[1..].to_vec();
    let size: usize = shape.iter().product();
    if size == 0 {
        return Ok(Vec::new());
    }
    Ok(payload
        .chunks_exact(size)
        .map(|raw| row_major_tensor(&shape, raw))
        .collect())
}

/// Loads a rank-1 IDX label file.
pub fn load_idx_labels(path: impl AsRef<Path>) -> Result<Vec<u8>> {
    let path = path.as_ref();
    let bytes = read_file(path)?;
    let (dims, payload) = idx_parts(&bytes, path)?;
    if dims.len() != 1 {
        return Err(MccaError::format(path, "IDX label file must have one dimension"));
    }
    Ok(payload.to_vec())
}

/// Builds a tensor from bytes stored last-index-fastest.
fn row_major_tensor(shape: &[usize], raw: &[u8]) -> DenseTensor {
    let mut strides = vec![1usize; shape.len()];
    for k in (0..shape.len().saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * shape[k + 1];
    }
    DenseTensor::from_fn(shape.to_vec(), |ix| {
        let off: usize = ix.iter().zip(&strides).map(|(i, s)| i * s).sum();
        f64::from(raw[off])
    })
    .expect("shape matches payload")
}

struct PnmHeader<'a> {
    channels: usize,
    width: usize,
    height: usize,
    raster: &'a [u8],
}

fn parse_pnm<'a>(bytes: &'a [u8], path: &Path) -> Result<PnmHeader<'a>> {
    let channels = match bytes.get(..2) {
        Some(b"P5") => 1,
        Some(b"P6") => 3,
        Some([b'P', d]) if d.is_ascii_digit() => {
            return Err(MccaError::format(
                path,
                format!("unsupported PNM variant P{}; only binary P5/P6 are read", *d as char),
            ))
        }
        _ => return Err(MccaError::format(path, "not a PNM file")),
    };
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in &mut fields {
        loop {
            match bytes.get(pos) {
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| MccaError::format(path, "malformed PNM header"))?;
    }
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(MccaError::format(path, "malformed PNM header"));
    }
    let [width, height, maxval] = fields;
    if maxval == 0 || maxval > 255 {
        return Err(MccaError::format(path, format!("unsupported maxval {maxval}")));
    }
    let raster = &bytes[pos + 1..];
    let need = width * height * channels;
    if raster.len() < need {
        return Err(MccaError::format(
            path,
            format!("truncated raster: {} of {need} bytes", raster.len()),
        ));
    }
    Ok(PnmHeader {
        channels,
        width,
        height,
        raster: &raster[..need],
    })
}

/// Loads a binary PGM as a `rows × cols` tensor or a binary PPM as
/// `rows × cols × 3`.
pub fn load_pnm(path: impl AsRef<Path>) -> Result<DenseTensor> {
    let path = path.as_ref();
    let bytes = read_file(path)?;
    let h = parse_pnm(&bytes, path)?;
    let shape = if h.channels == 1 {
        vec![h.height, h.width]
    } else {
        vec![h.height, h.width, h.channels]
    };
    Ok(row_major_tensor(&shape, h.raster))
}

/// Mean pooling over `factor × factor` blocks of the first two modes;
/// leftover rows and columns are dropped.
pub fn downsample(t: &DenseTensor, factor: usize) -> Result<DenseTensor> {
    if factor == 0 {
        return Err(MccaError::InvalidConfig("downsample factor must be at least 1".into()));
    }
    if t.order() < 2 {
        return Err(MccaError::InvalidShape("downsampling needs at least two modes".into()));
    }
    let (p0, p1) = (t.shape()[0], t.shape()[1]);
    if factor > p0 || factor > p1 {
        return Err(MccaError::InvalidShape(format!(
            "factor {factor} exceeds extent {p0}x{p1}"
        )));
    }
    if factor == 1 {
        return Ok(t.clone());
    }
    let mut shape = t.shape().to_vec();
    shape[0] = p0 / factor;
    shape[1] = p1 / factor;
    let area = (factor * factor) as f64;
    let mut src = vec![0; t.order()];
    DenseTensor::from_fn(shape, |ix| {
        src.copy_from_slice(ix);
        let mut sum = 0.0;
        for a in 0..factor {
            for b in 0..factor {
                src[0] = ix[0] * factor + a;
                src[1] = ix[1] * factor + b;
                sum += t.get(&src);
            }
        }
        sum / area
    })
}

/// Averages the trailing channel mode of a 3-mode tensor.
pub fn grayscale(t: &DenseTensor) -> Result<DenseTensor> {
    if t.order() != 3 {
        return Err(MccaError::InvalidShape(format!(
            "grayscale conversion expects 3 modes, got {}",
            t.order()
        )));
    }
    let c = t.shape()[2];
    DenseTensor::from_fn(t.shape()[..2].to_vec(), |ix| {
        (0..c).map(|ch| t.get(&[ix[0], ix[1], ch])).sum::<f64>() / c as f64
    })
}

pub fn write_tensor<W: Write>(mut w: W, t: &DenseTensor) -> std::io::Result<()> {
    w.write_all(MCTN_MAGIC)?;
    w.write_all(&(t.order() as u32).to_le_bytes())?;
    for &d in t.shape() {
        w.write_all(&(d as u32).to_le_bytes())?;
    }
    for &v in t.data() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_tensor<R: Read>(mut r: R, path: &Path) -> Result<DenseTensor> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf).map_err(|e| MccaError::io(path, e))?;
    let mut cur = ByteCursor::new(&buf, path);
    cur.expect_magic(MCTN_MAGIC)?;
    let order = cur.u32()? as usize;
    let shape = (0..order).map(|_| cur.u32().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
    let len: usize = shape.iter().product();
    let data = cur.f64s(len)?;
    cur.finish()?;
    DenseTensor::new(shape, data)
}

pub fn save_tensor(path: impl AsRef<Path>, t: &DenseTensor) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::with_capacity(9 + 4 * t.order() + 8 * t.len());
    write_tensor(&mut buf, t).map_err(|e| MccaError::io(path, e))?;
    fs::write(path, buf).map_err(|e| MccaError::io(path, e))
}

pub fn load_tensor(path: impl AsRef<Path>) -> Result<DenseTensor> {
    let path = path.as_ref();
    read_tensor(read_file(path)?.as_slice(), path)
}

/// Little-endian reader over an in-memory buffer.
pub(crate) struct ByteCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> ByteCursor<'a> {
    pub(crate) fn new(bytes: &'a [u8], path: &'a Path) -> Self {
        Self { bytes, pos: 0, path }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| MccaError::format(self.path, "unexpected end of file"))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    pub(crate) fn expect_magic(&mut self, magic: &[u8]) -> Result<()> {
        if self.take(magic.len()).ok() != Some(magic) {
            return Err(MccaError::format(self.path, "bad magic"));
        }
        Ok(())
    }

    pub(crate) fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub(crate) fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    pub(crate) fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let bytes = self.take(n.checked_mul(8).ok_or_else(|| MccaError::format(self.path, "size overflow"))?)?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect())
    }

    pub(crate) fn finish(&self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(MccaError::format(
                self.path,
                format!("{} trailing bytes", self.bytes.len() - self.pos),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channels {
    #[default]
    Keep,
    Grayscale,
}

/// One group of a manifest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupSpec {
    pub label: String,
    /// Glob patterns relative to the manifest root.
    pub files: Vec<String>,
    /// IDX label file used with `class` to select samples from IDX files.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class: Option<u8>,
    /// Keep at most this many samples, after sorting.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limit: Option<usize>,
    /// Glob patterns of files to skip.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub exclude: Vec<String>,
}

/// Dataset description, stored as TOML:
///
/// ```toml
/// version = 1
/// root = "faces"          # optional, relative to the manifest file
/// downsample = 2          # mean-pooling factor, default 1
/// channels = "keep"       # or "grayscale"
///
/// [[group]]
/// label = "s01"
/// files = ["s01/*.pgm"]
/// exclude = ["s01/10.pgm"]
/// limit = 9
/// ```
///
/// Files ending in `.pgm`, `.ppm` or `.pnm` are read as PNM, `.mctn` as the
/// native container, and anything else as IDX.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub root: Option<PathBuf>,
    #[serde(default = "default_factor")]
    pub downsample: usize,
    #[serde(default)]
    pub channels: Channels,
    #[serde(rename = "group")]
    pub groups: Vec<GroupSpec>,
}

fn default_factor() -> usize {
    1
}

impl DatasetManifest {
    pub fn from_toml(text: &str) -> Result<Self> {
        let m: DatasetManifest = toml::from_str(text).map_err(|e| MccaError::Manifest(e.to_string()))?;
        m.validate()?;
        Ok(m)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| MccaError::Manifest(e.to_string()))
    }

    /// Reads a manifest, resolving `root` against the manifest's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| MccaError::io(path, e))?;
        let mut m = Self::from_toml(&text)?;
        let dir = path.parent().unwrap_or(Path::new("."));
        m.root = Some(match m.root.take() {
            Some(r) if r.is_absolute() => r,
            Some(r) => dir.join(r),
            None => dir.to_path_buf(),
        });
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != MANIFEST_VERSION {
            return Err(MccaError::Manifest(format!(
                "unsupported manifest version {}",
                self.version
            )));
        }
        if self.downsample == 0 {
            return Err(MccaError::Manifest("downsample factor must be at least 1".into()));
        }
        if self.groups.is_empty() {
            return Err(MccaError::Manifest("manifest lists no groups".into()));
        }
        for g in &self.groups {
            if g.files.is_empty() {
                return Err(MccaError::Manifest(format!("group '{}' lists no files", g.label)));
            }
            if g.class.is_some() != g.labels.is_some() {
                return Err(MccaError::Manifest(format!(
                    "group '{}': 'class' and 'labels' must be given together",
                    g.label
                )));
            }
            if g.limit == Some(0) {
                return Err(MccaError::Manifest(format!("group '{}': limit must be positive", g.label)));
            }
        }
        Ok(())
    }

    fn root(&self) -> PathBuf {
        self.root.clone().unwrap_or_else(|| PathBuf::from("."))
    }
}

fn expand(root: &Path, patterns: &[String]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in patterns {
        let full = root.join(p);
        let full = full.to_string_lossy();
        let paths = glob::glob(&full).map_err(|e| MccaError::Manifest(format!("bad pattern '{p}': {e}")))?;
        for entry in paths {
            out.push(entry.map_err(|e| MccaError::Manifest(e.to_string()))?);
        }
    }
    out.sort();
    out.dedup();
    Ok(out)
}

fn load_any(path: &Path) -> Result<Vec<DenseTensor>> {
    let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
    match ext.as_deref() {
        Some("pgm" | "ppm" | "pnm") => Ok(vec![load_pnm(path)?]),
        Some("mctn") => Ok(vec![load_tensor(path)?]),
        _ => load_idx(path),
    }
}

fn load_group(root: &Path, spec: &GroupSpec) -> Result<Vec<DenseTensor>> {
    let excluded = expand(root, &spec.exclude)?;
    let files: Vec<PathBuf> = expand(root, &spec.files)?
        .into_iter()
        .filter(|p| !excluded.contains(p))
        .collect();
    if files.is_empty() {
        return Err(MccaError::Manifest(format!("group '{}' matched no files", spec.label)));
    }
    let wanted = match (&spec.labels, spec.class) {
        (Some(l), Some(c)) => Some((load_idx_labels(root.join(l))?, c)),
        _ => None,
    };
    let mut samples = Vec::new();
    for f in &files {
        let loaded = load_any(f)?;
        match &wanted {
            Some((labels, class)) => {
                if labels.len() != loaded.len() {
                    return Err(MccaError::Manifest(format!(
                        "{} has {} samples but the label file has {}",
                        f.display(),
                        loaded.len(),
                        labels.len()
                    )));
                }
                samples.extend(loaded.into_iter().zip(labels).filter(|(_, l)| *l == class).map(|(x, _)| x));
            }
            None => samples.extend(loaded),
        }
    }
    if let Some(limit) = spec.limit {
        samples.truncate(limit);
    }
    if samples.is_empty() {
        return Err(MccaError::Manifest(format!("group '{}' has no samples", spec.label)));
    }
    Ok(samples)
}

fn preprocess(x: DenseTensor, m: &DatasetManifest) -> Result<DenseTensor> {
    let x = match m.channels {
        Channels::Grayscale if x.order() == 3 => grayscale(&x)?,
        _ => x,
    };
    if m.downsample > 1 {
        downsample(&x, m.downsample)
    } else {
        Ok(x)
    }
}

/// Loads every group in manifest order, samples in sorted path order.
pub fn assemble(manifest: &DatasetManifest) -> Result<GroupedDataset> {
    manifest.validate()?;
    let root = manifest.root();
    let mut groups = Vec::with_capacity(manifest.groups.len());
    for spec in &manifest.groups {
        let samples = load_group(&root, spec)?
            .into_iter()
            .map(|x| preprocess(x, manifest))
            .collect::<Result<Vec<_>>>()?;
        groups.push(samples);
    }
    let labels = manifest.groups.iter().map(|g| g.label.clone()).collect();
    GroupedDataset::with_labels(groups, labels)
}
