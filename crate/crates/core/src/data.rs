//! Labelled image datasets: IDX, CSV and raw-f64 readers and writers, plus a
//! synthetic bars/blobs/stripes generator.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::image::{minmax_normalize, resize, Image};
use crate::quantize::ByteReader;
use crate::{par, seed, Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    #[default]
    Train,
    Test,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub split: Split,
    pub images: Vec<Image>,
    pub labels: Vec<usize>,
}

impl Dataset {
    pub fn new(name: impl Into<String>, split: Split, images: Vec<Image>, labels: Vec<usize>) -> Result<Self> {
        if images.len() != labels.len() {
            return Err(Error::Data(format!("{} images but {} labels", images.len(), labels.len())));
        }
        Ok(Dataset {
            name: name.into(),
            split,
            images,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    /// `(height, width)` shared by every image.
    pub fn shape(&self) -> Result<Option<(usize, usize)>> {
        let Some(first) = self.images.first() else {
            return Ok(None);
        };
        if self.images.iter().any(|i| (i.height, i.width) != (first.height, first.width)) {
            return Err(Error::Data(format!("dataset `{}` mixes image sizes", self.name)));
        }
        Ok(Some((first.height, first.width)))
    }

    pub fn n_classes(&self) -> usize {
        self.labels.iter().max().map_or(0, |m| m + 1)
    }

    pub fn check_labels(&self, n_classes: usize) -> Result<()> {
        match self.labels.iter().position(|&l| l >= n_classes) {
            Some(i) => Err(Error::Data(format!(
                "label {} of image {i} out of range for {n_classes} classes",
                self.labels[i]
            ))),
            None => Ok(()),
        }
    }

    /// Per-image min-max scaling, then box-filter downscaling when the images
    /// are larger than `target`.
    pub fn normalized(&self, target: Option<(usize, usize)>) -> Result<Dataset> {
        let images = par::try_map(&self.images, |img| {
            let img = minmax_normalize(img);
            match target {
                Some((h, w)) if (img.height, img.width) != (h, w) => resize(&img, h, w),
                _ => Ok(img),
            }
        })?;
        Ok(Dataset {
            images,
            ..self.clone()
        })
    }

    pub fn take(&self, n: usize) -> Dataset {
        Dataset {
            name: self.name.clone(),
            split: self.split,
            images: self.images.iter().take(n).cloned().collect(),
            labels: self.labels.iter().take(n).copied().collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Idx,
    Csv,
    #[default]
    Raw,
}

impl FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "idx" => Ok(Format::Idx),
            "csv" => Ok(Format::Csv),
            "raw" => Ok(Format::Raw),
            _ => Err(Error::arg(format!("unknown dataset format `{s}` (idx, csv or raw)"))),
        }
    }
}

impl Format {
    /// Guesses the format from a file name.
    pub fn detect(path: &Path) -> Format {
        let name = path.file_name().map(|n| n.to_string_lossy().to_ascii_lowercase()).unwrap_or_default();
        if name.ends_with(".csv") {
            Format::Csv
        } else if name.contains("idx") || name.ends_with(".ubyte") {
            Format::Idx
        } else {
            Format::Raw
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoadOptions {
    pub format: Option<Format>,
    /// IDX label file; defaults to the images path with `images-idx3`
    /// replaced by `labels-idx1`.
    pub labels: Option<PathBuf>,
    /// Labels must be below this.
    pub n_classes: Option<usize>,
    /// CSV pixels are divided by this.
    pub csv_divisor: f64,
    pub split: Split,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            format: None,
            labels: None,
            n_classes: None,
            csv_divisor: 255.0,
            split: Split::Train,
        }
    }
}

fn read(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

fn dataset_name(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

pub fn load_dataset(path: impl AsRef<Path>, opts: &LoadOptions) -> Result<Dataset> {
    let path = path.as_ref();
    let format = opts.format.unwrap_or_else(|| Format::detect(path));
    let mut ds = match format {
        Format::Idx => {
            let labels_path = match &opts.labels {
                Some(p) => p.clone(),
                None => idx_labels_path(path)?,
            };
            let images = parse_idx_images(&read(path)?).map_err(|e| in_file(path, e))?;
            let labels = parse_idx_labels(&read(&labels_path)?, opts.n_classes).map_err(|e| in_file(&labels_path, e))?;
            if labels.len() != images.len() {
                return Err(Error::Parse(format!(
                    "{} holds {} labels for {} images",
                    labels_path.display(),
                    labels.len(),
                    images.len()
                )));
            }
            Dataset::new(dataset_name(path), opts.split, images, labels)?
        }
        Format::Csv => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            parse_csv(&text, opts.csv_divisor).map_err(|e| in_file(path, e))?
        }
        Format::Raw => load_raw(path)?,
    };
    ds.name = dataset_name(path);
    ds.split = opts.split;
    if let Some(n) = opts.n_classes {
        ds.check_labels(n).map_err(|e| match e {
            Error::Data(m) => Error::Parse(format!("{}: {m}", path.display())),
            e => e,
        })?;
    }
    Ok(ds)
}

fn in_file(path: &Path, e: Error) -> Error {
    match e {
        Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
        e => e,
    }
}

fn idx_labels_path(images: &Path) -> Result<PathBuf> {
    let name = images.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    for (from, to) in [("images-idx3", "labels-idx1"), ("images.idx3", "labels.idx1"), ("images", "labels")] {
        if name.contains(from) {
            return Ok(images.with_file_name(name.replacen(from, to, 1)));
        }
    }
    Err(Error::arg(format!(
        "cannot infer the label file for {}; pass it explicitly",
        images.display()
    )))
}

fn be_u32(r: &mut ByteReader<'_>) -> Result<u32> {
    let at = r.pos;
    let b = r.take(4).map_err(|_| {
        Error::Parse(format!("truncated header: expected 4 bytes at offset {at}, file has {}", r.bytes.len()))
    })?;
    Ok(u32::from_be_bytes(b.try_into().unwrap()))
}

fn idx_header(bytes: &[u8], magic: u32, dims: usize) -> Result<(ByteReader<'_>, Vec<usize>)> {
    let mut r = ByteReader { bytes, pos: 0 };
    let found = be_u32(&mut r)?;
    if found != magic {
        return Err(Error::Parse(format!("bad magic 0x{found:08x} at offset 0, expected 0x{magic:08x}")));
    }
    let shape = (0..dims).map(|_| be_u32(&mut r).map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
    let expected = r.pos + shape.iter().product::<usize>();
    if bytes.len() != expected {
        return Err(Error::Parse(format!(
            "expected {expected} bytes for shape {shape:?}, found {} (data starts at offset {})",
            bytes.len(),
            r.pos
        )));
    }
    Ok((r, shape))
}

/// IDX3 unsigned-byte images scaled by 1/255.
pub fn parse_idx_images(bytes: &[u8]) -> Result<Vec<Image>> {
    let (r, shape) = idx_header(bytes, 0x0000_0803, 3)?;
    let (h, w) = (shape[1], shape[2]);
    let data = &r.bytes[r.pos..];
    if h * w == 0 {
        return Ok(vec![Image::filled(h, w, 0.0); shape[0]]);
    }
    Ok(data
        .chunks_exact(h * w)
        .map(|px| Image {
            height: h,
            width: w,
            data: px.iter().map(|&b| b as f64 / 255.0).collect(),
        })
        .collect())
}

pub fn parse_idx_labels(bytes: &[u8], n_classes: Option<usize>) -> Result<Vec<usize>> {
    let (r, _) = idx_header(bytes, 0x0000_0801, 1)?;
    let start = r.pos;
    r.bytes[start..]
        .iter()
        .enumerate()
        .map(|(i, &b)| match n_classes {
            Some(n) if b as usize >= n => Err(Error::Parse(format!(
                "label {b} at offset {} out of range for {n} classes",
                start + i
            ))),
            _ => Ok(b as usize),
        })
        .collect()
}

fn to_u8(x: f64) -> u8 {
    (x.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Writes an IDX image/label pair; pixels are rounded to the nearest of 256 levels.
pub fn save_idx(ds: &Dataset, images: impl AsRef<Path>, labels: impl AsRef<Path>) -> Result<()> {
    let (h, w) = ds.shape()?.unwrap_or((0, 0));
    if let Some(&l) = ds.labels.iter().find(|&&l| l > 255) {
        return Err(Error::Data(format!("label {l} does not fit in a byte")));
    }
    let mut img = Vec::with_capacity(16 + ds.len() * h * w);
    for v in [0x803u32, ds.len() as u32, h as u32, w as u32] {
        img.extend_from_slice(&v.to_be_bytes());
    }
    for i in &ds.images {
        img.extend(i.data.iter().map(|&x| to_u8(x)));
    }
    let mut lab = Vec::with_capacity(8 + ds.len());
    for v in [0x801u32, ds.len() as u32] {
        lab.extend_from_slice(&v.to_be_bytes());
    }
    lab.extend(ds.labels.iter().map(|&l| l as u8));
    let (images, labels) = (images.as_ref(), labels.as_ref());
    std::fs::write(images, img).map_err(|e| Error::io(images, e))?;
    std::fs::write(labels, lab).map_err(|e| Error::io(labels, e))
}

/// One image per line: integer label, then the pixels row-major. Images must
/// be square. A first line that does not parse as numbers is a header.
pub fn parse_csv(text: &str, divisor: f64) -> Result<Dataset> {
    if !(divisor > 0.0) {
        return Err(Error::arg(format!("CSV divisor must be positive, got {divisor}")));
    }
    let mut images = Vec::new();
    let mut labels = Vec::new();
    let mut offset = 0usize;
    for (n, line) in text.split_inclusive('\n').enumerate() {
        let at = offset;
        offset += line.len();
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',').map(str::trim);
        let first = fields.next().unwrap_or_default();
        let Ok(label) = first.parse::<usize>() else {
            if n == 0 {
                continue;
            }
            return Err(Error::Parse(format!("line {}: bad label `{first}` at byte offset {at}", n + 1)));
        };
        let px = fields
            .map(|f| f.parse::<f64>().map(|v| v / divisor))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Parse(format!("line {}: {e} at byte offset {at}", n + 1)))?;
        let side = (px.len() as f64).sqrt().round() as usize;
        if side * side != px.len() {
            return Err(Error::Parse(format!(
                "line {}: {} pixels do not form a square image (byte offset {at})",
                n + 1,
                px.len()
            )));
        }
        images.push(Image::new(side, side, px)?);
        labels.push(label);
    }
    Dataset::new("csv", Split::Train, images, labels)
}

pub fn save_csv(ds: &Dataset, path: impl AsRef<Path>, divisor: f64) -> Result<()> {
    let mut out = String::new();
    for (img, label) in ds.images.iter().zip(&ds.labels) {
        if img.height != img.width {
            return Err(Error::Data("CSV rows hold square images only".into()));
        }
        out.push_str(&label.to_string());
        for &x in &img.data {
            out.push(',');
            out.push_str(&(x * divisor).to_string());
        }
        out.push('\n');
    }
    let path = path.as_ref();
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct RawHeader {
    count: usize,
    height: usize,
    width: usize,
    dtype: String,
    labels: Vec<usize>,
}

fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Little-endian f64 pixels in `path` with a JSON header in `<path>.json`.
pub fn load_raw(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let header_path = sidecar(path);
    let text = std::fs::read_to_string(&header_path).map_err(|e| Error::io(&header_path, e))?;
    let h: RawHeader =
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", header_path.display())))?;
    if h.dtype != "f64" {
        return Err(Error::Parse(format!("{}: unsupported dtype `{}`", header_path.display(), h.dtype)));
    }
    if h.labels.len() != h.count {
        return Err(Error::Parse(format!(
            "{}: {} labels for count {}",
            header_path.display(),
            h.labels.len(),
            h.count
        )));
    }
    let bytes = read(path)?;
    let per = h.height * h.width;
    let expected = h.count * per * 8;
    if bytes.len() != expected {
        return Err(Error::Parse(format!(
            "{}: expected {expected} bytes, found {}",
            path.display(),
            bytes.len()
        )));
    }
    let values: Vec<f64> = bytes.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().unwrap())).collect();
    let images = (0..h.count)
        .map(|i| Image::new(h.height, h.width, values[i * per..(i + 1) * per].to_vec()))
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(dataset_name(path), Split::Train, images, h.labels)
}

pub fn save_raw(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let (height, width) = ds.shape()?.unwrap_or((0, 0));
    let header = RawHeader {
        count: ds.len(),
        height,
        width,
        dtype: "f64".into(),
        labels: ds.labels.clone(),
    };
    let mut bytes = Vec::with_capacity(ds.len() * height * width * 8);
    for img in &ds.images {
        for v in &img.data {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    let header_path = sidecar(path);
    std::fs::write(&header_path, serde_json::to_string_pretty(&header)?).map_err(|e| Error::io(&header_path, e))
}

/// Shapes drawn by the synthetic generator, one per class. Brightness falls
/// off radially from the shape centre.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Shape {
    HorizontalBar,
    Blob,
    VerticalBar,
    Ring,
    DiagonalStripes,
    HorizontalStripes,
    Cross,
}

impl Shape {
    pub const ALL: [Shape; 7] = [
        Shape::HorizontalBar,
        Shape::Blob,
        Shape::VerticalBar,
        Shape::Ring,
        Shape::DiagonalStripes,
        Shape::HorizontalStripes,
        Shape::Cross,
    ];
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_classes: usize,
    pub count: usize,
    pub size: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_classes: 2,
            count: 200,
            size: 30,
            seed: 0,
        }
    }
}

const INTENSITIES: [f64; 4] = [0.55, 0.7, 0.85, 1.0];

fn draw(shape: Shape, size: usize, rng: &mut impl Rng) -> Image {
    let n = size as f64;
    let mut img = Image::filled(size, size, 0.0);
    let v = INTENSITIES[rng.gen_range(0..INTENSITIES.len())];
    let cy = n * rng.gen_range(0.3..0.7);
    let cx = n * rng.gen_range(0.3..0.7);
    let thick = n * rng.gen_range(0.12..0.22);
    let len = n * rng.gen_range(0.5..0.8);
    let radius = n * rng.gen_range(0.15..0.28);
    let period = rng.gen_range(4..7) as f64;
    let phase = rng.gen_range(0.0..period);
    let falloff = n * rng.gen_range(0.3..0.45);
    for r in 0..size {
        for c in 0..size {
            let (y, x) = (r as f64 + 0.5, c as f64 + 0.5);
            let (dy, dx) = (y - cy, x - cx);
            let d = (dy * dy + dx * dx).sqrt();
            let on = match shape {
                Shape::HorizontalBar => dy.abs() < thick / 2.0 && dx.abs() < len / 2.0,
                Shape::VerticalBar => dx.abs() < thick / 2.0 && dy.abs() < len / 2.0,
                Shape::Blob => d < radius,
                Shape::Ring => d < radius + 1.5 && d > radius - 1.5,
                Shape::DiagonalStripes => d < n * 0.4 && ((x + y + phase) % period) < period / 2.0,
                Shape::HorizontalStripes => d < n * 0.4 && ((y + phase) % period) < period / 2.0,
                Shape::Cross => {
                    (dy.abs() < thick / 3.0 && dx.abs() < len / 2.0) || (dx.abs() < thick / 3.0 && dy.abs() < len / 2.0)
                }
            };
            if on {
                img.data[r * size + c] = v * (-(d / falloff).powi(2)).exp();
            }
        }
    }
    img
}

/// Balanced synthetic dataset: image `i` has class `i mod n_classes` and is
/// drawn from its own derived stream.
pub fn synth_dataset(cfg: &SynthConfig, split: Split) -> Result<Dataset> {
    if cfg.n_classes < 2 || cfg.n_classes > Shape::ALL.len() {
        return Err(Error::arg(format!("synthetic data has 2 to 7 classes, got {}", cfg.n_classes)));
    }
    if cfg.size < 8 {
        return Err(Error::arg(format!("synthetic images need at least 8×8 pixels, got {}", cfg.size)));
    }
    let base = seed::derive(
        cfg.seed,
        match split {
            Split::Train => "synth/train",
            Split::Test => "synth/test",
        },
    );
    let labels: Vec<usize> = (0..cfg.count).map(|i| i % cfg.n_classes).collect();
    let images = par::map_range(cfg.count, |i| {
        draw(Shape::ALL[labels[i]], cfg.size, &mut seed::rng(seed::mix(base, i as u64)))
    });
    Dataset::new(format!("synth{}", cfg.n_classes), split, images, labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantize::{patch_census, quantize_all, Padding, Rounding};

    fn small() -> Dataset {
        synth_dataset(&SynthConfig { n_classes: 7, count: 14, size: 12, seed: 3 }, Split::Test).unwrap()
    }

    #[test]
    fn idx_round_trip_is_exact_on_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let (ip, lp) = (dir.path().join("t-images-idx3-ubyte"), dir.path().join("t-labels-idx1-ubyte"));
        let ds = small();
        save_idx(&ds, &ip, &lp).unwrap();
        let back = load_dataset(&ip, &LoadOptions::default()).unwrap();
        assert_eq!(back.labels, ds.labels);
        for (a, b) in back.images.iter().zip(&ds.images) {
            assert_eq!(a.data.iter().map(|&x| to_u8(x)).collect::<Vec<_>>(), b.data.iter().map(|&x| to_u8(x)).collect::<Vec<_>>());
        }
        let bytes = std::fs::read(&ip).unwrap();
        assert_eq!(parse_idx_images(&bytes).unwrap(), back.images);
    }

    #[test]
    fn idx_errors_carry_offsets() {
        let mut bytes = vec![0, 0, 8, 3, 0, 0, 0, 2, 0, 0, 0, 2, 0, 0, 0, 2];
        bytes.extend([0u8; 7]);
        let msg = parse_idx_images(&bytes).unwrap_err().to_string();
        assert!(msg.contains("expected 24 bytes") && msg.contains("found 23"), "{msg}");
        let msg = parse_idx_images(&[0, 0, 8, 1]).unwrap_err().to_string();
        assert!(msg.contains("bad magic"), "{msg}");
        assert!(parse_idx_images(&[0, 0, 8, 3, 0]).unwrap_err().to_string().contains("offset 4"));
        let labels = [0, 0, 8, 1, 0, 0, 0, 2, 1, 9];
        let msg = parse_idx_labels(&labels, Some(2)).unwrap_err().to_string();
        assert!(msg.contains("offset 9"), "{msg}");
        assert_eq!(parse_idx_labels(&labels, None).unwrap(), vec![1, 9]);
    }

    #[test]
    fn raw_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.raw");
        let ds = small();
        save_raw(&ds, &p).unwrap();
        let back = load_dataset(&p, &LoadOptions::default()).unwrap();
        assert_eq!(back.images, ds.images);
        assert_eq!(back.labels, ds.labels);
        let bytes = std::fs::read(&p).unwrap();
        std::fs::write(&p, &bytes[..bytes.len() - 3]).unwrap();
        assert!(matches!(load_raw(&p), Err(Error::Parse(_))));
    }

    #[test]
    fn csv_round_trip_and_edge_cases() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        let ds = small();
        save_csv(&ds, &p, 255.0).unwrap();
        let back = load_dataset(&p, &LoadOptions::default()).unwrap();
        assert_eq!(back.labels, ds.labels);
        for (a, b) in back.images.iter().zip(&ds.images) {
            for (x, y) in a.data.iter().zip(&b.data) {
                assert!((x - y).abs() < 1e-15);
            }
        }
        assert!(parse_csv("", 255.0).unwrap().is_empty());
        let with_header = parse_csv("label,p0,p1,p2,p3\n1,0,255,51,0\n", 255.0).unwrap();
        assert_eq!(with_header.labels, vec![1]);
        assert_eq!(with_header.images[0].data, vec![0.0, 1.0, 0.2, 0.0]);
        assert!(parse_csv("1,0,0,0\n", 255.0).is_err());
        let msg = parse_csv("0,0,0,0,0\nx,1,1,1,1\n", 255.0).unwrap_err().to_string();
        assert!(msg.contains("byte offset 10"), "{msg}");
    }

    #[test]
    fn label_range_is_checked() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.raw");
        save_raw(&small(), &p).unwrap();
        let opts = LoadOptions { n_classes: Some(3), ..Default::default() };
        assert!(matches!(load_dataset(&p, &opts), Err(Error::Parse(_))));
    }

    #[test]
    fn synthetic_data_is_balanced_and_repetitive() {
        let cfg = SynthConfig { count: 40, ..Default::default() };
        let ds = synth_dataset(&cfg, Split::Train).unwrap();
        assert_eq!(ds.shape().unwrap(), Some((30, 30)));
        assert_eq!(ds.labels.iter().filter(|&&l| l == 1).count(), 20);
        assert!(ds.images.iter().all(Image::in_unit_range));
        assert_eq!(ds, synth_dataset(&cfg, Split::Train).unwrap());
        assert_ne!(ds.images, synth_dataset(&cfg, Split::Test).unwrap().images);
        let q = quantize_all(&ds.images, 50, Rounding::Nearest).unwrap();
        let census = patch_census(&q, 3, Padding::Same).unwrap();
        assert!(census.reduction_percent() > 50.0, "{}", census.reduction_percent());
        assert!(synth_dataset(&SynthConfig { n_classes: 8, ..cfg }, Split::Train).is_err());
    }

    #[test]
    fn normalisation_and_resize() {
        let img = Image::new(2, 4, vec![10.0, 20.0, 30.0, 20.0, 10.0, 20.0, 30.0, 20.0]).unwrap();
        let ds = Dataset::new("x", Split::Train, vec![img], vec![0]).unwrap();
        let out = ds.normalized(Some((1, 2))).unwrap();
        assert_eq!(out.images[0].data, vec![0.25, 0.75]);
        assert!(ds.normalized(Some((4, 4))).is_err());
    }
}
