//! The quanvolutional layer: sliding-window patch extraction, memoised
//! filter evaluation and multi-channel feature maps.

use std::collections::HashSet;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::circuit::CircuitSpec;
use crate::quantize::{for_each_patch, ByteReader, MemoTable, PatchKey, QuantizedImage};
use crate::sim::{self, DecodeMode};
use crate::{par, seed, Error, Result};

pub use crate::quantize::Padding;

/// Channel-major `channels × height × width` output of the layer.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMap {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<f64>,
}

impl FeatureMap {
    #[inline]
    pub fn get(&self, channel: usize, row: usize, col: usize) -> f64 {
        self.data[(channel * self.height + row) * self.width + col]
    }
}

#[derive(Clone, Debug)]
pub struct LayerConfig {
    pub filters: Vec<CircuitSpec>,
    pub k: usize,
    pub padding: Padding,
    pub decode: DecodeMode,
    /// Master seed for sampled decoding.
    pub seed: u64,
    filter_ids: Vec<String>,
}

impl LayerConfig {
    pub fn new(filters: Vec<CircuitSpec>, decode: DecodeMode, seed: u64) -> Result<Self> {
        let Some(first) = filters.first() else {
            return Err(Error::Config("a quanvolutional layer needs at least one filter".into()));
        };
        let k = first.k;
        if let Some(f) = filters.iter().find(|f| f.k != k) {
            return Err(Error::Config(format!("filters mix kernel sizes {k} and {}", f.k)));
        }
        if let DecodeMode::Sampled { shots: 0 } = decode {
            return Err(Error::Config("sampled decoding needs at least one shot".into()));
        }
        let filter_ids = filters.iter().map(CircuitSpec::hash).collect();
        Ok(LayerConfig {
            filters,
            k,
            padding: Padding::Same,
            decode,
            seed,
            filter_ids,
        })
    }

    pub fn channels(&self) -> usize {
        self.filters.len()
    }

    pub fn filter_ids(&self) -> &[String] {
        &self.filter_ids
    }
}

/// Stride-1 windows in row-major order of their top-left output position.
pub fn extract_patches(image: &QuantizedImage, k: usize, padding: Padding) -> Vec<(usize, usize, PatchKey)> {
    let mut out = Vec::with_capacity(padding.positions(image.height, k) * padding.positions(image.width, k));
    for_each_patch(image, k, padding, |r, c, p| {
        out.push((r, c, PatchKey::new(k, p.to_vec()).expect("window has k² entries")));
    });
    out
}

/// Runs one filter on one quantised patch. Sampled decoding draws from a
/// stream derived from (master seed, filter id, patch), so the result does not
/// depend on evaluation order.
pub fn evaluate_patch(
    filter: &CircuitSpec,
    filter_id: &str,
    key: &PatchKey,
    levels: usize,
    decode: DecodeMode,
    master_seed: u64,
) -> Result<f64> {
    let state = filter.simulate(&key.pixels(levels))?;
    match decode {
        DecodeMode::Analytic => Ok(state.fraction_ones()),
        DecodeMode::Sampled { .. } => {
            let mut bytes = filter_id.as_bytes().to_vec();
            for &i in key.indices() {
                bytes.extend_from_slice(&i.to_le_bytes());
            }
            let mut rng = seed::rng(seed::derive_bytes(master_seed, &bytes));
            sim::decode_fraction_ones(&state, decode, &mut rng)
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PreprocessReport {
    pub images: usize,
    pub total_patches: u64,
    pub unique_patches: u64,
    pub evaluator_calls: u64,
    pub lookups: u64,
    pub hits: u64,
    pub wall_seconds: f64,
}

impl PreprocessReport {
    pub fn hit_rate(&self) -> f64 {
        if self.lookups == 0 {
            0.0
        } else {
            self.hits as f64 / self.lookups as f64
        }
    }
}

fn check_inputs(images: &[QuantizedImage], cfg: &LayerConfig, memo: &MemoTable) -> Result<()> {
    if memo.k() != cfg.k {
        return Err(Error::Config(format!(
            "memo table has k = {} but the layer uses k = {}",
            memo.k(),
            cfg.k
        )));
    }
    if let Some(first) = images.first() {
        for img in images {
            if (img.height, img.width) != (first.height, first.width) {
                return Err(Error::Data("dataset mixes image sizes".into()));
            }
            if img.levels != memo.levels() {
                return Err(Error::Config(format!(
                    "images quantised to {} levels, memo table holds {}",
                    img.levels,
                    memo.levels()
                )));
            }
        }
    }
    Ok(())
}

/// Applies the layer to every image, evaluating each distinct patch at most
/// once per filter across the whole dataset (and across earlier runs sharing
/// `memo`).
pub fn preprocess_dataset(
    images: &[QuantizedImage],
    cfg: &LayerConfig,
    memo: &MemoTable,
) -> Result<(Vec<FeatureMap>, PreprocessReport)> {
    let start = Instant::now();
    check_inputs(images, cfg, memo)?;
    let patches: Vec<Vec<PatchKey>> = par::map(images, |img| {
        extract_patches(img, cfg.k, cfg.padding).into_iter().map(|(_, _, key)| key).collect()
    });
    let mut unique: Vec<PatchKey> = {
        let mut set = HashSet::new();
        for keys in &patches {
            set.extend(keys.iter());
        }
        set.into_iter().cloned().collect()
    };
    unique.sort_unstable();

    let levels = memo.levels();
    let mut calls = 0u64;
    for (filter, id) in cfg.filters.iter().zip(cfg.filter_ids()) {
        memo.check_filter(filter)?;
        calls += memo.fill_missing(id, &unique, |key| {
            evaluate_patch(filter, id, key, levels, cfg.decode, cfg.seed)
        })? as u64;
    }

    let maps = par::map(&patches, |keys| {
        let (height, width) = (images[0].height, images[0].width);
        let mut data = Vec::with_capacity(cfg.channels() * keys.len());
        for id in cfg.filter_ids() {
            for key in keys {
                data.push(memo.peek(id, key).expect("every patch was filled"));
            }
        }
        FeatureMap {
            channels: cfg.channels(),
            height: cfg.padding.positions(height, cfg.k),
            width: cfg.padding.positions(width, cfg.k),
            data,
        }
    });

    let total: u64 = patches.iter().map(|p| p.len() as u64).sum();
    let lookups = total * cfg.channels() as u64;
    memo.record(lookups, calls);
    let report = PreprocessReport {
        images: images.len(),
        total_patches: total,
        unique_patches: unique.len() as u64,
        evaluator_calls: calls,
        lookups,
        hits: lookups - calls,
        wall_seconds: start.elapsed().as_secs_f64(),
    };
    Ok((maps, report))
}

/// Applies the layer to one image through the memo table.
pub fn apply_layer(image: &QuantizedImage, cfg: &LayerConfig, memo: &MemoTable) -> Result<FeatureMap> {
    let (mut maps, _) = preprocess_dataset(std::slice::from_ref(image), cfg, memo)?;
    Ok(maps.pop().expect("one image in, one map out"))
}

/// Applies the layer without memoisation: one simulation per patch and filter.
pub fn apply_layer_direct(image: &QuantizedImage, cfg: &LayerConfig) -> Result<FeatureMap> {
    let patches = extract_patches(image, cfg.k, cfg.padding);
    let mut data = Vec::with_capacity(cfg.channels() * patches.len());
    for (filter, id) in cfg.filters.iter().zip(cfg.filter_ids()) {
        let values = par::try_map(&patches, |(_, _, key)| {
            evaluate_patch(filter, id, key, image.levels, cfg.decode, cfg.seed)
        })?;
        data.extend(values);
    }
    Ok(FeatureMap {
        channels: cfg.channels(),
        height: cfg.padding.positions(image.height, cfg.k),
        width: cfg.padding.positions(image.width, cfg.k),
        data,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub filter_hashes: Vec<String>,
    pub levels: usize,
    pub seed: u64,
    pub decode: DecodeMode,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct FeatureHeader {
    count: usize,
    channels: usize,
    height: usize,
    width: usize,
    dtype: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    provenance: Option<Provenance>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<usize>>,
}

/// A batch of equally shaped feature maps, optionally labelled.
///
/// File layout: the 8-byte magic `QVFEAT01`, a little-endian `u32` header
/// length, a JSON header (`count`, `channels`, `height`, `width`,
/// `dtype = "f64"`, optional `provenance` and `labels`) and then
/// `count·channels·height·width` little-endian doubles.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureSet {
    pub maps: Vec<FeatureMap>,
    pub labels: Option<Vec<usize>>,
    pub provenance: Option<Provenance>,
}

const FEATURE_MAGIC: &[u8; 8] = b"QVFEAT01";

impl FeatureSet {
    fn shape(&self) -> (usize, usize, usize) {
        self.maps.first().map_or((0, 0, 0), |m| (m.channels, m.height, m.width))
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let (channels, height, width) = self.shape();
        if self.maps.iter().any(|m| (m.channels, m.height, m.width) != (channels, height, width)) {
            return Err(Error::Data("feature maps differ in shape".into()));
        }
        if let Some(labels) = &self.labels {
            if labels.len() != self.maps.len() {
                return Err(Error::Data("label count differs from map count".into()));
            }
        }
        let header = FeatureHeader {
            count: self.maps.len(),
            channels,
            height,
            width,
            dtype: "f64".into(),
            provenance: self.provenance.clone(),
            labels: self.labels.clone(),
        };
        let json = serde_json::to_vec(&header)?;
        let mut out = Vec::with_capacity(12 + json.len() + 8 * self.maps.len() * channels * height * width);
        out.write_all(FEATURE_MAGIC).unwrap();
        out.write_all(&(json.len() as u32).to_le_bytes()).unwrap();
        out.write_all(&json).unwrap();
        for m in &self.maps {
            for v in &m.data {
                out.write_all(&v.to_le_bytes()).unwrap();
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader { bytes, pos: 0 };
        if r.take(8)? != FEATURE_MAGIC {
            return Err(Error::Parse("feature file: bad magic at byte 0".into()));
        }
        let len = r.u32()? as usize;
        let header: FeatureHeader =
            serde_json::from_slice(r.take(len)?).map_err(|e| Error::Parse(format!("feature header: {e}")))?;
        if header.dtype != "f64" {
            return Err(Error::Parse(format!("feature header: unsupported dtype `{}`", header.dtype)));
        }
        let per_map = header.channels * header.height * header.width;
        let expected = header.count * per_map * 8;
        if bytes.len() - r.pos != expected {
            return Err(Error::Parse(format!(
                "feature file: expected {expected} data bytes after offset {}, found {}",
                r.pos,
                bytes.len() - r.pos
            )));
        }
        let mut maps = Vec::with_capacity(header.count);
        for _ in 0..header.count {
            let mut data = Vec::with_capacity(per_map);
            for _ in 0..per_map {
                data.push(r.f64()?);
            }
            maps.push(FeatureMap {
                channels: header.channels,
                height: header.height,
                width: header.width,
                data,
            });
        }
        if let Some(labels) = &header.labels {
            if labels.len() != header.count {
                return Err(Error::Parse("feature header: label count differs from count".into()));
            }
        }
        Ok(FeatureSet {
            maps,
            labels: header.labels,
            provenance: header.provenance,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_bytes()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_bytes(&std::fs::read(path).map_err(|e| Error::io(path, e))?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{integrated_circuit, rotational_encoder, rotational_henderson, MappingKind};
    use crate::image::Image;
    use crate::quantize::{patch_census, Rounding};

    fn qimg(h: usize, w: usize, levels: usize, f: impl Fn(usize, usize) -> f64) -> QuantizedImage {
        let img = Image::new(h, w, (0..h * w).map(|i| f(i / w, i % w)).collect()).unwrap();
        QuantizedImage::from_image(&img, levels, Rounding::Nearest).unwrap()
    }

    fn fixture(n: usize) -> Vec<QuantizedImage> {
        (0..n)
            .map(|s| {
                qimg(10, 10, 5, move |r, c| {
                    if (r + s) % 4 == 0 && c > 2 {
                        ((r * 3 + c + s) % 5) as f64 / 4.0
                    } else {
                        0.0
                    }
                })
            })
            .collect()
    }

    #[test]
    fn patch_counts() {
        let img = qimg(30, 30, 5, |_, _| 0.5);
        assert_eq!(extract_patches(&img, 3, Padding::Same).len(), 900);
        let img = qimg(28, 28, 5, |_, _| 0.5);
        assert_eq!(extract_patches(&img, 3, Padding::None).len(), 676);
    }

    #[test]
    fn even_kernel_pads_bottom_right() {
        let img = qimg(4, 4, 5, |_, _| 1.0);
        let patches = extract_patches(&img, 2, Padding::Same);
        assert_eq!(patches.len(), 16);
        let (r, c, last) = patches.last().unwrap();
        assert_eq!((*r, *c), (3, 3));
        assert_eq!(last.indices(), &[4, 0, 0, 0]);
        let (_, _, first) = &patches[0];
        assert_eq!(first.indices(), &[4, 4, 4, 4]);
    }

    #[test]
    fn odd_kernel_pads_symmetrically() {
        let img = qimg(3, 3, 3, |r, c| (r * 3 + c) as f64 / 8.0);
        let patches = extract_patches(&img, 3, Padding::Same);
        let (_, _, centre) = &patches[4];
        assert_eq!(centre.indices(), img.data.as_slice());
        let (_, _, corner) = &patches[0];
        assert_eq!(&corner.indices()[..4], &[0, 0, 0, 0]);
    }

    #[test]
    fn zero_image_gives_zero_features() {
        let filters = vec![rotational_encoder(2).unwrap(), integrated_circuit(2, 4, 8, MappingKind::Simple, 1).unwrap()];
        let cfg = LayerConfig::new(filters, DecodeMode::Analytic, 0).unwrap();
        let memo = MemoTable::new(2, 5).unwrap();
        let map = apply_layer(&qimg(6, 7, 5, |_, _| 0.0), &cfg, &memo).unwrap();
        assert_eq!((map.channels, map.height, map.width), (2, 6, 7));
        assert!(map.data.iter().all(|&v| v.abs() < 1e-15));
    }

    #[test]
    fn constant_image_has_constant_interior() {
        let filters = (0..3)
            .map(|s| integrated_circuit(3, 4, 18, MappingKind::RndMul, s).unwrap())
            .collect();
        let cfg = LayerConfig::new(filters, DecodeMode::Analytic, 0).unwrap();
        let memo = MemoTable::new(3, 10).unwrap();
        let map = apply_layer(&qimg(8, 8, 10, |_, _| 0.7), &cfg, &memo).unwrap();
        for ch in 0..3 {
            let v = map.get(ch, 1, 1);
            for r in 1..7 {
                for c in 1..7 {
                    assert_eq!(map.get(ch, r, c), v);
                }
            }
        }
    }

    #[test]
    fn evaluator_calls_equal_unique_patches() {
        let images = fixture(10);
        let filters: Vec<_> = (0..2)
            .map(|s| integrated_circuit(2, 4, 8, MappingKind::Simple, s).unwrap())
            .collect();
        let cfg = LayerConfig::new(filters, DecodeMode::Analytic, 0).unwrap();
        let memo = MemoTable::new(2, 5).unwrap();
        let (maps, report) = preprocess_dataset(&images, &cfg, &memo).unwrap();
        let census = patch_census(&images, 2, Padding::Same).unwrap();
        assert_eq!(maps.len(), 10);
        assert_eq!(report.unique_patches, census.unique_patches);
        assert_eq!(report.total_patches, census.total_patches);
        assert_eq!(report.evaluator_calls, 2 * census.unique_patches);
        for id in cfg.filter_ids() {
            assert_eq!(memo.len(id) as u64, census.unique_patches);
        }

        let mut again = images.clone();
        again.push(images[3].clone());
        let (_, second) = preprocess_dataset(&again, &cfg, &memo).unwrap();
        assert_eq!(second.evaluator_calls, 0);
        assert_eq!(second.hits, second.lookups);
    }

    #[test]
    fn memoisation_is_transparent() {
        let images = fixture(3);
        let filters: Vec<_> = vec![
            integrated_circuit(2, 4, 8, MappingKind::RndLin, 4).unwrap(),
            rotational_henderson(2, 0.3, 4).unwrap(),
        ];
        let cfg = LayerConfig::new(filters, DecodeMode::Analytic, 0).unwrap();
        let memo = MemoTable::new(2, 5).unwrap();
        let (maps, _) = preprocess_dataset(&images, &cfg, &memo).unwrap();
        for (img, map) in images.iter().zip(&maps) {
            assert_eq!(&apply_layer_direct(img, &cfg).unwrap(), map);
        }
    }

    #[test]
    fn sampled_mode_is_order_independent() {
        let images = fixture(4);
        let filters = vec![integrated_circuit(2, 4, 8, MappingKind::Simple, 9).unwrap()];
        let cfg = LayerConfig::new(filters, DecodeMode::Sampled { shots: 100 }, 5).unwrap();
        let (a, _) = preprocess_dataset(&images, &cfg, &MemoTable::new(2, 5).unwrap()).unwrap();
        let mut rev = images.clone();
        rev.reverse();
        let (mut b, _) = preprocess_dataset(&rev, &cfg, &MemoTable::new(2, 5).unwrap()).unwrap();
        b.reverse();
        assert_eq!(a, b);
        assert_eq!(a[0], apply_layer_direct(&images[0], &cfg).unwrap());
    }

    #[test]
    fn empty_dataset() {
        let cfg = LayerConfig::new(vec![rotational_encoder(2).unwrap()], DecodeMode::Analytic, 0).unwrap();
        let (maps, report) = preprocess_dataset(&[], &cfg, &MemoTable::new(2, 5).unwrap()).unwrap();
        assert!(maps.is_empty());
        assert_eq!(report.evaluator_calls, 0);
    }

    #[test]
    fn config_and_memo_mismatches_are_errors() {
        let mixed = vec![rotational_encoder(2).unwrap(), rotational_encoder(3).unwrap()];
        assert!(LayerConfig::new(mixed, DecodeMode::Analytic, 0).is_err());
        assert!(LayerConfig::new(vec![], DecodeMode::Analytic, 0).is_err());
        let cfg = LayerConfig::new(vec![rotational_encoder(2).unwrap()], DecodeMode::Analytic, 0).unwrap();
        let img = qimg(4, 4, 5, |_, _| 0.0);
        assert!(apply_layer(&img, &cfg, &MemoTable::new(3, 5).unwrap()).is_err());
        assert!(apply_layer(&img, &cfg, &MemoTable::new(2, 7).unwrap()).is_err());
    }

    #[test]
    fn feature_file_round_trip() {
        let set = FeatureSet {
            maps: vec![
                FeatureMap { channels: 2, height: 1, width: 2, data: vec![0.1, 0.2, 0.3, 1.0 / 3.0] },
                FeatureMap { channels: 2, height: 1, width: 2, data: vec![0.0, 1.0, 0.5, 0.25] },
            ],
            labels: Some(vec![1, 0]),
            provenance: Some(Provenance {
                filter_hashes: vec!["ab".into(), "cd".into()],
                levels: 50,
                seed: 3,
                decode: DecodeMode::Sampled { shots: 1000 },
            }),
        };
        let bytes = set.to_bytes().unwrap();
        assert_eq!(FeatureSet::from_bytes(&bytes).unwrap(), set);
        assert!(FeatureSet::from_bytes(&bytes[..bytes.len() - 1]).is_err());
    }
}
