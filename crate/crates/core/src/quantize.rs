//! N-level quantisation, patch statistics and the memo table that maps
//! quantised patches to filter outputs.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::hash::Hash;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::RwLock;

use serde::{Deserialize, Serialize};

use crate::circuit::CircuitSpec;
use crate::image::Image;
use crate::{par, Error, Result};

pub const MAX_LEVELS: usize = 1 << 16;

/// How a pixel is snapped onto the grid `{0, 1/(N-1), …, 1}`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rounding {
    /// Closest grid point, ties rounded up: `round(x·(N−1))`.
    #[default]
    Nearest,
    /// `⌊x·N⌋`, clamped to `N−1` so that `x = 1` maps to 1.
    Floor,
}

impl FromStr for Rounding {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "nearest" => Ok(Rounding::Nearest),
            "floor" => Ok(Rounding::Floor),
            other => Err(Error::arg(format!("unknown rounding `{other}`"))),
        }
    }
}

fn check_levels(levels: usize) -> Result<()> {
    if (2..=MAX_LEVELS).contains(&levels) {
        Ok(())
    } else {
        Err(Error::arg(format!("quantisation levels must be in 2..={MAX_LEVELS}, got {levels}")))
    }
}

/// Grid index of `x` for `levels` levels.
pub fn quantize_index(x: f64, levels: usize, rounding: Rounding) -> Result<u16> {
    check_levels(levels)?;
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::arg(format!("pixel value {x} outside [0,1]")));
    }
    Ok(index_unchecked(x, levels, rounding))
}

#[inline]
fn index_unchecked(x: f64, levels: usize, rounding: Rounding) -> u16 {
    let top = (levels - 1) as f64;
    let idx = match rounding {
        Rounding::Nearest => (x * top + 0.5).floor(),
        Rounding::Floor => (x * levels as f64).floor().min(top),
    };
    idx as u16
}

/// Quantised pixel value.
pub fn quantize_pixel(x: f64, levels: usize, rounding: Rounding) -> Result<f64> {
    Ok(quantize_index(x, levels, rounding)? as f64 / (levels - 1) as f64)
}

/// Worst-case mean squared error of nearest-point quantisation, `1/(4(N−1)²)`.
pub fn mse_bound(levels: usize) -> Result<f64> {
    check_levels(levels)?;
    let step = (levels - 1) as f64;
    Ok(1.0 / (4.0 * step * step))
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QuantizedImage {
    pub height: usize,
    pub width: usize,
    pub levels: usize,
    pub data: Vec<u16>,
}

impl QuantizedImage {
    pub fn from_image(image: &Image, levels: usize, rounding: Rounding) -> Result<Self> {
        check_levels(levels)?;
        if let Some(x) = image.data.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(Error::Data(format!("pixel value {x} outside [0,1]")));
        }
        Ok(QuantizedImage {
            height: image.height,
            width: image.width,
            levels,
            data: image.data.iter().map(|&x| index_unchecked(x, levels, rounding)).collect(),
        })
    }

    pub fn from_indices(height: usize, width: usize, levels: usize, data: Vec<u16>) -> Result<Self> {
        check_levels(levels)?;
        if data.len() != height * width {
            return Err(Error::Data(format!("{height}x{width} image needs {} indices", height * width)));
        }
        if let Some(i) = data.iter().find(|&&i| i as usize >= levels) {
            return Err(Error::Data(format!("level index {i} not below {levels}")));
        }
        Ok(QuantizedImage { height, width, levels, data })
    }

    #[inline]
    pub fn value_of(&self, index: u16) -> f64 {
        index as f64 / (self.levels - 1) as f64
    }

    pub fn to_image(&self) -> Image {
        Image {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|&i| self.value_of(i)).collect(),
        }
    }
}

pub fn quantize_all(images: &[Image], levels: usize, rounding: Rounding) -> Result<Vec<QuantizedImage>> {
    par::try_map(images, |img| QuantizedImage::from_image(img, levels, rounding))
}

/// Mean over pixels of `(x − q(x))²`.
pub fn mse(original: &Image, quantized: &QuantizedImage) -> Result<f64> {
    if (original.height, original.width) != (quantized.height, quantized.width) {
        return Err(Error::arg(format!(
            "dimension mismatch: {}x{} vs {}x{}",
            original.height, original.width, quantized.height, quantized.width
        )));
    }
    let sum: f64 = original
        .data
        .iter()
        .zip(&quantized.data)
        .map(|(&x, &i)| {
            let d = x - quantized.value_of(i);
            d * d
        })
        .sum();
    Ok(sum / original.data.len() as f64)
}

/// Exact identity of a quantised k×k patch (row-major level indices).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PatchKey {
    k: usize,
    levels: Box<[u16]>,
}

impl PatchKey {
    pub fn new(k: usize, levels: impl Into<Box<[u16]>>) -> Result<Self> {
        let levels = levels.into();
        if levels.len() != k * k {
            return Err(Error::arg(format!("patch key needs k² = {} entries, got {}", k * k, levels.len())));
        }
        Ok(PatchKey { k, levels })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn indices(&self) -> &[u16] {
        &self.levels
    }

    /// Pixel values on the grid of `levels` levels.
    pub fn pixels(&self, levels: usize) -> Vec<f64> {
        let top = (levels - 1) as f64;
        self.levels.iter().map(|&i| i as f64 / top).collect()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Padding {
    /// Output has the input's size; zero pixels pad the border, with the
    /// extra row/column of an even kernel on the bottom/right.
    #[default]
    Same,
    None,
}

impl Padding {
    /// (top/left, bottom/right) padding for kernel `k`.
    pub fn amounts(self, k: usize) -> (usize, usize) {
        match self {
            Padding::Same => {
                let before = (k - 1) / 2;
                (before, k - 1 - before)
            }
            Padding::None => (0, 0),
        }
    }

    /// Number of window positions along an axis of length `len`.
    pub fn positions(self, len: usize, k: usize) -> usize {
        match self {
            Padding::Same => len,
            Padding::None => (len + 1).saturating_sub(k),
        }
    }
}

/// Calls `f(row, col, indices)` for every stride-1 window, row-major.
pub fn for_each_patch(image: &QuantizedImage, k: usize, padding: Padding, mut f: impl FnMut(usize, usize, &[u16])) {
    let (before, _) = padding.amounts(k);
    let rows = padding.positions(image.height, k);
    let cols = padding.positions(image.width, k);
    let mut buf = vec![0u16; k * k];
    for r in 0..rows {
        for c in 0..cols {
            for dr in 0..k {
                let sr = (r + dr) as isize - before as isize;
                for dc in 0..k {
                    let sc = (c + dc) as isize - before as isize;
                    buf[dr * k + dc] = if sr >= 0 && sc >= 0 && (sr as usize) < image.height && (sc as usize) < image.width {
                        image.data[sr as usize * image.width + sc as usize]
                    } else {
                        0
                    };
                }
            }
            f(r, c, &buf);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Census {
    pub total_patches: u64,
    pub unique_patches: u64,
}

impl Census {
    pub fn reduction_percent(&self) -> f64 {
        if self.total_patches == 0 {
            return 0.0;
        }
        100.0 * (1.0 - self.unique_patches as f64 / self.total_patches as f64)
    }
}

/// Total window count for `count` images of the given size.
pub fn patch_total(count: usize, height: usize, width: usize, k: usize, padding: Padding) -> u64 {
    count as u64 * padding.positions(height, k) as u64 * padding.positions(width, k) as u64
}

const CENSUS_CHUNK: usize = 512;

fn census_with<K, P>(images: &[QuantizedImage], k: usize, padding: Padding, pack: P) -> u64
where
    K: Hash + Eq + Send,
    P: Fn(&[u16]) -> K + Sync + Send,
{
    let mut seen: HashSet<K> = HashSet::new();
    for chunk in images.chunks(CENSUS_CHUNK) {
        let keys = par::map(chunk, |img| {
            let mut local = Vec::new();
            for_each_patch(img, k, padding, |_, _, p| local.push(pack(p)));
            local
        });
        for local in keys {
            seen.extend(local);
        }
    }
    seen.len() as u64
}

/// Total and distinct k×k patches across `images`.
pub fn patch_census(images: &[QuantizedImage], k: usize, padding: Padding) -> Result<Census> {
    if k == 0 {
        return Err(Error::arg("kernel size must be at least 1"));
    }
    let Some(first) = images.first() else {
        return Ok(Census {
            total_patches: 0,
            unique_patches: 0,
        });
    };
    let levels = first.levels;
    for img in images {
        if padding == Padding::None && (img.height < k || img.width < k) {
            return Err(Error::Data(format!("{}x{} image is smaller than k = {k}", img.height, img.width)));
        }
        if img.levels != levels {
            return Err(Error::Data("images quantised to different level counts".into()));
        }
    }
    let total = images
        .iter()
        .map(|img| patch_total(1, img.height, img.width, k, padding))
        .sum();
    let bits = usize::BITS - (levels - 1).leading_zeros();
    let width = bits as usize * k * k;
    let unique = if width <= 64 {
        census_with(images, k, padding, |p| p.iter().fold(0u64, |acc, &i| (acc << bits) | i as u64))
    } else if width <= 128 {
        census_with(images, k, padding, |p| p.iter().fold(0u128, |acc, &i| (acc << bits) | i as u128))
    } else {
        census_with(images, k, padding, |p| p.to_vec().into_boxed_slice())
    };
    Ok(Census {
        total_patches: total,
        unique_patches: unique,
    })
}

/// Memoised filter outputs keyed by (filter hash, patch).
///
/// Lookups for keys already present count as hits. A missing key is evaluated
/// once and stored; if two threads race on the same key the first stored
/// value wins, and since evaluators are pure both values coincide.
#[derive(Debug)]
pub struct MemoTable {
    k: usize,
    levels: usize,
    entries: RwLock<BTreeMap<String, HashMap<PatchKey, f64>>>,
    hits: AtomicU64,
    misses: AtomicU64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemoStats {
    pub hits: u64,
    pub misses: u64,
}

impl MemoStats {
    pub fn lookups(&self) -> u64 {
        self.hits + self.misses
    }

    pub fn hit_rate(&self) -> f64 {
        if self.lookups() == 0 {
            0.0
        } else {
            self.hits as f64 / self.lookups() as f64
        }
    }
}

const MEMO_MAGIC: &[u8; 8] = b"QVMEMO01";

fn check_scalar(v: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(Error::Numeric(format!("filter output {v} outside [0,1]")))
    }
}

impl MemoTable {
    pub fn new(k: usize, levels: usize) -> Result<Self> {
        check_levels(levels)?;
        if k == 0 {
            return Err(Error::arg("kernel size must be at least 1"));
        }
        Ok(MemoTable {
            k,
            levels,
            entries: RwLock::new(BTreeMap::new()),
            hits: AtomicU64::new(0),
            misses: AtomicU64::new(0),
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn stats(&self) -> MemoStats {
        MemoStats {
            hits: self.hits.load(Ordering::Relaxed),
            misses: self.misses.load(Ordering::Relaxed),
        }
    }

    pub fn len(&self, filter_id: &str) -> usize {
        self.entries.read().unwrap().get(filter_id).map_or(0, HashMap::len)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.read().unwrap().values().all(HashMap::is_empty)
    }

    pub fn filter_ids(&self) -> Vec<String> {
        self.entries.read().unwrap().keys().cloned().collect()
    }

    fn check_key(&self, key: &PatchKey) -> Result<()> {
        if key.k != self.k {
            return Err(Error::arg(format!("patch of size {} in a k = {} memo table", key.k, self.k)));
        }
        if let Some(i) = key.levels.iter().find(|&&i| i as usize >= self.levels) {
            return Err(Error::arg(format!("level index {i} not below {}", self.levels)));
        }
        Ok(())
    }

    pub fn check_filter(&self, filter: &CircuitSpec) -> Result<()> {
        if filter.k != self.k {
            return Err(Error::arg(format!(
                "filter kernel size {} does not match memo table k = {}",
                filter.k, self.k
            )));
        }
        Ok(())
    }

    /// Returns the memoised value without touching the counters.
    pub fn peek(&self, filter_id: &str, key: &PatchKey) -> Option<f64> {
        self.entries.read().unwrap().get(filter_id)?.get(key).copied()
    }

    /// Stored value on a hit; otherwise runs `evaluator` once, stores and
    /// returns its result.
    pub fn lookup_or_compute(
        &self,
        filter: &CircuitSpec,
        key: &PatchKey,
        evaluator: impl FnOnce(&PatchKey) -> Result<f64>,
    ) -> Result<f64> {
        self.check_filter(filter)?;
        self.check_key(key)?;
        let id = filter.hash();
        if let Some(v) = self.peek(&id, key) {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return Ok(v);
        }
        let value = check_scalar(evaluator(key)?)?;
        let mut guard = self.entries.write().unwrap();
        let stored = *guard.entry(id).or_default().entry(key.clone()).or_insert(value);
        self.misses.fetch_add(1, Ordering::Relaxed);
        Ok(stored)
    }

    /// Evaluates every distinct key of `keys` missing from the table, in
    /// parallel, and stores the results. Returns the number of evaluations.
    pub fn fill_missing<F>(&self, filter_id: &str, keys: &[PatchKey], evaluator: F) -> Result<usize>
    where
        F: Fn(&PatchKey) -> Result<f64> + Sync + Send,
    {
        let missing: Vec<PatchKey> = {
            let guard = self.entries.read().unwrap();
            let present = guard.get(filter_id);
            let mut seen = HashSet::new();
            keys.iter()
                .filter(|k| present.is_none_or(|m| !m.contains_key(*k)) && seen.insert(*k))
                .cloned()
                .collect()
        };
        for key in &missing {
            self.check_key(key)?;
        }
        let values = par::try_map(&missing, |key| evaluator(key).and_then(check_scalar))?;
        let n = missing.len();
        let mut guard = self.entries.write().unwrap();
        let table = guard.entry(filter_id.to_string()).or_default();
        for (key, value) in missing.into_iter().zip(values) {
            table.entry(key).or_insert(value);
        }
        Ok(n)
    }

    /// Records `lookups` lookups of which `misses` were evaluated.
    pub fn record(&self, lookups: u64, misses: u64) {
        self.hits.fetch_add(lookups - misses, Ordering::Relaxed);
        self.misses.fetch_add(misses, Ordering::Relaxed);
    }

    /// Binary form: magic, k, N, filter count, then per filter its hash and
    /// key-sorted `(indices, value)` records, all little-endian.
    pub fn write_to(&self, mut w: impl Write) -> std::io::Result<()> {
        let guard = self.entries.read().unwrap();
        w.write_all(MEMO_MAGIC)?;
        w.write_all(&(self.k as u32).to_le_bytes())?;
        w.write_all(&(self.levels as u32).to_le_bytes())?;
        w.write_all(&(guard.len() as u32).to_le_bytes())?;
        for (id, table) in guard.iter() {
            let id_bytes = id.as_bytes();
            w.write_all(&(id_bytes.len() as u32).to_le_bytes())?;
            w.write_all(id_bytes)?;
            w.write_all(&(table.len() as u64).to_le_bytes())?;
            let mut records: Vec<(&PatchKey, &f64)> = table.iter().collect();
            records.sort_unstable_by(|a, b| a.0.cmp(b.0));
            for (key, value) in records {
                for &i in key.levels.iter() {
                    w.write_all(&i.to_le_bytes())?;
                }
                w.write_all(&value.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_to(&mut out).expect("writing to a Vec cannot fail");
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader { bytes, pos: 0 };
        if r.take(8)? != MEMO_MAGIC {
            return Err(Error::Parse("memo file: bad magic at byte 0".into()));
        }
        let k = r.u32()? as usize;
        let levels = r.u32()? as usize;
        let table = MemoTable::new(k, levels).map_err(|e| Error::Parse(format!("memo header: {e}")))?;
        let filters = r.u32()?;
        {
            let mut guard = table.entries.write().unwrap();
            for _ in 0..filters {
                let len = r.u32()? as usize;
                let id = String::from_utf8(r.take(len)?.to_vec())
                    .map_err(|_| Error::Parse(format!("memo file: filter id is not UTF-8 near byte {}", r.pos)))?;
                let count = r.u64()?;
                let mut map = HashMap::with_capacity(count as usize);
                for _ in 0..count {
                    let at = r.pos;
                    let mut idx = Vec::with_capacity(k * k);
                    for _ in 0..k * k {
                        let i = r.u16()?;
                        if i as usize >= levels {
                            return Err(Error::Parse(format!("memo file: level index {i} at byte {at}")));
                        }
                        idx.push(i);
                    }
                    let v = r.f64()?;
                    if !(0.0..=1.0).contains(&v) {
                        return Err(Error::Parse(format!("memo file: value {v} outside [0,1] at byte {at}")));
                    }
                    map.insert(PatchKey { k, levels: idx.into() }, v);
                }
                guard.insert(id, map);
            }
        }
        if r.pos != bytes.len() {
            return Err(Error::Parse(format!("memo file: {} trailing bytes", bytes.len() - r.pos)));
        }
        Ok(table)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut bytes = Vec::new();
        std::fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

pub(crate) struct ByteReader<'a> {
    pub bytes: &'a [u8],
    pub pos: usize,
}

impl<'a> ByteReader<'a> {
    pub fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::Parse(format!(
                "truncated input: needed {n} bytes at offset {}, only {} remain",
                self.pos,
                self.bytes.len() - self.pos
            )));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}
