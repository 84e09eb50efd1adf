//! Shards, manifests and the simulated cloud backends that hold them.
//!
//! Layout on disk:
//!
//! ```text
//! <root>/cloud_<i>/shard_<seq>.bin
//! <root>/local/share.bin
//! <root>/manifest.json
//! ```
//!
//! Every shard starts with a 15-byte header: `"NCSS"`, version, `log2 d` (or
//! 0 when `d` is not a power of two), `k`, and the big-endian digit count.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::ops::Range;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Mutex;

use base64::Engine;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::{
    decode_elements, parse_coded_stream, CodecError, DigitPos, DigitString, EncodedMessage,
    GroupingMode, GroupingPlan, StreamLayout,
};
use crate::gf::{build_vandermonde, Field, FieldElement, GfError};
use crate::planner::{DistributionPlan, SecurityProfile};

pub const SHARD_MAGIC: &[u8; 4] = b"NCSS";
pub const SHARD_VERSION: u8 = 1;
pub const HEADER_LEN: usize = 15;
pub const MANIFEST_VERSION: u32 = 1;
pub const MANIFEST_KEY: &str = "manifest.json";
pub const LOCAL_KEY: &str = "share.bin";

#[derive(Debug, Error)]
pub enum StorageError {
    #[error("backend {0} is unavailable")]
    BackendUnavailable(String),
    #[error("write to {location} failed: {reason}")]
    WriteFailure { location: String, reason: String },
    #[error("read from {location} failed: {reason}")]
    ReadFailure { location: String, reason: String },
    #[error("shard {0} is missing")]
    MissingShard(String),
    #[error("checksum mismatch for {location}: manifest {expected:08x}, shard {found:08x}")]
    ChecksumMismatch {
        location: String,
        expected: u32,
        found: u32,
    },
    #[error("malformed shard {location}: {reason}")]
    BadShard { location: String, reason: String },
    #[error("invalid manifest: {0}")]
    BadManifest(String),
    #[error("digit stream incomplete: {missing} of {total} digits not covered")]
    IncompleteData { missing: u64, total: u64 },
    #[error("plan has {plan} clouds, {backends} backends supplied")]
    BackendCountMismatch { plan: usize, backends: usize },
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Field(#[from] GfError),
}

/// A place shards can be written to and read back from.
pub trait Backend: Send + Sync {
    fn name(&self) -> String;
    /// Checks the backend can accept writes.
    fn probe(&self) -> Result<(), StorageError>;
    /// Stores `data` under `key`. Readers never observe a partial value.
    fn put(&self, key: &str, data: &[u8]) -> Result<(), StorageError>;
    /// `Ok(None)` when nothing is stored under `key`.
    fn get(&self, key: &str) -> Result<Option<Vec<u8>>, StorageError>;
}

/// Map-backed store; can be switched offline to simulate an outage.
#[derive(Debug)]
pub struct MemoryBackend {
    name: String,
    objects: Mutex<BTreeMap<String, Vec<u8>>>,
    online: AtomicBool,
}

impl MemoryBackend {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            objects: Mutex::new(BTreeMap::new()),
            online: AtomicBool::new(true),
        }
    }

    pub fn set_online(&self, online: bool) {
        self.online.store(online, Ordering::SeqCst);
    }

    pub fn snapshot(&self) -> BTreeMap<String, Vec<u8>> {
        self.objects.lock().expect("backend lock poisoned").clone()
    }

    /// Overwrites an object in place, bypassing the normal write path.
    pub fn tamper(&self, key: &str, f: impl FnOnce(&mut Vec<u8>)) -> bool {
        let mut map = self.objects.lock().expect("backend lock poisoned");
        map.get_mut(key).map(f).is_some()
    }

    pub fn remove(&self, key: &str) -> bool {
        self.objects
            .lock()
            .expect("backend lock poisoned")
            .remove(key)
            .is_some()
    }

    fn check_online(&self) -> Result<(), StorageError> {
        if self.online.load(Ordering::SeqCst) {
            Ok(())
        } else {
            Err(StorageError::BackendUnavailable(self.name.clone()))
        }
    }
}

impl Backend for MemoryBackend {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn probe(&self) -> Result<(), StorageError> {
        self.check_online()
    }

    fn put(&self, key: &str, data: &[u8]) -> Result<(), StorageError> {
        self.check_online()?;
        self.objects
            .lock()
            .expect("backend lock poisoned")
            .insert(key.to_owned(), data.to_vec());
        Ok(())
    }

    fn get(&self, key: &str) -> Result<Option<Vec<u8>>, StorageError> {
        self.check_online()?;
        Ok(self
            .objects
            .lock()
            .expect("backend lock poisoned")
            .get(key)
            .cloned())
    }
}

/// One directory per backend; writes go through a temp file and a rename.
#[derive(Clone, Debug)]
pub struct DirBackend {
    dir: PathBuf,
}

impl DirBackend {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(key)
    }
}

impl Backend for DirBackend {
    fn name(&self) -> String {
        self.dir.display().to_string()
    }

    fn probe(&self) -> Result<(), StorageError> {
        fs::create_dir_all(&self.dir)
            .map_err(|e| StorageError::BackendUnavailable(format!("{}: {e}", self.name())))?;
        let meta = fs::metadata(&self.dir)
            .map_err(|e| StorageError::BackendUnavailable(format!("{}: {e}", self.name())))?;
        if meta.permissions().readonly() {
            return Err(StorageError::BackendUnavailable(format!(
                "{}: read-only",
                self.name()
            )));
        }
        Ok(())
    }

    fn put(&self, key: &str, data: &[u8]) -> Result<(), StorageError> {
        let target = self.path(key);
        let fail = |e: std::io::Error| StorageError::WriteFailure {
            location: target.display().to_string(),
            reason: e.to_string(),
        };
        let tmp = self.path(&format!(".{key}.tmp"));
        let mut f = fs::File::create(&tmp).map_err(fail)?;
        f.write_all(data).map_err(fail)?;
        f.sync_all().map_err(fail)?;
        drop(f);
        fs::rename(&tmp, &target).map_err(fail)
    }

    fn get(&self, key: &str) -> Result<Option<Vec<u8>>, StorageError> {
        let path = self.path(key);
        match fs::read(&path) {
            Ok(data) => Ok(Some(data)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(StorageError::ReadFailure {
                location: path.display().to_string(),
                reason: e.to_string(),
            }),
        }
    }
}

/// The `p` cloud backends, the local share, and where the manifest lives.
pub struct Backends {
    pub clouds: Vec<Box<dyn Backend>>,
    pub local: Box<dyn Backend>,
    pub meta: Box<dyn Backend>,
    /// Sequence number used in shard keys.
    pub seq: u64,
}

impl Backends {
    pub fn memory(p: usize) -> Self {
        Self {
            clouds: (0..p)
                .map(|i| Box::new(MemoryBackend::new(format!("mem-cloud-{i}"))) as Box<dyn Backend>)
                .collect(),
            local: Box::new(MemoryBackend::new("mem-local")),
            meta: Box::new(MemoryBackend::new("mem-meta")),
            seq: 0,
        }
    }

    pub fn directory(root: impl AsRef<Path>, p: usize) -> Self {
        let root = root.as_ref();
        Self {
            clouds: (0..p)
                .map(|i| {
                    Box::new(DirBackend::new(root.join(format!("cloud_{i}")))) as Box<dyn Backend>
                })
                .collect(),
            local: Box::new(DirBackend::new(root.join("local"))),
            meta: Box::new(DirBackend::new(root)),
            seq: 0,
        }
    }

    pub fn shard_key(&self) -> String {
        format!("shard_{}.bin", self.seq)
    }

    pub fn load_manifest(&self) -> Result<Manifest, StorageError> {
        let data = self
            .meta
            .get(MANIFEST_KEY)?
            .ok_or_else(|| StorageError::MissingShard(MANIFEST_KEY.into()))?;
        Manifest::from_json(&data)
    }
}

fn pack_digits(digits: &[u16], d: u32) -> Vec<u8> {
    if d.is_power_of_two() {
        let bits = d.trailing_zeros();
        let mut out = Vec::with_capacity((digits.len() * bits as usize).div_ceil(8));
        let (mut acc, mut filled) = (0u32, 0u32);
        for &x in digits {
            acc = (acc << bits) | u32::from(x);
            filled += bits;
            while filled >= 8 {
                filled -= 8;
                out.push((acc >> filled) as u8);
                acc &= (1 << filled) - 1;
            }
        }
        if filled > 0 {
            out.push((acc << (8 - filled)) as u8);
        }
        out
    } else if d <= 256 {
        digits.iter().map(|&x| x as u8).collect()
    } else {
        digits.iter().flat_map(|x| x.to_be_bytes()).collect()
    }
}

fn unpack_digits(payload: &[u8], count: usize, d: u32) -> Option<Vec<u16>> {
    if d.is_power_of_two() {
        let bits = d.trailing_zeros() as usize;
        if payload.len() != (count * bits).div_ceil(8) {
            return None;
        }
        let mut out = Vec::with_capacity(count);
        let mut bitpos = 0usize;
        for _ in 0..count {
            let mut v = 0u16;
            for _ in 0..bits {
                let bit = (payload[bitpos / 8] >> (7 - bitpos % 8)) & 1;
                v = (v << 1) | u16::from(bit);
                bitpos += 1;
            }
            out.push(v);
        }
        Some(out)
    } else if d <= 256 {
        (payload.len() == count).then(|| payload.iter().map(|&b| u16::from(b)).collect())
    } else {
        (payload.len() == 2 * count).then(|| {
            payload
                .chunks_exact(2)
                .map(|c| u16::from_be_bytes([c[0], c[1]]))
                .collect()
        })
    }
}

/// One backend's digits with the parameters needed to read them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Shard {
    pub d: u32,
    pub k: u32,
    pub digits: Vec<u16>,
}

impl Shard {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.digits.len());
        out.extend_from_slice(SHARD_MAGIC);
        out.push(SHARD_VERSION);
        out.push(if self.d.is_power_of_two() {
            self.d.trailing_zeros() as u8
        } else {
            0
        });
        out.push(self.k as u8);
        out.extend_from_slice(&(self.digits.len() as u64).to_be_bytes());
        out.extend_from_slice(&pack_digits(&self.digits, self.d));
        out
    }

    /// Parses a shard. `d` must come from the manifest since the header only
    /// carries it for powers of two.
    pub fn from_bytes(data: &[u8], d: u32, location: &str) -> Result<Self, StorageError> {
        let bad = |reason: String| StorageError::BadShard {
            location: location.to_owned(),
            reason,
        };
        if data.len() < HEADER_LEN || &data[..4] != SHARD_MAGIC {
            return Err(bad("missing NCSS header".into()));
        }
        if data[4] != SHARD_VERSION {
            return Err(bad(format!("unsupported version {}", data[4])));
        }
        let log_d = data[5];
        let header_d_ok = if d.is_power_of_two() {
            u32::from(log_d) == d.trailing_zeros()
        } else {
            log_d == 0
        };
        if !header_d_ok {
            return Err(bad(format!(
                "header base code {log_d} does not match d = {d}"
            )));
        }
        let k = u32::from(data[6]);
        let count = u64::from_be_bytes(data[7..HEADER_LEN].try_into().expect("8 bytes"));
        let count = usize::try_from(count).map_err(|_| bad("digit count overflows".into()))?;
        let digits = unpack_digits(&data[HEADER_LEN..], count, d)
            .ok_or_else(|| bad(format!("payload length does not hold {count} digits")))?;
        if let Some(x) = digits.iter().find(|&&x| u32::from(x) >= d) {
            return Err(bad(format!("digit {x} out of range for base {d}")));
        }
        Ok(Self { d, k, digits })
    }
}

/// A stretch of consecutive stream digits starting at `(block, element, digit)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Run {
    pub block: usize,
    pub element: usize,
    pub digit: usize,
    pub len: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldParams {
    pub k: u32,
    pub poly: u32,
    pub d: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShardEntry {
    /// Cloud index, absent for the local share.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index: Option<usize>,
    pub key: String,
    pub digit_count: u64,
    pub crc32c: u32,
    pub runs: Vec<Run>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecurityEcho {
    pub breach: Vec<f64>,
    #[serde(rename = "Pu")]
    pub pu: f64,
    pub caps: Vec<u64>,
    pub guess_prob: Vec<f64>,
}

/// Everything a legitimate user needs to rebuild the message from its shards.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub field: FieldParams,
    pub grouping: GroupingPlan,
    pub points: Vec<u16>,
    pub block_count: usize,
    /// Base64 of one byte per coded element; absent when every element
    /// uses the strict width.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub element_widths: Option<String>,
    pub total_digits: u64,
    pub clouds: Vec<ShardEntry>,
    pub local: ShardEntry,
    pub security: SecurityEcho,
    /// Byte length of the original file, when the digits came from bytes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_bytes: Option<u64>,
}

impl Manifest {
    pub fn to_json(&self) -> Vec<u8> {
        serde_json::to_vec_pretty(self).expect("manifest serializes")
    }

    pub fn from_json(data: &[u8]) -> Result<Self, StorageError> {
        let m: Self =
            serde_json::from_slice(data).map_err(|e| StorageError::BadManifest(e.to_string()))?;
        if m.format_version != MANIFEST_VERSION {
            return Err(StorageError::BadManifest(format!(
                "unsupported format version {}",
                m.format_version
            )));
        }
        Ok(m)
    }

    pub fn widths(&self) -> Result<Vec<u8>, StorageError> {
        let count = self.block_count * self.grouping.n;
        let widths = match &self.element_widths {
            Some(text) => base64::engine::general_purpose::STANDARD
                .decode(text)
                .map_err(|e| StorageError::BadManifest(format!("element widths: {e}")))?,
            None => {
                let w = u8::try_from(self.grouping.width)
                    .map_err(|_| StorageError::BadManifest("element width too large".into()))?;
                vec![w; count]
            }
        };
        if widths.len() != count {
            return Err(StorageError::BadManifest(format!(
                "{} element widths for {count} elements",
                widths.len()
            )));
        }
        Ok(widths)
    }

    pub fn layout(&self) -> Result<StreamLayout, StorageError> {
        let layout = StreamLayout::from_widths(self.grouping.n, self.widths()?);
        if layout.total() != self.total_digits {
            return Err(StorageError::BadManifest(format!(
                "widths sum to {}, manifest says {} digits",
                layout.total(),
                self.total_digits
            )));
        }
        Ok(layout)
    }
}

fn to_runs(layout: &StreamLayout, ranges: &[Range<u64>]) -> Vec<Run> {
    ranges
        .iter()
        .filter(|r| !r.is_empty())
        .map(|r| {
            let pos = layout.locate(r.start).expect("run inside stream");
            Run {
                block: pos.block,
                element: pos.element,
                digit: pos.digit,
                len: r.end - r.start,
            }
        })
        .collect()
}

fn gather(stream: &[u16], ranges: &[Range<u64>]) -> Vec<u16> {
    ranges
        .iter()
        .flat_map(|r| stream[r.start as usize..r.end as usize].iter().copied())
        .collect()
}

/// Inputs to [`store_shards`].
pub struct StoreJob<'a> {
    pub message: &'a EncodedMessage,
    pub plan: &'a DistributionPlan,
    pub profile: &'a SecurityProfile,
    pub source_bytes: Option<u64>,
}

/// Manifest, encoded cloud shards and encoded local share.
pub type PreparedShards = (Manifest, Vec<Vec<u8>>, Vec<u8>);

/// Builds the manifest and shard files without touching any backend.
pub fn prepare_shards(job: &StoreJob<'_>, shard_key: &str) -> Result<PreparedShards, StorageError> {
    let msg = job.message;
    let layout = msg.layout();
    if layout.total() != job.plan.total_digits {
        return Err(StorageError::BadManifest(format!(
            "plan covers {} digits, message has {}",
            job.plan.total_digits,
            layout.total()
        )));
    }
    let stream = msg.coded_digits();
    let (d, k) = (msg.spec.d(), msg.spec.k());
    let make = |ranges: &[Range<u64>], index: Option<usize>, key: &str| {
        let bytes = Shard {
            d,
            k,
            digits: gather(&stream, ranges),
        }
        .to_bytes();
        let entry = ShardEntry {
            index,
            key: key.to_owned(),
            digit_count: ranges.iter().map(|r| r.end - r.start).sum(),
            crc32c: crc32c::crc32c(&bytes),
            runs: to_runs(&layout, ranges),
        };
        (entry, bytes)
    };
    let (mut clouds, mut cloud_bytes) = (Vec::new(), Vec::new());
    for (i, ranges) in job.plan.assignments.iter().enumerate() {
        let (entry, bytes) = make(ranges, Some(i), shard_key);
        clouds.push(entry);
        cloud_bytes.push(bytes);
    }
    let (local, local_bytes) = make(&job.plan.local, None, LOCAL_KEY);
    let element_widths = match msg.grouping.mode {
        GroupingMode::Strict => None,
        GroupingMode::AlphaBounded { .. } => {
            let raw: Vec<u8> = msg
                .blocks
                .iter()
                .flat_map(|b| b.render_widths().iter().copied())
                .collect();
            Some(base64::engine::general_purpose::STANDARD.encode(raw))
        }
    };
    let field = msg.spec.field();
    let manifest = Manifest {
        format_version: MANIFEST_VERSION,
        field: FieldParams {
            k,
            poly: field.polynomial(),
            d,
        },
        grouping: msg.grouping.clone(),
        points: msg.matrix.points().iter().map(|p| p.0).collect(),
        block_count: msg.blocks.len(),
        element_widths,
        total_digits: layout.total(),
        clouds,
        local,
        security: SecurityEcho {
            breach: job.profile.breach().to_vec(),
            pu: job.profile.pu(),
            caps: job.plan.caps.clone(),
            guess_prob: job.plan.guess_prob.clone(),
        },
        source_bytes: job.source_bytes,
    };
    Ok((manifest, cloud_bytes, local_bytes))
}

/// Writes one shard per cloud, the local share, then the manifest. All
/// backends are probed before anything is written, so an unreachable
/// backend leaves no manifest behind.
pub fn store_shards(job: &StoreJob<'_>, backends: &Backends) -> Result<Manifest, StorageError> {
    if backends.clouds.len() != job.plan.p() {
        return Err(StorageError::BackendCountMismatch {
            plan: job.plan.p(),
            backends: backends.clouds.len(),
        });
    }
    for b in backends
        .clouds
        .iter()
        .chain([&backends.local, &backends.meta])
    {
        b.probe()?;
    }
    let key = backends.shard_key();
    let (manifest, cloud_bytes, local_bytes) = prepare_shards(job, &key)?;
    for (backend, bytes) in backends.clouds.iter().zip(&cloud_bytes) {
        backend.put(&key, bytes)?;
    }
    backends.local.put(LOCAL_KEY, &local_bytes)?;
    backends.meta.put(MANIFEST_KEY, &manifest.to_json())?;
    Ok(manifest)
}

/// Digits recovered from every backend, checksums verified.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FetchedShards {
    pub clouds: Vec<Vec<u16>>,
    pub local: Vec<u16>,
}

fn fetch_one(backend: &dyn Backend, entry: &ShardEntry, d: u32) -> Result<Vec<u16>, StorageError> {
    let location = format!("{}/{}", backend.name(), entry.key);
    let data = backend
        .get(&entry.key)?
        .ok_or_else(|| StorageError::MissingShard(location.clone()))?;
    let found = crc32c::crc32c(&data);
    if found != entry.crc32c {
        return Err(StorageError::ChecksumMismatch {
            location,
            expected: entry.crc32c,
            found,
        });
    }
    let shard = Shard::from_bytes(&data, d, &location)?;
    if shard.digits.len() as u64 != entry.digit_count {
        return Err(StorageError::BadShard {
            location,
            reason: format!(
                "{} digits, manifest lists {}",
                shard.digits.len(),
                entry.digit_count
            ),
        });
    }
    Ok(shard.digits)
}

/// Reads and verifies every shard named by the manifest. Read-only.
pub fn fetch_shards(
    manifest: &Manifest,
    backends: &Backends,
) -> Result<FetchedShards, StorageError> {
    if backends.clouds.len() != manifest.clouds.len() {
        return Err(StorageError::BackendCountMismatch {
            plan: manifest.clouds.len(),
            backends: backends.clouds.len(),
        });
    }
    let d = manifest.field.d;
    let clouds = manifest
        .clouds
        .iter()
        .zip(&backends.clouds)
        .map(|(entry, b)| fetch_one(b.as_ref(), entry, d))
        .collect::<Result<_, _>>()?;
    let local = fetch_one(backends.local.as_ref(), &manifest.local, d)?;
    Ok(FetchedShards { clouds, local })
}

/// Reassembles the coded stream from whatever shards are present.
/// `None` entries stand for withheld shards.
pub fn assemble_stream(
    manifest: &Manifest,
    clouds: &[Option<&[u16]>],
    local: Option<&[u16]>,
) -> Result<Vec<u16>, StorageError> {
    let layout = manifest.layout()?;
    let total = layout.total();
    let mut stream = vec![0u16; total as usize];
    let mut covered = vec![false; total as usize];
    let sources = manifest
        .clouds
        .iter()
        .zip(clouds.iter().copied().chain(std::iter::repeat(None)))
        .chain(std::iter::once((&manifest.local, local)));
    for (entry, digits) in sources {
        let Some(digits) = digits else { continue };
        if digits.len() as u64 != entry.digit_count {
            return Err(StorageError::BadManifest(format!(
                "{} holds {} digits, manifest lists {}",
                entry.key,
                digits.len(),
                entry.digit_count
            )));
        }
        let mut cursor = 0usize;
        for run in &entry.runs {
            let start = layout.offset(DigitPos {
                block: run.block,
                element: run.element,
                digit: run.digit,
            });
            let end = start + run.len;
            if end > total || cursor + run.len as usize > digits.len() {
                return Err(StorageError::BadManifest(format!(
                    "run {run:?} out of range"
                )));
            }
            for (off, &x) in (start..end).zip(&digits[cursor..cursor + run.len as usize]) {
                if std::mem::replace(&mut covered[off as usize], true) {
                    return Err(StorageError::BadManifest(format!(
                        "digit {off} assigned twice"
                    )));
                }
                stream[off as usize] = x;
            }
            cursor += run.len as usize;
        }
    }
    let missing = covered.iter().filter(|&&c| !c).count() as u64;
    if missing > 0 {
        return Err(StorageError::IncompleteData { missing, total });
    }
    Ok(stream)
}

/// Rebuilds the original digit string from a complete set of shards.
pub fn reconstruct(
    manifest: &Manifest,
    clouds: &[Option<&[u16]>],
    local: Option<&[u16]>,
) -> Result<DigitString, StorageError> {
    let stream = assemble_stream(manifest, clouds, local)?;
    let field = Field::with_polynomial(manifest.field.k, manifest.field.poly)?;
    let points: Vec<FieldElement> = manifest.points.iter().map(|&p| FieldElement(p)).collect();
    let matrix = build_vandermonde(&field, &points)?;
    let widths = manifest.widths()?;
    let coded = parse_coded_stream(&stream, &widths, manifest.field.d, manifest.field.k)?;
    let (digits, _) = decode_elements(&field, &matrix, &manifest.grouping, &coded)?;
    Ok(digits)
}

/// [`reconstruct`] over a full fetch.
pub fn reconstruct_fetched(
    manifest: &Manifest,
    fetched: &FetchedShards,
) -> Result<DigitString, StorageError> {
    let clouds: Vec<Option<&[u16]>> = fetched.clouds.iter().map(|c| Some(c.as_slice())).collect();
    reconstruct(manifest, &clouds, Some(&fetched.local))
}
