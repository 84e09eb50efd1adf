//! Timing harness for field multiplication and the full store pipeline.
//!
//! Reported times are medians over at least [`MIN_REPS`] runs, taken after
//! one untimed warm-up run. Operation counts are exact and independent of
//! the machine.

use std::hint::black_box;
use std::io::Write;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::{encode_message, CodecError, DigitString, EncodeParams, GroupingMode};
use crate::gf::{Field, FieldElement, FieldSpec, GfError};
use crate::planner::{make_plan, per_cloud_caps, PlanError, SecurityProfile};
use crate::storage::{store_shards, Backends, StorageError, StoreJob};

pub const MIN_REPS: usize = 5;
pub const MIN_MUL_COUNT: u64 = 1_000_000;
const OPERAND_POOL: usize = 1 << 16;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("mul_count {0} is below the floor of {MIN_MUL_COUNT}")]
    TooFewMultiplications(u64),
    #[error("at least {MIN_REPS} repetitions are required, got {0}")]
    TooFewReps(usize),
    #[error("invalid parameter: {0}")]
    BadParameter(String),
    #[error("csv output failed: {0}")]
    Csv(String),
    #[error(transparent)]
    Field(#[from] GfError),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Storage(#[from] StorageError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchResult {
    pub scenario: String,
    pub k: u32,
    pub n: usize,
    pub d: u32,
    pub mode: String,
    pub alpha: Option<f64>,
    pub p: usize,
    pub bytes: u64,
    pub median_ms: f64,
    pub reps: usize,
    /// Field multiplications per run.
    pub mul_count: u64,
}

impl BenchResult {
    /// Multiplications per second at the median time.
    pub fn throughput(&self) -> f64 {
        self.mul_count as f64 / (self.median_ms / 1e3)
    }
}

pub fn median(samples: &mut [f64]) -> f64 {
    samples.sort_by(f64::total_cmp);
    let mid = samples.len() / 2;
    if samples.len() % 2 == 1 {
        samples[mid]
    } else {
        (samples[mid - 1] + samples[mid]) / 2.0
    }
}

fn time_median(reps: usize, mut run: impl FnMut()) -> f64 {
    run();
    let mut samples: Vec<f64> = (0..reps)
        .map(|_| {
            let start = Instant::now();
            run();
            start.elapsed().as_secs_f64() * 1e3
        })
        .collect();
    median(&mut samples)
}

/// The operand pairs `bench_mul` cycles through for field `k`.
pub fn operand_stream(field: &Field, seed: u64) -> Vec<(FieldElement, FieldElement)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ u64::from(field.k()));
    let size = field.size();
    (0..OPERAND_POOL)
        .map(|_| {
            (
                FieldElement(rng.gen_range(0..size) as u16),
                FieldElement(rng.gen_range(0..size) as u16),
            )
        })
        .collect()
}

/// Times `mul_count` multiplications in each field `GF(2^k)`.
pub fn bench_mul(
    k_list: &[u32],
    mul_count: u64,
    seed: u64,
    reps: usize,
) -> Result<Vec<BenchResult>, BenchError> {
    if mul_count < MIN_MUL_COUNT {
        return Err(BenchError::TooFewMultiplications(mul_count));
    }
    if reps < MIN_REPS {
        return Err(BenchError::TooFewReps(reps));
    }
    k_list
        .iter()
        .map(|&k| {
            let field = Field::new(k)?;
            let ops = operand_stream(&field, seed);
            let median_ms = time_median(reps, || {
                let mut acc = FieldElement::ZERO;
                for i in 0..mul_count as usize {
                    let (x, y) = ops[i % OPERAND_POOL];
                    acc = field.add(acc, field.mul(black_box(x), y));
                }
                black_box(acc);
            });
            Ok(BenchResult {
                scenario: "gf_mul".into(),
                k,
                n: 0,
                d: 2,
                mode: "-".into(),
                alpha: None,
                p: 0,
                bytes: 0,
                median_ms,
                reps,
                mul_count,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub d: u32,
    pub mode: GroupingMode,
    pub breach: Vec<f64>,
    pub pu: f64,
    pub reps: usize,
    pub parallel: bool,
}

impl PipelineConfig {
    pub fn new(mode: GroupingMode, p: usize) -> Self {
        Self {
            d: 2,
            mode,
            breach: vec![0.5; p],
            pu: 1e-6,
            reps: MIN_REPS,
            parallel: false,
        }
    }
}

/// Encodes, plans and stores `file` into in-memory backends once per run.
fn run_pipeline(
    file: &[u8],
    spec: &FieldSpec,
    n: usize,
    cfg: &PipelineConfig,
    profile: &SecurityProfile,
) -> Result<u64, BenchError> {
    let digits = DigitString::from_bytes(file, cfg.d)?;
    let params = EncodeParams {
        parallel: cfg.parallel,
        ..EncodeParams::new(cfg.mode, n)
    };
    let msg = encode_message(&digits, spec, &params)?;
    let caps = per_cloud_caps(msg.total_digits() as u64, cfg.d, profile);
    let plan = make_plan(&msg.blocks, profile, &caps)?;
    let backends = Backends::memory(profile.p());
    store_shards(
        &StoreJob {
            message: &msg,
            plan: &plan,
            profile,
            source_bytes: Some(file.len() as u64),
        },
        &backends,
    )?;
    Ok(msg.work.field_mults)
}

/// Times encode + plan + store over every `(k, n)` pair.
pub fn bench_pipeline(
    file: &[u8],
    n_list: &[usize],
    k_list: &[u32],
    cfg: &PipelineConfig,
) -> Result<Vec<BenchResult>, BenchError> {
    if cfg.reps < MIN_REPS {
        return Err(BenchError::TooFewReps(cfg.reps));
    }
    let profile = SecurityProfile::new(cfg.breach.clone(), cfg.pu)?;
    let mut out = Vec::new();
    for &k in k_list {
        let spec = FieldSpec::new(k, cfg.d)?;
        for &n in n_list {
            if n < 2 || n as u64 > (1u64 << k) - 1 {
                return Err(BenchError::BadParameter(format!(
                    "n = {n} outside 2..=2^{k}-1"
                )));
            }
            let mut mul_count = 0;
            let mut failure = None;
            let median_ms = time_median(cfg.reps, || {
                match run_pipeline(file, &spec, n, cfg, &profile) {
                    Ok(m) => mul_count = m,
                    Err(e) => failure = Some(e),
                }
            });
            if let Some(e) = failure {
                return Err(e);
            }
            out.push(BenchResult {
                scenario: "pipeline".into(),
                k,
                n,
                d: cfg.d,
                mode: cfg.mode.name().into(),
                alpha: cfg.mode.alpha(),
                p: profile.p(),
                bytes: file.len() as u64,
                median_ms,
                reps: cfg.reps,
                mul_count,
            });
        }
    }
    Ok(out)
}

/// A deterministic pseudo-random test file.
pub fn synthetic_file(bytes: usize, seed: u64) -> Vec<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![0u8; bytes];
    rng.fill(out.as_mut_slice());
    out
}

pub fn write_bench_csv<W: Write>(rows: &[BenchResult], out: W) -> Result<(), BenchError> {
    let mut wtr = csv::Writer::from_writer(out);
    for r in rows {
        wtr.serialize(r)
            .map_err(|e| BenchError::Csv(e.to_string()))?;
    }
    wtr.flush().map_err(|e| BenchError::Csv(e.to_string()))
}

pub fn read_bench_csv(text: &str) -> Result<Vec<BenchResult>, BenchError> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .collect::<Result<_, _>>()
        .map_err(|e| BenchError::Csv(e.to_string()))
}
