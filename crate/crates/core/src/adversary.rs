//! Empirical checks of the security claims.
//!
//! [`simulate_guess`] plays an eavesdropper who reads one cloud (or all of
//! them) and guesses the remaining coded digits uniformly at random.
//! [`entropy_audit`] enumerates every plaintext of a small code and measures
//! exactly how much an observation reveals about the leading components.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::codec::{
    digit_count, push_fixed, BlockDecoder, CodecError, EncodedMessage, Rendering, StreamLayout,
};
use crate::gf::{mat_vec_mul, EncodingMatrix, Field, FieldElement, GfError};
use crate::planner::DistributionPlan;

/// Largest number of guessed digits [`simulate_guess`] accepts.
pub const MAX_UNKNOWNS: u64 = 40;
/// Largest plaintext space [`entropy_audit`] enumerates.
pub const MAX_ENUMERATION: u64 = 1 << 20;
const TRIAL_CHUNK: u64 = 1 << 14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AdversaryError {
    #[error("{unknown} unknown digits exceed the simulation limit of {MAX_UNKNOWNS}")]
    TooManyUnknowns { unknown: u64 },
    #[error("q^n = {size} plaintexts exceed the enumeration limit of {MAX_ENUMERATION}")]
    EnumerationTooLarge { size: u128 },
    #[error("trial count must be positive")]
    NoTrials,
    #[error("invalid scenario: {0}")]
    BadScenario(String),
    #[error("csv output failed: {0}")]
    Csv(String),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Field(#[from] GfError),
}

/// Which part of the distribution the eavesdropper reads.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Target {
    Cloud(usize),
    /// Every cloud; only the local share is hidden.
    All,
}

/// An eavesdropper who knows the matrix, the manifest structure and the
/// digits of the targeted clouds, and must guess the rest.
#[derive(Clone, Debug)]
pub struct AttackScenario {
    pub target: Target,
    d: u32,
    k: u32,
    field: Field,
    decoder: BlockDecoder,
    layout: StreamLayout,
    source_width: usize,
    original_length: usize,
    stream: Vec<u16>,
    unknown: Vec<u64>,
    /// Blocks containing at least one unknown digit, with the true plaintext
    /// digits of each (truncated to the original message length).
    affected: Vec<(usize, Vec<u16>)>,
}

impl AttackScenario {
    pub fn new(
        message: &EncodedMessage,
        plan: &DistributionPlan,
        target: Target,
    ) -> Result<Self, AdversaryError> {
        let layout = message.layout();
        let total = layout.total();
        if plan.total_digits != total {
            return Err(AdversaryError::BadScenario(format!(
                "plan covers {} digits, message has {total}",
                plan.total_digits
            )));
        }
        let mut seen = vec![false; total as usize];
        let clouds: Vec<usize> = match target {
            Target::Cloud(i) if i >= plan.p() => {
                return Err(AdversaryError::BadScenario(format!(
                    "cloud {i} does not exist, plan has {}",
                    plan.p()
                )))
            }
            Target::Cloud(i) => vec![i],
            Target::All => (0..plan.p()).collect(),
        };
        for &c in &clouds {
            for r in &plan.assignments[c] {
                seen[r.start as usize..r.end as usize].fill(true);
            }
        }
        let unknown: Vec<u64> = (0..total).filter(|&o| !seen[o as usize]).collect();
        let field = message.spec.field().clone();
        let decoder = BlockDecoder::new(&field, &message.matrix)?;
        let stream = message.coded_digits();
        let mut blocks: Vec<usize> = unknown
            .iter()
            .map(|&o| layout.locate(o).expect("offset in stream").block)
            .collect();
        blocks.dedup();
        let mut scenario = Self {
            target,
            d: message.spec.d(),
            k: message.spec.k(),
            field,
            decoder,
            layout,
            source_width: message.grouping.width,
            original_length: message.grouping.original_length,
            stream,
            unknown,
            affected: Vec::new(),
        };
        let mut scratch = Scratch::default();
        for b in blocks {
            let truth = scenario
                .decode_block(b, &scenario.stream, &mut scratch)
                .ok_or_else(|| AdversaryError::BadScenario(format!("block {b} does not decode")))?;
            scenario.affected.push((b, truth));
        }
        Ok(scenario)
    }

    pub fn unknown(&self) -> u64 {
        self.unknown.len() as u64
    }

    pub fn observed(&self) -> u64 {
        self.layout.total() - self.unknown()
    }

    pub fn total(&self) -> u64 {
        self.layout.total()
    }

    /// Guessing factor `d^-unknown`; the breach probability multiplies this.
    pub fn guessing_factor(&self) -> f64 {
        f64::from(self.d).powf(-(self.unknown() as f64))
    }

    /// Decodes one block from `stream` and returns its plaintext digits
    /// within the original message, or `None` if an element leaves the field.
    fn decode_block(&self, block: usize, stream: &[u16], s: &mut Scratch) -> Option<Vec<u16>> {
        let n = self.layout.block_size();
        s.coded.clear();
        for e in 0..n {
            let start = self.layout.element_start(block, e) as usize;
            let w = self.layout.width(block, e);
            let v = stream[start..start + w]
                .iter()
                .fold(0u64, |acc, &x| acc * u64::from(self.d) + u64::from(x));
            if v >> self.k != 0 {
                return None;
            }
            s.coded.push(FieldElement(v as u16));
        }
        self.decoder
            .decode_into(&self.field, &s.coded, &mut s.plain, &mut s.mults)
            .ok()?;
        let mut digits = Vec::with_capacity(n * self.source_width);
        for p in &s.plain {
            push_fixed(&mut digits, p.0.into(), self.d, self.source_width);
        }
        let block_start = block * n * self.source_width;
        digits.truncate(self.original_length.saturating_sub(block_start));
        Some(digits)
    }

    fn trial(&self, rng: &mut ChaCha8Rng, stream: &mut [u16], s: &mut Scratch) -> bool {
        for &o in &self.unknown {
            stream[o as usize] = rng.gen_range(0..self.d) as u16;
        }
        self.affected.iter().all(|(b, truth)| {
            self.decode_block(*b, stream, s)
                .is_some_and(|got| got == *truth)
        })
    }
}

#[derive(Default)]
struct Scratch {
    coded: Vec<FieldElement>,
    plain: Vec<FieldElement>,
    mults: Vec<u32>,
}

/// Monte-Carlo estimate of the probability that a uniform guess of the
/// unknown digits decodes to the original message. Trials are split into
/// fixed chunks with their own ChaCha8 stream, so the result depends only on
/// `seed`, not on thread scheduling.
pub fn simulate_guess(
    scenario: &AttackScenario,
    trials: u64,
    seed: u64,
) -> Result<f64, AdversaryError> {
    Ok(count_successes(scenario, trials, seed)? as f64 / trials as f64)
}

/// Number of successful trials behind [`simulate_guess`].
pub fn count_successes(
    scenario: &AttackScenario,
    trials: u64,
    seed: u64,
) -> Result<u64, AdversaryError> {
    if trials == 0 {
        return Err(AdversaryError::NoTrials);
    }
    if scenario.unknown() > MAX_UNKNOWNS {
        return Err(AdversaryError::TooManyUnknowns {
            unknown: scenario.unknown(),
        });
    }
    if scenario.unknown() == 0 {
        return Ok(trials);
    }
    let chunks = trials.div_ceil(TRIAL_CHUNK);
    let hits = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk);
            let mut stream = scenario.stream.clone();
            let mut scratch = Scratch::default();
            let len = TRIAL_CHUNK.min(trials - chunk * TRIAL_CHUNK);
            (0..len)
                .filter(|_| scenario.trial(&mut rng, &mut stream, &mut scratch))
                .count() as u64
        })
        .sum();
    Ok(hits)
}

/// What the eavesdropper sees of a coded block `c = A b`.
#[derive(Clone, Debug, PartialEq)]
pub enum Selection {
    /// Whole coded components, by index.
    Components(Vec<usize>),
    /// Every digit of the rendered block except `hidden` (component, digit)
    /// pairs. Render widths are public, as in the manifest.
    Digits {
        d: u32,
        rendering: Rendering,
        hidden: Vec<(usize, usize)>,
    },
}

impl Selection {
    /// Components `start..start + t`.
    pub fn contiguous(start: usize, t: usize) -> Self {
        Selection::Components((start..start + t).collect())
    }

    /// Hides the leading digit of components `0..w`, the rule the planner
    /// uses for its local share.
    pub fn leading_digits_hidden(d: u32, rendering: Rendering, w: usize) -> Self {
        Selection::Digits {
            d,
            rendering,
            hidden: (0..w).map(|j| (j, 0)).collect(),
        }
    }

    pub fn id(&self) -> String {
        match self {
            Selection::Components(idx) => {
                let parts: Vec<String> = idx.iter().map(usize::to_string).collect();
                format!("c[{}]", parts.join(" "))
            }
            Selection::Digits {
                d,
                rendering,
                hidden,
            } => {
                let parts: Vec<String> = hidden.iter().map(|(c, x)| format!("{c}.{x}")).collect();
                let r = match rendering {
                    Rendering::Fixed(w) => format!("fixed{w}"),
                    Rendering::Minimal => "minimal".into(),
                };
                format!("d{d}-{r}-hide[{}]", parts.join(" "))
            }
        }
    }

    fn observe(&self, c: &[FieldElement], out: &mut Vec<u16>) {
        out.clear();
        match self {
            Selection::Components(idx) => out.extend(idx.iter().map(|&j| c[j].0)),
            Selection::Digits {
                d,
                rendering,
                hidden,
            } => {
                let mut digits = Vec::new();
                for (j, x) in c.iter().enumerate() {
                    let w = match rendering {
                        Rendering::Fixed(w) => *w,
                        Rendering::Minimal => digit_count(x.0.into(), *d),
                    };
                    out.push(w as u16);
                    digits.clear();
                    push_fixed(&mut digits, x.0.into(), *d, w);
                    out.extend(
                        digits
                            .iter()
                            .enumerate()
                            .filter(|(i, _)| !hidden.contains(&(j, *i)))
                            .map(|(_, &v)| v),
                    );
                }
            }
        }
    }

    /// Number of observed components, or observed digits for a digit selection.
    pub fn size(&self, n: usize, k: u32) -> usize {
        match self {
            Selection::Components(idx) => idx.len(),
            Selection::Digits {
                d,
                rendering,
                hidden,
            } => {
                let full = match rendering {
                    Rendering::Fixed(w) => *w,
                    Rendering::Minimal => digit_count((1u64 << k) - 1, *d),
                };
                n * full - hidden.len()
            }
        }
    }
}

/// `log` of a product of prime powers, kept exactly as an exponent map.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
struct LogProduct(BTreeMap<u64, i128>);

impl LogProduct {
    /// Adds `sign * e * log(n)`.
    fn add(&mut self, mut n: u64, e: i128) {
        let mut p = 2;
        while p * p <= n {
            while n.is_multiple_of(p) {
                *self.0.entry(p).or_default() += e;
                n /= p;
            }
            p += 1;
        }
        if n > 1 {
            *self.0.entry(n).or_default() += e;
        }
        self.0.retain(|_, v| *v != 0);
    }

    fn ln(&self) -> f64 {
        self.0
            .iter()
            .map(|(&p, &e)| e as f64 * (p as f64).ln())
            .sum()
    }
}

/// Exact entropy comparison for one (matrix, secret, selection) triple.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EntropyReport {
    /// `H(S)` in base-q symbols.
    pub h_s: f64,
    /// `H(S | E)` in base-q symbols.
    pub h_s_given_e: f64,
    /// `H(S | E) = H(S)`, decided on exact counts.
    pub perfect: bool,
}

/// Enumerates every `b` in `F_q^n`, takes `S = (b_0, .., b_{w-1})` and `E`
/// the selected view of `A b`, and compares `H(S|E)` with `H(S)` exactly.
pub fn entropy_audit(
    field: &Field,
    matrix: &EncodingMatrix,
    w: usize,
    selection: &Selection,
) -> Result<EntropyReport, AdversaryError> {
    let n = matrix.n();
    let q = u64::from(field.size());
    let size = u128::from(q).pow(n as u32);
    if size > u128::from(MAX_ENUMERATION) {
        return Err(AdversaryError::EnumerationTooLarge { size });
    }
    if w > n {
        return Err(AdversaryError::BadScenario(format!(
            "secret of {w} components in a block of {n}"
        )));
    }
    match selection {
        Selection::Components(idx) if idx.iter().any(|&j| j >= n) => {
            return Err(AdversaryError::BadScenario(
                "component index out of range".into(),
            ))
        }
        Selection::Digits { d, .. } if *d < 2 => {
            return Err(AdversaryError::BadScenario(format!("digit base {d}")))
        }
        _ => {}
    }
    let a = matrix.matrix();
    let tail = size / u128::from(q);
    type Counts = HashMap<(u64, Vec<u16>), u64>;
    let counts: Counts = (0..q)
        .into_par_iter()
        .map(|lead| {
            let mut local: Counts = HashMap::new();
            let mut b = vec![FieldElement::ZERO; n];
            let mut view = Vec::new();
            for rest in 0..tail {
                // b_0 = lead, b_1.. from the base-q digits of `rest`
                let mut r = rest as u64;
                b[0] = FieldElement(lead as u16);
                for slot in b.iter_mut().skip(1) {
                    *slot = FieldElement((r % q) as u16);
                    r /= q;
                }
                let c = mat_vec_mul(field, a, &b).expect("square matrix");
                selection.observe(&c, &mut view);
                let secret = b[..w].iter().fold(0u64, |acc, x| acc * q + u64::from(x.0));
                *local.entry((secret, view.clone())).or_default() += 1;
            }
            local
        })
        .reduce(HashMap::new, |mut acc, part| {
            for (key, v) in part {
                *acc.entry(key).or_default() += v;
            }
            acc
        });

    let total = size as u64;
    let mut by_secret: HashMap<u64, u64> = HashMap::new();
    let mut by_view: HashMap<&[u16], u64> = HashMap::new();
    for ((s, e), &v) in &counts {
        *by_secret.entry(*s).or_default() += v;
        *by_view.entry(e.as_slice()).or_default() += v;
    }
    // N H(S) = log(N^N / prod n_s^n_s)
    let mut nh_s = LogProduct::default();
    nh_s.add(total, i128::from(total));
    for &v in by_secret.values() {
        nh_s.add(v, -i128::from(v));
    }
    // N H(S|E) = log(prod n_e^n_e / prod n_se^n_se)
    let mut nh_cond = LogProduct::default();
    for &v in by_view.values() {
        nh_cond.add(v, i128::from(v));
    }
    for &v in counts.values() {
        nh_cond.add(v, -i128::from(v));
    }
    let perfect = nh_s == nh_cond;
    let scale = total as f64 * (q as f64).ln();
    let h_s = nh_s.ln() / scale;
    let h_s_given_e = if perfect { h_s } else { nh_cond.ln() / scale };
    Ok(EntropyReport {
        h_s,
        h_s_given_e,
        perfect,
    })
}

/// One audited configuration, as written to CSV.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuditRow {
    pub k: u32,
    pub n: usize,
    pub w: usize,
    pub t: usize,
    #[serde(rename = "selection-id")]
    pub selection_id: String,
    #[serde(rename = "H_S")]
    pub h_s: f64,
    #[serde(rename = "H_S_given_E")]
    pub h_s_given_e: f64,
    pub perfect: bool,
}

impl AuditRow {
    pub fn new(
        field: &Field,
        n: usize,
        w: usize,
        selection: &Selection,
        report: &EntropyReport,
    ) -> Self {
        Self {
            k: field.k(),
            n,
            w,
            t: selection.size(n, field.k()),
            selection_id: selection.id(),
            h_s: report.h_s,
            h_s_given_e: report.h_s_given_e,
            perfect: report.perfect,
        }
    }
}

pub fn write_audit_csv<W: Write>(rows: &[AuditRow], out: W) -> Result<(), AdversaryError> {
    let mut wtr = csv::Writer::from_writer(out);
    for r in rows {
        wtr.serialize(r)
            .map_err(|e| AdversaryError::Csv(e.to_string()))?;
    }
    wtr.flush().map_err(|e| AdversaryError::Csv(e.to_string()))
}
