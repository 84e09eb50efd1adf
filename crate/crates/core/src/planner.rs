//! Placement of coded digits onto clouds under a guessing budget.
//!
//! An eavesdropper that breaks into cloud `i` (probability `breach_i`) sees
//! the digits stored there and must guess every other coded digit. With `T`
//! coded digits in total and `stored_i` of them on cloud `i`, the chance of
//! recovering the message is `breach_i * d^-(T - stored_i)`. Caps keep that
//! below the user's budget `Pu`; anything the clouds cannot take stays local.

use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::{CodedBlock, DigitPos, StreamLayout};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error("invalid security profile: {0}")]
    BadProfile(String),
    #[error("{stored} stored digits exceed the {total} digits in the stream")]
    BadCount { stored: u64, total: u64 },
    #[error("{w} secret digits requested but blocks only have {n} components")]
    TooManySecretDigits { w: usize, n: usize },
    #[error("expected {expected} caps, got {found}")]
    CapsMismatch { expected: usize, found: usize },
}

/// Per-cloud breach probabilities and the user's guessing budget.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecurityProfile {
    breach: Vec<f64>,
    pu: f64,
}

impl SecurityProfile {
    pub fn new(breach: Vec<f64>, pu: f64) -> Result<Self, PlanError> {
        if breach.is_empty() {
            return Err(PlanError::BadProfile(
                "at least one cloud is required".into(),
            ));
        }
        if let Some(b) = breach.iter().find(|b| !(**b > 0.0 && **b <= 1.0)) {
            return Err(PlanError::BadProfile(format!(
                "breach probability {b} is outside (0, 1]"
            )));
        }
        if !(pu > 0.0 && pu <= 1.0) {
            return Err(PlanError::BadProfile(format!(
                "Pu = {pu} is outside (0, 1]"
            )));
        }
        Ok(Self { breach, pu })
    }

    /// Builds a profile from resist probabilities (`breach = 1 - resist`).
    pub fn from_resist(resist: &[f64], pu: f64) -> Result<Self, PlanError> {
        Self::new(resist.iter().map(|r| 1.0 - r).collect(), pu)
    }

    pub fn p(&self) -> usize {
        self.breach.len()
    }

    pub fn breach(&self) -> &[f64] {
        &self.breach
    }

    pub fn pu(&self) -> f64 {
        self.pu
    }
}

fn log_base(x: f64, d: u32) -> f64 {
    x.log2() / f64::from(d).log2()
}

/// Digit budget per cloud: `clamp(floor(T + log_d Pu - log_d breach_i), 0, T)`.
pub fn per_cloud_caps(total: u64, d: u32, profile: &SecurityProfile) -> Vec<u64> {
    let log_pu = log_base(profile.pu, d);
    profile
        .breach
        .iter()
        .map(|&b| {
            let raw = total as f64 + log_pu - log_base(b, d);
            let floored = (raw + 1e-9).floor();
            if floored <= 0.0 {
                0
            } else {
                (floored as u64).min(total)
            }
        })
        .collect()
}

/// `breach * d^-(total - stored)`.
pub fn guess_probability(total: u64, stored: u64, d: u32, breach: f64) -> Result<f64, PlanError> {
    if stored > total {
        return Err(PlanError::BadCount { stored, total });
    }
    Ok(breach * f64::from(d).powf(-((total - stored) as f64)))
}

/// Where every coded digit goes. Runs are half-open stream-offset ranges.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistributionPlan {
    pub total_digits: u64,
    pub d: u32,
    pub caps: Vec<u64>,
    pub assignments: Vec<Vec<Range<u64>>>,
    pub local: Vec<Range<u64>>,
    pub guess_prob: Vec<f64>,
    pub pu: f64,
}

fn run_len(runs: &[Range<u64>]) -> u64 {
    runs.iter().map(|r| r.end - r.start).sum()
}

impl DistributionPlan {
    pub fn p(&self) -> usize {
        self.assignments.len()
    }

    pub fn stored(&self, cloud: usize) -> u64 {
        run_len(&self.assignments[cloud])
    }

    pub fn local_count(&self) -> u64 {
        run_len(&self.local)
    }

    /// False only when `Pu < breach_i * d^-T` for some cloud: no placement,
    /// not even keeping everything local, reaches such a budget.
    pub fn meets_budget(&self) -> bool {
        self.guess_prob.iter().all(|&g| g <= self.pu * (1.0 + 1e-9))
    }
}

fn push_run(runs: &mut Vec<Range<u64>>, r: Range<u64>) {
    if r.is_empty() {
        return;
    }
    match runs.last_mut() {
        Some(last) if last.end == r.start => last.end = r.end,
        _ => runs.push(r),
    }
}

fn runs_from_sorted(offsets: &[u64]) -> Vec<Range<u64>> {
    let mut runs = Vec::new();
    for &o in offsets {
        push_run(&mut runs, o..o + 1);
    }
    runs
}

/// Picks `count` more local digits, preferring digits of components that have
/// none yet: first digits of element 0 in every block, then element 1, and so
/// on, then second digits.
fn pick_spread(layout: &StreamLayout, taken: &mut [bool], count: u64, out: &mut Vec<u64>) {
    let mut need = count;
    let n = layout.block_size();
    let blocks = layout.block_count();
    let max_width = (0..blocks)
        .flat_map(|b| (0..n).map(move |e| (b, e)))
        .map(|(b, e)| layout.width(b, e))
        .max()
        .unwrap_or(0);
    'outer: for digit in 0..max_width {
        for element in 0..n {
            for block in 0..blocks {
                if need == 0 {
                    break 'outer;
                }
                if layout.width(block, element) <= digit {
                    continue;
                }
                let off = layout.offset(DigitPos {
                    block,
                    element,
                    digit,
                }) as usize;
                if !taken[off] {
                    taken[off] = true;
                    out.push(off as u64);
                    need -= 1;
                }
            }
        }
    }
}

fn plan_layout(
    layout: &StreamLayout,
    d: u32,
    profile: &SecurityProfile,
    caps: &[u64],
    reserved: &[DigitPos],
) -> Result<DistributionPlan, PlanError> {
    if caps.len() != profile.p() {
        return Err(PlanError::CapsMismatch {
            expected: profile.p(),
            found: caps.len(),
        });
    }
    let total = layout.total();
    let capacity = caps.iter().fold(0u64, |acc, &c| acc.saturating_add(c));

    let mut local_offsets: Vec<u64> = reserved.iter().map(|&p| layout.offset(p)).collect();
    local_offsets.sort_unstable();
    local_offsets.dedup();
    let free = total - local_offsets.len() as u64;
    if free > capacity {
        let mut taken = vec![false; total as usize];
        for &o in &local_offsets {
            taken[o as usize] = true;
        }
        pick_spread(layout, &mut taken, free - capacity, &mut local_offsets);
        local_offsets.sort_unstable();
    }
    let local = runs_from_sorted(&local_offsets);

    let mut assignments: Vec<Vec<Range<u64>>> = vec![Vec::new(); caps.len()];
    let mut cloud = 0usize;
    let mut room = caps.first().copied().unwrap_or(0);
    let mut cursor = 0u64;
    let gaps = local
        .iter()
        .map(|r| (r.start, r.end))
        .chain(std::iter::once((total, total)));
    for (gap_end, next_start) in gaps {
        let mut s = cursor;
        while s < gap_end {
            while room == 0 {
                cloud += 1;
                room = caps[cloud];
            }
            let take = room.min(gap_end - s);
            push_run(&mut assignments[cloud], s..s + take);
            s += take;
            room -= take;
        }
        cursor = next_start;
    }

    let guess_prob = assignments
        .iter()
        .zip(profile.breach())
        .map(|(runs, &b)| guess_probability(total, run_len(runs), d, b))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(DistributionPlan {
        total_digits: total,
        d,
        caps: caps.to_vec(),
        assignments,
        local,
        guess_prob,
        pu: profile.pu(),
    })
}

/// Greedy placement in stream order: cloud 0 is filled up to its cap, then
/// cloud 1, and so on. If the caps cannot absorb every digit the surplus is
/// kept locally, spread over distinct components.
pub fn make_plan(
    blocks: &[CodedBlock],
    profile: &SecurityProfile,
    caps: &[u64],
) -> Result<DistributionPlan, PlanError> {
    let d = blocks.first().map_or(2, CodedBlock::base);
    plan_layout(&StreamLayout::from_blocks(blocks), d, profile, caps, &[])
}

/// Like [`make_plan`], but first keeps `w` digits of every block local
/// according to [`perfect_secrecy_split`].
pub fn make_plan_with_secrecy(
    blocks: &[CodedBlock],
    profile: &SecurityProfile,
    caps: &[u64],
    w: usize,
) -> Result<DistributionPlan, PlanError> {
    let split = perfect_secrecy_split(blocks, w)?;
    let d = blocks.first().map_or(2, CodedBlock::base);
    plan_layout(
        &StreamLayout::from_blocks(blocks),
        d,
        profile,
        caps,
        &split.local,
    )
}

/// Digits kept local and digits released to the clouds by the
/// one-digit-per-component rule.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SecrecySplit {
    pub local: Vec<DigitPos>,
    pub cloud: Vec<Range<u64>>,
}

impl SecrecySplit {
    pub fn cloud_digits(&self) -> u64 {
        run_len(&self.cloud)
    }
}

/// Keeps the leading digit of components `0..w` of every block local and
/// releases everything else.
pub fn perfect_secrecy_split(blocks: &[CodedBlock], w: usize) -> Result<SecrecySplit, PlanError> {
    let layout = StreamLayout::from_blocks(blocks);
    let n = layout.block_size();
    if w > n && !blocks.is_empty() {
        return Err(PlanError::TooManySecretDigits { w, n });
    }
    let mut local = Vec::with_capacity(w * blocks.len());
    let mut cloud = Vec::new();
    let mut cursor = 0u64;
    for block in 0..blocks.len() {
        for element in 0..w {
            let pos = DigitPos {
                block,
                element,
                digit: 0,
            };
            let off = layout.offset(pos);
            push_run(&mut cloud, cursor..off);
            cursor = off + 1;
            local.push(pos);
        }
    }
    push_run(&mut cloud, cursor..layout.total());
    Ok(SecrecySplit { local, cloud })
}
