//! End-to-end composition: encode, plan, store, recover.

use crate::codec::{
    classify_overflow, encode_message, DigitString, EncodeParams, EncodedMessage, GroupingMode,
    OverflowReport, StreamLayout,
};
use crate::gf::FieldSpec;
use crate::optimizer::{solve_cost, CostProblem, CostSolution};
use crate::planner::{
    make_plan, make_plan_with_secrecy, per_cloud_caps, DistributionPlan, SecurityProfile,
};
use crate::storage::{
    fetch_shards, reconstruct_fetched, store_shards, Backends, Manifest, StoreJob,
};
use crate::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockSize {
    Fixed(usize),
    /// Let the cost optimizer pick `n` (strict mode only).
    Auto,
}

#[derive(Clone, Debug)]
pub struct PipelineRequest {
    pub spec: FieldSpec,
    pub mode: GroupingMode,
    pub block_size: BlockSize,
    pub profile: SecurityProfile,
    /// Digits per block kept local under the one-digit-per-component rule.
    pub secret_digits: usize,
    pub parallel: bool,
}

#[derive(Clone, Debug)]
pub struct Prepared {
    pub message: EncodedMessage,
    pub plan: DistributionPlan,
    /// Present when `n` came from the optimizer.
    pub cost: Option<CostSolution>,
    pub secret_digits: usize,
}

/// Encodes `digits` and plans their distribution.
///
/// With [`BlockSize::Auto`] the optimizer runs with the largest breach
/// probability as the common one, and its local retention `l*` becomes the
/// per-block secret digit count unless a larger one was requested.
pub fn prepare(digits: &DigitString, req: &PipelineRequest) -> Result<Prepared, Error> {
    let (n, cost) = match req.block_size {
        BlockSize::Fixed(n) => (n, None),
        BlockSize::Auto => {
            if req.mode != GroupingMode::Strict {
                return Err(Error::Config("n = auto requires strict mode".into()));
            }
            let q = req.profile.breach().iter().copied().fold(0.0, f64::max);
            let problem = CostProblem::new(
                digits.len().max(1) as u64,
                req.spec.d(),
                req.spec.k(),
                req.profile.p() as u32,
                q,
                req.profile.pu(),
            )?;
            let sol = solve_cost(&problem)?;
            (sol.n_star as usize, Some(sol))
        }
    };
    let secret_digits = cost.map_or(req.secret_digits, |c| {
        req.secret_digits.max(c.l_star as usize)
    });
    let params = EncodeParams {
        parallel: req.parallel,
        ..EncodeParams::new(req.mode, n)
    };
    let message = encode_message(digits, &req.spec, &params)?;
    let caps = per_cloud_caps(message.total_digits() as u64, req.spec.d(), &req.profile);
    let plan = if secret_digits == 0 {
        make_plan(&message.blocks, &req.profile, &caps)?
    } else {
        make_plan_with_secrecy(&message.blocks, &req.profile, &caps, secret_digits)?
    };
    Ok(Prepared {
        message,
        plan,
        cost,
        secret_digits,
    })
}

pub fn store(
    prepared: &Prepared,
    profile: &SecurityProfile,
    backends: &Backends,
    source_bytes: Option<u64>,
) -> Result<Manifest, Error> {
    Ok(store_shards(
        &StoreJob {
            message: &prepared.message,
            plan: &prepared.plan,
            profile,
            source_bytes,
        },
        backends,
    )?)
}

/// Loads the manifest, fetches every shard and rebuilds the digit string.
pub fn recover(backends: &Backends) -> Result<(Manifest, DigitString), Error> {
    let manifest = backends.load_manifest()?;
    let fetched = fetch_shards(&manifest, backends)?;
    let digits = reconstruct_fetched(&manifest, &fetched)?;
    Ok((manifest, digits))
}

/// Like [`recover`], returning the original bytes when the manifest records
/// a byte length.
pub fn recover_bytes(backends: &Backends) -> Result<Vec<u8>, Error> {
    let (manifest, digits) = recover(backends)?;
    let len = manifest
        .source_bytes
        .ok_or_else(|| Error::Config("manifest has no byte length; use decode".into()))?;
    Ok(digits.to_bytes(len as usize)?)
}

/// Overflow classification of every block of a message.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct OverflowSummary {
    pub blocks: usize,
    pub strict_blocks: usize,
    pub alpha_satisfied_blocks: usize,
    pub tested_alpha: f64,
    pub max_ratio: f64,
}

/// Element-level view of a plan: each element goes to the cloud holding
/// its leading digit, or to a final local group.
pub fn element_assignment(
    layout: &StreamLayout,
    plan: &DistributionPlan,
    block: usize,
) -> Vec<Vec<usize>> {
    let mut groups = vec![Vec::new(); plan.p() + 1];
    for e in 0..layout.block_size() {
        let start = layout.element_start(block, e);
        let owner = plan
            .assignments
            .iter()
            .position(|runs| runs.iter().any(|r| r.contains(&start)))
            .unwrap_or(plan.p());
        groups[owner].push(e);
    }
    groups
}

pub fn classify_message(
    message: &EncodedMessage,
    plan: &DistributionPlan,
    alpha: f64,
) -> Result<(OverflowSummary, Vec<OverflowReport>), Error> {
    let layout = message.layout();
    let widths = vec![message.grouping.width; message.grouping.n];
    let reports = message
        .blocks
        .iter()
        .enumerate()
        .map(|(i, block)| {
            classify_overflow(&widths, block, &element_assignment(&layout, plan, i), alpha)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let summary = OverflowSummary {
        blocks: reports.len(),
        strict_blocks: reports.iter().filter(|r| r.strict).count(),
        alpha_satisfied_blocks: reports.iter().filter(|r| r.alpha_bound_satisfied).count(),
        tested_alpha: alpha,
        max_ratio: reports
            .iter()
            .flat_map(|r| r.per_cloud_ratios.iter().copied())
            .fold(0.0, f64::max),
    };
    Ok((summary, reports))
}
