//! Storage-cost minimization for strict-mode encoding.
//!
//! For a message of `m` digits split into operations of `n` elements of `s`
//! digits, the user keeps the `n x n` matrix (`n^2 s` digits) plus `l` coded
//! digits per encoding operation locally, i.e. `f(n, l) = n^2 s + (m / ns) l`.
//! An eavesdropper who breaches all `p` clouds (each with probability `q`)
//! must still guess the `(m / ns) l` local digits, so the budget requires
//! `q^p d^(-(m/ns) l) <= Pu`.
//!
//! The objective is not jointly convex, but for fixed `n` it is increasing in
//! `l`, so the smallest feasible `l` is optimal and a scan over `n` solves the
//! problem exactly.

use std::io::Write;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptError {
    #[error("invalid cost problem: {0}")]
    BadProblem(String),
    #[error("no (n, l) with l <= n meets the security budget")]
    Infeasible,
    #[error("exhaustive scan over n < 2^{k} is too large")]
    EnumerationTooLarge { k: u32 },
    #[error("csv output failed: {0}")]
    Csv(String),
}

/// Largest field power the optimizer will scan.
pub const MAX_SCAN_K: u32 = 20;
/// Largest field power the exhaustive oracle accepts.
pub const MAX_ENUM_K: u32 = 16;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CostProblem {
    pub m: u64,
    pub d: u32,
    pub k: u32,
    pub p: u32,
    /// Common breach probability of every cloud.
    pub q: f64,
    pub pu: f64,
}

impl CostProblem {
    pub fn new(m: u64, d: u32, k: u32, p: u32, q: f64, pu: f64) -> Result<Self, OptError> {
        let bad = |msg: String| Err(OptError::BadProblem(msg));
        if m == 0 {
            return bad("message length must be positive".into());
        }
        if !(2..=MAX_SCAN_K).contains(&k) {
            return bad(format!("k = {k} outside 2..={MAX_SCAN_K}"));
        }
        if d < 2 || !d.is_power_of_two() || !k.is_multiple_of(d.trailing_zeros()) {
            return bad(format!("no strict width for k = {k}, d = {d}"));
        }
        if p == 0 {
            return bad("at least one cloud is required".into());
        }
        if !(q > 0.0 && q <= 1.0) {
            return bad(format!("breach probability {q} outside (0, 1]"));
        }
        if !(pu > 0.0 && pu <= 1.0) {
            return bad(format!("Pu = {pu} outside (0, 1]"));
        }
        Ok(Self { m, d, k, p, q, pu })
    }

    /// Strict element width `k / log2 d`.
    pub fn s(&self) -> u64 {
        u64::from(self.k / self.d.trailing_zeros())
    }

    pub fn max_n(&self) -> u64 {
        (1u64 << self.k) - 1
    }

    /// Encoding operations `m / (n s)`, as a real number.
    pub fn operations(&self, n: u64) -> f64 {
        self.m as f64 / (n * self.s()) as f64
    }

    pub fn cost(&self, n: u64, l: u64) -> f64 {
        (n * n * self.s()) as f64 + self.operations(n) * l as f64
    }

    /// `log_d(q^p / Pu)`: how many base-d digits of guessing the budget demands.
    fn required_digits(&self) -> f64 {
        let log2d = f64::from(self.d).log2();
        (f64::from(self.p) * self.q.log2() - self.pu.log2()) / log2d
    }

    /// Hessian constants of the relaxed objective: `a = k / log2 d`, `b = m log2 d / k`.
    pub fn hessian_constants(&self) -> (f64, f64) {
        let log2d = f64::from(self.d.trailing_zeros());
        (
            f64::from(self.k) / log2d,
            self.m as f64 * log2d / f64::from(self.k),
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CostSolution {
    pub n_star: u64,
    pub l_star: u64,
    pub f_star: f64,
    /// Encoding-operation count `m / (n* s)`.
    pub alpha: f64,
    pub feasible: bool,
}

impl std::fmt::Display for CostSolution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "n={} l={} f={}", self.n_star, self.l_star, self.f_star)
    }
}

/// Smallest admissible local retention for a given `n`:
/// `max(1, ceil((n s / m) log_d(q^p / Pu)))`.
pub fn local_retention_min(n: u64, problem: &CostProblem) -> u64 {
    let x = problem.required_digits() / problem.operations(n);
    let l = (x - 1e-9).ceil();
    if l <= 1.0 {
        1
    } else {
        l as u64
    }
}

fn solution(problem: &CostProblem, n: u64, l: u64) -> CostSolution {
    CostSolution {
        n_star: n,
        l_star: l,
        f_star: problem.cost(n, l),
        alpha: problem.operations(n),
        feasible: true,
    }
}

/// Scans every `n` in `2..2^k`, taking the minimal feasible `l` for each.
/// Ties go to the smaller `n`.
pub fn solve_cost(problem: &CostProblem) -> Result<CostSolution, OptError> {
    let mut best: Option<CostSolution> = None;
    for n in 2..=problem.max_n() {
        let l = local_retention_min(n, problem);
        if l > n {
            continue;
        }
        let f = problem.cost(n, l);
        if best.is_none_or(|b| f < b.f_star) {
            best = Some(solution(problem, n, l));
        }
    }
    best.ok_or(OptError::Infeasible)
}

/// Exhaustive oracle: evaluates the budget constraint directly for every
/// pair `2 <= n < 2^k`, `1 <= l <= n`. Since the constraint only gets easier
/// and the cost only grows with `l`, each `n` stops at its first feasible `l`.
pub fn brute_force_cost(problem: &CostProblem) -> Result<CostSolution, OptError> {
    if problem.k > MAX_ENUM_K {
        return Err(OptError::EnumerationTooLarge { k: problem.k });
    }
    let guess_all_clouds = problem.q.powi(problem.p as i32);
    let d = f64::from(problem.d);
    let feasible = |n: u64, l: u64| {
        guess_all_clouds * d.powf(-problem.operations(n) * l as f64) <= problem.pu * (1.0 + 1e-12)
    };
    let mut best: Option<CostSolution> = None;
    for n in 2..=problem.max_n() {
        if !feasible(n, n) {
            continue;
        }
        for l in 1..=n {
            if !feasible(n, l) {
                continue;
            }
            let f = problem.cost(n, l);
            let better = match best {
                None => true,
                Some(b) => f < b.f_star || (f == b.f_star && (n, l) < (b.n_star, b.l_star)),
            };
            if better {
                best = Some(solution(problem, n, l));
            }
            break;
        }
    }
    best.ok_or(OptError::Infeasible)
}

/// Eigenvalues `(lambda_plus, lambda_minus)` of the Hessian of
/// `a n^2 + b l / n` at `(n, l)`.
pub fn hessian_spectrum(n: f64, l: f64, problem: &CostProblem) -> (f64, f64) {
    let (a, b) = problem.hessian_constants();
    hessian_spectrum_ab(a, b, n, l)
}

pub fn hessian_spectrum_ab(a: f64, b: f64, n: f64, l: f64) -> (f64, f64) {
    let trace = 2.0 * a + 2.0 * b * l / n.powi(3);
    let off = b / (n * n);
    let root = (trace * trace + 4.0 * off * off).sqrt();
    let plus = (trace + root) / 2.0;
    // (trace - root) / 2 rewritten to avoid cancellation
    let minus = if plus == 0.0 {
        0.0
    } else {
        -2.0 * off * off / (trace + root)
    };
    (plus, minus)
}

#[derive(Serialize)]
struct SweepRow {
    m: u64,
    d: u32,
    k: u32,
    p: u32,
    q: f64,
    #[serde(rename = "Pu")]
    pu: f64,
    n_star: Option<u64>,
    l_star: Option<u64>,
    f_star: Option<f64>,
    feasible: bool,
}

/// Solves each problem and writes one CSV row per problem.
pub fn write_sweep_csv<W: Write>(problems: &[CostProblem], out: W) -> Result<(), OptError> {
    let mut wtr = csv::Writer::from_writer(out);
    for pr in problems {
        let sol = solve_cost(pr).ok();
        wtr.serialize(SweepRow {
            m: pr.m,
            d: pr.d,
            k: pr.k,
            p: pr.p,
            q: pr.q,
            pu: pr.pu,
            n_star: sol.map(|s| s.n_star),
            l_star: sol.map(|s| s.l_star),
            f_star: sol.map(|s| s.f_star),
            feasible: sol.is_some(),
        })
        .map_err(|e| OptError::Csv(e.to_string()))?;
    }
    wtr.flush().map_err(|e| OptError::Csv(e.to_string()))
}
