//! Lemke's complementary pivoting with Q2 witness extraction.

use std::collections::BTreeSet;

use num_traits::{Signed, Zero};

use super::vertex::{lemke_pivot, lemke_start_with, LemkeVertex, PivotResult, TieBreak, Var};
use super::{first_nonpositive_minor, LcpError, LcpInstance, LcpOutcome};
use crate::arith::{QVector, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LemkeOptions {
    pub tie_break: TieBreak,
    /// Overrides the default budget of `2^(2d) + 1` pivots.
    pub step_budget: Option<u64>,
}

impl LemkeOptions {
    pub fn lexicographic() -> Self {
        LemkeOptions { tie_break: TieBreak::Lexicographic, step_budget: None }
    }
}

/// Default pivot budget `2^(2d) + 1`, saturating.
pub fn default_budget(d: usize) -> u64 {
    1u64.checked_shl(2 * d as u32).map_or(u64::MAX, |b| b.saturating_add(1))
}

/// One move of the run: from `trace[from]`, relaxing `entering`. `leaving`
/// is `None` when the edge was an unbounded ray.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PivotRecord {
    pub from: usize,
    pub entering: Var,
    pub leaving: Option<Var>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// `q >= 0`, no pivoting needed.
    Trivial,
    /// `z` reached zero.
    Solution,
    /// The path ended in an unbounded ray other than the primary one.
    SecondaryRay,
    /// `z` did not decrease across a pivot.
    ZNotDecreasing,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LemkeRun {
    pub outcome: LcpOutcome,
    pub termination: Termination,
    /// Every visited vertex, starting with the start vertex.
    pub trace: Vec<LemkeVertex>,
    pub pivots: Vec<PivotRecord>,
}

/// Runs Lemke's algorithm with strict tie handling.
pub fn lemke_solve(inst: &LcpInstance) -> Result<LemkeRun, LcpError> {
    lemke_solve_with(inst, LemkeOptions::default())
}

pub fn lemke_solve_with(inst: &LcpInstance, opts: LemkeOptions) -> Result<LemkeRun, LcpError> {
    let d = inst.dim();
    if inst.q().iter().all(|qi| !qi.is_negative()) {
        return Ok(LemkeRun {
            outcome: LcpOutcome::Q1(QVector::zeros(d)),
            termination: Termination::Trivial,
            trace: vec![],
            pivots: vec![],
        });
    }
    let budget = opts.step_budget.unwrap_or_else(|| default_budget(d));
    let start = lemke_start_with(inst, opts.tie_break)?;
    let mut entering = Var::Y(start.dup_label().ok_or_else(|| LcpError::Internal("start vertex has no duplicate label".into()))?);
    let mut trace = vec![start];
    let mut pivots = Vec::new();
    loop {
        if pivots.len() as u64 >= budget {
            return Err(LcpError::BudgetExceeded { budget });
        }
        let from = trace.len() - 1;
        let cur = &trace[from];
        match lemke_pivot(inst, cur, entering)? {
            PivotResult::Ray { dy, .. } => {
                pivots.push(PivotRecord { from, entering, leaving: None });
                let outcome = extract_q2(inst, &[cur], Some(&dy))?;
                return Ok(LemkeRun { outcome, termination: Termination::SecondaryRay, trace, pivots });
            }
            PivotResult::Vertex { next, leaving } => {
                pivots.push(PivotRecord { from, entering, leaving: Some(leaving) });
                let decreased = next.z_key() < cur.z_key();
                if leaving == Var::Z {
                    let y = next.y().clone();
                    trace.push(next);
                    return Ok(LemkeRun { outcome: LcpOutcome::Q1(y), termination: Termination::Solution, trace, pivots });
                }
                if !decreased {
                    let outcome = extract_q2(inst, &[cur, &next], None)?;
                    trace.push(next);
                    return Ok(LemkeRun { outcome, termination: Termination::ZNotDecreasing, trace, pivots });
                }
                entering = leaving.complement().expect("z handled above");
                trace.push(next);
            }
        }
    }
}

/// Finds a non-positive principal minor. Candidate sets are tried first
/// (supports of `y` at the given vertices, with and without the duplicate
/// label, then the support of the ray's `y` direction); otherwise every
/// principal minor is searched. The result is always recomputed.
pub fn extract_q2(inst: &LcpInstance, at: &[&LemkeVertex], ray_dy: Option<&QVector>) -> Result<LcpOutcome, LcpError> {
    let support = |v: &QVector| -> BTreeSet<usize> { (0..v.len()).filter(|&i| !v[i].is_zero()).collect() };
    let mut candidates: Vec<BTreeSet<usize>> = Vec::new();
    for v in at {
        let supp = support(v.y());
        candidates.push(supp.clone());
        if let Some(l) = v.dup_label() {
            let mut with = supp;
            with.insert(l);
            candidates.push(with);
        }
    }
    if let Some(dy) = ray_dy {
        candidates.push(support(dy));
    }
    for set in candidates.into_iter().filter(|s| !s.is_empty()) {
        let set: Vec<usize> = set.into_iter().collect();
        let minor = inst.m().principal_minor(&set)?;
        if !minor.is_positive() {
            return Ok(LcpOutcome::Q2 { set, minor });
        }
    }
    match first_nonpositive_minor(inst.m())? {
        Some((set, minor)) => Ok(LcpOutcome::Q2 { set, minor }),
        None => Err(LcpError::Internal(
            "Lemke's path ended without a solution although M is a P-matrix".into(),
        )),
    }
}

impl LemkeRun {
    /// `z` at each visited vertex.
    pub fn z_values(&self) -> Vec<Rational> {
        self.trace.iter().map(|v| v.z().clone()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::int;

    #[test]
    fn solve_examples() {
        let run = lemke_solve(&LcpInstance::from_i64(&[&[2]], &[3])).unwrap();
        assert_eq!(run.outcome, LcpOutcome::Q1(QVector::from_i64s(&[0])));
        assert!(run.trace.is_empty() && run.pivots.is_empty());

        let inst = LcpInstance::from_i64(&[&[2, 0], &[0, 3]], &[-4, -6]);
        let run = lemke_solve(&inst).unwrap();
        assert_eq!(run.outcome, LcpOutcome::Q1(QVector::from_i64s(&[2, 2])));
        assert_eq!(run.termination, Termination::Solution);

        let run = lemke_solve(&LcpInstance::from_i64(&[&[0]], &[-1])).unwrap();
        assert_eq!(run.outcome, LcpOutcome::Q2 { set: vec![0], minor: int(0) });
        assert_eq!(run.termination, Termination::SecondaryRay);
    }

    #[test]
    fn trace_vertices_satisfy_invariants() {
        let inst = LcpInstance::from_i64(&[&[2, 1, 0], &[1, 3, 1], &[0, 1, 2]], &[-1, -5, -2]);
        let run = lemke_solve(&inst).unwrap();
        assert!(run.outcome.verify(&inst).unwrap());
        for v in &run.trace {
            v.check_invariants(&inst).unwrap();
        }
        let zs = run.z_values();
        assert!(zs.windows(2).all(|w| w[1] < w[0]), "{zs:?}");
    }

    #[test]
    fn lexicographic_mode_handles_tied_start() {
        let inst = LcpInstance::from_i64(&[&[1, 0], &[0, 1]], &[-1, -1]);
        assert!(lemke_solve(&inst).unwrap_err().is_degenerate());
        let run = lemke_solve_with(&inst, LemkeOptions::lexicographic()).unwrap();
        assert_eq!(run.outcome, LcpOutcome::Q1(QVector::from_i64s(&[1, 1])));
    }

    #[test]
    fn budget_is_enforced() {
        let inst = LcpInstance::from_i64(&[&[2, 0], &[0, 3]], &[-4, -6]);
        let opts = LemkeOptions { step_budget: Some(1), ..Default::default() };
        assert_eq!(lemke_solve_with(&inst, opts).unwrap_err(), LcpError::BudgetExceeded { budget: 1 });
        assert_eq!(default_budget(2), 17);
    }
}
