//! ContinuousLocalOpt, Contraction, MetametricContraction and
//! GeneralContraction instances, their verifiers and desk-scale solvers.

use std::cmp::Ordering;
use std::fmt;
use std::path::Path;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use thiserror::Error;

use super::{cmp_scaled_norm, numbered_lines, parse_block, ArithCircuit, CircuitError, Norm};
use crate::arith::{parse_rational, QVector, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProblemError {
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error("point ({0}) lies outside the unit cube")]
    OutOfDomain(QVector),
    #[error("f maps ({point}) to ({image}), outside the unit cube")]
    DomainEscape { point: QVector, image: QVector },
    #[error("invalid instance: {0}")]
    Invalid(String),
    #[error("{0} is not a solution type of this problem")]
    WrongProblem(String),
    #[error("no solution within {budget} iterations")]
    BudgetExceeded { budget: usize, trace: Vec<QVector> },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

fn ensure_in_cube(x: &QVector) -> Result<(), ProblemError> {
    if in_unit_cube(x) {
        Ok(())
    } else {
        Err(ProblemError::OutOfDomain(x.clone()))
    }
}

pub fn in_unit_cube(x: &QVector) -> bool {
    x.iter().all(|c| !c.is_negative() && c <= &Rational::one())
}

/// The grid `{0, 1/k, ..., 1}^dim` in lexicographic order.
pub fn grid(dim: usize, k: u32) -> Vec<QVector> {
    assert!(k >= 1);
    let mut points = vec![QVector::new(vec![])];
    for _ in 0..dim {
        points = points
            .into_iter()
            .flat_map(|p| {
                (0..=k).map(move |i| {
                    let mut v = p.clone().into_inner();
                    v.push(Rational::new(BigInt::from(i), BigInt::from(k)));
                    QVector::new(v)
                })
            })
            .collect();
    }
    points
}

fn apply(f: &ArithCircuit, x: &QVector) -> Result<QVector, ProblemError> {
    ensure_in_cube(x)?;
    let fx = f.eval(x)?;
    if !in_unit_cube(&fx) {
        return Err(ProblemError::DomainEscape { point: x.clone(), image: fx });
    }
    Ok(fx)
}

fn dist(d: &ArithCircuit, x: &QVector, y: &QVector) -> Result<Rational, ProblemError> {
    Ok(d.eval_scalar(&x.concat(y))?)
}

fn diff(a: &QVector, b: &QVector) -> QVector {
    a.sub(b).expect("equal dimensions")
}

fn check_constant(name: &str, v: &Rational, open_unit: bool) -> Result<(), ProblemError> {
    if !v.is_positive() || (open_unit && v >= &Rational::one()) {
        let range = if open_unit { "(0,1)" } else { "(0,inf)" };
        return Err(ProblemError::Invalid(format!("{name} = {v} must lie in {range}")));
    }
    Ok(())
}

fn check_arity(name: &str, c: &ArithCircuit, inputs: usize, outputs: usize) -> Result<(), ProblemError> {
    if c.arity() != inputs || c.output_count() != outputs {
        return Err(ProblemError::Invalid(format!(
            "circuit {name} is {}->{}, expected {inputs}->{outputs}",
            c.arity(),
            c.output_count()
        )));
    }
    Ok(())
}

/// Rejects `f` if it leaves the unit cube on the grid `{0, 1/k, .., 1}^dim`.
pub fn probe_domain(f: &ArithCircuit, dim: usize, k: u32) -> Result<(), ProblemError> {
    grid(dim, k).iter().try_for_each(|x| apply(f, x).map(|_| ()))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CloInstance {
    pub f: ArithCircuit,
    pub p: ArithCircuit,
    pub eps: Rational,
    pub lambda: Rational,
    pub norm: Norm,
    pub dim: usize,
}

impl CloInstance {
    pub fn new(f: ArithCircuit, p: ArithCircuit, eps: Rational, lambda: Rational, norm: Norm) -> Result<Self, ProblemError> {
        let dim = f.arity();
        check_arity("f", &f, dim, dim)?;
        check_arity("p", &p, dim, 1)?;
        check_constant("eps", &eps, false)?;
        check_constant("lambda", &lambda, false)?;
        Ok(CloInstance { f, p, eps, lambda, norm, dim })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContractionInstance {
    pub f: ArithCircuit,
    pub norm: Norm,
    pub eps: Rational,
    pub c: Rational,
    pub delta: Rational,
    pub dim: usize,
}

impl ContractionInstance {
    pub fn new(f: ArithCircuit, norm: Norm, eps: Rational, c: Rational, delta: Rational) -> Result<Self, ProblemError> {
        let dim = f.arity();
        check_arity("f", &f, dim, dim)?;
        check_constant("eps", &eps, true)?;
        check_constant("c", &c, true)?;
        check_constant("delta", &delta, false)?;
        Ok(ContractionInstance { f, norm, eps, c, delta, dim })
    }
}

/// MetametricContraction. `delta_d` is the continuity bound of `d`, `lambda`
/// that of `f`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MmcInstance {
    pub f: ArithCircuit,
    pub d: ArithCircuit,
    pub norm: Norm,
    pub eps: Rational,
    pub c: Rational,
    pub delta_d: Rational,
    pub lambda: Rational,
    pub dim: usize,
}

impl MmcInstance {
    pub fn new(
        f: ArithCircuit,
        d: ArithCircuit,
        norm: Norm,
        eps: Rational,
        c: Rational,
        delta_d: Rational,
        lambda: Rational,
    ) -> Result<Self, ProblemError> {
        let dim = f.arity();
        check_arity("f", &f, dim, dim)?;
        check_arity("d", &d, 2 * dim, 1)?;
        check_constant("eps", &eps, true)?;
        check_constant("c", &c, true)?;
        check_constant("delta_d", &delta_d, false)?;
        check_constant("lambda", &lambda, false)?;
        Ok(MmcInstance { f, d, norm, eps, c, delta_d, lambda, dim })
    }
}

/// GeneralContraction: the same data as MetametricContraction, but
/// meta-metric violations are not solutions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GcInstance(pub MmcInstance);

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum CircuitSolution {
    C1(QVector),
    C2a(QVector, QVector),
    C2b(QVector, QVector),
    CM1(QVector),
    CM2(QVector, QVector),
    M1(QVector),
    M2a(QVector, QVector),
    M2b(QVector, QVector, QVector, QVector),
    M2c(QVector, QVector),
    MmViol(MetametricViolation),
}

/// Points witnessing the failure of one meta-metric property:
/// 1 nonnegativity, 2 zero distance implies equality, 3 symmetry,
/// 4 triangle inequality (points `x, y, z` with `d(x,z) > d(x,y) + d(y,z)`).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MetametricViolation {
    pub property: u8,
    pub points: Vec<QVector>,
}

impl CircuitSolution {
    pub fn tag(&self) -> &'static str {
        match self {
            CircuitSolution::C1(..) => "C1",
            CircuitSolution::C2a(..) => "C2a",
            CircuitSolution::C2b(..) => "C2b",
            CircuitSolution::CM1(..) => "CM1",
            CircuitSolution::CM2(..) => "CM2",
            CircuitSolution::M1(..) => "M1",
            CircuitSolution::M2a(..) => "M2a",
            CircuitSolution::M2b(..) => "M2b",
            CircuitSolution::M2c(..) => "M2c",
            CircuitSolution::MmViol(..) => "MMviol",
        }
    }

    pub fn points(&self) -> Vec<&QVector> {
        match self {
            CircuitSolution::C1(x) | CircuitSolution::CM1(x) | CircuitSolution::M1(x) => vec![x],
            CircuitSolution::C2a(x, y)
            | CircuitSolution::C2b(x, y)
            | CircuitSolution::CM2(x, y)
            | CircuitSolution::M2a(x, y)
            | CircuitSolution::M2c(x, y) => vec![x, y],
            CircuitSolution::M2b(x, y, a, b) => vec![x, y, a, b],
            CircuitSolution::MmViol(v) => v.points.iter().collect(),
        }
    }

    /// Parses `TAG x ; y ; ...` (points as space-separated rationals) or
    /// `MMviol K x ; y [; z]`.
    pub fn parse(text: &str) -> Result<Self, ProblemError> {
        let bad = |message: String| ProblemError::Parse { line: 1, message };
        let t = text.trim();
        let (tag, rest) = t.split_once(char::is_whitespace).unwrap_or((t, ""));
        let (property, rest) = if tag == "MMviol" {
            let rest = rest.trim_start();
            let (k, r) = rest.split_once(char::is_whitespace).unwrap_or((rest, ""));
            let k: u8 = k.parse().ok().filter(|k| (1..=4).contains(k)).ok_or_else(|| bad(format!("bad property {k:?}")))?;
            (k, r)
        } else {
            (0, rest)
        };
        let points = rest
            .split(';')
            .map(|chunk| {
                chunk
                    .split_whitespace()
                    .map(parse_rational)
                    .collect::<Result<QVector, _>>()
                    .map_err(|e| bad(e.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let want = match tag {
            "C1" | "CM1" | "M1" => 1,
            "C2a" | "C2b" | "CM2" | "M2a" | "M2c" => 2,
            "M2b" => 4,
            "MMviol" if property == 4 => 3,
            "MMviol" => 2,
            other => return Err(bad(format!("unknown solution tag {other:?}"))),
        };
        if points.len() != want || points.iter().any(|p| p.is_empty()) {
            return Err(bad(format!("{tag} needs {want} nonempty points, found {}", points.len())));
        }
        let mut it = points.into_iter();
        let mut next = || it.next().expect("count checked");
        Ok(match tag {
            "C1" => CircuitSolution::C1(next()),
            "CM1" => CircuitSolution::CM1(next()),
            "M1" => CircuitSolution::M1(next()),
            "C2a" => CircuitSolution::C2a(next(), next()),
            "C2b" => CircuitSolution::C2b(next(), next()),
            "CM2" => CircuitSolution::CM2(next(), next()),
            "M2a" => CircuitSolution::M2a(next(), next()),
            "M2c" => CircuitSolution::M2c(next(), next()),
            "M2b" => CircuitSolution::M2b(next(), next(), next(), next()),
            _ => CircuitSolution::MmViol(MetametricViolation { property, points: (0..want).map(|_| next()).collect() }),
        })
    }
}

impl fmt::Display for CircuitSolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.tag())?;
        if let CircuitSolution::MmViol(v) = self {
            write!(f, " {}", v.property)?;
        }
        let pts: Vec<String> = self.points().iter().map(|p| p.to_string()).collect();
        write!(f, " {}", pts.join(" ; "))
    }
}

/// Outcome of checking one candidate, with the evaluated inequality.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub holds: bool,
    pub report: String,
}

impl Verdict {
    fn new(holds: bool, report: String) -> Self {
        Verdict { holds, report: format!("{report}: {}", if holds { "holds" } else { "fails" }) }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.report)
    }
}

/// `||u|| > k·||v||` with a report line.
fn norm_exceeds(what: &str, u: &QVector, k: &Rational, v: &QVector, norm: Norm) -> Verdict {
    let holds = cmp_scaled_norm(u, k, Some(v), norm) == Ordering::Greater;
    let power = if norm.is_exact() { String::new() } else { format!("^{norm}") };
    Verdict::new(
        holds,
        format!(
            "{what}: ||{u}||{power} = {} > ({k})·||{v}||{power} = {}",
            super::norm_pow(u, norm),
            match norm {
                Norm::Power(r) => num_traits::pow(k.clone(), r as usize) * super::norm_pow(v, norm),
                _ => k * super::norm_pow(v, norm),
            }
        ),
    )
}

pub fn clo_verify(inst: &CloInstance, cand: &CircuitSolution) -> Result<Verdict, ProblemError> {
    for p in cand.points() {
        ensure_in_cube(p)?;
    }
    match cand {
        CircuitSolution::C1(x) => {
            let fx = apply(&inst.f, x)?;
            let lhs = inst.p.eval_scalar(&fx)?;
            let rhs = inst.p.eval_scalar(x)? - &inst.eps;
            Ok(Verdict::new(lhs >= rhs, format!("C1: p(f(x)) = {lhs} >= p(x) - eps = {rhs}")))
        }
        CircuitSolution::C2a(x, y) => {
            let d = diff(&apply(&inst.f, x)?, &apply(&inst.f, y)?);
            Ok(norm_exceeds("C2a", &d, &inst.lambda, &diff(x, y), inst.norm))
        }
        CircuitSolution::C2b(x, y) => {
            let d = QVector::new(vec![inst.p.eval_scalar(x)? - inst.p.eval_scalar(y)?]);
            Ok(norm_exceeds("C2b", &d, &inst.lambda, &diff(x, y), inst.norm))
        }
        other => Err(ProblemError::WrongProblem(other.tag().into())),
    }
}

pub fn contraction_verify(inst: &ContractionInstance, cand: &CircuitSolution) -> Result<Verdict, ProblemError> {
    for p in cand.points() {
        ensure_in_cube(p)?;
    }
    match cand {
        CircuitSolution::CM1(x) => {
            let d = diff(&apply(&inst.f, x)?, x);
            let holds = cmp_scaled_norm(&d, &inst.delta, None, inst.norm) != Ordering::Greater;
            let lhs = super::norm_pow(&d, inst.norm);
            let rhs = match inst.norm {
                Norm::Power(r) => num_traits::pow(inst.delta.clone(), r as usize),
                _ => inst.delta.clone(),
            };
            Ok(Verdict::new(holds, format!("CM1: ||f(x) - x|| = {lhs} <= delta = {rhs}")))
        }
        CircuitSolution::CM2(x, y) => {
            let d = diff(&apply(&inst.f, x)?, &apply(&inst.f, y)?);
            Ok(norm_exceeds("CM2", &d, &inst.c, &diff(x, y), inst.norm))
        }
        other => Err(ProblemError::WrongProblem(other.tag().into())),
    }
}

pub fn mmc_verify(inst: &MmcInstance, cand: &CircuitSolution) -> Result<Verdict, ProblemError> {
    for p in cand.points() {
        ensure_in_cube(p)?;
    }
    match cand {
        CircuitSolution::M1(x) => {
            let v = dist(&inst.d, &apply(&inst.f, x)?, x)?;
            Ok(Verdict::new(v <= inst.eps, format!("M1: d(f(x),x) = {v} <= eps = {}", inst.eps)))
        }
        CircuitSolution::M2a(x, y) => {
            let lhs = dist(&inst.d, &apply(&inst.f, x)?, &apply(&inst.f, y)?)?;
            let rhs = &inst.c * dist(&inst.d, x, y)?;
            Ok(Verdict::new(lhs > rhs, format!("M2a: d(f(x),f(y)) = {lhs} > c·d(x,y) = {rhs}")))
        }
        CircuitSolution::M2b(x, y, x2, y2) => {
            let gap = QVector::new(vec![dist(&inst.d, x, y)? - dist(&inst.d, x2, y2)?]);
            Ok(norm_exceeds("M2b", &gap, &inst.delta_d, &diff(&x.concat(y), &x2.concat(y2)), inst.norm))
        }
        CircuitSolution::M2c(x, y) => {
            let d = diff(&apply(&inst.f, x)?, &apply(&inst.f, y)?);
            Ok(norm_exceeds("M2c", &d, &inst.lambda, &diff(x, y), inst.norm))
        }
        CircuitSolution::MmViol(v) => verify_violation(&inst.d, v),
        other => Err(ProblemError::WrongProblem(other.tag().into())),
    }
}

pub fn gc_verify(inst: &GcInstance, cand: &CircuitSolution) -> Result<Verdict, ProblemError> {
    if let CircuitSolution::MmViol(_) = cand {
        return Err(ProblemError::WrongProblem("MMviol".into()));
    }
    mmc_verify(&inst.0, cand)
}

fn verify_violation(d: &ArithCircuit, v: &MetametricViolation) -> Result<Verdict, ProblemError> {
    let p = &v.points;
    let want = if v.property == 4 { 3 } else { 2 };
    if p.len() != want || !(1..=4).contains(&v.property) {
        return Err(ProblemError::Invalid(format!("property {} needs {want} points", v.property)));
    }
    let dxy = dist(d, &p[0], &p[1])?;
    Ok(match v.property {
        1 => Verdict::new(dxy.is_negative(), format!("MMviol 1: d(x,y) = {dxy} < 0")),
        2 => Verdict::new(
            dxy.is_zero() && p[0] != p[1],
            format!("MMviol 2: d(x,y) = {dxy} = 0 with x != y ({})", p[0] != p[1]),
        ),
        3 => {
            let dyx = dist(d, &p[1], &p[0])?;
            Verdict::new(dxy != dyx, format!("MMviol 3: d(x,y) = {dxy} != d(y,x) = {dyx}"))
        }
        _ => {
            let dxz = dist(d, &p[0], &p[2])?;
            let sum = &dxy + dist(d, &p[1], &p[2])?;
            Verdict::new(dxz > sum, format!("MMviol 4: d(x,z) = {dxz} > d(x,y) + d(y,z) = {sum}"))
        }
    })
}

/// Distances rescaled to integers by a common denominator when they fit.
fn integer_matrix(table: &[Vec<Rational>]) -> Option<Vec<Vec<i128>>> {
    let mut l = BigInt::one();
    for v in table.iter().flatten() {
        l = l.lcm(v.denom());
    }
    let limit = BigInt::one() << 100;
    table
        .iter()
        .map(|row| {
            row.iter()
                .map(|v| {
                    let scaled = v.numer() * (&l / v.denom());
                    if scaled.abs() > limit {
                        None
                    } else {
                        scaled.to_i128()
                    }
                })
                .collect()
        })
        .collect()
}

/// Checks the four meta-metric properties of `d` on all pairs and triples of
/// `points`; returns the first violation (by property, then point indices).
pub fn check_metametric(d: &ArithCircuit, points: &[QVector]) -> Result<Option<MetametricViolation>, ProblemError> {
    let n = points.len();
    let table: Vec<Vec<Rational>> = points
        .par_iter()
        .map(|x| points.iter().map(|y| dist(d, x, y)).collect::<Result<Vec<_>, _>>())
        .collect::<Result<_, _>>()?;
    let pair = |property: u8, i: usize, j: usize| MetametricViolation { property, points: vec![points[i].clone(), points[j].clone()] };
    let pairs = || (0..n).flat_map(|i| (0..n).map(move |j| (i, j)));
    if let Some((i, j)) = pairs().find(|&(i, j)| table[i][j].is_negative()) {
        return Ok(Some(pair(1, i, j)));
    }
    if let Some((i, j)) = pairs().find(|&(i, j)| table[i][j].is_zero() && points[i] != points[j]) {
        return Ok(Some(pair(2, i, j)));
    }
    if let Some((i, j)) = pairs().find(|&(i, j)| table[i][j] != table[j][i]) {
        return Ok(Some(pair(3, i, j)));
    }
    let triple = match integer_matrix(&table) {
        Some(t) => (0..n).into_par_iter().find_map_first(|x| {
            (0..n).find_map(|y| (0..n).find(|&z| t[x][z] > t[x][y] + t[y][z]).map(|z| (x, y, z)))
        }),
        None => (0..n).into_par_iter().find_map_first(|x| {
            (0..n).find_map(|y| (0..n).find(|&z| table[x][z] > &table[x][y] + &table[y][z]).map(|z| (x, y, z)))
        }),
    };
    Ok(triple.map(|(x, y, z)| MetametricViolation {
        property: 4,
        points: vec![points[x].clone(), points[y].clone(), points[z].clone()],
    }))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IterateResult {
    pub solution: CircuitSolution,
    pub iterations: usize,
    /// The iterates `x_0, ..., x_k` visited.
    pub trace: Vec<QVector>,
}

/// Shared driver: `pair_check(prev, x)` runs from the second iterate on,
/// then `stop(x, f(x))`; otherwise `x <- f(x)`.
fn iterate(
    f: &ArithCircuit,
    start: &QVector,
    budget: usize,
    mut pair_check: impl FnMut(&QVector, &QVector) -> Result<Option<CircuitSolution>, ProblemError>,
    mut stop: impl FnMut(&QVector, &QVector) -> Result<Option<CircuitSolution>, ProblemError>,
) -> Result<IterateResult, ProblemError> {
    ensure_in_cube(start)?;
    let mut trace = vec![start.clone()];
    for k in 0..=budget {
        let x = trace[k].clone();
        let fx = apply(f, &x)?;
        let found = match k {
            0 => None,
            _ => pair_check(&trace[k - 1], &x)?,
        };
        if let Some(solution) = found.map(Ok).or_else(|| stop(&x, &fx).transpose()).transpose()? {
            return Ok(IterateResult { solution, iterations: k, trace });
        }
        if k < budget {
            trace.push(fx);
        }
    }
    Err(ProblemError::BudgetExceeded { budget, trace })
}

/// Iterates `f` from `start` until `p` fails to drop by `eps` (C1), checking
/// each consecutive pair of iterates for C2a then C2b.
pub fn clo_solve_iterate(inst: &CloInstance, start: &QVector, budget: usize) -> Result<IterateResult, ProblemError> {
    iterate(
        &inst.f,
        start,
        budget,
        |a, b| {
            for cand in [CircuitSolution::C2a(a.clone(), b.clone()), CircuitSolution::C2b(a.clone(), b.clone())] {
                if clo_verify(inst, &cand)?.holds {
                    return Ok(Some(cand));
                }
            }
            Ok(None)
        },
        |x, _| {
            let cand = CircuitSolution::C1(x.clone());
            Ok(clo_verify(inst, &cand)?.holds.then_some(cand))
        },
    )
}

/// Banach iteration for Contraction: stops at CM1, checking consecutive
/// iterates for CM2.
pub fn fixpoint_iterate(inst: &ContractionInstance, start: &QVector, budget: usize) -> Result<IterateResult, ProblemError> {
    iterate(
        &inst.f,
        start,
        budget,
        |a, b| {
            let cand = CircuitSolution::CM2(a.clone(), b.clone());
            Ok(contraction_verify(inst, &cand)?.holds.then_some(cand))
        },
        |x, _| {
            let cand = CircuitSolution::CM1(x.clone());
            Ok(contraction_verify(inst, &cand)?.holds.then_some(cand))
        },
    )
}

/// Banach iteration for MetametricContraction: stops at M1, checking
/// consecutive iterates for M2a then M2c.
pub fn mmc_fixpoint_iterate(inst: &MmcInstance, start: &QVector, budget: usize) -> Result<IterateResult, ProblemError> {
    iterate(
        &inst.f,
        start,
        budget,
        |a, b| {
            for cand in [CircuitSolution::M2a(a.clone(), b.clone()), CircuitSolution::M2c(a.clone(), b.clone())] {
                if mmc_verify(inst, &cand)?.holds {
                    return Ok(Some(cand));
                }
            }
            Ok(None)
        },
        |x, _| {
            let cand = CircuitSolution::M1(x.clone());
            Ok(mmc_verify(inst, &cand)?.holds.then_some(cand))
        },
    )
}

/// First pair of distinct sample points violating the contraction factor.
pub fn contraction_sample_check(inst: &ContractionInstance, points: &[QVector]) -> Result<Option<CircuitSolution>, ProblemError> {
    for (i, x) in points.iter().enumerate() {
        for y in &points[i + 1..] {
            if x == y {
                continue;
            }
            let cand = CircuitSolution::CM2(x.clone(), y.clone());
            if contraction_verify(inst, &cand)?.holds {
                return Ok(Some(cand));
            }
        }
    }
    Ok(None)
}

/// A problem instance as stored in a file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProblemInstance {
    Clo(CloInstance),
    Contraction(ContractionInstance),
    Mmc(MmcInstance),
    Gc(GcInstance),
}

/// Grid resolution used when loading instances to probe that `f` stays in
/// the unit cube.
pub const PROBE_RESOLUTION: u32 = 2;

impl ProblemInstance {
    pub fn kind(&self) -> &'static str {
        match self {
            ProblemInstance::Clo(_) => "CLO",
            ProblemInstance::Contraction(_) => "CONTRACTION",
            ProblemInstance::Mmc(_) => "MMC",
            ProblemInstance::Gc(_) => "GC",
        }
    }

    pub fn f(&self) -> &ArithCircuit {
        match self {
            ProblemInstance::Clo(i) => &i.f,
            ProblemInstance::Contraction(i) => &i.f,
            ProblemInstance::Mmc(i) | ProblemInstance::Gc(GcInstance(i)) => &i.f,
        }
    }

    pub fn verify(&self, cand: &CircuitSolution) -> Result<Verdict, ProblemError> {
        match self {
            ProblemInstance::Clo(i) => clo_verify(i, cand),
            ProblemInstance::Contraction(i) => contraction_verify(i, cand),
            ProblemInstance::Mmc(i) => mmc_verify(i, cand),
            ProblemInstance::Gc(i) => gc_verify(i, cand),
        }
    }

    /// Parses a problem file. Circuits are given inline (`f` on its own line
    /// followed by an `ARITH` block) or by reference (`f @path`, relative to
    /// `base`).
    pub fn parse(text: &str, base: Option<&Path>) -> Result<Self, ProblemError> {
        let perr = |line: usize, message: String| ProblemError::Parse { line, message };
        let mut lines = numbered_lines(text).peekable();
        let (hline, header) = lines.next().ok_or_else(|| perr(1, "empty file".into()))?;
        let kind = header
            .strip_prefix("PROBLEM")
            .map(str::trim)
            .ok_or_else(|| perr(hline, format!("expected `PROBLEM <kind>`, found {header:?}")))?
            .to_string();
        let mut consts: Vec<(String, Rational, usize)> = Vec::new();
        let mut circuits: Vec<(String, ArithCircuit, usize)> = Vec::new();
        let mut norm = Norm::L1;
        let mut dim: Option<(usize, usize)> = None;
        while let Some((line, text)) = lines.next() {
            let (key, value) = text.split_once(char::is_whitespace).map_or((text, ""), |(k, v)| (k, v.trim()));
            match key {
                "f" | "p" | "d" => {
                    let c = if let Some(path) = value.strip_prefix('@') {
                        let full = base.map_or_else(|| Path::new(path).to_path_buf(), |b| b.join(path));
                        let src = std::fs::read_to_string(&full)
                            .map_err(|e| perr(line, format!("cannot read {}: {e}", full.display())))?;
                        ArithCircuit::parse(&src).map_err(|e| perr(line, format!("{}: {e}", full.display())))?
                    } else if value.is_empty() {
                        parse_block(&mut lines).map_err(|e| match e {
                            CircuitError::Parse { line, message } => perr(line, message),
                            other => perr(line, other.to_string()),
                        })?
                    } else {
                        return Err(perr(line, format!("expected `{key}` or `{key} @path`")));
                    };
                    circuits.push((key.to_string(), c, line));
                }
                "norm" => norm = value.parse().map_err(|e| perr(line, e))?,
                "dim" => dim = Some((value.parse().map_err(|_| perr(line, format!("bad dimension {value:?}")))?, line)),
                "eps" | "lambda" | "c" | "delta" | "delta_d" => {
                    let v = parse_rational(value).map_err(|e| perr(line, e.to_string()))?;
                    consts.push((key.to_string(), v, line));
                }
                other => return Err(perr(line, format!("unknown key {other:?}"))),
            }
        }
        let constant = |name: &str| {
            consts
                .iter()
                .find(|(k, _, _)| k == name)
                .map(|(_, v, _)| v.clone())
                .ok_or_else(|| perr(hline, format!("missing constant {name}")))
        };
        let circuit = |name: &str| {
            circuits
                .iter()
                .find(|(k, _, _)| k == name)
                .map(|(_, c, _)| c.clone())
                .ok_or_else(|| perr(hline, format!("missing circuit {name}")))
        };
        let inst = match kind.as_str() {
            "CLO" => ProblemInstance::Clo(CloInstance::new(circuit("f")?, circuit("p")?, constant("eps")?, constant("lambda")?, norm)?),
            "CONTRACTION" => ProblemInstance::Contraction(ContractionInstance::new(
                circuit("f")?,
                norm,
                constant("eps")?,
                constant("c")?,
                constant("delta")?,
            )?),
            "MMC" | "GC" => {
                let m = MmcInstance::new(
                    circuit("f")?,
                    circuit("d")?,
                    norm,
                    constant("eps")?,
                    constant("c")?,
                    constant("delta_d")?,
                    constant("lambda")?,
                )?;
                if kind == "GC" {
                    ProblemInstance::Gc(GcInstance(m))
                } else {
                    ProblemInstance::Mmc(m)
                }
            }
            other => return Err(perr(hline, format!("unknown problem kind {other:?}"))),
        };
        let declared = dim.map_or(3, |(d, _)| d);
        if inst.f().arity() != declared {
            let line = dim.map_or(hline, |(_, l)| l);
            return Err(perr(line, format!("f has arity {}, but dim is {declared}", inst.f().arity())));
        }
        probe_domain(inst.f(), declared, PROBE_RESOLUTION)?;
        Ok(inst)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("PROBLEM {}\n", self.kind());
        let mut push = |k: &str, v: &dyn fmt::Display| out.push_str(&format!("{k} {v}\n"));
        let (norm, dim) = match self {
            ProblemInstance::Clo(i) => (i.norm, i.dim),
            ProblemInstance::Contraction(i) => (i.norm, i.dim),
            ProblemInstance::Mmc(i) | ProblemInstance::Gc(GcInstance(i)) => (i.norm, i.dim),
        };
        push("dim", &dim);
        push("norm", &norm);
        let circuits: Vec<(&str, &ArithCircuit)> = match self {
            ProblemInstance::Clo(i) => {
                push("eps", &i.eps);
                push("lambda", &i.lambda);
                vec![("f", &i.f), ("p", &i.p)]
            }
            ProblemInstance::Contraction(i) => {
                push("eps", &i.eps);
                push("c", &i.c);
                push("delta", &i.delta);
                vec![("f", &i.f)]
            }
            ProblemInstance::Mmc(i) | ProblemInstance::Gc(GcInstance(i)) => {
                push("eps", &i.eps);
                push("c", &i.c);
                push("delta_d", &i.delta_d);
                push("lambda", &i.lambda);
                vec![("f", &i.f), ("d", &i.d)]
            }
        };
        for (name, c) in circuits {
            out.push_str(&format!("{name}\n{c}"));
        }
        out
    }
}
