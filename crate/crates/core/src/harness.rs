//! End-to-end runs behind the command-line tool: file loading, the
//! cross-checked P-LCP pipeline, reductions to files, verification reports
//! and the mapping of outcomes to exit codes.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::circuit::problems::{CircuitSolution, ProblemError, ProblemInstance};
use crate::lcp::{default_budget, lemke_solve, LcpError, LcpInstance, LcpOutcome};
use crate::line::{
    enumerate_solutions, follow_line, solution_holds, BitConfig, LineError, LineInstance, LineKind, LineSolution,
    OracleError, TruthTable, MAX_TABLE_WIDTH,
};
use crate::reduce::{
    clo_to_mmc, contraction_to_clo, eoml_sol_to_eopl, eoml_to_eopl, eopl_sol_to_eoml, eopl_sol_to_plcp, eopl_to_eoml,
    gc_to_clo, mmc_to_gc, plcp_to_eopl, Reduced, ReductionCertificate, ReductionError,
};

/// Process outcome; `code()` is the exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    VerificationFailed,
    Degenerate,
    Invariant,
    Usage,
}

impl Status {
    pub fn code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::VerificationFailed => 1,
            Status::Degenerate => 2,
            Status::Invariant => 3,
            Status::Usage => 4,
        }
    }
}

/// An error together with the exit status it maps to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Failure {
    pub status: Status,
    pub message: String,
}

impl Failure {
    pub fn new(status: Status, message: impl Into<String>) -> Self {
        Failure { status, message: message.into() }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Failure::new(Status::Usage, message)
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let label = match self.status {
            Status::Ok => "ok",
            Status::VerificationFailed => "verification failed",
            Status::Degenerate => "degenerate",
            Status::Invariant => "internal invariant violated",
            Status::Usage => "usage error",
        };
        write!(f, "{label}: {}", self.message)
    }
}

impl std::error::Error for Failure {}

fn lcp_status(e: &LcpError) -> Status {
    match e {
        LcpError::Degenerate { .. } => Status::Degenerate,
        LcpError::Parse { .. } | LcpError::Invalid(_) | LcpError::Arith(_) => Status::Usage,
        LcpError::BudgetExceeded { .. } => Status::VerificationFailed,
        LcpError::NotTight(_) | LcpError::Singular(_) | LcpError::Internal(_) => Status::Invariant,
    }
}

fn oracle_status(e: &OracleError) -> Status {
    match e {
        OracleError::Degenerate(_) => Status::Degenerate,
        OracleError::WidthMismatch { .. } | OracleError::PotentialOutOfRange { .. } => Status::Usage,
        OracleError::Failed(_) => Status::Invariant,
    }
}

fn line_status(e: &LineError) -> Status {
    match e {
        LineError::Oracle(o) => oracle_status(o),
        LineError::BudgetExceeded { .. } => Status::VerificationFailed,
        LineError::TooWide { .. } | LineError::Invalid(_) | LineError::Parse { .. } => Status::Usage,
    }
}

fn problem_status(e: &ProblemError) -> Status {
    match e {
        ProblemError::BudgetExceeded { .. } => Status::VerificationFailed,
        _ => Status::Usage,
    }
}

fn reduction_status(e: &ReductionError) -> Status {
    match e {
        ReductionError::Lcp(e) => lcp_status(e),
        ReductionError::Line(e) => line_status(e),
        ReductionError::Problem(e) => problem_status(e),
        ReductionError::Contract(_) => Status::VerificationFailed,
        ReductionError::Invariant(_) => Status::Invariant,
        ReductionError::InvalidSource(_) | ReductionError::Unsupported(_) => Status::Usage,
    }
}

macro_rules! failure_from {
    ($($ty:ty => $f:ident),*) => {$(
        impl From<$ty> for Failure {
            fn from(e: $ty) -> Self {
                Failure::new($f(&e), e.to_string())
            }
        }
    )*};
}

failure_from!(
    LcpError => lcp_status,
    LineError => line_status,
    OracleError => oracle_status,
    ProblemError => problem_status,
    ReductionError => reduction_status
);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReduceKind {
    PlcpEopl,
    EomlEopl,
    EoplEoml,
    GcClo,
    CloMmc,
    MmcGc,
    ContractionClo,
}

impl ReduceKind {
    pub const ALL: [ReduceKind; 7] = [
        ReduceKind::PlcpEopl,
        ReduceKind::EomlEopl,
        ReduceKind::EoplEoml,
        ReduceKind::GcClo,
        ReduceKind::CloMmc,
        ReduceKind::MmcGc,
        ReduceKind::ContractionClo,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ReduceKind::PlcpEopl => "plcp-eopl",
            ReduceKind::EomlEopl => "eoml-eopl",
            ReduceKind::EoplEoml => "eopl-eoml",
            ReduceKind::GcClo => "gc-clo",
            ReduceKind::CloMmc => "clo-mmc",
            ReduceKind::MmcGc => "mmc-gc",
            ReduceKind::ContractionClo => "contraction-clo",
        }
    }
}

impl FromStr for ReduceKind {
    type Err = Failure;

    fn from_str(s: &str) -> Result<Self, Failure> {
        ReduceKind::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| {
            let names: Vec<_> = ReduceKind::ALL.iter().map(|k| k.name()).collect();
            Failure::usage(format!("unknown reduction {s:?}; expected one of {}", names.join(", ")))
        })
    }
}

impl fmt::Display for ReduceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Header of a file that stands for a reduced line instance too wide to
/// tabulate; the body is the source instance, rebuilt on load.
const DESCRIPTOR_HEADER: &str = "REDUCED";

/// Widest table (configuration plus potential bits) that `reduce` writes
/// out in full.
pub const TABLE_OUTPUT_BITS: u32 = 16;

fn first_token(text: &str) -> Option<&str> {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .find(|l| !l.is_empty())
        .and_then(|l| l.split_whitespace().next())
}

/// Loads a table file or a reduction descriptor.
pub fn load_line(text: &str) -> Result<LineInstance, Failure> {
    if first_token(text) != Some(DESCRIPTOR_HEADER) {
        return Ok(TruthTable::parse(text)?);
    }
    let (head, body) = text.trim_start().split_once('\n').unwrap_or((text, ""));
    let kind: ReduceKind = head.split_whitespace().nth(1).unwrap_or("").parse()?;
    let reduced = match kind {
        ReduceKind::PlcpEopl => plcp_to_eopl(&LcpInstance::parse(body, false)?)?.instance().map(|r| r.target),
        ReduceKind::EomlEopl => Some(eoml_to_eopl(&load_line(body)?)?),
        ReduceKind::EoplEoml => eopl_to_eoml(&load_line(body)?)?.instance(),
        other => return Err(Failure::usage(format!("{other} does not produce a line instance"))),
    };
    reduced.ok_or_else(|| Failure::usage("descriptor source is trivially solved and has no target instance"))
}

/// Loads an LCP file, or a line instance when the file starts with a table
/// or descriptor header.
pub enum Loaded {
    Lcp(LcpInstance),
    Line(LineInstance),
}

pub fn load_lcp_or_line(text: &str, paper_sign: bool) -> Result<Loaded, Failure> {
    match first_token(text) {
        Some("EOPL" | "EOML" | DESCRIPTOR_HEADER) => Ok(Loaded::Line(load_line(text)?)),
        _ => Ok(Loaded::Lcp(LcpInstance::parse(text, paper_sign)?)),
    }
}

fn table_bits(inst: &LineInstance) -> u32 {
    match inst.kind() {
        LineKind::Eopl { m } => inst.n() + m,
        LineKind::Eoml => 2 * inst.n() + 1,
    }
}

/// Writes `inst` as a table when small enough, else as a descriptor of
/// `source` under `kind`.
fn emit_line(inst: &LineInstance, kind: ReduceKind, source: &str, force_table: bool) -> Result<String, Failure> {
    if table_bits(inst) <= TABLE_OUTPUT_BITS || (force_table && inst.n() <= MAX_TABLE_WIDTH) {
        return Ok(TruthTable::format(inst)?);
    }
    Ok(format!("{DESCRIPTOR_HEADER} {kind}\n# {}\n{}", inst.describe(), source.trim_end()) + "\n")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReduceOutput {
    /// Text of the target instance file.
    Instance(String),
    /// The source was trivial; its solution.
    Immediate(String),
}

/// Reduces the instance in `text`. `base` resolves `@path` circuit
/// references; `force_table` writes line targets as tables up to the
/// enumeration limit.
pub fn run_reduce(
    kind: ReduceKind,
    text: &str,
    base: Option<&Path>,
    paper_sign: bool,
    force_table: bool,
) -> Result<ReduceOutput, Failure> {
    let circuit = |expected: &str| -> Result<ProblemInstance, Failure> {
        let inst = ProblemInstance::parse(text, base)?;
        if inst.kind() != expected {
            return Err(Failure::usage(format!("{kind} expects a {expected} instance, found {}", inst.kind())));
        }
        Ok(inst)
    };
    let out = match kind {
        ReduceKind::PlcpEopl => {
            let src = LcpInstance::parse(text, paper_sign)?;
            match plcp_to_eopl(&src)? {
                Reduced::Immediate(sol) => return Ok(ReduceOutput::Immediate(sol.to_string())),
                Reduced::Instance(red) => emit_line(&red.target, kind, &src.to_text(), force_table)?,
            }
        }
        ReduceKind::EomlEopl => {
            let src = load_line(text)?;
            emit_line(&eoml_to_eopl(&src)?, kind, &TruthTable::format(&src)?, force_table)?
        }
        ReduceKind::EoplEoml => {
            let src = load_line(text)?;
            match eopl_to_eoml(&src)? {
                Reduced::Immediate(sol) => return Ok(ReduceOutput::Immediate(sol.to_string())),
                Reduced::Instance(t) => emit_line(&t, kind, &TruthTable::format(&src)?, force_table)?,
            }
        }
        ReduceKind::GcClo => match circuit("GC")? {
            ProblemInstance::Gc(g) => ProblemInstance::Clo(gc_to_clo(&g)?).to_text(),
            _ => unreachable!("kind checked"),
        },
        ReduceKind::CloMmc => match circuit("CLO")? {
            ProblemInstance::Clo(c) => ProblemInstance::Mmc(clo_to_mmc(&c)?).to_text(),
            _ => unreachable!("kind checked"),
        },
        ReduceKind::MmcGc => match circuit("MMC")? {
            ProblemInstance::Mmc(m) => ProblemInstance::Gc(mmc_to_gc(&m)).to_text(),
            _ => unreachable!("kind checked"),
        },
        ReduceKind::ContractionClo => match circuit("CONTRACTION")? {
            ProblemInstance::Contraction(c) => ProblemInstance::Clo(contraction_to_clo(&c)?).to_text(),
            _ => unreachable!("kind checked"),
        },
    };
    Ok(ReduceOutput::Instance(out))
}

/// Result of one P-LCP pipeline run.
#[derive(Debug, Clone)]
pub struct PipelineReport {
    pub status: Status,
    pub direct: Option<LcpOutcome>,
    pub reduced: Option<LcpOutcome>,
    /// Line-following steps on the reduced instance.
    pub steps: u64,
    pub certificate: Option<ReductionCertificate>,
    pub detail: String,
}

impl fmt::Display for PipelineReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |o: &Option<LcpOutcome>| o.as_ref().map_or("-".to_string(), |o| o.to_string());
        writeln!(f, "direct  {}", show(&self.direct))?;
        writeln!(f, "reduced {} ({} steps)", show(&self.reduced), self.steps)?;
        writeln!(f, "result  {}", self.detail)?;
        if let Some(c) = &self.certificate {
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

fn agree(inst: &LcpInstance, a: &LcpOutcome, b: &LcpOutcome) -> Result<Option<&'static str>, LcpError> {
    Ok(match (a, b) {
        (LcpOutcome::Q1(x), LcpOutcome::Q1(y)) if x == y => Some("identical solutions"),
        (LcpOutcome::Q2 { .. }, LcpOutcome::Q2 { .. }) if a.verify(inst)? && b.verify(inst)? => {
            Some(if a == b { "identical witnesses" } else { "both witnesses verify" })
        }
        _ => None,
    })
}

/// Solves `inst` twice, directly with Lemke's method and by reducing to a
/// line instance, following it from `0^n`, and mapping the end back.
pub fn run_pipeline_plcp(inst: &LcpInstance) -> PipelineReport {
    let mut report =
        PipelineReport { status: Status::Ok, direct: None, reduced: None, steps: 0, certificate: None, detail: String::new() };
    let fail = |mut r: PipelineReport, e: Failure| {
        r.status = e.status;
        r.detail = e.to_string();
        r
    };
    match lemke_solve(inst) {
        Ok(run) => report.direct = Some(run.outcome),
        Err(e) => return fail(report, e.into()),
    }
    let red = match plcp_to_eopl(inst) {
        Ok(Reduced::Immediate(sol)) => {
            report.reduced = Some(sol);
            None
        }
        Ok(Reduced::Instance(red)) => Some(red),
        Err(e) => return fail(report, e.into()),
    };
    if let Some(red) = red {
        let followed = match follow_line(&red.target, default_budget(inst.dim())) {
            Ok(f) => f,
            Err(e) => return fail(report, e.into()),
        };
        report.steps = followed.steps;
        let back = match eopl_sol_to_plcp(&red, followed.solution.config()) {
            Ok(b) => b,
            Err(e) => return fail(report, e.into()),
        };
        report.certificate = Some(ReductionCertificate::issue(
            "P-LCP",
            "EOPL",
            red.target.describe(),
            followed.solution,
            &back,
            "solution re-verified on the source",
        ));
        report.reduced = Some(back);
    }
    let (direct, reduced) = (report.direct.clone().expect("set"), report.reduced.clone().expect("set"));
    match agree(inst, &direct, &reduced) {
        Ok(Some(how)) => report.detail = format!("agree: {how}"),
        Ok(None) => {
            report.status = Status::Invariant;
            report.detail = format!("disagree: direct {direct}, reduced {reduced}");
        }
        Err(e) => return fail(report, e.into()),
    }
    report
}

/// Reduces a line instance (EOML to EOPL or back), classifies every
/// configuration of the target and maps each solution back, re-verifying it.
pub fn line_round_trip(src: &LineInstance, limit_n: u32) -> Result<Vec<ReductionCertificate>, ReductionError> {
    let (target, source_name, target_name) = match src.kind() {
        LineKind::Eoml => (eoml_to_eopl(src)?, "EOML", "EOPL"),
        LineKind::Eopl { .. } => match eopl_to_eoml(src)? {
            Reduced::Instance(t) => (t, "EOPL", "EOML"),
            Reduced::Immediate(sol) => {
                return Ok(vec![ReductionCertificate::issue("EOPL", "EOML", "immediate", "-", sol, "trivial source")]);
            }
        },
    };
    let mut out = Vec::new();
    for sol in enumerate_solutions(&target, limit_n)? {
        let back = match src.kind() {
            LineKind::Eoml => eopl_sol_to_eoml(src, &target, &sol)?,
            LineKind::Eopl { .. } => eoml_sol_to_eopl(src, &target, &sol)?,
        };
        if !solution_holds(src, &back)? {
            return Err(ReductionError::Invariant(format!("{sol} maps back to {back}, which does not hold")));
        }
        out.push(ReductionCertificate::issue(source_name, target_name, target.describe(), sol, back, "solution holds"));
    }
    Ok(out)
}

/// The values behind a line solution's defining condition.
pub fn explain_line(inst: &LineInstance, sol: &LineSolution) -> Result<String, OracleError> {
    let x = sol.config();
    if x.width() != inst.n() {
        return Ok(format!("{sol}: width {} does not match the instance width {}: fails", x.width(), inst.n()));
    }
    if sol.is_eopl() != inst.is_eopl() {
        return Ok(format!("{sol}: not a solution type of {}: fails", inst.kind()));
    }
    let verdict = if solution_holds(inst, sol)? { "holds" } else { "fails" };
    let (sx, px, vx) = (inst.s(x)?, inst.p(x)?, inst.v(x)?);
    let detail = match sol {
        LineSolution::R1(_) | LineSolution::T1(_) => format!(
            "S(x) = {sx}, P(S(x)) = {}; P(x) = {px}, S(P(x)) = {}; end of line requires P(S(x)) != x or (x != 0 and S(P(x)) != x)",
            inst.p(sx)?,
            inst.s(px)?
        ),
        LineSolution::R2(_) => {
            format!("S(x) = {sx}, P(S(x)) = {}, V(x) = {vx}, V(S(x)) = {}; requires S(x) != x, P(S(x)) = x and V(S(x)) <= V(x)", inst.p(sx)?, inst.v(sx)?)
        }
        LineSolution::T2(_) => format!("V(x) = {vx}; requires x != 0 and V(x) = 1"),
        LineSolution::T3(_) => format!(
            "V(P(x)) = {}, V(x) = {vx}, V(S(x)) = {}; requires V(x) > 0 with V(S(x)) - V(x) != 1, or V(x) > 1 with V(x) - V(P(x)) != 1",
            inst.v(px)?,
            inst.v(sx)?
        ),
    };
    Ok(format!("{sol}: {detail}: {verdict}"))
}

/// Checks a solution file against an instance file. `problem` is one of
/// `lcp`, `eopl`, `eoml`, `clo`, `contraction`, `mmc`, `gc`.
pub fn run_verify(
    problem: &str,
    inst_text: &str,
    sol_text: &str,
    base: Option<&Path>,
    paper_sign: bool,
) -> Result<(Status, String), Failure> {
    let status = |holds: bool| if holds { Status::Ok } else { Status::VerificationFailed };
    match problem.to_ascii_lowercase().as_str() {
        "lcp" | "plcp" => {
            let inst = LcpInstance::parse(inst_text, paper_sign)?;
            let sol = LcpOutcome::parse(sol_text)?;
            let holds = sol.verify(&inst)?;
            let detail = match &sol {
                LcpOutcome::Q1(y) => crate::lcp::verify_lcp_solution(&inst, y)?.to_string(),
                LcpOutcome::Q2 { set, .. } if !set.is_empty() && set.iter().all(|&i| i < inst.dim()) => {
                    format!("recomputed minor = {}", inst.m().principal_minor(set).map_err(LcpError::from)?)
                }
                LcpOutcome::Q2 { .. } => "index set is empty or out of range".to_string(),
            };
            Ok((status(holds), format!("{sol}: {detail}: {}", if holds { "holds" } else { "fails" })))
        }
        "eopl" | "eoml" => {
            let inst = load_line(inst_text)?;
            if inst.kind().to_string() != problem.to_ascii_uppercase() {
                return Err(Failure::usage(format!("instance is {}, not {}", inst.kind(), problem.to_ascii_uppercase())));
            }
            let sol = LineSolution::parse(sol_text).map_err(Failure::usage)?;
            let report = explain_line(&inst, &sol)?;
            Ok((status(solution_holds(&inst, &sol)?), report))
        }
        "clo" | "contraction" | "mmc" | "gc" => {
            let inst = ProblemInstance::parse(inst_text, base)?;
            if inst.kind() != problem.to_ascii_uppercase() {
                return Err(Failure::usage(format!("instance is {}, not {}", inst.kind(), problem.to_ascii_uppercase())));
            }
            let sol = CircuitSolution::parse(sol_text)?;
            let verdict = inst.verify(&sol)?;
            Ok((status(verdict.holds), verdict.report))
        }
        other => Err(Failure::usage(format!(
            "unknown problem {other:?}; expected lcp, eopl, eoml, clo, contraction, mmc or gc"
        ))),
    }
}

/// Parses a configuration argument such as `0110`.
pub fn parse_config(text: &str) -> Result<BitConfig, Failure> {
    BitConfig::parse(text).map_err(Failure::usage)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::QVector;

    #[test]
    fn pipeline_examples() {
        let one = run_pipeline_plcp(&LcpInstance::from_i64(&[&[1]], &[-1]));
        assert_eq!(one.status, Status::Ok, "{one}");
        assert_eq!(one.reduced, Some(LcpOutcome::Q1(QVector::from_i64s(&[1]))));
        assert!(one.certificate.is_some());

        let trivial = run_pipeline_plcp(&LcpInstance::from_i64(&[&[1]], &[2]));
        assert_eq!((trivial.status, trivial.reduced), (Status::Ok, Some(LcpOutcome::Q1(QVector::from_i64s(&[0])))));

        let tied = run_pipeline_plcp(&LcpInstance::from_i64(&[&[1, 0], &[0, 1]], &[-1, -1]));
        assert_eq!(tied.status, Status::Degenerate);
        assert_eq!(tied.status.code(), 2);
    }

    #[test]
    fn reduce_kinds_parse() {
        for k in ReduceKind::ALL {
            assert_eq!(k.name().parse::<ReduceKind>().unwrap(), k);
        }
        assert_eq!("x".parse::<ReduceKind>().unwrap_err().status, Status::Usage);
    }

    #[test]
    fn reduce_eoml_writes_a_table() {
        let src = "EOML 3\n000 001 000 1\n001 010 000 2\n010 010 001 3\n";
        let ReduceOutput::Instance(out) = run_reduce(ReduceKind::EomlEopl, src, None, false, false).unwrap() else {
            panic!("expected an instance");
        };
        assert!(out.starts_with("EOPL 4 4\n"), "{out}");
        let back = load_line(&out).unwrap();
        assert!(crate::line::validate_instance(&back).unwrap().is_empty());
    }

    #[test]
    fn wide_targets_become_descriptors() {
        let src = "2\n2 1\n1 2\n-1 -3\n";
        let ReduceOutput::Instance(out) = run_reduce(ReduceKind::PlcpEopl, src, None, false, false).unwrap() else {
            panic!("expected an instance");
        };
        assert!(out.starts_with("REDUCED plcp-eopl\n"), "{out}");
        let line = load_line(&out).unwrap();
        let again = plcp_to_eopl(&LcpInstance::parse(src, false).unwrap()).unwrap().instance().unwrap().target;
        for x in BitConfig::all(4) {
            assert_eq!(line.s(x).unwrap(), again.s(x).unwrap());
        }
    }

    #[test]
    fn verify_reports() {
        let table = "EOPL 2 2\n00 01 00 0\n01 10 00 1\n10 10 01 2\n";
        let (st, rep) = run_verify("eopl", table, "R1 10", None, false).unwrap();
        assert_eq!(st, Status::Ok, "{rep}");
        let (st, rep) = run_verify("eopl", table, "R2 01", None, false).unwrap();
        assert_eq!(st, Status::VerificationFailed);
        assert!(rep.ends_with(": fails"), "{rep}");
        assert_eq!(run_verify("eopl", table, "X1 01", None, false).unwrap_err().status, Status::Usage);
        let (st, _) = run_verify("lcp", "1\n1\n-1\n", "Q1 1", None, false).unwrap();
        assert_eq!(st, Status::Ok);
    }
}
