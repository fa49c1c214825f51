//! EndOfPotentialLine and EndOfMeteredLine over oracle-defined graphs.
//!
//! An instance is a pair of successor/predecessor maps on `n`-bit strings plus
//! a potential. Oracles are either explicit truth tables or procedures built by
//! the reductions; both sit behind [`LineOracle`].

mod bits;
mod table;

use std::fmt;
use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rayon::prelude::*;
use thiserror::Error;

pub use bits::{BitConfig, MAX_WIDTH};
pub use table::{TruthTable, MAX_TABLE_WIDTH};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("configuration {found} has width {}, expected {expected}", found.width())]
    WidthMismatch { expected: u32, found: BitConfig },
    #[error("potential {value} at {x} exceeds the declared bound {bound}")]
    PotentialOutOfRange { x: BitConfig, value: BigUint, bound: BigUint },
    #[error("degenerate source instance: {0}")]
    Degenerate(String),
    #[error("oracle failure: {0}")]
    Failed(String),
}

impl OracleError {
    pub fn is_degenerate(&self) -> bool {
        matches!(self, OracleError::Degenerate(_))
    }
}

/// Raw successor, predecessor and potential maps on `width()`-bit strings.
/// Callers go through [`LineInstance`], which checks widths and bounds.
pub trait LineOracle: Send + Sync {
    fn width(&self) -> u32;
    fn successor(&self, x: BitConfig) -> Result<BitConfig, OracleError>;
    fn predecessor(&self, x: BitConfig) -> Result<BitConfig, OracleError>;
    fn potential(&self, x: BitConfig) -> Result<BigUint, OracleError>;
    /// One-line description used when the instance is too wide to tabulate.
    fn describe(&self) -> String;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LineKind {
    /// EndOfPotentialLine with potentials in `[0, 2^m - 1]`.
    Eopl { m: u32 },
    /// EndOfMeteredLine with potentials in `[0, 2^n]`.
    Eoml,
}

impl fmt::Display for LineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LineKind::Eopl { .. } => write!(f, "EOPL"),
            LineKind::Eoml => write!(f, "EOML"),
        }
    }
}

#[derive(Clone)]
pub struct LineInstance {
    kind: LineKind,
    oracle: Arc<dyn LineOracle>,
}

impl fmt::Debug for LineInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LineInstance")
            .field("kind", &self.kind)
            .field("n", &self.n())
            .field("oracle", &self.oracle.describe())
            .finish()
    }
}

impl LineInstance {
    pub fn new(kind: LineKind, oracle: Arc<dyn LineOracle>) -> Self {
        LineInstance { kind, oracle }
    }

    pub fn eopl(m: u32, oracle: impl LineOracle + 'static) -> Self {
        LineInstance::new(LineKind::Eopl { m }, Arc::new(oracle))
    }

    pub fn eoml(oracle: impl LineOracle + 'static) -> Self {
        LineInstance::new(LineKind::Eoml, Arc::new(oracle))
    }

    pub fn kind(&self) -> LineKind {
        self.kind
    }

    pub fn is_eopl(&self) -> bool {
        matches!(self.kind, LineKind::Eopl { .. })
    }

    pub fn n(&self) -> u32 {
        self.oracle.width()
    }

    /// Potential bit width for EOPL; `None` for EOML.
    pub fn m(&self) -> Option<u32> {
        match self.kind {
            LineKind::Eopl { m } => Some(m),
            LineKind::Eoml => None,
        }
    }

    pub fn oracle(&self) -> &Arc<dyn LineOracle> {
        &self.oracle
    }

    pub fn zero(&self) -> BitConfig {
        BitConfig::zero(self.n())
    }

    /// Largest admissible potential.
    pub fn potential_bound(&self) -> BigUint {
        match self.kind {
            LineKind::Eopl { m } => (BigUint::one() << m) - 1u32,
            LineKind::Eoml => BigUint::one() << self.n(),
        }
    }

    fn check(&self, x: BitConfig) -> Result<(), OracleError> {
        if x.width() != self.n() {
            return Err(OracleError::WidthMismatch { expected: self.n(), found: x });
        }
        Ok(())
    }

    fn checked_config(&self, y: BitConfig) -> Result<BitConfig, OracleError> {
        self.check(y).map(|_| y)
    }

    pub fn s(&self, x: BitConfig) -> Result<BitConfig, OracleError> {
        self.check(x)?;
        self.checked_config(self.oracle.successor(x)?)
    }

    pub fn p(&self, x: BitConfig) -> Result<BitConfig, OracleError> {
        self.check(x)?;
        self.checked_config(self.oracle.predecessor(x)?)
    }

    pub fn v(&self, x: BitConfig) -> Result<BigUint, OracleError> {
        self.check(x)?;
        let value = self.oracle.potential(x)?;
        let bound = self.potential_bound();
        if value > bound {
            return Err(OracleError::PotentialOutOfRange { x, value, bound });
        }
        Ok(value)
    }

    pub fn describe(&self) -> String {
        self.oracle.describe()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LineSolution {
    R1(BitConfig),
    R2(BitConfig),
    T1(BitConfig),
    T2(BitConfig),
    T3(BitConfig),
}

impl LineSolution {
    pub fn config(&self) -> BitConfig {
        match *self {
            LineSolution::R1(x)
            | LineSolution::R2(x)
            | LineSolution::T1(x)
            | LineSolution::T2(x)
            | LineSolution::T3(x) => x,
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            LineSolution::R1(_) => "R1",
            LineSolution::R2(_) => "R2",
            LineSolution::T1(_) => "T1",
            LineSolution::T2(_) => "T2",
            LineSolution::T3(_) => "T3",
        }
    }

    pub fn is_eopl(&self) -> bool {
        matches!(self, LineSolution::R1(_) | LineSolution::R2(_))
    }

    /// Parses `TAG bits`, e.g. `R1 0110`.
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut parts = text.split_whitespace();
        let (Some(tag), Some(bits), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(format!("expected `TAG bits`, found {:?}", text.trim()));
        };
        let x = BitConfig::parse(bits)?;
        Ok(match tag {
            "R1" => LineSolution::R1(x),
            "R2" => LineSolution::R2(x),
            "T1" => LineSolution::T1(x),
            "T2" => LineSolution::T2(x),
            "T3" => LineSolution::T3(x),
            other => return Err(format!("unknown solution tag {other:?}")),
        })
    }
}

impl fmt::Display for LineSolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.tag(), self.config())
    }
}

/// End-of-line condition shared by R1 and T1.
fn end_of_line(inst: &LineInstance, x: BitConfig) -> Result<bool, OracleError> {
    let start_broken = !x.is_zero() && inst.s(inst.p(x)?)? != x;
    Ok(start_broken || inst.p(inst.s(x)?)? != x)
}

fn r2_holds(inst: &LineInstance, x: BitConfig) -> Result<bool, OracleError> {
    let sx = inst.s(x)?;
    Ok(sx != x && inst.p(sx)? == x && inst.v(sx)? <= inst.v(x)?)
}

fn t2_holds(inst: &LineInstance, x: BitConfig) -> Result<bool, OracleError> {
    Ok(!x.is_zero() && inst.v(x)?.is_one())
}

fn t3_holds(inst: &LineInstance, x: BitConfig) -> Result<bool, OracleError> {
    let vx = inst.v(x)?;
    if !vx.is_zero() && inst.v(inst.s(x)?)? != &vx + 1u32 {
        return Ok(true);
    }
    Ok(vx > BigUint::one() && inst.v(inst.p(x)?)? + 1u32 != vx)
}

/// Whether the named condition of `sol` holds, ignoring priority.
pub fn solution_holds(inst: &LineInstance, sol: &LineSolution) -> Result<bool, OracleError> {
    let x = sol.config();
    if x.width() != inst.n() || sol.is_eopl() != inst.is_eopl() {
        return Ok(false);
    }
    match sol {
        LineSolution::R1(_) | LineSolution::T1(_) => end_of_line(inst, x),
        LineSolution::R2(_) => r2_holds(inst, x),
        LineSolution::T2(_) => t2_holds(inst, x),
        LineSolution::T3(_) => t3_holds(inst, x),
    }
}

/// Classifies `x` for an EOPL instance; R1 takes priority over R2.
pub fn eopl_verify(inst: &LineInstance, x: BitConfig) -> Result<Option<LineSolution>, OracleError> {
    inst.check(x)?;
    if end_of_line(inst, x)? {
        Ok(Some(LineSolution::R1(x)))
    } else if r2_holds(inst, x)? {
        Ok(Some(LineSolution::R2(x)))
    } else {
        Ok(None)
    }
}

/// Classifies `x` for an EOML instance, trying T1, T2, T3 in order.
pub fn eoml_verify(inst: &LineInstance, x: BitConfig) -> Result<Option<LineSolution>, OracleError> {
    inst.check(x)?;
    if end_of_line(inst, x)? {
        Ok(Some(LineSolution::T1(x)))
    } else if t2_holds(inst, x)? {
        Ok(Some(LineSolution::T2(x)))
    } else if t3_holds(inst, x)? {
        Ok(Some(LineSolution::T3(x)))
    } else {
        Ok(None)
    }
}

/// Dispatches on the instance kind.
pub fn verify(inst: &LineInstance, x: BitConfig) -> Result<Option<LineSolution>, OracleError> {
    match inst.kind {
        LineKind::Eopl { .. } => eopl_verify(inst, x),
        LineKind::Eoml => eoml_verify(inst, x),
    }
}

/// Checks the preamble conditions; returns one message per failed condition.
pub fn validate_instance(inst: &LineInstance) -> Result<Vec<String>, OracleError> {
    let zero = inst.zero();
    let mut problems = Vec::new();
    if inst.p(zero)? != zero {
        problems.push("P(0^n) = 0^n fails".to_string());
    }
    if inst.s(zero)? == zero {
        problems.push("S(0^n) != 0^n fails".to_string());
    }
    let v0 = inst.v(zero)?;
    match inst.kind {
        LineKind::Eopl { .. } if !v0.is_zero() => problems.push(format!("V(0^n) = 0 fails (V(0^n) = {v0})")),
        LineKind::Eoml if !v0.is_one() => problems.push(format!("V(0^n) = 1 fails (V(0^n) = {v0})")),
        _ => {}
    }
    Ok(problems)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceStep {
    pub step: u64,
    pub x: BitConfig,
    pub v: BigUint,
}

impl fmt::Display for TraceStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.step, self.x, self.v)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FollowResult {
    pub solution: LineSolution,
    pub steps: u64,
    pub trace: Vec<TraceStep>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LineError {
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("no solution within {max_steps} steps")]
    BudgetExceeded { max_steps: u64, trace: Vec<TraceStep> },
    #[error("width {n} exceeds the enumeration limit {limit}")]
    TooWide { n: u32, limit: u32 },
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Follows the line from `0^n`, verifying each vertex before stepping.
pub fn follow_line(inst: &LineInstance, max_steps: u64) -> Result<FollowResult, LineError> {
    follow_line_with(inst, max_steps, |_| {})
}

/// As [`follow_line`], reporting each trace step as soon as it is produced.
pub fn follow_line_with(
    inst: &LineInstance,
    max_steps: u64,
    mut on_step: impl FnMut(&TraceStep),
) -> Result<FollowResult, LineError> {
    if max_steps == 0 {
        return Err(LineError::Invalid("max_steps must be at least 1".into()));
    }
    let mut trace = Vec::new();
    let mut x = inst.zero();
    let mut step = 0u64;
    loop {
        let entry = TraceStep { step, x, v: inst.v(x)? };
        on_step(&entry);
        trace.push(entry);
        if let Some(solution) = verify(inst, x)? {
            return Ok(FollowResult { solution, steps: step, trace });
        }
        if step == max_steps {
            return Err(LineError::BudgetExceeded { max_steps, trace });
        }
        x = inst.s(x)?;
        step += 1;
    }
}

/// Classifies every configuration; only for `n <= limit_n <= 20`.
pub fn enumerate_solutions(inst: &LineInstance, limit_n: u32) -> Result<Vec<LineSolution>, LineError> {
    let limit = limit_n.min(20);
    if inst.n() > limit {
        return Err(LineError::TooWide { n: inst.n(), limit });
    }
    let found: Result<Vec<Option<LineSolution>>, OracleError> =
        BitConfig::all(inst.n()).collect::<Vec<_>>().into_par_iter().map(|x| verify(inst, x)).collect();
    Ok(found?.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bits(s: &str) -> BitConfig {
        BitConfig::parse(s).unwrap()
    }

    /// Path 00 -> 01 -> 10 with potentials `v` on (00, 01, 10); 11 self-loops.
    fn path(kind: &str, v: [u64; 3]) -> LineInstance {
        let text = format!(
            "{kind}\n00 01 00 {}\n01 10 00 {}\n10 10 01 {}\n11 11 11 0\n",
            v[0], v[1], v[2]
        );
        TruthTable::parse(&text).unwrap()
    }

    #[test]
    fn eopl_verify_examples() {
        let inst = path("EOPL 2 2", [0, 1, 2]);
        assert_eq!(eopl_verify(&inst, bits("10")).unwrap(), Some(LineSolution::R1(bits("10"))));
        assert_eq!(eopl_verify(&inst, bits("01")).unwrap(), None);
        let flat = path("EOPL 2 2", [0, 1, 1]);
        assert_eq!(eopl_verify(&flat, bits("01")).unwrap(), Some(LineSolution::R2(bits("01"))));
    }

    #[test]
    fn eoml_verify_examples() {
        let inst = path("EOML 2", [1, 2, 3]);
        assert_eq!(eoml_verify(&inst, bits("10")).unwrap(), Some(LineSolution::T1(bits("10"))));
        let reset = path("EOML 2", [1, 1, 3]);
        assert_eq!(eoml_verify(&reset, bits("01")).unwrap(), Some(LineSolution::T2(bits("01"))));
        // V = 5 exceeds the 2-bit EOML bound 2^2, so the jump case uses 3 bits.
        let jump = TruthTable::parse("EOML 3\n000 001 000 1\n001 010 000 2\n010 010 001 5\n").unwrap();
        let x = bits("001");
        assert_eq!(eoml_verify(&jump, x).unwrap(), Some(LineSolution::T3(x)));
        assert!(TruthTable::parse("EOML 2\n00 01 00 1\n01 10 00 2\n10 10 01 5\n").is_err());
    }

    #[test]
    fn follow_line_examples() {
        let inst = path("EOPL 2 2", [0, 1, 2]);
        let res = follow_line(&inst, 4).unwrap();
        assert_eq!((res.solution, res.steps), (LineSolution::R1(bits("10")), 2));
        let lines: Vec<String> = res.trace.iter().map(|t| t.to_string()).collect();
        assert_eq!(lines, ["0 00 0", "1 01 1", "2 10 2"]);

        let drop = path("EOPL 2 2", [0, 0, 2]);
        let res = follow_line(&drop, 4).unwrap();
        assert_eq!((res.solution, res.steps), (LineSolution::R2(bits("00")), 0));

        match follow_line(&inst, 1).unwrap_err() {
            LineError::BudgetExceeded { trace, .. } => assert_eq!(trace.len(), 2),
            other => panic!("expected budget error, got {other}"),
        }
    }

    #[test]
    fn enumerate_examples() {
        let inst = path("EOPL 2 2", [0, 1, 2]);
        assert_eq!(enumerate_solutions(&inst, 20).unwrap(), vec![LineSolution::R1(bits("10"))]);

        let lone = TruthTable::parse("EOPL 2 2\n00 01 00 0\n01 01 00 1\n").unwrap();
        assert_eq!(enumerate_solutions(&lone, 20).unwrap(), vec![LineSolution::R1(bits("01"))]);

        let meter = path("EOML 2", [1, 2, 3]);
        assert_eq!(enumerate_solutions(&meter, 20).unwrap(), vec![LineSolution::T1(bits("10"))]);
        assert!(matches!(enumerate_solutions(&meter, 1), Err(LineError::TooWide { .. })));
    }

    #[test]
    fn validate_examples() {
        assert!(validate_instance(&path("EOPL 2 2", [0, 1, 2])).unwrap().is_empty());
        let bad = validate_instance(&path("EOPL 2 2", [1, 1, 2])).unwrap();
        assert_eq!(bad, vec!["V(0^n) = 0 fails (V(0^n) = 1)".to_string()]);
        let stuck = TruthTable::parse("EOPL 2 2\n00 00 00 0\n").unwrap();
        assert_eq!(validate_instance(&stuck).unwrap(), vec!["S(0^n) != 0^n fails".to_string()]);
    }

    #[test]
    fn potential_bounds_are_enforced() {
        let table = TruthTable::from_fn(2, |x| (x, x, BigUint::from(x.value() as u64 * 2))).unwrap();
        let inst = table.clone().into_instance(LineKind::Eopl { m: 2 });
        assert_eq!(inst.v(bits("01")).unwrap(), BigUint::from(2u32));
        assert!(matches!(inst.v(bits("10")), Err(OracleError::PotentialOutOfRange { .. })));
        let meter = table.into_instance(LineKind::Eoml);
        assert_eq!(meter.v(bits("10")).unwrap(), BigUint::from(4u32));
        assert!(meter.v(bits("11")).is_err());
        assert!(matches!(meter.s(bits("1")), Err(OracleError::WidthMismatch { .. })));
    }

    #[test]
    fn solution_text_round_trip() {
        let sol = LineSolution::R2(bits("0110"));
        assert_eq!(sol.to_string(), "R2 0110");
        assert_eq!(LineSolution::parse("R2 0110").unwrap(), sol);
        assert!(LineSolution::parse("R9 01").is_err());
    }
}
