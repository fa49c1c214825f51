//! Linear complementarity problems and Lemke's complementary pivoting.
//!
//! Sign convention: find `y >= 0` with slack `s := q + M y >= 0` and
//! `y_i * s_i = 0`. The augmented system used by Lemke's method is
//! `s - M y - z·1 = q`. Files written in the opposite convention
//! (`M y <= q`) can be loaded with `paper_sign`, which negates `M`.

mod lemke;
mod vertex;

use std::fmt;

use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::arith::{parse_rational, ArithError, QMatrix, QVector, Rational};

pub use lemke::{default_budget, extract_q2, lemke_solve, lemke_solve_with, LemkeOptions, LemkeRun, PivotRecord, Termination};
pub use vertex::{
    duplicate_label, lemke_pivot, lemke_start, lemke_start_with, todd_orientation, LemkeVertex, Orientation,
    Orientor, PivotResult, TieBreak, Var,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LcpError {
    #[error(transparent)]
    Arith(#[from] ArithError),
    #[error("degenerate: {detail}")]
    Degenerate { detail: String },
    #[error("variable {0} is not tight at this vertex")]
    NotTight(Var),
    #[error("tight system is singular for {0}")]
    Singular(String),
    #[error("step budget of {budget} pivots exceeded (cycling)")]
    BudgetExceeded { budget: u64 },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid instance: {0}")]
    Invalid(String),
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl LcpError {
    pub fn is_degenerate(&self) -> bool {
        matches!(self, LcpError::Degenerate { .. })
    }
}

/// An LCP `(M, q)` with `M` square of side `d >= 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LcpInstance {
    m: QMatrix,
    q: QVector,
}

impl LcpInstance {
    pub fn new(m: QMatrix, q: QVector) -> Result<Self, LcpError> {
        if !m.is_square() {
            return Err(ArithError::NotSquare { rows: m.rows(), cols: m.cols() }.into());
        }
        if m.rows() == 0 {
            return Err(LcpError::Invalid("dimension must be at least 1".into()));
        }
        if q.len() != m.rows() {
            return Err(ArithError::DimensionMismatch { expected: m.rows(), found: q.len() }.into());
        }
        Ok(LcpInstance { m, q })
    }

    pub fn from_i64(m: &[&[i64]], q: &[i64]) -> Self {
        LcpInstance::new(QMatrix::from_i64_rows(m), QVector::from_i64s(q))
            .expect("malformed literal instance")
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }

    pub fn m(&self) -> &QMatrix {
        &self.m
    }

    pub fn q(&self) -> &QVector {
        &self.q
    }

    /// Slack `q + M y`.
    pub fn slack(&self, y: &QVector) -> Result<QVector, LcpError> {
        Ok(self.q.add(&self.m.mul_vec(y)?)?)
    }

    /// Parses the instance file format: `d`, then `d` rows of `M`, then `q`.
    /// Blank lines and `#` comments are ignored.
    pub fn parse(text: &str, paper_sign: bool) -> Result<Self, LcpError> {
        let mut rows = text.lines().enumerate().filter_map(|(i, raw)| {
            let line = raw.split('#').next().unwrap_or("").trim();
            (!line.is_empty()).then_some((i + 1, line))
        });
        let (line_no, first) = rows.next().ok_or(LcpError::Parse {
            line: 1,
            message: "empty instance file".into(),
        })?;
        let d: usize = first.parse().map_err(|_| LcpError::Parse {
            line: line_no,
            message: format!("expected dimension, found {first:?}"),
        })?;
        if d == 0 {
            return Err(LcpError::Parse { line: line_no, message: "dimension must be positive".into() });
        }
        let mut parse_row = |what: &str| -> Result<Vec<Rational>, LcpError> {
            let (line, text) = rows.next().ok_or(LcpError::Parse {
                line: line_no,
                message: format!("missing {what}"),
            })?;
            let vals = text
                .split_whitespace()
                .map(parse_rational)
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| LcpError::Parse { line, message: e.to_string() })?;
            if vals.len() != d {
                return Err(LcpError::Parse {
                    line,
                    message: format!("{what} has {} entries, expected {d}", vals.len()),
                });
            }
            Ok(vals)
        };
        let mut m_rows = Vec::with_capacity(d);
        for i in 0..d {
            m_rows.push(parse_row(&format!("row {} of M", i + 1))?);
        }
        let q = QVector::new(parse_row("q")?);
        if let Some((line, _)) = rows.next() {
            return Err(LcpError::Parse { line, message: "trailing content".into() });
        }
        let mut m = QMatrix::from_rows(m_rows)?;
        if paper_sign {
            m = m.neg();
        }
        LcpInstance::new(m, q)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n", self.dim());
        out.push_str(&self.m.to_string());
        out.push_str(&self.q.to_string());
        out.push('\n');
        out
    }
}

/// Per-coordinate result of checking a candidate LCP solution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LcpReport {
    pub slack: QVector,
    pub negative_y: Vec<usize>,
    pub negative_slack: Vec<usize>,
    pub not_complementary: Vec<usize>,
}

impl LcpReport {
    pub fn ok(&self) -> bool {
        self.negative_y.is_empty() && self.negative_slack.is_empty() && self.not_complementary.is_empty()
    }
}

impl fmt::Display for LcpReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.ok() {
            return write!(f, "feasible and complementary; slack = ({})", self.slack);
        }
        let ones = |v: &[usize]| v.iter().map(|i| (i + 1).to_string()).collect::<Vec<_>>().join(",");
        write!(f, "slack = ({})", self.slack)?;
        if !self.negative_y.is_empty() {
            write!(f, "; y < 0 at {{{}}}", ones(&self.negative_y))?;
        }
        if !self.negative_slack.is_empty() {
            write!(f, "; s < 0 at {{{}}}", ones(&self.negative_slack))?;
        }
        if !self.not_complementary.is_empty() {
            write!(f, "; y_i*s_i != 0 at {{{}}}", ones(&self.not_complementary))?;
        }
        Ok(())
    }
}

pub fn verify_lcp_solution(inst: &LcpInstance, y: &QVector) -> Result<LcpReport, LcpError> {
    if y.len() != inst.dim() {
        return Err(ArithError::DimensionMismatch { expected: inst.dim(), found: y.len() }.into());
    }
    let slack = inst.slack(y)?;
    let mut report = LcpReport {
        slack,
        negative_y: vec![],
        negative_slack: vec![],
        not_complementary: vec![],
    };
    for i in 0..inst.dim() {
        if y[i].is_negative() {
            report.negative_y.push(i);
        }
        if report.slack[i].is_negative() {
            report.negative_slack.push(i);
        }
        if !(&y[i] * &report.slack[i]).is_zero() {
            report.not_complementary.push(i);
        }
    }
    Ok(report)
}

/// Either every principal minor is positive, or the first non-positive one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PMatrixCheck {
    PMatrix,
    Witness { set: Vec<usize>, minor: Rational },
}

impl PMatrixCheck {
    pub fn is_p_matrix(&self) -> bool {
        matches!(self, PMatrixCheck::PMatrix)
    }
}

/// Checks all `2^d - 1` principal minors. Index sets are visited in
/// lexicographic order of their sorted (0-based) elements, so the witness is
/// the lexicographically smallest violating set.
pub fn is_p_matrix(m: &QMatrix) -> Result<PMatrixCheck, LcpError> {
    if !m.is_square() {
        return Err(ArithError::NotSquare { rows: m.rows(), cols: m.cols() }.into());
    }
    Ok(match first_nonpositive_minor(m)? {
        Some((set, minor)) => PMatrixCheck::Witness { set, minor },
        None => PMatrixCheck::PMatrix,
    })
}

pub(crate) fn first_nonpositive_minor(m: &QMatrix) -> Result<Option<(Vec<usize>, Rational)>, LcpError> {
    fn visit(
        m: &QMatrix,
        set: &mut Vec<usize>,
        next: usize,
    ) -> Result<Option<(Vec<usize>, Rational)>, LcpError> {
        for i in next..m.rows() {
            set.push(i);
            let minor = m.principal_minor(set)?;
            if !minor.is_positive() {
                return Ok(Some((set.clone(), minor)));
            }
            if let Some(found) = visit(m, set, i + 1)? {
                return Ok(Some(found));
            }
            set.pop();
        }
        Ok(None)
    }
    visit(m, &mut Vec::new(), 0)
}

/// Result of a P-LCP search: a solution, or a non-positive principal minor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LcpOutcome {
    Q1(QVector),
    Q2 { set: Vec<usize>, minor: Rational },
}

impl LcpOutcome {
    /// Recomputes the payload against `inst`: Q1 must solve the LCP, Q2 must
    /// name a non-positive principal minor with the stated value.
    pub fn verify(&self, inst: &LcpInstance) -> Result<bool, LcpError> {
        match self {
            LcpOutcome::Q1(y) => Ok(verify_lcp_solution(inst, y)?.ok()),
            LcpOutcome::Q2 { set, minor } => {
                if set.is_empty() {
                    return Ok(false);
                }
                let actual = inst.m().principal_minor(set)?;
                Ok(&actual == minor && !actual.is_positive())
            }
        }
    }

    pub fn parse(text: &str) -> Result<Self, LcpError> {
        let bad = |message: String| LcpError::Parse { line: 1, message };
        let t = text.trim();
        if let Some(rest) = t.strip_prefix("Q1") {
            let y = rest
                .split_whitespace()
                .map(parse_rational)
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| bad(e.to_string()))?;
            return Ok(LcpOutcome::Q1(QVector::new(y)));
        }
        if let Some(rest) = t.strip_prefix("Q2") {
            let rest = rest.trim();
            let set_text = rest
                .strip_prefix("S={")
                .and_then(|r| r.split_once('}'))
                .ok_or_else(|| bad(format!("expected S={{...}} in {rest:?}")))?;
            let set = set_text
                .0
                .split(',')
                .filter(|s| !s.trim().is_empty())
                .map(|s| match s.trim().parse::<usize>() {
                    Ok(i) if i >= 1 => Ok(i - 1),
                    _ => Err(bad(format!("bad index {s:?}"))),
                })
                .collect::<Result<Vec<_>, _>>()?;
            let minor_text = set_text
                .1
                .trim()
                .strip_prefix("minor=")
                .ok_or_else(|| bad("expected minor=p/q".into()))?;
            let minor = parse_rational(minor_text).map_err(|e| bad(e.to_string()))?;
            return Ok(LcpOutcome::Q2 { set, minor });
        }
        Err(bad(format!("unknown outcome tag in {t:?}")))
    }
}

impl fmt::Display for LcpOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LcpOutcome::Q1(y) if y.is_empty() => write!(f, "Q1"),
            LcpOutcome::Q1(y) => write!(f, "Q1 {y}"),
            LcpOutcome::Q2 { set, minor } => {
                let ids: Vec<String> = set.iter().map(|i| (i + 1).to_string()).collect();
                write!(f, "Q2 S={{{}}} minor={}", ids.join(","), minor)
            }
        }
    }
}
