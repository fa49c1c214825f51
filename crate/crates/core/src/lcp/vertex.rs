//! Vertices of the augmented Lemke polytope and the moves between them.
//!
//! A vertex is identified by its set of `d + 1` tight bounds. The point is the
//! unique solution of the square system formed by the `d` equality rows
//! `s - M y - z·1 = q` and one unit row per tight variable.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

use num_traits::{One, Signed, Zero};

use super::{LcpError, LcpInstance};
use crate::arith::{QMatrix, QVector, Rational};

/// A bound of the augmented polytope: `y_i >= 0`, `s_i >= 0` or `z >= 0`.
///
/// Indices are 0-based; `Display` prints them 1-based (`y1`, `s2`, `z`).
/// The order interleaves `y_i` and `s_i` so that the two bounds of one label
/// are adjacent, which the orientation rule relies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    Y(usize),
    S(usize),
    Z,
}

impl Var {
    fn key(self) -> (usize, u8) {
        match self {
            Var::Y(i) => (i, 0),
            Var::S(i) => (i, 1),
            Var::Z => (usize::MAX, 0),
        }
    }

    /// Column of this variable in the stacked vector `(y, s, z)`.
    pub fn column(self, d: usize) -> usize {
        match self {
            Var::Y(i) => i,
            Var::S(i) => d + i,
            Var::Z => 2 * d,
        }
    }

    pub fn complement(self) -> Option<Var> {
        match self {
            Var::Y(i) => Some(Var::S(i)),
            Var::S(i) => Some(Var::Y(i)),
            Var::Z => None,
        }
    }

    pub fn label(self) -> Option<usize> {
        match self {
            Var::Y(i) | Var::S(i) => Some(i),
            Var::Z => None,
        }
    }

    pub fn parse(text: &str) -> Option<Var> {
        let t = text.trim();
        if t == "z" {
            return Some(Var::Z);
        }
        let (kind, idx) = t.split_at(1);
        let i: usize = idx.parse().ok().filter(|&i| i >= 1)?;
        match kind {
            "y" => Some(Var::Y(i - 1)),
            "s" => Some(Var::S(i - 1)),
            _ => None,
        }
    }

    fn all(d: usize) -> impl Iterator<Item = Var> {
        (0..d).flat_map(|i| [Var::Y(i), Var::S(i)]).chain(std::iter::once(Var::Z))
    }
}

impl Ord for Var {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

impl PartialOrd for Var {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::Y(i) => write!(f, "y{}", i + 1),
            Var::S(i) => write!(f, "s{}", i + 1),
            Var::Z => write!(f, "z"),
        }
    }
}

/// How ratio-test ties are handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieBreak {
    /// Any tie is reported as a degeneracy error.
    #[default]
    Strict,
    /// Ties are broken by perturbing `q_i` by `eps^(i+1)`.
    Lexicographic,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LemkeVertex {
    y: QVector,
    s: QVector,
    z: Rational,
    tight: BTreeSet<Var>,
    /// Columns of `A^-1 [q | e_1 .. e_d]` when running lexicographically:
    /// entry `j` of variable `k` is the coefficient of `eps^j` in its value.
    perturbed: Option<Vec<QVector>>,
}

impl LemkeVertex {
    /// Builds the vertex with the given tight set, solving the tight system.
    pub fn from_tight(inst: &LcpInstance, tight: BTreeSet<Var>, tie: TieBreak) -> Result<Self, LcpError> {
        let d = inst.dim();
        if tight.len() != d + 1 {
            return Err(LcpError::Invalid(format!("{} tight bounds, expected {}", tight.len(), d + 1)));
        }
        if let Some(v) = tight.iter().find(|v| matches!(v, Var::Y(i) | Var::S(i) if *i >= d)) {
            return Err(LcpError::Invalid(format!("variable {v} out of range")));
        }
        let order: Vec<Var> = tight.iter().copied().collect();
        let a = tight_matrix(inst, &order, None);
        let mut rhs = vec![base_rhs(inst)];
        if tie == TieBreak::Lexicographic {
            for i in 0..d {
                let mut e = vec![Rational::zero(); 2 * d + 1];
                e[i] = Rational::one();
                rhs.push(QVector::new(e));
            }
        }
        let cols = a
            .solve_many(&rhs)?
            .ok_or_else(|| LcpError::Singular(format_set(&tight)))?;
        let x = &cols[0];
        let vertex = LemkeVertex {
            y: (0..d).map(|i| x[i].clone()).collect(),
            s: (0..d).map(|i| x[d + i].clone()).collect(),
            z: x[2 * d].clone(),
            tight,
            perturbed: (tie == TieBreak::Lexicographic).then_some(cols),
        };
        Ok(vertex)
    }

    /// Builds a vertex from explicit values; the tight set is read off the
    /// zero coordinates and must have exactly `d + 1` elements.
    pub fn from_point(inst: &LcpInstance, y: QVector, s: QVector, z: Rational) -> Result<Self, LcpError> {
        let d = inst.dim();
        if y.len() != d || s.len() != d {
            return Err(LcpError::Invalid("point has the wrong dimension".into()));
        }
        let mut tight = BTreeSet::new();
        for i in 0..d {
            if y[i].is_zero() {
                tight.insert(Var::Y(i));
            }
            if s[i].is_zero() {
                tight.insert(Var::S(i));
            }
        }
        if z.is_zero() {
            tight.insert(Var::Z);
        }
        if tight.len() != d + 1 {
            return Err(LcpError::Degenerate {
                detail: format!("point has {} zero coordinates {}, expected {}", tight.len(), format_set(&tight), d + 1),
            });
        }
        let v = LemkeVertex { y, s, z, tight, perturbed: None };
        v.check_invariants(inst).map_err(LcpError::Invalid)?;
        Ok(v)
    }

    pub fn y(&self) -> &QVector {
        &self.y
    }

    pub fn s(&self) -> &QVector {
        &self.s
    }

    pub fn z(&self) -> &Rational {
        &self.z
    }

    pub fn tight(&self) -> &BTreeSet<Var> {
        &self.tight
    }

    pub fn dim(&self) -> usize {
        self.y.len()
    }

    pub fn tie_break(&self) -> TieBreak {
        if self.perturbed.is_some() {
            TieBreak::Lexicographic
        } else {
            TieBreak::Strict
        }
    }

    pub fn value(&self, v: Var) -> &Rational {
        match v {
            Var::Y(i) => &self.y[i],
            Var::S(i) => &self.s[i],
            Var::Z => &self.z,
        }
    }

    /// Value of `v` as a polynomial in the perturbation, lowest degree first.
    fn lex_value(&self, v: Var) -> Vec<Rational> {
        let col = v.column(self.dim());
        match &self.perturbed {
            Some(cols) => cols.iter().map(|c| c[col].clone()).collect(),
            None => vec![self.value(v).clone()],
        }
    }

    /// `z` as a perturbation polynomial (a single entry in strict mode).
    pub fn z_key(&self) -> Vec<Rational> {
        self.lex_value(Var::Z)
    }

    /// The label whose two bounds are both tight, from the tight set.
    pub fn dup_label(&self) -> Option<usize> {
        (0..self.dim()).find(|&i| self.tight.contains(&Var::Y(i)) && self.tight.contains(&Var::S(i)))
    }

    pub fn is_solution(&self) -> bool {
        self.tight.contains(&Var::Z)
    }

    /// Checks feasibility, the equality rows, full labeling and (for strict
    /// vertices) that no label other than the duplicate has both coordinates zero.
    pub fn check_invariants(&self, inst: &LcpInstance) -> Result<(), String> {
        let d = inst.dim();
        if self.y.len() != d || self.s.len() != d {
            return Err("dimension mismatch".into());
        }
        let my = inst.m().mul_vec(&self.y).map_err(|e| e.to_string())?;
        for i in 0..d {
            let lhs = &self.s[i] - &my[i] - &self.z;
            if lhs != inst.q()[i] {
                return Err(format!("equality row {} fails: {} != {}", i + 1, lhs, inst.q()[i]));
            }
        }
        for v in Var::all(d) {
            if self.value(v).is_negative() {
                return Err(format!("{v} = {} is negative", self.value(v)));
            }
        }
        for v in &self.tight {
            if !self.value(*v).is_zero() {
                return Err(format!("tight variable {v} is {}", self.value(*v)));
            }
        }
        for i in 0..d {
            if !self.tight.contains(&Var::Y(i)) && !self.tight.contains(&Var::S(i)) {
                return Err(format!("label {} is missing", i + 1));
            }
        }
        let doubled = (0..d).filter(|&i| self.y[i].is_zero() && self.s[i].is_zero()).count();
        let limit = if self.is_solution() { 0 } else { 1 };
        if self.perturbed.is_none() && doubled > limit {
            return Err(format!("{doubled} labels have both coordinates zero"));
        }
        Ok(())
    }
}

impl fmt::Display for LemkeVertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "y=({}) s=({}) z={} tight={}", self.y, self.s, self.z, format_set(&self.tight))
    }
}

fn format_set(set: &BTreeSet<Var>) -> String {
    let items: Vec<String> = set.iter().map(|v| v.to_string()).collect();
    format!("{{{}}}", items.join(","))
}

/// The square tight system: equality rows, then a unit row per entry of
/// `order`, then (if given) a unit row for `last`.
fn tight_matrix(inst: &LcpInstance, order: &[Var], last: Option<Var>) -> QMatrix {
    let d = inst.dim();
    let n = 2 * d + 1;
    let mut a = QMatrix::zeros(n, n);
    for i in 0..d {
        for j in 0..d {
            a.set(i, j, -inst.m().get(i, j).clone());
        }
        a.set(i, d + i, Rational::one());
        a.set(i, 2 * d, -Rational::one());
    }
    for (t, v) in order.iter().chain(last.iter()).enumerate() {
        a.set(d + t, v.column(d), Rational::one());
    }
    a
}

fn base_rhs(inst: &LcpInstance) -> QVector {
    let d = inst.dim();
    inst.q().iter().cloned().chain((0..=d).map(|_| Rational::zero())).collect()
}

/// The start vertex `y = 0`, `z = -min q`, `s = q + z·1` (strict tie-break).
pub fn lemke_start(inst: &LcpInstance) -> Result<LemkeVertex, LcpError> {
    lemke_start_with(inst, TieBreak::Strict)
}

pub fn lemke_start_with(inst: &LcpInstance, tie: TieBreak) -> Result<LemkeVertex, LcpError> {
    let q = inst.q();
    let min = q.iter().min().expect("dimension is at least 1");
    if !min.is_negative() {
        return Err(LcpError::Invalid("q >= 0: y = 0 already solves the LCP".into()));
    }
    let argmins: Vec<usize> = (0..q.len()).filter(|&i| &q[i] == min).collect();
    if argmins.len() > 1 && tie == TieBreak::Strict {
        let ids: Vec<String> = argmins.iter().map(|i| (i + 1).to_string()).collect();
        return Err(LcpError::Degenerate {
            detail: format!("minimum of q is attained at indices {{{}}}", ids.join(",")),
        });
    }
    // With q_i perturbed by eps^(i+1) the largest tied index is the strict minimum.
    let l = *argmins.last().expect("nonempty");
    let mut tight: BTreeSet<Var> = (0..q.len()).map(Var::Y).collect();
    tight.insert(Var::S(l));
    LemkeVertex::from_tight(inst, tight, tie)
}

/// The unique label with `y_l = s_l = 0`, read from the point's values.
/// Returns `None` at a vertex with `z = 0`.
pub fn duplicate_label(v: &LemkeVertex) -> Result<Option<usize>, LcpError> {
    if v.z.is_zero() {
        return Ok(None);
    }
    let doubled: Vec<usize> = (0..v.dim()).filter(|&i| v.y[i].is_zero() && v.s[i].is_zero()).collect();
    match doubled.as_slice() {
        [] => Ok(None),
        [l] => Ok(Some(*l)),
        many => Err(LcpError::Degenerate {
            detail: format!(
                "labels {{{}}} are all duplicated",
                many.iter().map(|i| (i + 1).to_string()).collect::<Vec<_>>().join(",")
            ),
        }),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PivotResult {
    /// The adjacent vertex and the variable that became tight.
    Vertex { next: LemkeVertex, leaving: Var },
    /// No bound blocks: the edge is the ray `from + t·(dy, ds, dz)`, `t >= 0`.
    Ray { dy: QVector, ds: QVector, dz: Rational },
}

/// Direction of the edge obtained by relaxing `entering`, normalised so the
/// entering variable increases at unit rate.
fn edge_direction(inst: &LcpInstance, v: &LemkeVertex, entering: Var) -> Result<QVector, LcpError> {
    let d = inst.dim();
    let order: Vec<Var> = v.tight.iter().copied().filter(|&t| t != entering).collect();
    let a = tight_matrix(inst, &order, Some(entering));
    let mut rhs = vec![Rational::zero(); 2 * d + 1];
    rhs[2 * d] = Rational::one();
    a.solve(&QVector::new(rhs))?
        .ok_or_else(|| LcpError::Singular(format_set(&v.tight)))
}

/// Moves from `v` along the edge that relaxes the tight bound `entering`.
pub fn lemke_pivot(inst: &LcpInstance, v: &LemkeVertex, entering: Var) -> Result<PivotResult, LcpError> {
    if !v.tight.contains(&entering) {
        return Err(LcpError::NotTight(entering));
    }
    let d = inst.dim();
    let delta = edge_direction(inst, v, entering)?;
    let mut best: Option<(Var, Vec<Rational>)> = None;
    let mut tied: Vec<Var> = Vec::new();
    for k in Var::all(d).filter(|k| !v.tight.contains(k)) {
        let dk = &delta[k.column(d)];
        if !dk.is_negative() {
            continue;
        }
        let rate = -dk.clone();
        let ratio: Vec<Rational> = v.lex_value(k).into_iter().map(|c| c / &rate).collect();
        match best.as_ref().map(|(_, r)| ratio.cmp(r)) {
            None | Some(Ordering::Less) => {
                best = Some((k, ratio));
                tied.clear();
            }
            Some(Ordering::Equal) => tied.push(k),
            Some(Ordering::Greater) => {}
        }
    }
    let Some((leaving, _)) = best else {
        return Ok(PivotResult::Ray {
            dy: (0..d).map(|i| delta[i].clone()).collect(),
            ds: (0..d).map(|i| delta[d + i].clone()).collect(),
            dz: delta[2 * d].clone(),
        });
    };
    if !tied.is_empty() {
        tied.insert(0, leaving);
        let names: Vec<String> = tied.iter().map(|t| t.to_string()).collect();
        return Err(LcpError::Degenerate {
            detail: format!("ratio test tie between {{{}}} when relaxing {entering}", names.join(",")),
        });
    }
    let mut tight = v.tight.clone();
    tight.remove(&entering);
    tight.insert(leaving);
    let next = LemkeVertex::from_tight(inst, tight, v.tie_break())?;
    Ok(PivotResult::Vertex { next, leaving })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Orientation {
    Forward,
    Backward,
}

impl Orientation {
    pub fn reversed(self) -> Self {
        match self {
            Orientation::Forward => Orientation::Backward,
            Orientation::Backward => Orientation::Forward,
        }
    }
}

/// Uncalibrated sign: `det([equalities; tight \ {e} in order; unit row e])`.
/// Two ends of an edge share every row but the last, and the edge direction
/// gives their last-row cofactors opposite signs.
fn raw_orientation(inst: &LcpInstance, v: &LemkeVertex, entering: Var) -> Result<bool, LcpError> {
    if !v.tight.contains(&entering) {
        return Err(LcpError::NotTight(entering));
    }
    let order: Vec<Var> = v.tight.iter().copied().filter(|&t| t != entering).collect();
    let det = tight_matrix(inst, &order, Some(entering)).det()?;
    if det.is_zero() {
        return Err(LcpError::Singular(format_set(&v.tight)));
    }
    Ok(det.is_positive())
}

/// Orientation of Lemke edges, calibrated so that leaving the start vertex
/// along the Lemke edge is forward.
#[derive(Debug, Clone)]
pub struct Orientor {
    inst: LcpInstance,
    flip: bool,
}

impl Orientor {
    pub fn new(inst: &LcpInstance, tie: TieBreak) -> Result<Self, LcpError> {
        let start = lemke_start_with(inst, tie)?;
        let l = start.dup_label().ok_or_else(|| LcpError::Internal("start has no duplicate label".into()))?;
        let raw = raw_orientation(inst, &start, Var::Y(l))?;
        Ok(Orientor { inst: inst.clone(), flip: !raw })
    }

    pub fn orient(&self, v: &LemkeVertex, entering: Var) -> Result<Orientation, LcpError> {
        let raw = raw_orientation(&self.inst, v, entering)?;
        Ok(if raw != self.flip { Orientation::Forward } else { Orientation::Backward })
    }
}

/// One-shot orientation; prefer [`Orientor`] for repeated queries.
pub fn todd_orientation(inst: &LcpInstance, v: &LemkeVertex, entering: Var) -> Result<Orientation, LcpError> {
    Orientor::new(inst, v.tie_break())?.orient(v, entering)
}
