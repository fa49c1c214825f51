//! Arithmetic circuits over exact rationals and the continuous search
//! problems defined by them.

mod norm;
pub mod problems;

use std::fmt;

use num_traits::Signed;
use thiserror::Error;

use crate::arith::{parse_rational, QVector, Rational};

pub use norm::{cmp_scaled_norm, norm_pow, Norm};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CircuitError {
    #[error("circuit expects {expected} inputs, got {found}")]
    Arity { expected: usize, found: usize },
    #[error("gate {gate} references node {node}, which is not defined before it")]
    ForwardReference { gate: usize, node: usize },
    #[error("output references undefined node {0}")]
    BadOutput(usize),
    #[error("circuit has no outputs")]
    NoOutputs,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// One gate. Operands are node indices: inputs are `0..arity`, gate `j` is
/// node `arity + j`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Gate {
    Const(Rational),
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Max(usize, usize),
    Min(usize, usize),
    Abs(usize),
}

impl Gate {
    fn operands(&self) -> Vec<usize> {
        match *self {
            Gate::Const(_) => vec![],
            Gate::Add(a, b) | Gate::Sub(a, b) | Gate::Mul(a, b) | Gate::Max(a, b) | Gate::Min(a, b) => vec![a, b],
            Gate::Abs(a) => vec![a],
        }
    }

    fn remap(&self, f: impl Fn(usize) -> usize) -> Gate {
        match self {
            Gate::Const(r) => Gate::Const(r.clone()),
            Gate::Add(a, b) => Gate::Add(f(*a), f(*b)),
            Gate::Sub(a, b) => Gate::Sub(f(*a), f(*b)),
            Gate::Mul(a, b) => Gate::Mul(f(*a), f(*b)),
            Gate::Max(a, b) => Gate::Max(f(*a), f(*b)),
            Gate::Min(a, b) => Gate::Min(f(*a), f(*b)),
            Gate::Abs(a) => Gate::Abs(f(*a)),
        }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gate::Const(r) => write!(f, "CONST {r}"),
            Gate::Add(a, b) => write!(f, "ADD {a} {b}"),
            Gate::Sub(a, b) => write!(f, "SUB {a} {b}"),
            Gate::Mul(a, b) => write!(f, "MUL {a} {b}"),
            Gate::Max(a, b) => write!(f, "MAX {a} {b}"),
            Gate::Min(a, b) => write!(f, "MIN {a} {b}"),
            Gate::Abs(a) => write!(f, "ABS {a}"),
        }
    }
}

/// A topologically ordered gate list with designated outputs.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ArithCircuit {
    arity: usize,
    gates: Vec<Gate>,
    outputs: Vec<usize>,
}

impl ArithCircuit {
    pub fn new(arity: usize, gates: Vec<Gate>, outputs: Vec<usize>) -> Result<Self, CircuitError> {
        for (j, g) in gates.iter().enumerate() {
            if let Some(&node) = g.operands().iter().find(|&&n| n >= arity + j) {
                return Err(CircuitError::ForwardReference { gate: j, node });
            }
        }
        if outputs.is_empty() {
            return Err(CircuitError::NoOutputs);
        }
        if let Some(&o) = outputs.iter().find(|&&o| o >= arity + gates.len()) {
            return Err(CircuitError::BadOutput(o));
        }
        Ok(ArithCircuit { arity, gates, outputs })
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn outputs(&self) -> &[usize] {
        &self.outputs
    }

    pub fn output_count(&self) -> usize {
        self.outputs.len()
    }

    pub fn eval(&self, x: &QVector) -> Result<QVector, CircuitError> {
        if x.len() != self.arity {
            return Err(CircuitError::Arity { expected: self.arity, found: x.len() });
        }
        let mut nodes: Vec<Rational> = Vec::with_capacity(self.arity + self.gates.len());
        nodes.extend(x.iter().cloned());
        for g in &self.gates {
            let v = match g {
                Gate::Const(r) => r.clone(),
                Gate::Add(a, b) => &nodes[*a] + &nodes[*b],
                Gate::Sub(a, b) => &nodes[*a] - &nodes[*b],
                Gate::Mul(a, b) => &nodes[*a] * &nodes[*b],
                Gate::Max(a, b) => nodes[*a].clone().max(nodes[*b].clone()),
                Gate::Min(a, b) => nodes[*a].clone().min(nodes[*b].clone()),
                Gate::Abs(a) => nodes[*a].abs(),
            };
            nodes.push(v);
        }
        Ok(self.outputs.iter().map(|&o| nodes[o].clone()).collect())
    }

    /// Evaluates a single-output circuit.
    pub fn eval_scalar(&self, x: &QVector) -> Result<Rational, CircuitError> {
        Ok(self.eval(x)?[0].clone())
    }

    /// `x -> x` on `dim` coordinates.
    pub fn identity(dim: usize) -> Self {
        ArithCircuit { arity: dim, gates: vec![], outputs: (0..dim).collect() }
    }

    /// Constant outputs, ignoring the `arity` inputs.
    pub fn constant(arity: usize, values: &[Rational]) -> Self {
        let mut b = CircuitBuilder::new(arity);
        let outs: Vec<usize> = values.iter().map(|v| b.constant(v.clone())).collect();
        b.finish(outs).expect("well-formed")
    }

    /// `x -> k·x + b` coordinatewise.
    pub fn affine(k: &Rational, offset: &[Rational]) -> Self {
        let mut b = CircuitBuilder::new(offset.len());
        let kk = b.constant(k.clone());
        let outs: Vec<usize> = offset
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let scaled = b.mul(kk, i);
                let c = b.constant(c.clone());
                b.add(scaled, c)
            })
            .collect();
        b.finish(outs).expect("well-formed")
    }

    /// Projection onto input `i`.
    pub fn coordinate(arity: usize, i: usize) -> Self {
        ArithCircuit::new(arity, vec![], vec![i]).expect("index in range")
    }

    pub fn parse(text: &str) -> Result<Self, CircuitError> {
        let mut lines = numbered_lines(text);
        let c = parse_block(&mut lines)?;
        if let Some((line, _)) = lines.next() {
            return Err(CircuitError::Parse { line, message: "trailing content after circuit".into() });
        }
        Ok(c)
    }
}

impl fmt::Display for ArithCircuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ARITH {} {} {}", self.arity, self.gates.len(), self.outputs.len())?;
        for g in &self.gates {
            writeln!(f, "{g}")?;
        }
        let outs: Vec<String> = self.outputs.iter().map(|o| o.to_string()).collect();
        writeln!(f, "{}", outs.join(" "))
    }
}

/// Non-blank lines with `#` comments stripped, paired with 1-based numbers.
pub(crate) fn numbered_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let l = raw.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then_some((i + 1, l))
    })
}

/// Reads one `ARITH` block (header, gates, output line) from `lines`.
pub(crate) fn parse_block<'a>(lines: &mut impl Iterator<Item = (usize, &'a str)>) -> Result<ArithCircuit, CircuitError> {
    let err = |line: usize, message: String| CircuitError::Parse { line, message };
    let (hline, header) = lines.next().ok_or_else(|| err(1, "missing ARITH header".into()))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let num = |s: &str, line: usize| s.parse::<usize>().map_err(|_| err(line, format!("expected a count, found {s:?}")));
    let ["ARITH", arity, n_gates, n_outputs] = fields.as_slice() else {
        return Err(err(hline, format!("expected `ARITH arity n_gates n_outputs`, found {header:?}")));
    };
    let (arity, n_gates, n_outputs) = (num(arity, hline)?, num(n_gates, hline)?, num(n_outputs, hline)?);
    let mut gates = Vec::with_capacity(n_gates);
    for j in 0..n_gates {
        let (line, text) = lines.next().ok_or_else(|| err(hline, format!("expected {n_gates} gates, found {j}")))?;
        let parts: Vec<&str> = text.split_whitespace().collect();
        let node = |s: &str| num(s, line);
        let gate = match parts.as_slice() {
            ["CONST", r] => Gate::Const(parse_rational(r).map_err(|e| err(line, e.to_string()))?),
            ["ADD", a, b] => Gate::Add(node(a)?, node(b)?),
            ["SUB", a, b] => Gate::Sub(node(a)?, node(b)?),
            ["MUL", a, b] => Gate::Mul(node(a)?, node(b)?),
            ["MAX", a, b] => Gate::Max(node(a)?, node(b)?),
            ["MIN", a, b] => Gate::Min(node(a)?, node(b)?),
            ["ABS", a] => Gate::Abs(node(a)?),
            _ => return Err(err(line, format!("unknown gate {text:?}"))),
        };
        if let Some(&bad) = gate.operands().iter().find(|&&n| n >= arity + j) {
            return Err(err(line, format!("node {bad} is not defined before gate {j}")));
        }
        gates.push(gate);
    }
    let (oline, text) = lines.next().ok_or_else(|| err(hline, "missing output line".into()))?;
    let outputs = text.split_whitespace().map(|s| num(s, oline)).collect::<Result<Vec<_>, _>>()?;
    if outputs.len() != n_outputs {
        return Err(err(oline, format!("expected {n_outputs} outputs, found {}", outputs.len())));
    }
    ArithCircuit::new(arity, gates, outputs).map_err(|e| err(oline, e.to_string()))
}

/// Incremental construction of circuits, including inlining of others.
#[derive(Debug, Clone)]
pub struct CircuitBuilder {
    arity: usize,
    gates: Vec<Gate>,
}

impl CircuitBuilder {
    pub fn new(arity: usize) -> Self {
        CircuitBuilder { arity, gates: vec![] }
    }

    pub fn input(&self, i: usize) -> usize {
        assert!(i < self.arity, "input {i} out of range");
        i
    }

    fn push(&mut self, g: Gate) -> usize {
        self.gates.push(g);
        self.arity + self.gates.len() - 1
    }

    pub fn constant(&mut self, r: Rational) -> usize {
        self.push(Gate::Const(r))
    }

    pub fn add(&mut self, a: usize, b: usize) -> usize {
        self.push(Gate::Add(a, b))
    }

    pub fn sub(&mut self, a: usize, b: usize) -> usize {
        self.push(Gate::Sub(a, b))
    }

    pub fn mul(&mut self, a: usize, b: usize) -> usize {
        self.push(Gate::Mul(a, b))
    }

    pub fn max(&mut self, a: usize, b: usize) -> usize {
        self.push(Gate::Max(a, b))
    }

    pub fn min(&mut self, a: usize, b: usize) -> usize {
        self.push(Gate::Min(a, b))
    }

    pub fn abs(&mut self, a: usize) -> usize {
        self.push(Gate::Abs(a))
    }

    /// Copies `c` into this circuit with its inputs wired to `inputs`;
    /// returns the nodes holding its outputs.
    pub fn inline(&mut self, c: &ArithCircuit, inputs: &[usize]) -> Result<Vec<usize>, CircuitError> {
        if inputs.len() != c.arity {
            return Err(CircuitError::Arity { expected: c.arity, found: inputs.len() });
        }
        let base = self.arity + self.gates.len();
        let map = |n: usize| if n < c.arity { inputs[n] } else { base + (n - c.arity) };
        for g in &c.gates {
            let g = g.remap(map);
            self.gates.push(g);
        }
        Ok(c.outputs.iter().map(|&o| map(o)).collect())
    }

    pub fn finish(self, outputs: Vec<usize>) -> Result<ArithCircuit, CircuitError> {
        ArithCircuit::new(self.arity, self.gates, outputs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::frac;
    use proptest::prelude::*;

    fn q(v: &[(i64, i64)]) -> QVector {
        v.iter().map(|&(n, d)| frac(n, d)).collect()
    }

    #[test]
    fn eval_examples() {
        let c = ArithCircuit::constant(2, &[frac(1, 2)]);
        assert_eq!(c.eval(&q(&[(7, 1), (0, 1)])).unwrap(), q(&[(1, 2)]));

        let sum = ArithCircuit::new(2, vec![Gate::Add(0, 1)], vec![2]).unwrap();
        assert_eq!(sum.eval(&q(&[(1, 3), (1, 6)])).unwrap(), q(&[(1, 2)]));

        let dist = ArithCircuit::parse("ARITH 1 3 1\nCONST 1/2\nSUB 0 1\nABS 2\n3\n").unwrap();
        assert_eq!(dist.eval(&q(&[(1, 4)])).unwrap(), q(&[(1, 4)]));
        assert_eq!(dist.eval(&q(&[])).unwrap_err(), CircuitError::Arity { expected: 1, found: 0 });
    }

    #[test]
    fn structural_checks() {
        assert!(matches!(ArithCircuit::new(1, vec![Gate::Abs(1)], vec![1]), Err(CircuitError::ForwardReference { .. })));
        assert_eq!(ArithCircuit::new(1, vec![], vec![]).unwrap_err(), CircuitError::NoOutputs);
        assert_eq!(ArithCircuit::new(1, vec![], vec![3]).unwrap_err(), CircuitError::BadOutput(3));
        for (text, line) in [
            ("ARITH 1 1\n", 1),
            ("ARITH 1 2 1\nCONST 1\nFOO 0\n2\n", 3),
            ("ARITH 1 1 1\nADD 0 1\n1\n", 2),
            ("ARITH 1 1 1\nABS 0\n1 1\n", 3),
        ] {
            match ArithCircuit::parse(text) {
                Err(CircuitError::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("expected parse error for {text:?}, got {other:?}"),
            }
        }
    }

    #[test]
    fn inline_composes() {
        let half = ArithCircuit::affine(&frac(1, 2), &[frac(0, 1), frac(1, 4)]);
        let mut b = CircuitBuilder::new(2);
        let once = b.inline(&half, &[0, 1]).unwrap();
        let twice = b.inline(&half, &once).unwrap();
        let c = b.finish(twice).unwrap();
        assert_eq!(c.eval(&q(&[(1, 1), (1, 1)])).unwrap(), q(&[(1, 4), (5, 8)]));
    }

    proptest! {
        #[test]
        fn text_round_trip_and_deterministic_eval(
            consts in proptest::collection::vec((-4i64..5, 1i64..5), 1..4),
            x in proptest::collection::vec((0i64..5, 1i64..5), 2),
        ) {
            let mut b = CircuitBuilder::new(2);
            let mut last = b.add(0, 1);
            for (n, d) in consts {
                let k = b.constant(frac(n, d));
                let m = b.mul(last, k);
                let s = b.sub(m, 0);
                let a = b.abs(s);
                last = b.max(a, 1);
                last = b.min(last, m);
            }
            let c = b.finish(vec![last, 0]).unwrap();
            let again = ArithCircuit::parse(&c.to_string()).unwrap();
            prop_assert_eq!(&again, &c);
            let x: QVector = x.into_iter().map(|(n, d)| frac(n, d)).collect();
            prop_assert_eq!(c.eval(&x).unwrap(), again.eval(&x).unwrap());
        }
    }
}
