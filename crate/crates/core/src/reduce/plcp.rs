//! P-LCP to EndOfPotentialLine.
//!
//! Configurations are `2d`-bit strings. The first half says which bound of
//! each label is tight (`1` for `s_i = 0`), the second half is a one-hot
//! duplicate label (all zero when `z = 0`).

use std::collections::BTreeSet;
use std::sync::Arc;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::{ReductionError, Reduced};
use crate::arith::{floor_int, QMatrix, QVector, Rational};
use crate::lcp::{
    extract_q2, lemke_pivot, lemke_start, LcpError, LcpInstance, LcpOutcome, LemkeVertex, Orientation, Orientor,
    PivotResult, TieBreak, Var,
};
use crate::line::{eopl_verify, validate_instance, BitConfig, LineInstance, LineKind, LineOracle, LineSolution, OracleError};

/// Everything the reduced instance's procedures need: the (integer-scaled)
/// source, `Δ`, the potential width `m` and the calibrated orientation.
#[derive(Debug, Clone)]
pub struct PlcpEoplContext {
    source: LcpInstance,
    inst: LcpInstance,
    scale: BigInt,
    i_max: BigInt,
    delta: BigInt,
    m: u32,
    start: LemkeVertex,
    u0: BitConfig,
    orientor: Orientor,
}

fn scaled(inst: &LcpInstance) -> Result<(LcpInstance, BigInt), LcpError> {
    let entries = inst.m().entries().iter().chain(inst.q().iter());
    let k = entries.fold(BigInt::one(), |acc, r| acc.lcm(r.denom()));
    if k.is_one() {
        return Ok((inst.clone(), k));
    }
    let kr = Rational::from_integer(k.clone());
    let d = inst.dim();
    let m = QMatrix::new(d, d, inst.m().entries().iter().map(|r| r * &kr).collect())?;
    Ok((LcpInstance::new(m, inst.q().scale(&kr))?, k))
}

impl PlcpEoplContext {
    /// Fails on `q >= 0` (no start vertex) and on a degenerate start.
    pub fn new(source: &LcpInstance) -> Result<Self, ReductionError> {
        let d = source.dim();
        if 2 * d > crate::line::MAX_WIDTH as usize {
            return Err(ReductionError::Unsupported(format!("dimension {d} needs more than {} bits", crate::line::MAX_WIDTH)));
        }
        if source.q().iter().all(|qi| !qi.is_negative()) {
            return Err(ReductionError::Contract("q >= 0: y = 0 solves the instance and there is no Lemke path".into()));
        }
        let (inst, scale) = scaled(source)?;
        let i_max = inst
            .m()
            .entries()
            .iter()
            .chain(inst.q().iter())
            .map(|r| r.numer().abs())
            .max()
            .expect("nonempty");
        let n = 2 * d as u64;
        let factorial: BigInt = (1..=n).map(BigInt::from).product();
        let delta: BigInt = factorial * num_traits::pow(i_max.clone(), 2 * d + 1) + 1;
        let bound: BigUint = (num_traits::pow(delta.clone(), 3) * 2u32).to_biguint().expect("positive");
        let m = (bound - 1u32).bits() as u32;
        let start = lemke_start(&inst)?;
        let orientor = Orientor::new(&inst, TieBreak::Strict)?;
        let u0 = itoe_bits(d, start.y(), start.s())
            .ok_or_else(|| ReductionError::Invariant(format!("start vertex {start} has no configuration")))?;
        Ok(PlcpEoplContext { source: source.clone(), inst, scale, i_max, delta, m, start, u0, orientor })
    }

    pub fn source(&self) -> &LcpInstance {
        &self.source
    }

    pub fn d(&self) -> usize {
        self.source.dim()
    }

    /// Configuration width `2d`.
    pub fn n(&self) -> u32 {
        2 * self.d() as u32
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn i_max(&self) -> &BigInt {
        &self.i_max
    }

    pub fn delta(&self) -> &BigInt {
        &self.delta
    }

    /// Common denominator the data was multiplied by (1 for integer data).
    pub fn scale(&self) -> &BigInt {
        &self.scale
    }

    /// Configuration of the first vertex of the Lemke path.
    pub fn start_config(&self) -> BitConfig {
        self.u0
    }

    pub fn start(&self) -> &LemkeVertex {
        &self.start
    }

    /// The polytope vertex named by `u` (in the scaled instance), or `None`
    /// for `0^n` and for invalid configurations.
    pub fn vertex(&self, u: BitConfig) -> Result<Option<LemkeVertex>, LcpError> {
        let d = self.d();
        if u.width() != self.n() {
            return Err(LcpError::Invalid(format!("configuration {u} has width {}, expected {}", u.width(), self.n())));
        }
        if u.is_zero() {
            return Ok(None);
        }
        let (first, second) = u.split(d as u32);
        if second.count_ones() > 1 {
            return Ok(None);
        }
        let mut tight = BTreeSet::new();
        match (0..d).find(|&i| second.get(i as u32)) {
            None => {
                tight.insert(Var::Z);
            }
            Some(l) => {
                tight.insert(Var::Y(l));
                tight.insert(Var::S(l));
            }
        }
        for i in 0..d {
            tight.insert(if first.get(i as u32) { Var::S(i) } else { Var::Y(i) });
        }
        let v = match LemkeVertex::from_tight(&self.inst, tight, TieBreak::Strict) {
            Ok(v) => v,
            Err(LcpError::Singular(_)) => return Ok(None),
            Err(e) => return Err(e),
        };
        let feasible = v.y().iter().chain(v.s().iter()).all(|c| !c.is_negative()) && !v.z().is_negative();
        if !feasible || itoe_bits(d, v.y(), v.s()) != Some(u) {
            return Ok(None);
        }
        Ok(Some(v))
    }

    pub fn is_valid_config(&self, u: BitConfig) -> Result<bool, LcpError> {
        Ok(u.is_zero() || self.vertex(u)?.is_some())
    }

    /// The point named by `u`, in the source's units. `0^n` gives
    /// `(0, q + z0 + 1, z0 + 1)` and invalid configurations give all zeros.
    pub fn etoi(&self, u: BitConfig) -> Result<(QVector, QVector, Rational), LcpError> {
        let d = self.d();
        let k = Rational::from_integer(self.scale.clone());
        if u.is_zero() {
            let z = self.start.z() / &k + Rational::one();
            let s = self.source.q().iter().map(|qi| qi + &z).collect();
            return Ok((QVector::zeros(d), s, z));
        }
        Ok(match self.vertex(u)? {
            Some(v) => (v.y().clone(), v.s().iter().map(|c| c / &k).collect(), v.z() / &k),
            None => (QVector::zeros(d), QVector::zeros(d), Rational::zero()),
        })
    }

    /// Configuration of a feasible vertex; `None` (the invalid sentinel) when
    /// some `y_i·s_i != 0` or more than one label is doubled. The pattern of
    /// zeros determines `z`'s role, so `z` itself is not consulted.
    pub fn itoe(&self, y: &QVector, s: &QVector, _z: &Rational) -> Option<BitConfig> {
        itoe_bits(self.d(), y, s)
    }

    fn config_of(&self, v: &LemkeVertex) -> Result<BitConfig, LcpError> {
        itoe_bits(self.d(), v.y(), v.s()).ok_or_else(|| LcpError::Internal(format!("vertex {v} has no configuration")))
    }

    /// The neighbour across the oriented edge leaving (`Forward`) or
    /// entering (`Backward`) `x`, if that edge is bounded.
    fn neighbour(&self, x: &LemkeVertex, dir: Orientation) -> Result<Option<LemkeVertex>, LcpError> {
        let entering = match x.dup_label() {
            None => {
                if self.orientor.orient(x, Var::Z)? != dir {
                    return Ok(None);
                }
                Var::Z
            }
            Some(l) => {
                if self.orientor.orient(x, Var::Y(l))? == dir {
                    Var::Y(l)
                } else {
                    Var::S(l)
                }
            }
        };
        Ok(match lemke_pivot(&self.inst, x, entering)? {
            PivotResult::Vertex { next, .. } => Some(next),
            PivotResult::Ray { .. } => None,
        })
    }

    pub fn successor(&self, u: BitConfig) -> Result<BitConfig, LcpError> {
        if u.is_zero() {
            return Ok(self.u0);
        }
        let Some(x) = self.vertex(u)? else { return Ok(u) };
        match self.neighbour(&x, Orientation::Forward)? {
            Some(next) if next.z() < x.z() => self.config_of(&next),
            _ => Ok(u),
        }
    }

    pub fn predecessor(&self, u: BitConfig) -> Result<BitConfig, LcpError> {
        if u.is_zero() {
            return Ok(u);
        }
        let Some(x) = self.vertex(u)? else { return Ok(u) };
        if x.tight() == self.start.tight() {
            return Ok(BitConfig::zero(self.n()));
        }
        match self.neighbour(&x, Orientation::Backward)? {
            Some(prev) if prev.z() > x.z() => self.config_of(&prev),
            _ => Ok(u),
        }
    }

    /// `⌊Δ²(Δ − z)⌋` on valid configurations other than `0^n`, else 0.
    pub fn potential(&self, u: BitConfig) -> Result<BigUint, LcpError> {
        let Some(x) = self.vertex(u)? else { return Ok(BigUint::zero()) };
        let delta = Rational::from_integer(self.delta.clone());
        let value = floor_int(&(&delta * &delta * (&delta - x.z())));
        value
            .to_biguint()
            .ok_or_else(|| LcpError::Internal(format!("z = {} exceeds Delta = {}", x.z(), self.delta)))
    }
}

fn itoe_bits(d: usize, y: &QVector, s: &QVector) -> Option<BitConfig> {
    if (0..d).any(|i| !(&y[i] * &s[i]).is_zero()) {
        return None;
    }
    let doubled: Vec<usize> = (0..d).filter(|&i| y[i].is_zero() && s[i].is_zero()).collect();
    if doubled.len() > 1 {
        return None;
    }
    let mut u = BitConfig::zero(2 * d as u32);
    for i in (0..d).filter(|&i| s[i].is_zero()) {
        u = u.with(i as u32, true);
    }
    if let [l] = doubled.as_slice() {
        u = u.with((d + l) as u32, true);
    }
    Some(u)
}

fn oracle_error(e: LcpError) -> OracleError {
    match e {
        LcpError::Degenerate { detail } => OracleError::Degenerate(detail),
        other => OracleError::Failed(other.to_string()),
    }
}

struct PlcpOracle(Arc<PlcpEoplContext>);

impl LineOracle for PlcpOracle {
    fn width(&self) -> u32 {
        self.0.n()
    }

    fn successor(&self, x: BitConfig) -> Result<BitConfig, OracleError> {
        self.0.successor(x).map_err(oracle_error)
    }

    fn predecessor(&self, x: BitConfig) -> Result<BitConfig, OracleError> {
        self.0.predecessor(x).map_err(oracle_error)
    }

    fn potential(&self, x: BitConfig) -> Result<BigUint, OracleError> {
        self.0.potential(x).map_err(oracle_error)
    }

    fn describe(&self) -> String {
        let c = &self.0;
        format!("P-LCP reduction: d={} Delta={} m={} start={}", c.d(), c.delta, c.m, c.u0)
    }
}

/// A reduced instance together with the context its back-map needs.
#[derive(Debug, Clone)]
pub struct PlcpReduction {
    pub ctx: Arc<PlcpEoplContext>,
    pub target: LineInstance,
}

/// Builds the EOPL instance, or returns `Q1(0)` at once when `q >= 0`.
pub fn plcp_to_eopl(inst: &LcpInstance) -> Result<Reduced<PlcpReduction, LcpOutcome>, ReductionError> {
    if inst.q().iter().all(|qi| !qi.is_negative()) {
        return Ok(Reduced::Immediate(LcpOutcome::Q1(QVector::zeros(inst.dim()))));
    }
    let ctx = Arc::new(PlcpEoplContext::new(inst)?);
    let target = LineInstance::new(LineKind::Eopl { m: ctx.m() }, Arc::new(PlcpOracle(ctx.clone())));
    let problems = validate_instance(&target)?;
    if !problems.is_empty() {
        return Err(ReductionError::Invariant(problems.join("; ")));
    }
    Ok(Reduced::Instance(PlcpReduction { ctx, target }))
}

/// Maps an R1 solution of the reduced instance back to `Q1` (when `z = 0`)
/// or to a `Q2` witness found around the vertex where `z` turned.
pub fn eopl_sol_to_plcp(red: &PlcpReduction, u: BitConfig) -> Result<LcpOutcome, ReductionError> {
    if u.is_zero() {
        return Err(ReductionError::Contract("0^n does not name a vertex".into()));
    }
    match eopl_verify(&red.target, u)? {
        None => return Err(ReductionError::Contract(format!("{u} is not a solution of the reduced instance"))),
        Some(LineSolution::R2(_)) => {
            return Err(ReductionError::Invariant(format!("{u} is an R2 solution, which the reduction rules out")))
        }
        Some(_) => {}
    }
    let ctx = &red.ctx;
    let x = ctx
        .vertex(u)?
        .ok_or_else(|| ReductionError::Invariant(format!("solution {u} is not a valid configuration")))?;
    let outcome = if x.z().is_zero() {
        LcpOutcome::Q1(x.y().clone())
    } else {
        let l = x.dup_label().ok_or_else(|| ReductionError::Invariant(format!("{x} has z > 0 but no duplicate label")))?;
        let mut around = vec![x.clone()];
        let mut ray = None;
        for e in [Var::Y(l), Var::S(l)] {
            match lemke_pivot(&ctx.inst, &x, e)? {
                PivotResult::Vertex { next, .. } => around.push(next),
                PivotResult::Ray { dy, .. } => ray = Some(dy),
            }
        }
        let refs: Vec<&LemkeVertex> = around.iter().collect();
        match extract_q2(&ctx.inst, &refs, ray.as_ref())? {
            LcpOutcome::Q2 { set, .. } => {
                let minor = ctx.source.m().principal_minor(&set).map_err(LcpError::from)?;
                LcpOutcome::Q2 { set, minor }
            }
            q1 => q1,
        }
    };
    if !outcome.verify(&ctx.source)? {
        return Err(ReductionError::Invariant(format!("back-mapped {outcome} does not verify")));
    }
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::int;
    use crate::line::{enumerate_solutions, follow_line};
    use num_traits::ToPrimitive;

    fn bits(s: &str) -> BitConfig {
        BitConfig::parse(s).unwrap()
    }

    fn one_dim() -> PlcpReduction {
        plcp_to_eopl(&LcpInstance::from_i64(&[&[1]], &[-1])).unwrap().instance().unwrap()
    }

    #[test]
    fn one_dimensional_context() {
        let red = one_dim();
        let ctx = &red.ctx;
        assert_eq!(ctx.delta(), &BigInt::from(3));
        // 2·27 = 54 needs 6 bits.
        assert_eq!(ctx.m(), 6);
        assert!(ctx.is_valid_config(bits("00")).unwrap());
        assert_eq!(ctx.start_config(), bits("11"));
        assert!(ctx.is_valid_config(bits("11")).unwrap());
        assert_eq!(red.target.v(bits("00")).unwrap(), BigUint::zero());
        assert_eq!(red.target.v(bits("11")).unwrap(), BigUint::from(18u32));
        assert_eq!(red.target.v(bits("10")).unwrap(), BigUint::from(27u32));
        // y1 = 0 and s1 = 0 with z = 0 is infeasible for q = -1.
        assert!(!ctx.is_valid_config(bits("01")).unwrap());
        assert_eq!(red.target.s(bits("01")).unwrap(), bits("01"));
        assert_eq!(red.target.p(bits("01")).unwrap(), bits("01"));
    }

    #[test]
    fn one_dimensional_pipeline() {
        let red = one_dim();
        let res = follow_line(&red.target, 16).unwrap();
        assert_eq!(res.solution, LineSolution::R1(bits("10")));
        assert_eq!(eopl_sol_to_plcp(&red, bits("10")).unwrap(), LcpOutcome::Q1(QVector::from_i64s(&[1])));
        assert!(matches!(eopl_sol_to_plcp(&red, bits("00")), Err(ReductionError::Contract(_))));
        assert!(matches!(eopl_sol_to_plcp(&red, bits("11")), Err(ReductionError::Contract(_))));
    }

    #[test]
    fn round_trip_on_start_vertex() {
        let red = one_dim();
        let ctx = &red.ctx;
        let (y, s, z) = ctx.etoi(bits("11")).unwrap();
        assert_eq!((y.clone(), s.clone(), z.clone()), (QVector::from_i64s(&[0]), QVector::from_i64s(&[0]), int(1)));
        assert_eq!(ctx.itoe(&y, &s, &z), Some(bits("11")));
        assert_eq!(ctx.itoe(&QVector::from_i64s(&[1]), &QVector::from_i64s(&[2]), &int(0)), None);
        assert_eq!(ctx.itoe(&QVector::from_i64s(&[1]), &QVector::from_i64s(&[0]), &int(0)), Some(bits("10")));
    }

    #[test]
    fn two_duplicate_bits_are_invalid() {
        let inst = LcpInstance::from_i64(&[&[2, 1], &[1, 2]], &[-1, -3]);
        let red = plcp_to_eopl(&inst).unwrap().instance().unwrap();
        for first in ["00", "01", "10", "11"] {
            assert!(!red.ctx.is_valid_config(bits(&format!("{first}11"))).unwrap());
        }
        let sols = enumerate_solutions(&red.target, 4).unwrap();
        assert!(sols.iter().all(|s| matches!(s, LineSolution::R1(_))), "{sols:?}");
    }

    #[test]
    fn zero_matrix_ends_in_q2() {
        let inst = LcpInstance::from_i64(&[&[0]], &[-1]);
        let red = plcp_to_eopl(&inst).unwrap().instance().unwrap();
        let res = follow_line(&red.target, 16).unwrap();
        assert_eq!(res.solution, LineSolution::R1(bits("11")));
        let out = eopl_sol_to_plcp(&red, bits("11")).unwrap();
        assert_eq!(out, LcpOutcome::Q2 { set: vec![0], minor: int(0) });
    }

    #[test]
    fn trivial_and_degenerate_sources() {
        let trivial = plcp_to_eopl(&LcpInstance::from_i64(&[&[1]], &[2])).unwrap();
        assert!(matches!(trivial, Reduced::Immediate(LcpOutcome::Q1(_))));
        let tied = LcpInstance::from_i64(&[&[1, 0], &[0, 1]], &[-1, -1]);
        assert!(plcp_to_eopl(&tied).unwrap_err().is_degenerate());
    }

    #[test]
    fn rational_data_is_scaled() {
        let half = LcpInstance::new(
            QMatrix::from_rows(vec![vec![Rational::new(1.into(), 2.into())]]).unwrap(),
            QVector::new(vec![Rational::new((-1).into(), 3.into())]),
        )
        .unwrap();
        let red = plcp_to_eopl(&half).unwrap().instance().unwrap();
        assert_eq!(red.ctx.scale(), &BigInt::from(6));
        let res = follow_line(&red.target, 16).unwrap();
        let out = eopl_sol_to_plcp(&red, res.solution.config()).unwrap();
        assert_eq!(out, LcpOutcome::Q1(QVector::new(vec![Rational::new(2.into(), 3.into())])));
        let (_, _, z) = red.ctx.etoi(red.ctx.start_config()).unwrap();
        assert_eq!(z, Rational::new(1.into(), 3.into()));
        assert!(red.ctx.i_max().to_u32() == Some(3));
    }
}
