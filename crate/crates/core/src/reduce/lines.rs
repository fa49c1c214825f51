//! EndOfMeteredLine and EndOfPotentialLine reduce to each other.

use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};

use super::{ReductionError, Reduced};
use crate::line::{
    eoml_verify, eopl_verify, solution_holds, validate_instance, BitConfig, LineInstance, LineKind, LineOracle,
    LineSolution, OracleError, MAX_WIDTH,
};

fn require_valid(inst: &LineInstance) -> Result<(), ReductionError> {
    let problems = validate_instance(inst)?;
    if problems.is_empty() {
        Ok(())
    } else {
        Err(ReductionError::InvalidSource(problems))
    }
}

/// One extra leading bit: `(0, u)` are dummies except `0^k`, `(1, u)` carries
/// the source vertex `u`.
struct MeteredToPotential {
    src: LineInstance,
}

impl MeteredToPotential {
    fn split(&self, x: BitConfig) -> (bool, BitConfig) {
        let (b, u) = x.split(1);
        (!b.is_zero(), u)
    }

    fn join(&self, b: bool, u: BitConfig) -> BitConfig {
        let head = BitConfig::from_value(b as u128, 1).expect("one bit");
        head.concat(&u).expect("width checked on construction")
    }
}

impl LineOracle for MeteredToPotential {
    fn width(&self) -> u32 {
        self.src.n() + 1
    }

    fn successor(&self, x: BitConfig) -> Result<BitConfig, OracleError> {
        let (b, u) = self.split(x);
        if x.is_zero() {
            return Ok(self.join(true, u));
        }
        if !b || self.src.v(u)?.is_zero() {
            return Ok(x);
        }
        Ok(self.join(true, self.src.s(u)?))
    }

    fn predecessor(&self, x: BitConfig) -> Result<BitConfig, OracleError> {
        let (b, u) = self.split(x);
        if !b {
            return Ok(x);
        }
        if u.is_zero() {
            return Ok(BitConfig::zero(x.width()));
        }
        if self.src.v(u)?.is_zero() {
            return Ok(x);
        }
        Ok(self.join(true, self.src.p(u)?))
    }

    fn potential(&self, x: BitConfig) -> Result<BigUint, OracleError> {
        let (b, u) = self.split(x);
        if b {
            self.src.v(u)
        } else {
            Ok(BigUint::zero())
        }
    }

    fn describe(&self) -> String {
        format!("EOML-to-EOPL lift of ({})", self.src.describe())
    }
}

/// Builds the `(n+1)`-bit EOPL instance with `m = n + 1`.
pub fn eoml_to_eopl(src: &LineInstance) -> Result<LineInstance, ReductionError> {
    if src.is_eopl() {
        return Err(ReductionError::Contract("source must be an EOML instance".into()));
    }
    if src.n() + 1 > MAX_WIDTH {
        return Err(ReductionError::Unsupported(format!("target width {} exceeds {MAX_WIDTH}", src.n() + 1)));
    }
    require_valid(src)?;
    let k = src.n() + 1;
    Ok(LineInstance::new(LineKind::Eopl { m: k }, Arc::new(MeteredToPotential { src: src.clone() })))
}

/// Maps a solution `(b, u)` of the lifted instance to the source solution at `u`.
pub fn eopl_sol_to_eoml(src: &LineInstance, target: &LineInstance, sol: &LineSolution) -> Result<LineSolution, ReductionError> {
    if !sol.is_eopl() || !solution_holds(target, sol)? {
        return Err(ReductionError::Contract(format!("{sol} is not a solution of the reduced instance")));
    }
    let (_, u) = sol.config().split(1);
    eoml_verify(src, u)?
        .ok_or_else(|| ReductionError::Invariant(format!("{sol} maps to {u}, which solves nothing in the source")))
}

/// `(u, π)` with the source vertex in the high `n` bits and a potential
/// counter in the low `m` bits.
struct PotentialToMetered {
    src: LineInstance,
    m: u32,
    s0: BitConfig,
    ss0: BitConfig,
    v_ss0: u128,
}

impl PotentialToMetered {
    fn split(&self, x: BitConfig) -> (BitConfig, u128) {
        let (u, pi) = x.split(self.src.n());
        (u, pi.value())
    }

    fn join(&self, u: BitConfig, pi: u128) -> BitConfig {
        u.concat(&BitConfig::from_value(pi, self.m).expect("counter in range")).expect("width checked on construction")
    }

    fn v(&self, u: BitConfig) -> Result<u128, OracleError> {
        let v = self.src.v(u)?;
        v.to_u128().ok_or_else(|| OracleError::Failed(format!("potential {v} does not fit in 128 bits")))
    }

    /// Cases are evaluated top to bottom; the first match wins.
    fn next(&self, x: BitConfig) -> Result<BitConfig, OracleError> {
        let (u, pi) = self.split(x);
        if (u.is_zero() && pi == 1) || u == self.s0 {
            return Ok(x);
        }
        let p2 = self.v_ss0;
        if x.is_zero() {
            return Ok(if p2 == 2 { self.join(self.ss0, 2) } else { self.join(u, 2) });
        }
        if u.is_zero() {
            return Ok(if 2 <= pi && pi + 1 < p2 {
                self.join(u, pi + 1)
            } else if pi + 1 == p2 {
                self.join(self.ss0, p2)
            } else {
                x
            });
        }
        let u2 = self.src.s(u)?;
        if u2 == u || self.src.p(u2)? != u {
            return Ok(x);
        }
        let (p, p2) = (self.v(u)?, self.v(u2)?);
        if pi == p && (p2 == p || p2 == p + 1 || p2 + 1 == p) {
            return Ok(self.join(u2, p2));
        }
        if (pi < p && p <= p2) || (p <= p2 && p2 <= pi) || (pi > p && p >= p2) || (p >= p2 && p2 >= pi) {
            return Ok(x);
        }
        if p < p2 {
            if p <= pi && pi + 1 < p2 {
                return Ok(self.join(u, pi + 1));
            }
            if pi + 1 == p2 {
                return Ok(self.join(u2, p2));
            }
        }
        if p > p2 {
            if p >= pi && pi > p2 + 1 {
                return Ok(self.join(u, pi - 1));
            }
            if pi == p2 + 1 {
                return Ok(self.join(u2, p2));
            }
        }
        Ok(x)
    }

    fn prev(&self, x: BitConfig) -> Result<BitConfig, OracleError> {
        let (u, pi) = self.split(x);
        let zero = BitConfig::zero(x.width());
        if (u.is_zero() && pi == 1) || u == self.s0 {
            return Ok(x);
        }
        let top = self.v_ss0;
        if u.is_zero() {
            if pi == 0 {
                return Ok(zero);
            }
            if pi < top && pi != 1 && pi != 2 {
                return Ok(self.join(u, pi - 1));
            }
            if pi < top && pi == 2 {
                return Ok(zero);
            }
        }
        if u == self.ss0 && pi == top {
            return Ok(if pi == 2 { zero } else { self.join(BitConfig::zero(self.src.n()), pi - 1) });
        }
        let p = self.v(u)?;
        if pi == p {
            let u2 = self.src.p(u)?;
            if u2 == u || self.src.s(u2)? != u {
                return Ok(x);
            }
            let p2 = self.v(u2)?;
            return Ok(match p2.cmp(&p) {
                std::cmp::Ordering::Equal => self.join(u2, p2),
                std::cmp::Ordering::Less => self.join(u2, p - 1),
                std::cmp::Ordering::Greater => self.join(u2, p + 1),
            });
        }
        let u2 = self.src.s(u)?;
        if u2 == u || self.src.p(u2)? != u {
            return Ok(x);
        }
        let p2 = self.v(u2)?;
        if p2 == p || (pi < p && p < p2) || (p < p2 && p2 <= pi) || (pi > p && p > p2) || (p > p2 && p2 >= pi) {
            return Ok(x);
        }
        if p < p2 && p < pi && pi < p2 {
            return Ok(self.join(u, pi - 1));
        }
        if p > p2 && p > pi && pi > p2 {
            return Ok(self.join(u, pi + 1));
        }
        Ok(x)
    }
}

impl LineOracle for PotentialToMetered {
    fn width(&self) -> u32 {
        self.src.n() + self.m
    }

    fn successor(&self, x: BitConfig) -> Result<BitConfig, OracleError> {
        self.next(x)
    }

    fn predecessor(&self, x: BitConfig) -> Result<BitConfig, OracleError> {
        self.prev(x)
    }

    fn potential(&self, x: BitConfig) -> Result<BigUint, OracleError> {
        if x.is_zero() {
            return Ok(BigUint::from(1u32));
        }
        if self.next(x)? == x && self.prev(x)? == x {
            return Ok(BigUint::zero());
        }
        Ok(BigUint::from(self.split(x).1))
    }

    fn describe(&self) -> String {
        format!("EOPL-to-EOML odometer over ({}) with m={}", self.src.describe(), self.m)
    }
}

/// Builds the `(n+m)`-bit EOML instance, unless `0^n` or `S(0^n)` already
/// solves the source, in which case that solution is returned.
pub fn eopl_to_eoml(src: &LineInstance) -> Result<Reduced<LineInstance, LineSolution>, ReductionError> {
    let Some(m) = src.m() else {
        return Err(ReductionError::Contract("source must be an EOPL instance".into()));
    };
    require_valid(src)?;
    let zero = src.zero();
    if let Some(sol) = eopl_verify(src, zero)? {
        return Ok(Reduced::Immediate(sol));
    }
    let s0 = src.s(zero)?;
    if let Some(sol) = eopl_verify(src, s0)? {
        return Ok(Reduced::Immediate(sol));
    }
    if src.n() + m > MAX_WIDTH || m >= 128 {
        return Err(ReductionError::Unsupported(format!("target width {} exceeds {MAX_WIDTH}", src.n() + m)));
    }
    let ss0 = src.s(s0)?;
    let v = src.v(ss0)?;
    let v_ss0 = v.to_u128().ok_or_else(|| ReductionError::Unsupported(format!("potential {v} too large")))?;
    let oracle = PotentialToMetered { src: src.clone(), m, s0, ss0, v_ss0 };
    Ok(Reduced::Instance(LineInstance::new(LineKind::Eoml, Arc::new(oracle))))
}

/// Maps a solution `(u, π)` of the odometer instance to the first of `u`,
/// `P(u)`, `P(P(u))` that solves the source.
pub fn eoml_sol_to_eopl(src: &LineInstance, target: &LineInstance, sol: &LineSolution) -> Result<LineSolution, ReductionError> {
    if sol.is_eopl() || !solution_holds(target, sol)? {
        return Err(ReductionError::Contract(format!("{sol} is not a solution of the reduced instance")));
    }
    let (u, _) = sol.config().split(src.n());
    let pu = src.p(u)?;
    let ppu = src.p(pu)?;
    for cand in [u, pu, ppu] {
        if let Some(found) = eopl_verify(src, cand)? {
            return Ok(found);
        }
    }
    Err(ReductionError::Invariant(format!("none of {u}, {pu}, {ppu} solves the source for {sol}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::line::{enumerate_solutions, TruthTable};

    fn bits(s: &str) -> BitConfig {
        BitConfig::parse(s).unwrap()
    }

    /// Line 000 -> 001 -> 010 with odometer 1, 2, 3; the rest self-loops.
    fn metered() -> LineInstance {
        TruthTable::parse("EOML 3\n000 001 000 1\n001 010 000 2\n010 010 001 3\n").unwrap()
    }

    #[test]
    fn lift_examples() {
        let src = metered();
        let t = eoml_to_eopl(&src).unwrap();
        assert!(validate_instance(&t).unwrap().is_empty());
        assert_eq!(t.s(bits("0000")).unwrap(), bits("1000"));
        for x in ["0011", "0101", "0111"] {
            assert_eq!((t.s(bits(x)).unwrap(), t.p(bits(x)).unwrap()), (bits(x), bits(x)));
        }
        // (1, 011) has potential 0 in the source.
        assert_eq!(t.s(bits("1011")).unwrap(), bits("1011"));
        assert_eq!(t.p(bits("1011")).unwrap(), bits("1011"));
        let sols = enumerate_solutions(&t, 8).unwrap();
        assert_eq!(sols, vec![LineSolution::R1(bits("1010"))]);
        assert_eq!(eopl_sol_to_eoml(&src, &t, &sols[0]).unwrap(), LineSolution::T1(bits("010")));
    }

    #[test]
    fn lift_back_maps_potential_defects() {
        // 000 -> 001 -> 010 with odometer 1, 3, 2: a jump, then a drop.
        let src = TruthTable::parse("EOML 3\n000 001 000 1\n001 010 000 3\n010 010 001 2\n").unwrap();
        let t = eoml_to_eopl(&src).unwrap();
        let sols = enumerate_solutions(&t, 8).unwrap();
        assert!(sols.contains(&LineSolution::R2(bits("1001"))), "{sols:?}");
        assert_eq!(eopl_sol_to_eoml(&src, &t, &LineSolution::R2(bits("1001"))).unwrap(), LineSolution::T3(bits("001")));

        // 001 sits after a zero-potential vertex 010 that the lift self-loops.
        let src = TruthTable::parse("EOML 3\n000 001 000 1\n001 011 010 4\n010 001 010 0\n011 011 001 5\n").unwrap();
        let t = eoml_to_eopl(&src).unwrap();
        for sol in enumerate_solutions(&t, 8).unwrap() {
            let back = eopl_sol_to_eoml(&src, &t, &sol).unwrap();
            assert!(solution_holds(&src, &back).unwrap());
        }
        assert!(eopl_sol_to_eoml(&src, &t, &LineSolution::R1(bits("0000"))).is_err());
    }

    /// `0 -> 1 -> 2 -> 3` on two bits with potentials `v`.
    fn potential_line(v: [u32; 4], m: u32) -> LineInstance {
        let text = format!("EOPL 2 {m}\n00 01 00 {}\n01 10 00 {}\n10 11 01 {}\n11 11 10 {}\n", v[0], v[1], v[2], v[3]);
        TruthTable::parse(&text).unwrap()
    }

    fn odometer(src: &LineInstance) -> LineInstance {
        match eopl_to_eoml(src).unwrap() {
            Reduced::Instance(t) => t,
            Reduced::Immediate(s) => panic!("unexpected immediate {s}"),
        }
    }

    fn cfg(u: &str, pi: u128, m: u32) -> BitConfig {
        bits(u).concat(&BitConfig::from_value(pi, m).unwrap()).unwrap()
    }

    #[test]
    fn odometer_start_edge() {
        let src = potential_line([0, 1, 2, 3], 2);
        let t = odometer(&src);
        assert!(validate_instance(&t).unwrap().is_empty());
        assert_eq!(t.s(cfg("00", 0, 2)).unwrap(), cfg("10", 2, 2));
        assert_eq!(t.p(cfg("10", 2, 2)).unwrap(), cfg("00", 0, 2));
        for pi in 0..4 {
            let x = cfg("01", pi, 2);
            assert_eq!((t.s(x).unwrap(), t.p(x).unwrap(), t.v(x).unwrap()), (x, x, BigUint::zero()));
        }
        let sols = enumerate_solutions(&t, 10).unwrap();
        assert_eq!(sols, vec![LineSolution::T1(cfg("11", 3, 2))]);
        assert_eq!(eoml_sol_to_eopl(&src, &t, &sols[0]).unwrap(), LineSolution::R1(bits("11")));
    }

    #[test]
    fn odometer_interpolates_jumps() {
        let src = potential_line([0, 1, 4, 7], 3);
        let t = odometer(&src);
        // V(S(S(0))) = 4: the start walks (00,2) -> (00,3) -> (10,4).
        assert_eq!(t.s(cfg("00", 0, 3)).unwrap(), cfg("00", 2, 3));
        assert_eq!(t.s(cfg("00", 2, 3)).unwrap(), cfg("00", 3, 3));
        assert_eq!(t.s(cfg("00", 3, 3)).unwrap(), cfg("10", 4, 3));
        // 10 -> 11 with 4 -> 7: (10,4) -> (10,5) -> (10,6) -> (11,7).
        let chain = [cfg("10", 4, 3), cfg("10", 5, 3), cfg("10", 6, 3), cfg("11", 7, 3)];
        for w in chain.windows(2) {
            assert_eq!(t.s(w[0]).unwrap(), w[1]);
            assert_eq!(t.p(w[1]).unwrap(), w[0]);
            assert_eq!(t.v(w[1]).unwrap(), t.v(w[0]).unwrap() + 1u32);
        }
        assert_eq!(t.v(cfg("00", 0, 3)).unwrap(), BigUint::from(1u32));
        let sols = enumerate_solutions(&t, 10).unwrap();
        assert_eq!(sols, vec![LineSolution::T1(cfg("11", 7, 3))]);
    }

    #[test]
    fn odometer_back_maps_drops() {
        let src = potential_line([0, 1, 4, 2], 3);
        let t = odometer(&src);
        let sols = enumerate_solutions(&t, 10).unwrap();
        assert!(!sols.is_empty());
        for sol in &sols {
            let back = eoml_sol_to_eopl(&src, &t, sol).unwrap();
            assert!(solution_holds(&src, &back).unwrap(), "{sol} -> {back}");
        }
        assert!(sols.iter().any(|s| eoml_sol_to_eopl(&src, &t, s).unwrap() == LineSolution::R2(bits("10"))));
    }

    #[test]
    fn trivial_sources_are_returned() {
        // S(0) = 01 is already an R2: V drops from 1 to 0 at 10.
        let src = potential_line([0, 1, 1, 3], 2);
        assert!(matches!(eopl_to_eoml(&src).unwrap(), Reduced::Immediate(LineSolution::R2(_))));
        let end = TruthTable::parse("EOPL 2 2\n00 01 00 0\n01 01 00 1\n").unwrap();
        assert_eq!(eopl_to_eoml(&end).unwrap().instance().map(|_| ()), None);
    }
}
