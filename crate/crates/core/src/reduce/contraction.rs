//! Reductions among ContinuousLocalOpt, Contraction, MetametricContraction
//! and GeneralContraction.

use num_bigint::BigInt;
use num_traits::{One, Signed};

use super::ReductionError;
use crate::arith::{frac, Rational};
use crate::circuit::problems::{
    clo_verify, contraction_verify, gc_verify, grid, mmc_verify, CircuitSolution, CloInstance, ContractionInstance,
    GcInstance, MmcInstance, Verdict, PROBE_RESOLUTION,
};
use crate::circuit::{CircuitBuilder, Norm};

fn require(verdict: Verdict, what: &str) -> Result<(), ReductionError> {
    if verdict.holds {
        Ok(())
    } else {
        Err(ReductionError::Contract(format!("{what} does not verify ({verdict})")))
    }
}

fn checked(verdict: Verdict, sol: CircuitSolution) -> Result<CircuitSolution, ReductionError> {
    if verdict.holds {
        Ok(sol)
    } else {
        Err(ReductionError::Invariant(format!("back-mapped {sol} fails: {verdict}")))
    }
}

/// `p(x) = d(f(x), x)`, `λ' = (λ+1)·δ`, `ε' = (1−c)·ε`.
pub fn gc_to_clo(inst: &GcInstance) -> Result<CloInstance, ReductionError> {
    let g = &inst.0;
    let mut b = CircuitBuilder::new(g.dim);
    let xs: Vec<usize> = (0..g.dim).collect();
    let fx = b.inline(&g.f, &xs)?;
    let args: Vec<usize> = fx.iter().chain(xs.iter()).copied().collect();
    let p = b.inline(&g.d, &args)?;
    let p = b.finish(p)?;
    let lambda = (&g.lambda + Rational::one()) * &g.delta_d;
    let eps = (Rational::one() - &g.c) * &g.eps;
    Ok(CloInstance::new(g.f.clone(), p, eps, lambda, g.norm)?)
}

pub fn clo_sol_to_gc(gc: &GcInstance, clo: &CloInstance, sol: &CircuitSolution) -> Result<CircuitSolution, ReductionError> {
    require(clo_verify(clo, sol)?, "CLO solution")?;
    let g = &gc.0;
    let back = match sol {
        CircuitSolution::C1(x) => {
            let fx = g.f.eval(x)?;
            let fixed = CircuitSolution::M1(x.clone());
            if gc_verify(gc, &fixed)?.holds {
                fixed
            } else {
                CircuitSolution::M2a(fx, x.clone())
            }
        }
        CircuitSolution::C2a(x, y) => {
            let cand = CircuitSolution::M2c(x.clone(), y.clone());
            let v = gc_verify(gc, &cand)?;
            if !v.holds && (&g.lambda + Rational::one()) * &g.delta_d < g.lambda {
                return Err(ReductionError::Unsupported(format!(
                    "C2a pair does not witness lambda-continuity because (lambda+1)·delta = {} < lambda = {}",
                    (&g.lambda + Rational::one()) * &g.delta_d,
                    g.lambda
                )));
            }
            return checked(v, cand);
        }
        CircuitSolution::C2b(x, y) => {
            let (fx, fy) = (g.f.eval(x)?, g.f.eval(y)?);
            let m2b = CircuitSolution::M2b(fx, x.clone(), fy, y.clone());
            if gc_verify(gc, &m2b)?.holds {
                m2b
            } else {
                CircuitSolution::M2c(x.clone(), y.clone())
            }
        }
        other => return Err(ReductionError::Contract(format!("{} is not a CLO solution", other.tag()))),
    };
    checked(gc_verify(gc, &back)?, back)
}

/// Smallest `k / 2^20` with `(k / 2^20)^r >= 2^(r-1)`, an upper bound on
/// `2^(1 - 1/r)`. Exact for `r = 1` and `r = ∞`.
pub fn power_mean_bound(norm: Norm) -> Rational {
    match norm {
        Norm::L1 => Rational::one(),
        Norm::LInf => frac(2, 1),
        Norm::Power(r) => {
            let scale = BigInt::one() << 20u32;
            let target = BigInt::one() << (r as usize - 1);
            let pow = |k: &BigInt| num_traits::pow(k.clone(), r as usize);
            let goal = target * num_traits::pow(scale.clone(), r as usize);
            let (mut lo, mut hi) = (scale.clone(), scale.clone() * 2);
            while &hi - &lo > BigInt::one() {
                let mid: BigInt = (&lo + &hi) / 2;
                if pow(&mid) >= goal {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            Rational::new(hi, scale)
        }
    }
}

/// `d(x, y) = p(x) + p(y) + 1`, `c = 1 − ε/4`, `ε' = ε`. The continuity
/// constant of `d` is `2^(1−1/r)·λ` (rounded up), and `f` keeps `λ`.
pub fn clo_to_mmc(inst: &CloInstance) -> Result<MmcInstance, ReductionError> {
    for x in grid(inst.dim, PROBE_RESOLUTION) {
        let px = inst.p.eval_scalar(&x)?;
        if px.is_negative() {
            return Err(ReductionError::Contract(format!("p({x}) = {px} is negative")));
        }
    }
    let n = inst.dim;
    let mut b = CircuitBuilder::new(2 * n);
    let px = b.inline(&inst.p, &(0..n).collect::<Vec<_>>())?[0];
    let py = b.inline(&inst.p, &(n..2 * n).collect::<Vec<_>>())?[0];
    let one = b.constant(Rational::one());
    let sum = b.add(px, py);
    let out = b.add(sum, one);
    let d = b.finish(vec![out])?;
    let c = Rational::one() - &inst.eps / frac(4, 1);
    let delta_d = power_mean_bound(inst.norm) * &inst.lambda;
    Ok(MmcInstance::new(inst.f.clone(), d, inst.norm, inst.eps.clone(), c, delta_d, inst.lambda.clone())?)
}

pub fn mmc_sol_to_clo(clo: &CloInstance, mmc: &MmcInstance, sol: &CircuitSolution) -> Result<CircuitSolution, ReductionError> {
    require(mmc_verify(mmc, sol)?, "MMC solution")?;
    match sol {
        CircuitSolution::M1(x) => {
            Err(ReductionError::Contract(format!("M1 at ({x}) cannot occur: the built distance is at least 1 > eps")))
        }
        CircuitSolution::M2a(x, y) => {
            for z in [x, y] {
                let cand = CircuitSolution::C1(z.clone());
                if clo_verify(clo, &cand)?.holds {
                    return Ok(cand);
                }
            }
            Err(ReductionError::Invariant(format!("neither ({x}) nor ({y}) satisfies C1")))
        }
        CircuitSolution::M2b(x, y, x2, y2) => {
            let first = CircuitSolution::C2b(x.clone(), x2.clone());
            if clo_verify(clo, &first)?.holds {
                return Ok(first);
            }
            let second = CircuitSolution::C2b(y.clone(), y2.clone());
            checked(clo_verify(clo, &second)?, second)
        }
        CircuitSolution::M2c(x, y) => {
            let cand = CircuitSolution::C2a(x.clone(), y.clone());
            checked(clo_verify(clo, &cand)?, cand)
        }
        CircuitSolution::MmViol(v) => Err(ReductionError::Contract(format!(
            "meta-metric violation (property {}) means p leaves [0,1] somewhere",
            v.property
        ))),
        other => Err(ReductionError::Contract(format!("{} is not an MMC solution", other.tag()))),
    }
}

/// Every GeneralContraction solution is a MetametricContraction solution.
pub fn mmc_to_gc(inst: &MmcInstance) -> GcInstance {
    GcInstance(inst.clone())
}

pub fn gc_sol_to_mmc(gc: &GcInstance, sol: &CircuitSolution) -> Result<CircuitSolution, ReductionError> {
    require(gc_verify(gc, sol)?, "GC solution")?;
    checked(mmc_verify(&gc.0, sol)?, sol.clone())
}

/// `p(x) = ||f(x) − x||`, `λ = c + 1`, `ε = (1 − c)·δ`; `r` must be 1 or ∞.
pub fn contraction_to_clo(inst: &ContractionInstance) -> Result<CloInstance, ReductionError> {
    if !inst.norm.is_exact() {
        return Err(ReductionError::Unsupported(format!("norm {} has no circuit form", inst.norm)));
    }
    let n = inst.dim;
    let mut b = CircuitBuilder::new(n);
    let fx = b.inline(&inst.f, &(0..n).collect::<Vec<_>>())?;
    let gaps: Vec<usize> = (0..n)
        .map(|i| {
            let diff = b.sub(fx[i], i);
            b.abs(diff)
        })
        .collect();
    let out = gaps
        .iter()
        .copied()
        .reduce(|acc, g| if inst.norm == Norm::L1 { b.add(acc, g) } else { b.max(acc, g) })
        .map_or_else(|| b.constant(Rational::from_integer(0.into())), |o| o);
    let p = b.finish(vec![out])?;
    let lambda = &inst.c + Rational::one();
    let eps = (Rational::one() - &inst.c) * &inst.delta;
    Ok(CloInstance::new(inst.f.clone(), p, eps, lambda, inst.norm)?)
}

pub fn clo_sol_to_contraction(
    contr: &ContractionInstance,
    clo: &CloInstance,
    sol: &CircuitSolution,
) -> Result<CircuitSolution, ReductionError> {
    require(clo_verify(clo, sol)?, "CLO solution")?;
    let back = match sol {
        CircuitSolution::C1(x) => {
            let fixed = CircuitSolution::CM1(x.clone());
            if contraction_verify(contr, &fixed)?.holds {
                return Ok(fixed);
            }
            CircuitSolution::CM2(contr.f.eval(x)?, x.clone())
        }
        CircuitSolution::C2a(x, y) | CircuitSolution::C2b(x, y) => CircuitSolution::CM2(x.clone(), y.clone()),
        other => return Err(ReductionError::Contract(format!("{} is not a CLO solution", other.tag()))),
    };
    checked(contraction_verify(contr, &back)?, back)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{int, QVector};
    use crate::circuit::ArithCircuit;
    use crate::circuit::problems::{check_metametric, clo_solve_iterate, mmc_fixpoint_iterate};

    fn pt(v: &[(i64, i64)]) -> QVector {
        v.iter().map(|&(n, d)| frac(n, d)).collect()
    }

    fn abs_dist() -> ArithCircuit {
        ArithCircuit::parse("ARITH 2 2 1\nSUB 0 1\nABS 2\n3\n").unwrap()
    }

    fn gc(f: ArithCircuit, c: Rational, eps: Rational, delta_d: Rational, lambda: Rational) -> GcInstance {
        GcInstance(MmcInstance::new(f, abs_dist(), Norm::L1, eps, c, delta_d, lambda).unwrap())
    }

    #[test]
    fn gc_constants() {
        let g = gc(ArithCircuit::affine(&frac(1, 2), &[int(0)]), frac(1, 2), frac(1, 4), int(2), int(1));
        let clo = gc_to_clo(&g).unwrap();
        assert_eq!(clo.eps, frac(1, 8));
        assert_eq!(clo.lambda, int(4));
        assert_eq!(clo.p.eval_scalar(&pt(&[(1, 1)])).unwrap(), frac(1, 2));
    }

    #[test]
    fn gc_identity_solves_at_once() {
        let g = gc(ArithCircuit::identity(1), frac(1, 2), frac(1, 4), int(1), int(1));
        let clo = gc_to_clo(&g).unwrap();
        assert_eq!(clo.p.eval_scalar(&pt(&[(1, 3)])).unwrap(), int(0));
        let res = clo_solve_iterate(&clo, &pt(&[(1, 3)]), 4).unwrap();
        assert_eq!((res.solution.clone(), res.iterations), (CircuitSolution::C1(pt(&[(1, 3)])), 0));
        assert_eq!(clo_sol_to_gc(&g, &clo, &res.solution).unwrap(), CircuitSolution::M1(pt(&[(1, 3)])));
    }

    #[test]
    fn gc_c1_away_from_fixpoint_gives_m2a() {
        // f(x) = 1 - x with c = 1/2 is not a contraction: C1 lands away from the fixpoint.
        let flip = ArithCircuit::affine(&int(-1), &[int(1)]);
        let g = gc(flip, frac(1, 2), frac(1, 4), int(1), int(1));
        let clo = gc_to_clo(&g).unwrap();
        let sol = CircuitSolution::C1(pt(&[(0, 1)]));
        assert!(clo_verify(&clo, &sol).unwrap().holds);
        let back = clo_sol_to_gc(&g, &clo, &sol).unwrap();
        assert_eq!(back, CircuitSolution::M2a(pt(&[(1, 1)]), pt(&[(0, 1)])));
    }

    #[test]
    fn clo_mmc_constants_and_metametric() {
        let clo = CloInstance::new(ArithCircuit::affine(&frac(1, 2), &[int(0)]), ArithCircuit::identity(1), frac(1, 2), int(1), Norm::L1)
            .unwrap();
        let mmc = clo_to_mmc(&clo).unwrap();
        assert_eq!(mmc.c, frac(7, 8));
        assert_eq!((mmc.delta_d.clone(), mmc.lambda.clone()), (int(1), int(1)));
        assert_eq!(check_metametric(&mmc.d, &grid(1, 8)).unwrap(), None);
        let res = mmc_fixpoint_iterate(&mmc, &pt(&[(1, 1)]), 5);
        // d >= 1 > eps, so the iteration cannot stop at M1; it runs out or finds M2a.
        if let Ok(r) = res {
            let back = mmc_sol_to_clo(&clo, &mmc, &r.solution).unwrap();
            assert!(clo_verify(&clo, &back).unwrap().holds);
        }
        let m2a = CircuitSolution::M2a(pt(&[(1, 4)]), pt(&[(0, 1)]));
        if mmc_verify(&mmc, &m2a).unwrap().holds {
            let back = mmc_sol_to_clo(&clo, &mmc, &m2a).unwrap();
            assert!(matches!(back, CircuitSolution::C1(_)));
        }
        assert!(matches!(
            mmc_sol_to_clo(&clo, &mmc, &CircuitSolution::M1(pt(&[(0, 1)]))),
            Err(ReductionError::Contract(_))
        ));
    }

    #[test]
    fn clo_mmc_maps_continuity_pairs() {
        // f(x) = min(1, 3x) breaks lambda = 1 between 0 and 1/4.
        let mut b = CircuitBuilder::new(1);
        let three = b.constant(int(3));
        let one = b.constant(int(1));
        let m = b.mul(three, 0);
        let out = b.min(m, one);
        let f = b.finish(vec![out]).unwrap();
        let clo = CloInstance::new(f, ArithCircuit::identity(1), frac(1, 2), int(1), Norm::L1).unwrap();
        let mmc = clo_to_mmc(&clo).unwrap();
        let m2c = CircuitSolution::M2c(pt(&[(0, 1)]), pt(&[(1, 4)]));
        assert_eq!(mmc_sol_to_clo(&clo, &mmc, &m2c).unwrap(), CircuitSolution::C2a(pt(&[(0, 1)]), pt(&[(1, 4)])));
    }

    #[test]
    fn power_mean_bounds() {
        assert_eq!(power_mean_bound(Norm::L1), int(1));
        assert_eq!(power_mean_bound(Norm::LInf), int(2));
        let b = power_mean_bound(Norm::Power(2));
        // sqrt(2) <= b < sqrt(2) + 2^-20.
        assert!(&b * &b >= int(2));
        let below = &b - Rational::new(1.into(), BigInt::one() << 20u32);
        assert!(&below * &below < int(2));
    }

    #[test]
    fn contraction_constants_and_back_maps() {
        let half = ArithCircuit::affine(&frac(1, 2), &[int(0)]);
        let ci = ContractionInstance::new(half, Norm::L1, frac(1, 2), frac(1, 2), frac(1, 2)).unwrap();
        let clo = contraction_to_clo(&ci).unwrap();
        assert_eq!((clo.eps.clone(), clo.lambda.clone()), (frac(1, 4), frac(3, 2)));
        assert_eq!(clo.p.eval_scalar(&pt(&[(1, 1)])).unwrap(), frac(1, 2));
        let res = clo_solve_iterate(&clo, &pt(&[(1, 1)]), 10).unwrap();
        let back = clo_sol_to_contraction(&ci, &clo, &res.solution).unwrap();
        assert!(contraction_verify(&ci, &back).unwrap().holds);

        let powered = ContractionInstance { norm: Norm::Power(2), ..ci };
        assert!(matches!(contraction_to_clo(&powered), Err(ReductionError::Unsupported(_))));
    }

    #[test]
    fn mmc_gc_identity() {
        let g = gc(ArithCircuit::identity(1), frac(1, 2), frac(1, 4), int(1), int(1));
        assert_eq!(mmc_to_gc(&g.0), g);
        let sol = CircuitSolution::M1(pt(&[(1, 2)]));
        assert_eq!(gc_sol_to_mmc(&g, &sol).unwrap(), sol);
    }
}
