//! Seeded random instances for tests, benchmarks and the CLI's batch mode.

use num_bigint::BigUint;
use num_traits::Signed;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::arith::{int, QMatrix, QVector};
use crate::lcp::{is_p_matrix, lemke_solve, LcpInstance, LcpOutcome};
use crate::line::{BitConfig, LineInstance, LineKind, TruthTable};

/// Seed used when the caller does not pick one.
pub const DEFAULT_SEED: u64 = 0x5eed;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Integer LCP with diagonal in `1..=bound` and off-diagonal entries in
/// `-bound..=bound`, each nonzero with probability `density`; `q` has at
/// least one negative entry.
pub fn random_lcp(rng: &mut impl Rng, d: usize, bound: i64, density: f64) -> LcpInstance {
    let mut rows = vec![vec![int(0); d]; d];
    for (i, row) in rows.iter_mut().enumerate() {
        for (j, entry) in row.iter_mut().enumerate() {
            *entry = if i == j {
                int(rng.gen_range(1..=bound))
            } else if rng.gen_bool(density) {
                int(rng.gen_range(-bound..=bound))
            } else {
                int(0)
            };
        }
    }
    let q = loop {
        let q: Vec<i64> = (0..d).map(|_| rng.gen_range(-bound..=bound)).collect();
        if q.iter().any(|&x| x < 0) {
            break q;
        }
    };
    LcpInstance::new(QMatrix::from_rows(rows).expect("square"), QVector::from_i64s(&q)).expect("well formed")
}

fn p_density(d: usize) -> f64 {
    (2.0 / d as f64).min(1.0)
}

/// A P-matrix instance with entries in `-3..=3` on which Lemke's path has no
/// ratio-test ties.
pub fn random_p_lcp(rng: &mut impl Rng, d: usize) -> LcpInstance {
    loop {
        let inst = random_lcp(rng, d, 3, p_density(d));
        if !is_p_matrix(inst.m()).expect("square").is_p_matrix() {
            continue;
        }
        if lemke_solve(&inst).is_ok() {
            return inst;
        }
    }
}

/// A non-P instance, free of ties, on which Lemke's method ends in a
/// non-positive principal minor rather than a solution.
pub fn random_q2_lcp(rng: &mut impl Rng, d: usize) -> LcpInstance {
    loop {
        let mut inst = random_lcp(rng, d, 3, p_density(d));
        // A non-positive diagonal entry makes the matrix non-P outright.
        let k = rng.gen_range(0..d);
        let mut m = inst.m().clone();
        m.set(k, k, int(rng.gen_range(-2..=0)));
        inst = LcpInstance::new(m, inst.q().clone()).expect("well formed");
        if is_p_matrix(inst.m()).expect("square").is_p_matrix() {
            continue;
        }
        if let Ok(run) = lemke_solve(&inst) {
            if matches!(run.outcome, LcpOutcome::Q2 { .. }) {
                return inst;
            }
        }
    }
}

/// `count` instances from [`random_p_lcp`] with `d` cycling through `1..=max_d`.
pub fn p_lcp_batch(seed: u64, count: usize, max_d: usize) -> Vec<LcpInstance> {
    let mut r = rng(seed);
    (0..count).map(|i| random_p_lcp(&mut r, 1 + i % max_d)).collect()
}

/// `count` instances from [`random_q2_lcp`] with `d` cycling through `2..=max_d`.
pub fn q2_lcp_batch(seed: u64, count: usize, max_d: usize) -> Vec<LcpInstance> {
    let mut r = rng(seed);
    let span = max_d.max(2) - 1;
    (0..count).map(|i| random_q2_lcp(&mut r, 2 + i % span)).collect()
}

struct Graph {
    succ: Vec<u128>,
    pred: Vec<u128>,
    pot: Vec<BigUint>,
}

/// Random successor/predecessor structure on `n` bits: a line from `0^n`
/// (returned in order), further paths and cycles, and the odd corrupted pointer.
fn random_graph(rng: &mut impl Rng, n: u32) -> (Graph, Vec<u128>) {
    let size = 1usize << n;
    let mut succ: Vec<u128> = (0..size as u128).collect();
    let mut pred = succ.clone();
    let mut rest: Vec<u128> = (1..size as u128).collect();
    rest.shuffle(rng);
    let len = rng.gen_range(1..=rest.len());
    let mut main = vec![0u128];
    main.extend(rest.drain(..len));
    for w in main.windows(2) {
        succ[w[0] as usize] = w[1];
        pred[w[1] as usize] = w[0];
    }
    while !rest.is_empty() {
        let take = rng.gen_range(1..=rest.len().min(4));
        let seg: Vec<u128> = rest.drain(..take).collect();
        for w in seg.windows(2) {
            succ[w[0] as usize] = w[1];
            pred[w[1] as usize] = w[0];
        }
        if seg.len() > 1 && rng.gen_bool(0.2) {
            succ[seg[seg.len() - 1] as usize] = seg[0];
            pred[seg[0] as usize] = seg[seg.len() - 1];
        }
    }
    if rng.gen_bool(0.3) {
        let x = rng.gen_range(1..size);
        let target = rng.gen_range(0..size as u128);
        if rng.gen_bool(0.5) {
            succ[x] = target;
        } else {
            pred[x] = target;
        }
    }
    pred[0] = 0;
    (Graph { succ, pred, pot: vec![BigUint::default(); size] }, main)
}

fn into_line(g: Graph, n: u32, kind: LineKind) -> LineInstance {
    let cfg = |v: u128| BitConfig::from_value(v, n).expect("in range");
    TruthTable::from_fn(n, |x| {
        let i = x.value() as usize;
        (cfg(g.succ[i]), cfg(g.pred[i]), g.pot[i].clone())
    })
    .expect("small width")
    .into_instance(kind)
}

/// A valid EndOfMeteredLine instance on `n` bits. The main line is metered,
/// except that about half the instances carry one wrong potential on it.
pub fn random_eoml(rng: &mut impl Rng, n: u32) -> LineInstance {
    let (mut g, main) = random_graph(rng, n);
    let top = 1u64 << n;
    for p in g.pot.iter_mut() {
        *p = if rng.gen_bool(0.5) { BigUint::default() } else { rng.gen_range(0..=top).into() };
    }
    for (k, &x) in main.iter().enumerate() {
        g.pot[x as usize] = (k as u64 + 1).into();
    }
    if main.len() > 1 && rng.gen_bool(0.5) {
        let x = main[rng.gen_range(1..main.len())];
        g.pot[x as usize] = rng.gen_range(0..=top).into();
    }
    into_line(g, n, LineKind::Eoml)
}

/// A valid EndOfPotentialLine instance with `n` bits and potentials below
/// `2^m`. Potentials rise along the main line, with the occasional drop.
pub fn random_eopl(rng: &mut impl Rng, n: u32, m: u32) -> LineInstance {
    let (mut g, main) = random_graph(rng, n);
    let max = (1u64 << m) - 1;
    for p in g.pot.iter_mut() {
        *p = rng.gen_range(0..=max).into();
    }
    // Potentials rise by 1 (first step) or by 1 or 2, dropping now and then;
    // the line stops where the next value would exceed the bound.
    let mut v = 0u64;
    for (k, &x) in main.iter().enumerate() {
        g.pot[x as usize] = v.into();
        let next = match k {
            0 => 1,
            _ if rng.gen_bool(0.15) => rng.gen_range(0..=v),
            _ => v + rng.gen_range(1..=2),
        };
        if next > max {
            g.succ[x as usize] = x;
            for &rest in &main[k + 1..] {
                g.succ[rest as usize] = rest;
                g.pred[rest as usize] = rest;
            }
            break;
        }
        v = next;
    }
    g.pot[0] = BigUint::default();
    into_line(g, n, LineKind::Eopl { m })
}

/// Whether every entry of `q` is non-negative.
pub fn is_trivial(inst: &LcpInstance) -> bool {
    !inst.q().iter().any(|x| x.is_negative())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::line::validate_instance;

    #[test]
    fn seeded_generation_is_reproducible() {
        let a = random_p_lcp(&mut rng(7), 3);
        let b = random_p_lcp(&mut rng(7), 3);
        assert_eq!(a, b);
        assert!(!is_trivial(&a));
    }

    #[test]
    fn generated_lines_are_valid() {
        let mut r = rng(1);
        for n in 1..=5 {
            for _ in 0..20 {
                assert!(validate_instance(&random_eoml(&mut r, n)).unwrap().is_empty());
                assert!(validate_instance(&random_eopl(&mut r, n, 3)).unwrap().is_empty());
            }
        }
    }

    #[test]
    fn q2_instances_end_in_a_witness() {
        let inst = random_q2_lcp(&mut rng(3), 2);
        let run = lemke_solve(&inst).unwrap();
        assert!(run.outcome.verify(&inst).unwrap());
        assert!(matches!(run.outcome, LcpOutcome::Q2 { .. }));
    }
}
