//! Independent oracles used to cross-check the library.

#![allow(dead_code)]

use num_traits::Signed;

use clslab::arith::{QVector, Rational};
use clslab::lcp::LcpInstance;

/// Every LCP solution found by trying all `2^d` complementary bases: for a
/// support set `S`, solve `M_SS y_S = -q_S` and keep `y` when `y >= 0` and
/// `q + M y >= 0`. Returned without duplicates.
pub fn brute_force_lcp(inst: &LcpInstance) -> Vec<QVector> {
    let d = inst.dim();
    let mut found: Vec<QVector> = Vec::new();
    for mask in 0u32..(1 << d) {
        let set: Vec<usize> = (0..d).filter(|i| mask >> i & 1 == 1).collect();
        let mut y = vec![Rational::from_integer(0.into()); d];
        if !set.is_empty() {
            let sub = inst.m().submatrix(&set, &set).expect("in range");
            let rhs = QVector::new(set.iter().map(|&i| -inst.q()[i].clone()).collect());
            let Some(ys) = sub.solve(&rhs).expect("square") else { continue };
            for (k, &i) in set.iter().enumerate() {
                y[i] = ys[k].clone();
            }
        }
        let y = QVector::new(y);
        if y.iter().any(|v| v.is_negative()) {
            continue;
        }
        let s = inst.slack(&y).expect("dimensions match");
        if s.iter().any(|v| v.is_negative()) {
            continue;
        }
        if !found.contains(&y) {
            found.push(y);
        }
    }
    found
}

/// All `d x d` integer matrices with entries drawn from `values`, row-major.
pub fn all_matrices(d: usize, values: &[i64]) -> Vec<Vec<i64>> {
    all_vectors(d * d, values)
}

pub fn all_vectors(len: usize, values: &[i64]) -> Vec<Vec<i64>> {
    let mut out = vec![vec![]];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|prefix: Vec<i64>| {
                values.iter().map(move |&v| {
                    let mut next = prefix.clone();
                    next.push(v);
                    next
                })
            })
            .collect();
    }
    out
}

pub fn instance(d: usize, m: &[i64], q: &[i64]) -> LcpInstance {
    let rows: Vec<&[i64]> = m.chunks(d).collect();
    LcpInstance::from_i64(&rows, q)
}
