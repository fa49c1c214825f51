use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_traits::{Signed, Zero};

use crate::arith::{QVector, Rational};

/// Norm selector. `Power(r)` is the `r`-norm for integer `r >= 2`; since its
/// value is generally irrational it is only ever handled through `r`-th powers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Norm {
    L1,
    LInf,
    Power(u32),
}

impl Norm {
    /// Whether `norm_pow` returns the norm itself rather than a power of it.
    pub fn is_exact(&self) -> bool {
        matches!(self, Norm::L1 | Norm::LInf)
    }
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Norm::L1 => write!(f, "1"),
            Norm::LInf => write!(f, "inf"),
            Norm::Power(r) => write!(f, "{r}"),
        }
    }
}

impl FromStr for Norm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "1" => Ok(Norm::L1),
            "inf" | "∞" => Ok(Norm::LInf),
            other => match other.parse::<u32>() {
                Ok(r) if r >= 2 => Ok(Norm::Power(r)),
                _ => Err(format!("unknown norm {other:?}; expected 1, inf or an integer >= 2")),
            },
        }
    }
}

/// `||v||` for `L1` and `LInf`, `||v||_r^r` for `Power(r)`.
pub fn norm_pow(v: &QVector, r: Norm) -> Rational {
    match r {
        Norm::L1 => v.iter().fold(Rational::zero(), |acc, x| acc + x.abs()),
        Norm::LInf => v.iter().map(|x| x.abs()).max().unwrap_or_else(Rational::zero),
        Norm::Power(p) => v.iter().fold(Rational::zero(), |acc, x| acc + num_traits::pow(x.abs(), p as usize)),
    }
}

/// Compares `||u||` with `k·||v||` (or with `k` when `v` is `None`), for
/// `k >= 0`. Exact for every selector.
pub fn cmp_scaled_norm(u: &QVector, k: &Rational, v: Option<&QVector>, r: Norm) -> Ordering {
    debug_assert!(!k.is_negative());
    let rhs_base = v.map_or_else(|| Rational::from_integer(1.into()), |v| norm_pow(v, r));
    let scale = match r {
        Norm::Power(p) => num_traits::pow(k.clone(), p as usize),
        _ => k.clone(),
    };
    norm_pow(u, r).cmp(&(scale * rhs_base))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{frac, int};
    use proptest::prelude::*;

    #[test]
    fn norm_examples() {
        let v: QVector = vec![frac(1, 2), frac(-1, 2)].into();
        assert_eq!(norm_pow(&v, Norm::L1), int(1));
        let w: QVector = vec![frac(1, 2), frac(-1, 3)].into();
        assert_eq!(norm_pow(&w, Norm::LInf), frac(1, 2));
        assert_eq!(norm_pow(&QVector::zeros(3), Norm::L1), int(0));
        assert_eq!(norm_pow(&QVector::zeros(3), Norm::LInf), int(0));
        assert_eq!(norm_pow(&w, Norm::Power(2)), frac(13, 36));
    }

    #[test]
    fn scaled_comparison_uses_powers() {
        let u: QVector = vec![int(3), int(4)].into();
        let v: QVector = vec![int(1), int(0)].into();
        assert_eq!(cmp_scaled_norm(&u, &int(5), Some(&v), Norm::Power(2)), Ordering::Equal);
        assert_eq!(cmp_scaled_norm(&u, &int(4), Some(&v), Norm::Power(2)), Ordering::Greater);
        assert_eq!(cmp_scaled_norm(&u, &int(7), None, Norm::L1), Ordering::Equal);
        assert_eq!(cmp_scaled_norm(&u, &int(4), None, Norm::LInf), Ordering::Equal);
    }

    #[test]
    fn selector_text() {
        for n in [Norm::L1, Norm::LInf, Norm::Power(3)] {
            assert_eq!(n.to_string().parse::<Norm>().unwrap(), n);
        }
        assert!("0".parse::<Norm>().is_err());
    }

    proptest! {
        #[test]
        fn l1_dominates_linf(v in proptest::collection::vec((-5i64..6, 1i64..7), 0..5)) {
            let v: QVector = v.into_iter().map(|(n, d)| frac(n, d)).collect();
            let l1 = norm_pow(&v, Norm::L1);
            let linf = norm_pow(&v, Norm::LInf);
            prop_assert!(l1 >= linf);
            prop_assert_eq!(l1.is_zero(), v.is_zero());
            prop_assert_eq!(linf.is_zero(), v.is_zero());
        }
    }
}
