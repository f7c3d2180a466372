//! Orthonormal function systems.
//!
//! * piecewise constants `I_{D,k} = sqrt(D) 1[k/D, (k+1)/D)` over all integers `k`
//! * the Fourier system `g_0 = 1`, `g_{2p-1} = sqrt2 cos(2 pi p x)`, `g_{2p} = sqrt2 sin(2 pi p x)` on `[0, 1]`
//! * the cosine system `c_0 = 1`, `c_l = sqrt2 cos(l pi x)` on `[0, 1]`
//! * shifted normalized Legendre polynomials `phi_l(x) = sqrt(2l + 1) P_l(2x - 1)` on `[0, 1]`

use std::collections::BTreeMap;
use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, GofError, Result};
use crate::special::{CompensatedSum, TWO_PI};

/// Highest Legendre degree evaluated by the three-term recurrence.
pub const MAX_LEGENDRE_DEGREE: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisFamily {
    PiecewiseConstant,
    Fourier,
    Cosine,
    Legendre,
}

impl BasisFamily {
    /// Families defined only on `[0, 1]`.
    pub fn is_dense(self) -> bool {
        !matches!(self, BasisFamily::PiecewiseConstant)
    }
}

/// `k = floor(D x)`, so that `x` lies in `[k/D, (k+1)/D)`.
pub fn bin_index(x: f64, degree: u32) -> Result<i64> {
    bin_index_bounded(x, degree, None)
}

/// As [`bin_index`], but an observation sitting exactly on `upper_edge` is put
/// in the last bin below that edge instead of opening a new one.
pub fn bin_index_bounded(x: f64, degree: u32, upper_edge: Option<f64>) -> Result<i64> {
    if degree == 0 {
        return Err(invalid("piecewise-constant degree must be at least 1"));
    }
    if !x.is_finite() {
        return Err(invalid(format!("non-finite observation {x}")));
    }
    Ok(raw_bin(x, degree as f64, upper_edge))
}

#[inline]
pub(crate) fn raw_bin(x: f64, degree: f64, upper_edge: Option<f64>) -> i64 {
    match upper_edge {
        Some(edge) if x == edge => (degree * edge).ceil() as i64 - 1,
        _ => (degree * x).floor() as i64,
    }
}

fn check_unit(x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(invalid(format!("observation {x} outside [0, 1]")))
    }
}

pub fn fourier_eval(l: usize, x: f64) -> Result<f64> {
    check_unit(x)?;
    Ok(fourier_unchecked(l, x))
}

#[inline]
fn fourier_unchecked(l: usize, x: f64) -> f64 {
    if l == 0 {
        return 1.0;
    }
    let p = l.div_ceil(2) as f64;
    let arg = TWO_PI * p * x;
    if l % 2 == 1 {
        SQRT_2 * arg.cos()
    } else {
        SQRT_2 * arg.sin()
    }
}

pub fn cosine_eval(l: usize, x: f64) -> Result<f64> {
    check_unit(x)?;
    Ok(if l == 0 { 1.0 } else { SQRT_2 * (l as f64 * PI * x).cos() })
}

pub fn legendre_eval(l: usize, x: f64) -> Result<f64> {
    if l > MAX_LEGENDRE_DEGREE {
        return Err(GofError::UnsupportedDegree {
            degree: l,
            max: MAX_LEGENDRE_DEGREE,
        });
    }
    check_unit(x)?;
    let mut buf = [0.0; MAX_LEGENDRE_DEGREE + 1];
    legendre_values(x, l, &mut buf);
    Ok(buf[l])
}

/// Fill `out[0..=max]` with `phi_0(x), ..., phi_max(x)` (Bonnet recurrence).
pub(crate) fn legendre_values(x: f64, max: usize, out: &mut [f64]) {
    let t = 2.0 * x - 1.0;
    let (mut prev, mut cur) = (1.0, t);
    out[0] = 1.0;
    if max >= 1 {
        out[1] = 3f64.sqrt() * t;
    }
    for k in 1..max {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0) * t * cur - kf * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
        out[k + 1] = (2.0 * kf + 3.0).sqrt() * next;
    }
}

/// Fill `out[0..=degree]` with the Fourier functions `g_l(x)`.
pub(crate) fn fourier_values(x: f64, degree: usize, out: &mut [f64]) {
    out[0] = 1.0;
    let mut l = 1;
    let mut p = 1.0;
    while l <= degree {
        let (s, c) = (TWO_PI * p * x).sin_cos();
        out[l] = SQRT_2 * c;
        if l < degree {
            out[l + 1] = SQRT_2 * s;
        }
        l += 2;
        p += 1.0;
    }
}

/// Value of function `l` of a dense family at `x`.
pub fn dense_eval(family: BasisFamily, l: usize, x: f64) -> Result<f64> {
    match family {
        BasisFamily::Fourier => fourier_eval(l, x),
        BasisFamily::Cosine => cosine_eval(l, x),
        BasisFamily::Legendre => legendre_eval(l, x),
        BasisFamily::PiecewiseConstant => Err(invalid("piecewise-constant family is not dense")),
    }
}

/// Per-function sums feeding the U-statistic identity
/// `sum_{i != j} p(X_i) p(X_j) = S^2 - Q`.
#[derive(Debug, Clone, PartialEq)]
pub enum BasisSums {
    /// Bin occupation counts `N_k`; here `S_k = sqrt(D) N_k` and `Q_k = D N_k`.
    Bins { degree: u32, counts: BTreeMap<i64, u64> },
    /// `S_l = sum_i p_l(X_i)` and `Q_l = sum_i p_l(X_i)^2` for `l = 0..=D`.
    Dense { sums: Vec<f64>, squares: Vec<f64> },
}

impl BasisSums {
    /// `sum_l (S_l^2 - Q_l)`, the off-diagonal part of the squared sums.
    pub fn off_diagonal(&self) -> f64 {
        match self {
            BasisSums::Bins { degree, counts } => {
                let pairs: u64 = counts.values().map(|&c| c * c.saturating_sub(1)).sum();
                *degree as f64 * pairs as f64
            }
            BasisSums::Dense { sums, squares } => {
                sums.iter().zip(squares).map(|(s, q)| s * s - q).sum()
            }
        }
    }
}

pub fn basis_sums(
    sample: &[f64],
    family: BasisFamily,
    degree: u32,
    upper_edge: Option<f64>,
) -> Result<BasisSums> {
    if sample.is_empty() {
        return Err(GofError::InsufficientSample { required: 1, got: 0 });
    }
    match family {
        BasisFamily::PiecewiseConstant => {
            let mut counts = BTreeMap::new();
            for &x in sample {
                *counts.entry(bin_index_bounded(x, degree, upper_edge)?).or_insert(0u64) += 1;
            }
            Ok(BasisSums::Bins { degree, counts })
        }
        dense => {
            let d = degree as usize;
            if dense == BasisFamily::Legendre && d > MAX_LEGENDRE_DEGREE {
                return Err(GofError::UnsupportedDegree {
                    degree: d,
                    max: MAX_LEGENDRE_DEGREE,
                });
            }
            let mut sums = vec![CompensatedSum::default(); d + 1];
            let mut squares = vec![CompensatedSum::default(); d + 1];
            let mut buf = vec![0.0; d + 1];
            for &x in sample {
                check_unit(x)?;
                match dense {
                    BasisFamily::Fourier => fourier_values(x, d, &mut buf),
                    BasisFamily::Legendre => legendre_values(x, d, &mut buf),
                    _ => {
                        for (l, b) in buf.iter_mut().enumerate() {
                            *b = if l == 0 { 1.0 } else { SQRT_2 * (l as f64 * PI * x).cos() };
                        }
                    }
                }
                for l in 0..=d {
                    sums[l].add(buf[l]);
                    squares[l].add(buf[l] * buf[l]);
                }
            }
            Ok(BasisSums::Dense {
                sums: sums.iter().map(CompensatedSum::value).collect(),
                squares: squares.iter().map(CompensatedSum::value).collect(),
            })
        }
    }
}

/// Off-diagonal collision count `sum_k N_k (N_k - 1)` for values sorted ascending.
///
/// Bin indices are monotone in the value, so equal bins form runs.
pub(crate) fn sorted_collisions(sorted: &[f64], degree: u32, upper_edge: Option<f64>) -> u64 {
    let d = degree as f64;
    let mut total = 0u64;
    let mut run = 0u64;
    let mut current = i64::MIN;
    for &x in sorted {
        let k = raw_bin(x, d, upper_edge);
        if k == current {
            run += 1;
        } else {
            total += run * run.saturating_sub(1);
            current = k;
            run = 1;
        }
    }
    total + run * run.saturating_sub(1)
}
