//! Integer partitions and the partition-indexed scalars used by every series:
//! conjugates, hook-length products and generalized Pochhammer symbols.

use std::fmt;

use crate::beta::Beta;
use crate::error::{Error, Result};
use crate::numeric::LogValue;

/// A weakly decreasing sequence of positive integers.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Partition {
    parts: Vec<u32>,
}

impl Partition {
    /// Builds a partition, dropping trailing zeros. Rejects increasing
    /// sequences and interior zeros.
    pub fn new(mut parts: Vec<u32>) -> Result<Self> {
        while parts.last() == Some(&0) {
            parts.pop();
        }
        if parts.contains(&0) {
            return Err(Error::InvalidPartition(format!(
                "{parts:?} has an interior zero"
            )));
        }
        if parts.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidPartition(format!(
                "{parts:?} is not weakly decreasing"
            )));
        }
        Ok(Partition { parts })
    }

    pub(crate) fn from_parts_unchecked(parts: Vec<u32>) -> Self {
        debug_assert!(parts.windows(2).all(|w| w[0] >= w[1]));
        debug_assert!(parts.last() != Some(&0));
        Partition { parts }
    }

    pub fn empty() -> Self {
        Partition { parts: Vec::new() }
    }

    pub fn parts(&self) -> &[u32] {
        &self.parts
    }

    /// `κ_i` with 1-based `i`; zero beyond the length.
    pub fn part(&self, i: usize) -> u32 {
        debug_assert!(i >= 1);
        self.parts.get(i - 1).copied().unwrap_or(0)
    }

    pub fn weight(&self) -> usize {
        self.parts.iter().map(|&p| p as usize).sum()
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn conjugate(&self) -> Partition {
        let cols = self.parts.first().copied().unwrap_or(0);
        let parts = (1..=cols)
            .map(|j| self.parts.iter().take_while(|&&p| p >= j).count() as u32)
            .collect();
        Partition { parts }
    }

    /// Cells `(i, j)` of the Young diagram, 1-based, row by row.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.parts
            .iter()
            .enumerate()
            .flat_map(|(i, &p)| (1..=p as usize).map(move |j| (i + 1, j)))
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, p) in self.parts.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, ")")
    }
}

/// All partitions of `k` with at most `max_len` parts, in reverse
/// lexicographic order: `(k), (k-1,1), (k-2,2), (k-2,1,1), …`.
pub fn enumerate_partitions(k: usize, max_len: usize) -> Vec<Partition> {
    let mut out = Vec::new();
    let mut current = Vec::new();
    fill(k, max_len, k, &mut current, &mut out);
    out
}

fn fill(rest: usize, slots: usize, cap: usize, current: &mut Vec<u32>, out: &mut Vec<Partition>) {
    if rest == 0 {
        out.push(Partition::from_parts_unchecked(current.clone()));
        return;
    }
    if slots == 0 {
        return;
    }
    for p in (1..=rest.min(cap)).rev() {
        // the remaining slots must be able to absorb what is left
        if p * slots < rest {
            break;
        }
        current.push(p as u32);
        fill(rest - p, slots - 1, p, current, out);
        current.pop();
    }
}

pub fn conjugate(kappa: &Partition) -> Partition {
    kappa.conjugate()
}

/// Products of the upper and lower hook lengths of a partition.
///
/// With `α = 2/β`, the hooks at cell `(i, j)` are
/// `upper = κ'_j − i + α(κ_i − j + 1)` and `lower = κ'_j − i + 1 + α(κ_i − j)`.
/// Written with `α` in place of a literal `2β` these are the hooks for which
/// the identity value of the Jack polynomial satisfies the trace sum identity
/// for every β; at β = 1 both readings coincide.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HookProducts {
    pub beta: Beta,
    pub upper: f64,
    pub lower: f64,
    /// `j_κ = upper · lower`.
    pub j_kappa: f64,
    pub ln_upper: f64,
    pub ln_lower: f64,
}

impl HookProducts {
    pub fn ln_j_kappa(&self) -> f64 {
        self.ln_upper + self.ln_lower
    }
}

pub fn hook_product(kappa: &Partition, beta: Beta) -> HookProducts {
    let alpha = beta.alpha();
    let conj = kappa.conjugate();
    let (mut upper, mut lower) = (1.0, 1.0);
    let (mut ln_upper, mut ln_lower) = (0.0, 0.0);
    for (i, j) in kappa.cells() {
        let leg = f64::from(conj.part(j)) - i as f64;
        let arm = f64::from(kappa.part(i)) - j as f64;
        let hu = leg + alpha * (arm + 1.0);
        let hl = leg + 1.0 + alpha * arm;
        upper *= hu;
        lower *= hl;
        ln_upper += hu.ln();
        ln_lower += hl.ln();
    }
    HookProducts {
        beta,
        upper,
        lower,
        j_kappa: upper * lower,
        ln_upper,
        ln_lower,
    }
}

/// `(a)^β_κ = ∏_i (a − (i−1)β/2)_{κ_i}` as a finite product of rising factors.
pub fn pochhammer_beta(a: f64, kappa: &Partition, beta: Beta) -> f64 {
    let half_beta = 0.5 * beta.value();
    let mut prod = 1.0;
    for (i, &p) in kappa.parts().iter().enumerate() {
        let base = a - i as f64 * half_beta;
        for t in 0..p {
            prod *= base + f64::from(t);
        }
    }
    prod
}

/// Log-magnitude and sign of [`pochhammer_beta`], safe from overflow.
pub fn ln_pochhammer_beta(a: f64, kappa: &Partition, beta: Beta) -> LogValue {
    let half_beta = 0.5 * beta.value();
    let mut ln_abs = 0.0;
    let mut sign = 1i8;
    for (i, &p) in kappa.parts().iter().enumerate() {
        let base = a - i as f64 * half_beta;
        for t in 0..p {
            let f = base + f64::from(t);
            if f == 0.0 {
                return LogValue::ZERO;
            }
            if f < 0.0 {
                sign = -sign;
            }
            ln_abs += f.abs().ln();
        }
    }
    LogValue::from_parts(ln_abs, sign)
}
