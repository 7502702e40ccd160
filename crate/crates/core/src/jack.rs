//! Jack polynomials `C^β_κ` in the C-normalization, where
//! `Σ_{κ ⊢ k} C_κ(x) = (Σ x_i)^k`.
//!
//! Evaluation uses the branching rule for the monic normalization `P_κ`,
//!
//! ```text
//! P_λ(x_1..x_r) = Σ_{μ ≺ λ} ψ_{λ/μ} x_r^{|λ|−|μ|} P_μ(x_1..x_{r−1})
//! ```
//!
//! over partitions `μ` interlacing `λ`, followed by the conversion
//! `C_κ = α^k k! P_κ / ∏ upper hooks` with `α = 2/β`.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::beta::Beta;
use crate::error::{Error, Result};
use crate::numeric::{ln_factorial, LogValue};
use crate::partitions::{enumerate_partitions, hook_product, ln_pochhammer_beta, Partition};

/// Eigenvalues of a Hermitian matrix argument. Entries may have any sign.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSpectrum {
    values: Vec<f64>,
}

impl EigenSpectrum {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument("spectrum must be nonempty".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "spectrum entries must be finite: {values:?}"
            )));
        }
        Ok(EigenSpectrum { values })
    }

    pub fn identity(m: usize) -> Self {
        Self::scalar(1.0, m)
    }

    /// Spectrum of `c·I_m`.
    pub fn scalar(c: f64, m: usize) -> Self {
        assert!(m > 0, "dimension must be positive");
        EigenSpectrum { values: vec![c; m] }
    }

    pub fn dimension(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn trace(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn scaled(&self, c: f64) -> Self {
        EigenSpectrum {
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    /// The common value when the spectrum is a multiple of the identity.
    pub fn common_value(&self) -> Option<f64> {
        let first = self.values[0];
        self.values.iter().all(|&v| v == first).then_some(first)
    }
}

/// `g(a, b) = ∏_{t<a} (t + 1 + b/α) / (t + (b+1)/α)` and its reciprocal,
/// tabulated for `a ≤ max_a`, `b < rows`.
struct GTable {
    g: Vec<Vec<f64>>,
    ginv: Vec<Vec<f64>>,
}

impl GTable {
    fn new(alpha: f64, max_a: usize, rows: usize) -> Self {
        let mut g = Vec::with_capacity(rows);
        let mut ginv = Vec::with_capacity(rows);
        for b in 0..rows {
            let b = b as f64;
            let mut row = Vec::with_capacity(max_a + 1);
            let mut acc = 1.0;
            row.push(acc);
            for t in 0..max_a {
                let t = t as f64;
                acc *= (t + 1.0 + b / alpha) / (t + (b + 1.0) / alpha);
                row.push(acc);
            }
            ginv.push(row.iter().map(|v| 1.0 / v).collect());
            g.push(row);
        }
        GTable { g, ginv }
    }

    /// Factor of `ψ_{λ/μ}` contributed by the pair `i ≤ j` (0-based), with
    /// `lam` padded far enough that `lam[j + 1]` exists.
    #[inline]
    fn pair(&self, lam: &[u32], mu: &[u32], i: usize, j: usize) -> f64 {
        let b = j - i;
        let (g, gi) = (&self.g[b], &self.ginv[b]);
        let lj1 = lam[j + 1];
        g[(mu[i] - mu[j]) as usize]
            * g[(lam[i] - lj1) as usize]
            * gi[(lam[i] - mu[j]) as usize]
            * gi[(mu[i] - lj1) as usize]
    }
}

/// `ln(α^k k! / ∏ upper hooks)`, the factor taking `P_κ` to `C_κ`.
fn ln_p_to_c(kappa: &Partition, beta: Beta) -> f64 {
    let k = kappa.weight();
    k as f64 * beta.alpha().ln() + ln_factorial(k) - hook_product(kappa, beta).ln_upper
}

/// Value of `C^β_κ` at the eigenvalues `x`.
pub fn jack_c(kappa: &Partition, x: &EigenSpectrum, beta: Beta) -> f64 {
    let d = x.dimension();
    if kappa.len() > d {
        return 0.0;
    }
    if kappa.is_empty() {
        return 1.0;
    }
    let g = GTable::new(beta.alpha(), kappa.weight(), kappa.len());
    let mut memo = HashMap::new();
    let p = monic_value(kappa.parts(), d, x.values(), &g, &mut memo);
    p * ln_p_to_c(kappa, beta).exp()
}

/// `P_λ(x_1..x_r)` by memoized recursion on the number of variables.
fn monic_value(
    lam: &[u32],
    r: usize,
    x: &[f64],
    g: &GTable,
    memo: &mut HashMap<(Vec<u32>, usize), f64>,
) -> f64 {
    if lam.len() > r {
        return 0.0;
    }
    if lam.is_empty() {
        return 1.0;
    }
    if r == 1 {
        return x[0].powi(lam[0] as i32);
    }
    if let Some(&v) = memo.get(&(lam.to_vec(), r)) {
        return v;
    }
    let slots = lam.len().min(r - 1);
    let mut padded = lam.to_vec();
    padded.resize(slots + 1, 0);
    let weight: u32 = lam.iter().sum();

    let mut mus = Vec::new();
    let mut mu = vec![0u32; slots];
    interlacing(&padded, 0, &mut mu, &mut mus);

    let mut total = 0.0;
    for mu in mus {
        let len = mu.iter().take_while(|&&p| p > 0).count();
        let mut psi = 1.0;
        for j in 0..len {
            for i in 0..=j {
                psi *= g.pair(&padded, &mu, i, j);
            }
        }
        let mu_weight: u32 = mu.iter().sum();
        let stripped = &mu[..len];
        let sub = monic_value(stripped, r - 1, x, g, memo);
        total += psi * x[r - 1].powi((weight - mu_weight) as i32) * sub;
    }
    memo.insert((lam.to_vec(), r), total);
    total
}

fn interlacing(lam: &[u32], i: usize, mu: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if i == mu.len() {
        out.push(mu.clone());
        return;
    }
    for v in lam[i + 1]..=lam[i] {
        mu[i] = v;
        interlacing(lam, i + 1, mu, out);
    }
}

/// Closed form `C^β_κ(I_m) = α^{2k} k! (mβ/2)^β_κ / j_κ`; zero when
/// `length(κ) > m`.
pub fn jack_identity_value(kappa: &Partition, m: usize, beta: Beta) -> f64 {
    ln_jack_identity_value(kappa, m, beta).to_f64()
}

/// Log-magnitude form of [`jack_identity_value`].
pub fn ln_jack_identity_value(kappa: &Partition, m: usize, beta: Beta) -> LogValue {
    if kappa.len() > m {
        return LogValue::ZERO;
    }
    let k = kappa.weight();
    let poch = ln_pochhammer_beta(m as f64 * beta.value() / 2.0, kappa, beta);
    let ln_const = 2.0 * k as f64 * beta.alpha().ln() + ln_factorial(k)
        - hook_product(kappa, beta).ln_j_kappa();
    poch.scale_ln(ln_const)
}

/// Jack values for every partition of one degree.
#[derive(Debug, Clone)]
pub struct JackLayer {
    pub degree: usize,
    /// `enumerate_partitions(degree, max_len)`.
    pub partitions: Vec<Partition>,
    /// `C_κ(x) / s^degree`, aligned with `partitions`, where `s` is the
    /// scale reported by [`JackLayers::ln_scale`].
    pub values: Vec<f64>,
}

/// Degree-by-degree evaluation of `C^β_κ(x)` for all partitions of length at
/// most `max_len`, sharing work across partitions through cached partial
/// evaluations in fewer variables.
///
/// The spectrum is internally divided by `s = Σ|x_i|` so that every reported
/// value is bounded by one in magnitude.
pub struct JackLayers {
    beta: Beta,
    max_len: usize,
    max_degree: usize,
    next: usize,
    ln_scale: f64,
    mode: Mode,
}

enum Mode {
    Zero,
    /// `x = c·I_m`; values come from the identity closed form.
    Scalar {
        m: usize,
        negative: bool,
    },
    General(Box<Engine>),
}

impl JackLayers {
    pub fn new(x: &EigenSpectrum, beta: Beta, max_len: usize, max_degree: usize) -> Self {
        let scale: f64 = x.values().iter().map(|v| v.abs()).sum();
        let (mode, ln_scale) = if scale == 0.0 {
            (Mode::Zero, 0.0)
        } else if let Some(c) = x.common_value() {
            (
                Mode::Scalar {
                    m: x.dimension(),
                    negative: c < 0.0,
                },
                scale.ln(),
            )
        } else {
            let scaled: Vec<f64> = x
                .values()
                .iter()
                .filter(|v| **v != 0.0)
                .map(|v| v / scale)
                .collect();
            let engine = Engine::new(scaled, beta.alpha(), max_len, max_degree);
            (Mode::General(Box::new(engine)), scale.ln())
        };
        JackLayers {
            beta,
            max_len,
            max_degree,
            next: 0,
            ln_scale,
            mode,
        }
    }

    /// `ln s`; the true value of `C_κ(x)` is `value · s^{|κ|}`.
    pub fn ln_scale(&self) -> f64 {
        self.ln_scale
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }
}

impl Iterator for JackLayers {
    type Item = JackLayer;

    fn next(&mut self) -> Option<JackLayer> {
        if self.next > self.max_degree {
            return None;
        }
        let k = self.next;
        self.next += 1;
        let partitions = enumerate_partitions(k, self.max_len);
        let beta = self.beta;
        let values = match &mut self.mode {
            Mode::Zero => partitions
                .iter()
                .map(|_| if k == 0 { 1.0 } else { 0.0 })
                .collect(),
            Mode::Scalar { m, negative } => {
                let sign = if *negative && k % 2 == 1 { -1.0 } else { 1.0 };
                let ln_m = (*m as f64).ln();
                partitions
                    .iter()
                    .map(|q| {
                        let v = ln_jack_identity_value(q, *m, beta);
                        if v.is_zero() {
                            0.0
                        } else {
                            sign * (v.ln_abs - k as f64 * ln_m).exp()
                        }
                    })
                    .collect()
            }
            Mode::General(engine) => {
                let monic = engine.advance(k);
                partitions
                    .iter()
                    .map(|q| match monic.get(q) {
                        Some(&p) => p * ln_p_to_c(q, beta).exp(),
                        None => 0.0,
                    })
                    .collect()
            }
        };
        Some(JackLayer {
            degree: k,
            partitions,
            values,
        })
    }
}

/// Cached `P_λ(x_1..x_r)` for `r = 1..d`. Layer `r` holds partitions of
/// width `w_r = min(r, max_len)`, keyed by their first `w_r − 1` parts
/// (zero padded) and indexed by the last part, so each vector fills
/// contiguously as the degree grows.
struct Engine {
    x: Vec<f64>,
    pows: Vec<Vec<f64>>,
    g: GTable,
    max_len: usize,
    layers: Vec<HashMap<Vec<u32>, Vec<f64>>>,
}

impl Engine {
    fn new(x: Vec<f64>, alpha: f64, max_len: usize, max_degree: usize) -> Self {
        let pows = x
            .iter()
            .map(|&xi| {
                let mut p = Vec::with_capacity(max_degree + 1);
                let mut acc = 1.0;
                for _ in 0..=max_degree {
                    p.push(acc);
                    acc *= xi;
                }
                p
            })
            .collect();
        let d = x.len();
        let max_len = max_len.max(1);
        Engine {
            pows,
            g: GTable::new(alpha, max_degree, max_len.min(d).max(1)),
            max_len,
            layers: vec![HashMap::new(); d],
            x,
        }
    }

    fn width(&self, r: usize) -> usize {
        r.min(self.max_len)
    }

    /// Computes degree `k` in every layer and returns the full-dimension
    /// monic values of that degree.
    fn advance(&mut self, k: usize) -> HashMap<Partition, f64> {
        let d = self.x.len();
        let mut last = Vec::new();
        for r in 1..=d {
            let w = self.width(r);
            let lams = enumerate_partitions(k, w);
            let values: Vec<f64> = if r == 1 {
                lams.iter().map(|_| self.pows[0][k]).collect()
            } else {
                let prev = &self.layers[r - 2];
                let wp = self.width(r - 1);
                let pows = &self.pows[r - 1];
                let g = &self.g;
                let eval = |q: &Partition| branch(q, k, wp, prev, pows, g);
                if lams.len() >= 64 {
                    lams.par_iter().map(eval).collect()
                } else {
                    lams.iter().map(eval).collect()
                }
            };
            let layer = &mut self.layers[r - 1];
            for (q, &v) in lams.iter().zip(&values) {
                let key: Vec<u32> = (1..w).map(|i| q.part(i)).collect();
                let last_part = q.part(w) as usize;
                let slot = layer.entry(key).or_default();
                debug_assert_eq!(slot.len(), last_part);
                slot.push(v);
            }
            if r == d {
                last = lams.into_iter().zip(values).collect();
            }
        }
        last.into_iter().collect()
    }
}

/// One application of the branching rule: `P_λ` in `r` variables from the
/// cached layer in `r − 1` variables of width `wp`.
fn branch(
    lam: &Partition,
    k: usize,
    wp: usize,
    prev: &HashMap<Vec<u32>, Vec<f64>>,
    pows: &[f64],
    g: &GTable,
) -> f64 {
    let mut padded: Vec<u32> = lam.parts().to_vec();
    padded.resize(wp + 1, 0);
    let mut mu = vec![0u32; wp];
    let mut total = 0.0;
    descend(&padded, 0, 1.0, 0, &mut mu, k, prev, pows, g, &mut total);
    total
}

#[allow(clippy::too_many_arguments)]
fn descend(
    lam: &[u32],
    j: usize,
    acc: f64,
    partial: u32,
    mu: &mut [u32],
    k: usize,
    prev: &HashMap<Vec<u32>, Vec<f64>>,
    pows: &[f64],
    g: &GTable,
    total: &mut f64,
) {
    let wp = mu.len();
    let (lo, hi) = (lam[j + 1], lam[j]);
    if j + 1 < wp {
        for v in lo..=hi {
            mu[j] = v;
            let mut a = acc;
            if v > 0 {
                for i in 0..=j {
                    a *= g.pair(lam, mu, i, j);
                }
            }
            descend(lam, j + 1, a, partial + v, mu, k, prev, pows, g, total);
        }
        return;
    }
    let Some(cached) = prev.get(&mu[..j]) else {
        return;
    };
    for v in lo..=hi {
        mu[j] = v;
        let mut a = acc;
        if v > 0 {
            for i in 0..=j {
                a *= g.pair(lam, mu, i, j);
            }
        }
        let weight = (partial + v) as usize;
        *total += a * pows[k - weight] * cached[v as usize];
    }
}
