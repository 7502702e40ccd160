//! Seeded sampling of the largest eigenvalue of singular beta-Wishart
//! matrices, empirical distribution utilities and a Monte Carlo check of the
//! Stiefel splitting formula.
//!
//! Entries of `X` have `β` independent real Gaussian components of variance
//! `1/β` each, so a unit-`Σ` entry has `E|x|² = 1`; this matches the density
//! exponent `−(β/2) tr Σ⁻¹XX*`. Quaternion matrices are handled through the
//! 2×2 complex block embedding `z₁ + z₂j ↦ [[z₁, z₂], [−z̄₂, z̄₁]]`.
//!
//! Randomness comes from ChaCha8 with one stream per sub-batch of
//! [`SUB_BATCH`] draws, seeded by the user seed. Batches are therefore
//! identical for identical `(spec, seed, count)` whatever the thread count.

use std::io::Write;

use nalgebra::{Complex, DMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::beta::Beta;
use crate::eigendist::WishartSpec;
use crate::error::{Error, Result};
use crate::jack::{jack_c, jack_identity_value, EigenSpectrum};
use crate::partitions::Partition;

/// Draws per RNG stream.
pub const SUB_BATCH: usize = 4096;

type C64 = Complex<f64>;

/// Largest-eigenvalue draws together with what produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    pub draws: Vec<f64>,
    pub spec: WishartSpec,
    pub seed: u64,
    pub count: usize,
}

impl SampleBatch {
    pub fn mean(&self) -> f64 {
        self.draws.iter().sum::<f64>() / self.count as f64
    }

    /// Standard error of [`SampleBatch::mean`].
    pub fn std_err(&self) -> f64 {
        std_err(&self.draws)
    }

    pub fn sorted_draws(&self) -> Vec<f64> {
        let mut v = self.draws.clone();
        v.sort_by(f64::total_cmp);
        v
    }

    /// `spec`, `seed` and `count` as `key=value` lines.
    pub fn describe(&self) -> [String; 2] {
        let sigma: Vec<String> = self.spec.sigma_eigs().iter().map(f64::to_string).collect();
        [
            format!(
                "beta={} m={} n={} sigma={}",
                self.spec.beta(),
                self.spec.m(),
                self.spec.n(),
                sigma.join(",")
            ),
            format!("seed={} count={}", self.seed, self.count),
        ]
    }

    /// Single-column CSV preceded by `#` comment lines describing the batch.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        for line in self.describe() {
            writeln!(w, "# {line}")?;
        }
        writeln!(w, "ell1")?;
        for d in &self.draws {
            writeln!(w, "{d}")?;
        }
        Ok(())
    }
}

pub(crate) fn std_err(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (var / n).sqrt()
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Runs `draw` `count` times, split across independent RNG streams.
fn parallel_draws<T, F>(count: usize, seed: u64, draw: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng) -> T + Sync,
{
    let chunks = count.div_ceil(SUB_BATCH);
    let per_chunk: Vec<Vec<T>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream_rng(seed, c as u64);
            let len = SUB_BATCH.min(count - c * SUB_BATCH);
            (0..len).map(|_| draw(&mut rng)).collect()
        })
        .collect();
    per_chunk.into_iter().flatten().collect()
}

fn normal(rng: &mut ChaCha8Rng, sd: f64) -> f64 {
    sd * rng.sample::<f64, _>(StandardNormal)
}

pub fn sample_largest_eigs(spec: &WishartSpec, count: usize, seed: u64) -> Result<SampleBatch> {
    if count == 0 {
        return Err(Error::InvalidArgument("count must be positive".into()));
    }
    let draws = parallel_draws(count, seed, |rng| largest_eig(spec, rng));
    Ok(SampleBatch {
        draws,
        spec: spec.clone(),
        seed,
        count,
    })
}

fn largest_eig(spec: &WishartSpec, rng: &mut ChaCha8Rng) -> f64 {
    let roots: Vec<f64> = spec.sigma_eigs().iter().map(|l| l.sqrt()).collect();
    let (m, n) = (spec.m(), spec.n());
    if n == 1 {
        // W has the single nonzero eigenvalue ‖x‖²
        let sd = (1.0 / spec.beta().value()).sqrt();
        let comps = spec.beta().as_u8() as usize;
        return roots
            .iter()
            .map(|r| {
                let s: f64 = (0..comps).map(|_| normal(rng, sd).powi(2)).sum();
                r * r * s
            })
            .sum();
    }
    match spec.beta() {
        Beta::Real => {
            let x = DMatrix::from_fn(m, n, |i, _| roots[i] * normal(rng, 1.0));
            (x.transpose() * &x).symmetric_eigenvalues().max()
        }
        Beta::Complex | Beta::Quaternion => {
            let x = colored_complex(spec, rng);
            (x.adjoint() * &x).symmetric_eigenvalues().max()
        }
    }
}

/// `Σ^{1/2}Z` as a complex matrix; for β = 4 this is the `2m × 2n`
/// embedding of the quaternion matrix.
fn colored_complex(spec: &WishartSpec, rng: &mut ChaCha8Rng) -> DMatrix<C64> {
    let roots: Vec<f64> = spec.sigma_eigs().iter().map(|l| l.sqrt()).collect();
    let (m, n) = (spec.m(), spec.n());
    match spec.beta() {
        Beta::Complex => {
            let sd = 0.5f64.sqrt();
            let mut x = DMatrix::zeros(m, n);
            for i in 0..m {
                for j in 0..n {
                    x[(i, j)] = C64::new(normal(rng, sd), normal(rng, sd)) * roots[i];
                }
            }
            x
        }
        _ => {
            let sd = 0.5;
            let mut x = DMatrix::zeros(2 * m, 2 * n);
            for i in 0..m {
                for j in 0..n {
                    let z1 = C64::new(normal(rng, sd), normal(rng, sd)) * roots[i];
                    let z2 = C64::new(normal(rng, sd), normal(rng, sd)) * roots[i];
                    x[(2 * i, 2 * j)] = z1;
                    x[(2 * i, 2 * j + 1)] = z2;
                    x[(2 * i + 1, 2 * j)] = -z2.conj();
                    x[(2 * i + 1, 2 * j + 1)] = z1.conj();
                }
            }
            x
        }
    }
}

/// Eigenvalues, ascending, of the `2n × 2n` embedded Gram matrix of one
/// quaternion draw. They come in equal pairs, one pair per eigenvalue of `W`.
pub fn quaternion_embedded_eigs(spec: &WishartSpec, seed: u64) -> Result<Vec<f64>> {
    if spec.beta() != Beta::Quaternion {
        return Err(Error::InvalidArgument(
            "the embedding exists only for beta = 4".into(),
        ));
    }
    let mut rng = stream_rng(seed, 0);
    let x = colored_complex(spec, &mut rng);
    let mut eigs: Vec<f64> = (x.adjoint() * &x)
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .collect();
    eigs.sort_by(f64::total_cmp);
    Ok(eigs)
}

/// Fraction of draws `≤ x`.
pub fn empirical_cdf(batch: &SampleBatch, x: f64) -> f64 {
    batch.draws.iter().filter(|&&d| d <= x).count() as f64 / batch.count as f64
}

/// Two-sided Kolmogorov–Smirnov distance between the batch and `cdf`.
pub fn ks_distance<F: Fn(f64) -> f64>(batch: &SampleBatch, cdf: F) -> f64 {
    let values: Vec<f64> = batch.sorted_draws().into_iter().map(cdf).collect();
    ks_from_sorted_cdf(&values)
}

/// KS distance given the theoretical CDF at each sorted draw, for callers
/// that can evaluate the CDF cumulatively.
pub fn ks_from_sorted_cdf(cdf_at_sorted: &[f64]) -> f64 {
    let n = cdf_at_sorted.len() as f64;
    cdf_at_sorted
        .iter()
        .enumerate()
        .map(|(i, &f)| {
            let above = (i + 1) as f64 / n - f;
            let below = f - i as f64 / n;
            above.max(below)
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplittingCheck {
    pub mc_mean: f64,
    pub exact: f64,
    pub std_err: f64,
}

/// Averages `C_κ(A H₁ B H₁*)` over Haar frames `H₁ ∈ V_{n,m}` and compares
/// with `C_κ(A) C_κ(B) / C_κ(I_m)`.
pub fn stiefel_splitting_check(
    a: &EigenSpectrum,
    b: &EigenSpectrum,
    kappa: &Partition,
    beta: Beta,
    count: usize,
    seed: u64,
) -> Result<SplittingCheck> {
    let (m, n) = (a.dimension(), b.dimension());
    if beta == Beta::Quaternion {
        return Err(Error::InvalidArgument(
            "the splitting check supports beta 1 and 2 only".into(),
        ));
    }
    if m < n {
        return Err(Error::DimensionMismatch(format!(
            "need m ≥ n, got m = {m}, n = {n}"
        )));
    }
    if kappa.len() > n {
        return Err(Error::InvalidPartition(format!(
            "{kappa} is longer than n = {n}"
        )));
    }
    if count < 2 {
        return Err(Error::InvalidArgument("count must be at least 2".into()));
    }
    if a.values().iter().chain(b.values()).any(|&v| v < 0.0) {
        return Err(Error::InvalidArgument("spectra must be nonnegative".into()));
    }
    let sqrt_a: Vec<f64> = a.values().iter().map(|v| v.sqrt()).collect();
    let sqrt_b: Vec<f64> = b.values().iter().map(|v| v.sqrt()).collect();
    let samples = parallel_draws(count, seed, |rng| {
        let h = haar_frame(m, n, beta, rng);
        // the nonzero spectrum of A H B H* is that of B^{1/2} H* A H B^{1/2}
        let ah = DMatrix::from_fn(m, n, |i, j| h[(i, j)] * sqrt_a[i] * sqrt_b[j]);
        let g = ah.adjoint() * ah;
        let eigs: Vec<f64> = g
            .symmetric_eigenvalues()
            .iter()
            .map(|v| v.max(0.0))
            .collect();
        let spectrum = EigenSpectrum::new(eigs).expect("finite eigenvalues");
        jack_c(kappa, &spectrum, beta)
    });
    let mc_mean = samples.iter().sum::<f64>() / count as f64;
    let exact =
        jack_c(kappa, a, beta) * jack_c(kappa, b, beta) / jack_identity_value(kappa, m, beta);
    Ok(SplittingCheck {
        mc_mean,
        exact,
        std_err: std_err(&samples),
    })
}

/// Haar-distributed `m × n` frame: QR of a Gaussian matrix with the phases
/// of `diag(R)` moved into `Q`.
fn haar_frame(m: usize, n: usize, beta: Beta, rng: &mut ChaCha8Rng) -> DMatrix<C64> {
    let z = DMatrix::from_fn(m, n, |_, _| match beta {
        Beta::Real => C64::new(normal(rng, 1.0), 0.0),
        _ => C64::new(normal(rng, 1.0), normal(rng, 1.0)),
    });
    let qr = z.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        for i in 0..m {
            q[(i, j)] *= phase;
        }
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::ln_gamma;

    fn spec(beta: Beta, m: usize, n: usize, sigma: Vec<f64>) -> WishartSpec {
        WishartSpec::new(beta, m, n, sigma).unwrap()
    }

    /// Regularized lower incomplete gamma by its power series.
    fn gamma_p(a: f64, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let (mut term, mut sum) = (1.0 / a, 1.0 / a);
        let mut k = 1.0;
        while term > 1e-17 * sum {
            term *= x / (a + k);
            sum += term;
            k += 1.0;
        }
        (a * x.ln() - x - ln_gamma(a)).exp() * sum
    }

    #[test]
    fn reproducible_and_scale_equivariant() {
        for b in Beta::ALL {
            let s = spec(b, 4, 2, vec![3.0, 2.0, 1.0, 0.5]);
            let first = sample_largest_eigs(&s, 5000, 11).unwrap();
            let second = sample_largest_eigs(&s, 5000, 11).unwrap();
            assert_eq!(first, second);
            assert_eq!(first.draws.len(), 5000);
            assert!(first.draws.iter().all(|&d| d > 0.0));
            let scaled = sample_largest_eigs(&s.scaled(2.5).unwrap(), 5000, 11).unwrap();
            for (x, y) in first.draws.iter().zip(&scaled.draws) {
                assert!((2.5 * x - y).abs() <= 1e-12 * y, "{x} {y}");
            }
            let other = sample_largest_eigs(&s, 5000, 12).unwrap();
            assert_ne!(first.draws, other.draws);
        }
    }

    #[test]
    fn rank_one_means() {
        let count = 100_000;
        for (b, lambda) in [
            (Beta::Real, 2.0),
            (Beta::Complex, 1.0),
            (Beta::Quaternion, 0.5),
        ] {
            for m in [2, 5] {
                let s = WishartSpec::isotropic(b, m, 1, lambda).unwrap();
                let batch = sample_largest_eigs(&s, count, 3).unwrap();
                let target = lambda * m as f64;
                assert!(
                    (batch.mean() - target).abs() <= 3.0 * batch.std_err(),
                    "beta={b} m={m}: {} vs {target}",
                    batch.mean()
                );
            }
        }
    }

    #[test]
    fn general_path_agrees_with_rank_one_shortcut() {
        // for n = 2 the trace of W is a sum of 2m unit-mean moduli
        for b in Beta::ALL {
            let s = WishartSpec::identity(b, 3, 2).unwrap();
            let batch = sample_largest_eigs(&s, 40_000, 5).unwrap();
            let mean = batch.mean();
            assert!(mean > 3.0 && mean < 6.0, "beta={b}: {mean}");
        }
    }

    #[test]
    fn chi_square_fit() {
        for m in [3, 10] {
            let s = WishartSpec::identity(Beta::Real, m, 1).unwrap();
            let batch = sample_largest_eigs(&s, 100_000, 9).unwrap();
            let d = ks_distance(&batch, |x| gamma_p(m as f64 / 2.0, x / 2.0));
            assert!(d <= 0.01, "m={m}: {d}");
        }
    }

    #[test]
    fn empirical_cdf_examples() {
        let s = WishartSpec::identity(Beta::Real, 3, 1).unwrap();
        let batch = sample_largest_eigs(&s, 1001, 1).unwrap();
        let sorted = batch.sorted_draws();
        assert_eq!(empirical_cdf(&batch, sorted[0] * 0.5), 0.0);
        assert_eq!(empirical_cdf(&batch, sorted[1000] + 1.0), 1.0);
        let median = sorted[500];
        assert!((empirical_cdf(&batch, median) - 0.5).abs() <= 1.0 / 1001.0);
        let own = ks_distance(&batch, |x| empirical_cdf(&batch, x));
        assert!(own <= 1.0 / 1001.0 + 1e-15, "{own}");
    }

    #[test]
    fn ks_detects_wrong_scale() {
        let s = WishartSpec::identity(Beta::Real, 4, 1).unwrap();
        let batch = sample_largest_eigs(&s.scaled(2.0).unwrap(), 20_000, 4).unwrap();
        let d = ks_distance(&batch, |x| gamma_p(2.0, x / 2.0));
        assert!(d >= 0.1, "{d}");
    }

    #[test]
    fn quaternion_eigenvalues_pair_up() {
        let s = spec(Beta::Quaternion, 5, 3, vec![2.0, 1.5, 1.0, 0.7, 0.2]);
        for seed in 0..20 {
            let eigs = quaternion_embedded_eigs(&s, seed).unwrap();
            assert_eq!(eigs.len(), 6);
            for pair in eigs.chunks(2) {
                assert!(
                    (pair[0] - pair[1]).abs() <= 1e-10 * pair[1].abs(),
                    "{eigs:?}"
                );
            }
        }
        assert!(
            quaternion_embedded_eigs(&WishartSpec::identity(Beta::Real, 3, 2).unwrap(), 0).is_err()
        );
    }

    #[test]
    fn haar_frames_are_orthonormal() {
        let mut rng = stream_rng(1, 0);
        for beta in [Beta::Real, Beta::Complex] {
            let h = haar_frame(5, 3, beta, &mut rng);
            let gram = h.adjoint() * &h;
            for i in 0..3 {
                for j in 0..3 {
                    let target = if i == j { 1.0 } else { 0.0 };
                    assert!((gram[(i, j)] - C64::new(target, 0.0)).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn splitting_trace_case() {
        let a = EigenSpectrum::new(vec![1.0, 2.0, 3.0]).unwrap();
        let b = EigenSpectrum::new(vec![1.0, 0.5]).unwrap();
        let one = Partition::new(vec![1]).unwrap();
        for beta in [Beta::Real, Beta::Complex] {
            let r = stiefel_splitting_check(&a, &b, &one, beta, 20_000, 2).unwrap();
            assert!((r.exact - 3.0).abs() < 1e-12);
            assert!((r.mc_mean - r.exact).abs() <= 3.0 * r.std_err, "{r:?}");
        }
        let two = Partition::new(vec![2]).unwrap();
        let r = stiefel_splitting_check(&a, &b, &two, Beta::Real, 100_000, 3).unwrap();
        assert!((r.mc_mean - r.exact).abs() <= 3.0 * r.std_err, "{r:?}");
    }

    #[test]
    fn splitting_identity_frames_drop_out() {
        let q = Partition::new(vec![2, 1]).unwrap();
        let r = stiefel_splitting_check(
            &EigenSpectrum::identity(4),
            &EigenSpectrum::identity(2),
            &q,
            Beta::Complex,
            2000,
            1,
        )
        .unwrap();
        let target = jack_identity_value(&q, 2, Beta::Complex);
        assert!((r.exact - target).abs() < 1e-12 * target);
        assert!((r.mc_mean - target).abs() < 1e-9 * target);
    }

    #[test]
    fn splitting_rejects_bad_input() {
        let a = EigenSpectrum::identity(3);
        let b = EigenSpectrum::identity(2);
        let long = Partition::new(vec![1, 1, 1]).unwrap();
        let one = Partition::new(vec![1]).unwrap();
        assert!(stiefel_splitting_check(&a, &b, &long, Beta::Real, 10, 0).is_err());
        assert!(stiefel_splitting_check(&a, &b, &one, Beta::Quaternion, 10, 0).is_err());
        assert!(stiefel_splitting_check(&b, &a, &one, Beta::Real, 10, 0).is_err());
    }

    #[test]
    fn csv_export() {
        let s = WishartSpec::identity(Beta::Complex, 3, 1).unwrap();
        let batch = sample_largest_eigs(&s, 3, 7).unwrap();
        let mut out = Vec::new();
        batch.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# beta=2 m=3 n=1 sigma=1,1,1");
        assert_eq!(lines[1], "# seed=7 count=3");
        assert_eq!(lines[2], "ell1");
        assert_eq!(lines.len(), 6);
        assert_eq!(lines[3].parse::<f64>().unwrap(), batch.draws[0]);
    }
}
