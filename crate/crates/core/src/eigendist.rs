//! Distribution of the largest eigenvalue, and the joint density of the
//! nonzero eigenvalues, of a singular beta-Wishart matrix `W = XX*` with
//! `X` an `m × n` beta-Gaussian matrix, `m > n`, and row covariance `Σ`.
//!
//! The CDF is evaluated from the positive-term form
//!
//! ```text
//! F(x) = Γ_n(a0) (xβ/2)^{βnm/2} / (Γ_n(c) |Σ|^{βn/2})
//!        · etr(−(βx/2) Σ⁻¹) · 1F1(a; c; (βx/2) Σ⁻¹)
//! ```
//!
//! with `a0 = (n−1)β/2 + 1` and `c = (n+m−1)β/2 + 1`. For `Σ = λI` the
//! series reduces to `n` dimensions with `a = a0` and a scalar argument;
//! otherwise it runs over `m` dimensions with `a = (m−1)β/2 + 1`.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::beta::Beta;
use crate::error::{Error, Result};
use crate::hypergeom::{
    hyper_one_matrix_layers, HeteroSeries, HypergeomParams, SeriesLayers, SeriesValue,
    TruncationBudget,
};
use crate::jack::EigenSpectrum;
use crate::numeric::{ln_gamma, solve_increasing};

/// A singular beta-Wishart ensemble: `β`, dimension `m`, rank `n < m`, and
/// the eigenvalues of `Σ` in descending order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WishartSpec {
    beta: Beta,
    m: usize,
    n: usize,
    sigma_eigs: Vec<f64>,
}

impl WishartSpec {
    /// Validates the ensemble. Eigenvalues may be given in any order and are
    /// stored sorted descending.
    pub fn new(beta: Beta, m: usize, n: usize, mut sigma_eigs: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSpec("n must be positive".into()));
        }
        if m <= n {
            return Err(Error::InvalidSpec(format!(
                "only the singular case m > n is supported, got m = {m}, n = {n}"
            )));
        }
        if sigma_eigs.len() != m {
            return Err(Error::InvalidSpec(format!(
                "expected {m} covariance eigenvalues, got {}",
                sigma_eigs.len()
            )));
        }
        if sigma_eigs.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidSpec(format!(
                "covariance eigenvalues must be finite and positive: {sigma_eigs:?}"
            )));
        }
        sigma_eigs.sort_by(|a, b| b.total_cmp(a));
        Ok(WishartSpec {
            beta,
            m,
            n,
            sigma_eigs,
        })
    }

    pub fn identity(beta: Beta, m: usize, n: usize) -> Result<Self> {
        Self::isotropic(beta, m, n, 1.0)
    }

    pub fn isotropic(beta: Beta, m: usize, n: usize, lambda: f64) -> Result<Self> {
        Self::new(beta, m, n, vec![lambda; m])
    }

    /// Builds a `WishartSpec` from a symmetric positive definite `Σ`. The matrix is
    /// symmetrized before its eigenvalues are taken.
    pub fn from_matrix(beta: Beta, n: usize, sigma: &DMatrix<f64>) -> Result<Self> {
        if !sigma.is_square() || sigma.nrows() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "covariance must be square, got {}x{}",
                sigma.nrows(),
                sigma.ncols()
            )));
        }
        let scale = sigma.amax().max(f64::MIN_POSITIVE);
        let asym = (sigma - sigma.transpose()).amax();
        if asym > 1e-8 * scale {
            return Err(Error::InvalidSpec(format!(
                "covariance is not symmetric (max asymmetry {asym:e})"
            )));
        }
        let sym = (sigma + sigma.transpose()) * 0.5;
        let eigs = sym.symmetric_eigenvalues();
        Self::new(beta, sigma.nrows(), n, eigs.iter().copied().collect())
    }

    pub fn beta(&self) -> Beta {
        self.beta
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn sigma_eigs(&self) -> &[f64] {
        &self.sigma_eigs
    }

    pub fn trace(&self) -> f64 {
        self.sigma_eigs.iter().sum()
    }

    pub fn ln_det(&self) -> f64 {
        self.sigma_eigs.iter().map(|v| v.ln()).sum()
    }

    pub fn trace_inv(&self) -> f64 {
        self.sigma_eigs.iter().map(|v| 1.0 / v).sum()
    }

    /// `λ` when `Σ = λI`.
    pub fn isotropic_value(&self) -> Option<f64> {
        let first = self.sigma_eigs[0];
        self.sigma_eigs.iter().all(|&v| v == first).then_some(first)
    }

    /// The same ensemble with `Σ` replaced by `cΣ`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(
            self.beta,
            self.m,
            self.n,
            self.sigma_eigs.iter().map(|v| v * c).collect(),
        )
    }
}

/// A probability or density together with the series it came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistValue {
    /// Raw truncated value, not clamped.
    pub value: f64,
    pub series: SeriesValue,
}

impl DistValue {
    /// The value clamped to `[0, 1]` for presentation.
    pub fn probability(&self) -> f64 {
        self.value.clamp(0.0, 1.0)
    }
}

/// `ln Γ^β_n(c) = n(n−1)β/4 · ln π + Σ_{i<n} ln Γ(c − iβ/2)`.
pub fn log_multigamma_beta(c: f64, n: usize, beta: Beta) -> Result<f64> {
    let half_beta = beta.value() / 2.0;
    let threshold = (n as f64 - 1.0) * half_beta;
    if n == 0 || !(c > threshold) {
        return Err(Error::GammaPole { c, threshold });
    }
    let nf = n as f64;
    let mut acc = nf * (nf - 1.0) * beta.value() / 4.0 * std::f64::consts::PI.ln();
    for i in 0..n {
        acc += ln_gamma(c - i as f64 * half_beta);
    }
    Ok(acc)
}

/// Which form of the series evaluates the CDF.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CdfRoute {
    /// `Isotropic` when `Σ = λI`, else `FullSpectrum`.
    Auto,
    /// `n`-dimensional series with scalar argument; requires `Σ = λI`.
    Isotropic,
    /// `m`-dimensional series in the eigenvalues of `Σ⁻¹`.
    FullSpectrum,
}

/// Truncated CDF and density of the largest eigenvalue for one spec and
/// budget. The series layers are computed once on construction.
#[derive(Debug, Clone)]
pub struct LargestEigenDistribution {
    spec: WishartSpec,
    budget: TruncationBudget,
    route: CdfRoute,
    layers: SeriesLayers,
    ln_const: f64,
    power: f64,
    decay: f64,
    arg_scale: f64,
}

impl LargestEigenDistribution {
    pub fn new(spec: &WishartSpec, budget: &TruncationBudget) -> Result<Self> {
        Self::with_route(spec, budget, CdfRoute::Auto)
    }

    pub fn with_route(
        spec: &WishartSpec,
        budget: &TruncationBudget,
        route: CdfRoute,
    ) -> Result<Self> {
        budget.validate()?;
        let beta = spec.beta;
        let b = beta.value();
        let (m, n) = (spec.m as f64, spec.n as f64);
        let a0 = (n - 1.0) * b / 2.0 + 1.0;
        let c = (n + m - 1.0) * b / 2.0 + 1.0;
        let power = b * n * m / 2.0;
        let ln_const = log_multigamma_beta(a0, spec.n, beta)?
            - log_multigamma_beta(c, spec.n, beta)?
            + power * (b / 2.0).ln()
            - n * b / 2.0 * spec.ln_det();

        let route = match (route, spec.isotropic_value()) {
            (CdfRoute::Auto, Some(_)) => CdfRoute::Isotropic,
            (CdfRoute::Auto, None) => CdfRoute::FullSpectrum,
            (CdfRoute::Isotropic, None) => {
                return Err(Error::InvalidArgument(
                    "the isotropic route needs Σ = λI".into(),
                ))
            }
            (r, _) => r,
        };
        let (layers, decay, arg_scale) = match route {
            CdfRoute::Isotropic => {
                let lambda = spec.sigma_eigs[0];
                let params = HypergeomParams::new(vec![a0], vec![c], beta);
                let y = EigenSpectrum::identity(spec.n);
                let layers = hyper_one_matrix_layers(&params, spec.n, &y, budget)?;
                (layers, n * b / (2.0 * lambda), b / (2.0 * lambda))
            }
            _ => {
                let a = (m - 1.0) * b / 2.0 + 1.0;
                let params = HypergeomParams::new(vec![a], vec![c], beta);
                let inv: Vec<f64> = spec.sigma_eigs.iter().map(|v| 1.0 / v).collect();
                let y = EigenSpectrum::new(inv)?;
                let layers = hyper_one_matrix_layers(&params, spec.m, &y, budget)?;
                (layers, b / 2.0 * spec.trace_inv(), b / 2.0)
            }
        };
        Ok(LargestEigenDistribution {
            spec: spec.clone(),
            budget: *budget,
            route,
            layers,
            ln_const,
            power,
            decay,
            arg_scale,
        })
    }

    pub fn spec(&self) -> &WishartSpec {
        &self.spec
    }

    pub fn budget(&self) -> &TruncationBudget {
        &self.budget
    }

    /// The resolved route, never `Auto`.
    pub fn route(&self) -> CdfRoute {
        self.route
    }

    fn check_x(x: f64) -> Result<()> {
        if !(x.is_finite() && x > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "x must be positive, got {x}"
            )));
        }
        Ok(())
    }

    /// Truncated `Pr(ℓ₁ < x)`.
    pub fn cdf(&self, x: f64) -> Result<DistValue> {
        Self::check_x(x)?;
        let series = self.layers.evaluate(self.arg_scale * x);
        let value = if series.ln_value.is_zero() {
            0.0
        } else {
            let ln = self.ln_const + self.power * x.ln() - self.decay * x + series.ln_value.ln_abs;
            f64::from(series.ln_value.sign) * ln.exp()
        };
        Ok(DistValue { value, series })
    }

    /// Exact derivative of the truncated CDF.
    pub fn pdf(&self, x: f64) -> Result<DistValue> {
        Self::check_x(x)?;
        let (p, s) = (self.power, self.decay);
        let series = self
            .layers
            .evaluate_weighted(self.arg_scale * x, |k| p + k as f64 - s * x);
        let value = if series.ln_value.is_zero() {
            0.0
        } else {
            let ln = self.ln_const + (p - 1.0) * x.ln() - s * x + series.ln_value.ln_abs;
            f64::from(series.ln_value.sign) * ln.exp()
        };
        Ok(DistValue { value, series })
    }

    fn cdf_value(&self, x: f64) -> f64 {
        self.cdf(x).map(|v| v.value).unwrap_or(f64::NAN)
    }

    /// `x` with `|F(x) − alpha| ≤ 1e−6`.
    ///
    /// The bracket is found by scanning geometrically upward from
    /// `1e−8 · tr Σ`. The truncated CDF rises, peaks and then decays to
    /// zero, so the scan stops with [`Error::NonBracketable`] once it has
    /// passed the peak without reaching `alpha`.
    pub fn quantile(&self, alpha: f64) -> Result<f64> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "alpha must lie in (0, 1), got {alpha}"
            )));
        }
        const GROWTH: f64 = 1.2;
        let tr = self.spec.trace();
        let limit = 1e6 * tr;
        let mut lo = 1e-8 * tr;
        let mut before = lo;
        let mut f_lo = self.cdf_value(lo);
        if f_lo >= alpha {
            return Ok(lo);
        }
        loop {
            let hi = lo * GROWTH;
            let f_hi = self.cdf_value(hi);
            if f_hi >= alpha {
                return Ok(solve_increasing(
                    |x| self.cdf_value(x),
                    lo,
                    hi,
                    alpha,
                    1e-10,
                ));
            }
            if f_hi < f_lo || hi > limit || f_hi.is_nan() {
                // the sampled peak lies in (before, hi); locate it precisely
                let (at, peak) = self.maximize(before, hi);
                if peak >= alpha {
                    return Ok(solve_increasing(
                        |x| self.cdf_value(x),
                        before,
                        at,
                        alpha,
                        1e-10,
                    ));
                }
                return Err(Error::NonBracketable {
                    level: alpha,
                    peak,
                    at,
                });
            }
            before = lo;
            lo = hi;
            f_lo = f_hi;
        }
    }

    /// Golden-section search for the maximum of the CDF on `[lo, hi]`.
    fn maximize(&self, lo: f64, hi: f64) -> (f64, f64) {
        let ratio = (5f64.sqrt() - 1.0) / 2.0;
        let (mut a, mut b) = (lo, hi);
        let mut c = b - ratio * (b - a);
        let mut d = a + ratio * (b - a);
        let (mut fc, mut fd) = (self.cdf_value(c), self.cdf_value(d));
        for _ in 0..80 {
            if fc > fd {
                b = d;
                d = c;
                fd = fc;
                c = b - ratio * (b - a);
                fc = self.cdf_value(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + ratio * (b - a);
                fd = self.cdf_value(d);
            }
        }
        if fc > fd {
            (c, fc)
        } else {
            (d, fd)
        }
    }

    /// Largest value of the truncated CDF over `x > 0`, with its location.
    pub fn sup_cdf(&self) -> Result<(f64, f64)> {
        const GROWTH: f64 = 1.05;
        let tr = self.spec.trace();
        let limit = 1e6 * tr;
        let mut xs = vec![1e-8 * tr];
        let mut fs = vec![self.cdf_value(xs[0])];
        let mut best = 0;
        loop {
            let x = xs.last().unwrap() * GROWTH;
            let f = self.cdf_value(x);
            xs.push(x);
            fs.push(f);
            if f > fs[best] {
                best = fs.len() - 1;
            }
            let past_peak = fs[best] > 0.0 && f < 0.5 * fs[best];
            if past_peak || x > limit {
                break;
            }
        }
        let lo = xs[best.saturating_sub(1)];
        let hi = xs[(best + 1).min(xs.len() - 1)];
        let (x, f) = self.maximize(lo, hi);
        if f >= fs[best] {
            Ok((x, f))
        } else {
            Ok((xs[best], fs[best]))
        }
    }
    /// The truncated CDF up to its peak and held at the peak value beyond
    /// it. Past the peak the raw truncated CDF decays to zero; the held
    /// version is nondecreasing on all of `x > 0`.
    pub fn held_cdf(&self) -> Result<HeldCdf<'_>> {
        let (peak_x, peak) = self.sup_cdf()?;
        Ok(HeldCdf {
            dist: self,
            peak_x,
            peak,
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct HeldCdf<'a> {
    dist: &'a LargestEigenDistribution,
    peak_x: f64,
    peak: f64,
}

impl HeldCdf<'_> {
    pub fn value(&self, x: f64) -> f64 {
        if x >= self.peak_x {
            self.peak
        } else {
            self.dist.cdf_value(x)
        }
    }

    pub fn peak_x(&self) -> f64 {
        self.peak_x
    }

    pub fn peak(&self) -> f64 {
        self.peak
    }
}

/// Truncated `Pr(ℓ₁ < x)`.
pub fn cdf_largest(x: f64, spec: &WishartSpec, budget: &TruncationBudget) -> Result<DistValue> {
    LargestEigenDistribution::new(spec, budget)?.cdf(x)
}

/// Density of `ℓ₁`, the derivative of the truncated CDF.
pub fn pdf_largest(x: f64, spec: &WishartSpec, budget: &TruncationBudget) -> Result<DistValue> {
    LargestEigenDistribution::new(spec, budget)?.pdf(x)
}

pub fn quantile_largest(alpha: f64, spec: &WishartSpec, budget: &TruncationBudget) -> Result<f64> {
    LargestEigenDistribution::new(spec, budget)?.quantile(alpha)
}

/// Exponent of `π` in the joint-density constant.
fn joint_pi_exponent(beta: Beta, n: usize) -> f64 {
    let (b, n) = (beta.value(), n as f64);
    let r = match beta {
        Beta::Real => 0.0,
        Beta::Complex | Beta::Quaternion => -b * n / 2.0,
    };
    n * n * b / 2.0 + r
}

/// Joint density of the `n` nonzero eigenvalues `ℓ₁ > … > ℓ_n > 0`.
///
/// The `0F0` factor `0F0(−(β/2)Σ⁻¹, L)` is evaluated after shifting the first
/// argument by `β/(2λ_min)·I`, which leaves a series of positive terms.
pub fn joint_density(
    ells: &[f64],
    spec: &WishartSpec,
    budget: &TruncationBudget,
) -> Result<DistValue> {
    JointDensity::new(spec, budget)?.density(ells)
}

/// Joint eigenvalue density with the `Σ`-dependent parts prepared once.
#[derive(Debug, Clone)]
pub struct JointDensity {
    n: usize,
    ln_const: f64,
    det_power: f64,
    beta: f64,
    shift: f64,
    series: HeteroSeries,
}

impl JointDensity {
    pub fn new(spec: &WishartSpec, budget: &TruncationBudget) -> Result<Self> {
        let (beta, m, n) = (spec.beta, spec.m, spec.n);
        let b = beta.value();
        let (mf, nf) = (m as f64, n as f64);
        let ln_const = -(b * nf * mf / 2.0) * (2.0 / b).ln()
            + joint_pi_exponent(beta, n) * std::f64::consts::PI.ln()
            - b * nf / 2.0 * spec.ln_det()
            - log_multigamma_beta(nf * b / 2.0, n, beta)?
            - log_multigamma_beta(mf * b / 2.0, n, beta)?;
        // shifting every Σ⁻¹ eigenvalue down to zero at the smallest one keeps
        // the series argument nonnegative
        let lambda_min = *spec.sigma_eigs.last().unwrap();
        let a_shifted: Vec<f64> = spec
            .sigma_eigs
            .iter()
            .map(|&l| b / 2.0 * (1.0 / lambda_min - 1.0 / l))
            .collect();
        let series = HeteroSeries::new(
            &HypergeomParams::new(vec![], vec![], beta),
            m,
            n,
            &EigenSpectrum::new(a_shifted)?,
            budget,
        )?;
        Ok(JointDensity {
            n,
            ln_const,
            det_power: b * (mf - nf + 1.0) / 2.0 - 1.0,
            beta: b,
            shift: b / (2.0 * lambda_min),
            series,
        })
    }

    pub fn density(&self, ells: &[f64]) -> Result<DistValue> {
        let n = self.n;
        if ells.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "expected {n} eigenvalues, got {}",
                ells.len()
            )));
        }
        if ells.iter().any(|v| !(v.is_finite() && *v > 0.0))
            || ells.windows(2).any(|w| w[0] <= w[1])
        {
            return Err(Error::InvalidArgument(format!(
                "eigenvalues must be positive and strictly decreasing: {ells:?}"
            )));
        }
        let ln_det_l: f64 = ells.iter().map(|v| v.ln()).sum();
        let mut ln_vandermonde = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                ln_vandermonde += (ells[i] - ells[j]).ln();
            }
        }
        let series = self.series.evaluate(&EigenSpectrum::new(ells.to_vec())?)?;
        let trace_l: f64 = ells.iter().sum();
        let ln = self.ln_const + self.det_power * ln_det_l + self.beta * ln_vandermonde
            - self.shift * trace_l
            + series.ln_value.ln_abs;
        let value = f64::from(series.ln_value.sign) * ln.exp();
        Ok(DistValue { value, series })
    }
}

/// Scalar `1F1(a; c; z)` for `z ≤ 0` through `e^z · 1F1(c − a; c; −z)`.
fn kummer_scalar_nonpositive(a: f64, c: f64, z: f64) -> f64 {
    debug_assert!(z <= 0.0);
    let y = -z;
    let (mut term, mut sum) = (1.0, 1.0);
    for k in 0..100_000 {
        let kf = k as f64;
        term *= (c - a + kf) / (c + kf) * y / (kf + 1.0);
        sum += term;
        if term <= 1e-17 * sum {
            break;
        }
    }
    (z + sum.ln()).exp()
}

/// Density of `ℓ₁` for the real `m = 2`, `n = 1` ensemble with
/// `Σ = diag(λ₁, λ₂)`.
pub fn pdf_m2_nonnull(ell1: f64, lambda1: f64, lambda2: f64) -> Result<f64> {
    if !(ell1 > 0.0 && lambda2 > 0.0 && lambda1 >= lambda2) || !ell1.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "need ℓ₁ > 0 and λ₁ ≥ λ₂ > 0, got ℓ₁ = {ell1}, λ = ({lambda1}, {lambda2})"
        )));
    }
    let a = -0.5 * ell1 * (1.0 / lambda2 - 1.0 / lambda1);
    let hyp = kummer_scalar_nonpositive(0.5, 1.0, a);
    Ok((-ell1 / (2.0 * lambda1)).exp() * hyp / (2.0 * (lambda1 * lambda2).sqrt()))
}
