//! Truncated hypergeometric functions of one and two matrix arguments.
//!
//! ```text
//! pFq^(m,n)(a; b; A, B) = Σ_k Σ_{κ ⊢ k, ℓ(κ) ≤ n}
//!     [∏ (a_i)_κ / ∏ (b_j)_κ] · C_κ(A) C_κ(B) / (k! C_κ(I_m))
//! ```
//!
//! Terms are carried as signed log magnitudes. Each degree is summed in
//! partition order with compensation, then degrees are summed in ascending
//! order.

use crate::beta::Beta;
use crate::error::{Error, Result};
use crate::jack::{ln_jack_identity_value, EigenSpectrum, JackLayers};
use crate::numeric::{ln_factorial, sum_log_values, LogValue};
use crate::partitions::{enumerate_partitions, ln_pochhammer_beta, Partition};

/// Upper and lower parameters of a `pFq` series.
#[derive(Debug, Clone, PartialEq)]
pub struct HypergeomParams {
    pub upper: Vec<f64>,
    pub lower: Vec<f64>,
    pub beta: Beta,
}

impl HypergeomParams {
    pub fn new(upper: Vec<f64>, lower: Vec<f64>, beta: Beta) -> Self {
        HypergeomParams { upper, lower, beta }
    }

    /// Rejects lower parameters whose Pochhammer symbol vanishes for some
    /// partition of weight at most `max_degree` and length at most `max_len`.
    ///
    /// Row `i` contributes `(b − (i−1)β/2)_{κ_i}`, which is zero once
    /// `κ_i > −v` for `v = b − (i−1)β/2` a nonpositive integer; the smallest
    /// such partition has weight `i(1 − v)`.
    pub fn check_poles(&self, max_len: usize, max_degree: usize) -> Result<()> {
        let half_beta = self.beta.value() / 2.0;
        for &b in &self.lower {
            for i in 1..=max_len.min(max_degree) {
                let v = b - (i - 1) as f64 * half_beta;
                if v <= 0.0 && v == v.round() {
                    let reach = (max_degree / i) as f64 - 1.0;
                    if -v <= reach {
                        return Err(Error::LowerParameterPole {
                            parameter: b,
                            row: i,
                            max_degree,
                        });
                    }
                }
            }
        }
        Ok(())
    }

    /// `ln |∏ (a_i)_κ / ∏ (b_j)_κ|` with its sign.
    pub fn ln_ratio(&self, kappa: &Partition) -> LogValue {
        let mut acc = LogValue::ONE;
        for &a in &self.upper {
            acc = acc * ln_pochhammer_beta(a, kappa, self.beta);
        }
        for &b in &self.lower {
            acc = acc / ln_pochhammer_beta(b, kappa, self.beta);
        }
        acc
    }
}

/// Maximum total degree `K` and the relative layer size below which the
/// series may stop early.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationBudget {
    pub max_degree: usize,
    pub layer_tol: f64,
}

impl TruncationBudget {
    pub const DEFAULT_LAYER_TOL: f64 = 1e-12;

    pub fn new(max_degree: usize) -> Self {
        TruncationBudget {
            max_degree,
            layer_tol: Self::DEFAULT_LAYER_TOL,
        }
    }

    pub fn with_layer_tol(mut self, layer_tol: f64) -> Self {
        self.layer_tol = layer_tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.layer_tol >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "layer_tol must be nonnegative, got {}",
                self.layer_tol
            )));
        }
        Ok(())
    }
}

impl Default for TruncationBudget {
    fn default() -> Self {
        Self::new(60)
    }
}

/// A truncated series value and its convergence diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesValue {
    /// The sum; may be infinite when only `ln_value` is representable.
    pub value: f64,
    pub ln_value: LogValue,
    /// Highest degree included in the sum.
    pub degrees_used: usize,
    /// `|last included layer| / |value|`.
    pub last_layer_ratio: f64,
    pub converged: bool,
}

impl SeriesValue {
    fn from_terms(terms: &[LogValue], layer_tol: f64) -> SeriesValue {
        let mut running = LogValue::ZERO;
        let mut prev_small = false;
        let mut used = 0;
        for (k, t) in terms.iter().enumerate() {
            running = sum_log_values(&[running, *t]);
            used = k;
            let small = relative(*t, running) <= layer_tol;
            if small && prev_small {
                break;
            }
            prev_small = small;
        }
        let total = sum_log_values(&terms[..=used]);
        let ratio = relative(terms[used], total);
        SeriesValue {
            value: total.to_f64(),
            ln_value: total,
            degrees_used: used,
            last_layer_ratio: ratio,
            converged: ratio <= layer_tol,
        }
    }
}

fn relative(layer: LogValue, total: LogValue) -> f64 {
    if layer.is_zero() {
        0.0
    } else if total.is_zero() {
        f64::INFINITY
    } else {
        (layer.ln_abs - total.ln_abs).exp()
    }
}

/// Per-degree layers `L_k` of a series whose degree-`k` part scales as
/// `t^k` under `X → tX`, so the series can be evaluated at any `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesLayers {
    pub layers: Vec<LogValue>,
    pub layer_tol: f64,
}

impl SeriesLayers {
    pub fn max_degree(&self) -> usize {
        self.layers.len() - 1
    }

    fn scaled(&self, t: f64) -> Vec<LogValue> {
        let ln_t = t.ln();
        self.layers
            .iter()
            .enumerate()
            .map(|(k, l)| {
                if k == 0 {
                    *l
                } else {
                    l.scale_ln(k as f64 * ln_t)
                }
            })
            .collect()
    }

    /// `Σ_k L_k t^k` for `t > 0`.
    pub fn evaluate(&self, t: f64) -> SeriesValue {
        SeriesValue::from_terms(&self.scaled(t), self.layer_tol)
    }

    /// `Σ_k w(k) L_k t^k` over the degrees that [`SeriesLayers::evaluate`]
    /// would use at the same `t`.
    pub fn evaluate_weighted(&self, t: f64, w: impl Fn(usize) -> f64) -> SeriesValue {
        let plain = self.evaluate(t);
        let terms: Vec<LogValue> = self
            .scaled(t)
            .into_iter()
            .take(plain.degrees_used + 1)
            .enumerate()
            .map(|(k, l)| l * LogValue::from_f64(w(k)))
            .collect();
        let total = sum_log_values(&terms);
        SeriesValue {
            value: total.to_f64(),
            ln_value: total,
            ..plain
        }
    }
}

/// Signed log values `C_κ(x)` for one degree, aligned with
/// `enumerate_partitions(k, max_len)`.
fn log_jack_layer(layers: &mut JackLayers) -> Option<(Vec<Partition>, Vec<LogValue>)> {
    let ln_s = layers.ln_scale();
    let layer = layers.next()?;
    let k = layer.degree as f64;
    let values = layer
        .values
        .iter()
        .map(|&v| LogValue::from_f64(v).scale_ln(k * ln_s))
        .collect();
    Some((layer.partitions, values))
}

/// Runs the degree loop. `layer_terms(k, partitions, values)` must return
/// the degree-`k` terms; layers stop early once two consecutive layers are
/// below `layer_tol` relative to the running sum.
fn drive<F>(budget: &TruncationBudget, mut layer_terms: F) -> (Vec<LogValue>, SeriesValue)
where
    F: FnMut(usize) -> Option<Vec<LogValue>>,
{
    let mut layers = Vec::with_capacity(budget.max_degree + 1);
    let mut running = LogValue::ZERO;
    let mut prev_small = false;
    for k in 0..=budget.max_degree {
        let Some(terms) = layer_terms(k) else { break };
        let layer = sum_log_values(&terms);
        layers.push(layer);
        running = sum_log_values(&[running, layer]);
        let small = relative(layer, running) <= budget.layer_tol;
        if budget.layer_tol > 0.0 && small && prev_small {
            break;
        }
        prev_small = small;
    }
    let value = SeriesValue::from_terms(&layers, budget.layer_tol);
    (layers, value)
}

fn check_spectrum(x: &EigenSpectrum, dim: usize, name: &str) -> Result<()> {
    if x.dimension() != dim {
        return Err(Error::DimensionMismatch(format!(
            "{name} has dimension {} but {dim} was declared",
            x.dimension()
        )));
    }
    Ok(())
}

/// Two-matrix series with `A` of dimension `m`, `B` of dimension `n`, and
/// partitions of length at most `n`.
pub fn hyper_hetero(
    params: &HypergeomParams,
    m: usize,
    n: usize,
    a: &EigenSpectrum,
    b: &EigenSpectrum,
    budget: &TruncationBudget,
) -> Result<SeriesValue> {
    Ok(hetero_layers(params, m, n, a, b, budget)?.1)
}

fn hetero_layers(
    params: &HypergeomParams,
    m: usize,
    n: usize,
    a: &EigenSpectrum,
    b: &EigenSpectrum,
    budget: &TruncationBudget,
) -> Result<(Vec<LogValue>, SeriesValue)> {
    HeteroSeries::new(params, m, n, a, budget)?.evaluate_layers(b)
}

/// Two-matrix series with `A` held fixed, for evaluation at many `B`.
///
/// Everything that depends only on `A` (parameter ratios, `C_κ(A)`, identity
/// values and factorials) is computed once per partition up front.
#[derive(Debug, Clone)]
pub struct HeteroSeries {
    n: usize,
    beta: Beta,
    budget: TruncationBudget,
    coeffs: Vec<Vec<LogValue>>,
}

impl HeteroSeries {
    pub fn new(
        params: &HypergeomParams,
        m: usize,
        n: usize,
        a: &EigenSpectrum,
        budget: &TruncationBudget,
    ) -> Result<Self> {
        budget.validate()?;
        if m < n {
            return Err(Error::InvalidArgument(format!(
                "first argument dimension m = {m} must be at least n = {n}"
            )));
        }
        if n == 0 {
            return Err(Error::InvalidArgument("dimensions must be positive".into()));
        }
        check_spectrum(a, m, "A")?;
        params.check_poles(n, budget.max_degree)?;
        let beta = params.beta;
        let k_max = budget.max_degree;

        let mut coeffs = Vec::with_capacity(k_max + 1);
        // C_κ(cI_m)/C_κ(I_m) = c^k, so a scalar A never touches the identity
        // values and reduces exactly to the one-matrix series of B.
        if let Some(c) = a.common_value() {
            for k in 0..=k_max {
                let scale = LogValue::from_f64(c)
                    .powi(k as i32)
                    .scale_ln(-ln_factorial(k));
                let layer = enumerate_partitions(k, n)
                    .iter()
                    .map(|q| params.ln_ratio(q) * scale)
                    .collect();
                coeffs.push(layer);
            }
        } else {
            let mut a_layers = JackLayers::new(a, beta, n, k_max);
            while let Some((parts, ca)) = log_jack_layer(&mut a_layers) {
                let ln_fact = ln_factorial(coeffs.len());
                let layer = parts
                    .iter()
                    .zip(&ca)
                    .map(|(q, &va)| {
                        if va.is_zero() {
                            return LogValue::ZERO;
                        }
                        (params.ln_ratio(q) * va / ln_jack_identity_value(q, m, beta))
                            .scale_ln(-ln_fact)
                    })
                    .collect();
                coeffs.push(layer);
            }
        }
        Ok(HeteroSeries {
            n,
            beta,
            budget: *budget,
            coeffs,
        })
    }

    pub fn evaluate(&self, b: &EigenSpectrum) -> Result<SeriesValue> {
        Ok(self.evaluate_layers(b)?.1)
    }

    fn evaluate_layers(&self, b: &EigenSpectrum) -> Result<(Vec<LogValue>, SeriesValue)> {
        check_spectrum(b, self.n, "B")?;
        let mut b_layers = JackLayers::new(b, self.beta, self.n, self.budget.max_degree);
        Ok(drive(&self.budget, |k| {
            let (_, cb) = log_jack_layer(&mut b_layers)?;
            let coeffs = &self.coeffs[k];
            debug_assert_eq!(coeffs.len(), cb.len());
            Some(coeffs.iter().zip(&cb).map(|(&c, &vb)| c * vb).collect())
        }))
    }
}

/// One-matrix series `pFq(a; b; X)`, i.e. the two-matrix series with
/// `B = I_m`.
pub fn hyper_one_matrix(
    params: &HypergeomParams,
    m: usize,
    x: &EigenSpectrum,
    budget: &TruncationBudget,
) -> Result<SeriesValue> {
    check_spectrum(x, m, "X")?;
    hyper_hetero(params, m, m, &EigenSpectrum::identity(m), x, budget)
}

/// Layers `L_k` of `pFq(a; b; tX)` for evaluation at arbitrary `t > 0`.
/// All `K + 1` layers are computed.
pub fn hyper_one_matrix_layers(
    params: &HypergeomParams,
    m: usize,
    x: &EigenSpectrum,
    budget: &TruncationBudget,
) -> Result<SeriesLayers> {
    check_spectrum(x, m, "X")?;
    let full = budget.with_layer_tol(0.0);
    let (layers, _) = hetero_layers(params, m, m, &EigenSpectrum::identity(m), x, &full)?;
    Ok(SeriesLayers {
        layers,
        layer_tol: budget.layer_tol,
    })
}

/// The parameters of `1F1(a; c; Y) = etr(Y) · 1F1(c − a; c; −Y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KummerTransform {
    pub a: f64,
    pub c: f64,
    pub x: EigenSpectrum,
    /// `ln etr(Y) = tr Y`.
    pub ln_prefactor: f64,
    pub beta: Beta,
}

impl KummerTransform {
    pub fn prefactor(&self) -> f64 {
        self.ln_prefactor.exp()
    }
}

/// Rewrites `1F1(a; c; Y)` as `prefactor · 1F1(a'; c'; Y')`. A negative
/// semidefinite `Y` becomes a positive one, giving a series of positive
/// terms when `c − a > 0`.
pub fn kummer_transform(
    a: f64,
    c: f64,
    y: &EigenSpectrum,
    m: usize,
    beta: Beta,
) -> Result<KummerTransform> {
    check_spectrum(y, m, "Y")?;
    Ok(KummerTransform {
        a: c - a,
        c,
        x: y.scaled(-1.0),
        ln_prefactor: y.trace(),
        beta,
    })
}

/// `Σ_{κ ⊢ k, ℓ(κ) ≤ max_len}` helper used by tests and callers that need
/// the number of terms a budget implies.
pub fn term_count(max_len: usize, budget: &TruncationBudget) -> usize {
    (0..=budget.max_degree)
        .map(|k| enumerate_partitions(k, max_len).len())
        .sum()
}
