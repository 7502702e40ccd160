//! Capacity of a multiple-input single-output channel: the expectation of
//! `log(1 + ρℓ₁/m)` under the largest-eigenvalue density of a complex
//! rank-one Wishart matrix.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::beta::Beta;
use crate::eigendist::{LargestEigenDistribution, WishartSpec};
use crate::error::{Error, Result};
use crate::hypergeom::{SeriesValue, TruncationBudget};
use crate::numeric::{gauss_legendre, CompensatedSum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CapacityUnit {
    #[default]
    Bits,
    Nats,
}

impl CapacityUnit {
    fn convert_nats(self, v: f64) -> f64 {
        match self {
            CapacityUnit::Bits => v / std::f64::consts::LN_2,
            CapacityUnit::Nats => v,
        }
    }
}

impl FromStr for CapacityUnit {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bits" => Ok(CapacityUnit::Bits),
            "nats" => Ok(CapacityUnit::Nats),
            other => Err(Error::InvalidArgument(format!(
                "unit must be bits or nats, got {other:?}"
            ))),
        }
    }
}

impl fmt::Display for CapacityUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CapacityUnit::Bits => "bits",
            CapacityUnit::Nats => "nats",
        })
    }
}

/// Gauss–Legendre on `[0, x_max]` with `F(x_max) ≥ 1 − tail_mass`; the node
/// count doubles from `initial_nodes` until two estimates differ by less
/// than `tol`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadraturePolicy {
    pub initial_nodes: usize,
    pub max_nodes: usize,
    pub tol: f64,
    pub tail_mass: f64,
}

impl Default for QuadraturePolicy {
    fn default() -> Self {
        QuadraturePolicy {
            initial_nodes: 16,
            max_nodes: 2048,
            tol: 1e-6,
            tail_mass: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CapacityQuery {
    /// Linear signal-to-noise ratio.
    pub rho: f64,
    pub spec: WishartSpec,
    pub budget: TruncationBudget,
    pub quadrature: QuadraturePolicy,
    pub unit: CapacityUnit,
}

impl CapacityQuery {
    pub fn new(rho: f64, spec: WishartSpec, budget: TruncationBudget) -> Self {
        CapacityQuery {
            rho,
            spec,
            budget,
            quadrature: QuadraturePolicy::default(),
            unit: CapacityUnit::Bits,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho.is_finite() && self.rho >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "rho must be finite and nonnegative, got {}",
                self.rho
            )));
        }
        if self.spec.beta() != Beta::Complex || self.spec.n() != 1 {
            return Err(Error::InvalidSpec(format!(
                "capacity needs beta = 2 and n = 1, got beta = {}, n = {}",
                self.spec.beta(),
                self.spec.n()
            )));
        }
        let q = &self.quadrature;
        if q.initial_nodes == 0 || q.max_nodes < q.initial_nodes {
            return Err(Error::InvalidArgument(
                "quadrature node counts must satisfy 0 < initial ≤ max".into(),
            ));
        }
        if !(q.tol > 0.0 && q.tail_mass > 0.0 && q.tail_mass < 1.0) {
            return Err(Error::InvalidArgument(
                "quadrature tolerance and tail mass must lie in (0, 1)".into(),
            ));
        }
        self.budget.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CapacityEstimate {
    pub value: f64,
    pub unit: CapacityUnit,
    /// Upper end of the quadrature domain.
    pub x_max: f64,
    /// Node count of the accepted estimate.
    pub nodes: usize,
    /// Series behind `F(x_max)`, the least converged point of the domain.
    pub tail_series: Option<SeriesValue>,
}

pub fn miso_capacity(query: &CapacityQuery) -> Result<CapacityEstimate> {
    query.validate()?;
    if query.rho == 0.0 {
        return Ok(CapacityEstimate {
            value: 0.0,
            unit: query.unit,
            x_max: 0.0,
            nodes: 0,
            tail_series: None,
        });
    }
    MisoChannel::new(&query.spec, &query.budget, query.quadrature)?.capacity(query.rho, query.unit)
}

/// The largest-eigenvalue law and quadrature cutoff of one channel, reused
/// across signal-to-noise ratios.
#[derive(Debug, Clone)]
pub struct MisoChannel {
    dist: LargestEigenDistribution,
    policy: QuadraturePolicy,
    x_max: f64,
    tail: SeriesValue,
}

impl MisoChannel {
    pub fn new(
        spec: &WishartSpec,
        budget: &TruncationBudget,
        policy: QuadraturePolicy,
    ) -> Result<Self> {
        CapacityQuery {
            rho: 0.0,
            spec: spec.clone(),
            budget: *budget,
            quadrature: policy,
            unit: CapacityUnit::Bits,
        }
        .validate()?;
        let dist = LargestEigenDistribution::new(spec, budget)?;
        let x_max = dist.quantile(1.0 - policy.tail_mass).map_err(|e| match e {
            Error::NonBracketable { peak, .. } => Error::NotConverged(format!(
                "the truncated CDF peaks at {peak} and never reaches 1 − {}; increase the truncation degree",
                policy.tail_mass
            )),
            other => other,
        })?;
        let tail = dist.cdf(x_max)?.series;
        if !tail.converged {
            return Err(Error::NotConverged(format!(
                "series at the cutoff x = {x_max} stopped at degree {} with last layer ratio {:e}",
                tail.degrees_used, tail.last_layer_ratio
            )));
        }
        Ok(MisoChannel {
            dist,
            policy,
            x_max,
            tail,
        })
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn capacity(&self, rho: f64, unit: CapacityUnit) -> Result<CapacityEstimate> {
        if !(rho.is_finite() && rho >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "rho must be finite and nonnegative, got {rho}"
            )));
        }
        if rho == 0.0 {
            return Ok(CapacityEstimate {
                value: 0.0,
                unit,
                x_max: self.x_max,
                nodes: 0,
                tail_series: Some(self.tail),
            });
        }
        let m = self.dist.spec().m() as f64;
        let x_max = self.x_max;
        let estimate = |nodes: usize| -> Result<f64> {
            let (t, w) = gauss_legendre(nodes);
            let half = 0.5 * x_max;
            let mut sum = CompensatedSum::new();
            for (ti, wi) in t.iter().zip(&w) {
                let x = half * (1.0 + ti);
                sum.add(wi * (rho * x / m).ln_1p() * self.dist.pdf(x)?.value);
            }
            Ok(half * sum.value())
        };
        let mut nodes = self.policy.initial_nodes;
        let mut previous = estimate(nodes)?;
        while nodes < self.policy.max_nodes {
            nodes = (2 * nodes).min(self.policy.max_nodes);
            let current = estimate(nodes)?;
            let change = unit.convert_nats((current - previous).abs());
            previous = current;
            if change < self.policy.tol {
                return Ok(CapacityEstimate {
                    value: unit.convert_nats(current).max(0.0),
                    unit,
                    x_max,
                    nodes,
                    tail_series: Some(self.tail),
                });
            }
        }
        Err(Error::NotConverged(format!(
            "quadrature did not settle within {} nodes",
            self.policy.max_nodes
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn query(rho: f64, sigma: Vec<f64>) -> CapacityQuery {
        let m = sigma.len();
        let spec = WishartSpec::new(Beta::Complex, m, 1, sigma).unwrap();
        CapacityQuery::new(rho, spec, TruncationBudget::new(150))
    }

    #[test]
    fn zero_snr_is_zero() {
        let r = miso_capacity(&query(0.0, vec![1.81, 1.31, 0.69])).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn isotropic_closed_form() {
        // ℓ₁ ~ Gamma(m, λ) for Σ = λI, β = 2, n = 1; check against a direct
        // quadrature of that density
        let (m, lambda, rho) = (3usize, 0.69, 4.0);
        let r = miso_capacity(&query(rho, vec![lambda; m])).unwrap();
        let norm = lambda.powi(m as i32) * crate::numeric::ln_gamma(m as f64).exp();
        let density = |x: f64| x.powi(m as i32 - 1) * (-x / lambda).exp() / norm;
        let exact = crate::numeric::integrate_adaptive(
            |x| (1.0 + rho * x / m as f64).log2() * density(x),
            0.0,
            200.0 * lambda,
            1e-12,
        );
        assert!((r.value - exact).abs() < 1e-6, "{} vs {exact}", r.value);
    }

    #[test]
    fn monotone_and_concave_in_snr() {
        let rhos: Vec<f64> = (0..20)
            .map(|i| 10f64.powf((-5.0 + 25.0 * i as f64 / 19.0) / 10.0))
            .collect();
        let q = query(1.0, vec![1.81, 1.31]);
        let channel = MisoChannel::new(&q.spec, &q.budget, q.quadrature).unwrap();
        let caps: Vec<f64> = rhos
            .iter()
            .map(|&r| channel.capacity(r, CapacityUnit::Bits).unwrap().value)
            .collect();
        for w in caps.windows(2) {
            assert!(w[1] >= w[0], "{caps:?}");
        }
        for i in 1..19 {
            let left = (caps[i] - caps[i - 1]) / (rhos[i] - rhos[i - 1]);
            let right = (caps[i + 1] - caps[i]) / (rhos[i + 1] - rhos[i]);
            assert!(right <= left + 1e-8, "i={i}: {left} {right}");
        }
    }

    #[test]
    fn scale_absorption() {
        let a = miso_capacity(&query(6.0, vec![1.81, 1.31])).unwrap();
        let b = miso_capacity(&query(3.0, vec![3.62, 2.62])).unwrap();
        assert!((a.value - b.value).abs() < 1e-6, "{} {}", a.value, b.value);
    }

    #[test]
    fn units_and_validation() {
        let mut q = query(2.0, vec![1.0, 0.5]);
        let bits = miso_capacity(&q).unwrap().value;
        q.unit = CapacityUnit::Nats;
        let nats = miso_capacity(&q).unwrap().value;
        assert!((bits * std::f64::consts::LN_2 - nats).abs() < 1e-6);
        assert_eq!("nats".parse::<CapacityUnit>().unwrap(), CapacityUnit::Nats);
        assert!("dB".parse::<CapacityUnit>().is_err());

        assert!(miso_capacity(&query(-1.0, vec![1.0, 0.5])).is_err());
        let real = WishartSpec::new(Beta::Real, 2, 1, vec![1.0, 0.5]).unwrap();
        assert!(miso_capacity(&CapacityQuery::new(1.0, real, TruncationBudget::new(40))).is_err());
        let short = CapacityQuery::new(
            1.0,
            WishartSpec::new(Beta::Complex, 4, 1, vec![1.81, 1.31, 0.69, 0.19]).unwrap(),
            TruncationBudget::new(5),
        );
        assert!(matches!(miso_capacity(&short), Err(Error::NotConverged(_))));
    }
}
