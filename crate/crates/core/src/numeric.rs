//! Small numerical kernels shared by the series engine and the distribution
//! code: signed log-magnitude scalars, compensated summation, Gauss–Legendre
//! and adaptive Gauss–Kronrod quadrature, and a bracketed root finder.

use std::f64::consts::PI;
use std::ops::{Div, Mul};

/// A real number stored as `sign · exp(ln_abs)`.
///
/// Zero is represented by `sign == 0` and `ln_abs == -inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogValue {
    pub ln_abs: f64,
    pub sign: i8,
}

impl LogValue {
    pub const ZERO: LogValue = LogValue {
        ln_abs: f64::NEG_INFINITY,
        sign: 0,
    };
    pub const ONE: LogValue = LogValue {
        ln_abs: 0.0,
        sign: 1,
    };

    pub fn from_f64(x: f64) -> Self {
        if x == 0.0 {
            Self::ZERO
        } else {
            LogValue {
                ln_abs: x.abs().ln(),
                sign: if x > 0.0 { 1 } else { -1 },
            }
        }
    }

    pub fn from_parts(ln_abs: f64, sign: i8) -> Self {
        if sign == 0 || ln_abs == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            LogValue { ln_abs, sign }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.sign == 0
    }

    pub fn to_f64(self) -> f64 {
        if self.sign == 0 {
            0.0
        } else {
            f64::from(self.sign) * self.ln_abs.exp()
        }
    }

    pub fn powi(self, k: i32) -> LogValue {
        if k == 0 {
            return LogValue::ONE;
        }
        let sign = if self.sign < 0 && k % 2 == 0 {
            1
        } else {
            self.sign
        };
        LogValue::from_parts(self.ln_abs * f64::from(k), sign)
    }

    /// Multiplies by `exp(shift)`.
    pub fn scale_ln(self, shift: f64) -> LogValue {
        LogValue::from_parts(self.ln_abs + shift, self.sign)
    }
}

impl Mul for LogValue {
    type Output = LogValue;
    fn mul(self, other: LogValue) -> LogValue {
        LogValue::from_parts(self.ln_abs + other.ln_abs, self.sign * other.sign)
    }
}

impl Div for LogValue {
    type Output = LogValue;
    fn div(self, other: LogValue) -> LogValue {
        assert!(!other.is_zero(), "division by zero LogValue");
        LogValue::from_parts(self.ln_abs - other.ln_abs, self.sign * other.sign)
    }
}

/// Neumaier's variant of Kahan summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Sums signed log-magnitude terms in the given order.
///
/// Terms are rescaled by the largest magnitude before a compensated sum, so the
/// result neither overflows nor depends on how large the individual terms are.
pub fn sum_log_values(terms: &[LogValue]) -> LogValue {
    let shift = terms
        .iter()
        .filter(|t| !t.is_zero())
        .map(|t| t.ln_abs)
        .fold(f64::NEG_INFINITY, f64::max);
    if shift == f64::NEG_INFINITY {
        return LogValue::ZERO;
    }
    let mut acc = CompensatedSum::new();
    for t in terms {
        if !t.is_zero() {
            acc.add(f64::from(t.sign) * (t.ln_abs - shift).exp());
        }
    }
    LogValue::from_f64(acc.value()).scale_ln(shift)
}

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// `ln k!`.
pub fn ln_factorial(k: usize) -> f64 {
    ln_gamma(k as f64 + 1.0)
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
///
/// Roots of `P_n` are found by Newton iteration from the Tricomi initial
/// guesses; weights follow from `P_n'` at the roots.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let d = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Integrates `f` over `[a, b]` with an `n`-point Gauss–Legendre rule.
pub fn gauss_legendre_integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let (nodes, weights) = gauss_legendre(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    let mut acc = CompensatedSum::new();
    for (x, w) in nodes.iter().zip(&weights) {
        acc.add(w * f(mid + half * x));
    }
    half * acc.value()
}

const GK15_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK15_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const G7_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let fc = f(mid);
    let mut kronrod = GK15_WEIGHTS[7] * fc;
    let mut gauss = G7_WEIGHTS[3] * fc;
    for j in 0..7 {
        let dx = half * GK15_NODES[j];
        let s = f(mid - dx) + f(mid + dx);
        kronrod += GK15_WEIGHTS[j] * s;
        if j % 2 == 1 {
            gauss += G7_WEIGHTS[j / 2] * s;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Adaptive Gauss–Kronrod (7/15) quadrature of `f` over `[a, b]`.
pub fn integrate_adaptive<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    fn recurse(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (value, err) = gk15(f, a, b);
        if err <= tol || depth >= 40 || (b - a).abs() < 1e-12 * (a.abs() + b.abs()) {
            return value;
        }
        let mid = 0.5 * (a + b);
        recurse(f, a, mid, 0.5 * tol, depth + 1) + recurse(f, mid, b, 0.5 * tol, depth + 1)
    }
    recurse(&f, a, b, tol, 0)
}

/// Finds `x` in `[lo, hi]` with `f(x) = target` for increasing `f`, using the
/// Illinois variant of regula falsi with a bisection fallback.
///
/// `f(lo) <= target <= f(hi)` is required. Stops when `|f(x) - target| <= ftol`
/// or the bracket has collapsed.
pub fn solve_increasing<F: FnMut(f64) -> f64>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    target: f64,
    ftol: f64,
) -> f64 {
    let mut flo = f(lo) - target;
    let mut fhi = f(hi) - target;
    if flo.abs() <= ftol {
        return lo;
    }
    if fhi.abs() <= ftol {
        return hi;
    }
    let mut side = 0i8;
    for iter in 0..200 {
        let mut x = if iter % 8 == 7 {
            0.5 * (lo + hi)
        } else {
            (lo * fhi - hi * flo) / (fhi - flo)
        };
        if !(x > lo && x < hi) {
            x = 0.5 * (lo + hi);
        }
        let fx = f(x) - target;
        if fx.abs() <= ftol || (hi - lo) <= 4.0 * f64::EPSILON * hi.abs() {
            return x;
        }
        if fx < 0.0 {
            lo = x;
            flo = fx;
            if side == -1 {
                fhi *= 0.5;
            }
            side = -1;
        } else {
            hi = x;
            fhi = fx;
            if side == 1 {
                flo *= 0.5;
            }
            side = 1;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_value_roundtrip_and_sign() {
        for &x in &[3.5, -2.0, 1e-300, -7e200] {
            let v = LogValue::from_f64(x);
            assert!((v.to_f64() - x).abs() <= 1e-12 * x.abs());
        }
        assert!(LogValue::from_f64(0.0).is_zero());
        assert_eq!(LogValue::from_f64(-2.0).powi(3).sign, -1);
        assert_eq!(LogValue::from_f64(-2.0).powi(2).sign, 1);
    }

    #[test]
    fn signed_log_sum_survives_huge_magnitudes() {
        let terms = [
            LogValue::from_parts(800.0, 1),
            LogValue::from_parts(800.0 + 2f64.ln(), -1),
            LogValue::from_parts(800.0 + 3f64.ln(), 1),
        ];
        let s = sum_log_values(&terms);
        assert_eq!(s.sign, 1);
        assert!((s.ln_abs - (800.0 + 2f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn compensated_sum_recovers_cancelled_bits() {
        let mut s = CompensatedSum::new();
        s.add(1.0);
        s.add(1e100);
        s.add(1.0);
        s.add(-1e100);
        assert_eq!(s.value(), 2.0);
    }

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        // degree 2n-1 = 9 for n = 5
        let v = gauss_legendre_integrate(|x| x.powi(9) + 3.0 * x.powi(8) - x, -1.0, 1.0, 5);
        assert!((v - 6.0 / 9.0).abs() < 1e-14);
        let (_, w) = gauss_legendre(64);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
    }

    #[test]
    fn adaptive_quadrature_matches_closed_forms() {
        let v = integrate_adaptive(|x| (-x).exp(), 0.0, 50.0, 1e-12);
        assert!((v - (1.0 - (-50f64).exp())).abs() < 1e-11);
        let v = integrate_adaptive(|x| x.sqrt(), 0.0, 1.0, 1e-10);
        assert!((v - 2.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn root_finder_hits_target() {
        let x = solve_increasing(|x| x * x * x, 0.0, 3.0, 8.0, 1e-12);
        assert!((x - 2.0).abs() < 1e-10);
    }

    #[test]
    fn ln_gamma_values() {
        assert!((ln_gamma(0.5) - 0.5 * PI.ln()).abs() < 1e-14);
        assert!((ln_factorial(10) - 3628800f64.ln()).abs() < 1e-12);
    }
}
