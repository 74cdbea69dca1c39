//! Special functions and small-sample statistics backing the significance
//! test: log-gamma, the regularized incomplete beta function, the Student-t
//! distribution and compensated mean/standard deviation.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StatsError {
    #[error("argument out of domain: {0}")]
    Domain(String),
    #[error("continued fraction did not converge for a={a}, b={b}, x={x}")]
    NoConvergence { a: f64, b: f64, x: f64 },
    #[error("need at least {needed} values, got {got}")]
    TooFew { needed: usize, got: usize },
}

const LANCZOS_G: f64 = 7.0;
/// Lanczos coefficients for g = 7, n = 9.
#[allow(clippy::excessive_precision)]
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection: Γ(x)Γ(1−x) = π / sin(πx)
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).abs().ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS_COEF[0];
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

const CF_MAX_ITER: usize = 20_000;
const CF_EPS: f64 = 1e-15;
const CF_TINY: f64 = 1e-300;

/// Regularized incomplete beta function `I_x(a, b)`.
///
/// Evaluated by the continued fraction (modified Lentz), switching to
/// `1 − I_{1−x}(b, a)` when `x > (a+1)/(a+b+2)` where the fraction converges
/// faster.
pub fn regularized_incomplete_beta(a: f64, b: f64, x: f64) -> Result<f64, StatsError> {
    if !(a > 0.0 && a.is_finite() && b > 0.0 && b.is_finite()) {
        return Err(StatsError::Domain(format!("a={a}, b={b} must be positive and finite")));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(StatsError::Domain(format!("x={x} must lie in [0, 1]")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == 1.0 {
        return Ok(1.0);
    }
    let value = if x > (a + 1.0) / (a + b + 2.0) {
        1.0 - beta_continued_fraction(b, a, 1.0 - x)?
    } else {
        beta_continued_fraction(a, b, x)?
    };
    Ok(value.clamp(0.0, 1.0))
}

fn beta_continued_fraction(a: f64, b: f64, x: f64) -> Result<f64, StatsError> {
    let ln_front = a * x.ln() + b * (1.0 - x).ln() - ln_beta(a, b);
    let front = ln_front.exp() / a;

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let guard = |v: f64| if v.abs() < CF_TINY { CF_TINY } else { v };

    let mut c = 1.0;
    let mut d = 1.0 / guard(1.0 - qab * x / qap);
    let mut h = d;
    for m in 1..=CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;

        let even = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 / guard(1.0 + even * d);
        c = guard(1.0 + even / c);
        h *= d * c;

        let odd = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 / guard(1.0 + odd * d);
        c = guard(1.0 + odd / c);
        let delta = d * c;
        h *= delta;

        if (delta - 1.0).abs() < CF_EPS {
            return Ok(front * h);
        }
    }
    Err(StatsError::NoConvergence { a, b, x })
}

/// Student-t distribution with `df` degrees of freedom.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StudentT {
    df: f64,
}

impl StudentT {
    pub fn new(df: f64) -> Result<Self, StatsError> {
        if df > 0.0 && df.is_finite() {
            Ok(StudentT { df })
        } else {
            Err(StatsError::Domain(format!("degrees of freedom {df} must be positive and finite")))
        }
    }

    pub fn df(&self) -> f64 {
        self.df
    }

    /// `2·P(T ≥ |t|)`, the two-tailed p-value of statistic `t`.
    pub fn two_tailed(&self, t: f64) -> Result<f64, StatsError> {
        if t.is_nan() {
            return Err(StatsError::Domain("t is NaN".into()));
        }
        if t.is_infinite() {
            return Ok(0.0);
        }
        let x = self.df / (self.df + t * t);
        regularized_incomplete_beta(self.df / 2.0, 0.5, x)
    }

    pub fn cdf(&self, t: f64) -> Result<f64, StatsError> {
        let tail = 0.5 * self.two_tailed(t)?;
        Ok(if t >= 0.0 { 1.0 - tail } else { tail })
    }
}

/// `2·P(T ≥ |t|)` for a Student-t with `df` degrees of freedom.
pub fn student_t_sf2(t: f64, df: f64) -> Result<f64, StatsError> {
    StudentT::new(df)?.two_tailed(t)
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::default();
        for x in iter {
            s.add(x);
        }
        s
    }
}

pub fn mean(xs: &[f64]) -> Result<f64, StatsError> {
    if xs.is_empty() {
        return Err(StatsError::TooFew { needed: 1, got: 0 });
    }
    let sum: CompensatedSum = xs.iter().copied().collect();
    Ok(sum.value() / xs.len() as f64)
}

/// Mean and sample standard deviation (divisor `N − 1`).
pub fn sample_stats(xs: &[f64]) -> Result<(f64, f64), StatsError> {
    if xs.len() < 2 {
        return Err(StatsError::TooFew { needed: 2, got: xs.len() });
    }
    let m = mean(xs)?;
    let ss: CompensatedSum = xs.iter().map(|x| (x - m) * (x - m)).collect();
    let var = ss.value() / (xs.len() - 1) as f64;
    Ok((m, var.max(0.0).sqrt()))
}

/// Outcome of a two-tailed one-sample t-test on paired differences.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairedTTest {
    pub t: f64,
    pub df: f64,
    pub p_value: f64,
}

/// Two-tailed paired t-test on differences `d_i = a_i − b_i`.
///
/// Zero spread: `p = 1` if the mean difference is also zero, else `p = 0`.
pub fn paired_t_test(diffs: &[f64]) -> Result<PairedTTest, StatsError> {
    let (m, sd) = sample_stats(diffs)?;
    let n = diffs.len() as f64;
    let df = n - 1.0;
    if sd == 0.0 {
        let (t, p_value) = if m == 0.0 { (0.0, 1.0) } else { (m.signum() * f64::INFINITY, 0.0) };
        return Ok(PairedTTest { t, df, p_value });
    }
    let t = m / (sd / n.sqrt());
    let p_value = student_t_sf2(t, df)?;
    Ok(PairedTTest { t, df, p_value })
}
