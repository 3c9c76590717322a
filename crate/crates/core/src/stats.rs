//! Student's t distribution and the paired (dependent means) t-test.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SIGNIFICANCE_LEVEL: f64 = 0.05;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("paired samples differ in length ({a} vs {b})")]
    LengthMismatch { a: usize, b: usize },
    #[error("a paired t-test needs at least two pairs, got {0}")]
    TooFewSamples(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairedTestResult {
    pub t: f64,
    pub df: u64,
    /// Two-tailed.
    pub p: f64,
    pub significant: bool,
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// ln Γ(x) for x > 0 (Lanczos approximation, reflection below 1/2).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (k, &c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + k as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Continued fraction for the incomplete beta function (modified Lentz).
fn beta_continued_fraction(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=1000 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta function I_x(a, b).
pub fn regularized_incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_continued_fraction(a, b, x) / a
    } else {
        1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b
    }
}

/// P(T <= t) for Student's t with `df` degrees of freedom.
pub fn student_t_cdf(t: f64, df: u64) -> f64 {
    assert!(df >= 1, "df must be positive");
    if t == 0.0 {
        return 0.5;
    }
    if t.is_infinite() {
        return if t > 0.0 { 1.0 } else { 0.0 };
    }
    let v = df as f64;
    let tail = 0.5 * regularized_incomplete_beta(v / 2.0, 0.5, v / (v + t * t));
    if t > 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

/// Two-tailed P(|T| >= |t|).
pub fn student_t_two_tailed(t: f64, df: u64) -> f64 {
    if t == 0.0 {
        return 1.0;
    }
    if t.is_infinite() {
        return 0.0;
    }
    let v = df as f64;
    regularized_incomplete_beta(v / 2.0, 0.5, v / (v + t * t)).clamp(0.0, 1.0)
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation with the n-1 denominator.
pub fn sample_sd(xs: &[f64]) -> f64 {
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)).sqrt()
}

/// t-test for two dependent means on d = a - b.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<PairedTestResult, StatsError> {
    if a.len() != b.len() {
        return Err(StatsError::LengthMismatch { a: a.len(), b: b.len() });
    }
    let n = a.len();
    if n < 2 {
        return Err(StatsError::TooFewSamples(n));
    }
    let df = (n - 1) as u64;
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let m = mean(&d);
    let sd = sample_sd(&d);
    let (t, p) = if sd == 0.0 {
        if m == 0.0 {
            (0.0, 1.0)
        } else {
            (m.signum() * f64::INFINITY, 0.0)
        }
    } else {
        let t = m / (sd / (n as f64).sqrt());
        (t, student_t_two_tailed(t, df))
    };
    Ok(PairedTestResult { t, df, p, significant: p < SIGNIFICANCE_LEVEL })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms() {
        for &t in &[-5.0, -1.3, -0.2, 0.0, 0.4, 1.0, 2.5, 30.0] {
            let df1 = 0.5 + f64::atan(t) / std::f64::consts::PI;
            assert!((student_t_cdf(t, 1) - df1).abs() < 1e-12, "df=1 t={t}");
            let df2 = 0.5 + t / (2.0 * (2.0 + t * t).sqrt());
            assert!((student_t_cdf(t, 2) - df2).abs() < 1e-12, "df=2 t={t}");
        }
        assert_eq!(student_t_cdf(1.0, 1), 0.75);
        assert!((student_t_cdf(3.4641, 2) - 0.9629).abs() < 1e-4);
    }

    #[test]
    fn gamma_at_integers() {
        let mut fact = 1.0f64;
        for n in 1..20u32 {
            assert!((ln_gamma(n as f64) - fact.ln()).abs() < 1e-12, "n={n}");
            fact *= n as f64;
        }
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-13);
    }

    #[test]
    fn d_one_two_three() {
        let r = paired_t_test(&[1.0, 2.0, 3.0], &[0.0, 0.0, 0.0]).unwrap();
        assert!((r.t - 3.4641).abs() < 1e-4);
        assert_eq!(r.df, 2);
        assert!((r.p - 0.0742).abs() < 1e-4);
        assert!(!r.significant);
    }

    #[test]
    fn edge_rules() {
        let r = paired_t_test(&[4.0, 5.0], &[4.0, 5.0]).unwrap();
        assert_eq!((r.t, r.p, r.significant), (0.0, 1.0, false));
        let r = paired_t_test(&[5.0, 6.0, 7.0], &[4.0, 5.0, 6.0]).unwrap();
        assert_eq!((r.p, r.significant), (0.0, true));
        assert!(r.t.is_infinite());
        assert_eq!(paired_t_test(&[1.0], &[1.0]), Err(StatsError::TooFewSamples(1)));
        assert_eq!(paired_t_test(&[1.0, 2.0], &[1.0]), Err(StatsError::LengthMismatch { a: 2, b: 1 }));
    }

    #[test]
    fn swapping_negates_t() {
        let a = [3.0, 9.0, 4.0, 7.5, 1.0];
        let b = [2.0, 8.0, 6.0, 5.0, 0.5];
        let x = paired_t_test(&a, &b).unwrap();
        let y = paired_t_test(&b, &a).unwrap();
        assert_eq!(x.t, -y.t);
        assert_eq!(x.p, y.p);
    }
}
