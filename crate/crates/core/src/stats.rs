//! Small statistical toolkit for the Monte Carlo checks.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

/// Sample moments up to order four.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Moments {
    pub count: usize,
    pub mean: f64,
    m2: f64,
    m3: f64,
    m4: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        let n1 = self.count as f64;
        self.count += 1;
        let n = self.count as f64;
        let delta = x - self.mean;
        let dn = delta / n;
        let dn2 = dn * dn;
        let term1 = delta * dn * n1;
        self.mean += dn;
        self.m4 += term1 * dn2 * (n * n - 3.0 * n + 3.0) + 6.0 * dn2 * self.m2 - 4.0 * dn * self.m3;
        self.m3 += term1 * dn * (n - 2.0) - 3.0 * dn * self.m2;
        self.m2 += term1;
    }

    pub fn from_slice(xs: &[f64]) -> Self {
        let mut m = Self::default();
        xs.iter().for_each(|&x| m.push(x));
        m
    }

    /// Unbiased variance.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        self.m2 / (self.count as f64 - 1.0)
    }

    pub fn std_dev(&self) -> f64 {
        self.variance().sqrt()
    }

    /// Standard error of the mean.
    pub fn se_mean(&self) -> f64 {
        if self.count == 0 {
            return f64::NAN;
        }
        (self.variance() / self.count as f64).sqrt()
    }

    /// Fourth central moment (biased).
    pub fn central4(&self) -> f64 {
        self.m4 / self.count as f64
    }

    /// Standard error of the sample variance, `sqrt((m4 - s^4 (n-3)/(n-1)) / n)`.
    pub fn se_variance(&self) -> f64 {
        let n = self.count as f64;
        if n < 4.0 {
            return f64::NAN;
        }
        let s2 = self.variance();
        ((self.central4() - s2 * s2 * (n - 3.0) / (n - 1.0)) / n).max(0.0).sqrt()
    }
}

impl FromIterator<f64> for Moments {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut m = Self::default();
        iter.into_iter().for_each(|x| m.push(x));
        m
    }
}

/// Sample covariance of paired observations.
pub fn covariance(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / (n - 1.0)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Two-sample Kolmogorov–Smirnov test with the asymptotic p-value
/// (Stephens' small-sample correction).
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<TestResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Shape("empty sample".into()));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let en = (na * nb / (na + nb)).sqrt();
    let p_value = kolmogorov_q((en + 0.12 + 0.11 / en) * d);
    Ok(TestResult { statistic: d, p_value })
}

/// Survival function of the Kolmogorov distribution.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Pearson chi-square goodness of fit of integer observations against a
/// discrete law `pmf` on `{0, 1, ...}`. Cells with expected count below
/// `min_expected` are pooled into their neighbours; the last cell absorbs the tail.
pub fn chi_square_gof(observations: &[u64], pmf: impl Fn(u64) -> f64, min_expected: f64) -> Result<TestResult> {
    let total = observations.len() as f64;
    if total == 0.0 {
        return Err(Error::Shape("no observations".into()));
    }
    let max = observations.iter().copied().max().unwrap_or(0);
    let mut counts = vec![0u64; max as usize + 1];
    for &o in observations {
        counts[o as usize] += 1;
    }
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut obs, mut exp, mut cum) = (0.0, 0.0, 0.0);
    for (k, &c) in counts.iter().enumerate() {
        let p = pmf(k as u64);
        cum += p;
        obs += c as f64;
        exp += p * total;
        if exp >= min_expected && (1.0 - cum) * total >= min_expected {
            cells.push((obs, exp));
            obs = 0.0;
            exp = 0.0;
        }
    }
    exp += (1.0 - cum).max(0.0) * total;
    match cells.last_mut() {
        Some(last) if exp < min_expected => {
            last.0 += obs;
            last.1 += exp;
        }
        _ => cells.push((obs, exp)),
    }
    if cells.len() < 2 {
        return Err(Error::Shape("too few cells for a chi-square test".into()));
    }
    let statistic: f64 = cells.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    let dof = (cells.len() - 1) as f64;
    let chi = ChiSquared::new(dof).map_err(|e| Error::Parameter(e.to_string()))?;
    Ok(TestResult {
        statistic,
        p_value: chi.sf(statistic),
    })
}

/// Binomial proportion with a Wilson score interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Proportion {
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
}

pub fn wilson(successes: usize, trials: usize, z: f64) -> Proportion {
    if trials == 0 {
        return Proportion {
            estimate: 0.0,
            lower: 0.0,
            upper: 1.0,
        };
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    Proportion {
        estimate: p,
        lower: (centre - half).max(0.0),
        upper: (centre + half).min(1.0),
    }
}

/// Ordinary least squares `y = intercept + slope x`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub residuals: Vec<f64>,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::Fit("need at least two paired points".into()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx <= 1e-14 * (1.0 + mx * mx) * n {
        return Err(Error::Fit("degenerate design".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals = xs.iter().zip(ys).map(|(x, y)| y - intercept - slope * x).collect();
    Ok(LinearFit {
        slope,
        intercept,
        residuals,
    })
}
