//! Hypothesis tests behind the significance markers of the reports, and
//! the incomplete gamma function they rest on.

use serde::{Deserialize, Serialize};
use libm::{erfc, lgamma as ln_gamma};

use crate::error::{Error, Result};
use crate::model::DiscreteDistribution;

pub const DEFAULT_ALPHA: f64 = 0.05;

const EPS: f64 = 1e-16;
const MAX_ITER: usize = 100_000;

/// Outcome of a hypothesis test.
///
/// `reject` is `p_value < alpha`, except for Anderson-Darling at a tabulated
/// level, where it compares the statistic with `critical_value`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub test: String,
    pub statistic: f64,
    /// Degrees of freedom, for chi-square tests.
    pub dof: Option<u64>,
    /// Effective sample size.
    pub n: u64,
    pub p_value: f64,
    pub alpha: f64,
    pub reject: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub critical_value: Option<f64>,
}

impl TestResult {
    fn from_p(test: &str, statistic: f64, dof: Option<u64>, n: u64, p_value: f64, alpha: f64) -> Self {
        let p_value = p_value.clamp(0.0, 1.0);
        Self {
            test: test.to_owned(),
            statistic,
            dof,
            n,
            p_value,
            alpha,
            reject: p_value < alpha,
            critical_value: None,
        }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("alpha {alpha} not in (0, 1)")))
    }
}

// ---------------------------------------------------------------------------
// Special functions
// ---------------------------------------------------------------------------

fn gamma_domain(s: f64, x: f64) -> Result<()> {
    if !s.is_finite() || s <= 0.0 || x.is_nan() || x < 0.0 {
        return Err(Error::Domain(format!("incomplete gamma at s={s}, x={x}")));
    }
    Ok(())
}

/// `exp(-x + s ln x - ln Gamma(s))`
fn gamma_prefactor(s: f64, x: f64) -> f64 {
    (-x + s * x.ln() - ln_gamma(s)).exp()
}

fn lower_series(s: f64, x: f64) -> f64 {
    let mut term = 1.0 / s;
    let mut sum = term;
    let mut a = s;
    for _ in 0..MAX_ITER {
        a += 1.0;
        term *= x / a;
        sum += term;
        if term.abs() < sum.abs() * EPS {
            break;
        }
    }
    sum * gamma_prefactor(s, x)
}

/// Upper tail by the Legendre continued fraction (modified Lentz).
fn upper_continued_fraction(s: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - s;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - s);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    h * gamma_prefactor(s, x)
}

/// Lower regularized incomplete gamma `P(s, x)`.
pub fn regularized_gamma_p(s: f64, x: f64) -> Result<f64> {
    gamma_domain(s, x)?;
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    let p = if x < s + 1.0 { lower_series(s, x) } else { 1.0 - upper_continued_fraction(s, x) };
    Ok(p.clamp(0.0, 1.0))
}

/// Upper regularized incomplete gamma `Q(s, x) = 1 - P(s, x)`, accurate in the tail.
pub fn regularized_gamma_q(s: f64, x: f64) -> Result<f64> {
    gamma_domain(s, x)?;
    if x == 0.0 {
        return Ok(1.0);
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    let q = if x < s + 1.0 { 1.0 - lower_series(s, x) } else { upper_continued_fraction(s, x) };
    Ok(q.clamp(0.0, 1.0))
}

fn chi2_domain(x: f64, dof: u64) -> Result<()> {
    if dof == 0 || x.is_nan() || x < 0.0 {
        return Err(Error::Domain(format!("chi-square at x={x}, dof={dof}")));
    }
    Ok(())
}

pub fn chi2_cdf(x: f64, dof: u64) -> Result<f64> {
    chi2_domain(x, dof)?;
    regularized_gamma_p(dof as f64 / 2.0, x / 2.0)
}

/// Survival function `1 - F(x)`.
pub fn chi2_sf(x: f64, dof: u64) -> Result<f64> {
    chi2_domain(x, dof)?;
    regularized_gamma_q(dof as f64 / 2.0, x / 2.0)
}

pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

// ---------------------------------------------------------------------------
// Pearson chi-square tests
// ---------------------------------------------------------------------------

/// Goodness of fit of `counts` to `U([k])`.
pub fn chi2_gof_uniform(counts: &[u64], alpha: f64) -> Result<TestResult> {
    check_alpha(alpha)?;
    if counts.len() < 2 {
        return Err(Error::InvalidK(counts.len()));
    }
    let n: u64 = counts.iter().sum();
    if n == 0 {
        return Err(Error::EmptyCounts);
    }
    let expected = n as f64 / counts.len() as f64;
    let t: f64 = counts.iter().map(|&o| (o as f64 - expected).powi(2) / expected).sum();
    let dof = counts.len() as u64 - 1;
    Ok(TestResult::from_p("pearson_chi2_gof_uniform", t, Some(dof), n, chi2_sf(t, dof)?, alpha))
}

/// Goodness of fit of `counts` to an arbitrary reference distribution.
/// Cells with zero reference mass are dropped from the statistic; an
/// observation in such a cell makes the statistic infinite.
pub fn chi2_gof(counts: &[u64], reference: &DiscreteDistribution, alpha: f64) -> Result<TestResult> {
    check_alpha(alpha)?;
    if counts.len() != reference.k() {
        return Err(Error::LengthMismatch(counts.len(), reference.k()));
    }
    let n: u64 = counts.iter().sum();
    if n == 0 {
        return Err(Error::EmptyCounts);
    }
    let mut t = 0.0;
    let mut cells = 0u64;
    for (&o, &q) in counts.iter().zip(reference.probs()) {
        if q == 0.0 {
            if o > 0 {
                t = f64::INFINITY;
            }
            continue;
        }
        cells += 1;
        let e = n as f64 * q;
        t += (o as f64 - e).powi(2) / e;
    }
    let dof = cells.saturating_sub(1).max(1);
    let p = if t.is_infinite() { 0.0 } else { chi2_sf(t, dof)? };
    Ok(TestResult::from_p("pearson_chi2_gof", t, Some(dof), n, p, alpha))
}

/// Pearson test of independence on a `k x 2` table, i.e. of equal
/// column-one proportions across rows. `dof = k - 1`.
pub fn chi2_homogeneity(table: &[[u64; 2]], alpha: f64) -> Result<TestResult> {
    check_alpha(alpha)?;
    if table.len() < 2 {
        return Err(Error::InvalidK(table.len()));
    }
    let rows: Vec<u64> = table.iter().map(|r| r[0] + r[1]).collect();
    let cols = [table.iter().map(|r| r[0]).sum::<u64>(), table.iter().map(|r| r[1]).sum::<u64>()];
    if rows.contains(&0) || cols.contains(&0) {
        return Err(Error::DegenerateMargin);
    }
    let n = (cols[0] + cols[1]) as f64;
    let mut t = 0.0;
    for (row, &rt) in table.iter().zip(&rows) {
        for (c, &ct) in cols.iter().enumerate() {
            let e = rt as f64 * ct as f64 / n;
            t += (row[c] as f64 - e).powi(2) / e;
        }
    }
    let dof = table.len() as u64 - 1;
    Ok(TestResult::from_p("pearson_chi2_homogeneity", t, Some(dof), n as u64, chi2_sf(t, dof)?, alpha))
}

/// Compares the rates of two binary losses with a 2x2 Pearson test
/// (rows: variant, columns: loss 0 / loss 1), no continuity correction.
pub fn chi2_binary_paired(a: &[bool], b: &[bool], alpha: f64) -> Result<TestResult> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    let row = |v: &[bool]| {
        let ones = v.iter().filter(|&&x| x).count() as u64;
        [v.len() as u64 - ones, ones]
    };
    let mut r = chi2_homogeneity(&[row(a), row(b)], alpha)?;
    r.test = "pearson_chi2_binary".into();
    Ok(r)
}

// ---------------------------------------------------------------------------
// Wilcoxon signed-rank
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WilcoxonMethod {
    /// Exact up to [`WILCOXON_EXACT_MAX_N`] informative pairs, normal above.
    #[default]
    Auto,
    Exact,
    Normal,
}

pub const WILCOXON_EXACT_MAX_N: usize = 25;

/// Ranks of `|d|` (ascending), doubled so tied averages stay integral.
fn doubled_ranks(abs: &[f64]) -> (Vec<u64>, Vec<u64>) {
    let mut order: Vec<usize> = (0..abs.len()).collect();
    order.sort_by(|&i, &j| abs[i].total_cmp(&abs[j]));
    let mut ranks = vec![0u64; abs.len()];
    let mut ties = Vec::new();
    let mut start = 0;
    while start < order.len() {
        let mut end = start;
        while end + 1 < order.len() && abs[order[end + 1]] == abs[order[start]] {
            end += 1;
        }
        // positions start..=end hold ranks start+1..=end+1
        let doubled = (start + end + 2) as u64;
        for &i in &order[start..=end] {
            ranks[i] = doubled;
        }
        if end > start {
            ties.push((end - start + 1) as u64);
        }
        start = end + 1;
    }
    (ranks, ties)
}

/// Number of sign assignments giving each doubled positive-rank sum.
pub fn signed_rank_distribution(doubled: &[u64]) -> Vec<u64> {
    let total: u64 = doubled.iter().sum();
    let mut counts = vec![0u64; total as usize + 1];
    counts[0] = 1;
    let mut reach = 0usize;
    for &r in doubled {
        let r = r as usize;
        for s in (0..=reach).rev() {
            if counts[s] > 0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    counts
}

/// Two-sided exact p-value from the doubled rank sum of positive differences.
pub fn exact_signed_rank_p(doubled: &[u64], w_plus_doubled: u64) -> f64 {
    let dist = signed_rank_distribution(doubled);
    let w = w_plus_doubled as usize;
    let lower: u64 = dist[..=w.min(dist.len() - 1)].iter().sum();
    let upper: u64 = dist[w.min(dist.len())..].iter().sum();
    let patterns = 2f64.powi(doubled.len() as i32);
    (2.0 * lower.min(upper) as f64 / patterns).min(1.0)
}

pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64], alpha: f64) -> Result<TestResult> {
    wilcoxon_signed_rank_with(a, b, alpha, WilcoxonMethod::Auto)
}

/// Two-sided signed-rank test of `a - b`. Zero differences are dropped,
/// ties get average ranks. The reported statistic is `min(W+, W-)`.
pub fn wilcoxon_signed_rank_with(
    a: &[f64],
    b: &[f64],
    alpha: f64,
    method: WilcoxonMethod,
) -> Result<TestResult> {
    check_alpha(alpha)?;
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    if diffs.iter().any(|d| !d.is_finite()) {
        return Err(Error::Domain("non-finite paired difference".into()));
    }
    let n = diffs.len();
    if n == 0 {
        return Err(Error::AllZeroDifferences);
    }
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let (ranks, ties) = doubled_ranks(&abs);
    let w_plus2: u64 = ranks.iter().zip(&diffs).filter(|(_, d)| **d > 0.0).map(|(r, _)| r).sum();
    let total2: u64 = ranks.iter().sum();
    let w_plus = w_plus2 as f64 / 2.0;
    let w_minus = (total2 - w_plus2) as f64 / 2.0;

    let exact = match method {
        WilcoxonMethod::Auto => n <= WILCOXON_EXACT_MAX_N,
        WilcoxonMethod::Exact => true,
        WilcoxonMethod::Normal => false,
    };
    let (name, p) = if exact {
        if n > 63 {
            return Err(Error::Domain(format!("exact signed-rank enumeration for n={n}")));
        }
        ("wilcoxon_signed_rank_exact", exact_signed_rank_p(&ranks, w_plus2))
    } else {
        let nf = n as f64;
        let mean = nf * (nf + 1.0) / 4.0;
        let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / 48.0;
        let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term;
        let z = ((w_plus - mean).abs() - 0.5).max(0.0) / var.sqrt();
        ("wilcoxon_signed_rank_normal", erfc(z / std::f64::consts::SQRT_2))
    };
    Ok(TestResult::from_p(name, w_plus.min(w_minus), None, n as u64, p, alpha))
}

// ---------------------------------------------------------------------------
// Anderson-Darling
// ---------------------------------------------------------------------------

/// Critical values of the small-sample adjusted statistic when mean and
/// variance are estimated (Stephens' case 3).
pub const AD_CRITICAL_VALUES: [(f64, f64); 5] =
    [(0.15, 0.576), (0.10, 0.656), (0.05, 0.752), (0.025, 0.873), (0.01, 1.035)];

/// `(A^2, A*^2)` for a normal fit with mean and variance estimated from the sample.
pub fn anderson_darling_statistic(sample: &[f64]) -> Result<(f64, f64)> {
    let n = sample.len();
    if n < 8 {
        return Err(Error::TooFewSamples { got: n, needed: 8 });
    }
    if sample.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("non-finite sample value".into()));
    }
    let nf = n as f64;
    let mean = sample.iter().sum::<f64>() / nf;
    let var = sample.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    if var.is_nan() || var <= 0.0 {
        return Err(Error::ZeroVariance);
    }
    let sd = var.sqrt();
    let mut z: Vec<f64> = sample.iter().map(|v| (v - mean) / sd).collect();
    z.sort_by(f64::total_cmp);
    // ln F(z) and ln(1 - F(z)) through erfc keep precision in both tails
    let ln_cdf = |z: f64| (0.5 * erfc(-z / std::f64::consts::SQRT_2)).ln();
    let s: f64 = (0..n)
        .map(|i| (2 * i + 1) as f64 * (ln_cdf(z[i]) + ln_cdf(-z[n - 1 - i])))
        .sum();
    let a2 = -nf - s / nf;
    Ok((a2, a2 * (1.0 + 0.75 / nf + 2.25 / (nf * nf))))
}

fn anderson_darling_p(a: f64) -> f64 {
    if a < 0.2 {
        1.0 - (-13.436 + 101.14 * a - 223.73 * a * a).exp()
    } else if a < 0.34 {
        1.0 - (-8.318 + 42.796 * a - 59.938 * a * a).exp()
    } else if a < 0.6 {
        (0.9177 - 4.279 * a - 1.38 * a * a).exp()
    } else if a < 10.0 {
        (1.2937 - 5.709 * a + 0.0186 * a * a).exp()
    } else {
        3.7e-24
    }
}

/// Normality test. The statistic is the adjusted `A*^2`; at a tabulated
/// level the decision uses the critical value, otherwise the approximate p.
pub fn anderson_darling_normal(sample: &[f64], alpha: f64) -> Result<TestResult> {
    check_alpha(alpha)?;
    let (_, adjusted) = anderson_darling_statistic(sample)?;
    let p = anderson_darling_p(adjusted).clamp(0.0, 1.0);
    let critical = AD_CRITICAL_VALUES.iter().find(|(a, _)| (a - alpha).abs() < 1e-12).map(|&(_, c)| c);
    Ok(TestResult {
        test: "anderson_darling_normal".into(),
        statistic: adjusted,
        dof: None,
        n: sample.len() as u64,
        p_value: p,
        alpha,
        reject: match critical {
            Some(c) => adjusted > c,
            None => p < alpha,
        },
        critical_value: critical,
    })
}
