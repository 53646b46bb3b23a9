//! Rank statistics for comparing corpus groups: Mann-Whitney U with an
//! exact permutation p-value for small samples and a tie-corrected normal
//! approximation otherwise, Cliff's delta effect size, and five-number
//! summaries with linear-interpolation quartiles.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Alternative {
    TwoSided,
    Less,
    Greater,
}

impl Alternative {
    pub fn parse(s: &str) -> Option<Alternative> {
        match s {
            "two-sided" | "two_sided" | "twosided" => Some(Alternative::TwoSided),
            "less" => Some(Alternative::Less),
            "greater" => Some(Alternative::Greater),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Exact,
    NormalApproximation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsResult {
    /// U statistic of the first sample.
    pub u: f64,
    pub p_value: f64,
    pub method: Method,
    pub alternative: Alternative,
}

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("sample is empty")]
    EmptySample,
    #[error("sample contains a non-finite value")]
    NonFinite,
}

/// Subset count at which the exact distribution is still computed by
/// default. Above this the normal approximation takes over unless the
/// caller forces the exact method.
pub const EXACT_SUBSET_LIMIT: f64 = 200_000.0;

fn check_sample(xs: &[f64]) -> Result<(), StatsError> {
    if xs.is_empty() {
        return Err(StatsError::EmptySample);
    }
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    Ok(())
}

/// Midranks of the pooled sample, in pooled order. Tied values share the
/// average of the ranks they occupy.
fn midranks(pooled: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..pooled.len()).collect();
    order.sort_by(|&a, &b| pooled[a].partial_cmp(&pooled[b]).unwrap());
    let mut ranks = vec![0.0; pooled.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && pooled[order[j + 1]] == pooled[order[i]] {
            j += 1;
        }
        // ranks are 1-based; the tie block spans ranks i+1 ..= j+1
        let avg = (i + j + 2) as f64 / 2.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Sizes of tie groups in the pooled sample, for the variance correction.
fn tie_groups(pooled: &[f64]) -> Vec<usize> {
    let mut sorted = pooled.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut groups = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        groups.push(j - i + 1);
        i = j + 1;
    }
    groups
}

fn u_statistic(a: &[f64], b: &[f64]) -> f64 {
    let pooled: Vec<f64> = a.iter().chain(b.iter()).copied().collect();
    let ranks = midranks(&pooled);
    let r_a: f64 = ranks[..a.len()].iter().sum();
    let n = a.len() as f64;
    r_a - n * (n + 1.0) / 2.0
}

fn binomial_capped(n: usize, k: usize, cap: f64) -> f64 {
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
        if acc > cap {
            return f64::INFINITY;
        }
    }
    acc
}

/// Exact permutation p-value, conditioning on the observed pooled values.
/// Counts n-element subsets of the doubled midranks by total, with a
/// subset-sum table; doubling makes every midrank an integer.
fn exact_p_value(a: &[f64], b: &[f64], alternative: Alternative) -> f64 {
    let n = a.len();
    let pooled: Vec<f64> = a.iter().chain(b.iter()).copied().collect();
    let ranks = midranks(&pooled);
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let s_obs: usize = doubled[..n].iter().sum();
    let s_max: usize = doubled.iter().sum();

    // dp[k][s]: subsets of size k of the ranks seen so far with doubled sum s
    let mut dp: Vec<Vec<u128>> = vec![vec![0; s_max + 1]; n + 1];
    dp[0][0] = 1;
    for &d in &doubled {
        for k in (1..=n).rev() {
            for s in (d..=s_max).rev() {
                dp[k][s] += dp[k - 1][s - d];
            }
        }
    }
    let total: u128 = dp[n].iter().sum();
    let le: u128 = dp[n][..=s_obs].iter().sum();
    let ge: u128 = dp[n][s_obs..].iter().sum();
    let p_le = le as f64 / total as f64;
    let p_ge = ge as f64 / total as f64;
    match alternative {
        Alternative::Less => p_le,
        Alternative::Greater => p_ge,
        Alternative::TwoSided => (2.0 * p_le.min(p_ge)).min(1.0),
    }
}

/// Tie-corrected normal approximation with continuity correction. The tail
/// is evaluated at the alternative-appropriate U so the correction always
/// points toward the mean.
fn normal_p_value(a: &[f64], b: &[f64], u_a: f64, alternative: Alternative) -> f64 {
    let n = a.len() as f64;
    let m = b.len() as f64;
    let big_n = n + m;
    let pooled: Vec<f64> = a.iter().chain(b.iter()).copied().collect();
    let tie_term: f64 = tie_groups(&pooled)
        .iter()
        .map(|&t| {
            let t = t as f64;
            t * t * t - t
        })
        .sum();
    let mean = n * m / 2.0;
    let variance = n * m / 12.0 * ((big_n + 1.0) - tie_term / (big_n * (big_n - 1.0)));
    if variance <= 0.0 {
        return 1.0;
    }
    let sd = variance.sqrt();
    let normal = Normal::new(0.0, 1.0).unwrap();
    let sf = |z: f64| 1.0 - normal.cdf(z);
    let u_b = n * m - u_a;
    match alternative {
        Alternative::Greater => sf((u_a - mean - 0.5) / sd),
        Alternative::Less => sf((u_b - mean - 0.5) / sd),
        Alternative::TwoSided => {
            let u_big = u_a.max(u_b);
            (2.0 * sf((u_big - mean - 0.5) / sd)).min(1.0)
        }
    }
}

/// Mann-Whitney U test with automatic method choice: exact while the
/// subset count C(n+m, n) stays at or below `EXACT_SUBSET_LIMIT`, normal
/// approximation beyond that.
pub fn mann_whitney_u(
    a: &[f64],
    b: &[f64],
    alternative: Alternative,
) -> Result<StatsResult, StatsError> {
    check_sample(a)?;
    check_sample(b)?;
    let method = if binomial_capped(a.len() + b.len(), a.len(), EXACT_SUBSET_LIMIT)
        <= EXACT_SUBSET_LIMIT
    {
        Method::Exact
    } else {
        Method::NormalApproximation
    };
    mann_whitney_u_with_method(a, b, alternative, method)
}

/// Mann-Whitney U with the method pinned by the caller.
pub fn mann_whitney_u_with_method(
    a: &[f64],
    b: &[f64],
    alternative: Alternative,
    method: Method,
) -> Result<StatsResult, StatsError> {
    check_sample(a)?;
    check_sample(b)?;
    let u = u_statistic(a, b);
    let p_value = match method {
        Method::Exact => exact_p_value(a, b, alternative),
        Method::NormalApproximation => normal_p_value(a, b, u, alternative),
    };
    Ok(StatsResult {
        u,
        p_value,
        method,
        alternative,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Magnitude {
    Negligible,
    Small,
    Medium,
    Large,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectSize {
    pub delta: f64,
    pub magnitude: Magnitude,
}

/// |delta| thresholds between negligible/small/medium/large.
pub const DELTA_SMALL: f64 = 0.147;
pub const DELTA_MEDIUM: f64 = 0.33;
pub const DELTA_LARGE: f64 = 0.474;

pub fn magnitude_of(delta: f64) -> Magnitude {
    let d = delta.abs();
    if d < DELTA_SMALL {
        Magnitude::Negligible
    } else if d < DELTA_MEDIUM {
        Magnitude::Small
    } else if d < DELTA_LARGE {
        Magnitude::Medium
    } else {
        Magnitude::Large
    }
}

/// Cliff's delta through the rank-derived U: ties split evenly between the
/// two directions, exactly like the pairwise definition.
pub fn cliffs_delta(a: &[f64], b: &[f64]) -> Result<EffectSize, StatsError> {
    check_sample(a)?;
    check_sample(b)?;
    let u_a = u_statistic(a, b);
    let nm = (a.len() * b.len()) as f64;
    let delta = (2.0 * u_a - nm) / nm;
    Ok(EffectSize {
        delta,
        magnitude: magnitude_of(delta),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiveNumber {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

/// Quantile with linear interpolation between order statistics
/// (h = (n-1)p), matching R's default type 7.
fn quantile_type7(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn summarize(values: &[f64]) -> Result<FiveNumber, StatsError> {
    check_sample(values)?;
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(FiveNumber {
        min: sorted[0],
        q1: quantile_type7(&sorted, 0.25),
        median: quantile_type7(&sorted, 0.5),
        q3: quantile_type7(&sorted, 0.75),
        max: sorted[sorted.len() - 1],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn midranks_average_over_ties() {
        assert_eq!(midranks(&[3.0, 1.0, 4.0, 1.0]), vec![3.0, 1.5, 4.0, 1.5]);
        assert_eq!(midranks(&[5.0, 5.0]), vec![1.5, 1.5]);
        assert_eq!(midranks(&[2.0]), vec![1.0]);
    }

    #[test]
    fn u_statistic_extremes() {
        // a entirely below b: U = 0; entirely above: U = n*m
        assert_eq!(u_statistic(&[1.0, 2.0], &[3.0, 4.0]), 0.0);
        assert_eq!(u_statistic(&[3.0, 4.0], &[1.0, 2.0]), 4.0);
    }

    #[test]
    fn exact_two_sided_separated_pairs() {
        // R_a can only reach its observed minimum one way out of C(4,2)=6,
        // so the two-sided exact p is 2/6
        let r = mann_whitney_u(&[1.0, 2.0], &[3.0, 4.0], Alternative::TwoSided).unwrap();
        assert_eq!(r.method, Method::Exact);
        close(r.p_value, 1.0 / 3.0, 1e-12);
    }

    #[test]
    fn exact_single_tied_observation() {
        let r = mann_whitney_u(&[5.0], &[5.0], Alternative::TwoSided).unwrap();
        assert_eq!(r.method, Method::Exact);
        close(r.p_value, 1.0, 1e-12);
        close(r.u, 0.5, 1e-12);
    }

    #[test]
    fn exact_one_sided_fully_separated_triples() {
        let r = mann_whitney_u(&[10.0, 11.0, 12.0], &[1.0, 2.0, 3.0], Alternative::Greater)
            .unwrap();
        assert_eq!(r.method, Method::Exact);
        close(r.p_value, 1.0 / 20.0, 1e-12);
        let r = mann_whitney_u(&[10.0, 11.0, 12.0], &[1.0, 2.0, 3.0], Alternative::Less).unwrap();
        close(r.p_value, 1.0, 1e-12);
    }

    #[test]
    fn method_auto_switches_on_subset_count() {
        // C(20,10) = 184756 <= 200000: exact
        let a: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let b: Vec<f64> = (0..10).map(|i| (i + 5) as f64).collect();
        let r = mann_whitney_u(&a, &b, Alternative::TwoSided).unwrap();
        assert_eq!(r.method, Method::Exact);
        // C(22,11) = 705432 > 200000: normal approximation
        let a: Vec<f64> = (0..11).map(|i| i as f64).collect();
        let b: Vec<f64> = (0..11).map(|i| (i + 5) as f64).collect();
        let r = mann_whitney_u(&a, &b, Alternative::TwoSided).unwrap();
        assert_eq!(r.method, Method::NormalApproximation);
    }

    #[test]
    fn forced_methods_agree_on_moderate_samples() {
        let a: Vec<f64> = vec![12.0, 15.0, 9.0, 20.0, 17.0, 11.0, 14.0, 16.0];
        let b: Vec<f64> = vec![8.0, 7.0, 13.0, 5.0, 9.0, 10.0, 6.0, 12.0];
        for alt in [Alternative::TwoSided, Alternative::Less, Alternative::Greater] {
            let exact = mann_whitney_u_with_method(&a, &b, alt, Method::Exact).unwrap();
            let normal =
                mann_whitney_u_with_method(&a, &b, alt, Method::NormalApproximation).unwrap();
            close(exact.p_value, normal.p_value, 0.02);
        }
    }

    #[test]
    fn degenerate_all_tied_normal_is_one() {
        let r = mann_whitney_u_with_method(
            &[2.0, 2.0, 2.0],
            &[2.0, 2.0, 2.0],
            Alternative::TwoSided,
            Method::NormalApproximation,
        )
        .unwrap();
        close(r.p_value, 1.0, 1e-12);
    }

    #[test]
    fn empty_and_non_finite_samples_error() {
        assert_eq!(
            mann_whitney_u(&[], &[1.0], Alternative::TwoSided),
            Err(StatsError::EmptySample)
        );
        assert_eq!(
            mann_whitney_u(&[1.0], &[f64::NAN], Alternative::TwoSided),
            Err(StatsError::NonFinite)
        );
        assert_eq!(summarize(&[]), Err(StatsError::EmptySample));
    }

    fn delta_pairwise(a: &[f64], b: &[f64]) -> f64 {
        let mut more = 0i64;
        let mut less = 0i64;
        for x in a {
            for y in b {
                if x > y {
                    more += 1;
                } else if x < y {
                    less += 1;
                }
            }
        }
        (more - less) as f64 / (a.len() * b.len()) as f64
    }

    #[test]
    fn cliffs_delta_matches_pairwise_counting() {
        let cases: Vec<(Vec<f64>, Vec<f64>)> = vec![
            (vec![1.0, 2.0, 3.0], vec![4.0, 5.0]),
            (vec![4.0, 5.0], vec![1.0, 2.0, 3.0]),
            (vec![1.0, 2.0, 2.0, 3.0], vec![2.0, 2.0, 4.0]),
            (vec![7.0], vec![7.0]),
            (vec![1.0, 1.0, 1.0], vec![1.0, 1.0]),
            (vec![3.0, 1.0, 4.0, 1.0, 5.0], vec![9.0, 2.0, 6.0, 5.0]),
        ];
        for (a, b) in cases {
            let got = cliffs_delta(&a, &b).unwrap().delta;
            close(got, delta_pairwise(&a, &b), 1e-12);
        }
    }

    #[test]
    fn magnitude_thresholds() {
        assert_eq!(magnitude_of(0.0), Magnitude::Negligible);
        assert_eq!(magnitude_of(0.146), Magnitude::Negligible);
        assert_eq!(magnitude_of(0.147), Magnitude::Small);
        assert_eq!(magnitude_of(-0.2), Magnitude::Small);
        assert_eq!(magnitude_of(0.33), Magnitude::Medium);
        assert_eq!(magnitude_of(0.473), Magnitude::Medium);
        assert_eq!(magnitude_of(0.474), Magnitude::Large);
        assert_eq!(magnitude_of(-1.0), Magnitude::Large);
    }

    #[test]
    fn five_number_linear_interpolation() {
        let s = summarize(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(s.min, 1.0);
        close(s.q1, 1.75, 1e-12);
        close(s.median, 2.5, 1e-12);
        close(s.q3, 3.25, 1e-12);
        assert_eq!(s.max, 4.0);
        let s = summarize(&[7.0]).unwrap();
        assert_eq!(s.median, 7.0);
        assert_eq!(s.q1, 7.0);
    }

    #[test]
    fn normal_tail_direction() {
        let lo: Vec<f64> = (0..40).map(|i| i as f64).collect();
        let hi: Vec<f64> = (0..40).map(|i| (i + 30) as f64).collect();
        let g = mann_whitney_u(&hi, &lo, Alternative::Greater).unwrap();
        assert_eq!(g.method, Method::NormalApproximation);
        assert!(g.p_value < 1e-6, "p = {}", g.p_value);
        let l = mann_whitney_u(&hi, &lo, Alternative::Less).unwrap();
        assert!(l.p_value > 0.999, "p = {}", l.p_value);
    }
}
