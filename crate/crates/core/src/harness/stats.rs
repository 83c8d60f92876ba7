use super::HarnessError;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use std::collections::{BTreeMap, BTreeSet};

/// Significance level used when none is given.
pub const DEFAULT_ALPHA: f64 = 0.01;
/// Bins with a smaller expected count are pooled before the chi-square test.
pub const MIN_EXPECTED_COUNT: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RepetitionPlan {
    pub epsilon: f64,
    pub delta: f64,
    pub shots: u64,
}

/// Shots needed so that every empirical outcome frequency is within
/// `epsilon` of its probability with confidence `1 - delta`, by the
/// two-sided Hoeffding bound: `ceil(ln(2/delta) / (2 epsilon^2))`.
pub fn chernoff_shots(epsilon: f64, delta: f64) -> Result<RepetitionPlan, HarnessError> {
    for (name, v) in [("epsilon", epsilon), ("delta", delta)] {
        if !(v > 0.0 && v < 1.0) {
            return Err(HarnessError::OutOfRange(format!("{name} = {v} must lie in (0, 1)")));
        }
    }
    let shots = ((2.0 / delta).ln() / (2.0 * epsilon * epsilon)).ceil() as u64;
    Ok(RepetitionPlan {
        epsilon,
        delta,
        shots,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Inconclusive,
    Fail,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Inconclusive => "inconclusive",
            Verdict::Fail => "fail",
        }
    }

    pub fn from_bool(pass: bool) -> Self {
        if pass {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistributionVerdict {
    pub tvd: f64,
    pub chi_square: f64,
    pub degrees_of_freedom: usize,
    pub p_value: f64,
    pub verdict: Verdict,
    pub shots: u64,
}

pub fn total_variation(a: &BTreeMap<String, f64>, b: &BTreeMap<String, f64>) -> f64 {
    let keys: BTreeSet<&String> = a.keys().chain(b.keys()).collect();
    0.5 * keys
        .into_iter()
        .map(|k| (a.get(k).unwrap_or(&0.0) - b.get(k).unwrap_or(&0.0)).abs())
        .sum::<f64>()
}

pub fn empirical(counts: &BTreeMap<String, u64>) -> BTreeMap<String, f64> {
    let n: u64 = counts.values().sum();
    counts
        .iter()
        .map(|(k, c)| (k.clone(), *c as f64 / n.max(1) as f64))
        .collect()
}

/// Merges bins (given as per-bin vectors of values, keyed by the pooling
/// weight `weight[i]`) until every bin's weight is at least
/// [`MIN_EXPECTED_COUNT`]. Bins are absorbed smallest first.
fn pool<const K: usize>(mut bins: Vec<[f64; K]>, weight: impl Fn(&[f64; K]) -> f64) -> Vec<[f64; K]> {
    bins.sort_by(|a, b| weight(a).total_cmp(&weight(b)));
    while bins.len() > 1 && weight(&bins[0]) < MIN_EXPECTED_COUNT {
        let small = bins.remove(0);
        for (dst, src) in bins[0].iter_mut().zip(small) {
            *dst += src;
        }
        bins.sort_by(|a, b| weight(a).total_cmp(&weight(b)));
    }
    bins
}

fn chi_square_sf(stat: f64, df: usize) -> f64 {
    if df == 0 {
        return if stat > 0.0 { 0.0 } else { 1.0 };
    }
    ChiSquared::new(df as f64).expect("df > 0").sf(stat)
}

/// Goodness of fit of `observed` counts against `expected` probabilities.
/// Passes iff the chi-square p-value is at least `alpha`; any observation of
/// a zero-probability outcome fails outright.
pub fn compare_distributions(
    observed: &BTreeMap<String, u64>,
    expected: &BTreeMap<String, f64>,
    alpha: f64,
) -> Result<DistributionVerdict, HarnessError> {
    let n: u64 = observed.values().sum();
    if n == 0 {
        return Err(HarnessError::EmptyObservation);
    }
    let total: f64 = expected.values().sum();
    if (total - 1.0).abs() > 1e-9 || expected.values().any(|p| *p < 0.0) {
        return Err(HarnessError::InvalidDistribution(format!(
            "expected probabilities sum to {total}"
        )));
    }
    let tvd = total_variation(&empirical(observed), expected);
    let impossible = observed
        .iter()
        .any(|(k, c)| *c > 0 && expected.get(k).copied().unwrap_or(0.0) == 0.0);

    let nf = n as f64;
    let bins: Vec<[f64; 2]> = expected
        .iter()
        .filter(|(_, p)| **p > 0.0)
        .map(|(k, p)| [*observed.get(k).unwrap_or(&0) as f64, nf * p])
        .collect();
    let bins = pool(bins, |b| b[1]);
    let chi_square: f64 = if impossible {
        f64::INFINITY
    } else {
        bins.iter().map(|[o, e]| (o - e).powi(2) / e).sum()
    };
    let df = bins.len().saturating_sub(1);
    let p_value = if impossible { 0.0 } else { chi_square_sf(chi_square, df) };
    Ok(DistributionVerdict {
        tvd,
        chi_square,
        degrees_of_freedom: df,
        p_value,
        verdict: Verdict::from_bool(p_value >= alpha),
        shots: n,
    })
}

/// Two-sample chi-square homogeneity test on two count tables.
pub fn compare_samples(
    a: &BTreeMap<String, u64>,
    b: &BTreeMap<String, u64>,
    alpha: f64,
) -> Result<DistributionVerdict, HarnessError> {
    let (na, nb) = (a.values().sum::<u64>() as f64, b.values().sum::<u64>() as f64);
    if na == 0.0 || nb == 0.0 {
        return Err(HarnessError::EmptyObservation);
    }
    let keys: BTreeSet<&String> = a.keys().chain(b.keys()).collect();
    let bins: Vec<[f64; 2]> = keys
        .iter()
        .map(|k| [*a.get(*k).unwrap_or(&0) as f64, *b.get(*k).unwrap_or(&0) as f64])
        .collect();
    let total = na + nb;
    // Pool on the smaller of the two expected cell counts.
    let bins = pool(bins, |c| (c[0] + c[1]) * na.min(nb) / total);
    let mut chi_square = 0.0;
    for [x, y] in &bins {
        let row = x + y;
        for (obs, n) in [(x, na), (y, nb)] {
            let e = row * n / total;
            if e > 0.0 {
                chi_square += (obs - e).powi(2) / e;
            }
        }
    }
    let df = bins.len().saturating_sub(1);
    let p_value = chi_square_sf(chi_square, df);
    Ok(DistributionVerdict {
        tvd: total_variation(&empirical(a), &empirical(b)),
        chi_square,
        degrees_of_freedom: df,
        p_value,
        verdict: Verdict::from_bool(p_value >= alpha),
        shots: (na + nb) as u64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counts(pairs: &[(&str, u64)]) -> BTreeMap<String, u64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    fn dist(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn chernoff_examples() {
        assert_eq!(chernoff_shots(0.05, 0.01).unwrap().shots, 1060);
        assert_eq!(chernoff_shots(0.5, 0.5).unwrap().shots, 3);
        assert!(chernoff_shots(0.0, 0.01).is_err());
        assert!(chernoff_shots(0.1, 1.0).is_err());
    }

    #[test]
    fn all_zeros_vs_uniform_fails() {
        let v = compare_distributions(&counts(&[("0", 1000)]), &dist(&[("0", 0.5), ("1", 0.5)]), 0.01).unwrap();
        assert_eq!(v.verdict, Verdict::Fail);
        assert!((v.tvd - 0.5).abs() < 1e-12);
    }

    #[test]
    fn exact_match_passes() {
        let v = compare_distributions(&counts(&[("00", 500), ("11", 500)]), &dist(&[("00", 0.5), ("11", 0.5)]), 0.01)
            .unwrap();
        assert_eq!((v.verdict, v.chi_square, v.p_value), (Verdict::Pass, 0.0, 1.0));
    }

    #[test]
    fn impossible_outcome_fails() {
        let v = compare_distributions(&counts(&[("0", 999), ("1", 1)]), &dist(&[("0", 1.0)]), 0.01).unwrap();
        assert_eq!(v.verdict, Verdict::Fail);
    }

    #[test]
    fn small_bins_are_pooled() {
        // 8 outcomes with tiny expected counts at 20 shots pool into bins >= 5.
        let expected: BTreeMap<String, f64> = (0..8).map(|i| (format!("{i:03b}"), 0.125)).collect();
        let observed: BTreeMap<String, u64> = (0..8).map(|i| (format!("{i:03b}"), if i < 4 { 5 } else { 0 })).collect();
        let v = compare_distributions(&observed, &expected, 0.01).unwrap();
        assert!(v.degrees_of_freedom < 7);
    }

    #[test]
    fn two_sample_identical_and_disjoint() {
        let a = counts(&[("00", 530), ("11", 470)]);
        assert_eq!(compare_samples(&a, &a, 0.01).unwrap().p_value, 1.0);
        let b = counts(&[("00", 510), ("10", 490)]);
        assert_eq!(compare_samples(&a, &b, 0.01).unwrap().verdict, Verdict::Fail);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            compare_distributions(&BTreeMap::new(), &dist(&[("0", 1.0)]), 0.01),
            Err(HarnessError::EmptyObservation)
        ));
        assert!(compare_distributions(&counts(&[("0", 1)]), &dist(&[("0", 0.7)]), 0.01).is_err());
    }
}
