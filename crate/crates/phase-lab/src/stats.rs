//! Estimators and 95% confidence-interval conventions shared by every
//! experiment output.
//!
//! Medians use nearest-rank percentiles with the interval at percentiles
//! 50 +- 100/sqrt(N); fractions use f +- 2 sqrt(f(1-f))/sqrt(N) (coefficient
//! 2, matching plotted error bars, not 1.96); means use x +- 1.96 s/sqrt(N)
//! with the sample standard deviation.

use crate::error::{Error, Result};

/// Summary of a numeric sample: median and mean with their intervals.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SampleSummary {
    pub n: usize,
    pub median: f64,
    pub median_ci: (f64, f64),
    pub mean: f64,
    pub stddev: f64,
    pub mean_ci: (f64, f64),
}

/// Summary of a success fraction with its interval, clipped to [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FractionSummary {
    pub successes: u64,
    pub n: u64,
    pub f: f64,
    pub ci: (f64, f64),
}

/// Nearest-rank percentile of a sorted sample: the ceil(p/100 * N)-th
/// smallest value, with the rank clamped into [1, N].
fn percentile_nearest_rank(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    debug_assert!(n > 0);
    let rank = (p / 100.0 * n as f64).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

/// Median with its 95% interval at percentiles 50 +- 100/sqrt(N).
pub fn median_with_ci(samples: &[f64]) -> Result<(f64, f64, f64)> {
    if samples.is_empty() {
        return Err(Error::invalid("median of an empty sample"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let half_width = 100.0 / (sorted.len() as f64).sqrt();
    let median = percentile_nearest_rank(&sorted, 50.0);
    let lo = percentile_nearest_rank(&sorted, (50.0 - half_width).max(0.0));
    let hi = percentile_nearest_rank(&sorted, (50.0 + half_width).min(100.0));
    Ok((median, lo, hi))
}

/// Plain nearest-rank median.
pub fn median(samples: &[f64]) -> Result<f64> {
    median_with_ci(samples).map(|(m, _, _)| m)
}

/// Success fraction with the interval f +- 2 sqrt(f(1-f))/sqrt(N).
pub fn fraction_with_ci(successes: u64, n: u64) -> Result<FractionSummary> {
    if n == 0 {
        return Err(Error::invalid("fraction over zero samples"));
    }
    if successes > n {
        return Err(Error::invalid(format!("{successes} successes out of {n}")));
    }
    let f = successes as f64 / n as f64;
    let half = 2.0 * (f * (1.0 - f)).sqrt() / (n as f64).sqrt();
    Ok(FractionSummary {
        successes,
        n,
        f,
        ci: ((f - half).max(0.0), (f + half).min(1.0)),
    })
}

/// Mean with the interval x +- 1.96 s/sqrt(N) (sample standard deviation,
/// N-1 denominator). A single observation yields a degenerate interval.
pub fn mean_with_ci(samples: &[f64]) -> Result<(f64, f64, f64)> {
    if samples.is_empty() {
        return Err(Error::invalid("mean of an empty sample"));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    if samples.len() == 1 {
        return Ok((mean, mean, mean));
    }
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let half = 1.96 * var.sqrt() / n.sqrt();
    Ok((mean, mean - half, mean + half))
}

/// Full summary combining both estimators.
pub fn summarize(samples: &[f64]) -> Result<SampleSummary> {
    let (median, mlo, mhi) = median_with_ci(samples)?;
    let (mean, lo, hi) = mean_with_ci(samples)?;
    let n = samples.len() as f64;
    let stddev = if samples.len() < 2 {
        0.0
    } else {
        (samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    Ok(SampleSummary {
        n: samples.len(),
        median,
        median_ci: (mlo, mhi),
        mean,
        stddev,
        mean_ci: (lo, hi),
    })
}

/// Spearman rank correlation (average ranks on ties). `None` when either
/// side is constant or the inputs are too short.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let rx = ranks(xs);
    let ry = ranks(ys);
    let n = xs.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for i in 0..xs.len() {
        cov += (rx[i] - mx) * (ry[i] - my);
        vx += (rx[i] - mx).powi(2);
        vy += (ry[i] - my).powi(2);
    }
    if vx == 0.0 || vy == 0.0 {
        return None;
    }
    Some(cov / (vx.sqrt() * vy.sqrt()))
}

fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut out = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            out[idx[k]] = avg;
        }
        i = j + 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;
    use rand::Rng;

    #[test]
    fn median_ci_percentile_positions() {
        // N = 100: endpoints at the 40th and 60th percentiles
        let samples: Vec<f64> = (1..=100).map(|x| x as f64).collect();
        let (med, lo, hi) = median_with_ci(&samples).unwrap();
        assert_eq!(med, 50.0);
        assert_eq!(lo, 40.0);
        assert_eq!(hi, 60.0);

        // N = 1000: endpoints at the 46.8th and 53.2nd percentiles,
        // which nearest-rank maps to ranks 469 and 532
        let samples: Vec<f64> = (1..=1000).map(|x| x as f64).collect();
        let (_, lo, hi) = median_with_ci(&samples).unwrap();
        assert_eq!(lo, 469.0);
        assert_eq!(hi, 532.0);

        let constant = [5.0, 5.0, 5.0, 5.0];
        assert_eq!(median_with_ci(&constant).unwrap(), (5.0, 5.0, 5.0));

        assert!(median_with_ci(&[]).is_err());
    }

    #[test]
    fn fraction_examples() {
        let s = fraction_with_ci(50, 100).unwrap();
        assert_eq!(s.f, 0.5);
        assert!((s.ci.0 - 0.4).abs() < 1e-12 && (s.ci.1 - 0.6).abs() < 1e-12);

        let s = fraction_with_ci(0, 100).unwrap();
        assert_eq!((s.f, s.ci), (0.0, (0.0, 0.0)));

        let s = fraction_with_ci(9, 10).unwrap();
        let half = 2.0 * (0.09f64).sqrt() / (10f64).sqrt();
        assert!((s.ci.1 - (0.9 + half).min(1.0)).abs() < 1e-12);

        assert!(fraction_with_ci(3, 2).is_err());
        assert!(fraction_with_ci(0, 0).is_err());
    }

    #[test]
    fn mean_examples() {
        assert_eq!(mean_with_ci(&[1.0, 1.0, 1.0, 1.0]).unwrap(), (1.0, 1.0, 1.0));
        let (mean, lo, hi) = mean_with_ci(&[0.0, 2.0]).unwrap();
        assert_eq!(mean, 1.0);
        assert!((lo - (1.0 - 1.96)).abs() < 1e-12);
        assert!((hi - (1.0 + 1.96)).abs() < 1e-12);
        assert_eq!(mean_with_ci(&[7.0]).unwrap(), (7.0, 7.0, 7.0));
        assert!(mean_with_ci(&[]).is_err());
    }

    #[test]
    fn fraction_complement_sums_to_one() {
        for k in 0..=17 {
            let a = fraction_with_ci(k, 17).unwrap();
            let b = fraction_with_ci(17 - k, 17).unwrap();
            assert!((a.f + b.f - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn median_ci_coverage_sanity() {
        // 100 trials of N = 1000 uniform draws; the interval should contain
        // the true median (0.5) in at least 90% of trials.
        let mut rng = rng_from_seed(71_995);
        let mut covered = 0;
        for _ in 0..100 {
            let samples: Vec<f64> = (0..1000).map(|_| rng.random::<f64>()).collect();
            let (_, lo, hi) = median_with_ci(&samples).unwrap();
            if lo <= 0.5 && 0.5 <= hi {
                covered += 1;
            }
        }
        assert!(covered >= 90, "coverage {covered}/100");
    }

    #[test]
    fn spearman_basics() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys = [10.0, 20.0, 30.0, 40.0];
        assert!((spearman(&xs, &ys).unwrap() - 1.0).abs() < 1e-12);
        let rev = [40.0, 30.0, 20.0, 10.0];
        assert!((spearman(&xs, &rev).unwrap() + 1.0).abs() < 1e-12);
        assert!(spearman(&xs, &[1.0, 1.0, 1.0, 1.0]).is_none());
    }
}
