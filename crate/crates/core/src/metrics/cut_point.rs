//! Cut-point test: do the per-iteration differences to random sampling grow
//! over the iterations?
//!
//! Iterations are ranked by their signed difference (largest first) and the
//! ranking is correlated with the ideal one, in which the last iteration
//! shows the largest difference. A one-sided Spearman test decides.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::curve::{common_grid, LearningCurve};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Superior,
    NotSuperior,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutPointVerdict {
    pub verdict: Verdict,
    pub correlation: f64,
    pub p_value: f64,
    pub n_iterations: usize,
}

impl CutPointVerdict {
    pub fn is_superior(&self) -> bool {
        self.verdict == Verdict::Superior
    }
}

/// Ranks with 1 for the largest value; ties share their average rank.
pub fn descending_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // positions i..=j share ranks i+1..=j+1
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Pearson correlation; zero when either input has no variance.
pub(crate) fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return 0.0;
    }
    (sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0)
}

/// One-sided p-value of `H1: rho > 0` from the t-distributed statistic.
pub fn spearman_p_value(r: f64, n: usize) -> f64 {
    let df = (n - 2) as f64;
    if r >= 1.0 {
        return 0.0;
    }
    if r <= -1.0 {
        return 1.0;
    }
    let t = r * (df / (1.0 - r * r)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("df >= 2");
    dist.sf(t)
}

/// Applies the test to the raw per-iteration differences.
pub fn cut_point_from_differences(differences: &[f64], alpha: f64) -> Result<CutPointVerdict> {
    let n = differences.len();
    if n < 4 {
        return Err(Error::TooFewIterations(n));
    }
    let observed = descending_ranks(differences);
    let ideal: Vec<f64> = (0..n).map(|t| (n - t) as f64).collect();
    let correlation = pearson(&observed, &ideal);
    let p_value = spearman_p_value(correlation, n);
    let verdict = if correlation > 0.0 && p_value < alpha {
        Verdict::Superior
    } else {
        Verdict::NotSuperior
    };
    Ok(CutPointVerdict {
        verdict,
        correlation,
        p_value,
        n_iterations: n,
    })
}

pub fn cut_point_test(
    curve_qm: &LearningCurve,
    curve_rand: &LearningCurve,
    stop_budget: f64,
    alpha: f64,
) -> Result<CutPointVerdict> {
    let differences: Vec<f64> = common_grid(curve_qm, curve_rand)
        .into_iter()
        .filter(|&(_, _, x)| x <= stop_budget)
        .map(|(i, j, _)| curve_qm.mean()[i] - curve_rand.mean()[j])
        .collect();
    cut_point_from_differences(&differences, alpha)
}
