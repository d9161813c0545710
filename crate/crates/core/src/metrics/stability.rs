//! How much a metric moves when the experiment is stopped earlier.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{aulc_normalized, baseline, cut_point_test, lc_mean, speed_up_factor, speed_up_fixed};
use crate::curve::LearningCurve;
use crate::error::{Error, Result};
use crate::fitting::{fit_b, FunctionFamily};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricSelector {
    SpeedUp,
    SpeedUpFixed,
    LcMean,
    AulcNorm,
    CutPoint,
    /// Final-iteration performance of the method over that of random sampling.
    FinalPerformance,
}

impl MetricSelector {
    pub const ALL: [MetricSelector; 6] = [
        MetricSelector::SpeedUp,
        MetricSelector::SpeedUpFixed,
        MetricSelector::LcMean,
        MetricSelector::AulcNorm,
        MetricSelector::CutPoint,
        MetricSelector::FinalPerformance,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MetricSelector::SpeedUp => "speed_up",
            MetricSelector::SpeedUpFixed => "speed_up_fixed",
            MetricSelector::LcMean => "lc_mean",
            MetricSelector::AulcNorm => "aulc_norm",
            MetricSelector::CutPoint => "cut_point",
            MetricSelector::FinalPerformance => "final_performance",
        }
    }
}

impl fmt::Display for MetricSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MetricSelector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MetricSelector::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::ConfigInvalid(format!("unknown metric '{s}'")))
    }
}

/// Quantities held fixed across truncations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityContext {
    /// Full-data ceiling; truncation does not change it.
    pub a_inf: f64,
    /// Family and intercept selected on the full curves.
    pub family: FunctionFamily,
    pub a0: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dispersion {
    pub range_over_mean: f64,
    pub sd_over_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilitySeries {
    pub metric_name: String,
    pub qm_id: String,
    pub stop_budgets: Vec<f64>,
    /// `None` where the metric could not be computed at that truncation.
    pub values: Vec<Option<f64>>,
    pub dispersion: Dispersion,
}

impl StabilitySeries {
    pub fn present(&self) -> Vec<f64> {
        self.values.iter().flatten().copied().collect()
    }
}

fn dispersion(values: &[f64]) -> Dispersion {
    if values.is_empty() {
        return Dispersion {
            range_over_mean: f64::NAN,
            sd_over_mean: f64::NAN,
        };
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sd = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    let scaled = |num: f64| {
        if num == 0.0 {
            0.0
        } else if mean == 0.0 {
            f64::INFINITY
        } else {
            num / mean.abs()
        }
    };
    Dispersion {
        range_over_mean: scaled(hi - lo),
        sd_over_mean: scaled(sd),
    }
}

fn metric_at(
    metric: MetricSelector,
    qm: &LearningCurve,
    rand: &LearningCurve,
    stop: f64,
    ctx: &StabilityContext,
) -> Result<f64> {
    let tq = qm.truncate(stop)?;
    let tr = rand.truncate(stop)?;
    match metric {
        MetricSelector::SpeedUp => {
            let bq = fit_b(ctx.family, &tq, ctx.a_inf, ctx.a0)?.b;
            let br = fit_b(ctx.family, &tr, ctx.a_inf, ctx.a0)?.b;
            speed_up_factor(bq, br)
        }
        MetricSelector::SpeedUpFixed => Ok(speed_up_fixed(&tq, &tr, ctx.a_inf)?.s),
        MetricSelector::LcMean => lc_mean(&tq, stop),
        MetricSelector::AulcNorm => aulc_normalized(&tq, &tr, stop),
        MetricSelector::CutPoint => {
            let v = cut_point_test(&tq, &tr, stop, ctx.alpha)?;
            Ok(if v.is_superior() { 1.0 } else { 0.0 })
        }
        MetricSelector::FinalPerformance => {
            let q = *tq.mean().last().expect("non-empty");
            let r = *tr.mean().last().expect("non-empty");
            if r == 0.0 {
                return Err(Error::ZeroBaselineArea);
            }
            Ok(q / r)
        }
    }
}

/// Recomputes `metric` for `qm_id` on the curves truncated at each stop budget.
pub fn stability_series(
    metric: MetricSelector,
    qm_id: &str,
    curves: &BTreeMap<String, LearningCurve>,
    stop_budgets: &[f64],
    ctx: &StabilityContext,
) -> Result<StabilitySeries> {
    let rand = baseline(curves)?;
    let qm = curves
        .get(qm_id)
        .ok_or_else(|| Error::MissingQueryMethod(qm_id.to_string()))?;
    if stop_budgets.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::ConfigInvalid(
            "stop budgets must be strictly ascending".into(),
        ));
    }
    let full = qm.x_max().min(rand.x_max());
    if let Some(&bad) = stop_budgets.iter().find(|&&s| !(s <= full && s >= 0.0)) {
        return Err(Error::OutOfDomain {
            x: bad,
            min: 0.0,
            max: full,
        });
    }

    let values: Vec<Option<f64>> = stop_budgets
        .par_iter()
        .map(|&stop| match metric_at(metric, qm, rand, stop, ctx) {
            Ok(v) => Some(v),
            Err(e) => {
                log::debug!("{metric} for '{qm_id}' at stop {stop}: {e}");
                None
            }
        })
        .collect();
    let present: Vec<f64> = values.iter().flatten().copied().collect();
    Ok(StabilitySeries {
        metric_name: metric.as_str().to_string(),
        qm_id: qm_id.to_string(),
        stop_budgets: stop_budgets.to_vec(),
        dispersion: dispersion(&present),
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{build_curve, CurvePoint};
    use crate::fitting::ApproxModel;

    fn generated(id: &str, b: f64) -> LearningCurve {
        let m = ApproxModel {
            family: FunctionFamily::ExpSaturating,
            a_inf: 0.9,
            a0: -0.2,
            b,
        };
        let recs: Vec<CurvePoint> = (0..=70)
            .map(|i| CurvePoint::new(20.0 * i as f64, m.evaluate(20.0 * i as f64), 0))
            .collect();
        build_curve(&recs, id).unwrap()
    }

    fn ctx() -> StabilityContext {
        StabilityContext {
            a_inf: 0.9,
            family: FunctionFamily::ExpSaturating,
            a0: -0.2,
            alpha: 0.05,
        }
    }

    fn curves() -> BTreeMap<String, LearningCurve> {
        BTreeMap::from([
            ("rand".to_string(), generated("rand", 600.0)),
            ("qm".to_string(), generated("qm", 150.0)),
        ])
    }

    #[test]
    fn speed_up_is_constant_on_generated_curves() {
        let budgets: Vec<f64> = (1..=7).map(|i| 200.0 * i as f64).collect();
        let s =
            stability_series(MetricSelector::SpeedUp, "qm", &curves(), &budgets, &ctx()).unwrap();
        for v in s.present() {
            assert!((v - 0.25).abs() < 1e-3, "{v}");
        }
        assert!(s.dispersion.range_over_mean < 1e-3);
    }

    #[test]
    fn lc_mean_grows_on_increasing_curve() {
        let budgets: Vec<f64> = (1..=7).map(|i| 200.0 * i as f64).collect();
        let s =
            stability_series(MetricSelector::LcMean, "qm", &curves(), &budgets, &ctx()).unwrap();
        let v = s.present();
        assert_eq!(v.len(), budgets.len());
        assert!(v.windows(2).all(|w| w[1] > w[0]));
        assert!(s.dispersion.range_over_mean > 0.0);
    }

    #[test]
    fn rejects_unsorted_or_oversized_budgets() {
        let c = curves();
        assert!(
            stability_series(MetricSelector::LcMean, "qm", &c, &[400.0, 200.0], &ctx()).is_err()
        );
        assert!(stability_series(MetricSelector::LcMean, "qm", &c, &[5000.0], &ctx()).is_err());
        assert!(matches!(
            stability_series(MetricSelector::LcMean, "nope", &c, &[200.0], &ctx()),
            Err(Error::MissingQueryMethod(_))
        ));
    }

    #[test]
    fn failing_truncations_are_missing() {
        // 3 grid points at stop 40: too few for the cut-point test
        let s = stability_series(
            MetricSelector::CutPoint,
            "qm",
            &curves(),
            &[40.0, 400.0],
            &ctx(),
        )
        .unwrap();
        assert_eq!(s.values[0], None);
        assert!(s.values[1].is_some());
    }

    #[test]
    fn dispersion_of_constant_is_zero() {
        let d = dispersion(&[0.3, 0.3, 0.3]);
        assert_eq!(d.range_over_mean, 0.0);
        assert_eq!(d.sd_over_mean, 0.0);
        let d = dispersion(&[1.0, 0.0]);
        assert_eq!(d.range_over_mean, 2.0);
    }
}
