//! Multi-iteration query-method metrics measured against random sampling.

mod cut_point;
mod stability;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::curve::{
    connected_value, invert_connected, monotone_envelope, normalized_gain, LearningCurve,
    ReliabilityFlags, ReliabilityThresholds,
};
use crate::error::{Error, Result};
use crate::fitting::{fit_b, fit_curves, FitSummary, FunctionFamily};

pub use cut_point::{
    cut_point_from_differences, cut_point_test, descending_ranks, spearman_p_value,
    CutPointVerdict, Verdict,
};
pub use stability::{
    stability_series, Dispersion, MetricSelector, StabilityContext, StabilitySeries,
};

/// Reserved query-method id of the random-sampling baseline.
pub const BASELINE_ID: &str = "rand";

/// Fraction of the endpoint range trimmed from each side of the connected-ratio band.
pub const RATIO_TRIM: f64 = 0.05;

pub const DEFAULT_N_LEVELS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedUp {
    pub qm_id: String,
    pub s: f64,
    pub family: FunctionFamily,
    pub b_qm: f64,
    pub b_rand: f64,
    pub reliability: ReliabilityFlags,
}

/// `b_qm / b_rand`: the fraction of samples the method needs to match random sampling.
pub fn speed_up_factor(b_qm: f64, b_rand: f64) -> Result<f64> {
    if !(b_qm > 0.0 && b_rand > 0.0) || !b_qm.is_finite() || !b_rand.is_finite() {
        return Err(Error::NonPositiveScale { b_qm, b_rand });
    }
    Ok(b_qm / b_rand)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnectedRatioSeries {
    pub performance_levels: Vec<f64>,
    pub ratios: Vec<f64>,
    pub region: (f64, f64),
}

impl ConnectedRatioSeries {
    pub fn mean_ratio(&self) -> f64 {
        self.ratios.iter().sum::<f64>() / self.ratios.len() as f64
    }

    /// Sample standard deviation over mean.
    pub fn coefficient_of_variation(&self) -> f64 {
        let n = self.ratios.len() as f64;
        if self.ratios.len() < 2 {
            return 0.0;
        }
        let m = self.mean_ratio();
        let var = self.ratios.iter().map(|r| (r - m).powi(2)).sum::<f64>() / (n - 1.0);
        var.sqrt() / m
    }
}

/// `x_qm(p) / x_rand(p)` from inverting both connected curves on a level grid.
///
/// Levels span the overlap of the two monotone envelopes, trimmed on each
/// side by 5 % of the random curve's attained range.
pub fn connected_speed_up(
    curve_qm: &LearningCurve,
    curve_rand: &LearningCurve,
    n_levels: usize,
) -> Result<ConnectedRatioSeries> {
    if n_levels == 0 {
        return Err(Error::EmptyInput("performance levels"));
    }
    let env_q = monotone_envelope(curve_qm);
    let env_r = monotone_envelope(curve_rand);
    let first = |c: &LearningCurve| c.mean()[0];
    let last = |c: &LearningCurve| *c.mean().last().expect("non-empty");
    let band_lo = first(&env_q).max(first(&env_r));
    let band_hi = last(&env_q).min(last(&env_r));
    let delta = last(&env_r) - first(&env_r);
    let p_lo = band_lo + RATIO_TRIM * delta;
    let p_hi = band_hi - RATIO_TRIM * delta;
    if !(p_hi > p_lo) {
        return Err(Error::NoOverlap);
    }
    let levels: Vec<f64> = if n_levels == 1 {
        vec![p_lo]
    } else {
        (0..n_levels)
            .map(|i| p_lo + (p_hi - p_lo) * i as f64 / (n_levels - 1) as f64)
            .collect()
    };
    let mut ratios = Vec::with_capacity(levels.len());
    for &p in &levels {
        let xq = invert_connected(curve_qm, p)?;
        let xr = invert_connected(curve_rand, p)?;
        if !(xq > 0.0 && xr > 0.0) {
            return Err(Error::NoOverlap);
        }
        ratios.push(xq / xr);
    }
    Ok(ConnectedRatioSeries {
        performance_levels: levels,
        ratios,
        region: (p_lo, p_hi),
    })
}

/// Mean of the seed-mean performance over grid points with `x <= stop_budget`.
pub fn lc_mean(curve: &LearningCurve, stop_budget: f64) -> Result<f64> {
    if !(stop_budget >= curve.x_min()) {
        return Err(Error::OutOfDomain {
            x: stop_budget,
            min: curve.x_min(),
            max: curve.x_max(),
        });
    }
    let included: Vec<f64> = curve
        .x_grid()
        .iter()
        .zip(curve.mean())
        .filter(|(&x, _)| x <= stop_budget)
        .map(|(_, &m)| m)
        .collect();
    Ok(included.iter().sum::<f64>() / included.len() as f64)
}

/// Trapezoidal area under the connected mean curve on `[x_min, stop_budget]`.
pub fn area_under_curve(curve: &LearningCurve, stop_budget: f64) -> Result<f64> {
    let end = connected_value(curve, stop_budget)?;
    let mut area = 0.0;
    let mut prev = (curve.x_min(), curve.mean()[0]);
    for (&x, &m) in curve.x_grid().iter().zip(curve.mean()).skip(1) {
        if x > stop_budget {
            break;
        }
        area += 0.5 * (m + prev.1) * (x - prev.0);
        prev = (x, m);
    }
    if stop_budget > prev.0 {
        area += 0.5 * (end + prev.1) * (stop_budget - prev.0);
    }
    Ok(area)
}

/// AULC of the method divided by the AULC of random sampling.
pub fn aulc_normalized(
    curve_qm: &LearningCurve,
    curve_rand: &LearningCurve,
    stop_budget: f64,
) -> Result<f64> {
    let qm = area_under_curve(curve_qm, stop_budget)?;
    let rand = area_under_curve(curve_rand, stop_budget)?;
    if !(rand > 0.0) {
        return Err(Error::ZeroBaselineArea);
    }
    Ok(qm / rand)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedUpFixed {
    pub s: f64,
    pub b_qm: f64,
    pub b_rand: f64,
    pub rmse_qm: f64,
    pub rmse_rand: f64,
}

/// Speed-up factor under `a * (1 - exp(-x / b))`: asymptote at the ceiling,
/// zero intercept.
pub fn speed_up_fixed(
    curve_qm: &LearningCurve,
    curve_rand: &LearningCurve,
    ceiling: f64,
) -> Result<SpeedUpFixed> {
    if !(ceiling > 0.0) {
        return Err(Error::InvalidCeiling(ceiling));
    }
    let fq = fit_b(FunctionFamily::ExpSaturating, curve_qm, ceiling, 0.0)?;
    let fr = fit_b(FunctionFamily::ExpSaturating, curve_rand, ceiling, 0.0)?;
    Ok(SpeedUpFixed {
        s: speed_up_factor(fq.b, fr.b)?,
        b_qm: fq.b,
        b_rand: fr.b,
        rmse_qm: fq.rmse,
        rmse_rand: fr.rmse,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sensitivity {
    pub delta_rel: f64,
    pub delta_log: f64,
}

/// Relative and logarithmic differences of two speed-up factors, as fractions.
pub fn sensitivity(s1: f64, s2: f64) -> Result<Sensitivity> {
    if !(s1 > 0.0 && s2 > 0.0) {
        return Err(Error::NonPositiveInput { s1, s2 });
    }
    Ok(Sensitivity {
        delta_rel: 2.0 * (s1 - s2).abs() / (s1 + s2),
        delta_log: (s1.ln() - s2.ln()).abs(),
    })
}

/// Settings shared by every metric of one analysis.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisOptions {
    /// Full-data performance used as the asymptote `a_inf`.
    pub ceiling: f64,
    pub families: Vec<FunctionFamily>,
    pub n_levels: usize,
    pub alpha: f64,
    pub thresholds: ReliabilityThresholds,
}

impl AnalysisOptions {
    pub fn new(ceiling: f64) -> Self {
        AnalysisOptions {
            ceiling,
            families: FunctionFamily::ALL.to_vec(),
            n_levels: DEFAULT_N_LEVELS,
            alpha: 0.05,
            thresholds: ReliabilityThresholds::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QmMetrics {
    pub speed_up: SpeedUp,
    /// Speed-up factor per fitted family.
    pub speed_up_by_family: BTreeMap<FunctionFamily, f64>,
    pub speed_up_fixed: SpeedUpFixed,
    pub lc_mean: f64,
    pub aulc_norm: f64,
    pub cut_point: Option<CutPointVerdict>,
    pub sensitivity: Option<Sensitivity>,
    /// Mean of the connected ratio series, when the bands overlap.
    pub connected_mean_ratio: Option<f64>,
    pub stop_budget: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub baseline: String,
    pub ceiling: f64,
    pub per_qm: BTreeMap<String, QmMetrics>,
    pub warnings: Vec<String>,
}

/// Everything computed from one set of curves.
#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub fits: FitSummary,
    pub report: MetricReport,
    pub ratio_series: BTreeMap<String, ConnectedRatioSeries>,
}

pub(crate) fn baseline(curves: &BTreeMap<String, LearningCurve>) -> Result<&LearningCurve> {
    curves
        .get(BASELINE_ID)
        .ok_or_else(|| Error::MissingQueryMethod(BASELINE_ID.to_string()))
}

/// Fits all curves and computes every metric of each method against `rand`.
pub fn analyze(
    curves: &BTreeMap<String, LearningCurve>,
    options: &AnalysisOptions,
) -> Result<Analysis> {
    let rand = baseline(curves)?;
    if !(options.alpha > 0.0 && options.alpha < 1.0) {
        return Err(Error::ConfigInvalid(format!(
            "alpha must lie in (0, 1), got {}",
            options.alpha
        )));
    }
    let fits = fit_curves(curves, options.ceiling, &options.families)?;
    let mut warnings = Vec::new();
    for (fam, icpt) in &fits.intercepts {
        if icpt.clamped {
            warnings.push(format!(
                "initial performance {} clamped to {} for family {fam}",
                fits.p0, icpt.p0
            ));
        }
    }
    for (id, r) in &fits.results {
        for (fam, f) in &r.per_family {
            if f.at_boundary {
                warnings.push(format!(
                    "fit of '{id}' under {fam} ended on the search bracket edge"
                ));
            }
        }
    }

    let b_rand = &fits.results[BASELINE_ID];
    let mut per_qm = BTreeMap::new();
    let mut ratio_series = BTreeMap::new();
    for (id, curve) in curves {
        if id == BASELINE_ID {
            continue;
        }
        let fit = &fits.results[id];
        let reliability = match normalized_gain(curve, options.ceiling, &options.thresholds) {
            Ok(flags) => flags,
            Err(e) => {
                warnings.push(format!("'{id}': {e}"));
                ReliabilityFlags {
                    normalized_gain: f64::NAN,
                    monotone_violation_fraction: crate::curve::monotone_violation_fraction(curve),
                    reliable: false,
                }
            }
        };
        if !reliability.reliable {
            warnings.push(format!(
                "'{id}': curve flagged unreliable for the speed-up factor"
            ));
        }
        let speed_up_by_family: BTreeMap<FunctionFamily, f64> = fit
            .per_family
            .iter()
            .map(|(fam, f)| Ok((*fam, speed_up_factor(f.b, b_rand.per_family[fam].b)?)))
            .collect::<Result<_>>()?;
        let speed_up = SpeedUp {
            qm_id: id.clone(),
            s: speed_up_by_family[&fits.selected_family],
            family: fits.selected_family,
            b_qm: fit.selected_b,
            b_rand: b_rand.selected_b,
            reliability,
        };
        let sensitivity = match (
            speed_up_by_family.get(&FunctionFamily::ExpSaturating),
            speed_up_by_family.get(&FunctionFamily::Logistic),
        ) {
            (Some(&s1), Some(&s2)) => Some(sensitivity(s1, s2)?),
            _ => None,
        };

        let stop = curve.x_max().min(rand.x_max());
        let cut_point = match cut_point_test(curve, rand, stop, options.alpha) {
            Ok(v) => Some(v),
            Err(e) => {
                warnings.push(format!("'{id}': cut-point unavailable: {e}"));
                None
            }
        };
        let connected = match connected_speed_up(curve, rand, options.n_levels) {
            Ok(series) => Some(series),
            Err(e) => {
                warnings.push(format!("'{id}': connected speed-up unavailable: {e}"));
                None
            }
        };
        let metrics = QmMetrics {
            speed_up,
            speed_up_by_family,
            speed_up_fixed: speed_up_fixed(curve, rand, options.ceiling)?,
            lc_mean: lc_mean(curve, stop)?,
            aulc_norm: aulc_normalized(curve, rand, stop)?,
            cut_point,
            sensitivity,
            connected_mean_ratio: connected.as_ref().map(|c| c.mean_ratio()),
            stop_budget: stop,
        };
        if let Some(series) = connected {
            ratio_series.insert(id.clone(), series);
        }
        per_qm.insert(id.clone(), metrics);
    }

    Ok(Analysis {
        report: MetricReport {
            baseline: BASELINE_ID.to_string(),
            ceiling: options.ceiling,
            per_qm,
            warnings,
        },
        fits,
        ratio_series,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::tests::curve_from_means;

    #[test]
    fn speed_up_examples() {
        assert_eq!(speed_up_factor(150.0, 600.0).unwrap(), 0.25);
        assert_eq!(speed_up_factor(42.0, 42.0).unwrap(), 1.0);
        assert_eq!(speed_up_factor(3.0 * 150.0, 3.0 * 600.0).unwrap(), 0.25);
        assert!(matches!(
            speed_up_factor(0.0, 1.0),
            Err(Error::NonPositiveScale { .. })
        ));
    }

    fn xs(n: usize, step: f64) -> Vec<f64> {
        (0..n).map(|i| i as f64 * step).collect()
    }

    #[test]
    fn connected_ratio_self_and_halved() {
        let x = xs(8, 20.0);
        let m = [0.2, 0.35, 0.47, 0.55, 0.61, 0.65, 0.68, 0.7];
        let c = curve_from_means(&x, &m);
        let s = connected_speed_up(&c, &c, 50).unwrap();
        assert!(s.ratios.iter().all(|&r| r == 1.0));
        let half = c.rescale_x(0.5);
        let s = connected_speed_up(&half, &c, 50).unwrap();
        assert!(s.ratios.iter().all(|&r| (r - 0.5).abs() < 1e-12));
        assert!(s.performance_levels.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn connected_ratio_disjoint_bands() {
        let a = curve_from_means(&[0.0, 10.0], &[0.1, 0.2]);
        let b = curve_from_means(&[0.0, 10.0], &[0.5, 0.6]);
        assert!(matches!(
            connected_speed_up(&a, &b, 10),
            Err(Error::NoOverlap)
        ));
    }

    #[test]
    fn lc_mean_examples() {
        let c = curve_from_means(&[0.0, 10.0, 20.0], &[0.5, 0.5, 0.5]);
        assert_eq!(lc_mean(&c, 20.0).unwrap(), 0.5);
        let c = curve_from_means(&[0.0, 10.0, 20.0], &[0.2, 0.4, 0.6]);
        assert!((lc_mean(&c, 20.0).unwrap() - 0.4).abs() < 1e-15);
        assert!((lc_mean(&c, 15.0).unwrap() - 0.3).abs() < 1e-15);
        assert!(lc_mean(&c, -1.0).is_err());
    }

    #[test]
    fn aulc_examples() {
        let c = curve_from_means(&[0.0, 50.0, 100.0], &[0.2, 0.4, 0.5]);
        assert_eq!(aulc_normalized(&c, &c, 100.0).unwrap(), 1.0);
        let double = curve_from_means(&[0.0, 50.0, 100.0], &[0.4, 0.8, 1.0]);
        assert!((aulc_normalized(&double, &c, 100.0).unwrap() - 2.0).abs() < 1e-12);
        let ramp = curve_from_means(&[0.0, 100.0], &[0.0, 1.0]);
        let flat = curve_from_means(&[0.0, 100.0], &[0.5, 0.5]);
        assert_eq!(aulc_normalized(&ramp, &flat, 100.0).unwrap(), 1.0);
        let zero = curve_from_means(&[0.0, 100.0], &[0.0, 0.0]);
        assert!(matches!(
            aulc_normalized(&ramp, &zero, 100.0),
            Err(Error::ZeroBaselineArea)
        ));
        assert!(aulc_normalized(&ramp, &flat, 120.0).is_err());
    }

    #[test]
    fn aulc_between_grid_points_interpolates() {
        let ramp = curve_from_means(&[0.0, 100.0], &[0.0, 1.0]);
        // area of the ramp on [0, 50] = 0.5 * 50 * 0.5
        assert!((area_under_curve(&ramp, 50.0).unwrap() - 12.5).abs() < 1e-12);
    }

    #[test]
    fn sensitivity_examples() {
        let s = sensitivity(0.8, 0.8).unwrap();
        assert_eq!((s.delta_rel, s.delta_log), (0.0, 0.0));
        let e = std::f64::consts::E;
        let s = sensitivity(1.0, e).unwrap();
        assert!((s.delta_log - 1.0).abs() < 1e-12);
        assert!((s.delta_rel - 2.0 * (e - 1.0) / (e + 1.0)).abs() < 1e-15);
        assert!((s.delta_rel - 0.9242).abs() < 1e-4);
        // rounded inputs from a published table reproduce only ~1.03 %
        let s = sensitivity(0.97, 0.98).unwrap();
        assert!((s.delta_log - 0.010_256).abs() < 1e-5);
        assert!(sensitivity(0.0, 1.0).is_err());
    }

    #[test]
    fn analyze_requires_baseline() {
        let c = curve_from_means(&[0.0, 10.0, 20.0], &[0.2, 0.4, 0.6]);
        let curves = BTreeMap::from([("ratio_max".to_string(), c)]);
        let err = analyze(&curves, &AnalysisOptions::new(0.9)).unwrap_err();
        assert!(err.to_string().contains("'rand'"));
    }
}
