//! Learning curves over added training samples.
//!
//! A [`LearningCurve`] holds the per-seed scatter of one query method on a
//! rectangular grid (every seed evaluated at every `x`) together with the
//! seed aggregates. The connected curve is the piecewise-linear
//! interpolation of the seed mean.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One evaluated iteration of one seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    /// Number of samples added to the initial labelled set.
    pub x: f64,
    pub performance: f64,
    pub seed: u64,
    /// Wall time in seconds spent selecting the samples added at this iteration.
    pub qm_time: Option<f64>,
}

impl CurvePoint {
    pub fn new(x: f64, performance: f64, seed: u64) -> Self {
        CurvePoint {
            x,
            performance,
            seed,
            qm_time: None,
        }
    }
}

/// Seed-aggregated learning curve of one query method.
#[derive(Debug, Clone, PartialEq)]
pub struct LearningCurve {
    qm_id: String,
    seeds: Vec<u64>,
    x_grid: Vec<f64>,
    /// `values[s][i]` is the performance of `seeds[s]` at `x_grid[i]`.
    values: Vec<Vec<f64>>,
    qm_times: Vec<Vec<Option<f64>>>,
    mean: Vec<f64>,
    sd: Vec<f64>,
    sem: Vec<f64>,
}

/// Aggregates per-seed records into a learning curve.
///
/// Every seed must be evaluated on the same set of `x` values; the points of
/// one seed may arrive in any order but may not repeat an `x`.
pub fn build_curve(records: &[CurvePoint], qm_id: &str) -> Result<LearningCurve> {
    if records.is_empty() {
        return Err(Error::EmptyInput("curve records"));
    }
    let mut by_seed: BTreeMap<u64, Vec<&CurvePoint>> = BTreeMap::new();
    for p in records {
        if !p.performance.is_finite() || !(0.0..=1.0).contains(&p.performance) {
            return Err(Error::OutOfRangePerformance {
                value: p.performance,
                x: p.x,
                seed: p.seed,
            });
        }
        if !p.x.is_finite() || p.x < 0.0 {
            return Err(Error::InvalidSampleCount {
                x: p.x,
                seed: p.seed,
            });
        }
        by_seed.entry(p.seed).or_default().push(p);
    }

    let mut x_grid: Option<Vec<f64>> = None;
    let mut seeds = Vec::with_capacity(by_seed.len());
    let mut values = Vec::with_capacity(by_seed.len());
    let mut qm_times = Vec::with_capacity(by_seed.len());
    for (seed, mut points) in by_seed {
        points.sort_by(|a, b| a.x.total_cmp(&b.x));
        if let Some(w) = points.windows(2).find(|w| w[0].x == w[1].x) {
            return Err(Error::DuplicatePoint { x: w[0].x, seed });
        }
        let xs: Vec<f64> = points.iter().map(|p| p.x).collect();
        match &x_grid {
            None => x_grid = Some(xs),
            Some(grid) if *grid != xs => {
                return Err(Error::RaggedDesign {
                    qm: qm_id.to_string(),
                    seed,
                })
            }
            Some(_) => {}
        }
        seeds.push(seed);
        values.push(points.iter().map(|p| p.performance).collect());
        qm_times.push(points.iter().map(|p| p.qm_time).collect());
    }
    let x_grid = x_grid.expect("at least one seed");

    let n = seeds.len();
    let mut mean = Vec::with_capacity(x_grid.len());
    let mut sd = Vec::with_capacity(x_grid.len());
    let mut sem = Vec::with_capacity(x_grid.len());
    for i in 0..x_grid.len() {
        let column: Vec<f64> = values.iter().map(|v: &Vec<f64>| v[i]).collect();
        let m = column.iter().sum::<f64>() / n as f64;
        // Float summation can leave the mean a hair outside the seed range.
        let lo = column.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = column.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let m = m.clamp(lo, hi);
        let s = if n > 1 {
            (column.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        mean.push(m);
        sd.push(s);
        sem.push(s / (n as f64).sqrt());
    }

    Ok(LearningCurve {
        qm_id: qm_id.to_string(),
        seeds,
        x_grid,
        values,
        qm_times,
        mean,
        sd,
        sem,
    })
}

impl LearningCurve {
    pub fn qm_id(&self) -> &str {
        &self.qm_id
    }

    pub fn seeds(&self) -> &[u64] {
        &self.seeds
    }

    pub fn n_seeds(&self) -> usize {
        self.seeds.len()
    }

    pub fn x_grid(&self) -> &[f64] {
        &self.x_grid
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn sd(&self) -> &[f64] {
        &self.sd
    }

    pub fn sem(&self) -> &[f64] {
        &self.sem
    }

    /// Per-seed performance rows, aligned with [`Self::seeds`] and [`Self::x_grid`].
    pub fn seed_values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn x_min(&self) -> f64 {
        self.x_grid[0]
    }

    pub fn x_max(&self) -> f64 {
        *self.x_grid.last().expect("non-empty grid")
    }

    /// Iterates over every per-seed `(x, performance)` scatter point.
    pub fn scatter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.values
            .iter()
            .flat_map(move |row| self.x_grid.iter().copied().zip(row.iter().copied()))
    }

    /// Reconstructs the raw records, ordered by seed then `x`.
    pub fn points(&self) -> Vec<CurvePoint> {
        let mut out = Vec::with_capacity(self.values.len() * self.x_grid.len());
        for (s, seed) in self.seeds.iter().enumerate() {
            for (i, &x) in self.x_grid.iter().enumerate() {
                out.push(CurvePoint {
                    x,
                    performance: self.values[s][i],
                    seed: *seed,
                    qm_time: self.qm_times[s][i],
                });
            }
        }
        out
    }

    /// Mean query-selection wall time per grid point, if every seed recorded one.
    pub fn mean_qm_time(&self) -> Vec<Option<f64>> {
        (0..self.x_grid.len())
            .map(|i| {
                let times: Option<Vec<f64>> = self.qm_times.iter().map(|t| t[i]).collect();
                times.map(|t| t.iter().sum::<f64>() / t.len() as f64)
            })
            .collect()
    }

    /// Keeps only the grid points with `x <= stop_budget`.
    pub fn truncate(&self, stop_budget: f64) -> Result<LearningCurve> {
        let keep = self
            .x_grid
            .iter()
            .take_while(|&&x| x <= stop_budget)
            .count();
        if keep == 0 {
            return Err(Error::OutOfDomain {
                x: stop_budget,
                min: self.x_min(),
                max: self.x_max(),
            });
        }
        Ok(LearningCurve {
            qm_id: self.qm_id.clone(),
            seeds: self.seeds.clone(),
            x_grid: self.x_grid[..keep].to_vec(),
            values: self.values.iter().map(|v| v[..keep].to_vec()).collect(),
            qm_times: self.qm_times.iter().map(|v| v[..keep].to_vec()).collect(),
            mean: self.mean[..keep].to_vec(),
            sd: self.sd[..keep].to_vec(),
            sem: self.sem[..keep].to_vec(),
        })
    }

    /// Multiplies every `x` by `factor` (> 0).
    pub fn rescale_x(&self, factor: f64) -> LearningCurve {
        assert!(factor > 0.0, "rescale factor must be positive");
        let mut out = self.clone();
        out.x_grid.iter_mut().for_each(|x| *x *= factor);
        out
    }

    pub fn with_qm_id(mut self, qm_id: &str) -> LearningCurve {
        self.qm_id = qm_id.to_string();
        self
    }
}

/// Piecewise-linear interpolation of the seed mean at `x`.
pub fn connected_value(curve: &LearningCurve, x: f64) -> Result<f64> {
    let grid = curve.x_grid();
    if !(x >= curve.x_min() && x <= curve.x_max()) {
        return Err(Error::OutOfDomain {
            x,
            min: curve.x_min(),
            max: curve.x_max(),
        });
    }
    // First index with grid[i] >= x.
    let i = grid.partition_point(|&g| g < x);
    if grid[i] == x {
        return Ok(curve.mean()[i]);
    }
    let (x0, x1) = (grid[i - 1], grid[i]);
    let (y0, y1) = (curve.mean()[i - 1], curve.mean()[i]);
    Ok(y0 + (y1 - y0) * (x - x0) / (x1 - x0))
}

/// Replaces the mean by its running maximum over `x`.
pub fn monotone_envelope(curve: &LearningCurve) -> LearningCurve {
    let mut out = curve.clone();
    let mut running = f64::NEG_INFINITY;
    for m in out.mean.iter_mut() {
        running = running.max(*m);
        *m = running;
    }
    out
}

/// Smallest `x` at which the monotone envelope's connected curve reaches `p`.
pub fn invert_connected(curve: &LearningCurve, p: f64) -> Result<f64> {
    let env = monotone_envelope(curve);
    let mean = env.mean();
    let grid = env.x_grid();
    let (lo, hi) = (mean[0], *mean.last().expect("non-empty"));
    if !(p >= lo && p <= hi) {
        return Err(Error::Unreachable { p, lo, hi });
    }
    for i in 0..mean.len() {
        if mean[i] == p {
            return Ok(grid[i]);
        }
        if i + 1 < mean.len() && mean[i] < p && p <= mean[i + 1] {
            if mean[i + 1] == p {
                return Ok(grid[i + 1]);
            }
            let frac = (p - mean[i]) / (mean[i + 1] - mean[i]);
            return Ok(grid[i] + frac * (grid[i + 1] - grid[i]));
        }
    }
    unreachable!("p lies within the envelope range")
}

/// Thresholds deciding whether a curve is reliable enough for the speed-up factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityThresholds {
    pub min_gain: f64,
    pub max_violation_fraction: f64,
}

impl Default for ReliabilityThresholds {
    fn default() -> Self {
        ReliabilityThresholds {
            min_gain: 0.25,
            max_violation_fraction: 0.2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityFlags {
    pub normalized_gain: f64,
    pub monotone_violation_fraction: f64,
    pub reliable: bool,
}

/// Fraction of adjacent mean pairs that decrease.
pub fn monotone_violation_fraction(curve: &LearningCurve) -> f64 {
    let mean = curve.mean();
    if mean.len() < 2 {
        return 0.0;
    }
    let drops = mean.windows(2).filter(|w| w[1] < w[0]).count();
    drops as f64 / (mean.len() - 1) as f64
}

/// `(P_final - P_initial) / (P_ceiling - P_initial)` plus the monotonicity check.
pub fn normalized_gain(
    curve: &LearningCurve,
    ceiling: f64,
    thresholds: &ReliabilityThresholds,
) -> Result<ReliabilityFlags> {
    let initial = curve.mean()[0];
    let last = *curve.mean().last().expect("non-empty");
    if ceiling <= initial {
        return Err(Error::DegenerateCeiling { ceiling, initial });
    }
    let normalized_gain = (last - initial) / (ceiling - initial);
    let monotone_violation_fraction = monotone_violation_fraction(curve);
    Ok(ReliabilityFlags {
        normalized_gain,
        monotone_violation_fraction,
        reliable: normalized_gain >= thresholds.min_gain
            && monotone_violation_fraction <= thresholds.max_violation_fraction,
    })
}

/// Sorted union of the grid points shared by both curves.
pub(crate) fn common_grid(a: &LearningCurve, b: &LearningCurve) -> Vec<(usize, usize, f64)> {
    let bx: BTreeSet<u64> = b.x_grid().iter().map(|x| x.to_bits()).collect();
    a.x_grid()
        .iter()
        .enumerate()
        .filter(|(_, x)| bx.contains(&x.to_bits()))
        .map(|(i, &x)| {
            let j = b.x_grid().iter().position(|&y| y == x).expect("shared x");
            (i, j, x)
        })
        .collect()
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn curve_from_means(xs: &[f64], means: &[f64]) -> LearningCurve {
        let records: Vec<CurvePoint> = xs
            .iter()
            .zip(means)
            .map(|(&x, &m)| CurvePoint::new(x, m, 0))
            .collect();
        build_curve(&records, "qm").unwrap()
    }

    #[test]
    fn single_seed_identity() {
        let c = curve_from_means(&[0.0, 20.0], &[0.2, 0.5]);
        assert_eq!(c.mean(), &[0.2, 0.5]);
        assert_eq!(c.sd(), &[0.0, 0.0]);
        assert_eq!(c.sem(), &[0.0, 0.0]);
        assert_eq!(c.n_seeds(), 1);
    }

    #[test]
    fn two_seed_aggregation() {
        let recs = vec![
            CurvePoint::new(0.0, 0.1, 0),
            CurvePoint::new(20.0, 0.4, 0),
            CurvePoint::new(0.0, 0.1, 1),
            CurvePoint::new(20.0, 0.6, 1),
        ];
        let c = build_curve(&recs, "rand").unwrap();
        assert!((c.mean()[1] - 0.5).abs() < 1e-15);
        // sample sd of {0.4, 0.6}
        let sd = (0.02f64).sqrt();
        assert!((c.sd()[1] - sd).abs() < 1e-12);
        assert!((c.sem()[1] - sd / 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn ragged_design_rejected() {
        let recs = vec![
            CurvePoint::new(0.0, 0.1, 0),
            CurvePoint::new(20.0, 0.2, 0),
            CurvePoint::new(40.0, 0.3, 0),
            CurvePoint::new(0.0, 0.1, 1),
            CurvePoint::new(20.0, 0.2, 1),
        ];
        assert!(matches!(
            build_curve(&recs, "qm"),
            Err(Error::RaggedDesign { seed: 1, .. })
        ));
    }

    #[test]
    fn build_errors() {
        assert!(matches!(build_curve(&[], "qm"), Err(Error::EmptyInput(_))));
        let bad = [CurvePoint::new(0.0, 1.2, 0)];
        assert!(matches!(
            build_curve(&bad, "qm"),
            Err(Error::OutOfRangePerformance { .. })
        ));
        let dup = [CurvePoint::new(0.0, 0.2, 0), CurvePoint::new(0.0, 0.3, 0)];
        assert!(matches!(
            build_curve(&dup, "qm"),
            Err(Error::DuplicatePoint { .. })
        ));
    }

    #[test]
    fn connected_value_cases() {
        let c = curve_from_means(&[0.0, 100.0], &[0.2, 0.6]);
        assert!((connected_value(&c, 50.0).unwrap() - 0.4).abs() < 1e-15);
        assert_eq!(connected_value(&c, 100.0).unwrap(), 0.6);
        assert_eq!(connected_value(&c, 0.0).unwrap(), 0.2);
        assert!(matches!(
            connected_value(&c, 101.0),
            Err(Error::OutOfDomain { .. })
        ));
    }

    #[test]
    fn envelope_cases() {
        let c = curve_from_means(&[0.0, 1.0, 2.0, 3.0], &[0.2, 0.5, 0.4, 0.6]);
        let env = monotone_envelope(&c);
        assert_eq!(env.mean(), &[0.2, 0.5, 0.5, 0.6]);
        assert_eq!(c.mean(), &[0.2, 0.5, 0.4, 0.6]);

        let flat = curve_from_means(&[0.0, 1.0, 2.0], &[0.3, 0.3, 0.3]);
        assert_eq!(monotone_envelope(&flat).mean(), flat.mean());
    }

    #[test]
    fn inversion_cases() {
        let c = curve_from_means(&[0.0, 100.0], &[0.2, 0.6]);
        assert!((invert_connected(&c, 0.4).unwrap() - 50.0).abs() < 1e-12);
        assert_eq!(invert_connected(&c, 0.2).unwrap(), 0.0);
        assert!(matches!(
            invert_connected(&c, 0.7),
            Err(Error::Unreachable { .. })
        ));
    }

    /// Brute-force first crossing: walk each segment densely.
    fn scan_first_crossing(xs: &[f64], env: &[f64], p: f64) -> f64 {
        for i in 0..xs.len() {
            if env[i] >= p {
                if i == 0 || env[i - 1] >= p {
                    return xs[i];
                }
                let steps = 1_000_000;
                for k in 0..=steps {
                    let t = k as f64 / steps as f64;
                    if env[i - 1] + t * (env[i] - env[i - 1]) >= p - 1e-12 {
                        return xs[i - 1] + t * (xs[i] - xs[i - 1]);
                    }
                }
            }
        }
        panic!("unreachable level")
    }

    #[test]
    fn plateau_inverts_to_left_edge() {
        let xs = [0.0, 20.0, 40.0, 60.0, 80.0];
        let means = [0.2, 0.5, 0.5, 0.45, 0.7];
        let c = curve_from_means(&xs, &means);
        let env = monotone_envelope(&c);
        for p in [0.5, 0.35, 0.6] {
            let got = invert_connected(&c, p).unwrap();
            let want = scan_first_crossing(&xs, env.mean(), p);
            assert!((got - want).abs() < 1e-4, "p={p}: {got} vs {want}");
        }
        assert_eq!(invert_connected(&c, 0.5).unwrap(), 20.0);
    }

    #[test]
    fn normalized_gain_cases() {
        let t = ReliabilityThresholds::default();
        let c = curve_from_means(&[0.0, 10.0], &[0.2, 0.6]);
        let f = normalized_gain(&c, 0.6, &t).unwrap();
        assert!((f.normalized_gain - 1.0).abs() < 1e-12);
        assert!(f.reliable);

        let flat = curve_from_means(&[0.0, 10.0], &[0.2, 0.2]);
        assert_eq!(
            normalized_gain(&flat, 0.6, &t).unwrap().normalized_gain,
            0.0
        );

        let low = curve_from_means(&[0.0, 10.0], &[0.2, 0.34]);
        let f = normalized_gain(&low, 0.9, &t).unwrap();
        assert!((f.normalized_gain - 0.2).abs() < 1e-12);
        assert!(!f.reliable);

        assert!(matches!(
            normalized_gain(&c, 0.2, &t),
            Err(Error::DegenerateCeiling { .. })
        ));
    }

    #[test]
    fn violation_fraction_counts_drops() {
        let c = curve_from_means(&[0.0, 1.0, 2.0, 3.0, 4.0], &[0.1, 0.3, 0.2, 0.4, 0.35]);
        assert_eq!(monotone_violation_fraction(&c), 0.5);
        let f = normalized_gain(&c, 0.5, &ReliabilityThresholds::default()).unwrap();
        assert!(!f.reliable);
    }

    #[test]
    fn truncate_keeps_prefix() {
        let c = curve_from_means(&[0.0, 20.0, 40.0], &[0.1, 0.2, 0.3]);
        let t = c.truncate(30.0).unwrap();
        assert_eq!(t.x_grid(), &[0.0, 20.0]);
        assert!(c.truncate(-1.0).is_err());
    }
}
