//! Saturating learning-curve approximations and the one-dimensional
//! least-squares fit of their scale parameter.
//!
//! Both families are functions of `x / b`: the asymptote `a_inf` and the
//! intercept parameter `a0` are shared by every query method of one
//! analysis, so only the scale `b` is estimated per method.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::curve::LearningCurve;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionFamily {
    /// `a_inf * (1 - exp(a0 - x / b))`
    ExpSaturating,
    /// `a_inf / (1 + exp(a0 - x / b))`
    Logistic,
}

impl FunctionFamily {
    pub const ALL: [FunctionFamily; 2] = [FunctionFamily::ExpSaturating, FunctionFamily::Logistic];

    pub fn as_str(self) -> &'static str {
        match self {
            FunctionFamily::ExpSaturating => "exp_saturating",
            FunctionFamily::Logistic => "logistic",
        }
    }

    /// Value at `u = x / b`.
    #[inline]
    pub fn shape(self, a_inf: f64, a0: f64, u: f64) -> f64 {
        match self {
            FunctionFamily::ExpSaturating => a_inf * (1.0 - (a0 - u).exp()),
            FunctionFamily::Logistic => a_inf / (1.0 + (a0 - u).exp()),
        }
    }
}

impl fmt::Display for FunctionFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FunctionFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exp_saturating" | "exp" => Ok(FunctionFamily::ExpSaturating),
            "logistic" => Ok(FunctionFamily::Logistic),
            other => Err(Error::ConfigInvalid(format!(
                "unknown function family '{other}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApproxModel {
    pub family: FunctionFamily,
    pub a_inf: f64,
    pub a0: f64,
    pub b: f64,
}

impl ApproxModel {
    pub fn evaluate(&self, x: f64) -> f64 {
        evaluate(self, x)
    }
}

pub fn evaluate(model: &ApproxModel, x: f64) -> f64 {
    model.family.shape(model.a_inf, model.a0, x / model.b)
}

/// Mean of the full-data ("ceiling") performances across query methods.
pub fn derive_a_inf(ceiling_performances: &[f64]) -> Result<f64> {
    if ceiling_performances.is_empty() {
        return Err(Error::EmptyInput("ceiling performances"));
    }
    if let Some(&bad) = ceiling_performances
        .iter()
        .find(|&&c| !(c > 0.0 && c <= 1.0))
    {
        return Err(Error::InvalidCeiling(bad));
    }
    Ok(ceiling_performances.iter().sum::<f64>() / ceiling_performances.len() as f64)
}

/// Solves `p_hat(0) = p0` for `a0`.
pub fn derive_a0(family: FunctionFamily, a_inf: f64, p0: f64) -> Result<f64> {
    let infeasible = Error::InterceptInfeasible { p0, a_inf };
    if !(p0 >= 0.0 && p0 < a_inf) {
        return Err(infeasible);
    }
    match family {
        FunctionFamily::ExpSaturating => Ok((1.0 - p0 / a_inf).ln()),
        FunctionFamily::Logistic if p0 == 0.0 => Err(infeasible),
        FunctionFamily::Logistic => Ok((a_inf / p0 - 1.0).ln()),
    }
}

/// Intercept parameter together with whether `p0` had to be clamped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Intercept {
    pub a0: f64,
    pub p0: f64,
    pub clamped: bool,
}

pub const CEILING_CLAMP: f64 = 0.999;
pub const LOGISTIC_FLOOR: f64 = 1e-6;

/// [`derive_a0`] after clamping `p0` into the feasible region.
///
/// `p0 >= a_inf` is pulled down to `0.999 * a_inf`; a zero `p0` under the
/// logistic family is raised to `1e-6`.
pub fn derive_intercept(family: FunctionFamily, a_inf: f64, p0: f64) -> Result<Intercept> {
    let mut p = p0;
    let mut clamped = false;
    if p >= a_inf {
        p = CEILING_CLAMP * a_inf;
        clamped = true;
    }
    if family == FunctionFamily::Logistic && p == 0.0 {
        p = LOGISTIC_FLOOR;
        clamped = true;
    }
    Ok(Intercept {
        a0: derive_a0(family, a_inf, p)?,
        p0: p,
        clamped,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilyFit {
    pub b: f64,
    pub rmse: f64,
    /// The optimum sits on the edge of the search bracket.
    pub at_boundary: bool,
}

const SCAN_POINTS: usize = 64;
const BRACKET_LO: f64 = 1e-4;
const BRACKET_HI: f64 = 1e2;
const GOLDEN_REL_WIDTH: f64 = 1e-9;

/// Least-squares estimate of `b` against every per-seed scatter point.
///
/// A log-spaced scan over `[x_max / 1e4, 1e2 * x_max]` localises the
/// minimum, then golden-section search in `ln b` refines it.
pub fn fit_b(
    family: FunctionFamily,
    curve: &LearningCurve,
    a_inf: f64,
    a0: f64,
) -> Result<FamilyFit> {
    let points: Vec<(f64, f64)> = curve.scatter().collect();
    fit_b_points(family, &points, a_inf, a0)
}

pub(crate) fn fit_b_points(
    family: FunctionFamily,
    points: &[(f64, f64)],
    a_inf: f64,
    a0: f64,
) -> Result<FamilyFit> {
    let x_max = points.iter().map(|p| p.0).fold(0.0, f64::max);
    let distinct = {
        let mut xs: Vec<u64> = points.iter().map(|p| p.0.to_bits()).collect();
        xs.sort_unstable();
        xs.dedup();
        xs.len()
    };
    if distinct < 2 || x_max <= 0.0 {
        return Err(Error::InsufficientData);
    }

    let sse = |ln_b: f64| -> f64 {
        let b = ln_b.exp();
        let s: f64 = points
            .iter()
            .map(|&(x, y)| {
                let r = family.shape(a_inf, a0, x / b) - y;
                r * r
            })
            .sum();
        if s.is_finite() {
            s
        } else {
            f64::INFINITY
        }
    };

    let lo = (x_max * BRACKET_LO).ln();
    let hi = (x_max * BRACKET_HI).ln();
    let step = (hi - lo) / (SCAN_POINTS - 1) as f64;
    let grid: Vec<f64> = (0..SCAN_POINTS).map(|i| lo + step * i as f64).collect();
    let values: Vec<f64> = grid.iter().map(|&g| sse(g)).collect();
    let (best, best_val) =
        values
            .iter()
            .copied()
            .enumerate()
            .fold(
                (0, f64::INFINITY),
                |acc, (i, v)| if v < acc.1 { (i, v) } else { acc },
            );
    if !best_val.is_finite() {
        return Err(Error::FitDiverged);
    }

    let left = grid[best.saturating_sub(1)];
    let right = grid[(best + 1).min(SCAN_POINTS - 1)];
    let (ln_b, obj) = golden_section(&sse, left, right, GOLDEN_REL_WIDTH);
    let (ln_b, obj) = if obj <= best_val {
        (ln_b, obj)
    } else {
        (grid[best], best_val)
    };

    let at_boundary = (best == 0 || best == SCAN_POINTS - 1)
        && ((ln_b - lo).abs() < step || (hi - ln_b).abs() < step);
    Ok(FamilyFit {
        b: ln_b.exp(),
        rmse: (obj / points.len() as f64).sqrt(),
        at_boundary,
    })
}

/// Minimises `f` on `[a, b]`; returns the best abscissa seen and its value.
fn golden_section(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    [(a, f(a)), (c, fc), (d, fd), (b, f(b))]
        .into_iter()
        .fold(
            (c, fc),
            |best, cand| if cand.1 < best.1 { cand } else { best },
        )
}

/// Per-method fit of every considered family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub qm_id: String,
    pub per_family: BTreeMap<FunctionFamily, FamilyFit>,
    pub selected_family: FunctionFamily,
    pub selected_b: f64,
}

/// Picks the family with the smallest RMSE averaged over query methods.
/// Ties go to [`FunctionFamily::ExpSaturating`].
pub fn select_function(
    fits: &BTreeMap<String, BTreeMap<FunctionFamily, FamilyFit>>,
) -> Result<FunctionFamily> {
    let mut iter = fits.values();
    let first = iter.next().ok_or(Error::EmptyInput("fits"))?;
    if first.is_empty() {
        return Err(Error::EmptyInput("fitted families"));
    }
    let families: Vec<FunctionFamily> = first.keys().copied().collect();
    if fits
        .values()
        .any(|m| m.keys().copied().collect::<Vec<_>>() != families)
    {
        return Err(Error::InconsistentFamilies);
    }
    let n = fits.len() as f64;
    // BTreeMap order puts ExpSaturating first, so a strict `<` keeps it on ties.
    let mut best = (families[0], f64::INFINITY);
    for fam in families {
        let mean = fits.values().map(|m| m[&fam].rmse).sum::<f64>() / n;
        if mean < best.1 {
            best = (fam, mean);
        }
    }
    Ok(best.0)
}

/// Shared parameters and per-method fits for one analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub a_inf: f64,
    /// Pooled seed-mean performance at `x = 0` across methods.
    pub p0: f64,
    pub intercepts: BTreeMap<FunctionFamily, Intercept>,
    pub selected_family: FunctionFamily,
    pub results: BTreeMap<String, FitResult>,
}

impl FitSummary {
    pub fn model(&self, qm_id: &str, family: FunctionFamily) -> Option<ApproxModel> {
        let fit = self.results.get(qm_id)?.per_family.get(&family)?;
        Some(ApproxModel {
            family,
            a_inf: self.a_inf,
            a0: self.intercepts.get(&family)?.a0,
            b: fit.b,
        })
    }

    pub fn any_clamped(&self) -> bool {
        self.intercepts.values().any(|i| i.clamped)
    }
}

/// Grand mean of the `x = 0` seed means of all curves.
pub fn pooled_initial_performance(curves: &BTreeMap<String, LearningCurve>) -> Result<f64> {
    if curves.is_empty() {
        return Err(Error::EmptyInput("curves"));
    }
    let mut sum = 0.0;
    for c in curves.values() {
        if c.x_min() != 0.0 {
            return Err(Error::OutOfDomain {
                x: 0.0,
                min: c.x_min(),
                max: c.x_max(),
            });
        }
        sum += c.mean()[0];
    }
    Ok(sum / curves.len() as f64)
}

/// Fits every family to every curve and selects the family to report.
pub fn fit_curves(
    curves: &BTreeMap<String, LearningCurve>,
    a_inf: f64,
    families: &[FunctionFamily],
) -> Result<FitSummary> {
    if families.is_empty() {
        return Err(Error::EmptyInput("function families"));
    }
    let p0 = pooled_initial_performance(curves)?;
    let mut intercepts = BTreeMap::new();
    for &fam in families {
        intercepts.insert(fam, derive_intercept(fam, a_inf, p0)?);
    }
    let mut per_qm: BTreeMap<String, BTreeMap<FunctionFamily, FamilyFit>> = BTreeMap::new();
    for (id, curve) in curves {
        let mut m = BTreeMap::new();
        for (&fam, icpt) in &intercepts {
            m.insert(fam, fit_b(fam, curve, a_inf, icpt.a0)?);
        }
        per_qm.insert(id.clone(), m);
    }
    let selected_family = select_function(&per_qm)?;
    let results = per_qm
        .into_iter()
        .map(|(id, per_family)| {
            let selected_b = per_family[&selected_family].b;
            let r = FitResult {
                qm_id: id.clone(),
                per_family,
                selected_family,
                selected_b,
            };
            (id, r)
        })
        .collect();
    Ok(FitSummary {
        a_inf,
        p0,
        intercepts,
        selected_family,
        results,
    })
}
