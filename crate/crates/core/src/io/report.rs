//! TOML report document. Maps are ordered, so identical inputs serialise to
//! identical bytes.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fitting::{FamilyFit, FitSummary, FunctionFamily, Intercept};
use crate::metrics::{ConnectedRatioSeries, Dispersion, MetricReport, QmMetrics, StabilitySeries};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitSection {
    pub a_inf: f64,
    pub ceiling_source: String,
    pub p0: f64,
    pub selected_family: FunctionFamily,
    pub intercepts: BTreeMap<FunctionFamily, Intercept>,
    pub qm: BTreeMap<String, BTreeMap<FunctionFamily, FamilyFit>>,
}

impl FitSection {
    pub fn new(fits: &FitSummary, ceiling_source: &str) -> Self {
        FitSection {
            a_inf: fits.a_inf,
            ceiling_source: ceiling_source.to_string(),
            p0: fits.p0,
            selected_family: fits.selected_family,
            intercepts: fits.intercepts.clone(),
            qm: fits
                .results
                .iter()
                .map(|(id, r)| (id.clone(), r.per_family.clone()))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioSection {
    pub p_lo: f64,
    pub p_hi: f64,
    pub mean_ratio: f64,
    pub coefficient_of_variation: f64,
    pub performance_levels: Vec<f64>,
    pub ratios: Vec<f64>,
}

impl From<&ConnectedRatioSeries> for RatioSection {
    fn from(s: &ConnectedRatioSeries) -> Self {
        RatioSection {
            p_lo: s.region.0,
            p_hi: s.region.1,
            mean_ratio: s.mean_ratio(),
            coefficient_of_variation: s.coefficient_of_variation(),
            performance_levels: s.performance_levels.clone(),
            ratios: s.ratios.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsSection {
    pub baseline: String,
    pub qm: BTreeMap<String, QmMetrics>,
    pub connected_ratio: BTreeMap<String, RatioSection>,
}

/// A stability series with missing truncations written as `nan`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityEntry {
    pub stop_budgets: Vec<f64>,
    pub values: Vec<f64>,
    pub missing: Vec<usize>,
    pub dispersion: Dispersion,
}

impl From<&StabilitySeries> for StabilityEntry {
    fn from(s: &StabilitySeries) -> Self {
        StabilityEntry {
            stop_budgets: s.stop_budgets.clone(),
            values: s.values.iter().map(|v| v.unwrap_or(f64::NAN)).collect(),
            missing: s
                .values
                .iter()
                .enumerate()
                .filter(|(_, v)| v.is_none())
                .map(|(i, _)| i)
                .collect(),
            dispersion: s.dispersion,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ReportDocument {
    pub schema_version: u32,
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<MetricsSection>,
    /// qm id -> metric name -> series
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub stability: BTreeMap<String, BTreeMap<String, StabilityEntry>>,
}

impl ReportDocument {
    pub fn new() -> Self {
        ReportDocument {
            schema_version: SCHEMA_VERSION,
            ..Default::default()
        }
    }

    pub fn with_metrics(
        mut self,
        report: &MetricReport,
        ratio_series: &BTreeMap<String, ConnectedRatioSeries>,
    ) -> Self {
        self.warnings.extend(report.warnings.iter().cloned());
        self.metrics = Some(MetricsSection {
            baseline: report.baseline.clone(),
            qm: report.per_qm.clone(),
            connected_ratio: ratio_series
                .iter()
                .map(|(id, s)| (id.clone(), RatioSection::from(s)))
                .collect(),
        });
        self
    }

    pub fn add_stability(&mut self, series: &StabilitySeries) {
        self.stability
            .entry(series.qm_id.clone())
            .or_default()
            .insert(series.metric_name.clone(), StabilityEntry::from(series));
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self)
            .map_err(|e| Error::ConfigInvalid(format!("report serialisation: {e}")))
    }
}

pub fn emit_report(doc: &ReportDocument, path: &Path) -> Result<()> {
    let text = doc.to_toml()?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}
