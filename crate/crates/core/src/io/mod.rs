//! File formats: curve logs, configuration, reports and plots.

pub mod config;
pub mod csv;
pub mod plot;
pub mod report;

pub use self::config::{load_config, parse_config_str, CeilingSource, ConfigFile};
pub use self::csv::{curves_to_csv, parse_curve_csv, parse_curve_str, write_curve_csv};
pub use self::plot::render_plots;
pub use self::report::{emit_report, ReportDocument, SCHEMA_VERSION};
