//! Scenario configuration, the end-to-end comparison pipeline and report
//! files.

mod config;
mod emit;
mod run;
mod svg;

use std::error::Error;
use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

pub use config::{HardwareConfig, HardwareRef, Method, ScenarioConfig, SplitLearningConfig, SCHEMA_VERSION};
pub use emit::{emit_report, report_csv, report_svg, write_atomic, EmitOptions, Format};
pub use run::{
    build_field, comm_profile, deploy, plan, routing, run_methods, run_scenario, run_split, ComparisonReport,
    FieldSummary, MethodMetrics, MethodResult, Provenance, SplitResult, EXTERNAL_BASELINE_NOTE,
};
pub use svg::{field_svg, loss_svg};

/// Pipeline stage an error surfaced from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Field,
    Deployment,
    Planning,
    SplitLearning,
    Scaling,
    Report,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Field => "field",
            Stage::Deployment => "deployment",
            Stage::Planning => "planning",
            Stage::SplitLearning => "split-learning",
            Stage::Scaling => "scaling",
            Stage::Report => "report",
        })
    }
}

#[derive(Debug, Error)]
pub enum HarnessError {
    /// Invalid or unreadable scenario; the CLI maps this to exit code 1.
    #[error("config: {0}")]
    Config(String),
    #[error("{stage} stage: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Box<dyn Error + Send + Sync>,
    },
    #[error("writing {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl HarnessError {
    pub fn at<E: Error + Send + Sync + 'static>(stage: Stage, err: E) -> Self {
        HarnessError::Stage {
            stage,
            source: Box::new(err),
        }
    }

    pub fn is_config(&self) -> bool {
        matches!(self, HarnessError::Config(_))
    }
}
