//! Discrete-event simulator, scenario files, experiments and CSV output for
//! the `p2pcc-core` controller.

pub mod config;
pub mod error;
pub mod experiments;
pub mod lemmas;
pub mod metrics;
pub mod sim;

pub use config::{ActivePeriod, CompetingFlow, ScenarioConfig, TcpKind};
pub use error::{ConfigError, OutputError};
pub use experiments::{build_experiment_1, build_experiment_2, build_experiment_3, builtin, Exp2Variant, BUILTIN_NAMES};
pub use lemmas::{verify_lemma1, verify_lemma2, LemmaReport};
pub use metrics::{emit_csv, MetricsLog, MetricsRow, RunSummary};
pub use sim::run;
