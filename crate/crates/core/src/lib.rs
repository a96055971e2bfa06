//! Tabular monitored MDPs: environments whose rewards pass through a monitor
//! that may hide them, a Q-learning agent with a reward model, directed
//! exploration through state-action successor functions, count and optimism
//! baselines, exact dynamic-programming oracles, and a seeded experiment harness.

pub mod agent;
pub mod config;
pub mod env;
pub mod error;
pub mod glie;
pub mod harness;
pub mod io;
pub mod mdp;
pub mod monitor;
pub mod oracle;
pub mod policy;
pub mod space;

pub use agent::{AgentTables, Schedule, SuccessorTables};
pub use config::{RunConfig, TerminalBootstrap};
pub use env::{EnvKind, Environment};
pub use error::{Error, Result};
pub use glie::{DiameterEstimate, GlieReport, GlieTrace};
pub use harness::{evaluate_greedy, run_training, MetricRow, RunArtifacts};
pub use mdp::{JointOutcome, MonMdp};
pub use monitor::{Monitor, MonitorKind, MonitorParams};
pub use oracle::{MonMdpModel, TerminalLinkage};
pub use policy::{ExploreDecision, Goal, PolicyKind};
pub use space::{
    EnvAction, EnvState, JointAction, JointSpace, JointState, MonAction, MonState, ProxyReward, TransitionRecord,
};
