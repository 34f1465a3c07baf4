//! Federated orchestration: agent-side local rounds for the two momentum
//! algorithms and the averaging baseline, server aggregation, and the outer
//! round loop with oracle evaluation.

mod agent;
mod config;
mod eval;
mod run;
mod server;

pub use agent::{local_round, local_round_hapg, local_round_pavg, local_round_svrpg, AgentDelta};
pub use config::{FedAlgo, FedConfig, U0Init};
pub use eval::{Evaluation, Evaluator, ExactEvaluator, MonteCarloEvaluator};
pub use run::{run_rounds, LogRow, RunLog, RunSummary};
pub use server::{server_aggregate_and_step, ServerState, DIVERGENCE_NORM};
