//! Planner/worker agents over the shapegpt tool library.

pub mod chat;
pub mod config;
pub mod events;
pub mod planner;
pub mod scripted;
pub mod session;
pub mod worker;

pub use chat::{llm_chat, CallRequest, ChatClient, ChatError, ChatTurn, RemoteClient, RemoteConfig, Role, ScriptedClient};
pub use config::{ConfigError, Prompts, SessionConfig};
pub use events::{Event, EventKind, EventLog};
pub use planner::{parse_envelope, planner_step, Envelope, PlannerDecision, PlannerState, Subtask, SubtaskStatus};
pub use scripted::{ChaosClient, FaultInjectingWorker, FaultMode, PlanStep, PolicyPlannerClient, Scripts, ScriptedWorker};
pub use session::{canonical_call, count_repeated_calls, run_session, Agents, CallRecord, SessionOutcome};
pub use worker::{worker_step, CallOutcome, WorkerContext, WorkerReport};
