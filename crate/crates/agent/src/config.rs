use std::path::Path;

use thiserror::Error;

use shapegpt_core::GeometryConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{0} must be at least 1")]
    ZeroLimit(&'static str),
    #[error("reading prompt {path}: {source}")]
    Prompt { path: String, source: std::io::Error },
}

/// Prompt texts. The shipped defaults live in `prompts/`.
#[derive(Debug, Clone, PartialEq)]
pub struct Prompts {
    pub planner: String,
    pub worker: String,
    pub task_example: String,
    pub api_example: String,
}

impl Default for Prompts {
    fn default() -> Self {
        Prompts {
            planner: include_str!("../prompts/planner.txt").to_string(),
            worker: include_str!("../prompts/worker.txt").to_string(),
            task_example: include_str!("../prompts/task_example.txt").to_string(),
            api_example: include_str!("../prompts/api_example.txt").to_string(),
        }
    }
}

impl Prompts {
    /// Reads `planner.txt`, `worker.txt`, `task_example.txt` and
    /// `api_example.txt` from `dir`; missing files keep the default.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Prompts, ConfigError> {
        let mut p = Prompts::default();
        for (name, slot) in [
            ("planner.txt", &mut p.planner),
            ("worker.txt", &mut p.worker),
            ("task_example.txt", &mut p.task_example),
            ("api_example.txt", &mut p.api_example),
        ] {
            let path = dir.as_ref().join(name);
            match std::fs::read_to_string(&path) {
                Ok(text) => *slot = text,
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
                Err(source) => return Err(ConfigError::Prompt { path: path.display().to_string(), source }),
            }
        }
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionConfig {
    pub max_planner_iterations: usize,
    pub max_worker_calls_per_subtask: usize,
    pub planner_enabled: bool,
    /// Include the few-shot task example in the worker prompt.
    pub task_example: bool,
    /// Include the few-shot API example in the worker prompt.
    pub api_example: bool,
    pub geometry: GeometryConfig,
    pub prompts: Prompts,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            max_planner_iterations: 20,
            max_worker_calls_per_subtask: 10,
            planner_enabled: true,
            task_example: true,
            api_example: true,
            geometry: GeometryConfig::default(),
            prompts: Prompts::default(),
        }
    }
}

impl SessionConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.max_planner_iterations == 0 {
            return Err(ConfigError::ZeroLimit("max_planner_iterations"));
        }
        if self.max_worker_calls_per_subtask == 0 {
            return Err(ConfigError::ZeroLimit("max_worker_calls_per_subtask"));
        }
        Ok(())
    }

    /// Upper bound on model exchanges in one session.
    pub fn exchange_bound(&self) -> usize {
        self.max_planner_iterations * (self.max_worker_calls_per_subtask + 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = SessionConfig::default();
        assert_eq!((c.max_planner_iterations, c.max_worker_calls_per_subtask), (20, 10));
        assert_eq!(c.exchange_bound(), 220);
        assert!(c.validate().is_ok());
        assert!(SessionConfig { max_worker_calls_per_subtask: 0, ..c }.validate().is_err());
    }

    #[test]
    fn prompt_override() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("worker.txt"), "custom").unwrap();
        let p = Prompts::load_dir(dir.path()).unwrap();
        assert_eq!(p.worker, "custom");
        assert_eq!(p.planner, Prompts::default().planner);
    }
}
