//! Adapter for solvers run as a separate process.
//!
//! The program receives the model as a CPLEX LP file and must leave a
//! `name = value` solution file behind. The placeholders `{lp}` and
//! `{solution}` in the arguments are replaced with the two paths.

use std::path::PathBuf;
use std::process::Command;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};
use vneap_core::LinearProgram;

use crate::error::{Error, Result};
use crate::lp_format::{parse_solution, write_lp};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExternalSolver {
    pub program: String,
    #[serde(default)]
    pub args: Vec<String>,
}

static COUNTER: AtomicU64 = AtomicU64::new(0);

struct Scratch(PathBuf);

impl Drop for Scratch {
    fn drop(&mut self) {
        let _ = std::fs::remove_dir_all(&self.0);
    }
}

impl ExternalSolver {
    /// Parses `"program arg1 arg2 ..."` split on whitespace.
    pub fn from_command_line(line: &str) -> Option<Self> {
        let mut parts = line.split_whitespace().map(str::to_string);
        Some(ExternalSolver { program: parts.next()?, args: parts.collect() })
    }

    pub fn solve(&self, lp: &LinearProgram) -> Result<Vec<f64>> {
        let n = COUNTER.fetch_add(1, Ordering::Relaxed);
        let dir = std::env::temp_dir().join(format!("vneap-{}-{n}", std::process::id()));
        std::fs::create_dir_all(&dir).map_err(|source| Error::Io { path: dir.display().to_string(), source })?;
        let scratch = Scratch(dir);
        let lp_path = scratch.0.join("model.lp");
        let sol_path = scratch.0.join("model.sol");
        std::fs::write(&lp_path, write_lp(lp))
            .map_err(|source| Error::Io { path: lp_path.display().to_string(), source })?;
        let args: Vec<String> = self
            .args
            .iter()
            .map(|a| a.replace("{lp}", &lp_path.to_string_lossy()).replace("{solution}", &sol_path.to_string_lossy()))
            .collect();
        log::debug!("running {} {}", self.program, args.join(" "));
        let output = Command::new(&self.program)
            .args(&args)
            .output()
            .map_err(|e| Error::ExternalSolver(format!("cannot start {}: {e}", self.program)))?;
        if !output.status.success() {
            let stderr = String::from_utf8_lossy(&output.stderr);
            return Err(Error::ExternalSolver(format!(
                "{} exited with {}: {}",
                self.program,
                output.status,
                stderr.trim()
            )));
        }
        let text = std::fs::read_to_string(&sol_path)
            .map_err(|e| Error::ExternalSolver(format!("no solution file written: {e}")))?;
        Ok(parse_solution(&text, lp)?)
    }
}
