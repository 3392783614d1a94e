use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{IntegratorError, SolverConfig};
use crate::spectral::{sobolev_norm, Field};

/// States on the time grid with per-time norm diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct SolutionPath {
    times: Vec<f64>,
    states: Vec<Field>,
    diagnostics: Diagnostics,
}

/// Serializable summary of a solve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub gamma: f64,
    pub alpha: f64,
    pub p: f64,
    pub times: Vec<f64>,
    /// `‖u(t_n)‖_{H^γ_p}`.
    pub norm_gamma: Vec<f64>,
    /// `‖u(t_n)‖_{H^{γ+α}_p}`.
    pub norm_gamma_alpha: Vec<f64>,
    /// `𝓗`-norm differences of successive Picard iterates (empty for linear solves).
    pub picard_history: Vec<f64>,
    /// Number of equal subintervals the Picard iteration was run on.
    pub picard_subintervals: usize,
}

impl SolutionPath {
    pub fn new(cfg: &SolverConfig, states: Vec<Field>) -> Result<Self, IntegratorError> {
        let times: Vec<f64> = (0..states.len()).map(|n| n as f64 * cfg.dt).collect();
        let mut norm_gamma = Vec::with_capacity(states.len());
        let mut norm_gamma_alpha = Vec::with_capacity(states.len());
        for u in &states {
            norm_gamma.push(sobolev_norm(u, cfg.gamma, cfg.p)?);
            norm_gamma_alpha.push(sobolev_norm(u, cfg.gamma + cfg.alpha, cfg.p)?);
        }
        if norm_gamma.iter().chain(&norm_gamma_alpha).any(|v| !v.is_finite()) {
            return Err(IntegratorError::NonFinite);
        }
        let diagnostics = Diagnostics {
            gamma: cfg.gamma,
            alpha: cfg.alpha,
            p: cfg.p,
            times: times.clone(),
            norm_gamma,
            norm_gamma_alpha,
            picard_history: Vec::new(),
            picard_subintervals: 0,
        };
        Ok(Self { times, states, diagnostics })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[Field] {
        &self.states
    }

    pub fn final_state(&self) -> &Field {
        self.states.last().expect("a path holds at least the initial state")
    }

    pub fn diagnostics(&self) -> &Diagnostics {
        &self.diagnostics
    }

    pub fn picard_history(&self) -> &[f64] {
        &self.diagnostics.picard_history
    }

    pub(crate) fn set_picard(&mut self, history: Vec<f64>, subintervals: usize) {
        self.diagnostics.picard_history = history;
        self.diagnostics.picard_subintervals = subintervals;
    }

    /// CSV rows `time,node,value`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), IntegratorError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["time", "node", "value"])?;
        for (t, u) in self.times.iter().zip(&self.states) {
            for (i, v) in u.values().iter().enumerate() {
                w.write_record([t.to_string(), i.to_string(), v.to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn diagnostics_json(&self) -> Result<String, IntegratorError> {
        Ok(serde_json::to_string_pretty(&self.diagnostics)?)
    }
}
