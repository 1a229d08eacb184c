//! States `U = (u, v)`, the energy and the τ-weighted inner product.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::DomainSpec;

/// Bulk values on the grid nodes and boundary values on the Γ components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl State {
    pub fn new(u: Vec<f64>, v: Vec<f64>) -> Self {
        State { u, v }
    }

    /// `v = γu` on every Γ component.
    pub fn with_matched_trace(domain: &DomainSpec, u: Vec<f64>) -> Self {
        let v = domain.gamma_nodes().iter().map(|g| u[g.index]).collect();
        State { u, v }
    }

    pub fn constant(domain: &DomainSpec, c: f64) -> Self {
        Self::with_matched_trace(domain, vec![c; domain.n()])
    }

    pub fn check(&self, domain: &DomainSpec) -> Result<()> {
        if self.u.len() != domain.n() {
            return Err(Error::DimensionMismatch {
                what: "bulk values u",
                expected: domain.n(),
                got: self.u.len(),
            });
        }
        let m = domain.gamma_nodes().len();
        if self.v.len() != m {
            return Err(Error::DimensionMismatch {
                what: "boundary values v",
                expected: m,
                got: self.v.len(),
            });
        }
        if self.u.iter().chain(&self.v).any(|x| !x.is_finite()) {
            return Err(Error::InvalidParam("state entries must be finite".into()));
        }
        Ok(())
    }

    /// `v - γu` per Γ component.
    pub fn gap(&self, domain: &DomainSpec) -> Vec<f64> {
        domain
            .gamma_nodes()
            .iter()
            .zip(&self.v)
            .map(|(g, &v)| v - self.u[g.index])
            .collect()
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        State {
            u: self.u.iter().map(|x| alpha * x).collect(),
            v: self.v.iter().map(|x| alpha * x).collect(),
        }
    }

    pub fn shifted(&self, c: f64) -> Self {
        State {
            u: self.u.iter().map(|x| x + c).collect(),
            v: self.v.iter().map(|x| x + c).collect(),
        }
    }

    /// Pointwise `max(a, b)` in both components.
    pub fn sup(&self, other: &State) -> Result<State> {
        self.zip_with(other, f64::max)
    }

    /// Pointwise `min(a, b)` in both components.
    pub fn inf(&self, other: &State) -> Result<State> {
        self.zip_with(other, f64::min)
    }

    /// `self ≤ other` componentwise, up to `tol`.
    pub fn le(&self, other: &State, tol: f64) -> bool {
        self.u.len() == other.u.len()
            && self.v.len() == other.v.len()
            && self.u.iter().zip(&other.u).all(|(a, b)| *a <= *b + tol)
            && self.v.iter().zip(&other.v).all(|(a, b)| *a <= *b + tol)
    }

    fn zip_with(&self, other: &State, f: impl Fn(f64, f64) -> f64) -> Result<State> {
        same_shape(self, other)?;
        Ok(State {
            u: self.u.iter().zip(&other.u).map(|(&a, &b)| f(a, b)).collect(),
            v: self.v.iter().zip(&other.v).map(|(&a, &b)| f(a, b)).collect(),
        })
    }
}

fn same_shape(a: &State, b: &State) -> Result<()> {
    if a.u.len() != b.u.len() {
        return Err(Error::DimensionMismatch {
            what: "bulk values u",
            expected: a.u.len(),
            got: b.u.len(),
        });
    }
    if a.v.len() != b.v.len() {
        return Err(Error::DimensionMismatch {
            what: "boundary values v",
            expected: a.v.len(),
            got: b.v.len(),
        });
    }
    Ok(())
}

/// Parameters of a gradient-flow run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    pub tau: f64,
    /// `0` selects the nonsmooth energy; positive values the regularized one.
    pub eps: f64,
    pub dt: f64,
    #[serde(rename = "T")]
    pub t_end: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            tau: 1.0,
            eps: 0.0,
            dt: 1e-3,
            t_end: 0.2,
            tol: 1e-6,
            max_iter: 200,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = |x: f64| x.is_finite() && x > 0.0;
        if !pos(self.tau) {
            return Err(Error::ConfigError(format!("tau must be > 0, got {}", self.tau)));
        }
        if !(self.eps.is_finite() && self.eps >= 0.0) {
            return Err(Error::ConfigError(format!("eps must be >= 0, got {}", self.eps)));
        }
        if !pos(self.dt) {
            return Err(Error::ConfigError(format!("dt must be > 0, got {}", self.dt)));
        }
        if !pos(self.t_end) {
            return Err(Error::ConfigError(format!("T must be > 0, got {}", self.t_end)));
        }
        if !pos(self.tol) {
            return Err(Error::ConfigError(format!("tol must be > 0, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::ConfigError("max_iter must be positive".into()));
        }
        Ok(())
    }
}

/// Discrete total variation plus the boundary mismatch `∫_Γ |γu - v|`.
pub fn energy(state: &State, domain: &DomainSpec) -> Result<f64> {
    state.check(domain)?;
    Ok(energy_unchecked(state, domain))
}

pub(crate) fn energy_unchecked(state: &State, domain: &DomainSpec) -> f64 {
    let tv: f64 = domain
        .edge_weights()
        .iter()
        .zip(state.u.windows(2))
        .map(|(w, u)| w * (u[1] - u[0]).abs())
        .sum();
    let mismatch: f64 = domain
        .gamma_nodes()
        .iter()
        .zip(&state.v)
        .map(|(g, &v)| g.weight * (state.u[g.index] - v).abs())
        .sum();
    tv + mismatch
}

/// Largest trace mismatch for which `E_ε` still counts the state as admissible.
pub const TRACE_TOL: f64 = 1e-12;

/// The regularized energy `∫ √(|∇u|² + ε²) + (ε²/2) ∫ |∇u|²`, or `+∞` when `v ≠ γu`.
pub fn energy_eps(state: &State, eps: f64, domain: &DomainSpec) -> Result<f64> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::InvalidParam(format!("eps must be > 0, got {eps}")));
    }
    state.check(domain)?;
    let matched = domain
        .gamma_nodes()
        .iter()
        .zip(&state.v)
        .all(|(g, &v)| (state.u[g.index] - v).abs() <= TRACE_TOL);
    if !matched {
        return Ok(f64::INFINITY);
    }
    Ok(energy_eps_bulk(&state.u, eps, domain))
}

pub(crate) fn energy_eps_bulk(u: &[f64], eps: f64, domain: &DomainSpec) -> f64 {
    let nodes = domain.nodes();
    u.windows(2)
        .zip(nodes.windows(2))
        .map(|(u, r)| {
            let h = r[1] - r[0];
            let g = (u[1] - u[0]) / h;
            let cell = domain.volume(r[0], r[1]);
            cell * ((g * g + eps * eps).sqrt() + 0.5 * eps * eps * g * g)
        })
        .sum()
}

/// `∫ u1 u2 + τ ∫_Γ v1 v2` with lumped-mass quadrature.
pub fn inner_tau(a: &State, b: &State, tau: f64, domain: &DomainSpec) -> Result<f64> {
    a.check(domain)?;
    b.check(domain)?;
    Ok(inner_tau_unchecked(a, b, tau, domain))
}

pub(crate) fn inner_tau_unchecked(a: &State, b: &State, tau: f64, domain: &DomainSpec) -> f64 {
    let bulk: f64 = domain
        .masses()
        .iter()
        .zip(a.u.iter().zip(&b.u))
        .map(|(m, (x, y))| m * x * y)
        .sum();
    let bdry: f64 = domain
        .gamma_nodes()
        .iter()
        .zip(a.v.iter().zip(&b.v))
        .map(|(g, (x, y))| g.weight * x * y)
        .sum();
    bulk + tau * bdry
}

/// `‖a - b‖_τ`.
pub fn dist_tau(a: &State, b: &State, tau: f64, domain: &DomainSpec) -> Result<f64> {
    let d = State {
        u: a.u.iter().zip(&b.u).map(|(x, y)| x - y).collect(),
        v: a.v.iter().zip(&b.v).map(|(x, y)| x - y).collect(),
    };
    Ok(inner_tau(&d, &d, tau, domain)?.sqrt())
}

/// `(U1 ∨ U2, U1 ∧ U2)`.
pub fn lattice_sup_inf(a: &State, b: &State) -> Result<(State, State)> {
    Ok((a.sup(b)?, a.inf(b)?))
}
