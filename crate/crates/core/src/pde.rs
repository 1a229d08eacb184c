//! Minimizing-movement scheme for the flow on the radial grid.
//!
//! One implicit step minimizes
//! `½‖u − uⁿ‖² + (τ/2)‖v − vⁿ‖²_Γ + Δt·E(u, v)` with lumped masses. Both the discrete total
//! variation and the boundary mismatch are weighted absolute differences along the chain
//! `v_lo – u_0 – … – u_{n−1} – v_hi`, so the step is a weighted one-dimensional TV denoising
//! problem and is solved exactly by a dynamic program over derivative messages. The
//! regularized energy (`eps > 0`, `v = γu`) is minimized by damped Newton iterations.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{DomainSpec, End};
use crate::qp::thomas;
use crate::state::{energy_eps_bulk, energy_unchecked, inner_tau_unchecked, FlowConfig, State};
use crate::trajectory::{detect_events, push_row, Trajectory};

/// What one implicit step cost and how well its optimality conditions hold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepDiagnostics {
    pub iterations: usize,
    /// Largest violation of the optimality conditions, relative to the data scale.
    pub residual: f64,
    pub objective: f64,
}

#[derive(Debug, Clone)]
pub struct Step {
    pub state: State,
    /// Normalized fluxes `z` on the grid edges (`u_{i+1} − u_i`), in `[−1, 1]`.
    pub flux: Vec<f64>,
    pub diagnostics: StepDiagnostics,
}

struct Chain {
    /// Quadratic weights of the chain nodes.
    a: Vec<f64>,
    y: Vec<f64>,
    /// `c[k]` couples node `k` and node `k + 1`.
    c: Vec<f64>,
}

/// Exact minimizer of `Σ a_k/2 (x_k − y_k)² + Σ c_k |x_{k+1} − x_k|`, all `a_k > 0`.
fn chain_tv(ch: &Chain) -> Vec<f64> {
    let m = ch.a.len();
    // message derivative: left affine piece, right affine piece, knots (x, slope jump)
    let mut knots: VecDeque<(f64, f64)> = VecDeque::new();
    let (mut al, mut bl, mut ar, mut br) = (0.0, 0.0, 0.0, 0.0);
    let mut lo = vec![0.0; m.saturating_sub(1)];
    let mut hi = vec![0.0; m.saturating_sub(1)];
    for k in 0..m {
        al += ch.a[k];
        bl -= ch.a[k] * ch.y[k];
        ar += ch.a[k];
        br -= ch.a[k] * ch.y[k];
        if k + 1 == m {
            break;
        }
        let c = ch.c[k];
        while let Some(&(x, s)) = knots.front() {
            if al * x + bl > -c {
                break;
            }
            knots.pop_front();
            al += s;
            bl -= s * x;
        }
        let l = (-c - bl) / al;
        knots.push_front((l, al));
        al = 0.0;
        bl = -c;
        while let Some(&(x, s)) = knots.back() {
            if ar * x + br < c {
                break;
            }
            knots.pop_back();
            ar -= s;
            br += s * x;
        }
        let h = (c - br) / ar;
        knots.push_back((h, -ar));
        ar = 0.0;
        br = c;
        lo[k] = l;
        hi[k] = h;
    }
    let mut root = f64::NAN;
    while let Some((x, s)) = knots.pop_front() {
        if al * x + bl >= 0.0 {
            root = -bl / al;
            break;
        }
        al += s;
        bl -= s * x;
    }
    if root.is_nan() {
        root = -bl / al;
    }
    let mut x = vec![0.0; m];
    x[m - 1] = root;
    for k in (0..m - 1).rev() {
        x[k] = x[k + 1].clamp(lo[k], hi[k]);
    }
    x
}

/// Dual variables `ζ_k = p_k / c_k` with `p` the accumulated residuals, and the KKT violation.
fn chain_kkt(ch: &Chain, x: &[f64]) -> (Vec<f64>, f64) {
    let m = x.len();
    let scale = ch
        .a
        .iter()
        .zip(&ch.y)
        .map(|(a, y)| a * (1.0 + y.abs()))
        .fold(0.0, f64::max)
        .max(ch.c.iter().fold(0.0, |m, c| f64::max(m, *c)));
    let mut p = 0.0;
    let mut zeta = Vec::with_capacity(m.saturating_sub(1));
    let mut viol: f64 = 0.0;
    for k in 0..m {
        p += ch.a[k] * (x[k] - ch.y[k]);
        if k + 1 == m {
            viol = viol.max(p.abs());
            break;
        }
        let c = ch.c[k];
        let z = p / c;
        let d = x[k + 1] - x[k];
        let bad = if d > 0.0 {
            (z - 1.0).abs()
        } else if d < 0.0 {
            (z + 1.0).abs()
        } else {
            (z.abs() - 1.0).max(0.0)
        };
        viol = viol.max(bad * c);
        zeta.push(z.clamp(-1.0, 1.0));
    }
    (zeta, viol / scale.max(f64::MIN_POSITIVE))
}

fn build_chain(state: &State, dt: f64, tau: f64, domain: &DomainSpec) -> (Chain, Option<usize>) {
    let gnodes = domain.gamma_nodes();
    let mut a = Vec::new();
    let mut y = Vec::new();
    let mut c = Vec::new();
    let lo_g = gnodes.iter().position(|g| g.end == End::Lo);
    let hi_g = gnodes.iter().position(|g| g.end == End::Hi);
    if let Some(j) = lo_g {
        a.push(tau * gnodes[j].weight);
        y.push(state.v[j]);
        c.push(dt * gnodes[j].weight);
    }
    let offset = a.len();
    a.extend(domain.masses());
    y.extend(&state.u);
    c.extend(domain.edge_weights().iter().map(|w| dt * w));
    if let Some(j) = hi_g {
        c.push(dt * gnodes[j].weight);
        a.push(tau * gnodes[j].weight);
        y.push(state.v[j]);
    }
    (Chain { a, y, c }, Some(offset))
}

fn step_nonsmooth(state: &State, cfg: &FlowConfig, domain: &DomainSpec) -> Result<Step> {
    let (ch, offset) = build_chain(state, cfg.dt, cfg.tau, domain);
    let off = offset.unwrap_or(0);
    let x = chain_tv(&ch);
    let (zeta, residual) = chain_kkt(&ch, &x);
    if !(residual <= cfg.tol) {
        return Err(Error::NotConverged { iterations: 1, residual });
    }
    let n = domain.n();
    let u = x[off..off + n].to_vec();
    let gnodes = domain.gamma_nodes();
    let v = gnodes
        .iter()
        .map(|g| match g.end {
            End::Lo => x[0],
            End::Hi => x[x.len() - 1],
        })
        .collect();
    let next = State::new(u, v);
    let objective = step_objective(state, &next, cfg, domain, energy_unchecked(&next, domain));
    Ok(Step {
        flux: zeta[off..off + n - 1].to_vec(),
        state: next,
        diagnostics: StepDiagnostics {
            iterations: 1,
            residual,
            objective,
        },
    })
}

fn step_objective(prev: &State, next: &State, cfg: &FlowConfig, domain: &DomainSpec, e: f64) -> f64 {
    let d = State::new(
        next.u.iter().zip(&prev.u).map(|(a, b)| a - b).collect(),
        next.v.iter().zip(&prev.v).map(|(a, b)| a - b).collect(),
    );
    0.5 * inner_tau_unchecked(&d, &d, cfg.tau, domain) + cfg.dt * e
}

/// Regularized step: Newton on `u` with the trace folded in (`v = γu`).
fn step_regularized(state: &State, cfg: &FlowConfig, domain: &DomainSpec) -> Result<Step> {
    let n = domain.n();
    let eps = cfg.eps;
    let nodes = domain.nodes();
    let masses = domain.masses();
    let gnodes = domain.gamma_nodes();
    let cells: Vec<(f64, f64)> = nodes
        .windows(2)
        .map(|r| (r[1] - r[0], domain.volume(r[0], r[1])))
        .collect();
    let mut wq = masses.clone();
    let mut target: Vec<f64> = masses.iter().zip(&state.u).map(|(m, u)| m * u).collect();
    for (g, v) in gnodes.iter().zip(&state.v) {
        wq[g.index] += cfg.tau * g.weight;
        target[g.index] += cfg.tau * g.weight * v;
    }
    let target: Vec<f64> = target.iter().zip(&wq).map(|(t, w)| t / w).collect();
    let objective = |u: &[f64]| -> f64 {
        let q: f64 = u.iter().zip(&target).zip(&wq).map(|((u, t), w)| 0.5 * w * (u - t) * (u - t)).sum();
        q + cfg.dt * energy_eps_bulk(u, eps, domain)
    };
    let phi1 = |g: f64| g / (g * g + eps * eps).sqrt() + eps * eps * g;
    let phi2 = |g: f64| eps * eps / (g * g + eps * eps).powf(1.5) + eps * eps;
    let scale = wq.iter().zip(&target).map(|(w, t)| w * (1.0 + t.abs())).fold(0.0, f64::max);
    let mut u = state.u.clone();
    let mut f = objective(&u);
    let mut residual = f64::INFINITY;
    for it in 1..=cfg.max_iter {
        let mut grad: Vec<f64> = u.iter().zip(&target).zip(&wq).map(|((u, t), w)| w * (u - t)).collect();
        let mut diag = wq.clone();
        let mut off = vec![0.0; n - 1];
        for (e, &(h, vol)) in cells.iter().enumerate() {
            let g = (u[e + 1] - u[e]) / h;
            let d1 = cfg.dt * vol * phi1(g) / h;
            let d2 = cfg.dt * vol * phi2(g) / (h * h);
            grad[e] -= d1;
            grad[e + 1] += d1;
            diag[e] += d2;
            diag[e + 1] += d2;
            off[e] -= d2;
        }
        residual = grad.iter().fold(0.0, |m, g| f64::max(m, g.abs())) / scale;
        if residual <= cfg.tol {
            let v = gnodes.iter().map(|g| u[g.index]).collect();
            let next = State::new(u, v);
            let flux = next
                .u
                .windows(2)
                .zip(&cells)
                .map(|(w, &(h, _))| {
                    let g = (w[1] - w[0]) / h;
                    g / (g * g + eps * eps).sqrt()
                })
                .collect();
            let e = energy_eps_bulk(&next.u, eps, domain);
            let objective = step_objective(state, &next, cfg, domain, e);
            return Ok(Step {
                state: next,
                flux,
                diagnostics: StepDiagnostics {
                    iterations: it,
                    residual,
                    objective,
                },
            });
        }
        let rhs: Vec<f64> = grad.iter().map(|g| -g).collect();
        let dir = thomas(&diag, &off, &rhs)?;
        let slope: f64 = dir.iter().zip(&grad).map(|(d, g)| d * g).sum();
        let mut t = 1.0;
        loop {
            let trial: Vec<f64> = u.iter().zip(&dir).map(|(u, d)| u + t * d).collect();
            let ft = objective(&trial);
            if ft <= f + 1e-4 * t * slope || t < 1e-12 {
                u = trial;
                f = ft;
                break;
            }
            t *= 0.5;
        }
    }
    Err(Error::NotConverged {
        iterations: cfg.max_iter,
        residual,
    })
}

/// One implicit Euler step of the flow.
pub fn step_implicit(state: &State, cfg: &FlowConfig, domain: &DomainSpec) -> Result<Step> {
    cfg.validate()?;
    state.check(domain)?;
    if cfg.eps > 0.0 {
        step_regularized(state, cfg, domain)
    } else {
        step_nonsmooth(state, cfg, domain)
    }
}

/// Per-step record of a PDE run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowDiagnostics {
    pub steps: Vec<StepDiagnostics>,
    /// `E(Uⁿ) − E(Uⁿ⁺¹) − ‖Uⁿ⁺¹ − Uⁿ‖²_τ / Δt` per step; nonnegative for a convex energy.
    pub identity_defect: Vec<f64>,
    pub max_residual: f64,
    pub total_iterations: usize,
}

/// Relative slack for rounding in the per-step energy comparison.
pub const ENERGY_ROUNDING: f64 = 1e-13;

/// Facet edges `[a, b]` of a grid profile: the low-end facet is the run of nodes from the first
/// with `|Δu| ≤ grad_tol·h`; the edge is placed where the adjacent bulk, extended linearly,
/// reaches the facet height. Same for the high end.
pub fn extract_edges(u: &[f64], domain: &DomainSpec, grad_tol: f64) -> [f64; 2] {
    let r = domain.nodes();
    let n = u.len();
    let h = domain.h();
    let flat = |i: usize| (u[i + 1] - u[i]).abs() <= grad_tol * h;
    let mut k = 0;
    while k + 1 < n && flat(k) {
        k += 1;
    }
    if k + 1 >= n {
        return [r[n - 1], r[0]];
    }
    let a = if k + 2 < n {
        let s = (u[k + 2] - u[k + 1]) / (r[k + 2] - r[k + 1]);
        if s != 0.0 {
            (r[k + 1] - (u[k + 1] - u[k]) / s).clamp(r[k], r[k + 1])
        } else {
            r[k]
        }
    } else {
        r[k]
    };
    let mut j = n - 1;
    while j > 0 && flat(j - 1) {
        j -= 1;
    }
    let b = if j >= 2 {
        let s = (u[j - 1] - u[j - 2]) / (r[j - 1] - r[j - 2]);
        if s != 0.0 {
            (r[j - 1] + (u[j] - u[j - 1]) / s).clamp(r[j - 1], r[j])
        } else {
            r[j]
        }
    } else {
        r[j]
    };
    [a, b]
}

fn data_scale(state: &State) -> f64 {
    state.u.iter().chain(&state.v).fold(0.0, |m: f64, x| m.max(x.abs())).max(1.0)
}

/// Iterates [`step_implicit`] to `T`, asserting that the energy never increases.
pub fn run_flow_diagnosed(initial: &State, cfg: &FlowConfig, domain: &DomainSpec) -> Result<(Trajectory, FlowDiagnostics)> {
    cfg.validate()?;
    initial.check(domain)?;
    let energy_of = |s: &State| {
        if cfg.eps > 0.0 {
            let matched = domain.gamma_nodes().iter().zip(&s.v).all(|(g, v)| s.u[g.index] == *v);
            if matched {
                energy_eps_bulk(&s.u, cfg.eps, domain)
            } else {
                f64::INFINITY
            }
        } else {
            energy_unchecked(s, domain)
        }
    };
    let grad_tol = 1e-7 * data_scale(initial);
    let mut traj = Trajectory::new(domain.clone(), cfg.tau);
    let mut diag = FlowDiagnostics {
        steps: Vec::new(),
        identity_defect: Vec::new(),
        max_residual: 0.0,
        total_iterations: 0,
    };
    let push = |traj: &mut Trajectory, s: State, t: f64, e: f64, diss: f64| {
        traj.times.push(t);
        traj.edges.push(extract_edges(&s.u, domain, grad_tol));
        traj.heights.push([s.u[0], s.u[s.u.len() - 1]]);
        traj.gap.push(s.gap(domain));
        traj.energy.push(e);
        traj.dissipation.push(diss);
        traj.states.push(s);
    };
    let mut state = initial.clone();
    let mut e = energy_of(&state);
    push(&mut traj, state.clone(), 0.0, e, 0.0);
    let steps = crate::dynamics::step_count(cfg.t_end, cfg.dt);
    let mut t = 0.0;
    for k in 0..steps {
        let dt = if k + 1 == steps { cfg.t_end - t } else { cfg.dt };
        if dt <= 0.0 {
            break;
        }
        let c = FlowConfig { dt, ..*cfg };
        let step = step_implicit(&state, &c, domain)?;
        let e_new = energy_of(&step.state);
        if e_new > e + ENERGY_ROUNDING * (1.0 + e.abs()) {
            return Err(Error::EnergyIncrease {
                step: k + 1,
                increase: e_new - e,
            });
        }
        let d = State::new(
            step.state.u.iter().zip(&state.u).map(|(a, b)| a - b).collect(),
            step.state.v.iter().zip(&state.v).map(|(a, b)| a - b).collect(),
        );
        let norm2 = inner_tau_unchecked(&d, &d, cfg.tau, domain);
        diag.identity_defect.push((e - e_new) - norm2 / dt);
        diag.max_residual = diag.max_residual.max(step.diagnostics.residual);
        diag.total_iterations += step.diagnostics.iterations;
        diag.steps.push(step.diagnostics);
        t += dt;
        e = e_new;
        state = step.state;
        push(&mut traj, state.clone(), t, e, norm2 / (dt * dt));
    }
    traj.events = detect_events(&traj, 1e-6 * data_scale(initial));
    Ok((traj, diag))
}

pub fn run_flow(initial: &State, cfg: &FlowConfig, domain: &DomainSpec) -> Result<Trajectory> {
    Ok(run_flow_diagnosed(initial, cfg, domain)?.0)
}

/// Largest amount by which `A(t) ≤ B(t)` fails over the stored times of two runs.
pub fn order_violation(a: &Trajectory, b: &Trajectory) -> f64 {
    a.states
        .iter()
        .zip(&b.states)
        .flat_map(|(sa, sb)| {
            sa.u.iter()
                .zip(&sb.u)
                .chain(sa.v.iter().zip(&sb.v))
                .map(|(x, y)| x - y)
                .collect::<Vec<_>>()
        })
        .fold(0.0, f64::max)
}

/// Runs both flows and reports whether `A0 ≤ B0` stays ordered within `1e−8 + tol`.
pub fn check_order_preserving(a0: &State, b0: &State, cfg: &FlowConfig, domain: &DomainSpec) -> Result<bool> {
    a0.check(domain)?;
    b0.check(domain)?;
    if !a0.le(b0, 0.0) {
        return Err(Error::InvalidInit("initial states are not ordered".into()));
    }
    let a = run_flow(a0, cfg, domain)?;
    let b = run_flow(b0, cfg, domain)?;
    Ok(order_violation(&a, &b) <= 1e-8 + cfg.tol)
}

/// Discrepancies between a PDE run and a reference trajectory at the PDE's times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub times: Vec<f64>,
    pub linf_u: Vec<f64>,
    pub l2_u: Vec<f64>,
    pub edge_err: Vec<[f64; 2]>,
    pub gap_err: Vec<f64>,
    pub max_linf_u: f64,
    pub max_l2_u: f64,
    pub max_edge_err: f64,
    pub max_gap_err: f64,
}

fn lerp(a: &[f64], b: &[f64], s: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + s * (y - x)).collect()
}

/// Compares `pde` against `exact`, interpolating the latter linearly in time.
pub fn compare_exact(pde: &Trajectory, exact: &Trajectory) -> Result<ErrorReport> {
    if pde.domain != exact.domain {
        return Err(Error::GridMismatch("trajectories live on different grids".into()));
    }
    if pde.tau != exact.tau {
        return Err(Error::GridMismatch(format!("tau {} vs {}", pde.tau, exact.tau)));
    }
    if exact.is_empty() || pde.is_empty() {
        return Err(Error::GridMismatch("empty trajectory".into()));
    }
    let t_max = exact.final_time();
    let slack = 1e-9 * t_max.max(1.0);
    let masses = pde.domain.masses();
    let mut rep = ErrorReport {
        times: Vec::new(),
        linf_u: Vec::new(),
        l2_u: Vec::new(),
        edge_err: Vec::new(),
        gap_err: Vec::new(),
        max_linf_u: 0.0,
        max_l2_u: 0.0,
        max_edge_err: 0.0,
        max_gap_err: 0.0,
    };
    for (k, &t) in pde.times.iter().enumerate() {
        if t > t_max + slack {
            return Err(Error::GridMismatch(format!("reference ends at {t_max}, run reaches {t}")));
        }
        let j = exact.times.partition_point(|&s| s <= t).clamp(1, exact.len().max(2) - 1).min(exact.len() - 1);
        let (u, edges, gap) = if exact.len() == 1 {
            (exact.states[0].u.clone(), exact.edges[0].to_vec(), exact.gap[0].clone())
        } else {
            let (t0, t1) = (exact.times[j - 1], exact.times[j]);
            let s = if t1 > t0 { ((t - t0) / (t1 - t0)).clamp(0.0, 1.0) } else { 0.0 };
            (
                lerp(&exact.states[j - 1].u, &exact.states[j].u, s),
                lerp(&exact.edges[j - 1], &exact.edges[j], s),
                lerp(&exact.gap[j - 1], &exact.gap[j], s),
            )
        };
        let diff: Vec<f64> = pde.states[k].u.iter().zip(&u).map(|(a, b)| a - b).collect();
        let linf = diff.iter().fold(0.0, |m: f64, d| m.max(d.abs()));
        let l2 = diff.iter().zip(&masses).map(|(d, m)| m * d * d).sum::<f64>().sqrt();
        let ee = [(pde.edges[k][0] - edges[0]).abs(), (pde.edges[k][1] - edges[1]).abs()];
        let ge = pde.gap[k].iter().zip(&gap).fold(0.0, |m: f64, (a, b)| m.max((a - b).abs()));
        rep.max_linf_u = rep.max_linf_u.max(linf);
        rep.max_l2_u = rep.max_l2_u.max(l2);
        rep.max_edge_err = rep.max_edge_err.max(ee[0].max(ee[1]));
        rep.max_gap_err = rep.max_gap_err.max(ge);
        rep.times.push(t);
        rep.linf_u.push(linf);
        rep.l2_u.push(l2);
        rep.edge_err.push(ee);
        rep.gap_err.push(ge);
    }
    Ok(rep)
}

/// `t, a, b, h_l, h_r, Linf_err` with the PDE's facet data.
pub fn compare_csv(pde: &Trajectory, report: &ErrorReport) -> String {
    let mut out = String::from("t,a,b,h_l,h_r,Linf_err\n");
    for k in 0..report.times.len() {
        push_row(
            &mut out,
            &[
                report.times[k],
                pde.edges[k][0],
                pde.edges[k][1],
                pde.heights[k][0],
                pde.heights[k][1],
                report.linf_u[k],
            ],
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::Profile;
    use approx::assert_abs_diff_eq;

    /// Brute-force reference: coordinate-free projected subgradient is too slow to be exact, so
    /// compare against the objective of many perturbations instead.
    fn chain_objective(ch: &Chain, x: &[f64]) -> f64 {
        let q: f64 = (0..x.len()).map(|k| 0.5 * ch.a[k] * (x[k] - ch.y[k]).powi(2)).sum();
        q + (0..x.len() - 1).map(|k| ch.c[k] * (x[k + 1] - x[k]).abs()).sum::<f64>()
    }

    #[test]
    fn chain_dp_is_optimal() {
        let ch = Chain {
            a: vec![1.0, 2.0, 0.5, 1.0, 3.0],
            y: vec![0.0, 1.0, -1.0, 2.0, 0.3],
            c: vec![0.3, 0.7, 0.2, 0.4],
        };
        let x = chain_tv(&ch);
        let (_, viol) = chain_kkt(&ch, &x);
        assert!(viol < 1e-14);
        let f = chain_objective(&ch, &x);
        for k in 0..5 {
            for d in [-1e-4, 1e-4] {
                let mut p = x.clone();
                p[k] += d;
                assert!(chain_objective(&ch, &p) >= f);
            }
        }
        // large coupling: everything collapses to the weighted mean
        let big = Chain { c: vec![100.0; 4], ..ch };
        let x = chain_tv(&big);
        let mean = big.a.iter().zip(&big.y).map(|(a, y)| a * y).sum::<f64>() / big.a.iter().sum::<f64>();
        for xi in x {
            assert_abs_diff_eq!(xi, mean, epsilon = 1e-14);
        }
    }

    #[test]
    fn constant_state_is_fixed() {
        let d = DomainSpec::annulus(0.5, 2.0, 50).unwrap();
        let s = State::constant(&d, 0.7);
        let st = step_implicit(&s, &FlowConfig::default(), &d).unwrap();
        assert!(st.state.u.iter().chain(&st.state.v).all(|x| (x - 0.7).abs() <= 1e-14));
        let c = FlowConfig { eps: 0.1, ..FlowConfig::default() };
        let st = step_implicit(&s, &c, &d).unwrap();
        assert!(st.state.u.iter().all(|x| (x - 0.7).abs() < 1e-12));
    }

    #[test]
    fn one_step_facet_velocities() {
        let d = DomainSpec::interval(1.0, 401).unwrap();
        let u0 = Profile::ClampedRamp {
            slope: 1.0,
            intercept: 0.0,
            lo: None,
            hi: Some(0.5),
        };
        let s = State::with_matched_trace(&d, u0.sample(&d));
        let cfg = FlowConfig::default();
        let st = step_implicit(&s, &cfg, &d).unwrap();
        let tol = 5.0 * 1e-6 + 2.0 * d.h();
        assert_abs_diff_eq!(st.state.u[400] - 0.5, -2.0 / 3.0 * 1e-3, epsilon = tol);
        assert_abs_diff_eq!(st.state.u[0], 1e-3, epsilon = tol);
        assert!(st.flux.iter().all(|z| z.abs() <= 1.0));
    }

    #[test]
    fn regularized_step_decreases_energy() {
        let d = DomainSpec::interval(1.0, 101).unwrap();
        let u: Vec<f64> = d.nodes().iter().map(|x| x.min(0.5)).collect();
        let s = State::with_matched_trace(&d, u);
        let cfg = FlowConfig {
            eps: 0.05,
            t_end: 0.02,
            tol: 1e-10,
            ..FlowConfig::default()
        };
        let (tr, diag) = run_flow_diagnosed(&s, &cfg, &d).unwrap();
        assert!(tr.max_energy_increase() <= 0.0);
        assert!(diag.max_residual <= 1e-10);
        assert!(tr.gap.iter().flatten().all(|g| *g == 0.0));
    }

    #[test]
    fn flat_run_is_flat() {
        let d = DomainSpec::ball(2.0, 40).unwrap();
        let s = State::constant(&d, -1.0);
        let cfg = FlowConfig {
            dt: 0.01,
            t_end: 0.1,
            ..FlowConfig::default()
        };
        let tr = run_flow(&s, &cfg, &d).unwrap();
        assert!(tr.energy.iter().all(|e| *e == 0.0));
        assert!(tr.dissipation.iter().all(|e| *e == 0.0));
        assert_eq!(tr.len(), 11);
    }

    #[test]
    fn compare_identical_is_zero_and_mismatch_errors() {
        let d = DomainSpec::interval(1.0, 41).unwrap();
        let u: Vec<f64> = d.nodes().iter().map(|x| x.min(0.5)).collect();
        let s = State::with_matched_trace(&d, u);
        let cfg = FlowConfig {
            dt: 0.01,
            t_end: 0.05,
            ..FlowConfig::default()
        };
        let tr = run_flow(&s, &cfg, &d).unwrap();
        let rep = compare_exact(&tr, &tr).unwrap();
        assert_eq!(rep.max_linf_u, 0.0);
        assert_eq!(rep.max_edge_err, 0.0);
        let csv = compare_csv(&tr, &rep);
        assert!(csv.starts_with("t,a,b,h_l,h_r,Linf_err\n"));
        let other = Trajectory::new(DomainSpec::interval(1.0, 42).unwrap(), 1.0);
        assert!(matches!(compare_exact(&tr, &other), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn edge_extraction() {
        let d = DomainSpec::interval(1.0, 11).unwrap();
        let u: Vec<f64> = d.nodes().iter().map(|x| x.clamp(0.25, 0.65)).collect();
        let [a, b] = extract_edges(&u, &d, 1e-9);
        assert_abs_diff_eq!(a, 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(b, 0.65, epsilon = 1e-12);
        let flat = vec![1.0; 11];
        assert_eq!(extract_edges(&flat, &d, 1e-9), [1.0, 0.0]);
    }
}
