//! Semi-explicit facet dynamics for monotone radial profiles.
//!
//! Between the two end facets the profile is strictly monotone and moves with the unit
//! field, `u_t = div(χ e_r) = χ (N − 1)/r`. Each end facet is flat at height `h` and spans
//! from the domain end to the point where the moving bulk reaches `h`. The height follows
//! `h' = λ(edge(h, t))` with `λ` the constant divergence of the facet's Cahn–Hoffman field,
//! integrated by the implicit midpoint rule with bisection. At Γ the boundary value either
//! sticks to the facet (`v = h`) or, once the flux would have to exceed one, detaches and
//! moves with `v' = −μ/τ` until the gap closes again.

use crate::cahn_hoffman::{solve_facet, Side, Trace, BORDER_TOL};
use crate::error::{Error, Result};
use crate::geometry::{section, DomainKind, DomainSpec, EdgeKind, End, EndKind};
use crate::profile::Profile;
use crate::state::{energy_unchecked, inner_tau_unchecked, FlowConfig, State};
use crate::trajectory::{Event, EventKind, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq)]
enum Mode {
    Coherent,
    /// Flux through Γ pinned at `μ = ±1`.
    Detached { mu: f64 },
}

#[derive(Debug, Clone, Copy)]
struct EndFacet {
    edge: f64,
    h: f64,
    v: Option<f64>,
    mode: Mode,
}

struct Tracker<'a> {
    domain: &'a DomainSpec,
    u0: &'a Profile,
    chi: f64,
    dim: usize,
    tau: f64,
    kinds: [EndKind; 2],
}

impl Tracker<'_> {
    fn bulk(&self, r: f64, t: f64) -> f64 {
        if self.dim == 1 {
            self.u0.value(r)
        } else {
            self.u0.value(r) + self.chi * t / r
        }
    }

    /// Root of the increasing map `r ↦ χ (bulk(r, t) − h)` on `[x0, x1]`, clamped to the bracket.
    fn edge(&self, h: f64, t: f64, x0: f64, x1: f64) -> f64 {
        let f = |r: f64| self.chi * (self.bulk(r, t) - h);
        if f(x0) >= 0.0 {
            return x0;
        }
        if f(x1) <= 0.0 {
            return x1;
        }
        let (mut a, mut b) = (x0, x1);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            if f(m) < 0.0 {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    }

    fn side(&self, end: End, mode: Mode) -> Side {
        let kind = match self.kinds[end as usize] {
            EndKind::Gamma => EdgeKind::Gamma,
            EndKind::Neumann => EdgeKind::Neumann,
            EndKind::Center => EdgeKind::Center,
        };
        let trace = match mode {
            Mode::Coherent => Trace::Matched,
            Mode::Detached { mu } => Trace::Gap { value: -mu },
        };
        Side { kind, trace }
    }

    fn interior() -> Side {
        Side {
            kind: EdgeKind::Interior,
            trace: Trace::Matched,
        }
    }

    /// Facet velocity and, for a Γ end in the coherent mode, the flux it would need.
    fn rate(&self, end: End, edge: f64, mode: Mode) -> (f64, Option<f64>, bool) {
        let sol = match end {
            End::Lo => solve_facet(
                self.dim,
                self.domain.lo(),
                edge,
                self.side(End::Lo, mode),
                Self::interior(),
                self.chi,
                self.tau,
            ),
            End::Hi => solve_facet(
                self.dim,
                edge,
                self.domain.hi(),
                Self::interior(),
                self.side(End::Hi, mode),
                self.chi,
                self.tau,
            ),
        };
        let mu = match end {
            End::Lo => sol.mu_lo,
            End::Hi => sol.mu_hi,
        };
        (sol.lambda, mu, sol.pinned)
    }

    /// Does a coherent facet at this end have to let go of its boundary value?
    fn must_detach(&self, end: End, edge: f64) -> Option<f64> {
        if self.kinds[end as usize] != EndKind::Gamma {
            return None;
        }
        if let (DomainKind::Annulus { r0, .. }, End::Lo) = (self.domain.kind(), end) {
            // concave Γ: the layer detaches iff ρ + r0 < 2τ, including the zero-width limit
            return (edge + r0 < 2.0 * self.tau - BORDER_TOL).then_some(-self.chi);
        }
        let (_, mu, pinned) = self.rate(end, edge, Mode::Coherent);
        if pinned {
            mu
        } else {
            None
        }
    }

    /// Implicit midpoint step for the height of one facet.
    fn advance(&self, end: End, f: &EndFacet, t: f64, dt: f64, bracket: (f64, f64)) -> Result<f64> {
        let tm = t + 0.5 * dt;
        let rate = |m: f64| self.rate(end, self.edge(m, tm, bracket.0, bracket.1), f.mode).0;
        let h = f.h;
        let g = |x: f64| x - h - dt * rate(0.5 * (h + x));
        let g0 = g(h);
        if g0 == 0.0 {
            return Ok(h);
        }
        let dir = if g0 < 0.0 { 1.0 } else { -1.0 };
        let r0 = rate(h);
        let mut step = if r0.is_finite() { (dt * r0.abs()).max(1e-14) } else { dt };
        let mut far = h + dir * step;
        let mut found = false;
        for _ in 0..200 {
            if g(far) * g0 < 0.0 || g(far) == 0.0 {
                found = true;
                break;
            }
            step *= 2.0;
            far = h + dir * step;
        }
        if !found {
            return Err(Error::StepTooLarge(format!("no bracket for the facet height at t = {t}")));
        }
        let (mut a, mut b) = if dir > 0.0 { (h, far) } else { (far, h) };
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            if g(m) < 0.0 {
                a = m;
            } else {
                b = m;
            }
        }
        Ok(0.5 * (a + b))
    }

    fn sample(&self, lo: &EndFacet, hi: &EndFacet, t: f64) -> State {
        let u = self
            .domain
            .nodes()
            .iter()
            .map(|&r| {
                if r <= lo.edge {
                    lo.h
                } else if r >= hi.edge {
                    hi.h
                } else {
                    self.bulk(r, t)
                }
            })
            .collect();
        let v = self
            .domain
            .gamma_nodes()
            .iter()
            .map(|g| match g.end {
                End::Lo => lo.v.unwrap_or(lo.h),
                End::Hi => hi.v.unwrap_or(hi.h),
            })
            .collect();
        State::new(u, v)
    }

    /// Total variation of the continuous profile plus the boundary mismatch.
    fn energy(&self, lo: &EndFacet, hi: &EndFacet, t: f64) -> f64 {
        let (a, b) = (lo.edge, hi.edge);
        let (ua, ub) = (self.bulk(a, t), self.bulk(b, t));
        let jumps = section(self.dim, a) * (lo.h - ua).abs() + section(self.dim, b) * (hi.h - ub).abs();
        let tv = if b <= a {
            0.0
        } else if self.dim == 1 {
            (ub - ua).abs()
        } else {
            // ∫ 2πr |∂_r u| with ∂_r u of sign χ, integrated by parts
            let inner = self.u0.integral(a, b) + self.chi * t * (b / a).ln();
            2.0 * std::f64::consts::PI * self.chi * (b * ub - a * ua - inner)
        };
        let mismatch: f64 = [(lo, self.domain.lo()), (hi, self.domain.hi())]
            .iter()
            .filter_map(|(f, r)| f.v.map(|v| section(self.dim, *r) * (v - f.h).abs()))
            .sum();
        tv + jumps + mismatch
    }
}

/// Exact facet dynamics of a monotone profile on any supported domain.
pub fn evolve_exact(domain: &DomainSpec, u0: &Profile, cfg: &FlowConfig) -> Result<Trajectory> {
    cfg.validate()?;
    u0.validate()?;
    let (lo, hi) = (domain.lo(), domain.hi());
    let mut traj = Trajectory::new(domain.clone(), cfg.tau);
    let kinds = [domain.end_kind(End::Lo), domain.end_kind(End::Hi)];
    let (p, q) = u0.end_plateaus(lo, hi);
    let chi = match u0.chi_on(lo, hi) {
        Some(c) if p < q => c.value(),
        _ => return static_trajectory(domain, u0, cfg, traj),
    };
    check_monotone(domain, u0, chi)?;
    if kinds[0] == EndKind::Center && !(p > lo) {
        return Err(Error::InvalidInit(
            "a profile on a disc needs a flat core around the centre".into(),
        ));
    }
    let tr = Tracker {
        domain,
        u0,
        chi,
        dim: domain.dim(),
        tau: cfg.tau,
        kinds,
    };
    let gamma_v = |k: EndKind, h: f64| (k == EndKind::Gamma).then_some(h);
    let mut f_lo = EndFacet {
        edge: p,
        h: u0.value(lo),
        v: gamma_v(kinds[0], u0.value(lo)),
        mode: Mode::Coherent,
    };
    let mut f_hi = EndFacet {
        edge: q,
        h: u0.value(hi),
        v: gamma_v(kinds[1], u0.value(hi)),
        mode: Mode::Coherent,
    };
    traj.regime_switching = kinds.contains(&EndKind::Gamma);
    let grid_h = domain.h();
    let end_tol = 1e-12 * hi.abs().max(1.0);
    let mut t = 0.0;
    record(&tr, &mut traj, &f_lo, &f_hi, t, cfg.dt);
    let steps = step_count(cfg.t_end, cfg.dt);
    for k in 0..steps {
        let dt = if k + 1 == steps { cfg.t_end - t } else { cfg.dt };
        if dt <= 0.0 {
            break;
        }
        for (end, f) in [(End::Lo, &mut f_lo), (End::Hi, &mut f_hi)] {
            if f.mode == Mode::Coherent {
                if let Some(mu) = tr.must_detach(end, f.edge) {
                    f.mode = Mode::Detached { mu };
                    traj.events.push(Event {
                        t,
                        kind: EventKind::DetachmentOnset,
                        end: Some(end),
                    });
                }
            }
        }
        let bracket = (f_lo.edge, f_hi.edge);
        let h_lo = tr.advance(End::Lo, &f_lo, t, dt, bracket)?;
        let h_hi = tr.advance(End::Hi, &f_hi, t, dt, bracket)?;
        let t_new = t + dt;
        let a = tr.edge(h_lo, t_new, bracket.0, bracket.1);
        let b = tr.edge(h_hi, t_new, bracket.0, bracket.1);
        for (end, f, h, e, home) in [(End::Lo, &mut f_lo, h_lo, a, lo), (End::Hi, &mut f_hi, h_hi, b, hi)] {
            if (f.edge - home).abs() <= end_tol && (e - home).abs() > end_tol {
                traj.events.push(Event {
                    t,
                    kind: EventKind::FacetCreated,
                    end: Some(end),
                });
            }
            f.h = h;
            f.edge = e;
            match f.mode {
                Mode::Coherent => {
                    if f.v.is_some() {
                        f.v = Some(h);
                    }
                }
                Mode::Detached { mu } => {
                    let v = f.v.expect("detached ends carry a boundary value") - dt * mu / cfg.tau;
                    if (v - h) * mu <= 0.0 {
                        f.v = Some(h);
                        f.mode = Mode::Coherent;
                        traj.events.push(Event {
                            t: t_new,
                            kind: EventKind::Reattachment,
                            end: Some(end),
                        });
                    } else {
                        f.v = Some(v);
                    }
                }
            }
        }
        t = t_new;
        record(&tr, &mut traj, &f_lo, &f_hi, t, dt);
        if f_hi.edge - f_lo.edge <= grid_h {
            traj.events.push(Event {
                t,
                kind: EventKind::FacetCollision,
                end: None,
            });
            break;
        }
    }
    Ok(traj)
}

pub(crate) fn step_count(t_end: f64, dt: f64) -> usize {
    let n = t_end / dt;
    let r = n.round();
    if (n - r).abs() <= 1e-9 * n.max(1.0) {
        r as usize
    } else {
        n.ceil() as usize
    }
}

fn check_monotone(domain: &DomainSpec, u0: &Profile, chi: f64) -> Result<()> {
    let u = u0.sample(domain);
    if let Some(w) = u.windows(2).find(|w| chi * (w[1] - w[0]) < 0.0) {
        return Err(Error::NonMonotone(format!(
            "initial profile turns between values {} and {}",
            w[0], w[1]
        )));
    }
    Ok(())
}

fn record(tr: &Tracker, traj: &mut Trajectory, lo: &EndFacet, hi: &EndFacet, t: f64, dt: f64) {
    let state = tr.sample(lo, hi, t);
    let diss = match traj.states.last() {
        Some(prev) => {
            let d = State::new(
                state.u.iter().zip(&prev.u).map(|(a, b)| a - b).collect(),
                state.v.iter().zip(&prev.v).map(|(a, b)| a - b).collect(),
            );
            inner_tau_unchecked(&d, &d, tr.tau, tr.domain) / (dt * dt)
        }
        None => 0.0,
    };
    traj.times.push(t);
    traj.edges.push([lo.edge, hi.edge]);
    traj.heights.push([lo.h, hi.h]);
    traj.gap.push(state.gap(tr.domain));
    traj.energy.push(tr.energy(lo, hi, t));
    traj.dissipation.push(diss);
    traj.states.push(state);
}

fn static_trajectory(domain: &DomainSpec, u0: &Profile, cfg: &FlowConfig, mut traj: Trajectory) -> Result<Trajectory> {
    let state = State::with_matched_trace(domain, u0.sample(domain));
    let e = energy_unchecked(&state, domain);
    let steps = step_count(cfg.t_end, cfg.dt);
    for k in 0..=steps {
        let t = (k as f64 * cfg.dt).min(cfg.t_end);
        traj.times.push(t);
        traj.edges.push([domain.hi(), domain.lo()]);
        traj.heights.push([state.u[0], state.u[domain.n() - 1]]);
        traj.gap.push(state.gap(domain));
        traj.energy.push(e);
        traj.dissipation.push(0.0);
        traj.states.push(state.clone());
    }
    Ok(traj)
}

/// One-dimensional dynamics on `[0, L]` with Γ at both ends.
pub fn evolve_1d(u0: &Profile, length: f64, n: usize, cfg: &FlowConfig) -> Result<Trajectory> {
    let domain = DomainSpec::interval(length, n)?;
    evolve_exact(&domain, u0, cfg)
}

/// Disc of radius `R` with Γ the outer circle; the outer facet starts at `rho0`.
pub fn evolve_ball(radius: f64, rho0: f64, u0: &Profile, n: usize, cfg: &FlowConfig) -> Result<Trajectory> {
    let domain = DomainSpec::ball(radius, n)?;
    if !(rho0 > 0.0 && rho0 <= radius) {
        return Err(Error::InvalidInit(format!("need 0 < rho0 <= R, got rho0 = {rho0}, R = {radius}")));
    }
    let (_, q) = u0.end_plateaus(0.0, radius);
    if (q - rho0).abs() > 1e-9 * radius.max(1.0) {
        return Err(Error::InvalidInit(format!("profile's outer facet starts at {q}, not at rho0 = {rho0}")));
    }
    evolve_exact(&domain, u0, cfg)
}

/// Annulus `r0 < r < R` with Γ the inner circle; the inner facet ends at `rho0`.
pub fn evolve_annulus(r0: f64, radius: f64, rho0: f64, u0: &Profile, n: usize, cfg: &FlowConfig) -> Result<Trajectory> {
    let domain = DomainSpec::annulus(r0, radius, n)?;
    if !(rho0 >= r0 && rho0 < radius) {
        return Err(Error::InvalidInit(format!("need r0 <= rho0 < R, got r0 = {r0}, rho0 = {rho0}, R = {radius}")));
    }
    let (p, _) = u0.end_plateaus(r0, radius);
    if (p - rho0).abs() > 1e-9 * radius.max(1.0) {
        return Err(Error::InvalidInit(format!("profile's inner facet ends at {p}, not at rho0 = {rho0}")));
    }
    evolve_exact(&domain, u0, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::detect_events;
    use approx::assert_abs_diff_eq;

    fn cfg(dt: f64, t_end: f64) -> FlowConfig {
        FlowConfig {
            dt,
            t_end,
            ..FlowConfig::default()
        }
    }

    fn x_min_half() -> Profile {
        Profile::ClampedRamp {
            slope: 1.0,
            intercept: 0.0,
            lo: None,
            hi: Some(0.5),
        }
    }

    #[test]
    fn one_dimensional_heights_follow_closed_form() {
        let tr = evolve_1d(&x_min_half(), 1.0, 401, &cfg(1e-3, 0.2)).unwrap();
        assert_eq!(tr.events[0].kind, EventKind::FacetCreated);
        for (t, h) in tr.times.iter().zip(&tr.heights) {
            // (1 + h_l)² = 1 + 2t and (2 − h_r)² = 9/4 + 2t
            assert_abs_diff_eq!(h[0], (1.0 + 2.0 * t).sqrt() - 1.0, epsilon = 1e-7);
            assert_abs_diff_eq!(h[1], 2.0 - (2.25 + 2.0 * t).sqrt(), epsilon = 1e-7);
        }
        assert!(tr.gap.iter().flatten().all(|g| g.abs() < 1e-10));
        assert!(tr.max_energy_increase() < 1e-9);
        assert!(tr.edges.windows(2).all(|w| w[1][0] >= w[0][0] && w[1][1] <= w[0][1]));
    }

    #[test]
    fn one_dimensional_collision() {
        let tr = evolve_1d(&x_min_half(), 1.0, 401, &cfg(1e-3, 1.0)).unwrap();
        let last = tr.events.last().unwrap();
        assert_eq!(last.kind, EventKind::FacetCollision);
        // 3 = √(9/4 + 2T) + √(1 + 2T)
        let mut lo = 0.0_f64;
        let mut hi = 1.0_f64;
        for _ in 0..100 {
            let m = 0.5 * (lo + hi);
            if (2.25 + 2.0 * m).sqrt() + (1.0 + 2.0 * m).sqrt() < 3.0 {
                lo = m;
            } else {
                hi = m;
            }
        }
        assert!((last.t - lo).abs() < 0.01, "collision at {} vs {}", last.t, lo);
        let ev = detect_events(&tr, 1e-6);
        assert_eq!(ev.len(), 1);
        assert_eq!(ev[0].kind, EventKind::FacetCollision);
    }

    #[test]
    fn ball_edge_follows_its_ode() {
        let u0 = Profile::ClampedRamp {
            slope: 1.0,
            intercept: 0.0,
            lo: Some(0.2),
            hi: Some(1.0),
        };
        // the centre facet catches up near t = 0.17, so stop before that
        let tr = evolve_ball(2.0, 1.0, &u0, 201, &cfg(1e-3, 0.12)).unwrap();
        assert!(tr.events.iter().all(|e| e.kind != EventKind::FacetCollision));
        // ρ' (1 − t/ρ²) = −1/ρ − 2ρ/(R² − ρ² + 2R) with u0' = 1, by RK4 on a fine grid
        let rhs = |t: f64, r: f64| (-1.0 / r - 2.0 * r / (4.0 - r * r + 4.0)) / (1.0 - t / (r * r));
        let rhs = |t: f64, r: f64| -rhs(t, r);
        let (mut t, mut r) = (0.0, 1.0);
        let h = 1e-5;
        while t < 0.12 - 1e-12 {
            let k1 = rhs(t, r);
            let k2 = rhs(t + h / 2.0, r - h / 2.0 * k1);
            let k3 = rhs(t + h / 2.0, r - h / 2.0 * k2);
            let k4 = rhs(t + h, r - h * k3);
            r -= h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            t += h;
        }
        let last = tr.edges.last().unwrap()[1];
        assert_abs_diff_eq!(last, r, epsilon = 1e-5);
        let v0 = (tr.heights[1][1] - tr.heights[0][1]) / 1e-3;
        assert_abs_diff_eq!(v0, -2.0 / 7.0, epsilon = 1e-3);
        assert!(tr.gap.iter().flatten().all(|g| g.abs() < 1e-10));
        assert!(tr.max_energy_increase() < 1e-9);
        for w in tr.heights.windows(2) {
            assert!((w[1][1] - w[0][1]).abs() / 1e-3 < 1.0);
        }
    }

    #[test]
    fn annulus_detached_gap_rate() {
        let u0 = Profile::ClampedRamp {
            slope: 1.0,
            intercept: -1.0,
            lo: Some(0.0),
            hi: None,
        };
        let c = cfg(1e-3, 0.1);
        let tr = evolve_annulus(0.5, 4.0, 1.0, &u0, 401, &c).unwrap();
        assert_eq!(tr.events[0].kind, EventKind::DetachmentOnset);
        assert_eq!(tr.events[0].t, 0.0);
        let rate0 = (tr.gap[1][0] - tr.gap[0][0]) / 1e-3;
        assert_abs_diff_eq!(rate0, -1.0 / 3.0, epsilon = 2e-3);
        // gap rate matches 1 − λ(ρ(t)) along the run
        for k in 1..tr.len() {
            let rho = 0.5 * (tr.edges[k][0] + tr.edges[k - 1][0]);
            let lam = 2.0 / (rho + 0.5);
            let fd = (tr.gap[k][0] - tr.gap[k - 1][0]) / 1e-3;
            assert_abs_diff_eq!(fd, 1.0 - lam, epsilon = 2e-3);
        }
        assert!(tr.gap.windows(2).all(|w| w[1][0] < w[0][0]));
        assert!(tr.max_energy_increase() < 1e-9);
        let ev = detect_events(&tr, 1e-6);
        assert_eq!(ev[0].kind, EventKind::DetachmentOnset);
        assert!(ev[0].t <= 1e-3 + 1e-15);
    }

    #[test]
    fn annulus_coherent_run() {
        let u0 = Profile::ClampedRamp {
            slope: 1.0,
            intercept: -4.0,
            lo: Some(0.0),
            hi: None,
        };
        let tr = evolve_annulus(3.0, 6.0, 4.0, &u0, 301, &cfg(1e-3, 0.1)).unwrap();
        assert!(tr.events.iter().all(|e| e.kind != EventKind::DetachmentOnset));
        assert!(tr.gap.iter().flatten().all(|g| g.abs() < 1e-12));
        let v0 = (tr.heights[1][0] - tr.heights[0][0]) / 1e-3;
        assert_abs_diff_eq!(v0, 8.0 / 13.0, epsilon = 1e-3);
        assert!(detect_events(&tr, 1e-6).is_empty());
    }

    #[test]
    fn reattachment_when_facet_grows() {
        // ρ0 + r0 just below 2: detaches, the facet widens and the gap closes again
        let u0 = Profile::ClampedRamp {
            slope: 0.05,
            intercept: -0.05 * 1.2,
            lo: Some(0.0),
            hi: None,
        };
        let tr = evolve_annulus(0.7, 3.0, 1.2, &u0, 301, &cfg(1e-3, 2.0)).unwrap();
        let kinds: Vec<_> = tr.events.iter().map(|e| e.kind).collect();
        assert_eq!(kinds[0], EventKind::DetachmentOnset);
        assert!(kinds.contains(&EventKind::Reattachment));
    }

    #[test]
    fn antisymmetry_of_trajectories() {
        let u0 = x_min_half();
        let a = evolve_1d(&u0, 1.0, 101, &cfg(1e-3, 0.1)).unwrap();
        let b = evolve_1d(&u0.negated(), 1.0, 101, &cfg(1e-3, 0.1)).unwrap();
        for (sa, sb) in a.states.iter().zip(&b.states) {
            for (x, y) in sa.u.iter().zip(&sb.u) {
                assert_abs_diff_eq!(*x, -*y, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn invalid_inputs() {
        let u0 = x_min_half();
        assert!(matches!(
            evolve_annulus(1.2, 4.0, 0.9, &u0, 64, &FlowConfig::default()),
            Err(Error::InvalidInit(_))
        ));
        let cone = Profile::Ramp { slope: 1.0, intercept: 0.0 };
        assert!(matches!(
            evolve_ball(2.0, 2.0, &cone, 64, &FlowConfig::default()),
            Err(Error::InvalidInit(_))
        ));
        let flat = Profile::Constant { value: 0.3 };
        let tr = evolve_1d(&flat, 1.0, 64, &cfg(0.01, 0.1)).unwrap();
        assert!(tr.events.is_empty());
        assert_eq!(tr.energy[0], 0.0);
        assert_eq!(tr.states.last().unwrap().u[10], 0.3);
    }
}
