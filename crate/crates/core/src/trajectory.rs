//! Time series produced by the exact trackers and the PDE solver.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::geometry::{DomainSpec, End};
use crate::state::State;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    DetachmentOnset,
    FacetCreated,
    FacetCollision,
    Reattachment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t: f64,
    pub kind: EventKind,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub end: Option<End>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub domain: DomainSpec,
    pub tau: f64,
    pub times: Vec<f64>,
    pub states: Vec<State>,
    /// `[a, b]`: inner edge of the facet at the low end and of the facet at the high end.
    pub edges: Vec<[f64; 2]>,
    /// Heights of those two facets.
    pub heights: Vec<[f64; 2]>,
    /// `v − γu` per Γ component.
    pub gap: Vec<Vec<f64>>,
    pub energy: Vec<f64>,
    /// `‖U(t_k) − U(t_{k−1})‖²_τ / Δt²`; zero at the first time.
    pub dissipation: Vec<f64>,
    pub events: Vec<Event>,
    /// The boundary regime was re-evaluated every step rather than fixed up front.
    pub regime_switching: bool,
}

impl Trajectory {
    pub fn new(domain: DomainSpec, tau: f64) -> Self {
        Trajectory {
            domain,
            tau,
            times: Vec::new(),
            states: Vec::new(),
            edges: Vec::new(),
            heights: Vec::new(),
            gap: Vec::new(),
            energy: Vec::new(),
            dissipation: Vec::new(),
            events: Vec::new(),
            regime_switching: false,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_time(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }

    /// Largest per-step energy increase (negative when the energy strictly decreases).
    pub fn max_energy_increase(&self) -> f64 {
        self.energy
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Plot-ready table: time, facet edges and heights, gaps, energy and dissipation.
    pub fn to_csv(&self) -> String {
        let gnodes = self.domain.gamma_nodes();
        let mut out = String::from("t,a,b,h_l,h_r");
        for g in &gnodes {
            let _ = write!(out, ",gap_{}", end_name(g.end));
        }
        out.push_str(",energy,dissipation\n");
        for k in 0..self.len() {
            let mut row = vec![
                self.times[k],
                self.edges[k][0],
                self.edges[k][1],
                self.heights[k][0],
                self.heights[k][1],
            ];
            row.extend(&self.gap[k]);
            row.push(self.energy[k]);
            row.push(self.dissipation[k]);
            push_row(&mut out, &row);
        }
        out
    }

    /// Grid values of `u` at every stored time, one row per time.
    pub fn profiles_csv(&self) -> String {
        let mut out = String::from("t");
        for r in self.domain.nodes() {
            let _ = write!(out, ",{}", fmt_f64(*r));
        }
        out.push('\n');
        for (t, s) in self.times.iter().zip(&self.states) {
            let mut row = vec![*t];
            row.extend(&s.u);
            push_row(&mut out, &row);
        }
        out
    }
}

pub(crate) fn end_name(end: End) -> &'static str {
    match end {
        End::Lo => "lo",
        End::Hi => "hi",
    }
}

/// Scientific notation with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

pub(crate) fn push_row(out: &mut String, row: &[f64]) {
    for (i, x) in row.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&fmt_f64(*x));
    }
    out.push('\n');
}

/// Scans a trajectory for boundary-layer detachment and facet collisions.
///
/// Detachment is reported at the first time `|gap| > tol` provided `|gap|` keeps growing over
/// the next three steps; a collision when the two facet edges come within one grid cell.
pub fn detect_events(traj: &Trajectory, tol: f64) -> Vec<Event> {
    let mut events = Vec::new();
    let gnodes = traj.domain.gamma_nodes();
    for (j, g) in gnodes.iter().enumerate() {
        let series: Vec<f64> = traj.gap.iter().map(|row| row[j].abs()).collect();
        if let Some(k) = series.iter().position(|&x| x > tol) {
            let grows = (k..(k + 3).min(series.len() - 1)).all(|i| series[i + 1] > series[i]);
            let enough = k + 3 < series.len();
            if grows && enough {
                events.push(Event {
                    t: traj.times[k],
                    kind: EventKind::DetachmentOnset,
                    end: Some(g.end),
                });
            }
        }
    }
    let h = traj.domain.h();
    if let Some(k) = traj.edges.iter().position(|e| e[1] - e[0] <= h) {
        events.push(Event {
            t: traj.times[k],
            kind: EventKind::FacetCollision,
            end: None,
        });
    }
    events.sort_by(|a, b| a.t.total_cmp(&b.t));
    events
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_is_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 123456789.12345679] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_f64(0.5), "5.0000000000000000e-1");
    }

    #[test]
    fn events_from_series() {
        let d = DomainSpec::annulus(0.5, 4.0, 16).unwrap();
        let mut t = Trajectory::new(d.clone(), 1.0);
        for k in 0..6 {
            t.times.push(k as f64 * 0.1);
            t.edges.push([0.5, 3.0]);
            t.gap.push(vec![-(k as f64) * 0.01]);
        }
        let ev = detect_events(&t, 1e-3);
        assert_eq!(ev.len(), 1);
        assert_eq!(ev[0].kind, EventKind::DetachmentOnset);
        assert!((ev[0].t - 0.1).abs() < 1e-15);
        let mut flat = t.clone();
        flat.gap.iter_mut().for_each(|g| g[0] = 0.0);
        assert!(detect_events(&flat, 1e-3).is_empty());
        flat.edges[4] = [1.0, 1.0 + 0.5 * d.h()];
        let ev = detect_events(&flat, 1e-3);
        assert_eq!(ev[0].kind, EventKind::FacetCollision);
    }
}
