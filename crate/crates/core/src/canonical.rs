//! The minimal section of `∂E` for monotone radial states.
//!
//! Outside facets the field is the unit field `w = χ`. On each facet `w` minimizes
//! `∫_F |div z|² + (1/τ) ∫_{Γ_F} [z·ν]²` among admissible fields, which is a small box
//! constrained quadratic program in the nodal values of `w`.

use serde::{Deserialize, Serialize};

use crate::cahn_hoffman::Trace;
use crate::error::{Error, Result};
use crate::field::RadialField;
use crate::geometry::{section, volume, Chi, DomainSpec, EdgeKind, End, FacetSpec};
use crate::qp::TridiagQp;
use crate::state::State;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectionOptions {
    /// Cells per facet when the facet is given by its endpoints.
    pub cells: usize,
    pub tol: f64,
    pub max_iter: usize,
    /// Edges with `|Δu| / h < grad_tol` belong to a facet.
    pub grad_tol: f64,
    /// `|γu − v| ≤ trace_tol · max(1, max|u|)` counts as a matched trace.
    pub trace_tol: f64,
}

impl Default for SectionOptions {
    fn default() -> Self {
        SectionOptions {
            cells: 200,
            tol: 1e-12,
            max_iter: 500,
            grad_tol: 1e-7,
            trace_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FacetSection {
    pub facet: FacetSpec,
    pub field: RadialField,
    /// Mean of `div z` over the facet.
    pub lambda: f64,
    /// `max div z − min div z` over the cells of the facet; zero for a calibrable facet.
    pub div_spread: f64,
    pub mu_lo: Option<f64>,
    pub mu_hi: Option<f64>,
    pub objective: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CanonicalSection {
    pub chi: Chi,
    pub facets: Vec<FacetSection>,
    /// `[z·ν]` per Γ component, in the order of [`DomainSpec::gamma_nodes`].
    pub gamma_mu: Vec<f64>,
    /// The assembled field on the whole domain.
    pub field: RadialField,
}

impl CanonicalSection {
    /// `(u_t, v_t)`: `div z` on the grid nodes and `−[z·ν]/τ` on Γ.
    pub fn velocity(&self, domain: &DomainSpec, tau: f64) -> State {
        let chi = self.chi.value();
        let u = domain
            .nodes()
            .iter()
            .map(|&r| {
                match self.facets.iter().find(|f| r >= f.facet.inner - 1e-12 && r <= f.facet.outer + 1e-12) {
                    Some(f) => f.lambda,
                    None if domain.dim() == 1 => 0.0,
                    None => chi / r,
                }
            })
            .collect();
        let v = self.gamma_mu.iter().map(|m| -m / tau).collect();
        State::new(u, v)
    }
}

/// Minimal section for a monotone state with explicitly given facets. `traces` lists the
/// relation between `γu` and `v` per Γ component.
pub fn minimal_section_radial(
    domain: &DomainSpec,
    facets: &[FacetSpec],
    traces: &[Trace],
    tau: f64,
    opts: &SectionOptions,
) -> Result<CanonicalSection> {
    let chi = facets.first().map(|f| f.chi).unwrap_or(Chi::Plus);
    let grids: Vec<Vec<f64>> = facets
        .iter()
        .map(|f| {
            let m = opts.cells.max(2);
            (0..=m).map(|k| f.inner + (f.outer - f.inner) * k as f64 / m as f64).collect()
        })
        .collect();
    assemble(domain, facets, &grids, chi, traces, tau, opts)
}

/// Minimal section of a grid state; facets are the maximal runs of flat edges.
pub fn minimal_section_state(state: &State, domain: &DomainSpec, tau: f64, opts: &SectionOptions) -> Result<CanonicalSection> {
    state.check(domain)?;
    let (chi, runs) = detect_facets(&state.u, domain, opts.grad_tol)?;
    let nodes = domain.nodes();
    let facets: Vec<FacetSpec> = runs.iter().map(|&(i, j)| FacetSpec::new(nodes[i], nodes[j], chi)).collect();
    let grids: Vec<Vec<f64>> = runs.iter().map(|&(i, j)| nodes[i..=j].to_vec()).collect();
    let scale = state.u.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let traces: Vec<Trace> = state
        .gap(domain)
        .iter()
        .map(|g| {
            if g.abs() <= opts.trace_tol * scale {
                Trace::Matched
            } else {
                Trace::Gap { value: -g }
            }
        })
        .collect();
    assemble(domain, &facets, &grids, chi, &traces, tau, opts)
}

/// One-dimensional minimal section with the boundary values `z(0)` and `z(L)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Section1d {
    pub section: CanonicalSection,
    pub z_lo: f64,
    pub z_hi: f64,
}

pub fn minimal_section_1d(state: &State, domain: &DomainSpec, tau: f64, opts: &SectionOptions) -> Result<Section1d> {
    if domain.dim() != 1 {
        return Err(Error::InvalidGeometry("minimal_section_1d needs an interval".into()));
    }
    let section = minimal_section_state(state, domain, tau, opts)?;
    let z_lo = section.field.w(domain.lo());
    let z_hi = section.field.w(domain.hi());
    Ok(Section1d { section, z_lo, z_hi })
}

/// Orientation and facet node ranges `(i, j)`, `i < j`, of a grid profile.
pub fn detect_facets(u: &[f64], domain: &DomainSpec, grad_tol: f64) -> Result<(Chi, Vec<(usize, usize)>)> {
    let h = domain.h();
    let mut chi: Option<Chi> = None;
    let mut runs = Vec::new();
    let mut start: Option<usize> = None;
    for i in 0..u.len() - 1 {
        let d = u[i + 1] - u[i];
        if d.abs() / h < grad_tol {
            start.get_or_insert(i);
            continue;
        }
        if let Some(s) = start.take() {
            runs.push((s, i));
        }
        let c = Chi::from_sign(d).expect("nonzero difference");
        match chi {
            None => chi = Some(c),
            Some(prev) if prev != c => {
                return Err(Error::NonMonotone(format!(
                    "u changes direction at r = {}",
                    domain.nodes()[i]
                )))
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        runs.push((s, u.len() - 1));
    }
    Ok((chi.unwrap_or(Chi::Plus), runs))
}

fn assemble(
    domain: &DomainSpec,
    facets: &[FacetSpec],
    grids: &[Vec<f64>],
    chi: Chi,
    traces: &[Trace],
    tau: f64,
    opts: &SectionOptions,
) -> Result<CanonicalSection> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::InvalidParam(format!("tau must be > 0, got {tau}")));
    }
    let gnodes = domain.gamma_nodes();
    if traces.len() != gnodes.len() {
        return Err(Error::DimensionMismatch {
            what: "trace conditions",
            expected: gnodes.len(),
            got: traces.len(),
        });
    }
    for f in facets {
        f.validate(domain)?;
        if f.chi != chi {
            return Err(Error::NonMonotone("facets with opposite orientations".into()));
        }
    }
    for w in facets.windows(2) {
        if w[1].inner <= w[0].outer {
            return Err(Error::InvalidFacet("facets must be disjoint and sorted".into()));
        }
    }
    let trace_at = |end: End| {
        gnodes
            .iter()
            .zip(traces)
            .find(|(g, _)| g.end == end)
            .map(|(_, t)| *t)
            .unwrap_or(Trace::Matched)
    };
    let mut sections = Vec::with_capacity(facets.len());
    for (f, grid) in facets.iter().zip(grids) {
        sections.push(solve_one(domain, f, grid, trace_at(End::Lo), trace_at(End::Hi), tau, opts)?);
    }
    let x = chi.value();
    let gamma_mu = gnodes
        .iter()
        .map(|g| {
            let own = sections.iter().find_map(|s| match g.end {
                End::Lo if s.facet.edge_kind(domain, End::Lo) == EdgeKind::Gamma => s.mu_lo,
                End::Hi if s.facet.edge_kind(domain, End::Hi) == EdgeKind::Gamma => s.mu_hi,
                _ => None,
            });
            // the unit field w = χ of the bulk
            own.unwrap_or(g.end.normal() * x)
        })
        .collect();
    let mut nodes = Vec::new();
    let mut w = Vec::new();
    let mut k = 0;
    for &r in domain.nodes() {
        while k < sections.len() && sections[k].facet.outer < r {
            push_field(&mut nodes, &mut w, &sections[k].field);
            k += 1;
        }
        if k < sections.len() && r >= sections[k].facet.inner {
            continue;
        }
        if nodes.last().is_none_or(|&l| r > l) {
            nodes.push(r);
            w.push(x);
        }
    }
    for s in &sections[k..] {
        push_field(&mut nodes, &mut w, &s.field);
    }
    let field = RadialField::sampled(domain.dim(), nodes, w)?;
    Ok(CanonicalSection {
        chi,
        facets: sections,
        gamma_mu,
        field,
    })
}

fn push_field(nodes: &mut Vec<f64>, w: &mut Vec<f64>, f: &RadialField) {
    if let crate::field::FieldRepr::Sampled { nodes: fr, w: fw } = &f.repr {
        for (&r, &v) in fr.iter().zip(fw) {
            if let Some(&last) = nodes.last() {
                if r <= last {
                    // shared edge node: the facet value wins
                    if r == last {
                        *w.last_mut().unwrap() = v;
                    }
                    continue;
                }
            }
            nodes.push(r);
            w.push(v);
        }
    }
}

fn solve_one(
    domain: &DomainSpec,
    facet: &FacetSpec,
    grid: &[f64],
    trace_lo: Trace,
    trace_hi: Trace,
    tau: f64,
    opts: &SectionOptions,
) -> Result<FacetSection> {
    let dim = domain.dim();
    let m = grid.len();
    let s: Vec<f64> = grid.iter().map(|&r| section(dim, r)).collect();
    let mut diag = vec![0.0; m];
    let mut off = vec![0.0; m - 1];
    for k in 0..m - 1 {
        let v = volume(dim, grid[k], grid[k + 1]);
        diag[k] += 2.0 * s[k] * s[k] / v;
        diag[k + 1] += 2.0 * s[k + 1] * s[k + 1] / v;
        off[k] = -2.0 * s[k] * s[k + 1] / v;
    }
    let mut lo = vec![-1.0; m];
    let mut hi = vec![1.0; m];
    let chi = facet.chi.value();
    for (side, idx, trace) in [(End::Lo, 0, trace_lo), (End::Hi, m - 1, trace_hi)] {
        let fixed = match facet.edge_kind(domain, side) {
            EdgeKind::Interior => Some(chi),
            EdgeKind::Neumann | EdgeKind::Center => Some(0.0),
            EdgeKind::Gamma => match trace {
                Trace::Matched => {
                    diag[idx] += 2.0 * s[idx] / tau;
                    None
                }
                // [z·ν] = −sign(γu − v) and w = ν [z·ν]
                Trace::Gap { value } => Some(side.normal() * -value.signum()),
            },
        };
        if let Some(v) = fixed {
            lo[idx] = v;
            hi[idx] = v;
        }
    }
    let qp = TridiagQp {
        diag,
        off,
        q: vec![0.0; m],
        lo,
        hi,
    };
    let x0: Vec<f64> = (0..m).map(|k| chi.clamp(qp.lo[k], qp.hi[k])).collect();
    let sol = qp.solve(Some(&x0), opts.tol, opts.max_iter)?;
    let field = RadialField::sampled(dim, grid.to_vec(), sol.x.clone())?;
    let divs: Vec<f64> = field.cell_divergence().iter().map(|c| c.2).collect();
    let spread = divs.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - divs.iter().cloned().fold(f64::INFINITY, f64::min);
    let mu = |side: End, idx: usize| {
        (facet.edge_kind(domain, side) == EdgeKind::Gamma).then(|| side.normal() * sol.x[idx])
    };
    Ok(FacetSection {
        facet: *facet,
        lambda: field.mean_divergence(),
        div_spread: spread,
        mu_lo: mu(End::Lo, 0),
        mu_hi: mu(End::Hi, m - 1),
        objective: sol.objective,
        iterations: sol.iterations,
        field,
    })
}
