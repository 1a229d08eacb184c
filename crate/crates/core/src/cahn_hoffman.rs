//! Closed-form Cahn–Hoffman fields on radial facets, the functional `I_τ`, and the
//! calibrable / coherent / detached classification.
//!
//! Conventions: `χ = sign(u')` next to the facet, `λ = div z` on the facet, and
//! `μ = [z·ν]` on the part of Γ the facet touches. A facet touching Γ is coherent when
//! `τλ + μ = 0`, i.e. the boundary value moves with the facet.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::RadialField;
use crate::geometry::{section, volume, Chi, DomainKind, DomainSpec, EdgeKind, End, FacetSpec};

/// Ties `|ρ + r0 − 2τ| ≤ BORDER_TOL` count as the borderline case.
pub const BORDER_TOL: f64 = 1e-12;
/// Tolerance of the admissibility checks in [`verify_ch`].
pub const CH_TOL: f64 = 1e-9;

/// Minimizer of `aλ² + bμ²/τ` on the line `aλ = c + bμ`.
pub fn quad_min(a: f64, b: f64, c: f64, tau: f64) -> Result<(f64, f64)> {
    for (name, x) in [("a", a), ("b", b), ("tau", tau)] {
        if !(x.is_finite() && x > 0.0) {
            return Err(Error::InvalidParam(format!("{name} must be > 0, got {x}")));
        }
    }
    let lambda = c / (a + tau * b);
    Ok((lambda, -tau * lambda))
}

/// A closed-form field together with its facet velocity and boundary flux.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChField {
    pub field: RadialField,
    pub lambda: f64,
    pub mu: f64,
    /// `|w| ≤ 1` on the facet.
    pub feasible: bool,
}

fn check_tau(tau: f64) -> Result<()> {
    if tau.is_finite() && tau > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParam(format!("tau must be > 0, got {tau}")))
    }
}

fn check_radii(inner: f64, outer: f64, what: &str) -> Result<()> {
    if !(inner.is_finite() && outer.is_finite() && inner > 0.0) {
        return Err(Error::InvalidParam(format!("{what}: radii must be positive and finite")));
    }
    if inner == outer {
        return Err(Error::Degenerate(format!("{what}: facet has zero width (r = {inner})")));
    }
    if inner > outer {
        return Err(Error::InvalidParam(format!("{what}: need {inner} < {outer}")));
    }
    Ok(())
}

fn finish(field: RadialField, lambda: f64, mu: f64) -> ChField {
    let feasible = field.max_abs().0 <= 1.0 + CH_TOL;
    ChField {
        field,
        lambda,
        mu,
        feasible,
    }
}

/// Coherent field on the outer facet `ρ ≤ r ≤ R` of a disc with Γ the circle `r = R`.
pub fn ch_ball_coherent(big_r: f64, rho: f64, chi: Chi, tau: f64) -> Result<ChField> {
    check_tau(tau)?;
    check_radii(rho, big_r, "ball facet")?;
    let x = chi.value();
    let lambda = -2.0 * rho * x / (big_r * big_r - rho * rho + 2.0 * tau * big_r);
    let mu = -tau * lambda;
    let field = RadialField::from_flux(2, rho, big_r, lambda, section(2, rho) * x);
    Ok(finish(field, lambda, mu))
}

/// Coherent field on the inner facet `r0 ≤ r ≤ ρ` of an annulus with Γ the circle `r = r0`.
/// `feasible` is false when `ρ + r0 < 2τ`.
pub fn ch_annulus_coherent(r0: f64, rho: f64, chi: Chi, tau: f64) -> Result<ChField> {
    check_tau(tau)?;
    check_radii(r0, rho, "annulus facet")?;
    let x = chi.value();
    let lambda = 2.0 * rho * x / (rho * rho - r0 * r0 + 2.0 * tau * r0);
    let mu = -tau * lambda;
    // [z·ν] = -w(r0) on the inner circle
    let field = RadialField::from_flux(2, r0, rho, lambda, -section(2, r0) * mu);
    Ok(finish(field, lambda, mu))
}

/// Field with `w(r0) = w(ρ) = χ` on an inner annulus facet whose boundary layer detached.
pub fn ch_annulus_detached(r0: f64, rho: f64, chi: Chi) -> Result<ChField> {
    check_radii(r0, rho, "annulus facet")?;
    let x = chi.value();
    let lambda = 2.0 * x / (rho + r0);
    let field = RadialField::from_flux(2, r0, rho, lambda, section(2, r0) * x);
    Ok(finish(field, lambda, -x))
}

/// Relation between `γu` and `v` at one Γ end.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "trace", rename_all = "snake_case")]
pub enum Trace {
    /// `γu = v`: the flux is free in `[-1, 1]`.
    Matched,
    /// `γu − v = value ≠ 0`: the flux is pinned to `[z·ν] = −sign(value)`.
    Gap { value: f64 },
}

/// Constant-divergence solution on a facet `[a, b]` with given edge behaviour.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct FacetSolve {
    pub lambda: f64,
    pub flux_lo: f64,
    pub mu_lo: Option<f64>,
    pub mu_hi: Option<f64>,
    /// A matched Γ end had to be pinned at `|μ| = 1`.
    pub pinned: bool,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Side {
    pub kind: EdgeKind,
    pub trace: Trace,
}

/// Minimizes `λ²|F| + (1/τ) Σ_Γ s μ²` over constant-divergence fields, with `|μ| ≤ 1`.
pub(crate) fn solve_facet(dim: usize, a: f64, b: f64, lo: Side, hi: Side, chi: f64, tau: f64) -> FacetSolve {
    let vol = volume(dim, a, b);
    let (sa, sb) = (section(dim, a), section(dim, b));
    // fixed flux through each side, or None if free; flux = ν s μ
    let fixed = |side: Side, s: f64, nu: f64| -> Option<f64> {
        match side.kind {
            EdgeKind::Interior => Some(s * chi),
            EdgeKind::Neumann | EdgeKind::Center => Some(0.0),
            EdgeKind::Gamma => match side.trace {
                Trace::Matched => None,
                Trace::Gap { value } => Some(s * nu * -value.signum()),
            },
        }
    };
    let f_lo = fixed(lo, sa, -1.0);
    let f_hi = fixed(hi, sb, 1.0);
    let free_s = f_lo.map_or(sa, |_| 0.0) + f_hi.map_or(sb, |_| 0.0);
    let c = f_hi.unwrap_or(0.0) - f_lo.unwrap_or(0.0);
    let mut pinned = false;
    let (lambda, mu_free) = if f_lo.is_none() || f_hi.is_none() {
        let lam = c / (vol + tau * free_s);
        let mu = -tau * lam;
        if mu.abs() > 1.0 {
            pinned = true;
            let mu = mu.signum();
            let lam = if vol > 0.0 {
                (c + free_s * mu) / vol
            } else {
                zero_width_rate(dim, a, c + free_s * mu, chi)
            };
            (lam, Some(mu))
        } else {
            (lam, Some(mu))
        }
    } else if vol > 0.0 {
        (c / vol, None)
    } else {
        (zero_width_rate(dim, a, c, chi), None)
    };
    let mu_lo = match lo.kind {
        EdgeKind::Gamma => Some(f_lo.map_or(mu_free.unwrap_or(0.0), |f| if sa > 0.0 { -f / sa } else { 0.0 })),
        _ => None,
    };
    let mu_hi = match hi.kind {
        EdgeKind::Gamma => Some(f_hi.map_or(mu_free.unwrap_or(0.0), |f| if sb > 0.0 { f / sb } else { 0.0 })),
        _ => None,
    };
    let flux_lo = match mu_lo {
        Some(m) => -sa * m,
        None => f_lo.unwrap_or(0.0),
    };
    FacetSolve {
        lambda,
        flux_lo,
        mu_lo,
        mu_hi,
        pinned,
    }
}

/// Rate of a zero-width facet whose two sides carry the same unit trace: the divergence
/// `(N − 1) χ / r` of the unit field; unbounded when the net flux does not vanish.
fn zero_width_rate(dim: usize, r: f64, net_flux: f64, chi: f64) -> f64 {
    if net_flux.abs() > 1e-12 * section(dim, r).max(1.0) {
        return net_flux.signum() * f64::INFINITY;
    }
    if dim == 1 {
        0.0
    } else {
        chi / r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseTag {
    BallCoherent,
    BallDetached,
    AnnulusCoherent,
    AnnulusBorderline,
    AnnulusDetached,
    IntervalCoherent,
    IntervalDetached,
    OnsetFacetForms,
    OnsetNeutral,
    OnsetDetach,
    Interior,
}

impl CaseTag {
    pub fn as_str(self) -> &'static str {
        match self {
            CaseTag::BallCoherent => "ball_coherent",
            CaseTag::BallDetached => "ball_detached",
            CaseTag::AnnulusCoherent => "annulus_coherent",
            CaseTag::AnnulusBorderline => "annulus_borderline",
            CaseTag::AnnulusDetached => "annulus_detached",
            CaseTag::IntervalCoherent => "interval_coherent",
            CaseTag::IntervalDetached => "interval_detached",
            CaseTag::OnsetFacetForms => "onset_facet_forms",
            CaseTag::OnsetNeutral => "onset_neutral",
            CaseTag::OnsetDetach => "onset_detach",
            CaseTag::Interior => "interior",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FacetReport {
    pub facet: FacetSpec,
    pub tau: f64,
    pub lambda: f64,
    /// `[z·ν]` on Γ_F; `None` if the facet does not touch Γ.
    pub mu: Option<f64>,
    pub calibrable: bool,
    pub coherent: bool,
    pub detached: bool,
    pub case: CaseTag,
    pub witness: RadialField,
    /// `|γu_t|` of the strictly monotone bulk at Γ (onset analysis).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub bulk_speed: Option<f64>,
    /// `|v_t| = |μ|/τ`.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub boundary_speed: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub speed_lower_bound: Option<f64>,
}

impl FacetReport {
    /// `τλ + μ`, or `None` without Γ.
    pub fn coherency_defect(&self) -> Option<f64> {
        self.mu.map(|m| self.tau * self.lambda + m)
    }
}

/// Classifies a facet; `trace_matched = false` means the boundary value has separated from
/// the facet, with the flux on Γ pinned to that of the unit field `w = χ`.
pub fn classify_facet(domain: &DomainSpec, facet: &FacetSpec, tau: f64, trace_matched: bool) -> Result<FacetReport> {
    let traces: Vec<Trace> = domain
        .gamma_nodes()
        .iter()
        .map(|g| {
            if trace_matched {
                Trace::Matched
            } else {
                // w = χ on Γ means [z·ν] = ν χ = −sign(γu − v)
                Trace::Gap {
                    value: -g.end.normal() * facet.chi.value(),
                }
            }
        })
        .collect();
    classify_facet_with(domain, facet, tau, &traces)
}

/// Like [`classify_facet`] with an explicit trace relation per Γ component, in the order of
/// [`DomainSpec::gamma_nodes`].
pub fn classify_facet_with(domain: &DomainSpec, facet: &FacetSpec, tau: f64, traces: &[Trace]) -> Result<FacetReport> {
    check_tau(tau)?;
    facet.validate(domain)?;
    let gnodes = domain.gamma_nodes();
    if traces.len() != gnodes.len() {
        return Err(Error::DimensionMismatch {
            what: "trace conditions",
            expected: gnodes.len(),
            got: traces.len(),
        });
    }
    let trace_at = |end: End| {
        gnodes
            .iter()
            .zip(traces)
            .find(|(g, _)| g.end == end)
            .map(|(_, t)| *t)
            .unwrap_or(Trace::Matched)
    };
    if facet.onset {
        let end = domain.at_end(facet.inner).expect("validated onset facet");
        if facet.edge_kind(domain, end) != EdgeKind::Gamma {
            return Err(Error::InvalidFacet("onset facet must sit on Γ".into()));
        }
        return onset_at(domain, end, facet.chi, tau);
    }
    let lo = Side {
        kind: facet.edge_kind(domain, End::Lo),
        trace: trace_at(End::Lo),
    };
    let hi = Side {
        kind: facet.edge_kind(domain, End::Hi),
        trace: trace_at(End::Hi),
    };
    let chi = facet.chi.value();
    let dim = domain.dim();
    let (a, b) = (facet.inner, facet.outer);
    let touches = lo.kind == EdgeKind::Gamma || hi.kind == EdgeKind::Gamma;

    // inner circle of an annulus: the concave case with its explicit thresholds
    if let (DomainKind::Annulus { .. }, EdgeKind::Gamma, EdgeKind::Interior, Trace::Matched) =
        (domain.kind(), lo.kind, hi.kind, lo.trace)
    {
        let excess = b + a - 2.0 * tau;
        if excess.abs() <= BORDER_TOL {
            let lambda = chi / tau;
            let field = RadialField::from_flux(2, a, b, lambda, section(2, a) * chi);
            return Ok(report(facet, tau, lambda, Some(-chi), true, true, false, CaseTag::AnnulusBorderline, field));
        }
        if excess > 0.0 {
            let ch = ch_annulus_coherent(a, b, facet.chi, tau)?;
            // r0 = 2τ: the field is linear, w = χr/ρ
            let case = if (a - 2.0 * tau).abs() <= BORDER_TOL {
                CaseTag::AnnulusBorderline
            } else {
                CaseTag::AnnulusCoherent
            };
            return Ok(report(facet, tau, ch.lambda, Some(ch.mu), ch.feasible, true, false, case, ch.field));
        }
        let ch = ch_annulus_detached(a, b, facet.chi)?;
        return Ok(report(facet, tau, ch.lambda, Some(ch.mu), ch.feasible, false, true, CaseTag::AnnulusDetached, ch.field));
    }

    let sol = solve_facet(dim, a, b, lo, hi, chi, tau);
    let field = RadialField::from_flux(dim, a, b, sol.lambda, sol.flux_lo);
    let calibrable = field.max_abs().0 <= 1.0 + CH_TOL;
    let mu = sol.mu_lo.or(sol.mu_hi);
    if !touches {
        return Ok(report(facet, tau, sol.lambda, None, calibrable, false, false, CaseTag::Interior, field));
    }
    let any_gap = [lo, hi]
        .iter()
        .any(|s| s.kind == EdgeKind::Gamma && matches!(s.trace, Trace::Gap { .. }));
    let detached = sol.pinned || any_gap;
    let coherent = !detached;
    let case = match (domain.kind(), detached) {
        (DomainKind::Interval { .. }, false) => CaseTag::IntervalCoherent,
        (DomainKind::Interval { .. }, true) => CaseTag::IntervalDetached,
        (DomainKind::Ball { .. }, false) => CaseTag::BallCoherent,
        (DomainKind::Ball { .. }, true) => CaseTag::BallDetached,
        (DomainKind::Annulus { .. }, false) => CaseTag::AnnulusCoherent,
        (DomainKind::Annulus { .. }, true) => CaseTag::AnnulusDetached,
    };
    let mut rep = report(facet, tau, sol.lambda, mu, calibrable, coherent, detached, case, field);
    if coherent {
        // both Γ ends of an interval facet carry the same flux −τλ
        rep.mu = mu.map(|_| -tau * sol.lambda);
    }
    Ok(rep)
}

#[allow(clippy::too_many_arguments)]
fn report(
    facet: &FacetSpec,
    tau: f64,
    lambda: f64,
    mu: Option<f64>,
    calibrable: bool,
    coherent: bool,
    detached: bool,
    case: CaseTag,
    witness: RadialField,
) -> FacetReport {
    FacetReport {
        facet: *facet,
        tau,
        lambda,
        mu,
        calibrable,
        coherent,
        detached,
        case,
        witness,
        bulk_speed: None,
        boundary_speed: mu.map(|m| m.abs() / tau),
        speed_lower_bound: None,
    }
}

/// What happens at the Γ end of a strictly monotone profile with orientation `chi`:
/// whether a facet forms there, the bulk and boundary speeds.
pub fn boundary_onset(domain: &DomainSpec, chi: Chi, tau: f64) -> Result<FacetReport> {
    check_tau(tau)?;
    let end = domain
        .gamma_nodes()
        .first()
        .map(|g| g.end)
        .ok_or_else(|| Error::InvalidGeometry("Γ is empty".into()))?;
    onset_at(domain, end, chi, tau)
}

fn onset_at(domain: &DomainSpec, end: End, chi: Chi, tau: f64) -> Result<FacetReport> {
    let x = chi.value();
    let r = domain.end_coord(end);
    let facet = FacetSpec::onset_at(r, chi);
    let dim = domain.dim();
    // bulk trace speed of the unit field: |div(χ e_r)| = (N − 1)/r
    let bulk_speed = if dim == 1 { 0.0 } else { 1.0 / r };
    let nu = end.normal();
    let mut rep = match (domain.kind(), end) {
        (DomainKind::Annulus { outer, .. }, End::Lo) => {
            let r0 = r;
            let witness = RadialField::from_flux(2, r0, r0, x / tau, section(2, r0) * x);
            let gap = r0 - tau;
            let mut rep = if gap.abs() <= BORDER_TOL * r0.max(1.0) {
                report(&facet, tau, x / tau, Some(-x), true, true, false, CaseTag::OnsetNeutral, witness)
            } else if gap > 0.0 {
                let mut rep = report(&facet, tau, x / tau, Some(-x), true, true, false, CaseTag::OnsetFacetForms, witness);
                rep.speed_lower_bound = Some(2.0 * outer / (outer * outer - r0 * r0 + 2.0 * tau * r0));
                rep
            } else {
                let w = RadialField::from_flux(2, r0, r0, x / r0, section(2, r0) * x);
                report(&facet, tau, x / r0, Some(-x), true, false, true, CaseTag::OnsetDetach, w)
            };
            rep.boundary_speed = Some(1.0 / tau);
            rep
        }
        _ => {
            // convex or flat Γ: the facet moves against the bulk, opposite to its orientation
            let lambda = nu * -x / tau;
            let mu = -tau * lambda;
            let witness = RadialField::from_flux(dim, r, r, lambda, section(dim, r) * x);
            report(&facet, tau, lambda, Some(mu), true, true, false, CaseTag::OnsetFacetForms, witness)
        }
    };
    rep.bulk_speed = Some(bulk_speed);
    Ok(rep)
}

/// `∫_F |div z|² + (1/τ) ∫_{Γ_F} [z·ν]²`.
pub fn i_tau(field: &RadialField, facet: &FacetSpec, domain: &DomainSpec, tau: f64) -> Result<f64> {
    check_tau(tau)?;
    check_support(field, facet, domain)?;
    let mut total = field.div_norm_sq();
    for side in [End::Lo, End::Hi] {
        if facet.edge_kind(domain, side) == EdgeKind::Gamma {
            let r = side_coord(facet, side);
            let mu = side.normal() * field.w(r);
            total += section(domain.dim(), r) * mu * mu / tau;
        }
    }
    Ok(total)
}

fn side_coord(facet: &FacetSpec, side: End) -> f64 {
    match side {
        End::Lo => facet.inner,
        End::Hi => facet.outer,
    }
}

fn support_tol(facet: &FacetSpec) -> f64 {
    1e-9 * facet.outer.abs().max(1.0)
}

fn check_support(field: &RadialField, facet: &FacetSpec, domain: &DomainSpec) -> Result<()> {
    if field.dim != domain.dim() {
        return Err(Error::DomainMismatch(format!(
            "field of dimension {} on a {}-dimensional domain",
            field.dim,
            domain.dim()
        )));
    }
    let tol = support_tol(facet);
    if (field.r_in - facet.inner).abs() > tol || (field.r_out - facet.outer).abs() > tol {
        return Err(Error::DomainMismatch(format!(
            "field lives on [{}, {}], facet is [{}, {}]",
            field.r_in, field.r_out, facet.inner, facet.outer
        )));
    }
    Ok(())
}

/// Both sides of `λ|F| = |∂₊F| − |∂₋F| + μ|Γ_F|`, with `λ` the mean divergence of the field
/// and the interior traces taken as `±χ`.
pub fn balance_identity(field: &RadialField, facet: &FacetSpec, domain: &DomainSpec) -> (f64, f64) {
    let dim = domain.dim();
    let vol = volume(dim, facet.inner, facet.outer);
    let lhs = if vol > 0.0 { field.mean_divergence() * vol } else { 0.0 };
    let chi = facet.chi.value();
    let mut rhs = 0.0;
    for side in [End::Lo, End::Hi] {
        let r = side_coord(facet, side);
        let s = section(dim, r);
        let nu = side.normal();
        match facet.edge_kind(domain, side) {
            EdgeKind::Interior => rhs += nu * chi * s,
            EdgeKind::Gamma => rhs += s * nu * field.w(r),
            EdgeKind::Neumann | EdgeKind::Center => {}
        }
    }
    (lhs, rhs)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub condition: String,
    pub r: f64,
    pub value: f64,
}

/// Checks `|w| ≤ 1`, `w = χ` on interior edges, zero flux through Neumann ends and the centre.
pub fn verify_ch(field: &RadialField, facet: &FacetSpec, domain: &DomainSpec) -> (bool, Vec<Violation>) {
    let mut out = Vec::new();
    if let Err(e) = check_support(field, facet, domain) {
        out.push(Violation {
            condition: format!("support: {e}"),
            r: field.r_in,
            value: field.r_out,
        });
        return (false, out);
    }
    let (m, at) = field.max_abs();
    if m > 1.0 + CH_TOL {
        out.push(Violation {
            condition: "|w| <= 1".into(),
            r: at,
            value: m,
        });
    }
    let chi = facet.chi.value();
    for side in [End::Lo, End::Hi] {
        let r = side_coord(facet, side);
        let w = field.w(r);
        let (cond, bad) = match facet.edge_kind(domain, side) {
            EdgeKind::Interior => ("w = chi on interior edge", (w - chi).abs() > CH_TOL),
            EdgeKind::Neumann => ("w = 0 on Neumann boundary", w.abs() > CH_TOL),
            EdgeKind::Center => ("zero flux at the centre", field.flux(r).abs() > CH_TOL),
            EdgeKind::Gamma => continue,
        };
        if bad {
            out.push(Violation {
                condition: cond.into(),
                r,
                value: w,
            });
        }
    }
    (out.is_empty(), out)
}

/// Dilates a field and its domain by `tau_ratio`: `z^τ(y) = z(y/τ)` on `τΩ`.
pub fn scale_field(field: &RadialField, domain: &DomainSpec, tau_ratio: f64) -> Result<(RadialField, DomainSpec)> {
    check_tau(tau_ratio)?;
    Ok((field.dilated(tau_ratio), domain.scaled(tau_ratio)?))
}

/// Sufficient condition for the detached field to be a minimizer of `I_τ`:
/// `(λ + μ/τ) sign(μ) ≤ 0`.
pub fn detached_field_is_minimizer(r0: f64, rho: f64, tau: f64) -> Result<bool> {
    check_tau(tau)?;
    let ch = ch_annulus_detached(r0, rho, Chi::Plus)?;
    Ok((ch.lambda + ch.mu / tau) * ch.mu.signum() <= 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn annulus(r0: f64) -> DomainSpec {
        DomainSpec::annulus(r0, 4.0, 64).unwrap()
    }

    #[test]
    fn quad_min_examples() {
        assert_eq!(quad_min(1.0, 1.0, 1.0, 1.0).unwrap(), (0.5, -0.5));
        assert_eq!(quad_min(1.0, 2.0, 0.0, 1.0).unwrap(), (0.0, -0.0));
        let (l, m) = quad_min(2.0, 1.0, 3.0, 2.0).unwrap();
        assert_abs_diff_eq!(l, 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(m, -1.5, epsilon = 1e-15);
        assert!(quad_min(0.0, 1.0, 1.0, 1.0).is_err());
        assert!(quad_min(1.0, 1.0, 1.0, -1.0).is_err());
    }

    #[test]
    fn ball_examples() {
        let ch = ch_ball_coherent(2.0, 1.0, Chi::Minus, 1.0).unwrap();
        assert_abs_diff_eq!(ch.lambda, 2.0 / 7.0, epsilon = 1e-15);
        assert_abs_diff_eq!(ch.mu, -2.0 / 7.0, epsilon = 1e-15);
        assert!(ch.feasible);
        let up = ch_ball_coherent(2.0, 1.0, Chi::Plus, 1.0).unwrap();
        assert_eq!(up.lambda, -ch.lambda);
        assert_abs_diff_eq!(up.field.w(1.0), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(up.field.w(2.0), up.mu, epsilon = 1e-14);
        // formula at the onset limit ρ → R
        let lim = ch_ball_coherent(2.0, 2.0 - 1e-9, Chi::Minus, 1.0).unwrap();
        assert_abs_diff_eq!(lim.lambda, 1.0, epsilon = 1e-8);
        assert!(matches!(ch_ball_coherent(2.0, 2.0, Chi::Plus, 1.0), Err(Error::Degenerate(_))));
    }

    #[test]
    fn annulus_coherent_examples() {
        let ch = ch_annulus_coherent(3.0, 4.0, Chi::Plus, 1.0).unwrap();
        assert_abs_diff_eq!(ch.lambda, 8.0 / 13.0, epsilon = 1e-15);
        assert!(ch.feasible);
        let b = ch_annulus_coherent(2.0, 3.0, Chi::Plus, 1.0).unwrap();
        assert_abs_diff_eq!(b.lambda, 2.0 / 3.0, epsilon = 1e-15);
        for k in 0..=10 {
            let r = 2.0 + 0.1 * k as f64;
            assert_abs_diff_eq!(b.field.w(r), r / 3.0, epsilon = 1e-14);
        }
        let bad = ch_annulus_coherent(0.5, 1.0, Chi::Plus, 1.0).unwrap();
        assert!(!bad.feasible);
        let (ok, v) = verify_ch(&bad.field, &FacetSpec::new(0.5, 1.0, Chi::Plus), &annulus(0.5));
        assert!(!ok);
        assert_eq!(v[0].r, 0.5);
        assert!(matches!(ch_annulus_coherent(1.0, 1.0, Chi::Plus, 1.0), Err(Error::Degenerate(_))));
    }

    #[test]
    fn annulus_detached_examples() {
        let ch = ch_annulus_detached(0.5, 1.0, Chi::Plus).unwrap();
        assert_abs_diff_eq!(ch.lambda, 4.0 / 3.0, epsilon = 1e-15);
        assert_eq!(ch.mu, -1.0);
        assert!(ch.feasible);
        let lim = ch_annulus_detached(1.0, 1.0 + 1e-10, Chi::Plus).unwrap();
        assert_abs_diff_eq!(lim.lambda, 1.0, epsilon = 1e-9);
        let neg = ch_annulus_detached(0.5, 1.0, Chi::Minus).unwrap();
        assert_abs_diff_eq!(neg.lambda, -4.0 / 3.0, epsilon = 1e-15);
        assert_eq!(neg.mu, 1.0);
    }

    #[test]
    fn classify_examples() {
        let rep = classify_facet(&annulus(0.5), &FacetSpec::new(0.5, 1.0, Chi::Plus), 1.0, true).unwrap();
        assert_eq!(rep.case, CaseTag::AnnulusDetached);
        assert!(rep.calibrable && rep.detached && !rep.coherent);
        assert_abs_diff_eq!(rep.lambda, 4.0 / 3.0, epsilon = 1e-15);
        assert_eq!(rep.mu, Some(-1.0));

        let ball = DomainSpec::ball(2.0, 64).unwrap();
        let rep = classify_facet(&ball, &FacetSpec::new(1.0, 2.0, Chi::Minus), 1.0, true).unwrap();
        assert_eq!(rep.case, CaseTag::BallCoherent);
        assert!(rep.coherent && rep.calibrable && !rep.detached);
        assert_abs_diff_eq!(rep.lambda, 2.0 / 7.0, epsilon = 1e-15);
        assert_abs_diff_eq!(rep.coherency_defect().unwrap(), 0.0, epsilon = 1e-15);

        let rep = classify_facet(&annulus(1.0), &FacetSpec::onset_at(1.0, Chi::Plus), 1.0, true).unwrap();
        assert_eq!(rep.case, CaseTag::OnsetNeutral);
        assert_eq!(rep.lambda, 1.0);
        assert_eq!(rep.boundary_speed, Some(1.0));
    }

    #[test]
    fn classify_interval_and_interior() {
        let d = DomainSpec::interval(1.0, 64).unwrap();
        let rep = classify_facet(&d, &FacetSpec::new(0.5, 1.0, Chi::Plus), 1.0, true).unwrap();
        assert_eq!(rep.case, CaseTag::IntervalCoherent);
        assert_abs_diff_eq!(rep.lambda, -2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(rep.mu.unwrap(), 2.0 / 3.0, epsilon = 1e-15);
        let left = classify_facet(&d, &FacetSpec::new(0.0, 0.25, Chi::Plus), 1.0, true).unwrap();
        assert_abs_diff_eq!(left.lambda, 0.8, epsilon = 1e-15);
        let step = classify_facet(&d, &FacetSpec::new(0.25, 0.5, Chi::Plus), 1.0, true).unwrap();
        assert_eq!(step.case, CaseTag::Interior);
        assert_eq!(step.lambda, 0.0);
        let whole = classify_facet(&d, &FacetSpec::new(0.0, 1.0, Chi::Plus), 1.0, true).unwrap();
        assert_eq!((whole.lambda, whole.mu), (0.0, Some(0.0)));

        let ball = DomainSpec::ball(2.0, 64).unwrap();
        let disc = classify_facet(&ball, &FacetSpec::new(0.0, 0.5, Chi::Plus), 1.0, true).unwrap();
        assert_eq!(disc.case, CaseTag::Interior);
        assert_abs_diff_eq!(disc.lambda, 4.0, epsilon = 1e-14);
        let ann = annulus(0.5);
        let top = classify_facet(&ann, &FacetSpec::new(3.0, 4.0, Chi::Plus), 1.0, true).unwrap();
        assert_abs_diff_eq!(top.lambda, -2.0 * 3.0 / 7.0, epsilon = 1e-14);
        let step = classify_facet(&ann, &FacetSpec::new(1.0, 2.0, Chi::Plus), 1.0, true).unwrap();
        assert_abs_diff_eq!(step.lambda, 2.0 / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn classify_borderline_and_antisymmetry() {
        let rep = classify_facet(&annulus(0.5), &FacetSpec::new(0.5, 1.5, Chi::Plus), 1.0, true).unwrap();
        assert_eq!(rep.case, CaseTag::AnnulusBorderline);
        assert_eq!(rep.lambda, 1.0);
        assert!(rep.coherent && !rep.detached);
        for (r0, rho) in [(0.5, 1.0), (3.0, 4.0), (0.5, 1.5), (1.0, 2.5)] {
            let f = FacetSpec::new(r0, rho, Chi::Plus);
            let g = FacetSpec::new(r0, rho, Chi::Minus);
            let a = classify_facet(&annulus(r0), &f, 1.0, true).unwrap();
            let b = classify_facet(&annulus(r0), &g, 1.0, true).unwrap();
            assert_eq!(a.lambda, -b.lambda);
            assert_eq!(a.mu.map(|m| -m), b.mu);
            assert_eq!((a.calibrable, a.coherent, a.detached, a.case), (b.calibrable, b.coherent, b.detached, b.case));
        }
    }

    #[test]
    fn mismatched_trace_pins_flux() {
        let d = DomainSpec::interval(1.0, 64).unwrap();
        let rep = classify_facet(&d, &FacetSpec::new(0.5, 1.0, Chi::Plus), 1.0, false).unwrap();
        assert_eq!(rep.case, CaseTag::IntervalDetached);
        assert_eq!(rep.mu, Some(1.0));
        assert_eq!(rep.lambda, 0.0);
    }

    #[test]
    fn onset_trichotomy() {
        let forms = boundary_onset(&DomainSpec::annulus(2.0, 4.0, 64).unwrap(), Chi::Plus, 1.0).unwrap();
        assert_eq!(forms.case, CaseTag::OnsetFacetForms);
        assert_abs_diff_eq!(forms.speed_lower_bound.unwrap(), 0.5, epsilon = 1e-15);
        assert_eq!(forms.bulk_speed, Some(0.5));
        let neutral = boundary_onset(&DomainSpec::annulus(1.0, 4.0, 64).unwrap(), Chi::Plus, 1.0).unwrap();
        assert_eq!(neutral.case, CaseTag::OnsetNeutral);
        let det = boundary_onset(&DomainSpec::annulus(0.5, 4.0, 64).unwrap(), Chi::Plus, 1.0).unwrap();
        assert_eq!(det.case, CaseTag::OnsetDetach);
        assert_eq!((det.bulk_speed, det.boundary_speed), (Some(2.0), Some(1.0)));
        let ball = boundary_onset(&DomainSpec::ball(2.0, 64).unwrap(), Chi::Plus, 1.0).unwrap();
        assert_eq!(ball.case, CaseTag::OnsetFacetForms);
        assert_eq!((ball.lambda, ball.mu), (-1.0, Some(1.0)));
    }

    #[test]
    fn i_tau_examples() {
        let ball = DomainSpec::ball(2.0, 64).unwrap();
        let f = FacetSpec::new(1.0, 2.0, Chi::Plus);
        let ch = ch_ball_coherent(2.0, 1.0, Chi::Plus, 1.0).unwrap();
        assert_abs_diff_eq!(i_tau(&ch.field, &f, &ball, 1.0).unwrap(), 4.0 * PI / 7.0, epsilon = 1e-13);
        let ann = annulus(0.5);
        let g = FacetSpec::new(0.5, 1.0, Chi::Plus);
        let det = ch_annulus_detached(0.5, 1.0, Chi::Plus).unwrap();
        assert_abs_diff_eq!(i_tau(&det.field, &g, &ann, 1.0).unwrap(), 4.0 * PI / 3.0 + PI, epsilon = 1e-13);
        let zero = RadialField::closed_form(2, 1.0, 2.0, 0.0, 0.0);
        assert_eq!(i_tau(&zero, &FacetSpec::new(1.0, 2.0, Chi::Plus), &ann, 1.0).unwrap(), 0.0);
        assert!(matches!(i_tau(&zero, &g, &ann, 1.0), Err(Error::DomainMismatch(_))));
    }

    #[test]
    fn balance_examples() {
        let ann = annulus(0.5);
        let det = ch_annulus_detached(0.5, 1.0, Chi::Plus).unwrap();
        let (l, r) = balance_identity(&det.field, &FacetSpec::new(0.5, 1.0, Chi::Plus), &ann);
        assert_abs_diff_eq!(l, PI, epsilon = 1e-14);
        assert_abs_diff_eq!(r, PI, epsilon = 1e-14);
        let ann3 = DomainSpec::annulus(3.0, 5.0, 64).unwrap();
        let co = ch_annulus_coherent(3.0, 4.0, Chi::Plus, 1.0).unwrap();
        let (l, r) = balance_identity(&co.field, &FacetSpec::new(3.0, 4.0, Chi::Plus), &ann3);
        assert_abs_diff_eq!(l, 56.0 * PI / 13.0, epsilon = 1e-13);
        assert_abs_diff_eq!(r, 56.0 * PI / 13.0, epsilon = 1e-13);
    }

    #[test]
    fn verify_examples() {
        let ann = annulus(0.5);
        let f = FacetSpec::new(0.5, 1.0, Chi::Plus);
        let det = ch_annulus_detached(0.5, 1.0, Chi::Plus).unwrap();
        assert!(verify_ch(&det.field, &f, &ann).0);
        // the unit field is admissible though its divergence is not constant
        let unit = RadialField::sampled(2, vec![1.0, 1.5, 2.0], vec![1.0, 1.0, 1.0]).unwrap();
        assert!(verify_ch(&unit, &FacetSpec::new(1.0, 2.0, Chi::Plus), &ann).0);
    }

    #[test]
    fn scaling_identity_examples() {
        for (dim, ratio, factor) in [(2usize, 3.0, 1.0), (1, 2.0, 0.5), (2, 1.0, 1.0)] {
            let d = if dim == 1 {
                DomainSpec::interval(1.0, 64).unwrap()
            } else {
                DomainSpec::annulus(0.5, 4.0, 64).unwrap()
            };
            let (a, b) = if dim == 1 { (0.0, 0.4) } else { (0.5, 1.7) };
            let facet = FacetSpec::new(a, b, Chi::Plus);
            let field = RadialField::from_flux(dim, a, b, 0.3, 0.2 * section(dim, a));
            let base = i_tau(&field, &facet, &d, 1.0).unwrap();
            let (zf, zd) = scale_field(&field, &d, ratio).unwrap();
            let scaled = i_tau(&zf, &facet.scaled(ratio), &zd, ratio).unwrap();
            assert_abs_diff_eq!(scaled, factor * base, epsilon = 1e-12);
        }
    }

    #[test]
    fn detached_minimizer_criterion() {
        for (r0, rho) in [(0.5, 1.0), (0.3, 1.6), (0.9, 1.0)] {
            assert!(detached_field_is_minimizer(r0, rho, 1.0).unwrap());
        }
        for (r0, rho) in [(1.0, 1.5), (3.0, 4.0)] {
            assert!(!detached_field_is_minimizer(r0, rho, 1.0).unwrap());
        }
        assert!(detached_field_is_minimizer(0.5, 1.5, 1.0).unwrap());
    }
}
