//! Radially symmetric domains, their grids and the dynamic-boundary part Γ.
//!
//! Every domain is described by a single coordinate `r` running from [`DomainSpec::lo`]
//! to [`DomainSpec::hi`]: the position `x` on an interval, or the radius on a disc or an
//! annulus. Quantities that depend on the dimension go through two measures:
//!
//! * [`DomainSpec::section`] `s(r)`: the measure of the level set `{|x| = r}`
//!   (`1` in one dimension, `2πr` in the plane);
//! * [`DomainSpec::volume`] `V(a, b) = ∫_a^b s`.
//!
//! With these, the flux of a radial field `z = w(r) e_r` through `{|x| = r}` is `s(r) w(r)`
//! and its divergence is `(s w)' / s`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance for deciding whether a coordinate sits on a domain endpoint.
const END_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainKind {
    Interval {
        #[serde(rename = "L")]
        length: f64,
    },
    Ball {
        #[serde(rename = "R")]
        radius: f64,
    },
    Annulus {
        r0: f64,
        #[serde(rename = "R")]
        outer: f64,
    },
}

/// Which boundary components carry the dynamic condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaSelect {
    /// Both endpoints for an interval, the sphere for a ball, the inner circle for an annulus.
    #[default]
    Default,
    Inner,
    Outer,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum End {
    Lo,
    Hi,
}

impl End {
    /// Outer normal of the domain at this end, as a multiple of `e_r`.
    pub fn normal(self) -> f64 {
        match self {
            End::Lo => -1.0,
            End::Hi => 1.0,
        }
    }
}

/// Boundary behaviour at a domain end.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndKind {
    /// Dynamic boundary condition.
    Gamma,
    /// Homogeneous Neumann condition, `[z·ν] = 0`.
    Neumann,
    /// Centre of a ball; not a boundary point.
    Center,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaNode {
    pub end: End,
    /// Index of the adjacent grid node; `γu` is `u[index]`.
    pub index: usize,
    /// Measure of this boundary component.
    pub weight: f64,
}

/// Serialized form of a [`DomainSpec`]: the kind, Γ selection and number of nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainConfig {
    #[serde(flatten)]
    pub kind: DomainKind,
    #[serde(default)]
    pub gamma: GammaSelect,
    pub n: usize,
}

/// A validated domain with its uniform grid. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DomainConfig", into = "DomainConfig")]
pub struct DomainSpec {
    kind: DomainKind,
    gamma: GammaSelect,
    n: usize,
    nodes: Vec<f64>,
}

impl TryFrom<DomainConfig> for DomainSpec {
    type Error = Error;

    fn try_from(c: DomainConfig) -> Result<Self> {
        DomainSpec::new(c.kind, c.gamma, c.n)
    }
}

impl From<DomainSpec> for DomainConfig {
    fn from(d: DomainSpec) -> Self {
        DomainConfig {
            kind: d.kind,
            gamma: d.gamma,
            n: d.n,
        }
    }
}

/// Builds a validated domain. `n` is the number of grid nodes and must be at least 8.
pub fn make_domain(kind: DomainKind, gamma: GammaSelect, n: usize) -> Result<DomainSpec> {
    DomainSpec::new(kind, gamma, n)
}

impl DomainSpec {
    pub fn new(kind: DomainKind, gamma: GammaSelect, n: usize) -> Result<Self> {
        let finite_pos = |x: f64| x.is_finite() && x > 0.0;
        match kind {
            DomainKind::Interval { length } if !finite_pos(length) => {
                return Err(Error::InvalidGeometry(format!("interval length L = {length} must be > 0")))
            }
            DomainKind::Ball { radius } if !finite_pos(radius) => {
                return Err(Error::InvalidGeometry(format!("ball radius R = {radius} must be > 0")))
            }
            DomainKind::Annulus { r0, outer } if !(finite_pos(r0) && outer.is_finite() && r0 < outer) => {
                return Err(Error::InvalidGeometry(format!(
                    "annulus radii must satisfy 0 < r0 < R, got r0 = {r0}, R = {outer}"
                )))
            }
            _ => {}
        }
        let gamma = match (kind, gamma) {
            (DomainKind::Interval { .. }, GammaSelect::Default | GammaSelect::Both) => GammaSelect::Both,
            (DomainKind::Interval { .. }, g) => {
                return Err(Error::InvalidGeometry(format!(
                    "an interval carries the dynamic condition at both endpoints, got gamma = {g:?}"
                )))
            }
            (DomainKind::Ball { .. }, GammaSelect::Default | GammaSelect::Outer | GammaSelect::Both) => {
                GammaSelect::Outer
            }
            (DomainKind::Ball { .. }, GammaSelect::Inner) => {
                return Err(Error::InvalidGeometry("a ball has no inner boundary; Γ would be empty".into()))
            }
            (DomainKind::Annulus { .. }, GammaSelect::Default) => GammaSelect::Inner,
            (DomainKind::Annulus { .. }, g) => g,
        };
        if n < 8 {
            return Err(Error::InvalidGeometry(format!("grid needs at least 8 nodes, got {n}")));
        }
        let (lo, hi) = match kind {
            DomainKind::Interval { length } => (0.0, length),
            DomainKind::Ball { radius } => (0.0, radius),
            DomainKind::Annulus { r0, outer } => (r0, outer),
        };
        let step = (hi - lo) / (n - 1) as f64;
        let mut nodes: Vec<f64> = (0..n).map(|i| lo + step * i as f64).collect();
        nodes[n - 1] = hi;
        Ok(DomainSpec { kind, gamma, n, nodes })
    }

    pub fn interval(length: f64, n: usize) -> Result<Self> {
        Self::new(DomainKind::Interval { length }, GammaSelect::Default, n)
    }

    pub fn ball(radius: f64, n: usize) -> Result<Self> {
        Self::new(DomainKind::Ball { radius }, GammaSelect::Default, n)
    }

    pub fn annulus(r0: f64, outer: f64, n: usize) -> Result<Self> {
        Self::new(DomainKind::Annulus { r0, outer }, GammaSelect::Default, n)
    }

    pub fn kind(&self) -> DomainKind {
        self.kind
    }

    pub fn gamma(&self) -> GammaSelect {
        self.gamma
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Spatial dimension of the physical domain.
    pub fn dim(&self) -> usize {
        match self.kind {
            DomainKind::Interval { .. } => 1,
            _ => 2,
        }
    }

    pub fn lo(&self) -> f64 {
        self.nodes[0]
    }

    pub fn hi(&self) -> f64 {
        self.nodes[self.n - 1]
    }

    /// Grid spacing.
    pub fn h(&self) -> f64 {
        (self.hi() - self.lo()) / (self.n - 1) as f64
    }

    pub fn section(&self, r: f64) -> f64 {
        section(self.dim(), r)
    }

    pub fn volume(&self, a: f64, b: f64) -> f64 {
        volume(self.dim(), a, b)
    }

    /// Measure of the whole domain.
    pub fn measure(&self) -> f64 {
        self.volume(self.lo(), self.hi())
    }

    pub fn end_coord(&self, end: End) -> f64 {
        match end {
            End::Lo => self.lo(),
            End::Hi => self.hi(),
        }
    }

    pub fn end_kind(&self, end: End) -> EndKind {
        match (self.kind, end) {
            (DomainKind::Ball { .. }, End::Lo) => EndKind::Center,
            _ if self.has_gamma_at(end) => EndKind::Gamma,
            _ => EndKind::Neumann,
        }
    }

    fn has_gamma_at(&self, end: End) -> bool {
        match (self.kind, self.gamma, end) {
            (DomainKind::Interval { .. }, _, _) => true,
            (DomainKind::Ball { .. }, _, End::Hi) => true,
            (DomainKind::Ball { .. }, _, End::Lo) => false,
            (DomainKind::Annulus { .. }, GammaSelect::Both, _) => true,
            (DomainKind::Annulus { .. }, GammaSelect::Inner | GammaSelect::Default, e) => e == End::Lo,
            (DomainKind::Annulus { .. }, GammaSelect::Outer, e) => e == End::Hi,
        }
    }

    /// Γ components in grid order (low end first).
    pub fn gamma_nodes(&self) -> Vec<GammaNode> {
        [End::Lo, End::Hi]
            .into_iter()
            .filter(|&e| self.end_kind(e) == EndKind::Gamma)
            .map(|end| {
                let index = match end {
                    End::Lo => 0,
                    End::Hi => self.n - 1,
                };
                GammaNode {
                    end,
                    index,
                    weight: self.section(self.end_coord(end)),
                }
            })
            .collect()
    }

    pub fn gamma_measure(&self) -> f64 {
        self.gamma_nodes().iter().map(|g| g.weight).sum()
    }

    /// Weights of the forward differences `u[i+1] - u[i]` in the discrete total variation:
    /// the section measure at the cell midpoint.
    pub fn edge_weights(&self) -> Vec<f64> {
        self.nodes
            .windows(2)
            .map(|w| self.section(0.5 * (w[0] + w[1])))
            .collect()
    }

    /// Lumped mass of every node: the measure of its dual cell, clipped to the domain.
    /// The masses sum to the measure of the domain.
    pub fn masses(&self) -> Vec<f64> {
        let n = self.n;
        (0..n)
            .map(|i| {
                let left = if i == 0 { self.nodes[0] } else { 0.5 * (self.nodes[i - 1] + self.nodes[i]) };
                let right = if i == n - 1 {
                    self.nodes[n - 1]
                } else {
                    0.5 * (self.nodes[i] + self.nodes[i + 1])
                };
                self.volume(left, right)
            })
            .collect()
    }

    /// Is `r` one of the domain endpoints?
    pub fn at_end(&self, r: f64) -> Option<End> {
        let scale = self.hi().abs().max(1.0);
        if (r - self.lo()).abs() <= END_TOL * scale {
            Some(End::Lo)
        } else if (r - self.hi()).abs() <= END_TOL * scale {
            Some(End::Hi)
        } else {
            None
        }
    }

    pub fn contains(&self, r: f64) -> bool {
        let scale = self.hi().abs().max(1.0);
        r >= self.lo() - END_TOL * scale && r <= self.hi() + END_TOL * scale
    }

    /// The same domain dilated by `ratio`, with the same number of nodes.
    pub fn scaled(&self, ratio: f64) -> Result<Self> {
        let kind = match self.kind {
            DomainKind::Interval { length } => DomainKind::Interval { length: length * ratio },
            DomainKind::Ball { radius } => DomainKind::Ball { radius: radius * ratio },
            DomainKind::Annulus { r0, outer } => DomainKind::Annulus {
                r0: r0 * ratio,
                outer: outer * ratio,
            },
        };
        Self::new(kind, self.gamma, self.n)
    }

    /// Inward curvature of Γ at the given end: `+1/R` on the outer sphere of a ball or an
    /// annulus, `-1/r0` on the inner circle of an annulus, `0` for interval endpoints.
    pub fn curvature_at(&self, end: End) -> f64 {
        match (self.kind, end) {
            (DomainKind::Interval { .. }, _) => 0.0,
            (DomainKind::Ball { radius }, _) => 1.0 / radius,
            (DomainKind::Annulus { r0, .. }, End::Lo) => -1.0 / r0,
            (DomainKind::Annulus { outer, .. }, End::Hi) => 1.0 / outer,
        }
    }

    /// Lower curvature bound over Γ.
    pub fn gamma_curvature(&self) -> f64 {
        self.gamma_nodes()
            .iter()
            .map(|g| self.curvature_at(g.end))
            .fold(f64::INFINITY, f64::min)
    }

    /// Curvature test for coherency of facets at Γ: `inf κ > -1/τ`.
    pub fn curvature_predicts_coherence(&self, tau: f64) -> bool {
        self.gamma_curvature() > -1.0 / tau
    }
}

/// Free function form of [`DomainSpec::gamma_curvature`].
pub fn gamma_curvature(domain: &DomainSpec) -> f64 {
    domain.gamma_curvature()
}

pub fn section(dim: usize, r: f64) -> f64 {
    if dim == 1 {
        1.0
    } else {
        2.0 * PI * r
    }
}

pub fn volume(dim: usize, a: f64, b: f64) -> f64 {
    if dim == 1 {
        b - a
    } else {
        PI * (b - a) * (b + a)
    }
}

/// Orientation of a monotone profile: `+1` where it increases with `r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum Chi {
    Plus,
    Minus,
}

impl Chi {
    pub fn value(self) -> f64 {
        match self {
            Chi::Plus => 1.0,
            Chi::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Chi {
        match self {
            Chi::Plus => Chi::Minus,
            Chi::Minus => Chi::Plus,
        }
    }

    pub fn from_sign(x: f64) -> Option<Chi> {
        if x > 0.0 {
            Some(Chi::Plus)
        } else if x < 0.0 {
            Some(Chi::Minus)
        } else {
            None
        }
    }
}

impl TryFrom<i8> for Chi {
    type Error = String;

    fn try_from(v: i8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(Chi::Plus),
            -1 => Ok(Chi::Minus),
            other => Err(format!("chi must be +1 or -1, got {other}")),
        }
    }
}

impl From<Chi> for i8 {
    fn from(c: Chi) -> i8 {
        match c {
            Chi::Plus => 1,
            Chi::Minus => -1,
        }
    }
}

/// How the field behaves at one end of a facet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKind {
    /// Edge inside Ω where the facet meets the strictly monotone bulk; `w = χ` there.
    Interior,
    Gamma,
    Neumann,
    Center,
}

/// A radially symmetric facet `{inner ≤ r ≤ outer}` with orientation χ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FacetSpec {
    pub inner: f64,
    pub outer: f64,
    pub chi: Chi,
    /// Marks a zero-length facet at a boundary (onset analysis).
    #[serde(default)]
    pub onset: bool,
}

impl FacetSpec {
    pub fn new(inner: f64, outer: f64, chi: Chi) -> Self {
        FacetSpec {
            inner,
            outer,
            chi,
            onset: false,
        }
    }

    pub fn onset_at(r: f64, chi: Chi) -> Self {
        FacetSpec {
            inner: r,
            outer: r,
            chi,
            onset: true,
        }
    }

    pub fn length(&self) -> f64 {
        self.outer - self.inner
    }

    pub fn validate(&self, domain: &DomainSpec) -> Result<()> {
        if !(self.inner.is_finite() && self.outer.is_finite()) {
            return Err(Error::InvalidFacet("facet endpoints must be finite".into()));
        }
        if !domain.contains(self.inner) || !domain.contains(self.outer) {
            return Err(Error::InvalidFacet(format!(
                "facet [{}, {}] leaves the domain [{}, {}]",
                self.inner,
                self.outer,
                domain.lo(),
                domain.hi()
            )));
        }
        if self.onset {
            if self.inner != self.outer {
                return Err(Error::InvalidFacet("onset facet must have inner == outer".into()));
            }
            if domain.at_end(self.inner).is_none() {
                return Err(Error::InvalidFacet("onset facet must sit on a domain boundary".into()));
            }
        } else if self.inner >= self.outer {
            return Err(Error::InvalidFacet(format!(
                "facet needs inner < outer, got [{}, {}]",
                self.inner, self.outer
            )));
        }
        Ok(())
    }

    /// Behaviour at the low (`End::Lo`) or high end of the facet.
    pub fn edge_kind(&self, domain: &DomainSpec, side: End) -> EdgeKind {
        let r = match side {
            End::Lo => self.inner,
            End::Hi => self.outer,
        };
        match domain.at_end(r) {
            Some(end) if end == side => match domain.end_kind(end) {
                EndKind::Gamma => EdgeKind::Gamma,
                EndKind::Neumann => EdgeKind::Neumann,
                EndKind::Center => EdgeKind::Center,
            },
            _ => EdgeKind::Interior,
        }
    }

    pub fn touches_gamma(&self, domain: &DomainSpec) -> bool {
        [End::Lo, End::Hi]
            .into_iter()
            .any(|s| self.edge_kind(domain, s) == EdgeKind::Gamma)
    }

    /// The facet dilated by `ratio`.
    pub fn scaled(&self, ratio: f64) -> Self {
        FacetSpec {
            inner: self.inner * ratio,
            outer: self.outer * ratio,
            ..*self
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn annulus_inner_gamma_measure() {
        let d = make_domain(DomainKind::Annulus { r0: 0.5, outer: 4.0 }, GammaSelect::Inner, 400).unwrap();
        assert_abs_diff_eq!(d.gamma_measure(), PI, epsilon = 1e-12);
        assert_eq!(d.gamma_nodes().len(), 1);
        assert_eq!(d.gamma_nodes()[0].index, 0);
        assert_eq!(d.end_kind(End::Hi), EndKind::Neumann);
    }

    #[test]
    fn interval_has_two_gamma_nodes() {
        let d = DomainSpec::interval(1.0, 16).unwrap();
        let g = d.gamma_nodes();
        assert_eq!(g.len(), 2);
        assert_eq!((g[0].index, g[1].index), (0, 15));
        assert_eq!(d.gamma_measure(), 2.0);
    }

    #[test]
    fn invalid_geometries_are_rejected() {
        assert!(matches!(
            DomainSpec::annulus(4.0, 0.5, 100),
            Err(Error::InvalidGeometry(_))
        ));
        assert!(matches!(DomainSpec::interval(0.0, 100), Err(Error::InvalidGeometry(_))));
        assert!(matches!(DomainSpec::ball(1.0, 4), Err(Error::InvalidGeometry(_))));
        assert!(matches!(
            DomainSpec::new(DomainKind::Ball { radius: 1.0 }, GammaSelect::Inner, 32),
            Err(Error::InvalidGeometry(_))
        ));
    }

    #[test]
    fn curvature_convention() {
        assert_eq!(DomainSpec::ball(2.0, 32).unwrap().gamma_curvature(), 0.5);
        assert_eq!(DomainSpec::annulus(0.5, 4.0, 32).unwrap().gamma_curvature(), -2.0);
        assert_eq!(DomainSpec::interval(1.0, 32).unwrap().gamma_curvature(), 0.0);
        for &r0 in &[0.3, 0.77, 1.5, 2.0, 3.1] {
            let k = DomainSpec::annulus(r0, 5.0, 32).unwrap().gamma_curvature();
            assert_eq!(k * r0, -1.0);
        }
        for &r in &[0.3, 1.0, 2.5] {
            assert_eq!(DomainSpec::ball(r, 32).unwrap().gamma_curvature() * r, 1.0);
        }
    }

    #[test]
    fn curvature_criterion_matches_annulus_threshold() {
        for i in 1..40 {
            let r0 = 0.1 * i as f64;
            let d = DomainSpec::annulus(r0, r0 + 3.0, 16).unwrap();
            for j in 1..40 {
                let tau = 0.1 * j as f64 + 0.05;
                assert_eq!(d.curvature_predicts_coherence(tau), r0 > tau, "r0={r0} tau={tau}");
            }
        }
    }

    #[test]
    fn masses_sum_to_measure() {
        for d in [
            DomainSpec::interval(1.3, 57).unwrap(),
            DomainSpec::ball(2.0, 101).unwrap(),
            DomainSpec::annulus(0.5, 4.0, 400).unwrap(),
        ] {
            let total: f64 = d.masses().iter().sum();
            assert_abs_diff_eq!(total, d.measure(), epsilon = 1e-12 * d.measure());
            assert!(d.masses().iter().all(|&m| m > 0.0));
            let nodes = d.nodes();
            assert_eq!(nodes[0], d.lo());
            assert_eq!(nodes[d.n() - 1], d.hi());
            assert!(nodes.windows(2).all(|w| w[1] > w[0]));
        }
    }

    #[test]
    fn domain_json_roundtrip() {
        let d = DomainSpec::annulus(0.5, 4.0, 64).unwrap();
        let s = serde_json::to_string(&d).unwrap();
        assert!(s.contains("\"kind\":\"annulus\""));
        let back: DomainSpec = serde_json::from_str(&s).unwrap();
        assert_eq!(back, d);
        let bad = r#"{"kind":"annulus","r0":4.0,"R":0.5,"n":64}"#;
        assert!(serde_json::from_str::<DomainSpec>(bad).is_err());
    }

    #[test]
    fn facet_edges() {
        let d = DomainSpec::annulus(0.5, 4.0, 64).unwrap();
        let f = FacetSpec::new(0.5, 1.0, Chi::Plus);
        assert_eq!(f.edge_kind(&d, End::Lo), EdgeKind::Gamma);
        assert_eq!(f.edge_kind(&d, End::Hi), EdgeKind::Interior);
        let top = FacetSpec::new(3.0, 4.0, Chi::Plus);
        assert_eq!(top.edge_kind(&d, End::Hi), EdgeKind::Neumann);
        let b = DomainSpec::ball(2.0, 64).unwrap();
        let disc = FacetSpec::new(0.0, 0.3, Chi::Plus);
        assert_eq!(disc.edge_kind(&b, End::Lo), EdgeKind::Center);
        assert!(FacetSpec::new(1.0, 0.9, Chi::Plus).validate(&d).is_err());
        assert!(FacetSpec::onset_at(0.5, Chi::Plus).validate(&d).is_ok());
        assert!(FacetSpec::onset_at(1.5, Chi::Plus).validate(&d).is_err());
    }
}
