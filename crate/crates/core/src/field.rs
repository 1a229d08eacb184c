//! Radial vector fields `z = w(r) e_r` on a facet.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{section, volume};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "repr", rename_all = "snake_case")]
pub enum FieldRepr {
    /// Constant divergence `a`: `w(r) = a r / N + c / r^(N-1)`.
    ClosedForm { a: f64, c: f64 },
    /// Nodal samples, linear in between.
    Sampled { nodes: Vec<f64>, w: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialField {
    pub dim: usize,
    pub r_in: f64,
    pub r_out: f64,
    #[serde(flatten)]
    pub repr: FieldRepr,
}

impl RadialField {
    pub fn closed_form(dim: usize, r_in: f64, r_out: f64, a: f64, c: f64) -> Self {
        RadialField {
            dim,
            r_in,
            r_out,
            repr: FieldRepr::ClosedForm { a, c },
        }
    }

    /// The constant-divergence field with divergence `a` and flux `flux_in` through `{r = r_in}`.
    pub fn from_flux(dim: usize, r_in: f64, r_out: f64, a: f64, flux_in: f64) -> Self {
        let c = if dim == 1 {
            flux_in - a * r_in
        } else {
            (flux_in - a * std::f64::consts::PI * r_in * r_in) / (2.0 * std::f64::consts::PI)
        };
        Self::closed_form(dim, r_in, r_out, a, c)
    }

    pub fn sampled(dim: usize, nodes: Vec<f64>, w: Vec<f64>) -> Result<Self> {
        if nodes.len() != w.len() {
            return Err(Error::DimensionMismatch {
                what: "field samples",
                expected: nodes.len(),
                got: w.len(),
            });
        }
        if nodes.len() < 2 || nodes.windows(2).any(|p| !(p[1] > p[0])) {
            return Err(Error::InvalidParam("field nodes must be strictly increasing".into()));
        }
        Ok(RadialField {
            dim,
            r_in: nodes[0],
            r_out: nodes[nodes.len() - 1],
            repr: FieldRepr::Sampled { nodes, w },
        })
    }

    pub fn w(&self, r: f64) -> f64 {
        match &self.repr {
            FieldRepr::ClosedForm { a, c } => {
                if self.dim == 1 {
                    a * r + c
                } else if *c == 0.0 {
                    0.5 * a * r
                } else {
                    0.5 * a * r + c / r
                }
            }
            FieldRepr::Sampled { nodes, w } => interp(nodes, w, r),
        }
    }

    /// Flux `s(r) w(r)` through the sphere of radius `r`.
    pub fn flux(&self, r: f64) -> f64 {
        match (&self.repr, self.dim) {
            (FieldRepr::ClosedForm { a, c }, 2) => std::f64::consts::PI * a * r * r + 2.0 * std::f64::consts::PI * c,
            _ => section(self.dim, r) * self.w(r),
        }
    }

    /// Divergence per cell: one value for a closed form, one per sample interval otherwise.
    pub fn cell_divergence(&self) -> Vec<(f64, f64, f64)> {
        match &self.repr {
            FieldRepr::ClosedForm { a, .. } => vec![(self.r_in, self.r_out, *a)],
            FieldRepr::Sampled { nodes, w } => nodes
                .windows(2)
                .zip(w.windows(2))
                .map(|(r, w)| {
                    let f0 = section(self.dim, r[0]) * w[0];
                    let f1 = section(self.dim, r[1]) * w[1];
                    (r[0], r[1], (f1 - f0) / volume(self.dim, r[0], r[1]))
                })
                .collect(),
        }
    }

    /// Mean divergence over the validity interval.
    pub fn mean_divergence(&self) -> f64 {
        match &self.repr {
            FieldRepr::ClosedForm { a, .. } => *a,
            FieldRepr::Sampled { .. } => {
                (self.flux(self.r_out) - self.flux(self.r_in)) / volume(self.dim, self.r_in, self.r_out)
            }
        }
    }

    /// `∫ |div z|²` over `[r_in, r_out]`.
    pub fn div_norm_sq(&self) -> f64 {
        self.cell_divergence()
            .iter()
            .map(|&(a, b, d)| d * d * volume(self.dim, a, b))
            .sum()
    }

    /// `max |w|` on the validity interval and where it is attained.
    pub fn max_abs(&self) -> (f64, f64) {
        match &self.repr {
            FieldRepr::ClosedForm { a, c } => {
                let mut cands = vec![self.r_in, self.r_out];
                // interior critical point of a r/2 + c/r
                if self.dim == 2 && *a != 0.0 && c / a > 0.0 {
                    let r = (2.0 * c / a).sqrt();
                    if r > self.r_in && r < self.r_out {
                        cands.push(r);
                    }
                }
                cands
                    .into_iter()
                    .map(|r| (self.w(r).abs(), r))
                    .fold((f64::NEG_INFINITY, self.r_in), |m, x| if x.0 > m.0 { x } else { m })
            }
            FieldRepr::Sampled { nodes, w } => nodes
                .iter()
                .zip(w)
                .map(|(&r, &w)| (w.abs(), r))
                .fold((f64::NEG_INFINITY, self.r_in), |m, x| if x.0 > m.0 { x } else { m }),
        }
    }

    /// The field `z^k(y) = z(y / k)` on the dilated interval.
    pub fn dilated(&self, k: f64) -> Self {
        let repr = match &self.repr {
            FieldRepr::ClosedForm { a, c } => FieldRepr::ClosedForm {
                a: a / k,
                c: if self.dim == 1 { *c } else { c * k },
            },
            FieldRepr::Sampled { nodes, w } => FieldRepr::Sampled {
                nodes: nodes.iter().map(|r| r * k).collect(),
                w: w.clone(),
            },
        };
        RadialField {
            dim: self.dim,
            r_in: self.r_in * k,
            r_out: self.r_out * k,
            repr,
        }
    }

    pub fn negated(&self) -> Self {
        let repr = match &self.repr {
            FieldRepr::ClosedForm { a, c } => FieldRepr::ClosedForm { a: -a, c: -c },
            FieldRepr::Sampled { nodes, w } => FieldRepr::Sampled {
                nodes: nodes.clone(),
                w: w.iter().map(|x| -x).collect(),
            },
        };
        RadialField { repr, ..self.clone() }
    }

    /// Samples `w` at `m + 1` uniformly spaced points.
    pub fn to_sampled(&self, m: usize) -> Self {
        let nodes: Vec<f64> = (0..=m)
            .map(|k| self.r_in + (self.r_out - self.r_in) * k as f64 / m as f64)
            .collect();
        let w = nodes.iter().map(|&r| self.w(r)).collect();
        RadialField {
            dim: self.dim,
            r_in: self.r_in,
            r_out: self.r_out,
            repr: FieldRepr::Sampled { nodes, w },
        }
    }
}

pub(crate) fn interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[n - 1] {
        return ys[n - 1];
    }
    let k = xs.partition_point(|&p| p <= x).clamp(1, n - 1);
    let t = (x - xs[k - 1]) / (xs[k] - xs[k - 1]);
    ys[k - 1] + t * (ys[k] - ys[k - 1])
}
