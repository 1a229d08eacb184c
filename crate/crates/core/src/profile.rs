//! Monotone initial profiles `u0(r)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::interp;
use crate::geometry::{Chi, DomainSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Profile {
    Constant {
        value: f64,
    },
    /// `intercept + slope · r`.
    Ramp { slope: f64, intercept: f64 },
    /// A ramp clamped to `[lo, hi]`, giving flat pieces at either end.
    ClampedRamp {
        slope: f64,
        #[serde(default)]
        intercept: f64,
        #[serde(default)]
        lo: Option<f64>,
        #[serde(default)]
        hi: Option<f64>,
    },
    /// Piecewise linear through the given samples.
    Tabulated { r: Vec<f64>, u: Vec<f64> },
}

impl Profile {
    pub fn validate(&self) -> Result<()> {
        match self {
            Profile::Constant { value } if !value.is_finite() => Err(Error::InvalidInit("non-finite constant".into())),
            Profile::Ramp { slope, intercept } if !(slope.is_finite() && intercept.is_finite()) => {
                Err(Error::InvalidInit("non-finite ramp".into()))
            }
            Profile::ClampedRamp { slope, lo, hi, .. } => {
                if !slope.is_finite() || *slope == 0.0 {
                    return Err(Error::InvalidInit("clamped ramp needs a finite nonzero slope".into()));
                }
                if let (Some(l), Some(h)) = (lo, hi) {
                    if !(l < h) {
                        return Err(Error::InvalidInit(format!("clamp bounds need lo < hi, got {l}, {h}")));
                    }
                }
                Ok(())
            }
            Profile::Tabulated { r, u } => {
                if r.len() != u.len() || r.len() < 2 {
                    return Err(Error::InvalidInit("tabulated profile needs matching r and u of length >= 2".into()));
                }
                if r.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::InvalidInit("tabulated r must be strictly increasing".into()));
                }
                if u.iter().any(|x| !x.is_finite()) {
                    return Err(Error::InvalidInit("tabulated u must be finite".into()));
                }
                let ups = u.windows(2).any(|w| w[1] > w[0]);
                let downs = u.windows(2).any(|w| w[1] < w[0]);
                if ups && downs {
                    return Err(Error::NonMonotone("tabulated profile is not monotone".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn value(&self, r: f64) -> f64 {
        match self {
            Profile::Constant { value } => *value,
            Profile::Ramp { slope, intercept } => intercept + slope * r,
            Profile::ClampedRamp { slope, intercept, lo, hi } => {
                let mut x = intercept + slope * r;
                if let Some(l) = lo {
                    x = x.max(*l);
                }
                if let Some(h) = hi {
                    x = x.min(*h);
                }
                x
            }
            Profile::Tabulated { r: rs, u } => interp(rs, u, r),
        }
    }

    /// `u0'(r)`: exact for closed forms (one-sided at kinks, towards larger r),
    /// centered differences with step `1e-6 · scale` for tabulated data.
    pub fn derivative(&self, r: f64) -> f64 {
        match self {
            Profile::Constant { .. } => 0.0,
            Profile::Ramp { slope, .. } => *slope,
            Profile::ClampedRamp { slope, intercept, lo, hi } => {
                let x = intercept + slope * r;
                let below = lo.is_some_and(|l| x <= l);
                let above = hi.is_some_and(|h| x >= h);
                if below || above {
                    0.0
                } else {
                    *slope
                }
            }
            Profile::Tabulated { r: rs, .. } => {
                let scale = rs[rs.len() - 1].abs().max(rs[0].abs()).max(1.0);
                let h = 1e-6 * scale;
                (self.value(r + h) - self.value(r - h)) / (2.0 * h)
            }
        }
    }

    /// `∫_a^b u0(r) dr`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        match self {
            Profile::Constant { value } => value * (b - a),
            Profile::Ramp { slope, intercept } => intercept * (b - a) + 0.5 * slope * (b * b - a * a),
            Profile::ClampedRamp { slope, intercept, lo, hi } => {
                let mut knots = vec![a, b];
                for c in [lo, hi].into_iter().flatten() {
                    let k = (c - intercept) / slope;
                    if k > a && k < b {
                        knots.push(k);
                    }
                }
                knots.sort_by(f64::total_cmp);
                knots.windows(2).map(|w| 0.5 * (w[1] - w[0]) * (self.value(w[0]) + self.value(w[1]))).sum()
            }
            Profile::Tabulated { r, .. } => {
                let mut knots: Vec<f64> = r.iter().copied().filter(|&x| x > a && x < b).collect();
                knots.push(a);
                knots.push(b);
                knots.sort_by(f64::total_cmp);
                knots.windows(2).map(|w| 0.5 * (w[1] - w[0]) * (self.value(w[0]) + self.value(w[1]))).sum()
            }
        }
    }

    /// `∫_a^b r u0(r) dr`.
    pub fn moment(&self, a: f64, b: f64) -> f64 {
        let mut knots = vec![a, b];
        match self {
            Profile::ClampedRamp { slope, intercept, lo, hi } => {
                for c in [lo, hi].into_iter().flatten() {
                    let k = (c - intercept) / slope;
                    if k > a && k < b {
                        knots.push(k);
                    }
                }
            }
            Profile::Tabulated { r, .. } => knots.extend(r.iter().copied().filter(|&x| x > a && x < b)),
            _ => {}
        }
        knots.sort_by(f64::total_cmp);
        // u0 is affine between knots, so Simpson's rule is exact
        knots
            .windows(2)
            .map(|w| {
                let m = 0.5 * (w[0] + w[1]);
                (w[1] - w[0]) / 6.0 * (w[0] * self.value(w[0]) + 4.0 * m * self.value(m) + w[1] * self.value(w[1]))
            })
            .sum()
    }

    /// Values on the grid nodes.
    pub fn sample(&self, domain: &DomainSpec) -> Vec<f64> {
        domain.nodes().iter().map(|&r| self.value(r)).collect()
    }

    /// Orientation on `[a, b]`; `None` for a constant profile.
    pub fn chi_on(&self, a: f64, b: f64) -> Option<Chi> {
        Chi::from_sign(self.value(b) - self.value(a))
    }

    /// The flat pieces touching `a` and `b`: the largest `p` with `u0 = u0(a)` on `[a, p]` and
    /// the smallest `q` with `u0 = u0(b)` on `[q, b]`.
    pub fn end_plateaus(&self, a: f64, b: f64) -> (f64, f64) {
        match self {
            Profile::Constant { .. } => (b, a),
            Profile::Ramp { .. } => (a, b),
            Profile::ClampedRamp { slope, intercept, lo, hi } => {
                let knot = |c: &Option<f64>| c.map(|c| (c - intercept) / slope);
                let (k_lo, k_hi) = (knot(lo), knot(hi));
                // the clamp hit at small r depends on the orientation
                let (left, right) = if *slope > 0.0 { (k_lo, k_hi) } else { (k_hi, k_lo) };
                let p = left.map_or(a, |k| k.clamp(a, b));
                let q = right.map_or(b, |k| k.clamp(a, b));
                (p, q)
            }
            Profile::Tabulated { r, u } => {
                let ua = self.value(a);
                let ub = self.value(b);
                let mut p = a;
                for (&x, &y) in r.iter().zip(u) {
                    if x <= a {
                        continue;
                    }
                    if x > b || y != ua {
                        break;
                    }
                    p = x;
                }
                let mut q = b;
                for (&x, &y) in r.iter().zip(u).rev() {
                    if x >= b {
                        continue;
                    }
                    if x < a || y != ub {
                        break;
                    }
                    q = x;
                }
                (p, q)
            }
        }
    }

    pub fn negated(&self) -> Profile {
        match self {
            Profile::Constant { value } => Profile::Constant { value: -value },
            Profile::Ramp { slope, intercept } => Profile::Ramp {
                slope: -slope,
                intercept: -intercept,
            },
            Profile::ClampedRamp { slope, intercept, lo, hi } => Profile::ClampedRamp {
                slope: -slope,
                intercept: -intercept,
                lo: hi.map(|h| -h),
                hi: lo.map(|l| -l),
            },
            Profile::Tabulated { r, u } => Profile::Tabulated {
                r: r.clone(),
                u: u.iter().map(|x| -x).collect(),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn clamped_ramp_plateaus() {
        let p = Profile::ClampedRamp {
            slope: 1.0,
            intercept: 0.0,
            lo: None,
            hi: Some(0.5),
        };
        assert_eq!(p.value(0.7), 0.5);
        assert_eq!(p.end_plateaus(0.0, 1.0), (0.0, 0.5));
        assert_eq!(p.derivative(0.25), 1.0);
        assert_eq!(p.derivative(0.75), 0.0);
        assert_abs_diff_eq!(p.integral(0.0, 1.0), 0.125 + 0.25, epsilon = 1e-15);
        let n = p.negated();
        assert_eq!(n.value(0.7), -0.5);
        assert_eq!(n.end_plateaus(0.0, 1.0), (0.0, 0.5));
        let q = Profile::ClampedRamp {
            slope: 1.0,
            intercept: -1.0,
            lo: Some(0.0),
            hi: None,
        };
        assert_eq!(q.end_plateaus(0.5, 4.0), (1.0, 4.0));
    }

    #[test]
    fn tabulated_profile() {
        let p = Profile::Tabulated {
            r: vec![0.0, 0.5, 1.0, 2.0],
            u: vec![0.0, 0.0, 1.0, 1.0],
        };
        p.validate().unwrap();
        assert_eq!(p.end_plateaus(0.0, 2.0), (0.5, 1.0));
        assert_abs_diff_eq!(p.derivative(0.75), 2.0, epsilon = 1e-8);
        assert_abs_diff_eq!(p.integral(0.0, 2.0), 1.25, epsilon = 1e-15);
        assert_abs_diff_eq!(p.moment(0.0, 2.0), 1.5 + 5.0 / 24.0, epsilon = 1e-14);
        let bad = Profile::Tabulated {
            r: vec![0.0, 1.0, 2.0],
            u: vec![0.0, 1.0, 0.0],
        };
        assert!(matches!(bad.validate(), Err(Error::NonMonotone(_))));
    }
}
