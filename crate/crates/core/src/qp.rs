//! Box-constrained convex quadratic programs with a tridiagonal Hessian.
//!
//! Minimizes `½ xᵀHx + qᵀx` subject to `lo ≤ x ≤ hi` by projected Newton steps on the
//! free variables with a projected Armijo search. Variables with `lo == hi` are fixed.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct TridiagQp {
    /// Diagonal of `H`.
    pub diag: Vec<f64>,
    /// `off[i] = H[i][i+1] = H[i+1][i]`.
    pub off: Vec<f64>,
    pub q: Vec<f64>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct QpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    /// `‖x − P(x − ∇f)‖∞` at exit.
    pub residual: f64,
}

impl TridiagQp {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    fn mul(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut y = self.diag[i] * x[i];
                if i > 0 {
                    y += self.off[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    y += self.off[i] * x[i + 1];
                }
                y
            })
            .collect()
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        let hx = self.mul(x);
        x.iter().zip(&hx).zip(&self.q).map(|((x, h), q)| 0.5 * x * h + q * x).sum()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.mul(x).iter().zip(&self.q).map(|(h, q)| h + q).collect()
    }

    fn project(&self, x: &mut [f64]) {
        for (xi, (l, h)) in x.iter_mut().zip(self.lo.iter().zip(&self.hi)) {
            *xi = xi.clamp(*l, *h);
        }
    }

    fn proj_residual(&self, x: &[f64], g: &[f64]) -> f64 {
        (0..x.len())
            .map(|i| (x[i] - (x[i] - g[i]).clamp(self.lo[i], self.hi[i])).abs())
            .fold(0.0, f64::max)
    }

    pub fn solve(&self, x0: Option<&[f64]>, tol: f64, max_iter: usize) -> Result<QpSolution> {
        let n = self.len();
        if self.off.len() + 1 != n.max(1) || self.q.len() != n || self.lo.len() != n || self.hi.len() != n {
            return Err(Error::InvalidParam("inconsistent QP dimensions".into()));
        }
        if (0..n).any(|i| !(self.lo[i] <= self.hi[i])) {
            return Err(Error::Infeasible("empty box".into()));
        }
        let mut x: Vec<f64> = match x0 {
            Some(x0) => x0.to_vec(),
            None => (0..n).map(|i| 0.0f64.clamp(self.lo[i], self.hi[i])).collect(),
        };
        self.project(&mut x);
        let gscale = 1.0
            + self.q.iter().fold(0.0f64, |m, v| m.max(v.abs()))
            + self.diag.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut f = self.objective(&x);
        for it in 0..max_iter {
            let g = self.gradient(&x);
            let res = self.proj_residual(&x, &g);
            if res <= tol * gscale {
                return Ok(QpSolution {
                    x,
                    objective: f,
                    iterations: it,
                    residual: res,
                });
            }
            let eps = res.min(1e-3);
            let free: Vec<bool> = (0..n)
                .map(|i| {
                    let fixed = self.lo[i] == self.hi[i];
                    let at_lo = x[i] <= self.lo[i] + eps && g[i] > 0.0;
                    let at_hi = x[i] >= self.hi[i] - eps && g[i] < 0.0;
                    !(fixed || at_lo || at_hi)
                })
                .collect();
            let mut d = self.newton_direction(&g, &free)?;
            for i in 0..n {
                if !free[i] && self.lo[i] != self.hi[i] {
                    d[i] = -g[i] / self.diag[i].max(f64::MIN_POSITIVE);
                }
            }
            let mut alpha = 1.0;
            let mut accepted = false;
            for _ in 0..60 {
                let mut xn: Vec<f64> = x.iter().zip(&d).map(|(x, d)| x + alpha * d).collect();
                self.project(&mut xn);
                let fn_ = self.objective(&xn);
                let decrease: f64 = g.iter().zip(xn.iter().zip(&x)).map(|(g, (a, b))| g * (a - b)).sum();
                if fn_ <= f + 1e-4 * decrease || (fn_ - f).abs() <= 1e-15 * f.abs().max(1.0) && decrease == 0.0 {
                    x = xn;
                    f = fn_;
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if !accepted {
                // no progress possible at floating-point resolution
                let g = self.gradient(&x);
                let res = self.proj_residual(&x, &g);
                if res <= 1e3 * tol * gscale {
                    return Ok(QpSolution {
                        x,
                        objective: f,
                        iterations: it + 1,
                        residual: res,
                    });
                }
                return Err(Error::NotConverged {
                    iterations: it + 1,
                    residual: res,
                });
            }
        }
        let g = self.gradient(&x);
        let res = self.proj_residual(&x, &g);
        if res <= tol * gscale {
            Ok(QpSolution {
                x,
                objective: f,
                iterations: max_iter,
                residual: res,
            })
        } else {
            Err(Error::NotConverged {
                iterations: max_iter,
                residual: res,
            })
        }
    }

    /// Solves `H_FF d_F = -g_F` on the free set, `d = 0` elsewhere.
    fn newton_direction(&self, g: &[f64], free: &[bool]) -> Result<Vec<f64>> {
        let n = self.len();
        let mut d = vec![0.0; n];
        let mut i = 0;
        while i < n {
            if !free[i] {
                i += 1;
                continue;
            }
            let start = i;
            while i < n && free[i] {
                i += 1;
            }
            let diag = &self.diag[start..i];
            let off = &self.off[start..i - 1];
            let rhs: Vec<f64> = g[start..i].iter().map(|v| -v).collect();
            let sol = thomas(diag, off, &rhs)?;
            d[start..i].copy_from_slice(&sol);
        }
        Ok(d)
    }
}

/// Symmetric tridiagonal solve; fails on a non-positive pivot.
pub(crate) fn thomas(diag: &[f64], off: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut piv = diag[0];
    if !(piv > 0.0) {
        return Err(Error::Degenerate("singular quadratic form".into()));
    }
    d[0] = rhs[0] / piv;
    for i in 1..n {
        c[i - 1] = off[i - 1] / piv;
        piv = diag[i] - off[i - 1] * c[i - 1];
        if !(piv > 1e-300) {
            return Err(Error::Degenerate("singular quadratic form".into()));
        }
        d[i] = (rhs[i] - off[i - 1] * d[i - 1]) / piv;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Ok(d)
}
