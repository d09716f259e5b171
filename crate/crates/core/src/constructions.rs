//! Explicit window families used as sharpness witnesses: the radial bump η,
//! the periodic `w_β` with a single β-order zero, the compactly supported
//! `h_β` window and its tensor products.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fit::ScanSeries;
use crate::grid::{wrap_unit, SampleField, TorusGrid};
use crate::quad::{adaptive_simpson, integrate_with_breakpoints};

/// β-family parameters, 0 < β < 1.
#[derive(Debug, Clone, Copy)]
pub struct BetaParams {
    pub beta: f64,
    pub d: usize,
}

impl BetaParams {
    pub fn new(beta: f64, d: usize) -> Result<Self> {
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::Domain(format!("beta must lie in (0,1), got {beta}")));
        }
        if d != 1 && d != 2 {
            return Err(Error::Domain(format!("dimension must be 1 or 2, got {d}")));
        }
        Ok(Self { beta, d })
    }
}

fn exp_bump(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp()
    }
}

/// C^∞ step: 0 for u ≤ 0, 1 for u ≥ 1, strictly increasing in between.
fn smooth_step(u: f64) -> f64 {
    let a = exp_bump(u);
    let b = exp_bump(1.0 - u);
    a / (a + b)
}

/// Smooth radial bump: 1 on |x| ≤ 1/8, 0 on |x| ≥ 1/4, strictly between on
/// the transition annulus. The exact transition profile is the canonical
/// e^{−1/t} smooth step so every downstream number is reproducible.
pub fn bump_eta(x: &[f64]) -> f64 {
    let r = x.iter().map(|t| t * t).sum::<f64>().sqrt();
    if r <= 0.125 {
        1.0
    } else if r >= 0.25 {
        0.0
    } else {
        // map r ∈ [1/8, 1/4] onto u ∈ [1, 0]
        smooth_step((0.25 - r) / 0.125)
    }
}

/// Pointwise `w_β(x) = (1−η(x)) + η(x)|x|^β` on the fundamental cell, with
/// coordinates wrapped so the function is ℤ^d-periodic.
pub fn w_beta_at(beta: f64, x: &[f64]) -> f64 {
    let wrapped: Vec<f64> = x.iter().map(|&t| wrap_unit(t)).collect();
    let eta = bump_eta(&wrapped);
    let r = wrapped.iter().map(|t| t * t).sum::<f64>().sqrt();
    (1.0 - eta) + eta * r.powf(beta)
}

/// Samples `w_β` on a grid. `w_β(0) = 0` and `w_β > 0` elsewhere; identically
/// 1 outside the bump support.
pub fn w_beta_field(p: &BetaParams, grid: &TorusGrid) -> Result<SampleField> {
    if grid.dim() != p.d {
        return Err(Error::Incompatible(
            "grid dimension does not match BetaParams".into(),
        ));
    }
    let beta = p.beta;
    SampleField::from_real_fn(*grid, move |x| w_beta_at(beta, x))
}

/// The compactly supported window `h_β(x) = (1/2 − |x|)^{β/2}` on
/// [−1/2, 1/2], zero outside.
#[derive(Debug, Clone, Copy)]
pub struct HBeta {
    pub beta: f64,
}

impl HBeta {
    pub fn new(beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::Domain(format!("beta must lie in (0,1), got {beta}")));
        }
        Ok(Self { beta })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let a = x.abs();
        if a >= 0.5 {
            0.0
        } else {
            (0.5 - a).powf(0.5 * self.beta)
        }
    }

    /// Fourier transform ĥ_β(ξ) = 2∫_0^{1/2} cos(2πxξ)(1/2−x)^{β/2} dx by
    /// adaptive quadrature. The substitution v = 1/2 − x moves the endpoint
    /// singularity to v = 0 and the integral is split at v = 1/|ξ| so the
    /// adaptive rule resolves the singular panel separately from the
    /// oscillatory bulk.
    pub fn hat(&self, xi: f64) -> f64 {
        let xi = xi.abs();
        let half_beta = 0.5 * self.beta;
        let f = |v: f64| (2.0 * std::f64::consts::PI * xi * (0.5 - v)).cos() * v.powf(half_beta);
        // one panel per oscillation period; the first cut at v = 1/ξ also
        // isolates the singular panel. Without the panels the adaptive rule
        // aliases the oscillation and stops early with a wrong value.
        let mut splits = Vec::new();
        if xi > 2.0 {
            let periods = (0.5 * xi).floor() as usize;
            for k in 1..=periods {
                splits.push(k as f64 / xi);
            }
        }
        2.0 * integrate_with_breakpoints(&f, 0.0, 0.5, &splits, 1e-10)
    }

    /// |ĥ_β(ξ)|² sampled once on a uniform grid over [0, r_max]; every
    /// moment query then runs off the cache.
    pub fn hat_sq_profile(&self, r_max: f64, per_unit: usize) -> HatProfile {
        let step = 1.0 / per_unit as f64;
        let count = (r_max / step).ceil() as usize + 1;
        let h = *self;
        let values: Vec<f64> = (0..count)
            .into_par_iter()
            .map(|i| {
                let v = h.hat(i as f64 * step);
                v * v
            })
            .collect();
        HatProfile { step, values }
    }

    /// |ĥ_β|² averaged over one oscillation window [ξ, ξ+2); the pointwise
    /// transform oscillates under a ξ^{−2−β} envelope, and the window mean
    /// exposes the envelope exponent to a log-log fit.
    pub fn hat_sq_window_mean(&self, xi: f64, samples: usize) -> f64 {
        let vals: Vec<f64> = (0..samples)
            .into_par_iter()
            .map(|i| {
                let x = xi + 2.0 * i as f64 / samples as f64;
                let h = self.hat(x);
                h * h
            })
            .collect();
        vals.iter().sum::<f64>() / samples as f64
    }

    /// Scan of window-averaged |ĥ_β(ξ)|² over log-spaced ξ.
    pub fn decay_series(&self, xi_min: f64, xi_max: f64, n_points: usize) -> Result<ScanSeries> {
        let pts: Vec<(f64, f64)> = (0..n_points)
            .map(|i| {
                let t = i as f64 / (n_points - 1) as f64;
                let xi = xi_min * (xi_max / xi_min).powf(t);
                (xi, self.hat_sq_window_mean(xi, 32))
            })
            .collect();
        ScanSeries::new(format!("hbeta_decay_b{}", self.beta), pts)
    }

    /// ĥ_β at integer frequencies 0..=k_max. These are the Fourier
    /// coefficients of the ℤ-periodization of h_β.
    pub fn hat_at_integers(&self, k_max: usize) -> Vec<f64> {
        (0..=k_max)
            .into_par_iter()
            .map(|k| self.hat(k as f64))
            .collect()
    }
}

/// Cached |ĥ_β|² samples on a uniform grid; composite Simpson gives the
/// one-dimensional moments every tensor localization query factors into.
#[derive(Debug, Clone)]
pub struct HatProfile {
    step: f64,
    values: Vec<f64>,
}

impl HatProfile {
    /// m_t(R) = ∫_{|u|≤R} |u|^t |ĥ(u)|² du.
    pub fn moment(&self, t: f64, r: f64) -> f64 {
        let m = ((r / self.step).floor() as usize).min(self.values.len() - 1);
        let m = m - m % 2;
        if m < 2 {
            return 0.0;
        }
        let mut acc = 0.0;
        for i in 0..=m {
            let w = if i == 0 || i == m {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            let xi = i as f64 * self.step;
            acc += w * xi.powf(t) * self.values[i];
        }
        2.0 * acc * self.step / 3.0
    }
}

/// Separable product `F_β(x) = h_β(x_1)⋯h_β(x_d)`.
#[derive(Debug, Clone, Copy)]
pub struct TensorBeta {
    pub h: HBeta,
    pub d: usize,
}

/// Builds the tensor window; for d = 1 this is `h_β` itself.
pub fn tensor_f_beta(beta: f64, d: usize) -> Result<TensorBeta> {
    if d != 1 && d != 2 {
        return Err(Error::Domain(format!("dimension must be 1 or 2, got {d}")));
    }
    Ok(TensorBeta {
        h: HBeta::new(beta)?,
        d,
    })
}

impl TensorBeta {
    pub fn eval(&self, x: &[f64]) -> f64 {
        x[..self.d].iter().map(|&t| self.h.eval(t)).product()
    }

    pub fn hat(&self, xi: &[f64]) -> f64 {
        xi[..self.d].iter().map(|&t| self.h.hat(t)).product()
    }

    /// Frequency-side localization mass ∫_{|ξ_i|≤R} (Σ_i |ξ_i|^t) Π_i |ĥ(ξ_i)|² dξ,
    /// evaluated through the coordinate factorization
    /// Σ_i m_t(R) · m_0(R)^{d−1} with m_t(R) = ∫_{|u|≤R} |u|^t |ĥ(u)|² du.
    /// The additive weight is equivalent to |ξ|^t up to d-dependent constants
    /// and keeps the integral exactly separable.
    pub fn freq_localization_factored(&self, t: f64, r: f64) -> f64 {
        let m_t = self.moment_1d(t, r);
        let m_0 = self.moment_1d(0.0, r);
        self.d as f64 * m_t * m_0.powi(self.d as i32 - 1)
    }

    /// One-dimensional moment ∫_{|u|≤R} |u|^t |ĥ_β(u)|² du.
    pub fn moment_1d(&self, t: f64, r: f64) -> f64 {
        let h = self.h;
        let f = move |u: f64| {
            let v = h.hat(u);
            u.abs().powf(t) * v * v
        };
        // integrand is even; panel per unit keeps the oscillation resolved
        let mut total = 0.0;
        let mut a = 0.0;
        while a < r {
            let b = (a + 1.0).min(r);
            total += adaptive_simpson(&f, a, b, 1e-10);
            a = b;
        }
        2.0 * total
    }

    /// Same localization mass by direct tensor-product quadrature; used to
    /// check the factorization identity.
    pub fn freq_localization_direct(&self, t: f64, r: f64, panels: usize) -> f64 {
        assert_eq!(self.d, 2, "direct route implemented for d = 2");
        // cache the 1-d transform on a Simpson grid
        let m = 2 * panels;
        let h = (2.0 * r) / m as f64;
        let nodes: Vec<f64> = (0..=m).map(|i| -r + i as f64 * h).collect();
        let hat: Vec<f64> = nodes.par_iter().map(|&u| self.h.hat(u)).collect();
        let weight = |i: usize| -> f64 {
            if i == 0 || i == m {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            }
        };
        let mut total = 0.0;
        for i in 0..=m {
            for j in 0..=m {
                let (u, v) = (nodes[i], nodes[j]);
                let w = weight(i) * weight(j);
                let f = (u.abs().powf(t) + v.abs().powf(t)) * hat[i] * hat[i] * hat[j] * hat[j];
                total += w * f;
            }
        }
        total * h * h / 9.0
    }

    /// R-scan of the frequency localization mass, for divergence
    /// classification. The transform is sampled once for the largest radius.
    pub fn freq_localization_series(&self, t: f64, rs: &[f64]) -> Result<ScanSeries> {
        let r_max = rs.iter().cloned().fold(0.0f64, f64::max);
        let profile = self.h.hat_sq_profile(r_max, 32);
        let pts: Vec<(f64, f64)> = rs
            .iter()
            .map(|&r| {
                let m_t = profile.moment(t, r);
                let m_0 = profile.moment(0.0, r);
                (r, self.d as f64 * m_t * m_0.powi(self.d as i32 - 1))
            })
            .collect();
        ScanSeries::new(format!("tensor_loc_t{t}"), pts)
    }
}

/// Riemann sums of ∫ |1/w_β|^{2q/(q−2)} over refining grids, excluding the
/// single cell containing the zero (principal-value convention). Divergence
/// of this scan decides the integrability side of the multiplier threshold.
pub fn inv_power_integral_scan(beta: f64, q: f64, ns: &[usize]) -> Result<ScanSeries> {
    if !(q > 2.0) {
        return Err(Error::Domain(format!(
            "integrability scan needs q > 2, got {q}"
        )));
    }
    let p = BetaParams::new(beta, 1)?;
    let expo = 2.0 * q / (q - 2.0);
    let pts: Vec<(f64, f64)> = ns
        .iter()
        .map(|&n| {
            let grid = TorusGrid::new(1, n)?;
            let w = w_beta_field(&p, &grid)?;
            let zero_idx = grid.nearest_index(&[0.0]);
            let sum: f64 = w
                .values()
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != zero_idx)
                .map(|(_, v)| v.norm().powf(-expo))
                .sum();
            Ok((n as f64, sum / n as f64))
        })
        .collect::<Result<_>>()?;
    ScanSeries::new(format!("inv_power_b{beta}_q{q}"), pts)
}
