//! Discrete Zak transform, quasi-periodicity diagnostics, weighted-exponential
//! completeness constants for Gabor systems, and time–frequency localization
//! scans.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fit::{loglog_fit, ExponentFit, ScanSeries};
use crate::grid::{analyze, FreqBox, SampleField, TorusGrid};
use crate::multiplier::chi_box_coeffs;
use crate::norms::{gram_cq_core, lp_of, NormOptions};
use crate::quad::integrate_with_breakpoints;

type C64 = Complex64;

/// A window on the real line with a decay certificate: |g| < 1e−12 outside
/// [−T, T]. `fhat` carries the Fourier transform when one is available in
/// closed or quadrature form; frequency-side scans require it.
#[derive(Clone)]
pub struct GaborWindow {
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    fhat: Option<Arc<dyn Fn(f64) -> f64 + Send + Sync>>,
    support_radius: f64,
    breakpoints: Vec<f64>,
}

impl std::fmt::Debug for GaborWindow {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GaborWindow")
            .field("support_radius", &self.support_radius)
            .finish()
    }
}

pub const TAIL_TOL: f64 = 1e-12;

impl GaborWindow {
    pub fn new(f: impl Fn(f64) -> f64 + Send + Sync + 'static, support_radius: f64) -> Self {
        Self {
            f: Arc::new(f),
            fhat: None,
            support_radius,
            breakpoints: Vec::new(),
        }
    }

    pub fn with_transform(mut self, fhat: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.fhat = Some(Arc::new(fhat));
        self
    }

    /// Declares interior kinks/jumps so quadrature panels never straddle them.
    pub fn with_breakpoints(mut self, pts: Vec<f64>) -> Self {
        self.breakpoints = pts;
        self
    }

    /// Standard Gaussian e^{−πx²}; self-dual under the Fourier transform.
    pub fn gaussian() -> Self {
        Self::new(|x| (-PI * x * x).exp(), 6.0).with_transform(|xi| (-PI * xi * xi).exp())
    }

    /// χ_{[0,1)}; its Zak transform is identically 1.
    pub fn unit_indicator() -> Self {
        Self::new(|x| if (0.0..1.0).contains(&x) { 1.0 } else { 0.0 }, 1.0)
            .with_breakpoints(vec![0.0, 1.0])
    }

    /// h_β window; compactly supported, transform via adaptive quadrature.
    pub fn from_hbeta(beta: f64) -> Result<Self> {
        let h = crate::constructions::HBeta::new(beta)?;
        let hh = h;
        Ok(Self::new(move |x| h.eval(x), 0.5)
            .with_transform(move |xi| hh.hat(xi))
            .with_breakpoints(vec![-0.5, 0.5]))
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    pub fn has_transform(&self) -> bool {
        self.fhat.is_some()
    }

    pub fn eval_hat(&self, xi: f64) -> Result<f64> {
        match &self.fhat {
            Some(g) => Ok(g(xi)),
            None => Err(Error::Precondition(
                "window has no Fourier transform attached".into(),
            )),
        }
    }

    /// Largest |g| sampled beyond the declared support.
    pub fn tail_excess(&self) -> f64 {
        let t = self.support_radius;
        let mut worst = 0.0f64;
        for i in 0..256 {
            let x = t + 2.0 * (i as f64 + 0.5) / 256.0;
            worst = worst.max(self.eval(x).abs()).max(self.eval(-x).abs());
        }
        worst
    }

    /// Declared breakpoints plus the unit lattice inside [−lim, lim]; unit
    /// panels stop the adaptive rule from stepping over narrow features.
    fn cuts(&self, lim: f64) -> Vec<f64> {
        let mut cuts = self.breakpoints.clone();
        let mut k = (-lim).ceil();
        while k <= lim {
            cuts.push(k);
            k += 1.0;
        }
        cuts
    }

    /// ‖g‖_{L²(ℝ)} by quadrature over the certified support.
    pub fn l2_norm(&self) -> f64 {
        let f = self.f.clone();
        let g = move |x: f64| {
            let v = f(x);
            v * v
        };
        let lim = self.support_radius;
        integrate_with_breakpoints(&g, -lim, lim, &self.cuts(lim), 1e-12).sqrt()
    }

    /// ∫_{|x|≤R} |x|^t |g(x)|² dx on the chosen side (time uses g, frequency
    /// uses ĝ).
    pub fn localization_integral(&self, side: Side, t: f64, r: f64) -> Result<f64> {
        if !(t >= 0.0) || !(r > 0.0) {
            return Err(Error::Domain(format!(
                "need t ≥ 0, R > 0, got t={t}, R={r}"
            )));
        }
        match side {
            Side::Time => {
                let f = self.f.clone();
                let g = move |x: f64| {
                    let v = f(x);
                    x.abs().powf(t) * v * v
                };
                let lim = r.min(self.support_radius);
                Ok(integrate_with_breakpoints(
                    &g,
                    -lim,
                    lim,
                    &self.cuts(lim),
                    1e-11,
                ))
            }
            Side::Frequency => {
                let fh = self.fhat.clone().ok_or_else(|| {
                    Error::Precondition("window has no Fourier transform attached".into())
                })?;
                // integrate per unit panel so the oscillatory transform stays
                // resolved; the integrand is even for the real windows here
                let g = move |x: f64| {
                    let v = fh(x);
                    x.abs().powf(t) * v * v
                };
                let mut total = 0.0;
                let mut a = 0.0;
                while a < r {
                    let b = (a + 1.0).min(r);
                    total += crate::quad::adaptive_simpson(&g, a, b, 1e-11);
                    a = b;
                }
                Ok(2.0 * total)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Side {
    Time,
    Frequency,
}

/// Sampled Zak transform on [0,1)² at M points per unit, with one extra
/// period retained in each variable for the quasi-periodicity residuals.
/// Samples sit at midpoints (i+1/2)/M so that dyadic lattice points; where
/// quasi-periodicity forces structural zeros; never land on the grid.
#[derive(Debug, Clone)]
pub struct ZakField {
    m: usize,
    /// values on the extended grid {(i+1/2)/M}_{i<2M} × {(j+1/2)/M}_{j<2M}
    values: Vec<C64>,
    window_l2: f64,
}

/// Truncated Zak sum Zg(x,y) = Σ_{|k| ≤ ⌈T⌉+1} g(x−k) e^{2πiky}; errors if the
/// sampled tail exceeds the certificate tolerance.
pub fn zak_transform(g: &GaborWindow, m: usize) -> Result<ZakField> {
    let excess = g.tail_excess();
    if excess > TAIL_TOL {
        return Err(Error::DecayCertificate(format!(
            "window tail {excess:.3e} exceeds {TAIL_TOL:.0e}; enlarge the support radius"
        )));
    }
    zak_transform_unchecked(g, m)
}

/// Same as [`zak_transform`] without the tail check; negative controls only.
pub fn zak_transform_unchecked(g: &GaborWindow, m: usize) -> Result<ZakField> {
    if m < 4 || !m.is_power_of_two() {
        return Err(Error::Domain(format!(
            "M must be a power of two >= 4, got {m}"
        )));
    }
    let kmax = g.support_radius().ceil() as i64 + 1;
    let side = 2 * m;
    let values: Vec<C64> = (0..side * side)
        .into_par_iter()
        .map(|flat| {
            let i = flat / side;
            let j = flat % side;
            let x = (i as f64 + 0.5) / m as f64;
            let y = (j as f64 + 0.5) / m as f64;
            let mut acc = C64::new(0.0, 0.0);
            for k in -kmax..=kmax {
                let gv = g.eval(x - k as f64);
                if gv != 0.0 {
                    acc += C64::from_polar(gv.abs(), 2.0 * PI * k as f64 * y)
                        * if gv < 0.0 { -1.0 } else { 1.0 };
                }
            }
            acc
        })
        .collect();
    Ok(ZakField {
        m,
        values,
        window_l2: g.l2_norm(),
    })
}

impl ZakField {
    pub fn m(&self) -> usize {
        self.m
    }

    /// Zg at (i/M, j/M) for 0 ≤ i, j < 2M.
    pub fn value(&self, i: usize, j: usize) -> C64 {
        self.values[i * 2 * self.m + j]
    }

    /// ‖Zg‖_{L²([0,1]²)} by Riemann sum over the core block.
    pub fn l2_core(&self) -> f64 {
        let m = self.m;
        let mut total = 0.0;
        for i in 0..m {
            for j in 0..m {
                total += self.value(i, j).norm_sqr();
            }
        }
        (total / (m * m) as f64).sqrt()
    }

    /// |‖Zg‖_{L²([0,1]²)} − ‖g‖_{L²(ℝ)}|: the unitarity defect.
    pub fn unitarity_defect(&self) -> f64 {
        (self.l2_core() - self.window_l2).abs()
    }

    /// Max over the core block of the two quasi-periodicity residuals
    /// |Zg(x+1,y) − e^{2πiy}Zg(x,y)| and |Zg(x,y+1) − Zg(x,y)|.
    pub fn quasi_periodicity_residual(&self) -> f64 {
        let m = self.m;
        let mut worst = 0.0f64;
        for i in 0..m {
            for j in 0..m {
                let y = (j as f64 + 0.5) / m as f64;
                let a =
                    self.value(i + m, j) - self.value(i, j) * C64::from_polar(1.0, 2.0 * PI * y);
                let b = self.value(i, j + m) - self.value(i, j);
                worst = worst.max(a.norm()).max(b.norm());
            }
        }
        worst
    }

    /// Max over the core block of ||Zg(x+1,y)| − |Zg(x,y)||.
    pub fn modulus_periodicity_residual(&self) -> f64 {
        let m = self.m;
        let mut worst = 0.0f64;
        for i in 0..m {
            for j in 0..m {
                worst = worst.max((self.value(i + m, j).norm() - self.value(i, j).norm()).abs());
            }
        }
        worst
    }

    /// Minimum modulus over the core block and its cell.
    pub fn min_modulus(&self) -> (f64, (usize, usize)) {
        let m = self.m;
        let mut best = f64::INFINITY;
        let mut cell = (0, 0);
        for i in 0..m {
            for j in 0..m {
                let v = self.value(i, j).norm();
                if v < best {
                    best = v;
                    cell = (i, j);
                }
            }
        }
        (best, cell)
    }

    /// Cells where |Zg| is below 10× the grid modulus-of-continuity estimate;
    /// zero *candidates*, never exact zero locations.
    pub fn zero_candidates(&self) -> Vec<(usize, usize)> {
        let m = self.m;
        let mut moc = 0.0f64;
        for i in 0..m {
            for j in 0..m {
                let v = self.value(i, j);
                moc = moc
                    .max((self.value(i + 1, j) - v).norm())
                    .max((self.value(i, j + 1) - v).norm());
            }
        }
        let thresh = 10.0 * moc;
        let mut cells = Vec::new();
        for i in 0..m {
            for j in 0..m {
                if self.value(i, j).norm() < thresh {
                    cells.push((i, j));
                }
            }
        }
        cells
    }

    /// Weight |Zg|² as a sample field on the unit torus chart. The midpoint
    /// sampling offset twists each Fourier coefficient by a unimodular phase,
    /// which conjugates the exponential Gram matrix by a diagonal unitary and
    /// leaves every completeness constant unchanged.
    pub fn weight_field(&self) -> Result<SampleField> {
        let grid = TorusGrid::new(2, self.m)?;
        let m = self.m;
        let values = (0..m * m)
            .map(|flat| C64::new(self.value(flat / m, flat % m).norm_sqr(), 0.0))
            .collect();
        SampleField::new(grid, values)
    }
}

/// Weighted-exponential completeness constant on a truncated box: the best D
/// in D‖f̂‖_{ℓ^q} ≤ ‖f‖_{L²_w} over trig polynomials with spectrum in the box,
/// w = |Zg|². `d_best` inverts the mixed-norm ascent on G^{−1/2}; `d_family`
/// evaluates the cube-indicator witness family directly (certified upper
/// bounds for D, since D is an infimum).
#[derive(Debug, Clone, Serialize)]
pub struct CqEstimate {
    pub q: f64,
    pub box_half_width: usize,
    pub d_best: f64,
    pub d_family: f64,
    pub gram_min_eigenvalue: f64,
    pub floored_eigenvalues: usize,
}

/// Builds the Gram matrix G_{k,k'} = ŵ(k − k') of the exponentials under the
/// weight and estimates D = 1/‖G^{−1/2}‖_{ℓ²→ℓ^q}.
pub fn weighted_cq_constant(
    weight: &SampleField,
    q: f64,
    box_half_width: usize,
    opts: &NormOptions,
) -> Result<CqEstimate> {
    if !(q >= 2.0) {
        return Err(Error::Domain(format!(
            "completeness constant needs q >= 2, got {q}"
        )));
    }
    let grid = weight.grid();
    if weight.max_abs() < 1e-10 {
        return Err(Error::DegenerateWeight("weight is numerically zero".into()));
    }
    let d = grid.dim();
    let fb = FreqBox::new(d, box_half_width)?;
    let diff_box = FreqBox::new(d, 2 * box_half_width)?;
    if diff_box.side() > grid.n() {
        return Err(Error::Precondition(format!(
            "weight grid n={} cannot resolve the difference box {}",
            grid.n(),
            diff_box.side()
        )));
    }
    let what = analyze(weight, &diff_box)?;
    let dim = fb.len();
    let gram = DMatrix::from_fn(dim, dim, |r, c| {
        let k = fb.index(r);
        let kp = fb.index(c);
        let diff = [k[0] - kp[0], k[1] - kp[1]];
        what.coeff(&diff[..d])
    });
    let core = gram_cq_core(&gram, q, opts)?;
    // witness family pushed through the weighted form directly
    let mut d_family = f64::INFINITY;
    for j in 2..=8 {
        let tau = 2f64.powi(-j);
        let chi = chi_box_coeffs(tau, &fb)?;
        let a = DVector::from_column_slice(chi.coeffs());
        let qa = lp_of(&a, q);
        if qa == 0.0 {
            continue;
        }
        let energy = (&gram * &a).dotc(&a).re.max(0.0);
        d_family = d_family.min(energy.sqrt() / qa);
    }
    // basis witnesses: ratio sqrt(G_kk)/1 = sqrt(ŵ(0)), same for every k
    let basis_ratio = what.coeff(&[0i64, 0][..d]).re.max(0.0).sqrt();
    d_family = d_family.min(basis_ratio);
    Ok(CqEstimate {
        q,
        box_half_width,
        d_best: core.d_best,
        d_family,
        gram_min_eigenvalue: core.gram_min_eigenvalue,
        floored_eigenvalues: core.floored_eigenvalues,
    })
}

/// Gabor completeness constant for the window itself (weight |Zg|²).
pub fn gabor_cq_constant(
    g: &GaborWindow,
    q: f64,
    box_half_width: usize,
    m: usize,
    opts: &NormOptions,
) -> Result<CqEstimate> {
    let z = zak_transform(g, m)?;
    weighted_cq_constant(&z.weight_field()?, q, box_half_width, opts)
}

/// Box-growth scan of the completeness constant with its fitted slope.
#[derive(Debug, Clone, Serialize)]
pub struct CqScanReport {
    pub q: f64,
    pub series: ScanSeries,
    pub fit: ExponentFit,
    /// true when the constant decays to zero under box growth
    pub degenerates: bool,
}

pub fn gabor_cq_scan(
    g: &GaborWindow,
    q: f64,
    box_half_widths: &[usize],
    m: usize,
    opts: &NormOptions,
) -> Result<CqScanReport> {
    let z = zak_transform(g, m)?;
    let weight = z.weight_field()?;
    let pts: Vec<(f64, f64)> = box_half_widths
        .iter()
        .map(|&n| {
            let est = weighted_cq_constant(&weight, q, n, opts)?;
            Ok((n as f64, est.d_best))
        })
        .collect::<Result<_>>()?;
    let series = ScanSeries::new(format!("gabor_cq_q{q}"), pts)?;
    let fit = loglog_fit(&series)?;
    Ok(CqScanReport {
        q,
        degenerates: fit.slope < -crate::fit::SLOPE_TOL,
        series,
        fit,
    })
}

/// One row of the Balian–Low localization scan over the (r_exp, t_exp) plane.
#[derive(Debug, Clone, Serialize)]
pub struct BltRow {
    pub r_exp: f64,
    pub t_exp: f64,
    pub time_verdict: crate::fit::Verdict,
    pub freq_verdict: crate::fit::Verdict,
    pub both_finite: bool,
    /// 1/r + 1/t vs q′/2: true when the pair lies strictly inside the region
    /// the uncertainty principle leaves admissible for exact (C_q) systems.
    pub admissible_for_q: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct BltReport {
    pub q: f64,
    pub rows: Vec<BltRow>,
    /// true when every both-finite pair is admissible; no scanned pair
    /// contradicts the boundary
    pub consistent: bool,
}

/// Cached |ĝ(ξ)|² samples on a uniform composite-Simpson grid over [0, R];
/// one parallel pass over the (expensive) transform evaluations serves every
/// (t, R) localization query.
pub struct FreqProfile {
    step: f64,
    values: Vec<f64>,
}

impl FreqProfile {
    pub fn build(g: &GaborWindow, r_max: f64, per_unit: usize) -> Result<Self> {
        if !g.has_transform() {
            return Err(Error::Precondition(
                "window has no Fourier transform attached".into(),
            ));
        }
        let step = 1.0 / per_unit as f64;
        let count = (r_max / step).ceil() as usize + 1;
        let values: Vec<f64> = (0..count)
            .into_par_iter()
            .map(|i| {
                let v = g.eval_hat(i as f64 * step).unwrap_or(0.0);
                v * v
            })
            .collect();
        Ok(Self { step, values })
    }

    /// 2 ∫_0^R |ξ|^t |ĝ(ξ)|² dξ by composite Simpson on the cached grid.
    pub fn integral(&self, t: f64, r: f64) -> f64 {
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

/// R-growth series of a localization integral. The frequency side samples
/// the transform once on a shared grid; the time side integrates directly
/// (the support certificate bounds it).
pub fn localization_series(
    g: &GaborWindow,
    side: Side,
    t: f64,
    radii: &[f64],
) -> Result<ScanSeries> {
    let pts: Vec<(f64, f64)> = match side {
        Side::Time => radii
            .iter()
            .map(|&r| Ok((r, g.localization_integral(side, t, r)?)))
            .collect::<Result<_>>()?,
        Side::Frequency => {
            let r_max = radii.iter().cloned().fold(0.0f64, f64::max);
            let profile = FreqProfile::build(g, r_max, 32)?;
            radii.iter().map(|&r| (r, profile.integral(t, r))).collect()
        }
    };
    ScanSeries::new(format!("localization_{side:?}_t{t}"), pts)
}

/// Classifies localization finiteness over an exponent grid and compares the
/// finite region against the 1/r + 1/t = q′/2 boundary.
pub fn blt_scan(g: &GaborWindow, q: f64, pairs: &[(f64, f64)], radii: &[f64]) -> Result<BltReport> {
    if !(q > 1.0) {
        return Err(Error::Domain(format!("blt scan needs q > 1, got {q}")));
    }
    let qp = q / (q - 1.0);
    let r_max = radii.iter().cloned().fold(0.0f64, f64::max);
    let profile = FreqProfile::build(g, r_max, 32)?;
    let mut rows = Vec::new();
    for &(r_exp, t_exp) in pairs {
        let time =
            crate::fit::classify_partial_sums(&localization_series(g, Side::Time, r_exp, radii)?)?;
        let freq_pts: Vec<(f64, f64)> = radii
            .iter()
            .map(|&r| (r, profile.integral(t_exp, r)))
            .collect();
        let freq = crate::fit::classify_partial_sums(&ScanSeries::new(
            format!("localization_freq_t{t_exp}"),
            freq_pts,
        )?)?;
        let both =
            time == crate::fit::Verdict::Convergent && freq == crate::fit::Verdict::Convergent;
        rows.push(BltRow {
            r_exp,
            t_exp,
            time_verdict: time,
            freq_verdict: freq,
            both_finite: both,
            admissible_for_q: 1.0 / r_exp + 1.0 / t_exp > qp / 2.0,
        });
    }
    let consistent = rows
        .iter()
        .all(|row| !row.both_finite || row.admissible_for_q);
    Ok(BltReport {
        q,
        rows,
        consistent,
    })
}
