//! Periodic sampling on 𝕋^d (d ∈ {1,2}), spectral analysis/synthesis and
//! discrete norms.
//!
//! The torus is identified with [−1/2, 1/2)^d and sampled uniformly at
//! x_j = −1/2 + j/n per axis. Frequency content lives on symmetric boxes
//! {−N,…,N}^d; `analyze`/`synthesize` are exact inverses of each other on
//! band-limited data as long as 2N+1 ≤ n.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Uniform sampling grid on 𝕋^d = [−1/2, 1/2)^d.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TorusGrid {
    d: usize,
    n: usize,
}

impl TorusGrid {
    /// `n` samples per axis; `n` must be an even power of two ≥ 4.
    pub fn new(d: usize, n: usize) -> Result<Self> {
        if d != 1 && d != 2 {
            return Err(Error::Domain(format!("dimension must be 1 or 2, got {d}")));
        }
        if n < 4 || !n.is_power_of_two() {
            return Err(Error::Domain(format!(
                "samples per axis must be a power of two >= 4, got {n}"
            )));
        }
        Ok(Self { d, n })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Samples per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Total number of samples n^d.
    pub fn len(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coordinate of index j along one axis.
    pub fn coord(&self, j: usize) -> f64 {
        -0.5 + j as f64 / self.n as f64
    }

    /// Grid point for a flat index (row-major for d = 2).
    pub fn point(&self, flat: usize) -> [f64; 2] {
        match self.d {
            1 => [self.coord(flat), 0.0],
            _ => [self.coord(flat / self.n), self.coord(flat % self.n)],
        }
    }

    /// Flat index of the sample closest to a point (coordinates wrapped).
    pub fn nearest_index(&self, x: &[f64]) -> usize {
        let axis = |t: f64| {
            let w = wrap_unit(t);
            let j = ((w + 0.5) * self.n as f64).round() as usize;
            j % self.n
        };
        match self.d {
            1 => axis(x[0]),
            _ => axis(x[0]) * self.n + axis(x[1]),
        }
    }
}

/// Wrap a coordinate into [−1/2, 1/2).
pub fn wrap_unit(t: f64) -> f64 {
    let mut w = t - t.round();
    if w >= 0.5 {
        w -= 1.0;
    }
    if w < -0.5 {
        w += 1.0;
    }
    w
}

/// Complex samples of a function over a [`TorusGrid`].
#[derive(Debug, Clone)]
pub struct SampleField {
    grid: TorusGrid,
    values: Vec<C64>,
}

impl SampleField {
    pub fn new(grid: TorusGrid, values: Vec<C64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Incompatible(format!(
                "expected {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        if values
            .iter()
            .any(|v| !v.re.is_finite() || !v.im.is_finite())
        {
            return Err(Error::Domain(
                "sample field contains non-finite values".into(),
            ));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: TorusGrid, f: impl Fn(&[f64]) -> C64) -> Result<Self> {
        let d = grid.dim();
        let values = (0..grid.len())
            .map(|i| {
                let p = grid.point(i);
                f(&p[..d])
            })
            .collect();
        Self::new(grid, values)
    }

    pub fn from_real_fn(grid: TorusGrid, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        Self::from_fn(grid, |x| C64::new(f(x), 0.0))
    }

    pub fn constant(grid: TorusGrid, c: C64) -> Self {
        Self {
            grid,
            values: vec![c; grid.len()],
        }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn value(&self, flat: usize) -> C64 {
        self.values[flat]
    }

    /// Mean of |f| over the grid.
    pub fn mean_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).sum::<f64>() / self.values.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Pointwise scale by a complex constant.
    pub fn scaled(&self, c: C64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }
}

/// Symmetric frequency box {−N,…,N}^d.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FreqBox {
    d: usize,
    half_width: usize,
}

impl FreqBox {
    pub fn new(d: usize, half_width: usize) -> Result<Self> {
        if d != 1 && d != 2 {
            return Err(Error::Domain(format!("dimension must be 1 or 2, got {d}")));
        }
        Ok(Self { d, half_width })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn half_width(&self) -> usize {
        self.half_width
    }

    /// Modes per axis, 2N+1.
    pub fn side(&self) -> usize {
        2 * self.half_width + 1
    }

    /// Total number of modes (2N+1)^d.
    pub fn len(&self) -> usize {
        self.side().pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Frequency vector of a flat index (lexicographic).
    pub fn index(&self, flat: usize) -> [i64; 2] {
        let n = self.half_width as i64;
        let side = self.side();
        match self.d {
            1 => [flat as i64 - n, 0],
            _ => [(flat / side) as i64 - n, (flat % side) as i64 - n],
        }
    }

    /// Flat index of a frequency vector, if inside the box.
    pub fn flat(&self, k: &[i64]) -> Option<usize> {
        let n = self.half_width as i64;
        match self.d {
            1 => {
                if k[0].abs() <= n {
                    Some((k[0] + n) as usize)
                } else {
                    None
                }
            }
            _ => {
                if k[0].abs() <= n && k[1].abs() <= n {
                    Some(((k[0] + n) as usize) * self.side() + (k[1] + n) as usize)
                } else {
                    None
                }
            }
        }
    }

    /// Euclidean length of the frequency vector at a flat index.
    pub fn norm(&self, flat: usize) -> f64 {
        let k = self.index(flat);
        ((k[0] * k[0] + k[1] * k[1]) as f64).sqrt()
    }
}

/// Fourier coefficients over a [`FreqBox`].
#[derive(Debug, Clone)]
pub struct CoeffField {
    freq_box: FreqBox,
    coeffs: Vec<C64>,
}

impl CoeffField {
    pub fn new(freq_box: FreqBox, coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.len() != freq_box.len() {
            return Err(Error::Incompatible(format!(
                "expected {} coefficients, got {}",
                freq_box.len(),
                coeffs.len()
            )));
        }
        Ok(Self { freq_box, coeffs })
    }

    pub fn zeros(freq_box: FreqBox) -> Self {
        Self {
            freq_box,
            coeffs: vec![C64::new(0.0, 0.0); freq_box.len()],
        }
    }

    pub fn freq_box(&self) -> &FreqBox {
        &self.freq_box
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn coeff(&self, k: &[i64]) -> C64 {
        self.freq_box
            .flat(k)
            .map_or(C64::new(0.0, 0.0), |i| self.coeffs[i])
    }

    pub fn set(&mut self, k: &[i64], c: C64) -> Result<()> {
        let i = self
            .freq_box
            .flat(k)
            .ok_or_else(|| Error::Incompatible("frequency outside box".into()))?;
        self.coeffs[i] = c;
        Ok(())
    }

    /// Max deviation from conjugate symmetry ĉ(−k) = conj(ĉ(k)); zero (up to
    /// roundoff) exactly when the underlying function is real.
    pub fn conjugate_symmetry_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.freq_box.len() {
            let k = self.freq_box.index(i);
            let neg = [-k[0], -k[1]];
            let a = self.coeffs[i];
            let b = self.coeff(&neg[..self.freq_box.dim()]);
            worst = worst.max((a - b.conj()).norm());
        }
        worst
    }

    pub fn scaled(&self, c: C64) -> Self {
        Self {
            freq_box: self.freq_box,
            coeffs: self.coeffs.iter().map(|v| v * c).collect(),
        }
    }
}

fn fft_in_place(values: &mut [C64], n: usize, d: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let fft = if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    };
    match d {
        1 => fft.process(values),
        _ => {
            // rows
            for row in values.chunks_exact_mut(n) {
                fft.process(row);
            }
            // columns via transpose
            let mut col = vec![C64::new(0.0, 0.0); n];
            for j in 0..n {
                for i in 0..n {
                    col[i] = values[i * n + j];
                }
                fft.process(&mut col);
                for i in 0..n {
                    values[i * n + j] = col[i];
                }
            }
        }
    }
}

/// Trapezoid/DFT quadrature of the Fourier coefficients
/// ĉ(k) = (1/n^d) Σ_j f(x_j) e^{−2πi⟨k,x_j⟩}, restricted to the box.
///
/// Exact for trigonometric polynomials of degree ≤ N whenever 2N+1 ≤ n.
pub fn analyze(f: &SampleField, freq_box: &FreqBox) -> Result<CoeffField> {
    let grid = f.grid();
    if freq_box.dim() != grid.dim() {
        return Err(Error::Incompatible("dimension mismatch".into()));
    }
    let n = grid.n();
    if freq_box.side() > n {
        return Err(Error::Precondition(format!(
            "frequency box needs {} modes per axis but grid has only {} samples",
            freq_box.side(),
            n
        )));
    }
    let mut buf = f.values().to_vec();
    fft_in_place(&mut buf, n, grid.dim(), false);
    let scale = 1.0 / grid.len() as f64;
    let modulus = n as i64;
    let mut coeffs = Vec::with_capacity(freq_box.len());
    for flat in 0..freq_box.len() {
        let k = freq_box.index(flat);
        // x_j = -1/2 + j/n shifts the DFT by the phase (-1)^{k1+k2}
        let sign = if (k[0] + k[1]).rem_euclid(2) == 0 {
            1.0
        } else {
            -1.0
        };
        let bin = match grid.dim() {
            1 => k[0].rem_euclid(modulus) as usize,
            _ => (k[0].rem_euclid(modulus) as usize) * n + k[1].rem_euclid(modulus) as usize,
        };
        coeffs.push(buf[bin] * (sign * scale));
    }
    CoeffField::new(*freq_box, coeffs)
}

/// Evaluates f(x_j) = Σ_k ĉ(k) e^{2πi⟨k,x_j⟩} on the grid.
pub fn synthesize(c: &CoeffField, grid: &TorusGrid) -> Result<SampleField> {
    if c.freq_box().dim() != grid.dim() {
        return Err(Error::Incompatible("dimension mismatch".into()));
    }
    let n = grid.n();
    if c.freq_box().side() > n {
        return Err(Error::Precondition(format!(
            "frequency box needs {} modes per axis but grid has only {} samples",
            c.freq_box().side(),
            n
        )));
    }
    let modulus = n as i64;
    let mut buf = vec![C64::new(0.0, 0.0); grid.len()];
    for flat in 0..c.freq_box().len() {
        let k = c.freq_box().index(flat);
        let sign = if (k[0] + k[1]).rem_euclid(2) == 0 {
            1.0
        } else {
            -1.0
        };
        let bin = match grid.dim() {
            1 => k[0].rem_euclid(modulus) as usize,
            _ => (k[0].rem_euclid(modulus) as usize) * n + k[1].rem_euclid(modulus) as usize,
        };
        buf[bin] += c.coeffs()[flat] * sign;
    }
    fft_in_place(&mut buf, n, grid.dim(), true);
    SampleField::new(*grid, buf)
}

/// Riemann-sum L^p norm (Σ|f(x_j)|^p / n^d)^{1/p}; p = ∞ gives the max modulus.
pub fn lp_norm(f: &SampleField, p: f64) -> Result<f64> {
    if p.is_infinite() && p > 0.0 {
        return Ok(f.max_abs());
    }
    if !(p >= 1.0) {
        return Err(Error::Domain(format!("lp_norm needs p >= 1, got {p}")));
    }
    let total: f64 = f.values().iter().map(|v| v.norm().powf(p)).sum();
    Ok((total / f.grid().len() as f64).powf(1.0 / p))
}

/// Exact finite ℓ^q norm of the coefficients; q = ∞ gives the max modulus.
pub fn lq_norm(c: &CoeffField, q: f64) -> Result<f64> {
    if q.is_infinite() && q > 0.0 {
        return Ok(c.coeffs().iter().map(|v| v.norm()).fold(0.0, f64::max));
    }
    if !(q >= 1.0) {
        return Err(Error::Domain(format!("lq_norm needs q >= 1, got {q}")));
    }
    Ok(c.coeffs()
        .iter()
        .map(|v| v.norm().powf(q))
        .sum::<f64>()
        .powf(1.0 / q))
}

/// Random real band-limited field: conjugate-symmetric coefficients drawn
/// uniformly from the centered unit square, synthesized on the grid.
pub fn random_real_band_limited(
    grid: TorusGrid,
    half_width: usize,
    seed: u64,
) -> Result<SampleField> {
    use rand::prelude::*;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let fb = FreqBox::new(grid.dim(), half_width)?;
    let d = grid.dim();
    let mut co = CoeffField::zeros(fb);
    for flat in 0..fb.len() {
        let k = fb.index(flat);
        if (k[0], k[1]) < (0, 0) || (k[0] == 0 && k[1] < 0) {
            continue;
        }
        let mut z = C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
        if k[0] == 0 && k[1] == 0 {
            z = C64::new(z.re, 0.0);
        }
        co.set(&k[..d], z)?;
        let neg = [-k[0], -k[1]];
        if (neg[0], neg[1]) != (k[0], k[1]) {
            co.set(&neg[..d], z.conj())?;
        }
    }
    synthesize(&co, &grid)
}

/// Random complex coefficients on a box, uniform on the centered unit square.
pub fn random_coeff_field(fb: FreqBox, seed: u64) -> CoeffField {
    use rand::prelude::*;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let coeffs = (0..fb.len())
        .map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect();
    CoeffField {
        freq_box: fb,
        coeffs,
    }
}

/// ℓ^q norm of a raw complex slice (shared by the norm estimators).
pub fn slice_lq(v: &[C64], q: f64) -> f64 {
    if q.is_infinite() {
        v.iter().map(|z| z.norm()).fold(0.0, f64::max)
    } else {
        v.iter()
            .map(|z| z.norm().powf(q))
            .sum::<f64>()
            .powf(1.0 / q)
    }
}
