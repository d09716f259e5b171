//! K×K Hermitian matrix symbols: pointwise eigendecomposition into sorted
//! eigenvalue tracks, block multiplier operators on [ℓ²]^K → [ℓ^q]^K, and the
//! scalar/matrix norm equivalence checks with their proof constants.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{analyze, CoeffField, FreqBox, SampleField, TorusGrid};
use crate::multiplier::ConvOperator;
use crate::norms::{operator_norm_p_q, MixedNormEstimate, NormOptions};

type C64 = Complex64;

/// A K×K complex matrix per grid sample, Hermitian within 1e−12
/// (symmetrized on ingest).
#[derive(Debug, Clone)]
pub struct HermitianField {
    k: usize,
    grid: TorusGrid,
    mats: Vec<DMatrix<C64>>,
}

impl HermitianField {
    pub fn new(grid: TorusGrid, mats: Vec<DMatrix<C64>>) -> Result<Self> {
        if mats.len() != grid.len() {
            return Err(Error::Incompatible(format!(
                "expected {} matrices, got {}",
                grid.len(),
                mats.len()
            )));
        }
        let k = mats[0].nrows();
        if k == 0 || k > 8 {
            return Err(Error::Domain(format!(
                "block size must lie in 1..=8, got {k}"
            )));
        }
        let mut out = Vec::with_capacity(mats.len());
        for m in mats {
            if m.nrows() != k || m.ncols() != k {
                return Err(Error::Incompatible("inconsistent block sizes".into()));
            }
            let scale = m.iter().map(|z| z.norm()).fold(1.0f64, f64::max);
            let defect = (&m - m.adjoint())
                .iter()
                .map(|z| z.norm())
                .fold(0.0f64, f64::max);
            if defect > 1e-12 * scale.max(1.0) * 2.0 {
                return Err(Error::NotHermitian(format!(
                    "max |M − M*| = {defect:.3e} exceeds tolerance"
                )));
            }
            out.push((&m + m.adjoint()) * C64::new(0.5, 0.0));
        }
        Ok(Self { k, grid, mats: out })
    }

    pub fn from_fn(grid: TorusGrid, k: usize, f: impl Fn(&[f64]) -> DMatrix<C64>) -> Result<Self> {
        let d = grid.dim();
        let mats: Vec<DMatrix<C64>> = (0..grid.len())
            .map(|i| {
                let p = grid.point(i);
                f(&p[..d])
            })
            .collect();
        let field = Self::new(grid, mats)?;
        if field.k != k {
            return Err(Error::Incompatible(
                "generator returned wrong block size".into(),
            ));
        }
        Ok(field)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn mats(&self) -> &[DMatrix<C64>] {
        &self.mats
    }

    /// Entry (i, j) as a scalar sample field.
    pub fn entry_field(&self, i: usize, j: usize) -> Result<SampleField> {
        SampleField::new(self.grid, self.mats.iter().map(|m| m[(i, j)]).collect())
    }

    /// Pointwise shift U + c·Id.
    pub fn shifted(&self, c: f64) -> Self {
        let eye = DMatrix::<C64>::identity(self.k, self.k) * C64::new(c, 0.0);
        Self {
            k: self.k,
            grid: self.grid,
            mats: self.mats.iter().map(|m| m + &eye).collect(),
        }
    }
}

/// Pointwise eigenvalue/eigenvector fields, sorted λ_1(x) ≥ … ≥ λ_K(x).
/// Eigenvector phases are fixed (first non-negligible component real
/// positive) but no continuity across eigenvalue crossings is implied; only
/// the eigenvalue tracks feed downstream scans.
#[derive(Debug, Clone)]
pub struct EigenTracks {
    k: usize,
    grid: TorusGrid,
    lambdas: Vec<Vec<f64>>,
    vectors: Vec<DMatrix<C64>>,
}

impl EigenTracks {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    /// λ_track(i) as a real sample field, i = 0 for the largest eigenvalue.
    pub fn lambda_field(&self, i: usize) -> Result<SampleField> {
        SampleField::new(
            self.grid,
            self.lambdas[i].iter().map(|&v| C64::new(v, 0.0)).collect(),
        )
    }

    pub fn lambda(&self, i: usize, sample: usize) -> f64 {
        self.lambdas[i][sample]
    }

    /// Eigenvector matrix at a sample (columns = eigenvectors, descending).
    pub fn vectors(&self, sample: usize) -> &DMatrix<C64> {
        &self.vectors[sample]
    }
}

/// Per-sample Hermitian eigendecomposition with descending sort and a
/// deterministic phase fix; verifies ‖U − QΛQ*‖_∞ < 1e−9 before returning.
pub fn eig_decompose(u: &HermitianField) -> Result<EigenTracks> {
    let k = u.k();
    let decomposed: Vec<(Vec<f64>, DMatrix<C64>)> = u
        .mats()
        .par_iter()
        .map(|m| {
            let eig = SymmetricEigen::new(m.clone());
            let mut order: Vec<usize> = (0..k).collect();
            order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
            let vals: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
            let mut vecs = DMatrix::<C64>::zeros(k, k);
            for (col, &i) in order.iter().enumerate() {
                let mut v: DVector<C64> = eig.eigenvectors.column(i).into();
                if let Some(lead) = v.iter().find(|z| z.norm() > 1e-12) {
                    let phase = lead / lead.norm();
                    v /= phase;
                }
                vecs.set_column(col, &v);
            }
            (vals, vecs)
        })
        .collect();
    // reconstruction check
    let mut worst = 0.0f64;
    for (sample, m) in u.mats().iter().enumerate() {
        let (vals, vecs) = &decomposed[sample];
        let lam = DMatrix::from_diagonal(&DVector::from_iterator(
            k,
            vals.iter().map(|&v| C64::new(v, 0.0)),
        ));
        let recon = vecs * lam * vecs.adjoint();
        let defect = (m - recon).iter().map(|z| z.norm()).fold(0.0f64, f64::max);
        worst = worst.max(defect);
    }
    let scale = u
        .mats()
        .iter()
        .flat_map(|m| m.iter())
        .map(|z| z.norm())
        .fold(1.0f64, f64::max);
    if worst > 1e-9 * scale {
        return Err(Error::Numerical(format!(
            "eigendecomposition reconstruction defect {worst:.3e}"
        )));
    }
    let mut lambdas = vec![vec![0.0; u.grid().len()]; k];
    let mut vectors = Vec::with_capacity(u.grid().len());
    for (sample, (vals, vecs)) in decomposed.into_iter().enumerate() {
        for (i, v) in vals.into_iter().enumerate() {
            lambdas[i][sample] = v;
        }
        vectors.push(vecs);
    }
    Ok(EigenTracks {
        k,
        grid: *u.grid(),
        lambdas,
        vectors,
    })
}

/// Block convolution operator for a matrix symbol: component i of the output
/// at frequency k is Σ_j Σ_m Û_ij(k−m) a_j(m). Stored dense with the
/// component-major layout (component index varies slowest).
#[derive(Debug, Clone)]
pub struct BlockConvOperator {
    k: usize,
    symbols: Vec<Vec<CoeffField>>,
    in_box: FreqBox,
    out_box: FreqBox,
}

impl BlockConvOperator {
    /// Analyzes every entry of the Hermitian symbol at the resolution needed
    /// for the difference box N_in + N_out.
    pub fn from_symbol_field(
        u: &HermitianField,
        in_box: FreqBox,
        out_box: FreqBox,
    ) -> Result<Self> {
        let need = in_box.half_width() + out_box.half_width();
        if 2 * need + 1 > u.grid().n() {
            return Err(Error::Incompatible(format!(
                "symbol grid n={} cannot resolve the {need}-mode difference box",
                u.grid().n()
            )));
        }
        let sym_box = FreqBox::new(u.grid().dim(), need)?;
        let k = u.k();
        let mut symbols = Vec::with_capacity(k);
        for i in 0..k {
            let mut row = Vec::with_capacity(k);
            for j in 0..k {
                row.push(analyze(&u.entry_field(i, j)?, &sym_box)?);
            }
            symbols.push(row);
        }
        Ok(Self {
            k,
            symbols,
            in_box,
            out_box,
        })
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let d = self.in_box.dim();
        let bi = self.in_box.len();
        let bo = self.out_box.len();
        DMatrix::from_fn(self.k * bo, self.k * bi, |r, c| {
            let (i, kf) = (r / bo, r % bo);
            let (j, mf) = (c / bi, c % bi);
            let kk = self.out_box.index(kf);
            let mm = self.in_box.index(mf);
            let diff = [kk[0] - mm[0], kk[1] - mm[1]];
            self.symbols[i][j].coeff(&diff[..d])
        })
    }
}

/// [ℓ²]^K → [ℓ^q]^K norm estimate of the truncated block operator. Structured
/// starts place each dyadic cube-indicator spectrum in one component.
pub fn matrix_norm_2_q(
    u: &HermitianField,
    q: f64,
    in_box: FreqBox,
    out_box: FreqBox,
    opts: &NormOptions,
) -> Result<MixedNormEstimate> {
    if !(q >= 2.0) {
        return Err(Error::Domain(format!("matrix norm needs q >= 2, got {q}")));
    }
    let op = BlockConvOperator::from_symbol_field(u, in_box, out_box)?;
    let dense = op.to_dense();
    let bi = in_box.len();
    let mut starts = Vec::new();
    for j in 2..=8 {
        let tau = 2f64.powi(-j);
        let chi = crate::multiplier::chi_box_coeffs(tau, &in_box)?;
        for comp in 0..u.k() {
            let mut v = DVector::from_element(u.k() * bi, C64::new(0.0, 0.0));
            for (idx, &z) in chi.coeffs().iter().enumerate() {
                v[comp * bi + idx] = z;
            }
            let nm = crate::norms::lp_of(&v, 2.0);
            if nm > 0.0 {
                starts.push(v / C64::new(nm, 0.0));
            }
        }
    }
    Ok(operator_norm_p_q(&dense, 2.0, q, &starts, opts))
}

/// Outcome of the scalar/matrix equivalence check: with S = max_k ‖T_{λ_k}‖
/// and M = ‖T_U‖ the proof constants require S ≤ K·M and M ≤ √K·S, both
/// checked with a truncation slack factor.
#[derive(Debug, Clone, Serialize)]
pub struct EquivalenceReport {
    pub q: f64,
    pub k: usize,
    pub matrix_norm: f64,
    pub scalar_norms: Vec<f64>,
    pub slack: f64,
    pub scalar_le_k_matrix: bool,
    pub matrix_le_sqrtk_scalar: bool,
}

impl EquivalenceReport {
    pub fn holds(&self) -> bool {
        self.scalar_le_k_matrix && self.matrix_le_sqrtk_scalar
    }
}

/// Runs both proof-constant inequalities on the truncated operators.
/// `slack` is the multiplicative tolerance (0.05 by convention: the K and √K
/// constants are exact only for the untruncated operators).
pub fn equivalence_check(
    u: &HermitianField,
    q: f64,
    in_box: FreqBox,
    out_box: FreqBox,
    slack: f64,
    opts: &NormOptions,
) -> Result<EquivalenceReport> {
    let tracks = eig_decompose(u)?;
    let k = u.k();
    let matrix_est = matrix_norm_2_q(u, q, in_box, out_box, opts)?;
    let mut scalar_norms = Vec::with_capacity(k);
    for i in 0..k {
        let lam = tracks.lambda_field(i)?;
        let op = ConvOperator::from_symbol_field(&lam, in_box, out_box)?;
        let est = if q > 2.0 {
            op.norm_2_q(q, opts)?.value()
        } else {
            op.norm_2_2().value
        };
        scalar_norms.push(est);
    }
    let s = scalar_norms.iter().cloned().fold(0.0f64, f64::max);
    let m = matrix_est.value();
    Ok(EquivalenceReport {
        q,
        k,
        matrix_norm: m,
        scalar_norms,
        slack,
        scalar_le_k_matrix: s <= k as f64 * m * (1.0 + slack),
        matrix_le_sqrtk_scalar: m <= (k as f64).sqrt() * s * (1.0 + slack),
    })
}

/// Integral-average form of the smallest-eigenvalue bound for PSD fields
/// scaled to ‖U‖ ≤ 1: over each test cube,
/// (1/|I|)∫ λ_K ≤ ((1/|I|)∫ det U)^{1/K}.
pub fn det_average_bound_check(
    u: &HermitianField,
    cube_centers: &[Vec<f64>],
    tau: f64,
) -> Result<DetAverageReport> {
    let tracks = eig_decompose(u)?;
    let k = u.k();
    // PSD + normalization preconditions
    let mut sup = 0.0f64;
    for s in 0..u.grid().len() {
        let lk = tracks.lambda(k - 1, s);
        if lk < -1e-10 {
            return Err(Error::Precondition(format!(
                "field is not PSD: λ_K = {lk:.3e} at sample {s}"
            )));
        }
        sup = sup.max(tracks.lambda(0, s).abs());
    }
    if sup > 1.0 + 1e-9 {
        return Err(Error::Precondition(format!(
            "field needs ‖U‖ ≤ 1, got sup λ = {sup}"
        )));
    }
    let grid = u.grid();
    let n = grid.n();
    let d = grid.dim();
    let reach = (tau * n as f64).floor() as i64;
    let mut results = Vec::new();
    for center in cube_centers {
        let center_idx: Vec<i64> = (0..d)
            .map(|a| ((center[a] + 0.5) * n as f64).round() as i64)
            .collect();
        let mut lam_avg = 0.0;
        let mut det_avg = 0.0;
        let mut count = 0usize;
        let mut visit = |flat: usize| {
            let lk = tracks.lambda(k - 1, flat).max(0.0);
            lam_avg += lk;
            det_avg += (0..k)
                .map(|i| tracks.lambda(i, flat).max(0.0))
                .product::<f64>();
            count += 1;
        };
        match d {
            1 => {
                for o in -reach..=reach {
                    visit((center_idx[0] + o).rem_euclid(n as i64) as usize);
                }
            }
            _ => {
                for o1 in -reach..=reach {
                    for o2 in -reach..=reach {
                        let j1 = (center_idx[0] + o1).rem_euclid(n as i64) as usize;
                        let j2 = (center_idx[1] + o2).rem_euclid(n as i64) as usize;
                        visit(j1 * n + j2);
                    }
                }
            }
        }
        lam_avg /= count as f64;
        det_avg /= count as f64;
        results.push((lam_avg, det_avg.powf(1.0 / k as f64)));
    }
    let violations = results.iter().filter(|(l, r)| *l > *r + 1e-9).count();
    Ok(DetAverageReport {
        cubes: results,
        violations,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DetAverageReport {
    /// (average of λ_K, (average of det)^{1/K}) per cube.
    pub cubes: Vec<(f64, f64)>,
    pub violations: usize,
}
