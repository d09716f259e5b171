//! Gramian periodization of generator sets, lattice sub-Gramians, the
//! extra-invariance rank formula, minimal generator counts, eigenvalue
//! domination, square-root eigenvalue regularity, and the translate-system
//! completeness diagnostic.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fit::{loglog_fit, ExponentFit, ScanSeries, SLOPE_TOL};
use crate::grid::{analyze, FreqBox, SampleField, TorusGrid};
use crate::matrix_multiplier::HermitianField;
use crate::norms::{gram_cq_core, NormOptions};

type C64 = Complex64;

pub type GeneratorFn = Arc<dyn Fn(&[f64]) -> C64 + Send + Sync>;

/// Fourier transforms Ĥ = (ĥ_1,…,ĥ_K) of a generator set, sampled on the
/// truncated real-frequency band [−Kmax−1/2, Kmax+1/2)^d with one unit cell
/// per integer offset; tails must sit below 1e−12 beyond the band.
#[derive(Clone)]
pub struct GeneratorSet {
    d: usize,
    k: usize,
    kmax: i64,
    cell_grid: TorusGrid,
    fns: Vec<GeneratorFn>,
    /// samples[gen][cell_flat * cell_len + inner_flat]
    samples: Vec<Vec<C64>>,
}

impl std::fmt::Debug for GeneratorSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GeneratorSet")
            .field("d", &self.d)
            .field("k", &self.k)
            .field("kmax", &self.kmax)
            .field("n", &self.cell_grid.n())
            .finish()
    }
}

pub const GENERATOR_TAIL_TOL: f64 = 1e-12;

impl GeneratorSet {
    pub fn from_fns(fns: Vec<GeneratorFn>, kmax: i64, cell_grid: TorusGrid) -> Result<Self> {
        let set = Self::from_fns_unchecked(fns, kmax, cell_grid)?;
        let excess = set.tail_excess();
        if excess > GENERATOR_TAIL_TOL {
            return Err(Error::DecayCertificate(format!(
                "generator tail {excess:.3e} beyond Kmax={kmax} exceeds {GENERATOR_TAIL_TOL:.0e}"
            )));
        }
        Ok(set)
    }

    pub fn from_fns_unchecked(
        fns: Vec<GeneratorFn>,
        kmax: i64,
        cell_grid: TorusGrid,
    ) -> Result<Self> {
        if fns.is_empty() || fns.len() > 8 {
            return Err(Error::Domain("generator count must lie in 1..=8".into()));
        }
        if kmax < 0 {
            return Err(Error::Domain("Kmax must be nonnegative".into()));
        }
        let d = cell_grid.dim();
        let k = fns.len();
        let cells = cell_list(d, kmax);
        let cell_len = cell_grid.len();
        let samples: Vec<Vec<C64>> = fns
            .iter()
            .map(|f| {
                let mut vals = Vec::with_capacity(cells.len() * cell_len);
                for cell in &cells {
                    for inner in 0..cell_len {
                        let p = cell_grid.point(inner);
                        let xi: Vec<f64> = (0..d).map(|a| cell[a] as f64 + p[a]).collect();
                        vals.push(f(&xi));
                    }
                }
                vals
            })
            .collect();
        for vals in &samples {
            if vals.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
                return Err(Error::Domain(
                    "generator samples contain non-finite values".into(),
                ));
            }
        }
        Ok(Self {
            d,
            k,
            kmax,
            cell_grid,
            fns,
            samples,
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn count(&self) -> usize {
        self.k
    }

    pub fn kmax(&self) -> i64 {
        self.kmax
    }

    pub fn cell_grid(&self) -> &TorusGrid {
        &self.cell_grid
    }

    /// Largest sampled |ĥ| in the two cells beyond the band.
    pub fn tail_excess(&self) -> f64 {
        let check = 4 * self.cell_grid.n();
        let mut worst = 0.0f64;
        for f in &self.fns {
            for i in 0..check {
                let t = self.kmax as f64 + 0.5 + 2.0 * (i as f64 + 0.5) / check as f64;
                match self.d {
                    1 => {
                        worst = worst.max(f(&[t]).norm()).max(f(&[-t]).norm());
                    }
                    _ => {
                        // scan the four boundary directions of the band
                        let u = -0.5 + (i as f64 / check as f64);
                        worst = worst
                            .max(f(&[t, u]).norm())
                            .max(f(&[-t, u]).norm())
                            .max(f(&[u, t]).norm())
                            .max(f(&[u, -t]).norm());
                    }
                }
            }
        }
        worst
    }

    /// Re-samples the same generators on a finer or coarser unit-cell grid.
    pub fn resample(&self, cell_grid: TorusGrid) -> Result<Self> {
        Self::from_fns_unchecked(self.fns.clone(), self.kmax, cell_grid)
    }

    fn value(&self, gen: usize, cell_flat: usize, inner: usize) -> C64 {
        self.samples[gen][cell_flat * self.cell_grid.len() + inner]
    }

    fn cells(&self) -> Vec<[i64; 2]> {
        cell_list(self.d, self.kmax)
    }
}

fn cell_list(d: usize, kmax: i64) -> Vec<[i64; 2]> {
    match d {
        1 => (-kmax..=kmax).map(|c| [c, 0]).collect(),
        _ => {
            let mut cells = Vec::new();
            for c1 in -kmax..=kmax {
                for c2 in -kmax..=kmax {
                    cells.push([c1, c2]);
                }
            }
            cells
        }
    }
}

/// Lattices Γ ⊋ ℤ^d supported by the diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LatticeSpec {
    /// Γ = (1/m)ℤ, d = 1.
    Refine1D { m: u32 },
    /// Γ = (1/m1)ℤ × (1/m2)ℤ, d = 2.
    Diagonal2D { m1: u32, m2: u32 },
    /// Γ = ℤ² + (1/2,1/2)ℤ, index 2, d = 2.
    Quincunx,
}

impl LatticeSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            LatticeSpec::Refine1D { m } if m >= 2 => Ok(()),
            LatticeSpec::Refine1D { m } => {
                Err(Error::Domain(format!("refinement needs m >= 2, got {m}")))
            }
            LatticeSpec::Diagonal2D { m1, m2 } if m1 >= 1 && m2 >= 1 && m1 * m2 >= 2 => Ok(()),
            LatticeSpec::Diagonal2D { m1, m2 } => Err(Error::Domain(format!(
                "diagonal refinement needs index >= 2, got {m1}x{m2}"
            ))),
            LatticeSpec::Quincunx => Ok(()),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            LatticeSpec::Refine1D { .. } => 1,
            _ => 2,
        }
    }

    /// [Γ : ℤ^d], the index of the refinement.
    pub fn index(&self) -> u32 {
        match *self {
            LatticeSpec::Refine1D { m } => m,
            LatticeSpec::Diagonal2D { m1, m2 } => m1 * m2,
            LatticeSpec::Quincunx => 2,
        }
    }

    /// Representatives R of ℤ^d / Γ*.
    pub fn reps(&self) -> Vec<[i64; 2]> {
        match *self {
            LatticeSpec::Refine1D { m } => (0..m as i64).map(|r| [r, 0]).collect(),
            LatticeSpec::Diagonal2D { m1, m2 } => {
                let mut out = Vec::new();
                for r1 in 0..m1 as i64 {
                    for r2 in 0..m2 as i64 {
                        out.push([r1, r2]);
                    }
                }
                out
            }
            LatticeSpec::Quincunx => vec![[0, 0], [1, 0]],
        }
    }

    /// Whether an integer cell lies in rep + Γ*.
    pub fn in_dual_class(&self, cell: [i64; 2], rep: [i64; 2]) -> bool {
        match *self {
            LatticeSpec::Refine1D { m } => (cell[0] - rep[0]).rem_euclid(m as i64) == 0,
            LatticeSpec::Diagonal2D { m1, m2 } => {
                (cell[0] - rep[0]).rem_euclid(m1 as i64) == 0
                    && (cell[1] - rep[1]).rem_euclid(m2 as i64) == 0
            }
            LatticeSpec::Quincunx => (cell[0] - rep[0] + cell[1] - rep[1]).rem_euclid(2) == 0,
        }
    }
}

/// Gramian P(Ĥ)(x) = Σ_{|cell| ≤ Kmax} Ĥ(x+cell) Ĥ(x+cell)^* on the unit cell.
pub fn gramian(h: &GeneratorSet) -> Result<HermitianField> {
    gramian_filtered(h, |_| true)
}

/// Sub-Gramian field x ↦ P_{Γ*}(x + rep), summing only the cells in rep + Γ*.
pub fn sub_gramian(h: &GeneratorSet, lat: &LatticeSpec, rep: [i64; 2]) -> Result<HermitianField> {
    lat.validate()?;
    if lat.dim() != h.dim() {
        return Err(Error::Incompatible("lattice dimension mismatch".into()));
    }
    gramian_filtered(h, |cell| lat.in_dual_class(cell, rep))
}

fn gramian_filtered(h: &GeneratorSet, keep: impl Fn([i64; 2]) -> bool) -> Result<HermitianField> {
    let k = h.count();
    let cells = h.cells();
    let kept: Vec<usize> = (0..cells.len()).filter(|&i| keep(cells[i])).collect();
    let mats: Vec<DMatrix<C64>> = (0..h.cell_grid().len())
        .into_par_iter()
        .map(|inner| {
            let mut m = DMatrix::<C64>::zeros(k, k);
            for &cf in &kept {
                for i in 0..k {
                    let vi = h.value(i, cf, inner);
                    for j in 0..k {
                        let vj = h.value(j, cf, inner);
                        m[(i, j)] += vi * vj.conj();
                    }
                }
            }
            m
        })
        .collect();
    HermitianField::new(*h.cell_grid(), mats)
}

/// Max pointwise residual of the rearrangement P = Σ_{rep} P_{Γ*}(· + rep).
pub fn decomposition_residual(h: &GeneratorSet, lat: &LatticeSpec) -> Result<f64> {
    let full = gramian(h)?;
    let subs: Vec<HermitianField> = lat
        .reps()
        .iter()
        .map(|&rep| sub_gramian(h, lat, rep))
        .collect::<Result<_>>()?;
    let mut worst = 0.0f64;
    for s in 0..full.grid().len() {
        let mut sum = DMatrix::<C64>::zeros(h.count(), h.count());
        for sub in &subs {
            sum += &sub.mats()[s];
        }
        let defect = (&full.mats()[s] - sum)
            .iter()
            .map(|z| z.norm())
            .fold(0.0f64, f64::max);
        worst = worst.max(defect);
    }
    Ok(worst)
}

fn sorted_eigenvalues(m: &DMatrix<C64>) -> Vec<f64> {
    let eig = SymmetricEigen::new(m.clone());
    let mut vals: Vec<f64> = eig.eigenvalues.iter().cloned().collect();
    vals.sort_by(|a, b| b.partial_cmp(a).unwrap());
    vals
}

fn numerical_rank(eigs: &[f64], thresh: f64) -> usize {
    eigs.iter().filter(|&&l| l > thresh).count()
}

/// Verdict of the rank identity at one threshold.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RankVerdict {
    pub rho: f64,
    pub fraction_holding: f64,
    pub invariant: bool,
}

/// Report of the extra-invariance rank test with the ρ sensitivity sweep.
#[derive(Debug, Clone, Serialize)]
pub struct RankFormulaReport {
    pub lattice: LatticeSpec,
    pub per_rho: Vec<RankVerdict>,
    /// Some(verdict) when all thresholds agree, None otherwise.
    pub agreed: Option<bool>,
    pub degenerate: bool,
    /// minimal generator count J at the middle threshold
    pub j: usize,
    /// [Γ:ℤ^d] does not divide J
    pub nontrivial: bool,
}

pub const RANK_RHO_SWEEP: [f64; 3] = [1e-6, 1e-8, 1e-10];

/// Checks rank[P(x)] = Σ_{rep} rank[P_{Γ*}(x+rep)] at every sample, for each
/// threshold in the sweep; the verdict is emitted only when the sweep agrees.
pub fn rank_formula_check(h: &GeneratorSet, lat: &LatticeSpec) -> Result<RankFormulaReport> {
    lat.validate()?;
    let full = gramian(h)?;
    let subs: Vec<HermitianField> = lat
        .reps()
        .iter()
        .map(|&rep| sub_gramian(h, lat, rep))
        .collect::<Result<_>>()?;
    let n = full.grid().len();
    let full_eigs: Vec<Vec<f64>> = full.mats().par_iter().map(sorted_eigenvalues).collect();
    let sub_eigs: Vec<Vec<Vec<f64>>> = subs
        .iter()
        .map(|sub| sub.mats().par_iter().map(sorted_eigenvalues).collect())
        .collect();
    let mut per_rho = Vec::new();
    for &rho in &RANK_RHO_SWEEP {
        let mut holding = 0usize;
        for s in 0..n {
            let lam_max = full_eigs[s][0].max(0.0);
            let thresh = rho * lam_max;
            let r_full = numerical_rank(&full_eigs[s], thresh);
            let r_sum: usize = sub_eigs
                .iter()
                .map(|se| numerical_rank(&se[s], thresh))
                .sum();
            if r_full == r_sum {
                holding += 1;
            }
        }
        let fraction = holding as f64 / n as f64;
        per_rho.push(RankVerdict {
            rho,
            fraction_holding: fraction,
            invariant: fraction > 0.999,
        });
    }
    let first = per_rho[0].invariant;
    let agreed = if per_rho.iter().all(|v| v.invariant == first) {
        Some(first)
    } else {
        None
    };
    let mid_rho = RANK_RHO_SWEEP[1];
    let ranks: Vec<usize> = (0..n)
        .map(|s| {
            let thresh = mid_rho * full_eigs[s][0].max(0.0);
            numerical_rank(&full_eigs[s], thresh)
        })
        .collect();
    let degenerate = ranks.iter().all(|&r| r == 0);
    let j = ess_sup_rank(&full, &ranks, mid_rho);
    let nontrivial = j > 0 && j % lat.index() as usize != 0;
    Ok(RankFormulaReport {
        lattice: *lat,
        per_rho,
        agreed,
        degenerate,
        j,
        nontrivial,
    })
}

/// Essential supremum of the rank field. The plain max is used when the
/// eigenvalue fields look continuous; otherwise ranks attained on fewer than
/// 0.1% of samples are discarded as outliers.
fn ess_sup_rank(p: &HermitianField, ranks: &[usize], _rho: f64) -> usize {
    let n = ranks.len();
    let max_rank = ranks.iter().cloned().max().unwrap_or(0);
    if max_rank == 0 {
        return 0;
    }
    // continuity heuristic on the top eigenvalue field
    let tops: Vec<f64> = p.mats().iter().map(|m| sorted_eigenvalues(m)[0]).collect();
    let scale = tops.iter().cloned().fold(0.0f64, f64::max);
    let grid = p.grid();
    let nn = grid.n();
    let mut max_jump = 0.0f64;
    match grid.dim() {
        1 => {
            for i in 0..nn {
                max_jump = max_jump.max((tops[(i + 1) % nn] - tops[i]).abs());
            }
        }
        _ => {
            for i in 0..nn {
                for j in 0..nn {
                    let v = tops[i * nn + j];
                    max_jump = max_jump
                        .max((tops[((i + 1) % nn) * nn + j] - v).abs())
                        .max((tops[i * nn + (j + 1) % nn] - v).abs());
                }
            }
        }
    }
    if max_jump <= 0.5 * scale {
        return max_rank;
    }
    // discontinuous field: require each rank level to carry > 0.1% of samples
    let mut level = max_rank;
    while level > 0 {
        let count = ranks.iter().filter(|&&r| r >= level).count();
        if count as f64 > 1e-3 * n as f64 {
            return level;
        }
        level -= 1;
    }
    0
}

/// J = ess sup of the numerical rank of the Gramian.
pub fn minimal_generator_count(p: &HermitianField, rho: f64) -> usize {
    let eigs: Vec<Vec<f64>> = p.mats().par_iter().map(sorted_eigenvalues).collect();
    let ranks: Vec<usize> = eigs
        .iter()
        .map(|e| numerical_rank(e, rho * e[0].max(0.0)))
        .collect();
    ess_sup_rank(p, &ranks, rho)
}

/// Eigenvalue domination at rank-splitting samples: the smallest positive
/// eigenvalue of the sum is dominated by each piece's.
#[derive(Debug, Clone, Serialize)]
pub struct EvDominationReport {
    pub checked: usize,
    pub skipped: usize,
    pub violations: usize,
    pub max_excess: f64,
}

pub fn ev_domination_check(
    h: &GeneratorSet,
    lat: &LatticeSpec,
    rho: f64,
) -> Result<EvDominationReport> {
    lat.validate()?;
    let full = gramian(h)?;
    let subs: Vec<HermitianField> = lat
        .reps()
        .iter()
        .map(|&rep| sub_gramian(h, lat, rep))
        .collect::<Result<_>>()?;
    let n = full.grid().len();
    let mut checked = 0usize;
    let mut skipped = 0usize;
    let mut violations = 0usize;
    let mut max_excess = 0.0f64;
    for s in 0..n {
        let fe = sorted_eigenvalues(&full.mats()[s]);
        let thresh = rho * fe[0].max(0.0);
        let r_full = numerical_rank(&fe, thresh);
        let sub_e: Vec<Vec<f64>> = subs
            .iter()
            .map(|sub| sorted_eigenvalues(&sub.mats()[s]))
            .collect();
        let r_sum: usize = sub_e.iter().map(|e| numerical_rank(e, thresh)).sum();
        // Lemma applies only where the rank formula holds with positive rank
        if r_full == 0 || r_full != r_sum {
            skipped += 1;
            continue;
        }
        let mu = fe
            .iter()
            .filter(|&&l| l > thresh)
            .cloned()
            .fold(f64::INFINITY, f64::min);
        let min_eta = sub_e
            .iter()
            .filter_map(|e| {
                let eta = e
                    .iter()
                    .filter(|&&l| l > thresh)
                    .cloned()
                    .fold(f64::INFINITY, f64::min);
                if eta.is_finite() {
                    Some(eta)
                } else {
                    None
                }
            })
            .fold(f64::INFINITY, f64::min);
        checked += 1;
        if mu > min_eta + 1e-9 {
            violations += 1;
            max_excess = max_excess.max(mu - min_eta);
        }
    }
    Ok(EvDominationReport {
        checked,
        skipped,
        violations,
        max_excess,
    })
}

/// √ζ_k fields of the Gramian (eigenvalues clamped at zero before the root).
pub fn sqrt_eigen_fields(p: &HermitianField) -> Result<Vec<SampleField>> {
    let k = p.k();
    let eigs: Vec<Vec<f64>> = p.mats().par_iter().map(sorted_eigenvalues).collect();
    (0..k)
        .map(|i| {
            SampleField::new(
                *p.grid(),
                eigs.iter()
                    .map(|e| C64::new(e[i].max(0.0).sqrt(), 0.0))
                    .collect(),
            )
        })
        .collect()
}

/// Pointwise proof bound for the square-root eigenvalues:
/// |√ζ_k(x) − √ζ_k(y)| ≤ (Σ_j Σ_cells |ĥ_j(x+c) − ĥ_j(y+c)|²)^{1/2}
/// at randomly drawn sample pairs.
#[derive(Debug, Clone, Serialize)]
pub struct SqrtEigenReport {
    pub pairs_checked: usize,
    pub violations: usize,
    pub max_excess: f64,
}

pub fn sqrt_eigen_bound_check(
    h: &GeneratorSet,
    pairs: usize,
    seed: u64,
) -> Result<SqrtEigenReport> {
    let p = gramian(h)?;
    let roots = sqrt_eigen_fields(&p)?;
    let n = h.cell_grid().len();
    let cells = h.cells();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0usize;
    let mut max_excess = 0.0f64;
    for _ in 0..pairs {
        let x = rng.random_range(0..n);
        let y = rng.random_range(0..n);
        let mut rhs_sq = 0.0;
        for j in 0..h.count() {
            for cf in 0..cells.len() {
                rhs_sq += (h.value(j, cf, x) - h.value(j, cf, y)).norm_sqr();
            }
        }
        let rhs = rhs_sq.sqrt();
        for root in &roots {
            let lhs = (root.value(x).re - root.value(y).re).abs();
            if lhs > rhs + 1e-9 {
                violations += 1;
                max_excess = max_excess.max(lhs - rhs);
            }
        }
    }
    Ok(SqrtEigenReport {
        pairs_checked: pairs,
        violations,
        max_excess,
    })
}

/// Box scan of the translate-system completeness constant: best D in
/// D‖F̂‖_{[ℓ^q]^K} ≤ ‖F‖_{L²_P} over vector trig polynomials with spectrum in
/// the box, reported per box with the fitted trend.
#[derive(Debug, Clone, Serialize)]
pub struct SisCqReport {
    pub q: f64,
    pub series: ScanSeries,
    pub fit: ExponentFit,
    /// constants stay bounded away from zero under box growth
    pub holds: bool,
    pub min_gram_eigenvalue: f64,
}

pub fn sis_cq_diagnostic(
    h: &GeneratorSet,
    q: f64,
    box_half_widths: &[usize],
    opts: &NormOptions,
) -> Result<SisCqReport> {
    if !(q >= 2.0) {
        return Err(Error::Domain(format!("diagnostic needs q >= 2, got {q}")));
    }
    let p = gramian(h)?;
    let k = h.count();
    let grid = p.grid();
    let d = grid.dim();
    // degenerate P guard: the Gramian must carry mass
    let sup = p
        .mats()
        .iter()
        .flat_map(|m| m.iter())
        .map(|z| z.norm())
        .fold(0.0f64, f64::max);
    if sup < 1e-12 {
        return Err(Error::DegenerateWeight(
            "Gramian is numerically zero".into(),
        ));
    }
    // Fourier data of every entry, on the largest difference box needed
    let max_n = *box_half_widths.iter().max().unwrap_or(&0);
    let diff_box = FreqBox::new(d, 2 * max_n)?;
    if diff_box.side() > grid.n() {
        return Err(Error::Precondition(format!(
            "cell grid n={} cannot resolve the difference box {}",
            grid.n(),
            diff_box.side()
        )));
    }
    let mut hats = Vec::with_capacity(k * k);
    for i in 0..k {
        for j in 0..k {
            hats.push(analyze(&p.entry_field(i, j)?, &diff_box)?);
        }
    }
    let mut min_gram_eig = f64::INFINITY;
    let pts: Vec<(f64, f64)> = box_half_widths
        .iter()
        .map(|&half| {
            let fb = FreqBox::new(d, half)?;
            let dim = fb.len();
            let gram = DMatrix::from_fn(k * dim, k * dim, |r, c| {
                let (i, kf) = (r / dim, r % dim);
                let (j, mf) = (c / dim, c % dim);
                let kk = fb.index(kf);
                let mm = fb.index(mf);
                let diff = [kk[0] - mm[0], kk[1] - mm[1]];
                hats[i * k + j].coeff(&diff[..d])
            });
            let core = gram_cq_core(&gram, q, opts)?;
            min_gram_eig = min_gram_eig.min(core.gram_min_eigenvalue);
            Ok((half as f64, core.d_best))
        })
        .collect::<Result<_>>()?;
    let series = ScanSeries::new(format!("sis_cq_q{q}"), pts)?;
    let fit = loglog_fit(&series)?;
    Ok(SisCqReport {
        q,
        holds: fit.slope >= -SLOPE_TOL,
        fit,
        series,
        min_gram_eigenvalue: min_gram_eig,
    })
}

/// Helper: real generator function from a closure on ℝ (d = 1).
pub fn real_generator(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> GeneratorFn {
    Arc::new(move |x: &[f64]| C64::new(f(x[0]), 0.0))
}
