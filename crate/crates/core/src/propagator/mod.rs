//! Semi-analytic propagation through the eigendecomposition of the
//! superoperator, `vec ρ(t) = Σ_κ c_κ e^{v_κ t} ρ_κ` with `c_κ = ξ_κ · vec ρ(0)`.
//!
//! The generator is block lower-triangular once its coupling graph is split
//! into strongly connected components (for a single driven transition the
//! electronic sectors only talk to each other through radiative decay), so
//! each diagonal block is diagonalized on its own and the eigenvectors are
//! extended across the off-diagonal couplings.

mod integrate;
mod sparse;

pub use integrate::{integrate_direct, output_grid, DirectOptions, DirectTrajectory};
pub use sparse::Csr;

use ndarray::{s, Array1, Array2, Axis};
use ndarray_linalg::{Eig, Inverse};

use crate::error::{Error, Result};
use crate::liouvillian::{unvec, vec_of, Superoperator};
use crate::quantum_core::{DensityMatrix, C64};

/// Which eigenpairs take part in propagation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KeepPolicy {
    All,
    /// Keep pairs with `−Re v_κ ≤ v_cut` (ps⁻¹).
    MaxDecayRate(f64),
    /// Keep pairs with `−Re v_κ · t_stage ≤ factor`.
    StageWindow { t_stage: f64, factor: f64 },
    /// Keep the `n` slowest-decaying pairs.
    Count(usize),
}

impl KeepPolicy {
    pub fn stage_default(t_stage: f64) -> Self {
        KeepPolicy::StageWindow {
            t_stage,
            factor: 30.0,
        }
    }

    fn cut(&self) -> Option<f64> {
        match *self {
            KeepPolicy::All | KeepPolicy::Count(_) => None,
            KeepPolicy::MaxDecayRate(v) => Some(v),
            KeepPolicy::StageWindow { t_stage, factor } => Some(factor / t_stage.max(f64::MIN_POSITIVE)),
        }
    }
}

/// Eigenpairs of a superoperator, sorted by `−Re v_κ` ascending.
#[derive(Debug, Clone)]
pub struct EigenPropagator {
    hilbert_dim: usize,
    eigenvalues: Array1<C64>,
    /// Right eigenvectors as columns, each of unit 2-norm.
    right: Array2<C64>,
    /// Dual vectors as rows, `ξ_κ · ρ_κ = 1`.
    dual: Array2<C64>,
    kept: usize,
    biorthonormality_residual: f64,
    defective: bool,
    block_sizes: Vec<usize>,
}

impl EigenPropagator {
    /// Biorthonormality residual above which the decomposition is rejected.
    pub const DEFECT_THRESHOLD: f64 = 1e-6;

    pub fn hilbert_dim(&self) -> usize {
        self.hilbert_dim
    }

    pub fn eigenvalues(&self) -> &Array1<C64> {
        &self.eigenvalues
    }

    pub fn kept_eigenvalues(&self) -> ndarray::ArrayView1<'_, C64> {
        self.eigenvalues.slice(s![..self.kept])
    }

    pub fn right_vectors(&self) -> &Array2<C64> {
        &self.right
    }

    pub fn dual_vectors(&self) -> &Array2<C64> {
        &self.dual
    }

    pub fn kept_count(&self) -> usize {
        self.kept
    }

    pub fn total_count(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `max |ξ_κ · ρ_κ' − δ_κκ'|` over all pairs.
    pub fn biorthonormality_residual(&self) -> f64 {
        self.biorthonormality_residual
    }

    pub fn is_defective(&self) -> bool {
        self.defective
    }

    /// Sizes of the diagonal blocks that were decomposed independently.
    pub fn block_sizes(&self) -> &[usize] {
        &self.block_sizes
    }

    /// Same decomposition with a different truncation.
    pub fn with_policy(&self, policy: KeepPolicy) -> Self {
        let mut out = self.clone();
        out.kept = if self.defective {
            self.total_count()
        } else {
            kept_for(&self.eigenvalues, policy)
        };
        out
    }

    /// Expansion coefficients `c_κ = ξ_κ · vec ρ₀` for every pair.
    pub fn coefficients(&self, rho0: &DensityMatrix) -> Result<Array1<C64>> {
        self.check_dim(rho0)?;
        Ok(self.dual.dot(&vec_of(rho0.operator())))
    }

    fn check_dim(&self, rho: &DensityMatrix) -> Result<()> {
        if rho.dim() != self.hilbert_dim {
            return Err(Error::DimensionMismatch {
                expected: self.hilbert_dim,
                got: rho.dim(),
            });
        }
        Ok(())
    }

    /// Index of the eigenvalue closest to zero.
    pub fn stationary_index(&self) -> usize {
        let mut best = 0;
        for (k, v) in self.eigenvalues.iter().enumerate() {
            if v.norm() < self.eigenvalues[best].norm() {
                best = k;
            }
        }
        best
    }

    /// The right eigenvector of `stationary_index`, normalized to unit trace.
    pub fn stationary_state(&self) -> Result<DensityMatrix> {
        let k = self.stationary_index();
        let op = unvec(&self.right.column(k).to_owned())?;
        let tr = op.trace();
        Ok(DensityMatrix::from_unchecked(op.scale(C64::new(1.0, 0.0) / tr)))
    }
}

fn kept_for(eigenvalues: &Array1<C64>, policy: KeepPolicy) -> usize {
    match policy {
        KeepPolicy::All => eigenvalues.len(),
        KeepPolicy::Count(n) => n.min(eigenvalues.len()),
        _ => {
            let cut = policy.cut().unwrap_or(f64::INFINITY);
            eigenvalues.iter().take_while(|v| -v.re <= cut).count()
        }
    }
}

/// Eigendecomposition of `v` by strongly connected diagonal blocks.
pub fn diagonalize(v: &Superoperator, policy: KeepPolicy) -> Result<EigenPropagator> {
    let n = v.dim();
    let m = v.matrix();
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Linalg("superoperator has non-finite entries".into()));
    }
    let csr = Csr::from_dense(m);
    let csr_t = csr.transpose();
    let blocks = csr.influence_components();

    struct BlockEig {
        values: Array1<C64>,
        right: Array2<C64>,
        left: Array2<C64>,
    }
    let mut decomps = Vec::with_capacity(blocks.len());
    for idx in &blocks {
        let sub = Array2::from_shape_fn((idx.len(), idx.len()), |(i, j)| m[[idx[i], idx[j]]]);
        let (values, right) = sub.eig()?;
        let left = right.inv()?;
        decomps.push(BlockEig { values, right, left });
    }

    let zero = C64::new(0.0, 0.0);
    let mut eigenvalues = Vec::with_capacity(n);
    let mut right = Array2::<C64>::zeros((n, n));
    let mut dual = Array2::<C64>::zeros((n, n));
    let mut defective = false;
    let mut col = 0usize;
    let mut x = vec![zero; n];
    let mut y = vec![zero; n];

    // (V_cc − λ)⁻¹ r = R diag(1/(μ − λ)) L r
    let resolvent = |d: &BlockEig, lambda: C64, rhs: &Array1<C64>, defective: &mut bool| {
        let mut w = d.left.dot(rhs);
        let scale = rhs.iter().map(|z| z.norm()).fold(0.0, f64::max);
        for (wk, mu) in w.iter_mut().zip(d.values.iter()) {
            let gap = *mu - lambda;
            if gap.norm() <= 1e-10 * lambda.norm().max(1.0) {
                if wk.norm() > 1e-10 * scale.max(1e-300) {
                    *defective = true;
                }
                *wk = zero;
            } else {
                *wk /= gap;
            }
        }
        d.right.dot(&w)
    };

    for (b, idx) in blocks.iter().enumerate() {
        let d = &decomps[b];
        for k in 0..idx.len() {
            let lambda = d.values[k];
            x.iter_mut().for_each(|z| *z = zero);
            y.iter_mut().for_each(|z| *z = zero);
            for (i, &g) in idx.iter().enumerate() {
                x[g] = d.right[[i, k]];
                y[g] = d.left[[k, i]];
            }
            for c in b + 1..blocks.len() {
                let rhs = Array1::from_shape_fn(blocks[c].len(), |i| -csr.row_dot(blocks[c][i], &x));
                if rhs.iter().all(|z| *z == zero) {
                    continue;
                }
                let xc = resolvent(&decomps[c], lambda, &rhs, &mut defective);
                for (i, &g) in blocks[c].iter().enumerate() {
                    x[g] = xc[i];
                }
            }
            for a in (0..b).rev() {
                let rhs = Array1::from_shape_fn(blocks[a].len(), |i| -csr_t.row_dot(blocks[a][i], &y));
                if rhs.iter().all(|z| *z == zero) {
                    continue;
                }
                // y_a (V_aa − λ) = rhs  ⇔  (V_aaᵀ − λ) y_aᵀ = rhsᵀ
                let da = &decomps[a];
                let mut w = rhs.dot(&da.right);
                let scale = rhs.iter().map(|z| z.norm()).fold(0.0, f64::max);
                for (wk, mu) in w.iter_mut().zip(da.values.iter()) {
                    let gap = *mu - lambda;
                    if gap.norm() <= 1e-10 * lambda.norm().max(1.0) {
                        if wk.norm() > 1e-10 * scale.max(1e-300) {
                            defective = true;
                        }
                        *wk = zero;
                    } else {
                        *wk /= gap;
                    }
                }
                let ya = w.dot(&da.left);
                for (i, &g) in blocks[a].iter().enumerate() {
                    y[g] = ya[i];
                }
            }
            let norm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let s = if norm > 0.0 { 1.0 / norm } else { 1.0 };
            for i in 0..n {
                right[[i, col]] = x[i] * s;
                dual[[col, i]] = y[i] / s;
            }
            eigenvalues.push(lambda);
            col += 1;
        }
    }

    // sort by −Re ascending, ties by imaginary part for determinism
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let (va, vb) = (eigenvalues[a], eigenvalues[b]);
        (-va.re)
            .partial_cmp(&-vb.re)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(va.im.partial_cmp(&vb.im).unwrap_or(std::cmp::Ordering::Equal))
    });
    let eigenvalues = Array1::from_iter(order.iter().map(|&k| eigenvalues[k]));
    let right = right.select(Axis(1), &order);
    let dual = dual.select(Axis(0), &order);

    let mut gram = dual.dot(&right);
    for i in 0..n {
        gram[[i, i]] -= C64::new(1.0, 0.0);
    }
    let residual = gram.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if !residual.is_finite() || residual > EigenPropagator::DEFECT_THRESHOLD {
        defective = true;
    }
    if defective {
        log::warn!("superoperator eigenbasis is (near-)defective: biorthonormality residual {residual:e}");
    }
    let kept = if defective { n } else { kept_for(&eigenvalues, policy) };
    Ok(EigenPropagator {
        hilbert_dim: v.hilbert_dim(),
        eigenvalues,
        right,
        dual,
        kept,
        biorthonormality_residual: residual,
        defective,
        block_sizes: blocks.iter().map(Vec::len).collect(),
    })
}

/// `ρ(t)` from the kept eigenpairs.
pub fn propagate(rho0: &DensityMatrix, ep: &EigenPropagator, t: f64) -> Result<DensityMatrix> {
    Ok(propagate_many(rho0, ep, &[t])?.remove(0))
}

/// `ρ(t)` at several times, sharing the projection onto the dual basis.
pub fn propagate_many(rho0: &DensityMatrix, ep: &EigenPropagator, times: &[f64]) -> Result<Vec<DensityMatrix>> {
    if let Some(&t) = times.iter().find(|t| **t < 0.0) {
        return Err(Error::NegativeTime(t));
    }
    let c = ep.coefficients(rho0)?;
    let k = ep.kept;
    let weights = Array2::from_shape_fn((k, times.len()), |(i, j)| c[i] * (ep.eigenvalues[i] * times[j]).exp());
    let vecs = ep.right.slice(s![.., ..k]).dot(&weights);
    vecs.columns()
        .into_iter()
        .map(|col| unvec(&col.to_owned()).map(DensityMatrix::from_unchecked))
        .collect()
}

/// `max_{t ∈ window} Σ_{dropped} |c_κ| e^{Re v_κ t}`. The dropped terms decay
/// monotonically, so the maximum sits at the start of the window.
pub fn truncation_error_estimate(ep: &EigenPropagator, rho0: &DensityMatrix, t_window: (f64, f64)) -> Result<f64> {
    let (t0, t1) = t_window;
    if t0 < 0.0 || t1 < t0 {
        return Err(Error::param("t_window", format!("invalid window [{t0}, {t1}]")));
    }
    let c = ep.coefficients(rho0)?;
    Ok((ep.kept..ep.total_count())
        .map(|k| c[k].norm() * (ep.eigenvalues[k].re * t0).exp())
        .sum())
}
