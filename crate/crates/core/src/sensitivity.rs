//! Sensitivity-matrix designs certifying the perturbation bound
//! `‖f_{w+u}(X) − f_w(X)‖∞² ≤ Σ_l ‖A_l u_l‖₂²`.
//!
//! Four designs are built here. The exact spatial design
//! `A_l = (√d/n)(Π_{k>l} W_kᵀ) ⊗ (1ᵀ L^{d-1} X Π_{k<l} W_k)` factors as
//! `A_lᵀA_l = N_l N_lᵀ ⊗ v_l v_lᵀ`; the diagonal and low-rank designs
//! dominate its Gram unconditionally; the spectral design
//! `A_l = α_l (I ⊗ ψ(L) H_{l-1})` routes sensitivity through a graph
//! filter `ψ` evaluated on the propagation spectrum.
//!
//! The Jacobian dominance `J_lᵀJ_l ⪯ (1/d) A_lᵀA_l` certified by
//! [`check_dominance`] holds for the identity activation, and for ReLU
//! whenever no unit is masked (all pre-activations positive). With
//! masked units the collapsed row `1ᵀL^{d-1}X` of the spatial designs can
//! lose cancellations the mask removes, and the dominance genuinely
//! fails; see the negative-control test at the bottom of this module.
//! The spectral design keeps per-node structure and its convolutional
//! layers (`l < d`) dominate under any 0/1 masking; its readout layer
//! falls back to the exact spatial `A_d` and inherits that caveat.

use crate::error::{Error, Result};
use crate::gcn::{forward, jacobian_layer_from_state, GcnModel};
use crate::graphs::Propagation;
use crate::matrixkit::{kron, psd_dominates, sym_eig, Matrix};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Graph-filter families for the spectral design.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FilterKind {
    /// ψ(λ) = λ
    Identity,
    /// ψ(λ) = (1+2ξ)/(1+ξ(1−λ))
    LowPassRational,
    /// ψ(λ) = |λ| + ξ(1−λ²)
    LowPassPoly,
    /// ψ(λ) = (1+2ξ)/(1+ξ(1+λ))
    HighPassRational,
    /// ψ(λ) = |λ| + ξ(1+λ)
    HighPassPoly,
}

impl FilterKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "identity" | "id" => Ok(FilterKind::Identity),
            "lowpass-rational" | "lowpass" | "lp" => Ok(FilterKind::LowPassRational),
            "lowpass-poly" | "lp-poly" => Ok(FilterKind::LowPassPoly),
            "highpass-rational" | "highpass" | "hp" => Ok(FilterKind::HighPassRational),
            "highpass-poly" | "hp-poly" => Ok(FilterKind::HighPassPoly),
            other => Err(Error::Validation(format!("unknown filter kind {other:?}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FilterKind::Identity => "identity",
            FilterKind::LowPassRational => "lowpass-rational",
            FilterKind::LowPassPoly => "lowpass-poly",
            FilterKind::HighPassRational => "highpass-rational",
            FilterKind::HighPassPoly => "highpass-poly",
        }
    }

    /// Default emphasis: 1.0 for the rational filters, 0.5 for the
    /// polynomial ones (keeps the (1+2ξ) amplification mild); the
    /// identity filter takes none.
    pub fn default_xi(self) -> f64 {
        match self {
            FilterKind::Identity => 0.0,
            FilterKind::LowPassRational | FilterKind::HighPassRational => 1.0,
            FilterKind::LowPassPoly | FilterKind::HighPassPoly => 0.5,
        }
    }
}

/// A graph filter ψ with its emphasis parameter ξ ≥ 0.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    pub kind: FilterKind,
    pub xi: f64,
}

impl FilterSpec {
    pub fn new(kind: FilterKind, xi: f64) -> Result<Self> {
        if !(xi >= 0.0 && xi.is_finite()) {
            return Err(Error::Validation(format!("filter xi must be >= 0, got {xi}")));
        }
        Ok(Self { kind, xi })
    }

    pub fn with_default_xi(kind: FilterKind) -> Self {
        Self { kind, xi: kind.default_xi() }
    }

    /// Evaluates ψ(λ).
    pub fn evaluate(&self, lambda: f64) -> f64 {
        let xi = self.xi;
        match self.kind {
            FilterKind::Identity => lambda,
            FilterKind::LowPassRational => (1.0 + 2.0 * xi) / (1.0 + xi * (1.0 - lambda)),
            FilterKind::LowPassPoly => lambda.abs() + xi * (1.0 - lambda * lambda),
            FilterKind::HighPassRational => (1.0 + 2.0 * xi) / (1.0 + xi * (1.0 + lambda)),
            FilterKind::HighPassPoly => lambda.abs() + xi * (1.0 + lambda),
        }
    }

    /// `min_i (|ψ(λ_i)| − |λ_i|)` over a spectrum; the design is
    /// admissible when this margin is ≥ −1e-12.
    pub fn admissibility_margin(&self, eigenvalues: &[f64]) -> f64 {
        eigenvalues
            .iter()
            .map(|&l| self.evaluate(l).abs() - l.abs())
            .fold(f64::INFINITY, f64::min)
    }

    fn require_admissible(&self, eigenvalues: &[f64]) -> Result<()> {
        let margin = self.admissibility_margin(eigenvalues);
        if margin < -1e-12 {
            return Err(Error::Validation(format!(
                "filter {} (xi = {}) violates |psi(lambda)| >= |lambda| on the spectrum by {margin}",
                self.kind.name(),
                self.xi
            )));
        }
        Ok(())
    }
}

impl fmt::Display for FilterSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(xi={})", self.kind.name(), self.xi)
    }
}

/// The four sensitivity designs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Design {
    ExactSpatial,
    Diagonal,
    LowRank,
    Spectral(FilterSpec),
}

impl fmt::Display for Design {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Design::ExactSpatial => write!(f, "exact-spatial"),
            Design::Diagonal => write!(f, "diagonal"),
            Design::LowRank => write!(f, "low-rank"),
            Design::Spectral(spec) => write!(f, "spectral-{spec}"),
        }
    }
}

/// A per-layer sensitivity (or covariance) block: either a scalar
/// multiple of the identity, never materialized, or a dense matrix.
#[derive(Clone, Debug)]
pub enum StructuredMatrix {
    ScaledIdentity { dim: usize, scale: f64 },
    Dense(Matrix),
}

impl StructuredMatrix {
    pub fn rows(&self) -> usize {
        match self {
            StructuredMatrix::ScaledIdentity { dim, .. } => *dim,
            StructuredMatrix::Dense(m) => m.rows(),
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            StructuredMatrix::ScaledIdentity { dim, .. } => *dim,
            StructuredMatrix::Dense(m) => m.cols(),
        }
    }

    pub fn to_dense(&self) -> Result<Matrix> {
        match self {
            StructuredMatrix::ScaledIdentity { dim, scale } => {
                Matrix::identity(*dim)?.scale(*scale)
            }
            StructuredMatrix::Dense(m) => Ok(m.clone()),
        }
    }

    /// `AᵀA`, densified.
    pub fn gram(&self) -> Result<Matrix> {
        match self {
            StructuredMatrix::ScaledIdentity { dim, scale } => {
                Matrix::identity(*dim)?.scale(scale * scale)
            }
            StructuredMatrix::Dense(m) => m.gram(),
        }
    }

    /// `Tr(AᵀA) = Tr(AAᵀ) = ‖A‖_F²`.
    pub fn gram_trace(&self) -> f64 {
        match self {
            StructuredMatrix::ScaledIdentity { dim, scale } => scale * scale * *dim as f64,
            StructuredMatrix::Dense(m) => m.frobenius_norm().powi(2),
        }
    }

    /// `A u`.
    pub fn apply(&self, u: &[f64]) -> Result<Vec<f64>> {
        match self {
            StructuredMatrix::ScaledIdentity { dim, scale } => {
                if u.len() != *dim {
                    return Err(Error::Dimension("structured apply length mismatch".into()));
                }
                Ok(u.iter().map(|x| x * scale).collect())
            }
            StructuredMatrix::Dense(m) => m.matvec(u),
        }
    }

    /// `‖A u‖₂²`.
    pub fn apply_norm_sq(&self, u: &[f64]) -> Result<f64> {
        Ok(self.apply(u)?.iter().map(|x| x * x).sum())
    }

    pub fn scaled(&self, factor: f64) -> Result<StructuredMatrix> {
        Ok(match self {
            StructuredMatrix::ScaledIdentity { dim, scale } => {
                StructuredMatrix::ScaledIdentity { dim: *dim, scale: scale * factor }
            }
            StructuredMatrix::Dense(m) => StructuredMatrix::Dense(m.scale(factor)?),
        })
    }
}

/// Per-layer sensitivity matrices `A_1..A_d` with the design descriptor
/// that produced them and spectral diagnostics where applicable.
#[derive(Clone, Debug)]
pub struct SensitivitySet {
    pub design: Design,
    /// `A_l` for `l = 1..d`; every block has `h_{l-1} h_l` columns.
    pub matrices: Vec<StructuredMatrix>,
    /// Spectral design only: `α_1..α_{d-1}`.
    pub alphas: Option<Vec<f64>>,
    /// Spectral design only: `g_1..g_{d-1}` plus the readout fallback
    /// weight at position `d`.
    pub g_values: Option<Vec<f64>>,
}

impl SensitivitySet {
    pub fn depth(&self) -> usize {
        self.matrices.len()
    }

    /// `A_l`, 1-based.
    pub fn layer(&self, l: usize) -> &StructuredMatrix {
        &self.matrices[l - 1]
    }

    /// `Σ_l ‖A_l u_l‖₂²` over per-layer (column-stacked) perturbations.
    pub fn total_norm_sq(&self, per_layer: &[Vec<f64>]) -> Result<f64> {
        if per_layer.len() != self.depth() {
            return Err(Error::Dimension("perturbation block count mismatch".into()));
        }
        let mut total = 0.0;
        for (a, u) in self.matrices.iter().zip(per_layer) {
            total += a.apply_norm_sq(u)?;
        }
        Ok(total)
    }

    /// Uniformly rescaled copy (debug aid for negative controls).
    pub fn scaled(&self, factor: f64) -> Result<SensitivitySet> {
        Ok(SensitivitySet {
            design: self.design,
            matrices: self
                .matrices
                .iter()
                .map(|m| m.scaled(factor))
                .collect::<Result<Vec<_>>>()?,
            alphas: self.alphas.clone(),
            g_values: self.g_values.clone(),
        })
    }
}

/// `N_lᵀ = (√d/n) Π_{k=d}^{l+1} W_kᵀ` (a `K x h_l` matrix; the empty
/// product at `l = d` is the identity).
fn weight_chain_transpose(model: &GcnModel, prop: &Propagation, l: usize) -> Result<Matrix> {
    let d = model.depth();
    let n = prop.node_count() as f64;
    let mut m = Matrix::identity(model.classes())?;
    for k in ((l + 1)..=d).rev() {
        m = m.matmul(&model.weight(k).transpose())?;
    }
    m.scale((d as f64).sqrt() / n)
}

/// `v_lᵀ = 1ᵀ L^{d-1} X Π_{k=1}^{l-1} W_k` (length `h_{l-1}`).
fn left_collapsed_vector(
    model: &GcnModel,
    prop: &Propagation,
    x: &Matrix,
    l: usize,
) -> Result<Vec<f64>> {
    let d = model.depth();
    let mut v = vec![1.0; prop.node_count()];
    for _ in 0..(d - 1) {
        v = prop.matrix.tr_matvec(&v)?;
    }
    let mut v = x.tr_matvec(&v)?;
    for k in 1..l {
        v = model.weight(k).tr_matvec(&v)?;
    }
    Ok(v)
}

/// Exact spatial factors `(N_lᵀ, v_l)` of layer `l`, exposed for the
/// factorization identities `A_lᵀA_l = N_lN_lᵀ ⊗ v_lv_lᵀ` and
/// `A_lA_lᵀ = ‖v_l‖₂² N_lᵀN_l`.
pub fn spatial_factors(
    model: &GcnModel,
    prop: &Propagation,
    x: &Matrix,
    l: usize,
) -> Result<(Matrix, Vec<f64>)> {
    let d = model.depth();
    if l < 1 || l > d {
        return Err(Error::Validation(format!("layer {l} out of range 1..={d}")));
    }
    Ok((weight_chain_transpose(model, prop, l)?, left_collapsed_vector(model, prop, x, l)?))
}

fn check_features(model: &GcnModel, prop: &Propagation, x: &Matrix) -> Result<()> {
    if x.rows() != prop.node_count() || x.cols() != model.width(0) {
        return Err(Error::Dimension(format!(
            "features {}x{} incompatible with n = {}, h_0 = {}",
            x.rows(),
            x.cols(),
            prop.node_count(),
            model.width(0)
        )));
    }
    Ok(())
}

/// Exact spatial design: `A_l = N_lᵀ ⊗ v_lᵀ`.
pub fn build_spatial_exact(
    model: &GcnModel,
    prop: &Propagation,
    x: &Matrix,
) -> Result<SensitivitySet> {
    check_features(model, prop, x)?;
    let d = model.depth();
    let mut matrices = Vec::with_capacity(d);
    for l in 1..=d {
        let (n_t, v) = spatial_factors(model, prop, x, l)?;
        let a = kron(&n_t, &Matrix::row_vector(&v)?)?;
        matrices.push(StructuredMatrix::Dense(a));
    }
    Ok(SensitivitySet { design: Design::ExactSpatial, matrices, alphas: None, g_values: None })
}

/// Per-layer diagonal scales
/// `s_l = √(d/n) B ‖L^{d-1}1‖₂ Π_{i≠l} β_i` for arbitrary norm
/// estimates `β_i` (realized or spectral-normalized).
pub fn diagonal_scales(
    norms: &[f64],
    n: usize,
    feature_bound: f64,
    propagated_ones_norm: f64,
) -> Vec<f64> {
    let d = norms.len();
    let base = (d as f64 / n as f64).sqrt() * feature_bound * propagated_ones_norm;
    (0..d)
        .map(|l| {
            let product: f64 =
                norms.iter().enumerate().filter(|&(i, _)| i != l).map(|(_, &b)| b).product();
            base * product
        })
        .collect()
}

/// Diagonal design: `A_l = s_l I` with the scale stored, never the
/// identity itself.
pub fn build_spatial_diagonal(
    model: &GcnModel,
    prop: &Propagation,
    feature_bound: f64,
) -> Result<SensitivitySet> {
    if feature_bound <= 0.0 {
        return Err(Error::Validation(format!(
            "feature bound must be positive, got {feature_bound}"
        )));
    }
    let d = model.depth();
    let norms = model.spectral_norms()?;
    let ones = prop.propagate_ones(d - 1);
    let ones_norm = ones.iter().map(|x| x * x).sum::<f64>().sqrt();
    let scales = diagonal_scales(&norms, prop.node_count(), feature_bound, ones_norm);
    let matrices = (1..=d)
        .map(|l| StructuredMatrix::ScaledIdentity {
            dim: model.width(l - 1) * model.width(l),
            scale: scales[l - 1],
        })
        .collect();
    Ok(SensitivitySet { design: Design::Diagonal, matrices, alphas: None, g_values: None })
}

/// Low-rank design: `A_l = c_l (Q_lᵀ ⊗ v_lᵀ)` where
/// `c_l = (√d/n) Π_{k>l} ‖W_k‖₂` and `Q_l` holds the top-`K`
/// eigenvectors of `N_l N_lᵀ`, so that `A_l A_lᵀ = c_l² ‖v_l‖₂² I_K`
/// exactly while `A_lᵀ A_l ⪰ N_l N_lᵀ ⊗ v_l v_lᵀ`.
pub fn build_spatial_lowrank(
    model: &GcnModel,
    prop: &Propagation,
    x: &Matrix,
) -> Result<SensitivitySet> {
    check_features(model, prop, x)?;
    let d = model.depth();
    let n = prop.node_count() as f64;
    let k_classes = model.classes();
    let norms = model.spectral_norms()?;
    let mut matrices = Vec::with_capacity(d);
    for l in 1..=d {
        let h_l = model.width(l);
        let (n_t, v) = spatial_factors(model, prop, x, l)?;
        let tail: f64 = norms[l..].iter().product();
        let c = (d as f64).sqrt() / n * tail;
        let rank = k_classes.min(h_l);
        // Orthonormal column basis containing col(N_l).
        let outer = n_t.transpose().matmul(&n_t)?; // N_l N_lᵀ, h_l x h_l
        let eig = sym_eig(&outer.symmetrized())?;
        let q_t = Matrix::from_fn(rank, h_l, |r, c_| eig.eigenvectors.get(c_, r))?;
        let a = kron(&q_t.scale(c)?, &Matrix::row_vector(&v)?)?;
        matrices.push(StructuredMatrix::Dense(a));
    }
    Ok(SensitivitySet { design: Design::LowRank, matrices, alphas: None, g_values: None })
}

/// Spectral sensitivity `g_l(λ) = max_i |λ_i^{d-l-1}| · max_j |ψ(λ_j) λ_j^{l-1}|`
/// over a raw spectrum, for convolutional layers `1 <= l <= d-1`.
pub fn spectral_sensitivity_from_eigenvalues(
    eigenvalues: &[f64],
    filter: &FilterSpec,
    l: usize,
    d: usize,
) -> Result<f64> {
    if l < 1 || l >= d {
        return Err(Error::Validation(format!(
            "spectral sensitivity defined for layers 1..={}, got l = {l}",
            d - 1
        )));
    }
    let hop = eigenvalues
        .iter()
        .map(|&lam| lam.powi((d - l - 1) as i32).abs())
        .fold(0.0, f64::max);
    let filtered = eigenvalues
        .iter()
        .map(|&lam| (filter.evaluate(lam) * lam.powi((l - 1) as i32)).abs())
        .fold(0.0, f64::max);
    Ok(hop * filtered)
}

/// [`spectral_sensitivity_from_eigenvalues`] over a propagation's cached
/// spectrum.
pub fn spectral_sensitivity(
    prop: &Propagation,
    filter: &FilterSpec,
    l: usize,
    d: usize,
) -> Result<f64> {
    spectral_sensitivity_from_eigenvalues(prop.eigenvalues(), filter, l, d)
}

/// Effective sensitivity weight of the readout layer, where the filtered
/// design is undefined (the α exponent would be −1) and the exact spatial
/// `A_d` is used instead:  `g_d² = K/(h n) · ‖L^{d-1}1‖₂²`, the exact
/// trace bound expressed on the same `d h B² g² Π‖W‖²` scale.
pub fn readout_sensitivity(prop: &Propagation, d: usize, k_classes: usize, h_max: usize) -> f64 {
    let ones = prop.propagate_ones(d - 1);
    let ones_norm_sq: f64 = ones.iter().map(|x| x * x).sum();
    (k_classes as f64 / (h_max as f64 * prop.node_count() as f64) * ones_norm_sq).sqrt()
}

/// Spectral design: `A_l = α_l (I_{h_l} ⊗ ψ(L) H_{l-1})` for `l < d`
/// with `α_l = (√d/n) ‖1ᵀL^{d-l-1}‖₂ Π_{k>l} ‖W_k‖₂`; the readout layer
/// uses the exact spatial `A_d`. Requires a symmetric propagation matrix
/// (the filtered operator is `V ψ(Λ) Vᵀ`).
pub fn build_spectral(
    model: &GcnModel,
    prop: &Propagation,
    x: &Matrix,
    filter: &FilterSpec,
) -> Result<SensitivitySet> {
    check_features(model, prop, x)?;
    if !prop.is_symmetric() {
        return Err(Error::Validation(format!(
            "spectral design requires a symmetric propagation matrix, got {}",
            prop.kind
        )));
    }
    filter.require_admissible(prop.eigenvalues())?;
    let d = model.depth();
    let n = prop.node_count() as f64;
    let norms = model.spectral_norms()?;
    let filtered_l = prop.eig.map_spectrum(|lam| filter.evaluate(lam))?;
    let state = forward(model, prop, x)?;

    let mut matrices = Vec::with_capacity(d);
    let mut alphas = Vec::with_capacity(d - 1);
    let mut g_values = Vec::with_capacity(d);
    for l in 1..d {
        let tail: f64 = norms[l..].iter().product();
        let alpha = (d as f64).sqrt() / n * prop.left_ones_norm(d - l - 1) * tail;
        let filtered_h = filtered_l.matmul(&state.embeddings[l - 1])?;
        let a = kron(&Matrix::identity(model.width(l))?.scale(alpha)?, &filtered_h)?;
        matrices.push(StructuredMatrix::Dense(a));
        alphas.push(alpha);
        g_values.push(spectral_sensitivity(prop, filter, l, d)?);
    }
    let (n_t, v) = spatial_factors(model, prop, x, d)?;
    matrices.push(StructuredMatrix::Dense(kron(&n_t, &Matrix::row_vector(&v)?)?));
    g_values.push(readout_sensitivity(prop, d, model.classes(), model.max_width()));
    Ok(SensitivitySet {
        design: Design::Spectral(*filter),
        matrices,
        alphas: Some(alphas),
        g_values: Some(g_values),
    })
}

/// Builds the sensitivity set of any design at the given input.
pub fn build_design(
    design: &Design,
    model: &GcnModel,
    prop: &Propagation,
    x: &Matrix,
    feature_bound: f64,
) -> Result<SensitivitySet> {
    match design {
        Design::ExactSpatial => build_spatial_exact(model, prop, x),
        Design::Diagonal => build_spatial_diagonal(model, prop, feature_bound),
        Design::LowRank => build_spatial_lowrank(model, prop, x),
        Design::Spectral(filter) => build_spectral(model, prop, x, filter),
    }
}

/// Per-layer certification `J_lᵀJ_l ⪯ (1/d) A_lᵀA_l` by the eigenvalue
/// oracle; layer `l` in the result is `true` when the dominance holds
/// within `tol`.
pub fn check_dominance(
    model: &GcnModel,
    prop: &Propagation,
    x: &Matrix,
    set: &SensitivitySet,
    tol: f64,
) -> Result<Vec<bool>> {
    check_features(model, prop, x)?;
    let d = model.depth();
    if set.depth() != d {
        return Err(Error::Dimension(format!(
            "sensitivity set has {} layers, model has {d}",
            set.depth()
        )));
    }
    let state = forward(model, prop, x)?;
    let mut out = Vec::with_capacity(d);
    for l in 1..=d {
        let j = jacobian_layer_from_state(model, prop, &state, l)?;
        let j_gram = j.gram()?;
        let a_gram = set.layer(l).gram()?.scale(1.0 / d as f64)?;
        out.push(psd_dominates(&j_gram, &a_gram, tol)?);
    }
    Ok(out)
}
