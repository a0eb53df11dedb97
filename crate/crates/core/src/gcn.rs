//! GCN forward pass, exact layerwise weight Jacobians, a
//! finite-difference oracle, perturbation application, and the empirical
//! margin loss.
//!
//! The model is `H_l = φ(L H_{l-1} W_l)` for `l < d` with `H_0 = X`, and
//! the readout `f(X) = (1/n) (1ᵀ H_{d-1} W_d)ᵀ ∈ R^K`. Vectorization is
//! column-stacking throughout, so the layer-`l` Jacobian has
//! `h_{l-1} h_l` columns ordered by columns of `W_l`.

use crate::error::{Error, Result};
use crate::graphs::{build_propagation, Graph, Propagation, PropagationKind};
use crate::matrixkit::{kron, Matrix};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Element-wise 1-Lipschitz activations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    ReLU,
    Tanh,
    Identity,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::ReLU => x.max(0.0),
            Activation::Tanh => x.tanh(),
            Activation::Identity => x,
        }
    }

    /// Derivative; the ReLU derivative at exactly 0 is 0, consistent with
    /// the subgradient convention and `B_l ⪯ I`.
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::ReLU => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - x.tanh() * x.tanh(),
            Activation::Identity => 1.0,
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "relu" => Ok(Activation::ReLU),
            "tanh" => Ok(Activation::Tanh),
            "identity" | "id" => Ok(Activation::Identity),
            other => Err(Error::Validation(format!("unknown activation {other:?}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::ReLU => "relu",
            Activation::Tanh => "tanh",
            Activation::Identity => "identity",
        }
    }
}

/// GCN weights: `W_l` has shape `h_{l-1} x h_l`, `h_d = K` classes.
#[derive(Clone, Debug)]
pub struct GcnModel {
    widths: Vec<usize>,
    weights: Vec<Matrix>,
    activation: Activation,
}

impl GcnModel {
    pub fn new(weights: Vec<Matrix>, activation: Activation) -> Result<Self> {
        if weights.len() < 2 {
            return Err(Error::Validation(format!(
                "model depth must be >= 2, got {}",
                weights.len()
            )));
        }
        let mut widths = Vec::with_capacity(weights.len() + 1);
        widths.push(weights[0].rows());
        for (l, w) in weights.iter().enumerate() {
            if w.rows() != widths[l] {
                return Err(Error::Dimension(format!(
                    "weight {} has {} rows, expected {}",
                    l + 1,
                    w.rows(),
                    widths[l]
                )));
            }
            widths.push(w.cols());
        }
        Ok(Self { widths, weights, activation })
    }

    /// Layer count `d`.
    pub fn depth(&self) -> usize {
        self.weights.len()
    }

    /// `h_0 .. h_d`.
    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    /// `h_l` for `0 <= l <= d`.
    pub fn width(&self, l: usize) -> usize {
        self.widths[l]
    }

    /// Largest width `h = max_l h_l` (including `h_0` and `K`).
    pub fn max_width(&self) -> usize {
        *self.widths.iter().max().expect("nonempty widths")
    }

    /// Output dimension `K = h_d`.
    pub fn classes(&self) -> usize {
        *self.widths.last().expect("nonempty widths")
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    /// `W_l`, 1-based.
    pub fn weight(&self, l: usize) -> &Matrix {
        &self.weights[l - 1]
    }

    pub fn weights(&self) -> &[Matrix] {
        &self.weights
    }

    /// Per-layer spectral norms `‖W_l‖₂`.
    pub fn spectral_norms(&self) -> Result<Vec<f64>> {
        self.weights.iter().map(|w| w.spectral_norm()).collect()
    }

    /// `‖w‖₂²`, squared 2-norm of the concatenation of all `vec(W_l)`.
    pub fn weight_norm_sq(&self) -> f64 {
        self.weights.iter().map(|w| w.frobenius_norm().powi(2)).sum()
    }

    /// Returns the model with `W_l + U_l`; the original is unchanged.
    pub fn apply_perturbation(&self, perturbations: &[Matrix]) -> Result<GcnModel> {
        if perturbations.len() != self.depth() {
            return Err(Error::Dimension(format!(
                "{} perturbation blocks for depth {}",
                perturbations.len(),
                self.depth()
            )));
        }
        let weights = self
            .weights
            .iter()
            .zip(perturbations)
            .map(|(w, u)| w.add(u))
            .collect::<Result<Vec<_>>>()?;
        GcnModel::new(weights, self.activation)
    }
}

/// Everything the forward pass produces: embeddings `H_0..H_{d-1}`,
/// activation-derivative diagonals `B_1..B_{d-1}` (column-stacked, length
/// `n·h_l`), and the K-dimensional output.
#[derive(Clone, Debug)]
pub struct LayerState {
    pub embeddings: Vec<Matrix>,
    pub activation_derivatives: Vec<Vec<f64>>,
    pub output: Vec<f64>,
}

/// Runs the forward pass on features `x` (shape `n x h_0`).
pub fn forward(model: &GcnModel, prop: &Propagation, x: &Matrix) -> Result<LayerState> {
    let n = prop.node_count();
    if x.rows() != n || x.cols() != model.width(0) {
        return Err(Error::Dimension(format!(
            "features {}x{} incompatible with n = {n}, h_0 = {}",
            x.rows(),
            x.cols(),
            model.width(0)
        )));
    }
    let d = model.depth();
    let mut embeddings = vec![x.clone()];
    let mut activation_derivatives = Vec::with_capacity(d - 1);
    for l in 1..d {
        let pre = prop.matrix.matmul(&embeddings[l - 1])?.matmul(model.weight(l))?;
        let act = model.activation();
        let h = Matrix::from_fn(pre.rows(), pre.cols(), |i, j| act.apply(pre.get(i, j)))?;
        let deriv = Matrix::from_fn(pre.rows(), pre.cols(), |i, j| act.derivative(pre.get(i, j)))?;
        activation_derivatives.push(deriv.vec_cols());
        embeddings.push(h);
    }
    let last = &embeddings[d - 1];
    let ones = vec![1.0; n];
    let pooled = last.tr_matvec(&ones)?; // 1ᵀ H_{d-1}
    let output = model
        .weight(d)
        .tr_matvec(&pooled)?
        .into_iter()
        .map(|v| v / n as f64)
        .collect();
    Ok(LayerState { embeddings, activation_derivatives, output })
}

/// Scales the columns of `m` by the diagonal entries `diag` (i.e. `m * D`).
fn scale_columns(m: &Matrix, diag: &[f64]) -> Result<Matrix> {
    if diag.len() != m.cols() {
        return Err(Error::Dimension("diagonal length mismatch".into()));
    }
    Matrix::from_fn(m.rows(), m.cols(), |i, j| m.get(i, j) * diag[j])
}

/// Exact Jacobian `J_l = ∂f/∂vec(W_l)`, a `K x h_{l-1} h_l` matrix.
///
/// For the readout, `J_d = (1/n) I_K ⊗ (1ᵀ H_{d-1})`; for a
/// convolutional layer, `J_l = G_l B_l (I_{h_l} ⊗ (L H_{l-1}))` with the
/// chain `G_l = (1/n)(W_dᵀ ⊗ 1ᵀ) Π_{k=d-1..l+1} B_k (W_kᵀ ⊗ L)`.
pub fn jacobian_layer(
    model: &GcnModel,
    prop: &Propagation,
    x: &Matrix,
    layer: usize,
) -> Result<Matrix> {
    let d = model.depth();
    if layer < 1 || layer > d {
        return Err(Error::Validation(format!("layer {layer} out of range 1..={d}")));
    }
    let state = forward(model, prop, x)?;
    jacobian_layer_from_state(model, prop, &state, layer)
}

/// Same as [`jacobian_layer`] but reuses an existing forward pass.
pub fn jacobian_layer_from_state(
    model: &GcnModel,
    prop: &Propagation,
    state: &LayerState,
    layer: usize,
) -> Result<Matrix> {
    let d = model.depth();
    let n = prop.node_count();
    if layer < 1 || layer > d {
        return Err(Error::Validation(format!("layer {layer} out of range 1..={d}")));
    }
    if layer == d {
        let pooled = Matrix::row_vector(&state.embeddings[d - 1].tr_matvec(&vec![1.0; n])?)?
            .scale(1.0 / n as f64)?;
        return kron(&Matrix::identity(model.classes())?, &pooled);
    }
    let g = output_embedding_jacobian(model, prop, state, layer)?;
    let g = scale_columns(&g, &state.activation_derivatives[layer - 1])?;
    let lh = prop.matrix.matmul(&state.embeddings[layer - 1])?;
    g.matmul(&kron(&Matrix::identity(model.width(layer))?, &lh)?)
}

/// `G_l = ∂f/∂vec(H_l)`, the `K x n h_l` chain from the readout down to
/// layer `l < d`, accumulated right-to-left.
pub fn output_embedding_jacobian(
    model: &GcnModel,
    prop: &Propagation,
    state: &LayerState,
    layer: usize,
) -> Result<Matrix> {
    let d = model.depth();
    let n = prop.node_count();
    if layer < 1 || layer >= d {
        return Err(Error::Validation(format!("embedding layer {layer} out of range 1..{d}")));
    }
    let ones_row = Matrix::from_fn(1, n, |_, _| 1.0 / n as f64)?;
    let mut g = kron(&model.weight(d).transpose(), &ones_row)?;
    for k in ((layer + 1)..d).rev() {
        g = scale_columns(&g, &state.activation_derivatives[k - 1])?;
        g = g.matmul(&kron(&model.weight(k).transpose(), &prop.matrix)?)?;
    }
    Ok(g)
}

/// Central-difference approximation of `∂f/∂vec(W_l)`; column `k`
/// perturbs the k-th (column-stacked) weight entry by ±epsilon.
pub fn jacobian_fd(
    model: &GcnModel,
    prop: &Propagation,
    x: &Matrix,
    layer: usize,
    epsilon: f64,
) -> Result<Matrix> {
    if epsilon <= 0.0 {
        return Err(Error::Validation(format!("epsilon must be positive, got {epsilon}")));
    }
    let d = model.depth();
    if layer < 1 || layer > d {
        return Err(Error::Validation(format!("layer {layer} out of range 1..={d}")));
    }
    let k_out = model.classes();
    let (rows, cols) = (model.width(layer - 1), model.width(layer));
    let mut jac = Matrix::zeros(k_out, rows * cols)?;
    for col in 0..cols {
        for row in 0..rows {
            let idx = col * rows + row;
            let bump = |sign: f64| -> Result<Vec<f64>> {
                let mut weights = model.weights.clone();
                let w = &mut weights[layer - 1];
                w.set(row, col, w.get(row, col) + sign * epsilon);
                let bumped = GcnModel::new(weights, model.activation)?;
                Ok(forward(&bumped, prop, x)?.output)
            };
            let plus = bump(1.0)?;
            let minus = bump(-1.0)?;
            for r in 0..k_out {
                jac.set(r, idx, (plus[r] - minus[r]) / (2.0 * epsilon));
            }
        }
    }
    Ok(jac)
}

/// One labeled graph input: features with bounded row norms and a
/// 1-based class label.
#[derive(Clone, Debug)]
pub struct GraphSample {
    pub graph: Graph,
    pub features: Matrix,
    /// Class index in `1..=K`.
    pub label: usize,
}

impl GraphSample {
    /// Max row 2-norm of the features (the per-sample input bound).
    pub fn feature_bound(&self) -> f64 {
        self.features.two_infinity_norm()
    }
}

/// Margin test for one output vector: true when the true-class score
/// fails to beat every wrong class by more than `gamma`.
pub fn margin_violated(output: &[f64], label: usize, gamma: f64) -> Result<bool> {
    let k = output.len();
    if label < 1 || label > k {
        return Err(Error::Validation(format!("label {label} out of range 1..={k}")));
    }
    if k < 2 {
        return Err(Error::Validation("margin loss needs at least 2 classes".into()));
    }
    let target = output[label - 1];
    let best_other = output
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != label - 1)
        .map(|(_, &v)| v)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(target <= gamma + best_other)
}

/// Empirical margin loss: the fraction of samples with
/// `f(X)[y] <= gamma + max_{j != y} f(X)[j]`. `gamma = 0` gives the
/// training error.
pub fn margin_loss_empirical(
    model: &GcnModel,
    kind: PropagationKind,
    samples: &[GraphSample],
    gamma: f64,
) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Validation("margin loss over an empty sample set".into()));
    }
    if gamma < 0.0 {
        return Err(Error::Validation(format!("gamma must be >= 0, got {gamma}")));
    }
    let mut violations = 0usize;
    for sample in samples {
        let prop = build_propagation(&sample.graph, kind)?;
        let state = forward(model, &prop, &sample.features)?;
        if margin_violated(&state.output, sample.label, gamma)? {
            violations += 1;
        }
    }
    Ok(violations as f64 / samples.len() as f64)
}

/// On-disk model schema: `widths`, `activation`, and row-major weights.
#[derive(Serialize, Deserialize)]
struct ModelFile {
    widths: Vec<usize>,
    activation: String,
    weights: Vec<Vec<Vec<f64>>>,
}

/// Serializes a model to the JSON schema used by the CLI.
pub fn model_to_json(model: &GcnModel) -> Result<String> {
    let weights = model
        .weights
        .iter()
        .map(|w| (0..w.rows()).map(|i| w.row(i).to_vec()).collect())
        .collect();
    let file = ModelFile {
        widths: model.widths.clone(),
        activation: model.activation.name().to_string(),
        weights,
    };
    Ok(serde_json::to_string_pretty(&file)?)
}

/// Parses a model from its JSON representation.
pub fn model_from_json(text: &str) -> Result<GcnModel> {
    let file: ModelFile = serde_json::from_str(text)?;
    let activation = Activation::parse(&file.activation)?;
    let weights = file
        .weights
        .iter()
        .map(|rows| Matrix::from_rows(rows))
        .collect::<Result<Vec<_>>>()?;
    let model = GcnModel::new(weights, activation)?;
    if model.widths != file.widths {
        return Err(Error::Validation(format!(
            "declared widths {:?} do not match weight shapes {:?}",
            file.widths, model.widths
        )));
    }
    Ok(model)
}

pub fn save_model(model: &GcnModel, path: &Path) -> Result<()> {
    std::fs::write(path, model_to_json(model)?)?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<GcnModel> {
    model_from_json(&std::fs::read_to_string(path)?)
}
