//! Seeded random instances (graph + propagation + model + features) and
//! teacher-labeled datasets, shared by the verification suite, the
//! acceptance tests, and the CLI.

use crate::error::Result;
use crate::gcn::{forward, Activation, GcnModel, GraphSample};
use crate::graphs::{
    build_propagation, generate, Graph, GraphSpec, Propagation, PropagationKind,
};
use crate::matrixkit::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// How weights and features are signed. The spatial dominance proofs
/// need the all-active ReLU regime (`MaskFree`); the spectral
/// convolutional layers tolerate signed inputs (`NonNegativeWeights`);
/// Gram orderings and trace chains hold for `Signed` data too.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    /// Weights and features strictly positive: every ReLU unit active.
    MaskFree,
    /// Nonnegative weights, signed features: real masking, dominance of
    /// the filtered convolutional layers still provable.
    NonNegativeWeights,
    /// Fully signed weights and features.
    Signed,
}

/// Deterministic graph spec rotation covering every generator kind.
pub fn rotating_graph_spec(index: usize, n: usize) -> GraphSpec {
    let n = n.max(3);
    match index % 7 {
        0 => GraphSpec::Complete { n },
        1 => GraphSpec::Path { n },
        2 => GraphSpec::Cycle { n },
        3 => GraphSpec::Star { n },
        4 => {
            let k = if n % 2 == 0 { 3.min(n - 1) } else { 2 };
            GraphSpec::Regular { n, k }
        }
        5 => GraphSpec::ErdosRenyi { n, p: 0.5 },
        _ => {
            let a = (n / 2).max(1);
            GraphSpec::Sbm { sizes: vec![a, n - a], p_in: 0.9, p_out: 0.3 }
        }
    }
}

/// Generates a graph from the rotation, retrying the random kinds until
/// every node has degree >= 1 (so all propagation kinds are buildable).
pub fn random_graph(index: usize, n: usize, seed: u64) -> Result<Graph> {
    let spec = rotating_graph_spec(index, n);
    let mut attempt = 0u64;
    loop {
        let g = generate(&spec, seed.wrapping_add(attempt))?;
        if g.min_degree() >= 1 {
            return Ok(g);
        }
        attempt += 1;
        if attempt > 64 {
            return generate(&GraphSpec::Cycle { n: n.max(3) }, seed);
        }
    }
}

/// Weight matrices with i.i.d. `N(0, 1/h_{l-1})` entries (folded to
/// their absolute value outside the `Signed` regime).
pub fn random_model(
    widths: &[usize],
    activation: Activation,
    regime: Regime,
    seed: u64,
) -> Result<GcnModel> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights = widths
        .windows(2)
        .map(|w| {
            Matrix::from_fn(w[0], w[1], |_, _| {
                let z: f64 = StandardNormal.sample(&mut rng);
                let v = z / (w[0] as f64).sqrt();
                if regime == Regime::Signed {
                    v
                } else {
                    v.abs()
                }
            })
        })
        .collect::<Result<Vec<_>>>()?;
    GcnModel::new(weights, activation)
}

/// Features with rows drawn uniformly and the whole matrix scaled so the
/// max row 2-norm equals `bound` exactly.
pub fn random_features(
    n: usize,
    h0: usize,
    bound: f64,
    regime: Regime,
    seed: u64,
) -> Result<Matrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw = Matrix::from_fn(n, h0, |_, _| {
        let v: f64 = rng.gen_range(-1.0..1.0);
        if regime == Regime::MaskFree {
            v.abs() + 0.05
        } else {
            v
        }
    })?;
    let max_row = raw.two_infinity_norm();
    raw.scale(bound / max_row)
}

/// One complete instance for verification runs.
#[derive(Clone, Debug)]
pub struct Instance {
    pub graph: Graph,
    pub prop: Propagation,
    pub model: GcnModel,
    pub features: Matrix,
}

/// Bounds for the randomly drawn instance dimensions.
#[derive(Clone, Copy, Debug)]
pub struct InstanceDims {
    pub n_max: usize,
    pub d_max: usize,
    pub h_max: usize,
    pub k_min: usize,
    pub k_max: usize,
}

impl Default for InstanceDims {
    fn default() -> Self {
        Self { n_max: 6, d_max: 4, h_max: 3, k_min: 1, k_max: 2 }
    }
}

impl InstanceDims {
    /// Dimensions suited to margin-loss checks (at least two classes).
    pub fn classifier() -> Self {
        Self { k_min: 2, ..Self::default() }
    }
}

/// Builds the `index`-th deterministic instance of a family.
pub fn random_instance(
    index: usize,
    dims: InstanceDims,
    activation: Activation,
    regime: Regime,
    kind: PropagationKind,
    seed: u64,
) -> Result<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9).wrapping_add(index as u64));
    let n = rng.gen_range(3..=dims.n_max.max(3));
    let d = rng.gen_range(2..=dims.d_max.max(2));
    let k = rng.gen_range(dims.k_min.max(1)..=dims.k_max.max(dims.k_min.max(1)));
    let mut widths = Vec::with_capacity(d + 1);
    for _ in 0..d {
        widths.push(rng.gen_range(k.max(1)..=dims.h_max.max(k)));
    }
    widths.push(k);
    let graph = random_graph(index, n, rng.gen())?;
    let prop = build_propagation(&graph, kind)?;
    let model = random_model(&widths, activation, regime, rng.gen())?;
    let features = random_features(n, widths[0], 1.0, regime, rng.gen())?;
    Ok(Instance { graph, prop, model, features })
}

/// Labeled dataset: `count` feature matrices on one graph with labels
/// assigned by a fixed random teacher model (argmax of its output), so
/// the empirical margin loss is nontrivial and reproducible.
pub fn teacher_dataset(
    graph: &Graph,
    kind: PropagationKind,
    teacher: &GcnModel,
    count: usize,
    bound: f64,
    seed: u64,
) -> Result<Vec<GraphSample>> {
    let prop = build_propagation(graph, kind)?;
    let mut samples = Vec::with_capacity(count);
    for i in 0..count {
        let features = random_features(
            graph.node_count(),
            teacher.width(0),
            bound,
            Regime::Signed,
            seed.wrapping_add(i as u64).wrapping_mul(0x2545_f491),
        )?;
        let out = forward(teacher, &prop, &features)?.output;
        let label = out
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).expect("finite outputs"))
            .map(|(i, _)| i + 1)
            .expect("nonempty output");
        samples.push(GraphSample { graph: graph.clone(), features, label });
    }
    Ok(samples)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn instances_are_deterministic() {
        let dims = InstanceDims::default();
        let a = random_instance(
            3,
            dims,
            Activation::ReLU,
            Regime::Signed,
            PropagationKind::NormalizedAdjacency,
            42,
        )
        .unwrap();
        let b = random_instance(
            3,
            dims,
            Activation::ReLU,
            Regime::Signed,
            PropagationKind::NormalizedAdjacency,
            42,
        )
        .unwrap();
        assert_eq!(a.graph, b.graph);
        assert_eq!(a.features.data(), b.features.data());
        for (x, y) in a.model.weights().iter().zip(b.model.weights()) {
            assert_eq!(x.data(), y.data());
        }
    }

    #[test]
    fn features_hit_bound_exactly() {
        let x = random_features(5, 3, 0.8, Regime::Signed, 7).unwrap();
        assert!((x.two_infinity_norm() - 0.8).abs() < 1e-12);
    }

    #[test]
    fn mask_free_instances_have_all_active_relu() {
        for i in 0..10 {
            let inst = random_instance(
                i,
                InstanceDims::default(),
                Activation::ReLU,
                Regime::MaskFree,
                PropagationKind::NormalizedAdjacency,
                5,
            )
            .unwrap();
            let state = forward(&inst.model, &inst.prop, &inst.features).unwrap();
            for diag in &state.activation_derivatives {
                assert!(diag.iter().all(|&b| b == 1.0), "instance {i} has masked units");
            }
        }
    }

    #[test]
    fn teacher_labels_in_range() {
        let graph = random_graph(5, 6, 3).unwrap();
        let teacher =
            random_model(&[2, 3, 2], Activation::Tanh, Regime::Signed, 11).unwrap();
        let data = teacher_dataset(
            &graph,
            PropagationKind::NormalizedAdjacency,
            &teacher,
            12,
            1.0,
            13,
        )
        .unwrap();
        assert_eq!(data.len(), 12);
        for s in &data {
            assert!(s.label >= 1 && s.label <= 2);
            assert!(s.feature_bound() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn graph_rotation_covers_kinds() {
        let kinds: std::collections::BTreeSet<String> =
            (0..7).map(|i| format!("{:?}", rotating_graph_spec(i, 8))).collect();
        assert_eq!(kinds.len(), 7);
    }
}
