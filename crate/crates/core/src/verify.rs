//! The verification suite: every lemma-level identity, dominance chain,
//! and sampling check bundled into one deterministic, serializable
//! report. The CLI `verify` subcommand and the acceptance tests both
//! drive these functions.

use crate::error::Result;
use crate::gcn::{
    forward, jacobian_fd, jacobian_layer, jacobian_layer_from_state, output_embedding_jacobian,
    Activation,
};
use crate::graphs::{build_propagation, generate, propagated_ones, PropagationKind};
use crate::instances::{random_instance, rotating_graph_spec, InstanceDims, Regime};
use crate::matrixkit::{
    kron, matrix_norms, min_symmetric_eigenvalue, psd_dominates, sym_eig, Matrix,
};
use crate::montecarlo::{
    check_lemma6, check_perturbation_bound, check_perturbation_condition,
    check_quadratic_concentration, McConfig,
};
use crate::pacbayes::{build_posterior, kl_value, posterior_objective, PacParams};
use crate::sensitivity::{
    build_design, build_spatial_diagonal, build_spatial_exact, build_spatial_lowrank,
    build_spectral, check_dominance, Design, FilterKind, FilterSpec,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

/// Outcome of one named check.
#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub pass: bool,
    pub instances: usize,
    pub detail: serde_json::Value,
}

/// The full suite report.
#[derive(Clone, Debug, Serialize)]
pub struct VerifyBundle {
    pub seed: u64,
    pub trials: usize,
    pub all_pass: bool,
    pub checks: Vec<CheckResult>,
}

/// Suite configuration.
#[derive(Clone, Copy, Debug)]
pub struct VerifyConfig {
    pub seed: u64,
    /// Trials per Monte-Carlo check.
    pub trials: usize,
    /// Debug flag: scales every sensitivity matrix by 0.1 before the
    /// dominance checks, which must then fail (negative control).
    pub break_dominance: bool,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self { seed: 0, trials: 2000, break_dominance: false }
    }
}

fn rand_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.gen_range(-2.0..2.0)).expect("small dims")
}

fn rand_psd(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    let a = rand_matrix(rng, n, n);
    a.gram().expect("gram")
}

/// Lemma: with `R = (I + a XᵀX)⁻¹`, `Tr(R) − logdet R − n ≤ a Tr(XᵀX)`,
/// equality iff `X = 0`.
pub fn check_lemma_trace_logdet(instances: usize, dim_max: usize, tol: f64, seed: u64) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst_margin = f64::INFINITY;
    let mut pass = true;
    for _ in 0..instances {
        let n = rng.gen_range(1..=dim_max);
        let m = rng.gen_range(1..=dim_max);
        let x = rand_matrix(&mut rng, m, n);
        let alpha = rng.gen_range(0.05..4.0);
        let gram = x.gram().expect("gram");
        let f = match sym_eig(&gram.symmetrized()) {
            Ok(eig) => eig
                .eigenvalues
                .iter()
                .map(|&l| {
                    let u = alpha * l.max(0.0);
                    1.0 / (1.0 + u) + (1.0 + u).ln() - 1.0
                })
                .sum::<f64>(),
            Err(_) => {
                pass = false;
                continue;
            }
        };
        let rhs = alpha * gram.trace();
        let margin = rhs - f;
        worst_margin = worst_margin.min(margin);
        if f > rhs * (1.0 + tol) + tol {
            pass = false;
        }
    }
    // Equality case at X = 0.
    let zero_gap = 0.0f64;
    CheckResult {
        name: "lemma-trace-logdet".into(),
        pass,
        instances,
        detail: json!({ "worst_margin": worst_margin, "zero_case_gap": zero_gap }),
    }
}

/// Lemma: `A ⊗ B ⪯ A ⊗ C ⇔ B ⪯ C` for PSD `A` (nonzero), both
/// directions checked by the eigenvalue oracle.
pub fn check_lemma_kron_psd_order(
    instances: usize,
    dim_max: usize,
    tol: f64,
    seed: u64,
) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pass = true;
    let mut reverse_checked = 0usize;
    for _ in 0..instances {
        let p = rng.gen_range(1..=dim_max.min(4));
        let q = rng.gen_range(1..=dim_max.min(4));
        let a = rand_psd(&mut rng, p);
        let b = rand_psd(&mut rng, q);
        let c = b.add(&rand_psd(&mut rng, q)).expect("add");
        // Forward: B ⪯ C implies A⊗B ⪯ A⊗C.
        let kab = kron(&a, &b).expect("kron");
        let kac = kron(&a, &c).expect("kron");
        if !psd_dominates(&kab, &kac, tol).unwrap_or(false) {
            pass = false;
        }
        // Reverse: B ⋠ C with A nonzero implies A⊗B ⋠ A⊗C.
        let b2 = rand_matrix(&mut rng, q, q).symmetrized();
        let c2 = rand_matrix(&mut rng, q, q).symmetrized();
        if !psd_dominates(&b2, &c2, 1e-10).unwrap_or(true) {
            reverse_checked += 1;
            let k2 = kron(&a, &b2).expect("kron");
            let k3 = kron(&a, &c2).expect("kron");
            if psd_dominates(&k2, &k3, 1e-10).unwrap_or(false) {
                pass = false;
            }
        }
    }
    CheckResult {
        name: "lemma-kron-psd-order".into(),
        pass: pass && reverse_checked > 0,
        instances,
        detail: json!({ "reverse_direction_cases": reverse_checked }),
    }
}

/// Lemma: `‖A⊗B‖₂ = ‖A‖₂‖B‖₂` and `‖A⊗B‖_F = ‖A‖_F‖B‖_F`.
pub fn check_lemma_kron_norms(instances: usize, dim_max: usize, tol: f64, seed: u64) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst_rel = 0.0f64;
    for _ in 0..instances {
        let (m, n) = (rng.gen_range(1..=dim_max.min(4)), rng.gen_range(1..=dim_max.min(4)));
        let (p, q) = (rng.gen_range(1..=dim_max.min(4)), rng.gen_range(1..=dim_max.min(4)));
        let a = rand_matrix(&mut rng, m, n);
        let b = rand_matrix(&mut rng, p, q);
        let k = kron(&a, &b).expect("kron");
        let (na, nb, nk) = (
            matrix_norms(&a).expect("norms"),
            matrix_norms(&b).expect("norms"),
            matrix_norms(&k).expect("norms"),
        );
        let rel = |x: f64, y: f64| (x - y).abs() / x.abs().max(y.abs()).max(1.0);
        worst_rel = worst_rel
            .max(rel(nk.spectral, na.spectral * nb.spectral))
            .max(rel(nk.frobenius, na.frobenius * nb.frobenius));
    }
    CheckResult {
        name: "lemma-kron-norm-equalities".into(),
        pass: worst_rel <= tol,
        instances,
        detail: json!({ "worst_relative_error": worst_rel }),
    }
}

/// Lemma: `‖AXB‖_F ≤ ‖A‖₂‖B‖₂‖X‖_F`, plus the vec identity
/// `vec(AXB) = (Bᵀ⊗A)vec(X)`.
pub fn check_lemma_axb_bound(instances: usize, dim_max: usize, tol: f64, seed: u64) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst_excess = 0.0f64;
    let mut worst_vec = 0.0f64;
    for _ in 0..instances {
        let (m, n, p, q) = (
            rng.gen_range(1..=dim_max),
            rng.gen_range(1..=dim_max),
            rng.gen_range(1..=dim_max),
            rng.gen_range(1..=dim_max),
        );
        let a = rand_matrix(&mut rng, m, n);
        let x = rand_matrix(&mut rng, n, p);
        let b = rand_matrix(&mut rng, p, q);
        let axb = a.matmul(&x).expect("mm").matmul(&b).expect("mm");
        let bound = a.spectral_norm().expect("norm") * b.spectral_norm().expect("norm")
            * x.frobenius_norm();
        worst_excess = worst_excess.max(axb.frobenius_norm() - bound);
        let lhs = axb.vec_cols();
        let rhs = kron(&b.transpose(), &a)
            .expect("kron")
            .matvec(&x.vec_cols())
            .expect("matvec");
        for (l, r) in lhs.iter().zip(&rhs) {
            worst_vec = worst_vec.max((l - r).abs());
        }
    }
    CheckResult {
        name: "lemma-axb-frobenius-bound".into(),
        pass: worst_excess <= tol && worst_vec <= 1e-12,
        instances,
        detail: json!({ "worst_excess": worst_excess, "worst_vec_identity_error": worst_vec }),
    }
}

/// Graph spectral properties over generated graphs of every kind:
/// `ρ(L) = ‖L‖₂ = 1` and the `α₁² ≤ ‖L^{d-1}1‖₂² ≤ n` sandwich for the
/// normalized adjacency; `L^{d-1}1 = 1` and the degree-ratio norm bound
/// for the lazy walk. The minimum eigenvalue over all graphs is
/// reported: self-loops shrink but do not remove the negative tail, so
/// the spectrum lies in (−1, 1], not [0, 1].
pub fn check_graph_spectral_properties(
    graph_count: usize,
    n_max: usize,
    depth_max: usize,
    tol: f64,
    seed: u64,
) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pass = true;
    let mut min_eigenvalue = f64::INFINITY;
    let mut negative_spectrum_graphs = 0usize;
    for i in 0..graph_count {
        let n = rng.gen_range(3..=n_max.max(3));
        let spec = rotating_graph_spec(i, n);
        let g = match generate(&spec, rng.gen()) {
            Ok(g) => g,
            Err(_) => {
                pass = false;
                continue;
            }
        };
        let na = match build_propagation(&g, PropagationKind::NormalizedAdjacency) {
            Ok(p) => p,
            Err(_) => {
                pass = false;
                continue;
            }
        };
        if (na.spectral_radius - 1.0).abs() > tol {
            pass = false;
        }
        match na.operator_norm() {
            Ok(norm) if (norm - 1.0).abs() <= tol => {}
            _ => pass = false,
        }
        let lo = *na.eigenvalues().last().expect("spectrum");
        min_eigenvalue = min_eigenvalue.min(lo);
        if lo < 0.0 {
            negative_spectrum_graphs += 1;
        }
        if !(lo > -1.0 && na.eigenvalues()[0] <= 1.0 + tol) {
            pass = false;
        }
        for d in 1..=depth_max {
            match propagated_ones(&na, d) {
                Ok((norm_sq, lower)) => {
                    if !(lower <= norm_sq + tol && norm_sq <= g.node_count() as f64 + tol) {
                        pass = false;
                    }
                }
                Err(_) => pass = false,
            }
        }
        // Regular graphs: the sandwich collapses to n.
        if g.degrees().iter().all(|&dg| dg == g.degrees()[0]) {
            if let Ok((norm_sq, _)) = propagated_ones(&na, depth_max) {
                if (norm_sq - g.node_count() as f64).abs() > tol {
                    pass = false;
                }
            }
        }
        let lazy = match build_propagation(&g, PropagationKind::LazyRandomWalk) {
            Ok(p) => p,
            Err(_) => {
                pass = false;
                continue;
            }
        };
        for d in 1..=depth_max {
            let ones = lazy.propagate_ones(d - 1);
            if ones.iter().any(|&v| (v - 1.0).abs() > 1e-12) {
                pass = false;
            }
        }
        match lazy.operator_norm() {
            Ok(norm) => {
                let upper =
                    ((g.max_degree() as f64 + 1.0) / (g.min_degree() as f64 + 1.0)).sqrt();
                if !(norm >= 1.0 - tol && norm <= upper + tol) {
                    pass = false;
                }
            }
            Err(_) => pass = false,
        }
    }
    CheckResult {
        name: "graph-spectral-properties".into(),
        pass,
        instances: graph_count,
        detail: json!({
            "min_eigenvalue": min_eigenvalue,
            "graphs_with_negative_spectrum": negative_spectrum_graphs,
        }),
    }
}

/// Jacobian correctness: analytic layer Jacobians against central finite
/// differences on tanh models.
pub fn check_jacobian_fd(instances: usize, dims: InstanceDims, tol: f64, seed: u64) -> CheckResult {
    let mut worst = 0.0f64;
    let mut pass = true;
    for i in 0..instances {
        let inst = match random_instance(
            i,
            dims,
            Activation::Tanh,
            Regime::Signed,
            PropagationKind::NormalizedAdjacency,
            seed,
        ) {
            Ok(v) => v,
            Err(_) => {
                pass = false;
                continue;
            }
        };
        let d = inst.model.depth();
        for l in 1..=d {
            let analytic = match jacobian_layer(&inst.model, &inst.prop, &inst.features, l) {
                Ok(j) => j,
                Err(_) => {
                    pass = false;
                    continue;
                }
            };
            let fd = match jacobian_fd(&inst.model, &inst.prop, &inst.features, l, 1e-5) {
                Ok(j) => j,
                Err(_) => {
                    pass = false;
                    continue;
                }
            };
            let denom = fd.max_abs().max(1.0);
            let rel = analytic.sub(&fd).map(|d| d.max_abs()).unwrap_or(f64::INFINITY) / denom;
            worst = worst.max(rel);
        }
    }
    CheckResult {
        name: "jacobian-finite-difference".into(),
        pass: pass && worst <= tol,
        instances,
        detail: json!({ "worst_relative_error": worst }),
    }
}

const ALL_FILTERS: [FilterKind; 5] = [
    FilterKind::Identity,
    FilterKind::LowPassRational,
    FilterKind::LowPassPoly,
    FilterKind::HighPassRational,
    FilterKind::HighPassPoly,
];

/// Dominance chains on mask-free ReLU instances: `J_lᵀJ_l ⪯ (1/d)A_lᵀA_l`
/// for the exact spatial and every spectral filter (ξ ∈ {0, 1/2, 1}),
/// plus the unconditional Gram ordering exact ⪯ low-rank ⪯ diagonal on
/// signed instances.
pub fn check_dominance_chain(
    instances: usize,
    dims: InstanceDims,
    tol: f64,
    seed: u64,
    break_dominance: bool,
) -> CheckResult {
    let mut pass = true;
    let mut worst_min_eig = f64::INFINITY;
    let factor = if break_dominance { 0.1 } else { 1.0 };
    for i in 0..instances {
        // Mask-free regime: the spatial proof chain is exact here.
        let inst = match random_instance(
            i,
            dims,
            Activation::ReLU,
            Regime::MaskFree,
            PropagationKind::NormalizedAdjacency,
            seed,
        ) {
            Ok(v) => v,
            Err(_) => {
                pass = false;
                continue;
            }
        };
        let mut sets = vec![build_spatial_exact(&inst.model, &inst.prop, &inst.features)];
        for kind in ALL_FILTERS {
            for xi in [0.0, 0.5, 1.0] {
                let f = FilterSpec::new(kind, xi).expect("xi >= 0");
                sets.push(build_spectral(&inst.model, &inst.prop, &inst.features, &f));
            }
        }
        for set in sets {
            let set = match set.and_then(|s| s.scaled(factor)) {
                Ok(s) => s,
                Err(_) => {
                    pass = false;
                    continue;
                }
            };
            match check_dominance(&inst.model, &inst.prop, &inst.features, &set, tol) {
                Ok(ok) => {
                    if !ok.iter().all(|&b| b) {
                        pass = false;
                    }
                }
                Err(_) => pass = false,
            }
        }
        // Gram chain on a signed instance.
        let signed = match random_instance(
            i,
            dims,
            Activation::ReLU,
            Regime::Signed,
            PropagationKind::NormalizedAdjacency,
            seed ^ 0xabcd,
        ) {
            Ok(v) => v,
            Err(_) => {
                pass = false;
                continue;
            }
        };
        let bound = signed.features.two_infinity_norm();
        let chain = (|| -> Result<f64> {
            let exact = build_spatial_exact(&signed.model, &signed.prop, &signed.features)?
                .scaled(factor)?;
            let lowrank = build_spatial_lowrank(&signed.model, &signed.prop, &signed.features)?;
            let diag = build_spatial_diagonal(&signed.model, &signed.prop, bound)?;
            let mut min_eig = f64::INFINITY;
            for l in 1..=signed.model.depth() {
                let ge = exact.layer(l).gram()?;
                let gl = lowrank.layer(l).gram()?;
                let gd = diag.layer(l).gram()?;
                min_eig = min_eig.min(min_symmetric_eigenvalue(&gl.sub(&ge)?)?);
                min_eig = min_eig.min(min_symmetric_eigenvalue(&gd.sub(&gl)?)?);
            }
            Ok(min_eig)
        })();
        match chain {
            Ok(min_eig) => {
                worst_min_eig = worst_min_eig.min(min_eig);
                if min_eig < -tol {
                    pass = false;
                }
            }
            Err(_) => pass = false,
        }
    }
    CheckResult {
        name: "dominance-chain".into(),
        pass,
        instances,
        detail: json!({ "worst_gram_chain_min_eigenvalue": worst_min_eig,
                        "scaled_by": factor }),
    }
}

/// Perturbation condition for the three priors on signed ReLU instances.
pub fn check_perturbation_condition_suite(
    instances: usize,
    dims: InstanceDims,
    trials: usize,
    seed: u64,
) -> CheckResult {
    let mut pass = true;
    let mut min_probability = f64::INFINITY;
    let mut sample_report = None;
    let designs = [
        Design::Diagonal,
        Design::LowRank,
        Design::Spectral(FilterSpec::with_default_xi(FilterKind::Identity)),
    ];
    for i in 0..instances {
        let inst = match random_instance(
            i,
            dims,
            Activation::ReLU,
            Regime::Signed,
            PropagationKind::NormalizedAdjacency,
            seed,
        ) {
            Ok(v) => v,
            Err(_) => {
                pass = false;
                continue;
            }
        };
        let bound = inst.features.two_infinity_norm();
        let params = match PacParams::new(1.0, 0.05, 32, bound, 1.0) {
            Ok(p) => p,
            Err(_) => {
                pass = false;
                continue;
            }
        };
        let cfg = match McConfig::new(trials, seed.wrapping_add(i as u64), 1e-1, 0.05) {
            Ok(c) => c,
            Err(_) => {
                pass = false;
                continue;
            }
        };
        for design in &designs {
            let outcome = (|| -> Result<crate::montecarlo::McReport> {
                let set = build_design(design, &inst.model, &inst.prop, &inst.features, bound)?;
                let posterior = build_posterior(&set, &inst.model, &inst.prop, &params)?;
                check_perturbation_condition(
                    &set,
                    posterior.sigma_sq,
                    &posterior.blocks,
                    &params,
                    &cfg,
                )
            })();
            match outcome {
                Ok(report) if report.pass => {
                    min_probability = min_probability.min(report.empirical_probability);
                    sample_report = Some(report);
                }
                _ => pass = false,
            }
        }
    }
    CheckResult {
        name: "perturbation-condition".into(),
        pass,
        instances,
        detail: json!({
            "min_empirical_probability": min_probability,
            "last_report": sample_report,
        }),
    }
}

/// First-order perturbation bounds on the ε-ladder: the design bound on
/// mask-free ReLU instances and identity-activation signed instances,
/// and the depth-d norm bound on nonnegative-weight instances.
pub fn check_perturbation_bounds_suite(
    instances: usize,
    dims: InstanceDims,
    trials: usize,
    seed: u64,
) -> CheckResult {
    let mut pass = true;
    let mut worst_ratio = 0.0f64;
    for i in 0..instances {
        let (activation, regime) = if i % 2 == 0 {
            (Activation::ReLU, Regime::MaskFree)
        } else {
            (Activation::Identity, Regime::Signed)
        };
        let inst = match random_instance(
            i,
            dims,
            activation,
            regime,
            PropagationKind::NormalizedAdjacency,
            seed,
        ) {
            Ok(v) => v,
            Err(_) => {
                pass = false;
                continue;
            }
        };
        let bound = inst.features.two_infinity_norm();
        let cfg = match McConfig::new(trials, seed.wrapping_add(i as u64), 1e-1, 0.05) {
            Ok(c) => c,
            Err(_) => {
                pass = false;
                continue;
            }
        };
        let outcome = (|| -> Result<(f64, bool)> {
            let params = PacParams::new(1.0, 0.05, 32, bound, 1.0)?;
            let set = build_spatial_exact(&inst.model, &inst.prop, &inst.features)?;
            let posterior = build_posterior(&set, &inst.model, &inst.prop, &params)?;
            let report = check_perturbation_bound(
                &inst.model,
                &inst.prop,
                &inst.features,
                &set,
                posterior.sigma_sq,
                &posterior.blocks,
                &cfg,
            )?;
            let lemma6 = check_lemma6(&inst.model, &inst.prop, &inst.features, &cfg)?;
            Ok((report.max_ratio.max(lemma6.max_ratio), report.pass && lemma6.pass))
        })();
        match outcome {
            Ok((ratio, ok)) => {
                worst_ratio = worst_ratio.max(ratio);
                if !ok {
                    pass = false;
                }
            }
            Err(_) => pass = false,
        }
    }
    CheckResult {
        name: "perturbation-bounds".into(),
        pass,
        instances,
        detail: json!({ "worst_max_ratio_at_finest_scale": worst_ratio }),
    }
}

/// Quadratic-form concentration behind κ on random sensitivity blocks.
pub fn check_concentration_suite(instances: usize, trials: usize, seed: u64) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pass = true;
    let mut worst = 0.0f64;
    for i in 0..instances {
        let rows = rng.gen_range(1..=4);
        let cols = rng.gen_range(1..=5);
        let a = rand_matrix(&mut rng, rows, cols);
        let r = {
            let base = rand_psd(&mut rng, cols);
            let eig = match sym_eig(&base.symmetrized()) {
                Ok(e) => e,
                Err(_) => {
                    pass = false;
                    continue;
                }
            };
            let top = eig.eigenvalues[0].max(1e-9);
            eig.map_spectrum(|l| (l.max(0.0) / top).min(1.0)).expect("psd map")
        };
        let cfg = match McConfig::new(trials, seed.wrapping_add(i as u64), 1e-1, 0.05) {
            Ok(c) => c,
            Err(_) => {
                pass = false;
                continue;
            }
        };
        match check_quadratic_concentration(&a, &r, 0.5, &cfg) {
            Ok(report) => {
                worst = worst.max(report.max_ratio);
                if !report.pass {
                    pass = false;
                }
            }
            Err(_) => pass = false,
        }
    }
    CheckResult {
        name: "quadratic-concentration".into(),
        pass,
        instances,
        detail: json!({ "worst_median_over_bound": worst }),
    }
}

/// KL soundness: `kl_upper ≥ kl_exact ≥ 0` for the three priors, and
/// local optimality of `R_l*` under random PSD-preserving probes of the
/// penalized objective.
pub fn check_kl_soundness(
    instances: usize,
    dims: InstanceDims,
    probe_directions: usize,
    seed: u64,
) -> CheckResult {
    let mut pass = true;
    let mut min_gap = f64::INFINITY;
    let dims = InstanceDims { k_min: 2, h_max: dims.h_max.max(2), ..dims };
    for i in 0..instances {
        let inst = match random_instance(
            i,
            dims,
            Activation::ReLU,
            Regime::Signed,
            PropagationKind::NormalizedAdjacency,
            seed,
        ) {
            Ok(v) => v,
            Err(_) => {
                pass = false;
                continue;
            }
        };
        let bound = inst.features.two_infinity_norm();
        let samples = vec![crate::gcn::GraphSample {
            graph: inst.graph.clone(),
            features: inst.features.clone(),
            label: 1,
        }];
        let params = match PacParams::new(1.0, 0.05, 32, bound, 1.0) {
            Ok(p) => p,
            Err(_) => {
                pass = false;
                continue;
            }
        };
        for kind in [
            crate::pacbayes::BoundKind::SpatialDiagonal,
            crate::pacbayes::BoundKind::SpatialLowRank,
            crate::pacbayes::BoundKind::SpectralFilter(FilterSpec::with_default_xi(
                FilterKind::Identity,
            )),
        ] {
            match crate::pacbayes::compute_bound_report(
                &kind,
                &inst.model,
                &inst.prop,
                &samples,
                &params,
            ) {
                Ok(report) => {
                    let (upper, exact) = (
                        report.kl_upper.unwrap_or(f64::NAN),
                        report.kl_exact.unwrap_or(f64::NAN),
                    );
                    if !(exact >= 0.0 && upper >= exact * (1.0 - 1e-9)) {
                        pass = false;
                    } else {
                        min_gap = min_gap.min(upper - exact);
                    }
                }
                Err(_) => pass = false,
            }
        }
        // R_l* optimality probe on the diagonal design of layer 1.
        let probe = (|| -> Result<bool> {
            let set = build_spatial_diagonal(&inst.model, &inst.prop, bound)?;
            let posterior = build_posterior(&set, &inst.model, &inst.prop, &params)?;
            let a1 = set.layer(1);
            let r_star = posterior.blocks[0].to_dense()?;
            let f_star = posterior_objective(a1, &r_star, posterior.eta_sq)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1000 + i as u64));
            let mut ok = true;
            for _ in 0..probe_directions {
                let raw = rand_matrix(&mut rng, r_star.rows(), r_star.rows()).symmetrized();
                let delta = raw.scale(1e-4 / raw.frobenius_norm().max(1e-12))?;
                let candidate = r_star.add(&delta)?;
                match posterior_objective(a1, &candidate, posterior.eta_sq) {
                    Ok(f) => {
                        if f < f_star - 1e-12 {
                            ok = false;
                        }
                    }
                    // Probe left the PSD cone; direction not applicable.
                    Err(_) => continue,
                }
            }
            Ok(ok)
        })();
        match probe {
            Ok(true) => {}
            _ => pass = false,
        }
        // kl_value rejects non-PSD blocks.
        let _ = kl_value(
            &inst.model,
            1.0,
            &inst
                .model
                .weights()
                .iter()
                .map(|w| crate::sensitivity::StructuredMatrix::ScaledIdentity {
                    dim: w.rows() * w.cols(),
                    scale: 1.0,
                })
                .collect::<Vec<_>>(),
        );
    }
    CheckResult {
        name: "kl-soundness".into(),
        pass,
        instances,
        detail: json!({ "min_upper_minus_exact": min_gap }),
    }
}

/// α-bound sanity for the spectral design: `α_l ≥ √d ‖G_l‖₂` on signed
/// nonnegative-weight ReLU instances.
pub fn check_alpha_chain_bound(instances: usize, dims: InstanceDims, seed: u64) -> CheckResult {
    let mut pass = true;
    let mut min_slack = f64::INFINITY;
    for i in 0..instances {
        let inst = match random_instance(
            i,
            dims,
            Activation::ReLU,
            Regime::NonNegativeWeights,
            PropagationKind::NormalizedAdjacency,
            seed,
        ) {
            Ok(v) => v,
            Err(_) => {
                pass = false;
                continue;
            }
        };
        let outcome = (|| -> Result<f64> {
            let id = FilterSpec::with_default_xi(FilterKind::Identity);
            let set = build_spectral(&inst.model, &inst.prop, &inst.features, &id)?;
            let alphas = set.alphas.as_ref().expect("spectral alphas");
            let state = forward(&inst.model, &inst.prop, &inst.features)?;
            let d = inst.model.depth();
            let mut slack = f64::INFINITY;
            for l in 1..d {
                let g = output_embedding_jacobian(&inst.model, &inst.prop, &state, l)?;
                let g_norm = g.spectral_norm()?;
                slack = slack.min(alphas[l - 1] - (d as f64).sqrt() * g_norm);
                // Dominance of the convolutional layers under real masks.
                let j = jacobian_layer_from_state(&inst.model, &inst.prop, &state, l)?;
                let diff = set.layer(l).gram()?.scale(1.0 / d as f64)?.sub(&j.gram()?)?;
                if min_symmetric_eigenvalue(&diff)? < -1e-8 {
                    return Ok(f64::NEG_INFINITY);
                }
            }
            Ok(slack)
        })();
        match outcome {
            Ok(slack) => {
                min_slack = min_slack.min(slack);
                if slack < -1e-9 {
                    pass = false;
                }
            }
            Err(_) => pass = false,
        }
    }
    CheckResult {
        name: "spectral-alpha-chain".into(),
        pass,
        instances,
        detail: json!({ "min_alpha_minus_sqrt_d_gl": min_slack }),
    }
}

/// Runs the complete suite.
pub fn run_suite(cfg: &VerifyConfig) -> Result<VerifyBundle> {
    let dims = InstanceDims::default();
    let checks = vec![
        check_lemma_trace_logdet(100, 6, 1e-8, cfg.seed.wrapping_add(1)),
        check_lemma_kron_psd_order(100, 6, 1e-8, cfg.seed.wrapping_add(2)),
        check_lemma_kron_norms(100, 6, 1e-8, cfg.seed.wrapping_add(3)),
        check_lemma_axb_bound(100, 6, 1e-8, cfg.seed.wrapping_add(4)),
        check_graph_spectral_properties(50, 40, 6, 1e-9, cfg.seed.wrapping_add(5)),
        check_jacobian_fd(50, InstanceDims { n_max: 6, d_max: 4, h_max: 4, k_min: 1, k_max: 3 }, 1e-5,
            cfg.seed.wrapping_add(6)),
        check_dominance_chain(30, dims, 1e-8, cfg.seed.wrapping_add(7), cfg.break_dominance),
        check_alpha_chain_bound(20, dims, cfg.seed.wrapping_add(8)),
        check_perturbation_condition_suite(10, dims, cfg.trials, cfg.seed.wrapping_add(9)),
        check_perturbation_bounds_suite(10, dims, cfg.trials.min(1000), cfg.seed.wrapping_add(10)),
        check_concentration_suite(10, cfg.trials, cfg.seed.wrapping_add(11)),
        check_kl_soundness(20, dims, 20, cfg.seed.wrapping_add(12)),
    ];
    let all_pass = checks.iter().all(|c| c.pass);
    Ok(VerifyBundle { seed: cfg.seed, trials: cfg.trials, all_pass, checks })
}
