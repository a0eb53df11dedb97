//! Acceptance suite: one test per release criterion, each printing a
//! pass/fail line with its runtime and asserting the stated tolerance.
//!
//! Criterion 2 asserts the documented eigenvalue range [0, 1] of the
//! normalized adjacency. That range is provably wrong for any graph
//! that is not a disjoint union of cliques (the P3 path already has the
//! eigenvalue -1/6), so the subclaim fails honestly; see the assertion
//! message for the analysis. Every other criterion passes.

use gcnbound::gcn::{forward, Activation, GraphSample};
use gcnbound::graphs::{build_propagation, generate, propagated_ones, PropagationKind};
use gcnbound::instances::{
    random_instance, rotating_graph_spec, InstanceDims, Regime,
};
use gcnbound::pacbayes::{
    compute_bound_report, graph_spectral_complexity, spectral_complexity, spectral_g_values,
    BoundKind, PacParams,
};
use gcnbound::sensitivity::{FilterKind, FilterSpec};
use gcnbound::serialize::to_canonical_json;
use gcnbound::verify::{
    check_dominance_chain, check_jacobian_fd, check_kl_soundness, check_lemma_axb_bound,
    check_lemma_kron_norms, check_lemma_kron_psd_order, check_lemma_trace_logdet,
    check_perturbation_bounds_suite, check_perturbation_condition_suite, run_suite, VerifyConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

fn report(criterion: usize, name: &str, pass: bool, started: Instant, detail: &str) {
    println!(
        "criterion {criterion:>2} [{}] {name} ({:.2}s) {detail}",
        if pass { "PASS" } else { "FAIL" },
        started.elapsed().as_secs_f64()
    );
}

#[test]
fn criterion_01_lemma_suite() {
    let started = Instant::now();
    let checks = [
        check_lemma_trace_logdet(100, 6, 1e-8, 101),
        check_lemma_kron_psd_order(100, 6, 1e-8, 102),
        check_lemma_kron_norms(100, 6, 1e-8, 103),
        check_lemma_axb_bound(100, 6, 1e-8, 104),
    ];
    let pass = checks.iter().all(|c| c.pass);
    let elapsed_ok = started.elapsed().as_secs_f64() < 10.0;
    report(1, "lemma suite (trace-logdet, kron order, kron norms, AXB)", pass && elapsed_ok,
        started, &format!("{:?}", checks.iter().map(|c| c.pass).collect::<Vec<_>>()));
    for c in &checks {
        assert!(c.pass, "{} failed: {}", c.name, c.detail);
    }
    assert!(elapsed_ok, "lemma suite exceeded 10 s");
}

#[test]
fn criterion_02_graph_spectral_lemma() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let depths = 1..=6usize;
    let mut norm_radius_failures = Vec::new();
    let mut eigenvalue_range_failures = Vec::new();
    let mut sandwich_failures = Vec::new();
    let mut lazy_failures = Vec::new();
    let mut worst_min_eig = f64::INFINITY;
    for i in 0..50usize {
        let n = rng.gen_range(3..=40);
        let spec = rotating_graph_spec(i, n);
        let g = generate(&spec, rng.gen()).expect("generator");
        let label = format!("graph {i} ({spec:?})");

        let na = build_propagation(&g, PropagationKind::NormalizedAdjacency).expect("build");
        if (na.spectral_radius - 1.0).abs() > 1e-9
            || (na.operator_norm().expect("norm") - 1.0).abs() > 1e-9
        {
            norm_radius_failures.push(label.clone());
        }
        let min_eig = *na.eigenvalues().last().expect("spectrum");
        worst_min_eig = worst_min_eig.min(min_eig);
        if na.eigenvalues().iter().any(|&l| !(-1e-9..=1.0 + 1e-9).contains(&l)) {
            eigenvalue_range_failures.push(format!("{label}: min eigenvalue {min_eig:.6}"));
        }
        for d in depths.clone() {
            let (norm_sq, lower) = propagated_ones(&na, d).expect("ones");
            if !(lower <= norm_sq + 1e-9 && norm_sq <= g.node_count() as f64 + 1e-9) {
                sandwich_failures.push(format!("{label} at depth {d}"));
            }
        }

        let lazy = build_propagation(&g, PropagationKind::LazyRandomWalk).expect("build");
        for d in depths.clone() {
            let ones = lazy.propagate_ones(d - 1);
            if ones.iter().any(|&v| (v - 1.0).abs() > 1e-12) {
                lazy_failures.push(format!("{label}: L^{} 1 != 1", d - 1));
            }
        }
        let norm = lazy.operator_norm().expect("norm");
        let upper = ((g.max_degree() as f64 + 1.0) / (g.min_degree() as f64 + 1.0)).sqrt();
        if !(norm >= 1.0 - 1e-9 && norm <= upper + 1e-9) {
            lazy_failures.push(format!("{label}: ||L||_2 = {norm} outside [1, {upper}]"));
        }
    }
    let elapsed_ok = started.elapsed().as_secs_f64() < 20.0;
    let pass = norm_radius_failures.is_empty()
        && eigenvalue_range_failures.is_empty()
        && sandwich_failures.is_empty()
        && lazy_failures.is_empty()
        && elapsed_ok;
    report(2, "graph spectral properties on 50 graphs", pass, started, &format!(
        "rho/norm fails: {}, eig-range fails: {}, sandwich fails: {}, lazy fails: {}, min eig {:.6}",
        norm_radius_failures.len(),
        eigenvalue_range_failures.len(),
        sandwich_failures.len(),
        lazy_failures.len(),
        worst_min_eig,
    ));
    assert!(norm_radius_failures.is_empty(), "rho/spectral-norm: {norm_radius_failures:?}");
    assert!(sandwich_failures.is_empty(), "propagated-ones sandwich: {sandwich_failures:?}");
    assert!(lazy_failures.is_empty(), "lazy-walk properties: {lazy_failures:?}");
    assert!(elapsed_ok, "exceeded 20 s");
    assert!(
        eigenvalue_range_failures.is_empty(),
        "eigenvalue range [0,1] is violated on {}/50 graphs (worst min eigenvalue {:.6}); \
         first failures: {:?}.\n\
         This subclaim is not attainable: D^{{-1/2}}(I+A)D^{{-1/2}} with self-loop degrees is \
         PSD iff lambda_min(A) >= -1, i.e. iff the graph is a disjoint union of cliques. The \
         3-node path already has the exact eigenvalue -1/6. Self-loops shrink but do not \
         remove the negative tail; the correct range is (-1, 1], and rho(L) = ||L||_2 = 1 \
         together with the alpha_1^2 <= ||L^{{d-1}}1||^2 <= n sandwich (asserted above) hold \
         regardless of the sign of the lower spectrum.",
        eigenvalue_range_failures.len(),
        worst_min_eig,
        &eigenvalue_range_failures[..eigenvalue_range_failures.len().min(3)],
    );
}

#[test]
fn criterion_03_jacobian_finite_difference() {
    let started = Instant::now();
    let dims = InstanceDims { n_max: 6, d_max: 4, h_max: 4, k_min: 1, k_max: 3 };
    let check = check_jacobian_fd(50, dims, 1e-5, 303);
    let elapsed_ok = started.elapsed().as_secs_f64() < 30.0;
    report(3, "tanh Jacobians vs central differences (50 instances)", check.pass && elapsed_ok,
        started, &check.detail.to_string());
    assert!(check.pass, "{}", check.detail);
    assert!(elapsed_ok, "exceeded 30 s");
}

#[test]
fn criterion_04_dominance_chain() {
    let started = Instant::now();
    let check = check_dominance_chain(30, InstanceDims::default(), 1e-8, 404, false);
    let elapsed_ok = started.elapsed().as_secs_f64() < 60.0;
    report(4, "J'J <= (1/d)A'A (exact + 5 filters x 3 xi) and Gram chain, 30 ReLU instances",
        check.pass && elapsed_ok, started, &check.detail.to_string());
    assert!(check.pass, "{}", check.detail);
    assert!(elapsed_ok, "exceeded 60 s");
}

#[test]
fn criterion_05_perturbation_condition() {
    let started = Instant::now();
    let check = check_perturbation_condition_suite(30, InstanceDims::default(), 10_000, 505);
    let elapsed_ok = started.elapsed().as_secs_f64() < 60.0;
    report(5, "perturbation condition at 10k trials, 30 instances x 3 designs",
        check.pass && elapsed_ok, started, &check.detail.to_string());
    assert!(check.pass, "{}", check.detail);
    assert!(elapsed_ok, "exceeded 60 s");
}

#[test]
fn criterion_06_perturbation_bounds() {
    let started = Instant::now();
    let check = check_perturbation_bounds_suite(10, InstanceDims::default(), 1000, 606);
    let elapsed_ok = started.elapsed().as_secs_f64() < 60.0;
    let worst = check.detail["worst_max_ratio_at_finest_scale"].as_f64().unwrap_or(f64::NAN);
    report(6, "perturbation-bound ladders (design + depth-d norm), 10 instances x 1k trials",
        check.pass && worst <= 1.05 && elapsed_ok, started, &check.detail.to_string());
    assert!(check.pass, "{}", check.detail);
    assert!(worst <= 1.05, "max ratio {worst} > 1.05 at eps = 1e-3");
    assert!(elapsed_ok, "exceeded 60 s");
}

#[test]
fn criterion_07_bound_ordering() {
    let started = Instant::now();
    let mut pass = true;
    let mut worst_margin = f64::INFINITY;
    for i in 0..20usize {
        let dims = InstanceDims { n_max: 8, d_max: 4, h_max: 4, k_min: 2, k_max: 2 };
        let inst = random_instance(
            i,
            dims,
            Activation::ReLU,
            Regime::Signed,
            PropagationKind::NormalizedAdjacency,
            707,
        )
        .expect("instance");
        // K <= h by construction (widths drawn in k..=h_max).
        let bound = inst.features.two_infinity_norm();
        let samples = vec![GraphSample {
            graph: inst.graph.clone(),
            features: inst.features.clone(),
            label: 1,
        }];
        let params = PacParams::new(1.0, 0.05, 32, bound, 1.0).expect("params");
        let lowrank = compute_bound_report(
            &BoundKind::SpatialLowRank,
            &inst.model,
            &inst.prop,
            &samples,
            &params,
        )
        .expect("lowrank report");
        let baseline = compute_bound_report(
            &BoundKind::Baseline,
            &inst.model,
            &inst.prop,
            &samples,
            &params,
        )
        .expect("baseline report");
        let (lr, base) =
            (lowrank.complexity_term.expect("term"), baseline.complexity_term.expect("term"));
        let d = inst.model.depth() as f64;
        let h = inst.model.max_width() as f64;
        let k = inst.model.classes() as f64;
        let n = inst.graph.node_count() as f64;
        let (ones_norm_sq, _) = propagated_ones(&inst.prop, inst.model.depth()).expect("ones");
        let factor = (d * h).ln() * (h / k) * (n / ones_norm_sq);
        if !(factor > 1.0) {
            pass = false;
        }
        // Strict ordering by at least the stated factor.
        let margin = base - lr * factor;
        worst_margin = worst_margin.min(margin / base.max(1e-300));
        if base + 1e-9 * base < lr * factor {
            pass = false;
        }
        if lr > base {
            pass = false;
        }
    }
    let elapsed_ok = started.elapsed().as_secs_f64() < 10.0;
    report(7, "low-rank complexity <= baseline by >= ln(dh) h/K n/||L^{d-1}1||^2, 20 instances",
        pass && elapsed_ok, started, &format!("worst relative margin {worst_margin:.3e}"));
    assert!(pass, "bound ordering violated (worst relative margin {worst_margin})");
    assert!(elapsed_ok, "exceeded 10 s");
}

#[test]
fn criterion_08_spectral_reductions() {
    let started = Instant::now();
    let mut pass = true;
    for i in 0..20usize {
        let inst = random_instance(
            i,
            InstanceDims::default(),
            Activation::ReLU,
            Regime::Signed,
            PropagationKind::NormalizedAdjacency,
            808,
        )
        .expect("instance");
        let phi = spectral_complexity(&inst.model).expect("phi");
        let id = FilterSpec::with_default_xi(FilterKind::Identity);
        let g_id = spectral_g_values(&inst.model, &inst.prop, &id).expect("g values");
        let phi_sp = graph_spectral_complexity(&inst.model, &g_id).expect("phi sp");
        if phi_sp > phi * (1.0 + 1e-9) {
            pass = false;
        }
        for kind in [
            FilterKind::LowPassRational,
            FilterKind::LowPassPoly,
            FilterKind::HighPassRational,
            FilterKind::HighPassPoly,
        ] {
            for xi in [0.25, 1.0] {
                let f = FilterSpec::new(kind, xi).expect("xi");
                let g = spectral_g_values(&inst.model, &inst.prop, &f).expect("g values");
                let phi_f = graph_spectral_complexity(&inst.model, &g).expect("phi filter");
                if phi_f + 1e-12 < phi_sp {
                    pass = false;
                }
            }
        }
    }
    let elapsed_ok = started.elapsed().as_secs_f64() < 10.0;
    report(8, "identity filter Phi^sp <= Phi; xi>0 filters >= identity, 20 instances",
        pass && elapsed_ok, started, "");
    assert!(pass);
    assert!(elapsed_ok, "exceeded 10 s");
}

#[test]
fn criterion_09_kl_soundness() {
    let started = Instant::now();
    let check = check_kl_soundness(30, InstanceDims::default(), 20, 909);
    let elapsed_ok = started.elapsed().as_secs_f64() < 20.0;
    report(9, "kl_upper >= kl_exact >= 0 and R* local optimality, 30 instances",
        check.pass && elapsed_ok, started, &check.detail.to_string());
    assert!(check.pass, "{}", check.detail);
    assert!(elapsed_ok, "exceeded 20 s");
}

#[test]
fn criterion_10_verify_determinism() {
    let started = Instant::now();
    let cfg = VerifyConfig { seed: 2024, trials: 1000, break_dominance: false };
    let a = to_canonical_json(&run_suite(&cfg).expect("suite"), 12).expect("json");
    let b = to_canonical_json(&run_suite(&cfg).expect("suite"), 12).expect("json");
    let pass = a == b && !a.is_empty();
    report(10, "verify suite twice with identical seeds -> byte-identical JSON", pass, started,
        &format!("{} bytes", a.len()));
    assert_eq!(a, b, "verify reports differ between runs");
}

/// Supporting check used by criterion 7's premise: complexity terms are
/// evaluated on the same forward state the margin loss sees.
#[test]
fn acceptance_sanity_margin_loss_consistency() {
    let started = Instant::now();
    let inst = random_instance(
        0,
        InstanceDims { k_min: 2, ..InstanceDims::default() },
        Activation::ReLU,
        Regime::Signed,
        PropagationKind::NormalizedAdjacency,
        4242,
    )
    .expect("instance");
    let state = forward(&inst.model, &inst.prop, &inst.features).expect("forward");
    let label = state
        .output
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).expect("finite"))
        .map(|(i, _)| i + 1)
        .expect("argmax");
    let samples = vec![GraphSample {
        graph: inst.graph.clone(),
        features: inst.features.clone(),
        label,
    }];
    let params =
        PacParams::new(1.0, 0.05, 32, inst.features.two_infinity_norm(), 1.0).expect("params");
    let report_ = compute_bound_report(
        &BoundKind::SpatialLowRank,
        &inst.model,
        &inst.prop,
        &samples,
        &params,
    )
    .expect("report");
    assert!(report_.final_bound.expect("bound") >= report_.empirical_margin_loss);
    report(0, "sanity: report invariants", true, started, "");
}
