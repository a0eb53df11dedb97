//! Sampling-based verification of the perturbation condition, the
//! perturbation bounds, and the quadratic-form concentration step.
//!
//! Every trial draws its randomness from a counter-based generator
//! seeded with `seed ^ trial`, so reports are bit-identical regardless
//! of execution order or parallelism, and aggregates (max, median,
//! quantiles) are computed over sorted collections.

use crate::error::{Error, Result};
use crate::gcn::{forward, GcnModel};
use crate::graphs::Propagation;
use crate::matrixkit::{sym_eig, Matrix};
use crate::pacbayes::PacParams;
use crate::sensitivity::{SensitivitySet, StructuredMatrix};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

/// Monte-Carlo configuration: trial count, base seed, perturbation scale
/// for Taylor-regime checks, and the pass tolerance.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct McConfig {
    pub trials: usize,
    pub seed: u64,
    pub perturbation_scale: f64,
    pub tolerance: f64,
}

impl McConfig {
    pub fn new(trials: usize, seed: u64, perturbation_scale: f64, tolerance: f64) -> Result<Self> {
        if trials < 100 {
            return Err(Error::Validation(format!("trials must be >= 100, got {trials}")));
        }
        if !(perturbation_scale > 0.0 && perturbation_scale.is_finite()) {
            return Err(Error::Validation(format!(
                "perturbation scale must be > 0, got {perturbation_scale}"
            )));
        }
        if !(tolerance >= 0.0 && tolerance.is_finite()) {
            return Err(Error::Validation(format!("tolerance must be >= 0, got {tolerance}")));
        }
        Ok(Self { trials, seed, perturbation_scale, tolerance })
    }
}

/// Outcome of one sampling check.
#[derive(Clone, Debug, Serialize)]
pub struct McReport {
    /// Fraction of trials satisfying the checked event.
    pub empirical_probability: f64,
    /// Worst trial statistic (context-dependent ratio).
    pub max_ratio: f64,
    /// `(q, value)` quantiles of the trial statistic, monotone in q.
    pub quantiles: Vec<(f64, f64)>,
    /// `(epsilon, max ratio)` rungs for ladder checks, largest scale first.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub ladder: Vec<(f64, f64)>,
    /// Trials where the denominator vanished while the numerator did not.
    pub violations: usize,
    pub pass: bool,
}

fn trial_rng(cfg: &McConfig, trial: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(cfg.seed ^ trial as u64)
}

fn standard_normal_vec(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| StandardNormal.sample(rng)).collect()
}

fn quantiles_of(sorted: &[f64], qs: &[f64]) -> Vec<(f64, f64)> {
    qs.iter()
        .map(|&q| {
            let idx = ((sorted.len() as f64 - 1.0) * q).round() as usize;
            (q, sorted[idx])
        })
        .collect()
}

const LADDER_QS: [f64; 5] = [0.1, 0.25, 0.5, 0.75, 0.9];

/// Sampler for `u_l ~ N(0, σ² R_l)`: applies the symmetric PSD square
/// root of each block (closed form for scaled identities).
struct PosteriorSampler {
    sqrt_blocks: Vec<StructuredMatrix>,
    sigma: f64,
}

impl PosteriorSampler {
    fn new(posteriors: &[StructuredMatrix], sigma_sq: f64) -> Result<Self> {
        if !(sigma_sq > 0.0 && sigma_sq.is_finite()) {
            return Err(Error::Validation(format!("sigma^2 must be > 0, got {sigma_sq}")));
        }
        let sqrt_blocks = posteriors
            .iter()
            .map(|r| match r {
                StructuredMatrix::ScaledIdentity { dim, scale } => {
                    if *scale < 0.0 {
                        return Err(Error::Validation("negative covariance scale".into()));
                    }
                    Ok(StructuredMatrix::ScaledIdentity { dim: *dim, scale: scale.sqrt() })
                }
                StructuredMatrix::Dense(m) => {
                    let eig = sym_eig(&m.symmetrized())?;
                    if eig.eigenvalues.iter().any(|&l| l < -1e-10) {
                        return Err(Error::Validation(
                            "posterior covariance has a negative eigenvalue".into(),
                        ));
                    }
                    Ok(StructuredMatrix::Dense(
                        eig.map_spectrum(|l| l.max(0.0).sqrt())?,
                    ))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { sqrt_blocks, sigma: sigma_sq.sqrt() })
    }

    /// Draws one perturbation per layer (column-stacked vectors).
    fn draw(&self, rng: &mut ChaCha8Rng) -> Result<Vec<Vec<f64>>> {
        self.sqrt_blocks
            .iter()
            .map(|b| {
                let z = standard_normal_vec(rng, b.cols());
                Ok(b.apply(&z)?.into_iter().map(|v| v * self.sigma).collect())
            })
            .collect()
    }
}

/// Checks the perturbation condition: with `u_l ~ N(0, σ² R_l)`,
/// `P[Σ_l ‖A_l u_l‖₂² < γ²/16] ≥ 1/2` up to binomial slack
/// `2/√trials`.
pub fn check_perturbation_condition(
    set: &SensitivitySet,
    sigma_sq: f64,
    posteriors: &[StructuredMatrix],
    params: &PacParams,
    cfg: &McConfig,
) -> Result<McReport> {
    if posteriors.len() != set.depth() {
        return Err(Error::Dimension(format!(
            "{} posterior blocks for {} sensitivity layers",
            posteriors.len(),
            set.depth()
        )));
    }
    for (a, r) in set.matrices.iter().zip(posteriors) {
        if a.cols() != r.rows() {
            return Err(Error::Dimension(format!(
                "sensitivity block with {} columns vs covariance {}x{}",
                a.cols(),
                r.rows(),
                r.cols()
            )));
        }
    }
    let sampler = PosteriorSampler::new(posteriors, sigma_sq)?;
    let threshold = params.gamma * params.gamma / 16.0;
    let mut totals = Vec::with_capacity(cfg.trials);
    for t in 0..cfg.trials {
        let mut rng = trial_rng(cfg, t);
        let u = sampler.draw(&mut rng)?;
        totals.push(set.total_norm_sq(&u)?);
    }
    let below = totals.iter().filter(|&&v| v < threshold).count();
    let empirical_probability = below as f64 / cfg.trials as f64;
    totals.sort_by(|a, b| a.partial_cmp(b).expect("finite totals"));
    let max_ratio = totals.last().expect("nonempty") / threshold;
    let slack = 2.0 / (cfg.trials as f64).sqrt();
    Ok(McReport {
        empirical_probability,
        max_ratio,
        quantiles: quantiles_of(&totals, &LADDER_QS),
        ladder: Vec::new(),
        violations: 0,
        pass: empirical_probability >= 0.5 - slack,
    })
}

/// Ratio `‖f_{w+εu}(X) − f_w(X)‖∞² / (ε² Σ_l ‖A_l u_l‖₂²)` of one
/// perturbation direction, or `None` for a genuine 0/positive violation.
pub fn perturbation_ratio(
    model: &GcnModel,
    prop: &Propagation,
    x: &Matrix,
    set: &SensitivitySet,
    per_layer: &[Vec<f64>],
    epsilon: f64,
) -> Result<Option<f64>> {
    let baseline = forward(model, prop, x)?.output;
    let denominator = epsilon * epsilon * set.total_norm_sq(per_layer)?;
    let blocks: Vec<Matrix> = model
        .weights()
        .iter()
        .zip(per_layer)
        .map(|(w, u)| {
            Matrix::from_vec_cols(w.rows(), w.cols(), u)
                .and_then(|m| m.scale(epsilon))
        })
        .collect::<Result<Vec<_>>>()?;
    let perturbed = forward(&model.apply_perturbation(&blocks)?, prop, x)?.output;
    let numerator = perturbed
        .iter()
        .zip(&baseline)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
        .powi(2);
    if denominator == 0.0 {
        return Ok(if numerator == 0.0 { Some(0.0) } else { None });
    }
    Ok(Some(numerator / denominator))
}

/// Excess-decay ladder: passes when the worst ratio at the smallest
/// scale is within `1 + tol` and the excess over 1 shrinks by at least
/// 5x per rung.
fn ladder_pass(ladder: &[(f64, f64)], tolerance: f64) -> bool {
    let Some(&(_, last)) = ladder.last() else { return false };
    if last > 1.0 + tolerance {
        return false;
    }
    ladder.windows(2).all(|w| {
        let prev = (w[0].1 - 1.0).max(0.0);
        let next = (w[1].1 - 1.0).max(0.0);
        next <= prev / 5.0 + 1e-12
    })
}

/// Verifies the first-order perturbation bound
/// `‖f_{w+εu}(X) − f_w(X)‖∞² ≤ ε² Σ_l ‖A_l u_l‖₂²` on a decreasing
/// ladder of scales `{ε, ε/10, ε/100}` starting at
/// `cfg.perturbation_scale`, with `u` drawn once per trial from the
/// posterior.
pub fn check_perturbation_bound(
    model: &GcnModel,
    prop: &Propagation,
    x: &Matrix,
    set: &SensitivitySet,
    sigma_sq: f64,
    posteriors: &[StructuredMatrix],
    cfg: &McConfig,
) -> Result<McReport> {
    let sampler = PosteriorSampler::new(posteriors, sigma_sq)?;
    let scales = [cfg.perturbation_scale, cfg.perturbation_scale / 10.0,
        cfg.perturbation_scale / 100.0];
    let mut violations = 0usize;
    let mut per_scale: Vec<Vec<f64>> = vec![Vec::with_capacity(cfg.trials); scales.len()];
    for t in 0..cfg.trials {
        let mut rng = trial_rng(cfg, t);
        let u = sampler.draw(&mut rng)?;
        for (s, &eps) in scales.iter().enumerate() {
            match perturbation_ratio(model, prop, x, set, &u, eps)? {
                Some(r) => per_scale[s].push(r),
                None => violations += 1,
            }
        }
    }
    let ladder: Vec<(f64, f64)> = scales
        .iter()
        .zip(&per_scale)
        .map(|(&eps, rs)| (eps, rs.iter().cloned().fold(0.0, f64::max)))
        .collect();
    let mut finest = per_scale.last().expect("nonempty ladder").clone();
    finest.sort_by(|a, b| a.partial_cmp(b).expect("finite ratios"));
    let max_ratio = ladder.last().expect("nonempty").1;
    let within = finest.iter().filter(|&&r| r <= 1.0 + cfg.tolerance).count();
    let pass = violations == 0 && ladder_pass(&ladder, cfg.tolerance);
    Ok(McReport {
        empirical_probability: within as f64 / finest.len().max(1) as f64,
        max_ratio,
        quantiles: quantiles_of(&finest, &LADDER_QS),
        ladder,
        violations,
        pass,
    })
}

/// Verifies the depth-d perturbation bound
/// `‖f_{w+u} − f_w‖₂² ≤ d B² ‖L‖₂^{2d-2} Π_l ‖W_l‖₂² Σ_l ‖U_l‖₂²/‖W_l‖₂²`
/// on the same ε-ladder, with `U_l` standard Gaussian before scaling and
/// `B` taken as the max row norm of `x`.
pub fn check_lemma6(
    model: &GcnModel,
    prop: &Propagation,
    x: &Matrix,
    cfg: &McConfig,
) -> Result<McReport> {
    let d = model.depth();
    let norms = model.spectral_norms()?;
    if norms.iter().any(|&b| b == 0.0) {
        return Err(Error::Validation("lemma-6 bound needs nonzero layer norms".into()));
    }
    let b_sq = x.two_infinity_norm().powi(2);
    let l_pow = prop.operator_norm()?.powi(2 * d as i32 - 2);
    let prod: f64 = norms.iter().map(|b| b * b).product();
    let baseline = forward(model, prop, x)?.output;
    let scales = [cfg.perturbation_scale, cfg.perturbation_scale / 10.0,
        cfg.perturbation_scale / 100.0];
    let mut per_scale: Vec<Vec<f64>> = vec![Vec::with_capacity(cfg.trials); scales.len()];
    let mut violations = 0usize;
    for t in 0..cfg.trials {
        let mut rng = trial_rng(cfg, t);
        let u_blocks: Vec<Matrix> = model
            .weights()
            .iter()
            .map(|w| {
                let z = standard_normal_vec(&mut rng, w.rows() * w.cols());
                Matrix::from_vec_cols(w.rows(), w.cols(), &z)
            })
            .collect::<Result<Vec<_>>>()?;
        for (s, &eps) in scales.iter().enumerate() {
            let scaled: Vec<Matrix> =
                u_blocks.iter().map(|u| u.scale(eps)).collect::<Result<Vec<_>>>()?;
            let out = forward(&model.apply_perturbation(&scaled)?, prop, x)?.output;
            let lhs: f64 =
                out.iter().zip(&baseline).map(|(a, b)| (a - b) * (a - b)).sum();
            let sum: f64 = scaled
                .iter()
                .zip(&norms)
                .map(|(u, &b)| Ok(u.spectral_norm()?.powi(2) / (b * b)))
                .collect::<Result<Vec<f64>>>()?
                .iter()
                .sum();
            let rhs = d as f64 * b_sq * l_pow * prod * sum;
            if rhs == 0.0 {
                if lhs > 0.0 {
                    violations += 1;
                } else {
                    per_scale[s].push(0.0);
                }
            } else {
                per_scale[s].push(lhs / rhs);
            }
        }
    }
    let ladder: Vec<(f64, f64)> = scales
        .iter()
        .zip(&per_scale)
        .map(|(&eps, rs)| (eps, rs.iter().cloned().fold(0.0, f64::max)))
        .collect();
    let mut finest = per_scale.last().expect("nonempty").clone();
    finest.sort_by(|a, b| a.partial_cmp(b).expect("finite ratios"));
    let max_ratio = ladder.last().expect("nonempty").1;
    let within = finest.iter().filter(|&&r| r <= 1.0 + cfg.tolerance).count();
    let pass = violations == 0 && ladder_pass(&ladder, cfg.tolerance);
    Ok(McReport {
        empirical_probability: within as f64 / finest.len().max(1) as f64,
        max_ratio,
        quantiles: quantiles_of(&finest, &LADDER_QS),
        ladder,
        violations,
        pass,
    })
}

/// Verifies the quadratic-form concentration behind κ: with
/// `u ~ N(0, σ² R)`, the median of `‖A u‖₂²` must not exceed
/// `σ² κ Tr(A R Aᵀ)`.
pub fn check_quadratic_concentration(
    a: &Matrix,
    r: &Matrix,
    sigma_sq: f64,
    cfg: &McConfig,
) -> Result<McReport> {
    if a.cols() != r.rows() || !r.is_square() {
        return Err(Error::Dimension(format!(
            "A is {}x{} but R is {}x{}",
            a.rows(),
            a.cols(),
            r.rows(),
            r.cols()
        )));
    }
    let sampler =
        PosteriorSampler::new(&[StructuredMatrix::Dense(r.clone())], sigma_sq)?;
    let mut values = Vec::with_capacity(cfg.trials);
    for t in 0..cfg.trials {
        let mut rng = trial_rng(cfg, t);
        let u = &sampler.draw(&mut rng)?[0];
        let au = a.matvec(u)?;
        values.push(au.iter().map(|v| v * v).sum::<f64>());
    }
    values.sort_by(|x, y| x.partial_cmp(y).expect("finite values"));
    let median = values[values.len() / 2];
    let bound = sigma_sq * crate::pacbayes::kappa() * a.matmul(r)?.matmul(&a.transpose())?.trace();
    let below = values.iter().filter(|&&v| v <= bound).count();
    Ok(McReport {
        empirical_probability: below as f64 / cfg.trials as f64,
        max_ratio: if bound > 0.0 { median / bound } else { f64::from(median > 0.0) as f64 },
        quantiles: quantiles_of(&values, &LADDER_QS),
        ladder: Vec::new(),
        violations: 0,
        pass: median <= bound,
    })
}
