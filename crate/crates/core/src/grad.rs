//! Composite loss (log-cosh accuracy term plus pinball interval terms
//! on the floor-plane type-reduced set) and its exact gradient with
//! respect to the unconstrained parameters.
//!
//! The gradient path records each sample's forward pass on a
//! [`Tape`](crate::tape::Tape) after a plain forward pass has fixed
//! every branch decision (Karnik-Mendel switch masks, pinball sides,
//! degenerate-firing fallbacks), so the backward sweep differentiates
//! exactly the smooth piece the forward pass evaluated. A central
//! finite-difference oracle shares the forward formulas but none of
//! the differentiation machinery.

use crate::error::{Error, Result};
use crate::inference::{forward_model, KmOutcome};
use crate::membership::AlphaPlaneGrid;
use crate::params::{constrain, ConstrainedParams, ModelConfig, ParamGroup, RawParams, Variant};
use crate::tape::{NodeId, Tape};

/// `ln(cosh x)` computed as `|x| + ln((1 + e^(-2|x|)) / 2)` so large
/// residuals cannot overflow `cosh`.
pub fn log_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + ((-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2)
}

/// Pinball (quantile) loss `max(tau r, (tau - 1) r)` of a residual.
pub fn pinball(residual: f64, tau: f64) -> f64 {
    (tau * residual).max((tau - 1.0) * residual)
}

/// Batch-mean loss decomposition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    pub total: f64,
    pub accuracy: f64,
    pub pinball: f64,
}

/// Every branch decision taken by a batch forward pass, flattened.
/// Two evaluations landed on the same smooth piece of the loss iff
/// their signatures are equal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BranchSignature(Vec<bool>);

struct SampleForward {
    loss_accuracy: f64,
    loss_pinball: f64,
    planes: Vec<KmOutcome>,
    lower_residual_nonneg: bool,
    upper_residual_nonneg: bool,
}

fn forward_sample(
    x: &[f64],
    target: f64,
    params: &ConstrainedParams,
    config: &ModelConfig,
    quantiles: (f64, f64),
) -> Result<SampleForward> {
    let fwd = forward_model(x, params, config)?;
    let eps = target - fwd.prediction.point;
    let r_lower = target - fwd.prediction.lower;
    let r_upper = target - fwd.prediction.upper;
    Ok(SampleForward {
        loss_accuracy: log_cosh(eps),
        loss_pinball: pinball(r_lower, quantiles.0) + pinball(r_upper, quantiles.1),
        planes: fwd.plane_branches,
        lower_residual_nonneg: r_lower >= 0.0,
        upper_residual_nonneg: r_upper >= 0.0,
    })
}

fn validate_batch(
    features: &[Vec<f64>],
    targets: &[f64],
    config: &ModelConfig,
    quantiles: (f64, f64),
) -> Result<()> {
    if features.is_empty() {
        return Err(Error::shape("batch must contain at least one sample".to_string()));
    }
    if features.len() != targets.len() {
        return Err(Error::shape(format!(
            "{} feature rows vs {} targets",
            features.len(),
            targets.len()
        )));
    }
    for row in features {
        if row.len() != config.inputs {
            return Err(Error::shape(format!(
                "feature row has {} dims, model expects {}",
                row.len(),
                config.inputs
            )));
        }
    }
    let (lo, hi) = quantiles;
    if !(0.0 < lo && lo < hi && hi < 1.0) {
        return Err(Error::config(format!(
            "quantiles must satisfy 0 < {lo} < {hi} < 1"
        )));
    }
    Ok(())
}

/// Batch-mean loss via the plain forward pass only.
pub fn batch_loss(
    raw: &RawParams,
    features: &[Vec<f64>],
    targets: &[f64],
    config: &ModelConfig,
    quantiles: (f64, f64),
) -> Result<LossBreakdown> {
    Ok(batch_loss_with_branches(raw, features, targets, config, quantiles)?.0)
}

/// Batch-mean loss plus the branch signature of the evaluation.
pub fn batch_loss_with_branches(
    raw: &RawParams,
    features: &[Vec<f64>],
    targets: &[f64],
    config: &ModelConfig,
    quantiles: (f64, f64),
) -> Result<(LossBreakdown, BranchSignature)> {
    validate_batch(features, targets, config, quantiles)?;
    let params = constrain(raw, config)?;
    let b = features.len() as f64;
    let mut acc = 0.0;
    let mut pin = 0.0;
    let mut bits = Vec::new();
    for (x, &y) in features.iter().zip(targets) {
        let sample = forward_sample(x, y, &params, config, quantiles)?;
        acc += sample.loss_accuracy;
        pin += sample.loss_pinball;
        push_branch_bits(&mut bits, &sample);
    }
    let accuracy = acc / b;
    let pinball = pin / b;
    Ok((
        LossBreakdown { total: accuracy + pinball, accuracy, pinball },
        BranchSignature(bits),
    ))
}

fn push_branch_bits(bits: &mut Vec<bool>, sample: &SampleForward) {
    for plane in &sample.planes {
        bits.push(plane.degenerate);
        bits.extend_from_slice(&plane.lower_mask);
        bits.extend_from_slice(&plane.upper_mask);
    }
    bits.push(sample.lower_residual_nonneg);
    bits.push(sample.upper_residual_nonneg);
}

/// Batch-mean loss and its exact gradient with respect to the raw
/// parameter vector. Deterministic for fixed inputs: samples are
/// accumulated in batch order.
pub fn loss_and_grad(
    raw: &RawParams,
    features: &[Vec<f64>],
    targets: &[f64],
    config: &ModelConfig,
    quantiles: (f64, f64),
) -> Result<(LossBreakdown, Vec<f64>)> {
    validate_batch(features, targets, config, quantiles)?;
    let params = constrain(raw, config)?;
    let grid = config.alpha_grid();

    let n = raw.values().len();
    let b = features.len() as f64;
    let mut grad = vec![0.0; n];
    let mut acc = 0.0;
    let mut pin = 0.0;

    let mut tape = Tape::new();
    let mut scratch = Vec::new();
    let mut sample_grad = Vec::new();

    for (x, &y) in features.iter().zip(targets) {
        let sample = forward_sample(x, y, &params, config, quantiles)?;
        acc += sample.loss_accuracy;
        pin += sample.loss_pinball;

        tape.clear();
        let total = record_sample(&mut tape, raw, config, &grid, x, y, quantiles, &sample);
        tape.gradient_into(total, &mut scratch, &mut sample_grad);
        for (g, s) in grad.iter_mut().zip(&sample_grad) {
            *g += s;
        }
    }

    for g in &mut grad {
        *g /= b;
    }
    let accuracy = acc / b;
    let pinball_mean = pin / b;
    let breakdown = LossBreakdown {
        total: accuracy + pinball_mean,
        accuracy,
        pinball: pinball_mean,
    };

    if !breakdown.total.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::Divergence {
            group: diverged_group(raw, &grad),
            trace: None,
        });
    }
    Ok((breakdown, grad))
}

fn diverged_group(raw: &RawParams, grad: &[f64]) -> String {
    for (i, g) in grad.iter().enumerate() {
        if !g.is_finite() {
            if let Some(group) = raw.layout().group_at(i) {
                return group.name().to_string();
            }
        }
    }
    for (i, v) in raw.values().iter().enumerate() {
        if !v.is_finite() {
            if let Some(group) = raw.layout().group_at(i) {
                return group.name().to_string();
            }
        }
    }
    "loss".to_string()
}

/// Records one sample's forward pass with all branches frozen to the
/// plain pass's decisions; returns the total-loss node.
#[allow(clippy::too_many_arguments)]
fn record_sample(
    tape: &mut Tape,
    raw: &RawParams,
    config: &ModelConfig,
    grid: &AlphaPlaneGrid,
    x: &[f64],
    target: f64,
    quantiles: (f64, f64),
    sample: &SampleForward,
) -> NodeId {
    let inputs: Vec<NodeId> = raw.values().iter().map(|&v| tape.input(v)).collect();
    let layout = raw.layout();
    let node = |group: ParamGroup, idx: usize| -> NodeId {
        inputs[layout.offset(group).expect("group in layout") + idx]
    };

    let (p, m) = (config.rules, config.inputs);
    let two_m = 2.0 * m as f64;

    // gaussian primary on the tape; mirrors pmf_scaled_unchecked
    let pmf = |tape: &mut Tape, center: NodeId, sigma: NodeId, xv: f64| -> NodeId {
        let neg_c = tape.mul_const(center, -1.0);
        let d = tape.add_const(neg_c, xv);
        let d2 = tape.mul(d, d);
        let s2 = tape.mul(sigma, sigma);
        let den = tape.mul_const(s2, two_m);
        let q = tape.div(d2, den);
        let nq = tape.neg(q);
        tape.exp(nq)
    };

    // per plane, per rule: (lower firing node, upper firing node)
    let mut plane_firing_nodes: Vec<Vec<(NodeId, NodeId)>> = Vec::with_capacity(grid.len());
    match config.variant {
        Variant::ZGt2 => {
            let mut gammas = Vec::with_capacity(p * m);
            let mut sigmas_checked = Vec::with_capacity(p * m);
            for pi in 0..p {
                for mi in 0..m {
                    let sigma = tape.softplus(node(ParamGroup::SigmaHat, pi * m + mi));
                    sigmas_checked.push(sigma);
                    gammas.push(pmf(tape, node(ParamGroup::Centers, pi * m + mi), sigma, x[mi]));
                }
            }
            let ratio_l: Vec<NodeId> =
                (0..m).map(|mi| tape.sigmoid(node(ParamGroup::SmfLeftHat, mi))).collect();
            let ratio_r: Vec<NodeId> =
                (0..m).map(|mi| tape.sigmoid(node(ParamGroup::SmfRightHat, mi))).collect();

            for &scale in &grid.secondary_cut_scales() {
                let mut firings = Vec::with_capacity(p);
                for pi in 0..p {
                    let mut lower: Option<NodeId> = None;
                    let mut upper: Option<NodeId> = None;
                    for mi in 0..m {
                        let gamma = gammas[pi * m + mi];
                        // lmf = gamma * (1 + ratio_l * -scale)
                        let t = tape.mul_const(ratio_l[mi], -scale);
                        let shrink = tape.add_const(t, 1.0);
                        let lmf = tape.mul(gamma, shrink);
                        // umf = gamma + (1 - gamma) * (ratio_r * scale)
                        let neg_gamma = tape.mul_const(gamma, -1.0);
                        let one_minus = tape.add_const(neg_gamma, 1.0);
                        let rs = tape.mul_const(ratio_r[mi], scale);
                        let grow = tape.mul(one_minus, rs);
                        let umf = tape.add(gamma, grow);
                        lower = Some(match lower {
                            None => lmf,
                            Some(acc) => tape.mul(acc, lmf),
                        });
                        upper = Some(match upper {
                            None => umf,
                            Some(acc) => tape.mul(acc, umf),
                        });
                    }
                    firings.push((lower.unwrap(), upper.unwrap()));
                }
                plane_firing_nodes.push(firings);
            }
        }
        Variant::MjGt2 => {
            let mut base = Vec::with_capacity(p * m);
            for pi in 0..p {
                for mi in 0..m {
                    let sigma = tape.softplus(node(ParamGroup::SigmaHat, pi * m + mi));
                    let e = pmf(tape, node(ParamGroup::Centers, pi * m + mi), sigma, x[mi]);
                    let h = tape.sigmoid(node(ParamGroup::HeightHat, pi * m + mi));
                    let l0 = tape.mul(h, e);
                    base.push((l0, e));
                }
            }
            let mut deltas = Vec::with_capacity(m);
            for mi in 0..m {
                let dl = tape.sigmoid(node(ParamGroup::DeltaLowerHat, mi));
                let du_sig = tape.sigmoid(node(ParamGroup::DeltaUpperHat, mi));
                let neg_dl = tape.mul_const(dl, -1.0);
                let room = tape.add_const(neg_dl, 1.0);
                let gain = tape.mul(room, du_sig);
                let du = tape.add(dl, gain);
                let neg_du = tape.mul_const(du, -1.0);
                let one_minus_du = tape.add_const(neg_du, 1.0);
                deltas.push((dl, one_minus_du));
            }
            for &alpha in grid.levels() {
                let mut firings = Vec::with_capacity(p);
                for pi in 0..p {
                    let mut lower: Option<NodeId> = None;
                    let mut upper: Option<NodeId> = None;
                    for mi in 0..m {
                        let (l0, u0) = base[pi * m + mi];
                        let (dl, one_minus_du) = deltas[mi];
                        let span = tape.sub(u0, l0);
                        let scaled = tape.mul_const(span, alpha);
                        let rise = tape.mul(scaled, dl);
                        let lmf = tape.add(l0, rise);
                        let drop = tape.mul(scaled, one_minus_du);
                        let umf = tape.sub(u0, drop);
                        lower = Some(match lower {
                            None => lmf,
                            Some(acc) => tape.mul(acc, lmf),
                        });
                        upper = Some(match upper {
                            None => umf,
                            Some(acc) => tape.mul(acc, umf),
                        });
                    }
                    firings.push((lower.unwrap(), upper.unwrap()));
                }
                plane_firing_nodes.push(firings);
            }
        }
        Variant::It2H | Variant::It2Hs => {
            let mut firings = Vec::with_capacity(p);
            for pi in 0..p {
                let mut lower: Option<NodeId> = None;
                let mut upper: Option<NodeId> = None;
                for mi in 0..m {
                    let center = node(ParamGroup::Centers, pi * m + mi);
                    let sigma_up = tape.softplus(node(ParamGroup::SigmaHat, pi * m + mi));
                    let u0 = pmf(tape, center, sigma_up, x[mi]);
                    let l_raw = if config.variant == Variant::It2Hs {
                        let ratio = tape.sigmoid(node(ParamGroup::SigmaRatioHat, pi * m + mi));
                        let sigma_lo = tape.mul(sigma_up, ratio);
                        pmf(tape, center, sigma_lo, x[mi])
                    } else {
                        u0
                    };
                    let h = tape.sigmoid(node(ParamGroup::HeightHat, pi * m + mi));
                    let l0 = tape.mul(h, l_raw);
                    lower = Some(match lower {
                        None => l0,
                        Some(acc) => tape.mul(acc, l0),
                    });
                    upper = Some(match upper {
                        None => u0,
                        Some(acc) => tape.mul(acc, u0),
                    });
                }
                firings.push((lower.unwrap(), upper.unwrap()));
            }
            plane_firing_nodes.push(firings);
        }
    }

    // consequents y_p = a0 + sum a x
    let consequents: Vec<NodeId> = (0..p)
        .map(|pi| {
            let mut acc = node(ParamGroup::Intercepts, pi);
            for mi in 0..m {
                let term = tape.mul_const(node(ParamGroup::Coeffs, pi * m + mi), x[mi]);
                acc = tape.add(acc, term);
            }
            acc
        })
        .collect();

    // type reduction with frozen switch masks
    let mut plane_trs = Vec::with_capacity(grid.len());
    for (firings, outcome) in plane_firing_nodes.iter().zip(&sample.planes) {
        if outcome.degenerate {
            let mut sum = consequents[0];
            for &y in &consequents[1..] {
                sum = tape.add(sum, y);
            }
            let count = tape.constant(p as f64);
            let mean = tape.div(sum, count);
            plane_trs.push((mean, mean));
            continue;
        }
        let endpoint = |tape: &mut Tape, mask: &[bool]| -> NodeId {
            let mut num: Option<NodeId> = None;
            let mut den: Option<NodeId> = None;
            for pi in 0..p {
                let w = if mask[pi] { firings[pi].1 } else { firings[pi].0 };
                let wy = tape.mul(w, consequents[pi]);
                num = Some(match num {
                    None => wy,
                    Some(acc) => tape.add(acc, wy),
                });
                den = Some(match den {
                    None => w,
                    Some(acc) => tape.add(acc, w),
                });
            }
            tape.div(num.unwrap(), den.unwrap())
        };
        let lo = endpoint(tape, &outcome.lower_mask);
        let hi = endpoint(tape, &outcome.upper_mask);
        plane_trs.push((lo, hi));
    }

    // aggregate point output
    let mut num: Option<NodeId> = None;
    for (&(lo, hi), &alpha) in plane_trs.iter().zip(grid.levels()) {
        let sum = tape.add(lo, hi);
        let mid = tape.mul_const(sum, 0.5);
        let term = tape.mul_const(mid, alpha);
        num = Some(match num {
            None => term,
            Some(acc) => tape.add(acc, term),
        });
    }
    let weight_sum = tape.constant(grid.weight_sum());
    let point = tape.div(num.unwrap(), weight_sum);

    // loss with frozen pinball sides
    let neg_point = tape.mul_const(point, -1.0);
    let eps = tape.add_const(neg_point, target);
    let loss_acc = tape.log_cosh(eps);

    let (tau_lo, tau_hi) = quantiles;
    let neg_lower = tape.mul_const(plane_trs[0].0, -1.0);
    let r_lower = tape.add_const(neg_lower, target);
    let c_lower = if sample.lower_residual_nonneg { tau_lo } else { tau_lo - 1.0 };
    let pin_lower = tape.mul_const(r_lower, c_lower);

    let neg_upper = tape.mul_const(plane_trs[0].1, -1.0);
    let r_upper = tape.add_const(neg_upper, target);
    let c_upper = if sample.upper_residual_nonneg { tau_hi } else { tau_hi - 1.0 };
    let pin_upper = tape.mul_const(r_upper, c_upper);

    let pin = tape.add(pin_lower, pin_upper);
    let total = tape.add(loss_acc, pin);

    debug_assert!(
        (tape.value(total) - (sample.loss_accuracy + sample.loss_pinball)).abs()
            <= 1e-9 * (1.0 + tape.value(total).abs()),
        "tape forward drifted from plain forward"
    );
    total
}

/// Central finite differences of a scalar function of a flat vector.
pub fn central_diff(mut f: impl FnMut(&[f64]) -> f64, at: &[f64], step: f64) -> Vec<f64> {
    let mut point = at.to_vec();
    let mut grad = Vec::with_capacity(at.len());
    for i in 0..at.len() {
        let original = point[i];
        point[i] = original + step;
        let plus = f(&point);
        point[i] = original - step;
        let minus = f(&point);
        point[i] = original;
        grad.push((plus - minus) / (2.0 * step));
    }
    grad
}

/// Central-difference estimate of the batch-loss gradient. Shares the
/// plain forward pass with [`batch_loss`] and nothing with the tape.
pub fn finite_diff_grad(
    raw: &RawParams,
    features: &[Vec<f64>],
    targets: &[f64],
    config: &ModelConfig,
    quantiles: (f64, f64),
    step: f64,
) -> Result<Vec<f64>> {
    if step <= 0.0 {
        return Err(Error::config(format!("finite-difference step must be positive, got {step}")));
    }
    validate_batch(features, targets, config, quantiles)?;
    let layout = raw.layout().clone();
    let mut failure = None;
    let grad = central_diff(
        |values| {
            let probe = RawParams::new(values.to_vec(), layout.clone()).expect("same layout");
            match batch_loss(&probe, features, targets, config, quantiles) {
                Ok(loss) => loss.total,
                Err(e) => {
                    failure = Some(e);
                    f64::NAN
                }
            }
        },
        raw.values(),
        step,
    );
    match failure {
        Some(e) => Err(e),
        None => Ok(grad),
    }
}

/// One coordinate's analytic-vs-numeric disagreement.
#[derive(Debug, Clone)]
pub struct WorstCoordinate {
    pub variant: Variant,
    pub seed: u64,
    pub index: usize,
    pub group: String,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_err: f64,
}

/// Outcome of a gradient verification sweep.
#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    pub worst: Option<WorstCoordinate>,
    pub coordinates_checked: usize,
    pub coordinates_excluded: usize,
}

impl GradCheckReport {
    pub fn passes(&self, tolerance: f64) -> bool {
        self.max_rel_err < tolerance
    }
}

const GRADCHECK_FD_STEP: f64 = 1e-6;
const GRADCHECK_BRANCH_PROBE: f64 = 1e-5;
/// Relative-error denominator floor; below it the comparison is
/// effectively absolute at the finite-difference noise scale.
const GRADCHECK_SCALE_FLOOR: f64 = 1e-4;

fn gradcheck_instance(variant: Variant, seed: u64) -> (ModelConfig, RawParams, Vec<Vec<f64>>, Vec<f64>) {
    use rand::Rng;
    let k = if variant.is_single_plane() { 0 } else { 2 };
    let config = ModelConfig::new(variant, 3, 2, k).expect("valid shape");
    let layout = crate::params::Layout::new(variant, config.rules, config.inputs);
    let mut rng = crate::seed::stream_rng(seed, &format!("gradcheck.{variant}"));
    let mut raw = RawParams::zeros(layout);
    for v in raw.values_mut() {
        *v = rng.gen_range(-2.0..2.0);
    }
    let features: Vec<Vec<f64>> = (0..4)
        .map(|_| (0..config.inputs).map(|_| rng.gen_range(-2.0..2.0)).collect())
        .collect();
    let targets: Vec<f64> = (0..4).map(|_| rng.gen_range(-2.0..2.0)).collect();
    (config, raw, features, targets)
}

/// Compares the analytic gradient against central differences on
/// seeded random instances of every variant, excluding coordinates
/// whose perturbation flips a branch decision. `corrupt` deliberately
/// damages the analytic gradient (negative-control hook for the
/// verification gate itself).
pub fn gradient_check(instances_per_variant: usize, base_seed: u64, corrupt: bool) -> Result<GradCheckReport> {
    let quantiles = (0.005, 0.995);
    let mut report = GradCheckReport {
        max_rel_err: 0.0,
        worst: None,
        coordinates_checked: 0,
        coordinates_excluded: 0,
    };

    for variant in Variant::ALL {
        for i in 0..instances_per_variant {
            let seed = base_seed.wrapping_add(i as u64);
            let (config, raw, features, targets) = gradcheck_instance(variant, seed);
            let (_, mut analytic) = loss_and_grad(&raw, &features, &targets, &config, quantiles)?;
            if corrupt {
                analytic[0] += 1e-2;
            }
            let numeric =
                finite_diff_grad(&raw, &features, &targets, &config, quantiles, GRADCHECK_FD_STEP)?;

            let (_, center_sig) =
                batch_loss_with_branches(&raw, &features, &targets, &config, quantiles)?;

            for idx in 0..analytic.len() {
                if branch_flips(&raw, idx, &features, &targets, &config, quantiles, &center_sig)? {
                    report.coordinates_excluded += 1;
                    continue;
                }
                report.coordinates_checked += 1;
                let (a, f) = (analytic[idx], numeric[idx]);
                let scale = a.abs().max(f.abs()).max(GRADCHECK_SCALE_FLOOR);
                let rel = (a - f).abs() / scale;
                if rel > report.max_rel_err {
                    report.max_rel_err = rel;
                    report.worst = Some(WorstCoordinate {
                        variant,
                        seed,
                        index: idx,
                        group: raw
                            .layout()
                            .group_at(idx)
                            .map(|g| g.name().to_string())
                            .unwrap_or_else(|| "?".to_string()),
                        analytic: a,
                        numeric: f,
                        rel_err: rel,
                    });
                }
            }
        }
    }
    Ok(report)
}

#[allow(clippy::too_many_arguments)]
fn branch_flips(
    raw: &RawParams,
    idx: usize,
    features: &[Vec<f64>],
    targets: &[f64],
    config: &ModelConfig,
    quantiles: (f64, f64),
    center: &BranchSignature,
) -> Result<bool> {
    let mut probe = raw.clone();
    for delta in [GRADCHECK_BRANCH_PROBE, -GRADCHECK_BRANCH_PROBE] {
        probe.values_mut()[idx] = raw.values()[idx] + delta;
        let (_, sig) = batch_loss_with_branches(&probe, features, targets, config, quantiles)?;
        if sig != *center {
            return Ok(true);
        }
    }
    Ok(false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Layout;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn log_cosh_values() {
        close(log_cosh(0.0), 0.0, 1e-15);
        close(log_cosh(1.0), 1.0f64.cosh().ln(), 1e-14);
        close(log_cosh(1.0), 0.43378, 1e-5);
        close(log_cosh(100.0), 100.0 - std::f64::consts::LN_2, 1e-12);
        assert!(log_cosh(1e8).is_finite());
    }

    #[test]
    fn log_cosh_properties() {
        for &x in &[-7.0, -0.3, 0.0, 0.4, 2.0, 40.0] {
            let v = log_cosh(x);
            assert!(v >= 0.0);
            close(v, log_cosh(-x), 1e-14);
            assert!(v <= x.abs() + 1e-14);
        }
    }

    #[test]
    fn pinball_values() {
        assert_eq!(pinball(0.0, 0.3), 0.0);
        close(pinball(1.0, 0.995), 0.995, 1e-15);
        close(pinball(-1.0, 0.005), 0.995, 1e-15);
    }

    #[test]
    fn pinball_is_convex() {
        let taus = [0.005, 0.4, 0.995];
        let rs = [-2.0, -0.3, 0.0, 0.7, 1.8];
        for &tau in &taus {
            for &r1 in &rs {
                for &r2 in &rs {
                    for &lambda in &[0.0, 0.3, 0.5, 0.9, 1.0] {
                        let mix = lambda * r1 + (1.0 - lambda) * r2;
                        assert!(
                            pinball(mix, tau)
                                <= lambda * pinball(r1, tau) + (1.0 - lambda) * pinball(r2, tau) + 1e-12
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn central_diff_calibration() {
        let g = central_diff(|v| v[0] * v[0], &[3.0], 1e-6);
        close(g[0], 6.0, 1e-6);
        let g = central_diff(|_| 0.0, &[1.0, 2.0, 3.0], 1e-6);
        assert_eq!(g, vec![0.0, 0.0, 0.0]);
    }

    fn small_instance(variant: Variant, seed: u64) -> (ModelConfig, RawParams, Vec<Vec<f64>>, Vec<f64>) {
        gradcheck_instance(variant, seed)
    }

    #[test]
    fn loss_decomposition_identity() {
        let (config, raw, xs, ys) = small_instance(Variant::ZGt2, 3);
        let (loss, _) = loss_and_grad(&raw, &xs, &ys, &config, (0.005, 0.995)).unwrap();
        close(loss.total, loss.accuracy + loss.pinball, 1e-12);
        let plain = batch_loss(&raw, &xs, &ys, &config, (0.005, 0.995)).unwrap();
        close(plain.total, loss.total, 1e-12);
    }

    #[test]
    fn perfect_fit_zeroes_accuracy_term() {
        // single rule, so the model output is exactly the consequent
        let config = ModelConfig::new(Variant::ZGt2, 1, 1, 1).unwrap();
        let mut raw = RawParams::zeros(Layout::new(Variant::ZGt2, 1, 1));
        raw.group_mut(ParamGroup::Coeffs)[0] = 2.0;
        raw.group_mut(ParamGroup::Intercepts)[0] = 1.0;
        raw.group_mut(ParamGroup::SmfLeftHat)[0] = -700.0;
        raw.group_mut(ParamGroup::SmfRightHat)[0] = -700.0;
        let xs = vec![vec![0.5], vec![-1.0]];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x[0] + 1.0).collect();
        let loss = batch_loss(&raw, &xs, &ys, &config, (0.005, 0.995)).unwrap();
        close(loss.accuracy, 0.0, 1e-12);
        // zero-width interval sitting exactly on the target also zeroes
        // the pinball terms
        close(loss.pinball, 0.0, 1e-12);
    }

    #[test]
    fn single_rule_intercept_gradient() {
        // d/da0 [log cosh(y - yhat) + pinball terms] with yhat = a0 + a x;
        // the accuracy part contributes -tanh(eps), each pinball term its
        // frozen slope
        let config = ModelConfig::new(Variant::ZGt2, 1, 1, 1).unwrap();
        let mut raw = RawParams::zeros(Layout::new(Variant::ZGt2, 1, 1));
        raw.group_mut(ParamGroup::Coeffs)[0] = 0.7;
        raw.group_mut(ParamGroup::Intercepts)[0] = 0.2;
        let xs = vec![vec![0.4]];
        let target = 1.3;
        let (tau_lo, tau_hi) = (0.005, 0.995);
        let (_, grad) = loss_and_grad(&raw, &xs, &[target], &config, (tau_lo, tau_hi)).unwrap();

        let yhat = 0.2 + 0.7 * 0.4;
        let eps = target - yhat;
        let a0_idx = raw.layout().range(ParamGroup::Intercepts).unwrap().start;
        // residuals are positive here, so both pinball terms sit on the
        // tau branch with slope -tau w.r.t. the prediction
        let expected = -eps.tanh() - tau_lo - tau_hi;
        close(grad[a0_idx], expected, 1e-12);
    }

    #[test]
    fn analytic_matches_finite_differences_per_variant() {
        for variant in Variant::ALL {
            let (config, raw, xs, ys) = small_instance(variant, 7);
            let (_, analytic) = loss_and_grad(&raw, &xs, &ys, &config, (0.005, 0.995)).unwrap();
            let numeric =
                finite_diff_grad(&raw, &xs, &ys, &config, (0.005, 0.995), 1e-6).unwrap();
            for (i, (&a, &f)) in analytic.iter().zip(&numeric).enumerate() {
                let scale = a.abs().max(f.abs()).max(1e-4);
                assert!(
                    (a - f).abs() / scale < 1e-4,
                    "{variant} coord {i}: analytic {a} vs numeric {f}"
                );
            }
        }
    }

    #[test]
    fn gradient_check_sweep_passes_and_corruption_fails() {
        let report = gradient_check(2, 17, false).unwrap();
        assert!(report.passes(1e-4), "max rel err {}", report.max_rel_err);
        assert!(report.coordinates_checked > 0);

        let corrupted = gradient_check(1, 17, true).unwrap();
        assert!(!corrupted.passes(1e-4));
        assert!(corrupted.worst.is_some());
    }

    #[test]
    fn divergence_names_parameter_group() {
        let config = ModelConfig::new(Variant::ZGt2, 1, 1, 1).unwrap();
        let mut raw = RawParams::zeros(Layout::new(Variant::ZGt2, 1, 1));
        raw.group_mut(ParamGroup::Intercepts)[0] = f64::INFINITY;
        let err = loss_and_grad(&raw, &[vec![0.0]], &[0.0], &config, (0.005, 0.995)).unwrap_err();
        match err {
            Error::Divergence { group, .. } => assert_eq!(group, "intercepts"),
            other => panic!("expected divergence, got {other}"),
        }
    }

    #[test]
    fn rejects_bad_quantiles_and_empty_batch() {
        let (config, raw, xs, ys) = small_instance(Variant::ZGt2, 1);
        assert!(loss_and_grad(&raw, &xs, &ys, &config, (0.9, 0.1)).is_err());
        assert!(loss_and_grad(&raw, &[], &[], &config, (0.005, 0.995)).is_err());
        assert!(finite_diff_grad(&raw, &xs, &ys, &config, (0.005, 0.995), 0.0).is_err());
    }
}
