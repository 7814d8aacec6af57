//! Rule firings, TSK consequents, Karnik-Mendel type reduction per
//! alpha-plane, and the alpha-weighted aggregate output.

use crate::error::{Error, Result};
use crate::membership::{
    mj_alpha_bounds, pmf_scaled_unchecked, zadeh_plane_bounds_from_ratios, AlphaPlaneGrid,
};
use crate::params::{ConstrainedParams, ModelConfig};

/// Lower/upper rule firing strength on one alpha-plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiringInterval {
    pub lower: f64,
    pub upper: f64,
}

/// Point prediction plus the floor-plane type-reduced set serving as
/// the prediction interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictionWithInterval {
    pub point: f64,
    pub lower: f64,
    pub upper: f64,
}

impl PredictionWithInterval {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Firings below this on every rule's upper bound trigger the
/// degenerate fallback (unweighted consequent mean) instead of a 0/0.
pub(crate) const DEGENERATE_FIRING_EPS: f64 = 1e-300;

/// TSK consequent values `y_p = sum_m a_{p,m} x_m + a_{p,0}`.
pub fn consequent_values(x: &[f64], coeffs: &[Vec<f64>], intercepts: &[f64]) -> Result<Vec<f64>> {
    if coeffs.len() != intercepts.len() {
        return Err(Error::shape(format!(
            "{} coefficient rows vs {} intercepts",
            coeffs.len(),
            intercepts.len()
        )));
    }
    let mut out = Vec::with_capacity(coeffs.len());
    for (row, &a0) in coeffs.iter().zip(intercepts) {
        if row.len() != x.len() {
            return Err(Error::shape(format!(
                "consequent row has {} slopes, input has {} dims",
                row.len(),
                x.len()
            )));
        }
        let mut acc = a0;
        for (a, xv) in row.iter().zip(x) {
            acc += a * xv;
        }
        out.push(acc);
    }
    Ok(out)
}

/// Product t-norm over the per-dimension bounds of one plane:
/// `f_lower = prod_m lmf_m`, `f_upper = prod_m umf_m` per rule.
pub fn rule_firings(per_dim_bounds: &[Vec<(f64, f64)>]) -> Result<Vec<FiringInterval>> {
    let mut out = Vec::with_capacity(per_dim_bounds.len());
    for (p, dims) in per_dim_bounds.iter().enumerate() {
        if dims.is_empty() {
            return Err(Error::shape(format!("rule {p} has no dimensions")));
        }
        let mut lower = 1.0;
        let mut upper = 1.0;
        for &(l, u) in dims {
            if !(0.0..=1.0).contains(&l) || !(0.0..=1.0).contains(&u) || l > u {
                return Err(Error::invalid_parameter(format!(
                    "rule {p}: bound pair ({l}, {u}) not an ordered pair in [0, 1]"
                )));
            }
            lower *= l;
            upper *= u;
        }
        out.push(FiringInterval { lower, upper });
    }
    Ok(out)
}

/// Outcome of one Karnik-Mendel reduction, including which firing
/// bound each rule contributed to each endpoint. The masks let a
/// gradient pass rebuild the endpoints as smooth weighted averages
/// with the switch points frozen.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct KmOutcome {
    pub lower: f64,
    pub upper: f64,
    /// Per original rule index: true when the upper firing feeds the
    /// lower endpoint's weighted average.
    pub lower_mask: Vec<bool>,
    /// Same for the upper endpoint.
    pub upper_mask: Vec<bool>,
    pub degenerate: bool,
}

/// Exact extrema of `sum f_p y_p / sum f_p` over `f_p` in the firing
/// boxes, by the classic two-pass iterative Karnik-Mendel procedure
/// (consequents sorted ascending, switch point iterated to a fixed
/// point).
pub fn km_type_reduce(firings: &[FiringInterval], consequents: &[f64]) -> Result<(f64, f64)> {
    if firings.is_empty() {
        return Err(Error::shape("type reduction needs at least one rule".to_string()));
    }
    if firings.len() != consequents.len() {
        return Err(Error::shape(format!(
            "{} firings vs {} consequents",
            firings.len(),
            consequents.len()
        )));
    }
    for (p, f) in firings.iter().enumerate() {
        if !(f.lower >= 0.0 && f.lower <= f.upper && f.upper <= 1.0) {
            return Err(Error::invalid_parameter(format!(
                "rule {p}: firing interval ({}, {}) violates 0 <= lower <= upper <= 1",
                f.lower, f.upper
            )));
        }
    }
    if let Some(y) = consequents.iter().find(|y| !y.is_finite()) {
        return Err(Error::invalid_parameter(format!("non-finite consequent {y}")));
    }
    let outcome = km_reduce(firings, consequents);
    Ok((outcome.lower, outcome.upper))
}

pub(crate) fn km_reduce(firings: &[FiringInterval], ys: &[f64]) -> KmOutcome {
    let p = ys.len();
    debug_assert_eq!(firings.len(), p);

    if firings.iter().all(|f| f.upper <= DEGENERATE_FIRING_EPS) {
        let mean = ys.iter().sum::<f64>() / p as f64;
        return KmOutcome {
            lower: mean,
            upper: mean,
            lower_mask: vec![false; p],
            upper_mask: vec![false; p],
            degenerate: true,
        };
    }

    // stable sort: equal consequents keep original rule order, and the
    // objective is flat across such ties
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&i, &j| ys[i].partial_cmp(&ys[j]).unwrap());
    let sorted_ys: Vec<f64> = order.iter().map(|&i| ys[i]).collect();
    let sorted_lo: Vec<f64> = order.iter().map(|&i| firings[i].lower).collect();
    let sorted_hi: Vec<f64> = order.iter().map(|&i| firings[i].upper).collect();

    let (lower, lower_sorted_mask) = km_endpoint(&sorted_ys, &sorted_lo, &sorted_hi, true);
    let (upper, upper_sorted_mask) = km_endpoint(&sorted_ys, &sorted_lo, &sorted_hi, false);

    let mut lower_mask = vec![false; p];
    let mut upper_mask = vec![false; p];
    for (sorted_idx, &orig) in order.iter().enumerate() {
        lower_mask[orig] = lower_sorted_mask[sorted_idx];
        upper_mask[orig] = upper_sorted_mask[sorted_idx];
    }
    KmOutcome { lower, upper, lower_mask, upper_mask, degenerate: false }
}

/// Weighted average with the first `switch` sorted rules on one bound
/// and the rest on the other. Minimizing puts the upper firings on the
/// small consequents.
fn switch_average(ys: &[f64], lo: &[f64], hi: &[f64], switch: usize, minimize: bool) -> (f64, f64) {
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..ys.len() {
        let use_upper = if minimize { i < switch } else { i >= switch };
        let f = if use_upper { hi[i] } else { lo[i] };
        num += f * ys[i];
        den += f;
    }
    (num, den)
}

fn mask_for_switch(p: usize, switch: usize, minimize: bool) -> Vec<bool> {
    (0..p)
        .map(|i| if minimize { i < switch } else { i >= switch })
        .collect()
}

fn km_endpoint(ys: &[f64], lo: &[f64], hi: &[f64], minimize: bool) -> (f64, Vec<bool>) {
    let p = ys.len();
    if p == 1 {
        // single rule: the average is y regardless; weight it with the
        // (positive) upper firing
        return (ys[0], vec![true]);
    }

    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..p {
        let f = 0.5 * (lo[i] + hi[i]);
        num += f * ys[i];
        den += f;
    }
    let mut guess = num / den;

    let mut current_switch = usize::MAX;
    let mut value = guess;
    for _ in 0..p + 2 {
        let switch = ys.partition_point(|&v| v <= guess).clamp(1, p - 1);
        let (num, den) = switch_average(ys, lo, hi, switch, minimize);
        if den <= DEGENERATE_FIRING_EPS {
            // a switch configuration with no mass; fall back to an
            // exhaustive scan of the P+1 candidates, which is exact
            return km_exhaustive(ys, lo, hi, minimize);
        }
        value = num / den;
        if switch == current_switch {
            break;
        }
        current_switch = switch;
        guess = value;
    }
    (value, mask_for_switch(p, current_switch, minimize))
}

fn km_exhaustive(ys: &[f64], lo: &[f64], hi: &[f64], minimize: bool) -> (f64, Vec<bool>) {
    let p = ys.len();
    let mut best: Option<(f64, usize)> = None;
    for switch in 0..=p {
        let (num, den) = switch_average(ys, lo, hi, switch, minimize);
        if den <= DEGENERATE_FIRING_EPS {
            continue;
        }
        let value = num / den;
        let better = match best {
            None => true,
            Some((b, _)) => {
                if minimize {
                    value < b
                } else {
                    value > b
                }
            }
        };
        if better {
            best = Some((value, switch));
        }
    }
    let (value, switch) = best.expect("all-upper switch always has mass");
    (value, mask_for_switch(p, switch, minimize))
}

/// Alpha-weighted aggregate of the per-plane type-reduced midpoints:
/// `y = sum_k alpha_k (lo_k + hi_k)/2 / sum_k alpha_k`.
pub fn alpha_plane_output(per_plane: &[(f64, f64)], grid: &AlphaPlaneGrid) -> Result<f64> {
    if grid.is_empty() {
        return Err(Error::config("alpha grid is empty".to_string()));
    }
    if per_plane.len() != grid.len() {
        return Err(Error::shape(format!(
            "{} plane outputs vs {} grid levels",
            per_plane.len(),
            grid.len()
        )));
    }
    let mut num = 0.0;
    for (&(lo, hi), &alpha) in per_plane.iter().zip(grid.levels()) {
        let mid = (lo + hi) * 0.5;
        num += mid * alpha;
    }
    Ok(num / grid.weight_sum())
}

/// Full forward pass of one sample: per-plane firings, type reduction,
/// and aggregation, with the branch record a gradient pass needs.
#[derive(Debug, Clone)]
pub(crate) struct ModelForward {
    pub plane_trs: Vec<(f64, f64)>,
    pub plane_branches: Vec<KmOutcome>,
    pub prediction: PredictionWithInterval,
}

/// Per-dimension plane bounds per rule, for one plane level.
pub(crate) fn plane_firings(
    x: &[f64],
    params: &ConstrainedParams,
    config: &ModelConfig,
    grid: &AlphaPlaneGrid,
) -> Vec<Vec<FiringInterval>> {
    let (p, m) = (config.rules, config.inputs);
    let mut planes = Vec::with_capacity(grid.len());
    match params {
        ConstrainedParams::Zadeh(z) => {
            let gammas: Vec<Vec<f64>> = (0..p)
                .map(|pi| {
                    (0..m)
                        .map(|mi| pmf_scaled_unchecked(x[mi], z.centers[pi][mi], z.sigmas[pi][mi], m))
                        .collect()
                })
                .collect();
            for &scale in &grid.secondary_cut_scales() {
                let firings = (0..p)
                    .map(|pi| {
                        let mut lower = 1.0;
                        let mut upper = 1.0;
                        for mi in 0..m {
                            let (l, u) = zadeh_plane_bounds_from_ratios(
                                gammas[pi][mi],
                                z.smf_left_ratio[mi],
                                z.smf_right_ratio[mi],
                                scale,
                            );
                            lower *= l;
                            upper *= u;
                        }
                        FiringInterval { lower, upper }
                    })
                    .collect();
                planes.push(firings);
            }
        }
        ConstrainedParams::Mj(mj) => {
            let base: Vec<Vec<(f64, f64)>> = (0..p)
                .map(|pi| {
                    (0..m)
                        .map(|mi| {
                            let e = pmf_scaled_unchecked(
                                x[mi],
                                mj.centers[pi][mi],
                                mj.sigmas[pi][mi],
                                m,
                            );
                            (mj.heights[pi][mi] * e, e)
                        })
                        .collect()
                })
                .collect();
            for &alpha in grid.levels() {
                let firings = (0..p)
                    .map(|pi| {
                        let mut lower = 1.0;
                        let mut upper = 1.0;
                        for mi in 0..m {
                            let (l0, u0) = base[pi][mi];
                            let (l, u) = mj_alpha_bounds(
                                l0,
                                u0,
                                alpha,
                                mj.delta_lower[mi],
                                mj.delta_upper[mi],
                            );
                            lower *= l;
                            upper *= u;
                        }
                        FiringInterval { lower, upper }
                    })
                    .collect();
                planes.push(firings);
            }
        }
        ConstrainedParams::It2(it2) => {
            // single plane operating directly on the primary bounds
            let firings = (0..p)
                .map(|pi| {
                    let mut lower = 1.0;
                    let mut upper = 1.0;
                    for mi in 0..m {
                        let u = pmf_scaled_unchecked(
                            x[mi],
                            it2.centers[pi][mi],
                            it2.sigma_upper[pi][mi],
                            m,
                        );
                        let l = it2.heights[pi][mi]
                            * pmf_scaled_unchecked(
                                x[mi],
                                it2.centers[pi][mi],
                                it2.sigma_lower[pi][mi],
                                m,
                            );
                        lower *= l;
                        upper *= u;
                    }
                    FiringInterval { lower, upper }
                })
                .collect();
            planes.push(firings);
        }
    }
    planes
}

pub(crate) fn forward_model(
    x: &[f64],
    params: &ConstrainedParams,
    config: &ModelConfig,
) -> Result<ModelForward> {
    if x.len() != config.inputs {
        return Err(Error::shape(format!(
            "input has {} dims, model expects {}",
            x.len(),
            config.inputs
        )));
    }
    let grid = config.alpha_grid();
    let consequents = consequent_values(
        x,
        &params.consequents().coeffs,
        &params.consequents().intercepts,
    )?;

    let mut plane_trs = Vec::with_capacity(grid.len());
    let mut plane_branches = Vec::with_capacity(grid.len());
    for firings in plane_firings(x, params, config, &grid) {
        let outcome = km_reduce(&firings, &consequents);
        plane_trs.push((outcome.lower, outcome.upper));
        plane_branches.push(outcome);
    }

    let point = alpha_plane_output(&plane_trs, &grid)?;
    let (interval_lower, interval_upper) = plane_trs[0];
    Ok(ModelForward {
        plane_trs,
        plane_branches,
        prediction: PredictionWithInterval {
            point,
            lower: interval_lower,
            upper: interval_upper,
        },
    })
}

/// Point prediction and floor-plane interval for one input.
pub fn predict(
    x: &[f64],
    params: &ConstrainedParams,
    config: &ModelConfig,
) -> Result<PredictionWithInterval> {
    Ok(forward_model(x, params, config)?.prediction)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{constrain, Layout, ModelConfig, ParamGroup, RawParams, Variant};

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn consequents_affine() {
        let ys = consequent_values(&[0.0, 0.0], &[vec![1.0, 2.0]], &[5.0]).unwrap();
        assert_eq!(ys, vec![5.0]);
        let ys = consequent_values(&[1.0, 2.0], &[vec![1.0, 1.0]], &[0.0]).unwrap();
        assert_eq!(ys, vec![3.0]);
        let ys = consequent_values(
            &[0.5, -1.0],
            &[vec![2.0, 0.0], vec![0.0, 3.0]],
            &[1.0, -1.0],
        )
        .unwrap();
        assert_eq!(ys, vec![2.0, -4.0]);
    }

    #[test]
    fn consequents_reject_shape_mismatch() {
        assert!(consequent_values(&[1.0], &[vec![1.0, 2.0]], &[0.0]).is_err());
        assert!(consequent_values(&[1.0], &[vec![1.0]], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn firings_product_tnorm() {
        let f = rule_firings(&[vec![(1.0, 1.0), (1.0, 1.0)]]).unwrap();
        assert_eq!((f[0].lower, f[0].upper), (1.0, 1.0));

        let f = rule_firings(&[vec![(0.0, 0.5), (0.9, 1.0)]]).unwrap();
        assert_eq!(f[0].lower, 0.0);

        let f = rule_firings(&[vec![(0.5, 0.8), (0.4, 0.6)]]).unwrap();
        close(f[0].lower, 0.2, 1e-15);
        close(f[0].upper, 0.48, 1e-15);
    }

    #[test]
    fn firings_reject_bad_bounds() {
        assert!(rule_firings(&[vec![(0.7, 0.3)]]).is_err());
        assert!(rule_firings(&[vec![(-0.1, 0.3)]]).is_err());
        assert!(rule_firings(&[vec![(0.5, 1.2)]]).is_err());
    }

    fn fi(lower: f64, upper: f64) -> FiringInterval {
        FiringInterval { lower, upper }
    }

    #[test]
    fn km_single_rule() {
        let (lo, hi) = km_type_reduce(&[fi(0.2, 0.9)], &[2.5]).unwrap();
        assert_eq!((lo, hi), (2.5, 2.5));
    }

    #[test]
    fn km_crisp_weighted_average() {
        let (lo, hi) = km_type_reduce(&[fi(0.25, 0.25), fi(0.75, 0.75)], &[0.0, 4.0]).unwrap();
        close(lo, 3.0, 1e-12);
        close(hi, 3.0, 1e-12);
    }

    /// Brute force over the 2^P firing-box vertices.
    fn vertex_extrema(firings: &[FiringInterval], ys: &[f64]) -> (f64, f64) {
        let p = ys.len();
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for mask in 0..(1u32 << p) {
            let mut num = 0.0;
            let mut den = 0.0;
            for i in 0..p {
                let f = if mask & (1 << i) != 0 { firings[i].upper } else { firings[i].lower };
                num += f * ys[i];
                den += f;
            }
            if den > 0.0 {
                let v = num / den;
                min = min.min(v);
                max = max.max(v);
            }
        }
        (min, max)
    }

    #[test]
    fn km_matches_vertex_enumeration_small() {
        let firings = vec![fi(0.2, 0.6), fi(0.1, 0.5), fi(0.3, 0.9)];
        let ys = vec![-1.0, 0.0, 2.0];
        let (lo, hi) = km_type_reduce(&firings, &ys).unwrap();
        let (vl, vh) = vertex_extrema(&firings, &ys);
        close(lo, vl, 1e-12);
        close(hi, vh, 1e-12);
    }

    #[test]
    fn km_handles_zero_lower_mass() {
        // only one rule carries any mass, and only on its upper bound
        let firings = vec![fi(0.0, 0.0), fi(0.0, 1.0)];
        let ys = vec![0.0, 1.0];
        let (lo, hi) = km_type_reduce(&firings, &ys).unwrap();
        assert_eq!((lo, hi), (1.0, 1.0));
    }

    #[test]
    fn km_degenerate_firing_falls_back_to_mean() {
        let firings = vec![fi(0.0, 0.0), fi(0.0, 0.0), fi(0.0, 0.0)];
        let ys = vec![1.0, 2.0, 6.0];
        let (lo, hi) = km_type_reduce(&firings, &ys).unwrap();
        assert_eq!((lo, hi), (3.0, 3.0));
        assert!(km_reduce(&firings, &ys).degenerate);
    }

    #[test]
    fn km_ties_in_consequents() {
        let firings = vec![fi(0.1, 0.4), fi(0.2, 0.8), fi(0.05, 0.3)];
        let ys = vec![1.0, 1.0, 1.0];
        let (lo, hi) = km_type_reduce(&firings, &ys).unwrap();
        close(lo, 1.0, 1e-12);
        close(hi, 1.0, 1e-12);
    }

    #[test]
    fn km_rejects_invalid_inputs() {
        assert!(km_type_reduce(&[], &[]).is_err());
        assert!(km_type_reduce(&[fi(0.2, 0.1)], &[1.0]).is_err());
        assert!(km_type_reduce(&[fi(0.0, 0.5)], &[f64::NAN]).is_err());
        assert!(km_type_reduce(&[fi(0.0, 0.5), fi(0.0, 0.5)], &[1.0]).is_err());
    }

    #[test]
    fn aggregate_constant_planes() {
        let grid = AlphaPlaneGrid::gt2(2).unwrap();
        let y = alpha_plane_output(&[(3.0, 3.0), (3.0, 3.0), (3.0, 3.0)], &grid).unwrap();
        close(y, 3.0, 1e-12);
        let y = alpha_plane_output(&[(1.0, 1.0), (1.0, 1.0), (1.0, 1.0)], &grid).unwrap();
        close(y, 1.0, 1e-12);
    }

    #[test]
    fn aggregate_two_plane_value() {
        let grid = AlphaPlaneGrid::gt2(1).unwrap();
        let y = alpha_plane_output(&[(0.0, 0.0), (1.0, 1.0)], &grid).unwrap();
        close(y, 0.990099, 1e-6);
    }

    #[test]
    fn aggregate_rejects_length_mismatch() {
        let grid = AlphaPlaneGrid::gt2(1).unwrap();
        assert!(alpha_plane_output(&[(0.0, 0.0)], &grid).is_err());
    }

    fn zadeh_config_and_params(
        rules: usize,
        inputs: usize,
        k: usize,
        fill: impl Fn(usize) -> f64,
    ) -> (ModelConfig, ConstrainedParams, RawParams) {
        let config = ModelConfig::new(Variant::ZGt2, rules, inputs, k).unwrap();
        let mut raw = RawParams::zeros(Layout::new(Variant::ZGt2, rules, inputs));
        for (i, v) in raw.values_mut().iter_mut().enumerate() {
            *v = fill(i);
        }
        let params = constrain(&raw, &config).unwrap();
        (config, params, raw)
    }

    #[test]
    fn predict_zero_spread_collapses_to_t1() {
        let (config, _, mut raw) = zadeh_config_and_params(3, 2, 2, |i| ((i * 37) % 11) as f64 * 0.1 - 0.5);
        // drive the spread ratios to (numerically) zero
        raw.group_mut(ParamGroup::SmfLeftHat).fill(-700.0);
        raw.group_mut(ParamGroup::SmfRightHat).fill(-700.0);
        let params = constrain(&raw, &config).unwrap();

        let x = [0.3, -0.4];
        let pred = predict(&x, &params, &config).unwrap();
        close(pred.width(), 0.0, 1e-12);

        // type-1 TSK reference
        let ConstrainedParams::Zadeh(z) = &params else { panic!() };
        let mut num = 0.0;
        let mut den = 0.0;
        for p in 0..3 {
            let mut f = 1.0;
            for m in 0..2 {
                f *= pmf_scaled_unchecked(x[m], z.centers[p][m], z.sigmas[p][m], 2);
            }
            let y = z.consequents.intercepts[p]
                + z.consequents.coeffs[p][0] * x[0]
                + z.consequents.coeffs[p][1] * x[1];
            num += f * y;
            den += f;
        }
        close(pred.point, num / den, 1e-9);
    }

    #[test]
    fn predict_single_rule_is_consequent() {
        let (config, params, _) = zadeh_config_and_params(1, 2, 2, |i| (i as f64 * 0.3).sin());
        let x = [0.7, -1.1];
        let pred = predict(&x, &params, &config).unwrap();
        let ys = consequent_values(
            &x,
            &params.consequents().coeffs,
            &params.consequents().intercepts,
        )
        .unwrap();
        close(pred.point, ys[0], 1e-12);
        close(pred.lower, ys[0], 1e-12);
        close(pred.upper, ys[0], 1e-12);
    }

    #[test]
    fn predict_translation_equivariance() {
        let (config, params, raw) = zadeh_config_and_params(3, 2, 2, |i| ((i * 13) % 7) as f64 * 0.2 - 0.6);
        let x = [0.25, -0.75];
        let base = predict(&x, &params, &config).unwrap();

        let mut shifted = raw.clone();
        for v in shifted.group_mut(ParamGroup::Intercepts) {
            *v += 2.5;
        }
        let shifted_params = constrain(&shifted, &config).unwrap();
        let moved = predict(&x, &shifted_params, &config).unwrap();
        close(moved.point, base.point + 2.5, 1e-9);
        close(moved.lower, base.lower + 2.5, 1e-9);
        close(moved.upper, base.upper + 2.5, 1e-9);
    }

    #[test]
    fn predict_point_within_consequent_hull() {
        let (config, params, _) = zadeh_config_and_params(4, 3, 2, |i| ((i * 29) % 17) as f64 * 0.11 - 0.9);
        let x = [0.1, 0.9, -0.4];
        let pred = predict(&x, &params, &config).unwrap();
        let ys = consequent_values(
            &x,
            &params.consequents().coeffs,
            &params.consequents().intercepts,
        )
        .unwrap();
        let lo = ys.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!(pred.point >= lo - 1e-12 && pred.point <= hi + 1e-12);
        assert!(pred.lower >= lo - 1e-12 && pred.upper <= hi + 1e-12);
    }

    #[test]
    fn interval_widths_shrink_with_alpha() {
        let (config, params, _) = zadeh_config_and_params(3, 2, 3, |i| ((i * 7) % 13) as f64 * 0.15 - 0.8);
        let fwd = forward_model(&[0.2, 0.6], &params, &config).unwrap();
        for pair in fwd.plane_trs.windows(2) {
            let (w0, w1) = (pair[0].1 - pair[0].0, pair[1].1 - pair[1].0);
            assert!(w1 <= w0 + 1e-12, "width grew with alpha: {w0} -> {w1}");
            // nesting of the type-reduced sets themselves
            assert!(pair[1].0 >= pair[0].0 - 1e-12 && pair[1].1 <= pair[0].1 + 1e-12);
        }
    }
}
