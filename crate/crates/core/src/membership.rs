//! Primary/secondary membership functions and per-alpha-plane bound
//! extraction for the three antecedent families (two-sided-Gaussian
//! secondary, delta-parameterized secondary, plain interval Gaussian).
//!
//! All membership grades live in `[0, 1]`. An alpha-plane of a general
//! type-2 set behaves like an interval type-2 set: at each input it is
//! described by a lower/upper membership pair, and planes are nested
//! (higher alpha gives a tighter pair).

use crate::error::{Error, Result};

/// Level associated with the lowest alpha-plane. The alpha-cut scale
/// `sqrt(-2 ln alpha)` is undefined at 0, so the bottom plane is
/// anchored here instead.
pub const ALPHA_FLOOR: f64 = 0.01;

/// `sqrt(-2 ln ALPHA_FLOOR)`, the secondary spread that maps a unit
/// ratio onto the bottom-plane cut. Exact value, never the rounded 3.
pub fn alpha_floor_spread() -> f64 {
    (-2.0 * ALPHA_FLOOR.ln()).sqrt()
}

/// Numerically stable logistic function.
pub fn stable_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Numerically stable `ln(1 + e^x)`.
pub fn stable_softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Inverse of [`stable_sigmoid`] (logit).
pub fn inverse_sigmoid(y: f64) -> f64 {
    (y / (1.0 - y)).ln()
}

/// Inverse of [`stable_softplus`].
pub fn inverse_softplus(y: f64) -> f64 {
    (y.exp() - 1.0).ln()
}

/// Antecedent of one rule in one input dimension for the two-sided
/// Gaussian secondary family, with the secondary spreads materialized
/// for a specific primary grade.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZadehAntecedentDim {
    pub center: f64,
    pub pmf_sigma: f64,
    pub smf_sigma_left: f64,
    pub smf_sigma_right: f64,
}

/// Antecedent of one rule in one input dimension for the
/// interval-Gaussian primary with delta-parameterized secondary.
///
/// `delta_lower` scales the lower-bound leg of a plane and
/// `delta_upper` the upper-bound leg; `delta_lower <= delta_upper` is
/// what keeps the legs from crossing at alpha = 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MjAntecedentDim {
    pub center: f64,
    pub sigma_lower: f64,
    pub sigma_upper: f64,
    pub height: f64,
    pub delta_lower: f64,
    pub delta_upper: f64,
}

impl MjAntecedentDim {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_lower > 0.0 && self.sigma_upper > 0.0) {
            return Err(Error::invalid_parameter(format!(
                "sigma pair must be positive, got [{}, {}]",
                self.sigma_lower, self.sigma_upper
            )));
        }
        if self.sigma_lower > self.sigma_upper {
            return Err(Error::invalid_parameter(format!(
                "sigma_lower {} exceeds sigma_upper {}",
                self.sigma_lower, self.sigma_upper
            )));
        }
        if !(0.0..=1.0).contains(&self.height) {
            return Err(Error::invalid_parameter(format!(
                "height {} outside [0, 1]",
                self.height
            )));
        }
        if !(0.0..=1.0).contains(&self.delta_lower) || !(0.0..=1.0).contains(&self.delta_upper) {
            return Err(Error::invalid_parameter(
                "delta parameters must lie in [0, 1]".to_string(),
            ));
        }
        if self.delta_lower > self.delta_upper {
            return Err(Error::invalid_parameter(format!(
                "delta_lower {} exceeds delta_upper {}; planes would cross",
                self.delta_lower, self.delta_upper
            )));
        }
        Ok(())
    }
}

/// The alpha levels a model evaluates its planes at.
///
/// General type-2 grids hold `k + 1` levels: the floor level 0.01 and
/// the uniform levels `1/k, 2/k, ..., 1`. Interval type-2 models use a
/// single plane of weight 1.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaPlaneGrid {
    levels: Vec<f64>,
}

impl AlphaPlaneGrid {
    /// Grid for a general type-2 model with `k + 1` planes.
    pub fn gt2(k: usize) -> Result<Self> {
        if k < 1 {
            return Err(Error::config(
                "general type-2 grids need k >= 1 (at least two planes)".to_string(),
            ));
        }
        let mut levels = vec![ALPHA_FLOOR];
        for i in 1..=k {
            levels.push(i as f64 / k as f64);
        }
        if levels[1] <= ALPHA_FLOOR {
            return Err(Error::config(format!(
                "k = {k} packs planes below the {ALPHA_FLOOR} floor"
            )));
        }
        Ok(AlphaPlaneGrid { levels })
    }

    /// Single plane of weight 1 (interval type-2 behavior).
    pub fn single() -> Self {
        AlphaPlaneGrid { levels: vec![1.0] }
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// Sum of the plane weights (the aggregation denominator). The
    /// floor plane contributes its literal 0.01.
    pub fn weight_sum(&self) -> f64 {
        self.levels.iter().sum()
    }

    /// Per-plane cut scale `sqrt(ln a / ln ALPHA_FLOOR)`, i.e. the
    /// fraction of the floor-plane spread reached at each level. 1 at
    /// the floor, 0 at alpha = 1.
    pub fn secondary_cut_scales(&self) -> Vec<f64> {
        self.levels
            .iter()
            .map(|&a| (a.ln() / ALPHA_FLOOR.ln()).sqrt())
            .collect()
    }
}

/// Scaled Gaussian primary membership: `exp(-(x - c)^2 / (2 M s^2))`.
///
/// Dividing the exponent by the input dimension `M` keeps rule firings
/// (products over M dimensions) from collapsing toward zero as
/// dimensionality grows; it equals the unscaled Gaussian raised to
/// `1/M`.
pub fn eval_pmf_scaled(x: f64, center: f64, sigma: f64, input_dim: usize) -> Result<f64> {
    if sigma <= 0.0 {
        return Err(Error::invalid_parameter(format!(
            "pmf sigma must be positive, got {sigma}"
        )));
    }
    if input_dim < 1 {
        return Err(Error::invalid_parameter(
            "input dimension must be at least 1".to_string(),
        ));
    }
    Ok(pmf_scaled_unchecked(x, center, sigma, input_dim))
}

/// Same formula with validation hoisted to the caller; the hot path
/// for constrained parameters whose sigma is positive by construction.
#[inline]
pub(crate) fn pmf_scaled_unchecked(x: f64, center: f64, sigma: f64, input_dim: usize) -> f64 {
    let d = x - center;
    let den = (sigma * sigma) * (2.0 * input_dim as f64);
    (-(d * d / den)).exp()
}

/// Lower/upper membership of a plane at level `alpha` for the
/// two-sided Gaussian secondary centered at `gamma`.
///
/// `lmf = gamma - sqrt(-2 ln alpha) * sigma_l` and symmetrically for
/// the upper bound. Levels below [`ALPHA_FLOOR`] are rejected so the
/// floor convention stays visible at the API boundary.
pub fn zadeh_alpha_bounds(
    gamma: f64,
    sigma_left: f64,
    sigma_right: f64,
    alpha: f64,
) -> Result<(f64, f64)> {
    if alpha <= 0.0 {
        return Err(Error::invalid_parameter(format!(
            "alpha must be positive (cut scale undefined at {alpha})"
        )));
    }
    if alpha < ALPHA_FLOOR {
        return Err(Error::invalid_parameter(format!(
            "alpha {alpha} below the {ALPHA_FLOOR} floor"
        )));
    }
    if alpha > 1.0 {
        return Err(Error::invalid_parameter(format!(
            "alpha {alpha} above 1"
        )));
    }
    if sigma_left < 0.0 || sigma_right < 0.0 {
        return Err(Error::invalid_parameter(
            "secondary sigmas must be non-negative".to_string(),
        ));
    }
    let cut = (-2.0 * alpha.ln()).sqrt();
    Ok((gamma - cut * sigma_left, gamma + cut * sigma_right))
}

/// Two-sided Gaussian secondary membership grade of `u` at primary
/// grade `gamma`. A zero sigma on a side denotes a point mass: grade 1
/// exactly at `gamma`, 0 elsewhere on that side.
pub fn eval_smf(u: f64, gamma: f64, sigma_left: f64, sigma_right: f64) -> Result<f64> {
    if sigma_left < 0.0 || sigma_right < 0.0 {
        return Err(Error::invalid_parameter(
            "secondary sigmas must be non-negative".to_string(),
        ));
    }
    let d = u - gamma;
    if d == 0.0 {
        return Ok(1.0);
    }
    let sigma = if d < 0.0 { sigma_left } else { sigma_right };
    if sigma == 0.0 {
        return Ok(0.0);
    }
    Ok((-(d * d) / (2.0 * sigma * sigma)).exp())
}

/// Base-plane (primary) bounds for the interval-Gaussian family. The
/// same `sqrt(M)` exponent scaling as the scaled Gaussian primary is
/// applied so accuracy comparisons across families isolate the
/// representation, not the scaling.
pub fn mj_pmf_bounds(x: f64, dim: &MjAntecedentDim, input_dim: usize) -> Result<(f64, f64)> {
    dim.validate()?;
    if input_dim < 1 {
        return Err(Error::invalid_parameter(
            "input dimension must be at least 1".to_string(),
        ));
    }
    let upper = pmf_scaled_unchecked(x, dim.center, dim.sigma_upper, input_dim);
    let lower = dim.height * pmf_scaled_unchecked(x, dim.center, dim.sigma_lower, input_dim);
    Ok((lower, upper))
}

/// Plane bounds at level `alpha` interpolated from the base-plane pair
/// `(lmf0, umf0)`.
///
/// `lmf = lmf0 + alpha (umf0 - lmf0) delta_lower`,
/// `umf = umf0 - alpha (umf0 - lmf0) (1 - delta_upper)`.
///
/// Total in its arguments; `delta_lower <= delta_upper` is what
/// guarantees `lmf <= umf` up to alpha = 1 (callers constrain, this
/// function computes).
pub fn mj_alpha_bounds(
    lmf0: f64,
    umf0: f64,
    alpha: f64,
    delta_lower: f64,
    delta_upper: f64,
) -> (f64, f64) {
    let span = umf0 - lmf0;
    let scaled = span * alpha;
    let lmf = lmf0 + scaled * delta_lower;
    let umf = umf0 - scaled * (1.0 - delta_upper);
    (lmf, umf)
}

/// Plane bounds for the two-sided Gaussian secondary expressed through
/// the learned spread ratios rather than materialized sigmas.
///
/// With `sigma_l = gamma * r_l / spread` the cut at scale `s` becomes
/// `gamma (1 - r_l s)`, which stays in `[0, gamma]` for every input;
/// symmetrically the upper bound stays in `[gamma, 1]`.
#[inline]
pub(crate) fn zadeh_plane_bounds_from_ratios(
    gamma: f64,
    ratio_left: f64,
    ratio_right: f64,
    cut_scale: f64,
) -> (f64, f64) {
    let lmf = gamma * (1.0 + ratio_left * -cut_scale);
    let umf = gamma + (1.0 - gamma) * (ratio_right * cut_scale);
    (lmf, umf)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn pmf_peaks_at_center() {
        assert_eq!(eval_pmf_scaled(2.5, 2.5, 0.7, 3).unwrap(), 1.0);
    }

    #[test]
    fn pmf_analytic_values() {
        close(eval_pmf_scaled(1.0, 0.0, 1.0, 1).unwrap(), (-0.5f64).exp(), 1e-15);
        close(eval_pmf_scaled(1.0, 0.0, 1.0, 4).unwrap(), (-0.125f64).exp(), 1e-15);
        close(eval_pmf_scaled(1.0, 0.0, 1.0, 4).unwrap(), 0.88250, 1e-5);
    }

    #[test]
    fn pmf_rejects_bad_sigma() {
        assert!(eval_pmf_scaled(0.0, 0.0, 0.0, 1).is_err());
        assert!(eval_pmf_scaled(0.0, 0.0, -1.0, 1).is_err());
    }

    #[test]
    fn pmf_scaling_is_mth_root() {
        for &(x, c, s, m) in &[(0.3, -0.2, 0.8, 5usize), (2.0, 1.0, 1.4, 11), (-1.0, 0.5, 0.3, 2)] {
            let scaled = eval_pmf_scaled(x, c, s, m).unwrap();
            let base = eval_pmf_scaled(x, c, s, 1).unwrap();
            close(scaled, base.powf(1.0 / m as f64), 1e-12);
        }
    }

    #[test]
    fn zadeh_bounds_at_alpha_one_collapse() {
        let (l, u) = zadeh_alpha_bounds(0.7, 0.1, 0.05, 1.0).unwrap();
        assert_eq!(l, 0.7);
        assert_eq!(u, 0.7);
    }

    #[test]
    fn zadeh_bounds_at_floor() {
        let (l, u) = zadeh_alpha_bounds(0.6, 0.1, 0.05, ALPHA_FLOOR).unwrap();
        close(l, 0.29652, 1e-5);
        close(u, 0.75174, 1e-5);
        close(alpha_floor_spread(), 3.03485, 1e-5);
    }

    #[test]
    fn zadeh_bounds_degenerate_sigmas() {
        for alpha in [0.01, 0.25, 1.0] {
            let (l, u) = zadeh_alpha_bounds(0.5, 0.0, 0.0, alpha).unwrap();
            assert_eq!((l, u), (0.5, 0.5));
        }
    }

    #[test]
    fn zadeh_bounds_reject_bad_alpha() {
        assert!(zadeh_alpha_bounds(0.5, 0.1, 0.1, 0.0).is_err());
        assert!(zadeh_alpha_bounds(0.5, 0.1, 0.1, -0.2).is_err());
        assert!(zadeh_alpha_bounds(0.5, 0.1, 0.1, 0.009).is_err());
        assert!(zadeh_alpha_bounds(0.5, 0.1, 0.1, 1.1).is_err());
    }

    #[test]
    fn smf_center_grade_is_one() {
        assert_eq!(eval_smf(0.42, 0.42, 0.1, 0.2).unwrap(), 1.0);
        // point-mass convention at zero sigma
        assert_eq!(eval_smf(0.42, 0.42, 0.0, 0.0).unwrap(), 1.0);
        assert_eq!(eval_smf(0.41, 0.42, 0.0, 0.1).unwrap(), 0.0);
    }

    #[test]
    fn smf_alpha_cut_round_trip() {
        let (gamma, sl, sr) = (0.6, 0.1, 0.07);
        for alpha in [0.01, 0.05, 0.5, 0.9, 1.0] {
            let (l, u) = zadeh_alpha_bounds(gamma, sl, sr, alpha).unwrap();
            close(eval_smf(l, gamma, sl, sr).unwrap(), alpha, 1e-12);
            close(eval_smf(u, gamma, sl, sr).unwrap(), alpha, 1e-12);
        }
    }

    #[test]
    fn smf_floor_value() {
        close(eval_smf(0.29652, 0.6, 0.1, 0.1).unwrap(), 0.01, 1e-5);
        let half = 0.6 - 0.1 * (-2.0 * 0.5f64.ln()).sqrt();
        close(eval_smf(half, 0.6, 0.1, 0.1).unwrap(), 0.5, 1e-12);
    }

    fn mj_dim() -> MjAntecedentDim {
        MjAntecedentDim {
            center: 0.0,
            sigma_lower: 0.5,
            sigma_upper: 1.0,
            height: 0.8,
            delta_lower: 0.4,
            delta_upper: 0.6,
        }
    }

    #[test]
    fn mj_pmf_bounds_at_center() {
        let mut dim = mj_dim();
        dim.height = 0.5;
        let (l, u) = mj_pmf_bounds(0.0, &dim, 1).unwrap();
        assert_eq!((l, u), (0.5, 1.0));

        dim.height = 1.0;
        dim.sigma_lower = dim.sigma_upper;
        let (l, u) = mj_pmf_bounds(0.0, &dim, 1).unwrap();
        assert_eq!((l, u), (1.0, 1.0));
    }

    #[test]
    fn mj_pmf_bounds_analytic() {
        let (l, u) = mj_pmf_bounds(1.0, &mj_dim(), 1).unwrap();
        close(l, 0.10827, 1e-5);
        close(u, 0.60653, 1e-5);
    }

    #[test]
    fn mj_pmf_bounds_reject_violations() {
        let mut dim = mj_dim();
        dim.sigma_lower = 2.0;
        assert!(mj_pmf_bounds(0.0, &dim, 1).is_err());
        let mut dim = mj_dim();
        dim.height = 1.5;
        assert!(mj_pmf_bounds(0.0, &dim, 1).is_err());
        let mut dim = mj_dim();
        dim.delta_lower = 0.9;
        assert!(mj_pmf_bounds(0.0, &dim, 1).is_err());
    }

    #[test]
    fn mj_alpha_bounds_base_and_apex() {
        assert_eq!(mj_alpha_bounds(0.2, 0.8, 0.0, 0.4, 0.6), (0.2, 0.8));
        let (l, u) = mj_alpha_bounds(0.2, 0.8, 1.0, 0.5, 0.5);
        close(l, 0.5, 1e-15);
        close(u, 0.5, 1e-15);
    }

    #[test]
    fn mj_alpha_bounds_midway() {
        // the interpolation puts delta_lower on the lower leg and
        // (1 - delta_upper) on the upper leg
        let (l, u) = mj_alpha_bounds(0.2, 0.8, 0.5, 0.6, 0.4);
        close(l, 0.38, 1e-12);
        close(u, 0.62, 1e-12);
    }

    #[test]
    fn mj_nesting_holds_with_ordered_deltas() {
        let (dl, du) = (0.3, 0.7);
        let (l0, u0) = (0.1, 0.9);
        let mut prev = (l0, u0);
        for i in 0..=20 {
            let alpha = i as f64 / 20.0;
            let (l, u) = mj_alpha_bounds(l0, u0, alpha, dl, du);
            assert!(l <= u + 1e-12, "crossing at alpha {alpha}: {l} > {u}");
            assert!(l + 1e-12 >= prev.0 && u <= prev.1 + 1e-12);
            prev = (l, u);
        }
    }

    #[test]
    fn gt2_grid_levels() {
        let g = AlphaPlaneGrid::gt2(2).unwrap();
        assert_eq!(g.levels(), &[0.01, 0.5, 1.0]);
        let g = AlphaPlaneGrid::gt2(1).unwrap();
        assert_eq!(g.levels(), &[0.01, 1.0]);
        assert!(AlphaPlaneGrid::gt2(0).is_err());
        assert!(AlphaPlaneGrid::gt2(100).is_err());
        assert_eq!(AlphaPlaneGrid::single().levels(), &[1.0]);
    }

    #[test]
    fn grid_cut_scales_hit_endpoints() {
        let g = AlphaPlaneGrid::gt2(2).unwrap();
        let s = g.secondary_cut_scales();
        assert_eq!(s[0], 1.0);
        close(s[2].abs(), 0.0, 0.0);
    }

    #[test]
    fn ratio_bounds_stay_bracketed() {
        for &gamma in &[0.0, 0.2, 0.5, 0.9, 1.0] {
            for &s in &[0.0, 0.4, 1.0] {
                let (l, u) = zadeh_plane_bounds_from_ratios(gamma, 0.8, 0.6, s);
                assert!(0.0 <= l + 1e-15 && l <= gamma + 1e-15);
                assert!(gamma <= u + 1e-15 && u <= 1.0 + 1e-15);
            }
        }
    }
}
