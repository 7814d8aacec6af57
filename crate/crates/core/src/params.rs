//! Learnable-parameter layout, the unconstrained-to-constrained
//! mappings that let a plain gradient optimizer respect fuzzy-set
//! constraints, deterministic initialization, and parameter counting.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::kmeans::kmeans;
use crate::membership::{
    alpha_floor_spread, inverse_sigmoid, inverse_softplus, pmf_scaled_unchecked, stable_sigmoid,
    stable_softplus, AlphaPlaneGrid, ZadehAntecedentDim,
};
use crate::seed::{stream_rng, STREAM_INIT};

/// Model family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Two-sided Gaussian secondary over a type-1 Gaussian primary.
    ZGt2,
    /// Delta-parameterized secondary over an interval Gaussian primary.
    MjGt2,
    /// Interval type-2, height-only footprint (shared sigma).
    It2H,
    /// Interval type-2, height plus split sigmas.
    It2Hs,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::ZGt2, Variant::MjGt2, Variant::It2H, Variant::It2Hs];

    pub fn name(&self) -> &'static str {
        match self {
            Variant::ZGt2 => "z-gt2",
            Variant::MjGt2 => "mj-gt2",
            Variant::It2H => "it2-h",
            Variant::It2Hs => "it2-hs",
        }
    }

    pub fn parse(s: &str) -> Result<Variant> {
        match s {
            "z-gt2" => Ok(Variant::ZGt2),
            "mj-gt2" => Ok(Variant::MjGt2),
            "it2-h" => Ok(Variant::It2H),
            "it2-hs" => Ok(Variant::It2Hs),
            other => Err(Error::config(format!(
                "unknown variant `{other}` (expected z-gt2, mj-gt2, it2-h, it2-hs)"
            ))),
        }
    }

    /// Interval type-2 models run a single plane of weight 1.
    pub fn is_single_plane(&self) -> bool {
        matches!(self, Variant::It2H | Variant::It2Hs)
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Model shape independent of the dataset (the input dimension is
/// resolved once the data has been preprocessed).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub variant: Variant,
    pub rules: usize,
    /// Plane-count parameter: a general type-2 model evaluates `k + 1`
    /// planes. Must be 0 for interval type-2 variants.
    pub k: usize,
}

impl ModelSpec {
    pub fn with_inputs(&self, inputs: usize) -> Result<ModelConfig> {
        ModelConfig::new(self.variant, self.rules, inputs, self.k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub variant: Variant,
    pub rules: usize,
    pub inputs: usize,
    pub k: usize,
}

impl ModelConfig {
    pub fn new(variant: Variant, rules: usize, inputs: usize, k: usize) -> Result<Self> {
        if rules < 1 {
            return Err(Error::config("rule count must be at least 1".to_string()));
        }
        if inputs < 1 {
            return Err(Error::config("input dimension must be at least 1".to_string()));
        }
        if variant.is_single_plane() {
            if k != 0 {
                return Err(Error::config(format!(
                    "{variant} is single-plane; k must be 0 (got {k})"
                )));
            }
        } else if k < 1 {
            return Err(Error::config(format!(
                "{variant} needs k >= 1 (at least two planes)"
            )));
        }
        // grid construction re-checks the floor constraint
        if !variant.is_single_plane() {
            AlphaPlaneGrid::gt2(k)?;
        }
        Ok(ModelConfig { variant, rules, inputs, k })
    }

    pub fn plane_count(&self) -> usize {
        if self.variant.is_single_plane() {
            1
        } else {
            self.k + 1
        }
    }

    pub fn alpha_grid(&self) -> AlphaPlaneGrid {
        if self.variant.is_single_plane() {
            AlphaPlaneGrid::single()
        } else {
            AlphaPlaneGrid::gt2(self.k).expect("validated at construction")
        }
    }

    pub fn spec(&self) -> ModelSpec {
        ModelSpec { variant: self.variant, rules: self.rules, k: self.k }
    }
}

/// Named slice of the flat unconstrained parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamGroup {
    Centers,
    SigmaHat,
    SmfLeftHat,
    SmfRightHat,
    HeightHat,
    SigmaRatioHat,
    DeltaLowerHat,
    DeltaUpperHat,
    Coeffs,
    Intercepts,
}

impl ParamGroup {
    pub fn name(&self) -> &'static str {
        match self {
            ParamGroup::Centers => "centers",
            ParamGroup::SigmaHat => "sigma_hat",
            ParamGroup::SmfLeftHat => "smf_left_hat",
            ParamGroup::SmfRightHat => "smf_right_hat",
            ParamGroup::HeightHat => "height_hat",
            ParamGroup::SigmaRatioHat => "sigma_ratio_hat",
            ParamGroup::DeltaLowerHat => "delta_lower_hat",
            ParamGroup::DeltaUpperHat => "delta_upper_hat",
            ParamGroup::Coeffs => "coeffs",
            ParamGroup::Intercepts => "intercepts",
        }
    }

    pub fn from_name(name: &str) -> Option<ParamGroup> {
        Some(match name {
            "centers" => ParamGroup::Centers,
            "sigma_hat" => ParamGroup::SigmaHat,
            "smf_left_hat" => ParamGroup::SmfLeftHat,
            "smf_right_hat" => ParamGroup::SmfRightHat,
            "height_hat" => ParamGroup::HeightHat,
            "sigma_ratio_hat" => ParamGroup::SigmaRatioHat,
            "delta_lower_hat" => ParamGroup::DeltaLowerHat,
            "delta_upper_hat" => ParamGroup::DeltaUpperHat,
            "coeffs" => ParamGroup::Coeffs,
            "intercepts" => ParamGroup::Intercepts,
            _ => return None,
        })
    }
}

/// Offsets of every parameter group inside the flat vector for one
/// variant and shape.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    entries: Vec<(ParamGroup, usize, usize)>,
    total: usize,
}

impl Layout {
    pub fn new(variant: Variant, rules: usize, inputs: usize) -> Layout {
        let pm = rules * inputs;
        let m = inputs;
        let groups: Vec<(ParamGroup, usize)> = match variant {
            Variant::ZGt2 => vec![
                (ParamGroup::Centers, pm),
                (ParamGroup::SigmaHat, pm),
                (ParamGroup::SmfLeftHat, m),
                (ParamGroup::SmfRightHat, m),
                (ParamGroup::Coeffs, pm),
                (ParamGroup::Intercepts, rules),
            ],
            Variant::MjGt2 => vec![
                (ParamGroup::Centers, pm),
                (ParamGroup::SigmaHat, pm),
                (ParamGroup::HeightHat, pm),
                (ParamGroup::DeltaLowerHat, m),
                (ParamGroup::DeltaUpperHat, m),
                (ParamGroup::Coeffs, pm),
                (ParamGroup::Intercepts, rules),
            ],
            Variant::It2H => vec![
                (ParamGroup::Centers, pm),
                (ParamGroup::SigmaHat, pm),
                (ParamGroup::HeightHat, pm),
                (ParamGroup::Coeffs, pm),
                (ParamGroup::Intercepts, rules),
            ],
            Variant::It2Hs => vec![
                (ParamGroup::Centers, pm),
                (ParamGroup::SigmaHat, pm),
                (ParamGroup::SigmaRatioHat, pm),
                (ParamGroup::HeightHat, pm),
                (ParamGroup::Coeffs, pm),
                (ParamGroup::Intercepts, rules),
            ],
        };
        let mut entries = Vec::with_capacity(groups.len());
        let mut offset = 0;
        for (group, len) in groups {
            entries.push((group, offset, len));
            offset += len;
        }
        Layout { entries, total: offset }
    }

    pub fn total_len(&self) -> usize {
        self.total
    }

    pub fn entries(&self) -> &[(ParamGroup, usize, usize)] {
        &self.entries
    }

    pub fn offset(&self, group: ParamGroup) -> Option<usize> {
        self.entries.iter().find(|(g, _, _)| *g == group).map(|&(_, o, _)| o)
    }

    pub fn range(&self, group: ParamGroup) -> Option<std::ops::Range<usize>> {
        self.entries
            .iter()
            .find(|(g, _, _)| *g == group)
            .map(|&(_, o, l)| o..o + l)
    }

    /// Group that owns flat index `idx`.
    pub fn group_at(&self, idx: usize) -> Option<ParamGroup> {
        self.entries
            .iter()
            .find(|&&(_, o, l)| idx >= o && idx < o + l)
            .map(|&(g, _, _)| g)
    }
}

/// Number of learnable parameters for a variant and shape.
pub fn count_params(variant: Variant, rules: usize, inputs: usize) -> usize {
    let (p, m) = (rules, inputs);
    let consequents = p * (m + 1);
    match variant {
        Variant::ZGt2 => (2 * p + 2) * m + consequents,
        Variant::MjGt2 => (3 * p + 2) * m + consequents,
        Variant::It2H => 3 * p * m + consequents,
        Variant::It2Hs => 4 * p * m + consequents,
    }
}

/// Flat unconstrained optimizer variables plus the layout describing
/// them.
#[derive(Debug, Clone, PartialEq)]
pub struct RawParams {
    values: Vec<f64>,
    layout: Layout,
}

impl RawParams {
    pub fn new(values: Vec<f64>, layout: Layout) -> Result<Self> {
        if values.len() != layout.total_len() {
            return Err(Error::shape(format!(
                "raw vector has {} entries, layout expects {}",
                values.len(),
                layout.total_len()
            )));
        }
        Ok(RawParams { values, layout })
    }

    pub fn zeros(layout: Layout) -> Self {
        RawParams { values: vec![0.0; layout.total_len()], layout }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn group(&self, group: ParamGroup) -> &[f64] {
        let range = self.layout.range(group).expect("group present in layout");
        &self.values[range]
    }

    pub fn group_mut(&mut self, group: ParamGroup) -> &mut [f64] {
        let range = self.layout.range(group).expect("group present in layout");
        &mut self.values[range]
    }
}

/// TSK consequent parameters (affine output per rule).
#[derive(Debug, Clone, PartialEq)]
pub struct Consequents {
    /// `rules x inputs` slope matrix.
    pub coeffs: Vec<Vec<f64>>,
    pub intercepts: Vec<f64>,
}

/// Constrained parameters of the two-sided-Gaussian-secondary family.
///
/// The secondary spreads are stored as ratios in (0, 1); the
/// materialized left spread at a primary grade `g` is
/// `g * ratio / alpha_floor_spread()`, which pins every plane bound
/// into `[0, 1]` for every input.
#[derive(Debug, Clone, PartialEq)]
pub struct ZadehParams {
    pub centers: Vec<Vec<f64>>,
    pub sigmas: Vec<Vec<f64>>,
    pub smf_left_ratio: Vec<f64>,
    pub smf_right_ratio: Vec<f64>,
    pub consequents: Consequents,
}

impl ZadehParams {
    pub fn input_dim(&self) -> usize {
        self.centers[0].len()
    }

    /// Materialized secondary spreads for dimension `m` at primary
    /// grade `gamma`.
    pub fn effective_smf_sigmas(&self, gamma: f64, m: usize) -> (f64, f64) {
        let spread = alpha_floor_spread();
        (
            gamma * self.smf_left_ratio[m] / spread,
            (1.0 - gamma) * self.smf_right_ratio[m] / spread,
        )
    }

    /// Antecedent of rule `p`, dimension `m`, materialized at input
    /// `x` (the secondary spreads depend on the primary grade there).
    pub fn antecedent_at(&self, p: usize, m: usize, x: f64) -> (f64, ZadehAntecedentDim) {
        let gamma = pmf_scaled_unchecked(x, self.centers[p][m], self.sigmas[p][m], self.input_dim());
        let (sl, sr) = self.effective_smf_sigmas(gamma, m);
        (
            gamma,
            ZadehAntecedentDim {
                center: self.centers[p][m],
                pmf_sigma: self.sigmas[p][m],
                smf_sigma_left: sl,
                smf_sigma_right: sr,
            },
        )
    }
}

/// Constrained parameters of the delta-secondary family. The primary
/// is an interval Gaussian with a shared sigma whose footprint comes
/// from the height.
#[derive(Debug, Clone, PartialEq)]
pub struct MjParams {
    pub centers: Vec<Vec<f64>>,
    pub sigmas: Vec<Vec<f64>>,
    pub heights: Vec<Vec<f64>>,
    pub delta_lower: Vec<f64>,
    pub delta_upper: Vec<f64>,
    pub consequents: Consequents,
}

/// Constrained parameters of the interval type-2 families.
#[derive(Debug, Clone, PartialEq)]
pub struct It2Params {
    pub centers: Vec<Vec<f64>>,
    pub sigma_lower: Vec<Vec<f64>>,
    pub sigma_upper: Vec<Vec<f64>>,
    pub heights: Vec<Vec<f64>>,
    pub consequents: Consequents,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConstrainedParams {
    Zadeh(ZadehParams),
    Mj(MjParams),
    It2(It2Params),
}

impl ConstrainedParams {
    pub fn consequents(&self) -> &Consequents {
        match self {
            ConstrainedParams::Zadeh(p) => &p.consequents,
            ConstrainedParams::Mj(p) => &p.consequents,
            ConstrainedParams::It2(p) => &p.consequents,
        }
    }
}

fn unflatten(slice: &[f64], rows: usize, cols: usize) -> Vec<Vec<f64>> {
    (0..rows).map(|r| slice[r * cols..(r + 1) * cols].to_vec()).collect()
}

fn map_matrix(slice: &[f64], rows: usize, cols: usize, f: impl Fn(f64) -> f64) -> Vec<Vec<f64>> {
    (0..rows)
        .map(|r| slice[r * cols..(r + 1) * cols].iter().map(|&v| f(v)).collect())
        .collect()
}

/// Maps the unconstrained vector onto parameters that satisfy every
/// membership invariant. Total: no raw value can produce an invalid
/// model.
pub fn constrain(raw: &RawParams, config: &ModelConfig) -> Result<ConstrainedParams> {
    let expected = Layout::new(config.variant, config.rules, config.inputs);
    if *raw.layout() != expected {
        return Err(Error::shape(format!(
            "raw layout does not match config (variant {}, P {}, M {})",
            config.variant, config.rules, config.inputs
        )));
    }
    let (p, m) = (config.rules, config.inputs);
    let consequents = Consequents {
        coeffs: unflatten(raw.group(ParamGroup::Coeffs), p, m),
        intercepts: raw.group(ParamGroup::Intercepts).to_vec(),
    };
    let centers = unflatten(raw.group(ParamGroup::Centers), p, m);
    let sigmas = map_matrix(raw.group(ParamGroup::SigmaHat), p, m, stable_softplus);

    Ok(match config.variant {
        Variant::ZGt2 => ConstrainedParams::Zadeh(ZadehParams {
            centers,
            sigmas,
            smf_left_ratio: raw
                .group(ParamGroup::SmfLeftHat)
                .iter()
                .map(|&v| stable_sigmoid(v))
                .collect(),
            smf_right_ratio: raw
                .group(ParamGroup::SmfRightHat)
                .iter()
                .map(|&v| stable_sigmoid(v))
                .collect(),
            consequents,
        }),
        Variant::MjGt2 => {
            let delta_lower: Vec<f64> = raw
                .group(ParamGroup::DeltaLowerHat)
                .iter()
                .map(|&v| stable_sigmoid(v))
                .collect();
            let delta_upper: Vec<f64> = raw
                .group(ParamGroup::DeltaUpperHat)
                .iter()
                .zip(&delta_lower)
                .map(|(&v, &dl)| dl + (1.0 - dl) * stable_sigmoid(v))
                .collect();
            ConstrainedParams::Mj(MjParams {
                centers,
                sigmas,
                heights: map_matrix(raw.group(ParamGroup::HeightHat), p, m, stable_sigmoid),
                delta_lower,
                delta_upper,
                consequents,
            })
        }
        Variant::It2H => ConstrainedParams::It2(It2Params {
            centers,
            sigma_lower: sigmas.clone(),
            sigma_upper: sigmas,
            heights: map_matrix(raw.group(ParamGroup::HeightHat), p, m, stable_sigmoid),
            consequents,
        }),
        Variant::It2Hs => {
            let sigma_upper = sigmas;
            let ratios = map_matrix(raw.group(ParamGroup::SigmaRatioHat), p, m, stable_sigmoid);
            let sigma_lower: Vec<Vec<f64>> = sigma_upper
                .iter()
                .zip(&ratios)
                .map(|(su, rr)| su.iter().zip(rr).map(|(&s, &r)| s * r).collect())
                .collect();
            ConstrainedParams::It2(It2Params {
                centers,
                sigma_lower,
                sigma_upper,
                heights: map_matrix(raw.group(ParamGroup::HeightHat), p, m, stable_sigmoid),
                consequents,
            })
        }
    })
}

/// Least-squares affine fit `y ~ X a + b` via the normal equations.
/// Falls back to the constant mean predictor on a singular system.
fn global_linear_fit(features: &[Vec<f64>], targets: &[f64]) -> (Vec<f64>, f64) {
    let n = features.len();
    let m = features[0].len();
    let dim = m + 1;
    let mut ata = vec![vec![0.0; dim]; dim];
    let mut aty = vec![0.0; dim];
    for (row, &y) in features.iter().zip(targets) {
        for i in 0..dim {
            let xi = if i < m { row[i] } else { 1.0 };
            aty[i] += xi * y;
            for j in i..dim {
                let xj = if j < m { row[j] } else { 1.0 };
                ata[i][j] += xi * xj;
            }
        }
    }
    for i in 0..dim {
        for j in 0..i {
            ata[i][j] = ata[j][i];
        }
    }

    match solve_symmetric(&mut ata, &mut aty) {
        Some(solution) => {
            let intercept = solution[m];
            (solution[..m].to_vec(), intercept)
        }
        None => {
            let mean = targets.iter().sum::<f64>() / n as f64;
            (vec![0.0; m], mean)
        }
    }
}

/// Gaussian elimination with partial pivoting; `None` on a (near)
/// singular matrix.
fn solve_symmetric(a: &mut [Vec<f64>], b: &mut [f64]) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let mut pivot = col;
        for row in col + 1..n {
            if a[row][col].abs() > a[pivot][col].abs() {
                pivot = row;
            }
        }
        if a[pivot][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    Some(x)
}

/// Deterministic parameter initialization: rule centers from seeded
/// k-means on the training inputs, unit primary sigma, narrow initial
/// secondary uncertainty, consequents from the global linear fit.
pub fn init_params(dataset: &Dataset, config: &ModelConfig, seed: u64) -> Result<RawParams> {
    let n = dataset.len();
    if config.rules > n {
        return Err(Error::config(format!(
            "rule count {} exceeds training size {}",
            config.rules, n
        )));
    }
    if dataset.input_dim() != config.inputs {
        return Err(Error::shape(format!(
            "dataset has {} inputs, config expects {}",
            dataset.input_dim(),
            config.inputs
        )));
    }

    let layout = Layout::new(config.variant, config.rules, config.inputs);
    let mut raw = RawParams::zeros(layout);
    let (p, m) = (config.rules, config.inputs);

    let mut rng = stream_rng(seed, STREAM_INIT);
    let centers = kmeans(&dataset.features, p, &mut rng);
    {
        let dst = raw.group_mut(ParamGroup::Centers);
        for (i, center) in centers.iter().enumerate() {
            dst[i * m..(i + 1) * m].copy_from_slice(center);
        }
    }

    raw.group_mut(ParamGroup::SigmaHat).fill(inverse_softplus(1.0));
    for group in [ParamGroup::SmfLeftHat, ParamGroup::SmfRightHat] {
        if raw.layout().range(group).is_some() {
            raw.group_mut(group).fill(inverse_sigmoid(0.1));
        }
    }
    if raw.layout().range(ParamGroup::HeightHat).is_some() {
        raw.group_mut(ParamGroup::HeightHat).fill(inverse_sigmoid(0.9));
    }
    if raw.layout().range(ParamGroup::SigmaRatioHat).is_some() {
        raw.group_mut(ParamGroup::SigmaRatioHat).fill(inverse_sigmoid(0.9));
    }
    // delta hats stay at zero

    let (slopes, intercept) = global_linear_fit(&dataset.features, &dataset.targets);
    {
        let dst = raw.group_mut(ParamGroup::Coeffs);
        for rule in 0..p {
            dst[rule * m..(rule + 1) * m].copy_from_slice(&slopes);
        }
    }
    raw.group_mut(ParamGroup::Intercepts).fill(intercept);

    Ok(raw)
}
