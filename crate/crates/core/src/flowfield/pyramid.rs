use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::field::is_valid;
use crate::{Error, FlowField, Result};

/// Coarse pyramid levels that accept the translation field. Level 1 is full
/// resolution; level `s` is downscaled by `2^(s-1)`.
pub const INJECTION_LEVELS: [u32; 3] = [4, 5, 6];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PyramidInjectionConfig {
    /// Weight per pyramid level; keys must come from [`INJECTION_LEVELS`].
    pub alphas: BTreeMap<u32, f64>,
    /// Average only non-zero cells when downsampling.
    pub mask_aware: bool,
}

impl Default for PyramidInjectionConfig {
    fn default() -> Self {
        Self {
            alphas: INJECTION_LEVELS.iter().map(|&s| (s, 1.0)).collect(),
            mask_aware: false,
        }
    }
}

impl PyramidInjectionConfig {
    pub fn validate(&self) -> Result<()> {
        for (&level, &alpha) in &self.alphas {
            if !INJECTION_LEVELS.contains(&level) {
                return Err(Error::UnsupportedLevel(level));
            }
            if !alpha.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "alpha for level {level} is not finite"
                )));
            }
        }
        Ok(())
    }
}

/// Downsamples to pyramid `level`: each step averages 2×2 blocks and halves
/// the vectors. Invalid cells are skipped; a block with no usable cell
/// becomes zero (or invalid if all four were invalid).
pub fn downsample_flow(field: &FlowField, level: u32) -> Result<FlowField> {
    downsample_flow_with(field, level, false)
}

pub fn downsample_flow_with(field: &FlowField, level: u32, mask_aware: bool) -> Result<FlowField> {
    if level == 0 {
        return Err(Error::InvalidValue("pyramid levels start at 1".into()));
    }
    let factor = 1usize.checked_shl(level - 1).ok_or(Error::NotDivisible {
        width: field.width(),
        height: field.height(),
        factor: usize::MAX,
    })?;
    if !field.width().is_multiple_of(factor) || !field.height().is_multiple_of(factor) {
        return Err(Error::NotDivisible {
            width: field.width(),
            height: field.height(),
            factor,
        });
    }
    let mut cur = field.clone();
    for _ in 1..level {
        cur = halve(&cur, mask_aware);
    }
    Ok(cur)
}

fn pair_sum(v: &[f64]) -> f64 {
    // pairwise order keeps the sum of four equal values exact
    match v {
        [a, b, c, d] => (a + b) + (c + d),
        _ => v.iter().sum(),
    }
}

fn halve(field: &FlowField, mask_aware: bool) -> FlowField {
    let (w, h) = (field.width() / 2, field.height() / 2);
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let (mut us, mut vs) = (Vec::with_capacity(4), Vec::with_capacity(4));
            let mut invalid = 0;
            for (dx, dy) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                let uv = field.get(2 * x + dx, 2 * y + dy);
                if !is_valid(uv) {
                    invalid += 1;
                    continue;
                }
                if mask_aware && uv == [0.0, 0.0] {
                    continue;
                }
                us.push(uv[0]);
                vs.push(uv[1]);
            }
            let n = us.len() as f64;
            let cell = if invalid == 4 {
                [crate::field::UNKNOWN_FLOW; 2]
            } else if us.is_empty() {
                [0.0, 0.0]
            } else {
                [pair_sum(&us) / n * 0.5, pair_sum(&vs) / n * 0.5]
            };
            out.push(cell);
        }
    }
    FlowField::from_vec(w, h, out).expect("halved shape is consistent")
}

/// Adds `alpha_s * downsample(dt, s)` to each configured level of the base
/// pyramid. Unconfigured levels and zero weights pass through unchanged.
pub fn inject_translation_field(
    base: &BTreeMap<u32, FlowField>,
    dt: &FlowField,
    cfg: &PyramidInjectionConfig,
) -> Result<BTreeMap<u32, FlowField>> {
    cfg.validate()?;
    let mut out = base.clone();
    for (&level, &alpha) in &cfg.alphas {
        let target = out.get_mut(&level).ok_or(Error::MissingLevel(level))?;
        if alpha == 0.0 {
            continue;
        }
        let small = downsample_flow_with(dt, level, cfg.mask_aware)?;
        if !small.same_dims(target) {
            return Err(Error::DimensionMismatch(format!(
                "level {level}: base is {}x{}, downsampled field is {}x{}",
                target.width(),
                target.height(),
                small.width(),
                small.height()
            )));
        }
        for y in 0..small.height() {
            for x in 0..small.width() {
                let b = target.get(x, y);
                let d = small.get(x, y);
                if !is_valid(b) || !is_valid(d) {
                    continue;
                }
                target.set(x, y, [b[0] + alpha * d[0], b[1] + alpha * d[1]]);
            }
        }
    }
    Ok(out)
}
