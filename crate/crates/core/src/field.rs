//! Dense 2-D motion fields.

use crate::{Error, Result};

/// Components with magnitude above this mark a cell as invalid (unknown flow).
pub const UNKNOWN_FLOW_THRESHOLD: f64 = 1e9;
/// Value written into both components of an invalid cell.
pub const UNKNOWN_FLOW: f64 = 1e10;

/// Row-major grid of `(u, v)` displacements from the reference to the target
/// frame, stored as 64-bit floats; `.flo` files hold them as 32-bit floats.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    width: usize,
    height: usize,
    data: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowStats {
    pub max_magnitude: f64,
    pub mean_magnitude: f64,
    pub valid_pixel_count: usize,
}

impl FlowField {
    pub fn zeros(width: usize, height: usize) -> Result<Self> {
        Self::constant(width, height, 0.0, 0.0)
    }

    pub fn constant(width: usize, height: usize, u: f64, v: f64) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidValue(format!(
                "flow dimensions must be positive, got {width}x{height}"
            )));
        }
        Ok(Self {
            width,
            height,
            data: vec![[u, v]; width * height],
        })
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<[f64; 2]>) -> Result<Self> {
        if width == 0 || height == 0 || data.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "{} vectors for a {width}x{height} field",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[[f64; 2]] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> [f64; 2] {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, uv: [f64; 2]) {
        self.data[y * self.width + x] = uv;
    }

    pub fn set_invalid(&mut self, x: usize, y: usize) {
        self.set(x, y, [UNKNOWN_FLOW, UNKNOWN_FLOW]);
    }

    pub fn same_dims(&self, other: &FlowField) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// No NaN or infinite components; sentinel cells are finite.
    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|[u, v]| u.is_finite() && v.is_finite())
    }

    /// Every component rounded to the nearest f32, as stored in `.flo`.
    pub fn to_f32_precision(&self) -> FlowField {
        Self {
            data: self
                .data
                .iter()
                .map(|&[u, v]| [u as f32 as f64, v as f32 as f64])
                .collect(),
            ..*self
        }
    }

    pub fn stats(&self) -> FlowStats {
        let (mut max, mut sum, mut n) = (0f64, 0f64, 0usize);
        for &uv in &self.data {
            if !is_valid(uv) {
                continue;
            }
            let m = magnitude(uv);
            max = max.max(m);
            sum += m;
            n += 1;
        }
        FlowStats {
            max_magnitude: max,
            mean_magnitude: if n == 0 { 0.0 } else { sum / n as f64 },
            valid_pixel_count: n,
        }
    }
}

/// False for sentinel cells and NaNs.
#[inline]
pub fn is_valid([u, v]: [f64; 2]) -> bool {
    u.abs() <= UNKNOWN_FLOW_THRESHOLD && v.abs() <= UNKNOWN_FLOW_THRESHOLD
}

#[inline]
pub fn magnitude([u, v]: [f64; 2]) -> f64 {
    u.hypot(v)
}
