//! Middlebury color-wheel flow visualization: direction selects the hue on
//! a 55-entry wheel, magnitude relative to a norm selects saturation.

use std::path::Path;
use std::sync::OnceLock;

use image::RgbImage;

use crate::field::is_valid;
use crate::{Error, FlowField, Result};

const SEGMENTS: [usize; 6] = [15, 6, 4, 11, 13, 6];
pub const COLOR_WHEEL_SIZE: usize = 55;

fn color_wheel() -> &'static [[f64; 3]; COLOR_WHEEL_SIZE] {
    static WHEEL: OnceLock<[[f64; 3]; COLOR_WHEEL_SIZE]> = OnceLock::new();
    WHEEL.get_or_init(|| {
        let [ry, yg, gc, cb, bm, mr] = SEGMENTS;
        let ramp = |i: usize, n: usize| (255 * i / n) as f64;
        let mut wheel = [[0.0; 3]; COLOR_WHEEL_SIZE];
        let mut k = 0;
        for i in 0..ry {
            wheel[k] = [255.0, ramp(i, ry), 0.0];
            k += 1;
        }
        for i in 0..yg {
            wheel[k] = [255.0 - ramp(i, yg), 255.0, 0.0];
            k += 1;
        }
        for i in 0..gc {
            wheel[k] = [0.0, 255.0, ramp(i, gc)];
            k += 1;
        }
        for i in 0..cb {
            wheel[k] = [0.0, 255.0 - ramp(i, cb), 255.0];
            k += 1;
        }
        for i in 0..bm {
            wheel[k] = [ramp(i, bm), 0.0, 255.0];
            k += 1;
        }
        for i in 0..mr {
            wheel[k] = [255.0, 0.0, 255.0 - ramp(i, mr)];
            k += 1;
        }
        wheel
    })
}

/// Continuous wheel position in `[0, 54]` for a flow direction; angle 0
/// (pointing along +x) maps to 0.
pub fn wheel_position(u: f64, v: f64) -> f64 {
    let a = (-v).atan2(-u) / std::f64::consts::PI;
    (a + 1.0) / 2.0 * (COLOR_WHEEL_SIZE - 1) as f64
}

/// Color for a flow vector already divided by the normalizing magnitude.
pub fn flow_to_rgb(u: f64, v: f64) -> [u8; 3] {
    let wheel = color_wheel();
    let rad = u.hypot(v);
    let fk = wheel_position(u, v);
    let k0 = fk.floor() as usize;
    let k1 = if k0 + 1 == COLOR_WHEEL_SIZE {
        0
    } else {
        k0 + 1
    };
    let f = fk - k0 as f64;
    let mut px = [0u8; 3];
    for (c, out) in px.iter_mut().enumerate() {
        let col0 = wheel[k0][c] / 255.0;
        let col1 = wheel[k1][c] / 255.0;
        let mut col = (1.0 - f) * col0 + f * col1;
        if rad <= 1.0 {
            col = 1.0 - rad * (1.0 - col);
        } else {
            col *= 0.75;
        }
        *out = (255.0 * col).floor() as u8;
    }
    px
}

fn resolve_norm(fields: &[&FlowField], max_norm: Option<f64>) -> f64 {
    if let Some(n) = max_norm.filter(|n| *n > 0.0) {
        return n;
    }
    let max = fields
        .iter()
        .map(|f| f.stats().max_magnitude)
        .fold(0.0, f64::max);
    if max > 0.0 {
        max
    } else {
        1.0
    }
}

fn render_with_norm(field: &FlowField, norm: f64) -> RgbImage {
    let mut img = RgbImage::new(field.width() as u32, field.height() as u32);
    for (x, y, px) in img.enumerate_pixels_mut() {
        let uv = field.get(x as usize, y as usize);
        px.0 = if is_valid(uv) {
            flow_to_rgb(uv[0] / norm, uv[1] / norm)
        } else {
            [0, 0, 0]
        };
    }
    img
}

/// Renders a field. Without `max_norm` the field's largest valid magnitude
/// (or 1 for an all-zero field) is used. Zero flow is white and invalid
/// cells are black.
pub fn render_flow_png(field: &FlowField, max_norm: Option<f64>) -> RgbImage {
    render_with_norm(field, resolve_norm(&[field], max_norm))
}

/// Places two renders side by side using one shared norm, e.g. a full
/// field next to its translation-only counterpart.
pub fn render_side_by_side(
    left: &FlowField,
    right: &FlowField,
    max_norm: Option<f64>,
) -> Result<RgbImage> {
    if !left.same_dims(right) {
        return Err(Error::DimensionMismatch(
            "side-by-side fields differ in size".into(),
        ));
    }
    let norm = resolve_norm(&[left, right], max_norm);
    let (l, r) = (render_with_norm(left, norm), render_with_norm(right, norm));
    let w = left.width() as u32;
    let mut img = RgbImage::new(2 * w, left.height() as u32);
    image::imageops::replace(&mut img, &l, 0, 0);
    image::imageops::replace(&mut img, &r, w as i64, 0);
    Ok(img)
}

pub fn write_png(img: &RgbImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    img.save_with_format(path, image::ImageFormat::Png)
        .map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wheel_segments() {
        let w = color_wheel();
        assert_eq!(w[0], [255.0, 0.0, 0.0]);
        assert_eq!(w[15], [255.0, 255.0, 0.0]);
        assert_eq!(w[21], [0.0, 255.0, 0.0]);
        assert_eq!(w[25], [0.0, 255.0, 255.0]);
        assert_eq!(w[36], [0.0, 0.0, 255.0]);
        assert_eq!(w[49], [255.0, 0.0, 255.0]);
        assert_eq!(w[54], [255.0, 0.0, 43.0]);
    }

    #[test]
    fn zero_flow_is_white() {
        let img = render_flow_png(&FlowField::zeros(3, 2).unwrap(), None);
        assert!(img.pixels().all(|p| p.0 == [255, 255, 255]));
    }

    #[test]
    fn max_vector_along_x_is_wheel_start() {
        let f = FlowField::from_vec(2, 1, vec![[4.0, 0.0], [0.0, 0.0]]).unwrap();
        let img = render_flow_png(&f, None);
        assert_eq!(img.get_pixel(0, 0).0, [255, 0, 0]);
        assert_eq!(img.get_pixel(1, 0).0, [255, 255, 255]);
    }

    #[test]
    fn downward_unit_vector() {
        // position 13.5: halfway between (255,221,0) and (255,238,0)
        assert_eq!(wheel_position(0.0, 1.0), 13.5);
        assert_eq!(flow_to_rgb(0.0, 1.0), [255, 229, 0]);
    }

    #[test]
    fn opposite_vectors_are_half_a_wheel_apart() {
        let a = wheel_position(3.0, 1.0);
        let b = wheel_position(-3.0, -1.0);
        assert!(((a - b).abs() - 27.0).abs() < 1e-12);
        let f = FlowField::from_vec(2, 1, vec![[3.0, 1.0], [-3.0, -1.0]]).unwrap();
        let img = render_flow_png(&f, Some(10.0));
        let sat = |p: [u8; 3]| p.iter().max().unwrap() - p.iter().min().unwrap();
        let (p, q) = (img.get_pixel(0, 0).0, img.get_pixel(1, 0).0);
        assert!((sat(p) as i32 - sat(q) as i32).abs() <= 1);
    }

    #[test]
    fn invalid_cells_are_black_and_overflow_dims() {
        let mut f = FlowField::constant(2, 1, 1.0, 0.0).unwrap();
        f.set_invalid(1, 0);
        let img = render_flow_png(&f, Some(0.5));
        assert_eq!(img.get_pixel(1, 0).0, [0, 0, 0]);
        // magnitude beyond the norm is darkened
        assert_eq!(img.get_pixel(0, 0).0, [191, 0, 0]);
    }

    #[test]
    fn side_by_side_layout() {
        let a = FlowField::zeros(3, 2).unwrap();
        let b = FlowField::constant(3, 2, 1.0, 0.0).unwrap();
        let img = render_side_by_side(&a, &b, None).unwrap();
        assert_eq!(img.dimensions(), (6, 2));
        assert_eq!(img.get_pixel(0, 0).0, [255, 255, 255]);
        assert_eq!(img.get_pixel(3, 0).0, [255, 0, 0]);
        assert!(render_side_by_side(&a, &FlowField::zeros(2, 2).unwrap(), None).is_err());
    }
}
