use image::{Rgb, RgbImage};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{BinaryMask, Error, FlowField, Result};

const PLACEMENT_ATTEMPTS: usize = 100;
const PLACEMENT_GAP: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    pub object_count: usize,
    /// Inclusive range; when set, each scene draws its object count from it
    /// and `object_count` is ignored.
    pub object_count_range: Option<[usize; 2]>,
    /// Bounds on the translation length, pixels.
    pub translation_range: [f64; 2],
    /// Bounds on the rotation magnitude, radians; the sign is random.
    pub rotation_range: [f64; 2],
    /// Bounds on the sprite outer radius, pixels.
    pub radius_range: [f64; 2],
    pub background_translation: [f64; 2],
    /// When false, sprites keep clear of each other in both frames.
    pub allow_overlap: bool,
    /// Number of objects left out of the target frame.
    pub hidden_in_target: usize,
    pub seed: u64,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            width: 512,
            height: 512,
            object_count: 8,
            object_count_range: None,
            translation_range: [50.0, 200.0],
            rotation_range: [40f64.to_radians(), 80f64.to_radians()],
            radius_range: [32.0, 40.0],
            background_translation: [0.0, 0.0],
            allow_overlap: false,
            hidden_in_target: 0,
            seed: 0,
        }
    }
}

impl SceneSpec {
    /// 128x128 canvas with motion scaled down to fit.
    pub fn small() -> Self {
        Self {
            width: 128,
            height: 128,
            object_count: 3,
            translation_range: [10.0, 30.0],
            radius_range: [9.0, 12.0],
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.width == 0 || self.height == 0 || self.width > 1 << 15 || self.height > 1 << 15 {
            return bad("canvas dimensions must be in 1..=32768");
        }
        for (name, [lo, hi]) in [
            ("translation_range", self.translation_range),
            ("rotation_range", self.rotation_range),
            ("radius_range", self.radius_range),
        ] {
            if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo <= hi) {
                return bad(&format!("{name} must satisfy 0 <= lo <= hi"));
            }
        }
        if self.radius_range[0] < 1.0 {
            return bad("radius_range must start at 1 or more");
        }
        if let Some([lo, hi]) = self.object_count_range {
            if lo > hi {
                return bad("object_count_range must satisfy lo <= hi");
            }
        }
        if self.max_object_count() > u16::MAX as usize {
            return bad("at most 65535 objects");
        }
        if !self.background_translation.iter().all(|c| c.is_finite()) {
            return bad("background_translation must be finite");
        }
        Ok(())
    }

    fn max_object_count(&self) -> usize {
        self.object_count_range
            .map_or(self.object_count, |[_, hi]| hi)
    }
}

/// A centrally symmetric sprite placed in the reference frame and moved
/// rigidly into the target frame: `p -> R(rotation)(p - pivot) + pivot + translation`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpritePlacement {
    /// Vertices relative to the pivot covering half a turn; the polygon is
    /// completed by their negations.
    pub half_polygon: Vec<[f64; 2]>,
    pub pivot: [f64; 2],
    pub rotation: f64,
    pub translation: [f64; 2],
    pub color: [u8; 3],
    pub visible_in_target: bool,
}

impl SpritePlacement {
    pub fn polygon(&self) -> Vec<[f64; 2]> {
        self.half_polygon
            .iter()
            .copied()
            .chain(self.half_polygon.iter().map(|&[x, y]| [-x, -y]))
            .collect()
    }

    pub fn bounding_radius(&self) -> f64 {
        self.half_polygon
            .iter()
            .map(|&[x, y]| x.hypot(y))
            .fold(0.0, f64::max)
    }

    /// Rigid displacement of reference point `(x, y)`.
    pub fn displacement(&self, x: f64, y: f64) -> [f64; 2] {
        let (s, c) = self.rotation.sin_cos();
        let (dx, dy) = (x - self.pivot[0], y - self.pivot[1]);
        [
            c * dx - s * dy - dx + self.translation[0],
            s * dx + c * dy - dy + self.translation[1],
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthObject {
    /// Value of this object in the index maps.
    pub id: u16,
    #[serde(flatten)]
    pub sprite: SpritePlacement,
    pub area_ref: usize,
    pub area_tgt: usize,
    /// Value of the translation field on this object.
    pub centroid_displacement: [f64; 2],
}

/// Row-major grid of object ids, 0 for background.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexMap {
    width: usize,
    height: usize,
    data: Vec<u16>,
}

impl IndexMap {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![0; width * height],
        }
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<u16>) -> Result<Self> {
        if width == 0 || height == 0 || data.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "{} ids for a {width}x{height} index map",
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

    pub fn data(&self) -> &[u16] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> u16 {
        self.data[y * self.width + x]
    }

    pub fn mask(&self, id: u16) -> BinaryMask {
        let bits = self.data.iter().map(|&v| v == id).collect();
        BinaryMask::from_bits(self.width, self.height, bits).expect("index map dims are positive")
    }

    fn paint(&mut self, mask: &BinaryMask, id: u16) {
        for (v, &b) in self.data.iter_mut().zip(mask.bits()) {
            if b {
                *v = id;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneTruth {
    pub width: usize,
    pub height: usize,
    pub objects: Vec<GroundTruthObject>,
    pub index_map_ref: IndexMap,
    pub index_map_tgt: IndexMap,
    /// Full motion field.
    pub flow_full: FlowField,
    /// Per-object centroid displacement; background carries its translation.
    pub flow_translation: FlowField,
    /// Objects visible in both frames, paired with themselves.
    pub correspondences: Vec<(u16, u16)>,
    pub background_translation: [f64; 2],
}

impl SceneTruth {
    pub fn object(&self, id: u16) -> Option<&GroundTruthObject> {
        self.objects.iter().find(|o| o.id == id)
    }

    pub fn mask_ref(&self, id: u16) -> BinaryMask {
        self.index_map_ref.mask(id)
    }

    pub fn mask_tgt(&self, id: u16) -> BinaryMask {
        self.index_map_tgt.mask(id)
    }
}

fn inside_polygon(poly: &[[f64; 2]], x: f64, y: f64) -> bool {
    let mut inside = false;
    let mut j = poly.len() - 1;
    for i in 0..poly.len() {
        let ([xi, yi], [xj, yj]) = (poly[i], poly[j]);
        if (yi > y) != (yj > y) && x < (xj - xi) * (y - yi) / (yj - yi) + xi {
            inside = !inside;
        }
        j = i;
    }
    inside
}

/// Rasterizes the sprite centred at `center`, rotated by `rotation`. Pixel
/// centres sit on integer coordinates. When `2 * center` is integral, each
/// pixel is decided through the lexicographically smaller member of its
/// mirror pair, so the mask is exactly point-symmetric about `center`.
fn rasterize(
    sprite: &SpritePlacement,
    center: [f64; 2],
    rotation: f64,
    width: usize,
    height: usize,
) -> BinaryMask {
    let poly = sprite.polygon();
    let r = sprite.bounding_radius();
    let mut mask = BinaryMask::new(width, height).expect("canvas dims are positive");
    let (s, c) = rotation.sin_cos();
    let twice = [2.0 * center[0], 2.0 * center[1]];
    let symmetric = twice.iter().all(|v| v.fract() == 0.0);
    let lo = |v: f64| (v - r).floor().max(0.0) as usize;
    let hi = |v: f64, n: usize| ((v + r).ceil().max(-1.0) as i64).min(n as i64 - 1);
    let (x_hi, y_hi) = (hi(center[0], width), hi(center[1], height));
    if x_hi < 0 || y_hi < 0 {
        return mask;
    }
    for y in lo(center[1])..=y_hi as usize {
        for x in lo(center[0])..=x_hi as usize {
            let (mut px, mut py) = (x as f64, y as f64);
            if symmetric {
                let (mx, my) = (twice[0] - px, twice[1] - py);
                if (my, mx) < (py, px) {
                    (px, py) = (mx, my);
                }
            }
            let (dx, dy) = (px - center[0], py - center[1]);
            // inverse rotation into sprite coordinates
            let (lx, ly) = (c * dx + s * dy, -s * dx + c * dy);
            if inside_polygon(&poly, lx, ly) {
                mask.set(x, y, true);
            }
        }
    }
    mask
}

fn background_color(wx: f64, wy: f64) -> Rgb<u8> {
    let (ix, iy) = (wx.floor() as i64, wy.floor() as i64);
    let tile = ((ix.div_euclid(16) + iy.div_euclid(16)) & 1) as u8;
    let grain = (ix * 7 + iy * 13).rem_euclid(24) as u8;
    let base = 80 + 60 * tile + grain;
    Rgb([base, base, base.saturating_add(20)])
}

/// Renders both frames and all ground truth for explicitly placed sprites.
/// Sprite `i` gets id `i + 1`; higher ids occlude lower ones.
pub fn render_scene(
    width: usize,
    height: usize,
    background_translation: [f64; 2],
    sprites: &[SpritePlacement],
) -> Result<(RgbImage, RgbImage, SceneTruth)> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidConfig(
            "canvas dimensions must be positive".into(),
        ));
    }
    if sprites.len() > u16::MAX as usize {
        return Err(Error::InvalidConfig("at most 65535 sprites".into()));
    }
    for s in sprites {
        if s.half_polygon.len() < 2 {
            return Err(Error::InvalidConfig(
                "sprite needs at least two half vertices".into(),
            ));
        }
    }
    let mut index_ref = IndexMap::new(width, height);
    let mut index_tgt = IndexMap::new(width, height);
    for (i, s) in sprites.iter().enumerate() {
        let id = i as u16 + 1;
        index_ref.paint(&rasterize(s, s.pivot, 0.0, width, height), id);
        if s.visible_in_target {
            let center = [s.pivot[0] + s.translation[0], s.pivot[1] + s.translation[1]];
            index_tgt.paint(&rasterize(s, center, s.rotation, width, height), id);
        }
    }

    let mut objects = Vec::with_capacity(sprites.len());
    for (i, s) in sprites.iter().enumerate() {
        let id = i as u16 + 1;
        let (mr, mt) = (index_ref.mask(id), index_tgt.mask(id));
        let centroid_displacement = match (mr.centroid(), mt.centroid()) {
            (Ok((rx, ry)), Ok((tx, ty))) => [tx - rx, ty - ry],
            _ => s.translation,
        };
        objects.push(GroundTruthObject {
            id,
            sprite: s.clone(),
            area_ref: mr.area(),
            area_tgt: mt.area(),
            centroid_displacement,
        });
    }

    let [bu, bv] = background_translation;
    let mut flow_full = FlowField::constant(width, height, bu, bv)?;
    let mut flow_translation = flow_full.clone();
    let mut frame_ref = RgbImage::new(width as u32, height as u32);
    let mut frame_tgt = RgbImage::new(width as u32, height as u32);
    for y in 0..height {
        for x in 0..width {
            let (xf, yf) = (x as f64, y as f64);
            let id = index_ref.get(x, y);
            let px = if id == 0 {
                background_color(xf, yf)
            } else {
                let o = &objects[id as usize - 1];
                flow_full.set(x, y, o.sprite.displacement(xf, yf));
                flow_translation.set(x, y, o.centroid_displacement);
                Rgb(o.sprite.color)
            };
            frame_ref.put_pixel(x as u32, y as u32, px);
            let id = index_tgt.get(x, y);
            let px = if id == 0 {
                background_color(xf - bu, yf - bv)
            } else {
                Rgb(objects[id as usize - 1].sprite.color)
            };
            frame_tgt.put_pixel(x as u32, y as u32, px);
        }
    }

    let correspondences = objects
        .iter()
        .filter(|o| o.area_ref > 0 && o.area_tgt > 0)
        .map(|o| (o.id, o.id))
        .collect();
    let truth = SceneTruth {
        width,
        height,
        objects,
        index_map_ref: index_ref,
        index_map_tgt: index_tgt,
        flow_full,
        flow_translation,
        correspondences,
        background_translation,
    };
    Ok((frame_ref, frame_tgt, truth))
}

fn random_half_polygon(rng: &mut ChaCha8Rng, radius: f64) -> Vec<[f64; 2]> {
    let k = rng.random_range(4..=7);
    let slot = std::f64::consts::PI / k as f64;
    (0..k)
        .map(|j| {
            let a = (j as f64 + rng.random_range(-0.25..=0.25)) * slot;
            let r = radius * rng.random_range(0.85..=1.0);
            [r * a.cos(), r * a.sin()]
        })
        .collect()
}

fn uniform(rng: &mut ChaCha8Rng, [lo, hi]: [f64; 2]) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..=hi)
    }
}

/// Integer translation with length inside `range`, or `None` when rounding
/// pushed it out.
fn random_translation(rng: &mut ChaCha8Rng, range: [f64; 2]) -> Option<[f64; 2]> {
    let len = uniform(rng, range);
    let angle = rng.random_range(0.0..std::f64::consts::TAU);
    let t = [(len * angle.cos()).round(), (len * angle.sin()).round()];
    let l = t[0].hypot(t[1]);
    (range[0] <= l && l <= range[1]).then_some(t)
}

fn clear_of(a: [f64; 2], ra: f64, b: [f64; 2], rb: f64) -> bool {
    (a[0] - b[0]).hypot(a[1] - b[1]) >= ra + rb + PLACEMENT_GAP
}

/// Draws a random scene. Pivots lie on the half-pixel grid and translations
/// are integral, so with no occlusion the translation field equals each
/// object's translation exactly.
pub fn generate_scene(spec: &SceneSpec) -> Result<(RgbImage, RgbImage, SceneTruth)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let count = match spec.object_count_range {
        Some([lo, hi]) => rng.random_range(lo..=hi),
        None => spec.object_count,
    };
    let (w, h) = (spec.width as f64, spec.height as f64);
    let mut sprites: Vec<SpritePlacement> = Vec::with_capacity(count);
    for object in 0..count {
        let mut placed = None;
        for _ in 0..PLACEMENT_ATTEMPTS {
            let radius = uniform(&mut rng, spec.radius_range);
            let half_polygon = random_half_polygon(&mut rng, radius);
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let rotation = sign * uniform(&mut rng, spec.rotation_range);
            let color = [
                rng.random_range(40..=255),
                rng.random_range(40..=255),
                rng.random_range(40..=255),
            ];
            let Some(t) = random_translation(&mut rng, spec.translation_range) else {
                continue;
            };
            let sprite = SpritePlacement {
                half_polygon,
                pivot: [0.0, 0.0],
                rotation,
                translation: t,
                color,
                visible_in_target: true,
            };
            let b = sprite.bounding_radius();
            // both the reference and the moved sprite stay on the canvas
            let x_range = [b - t[0].min(0.0), w - 1.0 - b - t[0].max(0.0)];
            let y_range = [b - t[1].min(0.0), h - 1.0 - b - t[1].max(0.0)];
            if x_range[0] > x_range[1] || y_range[0] > y_range[1] {
                continue;
            }
            let half_grid = |v: f64| (2.0 * v).round() / 2.0;
            let pivot = [
                half_grid(uniform(&mut rng, x_range)),
                half_grid(uniform(&mut rng, y_range)),
            ];
            if !(x_range[0] <= pivot[0]
                && pivot[0] <= x_range[1]
                && y_range[0] <= pivot[1]
                && pivot[1] <= y_range[1])
            {
                continue;
            }
            let moved = [pivot[0] + t[0], pivot[1] + t[1]];
            let fits = spec.allow_overlap
                || sprites.iter().all(|o| {
                    let ob = o.bounding_radius();
                    let om = [o.pivot[0] + o.translation[0], o.pivot[1] + o.translation[1]];
                    clear_of(pivot, b, o.pivot, ob) && clear_of(moved, b, om, ob)
                });
            if fits {
                placed = Some(SpritePlacement { pivot, ..sprite });
                break;
            }
        }
        sprites.push(placed.ok_or(Error::PlacementFailed {
            object,
            attempts: PLACEMENT_ATTEMPTS,
        })?);
    }
    let hidden = spec.hidden_in_target.min(count);
    for i in sample(&mut rng, count, hidden) {
        sprites[i].visible_in_target = false;
    }
    render_scene(
        spec.width,
        spec.height,
        spec.background_translation,
        &sprites,
    )
}
