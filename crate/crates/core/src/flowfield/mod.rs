//! Translation motion fields: rasterization from matches, pyramid injection,
//! `.flo` interchange and color-wheel rendering.

mod color;
mod flo;
mod pyramid;
mod raster;

pub use color::{
    flow_to_rgb, render_flow_png, render_side_by_side, wheel_position, write_png, COLOR_WHEEL_SIZE,
};
pub use flo::{read_flo, read_flo_file, write_flo, write_flo_file, FLO_MAGIC};
pub use pyramid::{
    downsample_flow, downsample_flow_with, inject_translation_field, PyramidInjectionConfig,
    INJECTION_LEVELS,
};
pub use raster::rasterize_translation_field;
