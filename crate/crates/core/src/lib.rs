//! Wave-optics core: sampled fields, vortex-beam generation, Fresnel
//! propagation, turbulence phase screens and image rendering.

pub mod beam;
pub mod error;
mod fft;
pub mod field;
pub mod grid;
pub mod image;
pub mod io;
pub mod profile;
pub mod propagate;
pub mod seed;
pub mod special;
pub mod turbulence;

pub use beam::{apply_phase, hygg_field, hygg_value, source_vortex, source_vortex_offset, BeamParams};
pub use error::{OpticsError, Result};
pub use field::{intensity, relative_l2, ComplexField, IntensityMap};
pub use grid::{make_grid, GridSpec};
pub use image::{render_image, Image8};
pub use profile::{count_side_lobes, cross_section, ring_peak_radius, second_moment_radius, LobeCount};
pub use propagate::{propagate, propagate_quadrature, propagate_spectral, Method, PropagationConfig};
pub use special::{kummer_1f1, log_gamma};
pub use turbulence::{fried_parameter, generate_screen, structure_function, von_karman_psd, PhaseScreen, TurbulenceParams};
