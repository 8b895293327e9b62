//! Simulation, reconstruction and analysis for polarization-diverse
//! off-axis digital holography of space-division-multiplexing devices.
//!
//! The crate covers the whole measurement chain:
//!
//! * [`field`]: sampled complex fields, centered unitary FFTs, sideband cropping.
//! * [`modes`]: Hermite-Gaussian LP basis and overlap-integral demultiplexing.
//! * [`synth`]: camera frames for spatial (Wollaston) and angular
//!   (two-reference) polarization multiplexing.
//! * [`recon`]: sideband location and complex field extraction.
//! * [`analysis`]: transfer matrix assembly, mode-group crosstalk, MDL.
//! * [`design`]: ground-truth transfer matrices with prescribed MDL and crosstalk.
//! * [`io`] and [`pipeline`]: file formats and the `holobench` commands.
//!
//! See the `examples/` directory for one runnable program per capability.

pub mod analysis;
pub mod design;
mod error;
pub mod field;
pub mod io;
pub mod modes;
pub mod pipeline;
pub mod recon;
pub mod synth;

pub use error::{Error, Polarization, Result, Warning};
pub use num_complex::Complex64;
