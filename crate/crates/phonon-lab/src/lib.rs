//! Modeling and analysis toolkit for bulk-acoustic-wave phonon modes
//! coupled to an optical Fabry-Perot cavity: resonator spectra, cavity
//! mode structure, optomechanical coupling, induced-transparency and
//! amplification lineshapes, laser cooling, synthetic measurements and
//! the inverse fitting pipeline behind the `phonon-lab` CLI.

pub mod analysis;
pub mod cli;
pub mod config;
pub mod constants;
pub mod coupling;
pub mod dynamics;
pub mod error;
pub mod optcavity;
pub mod pipeline;
pub mod resonator;
pub mod specsynth;
pub mod trace;

pub use error::{Error, Result};
pub use trace::{SpectrumTrace, TraceKind};
