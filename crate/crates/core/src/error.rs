use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("carrier ({fx:.3}, {fy:.3}) cycles/m is at or above Nyquist ({nyquist_x:.3}, {nyquist_y:.3})")]
    AliasedCarrier {
        fx: f64,
        fy: f64,
        nyquist_x: f64,
        nyquist_y: f64,
    },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("crop circle of radius {radius_bins:.2} bins around bin ({center_x}, {center_y}) exceeds the {nx}x{ny} spectrum")]
    CropOutOfBounds {
        center_x: isize,
        center_y: isize,
        radius_bins: f64,
        nx: usize,
        ny: usize,
    },

    #[error("Hermite order {order} exceeds the supported maximum of {max}")]
    OrderTooHigh { order: u32, max: u32 },

    #[error("mode basis is not orthonormal: max |G - I| = {max_deviation:.3e} exceeds {tolerance:.1e}")]
    NotOrthonormal { max_deviation: f64, tolerance: f64 },

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("no sideband found: {0}")]
    NoSideband(String),

    #[error("conjugate ambiguity: {0}")]
    ConjugateAmbiguity(String),

    #[error("sideband assignment ambiguous: {0}")]
    SidebandAssignmentAmbiguous(String),

    #[error("duplicate measurement for port {port} polarization {pol}")]
    DuplicateInput { port: usize, pol: Polarization },

    #[error("missing measurement for port {port} polarization {pol}")]
    MissingInput { port: usize, pol: Polarization },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("malformed file {}: {msg}", path.display())]
    Format { path: PathBuf, msg: String },

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            msg: msg.into(),
        }
    }
}

/// Input or output polarization channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Polarization {
    X,
    Y,
}

impl Polarization {
    pub const BOTH: [Polarization; 2] = [Polarization::X, Polarization::Y];

    pub fn index(self) -> usize {
        match self {
            Polarization::X => 0,
            Polarization::Y => 1,
        }
    }

    pub fn from_index(i: usize) -> Option<Self> {
        match i {
            0 => Some(Polarization::X),
            1 => Some(Polarization::Y),
            _ => None,
        }
    }
}

impl fmt::Display for Polarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Polarization::X => "X",
            Polarization::Y => "Y",
        })
    }
}

/// Non-fatal conditions reported next to a result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Warning {
    /// The crop circle contains the DC bin.
    DcContamination { distance_bins: f64, radius_bins: f64 },
    /// Grid extent is under 6 waists, so truncation affects normalization.
    NormalizationUnreliable { extent_over_waist: f64 },
    /// More than 1% of the pixels clipped at the top or bottom code.
    Saturation { clipped_fraction: f64 },
    /// A strong spectral peak that matches no configured hologram carrier.
    UnassignedSideband {
        fx: f64,
        fy: f64,
        #[serde(with = "crate::analysis::db_serde")]
        level_db: f64,
    },
    /// An expected hologram was not detected; the field was extracted anyway.
    WeakSideband {
        pol: Polarization,
        #[serde(with = "crate::analysis::db_serde")]
        level_db: f64,
    },
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::DcContamination {
                distance_bins,
                radius_bins,
            } => write!(
                f,
                "crop circle (radius {radius_bins:.2} bins) includes DC at {distance_bins:.2} bins"
            ),
            Warning::NormalizationUnreliable { extent_over_waist } => write!(
                f,
                "grid extent is only {extent_over_waist:.2} waists; mode normalization may be biased"
            ),
            Warning::Saturation { clipped_fraction } => {
                write!(f, "{:.2}% of pixels clipped", clipped_fraction * 100.0)
            }
            Warning::UnassignedSideband { fx, fy, level_db } => write!(
                f,
                "unassigned spectral peak at ({fx:.1}, {fy:.1}) cycles/m, {level_db:.1} dB above median"
            ),
            Warning::WeakSideband { pol, level_db } => write!(
                f,
                "{pol} hologram not detected as significant ({level_db:.1} dB above the spectral median)"
            ),
        }
    }
}
