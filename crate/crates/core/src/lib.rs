//! Degree-of-freedom regions and Monte Carlo mutual-information tools for
//! two-user MIMO interference channels with isotropic fading and no CSIT.
//!
//! The crate is organized bottom-up:
//!
//! - [`cxmat`]: dense complex linear algebra (log-det, QR, compact SVD)
//! - [`randmat`]: Ginibre/Haar/Stiefel sampling and block-fading channel draws
//! - [`region`]: the exact DoF region polytope, case classification, and the
//!   earlier (looser) outer bound
//! - [`capacity`]: ergodic log-det rates, MAC pentagons, achievable regions,
//!   discrete-input mutual information, I-MMSE utilities, and gap constants
//! - [`verify`]: seeded statistical suites that check the supporting
//!   inequalities and region claims at desk scale

pub mod capacity;
pub mod cxmat;
pub mod randmat;
pub mod region;
pub mod verify;

pub use cxmat::{cx, CMat, Complex64, MatError};
pub use randmat::{ChannelDraw, FadingKind, FadingLaw, RandError, RngStream};
pub use region::{AntennaConfig, CaseLabel, DofPair, DofRegion, HalfPlane, RegionError};

/// Crate version string embedded in output files for provenance.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
