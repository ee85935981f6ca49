use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{name} must be positive and finite, got {value}")]
    NonPositive { name: &'static str, value: f64 },

    #[error("CFL violation: c*dt = {c_dt} but dz = {dz}; the lattice needs one site per step")]
    CflViolation { c_dt: f64, dz: f64 },

    #[error("flip probability a*dt = {p} must lie in [0, 1)")]
    FlipProbability { p: f64 },

    #[error("spatial extent {extent} is not a positive integer multiple of dz = {dz}")]
    ExtentNotMultiple { extent: f64, dz: f64 },

    #[error("light cone reaches {reach} sites but the grid half-width is {half_width} sites")]
    LightConeExceedsGrid { reach: usize, half_width: usize },

    #[error("site {site} outside grid of {n_sites} sites")]
    SiteOutOfRange { site: i64, n_sites: usize },

    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: String, found: String },

    #[error("requested {requested} steps but the lattice allows {available}")]
    StepsExceedLattice { requested: usize, available: usize },

    #[error("need at least {required} time slices, got {found}")]
    TooFewSlices { required: usize, found: usize },

    #[error("time slice {t} out of range (history has {len} slices)")]
    TimeOutOfRange { t: usize, len: usize },

    #[error("field value at component {component}, site {site} is not finite")]
    NonFinite { component: usize, site: usize },

    #[error("residual check needs renormalized slices, got raw ones")]
    RawModeRejected,

    #[error("renormalization factor (1-p)^-{step} overflowed")]
    RenormalizationOverflow { step: usize },

    #[error("no marker at or after step {reversal_step} within {n_max} steps")]
    NoReversal { reversal_step: usize, n_max: usize },

    #[error("return leg inconsistent: {0}")]
    InconsistentReturn(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
