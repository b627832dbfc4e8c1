use thiserror::Error;

/// Errors produced by the lattice, operator and solver layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("mesh length must be positive and finite, got {0}")]
    InvalidMeshLength(f64),

    #[error("domain has no interior lattice points at h = {0}")]
    EmptyInterior(f64),

    #[error("point {point:?} is not an interior lattice point")]
    NotInterior { point: [i64; 2] },

    #[error("point {point:?} is not a lattice point of the closed domain")]
    NotInDomain { point: [i64; 2] },

    #[error("inadmissible direction {direction:?} at {point:?}")]
    InadmissibleDirection { point: [i64; 2], direction: [i64; 2] },

    #[error("incomplete 9-point stencil at {0:?}")]
    IncompleteStencil([i64; 2]),

    #[error("seed box active: the bounding box still constrains the clipped polygon")]
    SeedBoxActive,

    #[error("Dirac mass at ({0}, {1}) lies outside the domain")]
    DiracOutsideDomain(f64, f64),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("box {0:?} cuts a Dirac location on its boundary")]
    BoxCutsDirac([f64; 4]),

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error("non-finite value encountered at iteration {0}")]
    NonFinite(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
