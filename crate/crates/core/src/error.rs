use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("resolution too coarse: {0}")]
    ResolutionTooCoarse(String),
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error("cell {0} is not valid here")]
    InvalidCell(usize),
    #[error("domain was not built from a refinable recipe")]
    NotRefinable,
    #[error("cells lie in different components")]
    Disconnected,
    #[error("probe radius {r} is below the floor 2h = {floor}")]
    RadiusTooSmall { r: f64, floor: f64 },
    #[error("empty set")]
    EmptySet,
    #[error("exponent p = {0} is outside the admissible range")]
    BadExponent(f64),
    #[error("path is broken at step {0}")]
    BrokenPath(usize),
    #[error("boundary anchor {0} has no adjacent open cell")]
    InfeasibleTarget(usize),
    #[error("domain touches no boundary vertex")]
    NoBoundary,
    #[error("obstacle exceeds the boundary data: admissible class is empty")]
    KEmpty,
    #[error("box is not compactly inside the domain")]
    BoxNotInterior,
    #[error("superharmonicity certificate missing: {0}")]
    CertificateMissing(String),
    #[error("domain is not contained in the ambient domain")]
    NotNested,
    #[error("ambient domain has {0} unstable boundary anchors")]
    UnstableAmbient(usize),
    #[error("bad input: {0}")]
    BadInput(String),
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
}
