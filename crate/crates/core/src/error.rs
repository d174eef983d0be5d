use thiserror::Error;

/// Everything that can go wrong in the library.
///
/// Each variant names the invariant that failed so the CLI can print a
/// one-line diagnostic.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("division by the zero norm")]
    DivisionByZeroNorm,
    #[error("zero raised to a negative power")]
    ZeroToNegativePower,
    #[error("variable spaces differ: {left} vs {right}")]
    SpaceMismatch { left: String, right: String },
    #[error("prime mismatch: {0} vs {1}")]
    PrimeMismatch(u64, u64),
    #[error("invalid radius for `{0}`: radii must be nonzero")]
    InvalidRadius(String),
    #[error("duplicate variable name `{0}`")]
    DuplicateVariable(String),
    #[error("norm budget violated: image of `{var}` has norm {norm} above radius {radius}")]
    NormBudget {
        var: String,
        norm: String,
        radius: String,
    },
    #[error("point outside the polydisc: {0}")]
    OutsidePolydisc(String),
    #[error("point has {got} coordinates but the space has {expected} variables")]
    PointDimension { expected: usize, got: usize },
    #[error("parse error at {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("undeclared variable `{0}`")]
    UndeclaredVariable(String),
    #[error("series is zero")]
    ZeroSeries,
    #[error("certificate does not match the series: {0}")]
    InvalidCertificate(String),
    #[error("tolerance {eps} is below the irreducible tail bound {floor}")]
    ToleranceBelowTail { eps: String, floor: String },
    #[error("tolerance must be positive")]
    ZeroTolerance,
    #[error("Weierstrass radius condition violated for `{0}`")]
    RadiusCondition(String),
    #[error("no admissible radius found in the schedule: {0}")]
    NoAdmissibleRadius(String),
    #[error("decomposition inconsistent with the series: {0}")]
    InconsistentDecomposition(String),
    #[error("datum radii must satisfy 0 < s < r: {0}")]
    DatumRadii(String),
    #[error("membership is only defined at rigid points")]
    NonRigidPoint,
    #[error("series identity does not hold: {0}")]
    IdentityFails(String),
    #[error("preparation is not exact: residual {0}")]
    InexactPreparation(String),
    #[error("polynomial does not split over the rationals")]
    NotSplit,
    #[error("expected a polynomial in `{0}`")]
    NotPolynomial(String),
    #[error("chart transition needs |t| = 1 and t != 0")]
    TransitionDomain,
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("document error: {0}")]
    Document(String),
}

pub type Result<T> = std::result::Result<T, Error>;
