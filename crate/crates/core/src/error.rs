use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("operator is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("factor index {index} out of range for {factors} factors")]
    IndexOutOfRange { index: usize, factors: usize },
    #[error("malformed permutation: {0}")]
    MalformedPermutation(String),
    #[error("operator is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },
    #[error("operator is not a density operator: {0}")]
    NotDensity(String),
    #[error("Kraus operators are not complete (max deviation {deviation:e})")]
    KrausIncomplete { deviation: f64 },
    #[error("map is not CPTP (min Choi eigenvalue {min_eigenvalue:e}, trace deviation {tp_deviation:e})")]
    NotCptp { min_eigenvalue: f64, tp_deviation: f64 },
    #[error("input dimension {din} is not {dlocal}^{n}")]
    NotTensorPower { din: usize, dlocal: usize, n: usize },
    #[error("{what}: n = {n} exceeds the cap {cap}")]
    CopiesCap { what: &'static str, n: usize, cap: usize },
    #[error("size guard: {what} needs {size}, limit is {limit}")]
    SizeGuard { what: &'static str, size: u128, limit: u128 },
    #[error("integer overflow computing {0}")]
    Overflow(&'static str),
    #[error("state is not permutation invariant (generator {generator}, deviation {deviation:e})")]
    NotInvariant { generator: usize, deviation: f64 },
    #[error("state is not supported on the symmetric subspace (weight {weight})")]
    SupportViolation { weight: f64 },
    #[error("covariance violated at generator ({generator}, {next}) with deviation {deviation:e}", next = generator + 1)]
    CovarianceViolation { generator: usize, deviation: f64 },
    #[error("diamond norm did not converge: lower {lower}, upper {upper}")]
    NotConverged { lower: f64, upper: f64 },
    #[error("parameter out of range: {0}")]
    OutOfRange(String),
    #[error("target is unreachable for n below {cap}")]
    Unreachable { cap: u64 },
    #[error("numerical failure: {0}")]
    Numerical(&'static str),
}
