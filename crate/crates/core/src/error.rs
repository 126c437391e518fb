use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("degenerate jump: |u_left - u_right| = {gap:e} <= {floor:e}")]
    DegenerateJump { gap: f64, floor: f64 },

    #[error("Newton iteration for f_u(x, u) = {target} at x = {x} did not converge")]
    NewtonDivergence { x: f64, target: f64 },

    #[error("time step {dt:e} is not positive")]
    CflViolation { dt: f64 },

    #[error("non-finite state at t = {time} (index {index})")]
    NonFiniteState { time: f64, index: usize },

    #[error("position {x} is outside the domain [{lo}, {hi}]")]
    OutOfDomain { x: f64, lo: f64, hi: f64 },

    #[error("shock lost at t = {time} near x = {x}: jump {jump:e} below floor")]
    LostShock { time: f64, x: f64, jump: f64 },

    #[error("no simple shock emerged within the horizon (last L1 distance {last_distance:e})")]
    NotEmerged { last_distance: f64 },

    #[error("shock curves do not intersect")]
    NoIntersection,

    #[error("shift ordering violated at t = {time}: xi_plus - xi_minus = {gap:e}")]
    OrderingViolation { time: f64, gap: f64 },

    #[error("gradient blow-up at t = {time} before growth could be measured")]
    ShockFormedEarly { time: f64 },

    #[error("dynamic-programming minimizer on the cone edge at x = {x}")]
    ConeTooNarrow { x: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
