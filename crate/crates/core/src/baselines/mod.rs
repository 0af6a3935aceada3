//! Deterministic and importance-sampling approximations to posterior
//! moments: Laplace, adaptive Gauss-Hermite and adaptive Student-t
//! importance sampling.

mod hermite;
mod importance;
mod laplace;
mod optim;

pub use hermite::{gauss_hermite_moments, GaussHermiteFit, HermiteRule, MAX_GH_DIM};
pub use importance::{
    importance_sampling_student_t, IsResult, IsWarning, StudentTProposal, MIN_WEIGHT_ESS,
};
pub use laplace::{laplace_moments, laplace_moments_shifted};
pub use optim::{find_mode, hessian, Mode};
