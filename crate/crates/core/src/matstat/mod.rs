//! Matrix functionals: ℓp→ℓq operator norms, Hermitian eigenvalues,
//! singular values, Schatten and Ky Fan norms, partial eigenvalue sums.
//!
//! Everything here is a pure function of its inputs. There is no internal
//! parallelism; the harness parallelizes across trials instead.

mod eigen;
mod field;
mod opnorm;
mod spectral;

pub use eigen::{eigvals_hermitian, singular_values, Spectrum, SpectrumKind};
pub use opnorm::{hoelder_vec_bound, opnorm_pq, opnorm_pq_oracle, opnorm_pq_with, AscentOptions, OpNorm};
pub use spectral::{kyfan_from_singular, kyfan_norm, partial_eig_sums, partial_sums_from_spectrum, schatten_norm};
