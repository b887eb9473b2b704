//! Dense complex linear algebra used by the optimizers.

mod eigen;
mod gaussian;
mod matrix;

pub use eigen::{
    eigh, min_eigenvalue, normalize_phase, principal_eigpair, psd_project, HermitianEigen, JACOBI_MAX_DIM,
};
pub use gaussian::{
    cholesky_inverse, cholesky_pd, cholesky_psd, sample_complex_gaussian, standard_complex_normal,
    ComplexGaussianSampler, CHOLESKY_RIDGE,
};
pub use matrix::{
    dot, norm, norm_inf, norm_sqr, outer, phase, scale_vec, unit_phase, CMatrix, CVector, HermitianMatrix, C64, ONE,
    ZERO,
};
