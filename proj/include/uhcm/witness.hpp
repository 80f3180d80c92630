#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>
#include <vector>

#include "uhcm/chain.hpp"
#include "uhcm/moments.hpp"
#include "uhcm/types.hpp"

namespace uhcm {

/// Real symmetric (k+1) x (k+1) matrix of weighted displaced photon-number
/// moments: entries[m][m'] = w^{2(m+m')} mu_{m+m'}. Entries depend on m + m'
/// only (Hankel structure).
struct MomentMatrix {
    int k = 0;
    double w = 1.0;
    Complex alpha{0.0, 0.0};
    Eigen::MatrixXd entries;

    /// Symmetry, Hankel structure, unit (0,0) entry.
    void validate() const;
};

MomentMatrix build_moment_matrix(const MomentSet& moments, int k, double w);

/// The w = 1 special case (matrix-of-moments nonclassicality test).
MomentMatrix agarwal_tara_matrix(const MomentSet& moments, int k);

/// Builds the matrix from measured correlations: entries[m][m'] =
/// w_tilde^{2(m+m')} / binom(2(m+m'), m+m') * Gamma_{m+m'}. Records must
/// cover orders 1..2k at one alpha with one zeta_tilde.
MomentMatrix matrix_from_gamma(std::span<const CorrelationRecord> records, int k, double w_tilde);

/// Truncated, renormalized filter coefficients of the regularizing kernel:
/// components[m] proportional to (-1)^m Gamma(2(m+1)/q) / (m!)^2, evaluated
/// in log space and normalized to unit Euclidean length.
struct FilterVector {
    double q = 0.0;
    double w = 0.0;
    int k = 0;
    Eigen::VectorXd components;
};

FilterVector filter_vector(double q, double w, int k);

/// Quadratic form H~^T L H~ (the truncated regularized quasiprobability).
double truncated_regularized_p(const MomentMatrix& matrix, const FilterVector& filter);

/// Smallest eigenvalue and its eigenvector via a cyclic Jacobi sweep.
struct EigenResult {
    double min_eigenvalue = 0.0;
    Eigen::VectorXd eigenvector;
    bool degenerate = false;  // two smallest eigenvalues within 1e-10
};

EigenResult min_eigenvalue_witness(const MomentMatrix& matrix);

/// Full Jacobi eigensystem of a symmetric matrix; exposed for validation.
/// Rotates until the off-diagonal Frobenius norm is below 1e-13 relative to
/// the matrix scale. Eigenvalues ascend; eigenvectors are the columns.
void jacobi_eigensystem(Eigen::MatrixXd a, Eigen::VectorXd& eigenvalues,
                        Eigen::MatrixXd& eigenvectors);

/// One evaluated grid point of a witness scan or measurement.
struct WitnessPoint {
    Complex alpha{0.0, 0.0};
    int k = 0;
    double w = 0.0;
    double q = 0.0;
    double p_trunc = 0.0;
    double f_min = 0.0;
    Eigen::VectorXd h_opt;
    double envelope = 1.0;
    // Bootstrap percentile intervals; NaN when not estimated.
    double p_ci_low = std::numeric_limits<double>::quiet_NaN();
    double p_ci_high = std::numeric_limits<double>::quiet_NaN();
    double f_ci_low = std::numeric_limits<double>::quiet_NaN();
    double f_ci_high = std::numeric_limits<double>::quiet_NaN();
    double f_z = std::numeric_limits<double>::quiet_NaN();
};

struct WitnessReport {
    std::vector<WitnessPoint> points;

    /// Columns: alpha_re, alpha_im, k, w, q, P_trunc, F_min, envelope,
    /// P_env, F_env, ci_low, ci_high (the interval columns carry the F_min
    /// interval; the full set of intervals is in the JSON form).
    std::string to_csv() const;
    std::string to_json() const;
};

/// Nonparametric bootstrap over shots: resample shot indices with
/// replacement, re-estimate all correlation orders (with per-resample channel
/// means), rebuild the matrix, and recompute both witnesses. Reports 2.5/97.5
/// percentile intervals and the z-score of the point estimate against zero.
/// resamples == 1 uses the identity resample (degenerate mode).
WitnessReport bootstrap_witness(const ShotMatrix& shots, int k, double w_tilde, double q,
                                int resamples, std::uint64_t seed);

}  // namespace uhcm
