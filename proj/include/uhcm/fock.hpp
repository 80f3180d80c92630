#pragma once

#include <Eigen/Dense>

#include "uhcm/types.hpp"

namespace uhcm {

/// How the Fock-space cutoff of a built state is chosen. `fixed` pins the
/// dimension to n_max + 1; `adaptive` grows the dimension by a factor 1.5
/// until the last diagonal entry of the state falls below tail_tol. Both are
/// subject to the hard cap.
struct CutoffPolicy {
    enum class Kind { fixed, adaptive };
    Kind kind = Kind::adaptive;
    int n_max = 0;
    double tail_tol = 1e-10;
    int hard_cap = 512;

    static CutoffPolicy fixed(int n_max, int hard_cap = 512) {
        return {Kind::fixed, n_max, 0.0, hard_cap};
    }
    static CutoffPolicy adaptive(double tail_tol = 1e-10, int hard_cap = 512) {
        return {Kind::adaptive, 0, tail_tol, hard_cap};
    }
};

/// Hermitian, unit-trace density matrix in a truncated Fock basis. Instances
/// are immutable after construction and safe to share across threads.
class DensityMatrix {
  public:
    DensityMatrix() = default;

    /// Validates hermiticity, unit trace, positivity up to truncation, and
    /// the tail-mass bound, then takes ownership. The tail tolerance records
    /// how well the truncation represents the intended state; pass 1.0 for
    /// a matrix that is itself the object of study (no larger state implied).
    static DensityMatrix from_matrix(Eigen::MatrixXcd entries, double tail_tol = 1.0);

    /// Takes ownership without the O(dim^3) positivity check. Used by the
    /// channel maps, whose outputs are positive by construction.
    static DensityMatrix unchecked(Eigen::MatrixXcd entries, double tail_tol);

    int dim() const { return static_cast<int>(entries_.rows()); }
    const Eigen::MatrixXcd& entries() const { return entries_; }
    Complex entry(int n, int m) const { return entries_(n, m); }

    /// Real part of the last diagonal entry (the truncation-tail witness).
    double tail_mass() const;
    /// Tail tolerance this state was built/validated under.
    double tail_tol() const { return tail_tol_; }

    /// Checks every type invariant (including the smallest eigenvalue) and
    /// throws on violation. Quadratic-to-cubic cost; meant for builders and
    /// tests, not hot loops.
    void validate(double tail_tol) const;
    void validate() const { validate(tail_tol_); }

  private:
    Eigen::MatrixXcd entries_;
    double tail_tol_ = 1.0;
};

/// Parameters of a state builder.
struct StateSpec {
    enum class Kind { vacuum, fock, coherent, thermal, squeezed_vacuum, spats, custom };

    Kind kind = Kind::vacuum;
    int n = 0;                  // fock
    Complex beta{0.0, 0.0};     // coherent
    double nbar = 0.0;          // thermal / spats
    Complex xi{0.0, 0.0};       // squeezed_vacuum
    Eigen::MatrixXcd matrix;    // custom
    double loss = 1.0;          // state-preparation efficiency, applied last
    CutoffPolicy cutoff = CutoffPolicy::adaptive();

    static StateSpec vacuum();
    static StateSpec fock(int n);
    static StateSpec coherent(Complex beta);
    static StateSpec thermal(double nbar);
    static StateSpec squeezed_vacuum(Complex xi);
    static StateSpec spats(double nbar, double loss = 1.0);
    static StateSpec custom(Eigen::MatrixXcd matrix, double tail_tol = 1.0);
};

/// Builds the specified state, growing the cutoff per the policy and applying
/// the loss channel when spec.loss < 1. The result passes every
/// DensityMatrix invariant.
DensityMatrix build_state(const StateSpec& spec);

/// Initial working dimension used when displacing a dim-dimensional state by
/// alpha. The displaced routines grow it further until the truncated tail is
/// negligible (states with weight near the cutoff spread beyond this rule).
int displaced_dim(int dim, Complex alpha);

/// First `cols` columns of the displacement operator D(alpha) on a space of
/// `rows` Fock levels, computed from the analytic Laguerre-form matrix
/// elements via a normalized two-term recurrence (all entries bounded by 1).
Eigen::MatrixXcd displacement_columns(Complex alpha, int rows, int cols);

/// Full dim x dim displacement operator D(alpha).
Eigen::MatrixXcd displacement_operator(Complex alpha, int dim);

/// Returns D(-alpha) rho D(-alpha)^dagger on the enlarged working dimension.
/// Trace is preserved to 1e-8 by the enlargement rule.
DensityMatrix displace(const DensityMatrix& rho, Complex alpha);

/// Diagonal of D(-alpha) rho D(-alpha)^dagger on the enlarged dimension.
/// Cheaper than `displace` when only photon-number populations are needed.
Eigen::VectorXd displaced_diagonal(const DensityMatrix& rho, Complex alpha);

/// Same diagonal at an explicit working dimension (no growth loop).
Eigen::VectorXd displaced_diagonal_at(const DensityMatrix& rho, Complex alpha, int working_dim);

/// Beam-splitter loss channel with transmission eta (Kraus sum over lost
/// photons). Trace preserved to 1e-12.
DensityMatrix loss_channel(const DensityMatrix& rho, double eta);

}  // namespace uhcm
