#pragma once

#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "uhcm/fock.hpp"
#include "uhcm/types.hpp"

namespace uhcm {

/// Normal-ordered displaced photon-number moments <:[n(alpha)]^m:> for
/// m = 0..max_order at a fixed displacement alpha. values[0] is exactly 1.
struct MomentSet {
    enum class Source { analytic, simulated };

    Complex alpha{0.0, 0.0};
    std::vector<double> values;
    Source source = Source::analytic;
    std::vector<double> std_errors;  // empty when not applicable

    int max_order() const { return static_cast<int>(values.size()) - 1; }
    double value(int m) const { return values.at(static_cast<std::size_t>(m)); }

    /// Throws unless: values[0] == 1, every value finite and >= -1e-9.
    void validate() const;

    /// CSV with columns alpha_re, alpha_im, order_or_n, value, std_error.
    std::string to_csv() const;
    std::string to_json() const;
};

/// Photoelectric counting distribution of the displaced state at detection
/// efficiency eta. probs[n] may carry tiny negative slack when produced by
/// the moment-series route.
struct PhotocountDistribution {
    Complex alpha{0.0, 0.0};
    double eta = 1.0;
    std::vector<double> probs;
    int truncation_order = 0;

    /// `complete` asserts the probabilities sum to 1 within 1e-6 (only
    /// meaningful when the vector covers the whole support).
    void validate(bool complete = true) const;

    std::string to_csv() const;
    std::string to_json() const;
};

/// Tr[rho (a^+ - alpha*)^m (a - alpha)^m], evaluated exactly on the truncated
/// space (the operator block is exact; the input state is taken as given).
/// The imaginary residue of the trace must stay below 1e-8.
double moment_direct(const DensityMatrix& rho, Complex alpha, int m);

/// All orders 0..max_order in one pass over S_m = A S_{m-1} A^+ with
/// A = a - alpha. O(max_order * dim^2).
std::vector<double> moments_direct_upto(const DensityMatrix& rho, Complex alpha, int max_order);

/// Independent route: factorial moments of the displaced state,
/// sum_n n!/(n-m)! <n| D(-alpha) rho D(-alpha)^+ |n> on the enlarged
/// dimension. Throws TruncationError when the enlarged tail would
/// contaminate the result.
double moment_via_displacement(const DensityMatrix& rho, Complex alpha, int m);

/// Batch MomentSet via the direct route, tagged analytic.
MomentSet analytic_moments(const DensityMatrix& rho, Complex alpha, int max_order);

/// Caching front end for phase-space scans: moments are memoized per
/// (alpha quantized to 1e-12, order). Safe for concurrent use.
class MomentEngine {
  public:
    explicit MomentEngine(DensityMatrix rho) : rho_(std::move(rho)) {}

    double moment(Complex alpha, int m);
    MomentSet moments(Complex alpha, int max_order);
    const DensityMatrix& state() const { return rho_; }

  private:
    DensityMatrix rho_;
    std::mutex mutex_;
    std::map<std::pair<std::pair<long long, long long>, int>, double> cache_;
};

/// Bernoulli-thinned photon-number distribution of the displaced state
/// (the closed evaluation of the photocounting statistics). n_max < 0 means
/// the full support of the enlarged dimension.
PhotocountDistribution photocount_direct(const DensityMatrix& rho, Complex alpha, double eta,
                                         int n_max = -1);

/// Convergence diagnostics of the alternating moment series for p_n.
struct SeriesResult {
    double value = 0.0;
    int order_used = 0;
    double last_term = 0.0;
    double next_term_bound = 0.0;
    bool converged = false;
};

/// p_n from the alternating series over normal-ordered moments. The series is
/// truncated at the first order where the partial sums settle (oscillation
/// over the last three below 1e-10) and the next-term bound is below 1e-10.
SeriesResult photocount_from_moments_diag(const MomentSet& moments, double eta, int n);

/// As above but throws SeriesError when the diagnostic fails.
double photocount_from_moments(const MomentSet& moments, double eta, int n);

/// s-parametrized quasiprobability at alpha from the photocounting
/// distribution. Requires s < 1; throws SeriesError("divergent
/// representation") when the geometric weight outruns the decay of p_n.
double quasiprob_s(const DensityMatrix& rho, Complex alpha, double s, double eta);

}  // namespace uhcm
