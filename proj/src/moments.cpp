#include "uhcm/moments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "json.hpp"
#include "special.hpp"

namespace uhcm {

namespace {

constexpr double kImagFatal = 1e-8;
constexpr double kMomentNegSlack = -1e-9;
constexpr double kSeriesTol = 1e-10;

std::string format_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.12g", x);
    return buf;
}

// Traces of hermitian sandwiches are real up to rounding; anything beyond
// the fatal band signals a broken input.
double checked_real(Complex z, const char* what) {
    const double im = std::abs(z.imag());
    const double scale = std::max(1.0, std::abs(z.real()));
    if (im > kImagFatal * scale)
        throw NumericError(std::string("numerical inconsistency: imaginary residue in ") + what);
    return z.real();
}

// One step of S -> A S A^+ with A = a - alpha (upper bidiagonal), done in
// place via two sweeps. Row update then column update keeps it O(dim^2).
void sandwich_step(Eigen::MatrixXcd& s, Complex alpha) {
    const int d = static_cast<int>(s.rows());
    for (int i = 0; i < d; ++i) {
        const double up = std::sqrt(i + 1.0);
        if (i + 1 < d)
            s.row(i) = up * s.row(i + 1) - alpha * s.row(i);
        else
            s.row(i) = -alpha * s.row(i);
    }
    const Complex ac = std::conj(alpha);
    for (int j = 0; j < d; ++j) {
        const double up = std::sqrt(j + 1.0);
        if (j + 1 < d)
            s.col(j) = up * s.col(j + 1) - ac * s.col(j);
        else
            s.col(j) = -ac * s.col(j);
    }
}

}  // namespace

void MomentSet::validate() const {
    if (values.empty()) throw DataError("insufficient moments: empty set");
    if (values[0] != 1.0) throw NumericError("numerical inconsistency: zeroth moment must be 1");
    for (double v : values) {
        if (!std::isfinite(v)) throw NumericError("numerical inconsistency: non-finite moment");
        if (v < kMomentNegSlack)
            throw NumericError("numerical inconsistency: negative moment " + std::to_string(v));
    }
    if (!std_errors.empty() && std_errors.size() != values.size())
        throw DataError("insufficient moments: std_errors size mismatch");
}

std::string MomentSet::to_csv() const {
    std::ostringstream out;
    out << "alpha_re,alpha_im,order_or_n,value,std_error\n";
    for (std::size_t m = 0; m < values.size(); ++m) {
        out << format_double(alpha.real()) << ',' << format_double(alpha.imag()) << ',' << m << ','
            << format_double(values[m]) << ',';
        if (m < std_errors.size()) out << format_double(std_errors[m]);
        out << '\n';
    }
    return out.str();
}

std::string MomentSet::to_json() const {
    nlohmann::json j;
    j["alpha"] = {alpha.real(), alpha.imag()};
    j["source"] = source == Source::analytic ? "analytic" : "simulated";
    j["values"] = values;
    if (!std_errors.empty()) j["std_errors"] = std_errors;
    return j.dump(2);
}

void PhotocountDistribution::validate(bool complete) const {
    double sum = 0.0;
    for (double p : probs) {
        if (!(p > -1e-8 && p < 1.0 + 1e-8))
            throw NumericError("numerical inconsistency: probability outside [0, 1]: " +
                               std::to_string(p));
        sum += p;
    }
    if (complete && std::abs(sum - 1.0) > 1e-6)
        throw NumericError("numerical inconsistency: probabilities sum to " + std::to_string(sum));
}

std::string PhotocountDistribution::to_csv() const {
    std::ostringstream out;
    out << "alpha_re,alpha_im,order_or_n,value,std_error\n";
    for (std::size_t n = 0; n < probs.size(); ++n)
        out << format_double(alpha.real()) << ',' << format_double(alpha.imag()) << ',' << n << ','
            << format_double(probs[n]) << ",\n";
    return out.str();
}

std::string PhotocountDistribution::to_json() const {
    nlohmann::json j;
    j["alpha"] = {alpha.real(), alpha.imag()};
    j["eta"] = eta;
    j["probs"] = probs;
    j["truncation_order"] = truncation_order;
    return j.dump(2);
}

std::vector<double> moments_direct_upto(const DensityMatrix& rho, Complex alpha, int max_order) {
    if (max_order < 0) throw ConfigError("domain error: negative moment order");
    std::vector<double> out(static_cast<std::size_t>(max_order) + 1);
    out[0] = 1.0;
    if (max_order == 0) return out;
    Eigen::MatrixXcd s = rho.entries();
    for (int m = 1; m <= max_order; ++m) {
        sandwich_step(s, alpha);
        const double v = checked_real(s.trace(), "moment trace");
        if (!std::isfinite(v))
            throw TruncationError("truncation failure: moment order " + std::to_string(m) +
                                  " overflows");
        out[static_cast<std::size_t>(m)] = v;
    }
    return out;
}

double moment_direct(const DensityMatrix& rho, Complex alpha, int m) {
    return moments_direct_upto(rho, alpha, m).back();
}

double moment_via_displacement(const DensityMatrix& rho, Complex alpha, int m) {
    if (m < 0) throw ConfigError("domain error: negative moment order");
    if (m == 0) return 1.0;
    if (alpha == Complex(0.0, 0.0)) {
        // No displacement truncation: the factorial sum over the state's own
        // diagonal is exact.
        double acc = 0.0;
        for (int n = m; n < rho.dim(); ++n)
            acc += detail::falling_factorial(n, m) * rho.entry(n, n).real();
        return acc;
    }
    // Mass parked at the truncation edge would be weighted by the largest
    // factorial factor; enlarge the working dimension until the whole mass is
    // captured (deficit bound) and the factorial-weighted edge entries are
    // negligible. The trace sum carries a rounding floor around 1e-12, so the
    // deficit bound is a coarse mass check, not a precision target.
    int big = std::max(displaced_dim(rho.dim(), alpha), m + 8);
    for (;;) {
        big = std::min(big, 2048);
        const Eigen::VectorXd diag = displaced_diagonal_at(rho, alpha, big);
        double acc = 0.0;
        for (int n = m; n < big; ++n) acc += detail::falling_factorial(n, m) * diag(n);
        double edge = 0.0;
        for (int n = std::max(m, big - 3); n < big; ++n)
            edge = std::max(edge, std::abs(diag(n)) * detail::falling_factorial(n, m));
        const double deficit = std::abs(diag.sum() - 1.0);
        if (edge <= 1e-10 * std::max(1.0, std::abs(acc)) && deficit < 1e-9) return acc;
        if (big >= 2048)
            throw TruncationError("truncation failure: displaced tail contributes " +
                                  std::to_string(std::max(edge, deficit)));
        big = static_cast<int>(std::ceil(big * 1.35)) + 8;
    }
}

MomentSet analytic_moments(const DensityMatrix& rho, Complex alpha, int max_order) {
    MomentSet set;
    set.alpha = alpha;
    set.source = MomentSet::Source::analytic;
    set.values = moments_direct_upto(rho, alpha, max_order);
    set.validate();
    return set;
}

double MomentEngine::moment(Complex alpha, int m) {
    const auto key = std::make_pair(
        std::make_pair(static_cast<long long>(std::llround(alpha.real() * 1e12)),
                       static_cast<long long>(std::llround(alpha.imag() * 1e12))),
        m);
    {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
    }
    const std::vector<double> vals = moments_direct_upto(rho_, alpha, m);
    std::lock_guard<std::mutex> lock(mutex_);
    for (int i = 0; i <= m; ++i) {
        auto k = key;
        k.second = i;
        cache_.emplace(k, vals[static_cast<std::size_t>(i)]);
    }
    return vals[static_cast<std::size_t>(m)];
}

MomentSet MomentEngine::moments(Complex alpha, int max_order) {
    MomentSet set;
    set.alpha = alpha;
    set.source = MomentSet::Source::analytic;
    set.values.resize(static_cast<std::size_t>(max_order) + 1);
    moment(alpha, max_order);  // fill the cache in one pass
    std::lock_guard<std::mutex> lock(mutex_);
    const auto base = std::make_pair(static_cast<long long>(std::llround(alpha.real() * 1e12)),
                                     static_cast<long long>(std::llround(alpha.imag() * 1e12)));
    for (int m = 0; m <= max_order; ++m) set.values[static_cast<std::size_t>(m)] = cache_.at({base, m});
    return set;
}

PhotocountDistribution photocount_direct(const DensityMatrix& rho, Complex alpha, double eta,
                                         int n_max) {
    if (!(eta > 0.0 && eta <= 1.0)) throw ConfigError("domain error: efficiency outside (0, 1]");
    Eigen::VectorXd diag = displaced_diagonal(rho, alpha);
    const int support = static_cast<int>(diag.size());
    const int count = n_max < 0 ? support : std::min(n_max + 1, support);

    PhotocountDistribution pd;
    pd.alpha = alpha;
    pd.eta = eta;
    pd.truncation_order = count - 1;
    pd.probs.assign(static_cast<std::size_t>(count), 0.0);
    if (eta == 1.0) {
        for (int n = 0; n < count; ++n) pd.probs[static_cast<std::size_t>(n)] = diag(n);
        return pd;
    }
    const double leta = std::log(eta);
    const double lloss = std::log1p(-eta);
    for (int n = 0; n < count; ++n) {
        double acc = 0.0;
        for (int k = n; k < support; ++k) {
            const double w = std::exp(detail::log_choose(k, n) + n * leta + (k - n) * lloss);
            acc += w * diag(k);
        }
        pd.probs[static_cast<std::size_t>(n)] = acc;
    }
    return pd;
}

SeriesResult photocount_from_moments_diag(const MomentSet& moments, double eta, int n) {
    if (!(eta > 0.0 && eta <= 1.0)) throw ConfigError("domain error: efficiency outside (0, 1]");
    if (n < 0) throw ConfigError("domain error: negative photon number");
    const int top = moments.max_order();
    const double inv_nfact = std::exp(-detail::log_factorial(n));

    SeriesResult res;
    if (n > top) return res;  // not converged: no usable orders

    // Partial sums of sum_{l>=n} (-1)^{l-n} eta^l / (l-n)! / n! * mu_l,
    // stopping once the last three partial sums agree to 1e-10 and the
    // next-term bound eta^{L+1} mu_{L+1} / (L+1-n)! is below 1e-10.
    double sum = 0.0;
    double prev1 = 0.0, prev2 = 0.0;
    double log_eta_pow = n * std::log(eta);
    for (int l = n; l <= top; ++l) {
        const double term = ((l - n) % 2 == 0 ? 1.0 : -1.0) * std::exp(log_eta_pow) /
                            std::exp(detail::log_factorial(l - n)) * inv_nfact * moments.value(l);
        prev2 = prev1;
        prev1 = sum;
        sum += term;
        res.value = sum;
        res.order_used = l;
        res.last_term = term;
        if (l >= n + 2) {
            const double osc = std::max({std::abs(sum - prev1), std::abs(sum - prev2),
                                         std::abs(prev1 - prev2)});
            double bound = std::numeric_limits<double>::infinity();
            if (l + 1 <= top) {
                bound = std::exp(log_eta_pow + std::log(eta) - detail::log_factorial(l + 1 - n)) *
                        moments.value(l + 1);
            } else if (std::abs(term) == 0.0) {
                bound = 0.0;  // finite series exhausted exactly
            }
            res.next_term_bound = bound;
            if (osc < kSeriesTol && bound < kSeriesTol) {
                res.converged = true;
                return res;
            }
        }
        log_eta_pow += std::log(eta);
    }
    return res;
}

double photocount_from_moments(const MomentSet& moments, double eta, int n) {
    const SeriesResult res = photocount_from_moments_diag(moments, eta, n);
    if (!res.converged)
        throw SeriesError("series truncation error: moment series for p_" + std::to_string(n) +
                              " did not settle within order " + std::to_string(moments.max_order()),
                          std::max(std::abs(res.last_term), res.next_term_bound));
    return res.value;
}

double quasiprob_s(const DensityMatrix& rho, Complex alpha, double s, double eta) {
    if (!(s < 1.0)) throw ConfigError("domain error: ordering parameter must satisfy s < 1");
    if (!(eta > 0.0 && eta <= 1.0)) throw ConfigError("domain error: efficiency outside (0, 1]");
    const double denom = eta * (1.0 - s);
    const double ratio = (denom - 2.0) / denom;
    const PhotocountDistribution pd = photocount_direct(rho, alpha, eta);
    const int support = static_cast<int>(pd.probs.size());

    const double labs = std::log(std::abs(ratio));
    double sum = 0.0;
    double max_tail_term = 0.0;
    for (int n = 0; n < support; ++n) {
        const double p = std::max(pd.probs[static_cast<std::size_t>(n)], 0.0);
        double term = 0.0;
        if (n == 0) {
            term = p;
        } else if (ratio != 0.0 && p > 0.0) {
            const double lt = n * labs + std::log(p);
            if (lt > 700.0)
                throw SeriesError("divergent representation: term at n = " + std::to_string(n) +
                                      " overflows",
                                  lt);
            term = ((ratio < 0.0 && n % 2 == 1) ? -1.0 : 1.0) * std::exp(lt);
        }
        sum += term;
        if (n >= support - std::max(3, support / 10)) max_tail_term = std::max(max_tail_term, std::abs(term));
    }
    if (std::abs(ratio) >= 1.0 && max_tail_term > 1e-12)
        throw SeriesError("divergent representation: photocount tail does not dominate the weight",
                          max_tail_term);
    return 2.0 / (M_PI * (1.0 - s)) * sum;
}

}  // namespace uhcm
