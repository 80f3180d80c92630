#include "uhcm/witness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>

#include "json.hpp"
#include "special.hpp"

namespace uhcm {

namespace {

constexpr double kHankelTol = 1e-12;
constexpr double kDegenerateGap = 1e-10;

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.12g", x);
    return buf;
}

double percentile(std::vector<double> sorted, double p) {
    if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
    const double pos = p / 100.0 * static_cast<double>(sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

}  // namespace

void MomentMatrix::validate() const {
    const int n = k + 1;
    if (entries.rows() != n || entries.cols() != n)
        throw ConfigError("domain error: moment matrix size mismatch");
    if ((entries - entries.transpose()).cwiseAbs().maxCoeff() > 0.0)
        throw NumericError("numerical inconsistency: moment matrix not symmetric");
    if (std::abs(entries(0, 0) - 1.0) > kHankelTol)
        throw NumericError("numerical inconsistency: (0,0) entry deviates from 1");
    const double scale = std::max(1.0, entries.cwiseAbs().maxCoeff());
    for (int m = 0; m < n; ++m)
        for (int p = 0; p < n; ++p)
            for (int r = 0; r < n; ++r)
                for (int s = 0; s < n; ++s)
                    if (m + p == r + s &&
                        std::abs(entries(m, p) - entries(r, s)) > kHankelTol * scale)
                        throw NumericError("numerical inconsistency: Hankel structure violated");
}

MomentMatrix build_moment_matrix(const MomentSet& moments, int k, double w) {
    if (k < 1) throw ConfigError("domain error: witness order must be >= 1");
    if (!(w > 0.0)) throw ConfigError("domain error: filter width must be positive");
    if (moments.max_order() < 2 * k)
        throw DataError("insufficient moments: need order " + std::to_string(2 * k));

    // One table entry per total order keeps the Hankel structure exact.
    std::vector<double> weighted(static_cast<std::size_t>(2 * k) + 1);
    for (int s = 0; s <= 2 * k; ++s)
        weighted[static_cast<std::size_t>(s)] = std::pow(w, 2.0 * s) * moments.value(s);

    MomentMatrix mat;
    mat.k = k;
    mat.w = w;
    mat.alpha = moments.alpha;
    mat.entries.resize(k + 1, k + 1);
    for (int m = 0; m <= k; ++m)
        for (int p = 0; p <= k; ++p) mat.entries(m, p) = weighted[static_cast<std::size_t>(m + p)];
    return mat;
}

MomentMatrix agarwal_tara_matrix(const MomentSet& moments, int k) {
    return build_moment_matrix(moments, k, 1.0);
}

MomentMatrix matrix_from_gamma(std::span<const CorrelationRecord> records, int k, double w_tilde) {
    if (k < 1) throw ConfigError("domain error: witness order must be >= 1");
    if (!(w_tilde > 0.0)) throw ConfigError("domain error: w_tilde must be positive");
    std::map<int, const CorrelationRecord*> by_order;
    for (const CorrelationRecord& rec : records) by_order[rec.m] = &rec;
    for (int s = 1; s <= 2 * k; ++s)
        if (!by_order.count(s))
            throw DataError("insufficient moments: missing correlation order " + std::to_string(s));

    const CorrelationRecord& first = *by_order.at(1);
    for (const CorrelationRecord& rec : records) {
        if (std::abs(rec.alpha - first.alpha) > 1e-12 * (1.0 + std::abs(first.alpha)))
            throw DataError("incoherent record set: displacement differs across records");
        if (std::abs(rec.zeta_tilde - first.zeta_tilde) > 1e-12 * std::abs(first.zeta_tilde))
            throw DataError("incoherent record set: zeta_tilde differs across records");
    }

    std::vector<double> weighted(static_cast<std::size_t>(2 * k) + 1);
    weighted[0] = 1.0;
    for (int s = 1; s <= 2 * k; ++s)
        weighted[static_cast<std::size_t>(s)] = std::pow(w_tilde, 2.0 * s) /
                                                detail::choose(2 * s, s) *
                                                by_order.at(s)->gamma_hat;

    MomentMatrix mat;
    mat.k = k;
    mat.w = w_tilde * first.zeta_tilde;
    mat.alpha = first.alpha;
    mat.entries.resize(k + 1, k + 1);
    for (int m = 0; m <= k; ++m)
        for (int p = 0; p <= k; ++p) mat.entries(m, p) = weighted[static_cast<std::size_t>(m + p)];
    return mat;
}

FilterVector filter_vector(double q, double w, int k) {
    if (!(q > 2.0)) throw ConfigError("domain error: filter exponent must satisfy q > 2");
    if (!(w > 0.0)) throw ConfigError("domain error: filter width must be positive");
    if (k < 0) throw ConfigError("domain error: negative truncation order");

    // log |H_m| = log(pref) - 2 log(m!) + log Gamma(2(m+1)/q); evaluating in
    // log space keeps the large-m entries from overflowing before the
    // normalization cancels the scale anyway.
    const double log_pref = (1.0 / q + 0.5) * std::log(2.0) + std::log(w) -
                            0.5 * (std::log(M_PI) + std::log(q) + std::lgamma(2.0 / q));
    Eigen::VectorXd logmag(k + 1);
    for (int m = 0; m <= k; ++m)
        logmag(m) = log_pref - 2.0 * detail::log_factorial(m) + std::lgamma(2.0 * (m + 1) / q);
    const double shift = logmag.maxCoeff();

    FilterVector filter;
    filter.q = q;
    filter.w = w;
    filter.k = k;
    filter.components.resize(k + 1);
    for (int m = 0; m <= k; ++m)
        filter.components(m) = (m % 2 == 0 ? 1.0 : -1.0) * std::exp(logmag(m) - shift);
    filter.components.normalize();
    return filter;
}

double truncated_regularized_p(const MomentMatrix& matrix, const FilterVector& filter) {
    if (filter.k != matrix.k) throw ConfigError("domain error: filter/matrix order mismatch");
    return filter.components.dot(matrix.entries * filter.components);
}

void jacobi_eigensystem(Eigen::MatrixXd a, Eigen::VectorXd& eigenvalues,
                        Eigen::MatrixXd& eigenvectors) {
    const int n = static_cast<int>(a.rows());
    if (a.cols() != n) throw ConfigError("domain error: eigensystem needs a square matrix");
    eigenvectors = Eigen::MatrixXd::Identity(n, n);

    const double scale = std::max(1.0, a.norm());
    const double tol = 1e-13 * scale;
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += 2.0 * a(p, q) * a(p, q);
        if (std::sqrt(off) < tol) break;

        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;

                const double app = a(p, p);
                const double aqq = a(q, q);
                a(p, p) = app - t * apq;
                a(q, q) = aqq + t * apq;
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                for (int i = 0; i < n; ++i) {
                    if (i == p || i == q) continue;
                    const double aip = a(i, p);
                    const double aiq = a(i, q);
                    a(i, p) = c * aip - s * aiq;
                    a(p, i) = a(i, p);
                    a(i, q) = s * aip + c * aiq;
                    a(q, i) = a(i, q);
                }
                for (int i = 0; i < n; ++i) {
                    const double vip = eigenvectors(i, p);
                    const double viq = eigenvectors(i, q);
                    eigenvectors(i, p) = c * vip - s * viq;
                    eigenvectors(i, q) = s * vip + c * viq;
                }
            }
        }
    }

    // Sort ascending, carrying the eigenvector columns along.
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    std::sort(order.begin(), order.end(), [&](int i, int j) { return a(i, i) < a(j, j); });
    eigenvalues.resize(n);
    Eigen::MatrixXd sorted(n, n);
    for (int i = 0; i < n; ++i) {
        eigenvalues(i) = a(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(i)]);
        sorted.col(i) = eigenvectors.col(order[static_cast<std::size_t>(i)]);
    }
    eigenvectors = std::move(sorted);
}

EigenResult min_eigenvalue_witness(const MomentMatrix& matrix) {
    Eigen::VectorXd evals;
    Eigen::MatrixXd evecs;
    jacobi_eigensystem(matrix.entries, evals, evecs);
    EigenResult res;
    res.min_eigenvalue = evals(0);
    res.eigenvector = evecs.col(0);
    res.degenerate = evals.size() > 1 && (evals(1) - evals(0)) < kDegenerateGap;
    return res;
}

std::string WitnessReport::to_csv() const {
    std::ostringstream out;
    out << "alpha_re,alpha_im,k,w,q,P_trunc,F_min,envelope,P_env,F_env,ci_low,ci_high\n";
    for (const WitnessPoint& pt : points) {
        out << fmt(pt.alpha.real()) << ',' << fmt(pt.alpha.imag()) << ',' << pt.k << ','
            << fmt(pt.w) << ',' << fmt(pt.q) << ',' << fmt(pt.p_trunc) << ',' << fmt(pt.f_min)
            << ',' << fmt(pt.envelope) << ',' << fmt(pt.p_trunc * pt.envelope) << ','
            << fmt(pt.f_min * pt.envelope) << ',';
        if (std::isfinite(pt.f_ci_low)) out << fmt(pt.f_ci_low);
        out << ',';
        if (std::isfinite(pt.f_ci_high)) out << fmt(pt.f_ci_high);
        out << '\n';
    }
    return out.str();
}

std::string WitnessReport::to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const WitnessPoint& pt : points) {
        nlohmann::json j;
        j["alpha"] = {pt.alpha.real(), pt.alpha.imag()};
        j["k"] = pt.k;
        j["w"] = pt.w;
        j["q"] = pt.q;
        j["P_trunc"] = pt.p_trunc;
        j["F_min"] = pt.f_min;
        j["envelope"] = pt.envelope;
        std::vector<double> h(pt.h_opt.data(), pt.h_opt.data() + pt.h_opt.size());
        j["h_opt"] = h;
        if (std::isfinite(pt.p_ci_low)) j["P_ci"] = {pt.p_ci_low, pt.p_ci_high};
        if (std::isfinite(pt.f_ci_low)) j["F_ci"] = {pt.f_ci_low, pt.f_ci_high};
        if (std::isfinite(pt.f_z)) j["F_z"] = pt.f_z;
        arr.push_back(std::move(j));
    }
    return arr.dump(2);
}

namespace {

struct GammaSet {
    std::vector<CorrelationRecord> records;
};

// Correlations of all orders 1..2k over an index multiset, recomputing the
// per-channel means on that multiset (the resample is treated as a run).
GammaSet gammas_over_indices(const ShotMatrix& shots, int k,
                             const std::vector<std::uint64_t>& indices) {
    const int channels = 4 * k;
    std::vector<double> mean(static_cast<std::size_t>(channels), 0.0);
    for (std::uint64_t j : indices)
        for (int u = 0; u < channels; ++u) mean[static_cast<std::size_t>(u)] += shots.at(j, u);
    for (double& v : mean) v /= static_cast<double>(indices.size());

    GammaSet out;
    for (int m = 1; m <= 2 * k; ++m) {
        double acc = 0.0, acc2 = 0.0;
        for (std::uint64_t j : indices) {
            double p = 1.0;
            for (int u = 0; u < 2 * m; ++u)
                p *= shots.at(j, u) - mean[static_cast<std::size_t>(u)];
            acc += p;
            acc2 += p * p;
        }
        const double n = static_cast<double>(indices.size());
        const double gamma = acc / n;
        const double var = std::max(0.0, (acc2 - n * gamma * gamma) / std::max(1.0, n - 1.0));
        CorrelationRecord rec;
        rec.m = m;
        rec.alpha = shots.alpha;
        rec.gamma_hat = gamma;
        rec.std_error = std::sqrt(var / n);
        rec.zeta_tilde = shots.zeta_tilde;
        rec.shots_used = indices.size();
        out.records.push_back(rec);
    }
    return out;
}

}  // namespace

WitnessReport bootstrap_witness(const ShotMatrix& shots, int k, double w_tilde, double q,
                                int resamples, std::uint64_t seed) {
    if (resamples < 1) throw ConfigError("domain error: need at least one resample");
    if (shots.channels < 4 * k)
        throw DataError("insufficient channels: witness order " + std::to_string(k) + " needs " +
                        std::to_string(4 * k) + " detectors");
    if (shots.shots < 2) throw DataError("insufficient channels: need at least two shots");

    const FilterVector filter = filter_vector(q, std::max(w_tilde * shots.zeta_tilde, 1e-300), k);

    std::vector<std::uint64_t> identity(shots.shots);
    for (std::uint64_t j = 0; j < shots.shots; ++j) identity[j] = j;
    const GammaSet point = gammas_over_indices(shots, k, identity);
    const MomentMatrix point_matrix = matrix_from_gamma(point.records, k, w_tilde);
    const double point_p = truncated_regularized_p(point_matrix, filter);
    const EigenResult point_f = min_eigenvalue_witness(point_matrix);

    std::vector<double> p_samples, f_samples;
    p_samples.reserve(static_cast<std::size_t>(resamples));
    f_samples.reserve(static_cast<std::size_t>(resamples));
    std::vector<std::uint64_t> indices(shots.shots);
    for (int r = 0; r < resamples; ++r) {
        if (resamples == 1) {
            indices = identity;
        } else {
            SplitMix64 g = SplitMix64::derive(seed, 0xB007, static_cast<std::uint64_t>(r));
            for (std::uint64_t j = 0; j < shots.shots; ++j)
                indices[j] = std::min<std::uint64_t>(
                    shots.shots - 1,
                    static_cast<std::uint64_t>(uniform01(g) * static_cast<double>(shots.shots)));
        }
        const GammaSet gs = gammas_over_indices(shots, k, indices);
        const MomentMatrix mat = matrix_from_gamma(gs.records, k, w_tilde);
        p_samples.push_back(truncated_regularized_p(mat, filter));
        f_samples.push_back(min_eigenvalue_witness(mat).min_eigenvalue);
    }

    auto sorted_p = p_samples;
    auto sorted_f = f_samples;
    std::sort(sorted_p.begin(), sorted_p.end());
    std::sort(sorted_f.begin(), sorted_f.end());

    double f_sd = 0.0;
    if (f_samples.size() > 1) {
        double mean = 0.0;
        for (double v : f_samples) mean += v;
        mean /= static_cast<double>(f_samples.size());
        for (double v : f_samples) f_sd += (v - mean) * (v - mean);
        f_sd = std::sqrt(f_sd / static_cast<double>(f_samples.size() - 1));
    }

    WitnessPoint pt;
    pt.alpha = shots.alpha;
    pt.k = k;
    pt.w = w_tilde * shots.zeta_tilde;
    pt.q = q;
    pt.p_trunc = point_p;
    pt.f_min = point_f.min_eigenvalue;
    pt.h_opt = point_f.eigenvector;
    pt.envelope = 1.0;
    pt.p_ci_low = percentile(sorted_p, 2.5);
    pt.p_ci_high = percentile(sorted_p, 97.5);
    pt.f_ci_low = percentile(sorted_f, 2.5);
    pt.f_ci_high = percentile(sorted_f, 97.5);
    pt.f_z = f_sd > 0.0 ? point_f.min_eigenvalue / f_sd
                        : std::numeric_limits<double>::quiet_NaN();

    WitnessReport report;
    report.points.push_back(std::move(pt));
    return report;
}

}  // namespace uhcm
