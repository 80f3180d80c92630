#include "uhcm/chain.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

#include "special.hpp"

namespace uhcm {

namespace {

constexpr double kModulusTol = 1e-12;
constexpr std::uint32_t kShotFileVersion = 1;

// Stream tags for the per-shot substreams. Keeping signal, counts, and dark
// noise on separate streams means a change of dark level (or detector count)
// cannot perturb the photon-side randomness of the run.
constexpr std::uint64_t kStreamSignal = 0xA1;
constexpr std::uint64_t kStreamCounts = 0xB2;
constexpr std::uint64_t kStreamDark = 0xC3;

int resolve_threads(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 2 : static_cast<int>(hw);
}

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.12g", x);
    return buf;
}

}  // namespace

void OpticalChainConfig::validate() const {
    const double main_mod = std::norm(T) + std::norm(R);
    if (std::abs(main_mod - 1.0) > kModulusTol)
        throw ConfigError("domain error: |T|^2 + |R|^2 deviates from 1 by " +
                          std::to_string(main_mod - 1.0));
    const double ddl_mod = std::norm(T_D) + std::norm(R_D);
    if (std::abs(ddl_mod - 1.0) > kModulusTol)
        throw ConfigError("domain error: |T_D|^2 + |R_D|^2 deviates from 1 by " +
                          std::to_string(ddl_mod - 1.0));
    if (!(beta_R > 0.0)) throw ConfigError("domain error: beta_R must be positive");
    if (beta_r_jitter_sd < 0.0) throw ConfigError("domain error: negative jitter sd");
    if (channel_count() < 2) throw ConfigError("domain error: at least two detectors required");
    double split = 0.0;
    for (const DetectorConfig& det : detectors) {
        if (!(det.eta > 0.0 && det.eta <= 1.0))
            throw ConfigError("domain error: detector efficiency outside (0, 1]");
        if (!(det.gain > 0.0)) throw ConfigError("domain error: nonpositive gain");
        if (det.dark_sd < 0.0) throw ConfigError("domain error: negative dark sd");
        split += std::norm(det.t_u);
    }
    if (split > 1.0 + kModulusTol)
        throw ConfigError("domain error: channel splitting exceeds unity: " + std::to_string(split));
    if (shots < 1) throw ConfigError("domain error: at least one shot required");
}

bool OpticalChainConfig::gains_balanced(double tol) const {
    for (const DetectorConfig& det : detectors) {
        const double z = det.gain * det.eta * std::norm(det.t_u);
        if (std::abs(z - zeta) > tol * std::max(1.0, std::abs(zeta))) return false;
    }
    return true;
}

double OpticalChainConfig::zeta_tilde() const {
    return zeta * std::abs(T) * std::abs(R) * std::abs(R_D) * beta_R;
}

Complex implied_displacement(const OpticalChainConfig& cfg) {
    if (cfg.T == Complex(0.0, 0.0)) throw ConfigError("degenerate splitter: T = 0");
    return -cfg.R * cfg.T_D * cfg.beta_D / cfg.T;
}

Complex beta_d_for_displacement(const OpticalChainConfig& cfg, Complex alpha) {
    if (cfg.R == Complex(0.0, 0.0) || cfg.T_D == Complex(0.0, 0.0))
        throw ConfigError("degenerate splitter: R or T_D vanishes");
    return -alpha * cfg.T / (cfg.R * cfg.T_D);
}

OpticalChainConfig balance_gains(OpticalChainConfig cfg, double zeta) {
    if (!(zeta > 0.0)) throw ConfigError("domain error: zeta must be positive");
    for (DetectorConfig& det : cfg.detectors) {
        const double denom = det.eta * std::norm(det.t_u);
        if (!(denom > 0.0)) throw ConfigError("degenerate channel: eta |T_u|^2 = 0");
        det.gain = zeta / denom;
    }
    cfg.zeta = zeta;
    return cfg;
}

ClassicalSignalModel ClassicalSignalModel::coherent(Complex sigma0) {
    ClassicalSignalModel m;
    m.kind = Kind::coherent;
    m.sigma0 = sigma0;
    return m;
}
ClassicalSignalModel ClassicalSignalModel::thermal(double nbar) {
    ClassicalSignalModel m;
    m.kind = Kind::thermal;
    m.nbar = nbar;
    return m;
}
ClassicalSignalModel ClassicalSignalModel::phase_diffused(double radius) {
    ClassicalSignalModel m;
    m.kind = Kind::phase_diffused;
    m.radius = radius;
    return m;
}

void ClassicalSignalModel::validate() const {
    if (kind == Kind::thermal && nbar < 0.0)
        throw ConfigError("domain error: negative thermal occupation");
    if (kind == Kind::phase_diffused && radius < 0.0)
        throw ConfigError("domain error: negative ring radius");
}

Complex ClassicalSignalModel::sample(SplitMix64& g) const {
    switch (kind) {
        case Kind::coherent: return sigma0;
        case Kind::thermal: {
            const double s = std::sqrt(nbar / 2.0);
            return {s * standard_normal(g), s * standard_normal(g)};
        }
        case Kind::phase_diffused: {
            const double phi = 6.283185307179586476925286766559 * uniform01(g);
            return radius * Complex(std::cos(phi), std::sin(phi));
        }
    }
    return {0.0, 0.0};
}

double ClassicalSignalModel::analytic_moment(Complex alpha, int m) const {
    switch (kind) {
        case Kind::coherent: return std::pow(std::norm(sigma0 - alpha), m);
        case Kind::thermal: {
            // E |g - alpha|^{2m} for complex Gaussian g with E|g|^2 = nbar:
            // sum_j C(m, j)^2 j! nbar^j |alpha|^{2(m-j)}.
            double acc = 0.0;
            for (int j = 0; j <= m; ++j) {
                const double c = detail::choose(m, j);
                acc += c * c * std::exp(detail::log_factorial(j)) * std::pow(nbar, j) *
                       std::pow(std::norm(alpha), m - j);
            }
            return acc;
        }
        case Kind::phase_diffused: {
            // |sigma - alpha|^2 = A - B cos(phi), A = r^2 + |alpha|^2,
            // B = 2 r |alpha|; odd cosine powers average to zero.
            const double a = radius * radius + std::norm(alpha);
            const double b = 2.0 * radius * std::abs(alpha);
            double acc = 0.0;
            for (int j = 0; j <= m; j += 2) {
                const double cosmom = detail::choose(j, j / 2) / std::pow(2.0, j);
                acc += detail::choose(m, j) * std::pow(a, m - j) * std::pow(b, j) * cosmom;
            }
            return acc;
        }
    }
    return 0.0;
}

ShotMatrix simulate_run(const OpticalChainConfig& cfg, const ClassicalSignalModel& signal,
                        const SimulateOptions& opts) {
    cfg.validate();
    signal.validate();
    if (!opts.allow_unbalanced && !cfg.gains_balanced())
        throw ConfigError("domain error: detector gains are not balanced (run balance_gains)");

    const int m_det = cfg.channel_count();
    const std::uint64_t n = cfg.shots;
    ShotMatrix out;
    out.shots = n;
    out.channels = m_det;
    out.currents.resize(n * static_cast<std::uint64_t>(m_det));
    out.alpha = implied_displacement(cfg);
    out.zeta_tilde = cfg.zeta_tilde();
    out.seed = cfg.seed;

    const Complex ddl_center = cfg.T_D * cfg.beta_D;
    const Complex ref_coupling = cfg.R * cfg.R_D;
    std::vector<double> lambda_scale(static_cast<std::size_t>(m_det));
    for (int u = 0; u < m_det; ++u)
        lambda_scale[static_cast<std::size_t>(u)] = cfg.detectors[static_cast<std::size_t>(u)].eta *
                                                    std::norm(cfg.detectors[static_cast<std::size_t>(u)].t_u);

    const auto run_block = [&](std::uint64_t begin, std::uint64_t end) {
        for (std::uint64_t j = begin; j < end; ++j) {
            SplitMix64 sig = SplitMix64::derive(cfg.seed, kStreamSignal, j);
            SplitMix64 cnt = SplitMix64::derive(cfg.seed, kStreamCounts, j);
            SplitMix64 dark = SplitMix64::derive(cfg.seed, kStreamDark, j);

            const Complex sigma = signal.sample(sig);
            const double phi = 6.283185307179586476925286766559 * uniform01(sig);
            const double beta_ref = truncated_normal_nonneg(sig, cfg.beta_R, cfg.beta_r_jitter_sd);

            const Complex a0 = cfg.T * sigma +
                               cfg.R * ddl_center +
                               ref_coupling * beta_ref * Complex(std::cos(phi), std::sin(phi));
            const double intensity = std::norm(a0);

            double* row = &out.currents[j * static_cast<std::uint64_t>(m_det)];
            for (int u = 0; u < m_det; ++u) {
                const auto count = poisson(cnt, lambda_scale[static_cast<std::size_t>(u)] * intensity);
                row[u] = cfg.detectors[static_cast<std::size_t>(u)].gain * static_cast<double>(count);
            }
            if (cfg.correlated_dark) {
                const DetectorConfig& d0 = cfg.detectors.front();
                const double shared = d0.dark_mean + d0.dark_sd * standard_normal(dark);
                for (int u = 0; u < m_det; ++u) row[u] += shared;
            } else {
                for (int u = 0; u < m_det; ++u) {
                    const DetectorConfig& det = cfg.detectors[static_cast<std::size_t>(u)];
                    row[u] += det.dark_mean + det.dark_sd * standard_normal(dark);
                }
            }
        }
    };

    const int workers = resolve_threads(opts.threads);
    if (workers <= 1 || n < 4096) {
        run_block(0, n);
    } else {
        std::vector<std::thread> pool;
        const std::uint64_t chunk = (n + workers - 1) / static_cast<std::uint64_t>(workers);
        for (int w = 0; w < workers; ++w) {
            const std::uint64_t b = std::min(n, w * chunk);
            const std::uint64_t e = std::min(n, b + chunk);
            if (b < e) pool.emplace_back(run_block, b, e);
        }
        for (std::thread& t : pool) t.join();
    }
    return out;
}

CorrelationRecord estimate_gamma(const ShotMatrix& shots, int m) {
    std::vector<int> channels(static_cast<std::size_t>(2 * m));
    std::iota(channels.begin(), channels.end(), 0);
    return estimate_gamma(shots, m, channels);
}

CorrelationRecord estimate_gamma(const ShotMatrix& shots, int m, std::span<const int> channels) {
    if (m < 1) throw ConfigError("domain error: correlation order must be >= 1");
    if (static_cast<int>(channels.size()) != 2 * m)
        throw DataError("insufficient channels: need exactly 2m channel indices");
    for (int u : channels)
        if (u < 0 || u >= shots.channels)
            throw DataError("insufficient channels: index out of range");
    if (shots.shots < 2) throw DataError("insufficient channels: need at least two shots");

    const std::uint64_t n = shots.shots;
    // Pass 1: empirical per-channel means of the selected channels.
    std::vector<double> mean(channels.size(), 0.0);
    for (std::uint64_t j = 0; j < n; ++j)
        for (std::size_t c = 0; c < channels.size(); ++c)
            mean[c] += shots.at(j, channels[c]);
    for (double& v : mean) v /= static_cast<double>(n);

    // Pass 2: mean of the ac products, then their sample variance.
    double acc = 0.0;
    std::vector<double> products(n);
    for (std::uint64_t j = 0; j < n; ++j) {
        double p = 1.0;
        for (std::size_t c = 0; c < channels.size(); ++c)
            p *= shots.at(j, channels[c]) - mean[c];
        products[j] = p;
        acc += p;
    }
    const double gamma = acc / static_cast<double>(n);
    double var = 0.0;
    for (std::uint64_t j = 0; j < n; ++j) {
        const double d = products[j] - gamma;
        var += d * d;
    }
    var /= static_cast<double>(n - 1);

    CorrelationRecord rec;
    rec.m = m;
    rec.alpha = shots.alpha;
    rec.gamma_hat = gamma;
    rec.std_error = std::sqrt(var / static_cast<double>(n));
    rec.zeta_tilde = shots.zeta_tilde;
    rec.shots_used = n;
    return rec;
}

MomentEstimate gamma_to_moment(const CorrelationRecord& rec) {
    if (!(rec.zeta_tilde > 0.0)) throw ConfigError("domain error: zeta_tilde must be positive");
    const double scale = detail::choose(2 * rec.m, rec.m) * std::pow(rec.zeta_tilde, 2 * rec.m);
    MomentEstimate est;
    est.m = rec.m;
    est.alpha = rec.alpha;
    est.value = rec.gamma_hat / scale;
    est.std_error = rec.std_error / scale;
    return est;
}

MomentSet simulated_moments(const ShotMatrix& shots, int max_order) {
    if (max_order < 1) throw ConfigError("domain error: need at least order 1");
    MomentSet set;
    set.alpha = shots.alpha;
    set.source = MomentSet::Source::simulated;
    set.values.resize(static_cast<std::size_t>(max_order) + 1);
    set.std_errors.resize(static_cast<std::size_t>(max_order) + 1);
    set.values[0] = 1.0;
    set.std_errors[0] = 0.0;
    for (int m = 1; m <= max_order; ++m) {
        const MomentEstimate est = gamma_to_moment(estimate_gamma(shots, m));
        set.values[static_cast<std::size_t>(m)] = est.value;
        set.std_errors[static_cast<std::size_t>(m)] = est.std_error;
    }
    return set;
}

DarkNoiseReport dark_noise_experiment(const OpticalChainConfig& cfg,
                                      const ClassicalSignalModel& signal,
                                      std::span<const double> dark_sds,
                                      std::span<const int> orders,
                                      const SimulateOptions& opts) {
    if (dark_sds.size() < 2) throw ConfigError("domain error: need at least two dark levels");
    if (std::none_of(dark_sds.begin(), dark_sds.end(), [](double s) { return s == 0.0; }))
        throw ConfigError("domain error: dark levels must include zero");

    DarkNoiseReport report;
    for (double sd : dark_sds) {
        OpticalChainConfig level_cfg = cfg;
        for (DetectorConfig& det : level_cfg.detectors) det.dark_sd = sd;
        const ShotMatrix shots = simulate_run(level_cfg, signal, opts);
        DarkNoiseReport::Level level;
        level.dark_sd = sd;
        for (int m : orders) level.records.push_back(estimate_gamma(shots, m));
        report.levels.push_back(std::move(level));
    }
    for (std::size_t a = 0; a < report.levels.size(); ++a) {
        for (std::size_t b = a + 1; b < report.levels.size(); ++b) {
            for (std::size_t i = 0; i < orders.size(); ++i) {
                const CorrelationRecord& ra = report.levels[a].records[i];
                const CorrelationRecord& rb = report.levels[b].records[i];
                DarkNoiseReport::Difference diff;
                diff.level_a = static_cast<int>(a);
                diff.level_b = static_cast<int>(b);
                diff.m = ra.m;
                diff.delta = rb.gamma_hat - ra.gamma_hat;
                diff.combined_error =
                    std::sqrt(ra.std_error * ra.std_error + rb.std_error * rb.std_error);
                diff.z = diff.combined_error > 0.0 ? diff.delta / diff.combined_error : 0.0;
                report.differences.push_back(diff);
            }
        }
    }
    return report;
}

void write_shot_file(const std::filesystem::path& path, const ShotMatrix& shots) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("domain error: cannot open " + path.string());
    const char magic[4] = {'U', 'H', 'C', 'M'};
    out.write(magic, 4);
    const std::uint32_t version = kShotFileVersion;
    const std::uint32_t m = static_cast<std::uint32_t>(shots.channels);
    const std::uint64_t n = shots.shots;
    out.write(reinterpret_cast<const char*>(&version), sizeof(version));
    out.write(reinterpret_cast<const char*>(&m), sizeof(m));
    out.write(reinterpret_cast<const char*>(&n), sizeof(n));
    out.write(reinterpret_cast<const char*>(shots.currents.data()),
              static_cast<std::streamsize>(shots.currents.size() * sizeof(double)));
    if (!out) throw ConfigError("domain error: short write to " + path.string());
}

ShotMatrix read_shot_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("domain error: cannot open " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "UHCM", 4) != 0)
        throw ConfigError("domain error: not a shot file: " + path.string());
    std::uint32_t version = 0, m = 0;
    std::uint64_t n = 0;
    in.read(reinterpret_cast<char*>(&version), sizeof(version));
    in.read(reinterpret_cast<char*>(&m), sizeof(m));
    in.read(reinterpret_cast<char*>(&n), sizeof(n));
    if (!in || version != kShotFileVersion)
        throw ConfigError("domain error: unsupported shot file version");
    ShotMatrix shots;
    shots.shots = n;
    shots.channels = static_cast<int>(m);
    shots.currents.resize(n * m);
    in.read(reinterpret_cast<char*>(shots.currents.data()),
            static_cast<std::streamsize>(shots.currents.size() * sizeof(double)));
    if (!in) throw ConfigError("domain error: truncated shot file");
    return shots;
}

std::string correlation_csv(std::span<const CorrelationRecord> records,
                            const std::vector<double>* analytic) {
    std::ostringstream out;
    out << "m,alpha_re,alpha_im,gamma_hat,std_error,zeta_tilde,shots,moment,moment_std_error,"
           "analytic_moment\n";
    for (std::size_t i = 0; i < records.size(); ++i) {
        const CorrelationRecord& r = records[i];
        const MomentEstimate est = gamma_to_moment(r);
        out << r.m << ',' << fmt(r.alpha.real()) << ',' << fmt(r.alpha.imag()) << ','
            << fmt(r.gamma_hat) << ',' << fmt(r.std_error) << ',' << fmt(r.zeta_tilde) << ','
            << r.shots_used << ',' << fmt(est.value) << ',' << fmt(est.std_error) << ',';
        if (analytic && i < analytic->size()) out << fmt((*analytic)[i]);
        out << '\n';
    }
    return out.str();
}

}  // namespace uhcm
