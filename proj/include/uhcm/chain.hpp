#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "uhcm/moments.hpp"
#include "uhcm/rng.hpp"
#include "uhcm/types.hpp"

namespace uhcm {

/// One detection channel of the correlation measurement device: splitting
/// amplitude into the channel, detector efficiency, electronic gain, and the
/// parameters of its additive Gaussian dark noise.
struct DetectorConfig {
    Complex t_u{0.0, 0.0};
    double eta = 1.0;
    double gain = 1.0;
    double dark_mean = 0.0;
    double dark_sd = 0.0;
};

/// All physical parameters of the measurement chain: the signal beam
/// splitter (T, R), the reference-beam splitter (T_D, R_D) that merges the
/// strong dephased field beta_R with the weak displacement field beta_D, and
/// the M detection channels.
struct OpticalChainConfig {
    Complex T{1.0, 0.0};
    Complex R{0.0, 0.0};
    Complex T_D{1.0, 0.0};
    Complex R_D{0.0, 0.0};
    double beta_R = 0.0;
    Complex beta_D{0.0, 0.0};
    std::vector<DetectorConfig> detectors;
    double beta_r_jitter_sd = 0.0;
    /// Diagnostic mode: one shared dark draw injected into every channel.
    bool correlated_dark = false;
    std::uint64_t shots = 0;
    std::uint64_t seed = 0;
    /// Declared common value of gain * eta * |T_u|^2, set by balance_gains.
    double zeta = 1.0;

    int channel_count() const { return static_cast<int>(detectors.size()); }
    /// Splitter moduli, parameter ranges, channel budget. Throws ConfigError.
    void validate() const;
    bool gains_balanced(double tol = 1e-12) const;
    /// zeta |T| |R| |R_D| beta_R, the scale converting correlations into
    /// displaced photon-number moments.
    double zeta_tilde() const;
};

/// The displacement alpha = -R T_D beta_D / T imprinted on the signal by the
/// reference beam.
Complex implied_displacement(const OpticalChainConfig& cfg);

/// Inverse helper: beta_D that realizes a requested displacement.
Complex beta_d_for_displacement(const OpticalChainConfig& cfg, Complex alpha);

/// Sets every gain to zeta / (eta_u |T_u|^2) so the balance invariant holds.
OpticalChainConfig balance_gains(OpticalChainConfig cfg, double zeta);

/// Per-shot classical signal amplitude. Restricted to models with a
/// nonnegative phase-space weight, for which conditionally Poissonian
/// detection reproduces the normal-ordered correlations exactly.
struct ClassicalSignalModel {
    enum class Kind { coherent, thermal, phase_diffused };

    Kind kind = Kind::coherent;
    Complex sigma0{0.0, 0.0};  // coherent
    double nbar = 0.0;         // thermal
    double radius = 0.0;       // phase_diffused

    static ClassicalSignalModel coherent(Complex sigma0);
    static ClassicalSignalModel thermal(double nbar);
    static ClassicalSignalModel phase_diffused(double radius);

    void validate() const;
    Complex sample(SplitMix64& g) const;
    /// E |sigma - alpha|^{2m} over the classical amplitude distribution.
    double analytic_moment(Complex alpha, int m) const;
};

/// Current matrix of a finished run (row = shot), carrying the conversion
/// constants echoed from the configuration.
struct ShotMatrix {
    std::uint64_t shots = 0;
    int channels = 0;
    std::vector<double> currents;  // row-major
    Complex alpha{0.0, 0.0};
    double zeta_tilde = 0.0;
    std::uint64_t seed = 0;

    double at(std::uint64_t shot, int u) const { return currents[shot * channels + u]; }
};

struct SimulateOptions {
    bool allow_unbalanced = false;  // for negative-control experiments
    int threads = 0;                // 0 = hardware concurrency
};

/// Runs the full chain: per shot, sample the classical signal amplitude, a
/// fresh uniform reference phase, and the jittered reference amplitude; form
/// the output field, then draw per-channel Poisson counts, amplify, and add
/// dark noise. Bit-identical for a given seed regardless of thread count.
ShotMatrix simulate_run(const OpticalChainConfig& cfg, const ClassicalSignalModel& signal,
                        const SimulateOptions& opts = {});

/// Correlation of 2m alternating currents with its statistical error.
struct CorrelationRecord {
    int m = 0;
    Complex alpha{0.0, 0.0};
    double gamma_hat = 0.0;
    double std_error = 0.0;
    double zeta_tilde = 0.0;
    std::uint64_t shots_used = 0;
};

/// Two-pass estimator: subtract empirical per-channel means, average the
/// product of the first 2m ac currents over shots. std_error is the sample
/// deviation of the per-shot products over sqrt(N).
CorrelationRecord estimate_gamma(const ShotMatrix& shots, int m);
/// Same, with an explicit choice of the 2m channels entering the product.
CorrelationRecord estimate_gamma(const ShotMatrix& shots, int m, std::span<const int> channels);

struct MomentEstimate {
    int m = 0;
    Complex alpha{0.0, 0.0};
    double value = 0.0;
    double std_error = 0.0;
};

/// Converts a correlation into the displaced photon-number moment estimate
/// by dividing out binomial(2m, m) zeta_tilde^{2m}.
MomentEstimate gamma_to_moment(const CorrelationRecord& rec);

/// Estimates every order 1..max_order from one run and assembles the result
/// into a measured moment set (source = simulated, with standard errors).
/// Needs 2 * max_order channels.
MomentSet simulated_moments(const ShotMatrix& shots, int max_order);

/// Correlation estimates at several dark-noise levels sharing the signal and
/// count randomness, so differences isolate the dark contribution.
struct DarkNoiseReport {
    struct Level {
        double dark_sd = 0.0;
        std::vector<CorrelationRecord> records;  // one per requested order
    };
    struct Difference {
        int level_a = 0;
        int level_b = 0;
        int m = 0;
        double delta = 0.0;
        double combined_error = 0.0;
        double z = 0.0;
    };
    std::vector<Level> levels;
    std::vector<Difference> differences;
};

DarkNoiseReport dark_noise_experiment(const OpticalChainConfig& cfg,
                                      const ClassicalSignalModel& signal,
                                      std::span<const double> dark_sds,
                                      std::span<const int> orders,
                                      const SimulateOptions& opts = {});

/// Raw shot files: magic "UHCM", u32 version, u32 M, u64 N, then row-major
/// little-endian doubles.
void write_shot_file(const std::filesystem::path& path, const ShotMatrix& shots);
ShotMatrix read_shot_file(const std::filesystem::path& path);

/// CSV for correlation records (one row per record), with the moment
/// conversion applied and an optional analytic comparison column.
std::string correlation_csv(std::span<const CorrelationRecord> records,
                            const std::vector<double>* analytic = nullptr);

}  // namespace uhcm
