// Acceptance suite: runs every release criterion at its stated tolerance and
// prints one PASS/FAIL line per criterion. Exit code is the failure count.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "uhcm/chain.hpp"
#include "uhcm/cli.hpp"
#include "uhcm/fock.hpp"
#include "uhcm/moments.hpp"
#include "uhcm/parallel.hpp"
#include "uhcm/scan.hpp"
#include "uhcm/witness.hpp"

using namespace uhcm;

namespace {

struct Checker {
    bool ok = true;
    std::string detail;

    void require(bool cond, const std::string& what) {
        if (!cond && ok) {
            ok = false;
            detail = what;
        }
    }
};

int g_failures = 0;

void criterion(int number, const std::string& name, double time_limit_s,
               const std::function<void(Checker&)>& body) {
    Checker check;
    const auto start = std::chrono::steady_clock::now();
    try {
        body(check);
    } catch (const std::exception& e) {
        check.require(false, std::string("exception: ") + e.what());
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    check.require(elapsed < time_limit_s, "runtime " + std::to_string(elapsed) + " s over limit");
    if (!check.ok) ++g_failures;
    std::printf("[%s] criterion %2d: %-38s (%.2f s)%s%s\n", check.ok ? "PASS" : "FAIL", number,
                name.c_str(), elapsed, check.ok ? "" : " -- ", check.ok ? "" : check.detail.c_str());
    std::fflush(stdout);
}

DensityMatrix tight(StateSpec spec, double tol) {
    spec.cutoff = CutoffPolicy::adaptive(tol);
    return build_state(spec);
}

OpticalChainConfig mc_chain(std::uint64_t shots, std::uint64_t seed) {
    OpticalChainConfig cfg;
    cfg.T = std::sqrt(0.99);
    cfg.R = std::sqrt(0.01);
    cfg.T_D = std::sqrt(0.5);
    cfg.R_D = std::sqrt(0.5);
    cfg.beta_R = 400.0;  // >= 100 x max(1, E|sigma - alpha|) for the signals used here
    cfg.detectors.resize(8);
    const double etas[8] = {0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9};
    for (int u = 0; u < 8; ++u) {
        cfg.detectors[static_cast<std::size_t>(u)].t_u = std::sqrt(1.0 / 8.0);
        cfg.detectors[static_cast<std::size_t>(u)].eta = etas[u];
    }
    cfg = balance_gains(cfg, 1.0);
    cfg.beta_D = beta_d_for_displacement(cfg, Complex(0.5, 0.0));
    cfg.shots = shots;
    cfg.seed = seed;
    return cfg;
}

// Negative sets of a scanned curve, as index intervals on the grid.
std::vector<bool> negative_mask(const WitnessReport& rep, int k, bool use_f) {
    std::vector<bool> mask;
    for (const WitnessPoint& pt : rep.points)
        if (pt.k == k) mask.push_back((use_f ? pt.f_min : pt.p_trunc) < 0.0);
    return mask;
}

}  // namespace

int main() {
    std::printf("acceptance suite, %d criteria\n", 10);

    criterion(1, "single-photon witness closed form", 1.0, [](Checker& c) {
        const DensityMatrix rho = build_state(StateSpec::fock(1));
        const MomentSet set = analytic_moments(rho, Complex(0.0, 0.0), 2);
        const MomentMatrix mat = build_moment_matrix(set, 1, 1.0);
        c.require(std::abs(mat.entries(0, 0) - 1.0) < 1e-12, "matrix (0,0)");
        c.require(std::abs(mat.entries(0, 1) - 1.0) < 1e-12, "matrix (0,1)");
        c.require(std::abs(mat.entries(1, 1)) < 1e-12, "matrix (1,1)");
        const double f = min_eigenvalue_witness(mat).min_eigenvalue;
        c.require(std::abs(f - (1.0 - std::sqrt(5.0)) / 2.0) < 1e-9,
                  "minimal eigenvalue " + std::to_string(f));
    });

    criterion(2, "squeezed-vacuum scan sign pattern", 60.0, [](Checker& c) {
        const RunConfig cfg = figure_config("fig3");
        const DensityMatrix rho = build_state(*cfg.state);
        const WitnessReport rep = witness_scan(rho, *cfg.scan, *cfg.witness, 0);
        const std::vector<bool> p1 = negative_mask(rep, 1, false);
        const std::vector<bool> f1 = negative_mask(rep, 1, true);
        const std::vector<bool> f2 = negative_mask(rep, 2, true);

        std::size_t p1_count = 0, f1_count = 0;
        bool f1_covers_p1 = true;
        for (std::size_t i = 0; i < p1.size(); ++i) {
            p1_count += p1[i];
            f1_count += f1[i];
            if (p1[i] && !f1[i]) f1_covers_p1 = false;
        }
        c.require(p1.size() >= 201, "grid resolution");
        c.require(p1_count > 0, "(a) truncated quasiprobability k=1 has no negativity");
        c.require(f1_covers_p1 && f1_count > p1_count,
                  "(b) k=1 eigenvalue negativity does not strictly contain it");
        double p2_min = 1e300;
        for (const WitnessPoint& pt : rep.points)
            if (pt.k == 2) p2_min = std::min(p2_min, pt.p_trunc);
        c.require(p2_min >= -1e-10, "(c) truncated quasiprobability k=2 dips negative");
        c.require(std::count(f2.begin(), f2.end(), true) > 0, "(d) k=2 eigenvalue never negative");
    });

    criterion(3, "photon-added thermal scan sign pattern", 60.0, [](Checker& c) {
        const RunConfig cfg = figure_config("fig4");
        const DensityMatrix rho = build_state(*cfg.state);
        const WitnessReport rep = witness_scan(rho, *cfg.scan, *cfg.witness, 0);
        double p1_min = 1e300, p2_min = 1e300, f1_min = 1e300, f2_min = 1e300;
        for (const WitnessPoint& pt : rep.points) {
            if (pt.k == 1) {
                p1_min = std::min(p1_min, pt.p_trunc);
                f1_min = std::min(f1_min, pt.f_min);
            } else if (pt.k == 2) {
                p2_min = std::min(p2_min, pt.p_trunc);
                f2_min = std::min(f2_min, pt.f_min);
            }
        }
        c.require(p1_min >= -1e-10, "k=1 truncated quasiprobability negative");
        c.require(p2_min >= -1e-10, "k=2 truncated quasiprobability negative");
        c.require(f1_min >= -1e-10, "k=1 eigenvalue negative");
        c.require(f2_min < 0.0, "k=2 eigenvalue has no negativity");
    });

    criterion(4, "correlation chain vs analytic moments", 300.0, [](Checker& c) {
        const OpticalChainConfig cfg = mc_chain(1000000, 20240811);
        const ShotMatrix shots = simulate_run(cfg, ClassicalSignalModel::thermal(1.0));
        const DensityMatrix rho = tight(StateSpec::thermal(1.0), 1e-16);
        for (int m : {1, 2}) {
            const MomentEstimate est = gamma_to_moment(estimate_gamma(shots, m));
            const double want = moment_direct(rho, shots.alpha, m);
            c.require(std::abs(est.value - want) < 5.0 * est.std_error,
                      "order " + std::to_string(m) + " off by " +
                          std::to_string((est.value - want) / est.std_error) + " sigma");
        }
    });

    criterion(5, "dark-noise erasure and correlated control", 600.0, [](Checker& c) {
        OpticalChainConfig cfg = mc_chain(1000000, 515151);
        const ClassicalSignalModel signal = ClassicalSignalModel::thermal(1.0);
        // Mean current from the configured intensities (dark-free).
        const double mean_current =
            cfg.zeta * (std::norm(cfg.T) * signal.analytic_moment(implied_displacement(cfg), 1) +
                        std::norm(cfg.R * cfg.R_D) * cfg.beta_R * cfg.beta_R);
        const double dark_sd = 5.0 * mean_current;

        const ShotMatrix off = simulate_run(cfg, signal);
        OpticalChainConfig noisy = cfg;
        for (auto& det : noisy.detectors) det.dark_sd = dark_sd;
        const ShotMatrix on = simulate_run(noisy, signal);
        for (int m : {1, 2}) {
            const CorrelationRecord a = estimate_gamma(off, m);
            const CorrelationRecord b = estimate_gamma(on, m);
            const double err = std::sqrt(a.std_error * a.std_error + b.std_error * b.std_error);
            c.require(std::abs(a.gamma_hat - b.gamma_hat) < 5.0 * err,
                      "dark-on vs dark-off order " + std::to_string(m));
        }
        OpticalChainConfig shared = noisy;
        shared.correlated_dark = true;
        const ShotMatrix corr = simulate_run(shared, signal);
        const CorrelationRecord a = estimate_gamma(off, 1);
        const CorrelationRecord b = estimate_gamma(corr, 1);
        const double err = std::sqrt(a.std_error * a.std_error + b.std_error * b.std_error);
        c.require((b.gamma_hat - a.gamma_hat) / err > 10.0,
                  "correlated dark not detected (z = " +
                      std::to_string((b.gamma_hat - a.gamma_hat) / err) + ")");
    });

    criterion(6, "moment routes agree on random states", 60.0, [](Checker& c) {
        std::mt19937_64 rng(0xACCE97);
        std::normal_distribution<double> normal;
        std::uniform_real_distribution<double> uni(0.0, 1.0);
        for (int trial = 0; trial < 50; ++trial) {
            const int dim = 2 + static_cast<int>(rng() % 19);
            Eigen::MatrixXcd g(dim, dim);
            for (int i = 0; i < dim; ++i)
                for (int j = 0; j < dim; ++j) g(i, j) = Complex(normal(rng), normal(rng));
            Eigen::MatrixXcd m = g * g.adjoint();
            m /= m.trace().real();
            m = 0.5 * (m + m.adjoint().eval());
            const DensityMatrix rho = DensityMatrix::from_matrix(m, 1.0);
            const double r = 2.0 * std::sqrt(uni(rng));
            const double phi = 2.0 * M_PI * uni(rng);
            const Complex alpha(r * std::cos(phi), r * std::sin(phi));
            for (int order = 0; order <= 6; ++order) {
                const double a = moment_direct(rho, alpha, order);
                const double b = moment_via_displacement(rho, alpha, order);
                c.require(std::abs(a - b) / std::max(1.0, std::abs(a)) < 1e-9,
                          "trial " + std::to_string(trial) + " order " + std::to_string(order));
            }
        }
    });

    criterion(7, "moment series vs direct photocounting", 60.0, [](Checker& c) {
        struct Case {
            std::string name;
            DensityMatrix rho;
            int max_order;
        };
        std::vector<Case> cases;
        {
            StateSpec s = StateSpec::coherent(Complex(1.0, 0.0));
            s.cutoff = CutoffPolicy::adaptive(1e-20);
            cases.push_back({"coherent(1)", build_state(s), 60});
        }
        {
            StateSpec s = StateSpec::thermal(0.5);
            s.cutoff = CutoffPolicy::fixed(199);
            cases.push_back({"thermal(0.5)", build_state(s), 80});
        }
        {
            StateSpec s = StateSpec::thermal(0.7);
            s.cutoff = CutoffPolicy::fixed(383);
            cases.push_back({"thermal(0.7)", build_state(s), 150});
        }
        cases.push_back({"fock(1)", build_state(StateSpec::fock(1)), 12});
        cases.push_back({"fock(2)", build_state(StateSpec::fock(2)), 12});
        {
            StateSpec s = StateSpec::squeezed_vacuum(Complex(0.03, 0.0));
            s.cutoff = CutoffPolicy::adaptive(1e-20);
            cases.push_back({"squeezed(0.03)", build_state(s), 40});
        }
        for (const Case& cs : cases) {
            const MomentSet set = analytic_moments(cs.rho, Complex(0.0, 0.0), cs.max_order);
            for (double eta : {1.0, 0.5}) {
                const PhotocountDistribution direct =
                    photocount_direct(cs.rho, Complex(0.0, 0.0), eta);
                for (int n = 0; n <= 5; ++n) {
                    const SeriesResult res = photocount_from_moments_diag(set, eta, n);
                    if (eta == 1.0)
                        c.require(res.converged, cs.name + " diagnostic fails at unit efficiency");
                    if (!res.converged) continue;
                    const double want =
                        n < static_cast<int>(direct.probs.size()) ? direct.probs[n] : 0.0;
                    c.require(std::abs(res.value - want) < 1e-8,
                              cs.name + " p_" + std::to_string(n) + " eta " + std::to_string(eta));
                }
            }
        }
        // Boundary cases: converges at half efficiency, diverges at unity.
        StateSpec s = StateSpec::thermal(1.0);
        s.cutoff = CutoffPolicy::fixed(299);
        const DensityMatrix th1 = build_state(s);
        const MomentSet set = analytic_moments(th1, Complex(0.0, 0.0), 120);
        const PhotocountDistribution direct = photocount_direct(th1, Complex(0.0, 0.0), 0.5);
        const SeriesResult half = photocount_from_moments_diag(set, 0.5, 0);
        c.require(half.converged && std::abs(half.value - direct.probs[0]) < 1e-8,
                  "thermal(1.0) at half efficiency");
        c.require(!photocount_from_moments_diag(set, 1.0, 0).converged,
                  "thermal(1.0) series should not settle at unit efficiency");
    });

    criterion(8, "husimi identity and normalization", 60.0, [](Checker& c) {
        const DensityMatrix rho = tight(StateSpec::thermal(0.5), 1e-14);
        for (const Complex alpha : {Complex(0.0, 0.0), Complex(0.7, -0.4), Complex(-1.2, 0.5)}) {
            const double p0 = photocount_direct(rho, alpha, 1.0).probs[0];
            const double q = quasiprob_s(rho, alpha, -1.0, 1.0);
            c.require(std::abs(q - p0 / M_PI) < 1e-15 * std::max(1.0, std::abs(q)),
                      "single-term identity at alpha");
        }
        const double h = 0.16;
        const int half = static_cast<int>(std::ceil(4.0 / h));
        const int side = 2 * half + 1;
        std::vector<double> values(static_cast<std::size_t>(side) * side, 0.0);
        parallel_for_blocks(values.size(), 0, [&](std::size_t begin, std::size_t end) {
            for (std::size_t idx = begin; idx < end; ++idx) {
                const int i = static_cast<int>(idx) / side - half;
                const int j = static_cast<int>(idx) % side - half;
                values[idx] = quasiprob_s(rho, Complex(i * h, j * h), -1.0, 1.0);
            }
        });
        double sum = 0.0;
        for (double v : values) sum += v;
        sum *= h * h;
        c.require(std::abs(sum - 1.0) < 1e-3, "grid integral " + std::to_string(sum));
    });

    criterion(9, "classical mixtures stay unflagged", 120.0, [](Checker& c) {
        std::mt19937_64 rng(0xC1A551C);
        std::uniform_real_distribution<double> uni(0.0, 1.0);
        for (int trial = 0; trial < 100; ++trial) {
            // Random classical mixture: coherent amplitudes plus thermal parts.
            std::vector<std::pair<double, Complex>> coh;
            std::vector<std::pair<double, double>> th;
            const int n_coh = 1 + static_cast<int>(rng() % 3);
            const int n_th = static_cast<int>(rng() % 3);
            double total = 0.0;
            std::vector<double> weights;
            for (int i = 0; i < n_coh + n_th; ++i) {
                weights.push_back(0.05 + uni(rng));
                total += weights.back();
            }
            int idx = 0;
            for (int i = 0; i < n_coh; ++i, ++idx)
                coh.emplace_back(weights[static_cast<std::size_t>(idx)] / total,
                                 Complex(3.0 * uni(rng) - 1.5, 3.0 * uni(rng) - 1.5));
            for (int i = 0; i < n_th; ++i, ++idx)
                th.emplace_back(weights[static_cast<std::size_t>(idx)] / total, 1.2 * uni(rng));

            const auto classical_moment = [&](Complex alpha, int m) {
                double acc = 0.0;
                for (const auto& [wgt, beta] : coh) acc += wgt * std::pow(std::norm(beta - alpha), m);
                for (const auto& [wgt, nbar] : th) {
                    double t = 0.0;
                    for (int j = 0; j <= m; ++j) {
                        double binom = 1.0;
                        for (int i = 0; i < j; ++i) binom *= static_cast<double>(m - i) / (i + 1);
                        t += binom * binom * std::tgamma(j + 1.0) * std::pow(nbar, j) *
                             std::pow(std::norm(alpha), m - j);
                    }
                    acc += wgt * t;
                }
                return acc;
            };

            const int k = 1 + static_cast<int>(rng() % 3);
            const double w = 0.6 + 1.2 * uni(rng);
            for (int g = 0; g < 25; ++g) {
                const Complex alpha(3.0 * uni(rng) - 1.5, 3.0 * uni(rng) - 1.5);
                MomentSet set;
                set.alpha = alpha;
                set.values.resize(static_cast<std::size_t>(2 * k) + 1);
                for (int m = 0; m <= 2 * k; ++m)
                    set.values[static_cast<std::size_t>(m)] = classical_moment(alpha, m);
                const MomentMatrix mat = build_moment_matrix(set, k, w);
                const double f = min_eigenvalue_witness(mat).min_eigenvalue;
                c.require(f >= -1e-9 * std::max(1.0, mat.entries.norm()),
                          "false positive at trial " + std::to_string(trial));
            }
        }
    });

    criterion(10, "efficiency compensation invariance", 60.0, [](Checker& c) {
        struct Example {
            DensityMatrix rho;
            double w;
            double span;
        };
        std::vector<Example> examples;
        examples.push_back({tight(StateSpec::squeezed_vacuum(Complex(0.03, 0.0)), 1e-20), 1.5, 4.0});
        examples.push_back({tight(StateSpec::spats(0.8, 0.5), 1e-20), 1.3, 3.0});
        for (const Example& ex : examples) {
            for (double lambda : {0.25, 0.5, 0.75}) {
                for (int k : {1, 2}) {
                    for (int i = 0; i <= 80; ++i) {
                        const Complex alpha(-ex.span + 2.0 * ex.span * i / 80.0, 0.0);
                        const MomentSet set = analytic_moments(ex.rho, alpha, 2 * k);
                        MomentSet scaled = set;
                        for (int m = 0; m <= 2 * k; ++m)
                            scaled.values[static_cast<std::size_t>(m)] *= std::pow(lambda, m);
                        const MomentMatrix base = build_moment_matrix(set, k, ex.w);
                        const MomentMatrix shrunk = build_moment_matrix(scaled, k, ex.w);
                        const MomentMatrix comp =
                            build_moment_matrix(set, k, ex.w * std::sqrt(lambda));
                        const double f_base = min_eigenvalue_witness(base).min_eigenvalue;
                        const double f_shrunk = min_eigenvalue_witness(shrunk).min_eigenvalue;
                        const double f_comp = min_eigenvalue_witness(comp).min_eigenvalue;
                        const double tol = 1e-12 * std::max(1.0, base.entries.norm());
                        const auto sign = [tol](double x) { return x > tol ? 1 : (x < -tol ? -1 : 0); };
                        c.require(sign(f_shrunk) == sign(f_base),
                                  "sign flip under moment rescaling at alpha index " +
                                      std::to_string(i));
                        c.require(std::abs(f_shrunk - f_comp) <
                                      1e-10 * std::max(1.0, std::abs(f_comp)),
                                  "width compensation mismatch at alpha index " + std::to_string(i));
                    }
                }
            }
        }
    });

    std::printf("%d/%d criteria passed\n", 10 - g_failures, 10);
    return g_failures;
}
