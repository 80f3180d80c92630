#include "uhcm/scan.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "uhcm/moments.hpp"
#include "uhcm/parallel.hpp"
#include "uhcm/version.hpp"

namespace uhcm {

void ScanSpec::validate() const {
    if (!alphas.empty()) return;
    if (points < 2) throw ConfigError("domain error: scan needs at least two points");
    if (!(min < max)) throw ConfigError("domain error: scan range must satisfy min < max");
    if (envelope_c < 0.0) throw ConfigError("domain error: negative envelope factor");
}

void WitnessParams::validate() const {
    if (k_list.empty()) throw ConfigError("domain error: empty witness order list");
    for (int k : k_list)
        if (k < 1) throw ConfigError("domain error: witness order must be >= 1");
    if (!(w > 0.0)) throw ConfigError("domain error: filter width must be positive");
    if (!(q > 2.0)) throw ConfigError("domain error: filter exponent must satisfy q > 2");
    if (resamples < 1) throw ConfigError("domain error: need at least one resample");
}

std::vector<Complex> scan_grid(const ScanSpec& spec) {
    spec.validate();
    if (!spec.alphas.empty()) return spec.alphas;
    std::vector<Complex> grid;
    const double step = (spec.max - spec.min) / (spec.points - 1);
    if (spec.axis == ScanSpec::Axis::grid2d) {
        grid.reserve(static_cast<std::size_t>(spec.points) * static_cast<std::size_t>(spec.points));
        for (int i = 0; i < spec.points; ++i)
            for (int j = 0; j < spec.points; ++j)
                grid.emplace_back(spec.min + i * step, spec.min + j * step);
        return grid;
    }
    grid.reserve(static_cast<std::size_t>(spec.points));
    for (int i = 0; i < spec.points; ++i) {
        const double t = spec.min + i * step;
        grid.emplace_back(spec.axis == ScanSpec::Axis::real_axis ? Complex(t, 0.0)
                                                                 : Complex(0.0, t));
    }
    return grid;
}

WitnessReport witness_scan(const DensityMatrix& rho, const ScanSpec& scan,
                           const WitnessParams& params, int threads) {
    params.validate();
    const std::vector<Complex> grid = scan_grid(scan);
    const int k_max = *std::max_element(params.k_list.begin(), params.k_list.end());

    std::vector<FilterVector> filters;
    filters.reserve(params.k_list.size());
    for (int k : params.k_list) filters.push_back(filter_vector(params.q, params.w, k));

    WitnessReport report;
    report.points.resize(grid.size() * params.k_list.size());
    parallel_for_blocks(grid.size(), threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const Complex alpha = grid[i];
            const MomentSet moments = analytic_moments(rho, alpha, 2 * k_max);
            const double env = std::exp(-scan.envelope_c * std::norm(alpha));
            for (std::size_t ki = 0; ki < params.k_list.size(); ++ki) {
                const int k = params.k_list[ki];
                const MomentMatrix mat = build_moment_matrix(moments, k, params.w);
                const EigenResult eig = min_eigenvalue_witness(mat);
                WitnessPoint pt;
                pt.alpha = alpha;
                pt.k = k;
                pt.w = params.w;
                pt.q = params.q;
                pt.p_trunc = truncated_regularized_p(mat, filters[ki]);
                pt.f_min = eig.min_eigenvalue;
                pt.h_opt = eig.eigenvector;
                pt.envelope = env;
                // The normalized filter is one feasible unit vector, so the
                // minimum can never exceed the quadratic form.
                if (pt.f_min > pt.p_trunc + 1e-9 * std::max(1.0, std::abs(pt.p_trunc)))
                    throw NumericError("numerical inconsistency: minimal eigenvalue above filter form");
                report.points[i * params.k_list.size() + ki] = std::move(pt);
            }
        }
    });
    return report;
}

std::string witness_svg(const WitnessReport& report, const std::vector<int>& k_list) {
    const double width = 860.0, height = 520.0;
    const double ml = 70.0, mr = 220.0, mt = 30.0, mb = 50.0;
    const double pw = width - ml - mr, ph = height - mt - mb;

    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const WitnessPoint& pt : report.points) {
        const double x = pt.alpha.imag() != 0.0 ? pt.alpha.imag() : pt.alpha.real();
        xmin = std::min(xmin, x);
        xmax = std::max(xmax, x);
        ymin = std::min({ymin, pt.p_trunc * pt.envelope, pt.f_min * pt.envelope});
        ymax = std::max({ymax, pt.p_trunc * pt.envelope, pt.f_min * pt.envelope});
    }
    if (!(xmax > xmin)) xmax = xmin + 1.0;
    const double pad = 0.05 * (ymax - ymin + 1e-12);
    ymin -= pad;
    ymax += pad;

    const auto sx = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * pw; };
    const auto sy = [&](double y) { return mt + (ymax - y) / (ymax - ymin) * ph; };

    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b", "#17becf", "#e377c2"};
    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
    svg << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw << "\" height=\"" << ph
        << "\" fill=\"none\" stroke=\"#333\"/>\n";
    if (ymin < 0.0 && ymax > 0.0)
        svg << "<line x1=\"" << ml << "\" y1=\"" << sy(0.0) << "\" x2=\"" << ml + pw << "\" y2=\""
            << sy(0.0) << "\" stroke=\"#999\" stroke-dasharray=\"6 4\"/>\n";

    int color = 0;
    double legend_y = mt + 16.0;
    for (int k : k_list) {
        for (int which = 0; which < 2; ++which) {
            std::ostringstream path;
            for (const WitnessPoint& pt : report.points) {
                if (pt.k != k) continue;
                const double x = pt.alpha.imag() != 0.0 ? pt.alpha.imag() : pt.alpha.real();
                const double y = (which == 0 ? pt.p_trunc : pt.f_min) * pt.envelope;
                path << (path.tellp() == 0 ? 'M' : 'L') << sx(x) << ' ' << sy(y) << ' ';
            }
            const char* c = palette[color % 8];
            svg << "<path d=\"" << path.str() << "\" fill=\"none\" stroke=\"" << c
                << "\" stroke-width=\"1.6\"" << (which == 1 ? " stroke-dasharray=\"4 3\"" : "")
                << "/>\n";
            svg << "<text x=\"" << ml + pw + 12.0 << "\" y=\"" << legend_y
                << "\" font-family=\"sans-serif\" font-size=\"13\" fill=\"" << c << "\">"
                << (which == 0 ? "P_trunc" : "F_min") << " (k=" << k << ")</text>\n";
            legend_y += 18.0;
            ++color;
        }
    }
    svg << "<text x=\"" << ml + pw / 2.0 << "\" y=\"" << height - 12.0
        << "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">alpha</text>\n";
    svg << "</svg>\n";
    return svg.str();
}

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string RunManifest::to_json() const {
    nlohmann::json j;
    char hash[20];
    std::snprintf(hash, sizeof(hash), "%016llx", static_cast<unsigned long long>(config_hash));
    j["config_hash"] = hash;
    j["seed"] = seed;
    j["tool_version"] = tool_version;
    j["created_utc"] = created_utc;
    j["inputs"] = inputs;
    j["outputs"] = outputs;
    return j.dump(2) + "\n";
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("domain error: cannot open " + path.string());
    out << content;
    if (!out) throw ConfigError("domain error: short write to " + path.string());
}

}  // namespace uhcm
