#include "uhcm/fock.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <string>

#include "special.hpp"

namespace uhcm {

namespace {

constexpr double kHermTol = 1e-12;
constexpr double kTraceTol = 1e-10;
constexpr double kPsdTol = -1e-8;
// The displacement working dimension is bounded separately from the state
// builder cap; memory stays modest even at the limit.
constexpr int kDisplacementCap = 2048;

Eigen::MatrixXcd pure_state(const Eigen::VectorXcd& c) { return c * c.adjoint(); }

Eigen::MatrixXcd raw_vacuum(int dim) {
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(dim, dim);
    m(0, 0) = 1.0;
    return m;
}

Eigen::MatrixXcd raw_fock(int n, int dim) {
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(dim, dim);
    m(n, n) = 1.0;
    return m;
}

Eigen::MatrixXcd raw_coherent(Complex beta, int dim) {
    Eigen::VectorXcd c(dim);
    c(0) = std::exp(-0.5 * std::norm(beta));
    for (int n = 0; n + 1 < dim; ++n) c(n + 1) = c(n) * beta / std::sqrt(n + 1.0);
    return pure_state(c);
}

Eigen::VectorXd thermal_diagonal(double nbar, int dim) {
    Eigen::VectorXd p(dim);
    const double ratio = nbar / (1.0 + nbar);
    p(0) = 1.0 / (1.0 + nbar);
    for (int n = 0; n + 1 < dim; ++n) p(n + 1) = p(n) * ratio;
    return p;
}

Eigen::MatrixXcd raw_thermal(double nbar, int dim) {
    return thermal_diagonal(nbar, dim).cast<Complex>().asDiagonal();
}

// Even-photon expansion of the squeezed vacuum S(xi)|0>, with
// S(xi) = exp[(xi* a^2 - xi a^+2)/2] and xi = r e^{i theta}.
Eigen::MatrixXcd raw_squeezed_vacuum(Complex xi, int dim) {
    const double r = std::abs(xi);
    if (r == 0.0) return raw_vacuum(dim);
    const Complex phase = xi / r;
    const Complex step = -phase * std::tanh(r);
    Eigen::VectorXcd c = Eigen::VectorXcd::Zero(dim);
    c(0) = 1.0 / std::sqrt(std::cosh(r));
    for (int n = 0; 2 * (n + 1) < dim; ++n) {
        const double k = 2.0 * n;
        c(2 * (n + 1)) = c(2 * n) * step * std::sqrt((k + 1.0) * (k + 2.0)) / (k + 2.0);
    }
    return pure_state(c);
}

// Photon-added thermal state a^+ rho_th a, normalized. The added photon turns
// the geometric diagonal p_k into n p_{n-1} / (1 + nbar).
Eigen::MatrixXcd raw_spats(double nbar, int dim) {
    const Eigen::VectorXd p = thermal_diagonal(nbar, dim);
    Eigen::VectorXd s = Eigen::VectorXd::Zero(dim);
    for (int n = 1; n < dim; ++n) s(n) = n * p(n - 1) / (1.0 + nbar);
    return s.cast<Complex>().asDiagonal();
}

Eigen::MatrixXcd build_raw(const StateSpec& spec, int dim) {
    switch (spec.kind) {
        case StateSpec::Kind::vacuum: return raw_vacuum(dim);
        case StateSpec::Kind::fock: return raw_fock(spec.n, dim);
        case StateSpec::Kind::coherent: return raw_coherent(spec.beta, dim);
        case StateSpec::Kind::thermal: return raw_thermal(spec.nbar, dim);
        case StateSpec::Kind::squeezed_vacuum: return raw_squeezed_vacuum(spec.xi, dim);
        case StateSpec::Kind::spats: return raw_spats(spec.nbar, dim);
        case StateSpec::Kind::custom: return spec.matrix;
    }
    throw ConfigError("domain error: unknown state kind");
}

int initial_dim(const StateSpec& spec) {
    switch (spec.kind) {
        case StateSpec::Kind::vacuum: return 2;
        case StateSpec::Kind::fock: return spec.n + 2;
        case StateSpec::Kind::coherent: {
            const double a = std::abs(spec.beta);
            return 2 + static_cast<int>(std::ceil(a * a + 6.0 * a + 6.0));
        }
        case StateSpec::Kind::thermal:
        case StateSpec::Kind::spats: {
            if (spec.nbar <= 0.0) return 4;
            const double ratio = spec.nbar / (1.0 + spec.nbar);
            const double tol = spec.cutoff.tail_tol > 0.0 ? spec.cutoff.tail_tol : 1e-10;
            const double guess = std::log(tol * (1.0 + spec.nbar)) / std::log(ratio);
            return 4 + static_cast<int>(std::clamp(guess, 0.0, 500.0));
        }
        case StateSpec::Kind::squeezed_vacuum: return 12;
        case StateSpec::Kind::custom: return static_cast<int>(spec.matrix.rows());
    }
    return 4;
}

void check_params(const StateSpec& spec) {
    if (!(spec.loss >= 0.0 && spec.loss <= 1.0))
        throw ConfigError("domain error: state loss must lie in [0, 1]");
    switch (spec.kind) {
        case StateSpec::Kind::fock:
            if (spec.n < 0) throw ConfigError("domain error: negative Fock level");
            break;
        case StateSpec::Kind::thermal:
        case StateSpec::Kind::spats:
            if (spec.nbar < 0.0) throw ConfigError("domain error: negative mean photon number");
            break;
        case StateSpec::Kind::custom:
            if (spec.matrix.rows() == 0 || spec.matrix.rows() != spec.matrix.cols())
                throw ConfigError("domain error: custom state needs a square matrix");
            break;
        default: break;
    }
    if (spec.cutoff.kind == CutoffPolicy::Kind::fixed && spec.cutoff.n_max < 1)
        throw ConfigError("domain error: fixed cutoff needs n_max >= 1");
    if (spec.cutoff.kind == CutoffPolicy::Kind::adaptive && !(spec.cutoff.tail_tol > 0.0))
        throw ConfigError("domain error: adaptive cutoff needs tail_tol > 0");
}

}  // namespace

DensityMatrix DensityMatrix::from_matrix(Eigen::MatrixXcd entries, double tail_tol) {
    DensityMatrix rho = unchecked(std::move(entries), tail_tol);
    rho.validate(tail_tol);
    return rho;
}

DensityMatrix DensityMatrix::unchecked(Eigen::MatrixXcd entries, double tail_tol) {
    DensityMatrix rho;
    rho.entries_ = std::move(entries);
    rho.tail_tol_ = tail_tol;
    return rho;
}

double DensityMatrix::tail_mass() const {
    const int d = dim();
    return d > 0 ? entries_(d - 1, d - 1).real() : 0.0;
}

void DensityMatrix::validate(double tail_tol) const {
    const int d = dim();
    if (d < 1) throw ConfigError("domain error: empty density matrix");
    if (!entries_.allFinite()) throw NumericError("numerical inconsistency: non-finite entries");
    const double herm = (entries_ - entries_.adjoint()).cwiseAbs().maxCoeff();
    if (herm >= kHermTol)
        throw NumericError("numerical inconsistency: hermiticity violated by " + std::to_string(herm));
    const double tr_dev = std::abs(entries_.trace() - Complex(1.0, 0.0));
    if (tr_dev >= kTraceTol)
        throw NumericError("numerical inconsistency: trace deviates by " + std::to_string(tr_dev));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(entries_, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() <= kPsdTol)
        throw NumericError("numerical inconsistency: negative eigenvalue " +
                           std::to_string(es.eigenvalues().minCoeff()));
    if (tail_tol < 1.0 && tail_mass() >= tail_tol)
        throw TruncationError("truncation failure: tail mass " + std::to_string(tail_mass()) +
                              " exceeds tolerance");
}

StateSpec StateSpec::vacuum() { return {}; }
StateSpec StateSpec::fock(int n) {
    StateSpec s;
    s.kind = Kind::fock;
    s.n = n;
    return s;
}
StateSpec StateSpec::coherent(Complex beta) {
    StateSpec s;
    s.kind = Kind::coherent;
    s.beta = beta;
    return s;
}
StateSpec StateSpec::thermal(double nbar) {
    StateSpec s;
    s.kind = Kind::thermal;
    s.nbar = nbar;
    return s;
}
StateSpec StateSpec::squeezed_vacuum(Complex xi) {
    StateSpec s;
    s.kind = Kind::squeezed_vacuum;
    s.xi = xi;
    return s;
}
StateSpec StateSpec::spats(double nbar, double loss) {
    StateSpec s;
    s.kind = Kind::spats;
    s.nbar = nbar;
    s.loss = loss;
    return s;
}
StateSpec StateSpec::custom(Eigen::MatrixXcd matrix, double tail_tol) {
    StateSpec s;
    s.kind = Kind::custom;
    s.matrix = std::move(matrix);
    s.cutoff = CutoffPolicy::adaptive(tail_tol);
    return s;
}

DensityMatrix build_state(const StateSpec& spec) {
    check_params(spec);
    const CutoffPolicy& pol = spec.cutoff;

    int dim = 0;
    Eigen::MatrixXcd raw;
    if (spec.kind == StateSpec::Kind::custom) {
        raw = spec.matrix;
        dim = static_cast<int>(raw.rows());
    } else if (pol.kind == CutoffPolicy::Kind::fixed) {
        dim = pol.n_max + 1;
        if (dim > pol.hard_cap) throw TruncationError("truncation failure: fixed cutoff above cap");
        if (spec.kind == StateSpec::Kind::fock && spec.n >= dim)
            throw ConfigError("domain error: Fock level exceeds fixed cutoff");
        raw = build_raw(spec, dim);
    } else {
        dim = std::min(initial_dim(spec), pol.hard_cap);
        for (;;) {
            raw = build_raw(spec, dim);
            // Stricter than the stored-state invariant: even-photon states
            // have a vanishing last diagonal at odd top level, so look at the
            // last two entries when deciding whether to stop growing.
            const double tail = std::max(raw(dim - 1, dim - 1).real(),
                                         dim > 1 ? raw(dim - 2, dim - 2).real() : 0.0);
            if (tail < pol.tail_tol) break;
            if (dim >= pol.hard_cap)
                throw TruncationError("truncation failure: adaptive cutoff cap reached at dim " +
                                      std::to_string(dim));
            dim = std::min(pol.hard_cap, static_cast<int>(std::ceil(dim * 1.5)) + 1);
        }
    }

    const double tr = raw.trace().real();
    if (!(tr > 0.0)) throw NumericError("numerical inconsistency: nonpositive trace");
    raw /= tr;
    if (spec.loss < 1.0) {
        DensityMatrix pre = DensityMatrix::unchecked(std::move(raw), 1.0);
        raw = loss_channel(pre, spec.loss).entries();
    }
    const double tol = (spec.kind == StateSpec::Kind::custom || pol.kind == CutoffPolicy::Kind::fixed)
                           ? 1.0
                           : pol.tail_tol;
    return DensityMatrix::from_matrix(std::move(raw), tol);
}

int displaced_dim(int dim, Complex alpha) {
    const double a = std::abs(alpha);
    const int pad = static_cast<int>(std::ceil(4.0 * (a * a + a * std::sqrt(static_cast<double>(dim)))));
    return dim + pad;
}

Eigen::MatrixXcd displacement_columns(Complex alpha, int rows, int cols) {
    if (rows < cols) throw ConfigError("domain error: displacement block needs rows >= cols");
    Eigen::MatrixXcd d(rows, cols);
    if (alpha == Complex(0.0, 0.0)) {
        d.setZero();
        for (int n = 0; n < cols; ++n) d(n, n) = 1.0;
        return d;
    }
    // Top row <0|D(alpha)|n> = (-alpha*)^n e^{-|alpha|^2/2} / sqrt(n!).
    d(0, 0) = std::exp(-0.5 * std::norm(alpha));
    for (int n = 0; n + 1 < cols; ++n) d(0, n + 1) = d(0, n) * (-std::conj(alpha)) / std::sqrt(n + 1.0);
    // Downward fill from a D = D (a + alpha):
    //   sqrt(m+1) <m+1|D|n> = sqrt(n) <m|D|n-1> + alpha <m|D|n>.
    // All entries are matrix elements of a unitary, hence bounded by 1; the
    // recurrence reproduces the associated-Laguerre closed form without the
    // overflow of evaluating the polynomials directly.
    for (int m = 0; m + 1 < rows; ++m) {
        const double inv = 1.0 / std::sqrt(m + 1.0);
        d(m + 1, 0) = alpha * d(m, 0) * inv;
        for (int n = 1; n < cols; ++n)
            d(m + 1, n) = (std::sqrt(static_cast<double>(n)) * d(m, n - 1) + alpha * d(m, n)) * inv;
    }
    return d;
}

Eigen::MatrixXcd displacement_operator(Complex alpha, int dim) {
    return displacement_columns(alpha, dim, dim);
}

namespace {

int grown_dim(int big) {
    return std::min(kDisplacementCap, static_cast<int>(std::ceil(big * 1.35)) + 8);
}

}  // namespace

DensityMatrix displace(const DensityMatrix& rho, Complex alpha) {
    if (alpha == Complex(0.0, 0.0)) return rho;
    const int d = rho.dim();
    int big = displaced_dim(d, alpha);
    if (big > kDisplacementCap)
        throw TruncationError("truncation failure: displaced dimension " + std::to_string(big) +
                              " exceeds cap");
    for (;;) {
        const Eigen::MatrixXcd dlow = displacement_columns(-alpha, big, d);
        Eigen::MatrixXcd out = dlow * rho.entries() * dlow.adjoint();
        out = 0.5 * (out + out.adjoint().eval());
        const double deficit = std::abs(out.trace().real() - 1.0);
        if (deficit < 1e-9) return DensityMatrix::unchecked(std::move(out), rho.tail_tol());
        if (big >= kDisplacementCap)
            throw TruncationError("truncation failure: displacement lost trace " +
                                  std::to_string(deficit) + " at the dimension cap");
        big = grown_dim(big);
    }
}

Eigen::VectorXd displaced_diagonal_at(const DensityMatrix& rho, Complex alpha, int working_dim) {
    const int d = rho.dim();
    if (working_dim < d) throw ConfigError("domain error: working dimension below state dimension");
    if (working_dim > kDisplacementCap)
        throw TruncationError("truncation failure: displaced dimension " +
                              std::to_string(working_dim) + " exceeds cap");
    if (alpha == Complex(0.0, 0.0)) {
        Eigen::VectorXd diag = Eigen::VectorXd::Zero(working_dim);
        diag.head(d) = rho.entries().diagonal().real();
        return diag;
    }
    const Eigen::MatrixXcd dlow = displacement_columns(-alpha, working_dim, d);
    const Eigen::MatrixXcd w = dlow * rho.entries();
    Eigen::VectorXd diag(working_dim);
    for (int k = 0; k < working_dim; ++k)
        diag(k) = w.row(k).cwiseProduct(dlow.row(k).conjugate()).sum().real();
    return diag;
}

Eigen::VectorXd displaced_diagonal(const DensityMatrix& rho, Complex alpha) {
    if (alpha == Complex(0.0, 0.0)) return rho.entries().diagonal().real();
    int big = std::min(kDisplacementCap, displaced_dim(rho.dim(), alpha));
    for (;;) {
        Eigen::VectorXd diag = displaced_diagonal_at(rho, alpha, big);
        const double deficit = std::abs(diag.sum() - 1.0);
        if (deficit < 1e-13 || big >= kDisplacementCap) return diag;
        big = grown_dim(big);
    }
}

DensityMatrix loss_channel(const DensityMatrix& rho, double eta) {
    if (!(eta >= 0.0 && eta <= 1.0)) throw ConfigError("domain error: efficiency outside [0, 1]");
    const int d = rho.dim();
    if (eta == 1.0) return rho;
    if (eta == 0.0) {
        Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(d, d);
        out(0, 0) = rho.entries().trace();
        return DensityMatrix::unchecked(std::move(out), rho.tail_tol());
    }
    // Kraus weights w(n, k) = sqrt( C(n+k, k) eta^n (1-eta)^k ): amplitude for
    // keeping n of n+k photons.
    const double leta = std::log(eta);
    const double lloss = std::log1p(-eta);
    Eigen::MatrixXd w(d, d);
    for (int n = 0; n < d; ++n)
        for (int k = 0; n + k < d; ++k)
            w(n, k) = std::exp(0.5 * (detail::log_choose(n + k, k) + n * leta + k * lloss));
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(d, d);
    for (int n = 0; n < d; ++n) {
        for (int m = n; m < d; ++m) {
            Complex acc = 0.0;
            const int kmax = d - 1 - m;
            for (int k = 0; k <= kmax; ++k) acc += w(n, k) * w(m, k) * rho.entry(n + k, m + k);
            out(n, m) = acc;
            if (m != n) out(m, n) = std::conj(acc);
        }
    }
    return DensityMatrix::unchecked(std::move(out), rho.tail_tol());
}

}  // namespace uhcm
