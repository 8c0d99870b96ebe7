#include "multillum/limits.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace multillum {

void LimitQuery::validate(int min_n) const {
    require(n >= min_n, "limit query needs n >= " + std::to_string(min_n));
    require(d == 1 || d == 2, "limit query dimension must be 1 or 2");
    require(m_min > 0.0 && std::isfinite(m_min), "m_min must be positive");
    require(b_upper > 0.0, "b_upper must be positive");
    require(sigma > 0.0 && sigma < m_min * b_upper, "noise exceeds admissible range");
    require(b_lower > 0.0 && b_lower <= b_upper, "b_lower must lie in (0, b_upper]");
    require(omega_hat > 0.0 && omega_check > 0.0, "cutoff frequencies must be positive");
    require(c_supp > 0.0 && c_num > 0.0, "constants must be positive");
}

double location_threshold(int n, double sigma, double m_min) {
    require(n >= 1, "n must be positive");
    return std::exp(std::lgamma(n) + std::lgamma(n + 1.0) - std::lgamma(2.0 * n + 1.0)) * sigma / m_min;
}

double number_threshold(int n, double sigma, double m_min) {
    require(n >= 2, "number threshold needs n >= 2");
    return std::exp(2.0 * std::lgamma(n) - std::lgamma(2.0 * n)) * sigma / m_min;
}

double cluster_threshold(int n, double s, double sigma, double m_min) {
    require(n >= 1 && s > 0.0, "cluster threshold needs n >= 1 and s > 0");
    const double lg = 2.0 * std::log(pi) - std::log(2.0 * n) - 11.0 - 2.0 * std::log(s) - 10.0 * std::log(n + 1.0) -
                      (2.0 * n - 8.0) * std::log(2.0);
    return std::exp(lg) * sigma / m_min;
}

double location_limit_upper(const LimitQuery& q) {
    q.validate();
    return q.c_supp / q.omega_hat * std::pow(q.sigma / (q.m_min * q.b_lower), 1.0 / (2.0 * q.n - 1.0));
}

double location_limit_lower(const LimitQuery& q) {
    q.validate(1);
    return std::exp(-1.0) / q.omega_check * std::pow(q.sigma / (q.m_min * q.b_upper), 1.0 / (2.0 * q.n - 1.0));
}

double number_limit_upper(const LimitQuery& q) {
    q.validate();
    return q.c_num / q.omega_hat * std::pow(q.sigma / (q.m_min * q.b_lower), 1.0 / (2.0 * q.n - 2.0));
}

double number_limit_lower(const LimitQuery& q) {
    q.validate();
    return 2.0 * std::exp(-1.0) / q.omega_check * std::pow(q.sigma / (q.m_min * q.b_upper), 1.0 / (2.0 * q.n - 2.0));
}

ClusterLimit cluster_limit(const LimitQuery& q, double s) {
    q.validate();
    if (!(s > 2.0)) throw InvalidArgument("cluster collision: spacing factor s must exceed 2");
    const double e = 2.0 * q.n - 1.0;
    ClusterLimit c;
    c.tau = 0.2 * std::exp(-1.0) / (q.omega_check * std::pow(s, (2.0 * q.n + 1.0) / e)) *
            std::pow(q.sigma / (q.m_min * q.b_upper), 1.0 / e);
    c.spacing = s * c.tau;
    return c;
}

double unknown_pattern_limit(int n, double sigma, double m_min, double omega, double incoherence) {
    require(n >= 1, "n must be positive");
    require(sigma > 0.0 && m_min > 0.0 && omega > 0.0, "sigma, m_min and omega must be positive");
    if (!(incoherence > 0.0)) throw InvalidArgument("degenerate illumination matrix");
    return 2.2 * euler_e * pi / omega * std::pow(sigma / (incoherence * m_min), 1.0 / n);
}

double recovery_error_bound(double c, double omega, double srf, int n, double sigma, double m_min) {
    require(c > 0.0 && omega > 0.0 && srf > 0.0 && n >= 1 && m_min > 0.0 && sigma >= 0.0,
            "recovery bound inputs must be positive");
    return c / omega * std::pow(srf, 2.0 * n - 2.0) * sigma / m_min;
}

double support_ball_radius(int n, double omega_hat) {
    require(n >= 1 && omega_hat > 0.0, "support ball needs n >= 1 and omega_hat > 0");
    return (n - 1.0) / (2.0 * omega_hat);
}

bool support_in_ball(const DiscreteMeasure& mu, int n, double omega_hat) {
    const double r = support_ball_radius(n, omega_hat);
    return std::all_of(mu.locations().begin(), mu.locations().end(), [r](Point p) { return norm(p) < r; });
}

// ------------------------------------------------------------------ incoherence

namespace {

// One coordinate pinned to 1; the remaining coordinates are real in [-1, 1]
// or complex in the unit disk (stored as interleaved real and imaginary parts).
struct PinnedProblem {
    const Eigen::MatrixXcd& im;
    Eigen::Index pinned;
    std::vector<Eigen::Index> free;
    bool complex_vars;

    std::size_t dims() const { return free.size() * (complex_vars ? 2 : 1); }

    cplx coord(const std::vector<double>& v, std::size_t k) const {
        return complex_vars ? cplx(v[2 * k], v[2 * k + 1]) : cplx(v[k], 0.0);
    }

    // max_i |(IM x)_i| and the row attaining it.
    double value(const std::vector<double>& v, Eigen::Index* row = nullptr, cplx* sum = nullptr) const {
        double worst = -1.0;
        for (Eigen::Index i = 0; i < im.rows(); ++i) {
            cplx s = im(i, pinned);
            for (std::size_t k = 0; k < free.size(); ++k) s += im(i, free[k]) * coord(v, k);
            if (std::abs(s) > worst) {
                worst = std::abs(s);
                if (row) *row = i;
                if (sum) *sum = s;
            }
        }
        return worst;
    }

    std::vector<double> subgradient(const std::vector<double>& v) const {
        Eigen::Index i = 0;
        cplx s;
        const double f = value(v, &i, &s);
        std::vector<double> g(dims(), 0.0);
        if (f == 0.0) return g;
        for (std::size_t k = 0; k < free.size(); ++k) {
            const cplx w = std::conj(s) * im(i, free[k]) / f;
            if (complex_vars) {
                g[2 * k] = w.real();
                g[2 * k + 1] = -w.imag();
            } else {
                g[k] = w.real();
            }
        }
        return g;
    }

    // Gradient of a violated feasibility constraint, empty when v is feasible.
    std::vector<double> violated(const std::vector<double>& v) const {
        std::vector<double> g(dims(), 0.0);
        for (std::size_t k = 0; k < free.size(); ++k) {
            if (complex_vars) {
                const double r = std::hypot(v[2 * k], v[2 * k + 1]);
                if (r > 1.0) {
                    g[2 * k] = v[2 * k] / r;
                    g[2 * k + 1] = v[2 * k + 1] / r;
                    return g;
                }
            } else if (std::abs(v[k]) > 1.0) {
                g[k] = v[k] > 0.0 ? 1.0 : -1.0;
                return g;
            }
        }
        return {};
    }
};

// Coarse stage: uniform grid on the box, or phases x moduli for complex coordinates.
std::pair<double, std::vector<double>> coarse_search(const PinnedProblem& pp, const IncoherenceOptions& opts) {
    const std::size_t m = pp.free.size();
    std::vector<double> v(pp.dims(), 0.0), best_v = v;
    double best = pp.value(v);
    if (m == 0) return {best, best_v};
    const std::size_t per_coord = pp.complex_vars ? static_cast<std::size_t>(opts.phases) : 1;
    const double levels = std::pow(static_cast<double>(opts.grid_budget), 1.0 / static_cast<double>(m));
    const std::size_t g = std::clamp<std::size_t>(
        static_cast<std::size_t>(levels / static_cast<double>(per_coord)), 3, 2001);
    const std::size_t states = pp.complex_vars ? per_coord * g : g;
    std::vector<std::size_t> idx(m, 0);
    while (true) {
        for (std::size_t k = 0; k < m; ++k) {
            if (pp.complex_vars) {
                const double r = static_cast<double>(idx[k] / per_coord) / static_cast<double>(g - 1);
                const double phase = 2.0 * pi * static_cast<double>(idx[k] % per_coord) / static_cast<double>(per_coord);
                v[2 * k] = r * std::cos(phase);
                v[2 * k + 1] = r * std::sin(phase);
            } else {
                v[k] = -1.0 + 2.0 * static_cast<double>(idx[k]) / static_cast<double>(g - 1);
            }
        }
        const double f = pp.value(v);
        if (f < best) {
            best = f;
            best_v = v;
        }
        std::size_t k = 0;
        while (k < m && ++idx[k] == states) idx[k++] = 0;
        if (k == m) break;
    }
    return {best, best_v};
}

// Local stage. The pinned problem is convex, so a central-cut ellipsoid started on a
// ball covering the whole feasible set converges to its global minimum; a single
// real coordinate uses ternary search instead.
double refine(const PinnedProblem& pp, double best, std::vector<double> start, int iterations) {
    const std::size_t d = pp.dims();
    if (d == 0) return best;
    if (d == 1) {
        double lo = -1.0, hi = 1.0;
        for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
            const double a = lo + (hi - lo) / 3.0, b = hi - (hi - lo) / 3.0;
            if (pp.value({a}) <= pp.value({b})) hi = b; else lo = a;
        }
        return std::min(best, pp.value({0.5 * (lo + hi)}));
    }
    // The ellipsoid {c + B u : |u| <= 1} is kept in factored form so it stays positive definite.
    Eigen::VectorXd c = Eigen::Map<Eigen::VectorXd>(start.data(), static_cast<Eigen::Index>(d));
    const double radius = 2.0 * std::sqrt(static_cast<double>(pp.free.size()));
    Eigen::MatrixXd B =
        Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d)) * radius;
    const double nd = static_cast<double>(d);
    const double expand = nd / std::sqrt(nd * nd - 1.0);
    const double squeeze = std::sqrt((nd - 1.0) / (nd + 1.0)) - 1.0;
    std::vector<double> v(d);
    for (int it = 0; it < iterations; ++it) {
        for (std::size_t k = 0; k < d; ++k) v[k] = c(static_cast<Eigen::Index>(k));
        std::vector<double> g = pp.violated(v);
        if (g.empty()) {
            best = std::min(best, pp.value(v));
            g = pp.subgradient(v);
        }
        const Eigen::VectorXd gv = Eigen::Map<Eigen::VectorXd>(g.data(), static_cast<Eigen::Index>(d));
        Eigen::VectorXd w = B.transpose() * gv;
        const double norm_w = w.norm();
        if (!(norm_w > 1e-300)) break;
        w /= norm_w;
        const Eigen::VectorXd bw = B * w;
        c -= bw / (nd + 1.0);
        B = expand * (B + squeeze * bw * w.transpose());
        if (B.norm() < 1e-15) break;
    }
    return best;
}

double incoherence_impl(const Eigen::MatrixXcd& im, const IncoherenceOptions& opts) {
    require(im.rows() >= 1 && im.cols() >= 1, "illumination matrix needs N >= 1 and n >= 1");
    require(im.allFinite(), "illumination matrix has non-finite entries");
    require(opts.phases >= 1 && opts.grid_budget >= 1, "incoherence search needs a positive budget");
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index p = 0; p < im.cols(); ++p) {
        PinnedProblem pp{im, p, {}, opts.complex_search};
        for (Eigen::Index j = 0; j < im.cols(); ++j)
            if (j != p) pp.free.push_back(j);
        auto [value, at] = coarse_search(pp, opts);
        best = std::min(best, refine(pp, value, at, opts.iterations));
    }
    return best;
}

}  // namespace

double illumination_incoherence(const Eigen::MatrixXcd& im, const IncoherenceOptions& opts) {
    return incoherence_impl(im, opts);
}

double illumination_incoherence(const Eigen::MatrixXd& im, const IncoherenceOptions& opts) {
    return incoherence_impl(im.cast<cplx>(), opts);
}

LimitRow evaluate_limits(const PsfMulti& pm, int n, double sigma, double m_min, double b_lower, double c_supp,
                         double c_num, double s) {
    LimitRow row;
    row.n = n;
    LimitQuery q;
    q.n = n;
    q.sigma = sigma;
    q.m_min = m_min;
    q.b_upper = pm.b_upper();
    q.b_lower = b_lower;
    q.c_supp = c_supp;
    q.c_num = c_num;
    const CutoffReport cut = essential_cutoffs(pm, b_lower, location_threshold(n, sigma, m_min));
    q.omega_hat = cut.omega_hat;
    row.omega_hat = cut.omega_hat;
    row.omega_check_location = omega_check_at(pm, location_threshold(n, sigma, m_min));
    row.omega_check_number = omega_check_at(pm, number_threshold(n, sigma, m_min));
    row.omega_check_cluster = omega_check_at(pm, cluster_threshold(n, s, sigma, m_min));
    q.omega_check = row.omega_check_location;
    row.location_upper = location_limit_upper(q);
    row.location_lower = location_limit_lower(q);
    row.number_upper = number_limit_upper(q);
    q.omega_check = row.omega_check_number;
    row.number_lower = number_limit_lower(q);
    q.omega_check = row.omega_check_cluster;
    const ClusterLimit c = cluster_limit(q, s);
    row.cluster_tau = c.tau;
    row.cluster_spacing = c.spacing;
    return row;
}

}  // namespace multillum
