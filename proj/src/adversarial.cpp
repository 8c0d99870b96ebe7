#include "multillum/adversarial.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/SVD>

#include "multillum/limits.hpp"

namespace multillum {

namespace {

constexpr double rank_tolerance = 1e-12;

double log_factorial(int k) { return std::lgamma(k + 1.0); }

void require_distinct_increasing(std::span<const double> t) {
    for (double v : t) require(std::isfinite(v), "nodes must be finite");
    for (std::size_t j = 1; j < t.size(); ++j)
        require(t[j] > t[j - 1], "nodes must be strictly increasing and distinct");
}

}  // namespace

MomentSystem::MomentSystem(std::vector<double> t, int deg) : nodes(std::move(t)), degree(deg) {
    require(!nodes.empty(), "moment system needs at least one node");
    require(degree >= 0, "moment degree must be non-negative");
    require_distinct_increasing(nodes);
}

Eigen::MatrixXd MomentSystem::matrix() const {
    Eigen::MatrixXd a(degree + 1, static_cast<Eigen::Index>(nodes.size()));
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
        double p = 1.0;
        for (int k = 0; k <= degree; ++k) {
            a(k, j) = p;
            p *= nodes[static_cast<std::size_t>(j)];
        }
    }
    return a;
}

std::vector<double> lagrange_weights(std::span<const double> nodes, double t) {
    require(!nodes.empty(), "lagrange weights need at least one node");
    for (std::size_t i = 0; i < nodes.size(); ++i)
        for (std::size_t j = i + 1; j < nodes.size(); ++j)
            if (nodes[i] == nodes[j]) throw InvalidArgument("duplicate nodes");
    std::vector<double> w(nodes.size(), 1.0);
    for (std::size_t j = 0; j < nodes.size(); ++j)
        for (std::size_t q = 0; q < nodes.size(); ++q)
            if (q != j) w[j] *= (t - nodes[q]) / (nodes[j] - nodes[q]);
    return w;
}

Eigen::VectorXd nullspace_amplitudes(const MomentSystem& sys) {
    const auto k = static_cast<Eigen::Index>(sys.nodes.size());
    require(k == sys.degree + 2, "null vector needs exactly degree + 2 nodes");
    // The null space of the moment matrix is invariant under affine maps of the nodes.
    const double lo = sys.nodes.front(), hi = sys.nodes.back();
    const double c = 0.5 * (lo + hi);
    const double h = 0.5 * (hi - lo);
    std::vector<double> scaled(sys.nodes.size());
    for (std::size_t j = 0; j < scaled.size(); ++j) scaled[j] = (sys.nodes[j] - c) / h;
    const Eigen::MatrixXd a = MomentSystem(scaled, sys.degree).matrix();

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
    const Eigen::VectorXd& sv = svd.singularValues();
    if (!(sv(sv.size() - 1) > rank_tolerance * sv(0))) throw NumericalError("ill-conditioned moment system");
    Eigen::VectorXd v = svd.matrixV().col(k - 1);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    v /= std::abs(v(arg));
    if (v(0) < 0.0) v = -v;
    for (Eigen::Index j = 0; j < k; ++j)
        if (v(j) == 0.0) throw NumericalError("ill-conditioned moment system");
    return v;
}

Eigen::VectorXd lagrange_nullvector(std::span<const double> nodes) {
    require(nodes.size() >= 2, "null vector needs at least two nodes");
    require_distinct_increasing(nodes);
    const auto first = nodes.first(nodes.size() - 1);
    const std::vector<double> l = lagrange_weights(first, nodes.back());
    Eigen::VectorXd a(static_cast<Eigen::Index>(nodes.size()));
    for (std::size_t j = 0; j < l.size(); ++j) a(static_cast<Eigen::Index>(j)) = -l[j];
    a(a.size() - 1) = 1.0;
    return a;
}

std::string to_string(AdversarialKind k) {
    switch (k) {
        case AdversarialKind::complex_location: return "complex_location";
        case AdversarialKind::positive_location: return "positive_location";
        case AdversarialKind::positive_cluster: return "positive_cluster";
        case AdversarialKind::number_ambiguity: return "number_ambiguity";
    }
    return "unknown";
}

AdversarialKind parse_adversarial_kind(const std::string& name) {
    if (name == "complex_location" || name == "complex") return AdversarialKind::complex_location;
    if (name == "positive_location" || name == "positive") return AdversarialKind::positive_location;
    if (name == "positive_cluster" || name == "cluster") return AdversarialKind::positive_cluster;
    if (name == "number_ambiguity" || name == "number") return AdversarialKind::number_ambiguity;
    throw InvalidArgument("unknown adversarial kind '" + name + "'");
}

std::vector<double> location_nodes(int n, double tau) {
    std::vector<double> t(2 * static_cast<std::size_t>(n));
    for (int j = 1; j <= 2 * n; ++j) t[static_cast<std::size_t>(j - 1)] = (-n - 0.5 + j) * tau;
    return t;
}

std::vector<double> number_nodes(int n, double tau) {
    std::vector<double> t(2 * static_cast<std::size_t>(n) - 1);
    for (int j = 1; j <= 2 * n - 1; ++j) t[static_cast<std::size_t>(j - 1)] = (-n + j) * tau;
    return t;
}

std::vector<double> cluster_nodes(int n, double s, double tau) {
    if (!(s > 2.0)) throw InvalidArgument("cluster collision: spacing factor s must exceed 2");
    std::vector<double> t(2 * static_cast<std::size_t>(n));
    auto even = [&](int j) { return -((s * n - 2.0) / 2.0) * tau + ((j - 2) * s / 2.0) * tau; };
    for (int j = 1; j <= 2 * n; ++j) {
        if (j % 2 == 0) {
            t[static_cast<std::size_t>(j - 1)] = even(j);
        } else {
            const int anchor = 4 * static_cast<int>(std::ceil((j + 1) / 4.0)) - 2;
            const double sign = ((j + 1) / 2) % 2 == 0 ? 1.0 : -1.0;
            t[static_cast<std::size_t>(j - 1)] = even(anchor) + sign * tau;
        }
    }
    return t;
}

double amplitude_sum_bound(AdversarialKind kind, int n, double s) {
    switch (kind) {
        case AdversarialKind::complex_location:
        case AdversarialKind::positive_location:
            return std::exp(log_factorial(2 * n) - log_factorial(n - 1) - log_factorial(n));
        case AdversarialKind::number_ambiguity:
            return std::exp(log_factorial(2 * n - 1) - 2.0 * log_factorial(n - 1));
        case AdversarialKind::positive_cluster:
            return std::exp(std::log(2.0 * n) + 11.0 + 2.0 * std::log(s) + 10.0 * std::log(n + 1.0) +
                            (2.0 * n - 8.0) * std::log(2.0) - 2.0 * std::log(pi));
    }
    return 0.0;
}

namespace {

void rebuild_measures(AdversarialPair& p) {
    std::vector<double> tm, th;
    std::vector<cplx> am, ah;
    for (std::size_t j = 0; j < p.nodes.size(); ++j) {
        if (p.in_mu[j]) {
            tm.push_back(p.nodes[j]);
            am.emplace_back(p.amplitudes[j], 0.0);
        } else {
            th.push_back(p.nodes[j]);
            ah.emplace_back(-p.amplitudes[j], 0.0);
        }
    }
    const bool positive = p.kind != AdversarialKind::complex_location;
    p.mu = DiscreteMeasure::on_line(tm, am, positive);
    p.mu_hat = DiscreteMeasure::on_line(th, ah, positive);
}

}  // namespace

AdversarialPair construct_pair(AdversarialKind kind, int n, double sigma, double m_min, const PsfMulti& pm,
                               const AdversarialOptions& opts) {
    const bool demo = kind == AdversarialKind::complex_location;
    require(n >= (demo ? 1 : 2), "adversarial construction needs n >= 2 (n >= 1 for complex_location)");
    require(m_min > 0.0 && std::isfinite(m_min), "m_min must be positive");
    require(sigma > 0.0, "sigma must be positive");
    AdversarialPair p;
    p.kind = kind;
    p.n = n;
    p.sigma = sigma;
    p.m_min = m_min;
    p.b_upper = pm.b_upper();
    if (!(sigma < m_min * p.b_upper)) throw InvalidArgument("noise exceeds admissible range");
    const double ratio = sigma / (m_min * p.b_upper);

    switch (kind) {
        case AdversarialKind::complex_location:
        case AdversarialKind::positive_location:
            p.threshold = location_threshold(n, sigma, m_min);
            p.omega_check = omega_check_at(pm, p.threshold);
            p.tau = std::exp(-1.0) / p.omega_check * std::pow(ratio, 1.0 / (2.0 * n - 1.0));
            p.nodes = location_nodes(n, p.tau);
            p.degree = 2 * n - 2;
            break;
        case AdversarialKind::positive_cluster:
            p.s = opts.s;
            if (!(opts.s > 2.0)) throw InvalidArgument("cluster collision: spacing factor s must exceed 2");
            p.threshold = cluster_threshold(n, opts.s, sigma, m_min);
            p.omega_check = omega_check_at(pm, p.threshold);
            p.tau = 0.2 * std::exp(-1.0) /
                    (p.omega_check * std::pow(opts.s, (2.0 * n + 1.0) / (2.0 * n - 1.0))) *
                    std::pow(ratio, 1.0 / (2.0 * n - 1.0));
            p.nodes = cluster_nodes(n, opts.s, p.tau);
            p.degree = 2 * n - 2;
            break;
        case AdversarialKind::number_ambiguity:
            p.threshold = number_threshold(n, sigma, m_min);
            p.omega_check = omega_check_at(pm, p.threshold);
            p.tau = std::exp(-1.0) / p.omega_check * std::pow(ratio, 1.0 / (2.0 * n - 2.0));
            p.nodes = number_nodes(n, p.tau);
            p.degree = 2 * n - 3;
            break;
    }
    require(std::is_sorted(p.nodes.begin(), p.nodes.end()), "node layout is not increasing");

    Eigen::VectorXd a = nullspace_amplitudes(MomentSystem(p.nodes, p.degree));
    const auto k = a.size();
    p.in_mu.assign(static_cast<std::size_t>(k), false);
    double scale_ref = 0.0;  // min |a_j| over the indices that define m_min
    auto min_abs = [&](auto pick) {
        double m = std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < k; ++j)
            if (pick(j)) m = std::min(m, std::abs(a(j)));
        return m;
    };
    // Indices below are 0-based: the 1-based node j is index j - 1.
    switch (kind) {
        case AdversarialKind::complex_location:
            if (a(0) < 0.0) a = -a;
            scale_ref = opts.normalize_all ? min_abs([](Eigen::Index) { return true; })
                                           : min_abs([n](Eigen::Index j) { return j < n; });
            for (Eigen::Index j = 0; j < n; ++j) p.in_mu[static_cast<std::size_t>(j)] = true;
            break;
        case AdversarialKind::positive_location:
        case AdversarialKind::positive_cluster:
            if (a(k - 1) < 0.0) a = -a;
            scale_ref = min_abs([](Eigen::Index j) { return j % 2 == 1; });
            for (Eigen::Index j = 1; j < k; j += 2) p.in_mu[static_cast<std::size_t>(j)] = true;
            break;
        case AdversarialKind::number_ambiguity:
            if (a(k - 1) < 0.0) a = -a;
            scale_ref = min_abs([](Eigen::Index j) { return j % 2 == 0; });
            for (Eigen::Index j = 0; j < k; j += 2) p.in_mu[static_cast<std::size_t>(j)] = true;
            break;
    }
    a *= m_min / scale_ref;
    p.amplitudes.assign(a.data(), a.data() + k);
    rebuild_measures(p);
    return p;
}

std::vector<double> audit_grid(const AdversarialPair& pair, std::size_t min_points) {
    require(pair.omega_check > 0.0 && std::isfinite(pair.omega_check), "pair has no finite omega_check");
    double tmax = 0.0;
    for (double t : pair.nodes) tmax = std::max(tmax, std::abs(t));
    const double half = 1.5 * pair.omega_check;
    std::size_t count = std::max<std::size_t>(min_points, 2049);
    if (tmax > 0.0) {
        const double period = 2.0 * pi / tmax;
        count = std::max(count, static_cast<std::size_t>(std::ceil(2.0 * half * 16.0 / period)) + 1);
    }
    const Axis ax = axis_between(-half, half, count);
    std::vector<double> xi(count);
    for (std::size_t k = 0; k < count; ++k) xi[k] = ax.at(k);
    return xi;
}

Certificate certify_pair(const AdversarialPair& pair, const PsfMulti& pm, std::span<const double> xi) {
    require(xi.size() >= 2048, "audit grid needs at least 2048 frequencies");
    require(std::is_sorted(xi.begin(), xi.end()), "audit grid must be increasing");
    const double need = 1.5 * pair.omega_check * (1.0 - 1e-12);
    if (xi.front() > -need || xi.back() < need)
        throw InvalidArgument("grid too coarse: audit grid must cover [-1.5 omega_check, 1.5 omega_check]");
    double tmax = 0.0;
    for (double t : pair.nodes) tmax = std::max(tmax, std::abs(t));
    double gap_max = 0.0;
    for (std::size_t k = 1; k < xi.size(); ++k) gap_max = std::max(gap_max, xi[k] - xi[k - 1]);
    if (tmax > 0.0 && gap_max > pi / tmax)
        throw InvalidArgument("grid too coarse: spacing exceeds the Nyquist limit of the node extent");

    Certificate c;
    c.audit_points = xi.size();
    c.audit_half_span = std::min(-xi.front(), xi.back());
    const std::vector<cplx> spec = tapered_spectrum(pm.profile, pm.taper, xi);
    for (std::size_t k = 0; k < xi.size(); ++k) {
        const Point x{xi[k], 0.0};
        const cplx d = fourier_of_measure(pair.mu_hat, x) - fourier_of_measure(pair.mu, x);
        c.max_gap = std::max(c.max_gap, std::abs(spec[k]) * std::abs(d));
    }
    double sum_abs = 0.0;
    for (double a : pair.amplitudes) sum_abs += std::abs(a);
    c.tail_bound = sum_abs * pair.threshold;
    c.moment_residuals.assign(static_cast<std::size_t>(pair.degree) + 1, 0.0);
    for (int q = 0; q <= pair.degree; ++q) {
        double s = 0.0;
        for (std::size_t j = 0; j < pair.nodes.size(); ++j) s += pair.amplitudes[j] * std::pow(pair.nodes[j], q);
        c.moment_residuals[static_cast<std::size_t>(q)] = s;
    }
    c.gap_ok = c.max_gap < pair.sigma;
    c.tail_ok = c.tail_bound < pair.sigma;
    c.pass = c.gap_ok && c.tail_ok;
    return c;
}

Certificate certify_pair(const AdversarialPair& pair, const PsfMulti& pm) {
    const std::vector<double> xi = audit_grid(pair);
    return certify_pair(pair, pm, xi);
}

AmplitudeAudit amplitude_bounds_audit(const AdversarialPair& pair) {
    AmplitudeAudit r;
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (double a : pair.amplitudes) {
        r.sum_abs += std::abs(a);
        lo = std::min(lo, std::abs(a));
        hi = std::max(hi, std::abs(a));
    }
    const int n = pair.n;
    r.sum_bound = amplitude_sum_bound(pair.kind, n, pair.s) * pair.m_min;
    r.sum_ok = r.sum_abs <= r.sum_bound * (1.0 + 1e-12);
    r.ratio = hi / lo;
    switch (pair.kind) {
        case AdversarialKind::complex_location:
        case AdversarialKind::positive_location:
            r.ratio_bound = std::exp(log_factorial(2 * n - 1) - log_factorial(n - 1) - log_factorial(n));
            break;
        case AdversarialKind::number_ambiguity:
            r.ratio_bound = std::exp(log_factorial(2 * n - 2) - 2.0 * log_factorial(n - 1));
            break;
        case AdversarialKind::positive_cluster:
            break;
    }
    if (r.ratio_bound) r.ratio_ok = r.ratio <= *r.ratio_bound * (1.0 + 1e-12);
    return r;
}

AdversarialPair perturb_node(const AdversarialPair& pair, std::size_t index, double shift) {
    require(index < pair.nodes.size(), "node index out of range");
    AdversarialPair p = pair;
    p.nodes[index] += shift;
    p.certificate = Certificate{};
    rebuild_measures(p);
    return p;
}

}  // namespace multillum
