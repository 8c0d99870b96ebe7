#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "multillum/limits.hpp"

using namespace multillum;

namespace {

LimitQuery query(int n, double ratio, double omega_hat, double omega_check) {
    LimitQuery q;
    q.n = n;
    q.m_min = 1.0;
    q.b_lower = 1.0;
    q.b_upper = 1.0;
    q.sigma = ratio;
    q.omega_hat = omega_hat;
    q.omega_check = omega_check;
    return q;
}

// Brute-force minimum for two columns: pin one coordinate, scan the other.
double scan_incoherence(const Eigen::MatrixXd& m) {
    double best = std::numeric_limits<double>::infinity();
    for (int p = 0; p < 2; ++p)
        for (int i = 0; i <= 20000; ++i) {
            Eigen::Vector2d x;
            x(p) = 1.0;
            x(1 - p) = -1.0 + 2.0 * i / 20000.0;
            best = std::min(best, (m * x).cwiseAbs().maxCoeff());
        }
    return best;
}

}  // namespace

TEST_SUITE("limits") {

TEST_CASE("location limits at ratio 1e-3") {
    CHECK(location_limit_upper(query(2, 1e-3, 2.0 * pi, 4.0 * pi)) == doctest::Approx(0.1 / (2.0 * pi)));
    CHECK(location_limit_upper(query(2, 1e-3, 2.0 * pi, 4.0 * pi)) == doctest::Approx(0.0159).epsilon(1e-2));
    CHECK(location_limit_lower(query(2, 1e-3, 2.0 * pi, 4.0 * pi)) == doctest::Approx(2.93e-3).epsilon(2e-3));
}

TEST_CASE("two-point limit is linear in the noise ratio") {
    const LimitQuery a = query(1, 1e-3, 1.0, 2.0);
    const LimitQuery b = query(1, 4e-3, 1.0, 2.0);
    CHECK(location_limit_lower(b) / location_limit_lower(a) == doctest::Approx(4.0));
    CHECK_THROWS_AS(location_limit_upper(a), InvalidArgument);
}

TEST_CASE("lower limits stay below upper limits") {
    for (int n = 2; n <= 5; ++n)
        for (double ratio : {1e-6, 1e-4, 1e-2}) {
            const LimitQuery q = query(n, ratio, 2.0 * pi, 4.0 * pi);
            CHECK(location_limit_lower(q) < location_limit_upper(q));
            CHECK(number_limit_lower(q) < number_limit_upper(q));
        }
}

TEST_CASE("exponents of the noise ratio") {
    for (int n = 2; n <= 4; ++n) {
        const LimitQuery a = query(n, 1e-6, 1.0, 1.0);
        const LimitQuery b = query(n, 2e-6, 1.0, 1.0);
        CHECK(std::log2(location_limit_upper(b) / location_limit_upper(a)) == doctest::Approx(1.0 / (2 * n - 1)));
        CHECK(std::log2(number_limit_upper(b) / number_limit_upper(a)) == doctest::Approx(1.0 / (2 * n - 2)));
        CHECK(std::log2(number_limit_lower(b) / number_limit_lower(a)) == doctest::Approx(1.0 / (2 * n - 2)));
    }
    CHECK(number_limit_upper(query(2, 1e-4, 1.0, 1.0)) == doctest::Approx(1e-2));
}

TEST_CASE("thresholds") {
    CHECK(location_threshold(2, 1.0, 1.0) == doctest::Approx(1.0 / 12.0));
    CHECK(location_threshold(1, 1.0, 2.0) == doctest::Approx(0.25));
    CHECK(number_threshold(2, 1.0, 1.0) == doctest::Approx(1.0 / 6.0));
    CHECK(number_threshold(3, 3.0, 1.0) == doctest::Approx(3.0 * 4.0 / 120.0));
    const double c = cluster_threshold(2, 4.0, 1.0, 1.0);
    CHECK(c == doctest::Approx(pi * pi / (4.0 * std::exp(11.0) * 16.0 * std::pow(3.0, 10) * std::pow(2.0, -4))));
}

TEST_CASE("cluster limit") {
    const LimitQuery q = query(2, 1e-3, 1.0, 4.0 * pi);
    const ClusterLimit a = cluster_limit(q, 2.5);
    const ClusterLimit b = cluster_limit(q, 4.0);
    CHECK(a.spacing == doctest::Approx(2.5 * a.tau));
    CHECK(b.tau / a.tau == doctest::Approx(std::pow(4.0 / 2.5, -5.0 / 3.0)));
    double prev = std::numeric_limits<double>::infinity();
    for (int s = 3; s <= 10; ++s) {
        const double sp = cluster_limit(q, s).spacing;
        CHECK(sp < prev);
        prev = sp;
    }
    CHECK_THROWS_WITH(cluster_limit(q, 2.0), doctest::Contains("cluster collision"));
}

TEST_CASE("query validation") {
    LimitQuery q = query(2, 1e-3, 1.0, 1.0);
    q.sigma = 2.0;
    CHECK_THROWS_WITH(location_limit_lower(q), doctest::Contains("noise exceeds admissible range"));
    q = query(2, 1e-3, 0.0, 1.0);
    CHECK_THROWS_AS(location_limit_upper(q), InvalidArgument);
}

TEST_CASE("incoherence of simple matrices") {
    CHECK(illumination_incoherence(Eigen::MatrixXd(Eigen::MatrixXd::Identity(3, 3))) == doctest::Approx(1.0).epsilon(1e-6));
    Eigen::MatrixXd h(2, 2);
    h << 1, 1, 1, -1;
    CHECK(illumination_incoherence(h) == doctest::Approx(1.0).epsilon(1e-6));
    Eigen::MatrixXd row(1, 2);
    row << 1, 0.5;
    CHECK(illumination_incoherence(row) == doctest::Approx(0.0).epsilon(1e-6));
    Eigen::MatrixXd rank1(2, 2);
    rank1 << 1, 1, 2, 2;
    CHECK(illumination_incoherence(rank1) < 1e-6);
}

TEST_CASE("incoherence matches a brute-force scan") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int t = 0; t < 20; ++t) {
        Eigen::MatrixXd m(3, 2);
        for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = u(rng);
        CHECK(illumination_incoherence(m) == doctest::Approx(scan_incoherence(m)).epsilon(1e-3));
    }
}

TEST_CASE("complex search can only lower the incoherence") {
    Eigen::MatrixXcd m(1, 2);
    m << cplx(1, 0), cplx(0, 1);
    CHECK(illumination_incoherence(m) == doctest::Approx(1.0).epsilon(1e-6));
    IncoherenceOptions o;
    o.complex_search = true;
    CHECK(illumination_incoherence(m, o) < 1e-6);
}

TEST_CASE("unknown-pattern limit") {
    CHECK(unknown_pattern_limit(2, 0.05, 1.0, pi, 0.2) == doctest::Approx(2.2 * euler_e * 0.5).epsilon(1e-12));
    CHECK(unknown_pattern_limit(2, 0.2, 1.0, pi, 0.2) / unknown_pattern_limit(2, 0.05, 1.0, pi, 0.2) ==
          doctest::Approx(2.0));
    CHECK(unknown_pattern_limit(2, 0.1, 2.0, pi, 0.2) == doctest::Approx(unknown_pattern_limit(2, 0.05, 1.0, pi, 0.2)));
    CHECK_THROWS_WITH(unknown_pattern_limit(2, 0.05, 1.0, pi, 0.0), doctest::Contains("degenerate illumination matrix"));
}

TEST_CASE("recovery bound and support ball") {
    CHECK(recovery_error_bound(1.0, 2.0, 3.0, 2, 0.1, 1.0) == doctest::Approx(0.5 * 9.0 * 0.1));
    CHECK(support_ball_radius(3, 2.0) == doctest::Approx(0.5));
    CHECK(support_in_ball(DiscreteMeasure::on_line({-0.2, 0.4}, {1.0, 1.0}), 3, 2.0));
    CHECK_FALSE(support_in_ball(DiscreteMeasure::on_line({0.5}, {1.0}), 3, 2.0));
}

}  // TEST_SUITE
