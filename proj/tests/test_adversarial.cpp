#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "multillum/adversarial.hpp"
#include "multillum/limits.hpp"

using namespace multillum;

namespace {

// Plane-wave illumination at 2 pi under a sinc(2 pi) PSF: spectrum supported on [-4 pi, 4 pi].
const PsfMulti& wide_sim() {
    static const PsfMulti pm = synthesize_psf_multi(IlluminationFamily::opposite_plane_waves(2.0 * pi), Psf::sinc(2.0 * pi));
    return pm;
}

double max_abs(const Eigen::VectorXd& v) { return v.cwiseAbs().maxCoeff(); }

std::vector<double> real_amplitudes(const DiscreteMeasure& mu) {
    std::vector<double> out;
    for (const cplx& a : mu.amplitudes()) out.push_back(a.real());
    return out;
}

}  // namespace

TEST_SUITE("adversarial") {

TEST_CASE("Lagrange weights") {
    const std::vector<double> two{0.0, 1.0};
    const auto w = lagrange_weights(two, 0.5);
    CHECK(w[0] == doctest::Approx(0.5));
    CHECK(w[1] == doctest::Approx(0.5));

    const std::vector<double> three{0.0, 1.0, 2.0};
    const auto at1 = lagrange_weights(three, 1.0);
    CHECK(at1[0] == doctest::Approx(0.0));
    CHECK(at1[1] == doctest::Approx(1.0));
    CHECK(at1[2] == doctest::Approx(0.0));
    const auto at3 = lagrange_weights(three, 3.0);
    CHECK(at3[0] == doctest::Approx(1.0));
    CHECK(at3[1] == doctest::Approx(-3.0));
    CHECK(at3[2] == doctest::Approx(3.0));

    const std::vector<double> nodes{-0.7, -0.1, 0.2, 0.9, 1.3};
    for (double t : {-2.0, 0.0, 0.5, 4.0}) {
        const auto l = lagrange_weights(nodes, t);
        double sum = 0.0;
        for (double v : l) sum += v;
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }

    const std::vector<double> dup{0.0, 1.0, 1.0};
    CHECK_THROWS_WITH(lagrange_weights(dup, 0.5), doctest::Contains("duplicate nodes"));
}

TEST_CASE("null vectors of small moment systems") {
    const Eigen::VectorXd a1 = nullspace_amplitudes(MomentSystem({0.0, 1.0}, 0));
    CHECK(a1(0) == doctest::Approx(1.0));
    CHECK(a1(1) == doctest::Approx(-1.0));

    const Eigen::VectorXd a2 = nullspace_amplitudes(MomentSystem({0.0, 1.0, 2.0, 3.0}, 2));
    const double expect[] = {1.0, -3.0, 3.0, -1.0};
    for (int j = 0; j < 4; ++j) CHECK(3.0 * a2(j) == doctest::Approx(expect[j]));
    CHECK(max_abs(a2) == doctest::Approx(1.0));

    CHECK_THROWS_AS(MomentSystem({0.0, 0.0, 1.0}, 1), InvalidArgument);
}

TEST_CASE("null vectors annihilate the moments and alternate in sign") {
    for (int n = 1; n <= 6; ++n) {
        const double tau = 12.0 / (2 * n - 1);
        const std::vector<double> nodes = location_nodes(n, tau);
        const MomentSystem sys(nodes, 2 * n - 2);
        const Eigen::VectorXd a = nullspace_amplitudes(sys);
        const Eigen::MatrixXd m = sys.matrix();
        const double scale = m.cwiseAbs().rowwise().sum().maxCoeff() * max_abs(a);
        CHECK(max_abs(m * a) <= 1e-10 * scale);
        for (Eigen::Index j = 0; j + 1 < a.size(); ++j) CHECK(a(j) * a(j + 1) < 0.0);

        const Eigen::VectorXd l = lagrange_nullvector(nodes);
        const Eigen::VectorXd ln = l / max_abs(l) * (l(0) > 0 ? 1.0 : -1.0);
        CHECK((ln - a).cwiseAbs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("clustered nodes make the moment system ill-conditioned") {
    const std::vector<double> nodes{-1.0, -1.0 + 1e-7, -1.0 + 2e-7, -1.0 + 3e-7, 0.5, 1.0};
    CHECK_THROWS_AS(nullspace_amplitudes(MomentSystem(nodes, 4)), NumericalError);
}

TEST_CASE("node layouts") {
    const auto loc = location_nodes(2, 1.0);
    REQUIRE(loc.size() == 4);
    CHECK(loc[0] == doctest::Approx(-1.5));
    CHECK(loc[3] == doctest::Approx(1.5));
    const auto num = number_nodes(2, 1.0);
    REQUIRE(num.size() == 3);
    CHECK(num[0] == doctest::Approx(-1.0));
    CHECK(num[2] == doctest::Approx(1.0));
    const auto cl = cluster_nodes(2, 4.0, 1.0);
    REQUIRE(cl.size() == 4);
    const double expect[] = {-4.0, -3.0, -2.0, 1.0};
    for (int j = 0; j < 4; ++j) CHECK(cl[j] == doctest::Approx(expect[j]));
}

TEST_CASE("two-atom complex pair") {
    const PsfMulti& pm = wide_sim();
    const double sigma = 1e-3 * pm.b_upper();
    const AdversarialPair p = construct_pair(AdversarialKind::complex_location, 1, sigma, 1.0, pm);
    REQUIRE(p.mu.size() == 1);
    REQUIRE(p.mu_hat.size() == 1);
    CHECK(p.mu.locations()[0].x == doctest::Approx(-0.5 * p.tau));
    CHECK(p.mu_hat.locations()[0].x == doctest::Approx(0.5 * p.tau));
    CHECK(p.mu.amplitudes()[0].real() == doctest::Approx(1.0));
    CHECK(p.mu_hat.amplitudes()[0].real() == doctest::Approx(1.0));
}

TEST_CASE("complex location spacing at ratio 1e-3 and omega check 4 pi") {
    const PsfMulti& pm = wide_sim();
    const double sigma = 1e-3 * pm.b_upper();
    const AdversarialPair p = construct_pair(AdversarialKind::complex_location, 2, sigma, 1.0, pm);
    CHECK(p.omega_check == doctest::Approx(4.0 * pi).epsilon(1e-3));
    CHECK(p.tau == doctest::Approx(std::exp(-1.0) * 0.1 / (4.0 * pi)).epsilon(1e-3));
    CHECK(p.tau == doctest::Approx(2.93e-3).epsilon(2e-3));
    CHECK(min_amplitude(p.mu) == doctest::Approx(1.0));
}

TEST_CASE("positive location pair splits binomial weights") {
    const PsfMulti& pm = wide_sim();
    const AdversarialPair p = construct_pair(AdversarialKind::positive_location, 2, 1e-3 * pm.b_upper(), 1.0, pm);
    CHECK(p.mu.positive());
    CHECK(p.mu_hat.positive());
    const auto a = real_amplitudes(p.mu);
    const auto b = real_amplitudes(p.mu_hat);
    REQUIRE(a.size() == 2);
    REQUIRE(b.size() == 2);
    CHECK(a[0] == doctest::Approx(3.0));
    CHECK(a[1] == doctest::Approx(1.0));
    CHECK(b[0] == doctest::Approx(1.0));
    CHECK(b[1] == doctest::Approx(3.0));
}

TEST_CASE("number ambiguity pair has n and n-1 atoms") {
    const PsfMulti& pm = wide_sim();
    const AdversarialPair p = construct_pair(AdversarialKind::number_ambiguity, 2, 1e-3 * pm.b_upper(), 1.0, pm);
    CHECK(p.mu.size() == 2);
    CHECK(p.mu_hat.size() == 1);
    CHECK(min_amplitude(p.mu) == doctest::Approx(1.0));
    CHECK(min_separation(p.mu) == doctest::Approx(2.0 * p.tau));
}

TEST_CASE("pair spacing equals the resolution-limit formulas") {
    const PsfMulti& pm = wide_sim();
    const double sigma = 1e-3 * pm.b_upper();
    for (int n = 2; n <= 4; ++n) {
        LimitQuery q;
        q.n = n;
        q.sigma = sigma;
        q.b_upper = pm.b_upper();
        q.b_lower = q.b_upper;

        const AdversarialPair loc = construct_pair(AdversarialKind::positive_location, n, sigma, 1.0, pm);
        q.omega_hat = loc.omega_check;
        q.omega_check = loc.omega_check;
        CHECK(std::abs(loc.tau - location_limit_lower(q)) <= 1e-12 * loc.tau);

        const AdversarialPair num = construct_pair(AdversarialKind::number_ambiguity, n, sigma, 1.0, pm);
        q.omega_check = num.omega_check;
        CHECK(std::abs(min_separation(num.mu) - number_limit_lower(q)) <= 1e-12 * num.tau);

        const AdversarialPair cl = construct_pair(AdversarialKind::positive_cluster, n, sigma, 1.0, pm);
        q.omega_check = cl.omega_check;
        CHECK(std::abs(cl.tau - cluster_limit(q, 4.0).tau) <= 1e-12 * cl.tau);
    }
}

TEST_CASE("scaling noise and amplitude together scales the amplitudes only") {
    const PsfMulti& pm = wide_sim();
    const double sigma = 1e-3 * pm.b_upper();
    const AdversarialPair a = construct_pair(AdversarialKind::positive_location, 3, sigma, 1.0, pm);
    const AdversarialPair b = construct_pair(AdversarialKind::positive_location, 3, 5.0 * sigma, 5.0, pm);
    CHECK(b.tau == doctest::Approx(a.tau).epsilon(1e-12));
    for (std::size_t j = 0; j < a.nodes.size(); ++j) {
        CHECK(b.nodes[j] == doctest::Approx(a.nodes[j]).epsilon(1e-12));
        CHECK(b.amplitudes[j] == doctest::Approx(5.0 * a.amplitudes[j]).epsilon(1e-12));
    }
}

TEST_CASE("amplitude audits") {
    const PsfMulti& pm = wide_sim();
    const double sigma = 1e-3 * pm.b_upper();
    const AmplitudeAudit two = amplitude_bounds_audit(construct_pair(AdversarialKind::positive_location, 2, sigma, 1.0, pm));
    CHECK(two.sum_abs == doctest::Approx(8.0));
    CHECK(two.sum_bound == doctest::Approx(12.0));
    CHECK(two.sum_ok);
    CHECK(two.ratio == doctest::Approx(3.0));
    const AmplitudeAudit one = amplitude_bounds_audit(construct_pair(AdversarialKind::complex_location, 1, sigma, 1.0, pm));
    CHECK(one.sum_abs == doctest::Approx(2.0));
    CHECK(one.sum_bound == doctest::Approx(2.0));
    CHECK(one.sum_ok);
}

TEST_CASE("certificates pass and fail where expected") {
    const PsfMulti& pm = wide_sim();
    const double sigma = 1e-2 * pm.b_upper();
    const AdversarialPair p = construct_pair(AdversarialKind::positive_location, 2, sigma, 1.0, pm);
    const Certificate c = certify_pair(p, pm);
    CHECK(c.pass);
    CHECK(c.audit_points >= 2049);
    CHECK(c.audit_half_span == doctest::Approx(1.5 * p.omega_check));
    for (double r : c.moment_residuals) CHECK(std::abs(r) < 1e-12);

    const AdversarialPair moved = perturb_node(p, p.nodes.size() - 1, 10.0 * p.tau);
    CHECK_FALSE(certify_pair(moved, pm).pass);

    const std::vector<double> coarse = audit_grid(p, 100);
    const std::vector<double> few(coarse.begin(), coarse.begin() + 100);
    CHECK_THROWS_AS(certify_pair(p, pm, few), InvalidArgument);
}

TEST_CASE("construction input errors") {
    const PsfMulti& pm = wide_sim();
    CHECK_THROWS_WITH(construct_pair(AdversarialKind::positive_location, 2, 2.0 * pm.b_upper(), 1.0, pm),
                      doctest::Contains("noise exceeds admissible range"));
    AdversarialOptions o;
    o.s = 2.0;
    CHECK_THROWS_WITH(construct_pair(AdversarialKind::positive_cluster, 2, 1e-3 * pm.b_upper(), 1.0, pm, o),
                      doctest::Contains("cluster collision"));
    CHECK(parse_adversarial_kind("number") == AdversarialKind::number_ambiguity);
    CHECK(parse_adversarial_kind(to_string(AdversarialKind::positive_cluster)) == AdversarialKind::positive_cluster);
    CHECK_THROWS_AS(parse_adversarial_kind("bogus"), InvalidArgument);
}

}  // TEST_SUITE
