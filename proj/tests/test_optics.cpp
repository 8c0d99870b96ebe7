#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "multillum/optics.hpp"

using namespace multillum;

namespace {

std::vector<Point> lags_1d(std::initializer_list<double> u) {
    std::vector<Point> v;
    for (double x : u) v.push_back({x, 0.0});
    return v;
}

}  // namespace

TEST_SUITE("optics") {

TEST_CASE("psf point values") {
    const Psf s = Psf::sinc(pi);
    CHECK(evaluate_psf(s, {0.0, 0.0}) == doctest::Approx(pi));
    CHECK(std::abs(evaluate_psf(s, {1.0, 0.0})) < 1e-15);
    CHECK(evaluate_psf(Psf::sinc_squared(1.0), {pi / 2, 0.0}) == doctest::Approx(4.0 / (pi * pi)));
    CHECK(evaluate_psf(Psf::gaussian(0.5), {0.5, 0.0}) == doctest::Approx(std::exp(-0.5)));
    // Airy: (J1(omega r) / r)^2 with limit (omega / 2)^2 at the origin.
    const Psf a = Psf::airy_squared(2.0);
    CHECK(evaluate_psf(a, {0.0, 0.0}) == doctest::Approx(1.0));
    const double r = 1.3;
    const double j = std::cyl_bessel_j(1.0, 2.0 * r) / r;
    CHECK(evaluate_psf(a, {r * 0.6, r * 0.8}) == doctest::Approx(j * j).epsilon(1e-10));
}

TEST_CASE("bessel J1 against the standard library") {
    for (double x = 0.0; x < 80.0; x += 0.0137)
        CHECK(std::abs(bessel_j1(x) - std::cyl_bessel_j(1.0, x)) < 1e-10);
    CHECK(bessel_j1(-2.0) == doctest::Approx(-std::cyl_bessel_j(1.0, 2.0)));
}

TEST_CASE("cutoffs and keys") {
    CHECK(Psf::sinc(3.0).cutoff() == doctest::Approx(3.0));
    CHECK(Psf::sinc_squared(3.0).cutoff() == doctest::Approx(6.0));
    CHECK(Psf::airy_squared(3.0).cutoff() == doctest::Approx(6.0));
    // Gaussian spectrum w sqrt(2 pi) exp(-w^2 xi^2 / 2) falls to 1e-3 of its peak here.
    const double w = 0.4;
    const Psf g = Psf::gaussian(w);
    CHECK(g.cutoff() == doctest::Approx(std::sqrt(2.0 * std::log(1000.0)) / w));
    CHECK(g.spectrum({g.cutoff(), 0}) / g.spectrum({0, 0}) == doctest::Approx(1e-3));
    CHECK(Psf::sinc(1.0).key() == "sinc");
    CHECK(Psf::airy_squared(1.0).key() == "airy2");
}

TEST_CASE("sampled psf domain and csv") {
    GridFunction s(GridSpec::line(axis_between(-2.0, 2.0, 41)));
    for (std::size_t k = 0; k < s.size(); ++k) s[k] = std::exp(-s.grid.point(k).x * s.grid.point(k).x);
    const Psf p = Psf::sampled(s, 4.0);
    CHECK(evaluate_psf(p, {0.0, 0.0}) == doctest::Approx(1.0));
    CHECK_THROWS_WITH(evaluate_psf(p, {2.5, 0.0}), doctest::Contains("out of domain"));
    std::stringstream ss;
    write_sampled_psf_csv(ss, p);
    const Psf q = read_sampled_psf_csv(ss, 4.0);
    CHECK(evaluate_psf(q, {0.55, 0.0}) == doctest::Approx(evaluate_psf(p, {0.55, 0.0})));
    GridFunction bad = s;
    bad[3] = cplx(1.0, 0.5);
    CHECK_THROWS_AS(Psf::sampled(bad, 4.0), InvalidArgument);
}

TEST_CASE("illumination values") {
    const double om = 2.5;
    const auto sim = IlluminationSequence::opposite_plane_waves(om);
    const Point y{0.3, 0.0};
    CHECK(std::abs(evaluate_illumination(sim, 0, y) - std::polar(1.0, om * 0.3)) < 1e-15);
    CHECK(evaluate_illumination(IlluminationSequence::constant(1), 0, y) == cplx(1, 0));
    const auto tp = IlluminationSequence::translated_profile(Psf::sinc(pi), {{2.0, 0.0}});
    CHECK(evaluate_illumination(tp, 0, {2.0, 0.0}).real() == doctest::Approx(pi));
    CHECK_THROWS(evaluate_illumination(sim, 2, y));
    CHECK_THROWS_AS(IlluminationSequence::plane_waves(2, {{1.0, 1.0}}, 1.0), InvalidArgument);
}

TEST_CASE("illumination correlation") {
    const double om = 1.7;
    const auto sim = IlluminationSequence::opposite_plane_waves(om);
    for (double z : {0.0, 0.2, 0.9})
        for (double y : {0.1, 0.5}) {
            const cplx c = illumination_correlation(sim, {z, 0}, {y, 0});
            CHECK(c.real() == doctest::Approx(std::cos(om * (z - y))));
            CHECK(std::abs(c.imag()) < 1e-14);
        }
    CHECK(illumination_correlation(IlluminationSequence::constant(3), {0.1, 0}, {0.8, 0}) == cplx(1, 0));
    const auto one = IlluminationSequence::plane_waves(1, {{1.0, 0.0}}, 3.0);
    CHECK(std::abs(illumination_correlation(one, {0.13, 0}, {0.77, 0})) == doctest::Approx(1.0));
}

TEST_CASE("illumination correlation is Hermitian") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Composite> comps;
    for (int q = 0; q < 3; ++q)
        comps.push_back({{cplx(u(rng), u(rng)), cplx(-u(rng), u(rng))}, {{u(rng), 0}, {u(rng), 0}}});
    const auto seq = IlluminationSequence::composite(Psf::gaussian(0.3), comps);
    for (int k = 0; k < 20; ++k) {
        const Point z{u(rng), 0}, y{u(rng), 0};
        CHECK(std::abs(illumination_correlation(seq, z, y) - std::conj(illumination_correlation(seq, y, z))) <= 1e-12);
    }
}

TEST_CASE("translated profiles become shift invariant over wide sweeps") {
    std::vector<Point> centers;
    for (int k = -200; k <= 200; ++k) centers.push_back({0.05 * k, 0.0});
    const auto seq = IlluminationSequence::translated_profile(Psf::sinc(pi), centers);
    double worst = 0.0;
    for (double d : {-0.4, -0.1, 0.0, 0.25}) {
        std::vector<cplx> vals;
        for (double z = -0.5; z <= 0.5 + 1e-12; z += 0.1) {
            const double y = z - d;
            if (std::abs(y) > 0.5) continue;
            vals.push_back(illumination_correlation(seq, {z, 0}, {y, 0}));
        }
        for (const cplx& v : vals) worst = std::max(worst, std::abs(v - vals.front()) / std::abs(vals.front()));
    }
    CHECK(worst < 0.02);
}

TEST_CASE("sinc autocorrelation matches pi sin(omega u) / u") {
    const double om = 2.0;
    const auto lags = lags_1d({0.0, 0.05, 0.3, 0.77, 1.5, 3.1});
    const std::vector<double> v = psf_autocorrelation(Psf::sinc(om), lags);
    CHECK(v[0] == doctest::Approx(pi * om).epsilon(1e-4));
    for (std::size_t k = 1; k < lags.size(); ++k) {
        const double u = lags[k].x;
        CHECK(std::abs(v[k] - pi * std::sin(om * u) / u) < 1e-4 * pi * om);
    }
}

TEST_CASE("gaussian autocorrelation is a wider gaussian") {
    const double w = 0.3;
    const auto lags = lags_1d({0.0, 0.1, 0.4, 0.9});
    const std::vector<double> v = psf_autocorrelation(Psf::gaussian(w), lags);
    for (std::size_t k = 0; k < lags.size(); ++k) {
        const double u = lags[k].x;
        const double expect = w * std::sqrt(pi) * std::exp(-u * u / (4.0 * w * w));
        CHECK(v[k] == doctest::Approx(expect).epsilon(1e-8));
    }
}

TEST_CASE("2D separable autocorrelation factorises") {
    const double om = 3.0;
    const std::vector<Point> lags = {{0.0, 0.0}, {0.2, 0.1}, {0.5, -0.3}};
    const std::vector<double> v = psf_autocorrelation(Psf::sinc(om, 2), lags);
    auto f = [om](double u) { return u == 0.0 ? pi * om : pi * std::sin(om * u) / u; };
    for (std::size_t k = 0; k < lags.size(); ++k)
        CHECK(std::abs(v[k] - f(lags[k].x) * f(lags[k].y)) < 1e-4 * f(0) * f(0));
}

TEST_CASE("zero lag is the autocorrelation maximum") {
    const GridSpec grid = GridSpec::line(axis_between(-2.0, 2.0, 81));
    for (const Psf& p : {Psf::sinc(2.0), Psf::sinc_squared(1.5), Psf::gaussian(0.5)}) {
        const GridFunction a = psf_autocorrelation(p, grid);
        const cplx zero = a[40];
        CHECK(zero.real() > 0.0);
        for (const cplx& v : a.values) CHECK(v.real() <= zero.real() * (1 + 1e-12));
        for (std::size_t k = 0; k < 81; ++k) CHECK(std::abs(a[k] - a[80 - k]) <= 1e-10 * zero.real());
    }
}

TEST_CASE("truncation diagnostic") {
    QuadratureOptions o;
    o.half_width = 3.0;
    o.tail_correction = false;
    CHECK_THROWS_AS(psf_autocorrelation(Psf::sinc(1.0), lags_1d({0.0}), o), NumericalError);
}

}  // TEST_SUITE
