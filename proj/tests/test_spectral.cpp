#include <random>

#include "doctest.h"
#include "multillum/spectral.hpp"

using namespace multillum;

namespace {

// Triangle spectrum of peak 1 on [-2, 2], built directly on a frequency grid.
PsfMulti triangle_spectrum() {
    PsfMulti pm;
    pm.freq = axis_between(-4.0, 4.0, 801);
    pm.spectrum.resize(pm.freq.count);
    for (std::size_t k = 0; k < pm.freq.count; ++k)
        pm.spectrum[k] = cplx(std::max(0.0, 1.0 - std::abs(pm.freq.at(k)) / 2.0), 0.0);
    pm.omega_psf = 1.0;
    pm.omega_illu = 1.0;
    return pm;
}

const PsfMulti& sim_spectrum() {
    static const PsfMulti pm = synthesize_psf_multi(IlluminationFamily::opposite_plane_waves(pi), Psf::sinc(pi));
    return pm;
}

}  // namespace

TEST_SUITE("spectral") {

TEST_CASE("structured illumination gives a flat band of radius 2 pi") {
    const PsfMulti& pm = sim_spectrum();
    CHECK(pm.energy_outside(2.0 * pi) < 1e-3);
    const double peak = pm.b_upper();
    for (double xi : {-5.0, -2.0, 0.0, 1.0, 4.5}) CHECK(std::abs(pm.spectrum_at(xi)) == doctest::Approx(peak).epsilon(0.02));
    const CutoffReport c = essential_cutoffs(pm, 0.1 * peak, 1e-3 * peak);
    CHECK(c.omega_hat / (2.0 * pi) == doctest::Approx(1.0).epsilon(0.02));
    CHECK(c.omega_check <= 2.0 * pi + 1e-12);
}

TEST_CASE("constant illumination keeps the PSF band") {
    const PsfMulti pm = synthesize_psf_multi(IlluminationFamily::constant(), Psf::sinc(pi));
    CHECK(pm.energy_outside(pi) < 1e-3);
    const CutoffReport c = essential_cutoffs(pm, 0.1 * pm.b_upper(), 1e-3 * pm.b_upper());
    CHECK(c.omega_hat == doctest::Approx(pi).epsilon(0.02));
}

TEST_CASE("confocal profile matches the closed-form autocorrelation") {
    // sinc(pi) correlates with itself to pi sin(pi u) / u, so PSF_multi(u) = (pi sin(pi u) / u)^2.
    const Psf psf = Psf::sinc(pi);
    const PsfMulti pm = synthesize_psf_multi(IlluminationFamily::translated_profile(psf), psf);
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<std::size_t> pick(0, pm.profile.values.size() - 1);
    const double peak = pi * pi * pi * pi;
    for (int i = 0; i < 16; ++i) {
        const std::size_t k = pick(rng);
        const double u = pm.profile.grid.ax0.at(k);
        const double r = u == 0.0 ? pi * pi : pi * std::sin(pi * u) / u;
        CHECK(std::abs(pm.profile.values[k] - cplx(r * r, 0.0)) <= 1e-6 * peak);
    }
}

TEST_CASE("tapered spectrum agrees with the pointwise transform") {
    const PsfMulti& pm = sim_spectrum();
    const std::vector<double> xi{-3.3, 0.0, 0.7, 6.0};
    const std::vector<cplx> s = tapered_spectrum(pm.profile, pm.taper, xi);
    for (std::size_t i = 0; i < xi.size(); ++i) CHECK(std::abs(s[i] - pm.spectrum_at(xi[i])) < 1e-10 * pm.b_upper());
}

TEST_CASE("Kaiser taper is symmetric with unit centre") {
    const Axis lags = axis_between(-1.0, 1.0, 101);
    const std::vector<double> w = kaiser_taper(lags, 30.0);
    CHECK(w[50] == doctest::Approx(1.0));
    for (std::size_t k = 0; k < 50; ++k) {
        CHECK(w[k] == doctest::Approx(w[100 - k]));
        CHECK(w[k] <= w[k + 1]);
    }
    CHECK(w[0] < 1e-10);
    for (double v : kaiser_taper(lags, 0.0)) CHECK(v == 1.0);
}

TEST_CASE("essential cutoffs on a triangle spectrum") {
    const PsfMulti pm = triangle_spectrum();
    const CutoffReport c = essential_cutoffs(pm, 0.5, 0.25);
    CHECK(c.b_upper == doctest::Approx(1.0));
    CHECK(c.omega_hat == doctest::Approx(1.0).epsilon(0.01));
    CHECK(c.omega_check == doctest::Approx(1.5).epsilon(0.01));
    CHECK(c.omega_hat <= c.omega_check);
    CHECK(essential_cutoffs(pm, 0.5, 2.0).omega_check == 0.0);
    CHECK_THROWS_WITH(essential_cutoffs(pm, 1.5, 0.1), doctest::Contains("threshold exceeds peak"));
}

TEST_CASE("omega hat never exceeds omega check when b_lower >= eps") {
    const PsfMulti& pm = sim_spectrum();
    const double peak = pm.b_upper();
    for (double r : {0.05, 0.2, 0.5, 0.9}) {
        const CutoffReport c = essential_cutoffs(pm, r * peak, 0.5 * r * peak);
        CHECK(c.omega_hat <= c.omega_check + 1e-12);
    }
}

TEST_CASE("undersampled lag grid is rejected") {
    SpectrumOptions opts;
    opts.lag_step = 1.0;
    CHECK_THROWS_WITH(synthesize_psf_multi(IlluminationFamily::opposite_plane_waves(pi), Psf::sinc(pi), opts),
                      doctest::Contains("lag grid too coarse"));
}

TEST_CASE("sharper localisation peaks widen the band") {
    double prev = 0.0;
    for (double w : {0.4, 0.2, 0.1, 0.05}) {
        SpectrumOptions opts;
        opts.lag_count = 1025;
        opts.freq_count = 1025;
        const PsfMulti pm = synthesize_psf_multi(IlluminationFamily::sharp_peak(w), Psf::gaussian(0.3), opts);
        const double oh = essential_cutoffs(pm, 0.1 * pm.b_upper(), 1e-3 * pm.b_upper()).omega_hat;
        CHECK(oh > prev);
        prev = oh;
    }
}

TEST_CASE("bandpass deconvolution recovers the source spectrum") {
    const PsfMulti& pm = sim_spectrum();
    const double b_lower = 0.1 * pm.b_upper();
    std::vector<cplx> truth(pm.freq.count), psi(pm.freq.count);
    for (std::size_t k = 0; k < pm.freq.count; ++k) {
        truth[k] = std::polar(1.0, 0.3 * pm.freq.at(k));
        psi[k] = truth[k] * pm.spectrum[k];
    }
    const Bandpass bp = bandpass_deconvolve(psi, pm, b_lower);
    std::size_t used = 0;
    for (std::size_t k = 0; k < pm.freq.count; ++k) {
        if (!bp.mask[k]) {
            CHECK(bp.values[k] == cplx(0, 0));
            continue;
        }
        ++used;
        CHECK(std::abs(bp.values[k] - truth[k]) < 1e-12);
    }
    CHECK(used > 0);
    CHECK_THROWS_WITH(bandpass_deconvolve(psi, pm, 2.0 * pm.b_upper()), doctest::Contains("no usable bandpass"));
}

TEST_CASE("bounded spectral noise amplifies by at most 1 / b_lower") {
    const PsfMulti& pm = sim_spectrum();
    const double b_lower = 0.2 * pm.b_upper();
    const double sigma = 1e-3;
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> phase(-pi, pi), mod(0.0, 1.0);
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<cplx> noise(pm.freq.count);
        for (auto& v : noise) v = std::polar(sigma * mod(rng), phase(rng));
        const Bandpass bp = bandpass_deconvolve(noise, pm, b_lower);
        for (std::size_t k = 0; k < pm.freq.count; ++k)
            if (bp.mask[k]) CHECK(std::abs(bp.values[k]) <= sigma / b_lower * (1.0 + 1e-12));
    }
}

TEST_CASE("stability errors vanish without noise and scale with pattern errors") {
    const auto seq = IlluminationSequence::opposite_plane_waves(pi);
    const Psf psf = Psf::sinc(pi);
    const DiscreteMeasure f = DiscreteMeasure::on_line({0.4, 0.6}, {1.0, 1.0});
    StabilityOptions opts;
    opts.seed = 3;

    const StabilityReport zero = verify_frequency_stability(f, seq, psf, NoiseBound(0.0), 3, opts);
    CHECK(zero.max_weighted_error == 0.0);

    const StabilityReport plain = verify_frequency_stability(f, seq, psf, NoiseBound(1e-2), 4, opts);
    const StabilityReport same = perturbed_stability(f, seq, psf, NoiseBound(1e-2), 0.0, 4, opts);
    REQUIRE(plain.weighted_errors.size() == same.weighted_errors.size());
    for (std::size_t i = 0; i < plain.weighted_errors.size(); ++i)
        CHECK(plain.weighted_errors[i] == same.weighted_errors[i]);

    const StabilityReport e1 = perturbed_stability(f, seq, psf, NoiseBound(0.0), 2e-2, 4, opts);
    const StabilityReport e2 = perturbed_stability(f, seq, psf, NoiseBound(0.0), 1e-2, 4, opts);
    REQUIRE(e1.max_weighted_error > 0.0);
    const double ratio = e2.max_weighted_error / e1.max_weighted_error;
    CHECK(ratio >= 0.4);
    CHECK(ratio <= 0.6);
}

TEST_CASE("pattern errors have the requested L1 norm and are reproducible") {
    const auto a = random_pattern_errors(3, 0.05, 17);
    const auto b = random_pattern_errors(3, 0.05, 17);
    REQUIRE(a.size() == 3);
    for (std::size_t q = 0; q < 3; ++q) {
        CHECK(frame_l1(a[q]) == doctest::Approx(0.05));
        CHECK(a[q].values == b[q].values);
    }
}

}  // TEST_SUITE
