#include "multillum/spectral.hpp"

#include <algorithm>
#include <random>

namespace multillum {

IlluminationFamily IlluminationFamily::plane_waves(std::vector<double> k) {
    require(!k.empty(), "plane-wave family needs at least one wavenumber");
    IlluminationFamily f;
    f.kind = Kind::plane_waves;
    f.wavenumbers = std::move(k);
    return f;
}

IlluminationFamily IlluminationFamily::opposite_plane_waves(double omega) {
    require(omega >= 0.0, "plane-wave frequency must be nonnegative");
    return plane_waves({omega, -omega});
}

IlluminationFamily IlluminationFamily::translated_profile(const Psf& ip) {
    require(ip.dim() == 1, "illumination families are one-dimensional");
    IlluminationFamily f;
    f.kind = Kind::translated_profile;
    f.profile = ip;
    return f;
}

IlluminationFamily IlluminationFamily::composite(const Psf& ip, std::vector<cplx> b, std::vector<double> c) {
    require(ip.dim() == 1, "illumination families are one-dimensional");
    require(!b.empty() && b.size() == c.size(), "composite family needs matching weights and offsets");
    IlluminationFamily f;
    f.kind = Kind::composite;
    f.profile = ip;
    f.weights = std::move(b);
    f.offsets = std::move(c);
    return f;
}

IlluminationFamily IlluminationFamily::sharp_peak(double width) {
    IlluminationFamily f;
    f.kind = Kind::sharp_peak;
    f.profile = Psf::gaussian(width, 1);
    f.width = width;
    return f;
}

IlluminationFamily IlluminationFamily::constant() {
    IlluminationFamily f;
    f.kind = Kind::constant;
    return f;
}

double IlluminationFamily::omega_illu() const {
    switch (kind) {
        case Kind::plane_waves: {
            double w = 0.0;
            for (double k : wavenumbers) w = std::max(w, std::abs(k));
            return w;
        }
        case Kind::translated_profile:
        case Kind::composite:
        case Kind::sharp_peak: return profile->cutoff();
        case Kind::constant: return 0.0;
    }
    return 0.0;
}

std::string IlluminationFamily::name() const {
    switch (kind) {
        case Kind::plane_waves: return "plane_waves";
        case Kind::translated_profile: return "translated_profile";
        case Kind::composite: return "composite";
        case Kind::sharp_peak: return "sharp_peak";
        case Kind::constant: return "constant";
    }
    return "unknown";
}

std::vector<cplx> IlluminationFamily::correlation(std::span<const double> lags, const QuadratureOptions& opts) const {
    std::vector<cplx> out(lags.size(), cplx(0.0, 0.0));
    switch (kind) {
        case Kind::constant:
            std::fill(out.begin(), out.end(), cplx(1.0, 0.0));
            break;
        case Kind::plane_waves: {
            const bool weighted = !weights.empty();
            double total = 0.0;
            for (std::size_t q = 0; q < wavenumbers.size(); ++q) total += weighted ? std::norm(weights[q]) : 1.0;
            const double n = static_cast<double>(wavenumbers.size());
            for (std::size_t i = 0; i < lags.size(); ++i) {
                cplx s(0.0, 0.0);
                for (std::size_t q = 0; q < wavenumbers.size(); ++q)
                    s += (weighted ? std::norm(weights[q]) : 1.0) * std::polar(1.0, -wavenumbers[q] * lags[i]);
                out[i] = s / n;
            }
            (void)total;
            break;
        }
        case Kind::translated_profile:
        case Kind::sharp_peak: {
            std::vector<Point> pts;
            for (double u : lags) pts.push_back({u, 0.0});
            const auto r = psf_autocorrelation(*profile, std::span<const Point>(pts), opts);
            for (std::size_t i = 0; i < lags.size(); ++i) out[i] = r[i];
            break;
        }
        case Kind::composite: {
            // sum_{l,l'} conj(b_l) b_l' R_IP(u - c_l + c_l')
            const std::size_t L = weights.size();
            std::vector<Point> pts;
            for (std::size_t l = 0; l < L; ++l)
                for (std::size_t m = 0; m < L; ++m)
                    for (double u : lags) pts.push_back({u - offsets[l] + offsets[m], 0.0});
            const auto r = psf_autocorrelation(*profile, std::span<const Point>(pts), opts);
            std::size_t idx = 0;
            for (std::size_t l = 0; l < L; ++l)
                for (std::size_t m = 0; m < L; ++m) {
                    const cplx w = std::conj(weights[l]) * weights[m];
                    for (std::size_t i = 0; i < lags.size(); ++i) out[i] += w * r[idx++];
                }
            break;
        }
    }
    return out;
}

std::vector<double> kaiser_taper(const Axis& lags, double beta) {
    std::vector<double> w(lags.count, 1.0);
    if (beta <= 0.0) return w;
    const double U = std::max(std::abs(lags.start), std::abs(lags.last()));
    const double norm0 = std::cyl_bessel_i(0.0, beta);
    for (std::size_t k = 0; k < lags.count; ++k) {
        const double r = lags.at(k) / U;
        w[k] = std::cyl_bessel_i(0.0, beta * std::sqrt(std::max(0.0, 1.0 - r * r))) / norm0;
    }
    return w;
}

std::vector<cplx> tapered_spectrum(const GridFunction& profile, const std::vector<double>& taper,
                                   std::span<const double> xi) {
    require(profile.grid.dim == 1, "spectra are computed for one-dimensional profiles");
    require(taper.size() == profile.size(), "taper length differs from profile length");
    const Axis& a = profile.grid.ax0;
    std::vector<cplx> wp(profile.size());
    for (std::size_t k = 0; k < wp.size(); ++k) wp[k] = taper[k] * profile[k];
    std::vector<cplx> out(xi.size());
    for (std::size_t i = 0; i < xi.size(); ++i) {
        const cplx step = std::polar(1.0, xi[i] * a.step);
        cplx s(0.0, 0.0), ph;
        for (std::size_t k = 0; k < wp.size(); ++k) {
            // Reseed the phase recurrence periodically to bound accumulated rounding.
            if (k % 64 == 0) ph = std::polar(1.0, xi[i] * a.at(k));
            s += wp[k] * ph;
            ph *= step;
        }
        out[i] = s * a.step;
    }
    return out;
}

cplx PsfMulti::spectrum_at(double xi) const {
    const double x[1] = {xi};
    return tapered_spectrum(profile, taper, std::span<const double>(x, 1))[0];
}

double PsfMulti::b_upper() const {
    double m = 0.0;
    for (const cplx& s : spectrum) m = std::max(m, std::abs(s));
    return m;
}

double PsfMulti::energy_outside(double radius) const {
    double tot = 0.0, out = 0.0;
    for (std::size_t k = 0; k < spectrum.size(); ++k) {
        const double e = std::norm(spectrum[k]);
        tot += e;
        if (std::abs(freq.at(k)) > radius) out += e;
    }
    return tot > 0.0 ? out / tot : 0.0;
}

namespace {

bool bandlimited(const Psf& p) {
    return p.kind() == PsfKind::sinc || p.kind() == PsfKind::sinc_squared || p.kind() == PsfKind::airy_squared;
}

}  // namespace

PsfMulti synthesize_psf_multi(const IlluminationFamily& family, const Psf& psf, const SpectrumOptions& opts) {
    require(psf.dim() == 1, "PSF_multi synthesis is one-dimensional");
    const double om = psf.cutoff() + family.omega_illu();
    require(om > 0.0 && std::isfinite(om), "PSF_multi needs a positive total cutoff");
    const double du = opts.lag_step > 0.0 ? opts.lag_step : pi / (4.0 * om);
    if (!(pi / du > om))
        throw InvalidArgument("lag grid too coarse: Nyquist frequency " + std::to_string(pi / du) +
                              " does not exceed omega_psf + omega_illu = " + std::to_string(om));
    const std::size_t K = opts.lag_count | 1u;
    require(K >= 3, "lag grid needs at least 3 samples");
    const double half = static_cast<double>((K - 1) / 2);
    const Axis lags{-half * du, du, K};

    std::vector<Point> pts(K);
    std::vector<double> u(K);
    for (std::size_t k = 0; k < K; ++k) {
        u[k] = lags.at(k);
        pts[k] = {u[k], 0.0};
    }
    const auto fpsf = psf_autocorrelation(psf, std::span<const Point>(pts), opts.quadrature);
    const auto filf = family.correlation(std::span<const double>(u), opts.quadrature);

    PsfMulti pm;
    pm.profile = GridFunction(GridSpec::line(lags));
    for (std::size_t k = 0; k < K; ++k) pm.profile[k] = filf[k] * fpsf[k];
    pm.taper = kaiser_taper(lags, opts.taper_beta);
    const double X = opts.freq_half_span > 0.0 ? opts.freq_half_span : std::min(4.0 * om, pi / du);
    require(opts.freq_count >= 3, "frequency grid needs at least 3 bins");
    pm.freq = axis_between(-X, X, opts.freq_count);
    std::vector<double> xi(pm.freq.count);
    for (std::size_t k = 0; k < xi.size(); ++k) xi[k] = pm.freq.at(k);
    pm.spectrum = tapered_spectrum(pm.profile, pm.taper, std::span<const double>(xi));
    pm.omega_psf = psf.cutoff();
    pm.omega_illu = family.omega_illu();
    pm.family = family.name();
    const bool ilf_band = family.kind == IlluminationFamily::Kind::plane_waves ||
                          family.kind == IlluminationFamily::Kind::constant ||
                          ((family.kind == IlluminationFamily::Kind::translated_profile ||
                            family.kind == IlluminationFamily::Kind::composite) &&
                           bandlimited(*family.profile));
    if (bandlimited(psf) && ilf_band) pm.exact_support = om;
    return pm;
}

CutoffReport essential_cutoffs(const PsfMulti& pm, double b_lower, double eps) {
    require(b_lower > 0.0 && eps > 0.0, "cutoff thresholds must be positive");
    require(!pm.spectrum.empty(), "PSF_multi has no spectrum");
    CutoffReport r;
    r.b_lower = b_lower;
    r.eps = eps;
    r.b_upper = pm.b_upper();
    if (b_lower > r.b_upper) throw InvalidArgument("threshold exceeds peak");

    const std::size_t n = pm.spectrum.size();
    std::vector<double> rad(n);
    for (std::size_t k = 0; k < n; ++k) rad[k] = std::abs(pm.freq.at(k));
    const double rmax = *std::max_element(rad.begin(), rad.end());

    double r_fail = std::numeric_limits<double>::infinity();
    double r_last = -1.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double a = std::abs(pm.spectrum[k]);
        if (a <= b_lower) r_fail = std::min(r_fail, rad[k]);
        if (a >= eps) r_last = std::max(r_last, rad[k]);
    }
    // Largest grid radius strictly inside the first failing radius.
    double hat = 0.0;
    for (double v : rad)
        if (v < r_fail) hat = std::max(hat, v);
    r.omega_hat = hat;

    if (r_last < 0.0) {
        r.omega_check = 0.0;
    } else {
        double next = std::numeric_limits<double>::infinity();
        for (double v : rad)
            if (v > r_last) next = std::min(next, v);
        if (std::isinf(next) || r_last >= rmax) {
            r.omega_check_resolved = false;
            r.omega_check = std::numeric_limits<double>::infinity();
        } else {
            r.omega_check = next;
        }
    }
    if (pm.exact_support) {
        const double s = *pm.exact_support;
        if (r.omega_check > s) {
            r.omega_check = s;
            r.omega_check_resolved = true;
            r.capped_by_support = true;
        }
        if (r.omega_hat > s) {
            r.omega_hat = s;
            r.capped_by_support = true;
        }
    }
    return r;
}

double omega_check_at(const PsfMulti& pm, double eps) {
    require(eps > 0.0, "cutoff threshold must be positive");
    const CutoffReport r = essential_cutoffs(pm, std::min(eps, pm.b_upper()), eps);
    if (!r.omega_check_resolved)
        throw NumericalError("omega_check unresolved: spectrum stays above " + std::to_string(eps) +
                             " up to the edge of the frequency grid");
    return r.omega_check;
}

Bandpass bandpass_deconvolve(std::span<const cplx> psi, const PsfMulti& pm, double b_lower) {
    require(psi.size() == pm.spectrum.size(), "measurement must be sampled on the PSF_multi frequency grid");
    require(b_lower > 0.0, "b_lower must be positive");
    Bandpass b;
    b.values.assign(psi.size(), cplx(0.0, 0.0));
    b.mask.assign(psi.size(), false);
    bool any = false;
    for (std::size_t k = 0; k < psi.size(); ++k)
        if (std::abs(pm.spectrum[k]) > b_lower) {
            b.mask[k] = true;
            b.values[k] = psi[k] / pm.spectrum[k];
            any = true;
        }
    if (!any) throw InvalidArgument("no usable bandpass");
    return b;
}

// ------------------------------------------------------------------ stability

namespace {

struct PlaneTerm {
    cplx level;  // I(y) = level exp(i k y)
    double k;
};

std::vector<PlaneTerm> plane_terms(const IlluminationSequence& seq) {
    require(seq.dim() == 1, "stability verification is one-dimensional");
    require(seq.all_plane_waves_or_constant(),
            "stability verification needs a translation-invariant plane-wave or constant sequence");
    std::vector<PlaneTerm> t;
    for (std::size_t q = 0; q < seq.size(); ++q) {
        const Pattern& p = seq.pattern(q);
        if (const auto* w = std::get_if<PlaneWave>(&p)) t.push_back({1.0, w->frequency * w->direction.x});
        else t.push_back({std::get<ConstantPattern>(p).level, 0.0});
    }
    return t;
}

IlluminationFamily family_of(const std::vector<PlaneTerm>& terms) {
    std::vector<double> k;
    std::vector<cplx> w;
    for (const auto& t : terms) {
        k.push_back(t.k);
        w.push_back(t.level);
    }
    IlluminationFamily f = IlluminationFamily::plane_waves(k);
    f.weights = w;
    return f;
}

// Camera-side transform h sum_x g(x) exp(i eta x).
cplx camera_dft(const GridFunction& g, double eta) {
    const Axis& a = g.grid.ax0;
    const cplx step = std::polar(1.0, eta * a.step);
    cplx ph = std::polar(1.0, eta * a.start), s(0.0, 0.0);
    for (std::size_t p = 0; p < g.size(); ++p) {
        if (p % 64 == 0) ph = std::polar(1.0, eta * a.at(p));
        s += g[p] * ph;
        ph *= step;
    }
    return s * a.step;
}

// Exact transform of the quadrature adjoint for plane-wave patterns:
// F[A*g](xi) = (1/N) sum_q conj(c_q) F[PSF](xi - k_q) h sum_x g_q(x) exp(i (xi - k_q) x).
std::vector<cplx> adjoint_spectrum(const ImageStack& g, const std::vector<PlaneTerm>& terms, const Psf& psf,
                                   const std::vector<double>& xi) {
    std::vector<cplx> out(xi.size(), cplx(0.0, 0.0));
    const double invN = 1.0 / static_cast<double>(terms.size());
    for (std::size_t i = 0; i < xi.size(); ++i) {
        cplx s(0.0, 0.0);
        for (std::size_t q = 0; q < terms.size(); ++q) {
            const double eta = xi[i] - terms[q].k;
            const double fp = psf.spectrum({eta, 0.0});
            if (fp == 0.0) continue;
            s += std::conj(terms[q].level) * fp * camera_dft(g.frames[q], eta);
        }
        out[i] = s * invN;
    }
    return out;
}

// Transform of the adjoint built from compactly supported pattern errors eps_q alone.
std::vector<cplx> perturbation_adjoint_spectrum(const ImageStack& g, const std::vector<GridFunction>& eps,
                                                const Psf& psf, const std::vector<double>& xi) {
    const GridSpec& yg = eps.front().grid;
    const auto xs = g.camera.points();
    const double h = g.camera.cell_volume();
    const double invN = 1.0 / static_cast<double>(eps.size());
    std::vector<cplx> v(yg.size(), cplx(0.0, 0.0));
    std::vector<double> k(xs.size());
    for (std::size_t m = 0; m < yg.size(); ++m) {
        const Point y = yg.point(m);
        bool any = false;
        for (const auto& e : eps) any = any || e[m] != cplx(0.0, 0.0);
        if (!any) continue;
        for (std::size_t p = 0; p < xs.size(); ++p) k[p] = psf.value_or_zero(xs[p] - y);
        cplx acc(0.0, 0.0);
        for (std::size_t q = 0; q < eps.size(); ++q) {
            if (eps[q][m] == cplx(0.0, 0.0)) continue;
            cplx s(0.0, 0.0);
            for (std::size_t p = 0; p < xs.size(); ++p) s += k[p] * g.frames[q][p];
            acc += std::conj(eps[q][m]) * s;
        }
        v[m] = acc * h * invN;
    }
    std::vector<cplx> out(xi.size());
    for (std::size_t i = 0; i < xi.size(); ++i) out[i] = camera_dft(GridFunction(yg, v), xi[i]);
    return out;
}

}  // namespace

std::vector<GridFunction> random_pattern_errors(std::size_t n, double eps, std::uint64_t seed) {
    require(eps >= 0.0, "pattern error level must be nonnegative");
    const GridSpec g = GridSpec::line(axis_between(-0.5, 1.5, 401));
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> centre(0.2, 0.8), width(0.15, 0.35), phase(0.0, 2.0 * pi);
    std::vector<GridFunction> out;
    for (std::size_t q = 0; q < n; ++q) {
        const double m = centre(rng), s = width(rng), ph = phase(rng);
        GridFunction e(g);
        for (std::size_t k = 0; k < g.size(); ++k) {
            const double d = g.point(k).x - m;
            if (std::abs(d) < s) e[k] = std::polar(0.5 * (1.0 + std::cos(pi * d / s)), ph);
        }
        const double l1 = frame_l1(e);
        for (auto& v : e.values) v *= eps / l1 * (1.0 - 1e-12);
        out.push_back(std::move(e));
    }
    return out;
}

StabilityReport perturbed_stability(const DiscreteMeasure& f, const IlluminationSequence& seq, const Psf& psf,
                                    const NoiseBound& sigma, double eps, std::size_t trials,
                                    const StabilityOptions& opts) {
    require(trials >= 1, "at least one trial required");
    require(eps >= 0.0, "pattern error level must be nonnegative");
    require(psf.has_spectrum() && psf.dim() == 1, "stability verification needs a 1D psf with an analytic spectrum");
    const auto terms = plane_terms(seq);
    const PsfMulti pm = synthesize_psf_multi(family_of(terms), psf, opts.spectrum);

    StabilityReport r;
    r.trials = trials;
    r.sigma = sigma.sigma;
    r.eps = eps;
    r.b_upper = pm.b_upper();
    r.b_lower = opts.b_lower_ratio * r.b_upper;
    const CutoffReport cut = essential_cutoffs(pm, r.b_lower, opts.eps_ratio * r.b_upper);
    r.omega_hat = cut.omega_hat;
    r.omega_check = cut.omega_check;

    std::vector<double> xi;
    std::vector<cplx> pmk;
    for (std::size_t k = 0; k < pm.spectrum.size(); ++k)
        if (std::abs(pm.spectrum[k]) > r.b_lower) {
            xi.push_back(pm.freq.at(k));
            pmk.push_back(pm.spectrum[k]);
        }
    if (xi.empty()) throw InvalidArgument("no usable bandpass");
    r.bandpass_bins = xi.size();

    const ImageStack clean = forward(f, seq, psf, opts.camera);
    const auto fa = adjoint_spectrum(clean, terms, psf, xi);
    const auto ff = fourier_of_measure(f, std::span<const double>(xi));
    for (std::size_t i = 0; i < xi.size(); ++i) r.model_bias = std::max(r.model_bias, std::abs(fa[i] - pmk[i] * ff[i]));

    for (std::size_t t = 0; t < trials; ++t) {
        const std::uint64_t s = opts.seed ^ static_cast<std::uint64_t>(t);
        const ImageStack n = noise_stack(clean, sigma, opts.mode, s, opts.sine_frequency);
        auto err = adjoint_spectrum(n, terms, psf, xi);
        if (eps > 0.0) {
            const auto e = random_pattern_errors(seq.size(), eps, s + 0x9E3779B97F4A7C15ull);
            ImageStack data = clean;
            for (std::size_t q = 0; q < data.size(); ++q)
                for (std::size_t p = 0; p < data.frames[q].size(); ++p) data.frames[q][p] += n.frames[q][p];
            const auto pe = perturbation_adjoint_spectrum(data, e, psf, xi);
            for (std::size_t i = 0; i < xi.size(); ++i) err[i] += pe[i];
        }
        double m = 0.0;
        for (const cplx& v : err) m = std::max(m, std::abs(v));
        r.weighted_errors.push_back(m);
    }
    r.max_weighted_error = *std::max_element(r.weighted_errors.begin(), r.weighted_errors.end());
    const double mn = *std::min_element(r.weighted_errors.begin(), r.weighted_errors.end());
    if (sigma.sigma > 0.0) {
        r.empirical_constant = r.max_weighted_error / sigma.sigma;
        r.min_constant = mn / sigma.sigma;
    }
    r.spread = mn > 0.0 ? r.max_weighted_error / mn : 0.0;
    return r;
}

StabilityReport verify_frequency_stability(const DiscreteMeasure& f, const IlluminationSequence& seq, const Psf& psf,
                                           const NoiseBound& sigma, std::size_t trials,
                                           const StabilityOptions& opts) {
    return perturbed_stability(f, seq, psf, sigma, 0.0, trials, opts);
}

PerturbedReport verify_perturbed_patterns(const DiscreteMeasure& f, const IlluminationSequence& seq, double eps,
                                          const Psf& psf, const NoiseBound& sigma, std::size_t trials,
                                          const StabilityOptions& opts) {
    require(sigma.sigma > 0.0 && eps > 0.0, "the joint sweep needs positive sigma and eps");
    PerturbedReport rep;
    rep.base = perturbed_stability(f, seq, psf, sigma, eps, trials, opts);
    const double mult[4] = {0.0, 1.0, 2.0, 4.0};
    for (double a : mult)
        for (double b : mult) {
            if (a == 0.0 && b == 0.0) continue;
            PerturbedPoint p;
            p.sigma = a * sigma.sigma;
            p.eps = b * eps;
            p.error = perturbed_stability(f, seq, psf, NoiseBound(p.sigma, sigma.norm), p.eps, trials, opts)
                          .max_weighted_error;
            rep.sweep.push_back(p);
        }
    // Relative least squares for error ~ a sigma + b eps, restricted to a, b >= 0.
    double s11 = 0, s12 = 0, s22 = 0, r1 = 0, r2 = 0;
    for (const auto& p : rep.sweep) {
        const double w = 1.0 / (p.error * p.error);
        s11 += w * p.sigma * p.sigma;
        s12 += w * p.sigma * p.eps;
        s22 += w * p.eps * p.eps;
        r1 += w * p.sigma * p.error;
        r2 += w * p.eps * p.error;
    }
    const double det = s11 * s22 - s12 * s12;
    double a = (r1 * s22 - r2 * s12) / det;
    double b = (s11 * r2 - s12 * r1) / det;
    if (a < 0.0) {
        a = 0.0;
        b = r2 / s22;
    } else if (b < 0.0) {
        b = 0.0;
        a = r1 / s11;
    }
    rep.coef_sigma = a;
    rep.coef_eps = b;
    for (auto& p : rep.sweep) {
        p.fitted = a * p.sigma + b * p.eps;
        rep.max_relative_residual = std::max(rep.max_relative_residual, std::abs(p.error - p.fitted) / p.fitted);
    }
    return rep;
}

}  // namespace multillum
