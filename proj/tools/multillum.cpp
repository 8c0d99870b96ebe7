#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "config.hpp"
#include "multillum/adversarial.hpp"
#include "multillum/csv.hpp"
#include "multillum/imaging.hpp"
#include "multillum/limits.hpp"
#include "multillum/spectral.hpp"
#include "report.hpp"

using namespace multillum;
using namespace multillum::cli;
using nlohmann::json;

namespace {

enum ExitCode { exit_ok = 0, exit_internal = 1, exit_config = 2, exit_certification = 3, exit_numerical = 4 };

std::string choice(const Config& c, const std::string& key, const std::string& fallback,
                   std::initializer_list<const char*> allowed) {
    const std::string v = c.text(key, fallback);
    std::string list;
    for (const char* a : allowed) {
        if (v == a) return v;
        list += (list.empty() ? "" : ", ") + std::string(a);
    }
    throw ConfigError(key + " = '" + v + "': expected one of " + list);
}

// Analytic kinds by key; `file` reads a sampled profile.
Psf make_psf(const Config& c, const std::string& kind_key, const std::string& omega_key, const std::string& width_key) {
    const std::string kind = choice(c, kind_key, "sinc", {"sinc", "sinc2", "airy2", "gauss", "file"});
    if (kind == "gauss") return Psf::gaussian(c.number(width_key, 0.3));
    if (kind == "file") {
        const std::string path = c.text("psf.file", "");
        if (path.empty()) throw ConfigError("psf.kind = file needs psf.file");
        std::ifstream in(path);
        if (!in) throw ConfigError("psf.file: cannot open " + path);
        return read_sampled_psf_csv(in, c.number("psf.cutoff", 0.0));
    }
    const double omega = c.number(omega_key, pi);
    if (kind == "sinc") return Psf::sinc(omega);
    if (kind == "sinc2") return Psf::sinc_squared(omega);
    return Psf::airy_squared(omega, 1);
}

struct Setup {
    Psf psf = Psf::sinc(pi);
    IlluminationSequence seq = IlluminationSequence::constant(1);
    IlluminationFamily family = IlluminationFamily::constant();
};

std::vector<double> pattern_offsets(const Config& c) {
    const double lo = c.number("illumination.center_min", -20.0);
    const double hi = c.number("illumination.center_max", 20.0);
    const double step = c.number("illumination.center_step", 0.05);
    if (!(hi > lo) || !(step > 0.0)) throw ConfigError("illumination centres need center_min < center_max and step > 0");
    const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = lo + step * static_cast<double>(i);
    return t;
}

Setup make_setup(const Config& c) {
    Setup s;
    s.psf = make_psf(c, "psf.kind", "psf.omega", "psf.width");
    const std::string kind =
        choice(c, "illumination.kind", "plane_waves", {"plane_waves", "constant", "translated", "sharp_peak", "composite"});
    if (kind == "plane_waves") {
        std::vector<double> k;
        if (c.has("illumination.wavenumbers")) {
            k = c.numbers("illumination.wavenumbers", {});
        } else {
            const double f = c.number("illumination.frequency", pi);
            k = {f, -f};
        }
        std::vector<Pattern> patterns;
        for (double w : k) patterns.emplace_back(PlaneWave{Point{w < 0.0 ? -1.0 : 1.0, 0.0}, std::abs(w)});
        s.seq = IlluminationSequence(1, std::move(patterns));
        s.family = IlluminationFamily::plane_waves(k);
    } else if (kind == "constant") {
        s.seq = IlluminationSequence::constant(static_cast<std::size_t>(c.integer("illumination.count", 1)));
        s.family = IlluminationFamily::constant();
    } else if (kind == "translated" || kind == "sharp_peak") {
        const Psf ip = kind == "translated"
                           ? make_psf(c, "illumination.profile", "illumination.profile_omega", "illumination.profile_width")
                           : Psf::gaussian(c.number("illumination.width", 0.1));
        std::vector<Point> centers;
        for (double t : pattern_offsets(c)) centers.push_back({t, 0.0});
        s.seq = IlluminationSequence::translated_profile(ip, centers);
        s.family = kind == "translated" ? IlluminationFamily::translated_profile(ip)
                                        : IlluminationFamily::sharp_peak(c.number("illumination.width", 0.1));
    } else {
        const Psf ip = make_psf(c, "illumination.profile", "illumination.profile_omega", "illumination.profile_width");
        const auto re = c.numbers("illumination.weights_re", {1.0});
        const auto im = c.numbers("illumination.weights_im", std::vector<double>(re.size(), 0.0));
        const auto off = c.numbers("illumination.offsets", {0.0});
        if (re.size() != im.size() || re.size() != off.size())
            throw ConfigError("illumination.weights_re, weights_im and offsets need equal lengths");
        std::vector<cplx> b;
        for (std::size_t l = 0; l < re.size(); ++l) b.emplace_back(re[l], im[l]);
        std::vector<Composite> patterns;
        for (double t : pattern_offsets(c)) {
            Composite p;
            p.weights = b;
            for (double o : off) p.centers.push_back({o + t, 0.0});
            patterns.push_back(std::move(p));
        }
        s.seq = IlluminationSequence::composite(ip, patterns);
        s.family = IlluminationFamily::composite(ip, b, off);
    }
    return s;
}

SpectrumOptions spectrum_options(const Config& c) {
    SpectrumOptions o;
    o.lag_count = static_cast<std::size_t>(c.integer("spectrum.lag_count", 4097));
    o.freq_count = static_cast<std::size_t>(c.integer("spectrum.freq_count", 4097));
    o.taper_beta = c.number("spectrum.taper_beta", 30.0);
    return o;
}

std::vector<double> axis_values(const Axis& a) {
    std::vector<double> v(a.count);
    for (std::size_t i = 0; i < a.count; ++i) v[i] = a.at(i);
    return v;
}

// ---------------------------------------------------------------- kernel

int cmd_kernel(const Config& c, OutputDir& out) {
    const Setup s = make_setup(c);
    const double z0 = c.number("kernel.z_min", 0.0), z1 = c.number("kernel.z_max", 1.0);
    const auto zn = static_cast<std::size_t>(c.integer("kernel.z_count", 21));
    const GridSpec zs = GridSpec::line(axis_between(z0, z1, zn));

    const KernelMatrix G = imaging_kernel(s.seq, s.psf, zs, zs);
    {
        std::ofstream os = out.csv_stream("kernel.csv");
        write_kernel_csv(os, G);
    }

    const PsfMulti pm = synthesize_psf_multi(s.family, s.psf, spectrum_options(c));
    std::vector<std::vector<double>> prof, spec;
    for (std::size_t k = 0; k < pm.profile.values.size(); ++k)
        prof.push_back({pm.profile.grid.ax0.at(k), pm.profile.values[k].real(), pm.profile.values[k].imag()});
    out.csv("psf_multi_profile.csv", {"u", "re", "im"}, prof);
    std::vector<double> xi = axis_values(pm.freq), mag(pm.spectrum.size());
    for (std::size_t k = 0; k < pm.spectrum.size(); ++k) {
        mag[k] = std::abs(pm.spectrum[k]);
        spec.push_back({xi[k], pm.spectrum[k].real(), pm.spectrum[k].imag(), mag[k]});
    }
    out.csv("psf_multi_spectrum.csv", {"xi", "re", "im", "abs"}, spec);

    const double bu = pm.b_upper();
    const CutoffReport r = essential_cutoffs(pm, c.number("spectrum.b_lower_ratio", 0.1) * bu,
                                             c.number("spectrum.eps_ratio", 1e-3) * bu);
    const double energy = pm.energy_outside(pm.omega_multi());
    json doc = {{"family", pm.family},
                {"psf", s.psf.key()},
                {"patterns", s.seq.size()},
                {"omega_psf", pm.omega_psf},
                {"omega_illu", pm.omega_illu},
                {"omega_multi", pm.omega_multi()},
                {"b_upper", r.b_upper},
                {"b_lower", r.b_lower},
                {"eps", r.eps},
                {"omega_hat", r.omega_hat},
                {"omega_check", r.omega_check},
                {"omega_check_resolved", r.omega_check_resolved},
                {"capped_by_support", r.capped_by_support},
                {"omega_hat_over_omega_psf", r.omega_hat / pm.omega_psf},
                {"energy_outside_omega_multi", energy},
                {"support_audit_pass", energy < 1e-3}};

    // Confocal with identical sinc profiles: the spectrum is a triangle on [-2 omega, 2 omega].
    const auto& ip = s.family.profile;
    if (s.family.kind == IlluminationFamily::Kind::translated_profile && ip && ip->kind() == PsfKind::sinc &&
        s.psf.kind() == PsfKind::sinc && ip->omega() == s.psf.omega()) {
        const double w = 2.0 * s.psf.omega();
        const double peak = std::abs(pm.spectrum_at(0.0));
        double worst = 0.0;
        for (std::size_t k = 0; k < xi.size(); ++k)
            if (std::abs(xi[k]) <= w) worst = std::max(worst, std::abs(mag[k] - peak * (1.0 - std::abs(xi[k]) / w)));
        doc["triangle_linf_relative"] = worst / peak;
        doc["triangle_audit_pass"] = worst / peak < 1e-2;
    }
    out.json("cutoffs.json", doc);
    if (c.flag("kernel.svg", true))
        out.svg("spectrum.svg", xi, mag, "frequency xi", "|F[PSF_multi]|", "PSF_multi spectrum (" + pm.family + ")");
    return exit_ok;
}

// ---------------------------------------------------------------- stability

int cmd_stability(const Config& c, OutputDir& out, std::uint64_t seed) {
    const Setup s = make_setup(c);
    const auto pos = c.numbers("stability.sources", {0.3, 0.45, 0.7});
    const auto amp = c.numbers("stability.amplitudes", std::vector<double>(pos.size(), 1.0));
    if (pos.size() != amp.size()) throw ConfigError("stability.sources and stability.amplitudes need equal lengths");
    const DiscreteMeasure f = DiscreteMeasure::on_line(pos, std::vector<cplx>(amp.begin(), amp.end()));

    StabilityOptions o;
    o.seed = seed;
    o.camera = CameraGrid{1, c.number("stability.camera_half_width", 8.0),
                          static_cast<std::size_t>(c.integer("stability.camera_samples", 160))};
    o.mode = choice(c, "stability.noise", "uniform", {"uniform", "sine"}) == "sine" ? NoiseMode::worst_case_sine
                                                                                    : NoiseMode::uniform_bounded;
    o.sine_frequency = Point{c.number("stability.sine_frequency", 1.0), 0.0};
    o.b_lower_ratio = c.number("spectrum.b_lower_ratio", 0.1);
    o.eps_ratio = c.number("spectrum.eps_ratio", 1e-3);
    o.spectrum = spectrum_options(c);
    const NoiseNorm norm = choice(c, "stability.norm", "l1", {"l1", "sup"}) == "sup" ? NoiseNorm::sup : NoiseNorm::l1;

    const auto sigmas = c.numbers("stability.sigma", {1e-2, 5e-3});
    const double eps = c.number("stability.eps", 0.0);
    const auto trials = static_cast<std::size_t>(c.integer("stability.trials", 20));

    std::vector<std::vector<double>> rows, sweep;
    json runs = json::array();
    double first = 0.0;
    for (std::size_t i = 0; i < sigmas.size(); ++i) {
        const NoiseBound nb(sigmas[i], norm);
        const StabilityReport r = eps == 0.0 ? verify_frequency_stability(f, s.seq, s.psf, nb, trials, o)
                                             : perturbed_stability(f, s.seq, s.psf, nb, eps, trials, o);
        if (i == 0) first = r.max_weighted_error;
        const double ratio = first > 0.0 ? r.max_weighted_error / first : 0.0;
        for (std::size_t t = 0; t < r.weighted_errors.size(); ++t)
            rows.push_back({sigmas[i], eps, static_cast<double>(t), r.weighted_errors[t],
                            sigmas[i] > 0.0 ? r.weighted_errors[t] / sigmas[i] : 0.0});
        sweep.push_back({sigmas[i], eps, r.max_weighted_error, r.empirical_constant, ratio});
        runs.push_back({{"sigma", r.sigma},
                        {"eps", r.eps},
                        {"trials", r.trials},
                        {"b_lower", r.b_lower},
                        {"b_upper", r.b_upper},
                        {"omega_hat", r.omega_hat},
                        {"omega_check", r.omega_check},
                        {"bandpass_bins", r.bandpass_bins},
                        {"max_weighted_error", r.max_weighted_error},
                        {"empirical_constant", r.empirical_constant},
                        {"min_constant", r.min_constant},
                        {"spread", r.spread},
                        {"model_bias", r.model_bias},
                        {"ratio_to_first", ratio}});
    }
    out.csv("trials.csv", {"sigma", "eps", "trial", "weighted_error", "constant"}, rows);
    out.csv("sweep.csv", {"sigma", "eps", "max_weighted_error", "empirical_constant", "ratio"}, sweep);

    json doc = {{"noise", o.mode == NoiseMode::worst_case_sine ? "sine" : "uniform"},
                {"norm", norm == NoiseNorm::sup ? "sup" : "l1"},
                {"runs", runs}};
    if (c.flag("stability.fit", false)) {
        const PerturbedReport p = verify_perturbed_patterns(f, s.seq, c.number("stability.fit_eps", eps > 0 ? eps : 1e-2),
                                                            s.psf, NoiseBound(sigmas.front(), norm), trials, o);
        json pts = json::array();
        for (const auto& q : p.sweep)
            pts.push_back({{"sigma", q.sigma}, {"eps", q.eps}, {"error", q.error}, {"fitted", q.fitted}});
        doc["affine_fit"] = {{"coef_sigma", p.coef_sigma},
                             {"coef_eps", p.coef_eps},
                             {"max_relative_residual", p.max_relative_residual},
                             {"points", pts}};
    }
    out.json("stability.json", doc);
    return exit_ok;
}

// ---------------------------------------------------------------- adversarial

json certificate_json(const Certificate& cert) {
    return {{"audit_points", cert.audit_points},
            {"audit_half_span", cert.audit_half_span},
            {"max_gap", cert.max_gap},
            {"tail_bound", cert.tail_bound},
            {"moment_residuals", cert.moment_residuals},
            {"gap_ok", cert.gap_ok},
            {"tail_ok", cert.tail_ok},
            {"pass", cert.pass}};
}

int cmd_adversarial(const Config& c, OutputDir& out) {
    const Setup s = make_setup(c);
    const PsfMulti pm = synthesize_psf_multi(s.family, s.psf, spectrum_options(c));
    const AdversarialKind kind = parse_adversarial_kind(c.text("adversarial.kind", "positive"));
    const int n = static_cast<int>(c.integer("adversarial.n", 3));
    const double m_min = c.number("adversarial.m_min", 1.0);
    const double sigma = c.has("adversarial.sigma") ? c.number("adversarial.sigma", 0.0)
                                                    : c.number("adversarial.sigma_ratio", 1e-2) * m_min * pm.b_upper();
    AdversarialOptions o;
    o.s = c.number("adversarial.s", 4.0);
    o.normalize_all = c.flag("adversarial.normalize_all", false);

    AdversarialPair pair = construct_pair(kind, n, sigma, m_min, pm, o);
    const bool negative = c.flag("adversarial.negative_control", false);
    if (negative) pair = perturb_node(pair, pair.nodes.size() - 1, 10.0 * pair.tau);
    const auto min_points = static_cast<std::size_t>(c.integer("adversarial.audit_points", 2049));
    const std::vector<double> xi = audit_grid(pair, min_points);
    pair.certificate = certify_pair(pair, pm, xi);
    const AmplitudeAudit audit = amplitude_bounds_audit(pair);

    {
        std::ofstream os = out.csv_stream("mu.csv");
        write_measure_csv(os, pair.mu);
    }
    {
        std::ofstream os = out.csv_stream("mu_hat.csv");
        write_measure_csv(os, pair.mu_hat);
    }
    const std::vector<cplx> spec = tapered_spectrum(pm.profile, pm.taper, xi);
    const std::vector<cplx> fm = fourier_of_measure(pair.mu, std::span<const double>(xi));
    const std::vector<cplx> fh = fourier_of_measure(pair.mu_hat, std::span<const double>(xi));
    std::vector<std::vector<double>> rows;
    std::vector<double> gap(xi.size());
    for (std::size_t k = 0; k < xi.size(); ++k) {
        gap[k] = std::abs(spec[k]) * std::abs(fh[k] - fm[k]);
        rows.push_back({xi[k], std::abs(spec[k]), gap[k]});
    }
    out.csv("gap.csv", {"xi", "abs_spectrum", "gap"}, rows);
    out.svg("gap.svg", xi, gap, "frequency xi", "spectral gap", "adversarial gap (" + to_string(kind) + ")");

    json doc = {{"kind", to_string(kind)},
                {"n", pair.n},
                {"sigma", pair.sigma},
                {"m_min", pair.m_min},
                {"s", pair.s},
                {"tau", pair.tau},
                {"threshold", pair.threshold},
                {"omega_check", pair.omega_check},
                {"b_upper", pair.b_upper},
                {"degree", pair.degree},
                {"nodes", pair.nodes},
                {"amplitudes", pair.amplitudes},
                {"mu_atoms", pair.mu.size()},
                {"mu_hat_atoms", pair.mu_hat.size()},
                {"min_separation_mu", pair.mu.size() > 1 ? json(min_separation(pair.mu)) : json(nullptr)},
                {"negative_control", negative},
                {"certificate", certificate_json(pair.certificate)},
                {"amplitude_audit",
                 {{"sum_abs", audit.sum_abs},
                  {"sum_bound", audit.sum_bound},
                  {"sum_ok", audit.sum_ok},
                  {"ratio", audit.ratio},
                  {"ratio_bound", audit.ratio_bound ? json(*audit.ratio_bound) : json(nullptr)},
                  {"ratio_ok", audit.ratio_ok}}}};
    out.json("certificate.json", doc);
    std::cout << "certificate " << (pair.certificate.pass ? "pass" : "FAIL") << ": max gap / sigma "
              << pair.certificate.max_gap / sigma << ", tail / sigma " << pair.certificate.tail_bound / sigma
              << (negative ? " (negative control)" : "") << "\n";
    return pair.certificate.pass ? exit_ok : exit_certification;
}

// ---------------------------------------------------------------- limits

json row_json(const LimitRow& r) {
    return {{"n", r.n},
            {"omega_hat", r.omega_hat},
            {"location_upper", r.location_upper},
            {"location_lower", r.location_lower},
            {"number_upper", r.number_upper},
            {"number_lower", r.number_lower},
            {"cluster_tau", r.cluster_tau},
            {"cluster_spacing", r.cluster_spacing},
            {"omega_check_location", r.omega_check_location},
            {"omega_check_number", r.omega_check_number},
            {"omega_check_cluster", r.omega_check_cluster}};
}

std::vector<double> row_values(const LimitRow& r) {
    return {static_cast<double>(r.n), r.omega_hat,       r.location_upper,       r.location_lower,
            r.number_upper,           r.number_lower,    r.cluster_tau,          r.cluster_spacing,
            r.omega_check_location,   r.omega_check_number, r.omega_check_cluster};
}

// Pinned-coordinate grid scan, independent of the library search; real matrices with at most 3 columns.
double grid_incoherence(const Eigen::MatrixXd& m, int points) {
    const auto n = m.cols();
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index p = 0; p < n; ++p) {
        const Eigen::Index free = n - 1;
        long total = 1;
        for (Eigen::Index i = 0; i < free; ++i) total *= points;
        Eigen::VectorXd x(n);
        for (long idx = 0; idx < total; ++idx) {
            long rem = idx;
            for (Eigen::Index j = 0, f = 0; j < n; ++j) {
                if (j == p) {
                    x(j) = 1.0;
                    continue;
                }
                x(j) = -1.0 + 2.0 * static_cast<double>(rem % points) / (points - 1);
                rem /= points;
                ++f;
            }
            best = std::min(best, (m * x).cwiseAbs().maxCoeff());
        }
    }
    return best;
}

int cmd_limits(const Config& c, OutputDir& out) {
    const Setup s = make_setup(c);
    const PsfMulti pm = synthesize_psf_multi(s.family, s.psf, spectrum_options(c));
    const double m_min = c.number("limits.m_min", 1.0);
    const double sigma = c.has("limits.sigma") ? c.number("limits.sigma", 0.0)
                                               : c.number("limits.sigma_ratio", 1e-3) * m_min * pm.b_upper();
    const double b_lower = c.number("spectrum.b_lower_ratio", 0.1) * pm.b_upper();
    const double c_supp = c.number("limits.c_supp", 1.0), c_num = c.number("limits.c_num", 1.0);
    const double sfac = c.number("limits.s", 4.0);
    const int n_min = static_cast<int>(c.integer("limits.n_min", 2));
    const int n_max = static_cast<int>(c.integer("limits.n_max", 5));
    if (n_min < 2 || n_max < n_min) throw ConfigError("limits.n_min/n_max: need 2 <= n_min <= n_max");

    std::cerr << "warning: C_supp = " << c_supp << " and C_num = " << c_num
              << " are placeholders; the limits are formula evaluations, not certified constants\n";

    std::vector<std::vector<double>> rows;
    json table = json::array();
    for (int n = n_min; n <= n_max; ++n) {
        const LimitRow r = evaluate_limits(pm, n, sigma, m_min, b_lower, c_supp, c_num, sfac);
        rows.push_back(row_values(r));
        table.push_back(row_json(r));
    }
    out.csv("limits.csv",
            {"n", "omega_hat", "location_upper", "location_lower", "number_upper", "number_lower", "cluster_tau",
             "cluster_spacing", "omega_check_location", "omega_check_number", "omega_check_cluster"},
            rows);

    // Scaling sigma and m_min together leaves every limit unchanged.
    const double scale = c.number("limits.homogeneity_scale", 10.0);
    const LimitRow a = evaluate_limits(pm, n_min, sigma, m_min, b_lower, c_supp, c_num, sfac);
    const LimitRow b = evaluate_limits(pm, n_min, scale * sigma, scale * m_min, b_lower, c_supp, c_num, sfac);
    double dev = 0.0;
    const auto va = row_values(a), vb = row_values(b);
    for (std::size_t i = 0; i < va.size(); ++i)
        if (va[i] != 0.0) dev = std::max(dev, std::abs(vb[i] - va[i]) / std::abs(va[i]));

    json doc = {{"sigma", sigma},
                {"m_min", m_min},
                {"b_lower", b_lower},
                {"b_upper", pm.b_upper()},
                {"c_supp", c_supp},
                {"c_num", c_num},
                {"s", sfac},
                {"family", pm.family},
                {"rows", table},
                {"homogeneity", {{"scale", scale}, {"n", n_min}, {"max_relative_deviation", dev}}},
                {"formulas",
                 {{"location_upper", "(C_supp/omega_hat) (sigma/(m_min b_lower))^(1/(2n-1))"},
                  {"location_lower", "(e^-1/omega_check) (sigma/(m_min b_upper))^(1/(2n-1))"},
                  {"number_upper", "(C_num/omega_hat) (sigma/(m_min b_lower))^(1/(2n-2))"},
                  {"number_lower", "2 (e^-1/omega_check) (sigma/(m_min b_upper))^(1/(2n-2))"},
                  {"cluster_tau", "(0.2 e^-1/(omega_check s^((2n+1)/(2n-1)))) (sigma/(m_min b_upper))^(1/(2n-1))"},
                  {"unknown_pattern", "(2.2 e pi/omega) ((1/incoherence) (sigma/m_min))^(1/n)"}}},
                {"warning", "C_supp and C_num are placeholders; values are formula evaluations, not certified constants"}};

    const std::string path = c.text("limits.incoherence_csv", "");
    if (!path.empty()) {
        std::ifstream in(path);
        if (!in) throw ConfigError("limits.incoherence_csv: cannot open " + path);
        const csv::Table t = csv::read(in);
        const bool complex_entries = choice(c, "limits.incoherence_format", "real", {"real", "complex"}) == "complex";
        const std::size_t cols = complex_entries ? t.header.size() / 2 : t.header.size();
        if (t.rows.empty() || cols == 0 || (complex_entries && t.header.size() % 2 != 0))
            throw ConfigError("limits.incoherence_csv: need a header and at least one row (re,im column pairs if complex)");
        Eigen::MatrixXcd im(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(cols));
        for (std::size_t i = 0; i < t.rows.size(); ++i)
            for (std::size_t j = 0; j < cols; ++j)
                im(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                    complex_entries ? cplx(t.rows[i][2 * j], t.rows[i][2 * j + 1]) : cplx(t.rows[i][j], 0.0);
        IncoherenceOptions io;
        io.complex_search = c.flag("limits.incoherence_complex", false);
        const double value = illumination_incoherence(im, io);
        json sub = {{"rows", im.rows()},
                    {"columns", im.cols()},
                    {"complex_search", io.complex_search},
                    {"incoherence", value}};
        if (!complex_entries && !io.complex_search && cols <= 3) {
            const double oracle = grid_incoherence(im.real(), cols == 3 ? 401 : 20001);
            sub["oracle_grid"] = oracle;
            sub["oracle_difference"] = value - oracle;
        }
        const double omega = c.number("limits.omega", pm.omega_multi());
        sub["omega"] = omega;
        sub["unknown_pattern_limit"] = value > 0.0 ? json(unknown_pattern_limit(static_cast<int>(cols), sigma, m_min,
                                                                                omega, value))
                                                   : json(nullptr);
        doc["incoherence"] = sub;
    }
    out.json("limits.json", doc);
    return exit_ok;
}

// ---------------------------------------------------------------- quadrature

// Least-squares slope and intercept of log e against log M.
std::pair<double, double> loglog_fit(const std::vector<double>& m, const std::vector<double>& e) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) {
        const double x = std::log(m[i]), y = std::log(e[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double den = n * sxx - sx * sx;
    if (den == 0.0) return {0.0, sy / n};
    const double slope = (n * sxy - sx * sy) / den;
    return {slope, (sy - slope * sx) / n};
}

int cmd_quadrature(const Config& c, OutputDir& out) {
    Config d = c;
    if (!c.has("illumination.kind")) d.set("illumination.kind", "constant", "quadrature default");
    const Setup s = make_setup(d);
    const auto Ms = c.numbers("quadrature.M", {64, 128, 256, 512});
    const auto Rs = c.numbers("quadrature.R", {8, 16});
    const auto zs_list = c.numbers("quadrature.z", {0.0, 0.5, 1.0});
    const auto sub = static_cast<std::size_t>(c.integer("quadrature.subcells", 16));
    for (double M : Ms)
        if (M < 1 || M != std::floor(M)) throw ConfigError("quadrature.M: cell counts must be positive integers");
    for (double R : Rs)
        if (!(R > 0)) throw ConfigError("quadrature.R: half-widths must be positive");

    std::vector<Point> pts;
    for (double z : zs_list) pts.push_back({z, 0.0});
    const GridSpec zs = zs_list.size() >= 2 ? GridSpec::line(axis_between(zs_list.front(), zs_list.back(), zs_list.size()))
                                            : GridSpec::line(Axis{zs_list.front(), 1.0, 2});
    const KernelMatrix G = imaging_kernel(s.seq, s.psf, zs, zs);

    std::vector<std::vector<double>> rows;
    json fits = json::array();
    std::vector<double> constants;
    for (double R : Rs) {
        std::vector<double> errs;
        double prev = 0.0;
        for (double Mv : Ms) {
            const auto M = static_cast<std::size_t>(Mv);
            const double defect = riemann_defect(s.seq, s.psf, zs, zs, M, R, sub).maxCoeff();
            const KernelMatrix W = discrete_kernel(s.seq, s.psf, zs, zs, M, R);
            const double kernel_error = (std::pow(2.0 * R, zs.dim) * W.values - G.values).cwiseAbs().maxCoeff();
            const double slope = errs.empty() || prev <= 0.0 ? std::numeric_limits<double>::quiet_NaN()
                                                             : std::log(defect / prev) / std::log(Mv / Ms[errs.size() - 1]);
            rows.push_back({R, Mv, defect, kernel_error, slope, defect * Mv});
            errs.push_back(defect);
            prev = defect;
        }
        const auto [slope, intercept] = errs.size() >= 2 ? loglog_fit(Ms, errs) : std::pair{0.0, std::log(errs[0])};
        double cst = 0.0;
        for (std::size_t i = 0; i < errs.size(); ++i) cst += errs[i] * Ms[i];
        cst /= static_cast<double>(errs.size());
        constants.push_back(cst);
        fits.push_back({{"R", R}, {"slope", slope}, {"log_constant", intercept}, {"mean_error_times_M", cst}});
    }
    {
        std::ofstream os = out.csv_stream("convergence.csv");
        os << "R,M,defect,kernel_error,slope,defect_times_M\n";
        for (const auto& r : rows) {
            for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << (std::isnan(r[i]) ? "" : csv::number(r[i]));
            os << "\n";
        }
    }
    json doc = {{"psf", s.psf.key()}, {"patterns", s.seq.size()}, {"fits", fits}, {"z", zs_list}};
    if (constants.size() >= 2) doc["constant_ratio_last_over_first"] = constants.back() / constants.front();
    out.json("quadrature.json", doc);
    return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-illumination imaging: kernels, stability checks, adversarial pairs and resolution limits"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path, out_dir, preset_name;
    std::uint64_t seed = 0;
    std::vector<std::string> overrides;
    bool negative_control = false;
    auto* seed_opt = app.add_option("--seed", seed, "RNG seed (overrides run.seed)");
    app.add_option("--config", config_path, "Config file: [section] headers and key = value lines")->check(CLI::ExistingFile);
    app.add_option("--out", out_dir, "Output directory (overrides run.out)");
    app.add_option("--preset", preset_name, "Preset PSF and illumination")
        ->check(CLI::IsMember({"sim", "confocal", "smlm", "beam"}));
    app.add_option("--set", overrides, "Override one key: section.key=value (repeatable)");

    const std::map<std::string, std::string> commands = {
        {"kernel", "Imaging kernel, PSF_multi profile and spectrum, essential cutoffs"},
        {"stability", "Bandpass stability trials and the sigma sweep"},
        {"adversarial", "Construct and certify a worst-case source pair"},
        {"limits", "Resolution-limit table, homogeneity check, incoherence"},
        {"quadrature", "Discrete kernel convergence table"}};
    for (const auto& [name, help] : commands) {
        auto* sc = app.add_subcommand(name, help);
        if (name == "adversarial")
            sc->add_flag("--negative-control", negative_control, "Shift the last node by 10 tau; certification must fail");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_config;
    }
    const std::string sub = app.get_subcommands().front()->get_name();

    try {
        Config cfg = config_path.empty() ? Config{} : Config::load(config_path);
        const std::string preset_key = preset_name.empty() ? cfg.text("run.preset", "") : preset_name;
        if (!preset_key.empty()) {
            Config merged = preset(preset_key);
            merged.merge(cfg);
            if (!preset_name.empty()) merged.merge(preset(preset_name));
            cfg = merged;
        }
        for (const std::string& o : overrides) {
            const auto eq = o.find('=');
            if (eq == std::string::npos) throw ConfigError("--set " + o + ": expected section.key=value");
            cfg.set(o.substr(0, eq), o.substr(eq + 1), "--set");
        }
        if (*seed_opt) cfg.set("run.seed", std::to_string(seed), "--seed");
        if (!out_dir.empty()) cfg.set("run.out", out_dir, "--out");
        if (negative_control) cfg.set("adversarial.negative_control", "true", "--negative-control");

        const std::uint64_t run_seed = cfg.unsigned_integer("run.seed", 1);
        // The output location does not enter the hash, so relocated reruns stay byte-identical.
        Config hashed = cfg;
        hashed.erase("run.out");
        const std::string hash = hex64(fnv1a(sub + "\n" + hashed.canonical()));
        OutputDir out(cfg.text("run.out", "multillum-out"), Provenance{sub, hash, run_seed});

        int code = exit_ok;
        if (sub == "kernel") code = cmd_kernel(cfg, out);
        else if (sub == "stability") code = cmd_stability(cfg, out, run_seed);
        else if (sub == "adversarial") code = cmd_adversarial(cfg, out);
        else if (sub == "limits") code = cmd_limits(cfg, out);
        else code = cmd_quadrature(cfg, out);

        std::cout << sub << ": wrote";
        for (const auto& f : out.written()) std::cout << " " << f;
        std::cout << " to " << out.path().string() << " (config " << hash << ")\n";
        return code;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_config;
    } catch (const InvalidArgument& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return exit_config;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return exit_numerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_internal;
    }
}
