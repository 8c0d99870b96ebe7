#include "multillum/optics.hpp"

#include <algorithm>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "multillum/csv.hpp"

namespace multillum {

double bessel_j1(double x) {
    const double ax = std::abs(x);
    if (ax < 12.0) {
        // Ascending series sum_k (-1)^k (x/2)^(2k+1) / (k! (k+1)!).
        const double h = 0.5 * ax;
        const double h2 = h * h;
        double term = h;
        double sum = term;
        for (int k = 1; k < 200; ++k) {
            term *= -h2 / (static_cast<double>(k) * static_cast<double>(k + 1));
            sum += term;
            if (std::abs(term) < 1e-17 * std::abs(sum) && k > h) break;
        }
        return x < 0 ? -sum : sum;
    }
    // Hankel asymptotic expansion, truncated at its smallest term.
    const double mu = 4.0;
    const double chi = ax - 0.75 * pi;
    double p = 1.0, q = 0.0;
    double a = 1.0;  // a_k / x^k
    double prev = std::numeric_limits<double>::infinity();
    for (int k = 1; k < 60; ++k) {
        const double odd = 2.0 * k - 1.0;
        a *= (mu - odd * odd) / (static_cast<double>(k) * 8.0 * ax);
        const double mag = std::abs(a);
        if (mag > prev || mag < 1e-17) break;
        prev = mag;
        // k odd contributes to Q with sign (-1)^((k-1)/2); k even to P with sign (-1)^(k/2).
        if (k % 2 == 1) q += ((k / 2) % 2 == 0 ? a : -a);
        else p += ((k / 2) % 2 == 0 ? a : -a);
    }
    const double val = std::sqrt(2.0 / (pi * ax)) * (p * std::cos(chi) - q * std::sin(chi));
    return x < 0 ? -val : val;
}

namespace {

double sinc_factor(double omega, double t) {
    if (std::abs(t) < 1e-8) return omega * (1.0 - (omega * t) * (omega * t) / 6.0);
    return std::sin(omega * t) / t;
}

double airy_amplitude(double omega, double r) {
    if (r < 1e-8) return 0.5 * omega * (1.0 - (omega * r) * (omega * r) / 8.0);
    return bessel_j1(omega * r) / r;
}

}  // namespace

Psf Psf::sinc(double omega, int dim) {
    require(omega > 0.0 && std::isfinite(omega), "sinc psf: omega must be positive");
    require(dim == 1 || dim == 2, "psf dimension must be 1 or 2");
    Psf p;
    p.kind_ = PsfKind::sinc;
    p.dim_ = dim;
    p.param_ = omega;
    p.cutoff_ = omega;
    return p;
}

Psf Psf::sinc_squared(double omega, int dim) {
    Psf p = sinc(omega, dim);
    p.kind_ = PsfKind::sinc_squared;
    p.cutoff_ = 2.0 * omega;
    return p;
}

Psf Psf::airy_squared(double omega, int dim) {
    Psf p = sinc(omega, dim);
    p.kind_ = PsfKind::airy_squared;
    p.cutoff_ = 2.0 * omega;
    return p;
}

Psf Psf::gaussian(double width, int dim) {
    require(width > 0.0 && std::isfinite(width), "gaussian psf: width must be positive");
    require(dim == 1 || dim == 2, "psf dimension must be 1 or 2");
    Psf p;
    p.kind_ = PsfKind::gaussian;
    p.dim_ = dim;
    p.param_ = width;
    p.cutoff_ = std::sqrt(-2.0 * std::log(gaussian_cutoff_level)) / width;
    return p;
}

Psf Psf::sampled(GridFunction samples, double cutoff) {
    samples.validate();
    require(cutoff > 0.0 && std::isfinite(cutoff), "sampled psf: cutoff must be positive");
    for (const cplx& v : samples.values) require(v.imag() == 0.0, "sampled psf must be real");
    Psf p;
    p.kind_ = PsfKind::sampled;
    p.dim_ = samples.grid.dim;
    p.param_ = cutoff;
    p.cutoff_ = cutoff;
    p.samples_ = std::make_shared<const GridFunction>(std::move(samples));
    return p;
}

const GridFunction& Psf::samples() const {
    require(samples_ != nullptr, "psf has no samples");
    return *samples_;
}

std::string Psf::key() const {
    switch (kind_) {
        case PsfKind::sinc: return "sinc";
        case PsfKind::sinc_squared: return "sinc2";
        case PsfKind::airy_squared: return "airy2";
        case PsfKind::gaussian: return "gauss";
        case PsfKind::sampled: return "sampled";
    }
    return "unknown";
}

bool Psf::separable() const {
    return kind_ == PsfKind::sinc || kind_ == PsfKind::sinc_squared || kind_ == PsfKind::gaussian;
}

double Psf::factor(double t) const {
    switch (kind_) {
        case PsfKind::sinc: return sinc_factor(param_, t);
        case PsfKind::sinc_squared: {
            const double s = sinc_factor(param_, t);
            return s * s;
        }
        case PsfKind::gaussian: return std::exp(-t * t / (2.0 * param_ * param_));
        default: throw InvalidArgument("psf kind is not separable");
    }
}

double Psf::operator()(Point x) const {
    if (kind_ == PsfKind::sampled) return samples_->interpolate(dim_ == 1 ? Point{x.x, 0.0} : x).real();
    return value_or_zero(x);
}

double Psf::value_or_zero(Point x) const {
    switch (kind_) {
        case PsfKind::sinc:
        case PsfKind::sinc_squared:
            return dim_ == 1 ? factor(x.x) : factor(x.x) * factor(x.y);
        case PsfKind::gaussian:
            return dim_ == 1 ? factor(x.x) : std::exp(-(x.x * x.x + x.y * x.y) / (2.0 * param_ * param_));
        case PsfKind::airy_squared: {
            const double a = airy_amplitude(param_, dim_ == 1 ? std::abs(x.x) : norm(x));
            return a * a;
        }
        case PsfKind::sampled:
            return samples_->interpolate_or_zero(dim_ == 1 ? Point{x.x, 0.0} : x).real();
    }
    return 0.0;
}

bool Psf::has_spectrum() const { return separable(); }

double Psf::spectrum(Point xi) const {
    auto one = [this](double s) {
        const double a = std::abs(s);
        switch (kind_) {
            case PsfKind::sinc:
                if (a < param_) return pi;
                return a == param_ ? 0.5 * pi : 0.0;
            case PsfKind::sinc_squared: return 0.5 * pi * std::max(0.0, 2.0 * param_ - a);
            case PsfKind::gaussian:
                return param_ * std::sqrt(2.0 * pi) * std::exp(-0.5 * param_ * param_ * s * s);
            default: throw InvalidArgument("no analytic spectrum for psf kind " + key());
        }
    };
    return dim_ == 1 ? one(xi.x) : one(xi.x) * one(xi.y);
}

double evaluate_psf(const Psf& psf, Point x) {
    require(std::isfinite(x.x) && std::isfinite(x.y), "psf evaluated at a non-finite point");
    return psf(x);
}

Psf read_sampled_psf_csv(std::istream& is, double cutoff) {
    const csv::Table t = csv::read(is);
    int dim = 0;
    if (t.header == std::vector<std::string>{"x1", "value"}) dim = 1;
    else if (t.header == std::vector<std::string>{"x1", "x2", "value"}) dim = 2;
    else throw InvalidArgument("sampled psf csv: header must be x1[,x2],value");
    require(!t.rows.empty(), "sampled psf csv: no samples");

    auto build_axis = [](std::vector<double> v, const char* name) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
        require(v.size() >= 2, std::string("sampled psf csv: axis ") + name + " needs at least 2 distinct values");
        const double step = (v.back() - v.front()) / static_cast<double>(v.size() - 1);
        for (std::size_t i = 0; i < v.size(); ++i)
            require(std::abs(v[i] - (v.front() + step * static_cast<double>(i))) <= 1e-9 * std::max(1.0, std::abs(v[i])),
                    std::string("sampled psf csv: axis ") + name + " is not uniform");
        return Axis{v.front(), step, v.size()};
    };
    std::vector<double> xs, ys;
    for (const auto& r : t.rows) {
        xs.push_back(r[0]);
        if (dim == 2) ys.push_back(r[1]);
    }
    const Axis ax = build_axis(xs, "x1");
    const GridSpec g = dim == 1 ? GridSpec::line(ax) : GridSpec::plane(ax, build_axis(ys, "x2"));
    require(t.rows.size() == g.size(), "sampled psf csv: samples do not form a complete grid");
    GridFunction f(g);
    std::vector<bool> seen(g.size(), false);
    for (const auto& r : t.rows) {
        const auto i = static_cast<std::size_t>(std::llround((r[0] - g.ax0.start) / g.ax0.step));
        std::size_t k = i;
        if (dim == 2) k += g.ax0.count * static_cast<std::size_t>(std::llround((r[1] - g.ax1.start) / g.ax1.step));
        require(k < g.size() && !seen[k], "sampled psf csv: duplicate or misplaced sample");
        seen[k] = true;
        f[k] = r[dim];
    }
    return Psf::sampled(std::move(f), cutoff);
}

void write_sampled_psf_csv(std::ostream& os, const Psf& psf) {
    const GridFunction& f = psf.samples();
    os << (f.grid.dim == 1 ? "x1,value\n" : "x1,x2,value\n");
    for (std::size_t k = 0; k < f.size(); ++k) {
        const Point p = f.grid.point(k);
        os << csv::number(p.x) << ',';
        if (f.grid.dim == 2) os << csv::number(p.y) << ',';
        os << csv::number(f[k].real()) << '\n';
    }
}

// ---------------------------------------------------------------- illumination

IlluminationSequence::IlluminationSequence(int dim, std::vector<Pattern> patterns, std::optional<Psf> profile,
                                           double sampled_cutoff)
    : dim_(dim), patterns_(std::move(patterns)), profile_(std::move(profile)), sampled_cutoff_(sampled_cutoff) {
    require(dim_ == 1 || dim_ == 2, "illumination dimension must be 1 or 2");
    require(!patterns_.empty(), "illumination sequence needs at least one pattern");
    for (const Pattern& p : patterns_) {
        if (const auto* w = std::get_if<PlaneWave>(&p)) {
            require(std::abs(norm(w->direction) - 1.0) < 1e-9, "plane-wave direction must be a unit vector");
            require(dim_ == 2 || w->direction.y == 0.0, "one-dimensional plane wave with a second component");
            require(std::isfinite(w->frequency) && w->frequency >= 0.0, "plane-wave frequency must be nonnegative");
        } else if (std::holds_alternative<TranslatedProfile>(p)) {
            require(profile_.has_value(), "translated profile needs an illumination profile");
        } else if (const auto* c = std::get_if<Composite>(&p)) {
            require(profile_.has_value(), "composite pattern needs an illumination profile");
            require(!c->weights.empty() && c->weights.size() == c->centers.size(),
                    "composite pattern needs matching weights and centers");
        } else if (const auto* s = std::get_if<SampledPattern>(&p)) {
            s->samples.validate();
            require(s->samples.grid.dim == dim_, "sampled pattern dimension mismatch");
        }
    }
    if (profile_) require(profile_->dim() == dim_, "illumination profile dimension mismatch");
}

IlluminationSequence IlluminationSequence::plane_waves(int dim, const std::vector<Point>& directions,
                                                       double frequency) {
    std::vector<Pattern> ps;
    for (const Point& d : directions) ps.emplace_back(PlaneWave{d, frequency});
    return IlluminationSequence(dim, std::move(ps));
}

IlluminationSequence IlluminationSequence::opposite_plane_waves(double frequency) {
    return plane_waves(1, {{1.0, 0.0}, {-1.0, 0.0}}, frequency);
}

IlluminationSequence IlluminationSequence::translated_profile(const Psf& ip, const std::vector<Point>& centers) {
    std::vector<Pattern> ps;
    for (const Point& c : centers) ps.emplace_back(TranslatedProfile{c});
    return IlluminationSequence(ip.dim(), std::move(ps), ip);
}

IlluminationSequence IlluminationSequence::composite(const Psf& ip, const std::vector<Composite>& patterns) {
    std::vector<Pattern> ps(patterns.begin(), patterns.end());
    return IlluminationSequence(ip.dim(), std::move(ps), ip);
}

IlluminationSequence IlluminationSequence::constant(std::size_t n, cplx level, int dim) {
    require(n >= 1, "illumination sequence needs at least one pattern");
    std::vector<Pattern> ps(n, ConstantPattern{level});
    return IlluminationSequence(dim, std::move(ps));
}

IlluminationSequence IlluminationSequence::sampled(const std::vector<GridFunction>& frames, double cutoff) {
    require(!frames.empty(), "illumination sequence needs at least one pattern");
    std::vector<Pattern> ps;
    for (const auto& f : frames) ps.emplace_back(SampledPattern{f});
    return IlluminationSequence(frames.front().grid.dim, std::move(ps), std::nullopt, cutoff);
}

IlluminationSequence IlluminationSequence::with_perturbation(std::vector<GridFunction> eps) const {
    require(eps.size() == size(), "one perturbation per pattern required");
    for (const auto& e : eps) {
        e.validate();
        require(e.grid.dim == dim_, "perturbation dimension mismatch");
    }
    IlluminationSequence out = *this;
    out.perturbation_ = std::make_shared<const std::vector<GridFunction>>(std::move(eps));
    return out;
}

IlluminationSequence IlluminationSequence::perturbation_only() const {
    require(perturbed(), "sequence carries no perturbation");
    IlluminationSequence out = *this;
    out.base_zero_ = true;
    return out;
}

const std::vector<GridFunction>& IlluminationSequence::perturbation() const {
    require(perturbed(), "sequence carries no perturbation");
    return *perturbation_;
}

double IlluminationSequence::omega_illu() const {
    double w = 0.0;
    for (const Pattern& p : patterns_) {
        if (const auto* pw = std::get_if<PlaneWave>(&p)) w = std::max(w, pw->frequency);
        else if (std::holds_alternative<TranslatedProfile>(p) || std::holds_alternative<Composite>(p))
            w = std::max(w, profile_->cutoff());
        else if (std::holds_alternative<SampledPattern>(p)) w = std::max(w, sampled_cutoff_);
    }
    return w;
}

bool IlluminationSequence::all_plane_waves_or_constant() const {
    if (perturbed()) return false;
    return std::all_of(patterns_.begin(), patterns_.end(), [](const Pattern& p) {
        return std::holds_alternative<PlaneWave>(p) || std::holds_alternative<ConstantPattern>(p);
    });
}

cplx IlluminationSequence::operator()(std::size_t q, Point y) const {
    if (q >= patterns_.size()) throw InvalidArgument("illumination index out of range");
    cplx v(0.0, 0.0);
    if (!base_zero_) {
        const Pattern& p = patterns_[q];
        if (const auto* pw = std::get_if<PlaneWave>(&p)) {
            v = std::polar(1.0, pw->frequency * dot(pw->direction, y));
        } else if (const auto* tp = std::get_if<TranslatedProfile>(&p)) {
            v = profile_->value_or_zero(y - tp->center);
        } else if (const auto* c = std::get_if<Composite>(&p)) {
            for (std::size_t l = 0; l < c->weights.size(); ++l)
                v += c->weights[l] * profile_->value_or_zero(y - c->centers[l]);
        } else if (const auto* k = std::get_if<ConstantPattern>(&p)) {
            v = k->level;
        } else {
            v = std::get<SampledPattern>(p).samples.interpolate(dim_ == 1 ? Point{y.x, 0.0} : y);
        }
    }
    if (perturbation_) v += (*perturbation_)[q].interpolate_or_zero(dim_ == 1 ? Point{y.x, 0.0} : y);
    return v;
}

cplx evaluate_illumination(const IlluminationSequence& seq, std::size_t q, Point y) { return seq(q, y); }

cplx illumination_correlation(const IlluminationSequence& seq, Point z, Point y) {
    cplx s(0.0, 0.0);
    for (std::size_t q = 0; q < seq.size(); ++q) s += std::conj(seq(q, z)) * seq(q, y);
    return s / static_cast<double>(seq.size());
}

// ------------------------------------------------------------- autocorrelation

namespace {

// Exponent alpha of the truncation tail C / R^alpha; 0 means no extrapolation.
int tail_order(const Psf& psf, bool separable_axis) {
    switch (psf.kind()) {
        case PsfKind::sinc: return 1;
        case PsfKind::sinc_squared: return 3;
        case PsfKind::airy_squared: return (psf.dim() == 1 || separable_axis) ? 5 : 4;
        default: return 0;
    }
}

struct Sums {
    double full = 0.0, half = 0.0, quarter = 0.0;
};

// Combine nested-window sums into the extrapolated value and an error estimate.
std::pair<double, double> combine(const Sums& s, int alpha, bool correct) {
    if (alpha <= 0 || !correct) return {s.full, std::abs(s.full - s.half)};
    const double f = 1.0 / (std::pow(2.0, alpha) - 1.0);
    const double e_full = s.full + (s.full - s.half) * f;
    const double e_half = s.half + (s.half - s.quarter) * f;
    return {e_full, std::abs(e_full - e_half)};
}

// Choose the quadrature step so that every lag is an integer multiple of it, if possible.
double aligned_step(double h, const std::vector<double>& lags, bool& aligned) {
    double g = 0.0;
    for (double u : lags)
        if (std::abs(u) > 1e-14 && (g == 0.0 || std::abs(u) < g)) g = std::abs(u);
    aligned = false;
    if (g == 0.0) {
        aligned = true;
        return h;
    }
    const double r = std::ceil(g / h * (1.0 - 1e-12));
    const double hh = g / r;
    for (double u : lags) {
        const double m = u / hh;
        if (std::abs(m - std::round(m)) > 1e-6) return h;
    }
    aligned = true;
    return hh;
}

void check_tolerance(double value0, double err0, double tol, double half_width) {
    if (!(err0 <= tol * std::abs(value0))) {
        std::ostringstream msg;
        msg << "quadrature truncation: half-width " << half_width << " too small for relative tolerance " << tol
            << " (estimated relative error " << err0 / std::abs(value0) << " at zero lag)";
        throw NumericalError(msg.str());
    }
}

template <class F>
std::vector<double> corr1d(F f, double cutoff, bool compact, double extent, int alpha,
                           const std::vector<double>& lags, const QuadratureOptions& opts, double sample_step) {
    double umax = 0.0;
    for (double u : lags) umax = std::max(umax, std::abs(u));
    double h = opts.step > 0.0 ? opts.step : pi / (4.0 * cutoff);
    if (sample_step > 0.0) h = std::min(h, sample_step);
    bool aligned = false;
    h = aligned_step(h, lags, aligned);

    double W = opts.half_width;
    if (compact) W = std::max(W, extent + umax);
    else if (W <= 0.0) W = std::max(200.0 / cutoff, 4.0 * umax);
    const long L = 4 * static_cast<long>(std::ceil(W / (4.0 * h)));
    W = static_cast<double>(L) * h;
    const bool correct = opts.tail_correction && !compact;

    std::vector<double> out(lags.size());
    Sums zero;
    if (aligned) {
        long lmax = 0;
        for (double u : lags) lmax = std::max(lmax, std::abs(std::lround(u / h)));
        const long off = L + lmax;
        std::vector<double> P(static_cast<std::size_t>(2 * off));
        for (long k = -off; k < off; ++k) P[static_cast<std::size_t>(k + off)] = f((static_cast<double>(k) + 0.5) * h);
        auto sums = [&](long l) {
            Sums s;
            const double* base = P.data() + off;
            auto range = [&](long a, long b) {
                double acc = 0.0;
                for (long m = a; m < b; ++m) acc += base[m - l] * base[m];
                return acc;
            };
            s.quarter = range(-L / 4, L / 4);
            s.half = s.quarter + range(-L / 2, -L / 4) + range(L / 4, L / 2);
            s.full = s.half + range(-L, -L / 2) + range(L / 2, L);
            s.full *= h;
            s.half *= h;
            s.quarter *= h;
            return s;
        };
        std::map<long, double> cache;
        zero = sums(0);
        cache[0] = combine(zero, alpha, correct).first;
        for (std::size_t i = 0; i < lags.size(); ++i) {
            const long l = std::abs(std::lround(lags[i] / h));
            auto it = cache.find(l);
            if (it == cache.end()) it = cache.emplace(l, combine(sums(l), alpha, correct).first).first;
            out[i] = it->second;
        }
    } else {
        std::vector<double> x(static_cast<std::size_t>(2 * L)), P(x.size());
        for (long m = -L; m < L; ++m) {
            x[static_cast<std::size_t>(m + L)] = (static_cast<double>(m) + 0.5) * h;
            P[static_cast<std::size_t>(m + L)] = f(x[static_cast<std::size_t>(m + L)]);
        }
        auto sums = [&](double u) {
            Sums s;
            auto range = [&](long a, long b) {
                double acc = 0.0;
                for (long m = a; m < b; ++m) {
                    const auto k = static_cast<std::size_t>(m + L);
                    acc += f(x[k] - u) * P[k];
                }
                return acc;
            };
            s.quarter = range(-L / 4, L / 4);
            s.half = s.quarter + range(-L / 2, -L / 4) + range(L / 4, L / 2);
            s.full = s.half + range(-L, -L / 2) + range(L / 2, L);
            s.full *= h;
            s.half *= h;
            s.quarter *= h;
            return s;
        };
        zero = sums(0.0);
        std::map<double, double> cache;
        for (std::size_t i = 0; i < lags.size(); ++i) {
            const double u = std::abs(lags[i]);
            auto it = cache.find(u);
            if (it == cache.end()) it = cache.emplace(u, combine(sums(u), alpha, correct).first).first;
            out[i] = it->second;
        }
    }
    const auto [v0, e0] = combine(zero, alpha, correct);
    if (!compact) check_tolerance(v0, e0, opts.tolerance, W);
    return out;
}

std::vector<double> corr2d(const Psf& psf, const std::vector<Point>& lags, const QuadratureOptions& opts) {
    const bool compact = psf.kind() == PsfKind::sampled;
    double umax = 0.0;
    std::vector<double> comps;
    for (const Point& u : lags) {
        umax = std::max(umax, norm_inf(u));
        comps.push_back(u.x);
        comps.push_back(u.y);
    }
    double h = opts.step > 0.0 ? opts.step : pi / (4.0 * psf.cutoff());
    double extent = 0.0;
    if (compact) {
        const GridSpec& g = psf.samples().grid;
        h = std::min({h, g.ax0.step, g.ax1.step});
        extent = std::max({std::abs(g.ax0.start), std::abs(g.ax0.last()), std::abs(g.ax1.start), std::abs(g.ax1.last())});
    }
    bool aligned = false;
    h = aligned_step(h, comps, aligned);
    double W = opts.half_width;
    if (compact) W = std::max(W, extent + umax);
    else if (W <= 0.0) W = std::max(50.0 / psf.cutoff(), 4.0 * umax);
    const long L = 4 * static_cast<long>(std::ceil(W / (4.0 * h)));
    W = static_cast<double>(L) * h;
    const int alpha = tail_order(psf, false);
    const bool correct = opts.tail_correction && !compact;
    auto f = [&psf](double a, double b) { return psf.value_or_zero({a, b}); };

    long lmax = 0;
    if (aligned)
        for (double c : comps) lmax = std::max(lmax, std::abs(std::lround(c / h)));
    const long off = L + lmax;
    const auto side = static_cast<std::size_t>(2 * off);
    std::vector<double> P;
    if (aligned) {
        P.resize(side * side);
        for (long j = -off; j < off; ++j)
            for (long i = -off; i < off; ++i)
                P[static_cast<std::size_t>(i + off) + side * static_cast<std::size_t>(j + off)] =
                    f((static_cast<double>(i) + 0.5) * h, (static_cast<double>(j) + 0.5) * h);
    }
    auto at = [&](long i, long j) {
        return P[static_cast<std::size_t>(i + off) + side * static_cast<std::size_t>(j + off)];
    };
    auto ring = [L](long i, long j) {
        const long a = std::max(i < 0 ? -i - 1 : i, j < 0 ? -j - 1 : j);
        return a < L / 4 ? 0 : (a < L / 2 ? 1 : 2);
    };
    auto sums = [&](Point u) {
        double acc[3] = {0.0, 0.0, 0.0};
        const long li = aligned ? std::lround(u.x / h) : 0;
        const long lj = aligned ? std::lround(u.y / h) : 0;
        for (long j = -L; j < L; ++j)
            for (long i = -L; i < L; ++i) {
                double v;
                if (aligned) {
                    v = at(i - li, j - lj) * at(i, j);
                } else {
                    const double xa = (static_cast<double>(i) + 0.5) * h, xb = (static_cast<double>(j) + 0.5) * h;
                    v = f(xa - u.x, xb - u.y) * f(xa, xb);
                }
                acc[ring(i, j)] += v;
            }
        Sums s;
        s.quarter = acc[0] * h * h;
        s.half = (acc[0] + acc[1]) * h * h;
        s.full = (acc[0] + acc[1] + acc[2]) * h * h;
        return s;
    };
    const Sums zero = sums({0.0, 0.0});
    std::vector<double> out(lags.size());
    std::map<std::pair<double, double>, double> cache;
    for (std::size_t k = 0; k < lags.size(); ++k) {
        // Autocorrelations are even: key on the lag up to sign.
        Point u = lags[k];
        if (u.x < 0 || (u.x == 0 && u.y < 0)) u = -1.0 * u;
        const auto key = std::make_pair(u.x, u.y);
        auto it = cache.find(key);
        if (it == cache.end()) it = cache.emplace(key, combine(sums(u), alpha, correct).first).first;
        out[k] = it->second;
    }
    const auto [v0, e0] = combine(zero, alpha, correct);
    if (!compact) check_tolerance(v0, e0, opts.tolerance, W);
    return out;
}

}  // namespace

std::vector<double> psf_autocorrelation(const Psf& psf, std::span<const Point> lags, const QuadratureOptions& opts) {
    require(opts.tolerance > 0.0, "quadrature tolerance must be positive");
    for (const Point& u : lags) require(std::isfinite(u.x) && std::isfinite(u.y), "non-finite lag");
    if (lags.empty()) return {};
    const bool compact = psf.kind() == PsfKind::sampled;
    if (psf.dim() == 1) {
        std::vector<double> l;
        for (const Point& u : lags) l.push_back(u.x);
        double extent = 0.0, step = 0.0;
        if (compact) {
            const Axis& a = psf.samples().grid.ax0;
            extent = std::max(std::abs(a.start), std::abs(a.last()));
            step = a.step;
        }
        return corr1d([&psf](double t) { return psf.value_or_zero({t, 0.0}); }, psf.cutoff(), compact, extent,
                      tail_order(psf, false), l, opts, step);
    }
    if (psf.separable()) {
        // The 1D factor of a separable kind has its own per-axis cutoff.
        const double axis_cutoff = psf.kind() == PsfKind::sinc_squared ? 2.0 * psf.omega() : psf.cutoff();
        std::vector<double> lx, ly;
        for (const Point& u : lags) {
            lx.push_back(u.x);
            ly.push_back(u.y);
        }
        auto fac = [&psf](double t) { return psf.factor(t); };
        const auto cx = corr1d(fac, axis_cutoff, false, 0.0, tail_order(psf, true), lx, opts, 0.0);
        const auto cy = corr1d(fac, axis_cutoff, false, 0.0, tail_order(psf, true), ly, opts, 0.0);
        std::vector<double> out(lags.size());
        for (std::size_t k = 0; k < out.size(); ++k) out[k] = cx[k] * cy[k];
        return out;
    }
    return corr2d(psf, std::vector<Point>(lags.begin(), lags.end()), opts);
}

GridFunction psf_autocorrelation(const Psf& psf, const GridSpec& lag_grid, const QuadratureOptions& opts) {
    lag_grid.validate();
    const auto pts = lag_grid.points();
    const auto vals = psf_autocorrelation(psf, std::span<const Point>(pts), opts);
    GridFunction out(lag_grid);
    for (std::size_t k = 0; k < vals.size(); ++k) out[k] = vals[k];
    return out;
}

}  // namespace multillum
