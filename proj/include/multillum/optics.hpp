#pragma once

#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "multillum/core.hpp"
#include "multillum/grid.hpp"

namespace multillum {

double bessel_j1(double x);

enum class PsfKind { sinc, sinc_squared, airy_squared, gaussian, sampled };

// Real point spread function profile PSF(x), x in R^d.
// sinc:          prod_i sin(omega x_i) / x_i          F = pi on [-omega, omega] per axis
// sinc_squared:  prod_i (sin(omega x_i) / x_i)^2      cutoff 2 omega
// airy_squared:  (J1(omega r) / r)^2, r = |x|         cutoff 2 omega
// gaussian:      exp(-|x|^2 / (2 width^2))            essential cutoff sqrt(2 ln 1000) / width
// sampled:       interpolated grid, caller-supplied cutoff
class Psf {
public:
    static Psf sinc(double omega, int dim = 1);
    static Psf sinc_squared(double omega, int dim = 1);
    static Psf airy_squared(double omega, int dim = 2);
    static Psf gaussian(double width, int dim = 1);
    static Psf sampled(GridFunction samples, double cutoff);

    PsfKind kind() const { return kind_; }
    int dim() const { return dim_; }
    double omega() const { return param_; }
    double width() const { return param_; }
    double cutoff() const { return cutoff_; }
    const GridFunction& samples() const;
    std::string key() const;

    // Throws "out of domain" for sampled profiles queried outside their grid.
    double operator()(Point x) const;
    // Sampled profiles read as zero outside their grid; analytic profiles unchanged.
    double value_or_zero(Point x) const;

    // Separable kinds factor as f(x1) f(x2) in 2D.
    bool separable() const;
    double factor(double t) const;

    // Analytic F[PSF](xi) where available (sinc, sinc_squared, gaussian).
    bool has_spectrum() const;
    double spectrum(Point xi) const;

private:
    PsfKind kind_ = PsfKind::sinc;
    int dim_ = 1;
    double param_ = 1.0;
    double cutoff_ = 1.0;
    std::shared_ptr<const GridFunction> samples_;
};

double evaluate_psf(const Psf& psf, Point x);

// Relative spectral level used as the essential cutoff of Gaussian profiles.
inline constexpr double gaussian_cutoff_level = 1e-3;

// Rows `x1[,x2],value` forming a complete uniform grid, in any order.
Psf read_sampled_psf_csv(std::istream& is, double cutoff);
void write_sampled_psf_csv(std::ostream& os, const Psf& psf);

struct PlaneWave {
    Point direction{1.0, 0.0};  // unit vector
    double frequency = 1.0;     // I(y) = exp(i frequency direction . y)
};

struct TranslatedProfile {
    Point center;  // I(y) = IP(y - center)
};

struct Composite {
    std::vector<cplx> weights;  // I(y) = sum_l b_l IP(y - c_l)
    std::vector<Point> centers;
};

struct ConstantPattern {
    cplx level{1.0, 0.0};
};

struct SampledPattern {
    GridFunction samples;
};

using Pattern = std::variant<PlaneWave, TranslatedProfile, Composite, ConstantPattern, SampledPattern>;

class IlluminationSequence {
public:
    IlluminationSequence(int dim, std::vector<Pattern> patterns, std::optional<Psf> profile = std::nullopt,
                         double sampled_cutoff = 0.0);

    static IlluminationSequence plane_waves(int dim, const std::vector<Point>& directions, double frequency);
    // Two opposite 1D plane waves exp(+i omega y), exp(-i omega y).
    static IlluminationSequence opposite_plane_waves(double frequency);
    static IlluminationSequence translated_profile(const Psf& ip, const std::vector<Point>& centers);
    static IlluminationSequence composite(const Psf& ip, const std::vector<Composite>& patterns);
    static IlluminationSequence constant(std::size_t n, cplx level = {1.0, 0.0}, int dim = 1);
    static IlluminationSequence sampled(const std::vector<GridFunction>& frames, double cutoff = 0.0);

    // Estimated patterns I + eps_q; eps_q read as zero outside its grid.
    IlluminationSequence with_perturbation(std::vector<GridFunction> eps) const;
    // The perturbation alone as an illumination sequence (all-zero base).
    IlluminationSequence perturbation_only() const;

    std::size_t size() const { return patterns_.size(); }
    int dim() const { return dim_; }
    const Pattern& pattern(std::size_t q) const { return patterns_.at(q); }
    const std::optional<Psf>& profile() const { return profile_; }
    bool perturbed() const { return perturbation_ != nullptr; }
    const std::vector<GridFunction>& perturbation() const;

    // Essential maximal frequency of the patterns.
    double omega_illu() const;
    bool all_plane_waves_or_constant() const;

    // q is 0-based.
    cplx operator()(std::size_t q, Point y) const;

private:
    int dim_ = 1;
    std::vector<Pattern> patterns_;
    std::optional<Psf> profile_;
    double sampled_cutoff_ = 0.0;
    std::shared_ptr<const std::vector<GridFunction>> perturbation_;
    bool base_zero_ = false;
};

cplx evaluate_illumination(const IlluminationSequence& seq, std::size_t q, Point y);

// f_ILF(z, y) = (1/N) sum_q conj(I(z, t_q)) I(y, t_q).
cplx illumination_correlation(const IlluminationSequence& seq, Point z, Point y);

struct QuadratureOptions {
    double half_width = 0.0;  // 0 selects a default from the cutoff and the largest lag
    double step = 0.0;        // 0 selects pi / (4 cutoff), refined to divide uniform lag grids
    double tolerance = 1e-4;  // relative, checked at zero lag
    bool tail_correction = true;
};

// u -> int PSF(x - u) PSF(x) dx by midpoint quadrature on [-R, R]^d with
// Richardson extrapolation of the algebraic truncation tail.
std::vector<double> psf_autocorrelation(const Psf& psf, std::span<const Point> lags,
                                        const QuadratureOptions& opts = {});
GridFunction psf_autocorrelation(const Psf& psf, const GridSpec& lag_grid, const QuadratureOptions& opts = {});

}  // namespace multillum
