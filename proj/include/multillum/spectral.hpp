#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "multillum/grid.hpp"
#include "multillum/imaging.hpp"
#include "multillum/measures.hpp"
#include "multillum/optics.hpp"

namespace multillum {

// Shift-invariant illumination models whose correlation f_ILF depends on z - y only.
struct IlluminationFamily {
    enum class Kind { plane_waves, translated_profile, composite, sharp_peak, constant };

    Kind kind = Kind::constant;
    std::vector<double> wavenumbers;  // plane waves exp(i k_q y)
    std::optional<Psf> profile;       // translated / composite illumination profile IP
    std::vector<cplx> weights;        // composite: I(y, t) = sum_l b_l IP(y - c_l - t)
    std::vector<double> offsets;
    double width = 0.0;               // sharp_peak: Gaussian IP width

    static IlluminationFamily plane_waves(std::vector<double> k);
    static IlluminationFamily opposite_plane_waves(double omega);
    static IlluminationFamily translated_profile(const Psf& ip);
    static IlluminationFamily composite(const Psf& ip, std::vector<cplx> b, std::vector<double> c);
    static IlluminationFamily sharp_peak(double width);
    static IlluminationFamily constant();

    double omega_illu() const;
    std::string name() const;
    // Correlation f_ILF(u) for the continuum sweep (translated kinds) or the finite set (plane waves).
    std::vector<cplx> correlation(std::span<const double> lags, const QuadratureOptions& opts = {}) const;
};

struct SpectrumOptions {
    std::size_t lag_count = 4097;  // forced odd so the lag grid is symmetric about 0
    double lag_step = 0.0;         // 0 selects pi / (4 omega_multi)
    std::size_t freq_count = 4097;
    double freq_half_span = 0.0;   // 0 selects min(4 omega_multi, pi / lag_step)
    double taper_beta = 30.0;      // Kaiser taper applied to the profile before the transform; 0 disables
    QuadratureOptions quadrature;
};

struct PsfMulti {
    GridFunction profile;  // PSF_multi(u) on the lag grid
    std::vector<double> taper;
    Axis freq;
    std::vector<cplx> spectrum;  // F[PSF_multi] at freq.at(k)
    double omega_psf = 0.0;
    double omega_illu = 0.0;
    std::optional<double> exact_support;  // spectrum vanishes identically beyond this radius
    std::string family;

    double omega_multi() const { return omega_psf + omega_illu; }
    double lag_step() const { return profile.grid.ax0.step; }
    // Tapered transform sum_k du w_k PSF_multi(u_k) exp(i xi u_k) at any xi.
    cplx spectrum_at(double xi) const;
    double b_upper() const;
    // Fraction of sum |F|^2 over the frequency grid carried by |xi| > radius.
    double energy_outside(double radius) const;
};

PsfMulti synthesize_psf_multi(const IlluminationFamily& family, const Psf& psf, const SpectrumOptions& opts = {});
// Spectrum of an arbitrary profile on a symmetric uniform lag grid.
std::vector<cplx> tapered_spectrum(const GridFunction& profile, const std::vector<double>& taper,
                                   std::span<const double> xi);
std::vector<double> kaiser_taper(const Axis& lags, double beta);

struct CutoffReport {
    double b_lower = 0.0;
    double eps = 0.0;
    double b_upper = 0.0;
    double omega_hat = 0.0;
    double omega_check = 0.0;
    bool omega_check_resolved = true;
    bool capped_by_support = false;
};

CutoffReport essential_cutoffs(const PsfMulti& pm, double b_lower, double eps);
// Omega-check only; throws NumericalError when it cannot be resolved on the grid.
double omega_check_at(const PsfMulti& pm, double eps);

struct Bandpass {
    std::vector<cplx> values;  // Psi / F[PSF_multi] where mask is set, 0 elsewhere
    std::vector<bool> mask;
};

Bandpass bandpass_deconvolve(std::span<const cplx> psi, const PsfMulti& pm, double b_lower);

struct StabilityOptions {
    CameraGrid camera{1, 8.0, 160};
    NoiseMode mode = NoiseMode::uniform_bounded;
    std::uint64_t seed = 1;
    double b_lower_ratio = 0.1;   // b_lower = ratio * b_upper
    double eps_ratio = 1e-3;      // threshold for the reported omega_check
    Point sine_frequency{};       // worst_case_sine mode
    SpectrumOptions spectrum;
};

struct StabilityReport {
    std::size_t trials = 0;
    double sigma = 0.0;
    double eps = 0.0;
    double b_lower = 0.0;
    double b_upper = 0.0;
    double omega_hat = 0.0;
    double omega_check = 0.0;
    std::size_t bandpass_bins = 0;
    // sup over the bandpass of |F[g - f]| |F[PSF_multi]| per trial (absolute).
    std::vector<double> weighted_errors;
    double max_weighted_error = 0.0;
    double empirical_constant = 0.0;  // max weighted error / sigma
    double min_constant = 0.0;
    double spread = 0.0;              // max / min of the per-trial constants
    double model_bias = 0.0;          // noiseless sup |F[A*Af] - F[PSF_multi] F[f]| on the bandpass
};

// Requires 1D plane-wave or constant illumination and a PSF with an analytic spectrum.
StabilityReport verify_frequency_stability(const DiscreteMeasure& f, const IlluminationSequence& seq, const Psf& psf,
                                           const NoiseBound& sigma, std::size_t trials,
                                           const StabilityOptions& opts = {});

// Compactly supported random pattern errors with discrete L1 norm eps per pattern.
std::vector<GridFunction> random_pattern_errors(std::size_t n, double eps, std::uint64_t seed);

struct PerturbedPoint {
    double sigma = 0.0;
    double eps = 0.0;
    double error = 0.0;  // max over trials of the weighted error
    double fitted = 0.0;
};

struct PerturbedReport {
    StabilityReport base;               // at the requested (sigma, eps)
    std::vector<PerturbedPoint> sweep;  // joint (sigma, eps) grid
    double coef_sigma = 0.0;
    double coef_eps = 0.0;
    double max_relative_residual = 0.0;
};

// Data from the true patterns, reconstruction with the estimated patterns I + eps.
StabilityReport perturbed_stability(const DiscreteMeasure& f, const IlluminationSequence& seq, const Psf& psf,
                                    const NoiseBound& sigma, double eps, std::size_t trials,
                                    const StabilityOptions& opts = {});

// Runs perturbed_stability over multipliers {0,1,2,4} x {0,1,2,4} (minus the origin)
// of (sigma, eps) and fits error ~ a sigma + b eps with a, b >= 0.
PerturbedReport verify_perturbed_patterns(const DiscreteMeasure& f, const IlluminationSequence& seq, double eps,
                                          const Psf& psf, const NoiseBound& sigma, std::size_t trials,
                                          const StabilityOptions& opts = {});

}  // namespace multillum
