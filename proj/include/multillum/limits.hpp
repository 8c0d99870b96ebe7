#pragma once

#include <utility>
#include <vector>

#include <Eigen/Core>

#include "multillum/measures.hpp"
#include "multillum/spectral.hpp"

namespace multillum {

struct LimitQuery {
    int n = 2;
    double sigma = 0.0;
    double m_min = 1.0;
    double b_lower = 0.0;
    double b_upper = 0.0;
    double omega_hat = 0.0;
    double omega_check = 0.0;
    int d = 1;
    double c_supp = 1.0;
    double c_num = 1.0;

    // min_n is 1 only for the degenerate two-point location demo.
    void validate(int min_n = 2) const;
};

// Spectrum thresholds at which omega_check is taken for each construction.
double location_threshold(int n, double sigma, double m_min);             // (n-1)! n! sigma / ((2n)! m_min)
double number_threshold(int n, double sigma, double m_min);               // ((n-1)!)^2 sigma / ((2n-1)! m_min)
double cluster_threshold(int n, double s, double sigma, double m_min);    // pi^2 sigma / (2n e^11 s^2 (n+1)^10 2^(2n-8) m_min)

// (C_supp / omega_hat) (sigma / (m_min b_lower))^(1/(2n-1))
double location_limit_upper(const LimitQuery& q);
// tau = (e^-1 / omega_check) (sigma / (m_min b_upper))^(1/(2n-1)); accepts n = 1.
double location_limit_lower(const LimitQuery& q);
// (C_num / omega_hat) (sigma / (m_min b_lower))^(1/(2n-2))
double number_limit_upper(const LimitQuery& q);
// 2 tau with tau = (e^-1 / omega_check) (sigma / (m_min b_upper))^(1/(2n-2))
double number_limit_lower(const LimitQuery& q);

struct ClusterLimit {
    double tau = 0.0;
    double spacing = 0.0;  // s tau
};
// tau = (0.2 e^-1 / (omega_check s^((2n+1)/(2n-1)))) (sigma / (m_min b_upper))^(1/(2n-1)); requires s > 2.
ClusterLimit cluster_limit(const LimitQuery& q, double s);

// (2.2 e pi / omega) ((1 / incoherence) (sigma / m_min))^(1/n)
double unknown_pattern_limit(int n, double sigma, double m_min, double omega, double incoherence);

// (C / omega) SRF^(2n-2) sigma / m_min, with caller-supplied omega and SRF.
double recovery_error_bound(double c, double omega, double srf, int n, double sigma, double m_min);

// Radius (n-1) / (2 omega_hat) of the ball B^d(0) that must contain the sources.
double support_ball_radius(int n, double omega_hat);
bool support_in_ball(const DiscreteMeasure& mu, int n, double omega_hat);

struct IncoherenceOptions {
    bool complex_search = false;       // x in C^n; the coarse stage puts phases on a 16-angle grid
    int phases = 16;
    std::size_t grid_budget = 200000;  // coarse grid points per pinned subproblem
    int iterations = 3000;             // ellipsoid steps of the local refinement
};

// min over ||x||_inf >= 1 of ||IM x||_inf, by pinning each coordinate to 1 and
// minimising the convex remainder by a dense grid followed by ellipsoid refinement.
// A real matrix with real search uses real x only.
double illumination_incoherence(const Eigen::MatrixXcd& im, const IncoherenceOptions& opts = {});
double illumination_incoherence(const Eigen::MatrixXd& im, const IncoherenceOptions& opts = {});

struct LimitRow {
    int n = 0;
    double omega_hat = 0.0;
    double location_upper = 0.0;
    double location_lower = 0.0;
    double number_upper = 0.0;
    double number_lower = 0.0;
    double cluster_tau = 0.0;
    double cluster_spacing = 0.0;
    double omega_check_location = 0.0;
    double omega_check_number = 0.0;
    double omega_check_cluster = 0.0;
};

// Every formula at one (n, sigma, m_min), each lower bound with omega_check taken
// from the same PSF_multi at its own threshold.
LimitRow evaluate_limits(const PsfMulti& pm, int n, double sigma, double m_min, double b_lower, double c_supp,
                         double c_num, double s);

}  // namespace multillum
