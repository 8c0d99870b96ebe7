#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "multillum/measures.hpp"
#include "multillum/spectral.hpp"

namespace multillum {

// Columns (1, t_j, ..., t_j^degree) for strictly increasing nodes t_j.
struct MomentSystem {
    std::vector<double> nodes;
    int degree = 0;

    MomentSystem(std::vector<double> nodes, int degree);
    Eigen::MatrixXd matrix() const;
};

// Lagrange basis prod_{q != j} (t - t_q) / (t_j - t_q) at t.
std::vector<double> lagrange_weights(std::span<const double> nodes, double t);

// Spanning vector of the one-dimensional null space (SVD of the centred, rescaled system),
// normalised to unit infinity norm with a positive first entry.
Eigen::VectorXd nullspace_amplitudes(const MomentSystem& sys);
// Same null vector from the Lagrange identity a_j = -l_j(t_last) a_last, with a_last = 1.
Eigen::VectorXd lagrange_nullvector(std::span<const double> nodes);

enum class AdversarialKind { complex_location, positive_location, positive_cluster, number_ambiguity };

std::string to_string(AdversarialKind k);
AdversarialKind parse_adversarial_kind(const std::string& name);

struct AdversarialOptions {
    double s = 4.0;                // cluster spacing factor (positive_cluster only)
    bool normalize_all = false;    // complex_location: take min |a_j| over all 2n entries instead of the first n
};

struct Certificate {
    std::size_t audit_points = 0;
    double audit_half_span = 0.0;
    double max_gap = 0.0;                  // max over the grid of |F[PSF_multi]| |F[mu_hat - mu]|
    double tail_bound = 0.0;               // sum |a_j| * threshold, bounds the gap beyond omega_check
    std::vector<double> moment_residuals;  // Q_k = sum a_j t_j^k, k = 0..degree
    bool gap_ok = false;
    bool tail_ok = false;
    bool pass = false;
};

struct AdversarialPair {
    AdversarialKind kind = AdversarialKind::complex_location;
    int n = 0;
    double sigma = 0.0;
    double m_min = 0.0;
    double s = 0.0;
    double tau = 0.0;
    double threshold = 0.0;    // spectrum level defining omega_check for this kind
    double omega_check = 0.0;
    double b_upper = 0.0;
    int degree = 0;
    std::vector<double> nodes;       // sorted node layout
    std::vector<double> amplitudes;  // signed null vector after scaling, mu - mu_hat = sum a_j delta_{t_j}
    std::vector<bool> in_mu;
    DiscreteMeasure mu;
    DiscreteMeasure mu_hat;
    Certificate certificate;
};

// Node layouts in units of tau.
std::vector<double> location_nodes(int n, double tau);
std::vector<double> number_nodes(int n, double tau);
std::vector<double> cluster_nodes(int n, double s, double tau);

AdversarialPair construct_pair(AdversarialKind kind, int n, double sigma, double m_min, const PsfMulti& pm,
                               const AdversarialOptions& opts = {});

// At least 2049 points on [-1.5 omega_check, 1.5 omega_check], 16 samples per period of exp(i t_max xi).
std::vector<double> audit_grid(const AdversarialPair& pair, std::size_t min_points = 2049);

Certificate certify_pair(const AdversarialPair& pair, const PsfMulti& pm, std::span<const double> xi_grid);
Certificate certify_pair(const AdversarialPair& pair, const PsfMulti& pm);

struct AmplitudeAudit {
    double sum_abs = 0.0;
    double sum_bound = 0.0;
    bool sum_ok = false;
    double ratio = 0.0;                   // max |a_j| / min |a_j|
    std::optional<double> ratio_bound;    // absent for the cluster kind
    bool ratio_ok = true;
};

AmplitudeAudit amplitude_bounds_audit(const AdversarialPair& pair);
// Upper bound on sum |a_j| / m_min for the kind.
double amplitude_sum_bound(AdversarialKind kind, int n, double s = 4.0);

// Moves node `index` by `shift` and rebuilds both measures; the certificate is cleared.
AdversarialPair perturb_node(const AdversarialPair& pair, std::size_t index, double shift);

}  // namespace multillum
