#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "multillum/core.hpp"

namespace multillum {

// mu = sum_j a_j delta_{y_j}; locations in R^d, d in {1, 2}.
class DiscreteMeasure {
public:
    DiscreteMeasure() = default;
    DiscreteMeasure(int dim, std::vector<Point> locations, std::vector<cplx> amplitudes,
                    bool positive = false);

    // One-dimensional convenience constructor.
    static DiscreteMeasure on_line(const std::vector<double>& t, const std::vector<cplx>& a,
                                   bool positive = false);

    int dim() const { return dim_; }
    std::size_t size() const { return locations_.size(); }
    bool empty() const { return locations_.empty(); }
    bool positive() const { return positive_; }
    const std::vector<Point>& locations() const { return locations_; }
    const std::vector<cplx>& amplitudes() const { return amplitudes_; }

    DiscreteMeasure translated(Point shift) const;

private:
    int dim_ = 1;
    std::vector<Point> locations_;
    std::vector<cplx> amplitudes_;
    bool positive_ = false;
};

inline constexpr double duplicate_location_tolerance = 1e-12;

enum class NoiseNorm { l1, sup };

struct NoiseBound {
    double sigma = 0.0;
    NoiseNorm norm = NoiseNorm::l1;

    NoiseBound() = default;
    explicit NoiseBound(double s, NoiseNorm n = NoiseNorm::l1);
};

// F[mu](xi) = sum_j a_j exp(i y_j . xi).
cplx fourier_of_measure(const DiscreteMeasure& mu, Point xi);
std::vector<cplx> fourier_of_measure(const DiscreteMeasure& mu, std::span<const Point> xi);
std::vector<cplx> fourier_of_measure(const DiscreteMeasure& mu, std::span<const double> xi);

double min_separation(const DiscreteMeasure& mu);
double min_amplitude(const DiscreteMeasure& mu);
double total_variation(const DiscreteMeasure& mu);

// CSV with header `y1[,y2],re,im`; lines starting with '#' are comments.
void write_measure_csv(std::ostream& os, const DiscreteMeasure& mu);
DiscreteMeasure read_measure_csv(std::istream& is, bool positive = false);

}  // namespace multillum
