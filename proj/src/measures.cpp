#include "multillum/measures.hpp"

#include <algorithm>
#include <limits>
#include <ostream>

#include "multillum/csv.hpp"

namespace multillum {

DiscreteMeasure::DiscreteMeasure(int dim, std::vector<Point> locations, std::vector<cplx> amplitudes,
                                 bool positive)
    : dim_(dim), locations_(std::move(locations)), amplitudes_(std::move(amplitudes)), positive_(positive) {
    require(dim_ == 1 || dim_ == 2, "measure dimension must be 1 or 2");
    require(locations_.size() == amplitudes_.size(), "locations and amplitudes differ in length");
    for (std::size_t j = 0; j < size(); ++j) {
        const Point p = locations_[j];
        require(std::isfinite(p.x) && std::isfinite(p.y), "non-finite location");
        require(dim_ == 2 || p.y == 0.0, "one-dimensional measure with nonzero second coordinate");
        const cplx a = amplitudes_[j];
        require(std::isfinite(a.real()) && std::isfinite(a.imag()), "non-finite amplitude");
        require(a != cplx(0.0, 0.0), "zero amplitude");
        if (positive_) require(a.imag() == 0.0 && a.real() > 0.0, "positivity flag set on a non-positive amplitude");
    }
    for (std::size_t j = 0; j < size(); ++j)
        for (std::size_t k = j + 1; k < size(); ++k)
            require(norm(locations_[j] - locations_[k]) > duplicate_location_tolerance, "duplicate locations");
}

DiscreteMeasure DiscreteMeasure::on_line(const std::vector<double>& t, const std::vector<cplx>& a,
                                         bool positive) {
    std::vector<Point> pts;
    pts.reserve(t.size());
    for (double v : t) pts.push_back({v, 0.0});
    return DiscreteMeasure(1, std::move(pts), a, positive);
}

DiscreteMeasure DiscreteMeasure::translated(Point shift) const {
    std::vector<Point> pts = locations_;
    for (auto& p : pts) p = p + shift;
    return DiscreteMeasure(dim_, std::move(pts), amplitudes_, positive_);
}

NoiseBound::NoiseBound(double s, NoiseNorm n) : sigma(s), norm(n) {
    require(s >= 0.0 && std::isfinite(s), "noise level must be nonnegative");
}

cplx fourier_of_measure(const DiscreteMeasure& mu, Point xi) {
    if (mu.empty()) throw InvalidArgument("empty measure");
    cplx s(0.0, 0.0);
    const auto& loc = mu.locations();
    const auto& amp = mu.amplitudes();
    for (std::size_t j = 0; j < mu.size(); ++j) s += amp[j] * std::polar(1.0, dot(loc[j], xi));
    return s;
}

std::vector<cplx> fourier_of_measure(const DiscreteMeasure& mu, std::span<const Point> xi) {
    if (mu.empty()) throw InvalidArgument("empty measure");
    require(!xi.empty(), "empty frequency grid");
    std::vector<cplx> out(xi.size());
    for (std::size_t k = 0; k < xi.size(); ++k) out[k] = fourier_of_measure(mu, xi[k]);
    return out;
}

std::vector<cplx> fourier_of_measure(const DiscreteMeasure& mu, std::span<const double> xi) {
    if (mu.empty()) throw InvalidArgument("empty measure");
    require(!xi.empty(), "empty frequency grid");
    std::vector<cplx> out(xi.size());
    for (std::size_t k = 0; k < xi.size(); ++k) out[k] = fourier_of_measure(mu, Point{xi[k], 0.0});
    return out;
}

double min_separation(const DiscreteMeasure& mu) {
    if (mu.size() < 2) throw InvalidArgument("separation undefined");
    double best = std::numeric_limits<double>::infinity();
    const auto& loc = mu.locations();
    for (std::size_t j = 0; j < loc.size(); ++j)
        for (std::size_t k = j + 1; k < loc.size(); ++k) best = std::min(best, norm(loc[j] - loc[k]));
    return best;
}

double min_amplitude(const DiscreteMeasure& mu) {
    if (mu.empty()) throw InvalidArgument("empty measure");
    double best = std::numeric_limits<double>::infinity();
    for (const cplx& a : mu.amplitudes()) best = std::min(best, std::abs(a));
    return best;
}

double total_variation(const DiscreteMeasure& mu) {
    double s = 0.0;
    for (const cplx& a : mu.amplitudes()) s += std::abs(a);
    return s;
}

void write_measure_csv(std::ostream& os, const DiscreteMeasure& mu) {
    os << (mu.dim() == 1 ? "y1,re,im\n" : "y1,y2,re,im\n");
    for (std::size_t j = 0; j < mu.size(); ++j) {
        const Point p = mu.locations()[j];
        const cplx a = mu.amplitudes()[j];
        os << csv::number(p.x) << ',';
        if (mu.dim() == 2) os << csv::number(p.y) << ',';
        os << csv::number(a.real()) << ',' << csv::number(a.imag()) << '\n';
    }
}

DiscreteMeasure read_measure_csv(std::istream& is, bool positive) {
    const csv::Table t = csv::read(is);
    int dim = 0;
    if (t.header == std::vector<std::string>{"y1", "re", "im"}) dim = 1;
    else if (t.header == std::vector<std::string>{"y1", "y2", "re", "im"}) dim = 2;
    else throw InvalidArgument("measure csv: header must be y1[,y2],re,im");
    std::vector<Point> pts;
    std::vector<cplx> amps;
    for (const auto& r : t.rows) {
        pts.push_back(dim == 1 ? Point{r[0], 0.0} : Point{r[0], r[1]});
        amps.emplace_back(r[dim], r[dim + 1]);
    }
    return DiscreteMeasure(dim, std::move(pts), std::move(amps), positive);
}

}  // namespace multillum
