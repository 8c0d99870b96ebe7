#pragma once

#include <cstddef>
#include <vector>

#include "multillum/core.hpp"

namespace multillum {

struct Axis {
    double start = 0.0;
    double step = 1.0;
    std::size_t count = 0;

    double at(std::size_t i) const { return start + step * static_cast<double>(i); }
    double last() const { return at(count - 1); }
};

// count >= 2 points from lo to hi inclusive.
Axis axis_between(double lo, double hi, std::size_t count);

// Uniform grid over a box in R^d, d in {1, 2}; index k = i + nx * j.
struct GridSpec {
    int dim = 1;
    Axis ax0;
    Axis ax1;

    static GridSpec line(Axis a);
    static GridSpec plane(Axis a, Axis b);

    std::size_t size() const { return dim == 1 ? ax0.count : ax0.count * ax1.count; }
    Point point(std::size_t k) const;
    double cell_volume() const { return dim == 1 ? ax0.step : ax0.step * ax1.step; }
    std::vector<Point> points() const;
    bool contains(Point p, double slack = 1e-12) const;
    void validate() const;
};

struct GridFunction {
    GridSpec grid;
    std::vector<cplx> values;

    GridFunction() = default;
    explicit GridFunction(GridSpec g);
    GridFunction(GridSpec g, std::vector<cplx> v);

    std::size_t size() const { return values.size(); }
    cplx& operator[](std::size_t k) { return values[k]; }
    const cplx& operator[](std::size_t k) const { return values[k]; }
    void validate() const;

    // Linear (1D) or bilinear (2D) interpolation; throws "out of domain" outside the box.
    cplx interpolate(Point p) const;
    // Same, but returns zero outside the box.
    cplx interpolate_or_zero(Point p) const;
};

}  // namespace multillum
