#include "multillum/grid.hpp"

#include <algorithm>

namespace multillum {

Axis axis_between(double lo, double hi, std::size_t count) {
    require(count >= 2, "axis needs at least 2 samples");
    require(hi > lo, "axis bounds must satisfy lo < hi");
    return {lo, (hi - lo) / static_cast<double>(count - 1), count};
}

GridSpec GridSpec::line(Axis a) {
    GridSpec g;
    g.dim = 1;
    g.ax0 = a;
    g.ax1 = {0.0, 1.0, 1};
    return g;
}

GridSpec GridSpec::plane(Axis a, Axis b) {
    GridSpec g;
    g.dim = 2;
    g.ax0 = a;
    g.ax1 = b;
    return g;
}

Point GridSpec::point(std::size_t k) const {
    if (dim == 1) return {ax0.at(k), 0.0};
    return {ax0.at(k % ax0.count), ax1.at(k / ax0.count)};
}

std::vector<Point> GridSpec::points() const {
    std::vector<Point> out(size());
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = point(k);
    return out;
}

bool GridSpec::contains(Point p, double slack) const {
    auto inside = [slack](const Axis& a, double v) {
        return v >= a.start - slack && v <= a.last() + slack;
    };
    if (!inside(ax0, p.x)) return false;
    if (dim == 1) return true;
    return inside(ax1, p.y);
}

void GridSpec::validate() const {
    require(dim == 1 || dim == 2, "grid dimension must be 1 or 2");
    auto check = [](const Axis& a) {
        require(a.count >= 2, "grid needs at least 2 samples per axis");
        require(a.step > 0.0 && std::isfinite(a.step), "grid spacing must be positive");
        require(std::isfinite(a.start), "grid origin must be finite");
    };
    check(ax0);
    if (dim == 2) check(ax1);
}

GridFunction::GridFunction(GridSpec g) : grid(g), values(g.size(), cplx(0.0, 0.0)) {}

GridFunction::GridFunction(GridSpec g, std::vector<cplx> v) : grid(g), values(std::move(v)) {
    require(values.size() == grid.size(), "grid function sample count does not match its grid");
}

void GridFunction::validate() const {
    grid.validate();
    require(values.size() == grid.size(), "grid function sample count does not match its grid");
    for (const cplx& v : values)
        require(std::isfinite(v.real()) && std::isfinite(v.imag()), "grid function has non-finite samples");
}

namespace {

// Cell index and fractional offset along one axis; false if outside.
bool locate(const Axis& a, double v, std::size_t& i, double& frac) {
    const double s = (v - a.start) / a.step;
    const double top = static_cast<double>(a.count - 1);
    if (s < -1e-9 || s > top + 1e-9) return false;
    const double c = std::clamp(s, 0.0, top);
    i = std::min(static_cast<std::size_t>(c), a.count - 2);
    frac = c - static_cast<double>(i);
    return true;
}

}  // namespace

cplx GridFunction::interpolate_or_zero(Point p) const {
    std::size_t i = 0, j = 0;
    double fx = 0.0, fy = 0.0;
    if (!locate(grid.ax0, p.x, i, fx)) return {0.0, 0.0};
    if (grid.dim == 1) return (1.0 - fx) * values[i] + fx * values[i + 1];
    if (!locate(grid.ax1, p.y, j, fy)) return {0.0, 0.0};
    const std::size_t nx = grid.ax0.count;
    const cplx v00 = values[i + nx * j], v10 = values[i + 1 + nx * j];
    const cplx v01 = values[i + nx * (j + 1)], v11 = values[i + 1 + nx * (j + 1)];
    return (1.0 - fy) * ((1.0 - fx) * v00 + fx * v10) + fy * ((1.0 - fx) * v01 + fx * v11);
}

cplx GridFunction::interpolate(Point p) const {
    if (!grid.contains(p, 1e-9 * std::max(grid.ax0.step, grid.dim == 2 ? grid.ax1.step : 0.0)))
        throw InvalidArgument("out of domain");
    return interpolate_or_zero(p);
}

}  // namespace multillum
