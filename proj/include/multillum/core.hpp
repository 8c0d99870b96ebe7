#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

namespace multillum {

using cplx = std::complex<double>;

inline constexpr double pi = 3.14159265358979323846;
inline constexpr double euler_e = 2.71828182845904523536;

// Points carry two coordinates; one-dimensional objects keep y = 0.
struct Point {
    double x = 0.0;
    double y = 0.0;
};

inline Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
inline Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
inline Point operator*(double s, Point a) { return {s * a.x, s * a.y}; }
inline double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }
inline double norm(Point a) { return std::hypot(a.x, a.y); }
inline double norm_inf(Point a) { return std::max(std::abs(a.x), std::abs(a.y)); }

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Precondition or input-format violations.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

// Ill-conditioning, unresolved cutoffs, quadrature that cannot reach tolerance.
class NumericalError : public Error {
public:
    using Error::Error;
};

inline void require(bool ok, const std::string& what) {
    if (!ok) throw InvalidArgument(what);
}

}  // namespace multillum
