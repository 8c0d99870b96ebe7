#include "multillum/imaging.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <random>

#include <Eigen/Dense>

#include "json.hpp"
#include "multillum/csv.hpp"

namespace multillum {

GridSpec CameraGrid::grid() const {
    require(dim == 1 || dim == 2, "camera dimension must be 1 or 2");
    require(half_width > 0.0 && std::isfinite(half_width), "camera half-width must be positive");
    require(samples >= 2, "camera needs at least 2 samples per axis");
    const double h = 2.0 * half_width / static_cast<double>(samples);
    const Axis a{-half_width + 0.5 * h, h, samples};
    return dim == 1 ? GridSpec::line(a) : GridSpec::plane(a, a);
}

namespace {

void check_unit_box(Point p, int dim) {
    const double s = 1e-12;
    bool ok = p.x >= -s && p.x <= 1.0 + s;
    if (dim == 2) ok = ok && p.y >= -s && p.y <= 1.0 + s;
    if (!ok) throw InvalidArgument("support violation");
}

void check_grid_in_unit_box(const GridSpec& g) {
    g.validate();
    check_unit_box({g.ax0.start, g.dim == 2 ? g.ax1.start : 0.0}, g.dim);
    check_unit_box({g.ax0.last(), g.dim == 2 ? g.ax1.last() : 0.0}, g.dim);
}

ImageStack empty_stack(const IlluminationSequence& seq, const Psf& psf, const CameraGrid& camera) {
    require(camera.dim == seq.dim() && camera.dim == psf.dim(), "camera, illumination and psf dimensions differ");
    require(camera.half_width >= 1.0, "camera half-width must be at least 1");
    ImageStack s;
    s.camera = camera.grid();
    s.half_width = camera.half_width;
    s.frames.assign(seq.size(), GridFunction(s.camera));
    return s;
}

// Forward map of weighted point sources.
ImageStack forward_points(const std::vector<Point>& pts, const std::vector<cplx>& w, const IlluminationSequence& seq,
                          const Psf& psf, const CameraGrid& camera) {
    ImageStack s = empty_stack(seq, psf, camera);
    const auto xs = s.camera.points();
    for (std::size_t j = 0; j < pts.size(); ++j) {
        std::vector<double> k(xs.size());
        for (std::size_t p = 0; p < xs.size(); ++p) k[p] = psf.value_or_zero(xs[p] - pts[j]);
        for (std::size_t q = 0; q < seq.size(); ++q) {
            const cplx c = w[j] * seq(q, pts[j]);
            if (c == cplx(0.0, 0.0)) continue;
            auto& fr = s.frames[q].values;
            for (std::size_t p = 0; p < xs.size(); ++p) fr[p] += c * k[p];
        }
    }
    return s;
}

}  // namespace

ImageStack forward(const DiscreteMeasure& f, const IlluminationSequence& seq, const Psf& psf,
                   const CameraGrid& camera) {
    require(f.dim() == seq.dim(), "source and illumination dimensions differ");
    for (const Point& p : f.locations()) check_unit_box(p, f.dim());
    return forward_points(f.locations(), f.amplitudes(), seq, psf, camera);
}

ImageStack forward(const GridFunction& f, const IlluminationSequence& seq, const Psf& psf, const CameraGrid& camera) {
    f.validate();
    require(f.grid.dim == seq.dim(), "source and illumination dimensions differ");
    check_grid_in_unit_box(f.grid);
    const auto pts = f.grid.points();
    std::vector<cplx> w(f.values);
    for (auto& v : w) v *= f.grid.cell_volume();
    return forward_points(pts, w, seq, psf, camera);
}

std::vector<cplx> adjoint_at(const ImageStack& g, const IlluminationSequence& seq, const Psf& psf,
                             std::span<const Point> y) {
    require(g.size() == seq.size(), "image stack and illumination sequence differ in N");
    const auto xs = g.camera.points();
    const double h = g.camera.cell_volume();
    const double invN = 1.0 / static_cast<double>(seq.size());
    std::vector<cplx> out(y.size());
    std::vector<double> k(xs.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        for (std::size_t p = 0; p < xs.size(); ++p) k[p] = psf.value_or_zero(xs[p] - y[i]);
        cplx acc(0.0, 0.0);
        for (std::size_t q = 0; q < seq.size(); ++q) {
            const auto& fr = g.frames[q].values;
            cplx s(0.0, 0.0);
            for (std::size_t p = 0; p < xs.size(); ++p) s += k[p] * fr[p];
            acc += std::conj(seq(q, y[i])) * s;
        }
        out[i] = acc * h * invN;
    }
    return out;
}

GridFunction adjoint(const ImageStack& g, const IlluminationSequence& seq, const Psf& psf, const GridSpec& y_grid) {
    y_grid.validate();
    const auto pts = y_grid.points();
    return GridFunction(y_grid, adjoint_at(g, seq, psf, std::span<const Point>(pts)));
}

cplx image_inner(const ImageStack& a, const ImageStack& b) {
    require(a.size() == b.size() && a.size() > 0, "image stacks differ in N");
    const double h = a.camera.cell_volume();
    cplx s(0.0, 0.0);
    for (std::size_t q = 0; q < a.size(); ++q) {
        require(a.frames[q].size() == b.frames[q].size(), "image frames differ in size");
        for (std::size_t p = 0; p < a.frames[q].size(); ++p) s += a.frames[q][p] * std::conj(b.frames[q][p]);
    }
    return s * h / static_cast<double>(a.size());
}

cplx source_inner(const DiscreteMeasure& f, std::span<const cplx> h) {
    require(h.size() == f.size(), "value count differs from source count");
    cplx s(0.0, 0.0);
    for (std::size_t j = 0; j < f.size(); ++j) s += f.amplitudes()[j] * std::conj(h[j]);
    return s;
}

cplx source_inner(const GridFunction& f, const GridFunction& h) {
    require(f.size() == h.size(), "grid functions differ in size");
    cplx s(0.0, 0.0);
    for (std::size_t k = 0; k < f.size(); ++k) s += f[k] * std::conj(h[k]);
    return s * f.grid.cell_volume();
}

namespace {

Eigen::MatrixXcd pattern_matrix(const IlluminationSequence& seq, const std::vector<Point>& pts) {
    Eigen::MatrixXcd m(static_cast<Eigen::Index>(seq.size()), static_cast<Eigen::Index>(pts.size()));
    for (std::size_t j = 0; j < pts.size(); ++j)
        for (std::size_t q = 0; q < seq.size(); ++q)
            m(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(j)) = seq(q, pts[j]);
    return m;
}

// (1/N) sum_q conj(I(z_i)) I(y_j).
Eigen::MatrixXcd correlation_matrix(const IlluminationSequence& seq, const std::vector<Point>& z,
                                    const std::vector<Point>& y) {
    const Eigen::MatrixXcd iz = pattern_matrix(seq, z);
    const Eigen::MatrixXcd iy = pattern_matrix(seq, y);
    return (iz.adjoint() * iy) / static_cast<double>(seq.size());
}

}  // namespace

KernelMatrix imaging_kernel(const IlluminationSequence& seq, const Psf& psf, const GridSpec& z_grid,
                            const GridSpec& y_grid, const QuadratureOptions& opts) {
    check_grid_in_unit_box(z_grid);
    check_grid_in_unit_box(y_grid);
    require(z_grid.dim == seq.dim() && y_grid.dim == seq.dim() && psf.dim() == seq.dim(),
            "kernel grids, illumination and psf dimensions differ");
    const auto z = z_grid.points();
    const auto y = y_grid.points();
    std::vector<Point> lags;
    lags.reserve(z.size() * y.size());
    for (const Point& zi : z)
        for (const Point& yj : y) lags.push_back(zi - yj);
    const auto fpsf = psf_autocorrelation(psf, std::span<const Point>(lags), opts);
    KernelMatrix k{z_grid, y_grid, correlation_matrix(seq, z, y)};
    for (std::size_t i = 0; i < z.size(); ++i)
        for (std::size_t j = 0; j < y.size(); ++j)
            k.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) *= fpsf[i * y.size() + j];
    return k;
}

namespace {

std::vector<Point> left_corners(int dim, std::size_t M, double R) {
    const double h = 2.0 * R / static_cast<double>(M);
    std::vector<Point> xs;
    if (dim == 1) {
        for (std::size_t j = 0; j < M; ++j) xs.push_back({-R + h * static_cast<double>(j), 0.0});
    } else {
        for (std::size_t b = 0; b < M; ++b)
            for (std::size_t a = 0; a < M; ++a)
                xs.push_back({-R + h * static_cast<double>(a), -R + h * static_cast<double>(b)});
    }
    return xs;
}

Eigen::MatrixXd psf_matrix(const Psf& psf, const std::vector<Point>& xs, const std::vector<Point>& pts) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(xs.size()), static_cast<Eigen::Index>(pts.size()));
    for (std::size_t j = 0; j < pts.size(); ++j)
        for (std::size_t p = 0; p < xs.size(); ++p)
            m(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(j)) = psf.value_or_zero(xs[p] - pts[j]);
    return m;
}

}  // namespace

KernelMatrix discrete_kernel(const IlluminationSequence& seq, const Psf& psf, const GridSpec& z_grid,
                             const GridSpec& y_grid, std::size_t M, double R) {
    require(M >= 2, "discrete kernel needs M >= 2");
    require(R >= 1.0 && std::isfinite(R), "discrete kernel needs R >= 1");
    check_grid_in_unit_box(z_grid);
    check_grid_in_unit_box(y_grid);
    const int d = seq.dim();
    require(z_grid.dim == d && y_grid.dim == d && psf.dim() == d, "kernel grids, illumination and psf dimensions differ");
    const auto z = z_grid.points();
    const auto y = y_grid.points();
    const auto xs = left_corners(d, M, R);
    const Eigen::MatrixXd kz = psf_matrix(psf, xs, z);
    const Eigen::MatrixXd ky = psf_matrix(psf, xs, y);
    const Eigen::MatrixXd avg = (kz.transpose() * ky) / static_cast<double>(xs.size());
    KernelMatrix k{z_grid, y_grid, correlation_matrix(seq, z, y)};
    k.values = k.values.cwiseProduct(avg.cast<cplx>());
    return k;
}

Eigen::MatrixXd riemann_defect(const IlluminationSequence& seq, const Psf& psf, const GridSpec& z_grid,
                               const GridSpec& y_grid, std::size_t M, double R, std::size_t sub) {
    require(M >= 2 && sub >= 1, "defect needs M >= 2 and at least one subcell");
    require(R >= 1.0, "defect needs R >= 1");
    const int d = seq.dim();
    const auto z = z_grid.points();
    const auto y = y_grid.points();
    const auto xs = left_corners(d, M, R);
    const double h = 2.0 * R / static_cast<double>(M);
    std::vector<Point> offs;
    for (std::size_t b = 0; b < (d == 2 ? sub : 1); ++b)
        for (std::size_t a = 0; a < sub; ++a)
            offs.push_back({h * (static_cast<double>(a) + 0.5) / static_cast<double>(sub),
                            d == 2 ? h * (static_cast<double>(b) + 0.5) / static_cast<double>(sub) : 0.0});
    const double wsub = std::pow(h, d) / static_cast<double>(offs.size());
    const Eigen::MatrixXcd filf = correlation_matrix(seq, z, y);
    Eigen::MatrixXd out(static_cast<Eigen::Index>(z.size()), static_cast<Eigen::Index>(y.size()));
    for (std::size_t i = 0; i < z.size(); ++i)
        for (std::size_t j = 0; j < y.size(); ++j) {
            double acc = 0.0;
            for (const Point& xj : xs) {
                const double f0 = psf.value_or_zero(xj - z[i]) * psf.value_or_zero(xj - y[j]);
                for (const Point& o : offs) {
                    const Point x = xj + o;
                    acc += std::abs(psf.value_or_zero(x - z[i]) * psf.value_or_zero(x - y[j]) - f0);
                }
            }
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                std::abs(filf(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))) * acc * wsub;
        }
    return out;
}

PointwiseMap pointwise_map(const std::string& name) {
    if (name == "identity") return [](cplx v) { return v; };
    if (name == "conj") return [](cplx v) { return std::conj(v); };
    if (name == "clamp") return [](cplx v) { return v / std::max(1.0, std::abs(v)); };
    int k = 0;
    if (name == "cube") k = 3;
    else if (name.rfind("power-", 0) == 0 && name.size() == 7 && name[6] >= '1' && name[6] <= '5') k = name[6] - '0';
    if (k == 0) throw InvalidArgument("unknown pointwise map '" + name + "'");
    return [k](cplx v) {
        cplx r = v;
        for (int i = 1; i < k; ++i) r *= v;
        return r;
    };
}

GridFunction general_decode(const ImageStack& g, const IlluminationSequence& seq, const Psf& psf,
                            const PointwiseMap& g1, const PointwiseMap& g2, const GridSpec& z_grid) {
    require(g.size() == seq.size(), "image stack and illumination sequence differ in N");
    z_grid.validate();
    const auto z = z_grid.points();
    const auto xs = g.camera.points();
    const auto Z = static_cast<Eigen::Index>(z.size());
    const auto X = static_cast<Eigen::Index>(xs.size());
    const auto N = static_cast<Eigen::Index>(seq.size());
    auto finite = [](cplx v) { return std::isfinite(v.real()) && std::isfinite(v.imag()); };

    Eigen::MatrixXcd P(Z, X);
    for (Eigen::Index i = 0; i < Z; ++i)
        for (Eigen::Index p = 0; p < X; ++p) {
            const cplx v = g2(cplx(psf.value_or_zero(xs[static_cast<std::size_t>(p)] - z[static_cast<std::size_t>(i)]), 0.0));
            if (!finite(v)) throw NumericalError("decoder map g2 produced a non-finite value");
            P(i, p) = v;
        }
    Eigen::MatrixXcd G(X, N);
    for (Eigen::Index q = 0; q < N; ++q)
        for (Eigen::Index p = 0; p < X; ++p) G(p, q) = g.frames[static_cast<std::size_t>(q)][static_cast<std::size_t>(p)];
    Eigen::MatrixXcd E(Z, N);
    for (Eigen::Index q = 0; q < N; ++q)
        for (Eigen::Index i = 0; i < Z; ++i) {
            const cplx v = g1(seq(static_cast<std::size_t>(q), z[static_cast<std::size_t>(i)]));
            if (!finite(v)) throw NumericalError("decoder map g1 produced a non-finite value");
            E(i, q) = v;
        }
    const Eigen::MatrixXcd PG = P * G;
    const Eigen::VectorXcd d = PG.cwiseProduct(E).rowwise().sum() * (g.camera.cell_volume() / static_cast<double>(N));
    GridFunction out(z_grid);
    for (Eigen::Index i = 0; i < Z; ++i) {
        if (!finite(d(i))) throw NumericalError("decoded image overflowed");
        out[static_cast<std::size_t>(i)] = d(i);
    }
    return out;
}

double frame_l1(const GridFunction& frame) {
    double s = 0.0;
    for (const cplx& v : frame.values) s += std::abs(v);
    return s * frame.grid.cell_volume();
}

ImageStack noise_stack(const ImageStack& like, const NoiseBound& bound, NoiseMode mode, std::uint64_t seed,
                       Point frequency) {
    ImageStack out = like;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    const auto xs = like.camera.points();
    for (auto& fr : out.frames) {
        for (std::size_t p = 0; p < fr.size(); ++p) {
            if (mode == NoiseMode::uniform_bounded) {
                const double re = unif(rng);
                const double im = unif(rng);
                fr[p] = cplx(re, im);
            } else {
                fr[p] = std::polar(1.0, -dot(frequency, xs[p]));
            }
        }
        double size = 0.0;
        if (bound.norm == NoiseNorm::l1) {
            size = frame_l1(fr);
        } else {
            for (const cplx& v : fr.values) size = std::max(size, std::abs(v));
        }
        // Shrink by one part in 1e12 so the post-hoc norm never rounds above sigma.
        const double scale = size > 0.0 ? bound.sigma / size * (1.0 - 1e-12) : 0.0;
        for (auto& v : fr.values) v *= scale;
    }
    return out;
}

ImageStack add_noise(const ImageStack& images, const NoiseBound& bound, NoiseMode mode, std::uint64_t seed,
                     Point frequency) {
    if (bound.sigma == 0.0) return images;
    ImageStack n = noise_stack(images, bound, mode, seed, frequency);
    for (std::size_t q = 0; q < n.size(); ++q)
        for (std::size_t p = 0; p < n.frames[q].size(); ++p) n.frames[q][p] += images.frames[q][p];
    return n;
}

void write_image_stack(const std::filesystem::path& dir, const ImageStack& s,
                       const std::vector<std::string>& comment_lines) {
    std::filesystem::create_directories(dir);
    nlohmann::json manifest;
    manifest["N"] = s.size();
    manifest["dim"] = s.camera.dim;
    manifest["half_width"] = s.half_width;
    manifest["spacing"] = s.camera.ax0.step;
    manifest["samples"] = s.camera.ax0.count;
    std::vector<std::string> names;
    for (std::size_t q = 0; q < s.size(); ++q) {
        char name[32];
        std::snprintf(name, sizeof name, "frame_%04zu.csv", q);
        names.emplace_back(name);
        std::ofstream os(dir / name);
        for (const auto& c : comment_lines) os << "# " << c << '\n';
        os << (s.camera.dim == 1 ? "x1,re,im\n" : "x1,x2,re,im\n");
        const auto& fr = s.frames[q];
        for (std::size_t p = 0; p < fr.size(); ++p) {
            const Point x = s.camera.point(p);
            os << csv::number(x.x) << ',';
            if (s.camera.dim == 2) os << csv::number(x.y) << ',';
            os << csv::number(fr[p].real()) << ',' << csv::number(fr[p].imag()) << '\n';
        }
    }
    manifest["frames"] = names;
    std::ofstream(dir / "manifest.json") << manifest.dump(2) << '\n';
}

ImageStack read_image_stack(const std::filesystem::path& dir) {
    std::ifstream ms(dir / "manifest.json");
    require(static_cast<bool>(ms), "image stack manifest not found in " + dir.string());
    nlohmann::json m;
    try {
        ms >> m;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(std::string("image stack manifest: ") + e.what());
    }
    CameraGrid cam{m.at("dim").get<int>(), m.at("half_width").get<double>(), m.at("samples").get<std::size_t>()};
    ImageStack s;
    s.camera = cam.grid();
    s.half_width = cam.half_width;
    for (const auto& name : m.at("frames")) {
        std::ifstream fs(dir / name.get<std::string>());
        require(static_cast<bool>(fs), "missing frame file " + name.get<std::string>());
        const auto t = csv::read(fs);
        require(t.rows.size() == s.camera.size(), "frame " + name.get<std::string>() + " has the wrong sample count");
        GridFunction fr(s.camera);
        for (std::size_t p = 0; p < t.rows.size(); ++p) fr[p] = cplx(t.rows[p][cam.dim], t.rows[p][cam.dim + 1]);
        s.frames.push_back(std::move(fr));
    }
    require(s.size() == m.at("N").get<std::size_t>(), "manifest frame count mismatch");
    return s;
}

void write_kernel_csv(std::ostream& os, const KernelMatrix& k) {
    const int d = k.z_grid.dim;
    os << (d == 1 ? "z1" : "z1,z2");
    for (Eigen::Index j = 0; j < k.values.cols(); ++j) os << ",re_" << j << ",im_" << j;
    os << '\n';
    for (Eigen::Index i = 0; i < k.values.rows(); ++i) {
        const Point z = k.z_grid.point(static_cast<std::size_t>(i));
        os << csv::number(z.x);
        if (d == 2) os << ',' << csv::number(z.y);
        for (Eigen::Index j = 0; j < k.values.cols(); ++j)
            os << ',' << csv::number(k.values(i, j).real()) << ',' << csv::number(k.values(i, j).imag());
        os << '\n';
    }
}

}  // namespace multillum
