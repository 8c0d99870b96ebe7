#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "multillum/grid.hpp"
#include "multillum/measures.hpp"
#include "multillum/optics.hpp"

namespace multillum {

// Camera pixels are the midpoints of M cells per axis covering [-R, R]^d.
struct CameraGrid {
    int dim = 1;
    double half_width = 8.0;
    std::size_t samples = 160;

    GridSpec grid() const;
};

struct ImageStack {
    GridSpec camera;
    double half_width = 0.0;
    std::vector<GridFunction> frames;

    std::size_t size() const { return frames.size(); }
};

struct KernelMatrix {
    GridSpec z_grid;
    GridSpec y_grid;
    Eigen::MatrixXcd values;  // values(i, j) = G(z_i, y_j)
};

ImageStack forward(const DiscreteMeasure& f, const IlluminationSequence& seq, const Psf& psf, const CameraGrid& camera);
// Grid sources are integrated with the Riemann weight of their grid cell.
ImageStack forward(const GridFunction& f, const IlluminationSequence& seq, const Psf& psf, const CameraGrid& camera);

// A*g(y) = (1/N) sum_q sum_x h^d conj(I(y, t_q) PSF(x - y)) g(x, t_q).
std::vector<cplx> adjoint_at(const ImageStack& g, const IlluminationSequence& seq, const Psf& psf,
                             std::span<const Point> y);
GridFunction adjoint(const ImageStack& g, const IlluminationSequence& seq, const Psf& psf, const GridSpec& y_grid);

// <a, b> = (1/N) sum_q sum_x h^d a conj(b).
cplx image_inner(const ImageStack& a, const ImageStack& b);
// <f, h> for a discrete source against values of h at its locations.
cplx source_inner(const DiscreteMeasure& f, std::span<const cplx> h_at_locations);
// <f, h> = sum_k w f_k conj(h_k) with w the cell volume of the shared grid.
cplx source_inner(const GridFunction& f, const GridFunction& h);

// G(z_i, y_j) = f_ILF(z_i, y_j) f_PSF(z_i - y_j).
KernelMatrix imaging_kernel(const IlluminationSequence& seq, const Psf& psf, const GridSpec& z_grid,
                            const GridSpec& y_grid, const QuadratureOptions& opts = {});

// W(z, y) = f_ILF(z, y) M^-d sum_j PSF(x_j - z) PSF(x_j - y), with x_j the left
// corners of the M^d cells of [-R, R]^d.
KernelMatrix discrete_kernel(const IlluminationSequence& seq, const Psf& psf, const GridSpec& z_grid,
                             const GridSpec& y_grid, std::size_t M, double R);

// |f_ILF(z, y)| sum_j int_{cell j} |F(x) - F(x_j)| dx with F(x) = PSF(x - z) PSF(x - y):
// the cellwise defect that bounds |(2R)^d W - int_{[-R,R]^d} ...|. Cells are
// integrated with `sub` midpoint subcells per axis.
Eigen::MatrixXd riemann_defect(const IlluminationSequence& seq, const Psf& psf, const GridSpec& z_grid,
                               const GridSpec& y_grid, std::size_t M, double R, std::size_t sub = 16);

using PointwiseMap = std::function<cplx(cplx)>;

// Registry: identity, conj, cube, power-k (k = 1..5), clamp (modulus clipped to 1).
PointwiseMap pointwise_map(const std::string& name);

// D g(z) = (1/N) sum_q g1(I(z, t_q)) sum_x h^d g2(PSF(x - z)) g(x, t_q).
GridFunction general_decode(const ImageStack& g, const IlluminationSequence& seq, const Psf& psf,
                            const PointwiseMap& g1, const PointwiseMap& g2, const GridSpec& z_grid);

enum class NoiseMode { uniform_bounded, worst_case_sine };

// Noise frames only, with per-frame discrete norm (L1 Riemann sum or sup) equal to sigma.
// worst_case_sine uses exp(-i frequency . x) so that its spectrum peaks at `frequency`.
ImageStack noise_stack(const ImageStack& like, const NoiseBound& bound, NoiseMode mode, std::uint64_t seed,
                       Point frequency = {});
ImageStack add_noise(const ImageStack& images, const NoiseBound& bound, NoiseMode mode, std::uint64_t seed,
                     Point frequency = {});
double frame_l1(const GridFunction& frame);

// One CSV per frame (`x1[,x2],re,im`) plus manifest.json.
void write_image_stack(const std::filesystem::path& dir, const ImageStack& s,
                       const std::vector<std::string>& comment_lines = {});
ImageStack read_image_stack(const std::filesystem::path& dir);

// Dense CSV: header `z1[,z2],re_0,im_0,...`, one row per z point.
void write_kernel_csv(std::ostream& os, const KernelMatrix& k);

}  // namespace multillum
