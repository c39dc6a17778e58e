#ifndef KGP_GRID_HPP
#define KGP_GRID_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "kgp/common.hpp"
#include "kgp/geometry.hpp"

namespace kgp {

enum class BoundaryKind { periodic, reflecting, sponge };

// Collocated spatial grid: node j on axis i sits at origin[i] + j*h(i),
// j = 0..n-1. Each node owns a cell of volume prod(h) (midpoint quadrature).
struct GridSpec {
    int d = 1;
    Vec extent;          // per-axis physical length
    std::vector<int> n;  // per-axis node count
    Vec origin;          // lower corner, default -extent/2
    BoundaryKind boundary = BoundaryKind::periodic;
    double sponge_width = 0.0;    // physical, sponge only
    double sponge_damping = 0.0;  // 1/time at full depth

    static GridSpec make(int d, Vec extent, std::vector<int> n,
                         BoundaryKind boundary = BoundaryKind::periodic);

    double h(int axis) const { return extent[axis] / n[axis]; }
    double min_h() const;
    double cell_volume() const;
    std::size_t cells() const;
    double node_pos(int axis, int j) const { return origin[axis] + j * h(axis); }
    bool periodic() const { return boundary == BoundaryKind::periodic; }
    void validate() const;
};

// Flat row-major indexing (last axis fastest) with periodic wrap helpers.
struct GridIndexer {
    int d = 1;
    std::array<long, 3> n{1, 1, 1};
    std::array<long, 3> stride{1, 1, 1};
    long total = 1;
    bool periodic = true;

    explicit GridIndexer(const GridSpec& spec);
    void unflatten(long flat, std::array<long, 3>& idx) const;
    long flatten(const std::array<long, 3>& idx) const;
    // Neighbor along axis; -1 when outside a non-periodic grid.
    long shift(long flat, int axis, int delta) const;
};

struct FieldState {
    double t = 0.0;
    std::vector<double> phi;
    std::vector<double> pi;  // d phi / dt, synchronized with phi

    static FieldState zero(const GridSpec& spec, double t = 0.0);
    void check_finite() const;
};

struct SourceGrid {
    double t = 0.0;
    std::vector<double> rho;
};

// Tensor-product kernel footprint around a spatial point. The same stamp is
// used for deposition and interpolation (momentum-conserving pairing).
class KernelStamp {
  public:
    KernelStamp(const GridSpec& spec, const DeltaKernel& kernel,
                const Vec& pos_spatial);

    // rho[node] += c * prod(w);   integral of the added density is c.
    void add(std::vector<double>& a, double c) const;
    // sum a[node] * prod(w) * cell_volume  (partition of unity -> value 1 for a==1)
    double dot(const std::vector<double>& a) const;
    // interpolated value and gradient with respect to the point position
    void interpolate(const std::vector<double>& a, double& value, Vec& grad) const;
    // weight of a single cell (0 outside the support)
    double weight_at(long flat) const;

  private:
    const GridSpec* spec_;
    GridIndexer idx_;
    double cellvol_;
    std::array<int, 3> count_{1, 1, 1};
    std::array<int, 3> base_{0, 0, 0};
    std::array<std::vector<double>, 3> w_;   // 1d weights
    std::array<std::vector<double>, 3> dw_;  // d/dpos of weights
    std::array<std::vector<long>, 3> node_;  // wrapped node indices

    template <typename F>
    void for_each(F&& f) const;
};

}  // namespace kgp

#endif
