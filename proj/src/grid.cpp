#include "kgp/grid.hpp"

#include <algorithm>
#include <cmath>

namespace kgp {

GridSpec GridSpec::make(int d, Vec extent, std::vector<int> n,
                        BoundaryKind boundary) {
    GridSpec s;
    s.d = d;
    s.extent = std::move(extent);
    s.n = std::move(n);
    s.boundary = boundary;
    s.origin = -0.5 * s.extent;
    s.validate();
    return s;
}

void GridSpec::validate() const {
    if (d < 1 || d > 3) throw ConfigError("spatial dimension must be 1, 2 or 3");
    if (extent.size() != d || static_cast<int>(n.size()) != d ||
        origin.size() != d)
        throw ConfigError("grid spec sizes inconsistent with dimension");
    for (int i = 0; i < d; ++i) {
        if (extent[i] <= 0.0) throw ConfigError("grid extent must be positive");
        if (n[i] < 4) throw ConfigError("grid needs at least 4 nodes per axis");
    }
    if (boundary == BoundaryKind::sponge && sponge_width <= 0.0)
        throw ConfigError("sponge boundary requires positive sponge_width");
}

double GridSpec::min_h() const {
    double m = h(0);
    for (int i = 1; i < d; ++i) m = std::min(m, h(i));
    return m;
}

double GridSpec::cell_volume() const {
    double v = 1.0;
    for (int i = 0; i < d; ++i) v *= h(i);
    return v;
}

std::size_t GridSpec::cells() const {
    std::size_t c = 1;
    for (int i = 0; i < d; ++i) c *= n[i];
    return c;
}

GridIndexer::GridIndexer(const GridSpec& spec) {
    d = spec.d;
    periodic = spec.periodic();
    for (int i = 0; i < d; ++i) n[i] = spec.n[i];
    for (int i = d; i < 3; ++i) n[i] = 1;
    stride[d - 1] = 1;
    for (int i = d - 2; i >= 0; --i) stride[i] = stride[i + 1] * n[i + 1];
    total = stride[0] * n[0];
}

void GridIndexer::unflatten(long flat, std::array<long, 3>& idx) const {
    for (int i = 0; i < d; ++i) {
        idx[i] = flat / stride[i];
        flat -= idx[i] * stride[i];
    }
    for (int i = d; i < 3; ++i) idx[i] = 0;
}

long GridIndexer::flatten(const std::array<long, 3>& idx) const {
    long f = 0;
    for (int i = 0; i < d; ++i) f += idx[i] * stride[i];
    return f;
}

long GridIndexer::shift(long flat, int axis, int delta) const {
    std::array<long, 3> idx;
    unflatten(flat, idx);
    long j = idx[axis] + delta;
    if (periodic) {
        j %= n[axis];
        if (j < 0) j += n[axis];
    } else if (j < 0 || j >= n[axis]) {
        return -1;
    }
    idx[axis] = j;
    return flatten(idx);
}

FieldState FieldState::zero(const GridSpec& spec, double t) {
    FieldState s;
    s.t = t;
    s.phi.assign(spec.cells(), 0.0);
    s.pi.assign(spec.cells(), 0.0);
    return s;
}

void FieldState::check_finite() const {
    for (double v : phi)
        if (!std::isfinite(v)) throw DivergenceError("field state contains non-finite phi");
    for (double v : pi)
        if (!std::isfinite(v)) throw DivergenceError("field state contains non-finite pi");
}

KernelStamp::KernelStamp(const GridSpec& spec, const DeltaKernel& kernel,
                         const Vec& pos_spatial)
    : spec_(&spec), idx_(spec), cellvol_(spec.cell_volume()) {
    for (int i = 0; i < spec.d; ++i) {
        const double h = spec.h(i);
        const double r = kernel.support_radius();
        const long jlo = static_cast<long>(
            std::ceil((pos_spatial[i] - r - spec.origin[i]) / h - 1e-12));
        const long jhi = static_cast<long>(
            std::floor((pos_spatial[i] + r - spec.origin[i]) / h + 1e-12));
        base_[i] = static_cast<int>(jlo);
        count_[i] = static_cast<int>(jhi - jlo + 1);
        if (count_[i] <= 0)
            throw BoundaryError("kernel support contains no grid nodes");
        if (!spec.periodic() && (jlo < 0 || jhi >= spec.n[i]))
            throw BoundaryError("kernel support clipped by grid boundary");
        w_[i].resize(count_[i]);
        dw_[i].resize(count_[i]);
        node_[i].resize(count_[i]);
        for (int k = 0; k < count_[i]; ++k) {
            const long j = jlo + k;
            const double u = spec.origin[i] + j * h - pos_spatial[i];
            w_[i][k] = kernel.value1d(u);
            dw_[i][k] = -kernel.deriv1d(u);  // derivative wrt the point position
            long jw = j;
            if (spec.periodic()) {
                jw %= spec.n[i];
                if (jw < 0) jw += spec.n[i];
            }
            node_[i][k] = jw;
        }
    }
}

template <typename F>
void KernelStamp::for_each(F&& f) const {
    const int d = spec_->d;
    std::array<long, 3> nidx{0, 0, 0};
    if (d == 1) {
        for (int k0 = 0; k0 < count_[0]; ++k0) {
            nidx[0] = node_[0][k0];
            f(idx_.flatten(nidx), k0, 0, 0, w_[0][k0]);
        }
    } else if (d == 2) {
        for (int k0 = 0; k0 < count_[0]; ++k0) {
            nidx[0] = node_[0][k0];
            for (int k1 = 0; k1 < count_[1]; ++k1) {
                nidx[1] = node_[1][k1];
                f(idx_.flatten(nidx), k0, k1, 0, w_[0][k0] * w_[1][k1]);
            }
        }
    } else {
        for (int k0 = 0; k0 < count_[0]; ++k0) {
            nidx[0] = node_[0][k0];
            for (int k1 = 0; k1 < count_[1]; ++k1) {
                nidx[1] = node_[1][k1];
                const double w01 = w_[0][k0] * w_[1][k1];
                for (int k2 = 0; k2 < count_[2]; ++k2) {
                    nidx[2] = node_[2][k2];
                    f(idx_.flatten(nidx), k0, k1, k2, w01 * w_[2][k2]);
                }
            }
        }
    }
}

void KernelStamp::add(std::vector<double>& a, double c) const {
    for_each([&](long flat, int, int, int, double w) { a[flat] += c * w; });
}

double KernelStamp::dot(const std::vector<double>& a) const {
    double acc = 0.0;
    for_each([&](long flat, int, int, int, double w) { acc += a[flat] * w; });
    return acc * cellvol_;
}

double KernelStamp::weight_at(long flat) const {
    double w = 0.0;
    for_each([&](long f, int, int, int, double wv) {
        if (f == flat) w += wv;
    });
    return w;
}

void KernelStamp::interpolate(const std::vector<double>& a, double& value,
                              Vec& grad) const {
    const int d = spec_->d;
    value = 0.0;
    grad = Vec::Zero(d);
    for_each([&](long flat, int k0, int k1, int k2, double w) {
        const double v = a[flat];
        value += v * w;
        const int kk[3] = {k0, k1, k2};
        for (int i = 0; i < d; ++i) {
            double g = v;
            for (int j = 0; j < d; ++j)
                g *= (i == j) ? dw_[j][kk[j]] : w_[j][kk[j]];
            grad[i] += g;
        }
    });
    value *= cellvol_;
    grad *= cellvol_;
}

}  // namespace kgp
