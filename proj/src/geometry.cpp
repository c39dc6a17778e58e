#include "kgp/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace kgp {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kInverseTol = 1e-12;
}  // namespace

// ---------------------------------------------------------------------------
// Metric

Metric Metric::minkowski(int dim) {
    Metric m;
    m.dim_ = dim;
    m.kind_ = MetricKind::minkowski;
    return m;
}

Metric Metric::static_diagonal(int dim, DiagonalProfile profile) {
    if (profile.base.size() != dim || profile.amp.size() != dim ||
        profile.center.size() != dim - 1) {
        throw ConfigError("static_diagonal profile has inconsistent sizes");
    }
    if (profile.sigma <= 0.0) throw ConfigError("profile sigma must be positive");
    Metric m;
    m.dim_ = dim;
    m.kind_ = MetricKind::static_diagonal;
    m.profile_ = std::move(profile);
    return m;
}

Vec Metric::coeffs(const Vec& x) const {
    Vec c(dim_);
    if (kind_ == MetricKind::minkowski) {
        c.setOnes();
        return c;
    }
    double r2 = 0.0;
    for (int i = 1; i < dim_; ++i) r2 += sq(x[i] - profile_.center[i - 1]);
    const double bump = std::exp(-r2 / (2.0 * sq(profile_.sigma)));
    for (int mu = 0; mu < dim_; ++mu) {
        c[mu] = profile_.base[mu] + profile_.amp[mu] * bump;
        if (!(c[mu] > 0.0))
            throw PhysicsError("metric signature violated: nonpositive diagonal coefficient");
    }
    return c;
}

Vec Metric::coeff_grad(const Vec& x, int mu) const {
    Vec g = Vec::Zero(dim_);  // gradient over all d+1 coordinates; time slot stays 0
    if (kind_ == MetricKind::minkowski) return g;
    double r2 = 0.0;
    for (int i = 1; i < dim_; ++i) r2 += sq(x[i] - profile_.center[i - 1]);
    const double s2 = sq(profile_.sigma);
    const double bump = std::exp(-r2 / (2.0 * s2));
    for (int i = 1; i < dim_; ++i)
        g[i] = profile_.amp[mu] * bump * (-(x[i] - profile_.center[i - 1]) / s2);
    return g;
}

Mat Metric::components(const Vec& x) const {
    const Vec c = coeffs(x);
    Mat G = Mat::Zero(dim_, dim_);
    G(0, 0) = c[0];
    for (int i = 1; i < dim_; ++i) G(i, i) = -c[i];
    return G;
}

Mat Metric::inverse(const Vec& x) const {
    const Vec c = coeffs(x);
    Mat Gi = Mat::Zero(dim_, dim_);
    Gi(0, 0) = 1.0 / c[0];
    for (int i = 1; i < dim_; ++i) Gi(i, i) = -1.0 / c[i];
    return Gi;
}

std::vector<Mat> Metric::derivs(const Vec& x) const {
    std::vector<Mat> d(dim_, Mat::Zero(dim_, dim_));
    if (kind_ == MetricKind::minkowski) return d;
    for (int mu = 0; mu < dim_; ++mu) {
        const Vec g = coeff_grad(x, mu);
        const double sign = (mu == 0) ? 1.0 : -1.0;
        for (int sigma = 1; sigma < dim_; ++sigma)
            d[sigma](mu, mu) = sign * g[sigma];
    }
    return d;
}

double Metric::vol_density(const Vec& x) const {
    const Vec c = coeffs(x);
    double p = 1.0;
    for (int mu = 0; mu < dim_; ++mu) p *= c[mu];
    return std::sqrt(p);
}

double Metric::max_wave_speed(const Vec& lo, const Vec& hi, int samples) const {
    if (kind_ == MetricKind::minkowski) return 1.0;
    double cmax = 0.0;
    Vec x = Vec::Zero(dim_);
    // diagonal sweep plus axis midlines is enough for the smooth bump profiles
    for (int s = 0; s <= samples; ++s) {
        const double f = static_cast<double>(s) / samples;
        for (int i = 1; i < dim_; ++i) x[i] = lo[i - 1] + f * (hi[i - 1] - lo[i - 1]);
        const Vec c = coeffs(x);
        for (int i = 1; i < dim_; ++i)
            cmax = std::max(cmax, std::sqrt(c[0] / c[i]));
    }
    return cmax;
}

// ---------------------------------------------------------------------------
// CovarianceMap

CovarianceMap CovarianceMap::identity(int dim) {
    CovarianceMap m;
    m.dim_ = dim;
    m.kind_ = MapKind::identity;
    return m;
}

CovarianceMap CovarianceMap::affine(Mat A, Vec b) {
    const int dim = static_cast<int>(b.size());
    if (A.rows() != dim || A.cols() != dim)
        throw ConfigError("affine map: A and b sizes disagree");
    Eigen::FullPivLU<Mat> lu(A);
    if (!lu.isInvertible()) throw SingularMapError("affine map: A not invertible");
    if (lu.determinant() <= 0.0)
        throw ConfigError("covariance maps must be positively oriented");
    CovarianceMap m;
    m.dim_ = dim;
    m.kind_ = MapKind::affine;
    m.Ainv_ = lu.inverse();
    m.A_ = std::move(A);
    m.b_ = std::move(b);
    return m;
}

CovarianceMap CovarianceMap::smooth_sine(int dim, Vec amp, Vec period, Vec phase) {
    if (amp.size() != dim - 1 || period.size() != dim - 1 || phase.size() != dim - 1)
        throw ConfigError("smooth map: expected d spatial amplitude/period/phase entries");
    for (int i = 0; i < dim - 1; ++i) {
        if (period[i] <= 0.0) throw ConfigError("smooth map: period must be positive");
        if (std::abs(2.0 * kPi * amp[i] / period[i]) >= 1.0)
            throw ConfigError("smooth map: |2 pi amp / period| must be < 1");
    }
    CovarianceMap m;
    m.dim_ = dim;
    m.kind_ = MapKind::smooth;
    m.amp_ = std::move(amp);
    m.period_ = std::move(period);
    m.phase_ = std::move(phase);
    return m;
}

Vec CovarianceMap::forward(const Vec& x) const {
    switch (kind_) {
        case MapKind::identity:
            return x;
        case MapKind::affine:
            return A_ * x + b_;
        case MapKind::smooth: {
            Vec y = x;
            for (int i = 1; i < dim_; ++i)
                y[i] = x[i] + amp_[i - 1] *
                                  std::sin(2.0 * kPi * (x[i] - phase_[i - 1]) / period_[i - 1]);
            return y;
        }
    }
    return x;
}

Vec CovarianceMap::backward(const Vec& y) const {
    switch (kind_) {
        case MapKind::identity:
            return y;
        case MapKind::affine:
            return Ainv_ * (y - b_);
        case MapKind::smooth: {
            Vec x = y;
            for (int i = 1; i < dim_; ++i) {
                const double a = amp_[i - 1], P = period_[i - 1], p0 = phase_[i - 1];
                double xi = y[i];
                for (int it = 0; it < 200; ++it) {
                    const double next = y[i] - a * std::sin(2.0 * kPi * (xi - p0) / P);
                    if (std::abs(next - xi) < kInverseTol) {
                        xi = next;
                        break;
                    }
                    xi = next;
                }
                x[i] = xi;
            }
            return x;
        }
    }
    return y;
}

Mat CovarianceMap::jacobian(const Vec& x) const {
    switch (kind_) {
        case MapKind::identity:
            return Mat::Identity(dim_, dim_);
        case MapKind::affine:
            return A_;
        case MapKind::smooth: {
            Mat J = Mat::Identity(dim_, dim_);
            for (int i = 1; i < dim_; ++i) {
                const double w = 2.0 * kPi / period_[i - 1];
                J(i, i) = 1.0 + amp_[i - 1] * w *
                                    std::cos(w * (x[i] - phase_[i - 1]));
            }
            return J;
        }
    }
    return Mat::Identity(dim_, dim_);
}

Mat CovarianceMap::inv_jacobian(const Vec& x) const {
    switch (kind_) {
        case MapKind::identity:
            return Mat::Identity(dim_, dim_);
        case MapKind::affine:
            return Ainv_;
        case MapKind::smooth: {
            Mat K = Mat::Identity(dim_, dim_);
            const Mat J = jacobian(x);
            for (int i = 1; i < dim_; ++i) {
                if (J(i, i) == 0.0)
                    throw SingularMapError("smooth map jacobian singular");
                K(i, i) = 1.0 / J(i, i);
            }
            return K;
        }
    }
    return Mat::Identity(dim_, dim_);
}

double CovarianceMap::det(const Vec& x) const {
    switch (kind_) {
        case MapKind::identity:
            return 1.0;
        case MapKind::affine:
            return A_.determinant();
        case MapKind::smooth: {
            const Mat J = jacobian(x);
            double d = 1.0;
            for (int i = 0; i < dim_; ++i) d *= J(i, i);
            return d;
        }
    }
    return 1.0;
}

bool CovarianceMap::time_preserving() const {
    switch (kind_) {
        case MapKind::identity:
        case MapKind::smooth:
            return true;
        case MapKind::affine: {
            if (b_[0] != 0.0) return false;
            for (int mu = 1; mu < dim_; ++mu)
                if (A_(0, mu) != 0.0 || A_(mu, 0) != 0.0) return false;
            return A_(0, 0) == 1.0;
        }
    }
    return false;
}

// ---------------------------------------------------------------------------
// DeltaKernel

namespace {

double m3(double t) {  // quadratic b-spline, support [-1.5, 1.5]
    const double a = std::abs(t);
    if (a <= 0.5) return 0.75 - a * a;
    if (a <= 1.5) return 0.5 * sq(1.5 - a);
    return 0.0;
}

double m3d(double t) {
    const double a = std::abs(t);
    if (a <= 0.5) return -2.0 * t;
    if (a <= 1.5) return -(1.5 - a) * (t > 0 ? 1.0 : -1.0);
    return 0.0;
}

double m4(double t) {  // cubic b-spline, support [-2, 2]
    const double a = std::abs(t);
    if (a <= 1.0) return 2.0 / 3.0 - a * a + 0.5 * a * a * a;
    if (a <= 2.0) return sq(2.0 - a) * (2.0 - a) / 6.0;
    return 0.0;
}

double m4d(double t) {
    const double a = std::abs(t);
    if (a <= 1.0) return -2.0 * t + 1.5 * t * a;
    if (a <= 2.0) return -0.5 * sq(2.0 - a) * (t > 0 ? 1.0 : -1.0);
    return 0.0;
}

}  // namespace

DeltaKernel DeltaKernel::make(KernelShape shape, double width_cells, double h) {
    if (width_cells <= 0.0 || h <= 0.0)
        throw ConfigError("kernel width and grid spacing must be positive");
    DeltaKernel k;
    k.shape_ = shape;
    switch (shape) {
        case KernelShape::bspline_quadratic:
            k.scale_ = width_cells * h / 3.0;
            k.support_radius_ = 1.5 * k.scale_;
            break;
        case KernelShape::bspline_cubic:
            k.scale_ = width_cells * h / 4.0;
            k.support_radius_ = 2.0 * k.scale_;
            break;
        case KernelShape::gaussian:
            k.scale_ = width_cells * h / 3.0;  // sigma
            k.support_radius_ = 7.0 * k.scale_;  // truncation mass < 1e-10
            break;
    }
    return k;
}

double DeltaKernel::value1d(double u) const {
    const double t = u / scale_;
    switch (shape_) {
        case KernelShape::bspline_quadratic:
            return m3(t) / scale_;
        case KernelShape::bspline_cubic:
            return m4(t) / scale_;
        case KernelShape::gaussian: {
            if (std::abs(u) > support_radius_) return 0.0;
            static const double c = 1.0 / std::sqrt(2.0 * kPi);
            return c * std::exp(-0.5 * t * t) / scale_;
        }
    }
    return 0.0;
}

double DeltaKernel::deriv1d(double u) const {
    const double t = u / scale_;
    const double s2 = sq(scale_);
    switch (shape_) {
        case KernelShape::bspline_quadratic:
            return m3d(t) / s2;
        case KernelShape::bspline_cubic:
            return m4d(t) / s2;
        case KernelShape::gaussian: {
            if (std::abs(u) > support_radius_) return 0.0;
            static const double c = 1.0 / std::sqrt(2.0 * kPi);
            return -t * c * std::exp(-0.5 * t * t) / s2;
        }
    }
    return 0.0;
}

double DeltaKernel::value(const Vec& r) const {
    double p = 1.0;
    for (int i = 0; i < r.size(); ++i) {
        p *= value1d(r[i]);
        if (p == 0.0) return 0.0;
    }
    return p;
}

// ---------------------------------------------------------------------------
// LambdaMeasure

LambdaMeasure LambdaMeasure::make(MeasureKind kind, double lam0, double lam1,
                                  double scale) {
    if (!(lam1 > lam0)) throw ConfigError("lambda domain must have positive length");
    LambdaMeasure m;
    m.kind_ = kind;
    m.lam0_ = lam0;
    m.lam1_ = lam1;
    m.scale_ = scale;
    if (kind == MeasureKind::bump) {
        // normalize the C-infinity bump exp(-1/(1-s^2)) numerically once
        const int n = 4096;
        double acc = 0.0;
        for (int i = 0; i < n; ++i) {
            const double s = -1.0 + (i + 0.5) * (2.0 / n);
            acc += std::exp(-1.0 / (1.0 - s * s)) * (2.0 / n);
        }
        m.bump_norm_ = acc * (lam1 - lam0) / 2.0;
    }
    return m;
}

double LambdaMeasure::density(double lam) const {
    const double T = lam1_ - lam0_;
    double v = 0.0;
    switch (kind_) {
        case MeasureKind::uniform:
            v = 1.0 / T;
            break;
        case MeasureKind::triangular: {
            const double s = 2.0 * (lam - lam0_) / T - 1.0;  // [-1, 1]
            v = (std::abs(s) <= 1.0) ? (1.0 - std::abs(s)) * 2.0 / T : 0.0;
            break;
        }
        case MeasureKind::bump: {
            const double s = 2.0 * (lam - lam0_) / T - 1.0;
            v = (std::abs(s) < 1.0) ? std::exp(-1.0 / (1.0 - s * s)) / bump_norm_ : 0.0;
            break;
        }
    }
    return scale_ * v;
}

void LambdaMeasure::validate() const {
    // composite Simpson on a dense grid; diagnostic only, analytic forms are
    // normalized by construction
    const int n = 8192;
    const double h = (lam1_ - lam0_) / n;
    double acc = density(lam0_) + density(lam1_);
    for (int i = 1; i < n; ++i)
        acc += density(lam0_ + i * h) * ((i % 2) ? 4.0 : 2.0);
    acc *= h / 3.0;
    if (std::abs(acc - 1.0) > 1e-10)
        throw NormalizationError("lambda measure does not have metric volume 1");
}

// ---------------------------------------------------------------------------
// Operations

Mat pullback_metric(const Metric& G, const CovarianceMap& eta, const Vec& z) {
    const Vec w = eta.backward(z);
    const Mat kappa = eta.inv_jacobian(w);
    const Mat g = kappa.transpose() * G.components(w) * kappa;
    return 0.5 * (g + g.transpose());
}

double delta_composed(const DeltaKernel& kernel, const CovarianceMap& eta,
                      const Vec& x, const Vec& z) {
    return kernel.value(eta.forward(x) - z) * eta.det(x);
}

double density_transform_check(const DeltaKernel& kernel,
                               const CovarianceMap& eta,
                               const std::function<double(const Vec&)>& f,
                               const Vec& z, int pts_per_axis) {
    const int dim = eta.dim();
    const Vec xc = eta.backward(z);
    // bound the support preimage through the inverse jacobian at the center
    const Mat kappa = eta.inv_jacobian(xc);
    double stretch = 0.0;
    for (int i = 0; i < dim; ++i) {
        double row = 0.0;
        for (int j = 0; j < dim; ++j) row += std::abs(kappa(i, j));
        stretch = std::max(stretch, row);
    }
    const double half = 1.5 * stretch * kernel.support_radius();
    const double h = 2.0 * half / pts_per_axis;

    // verify coverage: kernel support must vanish on the box faces
    for (int i = 0; i < dim; ++i) {
        for (double s : {-1.0, 1.0}) {
            Vec xf = xc;
            xf[i] += s * half;
            if (kernel.value(eta.forward(xf) - z) != 0.0)
                throw DomainError("quadrature domain does not cover kernel support");
        }
    }

    std::vector<int> idx(dim, 0);
    double acc = 0.0;
    const long total = static_cast<long>(std::pow(pts_per_axis, dim));
    for (long flat = 0; flat < total; ++flat) {
        long r = flat;
        Vec x = xc;
        for (int i = 0; i < dim; ++i) {
            const int ii = static_cast<int>(r % pts_per_axis);
            r /= pts_per_axis;
            x[i] += -half + (ii + 0.5) * h;
        }
        const Vec y = eta.forward(x);
        const double k = kernel.value(y - z);
        if (k == 0.0) continue;
        acc += f(y) * k * std::abs(eta.jacobian(x).determinant()) * std::pow(h, dim);
    }
    return std::abs(acc - f(z));
}

}  // namespace kgp
