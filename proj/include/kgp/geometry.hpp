#ifndef KGP_GEOMETRY_HPP
#define KGP_GEOMETRY_HPP

#include <functional>

#include "kgp/common.hpp"

namespace kgp {

// Spacetime events are Eigen vectors (t, x1, ..., xd). Signature is fixed as
// (+,-,-,...): timelike vectors have G_ab v^a v^b > 0.

enum class MetricKind { minkowski, static_diagonal };

// Diagonal static metric G = diag(c0, -c1, ..., -cd) with
// c_mu(x) = base_mu + amp_mu * exp(-|x_spatial - center|^2 / (2 sigma^2)).
struct DiagonalProfile {
    Vec base;    // d+1 positive coefficients
    Vec amp;     // d+1 bump amplitudes
    Vec center;  // d spatial coordinates
    double sigma = 1.0;
};

class Metric {
  public:
    static Metric minkowski(int dim);
    static Metric static_diagonal(int dim, DiagonalProfile profile);

    int dim() const { return dim_; }
    MetricKind kind() const { return kind_; }
    const DiagonalProfile& profile() const { return profile_; }

    Mat components(const Vec& x) const;          // G_{mu nu}
    Mat inverse(const Vec& x) const;             // G^{mu nu}
    std::vector<Mat> derivs(const Vec& x) const; // [sigma] -> d_sigma G_{mu nu}
    double vol_density(const Vec& x) const;      // sqrt|det G|

    // Largest coordinate wave speed sqrt(-G^{ii}/G^{00}) over sampled events;
    // used for the CFL bound.
    double max_wave_speed(const Vec& lo, const Vec& hi, int samples) const;

  private:
    int dim_ = 2;
    MetricKind kind_ = MetricKind::minkowski;
    DiagonalProfile profile_;
    Vec coeffs(const Vec& x) const;  // (c0..cd), all positive
    Vec coeff_grad(const Vec& x, int mu) const;  // spatial gradient of c_mu
};

enum class MapKind { identity, affine, smooth };

// Covariance field eta: X -> X identifying the base copy of spacetime with
// the fiber copy. kappa^mu_a = (eta^a_mu)^{-1}.
class CovarianceMap {
  public:
    static CovarianceMap identity(int dim);
    static CovarianceMap affine(Mat A, Vec b);
    // Per-axis periodic perturbation of the spatial coordinates:
    //   y_0 = x_0,  y_i = x_i + amp_i * sin(2 pi (x_i - phase_i) / period_i).
    // Invertible when |2 pi amp_i / period_i| < 1; inverse by fixed point.
    static CovarianceMap smooth_sine(int dim, Vec amp, Vec period, Vec phase);

    int dim() const { return dim_; }
    MapKind kind() const { return kind_; }

    Vec forward(const Vec& x) const;       // eta(x)
    Vec backward(const Vec& y) const;      // eta^{-1}(y)
    Mat jacobian(const Vec& x) const;      // eta^a_mu at base point x
    Mat inv_jacobian(const Vec& x) const;  // kappa^mu_a at base point x
    double det(const Vec& x) const;        // det eta_*, positive

    bool is_identity() const { return kind_ == MapKind::identity; }
    // True when eta fixes the time coordinate (w^0 = z^0); required for
    // coupled field-particle runs.
    bool time_preserving() const;

  private:
    int dim_ = 2;
    MapKind kind_ = MapKind::identity;
    Mat A_, Ainv_;
    Vec b_;
    Vec amp_, period_, phase_;
};

enum class KernelShape { gaussian, bspline_quadratic, bspline_cubic };

// Regularized delta. value1d integrates to 1; the d-dimensional kernel is the
// product of 1d factors. For b-splines with knot spacing equal to the grid
// spacing, cell sums are exactly 1 (partition of unity).
class DeltaKernel {
  public:
    // width_cells is the total support extent in grid cells (3 = default
    // quadratic b-spline over 3 cells); h is the grid spacing.
    static DeltaKernel make(KernelShape shape, double width_cells, double h);

    KernelShape shape() const { return shape_; }
    double scale() const { return scale_; }
    double support_radius() const { return support_radius_; }

    double value1d(double u) const;
    double deriv1d(double u) const;
    double value(const Vec& r) const;  // product over all components of r

  private:
    KernelShape shape_ = KernelShape::bspline_quadratic;
    double scale_ = 1.0;           // knot spacing (b-spline) or sigma (gaussian)
    double support_radius_ = 1.5;  // absolute units
};

enum class MeasureKind { uniform, triangular, bump };

// Nondynamic metric K on the lambda axis, stored through its volume density
// sqrt(K). The axis must have metric volume 1.
class LambdaMeasure {
  public:
    // scale != 1 produces an unnormalized measure (for error-path tests).
    static LambdaMeasure make(MeasureKind kind, double lam0, double lam1,
                              double scale = 1.0);

    MeasureKind kind() const { return kind_; }
    double lam0() const { return lam0_; }
    double lam1() const { return lam1_; }

    double density(double lam) const;  // sqrt(K)(lambda)
    // Throws NormalizationError unless the metric volume is 1 to 1e-10.
    void validate() const;

  private:
    MeasureKind kind_ = MeasureKind::uniform;
    double lam0_ = 0.0, lam1_ = 1.0;
    double scale_ = 1.0;
    double bump_norm_ = 1.0;
};

// g_ab = G_{mu nu}(eta^{-1}(z)) kappa^mu_a kappa^nu_b (eta^{-1}(z)).
Mat pullback_metric(const Metric& G, const CovarianceMap& eta, const Vec& z);

// Regularized delta^{d+1}(eta(x) - z) (det eta_*): a weight-1 scalar density
// in x on the base.
double delta_composed(const DeltaKernel& kernel, const CovarianceMap& eta,
                      const Vec& x, const Vec& z);

// Quadrature check of the weight-1 transformation law:
// | integral f(eta(x)) kernel(eta(x) - z) |J(x)| dx  -  f(z) |.
double density_transform_check(const DeltaKernel& kernel,
                               const CovarianceMap& eta,
                               const std::function<double(const Vec&)>& f,
                               const Vec& z, int pts_per_axis);

}  // namespace kgp

#endif
