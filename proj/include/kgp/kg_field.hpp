#ifndef KGP_KG_FIELD_HPP
#define KGP_KG_FIELD_HPP

#include <vector>

#include "kgp/geometry.hpp"
#include "kgp/grid.hpp"
#include "kgp/particle_state.hpp"

namespace kgp {

// Precomputed static-background coefficients of the sign-resolved field
// equation  c00 phi_tt = div(c grad phi) - m2c phi - vol rho  with
// c00 = G^00 sqrt|G|, c_i = -G^{ii} sqrt|G| (face averaged), m2c = M^2 sqrt|G|.
class FieldStencil {
  public:
    static FieldStencil build(const GridSpec& spec, const Metric& G, double M);

    const GridSpec& spec() const { return spec_; }
    double mass() const { return M_; }
    const std::vector<double>& vol() const { return vol_; }
    const std::vector<double>& c00() const { return c00_; }
    const std::vector<double>& m2c() const { return m2c_; }
    const std::vector<double>& cnode(int axis) const { return cnode_[axis]; }
    const std::vector<double>& cface(int axis) const { return cface_[axis]; }

    // out = (div(c grad phi) - m2c phi - vol rho) / c00; rho may be null.
    void accel(const std::vector<double>& phi, const std::vector<double>* rho,
               std::vector<double>& out, int threads = 1) const;

    // Residual of the static equation div(c grad phi) = m2c phi + vol rho.
    double static_residual(const std::vector<double>& phi,
                           const std::vector<double>& rho) const;
    // Weighted-Jacobi relaxation sweep for the static equation; returns the
    // max residual after the sweep is applied.
    void jacobi_sweep(std::vector<double>& phi, const std::vector<double>& rho,
                      double omega, int threads = 1) const;

    double max_stable_dt(double cfl) const;
    void apply_sponge(FieldState& s, double dt) const;

  private:
    GridSpec spec_;
    GridIndexer idx_;
    double M_ = 0.0;
    double cmax_ = 1.0;
    std::vector<double> vol_, c00_, m2c_;
    std::array<std::vector<double>, 3> cface_;  // face-averaged -G^{ii} sqrt|G|
    std::array<std::vector<double>, 3> cnode_;  // node-centered -G^{ii} sqrt|G|
    std::vector<double> sponge_;                // damping rate per node

    GridIndexer indexer() const { return idx_; }
    double div_at(const std::vector<double>& phi, long flat) const;
    double diag_at(long flat) const;
};

// One leapfrog (kick-drift-kick) step with the source held fixed across the
// step. Throws StabilityError if dt violates the CFL bound (cfl <= 0.9).
FieldState step_field(const FieldState& s, const SourceGrid& src, double dt,
                      const FieldStencil& stencil, double cfl = 0.9,
                      int threads = 1);

// Instantaneous source of Eq. (KGeqn):
//   rho = eps vol^{-1} |zdot|_g / |wdot^0| kernel^d(x - spatial(eta^{-1}(z))).
SourceGrid deposit_source(const ParticleState& p, const CovarianceMap& eta,
                          const DeltaKernel& kernel, const GridSpec& spec,
                          const Metric& G);

struct FieldSample {
    double phi = 0.0;
    Vec grad;  // spatial gradient, d components
    double phi_t = 0.0;
};

// Kernel-weighted field value, gradient (analytically differentiated kernel
// weights) and time derivative at a spatial point. Same kernel as deposition.
FieldSample interpolate_field(const FieldState& s, const Vec& x_spatial,
                              const DeltaKernel& kernel, const GridSpec& spec);

// Cell sum of the canonical SEM density component t^00 (centered gradients).
double field_energy(const FieldState& s, const FieldStencil& stencil,
                    int threads = 1);

// One lambda interval of a discrete worldline.
struct IntervalSample {
    Vec z_mid;  // fiber midpoint of the interval
    Vec v;      // fiber velocity dz/dlambda on the interval
    double dlam = 0.0;
};

// Weight with which an interval contributes to field time level t: the
// collapsed time delta discretized as a hat of width dt on the base time of
// the interval midpoint. Shared by the KG source and the SEM deposits.
double collapse_weight(const IntervalSample& s, const CovarianceMap& eta,
                       double t, double dt);

// Interval-averaged source used by the coupled stepper: the variational
// derivative of the discrete interaction term with respect to phi at level t.
SourceGrid deposit_interval_source(const std::vector<IntervalSample>& intervals,
                                   double eps, const CovarianceMap& eta,
                                   const DeltaKernel& kernel,
                                   const GridSpec& spec, const Metric& G,
                                   double t, double dt);

}  // namespace kgp

#endif
