#ifndef KGP_LAGRANGIAN_HPP
#define KGP_LAGRANGIAN_HPP

#include <optional>
#include <vector>

#include "kgp/geometry.hpp"
#include "kgp/grid.hpp"
#include "kgp/kg_field.hpp"
#include "kgp/particle_state.hpp"

namespace kgp {

// Static problem setup shared by the solvers, the discrete action and the
// SEM assembly.
struct System {
    GridSpec grid;
    Metric G;
    CovarianceMap eta;
    DeltaKernel kernel;
    LambdaMeasure measure;
    double M = 0.0;   // field mass
    double m = 1.0;   // particle rest mass
    double eps = 0.0; // mesic charge
    Gauge gauge = Gauge::coordinate_time;
    FieldStencil stencil;

    static System build(GridSpec grid, Metric G, CovarianceMap eta,
                        DeltaKernel kernel, LambdaMeasure measure, double M,
                        double m, double eps, Gauge gauge);
};

// Trajectory of the coupled system: field levels at t0 + n dt and particle
// nodes at lambda0 + k dlam (fiber coordinates). The discrete action below is
// a function of exactly these degrees of freedom.
struct RunHistory {
    double t0 = 0.0, dt = 0.0;
    std::vector<std::vector<double>> phi;  // levels 0..N
    double lambda0 = 0.0, dlam = 0.0;
    std::vector<Vec> z;  // nodes 0..K (empty: no particle)

    int levels() const { return static_cast<int>(phi.size()); }
    int particle_nodes() const { return static_cast<int>(z.size()); }
    bool has_particle() const { return !z.empty(); }
};

// Pointwise density evaluators of Eq. (lag).
double eval_kg_density(double phi, const Vec& grad_phi, const Vec& x,
                       double lambda, double M, const Metric& G,
                       const LambdaMeasure& K);
double eval_particle_density(const Vec& x, double lambda, const Vec& z,
                             const Vec& zdot, double phi_at, double m,
                             double eps, const Metric& G,
                             const CovarianceMap& eta,
                             const DeltaKernel& kernel);

struct ActionBreakdown {
    double kg = 0.0;            // free Klein-Gordon term (suspended)
    double interaction = 0.0;   // -eps integral of phi |zdot| along the worldline
    double particle_free = 0.0; // -m integral of |zdot|
    double total() const { return kg + interaction + particle_free; }
};

// Discrete suspension weights d_k on the lambda quadrature nodes,
// renormalized so sum d_k = 1 exactly (the unit metric volume contract
// carried to the lattice).
std::vector<double> suspension_weights(const LambdaMeasure& measure,
                                       double lam0, double dlam, int nodes);

// Quadrature of Eq. (lag) over grid x lambda. Kinetic terms live on
// intervals, potential terms are trapezoidal in time, worldline terms sample
// interval midpoints with the field hat-interpolated in time. The solvers in
// kg_field / particle / simulate are the exact stationarity conditions of
// this functional.
ActionBreakdown action(const RunHistory& h, const System& sys, int threads = 1);

// |action(D1) - action(D2)| for the lambda-independent integrand; both
// measures must be normalized.
double suspension_equivalence(const RunHistory& h, const System& sys,
                              const LambdaMeasure& d1, const LambdaMeasure& d2);

enum class VaryDirection { field_node, particle_node };

struct Residual {
    double abs = 0.0;    // dS/d(node)
    double scale = 0.0;  // largest single-term contribution
    double rel = 0.0;    // abs / scale (0 when below the noise floor)
};

// Central finite-difference variation of the discrete action with respect to
// one interior node, evaluated over the local terms only (the remaining terms
// cancel algebraically). Boundary nodes raise IndexError.
Residual variational_residual(const RunHistory& h, const System& sys,
                              VaryDirection dir, long time_index,
                              long cell_or_component, double fd_rel = 1e-5);

struct OracleRecord {
    VaryDirection dir;
    long time_index = 0;
    long cell_or_component = 0;
    double rel = 0.0;
};

struct OracleReport {
    double max_field_rel = 0.0;
    double max_particle_rel = 0.0;
    long field_nodes = 0, particle_nodes = 0;
    std::vector<OracleRecord> worst;  // sorted, largest first
};

// Sweep over every interior node.
OracleReport oracle_sweep(const RunHistory& h, const System& sys,
                          int max_records = 32, int threads = 1,
                          double fd_rel = 1e-5);

// Five-dimensional lattice quadrature of Eq. (lag) against the three
// separately quadratured terms of Eq. (MesonAction), evaluated over interior
// lambda intervals (the time-direction kernel needs full support).
struct FiveDCompare {
    double five_d_total = 0.0;
    double kg_term = 0.0;
    double interaction_term = 0.0;
    double particle_term = 0.0;
    double mismatch() const {
        return std::abs(five_d_total - (kg_term + interaction_term + particle_term));
    }
};
FiveDCompare action5d_compare(const RunHistory& h, const System& sys);

// Effective field value/gradient sampled from a run history at fiber point z
// (hat interpolation between the bracketing field levels). Used by the action
// and by the coupled stepper.
struct HistorySample {
    double phi = 0.0;
    Vec dphi_base;
};
HistorySample sample_history(const RunHistory& h, const System& sys,
                             const Vec& z);

}  // namespace kgp

#endif
