#ifndef KGP_SIMULATE_HPP
#define KGP_SIMULATE_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kgp/lagrangian.hpp"
#include "kgp/particle.hpp"
#include "kgp/sem.hpp"

namespace kgp {

struct MetricCfg {
    MetricKind kind = MetricKind::minkowski;
    DiagonalProfile profile;
};

struct EtaCfg {
    MapKind kind = MapKind::identity;
    Mat A;  // affine
    Vec b;
    Vec amp, period, phase;  // smooth
};

struct KernelCfg {
    KernelShape shape = KernelShape::bspline_quadratic;
    double width_cells = 3.0;
};

struct MeasureCfg {
    MeasureKind kind = MeasureKind::uniform;
    double scale = 1.0;
};

struct FieldInitCfg {
    std::string kind = "zero";  // zero|eigenmode|pulse|static_self|random_modes
    int mode = 1;               // eigenmode index along axis 0
    double amplitude = 0.0;
    double pulse_center = 0.0;
    double pulse_sigma = 1.0;
    bool add_pulse = false;  // superpose a right-moving pulse (static_self runs)
    int random_mode_count = 4;
};

struct ParticleCfg {
    bool enabled = false;
    Vec z0;  // fiber coordinates, d+1
    Vec v0;  // fiber velocity, d+1 (renormalized per gauge)
};

struct Scenario {
    std::string name = "custom";
    double M = 1.0, m = 1.0, eps = 0.0;
    GridSpec grid;
    MetricCfg metric;
    EtaCfg eta;
    KernelCfg kernel;
    MeasureCfg measure;
    Gauge gauge = Gauge::coordinate_time;
    double duration = 1.0;
    double cfl = 0.5;
    double dt = 0.0;  // 0: derive from cfl, then round to integral steps
    int steps = 0;
    ParticleCfg particle;
    FieldInitCfg field_init;
    int snapshot_cadence = 0;  // 0: no snapshots
    std::vector<Vec> probes;   // spatial probe positions
    std::uint64_t seed = 1;
    int threads = 1;

    void resolve();  // fills dt/steps, validates CFL, probes, normalization
};

System build_system(const Scenario& sc);
FieldState make_initial_field(const Scenario& sc, const System& sys);
// Exact discrete traveling eigenmode of the leapfrog stencil (Minkowski,
// periodic): quadratic lattice sums are constant in time to roundoff.
void add_eigenmode(FieldState& s, const System& sys, int mode, double amplitude,
                   double phase, double dt);

struct TrajectoryRow {
    double lambda = 0.0, t = 0.0;
    Vec z;       // fiber
    Vec x;       // physical spatial position
    Vec v;       // fiber velocity
    double norm = 1.0;
    double eff_mass = 1.0;
};

struct SnapshotRecord {
    FieldState state;                      // synchronized (phi, pi)
    std::vector<IntervalSample> brackets;  // worldline intervals around state.t
};

struct RunResult {
    Scenario scenario;
    std::vector<double> diag_t;
    std::vector<double> energy;
    std::vector<Vec> momentum;                // P^mu series
    std::vector<std::vector<double>> probes;  // per diag step, per probe
    std::vector<TrajectoryRow> trajectory;
    std::vector<SnapshotRecord> snapshots;
    FieldState final_field;
    std::optional<ParticleState> final_particle;
    RunHistory history;  // populated when retain_history
};

struct RunOptions {
    bool retain_history = false;
    bool collect_momentum = true;
};

// Interleaved coupled stepping: per field interval, the particle interval and
// the field update are solved as a joint fixed point so that the committed
// trajectory is a stationary point of the discrete action.
RunResult run(const Scenario& sc, const RunOptions& opt = {});

// Damped relaxation (weighted Jacobi) of the static equation with the
// particle pinned; residual target 1e-10.
FieldState solve_static_yukawa(const Scenario& sc, const System& sys,
                               double tol = 1e-10, long max_iters = 2000000);

struct EtaInvarianceReport {
    double trajectory_deviation = 0.0;  // max |w1 - w2| over nodes
    double field_deviation = 0.0;       // max |phi1 - phi2| at the end
    double action_deviation = 0.0;
};

// Runs the scenario under eta = identity and under eta2 with consistently
// transformed particle data; compares in physical coordinates.
EtaInvarianceReport eta_invariance_test(const Scenario& sc, const EtaCfg& eta2);

// Built-in named scenarios: free-field-1d, free-particle, coupled-1d,
// coupled-1d-proper, yukawa-1d, yukawa-3d, eta-affine-1d, eta-smooth-1d.
Scenario builtin_scenario(const std::string& name);
std::vector<std::string> builtin_scenario_names();

}  // namespace kgp

#endif
