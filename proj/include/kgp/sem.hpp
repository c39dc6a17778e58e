#ifndef KGP_SEM_HPP
#define KGP_SEM_HPP

#include <vector>

#include "kgp/lagrangian.hpp"

namespace kgp {

// Grid of symmetric (d+1)x(d+1) tensor density components, stored row-major
// per component: comp[mu*(d+1)+nu][cell].
struct TensorGrid {
    double t = 0.0;
    int dim = 2;  // d+1
    std::vector<std::vector<double>> comp;

    static TensorGrid zero(const GridSpec& spec, int dim, double t);
    std::vector<double>& at(int mu, int nu) { return comp[mu * dim + nu]; }
    const std::vector<double>& at(int mu, int nu) const { return comp[mu * dim + nu]; }
};

// Total SEM tensor density with its two assembly pieces.
struct SemGrid {
    double t = 0.0;
    TensorGrid T;      // total
    TensorGrid t_can;  // canonical Klein-Gordon part
    TensorGrid theta;  // Minkowski tensor density
};

struct SemAux {
    double kg_window_integral = 0.0;  // integral (G^{mu nu} phi_mu phi_nu - M^2 phi^2) sqrt|G| d^{d+1}x
    double t44_lambda_integral = 0.0; // lambda quadrature of T^4_4 = the KG action
    double T4nu = 0.0;                // identically zero markers
    double Tmu4 = 0.0;
};

// Canonical SEM tensor density of the free Klein-Gordon field,
//   t^{mu nu} = (u u^T - 1/2 G^{-1} (phi_a phi_b G^{ab} - M^2 phi^2)) sqrt|G|,
//   u = G^{-1} dphi (sign resolved against field_energy >= 0),
// with phi_t = pi and centered spatial differences.
TensorGrid kg_sem(const FieldState& s, const System& sys, int threads = 1);

// Worldline (Minkowski) tensor density at field time t:
//   Theta^{mu nu}(x) = kappa^mu_a kappa^nu_b(x) sum_k w_k v^a v^b / |v|_g W_k(x),
// with the identical time-collapse weights as the KG source deposit.
TensorGrid minkowski_theta(const std::vector<IntervalSample>& intervals,
                           const System& sys, double t, double dt);

// T = t_can + (m + eps phi) Theta, phi taken at each cell.
SemGrid total_sem(const FieldState& s,
                  const std::vector<IntervalSample>& intervals,
                  const System& sys, double dt, int threads = 1);

struct DivergenceReport {
    std::vector<std::vector<double>> D;  // per mu, per cell
    double l2 = 0.0;          // sqrt(sum_mu,x D^2 h^d)
    double linf = 0.0;
    double l2_normalized = 0.0;   // l2 / L2 norm of the middle T
    double linf_normalized = 0.0; // linf / Linf norm of the middle T
};

// D^mu = d_nu T^{mu nu} by centered differences in time (three consecutive
// snapshots) and space.
DivergenceReport sem_divergence(const SemGrid& prev, const SemGrid& mid,
                                const SemGrid& next, const GridSpec& spec);

// T^4_4 from the same quadrature path as the discrete action's KG term.
SemAux sem_aux(const RunHistory& h, const System& sys, int threads = 1);

// Total P^mu(t) = sum_cells T^{mu 0} h^d.
Vec sem_momentum(const SemGrid& sem, const GridSpec& spec, int threads = 1);

struct ConservationReport {
    Vec drift;        // per component, relative to max(|P^mu(0)|, |P|_inf(0))
    double max_drift = 0.0;
};

// Max relative drift of each P^mu over a periodic run.
ConservationReport conservation_audit(const std::vector<double>& times,
                                      const std::vector<Vec>& momenta,
                                      bool periodic);

}  // namespace kgp

#endif
