#include "kgp/lagrangian.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

namespace kgp {

System System::build(GridSpec grid, Metric G, CovarianceMap eta,
                     DeltaKernel kernel, LambdaMeasure measure, double M,
                     double m, double eps, Gauge gauge) {
    measure.validate();
    FieldStencil stencil = FieldStencil::build(grid, G, M);
    System s;
    s.grid = std::move(grid);
    s.G = std::move(G);
    s.eta = std::move(eta);
    s.kernel = std::move(kernel);
    s.measure = std::move(measure);
    s.M = M;
    s.m = m;
    s.eps = eps;
    s.gauge = gauge;
    s.stencil = std::move(stencil);
    return s;
}

double eval_kg_density(double phi, const Vec& grad_phi, const Vec& x,
                       double lambda, double M, const Metric& G,
                       const LambdaMeasure& K) {
    const Mat gi = G.inverse(x);
    const double quad = grad_phi.dot(gi * grad_phi);
    return 0.5 * (quad - M * M * phi * phi) * G.vol_density(x) *
           K.density(lambda);
}

double eval_particle_density(const Vec& x, double lambda, const Vec& z,
                             const Vec& zdot, double phi_at, double m,
                             double eps, const Metric& G,
                             const CovarianceMap& eta,
                             const DeltaKernel& kernel) {
    (void)lambda;
    const Mat g = pullback_metric(G, eta, z);
    const double n2 = zdot.dot(g * zdot);
    if (!(n2 > 0.0)) throw GaugeError("particle velocity is not timelike");
    return -(m + eps * phi_at) * std::sqrt(n2) *
           delta_composed(kernel, eta, x, z);
}

std::vector<double> suspension_weights(const LambdaMeasure& measure,
                                       double lam0, double dlam, int nodes) {
    if (nodes < 2) throw ConfigError("suspension quadrature needs >= 2 nodes");
    std::vector<double> w(nodes);
    double total = 0.0;
    for (int k = 0; k < nodes; ++k) {
        const double trap = (k == 0 || k == nodes - 1) ? 0.5 : 1.0;
        w[k] = trap * dlam * measure.density(lam0 + k * dlam);
        total += w[k];
    }
    if (!(total > 0.0)) throw NormalizationError("suspension density vanishes on the window");
    for (double& x : w) x /= total;
    return w;
}

// ---------------------------------------------------------------------------
// Hat-interpolated field sampling along the worldline

HistorySample sample_history(const RunHistory& h, const System& sys,
                             const Vec& z) {
    const int dim = sys.G.dim();
    const Vec w = sys.eta.backward(z);
    const double tau = w[0];
    const int N = h.levels() - 1;
    double u = (tau - h.t0) / h.dt;
    if (u < -1e-9 || u > N + 1e-9)
        throw AlignmentError("worldline sample outside the field time window");
    int lo = static_cast<int>(std::floor(u));
    lo = std::clamp(lo, 0, N - 1);
    const double frac = u - lo;

    KernelStamp stamp(sys.grid, sys.kernel, w.tail(dim - 1));
    double v_lo, v_hi;
    Vec g_lo, g_hi;
    stamp.interpolate(h.phi[lo], v_lo, g_lo);
    stamp.interpolate(h.phi[lo + 1], v_hi, g_hi);

    HistorySample out;
    out.phi = (1.0 - frac) * v_lo + frac * v_hi;
    out.dphi_base = Vec::Zero(dim);
    out.dphi_base[0] = (v_hi - v_lo) / h.dt;
    for (int i = 1; i < dim; ++i)
        out.dphi_base[i] = (1.0 - frac) * g_lo[i - 1] + frac * g_hi[i - 1];
    return out;
}

namespace {

// Discrete worldline Lagrangian on one lambda interval:
//   L_d(a, b) = -dlam (m + eps PhiHat(mid)) |(b - a)/dlam|_{g(mid)}.
double interval_lagrangian(const RunHistory& h, const System& sys,
                           const Vec& za, const Vec& zb) {
    const Vec mid = 0.5 * (za + zb);
    const Vec v = (zb - za) / h.dlam;
    const Mat g = pullback_metric(sys.G, sys.eta, mid);
    const double n2 = v.dot(g * v);
    if (!(n2 > 0.0)) throw GaugeError("worldline interval is not timelike");
    double meff = sys.m;
    if (sys.eps != 0.0) meff += sys.eps * sample_history(h, sys, mid).phi;
    return -h.dlam * meff * std::sqrt(n2);
}

struct KineticCtx {
    const FieldStencil* st;
    double dt;
    double cellvol;
};

// 0.5 c00 ((phi_b - phi_a)/dt)^2 dt h^V at one cell
inline double kinetic_cell(const KineticCtx& c, const std::vector<double>& a,
                           const std::vector<double>& b, std::size_t f) {
    const double dphi = (b[f] - a[f]) / c.dt;
    return 0.5 * c.st->c00()[f] * dphi * dphi * c.dt * c.cellvol;
}

// Gradient + mass potential of one level at one cell (faces stored at the
// lower node; edge ghosts mirror the stencil's Dirichlet handling).
double potential_cell(const System& sys, const GridIndexer& idx,
                      const std::vector<double>& phi, std::size_t f) {
    const FieldStencil& st = sys.stencil;
    const GridSpec& spec = sys.grid;
    const long fl = static_cast<long>(f);
    double u = 0.5 * st.m2c()[f] * sq(phi[f]);
    for (int i = 0; i < spec.d; ++i) {
        const double h = spec.h(i);
        const long np = idx.shift(fl, i, +1);
        const double pp = (np >= 0) ? phi[np] : 0.0;
        u += 0.5 * st.cface(i)[f] * sq((pp - phi[f]) / h);
        if (!spec.periodic()) {
            std::array<long, 3> id;
            idx.unflatten(fl, id);
            if (id[i] == 0)  // ghost face below the first node
                u += 0.5 * st.cnode(i)[f] * sq(phi[f] / h);
        }
    }
    return u * spec.cell_volume();
}

double level_potential(const System& sys, const GridIndexer& idx,
                       const std::vector<double>& phi, int threads) {
    return chunked_sum(phi.size(), threads, [&](std::size_t f) {
        return potential_cell(sys, idx, phi, f);
    });
}

}  // namespace

ActionBreakdown action(const RunHistory& h, const System& sys, int threads) {
    if (h.levels() < 2) throw AlignmentError("history needs at least two field levels");
    ActionBreakdown out;
    const GridIndexer idx(sys.grid);
    const KineticCtx kc{&sys.stencil, h.dt, sys.grid.cell_volume()};

    double kin = 0.0;
    for (int n = 0; n + 1 < h.levels(); ++n) {
        kin += chunked_sum(h.phi[n].size(), threads, [&](std::size_t f) {
            return kinetic_cell(kc, h.phi[n], h.phi[n + 1], f);
        });
    }
    double pot = 0.0;
    for (int n = 0; n < h.levels(); ++n) {
        const double w = (n == 0 || n == h.levels() - 1) ? 0.5 : 1.0;
        pot += w * h.dt * level_potential(sys, idx, h.phi[n], threads);
    }

    // suspension factor: unit lambda volume carried to the lattice exactly
    const int susp_nodes = h.has_particle() ? h.particle_nodes() : h.levels();
    const double susp_dlam = h.has_particle() ? h.dlam : h.dt;
    const auto d = suspension_weights(sys.measure, h.lambda0, susp_dlam, susp_nodes);
    double susp = 0.0;
    for (double x : d) susp += x;
    out.kg = (kin - pot) * susp;

    if (h.has_particle()) {
        if (!(h.dlam > 0.0)) throw AlignmentError("particle history has no lambda spacing");
        for (int k = 0; k + 1 < h.particle_nodes(); ++k) {
            const Vec mid = 0.5 * (h.z[k] + h.z[k + 1]);
            const Vec v = (h.z[k + 1] - h.z[k]) / h.dlam;
            const Mat g = pullback_metric(sys.G, sys.eta, mid);
            const double n2 = v.dot(g * v);
            if (!(n2 > 0.0)) throw GaugeError("worldline interval is not timelike");
            const double speed = std::sqrt(n2);
            out.particle_free += -h.dlam * sys.m * speed;
            if (sys.eps != 0.0) {
                const double phi_hat = sample_history(h, sys, mid).phi;
                out.interaction += -h.dlam * sys.eps * phi_hat * speed;
            }
        }
    }
    return out;
}

double suspension_equivalence(const RunHistory& h, const System& sys,
                              const LambdaMeasure& d1, const LambdaMeasure& d2) {
    d1.validate();
    d2.validate();
    System s1 = sys;
    s1.measure = d1;
    System s2 = sys;
    s2.measure = d2;
    return std::abs(action(h, s1).total() - action(h, s2).total());
}

// ---------------------------------------------------------------------------
// Variational oracle

namespace {

// Intervals whose hat weight can touch field level n. For histories aligned
// with the field clock these are {n-1, n}; the general scan is only needed
// (and only affordable) for short mis-aligned histories.
std::vector<int> intervals_touching_level(const RunHistory& h, const System& sys,
                                          int n) {
    std::vector<int> ks;
    if (!h.has_particle() || sys.eps == 0.0) return ks;
    const double tn = h.t0 + n * h.dt;
    const bool aligned = std::abs(h.dlam - h.dt) < 1e-12 * h.dt &&
                         sys.eta.time_preserving() &&
                         h.particle_nodes() == h.levels();
    if (aligned) {
        if (n - 1 >= 0) ks.push_back(n - 1);
        if (n + 1 < h.particle_nodes()) ks.push_back(n);
        return ks;
    }
    for (int k = 0; k + 1 < h.particle_nodes(); ++k) {
        const Vec mid = 0.5 * (h.z[k] + h.z[k + 1]);
        const double tau = sys.eta.backward(mid)[0];
        if (std::abs(tau - tn) < h.dt) ks.push_back(k);
    }
    return ks;
}

struct LocalFieldTerms {
    double kinetic = 0.0;
    double potential = 0.0;
    double interaction = 0.0;
    double total() const { return kinetic - potential + interaction; }
};

// Action terms that depend on phi^n at one cell, evaluated with that value
// replaced; every other term cancels exactly in the central difference.
LocalFieldTerms local_field_terms(const RunHistory& h, const System& sys,
                                  const GridIndexer& idx,
                                  const std::vector<int>& ks, int n, long flat,
                                  double value) {
    LocalFieldTerms out;
    const FieldStencil& st = sys.stencil;
    const GridSpec& spec = sys.grid;
    const double hV = spec.cell_volume();
    const double dt = h.dt;
    const std::size_t f = static_cast<std::size_t>(flat);

    for (int b : {n - 1, n}) {  // intervals (b, b+1)
        const double lo = (b == n) ? value : h.phi[b][f];
        const double hi = (b + 1 == n) ? value : h.phi[b + 1][f];
        const double dphi = (hi - lo) / dt;
        out.kinetic += 0.5 * st.c00()[f] * dphi * dphi * dt * hV;
    }

    // level-n potential pieces containing this cell (interior time weight dt)
    double u = 0.5 * st.m2c()[f] * sq(value);
    for (int i = 0; i < spec.d; ++i) {
        const double hx = spec.h(i);
        const long np = idx.shift(flat, i, +1);
        const long nm = idx.shift(flat, i, -1);
        const double pp = (np >= 0) ? h.phi[n][np] : 0.0;
        const double pm = (nm >= 0) ? h.phi[n][nm] : 0.0;
        u += 0.5 * st.cface(i)[f] * sq((pp - value) / hx);
        if (nm >= 0) {
            u += 0.5 * st.cface(i)[nm] * sq((value - pm) / hx);
        } else {
            u += 0.5 * st.cnode(i)[f] * sq(value / hx);
        }
    }
    out.potential = u * hV * dt;

    if (!ks.empty()) {
        const double tn = h.t0 + n * h.dt;
        for (int k : ks) {
            const Vec mid = 0.5 * (h.z[k] + h.z[k + 1]);
            const Vec v = (h.z[k + 1] - h.z[k]) / h.dlam;
            const Vec w = sys.eta.backward(mid);
            const double hat = std::max(0.0, 1.0 - std::abs(w[0] - tn) / h.dt);
            if (hat == 0.0) continue;
            KernelStamp stamp(spec, sys.kernel, w.tail(spec.d));
            const double wk = stamp.weight_at(flat);
            if (wk == 0.0) continue;
            const Mat g = pullback_metric(sys.G, sys.eta, mid);
            const double speed = std::sqrt(v.dot(g * v));
            out.interaction +=
                -h.dlam * sys.eps * speed * hat * wk * hV * value;
        }
    }
    return out;
}

}  // namespace

Residual variational_residual(const RunHistory& h, const System& sys,
                              VaryDirection dir, long time_index,
                              long cell_or_component, double fd_rel) {
    Residual r;
    if (dir == VaryDirection::field_node) {
        const int n = static_cast<int>(time_index);
        if (n <= 0 || n >= h.levels() - 1)
            throw IndexError("variations fix the temporal boundary levels");
        const long flat = cell_or_component;
        if (flat < 0 || flat >= static_cast<long>(h.phi[n].size()))
            throw IndexError("field cell index out of range");
        double phimax = 0.0;
        for (const auto& lvl : h.phi)
            for (double v : lvl) phimax = std::max(phimax, std::abs(v));
        const double delta = fd_rel * std::max(1e-6, phimax);
        const GridIndexer idx(sys.grid);
        const auto ks = intervals_touching_level(h, sys, n);
        const double v0 = h.phi[n][flat];
        const LocalFieldTerms p = local_field_terms(h, sys, idx, ks, n, flat, v0 + delta);
        const LocalFieldTerms m = local_field_terms(h, sys, idx, ks, n, flat, v0 - delta);
        const double dkin = (p.kinetic - m.kinetic) / (2.0 * delta);
        const double dpot = (p.potential - m.potential) / (2.0 * delta);
        const double dint = (p.interaction - m.interaction) / (2.0 * delta);
        r.abs = dkin - dpot + dint;
        r.scale = std::max({std::abs(dkin), std::abs(dpot), std::abs(dint)});
    } else {
        const int k = static_cast<int>(time_index);
        if (!h.has_particle()) throw IndexError("history has no particle");
        if (k <= 0 || k >= h.particle_nodes() - 1)
            throw IndexError("variations fix the worldline endpoints");
        const int a = static_cast<int>(cell_or_component);
        if (a < 0 || a >= sys.G.dim())
            throw IndexError("particle component out of range");
        const double delta = fd_rel * sys.grid.min_h();
        Vec zp = h.z[k], zm = h.z[k];
        zp[a] += delta;
        zm[a] -= delta;
        const double l1p = interval_lagrangian(h, sys, h.z[k - 1], zp);
        const double l1m = interval_lagrangian(h, sys, h.z[k - 1], zm);
        const double l2p = interval_lagrangian(h, sys, zp, h.z[k + 1]);
        const double l2m = interval_lagrangian(h, sys, zm, h.z[k + 1]);
        const double d1 = (l1p - l1m) / (2.0 * delta);
        const double d2 = (l2p - l2m) / (2.0 * delta);
        r.abs = d1 + d2;
        r.scale = std::max(std::abs(d1), std::abs(d2));
    }
    r.rel = (r.scale > 0.0) ? std::abs(r.abs) / r.scale : 0.0;
    return r;
}

OracleReport oracle_sweep(const RunHistory& h, const System& sys,
                          int max_records, int threads, double fd_rel) {
    OracleReport rep;
    const long cells = static_cast<long>(sys.grid.cells());
    const int N = h.levels() - 1;

    std::mutex mu;
    auto record = [&](const OracleRecord& rec) {
        std::lock_guard<std::mutex> lock(mu);
        rep.worst.push_back(rec);
        std::sort(rep.worst.begin(), rep.worst.end(),
                  [](const OracleRecord& x, const OracleRecord& y) {
                      return x.rel > y.rel;
                  });
        if (static_cast<int>(rep.worst.size()) > max_records)
            rep.worst.resize(max_records);
    };

    const long interior = static_cast<long>(std::max(0, N - 1)) * cells;
    parallel_for(interior, threads, [&](std::size_t lo, std::size_t hi) {
        double local_max = -1.0;
        OracleRecord local_worst{VaryDirection::field_node, 0, 0, 0.0};
        for (std::size_t i = lo; i < hi; ++i) {
            const int n = 1 + static_cast<int>(i / cells);
            const long flat = static_cast<long>(i % cells);
            const Residual r = variational_residual(
                h, sys, VaryDirection::field_node, n, flat, fd_rel);
            if (r.rel > local_max) {
                local_max = r.rel;
                local_worst = {VaryDirection::field_node, n, flat, r.rel};
            }
        }
        if (local_max >= 0.0) record(local_worst);
        std::lock_guard<std::mutex> lock(mu);
        rep.max_field_rel = std::max(rep.max_field_rel, local_max);
    });
    rep.field_nodes = interior;

    if (h.has_particle()) {
        const int dim = sys.G.dim();
        for (int k = 1; k + 1 < h.particle_nodes(); ++k) {
            for (int a = 0; a < dim; ++a) {
                const Residual r = variational_residual(
                    h, sys, VaryDirection::particle_node, k, a, fd_rel);
                rep.max_particle_rel = std::max(rep.max_particle_rel, r.rel);
                if (r.rel > 1e-9)
                    record({VaryDirection::particle_node, k, a, r.rel});
                ++rep.particle_nodes;
            }
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// 5-dimensional quadrature against the three MesonAction terms

FiveDCompare action5d_compare(const RunHistory& h, const System& sys) {
    FiveDCompare out;
    const ActionBreakdown base = action(h, sys);
    const int N = h.levels() - 1;

    // KG block: sum_k d_k S_kg4 against S_kg4 * (sum d_k)
    const int susp_nodes = h.has_particle() ? h.particle_nodes() : h.levels();
    const double susp_dlam = h.has_particle() ? h.dlam : h.dt;
    const auto d = suspension_weights(sys.measure, h.lambda0, susp_dlam, susp_nodes);
    const double kg4 = base.kg;  // suspension factor is exactly 1
    double five_kg = 0.0;
    for (double w : d) five_kg += w * kg4;
    out.kg_term = kg4;

    double five_part = 0.0;
    if (h.has_particle()) {
        const DeltaKernel tkern =
            DeltaKernel::make(KernelShape::bspline_quadratic, 3.0, h.dt);
        const double margin = tkern.support_radius() + 0.5 * h.dt;
        for (int k = 0; k + 1 < h.particle_nodes(); ++k) {
            const Vec mid = 0.5 * (h.z[k] + h.z[k + 1]);
            const Vec v = (h.z[k + 1] - h.z[k]) / h.dlam;
            const Vec w = sys.eta.backward(mid);
            const double tau = w[0];
            if (tau < h.t0 + margin || tau > h.t0 + N * h.dt - margin)
                continue;  // time kernel needs full support in the window
            const Mat g = pullback_metric(sys.G, sys.eta, mid);
            const double speed = std::sqrt(v.dot(g * v));

            KernelStamp stamp(sys.grid, sys.kernel, w.tail(sys.grid.d));
            double interp_sum = 0.0;
            for (int lvl = 0; lvl <= N; ++lvl) {
                const double kt = tkern.value1d(h.t0 + lvl * h.dt - tau);
                if (kt == 0.0) continue;
                double val;
                Vec grad;
                stamp.interpolate(h.phi[lvl], val, grad);
                // 5d lattice term grouped per (interval, level)
                five_part += -h.dlam * h.dt * kt * (sys.m + sys.eps * val) * speed;
                interp_sum += h.dt * kt * val;
            }
            out.particle_term += -h.dlam * sys.m * speed;
            out.interaction_term += -h.dlam * sys.eps * interp_sum * speed;
        }
    }
    out.five_d_total = five_kg + five_part;
    return out;
}

}  // namespace kgp
