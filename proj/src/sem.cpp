#include "kgp/sem.hpp"

#include <algorithm>
#include <cmath>

namespace kgp {

TensorGrid TensorGrid::zero(const GridSpec& spec, int dim, double t) {
    TensorGrid g;
    g.t = t;
    g.dim = dim;
    g.comp.assign(static_cast<std::size_t>(dim) * dim,
                  std::vector<double>(spec.cells(), 0.0));
    return g;
}

TensorGrid kg_sem(const FieldState& s, const System& sys, int threads) {
    const GridSpec& spec = sys.grid;
    const int dim = spec.d + 1;
    TensorGrid out = TensorGrid::zero(spec, dim, s.t);
    const GridIndexer idx(spec);

    parallel_for(spec.cells(), threads, [&](std::size_t lo, std::size_t hi) {
        Vec x = Vec::Zero(dim);
        Vec dphi(dim);
        std::array<long, 3> id;
        for (std::size_t f = lo; f < hi; ++f) {
            const long fl = static_cast<long>(f);
            idx.unflatten(fl, id);
            for (int i = 0; i < spec.d; ++i)
                x[i + 1] = spec.node_pos(i, static_cast<int>(id[i]));
            dphi[0] = s.pi[f];
            for (int i = 0; i < spec.d; ++i) {
                const long np = idx.shift(fl, i, +1);
                const long nm = idx.shift(fl, i, -1);
                const double pp = (np >= 0) ? s.phi[np] : 0.0;
                const double pm = (nm >= 0) ? s.phi[nm] : 0.0;
                dphi[i + 1] = (pp - pm) / (2.0 * spec.h(i));
            }
            const Mat gi = sys.G.inverse(x);
            const double vol = sys.G.vol_density(x);
            const Vec u = gi * dphi;
            const double quad = dphi.dot(u);
            const double trace = quad - sq(sys.M * s.phi[f]);
            for (int mu = 0; mu < dim; ++mu)
                for (int nu = 0; nu < dim; ++nu)
                    out.at(mu, nu)[f] =
                        (u[mu] * u[nu] - 0.5 * gi(mu, nu) * trace) * vol;
        }
    });
    return out;
}

TensorGrid minkowski_theta(const std::vector<IntervalSample>& intervals,
                           const System& sys, double t, double dt) {
    const GridSpec& spec = sys.grid;
    const int dim = spec.d + 1;
    TensorGrid out = TensorGrid::zero(spec, dim, t);

    // fiber outer-product deposit
    TensorGrid raw = TensorGrid::zero(spec, dim, t);
    bool touched = false;
    bool bracketed = false;
    for (const IntervalSample& s : intervals) {
        const double cw = collapse_weight(s, sys.eta, t, dt);
        if (cw == 0.0) continue;
        bracketed = true;
        const Vec w = sys.eta.backward(s.z_mid);
        const Mat g = pullback_metric(sys.G, sys.eta, s.z_mid);
        const double n2 = s.v.dot(g * s.v);
        if (!(n2 > 0.0)) throw GaugeError("worldline interval is not timelike");
        const double norm = std::sqrt(n2);
        KernelStamp stamp(spec, sys.kernel, w.tail(spec.d));
        for (int a = 0; a < dim; ++a)
            for (int b = a; b < dim; ++b)
                stamp.add(raw.at(a, b), cw * s.v[a] * s.v[b] / norm);
        touched = true;
    }
    if (!intervals.empty() && !bracketed)
        throw WindowError("worldline history does not bracket the requested time");
    if (!touched) return out;
    for (int a = 0; a < dim; ++a)
        for (int b = 0; b < a; ++b) raw.at(a, b) = raw.at(b, a);

    if (sys.eta.is_identity()) {
        out.comp = raw.comp;
        return out;
    }
    const GridIndexer idx(spec);
    std::array<long, 3> id;
    Vec x = Vec::Zero(dim);
    for (std::size_t f = 0; f < spec.cells(); ++f) {
        bool any = false;
        for (int a = 0; a < dim && !any; ++a)
            for (int b = 0; b < dim && !any; ++b)
                if (raw.at(a, b)[f] != 0.0) any = true;
        if (!any) continue;
        idx.unflatten(static_cast<long>(f), id);
        x[0] = t;
        for (int i = 0; i < spec.d; ++i)
            x[i + 1] = spec.node_pos(i, static_cast<int>(id[i]));
        const Mat kappa = sys.eta.inv_jacobian(x);
        Mat r(dim, dim);
        for (int a = 0; a < dim; ++a)
            for (int b = 0; b < dim; ++b) r(a, b) = raw.at(a, b)[f];
        const Mat th = kappa * r * kappa.transpose();
        for (int mu = 0; mu < dim; ++mu)
            for (int nu = 0; nu < dim; ++nu) out.at(mu, nu)[f] = th(mu, nu);
    }
    return out;
}

SemGrid total_sem(const FieldState& s,
                  const std::vector<IntervalSample>& intervals,
                  const System& sys, double dt, int threads) {
    SemGrid out;
    out.t = s.t;
    out.t_can = kg_sem(s, sys, threads);
    out.theta = minkowski_theta(intervals, sys, s.t, dt);
    const int dim = sys.grid.d + 1;
    out.T = TensorGrid::zero(sys.grid, dim, s.t);
    for (int mu = 0; mu < dim; ++mu) {
        for (int nu = 0; nu < dim; ++nu) {
            auto& tt = out.T.at(mu, nu);
            const auto& tc = out.t_can.at(mu, nu);
            const auto& th = out.theta.at(mu, nu);
            for (std::size_t f = 0; f < tt.size(); ++f)
                tt[f] = tc[f] + (sys.m + sys.eps * s.phi[f]) * th[f];
        }
    }
    return out;
}

DivergenceReport sem_divergence(const SemGrid& prev, const SemGrid& mid,
                                const SemGrid& next, const GridSpec& spec) {
    const int dim = spec.d + 1;
    const double dt2 = next.t - prev.t;
    if (!(dt2 > 0.0))
        throw WindowError("divergence needs three snapshots at increasing times");
    const GridIndexer idx(spec);
    DivergenceReport rep;
    rep.D.assign(dim, std::vector<double>(spec.cells(), 0.0));

    double d2 = 0.0, t2 = 0.0, dinf = 0.0, tinf = 0.0;
    for (int mu = 0; mu < dim; ++mu) {
        const auto& Tp = prev.T.at(mu, 0);
        const auto& Tn = next.T.at(mu, 0);
        for (std::size_t f = 0; f < spec.cells(); ++f) {
            const long fl = static_cast<long>(f);
            double div = (Tn[f] - Tp[f]) / dt2;
            for (int i = 0; i < spec.d; ++i) {
                const auto& Ti = mid.T.at(mu, i + 1);
                const long np = idx.shift(fl, i, +1);
                const long nm = idx.shift(fl, i, -1);
                const double vp = (np >= 0) ? Ti[np] : 0.0;
                const double vm = (nm >= 0) ? Ti[nm] : 0.0;
                div += (vp - vm) / (2.0 * spec.h(i));
            }
            rep.D[mu][f] = div;
            d2 += div * div;
            dinf = std::max(dinf, std::abs(div));
        }
        for (int nu = 0; nu < dim; ++nu) {
            const auto& T = mid.T.at(mu, nu);
            for (double v : T) {
                t2 += v * v;
                tinf = std::max(tinf, std::abs(v));
            }
        }
    }
    const double vol = spec.cell_volume();
    rep.l2 = std::sqrt(d2 * vol);
    rep.linf = dinf;
    const double tl2 = std::sqrt(t2 * vol);
    rep.l2_normalized = (tl2 > 0.0) ? rep.l2 / tl2 : 0.0;
    rep.linf_normalized = (tinf > 0.0) ? rep.linf / tinf : 0.0;
    return rep;
}

SemAux sem_aux(const RunHistory& h, const System& sys, int threads) {
    SemAux aux;
    System free = sys;
    free.eps = 0.0;  // KG term only; shared quadrature path
    const ActionBreakdown a = action(h, free, threads);
    aux.kg_window_integral = 2.0 * a.kg;
    // lambda quadrature of T^4_4 = 1/2 Q sqrt(K): with unit-volume suspension
    // weights this is exactly the KG action again.
    const int nodes = h.has_particle() ? h.particle_nodes() : h.levels();
    const double dlam = h.has_particle() ? h.dlam : h.dt;
    const auto w = suspension_weights(sys.measure, h.lambda0, dlam, nodes);
    double s = 0.0;
    for (double x : w) s += x;
    aux.t44_lambda_integral = 0.5 * aux.kg_window_integral * s;
    aux.T4nu = 0.0;
    aux.Tmu4 = 0.0;
    return aux;
}

Vec sem_momentum(const SemGrid& sem, const GridSpec& spec, int threads) {
    const int dim = spec.d + 1;
    Vec P(dim);
    for (int mu = 0; mu < dim; ++mu) {
        const auto& T = sem.T.at(mu, 0);
        P[mu] = chunked_sum(T.size(), threads,
                            [&](std::size_t f) { return T[f]; }) *
                spec.cell_volume();
    }
    return P;
}

ConservationReport conservation_audit(const std::vector<double>& times,
                                      const std::vector<Vec>& momenta,
                                      bool periodic) {
    if (!periodic)
        throw PhysicsError("conservation audit requires a periodic run "
                           "(boundary flux unaccounted)");
    if (times.size() != momenta.size() || momenta.size() < 2)
        throw WindowError("conservation audit needs at least two samples");
    const Vec& P0 = momenta.front();
    const int dim = static_cast<int>(P0.size());
    double pinf = 0.0;
    for (int mu = 0; mu < dim; ++mu) pinf = std::max(pinf, std::abs(P0[mu]));
    ConservationReport rep;
    rep.drift = Vec::Zero(dim);
    for (const Vec& P : momenta) {
        for (int mu = 0; mu < dim; ++mu) {
            const double scale = std::max(std::abs(P0[mu]), pinf);
            if (scale == 0.0) continue;
            rep.drift[mu] =
                std::max(rep.drift[mu], std::abs(P[mu] - P0[mu]) / scale);
        }
    }
    rep.max_drift = rep.drift.maxCoeff();
    return rep;
}

}  // namespace kgp
