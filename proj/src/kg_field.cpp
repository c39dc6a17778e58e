#include "kgp/kg_field.hpp"

#include <algorithm>
#include <cmath>

namespace kgp {

FieldStencil FieldStencil::build(const GridSpec& spec, const Metric& G, double M) {
    if (G.dim() != spec.d + 1)
        throw ConfigError("metric dimension does not match grid");
    FieldStencil st;
    st.spec_ = spec;
    st.idx_ = GridIndexer(spec);
    st.M_ = M;
    const std::size_t N = spec.cells();
    st.vol_.resize(N);
    st.c00_.resize(N);
    st.m2c_.resize(N);
    for (int i = 0; i < spec.d; ++i) st.cface_[i].resize(N);
    std::array<std::vector<double>, 3> cnode;
    for (int i = 0; i < spec.d; ++i) cnode[i].resize(N);

    std::array<long, 3> id;
    Vec x = Vec::Zero(spec.d + 1);
    double cmax = 0.0;
    for (std::size_t f = 0; f < N; ++f) {
        st.idx_.unflatten(static_cast<long>(f), id);
        for (int i = 0; i < spec.d; ++i) x[i + 1] = spec.node_pos(i, static_cast<int>(id[i]));
        const Mat g = G.components(x);
        const double vol = G.vol_density(x);
        st.vol_[f] = vol;
        st.c00_[f] = vol / g(0, 0);
        st.m2c_[f] = M * M * vol;
        for (int i = 0; i < spec.d; ++i) {
            cnode[i][f] = vol / (-g(i + 1, i + 1));
            cmax = std::max(cmax, std::sqrt(g(0, 0) / (-g(i + 1, i + 1))));
        }
    }
    st.cmax_ = cmax;
    st.cnode_ = cnode;
    for (int i = 0; i < spec.d; ++i) {
        for (std::size_t f = 0; f < N; ++f) {
            const long nb = st.idx_.shift(static_cast<long>(f), i, +1);
            st.cface_[i][f] =
                (nb >= 0) ? 0.5 * (cnode[i][f] + cnode[i][nb]) : cnode[i][f];
        }
    }

    if (spec.boundary == BoundaryKind::sponge) {
        st.sponge_.resize(N, 0.0);
        for (std::size_t f = 0; f < N; ++f) {
            st.idx_.unflatten(static_cast<long>(f), id);
            double q = 0.0;
            for (int i = 0; i < spec.d; ++i) {
                const double xi = spec.node_pos(i, static_cast<int>(id[i]));
                const double dlo = xi - spec.origin[i];
                const double dhi = spec.origin[i] + spec.extent[i] - xi;
                const double dist = std::min(dlo, dhi);
                if (dist < spec.sponge_width)
                    q = std::max(q, 1.0 - dist / spec.sponge_width);
            }
            st.sponge_[f] = spec.sponge_damping * q * q;
        }
    }
    return st;
}

double FieldStencil::div_at(const std::vector<double>& phi, long flat) const {
    const double pc = phi[flat];
    double acc = 0.0;
    for (int i = 0; i < spec_.d; ++i) {
        const double h2 = sq(spec_.h(i));
        const long np = idx_.shift(flat, i, +1);
        const long nm = idx_.shift(flat, i, -1);
        const double pp = (np >= 0) ? phi[np] : 0.0;  // Dirichlet ghost
        const double pm = (nm >= 0) ? phi[nm] : 0.0;
        const double cp = cface_[i][flat];
        const double cm = (nm >= 0) ? cface_[i][nm] : cnode_[i][flat];
        acc += (cp * (pp - pc) - cm * (pc - pm)) / h2;
    }
    return acc;
}

void FieldStencil::accel(const std::vector<double>& phi,
                         const std::vector<double>* rho,
                         std::vector<double>& out, int threads) const {
    out.resize(phi.size());
    parallel_for(phi.size(), threads, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t f = lo; f < hi; ++f) {
            double a = div_at(phi, static_cast<long>(f)) - m2c_[f] * phi[f];
            if (rho) a -= vol_[f] * (*rho)[f];
            out[f] = a / c00_[f];
        }
    });
}

double FieldStencil::static_residual(const std::vector<double>& phi,
                                     const std::vector<double>& rho) const {
    double r = 0.0;
    for (std::size_t f = 0; f < phi.size(); ++f) {
        const double res = div_at(phi, static_cast<long>(f)) - m2c_[f] * phi[f] -
                           vol_[f] * rho[f];
        r = std::max(r, std::abs(res));
    }
    return r;
}

double FieldStencil::diag_at(long flat) const {
    double diag = -m2c_[flat];
    for (int i = 0; i < spec_.d; ++i) {
        const double h2 = sq(spec_.h(i));
        const long nm = idx_.shift(flat, i, -1);
        const double cp = cface_[i][flat];
        const double cm = (nm >= 0) ? cface_[i][nm] : cnode_[i][flat];
        diag -= (cp + cm) / h2;
    }
    return diag;
}

void FieldStencil::jacobi_sweep(std::vector<double>& phi,
                                const std::vector<double>& rho, double omega,
                                int threads) const {
    std::vector<double> next(phi.size());
    parallel_for(phi.size(), threads, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t f = lo; f < hi; ++f) {
            const long fl = static_cast<long>(f);
            const double res =
                div_at(phi, fl) - m2c_[f] * phi[f] - vol_[f] * rho[f];
            next[f] = phi[f] - omega * res / diag_at(fl);
        }
    });
    phi.swap(next);
}

double FieldStencil::max_stable_dt(double cfl) const {
    return cfl * spec_.min_h() / (std::sqrt(static_cast<double>(spec_.d)) * cmax_);
}

void FieldStencil::apply_sponge(FieldState& s, double dt) const {
    if (sponge_.empty()) return;
    for (std::size_t f = 0; f < s.pi.size(); ++f)
        if (sponge_[f] > 0.0) s.pi[f] *= std::exp(-sponge_[f] * dt);
}

FieldState step_field(const FieldState& s, const SourceGrid& src, double dt,
                      const FieldStencil& stencil, double cfl, int threads) {
    if (cfl > 0.9) throw ConfigError("CFL factor must be <= 0.9");
    if (dt > stencil.max_stable_dt(cfl) * (1.0 + 1e-12))
        throw StabilityError("dt violates the CFL stability bound");
    if (s.phi.size() != stencil.spec().cells() ||
        src.rho.size() != stencil.spec().cells())
        throw ConfigError("state/source size does not match grid");

    FieldState out = s;
    std::vector<double> acc;
    stencil.accel(out.phi, &src.rho, acc, threads);
    for (std::size_t f = 0; f < out.pi.size(); ++f) out.pi[f] += 0.5 * dt * acc[f];
    for (std::size_t f = 0; f < out.phi.size(); ++f) out.phi[f] += dt * out.pi[f];
    stencil.accel(out.phi, &src.rho, acc, threads);
    for (std::size_t f = 0; f < out.pi.size(); ++f) out.pi[f] += 0.5 * dt * acc[f];
    out.t = s.t + dt;
    stencil.apply_sponge(out, dt);
    out.check_finite();
    return out;
}

namespace {

Vec spatial_part(const Vec& event) { return event.tail(event.size() - 1); }

double timelike_norm(const Mat& g, const Vec& v) {
    const double n2 = v.dot(g * v);
    if (!(n2 > 0.0))
        throw GaugeError("particle velocity is not timelike under the pulled-back metric");
    return std::sqrt(n2);
}

}  // namespace

SourceGrid deposit_source(const ParticleState& p, const CovarianceMap& eta,
                          const DeltaKernel& kernel, const GridSpec& spec,
                          const Metric& G) {
    SourceGrid out;
    out.rho.assign(spec.cells(), 0.0);
    if (p.eps == 0.0) return out;

    const Vec w = eta.backward(p.z);
    const Vec wdot = eta.inv_jacobian(w) * p.zdot;
    if (!(std::abs(wdot[0]) > 0.0))
        throw GaugeError("worldline does not advance in base time");
    const Mat g = pullback_metric(G, eta, p.z);
    const double speed = timelike_norm(g, p.zdot);
    const double strength = p.eps * speed / std::abs(wdot[0]);

    if (!spec.periodic()) {
        for (int i = 0; i < spec.d; ++i) {
            const double xi = w[i + 1];
            if (xi < spec.origin[i] || xi > spec.origin[i] + spec.extent[i])
                throw EscapeError("particle left the grid");
        }
    }
    GridIndexer idx(spec);
    Vec x = Vec::Zero(spec.d + 1);
    try {
        KernelStamp stamp(spec, kernel, spatial_part(w));
        std::vector<double> raw(spec.cells(), 0.0);
        stamp.add(raw, strength);
        std::array<long, 3> id;
        for (std::size_t f = 0; f < raw.size(); ++f) {
            if (raw[f] == 0.0) continue;
            idx.unflatten(static_cast<long>(f), id);
            for (int i = 0; i < spec.d; ++i)
                x[i + 1] = spec.node_pos(i, static_cast<int>(id[i]));
            out.rho[f] = raw[f] / G.vol_density(x);
        }
    } catch (const BoundaryError& e) {
        throw EscapeError(e.what());
    }
    return out;
}

FieldSample interpolate_field(const FieldState& s, const Vec& x_spatial,
                              const DeltaKernel& kernel, const GridSpec& spec) {
    KernelStamp stamp(spec, kernel, x_spatial);
    FieldSample out;
    stamp.interpolate(s.phi, out.phi, out.grad);
    Vec unused;
    stamp.interpolate(s.pi, out.phi_t, unused);
    return out;
}

double field_energy(const FieldState& s, const FieldStencil& stencil,
                    int threads) {
    const GridSpec& spec = stencil.spec();
    const GridIndexer idx(spec);
    return chunked_sum(spec.cells(), threads, [&](std::size_t f) {
        const long fl = static_cast<long>(f);
        double grad2 = 0.0;
        for (int i = 0; i < spec.d; ++i) {
            const long np = idx.shift(fl, i, +1);
            const long nm = idx.shift(fl, i, -1);
            const double pp = (np >= 0) ? s.phi[np] : 0.0;
            const double pm = (nm >= 0) ? s.phi[nm] : 0.0;
            const double di = (pp - pm) / (2.0 * spec.h(i));
            grad2 += stencil.cnode(i)[f] * di * di;
        }
        const double c00 = stencil.c00()[f];
        const double t00 = 0.5 * (c00 / stencil.vol()[f]) *
                           (c00 * sq(s.pi[f]) + grad2 + stencil.m2c()[f] * sq(s.phi[f]));
        return t00 * spec.cell_volume();
    });
}

double collapse_weight(const IntervalSample& s, const CovarianceMap& eta,
                       double t, double dt) {
    const double w0 = eta.backward(s.z_mid)[0];
    const double u = std::abs(w0 - t) / dt;
    if (u >= 1.0) return 0.0;
    return s.dlam * (1.0 - u) / dt;
}

SourceGrid deposit_interval_source(const std::vector<IntervalSample>& intervals,
                                   double eps, const CovarianceMap& eta,
                                   const DeltaKernel& kernel,
                                   const GridSpec& spec, const Metric& G,
                                   double t, double dt) {
    SourceGrid out;
    out.t = t;
    out.rho.assign(spec.cells(), 0.0);
    if (eps == 0.0) return out;
    std::vector<double> raw(spec.cells(), 0.0);
    bool touched = false;
    for (const IntervalSample& s : intervals) {
        const double cw = collapse_weight(s, eta, t, dt);
        if (cw == 0.0) continue;
        const Vec w = eta.backward(s.z_mid);
        const Mat g = pullback_metric(G, eta, s.z_mid);
        const double speed = timelike_norm(g, s.v);
        try {
            KernelStamp stamp(spec, kernel, spatial_part(w));
            stamp.add(raw, eps * cw * speed);
            touched = true;
        } catch (const BoundaryError& e) {
            throw EscapeError(e.what());
        }
    }
    if (!touched) return out;
    GridIndexer idx(spec);
    std::array<long, 3> id;
    Vec x = Vec::Zero(spec.d + 1);
    for (std::size_t f = 0; f < raw.size(); ++f) {
        if (raw[f] == 0.0) continue;
        idx.unflatten(static_cast<long>(f), id);
        for (int i = 0; i < spec.d; ++i)
            x[i + 1] = spec.node_pos(i, static_cast<int>(id[i]));
        out.rho[f] = raw[f] / G.vol_density(x);
    }
    return out;
}

}  // namespace kgp
