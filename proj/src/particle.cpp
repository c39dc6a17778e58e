#include "kgp/particle.hpp"

#include <cmath>

namespace kgp {

namespace {

double timelike_norm_or_throw(const Mat& g, const Vec& v) {
    const double n2 = v.dot(g * v);
    if (!(n2 > 0.0)) throw GaugeError("velocity is not timelike");
    return std::sqrt(n2);
}

}  // namespace

std::vector<Mat> pullback_metric_derivs(const Metric& G,
                                        const CovarianceMap& eta, const Vec& z,
                                        double fd_step) {
    const int dim = G.dim();
    if (eta.is_identity()) return G.derivs(z);
    std::vector<Mat> d(dim);
    for (int a = 0; a < dim; ++a) {
        const double step = fd_step * std::max(1.0, std::abs(z[a]));
        Vec zp = z, zm = z;
        zp[a] += step;
        zm[a] -= step;
        d[a] = (pullback_metric(G, eta, zp) - pullback_metric(G, eta, zm)) /
               (2.0 * step);
    }
    return d;
}

Vec particle_force(const ParticleState& p, const FieldSample& field_sample,
                   const Metric& G, const CovarianceMap& eta, double fd_step) {
    const int dim = G.dim();
    const Vec w = eta.backward(p.z);
    const Mat kappa = eta.inv_jacobian(w);
    const Mat g = pullback_metric(G, eta, p.z);
    const double norm = timelike_norm_or_throw(g, p.zdot);

    Vec dphi_base(dim);
    dphi_base[0] = field_sample.phi_t;
    for (int i = 1; i < dim; ++i) dphi_base[i] = field_sample.grad[i - 1];
    const Vec dphi_fiber = kappa.transpose() * dphi_base;

    const double meff = p.m + p.eps * field_sample.phi;
    const std::vector<Mat> dg = pullback_metric_derivs(G, eta, p.z, fd_step);
    Vec F(dim);
    for (int a = 0; a < dim; ++a) {
        F[a] = p.eps * dphi_fiber[a] * norm +
               meff * p.zdot.dot(dg[a] * p.zdot) / (2.0 * norm);
    }
    return F;
}

ParticleState reparameterize(const ParticleState& p, Gauge target,
                             const Metric& G, const CovarianceMap& eta) {
    const Mat g = pullback_metric(G, eta, p.z);
    const double norm = timelike_norm_or_throw(g, p.zdot);
    ParticleState out = p;
    out.gauge = target;
    if (target == Gauge::proper_time) {
        out.zdot = p.zdot / norm;
    } else {
        if (!(p.zdot[0] > 0.0))
            throw GaugeError("coordinate-time gauge requires zdot^0 > 0");
        out.zdot = p.zdot / p.zdot[0];
    }
    return out;
}

// ---------------------------------------------------------------------------
// ParticleStepper

ParticleStepper::ParticleStepper(ParticleState init, const Metric& G,
                                 const CovarianceMap& eta, double fd_step,
                                 double fp_tol, int fp_max_iter)
    : G_(&G),
      eta_(&eta),
      p_(std::move(init)),
      fd_step_(fd_step),
      fp_tol_(fp_tol),
      fp_max_iter_(fp_max_iter) {
    z_ = p_.z;
    v_ = p_.zdot;
    lambda_ = p_.lambda;
    const Mat g = pullback_metric(G, eta, z_);
    timelike_norm_or_throw(g, v_);
}

void ParticleStepper::eval_midpoint(const Vec& mid, const Vec& v,
                                    const FieldSampler& sampler, Mat& g,
                                    Mat& ginv, double& meff, double& norm,
                                    Vec& force) const {
    const int dim = G_->dim();
    g = pullback_metric(*G_, *eta_, mid);
    ginv = g.inverse();
    norm = timelike_norm_or_throw(g, v);
    const EffectiveField ef = sampler(mid);
    meff = p_.m + p_.eps * ef.phi;
    if (!(meff > 0.0)) throw PhysicsError("effective mass m + eps phi became nonpositive");

    const Vec w = eta_->backward(mid);
    const Vec dphi_fiber = eta_->inv_jacobian(w).transpose() * ef.dphi_base;
    const std::vector<Mat> dg = pullback_metric_derivs(*G_, *eta_, mid, fd_step_);
    force.resize(dim);
    for (int a = 0; a < dim; ++a) {
        force[a] = p_.eps * dphi_fiber[a] * norm +
                   meff * v.dot(dg[a] * v) / (2.0 * norm);
    }
}

void ParticleStepper::prime(double dlam, const FieldSampler& sampler) {
    // The initial zdot is taken as the velocity of the first interval; the
    // as-built momentum and force at its midpoint seed the recurrence.
    const Vec mid = z_ + 0.5 * dlam * v_;
    Mat g, ginv;
    double meff, norm;
    eval_midpoint(mid, v_, sampler, g, ginv, meff, norm, F_);
    pi_ = meff * (g * v_) / norm;
    meff_ = meff;
    speed_ = norm;
    primed_ = true;
}

void ParticleStepper::step(double dlam, const FieldSampler& sampler) {
    if (!primed_) prime(dlam, sampler);

    Vec v = v_;
    Mat g, ginv;
    double meff = meff_, norm = speed_;
    Vec F;
    Vec pi_hat = pi_;
    int it = 0;
    for (; it < fp_max_iter_; ++it) {
        const Vec mid = z_ + 0.5 * dlam * v;
        eval_midpoint(mid, v, sampler, g, ginv, meff, norm, F);
        const Vec pi_target = pi_ + 0.5 * dlam * (F_ + F);
        const double shell = std::sqrt(pi_target.dot(ginv * pi_target));
        if (!(shell > 0.0)) throw GaugeError("momentum left the timelike cone");
        shell_defect_ = std::abs(shell / meff - 1.0);
        if (shell_defect_ > 1e-4)
            throw GaugeError("mass-shell constraint violated beyond 1e-4 before projection");
        pi_hat = pi_target * (meff / shell);
        Vec u = ginv * pi_hat;
        Vec v_new;
        if (p_.gauge == Gauge::proper_time) {
            v_new = u / meff;  // |u|_g = meff after projection
        } else {
            if (!(u[0] > 0.0))
                throw GaugeError("coordinate-time gauge requires forward timelike momentum");
            v_new = u / u[0];
        }
        const double delta = (v_new - v).norm();
        v = v_new;
        if (delta <= fp_tol_ * (1.0 + v.norm())) break;
    }

    // Commit with as-built quantities so the stored momentum equals the
    // discrete-Lagrangian derivative along the accepted polygon.
    const Vec mid = z_ + 0.5 * dlam * v;
    eval_midpoint(mid, v, sampler, g, ginv, meff, norm, F);
    z_ += dlam * v;
    v_ = v;
    pi_ = meff * (g * v) / norm;
    F_ = F;
    meff_ = meff;
    speed_ = norm;
    lambda_ += dlam;
}

ParticleState ParticleStepper::state() const {
    ParticleState s = p_;
    s.z = z_;
    s.zdot = v_;
    s.lambda = lambda_;
    return s;
}

// ---------------------------------------------------------------------------

FieldSampler frozen_field_sampler(const FieldState& field,
                                  const DeltaKernel& kernel,
                                  const GridSpec& spec,
                                  const CovarianceMap& eta) {
    return [&field, &kernel, &spec, &eta](const Vec& z) {
        const Vec w = eta.backward(z);
        const FieldSample fs =
            interpolate_field(field, w.tail(w.size() - 1), kernel, spec);
        EffectiveField ef;
        ef.phi = fs.phi;
        ef.dphi_base = Vec::Zero(z.size());
        ef.dphi_base[0] = fs.phi_t;
        for (int i = 1; i < z.size(); ++i) ef.dphi_base[i] = fs.grad[i - 1];
        return ef;
    };
}

FieldSampler zero_field_sampler(int dim) {
    return [dim](const Vec&) {
        EffectiveField ef;
        ef.dphi_base = Vec::Zero(dim);
        return ef;
    };
}

ParticleState step_particle(const ParticleState& p, const FieldState& field,
                            double dt_lambda, const Metric& G,
                            const CovarianceMap& eta, const DeltaKernel& kernel,
                            const GridSpec& spec) {
    if (!spec.periodic()) {
        const Vec w = eta.backward(p.z);
        for (int i = 0; i < spec.d; ++i) {
            const double xi = w[i + 1];
            if (xi < spec.origin[i] || xi > spec.origin[i] + spec.extent[i])
                throw EscapeError("particle left the grid");
        }
    }
    ParticleStepper stepper(p, G, eta);
    stepper.step(dt_lambda, frozen_field_sampler(field, kernel, spec, eta));
    return stepper.state();
}

}  // namespace kgp
