#ifndef KGP_PARTICLE_STATE_HPP
#define KGP_PARTICLE_STATE_HPP

#include "kgp/common.hpp"

namespace kgp {

enum class Gauge { proper_time, coordinate_time };

// Worldline state in fiber coordinates z^a. zdot = dz/dlambda.
struct ParticleState {
    Vec z;
    Vec zdot;
    double lambda = 0.0;
    Gauge gauge = Gauge::coordinate_time;
    double m = 1.0;    // rest mass
    double eps = 0.0;  // mesic charge
};

}  // namespace kgp

#endif
