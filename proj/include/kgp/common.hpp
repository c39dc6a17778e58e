#ifndef KGP_COMMON_HPP
#define KGP_COMMON_HPP

#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

namespace kgp {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Error hierarchy. Physics errors map to CLI exit code 1, config errors to 2.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ConfigError : Error {
    using Error::Error;
};
struct PhysicsError : Error {
    using Error::Error;
};
struct SingularMapError : PhysicsError {
    using PhysicsError::PhysicsError;
};
struct GaugeError : PhysicsError {
    using PhysicsError::PhysicsError;
};
struct StabilityError : PhysicsError {
    using PhysicsError::PhysicsError;
};
struct DivergenceError : PhysicsError {
    using PhysicsError::PhysicsError;
};
struct EscapeError : PhysicsError {
    using PhysicsError::PhysicsError;
};
struct BoundaryError : PhysicsError {
    using PhysicsError::PhysicsError;
};
struct NormalizationError : PhysicsError {
    using PhysicsError::PhysicsError;
};
struct AlignmentError : PhysicsError {
    using PhysicsError::PhysicsError;
};
struct WindowError : PhysicsError {
    using PhysicsError::PhysicsError;
};
struct DomainError : PhysicsError {
    using PhysicsError::PhysicsError;
};
struct IndexError : Error {
    using Error::Error;
};

inline double sq(double x) { return x * x; }

// Deterministic pairwise (cascade) summation. The reduction tree depends only
// on the element count, so results are identical for any thread count.
double pairwise_sum(std::span<const double> v);

// Evaluates f(i) for i in [0, n), accumulating into a fixed number of chunks
// summed pairwise. Chunk layout is independent of the thread count.
double chunked_sum(std::size_t n, int threads,
                   const std::function<double(std::size_t)>& f);

// Static partition of [0, n) over worker threads.
void parallel_for(std::size_t n, int threads,
                  const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace kgp

#endif
