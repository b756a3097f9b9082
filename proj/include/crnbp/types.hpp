#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>

namespace crnbp {

template <typename Scalar>
using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Mat3 = Eigen::Matrix<Scalar, 3, 3>;

/// Synodic position and velocity (x, y, z, vx, vy, vz), canonical units.
template <typename Scalar>
using State6 = Eigen::Matrix<Scalar, 6, 1>;
template <typename Scalar>
using Mat6 = Eigen::Matrix<Scalar, 6, 6>;

using Vec3d = Vec3<double>;
using Mat3d = Mat3<double>;
using State6d = State6<double>;
using Mat6d = Mat6<double>;

/// Particle closer to a massive body than the configured floor.
class SingularityError : public std::runtime_error {
public:
  SingularityError(int body, double distance)
      : std::runtime_error("particle within singularity floor of body " + std::to_string(body) +
                           " (r = " + std::to_string(distance) + ")"),
        body_(body), distance_(distance) {}

  int body() const noexcept { return body_; }
  double distance() const noexcept { return distance_; }

private:
  int body_;
  double distance_;
};

/// Malformed input file or inconsistent configuration.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace crnbp
