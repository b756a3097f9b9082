#pragma once

// Circular restricted n-body vector field in the synodic frame of M1-M2.
//
// Bodies 1 and 2 sit at (-mu2, 0, 0) and (mu1, 0, 0). Perturbing body j moves
// on a circle of radius R_j about M1 with phase psi_j(t) = psi0_j + (n_j - 1) t,
// so its synodic position is (R_j cos psi_j - mu2, R_j sin psi_j, 0). The
// perturbing contributions (direct pull plus the pull on the M1-M2 barycentre)
// are scaled by model.epsilon; epsilon = 0 is the CR3BP.
//
// Everything here is templated on the scalar so the same code runs in double
// for production and in long double for reference computations.

#include "crnbp/bodies.hpp"
#include "crnbp/types.hpp"

#include <array>
#include <cmath>
#include <numbers>

namespace crnbp {

template <typename Scalar>
using PhaseVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Reduces an angle to (-pi, pi].
template <typename Scalar>
Scalar wrap_angle(Scalar angle) {
  using std::remainder;
  const Scalar two_pi = Scalar(2) * std::numbers::pi_v<Scalar>;
  Scalar r = remainder(angle, two_pi);
  if (r <= -std::numbers::pi_v<Scalar>)
    r += two_pi;
  return r;
}

/// Phases of the perturbing bodies (model indices 2..) at canonical time t.
template <typename Scalar>
PhaseVector<Scalar> phases_at(const SystemModel& model, Scalar t) {
  const auto count = static_cast<Eigen::Index>(model.perturber_count());
  PhaseVector<Scalar> psi(count);
  for (Eigen::Index i = 0; i < count; ++i) {
    const std::size_t j = static_cast<std::size_t>(i) + 2;
    psi[i] = wrap_angle<Scalar>(Scalar(model.psi0[j]) + (Scalar(model.n[j]) - Scalar(1)) * t);
  }
  return psi;
}

/// Synodic position of massive body `index` at time t (M1 and M2 are fixed).
template <typename Scalar>
Vec3<Scalar> body_position(const SystemModel& model, std::size_t index, Scalar t) {
  const Scalar mu2 = Scalar(model.mu2());
  if (index == 0)
    return {-mu2, Scalar(0), Scalar(0)};
  if (index == 1)
    return {Scalar(1) - mu2, Scalar(0), Scalar(0)};
  using std::cos;
  using std::sin;
  const Scalar psi =
      wrap_angle<Scalar>(Scalar(model.psi0[index]) + (Scalar(model.n[index]) - Scalar(1)) * t);
  const Scalar R = Scalar(model.R[index]);
  return {R * cos(psi) - mu2, R * sin(psi), Scalar(0)};
}

namespace detail {

template <typename Scalar>
Scalar checked_distance(const SystemModel& model, int body, const Vec3<Scalar>& d) {
  using std::sqrt;
  const Scalar r = sqrt(d.squaredNorm());
  if (!(r >= Scalar(model.singularity_floor)))
    throw SingularityError(body, static_cast<double>(r));
  return r;
}

/// Sum over perturbers j of mu_j * sum_{k != j} mu_k (b_j - b_k) / |b_j - b_k|^3, with the
/// distance from the law of cosines. Depends on time only.
template <typename Scalar>
Eigen::Matrix<Scalar, 2, 1> indirect_sum(const SystemModel& model,
                                         const PhaseVector<Scalar>& psi) {
  using std::cos;
  using std::pow;
  using std::sin;
  const std::size_t count = model.massive_count();
  auto phase = [&](std::size_t k) { return k < 2 ? Scalar(0) : psi[Eigen::Index(k - 2)]; };

  Eigen::Matrix<Scalar, 2, 1> total = Eigen::Matrix<Scalar, 2, 1>::Zero();
  for (std::size_t j = 2; j < count; ++j) {
    const Scalar Rj = Scalar(model.R[j]);
    const Scalar pj = phase(j);
    const Scalar cj = cos(pj), sj = sin(pj);
    Eigen::Matrix<Scalar, 2, 1> inner = Eigen::Matrix<Scalar, 2, 1>::Zero();
    for (std::size_t k = 0; k < count; ++k) {
      if (k == j)
        continue;
      const Scalar Rk = Scalar(model.R[k]);
      const Scalar pk = phase(k);
      const Scalar d2 = Rk * Rk + Rj * Rj - Scalar(2) * Rk * Rj * cos(pk - pj);
      const Scalar w = Scalar(model.mu[k]) / pow(d2, Scalar(1.5));
      inner[0] += w * (Rj * cj - Rk * cos(pk));
      inner[1] += w * (Rj * sj - Rk * sin(pk));
    }
    total += Scalar(model.mu[j]) * inner;
  }
  return total;
}

} // namespace detail

/// CR3BP acceleration (the mu1, mu2 terms plus Coriolis and centrifugal parts).
template <typename Scalar>
Vec3<Scalar> cr3bp_accel(const SystemModel& model, const State6<Scalar>& s) {
  const Scalar mu1 = Scalar(model.mu1());
  const Scalar mu2 = Scalar(model.mu2());
  const Scalar x = s[0], y = s[1], z = s[2];
  const Vec3<Scalar> d1(x + mu2, y, z);
  const Vec3<Scalar> d2(x - mu1, y, z);
  const Scalar r1 = detail::checked_distance(model, 1, d1);
  const Scalar r2 = detail::checked_distance(model, 2, d2);
  const Scalar k1 = mu1 / (r1 * r1 * r1);
  const Scalar k2 = mu2 / (r2 * r2 * r2);
  return {Scalar(2) * s[4] + x - k1 * (x + mu2) - k2 * (x - mu1),
          Scalar(-2) * s[3] + y - k1 * y - k2 * y, -k1 * z - k2 * z};
}

/// Full CRNBP acceleration at canonical time t.
template <typename Scalar>
Vec3<Scalar> crnbp_accel(const SystemModel& model, const State6<Scalar>& s, Scalar t) {
  Vec3<Scalar> a = cr3bp_accel(model, s);
  if (model.perturber_count() == 0 || model.epsilon == 0.0)
    return a;

  using std::cos;
  using std::sin;
  const Scalar mu2 = Scalar(model.mu2());
  const PhaseVector<Scalar> psi = phases_at(model, t);
  const auto indirect = detail::indirect_sum(model, psi);

  Vec3<Scalar> sum(indirect[0], indirect[1], Scalar(0));
  for (std::size_t j = 2; j < model.massive_count(); ++j) {
    const Scalar Rj = Scalar(model.R[j]);
    const Scalar pj = psi[Eigen::Index(j - 2)];
    const Vec3<Scalar> d(s[0] + mu2 - Rj * cos(pj), s[1] - Rj * sin(pj), s[2]);
    const Scalar r = detail::checked_distance(model, int(j) + 1, d);
    sum += (Scalar(model.mu[j]) / (r * r * r)) * d;
  }
  return a - Scalar(model.epsilon) * sum;
}

/// dX/dt = F(X, t).
template <typename Scalar>
State6<Scalar> vector_field(const SystemModel& model, const State6<Scalar>& s, Scalar t) {
  State6<Scalar> f;
  f.template head<3>() = s.template tail<3>();
  f.template tail<3>() = crnbp_accel(model, s, t);
  return f;
}

/// Analytic dF/dX.
template <typename Scalar>
Mat6<Scalar> state_jacobian(const SystemModel& model, const State6<Scalar>& s, Scalar t) {
  Mat6<Scalar> J = Mat6<Scalar>::Zero();
  J.template topRightCorner<3, 3>().setIdentity();
  J(3, 4) = Scalar(2);
  J(4, 3) = Scalar(-2);

  Mat3<Scalar> G = Mat3<Scalar>::Zero();
  G(0, 0) = Scalar(1);
  G(1, 1) = Scalar(1);
  const Vec3<Scalar> rho = s.template head<3>();

  auto add_body = [&](int tag, const Vec3<Scalar>& position, Scalar weight) {
    const Vec3<Scalar> d = rho - position;
    const Scalar r = detail::checked_distance(model, tag, d);
    const Scalar r2 = r * r;
    const Scalar r3 = r2 * r;
    const Scalar r5 = r3 * r2;
    G += weight * (Scalar(3) / r5 * (d * d.transpose()) - Mat3<Scalar>::Identity() / r3);
  };

  add_body(1, body_position<Scalar>(model, 0, t), Scalar(model.mu1()));
  add_body(2, body_position<Scalar>(model, 1, t), Scalar(model.mu2()));
  if (model.epsilon != 0.0) {
    for (std::size_t j = 2; j < model.massive_count(); ++j)
      add_body(int(j) + 1, body_position<Scalar>(model, j, t),
               Scalar(model.epsilon) * Scalar(model.mu[j]));
  }
  J.template bottomLeftCorner<3, 3>() = G;
  return J;
}

/// CR3BP Jacobi integral J = x^2 + y^2 + 2 (mu1/r1 + mu2/r2) - v^2.
template <typename Scalar>
Scalar jacobi_constant(const SystemModel& model, const State6<Scalar>& s) {
  const Scalar mu1 = Scalar(model.mu1());
  const Scalar mu2 = Scalar(model.mu2());
  const Vec3<Scalar> d1(s[0] + mu2, s[1], s[2]);
  const Vec3<Scalar> d2(s[0] - mu1, s[1], s[2]);
  const Scalar r1 = detail::checked_distance(model, 1, d1);
  const Scalar r2 = detail::checked_distance(model, 2, d2);
  return s[0] * s[0] + s[1] * s[1] + Scalar(2) * (mu1 / r1 + mu2 / r2) -
         s.template tail<3>().squaredNorm();
}

/// Equilibria of the M1-M2 pair as zero-velocity states, ordered L1..L5.
/// L1 lies between the primaries, L2 beyond M2 and L3 beyond M1.
std::array<State6d, 5> lagrange_points(const SystemModel& model);

} // namespace crnbp
