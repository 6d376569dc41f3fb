#include "dockrl/reward.hpp"

#include <cmath>
#include <stdexcept>

namespace dockrl {

namespace {

void require_pd(const Eigen::MatrixXd& m, const char* name) {
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw std::invalid_argument(std::string("reward: ") + name + " must be symmetric");
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  if (es.eigenvalues().minCoeff() <= 0.0)
    throw std::invalid_argument(std::string("reward: ") + name + " must be positive definite");
}

}  // namespace

void RewardWeights::validate() const {
  require_pd(M, "M");
  require_pd(Q, "Q");
  require_pd(P, "P");
  if (c <= 0.0) throw std::invalid_argument("reward: c must be positive");
  if (d <= 0.0) throw std::invalid_argument("reward: d must be positive");
  if (!(gamma1 > 0.0 && gamma1 < 1.0) || !(gamma2 > 0.0 && gamma2 < 1.0))
    throw std::invalid_argument("reward: discounts must lie in (0,1)");
  if (!(gamma1 < gamma2))
    throw std::invalid_argument("reward: shaping discount must be below the bonus discount");
  if (std::abs(q_des.norm() - 1.0) > 1e-9)
    throw std::invalid_argument("reward: q_des must be a unit quaternion");
  if (!w_des.allFinite()) throw std::invalid_argument("reward: w_des must be finite");
}

Vector6d attitude_error(const Quat& q, const Eigen::Vector3d& w, const RewardWeights& weights) {
  if (std::abs(q.norm() - 1.0) > 1e-6)
    throw std::invalid_argument("attitude_error: quaternion must be unit length");
  Quat qt = weights.q_des * q.conjugate();
  // canonical cover: scalar part >= 0, ties broken lexicographically so both
  // covers of q map to bit-identical errors even at 180 deg
  const bool flip = qt.w < 0.0 ||
                    (qt.w == 0.0 && (qt.x < 0.0 || (qt.x == 0.0 && (qt.y < 0.0 ||
                                                    (qt.y == 0.0 && qt.z < 0.0)))));
  if (flip) qt = Quat{-qt.w, -qt.x, -qt.y, -qt.z};
  Vector6d out;
  out << 2.0 * qt.x, 2.0 * qt.y, 2.0 * qt.z, w - weights.w_des;
  return out;
}

ShapingTerms shaping_terms(const ChaserState& s, const Vector6d& u,
                           const Eigen::Vector3d& accel_actual,
                           const Eigen::Vector3d& accel_ref, bool collided, double r_p_norm,
                           double r_col, const RewardWeights& weights) {
  if (r_col <= 0.0) throw std::invalid_argument("shaping_terms: r_col must be positive");
  ShapingTerms terms;
  const Eigen::Vector3d da = accel_actual - accel_ref;
  terms.lqr = -da.dot(weights.M * da);
  const Vector6d alpha = attitude_error(s.q, s.w, weights);
  terms.attitude = -alpha.dot(weights.Q * alpha);
  terms.control = -u.dot(weights.P * u);
  if (collided) {
    const double arg = std::min(0.5 * M_PI * std::max(r_p_norm, 0.0) / r_col, 0.5 * M_PI);
    terms.collision = -weights.c * std::sin(arg);
  }
  terms.total = terms.lqr + terms.attitude + terms.control + terms.collision;
  return terms;
}

double shaping_reward(const ChaserState& s, const Vector6d& u,
                      const Eigen::Vector3d& accel_actual, const Eigen::Vector3d& accel_ref,
                      bool collided, double r_p_norm, double r_col,
                      const RewardWeights& weights) {
  return shaping_terms(s, u, accel_actual, accel_ref, collided, r_p_norm, r_col, weights).total;
}

double terminal_bonus(bool dock_success, const RewardWeights& weights) {
  return dock_success ? weights.d : 0.0;
}

}  // namespace dockrl
