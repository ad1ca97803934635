#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>

#include "dronefusion/errors.hpp"
#include "dronefusion/types.hpp"

namespace dronefusion::attitude {

/// Pitch extraction beyond this magnitude counts as gimbal lock.
inline constexpr double kGimbalLockPitch = 1.55;

template <typename Scalar>
struct AttitudeEstimate {
  Scalar theta{0};  // pitch, rad
  Scalar phi{0};    // roll, rad
};

using AttitudeEstimated = AttitudeEstimate<double>;

/// One IMU reading: accelerometer-derived angles plus body rates.
template <typename Scalar>
struct ImuSample {
  Scalar theta_acc{0};  // pitch from accelerometer, rad
  Scalar phi_acc{0};    // roll from accelerometer, rad
  Scalar p{0};          // body roll rate, rad/s
  Scalar q{0};          // body pitch rate, rad/s
  Scalar r{0};          // body yaw rate, rad/s
};

using ImuSampled = ImuSample<double>;

/// Gyro-side blend weight tau / (tau + Ts). The measurement side uses
/// 1 minus this value, so the two weights sum to 1 exactly.
template <typename Scalar>
Scalar complementary_gain(Scalar tau, Scalar Ts) {
  if (!(tau >= Scalar(0))) {
    throw DomainError("complementary filter: tau must be non-negative");
  }
  if (!(Ts > Scalar(0))) {
    throw DomainError("complementary filter: Ts must be positive");
  }
  return tau / (tau + Ts);
}

/// Linear complementary filter under the small-angle approximation: body
/// rates stand in for the Euler-angle rates (theta_dot ~ q, phi_dot ~ p).
template <typename Scalar>
AttitudeEstimate<Scalar> linear_complementary(const AttitudeEstimate<Scalar>& prev,
                                              const ImuSample<Scalar>& z, Scalar tau, Scalar Ts) {
  const Scalar a = complementary_gain(tau, Ts);
  AttitudeEstimate<Scalar> next;
  next.theta = a * (prev.theta + Ts * z.q) + (Scalar(1) - a) * z.theta_acc;
  next.phi = a * (prev.phi + Ts * z.p) + (Scalar(1) - a) * z.phi_acc;
  return next;
}

/// Unit quaternion for the 1-2-3 Euler angles, matching quad3d::rotation_bg:
/// q = qz(psi) qy(theta) qx(phi).
template <typename Scalar>
Eigen::Quaternion<Scalar> quat_from_euler(Scalar phi, Scalar theta, Scalar psi) {
  using AA = Eigen::AngleAxis<Scalar>;
  using V3 = Eigen::Matrix<Scalar, 3, 1>;
  Eigen::Quaternion<Scalar> q =
      AA(psi, V3::UnitZ()) * AA(theta, V3::UnitY()) * AA(phi, V3::UnitX());
  q.normalize();
  return q;
}

template <typename Scalar>
Scalar roll_of(const Eigen::Quaternion<Scalar>& q) {
  const Eigen::Matrix<Scalar, 3, 3> r = q.toRotationMatrix();
  return std::atan2(r(2, 1), r(2, 2));
}

template <typename Scalar>
Scalar pitch_of(const Eigen::Quaternion<Scalar>& q) {
  const Eigen::Matrix<Scalar, 3, 3> r = q.toRotationMatrix();
  const Scalar s = std::clamp(-r(2, 0), Scalar(-1), Scalar(1));
  return std::asin(s);
}

template <typename Scalar>
Scalar yaw_of(const Eigen::Quaternion<Scalar>& q) {
  const Eigen::Matrix<Scalar, 3, 3> r = q.toRotationMatrix();
  return std::atan2(r(1, 0), r(0, 0));
}

/// One gyro step: dq is the exact axis-angle rotation for the body-rate
/// vector over Ts, composed as dq * q and renormalized.
template <typename Scalar>
Eigen::Quaternion<Scalar> quat_integrate_body_rates(const Eigen::Quaternion<Scalar>& q, Scalar p,
                                                    Scalar q_rate, Scalar r, Scalar Ts) {
  if (!(Ts > Scalar(0))) {
    throw DomainError("quat_integrate_body_rates: Ts must be positive");
  }
  const Eigen::Matrix<Scalar, 3, 1> omega(p, q_rate, r);
  const Scalar rate = omega.norm();
  Eigen::Quaternion<Scalar> out;
  if (rate == Scalar(0)) {
    out = q;
  } else {
    const Eigen::AngleAxis<Scalar> dq(rate * Ts, omega / rate);
    out = Eigen::Quaternion<Scalar>(dq) * q;
  }
  out.normalize();
  return out;
}

/// Quaternion-propagated complementary filter: integrate the body rates on
/// the previous estimate (yaw supplied externally), extract the predicted
/// roll/pitch, then blend with the accelerometer angles.
///
/// The gyro rate is already folded into the prediction by dq, so the default
/// blend uses the predicted angle alone; literal_rate_term additionally adds
/// Ts times the rate inside the prediction term.
template <typename Scalar>
AttitudeEstimate<Scalar> nonlinear_complementary(const AttitudeEstimate<Scalar>& prev, Scalar psi,
                                                 const ImuSample<Scalar>& z, Scalar tau, Scalar Ts,
                                                 bool literal_rate_term = false) {
  const Scalar a = complementary_gain(tau, Ts);
  const Eigen::Quaternion<Scalar> q_prev = quat_from_euler(prev.phi, prev.theta, psi);
  const Eigen::Quaternion<Scalar> q_pred = quat_integrate_body_rates(q_prev, z.p, z.q, z.r, Ts);

  const Scalar theta_pred = pitch_of(q_pred);
  if (std::abs(theta_pred) > Scalar(kGimbalLockPitch)) {
    throw GimbalLockError("nonlinear_complementary: predicted pitch in gimbal-lock region");
  }
  const Scalar phi_pred = roll_of(q_pred);

  const Scalar theta_term = literal_rate_term ? theta_pred + Ts * z.q : theta_pred;
  const Scalar phi_term = literal_rate_term ? phi_pred + Ts * z.p : phi_pred;

  AttitudeEstimate<Scalar> next;
  next.theta = a * theta_term + (Scalar(1) - a) * z.theta_acc;
  next.phi = a * phi_term + (Scalar(1) - a) * z.phi_acc;
  return next;
}

}  // namespace dronefusion::attitude
