/*
Copyright 2026 the parkourlab authors.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS-IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/

#include "parkour/sim/physics.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <vector>

namespace parkour::sim {

namespace {

using Vec7 = Eigen::Matrix<double, 7, 1>;
using Mat7 = Eigen::Matrix<double, 7, 7>;
using Jac = Eigen::Matrix<double, 2, 7>;

inline Vec2d dir(double phi) { return {std::sin(phi), -std::cos(phi)}; }
inline Vec2d dirp(double phi) { return {std::cos(phi), std::sin(phi)}; }

struct PointKin {
  Vec2d p = Vec2d::Zero();
  Jac J = Jac::Zero();
  Vec2d eta = Vec2d::Zero();  // centripetal part of the point acceleration
};

// generalized coordinates: [x, z, pitch, q0..q3]
PointKin leg_point(const Vec7& Q, const Vec7& V, const RobotModel& m, int leg,
                   bool foot) {
  PointKin k;
  const double o = m.hip_offsets[leg];
  const double th = Q[2];
  const double qh = Q[3 + 2 * leg];
  const double qk = Q[4 + 2 * leg];
  const double a = th + qh;
  const double b = a + qk;
  const double Lt = m.thigh_length;
  const double Ls = m.shank_length;

  k.p = Vec2d(Q[0] + o * std::cos(th), Q[1] + o * std::sin(th)) + Lt * dir(a);
  k.J.col(0) = Vec2d(1, 0);
  k.J.col(1) = Vec2d(0, 1);
  Vec2d dth = o * Vec2d(-std::sin(th), std::cos(th)) + Lt * dirp(a);
  Vec2d dqh = Lt * dirp(a);

  const double thd = V[2];
  const double ad = thd + V[3 + 2 * leg];
  k.eta = -o * thd * thd * Vec2d(std::cos(th), std::sin(th)) -
          Lt * ad * ad * dir(a);

  if (foot) {
    const double bd = ad + V[4 + 2 * leg];
    k.p += Ls * dir(b);
    dth += Ls * dirp(b);
    dqh += Ls * dirp(b);
    k.J.col(4 + 2 * leg) = Ls * dirp(b);
    k.eta -= Ls * bd * bd * dir(b);
  }
  k.J.col(2) = dth;
  k.J.col(3 + 2 * leg) = dqh;
  return k;
}

PointKin base_point(const Vec7& Q, const Vec7& V, double lx, double lz) {
  PointKin k;
  const double c = std::cos(Q[2]), s = std::sin(Q[2]);
  k.p = Vec2d(Q[0] + c * lx - s * lz, Q[1] + s * lx + c * lz);
  k.J.col(0) = Vec2d(1, 0);
  k.J.col(1) = Vec2d(0, 1);
  k.J.col(2) = Vec2d(-s * lx - c * lz, c * lx - s * lz);
  const double thd = V[2];
  k.eta = -thd * thd * Vec2d(c * lx - s * lz, s * lx + c * lz);
  return k;
}

// Shortest push-out of a point stuck in the ground solid {z < h(x)}:
// straight up, or sideways to the nearest free column within the window.
struct Probe {
  bool active = false;
  Vec2d normal = Vec2d::Zero();
  double depth = 0.0;
};

constexpr double kExitWindow = 0.3;

Probe probe_ground(const TerrainSpec& t, const Vec2d& p) {
  Probe pr;
  const double h0 = t.height_at(p.x());
  if (p.y() >= h0) return pr;
  pr.active = true;
  pr.normal = Vec2d(0, 1);
  pr.depth = h0 - p.y();
  const int c0 = t.col(p.x());
  const int span = static_cast<int>(kExitWindow / t.grid_resolution);
  for (int c = c0 + 1; c <= std::min(c0 + span, t.columns() - 1); ++c) {
    if (t.height[c] <= p.y()) {
      const double d = t.col_left_edge(c) - p.x();
      if (d < pr.depth) {
        pr.depth = d;
        pr.normal = Vec2d(1, 0);
      }
      break;
    }
  }
  for (int c = c0 - 1; c >= std::max(c0 - span, 0); --c) {
    if (t.height[c] <= p.y()) {
      const double d = p.x() - (t.col_left_edge(c) + t.grid_resolution);
      if (d < pr.depth) {
        pr.depth = d;
        pr.normal = Vec2d(-1, 0);
      }
      break;
    }
  }
  return pr;
}

Probe probe_ceiling(const TerrainSpec& t, const Vec2d& p) {
  Probe pr;
  const double c0v = t.ceiling_at(p.x());
  if (p.y() <= c0v) return pr;
  pr.active = true;
  pr.normal = Vec2d(0, -1);
  pr.depth = p.y() - c0v;
  const int c0 = t.col(p.x());
  const int span = static_cast<int>(kExitWindow / t.grid_resolution);
  for (int c = c0 + 1; c <= std::min(c0 + span, t.columns() - 1); ++c) {
    if (t.ceiling[c] >= p.y()) {
      const double d = t.col_left_edge(c) - p.x();
      if (d < pr.depth) {
        pr.depth = d;
        pr.normal = Vec2d(1, 0);
      }
      break;
    }
  }
  for (int c = c0 - 1; c >= std::max(c0 - span, 0); --c) {
    if (t.ceiling[c] >= p.y()) {
      const double d = p.x() - (t.col_left_edge(c) + t.grid_resolution);
      if (d < pr.depth) {
        pr.depth = d;
        pr.normal = Vec2d(-1, 0);
      }
      break;
    }
  }
  return pr;
}

struct Contact {
  Jac J;
  Vec2d normal;
  Vec2d tangent;
  double spring = 0.0;   // k * depth
  double damping = 0.0;  // penetration-ramped normal damping
  double f_tang = 0.0;
  bool is_foot = false;
  int foot_index = -1;
  bool enabled = true;
  double realized_normal = 0.0;
};

// normal damping ramps in with penetration so touchdowns do not produce a
// single-substep force spike proportional to the approach speed
constexpr double kDampingRampDepth = 0.005;

}  // namespace

Vec2d hip_position(const RobotState& s, const RobotModel& m, int leg) {
  return {s.base_x + m.hip_offsets[leg] * std::cos(s.pitch),
          s.base_z + m.hip_offsets[leg] * std::sin(s.pitch)};
}

Vec2d knee_position(const RobotState& s, const RobotModel& m, int leg) {
  const double a = s.pitch + s.q[2 * leg];
  return hip_position(s, m, leg) + m.thigh_length * dir(a);
}

Vec2d foot_position(const RobotState& s, const RobotModel& m, int leg) {
  const double a = s.pitch + s.q[2 * leg];
  const double b = a + s.q[2 * leg + 1];
  return knee_position(s, m, leg) + m.shank_length * dir(b);
}

Vec2d foot_velocity(const RobotState& s, const RobotModel& m, int leg) {
  Vec7 Q, V;
  Q << s.base_x, s.base_z, s.pitch, s.q[0], s.q[1], s.q[2], s.q[3];
  V << s.base_vx, s.base_vz, s.pitch_rate, s.qdot[0], s.qdot[1], s.qdot[2],
      s.qdot[3];
  return leg_point(Q, V, m, leg, true).J * V;
}

double mechanical_energy(const RobotState& s, const RobotModel& m) {
  double e = 0.5 * m.base_mass * (s.base_vx * s.base_vx + s.base_vz * s.base_vz) +
             0.5 * m.base_inertia * s.pitch_rate * s.pitch_rate +
             m.base_mass * m.gravity * s.base_z;
  for (int leg = 0; leg < 2; ++leg) {
    const Vec2d v = foot_velocity(s, m, leg);
    const Vec2d p = foot_position(s, m, leg);
    e += 0.5 * m.foot_mass * v.squaredNorm() + m.foot_mass * m.gravity * p.y();
  }
  for (int j = 0; j < 4; ++j)
    e += 0.5 * m.joint_armature * s.qdot[j] * s.qdot[j];
  return e;
}

StepResult step(const RobotState& state, const Vec4d& action,
                const TerrainSpec& terrain, const RobotModel& model,
                const PdGains& gains, double dt_policy, int substeps) {
  if (!action.allFinite()) throw ConfigError("step: non-finite action");
  if (!(gains.kp > 0.0) || !(gains.kd > 0.0))
    throw ConfigError("step: PD gains must be positive");

  StepResult out;
  out.state = state;
  out.inputs.action = action;
  out.inputs.dt = dt_policy;
  if (dt_policy <= 0.0) {  // degenerate test hook
    out.inputs.q = state.q;
    out.inputs.qdot = state.qdot;
    out.inputs.pitch = state.pitch;
    return out;
  }

  RobotState& s = out.state;
  ConstraintInputs& ci = out.inputs;
  const double dt = dt_policy / substeps;
  const Vec4d qdot_before = s.qdot;

  s.knee_collision = false;
  s.base_collision = false;

  Vec7 Q, V;
  Q << s.base_x, s.base_z, s.pitch, s.q[0], s.q[1], s.q[2], s.q[3];
  V << s.base_vx, s.base_vz, s.pitch_rate, s.qdot[0], s.qdot[1], s.qdot[2],
      s.qdot[3];

  const double hh = model.base_half_height;
  const double hl = model.base_half_length;
  const std::array<Vec2d, 3> belly = {Vec2d(-hl, -hh), Vec2d(0, -hh),
                                      Vec2d(hl, -hh)};
  const std::array<Vec2d, 3> back = {Vec2d(-hl, hh), Vec2d(0, hh),
                                     Vec2d(hl, hh)};

  for (int k = 0; k < substeps; ++k) {
    // PD servo at the physics rate; the raw torque is what the constraint
    // suite sees, the actuator itself saturates at the limit
    Vec4d q = Q.tail<4>();
    Vec4d qd = V.tail<4>();
    Vec4d tau_raw = gains.kp * (model.default_pose + action - q) -
                    gains.kd * qd;
    ci.torque_abs_max = ci.torque_abs_max.cwiseMax(tau_raw.cwiseAbs());
    Vec4d tau = tau_raw.cwiseMax(-model.torque_limit).cwiseMin(model.torque_limit);
    for (int j = 0; j < 4; ++j) {  // end stops past the joint limits
      if (q[j] > model.joint_max[j])
        tau[j] += -model.joint_stop_stiffness * (q[j] - model.joint_max[j]) -
                  model.joint_stop_damping * qd[j];
      else if (q[j] < model.joint_min[j])
        tau[j] += -model.joint_stop_stiffness * (q[j] - model.joint_min[j]) -
                  model.joint_stop_damping * qd[j];
    }

    Mat7 M = Mat7::Zero();
    M(0, 0) = M(1, 1) = model.base_mass;
    M(2, 2) = model.base_inertia;
    for (int j = 3; j < 7; ++j) M(j, j) = model.joint_armature;

    Vec7 rhs = Vec7::Zero();
    rhs[1] -= model.base_mass * model.gravity;
    rhs.tail<4>() += tau;

    std::array<PointKin, 2> feet;
    for (int leg = 0; leg < 2; ++leg) {
      feet[leg] = leg_point(Q, V, model, leg, true);
      M.noalias() += model.foot_mass * feet[leg].J.transpose() * feet[leg].J;
      rhs.noalias() +=
          feet[leg].J.transpose() * Vec2d(0, -model.foot_mass * model.gravity);
      rhs.noalias() -=
          model.foot_mass * feet[leg].J.transpose() * feet[leg].eta;
    }

    // collect contact candidates
    std::vector<Contact> contacts;
    contacts.reserve(8);
    auto add_contact = [&](const PointKin& pk, const Probe& pr, bool is_foot,
                           int foot_index) {
      if (!pr.active) return;
      Contact c;
      c.J = pk.J;
      c.normal = pr.normal;
      c.tangent = Vec2d(-pr.normal.y(), pr.normal.x());
      c.spring = model.contact_stiffness * pr.depth;
      c.damping = model.contact_damping *
                  std::min(1.0, pr.depth / kDampingRampDepth);
      const Vec2d vp = pk.J * V;
      const double fn_est =
          std::max(0.0, c.spring - c.damping * c.normal.dot(vp));
      const double cap = model.friction_mu * fn_est;
      double ft_raw;  // along c.tangent
      if (is_foot && pr.normal.y() > 0.5) {
        // stick anchor on ground contacts: spring to the stored foothold,
        // slipping re-anchors at the friction cone boundary
        if (!s.anchor_valid[foot_index]) {
          s.foot_anchor[foot_index] = pk.p.x();
          s.anchor_valid[foot_index] = true;
        }
        const double stretch =
            c.tangent.x() * (pk.p.x() - s.foot_anchor[foot_index]);
        const double v_t = c.tangent.dot(vp);
        ft_raw = -model.tangential_stiffness * stretch -
                 model.tangential_damping * v_t;
        if (std::abs(ft_raw) > cap) {
          const double clamped = std::clamp(ft_raw, -cap, cap);
          // move the anchor so the spring sits exactly on the cone
          const double stretch_new =
              -(clamped + model.tangential_damping * v_t) /
              model.tangential_stiffness;
          s.foot_anchor[foot_index] = pk.p.x() - stretch_new / c.tangent.x();
        }
      } else {
        ft_raw = -model.tangential_damping * c.tangent.dot(vp);
      }
      c.f_tang = std::clamp(ft_raw, -cap, cap);
      c.is_foot = is_foot;
      c.foot_index = foot_index;
      contacts.push_back(c);
    };

    for (int leg = 0; leg < 2; ++leg) {
      add_contact(feet[leg], probe_ground(terrain, feet[leg].p), true, leg);
      const PointKin knee = leg_point(Q, V, model, leg, false);
      add_contact(knee, probe_ground(terrain, knee.p), false, -1);
      if (knee.p.y() - terrain.height_at(knee.p.x()) <= model.collision_margin)
        s.knee_collision = true;
    }
    for (const Vec2d& r : belly) {
      const PointKin bp = base_point(Q, V, r.x(), r.y());
      add_contact(bp, probe_ground(terrain, bp.p), false, -1);
      if (bp.p.y() - terrain.height_at(bp.p.x()) <= model.collision_margin)
        s.base_collision = true;
    }
    for (const Vec2d& r : back) {
      const PointKin bp = base_point(Q, V, r.x(), r.y());
      add_contact(bp, probe_ceiling(terrain, bp.p), false, -1);
      if (terrain.ceiling_at(bp.p.x()) - bp.p.y() <= model.collision_margin)
        s.base_collision = true;
    }

    // solve; drop contacts whose realized normal force would pull, once
    Vec7 Vnew = V;
    for (int pass = 0; pass < 2; ++pass) {
      Mat7 lhs = M;
      Vec7 b = rhs;
      for (const Contact& c : contacts) {
        if (!c.enabled) continue;
        const Eigen::Matrix<double, 1, 7> Jn = c.normal.transpose() * c.J;
        lhs.noalias() += dt * c.damping * Jn.transpose() * Jn;
        const Vec2d vp = c.J * V;
        const Vec2d f_explicit = c.spring * c.normal + c.f_tang * c.tangent -
                                 c.damping * c.normal.dot(vp) * c.normal;
        b.noalias() += c.J.transpose() * f_explicit;
      }
      const Vec7 acc = lhs.ldlt().solve(b);
      Vnew = V + dt * acc;
      bool redo = false;
      for (Contact& c : contacts) {
        if (!c.enabled) continue;
        const double vn_new = c.normal.dot(c.J * Vnew);
        c.realized_normal = c.spring - c.damping * vn_new;
        if (c.realized_normal < 0.0) {
          c.enabled = false;
          c.realized_normal = 0.0;
          redo = true;
        }
      }
      if (!redo) break;
    }

    V = Vnew;
    Q.head<3>() += dt * V.head<3>();
    Q.tail<4>() += dt * V.tail<4>();

    for (int j = 0; j < 4; ++j) {  // hard mechanical stop
      const double lo = model.joint_min[j] - model.joint_stop_margin;
      const double hi = model.joint_max[j] + model.joint_stop_margin;
      if (Q[3 + j] < lo) {
        Q[3 + j] = lo;
        if (V[3 + j] < 0) V[3 + j] = 0;
      } else if (Q[3 + j] > hi) {
        Q[3 + j] = hi;
        if (V[3 + j] > 0) V[3 + j] = 0;
      }
    }

    if (!Q.allFinite() || !V.allFinite())
      throw SimulationDiverged("integration produced non-finite state", k);

    // contact bookkeeping at the substep level
    std::array<bool, 2> contact_now = {false, false};
    std::array<bool, 2> stuck_now = {false, false};
    std::array<Vec2d, 2> force_now = {Vec2d::Zero(), Vec2d::Zero()};
    for (const Contact& c : contacts) {
      if (!c.is_foot || !c.enabled) continue;
      contact_now[c.foot_index] = true;
      if (c.normal.y() > 0.5) stuck_now[c.foot_index] = true;
      force_now[c.foot_index] +=
          c.realized_normal * c.normal + c.f_tang * c.tangent;
    }
    for (int leg = 0; leg < 2; ++leg) {
      if (!stuck_now[leg]) s.anchor_valid[leg] = false;
    }
    for (int leg = 0; leg < 2; ++leg) {
      if (contact_now[leg]) {
        if (s.airtime[leg] > 0.0) {
          ci.touchdown[leg] = true;
          ci.touchdown_airtime[leg] = s.airtime[leg];
        }
        s.airtime[leg] = 0.0;
      } else {
        s.airtime[leg] += dt;
      }
      s.foot_contact[leg] = contact_now[leg];
      s.foot_force[leg] = force_now[leg];
      const double fnorm = force_now[leg].norm();
      ci.foot_force_max[leg] = std::max(ci.foot_force_max[leg], fnorm);
      if (contact_now[leg]) {
        const double excess =
            std::abs(force_now[leg].x()) - 4.0 * std::abs(force_now[leg].y());
        ci.stumble_excess[leg] = std::max(ci.stumble_excess[leg], excess);
      }
    }
    s.base_x = Q[0];
    s.base_z = Q[1];
    s.pitch = Q[2];
    s.base_vx = V[0];
    s.base_vz = V[1];
    s.pitch_rate = V[2];
    s.q = Q.tail<4>();
    s.qdot = V.tail<4>();
  }

  s.sim_time += dt_policy;
  s.qddot_est = (s.qdot - qdot_before) / dt_policy;

  ci.q = s.q;
  ci.qdot = s.qdot;
  ci.qddot_est = s.qddot_est;
  ci.pitch = s.pitch;
  ci.knee_collision = s.knee_collision;
  ci.base_collision = s.base_collision;
  ci.n_foot_contacts = (s.foot_contact[0] ? 1 : 0) + (s.foot_contact[1] ? 1 : 0);
  return out;
}

}  // namespace parkour::sim
