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

#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "parkour/sim/env.hpp"

using namespace parkour;
using namespace parkour::sim;

namespace {

TerrainSpec flat_terrain() {
  Rng rng(0);
  return make_terrain(TerrainKind::flat, 0, rng);
}

// independent fine-marching ray oracle: walk the ray in tiny steps and
// bisect the first solid interval
double march_ray(const TerrainSpec& t, const Vec2d& o, const Vec2d& d,
                 double max_range) {
  const double dt = 1e-4;
  auto solid = [&](double s) {
    const Vec2d p = o + s * d;
    return p.y() < t.height_at(p.x()) || p.y() > t.ceiling_at(p.x());
  };
  for (double s = dt; s <= max_range; s += dt) {
    if (solid(s)) {
      double lo = s - dt, hi = s;
      for (int i = 0; i < 40; ++i) {
        const double mid = 0.5 * (lo + hi);
        (solid(mid) ? hi : lo) = mid;
      }
      return hi;
    }
  }
  return max_range;
}

// Static equilibrium of one leg: PD torque balances the gravity load carried
// through the foot. Two friction regimes bracket the stance height:
//  - free feet (viscous friction lets them slide): vertical load only,
//    joints sag to q = q* + W * dz/dq / Kp
//  - pinned feet (sticking): feet stay below the hips, the horizontal
//    contact force enters the balance
// At stiff gains the two coincide; at soft gains they bracket the sim.
double settled_height_free(const RobotModel& m, double kp) {
  // net force transmitted through the leg excludes the foot's own weight
  const double w_leg = 0.5 * m.base_mass * m.gravity;
  const double w_contact = 0.5 * (m.base_mass + 2 * m.foot_mass) * m.gravity;
  double qh = m.default_pose[0], qk = m.default_pose[1];
  for (int it = 0; it < 4000; ++it) {
    const double tz_h =
        m.thigh_length * std::sin(qh) + m.shank_length * std::sin(qh + qk);
    const double tz_k = m.shank_length * std::sin(qh + qk);
    const double qh_new = m.default_pose[0] + (w_leg * tz_h) / kp;
    const double qk_new = m.default_pose[1] + (w_leg * tz_k) / kp;
    qh += 0.1 * (qh_new - qh);
    qk += 0.1 * (qk_new - qk);
  }
  const double drop = m.thigh_length * std::cos(qh) +
                      m.shank_length * std::cos(qh + qk);
  return drop - w_contact / m.contact_stiffness;
}

double settled_height_pinned(const RobotModel& m, double kp) {
  // symmetric stance, feet fixed below the hips: v = -u, solve the knee
  // torque balance 2*kp*(u - q*_h) ... reduces to a scalar fixed point
  const double w_leg = 0.5 * m.base_mass * m.gravity;
  const double w_contact = 0.5 * (m.base_mass + 2 * m.foot_mass) * m.gravity;
  const double L = m.thigh_length;
  double u = m.default_pose[0];
  for (int it = 0; it < 4000; ++it) {
    // combining the hip and knee balances eliminates Fx:
    //   2.5 u = 0.5 q*_hip - q*_knee + (L W / kp) sin u
    const double u_new =
        (kp * (0.5 * m.default_pose[0] - m.default_pose[1]) +
         L * w_leg * std::sin(u)) /
        (2.5 * kp);
    u += 0.1 * (u_new - u);
  }
  return 2.0 * L * std::cos(u) - w_contact / m.contact_stiffness;
}

}  // namespace

TEST_SUITE("sim") {

TEST_CASE("ballistic free fall matches the closed form at the substep schedule") {
  RobotModel m;
  TerrainSpec t = flat_terrain();
  RobotState s;
  s.base_z = 1.0;
  s.q = m.default_pose;
  // zero torque via a degenerate hook: kp/kd must be positive, so use a
  // model with zero default error and zero gains is invalid; instead check
  // against an oracle integrated with the same schedule including PD-free
  // flight (gains act on joints only; the base sees pure gravity).
  PdGains g{.kp = 4.0, .kd = 0.05};
  const auto r = step(s, Vec4d::Zero(), t, m, g);
  CHECK(r.state.base_vz == doctest::Approx(-m.gravity * 0.02).epsilon(1e-12));
  CHECK(std::abs(r.state.base_vz + m.gravity * 0.02) < 1e-9);
  // closed-form position under the same schedule: z += dt*v after v update
  double z = 1.0, v = 0.0;
  for (int k = 0; k < 10; ++k) {
    v -= m.gravity * 0.002;
    z += 0.002 * v;
  }
  CHECK(std::abs(r.state.base_z - z) < 1e-9);
}

TEST_CASE("free fall leaves joints untouched when started at rest") {
  RobotModel m;
  TerrainSpec t = flat_terrain();
  RobotState s;
  s.base_z = 2.0;
  s.q = m.default_pose;
  const auto r = step(s, Vec4d::Zero(), t, m, PdGains{4.0, 0.05});
  CHECK((r.state.q - m.default_pose).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(r.state.qdot.cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("zero dt returns the state unchanged") {
  RobotModel m;
  TerrainSpec t = flat_terrain();
  RobotState s;
  s.base_z = 0.7;
  s.q = m.default_pose;
  s.base_vx = 0.3;
  const auto r = step(s, Vec4d::Zero(), t, m, PdGains{4.0, 0.2}, 0.0);
  CHECK(r.state.base_z == s.base_z);
  CHECK(r.state.base_vx == s.base_vx);
  CHECK(r.state.q == s.q);
  CHECK(r.state.sim_time == s.sim_time);
}

TEST_CASE("standing at stiff gains settles exactly on the equilibrium oracle") {
  RobotModel m;
  TerrainSpec t = flat_terrain();
  Rng rng(7);
  RobotState cur = reset_state(t, m, rng, 0.0);
  PdGains g{.kp = 20.0, .kd = 0.5};
  for (int i = 0; i < 200; ++i) cur = step(cur, Vec4d::Zero(), t, m, g).state;
  const double expect = settled_height_free(m, g.kp);
  INFO("settled ", cur.base_z, " oracle ", expect);
  CHECK(std::abs(cur.base_z - expect) < 0.02 * expect);
  CHECK(std::abs(cur.pitch) < 0.05);
}

TEST_CASE("standing at training gains holds height within the equilibrium bracket") {
  RobotModel m;
  TerrainSpec t = flat_terrain();
  Rng rng(7);
  RobotState cur = reset_state(t, m, rng, 0.0);
  PdGains g{.kp = 4.0, .kd = 0.2};
  std::vector<double> zs;
  for (int i = 0; i < 100; ++i) {
    cur = step(cur, Vec4d::Zero(), t, m, g).state;
    zs.push_back(cur.base_z);
  }
  double settled = 0.0;
  for (int i = 80; i < 100; ++i) settled += zs[i] / 20.0;
  // holds within +-10% of the settled value once the transient passes
  for (int i = 25; i < 100; ++i)
    CHECK(std::abs(zs[i] - settled) < 0.1 * settled);
  const double lo = settled_height_free(m, g.kp);
  const double hi = settled_height_pinned(m, g.kp);
  INFO("settled ", settled, " bracket [", lo, ", ", hi, "]");
  CHECK(settled > 0.9 * lo);
  CHECK(settled < 1.1 * hi);
  CHECK(std::abs(cur.pitch) < 0.2);
  CHECK(cur.foot_contact[0]);
  CHECK(cur.foot_contact[1]);
}

TEST_CASE("contact flags imply the foot sits at the surface within tolerance") {
  RobotModel m;
  TerrainSpec t = flat_terrain();
  Rng rng(8);
  RobotState cur = reset_state(t, m, rng, 0.02);
  PdGains g{.kp = 4.0, .kd = 0.2};
  for (int i = 0; i < 200; ++i) {
    cur = step(cur, Vec4d::Zero(), t, m, g).state;
    for (int leg = 0; leg < 2; ++leg) {
      if (cur.foot_contact[leg]) {
        const Vec2d p = foot_position(cur, m, leg);
        CHECK(p.y() - t.height_at(p.x()) <= 1e-3);
        CHECK(t.height_at(p.x()) - p.y() <= m.penetration_tolerance);
        CHECK(cur.foot_force[leg].y() >= 0.0);
      }
    }
  }
}

TEST_CASE("base energy is conserved in torque-free flight with massless feet") {
  RobotModel m;
  m.foot_mass = 0.0;  // decouples the legs entirely
  TerrainSpec t = flat_terrain();
  RobotState s;
  s.base_z = 3.0;
  s.base_vx = 1.0;
  s.pitch_rate = 2.0;
  s.q = m.default_pose;
  const double e0 = 0.5 * m.base_mass * (s.base_vx * s.base_vx) +
                    0.5 * m.base_inertia * s.pitch_rate * s.pitch_rate +
                    m.base_mass * m.gravity * s.base_z;
  RobotState cur = s;
  for (int i = 0; i < 10; ++i)  // 100 substeps
    cur = step(cur, Vec4d::Zero(), t, m, PdGains{1e-12 + 4.0, 0.05}).state;
  const double e1 =
      0.5 * m.base_mass * (cur.base_vx * cur.base_vx + cur.base_vz * cur.base_vz) +
      0.5 * m.base_inertia * cur.pitch_rate * cur.pitch_rate +
      m.base_mass * m.gravity * cur.base_z;
  CHECK(std::abs(e1 - e0) / std::abs(e0) < 0.01);
}

TEST_CASE("total energy drift stays small in torque-free flight with foot masses") {
  RobotModel m;
  TerrainSpec t = flat_terrain();
  RobotState s;
  s.base_z = 3.0;
  s.base_vx = 0.5;
  s.q = m.default_pose;
  s.qdot << 1.0, -0.5, 0.3, 0.8;
  const double e0 = mechanical_energy(s, m);
  RobotState cur = s;
  // gains act through the PD; emulate torque-free by zero target error is not
  // possible mid-swing, so drive with a tiny kp and rely on the energy budget
  RobotModel soft = m;
  PdGains g{.kp = 1e-9, .kd = 1e-9};
  for (int i = 0; i < 10; ++i)
    cur = step(cur, Vec4d::Zero(), t, soft, g, 0.02, 10).state;
  const double e1 = mechanical_energy(cur, m);
  CHECK(std::abs(e1 - e0) / std::abs(e0) < 0.01);
}

TEST_CASE("diverged integration reports the offending substep") {
  RobotModel m;
  m.contact_stiffness = 1e18;  // absurd stiffness forces a blow-up
  m.contact_damping = 0.0;
  TerrainSpec t = flat_terrain();
  Rng rng(3);
  RobotState s = reset_state(t, m, rng, 0.0);
  s.base_vz = -50.0;
  bool threw = false;
  try {
    RobotState cur = s;
    for (int i = 0; i < 50; ++i)
      cur = step(cur, Vec4d::Zero(), t, m, PdGains{4.0, 0.2}).state;
  } catch (const SimulationDiverged& e) {
    threw = true;
    CHECK(e.substep_index >= 0);
    CHECK(e.substep_index < 10);
  }
  CHECK(threw);
}

TEST_CASE("raycast: 45 degree ray over flat ground") {
  TerrainSpec t = flat_terrain();
  const double r =
      cast_ray(t, Vec2d(0.0, 0.3), Vec2d(std::sqrt(0.5), -std::sqrt(0.5)), 5.0);
  CHECK(std::abs(r - 0.3 * std::sqrt(2.0)) < 1e-9);
}

TEST_CASE("raycast: ray above the horizon misses") {
  TerrainSpec t = flat_terrain();
  const double r = cast_ray(t, Vec2d(0.0, 0.3), Vec2d(0.9, 0.1).normalized(), 2.0);
  CHECK(r == 2.0);
}

TEST_CASE("raycast: horizontal ray hits a step face at its grid edge") {
  TerrainSpec t = flat_terrain();
  // raise a ledge of height 0.2 starting exactly 0.5 m from the origin
  const int c0 = t.col(0.5);
  for (int c = c0; c < t.columns(); ++c) t.height[c] = 0.2;
  const double edge = t.col_left_edge(c0);
  const double r = cast_ray(t, Vec2d(0.0, 0.1), Vec2d(1.0, 0.0), 2.0);
  CHECK(std::abs(r - edge) < 1e-9);
}

TEST_CASE("raycast: ceiling underside is visible from below") {
  TerrainSpec t = flat_terrain();
  for (int c = t.col(0.4); c <= t.col(1.2); ++c) t.ceiling[c] = 0.25;
  const double r = cast_ray(t, Vec2d(0.5, 0.1), Vec2d(0.0, 1.0), 2.0);
  CHECK(std::abs(r - 0.15) < 1e-9);
}

TEST_CASE("raycasts agree with a fine-marching oracle on randomized scenes") {
  Rng rng(42);
  int checked = 0;
  for (int scene = 0; scene < 100; ++scene) {
    const TerrainKind kind =
        scene % 2 == 0 ? TerrainKind::flat : TerrainKind::step;
    TerrainSpec t = make_terrain(kind, static_cast<int>(rng.below(10)), rng);
    if (scene % 5 == 0)  // sprinkle a ceiling block
      for (int c = t.col(1.5); c <= t.col(2.2); ++c) t.ceiling[c] = 0.4;
    RobotState s;
    s.base_x = rng.uniform(0.0, 3.0);
    s.base_z = t.height_at(s.base_x) + rng.uniform(0.25, 0.6);
    s.pitch = rng.uniform(-0.3, 0.3);
    DepthCamera cam;
    const DepthScan scan = render_depth(s, t, cam);
    const double c = std::cos(s.pitch), sn = std::sin(s.pitch);
    const Vec2d origin(s.base_x + c * cam.mount_x - sn * cam.mount_z,
                       s.base_z + sn * cam.mount_x + c * cam.mount_z);
    for (int k = 0; k < cam.rays; k += 7) {
      const double a = s.pitch - cam.pitch_down +
                       cam.fov * (0.5 - static_cast<double>(k) / (cam.rays - 1));
      const double oracle = march_ray(t, origin, Vec2d(std::cos(a), std::sin(a)),
                                      cam.max_range);
      CHECK(std::abs(scan.ranges[k] - oracle) <= t.grid_resolution);
      ++checked;
    }
  }
  CHECK(checked >= 400);
}

TEST_CASE("privileged obs reads a flat height scan and the ceiling default") {
  RobotModel m;
  TerrainSpec t = flat_terrain();
  Rng rng(1);
  RobotState s = reset_state(t, m, rng, 0.0);
  const PrivObs obs = privileged_obs(s, t, 0.5, Vec4d::Zero());
  for (int i = 0; i < kScanPoints; ++i)
    CHECK(obs.height_scan[i] == doctest::Approx(-s.base_z).epsilon(1e-12));
  CHECK(obs.ceiling_height == kCeilingDefault);
  CHECK(obs.flatten().size() == kPrivDim);
}

TEST_CASE("privileged obs reports overhead clearance under a crawl block") {
  RobotModel m;
  Rng rng(2);
  TerrainSpec t = make_terrain(TerrainKind::flat, 0, rng);
  for (int c = t.col(0.3); c <= t.col(0.9); ++c) t.ceiling[c] = 0.20;
  RobotState s = reset_state(t, m, rng, 0.0);
  s.base_x = 0.6;
  const PrivObs obs = privileged_obs(s, t, 0.5, Vec4d::Zero());
  CHECK(obs.ceiling_height == doctest::Approx(0.20).epsilon(1e-12));
}

TEST_CASE("reset is deterministic and respects the noise scale") {
  RobotModel m;
  TerrainSpec t = flat_terrain();
  {
    Rng a(123), b(123);
    const RobotState sa = reset_state(t, m, a, 0.05);
    const RobotState sb = reset_state(t, m, b, 0.05);
    CHECK(sa.q == sb.q);
    CHECK(sa.base_z == sb.base_z);
    CHECK(sa.pitch == sb.pitch);
  }
  {
    Rng rng(5);
    const RobotState s = reset_state(t, m, rng, 0.0);
    CHECK(s.q == m.default_pose);
    CHECK(s.base_x == t.start_x);
  }
  {
    Rng rng(6);
    const RobotState s = reset_state(t, m, rng, 0.05);
    CHECK((s.q - m.default_pose).cwiseAbs().maxCoeff() <= 0.05);
  }
}

TEST_CASE("terrain curriculum endpoints and monotone difficulty") {
  CHECK(obstacle_dimension_for(TerrainKind::step, 0) == doctest::Approx(0.05));
  CHECK(obstacle_dimension_for(TerrainKind::gap, kMaxLevel) ==
        doctest::Approx(0.35));
  const double mid = obstacle_dimension_for(TerrainKind::crawl, 5);
  CHECK(mid < 0.35);
  CHECK(mid > 0.20);
  for (const auto kind : {TerrainKind::step, TerrainKind::gap,
                          TerrainKind::crawl, TerrainKind::hurdle}) {
    double prev = -1.0;
    for (int level = 0; level <= kMaxLevel; ++level) {
      double dim = obstacle_dimension_for(kind, level);
      if (kind == TerrainKind::crawl) dim = 0.35 - dim;  // harder = smaller
      CHECK(dim >= prev);
      prev = dim;
    }
  }
}

TEST_CASE("terrain text format round-trips") {
  Rng rng(11);
  const TerrainSpec t = make_terrain(TerrainKind::crawl, 4, rng);
  const std::string path = "/tmp/parkour_terrain_test.txt";
  t.save_text(path);
  const TerrainSpec u = TerrainSpec::load_text(path);
  CHECK(u.kind == t.kind);
  CHECK(u.difficulty == t.difficulty);
  CHECK(u.obstacle_dimension == t.obstacle_dimension);
  CHECK(u.height == t.height);
  CHECK(u.ceiling == t.ceiling);
  std::filesystem::remove(path);
}

TEST_CASE("identical seed and config give bitwise identical trajectories") {
  RobotModel m;
  EnvConfig cfg;
  Env a(m, cfg, 99), b(m, cfg, 99);
  a.reset(TerrainKind::step, 2);
  b.reset(TerrainKind::step, 2);
  PdGains g{.kp = 4.0, .kd = 0.1};
  Rng actions(4);
  for (int i = 0; i < 1000; ++i) {
    Vec4d act;
    for (int j = 0; j < 4; ++j) act[j] = actions.uniform(-0.5, 0.5);
    a.step(act, g);
    b.step(act, g);
    REQUIRE(a.state().base_x == b.state().base_x);
    REQUIRE(a.state().base_z == b.state().base_z);
    REQUIRE(a.state().q == b.state().q);
    REQUIRE(a.state().qdot == b.state().qdot);
  }
}

TEST_CASE("env depth cadence holds stale frames between renders") {
  RobotModel m;
  EnvConfig cfg;
  Env env(m, cfg, 77);
  env.reset(TerrainKind::flat, 0);
  CHECK(env.depth_fresh());  // rendered at reset
  PdGains g{.kp = 4.0, .kd = 0.2};
  int fresh = 0;
  for (int i = 1; i <= 20; ++i) {
    env.step(Vec4d::Zero(), g);
    if (env.depth_fresh()) {
      ++fresh;
      CHECK(i % cfg.depth_period == 0);
    }
  }
  CHECK(fresh == 4);
}

TEST_CASE("make_terrain rejects bad difficulty") {
  Rng rng(0);
  CHECK_THROWS_AS(make_terrain(TerrainKind::step, -1, rng), ConfigError);
  CHECK_THROWS_AS(make_terrain(TerrainKind::step, 99, rng), ConfigError);
}

}  // TEST_SUITE
