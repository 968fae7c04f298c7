// Classic-control physics using the community reference constants
// (CartPole-v1, MountainCar-v0, Acrobot-v1) plus a synthetic continuous task.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "evorl/env/env.hpp"

namespace evorl::env {

namespace {

constexpr double kPi = std::numbers::pi;

void check_discrete(const ActionSpace& space, const Action& a) {
  if (a.index < 0 || a.index >= space.n) {
    throw InvalidAction("discrete action " + std::to_string(a.index) + " outside [0, " +
                        std::to_string(space.n) + ")");
  }
}

// ---- CartPole ----------------------------------------------------------------
// physics = {x, x_dot, theta, theta_dot}
class CartPole final : public Dynamics {
 public:
  static constexpr double kGravity = 9.8;
  static constexpr double kMassCart = 1.0;
  static constexpr double kMassPole = 0.1;
  static constexpr double kTotalMass = kMassCart + kMassPole;
  static constexpr double kHalfLength = 0.5;
  static constexpr double kPoleMassLength = kMassPole * kHalfLength;
  static constexpr double kForceMag = 10.0;
  static constexpr double kTau = 0.02;
  static constexpr double kThetaThreshold = 12.0 * 2.0 * kPi / 360.0;
  static constexpr double kXThreshold = 2.4;
  static constexpr double kInitRange = 0.05;

  CartPole() : spec_{kCartPole, 4, ActionSpace::discrete(2), 500} {}

  const EnvSpec& spec() const override { return spec_; }

  std::vector<double> initial_physics(Rng& rng) const override {
    std::vector<double> s(4);
    for (double& v : s) v = uniform(rng, -kInitRange, kInitRange);
    return s;
  }

  std::vector<double> observe(std::span<const double> p) const override { return {p.begin(), p.end()}; }

  double advance(std::vector<double>& s, const Action& a, bool& terminated) const override {
    check_discrete(spec_.action_space, a);
    const double force = a.index == 1 ? kForceMag : -kForceMag;
    const double cos_t = std::cos(s[2]);
    const double sin_t = std::sin(s[2]);
    const double temp = (force + kPoleMassLength * s[3] * s[3] * sin_t) / kTotalMass;
    const double theta_acc = (kGravity * sin_t - cos_t * temp) /
                             (kHalfLength * (4.0 / 3.0 - kMassPole * cos_t * cos_t / kTotalMass));
    const double x_acc = temp - kPoleMassLength * theta_acc * cos_t / kTotalMass;
    s[0] += kTau * s[1];
    s[1] += kTau * x_acc;
    s[2] += kTau * s[3];
    s[3] += kTau * theta_acc;
    terminated = is_terminal(s);
    return 1.0;
  }

  bool is_terminal(std::span<const double> s) const override {
    return s[0] < -kXThreshold || s[0] > kXThreshold || s[2] < -kThetaThreshold || s[2] > kThetaThreshold;
  }

 private:
  EnvSpec spec_;
};

// ---- MountainCar ---------------------------------------------------------------
// physics = {position, velocity}
class MountainCar final : public Dynamics {
 public:
  static constexpr double kMinPosition = -1.2;
  static constexpr double kMaxPosition = 0.6;
  static constexpr double kMaxSpeed = 0.07;
  static constexpr double kGoalPosition = 0.5;
  static constexpr double kGoalVelocity = 0.0;
  static constexpr double kForce = 0.001;
  static constexpr double kGravity = 0.0025;

  MountainCar() : spec_{kMountainCar, 2, ActionSpace::discrete(3), 200} {}

  const EnvSpec& spec() const override { return spec_; }

  std::vector<double> initial_physics(Rng& rng) const override { return {uniform(rng, -0.6, -0.4), 0.0}; }

  std::vector<double> observe(std::span<const double> p) const override { return {p.begin(), p.end()}; }

  double advance(std::vector<double>& s, const Action& a, bool& terminated) const override {
    check_discrete(spec_.action_space, a);
    double position = s[0];
    double velocity = s[1];
    velocity += (a.index - 1) * kForce + std::cos(3.0 * position) * (-kGravity);
    velocity = std::clamp(velocity, -kMaxSpeed, kMaxSpeed);
    position += velocity;
    position = std::clamp(position, kMinPosition, kMaxPosition);
    if (position == kMinPosition && velocity < 0.0) velocity = 0.0;
    s[0] = position;
    s[1] = velocity;
    terminated = is_terminal(s);
    return -1.0;
  }

  bool is_terminal(std::span<const double> s) const override {
    return s[0] >= kGoalPosition && s[1] >= kGoalVelocity;
  }

 private:
  EnvSpec spec_;
};

// ---- Acrobot ---------------------------------------------------------------------
// physics = {theta1, theta2, dtheta1, dtheta2}; "book" dynamics, RK4, dt = 0.2.
class Acrobot final : public Dynamics {
 public:
  static constexpr double kDt = 0.2;
  static constexpr double kLinkLength1 = 1.0;
  static constexpr double kLinkMass1 = 1.0;
  static constexpr double kLinkMass2 = 1.0;
  static constexpr double kLinkCom1 = 0.5;
  static constexpr double kLinkCom2 = 0.5;
  static constexpr double kLinkMoi = 1.0;
  static constexpr double kMaxVel1 = 4.0 * kPi;
  static constexpr double kMaxVel2 = 9.0 * kPi;
  static constexpr double kGravity = 9.8;
  static constexpr double kTorques[3] = {-1.0, 0.0, 1.0};

  Acrobot() : spec_{kAcrobot, 6, ActionSpace::discrete(3), 500} {}

  const EnvSpec& spec() const override { return spec_; }

  std::vector<double> initial_physics(Rng& rng) const override {
    std::vector<double> s(4);
    for (double& v : s) v = uniform(rng, -0.1, 0.1);
    return s;
  }

  std::vector<double> observe(std::span<const double> s) const override {
    return {std::cos(s[0]), std::sin(s[0]), std::cos(s[1]), std::sin(s[1]), s[2], s[3]};
  }

  double advance(std::vector<double>& s, const Action& a, bool& terminated) const override {
    check_discrete(spec_.action_space, a);
    const double torque = kTorques[a.index];
    std::array<double, 4> y{s[0], s[1], s[2], s[3]};
    auto k1 = derivs(y, torque);
    auto k2 = derivs(offset(y, k1, kDt / 2.0), torque);
    auto k3 = derivs(offset(y, k2, kDt / 2.0), torque);
    auto k4 = derivs(offset(y, k3, kDt), torque);
    for (int i = 0; i < 4; ++i) y[i] += kDt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    s[0] = wrap(y[0]);
    s[1] = wrap(y[1]);
    s[2] = std::clamp(y[2], -kMaxVel1, kMaxVel1);
    s[3] = std::clamp(y[3], -kMaxVel2, kMaxVel2);
    terminated = is_terminal(s);
    return terminated ? 0.0 : -1.0;
  }

  bool is_terminal(std::span<const double> s) const override {
    return -std::cos(s[0]) - std::cos(s[1] + s[0]) > 1.0;
  }

 private:
  static std::array<double, 4> offset(const std::array<double, 4>& y, const std::array<double, 4>& k, double h) {
    return {y[0] + h * k[0], y[1] + h * k[1], y[2] + h * k[2], y[3] + h * k[3]};
  }

  static double wrap(double x) {
    const double span = 2.0 * kPi;
    while (x > kPi) x -= span;
    while (x < -kPi) x += span;
    return x;
  }

  static std::array<double, 4> derivs(const std::array<double, 4>& s, double torque) {
    const double m1 = kLinkMass1, m2 = kLinkMass2, l1 = kLinkLength1;
    const double lc1 = kLinkCom1, lc2 = kLinkCom2, i1 = kLinkMoi, i2 = kLinkMoi, g = kGravity;
    const double theta1 = s[0], theta2 = s[1], dtheta1 = s[2], dtheta2 = s[3];
    const double d1 = m1 * lc1 * lc1 + m2 * (l1 * l1 + lc2 * lc2 + 2.0 * l1 * lc2 * std::cos(theta2)) + i1 + i2;
    const double d2 = m2 * (lc2 * lc2 + l1 * lc2 * std::cos(theta2)) + i2;
    const double phi2 = m2 * lc2 * g * std::cos(theta1 + theta2 - kPi / 2.0);
    const double phi1 = -m2 * l1 * lc2 * dtheta2 * dtheta2 * std::sin(theta2) -
                        2.0 * m2 * l1 * lc2 * dtheta2 * dtheta1 * std::sin(theta2) +
                        (m1 * lc1 + m2 * l1) * g * std::cos(theta1 - kPi / 2.0) + phi2;
    const double ddtheta2 = (torque + d2 / d1 * phi1 - m2 * l1 * lc2 * dtheta1 * dtheta1 * std::sin(theta2) - phi2) /
                            (m2 * lc2 * lc2 + i2 - d2 * d2 / d1);
    const double ddtheta1 = -(d2 * ddtheta2 + phi1) / d1;
    return {dtheta1, dtheta2, ddtheta1, ddtheta2};
  }

  EnvSpec spec_;
};

// ---- LinearReacher -----------------------------------------------------------------
// 2-D point mass steered toward a fixed random target; never terminates.
// physics = {px, py, vx, vy, tx, ty}
class LinearReacher final : public Dynamics {
 public:
  static constexpr double kDamping = 0.9;
  static constexpr double kGain = 0.5;
  static constexpr double kDt = 0.1;

  LinearReacher() : spec_{kLinearReacher, 6, ActionSpace::continuous({-1.0, -1.0}, {1.0, 1.0}), 100} {}

  const EnvSpec& spec() const override { return spec_; }

  std::vector<double> initial_physics(Rng& rng) const override {
    return {uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0), 0.0, 0.0, uniform(rng, -1.0, 1.0),
            uniform(rng, -1.0, 1.0)};
  }

  std::vector<double> observe(std::span<const double> s) const override {
    return {s[0], s[1], s[2], s[3], s[4] - s[0], s[5] - s[1]};
  }

  double advance(std::vector<double>& s, const Action& a, bool& terminated) const override {
    if (a.values.size() != 2) throw InvalidAction("LinearReacher expects a 2-dimensional action");
    for (double v : a.values) {
      if (!std::isfinite(v)) throw InvalidAction("non-finite continuous action");
    }
    for (int i = 0; i < 2; ++i) {
      const double u = std::clamp(a.values[i], spec_.action_space.low[i], spec_.action_space.high[i]);
      s[2 + i] = kDamping * s[2 + i] + kGain * u;
      s[i] = std::clamp(s[i] + kDt * s[2 + i], -1.0, 1.0);
    }
    terminated = false;
    return -std::hypot(s[4] - s[0], s[5] - s[1]);
  }

  bool is_terminal(std::span<const double>) const override { return false; }

 private:
  EnvSpec spec_;
};

}  // namespace

std::unique_ptr<Dynamics> make_dynamics(const std::string& env_id) {
  if (env_id == kCartPole) return std::make_unique<CartPole>();
  if (env_id == kMountainCar) return std::make_unique<MountainCar>();
  if (env_id == kAcrobot) return std::make_unique<Acrobot>();
  if (env_id == kLinearReacher) return std::make_unique<LinearReacher>();
  throw UnknownEnvironment("unknown environment '" + env_id + "'");
}

}  // namespace evorl::env
