#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "ccfdm/common.hpp"

namespace ccfdm {

struct EnvStep {
  std::vector<std::uint8_t> obs;  // stacked frames, frame_stack * H * W
  double reward = 0.0;
  bool done = false;
};

// Pixel-rendered continuous-control environment with frame stacking and
// action repeat. Episodes last exactly 250 control steps; actions live in
// [-1,1]^dim and are clamped (with a warning counter) if outside.
class PixelControlEnv {
 public:
  static constexpr std::int64_t kEpisodeLen = 250;
  static constexpr double kPhysicsDt = 0.05;

  PixelControlEnv(std::int64_t render_size, std::int64_t frame_stack, std::int64_t action_repeat);
  virtual ~PixelControlEnv() = default;

  virtual std::int64_t action_dim() const = 0;
  virtual std::string name() const = 0;

  std::vector<std::uint8_t> reset(std::uint64_t seed);
  EnvStep step(const std::vector<double>& action);

  // Renders the current physical state; pure function of that state.
  std::vector<std::uint8_t> render() const;

  std::int64_t render_size() const { return render_size_; }
  std::int64_t frame_stack() const { return frame_stack_; }
  std::int64_t action_repeat() const { return action_repeat_; }
  std::int64_t obs_bytes() const { return frame_stack_ * render_size_ * render_size_; }
  std::int64_t step_count() const { return step_count_; }
  std::int64_t clamp_warnings() const { return clamp_warnings_; }
  bool episode_done() const { return step_count_ >= kEpisodeLen; }

  void save_state(std::ostream& out) const;
  void load_state(std::istream& in);

 protected:
  virtual void do_reset(std::mt19937_64& rng) = 0;
  // One control step: integrates action_repeat physics sub-steps, returns the
  // control-step reward.
  virtual double do_control_step(const double* action) = 0;
  virtual void render_frame(std::uint8_t* img) const = 0;
  virtual void save_physics(std::ostream& out) const = 0;
  virtual void load_physics(std::istream& in) = 0;

  std::int64_t render_size_;
  std::int64_t frame_stack_;
  std::int64_t action_repeat_;
  std::int64_t step_count_ = 0;
  std::int64_t clamp_warnings_ = 0;

 private:
  void push_frame();
  std::vector<std::uint8_t> stack_;  // oldest frame first
};

// Dense-reward pendulum swing-up. theta is measured from upright (theta=0 is
// up, theta=pi hangs down) and wrapped to (-pi, pi]; |omega| <= 8. Reward per
// control step is (cos theta + 1)/2 averaged over the action repeats.
//
// The default task carries viscous damping: without dissipation any noisy
// torque ratchets energy into full circulation, and a windmilling pendulum
// collects half reward. The undamped configuration (damping = 0) remains
// constructible for integrator checks.
class PendulumEnv final : public PixelControlEnv {
 public:
  static constexpr double kGravity = 10.0;  // g/l with unit mass and length
  static constexpr double kMaxTorque = 2.0;
  static constexpr double kMaxSpeed = 8.0;
  static constexpr double kDamping = 0.2;

  PendulumEnv(std::int64_t render_size, std::int64_t frame_stack, std::int64_t action_repeat,
              double damping = kDamping)
      : PixelControlEnv(render_size, frame_stack, action_repeat), damping_(damping) {}

  std::int64_t action_dim() const override { return 1; }
  std::string name() const override { return "pendulum"; }

  double theta() const { return theta_; }
  double omega() const { return omega_; }
  void set_state(double theta, double omega);
  // Energy measured from the bottom: 0.5*w^2 + g*(1+cos theta) >= 0.
  double energy() const;

 protected:
  void do_reset(std::mt19937_64& rng) override;
  double do_control_step(const double* action) override;
  void render_frame(std::uint8_t* img) const override;
  void save_physics(std::ostream& out) const override;
  void load_physics(std::istream& in) override;

 private:
  double theta_ = 0.0;
  double omega_ = 0.0;
  double damping_ = kDamping;
};

// Sparse-reward point-mass reacher in the unit box: reward 1 when the mass is
// within 0.05 of the goal at the end of a control step, else 0.
class PointMassEnv final : public PixelControlEnv {
 public:
  static constexpr double kGoalRadius = 0.05;
  static constexpr double kAccel = 2.0;
  static constexpr double kDrag = 3.0;

  PointMassEnv(std::int64_t render_size, std::int64_t frame_stack, std::int64_t action_repeat)
      : PixelControlEnv(render_size, frame_stack, action_repeat) {}

  std::int64_t action_dim() const override { return 2; }
  std::string name() const override { return "pointmass"; }

  double px() const { return px_; }
  double py() const { return py_; }
  double goal_x() const { return gx_; }
  double goal_y() const { return gy_; }

 protected:
  void do_reset(std::mt19937_64& rng) override;
  double do_control_step(const double* action) override;
  void render_frame(std::uint8_t* img) const override;
  void save_physics(std::ostream& out) const override;
  void load_physics(std::istream& in) override;

 private:
  double px_ = 0.5, py_ = 0.5;
  double vx_ = 0.0, vy_ = 0.0;
  double gx_ = 0.5, gy_ = 0.5;
};

std::unique_ptr<PixelControlEnv> make_env(const std::string& name, std::int64_t render_size,
                                          std::int64_t frame_stack, std::int64_t action_repeat);

}  // namespace ccfdm
