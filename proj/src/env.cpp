#include "ccfdm/env.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>

namespace ccfdm {

namespace {

constexpr double kPi = std::numbers::pi_v<double>;

double wrap_angle(double theta) {
  double t = std::remainder(theta, 2.0 * kPi);
  if (t <= -kPi) t += 2.0 * kPi;
  return t;
}

// Antialiased coverage of a signed distance: full inside, 1px linear band.
double coverage(double signed_dist) {
  return std::clamp(signed_dist + 0.5, 0.0, 1.0);
}

void blend_max(std::uint8_t* px, double cov, double intensity) {
  const double v = cov * intensity;
  const auto b = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
  if (b > *px) *px = b;
}

struct Canvas {
  std::uint8_t* img;
  std::int64_t size;

  double cx(std::int64_t c) const { return static_cast<double>(c) - 0.5 * static_cast<double>(size - 1); }
  double cy(std::int64_t r) const { return static_cast<double>(r) - 0.5 * static_cast<double>(size - 1); }

  void fill(std::uint8_t v) { std::fill(img, img + size * size, v); }

  void disc(double x, double y, double radius, double intensity) {
    for (std::int64_t r = 0; r < size; ++r) {
      for (std::int64_t c = 0; c < size; ++c) {
        const double dx = cx(c) - x;
        const double dy = cy(r) - y;
        const double d = std::sqrt(dx * dx + dy * dy);
        const double cov = coverage(radius - d);
        if (cov > 0.0) blend_max(img + r * size + c, cov, intensity);
      }
    }
  }

  void ring(double x, double y, double radius, double half_width, double intensity) {
    for (std::int64_t r = 0; r < size; ++r) {
      for (std::int64_t c = 0; c < size; ++c) {
        const double dx = cx(c) - x;
        const double dy = cy(r) - y;
        const double d = std::sqrt(dx * dx + dy * dy);
        const double cov = coverage(half_width - std::abs(d - radius));
        if (cov > 0.0) blend_max(img + r * size + c, cov, intensity);
      }
    }
  }

  // Capsule from (ax,ay) to (bx,by) with the given half width.
  void segment(double ax, double ay, double bx, double by, double half_width, double intensity) {
    const double ux = bx - ax, uy = by - ay;
    const double len2 = ux * ux + uy * uy;
    for (std::int64_t r = 0; r < size; ++r) {
      for (std::int64_t c = 0; c < size; ++c) {
        const double px = cx(c) - ax;
        const double py = cy(r) - ay;
        double t = len2 > 0.0 ? (px * ux + py * uy) / len2 : 0.0;
        t = std::clamp(t, 0.0, 1.0);
        const double dx = px - t * ux;
        const double dy = py - t * uy;
        const double d = std::sqrt(dx * dx + dy * dy);
        const double cov = coverage(half_width - d);
        if (cov > 0.0) blend_max(img + r * size + c, cov, intensity);
      }
    }
  }
};

void write_u64(std::ostream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
std::uint64_t read_u64(std::istream& in) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw IoError("env state: truncated");
  return v;
}
void write_f64(std::ostream& out, double v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
double read_f64(std::istream& in) {
  double v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw IoError("env state: truncated");
  return v;
}

}  // namespace

PixelControlEnv::PixelControlEnv(std::int64_t render_size, std::int64_t frame_stack,
                                 std::int64_t action_repeat)
    : render_size_(render_size), frame_stack_(frame_stack), action_repeat_(action_repeat) {
  if (render_size < 16) throw ConfigError("env: render size must be at least 16");
  if (frame_stack < 1 || action_repeat < 1) throw ConfigError("env: stack/repeat must be positive");
}

std::vector<std::uint8_t> PixelControlEnv::reset(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  do_reset(rng);
  step_count_ = 0;
  // initial frame repeated across the whole stack
  std::vector<std::uint8_t> frame(static_cast<std::size_t>(render_size_ * render_size_));
  render_frame(frame.data());
  stack_.resize(static_cast<std::size_t>(obs_bytes()));
  for (std::int64_t f = 0; f < frame_stack_; ++f) {
    std::copy(frame.begin(), frame.end(), stack_.begin() + f * render_size_ * render_size_);
  }
  return stack_;
}

EnvStep PixelControlEnv::step(const std::vector<double>& action) {
  if (static_cast<std::int64_t>(action.size()) != action_dim()) {
    throw ConfigError("env: action dimension mismatch");
  }
  if (episode_done()) throw ConfigError("env: episode already finished; reset first");
  std::vector<double> clamped(action.size());
  bool warned = false;
  for (std::size_t i = 0; i < action.size(); ++i) {
    const double a = action[i];
    clamped[i] = std::clamp(a, -1.0, 1.0);
    if (a < -1.0 || a > 1.0) warned = true;
  }
  if (warned) ++clamp_warnings_;

  const double reward = do_control_step(clamped.data());
  ++step_count_;
  push_frame();
  return {stack_, reward, episode_done()};
}

std::vector<std::uint8_t> PixelControlEnv::render() const {
  std::vector<std::uint8_t> frame(static_cast<std::size_t>(render_size_ * render_size_));
  render_frame(frame.data());
  return frame;
}

void PixelControlEnv::push_frame() {
  const std::int64_t fb = render_size_ * render_size_;
  std::copy(stack_.begin() + fb, stack_.end(), stack_.begin());
  render_frame(stack_.data() + (frame_stack_ - 1) * fb);
}

void PixelControlEnv::save_state(std::ostream& out) const {
  write_u64(out, static_cast<std::uint64_t>(step_count_));
  write_u64(out, static_cast<std::uint64_t>(clamp_warnings_));
  write_u64(out, stack_.size());
  out.write(reinterpret_cast<const char*>(stack_.data()),
            static_cast<std::streamsize>(stack_.size()));
  save_physics(out);
}

void PixelControlEnv::load_state(std::istream& in) {
  step_count_ = static_cast<std::int64_t>(read_u64(in));
  clamp_warnings_ = static_cast<std::int64_t>(read_u64(in));
  const auto n = read_u64(in);
  if (n != static_cast<std::uint64_t>(obs_bytes())) throw IoError("env state: stack size mismatch");
  stack_.resize(n);
  in.read(reinterpret_cast<char*>(stack_.data()), static_cast<std::streamsize>(n));
  if (!in) throw IoError("env state: truncated");
  load_physics(in);
}

// ---------------------------------------------------------------------------
// pendulum

void PendulumEnv::do_reset(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> angle(-kPi, kPi);
  theta_ = wrap_angle(angle(rng));
  omega_ = 0.0;
}

void PendulumEnv::set_state(double theta, double omega) {
  theta_ = wrap_angle(theta);
  omega_ = std::clamp(omega, -kMaxSpeed, kMaxSpeed);
}

double PendulumEnv::energy() const {
  return 0.5 * omega_ * omega_ + kGravity * (1.0 + std::cos(theta_));
}

double PendulumEnv::do_control_step(const double* action) {
  const double torque = kMaxTorque * action[0];
  double reward_acc = 0.0;
  const double dt = kPhysicsDt;
  for (std::int64_t r = 0; r < action_repeat_; ++r) {
    // velocity Verlet; gravity pushes away from upright (theta measured from up)
    const double a0 = kGravity * std::sin(theta_) + torque - damping_ * omega_;
    theta_ = wrap_angle(theta_ + dt * omega_ + 0.5 * dt * dt * a0);
    const double a1 = kGravity * std::sin(theta_) + torque - damping_ * omega_;
    omega_ = std::clamp(omega_ + 0.5 * dt * (a0 + a1), -kMaxSpeed, kMaxSpeed);
    reward_acc += 0.5 * (std::cos(theta_) + 1.0);
  }
  return reward_acc / static_cast<double>(action_repeat_);
}

void PendulumEnv::render_frame(std::uint8_t* img) const {
  Canvas cv{img, render_size_};
  const double s = static_cast<double>(render_size_);
  const double rod_len = 0.36 * s;
  const double tip_x = rod_len * std::sin(theta_);
  const double tip_y = -rod_len * std::cos(theta_);  // screen y grows downward
  cv.fill(24);
  cv.segment(0.0, 0.0, tip_x, tip_y, std::max(1.5, 0.030 * s), 150.0);
  cv.disc(tip_x, tip_y, std::max(2.0, 0.065 * s), 255.0);
  cv.disc(0.0, 0.0, std::max(1.5, 0.030 * s), 90.0);
}

void PendulumEnv::save_physics(std::ostream& out) const {
  write_f64(out, theta_);
  write_f64(out, omega_);
}

void PendulumEnv::load_physics(std::istream& in) {
  theta_ = read_f64(in);
  omega_ = read_f64(in);
}

// ---------------------------------------------------------------------------
// point mass

void PointMassEnv::do_reset(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> pos(0.12, 0.88);
  px_ = pos(rng);
  py_ = pos(rng);
  vx_ = vy_ = 0.0;
  // redraw the goal until it is not trivially on top of the start
  for (int tries = 0; tries < 64; ++tries) {
    gx_ = pos(rng);
    gy_ = pos(rng);
    const double dx = gx_ - px_, dy = gy_ - py_;
    if (dx * dx + dy * dy > 0.09) break;  // at least 0.3 apart
  }
}

double PointMassEnv::do_control_step(const double* action) {
  const double dt = kPhysicsDt;
  for (std::int64_t r = 0; r < action_repeat_; ++r) {
    vx_ += dt * (kAccel * action[0] - kDrag * vx_);
    vy_ += dt * (kAccel * action[1] - kDrag * vy_);
    px_ += dt * vx_;
    py_ += dt * vy_;
    if (px_ < 0.03) { px_ = 0.03; vx_ = 0.0; }
    if (px_ > 0.97) { px_ = 0.97; vx_ = 0.0; }
    if (py_ < 0.03) { py_ = 0.03; vy_ = 0.0; }
    if (py_ > 0.97) { py_ = 0.97; vy_ = 0.0; }
  }
  const double dx = px_ - gx_, dy = py_ - gy_;
  return (dx * dx + dy * dy) < kGoalRadius * kGoalRadius ? 1.0 : 0.0;
}

void PointMassEnv::render_frame(std::uint8_t* img) const {
  Canvas cv{img, render_size_};
  const double s = static_cast<double>(render_size_);
  const double scale = 0.92 * s;
  const double mx = (px_ - 0.5) * scale;
  const double my = (py_ - 0.5) * scale;
  const double ggx = (gx_ - 0.5) * scale;
  const double ggy = (gy_ - 0.5) * scale;
  cv.fill(16);
  cv.ring(ggx, ggy, kGoalRadius * scale + 0.035 * s, std::max(1.0, 0.016 * s), 140.0);
  cv.disc(mx, my, std::max(2.0, 0.045 * s), 255.0);
}

void PointMassEnv::save_physics(std::ostream& out) const {
  write_f64(out, px_);
  write_f64(out, py_);
  write_f64(out, vx_);
  write_f64(out, vy_);
  write_f64(out, gx_);
  write_f64(out, gy_);
}

void PointMassEnv::load_physics(std::istream& in) {
  px_ = read_f64(in);
  py_ = read_f64(in);
  vx_ = read_f64(in);
  vy_ = read_f64(in);
  gx_ = read_f64(in);
  gy_ = read_f64(in);
}

std::unique_ptr<PixelControlEnv> make_env(const std::string& name, std::int64_t render_size,
                                          std::int64_t frame_stack, std::int64_t action_repeat) {
  if (name == "pendulum") return std::make_unique<PendulumEnv>(render_size, frame_stack, action_repeat);
  if (name == "pointmass") return std::make_unique<PointMassEnv>(render_size, frame_stack, action_repeat);
  throw ConfigError("unknown environment: " + name);
}

}  // namespace ccfdm
