// Copyright 2026 The wormcrawl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "wormcrawl/simulation.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

namespace wormcrawl {

namespace {

constexpr std::array<Eigen::Index, 2> kVelocityRow = {kV1, kV2};

int sign_of(double v) { return (v > 0) - (v < 0); }

bool is_identically_zero(const SignalSpec& s) {
  switch (s.kind) {
    case SignalKind::Constant:
      return s.bias == 0;
    case SignalKind::Sine:
    case SignalKind::Square:
      return s.low == 0 && s.high == 0;
  }
  return false;
}

void check_friction_range(const SignalSpec& s, double lo, double hi, const char* name) {
  if (is_identically_zero(s)) return;  // frictionless override
  constexpr double slack = 1e-12;
  if (s.lo() < lo - slack || s.hi() > hi + slack) {
    throw InvalidParameter(std::string(name) + ": friction coefficient leaves [" +
                           format_double(lo) + ", " + format_double(hi) + "]");
  }
}

}  // namespace

// --- signals ---------------------------------------------------------------

SignalSpec SignalSpec::sine(double freq, double amplitude, double bias, double phase) {
  return {SignalKind::Sine, freq, amplitude, bias, phase, 0.5, 0.0, 0.0};
}

SignalSpec SignalSpec::square(double freq, double lo, double hi, double phase, double duty) {
  return {SignalKind::Square, freq, 0.5 * (hi - lo), 0.5 * (hi + lo), phase, duty, lo, hi};
}

SignalSpec SignalSpec::constant(double value) {
  return {SignalKind::Constant, 0.0, 0.0, value, 0.0, 0.5, 0.0, 0.0};
}

double SignalSpec::lo() const {
  if (kind == SignalKind::Square) return std::min(low, high);
  if (kind == SignalKind::Constant) return bias;
  return bias - std::abs(amplitude);
}

double SignalSpec::hi() const {
  if (kind == SignalKind::Square) return std::max(low, high);
  if (kind == SignalKind::Constant) return bias;
  return bias + std::abs(amplitude);
}

void SignalSpec::validate() const {
  if (!std::isfinite(freq) || freq < 0) throw InvalidParameter("freq: must be >= 0");
  if (!std::isfinite(amplitude)) throw InvalidParameter("amplitude: must be finite");
  if (!std::isfinite(bias)) throw InvalidParameter("bias: must be finite");
  if (!std::isfinite(phase)) throw InvalidParameter("phase: must be finite");
  if (!std::isfinite(low) || !std::isfinite(high)) {
    throw InvalidParameter("low: square levels must be finite");
  }
  if (kind == SignalKind::Square && !(duty > 0 && duty < 1)) {
    throw InvalidParameter("duty: must lie in (0, 1)");
  }
}

double sample_signal(const SignalSpec& spec, std::int64_t n, double T) {
  const double t = static_cast<double>(n) * T;
  switch (spec.kind) {
    case SignalKind::Sine:
      return spec.bias +
             spec.amplitude * std::sin(2.0 * std::numbers::pi * spec.freq * t + spec.phase);
    case SignalKind::Square: {
      const double cycles = spec.freq * t + spec.phase / (2.0 * std::numbers::pi);
      const double frac = cycles - std::floor(cycles);
      return frac < spec.duty ? spec.high : spec.low;
    }
    case SignalKind::Constant:
      return spec.bias;
  }
  return spec.bias;
}

void FrictionMode::validate() const {
  if (variant != FrictionVariant::Karnopp) return;
  if (!(eps_v > 0)) throw InvalidParameter("eps_v: must be positive in Karnopp mode");
  if (!(mu_static_scale > 0)) throw InvalidParameter("mu_static_scale: must be positive");
}

double SimTrace::duration() const {
  if (states.empty()) return 0.0;
  return static_cast<double>(states.size() - 1) * T;
}

// --- plant -----------------------------------------------------------------

StateVec step(const DiscreteLTI& d, const StateVec& x, const Eigen::VectorXd& u) {
  if (u.size() != d.Bd.cols()) {
    throw DimensionMismatch("step: input has " + std::to_string(u.size()) +
                            " entries, plant expects " + std::to_string(d.Bd.cols()));
  }
  return d.Ad * x + d.Bd * u;
}

FrictionPlant::FrictionPlant(const RobotParams& params, double T, FrictionMode mode)
    : params_(params), mode_(mode), discrete_(zoh_discretize(build_mimo(params), T)) {
  mode_.validate();
}

FrictionPlant::Result FrictionPlant::advance(StateVec& x, double fa, double mu1,
                                             double mu2) const {
  if (mode_.variant == FrictionVariant::Karnopp) return karnopp(x, fa, mu1, mu2);
  Result r;
  r.f1 = friction_force(x(kV1), mu1, params_.m1, params_.g);
  r.f2 = friction_force(x(kV2), mu2, params_.m2, params_.g);
  r.next = discrete_.Ad * x + discrete_.Bd.col(0) * fa + discrete_.Bd.col(1) * r.f1 +
           discrete_.Bd.col(2) * r.f2;
  return r;
}

FrictionPlant::Result FrictionPlant::karnopp(StateVec& x, double fa, double mu1,
                                             double mu2) const {
  enum class Role { Slide, Hold, Stop, Fixed };
  const std::array<double, 2> kinetic = {mu1 * params_.m1 * params_.g,
                                         mu2 * params_.m2 * params_.g};
  std::array<Role, 2> role{};
  std::array<double, 2> f{};
  std::array<int, 2> dir{};

  for (int i = 0; i < 2; ++i) {
    const double v = x(kVelocityRow[i]);
    if (std::abs(v) < mode_.eps_v) {
      x(kVelocityRow[i]) = 0.0;
      role[i] = Role::Hold;
    } else {
      dir[i] = sign_of(v);
      role[i] = Role::Slide;
      f[i] = dir[i] * kinetic[i];
    }
  }

  const auto& Ad = discrete_.Ad;
  const auto& Bd = discrete_.Bd;
  const StateVec drift = Ad * x + Bd.col(0) * fa;
  auto next_velocity = [&](int i) {
    const Eigen::Index row = kVelocityRow[i];
    return drift(row) + Bd(row, 1) * f[0] + Bd(row, 2) * f[1];
  };

  for (int i = 0; i < 2; ++i) {
    if (role[i] == Role::Slide && next_velocity(i) * dir[i] < 0) role[i] = Role::Stop;
  }

  // Blocks held at rest or brought to rest pick the friction that zeroes their
  // velocity at the end of the step; the others keep their fixed friction.
  for (int pass = 0; pass < 4; ++pass) {
    std::array<int, 2> solve{};
    int count = 0;
    for (int i = 0; i < 2; ++i) {
      if (role[i] == Role::Hold || role[i] == Role::Stop) solve[count++] = i;
    }
    if (count == 0) break;

    Eigen::Matrix2d M = Eigen::Matrix2d::Identity();
    Eigen::Vector2d rhs = Eigen::Vector2d::Zero();
    for (int a = 0; a < count; ++a) {
      const int i = solve[a];
      const Eigen::Index row = kVelocityRow[i];
      rhs(a) = -drift(row);
      for (int j = 0; j < 2; ++j) {
        const bool unknown = (count == 2) || (j == i);
        if (unknown) {
          M(a, count == 2 ? j : 0) = Bd(row, 1 + j);
        } else {
          rhs(a) -= Bd(row, 1 + j) * f[j];
        }
      }
    }
    Eigen::Vector2d sol;
    if (count == 2) {
      sol = M.partialPivLu().solve(rhs);
    } else {
      sol(0) = rhs(0) / M(0, 0);
    }
    for (int a = 0; a < count; ++a) f[solve[a]] = sol(a);

    bool changed = false;
    for (int a = 0; a < count; ++a) {
      const int i = solve[a];
      if (role[i] == Role::Hold) {
        if (std::abs(f[i]) > mode_.mu_static_scale * kinetic[i]) {
          f[i] = sign_of(f[i]) * kinetic[i];
          role[i] = Role::Fixed;
          changed = true;
        }
      } else {  // Stop
        const double along = f[i] * dir[i];
        if (along < 0) {
          f[i] = 0.0;  // the block reverses within the step; friction stays off
          role[i] = Role::Fixed;
          changed = true;
        } else if (along > kinetic[i]) {
          f[i] = dir[i] * kinetic[i];
          role[i] = Role::Fixed;
          changed = true;
        }
      }
    }
    if (!changed) break;
  }

  Result r;
  r.f1 = f[0];
  r.f2 = f[1];
  r.next = drift + Bd.col(1) * f[0] + Bd.col(2) * f[1];
  for (int i = 0; i < 2; ++i) {
    if (role[i] == Role::Hold || role[i] == Role::Stop) r.next(kVelocityRow[i]) = 0.0;
  }
  return r;
}

Eigen::Vector2d friction_acceleration(const InputSample& u, const RobotParams& params) {
  return {-u.f1 / params.m1, -u.f2 / params.m2};
}

void check_friction_dissipation(const StateVec& x, const InputSample& u,
                                const RobotParams& params) {
  const Eigen::Vector2d acc = friction_acceleration(u, params);
  if (acc(0) * x(kV1) > 0 || acc(1) * x(kV2) > 0) {
    std::ostringstream msg;
    msg << "friction adds power: a_f = (" << acc(0) << ", " << acc(1) << "), v = (" << x(kV1)
        << ", " << x(kV2) << ")";
    throw InvariantViolation(msg.str());
  }
}

// --- runs ------------------------------------------------------------------

std::int64_t step_count(double duration, double T) {
  if (!(T > 0) || !std::isfinite(T)) throw InvalidParameter("T: sample period must be positive");
  if (!(duration > 0) || !std::isfinite(duration)) {
    throw InvalidParameter("duration: must be positive");
  }
  const double ratio = duration / T;
  const double rounded = std::round(ratio);
  if (std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio)) {
    throw InvalidParameter("duration: must be a whole number of sample periods");
  }
  return static_cast<std::int64_t>(rounded);
}

SimTrace simulate(const RobotParams& params, const SignalSpec& fa_spec,
                  const SignalSpec& mu1_spec, const SignalSpec& mu2_spec, double duration,
                  double T, const FrictionMode& mode, const std::optional<StateVec>& initial) {
  params.validate();
  fa_spec.validate();
  mu1_spec.validate();
  mu2_spec.validate();
  check_friction_range(mu1_spec, params.mu_lo_1, params.mu_hi_1, "mu1");
  check_friction_range(mu2_spec, params.mu_lo_2, params.mu_hi_2, "mu2");
  const std::int64_t steps = step_count(duration, T);

  const FrictionPlant plant(params, T, mode);
  SimTrace trace;
  trace.T = T;
  trace.states.reserve(static_cast<std::size_t>(steps) + 1);
  trace.inputs.reserve(static_cast<std::size_t>(steps) + 1);

  StateVec x = initial.value_or(StateVec::Zero());
  for (std::int64_t n = 0; n <= steps; ++n) {
    InputSample u;
    u.fa = sample_signal(fa_spec, n, T);
    u.mu1 = sample_signal(mu1_spec, n, T);
    u.mu2 = sample_signal(mu2_spec, n, T);
    const FrictionPlant::Result r = plant.advance(x, u.fa, u.mu1, u.mu2);
    u.f1 = r.f1;
    u.f2 = r.f2;
#ifdef WORMCRAWL_CHECK_INVARIANTS
    check_friction_dissipation(x, u, params);
#endif
    trace.states.push_back(x);
    trace.inputs.push_back(u);
    if (n == steps) break;
    x = r.next;
    if (!x.allFinite() || x.cwiseAbs().maxCoeff() > kInstabilityBound) {
      throw InstabilityError("simulate: state left the 1e6 bound at t = " +
                             format_double(static_cast<double>(n + 1) * T) + " s");
    }
  }
  return trace;
}

Displacement net_displacement(const SimTrace& trace) {
  if (trace.states.empty()) throw EmptyTrace("net_displacement: empty trace");
  const StateVec& first = trace.states.front();
  const StateVec& last = trace.states.back();
  return {last(kX1) - first(kX1), last(kX2) - first(kX2)};
}

double average_speed(const SimTrace& trace) {
  const Displacement d = net_displacement(trace);
  const double duration = trace.duration();
  if (!(duration > 0)) throw EmptyTrace("average_speed: trace spans no time");
  return d.x1 / duration;
}

double max_abs_center_of_mass(const SimTrace& trace, const RobotParams& params) {
  double worst = 0.0;
  for (const auto& x : trace.states) worst = std::max(worst, std::abs(center_of_mass(x, params)));
  return worst;
}

LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw InvalidParameter("fit_line: need two equally sized series of length >= 2");
  }
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  LinearFit fit;
  fit.slope = sxx > 0 ? sxy / sxx : 0.0;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (fit.intercept + fit.slope * x[i]);
    ss_res += r * r;
  }
  fit.r_squared = syy > 0 ? 1.0 - ss_res / syy : (ss_res == 0 ? 1.0 : 0.0);
  return fit;
}

LinearFit fit_rear_position(const SimTrace& trace) {
  std::vector<double> t(trace.size());
  std::vector<double> x1(trace.size());
  for (std::size_t n = 0; n < trace.size(); ++n) {
    t[n] = trace.time(n);
    x1[n] = trace.states[n](kX1);
  }
  return fit_line(t, x1);
}

// --- CSV -------------------------------------------------------------------

std::string format_double(double v) {
  if (v == 0.0) v = 0.0;  // drop the sign of negative zero
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

void write_trace_csv(std::ostream& out, const SimTrace& trace) {
  out << "t,x1,v1,x2,v2,fa,mu1,mu2,f1,f2\n";
  for (std::size_t n = 0; n < trace.size(); ++n) {
    const StateVec& x = trace.states[n];
    const InputSample& u = trace.inputs[n];
    out << format_double(trace.time(n));
    for (double v : {x(kX1), x(kV1), x(kX2), x(kV2), u.fa, u.mu1, u.mu2, u.f1, u.f2}) {
      out << ',' << format_double(v);
    }
    out << '\n';
  }
}

SimTrace read_trace_csv(std::istream& in, std::optional<double> T) {
  std::string line;
  if (!std::getline(in, line) || line != "t,x1,v1,x2,v2,fa,mu1,mu2,f1,f2") {
    throw InvalidParameter("trace csv: missing or unexpected header");
  }
  SimTrace trace;
  std::vector<double> times;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::array<double, 10> v{};
    const char* p = line.data();
    const char* end = line.data() + line.size();
    for (std::size_t col = 0; col < v.size(); ++col) {
      const auto res = std::from_chars(p, end, v[col]);
      if (res.ec != std::errc()) {
        throw InvalidParameter("trace csv: bad number at row " + std::to_string(row));
      }
      p = res.ptr;
      if (col + 1 < v.size()) {
        if (p == end || *p != ',') {
          throw InvalidParameter("trace csv: expected 10 columns at row " + std::to_string(row));
        }
        ++p;
      }
    }
    if (p != end) throw InvalidParameter("trace csv: trailing data at row " + std::to_string(row));
    times.push_back(v[0]);
    trace.states.emplace_back(v[1], v[2], v[3], v[4]);
    trace.inputs.push_back({v[5], v[6], v[7], v[8], v[9]});
  }
  if (T) {
    trace.T = *T;
  } else if (times.size() >= 2) {
    trace.T = times[1] - times[0];
  } else {
    throw InvalidParameter("trace csv: sample period needs at least two rows");
  }
  return trace;
}

}  // namespace wormcrawl
