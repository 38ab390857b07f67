#include "ssr/sim.hpp"

#include <cmath>

#include <unsupported/Eigen/MatrixFunctions>

#include "ssr/csv.hpp"

namespace ssr::sim {

using Eigen::Index;

namespace {

// Phase tolerance, in cycles, that absorbs rounding of t - start.
constexpr double kPhaseSlack = 1e-9;

}  // namespace

double attack_signal(const AttackSpec& spec, double t) {
  const double since = t - spec.start_s;
  if (since < -1e-12 || spec.amplitude_pu == 0.0) return 0.0;
  switch (spec.waveform) {
    case Waveform::none:
      return 0.0;
    case Waveform::sine:
      return spec.amplitude_pu * std::sin(2.0 * std::numbers::pi * spec.frequency_hz * since);
    case Waveform::square: {
      const double cycles = std::max(since, 0.0) * spec.frequency_hz;
      double phase = cycles - std::floor(cycles);
      if (1.0 - phase < kPhaseSlack) phase = 0.0;
      return phase + kPhaseSlack < spec.duty ? spec.amplitude_pu : -spec.amplitude_pu;
    }
  }
  return 0.0;
}

Discretization discretize(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, double dt) {
  const Index n = a.rows();
  // exp([A b; 0 0] dt) = [Ad bd; 0 1]
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n + 1, n + 1);
  m.topLeftCorner(n, n) = a * dt;
  m.topRightCorner(n, 1) = b * dt;
  const Eigen::MatrixXd phi = m.exp();
  if (!phi.allFinite()) throw NumericalError("matrix exponential produced non-finite entries");
  return {phi.topLeftCorner(n, n), phi.topRightCorner(n, 1)};
}

SimulationResult integrate(const StateSpaceSystem& system, const AttackSpec& spec,
                           const IntegrateOptions& options) {
  Eigen::VectorXd column = Eigen::VectorXd::Zero(system.a.rows());
  if (spec.waveform != Waveform::none) column = system.input_column(spec.bus);
  return integrate(system, column, [&spec](double t) { return attack_signal(spec, t); }, spec.start_s,
                   options);
}

SimulationResult integrate(const StateSpaceSystem& system, const Eigen::VectorXd& input_column,
                           const std::function<double(double)>& signal, double start_s,
                           const IntegrateOptions& options) {
  if (!(options.dt_s > 0.0)) throw std::invalid_argument("integrate: dt must be > 0");
  if (!(options.horizon_s >= start_s)) throw std::invalid_argument("integrate: horizon must cover the start time");

  const auto disc = discretize(system.a, input_column, options.dt_s);
  const auto steps = static_cast<std::size_t>(std::llround(options.horizon_s / options.dt_s));
  const auto first = static_cast<std::size_t>(std::max(0.0, std::ceil(options.record_from_s / options.dt_s - 1e-9)));
  const std::size_t stored = steps + 1 > first ? steps + 1 - first : 0;

  SimulationResult r;
  r.y1_labels = system.y1_labels;
  r.y2_labels = system.y2_labels;
  r.channels = system.torsional;
  r.generator_ids = system.states.generator_ids();
  r.start_s = start_s;
  r.dt_s = options.dt_s;
  r.time.reserve(stored);
  r.input.reserve(stored);
  r.y1.resize(static_cast<Index>(stored), system.c1.rows());
  r.y2.resize(static_cast<Index>(stored), system.c2.rows());

  Eigen::VectorXd x = Eigen::VectorXd::Zero(system.a.rows());
  Eigen::VectorXd next(x.size());
  Index row = 0;
  for (std::size_t k = 0; k <= steps; ++k) {
    const double t = static_cast<double>(k) * options.dt_s;
    // Held over [t, t + dt); sampling mid-step avoids a half-step lag.
    const double u = signal(t + 0.5 * options.dt_s);
    if (k >= first) {
      r.time.push_back(t);
      r.input.push_back(u);
      r.y1.row(row) = (system.c1 * x).transpose();
      r.y2.row(row) = (system.c2 * x).transpose();
      ++row;
    }
    if (k == steps) break;
    next.noalias() = disc.ad * x;
    next += disc.bd * u;
    x.swap(next);
    if (!x.allFinite())
      throw NumericalError("non-finite state at t = " + csv::format(t + options.dt_s) + " s");
  }
  return r;
}

Ratio make_ratio(double numerator, double denominator) {
  if (denominator > 0.0) return {numerator / denominator, RatioStatus::finite};
  if (numerator > 0.0) return {std::numeric_limits<double>::infinity(), RatioStatus::unbounded};
  return {std::numeric_limits<double>::quiet_NaN(), RatioStatus::undefined};
}

std::string format_ratio(const Ratio& r) {
  switch (r.status) {
    case RatioStatus::finite: return csv::format(r.value);
    case RatioStatus::unbounded: return "unbounded";
    case RatioStatus::undefined: return "undefined";
  }
  return "undefined";
}

std::vector<SeverityRow> severity_ratios(const SimulationResult& result) {
  Index begin = 0;
  while (static_cast<std::size_t>(begin) < result.time.size() &&
         result.time[static_cast<std::size_t>(begin)] < result.start_s - 1e-12)
    ++begin;
  const Index count = static_cast<Index>(result.time.size()) - begin;

  auto peak = [&](const Trajectory& traj, std::size_t col) {
    if (count <= 0) return 0.0;
    return traj.col(static_cast<Index>(col)).segment(begin, count).cwiseAbs().maxCoeff();
  };

  std::vector<SeverityRow> rows;
  for (std::size_t k = 0; k < result.channels.size(); ++k) {
    const auto& ch = result.channels[k];
    SeverityRow row;
    row.generator = result.generator_ids[ch.generator];
    row.segment = ch.segment;
    row.kind = ch.kind;
    row.channel_max = peak(result.y2, k);
    row.terminal_max = peak(result.y1, ch.terminal_output);
    row.ratio = make_ratio(row.channel_max, row.terminal_max);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace ssr::sim
