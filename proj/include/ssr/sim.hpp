#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ssr/model.hpp"
#include "ssr/statespace.hpp"

namespace ssr::sim {

/// Injected load deviation at time t, p.u. Zero before the start time. The
/// square wave opens with its positive part; duty sets the positive share of
/// each period.
double attack_signal(const AttackSpec& spec, double t);

/// Exact zero-order-hold discretization of dx/dt = A x + b u over one step.
struct Discretization {
  Eigen::MatrixXd ad;
  Eigen::VectorXd bd;
};

Discretization discretize(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, double dt);

struct IntegrateOptions {
  double horizon_s = 10.0;
  double dt_s = 1e-3;
  /// Samples before this time are simulated but not stored.
  double record_from_s = 0.0;
};

using Trajectory = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct SimulationResult {
  std::vector<double> time;
  std::vector<double> input;
  Trajectory y1;  // samples x y1 outputs
  Trajectory y2;  // samples x y2 outputs
  std::vector<std::string> y1_labels;
  std::vector<std::string> y2_labels;
  std::vector<TorsionalChannel> channels;
  std::vector<std::string> generator_ids;
  double start_s = 0.0;  // attack onset used for severity windows
  double dt_s = 0.0;
};

/// Zero initial state. The input is sampled at the middle of each step and
/// held over that step; `input` records the held value.
SimulationResult integrate(const StateSpaceSystem& system, const AttackSpec& spec,
                           const IntegrateOptions& options);

/// Same engine with an arbitrary scalar signal driving one input column.
SimulationResult integrate(const StateSpaceSystem& system, const Eigen::VectorXd& input_column,
                           const std::function<double(double)>& signal, double start_s,
                           const IntegrateOptions& options);

enum class RatioStatus { finite, unbounded, undefined };

struct Ratio {
  double value = 0.0;
  RatioStatus status = RatioStatus::undefined;
};

std::string format_ratio(const Ratio& r);

/// max |difference channel| over max |terminal channel| of the same kind,
/// both taken over t >= start.
struct SeverityRow {
  std::string generator;
  std::size_t segment = 0;  // 0-based; R_omega_j uses j = segment + 1
  VarKind kind = VarKind::speed;
  double channel_max = 0.0;
  double terminal_max = 0.0;
  Ratio ratio;
};

std::vector<SeverityRow> severity_ratios(const SimulationResult& result);

Ratio make_ratio(double numerator, double denominator);

}  // namespace ssr::sim
