#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ssr/errors.hpp"
#include "ssr/model.hpp"

namespace ssr::network {

/// DC-linearized bus susceptance matrix: off-diagonal -1/x per line, diagonal
/// the sum of incident 1/x. Parallel lines add.
struct SusceptanceMatrix {
  Eigen::MatrixXd values;
  std::vector<std::string> bus_ids;
  std::vector<BusRole> roles;

  std::size_t size() const { return bus_ids.size(); }
};

/// Raised when the load-bus block cannot be inverted.
class SingularNetworkError : public NumericalError {
 public:
  SingularNetworkError(const std::string& what, std::vector<std::string> buses)
      : NumericalError(what), buses_(std::move(buses)) {}
  const std::vector<std::string>& buses() const { return buses_; }

 private:
  std::vector<std::string> buses_;
};

/// Generator power as a linear function of generator terminal angles and bus
/// loads, P_e = A_e * theta_g + B_e * L, with every non-slack load bus
/// eliminated and the slack angle pinned to zero.
struct ReducedCoupling {
  Eigen::MatrixXd terminal;  // A_e on the terminal-angle columns, n_gen x n_gen
  Eigen::MatrixXd load;      // B_e, n_gen x n_load; load positive = consumption

  std::vector<std::string> bus_ids;
  std::vector<std::size_t> generator_buses;   // row order of terminal/load
  std::vector<std::size_t> load_buses;        // column order of load (load and slack roles)
  std::vector<std::size_t> eliminated_buses;  // non-slack load buses
  std::size_t slack_bus = 0;

  // Recovers eliminated-bus angles: theta_e = from_generators * theta_g + from_loads * L.
  Eigen::MatrixXd angle_from_generators;
  Eigen::MatrixXd angle_from_loads;

  std::size_t generator_count() const { return generator_buses.size(); }

  /// A_e against the full stacked angle vector of `masses_per_shaft` masses
  /// per generator (terminal angles first); shaft-mass columns are zero.
  Eigen::MatrixXd stacked(std::size_t masses_per_shaft = kMassesPerShaft) const;

  /// Column of B_e for a bus id, or -1.
  std::ptrdiff_t load_column(std::string_view bus_id) const;
};

SusceptanceMatrix build_susceptance(const NetworkModel& network);

/// Schur-complement reduction. Generator rows follow `generator_buses` when
/// given (indices into the bus list), otherwise generator-role buses in bus order.
ReducedCoupling kron_reduce(const SusceptanceMatrix& b,
                            std::span<const std::size_t> generator_buses = {});

/// Eliminates the given load-role buses, returning the equivalent matrix over
/// the remaining buses. Used for staged reductions.
SusceptanceMatrix partial_reduce(const SusceptanceMatrix& b, std::span<const std::size_t> eliminate);

/// Coupling for a model with rows in generator declaration order.
ReducedCoupling reduce(const SystemModel& model);

/// Steady-state bus angles (slack = 0) for the given generator dispatch and
/// load vector, both in p.u. and ordered as the coupling rows and columns.
Eigen::VectorXd steady_state_angles(const ReducedCoupling& coupling,
                                    const Eigen::VectorXd& dispatch_pu,
                                    const Eigen::VectorXd& loads_pu);

/// Convenience views of a model's operating point in coupling order.
Eigen::VectorXd dispatch_vector(const SystemModel& model, const ReducedCoupling& coupling);
Eigen::VectorXd load_vector(const SystemModel& model, const ReducedCoupling& coupling);

/// Active power on every line, p.u., positive from `from` to `to`.
/// `angles` are indexed like `network.buses`.
Eigen::VectorXd line_flows(const NetworkModel& network, const Eigen::VectorXd& angles);

}  // namespace ssr::network
