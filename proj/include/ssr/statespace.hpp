#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ssr/errors.hpp"
#include "ssr/model.hpp"
#include "ssr/network.hpp"

namespace ssr {

enum class VarKind { speed, angle };

/// Position of every (generator, mass, kind) in the state vector
/// x = [omega; theta]. Within each half, the terminal (generator-mass)
/// entries of all generators come first, followed by the shaft masses of
/// generator 1, generator 2, and so on.
class StateIndexMap {
 public:
  struct Slot {
    std::size_t generator;
    std::size_t mass;
    VarKind kind;
  };

  StateIndexMap() = default;
  StateIndexMap(std::vector<std::string> generator_ids, std::size_t masses_per_shaft);

  std::size_t generators() const { return ids_.size(); }
  std::size_t masses() const { return masses_; }
  std::size_t size() const { return 2 * ids_.size() * masses_; }
  const std::vector<std::string>& generator_ids() const { return ids_; }

  std::size_t index(std::size_t generator, std::size_t mass, VarKind kind) const;
  Slot slot(std::size_t index) const;

  /// "w_<gen>_<mass>" for speeds, "th_<gen>_<mass>" for angles.
  std::string label(std::size_t index) const;
  static std::string mass_name(std::size_t mass);

 private:
  std::vector<std::string> ids_;
  std::size_t masses_ = 0;
};

/// One row of y2: the difference between adjacent masses `segment` and
/// `segment + 1` of a generator, paired with that generator's terminal output
/// of the same kind.
struct TorsionalChannel {
  std::size_t generator = 0;
  std::size_t segment = 0;  // 0-based; segment 0 is g - s1
  VarKind kind = VarKind::speed;
  std::size_t terminal_output = 0;  // row of y1
};

struct OutputMatrices {
  Eigen::MatrixXd c1, d1, c2, d2;
  std::vector<std::string> y1_labels;
  std::vector<std::string> y2_labels;
  std::vector<TorsionalChannel> torsional;
};

/// dx/dt = A x + B u with y1 = C1 x + D1 u (all states) and y2 = C2 x + D2 u
/// (adjacent-mass differences). States are deviations from the operating point.
struct StateSpaceSystem {
  Eigen::MatrixXd a, b, c1, d1, c2, d2;
  StateIndexMap states;
  std::vector<std::string> input_labels;  // bus ids of the load inputs
  std::vector<std::string> y1_labels;
  std::vector<std::string> y2_labels;
  std::vector<TorsionalChannel> torsional;
  double omega_0m = 0.0;

  std::size_t state_count() const { return static_cast<std::size_t>(a.rows()); }
  /// Column of B for an input label; throws if absent.
  Eigen::VectorXd input_column(std::string_view label) const;
};

/// B_I = [I_n; B_F] with B_F block-diagonal in the per-generator turbine power
/// fraction columns. Maps generator mechanical power to per-mass input power.
Eigen::MatrixXd build_input_map(std::span<const GeneratorModel> generators);

/// Full electromechanical system of a validated model.
StateSpaceSystem assemble(const SystemModel& model, const network::ReducedCoupling& coupling);

/// A free shaft of any length, not attached to a network. Its single input is
/// an electrical power demand on the first mass.
struct ChainParams {
  std::vector<double> inertias;
  std::vector<double> dampings;
  std::vector<double> stiffnesses;  // size inertias.size() - 1
};

StateSpaceSystem assemble_chain(const ChainParams& chain, double omega_0m);

OutputMatrices assemble_outputs(const StateIndexMap& states, std::size_t input_count);

/// Steady operating point around which the deviation model is linearized.
struct OperatingPoint {
  Eigen::VectorXd bus_angles;          // rad, slack = 0
  Eigen::VectorXd mechanical_power;    // p.u., per generator
  Eigen::VectorXd mass_input_power;    // P_I = B_I P_M, stacked like omega
  Eigen::MatrixXd shaft_twist;         // n x 4, theta_left - theta_right, rad
};

OperatingPoint operating_point(const SystemModel& model, const network::ReducedCoupling& coupling);

// ---------------------------------------------------------------------------
// Modal analysis

struct Mode {
  std::complex<double> eigenvalue;
  double frequency_hz = 0.0;
  double damping_ratio = 0.0;
  bool lightly_damped = false;  // oscillatory and damping ratio below threshold
  std::vector<std::size_t> participation;  // top-3 |entry| states of the right eigenvector
  std::size_t dominant_generator = 0;
  int shaft_nodes = 0;  // sign changes of the angle shape along the dominant shaft
  bool torsional = false;
  Eigen::Index column = 0;  // column in ModeSet::right
};

struct ModeSet {
  std::vector<Mode> modes;       // conjugate pairs merged, ascending frequency
  Eigen::VectorXcd eigenvalues;  // every eigenvalue of A
  Eigen::MatrixXcd right;        // matching right eigenvectors

  /// Per-mode input-to-output residue magnitude max_k |c_k v| |w b| for the
  /// given output rows and input column. Throws if A is defective.
  std::vector<double> residues(const Eigen::MatrixXd& outputs, const Eigen::VectorXd& input) const;
};

inline constexpr double kLightDampingRatio = 0.05;

ModeSet eig_modes(const StateSpaceSystem& system, double light_damping = kLightDampingRatio);

}  // namespace ssr
