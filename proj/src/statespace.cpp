#include "ssr/statespace.hpp"

#include <algorithm>
#include <numeric>

#include <Eigen/Eigenvalues>

namespace ssr {

using Eigen::Index;

namespace {

Index idx(std::size_t i) { return static_cast<Index>(i); }

}  // namespace

// ---------------------------------------------------------------------------
// StateIndexMap

StateIndexMap::StateIndexMap(std::vector<std::string> generator_ids, std::size_t masses_per_shaft)
    : ids_(std::move(generator_ids)), masses_(masses_per_shaft) {
  if (masses_ == 0) throw std::invalid_argument("StateIndexMap: shaft needs at least one mass");
}

std::size_t StateIndexMap::index(std::size_t generator, std::size_t mass, VarKind kind) const {
  if (generator >= generators() || mass >= masses_)
    throw std::out_of_range("StateIndexMap::index out of range");
  const std::size_t n = generators();
  const std::size_t offset = kind == VarKind::speed ? 0 : n * masses_;
  if (mass == 0) return offset + generator;
  return offset + n + generator * (masses_ - 1) + (mass - 1);
}

StateIndexMap::Slot StateIndexMap::slot(std::size_t index) const {
  if (index >= size()) throw std::out_of_range("StateIndexMap::slot out of range");
  const std::size_t n = generators();
  const std::size_t half = n * masses_;
  const VarKind kind = index < half ? VarKind::speed : VarKind::angle;
  const std::size_t local = index % half;
  if (local < n) return {local, 0, kind};
  const std::size_t shaft = local - n;
  return {shaft / (masses_ - 1), shaft % (masses_ - 1) + 1, kind};
}

std::string StateIndexMap::mass_name(std::size_t mass) {
  if (mass < kMassNames.size()) return std::string(kMassNames[mass]);
  return "s" + std::to_string(mass);
}

std::string StateIndexMap::label(std::size_t index) const {
  const auto s = slot(index);
  return (s.kind == VarKind::speed ? "w_" : "th_") + ids_[s.generator] + "_" + mass_name(s.mass);
}

Eigen::VectorXd StateSpaceSystem::input_column(std::string_view label) const {
  const auto it = std::find(input_labels.begin(), input_labels.end(), label);
  if (it == input_labels.end())
    throw std::invalid_argument("no input for bus '" + std::string(label) + "'");
  return b.col(it - input_labels.begin());
}

// ---------------------------------------------------------------------------
// Assembly

Eigen::MatrixXd build_input_map(std::span<const GeneratorModel> generators) {
  const std::size_t n = generators.size();
  Eigen::MatrixXd bi = Eigen::MatrixXd::Zero(idx(kMassesPerShaft * n), idx(n));
  bi.topRows(idx(n)).setIdentity();
  for (std::size_t g = 0; g < n; ++g) {
    for (std::size_t k = 0; k < kShaftSegments; ++k)
      bi(idx(n + g * kShaftSegments + k), idx(g)) = generators[g].shaft.power_fractions[k];
  }
  return bi;
}

namespace {

struct Shaft {
  std::span<const double> inertias;
  std::span<const double> dampings;
  std::span<const double> stiffnesses;
};

/// Swing, damping and shaft-stiffness terms of one generator.
void stamp_shaft(Eigen::MatrixXd& a, const StateIndexMap& map, std::size_t gen, const Shaft& shaft,
                 double omega_0m) {
  const std::size_t m = map.masses();
  for (std::size_t k = 0; k < m; ++k) {
    const Index row = idx(map.index(gen, k, VarKind::speed));
    const Index self = idx(map.index(gen, k, VarKind::angle));
    const double scale = omega_0m / (2.0 * shaft.inertias[k]);
    a(row, row) -= scale * shaft.dampings[k];
    if (k > 0) {
      const double kk = shaft.stiffnesses[k - 1];
      a(row, idx(map.index(gen, k - 1, VarKind::angle))) += scale * kk;
      a(row, self) -= scale * kk;
    }
    if (k + 1 < m) {
      const double kk = shaft.stiffnesses[k];
      a(row, idx(map.index(gen, k + 1, VarKind::angle))) += scale * kk;
      a(row, self) -= scale * kk;
    }
  }
}

void finish(StateSpaceSystem& sys) {
  const Index half = sys.a.rows() / 2;
  sys.a.bottomLeftCorner(half, half).setIdentity();
  auto out = assemble_outputs(sys.states, static_cast<std::size_t>(sys.b.cols()));
  sys.c1 = std::move(out.c1);
  sys.d1 = std::move(out.d1);
  sys.c2 = std::move(out.c2);
  sys.d2 = std::move(out.d2);
  sys.y1_labels = std::move(out.y1_labels);
  sys.y2_labels = std::move(out.y2_labels);
  sys.torsional = std::move(out.torsional);
}

}  // namespace

StateSpaceSystem assemble(const SystemModel& model, const network::ReducedCoupling& coupling) {
  const std::size_t n = model.size();
  if (coupling.generator_count() != n || coupling.terminal.rows() != idx(n))
    throw std::invalid_argument("assemble: coupling does not match the generator list");

  StateSpaceSystem sys;
  std::vector<std::string> ids;
  for (const auto& g : model.generators) ids.push_back(g.id);
  sys.states = StateIndexMap(std::move(ids), kMassesPerShaft);
  sys.omega_0m = model.omega_0m();
  const Index size = idx(sys.states.size());
  const Index inputs = idx(coupling.load_buses.size());
  sys.a = Eigen::MatrixXd::Zero(size, size);
  sys.b = Eigen::MatrixXd::Zero(size, inputs);
  for (const auto bus : coupling.load_buses) sys.input_labels.push_back(coupling.bus_ids[bus]);

  for (std::size_t g = 0; g < n; ++g) {
    const auto& shaft = model.generators[g].shaft;
    stamp_shaft(sys.a, sys.states, g, {shaft.inertias, shaft.dampings, shaft.stiffnesses}, sys.omega_0m);

    // Electrical power deviation decelerates the generator mass only; the
    // turbine inputs stay at their steady values.
    const Index row = idx(sys.states.index(g, 0, VarKind::speed));
    const double scale = sys.omega_0m / (2.0 * shaft.inertias[0]);
    for (std::size_t j = 0; j < n; ++j)
      sys.a(row, idx(sys.states.index(j, 0, VarKind::angle))) -= scale * coupling.terminal(idx(g), idx(j));
    sys.b.row(row) = -scale * coupling.load.row(idx(g));
  }
  finish(sys);
  return sys;
}

StateSpaceSystem assemble_chain(const ChainParams& chain, double omega_0m) {
  const std::size_t m = chain.inertias.size();
  if (m == 0 || chain.dampings.size() != m || chain.stiffnesses.size() + 1 != m)
    throw std::invalid_argument("assemble_chain: inconsistent chain parameter sizes");

  StateSpaceSystem sys;
  sys.states = StateIndexMap({"chain"}, m);
  sys.omega_0m = omega_0m;
  const Index size = idx(sys.states.size());
  sys.a = Eigen::MatrixXd::Zero(size, size);
  sys.b = Eigen::MatrixXd::Zero(size, 1);
  sys.input_labels = {"g"};
  stamp_shaft(sys.a, sys.states, 0, {chain.inertias, chain.dampings, chain.stiffnesses}, omega_0m);
  sys.b(0, 0) = -omega_0m / (2.0 * chain.inertias[0]);
  finish(sys);
  return sys;
}

OutputMatrices assemble_outputs(const StateIndexMap& states, std::size_t input_count) {
  OutputMatrices out;
  const Index size = idx(states.size());
  const std::size_t n = states.generators();
  const std::size_t segments = states.masses() - 1;

  out.c1 = Eigen::MatrixXd::Identity(size, size);
  out.d1 = Eigen::MatrixXd::Zero(size, idx(input_count));
  for (std::size_t i = 0; i < states.size(); ++i) out.y1_labels.push_back(states.label(i));

  out.c2 = Eigen::MatrixXd::Zero(idx(2 * n * segments), size);
  out.d2 = Eigen::MatrixXd::Zero(out.c2.rows(), idx(input_count));
  Index row = 0;
  for (const VarKind kind : {VarKind::speed, VarKind::angle}) {
    const std::string prefix = kind == VarKind::speed ? "dw_" : "dth_";
    for (std::size_t g = 0; g < n; ++g) {
      for (std::size_t s = 0; s < segments; ++s, ++row) {
        out.c2(row, idx(states.index(g, s, kind))) = 1.0;
        out.c2(row, idx(states.index(g, s + 1, kind))) = -1.0;
        out.y2_labels.push_back(prefix + states.generator_ids()[g] + "_" + StateIndexMap::mass_name(s) +
                                "_" + StateIndexMap::mass_name(s + 1));
        out.torsional.push_back({g, s, kind, states.index(g, 0, kind)});
      }
    }
  }
  return out;
}

OperatingPoint operating_point(const SystemModel& model, const network::ReducedCoupling& coupling) {
  OperatingPoint op;
  const Eigen::VectorXd dispatch = network::dispatch_vector(model, coupling);
  op.bus_angles = network::steady_state_angles(coupling, dispatch, network::load_vector(model, coupling));

  // In steady state mechanical power balances the electrical output.
  op.mechanical_power = Eigen::VectorXd(idx(model.size()));
  for (std::size_t g = 0; g < model.size(); ++g)
    op.mechanical_power(idx(g)) = model.generators[g].dispatch_mw / model.network.base_mva;
  op.mass_input_power = build_input_map(model.generators) * op.mechanical_power;

  // Each shaft segment carries the power of every turbine beyond it.
  const std::size_t n = model.size();
  op.shaft_twist = Eigen::MatrixXd::Zero(idx(n), idx(kShaftSegments));
  for (std::size_t g = 0; g < n; ++g) {
    double carried = 0.0;
    for (std::size_t s = kShaftSegments; s-- > 0;) {
      carried += op.mass_input_power(idx(n + g * kShaftSegments + s));
      op.shaft_twist(idx(g), idx(s)) = -carried / model.generators[g].shaft.stiffnesses[s];
    }
  }
  return op;
}

// ---------------------------------------------------------------------------
// Modes

namespace {

int count_shaft_nodes(const StateIndexMap& map, const Eigen::VectorXcd& v, std::size_t gen) {
  const std::size_t m = map.masses();
  Eigen::VectorXcd shape(idx(m));
  for (std::size_t k = 0; k < m; ++k) shape(idx(k)) = v(idx(map.index(gen, k, VarKind::angle)));
  Index peak = 0;
  shape.cwiseAbs().maxCoeff(&peak);
  const double scale = std::abs(shape(peak));
  if (scale == 0.0) return 0;
  const std::complex<double> rotate = std::conj(shape(peak)) / scale;

  int nodes = 0;
  int last_sign = 0;
  for (Index k = 0; k < shape.size(); ++k) {
    const double re = (shape(k) * rotate).real();
    if (std::abs(re) < 1e-6 * scale) continue;
    const int sign = re > 0 ? 1 : -1;
    if (last_sign != 0 && sign != last_sign) ++nodes;
    last_sign = sign;
  }
  return nodes;
}

}  // namespace

ModeSet eig_modes(const StateSpaceSystem& system, double light_damping) {
  Eigen::EigenSolver<Eigen::MatrixXd> solver(system.a, true);
  if (solver.info() != Eigen::Success) throw NumericalError("eigen-solver did not converge");

  ModeSet set;
  set.eigenvalues = solver.eigenvalues();
  set.right = solver.eigenvectors();
  const auto& map = system.states;

  for (Index i = 0; i < set.eigenvalues.size(); ++i) {
    const auto lambda = set.eigenvalues(i);
    if (lambda.imag() < 0.0) continue;

    Mode mode;
    mode.eigenvalue = lambda;
    mode.column = i;
    mode.frequency_hz = std::abs(lambda.imag()) / (2.0 * std::numbers::pi);
    const double mag = std::abs(lambda);
    mode.damping_ratio = mag > 0.0 ? -lambda.real() / mag : 0.0;
    mode.lightly_damped = lambda.imag() > 0.0 && mode.damping_ratio < light_damping;

    const Eigen::VectorXcd v = set.right.col(i);
    std::vector<std::size_t> order(static_cast<std::size_t>(v.size()));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return std::abs(v(idx(a))) > std::abs(v(idx(b))); });
    order.resize(std::min<std::size_t>(3, order.size()));
    mode.participation = order;

    std::vector<double> energy(map.generators(), 0.0);
    for (std::size_t s = 0; s < map.size(); ++s) {
      const auto slot = map.slot(s);
      if (slot.kind == VarKind::angle) energy[slot.generator] += std::norm(v(idx(s)));
    }
    mode.dominant_generator =
        static_cast<std::size_t>(std::max_element(energy.begin(), energy.end()) - energy.begin());
    mode.shaft_nodes = count_shaft_nodes(map, v, mode.dominant_generator);
    mode.torsional = lambda.imag() > 0.0 && mode.shaft_nodes > 0;
    set.modes.push_back(std::move(mode));
  }

  std::stable_sort(set.modes.begin(), set.modes.end(), [](const Mode& a, const Mode& b) {
    if (a.frequency_hz != b.frequency_hz) return a.frequency_hz < b.frequency_hz;
    return a.eigenvalue.real() < b.eigenvalue.real();
  });
  return set;
}

std::vector<double> ModeSet::residues(const Eigen::MatrixXd& outputs, const Eigen::VectorXd& input) const {
  Eigen::FullPivLU<Eigen::MatrixXcd> lu(right);
  if (!lu.isInvertible()) throw NumericalError("system matrix is defective; modal residues undefined");
  const Eigen::MatrixXcd left = lu.inverse();
  const Eigen::VectorXcd modal_input = left * input.cast<std::complex<double>>();
  const Eigen::MatrixXcd observed = outputs.cast<std::complex<double>>() * right;

  std::vector<double> out;
  out.reserve(modes.size());
  for (const auto& m : modes) {
    const double gain = std::abs(modal_input(m.column));
    out.push_back(gain * observed.col(m.column).cwiseAbs().maxCoeff());
  }
  return out;
}

}  // namespace ssr
