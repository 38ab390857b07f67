#include "ssr/network.hpp"

#include <algorithm>

namespace ssr::network {

namespace {

Eigen::MatrixXd pick(const Eigen::MatrixXd& m, const std::vector<std::size_t>& rows,
                     const std::vector<std::size_t>& cols) {
  Eigen::MatrixXd out(rows.size(), cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j) out(i, j) = m(rows[i], cols[j]);
  return out;
}

std::size_t require_slack(const SusceptanceMatrix& b) {
  const auto it = std::find(b.roles.begin(), b.roles.end(), BusRole::slack);
  if (it == b.roles.end() || std::count(b.roles.begin(), b.roles.end(), BusRole::slack) != 1)
    throw std::invalid_argument("kron_reduce: network needs exactly one slack bus");
  return static_cast<std::size_t>(it - b.roles.begin());
}

std::vector<std::size_t> with_role(const SusceptanceMatrix& b, BusRole role) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < b.size(); ++i)
    if (b.roles[i] == role) out.push_back(i);
  return out;
}

/// LU of the block to be eliminated; names the buses spanning its kernel when singular.
Eigen::FullPivLU<Eigen::MatrixXd> factor_eliminated(const SusceptanceMatrix& b,
                                                    const std::vector<std::size_t>& elim) {
  Eigen::FullPivLU<Eigen::MatrixXd> lu(pick(b.values, elim, elim));
  if (lu.isInvertible()) return lu;

  const Eigen::MatrixXd kernel = lu.kernel();
  std::vector<std::string> buses;
  const double scale = kernel.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < kernel.rows(); ++i) {
    if (kernel.row(i).cwiseAbs().maxCoeff() > 1e-9 * scale) buses.push_back(b.bus_ids[elim[i]]);
  }
  std::string msg = "load-bus susceptance block is singular; degenerate buses:";
  for (const auto& id : buses) msg += " " + id;
  throw SingularNetworkError(msg, std::move(buses));
}

}  // namespace

Eigen::MatrixXd ReducedCoupling::stacked(std::size_t masses_per_shaft) const {
  const auto n = static_cast<Eigen::Index>(generator_count());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n * static_cast<Eigen::Index>(masses_per_shaft));
  out.leftCols(n) = terminal;
  return out;
}

std::ptrdiff_t ReducedCoupling::load_column(std::string_view bus_id) const {
  for (std::size_t c = 0; c < load_buses.size(); ++c)
    if (bus_ids[load_buses[c]] == bus_id) return static_cast<std::ptrdiff_t>(c);
  return -1;
}

SusceptanceMatrix build_susceptance(const NetworkModel& network) {
  SusceptanceMatrix b;
  const auto n = network.buses.size();
  b.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (const auto& bus : network.buses) {
    b.bus_ids.push_back(bus.id);
    b.roles.push_back(bus.role);
  }
  for (const auto& line : network.lines) {
    const auto i = network.bus_index(line.from);
    const auto j = network.bus_index(line.to);
    if (!i || !j) throw std::invalid_argument("line references unknown bus");
    const double y = 1.0 / line.x_pu;
    b.values(*i, *i) += y;
    b.values(*j, *j) += y;
    b.values(*i, *j) -= y;
    b.values(*j, *i) -= y;
  }
  return b;
}

ReducedCoupling kron_reduce(const SusceptanceMatrix& b, std::span<const std::size_t> generator_buses) {
  ReducedCoupling rc;
  rc.bus_ids = b.bus_ids;
  rc.slack_bus = require_slack(b);
  rc.generator_buses = generator_buses.empty()
                           ? with_role(b, BusRole::generator)
                           : std::vector<std::size_t>(generator_buses.begin(), generator_buses.end());
  for (const auto g : rc.generator_buses) {
    if (g >= b.size() || b.roles[g] != BusRole::generator)
      throw std::invalid_argument("kron_reduce: retained bus is not a generator bus");
  }
  for (std::size_t i = 0; i < b.size(); ++i) {
    if (b.roles[i] == BusRole::generator) continue;
    rc.load_buses.push_back(i);
    if (b.roles[i] == BusRole::load) rc.eliminated_buses.push_back(i);
  }

  const auto n_gen = static_cast<Eigen::Index>(rc.generator_buses.size());
  const auto n_load = static_cast<Eigen::Index>(rc.load_buses.size());
  const auto n_elim = static_cast<Eigen::Index>(rc.eliminated_buses.size());
  const auto& gens = rc.generator_buses;
  const auto& elim = rc.eliminated_buses;

  const Eigen::MatrixXd b_gg = pick(b.values, gens, gens);
  rc.load = Eigen::MatrixXd::Zero(n_gen, n_load);
  rc.angle_from_generators = Eigen::MatrixXd::Zero(n_elim, n_gen);
  rc.angle_from_loads = Eigen::MatrixXd::Zero(n_elim, n_load);
  if (n_elim == 0) {
    rc.terminal = b_gg;
    return rc;
  }

  const Eigen::MatrixXd b_gl = pick(b.values, gens, elim);
  const Eigen::MatrixXd b_lg = pick(b.values, elim, gens);
  const auto lu = factor_eliminated(b, elim);

  // Load rows: -L = B_lg theta_g + B_ll theta_l  =>  theta_l = -B_ll^-1 (B_lg theta_g + L).
  const Eigen::MatrixXd ll_inv = lu.inverse();
  rc.angle_from_generators = -lu.solve(b_lg);
  rc.terminal = b_gg + b_gl * rc.angle_from_generators;

  const Eigen::MatrixXd load_gain = -b_gl * ll_inv;  // B_e over eliminated buses
  for (Eigen::Index c = 0; c < n_load; ++c) {
    const auto bus = rc.load_buses[static_cast<std::size_t>(c)];
    const auto it = std::find(elim.begin(), elim.end(), bus);
    if (it == elim.end()) continue;  // slack column stays zero
    const auto j = it - elim.begin();
    rc.load.col(c) = load_gain.col(j);
    rc.angle_from_loads.col(c) = -ll_inv.col(j);
  }
  return rc;
}

SusceptanceMatrix partial_reduce(const SusceptanceMatrix& b, std::span<const std::size_t> eliminate) {
  std::vector<std::size_t> elim(eliminate.begin(), eliminate.end());
  std::vector<std::size_t> keep;
  for (const auto e : elim) {
    if (e >= b.size() || b.roles[e] != BusRole::load)
      throw std::invalid_argument("partial_reduce: only load-role buses can be eliminated");
  }
  for (std::size_t i = 0; i < b.size(); ++i)
    if (std::find(elim.begin(), elim.end(), i) == elim.end()) keep.push_back(i);

  const auto lu = factor_eliminated(b, elim);
  SusceptanceMatrix out;
  out.values = pick(b.values, keep, keep) - pick(b.values, keep, elim) * lu.solve(pick(b.values, elim, keep));
  for (const auto k : keep) {
    out.bus_ids.push_back(b.bus_ids[k]);
    out.roles.push_back(b.roles[k]);
  }
  return out;
}

ReducedCoupling reduce(const SystemModel& model) {
  const auto b = build_susceptance(model.network);
  std::vector<std::size_t> order;
  for (const auto& g : model.generators) {
    const auto idx = model.network.bus_index(g.bus);
    if (!idx) throw std::invalid_argument("generator " + g.id + " on unknown bus");
    order.push_back(*idx);
  }
  return kron_reduce(b, order);
}

Eigen::VectorXd steady_state_angles(const ReducedCoupling& coupling, const Eigen::VectorXd& dispatch_pu,
                                    const Eigen::VectorXd& loads_pu) {
  if (dispatch_pu.size() != static_cast<Eigen::Index>(coupling.generator_count()) ||
      loads_pu.size() != static_cast<Eigen::Index>(coupling.load_buses.size()))
    throw std::invalid_argument("steady_state_angles: dimension mismatch");

  Eigen::FullPivLU<Eigen::MatrixXd> lu(coupling.terminal);
  if (!lu.isInvertible()) throw NumericalError("steady_state_angles: reduced coupling is singular");
  const Eigen::VectorXd theta_g = lu.solve(dispatch_pu - coupling.load * loads_pu);

  Eigen::VectorXd angles = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(coupling.bus_ids.size()));
  for (std::size_t i = 0; i < coupling.generator_buses.size(); ++i)
    angles(static_cast<Eigen::Index>(coupling.generator_buses[i])) = theta_g(static_cast<Eigen::Index>(i));
  const Eigen::VectorXd theta_e =
      coupling.angle_from_generators * theta_g + coupling.angle_from_loads * loads_pu;
  for (std::size_t i = 0; i < coupling.eliminated_buses.size(); ++i)
    angles(static_cast<Eigen::Index>(coupling.eliminated_buses[i])) = theta_e(static_cast<Eigen::Index>(i));
  return angles;
}

Eigen::VectorXd dispatch_vector(const SystemModel& model, const ReducedCoupling& coupling) {
  Eigen::VectorXd p(static_cast<Eigen::Index>(coupling.generator_count()));
  for (std::size_t i = 0; i < coupling.generator_buses.size(); ++i) {
    const auto& bus = coupling.bus_ids[coupling.generator_buses[i]];
    const auto it = std::find_if(model.generators.begin(), model.generators.end(),
                                 [&](const GeneratorModel& g) { return g.bus == bus; });
    p(static_cast<Eigen::Index>(i)) = it == model.generators.end() ? 0.0 : it->dispatch_mw / model.network.base_mva;
  }
  return p;
}

Eigen::VectorXd load_vector(const SystemModel& model, const ReducedCoupling& coupling) {
  Eigen::VectorXd l(static_cast<Eigen::Index>(coupling.load_buses.size()));
  for (std::size_t c = 0; c < coupling.load_buses.size(); ++c)
    l(static_cast<Eigen::Index>(c)) = model.network.load_pu(coupling.bus_ids[coupling.load_buses[c]]);
  return l;
}

Eigen::VectorXd line_flows(const NetworkModel& network, const Eigen::VectorXd& angles) {
  Eigen::VectorXd flows(static_cast<Eigen::Index>(network.lines.size()));
  for (std::size_t k = 0; k < network.lines.size(); ++k) {
    const auto& l = network.lines[k];
    const auto i = network.bus_index(l.from).value();
    const auto j = network.bus_index(l.to).value();
    flows(static_cast<Eigen::Index>(k)) =
        (angles(static_cast<Eigen::Index>(i)) - angles(static_cast<Eigen::Index>(j))) / l.x_pu;
  }
  return flows;
}

}  // namespace ssr::network
