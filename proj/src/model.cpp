#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <sstream>

#include "ssr/csv.hpp"
#include "ssr/model.hpp"

namespace ssr {

std::string_view to_string(BusRole role) {
  switch (role) {
    case BusRole::generator: return "generator";
    case BusRole::load: return "load";
    case BusRole::slack: return "slack";
  }
  return "?";
}

std::optional<BusRole> parse_bus_role(std::string_view text) {
  if (text == "generator") return BusRole::generator;
  if (text == "load") return BusRole::load;
  if (text == "slack") return BusRole::slack;
  return std::nullopt;
}

std::string_view to_string(Waveform waveform) {
  switch (waveform) {
    case Waveform::square: return "square";
    case Waveform::sine: return "sine";
    case Waveform::none: return "none";
  }
  return "?";
}

std::optional<Waveform> parse_waveform(std::string_view text) {
  if (text == "square") return Waveform::square;
  if (text == "sine") return Waveform::sine;
  if (text == "none") return Waveform::none;
  return std::nullopt;
}

std::optional<std::size_t> NetworkModel::bus_index(std::string_view id) const {
  for (std::size_t i = 0; i < buses.size(); ++i)
    if (buses[i].id == id) return i;
  return std::nullopt;
}

std::optional<std::size_t> NetworkModel::slack_index() const {
  for (std::size_t i = 0; i < buses.size(); ++i)
    if (buses[i].role == BusRole::slack) return i;
  return std::nullopt;
}

double NetworkModel::load_pu(std::string_view bus_id) const {
  const auto it = loads.find(std::string(bus_id));
  return it == loads.end() ? 0.0 : it->second / base_mva;
}

namespace {

class Collector {
 public:
  void add(std::string element, std::string message) {
    out_.push_back({std::move(element), std::move(message)});
  }
  std::vector<Violation> take() { return std::move(out_); }

 private:
  std::vector<Violation> out_;
};

std::string num(double v) { return csv::format_exact(v); }

void check_shaft(const GeneratorModel& g, Collector& c) {
  const std::string el = "generator " + g.id;
  const auto& s = g.shaft;
  for (std::size_t i = 0; i < kMassesPerShaft; ++i) {
    const std::string mass(kMassNames[i]);
    if (!(s.inertias[i] > 0.0))
      c.add(el, "inertia H_" + mass + " = " + num(s.inertias[i]) + " must be > 0");
    if (!(s.dampings[i] >= 0.0))
      c.add(el, "damping D_" + mass + " = " + num(s.dampings[i]) + " must be >= 0");
  }
  for (std::size_t i = 0; i < kShaftSegments; ++i) {
    const std::string seg = "K" + std::to_string(i + 1) + std::to_string(i + 2);
    if (!(s.stiffnesses[i] > 0.0))
      c.add(el, "stiffness " + seg + " = " + num(s.stiffnesses[i]) + " must be > 0");
    if (!(s.power_fractions[i] >= 0.0))
      c.add(el, "power fraction for s" + std::to_string(i + 1) + " = " + num(s.power_fractions[i]) +
                    " must be >= 0");
  }
  const double sum = std::accumulate(s.power_fractions.begin(), s.power_fractions.end(), 0.0);
  if (!(std::abs(sum - 1.0) <= 1e-9))
    c.add(el, "power fractions sum to " + num(sum) + ", expected 1");
}

bool connected(const NetworkModel& net) {
  if (net.buses.empty()) return true;
  std::vector<std::vector<std::size_t>> adj(net.buses.size());
  for (const auto& l : net.lines) {
    const auto a = net.bus_index(l.from);
    const auto b = net.bus_index(l.to);
    if (!a || !b) continue;
    adj[*a].push_back(*b);
    adj[*b].push_back(*a);
  }
  std::vector<bool> seen(net.buses.size(), false);
  std::queue<std::size_t> todo;
  todo.push(0);
  seen[0] = true;
  std::size_t count = 1;
  while (!todo.empty()) {
    const auto u = todo.front();
    todo.pop();
    for (const auto v : adj[u]) {
      if (!seen[v]) {
        seen[v] = true;
        ++count;
        todo.push(v);
      }
    }
  }
  return count == net.buses.size();
}

void check_attack(const SystemModel& m, Collector& c) {
  const auto& net = m.network;
  if (m.attack && m.attack->bus != net.attack_bus)
    c.add("attack", "attack section bus '" + m.attack->bus + "' differs from network attack bus '" +
                        net.attack_bus + "'");
  if (!net.attack_bus.empty()) {
    const auto idx = net.bus_index(net.attack_bus);
    if (!idx) {
      c.add("attack", "attack bus '" + net.attack_bus + "' does not exist");
    } else {
      if (net.buses[*idx].role == BusRole::generator)
        c.add("attack", "attack bus '" + net.attack_bus + "' must be a load or slack bus");
      if (!net.loads.contains(net.attack_bus))
        c.add("attack", "attack bus '" + net.attack_bus + "' has no load entry");
    }
  }
  if (!m.attack) return;
  const auto& a = *m.attack;
  if (!(a.amplitude_pu >= 0.0)) c.add("attack", "amplitude_pu must be >= 0");
  if (a.waveform != Waveform::none && !(a.frequency_hz > 0.0))
    c.add("attack", "frequency_hz must be > 0 for a periodic waveform");
  if (!(a.duty > 0.0 && a.duty < 1.0)) c.add("attack", "duty must lie in (0, 1)");
  if (!(a.start_s >= 0.0)) c.add("attack", "start_s must be >= 0");
}

}  // namespace

std::vector<Violation> validate(const SystemModel& model) {
  Collector c;
  const auto& net = model.network;

  if (!(net.base_mva > 0.0)) c.add("system", "base_mva must be > 0");
  if (!(model.nominal_frequency_hz > 0.0)) c.add("system", "frequency_hz must be > 0");
  if (model.generators.empty()) c.add("system", "no generators declared");

  const auto slack_count = std::count_if(net.buses.begin(), net.buses.end(),
                                         [](const Bus& b) { return b.role == BusRole::slack; });
  if (slack_count != 1)
    c.add("network", "expected exactly one slack bus, found " + std::to_string(slack_count));

  for (std::size_t i = 0; i < net.lines.size(); ++i) {
    const auto& l = net.lines[i];
    const std::string el = "line " + std::to_string(i + 1) + " (" + l.from + "-" + l.to + ")";
    if (!net.bus_index(l.from)) c.add(el, "unknown bus '" + l.from + "'");
    if (!net.bus_index(l.to)) c.add(el, "unknown bus '" + l.to + "'");
    if (l.from == l.to) c.add(el, "line connects a bus to itself");
    if (!(l.x_pu > 0.0)) c.add(el, "reactance " + num(l.x_pu) + " must be > 0");
  }
  if (!connected(net)) c.add("network", "network not connected");

  for (const auto& [bus, mw] : net.loads) {
    const auto idx = net.bus_index(bus);
    if (!idx) {
      c.add("load " + bus, "unknown bus");
    } else if (net.buses[*idx].role == BusRole::generator) {
      c.add("load " + bus, "load placed on a generator bus");
    }
    if (!std::isfinite(mw)) c.add("load " + bus, "load must be finite");
  }

  std::map<std::string, int> hosted;
  for (const auto& g : model.generators) {
    const std::string el = "generator " + g.id;
    const auto idx = net.bus_index(g.bus);
    if (!idx) {
      c.add(el, "unknown bus '" + g.bus + "'");
    } else if (net.buses[*idx].role != BusRole::generator) {
      c.add(el, "bus '" + g.bus + "' is not a generator bus");
    }
    ++hosted[g.bus];
    if (!(g.dispatch_mw >= 0.0)) c.add(el, "dispatch_mw must be >= 0");
    check_shaft(g, c);
  }
  for (const auto& b : net.buses) {
    if (b.role != BusRole::generator) continue;
    const int count = hosted.contains(b.id) ? hosted[b.id] : 0;
    if (count != 1)
      c.add("bus " + b.id, "generator bus hosts " + std::to_string(count) + " generators, expected 1");
  }

  check_attack(model, c);
  return c.take();
}

std::string format_report(const std::vector<Violation>& violations) {
  std::ostringstream out;
  for (const auto& v : violations) out << v.element << ": " << v.message << '\n';
  return out.str();
}

}  // namespace ssr
