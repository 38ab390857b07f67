// Reader and writer for the sectioned text configuration.
//
//   [system]     base_mva, frequency_hz
//   [bus]        id, role (generator | load | slack)
//   [line]       from, to, x_pu
//   [generator]  id, bus, dispatch_mw, h (5), d (5, optional), k (4), bf (4)
//   [load]       bus, mw
//   [attack]     bus, amplitude_pu, frequency_hz, waveform, start_s, duty
//
// '#' and ';' start comments. List values are separated by whitespace or commas.

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "ssr/csv.hpp"
#include "ssr/model.hpp"

namespace ssr {

namespace {

struct Entry {
  std::string key;
  std::string value;
  int line = 0;
};

struct Section {
  std::string name;
  int line = 0;
  std::vector<Entry> entries;
};

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string at_line(int line) { return "line " + std::to_string(line) + ": "; }

std::vector<Section> split_sections(std::string_view text) {
  std::vector<Section> sections;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto eol = text.find('\n', pos);
    std::string_view raw =
        text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
    ++line_no;

    if (const auto c = raw.find_first_of("#;"); c != std::string_view::npos) raw = raw.substr(0, c);
    const auto line = trim(raw);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError(at_line(line_no) + "unterminated section header", line_no);
      sections.push_back({std::string(trim(line.substr(1, line.size() - 2))), line_no, {}});
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ParseError(at_line(line_no) + "expected 'key = value'", line_no);
    if (sections.empty())
      throw ParseError(at_line(line_no) + "entry outside of any section", line_no);
    const auto key = trim(line.substr(0, eq));
    if (key.empty()) throw ParseError(at_line(line_no) + "empty key", line_no);
    sections.back().entries.push_back(
        {std::string(key), std::string(trim(line.substr(eq + 1))), line_no});
  }
  return sections;
}

double parse_number(std::string_view text, const Entry& e) {
  double value = 0.0;
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty())
    throw ParseError(at_line(e.line) + "'" + e.key + "' expects a number, got '" + std::string(text) + "'",
                     e.line);
  return value;
}

template <std::size_t N>
std::array<double, N> parse_list(const Entry& e) {
  std::string normalized = e.value;
  std::replace(normalized.begin(), normalized.end(), ',', ' ');
  std::istringstream in(normalized);
  std::vector<double> values;
  for (std::string tok; in >> tok;) values.push_back(parse_number(tok, e));
  if (values.size() != N)
    throw ParseError(at_line(e.line) + "'" + e.key + "' expects " + std::to_string(N) +
                         " values, got " + std::to_string(values.size()),
                     e.line);
  std::array<double, N> out{};
  std::copy(values.begin(), values.end(), out.begin());
  return out;
}

/// Key lookup for one section with unknown-key and missing-key reporting.
class Fields {
 public:
  Fields(const Section& s, std::initializer_list<std::string_view> allowed) : section_(s) {
    std::set<std::string> seen;
    for (const auto& e : s.entries) {
      if (std::find(allowed.begin(), allowed.end(), e.key) == allowed.end())
        throw ParseError(at_line(e.line) + "unknown key '" + e.key + "' in [" + s.name + "]", e.line);
      if (!seen.insert(e.key).second)
        throw DuplicateError(at_line(e.line) + "key '" + e.key + "' repeated in [" + s.name + "]",
                             e.line);
    }
  }

  const Entry* find(std::string_view key) const {
    for (const auto& e : section_.entries)
      if (e.key == key) return &e;
    return nullptr;
  }

  const Entry& require(std::string_view key) const {
    if (const auto* e = find(key)) return *e;
    throw ParseError(at_line(section_.line) + "[" + section_.name + "] is missing '" +
                         std::string(key) + "'",
                     section_.line);
  }

  std::string text(std::string_view key) const {
    const auto& e = require(key);
    if (e.value.empty()) throw ParseError(at_line(e.line) + "empty value for '" + e.key + "'", e.line);
    return e.value;
  }

  double number(std::string_view key) const {
    const auto& e = require(key);
    return parse_number(e.value, e);
  }

  double number_or(std::string_view key, double fallback) const {
    const auto* e = find(key);
    return e ? parse_number(e->value, *e) : fallback;
  }

 private:
  const Section& section_;
};

}  // namespace

SystemModel load_model(std::string_view config_text) {
  const auto sections = split_sections(config_text);

  SystemModel model;
  bool have_system = false;
  std::map<std::string, int> bus_lines;
  std::set<std::string> generator_ids;

  struct PendingRef {
    std::string bus;
    std::string what;
    int line;
  };
  std::vector<PendingRef> refs;

  for (const auto& s : sections) {
    if (s.name == "system") {
      if (have_system) throw DuplicateError(at_line(s.line) + "second [system] section", s.line);
      have_system = true;
      Fields f(s, {"base_mva", "frequency_hz"});
      model.network.base_mva = f.number_or("base_mva", 100.0);
      model.nominal_frequency_hz = f.number_or("frequency_hz", 60.0);
    } else if (s.name == "bus") {
      Fields f(s, {"id", "role"});
      Bus bus;
      bus.id = f.text("id");
      const auto& role = f.require("role");
      const auto parsed = parse_bus_role(role.value);
      if (!parsed)
        throw ParseError(at_line(role.line) + "unknown bus role '" + role.value + "'", role.line);
      bus.role = *parsed;
      if (!bus_lines.emplace(bus.id, s.line).second)
        throw DuplicateError(at_line(s.line) + "duplicate bus id '" + bus.id + "'", s.line);
      model.network.buses.push_back(std::move(bus));
    } else if (s.name == "line") {
      Fields f(s, {"from", "to", "x_pu"});
      Line line{f.text("from"), f.text("to"), f.number("x_pu")};
      refs.push_back({line.from, "line", s.line});
      refs.push_back({line.to, "line", s.line});
      model.network.lines.push_back(std::move(line));
    } else if (s.name == "generator") {
      Fields f(s, {"id", "bus", "dispatch_mw", "h", "d", "k", "bf"});
      GeneratorModel g;
      g.id = f.text("id");
      g.bus = f.text("bus");
      g.dispatch_mw = f.number("dispatch_mw");
      g.shaft.inertias = parse_list<kMassesPerShaft>(f.require("h"));
      g.shaft.dampings =
          f.find("d") ? parse_list<kMassesPerShaft>(*f.find("d")) : ShaftParams::kDefaultDampings;
      g.shaft.stiffnesses = parse_list<kShaftSegments>(f.require("k"));
      g.shaft.power_fractions = parse_list<kShaftSegments>(f.require("bf"));
      if (!generator_ids.insert(g.id).second)
        throw DuplicateError(at_line(s.line) + "duplicate generator id '" + g.id + "'", s.line);
      refs.push_back({g.bus, "generator " + g.id, s.line});
      model.generators.push_back(std::move(g));
    } else if (s.name == "load") {
      Fields f(s, {"bus", "mw"});
      const auto bus = f.text("bus");
      if (!model.network.loads.emplace(bus, f.number("mw")).second)
        throw DuplicateError(at_line(s.line) + "second load entry for bus '" + bus + "'", s.line);
      refs.push_back({bus, "load", s.line});
    } else if (s.name == "attack") {
      if (model.attack) throw DuplicateError(at_line(s.line) + "second [attack] section", s.line);
      Fields f(s, {"bus", "amplitude_pu", "frequency_hz", "waveform", "start_s", "duty"});
      AttackSpec a;
      a.bus = f.text("bus");
      a.amplitude_pu = f.number_or("amplitude_pu", 1.0);
      a.frequency_hz = f.number_or("frequency_hz", 0.0);
      if (const auto* w = f.find("waveform")) {
        const auto parsed = parse_waveform(w->value);
        if (!parsed) throw ParseError(at_line(w->line) + "unknown waveform '" + w->value + "'", w->line);
        a.waveform = *parsed;
      }
      a.start_s = f.number_or("start_s", 0.0);
      a.duty = f.number_or("duty", 0.5);
      refs.push_back({a.bus, "attack", s.line});
      model.network.attack_bus = a.bus;
      model.attack = std::move(a);
    } else {
      throw ParseError(at_line(s.line) + "unknown section [" + s.name + "]", s.line);
    }
  }

  for (const auto& r : refs) {
    if (!bus_lines.contains(r.bus))
      throw ReferenceError(at_line(r.line) + r.what + " references undeclared bus '" + r.bus + "'",
                           r.line);
  }
  return model;
}

SystemModel load_model_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path + "'", 0);
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_model(buf.str());
}

namespace {

template <std::size_t N>
std::string join(const std::array<double, N>& values) {
  std::string out;
  for (std::size_t i = 0; i < N; ++i) {
    if (i != 0) out += ' ';
    out += csv::format_exact(values[i]);
  }
  return out;
}

}  // namespace

std::string serialize(const SystemModel& model) {
  std::ostringstream out;
  const auto& net = model.network;
  out << "[system]\n"
      << "base_mva = " << csv::format_exact(net.base_mva) << '\n'
      << "frequency_hz = " << csv::format_exact(model.nominal_frequency_hz) << '\n';
  for (const auto& b : net.buses)
    out << "\n[bus]\nid = " << b.id << "\nrole = " << to_string(b.role) << '\n';
  for (const auto& l : net.lines)
    out << "\n[line]\nfrom = " << l.from << "\nto = " << l.to
        << "\nx_pu = " << csv::format_exact(l.x_pu) << '\n';
  for (const auto& g : model.generators) {
    out << "\n[generator]\nid = " << g.id << "\nbus = " << g.bus
        << "\ndispatch_mw = " << csv::format_exact(g.dispatch_mw)
        << "\nh = " << join(g.shaft.inertias) << "\nd = " << join(g.shaft.dampings)
        << "\nk = " << join(g.shaft.stiffnesses) << "\nbf = " << join(g.shaft.power_fractions)
        << '\n';
  }
  for (const auto& [bus, mw] : net.loads)
    out << "\n[load]\nbus = " << bus << "\nmw = " << csv::format_exact(mw) << '\n';
  if (model.attack) {
    const auto& a = *model.attack;
    out << "\n[attack]\nbus = " << a.bus << "\namplitude_pu = " << csv::format_exact(a.amplitude_pu)
        << "\nfrequency_hz = " << csv::format_exact(a.frequency_hz)
        << "\nwaveform = " << to_string(a.waveform) << "\nstart_s = " << csv::format_exact(a.start_s)
        << "\nduty = " << csv::format_exact(a.duty) << '\n';
  }
  return out.str();
}

}  // namespace ssr
