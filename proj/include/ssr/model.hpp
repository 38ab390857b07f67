#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ssr {

inline constexpr std::size_t kMassesPerShaft = 5;
inline constexpr std::size_t kShaftSegments = kMassesPerShaft - 1;

/// Field pole count assumed for every machine (two-pole turbo-generators).
inline constexpr double kFieldPoles = 2.0;

/// Mass names along the shaft, generator end first.
inline constexpr std::array<std::string_view, kMassesPerShaft> kMassNames = {"g", "s1", "s2", "s3",
                                                                             "s4"};

enum class BusRole { generator, load, slack };

std::string_view to_string(BusRole role);
std::optional<BusRole> parse_bus_role(std::string_view text);

/// Five-mass torsional shaft. Masses are ordered [g, s1, s2, s3, s4] and
/// stiffnesses[i] couples mass i to mass i + 1 (K12, K23, K34, K45).
struct ShaftParams {
  std::array<double, kMassesPerShaft> inertias{};     // H, seconds
  std::array<double, kMassesPerShaft> dampings{};     // p.u. torque per rad/s
  std::array<double, kShaftSegments> stiffnesses{};   // p.u. torque per rad
  std::array<double, kShaftSegments> power_fractions{};  // turbine share for s1..s4

  /// Generator mass undamped, turbine masses lightly damped.
  static constexpr std::array<double, kMassesPerShaft> kDefaultDampings = {0.0, 0.01, 0.01, 0.01,
                                                                          0.01};

  bool operator==(const ShaftParams&) const = default;
};

struct GeneratorModel {
  std::string id;
  std::string bus;
  ShaftParams shaft;
  double dispatch_mw = 0.0;

  bool operator==(const GeneratorModel&) const = default;
};

struct Bus {
  std::string id;
  BusRole role = BusRole::load;

  bool operator==(const Bus&) const = default;
};

struct Line {
  std::string from;
  std::string to;
  double x_pu = 0.0;

  bool operator==(const Line&) const = default;
};

struct NetworkModel {
  std::vector<Bus> buses;
  std::vector<Line> lines;
  std::map<std::string, double> loads;  // bus id -> MW
  double base_mva = 100.0;
  std::string attack_bus;               // empty when no attack point is configured

  std::optional<std::size_t> bus_index(std::string_view id) const;
  std::optional<std::size_t> slack_index() const;
  double load_pu(std::string_view bus_id) const;

  bool operator==(const NetworkModel&) const = default;
};

enum class Waveform { square, sine, none };

std::string_view to_string(Waveform waveform);
std::optional<Waveform> parse_waveform(std::string_view text);

/// Storage-device injection. Amplitude is p.u. on the system base; positive
/// values are extra consumption at the bus.
struct AttackSpec {
  std::string bus;
  double amplitude_pu = 1.0;
  double frequency_hz = 0.0;
  Waveform waveform = Waveform::none;
  double start_s = 0.0;
  double duty = 0.5;

  bool operator==(const AttackSpec&) const = default;
};

struct SystemModel {
  std::vector<GeneratorModel> generators;
  NetworkModel network;
  double nominal_frequency_hz = 60.0;
  std::optional<AttackSpec> attack;

  /// Rated mechanical angular velocity, rad/s.
  double omega_0m() const {
    return 2.0 * std::numbers::pi * nominal_frequency_hz * (2.0 / kFieldPoles);
  }

  std::size_t size() const { return generators.size(); }

  bool operator==(const SystemModel&) const = default;
};

// ---------------------------------------------------------------------------
// Errors raised while reading a configuration.

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, int line) : std::runtime_error(what), line_(line) {}
  /// 1-based source line, 0 when not tied to a line.
  int line() const { return line_; }

 private:
  int line_;
};

class ParseError : public ConfigError {
  using ConfigError::ConfigError;
};
class ReferenceError : public ConfigError {
  using ConfigError::ConfigError;
};
class DuplicateError : public ConfigError {
  using ConfigError::ConfigError;
};

SystemModel load_model(std::string_view config_text);
SystemModel load_model_file(const std::string& path);

/// Canonical text form; load_model(serialize(m)) == m.
std::string serialize(const SystemModel& model);

struct Violation {
  std::string element;
  std::string message;
};

/// Checks every model invariant. An empty result means the model is valid.
std::vector<Violation> validate(const SystemModel& model);

std::string format_report(const std::vector<Violation>& violations);

}  // namespace ssr
