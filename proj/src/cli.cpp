#include "ssr/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "ssr/csv.hpp"
#include "ssr/freq.hpp"
#include "ssr/network.hpp"
#include "ssr/report.hpp"
#include "ssr/sim.hpp"
#include "ssr/statespace.hpp"

#ifndef SSR_VERSION
#define SSR_VERSION "dev"
#endif

namespace ssr::cli {

namespace fs = std::filesystem;
using Eigen::Index;

std::string version() { return SSR_VERSION; }

std::string config_hash(const SystemModel& model) {
  const std::string text = serialize(model);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(text.data(), text.size(), digest, &len, EVP_sha256(), nullptr);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return hex.str();
}

namespace {

class InvalidModel : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Pipeline {
  SystemModel model;
  network::ReducedCoupling coupling;
  StateSpaceSystem system;
};

SystemModel load_valid(const std::string& path) {
  auto model = load_model_file(path);
  const auto violations = validate(model);
  if (!violations.empty()) throw InvalidModel(format_report(violations));
  return model;
}

Pipeline build(const std::string& path) {
  Pipeline p;
  p.model = load_valid(path);
  p.coupling = network::reduce(p.model);
  p.system = assemble(p.model, p.coupling);
  return p;
}

std::string attack_bus(const Pipeline& p, const std::string& flag) {
  if (!flag.empty()) return flag;
  if (!p.model.network.attack_bus.empty()) return p.model.network.attack_bus;
  throw InvalidModel("no attack bus: add an [attack] section or pass --attack-bus\n");
}

/// Collects written files and the manifest for one run.
class Outputs {
 public:
  Outputs(std::string dir, std::string subcommand) : dir_(std::move(dir)), subcommand_(std::move(subcommand)) {
    fs::create_directories(dir_);
  }

  std::ofstream open(const std::string& name) {
    const auto path = (fs::path(dir_) / name).string();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    files_.push_back(name);
    return out;
  }

  void manifest(const SystemModel* model, const nlohmann::ordered_json& params) {
    nlohmann::ordered_json j;
    j["tool"] = "ssrscan";
    j["version"] = version();
    j["subcommand"] = subcommand_;
    j["config_hash"] = model ? config_hash(*model) : "";
    j["parameters"] = params;
    j["outputs"] = files_;
    std::ofstream out(fs::path(dir_) / ("manifest_" + subcommand_ + ".json"), std::ios::binary);
    out << j.dump(2) << '\n';
  }

 private:
  std::string dir_;
  std::string subcommand_;
  std::vector<std::string> files_;
};

struct ScanFlags {
  double fmin = 0.0;
  double fmax = 60.0;
  double step = 0.01;
  std::string attack_bus;
  unsigned threads = 0;
};

struct SimFlags {
  std::optional<double> attack_freq;
  std::optional<double> amplitude;
  std::optional<std::string> waveform;
  std::optional<double> start;
  std::optional<double> duty;
  double horizon = 10.0;
  double dt = 1e-3;
  std::string attack_bus;
};

void add_scan_flags(CLI::App* cmd, ScanFlags& f) {
  cmd->add_option("--fmin", f.fmin, "Scan start, Hz")->capture_default_str();
  cmd->add_option("--fmax", f.fmax, "Scan end, Hz")->capture_default_str();
  cmd->add_option("--step", f.step, "Scan step, Hz")->capture_default_str();
  cmd->add_option("--attack-bus", f.attack_bus, "Injection bus (default: [attack] bus)");
  cmd->add_option("--threads", f.threads, "Worker threads (default: SSR_THREADS or all cores)");
}

void add_sim_flags(CLI::App* cmd, SimFlags& f) {
  cmd->add_option("--attack-freq", f.attack_freq, "Attack frequency, Hz");
  cmd->add_option("--amplitude", f.amplitude, "Attack amplitude, p.u. on the system base");
  cmd->add_option("--waveform", f.waveform, "square | sine | none");
  cmd->add_option("--start", f.start, "Attack start, s");
  cmd->add_option("--duty", f.duty, "Square-wave duty fraction");
  cmd->add_option("--horizon", f.horizon, "Simulated time, s")->capture_default_str();
  cmd->add_option("--dt", f.dt, "Time step, s")->capture_default_str();
  cmd->add_option("--attack-bus", f.attack_bus, "Injection bus (default: [attack] bus)");
}

freq::FrequencyScan scan_for(const Pipeline& p, const ScanFlags& f) {
  const freq::FrequencyGrid grid{f.fmin, f.fmax, f.step};
  const auto bus = attack_bus(p, f.attack_bus);
  return freq::transfer_magnitudes(p.system, p.system.input_column(bus), grid, f.threads);
}

nlohmann::ordered_json scan_params(const ScanFlags& f, const std::string& bus) {
  return {{"fmin", f.fmin}, {"fmax", f.fmax}, {"step", f.step}, {"attack_bus", bus}};
}

AttackSpec attack_for(const Pipeline& p, const SimFlags& f) {
  AttackSpec a = p.model.attack.value_or(AttackSpec{});
  a.bus = attack_bus(p, f.attack_bus);
  if (!p.model.attack) a.waveform = Waveform::square;
  if (f.attack_freq) a.frequency_hz = *f.attack_freq;
  if (f.amplitude) a.amplitude_pu = *f.amplitude;
  if (f.start) a.start_s = *f.start;
  if (f.duty) a.duty = *f.duty;
  if (f.waveform) {
    const auto w = parse_waveform(*f.waveform);
    if (!w) throw InvalidModel("unknown waveform '" + *f.waveform + "'\n");
    a.waveform = *w;
  }
  SystemModel probe = p.model;
  probe.attack = a;
  probe.network.attack_bus = a.bus;
  const auto violations = validate(probe);
  if (!violations.empty()) throw InvalidModel(format_report(violations));
  return a;
}

void write_severity(std::ostream& os, const std::vector<sim::SeverityRow>& rows) {
  csv::Writer w(os);
  w.header({"generator", "ratio_id", "kind", "segment", "channel_max", "terminal_max", "ratio"});
  for (const auto& r : rows) {
    const bool speed = r.kind == VarKind::speed;
    w.row({r.generator, (speed ? "R_w" : "R_th") + std::to_string(r.segment + 1), speed ? "speed" : "angle",
           std::to_string(r.segment + 1), csv::format(r.channel_max), csv::format(r.terminal_max),
           sim::format_ratio(r.ratio)});
  }
}

std::string ratio_cell(double v) { return std::isinf(v) ? "unbounded" : csv::format(v); }

// ---------------------------------------------------------------------------
// Subcommands

int cmd_validate(const std::string& path, Outputs& outs, std::ostream& out) {
  const auto model = load_valid(path);
  out << "valid: " << model.size() << " generators, " << model.network.buses.size() << " buses, "
      << model.network.lines.size() << " lines\n";
  outs.manifest(&model, {{"config", path}});
  return kExitOk;
}

int cmd_eig(const std::string& path, Outputs& outs) {
  const auto p = build(path);
  const auto modes = eig_modes(p.system);
  auto os = outs.open("eig_modes.csv");
  csv::Writer w(os);
  w.header({"mode_id", "re", "im", "freq_hz", "damping_ratio", "participation"});
  for (std::size_t i = 0; i < modes.modes.size(); ++i) {
    const auto& m = modes.modes[i];
    std::string tags;
    for (const auto s : m.participation) tags += (tags.empty() ? "" : ";") + p.system.y1_labels[s];
    w.row({std::to_string(i), csv::format(m.eigenvalue.real()), csv::format(m.eigenvalue.imag()),
           csv::format(m.frequency_hz), csv::format(m.damping_ratio), tags});
  }
  outs.manifest(&p.model, {{"config", path}});
  return kExitOk;
}

int cmd_freqscan(const std::string& path, const ScanFlags& f, Outputs& outs) {
  const auto p = build(path);
  const auto scan = scan_for(p, f);
  const auto ratios = freq::ratio_rm(scan);
  {
    auto os = outs.open("freqscan_magnitudes.csv");
    csv::Writer w(os);
    std::vector<std::string> header{"f_hz"};
    header.insert(header.end(), scan.terminal_labels.begin(), scan.terminal_labels.end());
    header.insert(header.end(), scan.torsional_labels.begin(), scan.torsional_labels.end());
    w.header(header);
    for (std::size_t i = 0; i < scan.frequencies.size(); ++i) {
      std::vector<std::string> row{csv::format(scan.frequencies[i])};
      const Index r = static_cast<Index>(i);
      for (Index c = 0; c < scan.terminal.cols(); ++c) row.push_back(csv::format(scan.terminal(r, c)));
      for (Index c = 0; c < scan.torsional.cols(); ++c) row.push_back(csv::format(scan.torsional(r, c)));
      w.row(row);
    }
  }
  {
    auto os = outs.open("freqscan_ratios.csv");
    csv::Writer w(os);
    std::vector<std::string> header{"f_hz"};
    header.insert(header.end(), ratios.labels.begin(), ratios.labels.end());
    w.header(header);
    for (std::size_t i = 0; i < scan.frequencies.size(); ++i) {
      std::vector<std::string> row{csv::format(scan.frequencies[i])};
      for (Index c = 0; c < ratios.values.cols(); ++c) row.push_back(ratio_cell(ratios.values(static_cast<Index>(i), c)));
      w.row(row);
    }
  }
  outs.manifest(&p.model, scan_params(f, attack_bus(p, f.attack_bus)));
  return kExitOk;
}

int cmd_peaks(const std::string& path, const ScanFlags& f, const freq::PeakOptions& opts, Outputs& outs) {
  const auto p = build(path);
  const auto scan = scan_for(p, f);
  const auto peaks = freq::find_peaks(scan, freq::ratio_rm(scan), opts);
  auto os = outs.open("peaks.csv");
  csv::Writer w(os);
  w.header({"output_id", "f_center", "f_lo", "f_hi", "magnitude", "r_m", "stealth_flag"});
  for (const auto& b : peaks)
    w.row({b.output_id, csv::format(b.center_hz), csv::format(b.f_lo), csv::format(b.f_hi), csv::format(b.magnitude),
           ratio_cell(b.r_m), b.stealth ? "1" : "0"});
  auto params = scan_params(f, attack_bus(p, f.attack_bus));
  params["median_factor"] = opts.median_factor;
  if (opts.prominence) params["prominence"] = *opts.prominence;
  outs.manifest(&p.model, params);
  return kExitOk;
}

int cmd_simulate(const std::string& path, const SimFlags& f, Outputs& outs) {
  const auto p = build(path);
  const auto attack = attack_for(p, f);
  const auto result = sim::integrate(p.system, attack, {f.horizon, f.dt, 0.0});
  {
    auto os = outs.open("sim_trajectory.csv");
    csv::Writer w(os);
    std::vector<std::string> header{"t", "input"};
    header.insert(header.end(), result.y1_labels.begin(), result.y1_labels.end());
    header.insert(header.end(), result.y2_labels.begin(), result.y2_labels.end());
    w.header(header);
    std::vector<std::string> row;
    for (std::size_t i = 0; i < result.time.size(); ++i) {
      row.clear();
      row.push_back(csv::format(result.time[i]));
      row.push_back(csv::format(result.input[i]));
      const Index r = static_cast<Index>(i);
      for (Index c = 0; c < result.y1.cols(); ++c) row.push_back(csv::format(result.y1(r, c)));
      for (Index c = 0; c < result.y2.cols(); ++c) row.push_back(csv::format(result.y2(r, c)));
      w.row(row);
    }
  }
  {
    auto os = outs.open("sim_severity.csv");
    write_severity(os, sim::severity_ratios(result));
  }
  outs.manifest(&p.model, {{"attack_bus", attack.bus},
                           {"attack_freq", attack.frequency_hz},
                           {"amplitude", attack.amplitude_pu},
                           {"waveform", std::string(to_string(attack.waveform))},
                           {"start", attack.start_s},
                           {"duty", attack.duty},
                           {"horizon", f.horizon},
                           {"dt", f.dt}});
  return kExitOk;
}

int cmd_report(const std::string& path, const ScanFlags& sf, const SimFlags& f, Outputs& outs, std::ostream& out) {
  const auto p = build(path);
  const auto scan = scan_for(p, sf);
  const auto peaks = freq::find_peaks(scan, freq::ratio_rm(scan));
  auto bands = report::collect_bands(peaks, scan);

  AttackSpec base = attack_for(p, f);
  if (base.waveform == Waveform::none) base.waveform = Waveform::square;
  for (auto& band : bands) {
    if (!band.stealth || !(band.center_hz > 0.0)) continue;
    AttackSpec a = base;
    a.frequency_hz = band.center_hz;
    const auto result = sim::integrate(p.system, a, {f.horizon, f.dt, 0.0});
    report::attach_severity(band, sim::severity_ratios(result));
  }
  const auto text = report::render(bands);
  out << text;
  auto os = outs.open("report.txt");
  os << text;
  auto params = scan_params(sf, base.bus);
  params["horizon"] = f.horizon;
  params["dt"] = f.dt;
  params["start"] = base.start_s;
  params["amplitude"] = base.amplitude_pu;
  outs.manifest(&p.model, params);
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sub-synchronous resonance scanner for multi-mass generator shafts", "ssrscan"};
  app.require_subcommand(1);
  app.set_version_flag("--version", version());

  std::string config;
  std::string out_dir = ".";
  ScanFlags scan_flags;
  SimFlags sim_flags;
  freq::PeakOptions peak_opts;
  double prominence = -1.0;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("config", config, "System configuration file")->required();
    cmd->add_option("--out-dir", out_dir, "Directory for CSV and manifest outputs")->capture_default_str();
  };

  auto* validate_cmd = app.add_subcommand("validate", "Check a configuration against the model invariants");
  add_common(validate_cmd);
  auto* eig_cmd = app.add_subcommand("eig", "Eigenvalues, frequencies and damping of the linear model");
  add_common(eig_cmd);
  auto* scan_cmd = app.add_subcommand("freqscan", "Transfer magnitudes and R_M ratios over a frequency grid");
  add_common(scan_cmd);
  add_scan_flags(scan_cmd, scan_flags);
  auto* peaks_cmd = app.add_subcommand("peaks", "Resonance bands of the torsional outputs");
  add_common(peaks_cmd);
  add_scan_flags(peaks_cmd, scan_flags);
  peaks_cmd->add_option("--prominence", prominence, "Absolute prominence threshold");
  peaks_cmd->add_option("--median-factor", peak_opts.median_factor, "Threshold as a multiple of the curve median")
      ->capture_default_str();
  auto* sim_cmd = app.add_subcommand("simulate", "Time-domain attack simulation");
  add_common(sim_cmd);
  add_sim_flags(sim_cmd, sim_flags);
  auto* report_cmd = app.add_subcommand("report", "Scan, simulate every stealth band and rank the results");
  add_common(report_cmd);
  report_cmd->add_option("--fmin", scan_flags.fmin)->capture_default_str();
  report_cmd->add_option("--fmax", scan_flags.fmax)->capture_default_str();
  report_cmd->add_option("--step", scan_flags.step)->capture_default_str();
  report_cmd->add_option("--threads", scan_flags.threads);
  report_cmd->add_option("--amplitude", sim_flags.amplitude);
  report_cmd->add_option("--start", sim_flags.start);
  report_cmd->add_option("--horizon", sim_flags.horizon)->capture_default_str();
  report_cmd->add_option("--dt", sim_flags.dt)->capture_default_str();
  report_cmd->add_option("--attack-bus", sim_flags.attack_bus);

  std::vector<const char*> argv{"ssrscan"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInvalid;
  }
  scan_flags.attack_bus = scan_flags.attack_bus.empty() ? sim_flags.attack_bus : scan_flags.attack_bus;
  if (prominence >= 0.0) peak_opts.prominence = prominence;

  try {
    if (*validate_cmd) {
      Outputs outs(out_dir, "validate");
      return cmd_validate(config, outs, out);
    }
    if (*eig_cmd) {
      Outputs outs(out_dir, "eig");
      return cmd_eig(config, outs);
    }
    if (*scan_cmd) {
      Outputs outs(out_dir, "freqscan");
      return cmd_freqscan(config, scan_flags, outs);
    }
    if (*peaks_cmd) {
      Outputs outs(out_dir, "peaks");
      return cmd_peaks(config, scan_flags, peak_opts, outs);
    }
    if (*sim_cmd) {
      Outputs outs(out_dir, "simulate");
      return cmd_simulate(config, sim_flags, outs);
    }
    if (*report_cmd) {
      Outputs outs(out_dir, "report");
      return cmd_report(config, scan_flags, sim_flags, outs, out);
    }
  } catch (const InvalidModel& e) {
    err << "invalid model:\n" << e.what();
    return kExitInvalid;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const std::invalid_argument& e) {
    err << "invalid argument: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  }
  return kExitInvalid;
}

}  // namespace ssr::cli
