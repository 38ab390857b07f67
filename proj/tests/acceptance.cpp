// Acceptance checks on the bundled two-area system. One line per criterion;
// the exit status is non-zero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "ssr/cli.hpp"
#include "ssr/freq.hpp"
#include "ssr/sim.hpp"

namespace fs = std::filesystem;
using namespace ssr;

namespace {

// Tolerances and limits.
constexpr double kTwoMassRelTol = 1e-9;
constexpr double kGridStepHz = 0.01;
constexpr double kSineAmplitudeTol = 0.02;
constexpr double kSettleTimeConstants = 20.0;
constexpr double kLightDamping = 0.05;
constexpr int kTorsionalModesPerShaft = 4;
constexpr double kStealthThreshold = 1.0;
constexpr double kContrastFactor = 5.0;
constexpr double kContrastOffsetHz = 2.0;
constexpr double kContrastResidueShare = 0.1;
constexpr double kSuperpositionTol = 1e-9;
constexpr double kStepHalvingTol = 1e-3;
constexpr double kTieFlowMw = 400.0;
constexpr double kTieFlowRelTol = 0.01;
constexpr double kDispatchTol = 1e-8;

constexpr double kLimitTwoMass = 1.0;
constexpr double kLimitSine = 30.0;
constexpr double kLimitCrossCheck = 10.0;
constexpr double kLimitStealth = 30.0;
constexpr double kLimitContrast = 30.0;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

int failures = 0;

void report(int id, const std::string& name, double limit_s, const std::function<Outcome()>& check) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (limit_s > 0.0 && elapsed > limit_s) {
    o.pass = false;
    o.detail += fmt("; runtime over limit %.0f s", limit_s);
  }
  const std::string timing = limit_s > 0.0 ? fmt(" [%.2f s, limit %.0f s]", elapsed, limit_s) : fmt(" [%.2f s]", elapsed);
  std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << " " << name << ": " << o.detail << timing
            << std::endl;
  if (!o.pass) ++failures;
}

struct Fixture {
  SystemModel model;
  network::ReducedCoupling coupling;
  StateSpaceSystem system;
  Eigen::VectorXd input;
};

const Fixture& fixture() {
  static const Fixture f = [] {
    Fixture x;
    x.model = test::two_area();
    x.coupling = network::reduce(x.model);
    x.system = assemble(x.model, x.coupling);
    x.input = x.system.input_column(x.model.network.attack_bus);
    return x;
  }();
  return f;
}

double max_torsional_speed(const sim::SimulationResult& r) {
  double best = 0.0;
  for (const auto& row : sim::severity_ratios(r))
    if (row.kind == VarKind::speed) best = std::max(best, row.channel_max);
  return best;
}

// --------------------------------------------------------------------------

Outcome two_mass_oracle() {
  struct Case {
    double h1, h2, k;
  };
  const double w0 = 2.0 * std::numbers::pi * 60.0;
  double worst_rel = 0.0, worst_offset = 0.0;
  bool one_peak = true;
  for (const Case c : {Case{0.9, 0.25, 20.0}, Case{0.25, 0.9, 70.0}, Case{3.5, 0.6, 35.0}}) {
    const double expect = test::two_mass_hz(c.h1, c.h2, c.k, w0);
    const auto sys = assemble_chain({{c.h1, c.h2}, {0.0, 0.0}, {c.k}}, w0);
    const auto modes = eig_modes(sys);
    int oscillatory = 0;
    for (const auto& m : modes.modes) {
      if (m.eigenvalue.imag() <= 1e-6 * expect) continue;
      ++oscillatory;
      worst_rel = std::max(worst_rel, std::abs(m.frequency_hz - expect) / expect);
    }
    if (oscillatory != 1) worst_rel = INFINITY;

    const auto scan = freq::transfer_magnitudes(sys, sys.b.col(0), {0.0, 60.0, kGridStepHz});
    const auto peaks = freq::find_peaks(scan, freq::ratio_rm(scan));
    std::vector<int> per_output(static_cast<std::size_t>(scan.torsional.cols()), 0);
    for (const auto& p : peaks) {
      ++per_output[p.output];
      worst_offset = std::max(worst_offset, std::abs(p.center_hz - expect));
    }
    for (const int n : per_output) one_peak = one_peak && n == 1;
  }
  const bool pass = worst_rel <= kTwoMassRelTol && worst_offset <= kGridStepHz * (1 + 1e-9) && one_peak;
  return {pass, fmt("eigen-frequency rel. error %.2e (tol %.0e), peak offset %.4f Hz (tol %.2f Hz), one peak per "
                    "curve: %s",
                    worst_rel, kTwoMassRelTol, worst_offset, kGridStepHz, one_peak ? "yes" : "no")};
}

Outcome sine_consistency() {
  const auto& fx = fixture();
  const auto modes = eig_modes(fx.system);

  // Slowest decay among modes the attack input reaches.
  Eigen::MatrixXd outputs(fx.system.c1.rows() + fx.system.c2.rows(), fx.system.a.cols());
  outputs << fx.system.c1, fx.system.c2;
  const auto residues = modes.residues(outputs, fx.input);
  const double largest = *std::max_element(residues.begin(), residues.end());
  double slowest = INFINITY;
  for (std::size_t m = 0; m < modes.modes.size(); ++m)
    if (residues[m] > 1e-9 * largest) slowest = std::min(slowest, -modes.modes[m].eigenvalue.real());
  const double settle = kSettleTimeConstants / slowest;

  // Two torsional modes taken on the nose, three frequencies well away from any mode.
  std::vector<double> on_mode;
  for (const auto& m : modes.modes)
    if (m.torsional && m.dominant_generator == 0) on_mode.push_back(m.frequency_hz);
  const std::vector<double> freqs = {0.7, on_mode.at(1), 27.5, on_mode.at(3), 48.0};

  double worst = 0.0, worst_f = 0.0;
  std::string worst_output;
  std::size_t compared = 0;
  for (const double f : freqs) {
    const auto scan = freq::transfer_magnitudes(fx.system, fx.input, {f, f + 1.0, 1.0});
    const auto r = sim::integrate(
        fx.system, fx.input, [f](double t) { return std::sin(2.0 * std::numbers::pi * f * t); }, 0.0,
        {settle + 2.0, 1e-3, settle});
    auto compare = [&](const Eigen::MatrixXd& gamma, const sim::Trajectory& y, const std::vector<std::string>& labels) {
      const double top = gamma.row(0).maxCoeff();
      for (Eigen::Index k = 0; k < gamma.cols(); ++k) {
        const double expect = gamma(0, k);
        if (expect < 1e-3 * top) continue;
        const double got = test::fitted_amplitude(r.time, y.col(k), f);
        const double err = std::abs(got / expect - 1.0);
        ++compared;
        if (err > worst) {
          worst = err;
          worst_f = f;
          worst_output = labels[static_cast<std::size_t>(k)];
        }
      }
    };
    compare(scan.terminal, r.y1, r.y1_labels);
    compare(scan.torsional, r.y2, r.y2_labels);
  }
  return {worst <= kSineAmplitudeTol,
          fmt("%zu output amplitudes at 0.7, %.4f, 27.5, %.4f, 48 Hz after %.0f s settling; worst deviation %.3f%% "
              "(%s at %.4f Hz, tol %.0f%%)",
              compared, on_mode.at(1), on_mode.at(3), settle, 100.0 * worst, worst_output.c_str(), worst_f,
              100.0 * kSineAmplitudeTol)};
}

Outcome peak_eigen_cross_check() {
  const auto& fx = fixture();
  const auto scan = freq::transfer_magnitudes(fx.system, fx.input, {0.0, 60.0, kGridStepHz});
  const auto peaks = freq::find_peaks(scan, freq::ratio_rm(scan));
  const auto modes = eig_modes(fx.system, kLightDamping);
  const auto match = freq::cross_check(peaks, modes, modes.residues(fx.system.c2, fx.input), kGridStepHz);

  std::vector<int> torsional(fx.model.generators.size(), 0);
  for (const auto& m : modes.modes)
    if (m.torsional && m.lightly_damped && m.frequency_hz < 60.0) ++torsional[m.dominant_generator];
  bool four_each = true;
  std::string counts;
  for (std::size_t g = 0; g < torsional.size(); ++g) {
    four_each = four_each && torsional[g] == kTorsionalModesPerShaft;
    counts += (g ? ", " : "") + fx.model.generators[g].id + "=" + std::to_string(torsional[g]);
  }
  return {match.ok() && four_each && !peaks.empty(),
          fmt("%zu peaks vs %zu excited lightly damped modes, unmatched peaks %zu, unmatched modes %zu (tol %.2f Hz); "
              "torsional modes per generator: %s",
              peaks.size(), match.checked_modes.size(), match.unmatched_peaks.size(), match.unmatched_modes.size(),
              kGridStepHz, counts.c_str())};
}

Outcome stealth_property() {
  const auto& fx = fixture();
  const auto scan = freq::transfer_magnitudes(fx.system, fx.input, {0.0, 60.0, kGridStepHz});
  const auto peaks = freq::find_peaks(scan, freq::ratio_rm(scan));

  // Frequency of the global terminal-angle peak (the electromechanical swing).
  double global_hz = 0.0, global_mag = -1.0;
  for (Eigen::Index k = 0; k < scan.terminal.cols(); ++k) {
    if (scan.terminal_labels[static_cast<std::size_t>(k)].rfind("th_", 0) != 0) continue;
    Eigen::Index row = 0;
    const double v = scan.terminal.col(k).maxCoeff(&row);
    if (v > global_mag) {
      global_mag = v;
      global_hz = scan.frequencies[static_cast<std::size_t>(row)];
    }
  }

  for (const auto& p : peaks) {
    if (!(p.r_m > kStealthThreshold) || p.center_hz >= 60.0) continue;
    if (p.f_lo <= global_hz && global_hz <= p.f_hi) continue;
    AttackSpec attack = *fx.model.attack;
    attack.waveform = Waveform::square;
    attack.frequency_hz = p.center_hz;
    const auto r = sim::integrate(fx.system, attack, {10.0, 1e-3, 0.0});
    for (const auto& row : sim::severity_ratios(r)) {
      if (row.kind != VarKind::speed || row.ratio.status != sim::RatioStatus::finite) continue;
      if (row.ratio.value > kStealthThreshold)
        return {true, fmt("band %.2f-%.2f Hz (%s) has R_M = %.2f; 10 s square wave at %.2f Hz gives R_w%zu = %.2f "
                          "for %s (terminal-angle peak at %.2f Hz excluded)",
                          p.f_lo, p.f_hi, p.output_id.c_str(), p.r_m, p.center_hz, row.segment + 1,
                          row.ratio.value, row.generator.c_str(), global_hz)};
    }
  }
  return {false, "no band with R_M > 1 was confirmed by simulation"};
}

Outcome resonance_contrast() {
  const auto& fx = fixture();
  const auto modes = eig_modes(fx.system);
  const auto residues = modes.residues(fx.system.c2, fx.input);
  const double largest = *std::max_element(residues.begin(), residues.end());

  double worst_gated = INFINITY, worst_gated_f = 0.0;
  double worst_any = INFINITY, worst_any_f = 0.0;
  int gated = 0, excited = 0;
  for (std::size_t m = 0; m < modes.modes.size(); ++m) {
    const auto& mode = modes.modes[m];
    if (!mode.torsional || residues[m] < 1e-9 * largest) continue;
    auto drive = [&](double f) {
      AttackSpec a = *fx.model.attack;
      a.waveform = Waveform::square;
      a.frequency_hz = f;
      return max_torsional_speed(sim::integrate(fx.system, a, {10.0, 1e-3, 0.0}));
    };
    const double center = std::round(mode.frequency_hz / kGridStepHz) * kGridStepHz;
    const double ratio =
        drive(center) / std::max(drive(center - kContrastOffsetHz), drive(center + kContrastOffsetHz));
    ++excited;
    if (ratio < worst_any) {
      worst_any = ratio;
      worst_any_f = center;
    }
    if (residues[m] < kContrastResidueShare * largest) continue;
    ++gated;
    if (ratio < worst_gated) {
      worst_gated = ratio;
      worst_gated_f = center;
    }
  }
  return {gated > 0 && worst_gated >= kContrastFactor,
          fmt("%d grid-coupled torsional modes (residue >= %.0f%% of largest) driven at center and +-%.0f Hz; smallest "
              "on/off ratio %.1f at %.2f Hz (need >= %.0f); over all %d excited modes the weakest is %.1f at %.2f Hz",
              gated, 100.0 * kContrastResidueShare, kContrastOffsetHz, worst_gated, worst_gated_f, kContrastFactor,
              excited, worst_any, worst_any_f)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome linearity_and_determinism() {
  const auto& fx = fixture();

  // Superposition.
  AttackSpec s1 = *fx.model.attack;
  s1.frequency_hz = 35.28;
  AttackSpec s2 = s1;
  s2.waveform = Waveform::sine;
  s2.frequency_hz = 21.4;
  s2.start_s = 0.7;
  s2.amplitude_pu = 0.6;
  const sim::IntegrateOptions opts{10.0, 1e-3, 0.0};
  auto u1 = [&](double t) { return sim::attack_signal(s1, t); };
  auto u2 = [&](double t) { return sim::attack_signal(s2, t); };
  const auto r1 = sim::integrate(fx.system, fx.input, u1, 0.0, opts);
  const auto r2 = sim::integrate(fx.system, fx.input, u2, 0.0, opts);
  const auto r12 = sim::integrate(fx.system, fx.input, [&](double t) { return u1(t) + u2(t); }, 0.0, opts);
  const double scale = std::max({1.0, r12.y1.cwiseAbs().maxCoeff(), r12.y2.cwiseAbs().maxCoeff()});
  const double superposition =
      std::max((r12.y1 - r1.y1 - r2.y1).cwiseAbs().maxCoeff(), (r12.y2 - r1.y2 - r2.y2).cwiseAbs().maxCoeff()) / scale;

  // Repeated CLI runs.
  const auto base = fs::temp_directory_path() / "ssrscan_acceptance";
  fs::remove_all(base);
  const auto cfg = test::data_path("two_area.cfg");
  std::ostringstream sink;
  for (const char* run : {"a", "b"}) {
    const auto dir = (base / run).string();
    for (const std::vector<std::string>& args :
         {std::vector<std::string>{"eig", cfg, "--out-dir", dir}, {"freqscan", cfg, "--out-dir", dir},
          {"peaks", cfg, "--out-dir", dir}, {"simulate", cfg, "--out-dir", dir}})
      if (cli::run(args, sink, sink) != 0) return {false, "CLI run failed: " + sink.str()};
  }
  std::size_t files = 0;
  bool identical = true;
  for (const auto& entry : fs::directory_iterator(base / "a")) {
    ++files;
    identical = identical && slurp(entry.path()) == slurp(base / "b" / entry.path().filename());
  }
  fs::remove_all(base);

  // Step halving, maxima compared on the common 1 ms instants.
  auto halving = [&](const AttackSpec& attack) {
    const auto coarse = sim::integrate(fx.system, attack, {10.0, 1e-3, 0.0});
    const auto fine = sim::integrate(fx.system, attack, {10.0, 5e-4, 0.0});
    double worst = 0.0;
    auto compare = [&](const sim::Trajectory& a, const sim::Trajectory& b) {
      const double top = a.cwiseAbs().maxCoeff();
      for (Eigen::Index k = 0; k < a.cols(); ++k) {
        const double x = a.col(k).cwiseAbs().maxCoeff();
        if (x < 1e-6 * top) continue;
        double y = 0.0;
        for (Eigen::Index i = 0; i < b.rows(); i += 2) y = std::max(y, std::abs(b(i, k)));
        worst = std::max(worst, std::abs(y - x) / x);
      }
    };
    compare(coarse.y1, fine.y1);
    compare(coarse.y2, fine.y2);
    return worst;
  };
  AttackSpec aligned = *fx.model.attack;
  aligned.frequency_hz = 25.0;  // edges on both time grids
  AttackSpec smooth = *fx.model.attack;
  smooth.waveform = Waveform::sine;
  smooth.frequency_hz = 26.81;
  const double halving_aligned = halving(aligned);
  const double halving_sine = halving(smooth);
  const double halving_off_grid = halving(*fx.model.attack);
  const double halving_worst = std::max(halving_aligned, halving_sine);

  const bool pass = superposition <= kSuperpositionTol && identical && files >= 9 && halving_worst < kStepHalvingTol;
  return {pass, fmt("superposition residual %.2e of peak (tol %.0e); %zu output files byte-identical: %s; "
                    "step halving changes maxima by %.2e (25 Hz square) and %.4f%% (26.81 Hz sine), tol %.1f%%; "
                    "not gated: %.2f%% for the %.2f Hz square wave, whose off-grid edges alias",
                    superposition, kSuperpositionTol, files, identical ? "yes" : "no", halving_aligned,
                    100.0 * halving_sine, 100.0 * kStepHalvingTol, 100.0 * halving_off_grid,
                    fx.model.attack->frequency_hz)};
}

Outcome network_oracle() {
  const auto& fx = fixture();
  const auto theta = test::dc_power_flow(fx.model);
  const auto& net = fx.model.network;

  // Area 1 export: flow over the tie from bus 3 to bus 13.
  double tie_mw = NAN;
  for (const auto& l : net.lines) {
    const bool forward = l.from == "3" && l.to == "13";
    const bool backward = l.from == "13" && l.to == "3";
    if (!forward && !backward) continue;
    const auto i = static_cast<Eigen::Index>(*net.bus_index("3"));
    const auto j = static_cast<Eigen::Index>(*net.bus_index("13"));
    tie_mw = (theta(i) - theta(j)) / l.x_pu * net.base_mva;
  }

  const auto& rc = fx.coupling;
  Eigen::VectorXd theta_g(static_cast<Eigen::Index>(rc.generator_count()));
  for (std::size_t g = 0; g < rc.generator_count(); ++g)
    theta_g(static_cast<Eigen::Index>(g)) = theta(static_cast<Eigen::Index>(rc.generator_buses[g]));
  const Eigen::VectorXd p = rc.terminal * theta_g + rc.load * network::load_vector(fx.model, rc);
  const double mismatch = (p - network::dispatch_vector(fx.model, rc)).cwiseAbs().maxCoeff();

  const double rel = std::abs(tie_mw - kTieFlowMw) / kTieFlowMw;
  return {rel <= kTieFlowRelTol && mismatch <= kDispatchTol,
          fmt("tie flow 3->13 = %.2f MW (expected %.0f MW, rel. error %.2e, tol %.0e); reduced-model dispatch "
              "mismatch %.2e p.u. (tol %.0e)",
              tie_mw, kTieFlowMw, rel, kTieFlowRelTol, mismatch, kDispatchTol)};
}

}  // namespace

int main() {
  report(1, "two-mass analytic oracle", kLimitTwoMass, two_mass_oracle);
  report(2, "frequency/time consistency", kLimitSine, sine_consistency);
  report(3, "peak/eigen cross-check", kLimitCrossCheck, peak_eigen_cross_check);
  report(4, "stealth property", kLimitStealth, stealth_property);
  report(5, "resonance contrast", kLimitContrast, resonance_contrast);
  report(6, "engine linearity and determinism", 0.0, linearity_and_determinism);
  report(7, "network oracle", 0.0, network_oracle);
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
