#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ssr/statespace.hpp"

namespace ssr::freq {

struct FrequencyGrid {
  double f_start = 0.0;
  double f_end = 60.0;
  double step = 0.01;

  /// Throws std::invalid_argument unless 0 <= f_start < f_end and step > 0.
  void check() const;
  /// f_start + i * step up to and including f_end (within 1e-9 of a step).
  std::vector<double> points() const;
};

/// Transfer-function magnitudes from one input column to every output,
/// one row per grid frequency. Singular grid points hold +infinity.
struct FrequencyScan {
  FrequencyGrid grid;
  std::vector<double> frequencies;
  Eigen::MatrixXd terminal;   // |Gamma_1|, frequencies x y1 outputs
  Eigen::MatrixXd torsional;  // |Gamma_2|, frequencies x y2 outputs
  std::vector<std::string> terminal_labels;
  std::vector<std::string> torsional_labels;
  std::vector<TorsionalChannel> channels;  // pairing of each torsional output
  std::vector<std::string> generator_ids;
};

/// Number of worker threads for scans: SSR_THREADS when set, otherwise the
/// hardware concurrency.
unsigned default_threads();

FrequencyScan transfer_magnitudes(const StateSpaceSystem& system, const Eigen::VectorXd& input,
                                  const FrequencyGrid& grid, unsigned threads = 0);

/// Denominators below this fraction of the terminal curve's maximum yield an
/// unbounded ratio.
inline constexpr double kRatioFloor = 1e-12;

/// R_M per torsional output (columns) and frequency (rows); +infinity marks
/// an unbounded ratio.
struct RatioTable {
  Eigen::MatrixXd values;
  std::vector<std::string> labels;  // "<torsional>/<terminal>"
};

struct RatioSummary {
  std::string generator;
  VarKind kind = VarKind::speed;
  double max_ratio = 0.0;  // largest finite ratio
  double at_hz = 0.0;
  std::size_t segment = 0;
  std::size_t unbounded_points = 0;
};

RatioTable ratio_rm(const FrequencyScan& scan);
std::vector<RatioSummary> summarize(const FrequencyScan& scan, const RatioTable& ratios);

struct PeakBand {
  std::size_t output = 0;  // torsional output column
  std::string output_id;
  double center_hz = 0.0;
  double f_lo = 0.0;
  double f_hi = 0.0;
  double magnitude = 0.0;
  double prominence = 0.0;
  double r_m = 0.0;  // +infinity when unbounded
  bool stealth = false;
};

struct LocalPeak {
  std::size_t index = 0;
  double prominence = 0.0;
  double left_base = 0.0;   // lowest value between the peak and the nearest higher point
  double right_base = 0.0;
};

/// Strict local maxima of a sampled curve with their topographic prominence.
/// Flat tops count once, at their first sample; endpoints never count.
std::vector<LocalPeak> local_peaks(std::span<const double> values);

struct PeakOptions {
  /// Absolute prominence threshold; when unset, `median_factor` times the
  /// median of each curve.
  std::optional<double> prominence;
  double median_factor = 10.0;
};

/// Resonance bands of every torsional curve, sorted by R_M descending.
std::vector<PeakBand> find_peaks(const FrequencyScan& scan, const RatioTable& ratios,
                                 const PeakOptions& options = {});

/// Two-way agreement between peak centers and lightly damped modes.
struct ModeMatch {
  std::vector<std::size_t> unmatched_peaks;  // indices into the peak list
  std::vector<std::size_t> unmatched_modes;  // indices into ModeSet::modes
  std::vector<std::size_t> checked_modes;    // lightly damped modes with residue
  bool ok() const { return unmatched_peaks.empty() && unmatched_modes.empty(); }
};

/// A mode takes part when it is lightly damped and its residue exceeds
/// `residue_floor` times the largest residue.
ModeMatch cross_check(std::span<const PeakBand> peaks, const ModeSet& modes,
                      std::span<const double> residues, double tolerance_hz,
                      double residue_floor = 1e-9);

}  // namespace ssr::freq
