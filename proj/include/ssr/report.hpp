#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ssr/freq.hpp"
#include "ssr/sim.hpp"

namespace ssr::report {

/// One resonance band of one generator, merged over that generator's
/// torsional outputs peaking at the same frequency.
struct VulnerableBand {
  std::string generator;
  double center_hz = 0.0;
  double f_lo = 0.0;
  double f_hi = 0.0;
  double r_m = 0.0;  // best ratio among the merged peaks
  std::string output_id;  // output carrying that ratio
  bool stealth = false;
  std::optional<sim::Ratio> simulated;  // largest R_omega_j from a time-domain run
  std::size_t simulated_segment = 0;
};

/// Groups peaks by generator and center, ranked by R_M descending.
std::vector<VulnerableBand> collect_bands(std::span<const freq::PeakBand> peaks,
                                          const freq::FrequencyScan& scan);

/// Fills `simulated` from the speed rows of a severity table for the band's generator.
void attach_severity(VulnerableBand& band, std::span<const sim::SeverityRow> severity);

/// Ranked, human-readable vulnerability summary.
std::string render(std::span<const VulnerableBand> bands);

}  // namespace ssr::report
