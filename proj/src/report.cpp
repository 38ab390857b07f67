#include "ssr/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "ssr/csv.hpp"

namespace ssr::report {

std::vector<VulnerableBand> collect_bands(std::span<const freq::PeakBand> peaks,
                                          const freq::FrequencyScan& scan) {
  std::map<std::pair<std::string, long long>, VulnerableBand> merged;
  const double step = scan.grid.step;
  for (const auto& p : peaks) {
    const auto& gen = scan.generator_ids[scan.channels[p.output].generator];
    const auto key = std::make_pair(gen, std::llround(p.center_hz / step));
    auto [it, inserted] = merged.try_emplace(key);
    auto& band = it->second;
    if (inserted) {
      band.generator = gen;
      band.center_hz = p.center_hz;
      band.f_lo = p.f_lo;
      band.f_hi = p.f_hi;
      band.r_m = p.r_m;
      band.output_id = p.output_id;
    } else {
      band.f_lo = std::min(band.f_lo, p.f_lo);
      band.f_hi = std::max(band.f_hi, p.f_hi);
      if (p.r_m > band.r_m) {
        band.r_m = p.r_m;
        band.output_id = p.output_id;
      }
    }
    band.stealth = band.r_m > 1.0;
  }

  std::vector<VulnerableBand> out;
  for (auto& [key, band] : merged) out.push_back(std::move(band));
  std::stable_sort(out.begin(), out.end(), [](const VulnerableBand& a, const VulnerableBand& b) {
    if (a.r_m != b.r_m) return a.r_m > b.r_m;
    if (a.generator != b.generator) return a.generator < b.generator;
    return a.center_hz < b.center_hz;
  });
  return out;
}

void attach_severity(VulnerableBand& band, std::span<const sim::SeverityRow> severity) {
  for (const auto& row : severity) {
    if (row.generator != band.generator || row.kind != VarKind::speed) continue;
    const bool better = !band.simulated ||
                        (row.ratio.status == sim::RatioStatus::unbounded) ||
                        (row.ratio.status == sim::RatioStatus::finite &&
                         band.simulated->status != sim::RatioStatus::unbounded &&
                         (band.simulated->status == sim::RatioStatus::undefined ||
                          row.ratio.value > band.simulated->value));
    if (better) {
      band.simulated = row.ratio;
      band.simulated_segment = row.segment;
    }
  }
}

namespace {

std::string fixed(double v, int decimals) {
  if (std::isinf(v)) return "unbounded";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

bool confirms(const VulnerableBand& b) {
  if (!b.stealth || !b.simulated) return false;
  return b.simulated->status == sim::RatioStatus::unbounded ||
         (b.simulated->status == sim::RatioStatus::finite && b.simulated->value > 1.0);
}

}  // namespace

std::string render(std::span<const VulnerableBand> bands) {
  if (bands.empty()) return "no vulnerable bands found\n";

  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof line, "%-4s %-10s %-20s %-10s %-12s %-12s %-7s %s\n", "rank", "generator",
                "band_hz", "center_hz", "peak_R_M", "sim_R_w", "stealth", "note");
  out << line;
  std::size_t rank = 1;
  for (const auto& b : bands) {
    const std::string range = fixed(b.f_lo, 2) + "-" + fixed(b.f_hi, 2);
    std::string sim_text = "-";
    if (b.simulated) {
      sim_text = b.simulated->status == sim::RatioStatus::finite ? fixed(b.simulated->value, 3)
                                                                  : sim::format_ratio(*b.simulated);
      if (b.simulated->status == sim::RatioStatus::finite)
        sim_text += " (j=" + std::to_string(b.simulated_segment + 1) + ")";
    }
    std::string note;
    if (confirms(b)) {
      note = "time-domain run confirms R_M > 1";
    } else if (b.stealth && b.simulated) {
      note = "time-domain run does not confirm";
    }
    std::snprintf(line, sizeof line, "%-4zu %-10s %-20s %-10s %-12s %-12s %-7s %s\n", rank++, b.generator.c_str(),
                  range.c_str(), fixed(b.center_hz, 2).c_str(), fixed(b.r_m, 3).c_str(), sim_text.c_str(),
                  b.stealth ? "yes" : "no", note.c_str());
    out << line;
  }
  return out.str();
}

}  // namespace ssr::report
