#include "ssr/freq.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <limits>
#include <thread>

namespace ssr::freq {

using Eigen::Index;
using cd = std::complex<double>;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

void FrequencyGrid::check() const {
  if (!(f_start >= 0.0 && f_start < f_end)) throw std::invalid_argument("frequency grid needs 0 <= f_start < f_end");
  if (!(step > 0.0)) throw std::invalid_argument("frequency grid step must be > 0");
}

std::vector<double> FrequencyGrid::points() const {
  check();
  const auto count = static_cast<std::size_t>(std::floor((f_end - f_start) / step + 1e-9)) + 1;
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = f_start + static_cast<double>(i) * step;
  return out;
}

unsigned default_threads() {
  if (const char* env = std::getenv("SSR_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return static_cast<unsigned>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

FrequencyScan transfer_magnitudes(const StateSpaceSystem& system, const Eigen::VectorXd& input,
                                  const FrequencyGrid& grid, unsigned threads) {
  const Index n = system.a.rows();
  if (input.size() != n) throw std::invalid_argument("transfer_magnitudes: input column has wrong size");

  FrequencyScan scan;
  scan.grid = grid;
  scan.frequencies = grid.points();
  scan.terminal_labels = system.y1_labels;
  scan.torsional_labels = system.y2_labels;
  scan.channels = system.torsional;
  scan.generator_ids = system.states.generator_ids();

  const auto count = scan.frequencies.size();
  scan.terminal.resize(static_cast<Index>(count), system.c1.rows());
  scan.torsional.resize(static_cast<Index>(count), system.c2.rows());

  const Eigen::MatrixXcd a = system.a.cast<cd>();
  const Eigen::VectorXcd b = input.cast<cd>();
  const Eigen::MatrixXcd c1 = system.c1.cast<cd>();
  const Eigen::MatrixXcd c2 = system.c2.cast<cd>();
  const double eps = std::numeric_limits<double>::epsilon() * static_cast<double>(n);

  auto evaluate = [&](std::size_t i) {
    const double w = 2.0 * std::numbers::pi * scan.frequencies[i];
    Eigen::MatrixXcd shifted = -a;
    shifted.diagonal().array() += cd(0.0, w);
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(shifted);
    const Eigen::VectorXd pivots = lu.matrixLU().diagonal().cwiseAbs();
    const Index row = static_cast<Index>(i);
    if (pivots.minCoeff() <= eps * pivots.maxCoeff()) {
      scan.terminal.row(row).setConstant(kInf);
      scan.torsional.row(row).setConstant(kInf);
      return;
    }
    const Eigen::VectorXcd z = lu.solve(b);
    if (!z.allFinite()) throw NumericalError("shifted solve failed at " + std::to_string(scan.frequencies[i]) + " Hz");
    scan.terminal.row(row) = (c1 * z).cwiseAbs().transpose();
    scan.torsional.row(row) = (c2 * z).cwiseAbs().transpose();
  };

  if (threads == 0) threads = default_threads();
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) evaluate(i);
    return scan;
  }

  std::vector<std::exception_ptr> errors(threads);
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        try {
          for (std::size_t i = t; i < count; i += threads) evaluate(i);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return scan;
}

RatioTable ratio_rm(const FrequencyScan& scan) {
  RatioTable table;
  const Index rows = scan.torsional.rows();
  const Index cols = scan.torsional.cols();
  table.values.resize(rows, cols);
  for (Index k = 0; k < cols; ++k) {
    const auto& ch = scan.channels[static_cast<std::size_t>(k)];
    const Index term = static_cast<Index>(ch.terminal_output);
    table.labels.push_back(scan.torsional_labels[static_cast<std::size_t>(k)] + "/" +
                           scan.terminal_labels[ch.terminal_output]);

    double peak = 0.0;
    for (Index i = 0; i < rows; ++i)
      if (std::isfinite(scan.terminal(i, term))) peak = std::max(peak, scan.terminal(i, term));
    const double floor = kRatioFloor * peak;

    for (Index i = 0; i < rows; ++i) {
      const double num = scan.torsional(i, k);
      const double den = scan.terminal(i, term);
      if (!std::isfinite(den) || !(den > floor)) {
        table.values(i, k) = kInf;
      } else {
        table.values(i, k) = num / den;
      }
    }
  }
  return table;
}

std::vector<RatioSummary> summarize(const FrequencyScan& scan, const RatioTable& ratios) {
  std::vector<RatioSummary> out;
  for (std::size_t g = 0; g < scan.generator_ids.size(); ++g) {
    for (const VarKind kind : {VarKind::speed, VarKind::angle}) {
      RatioSummary s;
      s.generator = scan.generator_ids[g];
      s.kind = kind;
      for (std::size_t k = 0; k < scan.channels.size(); ++k) {
        const auto& ch = scan.channels[k];
        if (ch.generator != g || ch.kind != kind) continue;
        for (Index i = 0; i < ratios.values.rows(); ++i) {
          const double r = ratios.values(i, static_cast<Index>(k));
          if (!std::isfinite(r)) {
            ++s.unbounded_points;
          } else if (r > s.max_ratio) {
            s.max_ratio = r;
            s.at_hz = scan.frequencies[static_cast<std::size_t>(i)];
            s.segment = ch.segment;
          }
        }
      }
      out.push_back(s);
    }
  }
  return out;
}

std::vector<LocalPeak> local_peaks(std::span<const double> y) {
  std::vector<LocalPeak> out;
  const std::size_t n = y.size();
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (!(y[i] > y[i - 1])) continue;
    // Walk across a flat top; it is a peak only if it then descends.
    std::size_t j = i;
    while (j + 1 < n && y[j + 1] == y[i]) ++j;
    if (j + 1 >= n || !(y[j + 1] < y[i])) continue;

    double left = y[i];
    for (std::size_t l = i; l-- > 0;) {
      if (y[l] > y[i]) break;
      left = std::min(left, y[l]);
    }
    double right = y[i];
    for (std::size_t r = j + 1; r < n; ++r) {
      if (y[r] > y[i]) break;
      right = std::min(right, y[r]);
    }
    const double base = std::max(left, right);
    out.push_back({i, std::isinf(y[i]) && std::isinf(base) ? 0.0 : y[i] - base, left, right});
    i = j;
  }
  return out;
}

namespace {

double median(std::span<const double> values) {
  std::vector<double> v(values.begin(), values.end());
  if (v.empty()) return 0.0;
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2 == 1) return *mid;
  const double hi = *mid;
  const double lo = *std::max_element(v.begin(), mid);
  return 0.5 * (lo + hi);
}

/// Frequency where the curve crosses `level` walking away from `peak`.
double crossing(std::span<const double> y, std::span<const double> f, std::size_t peak, double level,
                int direction) {
  std::size_t i = peak;
  while (true) {
    if ((direction < 0 && i == 0) || (direction > 0 && i + 1 >= y.size())) return f[i];
    const std::size_t next = direction < 0 ? i - 1 : i + 1;
    if (y[next] <= level) {
      if (!std::isfinite(y[i])) return f[i];
      const double t = (y[i] - level) / (y[i] - y[next]);
      return f[i] + t * (f[next] - f[i]);
    }
    i = next;
  }
}

}  // namespace

std::vector<PeakBand> find_peaks(const FrequencyScan& scan, const RatioTable& ratios,
                                 const PeakOptions& options) {
  std::vector<PeakBand> bands;
  const Index rows = scan.torsional.rows();
  std::vector<double> curve(static_cast<std::size_t>(rows));
  for (Index k = 0; k < scan.torsional.cols(); ++k) {
    for (Index i = 0; i < rows; ++i) curve[static_cast<std::size_t>(i)] = scan.torsional(i, k);
    const double threshold = options.prominence ? *options.prominence : options.median_factor * median(curve);

    for (const auto& p : local_peaks(curve)) {
      if (!(p.prominence > 0.0) || p.prominence < threshold) continue;
      PeakBand band;
      band.output = static_cast<std::size_t>(k);
      band.output_id = scan.torsional_labels[band.output];
      band.center_hz = scan.frequencies[p.index];
      band.magnitude = curve[p.index];
      band.prominence = p.prominence;
      const double level = band.magnitude - 0.5 * p.prominence;
      band.f_lo = std::isfinite(level) ? crossing(curve, scan.frequencies, p.index, level, -1) : band.center_hz;
      band.f_hi = std::isfinite(level) ? crossing(curve, scan.frequencies, p.index, level, +1) : band.center_hz;
      band.r_m = ratios.values(static_cast<Index>(p.index), k);
      band.stealth = band.r_m > 1.0;
      bands.push_back(std::move(band));
    }
  }
  std::stable_sort(bands.begin(), bands.end(), [](const PeakBand& a, const PeakBand& b) {
    if (a.r_m != b.r_m) return a.r_m > b.r_m;
    if (a.output != b.output) return a.output < b.output;
    return a.center_hz < b.center_hz;
  });
  return bands;
}

ModeMatch cross_check(std::span<const PeakBand> peaks, const ModeSet& modes, std::span<const double> residues,
                      double tolerance_hz, double residue_floor) {
  ModeMatch match;
  const double largest = residues.empty() ? 0.0 : *std::max_element(residues.begin(), residues.end());
  std::vector<double> freqs;
  for (std::size_t m = 0; m < modes.modes.size(); ++m) {
    if (!modes.modes[m].lightly_damped || !(residues[m] > residue_floor * largest)) continue;
    match.checked_modes.push_back(m);
    freqs.push_back(modes.modes[m].frequency_hz);
  }
  const double tol = tolerance_hz * (1.0 + 1e-9);
  for (std::size_t p = 0; p < peaks.size(); ++p) {
    const bool hit = std::any_of(freqs.begin(), freqs.end(),
                                 [&](double f) { return std::abs(f - peaks[p].center_hz) <= tol; });
    if (!hit) match.unmatched_peaks.push_back(p);
  }
  for (std::size_t i = 0; i < freqs.size(); ++i) {
    const bool hit = std::any_of(peaks.begin(), peaks.end(),
                                 [&](const PeakBand& b) { return std::abs(freqs[i] - b.center_hz) <= tol; });
    if (!hit) match.unmatched_modes.push_back(match.checked_modes[i]);
  }
  return match;
}

}  // namespace ssr::freq
