#pragma once

// End-to-end runs: GA stages, final measurement and the characterization analyses.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "photon/scenario.hpp"

namespace photon {

struct RunOptions {
  std::uint64_t seed = 1;
  std::filesystem::path out_dir;
  unsigned threads = 1;
};

struct Report {
  /// Deterministic given (scenario, seed); ground truth lives under "oracle_" keys.
  nlohmann::ordered_json payload;
  /// Timestamp, config hash, seed, thread count and versions.
  nlohmann::ordered_json provenance;
  /// File names written under the output directory, report.json included.
  std::vector<std::string> artifacts;
};

/// Writes report.json ({"payload", "provenance"}) and the CSV artifacts into out_dir.
/// Errors are rethrown with the scenario name prefixed.
Report run_scenario(const Scenario& s, const RunOptions& options);

struct ScanPoint {
  double phi = 0.0;
  double eta_hat = 0.0;
  double std_error = 0.0;
  double oracle_eta = 0.0;
};

/// eta(phi) = A cos^2((phi - phi0) / 2) + B.
struct CosineFit {
  double a = 0.0;
  double b = 0.0;
  double phi0 = 0.0;
  double residual_rms = 0.0;
};

/// Linear least squares on eta = c0 + c1 cos(phi) + c2 sin(phi). Needs at least 3 points.
CosineFit fit_cosine(std::span<const ScanPoint> points);

struct PhaseScan {
  std::vector<ScanPoint> points;
  CosineFit fit;
  double mean_std_error = 0.0;
};

/// Adds phi to every pixel whose center lies above the grid center (the second peak),
/// measures a fresh batch per phi and fits the cosine model. Throws photon::Error when the
/// signal has no resolvable pair of peaks on either side of the center.
PhaseScan phase_scan(const SpectralMode& signal, const SpectralMode& base_lo, const SlmMask& best_mask,
                     double eta_sys, std::span<const double> phis, std::size_t samples, std::uint64_t seed);

/// Mask adding phi to the pixels in [first_pixel, last_pixel).
SlmMask pixel_phase_step(const SlmLayout& layout, std::size_t first_pixel, std::size_t last_pixel, double phi);

/// n equally spaced phases on [0, 2 pi).
std::vector<double> scan_phases(std::size_t n);

std::string phase_scan_to_csv(const PhaseScan& scan);

}  // namespace photon
