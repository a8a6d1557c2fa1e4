#pragma once

// Simulated balanced homodyne detection of eta|1><1| + (1-eta)|0><0| and the
// second-moment efficiency estimator used as GA fitness.
//
// Quadrature convention: vacuum variance 1/2, so <x^2> = n + 1/2 for Fock state n.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "photon/mode_core.hpp"

namespace photon {

struct DetectionChannel {
  /// Lumped systematic efficiency (detectors, losses, spatial mismatch, electronics).
  double eta_sys = 1.0;
  /// Accepted for record keeping; the phase-averaged mixture makes it irrelevant to sampling.
  double lo_phase = 0.0;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

/// eta_sys * |<lo|sig>|^2, clamped to [0, 1].
double efficiency(const SpectralMode& lo, const SpectralMode& sig, const DetectionChannel& ch);

struct QuadratureBatch {
  std::vector<double> samples;
  double theta = 0.0;
  std::uint64_t seed = 0;
  /// Ground truth, present only for simulator-generated batches.
  std::optional<double> true_eta;

  std::size_t size() const { return samples.size(); }
};

/// i.i.d. draws from (1-eta) g(x) + eta 2x^2 g(x), g(x) = exp(-x^2)/sqrt(pi).
/// Throws std::invalid_argument for eta outside [0, 1].
QuadratureBatch sample_quadratures(double eta, std::size_t n, std::uint64_t seed, double theta = 0.0);

struct EtaEstimate {
  double eta = 0.0;            ///< clamped to [0, 1]
  double eta_unclamped = 0.0;  ///< mean(x^2) - 1/2
  double std_error = 0.0;      ///< sqrt(Var(x^2) / n)
};

/// Throws std::invalid_argument for batches with fewer than 100 samples.
EtaEstimate estimate_eta(const QuadratureBatch& b);

/// Closed-form Var(x^2) of the mixture: 1/2 + 2 eta - eta^2.
constexpr double quadrature_square_variance(double eta) { return 0.5 + 2.0 * eta - eta * eta; }

struct Spectrum {
  std::vector<double> wavelength_nm;  ///< ascending
  std::vector<double> intensity;      ///< peak-normalized
};

Spectrum spectrometer(const SpectralMode& m);
double spectral_fwhm_nm(const SpectralMode& m);

// CSV (index,x,theta_rad) plus a JSON sidecar (n, seed, eta_true when simulated).
std::string batch_to_csv(const QuadratureBatch& b);
std::string batch_sidecar_json(const QuadratureBatch& b);
void save_batch(const std::filesystem::path& csv_path, const QuadratureBatch& b);
/// Reads the CSV and, when present, the `<stem>.json` sidecar next to it.
QuadratureBatch load_batch(const std::filesystem::path& csv_path);

}  // namespace photon
