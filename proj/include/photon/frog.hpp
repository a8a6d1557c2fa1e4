#pragma once

// SHG-FROG synthesis and retrieval, plus interferometric autocorrelation.
//
// The FROG grid is a centered crop of the field's time window: N samples spaced by the
// field's d_t, t_k = (k - N/2) d_t, delays tau_j = (j - N/2) d_t applied circularly, and
// doubled-frequency offsets omega_m = (m - N/2) 2 pi / (N d_t).

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "photon/mode_core.hpp"

namespace photon {

/// Field sampled on a FROG grid.
struct FrogField {
  double delta_t = 0.0;
  ComplexVector samples;

  std::size_t size() const { return samples.size(); }
  double time(std::size_t k) const {
    return (static_cast<double>(k) - static_cast<double>(samples.size() / 2)) * delta_t;
  }
};

struct FrogTrace {
  std::size_t n = 0;
  double delta_t = 0.0;
  /// Peak-normalized I(omega_m, tau_j) stored at [m * n + j].
  std::vector<double> intensity;
  /// Peak of the unnormalized trace |sum_k E_k E_{k-j} exp(i omega_m t_k) d_t|^2.
  double peak = 1.0;

  double delta_omega() const { return kTwoPi / (static_cast<double>(n) * delta_t); }
  double omega(std::size_t m) const { return (static_cast<double>(m) - static_cast<double>(n / 2)) * delta_omega(); }
  double tau(std::size_t j) const { return (static_cast<double>(j) - static_cast<double>(n / 2)) * delta_t; }
  double at(std::size_t m, std::size_t j) const { return intensity[m * n + j]; }
};

/// Centered n-sample crop of the field. Throws photon::Error when the intensity outside the
/// crop or on its edge samples exceeds edge_tolerance times the peak.
FrogField crop_field(const TemporalField& f, std::size_t n, double edge_tolerance = 1e-8);

/// Zero-pads a FROG-grid field back onto the full time window of `grid`.
TemporalField embed_field(const FrogField& f, const FrequencyGrid& grid);

FrogTrace frog_trace(const FrogField& f);
FrogTrace frog_trace(const TemporalField& f, std::size_t n_delay = 128, double edge_tolerance = 1e-8);

/// RMS mismatch between the peak-normalized trace and the best-scaled trace of `field`.
double frog_g_error(const FrogTrace& measured, const FrogField& field);

struct RetrievalOptions {
  std::size_t max_iterations = 1000;
  /// Early exit once G drops below this.
  double tolerance = 1e-5;
  /// Fresh starts tried when an attempt ends above `target_g`.
  std::size_t restarts = 4;
  double target_g = 1e-3;
};

struct RetrievalResult {
  FrogField field;
  double g_error = 0.0;
  std::size_t iterations = 0;
  /// G <= target_g.
  bool converged = false;
  /// G of the initial guess and of each iterate in the attempt that produced `field`.
  std::vector<double> g_history;
};

/// Principal-components generalized projections. Non-convergence is flagged, not thrown.
RetrievalResult frog_retrieve(const FrogTrace& trace, std::size_t max_iter, std::uint64_t seed);
RetrievalResult frog_retrieve(const FrogTrace& trace, const RetrievalOptions& options, std::uint64_t seed);

/// Canonical representative of the SHG ambiguity class: spectrum centered (the grid also
/// admits a carrier offset of half the sampling rate), intensity centroid at t = 0,
/// zero phase at the intensity peak and, given a reference, the time orientation
/// (plain or reversed-and-conjugated) closest to it.
FrogField align_field(const FrogField& f, const FrogField* reference = nullptr);

/// Time reversal with conjugation, E*(-t).
FrogField reverse_conjugate(const FrogField& f);
/// E(t - shift), band-limited interpolation.
FrogField shift_field(const FrogField& f, double shift);

/// |<a|b>|^2 / (|a|^2 |b|^2).
double field_overlap_sq(const FrogField& a, const FrogField& b);

struct SpectralPhaseStep {
  double lower_peak_omega = 0.0;
  double upper_peak_omega = 0.0;
  /// Phase at the upper peak minus phase at the lower peak, wrapped to (-pi, pi].
  double step = 0.0;
};

/// Phase difference between the strongest spectral components below and above the center.
SpectralPhaseStep spectral_phase_step(const FrogField& f);

/// IAC(tau) = sum_t |(E(t) + E(t - tau))^2|^2 including the carrier, normalized so the
/// large-delay background is 1 (and IAC(0) = 8).
std::vector<double> autocorrelation(const TemporalField& f, std::span<const double> delays);

// CSV grid (omega,tau,intensity), rows m-major, with a JSON sidecar holding the axes.
std::string trace_to_csv(const FrogTrace& t);
std::string trace_sidecar_json(const FrogTrace& t);
void save_trace(const std::filesystem::path& csv_path, const FrogTrace& t);
/// Reads the CSV; axes come from the `<stem>.json` sidecar when present, else from the rows.
FrogTrace load_trace(const std::filesystem::path& csv_path);

}  // namespace photon
