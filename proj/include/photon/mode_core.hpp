#pragma once

// Spectro-temporal field envelopes on a uniform frequency grid.
//
// Units throughout: angular frequency in rad/fs, time in fs, wavelength in nm.
// Arrays hold envelopes relative to the grid's center frequency; the carrier only
// appears when labeling the wavelength axis and in second-harmonic gating.

#include <complex>
#include <cstddef>
#include <filesystem>
#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace photon {

using Complex = std::complex<double>;
using ComplexVector = std::vector<Complex>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
/// Speed of light in nm/fs.
inline constexpr double kSpeedOfLight = 299.792458;

/// Angular frequency (rad/fs) of light with the given vacuum wavelength (nm).
constexpr double omega_of_wavelength(double wavelength_nm) { return kTwoPi * kSpeedOfLight / wavelength_nm; }
constexpr double wavelength_of_omega(double omega) { return kTwoPi * kSpeedOfLight / omega; }

class FrequencyGrid {
 public:
  /// Throws std::invalid_argument unless n_points is a power of two >= 64 and span > 0.
  FrequencyGrid(double center_omega, double span, std::size_t n_points);

  double center_omega() const { return center_omega_; }
  double span() const { return span_; }
  std::size_t size() const { return n_points_; }
  std::size_t center_index() const { return n_points_ / 2; }

  double delta_omega() const { return span_ / static_cast<double>(n_points_); }
  /// omega_k - omega_0; exactly zero at center_index().
  double offset(std::size_t k) const {
    return (static_cast<double>(k) - static_cast<double>(n_points_ / 2)) * delta_omega();
  }
  double omega(std::size_t k) const { return center_omega_ + offset(k); }
  double wavelength_nm(std::size_t k) const { return wavelength_of_omega(omega(k)); }
  double center_wavelength_nm() const { return wavelength_of_omega(center_omega_); }

  // Conjugate time axis.
  double delta_t() const { return kTwoPi / span_; }
  double time(std::size_t k) const {
    return (static_cast<double>(k) - static_cast<double>(n_points_ / 2)) * delta_t();
  }

  bool operator==(const FrequencyGrid&) const = default;

 private:
  double center_omega_;
  double span_;
  std::size_t n_points_;
};

FrequencyGrid make_grid(double center_wavelength_nm, double span, std::size_t n_points);
FrequencyGrid default_grid();

/// Complex spectral amplitude Psi(omega_k), units (rad/fs)^(-1/2).
class SpectralMode {
 public:
  /// Throws std::invalid_argument on size mismatch or non-finite entries.
  SpectralMode(FrequencyGrid grid, ComplexVector amplitude);

  const FrequencyGrid& grid() const { return grid_; }
  std::span<const Complex> amplitude() const { return amplitude_; }
  const Complex& operator[](std::size_t k) const { return amplitude_[k]; }
  std::size_t size() const { return amplitude_.size(); }

  /// sum_k |Psi_k|^2 d_omega
  double norm() const;
  std::vector<double> intensity() const;

 private:
  FrequencyGrid grid_;
  ComplexVector amplitude_;
};

/// Temporal envelope E(t_k) on the grid's conjugate time axis, units fs^(-1/2).
class TemporalField {
 public:
  TemporalField(FrequencyGrid grid, ComplexVector envelope);

  const FrequencyGrid& grid() const { return grid_; }
  std::span<const Complex> envelope() const { return envelope_; }
  const Complex& operator[](std::size_t k) const { return envelope_[k]; }
  std::size_t size() const { return envelope_.size(); }
  double time(std::size_t k) const { return grid_.time(k); }
  double delta_t() const { return grid_.delta_t(); }
  double carrier_omega() const { return grid_.center_omega(); }

  /// sum_k |E_k|^2 d_t
  double norm() const;
  std::vector<double> intensity() const;

 private:
  FrequencyGrid grid_;
  ComplexVector envelope_;
};

/// Scales to unit norm. Throws photon::Error for an all-zero mode.
SpectralMode normalize(const SpectralMode& m);

/// Gaussian intensity spectrum with the given FWHM (nm, measured at the grid center
/// wavelength), flat phase, centered center_offset rad/fs away from the grid center.
SpectralMode gaussian_mode(const FrequencyGrid& grid, double center_offset, double fwhm_lambda_nm);

/// Intensity-FWHM (nm) to intensity standard deviation in rad/fs at the given wavelength.
double sigma_omega_from_fwhm_nm(double fwhm_nm, double center_wavelength_nm);

/// Throws photon::Error when the edge samples carry more than `tolerance` of the peak intensity.
void check_contained(const SpectralMode& m, double tolerance = 1e-8);

/// <a|b> = sum_k conj(a_k) b_k d_omega. Throws std::invalid_argument if grids differ.
Complex overlap(const SpectralMode& a, const SpectralMode& b);

TemporalField to_time(const SpectralMode& m);
SpectralMode from_time(const TemporalField& f);

/// Multiply by a constant phase factor.
SpectralMode rotate_phase(const SpectralMode& m, double theta);

/// Width between the outermost half-maximum crossings, linearly interpolated.
/// `axis` may be non-uniform or decreasing. Throws std::invalid_argument on an all-zero profile.
double fwhm(std::span<const double> axis, std::span<const double> profile);

/// Temporal intensity FWHM of the mode, in fs.
double temporal_fwhm(const SpectralMode& m);

// CSV: a '#' metadata line with the grid, a column header, then
// omega_rad_per_fs,lambda_nm,re,im per sample. Round trip is bit-exact.
std::string mode_to_csv(const SpectralMode& m);
SpectralMode mode_from_csv(std::string_view text);
void save_mode(const std::filesystem::path& path, const SpectralMode& m);
SpectralMode load_mode(const std::filesystem::path& path);

}  // namespace photon
