#pragma once

// Spectral-domain transforms: material dispersion, Michelson pump modulation inherited
// by the heralded photon, and the pixelated SLM mask with its gene encodings.

#include <array>
#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "photon/mode_core.hpp"

namespace photon {

/// phi(omega) = sum_n c_n (omega - omega_0)^n / n!, units rad, fs, fs^2, fs^3, fs^4.
struct PhasePolynomial {
  std::array<double, 5> coefficients{};

  double operator()(double offset) const;
  PhasePolynomial operator-() const;
  PhasePolynomial scaled(double factor) const;

  double gdd() const { return coefficients[2]; }
  double tod() const { return coefficients[3]; }
};

std::string polynomial_to_json(const PhasePolynomial& p);
PhasePolynomial polynomial_from_json(std::string_view text);

/// Sellmeier refractive index. Only "BK7" is known.
double refractive_index(std::string_view material, double wavelength_nm);

/// GDD and TOD of `length_mm` of material at the grid center; c_0 = c_1 = 0.
PhasePolynomial material_phase(std::string_view material, double length_mm, const FrequencyGrid& grid);

SpectralMode apply_phase(const SpectralMode& m, const PhasePolynomial& p);

/// Psi * (1 + exp(i((omega - omega_0) delay + phi))) / 2, renormalized.
/// Throws photon::Error when the pre-normalization norm drops below 1e-12.
SpectralMode michelson_modulate(const SpectralMode& m, double delay_fs, double phi);

/// Window of the SLM on the frequency grid: pixel p covers samples
/// [first_sample + p*samples_per_pixel, first_sample + (p+1)*samples_per_pixel).
/// Samples outside the window are left unmodified.
struct SlmLayout {
  std::size_t grid_points = 0;
  std::size_t first_sample = 0;
  std::size_t samples_per_pixel = 0;
  std::size_t n_pixels = 0;

  /// Window centered on the grid; samples_per_pixel == 0 picks grid_points / (2 n_pixels).
  static SlmLayout centered(const FrequencyGrid& grid, std::size_t n_pixels = 128, std::size_t samples_per_pixel = 0);

  std::size_t end_sample() const { return first_sample + n_pixels * samples_per_pixel; }
  /// Offset (rad/fs) of the pixel's center from the grid center.
  double pixel_center_offset(std::size_t pixel, const FrequencyGrid& grid) const;
  bool operator==(const SlmLayout&) const = default;
};

inline constexpr std::size_t kSlmLevels = 4096;

/// Per-pixel transmission in [0,1] and phase in [0, 2pi).
struct SlmMask {
  SlmLayout layout;
  std::vector<double> transmission;
  std::vector<double> phase;

  static SlmMask identity(const SlmLayout& layout);
  std::size_t size() const { return transmission.size(); }
  bool operator==(const SlmMask&) const = default;
};

double quantize_transmission(double t);
/// Wraps to [0, 2pi) and rounds to the nearest of kSlmLevels phase levels.
double quantize_phase(double phi);

/// Per pixel: transmissions multiply, phases add (wrapped, not re-quantized).
SlmMask compose(const SlmMask& a, const SlmMask& b);

std::string mask_to_csv(const SlmMask& mask);
SlmMask mask_from_csv(std::string_view text);

enum class Encoding { PixelPhase, PixelAmpPhase, PolyPhase, PolyPlusAmpPixels };

std::string_view to_string(Encoding e);
/// Throws ValidationError for unknown names.
Encoding encoding_from_string(std::string_view name);
std::size_t gene_count(Encoding e, std::size_t n_pixels);
bool is_pixel_encoding(Encoding e);

/// Half-widths of the symmetric polynomial gene ranges; gene g maps to (2g - 1) * half_range.
/// c_0 carries a zero range since a global phase is invisible to the homodyne efficiency.
struct PolyRanges {
  std::array<double, 5> half_range{0.0, 500.0, 1.0e4, 1.0e5, 1.0e6};
};

struct GeneVector {
  Encoding encoding = Encoding::PixelPhase;
  std::vector<double> genes;
  bool operator==(const GeneVector&) const = default;
};

PhasePolynomial decode_polynomial(std::span<const double> genes, const PolyRanges& ranges = {});

/// Deterministic, quantized gene-to-mask mapping. Throws std::invalid_argument on a
/// gene-count mismatch or genes outside [0, 1].
SlmMask decode_genes(const GeneVector& g, const SlmLayout& layout, const FrequencyGrid& grid,
                     const PolyRanges& ranges = {});

/// Inverse of decode_genes for the pixel encodings. Quantized masks round-trip exactly.
GeneVector encode_mask(const SlmMask& mask, Encoding encoding);

struct ShapedMode {
  SpectralMode mode;
  /// Pre-normalization sum |Psi'|^2 d_omega.
  double throughput;
};

/// Throws photon::Error on zero throughput, std::invalid_argument if the layout does not fit the grid.
ShapedMode slm_apply(const SpectralMode& m, const SlmMask& mask);

}  // namespace photon
