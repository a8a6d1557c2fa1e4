#pragma once

// Experiment configurations: strict JSON schema, mode recipes and the comb generator.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "photon/evolve.hpp"
#include "photon/frog.hpp"
#include "photon/mode_core.hpp"
#include "photon/shaping.hpp"
#include "photon/tomography.hpp"

namespace photon {

struct GridRecipe {
  double center_wavelength_nm = 800.0;
  double span_rad_per_fs = 0.30;
  std::size_t n_points = 1024;
};

struct MichelsonRecipe {
  double delay_fs = 0.0;
  double phi_rad = 0.0;
};

/// Gaussian with optional BK7 propagation, Michelson modulation and extra GDD, applied in
/// that order.
struct ModeRecipe {
  double fwhm_nm = 9.4;
  double center_offset_rad_per_fs = 0.0;
  double bk7_length_mm = 0.0;
  std::optional<MichelsonRecipe> michelson;
  double extra_gdd_fs2 = 0.0;
};

struct StageConfig {
  Encoding encoding = Encoding::PolyPhase;
  GaParams ga;
  /// Start from the previous stage's best mask instead of a random population.
  bool seed_from_previous = false;
};

struct TomographyConfig {
  std::size_t n_max = 5;
  WignerGridSpec grid;
};

struct FrogConfig {
  std::size_t n_delay = 128;
  /// Edge level, relative to the peak, above which the LO is flagged as clipped by the window.
  double edge_tolerance = 1e-2;
  RetrievalOptions retrieval;
};

struct PhaseScanConfig {
  std::size_t steps = 16;
  std::size_t samples = 100000;
};

struct CombConfig {
  std::size_t min_teeth = 3;
  /// Teeth are spectral maxima above this fraction of the peak.
  double tooth_threshold = 0.1;
  std::size_t scan_steps = 8;
  std::size_t samples = 100000;
};

struct AnalysisConfig {
  std::size_t final_samples = 100000;
  std::optional<TomographyConfig> tomography;
  std::optional<FrogConfig> frog;
  std::optional<PhaseScanConfig> phase_scan;
  std::optional<CombConfig> comb;
};

struct Scenario {
  std::string name;
  std::string description;
  std::uint64_t default_seed = 1;
  GridRecipe grid;
  ModeRecipe signal;
  ModeRecipe local_oscillator;
  double eta_sys = 1.0;
  std::size_t slm_pixels = 128;
  /// 0 picks the widest centered layout.
  std::size_t slm_samples_per_pixel = 0;
  std::vector<StageConfig> stages;
  AnalysisConfig analysis;
};

/// Strict parse: unknown keys are ValidationErrors naming the field path. "comment" keys
/// are accepted anywhere.
Scenario parse_scenario(std::string_view json_text);
Scenario load_scenario(const std::filesystem::path& path);
/// Canonical JSON with every field spelled out; parse_scenario round-trips it.
std::string scenario_to_json(const Scenario& s);
/// FNV-1a of the canonical JSON.
std::uint64_t scenario_hash(const Scenario& s);

FrequencyGrid build_grid(const Scenario& s);
SpectralMode build_mode(const ModeRecipe& r, const FrequencyGrid& grid);
SlmLayout build_layout(const Scenario& s, const FrequencyGrid& grid);

struct Tooth {
  std::size_t peak = 0;
  /// Half-open sample range [begin, end) bounded by the neighbouring minima.
  std::size_t begin = 0;
  std::size_t end = 0;
};

/// Spectral maxima of |Psi|^2 above threshold * peak, with their catchment ranges.
std::vector<Tooth> find_teeth(const SpectralMode& m, double threshold);
/// Psi restricted to one tooth's range, normalized.
SpectralMode tooth_mode(const SpectralMode& m, const Tooth& t);

/// MI comb under a 9.4 nm envelope at 800 nm: teeth spaced 2 pi / delay. Throws
/// ValidationError for a non-positive delay or fewer than max(3, n_teeth) teeth above 10 %.
Scenario comb_scenario(double delay_fs, std::size_t n_teeth);

}  // namespace photon
