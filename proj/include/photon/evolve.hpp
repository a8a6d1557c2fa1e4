#pragma once

// Genetic algorithm shaping the local oscillator against the noisy homodyne efficiency.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "photon/measurement.hpp"
#include "photon/mode_core.hpp"
#include "photon/rng.hpp"
#include "photon/shaping.hpp"

namespace photon {

struct GaParams {
  std::size_t population_size = 30;
  std::size_t elite_count = 2;
  std::size_t tournament_size = 3;
  double crossover_rate = 0.9;  // two-point
  double mutation_rate = 0.03;  // per gene
  double mutation_sigma = 0.08;  // Gaussian, gene units, clipped to [0, 1]
  std::size_t max_generations = 80;
  std::size_t stall_generations = 15;
  std::size_t samples_per_eval = 10000;
  bool reevaluate_elites = true;
  /// Fitness is the exact efficiency instead of an estimate from sampled quadratures.
  bool noiseless = false;
  /// Evaluation threads. Results never depend on this.
  unsigned threads = 1;

  /// Throws std::invalid_argument.
  void validate() const;
};

struct Individual {
  GeneVector genes;
  double fitness = 0.0;    ///< eta-hat
  double std_error = 0.0;
  bool evaluated = false;
  /// Decoding or shaping failed (e.g. all-blocking mask); fitness forced to 0.
  bool worthless = false;
  double oracle_eta = 0.0;
  double oracle_overlap_sq = 0.0;
};

struct Population {
  std::size_t generation = 0;
  std::vector<Individual> individuals;
  /// Seed the population was drawn or bred from.
  std::uint64_t seed = 0;
};

/// Everything needed to score a gene vector.
struct FitnessProblem {
  SpectralMode signal;
  SpectralMode base_lo;
  DetectionChannel channel;
  SlmLayout layout;
  Encoding encoding = Encoding::PolyPhase;
  PolyRanges ranges{};
};

/// Genes i.i.d. uniform on [0, 1].
Population init_population(Encoding encoding, std::size_t n_pixels, const GaParams& params, std::uint64_t seed);

/// Individual 0 is `seed_genes`; the rest are mutated copies of it.
Population seeded_population(const GeneVector& seed_genes, const GaParams& params, std::uint64_t seed);

/// Pure function of (master, generation, index); used for every fitness batch.
std::uint64_t substream_seed(std::uint64_t master, std::size_t generation, std::size_t index);

/// Scores every individual that is not already evaluated.
void evaluate(Population& pop, const FitnessProblem& problem, const GaParams& params, std::uint64_t master_seed);

/// Indices ordered by descending fitness; ties keep index order.
std::vector<std::size_t> ranking(const Population& pop);

/// Best of `k` uniform draws (with replacement); ties go to the earlier draw.
std::size_t tournament_select(const Population& pop, std::size_t k, Rng& rng);

Population next_generation(const Population& pop, const GaParams& params, std::uint64_t seed);

enum class StopReason { Converged, Stalled, Budget };
std::string_view to_string(StopReason r);

struct GenerationRecord {
  std::size_t generation = 0;
  double best_eta = 0.0;
  double best_std_error = 0.0;
  double mean_eta = 0.0;
  double oracle_best_overlap_sq = 0.0;
};

struct GaResult {
  Encoding encoding = Encoding::PolyPhase;
  GaParams params;
  GeneVector best;
  SlmMask best_mask;
  double best_fitness = 0.0;
  double best_std_error = 0.0;
  double oracle_best_overlap_sq = 0.0;
  std::vector<GenerationRecord> history;
  std::size_t evaluations = 0;
  StopReason stop_reason = StopReason::Budget;

  std::size_t generations() const { return history.size(); }
};

/// evaluate -> record -> breed until the budget runs out or the best-elite fitness stalls:
/// its mean over the last stall_generations exceeds the mean over the preceding
/// stall_generations by no more than twice the pooled standard error of that difference.
GaResult run_ga(const FitnessProblem& problem, const GaParams& params, std::uint64_t master_seed,
                const std::optional<GeneVector>& seed_genes = std::nullopt);

/// First generation whose top-ranked individual reaches the true overlap^2 threshold.
std::optional<std::size_t> generations_to_overlap(const GaResult& r, double threshold);

std::string ga_result_to_json(const GaResult& r);
/// generation,best_eta,mean_eta,best_overlap_sq_true
std::string ga_history_to_csv(const GaResult& r);

}  // namespace photon
