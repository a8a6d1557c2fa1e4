#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "photon/evolve.hpp"

using namespace photon;

namespace {

FitnessProblem dispersed_problem(Encoding e = Encoding::PolyPhase) {
  const auto g = default_grid();
  const auto lo = gaussian_mode(g, 0.0, 9.4);
  FitnessProblem p{apply_phase(lo, material_phase("BK7", 100.0, g)), lo, {}, SlmLayout::centered(g), e, {}};
  p.channel.eta_sys = 0.6;
  return p;
}

GaParams small_params() {
  GaParams p;
  p.population_size = 12;
  p.max_generations = 6;
  p.samples_per_eval = 2000;
  return p;
}

Individual flat_poly() {
  Individual ind;
  ind.genes = {Encoding::PolyPhase, std::vector<double>(5, 0.5)};
  return ind;
}

}  // namespace

TEST(GaParams, Validation) {
  GaParams p;
  EXPECT_NO_THROW(p.validate());
  p.elite_count = p.population_size;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = {};
  p.mutation_rate = 1.5;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = {};
  p.samples_per_eval = 10;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p.noiseless = true;
  EXPECT_NO_THROW(p.validate());
  p = {};
  p.population_size = 3;
  EXPECT_THROW(p.validate(), std::invalid_argument);
}

TEST(Population, ArityAndDomain) {
  const auto params = small_params();
  for (auto e : {Encoding::PixelPhase, Encoding::PixelAmpPhase, Encoding::PolyPhase, Encoding::PolyPlusAmpPixels}) {
    auto pop = init_population(e, 128, params, 3);
    ASSERT_EQ(pop.individuals.size(), params.population_size);
    for (int gen = 0; gen < 3; ++gen) {
      for (const auto& ind : pop.individuals) {
        ASSERT_EQ(ind.genes.encoding, e);
        ASSERT_EQ(ind.genes.genes.size(), gene_count(e, 128));
        for (double v : ind.genes.genes) ASSERT_TRUE(v >= 0.0 && v <= 1.0);
      }
      for (std::size_t i = 0; i < pop.individuals.size(); ++i) pop.individuals[i].fitness = static_cast<double>(i % 5);
      pop = next_generation(pop, params, 100 + gen);
    }
  }
}

TEST(Population, SeededStartsFromTheSeed) {
  GeneVector seed{Encoding::PixelPhase, std::vector<double>(128, 0.25)};
  const auto pop = seeded_population(seed, small_params(), 9);
  EXPECT_EQ(pop.individuals[0].genes, seed);
  std::size_t changed = 0;
  for (const auto& ind : pop.individuals) changed += ind.genes == seed ? 0 : 1;
  EXPECT_GT(changed, 0u);
  EXPECT_THROW(run_ga(dispersed_problem(), small_params(), 1, seed), std::invalid_argument);
}

TEST(Seeds, SubstreamsArePureAndDistinct) {
  EXPECT_EQ(substream_seed(5, 3, 7), substream_seed(5, 3, 7));
  EXPECT_NE(substream_seed(5, 3, 7), substream_seed(5, 3, 8));
  EXPECT_NE(substream_seed(5, 3, 7), substream_seed(5, 4, 7));
  EXPECT_NE(substream_seed(5, 3, 7), substream_seed(6, 3, 7));
}

TEST(Evaluate, IdentityMaskOnMatchedModes) {
  const auto g = default_grid();
  const auto lo = gaussian_mode(g, 0.0, 9.4);
  FitnessProblem problem{lo, lo, {}, SlmLayout::centered(g), Encoding::PolyPhase, {}};
  problem.channel.eta_sys = 0.6;
  GaParams params;
  Population pop;
  pop.individuals.assign(1, flat_poly());
  evaluate(pop, problem, params, 4);
  const auto& ind = pop.individuals[0];
  EXPECT_NEAR(ind.oracle_eta, 0.6, 1e-12);
  EXPECT_NEAR(ind.oracle_overlap_sq, 1.0, 1e-12);
  EXPECT_NEAR(ind.std_error, std::sqrt(quadrature_square_variance(0.6) / 1e4), 0.002);
  EXPECT_NEAR(ind.fitness, 0.6, 3.0 * ind.std_error);
}

TEST(Evaluate, OrthogonalLocalOscillatorSeesVacuum) {
  const auto g = default_grid();
  ComplexVector sym(g.size()), anti(g.size());
  for (std::size_t k = 1; k < g.size(); ++k) {
    const double w = g.offset(k), s = 0.008;
    const double l = std::exp(-(w + 0.02) * (w + 0.02) / (4 * s * s));
    const double r = std::exp(-(w - 0.02) * (w - 0.02) / (4 * s * s));
    sym[k] = l + r;
    anti[k] = l - r;
  }
  FitnessProblem problem{normalize(SpectralMode(g, anti)), normalize(SpectralMode(g, sym)), {}, SlmLayout::centered(g),
                         Encoding::PolyPhase, {}};
  problem.channel.eta_sys = 0.6;
  Population pop;
  pop.individuals.assign(1, flat_poly());
  evaluate(pop, problem, GaParams{}, 12);
  EXPECT_LT(pop.individuals[0].oracle_eta, 1e-9);
  EXPECT_LE(pop.individuals[0].fitness, 0.02);
}

TEST(Evaluate, BlockingMaskIsWorthless) {
  auto problem = dispersed_problem(Encoding::PolyPlusAmpPixels);
  problem.layout = SlmLayout::centered(problem.signal.grid(), 128, 8);
  Population pop;
  Individual ind;
  ind.genes = {Encoding::PolyPlusAmpPixels, std::vector<double>(133, 0.0)};
  pop.individuals.assign(2, ind);
  pop.individuals[1].genes.genes.assign(133, 1.0);
  evaluate(pop, problem, GaParams{}, 1);
  EXPECT_TRUE(pop.individuals[0].worthless);
  EXPECT_EQ(pop.individuals[0].fitness, 0.0);
  EXPECT_FALSE(pop.individuals[1].worthless);
  EXPECT_GT(pop.individuals[1].fitness, 0.0);
}

TEST(Evaluate, ScoresAreCalibrated) {
  const auto problem = dispersed_problem(Encoding::PixelAmpPhase);
  GaParams params;
  std::size_t within = 0, total = 0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    auto pop = init_population(Encoding::PixelAmpPhase, 128, params, 50 + s);
    evaluate(pop, problem, params, 900 + s);
    for (const auto& ind : pop.individuals) {
      within += std::abs(ind.fitness - ind.oracle_eta) <= 4.0 * ind.std_error;
      ++total;
    }
  }
  EXPECT_GE(static_cast<double>(within), 0.99 * static_cast<double>(total));
}

TEST(Evaluate, ThreadCountDoesNotChangeScores) {
  const auto problem = dispersed_problem(Encoding::PixelAmpPhase);
  GaParams serial, threaded;
  threaded.threads = 4;
  auto a = init_population(Encoding::PixelAmpPhase, 128, serial, 8);
  auto b = a;
  evaluate(a, problem, serial, 77);
  evaluate(b, problem, threaded, 77);
  for (std::size_t i = 0; i < a.individuals.size(); ++i) EXPECT_EQ(a.individuals[i].fitness, b.individuals[i].fitness);
}

TEST(Ranking, DescendingWithStableTies) {
  Population pop;
  pop.individuals.resize(5);
  const double f[] = {0.2, 0.5, 0.2, 0.9, 0.5};
  for (std::size_t i = 0; i < 5; ++i) pop.individuals[i].fitness = f[i];
  EXPECT_EQ(ranking(pop), (std::vector<std::size_t>{3, 1, 4, 0, 2}));
}

TEST(Tournament, SelectionFollowsOrderStatistics) {
  // Rank r (0 = best) of N wins a size-k tournament with probability ((N-r)^k - (N-r-1)^k) / N^k.
  const std::size_t n = 30, k = 3, draws = 30000;
  Population pop;
  pop.individuals.resize(n);
  for (std::size_t i = 0; i < n; ++i) pop.individuals[i].fitness = static_cast<double>((i * 7) % n);
  std::vector<double> counts(n, 0.0);
  Rng rng = make_rng(2024);
  for (std::size_t d = 0; d < draws; ++d) counts[tournament_select(pop, k, rng)] += 1.0;
  double chi2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = static_cast<double>(n - 1) - pop.individuals[i].fitness;
    const double p = (std::pow(n - r, 3) - std::pow(n - r - 1, 3)) / std::pow(n, 3);
    const double expected = p * draws;
    chi2 += (counts[i] - expected) * (counts[i] - expected) / expected;
  }
  // 29 degrees of freedom, 0.1% critical value.
  EXPECT_LT(chi2, 58.3);
}

TEST(Tournament, SizeOneIsUniform) {
  Population pop;
  pop.individuals.resize(4);
  Rng rng = make_rng(1);
  std::vector<int> hits(4, 0);
  for (int i = 0; i < 4000; ++i) ++hits[tournament_select(pop, 1, rng)];
  for (int h : hits) EXPECT_NEAR(h, 1000, 150);
}

TEST(NextGeneration, ElitesSurviveAndAreReevaluated) {
  auto params = small_params();
  auto pop = init_population(Encoding::PolyPhase, 128, params, 5);
  for (std::size_t i = 0; i < pop.individuals.size(); ++i) {
    pop.individuals[i].fitness = static_cast<double>(i) / 10.0;
    pop.individuals[i].evaluated = true;
  }
  const auto next = next_generation(pop, params, 6);
  EXPECT_EQ(next.generation, 1u);
  ASSERT_EQ(next.individuals.size(), params.population_size);
  EXPECT_EQ(next.individuals[0].genes, pop.individuals[11].genes);
  EXPECT_EQ(next.individuals[1].genes, pop.individuals[10].genes);
  EXPECT_FALSE(next.individuals[0].evaluated);
  params.reevaluate_elites = false;
  EXPECT_TRUE(next_generation(pop, params, 6).individuals[0].evaluated);
}

TEST(NextGeneration, NoVariationOnlyCopiesParents) {
  auto params = small_params();
  params.crossover_rate = 0.0;
  params.mutation_rate = 0.0;
  auto pop = init_population(Encoding::PixelPhase, 128, params, 10);
  for (std::size_t i = 0; i < pop.individuals.size(); ++i) pop.individuals[i].fitness = static_cast<double>(i);
  const auto next = next_generation(pop, params, 11);
  for (const auto& child : next.individuals) {
    const bool is_copy = std::any_of(pop.individuals.begin(), pop.individuals.end(),
                                     [&](const Individual& p) { return p.genes == child.genes; });
    EXPECT_TRUE(is_copy);
  }
}

TEST(NextGeneration, CrossoverOnlyMixesParentGenes) {
  auto params = small_params();
  params.crossover_rate = 1.0;
  params.mutation_rate = 0.0;
  auto pop = init_population(Encoding::PixelPhase, 128, params, 12);
  for (std::size_t i = 0; i < pop.individuals.size(); ++i) pop.individuals[i].fitness = static_cast<double>(i);
  const auto next = next_generation(pop, params, 13);
  for (const auto& child : next.individuals)
    for (std::size_t gidx = 0; gidx < 128; ++gidx) {
      const bool from_parent = std::any_of(pop.individuals.begin(), pop.individuals.end(), [&](const Individual& p) {
        return p.genes.genes[gidx] == child.genes.genes[gidx];
      });
      ASSERT_TRUE(from_parent);
    }
}

TEST(RunGa, DeterministicAndThreadIndependent) {
  const auto problem = dispersed_problem();
  auto params = small_params();
  const auto a = run_ga(problem, params, 42);
  const auto b = run_ga(problem, params, 42);
  params.threads = 3;
  const auto c = run_ga(problem, params, 42);
  EXPECT_EQ(ga_result_to_json(a), ga_result_to_json(b));
  EXPECT_EQ(a.best, c.best);
  EXPECT_EQ(a.best_fitness, c.best_fitness);
  EXPECT_EQ(ga_history_to_csv(a), ga_history_to_csv(c));
  EXPECT_NE(ga_result_to_json(a), ga_result_to_json(run_ga(problem, small_params(), 43)));
}

TEST(RunGa, Bookkeeping) {
  const auto problem = dispersed_problem();
  auto params = small_params();
  const auto r = run_ga(problem, params, 3);
  EXPECT_EQ(r.generations(), params.max_generations);
  EXPECT_EQ(r.stop_reason, StopReason::Budget);
  EXPECT_EQ(r.evaluations, params.population_size * params.max_generations);
  for (std::size_t i = 0; i < r.history.size(); ++i) EXPECT_EQ(r.history[i].generation, i);
  EXPECT_EQ(r.best_mask, decode_genes(r.best, problem.layout, problem.signal.grid()));
  const auto csv = ga_history_to_csv(r);
  EXPECT_EQ(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')), r.generations() + 1);

  params.reevaluate_elites = false;
  const auto q = run_ga(problem, params, 3);
  EXPECT_EQ(q.evaluations,
            params.population_size + (params.max_generations - 1) * (params.population_size - params.elite_count));
}

TEST(RunGa, NoiselessBestNeverDecreases) {
  const auto problem = dispersed_problem();
  auto params = small_params();
  params.noiseless = true;
  params.max_generations = 25;
  const auto r = run_ga(problem, params, 8);
  for (std::size_t i = 1; i < r.history.size(); ++i) ASSERT_GE(r.history[i].best_eta, r.history[i - 1].best_eta);
  EXPECT_NEAR(r.best_fitness, 0.6 * r.oracle_best_overlap_sq, 1e-12);
}

TEST(RunGa, FrozenPopulationConverges) {
  auto params = small_params();
  params.noiseless = true;
  params.crossover_rate = 0.0;
  params.mutation_rate = 0.0;
  params.stall_generations = 5;
  params.max_generations = 80;
  const auto r = run_ga(dispersed_problem(), params, 1);
  EXPECT_EQ(r.stop_reason, StopReason::Converged);
  EXPECT_EQ(r.generations(), 10u);
}

TEST(RunGa, GenerationsToOverlap) {
  GaResult r;
  for (std::size_t g = 0; g < 5; ++g) {
    GenerationRecord rec;
    rec.generation = g;
    rec.oracle_best_overlap_sq = 0.2 * static_cast<double>(g);
    r.history.push_back(rec);
  }
  EXPECT_EQ(generations_to_overlap(r, 0.5), 3u);
  EXPECT_EQ(generations_to_overlap(r, 0.0), 0u);
  EXPECT_FALSE(generations_to_overlap(r, 0.9).has_value());
}

TEST(RunGa, PolyPhaseImprovesOnDispersedSignal) {
  const auto problem = dispersed_problem();
  GaParams params;
  params.max_generations = 30;
  const auto r = run_ga(problem, params, 2);
  EXPECT_GT(r.oracle_best_overlap_sq, 0.9);
  EXPECT_GT(r.best_fitness, 0.5);
}
