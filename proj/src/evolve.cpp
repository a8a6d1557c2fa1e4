#include "photon/evolve.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"
#include "photon/error.hpp"
#include "photon/io.hpp"

namespace photon {

void GaParams::validate() const {
  if (population_size < 4) throw std::invalid_argument("population_size must be >= 4");
  if (elite_count >= population_size) throw std::invalid_argument("elite_count must be < population_size");
  if (tournament_size < 1) throw std::invalid_argument("tournament_size must be >= 1");
  for (double r : {crossover_rate, mutation_rate})
    if (!(r >= 0.0 && r <= 1.0)) throw std::invalid_argument("rates must lie in [0, 1]");
  if (!(mutation_sigma >= 0.0)) throw std::invalid_argument("mutation_sigma must be non-negative");
  if (max_generations < 1) throw std::invalid_argument("max_generations must be >= 1");
  if (stall_generations < 1) throw std::invalid_argument("stall_generations must be >= 1");
  if (!noiseless && samples_per_eval < 100) throw std::invalid_argument("samples_per_eval must be >= 100");
  if (threads < 1) throw std::invalid_argument("threads must be >= 1");
}

namespace {

void mutate(std::vector<double>& genes, const GaParams& params, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> kick(0.0, params.mutation_sigma);
  for (auto& g : genes)
    if (unit(rng) < params.mutation_rate) g = std::clamp(g + kick(rng), 0.0, 1.0);
}

}  // namespace

Population init_population(Encoding encoding, std::size_t n_pixels, const GaParams& params, std::uint64_t seed) {
  params.validate();
  Rng rng = make_rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t n_genes = gene_count(encoding, n_pixels);
  Population pop;
  pop.seed = seed;
  pop.individuals.resize(params.population_size);
  for (auto& ind : pop.individuals) {
    ind.genes.encoding = encoding;
    ind.genes.genes.resize(n_genes);
    for (auto& g : ind.genes.genes) g = unit(rng);
  }
  return pop;
}

Population seeded_population(const GeneVector& seed_genes, const GaParams& params, std::uint64_t seed) {
  params.validate();
  Rng rng = make_rng(seed);
  Population pop;
  pop.seed = seed;
  pop.individuals.resize(params.population_size);
  for (std::size_t i = 0; i < pop.individuals.size(); ++i) {
    pop.individuals[i].genes = seed_genes;
    if (i > 0) mutate(pop.individuals[i].genes.genes, params, rng);
  }
  return pop;
}

std::uint64_t substream_seed(std::uint64_t master, std::size_t generation, std::size_t index) {
  return derive_seed(master, {fnv1a("fitness"), generation, index});
}

namespace {

void score(Individual& ind, const FitnessProblem& problem, const GaParams& params, std::uint64_t seed) {
  ind.evaluated = true;
  ind.worthless = false;
  double eta = 0.0;
  try {
    SlmMask mask = decode_genes(ind.genes, problem.layout, problem.signal.grid(), problem.ranges);
    ShapedMode lo = slm_apply(problem.base_lo, mask);
    ind.oracle_overlap_sq = std::norm(overlap(lo.mode, problem.signal));
    eta = efficiency(lo.mode, problem.signal, problem.channel);
  } catch (const Error&) {
    ind.worthless = true;
    ind.fitness = ind.std_error = ind.oracle_eta = ind.oracle_overlap_sq = 0.0;
    return;
  }
  ind.oracle_eta = eta;
  if (params.noiseless) {
    ind.fitness = eta;
    ind.std_error = 0.0;
    return;
  }
  EtaEstimate e = estimate_eta(sample_quadratures(eta, params.samples_per_eval, seed, problem.channel.lo_phase));
  ind.fitness = e.eta;
  ind.std_error = e.std_error;
}

}  // namespace

void evaluate(Population& pop, const FitnessProblem& problem, const GaParams& params, std::uint64_t master_seed) {
  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < pop.individuals.size(); ++i)
    if (!pop.individuals[i].evaluated) todo.push_back(i);

  const unsigned n_threads = std::max(1u, std::min<unsigned>(params.threads, static_cast<unsigned>(todo.size())));
  auto work = [&](unsigned worker) {
    for (std::size_t j = worker; j < todo.size(); j += n_threads) {
      std::size_t i = todo[j];
      score(pop.individuals[i], problem, params, substream_seed(master_seed, pop.generation, i));
    }
  };

  if (n_threads == 1) {
    work(0);
    return;
  }
  std::vector<std::exception_ptr> errors(n_threads);
  {
    std::vector<std::jthread> workers;
    for (unsigned w = 0; w < n_threads; ++w)
      workers.emplace_back([&, w] {
        try {
          work(w);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::vector<std::size_t> ranking(const Population& pop) {
  std::vector<std::size_t> idx(pop.individuals.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return pop.individuals[a].fitness > pop.individuals[b].fitness;
  });
  return idx;
}

std::size_t tournament_select(const Population& pop, std::size_t k, Rng& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, pop.individuals.size() - 1);
  std::size_t best = pick(rng);
  for (std::size_t r = 1; r < k; ++r) {
    std::size_t c = pick(rng);
    if (pop.individuals[c].fitness > pop.individuals[best].fitness) best = c;
  }
  return best;
}

Population next_generation(const Population& pop, const GaParams& params, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto order = ranking(pop);

  Population next;
  next.generation = pop.generation + 1;
  next.seed = seed;
  next.individuals.reserve(params.population_size);

  for (std::size_t e = 0; e < params.elite_count && e < order.size(); ++e) {
    Individual elite = pop.individuals[order[e]];
    elite.evaluated = elite.evaluated && !params.reevaluate_elites;
    next.individuals.push_back(std::move(elite));
  }

  while (next.individuals.size() < params.population_size) {
    const auto& a = pop.individuals[tournament_select(pop, params.tournament_size, rng)].genes;
    Individual child;
    child.genes = a;
    if (unit(rng) < params.crossover_rate) {
      const auto& b = pop.individuals[tournament_select(pop, params.tournament_size, rng)].genes;
      const std::size_t n = a.genes.size();
      std::uniform_int_distribution<std::size_t> cut(0, n);
      std::size_t lo = cut(rng), hi = cut(rng);
      if (lo > hi) std::swap(lo, hi);
      std::copy(b.genes.begin() + static_cast<std::ptrdiff_t>(lo), b.genes.begin() + static_cast<std::ptrdiff_t>(hi),
                child.genes.genes.begin() + static_cast<std::ptrdiff_t>(lo));
    }
    mutate(child.genes.genes, params, rng);
    next.individuals.push_back(std::move(child));
  }
  return next;
}

std::string_view to_string(StopReason r) {
  switch (r) {
    case StopReason::Converged: return "converged";
    case StopReason::Stalled: return "stalled";
    case StopReason::Budget: return "budget";
  }
  return "?";
}

namespace {

GenerationRecord record(const Population& pop) {
  auto order = ranking(pop);
  const auto& best = pop.individuals[order.front()];
  GenerationRecord r;
  r.generation = pop.generation;
  r.best_eta = best.fitness;
  r.best_std_error = best.std_error;
  r.oracle_best_overlap_sq = best.oracle_overlap_sq;
  double sum = 0.0;
  for (const auto& ind : pop.individuals) sum += ind.fitness;
  r.mean_eta = sum / static_cast<double>(pop.individuals.size());
  return r;
}

std::optional<StopReason> stall_check(const std::vector<GenerationRecord>& h, std::size_t window) {
  if (h.size() < 2 * window) return std::nullopt;
  // Compare the mean best-elite fitness of the last window with the window before it.
  const std::size_t split = h.size() - window;
  double past = 0.0, recent = 0.0, past_var = 0.0, recent_var = 0.0;
  double recent_max = 0.0, recent_min = 1.0;
  for (std::size_t g = split - window; g < split; ++g) {
    past += h[g].best_eta;
    past_var += h[g].best_std_error * h[g].best_std_error;
  }
  for (std::size_t g = split; g < h.size(); ++g) {
    recent += h[g].best_eta;
    recent_var += h[g].best_std_error * h[g].best_std_error;
    recent_max = std::max(recent_max, h[g].best_eta);
    recent_min = std::min(recent_min, h[g].best_eta);
  }
  const double w = static_cast<double>(window);
  const double improvement = (recent - past) / w;
  const double pooled = std::sqrt(past_var + recent_var) / w;
  if (improvement > 2.0 * pooled) return std::nullopt;
  // A steady optimum keeps the best estimate within its own noise band.
  const double single = std::sqrt(recent_var / w);
  return recent_max - recent_min <= 4.0 * single ? StopReason::Converged : StopReason::Stalled;
}

}  // namespace

GaResult run_ga(const FitnessProblem& problem, const GaParams& params, std::uint64_t master_seed,
                const std::optional<GeneVector>& seed_genes) {
  params.validate();
  problem.channel.validate();

  const std::uint64_t init_seed = derive_seed(master_seed, {fnv1a("init")});
  Population pop = seed_genes ? seeded_population(*seed_genes, params, init_seed)
                              : init_population(problem.encoding, problem.layout.n_pixels, params, init_seed);
  for (const auto& ind : pop.individuals)
    if (ind.genes.encoding != problem.encoding) throw std::invalid_argument("seed genes use a different encoding");

  GaResult result;
  result.encoding = problem.encoding;
  result.params = params;

  while (true) {
    std::size_t pending = 0;
    for (const auto& ind : pop.individuals) pending += ind.evaluated ? 0 : 1;
    evaluate(pop, problem, params, master_seed);
    result.evaluations += pending;
    result.history.push_back(record(pop));

    if (result.history.size() >= params.max_generations) {
      result.stop_reason = StopReason::Budget;
      break;
    }
    if (auto stop = stall_check(result.history, params.stall_generations)) {
      result.stop_reason = *stop;
      break;
    }
    pop = next_generation(pop, params, derive_seed(master_seed, {fnv1a("breed"), pop.generation}));
  }

  const auto& best = pop.individuals[ranking(pop).front()];
  result.best = best.genes;
  result.best_mask = decode_genes(best.genes, problem.layout, problem.signal.grid(), problem.ranges);
  result.best_fitness = best.fitness;
  result.best_std_error = best.std_error;
  result.oracle_best_overlap_sq = best.oracle_overlap_sq;
  return result;
}

std::optional<std::size_t> generations_to_overlap(const GaResult& r, double threshold) {
  for (const auto& rec : r.history)
    if (rec.oracle_best_overlap_sq >= threshold) return rec.generation;
  return std::nullopt;
}

std::string ga_result_to_json(const GaResult& r) {
  nlohmann::ordered_json j;
  const auto& p = r.params;
  j["encoding"] = std::string(to_string(r.encoding));
  j["params"] = {{"population_size", p.population_size},   {"elite_count", p.elite_count},
                 {"tournament_size", p.tournament_size},   {"crossover_rate", p.crossover_rate},
                 {"mutation_rate", p.mutation_rate},       {"mutation_sigma", p.mutation_sigma},
                 {"max_generations", p.max_generations},   {"stall_generations", p.stall_generations},
                 {"samples_per_eval", p.samples_per_eval}, {"reevaluate_elites", p.reevaluate_elites},
                 {"noiseless", p.noiseless}};
  j["stop_reason"] = std::string(to_string(r.stop_reason));
  j["generations"] = r.generations();
  j["evaluations"] = r.evaluations;
  j["best_eta"] = r.best_fitness;
  j["best_std_error"] = r.best_std_error;
  j["oracle_best_overlap_sq"] = r.oracle_best_overlap_sq;
  auto& hist = j["history"] = nlohmann::ordered_json::array();
  for (const auto& h : r.history)
    hist.push_back({{"generation", h.generation}, {"best_eta", h.best_eta}, {"mean_eta", h.mean_eta}});
  return j.dump(2);
}

std::string ga_history_to_csv(const GaResult& r) {
  std::ostringstream out;
  out << "generation,best_eta,mean_eta,best_overlap_sq_true\n";
  for (const auto& h : r.history)
    out << h.generation << ',' << io::format_double(h.best_eta) << ',' << io::format_double(h.mean_eta) << ','
        << io::format_double(h.oracle_best_overlap_sq) << '\n';
  return out.str();
}

}  // namespace photon
