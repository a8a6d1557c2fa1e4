#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "photon/error.hpp"
#include "photon/frog.hpp"
#include "photon/harness.hpp"
#include "photon/io.hpp"
#include "photon/measurement.hpp"
#include "photon/tomography.hpp"

namespace {

using photon::ValidationError;

// --seed wins over PHOTON_SHAPER_SEED, which wins over the scenario's own seed.
std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag, std::uint64_t fallback) {
  if (flag) return *flag;
  if (const char* env = std::getenv("PHOTON_SHAPER_SEED")) {
    long long v = photon::io::parse_int(env, "PHOTON_SHAPER_SEED");
    if (v < 0) throw ValidationError("PHOTON_SHAPER_SEED must be non-negative");
    return static_cast<std::uint64_t>(v);
  }
  return fallback;
}

std::string field_to_csv(const photon::FrogField& f) {
  std::ostringstream out;
  out << "t_fs,re,im\n";
  for (std::size_t k = 0; k < f.size(); ++k)
    out << photon::io::format_double(f.time(k)) << ',' << photon::io::format_double(f.samples[k].real()) << ','
        << photon::io::format_double(f.samples[k].imag()) << '\n';
  return out.str();
}

int dispatch(int argc, char** argv) {
  CLI::App app{"Adaptive LO shaping simulator for ultrashort single photons"};
  app.require_subcommand(1);

  std::optional<std::uint64_t> seed;
  std::string scenario_path, out_path, mask_path, mode_path, trace_path, batch_path;
  unsigned threads = 1;

  auto* run = app.add_subcommand("run", "Run a scenario and write its artifacts");
  run->add_option("scenario", scenario_path, "Scenario JSON")->required();
  run->add_option("--seed", seed, "Master seed (overrides PHOTON_SHAPER_SEED)");
  run->add_option("--out", out_path, "Output directory")->required();
  run->add_option("--threads", threads, "Fitness evaluation threads")->check(CLI::Range(1u, 256u));

  std::size_t steps = 16, samples = 100000;
  auto* scan = app.add_subcommand("scan", "Phase scan between the two spectral peaks for a given mask");
  scan->add_option("scenario", scenario_path, "Scenario JSON")->required();
  scan->add_option("--mask", mask_path, "SLM mask CSV")->required();
  scan->add_option("--steps", steps, "Phases on [0, 2 pi)")->check(CLI::Range(3, 100000));
  scan->add_option("--samples", samples, "Quadrature samples per phase")->check(CLI::Range(1000, 100000000));
  scan->add_option("--seed", seed, "Seed (overrides PHOTON_SHAPER_SEED)");
  scan->add_option("--out", out_path, "Output CSV");

  auto* frog = app.add_subcommand("frog", "SHG-FROG trace synthesis and retrieval");
  frog->require_subcommand(1);
  std::size_t n_delay = 128, max_iter = 1000;
  double edge_tol = 1e-8;
  auto* frog_trace = frog->add_subcommand("trace", "Trace of a serialized spectral mode");
  frog_trace->add_option("mode", mode_path, "Mode CSV")->required();
  frog_trace->add_option("--n-delay", n_delay, "Delay samples")->check(CLI::Range(8, 4096));
  frog_trace->add_option("--edge-tolerance", edge_tol, "Allowed edge intensity relative to the peak");
  frog_trace->add_option("--out", out_path, "Trace CSV (a .json sidecar is written next to it)")->required();
  auto* frog_ret = frog->add_subcommand("retrieve", "Retrieve a field from a trace CSV");
  frog_ret->add_option("trace", trace_path, "Trace CSV")->required();
  frog_ret->add_option("--max-iter", max_iter, "Iterations per attempt")->check(CLI::Range(1, 1000000));
  frog_ret->add_option("--seed", seed, "Seed (overrides PHOTON_SHAPER_SEED)");
  frog_ret->add_option("--out", out_path, "Retrieved field CSV (t_fs,re,im)");

  std::size_t n_max = 5;
  auto* tomo = app.add_subcommand("tomo", "Fock-diagonal reconstruction and Wigner function of a batch");
  tomo->add_option("batch", batch_path, "Quadrature batch CSV")->required();
  tomo->add_option("--n-max", n_max, "Highest Fock state")->check(CLI::Range(0, 60));
  tomo->add_option("--out", out_path, "Wigner CSV");

  double eta = 0.0;
  auto* sample = app.add_subcommand("sample", "Draw a homodyne quadrature batch");
  sample->add_option("--eta", eta, "Single-photon weight")->required()->check(CLI::Range(0.0, 1.0));
  sample->add_option("--n", samples, "Samples")->check(CLI::Range(1, 100000000));
  sample->add_option("--seed", seed, "Seed (overrides PHOTON_SHAPER_SEED)");
  sample->add_option("--out", out_path, "Batch CSV (a .json sidecar is written next to it)")->required();

  std::string mode_a, mode_b;
  auto* modes = app.add_subcommand("modes", "Serialized mode utilities");
  modes->require_subcommand(1);
  auto* diff = modes->add_subcommand("diff", "Overlap between two serialized modes");
  diff->add_option("a", mode_a, "Mode CSV")->required();
  diff->add_option("b", mode_b, "Mode CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (run->parsed()) {
    const auto s = photon::load_scenario(scenario_path);
    photon::RunOptions opts;
    opts.seed = resolve_seed(seed, s.default_seed);
    opts.out_dir = out_path;
    opts.threads = threads;
    const auto report = photon::run_scenario(s, opts);
    const auto& fin = report.payload["final"];
    std::cout << s.name << ": eta_hat " << fin["eta_hat"].get<double>() << " +/- " << fin["std_error"].get<double>()
              << ", report " << (std::filesystem::path(out_path) / "report.json").string() << "\n";
  } else if (scan->parsed()) {
    const auto s = photon::load_scenario(scenario_path);
    const auto grid = photon::build_grid(s);
    const auto mask = photon::mask_from_csv(photon::io::read_text(mask_path));
    if (mask.layout.grid_points != grid.size()) throw ValidationError("mask does not match the scenario grid");
    const auto phis = photon::scan_phases(steps);
    const auto result = photon::phase_scan(photon::build_mode(s.signal, grid), photon::build_mode(s.local_oscillator, grid),
                                           mask, s.eta_sys, phis, samples, resolve_seed(seed, s.default_seed));
    const auto csv = photon::phase_scan_to_csv(result);
    if (out_path.empty()) std::cout << csv;
    else photon::io::write_text(out_path, csv);
    nlohmann::ordered_json j{{"A", result.fit.a},
                             {"B", result.fit.b},
                             {"phi0_rad", result.fit.phi0},
                             {"residual_rms", result.fit.residual_rms},
                             {"mean_std_error", result.mean_std_error}};
    std::cerr << j.dump() << "\n";
  } else if (frog_trace->parsed()) {
    const auto mode = photon::load_mode(mode_path);
    const auto t = photon::frog_trace(photon::to_time(mode), n_delay, edge_tol);
    photon::save_trace(out_path, t);
  } else if (frog_ret->parsed()) {
    const auto t = photon::load_trace(trace_path);
    photon::RetrievalOptions o;
    o.max_iterations = max_iter;
    const auto r = photon::frog_retrieve(t, o, resolve_seed(seed, 1));
    const auto aligned = photon::align_field(r.field);
    if (!out_path.empty()) photon::io::write_text(out_path, field_to_csv(aligned));
    nlohmann::ordered_json j{{"g_error", r.g_error}, {"iterations", r.iterations}, {"converged", r.converged},
                             {"spectral_phase_step_rad", photon::spectral_phase_step(aligned).step}};
    std::cout << j.dump(2) << "\n";
  } else if (tomo->parsed()) {
    const auto b = photon::load_batch(batch_path);
    const auto rec = photon::reconstruct_state(b, n_max);
    if (!out_path.empty()) photon::io::write_text(out_path, photon::wigner_to_csv(rec.wigner));
    std::cout << photon::wigner_summary_json(rec) << "\n";
  } else if (sample->parsed()) {
    const auto b = photon::sample_quadratures(eta, samples, resolve_seed(seed, 1));
    photon::save_batch(out_path, b);
    const auto e = photon::estimate_eta(b);
    std::cout << "eta_hat " << e.eta << " +/- " << e.std_error << "\n";
  } else if (diff->parsed()) {
    const auto a = photon::load_mode(mode_a);
    const auto b = photon::load_mode(mode_b);
    if (!(a.grid() == b.grid())) throw ValidationError("modes are sampled on different grids");
    const auto c = photon::overlap(photon::normalize(a), photon::normalize(b));
    nlohmann::ordered_json j{{"overlap_sq", std::norm(c)}, {"overlap_phase_rad", std::arg(c)}};
    std::cout << j.dump(2) << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(argc, argv);
  } catch (const photon::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
