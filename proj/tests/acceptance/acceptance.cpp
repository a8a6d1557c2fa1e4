// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "photon/frog.hpp"
#include "photon/harness.hpp"
#include "photon/measurement.hpp"
#include "photon/tomography.hpp"

using namespace photon;
namespace fs = std::filesystem;

namespace {

const fs::path kScenarios = PHOTON_SCENARIO_DIR;
const char* const kBundled[] = {"fig3_phase_only", "fig3_dispersed", "fig4_phi0", "fig4_phipi",
                                "fig5_qubit",      "comb_qudit",     "identity"};

int failures = 0;

void report(int n, bool pass, const std::string& detail) {
  std::printf("criterion %d: %s (%s)\n", n, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

fs::path out_dir(const std::string& name) {
  auto d = fs::temp_directory_path() / "photon_acceptance" / name;
  fs::remove_all(d);
  return d;
}

// 1: PolyPhase on the 100 mm BK7 signal, 20 seeds.
void convergence() {
  const auto s = load_scenario(kScenarios / "fig3_phase_only.json");
  const auto grid = build_grid(s);
  FitnessProblem problem{build_mode(s.signal, grid), build_mode(s.local_oscillator, grid), {s.eta_sys, 0.0, 0},
                         build_layout(s, grid), Encoding::PolyPhase, {}};
  const GaParams params = s.stages.at(0).ga;
  int reached = 0;
  double gens_to_09 = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto r = run_ga(problem, params, seed);
    const auto g95 = generations_to_overlap(r, 0.95);
    if (g95 && *g95 < 60) ++reached;
    const auto g90 = generations_to_overlap(r, 0.9);
    gens_to_09 += g90 ? static_cast<double>(*g90) : static_cast<double>(params.max_generations);
  }
  gens_to_09 /= 20.0;
  report(1, reached >= 18 && gens_to_09 <= 50.0,
         fmt("%.0f/20 seeds reach overlap^2 >= 0.95 within 60 generations, need 18; mean generations to 0.9 = %.1f, "
             "need <= 50",
             reached, gens_to_09));
}

}  // namespace

int main() {
  std::map<std::string, Report> runs;
  auto run = [&](const std::string& name, unsigned threads) {
    const auto s = load_scenario(kScenarios / (name + ".json"));
    return run_scenario(s, {s.default_seed, out_dir(name + "_t" + std::to_string(threads)), threads});
  };

  convergence();

  {
    const auto& p = (runs[std::string("fig3_dispersed")] = run("fig3_dispersed", 1)).payload;
    const double opt = p["final"]["eta_hat"], opt_se = p["final"]["std_error"];
    const double ref = p["unshaped_reference"]["eta_hat"], ref_se = p["unshaped_reference"]["std_error"];
    const double diff = opt - ref, sigma = std::hypot(opt_se, ref_se);
    report(2, diff >= 0.05 && diff >= 5.0 * sigma && opt >= 0.57,
           fmt("optimized eta_hat %.4f vs unshaped %.4f: gain %.4f = %.1f sigma, need >= 0.05 and 5 sigma, "
               "optimized >= 0.57",
               opt, ref, diff, diff / sigma));
  }

  {
    const auto& p = (runs["fig4_phipi"] = run("fig4_phipi", 1)).payload;
    const double poly = p["stages"][0]["oracle_best_overlap_sq"], pixel = p["stages"][1]["oracle_best_overlap_sq"];
    report(3, pixel >= poly - 0.01 && pixel >= poly + 0.03,
           fmt("PolyPhase overlap^2 %.4f, seeded PixelAmpPhase %.4f, need pixel >= poly + 0.03", poly, pixel));
  }

  {
    const auto& p = (runs["fig5_qubit"] = run("fig5_qubit", 1)).payload;
    const auto& fit = p["phase_scan"]["fit"];
    const double a = fit["A"], b = fit["B"], phi0 = fit["phi0_rad"];
    const double eta_pi = p["phase_scan"]["phi_pi"]["eta_hat"];
    const double vis = a / (a + b);
    report(4, vis >= 0.95 && b <= 0.02 && std::abs(phi0) <= 0.1 && eta_pi <= 0.02,
           fmt("A/(A+B) = %.4f (>= 0.95), B = %.4f (<= 0.02), |phi0| = %.4f (<= 0.1), eta_hat(pi) = %.4f (<= 0.02)", vis,
               b, std::abs(phi0), eta_pi));
  }

  {
    const auto rec = reconstruct_state(sample_quadratures(0.6, 100000, 20240601));
    const double w0 = wigner_value(rec.diagonal.populations, 0.0, 0.0);
    const double pi_dev = runs["fig5_qubit"].payload["phase_scan"]["phi_pi"]["tomography"]["W_max_abs_minus_vacuum"];
    report(5, w0 >= -0.075 && w0 <= -0.05 && pi_dev < 0.01,
           fmt("eta = 0.6 at 1e5 samples: W(0,0) = %.4f, need [-0.075, -0.05]; orthogonal LO max|W - W_vac| = %.4f, "
               "need < 0.01",
               w0, pi_dev));
  }

  {
    bool pass = true;
    std::string detail;
    for (double eta : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      double sum = 0.0, sum_pull2 = 0.0;
      for (std::uint64_t b = 0; b < 100; ++b) {
        const auto e = estimate_eta(sample_quadratures(eta, 100000, derive_seed(6, {static_cast<std::uint64_t>(eta * 100), b})));
        sum += e.eta_unclamped;
        sum_pull2 += std::pow((e.eta_unclamped - eta) / e.std_error, 2);
      }
      const double bias = sum / 100.0 - eta;
      const double bias_limit = 4.0 * std::sqrt(quadrature_square_variance(eta) / 1e5) / 10.0;
      const double pull_sd = std::sqrt(sum_pull2 / 100.0);
      pass = pass && std::abs(bias) <= bias_limit && pull_sd >= 0.8 && pull_sd <= 1.2;
      detail += fmt("eta %.2f bias %.1e (|.| <= %.1e) pull sd %.3f; ", eta, bias, bias_limit, pull_sd);
    }
    detail += "pull sd must lie in [0.8, 1.2]";
    report(6, pass, detail);
  }

  {
    const auto grid = default_grid();
    const auto chirped = apply_phase(gaussian_mode(grid, 0.0, 9.4), material_phase("BK7", 100.0, grid));
    const auto dbl = michelson_modulate(gaussian_mode(grid, 0.0, 7.75), 150.0, kPi);
    double worst_g = 0.0, worst_overlap = 1.0;
    for (const auto* m : {&chirped, &dbl}) {
      const auto truth = align_field(crop_field(to_time(*m), 128));
      const auto r = frog_retrieve(frog_trace(truth), RetrievalOptions{}, 1);
      worst_g = std::max(worst_g, r.g_error);
      worst_overlap = std::min(worst_overlap, field_overlap_sq(align_field(r.field, &truth), truth));
    }
    const auto truth = align_field(crop_field(to_time(dbl), 128));
    const auto r = frog_retrieve(frog_trace(truth), RetrievalOptions{}, 1);
    const double step = spectral_phase_step(align_field(r.field, &truth)).step;
    const double step_err = std::abs(std::abs(step) - kPi);
    report(7, worst_g <= 1e-3 && worst_overlap >= 0.99 && step_err <= 0.15,
           fmt("worst G = %.2e (<= 1e-3), worst aligned overlap^2 = %.5f (>= 0.99), pi-step error %.3f rad (<= 0.15)",
               worst_g, worst_overlap, step_err));
  }

  {
    const auto grid = default_grid();
    std::mt19937_64 rng(8);
    std::normal_distribution<double> n(0.0, 1.0);
    double parseval = 0.0, cs = 0.0;
    for (int i = 0; i < 1000; ++i) {
      ComplexVector a(grid.size()), b(grid.size());
      for (std::size_t k = 0; k < grid.size(); ++k) {
        a[k] = {n(rng), n(rng)};
        b[k] = {n(rng), n(rng)};
      }
      const auto ma = normalize(SpectralMode(grid, a)), mb = normalize(SpectralMode(grid, b));
      parseval = std::max(parseval, std::abs(to_time(ma).norm() - 1.0));
      cs = std::max(cs, std::abs(overlap(ma, mb)) - 1.0);
    }
    const std::vector<double> delays = {0.0, 3000.0};
    const auto iac = autocorrelation(to_time(gaussian_mode(grid, 0.0, 9.4)), delays);
    const double ratio = iac[0] / iac[1];
    report(8, parseval <= 1e-9 && cs <= 1e-12 && std::abs(ratio - 8.0) <= 0.08,
           fmt("max |1 - ||E_t||^2| = %.1e (<= 1e-9), max |<a|b>| - 1 = %.1e (<= 1e-12), IAC peak/background = %.4f "
               "(8 +/- 1%%)",
               parseval, cs, ratio));
  }

  {
    int identical = 0;
    std::string differing;
    for (const char* name : kBundled) {
      if (!runs.count(name)) runs[name] = run(name, 1);
      const auto second = run(name, 2);
      if (runs[name].payload.dump() == second.payload.dump()) ++identical;
      else differing += std::string(" ") + name;
    }
    report(9, identical == 7,
           fmt("%.0f/7 bundled scenarios give byte-identical payloads with 1 and 2 threads", identical) +
               (differing.empty() ? "" : ", differing:" + differing));
  }

  fs::remove_all(fs::temp_directory_path() / "photon_acceptance");
  return failures == 0 ? 0 : 1;
}
