#include "photon/harness.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "photon/error.hpp"
#include "photon/io.hpp"
#include "photon/measurement.hpp"
#include "photon/rng.hpp"

namespace photon {
namespace {

using OJson = nlohmann::ordered_json;

constexpr const char* kVersion = "0.1.0";

std::uint64_t stream(std::uint64_t master, std::string_view tag, std::uint64_t index = 0) {
  return derive_seed(master, {fnv1a(tag), index});
}

EtaEstimate measure(double eta, std::size_t n, std::uint64_t seed) {
  return estimate_eta(sample_quadratures(eta, n, seed));
}

OJson estimate_json(const EtaEstimate& e, std::size_t n, double oracle_eta) {
  OJson j;
  j["eta_hat"] = e.eta;
  j["eta_hat_unclamped"] = e.eta_unclamped;
  j["std_error"] = e.std_error;
  j["samples"] = n;
  j["oracle_eta_true"] = oracle_eta;
  return j;
}

double overlap_sq(const SpectralMode& a, const SpectralMode& b) { return std::norm(overlap(a, b)); }

OJson fit_json(const CosineFit& f) {
  OJson j;
  j["A"] = f.a;
  j["B"] = f.b;
  j["phi0_rad"] = f.phi0;
  j["visibility"] = f.a + f.b > 0.0 ? f.a / (f.a + f.b) : 0.0;
  j["residual_rms"] = f.residual_rms;
  return j;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

class ArtifactWriter {
 public:
  explicit ArtifactWriter(std::filesystem::path dir) : dir_(std::move(dir)) {}
  void text(const std::string& name, std::string_view body) {
    io::write_text(dir_ / name, body);
    names_.push_back(name);
  }
  std::filesystem::path path(const std::string& name) const { return dir_ / name; }
  void record(const std::string& name) { names_.push_back(name); }
  const std::vector<std::string>& names() const { return names_; }

 private:
  std::filesystem::path dir_;
  std::vector<std::string> names_;
};

OJson run_frog(const FrogConfig& cfg, const SpectralMode& lo, std::uint64_t seed, ArtifactWriter& out) {
  const TemporalField full = to_time(lo);
  const auto inten = full.intensity();
  double total = 0.0, inside = 0.0, peak = 0.0, edge = 0.0;
  const std::size_t first = full.size() / 2 - cfg.n_delay / 2;
  for (std::size_t k = 0; k < full.size(); ++k) {
    total += inten[k];
    peak = std::max(peak, inten[k]);
    if (k >= first && k < first + cfg.n_delay) inside += inten[k];
    if (k <= first || k >= first + cfg.n_delay - 1) edge = std::max(edge, inten[k]);
  }
  // Pixelated masks put replicas far outside the window; the window itself is still characterized.
  const FrogField truth = crop_field(full, cfg.n_delay, std::numeric_limits<double>::infinity());
  const FrogTrace trace = frog_trace(truth);
  save_trace(out.path("frog_trace.csv"), trace);
  out.record("frog_trace.csv");
  out.record("frog_trace.json");

  const RetrievalResult r = frog_retrieve(trace, cfg.retrieval, seed);
  const FrogField reference = align_field(truth);
  const FrogField aligned = align_field(r.field, &reference);
  std::vector<double> times(aligned.size()), profile(aligned.size());
  for (std::size_t k = 0; k < aligned.size(); ++k) {
    times[k] = aligned.time(k);
    profile[k] = std::norm(aligned.samples[k]);
  }
  const auto step = spectral_phase_step(aligned);

  OJson j;
  j["n_delay"] = cfg.n_delay;
  j["delta_t_fs"] = trace.delta_t;
  j["g_error"] = r.g_error;
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  j["clipped"] = edge > cfg.edge_tolerance * peak;
  j["clipped_energy_fraction"] = total > 0.0 ? 1.0 - inside / total : 0.0;
  j["retrieved_temporal_fwhm_fs"] = fwhm(times, profile);
  j["spectral_phase_step_rad"] = step.step;
  j["spectral_peaks_rad_per_fs"] = {2.0 * step.lower_peak_omega, 2.0 * step.upper_peak_omega};
  j["oracle_field_overlap_sq"] = field_overlap_sq(reference, aligned);
  return j;
}

OJson tomography_json(const StateReconstruction& rec) {
  auto j = OJson::parse(wigner_summary_json(rec));
  j["W_max_abs_minus_vacuum"] = max_abs_difference(
      rec.wigner, vacuum_wigner({rec.wigner.axis.back(), rec.wigner.axis.size()}));
  j["wigner_integral"] = rec.wigner.integral();
  return j;
}

OJson run_comb(const CombConfig& cfg, const SpectralMode& signal, const SpectralMode& base_lo, const SlmMask& mask,
               const SpectralMode& lo, double eta_sys, std::uint64_t master) {
  const auto teeth = find_teeth(signal, cfg.tooth_threshold);
  if (teeth.size() < cfg.min_teeth)
    throw Error("comb analysis: only " + std::to_string(teeth.size()) + " resolvable teeth, need " +
                std::to_string(cfg.min_teeth));
  const auto& grid = signal.grid();
  const auto& layout = mask.layout;

  OJson teeth_json = OJson::array();
  double bessel = 0.0, oracle_total = 0.0;
  std::vector<double> projections;
  for (const auto& t : teeth) {
    const SpectralMode tm = tooth_mode(signal, t);
    const double p = overlap_sq(lo, tm);
    const double oracle = overlap_sq(signal, tm);
    projections.push_back(p);
    bessel += p;
    oracle_total += oracle;
    teeth_json.push_back({{"offset_rad_per_fs", grid.offset(t.peak)},
                          {"wavelength_nm", grid.wavelength_nm(t.peak)},
                          {"lo_projection_sq", p},
                          {"oracle_signal_weight", oracle}});
  }
  for (std::size_t i = 0; i < teeth.size(); ++i) {
    teeth_json[i]["lo_amplitude_fraction"] = bessel > 0.0 ? projections[i] / bessel : 0.0;
    teeth_json[i]["oracle_signal_fraction"] = teeth_json[i]["oracle_signal_weight"].get<double>() / oracle_total;
  }

  // Pixels whose center sample falls inside a tooth's catchment range.
  auto pixel_range = [&](const Tooth& t) {
    std::size_t lo_p = layout.n_pixels, hi_p = 0;
    for (std::size_t p = 0; p < layout.n_pixels; ++p) {
      const std::size_t center = layout.first_sample + p * layout.samples_per_pixel + layout.samples_per_pixel / 2;
      if (center >= t.begin && center < t.end) {
        lo_p = std::min(lo_p, p);
        hi_p = std::max(hi_p, p + 1);
      }
    }
    return std::pair{lo_p, hi_p};
  };

  const auto phis = scan_phases(cfg.scan_steps);
  OJson pairs = OJson::array();
  for (std::size_t i = 0; i + 1 < teeth.size(); ++i) {
    const auto [a0, a1] = pixel_range(teeth[i]);
    const auto [b0, b1] = pixel_range(teeth[i + 1]);
    if (a0 >= a1 || b0 >= b1) throw Error("comb analysis: tooth outside the SLM window");
    // Keep only the two teeth, then step the phase of the upper one.
    SlmMask pair = mask;
    for (std::size_t p = 0; p < layout.n_pixels; ++p)
      if (!((p >= a0 && p < a1) || (p >= b0 && p < b1))) pair.transmission[p] = 0.0;
    std::vector<ScanPoint> points;
    for (std::size_t s = 0; s < phis.size(); ++s) {
      const SlmMask m = compose(pair, pixel_phase_step(layout, b0, b1, phis[s]));
      const SpectralMode shaped = slm_apply(base_lo, m).mode;
      const double eta = efficiency(shaped, signal, DetectionChannel{eta_sys, 0.0, 0});
      const auto est = measure(eta, cfg.samples, derive_seed(master, {fnv1a("comb"), i, s}));
      points.push_back({phis[s], est.eta, est.std_error, eta});
    }
    const auto fit = fit_cosine(points);
    OJson pj;
    pj["teeth"] = {i, i + 1};
    pj["fit"] = fit_json(fit);
    OJson pts = OJson::array();
    for (const auto& p : points)
      pts.push_back({{"phi_lo_rad", p.phi}, {"eta_hat", p.eta_hat}, {"std_error", p.std_error}, {"oracle_eta_true", p.oracle_eta}});
    pj["points"] = pts;
    pairs.push_back(pj);
  }

  OJson j;
  j["tooth_count"] = teeth.size();
  j["tooth_threshold"] = cfg.tooth_threshold;
  j["tooth_spacing_rad_per_fs"] =
      teeth.size() > 1 ? (grid.offset(teeth.back().peak) - grid.offset(teeth.front().peak)) /
                             static_cast<double>(teeth.size() - 1)
                       : 0.0;
  j["teeth"] = teeth_json;
  j["lo_projection_sum"] = bessel;
  j["pair_scans"] = pairs;
  return j;
}

Report run_impl(const Scenario& s, const RunOptions& options) {
  const std::uint64_t master = options.seed;
  std::filesystem::create_directories(options.out_dir);
  ArtifactWriter out(options.out_dir);

  const FrequencyGrid grid = build_grid(s);
  const SpectralMode signal = build_mode(s.signal, grid);
  const SpectralMode base_lo = build_mode(s.local_oscillator, grid);
  const SlmLayout layout = build_layout(s, grid);
  const DetectionChannel channel{s.eta_sys, 0.0, 0};

  OJson payload;
  payload["scenario"] = s.name;
  payload["seed"] = master;
  payload["quadrature_convention"] = "vacuum variance 1/2; eta_hat = mean(x^2) - 1/2";

  SlmMask best_mask = SlmMask::identity(layout);
  OJson stages = OJson::array();
  std::optional<GaResult> previous;
  for (std::size_t i = 0; i < s.stages.size(); ++i) {
    const auto& st = s.stages[i];
    FitnessProblem problem{signal, base_lo, channel, layout, st.encoding, {}};
    GaParams params = st.ga;
    params.threads = options.threads;
    std::optional<GeneVector> seed_genes;
    if (st.seed_from_previous) seed_genes = encode_mask(previous->best_mask, st.encoding);
    GaResult r = run_ga(problem, params, stream(master, "stage", i), seed_genes);

    const std::string hist = s.stages.size() == 1 ? "ga_history.csv" : "ga_history_stage" + std::to_string(i + 1) + ".csv";
    out.text(hist, ga_history_to_csv(r));
    if (s.stages.size() > 1 && i + 1 == s.stages.size()) out.text("ga_history.csv", ga_history_to_csv(r));

    OJson sj = OJson::parse(ga_result_to_json(r));
    sj["seed_from_previous"] = st.seed_from_previous;
    sj["generations_to_overlap_sq_0.9"] = nullptr;
    if (auto g = generations_to_overlap(r, 0.9)) sj["generations_to_overlap_sq_0.9"] = *g;
    stages.push_back(sj);
    best_mask = r.best_mask;
    previous = std::move(r);
  }
  payload["stages"] = stages;

  const ShapedMode shaped = slm_apply(base_lo, best_mask);
  const SpectralMode& lo = shaped.mode;
  out.text("best_mask.csv", mask_to_csv(best_mask));
  save_mode(out.path("best_mode.csv"), lo);
  out.record("best_mode.csv");
  save_mode(out.path("oracle_signal_mode.csv"), signal);
  out.record("oracle_signal_mode.csv");

  const std::size_t n_final = s.analysis.final_samples;
  const double eta_final = efficiency(lo, signal, channel);
  const QuadratureBatch final_batch = sample_quadratures(eta_final, n_final, stream(master, "final"));
  const EtaEstimate final_est = estimate_eta(final_batch);
  OJson fin = estimate_json(final_est, n_final, eta_final);
  fin["throughput"] = shaped.throughput;
  fin["oracle_overlap_sq"] = overlap_sq(lo, signal);
  payload["final"] = fin;

  const double eta_ref = efficiency(base_lo, signal, channel);
  payload["unshaped_reference"] = estimate_json(measure(eta_ref, n_final, stream(master, "reference")), n_final, eta_ref);

  OJson ch;
  ch["spectral_fwhm_nm"] = spectral_fwhm_nm(lo);
  ch["temporal_fwhm_fs"] = temporal_fwhm(lo);
  ch["oracle_signal_spectral_fwhm_nm"] = spectral_fwhm_nm(signal);
  ch["oracle_signal_temporal_fwhm_fs"] = temporal_fwhm(signal);
  payload["characterization"] = ch;

  if (const auto& t = s.analysis.tomography) {
    const auto rec = reconstruct_state(final_batch, t->n_max, t->grid);
    out.text("wigner.csv", wigner_to_csv(rec.wigner));
    payload["tomography"] = tomography_json(rec);
  }

  if (const auto& f = s.analysis.frog) payload["frog"] = run_frog(*f, lo, stream(master, "frog"), out);

  if (const auto& ps = s.analysis.phase_scan) {
    const auto phis = scan_phases(ps->steps);
    const PhaseScan scan = phase_scan(signal, base_lo, best_mask, s.eta_sys, phis, ps->samples, stream(master, "scan"));
    out.text("phase_scan.csv", phase_scan_to_csv(scan));
    OJson pj;
    pj["steps"] = ps->steps;
    pj["samples"] = ps->samples;
    pj["fit"] = fit_json(scan.fit);
    pj["mean_std_error"] = scan.mean_std_error;

    // The orthogonal projection: pi on the second peak, measured and reconstructed.
    const std::size_t pivot = [&] {
      for (std::size_t p = 0; p < layout.n_pixels; ++p)
        if (layout.pixel_center_offset(p, grid) > 0.0) return p;
      return layout.n_pixels;
    }();
    const SpectralMode lo_pi = slm_apply(base_lo, compose(best_mask, pixel_phase_step(layout, pivot, layout.n_pixels, kPi))).mode;
    const double eta_pi = efficiency(lo_pi, signal, channel);
    const QuadratureBatch pi_batch = sample_quadratures(eta_pi, ps->samples, stream(master, "scan_pi"));
    OJson pi = estimate_json(estimate_eta(pi_batch), ps->samples, eta_pi);
    const std::size_t n_max = s.analysis.tomography ? s.analysis.tomography->n_max : 5;
    const WignerGridSpec spec = s.analysis.tomography ? s.analysis.tomography->grid : WignerGridSpec{};
    pi["tomography"] = tomography_json(reconstruct_state(pi_batch, n_max, spec));
    pj["phi_pi"] = pi;
    payload["phase_scan"] = pj;
  }

  if (const auto& c = s.analysis.comb)
    payload["comb"] = run_comb(*c, signal, base_lo, best_mask, lo, s.eta_sys, stream(master, "comb"));

  Report report;
  out.record("report.json");
  report.artifacts = out.names();
  std::sort(report.artifacts.begin(), report.artifacts.end());
  payload["artifacts"] = report.artifacts;
  report.payload = std::move(payload);

  std::ostringstream hash;
  hash << std::hex << scenario_hash(s);
  report.provenance["timestamp_utc"] = utc_timestamp();
  report.provenance["config_hash_fnv1a"] = hash.str();
  report.provenance["master_seed"] = master;
  report.provenance["threads"] = options.threads;
  report.provenance["versions"] = {{"photon_shaper", kVersion}, {"compiler", __VERSION__}};

  OJson doc;
  doc["payload"] = report.payload;
  doc["provenance"] = report.provenance;
  io::write_text(out.path("report.json"), doc.dump(2) + "\n");
  return report;
}

}  // namespace

Report run_scenario(const Scenario& s, const RunOptions& options) {
  try {
    return run_impl(s, options);
  } catch (const ValidationError& e) {
    throw ValidationError(s.name + ": " + e.what());
  } catch (const std::exception& e) {
    throw Error(s.name + ": " + e.what());
  }
}

CosineFit fit_cosine(std::span<const ScanPoint> points) {
  if (points.size() < 3) throw std::invalid_argument("cosine fit needs at least 3 points");
  Eigen::MatrixXd design(points.size(), 3);
  Eigen::VectorXd y(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    design(r, 0) = 1.0;
    design(r, 1) = std::cos(points[i].phi);
    design(r, 2) = std::sin(points[i].phi);
    y(r) = points[i].eta_hat;
  }
  const Eigen::Vector3d c = design.colPivHouseholderQr().solve(y);
  // B + A/2 + (A/2) cos(phi - phi0)
  CosineFit fit;
  const double half = std::hypot(c(1), c(2));
  fit.a = 2.0 * half;
  fit.b = c(0) - half;
  fit.phi0 = std::atan2(c(2), c(1));
  const Eigen::VectorXd residual = y - design * c;
  fit.residual_rms = std::sqrt(residual.squaredNorm() / static_cast<double>(points.size()));
  return fit;
}

SlmMask pixel_phase_step(const SlmLayout& layout, std::size_t first_pixel, std::size_t last_pixel, double phi) {
  if (first_pixel > last_pixel || last_pixel > layout.n_pixels) throw std::invalid_argument("bad pixel range");
  SlmMask m = SlmMask::identity(layout);
  for (std::size_t p = first_pixel; p < last_pixel; ++p) m.phase[p] = phi;
  return m;
}

std::vector<double> scan_phases(std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = kTwoPi * static_cast<double>(i) / static_cast<double>(n);
  return out;
}

PhaseScan phase_scan(const SpectralMode& signal, const SpectralMode& base_lo, const SlmMask& best_mask,
                     double eta_sys, std::span<const double> phis, std::size_t samples, std::uint64_t seed) {
  const auto& grid = signal.grid();
  const auto& layout = best_mask.layout;
  const auto inten = signal.intensity();
  const std::size_t c = grid.center_index();
  const double lower = *std::max_element(inten.begin(), inten.begin() + static_cast<std::ptrdiff_t>(c));
  const double upper = *std::max_element(inten.begin() + static_cast<std::ptrdiff_t>(c + 1), inten.end());
  const double top = std::max(lower, upper);
  if (std::min(lower, upper) < 0.1 * top || inten[c] > 0.5 * std::min(lower, upper))
    throw Error("phase scan: signal has no resolvable double-peak structure");

  std::size_t pivot = layout.n_pixels;
  for (std::size_t p = 0; p < layout.n_pixels; ++p)
    if (layout.pixel_center_offset(p, grid) > 0.0) {
      pivot = p;
      break;
    }

  PhaseScan scan;
  const DetectionChannel channel{eta_sys, 0.0, 0};
  for (std::size_t i = 0; i < phis.size(); ++i) {
    const SlmMask m = compose(best_mask, pixel_phase_step(layout, pivot, layout.n_pixels, phis[i]));
    const SpectralMode lo = slm_apply(base_lo, m).mode;
    const double eta = efficiency(lo, signal, channel);
    const auto est = measure(eta, samples, derive_seed(seed, {static_cast<std::uint64_t>(i)}));
    scan.points.push_back({phis[i], est.eta, est.std_error, eta});
    scan.mean_std_error += est.std_error;
  }
  scan.mean_std_error /= static_cast<double>(phis.size());
  scan.fit = fit_cosine(scan.points);
  return scan;
}

std::string phase_scan_to_csv(const PhaseScan& scan) {
  std::ostringstream out;
  out << "phi_lo_rad,eta_hat,std_error,oracle_eta_true\n";
  for (const auto& p : scan.points)
    out << io::format_double(p.phi) << ',' << io::format_double(p.eta_hat) << ','
        << io::format_double(p.std_error) << ',' << io::format_double(p.oracle_eta) << '\n';
  return out.str();
}

}  // namespace photon
