#include "photon/measurement.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "photon/error.hpp"
#include "photon/io.hpp"
#include "photon/rng.hpp"

namespace photon {

void DetectionChannel::validate() const {
  if (!(eta_sys >= 0.0 && eta_sys <= 1.0)) throw std::invalid_argument("eta_sys must lie in [0, 1]");
}

double efficiency(const SpectralMode& lo, const SpectralMode& sig, const DetectionChannel& ch) {
  ch.validate();
  double eta = ch.eta_sys * std::norm(overlap(lo, sig));
  return std::clamp(eta, 0.0, 1.0);
}

QuadratureBatch sample_quadratures(double eta, std::size_t n, std::uint64_t seed, double theta) {
  if (!(eta >= 0.0 && eta <= 1.0)) throw std::invalid_argument("eta must lie in [0, 1]");
  Rng rng = make_rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> vacuum(0.0, std::sqrt(0.5));
  // x^2 for |1> is Gamma(3/2, 1); the sign is uniform.
  std::gamma_distribution<double> photon_square(1.5, 1.0);

  QuadratureBatch b;
  b.theta = theta;
  b.seed = seed;
  b.true_eta = eta;
  b.samples.resize(n);
  for (auto& x : b.samples) {
    if (unit(rng) < eta) {
      double r = std::sqrt(photon_square(rng));
      x = unit(rng) < 0.5 ? -r : r;
    } else {
      x = vacuum(rng);
    }
  }
  return b;
}

EtaEstimate estimate_eta(const QuadratureBatch& b) {
  const std::size_t n = b.size();
  if (n < 100) throw std::invalid_argument("estimate_eta needs at least 100 samples");
  double mean = 0.0;
  for (double x : b.samples) mean += x * x;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double x : b.samples) {
    double d = x * x - mean;
    ss += d * d;
  }
  double var = ss / static_cast<double>(n - 1);

  EtaEstimate e;
  e.eta_unclamped = mean - 0.5;
  e.eta = std::clamp(e.eta_unclamped, 0.0, 1.0);
  e.std_error = std::sqrt(var / static_cast<double>(n));
  return e;
}

Spectrum spectrometer(const SpectralMode& m) {
  const auto& g = m.grid();
  const std::size_t n = m.size();
  Spectrum s;
  s.wavelength_nm.resize(n);
  s.intensity.resize(n);
  // Wavelength decreases with the sample index; store ascending.
  for (std::size_t k = 0; k < n; ++k) {
    s.wavelength_nm[n - 1 - k] = g.wavelength_nm(k);
    s.intensity[n - 1 - k] = std::norm(m[k]);
  }
  double peak = *std::max_element(s.intensity.begin(), s.intensity.end());
  if (peak > 0.0)
    for (auto& v : s.intensity) v /= peak;
  return s;
}

double spectral_fwhm_nm(const SpectralMode& m) {
  Spectrum s = spectrometer(m);
  return fwhm(s.wavelength_nm, s.intensity);
}

std::string batch_to_csv(const QuadratureBatch& b) {
  std::ostringstream out;
  out << "index,x,theta_rad\n";
  std::string theta = io::format_double(b.theta);
  for (std::size_t i = 0; i < b.size(); ++i) out << i << ',' << io::format_double(b.samples[i]) << ',' << theta << '\n';
  return out.str();
}

std::string batch_sidecar_json(const QuadratureBatch& b) {
  nlohmann::ordered_json j;
  j["n"] = b.size();
  j["seed"] = b.seed;
  j["theta_rad"] = b.theta;
  j["quadrature_convention"] = "vacuum variance 1/2";
  if (b.true_eta) j["oracle_eta_true"] = *b.true_eta;
  return j.dump(2) + "\n";
}

void save_batch(const std::filesystem::path& csv_path, const QuadratureBatch& b) {
  io::write_text(csv_path, batch_to_csv(b));
  auto sidecar = csv_path;
  sidecar.replace_extension(".json");
  io::write_text(sidecar, batch_sidecar_json(b));
}

QuadratureBatch load_batch(const std::filesystem::path& csv_path) {
  auto lines = io::read_lines(csv_path);
  if (lines.empty() || lines[0].rfind("index,x,theta_rad", 0) != 0)
    throw ValidationError("quadrature CSV: missing 'index,x,theta_rad' header");
  QuadratureBatch b;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto cols = io::split_csv(lines[i]);
    if (cols.size() != 3) throw ValidationError("quadrature CSV: expected 3 columns on line " + std::to_string(i + 1));
    b.samples.push_back(io::parse_double(cols[1], "x"));
    b.theta = io::parse_double(cols[2], "theta_rad");
  }
  for (double x : b.samples)
    if (!std::isfinite(x)) throw ValidationError("quadrature CSV: non-finite sample");
  if (b.samples.empty()) throw ValidationError("quadrature CSV: no samples");

  auto sidecar = csv_path;
  sidecar.replace_extension(".json");
  if (std::filesystem::exists(sidecar)) {
    try {
      auto j = nlohmann::json::parse(io::read_text(sidecar));
      if (j.contains("seed")) b.seed = j["seed"].get<std::uint64_t>();
      if (j.contains("oracle_eta_true")) b.true_eta = j["oracle_eta_true"].get<double>();
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(std::string("quadrature sidecar: ") + e.what());
    }
  }
  return b;
}

}  // namespace photon
