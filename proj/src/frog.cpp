#include "photon/frog.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "photon/error.hpp"
#include "photon/fft.hpp"
#include "photon/io.hpp"
#include "photon/rng.hpp"

namespace photon {
namespace {

// A_m = sum_k e_k exp(+i omega_m t_k) on the centered grid (unscaled).
ComplexVector centered_spectrum(std::span<const Complex> e) {
  ComplexVector a(e.begin(), e.end());
  for (std::size_t k = 1; k < a.size(); k += 2) a[k] = -a[k];
  fft::transform(a, fft::Direction::Backward);
  for (std::size_t m = 1; m < a.size(); m += 2) a[m] = -a[m];
  return a;
}

// Inverse of centered_spectrum.
ComplexVector centered_inverse(std::span<const Complex> a) {
  ComplexVector e(a.begin(), a.end());
  for (std::size_t m = 1; m < e.size(); m += 2) e[m] = -e[m];
  fft::transform(e, fft::Direction::Forward);
  const double inv_n = 1.0 / static_cast<double>(e.size());
  for (std::size_t k = 0; k < e.size(); ++k) e[k] *= (k % 2 == 0 ? inv_n : -inv_n);
  return e;
}

std::size_t gate_index(std::size_t k, std::size_t j, std::size_t n) { return (k + n + n / 2 - j) % n; }

// Signal spectra S_j(omega_m), stored per delay column at [j * n + m], without the d_t factor.
ComplexVector signal_spectra(std::span<const Complex> e) {
  const std::size_t n = e.size();
  ComplexVector out(n * n);
  ComplexVector col(n);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = 0; k < n; ++k) col[k] = e[k] * e[gate_index(k, j, n)];
    auto s = centered_spectrum(col);
    std::copy(s.begin(), s.end(), out.begin() + static_cast<std::ptrdiff_t>(j * n));
  }
  return out;
}

// Unnormalized trace laid out [m * n + j].
std::vector<double> raw_trace(const FrogField& f) {
  const std::size_t n = f.size();
  auto s = signal_spectra(f.samples);
  std::vector<double> out(n * n);
  const double dt2 = f.delta_t * f.delta_t;
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t m = 0; m < n; ++m) out[m * n + j] = std::norm(s[j * n + m]) * dt2;
  return out;
}

double g_error_against(const std::vector<double>& measured, const std::vector<double>& calc) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < calc.size(); ++i) {
    num += measured[i] * calc[i];
    den += calc[i] * calc[i];
  }
  const double mu = den > 0.0 ? num / den : 0.0;
  double ss = 0.0;
  for (std::size_t i = 0; i < calc.size(); ++i) {
    double d = measured[i] - mu * calc[i];
    ss += d * d;
  }
  return std::sqrt(ss / static_cast<double>(calc.size()));
}

void check_frog_size(std::size_t n) {
  if (n < 8 || n % 4 != 0) throw std::invalid_argument("FROG grid size must be a multiple of 4, at least 8");
}

double energy(std::span<const Complex> e) {
  double s = 0.0;
  for (const auto& v : e) s += std::norm(v);
  return s;
}

}  // namespace

FrogField crop_field(const TemporalField& f, std::size_t n, double edge_tolerance) {
  check_frog_size(n);
  const std::size_t full = f.size();
  if (n > full) throw std::invalid_argument("FROG grid larger than the field window");
  const std::size_t first = full / 2 - n / 2;
  auto env = f.envelope();
  double peak = 0.0, outside = 0.0;
  for (std::size_t k = 0; k < full; ++k) {
    double i = std::norm(env[k]);
    peak = std::max(peak, i);
    if (k <= first || k >= first + n - 1) outside = std::max(outside, i);
  }
  if (outside > edge_tolerance * peak) throw Error("field is clipped by the FROG time window");
  FrogField out{f.delta_t(), ComplexVector(env.begin() + static_cast<std::ptrdiff_t>(first),
                                           env.begin() + static_cast<std::ptrdiff_t>(first + n))};
  return out;
}

TemporalField embed_field(const FrogField& f, const FrequencyGrid& grid) {
  if (std::abs(f.delta_t - grid.delta_t()) > 1e-12 * grid.delta_t() || f.size() > grid.size())
    throw std::invalid_argument("FROG field does not fit the grid's time window");
  ComplexVector e(grid.size());
  const std::size_t first = grid.size() / 2 - f.size() / 2;
  std::copy(f.samples.begin(), f.samples.end(), e.begin() + static_cast<std::ptrdiff_t>(first));
  return TemporalField(grid, std::move(e));
}

FrogTrace frog_trace(const FrogField& f) {
  check_frog_size(f.size());
  FrogTrace t;
  t.n = f.size();
  t.delta_t = f.delta_t;
  t.intensity = raw_trace(f);
  t.peak = *std::max_element(t.intensity.begin(), t.intensity.end());
  if (!(t.peak > 0.0)) throw Error("FROG trace of a zero field");
  for (auto& v : t.intensity) v /= t.peak;
  return t;
}

FrogTrace frog_trace(const TemporalField& f, std::size_t n_delay, double edge_tolerance) {
  return frog_trace(crop_field(f, n_delay, edge_tolerance));
}

double frog_g_error(const FrogTrace& measured, const FrogField& field) {
  if (field.size() != measured.n) throw std::invalid_argument("field and trace sizes differ");
  return g_error_against(measured.intensity, raw_trace(field));
}

namespace {

ComplexVector initial_guess(const FrogTrace& trace, std::size_t attempt, Rng& rng) {
  const std::size_t n = trace.n;
  std::vector<double> marginal(n, 0.0), taus(n);
  for (std::size_t j = 0; j < n; ++j) {
    taus[j] = trace.tau(j);
    for (std::size_t m = 0; m < n; ++m) marginal[j] += trace.at(m, j);
  }
  // Delay marginal of a Gaussian is sqrt(2) wider than its intensity.
  const double width = std::max(fwhm(taus, marginal) / std::sqrt(2.0), 2.0 * trace.delta_t);
  const double sigma = width / (2.0 * std::sqrt(std::log(2.0)));
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const double phase_noise = attempt == 0 ? 0.1 : kPi;
  ComplexVector e(n);
  for (std::size_t k = 0; k < n; ++k) {
    double t = (static_cast<double>(k) - static_cast<double>(n / 2)) * trace.delta_t;
    double amp = std::exp(-0.5 * t * t / (sigma * sigma)) * (attempt == 0 ? 1.0 : 1.0 + 0.5 * unit(rng));
    e[k] = std::polar(std::max(amp, 0.0), phase_noise * unit(rng));
  }
  return e;
}

struct Attempt {
  ComplexVector best;
  double best_g = 1e300;
  std::size_t iterations = 0;
  std::vector<double> history;
};

Attempt pcgp(const FrogTrace& trace, ComplexVector e, std::size_t max_iter, double tolerance) {
  const std::size_t n = trace.n;
  std::vector<double> amp(n * n);
  for (std::size_t i = 0; i < amp.size(); ++i) amp[i] = std::sqrt(std::max(trace.intensity[i], 0.0));

  Attempt out;
  ComplexVector outer(n * n);
  ComplexVector col(n), v(n);
  std::vector<double> calc(n * n);
  for (std::size_t it = 0; it <= max_iter; ++it) {
    auto s = signal_spectra(e);
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t m = 0; m < n; ++m) calc[m * n + j] = std::norm(s[j * n + m]);
    double g = g_error_against(trace.intensity, calc);
    out.history.push_back(g);
    if (g < out.best_g) {
      out.best_g = g;
      out.best = e;
    }
    out.iterations = it;
    if (g < tolerance || it == max_iter) break;

    // Data constraint: keep the phase, impose the measured magnitude.
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t m = 0; m < n; ++m) {
        const Complex z = s[j * n + m];
        const double mag = std::abs(z);
        const double a = amp[m * n + j];
        col[m] = mag > 0.0 ? z * (a / mag) : Complex(a, 0.0);
      }
      auto back = centered_inverse(col);
      // O[k][l] with l the gate index of (k, j).
      for (std::size_t k = 0; k < n; ++k) outer[k * n + gate_index(k, j, n)] = back[k];
    }

    // One power-method step on O O^dagger.
    std::fill(v.begin(), v.end(), Complex{});
    for (std::size_t k = 0; k < n; ++k) {
      const Complex ek = e[k];
      for (std::size_t l = 0; l < n; ++l) v[l] += std::conj(outer[k * n + l]) * ek;
    }
    ComplexVector next(n);
    for (std::size_t k = 0; k < n; ++k) {
      Complex acc{};
      for (std::size_t l = 0; l < n; ++l) acc += outer[k * n + l] * v[l];
      next[k] = acc;
    }
    const double en = energy(next);
    if (!(en > 0.0)) break;
    const double scale = 1.0 / std::sqrt(en);
    for (auto& x : next) x *= scale;
    e = std::move(next);
  }
  return out;
}

}  // namespace

RetrievalResult frog_retrieve(const FrogTrace& trace, std::size_t max_iter, std::uint64_t seed) {
  RetrievalOptions options;
  options.max_iterations = max_iter;
  return frog_retrieve(trace, options, seed);
}

RetrievalResult frog_retrieve(const FrogTrace& trace, const RetrievalOptions& options, std::uint64_t seed) {
  check_frog_size(trace.n);
  if (trace.intensity.size() != trace.n * trace.n) throw std::invalid_argument("malformed FROG trace");
  for (double v : trace.intensity)
    if (!(v >= 0.0)) throw std::invalid_argument("FROG trace must be nonnegative");

  RetrievalResult result;
  result.g_error = 1e300;
  Rng rng = make_rng(seed);
  for (std::size_t attempt = 0; attempt <= options.restarts; ++attempt) {
    Attempt a = pcgp(trace, initial_guess(trace, attempt, rng), options.max_iterations, options.tolerance);
    result.iterations += a.iterations;
    if (a.best_g < result.g_error) {
      result.g_error = a.best_g;
      result.field = FrogField{trace.delta_t, std::move(a.best)};
      result.g_history = std::move(a.history);
    }
    if (result.g_error <= options.target_g) break;
  }
  // Scale to unit energy on the time axis.
  const double en = energy(result.field.samples) * trace.delta_t;
  if (en > 0.0)
    for (auto& x : result.field.samples) x /= std::sqrt(en);
  result.converged = result.g_error <= options.target_g;
  return result;
}

FrogField reverse_conjugate(const FrogField& f) {
  const std::size_t n = f.size();
  FrogField out{f.delta_t, ComplexVector(n)};
  for (std::size_t k = 0; k < n; ++k) out.samples[k] = std::conj(f.samples[(n - k) % n]);
  return out;
}

FrogField shift_field(const FrogField& f, double shift) {
  auto a = centered_spectrum(f.samples);
  const std::size_t n = f.size();
  const double dw = kTwoPi / (static_cast<double>(n) * f.delta_t);
  for (std::size_t m = 0; m < n; ++m)
    a[m] *= std::polar(1.0, (static_cast<double>(m) - static_cast<double>(n / 2)) * dw * shift);
  return FrogField{f.delta_t, centered_inverse(a)};
}

double field_overlap_sq(const FrogField& a, const FrogField& b) {
  if (a.size() != b.size()) throw std::invalid_argument("fields differ in size");
  Complex s{};
  for (std::size_t k = 0; k < a.size(); ++k) s += std::conj(a.samples[k]) * b.samples[k];
  return std::norm(s) / (energy(a.samples) * energy(b.samples));
}

namespace {

std::size_t peak_index(const FrogField& f) {
  std::size_t p = 0;
  for (std::size_t k = 1; k < f.size(); ++k)
    if (std::norm(f.samples[k]) > std::norm(f.samples[p])) p = k;
  return p;
}

FrogField canonical(const FrogField& f) {
  const std::size_t n = f.size();
  FrogField g{f.delta_t, ComplexVector(n)};
  const std::size_t p = peak_index(f);
  for (std::size_t k = 0; k < n; ++k) g.samples[k] = f.samples[(k + p + n - n / 2) % n];

  double w = 0.0, tw = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    double i = std::norm(g.samples[k]);
    w += i;
    tw += i * g.time(k);
  }
  // A half-sampling-rate carrier offset leaves the discrete trace unchanged; keep the
  // spectrum centered.
  auto a = centered_spectrum(g.samples);
  double inner = 0.0, outer = 0.0;
  for (std::size_t m = 0; m < n; ++m) (m >= n / 4 && m < 3 * n / 4 ? inner : outer) += std::norm(a[m]);
  if (outer > inner)
    for (std::size_t k = 1; k < n; k += 2) g.samples[k] = -g.samples[k];
  g = shift_field(g, -tw / w);
  const Complex at_peak = g.samples[peak_index(g)];
  const Complex unit = std::conj(at_peak) / std::abs(at_peak);
  for (auto& x : g.samples) x *= unit;
  return g;
}

}  // namespace

FrogField align_field(const FrogField& f, const FrogField* reference) {
  FrogField a = canonical(f);
  if (!reference) return a;
  FrogField b = canonical(reverse_conjugate(f));
  return field_overlap_sq(*reference, a) >= field_overlap_sq(*reference, b) ? a : b;
}

SpectralPhaseStep spectral_phase_step(const FrogField& f) {
  auto a = centered_spectrum(f.samples);
  const std::size_t n = f.size(), c = n / 2;
  std::size_t lo = 0, hi = c + 1;
  for (std::size_t m = 0; m < c; ++m)
    if (std::norm(a[m]) > std::norm(a[lo])) lo = m;
  for (std::size_t m = c + 1; m < n; ++m)
    if (std::norm(a[m]) > std::norm(a[hi])) hi = m;
  const double dw = kTwoPi / (static_cast<double>(n) * f.delta_t);
  SpectralPhaseStep s;
  s.lower_peak_omega = (static_cast<double>(lo) - static_cast<double>(c)) * dw;
  s.upper_peak_omega = (static_cast<double>(hi) - static_cast<double>(c)) * dw;
  s.step = std::arg(a[hi] * std::conj(a[lo]));
  return s;
}

std::vector<double> autocorrelation(const TemporalField& f, std::span<const double> delays) {
  const SpectralMode spec = from_time(f);
  const auto& g = f.grid();
  auto env = f.envelope();
  double background = 0.0;
  for (const auto& a : env) background += 2.0 * std::norm(a) * std::norm(a);
  if (!(background > 0.0)) throw Error("autocorrelation of a zero field");

  std::vector<double> out;
  out.reserve(delays.size());
  ComplexVector shifted(spec.size());
  for (double tau : delays) {
    for (std::size_t k = 0; k < spec.size(); ++k) shifted[k] = spec[k] * std::polar(1.0, g.offset(k) * tau);
    TemporalField late = to_time(SpectralMode(g, shifted));
    const Complex carrier = std::polar(1.0, g.center_omega() * tau);
    double s = 0.0;
    for (std::size_t k = 0; k < env.size(); ++k) {
      double i = std::norm(env[k] + late[k] * carrier);
      s += i * i;
    }
    out.push_back(s / background);
  }
  return out;
}

std::string trace_to_csv(const FrogTrace& t) {
  std::ostringstream out;
  out << "omega_rad_per_fs,tau_fs,intensity\n";
  for (std::size_t m = 0; m < t.n; ++m)
    for (std::size_t j = 0; j < t.n; ++j)
      out << io::format_double(t.omega(m)) << ',' << io::format_double(t.tau(j)) << ','
          << io::format_double(t.at(m, j)) << '\n';
  return out.str();
}

std::string trace_sidecar_json(const FrogTrace& t) {
  nlohmann::ordered_json j;
  j["n"] = t.n;
  j["delta_t_fs"] = t.delta_t;
  j["delta_omega_rad_per_fs"] = t.delta_omega();
  j["omega_axis"] = "doubled-frequency offset from 2*omega_0";
  j["row_order"] = "omega-major";
  j["normalization"] = "peak";
  j["peak"] = t.peak;
  return j.dump(2) + "\n";
}

void save_trace(const std::filesystem::path& csv_path, const FrogTrace& t) {
  io::write_text(csv_path, trace_to_csv(t));
  auto sidecar = csv_path;
  sidecar.replace_extension(".json");
  io::write_text(sidecar, trace_sidecar_json(t));
}

FrogTrace load_trace(const std::filesystem::path& csv_path) {
  auto lines = io::read_lines(csv_path);
  if (lines.empty() || lines[0].rfind("omega_rad_per_fs,tau_fs,intensity", 0) != 0)
    throw ValidationError("FROG CSV: missing 'omega_rad_per_fs,tau_fs,intensity' header");
  std::vector<double> taus, values;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto cols = io::split_csv(lines[i]);
    if (cols.size() != 3) throw ValidationError("FROG CSV: expected 3 columns on line " + std::to_string(i + 1));
    taus.push_back(io::parse_double(cols[1], "tau_fs"));
    values.push_back(io::parse_double(cols[2], "intensity"));
  }
  FrogTrace t;
  t.n = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(values.size()))));
  if (t.n * t.n != values.size() || t.n < 2) throw ValidationError("FROG CSV: row count is not a square");
  t.delta_t = taus[1] - taus[0];
  auto sidecar = csv_path;
  sidecar.replace_extension(".json");
  if (std::filesystem::exists(sidecar)) {
    try {
      auto j = nlohmann::json::parse(io::read_text(sidecar));
      if (j.at("n").get<std::size_t>() != t.n) throw ValidationError("FROG sidecar: n does not match the CSV");
      t.delta_t = j.at("delta_t_fs").get<double>();
      if (j.contains("peak")) t.peak = j["peak"].get<double>();
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(std::string("FROG sidecar: ") + e.what());
    }
  }
  if (!(t.delta_t > 0.0)) throw ValidationError("FROG CSV: delay axis must be increasing");
  try {
    check_frog_size(t.n);
  } catch (const std::invalid_argument& e) {
    throw ValidationError(std::string("FROG CSV: ") + e.what());
  }
  t.intensity = std::move(values);
  return t;
}

}  // namespace photon
