#include "photon/mode_core.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "photon/error.hpp"
#include "photon/fft.hpp"
#include "photon/io.hpp"

namespace photon {

FrequencyGrid::FrequencyGrid(double center_omega, double span, std::size_t n_points)
    : center_omega_(center_omega), span_(span), n_points_(n_points) {
  if (!(span > 0.0) || !std::isfinite(span)) throw std::invalid_argument("grid span must be positive");
  if (n_points < 64 || !std::has_single_bit(n_points))
    throw std::invalid_argument("grid n_points must be a power of two >= 64, got " + std::to_string(n_points));
  if (!(center_omega > 0.0) || !std::isfinite(center_omega))
    throw std::invalid_argument("grid center frequency must be positive");
  if (span / 2.0 >= center_omega) throw std::invalid_argument("grid span reaches zero frequency");
}

FrequencyGrid make_grid(double center_wavelength_nm, double span, std::size_t n_points) {
  if (!(center_wavelength_nm > 100.0 && center_wavelength_nm < 10000.0))
    throw std::invalid_argument("center wavelength must lie in (100, 10000) nm");
  return FrequencyGrid(omega_of_wavelength(center_wavelength_nm), span, n_points);
}

FrequencyGrid default_grid() { return make_grid(800.0, 0.30, 1024); }

SpectralMode::SpectralMode(FrequencyGrid grid, ComplexVector amplitude)
    : grid_(grid), amplitude_(std::move(amplitude)) {
  if (amplitude_.size() != grid_.size()) throw std::invalid_argument("mode size does not match its grid");
  for (const auto& a : amplitude_)
    if (!std::isfinite(a.real()) || !std::isfinite(a.imag()))
      throw std::invalid_argument("mode contains non-finite amplitude");
}

double SpectralMode::norm() const {
  double s = 0.0;
  for (const auto& a : amplitude_) s += std::norm(a);
  return s * grid_.delta_omega();
}

std::vector<double> SpectralMode::intensity() const {
  std::vector<double> out(amplitude_.size());
  std::transform(amplitude_.begin(), amplitude_.end(), out.begin(), [](Complex a) { return std::norm(a); });
  return out;
}

TemporalField::TemporalField(FrequencyGrid grid, ComplexVector envelope)
    : grid_(grid), envelope_(std::move(envelope)) {
  if (envelope_.size() != grid_.size()) throw std::invalid_argument("field size does not match its grid");
}

double TemporalField::norm() const {
  double s = 0.0;
  for (const auto& a : envelope_) s += std::norm(a);
  return s * grid_.delta_t();
}

std::vector<double> TemporalField::intensity() const {
  std::vector<double> out(envelope_.size());
  std::transform(envelope_.begin(), envelope_.end(), out.begin(), [](Complex a) { return std::norm(a); });
  return out;
}

SpectralMode normalize(const SpectralMode& m) {
  double n = m.norm();
  if (!(n > 0.0)) throw Error("cannot normalize an all-zero mode");
  double scale = 1.0 / std::sqrt(n);
  ComplexVector a(m.amplitude().begin(), m.amplitude().end());
  for (auto& v : a) v *= scale;
  return SpectralMode(m.grid(), std::move(a));
}

double sigma_omega_from_fwhm_nm(double fwhm_nm, double center_wavelength_nm) {
  double fwhm_omega = kTwoPi * kSpeedOfLight * fwhm_nm / (center_wavelength_nm * center_wavelength_nm);
  return fwhm_omega / std::sqrt(8.0 * std::log(2.0));
}

SpectralMode gaussian_mode(const FrequencyGrid& grid, double center_offset, double fwhm_lambda_nm) {
  if (!(fwhm_lambda_nm > 0.0)) throw std::invalid_argument("gaussian FWHM must be positive");
  double sigma = sigma_omega_from_fwhm_nm(fwhm_lambda_nm, grid.center_wavelength_nm());
  if (sigma > grid.span() / 6.0)
    throw Error("gaussian mode too broad for the grid span");
  ComplexVector a(grid.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    double d = grid.offset(k) - center_offset;
    a[k] = std::exp(-d * d / (4.0 * sigma * sigma));
  }
  SpectralMode m = normalize(SpectralMode(grid, std::move(a)));
  check_contained(m);
  return m;
}

void check_contained(const SpectralMode& m, double tolerance) {
  auto amp = m.amplitude();
  double peak = 0.0;
  for (const auto& a : amp) peak = std::max(peak, std::norm(a));
  double edge = std::max(std::norm(amp.front()), std::norm(amp.back()));
  if (edge > tolerance * peak) throw Error("mode is clipped by the grid edges");
}

Complex overlap(const SpectralMode& a, const SpectralMode& b) {
  if (!(a.grid() == b.grid())) throw std::invalid_argument("overlap of modes on different grids");
  Complex s = 0.0;
  auto x = a.amplitude();
  auto y = b.amplitude();
  for (std::size_t k = 0; k < x.size(); ++k) s += std::conj(x[k]) * y[k];
  return s * a.grid().delta_omega();
}

// With omega'_j = (j - n/2) d_omega and t_k = (k - n/2) d_t, the kernel
// exp(-i omega'_j t_k) factors into (-1)^j (-1)^k exp(-2 pi i jk/n) whenever n % 4 == 0.
TemporalField to_time(const SpectralMode& m) {
  const auto& g = m.grid();
  ComplexVector e(m.amplitude().begin(), m.amplitude().end());
  for (std::size_t j = 1; j < e.size(); j += 2) e[j] = -e[j];
  fft::transform(e, fft::Direction::Forward);
  double scale = g.delta_omega() / std::sqrt(kTwoPi);
  for (std::size_t k = 0; k < e.size(); ++k) e[k] *= (k % 2 == 0 ? scale : -scale);
  return TemporalField(g, std::move(e));
}

SpectralMode from_time(const TemporalField& f) {
  const auto& g = f.grid();
  ComplexVector a(f.envelope().begin(), f.envelope().end());
  for (std::size_t k = 1; k < a.size(); k += 2) a[k] = -a[k];
  fft::transform(a, fft::Direction::Backward);
  double scale = g.delta_t() / std::sqrt(kTwoPi);
  for (std::size_t j = 0; j < a.size(); ++j) a[j] *= (j % 2 == 0 ? scale : -scale);
  return SpectralMode(g, std::move(a));
}

SpectralMode rotate_phase(const SpectralMode& m, double theta) {
  Complex f = std::polar(1.0, theta);
  ComplexVector a(m.amplitude().begin(), m.amplitude().end());
  for (auto& v : a) v *= f;
  return SpectralMode(m.grid(), std::move(a));
}

double fwhm(std::span<const double> axis, std::span<const double> profile) {
  if (axis.size() != profile.size() || profile.empty())
    throw std::invalid_argument("fwhm: axis and profile sizes differ");
  auto peak_it = std::max_element(profile.begin(), profile.end());
  if (!(*peak_it > 0.0)) throw std::invalid_argument("fwhm of an all-zero profile");
  const double half = *peak_it / 2.0;
  const std::size_t n = profile.size();

  auto crossing = [&](std::size_t inside, std::size_t outside) {
    double y0 = profile[outside], y1 = profile[inside];
    double frac = (half - y0) / (y1 - y0);
    return axis[outside] + frac * (axis[inside] - axis[outside]);
  };

  std::size_t first = 0;
  while (profile[first] < half) ++first;
  std::size_t last = n - 1;
  while (profile[last] < half) --last;

  double left = first == 0 ? axis[0] : crossing(first, first - 1);
  double right = last == n - 1 ? axis[n - 1] : crossing(last, last + 1);
  return std::abs(right - left);
}

double temporal_fwhm(const SpectralMode& m) {
  TemporalField f = to_time(m);
  std::vector<double> t(f.size());
  for (std::size_t k = 0; k < t.size(); ++k) t[k] = f.time(k);
  auto i = f.intensity();
  return fwhm(t, i);
}

std::string mode_to_csv(const SpectralMode& m) {
  const auto& g = m.grid();
  std::ostringstream out;
  out << "# spectral_mode center_omega_rad_per_fs=" << io::format_double(g.center_omega())
      << " span_rad_per_fs=" << io::format_double(g.span()) << " n_points=" << g.size() << '\n';
  out << "omega_rad_per_fs,lambda_nm,re,im\n";
  for (std::size_t k = 0; k < m.size(); ++k) {
    out << io::format_double(g.omega(k)) << ',' << io::format_double(g.wavelength_nm(k)) << ','
        << io::format_double(m[k].real()) << ',' << io::format_double(m[k].imag()) << '\n';
  }
  return out.str();
}

SpectralMode mode_from_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line.rfind("# spectral_mode", 0) != 0)
    throw ValidationError("mode CSV: missing '# spectral_mode' metadata line");

  double center = 0.0, span = 0.0;
  long long n = -1;
  std::istringstream meta(line.substr(15));
  for (std::string tok; meta >> tok;) {
    auto eq = tok.find('=');
    if (eq == std::string::npos) throw ValidationError("mode CSV: bad metadata token '" + tok + "'");
    auto key = tok.substr(0, eq);
    auto val = std::string_view(tok).substr(eq + 1);
    if (key == "center_omega_rad_per_fs") center = io::parse_double(val, key);
    else if (key == "span_rad_per_fs") span = io::parse_double(val, key);
    else if (key == "n_points") n = io::parse_int(val, key);
    else throw ValidationError("mode CSV: unknown metadata key '" + key + "'");
  }
  if (n <= 0) throw ValidationError("mode CSV: n_points missing");

  std::optional<FrequencyGrid> grid;
  try {
    grid.emplace(center, span, static_cast<std::size_t>(n));
  } catch (const std::invalid_argument& e) {
    throw ValidationError(std::string("mode CSV: ") + e.what());
  }

  if (!std::getline(in, line) || line.rfind("omega_rad_per_fs,lambda_nm,re,im", 0) != 0)
    throw ValidationError("mode CSV: missing column header");

  ComplexVector a;
  a.reserve(static_cast<std::size_t>(n));
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cols = io::split_csv(line);
    if (cols.size() != 4) throw ValidationError("mode CSV: expected 4 columns in row " + std::to_string(a.size()));
    a.emplace_back(io::parse_double(cols[2], "re"), io::parse_double(cols[3], "im"));
  }
  if (a.size() != static_cast<std::size_t>(n))
    throw ValidationError("mode CSV: expected " + std::to_string(n) + " rows, got " + std::to_string(a.size()));
  try {
    return SpectralMode(*grid, std::move(a));
  } catch (const std::invalid_argument& e) {
    throw ValidationError(std::string("mode CSV: ") + e.what());
  }
}

void save_mode(const std::filesystem::path& path, const SpectralMode& m) { io::write_text(path, mode_to_csv(m)); }

SpectralMode load_mode(const std::filesystem::path& path) { return mode_from_csv(io::read_text(path)); }

}  // namespace photon
