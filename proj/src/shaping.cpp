#include "photon/shaping.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "photon/error.hpp"
#include "photon/io.hpp"

namespace photon {

double PhasePolynomial::operator()(double offset) const {
  // Horner on c_n / n!
  static constexpr std::array<double, 5> inv_fact{1.0, 1.0, 0.5, 1.0 / 6.0, 1.0 / 24.0};
  double acc = 0.0;
  for (std::size_t n = coefficients.size(); n-- > 0;) acc = acc * offset + coefficients[n] * inv_fact[n];
  return acc;
}

PhasePolynomial PhasePolynomial::operator-() const { return scaled(-1.0); }

PhasePolynomial PhasePolynomial::scaled(double factor) const {
  PhasePolynomial p = *this;
  for (auto& c : p.coefficients) c *= factor;
  return p;
}

namespace {
constexpr std::array<const char*, 5> kPolyKeys{"c0_rad", "c1_fs", "c2_fs2", "c3_fs3", "c4_fs4"};
}

std::string polynomial_to_json(const PhasePolynomial& p) {
  nlohmann::ordered_json j;
  for (std::size_t n = 0; n < 5; ++n) j[kPolyKeys[n]] = p.coefficients[n];
  return j.dump(2);
}

PhasePolynomial polynomial_from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("phase polynomial JSON: ") + e.what());
  }
  if (!j.is_object()) throw ValidationError("phase polynomial JSON: expected an object");
  PhasePolynomial p;
  for (auto& [key, value] : j.items()) {
    auto it = std::find_if(kPolyKeys.begin(), kPolyKeys.end(), [&](const char* k) { return key == k; });
    if (it == kPolyKeys.end()) throw ValidationError("phase polynomial JSON: unknown key '" + key + "'");
    if (!value.is_number()) throw ValidationError("phase polynomial JSON: '" + key + "' must be a number");
    p.coefficients[static_cast<std::size_t>(it - kPolyKeys.begin())] = value.get<double>();
  }
  return p;
}

namespace {

struct Sellmeier {
  std::array<double, 3> b;
  std::array<double, 3> c_um2;
};

// Schott N-BK7.
constexpr Sellmeier kBK7{{1.03961212, 0.231792344, 1.01046945}, {0.00600069867, 0.0200179144, 103.560653}};

const Sellmeier& sellmeier_for(std::string_view material) {
  if (material == "BK7") return kBK7;
  throw std::invalid_argument("unknown material '" + std::string(material) + "'");
}

// n and its first three wavelength derivatives (per nm).
struct IndexDerivatives {
  double n, d1, d2, d3;
};

IndexDerivatives index_derivatives(const Sellmeier& s, double lambda_nm) {
  // f = n^2 = 1 + sum B l^2/(l^2 - C) = 1 + sum (B + B C / u), u = l^2 - C
  double f = 1.0, f1 = 0.0, f2 = 0.0, f3 = 0.0;
  const double l = lambda_nm;
  for (std::size_t i = 0; i < 3; ++i) {
    const double bc = s.b[i] * s.c_um2[i] * 1e6;
    const double u = l * l - s.c_um2[i] * 1e6;
    f += s.b[i] + bc / u;
    f1 += -2.0 * bc * l / (u * u);
    f2 += -2.0 * bc / (u * u) + 8.0 * bc * l * l / (u * u * u);
    f3 += 24.0 * bc * l / (u * u * u) - 48.0 * bc * l * l * l / (u * u * u * u);
  }
  IndexDerivatives d{};
  d.n = std::sqrt(f);
  d.d1 = f1 / (2.0 * d.n);
  d.d2 = (f2 - 2.0 * d.d1 * d.d1) / (2.0 * d.n);
  d.d3 = (f3 - 6.0 * d.d1 * d.d2) / (2.0 * d.n);
  return d;
}

}  // namespace

double refractive_index(std::string_view material, double wavelength_nm) {
  return index_derivatives(sellmeier_for(material), wavelength_nm).n;
}

PhasePolynomial material_phase(std::string_view material, double length_mm, const FrequencyGrid& grid) {
  const auto& s = sellmeier_for(material);
  if (!(length_mm > 0.0)) throw std::invalid_argument("material length must be positive");
  const double lambda = grid.center_wavelength_nm();
  const double length_nm = length_mm * 1e6;
  const double c = kSpeedOfLight;
  auto d = index_derivatives(s, lambda);

  PhasePolynomial p;
  p.coefficients[2] = lambda * lambda * lambda / (kTwoPi * c * c) * d.d2 * length_nm;
  p.coefficients[3] = -std::pow(lambda, 4) / (4.0 * kPi * kPi * c * c * c) * (3.0 * d.d2 + lambda * d.d3) * length_nm;
  return p;
}

SpectralMode apply_phase(const SpectralMode& m, const PhasePolynomial& p) {
  const auto& g = m.grid();
  ComplexVector a(m.amplitude().begin(), m.amplitude().end());
  for (std::size_t k = 0; k < a.size(); ++k) a[k] *= std::polar(1.0, p(g.offset(k)));
  return SpectralMode(g, std::move(a));
}

SpectralMode michelson_modulate(const SpectralMode& m, double delay_fs, double phi) {
  if (!(delay_fs >= 0.0)) throw std::invalid_argument("Michelson delay must be non-negative");
  const auto& g = m.grid();
  ComplexVector a(m.amplitude().begin(), m.amplitude().end());
  for (std::size_t k = 0; k < a.size(); ++k)
    a[k] *= 0.5 * (1.0 + std::polar(1.0, g.offset(k) * delay_fs + phi));
  SpectralMode out(g, std::move(a));
  if (out.norm() < 1e-12) throw Error("Michelson modulation is fully destructive");
  return normalize(out);
}

SlmLayout SlmLayout::centered(const FrequencyGrid& grid, std::size_t n_pixels, std::size_t samples_per_pixel) {
  if (n_pixels == 0) throw std::invalid_argument("SLM needs at least one pixel");
  if (samples_per_pixel == 0) samples_per_pixel = grid.size() / (2 * n_pixels);
  if (samples_per_pixel == 0 || n_pixels * samples_per_pixel > grid.size())
    throw std::invalid_argument("SLM window does not fit on the grid");
  SlmLayout l;
  l.grid_points = grid.size();
  l.n_pixels = n_pixels;
  l.samples_per_pixel = samples_per_pixel;
  l.first_sample = (grid.size() - n_pixels * samples_per_pixel) / 2;
  return l;
}

double SlmLayout::pixel_center_offset(std::size_t pixel, const FrequencyGrid& grid) const {
  double idx = static_cast<double>(first_sample + pixel * samples_per_pixel) +
               0.5 * static_cast<double>(samples_per_pixel - 1);
  return (idx - static_cast<double>(grid.center_index())) * grid.delta_omega();
}

SlmMask SlmMask::identity(const SlmLayout& layout) {
  return SlmMask{layout, std::vector<double>(layout.n_pixels, 1.0), std::vector<double>(layout.n_pixels, 0.0)};
}

double quantize_transmission(double t) {
  t = std::clamp(t, 0.0, 1.0);
  constexpr double top = static_cast<double>(kSlmLevels - 1);
  return std::round(t * top) / top;
}

double quantize_phase(double phi) {
  double w = std::fmod(phi, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  constexpr auto levels = static_cast<long long>(kSlmLevels);
  long long q = std::llround(w / kTwoPi * static_cast<double>(levels)) % levels;
  return kTwoPi * static_cast<double>(q) / static_cast<double>(levels);
}

namespace {
double wrap_phase(double phi) {
  double w = std::fmod(phi, kTwoPi);
  return w < 0.0 ? w + kTwoPi : w;
}
}  // namespace

SlmMask compose(const SlmMask& a, const SlmMask& b) {
  if (!(a.layout == b.layout)) throw std::invalid_argument("cannot compose masks with different layouts");
  SlmMask out = a;
  for (std::size_t p = 0; p < out.size(); ++p) {
    out.transmission[p] = a.transmission[p] * b.transmission[p];
    out.phase[p] = wrap_phase(a.phase[p] + b.phase[p]);
  }
  return out;
}

std::string mask_to_csv(const SlmMask& mask) {
  std::ostringstream out;
  const auto& l = mask.layout;
  out << "# slm_mask grid_points=" << l.grid_points << " first_sample=" << l.first_sample
      << " samples_per_pixel=" << l.samples_per_pixel << " n_pixels=" << l.n_pixels << '\n';
  out << "pixel_index,transmission,phase_rad\n";
  for (std::size_t p = 0; p < mask.size(); ++p)
    out << p << ',' << io::format_double(mask.transmission[p]) << ',' << io::format_double(mask.phase[p]) << '\n';
  return out.str();
}

SlmMask mask_from_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line.rfind("# slm_mask", 0) != 0)
    throw ValidationError("mask CSV: missing '# slm_mask' metadata line");
  SlmLayout l;
  std::istringstream meta(line.substr(10));
  for (std::string tok; meta >> tok;) {
    auto eq = tok.find('=');
    if (eq == std::string::npos) throw ValidationError("mask CSV: bad metadata token '" + tok + "'");
    auto key = tok.substr(0, eq);
    auto v = static_cast<std::size_t>(io::parse_int(std::string_view(tok).substr(eq + 1), key));
    if (key == "grid_points") l.grid_points = v;
    else if (key == "first_sample") l.first_sample = v;
    else if (key == "samples_per_pixel") l.samples_per_pixel = v;
    else if (key == "n_pixels") l.n_pixels = v;
    else throw ValidationError("mask CSV: unknown metadata key '" + key + "'");
  }
  if (!std::getline(in, line) || line.rfind("pixel_index,transmission,phase_rad", 0) != 0)
    throw ValidationError("mask CSV: missing column header");
  SlmMask mask{l, {}, {}};
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cols = io::split_csv(line);
    if (cols.size() != 3) throw ValidationError("mask CSV: expected 3 columns");
    if (io::parse_int(cols[0], "pixel_index") != static_cast<long long>(mask.size()))
      throw ValidationError("mask CSV: pixel rows out of order");
    double t = io::parse_double(cols[1], "transmission");
    double phi = io::parse_double(cols[2], "phase_rad");
    if (t < 0.0 || t > 1.0) throw ValidationError("mask CSV: transmission outside [0,1]");
    if (phi < 0.0 || phi >= kTwoPi) throw ValidationError("mask CSV: phase outside [0, 2pi)");
    mask.transmission.push_back(t);
    mask.phase.push_back(phi);
  }
  if (mask.size() != l.n_pixels) throw ValidationError("mask CSV: pixel count does not match n_pixels");
  return mask;
}

std::string_view to_string(Encoding e) {
  switch (e) {
    case Encoding::PixelPhase: return "PixelPhase";
    case Encoding::PixelAmpPhase: return "PixelAmpPhase";
    case Encoding::PolyPhase: return "PolyPhase";
    case Encoding::PolyPlusAmpPixels: return "PolyPlusAmpPixels";
  }
  return "?";
}

Encoding encoding_from_string(std::string_view name) {
  for (auto e : {Encoding::PixelPhase, Encoding::PixelAmpPhase, Encoding::PolyPhase, Encoding::PolyPlusAmpPixels})
    if (to_string(e) == name) return e;
  throw ValidationError("unknown encoding '" + std::string(name) + "'");
}

std::size_t gene_count(Encoding e, std::size_t n_pixels) {
  switch (e) {
    case Encoding::PixelPhase: return n_pixels;
    case Encoding::PixelAmpPhase: return 2 * n_pixels;
    case Encoding::PolyPhase: return 5;
    case Encoding::PolyPlusAmpPixels: return 5 + n_pixels;
  }
  return 0;
}

bool is_pixel_encoding(Encoding e) { return e == Encoding::PixelPhase || e == Encoding::PixelAmpPhase; }

PhasePolynomial decode_polynomial(std::span<const double> genes, const PolyRanges& ranges) {
  if (genes.size() < 5) throw std::invalid_argument("polynomial needs 5 genes");
  PhasePolynomial p;
  for (std::size_t n = 0; n < 5; ++n) p.coefficients[n] = (2.0 * genes[n] - 1.0) * ranges.half_range[n];
  return p;
}

SlmMask decode_genes(const GeneVector& g, const SlmLayout& layout, const FrequencyGrid& grid,
                     const PolyRanges& ranges) {
  const std::size_t np = layout.n_pixels;
  if (g.genes.size() != gene_count(g.encoding, np))
    throw std::invalid_argument("gene count " + std::to_string(g.genes.size()) + " does not match encoding " +
                                std::string(to_string(g.encoding)));
  for (double v : g.genes)
    if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("gene outside [0, 1]");

  SlmMask mask = SlmMask::identity(layout);
  switch (g.encoding) {
    case Encoding::PixelPhase:
      for (std::size_t p = 0; p < np; ++p) mask.phase[p] = quantize_phase(kTwoPi * g.genes[p]);
      break;
    case Encoding::PixelAmpPhase:
      for (std::size_t p = 0; p < np; ++p) {
        mask.transmission[p] = quantize_transmission(g.genes[p]);
        mask.phase[p] = quantize_phase(kTwoPi * g.genes[np + p]);
      }
      break;
    case Encoding::PolyPhase:
    case Encoding::PolyPlusAmpPixels: {
      PhasePolynomial poly = decode_polynomial(g.genes, ranges);
      for (std::size_t p = 0; p < np; ++p) mask.phase[p] = quantize_phase(poly(layout.pixel_center_offset(p, grid)));
      if (g.encoding == Encoding::PolyPlusAmpPixels)
        for (std::size_t p = 0; p < np; ++p) mask.transmission[p] = quantize_transmission(g.genes[5 + p]);
      break;
    }
  }
  return mask;
}

GeneVector encode_mask(const SlmMask& mask, Encoding encoding) {
  const std::size_t np = mask.size();
  GeneVector g{encoding, {}};
  switch (encoding) {
    case Encoding::PixelPhase:
      for (std::size_t p = 0; p < np; ++p) {
        if (mask.transmission[p] != 1.0) throw std::invalid_argument("PixelPhase cannot represent amplitude shaping");
        g.genes.push_back(wrap_phase(mask.phase[p]) / kTwoPi);
      }
      break;
    case Encoding::PixelAmpPhase:
      g.genes.assign(mask.transmission.begin(), mask.transmission.end());
      for (std::size_t p = 0; p < np; ++p) g.genes.push_back(wrap_phase(mask.phase[p]) / kTwoPi);
      break;
    default:
      throw std::invalid_argument("only pixel encodings can represent an arbitrary mask");
  }
  for (auto& v : g.genes) v = std::clamp(v, 0.0, 1.0);
  return g;
}

ShapedMode slm_apply(const SpectralMode& m, const SlmMask& mask) {
  const auto& l = mask.layout;
  if (l.grid_points != m.size() || l.end_sample() > m.size() || mask.transmission.size() != l.n_pixels ||
      mask.phase.size() != l.n_pixels)
    throw std::invalid_argument("SLM mask does not map onto the mode's grid");
  ComplexVector a(m.amplitude().begin(), m.amplitude().end());
  for (std::size_t p = 0; p < l.n_pixels; ++p) {
    Complex f = std::polar(mask.transmission[p], mask.phase[p]);
    std::size_t begin = l.first_sample + p * l.samples_per_pixel;
    for (std::size_t k = begin; k < begin + l.samples_per_pixel; ++k) a[k] *= f;
  }
  SpectralMode shaped(m.grid(), std::move(a));
  double throughput = shaped.norm();
  if (!(throughput > 1e-12)) throw Error("SLM mask blocks the whole spectrum");
  return ShapedMode{normalize(shaped), throughput};
}

}  // namespace photon
