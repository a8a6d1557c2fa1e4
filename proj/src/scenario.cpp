#include "photon/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "json.hpp"
#include "photon/error.hpp"
#include "photon/io.hpp"
#include "photon/rng.hpp"

namespace photon {
namespace {

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ValidationError("scenario: " + (path.empty() ? std::string("<root>") : path) + ": " + what);
}

// Walks one JSON object, remembering which keys were consumed.
class Reader {
 public:
  Reader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_, "expected an object");
  }

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  const std::string& path() const { return path_; }

  const Json* raw(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  double number(const std::string& key, std::optional<double> fallback = std::nullopt) {
    const Json* v = raw(key);
    if (!v) {
      if (!fallback) fail(at(key), "required field is missing");
      return *fallback;
    }
    if (!v->is_number()) fail(at(key), "expected a number");
    double d = v->get<double>();
    if (!std::isfinite(d)) fail(at(key), "expected a finite number");
    return d;
  }

  std::size_t count(const std::string& key, std::optional<std::size_t> fallback = std::nullopt) {
    const Json* v = raw(key);
    if (!v) {
      if (!fallback) fail(at(key), "required field is missing");
      return *fallback;
    }
    if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<long long>() >= 0))
      fail(at(key), "expected a non-negative integer");
    return v->get<std::size_t>();
  }

  bool flag(const std::string& key, bool fallback) {
    const Json* v = raw(key);
    if (!v) return fallback;
    if (!v->is_boolean()) fail(at(key), "expected true or false");
    return v->get<bool>();
  }

  std::string text(const std::string& key, std::optional<std::string> fallback = std::nullopt) {
    const Json* v = raw(key);
    if (!v) {
      if (!fallback) fail(at(key), "required field is missing");
      return *fallback;
    }
    if (!v->is_string()) fail(at(key), "expected a string");
    return v->get<std::string>();
  }

  std::optional<Reader> child(const std::string& key) {
    const Json* v = raw(key);
    if (!v || v->is_null()) return std::nullopt;
    return Reader(*v, at(key));
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (it.key() != "comment" && !seen_.count(it.key())) fail(at(it.key()), "unknown key");
  }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void check(bool ok, const std::string& path, const std::string& what) {
  if (!ok) fail(path, what);
}

ModeRecipe read_mode(Reader r) {
  ModeRecipe m;
  m.fwhm_nm = r.number("fwhm_nm");
  check(m.fwhm_nm > 0.0, r.at("fwhm_nm"), "must be positive");
  m.center_offset_rad_per_fs = r.number("center_offset_rad_per_fs", 0.0);
  m.bk7_length_mm = r.number("bk7_length_mm", 0.0);
  check(m.bk7_length_mm >= 0.0, r.at("bk7_length_mm"), "must be non-negative");
  if (auto mi = r.child("michelson")) {
    MichelsonRecipe rec;
    rec.delay_fs = mi->number("delay_fs");
    rec.phi_rad = mi->number("phi_rad", 0.0);
    check(rec.delay_fs > 0.0, mi->at("delay_fs"), "must be positive");
    mi->finish();
    m.michelson = rec;
  }
  m.extra_gdd_fs2 = r.number("extra_gdd_fs2", 0.0);
  r.finish();
  return m;
}

GaParams read_ga(std::optional<Reader> r) {
  GaParams p;
  if (!r) return p;
  p.population_size = r->count("population_size", p.population_size);
  p.elite_count = r->count("elite_count", p.elite_count);
  p.tournament_size = r->count("tournament_size", p.tournament_size);
  p.crossover_rate = r->number("crossover_rate", p.crossover_rate);
  p.mutation_rate = r->number("mutation_rate", p.mutation_rate);
  p.mutation_sigma = r->number("mutation_sigma", p.mutation_sigma);
  p.max_generations = r->count("max_generations", p.max_generations);
  p.stall_generations = r->count("stall_generations", p.stall_generations);
  p.samples_per_eval = r->count("samples_per_eval", p.samples_per_eval);
  p.reevaluate_elites = r->flag("reevaluate_elites", p.reevaluate_elites);
  p.noiseless = r->flag("noiseless", p.noiseless);
  r->finish();
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    fail(r->path(), e.what());
  }
  return p;
}

Json mode_json(const ModeRecipe& m) {
  Json j;
  j["fwhm_nm"] = m.fwhm_nm;
  j["center_offset_rad_per_fs"] = m.center_offset_rad_per_fs;
  j["bk7_length_mm"] = m.bk7_length_mm;
  if (m.michelson) j["michelson"] = {{"delay_fs", m.michelson->delay_fs}, {"phi_rad", m.michelson->phi_rad}};
  j["extra_gdd_fs2"] = m.extra_gdd_fs2;
  return j;
}

Json ga_json(const GaParams& p) {
  return {{"population_size", p.population_size},   {"elite_count", p.elite_count},
          {"tournament_size", p.tournament_size},   {"crossover_rate", p.crossover_rate},
          {"mutation_rate", p.mutation_rate},       {"mutation_sigma", p.mutation_sigma},
          {"max_generations", p.max_generations},   {"stall_generations", p.stall_generations},
          {"samples_per_eval", p.samples_per_eval}, {"reevaluate_elites", p.reevaluate_elites},
          {"noiseless", p.noiseless}};
}

// Resolve the recipes once so that bad physics surfaces at load time.
void check_buildable(const Scenario& s) {
  FrequencyGrid grid = [&] {
    try {
      return build_grid(s);
    } catch (const std::invalid_argument& e) {
      fail("grid", e.what());
    }
  }();
  for (auto [name, recipe] : {std::pair{"signal", &s.signal}, std::pair{"local_oscillator", &s.local_oscillator}}) {
    try {
      build_mode(*recipe, grid);
    } catch (const std::exception& e) {
      fail(name, e.what());
    }
  }
  try {
    build_layout(s, grid);
  } catch (const std::invalid_argument& e) {
    fail("slm", e.what());
  }
}

}  // namespace

Scenario parse_scenario(std::string_view json_text) {
  Json root;
  try {
    root = Json::parse(json_text);
  } catch (const Json::parse_error& e) {
    throw ValidationError(std::string("scenario: malformed JSON: ") + e.what());
  }
  Reader r(root, "");
  Scenario s;
  s.name = r.text("name");
  check(!s.name.empty(), "name", "must not be empty");
  s.description = r.text("description", std::string{});
  s.default_seed = r.count("seed", 1);

  if (auto g = r.child("grid")) {
    s.grid.center_wavelength_nm = g->number("center_wavelength_nm", s.grid.center_wavelength_nm);
    s.grid.span_rad_per_fs = g->number("span_rad_per_fs", s.grid.span_rad_per_fs);
    s.grid.n_points = g->count("n_points", s.grid.n_points);
    g->finish();
  }
  {
    auto sig = r.child("signal");
    if (!sig) fail("signal", "required field is missing");
    s.signal = read_mode(*sig);
    auto lo = r.child("local_oscillator");
    if (!lo) fail("local_oscillator", "required field is missing");
    s.local_oscillator = read_mode(*lo);
  }
  if (auto ch = r.child("channel")) {
    s.eta_sys = ch->number("eta_sys", 1.0);
    check(s.eta_sys >= 0.0 && s.eta_sys <= 1.0, ch->at("eta_sys"), "must lie in [0, 1]");
    ch->finish();
  }
  if (auto slm = r.child("slm")) {
    s.slm_pixels = slm->count("n_pixels", s.slm_pixels);
    s.slm_samples_per_pixel = slm->count("samples_per_pixel", 0);
    slm->finish();
  }

  if (const Json* stages = r.raw("stages")) {
    check(stages->is_array(), "stages", "expected an array");
    for (std::size_t i = 0; i < stages->size(); ++i) {
      Reader st((*stages)[i], "stages[" + std::to_string(i) + "]");
      StageConfig c;
      const std::string enc = st.text("encoding");
      try {
        c.encoding = encoding_from_string(enc);
      } catch (const std::invalid_argument&) {
        fail(st.at("encoding"), "unknown encoding '" + enc + "'");
      }
      c.ga = read_ga(st.child("ga"));
      c.seed_from_previous = st.flag("seed_from_previous", false);
      if (c.seed_from_previous) {
        check(i > 0, st.at("seed_from_previous"), "the first stage has no predecessor");
        check(is_pixel_encoding(c.encoding), st.at("seed_from_previous"), "needs a pixel encoding");
      }
      st.finish();
      s.stages.push_back(c);
    }
  }

  if (auto a = r.child("analysis")) {
    s.analysis.final_samples = a->count("final_samples", s.analysis.final_samples);
    check(s.analysis.final_samples >= 1000, a->at("final_samples"), "must be at least 1000");
    if (auto t = a->child("tomography")) {
      TomographyConfig c;
      c.n_max = t->count("n_max", c.n_max);
      c.grid.half_width = t->number("half_width", c.grid.half_width);
      c.grid.points = t->count("points", c.grid.points);
      check(c.grid.half_width > 0.0, t->at("half_width"), "must be positive");
      check(c.grid.points >= 2, t->at("points"), "must be at least 2");
      t->finish();
      s.analysis.tomography = c;
    }
    if (auto f = a->child("frog")) {
      FrogConfig c;
      c.n_delay = f->count("n_delay", c.n_delay);
      check(c.n_delay >= 8 && c.n_delay % 4 == 0, f->at("n_delay"), "must be a multiple of 4, at least 8");
      c.edge_tolerance = f->number("edge_tolerance", c.edge_tolerance);
      c.retrieval.max_iterations = f->count("max_iterations", c.retrieval.max_iterations);
      c.retrieval.restarts = f->count("restarts", c.retrieval.restarts);
      c.retrieval.target_g = f->number("target_g", c.retrieval.target_g);
      f->finish();
      s.analysis.frog = c;
    }
    if (auto p = a->child("phase_scan")) {
      PhaseScanConfig c;
      c.steps = p->count("steps", c.steps);
      c.samples = p->count("samples", c.samples);
      check(c.steps >= 3, p->at("steps"), "must be at least 3");
      check(c.samples >= 1000, p->at("samples"), "must be at least 1000");
      p->finish();
      s.analysis.phase_scan = c;
    }
    if (auto c = a->child("comb")) {
      CombConfig cc;
      cc.min_teeth = c->count("min_teeth", cc.min_teeth);
      cc.tooth_threshold = c->number("tooth_threshold", cc.tooth_threshold);
      cc.scan_steps = c->count("scan_steps", cc.scan_steps);
      cc.samples = c->count("samples", cc.samples);
      check(cc.min_teeth >= 3, c->at("min_teeth"), "must be at least 3");
      check(cc.tooth_threshold > 0.0 && cc.tooth_threshold < 1.0, c->at("tooth_threshold"), "must lie in (0, 1)");
      check(cc.scan_steps >= 3, c->at("scan_steps"), "must be at least 3");
      check(cc.samples >= 1000, c->at("samples"), "must be at least 1000");
      c->finish();
      s.analysis.comb = cc;
    }
    a->finish();
  }
  r.finish();
  check_buildable(s);
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::string text;
  try {
    text = io::read_text(path);
  } catch (const ValidationError&) {
    throw;
  } catch (const std::exception& e) {
    throw ValidationError("scenario: cannot read " + path.string() + ": " + e.what());
  }
  return parse_scenario(text);
}

std::string scenario_to_json(const Scenario& s) {
  Json j;
  j["name"] = s.name;
  j["description"] = s.description;
  j["seed"] = s.default_seed;
  j["grid"] = {{"center_wavelength_nm", s.grid.center_wavelength_nm},
               {"span_rad_per_fs", s.grid.span_rad_per_fs},
               {"n_points", s.grid.n_points}};
  j["signal"] = mode_json(s.signal);
  j["local_oscillator"] = mode_json(s.local_oscillator);
  j["channel"] = {{"eta_sys", s.eta_sys}};
  j["slm"] = {{"n_pixels", s.slm_pixels}, {"samples_per_pixel", s.slm_samples_per_pixel}};
  j["stages"] = Json::array();
  for (const auto& st : s.stages)
    j["stages"].push_back({{"encoding", std::string(to_string(st.encoding))},
                           {"ga", ga_json(st.ga)},
                           {"seed_from_previous", st.seed_from_previous}});
  const auto& a = s.analysis;
  Json an;
  an["final_samples"] = a.final_samples;
  if (a.tomography)
    an["tomography"] = {{"n_max", a.tomography->n_max},
                        {"half_width", a.tomography->grid.half_width},
                        {"points", a.tomography->grid.points}};
  if (a.frog)
    an["frog"] = {{"n_delay", a.frog->n_delay},
                  {"edge_tolerance", a.frog->edge_tolerance},
                  {"max_iterations", a.frog->retrieval.max_iterations},
                  {"restarts", a.frog->retrieval.restarts},
                  {"target_g", a.frog->retrieval.target_g}};
  if (a.phase_scan) an["phase_scan"] = {{"steps", a.phase_scan->steps}, {"samples", a.phase_scan->samples}};
  if (a.comb)
    an["comb"] = {{"min_teeth", a.comb->min_teeth},
                  {"tooth_threshold", a.comb->tooth_threshold},
                  {"scan_steps", a.comb->scan_steps},
                  {"samples", a.comb->samples}};
  j["analysis"] = an;
  return j.dump(2) + "\n";
}

std::uint64_t scenario_hash(const Scenario& s) { return fnv1a(scenario_to_json(s)); }

FrequencyGrid build_grid(const Scenario& s) {
  return make_grid(s.grid.center_wavelength_nm, s.grid.span_rad_per_fs, s.grid.n_points);
}

SpectralMode build_mode(const ModeRecipe& r, const FrequencyGrid& grid) {
  SpectralMode m = gaussian_mode(grid, r.center_offset_rad_per_fs, r.fwhm_nm);
  if (r.bk7_length_mm > 0.0) m = apply_phase(m, material_phase("BK7", r.bk7_length_mm, grid));
  if (r.michelson) m = michelson_modulate(m, r.michelson->delay_fs, r.michelson->phi_rad);
  if (r.extra_gdd_fs2 != 0.0) {
    PhasePolynomial p;
    p.coefficients[2] = r.extra_gdd_fs2;
    m = apply_phase(m, p);
  }
  check_contained(m);
  return m;
}

SlmLayout build_layout(const Scenario& s, const FrequencyGrid& grid) {
  return SlmLayout::centered(grid, s.slm_pixels, s.slm_samples_per_pixel);
}

std::vector<Tooth> find_teeth(const SpectralMode& m, double threshold) {
  const auto inten = m.intensity();
  const std::size_t n = inten.size();
  const double peak = *std::max_element(inten.begin(), inten.end());
  std::vector<std::size_t> maxima;
  for (std::size_t k = 1; k + 1 < n; ++k)
    if (inten[k] > inten[k - 1] && inten[k] >= inten[k + 1] && inten[k] >= threshold * peak) maxima.push_back(k);

  std::vector<Tooth> teeth;
  for (std::size_t i = 0; i < maxima.size(); ++i) {
    Tooth t;
    t.peak = maxima[i];
    auto lowest = [&](std::size_t a, std::size_t b) {
      return static_cast<std::size_t>(std::min_element(inten.begin() + static_cast<std::ptrdiff_t>(a),
                                                       inten.begin() + static_cast<std::ptrdiff_t>(b)) -
                                      inten.begin());
    };
    t.begin = i == 0 ? 0 : lowest(maxima[i - 1], maxima[i]) + 1;
    t.end = i + 1 == maxima.size() ? n : lowest(maxima[i], maxima[i + 1]) + 1;
    teeth.push_back(t);
  }
  return teeth;
}

SpectralMode tooth_mode(const SpectralMode& m, const Tooth& t) {
  ComplexVector a(m.size());
  for (std::size_t k = t.begin; k < t.end; ++k) a[k] = m[k];
  return normalize(SpectralMode(m.grid(), std::move(a)));
}

Scenario comb_scenario(double delay_fs, std::size_t n_teeth) {
  if (!(delay_fs > 0.0)) throw ValidationError("comb: delay_fs must be positive");
  Scenario s;
  s.name = "comb_qudit";
  s.description = "Michelson comb, teeth spaced 2 pi / delay";
  s.signal.fwhm_nm = 9.4;
  s.signal.michelson = MichelsonRecipe{delay_fs, 0.0};
  s.local_oscillator.fwhm_nm = 11.0;
  s.eta_sys = 0.6;
  StageConfig poly;
  poly.encoding = Encoding::PolyPhase;
  StageConfig pixels;
  pixels.encoding = Encoding::PixelAmpPhase;
  pixels.seed_from_previous = true;
  pixels.ga.max_generations = 120;
  s.stages = {poly, pixels};
  CombConfig comb;
  comb.min_teeth = std::max<std::size_t>(3, n_teeth);
  s.analysis.comb = comb;

  const auto grid = build_grid(s);
  SpectralMode signal = [&] {
    try {
      return build_mode(s.signal, grid);
    } catch (const std::exception& e) {
      throw ValidationError(std::string("comb: ") + e.what());
    }
  }();
  const auto teeth = find_teeth(signal, comb.tooth_threshold);
  if (teeth.size() < comb.min_teeth)
    throw ValidationError("comb: only " + std::to_string(teeth.size()) + " teeth resolvable, need " +
                          std::to_string(comb.min_teeth));
  return s;
}

}  // namespace photon
