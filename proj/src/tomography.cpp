#include "photon/tomography.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "photon/io.hpp"

namespace photon {

std::vector<double> fock_densities(double x, std::size_t n_max) {
  std::vector<double> out(n_max + 1);
  // psi_0 = pi^(-1/4) exp(-x^2/2); psi_{n+1} = sqrt(2/(n+1)) x psi_n - sqrt(n/(n+1)) psi_{n-1}
  double prev = 0.0;
  double cur = std::pow(kPi, -0.25) * std::exp(-0.5 * x * x);
  for (std::size_t n = 0; n <= n_max; ++n) {
    out[n] = cur * cur;
    double dn = static_cast<double>(n);
    double next = std::sqrt(2.0 / (dn + 1.0)) * x * cur - std::sqrt(dn / (dn + 1.0)) * prev;
    prev = cur;
    cur = next;
  }
  return out;
}

std::vector<double> laguerre(double y, std::size_t n_max) {
  std::vector<double> out(n_max + 1);
  out[0] = 1.0;
  if (n_max >= 1) out[1] = 1.0 - y;
  for (std::size_t k = 1; k < n_max; ++k) {
    double dk = static_cast<double>(k);
    out[k + 1] = ((2.0 * dk + 1.0 - y) * out[k] - dk * out[k - 1]) / (dk + 1.0);
  }
  return out;
}

FockDiagonal fit_diagonal(const QuadratureBatch& b, std::size_t n_max, const EmOptions& options) {
  const std::size_t n = b.size();
  if (n < 1000) throw std::invalid_argument("fit_diagonal needs at least 1000 samples");
  const std::size_t m = n_max + 1;

  std::vector<double> dens(n * m);
  for (std::size_t i = 0; i < n; ++i) {
    auto d = fock_densities(b.samples[i], n_max);
    std::copy(d.begin(), d.end(), dens.begin() + static_cast<std::ptrdiff_t>(i * m));
  }

  FockDiagonal fit;
  fit.populations.assign(m, 1.0 / static_cast<double>(m));
  std::vector<double> resp(m);

  auto sweep = [&](std::vector<double>* responsibilities) {
    double ll = 0.0;
    if (responsibilities) std::fill(responsibilities->begin(), responsibilities->end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double* p = &dens[i * m];
      double mix = 0.0;
      for (std::size_t k = 0; k < m; ++k) mix += fit.populations[k] * p[k];
      ll += std::log(mix);
      if (responsibilities)
        for (std::size_t k = 0; k < m; ++k) (*responsibilities)[k] += p[k] / mix;
    }
    return ll;
  };

  double ll = sweep(&resp);
  fit.log_likelihood_history.push_back(ll);
  const double inv_n = 1.0 / static_cast<double>(n);
  while (fit.iterations < options.max_iterations) {
    for (std::size_t k = 0; k < m; ++k) fit.populations[k] *= resp[k] * inv_n;
    ++fit.iterations;
    double next = sweep(&resp);
    fit.log_likelihood_history.push_back(next);
    double gain = (next - ll) * inv_n;
    ll = next;
    if (gain < options.tolerance) {
      fit.converged = true;
      break;
    }
  }
  fit.log_likelihood = ll;
  return fit;
}

double WignerGrid::integral() const {
  double s = 0.0;
  for (double v : values) s += v;
  return s * step() * step();
}

double WignerGrid::min() const { return *std::min_element(values.begin(), values.end()); }

double wigner_value(const std::vector<double>& populations, double x, double p) {
  const double r2 = x * x + p * p;
  auto lag = laguerre(2.0 * r2, populations.size() - 1);
  double s = 0.0;
  for (std::size_t n = 0; n < populations.size(); ++n) s += (n % 2 == 0 ? 1.0 : -1.0) * populations[n] * lag[n];
  return s * std::exp(-r2) / kPi;
}

WignerGrid wigner(const FockDiagonal& d, const WignerGridSpec& spec) {
  if (spec.points < 2 || !(spec.half_width > 0.0)) throw std::invalid_argument("bad Wigner grid spec");
  WignerGrid w;
  w.axis.resize(spec.points);
  const double step = 2.0 * spec.half_width / static_cast<double>(spec.points - 1);
  for (std::size_t i = 0; i < spec.points; ++i) w.axis[i] = -spec.half_width + step * static_cast<double>(i);
  w.values.resize(spec.points * spec.points);
  for (std::size_t ix = 0; ix < spec.points; ++ix)
    for (std::size_t ip = 0; ip < spec.points; ++ip)
      w.values[ix * spec.points + ip] = wigner_value(d.populations, w.axis[ix], w.axis[ip]);
  return w;
}

WignerGrid vacuum_wigner(const WignerGridSpec& spec) {
  FockDiagonal vac;
  vac.populations = {1.0};
  return wigner(vac, spec);
}

double max_abs_difference(const WignerGrid& a, const WignerGrid& b) {
  if (a.values.size() != b.values.size()) throw std::invalid_argument("Wigner grids differ in size");
  double m = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) m = std::max(m, std::abs(a.values[i] - b.values[i]));
  return m;
}

StateReconstruction reconstruct_state(const QuadratureBatch& b, std::size_t n_max, const WignerGridSpec& spec) {
  StateReconstruction r{fit_diagonal(b, n_max), {}};
  r.wigner = wigner(r.diagonal, spec);
  return r;
}

std::string wigner_to_csv(const WignerGrid& w) {
  std::ostringstream out;
  out << "x,p,W\n";
  for (std::size_t ix = 0; ix < w.axis.size(); ++ix)
    for (std::size_t ip = 0; ip < w.axis.size(); ++ip)
      out << io::format_double(w.axis[ix]) << ',' << io::format_double(w.axis[ip]) << ','
          << io::format_double(w.at(ix, ip)) << '\n';
  return out.str();
}

std::string wigner_summary_json(const StateReconstruction& r) {
  nlohmann::ordered_json j;
  j["W_origin"] = wigner_value(r.diagonal.populations, 0.0, 0.0);
  j["W_min"] = r.wigner.min();
  j["rho_diagonal"] = r.diagonal.populations;
  j["log_likelihood"] = r.diagonal.log_likelihood;
  j["em_iterations"] = r.diagonal.iterations;
  j["em_converged"] = r.diagonal.converged;
  j["grid"] = {{"half_width", r.wigner.axis.back()}, {"points", r.wigner.axis.size()}};
  return j.dump(2);
}

}  // namespace photon
