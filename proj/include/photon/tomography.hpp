#pragma once

// Phase-averaged state reconstruction: maximum-likelihood Fock populations via EM,
// rendered as a radially symmetric Wigner function.

#include <cstddef>
#include <string>
#include <vector>

#include "photon/measurement.hpp"

namespace photon {

/// |psi_n(x)|^2 for n = 0..n_max, harmonic-oscillator eigenfunctions with vacuum variance 1/2.
/// Uses the three-term recurrence on psi_n, stable well past n = 50.
std::vector<double> fock_densities(double x, std::size_t n_max);

/// Laguerre polynomials L_0..L_n_max at y.
std::vector<double> laguerre(double y, std::size_t n_max);

struct FockDiagonal {
  std::vector<double> populations;  ///< rho_nn, n = 0..n_max
  double log_likelihood = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  /// Log-likelihood after each EM iterate, starting with the uniform initial guess.
  std::vector<double> log_likelihood_history;

  std::size_t n_max() const { return populations.size() - 1; }
};

struct EmOptions {
  /// Stop when the log-likelihood gain per sample falls below this.
  double tolerance = 1e-9;
  std::size_t max_iterations = 10000;
};

/// Throws std::invalid_argument for fewer than 1000 samples. Non-convergence is reported
/// through FockDiagonal::converged, not thrown.
FockDiagonal fit_diagonal(const QuadratureBatch& b, std::size_t n_max = 5, const EmOptions& options = {});

struct WignerGridSpec {
  double half_width = 3.0;
  std::size_t points = 121;
};

/// Values on a square (x, p) grid, row-major with x as the slow index.
struct WignerGrid {
  std::vector<double> axis;
  std::vector<double> values;

  double step() const { return axis.size() > 1 ? axis[1] - axis[0] : 0.0; }
  double at(std::size_t ix, std::size_t ip) const { return values[ix * axis.size() + ip]; }
  double integral() const;
  double min() const;
};

/// W at radius r for a diagonal state: sum_n rho_nn (-1)^n / pi L_n(2 r^2) exp(-r^2).
double wigner_value(const std::vector<double>& populations, double x, double p);

WignerGrid wigner(const FockDiagonal& d, const WignerGridSpec& spec = {});
WignerGrid vacuum_wigner(const WignerGridSpec& spec = {});
double max_abs_difference(const WignerGrid& a, const WignerGrid& b);

struct StateReconstruction {
  FockDiagonal diagonal;
  WignerGrid wigner;
};

StateReconstruction reconstruct_state(const QuadratureBatch& b, std::size_t n_max = 5,
                                      const WignerGridSpec& spec = {});

/// CSV (x,p,W).
std::string wigner_to_csv(const WignerGrid& w);
/// W at origin, min W and the Fock diagonal.
std::string wigner_summary_json(const StateReconstruction& r);

}  // namespace photon
