#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "photon/error.hpp"
#include "photon/frog.hpp"
#include "photon/io.hpp"
#include "photon/shaping.hpp"

using namespace photon;

namespace {

const FrequencyGrid kGrid = default_grid();

FrogField crop(const SpectralMode& m, std::size_t n = 128) { return crop_field(to_time(m), n); }

SpectralMode chirped() {
  const auto m = gaussian_mode(kGrid, 0.0, 9.4);
  return apply_phase(m, material_phase("BK7", 100.0, kGrid));
}

SpectralMode double_peak(double phi) { return michelson_modulate(gaussian_mode(kGrid, 0.0, 9.4), 150.0, phi); }

std::vector<double> delay_marginal(const FrogTrace& t) {
  std::vector<double> out(t.n, 0.0);
  for (std::size_t m = 0; m < t.n; ++m)
    for (std::size_t j = 0; j < t.n; ++j) out[j] += t.at(m, j);
  return out;
}

double max_trace_difference(const FrogTrace& a, const FrogTrace& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.intensity.size(); ++i) d = std::max(d, std::abs(a.intensity[i] - b.intensity[i]));
  return d;
}

}  // namespace

TEST(Crop, CenteredWindowAndClipping) {
  const auto f = crop(gaussian_mode(kGrid, 0.0, 9.4));
  EXPECT_EQ(f.size(), 128u);
  EXPECT_DOUBLE_EQ(f.delta_t, kGrid.delta_t());
  EXPECT_DOUBLE_EQ(f.time(64), 0.0);
  const auto wide = apply_phase(gaussian_mode(kGrid, 0.0, 9.4), material_phase("BK7", 3000.0, kGrid));
  EXPECT_THROW(crop(wide), Error);
  EXPECT_THROW(crop(gaussian_mode(kGrid, 0.0, 9.4), 90), std::invalid_argument);
}

TEST(Crop, EmbedRestoresTheField) {
  const auto m = chirped();
  const auto back = from_time(embed_field(crop(m), kGrid));
  EXPECT_NEAR(std::norm(overlap(m, back)), 1.0, 1e-12);
}

TEST(Trace, DelaySymmetry) {
  const auto t = frog_trace(crop(chirped()));
  double worst = 0.0;
  for (std::size_t m = 0; m < t.n; ++m)
    for (std::size_t j = 1; j < t.n; ++j) worst = std::max(worst, std::abs(t.at(m, j) - t.at(m, t.n - j)));
  EXPECT_LT(worst, 1e-12);
  EXPECT_NEAR(*std::max_element(t.intensity.begin(), t.intensity.end()), 1.0, 1e-15);
}

TEST(Trace, DelayMarginalIsTheIntensityAutocorrelation) {
  // Narrow bandwidth keeps the pulse many samples wide, so the discrete widths are accurate.
  const auto f = crop(gaussian_mode(kGrid, 0.0, 2.0));
  const auto t = frog_trace(f);
  std::vector<double> tau(t.n), time(f.size()), inten(f.size());
  for (std::size_t j = 0; j < t.n; ++j) tau[j] = t.tau(j);
  for (std::size_t k = 0; k < f.size(); ++k) {
    time[k] = f.time(k);
    inten[k] = std::norm(f.samples[k]);
  }
  EXPECT_NEAR(fwhm(tau, delay_marginal(t)) / fwhm(time, inten), std::sqrt(2.0), 0.01);
}

TEST(Trace, DoublePulseHasSideLobesAtTheDelay) {
  const auto m = michelson_modulate(gaussian_mode(kGrid, 0.0, 18.0), 150.0, 0.0);
  const auto t = frog_trace(crop(m));
  const auto marg = delay_marginal(t);
  std::vector<double> lobes;
  for (std::size_t j = 1; j + 1 < t.n; ++j)
    if (marg[j] > marg[j - 1] && marg[j] >= marg[j + 1] && marg[j] > 0.1 * marg[t.n / 2]) lobes.push_back(t.tau(j));
  ASSERT_EQ(lobes.size(), 3u);
  EXPECT_NEAR(lobes[0], -150.0, t.delta_t);
  EXPECT_NEAR(lobes[1], 0.0, 1e-12);
  EXPECT_NEAR(lobes[2], 150.0, t.delta_t);
}

TEST(Trace, EnergyIdentityPerDelay) {
  // Parseval per delay: sum_m |S(omega_m, tau_j)|^2 = N dt^2 sum_k |E_k E_{k-j}|^2.
  const auto f = crop(double_peak(kPi));
  const auto t = frog_trace(f);
  const std::size_t n = f.size();
  for (std::size_t j = 0; j < n; ++j) {
    double lhs = 0.0, rhs = 0.0;
    for (std::size_t m = 0; m < n; ++m) lhs += t.at(m, j) * t.peak;
    const long shift = static_cast<long>(j) - static_cast<long>(n / 2);
    for (std::size_t k = 0; k < n; ++k) {
      const auto gate = static_cast<std::size_t>(((static_cast<long>(k) - shift) % static_cast<long>(n) + n) % n);
      rhs += std::norm(f.samples[k] * f.samples[gate]);
    }
    rhs *= static_cast<double>(n) * f.delta_t * f.delta_t;
    ASSERT_NEAR(lhs, rhs, 1e-6 * std::max(rhs, 1e-3 * t.peak)) << "delay index " << j;
  }
}

TEST(Trace, AmbiguitiesLeaveTheTraceUnchanged) {
  const auto f = crop(double_peak(0.7));
  const auto t = frog_trace(f);
  EXPECT_LT(max_trace_difference(t, frog_trace(reverse_conjugate(f))), 1e-12);
  EXPECT_LT(max_trace_difference(t, frog_trace(shift_field(f, 3.0 * f.delta_t))), 1e-12);
  auto rotated = f;
  for (auto& s : rotated.samples) s *= std::polar(1.0, 1.3);
  EXPECT_LT(max_trace_difference(t, frog_trace(rotated)), 1e-12);
  EXPECT_NEAR(frog_g_error(t, f), 0.0, 1e-12);
  EXPECT_NEAR(frog_g_error(t, reverse_conjugate(f)), 0.0, 1e-12);
}

TEST(Retrieval, ChirpedPulse) {
  const auto truth = crop(chirped());
  const auto r = frog_retrieve(frog_trace(truth), RetrievalOptions{}, 1);
  EXPECT_TRUE(r.converged);
  EXPECT_LE(r.g_error, 1e-3);
  EXPECT_GE(field_overlap_sq(align_field(r.field, &truth), truth), 0.99);
}

TEST(Retrieval, DoublePeakWithPiStep) {
  // The two pulses sit at 0 and 150 fs; centering them removes the linear spectral phase.
  const auto truth = align_field(crop(double_peak(kPi)));
  const auto r = frog_retrieve(frog_trace(truth), RetrievalOptions{}, 3);
  EXPECT_LE(r.g_error, 1e-3);
  const auto aligned = align_field(r.field, &truth);
  EXPECT_GE(field_overlap_sq(aligned, truth), 0.99);
  EXPECT_NEAR(std::abs(spectral_phase_step(aligned).step), kPi, 0.15);
  EXPECT_NEAR(std::abs(spectral_phase_step(truth).step), kPi, 1e-6);
}

TEST(Retrieval, ErrorHistoryEndsSettled) {
  RetrievalOptions o;
  o.max_iterations = 60;
  o.restarts = 0;
  const auto r = frog_retrieve(frog_trace(crop(chirped())), o, 9);
  ASSERT_FALSE(r.g_history.empty());
  EXPECT_EQ(r.g_history.size(), r.iterations + 1);
  EXPECT_NEAR(r.g_error, *std::min_element(r.g_history.begin(), r.g_history.end()), 1e-15);
  if (!r.converged) {
    const std::size_t tail = std::min<std::size_t>(10, r.g_history.size());
    for (std::size_t i = r.g_history.size() - tail + 1; i < r.g_history.size(); ++i)
      EXPECT_LE(r.g_history[i], r.g_history[i - 1] * (1.0 + 1e-6));
  }
}

TEST(Retrieval, SameSeedSameField) {
  const auto t = frog_trace(crop(chirped()));
  RetrievalOptions o;
  o.max_iterations = 50;
  const auto a = frog_retrieve(t, o, 4);
  const auto b = frog_retrieve(t, o, 4);
  EXPECT_EQ(a.field.samples, b.field.samples);
  EXPECT_EQ(a.g_error, b.g_error);
}

TEST(Alignment, IsIdempotentAndRemovesAmbiguities) {
  const auto truth = crop(double_peak(kPi / 2));
  const auto a = align_field(truth);
  const auto aa = align_field(a);
  double diff = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) diff = std::max(diff, std::abs(a.samples[k] - aa.samples[k]));
  EXPECT_LT(diff, 1e-4);

  auto disguised = shift_field(reverse_conjugate(truth), 5.0 * truth.delta_t);
  for (std::size_t k = 0; k < disguised.size(); ++k)
    disguised.samples[k] *= std::polar(1.0, 2.0) * ((k % 2) ? -1.0 : 1.0);
  EXPECT_GT(field_overlap_sq(align_field(disguised, &truth), align_field(truth)), 0.9999);
}

TEST(Autocorrelation, EightToOneAndSymmetric) {
  const auto f = to_time(gaussian_mode(kGrid, 0.0, 9.4));
  const std::vector<double> delays = {0.0, 2000.0, -37.3, 37.3};
  const auto iac = autocorrelation(f, delays);
  EXPECT_NEAR(iac[0], 8.0, 1e-9);
  EXPECT_NEAR(iac[1], 1.0, 1e-6);
  EXPECT_NEAR(iac[2], iac[3], 1e-9);
}

TEST(Autocorrelation, ChirpWidensThePedestal) {
  // Averaging over one optical period leaves 1 + 2 G2(tau); its half-maximum sits at 2.
  const double period = kTwoPi / kGrid.center_omega();
  auto extent = [&](const SpectralMode& m) {
    std::vector<double> delays;
    for (double t = 0.0; t <= 600.0; t += 2.0)
      for (int k = 0; k < 16; ++k) delays.push_back(t + period * k / 16.0);
    const auto iac = autocorrelation(to_time(m), delays);
    double last = 0.0;
    for (std::size_t i = 0; i < delays.size(); i += 16) {
      double mean = 0.0;
      for (int k = 0; k < 16; ++k) mean += iac[i + k] / 16.0;
      if (mean > 2.0) last = delays[i];
    }
    return last;
  };
  const auto tl = gaussian_mode(kGrid, 0.0, 9.4);
  EXPECT_GT(extent(chirped()), 1.3 * extent(tl));
}

TEST(TraceFiles, RoundTripWithAndWithoutSidecar) {
  const auto dir = std::filesystem::temp_directory_path() / "photon_frog_test";
  std::filesystem::create_directories(dir);
  const auto t = frog_trace(crop(chirped()));
  save_trace(dir / "t.csv", t);
  ASSERT_TRUE(std::filesystem::exists(dir / "t.json"));
  const auto r = load_trace(dir / "t.csv");
  EXPECT_EQ(r.n, t.n);
  EXPECT_EQ(r.delta_t, t.delta_t);
  EXPECT_EQ(r.intensity, t.intensity);
  EXPECT_EQ(r.peak, t.peak);

  std::filesystem::remove(dir / "t.json");
  const auto bare = load_trace(dir / "t.csv");
  EXPECT_EQ(bare.n, t.n);
  EXPECT_NEAR(bare.delta_t, t.delta_t, 1e-9 * t.delta_t);
  EXPECT_EQ(bare.intensity, t.intensity);
  std::filesystem::remove_all(dir);
}

TEST(TraceFiles, MalformedTraceIsRejected) {
  const auto dir = std::filesystem::temp_directory_path() / "photon_frog_bad";
  std::filesystem::create_directories(dir);
  io::write_text(dir / "a.csv", "omega_rad_per_fs,tau_fs,intensity\n0,0,1\n0,1,1\n0,2,1\n");
  EXPECT_THROW(load_trace(dir / "a.csv"), ValidationError);
  std::filesystem::remove_all(dir);
}
