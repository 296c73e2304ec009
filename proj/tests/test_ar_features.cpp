#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "relayar/ar.hpp"
#include "relayar/features.hpp"
#include "relayar/fuzzy.hpp"
#include "relayar/waveform.hpp"

using namespace relayar;
using Catch::Approx;

namespace {

waveform::SampleWindow window_of(const waveform::Record3Ph& rec, double cycles = 0.5) {
  return waveform::window_at_index(rec, 0, cycles);
}

waveform::Record3Ph record_from(const std::vector<double>& x, double fs = 7680, double f0 = 60) {
  waveform::Record3Ph rec;
  rec.fs = fs;
  rec.f0 = f0;
  rec.samples_a = x;
  rec.samples_b = x;
  rec.samples_c = x;
  return rec;
}

double rel_err(double got, double want) { return std::fabs(got - want) / std::max({1.0, std::fabs(got), std::fabs(want)}); }

}  // namespace

TEST_CASE("ar_fit recovers a near-noiseless AR(1)") {
  Rng rng(7);
  std::vector<double> x(64);
  x[0] = 1.0;
  for (std::size_t i = 1; i < x.size(); ++i) x[i] = 0.9 * x[i - 1] + rng.gaussian(0.0, 1e-8);
  const auto m = ar::ar_fit(x, 1);
  CHECK(std::fabs(m.coeffs[0] - 0.9) < 1e-3);
}

TEST_CASE("ar_fit on a pure sinusoid recovers the exact order-2 recurrence") {
  std::vector<double> x(64);
  const double w = 2.0 * std::numbers::pi * 60.0 / 7680.0;
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::cos(w * static_cast<double>(i));
  const auto m = ar::ar_fit(x, 2);
  CHECK(m.coeffs[0] == Approx(2.0 * std::cos(w)).margin(1e-6));
  CHECK(m.coeffs[1] == Approx(-1.0).margin(1e-6));
  CHECK(m.residual_var < 1e-18);
}

TEST_CASE("ar_fit minimum-norm solution on a constant window") {
  std::vector<double> x(64, 3.3);
  const auto m = ar::ar_fit(x, 10);
  double sum = 0.0;
  for (double c : m.coeffs) sum += c;
  CHECK(sum == Approx(1.0).margin(1e-9));
  CHECK(m.residual_var < 1e-18);
}

TEST_CASE("ar_fit rejects short windows and non-finite input") {
  std::vector<double> tiny(11, 1.0);
  CHECK_THROWS_WITH(ar::ar_fit(tiny, 10), Catch::Matchers::ContainsSubstring("shorter"));
  std::vector<double> bad(64, 1.0);
  bad[5] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_WITH(ar::ar_fit(bad, 2), Catch::Matchers::ContainsSubstring("non-finite"));
  CHECK_THROWS(ar::ar_fit(bad, 0));
}

TEST_CASE("ar_fit residual vanishes for any exact low-order recurrence") {
  Rng rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    // stable AR(2) from poles inside the unit disk
    const double r = rng.uniform(0.2, 0.95);
    const double th = rng.uniform(0.1, 3.0);
    const double a1 = 2.0 * r * std::cos(th);
    const double a2 = -r * r;
    std::vector<double> x(80);
    x[0] = rng.uniform(-1.0, 1.0);
    x[1] = rng.uniform(-1.0, 1.0);
    for (std::size_t i = 2; i < x.size(); ++i) x[i] = a1 * x[i - 1] + a2 * x[i - 2];
    const auto m = ar::ar_fit(x, 4);
    CHECK(m.residual_var <= 1e-9 * (1.0 + oracle::abs_energy(x)));
  }
}

TEST_CASE("ar coefficients are scale-invariant") {
  Rng rng(3);
  std::vector<double> x(64);
  for (auto& v : x) v = rng.uniform(-1.0, 1.0);
  const auto base = ar::ar_fit(x, 10);
  for (auto& v : x) v *= -217.5;
  const auto scaled = ar::ar_fit(x, 10);
  for (std::size_t k = 0; k < 10; ++k) CHECK(scaled.coeffs[k] == Approx(base.coeffs[k]).margin(1e-9));
}

TEST_CASE("ar_fit agrees with the normal-equations oracle on random windows") {
  Rng rng(17);
  for (int trial = 0; trial < 25; ++trial) {
    std::vector<double> x(64);
    for (auto& v : x) v = rng.uniform(-1.0, 1.0);
    const auto fit = ar::ar_fit(x, 10);
    const auto want = oracle::ar_normal_equations(x, 10);
    for (std::size_t k = 0; k < 10; ++k) CHECK(rel_err(fit.coeffs[k], want[k]) < 1e-9);
  }
}

TEST_CASE("hand-checked catalog values") {
  const auto rec = record_from({1, -1, 1, -1, 1, -1, 1, -1, 1, -1, 1, -1, 1, -1, 1, -1});
  auto win = waveform::window_at_index(rec, 0, 16.0 * 60.0 / 7680.0);
  REQUIRE(win.size() == 16);
  const std::vector<int> ids = {1};
  const auto vec = features::extract(win, ids);
  CHECK(vec[0].at(1).value == 16.0);  // sum of squares of +-1

  const auto rec2 = record_from(std::vector<double>{0, 1, 2, 3, 0, 1, 2, 3, 0, 1, 2, 3, 0, 1, 2, 3});
  auto win2 = waveform::window_at_index(rec2, 0, 4.0 * 60.0 / 7680.0);
  REQUIRE(win2.size() == 4);
  const std::vector<int> ids2 = {2, 141};
  const auto vec2 = features::extract(win2, ids2);
  CHECK(vec2[0].at(2).value == 3.0);
  CHECK(vec2[0].at(141).value == Approx(std::sqrt(3.0)).margin(1e-12));
}

TEST_CASE("degenerate windows flag the sigma- and mu-divided features undefined") {
  const auto rec = record_from(std::vector<double>(32, 2.5));
  const auto win = window_of(rec, 32.0 * 60.0 / 7680.0);
  const std::vector<int> ids = {14, 15, 20, 139, 140, 131};
  const auto vec = features::extract(win, ids);
  CHECK(vec[0].at(14).value == 0.0);
  CHECK(vec[0].at(14).defined);
  CHECK_FALSE(vec[0].at(15).defined);  // autocorrelation
  CHECK_FALSE(vec[0].at(20).defined);  // kurtosis
  CHECK_FALSE(vec[0].at(139).defined);  // skewness
  CHECK_FALSE(vec[0].at(131).defined);  // sample entropy

  // zero-mean alternating window: variation coefficient undefined
  const auto rec2 = record_from({1, -1, 1, -1, 1, -1, 1, -1, 1, -1, 1, -1, 1, -1, 1, -1});
  const auto win2 = waveform::window_at_index(rec2, 0, 16.0 * 60.0 / 7680.0);
  const std::vector<int> vc = {140};
  CHECK_FALSE(features::extract(win2, vc)[0].at(140).defined);
}

TEST_CASE("extract is pure: identical windows give identical vectors") {
  waveform::EventSpec spec;
  spec.kind = waveform::EventKind::fault;
  spec.fault_type = waveform::FaultType::bcg;
  spec.off_nominal_hz = 48.0;
  const auto rec = waveform::synthesize(spec, 7680, 12.0 / 60.0, 5);
  const auto win = waveform::window_at_index(rec, 640, 0.5);
  const auto a = features::extract_all(win);
  const auto b = features::extract_all(win);
  for (int p = 0; p < 3; ++p)
    for (const auto& [id, fv] : a[static_cast<std::size_t>(p)].values) {
      const auto& other = b[static_cast<std::size_t>(p)].at(id);
      CHECK(fv.value == other.value);
      CHECK(fv.defined == other.defined);
    }
}

TEST_CASE("Parseval ties the DFT path to abs_energy") {
  Rng rng(29);
  std::vector<double> x(64);
  for (auto& v : x) v = rng.uniform(-2.0, 2.0);
  double spectral = 0.0;
  for (int k = 0; k < 64; ++k) spectral += std::norm(oracle::dft_bin(x, k));
  spectral /= 64.0;
  const auto rec = record_from(x);
  const auto win = window_of(rec);
  const std::vector<int> ids = {1};
  const double energy = features::extract(win, ids)[0].at(1).value;
  CHECK(rel_err(spectral, energy) < 1e-6);
}

TEST_CASE("full catalog matches the naive oracle on random windows") {
  Rng rng(31);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<double> x(12 + rng.uniform_int(53));
    for (auto& v : x) v = rng.uniform(-3.0, 3.0);
    const auto rec = record_from(x);
    const auto win = waveform::window_at_index(rec, 0, static_cast<double>(x.size()) * 60.0 / 7680.0);
    REQUIRE(win.size() == x.size());
    const auto got = features::extract_all(win)[0];

    CHECK(rel_err(got.at(1).value, oracle::abs_energy(x)) < 1e-9);
    CHECK(rel_err(got.at(2).value, oracle::abs_sum_changes(x)) < 1e-9);
    CHECK(rel_err(got.at(13).value, oracle::abs_sum_changes(x) / (static_cast<double>(x.size()) - 1.0)) < 1e-9);
    CHECK(rel_err(got.at(14).value, oracle::population_sigma(x)) < 1e-9);
    for (int l = 1; l <= 5; ++l) {
      const auto want = oracle::autocorrelation(x, static_cast<std::size_t>(l));
      CHECK(got.at(14 + l).defined == want.defined);
      if (want.defined) CHECK(rel_err(got.at(14 + l).value, want.v) < 1e-9);
    }
    CHECK(rel_err(got.at(20).value, oracle::kurtosis(x).v) < 1e-9);
    CHECK(rel_err(got.at(139).value, oracle::skewness(x).v) < 1e-9);
    for (int k = 1; k <= 20; ++k) {
      const auto f = oracle::dft_bin(x, k);
      const int base = 21 + 4 * (k - 1);
      CHECK(rel_err(got.at(base).value, f.real()) < 1e-9);
      CHECK(rel_err(got.at(base + 1).value, f.imag()) < 1e-9);
      CHECK(rel_err(got.at(base + 2).value, std::abs(f)) < 1e-9);
      // angles compare on the circle (the +-pi cut is representation, not value)
      const double dang = got.at(base + 3).value - std::arg(f);
      CHECK(std::fabs(std::atan2(std::sin(dang), std::cos(dang))) < 1e-9);
    }
    const int widths[3] = {5, 10, 20};
    for (int w = 0; w < 3; ++w)
      for (int pos = 0; pos < 10; ++pos) {
        const double c = (pos + 0.5) * static_cast<double>(x.size()) / 10.0;
        CHECK(rel_err(got.at(101 + 10 * w + pos).value, oracle::ricker(x, widths[w], c)) < 1e-6);
      }
    const auto se = oracle::sample_entropy(x);
    CHECK(got.at(131).defined == se.defined);
    if (se.defined) CHECK(rel_err(got.at(131).value, se.v) < 1e-6);
    CHECK(rel_err(got.at(132).value, oracle::first_max_pos(x)) < 1e-9);
    CHECK(rel_err(got.at(133).value, oracle::last_max_pos(x)) < 1e-9);
    const double ps[] = {0.0, 0.25, 0.5, 0.75, 1.0};
    for (int q = 0; q < 5; ++q) CHECK(rel_err(got.at(134 + q).value, oracle::quantile(x, ps[q])) < 1e-9);
    CHECK(rel_err(got.at(141).value, oracle::cid_complexity(x)) < 1e-9);
  }
}

TEST_CASE("sequence components from phasor triples") {
  using cd = std::complex<double>;
  const cd a = std::polar(1.0, 2.0 * std::numbers::pi / 3.0);
  // balanced positive-sequence set
  auto seq = features::sequence_components({cd{1.0, 0.0}, cd{1.0, 0.0} / a, cd{1.0, 0.0} * a});
  CHECK(seq[0] == Approx(0.0).margin(1e-12));
  CHECK(seq[1] == Approx(1.0).margin(1e-12));
  CHECK(seq[2] == Approx(0.0).margin(1e-12));
  // pure zero sequence
  seq = features::sequence_components({cd{1.0, 0.0}, cd{1.0, 0.0}, cd{1.0, 0.0}});
  CHECK(seq[0] == Approx(1.0).margin(1e-12));
  CHECK(seq[1] == Approx(0.0).margin(1e-12));
  CHECK(seq[2] == Approx(0.0).margin(1e-12));
  // single energized phase
  seq = features::sequence_components({cd{1.0, 0.0}, cd{0.0, 0.0}, cd{0.0, 0.0}});
  for (double m : seq) CHECK(m == Approx(1.0 / 3.0).margin(1e-12));
}

TEST_CASE("sequence magnitudes are invariant under a common rotation") {
  using cd = std::complex<double>;
  const std::array<cd, 3> base = {cd{1.2, 0.3}, cd{-0.4, 0.9}, cd{0.1, -1.1}};
  const auto ref = features::sequence_components(base);
  for (double theta : {0.3, 1.1, 2.9}) {
    const cd rot = std::polar(1.0, theta);
    const auto got = features::sequence_components({base[0] * rot, base[1] * rot, base[2] * rot});
    for (int i = 0; i < 3; ++i) CHECK(got[static_cast<std::size_t>(i)] == Approx(ref[static_cast<std::size_t>(i)]).margin(1e-12));
  }
  const auto by_oracle = oracle::sequence_components(base[0], base[1], base[2]);
  for (int i = 0; i < 3; ++i) CHECK(ref[static_cast<std::size_t>(i)] == Approx(by_oracle[static_cast<std::size_t>(i)]).margin(1e-12));
}

TEST_CASE("sequence features need a full cycle") {
  const auto rec = record_from(std::vector<double>(128, 0.0));
  const auto half = waveform::window_at_index(rec, 0, 0.5);
  const std::vector<int> ids = {142, 143, 144};
  const auto vec = features::extract(half, ids);
  CHECK_FALSE(vec[0].at(142).defined);
  const auto full = waveform::window_at_index(rec, 0, 1.0);
  CHECK(features::extract(full, ids)[0].at(142).defined);
}

TEST_CASE("fuzzy_inputs over a single window equals that window's coefficients") {
  waveform::EventSpec spec;
  spec.kind = waveform::EventKind::fault;
  spec.fault_type = waveform::FaultType::ag;
  spec.off_nominal_hz = 72.0;
  const auto rec = waveform::synthesize(spec, 7680, 12.0 / 60.0, 3);
  const auto win = waveform::window_at_index(rec, 700, 0.5);
  const std::array<waveform::SampleWindow, 1> one = {win};
  const auto fi = features::fuzzy_inputs(one);
  for (int p = 0; p < 3; ++p) {
    const auto m = ar::ar_fit(win.phases[static_cast<std::size_t>(p)], 10);
    CHECK(fi.max_a2[static_cast<std::size_t>(p)] == m.coeffs[1]);
    CHECK(fi.max_a5[static_cast<std::size_t>(p)] == m.coeffs[4]);
  }
}

TEST_CASE("fuzzy_inputs takes elementwise maxima across windows") {
  const auto rec = record_from([] {
    std::vector<double> x(256);
    Rng rng(41);
    for (auto& v : x) v = rng.uniform(-1.0, 1.0);
    return x;
  }());
  const std::array<waveform::SampleWindow, 2> wins = {waveform::window_at_index(rec, 0, 0.5),
                                                      waveform::window_at_index(rec, 64, 0.5)};
  const auto fi = features::fuzzy_inputs(wins);
  for (int p = 0; p < 3; ++p) {
    const auto m0 = ar::ar_fit(wins[0].phases[static_cast<std::size_t>(p)], 10);
    const auto m1 = ar::ar_fit(wins[1].phases[static_cast<std::size_t>(p)], 10);
    CHECK(fi.max_a2[static_cast<std::size_t>(p)] == std::max(m0.coeffs[1], m1.coeffs[1]));
    CHECK(fi.max_a5[static_cast<std::size_t>(p)] == std::max(m0.coeffs[4], m1.coeffs[4]));
  }
}

TEST_CASE("fault-segment coefficients escape the steady envelope on the faulted phase") {
  // On this generator the faulted-phase extremes move hard negative (the
  // pole-rich fault window's characteristic polynomial alternates sign), so
  // the corpus statistic is envelope escape: the fault frame's A2/A5
  // extremes leave the steady frame's [min, max] band. This is exactly the
  // adaptive re-tune condition, which a fault must trip.
  std::size_t escaped = 0, total = 0;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    waveform::EventSpec spec;
    spec.kind = waveform::EventKind::fault;
    spec.fault_type = waveform::FaultType::ag;
    spec.off_nominal_hz = seed % 2 == 0 ? 48.0 : 72.0;
    const double duration = 12.0 / 60.0;
    const auto rec = waveform::synthesize(spec, 7680, duration, 1000 + seed);
    const std::size_t onset = waveform::synth_event_sample(7680, duration);
    const auto frame_of = [&](std::size_t start) {
      std::vector<std::array<double, 2>> frame;
      for (int w = 0; w < 4; ++w) {
        const auto win = waveform::window_at_index(rec, start + static_cast<std::size_t>(w) * 64, 0.5);
        const auto m = ar::ar_fit(win.phases[0], 10);
        frame.push_back({m.coeffs[1], m.coeffs[4]});
      }
      return frame;
    };
    const auto steady_frame = frame_of(64);
    const auto fault_frame = frame_of(onset);
    fuzzy::AdaptiveState state;
    auto [boot, after_steady] = fuzzy::adaptive_check(state, steady_frame);
    auto [retune, after_fault] = fuzzy::adaptive_check(after_steady, fault_frame);
    (void)boot;
    (void)after_fault;
    ++total;
    if (retune) ++escaped;
  }
  CHECK(static_cast<double>(escaped) / static_cast<double>(total) >= 0.95);
}
