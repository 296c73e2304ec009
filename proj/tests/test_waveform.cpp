#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "oracles.hpp"
#include "relayar/waveform.hpp"

using namespace relayar;
using waveform::EventKind;
using waveform::EventSpec;
using waveform::FaultType;
using waveform::Record3Ph;
using Catch::Approx;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "relayar-tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

Record3Ph steady_record(double fs, double f0, std::size_t n, double amp = 1.0) {
  Record3Ph rec;
  rec.fs = fs;
  rec.f0 = f0;
  rec.samples_a.resize(n);
  rec.samples_b.resize(n);
  rec.samples_c.resize(n);
  const double w = 2.0 * std::numbers::pi * f0 / fs;
  for (std::size_t i = 0; i < n; ++i) {
    rec.samples_a[i] = amp * std::sin(w * static_cast<double>(i));
    rec.samples_b[i] = amp * std::sin(w * static_cast<double>(i) - 2.0 * std::numbers::pi / 3.0);
    rec.samples_c[i] = amp * std::sin(w * static_cast<double>(i) + 2.0 * std::numbers::pi / 3.0);
  }
  return rec;
}

double steady_state_peak(std::span<const double> x, std::size_t tail) {
  double peak = 0.0;
  for (std::size_t i = x.size() - tail; i < x.size(); ++i) peak = std::max(peak, std::fabs(x[i]));
  return peak;
}

}  // namespace

TEST_CASE("load_csv infers fs from the sample interval") {
  const auto path = temp_file("ok.csv");
  {
    std::ofstream out(path);
    out << "t,ia,ib,ic\n";
    for (int i = 0; i < 4; ++i)
      out << strings::g17(i / 7680.0) << "," << i << "," << -i << "," << 2 * i << "\n";
  }
  const auto rec = waveform::load_csv(path.string());
  CHECK(rec.size() == 4);
  CHECK(rec.fs == Approx(7680.0).epsilon(1e-9));
  CHECK(rec.samples_c[3] == 6.0);
}

TEST_CASE("load_csv rejects jittered sampling") {
  const auto path = temp_file("jitter.csv");
  {
    std::ofstream out(path);
    out << "t,ia,ib,ic\n";
    double t = 0.0;
    for (int i = 0; i < 16; ++i) {
      out << strings::g17(t) << ",0.1,0.2,0.3\n";
      t += (i % 2 == 0) ? 1.0005 / 7680.0 : 0.9995 / 7680.0;  // 0.05% jitter
    }
  }
  CHECK_THROWS_WITH(waveform::load_csv(path.string()), Catch::Matchers::ContainsSubstring("non-uniform"));
}

TEST_CASE("load_csv names the missing column") {
  const auto path = temp_file("missing.csv");
  {
    std::ofstream out(path);
    out << "t,ia,ib\n0,1,2\n";
  }
  CHECK_THROWS_WITH(waveform::load_csv(path.string()), Catch::Matchers::ContainsSubstring("ic"));
}

TEST_CASE("record CSV write/read round-trips") {
  const auto rec = steady_record(7680, 60, 128, 3.7);
  const auto path = temp_file("roundtrip.csv");
  waveform::write_csv(rec, path.string());
  const auto back = waveform::load_csv(path.string());
  REQUIRE(back.size() == rec.size());
  CHECK(back.fs == Approx(rec.fs).epsilon(1e-9));
  for (std::size_t i = 0; i < rec.size(); ++i) CHECK(back.samples_b[i] == rec.samples_b[i]);
}

TEST_CASE("synthesize: steady event leaves the pre-event model untouched") {
  EventSpec spec;
  spec.kind = EventKind::steady;
  const auto rec = waveform::synthesize(spec, 7680, 10.0 / 60.0, 9);
  const std::size_t onset = waveform::synth_event_sample(7680, 10.0 / 60.0);
  const double w = 2.0 * std::numbers::pi * 60.0;
  const double phi0 = -w * (static_cast<double>(onset) / 7680.0);
  for (std::size_t i = 0; i < rec.size(); ++i) {
    const double t = static_cast<double>(i) / 7680.0;
    CHECK(rec.samples_a[i] == Approx(std::cos(w * t + phi0)).margin(1e-12));
  }
}

TEST_CASE("synthesize: single-phase fault leaves the other phases bit-identical to steady") {
  EventSpec fault;
  fault.kind = EventKind::fault;
  fault.fault_type = FaultType::ag;
  fault.off_nominal_hz = 72.0;
  EventSpec steady;
  steady.kind = EventKind::steady;
  const auto f = waveform::synthesize(fault, 7680, 12.0 / 60.0, 1234);
  const auto s = waveform::synthesize(steady, 7680, 12.0 / 60.0, 1234);
  REQUIRE(f.size() == s.size());
  bool a_differs = false;
  for (std::size_t i = 0; i < f.size(); ++i) {
    CHECK(f.samples_b[i] == s.samples_b[i]);
    CHECK(f.samples_c[i] == s.samples_c[i]);
    a_differs |= f.samples_a[i] != s.samples_a[i];
  }
  CHECK(a_differs);
}

TEST_CASE("synthesize is pure in (spec, fs, duration, seed)") {
  EventSpec spec;
  spec.kind = EventKind::capacitor_switch;
  const auto a = waveform::synthesize(spec, 3840, 12.0 / 60.0, 77);
  const auto b = waveform::synthesize(spec, 3840, 12.0 / 60.0, 77);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.samples_a[i] == b.samples_a[i]);
    CHECK(a.samples_b[i] == b.samples_b[i]);
    CHECK(a.samples_c[i] == b.samples_c[i]);
  }
}

TEST_CASE("synthesize rejects short durations and bad specs") {
  EventSpec spec;
  CHECK_THROWS(waveform::synthesize(spec, 7680, 6.0 / 60.0, 1));
  spec.inception_angle_deg = 360.0;
  CHECK_THROWS(waveform::synthesize(spec, 7680, 12.0 / 60.0, 1));
  spec.inception_angle_deg = 0.0;
  spec.off_nominal_hz = 80.0;
  CHECK_THROWS(waveform::synthesize(spec, 7680, 12.0 / 60.0, 1));
}

TEST_CASE("butterworth_lp passes 60 Hz and stops 3000 Hz at fc=480") {
  // analytic magnitudes confirm the tolerances the assertions use
  CHECK(oracle::butterworth_magnitude(5, 480, 60) > 0.995);
  CHECK(oracle::butterworth_magnitude(5, 480, 3000) < 0.01);

  auto pass = steady_record(7680, 60, 7680);  // 1 s
  const auto filtered = waveform::butterworth_lp(pass, 5, 480);
  CHECK(steady_state_peak(filtered.samples_a, 512) == Approx(1.0).epsilon(0.005));

  Record3Ph tone;
  tone.fs = 7680;
  tone.f0 = 60;
  tone.samples_a.resize(7680);
  tone.samples_b = tone.samples_a;
  tone.samples_c = tone.samples_a;
  for (std::size_t i = 0; i < tone.samples_a.size(); ++i) {
    const double v = std::sin(2.0 * std::numbers::pi * 3000.0 * static_cast<double>(i) / 7680.0);
    tone.samples_a[i] = v;
    tone.samples_b[i] = v;
    tone.samples_c[i] = v;
  }
  const auto stopped = waveform::butterworth_lp(tone, 5, 480);
  CHECK(steady_state_peak(stopped.samples_a, 512) < 0.01);
}

TEST_CASE("butterworth_lp has unity dc gain and zero maps to zero") {
  Record3Ph dc;
  dc.fs = 7680;
  dc.f0 = 60;
  dc.samples_a.assign(4096, 1.0);
  dc.samples_b.assign(4096, 0.0);
  dc.samples_c.assign(4096, 1.0);
  const auto out = waveform::butterworth_lp(dc, 5, 480);
  CHECK(out.samples_a.back() == Approx(1.0).margin(1e-6));
  for (double v : out.samples_b) CHECK(v == 0.0);
  CHECK_THROWS(waveform::butterworth_lp(dc, 5, 4000.0));
}

TEST_CASE("butterworth_lp is linear") {
  const auto x = steady_record(7680, 60, 1024, 1.0);
  auto y = steady_record(7680, 60, 1024, 0.5);
  Rng rng(5);
  for (auto* arr : {&y.samples_a, &y.samples_b, &y.samples_c})
    for (auto& v : *arr) v += rng.gaussian(0.0, 0.3);
  const double a = 1.7, b = -0.4;
  Record3Ph mix = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mix.samples_a[i] = a * x.samples_a[i] + b * y.samples_a[i];
    mix.samples_b[i] = a * x.samples_b[i] + b * y.samples_b[i];
    mix.samples_c[i] = a * x.samples_c[i] + b * y.samples_c[i];
  }
  const auto fx = waveform::butterworth_lp(x, 5, 480);
  const auto fy = waveform::butterworth_lp(y, 5, 480);
  const auto fmix = waveform::butterworth_lp(mix, 5, 480);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double expect = a * fx.samples_a[i] + b * fy.samples_a[i];
    CHECK(fmix.samples_a[i] == Approx(expect).margin(1e-9 * std::max(1.0, std::fabs(expect))));
  }
}

TEST_CASE("add_noise hits the requested SNR") {
  const auto rec = steady_record(7680, 60, 1280);  // 10 cycles
  const auto noisy = waveform::add_noise(rec, 20.0, 99);
  double p_sig = 0, p_noise = 0;
  for (std::size_t i = 0; i < rec.size(); ++i) {
    p_sig += rec.samples_a[i] * rec.samples_a[i];
    const double n = noisy.samples_a[i] - rec.samples_a[i];
    p_noise += n * n;
  }
  const double snr = 10.0 * std::log10(p_sig / p_noise);
  CHECK(snr == Approx(20.0).margin(0.5));
}

TEST_CASE("add_noise SNR converges with window length") {
  const auto rec = steady_record(7680, 60, 12800);  // 100 cycles
  const auto noisy = waveform::add_noise(rec, 30.0, 7);
  for (int p = 0; p < 3; ++p) {
    double p_sig = 0, p_noise = 0;
    for (std::size_t i = 0; i < rec.size(); ++i) {
      p_sig += rec.phase(p)[i] * rec.phase(p)[i];
      const double n = noisy.phase(p)[i] - rec.phase(p)[i];
      p_noise += n * n;
    }
    CHECK(10.0 * std::log10(p_sig / p_noise) == Approx(30.0).margin(0.1));
  }
}

TEST_CASE("add_noise identity and error cases") {
  const auto rec = steady_record(7680, 60, 256);
  const auto same = waveform::add_noise(rec, std::numeric_limits<double>::infinity(), 1);
  for (std::size_t i = 0; i < rec.size(); ++i) CHECK(same.samples_a[i] == rec.samples_a[i]);

  Record3Ph dead = rec;
  dead.samples_b.assign(rec.size(), 0.0);
  CHECK_THROWS_WITH(waveform::add_noise(dead, 20.0, 1), Catch::Matchers::ContainsSubstring("zero-power"));
}

TEST_CASE("apply_sync_delay shifts by rounded samples") {
  const auto rec = steady_record(7680, 60, 512);
  const auto delayed = waveform::apply_sync_delay(rec, 1.0);  // 7.68 samples -> 8
  CHECK(delayed.size() == rec.size() - 8);
  for (std::size_t i = 0; i < delayed.size(); ++i) CHECK(delayed.samples_a[i] == rec.samples_a[i + 8]);

  const auto zero = waveform::apply_sync_delay(rec, 0.0);
  CHECK(zero.size() == rec.size());
  for (std::size_t i = 0; i < rec.size(); ++i) CHECK(zero.samples_c[i] == rec.samples_c[i]);

  CHECK_THROWS(waveform::apply_sync_delay(rec, 1000.0));
}

TEST_CASE("window_at rounds the cycle count to samples") {
  const auto rec = steady_record(7680, 60, 1024);
  const auto win = waveform::window_at(rec, 0.0, 0.5);
  CHECK(win.size() == 64);  // 0.5 cycle at 7680/60

  const auto rec2 = steady_record(1920, 60, 256);
  CHECK(waveform::window_at(rec2, 0.0, 1.0).size() == 32);

  CHECK_THROWS(waveform::window_at(rec, 1.0, 0.5));  // past record end
}

TEST_CASE("adjacent windows tile the record exactly") {
  const auto rec = steady_record(7680, 60, 512);
  const auto w0 = waveform::window_at_index(rec, 0, 0.5);
  const auto w1 = waveform::window_at_index(rec, 64, 0.5);
  for (std::size_t i = 0; i < 64; ++i) {
    CHECK(w0.phases[0][i] == rec.samples_a[i]);
    CHECK(w1.phases[0][i] == rec.samples_a[64 + i]);
  }
}

TEST_CASE("ct saturation soft-clips at the configured level") {
  EventSpec spec;
  spec.kind = EventKind::fault;
  spec.fault_type = FaultType::abcg;
  spec.ct_sat_level = 0.8;
  const auto rec = waveform::synthesize(spec, 7680, 12.0 / 60.0, 4);
  for (double v : rec.samples_a) CHECK(std::fabs(v) <= 0.8 + 1e-12);
}
