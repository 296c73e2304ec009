#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "relayar/rng.hpp"
#include "relayar/strings.hpp"

namespace relayar::waveform {

/// Uniformly sampled 3-phase current record. Immutable after construction.
struct Record3Ph {
  std::vector<double> samples_a;
  std::vector<double> samples_b;
  std::vector<double> samples_c;
  double fs = 0.0;  ///< sampling frequency, Hz
  double f0 = 60.0; ///< nominal system frequency, Hz
  double t0 = 0.0;  ///< start time, s

  std::size_t size() const { return samples_a.size(); }

  std::span<const double> phase(int idx) const {
    switch (idx) {
      case 0: return samples_a;
      case 1: return samples_b;
      case 2: return samples_c;
      default: throw std::out_of_range("Record3Ph::phase: index must be 0..2");
    }
  }

  void validate() const {
    if (samples_a.size() != samples_b.size() || samples_a.size() != samples_c.size())
      throw std::invalid_argument("Record3Ph: phase arrays must have equal length");
    if (samples_a.size() < 2) throw std::invalid_argument("Record3Ph: need at least 2 samples");
    if (!(fs > 2.0 * f0)) throw std::invalid_argument("Record3Ph: fs must exceed 2*f0");
  }
};

/// Fixed-length view into a Record3Ph. The record must outlive the window.
struct SampleWindow {
  std::array<std::span<const double>, 3> phases;
  double fs = 0.0;
  double f0 = 60.0;
  double window_cycles = 0.0;
  std::size_t start_index = 0;

  std::size_t size() const { return phases[0].size(); }
};

enum class EventKind { steady, fault, capacitor_switch, load_switch, high_impedance_fault, power_swing };
enum class FaultType { ag, bg, cg, ab, bc, ca, abg, bcg, cag, abcg };
enum class ResistanceClass { low, mid, high };
enum class TerminalEnd { wind_farm, grid };

inline const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::steady: return "steady";
    case EventKind::fault: return "fault";
    case EventKind::capacitor_switch: return "capacitor_switch";
    case EventKind::load_switch: return "load_switch";
    case EventKind::high_impedance_fault: return "high_impedance_fault";
    case EventKind::power_swing: return "power_swing";
  }
  return "?";
}

inline EventKind parse_event_kind(std::string_view s) {
  if (s == "steady") return EventKind::steady;
  if (s == "fault") return EventKind::fault;
  if (s == "capacitor_switch") return EventKind::capacitor_switch;
  if (s == "load_switch") return EventKind::load_switch;
  if (s == "high_impedance_fault") return EventKind::high_impedance_fault;
  if (s == "power_swing") return EventKind::power_swing;
  throw std::invalid_argument("unknown event kind: " + std::string(s));
}

inline const char* to_string(FaultType t) {
  static constexpr const char* names[] = {"ag", "bg", "cg", "ab", "bc", "ca", "abg", "bcg", "cag", "abcg"};
  return names[static_cast<int>(t)];
}

inline FaultType parse_fault_type(std::string_view s) {
  static constexpr const char* names[] = {"ag", "bg", "cg", "ab", "bc", "ca", "abg", "bcg", "cag", "abcg"};
  for (int i = 0; i < 10; ++i)
    if (s == names[i]) return static_cast<FaultType>(i);
  throw std::invalid_argument("unknown fault type: " + std::string(s));
}

inline const char* to_string(ResistanceClass r) {
  switch (r) {
    case ResistanceClass::low: return "low";
    case ResistanceClass::mid: return "mid";
    case ResistanceClass::high: return "high";
  }
  return "?";
}

inline ResistanceClass parse_resistance_class(std::string_view s) {
  if (s == "low") return ResistanceClass::low;
  if (s == "mid") return ResistanceClass::mid;
  if (s == "high") return ResistanceClass::high;
  throw std::invalid_argument("unknown resistance class: " + std::string(s));
}

/// Which phases a fault type disturbs.
inline std::array<bool, 3> affected_phases(FaultType t) {
  switch (t) {
    case FaultType::ag: return {true, false, false};
    case FaultType::bg: return {false, true, false};
    case FaultType::cg: return {false, false, true};
    case FaultType::ab: case FaultType::abg: return {true, true, false};
    case FaultType::bc: case FaultType::bcg: return {false, true, true};
    case FaultType::ca: case FaultType::cag: return {true, false, true};
    case FaultType::abcg: return {true, true, true};
  }
  return {false, false, false};
}

inline bool ground_involved(FaultType t) {
  switch (t) {
    case FaultType::ab: case FaultType::bc: case FaultType::ca: return false;
    default: return true;
  }
}

/// One scenario cell: everything the synthesizer needs to realize an event.
struct EventSpec {
  EventKind kind = EventKind::steady;
  FaultType fault_type = FaultType::ag;
  double inception_angle_deg = 0.0;          ///< phase-a angle at event onset
  ResistanceClass resistance = ResistanceClass::low;
  double off_nominal_hz = 60.0;              ///< slip-driven machine frequency, 42..78
  double dc_decay_tau = 0.02;                ///< s
  std::optional<double> snr_db;              ///< additive noise; absent or +inf = clean
  std::optional<double> ct_sat_level;        ///< per-unit soft clip level
  std::optional<double> sync_delay_ms;       ///< applied to the grid-end record
  int location = 5;                          ///< scenario grid slot, 1..8
  int transformer = 0;                       ///< 0 = Y-Y, 1 = Y-D

  void validate() const {
    if (inception_angle_deg < 0.0 || inception_angle_deg >= 360.0)
      throw std::invalid_argument("EventSpec: inception_angle must be in [0,360)");
    if (off_nominal_hz < 42.0 || off_nominal_hz > 78.0)
      throw std::invalid_argument("EventSpec: off_nominal_hz must be in [42,78]");
    if (!(dc_decay_tau > 0.0)) throw std::invalid_argument("EventSpec: dc_decay_tau must be positive");
    if (location < 1 || location > 8) throw std::invalid_argument("EventSpec: location must be 1..8");
  }
};

inline std::size_t window_length(double cycles, double fs, double f0) {
  return static_cast<std::size_t>(std::llround(cycles * fs / f0));
}

// ---------------------------------------------------------------------------
// CSV interchange: header `t,ia,ib,ic`, seconds and amperes, LF line endings.
// ---------------------------------------------------------------------------

inline Record3Ph load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("load_csv: empty file " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  {
    auto cols = strings::split(line, ',');
    const char* expect[] = {"t", "ia", "ib", "ic"};
    if (cols.size() != 4) throw std::runtime_error("load_csv: parse error at line 1: expected header t,ia,ib,ic");
    for (int i = 0; i < 4; ++i)
      if (strings::trim(cols[i]) != expect[i])
        throw std::runtime_error(std::string("load_csv: parse error at line 1: missing column \"") + expect[i] + "\"");
  }
  std::vector<double> t, a, b, c;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (strings::trim(line).empty()) continue;
    auto cols = strings::split(line, ',');
    if (cols.size() != 4)
      throw std::runtime_error("load_csv: parse error at line " + std::to_string(lineno) + ": expected 4 fields");
    std::array<double, 4> v{};
    for (int i = 0; i < 4; ++i) {
      auto d = strings::to_double(cols[i]);
      if (!d) throw std::runtime_error("load_csv: parse error at line " + std::to_string(lineno) + ": bad number");
      v[i] = *d;
    }
    t.push_back(v[0]); a.push_back(v[1]); b.push_back(v[2]); c.push_back(v[3]);
  }
  if (t.size() < 2) throw std::runtime_error("load_csv: fewer than 2 samples in " + path);
  // fs from the median sample interval; reject jitter beyond 0.01%.
  std::vector<double> dt(t.size() - 1);
  for (std::size_t i = 0; i + 1 < t.size(); ++i) dt[i] = t[i + 1] - t[i];
  std::vector<double> sorted = dt;
  std::sort(sorted.begin(), sorted.end());
  const double med = sorted[sorted.size() / 2];
  if (!(med > 0.0)) throw std::runtime_error("load_csv: non-monotone time column");
  for (std::size_t i = 0; i < dt.size(); ++i)
    if (std::abs(dt[i] - med) > 1e-4 * med)
      throw std::runtime_error("load_csv: non-uniform sampling at line " + std::to_string(i + 3) +
                               " (dt deviates more than 0.01% from median)");
  Record3Ph rec;
  rec.samples_a = std::move(a);
  rec.samples_b = std::move(b);
  rec.samples_c = std::move(c);
  rec.fs = 1.0 / med;
  rec.t0 = t.front();
  return rec;
}

inline void write_csv(const Record3Ph& rec, const std::string& path) {
  std::ofstream out(path, std::ios::binary);  // binary keeps LF endings everywhere
  if (!out) throw std::runtime_error("write_csv: cannot open " + path);
  out << "t,ia,ib,ic\n";
  for (std::size_t i = 0; i < rec.size(); ++i) {
    out << strings::g17(rec.t0 + static_cast<double>(i) / rec.fs) << ','
        << strings::g17(rec.samples_a[i]) << ','
        << strings::g17(rec.samples_b[i]) << ','
        << strings::g17(rec.samples_c[i]) << '\n';
  }
  if (!out) throw std::runtime_error("write_csv: write failed for " + path);
}

// ---------------------------------------------------------------------------
// Synthesis
// ---------------------------------------------------------------------------

namespace detail {

struct FaultMix {
  double step;       // relative amplitude step of the fundamental
  double off;        // off-nominal tone amplitude
  double h3, h5;     // 3rd/5th harmonic amplitudes
  double dc;         // decaying dc amplitude
  double tau_scale;  // stretches EventSpec::dc_decay_tau
  double ground;     // common-mode amplitude for grounded faults
};

/// Locations 1..3 are reverse-external, 4..5 internal, 6..8 forward-external
/// relative to the protected line's relay.
inline int region_of_location(int loc) { return loc <= 3 ? 2 : (loc <= 5 ? 0 : 1); }

inline double resistance_scale(ResistanceClass r) {
  switch (r) {
    case ResistanceClass::low: return 1.0;
    case ResistanceClass::mid: return 0.6;
    case ResistanceClass::high: return 0.3;
  }
  return 1.0;
}

/// Region-keyed component mix. The fault-current pole structure differs per
/// region (which harmonic and slip components exist, and the dc time
/// constant), not just amplitude ratios: lag-10 coefficients are
/// scale-invariant, so the downstream region classifier keys on spectra;
/// within-region location rank nudges the mix so locations stay separable.
inline FaultMix fault_mix(const EventSpec& spec, TerminalEnd end) {
  const int region = region_of_location(spec.location);
  FaultMix m{};
  switch (region) {
    case 0: m = {1.25, 0.45, 0.20, 0.15, 0.60, 0.6, 0.20}; break;  // internal: slip + both harmonics, fast dc
    case 1: m = {0.70, 0.22, 0.30, 0.00, 0.30, 1.5, 0.12}; break;  // forward external: 3rd harmonic only
    case 2: m = {0.45, 0.03, 0.00, 0.28, 0.18, 3.0, 0.08}; break;  // reverse external: 5th harmonic only
  }
  const int rank = region == 0 ? spec.location - 4 : (region == 1 ? spec.location - 6 : spec.location - 1);
  m.step *= 1.0 - 0.10 * rank;
  m.off *= 1.0 - 0.08 * rank;
  m.tau_scale *= 1.0 + 0.25 * rank;
  const double r = resistance_scale(spec.resistance);
  m.step *= r;
  m.off *= r;
  m.dc *= r;
  const double harmonic_boost = 1.3 - 0.3 * r;  // weaker faults, relatively richer harmonics
  m.h3 *= harmonic_boost;
  m.h5 *= harmonic_boost;
  if (spec.transformer == 1) m.ground *= 0.5;  // delta winding chokes zero sequence
  if (end == TerminalEnd::grid) {
    const double s = region == 2 ? 1.5 : (region == 1 ? 0.8 : 1.1);
    m.step *= s;
    m.off *= s;
    m.dc *= s;
  }
  return m;
}

inline double smoothstep01(double u) {
  u = std::clamp(u, 0.0, 1.0);
  return u * u * (3.0 - 2.0 * u);
}

}  // namespace detail

/// Sample index at which a synthesized event begins.
inline std::size_t synth_event_sample(double fs, double duration_s) {
  return static_cast<std::size_t>(std::llround(duration_s * fs)) / 2;
}

Record3Ph add_noise(const Record3Ph& rec, double snr_db, std::uint64_t seed);
Record3Ph apply_sync_delay(const Record3Ph& rec, double delay_ms);

/// Phenomenological 3-phase event synthesizer. Pre-event: balanced unit
/// sinusoids at f0 with phase-a angle equal to inception_angle at onset.
/// Post-event components depend on the event kind; unaffected phases of a
/// fault are bit-identical to the steady synthesis for the same seed.
inline Record3Ph synthesize(const EventSpec& spec, double fs, double duration_s, std::uint64_t seed,
                            double f0 = 60.0, TerminalEnd end = TerminalEnd::wind_farm) {
  spec.validate();
  if (!(fs > 2.0 * f0)) throw std::invalid_argument("synthesize: fs must exceed 2*f0");
  if (duration_s < 8.0 / f0)
    throw std::invalid_argument("synthesize: duration must cover 4 pre-event + 4 post-event cycles");
  const auto n = static_cast<std::size_t>(std::llround(duration_s * fs));
  const std::size_t onset = n / 2;
  const double te = static_cast<double>(onset) / fs;
  const double w0 = 2.0 * std::numbers::pi * f0;
  const double phi0 = spec.inception_angle_deg * std::numbers::pi / 180.0 - w0 * te;
  const std::array<double, 3> shift = {0.0, -2.0 * std::numbers::pi / 3.0, 2.0 * std::numbers::pi / 3.0};

  Record3Ph rec;
  rec.fs = fs;
  rec.f0 = f0;
  rec.t0 = 0.0;
  rec.samples_a.resize(n);
  rec.samples_b.resize(n);
  rec.samples_c.resize(n);
  std::array<std::vector<double>*, 3> ph = {&rec.samples_a, &rec.samples_b, &rec.samples_c};
  for (int p = 0; p < 3; ++p)
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / fs;
      (*ph[p])[i] = std::cos(w0 * t + phi0 + shift[p]);
    }

  Rng root(seed_combine(seed, 0xE0D0 + static_cast<std::uint64_t>(end)));
  const auto jitter = [](Rng& r) { return 1.0 + 0.12 * (2.0 * r.uniform() - 1.0); };

  switch (spec.kind) {
    case EventKind::steady:
      break;
    case EventKind::fault: {
      const auto mix = detail::fault_mix(spec, end);
      const auto hit = affected_phases(spec.fault_type);
      const bool grounded = ground_involved(spec.fault_type);
      Rng shared = root.substream(11);
      const double theta_g = shared.uniform(0.0, 2.0 * std::numbers::pi);
      const double theta_g2 = shared.uniform(0.0, 2.0 * std::numbers::pi);
      // Ungrounded phase pairs carry the loop current: equal components with
      // opposite signs, drawn once from the shared stream.
      double pair_off = 0, pair_h3 = 0, pair_h5 = 0, pair_dc = 0, pair_to = 0, pair_t3 = 0, pair_t5 = 0;
      if (!grounded) {
        pair_off = mix.off * jitter(shared);
        pair_h3 = mix.h3 * jitter(shared);
        pair_h5 = mix.h5 * jitter(shared);
        pair_dc = mix.dc * jitter(shared);
        pair_to = shared.uniform(0.0, 2.0 * std::numbers::pi);
        pair_t3 = shared.uniform(0.0, 2.0 * std::numbers::pi);
        pair_t5 = shared.uniform(0.0, 2.0 * std::numbers::pi);
      }
      int pair_slot = 0;
      for (int p = 0; p < 3; ++p) {
        if (!hit[p]) continue;
        Rng prng = root.substream(100 + static_cast<std::uint64_t>(p));
        double amp_step = mix.step * jitter(prng);
        double a_off, a_h3, a_h5, a_dc, th_off, th_3, th_5;
        double sign = 1.0;
        if (grounded) {
          a_off = mix.off * jitter(prng);
          a_h3 = mix.h3 * jitter(prng);
          a_h5 = mix.h5 * jitter(prng);
          a_dc = mix.dc * jitter(prng);
          th_off = prng.uniform(0.0, 2.0 * std::numbers::pi);
          th_3 = prng.uniform(0.0, 2.0 * std::numbers::pi);
          th_5 = prng.uniform(0.0, 2.0 * std::numbers::pi);
          if (prng.uniform() < 0.5) a_dc = -a_dc;
        } else {
          a_off = pair_off; a_h3 = pair_h3; a_h5 = pair_h5; a_dc = pair_dc;
          th_off = pair_to; th_3 = pair_t3; th_5 = pair_t5;
          sign = pair_slot++ == 0 ? 1.0 : -1.0;
        }
        const double tau = spec.dc_decay_tau * mix.tau_scale;
        const double w_off = 2.0 * std::numbers::pi * spec.off_nominal_hz;
        for (std::size_t i = onset; i < n; ++i) {
          const double t = static_cast<double>(i) / fs;
          const double dt = t - te;
          double v = (*ph[p])[i];
          v += (*ph[p])[i] * amp_step;
          v += sign * (a_off * std::cos(w_off * t + th_off) + a_h3 * std::cos(3.0 * w0 * t + th_3) +
                       a_h5 * std::cos(5.0 * w0 * t + th_5) + a_dc * std::exp(-dt / tau));
          // ground-return path: zero-sequence plus the even harmonic that the
          // dc-offset asymmetry induces
          if (grounded)
            v += mix.ground * (std::cos(w0 * t + theta_g) + 0.8 * std::cos(2.0 * w0 * t + theta_g2));
          (*ph[p])[i] = v;
        }
      }
      break;
    }
    case EventKind::high_impedance_fault: {
      // Erratic low-level conduction on phase a: amplitude re-drawn every 2 ms.
      Rng hrng = root.substream(7);
      const double th3 = hrng.uniform(0.0, 2.0 * std::numbers::pi);
      for (std::size_t i = onset; i < n; ++i) {
        const double t = static_cast<double>(i) / fs;
        const double dt = t - te;
        const auto segment = static_cast<std::uint64_t>(dt / 0.002);
        Rng seg(seed_combine(hrng.seed(), 0x417F + segment));
        const double u = 0.05 + 0.10 * seg.uniform();
        rec.samples_a[i] += rec.samples_a[i] * u + 0.03 * std::cos(3.0 * w0 * t + th3);
      }
      break;
    }
    case EventKind::capacitor_switch: {
      const double fb = root.uniform(650.0, 1150.0);
      const double tau_b = root.uniform(0.8, 1.6) / f0;
      for (int p = 0; p < 3; ++p) {
        Rng prng = root.substream(300 + static_cast<std::uint64_t>(p));
        const double amp = prng.uniform(0.4, 0.9);
        const double th = prng.uniform(0.0, 2.0 * std::numbers::pi);
        for (std::size_t i = onset; i < n; ++i) {
          const double dt = static_cast<double>(i) / fs - te;
          (*ph[p])[i] += amp * std::exp(-dt / tau_b) * std::cos(2.0 * std::numbers::pi * fb * dt + th);
        }
      }
      break;
    }
    case EventKind::load_switch: {
      const double delta = root.uniform(0.25, 0.5);
      const double ramp_cycles = root.uniform(1.5, 2.5);
      for (int p = 0; p < 3; ++p)
        for (std::size_t i = onset; i < n; ++i) {
          const double dt = static_cast<double>(i) / fs - te;
          (*ph[p])[i] *= 1.0 + delta * detail::smoothstep01(dt * f0 / ramp_cycles);
        }
      break;
    }
    case EventKind::power_swing: {
      const double depth = root.uniform(0.15, 0.3);
      const double f_sw = root.uniform(0.8, 3.0);
      const double k_phi = root.uniform(0.1, 0.3);
      for (int p = 0; p < 3; ++p)
        for (std::size_t i = onset; i < n; ++i) {
          const double t = static_cast<double>(i) / fs;
          const double s = std::sin(2.0 * std::numbers::pi * f_sw * (t - te));
          (*ph[p])[i] = (1.0 + depth * s) * std::cos(w0 * t + phi0 + shift[p] + k_phi * s);
        }
      break;
    }
  }

  if (spec.ct_sat_level) {
    const double level = *spec.ct_sat_level;
    if (!(level > 0.0)) throw std::invalid_argument("synthesize: ct_sat_level must be positive");
    for (int p = 0; p < 3; ++p)
      for (auto& v : *ph[p]) v = level * std::tanh(v / level);
  }
  if (spec.snr_db && std::isfinite(*spec.snr_db)) rec = add_noise(rec, *spec.snr_db, seed_combine(seed, 0x5EED));
  if (end == TerminalEnd::grid && spec.sync_delay_ms && *spec.sync_delay_ms != 0.0)
    rec = apply_sync_delay(rec, *spec.sync_delay_ms);
  return rec;
}

// ---------------------------------------------------------------------------
// Conditioning
// ---------------------------------------------------------------------------

namespace detail {

struct Biquad {
  double b0, b1, b2, a1, a2;  // y = b0 x + b1 x1 + b2 x2 - a1 y1 - a2 y2
};

/// Butterworth low-pass as cascaded second-order sections from the bilinear
/// transform; one first-order tail section for odd orders. Unity dc gain by
/// construction.
inline std::vector<Biquad> butterworth_sections(int order, double fc, double fs) {
  const double k = std::tan(std::numbers::pi * fc / fs);
  std::vector<Biquad> out;
  for (int i = 0; i < order / 2; ++i) {
    // analog pole pair at angle theta on the unit circle, left half plane
    const double theta = std::numbers::pi * (2.0 * i + order + 1.0) / (2.0 * order);
    const double c = std::cos(theta);  // negative
    const double a0 = 1.0 - 2.0 * k * c + k * k;
    out.push_back({k * k / a0, 2.0 * k * k / a0, k * k / a0,
                   (-2.0 + 2.0 * k * k) / a0, (1.0 + 2.0 * k * c + k * k) / a0});
  }
  if (order % 2 == 1) {
    const double a0 = 1.0 + k;
    out.push_back({k / a0, k / a0, 0.0, (k - 1.0) / a0, 0.0});
  }
  return out;
}

inline void run_biquad(const Biquad& q, std::vector<double>& x) {
  double x1 = 0, x2 = 0, y1 = 0, y2 = 0;
  for (auto& v : x) {
    const double y = q.b0 * v + q.b1 * x1 + q.b2 * x2 - q.a1 * y1 - q.a2 * y2;
    x2 = x1; x1 = v;
    y2 = y1; y1 = y;
    v = y;
  }
}

}  // namespace detail

inline Record3Ph butterworth_lp(const Record3Ph& rec, int order, double fc_hz) {
  rec.validate();
  if (order < 1) throw std::invalid_argument("butterworth_lp: order must be >= 1");
  if (!(fc_hz > 0.0 && fc_hz < rec.fs / 2.0))
    throw std::invalid_argument("butterworth_lp: fc must be in (0, fs/2)");
  const auto sections = detail::butterworth_sections(order, fc_hz, rec.fs);
  Record3Ph out = rec;
  for (auto* arr : {&out.samples_a, &out.samples_b, &out.samples_c})
    for (const auto& q : sections) detail::run_biquad(q, *arr);
  return out;
}

/// Additive white Gaussian noise scaled per phase against that phase's
/// empirical power so the requested SNR holds per phase. +inf passes through.
inline Record3Ph add_noise(const Record3Ph& rec, double snr_db, std::uint64_t seed) {
  rec.validate();
  if (std::isinf(snr_db) && snr_db > 0) return rec;
  if (!std::isfinite(snr_db)) throw std::invalid_argument("add_noise: snr_db must be finite or +inf");
  Record3Ph out = rec;
  std::array<std::vector<double>*, 3> ph = {&out.samples_a, &out.samples_b, &out.samples_c};
  for (int p = 0; p < 3; ++p) {
    auto& x = *ph[p];
    double power = 0.0;
    for (double v : x) {
      if (!std::isfinite(v)) throw std::invalid_argument("add_noise: non-finite sample");
      power += v * v;
    }
    power /= static_cast<double>(x.size());
    if (power == 0.0) throw std::invalid_argument("add_noise: zero-power phase, SNR undefined");
    const double sigma = std::sqrt(power * std::pow(10.0, -snr_db / 10.0));
    Rng rng(seed_combine(seed, 0xA0 + static_cast<std::uint64_t>(p)));
    for (auto& v : x) v += rng.gaussian(0.0, sigma);
  }
  return out;
}

/// Shift by round(delay_ms*fs/1000) samples; the truncated head is dropped and
/// the record shortens. Fractional delays round to the nearest sample.
inline Record3Ph apply_sync_delay(const Record3Ph& rec, double delay_ms) {
  rec.validate();
  const auto shift = static_cast<long long>(std::llround(delay_ms * rec.fs / 1000.0));
  if (shift < 0) throw std::invalid_argument("apply_sync_delay: negative delay");
  if (static_cast<std::size_t>(shift) >= rec.size())
    throw std::invalid_argument("apply_sync_delay: delay exceeds record length");
  if (shift == 0) return rec;
  Record3Ph out;
  out.fs = rec.fs;
  out.f0 = rec.f0;
  out.t0 = rec.t0 + static_cast<double>(shift) / rec.fs;
  const auto s = static_cast<std::size_t>(shift);
  out.samples_a.assign(rec.samples_a.begin() + s, rec.samples_a.end());
  out.samples_b.assign(rec.samples_b.begin() + s, rec.samples_b.end());
  out.samples_c.assign(rec.samples_c.begin() + s, rec.samples_c.end());
  return out;
}

/// Window of round(cycles*fs/f0) samples starting at the sample nearest t.
/// Views into the record; no copying or resampling.
inline SampleWindow window_at(const Record3Ph& rec, double t, double cycles) {
  rec.validate();
  const auto w = window_length(cycles, rec.fs, rec.f0);
  const auto start_ll = std::llround((t - rec.t0) * rec.fs);
  if (start_ll < 0 || static_cast<std::size_t>(start_ll) + w > rec.size())
    throw std::out_of_range("window_at: window out of record range");
  const auto start = static_cast<std::size_t>(start_ll);
  SampleWindow win;
  win.phases = {std::span<const double>(rec.samples_a).subspan(start, w),
                std::span<const double>(rec.samples_b).subspan(start, w),
                std::span<const double>(rec.samples_c).subspan(start, w)};
  win.fs = rec.fs;
  win.f0 = rec.f0;
  win.window_cycles = cycles;
  win.start_index = start;
  return win;
}

/// Same contract as window_at but addressed by sample index.
inline SampleWindow window_at_index(const Record3Ph& rec, std::size_t start, double cycles) {
  return window_at(rec, rec.t0 + static_cast<double>(start) / rec.fs, cycles);
}

}  // namespace relayar::waveform
