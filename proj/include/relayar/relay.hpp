#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <fstream>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "relayar/strings.hpp"
#include "relayar/waveform.hpp"

namespace relayar::relay {

/// Protected-line constants; defaults are the 230 kV, 100 km line of the
/// studied system.
struct LineConstants {
  std::complex<double> z1{0.96, 31.18};
  std::complex<double> z0{33.6, 112.9};
  double length_km = 100.0;
  double kv = 230.0;
};

/// Zero-sequence compensation factor k0 = (Z0 - Z1) / (3 Z1).
inline std::complex<double> k0_factor(const LineConstants& line) {
  return (line.z0 - line.z1) / (3.0 * line.z1);
}

struct PhasorEstimate {
  std::complex<double> phasor;  ///< amplitude/phase of the fundamental, cosine convention
  double tracked_freq = 0.0;
  std::size_t window_len = 0;
};

/// DFT correlation at f_est over the last `window_len` samples. A unit-peak
/// tone at f_est over an exact cycle returns magnitude 1 and its phase at the
/// window start.
inline PhasorEstimate dft_phasor(std::span<const double> x, double fs, double f_est, std::size_t window_len) {
  if (!(f_est > 0.0) || !(fs > 0.0)) throw std::invalid_argument("dft_phasor: fs and f_est must be positive");
  if (window_len < 2 || x.size() < window_len)
    throw std::invalid_argument("dft_phasor: window shorter than one cycle of f_est");
  const std::size_t start = x.size() - window_len;
  std::complex<double> acc{0.0, 0.0};
  for (std::size_t m = 0; m < window_len; ++m) {
    const double ang = -2.0 * std::numbers::pi * f_est * static_cast<double>(m) / fs;
    acc += x[start + m] * std::complex<double>(std::cos(ang), std::sin(ang));
  }
  return {2.0 * acc / static_cast<double>(window_len), f_est, window_len};
}

/// One-cycle form: window length round(fs/f_est).
inline PhasorEstimate dft_phasor(std::span<const double> x, double fs, double f_est) {
  if (!(f_est > 0.0) || !(fs > 0.0)) throw std::invalid_argument("dft_phasor: fs and f_est must be positive");
  return dft_phasor(x, fs, f_est, static_cast<std::size_t>(std::llround(fs / f_est)));
}

struct FreqTrack {
  double freq_hz = 0.0;
  std::size_t window_len = 0;
};

/// DFT window length for a tracked frequency: round(fs/f) clamped to the
/// 22..38-sample range at 1920 Hz, scaled proportionally at other rates.
inline std::size_t window_len_for(double fs, double freq_hz) {
  const auto lo = static_cast<long long>(std::llround(22.0 * fs / 1920.0));
  const auto hi = static_cast<long long>(std::llround(38.0 * fs / 1920.0));
  const auto w = std::clamp(static_cast<long long>(std::llround(fs / freq_hz)), lo, hi);
  return static_cast<std::size_t>(w);
}

/// Zero-crossing frequency estimator with linear interpolation between the
/// bracketing samples; successive crossings are half periods. The estimate is
/// clamped to the 42..78 Hz slip band.
inline FreqTrack track_frequency(std::span<const double> x, double fs) {
  if (x.size() < 4) throw std::invalid_argument("track_frequency: record too short");
  std::vector<double> crossings;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    if (x[i] == 0.0 && x[i + 1] == 0.0) continue;
    if (x[i] == 0.0) {
      crossings.push_back(static_cast<double>(i));
    } else if (x[i] * x[i + 1] < 0.0) {
      crossings.push_back(static_cast<double>(i) + x[i] / (x[i] - x[i + 1]));
    }
  }
  if (crossings.size() < 2) throw std::invalid_argument("track_frequency: fewer than 2 zero crossings");
  const double mean_half = (crossings.back() - crossings.front()) / static_cast<double>(crossings.size() - 1);
  double f = fs / (2.0 * mean_half);
  f = std::clamp(f, 42.0, 78.0);
  return {f, window_len_for(fs, f)};
}

enum class Loop { ag, bg, cg, ab, bc, ca };

inline const char* to_string(Loop l) {
  static constexpr const char* names[] = {"AG", "BG", "CG", "AB", "BC", "CA"};
  return names[static_cast<int>(l)];
}

struct LoopImpedance {
  Loop loop = Loop::ag;
  std::complex<double> z{0.0, 0.0};
  bool determinate = true;
};

/// Six impedance loops from phasor sets: phase loops (Vx-Vy)/(Ix-Iy), ground
/// loops Vx/(Ix + k0*3I0). Denominators below `current_floor` flag the loop
/// indeterminate.
inline std::array<LoopImpedance, 6> loop_impedances(const std::array<std::complex<double>, 3>& v,
                                                    const std::array<std::complex<double>, 3>& i,
                                                    std::complex<double> k0, double current_floor = 1e-6) {
  const std::complex<double> residual = (i[0] + i[1] + i[2]) * k0;  // k0 * 3I0
  std::array<LoopImpedance, 6> out;
  for (int g = 0; g < 3; ++g) {
    const auto gg = static_cast<std::size_t>(g);
    out[gg].loop = static_cast<Loop>(g);
    const auto den = i[gg] + residual;
    if (std::abs(den) < current_floor) {
      out[gg].determinate = false;
    } else {
      out[gg].z = v[gg] / den;
    }
  }
  const int pairs[3][2] = {{0, 1}, {1, 2}, {2, 0}};
  for (int p = 0; p < 3; ++p) {
    auto& lp = out[static_cast<std::size_t>(3 + p)];
    lp.loop = static_cast<Loop>(3 + p);
    const auto x = static_cast<std::size_t>(pairs[p][0]);
    const auto y = static_cast<std::size_t>(pairs[p][1]);
    const auto den = i[x] - i[y];
    if (std::abs(den) < current_floor) {
      lp.determinate = false;
    } else {
      lp.z = (v[x] - v[y]) / den;
    }
  }
  return out;
}

/// Quadrilateral zone-1 characteristic: reactive reach x1, resistive reach r1,
/// and a directional angle band. Boundaries are inclusive.
struct ZoneQuad {
  double x1 = 0.0;
  double r1 = 0.0;
  double dir_lo_deg = 0.0;
  double dir_hi_deg = 180.0;

  void validate() const {
    if (!(x1 > 0.0) || !(r1 > 0.0)) throw std::invalid_argument("ZoneQuad: reaches must be positive");
  }
};

/// Default zone-1 quad for a reach fraction of the line: x1 = reach * Im(Z1),
/// r1 = 4 * reach * Re(Z1) (placeholder resistive blinder).
inline ZoneQuad default_zone1(const LineConstants& line, double reach_fraction = 0.8) {
  ZoneQuad q;
  q.x1 = reach_fraction * line.z1.imag();
  q.r1 = 4.0 * reach_fraction * line.z1.real();
  return q;
}

inline bool zone1_check(const LoopImpedance& z, const ZoneQuad& q) {
  q.validate();
  if (!z.determinate) throw std::invalid_argument("zone1_check: indeterminate loop");
  const double re = z.z.real(), im = z.z.imag();
  if (!(im > 0.0 && im <= q.x1)) return false;
  if (std::abs(re) > q.r1) return false;
  const double ang = std::arg(z.z) * 180.0 / std::numbers::pi;
  return ang >= q.dir_lo_deg && ang <= q.dir_hi_deg;
}

// ---------------------------------------------------------------------------
// Scenario construction and trajectories
// ---------------------------------------------------------------------------

struct PhasorSet {
  std::array<std::complex<double>, 3> v;
  std::array<std::complex<double>, 3> i;
};

/// Relay-side phasors for a metallic single-phase-to-ground fault at a
/// fraction of the line: the faulted-loop equation is inverted so the loop
/// impedance equals fraction * Z1 exactly. Healthy phases carry a balanced
/// load current against nominal voltage.
inline PhasorSet metallic_fault_phasors(const LineConstants& line, double fraction, Loop faulted,
                                        double fault_current_amp = 2.0) {
  if (faulted != Loop::ag && faulted != Loop::bg && faulted != Loop::cg)
    throw std::invalid_argument("metallic_fault_phasors: expects a ground loop");
  const int fp = static_cast<int>(faulted);
  const std::complex<double> k0 = k0_factor(line);
  PhasorSet ps;
  const double line_angle = std::arg(line.z1);
  for (int p = 0; p < 3; ++p) {
    const auto pp = static_cast<std::size_t>(p);
    const double ang = -2.0 * std::numbers::pi * p / 3.0;
    ps.v[pp] = std::polar(1.0, ang);
    ps.i[pp] = std::polar(0.1, ang - 0.3);  // light balanced load
  }
  const auto fpp = static_cast<std::size_t>(fp);
  ps.i[fpp] = std::polar(fault_current_amp, std::arg(ps.v[fpp]) - line_angle);
  const std::complex<double> residual = (ps.i[0] + ps.i[1] + ps.i[2]) * k0;
  ps.v[fpp] = fraction * line.z1 * (ps.i[fpp] + residual);
  return ps;
}

/// Time-domain realization of a phasor triple at a single frequency (cosine
/// convention, unit time origin).
inline waveform::Record3Ph phasor_record(const std::array<std::complex<double>, 3>& ph, double freq_hz, double fs,
                                         double duration_s, double f0 = 60.0) {
  const auto n = static_cast<std::size_t>(std::llround(duration_s * fs));
  waveform::Record3Ph rec;
  rec.fs = fs;
  rec.f0 = f0;
  rec.t0 = 0.0;
  rec.samples_a.resize(n);
  rec.samples_b.resize(n);
  rec.samples_c.resize(n);
  std::array<std::vector<double>*, 3> arr = {&rec.samples_a, &rec.samples_b, &rec.samples_c};
  for (int p = 0; p < 3; ++p)
    for (std::size_t m = 0; m < n; ++m) {
      const double t = static_cast<double>(m) / fs;
      (*arr[static_cast<std::size_t>(p)])[m] =
          std::abs(ph[static_cast<std::size_t>(p)]) *
          std::cos(2.0 * std::numbers::pi * freq_hz * t + std::arg(ph[static_cast<std::size_t>(p)]));
    }
  return rec;
}

struct TrajectoryConfig {
  double f0 = 60.0;
  bool tracked = false;     ///< false: fixed-f0 DFT window; true: frequency-tracked
  std::size_t stride = 4;   ///< samples between trajectory points
  ZoneQuad zone;
  LineConstants line;
};

struct TrajectoryPoint {
  double t = 0.0;
  Loop loop = Loop::ag;
  std::complex<double> z{0.0, 0.0};
  bool determinate = true;
  bool in_zone = false;
};

/// Sliding impedance-loop trajectory over paired voltage/current records.
/// Tracking re-estimates the frequency from the trailing three cycles of the
/// faulted-side current before each phasor window.
inline std::vector<TrajectoryPoint> impedance_trajectory(const waveform::Record3Ph& v,
                                                         const waveform::Record3Ph& i,
                                                         const TrajectoryConfig& cfg) {
  v.validate();
  i.validate();
  if (v.size() != i.size() || v.fs != i.fs)
    throw std::invalid_argument("impedance_trajectory: records must share sampling");
  const double fs = v.fs;
  const auto k0 = k0_factor(cfg.line);
  const auto track_span = static_cast<std::size_t>(std::llround(3.0 * fs / cfg.f0));
  const auto fixed_len = static_cast<std::size_t>(std::llround(fs / cfg.f0));
  const std::size_t warmup = std::max(track_span, fixed_len);
  std::vector<TrajectoryPoint> out;
  for (std::size_t end = warmup; end <= v.size(); end += cfg.stride) {
    double f_est = cfg.f0;
    std::size_t wlen = fixed_len;
    if (cfg.tracked) {
      const auto tr = track_frequency(std::span<const double>(i.samples_a).subspan(end - track_span, track_span), fs);
      f_est = tr.freq_hz;
      wlen = tr.window_len;
    }
    if (end < wlen) continue;
    std::array<std::complex<double>, 3> vp, ip;
    for (int p = 0; p < 3; ++p) {
      const auto pp = static_cast<std::size_t>(p);
      vp[pp] = dft_phasor(v.phase(p).first(end), fs, f_est, wlen).phasor;
      ip[pp] = dft_phasor(i.phase(p).first(end), fs, f_est, wlen).phasor;
    }
    const auto loops = loop_impedances(vp, ip, k0);
    const double t = static_cast<double>(end - 1) / fs;
    for (const auto& lp : loops) {
      TrajectoryPoint pt;
      pt.t = t;
      pt.loop = lp.loop;
      pt.z = lp.z;
      pt.determinate = lp.determinate;
      pt.in_zone = lp.determinate && zone1_check(lp, cfg.zone);
      out.push_back(pt);
    }
  }
  return out;
}

inline void write_trajectory_csv(std::span<const TrajectoryPoint> traj, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_trajectory_csv: cannot open " + path);
  out << "t,loop,re_z,im_z,in_zone\n";
  for (const auto& pt : traj) {
    out << strings::g17(pt.t) << ',' << to_string(pt.loop) << ',' << strings::g17(pt.z.real()) << ','
        << strings::g17(pt.z.imag()) << ',' << (pt.in_zone ? 1 : 0) << '\n';
  }
}

}  // namespace relayar::relay
