#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "graphcpd/errors.hpp"
#include "graphcpd/family.hpp"
#include "graphcpd/stream.hpp"
#include "graphcpd/subspace.hpp"

namespace graphcpd {

enum class Windowing { Disjoint, Sliding };

inline const char* windowing_name(Windowing w) {
  return w == Windowing::Disjoint ? "disjoint" : "sliding";
}

/// Everything the CUSUM detector needs: the nominal subspace u0, the
/// post-change family, the correction parameter c, the alarm threshold eta
/// (may be +inf to never alarm), the subspace dimension k, the block size b,
/// and how consecutive samples are grouped into blocks.
struct DetectorConfig {
  SubspaceFamily family;
  Subspace u0;
  double c = 0.0;
  double eta = std::numeric_limits<double>::infinity();
  int k = 1;
  int b = 1;
  Windowing windowing = Windowing::Disjoint;

  void validate() const {
    if (k < 1 || k > u0.n())
      throw std::invalid_argument("DetectorConfig: need 1 <= k <= n");
    if (u0.k() != k)
      throw std::invalid_argument("DetectorConfig: u0 has wrong dimension k");
    if (b < 1) throw std::invalid_argument("DetectorConfig: block size must be positive");
    if (std::isnan(eta) || eta < 0.0)
      throw std::invalid_argument("DetectorConfig: eta must be non-negative");
    if (!std::isfinite(c))
      throw std::invalid_argument("DetectorConfig: c must be finite");
  }
};

/// Instantaneous drift statistic for one estimated subspace:
/// d(U0, U1(gamma_hat)) - d(U1(gamma_hat), vhat), with the blind family
/// reducing to d(U0, vhat).
inline double drift_statistic(const DetectorConfig& cfg, const Subspace& vhat) {
  const FamilyMatch m = nearest_family_member(cfg.family, vhat, cfg.u0);
  return m.d_u0_u1 - m.d_vhat_u1;
}

/// CUSUM recursion state. `alarm_at` records the first block at which the
/// statistic reached eta and stays set afterwards.
struct CusumState {
  double s = 0.0;
  long ell = 0;
  std::optional<long> alarm_at;
};

inline double cusum_update(double s, double drift, double c) {
  return std::max(0.0, s + (drift - c));
}

inline CusumState cusum_step(const CusumState& state, const DetectorConfig& cfg,
                             const Subspace& vhat) {
  CusumState next;
  next.s = cusum_update(state.s, drift_statistic(cfg, vhat), cfg.c);
  next.ell = state.ell + 1;
  next.alarm_at = state.alarm_at;
  if (!next.alarm_at && next.s >= cfg.eta) next.alarm_at = next.ell;
  return next;
}

struct TracePoint {
  long ell;
  double s;
};

/// Pure CUSUM path over a precomputed drift sequence; shares its arithmetic
/// with cusum_step so the two routes agree bit for bit.
inline std::vector<TracePoint> cusum_trace_from_drifts(
    const std::vector<double>& drifts, double c) {
  std::vector<TracePoint> out;
  out.reserve(drifts.size());
  double s = 0.0;
  long ell = 0;
  for (const double d : drifts) {
    s = cusum_update(s, d, c);
    out.push_back({++ell, s});
  }
  return out;
}

inline std::optional<long> first_crossing(const std::vector<TracePoint>& trace,
                                          double eta) {
  for (const auto& p : trace)
    if (p.s >= eta) return p.ell;
  return std::nullopt;
}

struct DetectionResult {
  std::optional<long> alarm_block;
  std::vector<TracePoint> trace;
  long blocks_consumed = 0;
  long blocks_skipped = 0;
};

/// Drive the detector over a signal source. Samples are grouped into blocks
/// of b (disjoint partitions, or a stride-1 sliding window whose block index
/// advances with every new sample once the window is full). All-zero blocks
/// are skipped without advancing the block counter. With stop_at_alarm the
/// run ends at the alarm; otherwise the full trace is produced and
/// `alarm_block` still records the first crossing.
inline DetectionResult run_detector(const DetectorConfig& cfg, SignalSource& source,
                                    bool stop_at_alarm = true) {
  cfg.validate();
  DetectionResult out;
  CusumState state;
  std::deque<Eigen::VectorXd> window;
  Eigen::Index n = -1;

  while (auto sig = source.next()) {
    if (n < 0) {
      n = sig->values.size();
      if (cfg.u0.n() != n)
        throw std::invalid_argument("run_detector: u0 dimension differs from signals");
    } else if (sig->values.size() != n) {
      throw std::invalid_argument("run_detector: inconsistent signal dimension");
    }
    window.push_back(std::move(sig->values));
    if (static_cast<int>(window.size()) < cfg.b) continue;

    SignalBlock block;
    block.samples.resize(n, cfg.b);
    for (int j = 0; j < cfg.b; ++j) block.samples.col(j) = window[j];
    if (cfg.windowing == Windowing::Disjoint)
      window.clear();
    else
      window.pop_front();

    if (block.samples.isZero(0.0)) {
      ++out.blocks_skipped;
      continue;
    }
    block.block_index = state.ell + 1;
    const Subspace vhat = estimate_dominant_subspace(block, cfg.k);
    state = cusum_step(state, cfg, vhat);
    out.trace.push_back({state.ell, state.s});
    if (state.alarm_at && stop_at_alarm) break;
  }

  out.alarm_block = state.alarm_at;
  out.blocks_consumed = state.ell;
  return out;
}

inline DetectionResult run_detector(const DetectorConfig& cfg,
                                    const std::vector<GraphSignal>& signals,
                                    bool stop_at_alarm = true) {
  VectorSource source(signals);
  return run_detector(cfg, source, stop_at_alarm);
}

/// Drift moment estimates behind a calibration, reported alongside c.
struct DriftEstimate {
  double mean_nominal = 0.0;
  double sd_nominal = 0.0;
  std::optional<double> mean_post;
  long n_nominal = 0;
  long n_post = 0;
};

struct CalibrationResult {
  double c;
  DriftEstimate estimate;
};

namespace detail {

inline std::vector<double> block_drifts(const DetectorConfig& cfg,
                                        const std::vector<SignalBlock>& blocks) {
  std::vector<double> drifts;
  drifts.reserve(blocks.size());
  for (const auto& blk : blocks)
    drifts.push_back(drift_statistic(cfg, estimate_dominant_subspace(blk, cfg.k)));
  return drifts;
}

inline double mean_of(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

inline double sample_sd(const std::vector<double>& xs, double mean) {
  if (xs.size() < 2) return 0.0;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

}  // namespace detail

/// Choose the correction parameter from pre-change blocks and, when
/// available, post-change blocks. With both phases, c is the midpoint of the
/// two drift means and a CalibrationError is raised if they do not separate
/// (post mean <= nominal mean). With nominal data only, c = mean + 2 sd.
/// At least 30 nominal blocks are required. cfg.c itself is ignored.
inline CalibrationResult calibrate_c(const DetectorConfig& cfg,
                                     const std::vector<SignalBlock>& nominal_blocks,
                                     const std::vector<SignalBlock>* post_blocks = nullptr) {
  cfg.validate();
  if (nominal_blocks.size() < 30)
    throw std::invalid_argument("calibrate_c: need at least 30 nominal blocks");

  const std::vector<double> d0 = detail::block_drifts(cfg, nominal_blocks);
  DriftEstimate est;
  est.mean_nominal = detail::mean_of(d0);
  est.sd_nominal = detail::sample_sd(d0, est.mean_nominal);
  est.n_nominal = static_cast<long>(d0.size());

  double c;
  if (post_blocks != nullptr && !post_blocks->empty()) {
    const std::vector<double> d1 = detail::block_drifts(cfg, *post_blocks);
    est.mean_post = detail::mean_of(d1);
    est.n_post = static_cast<long>(d1.size());
    if (!(*est.mean_post > est.mean_nominal))
      throw CalibrationError(
          "calibrate_c: post-change drift mean does not exceed nominal mean");
    c = 0.5 * (est.mean_nominal + *est.mean_post);
  } else {
    c = est.mean_nominal + 2.0 * est.sd_nominal;
  }
  return CalibrationResult{c, est};
}

/// Run-length summary over repeated detector trials. Trials that never
/// alarm within their stream (or within max_blocks, when given) enter the
/// mean at the censoring point, and the censored fraction reports how many
/// did. run_lengths/censored keep the per-trial values in trial order.
struct ArlEstimate {
  double mean_blocks = 0.0;
  double censored_fraction = 0.0;
  long n_trials = 0;
  std::vector<long> run_lengths;
  std::vector<char> censored;
};

/// Measure run lengths over n_trials independent streams. `stream_for_trial`
/// maps the trial index to that trial's signals; seeding is the caller's
/// business (experiments derive one sub-seed per trial).
inline ArlEstimate measure_run_lengths(
    const DetectorConfig& cfg,
    const std::function<std::vector<GraphSignal>(long)>& stream_for_trial,
    long n_trials, std::optional<long> max_blocks = std::nullopt) {
  cfg.validate();
  if (n_trials < 1)
    throw std::invalid_argument("measure_run_lengths: need at least one trial");
  if (max_blocks && *max_blocks < 1)
    throw std::invalid_argument("measure_run_lengths: max_blocks must be positive");

  ArlEstimate out;
  out.n_trials = n_trials;
  double total = 0.0;
  long n_censored = 0;
  for (long trial = 0; trial < n_trials; ++trial) {
    const std::vector<GraphSignal> signals = stream_for_trial(trial);
    const DetectionResult res = run_detector(cfg, signals, true);
    long rl;
    bool cens;
    if (res.alarm_block && (!max_blocks || *res.alarm_block <= *max_blocks)) {
      rl = *res.alarm_block;
      cens = false;
    } else {
      rl = max_blocks ? std::min(*max_blocks, res.blocks_consumed)
                      : res.blocks_consumed;
      cens = true;
    }
    out.run_lengths.push_back(rl);
    out.censored.push_back(cens ? 1 : 0);
    total += static_cast<double>(rl);
    if (cens) ++n_censored;
  }
  out.mean_blocks = total / static_cast<double>(n_trials);
  out.censored_fraction = static_cast<double>(n_censored) / static_cast<double>(n_trials);
  return out;
}

}  // namespace graphcpd
