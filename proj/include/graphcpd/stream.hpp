#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "graphcpd/filter.hpp"
#include "graphcpd/graph.hpp"
#include "graphcpd/random.hpp"

namespace graphcpd {

/// One graph signal sample with its 1-based position in the stream.
struct GraphSignal {
  Eigen::VectorXd values;
  long time = 0;
};

/// Pull-based source of graph signals. Returns nullopt when exhausted.
struct SignalSource {
  virtual ~SignalSource() = default;
  virtual std::optional<GraphSignal> next() = 0;
};

/// Adapter presenting an in-memory vector of signals as a source.
class VectorSource final : public SignalSource {
 public:
  explicit VectorSource(const std::vector<GraphSignal>& signals)
      : signals_(signals) {}

  std::optional<GraphSignal> next() override {
    if (pos_ >= signals_.size()) return std::nullopt;
    return signals_[pos_++];
  }

 private:
  const std::vector<GraphSignal>& signals_;
  std::size_t pos_ = 0;
};

/// Piecewise-stationary stream description: samples at times t < tau are
/// filter0 applied to white noise on shift0, samples at t >= tau switch to
/// (filter1, shift1). tau = length + 1 means no change within the stream;
/// tau = 1 means the whole stream is post-change.
struct StreamConfig {
  ShiftOperator shift0;
  ShiftOperator shift1;
  FilterCoefficients filter0;
  FilterCoefficients filter1;
  long tau = 1;
  long length = 0;
  std::uint64_t noise_seed = 0;

  void validate() const {
    if (shift0.dim() != shift1.dim())
      throw std::invalid_argument("StreamConfig: shift dimensions differ");
    if (length < 1)
      throw std::invalid_argument("StreamConfig: length must be positive");
    if (tau < 1 || tau > length + 1)
      throw std::invalid_argument("StreamConfig: need 1 <= tau <= length + 1");
  }
};

/// Deterministic generator for a StreamConfig. Exactly n noise draws are
/// consumed per sample whichever regime is active, so two configs differing
/// only in tau produce identical samples before the earlier change point.
class StreamGenerator final : public SignalSource {
 public:
  /// Custom noise draw, mainly for tests; defaults to standard normal.
  using NoiseDraw = std::function<double(Rng&)>;

  explicit StreamGenerator(StreamConfig cfg, NoiseDraw noise = nullptr)
      : cfg_(std::move(cfg)), rng_(cfg_.noise_seed), noise_(std::move(noise)) {
    cfg_.validate();
  }

  std::optional<GraphSignal> next() override {
    if (t_ > cfg_.length) return std::nullopt;
    const long t = t_++;
    const int n = cfg_.shift0.dim();
    Eigen::VectorXd w(n);
    for (int i = 0; i < n; ++i) w(i) = noise_ ? noise_(rng_) : normal_(rng_);
    const bool post = t >= cfg_.tau;
    Eigen::VectorXd y = post ? apply_filter(cfg_.filter1, cfg_.shift1, w)
                             : apply_filter(cfg_.filter0, cfg_.shift0, w);
    return GraphSignal{std::move(y), t};
  }

 private:
  StreamConfig cfg_;
  Rng rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  NoiseDraw noise_;
  long t_ = 1;
};

inline std::vector<GraphSignal> synthesize_stream(
    const StreamConfig& cfg, StreamGenerator::NoiseDraw noise = nullptr) {
  StreamGenerator gen(cfg, std::move(noise));
  std::vector<GraphSignal> out;
  out.reserve(static_cast<std::size_t>(cfg.length));
  while (auto s = gen.next()) out.push_back(std::move(*s));
  return out;
}

}  // namespace graphcpd
