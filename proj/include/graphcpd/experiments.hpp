#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "graphcpd/detector.hpp"
#include "graphcpd/family.hpp"
#include "graphcpd/filter.hpp"
#include "graphcpd/graph.hpp"
#include "graphcpd/io.hpp"
#include "graphcpd/random.hpp"
#include "graphcpd/stream.hpp"
#include "graphcpd/version.hpp"

namespace graphcpd {

using Json = nlohmann::json;

/// Density 2 ln(n) / n, comfortably above the connectivity threshold.
inline double default_er_density(int n) {
  return 2.0 * std::log(static_cast<double>(n)) / static_cast<double>(n);
}

// Fixed sub-stream ids hung off the master seed, so that every random
// ingredient of an experiment is independently and reproducibly seeded.
namespace seed_id {
inline constexpr std::uint64_t kGraphNominal = 1;
inline constexpr std::uint64_t kGraphPost = 2;
inline constexpr std::uint64_t kCalibNominal = 3;
inline constexpr std::uint64_t kCalibPost = 4;
inline constexpr std::uint64_t kTraceStream = 5;
inline constexpr std::uint64_t kNominalTrialBase = 1000;
inline constexpr std::uint64_t kPostTrialBase = 2000;
}  // namespace seed_id

/// What an experiment leaves behind: artifact file names (relative to the
/// output directory) and the parsed summary document.
struct RunArtifacts {
  std::vector<std::string> files;
  Json summary;
};

inline Json json_eta(double eta) {
  return std::isinf(eta) ? Json("inf") : Json(eta);
}

inline Json family_json(const SubspaceFamily& f) {
  Json j;
  j["kind"] = family_kind_name(f.kind());
  if (f.kind() == SubspaceFamily::Kind::Catalog)
    j["members"] = f.members().size();
  else
    j["members"] = nullptr;
  return j;
}

inline Json detector_config_json(const DetectorConfig& cfg) {
  return Json{{"c", cfg.c},
              {"eta", json_eta(cfg.eta)},
              {"k", cfg.k},
              {"b", cfg.b},
              {"windowing", windowing_name(cfg.windowing)},
              {"family", family_json(cfg.family)},
              {"n", cfg.u0.n()}};
}

// ---------------------------------------------------------------------------
// Stream/block plumbing shared by the experiment recipes.
// ---------------------------------------------------------------------------

inline std::vector<SignalBlock> disjoint_blocks(const std::vector<GraphSignal>& stream,
                                                int b) {
  if (b < 1) throw std::invalid_argument("disjoint_blocks: block size must be positive");
  std::vector<SignalBlock> out;
  const long count = static_cast<long>(stream.size()) / b;
  out.reserve(count);
  for (long blk = 0; blk < count; ++blk) {
    SignalBlock block;
    block.block_index = blk + 1;
    block.samples.resize(stream.front().values.size(), b);
    for (int j = 0; j < b; ++j) block.samples.col(j) = stream[blk * b + j].values;
    out.push_back(std::move(block));
  }
  return out;
}

/// Estimated subspace per disjoint block; degenerate (all-zero) blocks are
/// dropped, mirroring the detector's skip policy.
inline std::vector<Subspace> block_subspaces(const std::vector<GraphSignal>& stream,
                                             int b, int k) {
  std::vector<Subspace> out;
  for (const auto& block : disjoint_blocks(stream, b)) {
    try {
      out.push_back(estimate_dominant_subspace(block, k));
    } catch (const DegenerateBlockError&) {
    }
  }
  return out;
}

inline std::vector<double> family_drifts(const std::vector<Subspace>& vhats,
                                         const SubspaceFamily& family,
                                         const Subspace& u0) {
  std::vector<double> out;
  out.reserve(vhats.size());
  for (const auto& v : vhats) {
    const FamilyMatch m = nearest_family_member(family, v, u0);
    out.push_back(m.d_u0_u1 - m.d_vhat_u1);
  }
  return out;
}

/// Correction parameter for the run-length experiments: nominal mean plus
/// kappa nominal standard deviations. Midpoint placement would make nominal
/// false alarms unobservably rare at desk scale, so the margin rule keeps
/// the nominal-run-length axis informative while the feasibility condition
/// (nominal mean < c < post mean) is still enforced.
struct FamilyCalibration {
  double c = 0.0;
  double mean_nominal = 0.0;
  double sd_nominal = 0.0;
  double mean_post = 0.0;
};

inline FamilyCalibration calibrate_margin(const std::vector<double>& nominal_drifts,
                                          const std::vector<double>& post_drifts,
                                          double kappa, const std::string& family_name) {
  if (nominal_drifts.size() < 2 || post_drifts.empty())
    throw std::invalid_argument("calibrate_margin: not enough drift samples");
  if (!(kappa >= 0.0))
    throw std::invalid_argument("calibrate_margin: kappa must be non-negative");
  FamilyCalibration cal;
  cal.mean_nominal = detail::mean_of(nominal_drifts);
  cal.sd_nominal = detail::sample_sd(nominal_drifts, cal.mean_nominal);
  cal.mean_post = detail::mean_of(post_drifts);
  cal.c = cal.mean_nominal + kappa * cal.sd_nominal;
  if (!(cal.mean_post > cal.c))
    throw CalibrationError("calibrate_margin: " + family_name +
                           " post-change drift mean " + format_double(cal.mean_post) +
                           " does not exceed c = " + format_double(cal.c));
  return cal;
}

inline Json family_calibration_json(const FamilyCalibration& cal) {
  return Json{{"c", cal.c},
              {"mean_nominal", cal.mean_nominal},
              {"sd_nominal", cal.sd_nominal},
              {"mean_post", cal.mean_post}};
}

/// Log-spaced threshold grid spanning just past the largest nominal CUSUM
/// excursion down to a small fraction of it, so the grid covers the whole
/// range from immediate false alarms to fully censored nominal runs.
inline std::vector<double> make_eta_grid(const std::vector<std::vector<TracePoint>>& nominal_traces,
                                         int points) {
  if (points < 1) throw std::invalid_argument("make_eta_grid: need at least one point");
  double hi = 0.0;
  for (const auto& trace : nominal_traces)
    for (const auto& p : trace) hi = std::max(hi, p.s);
  if (hi <= 0.0) hi = 1.0;
  hi *= 1.05;
  const double lo = hi / 200.0;
  std::vector<double> grid;
  grid.reserve(points);
  if (points == 1) {
    grid.push_back(hi);
    return grid;
  }
  for (int i = 0; i < points; ++i)
    grid.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (points - 1)));
  return grid;
}

/// Mean run length and censored fraction at threshold eta over precomputed
/// traces; a trace that never crosses is censored at its own length.
inline std::pair<double, double> run_length_summary(
    const std::vector<std::vector<TracePoint>>& traces, double eta) {
  double total = 0.0;
  long censored = 0;
  for (const auto& trace : traces) {
    const auto cross = first_crossing(trace, eta);
    total += static_cast<double>(cross ? *cross : static_cast<long>(trace.size()));
    if (!cross) ++censored;
  }
  const double nt = static_cast<double>(traces.size());
  return {total / nt, static_cast<double>(censored) / nt};
}

namespace detail {

inline double interp_at(std::vector<std::pair<double, double>> pts, double x) {
  std::sort(pts.begin(), pts.end());
  std::vector<std::pair<double, double>> uniq;
  for (std::size_t i = 0; i < pts.size();) {
    std::size_t j = i;
    double sum = 0.0;
    while (j < pts.size() && pts[j].first == pts[i].first) sum += pts[j++].second;
    uniq.emplace_back(pts[i].first, sum / static_cast<double>(j - i));
    i = j;
  }
  if (x <= uniq.front().first) return uniq.front().second;
  if (x >= uniq.back().first) return uniq.back().second;
  for (std::size_t i = 1; i < uniq.size(); ++i) {
    if (x <= uniq[i].first) {
      const auto& [x0, y0] = uniq[i - 1];
      const auto& [x1, y1] = uniq[i];
      const double t = (x - x0) / (x1 - x0);
      return y0 + t * (y1 - y0);
    }
  }
  return uniq.back().second;
}

}  // namespace detail

/// Fraction of the parameterized family's grid points whose post-change run
/// length is at or below the blind family's, compared at matched nominal run
/// length by interpolating along the blind curve.
inline double dominance_fraction(const std::vector<ArlRow>& param_rows,
                                 const std::vector<ArlRow>& blind_rows) {
  if (param_rows.empty() || blind_rows.empty())
    throw std::invalid_argument("dominance_fraction: empty row set");
  std::vector<std::pair<double, double>> blind_curve;
  blind_curve.reserve(blind_rows.size());
  for (const auto& r : blind_rows) blind_curve.emplace_back(r.arl0, r.arl1);
  long wins = 0;
  for (const auto& r : param_rows)
    if (r.arl1 <= detail::interp_at(blind_curve, r.arl0) + 1e-9) ++wins;
  return static_cast<double>(wins) / static_cast<double>(param_rows.size());
}

// ---------------------------------------------------------------------------
// Community catalog: candidate subspaces built from expected adjacency
// matrices of a planted dense block of each candidate size.
// ---------------------------------------------------------------------------

/// Expected adjacency of a planted-block model: p off the diagonal
/// everywhere, q within the leading n0 x n0 block.
inline Eigen::MatrixXd expected_planted_adjacency(int n, double p, double q, int n0) {
  if (n < 1 || n0 < 1 || n0 > n)
    throw std::invalid_argument("expected_planted_adjacency: bad dimensions");
  Eigen::MatrixXd m = Eigen::MatrixXd::Constant(n, n, p);
  m.topLeftCorner(n0, n0).setConstant(q);
  m.diagonal().setZero();
  return m;
}

/// One catalog entry per candidate block size: the filter-dominant
/// k-dimensional subspace of the expected post-change adjacency.
inline std::vector<CatalogEntry> community_catalog(int n, double p, double q,
                                                   const std::vector<int>& n0_grid,
                                                   const FilterCoefficients& filter,
                                                   int k) {
  if (n0_grid.empty())
    throw std::invalid_argument("community_catalog: empty candidate grid");
  std::vector<CatalogEntry> entries;
  entries.reserve(n0_grid.size());
  for (const int n0 : n0_grid) {
    const Eigen::MatrixXd expected = expected_planted_adjacency(n, p, q, n0);
    entries.push_back({std::to_string(n0),
                       dominant_subspace_of(filter, expected, k).subspace});
  }
  return entries;
}

// ---------------------------------------------------------------------------
// Experiment parameter sets. Negative sentinels mean "derive the default";
// resolved() fills them in so that provenance always stores concrete values.
// ---------------------------------------------------------------------------

struct SpikeTraceParams {
  int n = 100;
  double p = -1.0;  // < 0: use 2 ln(n) / n
  int ba_m = 1;
  std::vector<double> coeffs = {0.0, 0.0, 1.0};
  int b = 1;
  int k = 1;
  long tau = 600;
  long length = 1000;
  std::vector<double> c_list = {0.01};
  bool add_calibrated = true;
  long calib_blocks = 400;
  std::uint64_t seed = 0;
  std::string outdir;

  SpikeTraceParams resolved() const {
    SpikeTraceParams r = *this;
    if (r.p < 0.0) r.p = default_er_density(r.n);
    return r;
  }
};

inline void to_json(Json& j, const SpikeTraceParams& p) {
  j = Json{{"n", p.n},          {"p", p.p},
           {"ba_m", p.ba_m},    {"coeffs", p.coeffs},
           {"b", p.b},          {"k", p.k},
           {"tau", p.tau},      {"length", p.length},
           {"c_list", p.c_list},{"add_calibrated", p.add_calibrated},
           {"calib_blocks", p.calib_blocks}};
}

inline void from_json(const Json& j, SpikeTraceParams& p) {
  p.n = j.value("n", p.n);
  p.p = j.value("p", p.p);
  p.ba_m = j.value("ba_m", p.ba_m);
  p.coeffs = j.value("coeffs", p.coeffs);
  p.b = j.value("b", p.b);
  p.k = j.value("k", p.k);
  p.tau = j.value("tau", p.tau);
  p.length = j.value("length", p.length);
  p.c_list = j.value("c_list", p.c_list);
  p.add_calibrated = j.value("add_calibrated", p.add_calibrated);
  p.calib_blocks = j.value("calib_blocks", p.calib_blocks);
}

struct SpikeArlParams {
  int n = 100;
  double p = -1.0;
  int ba_m = 1;
  std::vector<double> coeffs = {0.0, 0.0, 1.0};
  int b = 1;
  int k = 1;
  long trials = 10;
  long nominal_samples = 2000;
  long post_samples = 2000;
  int eta_points = 10;
  double c_margin = 0.25;
  double c_spike = std::numeric_limits<double>::quiet_NaN();
  double c_blind = std::numeric_limits<double>::quiet_NaN();
  long calib_blocks = 400;
  std::uint64_t seed = 0;
  std::string outdir;

  SpikeArlParams resolved() const {
    SpikeArlParams r = *this;
    if (r.p < 0.0) r.p = default_er_density(r.n);
    return r;
  }
};

inline void to_json(Json& j, const SpikeArlParams& p) {
  j = Json{{"n", p.n},
           {"p", p.p},
           {"ba_m", p.ba_m},
           {"coeffs", p.coeffs},
           {"b", p.b},
           {"k", p.k},
           {"trials", p.trials},
           {"nominal_samples", p.nominal_samples},
           {"post_samples", p.post_samples},
           {"eta_points", p.eta_points},
           {"c_margin", p.c_margin},
           {"calib_blocks", p.calib_blocks}};
  if (!std::isnan(p.c_spike)) j["c_spike"] = p.c_spike;
  if (!std::isnan(p.c_blind)) j["c_blind"] = p.c_blind;
}

inline void from_json(const Json& j, SpikeArlParams& p) {
  p.n = j.value("n", p.n);
  p.p = j.value("p", p.p);
  p.ba_m = j.value("ba_m", p.ba_m);
  p.coeffs = j.value("coeffs", p.coeffs);
  p.b = j.value("b", p.b);
  p.k = j.value("k", p.k);
  p.trials = j.value("trials", p.trials);
  p.nominal_samples = j.value("nominal_samples", p.nominal_samples);
  p.post_samples = j.value("post_samples", p.post_samples);
  p.eta_points = j.value("eta_points", p.eta_points);
  p.c_margin = j.value("c_margin", p.c_margin);
  p.c_spike = j.value("c_spike", p.c_spike);
  p.c_blind = j.value("c_blind", p.c_blind);
  p.calib_blocks = j.value("calib_blocks", p.calib_blocks);
}

struct CommunityArlParams {
  int n = 100;
  double p = -1.0;
  double q = -1.0;  // < 0: use 5 p
  int n0_true = 40;
  std::vector<int> n0_grid = {10, 20, 30, 40, 50, 60, 70, 80, 90, 100};
  std::vector<double> coeffs = {0.0, 0.0, 1.0};
  int b = 50;
  int k = 2;
  long trials = 20;
  long nominal_samples = 100000;
  long post_samples = 100000;
  int eta_points = 10;
  double c_margin = 0.25;
  double c_catalog = std::numeric_limits<double>::quiet_NaN();
  double c_blind = std::numeric_limits<double>::quiet_NaN();
  long calib_blocks = 200;
  std::uint64_t seed = 0;
  std::string outdir;

  CommunityArlParams resolved() const {
    CommunityArlParams r = *this;
    if (r.p < 0.0) r.p = default_er_density(r.n);
    if (r.q < 0.0) r.q = std::min(1.0, 5.0 * r.p);
    return r;
  }
};

inline void to_json(Json& j, const CommunityArlParams& p) {
  j = Json{{"n", p.n},
           {"p", p.p},
           {"q", p.q},
           {"n0_true", p.n0_true},
           {"n0_grid", p.n0_grid},
           {"coeffs", p.coeffs},
           {"b", p.b},
           {"k", p.k},
           {"trials", p.trials},
           {"nominal_samples", p.nominal_samples},
           {"post_samples", p.post_samples},
           {"eta_points", p.eta_points},
           {"c_margin", p.c_margin},
           {"calib_blocks", p.calib_blocks}};
  if (!std::isnan(p.c_catalog)) j["c_catalog"] = p.c_catalog;
  if (!std::isnan(p.c_blind)) j["c_blind"] = p.c_blind;
}

inline void from_json(const Json& j, CommunityArlParams& p) {
  p.n = j.value("n", p.n);
  p.p = j.value("p", p.p);
  p.q = j.value("q", p.q);
  p.n0_true = j.value("n0_true", p.n0_true);
  p.n0_grid = j.value("n0_grid", p.n0_grid);
  p.coeffs = j.value("coeffs", p.coeffs);
  p.b = j.value("b", p.b);
  p.k = j.value("k", p.k);
  p.trials = j.value("trials", p.trials);
  p.nominal_samples = j.value("nominal_samples", p.nominal_samples);
  p.post_samples = j.value("post_samples", p.post_samples);
  p.eta_points = j.value("eta_points", p.eta_points);
  p.c_margin = j.value("c_margin", p.c_margin);
  p.c_catalog = j.value("c_catalog", p.c_catalog);
  p.c_blind = j.value("c_blind", p.c_blind);
  p.calib_blocks = j.value("calib_blocks", p.calib_blocks);
}

struct CsvDetectParams {
  std::string input;
  std::string u0_path;     // empty: estimate u0 from the warm-up prefix
  long warmup = 0;
  std::string family = "spike";  // spike | blind | catalog
  std::string catalog_path;
  double c = 0.0;
  double eta = std::numeric_limits<double>::infinity();
  int b = 36;
  int k = 1;
  std::string window = "sliding";  // sliding | disjoint
  long ground_truth = -1;  // 1-based sample index; < 0: unknown
  std::uint64_t seed = 0;
  std::string outdir;
};

inline void to_json(Json& j, const CsvDetectParams& p) {
  j = Json{{"input", p.input},
           {"u0_path", p.u0_path},
           {"warmup", p.warmup},
           {"family", p.family},
           {"catalog_path", p.catalog_path},
           {"c", p.c},
           {"eta", json_eta(p.eta)},
           {"b", p.b},
           {"k", p.k},
           {"window", p.window},
           {"ground_truth", p.ground_truth}};
}

inline void from_json(const Json& j, CsvDetectParams& p) {
  p.input = j.value("input", p.input);
  p.u0_path = j.value("u0_path", p.u0_path);
  p.warmup = j.value("warmup", p.warmup);
  p.family = j.value("family", p.family);
  p.catalog_path = j.value("catalog_path", p.catalog_path);
  p.c = j.value("c", p.c);
  if (j.contains("eta")) {
    if (j.at("eta").is_string())
      p.eta = std::numeric_limits<double>::infinity();
    else
      p.eta = j.at("eta").get<double>();
  }
  p.b = j.value("b", p.b);
  p.k = j.value("k", p.k);
  p.window = j.value("window", p.window);
  p.ground_truth = j.value("ground_truth", p.ground_truth);
}

// ---------------------------------------------------------------------------
// Shared experiment plumbing.
// ---------------------------------------------------------------------------

namespace detail {

inline void write_json_file(const std::string& path, const Json& j) {
  auto out = open_output(path);
  out << j.dump(2) << "\n";
}

inline std::filesystem::path prepare_outdir(const std::string& outdir) {
  if (outdir.empty()) throw std::invalid_argument("experiment: outdir is required");
  std::filesystem::path dir(outdir);
  std::filesystem::create_directories(dir);
  return dir;
}

template <typename Params>
inline Json provenance_json(const std::string& experiment, const Params& prm) {
  return Json{{"version", kVersion},
              {"experiment", experiment},
              {"seed", prm.seed},
              {"params", Json(prm)}};
}

}  // namespace detail

inline Json load_json_file(const std::string& path) {
  auto in = detail::open_input(path);
  Json j;
  try {
    in >> j;
  } catch (const Json::exception& e) {
    throw ParseError(std::string("invalid JSON in '") + path + "': " + e.what());
  }
  return j;
}

// ---------------------------------------------------------------------------
// Experiment: single-trace spike run. A fixed ER graph switches to a fixed
// preferential-attachment tree at sample tau; the delta-spike CUSUM path is
// written out for each requested correction parameter plus the calibrated
// one, all on the same stream.
// ---------------------------------------------------------------------------

inline RunArtifacts experiment_spike_trace(const SpikeTraceParams& params) {
  const SpikeTraceParams prm = params.resolved();
  if (prm.k != 1)
    throw std::invalid_argument("experiment_spike_trace: delta-spike family requires k = 1");
  if (prm.calib_blocks < 30)
    throw std::invalid_argument("experiment_spike_trace: need at least 30 calibration blocks");
  const auto dir = detail::prepare_outdir(prm.outdir);

  const Graph g0 = erdos_renyi(prm.n, prm.p, derive_seed(prm.seed, seed_id::kGraphNominal));
  const Graph g1 = barabasi_albert(prm.n, prm.ba_m, derive_seed(prm.seed, seed_id::kGraphPost));
  const ShiftOperator s0(g0, ShiftKind::Adjacency);
  const ShiftOperator s1(g1, ShiftKind::Adjacency);
  const FilterCoefficients filt(prm.coeffs);
  const Subspace u0 = dominant_subspace_of(filt, s0, prm.k).subspace;
  const SubspaceFamily family = SubspaceFamily::delta_spike();
  DetectorConfig cfg{family, u0, 0.0, std::numeric_limits<double>::infinity(),
                     prm.k, prm.b, Windowing::Disjoint};

  const long calib_len = prm.calib_blocks * prm.b;
  const auto nominal = synthesize_stream({s0, s1, filt, filt, calib_len + 1, calib_len,
                                          derive_seed(prm.seed, seed_id::kCalibNominal)});
  const auto post = synthesize_stream({s0, s1, filt, filt, 1, calib_len,
                                       derive_seed(prm.seed, seed_id::kCalibPost)});
  const auto nominal_blocks = disjoint_blocks(nominal, prm.b);
  const auto post_blocks = disjoint_blocks(post, prm.b);
  const CalibrationResult cal = calibrate_c(cfg, nominal_blocks, &post_blocks);

  std::vector<double> cs = prm.c_list;
  if (prm.add_calibrated) cs.push_back(cal.c);
  if (cs.empty())
    throw std::invalid_argument("experiment_spike_trace: no correction parameters to run");

  const auto stream = synthesize_stream({s0, s1, filt, filt, prm.tau, prm.length,
                                         derive_seed(prm.seed, seed_id::kTraceStream)});
  const auto vhats = block_subspaces(stream, prm.b, prm.k);
  const auto drifts = family_drifts(vhats, family, u0);

  RunArtifacts art;
  write_subspace_csv_file((dir / "u0.csv").string(), u0);
  art.files.push_back("u0.csv");
  write_edge_list_file((dir / "graph_nominal.txt").string(), g0);
  art.files.push_back("graph_nominal.txt");
  write_edge_list_file((dir / "graph_post.txt").string(), g1);
  art.files.push_back("graph_post.txt");

  const long pre_blocks = (prm.tau - 1) / prm.b;
  Json traces = Json::array();
  for (std::size_t i = 0; i < cs.size(); ++i) {
    const auto trace = cusum_trace_from_drifts(drifts, cs[i]);
    const std::string fname = "trace_c" + std::to_string(i) + ".csv";
    write_trace_csv_file((dir / fname).string(), trace,
                         std::numeric_limits<double>::infinity());
    art.files.push_back(fname);
    const bool have_pre = pre_blocks >= 1 && pre_blocks <= static_cast<long>(trace.size());
    const double s_pre = have_pre ? trace[pre_blocks - 1].s : 0.0;
    const double s_final = trace.empty() ? 0.0 : trace.back().s;
    traces.push_back(Json{{"file", fname},
                          {"c", cs[i]},
                          {"calibrated", prm.add_calibrated && i + 1 == cs.size()},
                          {"s_pre_change_end", s_pre},
                          {"s_final", s_final},
                          {"mean_pre_increment", pre_blocks > 0 ? s_pre / pre_blocks : 0.0}});
  }

  Json summary{{"experiment", "spike-trace"},
               {"version", kVersion},
               {"seed", prm.seed},
               {"alarm_block", nullptr},
               {"blocks_consumed", static_cast<long>(drifts.size())},
               {"config", detector_config_json(cfg)},
               {"n", prm.n},
               {"p", prm.p},
               {"ba_m", prm.ba_m},
               {"tau", prm.tau},
               {"length", prm.length},
               {"pre_change_blocks", pre_blocks},
               {"calibrated_c", cal.c},
               {"drift_estimate",
                Json{{"mean_nominal", cal.estimate.mean_nominal},
                     {"sd_nominal", cal.estimate.sd_nominal},
                     {"mean_post", *cal.estimate.mean_post},
                     {"n_nominal", cal.estimate.n_nominal},
                     {"n_post", cal.estimate.n_post}}},
               {"c_values", cs},
               {"traces", traces}};
  detail::write_json_file((dir / "summary.json").string(), summary);
  art.files.push_back("summary.json");
  detail::write_json_file((dir / "provenance.json").string(),
                          detail::provenance_json("spike-trace", prm));
  art.files.push_back("provenance.json");
  art.summary = std::move(summary);
  return art;
}

// ---------------------------------------------------------------------------
// Experiment: spike run-length curves. Delta-spike and blind detectors are
// run over the same per-trial streams (paired noise seeds) and their mean
// run lengths are tabulated over a log-spaced threshold grid per family.
// ---------------------------------------------------------------------------

namespace detail {

struct ArlFamilyResult {
  std::string name;
  FamilyCalibration cal;
  std::vector<double> eta_grid;
  std::vector<ArlRow> rows;
};

// Shared skeleton for the two run-length experiments: calibrate each family
// on dedicated calibration streams, replay per-trial traces for both
// families on identical streams, then sweep the threshold grid.
template <typename MakeNominal, typename MakePost>
inline std::vector<ArlFamilyResult> arl_family_sweep(
    const std::vector<std::pair<std::string, const SubspaceFamily*>>& families,
    const std::vector<double>& explicit_c, const Subspace& u0, int b, int k,
    long trials, long len0, long len1, int eta_points, double c_margin,
    const std::vector<Subspace>& calib_vhats0, const std::vector<Subspace>& calib_vhats1,
    const MakeNominal& nominal_stream, const MakePost& post_stream) {
  std::vector<ArlFamilyResult> out(families.size());

  for (std::size_t f = 0; f < families.size(); ++f) {
    out[f].name = families[f].first;
    const auto d0 = family_drifts(calib_vhats0, *families[f].second, u0);
    const auto d1 = family_drifts(calib_vhats1, *families[f].second, u0);
    if (std::isnan(explicit_c[f])) {
      out[f].cal = calibrate_margin(d0, d1, c_margin, families[f].first);
    } else {
      out[f].cal.c = explicit_c[f];
      out[f].cal.mean_nominal = mean_of(d0);
      out[f].cal.sd_nominal = sample_sd(d0, out[f].cal.mean_nominal);
      out[f].cal.mean_post = mean_of(d1);
    }
  }

  std::vector<std::vector<std::vector<TracePoint>>> t0(families.size()), t1(families.size());
  for (long trial = 0; trial < trials; ++trial) {
    const auto stream0 = nominal_stream(trial, len0);
    const auto stream1 = post_stream(trial, len1);
    const auto vh0 = block_subspaces(stream0, b, k);
    const auto vh1 = block_subspaces(stream1, b, k);
    for (std::size_t f = 0; f < families.size(); ++f) {
      t0[f].push_back(cusum_trace_from_drifts(
          family_drifts(vh0, *families[f].second, u0), out[f].cal.c));
      t1[f].push_back(cusum_trace_from_drifts(
          family_drifts(vh1, *families[f].second, u0), out[f].cal.c));
    }
  }

  for (std::size_t f = 0; f < families.size(); ++f) {
    out[f].eta_grid = make_eta_grid(t0[f], eta_points);
    for (const double eta : out[f].eta_grid) {
      const auto [arl0, frac0] = run_length_summary(t0[f], eta);
      const auto [arl1, frac1] = run_length_summary(t1[f], eta);
      out[f].rows.push_back({eta, arl0, frac0, arl1, frac1, out[f].name});
    }
  }
  return out;
}

}  // namespace detail

inline RunArtifacts experiment_spike_arl(const SpikeArlParams& params) {
  const SpikeArlParams prm = params.resolved();
  if (prm.k != 1)
    throw std::invalid_argument("experiment_spike_arl: delta-spike family requires k = 1");
  if (prm.trials < 1)
    throw std::invalid_argument("experiment_spike_arl: need at least one trial");
  if (prm.calib_blocks < 30)
    throw std::invalid_argument("experiment_spike_arl: need at least 30 calibration blocks");
  const long len0 = prm.nominal_samples / prm.trials;
  const long len1 = prm.post_samples / prm.trials;
  if (len0 < prm.b || len1 < prm.b)
    throw std::invalid_argument("experiment_spike_arl: trials too short for one block");
  const auto dir = detail::prepare_outdir(prm.outdir);

  const Graph g0 = erdos_renyi(prm.n, prm.p, derive_seed(prm.seed, seed_id::kGraphNominal));
  const Graph g1 = barabasi_albert(prm.n, prm.ba_m, derive_seed(prm.seed, seed_id::kGraphPost));
  const ShiftOperator s0(g0, ShiftKind::Adjacency);
  const ShiftOperator s1(g1, ShiftKind::Adjacency);
  const FilterCoefficients filt(prm.coeffs);
  const Subspace u0 = dominant_subspace_of(filt, s0, prm.k).subspace;
  const SubspaceFamily spike = SubspaceFamily::delta_spike();
  const SubspaceFamily blind = SubspaceFamily::blind();

  const long calib_len = prm.calib_blocks * prm.b;
  const auto calib0 = synthesize_stream({s0, s1, filt, filt, calib_len + 1, calib_len,
                                         derive_seed(prm.seed, seed_id::kCalibNominal)});
  const auto calib1 = synthesize_stream({s0, s1, filt, filt, 1, calib_len,
                                         derive_seed(prm.seed, seed_id::kCalibPost)});
  const auto calib_vhats0 = block_subspaces(calib0, prm.b, prm.k);
  const auto calib_vhats1 = block_subspaces(calib1, prm.b, prm.k);

  const auto nominal_stream = [&](long trial, long len) {
    return synthesize_stream({s0, s1, filt, filt, len + 1, len,
                              derive_seed(prm.seed, seed_id::kNominalTrialBase + trial)});
  };
  const auto post_stream = [&](long trial, long len) {
    return synthesize_stream({s0, s1, filt, filt, 1, len,
                              derive_seed(prm.seed, seed_id::kPostTrialBase + trial)});
  };

  const auto results = detail::arl_family_sweep(
      {{"delta_spike", &spike}, {"blind", &blind}}, {prm.c_spike, prm.c_blind}, u0,
      prm.b, prm.k, prm.trials, len0, len1, prm.eta_points, prm.c_margin,
      calib_vhats0, calib_vhats1, nominal_stream, post_stream);

  std::vector<ArlRow> rows = results[0].rows;
  rows.insert(rows.end(), results[1].rows.begin(), results[1].rows.end());
  const double dominance = dominance_fraction(results[0].rows, results[1].rows);

  RunArtifacts art;
  write_arl_csv_file((dir / "arl.csv").string(), rows);
  art.files.push_back("arl.csv");
  write_subspace_csv_file((dir / "u0.csv").string(), u0);
  art.files.push_back("u0.csv");
  write_edge_list_file((dir / "graph_nominal.txt").string(), g0);
  art.files.push_back("graph_nominal.txt");
  write_edge_list_file((dir / "graph_post.txt").string(), g1);
  art.files.push_back("graph_post.txt");

  const long blocks_per_trial0 = len0 / prm.b;
  const long blocks_per_trial1 = len1 / prm.b;
  Json summary{{"experiment", "spike-arl"},
               {"version", kVersion},
               {"seed", prm.seed},
               {"alarm_block", nullptr},
               {"blocks_consumed", prm.trials * (blocks_per_trial0 + blocks_per_trial1)},
               {"config",
                Json{{"delta_spike",
                      detector_config_json({spike, u0, results[0].cal.c,
                                            std::numeric_limits<double>::infinity(), prm.k,
                                            prm.b, Windowing::Disjoint})},
                     {"blind",
                      detector_config_json({blind, u0, results[1].cal.c,
                                            std::numeric_limits<double>::infinity(), prm.k,
                                            prm.b, Windowing::Disjoint})}}},
               {"n", prm.n},
               {"p", prm.p},
               {"trials", prm.trials},
               {"blocks_per_trial_nominal", blocks_per_trial0},
               {"blocks_per_trial_post", blocks_per_trial1},
               {"calibration",
                Json{{"delta_spike", family_calibration_json(results[0].cal)},
                     {"blind", family_calibration_json(results[1].cal)}}},
               {"eta_grid_delta_spike", results[0].eta_grid},
               {"eta_grid_blind", results[1].eta_grid},
               {"dominance_fraction", dominance}};
  detail::write_json_file((dir / "summary.json").string(), summary);
  art.files.push_back("summary.json");
  detail::write_json_file((dir / "provenance.json").string(),
                          detail::provenance_json("spike-arl", prm));
  art.files.push_back("provenance.json");
  art.summary = std::move(summary);
  return art;
}

// ---------------------------------------------------------------------------
// Experiment: community run-length curves. The post-change graph replants
// its leading block at a higher density; the catalog family scans candidate
// block sizes against the blind baseline on identical per-trial streams.
// ---------------------------------------------------------------------------

inline RunArtifacts experiment_community_arl(const CommunityArlParams& params) {
  const CommunityArlParams prm = params.resolved();
  if (prm.trials < 1)
    throw std::invalid_argument("experiment_community_arl: need at least one trial");
  if (prm.calib_blocks < 30)
    throw std::invalid_argument("experiment_community_arl: need at least 30 calibration blocks");
  const long len0 = prm.nominal_samples / prm.trials;
  const long len1 = prm.post_samples / prm.trials;
  if (len0 < prm.b || len1 < prm.b)
    throw std::invalid_argument("experiment_community_arl: trials too short for one block");
  const auto dir = detail::prepare_outdir(prm.outdir);

  const Graph g0 = erdos_renyi(prm.n, prm.p, derive_seed(prm.seed, seed_id::kGraphNominal));
  const Graph g1 = planted_dense_block(g0, prm.n0_true, prm.q,
                                       derive_seed(prm.seed, seed_id::kGraphPost));
  const ShiftOperator s0(g0, ShiftKind::Adjacency);
  const ShiftOperator s1(g1, ShiftKind::Adjacency);
  const FilterCoefficients filt(prm.coeffs);
  const Subspace u0 = dominant_subspace_of(filt, s0, prm.k).subspace;
  const SubspaceFamily blind = SubspaceFamily::blind();
  const auto catalog_entries = community_catalog(prm.n, prm.p, prm.q, prm.n0_grid,
                                                 filt, prm.k);
  const SubspaceFamily catalog = SubspaceFamily::catalog(catalog_entries);

  const long calib_len = prm.calib_blocks * prm.b;
  const auto calib0 = synthesize_stream({s0, s1, filt, filt, calib_len + 1, calib_len,
                                         derive_seed(prm.seed, seed_id::kCalibNominal)});
  const auto calib1 = synthesize_stream({s0, s1, filt, filt, 1, calib_len,
                                         derive_seed(prm.seed, seed_id::kCalibPost)});
  const auto calib_vhats0 = block_subspaces(calib0, prm.b, prm.k);
  const auto calib_vhats1 = block_subspaces(calib1, prm.b, prm.k);

  const auto nominal_stream = [&](long trial, long len) {
    return synthesize_stream({s0, s1, filt, filt, len + 1, len,
                              derive_seed(prm.seed, seed_id::kNominalTrialBase + trial)});
  };
  const auto post_stream = [&](long trial, long len) {
    return synthesize_stream({s0, s1, filt, filt, 1, len,
                              derive_seed(prm.seed, seed_id::kPostTrialBase + trial)});
  };

  const auto results = detail::arl_family_sweep(
      {{"catalog", &catalog}, {"blind", &blind}}, {prm.c_catalog, prm.c_blind}, u0,
      prm.b, prm.k, prm.trials, len0, len1, prm.eta_points, prm.c_margin,
      calib_vhats0, calib_vhats1, nominal_stream, post_stream);

  std::vector<ArlRow> rows = results[0].rows;
  rows.insert(rows.end(), results[1].rows.begin(), results[1].rows.end());
  const double dominance = dominance_fraction(results[0].rows, results[1].rows);

  // Which candidate block size the catalog picks on post-change data.
  std::vector<long> hist(catalog_entries.size(), 0);
  for (const auto& v : calib_vhats1)
    ++hist[nearest_family_member(catalog, v, u0).gamma_index];

  RunArtifacts art;
  write_arl_csv_file((dir / "arl.csv").string(), rows);
  art.files.push_back("arl.csv");
  write_subspace_csv_file((dir / "u0.csv").string(), u0);
  art.files.push_back("u0.csv");
  write_catalog_csv_file((dir / "catalog.csv").string(), catalog_entries);
  art.files.push_back("catalog.csv");
  {
    auto out = detail::open_output((dir / "gamma_hist.csv").string());
    out << "gamma,count\n";
    for (std::size_t i = 0; i < hist.size(); ++i)
      out << catalog_entries[i].label << "," << hist[i] << "\n";
  }
  art.files.push_back("gamma_hist.csv");
  write_edge_list_file((dir / "graph_nominal.txt").string(), g0);
  art.files.push_back("graph_nominal.txt");
  write_edge_list_file((dir / "graph_post.txt").string(), g1);
  art.files.push_back("graph_post.txt");

  Json hist_json = Json::array();
  for (std::size_t i = 0; i < hist.size(); ++i)
    hist_json.push_back(Json{{"gamma", catalog_entries[i].label}, {"count", hist[i]}});

  const long blocks_per_trial0 = len0 / prm.b;
  const long blocks_per_trial1 = len1 / prm.b;
  Json summary{{"experiment", "community-arl"},
               {"version", kVersion},
               {"seed", prm.seed},
               {"alarm_block", nullptr},
               {"blocks_consumed", prm.trials * (blocks_per_trial0 + blocks_per_trial1)},
               {"config",
                Json{{"catalog",
                      detector_config_json({catalog, u0, results[0].cal.c,
                                            std::numeric_limits<double>::infinity(), prm.k,
                                            prm.b, Windowing::Disjoint})},
                     {"blind",
                      detector_config_json({blind, u0, results[1].cal.c,
                                            std::numeric_limits<double>::infinity(), prm.k,
                                            prm.b, Windowing::Disjoint})}}},
               {"n", prm.n},
               {"p", prm.p},
               {"q", prm.q},
               {"n0_true", prm.n0_true},
               {"trials", prm.trials},
               {"blocks_per_trial_nominal", blocks_per_trial0},
               {"blocks_per_trial_post", blocks_per_trial1},
               {"calibration",
                Json{{"catalog", family_calibration_json(results[0].cal)},
                     {"blind", family_calibration_json(results[1].cal)}}},
               {"eta_grid_catalog", results[0].eta_grid},
               {"eta_grid_blind", results[1].eta_grid},
               {"gamma_hist", hist_json},
               {"dominance_fraction", dominance}};
  detail::write_json_file((dir / "summary.json").string(), summary);
  art.files.push_back("summary.json");
  detail::write_json_file((dir / "provenance.json").string(),
                          detail::provenance_json("community-arl", prm));
  art.files.push_back("provenance.json");
  art.summary = std::move(summary);
  return art;
}

// ---------------------------------------------------------------------------
// Experiment: detect on a signal CSV. Optionally estimates u0 from a warm-up
// prefix, then slides the detector over the remainder. When a ground-truth
// change sample is supplied, reports the fraction of pre-change blocks with
// S above threshold (false alarm rate) and the reaction time in samples.
// ---------------------------------------------------------------------------

inline RunArtifacts csv_detect(const CsvDetectParams& prm) {
  const auto dir = detail::prepare_outdir(prm.outdir);
  const SignalCsv data =
      prm.input == "-" ? read_signal_csv(std::cin) : read_signal_csv_file(prm.input);
  const long total = static_cast<long>(data.signals.size());
  const Eigen::Index n = data.signals.front().values.size();

  if (prm.b < 1 || prm.k < 1 || prm.k > n)
    throw std::invalid_argument("csv_detect: bad b or k");
  Windowing windowing;
  if (prm.window == "sliding")
    windowing = Windowing::Sliding;
  else if (prm.window == "disjoint")
    windowing = Windowing::Disjoint;
  else
    throw std::invalid_argument("csv_detect: window must be 'sliding' or 'disjoint'");

  std::optional<Subspace> u0;
  if (!prm.u0_path.empty()) {
    if (prm.warmup != 0)
      throw std::invalid_argument("csv_detect: give either a u0 file or a warm-up length");
    u0 = read_subspace_csv_file(prm.u0_path);
  } else {
    if (prm.warmup < prm.k)
      throw std::invalid_argument("csv_detect: warm-up must provide at least k samples");
    if (prm.warmup >= total)
      throw std::invalid_argument("csv_detect: warm-up swallows the whole stream");
    SignalBlock warm;
    warm.samples.resize(n, prm.warmup);
    for (long j = 0; j < prm.warmup; ++j) warm.samples.col(j) = data.signals[j].values;
    u0 = estimate_dominant_subspace(warm, prm.k);
  }
  if (u0->n() != n) throw std::invalid_argument("csv_detect: u0 dimension differs from signals");

  SubspaceFamily family = SubspaceFamily::blind();
  if (prm.family == "spike")
    family = SubspaceFamily::delta_spike();
  else if (prm.family == "catalog")
    family = SubspaceFamily::catalog(read_catalog_csv_file(prm.catalog_path));
  else if (prm.family != "blind")
    throw std::invalid_argument("csv_detect: family must be spike, blind, or catalog");

  const DetectorConfig cfg{family, *u0, prm.c, prm.eta, prm.k, prm.b, windowing};
  const std::vector<GraphSignal> body(data.signals.begin() + prm.warmup, data.signals.end());
  const DetectionResult res = run_detector(cfg, body, false);

  const auto end_sample = [&](long ell) {
    return prm.warmup + (windowing == Windowing::Sliding ? ell + prm.b - 1 : ell * prm.b);
  };

  Json fa_rate = nullptr;
  Json reaction = nullptr;
  Json detection_sample = nullptr;
  if (prm.ground_truth > 0) {
    long pre = 0, pre_above = 0;
    std::optional<long> detect_ell;
    for (const auto& p : res.trace) {
      if (end_sample(p.ell) < prm.ground_truth) {
        ++pre;
        if (p.s >= prm.eta) ++pre_above;
      } else if (!detect_ell && p.s >= prm.eta) {
        detect_ell = p.ell;
      }
    }
    fa_rate = pre > 0 ? Json(static_cast<double>(pre_above) / pre) : Json(0.0);
    if (detect_ell) {
      detection_sample = end_sample(*detect_ell);
      reaction = end_sample(*detect_ell) - prm.ground_truth + 1;
    }
  }

  RunArtifacts art;
  write_trace_csv_file((dir / "trace.csv").string(), res.trace, prm.eta);
  art.files.push_back("trace.csv");
  write_subspace_csv_file((dir / "u0_used.csv").string(), *u0);
  art.files.push_back("u0_used.csv");

  Json summary{{"experiment", "csv-detect"},
               {"version", kVersion},
               {"seed", prm.seed},
               {"alarm_block", res.alarm_block ? Json(*res.alarm_block) : Json(nullptr)},
               {"blocks_consumed", res.blocks_consumed},
               {"blocks_skipped", res.blocks_skipped},
               {"config", detector_config_json(cfg)},
               {"n", n},
               {"samples", total},
               {"warmup", prm.warmup},
               {"ground_truth", prm.ground_truth > 0 ? Json(prm.ground_truth) : Json(nullptr)},
               {"false_alarm_rate", fa_rate},
               {"detection_sample", detection_sample},
               {"run_length_after_change", reaction}};
  detail::write_json_file((dir / "summary.json").string(), summary);
  art.files.push_back("summary.json");
  detail::write_json_file((dir / "provenance.json").string(),
                          detail::provenance_json("csv-detect", prm));
  art.files.push_back("provenance.json");
  art.summary = std::move(summary);
  return art;
}

// ---------------------------------------------------------------------------
// Provenance replay: rebuild the parameter set from a provenance.json and
// rerun the experiment into a fresh directory; artifacts are byte-identical.
// ---------------------------------------------------------------------------

inline RunArtifacts run_experiment_from_provenance(const Json& prov,
                                                   const std::string& outdir) {
  std::string name;
  try {
    name = prov.at("experiment").get<std::string>();
  } catch (const Json::exception&) {
    throw ParseError("provenance: missing 'experiment' field");
  }
  if (!prov.contains("params") || !prov.contains("seed"))
    throw ParseError("provenance: missing 'params' or 'seed' field");
  try {
    if (name == "spike-trace") {
      SpikeTraceParams p = prov.at("params").get<SpikeTraceParams>();
      p.seed = prov.at("seed").get<std::uint64_t>();
      p.outdir = outdir;
      return experiment_spike_trace(p);
    }
    if (name == "spike-arl") {
      SpikeArlParams p = prov.at("params").get<SpikeArlParams>();
      p.seed = prov.at("seed").get<std::uint64_t>();
      p.outdir = outdir;
      return experiment_spike_arl(p);
    }
    if (name == "community-arl") {
      CommunityArlParams p = prov.at("params").get<CommunityArlParams>();
      p.seed = prov.at("seed").get<std::uint64_t>();
      p.outdir = outdir;
      return experiment_community_arl(p);
    }
    if (name == "csv-detect") {
      CsvDetectParams p = prov.at("params").get<CsvDetectParams>();
      p.seed = prov.at("seed").get<std::uint64_t>();
      p.outdir = outdir;
      return csv_detect(p);
    }
  } catch (const Json::exception& e) {
    throw ParseError(std::string("provenance: malformed params: ") + e.what());
  }
  throw ParseError("provenance: unknown experiment '" + name + "'");
}

}  // namespace graphcpd
