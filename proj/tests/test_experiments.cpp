#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "graphcpd/graphcpd.hpp"

using namespace graphcpd;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "graphcpd_exp_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  EXPECT_TRUE(in.is_open()) << path;
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

TEST(Defaults, ErDensityFollowsLogOverN) {
  EXPECT_NEAR(default_er_density(100), 0.09210340371976183, 1e-15);
  EXPECT_NEAR(default_er_density(50), 2.0 * std::log(50.0) / 50.0, 1e-15);
}

TEST(ExpectedPlantedAdjacency, FillsBlockAndBackground) {
  const Eigen::MatrixXd m = expected_planted_adjacency(6, 0.1, 0.5, 3);
  for (int i = 0; i < 6; ++i) EXPECT_EQ(m(i, i), 0.0);
  EXPECT_EQ(m(0, 1), 0.5);
  EXPECT_EQ(m(1, 2), 0.5);
  EXPECT_EQ(m(0, 3), 0.1);
  EXPECT_EQ(m(4, 5), 0.1);
  EXPECT_TRUE(m.isApprox(m.transpose()));
}

TEST(CommunityCatalog, BuildsOneMemberPerCandidateSize) {
  const FilterCoefficients f({0.0, 0.0, 1.0});
  const auto members = community_catalog(30, 0.1, 0.5, {5, 10, 15}, f, 2);
  ASSERT_EQ(members.size(), 3u);
  EXPECT_EQ(members[0].label, "5");
  EXPECT_EQ(members[1].label, "10");
  EXPECT_EQ(members[2].label, "15");
  for (const auto& m : members) {
    EXPECT_EQ(m.subspace.n(), 30);
    EXPECT_EQ(m.subspace.k(), 2);
  }
}

TEST(BlockHelpers, PartitionAndSkipDegenerates) {
  std::vector<GraphSignal> stream;
  for (long t = 1; t <= 7; ++t) {
    Eigen::VectorXd v(2);
    v << static_cast<double>(t), 1.0;
    stream.push_back({std::move(v), t});
  }
  const auto blocks = disjoint_blocks(stream, 2);
  ASSERT_EQ(blocks.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(blocks[i].block_index, static_cast<long>(i) + 1);
    EXPECT_EQ(blocks[i].samples.cols(), 2);
    EXPECT_EQ(blocks[i].samples(0, 0), static_cast<double>(2 * i + 1));
  }

  std::vector<GraphSignal> with_zero;
  with_zero.push_back({Eigen::VectorXd::Ones(2), 1});
  with_zero.push_back({Eigen::VectorXd::Zero(2), 2});
  with_zero.push_back({Eigen::VectorXd::Ones(2), 3});
  EXPECT_EQ(block_subspaces(with_zero, 1, 1).size(), 2u);
}

TEST(EtaGrid, SpansTheNominalExcursions) {
  const std::vector<std::vector<TracePoint>> traces{{{1, 0.5}, {2, 2.0}},
                                                    {{1, 1.0}}};
  const auto grid = make_eta_grid(traces, 5);
  ASSERT_EQ(grid.size(), 5u);
  EXPECT_NEAR(grid.front(), 2.0 * 1.05 / 200.0, 1e-12);
  EXPECT_NEAR(grid.back(), 2.0 * 1.05, 1e-12);
  for (std::size_t i = 1; i < grid.size(); ++i) EXPECT_GT(grid[i], grid[i - 1]);

  const std::vector<std::vector<TracePoint>> flat{{{1, 0.0}}};
  const auto fallback = make_eta_grid(flat, 3);
  EXPECT_NEAR(fallback.back(), 1.05, 1e-12);

  EXPECT_EQ(make_eta_grid(traces, 1).size(), 1u);
  EXPECT_THROW(make_eta_grid(traces, 0), std::invalid_argument);
}

TEST(RunLengthSummary, AveragesCrossingsWithCensoring) {
  const std::vector<std::vector<TracePoint>> traces{
      {{1, 0.1}, {2, 0.2}, {3, 5.0}, {4, 0.1}},
      {{1, 0.3}, {2, 0.1}, {3, 0.2}, {4, 0.4}}};
  const auto [mean, censored] = run_length_summary(traces, 1.0);
  EXPECT_DOUBLE_EQ(mean, 3.5);  // alarm at 3 plus censoring at 4
  EXPECT_DOUBLE_EQ(censored, 0.5);
}

TEST(DominanceFraction, ComparesAtMatchedNominalRunLength) {
  const auto row = [](double arl0, double arl1, const char* fam) {
    return ArlRow{1.0, arl0, 0.0, arl1, 0.0, fam};
  };
  const std::vector<ArlRow> blind{row(10, 8, "blind"), row(20, 4, "blind")};
  const std::vector<ArlRow> param{row(15, 5.9, "p"), row(15, 6.0, "p"),
                                  row(15, 6.1, "p"), row(5, 8.5, "p"),
                                  row(25, 4.0, "p")};
  EXPECT_NEAR(dominance_fraction(param, blind), 3.0 / 5.0, 1e-12);
  EXPECT_THROW(dominance_fraction({}, blind), std::invalid_argument);
}

TEST(SpikeTraceExperiment, CalibratedRunRisesOnlyAfterTheChange) {
  SpikeTraceParams prm;
  prm.seed = 1;
  prm.outdir = fresh_dir("spike_trace").string();
  const RunArtifacts art = experiment_spike_trace(prm);

  const Json& s = art.summary;
  EXPECT_EQ(s.at("tau").get<long>(), 600);
  EXPECT_EQ(s.at("pre_change_blocks").get<long>(), 599);
  EXPECT_EQ(s.at("blocks_consumed").get<long>(), 1000);
  EXPECT_NEAR(s.at("p").get<double>(), 0.09210340371976183, 1e-15);

  const auto& traces = s.at("traces");
  ASSERT_EQ(traces.size(), 2u);
  EXPECT_FALSE(traces[0].at("calibrated").get<bool>());
  EXPECT_DOUBLE_EQ(traces[0].at("c").get<double>(), 0.01);
  EXPECT_GT(traces[0].at("mean_pre_increment").get<double>(), 0.01);
  EXPECT_GT(traces[0].at("s_pre_change_end").get<double>(), 1.0);

  EXPECT_TRUE(traces[1].at("calibrated").get<bool>());
  const double c_cal = s.at("calibrated_c").get<double>();
  EXPECT_GT(c_cal, 0.05);
  EXPECT_LT(c_cal, 0.15);
  EXPECT_DOUBLE_EQ(traces[1].at("s_pre_change_end").get<double>(), 0.0);
  EXPECT_GT(traces[1].at("s_final").get<double>(), 10.0);

  const auto& drift = s.at("drift_estimate");
  EXPECT_GT(drift.at("mean_nominal").get<double>(), 0.02);
  EXPECT_LT(drift.at("mean_nominal").get<double>(), 0.05);
  EXPECT_GT(drift.at("mean_post").get<double>(), 0.10);
  EXPECT_LT(drift.at("mean_post").get<double>(), 0.25);

  for (const char* name : {"summary.json", "provenance.json", "u0.csv",
                           "graph_nominal.txt", "graph_post.txt", "trace_c0.csv",
                           "trace_c1.csv"}) {
    EXPECT_TRUE(fs::exists(fs::path(prm.outdir) / name)) << name;
  }
  const auto rows = read_trace_csv_file((fs::path(prm.outdir) / "trace_c1.csv").string());
  EXPECT_EQ(rows.size(), 1000u);

  // The provenance record carries the resolved parameters but no paths.
  const Json prov = load_json_file((fs::path(prm.outdir) / "provenance.json").string());
  EXPECT_EQ(prov.at("experiment").get<std::string>(), "spike-trace");
  EXPECT_EQ(prov.at("seed").get<std::uint64_t>(), 1u);
  EXPECT_TRUE(prov.contains("params"));
  EXPECT_FALSE(prov.at("params").contains("outdir"));
}

TEST(SpikeArlExperiment, SpikeFamilyDominatesBlindAtSeedOne) {
  SpikeArlParams prm;
  prm.seed = 1;
  prm.outdir = fresh_dir("spike_arl").string();
  const RunArtifacts art = experiment_spike_arl(prm);

  EXPECT_GE(art.summary.at("dominance_fraction").get<double>(), 0.8);
  EXPECT_EQ(art.summary.at("eta_grid_delta_spike").size(), 10u);
  EXPECT_EQ(art.summary.at("eta_grid_blind").size(), 10u);

  const double c_spike =
      art.summary.at("calibration").at("delta_spike").at("c").get<double>();
  const double c_blind =
      art.summary.at("calibration").at("blind").at("c").get<double>();
  EXPECT_GT(c_spike, 0.02);
  EXPECT_LT(c_spike, 0.06);
  EXPECT_GT(c_blind, 0.8);
  EXPECT_LT(c_blind, 0.9);

  const auto rows = read_arl_csv_file((fs::path(prm.outdir) / "arl.csv").string());
  ASSERT_EQ(rows.size(), 20u);
  long spike_rows = 0, blind_rows = 0;
  for (const auto& r : rows) {
    if (r.family == "delta_spike") ++spike_rows;
    if (r.family == "blind") ++blind_rows;
    EXPECT_GT(r.eta, 0.0);
    EXPECT_GT(r.arl0, 0.0);
    EXPECT_GT(r.arl1, 0.0);
  }
  EXPECT_EQ(spike_rows, 10);
  EXPECT_EQ(blind_rows, 10);
}

TEST(CommunityArlExperiment, CatalogIdentifiesTheBlockAndDominatesBlind) {
  CommunityArlParams prm;
  prm.seed = 1;
  prm.outdir = fresh_dir("community_arl").string();
  const RunArtifacts art = experiment_community_arl(prm);

  EXPECT_GE(art.summary.at("dominance_fraction").get<double>(), 0.8);

  // Every post-change calibration block lands on the true block size.
  long total = 0;
  for (const auto& bucket : art.summary.at("gamma_hist")) {
    const long count = bucket.at("count").get<long>();
    total += count;
    if (bucket.at("gamma").get<std::string>() == "40")
      EXPECT_EQ(count, 200);
    else
      EXPECT_EQ(count, 0);
  }
  EXPECT_EQ(total, 200);

  const auto members =
      read_catalog_csv_file((fs::path(prm.outdir) / "catalog.csv").string());
  EXPECT_EQ(members.size(), 10u);
  EXPECT_TRUE(fs::exists(fs::path(prm.outdir) / "gamma_hist.csv"));
  EXPECT_TRUE(fs::exists(fs::path(prm.outdir) / "arl.csv"));
}

TEST(CommunityArlExperiment, NullChangeFailsCalibration) {
  CommunityArlParams prm;
  prm.seed = 1;
  prm.q = default_er_density(prm.n);  // post-change density equals nominal
  prm.outdir = fresh_dir("community_null").string();
  EXPECT_THROW(experiment_community_arl(prm), CalibrationError);
}

TEST(ProvenanceReplay, ReproducesEveryArtifactByteForByte) {
  SpikeTraceParams prm;
  prm.seed = 4;
  prm.outdir = fresh_dir("replay_a").string();
  const RunArtifacts first = experiment_spike_trace(prm);

  const Json prov = load_json_file((fs::path(prm.outdir) / "provenance.json").string());
  const fs::path dir_b = fresh_dir("replay_b");
  const RunArtifacts second = run_experiment_from_provenance(prov, dir_b.string());

  ASSERT_EQ(first.files, second.files);
  for (const auto& name : first.files) {
    EXPECT_EQ(read_bytes(fs::path(prm.outdir) / name), read_bytes(dir_b / name))
        << name;
  }
}

TEST(ProvenanceReplay, RejectsMalformedRecords) {
  const fs::path dir = fresh_dir("replay_bad");
  EXPECT_THROW(run_experiment_from_provenance(Json{{"seed", 1}}, dir.string()),
               ParseError);
  EXPECT_THROW(run_experiment_from_provenance(
                   Json{{"experiment", "spike-trace"}, {"seed", 1}}, dir.string()),
               ParseError);
  EXPECT_THROW(
      run_experiment_from_provenance(
          Json{{"experiment", "bogus"}, {"seed", 1}, {"params", Json::object()}},
          dir.string()),
      ParseError);
  EXPECT_THROW(run_experiment_from_provenance(
                   Json{{"experiment", "spike-trace"}, {"seed", 1}, {"params", 5}},
                   dir.string()),
               ParseError);
}

TEST(LoadJsonFile, WrapsParserFailures) {
  const fs::path dir = fresh_dir("json");
  const fs::path bad = dir / "bad.json";
  std::ofstream(bad) << "{ not json";
  EXPECT_THROW(load_json_file(bad.string()), ParseError);
  EXPECT_THROW(load_json_file((dir / "missing.json").string()), ParseError);
}

TEST(CsvDetect, ScoresDetectionAgainstGroundTruth) {
  const int n = 100;
  const Graph g0 = erdos_renyi(n, default_er_density(n), 501);
  const Graph g1 = barabasi_albert(n, 1, 502);
  const ShiftOperator s0(g0, ShiftKind::Adjacency);
  const ShiftOperator s1(g1, ShiftKind::Adjacency);
  const FilterCoefficients f({0.0, 0.0, 1.0});
  const Subspace u0 = dominant_subspace_of(f, s0, 1).subspace;
  const auto stream = synthesize_stream({s0, s1, f, f, 600, 700, 503});

  const fs::path dir = fresh_dir("csv_detect");
  write_signal_csv_file((dir / "stream.csv").string(), stream, 600);
  write_subspace_csv_file((dir / "u0.csv").string(), u0);

  CsvDetectParams prm;
  prm.input = (dir / "stream.csv").string();
  prm.u0_path = (dir / "u0.csv").string();
  prm.family = "spike";
  prm.c = 0.1;
  prm.eta = 2.0;
  prm.b = 1;
  prm.k = 1;
  prm.window = "disjoint";
  prm.ground_truth = 600;
  prm.seed = 9;
  prm.outdir = (dir / "given_u0").string();

  const RunArtifacts art = csv_detect(prm);
  const Json& s = art.summary;
  EXPECT_EQ(s.at("blocks_consumed").get<long>(), 700);
  EXPECT_DOUBLE_EQ(s.at("false_alarm_rate").get<double>(), 0.0);
  ASSERT_FALSE(s.at("detection_sample").is_null());
  const long detected = s.at("detection_sample").get<long>();
  EXPECT_GE(detected, 600);
  EXPECT_EQ(s.at("run_length_after_change").get<long>(), detected - 600 + 1);
  EXPECT_EQ(read_trace_csv_file((fs::path(prm.outdir) / "trace.csv").string()).size(),
            700u);

  // Same stream, but the nominal subspace is estimated from a warm-up prefix.
  CsvDetectParams warm = prm;
  warm.u0_path.clear();
  warm.warmup = 100;
  warm.outdir = (dir / "warmup").string();
  const RunArtifacts art2 = csv_detect(warm);
  EXPECT_EQ(art2.summary.at("blocks_consumed").get<long>(), 600);
  EXPECT_DOUBLE_EQ(art2.summary.at("false_alarm_rate").get<double>(), 0.0);
  EXPECT_FALSE(art2.summary.at("detection_sample").is_null());
}

TEST(CsvDetect, ValidatesItsArguments) {
  const fs::path dir = fresh_dir("csv_detect_bad");
  std::vector<GraphSignal> tiny;
  for (long t = 1; t <= 10; ++t) {
    Eigen::VectorXd v(2);
    v << 1.0, 0.5 * t;
    tiny.push_back({std::move(v), t});
  }
  write_signal_csv_file((dir / "s.csv").string(), tiny);
  write_subspace_csv_file((dir / "u0.csv").string(), Subspace::one_hot(2, 0));

  CsvDetectParams base;
  base.input = (dir / "s.csv").string();
  base.b = 1;
  base.k = 1;
  base.outdir = (dir / "out").string();

  CsvDetectParams both = base;
  both.u0_path = (dir / "u0.csv").string();
  both.warmup = 2;
  EXPECT_THROW(csv_detect(both), std::invalid_argument);

  CsvDetectParams neither = base;  // no u0 and warmup below k
  EXPECT_THROW(csv_detect(neither), std::invalid_argument);

  CsvDetectParams swallow = base;
  swallow.warmup = 10;
  EXPECT_THROW(csv_detect(swallow), std::invalid_argument);

  CsvDetectParams family = base;
  family.warmup = 2;
  family.family = "bogus";
  EXPECT_THROW(csv_detect(family), std::invalid_argument);

  CsvDetectParams window = base;
  window.warmup = 2;
  window.window = "bogus";
  EXPECT_THROW(csv_detect(window), std::invalid_argument);

  CsvDetectParams missing = base;
  missing.input = (dir / "missing.csv").string();
  missing.warmup = 2;
  EXPECT_THROW(csv_detect(missing), ParseError);
}
