#include <gtest/gtest.h>

#include <cstdlib>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "graphcpd/detector.hpp"
#include "graphcpd/errors.hpp"
#include "graphcpd/graph.hpp"
#include "graphcpd/io.hpp"
#include "graphcpd/stream.hpp"

using namespace graphcpd;

namespace {

Eigen::MatrixXd random_orthonormal(int n, int k, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd m(n, k);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < k; ++j) m(i, j) = normal(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
  return qr.householderQ() * Eigen::MatrixXd::Identity(n, k);
}

std::vector<GraphSignal> sample_signals() {
  const Graph g = erdos_renyi(3, 0.6, 2);
  const ShiftOperator s(g, ShiftKind::Adjacency);
  const FilterCoefficients f({0.0, 1.0});
  return synthesize_stream({s, s, f, f, 6, 5, 12});
}

}  // namespace

TEST(FormatDouble, RoundTripsThroughText) {
  const std::vector<double> values{0.0,        1.0,   -1.0, 1.0 / 3.0, 1e-300,
                                   6.02e23,    -0.25, 1e17, -9.81,
                                   0.09210340371976183};
  for (const double v : values) {
    const std::string text = format_double(v);
    EXPECT_EQ(std::strtod(text.c_str(), nullptr), v) << text;
  }
}

TEST(EdgeListIo, RoundTripsAndStaysByteStable) {
  const Graph g = erdos_renyi(20, 0.3, 11);
  std::ostringstream out;
  write_edge_list(out, g);

  std::istringstream in(out.str());
  const Graph back = read_edge_list(in);
  EXPECT_EQ(back.num_nodes(), g.num_nodes());
  EXPECT_EQ(back.edges(), g.edges());

  std::ostringstream again;
  write_edge_list(again, back);
  EXPECT_EQ(again.str(), out.str());
}

TEST(EdgeListIo, ReportsErrorsWithLineNumbers) {
  std::istringstream bad_header("x=3\n0 1\n");
  try {
    read_edge_list(bad_header);
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("(line 1)"), std::string::npos) << e.what();
  }

  std::istringstream extra("n=3\n0 1 9\n");
  try {
    read_edge_list(extra);
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("(line 2)"), std::string::npos) << e.what();
  }

  std::istringstream alpha("n=3\na b\n");
  EXPECT_THROW(read_edge_list(alpha), ParseError);

  std::istringstream empty("");
  EXPECT_THROW(read_edge_list(empty), ParseError);

  std::istringstream dup("n=3\n0 1\n1 0\n");
  EXPECT_THROW(read_edge_list(dup), ParseError);
}

TEST(SignalCsvIo, PreservesValuesHeaderAndOrder) {
  const auto signals = sample_signals();
  std::ostringstream out;
  write_signal_csv(out, signals, 4);

  std::istringstream in(out.str());
  const SignalCsv back = read_signal_csv(in);
  ASSERT_TRUE(back.n.has_value());
  ASSERT_TRUE(back.tau.has_value());
  EXPECT_EQ(*back.n, 3);
  EXPECT_EQ(*back.tau, 4);
  ASSERT_EQ(back.signals.size(), signals.size());
  for (std::size_t i = 0; i < signals.size(); ++i) {
    EXPECT_EQ(back.signals[i].time, static_cast<long>(i) + 1);
    EXPECT_TRUE(
        (back.signals[i].values.array() == signals[i].values.array()).all());
  }

  std::ostringstream no_tau;
  write_signal_csv(no_tau, signals);
  std::istringstream in2(no_tau.str());
  EXPECT_FALSE(read_signal_csv(in2).tau.has_value());
}

TEST(SignalCsvIo, RejectsMalformedRows) {
  std::istringstream ragged("# n=3 tau=2\n1,2,3\n4,5\n");
  try {
    read_signal_csv(ragged);
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("(line 3)"), std::string::npos) << e.what();
  }

  std::istringstream alpha("1,2\n1,x\n");
  EXPECT_THROW(read_signal_csv(alpha), ParseError);

  std::istringstream mismatch("# n=4\n1,2,3\n");
  EXPECT_THROW(read_signal_csv(mismatch), ParseError);

  std::istringstream empty("# n=3\n");
  EXPECT_THROW(read_signal_csv(empty), ParseError);
}

TEST(SubspaceCsvIo, RoundTripsBasesAndLabels) {
  std::mt19937_64 rng(5);
  const Subspace s(random_orthonormal(6, 2, rng));

  std::ostringstream out;
  write_subspace_csv(out, s);
  std::istringstream in(out.str());
  const Subspace back = read_subspace_csv(in);
  EXPECT_EQ(back.n(), 6);
  EXPECT_EQ(back.k(), 2);
  EXPECT_TRUE((back.basis().array() == s.basis().array()).all());

  std::vector<CatalogEntry> members;
  members.push_back({"10", Subspace(random_orthonormal(5, 1, rng))});
  members.push_back({"20", Subspace(random_orthonormal(5, 1, rng))});
  members.push_back({"30", Subspace(random_orthonormal(5, 1, rng))});
  std::ostringstream catalog_out;
  write_catalog_csv(catalog_out, members);
  std::istringstream catalog_in(catalog_out.str());
  const auto back_members = read_catalog_csv(catalog_in);
  ASSERT_EQ(back_members.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(back_members[i].label, members[i].label);
    EXPECT_TRUE((back_members[i].subspace.basis().array() ==
                 members[i].subspace.basis().array())
                    .all());
  }
}

TEST(SubspaceCsvIo, RejectsTruncatedBlocks) {
  std::istringstream truncated("# n=3 k=1\n1\n0\n");
  EXPECT_THROW(read_subspace_csv(truncated), ParseError);

  std::istringstream empty("");
  EXPECT_THROW(read_subspace_csv(empty), ParseError);
  std::istringstream empty2("");
  EXPECT_THROW(read_catalog_csv(empty2), ParseError);
}

TEST(TraceCsvIo, RoundTripsWithAlarmFlags) {
  const std::vector<double> drifts{0.4, 0.4, -0.1, 0.6, -0.9};
  const auto trace = cusum_trace_from_drifts(drifts, 0.05);
  const double eta = 0.7;

  std::ostringstream out;
  write_trace_csv(out, trace, eta);
  std::istringstream in(out.str());
  const auto rows = read_trace_csv(in);
  ASSERT_EQ(rows.size(), trace.size());
  for (std::size_t i = 0; i < trace.size(); ++i) {
    EXPECT_EQ(rows[i].ell, trace[i].ell);
    EXPECT_EQ(rows[i].s, trace[i].s);
    EXPECT_EQ(rows[i].alarm, trace[i].s >= eta ? 1 : 0);
  }

  std::ostringstream inf_out;
  write_trace_csv(inf_out, trace, std::numeric_limits<double>::infinity());
  std::istringstream inf_in(inf_out.str());
  for (const auto& row : read_trace_csv(inf_in)) EXPECT_EQ(row.alarm, 0);
}

TEST(TraceCsvIo, EnforcesHeaderAndShape) {
  std::istringstream bad_header("time,stat\n1,0.5\n");
  EXPECT_THROW(read_trace_csv(bad_header), ParseError);

  std::istringstream two_cols("ell,S,alarm\n1,0.5\n");
  try {
    read_trace_csv(two_cols);
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("(line 2)"), std::string::npos) << e.what();
  }

  std::istringstream empty("");
  EXPECT_THROW(read_trace_csv(empty), ParseError);
}

TEST(ArlCsvIo, RoundTripsRows) {
  const std::vector<ArlRow> rows{{0.5, 12.5, 0.1, 3.25, 0.0, "delta_spike"},
                                 {2.0, 40.0, 1.0, 7.5, 0.2, "blind"}};
  std::ostringstream out;
  write_arl_csv(out, rows);
  std::istringstream in(out.str());
  const auto back = read_arl_csv(in);
  ASSERT_EQ(back.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(back[i].eta, rows[i].eta);
    EXPECT_EQ(back[i].arl0, rows[i].arl0);
    EXPECT_EQ(back[i].arl0_censored_frac, rows[i].arl0_censored_frac);
    EXPECT_EQ(back[i].arl1, rows[i].arl1);
    EXPECT_EQ(back[i].arl1_censored_frac, rows[i].arl1_censored_frac);
    EXPECT_EQ(back[i].family, rows[i].family);
  }

  std::istringstream wrong("eta,arl0\n1,2\n");
  EXPECT_THROW(read_arl_csv(wrong), ParseError);

  std::istringstream short_row(
      "eta,arl0,arl0_censored_frac,arl1,arl1_censored_frac,family\n1,2,3\n");
  try {
    read_arl_csv(short_row);
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("(line 2)"), std::string::npos) << e.what();
  }
}

TEST(FileIo, MissingFilesRaiseParseErrors) {
  EXPECT_THROW(read_edge_list_file("/nonexistent/graph.txt"), ParseError);
  EXPECT_THROW(read_signal_csv_file("/nonexistent/stream.csv"), ParseError);
  EXPECT_THROW(read_subspace_csv_file("/nonexistent/u0.csv"), ParseError);
  EXPECT_THROW(read_arl_csv_file("/nonexistent/arl.csv"), ParseError);
}

TEST(FileIo, FileVariantsMatchStreamVariants) {
  const auto signals = sample_signals();
  const std::string dir = ::testing::TempDir();
  const std::string path = dir + "/graphcpd_signals.csv";
  write_signal_csv_file(path, signals, 3);
  const SignalCsv back = read_signal_csv_file(path);
  EXPECT_EQ(back.signals.size(), signals.size());
  ASSERT_TRUE(back.tau.has_value());
  EXPECT_EQ(*back.tau, 3);

  const Graph g = erdos_renyi(10, 0.4, 7);
  const std::string gpath = dir + "/graphcpd_graph.txt";
  write_edge_list_file(gpath, g);
  EXPECT_EQ(read_edge_list_file(gpath).edges(), g.edges());
}
