#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "graphcpd/detector.hpp"
#include "graphcpd/errors.hpp"
#include "graphcpd/family.hpp"
#include "graphcpd/graph.hpp"
#include "graphcpd/stream.hpp"
#include "graphcpd/subspace.hpp"

namespace graphcpd {

/// Shortest round-trippable decimal rendering used by every CSV artifact.
inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

namespace detail {

inline std::string chomp(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

inline double parse_double(const std::string& tok, long line) {
  double v = 0.0;
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  while (first != last && (*first == ' ' || *first == '\t')) ++first;
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc{} || res.ptr != last)
    throw ParseError("expected a number, got '" + tok + "'", line);
  return v;
}

inline long parse_long(const std::string& tok, long line) {
  long v = 0;
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  while (first != last && (*first == ' ' || *first == '\t')) ++first;
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc{} || res.ptr != last)
    throw ParseError("expected an integer, got '" + tok + "'", line);
  return v;
}

// Parse "key=value" tokens of a '#' comment header into the provided slots.
inline void parse_header_tokens(const std::string& line, long line_no,
                                std::optional<long>* n, std::optional<long>* tau,
                                std::optional<long>* k, std::string* gamma) {
  std::istringstream iss(line.substr(1));
  std::string tok;
  while (iss >> tok) {
    const std::size_t eq = tok.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = tok.substr(0, eq);
    const std::string val = tok.substr(eq + 1);
    if (key == "n" && n) *n = parse_long(val, line_no);
    else if (key == "tau" && tau) *tau = parse_long(val, line_no);
    else if (key == "k" && k) *k = parse_long(val, line_no);
    else if (key == "gamma" && gamma) *gamma = val;
  }
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "' for reading");
  return in;
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Graph edge lists: a "n=<count>" header followed by one "i j" line per edge,
// 0-based node labels.
// ---------------------------------------------------------------------------

inline void write_edge_list(std::ostream& out, const Graph& g) {
  out << "n=" << g.num_nodes() << "\n";
  for (const auto& [i, j] : g.edges()) out << i << " " << j << "\n";
}

inline Graph read_edge_list(std::istream& in) {
  std::string line;
  long line_no = 0;
  long n = -1;
  std::vector<std::pair<int, int>> edges;
  while (std::getline(in, line)) {
    ++line_no;
    line = detail::chomp(line);
    if (line.empty()) continue;
    if (n < 0) {
      if (line.rfind("n=", 0) != 0)
        throw ParseError("edge list must start with an n=<count> header", line_no);
      n = detail::parse_long(line.substr(2), line_no);
      continue;
    }
    std::istringstream iss(line);
    long i, j;
    if (!(iss >> i >> j))
      throw ParseError("expected an 'i j' edge line", line_no);
    std::string rest;
    if (iss >> rest) throw ParseError("trailing tokens after edge", line_no);
    edges.emplace_back(static_cast<int>(i), static_cast<int>(j));
  }
  if (n < 0) throw ParseError("empty edge list: missing n=<count> header");
  try {
    return Graph(static_cast<int>(n), std::move(edges));
  } catch (const std::invalid_argument& e) {
    throw ParseError(e.what());
  }
}

inline void write_edge_list_file(const std::string& path, const Graph& g) {
  auto out = detail::open_output(path);
  write_edge_list(out, g);
}

inline Graph read_edge_list_file(const std::string& path) {
  auto in = detail::open_input(path);
  return read_edge_list(in);
}

// ---------------------------------------------------------------------------
// Signal CSV: one sample per row, n comma-separated values, with an optional
// "# n=<n> tau=<tau>" comment header.
// ---------------------------------------------------------------------------

struct SignalCsv {
  std::vector<GraphSignal> signals;
  std::optional<long> n;
  std::optional<long> tau;
};

inline void write_signal_csv(std::ostream& out, const std::vector<GraphSignal>& signals,
                             std::optional<long> tau = std::nullopt) {
  if (!signals.empty()) {
    out << "# n=" << signals.front().values.size();
    if (tau) out << " tau=" << *tau;
    out << "\n";
  }
  for (const auto& s : signals) {
    for (Eigen::Index i = 0; i < s.values.size(); ++i) {
      if (i) out << ",";
      out << format_double(s.values(i));
    }
    out << "\n";
  }
}

inline SignalCsv read_signal_csv(std::istream& in) {
  SignalCsv out;
  std::string line;
  long line_no = 0;
  long width = -1;
  while (std::getline(in, line)) {
    ++line_no;
    line = detail::chomp(line);
    if (line.empty()) continue;
    if (line[0] == '#') {
      detail::parse_header_tokens(line, line_no, &out.n, &out.tau, nullptr, nullptr);
      continue;
    }
    const auto toks = detail::split(line, ',');
    if (width < 0) {
      width = static_cast<long>(toks.size());
      if (out.n && *out.n != width)
        throw ParseError("row width differs from header n", line_no);
    } else if (static_cast<long>(toks.size()) != width) {
      throw ParseError("ragged row: expected " + std::to_string(width) + " values, got " +
                           std::to_string(toks.size()),
                       line_no);
    }
    Eigen::VectorXd v(width);
    for (long i = 0; i < width; ++i) v(i) = detail::parse_double(toks[i], line_no);
    out.signals.push_back({std::move(v), static_cast<long>(out.signals.size()) + 1});
  }
  if (out.signals.empty()) throw ParseError("signal CSV holds no samples");
  if (!out.n) out.n = width;
  return out;
}

inline void write_signal_csv_file(const std::string& path,
                                  const std::vector<GraphSignal>& signals,
                                  std::optional<long> tau = std::nullopt) {
  auto out = detail::open_output(path);
  write_signal_csv(out, signals, tau);
}

inline SignalCsv read_signal_csv_file(const std::string& path) {
  auto in = detail::open_input(path);
  return read_signal_csv(in);
}

// ---------------------------------------------------------------------------
// Subspace CSV: "# n=<n> k=<k>" header (plus gamma=<label> for catalog
// members), then n rows of k comma-separated basis entries. A catalog file is
// a concatenation of such blocks.
// ---------------------------------------------------------------------------

inline void write_subspace_csv(std::ostream& out, const Subspace& s,
                               const std::string& label = "") {
  out << "# n=" << s.n() << " k=" << s.k();
  if (!label.empty()) out << " gamma=" << label;
  out << "\n";
  for (int r = 0; r < s.n(); ++r) {
    for (int c = 0; c < s.k(); ++c) {
      if (c) out << ",";
      out << format_double(s.basis()(r, c));
    }
    out << "\n";
  }
}

namespace detail {

inline std::optional<CatalogEntry> read_subspace_block(std::istream& in, long& line_no) {
  std::string line;
  std::optional<long> n, k;
  std::string gamma;
  while (std::getline(in, line)) {
    ++line_no;
    line = chomp(line);
    if (line.empty()) continue;
    if (line[0] != '#')
      throw ParseError("expected a '# n=<n> k=<k>' subspace header", line_no);
    parse_header_tokens(line, line_no, &n, nullptr, &k, &gamma);
    break;
  }
  if (!n && !k) return std::nullopt;  // clean EOF
  if (!n || !k || *n < 1 || *k < 1)
    throw ParseError("subspace header must carry positive n and k", line_no);
  Eigen::MatrixXd basis(*n, *k);
  for (long r = 0; r < *n; ++r) {
    if (!std::getline(in, line))
      throw ParseError("subspace block ended early: expected " + std::to_string(*n) + " rows",
                       line_no);
    ++line_no;
    line = chomp(line);
    const auto toks = split(line, ',');
    if (static_cast<long>(toks.size()) != *k)
      throw ParseError("expected " + std::to_string(*k) + " basis entries per row", line_no);
    for (long c = 0; c < *k; ++c) basis(r, c) = parse_double(toks[c], line_no);
  }
  try {
    return CatalogEntry{gamma, Subspace(std::move(basis))};
  } catch (const std::invalid_argument& e) {
    throw ParseError(e.what(), line_no);
  }
}

}  // namespace detail

inline Subspace read_subspace_csv(std::istream& in) {
  long line_no = 0;
  auto entry = detail::read_subspace_block(in, line_no);
  if (!entry) throw ParseError("empty subspace file");
  return entry->subspace;
}

inline void write_catalog_csv(std::ostream& out, const std::vector<CatalogEntry>& members) {
  for (const auto& m : members) write_subspace_csv(out, m.subspace, m.label);
}

inline std::vector<CatalogEntry> read_catalog_csv(std::istream& in) {
  std::vector<CatalogEntry> members;
  long line_no = 0;
  while (auto entry = detail::read_subspace_block(in, line_no))
    members.push_back(std::move(*entry));
  if (members.empty()) throw ParseError("catalog file holds no subspaces");
  return members;
}

inline void write_subspace_csv_file(const std::string& path, const Subspace& s,
                                    const std::string& label = "") {
  auto out = detail::open_output(path);
  write_subspace_csv(out, s, label);
}

inline Subspace read_subspace_csv_file(const std::string& path) {
  auto in = detail::open_input(path);
  return read_subspace_csv(in);
}

inline void write_catalog_csv_file(const std::string& path,
                                   const std::vector<CatalogEntry>& members) {
  auto out = detail::open_output(path);
  write_catalog_csv(out, members);
}

inline std::vector<CatalogEntry> read_catalog_csv_file(const std::string& path) {
  auto in = detail::open_input(path);
  return read_catalog_csv(in);
}

// ---------------------------------------------------------------------------
// Detector trace CSV: "ell,S,alarm" rows, where alarm flags S >= eta at that
// block (1/0). With eta = +inf the alarm column is all zeros.
// ---------------------------------------------------------------------------

struct TraceRow {
  long ell;
  double s;
  int alarm;
};

inline void write_trace_csv(std::ostream& out, const std::vector<TracePoint>& trace,
                            double eta) {
  out << "ell,S,alarm\n";
  for (const auto& p : trace)
    out << p.ell << "," << format_double(p.s) << "," << (p.s >= eta ? 1 : 0) << "\n";
}

inline std::vector<TraceRow> read_trace_csv(std::istream& in) {
  std::vector<TraceRow> rows;
  std::string line;
  long line_no = 0;
  bool saw_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    line = detail::chomp(line);
    if (line.empty()) continue;
    if (!saw_header) {
      if (line != "ell,S,alarm") throw ParseError("expected 'ell,S,alarm' header", line_no);
      saw_header = true;
      continue;
    }
    const auto toks = detail::split(line, ',');
    if (toks.size() != 3) throw ParseError("expected 3 columns", line_no);
    rows.push_back({detail::parse_long(toks[0], line_no),
                    detail::parse_double(toks[1], line_no),
                    static_cast<int>(detail::parse_long(toks[2], line_no))});
  }
  if (!saw_header) throw ParseError("empty trace file");
  return rows;
}

inline void write_trace_csv_file(const std::string& path,
                                 const std::vector<TracePoint>& trace, double eta) {
  auto out = detail::open_output(path);
  write_trace_csv(out, trace, eta);
}

inline std::vector<TraceRow> read_trace_csv_file(const std::string& path) {
  auto in = detail::open_input(path);
  return read_trace_csv(in);
}

// ---------------------------------------------------------------------------
// Run-length CSV: one row per (family, eta) grid point with nominal and
// post-change mean run lengths and their censored fractions.
// ---------------------------------------------------------------------------

struct ArlRow {
  double eta;
  double arl0;
  double arl0_censored_frac;
  double arl1;
  double arl1_censored_frac;
  std::string family;
};

inline void write_arl_csv(std::ostream& out, const std::vector<ArlRow>& rows) {
  out << "eta,arl0,arl0_censored_frac,arl1,arl1_censored_frac,family\n";
  for (const auto& r : rows)
    out << format_double(r.eta) << "," << format_double(r.arl0) << ","
        << format_double(r.arl0_censored_frac) << "," << format_double(r.arl1) << ","
        << format_double(r.arl1_censored_frac) << "," << r.family << "\n";
}

inline std::vector<ArlRow> read_arl_csv(std::istream& in) {
  std::vector<ArlRow> rows;
  std::string line;
  long line_no = 0;
  bool saw_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    line = detail::chomp(line);
    if (line.empty()) continue;
    if (!saw_header) {
      if (line != "eta,arl0,arl0_censored_frac,arl1,arl1_censored_frac,family")
        throw ParseError("unexpected run-length CSV header", line_no);
      saw_header = true;
      continue;
    }
    const auto toks = detail::split(line, ',');
    if (toks.size() != 6) throw ParseError("expected 6 columns", line_no);
    rows.push_back({detail::parse_double(toks[0], line_no),
                    detail::parse_double(toks[1], line_no),
                    detail::parse_double(toks[2], line_no),
                    detail::parse_double(toks[3], line_no),
                    detail::parse_double(toks[4], line_no), toks[5]});
  }
  if (!saw_header) throw ParseError("empty run-length file");
  return rows;
}

inline void write_arl_csv_file(const std::string& path, const std::vector<ArlRow>& rows) {
  auto out = detail::open_output(path);
  write_arl_csv(out, rows);
}

inline std::vector<ArlRow> read_arl_csv_file(const std::string& path) {
  auto in = detail::open_input(path);
  return read_arl_csv(in);
}

}  // namespace graphcpd
