// Command-line front end: stream generation, detection on CSV data,
// run-length measurement, correction-parameter calibration, and the packaged
// experiments with provenance replay.
//
// Exit codes: 0 success, 1 usage error, 2 data/parse error, 3 calibration
// failure.

#include <cstdint>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "graphcpd/graphcpd.hpp"

namespace gc = graphcpd;

namespace {

double parse_eta(const std::string& s) {
  if (s == "inf" || s == "Inf" || s == "INF")
    return std::numeric_limits<double>::infinity();
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (...) {
    throw std::invalid_argument("eta must be a number or 'inf'");
  }
  if (pos != s.size()) throw std::invalid_argument("eta must be a number or 'inf'");
  return v;
}

struct GenerateOpts {
  std::string scenario = "spike";
  int n = 100;
  double p = -1.0;
  double q = -1.0;
  int ba_m = 1;
  int n0 = 40;
  std::vector<double> coeffs = {0.0, 0.0, 1.0};
  int k = 1;
  long tau = -1;
  long length = 1000;
  std::uint64_t seed = 0;
  std::string outdir;
};

void run_generate(const GenerateOpts& opt) {
  if (opt.scenario != "spike" && opt.scenario != "community")
    throw std::invalid_argument("generate: scenario must be 'spike' or 'community'");
  const double p = opt.p < 0.0 ? gc::default_er_density(opt.n) : opt.p;
  const double q = opt.q < 0.0 ? std::min(1.0, 5.0 * p) : opt.q;
  const long tau = opt.tau < 0 ? opt.length + 1 : opt.tau;

  const gc::Graph g0 =
      gc::erdos_renyi(opt.n, p, gc::derive_seed(opt.seed, gc::seed_id::kGraphNominal));
  const gc::Graph g1 =
      opt.scenario == "spike"
          ? gc::barabasi_albert(opt.n, opt.ba_m,
                                gc::derive_seed(opt.seed, gc::seed_id::kGraphPost))
          : gc::planted_dense_block(g0, opt.n0, q,
                                    gc::derive_seed(opt.seed, gc::seed_id::kGraphPost));
  const gc::ShiftOperator s0(g0, gc::ShiftKind::Adjacency);
  const gc::ShiftOperator s1(g1, gc::ShiftKind::Adjacency);
  const gc::FilterCoefficients filt(opt.coeffs);
  const gc::Subspace u0 = gc::dominant_subspace_of(filt, s0, opt.k).subspace;

  const auto stream = gc::synthesize_stream(
      {s0, s1, filt, filt, tau, opt.length,
       gc::derive_seed(opt.seed, gc::seed_id::kTraceStream)});

  const auto dir = std::filesystem::path(opt.outdir);
  std::filesystem::create_directories(dir);
  gc::write_signal_csv_file((dir / "stream.csv").string(), stream, tau);
  gc::write_subspace_csv_file((dir / "u0.csv").string(), u0);
  gc::write_edge_list_file((dir / "graph_nominal.txt").string(), g0);
  gc::write_edge_list_file((dir / "graph_post.txt").string(), g1);
  std::cout << "wrote stream.csv u0.csv graph_nominal.txt graph_post.txt to " << opt.outdir
            << "\n";
}

struct ArlOpts {
  std::string scenario = "spike";
  std::string family = "spike";
  int n = 100;
  double p = -1.0;
  double q = -1.0;
  int ba_m = 1;
  int n0 = 40;
  std::vector<int> n0_grid = {10, 20, 30, 40, 50, 60, 70, 80, 90, 100};
  std::vector<double> coeffs = {0.0, 0.0, 1.0};
  int b = 1;
  int k = 1;
  double c = 0.0;
  std::vector<double> etas;
  long trials = 10;
  long samples_per_trial = 200;
  std::uint64_t seed = 0;
  std::string outdir;
};

void run_arl(const ArlOpts& opt) {
  const double p = opt.p < 0.0 ? gc::default_er_density(opt.n) : opt.p;
  const double q = opt.q < 0.0 ? std::min(1.0, 5.0 * p) : opt.q;
  if (opt.etas.empty()) throw std::invalid_argument("arl: at least one --etas value is required");

  const gc::Graph g0 =
      gc::erdos_renyi(opt.n, p, gc::derive_seed(opt.seed, gc::seed_id::kGraphNominal));
  const gc::Graph g1 =
      opt.scenario == "spike"
          ? gc::barabasi_albert(opt.n, opt.ba_m,
                                gc::derive_seed(opt.seed, gc::seed_id::kGraphPost))
          : gc::planted_dense_block(g0, opt.n0, q,
                                    gc::derive_seed(opt.seed, gc::seed_id::kGraphPost));
  const gc::ShiftOperator s0(g0, gc::ShiftKind::Adjacency);
  const gc::ShiftOperator s1(g1, gc::ShiftKind::Adjacency);
  const gc::FilterCoefficients filt(opt.coeffs);
  const gc::Subspace u0 = gc::dominant_subspace_of(filt, s0, opt.k).subspace;

  gc::SubspaceFamily family = gc::SubspaceFamily::blind();
  if (opt.family == "spike")
    family = gc::SubspaceFamily::delta_spike();
  else if (opt.family == "catalog")
    family = gc::SubspaceFamily::catalog(
        gc::community_catalog(opt.n, p, q, opt.n0_grid, filt, opt.k));
  else if (opt.family != "blind")
    throw std::invalid_argument("arl: family must be spike, blind, or catalog");

  const auto nominal = [&](long t) {
    return gc::synthesize_stream(
        {s0, s1, filt, filt, opt.samples_per_trial + 1, opt.samples_per_trial,
         gc::derive_seed(opt.seed, gc::seed_id::kNominalTrialBase + t)});
  };
  const auto post = [&](long t) {
    return gc::synthesize_stream(
        {s0, s1, filt, filt, 1, opt.samples_per_trial,
         gc::derive_seed(opt.seed, gc::seed_id::kPostTrialBase + t)});
  };

  std::vector<gc::ArlRow> rows;
  for (const double eta : opt.etas) {
    const gc::DetectorConfig cfg{family, u0,    opt.c,
                                 eta,    opt.k, opt.b,
                                 gc::Windowing::Disjoint};
    const gc::ArlEstimate a0 = gc::measure_run_lengths(cfg, nominal, opt.trials);
    const gc::ArlEstimate a1 = gc::measure_run_lengths(cfg, post, opt.trials);
    rows.push_back({eta, a0.mean_blocks, a0.censored_fraction, a1.mean_blocks,
                    a1.censored_fraction, opt.family});
  }

  const auto dir = std::filesystem::path(opt.outdir);
  std::filesystem::create_directories(dir);
  gc::write_arl_csv_file((dir / "arl.csv").string(), rows);
  std::cout << "wrote arl.csv to " << opt.outdir << "\n";
}

struct CalibrateOpts {
  std::string nominal_path;
  std::string post_path;
  std::string u0_path;
  std::string family = "spike";
  std::string catalog_path;
  std::vector<int> n0_grid;
  int b = 1;
  int k = 1;
  std::string out_path;
};

void run_calibrate(const CalibrateOpts& opt) {
  const gc::Subspace u0 = gc::read_subspace_csv_file(opt.u0_path);
  const gc::SignalCsv nominal = gc::read_signal_csv_file(opt.nominal_path);
  const auto nominal_blocks = gc::disjoint_blocks(nominal.signals, opt.b);

  gc::SubspaceFamily family = gc::SubspaceFamily::blind();
  if (opt.family == "spike")
    family = gc::SubspaceFamily::delta_spike();
  else if (opt.family == "catalog")
    family = gc::SubspaceFamily::catalog(gc::read_catalog_csv_file(opt.catalog_path));
  else if (opt.family != "blind")
    throw std::invalid_argument("calibrate: family must be spike, blind, or catalog");

  const gc::DetectorConfig cfg{family, u0,    0.0,
                               std::numeric_limits<double>::infinity(),
                               opt.k,  opt.b, gc::Windowing::Disjoint};

  gc::CalibrationResult result{0.0, {}};
  if (!opt.post_path.empty()) {
    const gc::SignalCsv post = gc::read_signal_csv_file(opt.post_path);
    const auto post_blocks = gc::disjoint_blocks(post.signals, opt.b);
    result = gc::calibrate_c(cfg, nominal_blocks, &post_blocks);
  } else {
    result = gc::calibrate_c(cfg, nominal_blocks);
  }

  gc::Json out{{"c", result.c},
               {"mean_nominal", result.estimate.mean_nominal},
               {"sd_nominal", result.estimate.sd_nominal},
               {"mean_post", result.estimate.mean_post ? gc::Json(*result.estimate.mean_post)
                                                       : gc::Json(nullptr)},
               {"n_nominal", result.estimate.n_nominal},
               {"n_post", result.estimate.n_post}};
  std::cout << out.dump(2) << "\n";
  if (!opt.out_path.empty()) {
    auto f = std::ofstream(opt.out_path);
    f << out.dump(2) << "\n";
  }
}

template <typename Params, typename Runner>
int run_or_print(const Params& params, const std::string& name, bool print_spec,
                 const Runner& runner) {
  if (print_spec) {
    gc::Json spec{{"version", gc::kVersion},
                  {"experiment", name},
                  {"seed", params.seed},
                  {"params", gc::Json(params)}};
    std::cout << spec.dump(2) << "\n";
    return 0;
  }
  const gc::RunArtifacts art = runner(params);
  std::cout << "experiment " << name << ": wrote " << art.files.size() << " artifacts to "
            << params.outdir << "\n";
  if (art.summary.contains("dominance_fraction"))
    std::cout << "dominance_fraction = " << art.summary["dominance_fraction"] << "\n";
  if (art.summary.contains("calibrated_c"))
    std::cout << "calibrated_c = " << art.summary["calibrated_c"] << "\n";
  if (art.summary.contains("alarm_block") && !art.summary["alarm_block"].is_null())
    std::cout << "alarm_block = " << art.summary["alarm_block"] << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Streaming detection of graph-topology change points from graph signals"};
  app.set_version_flag("--version", gc::kVersion);
  app.require_subcommand(1);

  // generate ---------------------------------------------------------------
  GenerateOpts gen;
  auto* cmd_gen = app.add_subcommand("generate", "Synthesize a piecewise-stationary stream");
  cmd_gen->add_option("--scenario", gen.scenario, "spike | community")->capture_default_str();
  cmd_gen->add_option("--n", gen.n, "number of nodes")->capture_default_str();
  cmd_gen->add_option("--p", gen.p, "ER density (default 2 ln n / n)");
  cmd_gen->add_option("--q", gen.q, "community density (default 5p)");
  cmd_gen->add_option("--ba-m", gen.ba_m, "attachment edges per node")->capture_default_str();
  cmd_gen->add_option("--n0", gen.n0, "community block size")->capture_default_str();
  cmd_gen->add_option("--coeffs", gen.coeffs, "filter coefficients a0,a1,...")
      ->delimiter(',')
      ->capture_default_str();
  cmd_gen->add_option("--k", gen.k, "subspace dimension for u0")->capture_default_str();
  cmd_gen->add_option("--tau", gen.tau, "change sample, 1-based (default: no change)");
  cmd_gen->add_option("--length", gen.length, "number of samples")->capture_default_str();
  cmd_gen->add_option("--seed", gen.seed, "master seed")->required();
  cmd_gen->add_option("--out", gen.outdir, "output directory")->required();

  // detect -----------------------------------------------------------------
  gc::CsvDetectParams det;
  std::string det_eta = "inf";
  auto* cmd_det = app.add_subcommand("detect", "Run the detector over a signal CSV");
  cmd_det->add_option("--input", det.input, "signal CSV path, or - for stdin")->required();
  cmd_det->add_option("--u0", det.u0_path, "nominal subspace CSV");
  cmd_det->add_option("--warmup", det.warmup, "samples used to estimate u0");
  cmd_det->add_option("--family", det.family, "spike | blind | catalog")->capture_default_str();
  cmd_det->add_option("--catalog", det.catalog_path, "catalog CSV for --family catalog");
  cmd_det->add_option("--c", det.c, "correction parameter")->capture_default_str();
  cmd_det->add_option("--eta", det_eta, "alarm threshold (number or 'inf')")
      ->capture_default_str();
  cmd_det->add_option("--b", det.b, "block size")->capture_default_str();
  cmd_det->add_option("--k", det.k, "subspace dimension")->capture_default_str();
  cmd_det->add_option("--window", det.window, "sliding | disjoint")->capture_default_str();
  cmd_det->add_option("--ground-truth", det.ground_truth, "true change sample for scoring");
  cmd_det->add_option("--seed", det.seed, "recorded in the summary")->capture_default_str();
  cmd_det->add_option("--out", det.outdir, "output directory")->required();

  // arl ----------------------------------------------------------------
  ArlOpts arl;
  auto* cmd_arl = app.add_subcommand("arl", "Measure mean run lengths on synthetic streams");
  cmd_arl->add_option("--scenario", arl.scenario, "spike | community")->capture_default_str();
  cmd_arl->add_option("--family", arl.family, "spike | blind | catalog")->capture_default_str();
  cmd_arl->add_option("--n", arl.n)->capture_default_str();
  cmd_arl->add_option("--p", arl.p, "ER density (default 2 ln n / n)");
  cmd_arl->add_option("--q", arl.q, "community density (default 5p)");
  cmd_arl->add_option("--ba-m", arl.ba_m)->capture_default_str();
  cmd_arl->add_option("--n0", arl.n0, "true community size")->capture_default_str();
  cmd_arl->add_option("--n0-grid", arl.n0_grid, "catalog candidate sizes")->delimiter(',');
  cmd_arl->add_option("--coeffs", arl.coeffs)->delimiter(',')->capture_default_str();
  cmd_arl->add_option("--b", arl.b)->capture_default_str();
  cmd_arl->add_option("--k", arl.k)->capture_default_str();
  cmd_arl->add_option("--c", arl.c, "correction parameter")->required();
  cmd_arl->add_option("--etas", arl.etas, "thresholds eta1,eta2,...")->delimiter(',')->required();
  cmd_arl->add_option("--trials", arl.trials)->capture_default_str();
  cmd_arl->add_option("--samples-per-trial", arl.samples_per_trial)->capture_default_str();
  cmd_arl->add_option("--seed", arl.seed, "master seed")->required();
  cmd_arl->add_option("--out", arl.outdir, "output directory")->required();

  // calibrate ----------------------------------------------------------
  CalibrateOpts cal;
  auto* cmd_cal = app.add_subcommand("calibrate", "Pick the correction parameter from data");
  cmd_cal->add_option("--nominal", cal.nominal_path, "pre-change signal CSV")->required();
  cmd_cal->add_option("--post", cal.post_path, "post-change signal CSV (optional)");
  cmd_cal->add_option("--u0", cal.u0_path, "nominal subspace CSV")->required();
  cmd_cal->add_option("--family", cal.family, "spike | blind | catalog")->capture_default_str();
  cmd_cal->add_option("--catalog", cal.catalog_path, "catalog CSV for --family catalog");
  cmd_cal->add_option("--b", cal.b)->capture_default_str();
  cmd_cal->add_option("--k", cal.k)->capture_default_str();
  cmd_cal->add_option("--out", cal.out_path, "also write the JSON result here");

  // experiment -----------------------------------------------------------
  auto* cmd_exp = app.add_subcommand("experiment", "Packaged experiment recipes");
  cmd_exp->require_subcommand(1);

  gc::SpikeTraceParams st;
  bool st_print = false, st_no_cal = false;
  auto* cmd_st = cmd_exp->add_subcommand("spike-trace", "CUSUM path, ER to tree change");
  cmd_st->add_option("--n", st.n)->capture_default_str();
  cmd_st->add_option("--p", st.p, "ER density (default 2 ln n / n)");
  cmd_st->add_option("--ba-m", st.ba_m)->capture_default_str();
  cmd_st->add_option("--coeffs", st.coeffs)->delimiter(',')->capture_default_str();
  cmd_st->add_option("--b", st.b)->capture_default_str();
  cmd_st->add_option("--tau", st.tau)->capture_default_str();
  cmd_st->add_option("--length", st.length)->capture_default_str();
  cmd_st->add_option("--c-list", st.c_list, "correction parameters c1,c2,...")
      ->delimiter(',')
      ->capture_default_str();
  cmd_st->add_flag("--no-calibrated", st_no_cal, "skip the calibrated-c trace");
  cmd_st->add_option("--calib-blocks", st.calib_blocks)->capture_default_str();
  cmd_st->add_option("--seed", st.seed, "master seed")->required();
  cmd_st->add_option("--outdir", st.outdir, "output directory");
  cmd_st->add_flag("--print-spec", st_print, "print the resolved parameters and exit");

  gc::SpikeArlParams sa;
  bool sa_print = false;
  auto* cmd_sa = cmd_exp->add_subcommand("spike-arl", "Run-length curves, spike vs blind");
  cmd_sa->add_option("--n", sa.n)->capture_default_str();
  cmd_sa->add_option("--p", sa.p, "ER density (default 2 ln n / n)");
  cmd_sa->add_option("--ba-m", sa.ba_m)->capture_default_str();
  cmd_sa->add_option("--coeffs", sa.coeffs)->delimiter(',')->capture_default_str();
  cmd_sa->add_option("--b", sa.b)->capture_default_str();
  cmd_sa->add_option("--trials", sa.trials)->capture_default_str();
  cmd_sa->add_option("--nominal-samples", sa.nominal_samples)->capture_default_str();
  cmd_sa->add_option("--post-samples", sa.post_samples)->capture_default_str();
  cmd_sa->add_option("--eta-points", sa.eta_points)->capture_default_str();
  cmd_sa->add_option("--c-margin", sa.c_margin, "c = mean0 + margin * sd0")
      ->capture_default_str();
  cmd_sa->add_option("--c-spike", sa.c_spike, "explicit c for the spike family");
  cmd_sa->add_option("--c-blind", sa.c_blind, "explicit c for the blind family");
  cmd_sa->add_option("--calib-blocks", sa.calib_blocks)->capture_default_str();
  cmd_sa->add_option("--seed", sa.seed, "master seed")->required();
  cmd_sa->add_option("--outdir", sa.outdir, "output directory");
  cmd_sa->add_flag("--print-spec", sa_print, "print the resolved parameters and exit");

  gc::CommunityArlParams ca;
  bool ca_print = false;
  auto* cmd_ca = cmd_exp->add_subcommand("community-arl", "Run-length curves, catalog vs blind");
  cmd_ca->add_option("--n", ca.n)->capture_default_str();
  cmd_ca->add_option("--p", ca.p, "ER density (default 2 ln n / n)");
  cmd_ca->add_option("--q", ca.q, "community density (default 5p)");
  cmd_ca->add_option("--n0-true", ca.n0_true)->capture_default_str();
  cmd_ca->add_option("--n0-grid", ca.n0_grid, "catalog candidate sizes")->delimiter(',');
  cmd_ca->add_option("--coeffs", ca.coeffs)->delimiter(',')->capture_default_str();
  cmd_ca->add_option("--b", ca.b)->capture_default_str();
  cmd_ca->add_option("--k", ca.k)->capture_default_str();
  cmd_ca->add_option("--trials", ca.trials)->capture_default_str();
  cmd_ca->add_option("--nominal-samples", ca.nominal_samples)->capture_default_str();
  cmd_ca->add_option("--post-samples", ca.post_samples)->capture_default_str();
  cmd_ca->add_option("--eta-points", ca.eta_points)->capture_default_str();
  cmd_ca->add_option("--c-margin", ca.c_margin)->capture_default_str();
  cmd_ca->add_option("--c-catalog", ca.c_catalog, "explicit c for the catalog family");
  cmd_ca->add_option("--c-blind", ca.c_blind, "explicit c for the blind family");
  cmd_ca->add_option("--calib-blocks", ca.calib_blocks)->capture_default_str();
  cmd_ca->add_option("--seed", ca.seed, "master seed")->required();
  cmd_ca->add_option("--outdir", ca.outdir, "output directory");
  cmd_ca->add_flag("--print-spec", ca_print, "print the resolved parameters and exit");

  gc::CsvDetectParams cd;
  std::string cd_eta = "inf";
  bool cd_print = false;
  auto* cmd_cd = cmd_exp->add_subcommand("csv-detect", "Detection over an external signal CSV");
  cmd_cd->add_option("--input", cd.input, "signal CSV path, or - for stdin")->required();
  cmd_cd->add_option("--u0", cd.u0_path, "nominal subspace CSV");
  cmd_cd->add_option("--warmup", cd.warmup, "samples used to estimate u0");
  cmd_cd->add_option("--family", cd.family)->capture_default_str();
  cmd_cd->add_option("--catalog", cd.catalog_path);
  cmd_cd->add_option("--c", cd.c)->capture_default_str();
  cmd_cd->add_option("--eta", cd_eta, "number or 'inf'")->capture_default_str();
  cmd_cd->add_option("--b", cd.b)->capture_default_str();
  cmd_cd->add_option("--k", cd.k)->capture_default_str();
  cmd_cd->add_option("--window", cd.window)->capture_default_str();
  cmd_cd->add_option("--ground-truth", cd.ground_truth);
  cmd_cd->add_option("--seed", cd.seed, "master seed")->required();
  cmd_cd->add_option("--outdir", cd.outdir, "output directory");
  cmd_cd->add_flag("--print-spec", cd_print, "print the resolved parameters and exit");

  std::string replay_prov, replay_outdir;
  auto* cmd_replay = cmd_exp->add_subcommand("replay", "Re-run an experiment from provenance");
  cmd_replay->add_option("--provenance", replay_prov, "provenance.json path")->required();
  cmd_replay->add_option("--outdir", replay_outdir, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (cmd_gen->parsed()) {
      run_generate(gen);
    } else if (cmd_det->parsed()) {
      det.eta = parse_eta(det_eta);
      const gc::RunArtifacts art = gc::csv_detect(det);
      std::cout << art.summary.dump(2) << "\n";
    } else if (cmd_arl->parsed()) {
      run_arl(arl);
    } else if (cmd_cal->parsed()) {
      run_calibrate(cal);
    } else if (cmd_st->parsed()) {
      st.add_calibrated = !st_no_cal;
      return run_or_print(st.resolved(), "spike-trace", st_print, gc::experiment_spike_trace);
    } else if (cmd_sa->parsed()) {
      return run_or_print(sa.resolved(), "spike-arl", sa_print, gc::experiment_spike_arl);
    } else if (cmd_ca->parsed()) {
      return run_or_print(ca.resolved(), "community-arl", ca_print,
                          gc::experiment_community_arl);
    } else if (cmd_cd->parsed()) {
      cd.eta = parse_eta(cd_eta);
      return run_or_print(cd, "csv-detect", cd_print, gc::csv_detect);
    } else if (cmd_replay->parsed()) {
      const gc::Json prov = gc::load_json_file(replay_prov);
      const gc::RunArtifacts art = gc::run_experiment_from_provenance(prov, replay_outdir);
      std::cout << "replayed " << prov.at("experiment").get<std::string>() << ": wrote "
                << art.files.size() << " artifacts to " << replay_outdir << "\n";
    }
  } catch (const gc::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const gc::CalibrationError& e) {
    std::cerr << "calibration failure: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
