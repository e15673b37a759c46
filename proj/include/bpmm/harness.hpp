#ifndef BPMM_HARNESS_HPP
#define BPMM_HARNESS_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "bpmm/changepoint.hpp"
#include "bpmm/metrics.hpp"
#include "bpmm/simgen.hpp"
#include "bpmm/types.hpp"

namespace bpmm::harness {

/// Schema-validated run configuration (unknown keys rejected). One document
/// drives every stage; command-line flags override single keys.
struct RunConfig {
  int schema_version = 1;
  std::uint64_t seed = 1;
  int threads = 0;
  std::string output_dir = "out";

  SimConfig sim;

  // fit stage
  std::string method = "idpac";  // idpac | idpmac | both | baseline
  HyperParams hyper;
  bool apply_prewhiten = false;
  int max_ar_order = 5;
  int baseline_window = 31;
  std::string data_path;        // optional explicit inputs
  std::string covariate_path;

  // postprocess stage
  std::vector<double> lambda_u_grid;  // empty = data-driven default
  double freq_threshold = 0.5;
  int cp_window = 2;
  int subgroups_K = 0;  // >0 fixed, 0 = mixture component count, -1 = elbow
  bool edge_level_cps = false;

  // evaluate stage
  std::string estimate_dir;
  std::string truth_dir;

  // reproduce-tables
  int table_seeds = 5;
  int table_spurious = 4;
};

RunConfig parse_config_json(const std::string& json_text);
RunConfig load_config(const std::string& path);
std::string config_hash(const RunConfig& cfg, const std::string& stage);

// exit codes: 0 ok, 1 usage/config error, 2 finished without full convergence
int cmd_simulate(const RunConfig& cfg, bool force);
int cmd_fit(const RunConfig& cfg, bool force);
int cmd_postprocess(const RunConfig& cfg, bool force);
int cmd_evaluate(const RunConfig& cfg, bool force);
int cmd_reproduce_tables(const RunConfig& cfg, bool force);

// truth artifacts round trip
void save_truth(const SimTruth& truth, const std::string& dir);
SimTruth load_truth(const std::string& dir);

struct MethodScores {
  MetricReport report;
  double cluster_cp_sensitivity = 0;
  double cluster_cp_false_positives = 0;
  ClusterAssignment subgroups;
  std::vector<double> f1_over_time;
};

/// Full post-processing + scoring pipeline for one fitted network set.
MethodScores score_method(const DynamicNetworkSet& nets,
                          const std::vector<Eigen::MatrixXi>& labels, const SimTruth& truth,
                          const RunConfig& cfg);

struct TablesResult {
  // per-seed rows, aggregated means last
  double idpac_ce = 0, idpac_vi = 0;
  double naive_ce = 0, naive_vi = 0;
  double idpmac_ce = 0, idpmac_vi = 0;
  double idpac_cluster_sens = 0, idpac_cluster_fp = 0;
  double idpmac_cluster_sens = 0, idpmac_cluster_fp = 0;
  double idpac_mse = 0, baseline_mse = 0;
  double idpmac_f1 = 0, baseline_f1 = 0;
  double idpmac_curve_dominance = 0;  // fraction of scans idpmac F1 >= baseline
  double idpac_ce_spurious = 0, idpmac_ce_spurious = 0;
  double elapsed_seconds = 0;
  bool all_converged = true;
};

/// Runs the scaled simulation protocol end to end (per seed: simulate, fit
/// the covariate model, the covariate-naive variant, the precision model and
/// the sliding-window baseline, post-process, evaluate) and aggregates the
/// table-style summaries. Deterministic given cfg.seed.
TablesResult reproduce_tables(const RunConfig& cfg, const std::string& out_dir);

/// Mixture-size selection: fits each candidate and keeps the one minimizing
/// the subject-averaged segmentation criterion on the fitted correlations.
int select_H(const PanelDataset& panel, const HyperParams& base, const std::vector<int>& candidates,
             std::uint64_t seed, int threads);

}  // namespace bpmm::harness

#endif
