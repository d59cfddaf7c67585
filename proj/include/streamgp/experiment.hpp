#ifndef STREAMGP_EXPERIMENT_HPP
#define STREAMGP_EXPERIMENT_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "streamgp/field.hpp"
#include "streamgp/metrics.hpp"
#include "streamgp/optimizer.hpp"
#include "streamgp/types.hpp"

namespace streamgp {

enum class FieldSource { synthetic, csv };

/// Flat experiment description. The config-file format is one `key = value`
/// pair per line, `#` comments, unknown keys rejected. Keys mirror the
/// field names here; see load_experiment_config for the full list.
struct ExperimentConfig {
  FieldSource field_source = FieldSource::synthetic;
  std::string field_csv_path;
  Index field_width = 100;
  Index field_height = 100;
  std::uint64_t field_seed = 1;
  Hyperparameters field_hp;  // generative hyperparameters for synthetic runs

  Index transect_count = 44;
  Index samples_per_transect = 98;
  Index batch_size = 44;
  double noise_variance = 0.01;
  std::uint64_t observation_seed = 2;
  std::uint64_t test_noise_seed = 3;
  std::uint64_t pseudo_init_seed = 4;

  std::vector<ModelKind> models = {ModelKind::gpr, ModelKind::gpr_window,
                                   ModelKind::vsgp, ModelKind::spgp,
                                   ModelKind::ssgp};
  Index gpr_window = 500;
  Index vsgp_pseudo_count = 30;
  Index spgp_pseudo_count = 30;
  Index ssgp_pseudo_count = 30;
  /// > 0 switches SSGP to the schedule M = ceil(alpha * log^2 N + 1),
  /// recomputed per batch from the cumulative sample count.
  double ssgp_alpha = 0.0;
  /// Base of the logarithm in the schedule; 0 means natural log.
  double scaling_log_base = 0.0;

  Hyperparameters init_hp;  // shared starting point for every model
  OptimizerConfig optimizer;
  std::string output_path = "results.csv";

  ExperimentConfig();
  void validate() const;
};

struct ResultTable {
  std::vector<BatchRecord> rows;
  std::map<std::string, std::string> metadata;
};

ExperimentConfig load_experiment_config(const std::string& path);

/// Applies `key = value` to the config; shared by the file loader and CLI
/// overrides. Unknown keys throw.
void apply_config_entry(ExperimentConfig& config, const std::string& key,
                        const std::string& value);

/// Pseudo-point schedule M(N) = ceil(alpha * log^2 N + 1); log_base <= 0
/// selects the natural logarithm.
Index pseudo_count_schedule(double alpha, Index n_cumulative, double log_base);

/// Streams every batch through every configured model: update (warm-started
/// from the previous optimum), predict over the whole grid, score. A model
/// failing on a batch yields a row with failed=true computed from its last
/// good state, and the run continues.
ResultTable run_experiment(const ExperimentConfig& config);

/// One independent SSGP run per alpha plus a GPR reference run, on the same
/// field and stream. Model names in the combined table are tagged
/// `ssgp@alpha=<a>`.
ResultTable run_scaling_study(const ExperimentConfig& config,
                              const std::vector<double>& alphas);

/// Writes the results CSV plus a `<path>.meta.json` sidecar with the
/// metadata map. Columns: model,batch_index,cumulative_n,m_pseudo,rmse,
/// nlpd,train_seconds,predict_seconds,onboard_points,sigma_f2,ell_1,ell_2,
/// sigma_y2,failed. Doubles are %.17g so a load round-trips exactly.
void emit_results(const ResultTable& table, const std::string& path);

ResultTable load_results_csv(const std::string& path);

}  // namespace streamgp

#endif  // STREAMGP_EXPERIMENT_HPP
