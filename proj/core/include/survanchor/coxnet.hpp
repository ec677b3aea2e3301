#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "survanchor/bundle.hpp"
#include "survanchor/data.hpp"
#include "survanchor/survstats.hpp"
#include "survanchor/types.hpp"

namespace survanchor::coxnet {

// ---------------------------------------------------------------------------
// Cox partial likelihood

/// Negative log partial likelihood with risk sets taken within the given
/// rows: L = -sum_{i: delta_i = 1} [s_i - log sum_{j: y_j >= y_i} exp(s_j)].
/// Throws NoEventsInBatch when no row has an event.
double cox_loss(const Eigen::VectorXd& scores, const SurvivalLabels& labels);

/// dL/ds for the loss above.
Eigen::VectorXd cox_loss_gradient(const Eigen::VectorXd& scores,
                                  const SurvivalLabels& labels);

/// Loss and gradient in one pass.
double cox_loss_and_gradient(const Eigen::VectorXd& scores,
                             const SurvivalLabels& labels,
                             Eigen::VectorXd& gradient);

// ---------------------------------------------------------------------------
// Network

enum class FinalActivation { UnitNorm, Relu };

std::string to_string(FinalActivation a);
FinalActivation parse_final_activation(const std::string& text);

struct MlpArchitecture {
  std::size_t input_dim = 1;
  std::size_t layers = 1;  // fully connected layers inside the encoder
  std::size_t embedding_dim = 1;
  FinalActivation final_activation = FinalActivation::UnitNorm;
  std::uint64_t seed = 0;

  void validate() const;
};

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;
};

/// f(x) = g(phi(x)): the encoder phi is a stack of dense layers with ReLU
/// between them and a final activation (unit-norm projection or ReLU); the
/// head g is a single affine map to one score.
class CoxMlp {
 public:
  CoxMlp() = default;
  /// Fan-in scaled uniform initialization (He bounds for ReLU layers).
  explicit CoxMlp(const MlpArchitecture& arch);

  const MlpArchitecture& architecture() const noexcept { return arch_; }
  std::vector<DenseLayer>& encoder() noexcept { return encoder_; }
  const std::vector<DenseLayer>& encoder() const noexcept { return encoder_; }
  DenseLayer& head() noexcept { return head_; }
  const DenseLayer& head() const noexcept { return head_; }

  /// phi(x) for each row of `inputs` (n x D). `degenerate_rows`, when given,
  /// receives the number of rows whose pre-normalization norm was below
  /// 1e-12 and were therefore left unnormalized.
  Eigen::MatrixXd encode(const Eigen::MatrixXd& inputs,
                         std::size_t* degenerate_rows = nullptr) const;
  /// g(u) for each embedding row.
  Eigen::VectorXd head_scores(const Eigen::MatrixXd& embeddings) const;
  /// f(x) for each input row.
  Eigen::VectorXd risk_scores(const Eigen::MatrixXd& inputs) const;

  std::size_t parameter_count() const;
  Eigen::VectorXd parameters() const;
  void set_parameters(const Eigen::VectorXd& flat);

  /// Cox loss over all rows of `inputs` (one risk structure) and its
  /// gradient with respect to parameters(), by backpropagation.
  double loss_and_gradient(const Eigen::MatrixXd& inputs,
                           const SurvivalLabels& labels,
                           Eigen::VectorXd& gradient) const;

  nlohmann::json to_json() const;
  static CoxMlp from_json(const nlohmann::json& j);

 private:
  MlpArchitecture arch_;
  std::vector<DenseLayer> encoder_;
  DenseLayer head_;
};

// ---------------------------------------------------------------------------
// Training

struct TrainConfig {
  std::vector<std::size_t> batch_sizes{64, 128};
  std::vector<double> learning_rates{0.01, 0.001};
  std::vector<std::size_t> layer_counts{1, 2, 3, 4};
  std::vector<std::size_t> embedding_dims{5, 6, 7, 8, 9, 10};
  std::size_t max_epochs = 100;
  std::size_t patience = 10;
  FinalActivation final_activation = FinalActivation::UnitNorm;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  /// Use the whole training role as one batch (exact global risk sets).
  bool full_batch = false;

  void validate() const;
};

struct GridPoint {
  std::size_t batch_size = 64;
  double learning_rate = 0.01;
  std::size_t layers = 1;
  std::size_t embedding_dim = 5;
};

std::vector<GridPoint> expand_grid(const TrainConfig& config);

struct EpochRecord {
  std::size_t grid_index = 0;
  std::size_t epoch = 0;
  double loss = 0.0;  // training loss per event, averaged over the epoch
  double val_concordance = 0.0;
};

struct GridOutcome {
  GridPoint point;
  double best_val_concordance = 0.0;
  std::size_t best_epoch = 0;
  std::size_t epochs_run = 0;
  bool failed = false;
  std::string failure;
};

struct CoxMlpModel {
  CoxMlp network;
  survstats::BreslowBaseline baseline;
  std::vector<EpochRecord> log;
  std::vector<GridOutcome> grid;
  std::size_t selected = 0;
  double min_train_time = 0.0;
  double max_train_time = 0.0;

  nlohmann::json to_json() const;
  static CoxMlpModel from_json(const nlohmann::json& j);
  /// CSV rows: grid_index,epoch,loss,val_concordance
  std::string log_csv() const;
};

/// Adam (0.9, 0.999, 1e-8) with per-epoch shuffling and early stopping on
/// validation concordance; keeps the best grid point and fits its Breslow
/// baseline on the training rows.
CoxMlpModel train(const Eigen::MatrixXd& train_inputs,
                  const SurvivalLabels& train_labels,
                  const Eigen::MatrixXd& val_inputs,
                  const SurvivalLabels& val_labels, const TrainConfig& config);

/// Convenience overload over the train/validation roles of a split.
CoxMlpModel train(const data::SurvivalDataset& ds, const data::SplitPlan& plan,
                  const TrainConfig& config);

/// Runs one grid point; exposed for tests and benchmarks.
CoxMlp train_single(const Eigen::MatrixXd& train_inputs,
                    const SurvivalLabels& train_labels,
                    const Eigen::MatrixXd& val_inputs,
                    const SurvivalLabels& val_labels, const GridPoint& point,
                    const TrainConfig& config, std::uint64_t seed,
                    std::size_t grid_index, GridOutcome& outcome,
                    std::vector<EpochRecord>& log);

/// phi(x) for each input row, row-aligned with `ids` and `labels`.
EmbeddingBundle encode(const CoxMlp& network, const Eigen::MatrixXd& inputs,
                       const std::vector<std::int64_t>& ids,
                       const SurvivalLabels* labels = nullptr,
                       std::string source = "coxnet");

}  // namespace survanchor::coxnet
