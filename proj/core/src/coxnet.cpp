#include "survanchor/coxnet.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include "survanchor/error.hpp"

namespace survanchor::coxnet {
namespace {

using json = nlohmann::json;

constexpr double kNormGuard = 1e-12;

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Rows grouped by tied observed time, latest group first.
struct TimeGroups {
  std::vector<std::size_t> order;   // row indices, descending time
  std::vector<std::size_t> starts;  // group boundaries into `order`
};

TimeGroups group_by_time(const SurvivalLabels& labels) {
  TimeGroups g;
  g.order.resize(labels.size());
  std::iota(g.order.begin(), g.order.end(), std::size_t{0});
  std::stable_sort(g.order.begin(), g.order.end(), [&](std::size_t a, std::size_t b) {
    return labels.times[a] > labels.times[b];
  });
  for (std::size_t i = 0; i < g.order.size(); ++i) {
    if (i == 0 || labels.times[g.order[i]] != labels.times[g.order[i - 1]]) {
      g.starts.push_back(i);
    }
  }
  g.starts.push_back(g.order.size());
  return g;
}

double loss_impl(const Eigen::VectorXd& scores, const SurvivalLabels& labels,
                 Eigen::VectorXd* gradient) {
  const auto n = static_cast<std::size_t>(scores.size());
  if (labels.size() != n || labels.events.size() != n) {
    throw Error(ErrorCode::LengthMismatch,
                fmt::format("{} scores for {} labels", n, labels.size()));
  }
  if (!labels.any_event()) {
    throw Error(ErrorCode::NoEventsInBatch, "batch contains no events");
  }
  const double shift = scores.maxCoeff();
  const TimeGroups groups = group_by_time(labels);
  const std::size_t group_count = groups.starts.size() - 1;

  // Descending pass: risk set of a group = all rows at or after its time.
  std::vector<double> risk_sum(group_count);
  std::vector<int> group_events(group_count, 0);
  double running = 0.0;
  double loss = 0.0;
  for (std::size_t g = 0; g < group_count; ++g) {
    for (std::size_t k = groups.starts[g]; k < groups.starts[g + 1]; ++k) {
      const std::size_t row = groups.order[k];
      running += std::exp(scores[static_cast<Eigen::Index>(row)] - shift);
      group_events[g] += labels.events[row];
    }
    risk_sum[g] = running;
    if (group_events[g] == 0) continue;
    const double log_risk = shift + std::log(running);
    for (std::size_t k = groups.starts[g]; k < groups.starts[g + 1]; ++k) {
      const std::size_t row = groups.order[k];
      if (labels.events[row] == 1) {
        loss -= scores[static_cast<Eigen::Index>(row)] - log_risk;
      }
    }
  }

  if (gradient) {
    // Ascending pass: row k collects 1/R_i from every event i with y_i <= y_k.
    gradient->resize(static_cast<Eigen::Index>(n));
    double inverse_risk = 0.0;
    for (std::size_t g = group_count; g-- > 0;) {
      inverse_risk += group_events[g] / risk_sum[g];
      for (std::size_t k = groups.starts[g]; k < groups.starts[g + 1]; ++k) {
        const std::size_t row = groups.order[k];
        const auto r = static_cast<Eigen::Index>(row);
        (*gradient)[r] = std::exp(scores[r] - shift) * inverse_risk - labels.events[row];
      }
    }
  }
  return loss;
}

void init_layer(DenseLayer& layer, std::size_t in, std::size_t out, double bound,
                std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uniform(-bound, bound);
  layer.weight.resize(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in));
  for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) layer.weight(r, c) = uniform(rng);
  }
  layer.bias = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(out));
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j, Eigen::Index rows, Eigen::Index cols) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows) {
    throw Error(ErrorCode::DimensionMismatch, "weight matrix has the wrong row count");
  }
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw Error(ErrorCode::DimensionMismatch, "weight matrix has the wrong column count");
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

Eigen::VectorXd vector_from_json(const json& j, Eigen::Index size) {
  const auto v = j.get<std::vector<double>>();
  if (static_cast<Eigen::Index>(v.size()) != size) {
    throw Error(ErrorCode::DimensionMismatch, "bias vector has the wrong length");
  }
  return Eigen::Map<const Eigen::VectorXd>(v.data(), size);
}

// Forward activations kept for the backward pass.
struct ForwardCache {
  std::vector<Eigen::MatrixXd> inputs;  // input to each encoder layer
  std::vector<Eigen::MatrixXd> pre;     // pre-activation of each encoder layer
  Eigen::MatrixXd embedding;
  Eigen::VectorXd norms;  // row norms before unit normalization
};

struct Adam {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  std::size_t step = 0;

  explicit Adam(Eigen::Index size)
      : m(Eigen::VectorXd::Zero(size)), v(Eigen::VectorXd::Zero(size)) {}

  void update(Eigen::VectorXd& params, const Eigen::VectorXd& grad, double lr) {
    ++step;
    m = beta1 * m + (1.0 - beta1) * grad;
    v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
    params.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  }
};

}  // namespace

double cox_loss(const Eigen::VectorXd& scores, const SurvivalLabels& labels) {
  return loss_impl(scores, labels, nullptr);
}

Eigen::VectorXd cox_loss_gradient(const Eigen::VectorXd& scores,
                                  const SurvivalLabels& labels) {
  Eigen::VectorXd g;
  loss_impl(scores, labels, &g);
  return g;
}

double cox_loss_and_gradient(const Eigen::VectorXd& scores,
                             const SurvivalLabels& labels, Eigen::VectorXd& gradient) {
  return loss_impl(scores, labels, &gradient);
}

// ---------------------------------------------------------------------------

std::string to_string(FinalActivation a) {
  return a == FinalActivation::UnitNorm ? "unit_norm" : "relu";
}

FinalActivation parse_final_activation(const std::string& text) {
  if (text == "unit_norm") return FinalActivation::UnitNorm;
  if (text == "relu") return FinalActivation::Relu;
  throw Error(ErrorCode::InvalidArgument, "unknown final activation '" + text + "'");
}

void MlpArchitecture::validate() const {
  if (input_dim < 1 || layers < 1 || embedding_dim < 1) {
    throw Error(ErrorCode::InvalidArgument,
                "architecture needs input_dim, layers and embedding_dim >= 1");
  }
}

CoxMlp::CoxMlp(const MlpArchitecture& arch) : arch_(arch) {
  arch.validate();
  std::mt19937_64 rng(arch.seed);
  encoder_.resize(arch.layers);
  for (std::size_t l = 0; l < arch.layers; ++l) {
    const std::size_t in = l == 0 ? arch.input_dim : arch.embedding_dim;
    const bool relu = l + 1 < arch.layers || arch.final_activation == FinalActivation::Relu;
    const double fan_in = static_cast<double>(in);
    const double bound = relu ? std::sqrt(6.0 / fan_in) : std::sqrt(3.0 / fan_in);
    init_layer(encoder_[l], in, arch.embedding_dim, bound, rng);
  }
  init_layer(head_, arch.embedding_dim, 1,
             std::sqrt(3.0 / static_cast<double>(arch.embedding_dim)), rng);
}

namespace {

ForwardCache forward(const CoxMlp& net, const Eigen::MatrixXd& inputs,
                     std::size_t* degenerate_rows) {
  const auto& arch = net.architecture();
  if (static_cast<std::size_t>(inputs.cols()) != arch.input_dim) {
    throw Error(ErrorCode::DimensionMismatch,
                fmt::format("model expects {} features, got {}", arch.input_dim,
                            inputs.cols()));
  }
  ForwardCache cache;
  Eigen::MatrixXd h = inputs;
  const auto& layers = net.encoder();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    cache.inputs.push_back(h);
    Eigen::MatrixXd z = h * layers[l].weight.transpose();
    z.rowwise() += layers[l].bias.transpose();
    cache.pre.push_back(z);
    const bool last = l + 1 == layers.size();
    if (last && arch.final_activation == FinalActivation::UnitNorm) {
      cache.norms = z.rowwise().norm();
      std::size_t degenerate = 0;
      for (Eigen::Index r = 0; r < z.rows(); ++r) {
        if (cache.norms[r] < kNormGuard) {
          ++degenerate;
        } else {
          z.row(r) /= cache.norms[r];
        }
      }
      if (degenerate_rows) *degenerate_rows = degenerate;
      h = std::move(z);
    } else {
      h = z.cwiseMax(0.0);
    }
  }
  if (degenerate_rows && arch.final_activation != FinalActivation::UnitNorm) {
    *degenerate_rows = 0;
  }
  cache.embedding = std::move(h);
  return cache;
}

}  // namespace

Eigen::MatrixXd CoxMlp::encode(const Eigen::MatrixXd& inputs,
                               std::size_t* degenerate_rows) const {
  return forward(*this, inputs, degenerate_rows).embedding;
}

Eigen::VectorXd CoxMlp::head_scores(const Eigen::MatrixXd& embeddings) const {
  if (embeddings.cols() != head_.weight.cols()) {
    throw Error(ErrorCode::DimensionMismatch,
                fmt::format("head expects d = {}, got {}", head_.weight.cols(),
                            embeddings.cols()));
  }
  Eigen::VectorXd s = embeddings * head_.weight.row(0).transpose();
  s.array() += head_.bias[0];
  return s;
}

Eigen::VectorXd CoxMlp::risk_scores(const Eigen::MatrixXd& inputs) const {
  return head_scores(encode(inputs));
}

std::size_t CoxMlp::parameter_count() const {
  std::size_t count = 0;
  for (const auto& layer : encoder_) {
    count += static_cast<std::size_t>(layer.weight.size() + layer.bias.size());
  }
  return count + static_cast<std::size_t>(head_.weight.size() + head_.bias.size());
}

Eigen::VectorXd CoxMlp::parameters() const {
  Eigen::VectorXd flat(static_cast<Eigen::Index>(parameter_count()));
  Eigen::Index at = 0;
  auto put = [&](const auto& block) {
    flat.segment(at, block.size()) = Eigen::Map<const Eigen::VectorXd>(block.data(), block.size());
    at += block.size();
  };
  for (const auto& layer : encoder_) {
    put(layer.weight);
    put(layer.bias);
  }
  put(head_.weight);
  put(head_.bias);
  return flat;
}

void CoxMlp::set_parameters(const Eigen::VectorXd& flat) {
  if (static_cast<std::size_t>(flat.size()) != parameter_count()) {
    throw Error(ErrorCode::DimensionMismatch, "flat parameter vector has the wrong size");
  }
  Eigen::Index at = 0;
  auto take = [&](auto& block) {
    Eigen::Map<Eigen::VectorXd>(block.data(), block.size()) = flat.segment(at, block.size());
    at += block.size();
  };
  for (auto& layer : encoder_) {
    take(layer.weight);
    take(layer.bias);
  }
  take(head_.weight);
  take(head_.bias);
}

double CoxMlp::loss_and_gradient(const Eigen::MatrixXd& inputs,
                                 const SurvivalLabels& labels,
                                 Eigen::VectorXd& gradient) const {
  const ForwardCache cache = forward(*this, inputs, nullptr);
  Eigen::VectorXd scores = cache.embedding * head_.weight.row(0).transpose();
  scores.array() += head_.bias[0];

  Eigen::VectorXd dscore;
  const double loss = cox_loss_and_gradient(scores, labels, dscore);

  // Gradient blocks in the same order as parameters().
  std::vector<Eigen::MatrixXd> dweights(encoder_.size());
  std::vector<Eigen::VectorXd> dbiases(encoder_.size());
  const Eigen::RowVectorXd dhead_w = dscore.transpose() * cache.embedding;
  const double dhead_b = dscore.sum();

  Eigen::MatrixXd dh = dscore * head_.weight.row(0);  // n x d
  for (std::size_t l = encoder_.size(); l-- > 0;) {
    const Eigen::MatrixXd& z = cache.pre[l];
    Eigen::MatrixXd dz;
    const bool last = l + 1 == encoder_.size();
    if (last && arch_.final_activation == FinalActivation::UnitNorm) {
      dz = dh;
      for (Eigen::Index r = 0; r < z.rows(); ++r) {
        const double norm = cache.norms[r];
        if (norm < kNormGuard) continue;
        const Eigen::RowVectorXd u = z.row(r) / norm;
        dz.row(r) = (dh.row(r) - u * u.dot(dh.row(r))) / norm;
      }
    } else {
      dz = dh.cwiseProduct((z.array() > 0.0).cast<double>().matrix());
    }
    dweights[l] = dz.transpose() * cache.inputs[l];
    dbiases[l] = dz.colwise().sum().transpose();
    if (l > 0) dh = dz * encoder_[l].weight;
  }

  gradient.resize(static_cast<Eigen::Index>(parameter_count()));
  Eigen::Index at = 0;
  auto put = [&](const auto& block) {
    gradient.segment(at, block.size()) =
        Eigen::Map<const Eigen::VectorXd>(block.data(), block.size());
    at += block.size();
  };
  for (std::size_t l = 0; l < encoder_.size(); ++l) {
    put(dweights[l]);
    put(dbiases[l]);
  }
  const Eigen::MatrixXd dhead_w_mat = dhead_w;
  put(dhead_w_mat);
  gradient[at] = dhead_b;
  return loss;
}

json CoxMlp::to_json() const {
  json layers = json::array();
  for (const auto& layer : encoder_) {
    layers.push_back({{"weight", matrix_to_json(layer.weight)},
                      {"bias", std::vector<double>(layer.bias.data(),
                                                   layer.bias.data() + layer.bias.size())}});
  }
  return {{"architecture",
           {{"input_dim", arch_.input_dim},
            {"layers", arch_.layers},
            {"embedding_dim", arch_.embedding_dim},
            {"final_activation", to_string(arch_.final_activation)},
            {"seed", arch_.seed}}},
          {"encoder", std::move(layers)},
          {"head",
           {{"weight", matrix_to_json(head_.weight)},
            {"bias", std::vector<double>{head_.bias[0]}}}}};
}

CoxMlp CoxMlp::from_json(const json& j) {
  try {
    const auto& a = j.at("architecture");
    MlpArchitecture arch;
    arch.input_dim = a.at("input_dim").get<std::size_t>();
    arch.layers = a.at("layers").get<std::size_t>();
    arch.embedding_dim = a.at("embedding_dim").get<std::size_t>();
    arch.final_activation = parse_final_activation(a.at("final_activation").get<std::string>());
    arch.seed = a.at("seed").get<std::uint64_t>();
    CoxMlp net(arch);
    const auto& layers = j.at("encoder");
    if (layers.size() != arch.layers) {
      throw Error(ErrorCode::DimensionMismatch, "encoder layer count mismatch");
    }
    const auto d = static_cast<Eigen::Index>(arch.embedding_dim);
    for (std::size_t l = 0; l < arch.layers; ++l) {
      const auto in = static_cast<Eigen::Index>(l == 0 ? arch.input_dim : arch.embedding_dim);
      net.encoder_[l].weight = matrix_from_json(layers[l].at("weight"), d, in);
      net.encoder_[l].bias = vector_from_json(layers[l].at("bias"), d);
    }
    net.head_.weight = matrix_from_json(j.at("head").at("weight"), 1, d);
    net.head_.bias = vector_from_json(j.at("head").at("bias"), 1);
    return net;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedBundle, std::string("model file: ") + e.what());
  }
}

// ---------------------------------------------------------------------------

void TrainConfig::validate() const {
  if (batch_sizes.empty() || learning_rates.empty() || layer_counts.empty() ||
      embedding_dims.empty()) {
    throw Error(ErrorCode::InvalidArgument, "every hyperparameter grid must be nonempty");
  }
  for (auto b : batch_sizes) {
    if (b == 0) throw Error(ErrorCode::InvalidArgument, "batch size must be positive");
  }
  for (auto lr : learning_rates) {
    if (!(lr > 0.0)) throw Error(ErrorCode::InvalidArgument, "learning rate must be positive");
  }
  for (auto l : layer_counts) {
    if (l == 0) throw Error(ErrorCode::InvalidArgument, "layer count must be positive");
  }
  for (auto d : embedding_dims) {
    if (d == 0) throw Error(ErrorCode::InvalidArgument, "embedding dim must be positive");
  }
  if (max_epochs == 0) throw Error(ErrorCode::InvalidArgument, "max_epochs must be positive");
}

std::vector<GridPoint> expand_grid(const TrainConfig& config) {
  std::vector<GridPoint> grid;
  for (auto b : config.batch_sizes) {
    for (auto lr : config.learning_rates) {
      for (auto l : config.layer_counts) {
        for (auto d : config.embedding_dims) grid.push_back({b, lr, l, d});
      }
    }
  }
  return grid;
}

CoxMlp train_single(const Eigen::MatrixXd& train_inputs,
                    const SurvivalLabels& train_labels,
                    const Eigen::MatrixXd& val_inputs, const SurvivalLabels& val_labels,
                    const GridPoint& point, const TrainConfig& config,
                    std::uint64_t seed, std::size_t grid_index, GridOutcome& outcome,
                    std::vector<EpochRecord>& log) {
  MlpArchitecture arch;
  arch.input_dim = static_cast<std::size_t>(train_inputs.cols());
  arch.layers = point.layers;
  arch.embedding_dim = point.embedding_dim;
  arch.final_activation = config.final_activation;
  arch.seed = seed;
  CoxMlp net(arch);

  outcome.point = point;
  const std::size_t n = train_labels.size();
  const std::size_t batch = config.full_batch ? n : std::min(point.batch_size, n);
  std::mt19937_64 rng(mix_seed(seed, 1));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  Eigen::VectorXd params = net.parameters();
  Eigen::VectorXd best = params;
  Adam adam(params.size());
  double best_c = -1.0;
  std::size_t since_best = 0;

  Eigen::MatrixXd batch_x;
  SurvivalLabels batch_y;
  Eigen::VectorXd grad;
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    if (!config.full_batch) std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    std::size_t epoch_events = 0;
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t stop = std::min(n, start + batch);
      batch_x.resize(static_cast<Eigen::Index>(stop - start), train_inputs.cols());
      batch_y.times.clear();
      batch_y.events.clear();
      std::size_t events = 0;
      for (std::size_t i = start; i < stop; ++i) {
        batch_x.row(static_cast<Eigen::Index>(i - start)) =
            train_inputs.row(static_cast<Eigen::Index>(order[i]));
        batch_y.times.push_back(train_labels.times[order[i]]);
        batch_y.events.push_back(train_labels.events[order[i]]);
        events += static_cast<std::size_t>(train_labels.events[order[i]]);
      }
      if (events == 0) continue;
      const double loss = net.loss_and_gradient(batch_x, batch_y, grad);
      if (!std::isfinite(loss) || !grad.allFinite()) {
        throw Error(ErrorCode::DivergedLoss,
                    fmt::format("non-finite loss at epoch {}", epoch));
      }
      epoch_loss += loss;
      epoch_events += events;
      adam.update(params, grad, point.learning_rate);
      net.set_parameters(params);
    }
    const Eigen::VectorXd val_scores = net.risk_scores(val_inputs);
    const double c = survstats::concordance_index(
        std::vector<double>(val_scores.data(), val_scores.data() + val_scores.size()),
        val_labels);
    log.push_back({grid_index, epoch,
                   epoch_events ? epoch_loss / static_cast<double>(epoch_events) : 0.0, c});
    outcome.epochs_run = epoch;
    if (c > best_c) {
      best_c = c;
      best = params;
      outcome.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  outcome.best_val_concordance = best_c;
  net.set_parameters(best);
  return net;
}

CoxMlpModel train(const Eigen::MatrixXd& train_inputs, const SurvivalLabels& train_labels,
                  const Eigen::MatrixXd& val_inputs, const SurvivalLabels& val_labels,
                  const TrainConfig& config) {
  config.validate();
  if (train_labels.size() == 0 || val_labels.size() == 0) {
    throw Error(ErrorCode::EmptyGroup, "train and validation roles must be nonempty");
  }
  if (!train_labels.any_event() || !val_labels.any_event()) {
    throw Error(ErrorCode::NoEvents, "train and validation roles both need events");
  }
  if (static_cast<std::size_t>(train_inputs.rows()) != train_labels.size() ||
      static_cast<std::size_t>(val_inputs.rows()) != val_labels.size()) {
    throw Error(ErrorCode::LengthMismatch, "inputs and labels are not row-aligned");
  }
  if (train_inputs.cols() != val_inputs.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "train and validation feature counts differ");
  }

  const auto grid = expand_grid(config);
  std::vector<CoxMlp> nets(grid.size());
  std::vector<GridOutcome> outcomes(grid.size());
  std::vector<std::vector<EpochRecord>> logs(grid.size());

  auto run = [&](std::size_t g) {
    try {
      nets[g] = train_single(train_inputs, train_labels, val_inputs, val_labels, grid[g],
                             config, mix_seed(config.seed, g), g, outcomes[g], logs[g]);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DivergedLoss) throw;
      outcomes[g].point = grid[g];
      outcomes[g].failed = true;
      outcomes[g].failure = e.what();
    }
  };

  const std::size_t workers = std::max<std::size_t>(1, std::min(config.threads, grid.size()));
  if (workers == 1) {
    for (std::size_t g = 0; g < grid.size(); ++g) run(g);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t g = next++; g < grid.size(); g = next++) {
          try {
            run(g);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  }

  CoxMlpModel model;
  bool found = false;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    if (outcomes[g].failed) continue;
    if (!found || outcomes[g].best_val_concordance > outcomes[model.selected].best_val_concordance) {
      model.selected = g;
      found = true;
    }
  }
  if (!found) {
    throw Error(ErrorCode::DivergedLoss, "every grid point diverged");
  }
  model.network = nets[model.selected];
  model.grid = std::move(outcomes);
  for (auto& l : logs) model.log.insert(model.log.end(), l.begin(), l.end());

  const Eigen::VectorXd scores = model.network.risk_scores(train_inputs);
  model.baseline = survstats::fit_breslow(
      std::vector<double>(scores.data(), scores.data() + scores.size()), train_labels);
  const auto [lo, hi] = std::minmax_element(train_labels.times.begin(), train_labels.times.end());
  model.min_train_time = *lo;
  model.max_train_time = *hi;
  return model;
}

CoxMlpModel train(const data::SurvivalDataset& ds, const data::SplitPlan& plan,
                  const TrainConfig& config) {
  if (plan.roles.size() != ds.size()) {
    throw Error(ErrorCode::LengthMismatch, "split plan does not match the dataset");
  }
  const auto train_rows = plan.rows(data::SplitRole::Train);
  const auto val_rows = plan.rows(data::SplitRole::Validation);
  const auto train_ds = ds.subset(train_rows);
  const auto val_ds = ds.subset(val_rows);
  return train(train_ds.features, train_ds.labels, val_ds.features, val_ds.labels, config);
}

EmbeddingBundle encode(const CoxMlp& network, const Eigen::MatrixXd& inputs,
                       const std::vector<std::int64_t>& ids, const SurvivalLabels* labels,
                       std::string source) {
  if (static_cast<std::size_t>(inputs.rows()) != ids.size()) {
    throw Error(ErrorCode::InconsistentRowCount, "ids are not row-aligned with inputs");
  }
  EmbeddingBundle bundle;
  bundle.ids = ids;
  bundle.embeddings = network.encode(inputs);
  if (labels) bundle.labels = *labels;
  bundle.source = std::move(source);
  bundle.validate();
  return bundle;
}

// ---------------------------------------------------------------------------

json CoxMlpModel::to_json() const {
  json grid_json = json::array();
  for (const auto& g : grid) {
    json entry = {{"batch_size", g.point.batch_size},
                  {"learning_rate", g.point.learning_rate},
                  {"layers", g.point.layers},
                  {"embedding_dim", g.point.embedding_dim},
                  {"best_val_concordance", g.best_val_concordance},
                  {"best_epoch", g.best_epoch},
                  {"epochs_run", g.epochs_run},
                  {"failed", g.failed}};
    if (g.failed) entry["failure"] = g.failure;
    grid_json.push_back(std::move(entry));
  }
  return {{"network", network.to_json()},
          {"baseline", baseline.to_json()},
          {"grid", std::move(grid_json)},
          {"selected", selected},
          {"min_train_time", min_train_time},
          {"max_train_time", max_train_time}};
}

CoxMlpModel CoxMlpModel::from_json(const json& j) {
  CoxMlpModel m;
  try {
    m.network = CoxMlp::from_json(j.at("network"));
    m.baseline = survstats::BreslowBaseline::from_json(j.at("baseline"));
    m.selected = j.value("selected", std::size_t{0});
    m.min_train_time = j.at("min_train_time").get<double>();
    m.max_train_time = j.at("max_train_time").get<double>();
    for (const auto& g : j.value("grid", json::array())) {
      GridOutcome o;
      o.point = {g.at("batch_size").get<std::size_t>(), g.at("learning_rate").get<double>(),
                 g.at("layers").get<std::size_t>(), g.at("embedding_dim").get<std::size_t>()};
      o.best_val_concordance = g.at("best_val_concordance").get<double>();
      o.best_epoch = g.at("best_epoch").get<std::size_t>();
      o.epochs_run = g.at("epochs_run").get<std::size_t>();
      o.failed = g.at("failed").get<bool>();
      o.failure = g.value("failure", std::string{});
      m.grid.push_back(std::move(o));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedBundle, std::string("model file: ") + e.what());
  }
  return m;
}

std::string CoxMlpModel::log_csv() const {
  std::ostringstream out;
  out << "grid_index,epoch,loss,val_concordance\n";
  for (const auto& r : log) {
    out << fmt::format("{},{},{},{}\n", r.grid_index, r.epoch, r.loss, r.val_concordance);
  }
  return out.str();
}

}  // namespace survanchor::coxnet
