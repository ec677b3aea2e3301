#include "survanchor/clusterlib.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "survanchor/error.hpp"
#include "survanchor/specfun.hpp"
#include "survanchor/survstats.hpp"

namespace survanchor::clusterlib {
namespace {

using json = nlohmann::json;

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void check_options(const Eigen::MatrixXd& x, const EmOptions& opts) {
  if (opts.k < 1) throw Error(ErrorCode::InvalidArgument, "k must be at least 1");
  if (static_cast<std::size_t>(x.rows()) < opts.k) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("need n >= k, got n = {} and k = {}", x.rows(), opts.k));
  }
  if (x.cols() < 1) throw Error(ErrorCode::InvalidArgument, "embeddings have zero columns");
}

// k-means++ seeding. `distance` is evaluated between a row and a chosen
// center row; the next center is drawn with probability proportional to
// the squared distance to the closest chosen center.
template <class Distance>
std::vector<Eigen::Index> seed_centers(const Eigen::MatrixXd& x, std::size_t k,
                                       std::mt19937_64& rng, Distance distance) {
  const Eigen::Index n = x.rows();
  std::vector<Eigen::Index> centers;
  std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
  centers.push_back(pick(rng));
  Eigen::VectorXd closest(n);
  for (Eigen::Index i = 0; i < n; ++i) closest[i] = distance(i, centers[0]);
  while (centers.size() < k) {
    const Eigen::VectorXd weights = closest.array().square();
    const double total = weights.sum();
    Eigen::Index chosen = 0;
    if (total > 0.0) {
      std::uniform_real_distribution<double> u(0.0, total);
      double target = u(rng);
      for (chosen = 0; chosen < n - 1; ++chosen) {
        target -= weights[chosen];
        if (target < 0.0) break;
      }
    } else {
      chosen = pick(rng);
    }
    centers.push_back(chosen);
    for (Eigen::Index i = 0; i < n; ++i) {
      closest[i] = std::min(closest[i], distance(i, chosen));
    }
  }
  return centers;
}

// Row-wise log-sum-exp normalization; returns total log-likelihood.
double normalize_responsibilities(Eigen::MatrixXd& log_joint) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < log_joint.rows(); ++i) {
    const double m = log_joint.row(i).maxCoeff();
    const double lse = m + std::log((log_joint.row(i).array() - m).exp().sum());
    log_joint.row(i) = (log_joint.row(i).array() - lse).exp();
    total += lse;
  }
  return total;
}

struct VmfModel {
  std::size_t dim;
  std::vector<VmfComponent> components;

  Eigen::MatrixXd log_joint(const Eigen::MatrixXd& x) const {
    const auto k = static_cast<Eigen::Index>(components.size());
    Eigen::MatrixXd out(x.rows(), k);
    for (Eigen::Index j = 0; j < k; ++j) {
      const auto& c = components[static_cast<std::size_t>(j)];
      const double offset = std::log(c.weight) + vmf_log_normalizer(dim, c.kappa);
      out.col(j) = (c.kappa * (x * c.mean_direction)).array() + offset;
    }
    return out;
  }

  void m_step(const Eigen::MatrixXd& x, const Eigen::MatrixXd& resp) {
    const double n = static_cast<double>(x.rows());
    for (Eigen::Index j = 0; j < resp.cols(); ++j) {
      auto& c = components[static_cast<std::size_t>(j)];
      const double mass = resp.col(j).sum();
      c.weight = mass / n;
      if (mass <= 0.0) continue;
      const Eigen::VectorXd resultant = x.transpose() * resp.col(j);
      const double length = resultant.norm();
      if (length > 0.0) c.mean_direction = resultant / length;
      c.kappa = solve_kappa(std::min(length / mass, 1.0), dim);
    }
  }

  void reseed(std::size_t j, const Eigen::VectorXd& point, double n) {
    auto& c = components[j];
    c.mean_direction = point.normalized();
    double kappa = 0.0;
    for (std::size_t o = 0; o < components.size(); ++o) {
      if (o != j) kappa += components[o].kappa;
    }
    c.kappa = components.size() > 1 ? kappa / static_cast<double>(components.size() - 1) : 1.0;
    c.weight = 1.0 / n;
  }

  double weight(std::size_t j) const { return components[j].weight; }
  void set_weight(std::size_t j, double w) { components[j].weight = w; }
};

struct GaussianModel {
  std::size_t dim;
  std::vector<GaussianComponent> components;

  Eigen::MatrixXd log_joint(const Eigen::MatrixXd& x) const {
    const auto k = static_cast<Eigen::Index>(components.size());
    const double log2pi = std::log(2.0 * std::numbers::pi);
    Eigen::MatrixXd out(x.rows(), k);
    for (Eigen::Index j = 0; j < k; ++j) {
      const auto& c = components[static_cast<std::size_t>(j)];
      const Eigen::ArrayXd inv_var = c.variance.array().inverse();
      const double offset = std::log(c.weight) -
                            0.5 * (static_cast<double>(dim) * log2pi +
                                   c.variance.array().log().sum());
      for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const Eigen::ArrayXd diff = x.row(i).transpose().array() - c.mean.array();
        out(i, j) = offset - 0.5 * (diff.square() * inv_var).sum();
      }
    }
    return out;
  }

  void m_step(const Eigen::MatrixXd& x, const Eigen::MatrixXd& resp) {
    const double n = static_cast<double>(x.rows());
    for (Eigen::Index j = 0; j < resp.cols(); ++j) {
      auto& c = components[static_cast<std::size_t>(j)];
      const double mass = resp.col(j).sum();
      c.weight = mass / n;
      if (mass <= 0.0) continue;
      c.mean = x.transpose() * resp.col(j) / mass;
      Eigen::VectorXd var = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
      for (Eigen::Index i = 0; i < x.rows(); ++i) {
        var.array() += resp(i, j) * (x.row(i).transpose() - c.mean).array().square();
      }
      c.variance = (var / mass).cwiseMax(kVarianceFloor);
    }
  }

  void reseed(std::size_t j, const Eigen::VectorXd& point, double n) {
    auto& c = components[j];
    c.mean = point;
    Eigen::VectorXd var = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
    for (std::size_t o = 0; o < components.size(); ++o) {
      if (o != j) var += components[o].variance;
    }
    c.variance = components.size() > 1
                     ? Eigen::VectorXd(var / static_cast<double>(components.size() - 1))
                     : Eigen::VectorXd::Ones(static_cast<Eigen::Index>(dim));
    c.weight = 1.0 / n;
  }

  double weight(std::size_t j) const { return components[j].weight; }
  void set_weight(std::size_t j, double w) { components[j].weight = w; }
};

Eigen::MatrixXd hard_responsibilities(const Eigen::MatrixXd& similarity) {
  Eigen::MatrixXd resp = Eigen::MatrixXd::Zero(similarity.rows(), similarity.cols());
  for (Eigen::Index i = 0; i < similarity.rows(); ++i) {
    Eigen::Index best = 0;
    similarity.row(i).maxCoeff(&best);
    resp(i, best) = 1.0;
  }
  return resp;
}

template <class Model>
void run_em(Model& model, const Eigen::MatrixXd& x, Eigen::MatrixXd resp,
            const EmOptions& opts, MixtureFit& fit) {
  const double n = static_cast<double>(x.rows());
  model.m_step(x, resp);
  double previous = -std::numeric_limits<double>::infinity();
  std::size_t rescues = 0;
  for (std::size_t iter = 1; iter <= opts.max_iter; ++iter) {
    // Rescue collapsed components before evaluating responsibilities.
    for (std::size_t j = 0; j < model.components.size(); ++j) {
      if (model.weight(j) >= kRescueWeight) continue;
      if (++rescues > kMaxRescues) {
        throw Error(ErrorCode::EmptyClusterCollapse,
                    fmt::format("component {} collapsed after {} rescues", j, kMaxRescues));
      }
      Eigen::Index worst = 0;
      resp.rowwise().maxCoeff().minCoeff(&worst);
      model.reseed(j, x.row(worst).transpose(), n);
      double total = 0.0;
      for (std::size_t o = 0; o < model.components.size(); ++o) total += model.weight(o);
      for (std::size_t o = 0; o < model.components.size(); ++o) {
        model.set_weight(o, model.weight(o) / total);
      }
      fit.rescue_iterations.push_back(iter);
      previous = -std::numeric_limits<double>::infinity();
    }

    resp = model.log_joint(x);
    const double ll = normalize_responsibilities(resp);
    fit.log_likelihood_trace.push_back(ll);
    fit.iterations = iter;
    fit.log_likelihood = ll;
    if (std::abs(ll - previous) / n < opts.tol) {
      fit.converged = true;
      break;
    }
    previous = ll;
    model.m_step(x, resp);
  }
  fit.responsibilities = std::move(resp);
  fit.assignments.resize(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    Eigen::Index best = 0;
    fit.responsibilities.row(i).maxCoeff(&best);
    fit.assignments[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
}

}  // namespace

std::string to_string(MixtureKind kind) {
  return kind == MixtureKind::Vmf ? "vmf" : "gaussian";
}

MixtureKind parse_mixture_kind(const std::string& text) {
  if (text == "vmf") return MixtureKind::Vmf;
  if (text == "gaussian") return MixtureKind::Gaussian;
  throw Error(ErrorCode::InvalidArgument, "unknown mixture kind '" + text + "'");
}

std::vector<std::size_t> MixtureFit::members(int component) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    if (assignments[i] == component) out.push_back(i);
  }
  return out;
}

json MixtureFit::to_json() const {
  json components = json::array();
  if (kind == MixtureKind::Vmf) {
    for (const auto& c : vmf) {
      components.push_back(
          {{"mean_direction", std::vector<double>(c.mean_direction.data(),
                                                  c.mean_direction.data() + c.mean_direction.size())},
           {"kappa", c.kappa},
           {"weight", c.weight}});
    }
  } else {
    for (const auto& c : gaussian) {
      components.push_back(
          {{"mean", std::vector<double>(c.mean.data(), c.mean.data() + c.mean.size())},
           {"variance",
            std::vector<double>(c.variance.data(), c.variance.data() + c.variance.size())},
           {"weight", c.weight}});
    }
  }
  return {{"kind", clusterlib::to_string(kind)},
          {"k", k()},
          {"components", std::move(components)},
          {"assignments", assignments},
          {"log_likelihood", log_likelihood},
          {"iterations", iterations},
          {"converged", converged}};
}

double vmf_log_normalizer(std::size_t dim, double kappa) {
  const double nu = 0.5 * static_cast<double>(dim) - 1.0;
  const double half_d = 0.5 * static_cast<double>(dim);
  return nu * std::log(kappa) - half_d * std::log(2.0 * std::numbers::pi) -
         specfun::log_bessel_i(nu, kappa);
}

double vmf_mean_resultant(std::size_t dim, double kappa) {
  return specfun::bessel_ratio(0.5 * static_cast<double>(dim) - 1.0, kappa);
}

double banerjee_kappa(double rbar, std::size_t dim) {
  const double d = static_cast<double>(dim);
  return (rbar * d - rbar * rbar * rbar) / (1.0 - rbar * rbar);
}

double solve_kappa(double rbar, std::size_t dim) {
  if (!(rbar > 0.0)) return kKappaMin;
  if (rbar >= 1.0) return kKappaMax;
  if (vmf_mean_resultant(dim, kKappaMax) <= rbar) return kKappaMax;
  if (vmf_mean_resultant(dim, kKappaMin) >= rbar) return kKappaMin;

  double lo = kKappaMin;
  double hi = kKappaMax;
  double kappa = std::clamp(banerjee_kappa(rbar, dim), kKappaMin, kKappaMax);
  const double d = static_cast<double>(dim);
  for (int iter = 0; iter < 100; ++iter) {
    const double a = vmf_mean_resultant(dim, kappa);
    const double f = a - rbar;
    if (f > 0.0) hi = kappa;
    else lo = kappa;
    if (std::abs(f) < 1e-15) break;
    const double slope = 1.0 - a * a - (d - 1.0) / kappa * a;
    double next = slope > 0.0 ? kappa - f / slope : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - kappa) <= 1e-13 * kappa) {
      kappa = next;
      break;
    }
    kappa = next;
  }
  return kappa;
}

Eigen::MatrixXd sample_vmf(const Eigen::VectorXd& mean_direction, double kappa,
                           std::size_t n, std::mt19937_64& rng) {
  const auto dim = mean_direction.size();
  if (dim < 2) throw Error(ErrorCode::InvalidArgument, "vMF sampling needs d >= 2");
  const Eigen::VectorXd mu = mean_direction.normalized();
  const double dm1 = static_cast<double>(dim - 1);
  const double b = dm1 / (2.0 * kappa + std::sqrt(4.0 * kappa * kappa + dm1 * dm1));
  const double x0 = (1.0 - b) / (1.0 + b);
  const double c = kappa * x0 + dm1 * std::log(1.0 - x0 * x0);
  std::gamma_distribution<double> gamma(0.5 * dm1, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  Eigen::MatrixXd out(static_cast<Eigen::Index>(n), dim);
  for (std::size_t i = 0; i < n; ++i) {
    double w = 0.0;
    while (true) {
      const double g1 = gamma(rng);
      const double g2 = gamma(rng);
      const double z = g1 / (g1 + g2);
      w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
      const double u = uniform(rng);
      if (kappa * w + dm1 * std::log(1.0 - x0 * w) - c >= std::log(u)) break;
    }
    Eigen::VectorXd v(dim);
    do {
      for (Eigen::Index k = 0; k < dim; ++k) v[k] = normal(rng);
      v -= mu * mu.dot(v);
    } while (v.norm() < 1e-12);
    v.normalize();
    out.row(static_cast<Eigen::Index>(i)) = (w * mu + std::sqrt(std::max(0.0, 1.0 - w * w)) * v).transpose();
  }
  return out;
}

MixtureFit fit_vmf_mixture(const Eigen::MatrixXd& x, const EmOptions& opts) {
  check_options(x, opts);
  if (x.cols() < 2) throw Error(ErrorCode::InvalidArgument, "vMF mixtures need d >= 2");
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double norm = x.row(i).norm();
    if (std::abs(norm - 1.0) > 1e-6) {
      throw Error(ErrorCode::NotUnitNorm,
                  fmt::format("row {} has norm {}, expected 1", i, norm));
    }
  }
  std::mt19937_64 rng(opts.seed);
  const auto centers = seed_centers(x, opts.k, rng, [&](Eigen::Index i, Eigen::Index c) {
    return std::max(0.0, 1.0 - x.row(i).dot(x.row(c)));
  });
  Eigen::MatrixXd center_rows(static_cast<Eigen::Index>(opts.k), x.cols());
  for (std::size_t j = 0; j < opts.k; ++j) {
    center_rows.row(static_cast<Eigen::Index>(j)) = x.row(centers[j]);
  }

  VmfModel model{static_cast<std::size_t>(x.cols()), {}};
  for (std::size_t j = 0; j < opts.k; ++j) {
    model.components.push_back(
        {x.row(centers[j]).transpose(), 1.0, 1.0 / static_cast<double>(opts.k)});
  }
  MixtureFit fit;
  fit.kind = MixtureKind::Vmf;
  run_em(model, x, hard_responsibilities(x * center_rows.transpose()), opts, fit);
  fit.vmf = std::move(model.components);
  return fit;
}

MixtureFit fit_gaussian_mixture(const Eigen::MatrixXd& x, const EmOptions& opts) {
  check_options(x, opts);
  std::mt19937_64 rng(opts.seed);
  const auto centers = seed_centers(x, opts.k, rng, [&](Eigen::Index i, Eigen::Index c) {
    return (x.row(i) - x.row(c)).norm();
  });
  Eigen::MatrixXd neg_dist(x.rows(), static_cast<Eigen::Index>(opts.k));
  for (std::size_t j = 0; j < opts.k; ++j) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      neg_dist(i, static_cast<Eigen::Index>(j)) = -(x.row(i) - x.row(centers[j])).squaredNorm();
    }
  }
  GaussianModel model{static_cast<std::size_t>(x.cols()), {}};
  for (std::size_t j = 0; j < opts.k; ++j) {
    model.components.push_back({x.row(centers[j]).transpose(),
                                Eigen::VectorXd::Ones(x.cols()),
                                1.0 / static_cast<double>(opts.k)});
  }
  MixtureFit fit;
  fit.kind = MixtureKind::Gaussian;
  run_em(model, x, hard_responsibilities(neg_dist), opts, fit);
  fit.gaussian = std::move(model.components);
  return fit;
}

MixtureFit fit_mixture(MixtureKind kind, const Eigen::MatrixXd& x, const EmOptions& opts) {
  return kind == MixtureKind::Vmf ? fit_vmf_mixture(x, opts) : fit_gaussian_mixture(x, opts);
}

// ---------------------------------------------------------------------------

double KSweepEntry::max_p() const {
  double m = 0.0;
  for (double p : p_values) m = std::max(m, p);
  return m;
}

const KSweepEntry* KSelectionReport::entry(std::size_t k) const {
  for (const auto& e : entries) {
    if (e.k == k) return &e;
  }
  return nullptr;
}

json KSelectionReport::to_json() const {
  json sweep = json::object();
  json details = json::array();
  for (const auto& e : entries) {
    sweep[std::to_string(e.k)] = e.p_values;
    json pairs = json::array();
    for (const auto& [a, b] : e.pairs) pairs.push_back({a, b});
    details.push_back({{"k", e.k},
                       {"pairs", std::move(pairs)},
                       {"cluster_sizes", e.cluster_sizes},
                       {"omitted_pairs", e.omitted_pairs},
                       {"no_event_pairs", e.no_event_pairs}});
  }
  json j = {{"k_sweep", std::move(sweep)}, {"details", std::move(details)}, {"chosen", chosen}};
  j["knee"] = knee ? json(*knee) : json(nullptr);
  return j;
}

KSelectionReport KSelectionReport::from_json(const json& j) {
  KSelectionReport r;
  for (const auto& [key, values] : j.at("k_sweep").items()) {
    KSweepEntry e;
    e.k = static_cast<std::size_t>(std::stoul(key));
    e.p_values = values.get<std::vector<double>>();
    r.entries.push_back(std::move(e));
  }
  std::sort(r.entries.begin(), r.entries.end(),
            [](const KSweepEntry& a, const KSweepEntry& b) { return a.k < b.k; });
  if (j.contains("details")) {
    for (const auto& d : j.at("details")) {
      const auto k = d.at("k").get<std::size_t>();
      for (auto& e : r.entries) {
        if (e.k != k) continue;
        for (const auto& p : d.at("pairs")) e.pairs.emplace_back(p[0].get<int>(), p[1].get<int>());
        e.cluster_sizes = d.at("cluster_sizes").get<std::vector<std::size_t>>();
        e.omitted_pairs = d.at("omitted_pairs").get<std::size_t>();
        e.no_event_pairs = d.at("no_event_pairs").get<std::size_t>();
      }
    }
  }
  if (j.contains("knee") && !j.at("knee").is_null()) r.knee = j.at("knee").get<std::size_t>();
  r.chosen = j.value("chosen", std::size_t{0});
  return r;
}

std::optional<std::size_t> knee_rule(const std::vector<KSweepEntry>& entries, double threshold) {
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].max_p() > threshold) {
      if (i == 0) return std::nullopt;
      return entries[i - 1].k;
    }
  }
  return std::nullopt;
}

KSweepEntry pairwise_logrank(const std::vector<int>& assignments, std::size_t k,
                             const SurvivalLabels& labels) {
  if (assignments.size() != labels.size()) {
    throw Error(ErrorCode::LengthMismatch, "labels are not row-aligned with embeddings");
  }
  KSweepEntry entry;
  entry.k = k;
  std::vector<std::vector<std::size_t>> clusters(k);
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    clusters[static_cast<std::size_t>(assignments[i])].push_back(i);
  }
  for (const auto& c : clusters) entry.cluster_sizes.push_back(c.size());
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a + 1; b < k; ++b) {
      if (clusters[a].empty() || clusters[b].empty()) {
        ++entry.omitted_pairs;
        continue;
      }
      const auto ga = labels.subset(clusters[a]);
      const auto gb = labels.subset(clusters[b]);
      double p = 1.0;
      if (ga.any_event() || gb.any_event()) {
        p = survstats::logrank_test(ga, gb).p_value;
      } else {
        ++entry.no_event_pairs;
      }
      entry.p_values.push_back(p);
      entry.pairs.emplace_back(static_cast<int>(a), static_cast<int>(b));
    }
  }
  return entry;
}

KSelectionReport k_sweep(const Eigen::MatrixXd& embeddings, const SurvivalLabels& labels,
                         std::size_t k_min, std::size_t k_max, MixtureKind kind,
                         std::uint64_t seed, double tol, std::size_t max_iter) {
  if (static_cast<std::size_t>(embeddings.rows()) != labels.size()) {
    throw Error(ErrorCode::LengthMismatch, "labels are not row-aligned with embeddings");
  }
  if (k_min < 1 || k_max < k_min) {
    throw Error(ErrorCode::InvalidArgument, "k range must satisfy 1 <= k_min <= k_max");
  }
  KSelectionReport report;
  for (std::size_t k = k_min; k <= k_max; ++k) {
    const EmOptions opts{k, stream_seed(seed, k), tol, max_iter};
    const MixtureFit fit = fit_mixture(kind, embeddings, opts);
    report.entries.push_back(pairwise_logrank(fit.assignments, k, labels));
  }
  report.knee = knee_rule(report.entries);
  if (report.knee) {
    report.chosen = *report.knee;
  } else {
    report.chosen = report.entries.front().max_p() > 0.01 ? k_min : k_max;
  }
  return report;
}

}  // namespace survanchor::clusterlib
