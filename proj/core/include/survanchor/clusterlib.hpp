#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <nlohmann/json.hpp>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "survanchor/types.hpp"

namespace survanchor::clusterlib {

enum class MixtureKind { Vmf, Gaussian };

std::string to_string(MixtureKind kind);
MixtureKind parse_mixture_kind(const std::string& text);

struct VmfComponent {
  Eigen::VectorXd mean_direction;  // unit norm
  double kappa = 1.0;
  double weight = 1.0;
};

struct GaussianComponent {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;  // diagonal, floored at kVarianceFloor
  double weight = 1.0;
};

inline constexpr double kKappaMin = 1e-3;
inline constexpr double kKappaMax = 1e4;
inline constexpr double kVarianceFloor = 1e-6;
inline constexpr double kRescueWeight = 1e-8;
inline constexpr std::size_t kMaxRescues = 3;

struct MixtureFit {
  MixtureKind kind = MixtureKind::Vmf;
  std::vector<VmfComponent> vmf;            // kind == Vmf
  std::vector<GaussianComponent> gaussian;  // kind == Gaussian
  Eigen::MatrixXd responsibilities;         // n x k, rows sum to 1
  std::vector<int> assignments;             // row argmax, 0-based
  double log_likelihood = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  /// Log-likelihood after every E-step. EM guarantees this is nondecreasing
  /// except right after a component rescue.
  std::vector<double> log_likelihood_trace;
  std::vector<std::size_t> rescue_iterations;

  std::size_t k() const noexcept {
    return kind == MixtureKind::Vmf ? vmf.size() : gaussian.size();
  }
  std::vector<std::size_t> members(int component) const;
  nlohmann::json to_json() const;
};

struct EmOptions {
  std::size_t k = 2;
  std::uint64_t seed = 0;
  double tol = 1e-6;  // on mean per-point log-likelihood change
  std::size_t max_iter = 500;
};

/// EM for a k-component von Mises-Fisher mixture. Seeding is k-means++ on
/// cosine distance; the concentration update starts from the Banerjee
/// approximation and is refined to the exact M-step. Rows must be unit norm
/// (within 1e-6).
MixtureFit fit_vmf_mixture(const Eigen::MatrixXd& embeddings, const EmOptions& opts);

/// EM for a diagonal-covariance Gaussian mixture (variance floor 1e-6).
MixtureFit fit_gaussian_mixture(const Eigen::MatrixXd& embeddings, const EmOptions& opts);

MixtureFit fit_mixture(MixtureKind kind, const Eigen::MatrixXd& embeddings,
                       const EmOptions& opts);

/// log C_d(kappa) = (d/2 - 1) log kappa - (d/2) log 2pi - log I_{d/2-1}(kappa).
double vmf_log_normalizer(std::size_t dim, double kappa);

/// A_d(kappa) = I_{d/2}(kappa) / I_{d/2-1}(kappa).
double vmf_mean_resultant(std::size_t dim, double kappa);

/// Banerjee et al. closed-form approximation of the concentration.
double banerjee_kappa(double mean_resultant, std::size_t dim);

/// Solves A_d(kappa) = mean_resultant, clamped to [kKappaMin, kKappaMax].
double solve_kappa(double mean_resultant, std::size_t dim);

/// Draws n unit vectors from vMF(mean_direction, kappa) (Wood's algorithm).
Eigen::MatrixXd sample_vmf(const Eigen::VectorXd& mean_direction, double kappa,
                           std::size_t n, std::mt19937_64& rng);

// ---------------------------------------------------------------------------

struct KSweepEntry {
  std::size_t k = 0;
  std::vector<double> p_values;                  // the multiset Psi(k)
  std::vector<std::pair<int, int>> pairs;        // cluster pair per p-value
  std::vector<std::size_t> cluster_sizes;
  std::size_t omitted_pairs = 0;    // at least one cluster empty
  std::size_t no_event_pairs = 0;   // both clusters eventless; p recorded as 1
  double max_p() const;
};

struct KSelectionReport {
  std::vector<KSweepEntry> entries;
  std::optional<std::size_t> knee;  // automatic knee, if one exists
  std::size_t chosen = 0;

  const KSweepEntry* entry(std::size_t k) const;
  /// {"k_sweep": {"<k>": [p-values], ...}, "knee": .., "chosen": ..}
  nlohmann::json to_json() const;
  static KSelectionReport from_json(const nlohmann::json& j);
};

/// Smallest k* such that max Psi(k* + 1) > threshold while max Psi(k) <=
/// threshold for every swept k <= k*.
std::optional<std::size_t> knee_rule(const std::vector<KSweepEntry>& entries,
                                     double threshold = 0.01);

/// For each k in [k_min, k_max]: fit the mixture, cut hard clusters, and
/// collect the pairwise log-rank p-values between clusters.
KSelectionReport k_sweep(const Eigen::MatrixXd& embeddings, const SurvivalLabels& labels,
                         std::size_t k_min, std::size_t k_max, MixtureKind kind,
                         std::uint64_t seed, double tol = 1e-6,
                         std::size_t max_iter = 500);

/// Pairwise log-rank p-values among the hard clusters of `assignments`.
KSweepEntry pairwise_logrank(const std::vector<int>& assignments, std::size_t k,
                             const SurvivalLabels& labels);

}  // namespace survanchor::clusterlib
