#pragma once

// Rule vectors and diagonal Gaussian mixtures for grouping learned rules.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "mm/engine.hpp"

namespace mm {

inline constexpr std::size_t kRuleVectorDims = 20;

// Layout: [0,5) one-hot pre category {velocity, position, animation,
// variable, empty}, [5] pre value, [6,11) post category, [11] post value,
// [12,20) condition counts {animation, velocityX, velocityY, positionX,
// positionY, variable, relationship, empty}.
using RuleVector = std::array<double, kRuleVectorDims>;

RuleVector encode_rule(const Rule& rule);

using Point = std::vector<double>;

inline constexpr double kVarianceFloor = 1e-6;

struct GmmOptions {
  int maxIter = 200;
  double tol = 1e-6;
  // Independent seedings; the fit with the highest log-likelihood is kept.
  int restarts = 1;
};

struct GmmModel {
  int k = 0;
  std::vector<double> weights;
  std::vector<Point> means;
  std::vector<Point> variances;  // diagonal
  double logLikelihood = 0;
  std::uint64_t seed = 0;
  // Log-likelihood at each E step, ending with the returned parameters.
  std::vector<double> history;
};

// EM on a k-component diagonal mixture, seeded k-means++ style. Throws
// InvalidArgumentError for k < 1, k > |points|, empty or ragged input.
GmmModel fit_gmm(std::span<const Point> points, int k, std::uint64_t seed,
                 const GmmOptions& options = {});

// Total log-likelihood of the points under the model.
double log_likelihood(const GmmModel& model, std::span<const Point> points);

// Smallest scaled distance below the chord that counts as an elbow.
inline constexpr double kMinElbowProminence = 0.15;

struct ElbowResult {
  int k = 1;
  std::vector<double> curve;  // negative log-likelihood for k = 1..curve.size()
  std::vector<GmmModel> models;
};

// Fits k = 1..min(kMax, |points|) (seed + k for each) and picks the k
// farthest below the chord joining the ends of the running-minimum curve,
// with both axes scaled to [0, 1]. A curve with no point at least
// kMinElbowProminence below the chord has no elbow and selects k = 1.
ElbowResult elbow_select(std::span<const Point> points, int kMax = 12, std::uint64_t seed = 0,
                         const GmmOptions& options = {});

struct Assignment {
  int clusterId = 0;
  double responsibility = 0;
};

// Highest posterior component per point; ties go to the lower id.
std::vector<Assignment> assign_clusters(const GmmModel& model, std::span<const Point> points);

// Posterior responsibilities, one row per point.
std::vector<std::vector<double>> responsibilities(const GmmModel& model,
                                                  std::span<const Point> points);

struct ClusterRow {
  std::string ruleId;
  RuleVector vector{};
  Assignment assignment;
};

// Header plus one line per row: ruleId, d1..d20, clusterId, responsibility.
void write_cluster_csv(std::ostream& out, std::span<const ClusterRow> rows);

}  // namespace mm
