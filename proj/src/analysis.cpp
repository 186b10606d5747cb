#include "mm/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>
#include <type_traits>
#include <variant>

#include "mm/error.hpp"

namespace mm {

namespace {

enum Category { kVelocity = 0, kPosition, kAnimation, kVariable, kEmpty };

Category category_of(const Fact& f) {
  switch (tag_of(f)) {
    case FactTag::kVelocityX:
    case FactTag::kVelocityY:
      return kVelocity;
    case FactTag::kPositionX:
    case FactTag::kPositionY:
    case FactTag::kRelationshipX:
    case FactTag::kRelationshipY:
      return kPosition;
    case FactTag::kAnimation:
      return kAnimation;
    case FactTag::kVariable:
      return kVariable;
    case FactTag::kEmpty:
      return kEmpty;
  }
  return kEmpty;
}

double value_of(const Fact& f) {
  return std::visit(
      [](const auto& x) -> double {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, VariableFact>) return x.value ? 1.0 : 0.0;
        else if constexpr (std::is_same_v<T, RelationshipXFact> ||
                           std::is_same_v<T, RelationshipYFact>)
          return x.offset;
        else if constexpr (requires { x.value; }) return x.value;
        else return 0.0;
      },
      f);
}

std::size_t count_index(const Fact& f) {
  switch (tag_of(f)) {
    case FactTag::kAnimation: return 0;
    case FactTag::kVelocityX: return 1;
    case FactTag::kVelocityY: return 2;
    case FactTag::kPositionX: return 3;
    case FactTag::kPositionY: return 4;
    case FactTag::kVariable: return 5;
    case FactTag::kRelationshipX:
    case FactTag::kRelationshipY: return 6;
    case FactTag::kEmpty: return 7;
  }
  return 7;
}

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double squared_distance(const Point& a, const Point& b) {
  double s = 0;
  for (std::size_t d = 0; d < a.size(); ++d) s += (a[d] - b[d]) * (a[d] - b[d]);
  return s;
}

std::size_t check_points(std::span<const Point> points) {
  if (points.empty()) throw InvalidArgumentError("no points to fit");
  const std::size_t dim = points.front().size();
  if (dim == 0) throw InvalidArgumentError("points have zero dimensions");
  for (const auto& p : points) {
    if (p.size() != dim) throw InvalidArgumentError("points have differing dimensions");
    for (double v : p)
      if (!std::isfinite(v)) throw InvalidArgumentError("point has a non-finite coordinate");
  }
  return dim;
}

// log(w_j N(x | mu_j, var_j)) for every component.
void component_log_densities(const GmmModel& m, const Point& x, std::vector<double>& out) {
  out.assign(m.k, -std::numeric_limits<double>::infinity());
  const double log2pi = std::log(2 * std::numbers::pi);
  for (int j = 0; j < m.k; ++j) {
    if (m.weights[j] <= 0) continue;
    double s = std::log(m.weights[j]);
    for (std::size_t d = 0; d < x.size(); ++d) {
      const double v = m.variances[j][d];
      const double diff = x[d] - m.means[j][d];
      s -= 0.5 * (log2pi + std::log(v) + diff * diff / v);
    }
    out[j] = s;
  }
}

double log_sum_exp(const std::vector<double>& v) {
  const double hi = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(hi)) return hi;
  double s = 0;
  for (double x : v) s += std::exp(x - hi);
  return hi + std::log(s);
}

// E step: fills resp and returns the log-likelihood.
double expectation(const GmmModel& m, std::span<const Point> points,
                   std::vector<std::vector<double>>& resp) {
  resp.resize(points.size());
  std::vector<double> logs;
  double ll = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    component_log_densities(m, points[i], logs);
    const double norm = log_sum_exp(logs);
    ll += norm;
    resp[i].resize(m.k);
    for (int j = 0; j < m.k; ++j) resp[i][j] = std::exp(logs[j] - norm);
  }
  return ll;
}

void maximization(GmmModel& m, std::span<const Point> points,
                  const std::vector<std::vector<double>>& resp) {
  const std::size_t n = points.size();
  const std::size_t dim = points.front().size();
  for (int j = 0; j < m.k; ++j) {
    double nj = 0;
    for (std::size_t i = 0; i < n; ++i) nj += resp[i][j];
    m.weights[j] = nj / static_cast<double>(n);
    if (nj <= std::numeric_limits<double>::min()) continue;  // dead component keeps its shape
    Point mean(dim, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t d = 0; d < dim; ++d) mean[d] += resp[i][j] * points[i][d];
    for (double& v : mean) v /= nj;
    Point var(dim, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t d = 0; d < dim; ++d) {
        const double diff = points[i][d] - mean[d];
        var[d] += resp[i][j] * diff * diff;
      }
    for (double& v : var) v = std::max(v / nj, kVarianceFloor);
    m.means[j] = std::move(mean);
    m.variances[j] = std::move(var);
  }
  double total = 0;
  for (double w : m.weights) total += w;
  for (double& w : m.weights) w /= total;
}

// Greedy k-means++: each new center is the best of several D^2-weighted
// candidates, judged by the resulting total squared distance.
std::vector<std::size_t> seed_centers(std::span<const Point> points, int k, std::mt19937_64& rng) {
  const std::size_t n = points.size();
  const int trials = 2 + static_cast<int>(std::log(static_cast<double>(k)));
  std::vector<std::size_t> centers{static_cast<std::size_t>(rng() % n)};
  std::vector<double> nearest(n);
  for (std::size_t i = 0; i < n; ++i) nearest[i] = squared_distance(points[i], points[centers[0]]);
  std::vector<double> candidate(n);
  while (static_cast<int>(centers.size()) < k) {
    double total = 0;
    for (double d : nearest) total += d;
    std::size_t pick = n;
    if (total > 0) {
      double bestPotential = std::numeric_limits<double>::infinity();
      std::vector<double> bestNearest;
      for (int t = 0; t < trials; ++t) {
        double target = uniform01(rng) * total;
        std::size_t c = n;
        for (std::size_t i = 0; i < n; ++i) {
          if (nearest[i] <= 0) continue;
          c = i;
          target -= nearest[i];
          if (target < 0) break;
        }
        double potential = 0;
        for (std::size_t i = 0; i < n; ++i) {
          candidate[i] = std::min(nearest[i], squared_distance(points[i], points[c]));
          potential += candidate[i];
        }
        if (potential < bestPotential) {
          bestPotential = potential;
          pick = c;
          bestNearest = candidate;
        }
      }
      nearest = std::move(bestNearest);
    } else {
      // All remaining points coincide with a center; take the first unused index.
      for (std::size_t i = 0; i < n && pick == n; ++i)
        if (std::find(centers.begin(), centers.end(), i) == centers.end()) pick = i;
    }
    centers.push_back(pick);
  }
  return centers;
}

}  // namespace

RuleVector encode_rule(const Rule& rule) {
  RuleVector v{};
  v[category_of(rule.pre)] = 1;
  v[5] = value_of(rule.pre);
  v[6 + category_of(rule.post)] = 1;
  v[11] = value_of(rule.post);
  for (const auto& c : rule.conditions) v[12 + count_index(c)] += 1;
  return v;
}

namespace {

GmmModel fit_once(std::span<const Point> points, std::size_t dim, int k, std::uint64_t seed,
                  const GmmOptions& options) {
  const std::size_t n = points.size();
  Point mean(dim, 0.0), var(dim, 0.0);
  for (const auto& p : points)
    for (std::size_t d = 0; d < dim; ++d) mean[d] += p[d];
  for (double& m : mean) m /= static_cast<double>(n);
  for (const auto& p : points)
    for (std::size_t d = 0; d < dim; ++d) var[d] += (p[d] - mean[d]) * (p[d] - mean[d]);
  for (double& v : var) v = std::max(v / static_cast<double>(n), kVarianceFloor);

  std::mt19937_64 rng(seed);
  GmmModel m;
  m.k = k;
  m.seed = seed;
  m.weights.assign(k, 1.0 / k);
  m.variances.assign(k, var);
  for (std::size_t c : seed_centers(points, k, rng)) m.means.push_back(points[c]);

  std::vector<std::vector<double>> resp;
  double ll = expectation(m, points, resp);
  m.history.push_back(ll);
  for (int it = 0; it < options.maxIter; ++it) {
    GmmModel next = m;
    maximization(next, points, resp);
    std::vector<std::vector<double>> nextResp;
    const double nextLl = expectation(next, points, nextResp);
    m = std::move(next);
    resp = std::move(nextResp);
    m.history.push_back(nextLl);
    const double gain = nextLl - ll;
    ll = nextLl;
    if (gain < options.tol) break;
  }
  m.logLikelihood = ll;
  return m;
}

}  // namespace

GmmModel fit_gmm(std::span<const Point> points, int k, std::uint64_t seed,
                 const GmmOptions& options) {
  const std::size_t dim = check_points(points);
  if (k < 1) throw InvalidArgumentError("k must be at least 1");
  if (static_cast<std::size_t>(k) > points.size())
    throw InvalidArgumentError("k=" + std::to_string(k) + " exceeds the number of points (" +
                               std::to_string(points.size()) + ")");
  if (options.maxIter < 1) throw InvalidArgumentError("maxIter must be at least 1");
  if (options.restarts < 1) throw InvalidArgumentError("restarts must be at least 1");

  GmmModel best = fit_once(points, dim, k, seed, options);
  for (int r = 1; r < options.restarts; ++r) {
    GmmModel next =
        fit_once(points, dim, k, seed + static_cast<std::uint64_t>(r) * 0x9E3779B97F4A7C15ULL,
                 options);
    if (next.logLikelihood > best.logLikelihood) best = std::move(next);
  }
  best.seed = seed;
  return best;
}

double log_likelihood(const GmmModel& model, std::span<const Point> points) {
  std::vector<std::vector<double>> resp;
  return expectation(model, points, resp);
}

ElbowResult elbow_select(std::span<const Point> points, int kMax, std::uint64_t seed,
                         const GmmOptions& options) {
  if (kMax < 2) throw InvalidArgumentError("kMax must be at least 2");
  check_points(points);
  const int top = std::min<int>(kMax, static_cast<int>(points.size()));
  ElbowResult result;
  for (int k = 1; k <= top; ++k) {
    result.models.push_back(fit_gmm(points, k, seed + static_cast<std::uint64_t>(k), options));
    result.curve.push_back(-result.models.back().logLikelihood);
  }
  result.k = 1;
  if (top < 3) return result;

  // A fit with more components can always match one with fewer, so the curve
  // is read as its running minimum (local optima otherwise make bumps).
  std::vector<double> curve = result.curve;
  for (std::size_t i = 1; i < curve.size(); ++i) curve[i] = std::min(curve[i], curve[i - 1]);
  const double first = curve.front();
  const double last = curve.back();
  const double span = first - last;
  if (!(span > 0)) return result;
  // Scaled point (x, y) with the chord running from (0, 1) to (1, 0); the
  // distance below it is proportional to 1 - x - y.
  double best = 0;
  int bestK = 1;
  for (int k = 1; k <= top; ++k) {
    const double x = static_cast<double>(k - 1) / (top - 1);
    const double y = (curve[k - 1] - last) / span;
    const double below = (1 - x - y) / std::numbers::sqrt2;
    if (below > best + 1e-12) {
      best = below;
      bestK = k;
    }
  }
  if (best >= kMinElbowProminence) result.k = bestK;
  return result;
}

std::vector<std::vector<double>> responsibilities(const GmmModel& model,
                                                  std::span<const Point> points) {
  std::vector<std::vector<double>> resp;
  expectation(model, points, resp);
  return resp;
}

std::vector<Assignment> assign_clusters(const GmmModel& model, std::span<const Point> points) {
  std::vector<Assignment> out;
  out.reserve(points.size());
  for (const auto& row : responsibilities(model, points)) {
    Assignment a{0, row.empty() ? 0.0 : row[0]};
    for (int j = 1; j < static_cast<int>(row.size()); ++j)
      if (row[j] > a.responsibility) a = {j, row[j]};
    out.push_back(a);
  }
  return out;
}

void write_cluster_csv(std::ostream& out, std::span<const ClusterRow> rows) {
  out << "ruleId";
  for (std::size_t d = 1; d <= kRuleVectorDims; ++d) out << ",d" << d;
  out << ",clusterId,responsibility\n";
  for (const auto& r : rows) {
    out << r.ruleId;
    for (double v : r.vector) out << ',' << v;
    out << ',' << r.assignment.clusterId << ',' << r.assignment.responsibility << '\n';
  }
}

}  // namespace mm
