#include "avstress/analyzer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "avstress/errors.hpp"

namespace avs {
namespace {

// Substream tag so analysis randomness never collides with the training or
// evaluation streams derived from the same master seed.
constexpr std::uint64_t kAnalyzeStream = 0x616e616c797a6572ULL;

constexpr int kChannels = 5;
const char* const kChannelNames[kChannels] = {"r_lon", "r_lat", "rr", "h_cav",
                                              "h_bv"};

double sq_dist(const std::array<double, 2>& a, const std::array<double, 2>& b) {
  const double dx = a[0] - b[0];
  const double dy = a[1] - b[1];
  return dx * dx + dy * dy;
}

bool coord_less(const std::array<double, 2>& a, const std::array<double, 2>& b) {
  if (a[0] != b[0]) return a[0] < b[0];
  return a[1] < b[1];
}

}  // namespace

std::optional<std::vector<double>> extract_features(
    const CornerCaseRecord& record, int k) {
  if (k < 1) throw std::invalid_argument("feature window must be at least 1");
  const auto& scenes = record.scenario.scenes;
  if (scenes.size() < static_cast<std::size_t>(k)) return std::nullopt;

  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(k) * kChannels);
  for (std::size_t s = scenes.size() - static_cast<std::size_t>(k);
       s < scenes.size(); ++s) {
    const Scene& scene = scenes[s];
    const VehicleState& cav = scene.cav();
    const VehicleState* bv = scene.find(record.critical_bv);
    if (bv == nullptr) {
      throw std::runtime_error(
          "corner case is inconsistent: critical vehicle " +
          std::to_string(record.critical_bv) + " missing from a logged scene");
    }
    out.push_back(bv->lon - cav.lon);
    out.push_back(bv->lat - cav.lat);
    out.push_back(bv->speed - cav.speed);
    out.push_back(cav.heading);
    out.push_back(bv->heading);
  }
  return out;
}

// ---------------------------------------------------------------------------
// PCA

namespace {

// Cyclic Jacobi eigendecomposition of a symmetric matrix. Small dimensions
// only (the feature space tops out at 75 columns), where its quadratic
// convergence and unconditional stability beat anything fancier.
void jacobi_eigen(std::vector<std::vector<double>> a,
                  std::vector<double>& eigenvalues,
                  std::vector<std::vector<double>>& eigenvectors) {
  const std::size_t n = a.size();
  eigenvectors.assign(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) eigenvectors[i][i] = 1.0;

  double norm = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) norm += a[i][j] * a[i][j];
  norm = std::sqrt(norm);
  const double tol = std::max(norm, 1.0) * 1e-14;

  for (int sweep = 0; sweep < 200; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += 2.0 * a[p][q] * a[p][q];
    if (std::sqrt(off) <= tol) break;

    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::abs(a[p][q]) <= tol / (10.0 * static_cast<double>(n)))
          continue;
        const double tau = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        for (std::size_t i = 0; i < n; ++i) {
          const double aip = a[i][p];
          const double aiq = a[i][q];
          a[i][p] = c * aip - s * aiq;
          a[i][q] = s * aip + c * aiq;
        }
        for (std::size_t j = 0; j < n; ++j) {
          const double apj = a[p][j];
          const double aqj = a[q][j];
          a[p][j] = c * apj - s * aqj;
          a[q][j] = s * apj + c * aqj;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double vip = eigenvectors[i][p];
          const double viq = eigenvectors[i][q];
          eigenvectors[i][p] = c * vip - s * viq;
          eigenvectors[i][q] = s * vip + c * viq;
        }
      }
    }
  }

  eigenvalues.resize(n);
  for (std::size_t i = 0; i < n; ++i) eigenvalues[i] = a[i][i];
}

}  // namespace

PcaModel fit_pca(const std::vector<std::vector<double>>& matrix) {
  if (matrix.size() < 2)
    throw std::invalid_argument("pca needs at least 2 rows");
  const std::size_t n = matrix.size();
  const std::size_t dim = matrix.front().size();
  if (dim == 0) throw std::invalid_argument("pca needs at least 1 column");
  for (const auto& row : matrix) {
    if (row.size() != dim)
      throw std::invalid_argument("pca rows must have equal width");
    for (double v : row)
      if (!std::isfinite(v))
        throw std::invalid_argument("pca input must be finite");
  }

  PcaModel model;
  model.mean.assign(dim, 0.0);
  for (const auto& row : matrix)
    for (std::size_t j = 0; j < dim; ++j) model.mean[j] += row[j];
  for (double& m : model.mean) m /= static_cast<double>(n);

  // Population standard deviation per column; constant columns keep scale 1
  // so they standardize to exactly zero instead of dividing by zero.
  model.scale.assign(dim, 0.0);
  for (const auto& row : matrix)
    for (std::size_t j = 0; j < dim; ++j) {
      const double d = row[j] - model.mean[j];
      model.scale[j] += d * d;
    }
  for (double& s : model.scale) {
    s = std::sqrt(s / static_cast<double>(n));
    if (s == 0.0) s = 1.0;
  }

  // Covariance of the standardized data, C = Z^T Z / N.
  std::vector<std::vector<double>> cov(dim, std::vector<double>(dim, 0.0));
  std::vector<double> z(dim);
  for (const auto& row : matrix) {
    for (std::size_t j = 0; j < dim; ++j)
      z[j] = (row[j] - model.mean[j]) / model.scale[j];
    for (std::size_t i = 0; i < dim; ++i)
      for (std::size_t j = i; j < dim; ++j) cov[i][j] += z[i] * z[j];
  }
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = i; j < dim; ++j) {
      cov[i][j] /= static_cast<double>(n);
      cov[j][i] = cov[i][j];
    }

  std::vector<double> eigenvalues;
  std::vector<std::vector<double>> vectors;  // columns are eigenvectors
  jacobi_eigen(cov, eigenvalues, vectors);

  std::vector<std::size_t> order(dim);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return eigenvalues[a] > eigenvalues[b];
  });

  double total = 0.0;
  for (double ev : eigenvalues) total += std::max(ev, 0.0);

  model.components.assign(dim, std::vector<double>(dim, 0.0));
  model.explained.assign(dim, 0.0);
  for (std::size_t r = 0; r < dim; ++r) {
    const std::size_t col = order[r];
    auto& comp = model.components[r];
    for (std::size_t i = 0; i < dim; ++i) comp[i] = vectors[i][col];
    // Canonical sign: the entry with the largest magnitude is positive, so
    // repeated fits of the same data agree bit for bit.
    std::size_t arg = 0;
    for (std::size_t i = 1; i < dim; ++i)
      if (std::abs(comp[i]) > std::abs(comp[arg])) arg = i;
    if (comp[arg] < 0.0)
      for (double& v : comp) v = -v;
    model.explained[r] =
        total > 0.0 ? std::max(eigenvalues[col], 0.0) / total : 0.0;
  }
  return model;
}

std::vector<std::vector<double>> project(
    const PcaModel& model, const std::vector<std::vector<double>>& matrix,
    int d) {
  const std::size_t dim = model.mean.size();
  if (d < 1 || static_cast<std::size_t>(d) > model.components.size())
    throw std::invalid_argument("projection dimension out of range");
  std::vector<std::vector<double>> out;
  out.reserve(matrix.size());
  std::vector<double> z(dim);
  for (const auto& row : matrix) {
    if (row.size() != dim)
      throw std::invalid_argument("projection row width mismatch");
    for (std::size_t j = 0; j < dim; ++j)
      z[j] = (row[j] - model.mean[j]) / model.scale[j];
    std::vector<double> coords(static_cast<std::size_t>(d), 0.0);
    for (int c = 0; c < d; ++c) {
      double dot = 0.0;
      const auto& comp = model.components[static_cast<std::size_t>(c)];
      for (std::size_t j = 0; j < dim; ++j) dot += z[j] * comp[j];
      coords[static_cast<std::size_t>(c)] = dot;
    }
    out.push_back(std::move(coords));
  }
  return out;
}

// ---------------------------------------------------------------------------
// DBSCAN

double dbscan_auto_eps(const std::vector<std::array<double, 2>>& points,
                       int min_pts) {
  const std::size_t n = points.size();
  if (n < 2) return 1.0;
  // A core point needs min_pts neighbors counting itself, i.e. min_pts - 1
  // others; the median of that k-distance puts roughly half the points on
  // the core side, the usual knee heuristic.
  const std::size_t k = std::max<std::size_t>(
      1, std::min<std::size_t>(static_cast<std::size_t>(std::max(min_pts, 2)) - 1,
                               n - 1));
  std::vector<double> kdist(n);
  std::vector<double> d2(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t m = 0;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) d2[m++] = sq_dist(points[i], points[j]);
    std::nth_element(d2.begin(), d2.begin() + static_cast<std::ptrdiff_t>(k - 1),
                     d2.end());
    kdist[i] = std::sqrt(d2[k - 1]);
  }
  std::nth_element(kdist.begin(),
                   kdist.begin() + static_cast<std::ptrdiff_t>((n - 1) / 2),
                   kdist.end());
  return kdist[(n - 1) / 2];
}

std::vector<int> dbscan(const std::vector<std::array<double, 2>>& points,
                        double eps, int min_pts) {
  if (!(eps >= 0.0) || !std::isfinite(eps))
    throw std::invalid_argument("dbscan eps must be finite and non-negative");
  if (min_pts < 1) throw std::invalid_argument("dbscan min_pts must be >= 1");
  const std::size_t n = points.size();
  std::vector<int> labels(n, -1);
  if (n == 0) return labels;

  const double eps2 = eps * eps;
  std::vector<std::vector<std::size_t>> neighbors(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j)
      if (sq_dist(points[i], points[j]) <= eps2) neighbors[i].push_back(j);
  }
  std::vector<bool> core(n, false);
  for (std::size_t i = 0; i < n; ++i)
    core[i] = neighbors[i].size() >= static_cast<std::size_t>(min_pts);

  // Clusters are the connected components of the core-core reachability
  // graph; flood fill in index order so ids are deterministic.
  int next_cluster = 0;
  std::vector<std::size_t> stack;
  for (std::size_t i = 0; i < n; ++i) {
    if (!core[i] || labels[i] != -1) continue;
    labels[i] = next_cluster;
    stack.assign(1, i);
    while (!stack.empty()) {
      const std::size_t cur = stack.back();
      stack.pop_back();
      for (std::size_t nb : neighbors[cur]) {
        if (!core[nb] || labels[nb] != -1) continue;
        labels[nb] = next_cluster;
        stack.push_back(nb);
      }
    }
    ++next_cluster;
  }

  // Border points join the cluster of their nearest core neighbor instead
  // of whichever core happened to be expanded first, which makes the labels
  // independent of the input order. Exact distance ties break on the core
  // point's coordinates.
  for (std::size_t i = 0; i < n; ++i) {
    if (core[i]) continue;
    std::size_t best = n;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (std::size_t nb : neighbors[i]) {
      if (!core[nb]) continue;
      const double d = sq_dist(points[i], points[nb]);
      if (d < best_d2 ||
          (d == best_d2 && best < n && coord_less(points[nb], points[best]))) {
        best = nb;
        best_d2 = d;
      }
    }
    if (best < n) labels[i] = labels[best];
  }
  return labels;
}

// ---------------------------------------------------------------------------
// K-means

namespace {

std::vector<std::array<double, 2>> kmeanspp_seed(
    const std::vector<std::array<double, 2>>& points, int k, Rng& rng) {
  const std::size_t n = points.size();
  std::vector<std::array<double, 2>> centroids;
  centroids.reserve(static_cast<std::size_t>(k));
  centroids.push_back(
      points[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(n)))]);
  std::vector<double> d2(n);
  while (centroids.size() < static_cast<std::size_t>(k)) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& c : centroids) best = std::min(best, sq_dist(points[i], c));
      d2[i] = best;
      total += best;
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      const double x = rng.uniform() * total;
      double cum = 0.0;
      pick = n - 1;  // guard against accumulated rounding at the far end
      for (std::size_t i = 0; i < n; ++i) {
        cum += d2[i];
        if (cum > x) {
          pick = i;
          break;
        }
      }
    } else {
      // All remaining mass is on duplicates of existing centroids.
      pick = static_cast<std::size_t>(rng.uniform_int(static_cast<int>(n)));
    }
    centroids.push_back(points[pick]);
  }
  return centroids;
}

// Nearest-centroid assignment; returns true when any label moved.
bool kmeans_assign(const std::vector<std::array<double, 2>>& points,
                   const std::vector<std::array<double, 2>>& centroids,
                   std::vector<int>& labels) {
  bool changed = false;
  for (std::size_t i = 0; i < points.size(); ++i) {
    int best = 0;
    double best_d2 = sq_dist(points[i], centroids[0]);
    for (std::size_t c = 1; c < centroids.size(); ++c) {
      const double d = sq_dist(points[i], centroids[c]);
      if (d < best_d2) {
        best_d2 = d;
        best = static_cast<int>(c);
      }
    }
    if (labels[i] != best) {
      labels[i] = best;
      changed = true;
    }
  }
  return changed;
}

}  // namespace

KmeansResult kmeans(const std::vector<std::array<double, 2>>& points, int k,
                    Rng& rng, int restarts, int max_iter) {
  const std::size_t n = points.size();
  if (k < 1) throw std::invalid_argument("kmeans k must be >= 1");
  if (static_cast<std::size_t>(k) > n)
    throw std::invalid_argument("kmeans k exceeds the number of points");
  if (restarts < 1 || max_iter < 1)
    throw std::invalid_argument("kmeans restarts and max_iter must be >= 1");

  KmeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();

  for (int r = 0; r < restarts; ++r) {
    std::vector<std::array<double, 2>> centroids = kmeanspp_seed(points, k, rng);
    std::vector<int> labels(n, -1);

    for (int iter = 0; iter < max_iter; ++iter) {
      const bool moved = kmeans_assign(points, centroids, labels);

      std::vector<std::array<double, 2>> sums(
          static_cast<std::size_t>(k), {0.0, 0.0});
      std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
      for (std::size_t i = 0; i < n; ++i) {
        sums[static_cast<std::size_t>(labels[i])][0] += points[i][0];
        sums[static_cast<std::size_t>(labels[i])][1] += points[i][1];
        ++counts[static_cast<std::size_t>(labels[i])];
      }

      bool reseeded = false;
      std::vector<bool> used(n, false);
      for (std::size_t c = 0; c < static_cast<std::size_t>(k); ++c) {
        if (counts[c] > 0) {
          centroids[c] = {sums[c][0] / static_cast<double>(counts[c]),
                          sums[c][1] / static_cast<double>(counts[c])};
          continue;
        }
        // Empty cluster: restart it at the point currently worst served,
        // the one farthest from its own centroid.
        std::size_t far = n;
        double far_d2 = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
          if (used[i]) continue;
          const std::size_t li = static_cast<std::size_t>(labels[i]);
          if (counts[li] <= 1) continue;  // do not empty another cluster
          const double d = sq_dist(points[i],
                                   {sums[li][0] / static_cast<double>(counts[li]),
                                    sums[li][1] / static_cast<double>(counts[li])});
          if (d > far_d2) {
            far_d2 = d;
            far = i;
          }
        }
        if (far < n) {
          centroids[c] = points[far];
          used[far] = true;
          reseeded = true;
        }
      }

      if (!moved && !reseeded) break;
    }

    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      inertia += sq_dist(points[i], centroids[static_cast<std::size_t>(labels[i])]);

    // Strict comparison keeps the earlier restart on exact ties.
    if (inertia < best.inertia) {
      best.labels = std::move(labels);
      best.centroids = std::move(centroids);
      best.inertia = inertia;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Valuable-case identification

void AnalyzerConfig::validate() const {
  if (k_values.empty())
    throw ConfigError("analyze: at least one window length is required");
  for (int k : k_values)
    if (k < 1) throw ConfigError("analyze: window lengths must be >= 1");
  if (dbscan_min_pts < 1) throw ConfigError("analyze: min_pts must be >= 1");
  if (dbscan_eps < 0.0 || !std::isfinite(dbscan_eps))
    throw ConfigError("analyze: eps must be finite and >= 0");
  if (majority_fraction < 0.0 || majority_fraction >= 1.0)
    throw ConfigError("analyze: majority_fraction must be in [0, 1)");
  if (minority_k < 1) throw ConfigError("analyze: minority_k must be >= 1");
  if (kmeans_restarts < 1 || kmeans_max_iter < 1)
    throw ConfigError("analyze: kmeans restarts and max_iter must be >= 1");
}

ClusterReport analyze_records(const std::vector<CornerCaseRecord>& records,
                              int k, const AnalyzerConfig& cfg,
                              std::uint64_t seed) {
  cfg.validate();
  if (k < 1) throw std::invalid_argument("window length must be >= 1");

  ClusterReport report;
  report.k_steps = k;
  report.min_pts = cfg.dbscan_min_pts;
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto f = extract_features(records[i], k);
    if (!f) {
      ++report.skipped_short;
      continue;
    }
    report.record_index.push_back(i);
    report.features.push_back(std::move(*f));
  }
  if (report.features.size() < 2) {
    throw MissingInputError(
        "analysis for window " + std::to_string(k) + " needs at least 2 "
        "corner cases with that many scenes, have " +
        std::to_string(report.features.size()));
  }
  const std::size_t n = report.features.size();

  const PcaModel pca = fit_pca(report.features);
  const auto coords = project(pca, report.features, 2);
  report.points.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    report.points[i] = {coords[i][0], coords[i][1]};
  report.explained_2d =
      pca.explained[0] + (pca.explained.size() > 1 ? pca.explained[1] : 0.0);

  report.eps_used = cfg.dbscan_eps > 0.0
                        ? cfg.dbscan_eps
                        : dbscan_auto_eps(report.points, cfg.dbscan_min_pts);
  report.dbscan_labels = dbscan(report.points, report.eps_used, cfg.dbscan_min_pts);

  int cluster_count = 0;
  for (int label : report.dbscan_labels)
    cluster_count = std::max(cluster_count, label + 1);
  std::vector<std::size_t> sizes(static_cast<std::size_t>(cluster_count), 0);
  for (int label : report.dbscan_labels)
    if (label >= 0) ++sizes[static_cast<std::size_t>(label)];

  // The majority is the dominant driving pattern: the largest density
  // cluster, or every cluster above the configured population share.
  std::vector<bool> majority_cluster(static_cast<std::size_t>(cluster_count),
                                     false);
  if (cluster_count > 0) {
    if (cfg.majority_fraction > 0.0) {
      for (std::size_t c = 0; c < sizes.size(); ++c)
        if (static_cast<double>(sizes[c]) >=
            cfg.majority_fraction * static_cast<double>(n))
          majority_cluster[c] = true;
    }
    if (std::none_of(majority_cluster.begin(), majority_cluster.end(),
                     [](bool b) { return b; })) {
      std::size_t largest = 0;
      for (std::size_t c = 1; c < sizes.size(); ++c)
        if (sizes[c] > sizes[largest]) largest = c;
      majority_cluster[largest] = true;
    }
  }

  report.in_majority.assign(n, false);
  std::vector<std::size_t> minority_rows;
  for (std::size_t i = 0; i < n; ++i) {
    const int label = report.dbscan_labels[i];
    if (label >= 0 && majority_cluster[static_cast<std::size_t>(label)])
      report.in_majority[i] = true;
    else
      minority_rows.push_back(i);
  }

  // K-means refines the minority (everything outside the majority pattern,
  // noise included) into candidate corner-case families.
  report.minority_labels.assign(n, -1);
  if (!minority_rows.empty()) {
    int mk = cfg.minority_k;
    if (static_cast<std::size_t>(mk) > minority_rows.size()) {
      mk = static_cast<int>(minority_rows.size());
      report.k_reduced = true;
    }
    report.minority_k = mk;
    std::vector<std::array<double, 2>> pts;
    pts.reserve(minority_rows.size());
    for (std::size_t row : minority_rows) pts.push_back(report.points[row]);
    Rng rng(Rng::derive(seed, kAnalyzeStream ^ static_cast<std::uint64_t>(k)));
    const KmeansResult km =
        kmeans(pts, mk, rng, cfg.kmeans_restarts, cfg.kmeans_max_iter);
    for (std::size_t m = 0; m < minority_rows.size(); ++m)
      report.minority_labels[minority_rows[m]] = km.labels[m];
    report.minority_centroids = km.centroids;
  }

  // Typical cases: the member nearest each cluster centroid, majority
  // clusters first (ascending id), then the minority k-means clusters.
  for (std::size_t c = 0; c < majority_cluster.size(); ++c) {
    if (!majority_cluster[c]) continue;
    std::array<double, 2> centroid = {0.0, 0.0};
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (report.dbscan_labels[i] == static_cast<int>(c)) {
        centroid[0] += report.points[i][0];
        centroid[1] += report.points[i][1];
        ++count;
      }
    }
    centroid[0] /= static_cast<double>(count);
    centroid[1] /= static_cast<double>(count);
    std::size_t arg = n;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      if (report.dbscan_labels[i] != static_cast<int>(c)) continue;
      const double d = sq_dist(report.points[i], centroid);
      if (d < best) {
        best = d;
        arg = i;
      }
    }
    report.typical_rows.push_back(arg);
  }
  for (int c = 0; c < report.minority_k; ++c) {
    std::size_t arg = n;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      if (report.minority_labels[i] != c) continue;
      const double d =
          sq_dist(report.points[i],
                  report.minority_centroids[static_cast<std::size_t>(c)]);
      if (d < best) {
        best = d;
        arg = i;
      }
    }
    if (arg < n) report.typical_rows.push_back(arg);
  }

  for (std::size_t i = 0; i < n; ++i)
    if (report.dbscan_labels[i] == -1) report.rare_rows.push_back(i);

  return report;
}

// ---------------------------------------------------------------------------
// Report emission

namespace {

std::string fmt(double v, const char* spec = "%.17g") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

const char* const kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                "#9467bd", "#8c564b", "#e377c2", "#17becf"};
constexpr std::size_t kPaletteSize = sizeof(kPalette) / sizeof(kPalette[0]);

void write_features_csv(const ClusterReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "record_index";
  for (int s = 0; s < report.k_steps; ++s)
    for (int c = 0; c < kChannels; ++c)
      out << ',' << kChannelNames[c] << '_' << s;
  out << ",pc1,pc2,dbscan,majority,kmeans,typical,rare\n";

  std::vector<bool> typical(report.record_index.size(), false);
  for (std::size_t row : report.typical_rows) typical[row] = true;
  std::vector<bool> rare(report.record_index.size(), false);
  for (std::size_t row : report.rare_rows) rare[row] = true;

  for (std::size_t i = 0; i < report.record_index.size(); ++i) {
    out << report.record_index[i];
    for (double v : report.features[i]) out << ',' << fmt(v);
    out << ',' << fmt(report.points[i][0]) << ',' << fmt(report.points[i][1])
        << ',' << report.dbscan_labels[i] << ',' << (report.in_majority[i] ? 1 : 0)
        << ',' << report.minority_labels[i] << ',' << (typical[i] ? 1 : 0)
        << ',' << (rare[i] ? 1 : 0) << '\n';
  }
  if (!out) throw std::runtime_error("failed writing " + path);
}

void write_scatter_svg(const ClusterReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);

  const double width = 640.0, height = 480.0;
  const double ml = 56.0, mr = 170.0, mt = 40.0, mb = 48.0;
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto& p : report.points) {
    xmin = std::min(xmin, p[0]);
    xmax = std::max(xmax, p[0]);
    ymin = std::min(ymin, p[1]);
    ymax = std::max(ymax, p[1]);
  }
  if (!(xmax > xmin)) {
    xmin -= 1.0;
    xmax += 1.0;
  }
  if (!(ymax > ymin)) {
    ymin -= 1.0;
    ymax += 1.0;
  }
  const double xpad = 0.05 * (xmax - xmin), ypad = 0.05 * (ymax - ymin);
  xmin -= xpad;
  xmax += xpad;
  ymin -= ypad;
  ymax += ypad;
  const auto sx = [&](double x) {
    return ml + (x - xmin) / (xmax - xmin) * (width - ml - mr);
  };
  const auto sy = [&](double y) {
    return height - mb - (y - ymin) / (ymax - ymin) * (height - mt - mb);
  };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" "
         "height=\"480\" viewBox=\"0 0 640 480\">\n"
      << "<rect width=\"640\" height=\"480\" fill=\"white\"/>\n"
      << "<text x=\"" << fmt(ml, "%.1f") << "\" y=\"24\" font-family=\"sans-serif\" "
         "font-size=\"15\">corner-case clusters, window k="
      << report.k_steps << "</text>\n";

  // Axes with end-point labels.
  out << "<line x1=\"" << fmt(ml, "%.1f") << "\" y1=\"" << fmt(height - mb, "%.1f")
      << "\" x2=\"" << fmt(width - mr, "%.1f") << "\" y2=\""
      << fmt(height - mb, "%.1f") << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << fmt(ml, "%.1f") << "\" y1=\"" << fmt(mt, "%.1f")
      << "\" x2=\"" << fmt(ml, "%.1f") << "\" y2=\"" << fmt(height - mb, "%.1f")
      << "\" stroke=\"black\"/>\n";
  const auto tick = [&](double v, bool on_x) {
    if (on_x) {
      out << "<text x=\"" << fmt(sx(v), "%.1f") << "\" y=\""
          << fmt(height - mb + 18.0, "%.1f")
          << "\" font-family=\"sans-serif\" font-size=\"11\" "
             "text-anchor=\"middle\">"
          << fmt(v, "%.3g") << "</text>\n";
    } else {
      out << "<text x=\"" << fmt(ml - 6.0, "%.1f") << "\" y=\""
          << fmt(sy(v) + 4.0, "%.1f")
          << "\" font-family=\"sans-serif\" font-size=\"11\" "
             "text-anchor=\"end\">"
          << fmt(v, "%.3g") << "</text>\n";
    }
  };
  tick(xmin + xpad, true);
  tick(xmax - xpad, true);
  tick(ymin + ypad, false);
  tick(ymax - ypad, false);
  out << "<text x=\"" << fmt((ml + width - mr) / 2.0, "%.1f") << "\" y=\""
      << fmt(height - 10.0, "%.1f")
      << "\" font-family=\"sans-serif\" font-size=\"13\" "
         "text-anchor=\"middle\">pc1</text>\n"
      << "<text x=\"16\" y=\"" << fmt((mt + height - mb) / 2.0, "%.1f")
      << "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" "
         "transform=\"rotate(-90 16 "
      << fmt((mt + height - mb) / 2.0, "%.1f") << ")\">pc2</text>\n";

  std::vector<bool> ringed(report.points.size(), false);
  for (std::size_t row : report.typical_rows) ringed[row] = true;
  for (std::size_t row : report.rare_rows) ringed[row] = true;

  for (std::size_t i = 0; i < report.points.size(); ++i) {
    const double px = sx(report.points[i][0]);
    const double py = sy(report.points[i][1]);
    const int label = report.dbscan_labels[i];
    if (label < 0) {
      // Noise renders as a small x so it stays visible under overplotting.
      out << "<path d=\"M" << fmt(px - 3.0, "%.1f") << ' ' << fmt(py - 3.0, "%.1f")
          << " L" << fmt(px + 3.0, "%.1f") << ' ' << fmt(py + 3.0, "%.1f") << " M"
          << fmt(px - 3.0, "%.1f") << ' ' << fmt(py + 3.0, "%.1f") << " L"
          << fmt(px + 3.0, "%.1f") << ' ' << fmt(py - 3.0, "%.1f")
          << "\" stroke=\"#444444\" stroke-width=\"1.2\"/>\n";
    } else {
      out << "<circle cx=\"" << fmt(px, "%.1f") << "\" cy=\"" << fmt(py, "%.1f")
          << "\" r=\"3\" fill=\""
          << kPalette[static_cast<std::size_t>(label) % kPaletteSize]
          << "\" fill-opacity=\"0.8\"/>\n";
    }
    if (ringed[i]) {
      out << "<circle cx=\"" << fmt(px, "%.1f") << "\" cy=\"" << fmt(py, "%.1f")
          << "\" r=\"6.5\" fill=\"none\" stroke=\"black\" "
             "stroke-width=\"1.2\"/>\n";
    }
  }

  // Legend.
  int cluster_count = 0;
  for (int label : report.dbscan_labels)
    cluster_count = std::max(cluster_count, label + 1);
  std::vector<std::size_t> sizes(static_cast<std::size_t>(cluster_count), 0);
  std::size_t noise = 0;
  for (int label : report.dbscan_labels) {
    if (label >= 0)
      ++sizes[static_cast<std::size_t>(label)];
    else
      ++noise;
  }
  double ly = mt + 8.0;
  const double lx = width - mr + 14.0;
  const auto legend_text = [&](const std::string& s) {
    out << "<text x=\"" << fmt(lx + 14.0, "%.1f") << "\" y=\"" << fmt(ly + 4.0, "%.1f")
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << s << "</text>\n";
  };
  const int shown = std::min(cluster_count, 9);
  for (int c = 0; c < shown; ++c) {
    out << "<circle cx=\"" << fmt(lx, "%.1f") << "\" cy=\"" << fmt(ly, "%.1f")
        << "\" r=\"4\" fill=\"" << kPalette[static_cast<std::size_t>(c) % kPaletteSize]
        << "\"/>\n";
    legend_text("cluster " + std::to_string(c) + " (" +
                std::to_string(sizes[static_cast<std::size_t>(c)]) + ")");
    ly += 18.0;
  }
  if (cluster_count > shown) {
    legend_text("+" + std::to_string(cluster_count - shown) + " more clusters");
    ly += 18.0;
  }
  out << "<path d=\"M" << fmt(lx - 3.0, "%.1f") << ' ' << fmt(ly - 3.0, "%.1f")
      << " L" << fmt(lx + 3.0, "%.1f") << ' ' << fmt(ly + 3.0, "%.1f") << " M"
      << fmt(lx - 3.0, "%.1f") << ' ' << fmt(ly + 3.0, "%.1f") << " L"
      << fmt(lx + 3.0, "%.1f") << ' ' << fmt(ly - 3.0, "%.1f")
      << "\" stroke=\"#444444\" stroke-width=\"1.2\"/>\n";
  legend_text("noise (" + std::to_string(noise) + ")");
  ly += 18.0;
  out << "<circle cx=\"" << fmt(lx, "%.1f") << "\" cy=\"" << fmt(ly, "%.1f")
      << "\" r=\"6\" fill=\"none\" stroke=\"black\" stroke-width=\"1.2\"/>\n";
  legend_text("typical / rare pick");

  out << "</svg>\n";
  if (!out) throw std::runtime_error("failed writing " + path);
}

void write_summary_text(const ClusterReport& report,
                        const std::vector<CornerCaseRecord>& records,
                        const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);

  const std::size_t n = report.record_index.size();
  int cluster_count = 0;
  for (int label : report.dbscan_labels)
    cluster_count = std::max(cluster_count, label + 1);
  std::vector<std::size_t> sizes(static_cast<std::size_t>(cluster_count), 0);
  std::size_t noise = 0;
  for (int label : report.dbscan_labels) {
    if (label >= 0)
      ++sizes[static_cast<std::size_t>(label)];
    else
      ++noise;
  }

  out << "corner-case clustering summary\n"
      << "window: " << report.k_steps << " step(s), "
      << report.k_steps * kChannels << " features per case\n"
      << "cases used: " << n << " (skipped " << report.skipped_short
      << " with fewer than " << report.k_steps << " scenes)\n"
      << "pca: first 2 components explain " << fmt(100.0 * report.explained_2d, "%.2f")
      << "% of the standardized variance\n"
      << "dbscan: eps=" << fmt(report.eps_used, "%.6g") << ", min_pts="
      << report.min_pts << " -> " << cluster_count << " cluster(s), " << noise
      << " noise point(s)\n";

  const auto describe_row = [&](std::size_t row) {
    const std::size_t rec = report.record_index[row];
    const CornerCaseRecord& r = records[rec];
    std::ostringstream s;
    s << "case " << rec << " (seed " << r.scenario.seed << ", crash type "
      << r.crash_type << ", bv " << r.critical_bv << ")";
    return s.str();
  };

  out << "\ndbscan clusters:\n";
  for (int c = 0; c < cluster_count; ++c) {
    std::array<std::size_t, 6> types = {0, 0, 0, 0, 0, 0};
    std::array<double, 2> centroid = {0.0, 0.0};
    for (std::size_t i = 0; i < n; ++i) {
      if (report.dbscan_labels[i] != c) continue;
      const int t = records[report.record_index[i]].crash_type;
      if (t >= 1 && t <= 5) ++types[static_cast<std::size_t>(t)];
      centroid[0] += report.points[i][0];
      centroid[1] += report.points[i][1];
    }
    const double cnt = static_cast<double>(sizes[static_cast<std::size_t>(c)]);
    out << "  cluster " << c << ": " << sizes[static_cast<std::size_t>(c)]
        << " case(s)" ;
    bool is_majority = false;
    for (std::size_t i = 0; i < n; ++i)
      if (report.dbscan_labels[i] == c && report.in_majority[i]) {
        is_majority = true;
        break;
      }
    if (is_majority) out << " [majority]";
    out << ", centroid (" << fmt(centroid[0] / cnt, "%.4g") << ", "
        << fmt(centroid[1] / cnt, "%.4g") << "), crash types";
    for (int t = 1; t <= 5; ++t)
      out << " t" << t << '=' << types[static_cast<std::size_t>(t)];
    out << '\n';
  }
  if (cluster_count == 0) out << "  (none - every case is noise)\n";

  out << "\nminority k-means: ";
  if (report.minority_k == 0) {
    out << "skipped (no minority cases)\n";
  } else {
    out << "k=" << report.minority_k;
    if (report.k_reduced) out << " (reduced to the minority size)";
    out << '\n';
    for (int c = 0; c < report.minority_k; ++c) {
      std::size_t count = 0;
      for (std::size_t i = 0; i < n; ++i)
        if (report.minority_labels[i] == c) ++count;
      out << "  minority cluster " << c << ": " << count << " case(s), centroid ("
          << fmt(report.minority_centroids[static_cast<std::size_t>(c)][0], "%.4g")
          << ", "
          << fmt(report.minority_centroids[static_cast<std::size_t>(c)][1], "%.4g")
          << ")\n";
    }
  }

  out << "\ntypical cases (nearest to each cluster centroid):\n";
  for (std::size_t row : report.typical_rows)
    out << "  " << describe_row(row) << '\n';
  if (report.typical_rows.empty()) out << "  (none)\n";

  out << "\nrare cases (dbscan noise): " << report.rare_rows.size() << '\n';
  constexpr std::size_t kRareListCap = 50;
  for (std::size_t i = 0; i < report.rare_rows.size() && i < kRareListCap; ++i)
    out << "  " << describe_row(report.rare_rows[i]) << '\n';
  if (report.rare_rows.size() > kRareListCap)
    out << "  ... and " << report.rare_rows.size() - kRareListCap << " more\n";

  if (!out) throw std::runtime_error("failed writing " + path);
}

}  // namespace

void emit_report(const ClusterReport& report,
                 const std::vector<CornerCaseRecord>& records,
                 const std::string& dir) {
  const std::filesystem::path base(dir);
  const std::string suffix = "_k" + std::to_string(report.k_steps);
  write_features_csv(report, (base / ("features" + suffix + ".csv")).string());
  write_scatter_svg(report, (base / ("scatter" + suffix + ".svg")).string());
  write_summary_text(report, records,
                     (base / ("summary" + suffix + ".txt")).string());
}

}  // namespace avs
