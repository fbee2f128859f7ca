#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "avstress/rng.hpp"
#include "avstress/scenario_io.hpp"

namespace avs {

/// Per-step crash-approach features relative to the vehicle under test:
/// [r_lon, r_lat, rr, h_cav, h_bv] for each of the k steps ending at the
/// crash scene, oldest step first (length 5k). Positions/speeds are
/// critical-BV minus CAV. Returns nullopt when the scenario holds fewer
/// than k scenes (short episodes are skipped, never padded).
std::optional<std::vector<double>> extract_features(
    const CornerCaseRecord& record, int k);

/// Column-standardized principal component analysis.
struct PcaModel {
  std::vector<double> mean;    // per column
  std::vector<double> scale;   // per-column standard deviation (1 if zero)
  std::vector<std::vector<double>> components;  // rows, descending variance
  std::vector<double> explained;                // variance fractions
};

/// Throws std::invalid_argument for fewer than 2 rows or non-finite
/// input. Components are orthonormal, sorted by descending eigenvalue,
/// each signed so its largest-magnitude entry is positive.
PcaModel fit_pca(const std::vector<std::vector<double>>& matrix);

/// First d standardized-and-rotated coordinates per row.
std::vector<std::vector<double>> project(
    const PcaModel& model, const std::vector<std::vector<double>>& matrix,
    int d);

/// Density clustering on 2-D points. Returns one label per point:
/// -1 = noise, else cluster id. Core points are grouped by
/// eps-connectivity; border points attach to their nearest core point, so
/// the partition is independent of input order up to id renaming.
std::vector<int> dbscan(const std::vector<std::array<double, 2>>& points,
                        double eps, int min_pts);

/// Median k-th-nearest-neighbor distance heuristic for the dbscan radius.
double dbscan_auto_eps(const std::vector<std::array<double, 2>>& points,
                       int min_pts);

struct KmeansResult {
  std::vector<int> labels;
  std::vector<std::array<double, 2>> centroids;
  double inertia = 0.0;
};

/// Lloyd iterations from k-means++ seeding, best of `restarts` runs by
/// inertia. Empty clusters reseed at the point farthest from its
/// centroid. Throws std::invalid_argument when k > N or k < 1.
KmeansResult kmeans(const std::vector<std::array<double, 2>>& points, int k,
                    Rng& rng, int restarts = 10, int max_iter = 300);

struct AnalyzerConfig {
  std::vector<int> k_values = {1, 2, 3, 4, 5, 8, 10, 15};
  int dbscan_min_pts = 8;
  double dbscan_eps = 0.0;        // 0 = auto from the k-distance heuristic
  double majority_fraction = 0.0; // 0 = the single largest cluster
  int minority_k = 4;
  int kmeans_restarts = 10;
  int kmeans_max_iter = 300;

  void validate() const;  // throws ConfigError
};

/// Full per-k analysis product.
struct ClusterReport {
  int k_steps = 0;
  std::size_t skipped_short = 0;          // records with too few scenes
  std::vector<std::size_t> record_index;  // row -> corner-case library index
  std::vector<std::vector<double>> features;   // N x 5k
  std::vector<std::array<double, 2>> points;   // N x 2 projection
  double explained_2d = 0.0;  // variance fraction captured by the 2 dims
  double eps_used = 0.0;
  int min_pts = 0;
  std::vector<int> dbscan_labels;
  std::vector<bool> in_majority;
  std::vector<int> minority_labels;  // -1 for majority rows
  std::vector<std::array<double, 2>> minority_centroids;
  int minority_k = 0;      // after any reduction
  bool k_reduced = false;  // minority smaller than the requested k
  std::vector<std::size_t> typical_rows;  // one per cluster, nearest centroid
  std::vector<std::size_t> rare_rows;     // all dbscan-noise rows
};

/// Feature extraction + PCA + DBSCAN majority/minority split + K-means on
/// the minority + valuable-case selection for one window length k.
/// Throws MissingInputError when no record survives the length filter.
ClusterReport analyze_records(const std::vector<CornerCaseRecord>& records,
                              int k, const AnalyzerConfig& cfg,
                              std::uint64_t seed);

/// Writes the per-k artifacts into `dir`: features_k<k>.csv (features,
/// projection, labels), scatter_k<k>.svg, and summary_k<k>.txt.
void emit_report(const ClusterReport& report,
                 const std::vector<CornerCaseRecord>& records,
                 const std::string& dir);

}  // namespace avs
