// Apache License, Version 2.0, refer to LICENSE.txt

/// Agglomerative clustering of states by their county vaccination-rate
/// distributions, with k chosen by the gap statistic.

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vaxbayes/stats.hpp"
#include "vaxbayes/survey.hpp"
#include "vaxbayes/text_io.hpp"

namespace vaxbayes {

/// Row-per-item points; every row has the same length.
using PointSet = std::vector<std::vector<double>>;

/// Mean, sample sd, and the 10%..90% deciles of a state's county rates.
inline constexpr std::size_t kStateFeatureCount = 11;

struct StateFeatures {
  std::vector<std::string> states;  // sorted
  std::vector<std::size_t> county_counts;
  PointSet raw;           // per state, kStateFeatureCount values
  PointSet standardized;  // columns with mean 0 and sample sd 1
};

/// Throws InputError if the table is empty.
StateFeatures build_state_features(const CountyRateTable& table);

/// Column-wise (x - mean) / sd with the sample sd. Constant columns become 0.
PointSet standardize_columns(const PointSet& points);

enum class Linkage { Ward, Complete, Average };

std::string_view to_string(Linkage linkage);
Linkage parse_linkage(std::string_view text);  // case-insensitive; InputError otherwise

/// Merge i joins nodes a < b into node (leaves + i). Leaves are 0..n-1.
struct Merge {
  std::size_t a = 0;
  std::size_t b = 0;
  double height = 0.0;
  std::size_t size = 0;
};

struct Dendrogram {
  std::size_t leaves = 0;
  std::vector<Merge> merges;
  std::vector<std::size_t> leaf_order;  // left-to-right order of the final tree
};

/// Lance-Williams agglomeration on Euclidean distances. Ward heights follow
/// the usual convention where two singletons merge at their distance, i.e.
/// d(A, B) = sqrt(2 |A||B| / (|A| + |B|)) * ||centroid(A) - centroid(B)||.
/// Ties go to the lowest pair of working slots. Throws InputError for fewer
/// than two points or ragged rows.
Dendrogram agglomerate(const PointSet& points, Linkage linkage);

/// Undoes the last k-1 merges. Labels are 0..k-1 in order of each
/// cluster's smallest leaf index. Throws InputError unless 1 <= k <= leaves.
std::vector<std::size_t> cut_tree(const Dendrogram& dendrogram, std::size_t k);

/// Relabels clusters 0..k-1 by ascending pooled county rate (ties by
/// smallest member index). Throws InputError if a state has no counties in
/// the table or a cluster is empty.
std::vector<std::size_t> order_clusters_by_rate(std::span<const std::size_t> assignment,
                                                std::span<const std::string> states,
                                                const CountyRateTable& table);

/// Sum over clusters of (sum of ordered-pair squared distances) / (2 * size).
double within_dispersion(const PointSet& points, std::span<const std::size_t> assignment);

struct GapOptions {
  std::size_t k_max = 10;
  std::size_t references = 100;
  std::uint64_t seed = 20221219;
  Linkage linkage = Linkage::Ward;
  std::size_t workers = 0;  // 0 = hardware concurrency
};

struct GapEntry {
  std::size_t k = 0;
  double log_w = 0.0;          // observed log W_k
  double reference_mean = 0.0; // mean over references of log W*_k
  double gap = 0.0;
  double se = 0.0;             // sd_k * sqrt(1 + 1/B)
};

struct GapResult {
  std::vector<GapEntry> curve;  // k = 1..k_max
  std::size_t chosen_k = 1;
};

/// Gap statistic with references drawn uniformly over each column's range.
/// chosen_k is the smallest k with Gap(k) >= Gap(k+1) - s_{k+1}, else k_max.
/// Reference b uses derive_seed(seed, "gap", b), so the result is independent
/// of the worker count. Throws InputError if k_max >= item count or
/// references < 10, NumericalError if all points coincide.
GapResult gap_statistic(const PointSet& points, const GapOptions& options);

struct ClusterStats {
  std::size_t label = 0;  // 0-based; reported 1-based
  std::vector<std::string> members;
  std::size_t county_count = 0;
  double mean = 0.0;
  double sd = 0.0;  // sample sd over member counties
  DensitySeries density;
};

struct ClusterSummary {
  std::vector<ClusterStats> clusters;
};

/// Pooled county-level statistics per cluster. Throws InputError on an empty
/// cluster or a size mismatch between assignment and states.
ClusterSummary summarize_clusters(std::span<const std::size_t> assignment,
                                  std::span<const std::string> states,
                                  const CountyRateTable& table);

/// "k\tlog_w\treference_mean\tgap\tse" records plus a chosen_k comment.
void write_gap_curve(std::ostream& out, const GapResult& gap, const Provenance& provenance);

/// "state\tcluster" with 1-based cluster labels.
void write_assignments(std::ostream& out, std::span<const std::string> states,
                       std::span<const std::size_t> assignment, const Provenance& provenance);

/// One "[cluster N]" block per cluster with statistics, members, and a
/// density section.
void write_cluster_summary(std::ostream& out, const ClusterSummary& summary,
                           const Provenance& provenance);

}  // namespace vaxbayes
