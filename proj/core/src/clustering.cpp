// Apache License, Version 2.0, refer to LICENSE.txt

#include "vaxbayes/clustering.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <thread>

#include "vaxbayes/error.hpp"
#include "vaxbayes/random.hpp"

namespace vaxbayes {

namespace {

void check_points(const PointSet& points) {
  if (points.empty()) throw InputError("no points to cluster");
  const std::size_t p = points.front().size();
  for (const auto& row : points) {
    if (row.size() != p) throw InputError("points have unequal dimensions");
  }
}

double squared_distance(std::span<const double> x, std::span<const double> y) {
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) sum += (x[i] - y[i]) * (x[i] - y[i]);
  return sum;
}

std::map<std::string, std::vector<double>> rates_by_state(const CountyRateTable& table) {
  std::map<std::string, std::vector<double>> grouped;
  for (const auto& entry : table.entries) grouped[entry.state].push_back(entry.rate);
  return grouped;
}

std::size_t cluster_count(std::span<const std::size_t> assignment) {
  if (assignment.empty()) throw InputError("empty cluster assignment");
  return *std::max_element(assignment.begin(), assignment.end()) + 1;
}

std::size_t find_root(std::vector<std::size_t>& parent, std::size_t x) {
  while (parent[x] != x) {
    parent[x] = parent[parent[x]];
    x = parent[x];
  }
  return x;
}

}  // namespace

StateFeatures build_state_features(const CountyRateTable& table) {
  if (table.entries.empty()) throw InputError("county table has no entries");
  StateFeatures features;
  for (auto& [state, rates] : rates_by_state(table)) {
    if (rates.empty()) throw InputError("state " + state + " has no counties");
    std::sort(rates.begin(), rates.end());
    std::vector<double> row;
    row.reserve(kStateFeatureCount);
    row.push_back(mean(rates));
    row.push_back(sample_sd(rates));
    for (int decile = 1; decile <= 9; ++decile) {
      row.push_back(sorted_quantile(rates, decile / 10.0));
    }
    features.states.push_back(state);
    features.county_counts.push_back(rates.size());
    features.raw.push_back(std::move(row));
  }
  features.standardized = standardize_columns(features.raw);
  return features;
}

PointSet standardize_columns(const PointSet& points) {
  check_points(points);
  const std::size_t p = points.front().size();
  PointSet out = points;
  std::vector<double> column(points.size());
  for (std::size_t c = 0; c < p; ++c) {
    for (std::size_t r = 0; r < points.size(); ++r) column[r] = points[r][c];
    const double m = mean(column);
    const double sd = sample_sd(column);
    for (std::size_t r = 0; r < points.size(); ++r) {
      out[r][c] = sd > 0.0 ? (points[r][c] - m) / sd : 0.0;
    }
  }
  return out;
}

std::string_view to_string(Linkage linkage) {
  switch (linkage) {
    case Linkage::Ward: return "ward";
    case Linkage::Complete: return "complete";
    case Linkage::Average: return "average";
  }
  return "unknown";
}

Linkage parse_linkage(std::string_view text) {
  const std::string key = to_lower(trim(text));
  if (key == "ward") return Linkage::Ward;
  if (key == "complete") return Linkage::Complete;
  if (key == "average") return Linkage::Average;
  throw InputError("unknown linkage '" + std::string(text) + "' (expected ward, complete, average)");
}

Dendrogram agglomerate(const PointSet& points, Linkage linkage) {
  check_points(points);
  const std::size_t n = points.size();
  if (n < 2) throw InputError("agglomeration needs at least two points");

  // Ward works on squared distances; the other linkages on distances.
  const bool squared = linkage == Linkage::Ward;
  std::vector<double> dist(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d2 = squared_distance(points[i], points[j]);
      dist[i * n + j] = dist[j * n + i] = squared ? d2 : std::sqrt(d2);
    }
  }
  std::vector<bool> active(n, true);
  std::vector<std::size_t> node(n);
  std::iota(node.begin(), node.end(), 0);
  std::vector<std::size_t> size(n, 1);

  Dendrogram tree;
  tree.leaves = n;
  tree.merges.reserve(n - 1);
  std::vector<std::pair<std::size_t, std::size_t>> children;
  for (std::size_t step = 0; step + 1 < n; ++step) {
    std::size_t best_i = 0;
    std::size_t best_j = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      if (!active[i]) continue;
      for (std::size_t j = i + 1; j < n; ++j) {
        if (active[j] && dist[i * n + j] < best) {
          best = dist[i * n + j];
          best_i = i;
          best_j = j;
        }
      }
    }
    const double ni = static_cast<double>(size[best_i]);
    const double nj = static_cast<double>(size[best_j]);
    for (std::size_t k = 0; k < n; ++k) {
      if (!active[k] || k == best_i || k == best_j) continue;
      const double dki = dist[k * n + best_i];
      const double dkj = dist[k * n + best_j];
      double updated = 0.0;
      switch (linkage) {
        case Linkage::Ward: {
          const double nk = static_cast<double>(size[k]);
          updated = ((ni + nk) * dki + (nj + nk) * dkj - nk * best) / (ni + nj + nk);
          break;
        }
        case Linkage::Complete:
          updated = std::max(dki, dkj);
          break;
        case Linkage::Average:
          updated = (ni * dki + nj * dkj) / (ni + nj);
          break;
      }
      dist[k * n + best_i] = dist[best_i * n + k] = updated;
    }
    const std::size_t a = std::min(node[best_i], node[best_j]);
    const std::size_t b = std::max(node[best_i], node[best_j]);
    size[best_i] += size[best_j];
    active[best_j] = false;
    node[best_i] = n + step;
    tree.merges.push_back({a, b, squared ? std::sqrt(std::max(best, 0.0)) : best, size[best_i]});
    children.emplace_back(a, b);
  }

  std::vector<std::size_t> stack{2 * n - 2};
  while (!stack.empty()) {
    const std::size_t id = stack.back();
    stack.pop_back();
    if (id < n) {
      tree.leaf_order.push_back(id);
    } else {
      stack.push_back(children[id - n].second);
      stack.push_back(children[id - n].first);
    }
  }
  return tree;
}

std::vector<std::size_t> cut_tree(const Dendrogram& dendrogram, std::size_t k) {
  const std::size_t n = dendrogram.leaves;
  if (k < 1 || k > n) {
    throw InputError("cluster count " + std::to_string(k) + " outside [1, " + std::to_string(n) + "]");
  }
  std::vector<std::size_t> parent(2 * n - 1);
  std::iota(parent.begin(), parent.end(), 0);
  for (std::size_t m = 0; m < n - k; ++m) {
    const Merge& merge = dendrogram.merges[m];
    parent[find_root(parent, merge.a)] = n + m;
    parent[find_root(parent, merge.b)] = n + m;
  }
  std::vector<std::size_t> labels(n);
  std::map<std::size_t, std::size_t> label_of_root;
  for (std::size_t leaf = 0; leaf < n; ++leaf) {
    const std::size_t root = find_root(parent, leaf);
    const auto [it, inserted] = label_of_root.try_emplace(root, label_of_root.size());
    labels[leaf] = it->second;
  }
  return labels;
}

std::vector<std::size_t> order_clusters_by_rate(std::span<const std::size_t> assignment,
                                                std::span<const std::string> states,
                                                const CountyRateTable& table) {
  if (assignment.size() != states.size()) throw InputError("assignment and state list differ in size");
  const auto grouped = rates_by_state(table);
  const std::size_t k = cluster_count(assignment);
  std::vector<double> sum(k, 0.0);
  std::vector<double> count(k, 0.0);
  std::vector<std::size_t> first_member(k, std::numeric_limits<std::size_t>::max());
  for (std::size_t i = 0; i < states.size(); ++i) {
    const auto it = grouped.find(states[i]);
    if (it == grouped.end()) throw InputError("state " + states[i] + " has no counties");
    const std::size_t c = assignment[i];
    for (double r : it->second) sum[c] += r;
    count[c] += static_cast<double>(it->second.size());
    first_member[c] = std::min(first_member[c], i);
  }
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t c = 0; c < k; ++c) {
    if (count[c] == 0.0) throw InputError("cluster " + std::to_string(c + 1) + " is empty");
  }
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double ma = sum[a] / count[a];
    const double mb = sum[b] / count[b];
    if (ma != mb) return ma < mb;
    return first_member[a] < first_member[b];
  });
  std::vector<std::size_t> new_label(k);
  for (std::size_t rank = 0; rank < k; ++rank) new_label[order[rank]] = rank;
  std::vector<std::size_t> relabeled(assignment.size());
  for (std::size_t i = 0; i < assignment.size(); ++i) relabeled[i] = new_label[assignment[i]];
  return relabeled;
}

double within_dispersion(const PointSet& points, std::span<const std::size_t> assignment) {
  if (assignment.size() != points.size()) throw InputError("assignment and points differ in size");
  const std::size_t k = cluster_count(assignment);
  std::vector<double> pair_sum(k, 0.0);
  std::vector<double> size(k, 0.0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    size[assignment[i]] += 1.0;
    for (std::size_t j = i + 1; j < points.size(); ++j) {
      if (assignment[i] == assignment[j]) {
        pair_sum[assignment[i]] += 2.0 * squared_distance(points[i], points[j]);
      }
    }
  }
  double w = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    if (size[c] > 0.0) w += pair_sum[c] / (2.0 * size[c]);
  }
  return w;
}

GapResult gap_statistic(const PointSet& points, const GapOptions& options) {
  check_points(points);
  const std::size_t n = points.size();
  const std::size_t p = points.front().size();
  if (options.k_max < 1 || options.k_max >= n) {
    throw InputError("k_max must satisfy 1 <= k_max < item count (" + std::to_string(n) + ")");
  }
  if (options.references < 10) throw InputError("gap statistic needs at least 10 reference draws");
  if (std::all_of(points.begin(), points.end(), [&](const auto& row) { return row == points.front(); })) {
    throw NumericalError("degenerate features: all points are identical");
  }

  auto log_dispersions = [&](const PointSet& data) {
    const Dendrogram tree = agglomerate(data, options.linkage);
    std::vector<double> out(options.k_max);
    for (std::size_t k = 1; k <= options.k_max; ++k) {
      out[k - 1] = std::log(within_dispersion(data, cut_tree(tree, k)));
    }
    return out;
  };

  std::vector<double> lo(p, std::numeric_limits<double>::infinity());
  std::vector<double> hi(p, -std::numeric_limits<double>::infinity());
  for (const auto& row : points) {
    for (std::size_t c = 0; c < p; ++c) {
      lo[c] = std::min(lo[c], row[c]);
      hi[c] = std::max(hi[c], row[c]);
    }
  }

  const std::size_t refs = options.references;
  std::vector<std::vector<double>> reference_logs(refs);
  std::vector<std::exception_ptr> errors(refs);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t b = next++; b < refs; b = next++) {
      try {
        Rng rng(derive_seed(options.seed, "gap", b));
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        PointSet reference(n, std::vector<double>(p));
        for (auto& row : reference) {
          for (std::size_t c = 0; c < p; ++c) row[c] = lo[c] + (hi[c] - lo[c]) * unit(rng);
        }
        reference_logs[b] = log_dispersions(reference);
      } catch (...) {
        errors[b] = std::current_exception();
      }
    }
  };
  std::size_t workers = options.workers != 0 ? options.workers
                                             : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, refs);
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  for (const auto& error : errors) {
    if (error) std::rethrow_exception(error);
  }

  const std::vector<double> observed = log_dispersions(points);
  GapResult result;
  const double b = static_cast<double>(refs);
  for (std::size_t k = 1; k <= options.k_max; ++k) {
    double sum = 0.0;
    for (const auto& logs : reference_logs) sum += logs[k - 1];
    const double ref_mean = sum / b;
    double ss = 0.0;
    for (const auto& logs : reference_logs) ss += (logs[k - 1] - ref_mean) * (logs[k - 1] - ref_mean);
    const double sd = std::sqrt(ss / b);
    result.curve.push_back({k, observed[k - 1], ref_mean, ref_mean - observed[k - 1],
                            sd * std::sqrt(1.0 + 1.0 / b)});
  }
  result.chosen_k = options.k_max;
  for (std::size_t k = 1; k < options.k_max; ++k) {
    if (result.curve[k - 1].gap >= result.curve[k].gap - result.curve[k].se) {
      result.chosen_k = k;
      break;
    }
  }
  return result;
}

ClusterSummary summarize_clusters(std::span<const std::size_t> assignment,
                                  std::span<const std::string> states,
                                  const CountyRateTable& table) {
  if (assignment.size() != states.size()) throw InputError("assignment and state list differ in size");
  const auto grouped = rates_by_state(table);
  const std::size_t k = cluster_count(assignment);
  ClusterSummary summary;
  summary.clusters.resize(k);
  std::vector<std::vector<double>> rates(k);
  for (std::size_t i = 0; i < states.size(); ++i) {
    ClusterStats& cluster = summary.clusters[assignment[i]];
    cluster.members.push_back(states[i]);
    if (const auto it = grouped.find(states[i]); it != grouped.end()) {
      rates[assignment[i]].insert(rates[assignment[i]].end(), it->second.begin(), it->second.end());
    }
  }
  for (std::size_t c = 0; c < k; ++c) {
    ClusterStats& cluster = summary.clusters[c];
    if (cluster.members.empty() || rates[c].empty()) {
      throw InputError("cluster " + std::to_string(c + 1) + " is empty");
    }
    cluster.label = c;
    cluster.county_count = rates[c].size();
    cluster.mean = mean(rates[c]);
    cluster.sd = sample_sd(rates[c]);
    cluster.density = kernel_density(rates[c]);
  }
  return summary;
}

void write_gap_curve(std::ostream& out, const GapResult& gap, const Provenance& provenance) {
  out << provenance.comment_line() << '\n';
  out << "# chosen_k: " << gap.chosen_k << '\n';
  out << "k\tlog_w\treference_mean\tgap\tse\n";
  for (const auto& e : gap.curve) {
    out << e.k << '\t' << format_full(e.log_w) << '\t' << format_full(e.reference_mean) << '\t'
        << format_full(e.gap) << '\t' << format_full(e.se) << '\n';
  }
}

void write_assignments(std::ostream& out, std::span<const std::string> states,
                       std::span<const std::size_t> assignment, const Provenance& provenance) {
  out << provenance.comment_line() << '\n';
  out << "state\tcluster\n";
  for (std::size_t i = 0; i < states.size(); ++i) {
    out << states[i] << '\t' << (assignment[i] + 1) << '\n';
  }
}

void write_cluster_summary(std::ostream& out, const ClusterSummary& summary,
                           const Provenance& provenance) {
  out << provenance.comment_line() << '\n';
  for (const auto& cluster : summary.clusters) {
    out << "[cluster " << (cluster.label + 1) << "]\n";
    out << "states\t" << cluster.members.size() << '\n';
    out << "counties\t" << cluster.county_count << '\n';
    out << "mean\t" << format_full(cluster.mean) << '\n';
    out << "sd\t" << format_full(cluster.sd) << '\n';
    out << "members\t";
    for (std::size_t i = 0; i < cluster.members.size(); ++i) {
      out << (i > 0 ? "," : "") << cluster.members[i];
    }
    out << '\n';
    out << "[density]\n";
    if (cluster.density.point_mass) {
      out << "point_mass\t" << format_full(cluster.density.point_mass_location) << '\n';
      continue;
    }
    out << "x\tdensity\n";
    for (std::size_t g = 0; g < cluster.density.grid.size(); ++g) {
      out << format_full(cluster.density.grid[g]) << '\t'
          << format_full(cluster.density.density[g]) << '\n';
    }
  }
}

}  // namespace vaxbayes
