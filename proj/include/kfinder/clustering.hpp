#pragma once

// Clusterings as lists of index sets, and conversions to and from label vectors.

#include <algorithm>
#include <string>
#include <vector>

#include "kfinder/linalg.hpp"

namespace kfinder {

/// Cluster h holds the sorted indices of its points.
using Clustering = std::vector<IndexSet>;

/// Labels are 1-based; label l goes to cluster l - 1. Empty clusters are dropped.
inline Clustering clusters_from_labels(const std::vector<int>& labels) {
  int k = 0;
  for (int l : labels) {
    if (l < 1) throw Error("bad-label", std::to_string(l));
    k = std::max(k, l);
  }
  Clustering out(static_cast<std::size_t>(k));
  for (Index i = 0; i < labels.size(); ++i) out[static_cast<std::size_t>(labels[i] - 1)].push_back(i);
  std::erase_if(out, [](const IndexSet& s) { return s.empty(); });
  return out;
}

inline std::vector<int> labels_from_clusters(const Clustering& clusters, Index n) {
  std::vector<int> labels(n, 0);
  for (std::size_t h = 0; h < clusters.size(); ++h)
    for (Index i : clusters[h]) labels.at(i) = static_cast<int>(h + 1);
  return labels;
}

/// Throws "not-a-partition" unless the clusters are nonempty, disjoint and cover 0..n-1.
inline void check_partition(const Clustering& clusters, Index n) {
  std::vector<char> seen(n, 0);
  Index covered = 0;
  for (const auto& c : clusters) {
    if (c.empty()) throw Error("not-a-partition", "empty cluster");
    for (Index i : c) {
      if (i >= n) throw Error("bad-index", std::to_string(i));
      if (seen[i]) throw Error("not-a-partition", "index " + std::to_string(i) + " repeated");
      seen[i] = 1;
      ++covered;
    }
  }
  if (covered != n) throw Error("not-a-partition", "clusters do not cover every point");
}

/// Smallest cluster size over n.
inline double min_weight(const Clustering& clusters) {
  if (clusters.empty()) throw Error("not-a-partition", "no clusters");
  Index n = 0, smallest = clusters.front().size();
  for (const auto& c : clusters) {
    n += c.size();
    smallest = std::min(smallest, c.size());
  }
  if (n == 0) throw Error("not-a-partition", "empty clusters");
  return static_cast<double>(smallest) / static_cast<double>(n);
}

/// Points whose cluster differs from the majority ground-truth label of that
/// cluster, plus unassigned points. `truth` holds 1-based labels.
inline Index misassigned_count(const Clustering& found, const std::vector<int>& truth) {
  Index agree = 0;
  for (const auto& c : found) {
    std::vector<Index> votes;
    for (Index i : c) {
      const auto l = static_cast<std::size_t>(truth.at(i));
      if (votes.size() <= l) votes.resize(l + 1, 0);
      ++votes[l];
    }
    if (!votes.empty()) agree += *std::max_element(votes.begin(), votes.end());
  }
  return truth.size() - agree;
}

}  // namespace kfinder
