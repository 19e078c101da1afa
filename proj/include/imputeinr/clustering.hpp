#pragma once

#include <cstddef>
#include <vector>

#include "imputeinr/matrix.hpp"
#include "imputeinr/timeseries.hpp"

namespace imputeinr {

/// Symmetric N×N Pearson similarities with unit diagonal.
struct SimilarityMatrix {
  Matrix s;
};

/// Cluster ids per variable (surjective onto [0, k), numbered by smallest member index) and
/// the permutation `pi` that makes clusters contiguous: reordered row i is original row pi[i].
struct ClusterPartition {
  std::vector<std::size_t> assignment;
  std::size_t k = 0;
  std::vector<std::size_t> pi;

  std::size_t n_vars() const { return assignment.size(); }
  /// |C_k| in cluster-id order, which is also the contiguous block order after reordering.
  std::vector<std::size_t> group_sizes() const;
  std::vector<std::vector<std::size_t>> members() const;
  /// Throws ShapeError on a non-surjective assignment or a non-bijective pi.
  void validate() const;
};

/// Pearson correlation over timestamps where both variables are observed. Pairs with fewer
/// than two common observations, or zero variance over them, get 0.
SimilarityMatrix similarity_matrix(const TimeSeriesWindow& w);

/// Average-linkage agglomeration on distance 1 − s. Merges the closest pair while its
/// distance is below `epsilon`; ties go to the lexicographically smallest pair of cluster
/// minimum indices. Returns a partition with `pi` filled.
ClusterPartition agglomerate(const SimilarityMatrix& sim, double epsilon);

/// Average-linkage distance between two sets of variables.
double average_linkage(const SimilarityMatrix& sim, const std::vector<std::size_t>& a,
                       const std::vector<std::size_t>& b);

/// Fills `pi` by stable ordering on (cluster id, original index).
ClusterPartition permutation_from_clusters(ClusterPartition p);

/// Partition from explicit cluster ids; relabels ids by smallest member index.
ClusterPartition partition_from_assignment(const std::vector<std::size_t>& assignment);
/// Contiguous blocks of the original order with the given sizes (pi = identity).
ClusterPartition contiguous_partition(const std::vector<std::size_t>& sizes);

TimeSeriesWindow reorder(const TimeSeriesWindow& w, const ClusterPartition& p);
Matrix reorder_rows(const Matrix& grid, const ClusterPartition& p);
Matrix inverse_reorder(const Matrix& grid, const ClusterPartition& p);

}  // namespace imputeinr
