#include "imputeinr/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "imputeinr/errors.hpp"

namespace imputeinr {

std::vector<std::size_t> ClusterPartition::group_sizes() const {
  std::vector<std::size_t> sizes(k, 0);
  for (std::size_t a : assignment) ++sizes[a];
  return sizes;
}

std::vector<std::vector<std::size_t>> ClusterPartition::members() const {
  std::vector<std::vector<std::size_t>> out(k);
  for (std::size_t i = 0; i < assignment.size(); ++i) out[assignment[i]].push_back(i);
  return out;
}

void ClusterPartition::validate() const {
  std::vector<bool> used(k, false);
  for (std::size_t a : assignment) {
    if (a >= k) throw ShapeError("cluster id out of range");
    used[a] = true;
  }
  if (std::find(used.begin(), used.end(), false) != used.end())
    throw ShapeError("cluster assignment is not surjective");
  if (pi.size() != assignment.size()) throw ShapeError("permutation length differs from N");
  std::vector<bool> seen(pi.size(), false);
  for (std::size_t p : pi) {
    if (p >= pi.size() || seen[p]) throw ShapeError("pi is not a permutation");
    seen[p] = true;
  }
}

SimilarityMatrix similarity_matrix(const TimeSeriesWindow& w) {
  const std::size_t n = w.n_vars();
  const std::size_t t_len = w.length();
  SimilarityMatrix sim{Matrix(n, n, 0.0)};
  const long pairs = static_cast<long>(n * n);
  // Each (i, j) is computed independently; only the upper triangle does work.
#pragma omp parallel for schedule(dynamic)
  for (long idx = 0; idx < pairs; ++idx) {
    const std::size_t i = static_cast<std::size_t>(idx) / n;
    const std::size_t j = static_cast<std::size_t>(idx) % n;
    if (j <= i) continue;
    double count = 0.0, mi = 0.0, mj = 0.0;
    for (std::size_t t = 0; t < t_len; ++t)
      if (w.mask(i, t) == 1.0 && w.mask(j, t) == 1.0) {
        mi += w.values(i, t);
        mj += w.values(j, t);
        count += 1.0;
      }
    double r = 0.0;
    if (count >= 2.0) {
      mi /= count;
      mj /= count;
      double sij = 0.0, sii = 0.0, sjj = 0.0;
      for (std::size_t t = 0; t < t_len; ++t)
        if (w.mask(i, t) == 1.0 && w.mask(j, t) == 1.0) {
          const double a = w.values(i, t) - mi;
          const double b = w.values(j, t) - mj;
          sij += a * b;
          sii += a * a;
          sjj += b * b;
        }
      if (sii > 0.0 && sjj > 0.0) r = std::clamp(sij / std::sqrt(sii * sjj), -1.0, 1.0);
    }
    sim.s(i, j) = r;
    sim.s(j, i) = r;
  }
  for (std::size_t i = 0; i < n; ++i) sim.s(i, i) = 1.0;
  return sim;
}

double average_linkage(const SimilarityMatrix& sim, const std::vector<std::size_t>& a,
                       const std::vector<std::size_t>& b) {
  double total = 0.0;
  for (std::size_t i : a)
    for (std::size_t j : b) total += 1.0 - sim.s(i, j);
  return total / static_cast<double>(a.size() * b.size());
}

ClusterPartition agglomerate(const SimilarityMatrix& sim, double epsilon) {
  if (epsilon < 0.0) throw ShapeError("epsilon must be non-negative");
  const std::size_t n = sim.s.rows;
  // Clusters stay sorted by their minimum member (the first element), so scanning pairs in
  // index order realizes the lexicographic tie-break.
  std::vector<std::vector<std::size_t>> clusters(n);
  for (std::size_t i = 0; i < n; ++i) clusters[i] = {i};

  while (clusters.size() > 1) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 0; i < clusters.size(); ++i)
      for (std::size_t j = i + 1; j < clusters.size(); ++j) {
        const double d = average_linkage(sim, clusters[i], clusters[j]);
        if (d < best) {
          best = d;
          bi = i;
          bj = j;
        }
      }
    if (!(best < epsilon)) break;
    auto& target = clusters[bi];
    target.insert(target.end(), clusters[bj].begin(), clusters[bj].end());
    std::sort(target.begin(), target.end());
    clusters.erase(clusters.begin() + static_cast<long>(bj));
  }

  ClusterPartition p;
  p.k = clusters.size();
  p.assignment.assign(n, 0);
  for (std::size_t c = 0; c < clusters.size(); ++c)
    for (std::size_t v : clusters[c]) p.assignment[v] = c;
  return permutation_from_clusters(std::move(p));
}

ClusterPartition permutation_from_clusters(ClusterPartition p) {
  p.pi.resize(p.assignment.size());
  std::iota(p.pi.begin(), p.pi.end(), 0);
  std::stable_sort(p.pi.begin(), p.pi.end(),
                   [&](std::size_t a, std::size_t b) { return p.assignment[a] < p.assignment[b]; });
  return p;
}

ClusterPartition partition_from_assignment(const std::vector<std::size_t>& assignment) {
  // Relabel so ids follow first appearance, i.e. smallest member index.
  std::vector<std::size_t> relabel;
  std::vector<std::size_t> seen_ids;
  ClusterPartition p;
  p.assignment.resize(assignment.size());
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    auto it = std::find(seen_ids.begin(), seen_ids.end(), assignment[i]);
    if (it == seen_ids.end()) {
      seen_ids.push_back(assignment[i]);
      it = seen_ids.end() - 1;
    }
    p.assignment[i] = static_cast<std::size_t>(it - seen_ids.begin());
  }
  p.k = seen_ids.size();
  return permutation_from_clusters(std::move(p));
}

ClusterPartition contiguous_partition(const std::vector<std::size_t>& sizes) {
  std::vector<std::size_t> assignment;
  for (std::size_t g = 0; g < sizes.size(); ++g) assignment.insert(assignment.end(), sizes[g], g);
  ClusterPartition p;
  p.assignment = std::move(assignment);
  p.k = sizes.size();
  return permutation_from_clusters(std::move(p));
}

Matrix reorder_rows(const Matrix& grid, const ClusterPartition& p) {
  if (p.pi.size() != grid.rows) throw ShapeError("reorder: permutation length differs from N");
  Matrix out(grid.rows, grid.cols);
  for (std::size_t i = 0; i < grid.rows; ++i)
    std::copy(grid.row(p.pi[i]).begin(), grid.row(p.pi[i]).end(), out.row(i).begin());
  return out;
}

Matrix inverse_reorder(const Matrix& grid, const ClusterPartition& p) {
  if (p.pi.size() != grid.rows) throw ShapeError("inverse_reorder: permutation length differs from N");
  Matrix out(grid.rows, grid.cols);
  for (std::size_t i = 0; i < grid.rows; ++i)
    std::copy(grid.row(i).begin(), grid.row(i).end(), out.row(p.pi[i]).begin());
  return out;
}

TimeSeriesWindow reorder(const TimeSeriesWindow& w, const ClusterPartition& p) {
  TimeSeriesWindow out = w;
  out.values = reorder_rows(w.values, p);
  out.mask = reorder_rows(w.mask, p);
  for (std::size_t i = 0; i < p.pi.size(); ++i) out.variable_names[i] = w.variable_names[p.pi[i]];
  return out;
}

}  // namespace imputeinr
