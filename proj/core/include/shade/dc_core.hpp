#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "shade/dataset.hpp"

namespace shade {

/// Core distances of a dataset: core_dist[i] is the distance from point i to
/// its mu-th nearest neighbor (the point itself excluded).
struct DistanceContext {
  int n = 0;
  int mu = 0;
  Vector core_dist;
};

/// One edge of the minimum spanning tree over the mutual reachability graph.
struct MstEdge {
  int u = 0;
  int v = 0;
  double weight = 0.0;
};

/// Binary dendrogram storing density-connectivity distances.
///
/// Node ids 0..n-1 are the leaves (equal to the point index), ids n..2n-2 are
/// internal nodes in merge order, so a parent id is always larger than its
/// children's ids and heights are non-decreasing toward the root. The
/// distance between two points is the height of their lowest common ancestor.
struct DcTree {
  int n_points = 0;
  std::vector<int> parent;      // -1 for the root
  std::vector<int> left;        // -1 for leaves
  std::vector<int> right;       // -1 for leaves
  std::vector<double> height;   // 0 for leaves
  std::vector<int> leaf_count;  // 1 for leaves
  int root = -1;

  int node_count() const { return 2 * n_points - 1; }
  bool is_leaf(int id) const { return id < n_points; }
};

/// All pairwise Euclidean distances. Throws std::invalid_argument on
/// non-finite input or fewer than two points.
Matrix pairwise_euclidean(const Matrix& data);

/// Per-point distance to the mu-th nearest neighbor, self excluded.
/// Requires mu >= 1 and n >= mu + 1.
Vector core_distances(const Matrix& distances, int mu);

DistanceContext make_distance_context(const Matrix& distances, int mu);

/// max(d_eucl, core_i, core_j); all inputs must be nonnegative and finite.
double mutual_reachability(double d_eucl, double core_i, double core_j);

using WeightFn = std::function<double(int, int)>;

/// Dense Prim MST over the complete graph given by `weight`. Edge ties are
/// broken by lexicographic (min(u,v), max(u,v)) so the result is
/// deterministic. Returned edges are sorted ascending by (weight, tie key).
std::vector<MstEdge> build_mst(int n, const WeightFn& weight);

/// Convenience: MST of the mutual reachability graph of a dataset.
std::vector<MstEdge> build_mutual_reachability_mst(const Matrix& distances,
                                                   const DistanceContext& ctx);

/// Merges MST edges in ascending (weight, tie key) order with union-find;
/// every union adds an internal node at the edge weight. Throws if the edges
/// do not form a spanning tree over n points.
DcTree build_dc_tree(int n, std::vector<MstEdge> edges);

/// Height of the lowest common ancestor of leaves i and j; 0 when i == j.
double dc_distance(const DcTree& tree, int i, int j);

/// |indices| x |indices| matrix of dc distances (zero diagonal, symmetric).
Matrix dc_distance_submatrix(const DcTree& tree, std::span<const int> indices);

/// Constant-time dc-distance queries backed by an Euler tour + sparse-table
/// lowest-common-ancestor index. Optionally precomputes the dense n x n
/// matrix, which is faster for repeated batch lookups on small datasets.
class DcDistanceOracle {
 public:
  explicit DcDistanceOracle(const DcTree& tree, bool dense_cache = false);

  double operator()(int i, int j) const;
  void submatrix(std::span<const int> indices, Matrix& out) const;

 private:
  int lca(int i, int j) const;

  const DcTree* tree_;
  std::vector<int> first_visit_;   // first euler position per node
  std::vector<int> euler_nodes_;   // node id per euler position
  std::vector<int> euler_depth_;   // depth per euler position
  std::vector<std::vector<int>> sparse_;  // argmin-depth table over positions
  std::unique_ptr<Matrix> dense_;
};

/// Line-oriented dump, one node per line: `node_id parent_id height
/// leaf_count`. Leaf ids equal the point index and carry height 0.
void dump_dc_tree(const DcTree& tree, std::ostream& os);
DcTree load_dc_tree_dump(std::istream& is);

}  // namespace shade
