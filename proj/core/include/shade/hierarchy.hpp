#pragma once

#include <iosfwd>
#include <vector>

#include "shade/dataset.hpp"
#include "shade/dc_core.hpp"

namespace shade {

/// One node of the condensed structure tree. `height` is the dc-tree height
/// of the defining node; `leaf_count` counts every point attached at or below
/// this node, including bordering points that are direct members of no child.
struct StructureNode {
  int id = -1;
  int parent = -1;                 // -1 for the root
  std::vector<int> children;
  double height = 0.0;
  int leaf_count = 0;
  int dc_node = -1;                // defining dc-tree node, -1 if synthetic
  std::vector<int> direct_members; // bordering points attached here
};

/// Condensation of a DcTree to the nodes whose children each hold at least mu
/// leaves. Node ids are assigned in depth-first preorder, so id 0 is the root.
struct StructureTree {
  std::vector<StructureNode> nodes;
  int root = -1;
  int mu = 0;
  int n_points = 0;
  std::vector<int> home;  // per point: the lowest structure node containing it
};

/// Flat clustering with noise. Labels are contiguous 0..k-1; kNoiseLabel (-1)
/// marks noise.
struct ClusterAssignment {
  std::vector<int> labels;
  int k = 0;
  double noise_ratio = 0.0;
};

/// Builds the structure tree for a given mu (mu >= 2).
///
/// A dc-tree node qualifies when each of its child subtrees holds >= mu
/// leaves. Runs of non-qualifying nodes between qualifying ones collapse into
/// the lower node, which keeps its own height; their hanging leaves become
/// bordering members of the nearest qualifying ancestor. Points with no
/// qualifying ancestor attach to the topmost qualifying node (the root). If
/// nothing qualifies the tree degenerates to a single root holding all points.
StructureTree build_structure_tree(const DcTree& tree, int mu);

/// Persistence score of a node: (1/height - 1/parent_height) * leaf_count.
/// The root's parent height counts as infinite (term 0). A height of zero
/// (all-coincident subcluster) yields +infinity, treated as maximal by the
/// extraction pass.
double stability(const StructureTree& tree, int node_id);

/// Most stable flat clustering.
///
/// Bottom-up, a node is flagged when its own stability strictly exceeds the
/// best total stability of its children (structure-tree leaves are always
/// flagged); otherwise it carries the children's sum. Top-down, the first
/// flagged node on each root-to-leaf path becomes a cluster. Points whose
/// lowest containing node lies under no emitted cluster are noise.
ClusterAssignment extract_clusters(const StructureTree& tree);

/// Total stability of the emitted clustering (sum over emitted nodes).
double extracted_total_stability(const StructureTree& tree);

/// DBSCAN*-style cut: connected components of leaves joined at heights
/// <= epsilon; components with fewer than mu points become noise.
ClusterAssignment cut_at_epsilon(const DcTree& tree, double epsilon, int mu);

/// Reassigns every noise point to the cluster of its Euclidean-nearest
/// non-noise point in `embedding` (ties go to the lower point index).
/// Throws when every point is noise.
ClusterAssignment assign_noise_1nn(const Matrix& embedding,
                                   const ClusterAssignment& assignment);

/// Dump mirroring the dc-tree format plus a stability column:
/// `node_id parent_id height leaf_count stability`.
void dump_structure_tree(const StructureTree& tree, std::ostream& os);

}  // namespace shade
