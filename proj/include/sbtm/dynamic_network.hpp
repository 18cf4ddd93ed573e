#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "sbtm/error.hpp"
#include "sbtm/layout.hpp"

namespace sbtm {

using Adjacency = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

// Aligned sequence of binary adjacency snapshots over one global node index.
// Inactive nodes keep their row/column but must be all-zero. Undirected
// networks store symmetric matrices. Immutable by convention once built.
struct DynamicNetwork {
  std::vector<Adjacency> snapshots;          // T matrices, N x N, zero diagonal
  std::vector<std::string> node_ids;         // size N, stable external ids
  std::vector<std::vector<std::uint8_t>> activity;  // [t][i] node i present at t
  bool directed = true;

  int num_steps() const { return static_cast<int>(snapshots.size()); }
  int num_nodes() const { return static_cast<int>(node_ids.size()); }
  bool is_active(int t, int i) const { return activity[t][i] != 0; }
  int active_count(int t) const;
  std::vector<int> active_nodes(int t) const;

  // Total edge-step count (each present edge at each step counts once;
  // undirected edges count once per unordered pair).
  long long edge_step_count() const;

  void validate() const;  // throws DataError on invariant violations
};

// Per-step class memberships. labels[t][i] in {0,..,k}; 0 iff inactive at t.
struct ClassSequence {
  int k = 0;
  std::vector<Eigen::VectorXi> labels;

  int num_steps() const { return static_cast<int>(labels.size()); }
  void validate_against(const DynamicNetwork& net) const;
};

// One node pair inside a block cell, with its classes at the previous step
// (0 when the node was absent at t-1).
struct PairEntry {
  int i, j;
  int prev_a, prev_b;
};

// Partition of the active ordered pairs at time t into cells keyed by
// (current class a, current class b, previous edge state u). Undirected
// networks hold unordered pairs keyed by a <= b.
struct BlockCells {
  CellLayout layout;
  int t = 0;  // zero-based step the cells describe
  std::vector<std::vector<PairEntry>> members;  // indexed by transition_index

  explicit BlockCells(const CellLayout& lay)
      : layout(lay), members(lay.num_transition_entries()) {}

  const std::vector<PairEntry>& cell(int a, int b, int u) const {
    return members[layout.transition_index(a, b, u)];
  }
  long long count(int a, int b, int u) const {
    return static_cast<long long>(cell(a, b, u).size());
  }
  long long total_pairs() const;
};

struct WindowSpec {
  double length = 0;  // window length in timestamp units (seconds for ISO input)
  double origin = 0;  // timestamp of the start of window 1
  bool origin_from_data = true;  // use the first event time as the origin
  int max_steps = 0;             // truncate to this many windows (0 = keep all)
};

// Bucket a (timestamp, src, dst) event stream into snapshot windows.
// Timestamps are either plain numbers or ISO-8601 dates/datetimes (UTC).
// A node is active at t iff it appears as src or dst of an event in window t.
DynamicNetwork load_temporal_edges(std::istream& stream, const WindowSpec& window,
                                   bool directed);
DynamicNetwork load_temporal_edges_file(const std::string& path,
                                        const WindowSpec& window, bool directed);

// Write/read the snapshot interchange format: lines "t<TAB>src<TAB>dst" with
// 1-based t, plus an activity sidecar "t<TAB>node" covering isolated nodes.
void write_snapshots(const DynamicNetwork& net, const std::string& edges_path,
                     const std::string& activity_path);
DynamicNetwork load_snapshots(const std::string& edges_path,
                              const std::string& activity_path, bool directed);

// Write the raw edge-list format (timestamp = origin + (t-1) * window).
void write_temporal_edges(const DynamicNetwork& net, std::ostream& out,
                          double window, double origin);

// Drop nodes active in fewer than min_active steps or whose aggregate
// in-degree and out-degree are both below min_degree thresholds. Applied
// jointly in one pass by default; iterate=true repeats until stable.
DynamicNetwork activity_filter(const DynamicNetwork& net, int min_active,
                               int min_degree, bool iterate = false);

// Cells for time step t (zero-based, t >= 1): every active pair at t is
// assigned by (c_i^t, c_j^t, w_ij^{t-1}); nodes absent at t-1 contribute
// u=0 pairs with previous class 0.
BlockCells block_cells(const DynamicNetwork& net, const ClassSequence& classes,
                       int t);

// Same partition built from raw pieces: previous snapshot plus previous and
// current labels (0 = inactive). Undirected pairs are oriented so current
// classes are canonical (a <= b), previous classes following along.
BlockCells block_cells_from(const Adjacency& w_prev,
                            const Eigen::VectorXi& prev,
                            const Eigen::VectorXi& cur,
                            const CellLayout& layout);

// Lengths of maximal runs of consecutive presence, per (un)ordered pair.
// Runs touching the observation boundary are counted at face value.
std::vector<int> edge_durations(const DynamicNetwork& net);

// Class-sequence CSV: "t,node_id,class" with 1-based t.
void write_class_sequence(const ClassSequence& classes,
                          const std::vector<std::string>& node_ids,
                          const std::string& path);
ClassSequence load_class_sequence(const std::string& path,
                                  const std::vector<std::string>& node_ids);

// Single membership vector CSV: "node_id,class".
void write_membership(const Eigen::VectorXi& labels,
                      const std::vector<std::string>& node_ids,
                      const std::string& path);

}  // namespace sbtm
