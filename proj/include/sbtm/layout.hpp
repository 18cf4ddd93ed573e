#pragma once

#include <utility>

#include "sbtm/error.hpp"

namespace sbtm {

// Canonical ordering of block cells and state entries.
//
// Directed networks use all k*k ordered class pairs in column-major order,
// so block (a,b) sits at (b-1)*k + (a-1), matching the vectorization of a
// k x k matrix by stacked columns. Undirected networks keep only unordered
// pairs a <= b, column-major over the upper triangle.
//
// Transition states stack the u=0 block before the u=1 block, giving state
// and observation vectors of length 2 * num_blocks(). Classes are 1-based;
// class 0 is reserved for "absent at the previous step" and never indexes
// a block.
class CellLayout {
 public:
  CellLayout(int k, bool directed) : k_(k), directed_(directed) {
    if (k < 1) throw ConfigError("class count k must be >= 1");
  }

  int k() const { return k_; }
  bool directed() const { return directed_; }

  int num_blocks() const { return directed_ ? k_ * k_ : k_ * (k_ + 1) / 2; }
  int num_transition_entries() const { return 2 * num_blocks(); }

  // (a,b) -> flat block index; undirected keys are canonicalized to a <= b.
  int block_index(int a, int b) const {
    if (!directed_ && a > b) std::swap(a, b);
    return directed_ ? (b - 1) * k_ + (a - 1) : b * (b - 1) / 2 + (a - 1);
  }

  std::pair<int, int> block_at(int idx) const {
    if (directed_) return {idx % k_ + 1, idx / k_ + 1};
    int b = 1;
    while (b * (b + 1) / 2 <= idx) ++b;
    return {idx - b * (b - 1) / 2 + 1, b};
  }

  // Index into a stacked transition vector: u=0 entries first, then u=1.
  int transition_index(int a, int b, int u) const {
    return u * num_blocks() + block_index(a, b);
  }

 private:
  int k_;
  bool directed_;
};

}  // namespace sbtm
