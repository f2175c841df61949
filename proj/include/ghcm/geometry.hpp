#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "ghcm/model.hpp"

namespace ghcm {

using VertexId = std::uint32_t;
using BlockId = std::int64_t;

inline constexpr BlockId kNoBlock = -1;

struct Vertex {
  VertexId id = 0;
  std::vector<double> position;
};

struct Observation {
  VertexId u = 0;
  VertexId v = 0;
  double y = 0.0;
};

// A sampled GHCM graph. Positions are stored per axis; observations are a
// symmetric CSR structure whose rows are sorted by neighbor id.
class Instance {
 public:
  Instance() = default;

  // Assembles an instance from raw parts; `pairs` may come in any order but
  // must not repeat an unordered pair.
  static Instance from_parts(ModelSpec spec, std::uint64_t seed,
                             std::vector<std::vector<double>> coords, std::vector<int> truth,
                             std::vector<Observation> pairs);

  const ModelSpec& spec() const { return spec_; }
  std::uint64_t seed() const { return seed_; }
  int dim() const { return spec_.d; }
  std::size_t num_vertices() const { return truth_.size(); }
  std::size_t num_observations() const { return neighbors_.size() / 2; }

  const std::vector<int>& truth() const { return truth_; }
  std::span<const double> axis(int a) const { return coords_[static_cast<std::size_t>(a)]; }
  double coord(VertexId u, int a) const { return coords_[static_cast<std::size_t>(a)][u]; }
  Vertex vertex(VertexId u) const;

  std::span<const VertexId> neighbors(VertexId u) const {
    return {neighbors_.data() + offsets_[u], neighbors_.data() + offsets_[u + 1]};
  }
  std::span<const double> values(VertexId u) const {
    return {values_.data() + offsets_[u], values_.data() + offsets_[u + 1]};
  }
  std::optional<double> observation(VertexId u, VertexId v) const;

  // All pairs u < v in (u, v) order.
  std::vector<Observation> observation_list() const;

  // Replaces observation values in place, keeping the pair structure.
  // `value_of(u, v, y)` is called once per unordered pair with u < v.
  template <typename F>
  Instance with_values(F&& value_of) const;

 private:
  ModelSpec spec_;
  std::uint64_t seed_ = 0;
  std::vector<std::vector<double>> coords_;
  std::vector<int> truth_;
  std::vector<std::uint64_t> offsets_{0};
  std::vector<VertexId> neighbors_;
  std::vector<double> values_;
};

double toroidal_distance(std::span<const double> u, std::span<const double> v, double side);

// Samples GHCM(spec) deterministically from `seed`.
Instance sample_instance(const ModelSpec& spec, std::uint64_t seed);

// Pairs (u < v) with toroidal distance <= radius, found with a uniform
// bucket grid of cell side >= radius. Output sorted by (u, v).
std::vector<std::pair<VertexId, VertexId>> visible_pairs(
    const std::vector<std::vector<double>>& coords, double side, double radius);

// Partition of the torus into m^d congruent cubes.
struct BlockGrid {
  double chi = 0.0;
  int d = 1;
  std::int64_t blocks_per_axis = 0;
  double block_side = 0.0;
  double side = 0.0;
  double radius = 0.0;
  std::vector<std::uint32_t> offsets;  // CSR over blocks, size num_blocks() + 1
  std::vector<VertexId> members;
  std::vector<BlockId> block_of_vertex;

  std::int64_t num_blocks() const { return static_cast<std::int64_t>(offsets.size()) - 1; }
  std::span<const VertexId> members_of(BlockId b) const {
    return {members.data() + offsets[static_cast<std::size_t>(b)],
            members.data() + offsets[static_cast<std::size_t>(b) + 1]};
  }
  std::size_t count(BlockId b) const {
    return offsets[static_cast<std::size_t>(b) + 1] - offsets[static_cast<std::size_t>(b)];
  }
  std::vector<std::int64_t> cell_of(BlockId b) const;
  BlockId block_at(std::span<const std::int64_t> cell) const;
  // Exact sup over both blocks of the toroidal distance, squared.
  double sup_distance_sq(BlockId a, BlockId b) const;
  bool mutually_visible(BlockId a, BlockId b) const;
};

// m = ceil(n^(1/d) / (chi log n)^(1/d)) blocks per axis.
BlockGrid build_grid(const Instance& instance, double chi);
BlockGrid build_grid(const ModelSpec& spec, const std::vector<std::vector<double>>& coords,
                     double chi);

// Graph on delta-occupied blocks (count > delta log n); blocks are adjacent
// when every pair of their points is within the visibility radius.
struct VisibilityGraph {
  double delta = 0.0;
  double threshold = 0.0;           // delta * log n
  std::vector<BlockId> occupied;    // ascending
  std::vector<std::uint32_t> adj_offsets;
  std::vector<std::uint32_t> adj;   // positions in `occupied`, ascending per row
  int d = 1;
  std::int64_t blocks_per_axis = 0;

  std::size_t size() const { return occupied.size(); }
  bool is_occupied(BlockId b) const;
  std::span<const std::uint32_t> neighbors_at(std::size_t pos) const {
    return {adj.data() + adj_offsets[pos], adj.data() + adj_offsets[pos + 1]};
  }
  std::vector<std::pair<BlockId, BlockId>> edges() const;
};

VisibilityGraph build_visibility_graph(const BlockGrid& grid, double delta, double log_n);

struct TreeStep {
  BlockId block = kNoBlock;
  BlockId parent = kNoBlock;
};

// BFS from the lowest occupied block, neighbors in ascending order. Throws
// Error(kDisconnected) when the graph has more than one component.
std::vector<TreeStep> bfs_spanning_order(const VisibilityGraph& vg);

// Components in order of their first block. For d = 1 each component is
// listed left to right starting from its leftmost block on the circle.
std::vector<std::vector<BlockId>> connected_components(const VisibilityGraph& vg);

// Largest chi satisfying the block-size conditions that make the visibility
// graph connected w.h.p., times 0.99. Throws kInfeasibleRegime unless
// lambda nu_d > 1 (d >= 2) or lambda > 1 (d = 1).
double compute_chi(double lambda, int d);

// g(x) = x (log x - log(mu)) + mu - x, the Poisson lower-tail rate function.
double poisson_tail_rate(double x, double mu);

struct DeltaSolution {
  double delta = 0.0;
  double gamma = 0.0;
  double visible_volume = 0.0;  // nu with lambda * nu > 1
};

// Occupancy threshold matched to chi; delta = 0.99 * gamma * chi (d = 1) or
// 0.99 * gamma * chi / (nu_d R_d^d) (d >= 2) with g(gamma) = (1 + lambda nu) / 2.
DeltaSolution compute_delta(double lambda, int d, double chi);

// Connectivity of the vertex graph whose edges are the observed pairs.
bool vertex_graph_connected(const Instance& instance);

template <typename F>
Instance Instance::with_values(F&& value_of) const {
  Instance out = *this;
  for (VertexId u = 0; u < num_vertices(); ++u) {
    for (std::uint64_t e = offsets_[u]; e < offsets_[u + 1]; ++e) {
      const VertexId v = neighbors_[e];
      if (u < v) {
        const double y = value_of(u, v, values_[e]);
        out.values_[e] = y;
        const auto row = out.neighbors(v);
        const auto it = std::lower_bound(row.begin(), row.end(), u);
        out.values_[offsets_[v] + static_cast<std::uint64_t>(it - row.begin())] = y;
      }
    }
  }
  return out;
}

}  // namespace ghcm
