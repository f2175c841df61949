#include "ghcm/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <random>

#include "ghcm/errors.hpp"
#include "ghcm/kernels.hpp"
#include "ghcm/rng.hpp"

namespace ghcm {

namespace {

constexpr double kSafety = 0.99;
constexpr std::int64_t kMaxBlocks = std::int64_t{1} << 31;

std::int64_t ipow(std::int64_t base, int exp) {
  std::int64_t r = 1;
  for (int i = 0; i < exp; ++i) {
    if (r > std::numeric_limits<std::int64_t>::max() / std::max<std::int64_t>(base, 1)) {
      return std::numeric_limits<std::int64_t>::max();
    }
    r *= base;
  }
  return r;
}

std::int64_t axis_cell(double x, double side, double cell_side, std::int64_t cells) {
  const auto c = static_cast<std::int64_t>(std::floor((x + 0.5 * side) / cell_side));
  return std::clamp<std::int64_t>(c, 0, cells - 1);
}

// Linear ids of the 3^d cells around `cell` on a torus of `cells` per axis,
// deduplicated (small grids wrap onto themselves).
std::vector<std::int64_t> wrapped_neighborhood(std::span<const std::int64_t> cell,
                                               std::int64_t cells) {
  const int d = static_cast<int>(cell.size());
  std::vector<std::int64_t> out;
  const int total = static_cast<int>(ipow(3, d));
  out.reserve(static_cast<std::size_t>(total));
  for (int code = 0; code < total; ++code) {
    int rest = code;
    std::int64_t linear = 0;
    std::int64_t stride = 1;
    for (int ax = 0; ax < d; ++ax) {
      const int off = rest % 3 - 1;
      rest /= 3;
      const std::int64_t c = ((cell[static_cast<std::size_t>(ax)] + off) % cells + cells) % cells;
      linear += c * stride;
      stride *= cells;
    }
    out.push_back(linear);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<std::int64_t> unravel(std::int64_t linear, std::int64_t per_axis, int d) {
  std::vector<std::int64_t> cell(static_cast<std::size_t>(d));
  for (int ax = 0; ax < d; ++ax) {
    cell[static_cast<std::size_t>(ax)] = linear % per_axis;
    linear /= per_axis;
  }
  return cell;
}

// Points bucketed into cells of side >= radius; `order[p]` is the original
// index of sorted position p.
struct Buckets {
  int d = 1;
  std::int64_t cells = 1;
  std::vector<std::uint32_t> start;
  std::vector<std::uint32_t> order;
  std::vector<std::vector<double>> sorted;
};

Buckets bucket_points(const std::vector<std::vector<double>>& coords, double side, double radius) {
  Buckets b;
  b.d = static_cast<int>(coords.size());
  const std::size_t count = coords.empty() ? 0 : coords[0].size();
  b.cells = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::floor(side / radius)));
  // Keep the bucket table proportional to the point count.
  while (ipow(b.cells, b.d) > std::max<std::int64_t>(64, 4 * static_cast<std::int64_t>(count)) &&
         b.cells > 1) {
    b.cells /= 2;
  }
  const double cell_side = side / static_cast<double>(b.cells);
  const std::int64_t total = ipow(b.cells, b.d);
  std::vector<std::int64_t> cell_of(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::int64_t linear = 0;
    std::int64_t stride = 1;
    for (int ax = 0; ax < b.d; ++ax) {
      linear += axis_cell(coords[static_cast<std::size_t>(ax)][i], side, cell_side, b.cells) * stride;
      stride *= b.cells;
    }
    cell_of[i] = linear;
  }
  b.start.assign(static_cast<std::size_t>(total) + 1, 0);
  for (auto c : cell_of) ++b.start[static_cast<std::size_t>(c) + 1];
  std::partial_sum(b.start.begin(), b.start.end(), b.start.begin());
  b.order.resize(count);
  std::vector<std::uint32_t> fill(b.start.begin(), b.start.end() - 1);
  for (std::size_t i = 0; i < count; ++i) {
    b.order[fill[static_cast<std::size_t>(cell_of[i])]++] = static_cast<std::uint32_t>(i);
  }
  b.sorted.assign(static_cast<std::size_t>(b.d), std::vector<double>(count));
  for (int ax = 0; ax < b.d; ++ax) {
    for (std::size_t p = 0; p < count; ++p) {
      b.sorted[static_cast<std::size_t>(ax)][p] = coords[static_cast<std::size_t>(ax)][b.order[p]];
    }
  }
  return b;
}

// Calls visit(p, hits) for every sorted position p with the sorted positions
// q != p within `radius` (unsorted).
template <typename Visit>
void scan_buckets(const Buckets& b, double side, double radius, Visit&& visit) {
  const kernels::Isa isa = kernels::active_isa();
  const double r2 = radius * radius;
  const std::int64_t total = static_cast<std::int64_t>(b.start.size()) - 1;
  std::vector<std::uint32_t> scratch;
  std::vector<std::uint32_t> hits;
  std::vector<const double*> ptrs(static_cast<std::size_t>(b.d));
  std::vector<double> query(static_cast<std::size_t>(b.d));
  for (std::int64_t c = 0; c < total; ++c) {
    const std::uint32_t begin = b.start[static_cast<std::size_t>(c)];
    const std::uint32_t end = b.start[static_cast<std::size_t>(c) + 1];
    if (begin == end) continue;
    const auto around = wrapped_neighborhood(unravel(c, b.cells, b.d), b.cells);
    for (std::uint32_t p = begin; p < end; ++p) {
      for (int ax = 0; ax < b.d; ++ax) {
        query[static_cast<std::size_t>(ax)] = b.sorted[static_cast<std::size_t>(ax)][p];
      }
      hits.clear();
      for (const auto nc : around) {
        const std::uint32_t nb = b.start[static_cast<std::size_t>(nc)];
        const std::uint32_t ne = b.start[static_cast<std::size_t>(nc) + 1];
        if (nb == ne) continue;
        for (int ax = 0; ax < b.d; ++ax) {
          ptrs[static_cast<std::size_t>(ax)] = b.sorted[static_cast<std::size_t>(ax)].data() + nb;
        }
        scratch.resize(ne - nb);
        const kernels::PointBatch batch{ptrs, ne - nb};
        const std::size_t got = kernels::radius_filter(isa, batch, query, side, r2, scratch.data());
        for (std::size_t t = 0; t < got; ++t) {
          const std::uint32_t q = nb + scratch[t];
          if (q != p) hits.push_back(q);
        }
      }
      visit(p, hits);
    }
  }
}

double draw_observation(const Distribution& dist, std::uint64_t key) {
  CounterRng rng(key);
  if (dist.is_bernoulli()) return rng.uniform() < dist.p ? 1.0 : 0.0;
  std::normal_distribution<double> normal(dist.mean, std::sqrt(dist.variance));
  return normal(rng);
}

}  // namespace

// ---------------------------------------------------------------------------
// Instance

Instance Instance::from_parts(ModelSpec spec, std::uint64_t seed,
                              std::vector<std::vector<double>> coords, std::vector<int> truth,
                              std::vector<Observation> pairs) {
  spec.validate();
  if (coords.size() != static_cast<std::size_t>(spec.d)) {
    throw Error(ErrorCode::kFormat, "coordinate axes must equal d");
  }
  for (const auto& axis : coords) {
    if (axis.size() != truth.size()) throw Error(ErrorCode::kFormat, "coordinate length mismatch");
  }
  const std::size_t count = truth.size();
  for (int t : truth) {
    if (t < 0 || static_cast<std::size_t>(t) >= spec.k()) {
      throw Error(ErrorCode::kFormat, "ground-truth label out of range");
    }
  }
  for (auto& o : pairs) {
    if (o.u == o.v || o.u >= count || o.v >= count) {
      throw Error(ErrorCode::kFormat, "observation endpoints invalid");
    }
    if (o.u > o.v) std::swap(o.u, o.v);
  }
  auto by_pair = [](const Observation& a, const Observation& b) {
    return a.u != b.u ? a.u < b.u : a.v < b.v;
  };
  if (!std::is_sorted(pairs.begin(), pairs.end(), by_pair)) {
    std::sort(pairs.begin(), pairs.end(), by_pair);
  }
  for (std::size_t i = 1; i < pairs.size(); ++i) {
    if (pairs[i].u == pairs[i - 1].u && pairs[i].v == pairs[i - 1].v) {
      throw Error(ErrorCode::kFormat, "duplicate observation pair");
    }
  }

  Instance inst;
  inst.spec_ = std::move(spec);
  inst.seed_ = seed;
  inst.coords_ = std::move(coords);
  inst.truth_ = std::move(truth);
  inst.offsets_.assign(count + 1, 0);
  for (const auto& o : pairs) {
    ++inst.offsets_[o.u + 1];
    ++inst.offsets_[o.v + 1];
  }
  std::partial_sum(inst.offsets_.begin(), inst.offsets_.end(), inst.offsets_.begin());
  inst.neighbors_.resize(2 * pairs.size());
  inst.values_.resize(2 * pairs.size());
  std::vector<std::uint64_t> fill(inst.offsets_.begin(), inst.offsets_.end() - 1);
  // (u, v) order fills every row in ascending neighbor order: a row x first
  // receives all w < x (while w is processed), then its own v > x.
  for (const auto& o : pairs) {
    const auto eu = fill[o.u]++;
    inst.neighbors_[eu] = o.v;
    inst.values_[eu] = o.y;
    const auto ev = fill[o.v]++;
    inst.neighbors_[ev] = o.u;
    inst.values_[ev] = o.y;
  }
  return inst;
}

Vertex Instance::vertex(VertexId u) const {
  Vertex v;
  v.id = u;
  for (const auto& axis : coords_) v.position.push_back(axis[u]);
  return v;
}

std::optional<double> Instance::observation(VertexId u, VertexId v) const {
  const auto row = neighbors(u);
  const auto it = std::lower_bound(row.begin(), row.end(), v);
  if (it == row.end() || *it != v) return std::nullopt;
  return values_[offsets_[u] + static_cast<std::uint64_t>(it - row.begin())];
}

std::vector<Observation> Instance::observation_list() const {
  std::vector<Observation> out;
  out.reserve(num_observations());
  for (VertexId u = 0; u < num_vertices(); ++u) {
    for (std::uint64_t e = offsets_[u]; e < offsets_[u + 1]; ++e) {
      if (u < neighbors_[e]) out.push_back({u, neighbors_[e], values_[e]});
    }
  }
  return out;
}

double toroidal_distance(std::span<const double> u, std::span<const double> v, double side) {
  double sum = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double diff = std::abs(u[i] - v[i]);
    const double m = std::min(diff, side - diff);
    sum += m * m;
  }
  return std::sqrt(sum);
}

std::vector<std::pair<VertexId, VertexId>> visible_pairs(
    const std::vector<std::vector<double>>& coords, double side, double radius) {
  const Buckets b = bucket_points(coords, side, radius);
  std::vector<std::pair<VertexId, VertexId>> out;
  scan_buckets(b, side, radius, [&](std::uint32_t p, const std::vector<std::uint32_t>& hits) {
    const VertexId u = b.order[p];
    for (const auto q : hits) {
      const VertexId v = b.order[q];
      if (u < v) out.emplace_back(u, v);
    }
  });
  std::sort(out.begin(), out.end());
  return out;
}

Instance sample_instance(const ModelSpec& spec, std::uint64_t seed) {
  spec.validate();
  const int d = spec.d;
  const double side = spec.side();
  const double radius = spec.radius();

  CounterRng count_rng(derive_seed(seed, static_cast<std::uint64_t>(Stream::kCount)));
  const double mean = spec.lambda * spec.n;
  if (mean > 4.0e9) throw Error(ErrorCode::kInvalidSpec, "lambda * n too large");
  std::poisson_distribution<long long> poisson(mean);
  const auto count = static_cast<std::size_t>(poisson(count_rng));

  std::vector<std::vector<double>> raw(static_cast<std::size_t>(d), std::vector<double>(count));
  CounterRng pos_rng(derive_seed(seed, static_cast<std::uint64_t>(Stream::kPositions)));
  const double upper = std::nextafter(0.5 * side, 0.0);
  for (std::size_t i = 0; i < count; ++i) {
    for (int ax = 0; ax < d; ++ax) {
      const double x = -0.5 * side + side * pos_rng.uniform();
      raw[static_cast<std::size_t>(ax)][i] = std::min(x, upper);
    }
  }

  // Renumber vertices in bucket order so neighborhoods are contiguous.
  Buckets b = bucket_points(raw, side, radius);
  raw.clear();

  std::vector<int> truth(count);
  CounterRng label_rng(derive_seed(seed, static_cast<std::uint64_t>(Stream::kLabels)));
  for (std::size_t u = 0; u < count; ++u) {
    const double r = label_rng.uniform();
    double acc = 0.0;
    int label = static_cast<int>(spec.k()) - 1;
    for (std::size_t i = 0; i + 1 < spec.k(); ++i) {
      acc += spec.prior[i];
      if (r < acc) {
        label = static_cast<int>(i);
        break;
      }
    }
    truth[u] = label;
  }

  const std::uint64_t obs_key = derive_seed(seed, static_cast<std::uint64_t>(Stream::kObservations));
  std::vector<Observation> pairs;
  pairs.reserve(static_cast<std::size_t>(
      static_cast<double>(count) * 0.5 * spec.lambda * unit_ball_volume(d) * spec.log_n() * 1.1));
  std::vector<std::uint32_t> upper_hits;
  scan_buckets(b, side, radius, [&](std::uint32_t p, const std::vector<std::uint32_t>& hits) {
    upper_hits.clear();
    for (const auto q : hits) {
      if (q > p) upper_hits.push_back(q);
    }
    std::sort(upper_hits.begin(), upper_hits.end());
    for (const auto q : upper_hits) {
      const auto& dist = spec.P[static_cast<std::size_t>(truth[p])][static_cast<std::size_t>(truth[q])];
      pairs.push_back({p, q, draw_observation(dist, derive_seed(obs_key, p, q))});
    }
  });

  // scan_buckets visits p in ascending order, so pairs are already sorted.
  return Instance::from_parts(spec, seed, std::move(b.sorted), std::move(truth), std::move(pairs));
}

// ---------------------------------------------------------------------------
// BlockGrid

std::vector<std::int64_t> BlockGrid::cell_of(BlockId b) const {
  return unravel(b, blocks_per_axis, d);
}

BlockId BlockGrid::block_at(std::span<const std::int64_t> cell) const {
  BlockId linear = 0;
  std::int64_t stride = 1;
  for (int ax = 0; ax < d; ++ax) {
    const std::int64_t c =
        ((cell[static_cast<std::size_t>(ax)] % blocks_per_axis) + blocks_per_axis) % blocks_per_axis;
    linear += c * stride;
    stride *= blocks_per_axis;
  }
  return linear;
}

double BlockGrid::sup_distance_sq(BlockId a, BlockId b) const {
  double sum = 0.0;
  for (int ax = 0; ax < d; ++ax) {
    std::int64_t diff = std::abs(a % blocks_per_axis - b % blocks_per_axis);
    diff = std::min(diff, blocks_per_axis - diff);
    const double reach = std::min(static_cast<double>(diff + 1) * block_side, 0.5 * side);
    sum += reach * reach;
    a /= blocks_per_axis;
    b /= blocks_per_axis;
  }
  return sum;
}

bool BlockGrid::mutually_visible(BlockId a, BlockId b) const {
  return sup_distance_sq(a, b) <= radius * radius;
}

BlockGrid build_grid(const ModelSpec& spec, const std::vector<std::vector<double>>& coords,
                     double chi) {
  const double log_n = spec.log_n();
  if (!(chi > 0.0) || !std::isfinite(chi)) throw Error(ErrorCode::kDomainError, "chi must be positive");
  BlockGrid g;
  g.chi = chi;
  g.d = spec.d;
  g.side = spec.side();
  g.radius = spec.radius();
  const double target_side = std::pow(chi * log_n, 1.0 / spec.d);
  g.blocks_per_axis = static_cast<std::int64_t>(std::ceil(g.side / target_side));
  if (g.blocks_per_axis < 2) {
    throw Error(ErrorCode::kDegenerateGrid, "fewer than two blocks per axis");
  }
  const std::int64_t total = ipow(g.blocks_per_axis, g.d);
  if (total > kMaxBlocks) throw Error(ErrorCode::kDegenerateGrid, "block partition too fine");
  g.block_side = g.side / static_cast<double>(g.blocks_per_axis);

  const std::size_t count = coords.empty() ? 0 : coords[0].size();
  g.block_of_vertex.resize(count);
  for (std::size_t u = 0; u < count; ++u) {
    BlockId linear = 0;
    std::int64_t stride = 1;
    for (int ax = 0; ax < g.d; ++ax) {
      linear += axis_cell(coords[static_cast<std::size_t>(ax)][u], g.side, g.block_side,
                          g.blocks_per_axis) *
                stride;
      stride *= g.blocks_per_axis;
    }
    g.block_of_vertex[u] = linear;
  }
  g.offsets.assign(static_cast<std::size_t>(total) + 1, 0);
  for (auto b : g.block_of_vertex) ++g.offsets[static_cast<std::size_t>(b) + 1];
  std::partial_sum(g.offsets.begin(), g.offsets.end(), g.offsets.begin());
  g.members.resize(count);
  std::vector<std::uint32_t> fill(g.offsets.begin(), g.offsets.end() - 1);
  for (std::size_t u = 0; u < count; ++u) {
    g.members[fill[static_cast<std::size_t>(g.block_of_vertex[u])]++] = static_cast<VertexId>(u);
  }
  return g;
}

BlockGrid build_grid(const Instance& instance, double chi) {
  std::vector<std::vector<double>> coords;
  coords.reserve(static_cast<std::size_t>(instance.dim()));
  for (int ax = 0; ax < instance.dim(); ++ax) {
    const auto a = instance.axis(ax);
    coords.emplace_back(a.begin(), a.end());
  }
  return build_grid(instance.spec(), coords, chi);
}

// ---------------------------------------------------------------------------
// VisibilityGraph

bool VisibilityGraph::is_occupied(BlockId b) const {
  return std::binary_search(occupied.begin(), occupied.end(), b);
}

std::vector<std::pair<BlockId, BlockId>> VisibilityGraph::edges() const {
  std::vector<std::pair<BlockId, BlockId>> out;
  for (std::size_t i = 0; i < occupied.size(); ++i) {
    for (const auto j : neighbors_at(i)) {
      if (i < j) out.emplace_back(occupied[i], occupied[j]);
    }
  }
  return out;
}

VisibilityGraph build_visibility_graph(const BlockGrid& grid, double delta, double log_n) {
  VisibilityGraph vg;
  vg.delta = delta;
  vg.threshold = delta * log_n;
  vg.d = grid.d;
  vg.blocks_per_axis = grid.blocks_per_axis;
  for (BlockId b = 0; b < grid.num_blocks(); ++b) {
    if (static_cast<double>(grid.count(b)) > vg.threshold) vg.occupied.push_back(b);
  }
  vg.adj_offsets.assign(vg.occupied.size() + 1, 0);
  if (vg.occupied.empty()) return vg;

  const std::int64_t m = grid.blocks_per_axis;
  // Largest per-axis index offset that can still be visible.
  const std::int64_t reach = std::min<std::int64_t>(
      m / 2, std::max<std::int64_t>(0, static_cast<std::int64_t>(grid.radius / grid.block_side) - 1));
  const std::int64_t coarse_size = reach + 1;
  const std::int64_t coarse = std::max<std::int64_t>(1, m / coarse_size);
  const int d = grid.d;

  auto coarse_cell = [&](BlockId b) {
    std::vector<std::int64_t> cell = grid.cell_of(b);
    for (auto& c : cell) c = std::min(c / coarse_size, coarse - 1);
    return cell;
  };
  auto coarse_linear = [&](const std::vector<std::int64_t>& cell) {
    std::int64_t linear = 0;
    std::int64_t stride = 1;
    for (int ax = 0; ax < d; ++ax) {
      linear += cell[static_cast<std::size_t>(ax)] * stride;
      stride *= coarse;
    }
    return linear;
  };

  // Occupied blocks bucketed by coarse cell (hash via sort).
  std::vector<std::pair<std::int64_t, std::uint32_t>> keyed;
  keyed.reserve(vg.occupied.size());
  for (std::size_t i = 0; i < vg.occupied.size(); ++i) {
    keyed.emplace_back(coarse_linear(coarse_cell(vg.occupied[i])), static_cast<std::uint32_t>(i));
  }
  std::sort(keyed.begin(), keyed.end());

  std::vector<std::vector<std::uint32_t>> rows(vg.occupied.size());
  for (std::size_t i = 0; i < vg.occupied.size(); ++i) {
    const BlockId bi = vg.occupied[i];
    for (const auto nc : wrapped_neighborhood(coarse_cell(bi), coarse)) {
      auto it = std::lower_bound(keyed.begin(), keyed.end(), std::make_pair(nc, std::uint32_t{0}));
      for (; it != keyed.end() && it->first == nc; ++it) {
        const std::uint32_t j = it->second;
        if (j != i && grid.mutually_visible(bi, vg.occupied[j])) rows[i].push_back(j);
      }
    }
    std::sort(rows[i].begin(), rows[i].end());
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    vg.adj_offsets[i + 1] = vg.adj_offsets[i] + static_cast<std::uint32_t>(rows[i].size());
  }
  vg.adj.reserve(vg.adj_offsets.back());
  for (const auto& row : rows) vg.adj.insert(vg.adj.end(), row.begin(), row.end());
  return vg;
}

std::vector<TreeStep> bfs_spanning_order(const VisibilityGraph& vg) {
  if (vg.occupied.empty()) throw Error(ErrorCode::kDisconnected, "no occupied blocks");
  std::vector<std::int64_t> parent(vg.size(), -2);
  std::vector<TreeStep> order;
  order.reserve(vg.size());
  std::deque<std::uint32_t> queue{0};
  parent[0] = -1;
  while (!queue.empty()) {
    const auto cur = queue.front();
    queue.pop_front();
    order.push_back({vg.occupied[cur], parent[cur] < 0 ? kNoBlock
                                                        : vg.occupied[static_cast<std::size_t>(parent[cur])]});
    for (const auto nb : vg.neighbors_at(cur)) {
      if (parent[nb] == -2) {
        parent[nb] = cur;
        queue.push_back(nb);
      }
    }
  }
  if (order.size() != vg.size()) {
    throw Error(ErrorCode::kDisconnected, "visibility graph has more than one component");
  }
  return order;
}

std::vector<std::vector<BlockId>> connected_components(const VisibilityGraph& vg) {
  std::vector<int> comp(vg.size(), -1);
  std::vector<std::vector<BlockId>> out;
  for (std::size_t s = 0; s < vg.size(); ++s) {
    if (comp[s] >= 0) continue;
    const int id = static_cast<int>(out.size());
    out.emplace_back();
    std::deque<std::uint32_t> queue{static_cast<std::uint32_t>(s)};
    comp[s] = id;
    while (!queue.empty()) {
      const auto cur = queue.front();
      queue.pop_front();
      out.back().push_back(vg.occupied[cur]);
      for (const auto nb : vg.neighbors_at(cur)) {
        if (comp[nb] < 0) {
          comp[nb] = id;
          queue.push_back(nb);
        }
      }
    }
    std::sort(out.back().begin(), out.back().end());
  }
  if (vg.d != 1) return out;

  // On the circle every internal gap of a component is bridged by an edge,
  // so at most one cyclic gap exceeds the visibility reach; the block after
  // it is the leftmost one.
  const std::int64_t m = vg.blocks_per_axis;
  for (auto& blocks : out) {
    std::int64_t widest = -1;
    std::size_t start = 0;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      const BlockId prev = blocks[(i + blocks.size() - 1) % blocks.size()];
      const std::int64_t gap = blocks.size() == 1 ? m : ((blocks[i] - prev) % m + m) % m;
      if (gap > widest) {
        widest = gap;
        start = i;
      }
    }
    // A widest gap still bridged by an edge means the component wraps the
    // whole circle; keep ascending order then.
    const BlockId first = blocks[start];
    const BlockId prev = blocks[(start + blocks.size() - 1) % blocks.size()];
    const auto pos = static_cast<std::size_t>(
        std::lower_bound(vg.occupied.begin(), vg.occupied.end(), first) - vg.occupied.begin());
    const auto row = vg.neighbors_at(pos);
    const bool bridged = blocks.size() > 1 && std::any_of(row.begin(), row.end(), [&](std::uint32_t nb) {
      return vg.occupied[nb] == prev;
    });
    if (!bridged) {
      std::rotate(blocks.begin(), blocks.begin() + static_cast<std::ptrdiff_t>(start), blocks.end());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Constants

double compute_chi(double lambda, int d) {
  if (!(lambda > 0.0) || d < 1) throw Error(ErrorCode::kDomainError, "lambda > 0 and d >= 1 required");
  const double nu = unit_ball_volume(d);
  if (d == 1) {
    if (!(lambda > 1.0)) throw Error(ErrorCode::kInfeasibleRegime, "d = 1 requires lambda > 1");
    return kSafety * (1.0 - 1.0 / lambda) / 2.0;
  }
  if (!(lambda * nu > 1.0)) {
    throw Error(ErrorCode::kInfeasibleRegime, "d >= 2 requires lambda nu_d > 1");
  }
  const double sd = std::sqrt(static_cast<double>(d));
  const double target = (nu + 1.0 / lambda) / 2.0;
  auto ball = [&](double chi) {
    const double r = 1.0 - 1.5 * sd * std::pow(chi, 1.0 / d);
    return r <= 0.0 ? 0.0 : nu * std::pow(r, d);
  };
  double lo = 0.0;
  double hi = std::pow(2.0 / (3.0 * sd), d);
  while (hi - lo > 1e-9 * std::max(1e-3, lo) && hi - lo > 1e-15) {
    const double mid = 0.5 * (lo + hi);
    if (ball(mid) >= target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double upper = (nu - 1.0 / lambda) / 2.0;
  return kSafety * std::min(lo, upper);
}

double poisson_tail_rate(double x, double mu) {
  if (x <= 0.0) return mu;
  return x * (std::log(x) - std::log(mu)) + mu - x;
}

DeltaSolution compute_delta(double lambda, int d, double chi) {
  if (!(chi > 0.0)) throw Error(ErrorCode::kDomainError, "chi must be positive");
  const double nu_d = unit_ball_volume(d);
  const double sd = std::sqrt(static_cast<double>(d));
  const double root = std::pow(chi, 1.0 / d);
  DeltaSolution out;
  if (d == 1) {
    out.visible_volume = 1.0 - 2.0 * chi;
  } else {
    const double inner = 1.0 - 1.5 * sd * root;
    out.visible_volume = inner > 0.0 ? nu_d * std::pow(inner, d) - chi : -chi;
  }
  const double mu = lambda * out.visible_volume;
  if (!(mu > 1.0)) throw Error(ErrorCode::kInfeasibleRegime, "lambda nu must exceed 1");

  // g decreases from mu (x -> 0) to 0 (x = mu); keep lo on the g > target side.
  const double target = (1.0 + mu) / 2.0;
  double lo = 0.0;
  double hi = mu;
  for (int iter = 0; iter < 200 && hi - lo > 1e-16 * mu; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (poisson_tail_rate(mid, mu) > target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  out.gamma = lo;
  if (d == 1) {
    out.delta = kSafety * out.gamma * chi;
  } else {
    const double r_d = 1.0 - 0.5 * sd * root;
    out.delta = kSafety * out.gamma * chi / (nu_d * std::pow(r_d, d));
  }
  return out;
}

bool vertex_graph_connected(const Instance& instance) {
  const std::size_t count = instance.num_vertices();
  if (count <= 1) return true;
  std::vector<char> seen(count, 0);
  std::vector<VertexId> stack{0};
  seen[0] = 1;
  std::size_t reached = 1;
  while (!stack.empty()) {
    const VertexId u = stack.back();
    stack.pop_back();
    for (const auto v : instance.neighbors(u)) {
      if (!seen[v]) {
        seen[v] = 1;
        ++reached;
        stack.push_back(v);
      }
    }
  }
  return reached == count;
}

}  // namespace ghcm
