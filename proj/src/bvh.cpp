#include "orchardsynth/bvh.hpp"

#include <algorithm>
#include <array>

namespace orchard {

namespace {

constexpr int kBins = 16;
constexpr std::uint32_t kMaxLeaf = 4;
constexpr double kTraversalCost = 0.5;

// Slab test with both ends of the interval padded outward so rounding in
// the box test never culls a triangle the exact test would accept.
struct RayBoxCtx {
  Vec3 origin;
  Vec3 inv;
  std::array<int, 3> neg;

  explicit RayBoxCtx(const Ray &r) : origin(r.origin) {
    for (int a = 0; a < 3; ++a) {
      const double d = r.direction[a];
      inv[a] = 1.0 / (d == 0.0 ? std::copysign(1e-300, d) : d);
      neg[a] = inv[a] < 0 ? 1 : 0;
    }
  }

  bool hit(const Bounds3 &b, double t0, double t1, double &t_enter) const {
    double lo = t0, hi = t1;
    for (int a = 0; a < 3; ++a) {
      const double near_plane = neg[a] ? b.hi[a] : b.lo[a];
      const double far_plane = neg[a] ? b.lo[a] : b.hi[a];
      double tn = (near_plane - origin[a]) * inv[a];
      double tf = (far_plane - origin[a]) * inv[a];
      tn -= std::abs(tn) * 1e-9 + 1e-12;
      tf += std::abs(tf) * 1e-9 + 1e-12;
      lo = tn > lo ? tn : lo;
      hi = tf < hi ? tf : hi;
      if (lo > hi) return false;
    }
    t_enter = lo;
    return true;
  }
};

// Candidate set for the order-independent tie rule: every hit within the
// tie window of the current minimum, with dominated entries dropped.
class TieWindow {
 public:
  double limit() const { return best_t_ + Bvh::kTieEpsilon; }
  bool empty() const { return size_ == 0; }

  void offer(const TriangleHit &h, std::uint32_t idx) {
    if (!(h.t - best_t_ < Bvh::kTieEpsilon)) return;
    if (h.t < best_t_) best_t_ = h.t;
    std::size_t w = 0;
    for (std::size_t i = 0; i < size_; ++i) {
      const Entry &e = at(i);
      if (!(e.hit.t - best_t_ < Bvh::kTieEpsilon)) continue;
      if (e.hit.t <= h.t && e.index < idx) {
        // New entry is dominated; keep the survivors and stop.
        compact_keep(i, w);
        return;
      }
      if (h.t <= e.hit.t && idx < e.index) continue;
      at(w++) = e;
    }
    size_ = w;
    push({h, idx});
  }

  Bvh::Hit result() const {
    const Entry *win = nullptr;
    for (std::size_t i = 0; i < size_; ++i) {
      const Entry &e = at(i);
      if (!(e.hit.t - best_t_ < Bvh::kTieEpsilon)) continue;
      if (!win || e.index < win->index) win = &e;
    }
    return {win->hit, win->index};
  }

 private:
  struct Entry {
    TriangleHit hit;
    std::uint32_t index;
  };
  static constexpr std::size_t kInline = 8;

  Entry &at(std::size_t i) { return i < kInline ? inline_[i] : spill_[i - kInline]; }
  const Entry &at(std::size_t i) const { return i < kInline ? inline_[i] : spill_[i - kInline]; }

  void push(const Entry &e) {
    if (size_ < kInline) {
      inline_[size_] = e;
    } else {
      spill_.resize(size_ - kInline + 1);
      spill_[size_ - kInline] = e;
    }
    ++size_;
  }

  // Entries [0, w) are already kept; [i, size_) are untouched. Shift the
  // untouched tail down (still filtering by the window).
  void compact_keep(std::size_t i, std::size_t w) {
    for (; i < size_; ++i) {
      const Entry e = at(i);
      if (e.hit.t - best_t_ < Bvh::kTieEpsilon) at(w++) = e;
    }
    size_ = w;
  }

  double best_t_ = std::numeric_limits<double>::infinity();
  std::array<Entry, kInline> inline_{};
  std::vector<Entry> spill_;
  std::size_t size_ = 0;
};

Bounds3 triangle_bounds(const Primitive &p) {
  Bounds3 b;
  for (const Vec3 &v : p.vertices) b.extend(v);
  return b;
}

}  // namespace

double Bounds3::surface_area() const {
  if (empty()) return 0.0;
  const Vec3 d = hi - lo;
  return 2.0 * (d.x * d.y + d.y * d.z + d.z * d.x);
}

Bvh::Bvh(std::span<const Primitive> primitives) {
  if (primitives.empty()) return;
  const auto n = static_cast<std::uint32_t>(primitives.size());
  std::vector<Bounds3> prim_bounds(n);
  std::vector<Vec3> centroids(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    prim_bounds[i] = triangle_bounds(primitives[i]);
    centroids[i] = prim_bounds[i].centroid();
  }
  std::vector<std::uint32_t> ids(n);
  for (std::uint32_t i = 0; i < n; ++i) ids[i] = i;
  nodes_.reserve(2 * n / kMaxLeaf + 1);
  build(ids, 0, n, prim_bounds, centroids);
  order_ = std::move(ids);
  tris_.reserve(n);
  for (std::uint32_t idx : order_) tris_.push_back(primitives[idx].vertices);
}

std::uint32_t Bvh::build(std::vector<std::uint32_t> &ids, std::uint32_t begin, std::uint32_t end,
                         std::span<const Bounds3> prim_bounds, std::span<const Vec3> centroids) {
  const auto node_index = static_cast<std::uint32_t>(nodes_.size());
  nodes_.emplace_back();

  Bounds3 bounds, cbounds;
  for (std::uint32_t i = begin; i < end; ++i) {
    bounds.extend(prim_bounds[ids[i]]);
    cbounds.extend(centroids[ids[i]]);
  }
  nodes_[node_index].bounds = bounds;
  const std::uint32_t count = end - begin;

  auto make_leaf = [&] {
    nodes_[node_index].offset = begin;
    nodes_[node_index].count = static_cast<std::uint16_t>(count);
    return node_index;
  };
  if (count <= kMaxLeaf) return make_leaf();

  const Vec3 extent = cbounds.hi - cbounds.lo;
  int axis = 0;
  if (extent.y > extent[axis]) axis = 1;
  if (extent.z > extent[axis]) axis = 2;
  if (extent[axis] <= 0.0) {
    // All centroids coincide; split by index so leaves stay small.
    if (count <= 0xFFFF && count <= 4 * kMaxLeaf) return make_leaf();
    const std::uint32_t mid = begin + count / 2;
    nodes_[node_index].axis = static_cast<std::uint8_t>(axis);
    build(ids, begin, mid, prim_bounds, centroids);
    nodes_[node_index].offset = build(ids, mid, end, prim_bounds, centroids);
    return node_index;
  }

  struct Bin {
    Bounds3 b;
    std::uint32_t n = 0;
  };
  std::array<Bin, kBins> bins{};
  const double scale = kBins / extent[axis];
  auto bin_of = [&](std::uint32_t id) {
    int k = static_cast<int>((centroids[id][axis] - cbounds.lo[axis]) * scale);
    return std::clamp(k, 0, kBins - 1);
  };
  for (std::uint32_t i = begin; i < end; ++i) {
    Bin &bin = bins[bin_of(ids[i])];
    bin.b.extend(prim_bounds[ids[i]]);
    ++bin.n;
  }

  std::array<double, kBins - 1> cost{};
  {
    Bounds3 acc;
    std::uint32_t cnt = 0;
    for (int k = 0; k < kBins - 1; ++k) {
      acc.extend(bins[k].b);
      cnt += bins[k].n;
      cost[k] = cnt * acc.surface_area();
    }
    acc = Bounds3{};
    cnt = 0;
    for (int k = kBins - 1; k > 0; --k) {
      acc.extend(bins[k].b);
      cnt += bins[k].n;
      cost[k - 1] += cnt * acc.surface_area();
    }
  }
  int best_split = 0;
  for (int k = 1; k < kBins - 1; ++k)
    if (cost[k] < cost[best_split]) best_split = k;

  const double leaf_cost = count;
  const double split_cost = kTraversalCost + cost[best_split] / bounds.surface_area();
  if (split_cost >= leaf_cost && count <= 16) return make_leaf();

  auto mid_it = std::partition(ids.begin() + begin, ids.begin() + end,
                               [&](std::uint32_t id) { return bin_of(id) <= best_split; });
  auto mid = static_cast<std::uint32_t>(mid_it - ids.begin());
  if (mid == begin || mid == end) {
    mid = begin + count / 2;
    std::nth_element(ids.begin() + begin, ids.begin() + mid, ids.begin() + end,
                     [&](std::uint32_t a, std::uint32_t b) {
                       if (centroids[a][axis] != centroids[b][axis])
                         return centroids[a][axis] < centroids[b][axis];
                       return a < b;
                     });
  }
  nodes_[node_index].axis = static_cast<std::uint8_t>(axis);
  build(ids, begin, mid, prim_bounds, centroids);
  nodes_[node_index].offset = build(ids, mid, end, prim_bounds, centroids);
  return node_index;
}

std::optional<Bvh::Hit> Bvh::closest(const Ray &ray) const {
  if (nodes_.empty()) return std::nullopt;
  const RayShear shear(ray.direction);
  const RayBoxCtx box(ray);
  TieWindow window;

  std::array<std::uint32_t, 128> stack;
  std::size_t sp = 0;
  std::uint32_t current = 0;
  for (;;) {
    const Node &node = nodes_[current];
    double t_enter;
    const double t_far = std::min(ray.t_max, window.limit());
    if (box.hit(node.bounds, ray.t_min, t_far, t_enter)) {
      if (node.count > 0) {
        for (std::uint32_t i = node.offset; i < node.offset + node.count; ++i) {
          if (auto h = ray_triangle(ray, shear, tris_[i])) window.offer(*h, order_[i]);
        }
      } else {
        // Visit the near child first.
        if (ray.direction[node.axis] < 0) {
          stack[sp++] = current + 1;
          current = node.offset;
        } else {
          stack[sp++] = node.offset;
          current = current + 1;
        }
        continue;
      }
    }
    if (sp == 0) break;
    current = stack[--sp];
  }
  if (window.empty()) return std::nullopt;
  return window.result();
}

bool Bvh::any(const Ray &ray) const {
  if (nodes_.empty()) return false;
  const RayShear shear(ray.direction);
  const RayBoxCtx box(ray);
  std::array<std::uint32_t, 128> stack;
  std::size_t sp = 0;
  std::uint32_t current = 0;
  for (;;) {
    const Node &node = nodes_[current];
    double t_enter;
    if (box.hit(node.bounds, ray.t_min, ray.t_max, t_enter)) {
      if (node.count > 0) {
        for (std::uint32_t i = node.offset; i < node.offset + node.count; ++i)
          if (ray_triangle(ray, shear, tris_[i])) return true;
      } else {
        stack[sp++] = node.offset;
        current = current + 1;
        continue;
      }
    }
    if (sp == 0) break;
    current = stack[--sp];
  }
  return false;
}

}  // namespace orchard
