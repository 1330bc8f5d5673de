#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace crround {

/// Default additive tolerance for polytope membership checks. Fractional
/// points typically arrive from floating-point optimizers, so exact
/// comparisons would spuriously reject boundary points.
inline constexpr double kPolytopeTol = 1e-9;

/// Ground set of n elements, identified as dense indices 0..n-1.
class GroundSet {
 public:
  explicit GroundSet(int n) : n_(n) {
    if (n < 1) throw std::invalid_argument("GroundSet: n must be >= 1");
  }
  int size() const { return n_; }
  bool contains(int e) const { return e >= 0 && e < n_; }
  friend bool operator==(GroundSet a, GroundSet b) { return a.n_ == b.n_; }

 private:
  int n_;
};

/// A subset of a ground set, kept as a sorted duplicate-free index list.
/// For n <= 64 the set converts to a machine-word bitmask, which the
/// enumeration routines rely on.
class ElementSet {
 public:
  explicit ElementSet(GroundSet ground) : ground_(ground) {}

  ElementSet(GroundSet ground, std::vector<int> members)
      : ground_(ground), members_(std::move(members)) {
    std::sort(members_.begin(), members_.end());
    members_.erase(std::unique(members_.begin(), members_.end()), members_.end());
    for (int e : members_) {
      if (!ground_.contains(e))
        throw std::invalid_argument("ElementSet: index " + std::to_string(e) +
                                    " outside ground set of size " +
                                    std::to_string(ground_.size()));
    }
  }

  static ElementSet empty(GroundSet ground) { return ElementSet(ground); }

  static ElementSet full(GroundSet ground) {
    std::vector<int> all(static_cast<std::size_t>(ground.size()));
    std::iota(all.begin(), all.end(), 0);
    return ElementSet(ground, std::move(all));
  }

  static ElementSet from_mask(GroundSet ground, std::uint64_t mask) {
    std::vector<int> members;
    for (int i = 0; i < ground.size(); ++i)
      if (mask >> i & 1u) members.push_back(i);
    return ElementSet(ground, std::move(members));
  }

  GroundSet ground() const { return ground_; }
  const std::vector<int>& members() const { return members_; }
  int size() const { return static_cast<int>(members_.size()); }
  bool is_empty() const { return members_.empty(); }

  bool contains(int e) const {
    return std::binary_search(members_.begin(), members_.end(), e);
  }

  bool subset_of(const ElementSet& other) const {
    return std::includes(other.members_.begin(), other.members_.end(),
                         members_.begin(), members_.end());
  }

  std::uint64_t mask() const {
    if (ground_.size() > 64)
      throw std::invalid_argument("ElementSet::mask: ground set exceeds 64 elements");
    std::uint64_t m = 0;
    for (int e : members_) m |= std::uint64_t{1} << e;
    return m;
  }

  ElementSet with(int e) const {
    std::vector<int> m = members_;
    m.push_back(e);
    return ElementSet(ground_, std::move(m));
  }

  ElementSet without(int e) const {
    std::vector<int> m;
    m.reserve(members_.size());
    for (int i : members_)
      if (i != e) m.push_back(i);
    return ElementSet(ground_, std::move(m));
  }

  ElementSet intersect(const ElementSet& other) const {
    std::vector<int> m;
    std::set_intersection(members_.begin(), members_.end(), other.members_.begin(),
                          other.members_.end(), std::back_inserter(m));
    return ElementSet(ground_, std::move(m));
  }

  ElementSet unite(const ElementSet& other) const {
    std::vector<int> m;
    std::set_union(members_.begin(), members_.end(), other.members_.begin(),
                   other.members_.end(), std::back_inserter(m));
    return ElementSet(ground_, std::move(m));
  }

  friend bool operator==(const ElementSet& a, const ElementSet& b) {
    return a.ground_ == b.ground_ && a.members_ == b.members_;
  }

 private:
  GroundSet ground_;
  std::vector<int> members_;
};

/// A point x in [0,1]^n, one coordinate per ground-set element.
class FractionalPoint {
 public:
  explicit FractionalPoint(std::vector<double> coords) : coords_(std::move(coords)) {
    if (coords_.empty())
      throw std::invalid_argument("FractionalPoint: needs at least one coordinate");
    for (double v : coords_) {
      if (!(v >= 0.0 && v <= 1.0))
        throw std::invalid_argument("FractionalPoint: coordinate " + std::to_string(v) +
                                    " outside [0,1]");
    }
  }

  static FractionalPoint constant(GroundSet ground, double value) {
    return FractionalPoint(std::vector<double>(static_cast<std::size_t>(ground.size()), value));
  }

  GroundSet ground() const { return GroundSet(static_cast<int>(coords_.size())); }
  int size() const { return static_cast<int>(coords_.size()); }
  double operator[](int i) const { return coords_[static_cast<std::size_t>(i)]; }
  const std::vector<double>& coords() const { return coords_; }

  double sum() const { return std::accumulate(coords_.begin(), coords_.end(), 0.0); }

  double sum_over(const ElementSet& set) const {
    double s = 0.0;
    for (int e : set.members()) s += coords_[static_cast<std::size_t>(e)];
    return s;
  }

 private:
  std::vector<double> coords_;
};

/// Uniform matroid: independent sets are the subsets of size at most k.
/// k > n is accepted and capped to n (the constraint is vacuous there).
class UniformMatroid {
 public:
  UniformMatroid(GroundSet ground, int k)
      : ground_(ground), k_(std::min(k, ground.size())) {
    if (k < 0) throw std::invalid_argument("UniformMatroid: k must be >= 0");
  }
  GroundSet ground() const { return ground_; }
  int rank_bound() const { return k_; }

 private:
  GroundSet ground_;
  int k_;
};

/// Partition matroid: blocks D_1..D_m partition the ground set and a set is
/// independent iff it takes at most d_i elements from each block. Capacities
/// above |D_i| are capped (the constraint is vacuous there).
class PartitionMatroid {
 public:
  PartitionMatroid(GroundSet ground, std::vector<ElementSet> blocks,
                   std::vector<int> capacities)
      : ground_(ground), blocks_(std::move(blocks)), capacities_(std::move(capacities)) {
    if (blocks_.size() != capacities_.size())
      throw std::invalid_argument("PartitionMatroid: one capacity per block required");
    std::vector<int> owner(static_cast<std::size_t>(ground.size()), -1);
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
      if (!(blocks_[b].ground() == ground))
        throw std::invalid_argument("PartitionMatroid: block on a different ground set");
      if (capacities_[b] < 0)
        throw std::invalid_argument("PartitionMatroid: capacities must be >= 0");
      capacities_[b] = std::min(capacities_[b], blocks_[b].size());
      for (int e : blocks_[b].members()) {
        if (owner[static_cast<std::size_t>(e)] != -1)
          throw std::invalid_argument("PartitionMatroid: blocks overlap at element " +
                                      std::to_string(e));
        owner[static_cast<std::size_t>(e)] = static_cast<int>(b);
      }
    }
    for (int e = 0; e < ground.size(); ++e)
      if (owner[static_cast<std::size_t>(e)] == -1)
        throw std::invalid_argument("PartitionMatroid: element " + std::to_string(e) +
                                    " not covered by any block");
    owner_ = std::move(owner);
  }

  GroundSet ground() const { return ground_; }
  int block_count() const { return static_cast<int>(blocks_.size()); }
  const ElementSet& block(int i) const { return blocks_[static_cast<std::size_t>(i)]; }
  int capacity(int i) const { return capacities_[static_cast<std::size_t>(i)]; }
  int block_of(int e) const { return owner_[static_cast<std::size_t>(e)]; }

 private:
  GroundSet ground_;
  std::vector<ElementSet> blocks_;
  std::vector<int> capacities_;
  std::vector<int> owner_;
};

namespace detail {
inline void require_same_ground(GroundSet a, GroundSet b, const char* where) {
  if (!(a == b)) throw std::invalid_argument(std::string(where) + ": ground-set mismatch");
}
}  // namespace detail

inline bool is_independent(const UniformMatroid& m, const ElementSet& set) {
  detail::require_same_ground(m.ground(), set.ground(), "is_independent");
  return set.size() <= m.rank_bound();
}

inline bool is_independent(const PartitionMatroid& m, const ElementSet& set) {
  detail::require_same_ground(m.ground(), set.ground(), "is_independent");
  std::vector<int> used(static_cast<std::size_t>(m.block_count()), 0);
  for (int e : set.members()) {
    int b = m.block_of(e);
    if (++used[static_cast<std::size_t>(b)] > m.capacity(b)) return false;
  }
  return true;
}

inline int rank(const UniformMatroid& m, const ElementSet& set) {
  detail::require_same_ground(m.ground(), set.ground(), "rank");
  return std::min(set.size(), m.rank_bound());
}

inline int rank(const PartitionMatroid& m, const ElementSet& set) {
  detail::require_same_ground(m.ground(), set.ground(), "rank");
  std::vector<int> used(static_cast<std::size_t>(m.block_count()), 0);
  for (int e : set.members()) ++used[static_cast<std::size_t>(m.block_of(e))];
  int r = 0;
  for (int b = 0; b < m.block_count(); ++b)
    r += std::min(used[static_cast<std::size_t>(b)], m.capacity(b));
  return r;
}

inline bool in_polytope(const UniformMatroid& m, const FractionalPoint& x,
                        double tol = kPolytopeTol) {
  if (!(m.ground() == x.ground())) return false;
  return x.sum() <= static_cast<double>(m.rank_bound()) + tol;
}

inline bool in_polytope(const PartitionMatroid& m, const FractionalPoint& x,
                        double tol = kPolytopeTol) {
  if (!(m.ground() == x.ground())) return false;
  for (int b = 0; b < m.block_count(); ++b)
    if (x.sum_over(m.block(b)) > static_cast<double>(m.capacity(b)) + tol) return false;
  return true;
}

/// Indices with strictly positive coordinates.
inline ElementSet support(const FractionalPoint& x) {
  std::vector<int> members;
  for (int i = 0; i < x.size(); ++i)
    if (x[i] > 0.0) members.push_back(i);
  return ElementSet(x.ground(), std::move(members));
}

}  // namespace crround
