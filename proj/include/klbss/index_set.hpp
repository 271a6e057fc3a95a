#pragma once

#include <algorithm>
#include <cstddef>
#include <initializer_list>
#include <iterator>
#include <ostream>
#include <string>
#include <vector>

#include "klbss/error.hpp"

namespace klbss {

/// Strictly increasing set of 0-based variable indices.
class IndexSet {
 public:
  using value_type = std::size_t;
  using const_iterator = std::vector<std::size_t>::const_iterator;

  IndexSet() = default;
  IndexSet(std::initializer_list<std::size_t> members) : IndexSet(std::vector<std::size_t>(members)) {}
  explicit IndexSet(std::vector<std::size_t> members) : members_(std::move(members)) {
    std::sort(members_.begin(), members_.end());
    members_.erase(std::unique(members_.begin(), members_.end()), members_.end());
  }

  /// {0, 1, ..., count-1}
  static IndexSet range(std::size_t count) {
    IndexSet out;
    out.members_.resize(count);
    for (std::size_t i = 0; i < count; ++i) out.members_[i] = i;
    return out;
  }

  std::size_t size() const noexcept { return members_.size(); }
  bool empty() const noexcept { return members_.empty(); }
  std::size_t operator[](std::size_t i) const { return members_[i]; }
  const_iterator begin() const noexcept { return members_.begin(); }
  const_iterator end() const noexcept { return members_.end(); }
  const std::vector<std::size_t>& members() const noexcept { return members_; }

  bool contains(std::size_t idx) const { return std::binary_search(members_.begin(), members_.end(), idx); }
  bool subset_of(const IndexSet& other) const {
    return std::includes(other.members_.begin(), other.members_.end(), members_.begin(), members_.end());
  }
  /// All members below `d`.
  bool within(std::size_t d) const { return members_.empty() || members_.back() < d; }

  IndexSet set_union(const IndexSet& o) const {
    IndexSet out;
    std::set_union(members_.begin(), members_.end(), o.members_.begin(), o.members_.end(),
                   std::back_inserter(out.members_));
    return out;
  }
  IndexSet set_intersection(const IndexSet& o) const {
    IndexSet out;
    std::set_intersection(members_.begin(), members_.end(), o.members_.begin(), o.members_.end(),
                          std::back_inserter(out.members_));
    return out;
  }
  IndexSet set_difference(const IndexSet& o) const {
    IndexSet out;
    std::set_difference(members_.begin(), members_.end(), o.members_.begin(), o.members_.end(),
                        std::back_inserter(out.members_));
    return out;
  }
  IndexSet symmetric_difference(const IndexSet& o) const {
    IndexSet out;
    std::set_symmetric_difference(members_.begin(), members_.end(), o.members_.begin(), o.members_.end(),
                                  std::back_inserter(out.members_));
    return out;
  }

  /// Position of `idx` within the set; size() when absent.
  std::size_t position(std::size_t idx) const {
    auto it = std::lower_bound(members_.begin(), members_.end(), idx);
    if (it == members_.end() || *it != idx) return members_.size();
    return static_cast<std::size_t>(it - members_.begin());
  }

  /// Pipe-joined members, e.g. "0|3|5".
  std::string to_string(char sep = '|') const {
    std::string out;
    for (std::size_t i = 0; i < members_.size(); ++i) {
      if (i) out += sep;
      out += std::to_string(members_[i]);
    }
    return out;
  }

  friend bool operator==(const IndexSet&, const IndexSet&) = default;
  /// Lexicographic on the sorted member sequence.
  friend bool operator<(const IndexSet& a, const IndexSet& b) { return a.members_ < b.members_; }

  friend std::ostream& operator<<(std::ostream& os, const IndexSet& s) { return os << '{' << s.to_string(',') << '}'; }

 private:
  std::vector<std::size_t> members_;
};

/// Enumeration guard for candidate families.
inline constexpr std::size_t kMaxCandidates = 1'000'000;

/// Number of k-subsets of n items, saturating at `cap + 1` so callers can guard enumeration.
inline std::size_t binomial_capped(std::size_t n, std::size_t k, std::size_t cap) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  long double acc = 1;
  for (std::size_t i = 1; i <= k; ++i) {
    acc = acc * static_cast<long double>(n - k + i) / static_cast<long double>(i);
    if (acc > static_cast<long double>(cap)) return cap + 1;
  }
  return static_cast<std::size_t>(acc + 0.5L);
}

/// All k-subsets of `pool` in lexicographic order.
inline std::vector<IndexSet> combinations(const IndexSet& pool, std::size_t k) {
  std::vector<IndexSet> out;
  const std::size_t n = pool.size();
  if (k > n) return out;
  std::vector<std::size_t> pick(k);
  for (std::size_t i = 0; i < k; ++i) pick[i] = i;
  while (true) {
    std::vector<std::size_t> members(k);
    for (std::size_t i = 0; i < k; ++i) members[i] = pool[pick[i]];
    out.emplace_back(std::move(members));
    std::size_t i = k;
    while (i > 0 && pick[i - 1] == n - k + i - 1) --i;
    if (i == 0) break;
    ++pick[i - 1];
    for (std::size_t j = i; j < k; ++j) pick[j] = pick[j - 1] + 1;
  }
  return out;
}

/// k-subsets of {0..d-1}; throws TooManyCandidates above `limit`.
inline std::vector<IndexSet> all_supports(std::size_t d, std::size_t k, std::size_t limit) {
  if (binomial_capped(d, k, limit) > limit)
    throw TooManyCandidates("C(" + std::to_string(d) + "," + std::to_string(k) + ") exceeds " + std::to_string(limit));
  return combinations(IndexSet::range(d), k);
}

/// Every subset of {0..d-1} with at most `max_size` members, ordered by size then lexicographically.
inline std::vector<IndexSet> supports_up_to(std::size_t d, std::size_t max_size, std::size_t limit) {
  std::size_t total = 0;
  for (std::size_t k = 0; k <= max_size && k <= d; ++k) {
    total += binomial_capped(d, k, limit);
    if (total > limit) throw TooManyCandidates("supports of size <= " + std::to_string(max_size) + " exceed " + std::to_string(limit));
  }
  std::vector<IndexSet> out;
  out.reserve(total);
  for (std::size_t k = 0; k <= max_size && k <= d; ++k) {
    auto level = combinations(IndexSet::range(d), k);
    out.insert(out.end(), std::make_move_iterator(level.begin()), std::make_move_iterator(level.end()));
  }
  return out;
}

}  // namespace klbss
