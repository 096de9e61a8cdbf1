#pragma once

#include <cstddef>
#include <utility>
#include <vector>

namespace biopepa {

/// Binary min-heap over keys 0..n-1 with O(log n) key updates.
/// Ties break on the smaller key so the order is deterministic.
class IndexedMinHeap {
 public:
  explicit IndexedMinHeap(std::vector<double> values) : value_(std::move(values)) {
    const std::size_t n = value_.size();
    heap_.resize(n);
    pos_.resize(n);
    for (std::size_t i = 0; i < n; ++i) heap_[i] = pos_[i] = i;
    for (std::size_t i = n / 2; i-- > 0;) sift_down(i);
  }

  bool empty() const noexcept { return heap_.empty(); }
  std::size_t size() const noexcept { return heap_.size(); }
  std::size_t top() const { return heap_.front(); }
  double top_value() const { return value_[heap_.front()]; }
  double value(std::size_t key) const { return value_[key]; }

  void update(std::size_t key, double v) {
    double old = value_[key];
    value_[key] = v;
    if (less(v, key, old, key)) {
      sift_up(pos_[key]);
    } else {
      sift_down(pos_[key]);
    }
  }

  /// Heap property check, for tests.
  bool valid() const {
    for (std::size_t i = 1; i < heap_.size(); ++i) {
      std::size_t p = (i - 1) / 2;
      if (before(heap_[i], heap_[p])) return false;
    }
    for (std::size_t k = 0; k < pos_.size(); ++k) {
      if (heap_[pos_[k]] != k) return false;
    }
    return true;
  }

 private:
  static bool less(double va, std::size_t a, double vb, std::size_t b) {
    return va < vb || (va == vb && a < b);
  }
  bool before(std::size_t a, std::size_t b) const { return less(value_[a], a, value_[b], b); }

  void swap_at(std::size_t i, std::size_t j) {
    std::swap(heap_[i], heap_[j]);
    pos_[heap_[i]] = i;
    pos_[heap_[j]] = j;
  }

  void sift_up(std::size_t i) {
    while (i > 0) {
      std::size_t p = (i - 1) / 2;
      if (!before(heap_[i], heap_[p])) break;
      swap_at(i, p);
      i = p;
    }
  }

  void sift_down(std::size_t i) {
    const std::size_t n = heap_.size();
    for (;;) {
      std::size_t l = 2 * i + 1, r = l + 1, m = i;
      if (l < n && before(heap_[l], heap_[m])) m = l;
      if (r < n && before(heap_[r], heap_[m])) m = r;
      if (m == i) break;
      swap_at(i, m);
      i = m;
    }
  }

  std::vector<double> value_;
  std::vector<std::size_t> heap_;
  std::vector<std::size_t> pos_;
};

}  // namespace biopepa
