#pragma once

#include <cstdint>
#include <numeric>
#include <vector>

namespace gffil {

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n), size_(n, 1), count_(n) {
    std::iota(parent_.begin(), parent_.end(), 0);
  }

  std::uint32_t find(std::uint32_t p) {
    std::uint32_t root = p;
    while (root != parent_[root]) root = parent_[root];
    while (p != root) {
      const std::uint32_t next = parent_[p];
      parent_[p] = root;
      p = next;
    }
    return root;
  }

  void merge(std::uint32_t a, std::uint32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (size_[a] < size_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
    --count_;
  }

  bool connected(std::uint32_t a, std::uint32_t b) { return find(a) == find(b); }
  std::size_t count() const { return count_; }

 private:
  std::vector<std::uint32_t> parent_;
  std::vector<std::uint32_t> size_;
  std::size_t count_;
};

}  // namespace gffil
