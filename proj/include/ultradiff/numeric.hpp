#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace ultradiff {

// Pairwise (tree) summation: fixed association order independent of chunking,
// so parallel partitions reproduce the serial result bit for bit, and error
// grows like O(log n) instead of O(n).
template <typename T>
T pairwise_sum(const T* data, std::size_t n) {
  if (n == 0) return T{};
  if (n <= 8) {
    T acc = data[0];
    for (std::size_t i = 1; i < n; ++i) acc += data[i];
    return acc;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(data, half) + pairwise_sum(data + half, n - half);
}

template <typename T>
T pairwise_sum(const std::vector<T>& v) {
  return pairwise_sum(v.data(), v.size());
}

}  // namespace ultradiff
