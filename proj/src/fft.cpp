#include "blochhom/fft.hpp"

#include <utility>

#include "blochhom/error.hpp"

namespace blochhom::fft {

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

void transform(std::span<cplx> data, bool inverse) {
  const std::size_t n = data.size();
  if (!is_power_of_two(n)) throw InputError("fft length must be a power of two");

  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(data[i], data[j]);
  }

  const double sign = inverse ? 1.0 : -1.0;
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2;
    for (std::size_t start = 0; start < n; start += len) {
      for (std::size_t k = 0; k < half; ++k) {
        // Twiddles from the exact angle rather than a recurrence.
        const double angle = sign * kTwoPi * static_cast<double>(k) / static_cast<double>(len);
        const cplx w{std::cos(angle), std::sin(angle)};
        const cplx u = data[start + k];
        const cplx v = data[start + k + half] * w;
        data[start + k] = u + v;
        data[start + k + half] = u - v;
      }
    }
  }
}

void transform_2d(std::span<cplx> data, std::size_t n, bool inverse) {
  if (data.size() != n * n) throw InputError("fft_2d: data size is not n*n");
  for (std::size_t r = 0; r < n; ++r) transform(data.subspan(r * n, n), inverse);
  std::vector<cplx> column(n);
  for (std::size_t col = 0; col < n; ++col) {
    for (std::size_t r = 0; r < n; ++r) column[r] = data[r * n + col];
    transform(column, inverse);
    for (std::size_t r = 0; r < n; ++r) data[r * n + col] = column[r];
  }
}

}  // namespace blochhom::fft
