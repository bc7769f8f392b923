#pragma once

#include <span>

#include "blochhom/types.hpp"

namespace blochhom::fft {

bool is_power_of_two(std::size_t n);

/// In-place radix-2 transform. Forward uses e^{-2 pi i jk/n}; inverse uses
/// e^{+2 pi i jk/n}. Neither direction is normalized.
void transform(std::span<cplx> data, bool inverse);

/// Transform of an n x n row-major array (rows, then columns).
void transform_2d(std::span<cplx> data, std::size_t n, bool inverse);

}  // namespace blochhom::fft
