#include "nftproj/tensor.hpp"

#include <algorithm>

namespace nftproj {

Tensor::Tensor(std::vector<std::size_t> shape) : shape_(std::move(shape)) {
  // A zero dimension yields a legal empty tensor (e.g. a zero-horizon
  // generation).
  std::size_t n = shape_.empty() ? 0 : 1;
  for (std::size_t d : shape_) n *= d;
  data_.assign(n, 0.0);
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

}  // namespace nftproj
