#include "bu/tensor.hpp"

#include <cmath>
#include <functional>
#include <numeric>

#include "bu/error.hpp"

namespace bu {

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    const std::size_t n = std::accumulate(shape_.begin(), shape_.end(), std::size_t{1},
                                          std::multiplies<>());
    if (n != data_.size()) {
        throw InvalidInput("tensor shape holds " + std::to_string(n) + " elements but " +
                           std::to_string(data_.size()) + " were given");
    }
}

Tensor Tensor::vector(std::vector<double> values) {
    const std::size_t n = values.size();
    return Tensor({n}, std::move(values));
}

Tensor Tensor::zeros(std::vector<std::size_t> shape) {
    const std::size_t n = std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                                          std::multiplies<>());
    return Tensor(std::move(shape), std::vector<double>(n, 0.0));
}

bool Tensor::all_finite() const noexcept {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

}  // namespace bu
