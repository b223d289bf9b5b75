#include "ccra/tensor.hpp"

#include <cmath>
#include <numeric>
#include <sstream>
#include <utility>

#include "ccra/errors.hpp"

namespace ccra {

namespace {

std::size_t checked_numel(const std::vector<std::size_t>& shape) {
  if (shape.empty()) {
    throw EmptyInput("tensor shape must have at least one axis");
  }
  std::size_t n = 1;
  for (std::size_t e : shape) {
    if (e == 0) {
      throw EmptyInput("tensor extents must be positive, got " + shape_string(shape));
    }
    n *= e;
  }
  return n;
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(checked_numel(shape_), 0.0) {}

Tensor::Tensor(std::vector<std::size_t> shape, double fill)
    : shape_(std::move(shape)), data_(checked_numel(shape_), fill) {
  if (!std::isfinite(fill)) {
    throw NonFiniteValue("tensor fill value is not finite");
  }
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  const std::size_t n = checked_numel(shape_);
  if (n != data_.size()) {
    std::ostringstream msg;
    msg << "tensor data length " << data_.size() << " does not match shape "
        << shape_string(shape_);
    throw ShapeMismatch(msg.str());
  }
  if (!all_finite()) {
    throw NonFiniteValue("tensor data contains NaN/Inf for shape " + shape_string(shape_));
  }
}

bool Tensor::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Tensor Tensor::reshaped(std::vector<std::size_t> new_shape) const {
  const std::size_t n = checked_numel(new_shape);
  if (n != data_.size()) {
    throw ShapeMismatch("reshape from " + shape_string(shape_) + " to " +
                        shape_string(new_shape) + " changes element count");
  }
  Tensor out;
  out.shape_ = std::move(new_shape);
  out.data_ = data_;
  return out;
}

std::string shape_string(const std::vector<std::size_t>& shape) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << " x ";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

std::string shape_string(const Tensor& t) { return shape_string(t.shape()); }

void debug_check_finite(const Tensor& t, const char* where) {
#ifndef NDEBUG
  if (!t.all_finite()) {
    throw NonFiniteValue(std::string("non-finite value produced by ") + where);
  }
#else
  (void)t;
  (void)where;
#endif
}

}  // namespace ccra
