#include "vpet/tensor.hpp"

#include "vpet/error.hpp"

namespace vpet::nn {

template <typename T>
BasicTensor<T>::BasicTensor(Shape4 shape, std::vector<T> data) : shape_(shape), data_(std::move(data)) {
  require(data_.size() == shape_.count(), ErrorCode::kShapeMismatch, "tensor data does not match its shape");
}

template class BasicTensor<float>;
template class BasicTensor<double>;

}  // namespace vpet::nn
