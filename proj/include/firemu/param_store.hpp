#ifndef FIREMU_PARAM_STORE_HPP
#define FIREMU_PARAM_STORE_HPP

#include "firemu/tensor.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace firemu {

/// One layer's parameters: a weight array followed by `bias_size` biases.
struct Segment {
  std::string name;
  Shape4 weight_shape;
  Index bias_size = 0;
  Index offset = 0;

  Index weight_count() const { return weight_shape.size(); }
  Index size() const { return weight_count() + bias_size; }
};

/// Ordered, named parameter segments over one flat vector.
template <typename Scalar>
class ParamStore {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  const Segment& add(std::string name, const Shape4& weight_shape, Index bias_size) {
    if (find(name) >= 0) throw std::invalid_argument("duplicate parameter segment '" + name + "'");
    Segment s{std::move(name), weight_shape, bias_size, values_.size()};
    const Index old = values_.size();
    values_.conservativeResize(old + s.size());
    values_.tail(s.size()).setZero();
    segments_.push_back(std::move(s));
    return segments_.back();
  }

  const std::vector<Segment>& segments() const { return segments_; }
  Index total_count() const { return values_.size(); }

  /// -1 when absent.
  int find(std::string_view name) const {
    const auto it = std::find_if(segments_.begin(), segments_.end(), [&](const Segment& s) { return s.name == name; });
    return it == segments_.end() ? -1 : static_cast<int>(it - segments_.begin());
  }
  const Segment& segment(std::string_view name) const {
    const int i = find(name);
    if (i < 0) throw std::out_of_range("no parameter segment '" + std::string(name) + "'");
    return segments_[static_cast<std::size_t>(i)];
  }

  Vector& values() { return values_; }
  const Vector& values() const { return values_; }

  auto weights(std::string_view name) {
    const auto& s = segment(name);
    return values_.segment(s.offset, s.weight_count());
  }
  auto weights(std::string_view name) const {
    const auto& s = segment(name);
    return values_.segment(s.offset, s.weight_count());
  }
  auto bias(std::string_view name) {
    const auto& s = segment(name);
    return values_.segment(s.offset + s.weight_count(), s.bias_size);
  }
  auto bias(std::string_view name) const {
    const auto& s = segment(name);
    return values_.segment(s.offset + s.weight_count(), s.bias_size);
  }

  Tensor<Scalar> weight_tensor(const Segment& s) const {
    return Tensor<Scalar>(s.weight_shape, values_.segment(s.offset, s.weight_count()));
  }
  Tensor<Scalar> bias_tensor(const Segment& s) const {
    return Tensor<Scalar>({1, s.bias_size, 1, 1}, values_.segment(s.offset + s.weight_count(), s.bias_size));
  }

  template <typename To>
  ParamStore<To> cast() const {
    ParamStore<To> out;
    for (const auto& s : segments_) out.add(s.name, s.weight_shape, s.bias_size);
    out.values() = values_.template cast<To>();
    return out;
  }

 private:
  std::vector<Segment> segments_;
  Vector values_;
};

}  // namespace firemu

#endif  // FIREMU_PARAM_STORE_HPP
