#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace see360 {

using Index = std::ptrdiff_t;
using Shape = std::vector<Index>;

/// Raised when operand extents are incompatible with an operation.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

Index numel(const Shape& shape);
std::string to_string(const Shape& shape);

template <typename Scalar>
using Buffer = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

/// Graph node behind a Tensor handle. Values are immutable once an op has
/// produced them; only leaves are ever written in place (optimizer, loading).
template <typename Scalar>
struct Node {
    using BackwardFn = std::function<void(const Buffer<Scalar>& grad_out)>;

    Shape shape;
    Buffer<Scalar> value;
    Buffer<Scalar> grad;  // empty until something is accumulated
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    BackwardFn backward;

    bool is_leaf() const { return parents.empty(); }

    /// Gradient buffer, zero-allocated on first use.
    Buffer<Scalar>& grad_buffer()
    {
        if (grad.size() != value.size())
            grad = Buffer<Scalar>::Zero(value.size());
        return grad;
    }
};

/// Dense row-major tensor handle (NCHW for image-like data) with optional
/// reverse-mode gradient tracking. Copies share the underlying node.
template <typename Scalar>
class Tensor {
public:
    using scalar_type = Scalar;
    using node_type = Node<Scalar>;

    Tensor();
    explicit Tensor(Shape shape, Scalar fill = Scalar(0));
    Tensor(Shape shape, Buffer<Scalar> values);
    Tensor(Shape shape, std::initializer_list<Scalar> values);

    static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
    static Tensor scalar(Scalar v) { return Tensor(Shape{}, v); }

    const Shape& shape() const { return node_->shape; }
    int rank() const { return static_cast<int>(node_->shape.size()); }
    Index dim(int i) const;
    Index size() const { return node_->value.size(); }

    const Buffer<Scalar>& data() const { return node_->value; }
    /// In-place access for leaf tensors (parameter updates, deserialization).
    Buffer<Scalar>& mutable_data();
    Scalar item() const;
    Scalar operator[](Index i) const { return node_->value[i]; }

    bool requires_grad() const { return node_->requires_grad; }
    Tensor& set_requires_grad(bool on);
    bool has_grad() const { return node_->grad.size() == node_->value.size() && size() > 0; }
    const Buffer<Scalar>& grad() const;
    void zero_grad();

    /// Same values, no history.
    Tensor detach() const;
    /// Deep copy of the values into a fresh leaf.
    Tensor clone() const;

    node_type* node() const { return node_.get(); }
    const std::shared_ptr<node_type>& node_ptr() const { return node_; }

    /// Wraps a freshly computed value; records history when any input tracks
    /// gradients and grad mode is enabled.
    static Tensor from_op(Shape shape, Buffer<Scalar> value,
                          std::initializer_list<const Tensor*> inputs,
                          typename node_type::BackwardFn backward);

private:
    explicit Tensor(std::shared_ptr<node_type> node) : node_(std::move(node)) {}
    std::shared_ptr<node_type> node_;
};

/// Thread-local switch for graph recording.
bool grad_enabled();

class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool previous_;
};

/// Reverse sweep from a scalar loss. Leaf gradients accumulate across calls
/// until zero_grad(); intermediate gradients are rebuilt on every call.
template <typename Scalar>
void backward(const Tensor<Scalar>& loss);

extern template class Tensor<float>;
extern template class Tensor<double>;
extern template void backward(const Tensor<float>&);
extern template void backward(const Tensor<double>&);

}  // namespace see360
