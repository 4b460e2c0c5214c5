#include "see360/tensor.hpp"

#include <sstream>
#include <unordered_set>

namespace see360 {

Index numel(const Shape& shape)
{
    Index n = 1;
    for (Index d : shape) {
        if (d < 0)
            throw ShapeError("negative extent in shape " + to_string(shape));
        n *= d;
    }
    return n;
}

std::string to_string(const Shape& shape)
{
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i)
        os << (i ? "," : "") << shape[i];
    os << ']';
    return os.str();
}

namespace {
thread_local bool g_grad_enabled = true;
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

template <typename Scalar>
Tensor<Scalar>::Tensor() : Tensor(Shape{0})
{
}

template <typename Scalar>
Tensor<Scalar>::Tensor(Shape shape, Scalar fill) : node_(std::make_shared<node_type>())
{
    node_->value = Buffer<Scalar>::Constant(numel(shape), fill);
    node_->shape = std::move(shape);
}

template <typename Scalar>
Tensor<Scalar>::Tensor(Shape shape, Buffer<Scalar> values) : node_(std::make_shared<node_type>())
{
    if (numel(shape) != values.size())
        throw ShapeError("data length " + std::to_string(values.size()) + " does not match shape " +
                         to_string(shape));
    node_->shape = std::move(shape);
    node_->value = std::move(values);
}

template <typename Scalar>
Tensor<Scalar>::Tensor(Shape shape, std::initializer_list<Scalar> values)
    : Tensor(std::move(shape), Buffer<Scalar>(Eigen::Map<const Buffer<Scalar>>(
                                   values.begin(), static_cast<Index>(values.size()))))
{
}

template <typename Scalar>
Index Tensor<Scalar>::dim(int i) const
{
    if (i < 0)
        i += rank();
    if (i < 0 || i >= rank())
        throw ShapeError("dimension index out of range for shape " + to_string(shape()));
    return node_->shape[static_cast<std::size_t>(i)];
}

template <typename Scalar>
Buffer<Scalar>& Tensor<Scalar>::mutable_data()
{
    if (!node_->is_leaf())
        throw std::logic_error("in-place write to a non-leaf tensor");
    return node_->value;
}

template <typename Scalar>
Scalar Tensor<Scalar>::item() const
{
    if (size() != 1)
        throw ShapeError("item() on tensor of shape " + to_string(shape()));
    return node_->value[0];
}

template <typename Scalar>
Tensor<Scalar>& Tensor<Scalar>::set_requires_grad(bool on)
{
    if (!node_->is_leaf())
        throw std::logic_error("requires_grad can only be set on leaf tensors");
    node_->requires_grad = on;
    if (!on)
        node_->grad.resize(0);
    return *this;
}

template <typename Scalar>
const Buffer<Scalar>& Tensor<Scalar>::grad() const
{
    if (!has_grad())
        throw std::logic_error("tensor holds no gradient");
    return node_->grad;
}

template <typename Scalar>
void Tensor<Scalar>::zero_grad()
{
    if (node_->grad.size() > 0)
        node_->grad.setZero();
}

template <typename Scalar>
Tensor<Scalar> Tensor<Scalar>::detach() const
{
    auto n = std::make_shared<node_type>();
    n->shape = node_->shape;
    n->value = node_->value;
    return Tensor(std::move(n));
}

template <typename Scalar>
Tensor<Scalar> Tensor<Scalar>::clone() const
{
    return detach();
}

template <typename Scalar>
Tensor<Scalar> Tensor<Scalar>::from_op(Shape shape, Buffer<Scalar> value,
                                       std::initializer_list<const Tensor*> inputs,
                                       typename node_type::BackwardFn backward)
{
    auto n = std::make_shared<node_type>();
    n->shape = std::move(shape);
    n->value = std::move(value);
    if (numel(n->shape) != n->value.size())
        throw ShapeError("op produced inconsistent value length for shape " + to_string(n->shape));
    if (g_grad_enabled) {
        bool track = false;
        for (const Tensor* t : inputs)
            track = track || t->requires_grad();
        if (track) {
            n->requires_grad = true;
            for (const Tensor* t : inputs)
                n->parents.push_back(t->node_);
            n->backward = std::move(backward);
        }
    }
    return Tensor(std::move(n));
}

template <typename Scalar>
void backward(const Tensor<Scalar>& loss)
{
    using NodeT = Node<Scalar>;
    if (loss.size() != 1)
        throw ShapeError("backward requires a scalar loss, got shape " + to_string(loss.shape()));
    NodeT* root = loss.node();
    if (!root->requires_grad)
        return;

    // Iterative post-order DFS; deep decoder graphs would overflow recursion.
    std::vector<NodeT*> order;
    std::unordered_set<NodeT*> visited;
    std::vector<std::pair<NodeT*, std::size_t>> stack{{root, 0}};
    visited.insert(root);
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            NodeT* p = node->parents[next++].get();
            if (p->requires_grad && visited.insert(p).second)
                stack.emplace_back(p, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    for (NodeT* n : order)
        if (!n->is_leaf())
            n->grad.resize(0);
    root->grad_buffer() += Scalar(1);

    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        NodeT* n = *it;
        if (n->is_leaf() || n->grad.size() == 0)
            continue;
        n->backward(n->grad);
        n->grad.resize(0);
    }
}

template class Tensor<float>;
template class Tensor<double>;
template void backward(const Tensor<float>&);
template void backward(const Tensor<double>&);

}  // namespace see360
