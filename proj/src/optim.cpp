#include "see360/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace see360 {

template <typename Scalar>
AdamState<Scalar> AdamState<Scalar>::for_param(const Tensor<Scalar>& param, double beta1, double beta2,
                                               double eps)
{
    if (!(beta1 > 0 && beta1 < 1) || !(beta2 > 0 && beta2 < 1))
        throw std::invalid_argument("Adam betas must lie in (0, 1)");
    AdamState s;
    s.m = Buffer<Scalar>::Zero(param.size());
    s.v = Buffer<Scalar>::Zero(param.size());
    s.beta1 = beta1;
    s.beta2 = beta2;
    s.eps = eps;
    return s;
}

template <typename Scalar>
void adam_step(Tensor<Scalar>& param, AdamState<Scalar>& state, double lr)
{
    if (!param.has_grad())
        throw std::logic_error("adam_step: parameter has no gradient");
    if (state.m.size() != param.size() || state.v.size() != param.size())
        throw ShapeError("adam_step: moment buffers do not match parameter shape");
    const auto& g = param.grad();
    const Scalar b1 = static_cast<Scalar>(state.beta1);
    const Scalar b2 = static_cast<Scalar>(state.beta2);
    state.t += 1;
    state.m = b1 * state.m + (Scalar(1) - b1) * g;
    state.v = b2 * state.v + (Scalar(1) - b2) * g.square();
    const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
    const Scalar step = static_cast<Scalar>(lr / c1);
    const Scalar inv_c2 = static_cast<Scalar>(1.0 / c2);
    param.mutable_data() -= step * state.m / ((state.v * inv_c2).sqrt() + static_cast<Scalar>(state.eps));
}

template <typename Scalar>
Adam<Scalar>::Adam(NamedParams<Scalar> params, double lr, double beta1, double beta2, double eps)
    : params_(std::move(params)), lr_(lr)
{
    states_.reserve(params_.size());
    for (auto& [name, p] : params_)
        states_.push_back(AdamState<Scalar>::for_param(*p, beta1, beta2, eps));
}

template <typename Scalar>
void Adam<Scalar>::zero_grad()
{
    for (auto& [name, p] : params_)
        p->zero_grad();
}

template <typename Scalar>
void Adam<Scalar>::step()
{
    for (std::size_t i = 0; i < params_.size(); ++i) {
        Tensor<Scalar>& p = *params_[i].second;
        if (!p.has_grad())
            throw std::logic_error("Adam: parameter '" + params_[i].first + "' has no gradient");
        adam_step(p, states_[i], lr_);
    }
}

template struct AdamState<float>;
template struct AdamState<double>;
template class Adam<float>;
template class Adam<double>;
template void adam_step(Tensor<float>&, AdamState<float>&, double);
template void adam_step(Tensor<double>&, AdamState<double>&, double);

}  // namespace see360
