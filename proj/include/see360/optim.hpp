#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "see360/tensor.hpp"

namespace see360 {

template <typename Scalar>
struct AdamState {
    Buffer<Scalar> m;
    Buffer<Scalar> v;
    std::int64_t t = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    static AdamState for_param(const Tensor<Scalar>& param, double beta1 = 0.9, double beta2 = 0.999,
                               double eps = 1e-8);
};

/// One bias-corrected Adam update applied in place to a leaf parameter.
template <typename Scalar>
void adam_step(Tensor<Scalar>& param, AdamState<Scalar>& state, double lr);

template <typename Scalar>
using NamedParams = std::vector<std::pair<std::string, Tensor<Scalar>*>>;

/// Adam over a fixed, named parameter list.
template <typename Scalar>
class Adam {
public:
    Adam(NamedParams<Scalar> params, double lr, double beta1, double beta2, double eps = 1e-8);

    void zero_grad();
    void step();

    double lr() const { return lr_; }
    const NamedParams<Scalar>& params() const { return params_; }
    std::vector<AdamState<Scalar>>& states() { return states_; }
    const std::vector<AdamState<Scalar>>& states() const { return states_; }

private:
    NamedParams<Scalar> params_;
    std::vector<AdamState<Scalar>> states_;
    double lr_;
};

extern template struct AdamState<float>;
extern template struct AdamState<double>;
extern template class Adam<float>;
extern template class Adam<double>;
extern template void adam_step(Tensor<float>&, AdamState<float>&, double);
extern template void adam_step(Tensor<double>&, AdamState<double>&, double);

}  // namespace see360
