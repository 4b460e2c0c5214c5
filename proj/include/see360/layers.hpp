#pragma once

#include <random>
#include <string>

#include "see360/ops.hpp"
#include "see360/optim.hpp"

namespace see360 {

/// Trainable leaf drawn from N(0, stddev^2).
template <typename Scalar>
Tensor<Scalar> normal_param(Shape shape, std::mt19937_64& rng, double stddev)
{
    std::normal_distribution<double> dist(0.0, stddev);
    Buffer<Scalar> v(numel(shape));
    for (Index i = 0; i < v.size(); ++i)
        v[i] = static_cast<Scalar>(dist(rng));
    Tensor<Scalar> t(std::move(shape), std::move(v));
    t.set_requires_grad(true);
    return t;
}

template <typename Scalar>
Tensor<Scalar> zero_param(Shape shape)
{
    Tensor<Scalar> t(std::move(shape));
    t.set_requires_grad(true);
    return t;
}

inline constexpr double kInitStd = 0.02;

template <typename Scalar>
struct Linear {
    Tensor<Scalar> weight;  // [out, in]
    Tensor<Scalar> bias;    // [out]

    static Linear make(Index in, Index out, std::mt19937_64& rng, double stddev = kInitStd)
    {
        return {normal_param<Scalar>({out, in}, rng, stddev), zero_param<Scalar>({out})};
    }

    Tensor<Scalar> operator()(const Tensor<Scalar>& x) const { return fully_connected(x, weight, bias); }

    void collect(NamedParams<Scalar>& out, const std::string& prefix)
    {
        out.emplace_back(prefix + ".weight", &weight);
        out.emplace_back(prefix + ".bias", &bias);
    }
};

}  // namespace see360
