#pragma once

#include <atomic>
#include <cmath>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "see360/ops.hpp"

namespace see360::test {

template <typename S = double>
Tensor<S> random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1, double hi = 1, bool grad = false)
{
    std::uniform_real_distribution<double> u(lo, hi);
    Buffer<S> v(numel(shape));
    for (Index i = 0; i < v.size(); ++i)
        v[i] = static_cast<S>(u(rng));
    Tensor<S> t(std::move(shape), std::move(v));
    if (grad)
        t.set_requires_grad(true);
    return t;
}

/// sum(x * w) for a fixed random w, so every output entry matters.
inline Tensor<double> probe(const Tensor<double>& x, std::uint64_t seed = 99)
{
    std::mt19937_64 rng(seed);
    return sum(x * random_tensor(x.shape(), rng));
}

/// Norm-wise relative error between the analytic gradient and central
/// differences, worst over all inputs. `loss` must read the inputs by reference.
inline double grad_error(const std::function<Tensor<double>()>& loss, std::vector<Tensor<double>*> inputs,
                         double h = 1e-5)
{
    for (auto* x : inputs) {
        x->set_requires_grad(true);
        x->zero_grad();
    }
    backward(loss());
    double worst = 0;
    NoGradGuard no_grad;
    for (auto* x : inputs) {
        const Buffer<double> analytic = x->has_grad() ? x->grad() : Buffer<double>::Zero(x->size());
        Buffer<double> numeric(x->size());
        for (Index i = 0; i < x->size(); ++i) {
            const double keep = x->data()[i];
            x->mutable_data()[i] = keep + h;
            const double up = loss().item();
            x->mutable_data()[i] = keep - h;
            const double down = loss().item();
            x->mutable_data()[i] = keep;
            numeric[i] = (up - down) / (2 * h);
        }
        const double diff = (analytic - numeric).matrix().norm();
        const double scale = std::max(analytic.matrix().norm() + numeric.matrix().norm(), 1e-6);
        worst = std::max(worst, diff / scale);
    }
    return worst;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag)
    {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("see360_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() { std::filesystem::remove_all(path_); }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::string str(const std::string& child = "") const { return (path_ / child).string(); }

private:
    std::filesystem::path path_;
};

}  // namespace see360::test
