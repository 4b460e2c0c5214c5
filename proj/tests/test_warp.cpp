#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "see360/warp.hpp"
#include "support.hpp"

using namespace see360;
using see360::test::grad_error;
using see360::test::probe;
using see360::test::random_tensor;

namespace {

using Mat = AffineParams<double>::Matrix;

Mat mat(double a, double b, double tx, double c, double d, double ty)
{
    Mat m;
    m << a, b, tx, c, d, ty;
    return m;
}

}  // namespace

TEST_CASE("identity warp reproduces the input")
{
    std::mt19937_64 rng(1);
    auto f = random_tensor({2, 3, 7, 9}, rng);
    auto y = warp_affine(f, AffineParams<double>::identity());
    CHECK((y.data() - f.data()).abs().maxCoeff() < 1e-6);
}

TEST_CASE("one-pixel shift matches the shifted array")
{
    std::mt19937_64 rng(2);
    const Index H = 5, W = 8;
    auto f = random_tensor({1, 2, H, W}, rng);
    // With align-corners coordinates one pixel spans 2 / (W - 1).
    auto y = warp_affine(f, AffineParams<double>(mat(1, 0, 2.0 / (W - 1), 0, 1, 0), false));
    for (Index c = 0; c < 2; ++c)
        for (Index i = 0; i < H; ++i)
            for (Index j = 0; j < W; ++j) {
                const double expect = j + 1 < W ? f[(c * H + i) * W + j + 1] : 0.0;
                CHECK(std::abs(y[(c * H + i) * W + j] - expect) < 1e-5);
            }
}

TEST_CASE("90 degree rotation matches the rotated array")
{
    std::mt19937_64 rng(3);
    const Index S = 6;
    auto f = random_tensor({1, 1, S, S}, rng);
    // Output (x, y) samples input (-y, x): out[i][j] = in[j][S-1-i].
    auto y = warp_affine(f, AffineParams<double>(mat(0, -1, 0, 1, 0, 0), true));
    for (Index i = 0; i < S; ++i)
        for (Index j = 0; j < S; ++j)
            CHECK(std::abs(y[i * S + j] - f[j * S + (S - 1 - i)]) < 1e-5);
}

// Smooth content keeps the resampling error of two bilinear passes well
// below the tolerance; composition errors are not smooth-content dependent.
TEST_CASE("warping twice agrees with the composed transform on the interior")
{
    const Index H = 40, W = 48;
    Tensor<double> f({1, 1, H, W});
    for (Index i = 0; i < H; ++i)
        for (Index j = 0; j < W; ++j)
            f.mutable_data()[i * W + j] = std::sin(0.06 * j) * std::cos(0.05 * i) + 0.002 * i * j;
    const double a = 0.08;
    AffineParams<double> inner(mat(std::cos(a), -std::sin(a), 0.05, std::sin(a), std::cos(a), -0.03), false);
    AffineParams<double> outer(mat(0.95, 0.04, -0.02, -0.03, 1.05, 0.04), false);
    auto twice = warp_affine(warp_affine(f, inner), outer);
    auto once = warp_affine(f, AffineParams<double>::compose(inner, outer));
    double worst = 0;
    for (Index i = 8; i < H - 8; ++i)
        for (Index j = 8; j < W - 8; ++j)
            worst = std::max(worst, std::abs(twice[i * W + j] - once[i * W + j]));
    CHECK(worst < 1e-3);

    // The reversed product is a different map, so the check can tell them apart.
    auto swapped = warp_affine(f, AffineParams<double>::compose(outer, inner));
    double gap = 0;
    for (Index i = 8; i < H - 8; ++i)
        for (Index j = 8; j < W - 8; ++j)
            gap = std::max(gap, std::abs(twice[i * W + j] - swapped[i * W + j]));
    CHECK(gap > 5 * worst);
    CHECK(gap > 3e-3);
}

TEST_CASE("translation lock and finiteness")
{
    AffineParams<double> t(mat(1, 0, 0.4, 0, 1, -0.2), true);
    CHECK(t.matrix()(0, 2) == 0.0);
    CHECK(t.matrix()(1, 2) == 0.0);
    CHECK(t.translation_locked());
    AffineParams<double> free(mat(1, 0, 0.4, 0, 1, -0.2), false);
    CHECK(free.matrix()(0, 2) == 0.4);
    CHECK_THROWS(AffineParams<double>(mat(std::numeric_limits<double>::quiet_NaN(), 0, 0, 0, 1, 0), true));
    CHECK_THROWS(AffineParams<double>(mat(1, 0, 0, 0, std::numeric_limits<double>::infinity(), 0), false));
}

TEST_CASE("affine_grid of the identity lists pixel centres")
{
    auto g = affine_grid(AffineParams<double>::identity(), 3, 5);
    CHECK(g.shape() == Shape{3, 5, 2});
    CHECK(g[0] == doctest::Approx(-1));
    CHECK(g[1] == doctest::Approx(-1));
    CHECK(g[(2 * 5 + 4) * 2] == doctest::Approx(1));
    CHECK(g[(2 * 5 + 4) * 2 + 1] == doctest::Approx(1));
    CHECK(g[(1 * 5 + 2) * 2] == doctest::Approx(0));
}

TEST_CASE("sampling outside the map reads zero")
{
    Tensor<double> f({1, 1, 3, 3}, 1.0);
    Tensor<double> grid({1, 1, 2}, {5.0, 5.0});
    CHECK(grid_sample_bilinear(f, grid)[0] == 0.0);
    Tensor<double> nan_grid({1, 1, 2}, {std::numeric_limits<double>::quiet_NaN(), 0.0});
    CHECK(grid_sample_bilinear(f, nan_grid)[0] == 0.0);
}

TEST_CASE("warp gradients match central differences")
{
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        std::mt19937_64 rng(200 + seed);
        CAPTURE(seed);
        auto f = random_tensor({2, 2, 5, 6}, rng);
        auto grid = random_tensor({2, 4, 3, 2}, rng, -1.2, 1.2);
        CHECK(grad_error([&] { return probe(grid_sample_bilinear(f, grid)); }, {&f, &grid}) < 1e-4);
        auto shared = random_tensor({4, 3, 2}, rng, -1.2, 1.2);
        CHECK(grad_error([&] { return probe(grid_sample_bilinear(f, shared)); }, {&f, &shared}) < 1e-4);

        auto theta = random_tensor({2, 3}, rng, -0.3, 0.3);
        theta.mutable_data()[0] += 1;
        theta.mutable_data()[4] += 1;
        CHECK(grad_error([&] { return probe(affine_grid(theta, 4, 5)); }, {&theta}) < 1e-4);

        auto thetas = random_tensor({2, 2, 3}, rng, -0.3, 0.3);
        for (Index n = 0; n < 2; ++n) {
            thetas.mutable_data()[n * 6] += 1;
            thetas.mutable_data()[n * 6 + 4] += 1;
        }
        CHECK(grad_error([&] { return probe(warp_affine(f, thetas)); }, {&f, &thetas}) < 1e-4);
    }
}
