// Acceptance run: one PASS/FAIL line per criterion. Tolerances are pinned
// below; the toy training section trains two models from scratch and takes
// roughly ten minutes on one core.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "see360/checkpoint.hpp"
#include "see360/clae.hpp"
#include "see360/losses.hpp"
#include "see360/model.hpp"
#include "see360/service.hpp"
#include "see360/trainer.hpp"
#include "see360/warp.hpp"
#include "support.hpp"

#include <CLI11.hpp>
// After Eigen: <resolv.h> defines a `_res` macro that collides with Eigen internals.
#include <httplib.h>

using namespace see360;
using see360::test::grad_error;
using see360::test::probe;
using see360::test::random_tensor;
namespace fs = std::filesystem;

namespace {

constexpr double kOpGradTol = 1e-4;
constexpr double kE2eGradTol = 1e-3;
constexpr double kGradSuiteSeconds = 120;
constexpr int kGradSeeds = 5;
constexpr double kIdentityTol = 1e-6;
constexpr double kArrayWarpTol = 1e-5;
constexpr double kCompositionTol = 1e-3;
constexpr double kCpcTol = 1e-5;
constexpr double kSsimTol = 1e-6;
constexpr double kSsimZeroOne = 9.999e-5;
constexpr double kPsnrTol = 0.01;
constexpr double kAdvTol = 1e-6;
constexpr int kMaxIterations = 2000;
constexpr double kMaxTrainSeconds = 30 * 60;
constexpr double kMinGainDb = 1.0;
constexpr double kMinFractionBetter = 0.8;
constexpr std::uint64_t kSceneSeed = 1;

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void report(const std::string& name, const std::function<Outcome()>& check)
{
    Outcome o;
    try {
        o = check();
    } catch (const std::exception& e) {
        o = {false, std::string("threw: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << name << ": " << o.detail << std::endl;
}

std::string fmt(double v, int precision = 4)
{
    std::ostringstream s;
    s.precision(precision);
    s << v;
    return s.str();
}

// Gradient suite --------------------------------------------------------------

using GradCheck = std::function<double(std::mt19937_64&)>;

std::vector<std::pair<std::string, GradCheck>> op_checks()
{
    static const FeatureExtractor<double> phi(5, {3, 3, 3, 3});
    std::vector<std::pair<std::string, GradCheck>> c;
    c.emplace_back("conv2d", [](auto& rng) {
        auto x = random_tensor({2, 2, 5, 4}, rng);
        auto k = random_tensor({3, 2, 3, 3}, rng);
        auto x8 = random_tensor({1, 2, 8, 6}, rng);
        auto k4 = random_tensor({2, 2, 4, 4}, rng);
        return std::max(grad_error([&] { return probe(conv2d(x, k, 1, 1)); }, {&x, &k}),
                        grad_error([&] { return probe(conv2d(x8, k4, 2, 1)); }, {&x8, &k4}));
    });
    c.emplace_back("fully_connected", [](auto& rng) {
        auto in = random_tensor({3, 4}, rng);
        auto w = random_tensor({2, 4}, rng);
        auto b = random_tensor({2}, rng);
        return grad_error([&] { return probe(fully_connected(in, w, b)); }, {&in, &w, &b});
    });
    c.emplace_back("leaky_relu", [](auto& rng) {
        auto v = random_tensor({2, 3, 4, 4}, rng);
        return grad_error([&] { return probe(leaky_relu(v, 0.2)); }, {&v});
    });
    c.emplace_back("instance_norm", [](auto& rng) {
        auto v = random_tensor({2, 3, 4, 4}, rng);
        return grad_error([&] { return probe(instance_norm(v, 1e-5)); }, {&v});
    });
    c.emplace_back("upsample", [](auto& rng) {
        auto v = random_tensor({2, 3, 4, 5}, rng);
        return grad_error([&] { return probe(upsample_bilinear_x2(v)); }, {&v});
    });
    c.emplace_back("concat", [](auto& rng) {
        auto v = random_tensor({2, 3, 4, 4}, rng);
        auto u = random_tensor({2, 1, 4, 4}, rng);
        return grad_error([&] { return probe(concat_channels(v, u)); }, {&v, &u});
    });
    c.emplace_back("grid_sample", [](auto& rng) {
        auto f = random_tensor({2, 2, 5, 6}, rng);
        auto grid = random_tensor({2, 4, 3, 2}, rng, -1.2, 1.2);
        return grad_error([&] { return probe(grid_sample_bilinear(f, grid)); }, {&f, &grid});
    });
    c.emplace_back("affine_grid", [](auto& rng) {
        auto theta = random_tensor({2, 3}, rng, -0.3, 0.3);
        theta.mutable_data()[0] += 1;
        theta.mutable_data()[4] += 1;
        return grad_error([&] { return probe(affine_grid(theta, 4, 5)); }, {&theta});
    });
    c.emplace_back("modulate", [](auto& rng) {
        auto g = random_tensor({2, 5}, rng);
        ConditionVector<double> cond{Tensor<double>({2, 5}), random_tensor({2, 5}, rng), random_tensor({2, 5}, rng)};
        return grad_error([&] { return probe(modulate(g, cond)); }, {&g, &cond.mu, &cond.sigma});
    });
    c.emplace_back("cross_patch_corr", [](auto& rng) {
        auto x = random_tensor({2, 2, 4, 4}, rng);
        auto y = random_tensor({2, 2, 4, 4}, rng);
        return grad_error([&] { return probe(cross_patch_corr(x, y, 2).response); }, {&x, &y});
    });
    c.emplace_back("ssim", [](auto& rng) {
        auto a = random_tensor({1, 2, 12, 12}, rng, 0, 1);
        auto b = random_tensor({1, 2, 12, 12}, rng, 0, 1);
        return grad_error([&] { return ssim(a, b); }, {&a, &b});
    });
    c.emplace_back("laplacian_loss", [](auto& rng) {
        auto a = random_tensor({1, 2, 12, 12}, rng, 0, 1);
        auto b = random_tensor({1, 2, 12, 12}, rng, 0, 1);
        return grad_error([&] { return laplacian_loss(a, b, 2); }, {&a, &b});
    });
    c.emplace_back("pd_loss", [](auto& rng) {
        auto p = random_tensor({1, 3, 16, 16}, rng, 0, 1);
        auto q = random_tensor({1, 3, 16, 16}, rng, 0, 1);
        auto c1 = random_tensor({2, 3, 4, 5}, rng);
        auto d1 = random_tensor({2, 3, 4, 5}, rng);
        return std::max(grad_error([&] { return pd_loss(p, q, phi); }, {&p, &q}),
                        grad_error([&] { return sliced_wasserstein(c1, d1); }, {&c1, &d1}));
    });
    c.emplace_back("feat_match_loss", [](auto& rng) {
        auto a = random_tensor({2, 3, 4, 5}, rng);
        auto b = random_tensor({2, 3, 4, 5}, rng);
        return grad_error([&] { return feat_match_loss<double>({a, b * 0.5}, {b, a}); }, {&a, &b});
    });
    c.emplace_back("adversarial", [](auto& rng) {
        auto r = random_tensor({2, 1, 4, 5}, rng);
        auto f = random_tensor({2, 1, 4, 5}, rng);
        return std::max({grad_error([&] { return adv_loss_d(r, f); }, {&r, &f}),
                         grad_error([&] { return adv_loss_g(f); }, {&f}),
                         grad_error([&] { return adv_loss_g(f, AdvConvention::Saturating); }, {&f})});
    });
    c.emplace_back("total_generator_loss", [](auto& rng) {
        auto p = random_tensor({1, 3, 16, 16}, rng, 0, 1);
        auto q = random_tensor({1, 3, 16, 16}, rng, 0, 1);
        auto s = random_tensor({2, 3, 4, 5}, rng);
        auto t = random_tensor({2, 3, 4, 5}, rng);
        return grad_error(
            [&] {
                GeneratorLossParts<double> parts{adv_loss_g(s), ssim(p, q), pd_loss(p, q, phi),
                                                 feat_match_loss<double>({s}, {t}), laplacian_loss(p, q, 2)};
                return total_generator_loss(parts, LossWeights{});
            },
            {&p, &s});
    });
    return c;
}

double e2e_generator_error(std::string& worst_name)
{
    ModelConfig c;
    c.image_width = 16;
    c.image_height = 16;
    c.enc_c1 = 4;
    c.enc_c2 = 8;
    c.enc_c3 = 16;
    c.decoder_width = 4;
    c.latent_width = 8;
    c.patch = 1;
    c.delta = 4;
    c.disc_width = 4;
    c.translation_locked = false;
    auto g = Generator<double>::make(c);
    std::mt19937_64 rng(6);
    // Wide random weights so no transform sits at the identity.
    for (auto& [name, t] : g.parameters()) {
        *t = random_tensor(t->shape(), rng, -0.4, 0.4);
        t->set_requires_grad(true);
    }
    auto l = random_tensor({1, 3, 16, 16}, rng, 0, 1);
    auto r = random_tensor({1, 3, 16, 16}, rng, 0, 1);
    auto target = random_tensor({1, 3, 16, 16}, rng, 0, 1);
    const std::vector<AngleCode> codes{digitize_angle(25, 60, 4)};
    const auto th = onehot_batch<double>(codes);
    double worst = 0;
    for (auto& [name, p] : g.parameters()) {
        const double e = grad_error([&] { return mean(abs(g.generate(l, r, th) - target)); }, {p});
        if (e > worst) {
            worst = e;
            worst_name = name;
        }
    }
    return worst;
}

Outcome gradient_suite()
{
    const auto start = std::chrono::steady_clock::now();
    double worst = 0;
    std::string worst_name, failed;
    const auto checks = op_checks();
    for (const auto& [name, check] : checks)
        for (int seed = 0; seed < kGradSeeds; ++seed) {
            std::mt19937_64 rng(1000 + static_cast<std::uint64_t>(seed));
            const double e = check(rng);
            if (e > worst) {
                worst = e;
                worst_name = name;
            }
            if (!(e < kOpGradTol) && failed.find(name) == std::string::npos)
                failed += " " + name;
        }
    std::string e2e_name;
    const double e2e = e2e_generator_error(e2e_name);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    Outcome o;
    o.pass = failed.empty() && e2e < kE2eGradTol && secs < kGradSuiteSeconds;
    o.detail = std::to_string(checks.size()) + " ops x " + std::to_string(kGradSeeds) + " seeds, worst " +
               fmt(worst) + " (" + worst_name + ") < " + fmt(kOpGradTol) + "; e2e 16x16 worst " + fmt(e2e) + " (" +
               e2e_name + ") < " + fmt(kE2eGradTol) + "; " + fmt(secs, 3) + " s";
    if (!failed.empty())
        o.detail += "; over tolerance:" + failed;
    return o;
}

// Warps -----------------------------------------------------------------------

AffineParams<double>::Matrix mat(double a, double b, double tx, double c, double d, double ty)
{
    AffineParams<double>::Matrix m;
    m << a, b, tx, c, d, ty;
    return m;
}

Outcome warp_oracles()
{
    std::mt19937_64 rng(2);
    auto f = random_tensor({2, 3, 7, 9}, rng);
    const double identity = (warp_affine(f, AffineParams<double>::identity()).data() - f.data()).abs().maxCoeff();

    const Index H = 5, W = 8;
    auto g = random_tensor({1, 2, H, W}, rng);
    auto shifted = warp_affine(g, AffineParams<double>(mat(1, 0, 2.0 / (W - 1), 0, 1, 0), false));
    double shift = 0;
    for (Index c = 0; c < 2; ++c)
        for (Index i = 0; i < H; ++i)
            for (Index j = 0; j < W; ++j) {
                const double expect = j + 1 < W ? g[(c * H + i) * W + j + 1] : 0.0;
                shift = std::max(shift, std::abs(shifted[(c * H + i) * W + j] - expect));
            }

    const Index S = 6;
    auto h = random_tensor({1, 1, S, S}, rng);
    auto rotated = warp_affine(h, AffineParams<double>(mat(0, -1, 0, 1, 0, 0), true));
    double rot = 0;
    for (Index i = 0; i < S; ++i)
        for (Index j = 0; j < S; ++j)
            rot = std::max(rot, std::abs(rotated[i * S + j] - h[j * S + (S - 1 - i)]));

    // Smooth content so two bilinear passes stay close to one.
    const Index CH = 40, CW = 48, margin = 8;
    Tensor<double> smooth({1, 1, CH, CW});
    for (Index i = 0; i < CH; ++i)
        for (Index j = 0; j < CW; ++j)
            smooth.mutable_data()[i * CW + j] = std::sin(0.06 * j) * std::cos(0.05 * i) + 0.002 * i * j;
    const double a = 0.08;
    AffineParams<double> inner(mat(std::cos(a), -std::sin(a), 0.05, std::sin(a), std::cos(a), -0.03), false);
    AffineParams<double> outer(mat(0.95, 0.04, -0.02, -0.03, 1.05, 0.04), false);
    auto twice = warp_affine(warp_affine(smooth, inner), outer);
    auto once = warp_affine(smooth, AffineParams<double>::compose(inner, outer));
    double comp = 0;
    for (Index i = margin; i < CH - margin; ++i)
        for (Index j = margin; j < CW - margin; ++j)
            comp = std::max(comp, std::abs(twice[i * CW + j] - once[i * CW + j]));

    return {identity <= kIdentityTol && shift <= kArrayWarpTol && rot <= kArrayWarpTol && comp <= kCompositionTol,
            "identity " + fmt(identity) + ", shift " + fmt(shift) + ", rotation " + fmt(rot) + ", composition " +
                fmt(comp)};
}

// Cross-patch correlation -----------------------------------------------------

// Each P x P patch of x slid over y with zero padding and offset P/2, summed
// over patches and channels.
Tensor<double> cpc_oracle(const Tensor<double>& x, const Tensor<double>& y, int P)
{
    const Index C = x.dim(0), H = x.dim(1), W = x.dim(2), o = P / 2;
    Tensor<double> s({H, W});
    for (Index pi = 0; pi < H / P; ++pi)
        for (Index pj = 0; pj < W / P; ++pj)
            for (Index i = 0; i < H; ++i)
                for (Index j = 0; j < W; ++j) {
                    double acc = 0;
                    for (Index c = 0; c < C; ++c)
                        for (Index a = 0; a < P; ++a)
                            for (Index b = 0; b < P; ++b) {
                                const Index yi = i - a + o, yj = j - b + o;
                                if (yi < 0 || yi >= H || yj < 0 || yj >= W)
                                    continue;
                                acc += x[(c * H + pi * P + a) * W + pj * P + b] * y[(c * H + yi) * W + yj];
                            }
                    s.mutable_data()[i * W + j] += acc;
                }
    return s;
}

Outcome cpc_oracle_check()
{
    double worst = 0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        std::mt19937_64 rng(300 + seed);
        auto x = random_tensor({3, 8, 8}, rng);
        auto y = random_tensor({3, 8, 8}, rng);
        for (int P : {1, 2, 4}) {
            const auto xy = cross_patch_corr(x, y, P, Direction::LeftToRight).response;
            const auto yx = cross_patch_corr(y, x, P, Direction::RightToLeft).response;
            worst = std::max(worst, (xy.data() - cpc_oracle(x, y, P).data()).abs().maxCoeff());
            worst = std::max(worst, (yx.data() - cpc_oracle(y, x, P).data()).abs().maxCoeff());
        }
    }
    return {worst <= kCpcTol, "8x8x3, patch 1/2/4, 5 seeds, both directions, max diff " + fmt(worst)};
}

// Angle coding ----------------------------------------------------------------

Outcome angle_coding()
{
    const std::string code = digitize_angle(30, 60, 13).bits();
    bool ok = code == "0000001000000";
    std::string detail = "(30, 60, 13) -> " + code;
    for (int delta : {12, 13}) {
        std::vector<int> hits(static_cast<std::size_t>(delta), 0);
        int prev = -1;
        bool monotone = true;
        for (int k = 0; k < 12000; ++k) {
            const int idx = digitize_angle(60.0 * k / 12000.0, 60, delta).index;
            monotone &= idx >= prev;
            prev = idx;
            ++hits[static_cast<std::size_t>(idx)];
        }
        const bool onto = std::all_of(hits.begin(), hits.end(), [](int h) { return h > 0; });
        ok &= monotone && onto;
        detail += "; delta " + std::to_string(delta) + (monotone ? " monotone" : " NOT monotone") +
                  (onto ? " surjective" : " NOT surjective");
    }
    return {ok, detail};
}

// Metrics ---------------------------------------------------------------------

Outcome metric_closed_forms()
{
    std::mt19937_64 rng(1);
    auto x = random_tensor({1, 3, 16, 16}, rng, 0, 1);
    const double self = ssim(x, x).item();
    const double zero_one = ssim(Tensor<double>({1, 1, 12, 12}, 0.0), Tensor<double>({1, 1, 12, 12}, 1.0)).item();
    const double p = psnr(Tensor<double>({3, 32, 32}, 0.0), Tensor<double>({3, 32, 32}, 100.0 / 255.0));

    auto a = random_tensor({3, 32, 40}, rng, 0, 1);
    Tensor<double> b = a.detach();
    for (Index c = 0; c < 3; ++c)
        for (Index i = 0; i < 32; ++i)
            for (Index j = 0; j < 40; ++j)
                if (i < 8 || j < 8 || i >= 24 || j >= 32)
                    b.mutable_data()[(c * 32 + i) * 40 + j] = 1.0 - b.data()[(c * 32 + i) * 40 + j];
    const double border = psnr(a, b);

    // The distance pd_loss applies to feature channels.
    const double pd = sliced_wasserstein(Tensor<double>({1, 1, 1, 2}, {0.0, 2.0}),
                                         Tensor<double>({1, 1, 1, 2}, {1.0, 3.0}))
                          .item();

    const bool ok = std::abs(self - 1) <= kSsimTol && std::abs(zero_one - kSsimZeroOne) <= kSsimTol &&
                    std::abs(p - 8.131) <= kPsnrTol && border == kPsnrIdentical && pd == 1.0;
    return {ok, "ssim(x,x) " + fmt(self, 10) + ", ssim(0,1) " + fmt(zero_one, 6) + ", psnr " + fmt(p, 6) +
                    ", border-only corruption psnr " + fmt(border) + ", pd {0,2} vs {1,3} " + fmt(pd, 17)};
}

Outcome adversarial_closed_form()
{
    const Tensor<double> half({2, 1, 3, 4}, 0.0);  // logits of D = 0.5
    const double d = adv_losses(half, half).d.item();
    return {std::abs(d - std::log(2.0)) <= kAdvTol,
            "loss_D " + fmt(d, 10) + " vs log 2 = " + fmt(std::log(2.0), 10) + " (softplus on logits)"};
}

// Toy training ----------------------------------------------------------------

struct ToyRun {
    std::string dataset;
    Checkpoint full, no_msat;
    EvalReport full_eval, no_msat_eval;
    std::vector<SweepRow> sweep;
    double full_seconds = 0;
    int iterations = 0;
};

EvalReport evaluate_checkpoint(const Checkpoint& c, const Dataset& data)
{
    const auto model = make_predictor(c, data);
    return evaluate(*model, data, c.model().tau_deg, c.model().delta);
}

ToyRun toy_run(const std::string& config_path, const fs::path& work)
{
    ToyRun r;
    r.dataset = (work / "toy").string();
    EmitOptions opt;  // 64x48, step 5, tau 60, delta 12
    emit_dataset(build_scene(kSceneSeed, 2), standard_locations(4, 1), opt, r.dataset);
    const Dataset data(r.dataset);

    auto cfg = TrainConfig::read(config_path);
    cfg.dataset = r.dataset;
    cfg.out_dir = (work / "full").string();
    r.iterations = cfg.iterations;
    auto start = std::chrono::steady_clock::now();
    r.full = train(cfg, data, true).final;
    r.full_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    r.full_eval = evaluate_checkpoint(r.full, data);
    const auto model = make_predictor(r.full, data);
    r.sweep = sweep_tau(*model, data, {60, 90, 120}, r.full.model().delta);

    cfg.model.use_msat_multiscale = false;
    cfg.out_dir = (work / "no_msat").string();
    r.no_msat = train(cfg, data, true).final;
    r.no_msat_eval = evaluate_checkpoint(r.no_msat, data);
    return r;
}

Outcome toy_training(const ToyRun& r)
{
    const auto& e = r.full_eval;
    const double gain = e.mean_psnr - e.mean_baseline_psnr;
    const bool ok = r.iterations <= kMaxIterations && r.full_seconds <= kMaxTrainSeconds && gain >= kMinGainDb &&
                    e.fraction_better >= kMinFractionBetter;
    return {ok, std::to_string(r.iterations) + " iterations in " + fmt(r.full_seconds / 60, 3) + " min; " +
                    std::to_string(e.records.size()) + " held-out views, psnr " + fmt(e.mean_psnr) +
                    " vs blend " + fmt(e.mean_baseline_psnr) + " (+" + fmt(gain, 3) + " dB, need " +
                    fmt(kMinGainDb) + "), better at " + fmt(100 * e.fraction_better, 3) + "% (need " +
                    fmt(100 * kMinFractionBetter) + "%)"};
}

Outcome tau_sweep(const ToyRun& r)
{
    bool ok = r.sweep.size() == 3;
    std::string detail;
    for (std::size_t i = 0; i < r.sweep.size(); ++i) {
        detail += (i ? ", " : "") + fmt(r.sweep[i].tau_deg) + ": " + fmt(r.sweep[i].mean_psnr);
        if (i > 0)
            ok &= r.sweep[i].mean_psnr <= r.sweep[i - 1].mean_psnr;
    }
    ok = ok && r.sweep.front().mean_psnr > r.sweep.back().mean_psnr;
    return {ok, "mean psnr by tau " + detail};
}

Outcome ablation(const ToyRun& r)
{
    return {r.full_eval.mean_psnr >= r.no_msat_eval.mean_psnr,
            "full " + fmt(r.full_eval.mean_psnr) + " dB vs use_msat_multiscale=false " +
                fmt(r.no_msat_eval.mean_psnr) + " dB"};
}

// Determinism -----------------------------------------------------------------

std::vector<float> flat_params(Trainer& t)
{
    std::vector<float> out;
    auto add = [&](const NamedParams<float>& ps) {
        for (const auto& [name, p] : ps)
            out.insert(out.end(), p->data().begin(), p->data().end());
    };
    add(t.generator().parameters());
    add(t.d1().parameters());
    add(t.d2().parameters());
    return out;
}

Outcome checkpoint_and_render(const ToyRun* run, const std::string& config_path, const fs::path& work)
{
    // Round trip mid-run, including Adam moments, then keep training both copies.
    const std::string data_dir = run ? run->dataset : (work / "toy").string();
    if (!run) {
        EmitOptions opt;
        emit_dataset(build_scene(kSceneSeed, 2), standard_locations(4, 1), opt, data_dir);
    }
    auto data = std::make_shared<const Dataset>(data_dir);
    auto cfg = TrainConfig::read(config_path);
    cfg.dataset = data_dir;
    BatchSampler sampler(*data, cfg.model.tau_deg, cfg.model.delta, cfg.batch, cfg.seed);
    Trainer a(cfg);
    a.step(sampler.next());
    a.step(sampler.next());
    const auto path = (work / "roundtrip.s360").string();
    save_checkpoint(a.checkpoint(), path);
    const auto back = load_checkpoint(path);
    bool ok = back == a.checkpoint() && serialize(back) == serialize(a.checkpoint());
    Trainer b(cfg);
    b.restore(back);
    const auto next = sampler.next();
    a.step(next);
    b.step(next);
    const bool resumed = flat_params(a) == flat_params(b) && serialize(a.checkpoint()) == serialize(b.checkpoint());
    ok &= resumed;

    // /render over HTTP, twice, plus an independent service over the same weights.
    const Checkpoint weights = run ? run->full : a.checkpoint();
    const RenderService svc(weights, data);
    httplib::Server server;
    bind_routes(server, svc);
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread serving([&] { server.listen_after_bind(); });
    server.wait_until_ready();
    httplib::Client client("127.0.0.1", port);
    const auto r1 = client.Get("/render?loc=4&yaw=217.3");
    const auto r2 = client.Get("/render?loc=4&yaw=217.3");
    server.stop();
    serving.join();
    const RenderService other(deserialize(serialize(weights)), std::make_shared<const Dataset>(data_dir));
    const auto r3 = other.render({{"loc", "4"}, {"yaw", "217.3"}});
    const bool render_same = r1 && r2 && r1->status == 200 && r2->status == 200 && r1->body == r2->body &&
                             r3.status == 200 && r3.body == r1->body;
    ok &= render_same;
    return {ok, "checkpoint " + std::to_string(serialize(back).size()) + " bytes round-trips bit-exact" +
                    (resumed ? ", resumed step matches" : ", resumed step DIFFERS") + "; /render " +
                    (render_same ? "bytewise identical (" + std::to_string(r1->body.size()) + " byte PNG)"
                                 : "NOT identical")};
}

std::vector<char> slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

Outcome dataset_emission(const fs::path& work)
{
    const fs::path a = work / "emit_a", b = work / "emit_b";
    EmitOptions opt;
    const auto scene = build_scene(kSceneSeed, 2);
    emit_dataset(scene, standard_locations(4, 0), opt, a.string());
    emit_dataset(scene, standard_locations(4, 0), opt, b.string());
    int rgb = 0, seg = 0, differing = 0, files = 0;
    for (const auto& entry : fs::recursive_directory_iterator(a)) {
        if (!entry.is_regular_file())
            continue;
        const auto name = entry.path().filename().string();
        if (entry.path().extension() == ".png")
            ++(name.ends_with("_seg.png") ? seg : rgb);
        ++files;
        const auto twin = b / fs::relative(entry.path(), a);
        differing += !fs::exists(twin) || slurp(entry.path()) != slurp(twin);
    }
    int files_b = 0;
    for (const auto& entry : fs::recursive_directory_iterator(b))
        files_b += entry.is_regular_file();
    const bool ok = rgb == 288 && seg == 288 && differing == 0 && files == files_b;
    return {ok, std::to_string(rgb) + " rgb + " + std::to_string(seg) + " seg; re-emission: " +
                    std::to_string(differing) + " of " + std::to_string(files) + " files differ"};
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app("Acceptance checks");
    std::string config = SEE360_TOY_CONFIG;
    std::string work_dir;
    bool skip_training = false;
    app.add_option("--config", config, "Toy training config")->check(CLI::ExistingFile);
    app.add_option("--work-dir", work_dir, "Keep datasets and runs here instead of a temporary directory");
    app.add_flag("--skip-training", skip_training, "Report the training criteria as failed without running them");
    CLI11_PARSE(app, argc, argv);

    std::optional<see360::test::TempDir> temp;
    fs::path work;
    if (work_dir.empty()) {
        temp.emplace("acceptance");
        work = temp->path();
    } else {
        work = work_dir;
        fs::remove_all(work);
        fs::create_directories(work);
    }

    report("gradient suite", gradient_suite);
    report("warp oracles", warp_oracles);
    report("cross-patch correlation vs brute force", cpc_oracle_check);
    report("angle coding", angle_coding);
    report("metric closed forms", metric_closed_forms);
    report("adversarial closed form", adversarial_closed_form);

    std::optional<ToyRun> run;
    std::string run_error = "skipped (--skip-training)";
    if (!skip_training) {
        try {
            run = toy_run(config, work);
        } catch (const std::exception& e) {
            run_error = std::string("training threw: ") + e.what();
        }
    }
    auto needs_run = [&](Outcome (*check)(const ToyRun&)) {
        return [&, check] { return run ? check(*run) : Outcome{false, run_error}; };
    };
    report("toy training beats the blend baseline", needs_run(toy_training));
    report("tau sweep trend", needs_run(tau_sweep));
    report("ablation trend (multi-scale transforms)", needs_run(ablation));
    report("checkpoint round trip and render determinism",
           [&] { return checkpoint_and_render(run ? &*run : nullptr, config, work); });
    report("dataset emission", [&] { return dataset_emission(work); });

    std::cout << (failures ? std::to_string(failures) + " criteria failed" : "all criteria passed") << std::endl;
    return failures ? 1 : 0;
}
