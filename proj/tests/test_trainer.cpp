#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "see360/trainer.hpp"
#include "support.hpp"

using namespace see360;
using see360::test::random_tensor;
using see360::test::TempDir;
namespace fs = std::filesystem;

namespace {

/// 32x32 views every 10 degrees at two training locations and the centre.
const Dataset& small_dataset()
{
    static TempDir dir("trainer_data");
    static const Dataset data = [] {
        EmitOptions opt;
        opt.width = 32;
        opt.height = 32;
        opt.step_deg = 10;
        opt.delta = 4;
        emit_dataset(build_scene(21, 1), standard_locations(2, 1), opt, dir.str());
        return Dataset(dir.str());
    }();
    return data;
}

TrainConfig tiny_train(const std::string& out_dir)
{
    TrainConfig t;
    t.out_dir = out_dir;
    auto& c = t.model;
    c.image_width = 32;
    c.image_height = 32;
    c.enc_c1 = 4;
    c.enc_c2 = 8;
    c.enc_c3 = 8;
    c.decoder_width = 8;
    c.latent_width = 8;
    c.patch = 1;
    c.delta = 4;
    c.disc_width = 4;
    t.batch = 2;
    t.lr = 2e-3;
    t.iterations = 200;
    t.checkpoint_every = 100;
    return t;
}

template <typename M>
std::vector<float> flat(M& model)
{
    std::vector<float> out;
    for (const auto& [name, p] : model.parameters())
        out.insert(out.end(), p->data().begin(), p->data().end());
    return out;
}

double mean_of(const std::vector<StepStats>& c, std::size_t from, std::size_t to)
{
    double s = 0;
    for (std::size_t i = from; i < to; ++i)
        s += c[i].l1;
    return s / static_cast<double>(to - from);
}

}  // namespace

TEST_CASE("sampler draws targets strictly between references")
{
    const auto& data = small_dataset();
    BatchSampler s(data, 60, 4, 3, 5);
    CHECK(s.offsets() == std::vector<int>{10, 20, 30, 40, 50});
    CHECK(s.left_yaws() == std::vector<int>{0, 60, 120, 180, 240, 300});
    for (int i = 0; i < 20; ++i) {
        const auto b = s.next();
        REQUIRE(b.theta.size() == 3);
        CHECK(b.left.shape() == Shape{3, 3, 32, 32});
        CHECK(b.onehot.shape() == Shape{3, 4});
        for (std::size_t k = 0; k < 3; ++k) {
            CHECK(b.theta[k] > 0);
            CHECK(b.theta[k] < 60);
            CHECK(b.left_yaw[k] % 60 == 0);
            CHECK(b.location[k] < 2);  // never the held-out centre
        }
    }
    CHECK_THROWS_AS(BatchSampler(data, 45, 4, 1, 1), DatasetError);
    CHECK_THROWS_AS(BatchSampler(data, 10, 4, 1, 1), DatasetError);
    CHECK_THROWS_AS(BatchSampler(data, 50, 4, 1, 1), DatasetError);
}

TEST_CASE("batches pair the right images with the right codes")
{
    const auto& data = small_dataset();
    const auto b = make_batch(data, 60, 12, {1}, {300}, {30});
    CHECK(b.onehot.data()[6] == 1.0f);
    CHECK(b.onehot.data().sum() == 1.0f);
    const Index n = 3 * 32 * 32;
    CHECK((b.left.data() == data.view(1, 300).rgb.data()).all());
    CHECK((b.right.data() == data.view(1, 0).rgb.data()).all());  // wraps past 360
    CHECK((b.gt.data() == data.view(1, 330).rgb.data()).all());
    CHECK((b.gt_seg.data() == data.view(1, 330).seg.data()).all());
    CHECK(b.left.size() == n);
}

TEST_CASE("sampling and training are deterministic")
{
    const auto& data = small_dataset();
    BatchSampler a(data, 60, 4, 2, 9), b(data, 60, 4, 2, 9), c(data, 60, 4, 2, 10);
    bool differs = false;
    for (int i = 0; i < 5; ++i) {
        const auto x = a.next(), y = b.next(), z = c.next();
        CHECK(x.theta == y.theta);
        CHECK(x.location == y.location);
        CHECK((x.gt.data() == y.gt.data()).all());
        differs |= x.theta != z.theta || x.left_yaw != z.left_yaw;
    }
    CHECK(differs);

    TempDir out("det");
    Trainer t1(tiny_train(out.str())), t2(tiny_train(out.str()));
    BatchSampler s(data, 60, 4, 2, 3);
    for (int i = 0; i < 3; ++i) {
        const auto batch = s.next();
        const auto r1 = t1.step(batch), r2 = t2.step(batch);
        CHECK(r1.loss_g == r2.loss_g);
        CHECK(r1.loss_d == r2.loss_d);
    }
    CHECK(flat(t1.generator()) == flat(t2.generator()));
}

TEST_CASE("discriminator and generator updates touch only their own weights")
{
    const auto& data = small_dataset();
    TempDir out("iso");
    Trainer t(tiny_train(out.str()));
    BatchSampler s(data, 60, 4, 2, 4);
    const auto batch = s.next();

    const auto g0 = flat(t.generator()), d10 = flat(t.d1()), d20 = flat(t.d2());
    Tensor<float> fake;
    {
        NoGradGuard ng;
        fake = t.generator().generate(batch.left, batch.right, batch.onehot);
    }
    t.d_step(batch, fake);
    CHECK(flat(t.generator()) == g0);
    CHECK(flat(t.d1()) != d10);
    CHECK(flat(t.d2()) != d20);

    const auto d11 = flat(t.d1()), d21 = flat(t.d2());
    t.g_step(batch);
    CHECK(flat(t.generator()) != g0);
    CHECK(flat(t.d1()) == d11);
    CHECK(flat(t.d2()) == d21);
    for (auto* d : {&t.d1(), &t.d2()})
        for (const auto& [name, p] : d->parameters())
            CHECK(p->requires_grad());
}

TEST_CASE("non-finite losses are reported")
{
    const auto& data = small_dataset();
    TempDir out("nan");
    Trainer t(tiny_train(out.str()));
    BatchSampler s(data, 60, 4, 2, 4);
    auto batch = s.next();
    batch.gt.mutable_data()[5] = std::numeric_limits<float>::quiet_NaN();
    CHECK_THROWS_AS(t.step(batch), NonFiniteLoss);
}

TEST_CASE("a short run lowers the reconstruction error and writes its artifacts")
{
    const auto& data = small_dataset();
    TempDir out("smoke");
    const auto result = train(tiny_train(out.str()), data, true);
    REQUIRE(result.curve.size() == 200);
    for (const auto& s : result.curve) {
        CHECK(std::isfinite(s.loss_g));
        CHECK(std::isfinite(s.loss_d));
    }
    const double early = mean_of(result.curve, 0, 20), late = mean_of(result.curve, 180, 200);
    CAPTURE(early);
    CAPTURE(late);
    CHECK(late < 0.8 * early);

    CHECK(fs::exists(out.path() / "model.s360"));
    CHECK(fs::exists(out.path() / "checkpoint_000100.s360"));
    CHECK_FALSE(fs::exists(out.path() / "checkpoint_000200.s360"));
    std::ifstream csv(out.path() / "loss.csv");
    std::string header;
    std::getline(csv, header);
    CHECK(header == "iteration,loss_d,loss_g,adv,ssim,pd,feat,lap,l1");
    int rows = 0;
    for (std::string line; std::getline(csv, line);)
        ++rows;
    CHECK(rows == 200);

    const auto ck = load_checkpoint((out.path() / "model.s360").string());
    CHECK(ck.iteration == 200);
    CHECK(ck == result.final);
}

TEST_CASE("config files")
{
    TempDir dir("conf");
    {
        std::ofstream f(dir.str("a.conf"));
        f << "# comment\ntrain.dataset = data/x\ntrain.lr = 3e-4\ntrain.use_pd = false\n"
             "train.adv_convention = saturating\nmodel.delta = 13\nmodel.use_cpc = false\n";
    }
    const auto c = TrainConfig::read(dir.str("a.conf"));
    CHECK(fs::path(c.dataset) == dir.path() / "data/x");
    CHECK(c.lr == doctest::Approx(3e-4));
    CHECK_FALSE(c.use_pd);
    CHECK(c.effective_weights().pd == 0);
    CHECK(c.effective_weights().feat == 10);
    CHECK(c.adv == AdvConvention::Saturating);
    CHECK(c.model.delta == 13);
    CHECK_FALSE(c.model.use_cpc);

    const auto again = TrainConfig::from_key_values(c.to_key_values());
    CHECK(again.to_key_values() == c.to_key_values());

    {
        std::ofstream f(dir.str("b.conf"));
        f << "train.learning_rate = 1\n";
    }
    CHECK_THROWS_AS(TrainConfig::read(dir.str("b.conf")), ConfigError);
    {
        std::ofstream f(dir.str("c.conf"));
        f << "train.batch = four\n";
    }
    CHECK_THROWS_AS(TrainConfig::read(dir.str("c.conf")), ConfigError);
}

TEST_CASE("ablation variants train and reload")
{
    const auto& data = small_dataset();
    for (int variant = 0; variant < 3; ++variant) {
        CAPTURE(variant);
        TempDir out("abl");
        auto cfg = tiny_train(out.str());
        cfg.iterations = 3;
        cfg.model.use_cpc = variant != 0;
        cfg.model.use_msat_multiscale = variant != 1;
        cfg.model.use_seg_condition = variant != 2;
        const auto r = train(cfg, data, true);
        const auto ck = load_checkpoint((out.path() / "model.s360").string());
        CHECK(ck.model().use_cpc == cfg.model.use_cpc);
        CHECK(ck.model().use_msat_multiscale == cfg.model.use_msat_multiscale);
        const auto model = make_predictor(ck, data);
        const auto report = evaluate(*model, data, 60, 4);
        CHECK(report.records.size() == 30);
        Trainer again(cfg);
        CHECK_NOTHROW(again.restore(ck));
    }
}

TEST_CASE("evaluation covers every intermediate view")
{
    const auto& data = small_dataset();
    BlendPredictor blend;
    const auto r = evaluate(blend, data, 60, 4);
    // 6 reference pairs with 5 targets each at the single eval location.
    REQUIRE(r.records.size() == 30);
    for (const auto& rec : r.records) {
        CHECK(rec.location == 2);
        CHECK(rec.theta % 10 == 0);
        CHECK(rec.theta > 0);
        CHECK(rec.theta < 60);
        CHECK(std::isfinite(rec.psnr));
        CHECK(rec.psnr == doctest::Approx(rec.baseline_psnr));
        CHECK(rec.angle_index == digitize_angle(rec.theta, 60, 4).index);
    }
    CHECK(r.fraction_better == 0);
    const std::string csv = r.to_csv();
    CHECK(csv.substr(0, csv.find('\n')) == "location,left_yaw,theta,angle_index,psnr,ssim,baseline_psnr,baseline_ssim");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 31);

    const auto r120 = evaluate(blend, data, 120, 4);
    CHECK(r120.records.size() == 3 * 11);
    CHECK_THROWS_AS(evaluate(blend, data, 60, 4, "nowhere"), DatasetError);
}

TEST_CASE("ground-truth oracle scores perfectly")
{
    const auto& data = small_dataset();
    const auto ck = oracle_checkpoint(data.manifest());
    CHECK(ck.model().kind == ModelKind::GroundTruthOracle);
    const auto oracle = make_predictor(deserialize(serialize(ck)), data);
    const auto r = evaluate(*oracle, data, 60, 4);
    for (const auto& rec : r.records) {
        CHECK(rec.psnr == kPsnrIdentical);
        CHECK(rec.ssim == doctest::Approx(1.0).epsilon(1e-9));
    }
    CHECK(r.fraction_better == 1.0);
    CHECK(r.to_json().find("inf") != std::string::npos);
}

TEST_CASE("tau sweep agrees with single evaluations")
{
    const auto& data = small_dataset();
    TempDir out("sweep");
    auto cfg = tiny_train(out.str());
    cfg.iterations = 2;
    train(cfg, data, true);
    const auto model = make_predictor(load_checkpoint((out.path() / "model.s360").string()), data);
    const auto rows = sweep_tau(*model, data, {60, 90, 120}, 4);
    REQUIRE(rows.size() == 3);
    for (const auto& row : rows) {
        const auto single = evaluate(*model, data, row.tau_deg, 4);
        CHECK(row.mean_psnr == doctest::Approx(single.mean_psnr).epsilon(1e-12));
        CHECK(row.mean_baseline_psnr == doctest::Approx(single.mean_baseline_psnr).epsilon(1e-12));
        CHECK(row.count == single.records.size());
    }
    CHECK(rows[1].count == 4 * 8);
    CHECK(sweep_csv(rows).rfind("tau,mean_psnr,mean_ssim,mean_baseline_psnr,count\n", 0) == 0);
    CHECK_THROWS_AS(sweep_tau(*model, data, {45}, 4), DatasetError);
}

TEST_CASE("mismatched checkpoints are refused")
{
    const auto& data = small_dataset();
    auto ck = oracle_checkpoint(data.manifest());
    ck.config["model.image_width"] = "64";
    CHECK_THROWS_AS(make_predictor(ck, data), ConfigConflict);

    TempDir out("mismatch");
    auto cfg = tiny_train(out.str());
    cfg.iterations = 1;
    train(cfg, data, true);
    auto trained = load_checkpoint((out.path() / "model.s360").string());
    trained.put("G.extra.weight", Tensor<float>({1}, 0.0f));
    CHECK_THROWS_AS(make_predictor(trained, data), UnknownTensorError);

    cfg.model.image_width = 64;
    CHECK_THROWS_AS(train(cfg, data, true), ConfigConflict);
}
