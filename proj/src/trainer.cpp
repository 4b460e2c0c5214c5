#include "see360/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "see360/image_io.hpp"

namespace see360 {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt(double v)
{
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    std::ostringstream os;
    os.precision(10);
    os << v;
    return os.str();
}

json number_or_inf(double v)
{
    if (std::isfinite(v))
        return v;
    return fmt(v);
}

int whole_degrees(double deg, const char* what)
{
    const double r = std::round(deg);
    if (std::abs(deg - r) > 1e-9 || r <= 0)
        throw std::invalid_argument(std::string(what) + " must be a positive whole number of degrees");
    return static_cast<int>(r);
}

/// tau must be a multiple of the capture step and divide the full turn.
int check_tau(const DatasetManifest& m, double tau_deg)
{
    const int tau = whole_degrees(tau_deg, "tau");
    if (tau % m.step_deg)
        throw DatasetError("tau " + std::to_string(tau) + " is not a multiple of the dataset step " +
                           std::to_string(m.step_deg));
    if (360 % tau)
        throw DatasetError("tau " + std::to_string(tau) + " does not divide 360");
    if (tau == m.step_deg)
        throw DatasetError("tau equals the capture step, leaving no intermediate views");
    return tau;
}

template <typename F>
Tensor<float> stack(std::size_t n, Shape item, F&& get)
{
    Index per = numel(item);
    Buffer<float> v(static_cast<Index>(n) * per);
    for (std::size_t i = 0; i < n; ++i) {
        const Tensor<float>& t = get(i);
        if (t.shape() != item)
            throw ShapeError("stack: item " + std::to_string(i) + " has shape " + to_string(t.shape()));
        v.segment(static_cast<Index>(i) * per, per) = t.data();
    }
    Shape s{static_cast<Index>(n)};
    s.insert(s.end(), item.begin(), item.end());
    return Tensor<float>(std::move(s), std::move(v));
}

Tensor<float> sample_of(const Tensor<float>& nchw, Index i)
{
    const Index per = nchw.size() / nchw.dim(0);
    return Tensor<float>({nchw.dim(1), nchw.dim(2), nchw.dim(3)}, Buffer<float>(nchw.data().segment(i * per, per)));
}

void require_finite(double v, const char* what)
{
    if (!std::isfinite(v))
        throw NonFiniteLoss(std::string(what) + " became non-finite");
}

void dump_batch(const Batch& b, const std::string& dir, std::int64_t iteration, const std::string& reason)
{
    fs::create_directories(dir);
    NoGradGuard no_grad;
    json meta{{"iteration", iteration}, {"reason", reason}, {"location", b.location},
              {"left_yaw", b.left_yaw}, {"theta", b.theta}};
    std::ofstream(fs::path(dir) / "batch.json") << meta.dump(2) << "\n";
    for (Index i = 0; i < b.left.dim(0); ++i) {
        const std::string k = std::to_string(i);
        write_png((fs::path(dir) / ("left_" + k + ".png")).string(), to_image(sample_of(b.left, i)));
        write_png((fs::path(dir) / ("right_" + k + ".png")).string(), to_image(sample_of(b.right, i)));
        write_png((fs::path(dir) / ("gt_" + k + ".png")).string(), to_image(sample_of(b.gt, i)));
    }
}

}  // namespace

LossWeights TrainConfig::effective_weights() const
{
    LossWeights w = weights;
    if (!use_lap)
        w.lap = 0;
    if (!use_pd)
        w.pd = 0;
    if (!use_feat)
        w.feat = 0;
    return w;
}

void TrainConfig::validate() const
{
    model.validate();
    weights.validate();
    if (batch < 1 || iterations < 0 || checkpoint_every < 0 || log_every < 1)
        throw ConfigError("batch, iterations, checkpoint cadence or log cadence out of range");
    if (!(lr > 0) || !(beta1 > 0 && beta1 < 1) || !(beta2 > 0 && beta2 < 1))
        throw ConfigError("learning rate must be positive and Adam betas in (0, 1)");
    if (!std::isfinite(adv_weight) || adv_weight < 0)
        throw ConfigError("adversarial weight must be finite and non-negative");
    if (model.kind != ModelKind::See360)
        throw ConfigError("only the see360 model kind can be trained");
}

KeyValues TrainConfig::to_key_values() const
{
    KeyValues kv;
    model.write(kv);
    auto num = [](double v) {
        std::ostringstream os;
        os.precision(17);
        os << v;
        return os.str();
    };
    auto flag = [](bool b) { return std::string(b ? "true" : "false"); };
    kv["train.dataset"] = dataset;
    kv["train.out_dir"] = out_dir;
    kv["train.batch"] = std::to_string(batch);
    kv["train.lr"] = num(lr);
    kv["train.beta1"] = num(beta1);
    kv["train.beta2"] = num(beta2);
    kv["train.iterations"] = std::to_string(iterations);
    kv["train.seed"] = std::to_string(seed);
    kv["train.feature_seed"] = std::to_string(feature_seed);
    kv["train.lambda_ssim"] = num(weights.ssim);
    kv["train.lambda_pd"] = num(weights.pd);
    kv["train.lambda_feat"] = num(weights.feat);
    kv["train.lambda_lap"] = num(weights.lap);
    kv["train.use_lap"] = flag(use_lap);
    kv["train.use_pd"] = flag(use_pd);
    kv["train.use_feat"] = flag(use_feat);
    kv["train.adv_weight"] = num(adv_weight);
    kv["train.adv_convention"] = adv == AdvConvention::NonSaturating ? "non_saturating" : "saturating";
    kv["train.checkpoint_every"] = std::to_string(checkpoint_every);
    kv["train.log_every"] = std::to_string(log_every);
    return kv;
}

TrainConfig TrainConfig::from_key_values(KeyValues kv)
{
    TrainConfig c;
    c.model = ModelConfig::read(kv);
    take(kv, "train.dataset", c.dataset);
    take(kv, "train.out_dir", c.out_dir);
    take(kv, "train.batch", c.batch);
    take(kv, "train.lr", c.lr);
    take(kv, "train.beta1", c.beta1);
    take(kv, "train.beta2", c.beta2);
    take(kv, "train.iterations", c.iterations);
    take(kv, "train.seed", c.seed);
    take(kv, "train.feature_seed", c.feature_seed);
    take(kv, "train.lambda_ssim", c.weights.ssim);
    take(kv, "train.lambda_pd", c.weights.pd);
    take(kv, "train.lambda_feat", c.weights.feat);
    take(kv, "train.lambda_lap", c.weights.lap);
    take(kv, "train.use_lap", c.use_lap);
    take(kv, "train.use_pd", c.use_pd);
    take(kv, "train.use_feat", c.use_feat);
    take(kv, "train.adv_weight", c.adv_weight);
    std::string adv = "non_saturating";
    take(kv, "train.adv_convention", adv);
    if (adv == "non_saturating")
        c.adv = AdvConvention::NonSaturating;
    else if (adv == "saturating")
        c.adv = AdvConvention::Saturating;
    else
        throw ConfigError("unknown train.adv_convention '" + adv + "'");
    take(kv, "train.checkpoint_every", c.checkpoint_every);
    take(kv, "train.log_every", c.log_every);
    if (!kv.empty())
        throw ConfigError("unknown config key '" + kv.begin()->first + "'");
    c.validate();
    return c;
}

TrainConfig TrainConfig::read(const std::string& path)
{
    auto c = from_key_values(read_key_values(path));
    // A relative dataset path is taken relative to the config file.
    if (!c.dataset.empty() && fs::path(c.dataset).is_relative())
        c.dataset = (fs::path(path).parent_path() / c.dataset).lexically_normal().string();
    return c;
}

BatchSampler::BatchSampler(const Dataset& data, double tau_deg, int delta, int batch, std::uint64_t seed,
                           std::string split)
    : data_(data), tau_(tau_deg), delta_(delta), batch_(batch), rng_(seed)
{
    const auto& m = data.manifest();
    const int tau = check_tau(m, tau_deg);
    if (batch < 1)
        throw std::invalid_argument("batch size must be positive");
    locations_ = m.location_ids(split);
    if (locations_.empty())
        throw DatasetError("dataset has no '" + split + "' locations");
    for (int y = 0; y < 360; y += tau)
        left_yaws_.push_back(y);
    for (int o = m.step_deg; o < tau; o += m.step_deg)
        offsets_.push_back(o);
}

Batch BatchSampler::next()
{
    std::vector<int> loc, left, theta;
    for (int i = 0; i < batch_; ++i) {
        auto pick = [&](const std::vector<int>& v) {
            return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng_)];
        };
        loc.push_back(pick(locations_));
        left.push_back(pick(left_yaws_));
        theta.push_back(pick(offsets_));
    }
    return make_batch(data_, tau_, delta_, loc, left, theta);
}

Batch make_batch(const Dataset& data, double tau_deg, int delta, const std::vector<int>& location,
                 const std::vector<int>& left_yaw, const std::vector<int>& theta)
{
    const auto& m = data.manifest();
    const int tau = check_tau(m, tau_deg);
    const std::size_t n = location.size();
    if (n == 0 || left_yaw.size() != n || theta.size() != n)
        throw std::invalid_argument("make_batch: triplet lists must be non-empty and equally long");
    const Shape rgb{3, m.height, m.width}, seg{1, m.height, m.width};
    std::vector<AngleCode> codes;
    for (std::size_t i = 0; i < n; ++i)
        codes.push_back(digitize_angle(theta[i], tau_deg, delta));
    auto view = [&](std::size_t i, int offset) -> const View& {
        return data.view(location[i], ((left_yaw[i] + offset) % 360 + 360) % 360);
    };
    Batch b;
    b.left = stack(n, rgb, [&](std::size_t i) -> const Tensor<float>& { return view(i, 0).rgb; });
    b.right = stack(n, rgb, [&](std::size_t i) -> const Tensor<float>& { return view(i, tau).rgb; });
    b.gt = stack(n, rgb, [&](std::size_t i) -> const Tensor<float>& { return view(i, theta[i]).rgb; });
    b.gt_seg = stack(n, seg, [&](std::size_t i) -> const Tensor<float>& { return view(i, theta[i]).seg; });
    b.onehot = onehot_batch<float>(codes);
    b.location = location;
    b.left_yaw = left_yaw;
    b.theta = theta;
    return b;
}

Trainer::Trainer(TrainConfig config)
    : config_(std::move(config)), phi_(config_.feature_seed)
{
    config_.validate();
    g_ = std::make_unique<Generator<float>>(Generator<float>::make(config_.model));
    d1_ = std::make_unique<Discriminator<float>>(Discriminator<float>::make(config_.model, 1, config_.model.init_seed + 101));
    d2_ = std::make_unique<Discriminator<float>>(Discriminator<float>::make(config_.model, 2, config_.model.init_seed + 202));
    opt_g_ = std::make_unique<Adam<float>>(g_->parameters(), config_.lr, config_.beta1, config_.beta2);
    auto dp = d1_->parameters();
    for (auto& p : d2_->parameters())
        dp.push_back(p);
    opt_d_ = std::make_unique<Adam<float>>(std::move(dp), config_.lr, config_.beta1, config_.beta2);
}

double Trainer::d_step(const Batch& b, const Tensor<float>& fake)
{
    d1_->set_trainable(true);
    d2_->set_trainable(true);
    opt_d_->zero_grad();
    const auto fd = fake.detach();
    Tensor<float> loss;
    for (auto* d : {d1_.get(), d2_.get()}) {
        auto real = (*d)(b.gt, b.left, b.right, b.gt_seg).score;
        auto gen = (*d)(fd, b.left, b.right, b.gt_seg).score;
        auto l = adv_loss_d(real, gen);
        loss = d == d1_.get() ? l : (loss + l) * 0.5f;
    }
    const double value = loss.item();
    require_finite(value, "discriminator loss");
    backward(loss);
    opt_d_->step();
    return value;
}

StepStats Trainer::g_step(const Batch& b)
{
    return g_update(b, g_->generate(b.left, b.right, b.onehot));
}

StepStats Trainer::g_update(const Batch& b, const Tensor<float>& fake)
{
    StepStats s;
    s.iteration = iteration_;
    const LossWeights w = config_.effective_weights();
    d1_->set_trainable(false);
    d2_->set_trainable(false);
    opt_g_->zero_grad();

    GeneratorLossParts<float> parts{Tensor<float>::scalar(0), Tensor<float>::scalar(1), Tensor<float>::scalar(0),
                                    Tensor<float>::scalar(0), Tensor<float>::scalar(0)};
    const bool need_d = config_.adv_weight > 0 || w.feat > 0;
    if (need_d) {
        std::vector<Tensor<float>> real_feats, fake_feats;
        Tensor<float> adv;
        for (auto* d : {d1_.get(), d2_.get()}) {
            auto out = (*d)(fake, b.left, b.right, b.gt_seg);
            const auto l = adv_loss_g(out.score, config_.adv);
            adv = d == d1_.get() ? l : (adv + l) * 0.5f;
            if (w.feat > 0) {
                NoGradGuard no_grad;
                auto real = (*d)(b.gt, b.left, b.right, b.gt_seg);
                real_feats.insert(real_feats.end(), real.features.begin(), real.features.end());
            }
            fake_feats.insert(fake_feats.end(), out.features.begin(), out.features.end());
        }
        if (config_.adv_weight > 0)
            parts.adv = adv * static_cast<float>(config_.adv_weight);
        if (w.feat > 0)
            parts.feat = feat_match_loss(real_feats, fake_feats);
        s.adv = adv.item();
    }
    if (w.ssim > 0)
        parts.ssim = ssim(fake, b.gt);
    if (w.pd > 0)
        parts.pd = pd_loss(fake, b.gt, phi_);
    if (w.lap > 0)
        parts.lap = laplacian_loss(fake, b.gt);
    const auto total = total_generator_loss(parts, w);
    s.ssim = parts.ssim.item();
    s.pd = parts.pd.item();
    s.feat = parts.feat.item();
    s.lap = parts.lap.item();
    s.loss_g = total.item();
    {
        NoGradGuard no_grad;
        s.l1 = mean(abs(fake - b.gt)).item();
    }
    require_finite(s.loss_g, "generator loss");
    if (total.requires_grad()) {
        backward(total);
        opt_g_->step();
    }
    d1_->set_trainable(true);
    d2_->set_trainable(true);
    return s;
}

StepStats Trainer::step(const Batch& b)
{
    ++iteration_;
    // The D update leaves G untouched, so one generator pass serves both halves.
    const auto fake = g_->generate(b.left, b.right, b.onehot);
    const double ld = d_step(b, fake);
    StepStats s = g_update(b, fake);
    s.loss_d = ld;
    return s;
}

Checkpoint Trainer::checkpoint() const
{
    Checkpoint c;
    c.config = config_.to_key_values();
    c.iteration = static_cast<std::uint64_t>(iteration_);
    store_params(c, g_->parameters(), opt_g_.get());
    auto dp = d1_->parameters();
    for (auto& p : d2_->parameters())
        dp.push_back(p);
    store_params(c, dp, opt_d_.get());
    return c;
}

void Trainer::restore(const Checkpoint& c)
{
    require_image_size(c, config_.model.image_width, config_.model.image_height);
    if (c.model().kind != ModelKind::See360)
        throw ConfigConflict("checkpoint does not hold trainable weights");
    std::vector<std::string> claimed;
    auto claim = [&](const NamedParams<float>& ps) {
        for (const auto& [name, t] : ps) {
            claimed.push_back(name);
            for (const char* suffix : {".m", ".v", ".t"})
                claimed.push_back("adam." + name + suffix);
        }
    };
    claim(opt_g_->params());
    claim(opt_d_->params());
    if (const auto extra = unclaimed_records(c, claimed); !extra.empty())
        throw UnknownTensorError("checkpoint tensor '" + extra.front() + "' does not belong to this model");
    restore_params(c, g_->parameters(), opt_g_.get());
    auto dp = d1_->parameters();
    for (auto& p : d2_->parameters())
        dp.push_back(p);
    restore_params(c, dp, opt_d_.get());
    iteration_ = static_cast<std::int64_t>(c.iteration);
}

std::string loss_csv_header()
{
    return "iteration,loss_d,loss_g,adv,ssim,pd,feat,lap,l1";
}

std::string loss_csv_row(const StepStats& s)
{
    return std::to_string(s.iteration) + "," + fmt(s.loss_d) + "," + fmt(s.loss_g) + "," + fmt(s.adv) + "," +
           fmt(s.ssim) + "," + fmt(s.pd) + "," + fmt(s.feat) + "," + fmt(s.lap) + "," + fmt(s.l1);
}

TrainResult train(const TrainConfig& config, const Dataset& data, bool quiet)
{
    config.validate();
    const auto& m = data.manifest();
    check_tau(m, config.model.tau_deg);
    if (m.width != config.model.image_width || m.height != config.model.image_height)
        throw ConfigConflict("dataset images are " + std::to_string(m.width) + "x" + std::to_string(m.height) +
                             " but the model expects " + std::to_string(config.model.image_width) + "x" +
                             std::to_string(config.model.image_height));
    fs::create_directories(config.out_dir);
    Trainer trainer(config);
    BatchSampler sampler(data, config.model.tau_deg, config.model.delta, config.batch, config.seed);
    std::ofstream csv(fs::path(config.out_dir) / "loss.csv");
    csv << loss_csv_header() << "\n";

    TrainResult result;
    for (int it = 1; it <= config.iterations; ++it) {
        const Batch b = sampler.next();
        StepStats s;
        try {
            s = trainer.step(b);
        } catch (const NonFiniteLoss& e) {
            const auto dir = (fs::path(config.out_dir) / ("nonfinite_iter" + std::to_string(it))).string();
            dump_batch(b, dir, it, e.what());
            throw NonFiniteLoss(std::string(e.what()) + " at iteration " + std::to_string(it) +
                                "; batch dumped to " + dir);
        }
        result.curve.push_back(s);
        if (it % config.log_every == 0)
            csv << loss_csv_row(s) << "\n" << std::flush;
        if (!quiet && (it % 50 == 0 || it == 1))
            std::cerr << "iter " << it << "  loss_d " << s.loss_d << "  loss_g " << s.loss_g << "  l1 " << s.l1
                      << "\n";
        if (config.checkpoint_every > 0 && it % config.checkpoint_every == 0 && it != config.iterations) {
            char name[64];
            std::snprintf(name, sizeof name, "checkpoint_%06d.s360", it);
            save_checkpoint(trainer.checkpoint(), (fs::path(config.out_dir) / name).string());
        }
    }
    result.final = trainer.checkpoint();
    save_checkpoint(result.final, (fs::path(config.out_dir) / "model.s360").string());
    return result;
}

TrainResult train(const TrainConfig& config)
{
    if (config.dataset.empty())
        throw ConfigError("train.dataset is not set");
    Dataset data(config.dataset);
    return train(config, data);
}

Tensor<float> GeneratorPredictor::predict(int, int, int, int, const AngleCode& code, const Tensor<float>& left,
                                          const Tensor<float>& right) const
{
    NoGradGuard no_grad;
    const Shape one{1, left.dim(0), left.dim(1), left.dim(2)};
    const std::vector<AngleCode> codes{code};
    const auto out = g_.generate(reshape(left, one), reshape(right, one), onehot_batch<float>(codes));
    return reshape(out, left.shape());
}

Tensor<float> BlendPredictor::predict(int, int, int, int, const AngleCode&, const Tensor<float>& left,
                                      const Tensor<float>& right) const
{
    NoGradGuard no_grad;
    return (left + right) * 0.5f;
}

Tensor<float> GroundTruthPredictor::predict(int location, int, int, int target_yaw, const AngleCode&,
                                            const Tensor<float>&, const Tensor<float>&) const
{
    return data_.view(location, target_yaw).rgb;
}

std::unique_ptr<ViewPredictor> make_predictor(const Checkpoint& c, const Dataset& data)
{
    require_image_size(c, data.manifest().width, data.manifest().height);
    const ModelConfig mc = c.model();
    if (mc.kind == ModelKind::GroundTruthOracle)
        return std::make_unique<GroundTruthPredictor>(data);
    auto g = Generator<float>::make(mc);
    auto params = g.parameters();
    std::vector<std::string> claimed;
    for (const auto& [name, t] : params)
        claimed.push_back(name);
    for (const auto& name : unclaimed_records(c, claimed))
        if (name.rfind("G.", 0) == 0)
            throw UnknownTensorError("checkpoint tensor '" + name + "' does not belong to the generator");
    restore_params<float>(c, params);
    for (auto& [name, t] : params)
        t->set_requires_grad(false);
    return std::make_unique<GeneratorPredictor>(std::move(g));
}

Checkpoint oracle_checkpoint(const DatasetManifest& m)
{
    ModelConfig mc;
    mc.kind = ModelKind::GroundTruthOracle;
    mc.image_width = m.width;
    mc.image_height = m.height;
    mc.tau_deg = m.tau_deg;
    mc.delta = m.delta;
    Checkpoint c;
    mc.write(c.config);
    return c;
}

std::string EvalReport::to_csv() const
{
    std::string out = "location,left_yaw,theta,angle_index,psnr,ssim,baseline_psnr,baseline_ssim\n";
    for (const auto& r : records)
        out += std::to_string(r.location) + "," + std::to_string(r.left_yaw) + "," + std::to_string(r.theta) + "," +
               std::to_string(r.angle_index) + "," + fmt(r.psnr) + "," + fmt(r.ssim) + "," + fmt(r.baseline_psnr) +
               "," + fmt(r.baseline_ssim) + "\n";
    return out;
}

std::string EvalReport::to_json() const
{
    json j;
    j["tau_deg"] = tau_deg;
    j["mean_psnr"] = number_or_inf(mean_psnr);
    j["mean_ssim"] = number_or_inf(mean_ssim);
    j["mean_baseline_psnr"] = number_or_inf(mean_baseline_psnr);
    j["mean_baseline_ssim"] = number_or_inf(mean_baseline_ssim);
    j["fraction_better"] = fraction_better;
    j["records"] = json::array();
    for (const auto& r : records)
        j["records"].push_back({{"location", r.location},
                                {"left_yaw", r.left_yaw},
                                {"theta", r.theta},
                                {"angle_index", r.angle_index},
                                {"psnr", number_or_inf(r.psnr)},
                                {"ssim", number_or_inf(r.ssim)},
                                {"baseline_psnr", number_or_inf(r.baseline_psnr)},
                                {"baseline_ssim", number_or_inf(r.baseline_ssim)}});
    return j.dump(2) + "\n";
}

EvalReport evaluate(const ViewPredictor& model, const Dataset& data, double tau_deg, int delta,
                    const std::string& split)
{
    const auto& m = data.manifest();
    const int tau = check_tau(m, tau_deg);
    const auto locations = m.location_ids(split);
    if (locations.empty())
        throw DatasetError("dataset has no '" + split + "' locations to evaluate");
    BlendPredictor blend;
    EvalReport rep;
    rep.tau_deg = tau_deg;
    std::size_t better = 0;
    for (int loc : locations)
        for (int left = 0; left < 360; left += tau) {
            const int right = (left + tau) % 360;
            const auto& l = data.view(loc, left).rgb;
            const auto& r = data.view(loc, right).rgb;
            for (int theta = m.step_deg; theta < tau; theta += m.step_deg) {
                const int target = (left + theta) % 360;
                if (!data.has_view(loc, target))
                    throw DatasetError("missing ground truth for location " + std::to_string(loc) + " at yaw " +
                                       std::to_string(target));
                const auto& gt = data.view(loc, target).rgb;
                const auto code = digitize_angle(theta, tau_deg, delta);
                const auto pred = model.predict(loc, left, right, target, code, l, r);
                const auto base = blend.predict(loc, left, right, target, code, l, r);
                EvalRecord rec{loc, left, theta, code.index, psnr(pred, gt), ssim_metric(pred, gt),
                               psnr(base, gt), ssim_metric(base, gt)};
                better += rec.psnr > rec.baseline_psnr;
                rep.records.push_back(rec);
            }
        }
    const double n = static_cast<double>(rep.records.size());
    for (const auto& r : rep.records) {
        rep.mean_psnr += r.psnr / n;
        rep.mean_ssim += r.ssim / n;
        rep.mean_baseline_psnr += r.baseline_psnr / n;
        rep.mean_baseline_ssim += r.baseline_ssim / n;
    }
    rep.fraction_better = static_cast<double>(better) / n;
    return rep;
}

std::vector<SweepRow> sweep_tau(const ViewPredictor& model, const Dataset& data, const std::vector<double>& taus,
                                int delta, const std::string& split)
{
    std::vector<SweepRow> rows;
    for (double tau : taus) {
        const auto rep = evaluate(model, data, tau, delta, split);
        rows.push_back({tau, rep.mean_psnr, rep.mean_ssim, rep.mean_baseline_psnr, rep.records.size()});
    }
    return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows)
{
    std::string out = "tau,mean_psnr,mean_ssim,mean_baseline_psnr,count\n";
    for (const auto& r : rows)
        out += fmt(r.tau_deg) + "," + fmt(r.mean_psnr) + "," + fmt(r.mean_ssim) + "," + fmt(r.mean_baseline_psnr) +
               "," + std::to_string(r.count) + "\n";
    return out;
}

}  // namespace see360
