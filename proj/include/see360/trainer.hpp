#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "see360/checkpoint.hpp"
#include "see360/dataset.hpp"
#include "see360/losses.hpp"
#include "see360/model.hpp"

namespace see360 {

class NonFiniteLoss : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Everything a run needs. Read from a flat `key = value` file: model.* keys
/// go to ModelConfig, train.* keys to the fields below.
struct TrainConfig {
    std::string dataset;
    std::string out_dir = "run";
    ModelConfig model;
    int batch = 4;
    double lr = 1e-4;
    double beta1 = 0.5;
    double beta2 = 0.999;
    int iterations = 2000;
    std::uint64_t seed = 7;
    std::uint64_t feature_seed = 11;
    LossWeights weights;
    bool use_lap = true;
    bool use_pd = true;
    bool use_feat = true;
    /// Scale on the adversarial term; 0 trains on the reconstruction terms alone.
    double adv_weight = 1.0;
    AdvConvention adv = AdvConvention::NonSaturating;
    int checkpoint_every = 500;
    int log_every = 1;

    /// Loss weights after the use_* switches are applied.
    LossWeights effective_weights() const;
    void validate() const;
    KeyValues to_key_values() const;
    static TrainConfig from_key_values(KeyValues kv);
    static TrainConfig read(const std::string& path);
};

struct Batch {
    Tensor<float> left, right, gt;  // [N,3,H,W]
    Tensor<float> gt_seg;           // [N,1,H,W]
    Tensor<float> onehot;           // [N,delta]
    std::vector<int> location, left_yaw, theta;
};

/// Deterministic stream of training triplets: a location, a left reference on
/// the tau grid, and a target strictly between the references.
class BatchSampler {
public:
    BatchSampler(const Dataset& data, double tau_deg, int delta, int batch, std::uint64_t seed,
                 std::string split = "train");

    Batch next();
    /// Offsets the sampler may draw, in degrees.
    const std::vector<int>& offsets() const { return offsets_; }
    const std::vector<int>& left_yaws() const { return left_yaws_; }

private:
    const Dataset& data_;
    double tau_;
    int delta_;
    int batch_;
    std::vector<int> locations_, left_yaws_, offsets_;
    std::mt19937_64 rng_;
};

/// Assembles a batch from explicit (location, left yaw, offset) triplets.
Batch make_batch(const Dataset& data, double tau_deg, int delta, const std::vector<int>& location,
                 const std::vector<int>& left_yaw, const std::vector<int>& theta);

struct StepStats {
    std::int64_t iteration = 0;
    double loss_d = 0, loss_g = 0;
    double adv = 0, ssim = 0, pd = 0, feat = 0, lap = 0, l1 = 0;
};

/// Generator, both discriminators and their optimizers.
class Trainer {
public:
    explicit Trainer(TrainConfig config);

    const TrainConfig& config() const { return config_; }
    Generator<float>& generator() { return *g_; }
    Discriminator<float>& d1() { return *d1_; }
    Discriminator<float>& d2() { return *d2_; }
    std::int64_t iteration() const { return iteration_; }

    /// One discriminator update followed by one generator update.
    StepStats step(const Batch& b);
    double d_step(const Batch& b, const Tensor<float>& fake);
    StepStats g_step(const Batch& b);

    Checkpoint checkpoint() const;
    void restore(const Checkpoint& c);

private:
    StepStats g_update(const Batch& b, const Tensor<float>& fake);

    TrainConfig config_;
    std::unique_ptr<Generator<float>> g_;
    std::unique_ptr<Discriminator<float>> d1_, d2_;
    std::unique_ptr<Adam<float>> opt_g_, opt_d_;
    FeatureExtractor<float> phi_;
    std::int64_t iteration_ = 0;
};

struct TrainResult {
    Checkpoint final;
    std::vector<StepStats> curve;
};

/// Full run: samples batches, alternates updates, writes loss.csv and
/// checkpoints into config.out_dir. Non-finite losses dump the offending
/// batch and throw NonFiniteLoss.
TrainResult train(const TrainConfig& config, const Dataset& data, bool quiet = false);
TrainResult train(const TrainConfig& config);

std::string loss_csv_header();
std::string loss_csv_row(const StepStats& s);

/// Something that produces a target view from a pair of references.
class ViewPredictor {
public:
    virtual ~ViewPredictor() = default;
    /// left/right: [3,H,W]; returns [3,H,W] in [0,1].
    virtual Tensor<float> predict(int location, int left_yaw, int right_yaw, int target_yaw, const AngleCode& code,
                                  const Tensor<float>& left, const Tensor<float>& right) const = 0;
};

class GeneratorPredictor : public ViewPredictor {
public:
    explicit GeneratorPredictor(Generator<float> g) : g_(std::move(g)) {}
    Tensor<float> predict(int, int, int, int, const AngleCode& code, const Tensor<float>& left,
                          const Tensor<float>& right) const override;
    const Generator<float>& generator() const { return g_; }

private:
    Generator<float> g_;
};

/// Pixel-wise average of the two references.
class BlendPredictor : public ViewPredictor {
public:
    Tensor<float> predict(int, int, int, int, const AngleCode&, const Tensor<float>& left,
                          const Tensor<float>& right) const override;
};

/// Returns the captured view itself; the identity oracle used in tests.
class GroundTruthPredictor : public ViewPredictor {
public:
    explicit GroundTruthPredictor(const Dataset& data) : data_(data) {}
    Tensor<float> predict(int location, int, int, int target_yaw, const AngleCode&, const Tensor<float>&,
                          const Tensor<float>&) const override;

private:
    const Dataset& data_;
};

/// Generator weights or the oracle, depending on the checkpoint's model kind.
std::unique_ptr<ViewPredictor> make_predictor(const Checkpoint& c, const Dataset& data);

/// A weightless checkpoint whose predictor returns ground truth.
Checkpoint oracle_checkpoint(const DatasetManifest& m);

struct EvalRecord {
    int location = 0;
    int left_yaw = 0;
    int theta = 0;
    int angle_index = 0;
    double psnr = 0, ssim = 0;
    double baseline_psnr = 0, baseline_ssim = 0;
};

struct EvalReport {
    double tau_deg = 60;
    std::vector<EvalRecord> records;
    double mean_psnr = 0, mean_ssim = 0;
    double mean_baseline_psnr = 0, mean_baseline_ssim = 0;
    /// Share of records where the prediction beats the blend baseline in PSNR.
    double fraction_better = 0;

    std::string to_csv() const;
    std::string to_json() const;
};

/// Scores every intermediate view between tau-spaced references at each
/// location of `split`; reference yaws themselves are never scored.
EvalReport evaluate(const ViewPredictor& model, const Dataset& data, double tau_deg, int delta,
                    const std::string& split = "eval");

struct SweepRow {
    double tau_deg = 0;
    double mean_psnr = 0, mean_ssim = 0;
    double mean_baseline_psnr = 0;
    std::size_t count = 0;
};

/// evaluate() at each tau with proportional angle codes.
std::vector<SweepRow> sweep_tau(const ViewPredictor& model, const Dataset& data, const std::vector<double>& taus,
                                int delta, const std::string& split = "eval");
std::string sweep_csv(const std::vector<SweepRow>& rows);

}  // namespace see360
