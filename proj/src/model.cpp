#include "see360/model.hpp"

namespace see360 {

template <typename Scalar>
Encoder<Scalar> Encoder<Scalar>::make(const ModelConfig& c, std::mt19937_64& rng)
{
    Encoder e;
    e.kernels[0] = normal_param<Scalar>({c.enc_c1, 3, 4, 4}, rng, kInitStd);
    e.kernels[1] = normal_param<Scalar>({c.enc_c2, c.enc_c1, 4, 4}, rng, kInitStd);
    e.kernels[2] = normal_param<Scalar>({c.enc_c3, c.enc_c2, 4, 4}, rng, kInitStd);
    return e;
}

template <typename Scalar>
FeaturePyramid<Scalar> Encoder<Scalar>::operator()(const Tensor<Scalar>& image, const ModelConfig& c) const
{
    if (image.rank() != 4 || image.dim(1) != 3)
        throw ShapeError("encoder expects [N,3,H,W] images, got " + to_string(image.shape()));
    if (image.dim(2) % 8 || image.dim(3) % 8)
        throw ShapeError("encoder input extents must be divisible by 8, got " + to_string(image.shape()));
    const auto slope = static_cast<Scalar>(c.leaky_slope);
    const auto eps = static_cast<Scalar>(c.norm_eps);
    FeaturePyramid<Scalar> pyr;
    Tensor<Scalar> x = image;
    for (int i = 0; i < 3; ++i) {
        x = leaky_relu(instance_norm(conv2d(x, kernels[static_cast<std::size_t>(i)], 2, 1), eps), slope);
        pyr.levels[static_cast<std::size_t>(i)] = x;
    }
    return pyr;
}

template <typename Scalar>
void Encoder<Scalar>::collect(NamedParams<Scalar>& out, const std::string& prefix)
{
    for (int i = 0; i < 3; ++i)
        out.emplace_back(prefix + ".conv" + std::to_string(i + 1) + ".weight", &kernels[static_cast<std::size_t>(i)]);
}

template <typename Scalar>
Generator<Scalar> Generator<Scalar>::make(const ModelConfig& config)
{
    config.validate();
    std::mt19937_64 rng(config.init_seed);
    Generator g;
    g.config_ = config;
    const int w = config.latent_width;
    const Index corr_len = static_cast<Index>(config.image_width / 8) * (config.image_height / 8);
    g.encoder = Encoder<Scalar>::make(config, rng);
    g.corr_fc = Linear<Scalar>::make(corr_len, w, rng);
    g.condition = ConditionEncoder<Scalar>::make(config.delta, w, rng);
    g.left_head = AffineHead<Scalar>::make(w, config.affine_scales(), config.translation_locked, rng);
    g.right_head = AffineHead<Scalar>::make(w, config.affine_scales(), config.translation_locked, rng);
    const int d = config.decoder_width;
    g.decoder[0] = normal_param<Scalar>({d, 2 * config.enc_c3, 3, 3}, rng, kInitStd);
    g.decoder[1] = normal_param<Scalar>({d, 2 * config.enc_c2, 3, 3}, rng, kInitStd);
    g.decoder[2] = normal_param<Scalar>({d, 2 * config.enc_c1, 3, 3}, rng, kInitStd);
    g.fuse1 = normal_param<Scalar>({d / 2, d, 3, 3}, rng, kInitStd);
    g.fuse2 = normal_param<Scalar>({3, d / 2, 3, 3}, rng, kInitStd);
    g.fuse2_bias = zero_param<Scalar>({3});
    return g;
}

template <typename Scalar>
FeaturePyramid<Scalar> Generator<Scalar>::encode(const Tensor<Scalar>& image) const
{
    return encoder(image, config_);
}

template <typename Scalar>
Tensor<Scalar> Generator<Scalar>::msat_fuse(const FeaturePyramid<Scalar>& left, const FeaturePyramid<Scalar>& right,
                                            const std::vector<Tensor<Scalar>>& left_affine,
                                            const std::vector<Tensor<Scalar>>& right_affine) const
{
    const auto slope = static_cast<Scalar>(config_.leaky_slope);
    const auto eps = static_cast<Scalar>(config_.norm_eps);
    Tensor<Scalar> state;
    bool have_state = false;
    for (std::size_t s = 0; s < 3; ++s) {
        const std::size_t level = 2 - s;
        Tensor<Scalar> l = left.levels[level];
        Tensor<Scalar> r = right.levels[level];
        if (l.shape() != r.shape())
            throw ShapeError("msat_fuse: left/right pyramids differ at level " + std::to_string(level));
        if (s < left_affine.size())
            l = warp_affine(l, left_affine[s]);
        if (s < right_affine.size())
            r = warp_affine(r, right_affine[s]);
        auto d = leaky_relu(instance_norm(conv2d(concat_channels(l, r), decoder[s], 1, 1), eps), slope);
        if (have_state)
            d = d + state;
        state = upsample_bilinear_x2(d);
        have_state = true;
    }
    auto x = leaky_relu(instance_norm(conv2d(state, fuse1, 1, 1), eps), slope);
    return sigmoid(add_channel_bias(conv2d(x, fuse2, 1, 1), fuse2_bias));
}

template <typename Scalar>
GeneratorTrace<Scalar> Generator<Scalar>::trace(const Tensor<Scalar>& left, const Tensor<Scalar>& right,
                                                const Tensor<Scalar>& onehot) const
{
    if (left.shape() != right.shape())
        throw ShapeError("generate: reference images differ in shape");
    if (left.dim(2) != config_.image_height || left.dim(3) != config_.image_width)
        throw ShapeError("generate: references are " + to_string(left.shape()) + " but the model expects " +
                         std::to_string(config_.image_height) + "x" + std::to_string(config_.image_width));
    if (onehot.rank() != 2 || onehot.dim(0) != left.dim(0) || onehot.dim(1) != config_.delta)
        throw ShapeError("generate: angle codes must be [N, delta]");

    GeneratorTrace<Scalar> t;
    t.left_features = encode(left);
    t.right_features = encode(right);
    const auto& fl = t.left_features.levels[2];
    const auto& fr = t.right_features.levels[2];
    if (config_.use_cpc) {
        t.left_to_right = cross_patch_corr(fl, fr, config_.patch, Direction::LeftToRight);
        t.right_to_left = cross_patch_corr(fr, fl, config_.patch, Direction::RightToLeft);
    } else {
        t.left_to_right = {mean_channels(fl), Direction::LeftToRight};
        t.right_to_left = {mean_channels(fr), Direction::RightToLeft};
    }
    t.condition = condition(onehot);
    const auto hl = modulate(corr_fc(flatten(t.left_to_right.response)), t.condition);
    const auto hr = modulate(corr_fc(flatten(t.right_to_left.response)), t.condition);
    t.left_affine = left_head(hl);
    t.right_affine = right_head(hr);
    t.image = msat_fuse(t.left_features, t.right_features, t.left_affine, t.right_affine);
    return t;
}

template <typename Scalar>
Tensor<Scalar> Generator<Scalar>::generate(const Tensor<Scalar>& left, const Tensor<Scalar>& right,
                                           const Tensor<Scalar>& onehot) const
{
    return trace(left, right, onehot).image;
}

template <typename Scalar>
NamedParams<Scalar> Generator<Scalar>::parameters()
{
    NamedParams<Scalar> p;
    encoder.collect(p, "G.encoder");
    corr_fc.collect(p, "G.corr_fc");
    condition.collect(p, "G.condition");
    left_head.collect(p, "G.affine_left");
    right_head.collect(p, "G.affine_right");
    for (std::size_t i = 0; i < 3; ++i)
        p.emplace_back("G.decoder" + std::to_string(i + 1) + ".weight", &decoder[i]);
    p.emplace_back("G.fuse1.weight", &fuse1);
    p.emplace_back("G.fuse2.weight", &fuse2);
    p.emplace_back("G.fuse2.bias", &fuse2_bias);
    return p;
}

template <typename Scalar>
Discriminator<Scalar> Discriminator<Scalar>::make(const ModelConfig& config, int scale, std::uint64_t seed)
{
    if (scale != 1 && scale != 2)
        throw std::invalid_argument("discriminator scale must be 1 or 2");
    config.validate();
    std::mt19937_64 rng(seed);
    Discriminator d;
    d.config_ = config;
    d.scale_ = scale;
    const Index in = config.use_seg_condition ? 10 : 9;
    const Index w = config.disc_width;
    d.kernels[0] = normal_param<Scalar>({w, in, 4, 4}, rng, kInitStd);
    d.kernels[1] = normal_param<Scalar>({2 * w, w, 4, 4}, rng, kInitStd);
    d.kernels[2] = normal_param<Scalar>({4 * w, 2 * w, 4, 4}, rng, kInitStd);
    d.projection = normal_param<Scalar>({1, 4 * w, 3, 3}, rng, kInitStd);
    d.projection_bias = zero_param<Scalar>({1});
    return d;
}

template <typename Scalar>
DiscriminatorOutput<Scalar> Discriminator<Scalar>::operator()(const Tensor<Scalar>& image, const Tensor<Scalar>& left,
                                                              const Tensor<Scalar>& right,
                                                              const Tensor<Scalar>& seg) const
{
    if (image.shape() != left.shape() || image.shape() != right.shape())
        throw ShapeError("discriminator: image and references are not aligned");
    if (seg.rank() != 4 || seg.dim(0) != image.dim(0) || seg.dim(1) != 1 || seg.dim(2) != image.dim(2) ||
        seg.dim(3) != image.dim(3))
        throw ShapeError("discriminator: segmentation map is not aligned with the image");
    Tensor<Scalar> x = concat_channels(concat_channels(image, left), right);
    if (config_.use_seg_condition)
        x = concat_channels(x, seg);
    if (scale_ == 2)
        x = downsample_bilinear_x2(x);
    const auto slope = static_cast<Scalar>(config_.leaky_slope);
    const auto eps = static_cast<Scalar>(config_.norm_eps);
    DiscriminatorOutput<Scalar> out;
    for (const auto& k : kernels) {
        x = leaky_relu(instance_norm(conv2d(x, k, 2, 1), eps), slope);
        out.features.push_back(x);
    }
    out.score = add_channel_bias(conv2d(x, projection, 1, 1), projection_bias);
    return out;
}

template <typename Scalar>
NamedParams<Scalar> Discriminator<Scalar>::parameters()
{
    const std::string prefix = "D" + std::to_string(scale_);
    NamedParams<Scalar> p;
    for (std::size_t i = 0; i < 3; ++i)
        p.emplace_back(prefix + ".conv" + std::to_string(i + 1) + ".weight", &kernels[i]);
    p.emplace_back(prefix + ".projection.weight", &projection);
    p.emplace_back(prefix + ".projection.bias", &projection_bias);
    return p;
}

template <typename Scalar>
void Discriminator<Scalar>::set_trainable(bool on)
{
    for (auto& [name, t] : parameters())
        t->set_requires_grad(on);
}

template struct Encoder<float>;
template struct Encoder<double>;
template class Generator<float>;
template class Generator<double>;
template class Discriminator<float>;
template class Discriminator<double>;

}  // namespace see360
