#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>

namespace see360 {

/// Flat `key = value` document; '#' starts a comment line.
using KeyValues = std::map<std::string, std::string>;

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

KeyValues parse_key_values(std::string_view text);
KeyValues read_key_values(const std::string& path);
std::string format_key_values(const KeyValues& kv);

/// Pops `key` from kv and parses it; leaves `value` untouched when absent.
void take(KeyValues& kv, const std::string& key, int& value);
void take(KeyValues& kv, const std::string& key, double& value);
void take(KeyValues& kv, const std::string& key, bool& value);
void take(KeyValues& kv, const std::string& key, std::uint64_t& value);
void take(KeyValues& kv, const std::string& key, std::string& value);

enum class ModelKind {
    See360,
    /// Test fixture: "predicts" the ground-truth view. Used to validate the
    /// evaluation and serving paths end to end.
    GroundTruthOracle,
};

struct ModelConfig {
    ModelKind kind = ModelKind::See360;
    int image_width = 64;
    int image_height = 48;
    int enc_c1 = 32;
    int enc_c2 = 64;
    int enc_c3 = 128;
    int decoder_width = 32;
    int latent_width = 256;
    int patch = 2;
    double tau_deg = 60;
    int delta = 12;
    bool translation_locked = true;
    bool use_cpc = true;
    bool use_msat_multiscale = true;
    bool use_seg_condition = true;
    int disc_width = 32;
    double leaky_slope = 0.2;
    double norm_eps = 1e-5;
    std::uint64_t init_seed = 1;

    int affine_scales() const { return use_msat_multiscale ? 3 : 1; }
    void validate() const;
    void write(KeyValues& kv) const;
    /// Consumes the keys it knows.
    static ModelConfig read(KeyValues& kv);
};

}  // namespace see360
