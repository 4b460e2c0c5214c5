#include "see360/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace see360 {

namespace {

std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& text)
{
    T v{};
    const char* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc{} || ptr != end)
        throw ConfigError("invalid value for '" + key + "': '" + text + "'");
    return v;
}

std::string format_double(double v)
{
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace

KeyValues parse_key_values(std::string_view text)
{
    KeyValues kv;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#')
            continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
        std::string key = trim(std::string_view(t).substr(0, eq));
        std::string value = trim(std::string_view(t).substr(eq + 1));
        if (key.empty())
            throw ConfigError("line " + std::to_string(lineno) + ": empty key");
        if (!kv.emplace(key, value).second)
            throw ConfigError("duplicate key '" + key + "'");
    }
    return kv;
}

KeyValues read_key_values(const std::string& path)
{
    std::ifstream f(path);
    if (!f)
        throw ConfigError("cannot open config file " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_key_values(ss.str());
}

std::string format_key_values(const KeyValues& kv)
{
    std::string out;
    for (const auto& [k, v] : kv)
        out += k + " = " + v + "\n";
    return out;
}

void take(KeyValues& kv, const std::string& key, int& value)
{
    if (auto it = kv.find(key); it != kv.end()) {
        value = parse_number<int>(key, it->second);
        kv.erase(it);
    }
}

void take(KeyValues& kv, const std::string& key, double& value)
{
    if (auto it = kv.find(key); it != kv.end()) {
        value = parse_number<double>(key, it->second);
        kv.erase(it);
    }
}

void take(KeyValues& kv, const std::string& key, std::uint64_t& value)
{
    if (auto it = kv.find(key); it != kv.end()) {
        value = parse_number<std::uint64_t>(key, it->second);
        kv.erase(it);
    }
}

void take(KeyValues& kv, const std::string& key, bool& value)
{
    if (auto it = kv.find(key); it != kv.end()) {
        if (it->second == "true" || it->second == "1")
            value = true;
        else if (it->second == "false" || it->second == "0")
            value = false;
        else
            throw ConfigError("invalid boolean for '" + key + "': '" + it->second + "'");
        kv.erase(it);
    }
}

void take(KeyValues& kv, const std::string& key, std::string& value)
{
    if (auto it = kv.find(key); it != kv.end()) {
        value = it->second;
        kv.erase(it);
    }
}

void ModelConfig::validate() const
{
    auto fail = [](const std::string& m) { throw ConfigError(m); };
    if (image_width < 8 || image_height < 8 || image_width % 8 || image_height % 8)
        fail("image size must be a positive multiple of 8");
    if (enc_c1 < 1 || enc_c2 < 1 || enc_c3 < 1 || decoder_width < 2 || latent_width < 1 || disc_width < 1)
        fail("channel widths must be positive");
    if (patch < 1 || (image_width / 8) % patch || (image_height / 8) % patch)
        fail("patch size must divide the bottleneck extent " + std::to_string(image_width / 8) + "x" +
             std::to_string(image_height / 8));
    if (!(tau_deg > 0) || delta < 1)
        fail("tau must be positive and delta at least 1");
    if (!(leaky_slope >= 0 && leaky_slope < 1) || !(norm_eps > 0))
        fail("invalid leaky slope or normalization epsilon");
}

void ModelConfig::write(KeyValues& kv) const
{
    kv["model.kind"] = kind == ModelKind::See360 ? "see360" : "ground_truth_oracle";
    kv["model.image_width"] = std::to_string(image_width);
    kv["model.image_height"] = std::to_string(image_height);
    kv["model.enc_c1"] = std::to_string(enc_c1);
    kv["model.enc_c2"] = std::to_string(enc_c2);
    kv["model.enc_c3"] = std::to_string(enc_c3);
    kv["model.decoder_width"] = std::to_string(decoder_width);
    kv["model.latent_width"] = std::to_string(latent_width);
    kv["model.patch"] = std::to_string(patch);
    kv["model.tau_deg"] = format_double(tau_deg);
    kv["model.delta"] = std::to_string(delta);
    kv["model.translation_locked"] = translation_locked ? "true" : "false";
    kv["model.use_cpc"] = use_cpc ? "true" : "false";
    kv["model.use_msat_multiscale"] = use_msat_multiscale ? "true" : "false";
    kv["model.use_seg_condition"] = use_seg_condition ? "true" : "false";
    kv["model.disc_width"] = std::to_string(disc_width);
    kv["model.leaky_slope"] = format_double(leaky_slope);
    kv["model.norm_eps"] = format_double(norm_eps);
    kv["model.init_seed"] = std::to_string(init_seed);
}

ModelConfig ModelConfig::read(KeyValues& kv)
{
    ModelConfig c;
    std::string kind = "see360";
    take(kv, "model.kind", kind);
    if (kind == "see360")
        c.kind = ModelKind::See360;
    else if (kind == "ground_truth_oracle")
        c.kind = ModelKind::GroundTruthOracle;
    else
        throw ConfigError("unknown model.kind '" + kind + "'");
    take(kv, "model.image_width", c.image_width);
    take(kv, "model.image_height", c.image_height);
    take(kv, "model.enc_c1", c.enc_c1);
    take(kv, "model.enc_c2", c.enc_c2);
    take(kv, "model.enc_c3", c.enc_c3);
    take(kv, "model.decoder_width", c.decoder_width);
    take(kv, "model.latent_width", c.latent_width);
    take(kv, "model.patch", c.patch);
    take(kv, "model.tau_deg", c.tau_deg);
    take(kv, "model.delta", c.delta);
    take(kv, "model.translation_locked", c.translation_locked);
    take(kv, "model.use_cpc", c.use_cpc);
    take(kv, "model.use_msat_multiscale", c.use_msat_multiscale);
    take(kv, "model.use_seg_condition", c.use_seg_condition);
    take(kv, "model.disc_width", c.disc_width);
    take(kv, "model.leaky_slope", c.leaky_slope);
    take(kv, "model.norm_eps", c.norm_eps);
    take(kv, "model.init_seed", c.init_seed);
    return c;
}

}  // namespace see360
