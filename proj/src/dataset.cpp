#include "see360/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "see360/image_io.hpp"

namespace see360 {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<int> DatasetManifest::location_ids(const std::string& split) const
{
    std::vector<int> ids;
    for (const auto& l : locations)
        if (l.split == split)
            ids.push_back(l.id);
    return ids;
}

bool DatasetManifest::has_location(int id) const
{
    for (const auto& l : locations)
        if (l.id == id)
            return true;
    return false;
}

const LocationInfo& DatasetManifest::location(int id) const
{
    for (const auto& l : locations)
        if (l.id == id)
            return l;
    throw DatasetError("unknown location " + std::to_string(id));
}

std::string DatasetManifest::to_json() const
{
    json j;
    j["name"] = name;
    j["image_size"] = {{"width", width}, {"height", height}};
    j["step_deg"] = step_deg;
    j["tau_deg"] = tau_deg;
    j["delta"] = delta;
    j["fov_deg"] = fov_deg;
    j["scene_seed"] = scene_seed;
    j["locations"] = json::array();
    for (const auto& l : locations)
        j["locations"].push_back(
            {{"id", l.id}, {"position", {l.position.x(), l.position.y(), l.position.z()}}, {"split", l.split}});
    j["records"] = json::array();
    for (const auto& r : records)
        j["records"].push_back({{"location", r.location}, {"yaw_deg", r.yaw_deg}, {"rgb", r.rgb}, {"seg", r.seg}});
    return j.dump(2) + "\n";
}

DatasetManifest DatasetManifest::from_json(const std::string& text)
{
    DatasetManifest m;
    try {
        const json j = json::parse(text);
        m.name = j.at("name").get<std::string>();
        m.width = j.at("image_size").at("width").get<int>();
        m.height = j.at("image_size").at("height").get<int>();
        m.step_deg = j.at("step_deg").get<int>();
        m.tau_deg = j.at("tau_deg").get<double>();
        m.delta = j.at("delta").get<int>();
        m.fov_deg = j.value("fov_deg", 60.0);
        m.scene_seed = j.value("scene_seed", std::uint64_t{0});
        for (const auto& l : j.at("locations")) {
            const auto p = l.at("position");
            m.locations.push_back({l.at("id").get<int>(),
                                   {p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>()},
                                   l.at("split").get<std::string>()});
        }
        for (const auto& r : j.at("records"))
            m.records.push_back({r.at("location").get<int>(), r.at("yaw_deg").get<int>(),
                                 r.at("rgb").get<std::string>(), r.at("seg").get<std::string>()});
    } catch (const json::exception& e) {
        throw DatasetError(std::string("malformed manifest: ") + e.what());
    }
    if (m.step_deg <= 0 || 360 % m.step_deg)
        throw DatasetError("manifest step must divide 360");
    return m;
}

std::string rgb_name(int location, int yaw_deg)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "loc%d/yaw%03d.png", location, yaw_deg);
    return buf;
}

std::string seg_name(int location, int yaw_deg)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "loc%d/yaw%03d_seg.png", location, yaw_deg);
    return buf;
}

std::vector<LocationInfo> standard_locations(int train, int eval)
{
    if (train < 0 || eval < 0)
        throw std::invalid_argument("location counts must be non-negative");
    std::vector<LocationInfo> out;
    const double ring = 2.0 * std::numbers::sqrt2;
    for (int i = 0; i < train; ++i) {
        const double a = std::numbers::pi / 4 + i * std::numbers::pi / 2 + (i / 4) * std::numbers::pi / 4;
        out.push_back({i, {ring * std::cos(a), 0, ring * std::sin(a)}, "train"});
    }
    for (int i = 0; i < eval; ++i) {
        Eigen::Vector3d p = Eigen::Vector3d::Zero();
        if (i > 0) {
            const double a = (i - 1) * std::numbers::pi / 3;
            p = {std::cos(a), 0, std::sin(a)};
        }
        out.push_back({train + i, p, "eval"});
    }
    return out;
}

DatasetManifest emit_dataset(const SceneSpec& scene, const std::vector<LocationInfo>& locations,
                             const EmitOptions& options, const std::string& out_dir)
{
    if (options.step_deg <= 0 || 360 % options.step_deg)
        throw DatasetError("angular step must divide 360");
    DatasetManifest m;
    m.name = options.name;
    m.width = options.width;
    m.height = options.height;
    m.step_deg = options.step_deg;
    m.tau_deg = options.tau_deg;
    m.delta = options.delta;
    m.fov_deg = options.fov_deg;
    m.scene_seed = scene.seed;
    m.locations = locations;

    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec)
        throw DatasetError("cannot create " + out_dir + ": " + ec.message());
    for (const auto& loc : locations) {
        fs::create_directories(fs::path(out_dir) / ("loc" + std::to_string(loc.id)), ec);
        if (ec)
            throw DatasetError("cannot create location directory: " + ec.message());
        for (int yaw = 0; yaw < 360; yaw += options.step_deg) {
            CameraPose pose{loc.position, static_cast<double>(yaw), options.fov_deg};
            const auto view = render_view(scene, pose, options.height, options.width);
            ViewRecord rec{loc.id, yaw, rgb_name(loc.id, yaw), seg_name(loc.id, yaw)};
            Image8 seg;
            seg.width = options.width;
            seg.height = options.height;
            seg.channels = 1;
            seg.pixels.resize(static_cast<std::size_t>(view.seg.size()));
            for (Index i = 0; i < view.seg.size(); ++i)
                seg.pixels[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(view.seg[i]);
            try {
                write_png((fs::path(out_dir) / rec.rgb).string(), to_image(view.rgb));
                write_png((fs::path(out_dir) / rec.seg).string(), seg);
            } catch (const ImageIoError& e) {
                throw DatasetError(e.what());
            }
            m.records.push_back(std::move(rec));
        }
    }
    std::ofstream f(fs::path(out_dir) / "manifest.json", std::ios::binary);
    f << m.to_json();
    if (!f)
        throw DatasetError("cannot write manifest in " + out_dir);
    return m;
}

DatasetManifest load_manifest(const std::string& dir)
{
    std::ifstream f(fs::path(dir) / "manifest.json", std::ios::binary);
    if (!f)
        throw DatasetError("no manifest.json in " + dir);
    std::stringstream ss;
    ss << f.rdbuf();
    return DatasetManifest::from_json(ss.str());
}

Dataset::Dataset(std::string dir) : root_(std::move(dir)), manifest_(load_manifest(root_))
{
    for (const auto& r : manifest_.records) {
        rgb_paths_[{r.location, r.yaw_deg}] = (fs::path(root_) / r.rgb).string();
        seg_paths_[{r.location, r.yaw_deg}] = (fs::path(root_) / r.seg).string();
    }
}

bool Dataset::has_view(int location, int yaw_deg) const
{
    return rgb_paths_.count({location, yaw_deg}) > 0;
}

const View& Dataset::view(int location, int yaw_deg) const
{
    const std::pair key{location, yaw_deg};
    std::lock_guard lock(mutex_);
    if (auto it = cache_.find(key); it != cache_.end())
        return it->second;
    auto rp = rgb_paths_.find(key);
    if (rp == rgb_paths_.end())
        throw DatasetError("no view for location " + std::to_string(location) + " at yaw " +
                           std::to_string(yaw_deg));
    View v;
    try {
        const Image8 rgb = read_png(rp->second);
        const Image8 seg = read_png(seg_paths_.at(key));
        if (rgb.channels != 3 || seg.channels != 1 || rgb.width != manifest_.width ||
            rgb.height != manifest_.height || seg.width != rgb.width || seg.height != rgb.height)
            throw DatasetError("view " + rp->second + " does not match the manifest layout");
        v.rgb = to_tensor<float>(rgb);
        v.seg = to_tensor<float>(seg);
    } catch (const ImageIoError& e) {
        throw DatasetError(e.what());
    }
    return cache_.emplace(key, std::move(v)).first->second;
}

}  // namespace see360
