#pragma once

#include <map>
#include <mutex>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "see360/scenegen.hpp"

namespace see360 {

class DatasetError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct LocationInfo {
    int id = 0;
    Eigen::Vector3d position = Eigen::Vector3d::Zero();
    std::string split = "train";  // "train" or "eval"
};

struct ViewRecord {
    int location = 0;
    int yaw_deg = 0;
    std::string rgb;  // relative to the dataset root
    std::string seg;
};

struct DatasetManifest {
    std::string name;
    int width = 64;
    int height = 48;
    int step_deg = 5;
    double tau_deg = 60;
    int delta = 12;
    double fov_deg = 60;
    std::uint64_t scene_seed = 0;
    std::vector<LocationInfo> locations;
    std::vector<ViewRecord> records;

    int views_per_location() const { return 360 / step_deg; }
    std::vector<int> location_ids(const std::string& split) const;
    const LocationInfo& location(int id) const;
    bool has_location(int id) const;

    std::string to_json() const;
    static DatasetManifest from_json(const std::string& text);
};

struct EmitOptions {
    std::string name = "procedural";
    int step_deg = 5;
    int height = 48;
    int width = 64;
    double tau_deg = 60;
    int delta = 12;
    double fov_deg = 60;
};

/// Relative file names inside a dataset: loc{L}/yaw{DDD}.png and loc{L}/yaw{DDD}_seg.png.
std::string rgb_name(int location, int yaw_deg);
std::string seg_name(int location, int yaw_deg);

/// `train` locations on the corners of a 4 m square around the origin (more
/// go on the same ring), then `eval` locations starting at the centre.
std::vector<LocationInfo> standard_locations(int train, int eval);

/// Renders every location at every step and writes images plus manifest.json
/// (written last).
DatasetManifest emit_dataset(const SceneSpec& scene, const std::vector<LocationInfo>& locations,
                             const EmitOptions& options, const std::string& out_dir);

DatasetManifest load_manifest(const std::string& dir);

struct View {
    Tensor<float> rgb;  // [3,H,W]
    Tensor<float> seg;  // [1,H,W] ids / 255
};

/// Lazily loaded, cached view store. Safe for concurrent readers.
class Dataset {
public:
    explicit Dataset(std::string dir);

    const DatasetManifest& manifest() const { return manifest_; }
    const std::string& root() const { return root_; }
    bool has_view(int location, int yaw_deg) const;
    const View& view(int location, int yaw_deg) const;

private:
    std::string root_;
    DatasetManifest manifest_;
    std::map<std::pair<int, int>, std::string> rgb_paths_, seg_paths_;
    mutable std::mutex mutex_;
    mutable std::map<std::pair<int, int>, View> cache_;
};

}  // namespace see360
