#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "see360/trainer.hpp"

namespace httplib {
class Server;
}

namespace see360 {

struct HttpResponse {
    int status = 200;
    std::string content_type = "text/plain";
    std::string body;
    std::vector<std::pair<std::string, std::string>> headers;
};

using QueryParams = std::map<std::string, std::string>;

/// Where a requested yaw lands: snapped onto the angle-code grid, with the
/// references that bracket it.
struct RenderPlan {
    int location = 0;
    double requested_yaw = 0;
    double snapped_yaw = 0;
    double left_yaw = 0;
    double right_yaw = 0;
    double tau_deg = 0;
    AngleCode code;
};

/// HTTP front end over immutable weights and a read-only dataset. Handlers
/// are const and safe to call concurrently.
class RenderService {
public:
    RenderService(const Checkpoint& ckpt, std::shared_ptr<const Dataset> data);

    HttpResponse meta() const;
    HttpResponse render(const QueryParams& q) const;
    HttpResponse gt(const QueryParams& q) const;
    HttpResponse residue(const QueryParams& q) const;

    double tau_deg() const { return tau_; }
    int delta() const { return delta_; }
    std::vector<double> reference_yaws() const;

    /// Snaps `yaw` to the nearest bin of width tau/delta; optional explicit
    /// references override the tau grid. Errors carry an HTTP status.
    RenderPlan plan(int location, double yaw, std::optional<double> left = {}, std::optional<double> right = {},
                    bool allow_reference = false) const;
    Tensor<float> predict(const RenderPlan& p) const;

private:
    std::shared_ptr<const Dataset> data_;
    std::unique_ptr<ViewPredictor> model_;
    double tau_;
    int delta_;
};

class HttpError : public std::runtime_error {
public:
    HttpError(int status, const std::string& msg) : std::runtime_error(msg), status_(status) {}
    int status() const { return status_; }

private:
    int status_;
};

/// Registers GET /meta, /render, /gt and /residue with permissive CORS.
void bind_routes(httplib::Server& server, const RenderService& service);

/// Blocks serving on host:port.
void serve(const RenderService& service, const std::string& host, int port);

}  // namespace see360
