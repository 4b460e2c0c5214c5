#include "see360/service.hpp"

#include <charconv>
#include <cmath>

#include <httplib.h>
#include <json.hpp>

#include "see360/image_io.hpp"

namespace see360 {

namespace {

constexpr double kResidueGain = 5.0;

std::string format_yaw(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

double wrap(double yaw)
{
    double y = std::fmod(yaw, 360.0);
    if (y < 0)
        y += 360.0;
    return y >= 360.0 ? 0.0 : y;
}

template <typename T>
T parse(const QueryParams& q, const std::string& key)
{
    const auto it = q.find(key);
    if (it == q.end())
        throw HttpError(400, "missing query parameter '" + key + "'");
    const std::string& s = it->second;
    T v{};
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw HttpError(400, "malformed value for '" + key + "': '" + s + "'");
    if constexpr (std::is_floating_point_v<T>)
        if (!std::isfinite(v))
            throw HttpError(400, "'" + key + "' must be finite");
    return v;
}

std::optional<double> parse_optional(const QueryParams& q, const std::string& key)
{
    if (!q.count(key))
        return std::nullopt;
    return parse<double>(q, key);
}

HttpResponse png_response(const Tensor<float>& chw, const RenderPlan& p)
{
    const auto bytes = encode_png(to_image(chw));
    HttpResponse r;
    r.content_type = "image/png";
    r.body.assign(bytes.begin(), bytes.end());
    r.headers = {{"X-Snapped-Yaw", format_yaw(p.snapped_yaw)},
                 {"X-Angle-Index", std::to_string(p.code.index)},
                 {"X-Reference-Yaws", format_yaw(p.left_yaw) + "," + format_yaw(p.right_yaw)}};
    return r;
}

HttpResponse error_response(int status, const std::string& msg)
{
    HttpResponse r;
    r.status = status;
    r.content_type = "application/json";
    r.body = nlohmann::json{{"error", msg}}.dump();
    return r;
}

template <typename F>
HttpResponse guarded(F&& f)
{
    try {
        return f();
    } catch (const HttpError& e) {
        return error_response(e.status(), e.what());
    } catch (const std::exception& e) {
        return error_response(500, e.what());
    }
}

/// Integral yaw of the captured view at `yaw`, if one exists.
std::optional<int> captured_yaw(const Dataset& data, int location, double yaw)
{
    const double r = std::round(yaw);
    if (std::abs(r - yaw) > 1e-6)
        return std::nullopt;
    const int y = static_cast<int>(r) % 360;
    if (!data.has_view(location, y))
        return std::nullopt;
    return y;
}

}  // namespace

RenderService::RenderService(const Checkpoint& ckpt, std::shared_ptr<const Dataset> data)
    : data_(std::move(data)), model_(make_predictor(ckpt, *data_))
{
    const auto mc = ckpt.model();
    tau_ = mc.tau_deg;
    delta_ = mc.delta;
}

std::vector<double> RenderService::reference_yaws() const
{
    std::vector<double> out;
    for (double y = 0; y < 360.0 - 1e-9; y += tau_)
        out.push_back(y);
    return out;
}

RenderPlan RenderService::plan(int location, double yaw, std::optional<double> left, std::optional<double> right,
                               bool allow_reference) const
{
    if (!data_->manifest().has_location(location))
        throw HttpError(404, "unknown location " + std::to_string(location));
    if (left.has_value() != right.has_value())
        throw HttpError(400, "explicit references need both 'left' and 'right'");
    RenderPlan p;
    p.location = location;
    p.requested_yaw = yaw;
    p.tau_deg = tau_;
    const double bin = tau_ / delta_;
    p.snapped_yaw = wrap(std::round(wrap(yaw) / bin) * bin);
    if (left) {
        p.left_yaw = wrap(*left);
        p.right_yaw = wrap(*right);
        p.tau_deg = wrap(p.right_yaw - p.left_yaw);
        if (p.tau_deg == 0)
            throw HttpError(400, "left and right references coincide");
    } else {
        p.left_yaw = std::floor(p.snapped_yaw / tau_ + 1e-9) * tau_;
        p.right_yaw = wrap(p.left_yaw + tau_);
    }
    const double theta = wrap(p.snapped_yaw - p.left_yaw);
    if (!allow_reference && (theta < 1e-9 || theta >= p.tau_deg - 1e-9)) {
        if (theta < 1e-9 || std::abs(theta - p.tau_deg) < 1e-9)
            throw HttpError(422, "yaw " + format_yaw(p.snapped_yaw) + " coincides with a reference view");
        throw HttpError(400, "yaw lies outside the explicit reference interval");
    }
    try {
        p.code = digitize_angle(std::min(theta, std::nextafter(p.tau_deg, 0.0)), p.tau_deg, delta_);
    } catch (const AngleRangeError& e) {
        throw HttpError(422, e.what());
    }
    return p;
}

Tensor<float> RenderService::predict(const RenderPlan& p) const
{
    const auto l = captured_yaw(*data_, p.location, p.left_yaw);
    const auto r = captured_yaw(*data_, p.location, p.right_yaw);
    if (!l || !r)
        throw HttpError(404, "reference views are not in the dataset");
    const auto target = captured_yaw(*data_, p.location, p.snapped_yaw);
    const auto& left = data_->view(p.location, *l).rgb;
    const auto& right = data_->view(p.location, *r).rgb;
    return model_->predict(p.location, *l, *r, target.value_or(-1), p.code, left, right);
}

HttpResponse RenderService::meta() const
{
    return guarded([&] {
        const auto& m = data_->manifest();
        nlohmann::json j;
        j["tau"] = tau_;
        j["delta"] = delta_;
        j["image_size"] = {{"width", m.width}, {"height", m.height}};
        j["step"] = m.step_deg;
        j["reference_yaws"] = reference_yaws();
        j["locations"] = nlohmann::json::array();
        for (const auto& l : m.locations)
            j["locations"].push_back({{"id", l.id}, {"split", l.split}});
        HttpResponse r;
        r.content_type = "application/json";
        r.body = j.dump();
        return r;
    });
}

HttpResponse RenderService::render(const QueryParams& q) const
{
    return guarded([&] {
        const auto p = plan(parse<int>(q, "loc"), parse<double>(q, "yaw"), parse_optional(q, "left"),
                            parse_optional(q, "right"));
        return png_response(predict(p), p);
    });
}

HttpResponse RenderService::gt(const QueryParams& q) const
{
    return guarded([&] {
        const auto p = plan(parse<int>(q, "loc"), parse<double>(q, "yaw"), {}, {}, true);
        const auto y = captured_yaw(*data_, p.location, p.snapped_yaw);
        if (!y)
            throw HttpError(404, "no ground truth at yaw " + format_yaw(p.snapped_yaw));
        return png_response(data_->view(p.location, *y).rgb, p);
    });
}

HttpResponse RenderService::residue(const QueryParams& q) const
{
    return guarded([&] {
        const auto p = plan(parse<int>(q, "loc"), parse<double>(q, "yaw"), parse_optional(q, "left"),
                            parse_optional(q, "right"));
        const auto y = captured_yaw(*data_, p.location, p.snapped_yaw);
        if (!y)
            throw HttpError(404, "no ground truth at yaw " + format_yaw(p.snapped_yaw));
        NoGradGuard no_grad;
        const auto pred = predict(p);
        const auto& truth = data_->view(p.location, *y).rgb;
        Buffer<float> v = ((pred.data() - truth.data()).abs() * static_cast<float>(kResidueGain)).min(1.0f);
        return png_response(Tensor<float>(pred.shape(), std::move(v)), p);
    });
}

void bind_routes(httplib::Server& server, const RenderService& service)
{
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                {"Access-Control-Expose-Headers", "X-Snapped-Yaw, X-Angle-Index, X-Reference-Yaws"}});
    auto route = [&server](const std::string& path, auto handler) {
        server.Get(path, [handler](const httplib::Request& req, httplib::Response& res) {
            QueryParams q;
            for (const auto& [k, v] : req.params)
                q[k] = v;
            const HttpResponse r = handler(q);
            res.status = r.status;
            for (const auto& [k, v] : r.headers)
                res.set_header(k, v);
            res.set_content(r.body, r.content_type);
        });
    };
    route("/meta", [&service](const QueryParams&) { return service.meta(); });
    route("/render", [&service](const QueryParams& q) { return service.render(q); });
    route("/gt", [&service](const QueryParams& q) { return service.gt(q); });
    route("/residue", [&service](const QueryParams& q) { return service.residue(q); });
}

void serve(const RenderService& service, const std::string& host, int port)
{
    httplib::Server server;
    bind_routes(server, service);
    if (!server.listen(host, port))
        throw std::runtime_error("cannot listen on " + host + ":" + std::to_string(port));
}

}  // namespace see360
