#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>

#include <CLI11.hpp>

#include "see360/image_io.hpp"
#include "see360/service.hpp"

namespace fs = std::filesystem;
using namespace see360;

namespace {

std::pair<int, int> parse_size(const std::string& s)
{
    int w = 0, h = 0;
    char x = 0;
    if (std::sscanf(s.c_str(), "%d%c%d", &w, &x, &h) != 3 || (x != 'x' && x != 'X') || w <= 0 || h <= 0)
        throw std::invalid_argument("--size expects WIDTHxHEIGHT, got '" + s + "'");
    return {w, h};
}

void write_text(const fs::path& path, const std::string& text)
{
    if (path.has_parent_path())
        fs::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    f << text;
    if (!f)
        throw std::runtime_error("cannot write " + path.string());
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"See360 view interpolation: data generation, training, evaluation and serving"};
    app.require_subcommand(1);

    auto* gen = app.add_subcommand("gen-data", "Render a procedural multi-location dataset");
    std::uint64_t seed = 1;
    int complexity = 2, train_locations = 4, eval_locations = 1, step = 5, delta = 12;
    double tau = 60;
    std::string size = "64x48", out;
    gen->add_option("--seed", seed, "Scene seed");
    gen->add_option("--complexity", complexity, "Billboards per 60-degree sector")->check(CLI::PositiveNumber);
    gen->add_option("--locations", train_locations, "Training capture locations")->check(CLI::NonNegativeNumber);
    gen->add_option("--eval-locations", eval_locations, "Held-out locations (the first sits at the centre)")
        ->check(CLI::NonNegativeNumber);
    gen->add_option("--step", step, "Angular step in degrees")->check(CLI::PositiveNumber);
    gen->add_option("--size", size, "Image size WIDTHxHEIGHT");
    gen->add_option("--tau", tau, "Reference spacing recorded in the manifest");
    gen->add_option("--delta", delta, "Angle code length recorded in the manifest");
    gen->add_option("--out", out, "Output directory")->required();

    auto* tr = app.add_subcommand("train", "Train a model from a key = value config file");
    std::string config_path, dataset_override, out_override;
    int iterations_override = -1;
    tr->add_option("--config", config_path, "Config file")->required()->check(CLI::ExistingFile);
    tr->add_option("--dataset", dataset_override, "Override train.dataset");
    tr->add_option("--out-dir", out_override, "Override train.out_dir");
    tr->add_option("--iterations", iterations_override, "Override train.iterations");

    std::string ckpt, dataset;
    auto* render = app.add_subcommand("render", "Generate one view and write it as PNG");
    int loc = 0;
    double yaw = 0;
    render->add_option("--ckpt", ckpt, "Checkpoint")->required()->check(CLI::ExistingFile);
    render->add_option("--dataset", dataset, "Dataset directory")->required()->check(CLI::ExistingDirectory);
    render->add_option("--loc", loc, "Location id")->required();
    render->add_option("--yaw", yaw, "Target yaw in degrees")->required();
    render->add_option("--out", out, "Output PNG")->required();

    auto* ev = app.add_subcommand("eval", "Score held-out views against ground truth and the blend baseline");
    double eval_tau = 0;
    std::string eval_out = ".";
    ev->add_option("--ckpt", ckpt, "Checkpoint")->required()->check(CLI::ExistingFile);
    ev->add_option("--dataset", dataset, "Dataset directory")->required()->check(CLI::ExistingDirectory);
    ev->add_option("--tau", eval_tau, "Reference spacing (defaults to the checkpoint's)");
    ev->add_option("--out", eval_out, "Directory for eval.csv and eval.json");

    auto* sw = app.add_subcommand("sweep-tau", "Mean PSNR at several reference spacings");
    std::vector<double> taus{60, 90, 120};
    std::string sweep_out;
    sw->add_option("--ckpt", ckpt, "Checkpoint")->required()->check(CLI::ExistingFile);
    sw->add_option("--dataset", dataset, "Dataset directory")->required()->check(CLI::ExistingDirectory);
    sw->add_option("--taus", taus, "Comma-separated spacings in degrees")->delimiter(',');
    sw->add_option("--out", sweep_out, "CSV output (stdout when omitted)");

    auto* sv = app.add_subcommand("serve", "Run the HTTP render service");
    int port = 8360;
    std::string host = "127.0.0.1";
    sv->add_option("--ckpt", ckpt, "Checkpoint")->required()->check(CLI::ExistingFile);
    sv->add_option("--dataset", dataset, "Dataset directory")->required()->check(CLI::ExistingDirectory);
    sv->add_option("--port", port, "TCP port")->check(CLI::Range(1, 65535));
    sv->add_option("--host", host, "Bind address");

    auto* oracle = app.add_subcommand("make-oracle", "Write a ground-truth oracle checkpoint for a dataset");
    oracle->add_option("--dataset", dataset, "Dataset directory")->required()->check(CLI::ExistingDirectory);
    oracle->add_option("--out", out, "Checkpoint path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) {
            const auto [w, h] = parse_size(size);
            EmitOptions opt;
            opt.step_deg = step;
            opt.width = w;
            opt.height = h;
            opt.tau_deg = tau;
            opt.delta = delta;
            const auto m = emit_dataset(build_scene(seed, complexity), standard_locations(train_locations, eval_locations),
                                        opt, out);
            std::cout << "wrote " << m.records.size() << " views (" << m.locations.size() << " locations) to " << out
                      << "\n";
        } else if (*tr) {
            auto cfg = TrainConfig::read(config_path);
            if (!dataset_override.empty())
                cfg.dataset = dataset_override;
            if (!out_override.empty())
                cfg.out_dir = out_override;
            if (iterations_override >= 0)
                cfg.iterations = iterations_override;
            const auto r = train(cfg);
            std::cout << "trained " << r.final.iteration << " iterations; checkpoint at "
                      << (fs::path(cfg.out_dir) / "model.s360").string() << "\n";
        } else if (*render) {
            auto data = std::make_shared<const Dataset>(dataset);
            RenderService svc(load_checkpoint(ckpt), data);
            RenderPlan p;
            try {
                p = svc.plan(loc, yaw);
            } catch (const HttpError& e) {
                if (e.status() == 422)
                    throw std::runtime_error(std::string("theta outside [0, tau): ") + e.what());
                throw;
            }
            write_png(out, to_image(svc.predict(p)));
            std::cout << "snapped yaw " << p.snapped_yaw << " (angle index " << p.code.index << ") -> " << out
                      << "\n";
        } else if (*ev) {
            const auto c = load_checkpoint(ckpt);
            Dataset data(dataset);
            const auto model = make_predictor(c, data);
            const auto mc = c.model();
            const auto rep = evaluate(*model, data, eval_tau > 0 ? eval_tau : mc.tau_deg, mc.delta);
            write_text(fs::path(eval_out) / "eval.csv", rep.to_csv());
            write_text(fs::path(eval_out) / "eval.json", rep.to_json());
            std::cout << "views " << rep.records.size() << "  psnr " << rep.mean_psnr << "  ssim " << rep.mean_ssim
                      << "  baseline psnr " << rep.mean_baseline_psnr << "  better " << rep.fraction_better << "\n";
        } else if (*sw) {
            const auto c = load_checkpoint(ckpt);
            Dataset data(dataset);
            const auto model = make_predictor(c, data);
            const auto csv = sweep_csv(sweep_tau(*model, data, taus, c.model().delta));
            if (sweep_out.empty())
                std::cout << csv;
            else
                write_text(sweep_out, csv);
        } else if (*sv) {
            auto data = std::make_shared<const Dataset>(dataset);
            RenderService svc(load_checkpoint(ckpt), data);
            std::cerr << "serving on http://" << host << ":" << port << "\n";
            serve(svc, host, port);
        } else if (*oracle) {
            save_checkpoint(oracle_checkpoint(load_manifest(dataset)), out);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
