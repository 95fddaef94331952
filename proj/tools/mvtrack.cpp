#include "mvtrack/io/pipeline.hpp"
#include "mvtrack/io/rig.hpp"
#include "mvtrack/io/scenario.hpp"
#include "mvtrack/io/selfcheck.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

namespace {

/// MVTRACK_VERBOSITY: 0 quiet, 1 summary (default), 2 detailed.
int verbosity() {
    const char* v = std::getenv("MVTRACK_VERBOSITY");
    if (!v || !*v) return 1;
    try {
        return std::stoi(v);
    } catch (const std::exception&) {
        return 1;
    }
}

int cmd_track(const std::string& detections, const std::string& cameras, const std::string& config,
              const std::string& mode, const std::string& out) {
    const auto s = mvtrack::io::run_track(detections, config, mode, out, cameras);
    if (verbosity() >= 1)
        std::cerr << "track: " << s.sequences << " sequences, " << s.frames << " frames, " << s.detections
                  << " detections -> " << s.track_boxes << " track boxes, " << s.labels << " labels\n";
    if (verbosity() >= 2) std::cerr << "track: " << s.seconds << " s\n";
    return 0;
}

int cmd_eval(const std::string& tracks, const std::string& gt, const std::string& out) {
    const auto r = mvtrack::io::run_eval(tracks, gt, out);
    if (verbosity() >= 1)
        std::cerr << "eval: MOTA " << r.summary.mota << ", MOTP " << r.summary.motp << ", AMOTA " << r.summary.amota
                  << ", ID switches " << r.summary.id_switches << "\n";
    if (verbosity() >= 2) std::cerr << mvtrack::io::report_to_json(r).dump(2) << "\n";
    return 0;
}

int cmd_sim(const std::string& spec_path, std::uint64_t seed, const std::string& out_dir) {
    namespace fs = std::filesystem;
    const auto spec = mvtrack::io::load_scenario_spec(spec_path);
    if (!fs::is_directory(out_dir)) throw mvtrack::InvalidInput("output directory '" + out_dir + "' does not exist");
    const auto scenario = mvtrack::io::generate_scenario(spec, seed);
    const fs::path dir(out_dir);
    mvtrack::io::write_records((dir / "gt.jsonl").string(), scenario.ground_truth);
    mvtrack::io::write_records((dir / "detections.jsonl").string(), scenario.detections);
    mvtrack::io::save_rig((dir / "cameras.json").string(), mvtrack::geometry::synthetic_rig());
    if (verbosity() >= 1)
        std::cerr << "sim: " << scenario.detections.size() << " frames written to " << out_dir << "\n";
    return 0;
}

int cmd_selfcheck(const std::string& cameras, std::uint64_t seed) {
    const auto rig = mvtrack::io::load_rig(cameras);
    const auto report = mvtrack::io::run_geometry_selfcheck(rig, seed);
    if (verbosity() >= 1 || !report.passed()) std::cout << report.to_text();
    return report.passed() ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-view 3D multi-object tracking toolkit"};
    app.require_subcommand(1);

    std::string detections, cameras, config, mode = "pr+h", out, tracks, gt, spec, out_dir;
    std::uint64_t seed = 0;

    auto* track = app.add_subcommand("track", "Track detections and write a track file");
    track->add_option("--detections", detections, "Detection file (JSON lines)")->required();
    track->add_option("--cameras", cameras, "Camera rig file (JSON), validated when given");
    track->add_option("--config", config, "Tracker config file (key = value)");
    track->add_option("--mode", mode, "Association mode")
        ->check(CLI::IsMember({"de", "pr", "pr+r", "pr+h"}))
        ->capture_default_str();
    track->add_option("--out", out, "Output track file")->required();

    auto* eval = app.add_subcommand("eval", "Evaluate a track file against ground truth");
    eval->add_option("--tracks", tracks, "Track file (JSON lines)")->required();
    eval->add_option("--gt", gt, "Ground-truth file (JSON lines)")->required();
    eval->add_option("--out", out, "Output report (JSON)")->required();

    auto* sim = app.add_subcommand("sim", "Generate a synthetic scenario");
    sim->add_option("--spec", spec, "Scenario spec (JSON)")->required();
    sim->add_option("--seed", seed, "Random seed")->required();
    sim->add_option("--out-dir", out_dir, "Existing output directory")->required();

    auto* check = app.add_subcommand("selfcheck", "Run geometry and cascade invariant checks");
    check->add_option("--cameras", cameras, "Camera rig file (JSON)")->required();
    check->add_option("--seed", seed, "Random seed")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (track->parsed()) return cmd_track(detections, cameras, config, mode, out);
        if (eval->parsed()) return cmd_eval(tracks, gt, out);
        if (sim->parsed()) return cmd_sim(spec, seed, out_dir);
        if (check->parsed()) return cmd_selfcheck(cameras, seed);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
