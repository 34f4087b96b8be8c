// canopy: stratify forest LiDAR point clouds into canopy layers, segment
// tree crowns per layer, and score the result against stem maps. Single
// binary with subcommands; see README for the file formats.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "canopy/canopy.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "1.0.0";

struct CommonOptions {
    canopy::PipelineConfig config;
    std::string out_dir = ".";
    bool print_config = false;
};

json config_to_json(const canopy::PipelineConfig& c) {
    json j;
    j["bin_width_m"] = c.bin_width_m;
    j["smooth_sigma_m"] = c.smooth_sigma_m;
    j["locale_factor"] = c.locale_factor;
    j["locale_min_radius_m"] = c.locale_min_radius_m;
    j["noise_min_width_m"] = c.noise_min_width_m;
    j["noise_min_height_m"] = c.noise_min_height_m;
    j["dsm_cell_m"] = c.dsm_cell_m;
    j["match_height_tol"] = c.match_height_tol;
    j["match_lean_tol_deg"] = c.match_lean_tol_deg;
    j["plot_buffer_m"] = c.plot_buffer_m;
    j["stratification_enabled"] = c.stratification_enabled;
    j["marker_min_height_m"] = c.marker_min_height_m;
    j["dsm_smooth"] = c.dsm_smooth;
    j["threads"] = c.threads;
    return j;
}

void add_config_flags(CLI::App* cmd, CommonOptions& opt) {
    auto& c = opt.config;
    cmd->add_option("--bin-width", c.bin_width_m,
                    "Height histogram bin width in meters")
        ->capture_default_str();
    cmd->add_option("--smooth-sigma", c.smooth_sigma_m,
                    "Gaussian smoothing sigma for locale histograms, meters")
        ->capture_default_str();
    cmd->add_option("--locale-factor", c.locale_factor,
                    "Locale radius as a multiple of the average footprint")
        ->capture_default_str();
    cmd->add_option("--locale-min-radius", c.locale_min_radius_m,
                    "Lower bound on the locale radius, meters")
        ->capture_default_str();
    cmd->add_option("--noise-min-width", c.noise_min_width_m,
                    "Crowns narrower than this average width are noise, meters")
        ->capture_default_str();
    cmd->add_option("--noise-min-height", c.noise_min_height_m,
                    "Crowns entirely below this height are noise, meters")
        ->capture_default_str();
    cmd->add_option("--dsm-cell", c.dsm_cell_m, "DSM cell size, meters")
        ->capture_default_str();
    cmd->add_option("--match-height-tol", c.match_height_tol,
                    "Maximum relative height difference for a crown/stem pair")
        ->capture_default_str();
    cmd->add_option("--match-lean-tol-deg", c.match_lean_tol_deg,
                    "Maximum apex lean from vertical for a pair, degrees")
        ->capture_default_str();
    cmd->add_option("--plot-buffer", c.plot_buffer_m,
                    "Plot buffer ring width, meters")
        ->capture_default_str();
    cmd->add_option("--threads", c.threads,
                    "Worker threads (0 = CANOPY_THREADS env or hardware)")
        ->capture_default_str();
    cmd->add_option("--out", opt.out_dir, "Output directory")->capture_default_str();
    cmd->add_flag("--print-config", opt.print_config,
                  "Print the effective configuration as JSON and exit");
}

// Every command drops a manifest next to its outputs: full config, seeds,
// input digests, output names. No timestamps, so reruns are byte-identical.
void write_manifest(const std::string& out_dir, const std::string& command,
                    const canopy::PipelineConfig& config,
                    const std::map<std::string, std::string>& inputs,
                    const std::vector<std::string>& outputs,
                    std::optional<std::uint64_t> seed = std::nullopt,
                    const json& extra = json::object()) {
    json manifest;
    manifest["tool"] = "canopy";
    manifest["version"] = kVersion;
    manifest["command"] = command;
    manifest["config"] = config_to_json(config);
    json in = json::object();
    for (const auto& [name, path] : inputs) {
        json entry;
        entry["path"] = path;
        char digest[32];
        std::snprintf(digest, sizeof(digest), "%016llx",
                      static_cast<unsigned long long>(canopy::fnv1a_digest(path)));
        entry["fnv1a"] = digest;
        in[name] = entry;
    }
    manifest["inputs"] = in;
    json out = json::array();
    for (const std::string& o : outputs) out.push_back(fs::path(o).filename().string());
    manifest["outputs"] = out;
    if (seed) manifest["seed"] = *seed;
    if (!extra.empty()) manifest["run"] = extra;

    const std::string path = (fs::path(out_dir) / "manifest.json").string();
    std::ofstream f(path);
    if (!f) throw canopy::IoError("cannot write manifest: " + path);
    f << manifest.dump(2) << '\n';
}

canopy::PointCloud load_cloud(const std::string& points_path,
                              const std::optional<std::string>& dem_path,
                              std::optional<double> area,
                              std::vector<std::uint32_t>* kept = nullptr) {
    canopy::PointCloud cloud = canopy::read_points(points_path, area);
    if (dem_path) {
        const canopy::DemRaster dem = canopy::read_esri_grid(*dem_path);
        return canopy::normalize_heights(cloud, dem, kept);
    }
    return canopy::drop_ground(cloud, kept);
}

canopy::StorySpec story_from_json(const json& j) {
    canopy::StorySpec s;
    s.count = j.value("count", 0);
    s.mean_height_m = j.value("mean_height_m", s.mean_height_m);
    s.height_sd_m = j.value("height_sd_m", s.height_sd_m);
    if (j.contains("height_min_m")) s.height_min_m = j["height_min_m"].get<double>();
    if (j.contains("height_max_m")) s.height_max_m = j["height_max_m"].get<double>();
    s.crown_base_ratio = j.value("crown_base_ratio", s.crown_base_ratio);
    if (j.contains("crown_base_m")) s.crown_base_m = j["crown_base_m"].get<double>();
    s.crown_radius_m = j.value("crown_radius_m", s.crown_radius_m);
    s.crown_radius_jitter_m = j.value("crown_radius_jitter_m", s.crown_radius_jitter_m);
    s.min_spacing_m = j.value("min_spacing_m", s.min_spacing_m);
    s.edge_margin_m = j.value("edge_margin_m", s.edge_margin_m);
    const std::string shape = j.value("shape", "cone");
    if (shape == "cone")
        s.shape = canopy::CrownShape::cone;
    else if (shape == "ellipsoid")
        s.shape = canopy::CrownShape::ellipsoid;
    else
        throw canopy::SchemaError("stand spec: unknown crown shape '" + shape + "'");
    return s;
}

struct StandFile {
    canopy::StandSpec spec;
    std::uint64_t seed = 1;
};

StandFile load_stand_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw canopy::IoError("cannot open stand spec: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw canopy::ParseError("stand spec: " + std::string(e.what()));
    }
    StandFile out;
    try {
        if (j.contains("extent")) {
            const json& e = j["extent"];
            out.spec.min_x = e.value("min_x", 0.0);
            out.spec.min_y = e.value("min_y", 0.0);
            out.spec.max_x = e.value("max_x", 30.0);
            out.spec.max_y = e.value("max_y", 30.0);
        }
        out.spec.pulse_density_pt_m2 =
            j.value("pulse_density_pt_m2", out.spec.pulse_density_pt_m2);
        out.spec.transmission = j.value("transmission", out.spec.transmission);
        if (j.contains("stories"))
            for (const json& s : j["stories"])
                out.spec.stories.push_back(story_from_json(s));
        out.seed = j.value("seed", out.seed);
    } catch (const json::exception& e) {
        throw canopy::SchemaError("stand spec: " + std::string(e.what()));
    }
    canopy::validate(out.spec);
    return out;
}

canopy::SimCloud run_synth(const canopy::StandSpec& spec, std::uint64_t seed,
                           const std::string& plot_id) {
    const std::vector<canopy::TreeSpec> stand = canopy::generate_stand(spec, seed * 2);
    canopy::SimCloud sim = canopy::sample_points(stand, spec, seed * 2 + 1);
    for (canopy::StemRecord& s : sim.stems) s.plot_id = plot_id;
    return sim;
}

std::ofstream open_out(const std::string& out_dir, const std::string& name,
                       std::vector<std::string>& written) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    const std::string path = (fs::path(out_dir) / name).string();
    std::ofstream out(path);
    if (!out) throw canopy::IoError("cannot write output file: " + path);
    written.push_back(path);
    return out;
}

// --- subcommand bodies ------------------------------------------------------

int cmd_stratify(const CommonOptions& opt, const std::string& points_path,
                 const std::optional<std::string>& dem_path,
                 std::optional<double> area) {
    const canopy::PointCloud cloud = load_cloud(points_path, dem_path, area);
    if (cloud.empty()) throw canopy::InvalidInputError("no non-ground points in input");
    const std::vector<canopy::CanopyLayer> layers =
        canopy::stratify(cloud, opt.config.stratify_params());

    std::vector<std::string> written;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        std::ofstream out =
            open_out(opt.out_dir, "layer_" + std::to_string(i + 1) + ".csv", written);
        canopy::write_points(layers[i].points, out);
    }
    {
        std::ofstream out = open_out(opt.out_dir, "layer_stats.csv", written);
        canopy::write_layer_stats(layers, out);
    }

    std::map<std::string, std::string> inputs{{"points", points_path}};
    if (dem_path) inputs["dem"] = *dem_path;
    write_manifest(opt.out_dir, "stratify", opt.config, inputs, written);
    std::cout << layers.size() << " layer(s) -> " << opt.out_dir << "\n";
    return 0;
}

int cmd_segment(const CommonOptions& opt, const std::string& points_path,
                const std::optional<std::string>& dem_path, std::optional<double> area,
                bool assignments) {
    canopy::PointCloud cloud = canopy::read_points(points_path, area);
    std::optional<canopy::DemRaster> dem;
    if (dem_path) dem = canopy::read_esri_grid(*dem_path);
    const canopy::SegmentationResult result =
        canopy::segment_trees(cloud, dem, opt.config);

    std::vector<std::string> written;
    {
        std::ofstream out = open_out(opt.out_dir, "crowns.csv", written);
        canopy::write_crowns(result.crowns, out);
    }
    {
        std::ofstream out = open_out(opt.out_dir, "layer_stats.csv", written);
        canopy::write_layer_stats(result.layers, out);
    }
    if (assignments) {
        std::ofstream out = open_out(opt.out_dir, "assignments.csv", written);
        canopy::write_assignments(result.crowns, out);
    }

    std::map<std::string, std::string> inputs{{"points", points_path}};
    if (dem_path) inputs["dem"] = *dem_path;
    json extra;
    extra["dropped_noise_crowns"] = result.dropped_noise_count;
    write_manifest(opt.out_dir, "segment", opt.config, inputs, written, std::nullopt,
                   extra);
    std::cout << result.crowns.size() << " crown(s) in " << result.layers.size()
              << " layer(s) -> " << opt.out_dir << "\n";
    return 0;
}

int cmd_evaluate(const CommonOptions& opt, const std::string& crowns_path,
                 const std::string& stems_path, std::optional<double> center_x,
                 std::optional<double> center_y, double radius) {
    const std::vector<canopy::Crown> crowns = canopy::read_crowns(crowns_path);
    const std::vector<canopy::StemRecord> stems = canopy::read_stems(stems_path);

    std::map<std::string, std::vector<canopy::StemRecord>> by_plot;
    for (const canopy::StemRecord& s : stems) by_plot[s.plot_id].push_back(s);
    if (by_plot.empty()) by_plot["plot"] = {};

    std::vector<canopy::MatchReport> reports;
    for (auto& [plot_id, plot_stems] : by_plot) {
        canopy::PlotSpec plot;
        plot.radius_m = radius;
        plot.buffer_m = opt.config.plot_buffer_m;
        if (center_x && center_y) {
            plot.center_x = *center_x;
            plot.center_y = *center_y;
        } else if (!plot_stems.empty()) {
            for (const canopy::StemRecord& s : plot_stems) {
                plot.center_x += s.x;
                plot.center_y += s.y;
            }
            plot.center_x /= static_cast<double>(plot_stems.size());
            plot.center_y /= static_cast<double>(plot_stems.size());
        }
        canopy::MatchReport report =
            canopy::evaluate_plot(crowns, plot_stems, plot, opt.config.match_height_tol,
                                  opt.config.match_lean_tol_deg);
        report.plot_id = plot_id;
        reports.push_back(std::move(report));
    }

    std::vector<std::string> written;
    for (const canopy::MatchReport& r : reports) {
        std::ofstream out = open_out(opt.out_dir, "match_" + r.plot_id + ".csv", written);
        canopy::write_match_report(r, out);
    }
    {
        std::ofstream out = open_out(opt.out_dir, "aggregate_summary.csv", written);
        canopy::write_aggregate_summary(canopy::aggregate_reports(reports), out);
    }

    write_manifest(opt.out_dir, "evaluate", opt.config,
                   {{"crowns", crowns_path}, {"stems", stems_path}}, written);
    std::cout << reports.size() << " plot report(s) -> " << opt.out_dir << "\n";
    return 0;
}

int cmd_synth(const CommonOptions& opt, const std::string& spec_path,
              std::optional<std::uint64_t> seed_override) {
    StandFile stand_file = load_stand_spec(spec_path);
    const std::uint64_t seed = seed_override.value_or(stand_file.seed);
    const canopy::SimCloud sim = run_synth(stand_file.spec, seed, "synth");

    std::vector<std::string> written;
    {
        std::ofstream out = open_out(opt.out_dir, "points.csv", written);
        canopy::write_points(sim.cloud, out);
    }
    {
        std::ofstream out = open_out(opt.out_dir, "stems.csv", written);
        canopy::write_stems(sim.stems, out);
    }
    write_manifest(opt.out_dir, "synth", opt.config, {{"spec", spec_path}}, written,
                   seed);
    std::cout << sim.cloud.size() << " points, " << sim.stems.size() << " stems -> "
              << opt.out_dir << "\n";
    return 0;
}

int cmd_run(const CommonOptions& opt, const std::string& spec_path, int replicates,
            std::optional<std::uint64_t> seed_override) {
    if (replicates < 1)
        throw canopy::InvalidInputError("run: replicates must be at least 1");
    StandFile stand_file = load_stand_spec(spec_path);
    const std::uint64_t base_seed = seed_override.value_or(stand_file.seed);
    const canopy::StandSpec& spec = stand_file.spec;

    canopy::PlotSpec plot;
    plot.center_x = 0.5 * (spec.min_x + spec.max_x);
    plot.center_y = 0.5 * (spec.min_y + spec.max_y);
    plot.radius_m = 0.5 * std::hypot(spec.width(), spec.height()) + 1.0;
    plot.buffer_m = opt.config.plot_buffer_m;

    canopy::PipelineConfig stratified_cfg = opt.config;
    stratified_cfg.stratification_enabled = true;
    canopy::PipelineConfig baseline_cfg = opt.config;
    baseline_cfg.stratification_enabled = false;

    std::vector<canopy::MatchReport> baseline_reports, stratified_reports;
    for (int rep = 0; rep < replicates; ++rep) {
        char plot_id[32];
        std::snprintf(plot_id, sizeof(plot_id), "synth-%03d", rep);
        const canopy::SimCloud sim = run_synth(spec, base_seed + rep, plot_id);
        for (const auto* cfg : {&baseline_cfg, &stratified_cfg}) {
            const canopy::SegmentationResult seg =
                canopy::segment_trees(sim.cloud, std::nullopt, *cfg);
            canopy::MatchReport report = canopy::evaluate_plot(
                seg.crowns, sim.stems, plot, cfg->match_height_tol,
                cfg->match_lean_tol_deg);
            report.plot_id = plot_id;
            (cfg->stratification_enabled ? stratified_reports : baseline_reports)
                .push_back(std::move(report));
        }
    }

    std::vector<std::string> written;
    {
        std::ofstream out = open_out(opt.out_dir, "aggregate_baseline.csv", written);
        canopy::write_aggregate_summary(canopy::aggregate_reports(baseline_reports), out);
    }
    {
        std::ofstream out = open_out(opt.out_dir, "aggregate_stratified.csv", written);
        canopy::write_aggregate_summary(canopy::aggregate_reports(stratified_reports),
                                        out);
    }
    const std::vector<canopy::ComparisonRow> rows =
        canopy::compare_reports(baseline_reports, stratified_reports);
    {
        std::ofstream out = open_out(opt.out_dir, "comparison.csv", written);
        canopy::write_comparison(rows, out);
    }

    json extra;
    extra["replicates"] = replicates;
    extra["plot_radius_m"] = plot.radius_m;
    write_manifest(opt.out_dir, "run", opt.config, {{"spec", spec_path}}, written,
                   base_seed, extra);

    for (const canopy::ComparisonRow& r : rows)
        std::cout << r.group << ' ' << r.metric << ": baseline " << canopy::fmt_g6(r.mean_a)
                  << " stratified " << canopy::fmt_g6(r.mean_b) << " (delta "
                  << canopy::fmt_g6(r.mean_delta_pp) << " pp over " << r.samples
                  << " plots)\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Canopy layer stratification and tree crown segmentation for "
                 "forest LiDAR point clouds"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    CommonOptions opt;

    // stratify
    std::string points_path, dem_path, crowns_path, stems_path, spec_path;
    std::optional<double> area, center_x, center_y;
    double radius = canopy::PlotSpec::default_radius();
    bool assignments = false;
    bool no_stratify = false;
    int replicates = 8;
    std::optional<std::uint64_t> seed;

    auto add_area = [&](CLI::App* cmd) {
        cmd->add_option("--area", area,
                        "Horizontal area override in m^2 (default: bounding box)");
    };

    CLI::App* s_strat = app.add_subcommand("stratify",
                                           "Split a point cloud into canopy layers");
    s_strat->add_option("--points", points_path, "Input point file")->required();
    s_strat->add_option("--dem", dem_path,
                        "Ground DEM (ESRI ASCII); omit if z is already height above "
                        "ground");
    add_area(s_strat);
    add_config_flags(s_strat, opt);

    CLI::App* s_seg = app.add_subcommand("segment", "Segment individual tree crowns");
    s_seg->add_option("--points", points_path, "Input point file")->required();
    s_seg->add_option("--dem", dem_path, "Ground DEM (ESRI ASCII)");
    add_area(s_seg);
    s_seg->add_flag("--assignments", assignments, "Also write per-point crown ids");
    s_seg->add_flag("--no-stratify", no_stratify,
                    "Run the surface-model baseline without canopy stratification");
    add_config_flags(s_seg, opt);

    CLI::App* s_eval = app.add_subcommand("evaluate",
                                          "Match crowns against a field stem map");
    s_eval->add_option("--crowns", crowns_path, "Crown table from 'segment'")->required();
    s_eval->add_option("--stems", stems_path, "Stem map file")->required();
    s_eval->add_option("--center-x", center_x, "Plot center x (default: stem centroid)");
    s_eval->add_option("--center-y", center_y, "Plot center y (default: stem centroid)");
    s_eval->add_option("--radius", radius, "Plot radius in meters")
        ->capture_default_str();
    add_config_flags(s_eval, opt);

    CLI::App* s_synth = app.add_subcommand("synth",
                                           "Generate a synthetic stand and its stem map");
    s_synth->add_option("--spec", spec_path, "Stand spec (JSON)")->required();
    s_synth->add_option("--seed", seed, "Seed override");
    add_config_flags(s_synth, opt);

    CLI::App* s_run = app.add_subcommand(
        "run", "Synthetic end-to-end comparison: synth -> segment (both modes) -> "
               "evaluate -> aggregate");
    s_run->add_option("--spec", spec_path, "Stand spec (JSON)")->required();
    s_run->add_option("--replicates", replicates, "Number of seeded replicate stands")
        ->capture_default_str();
    s_run->add_option("--seed", seed, "Base seed override");
    add_config_flags(s_run, opt);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help/--version
        app.exit(e);
        return 1;
    }

    opt.config.stratification_enabled = !no_stratify;

    if (opt.print_config) {
        std::cout << config_to_json(opt.config).dump(2) << "\n";
        return 0;
    }

    try {
        if (s_strat->parsed())
            return cmd_stratify(opt, points_path,
                                dem_path.empty() ? std::nullopt
                                                 : std::optional<std::string>(dem_path),
                                area);
        if (s_seg->parsed())
            return cmd_segment(opt, points_path,
                               dem_path.empty() ? std::nullopt
                                                : std::optional<std::string>(dem_path),
                               area, assignments);
        if (s_eval->parsed())
            return cmd_evaluate(opt, crowns_path, stems_path, center_x, center_y, radius);
        if (s_synth->parsed()) return cmd_synth(opt, spec_path, seed);
        if (s_run->parsed()) return cmd_run(opt, spec_path, replicates, seed);
    } catch (const canopy::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const canopy::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const canopy::SchemaError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const canopy::InvalidInputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const canopy::OutOfBoundsError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const canopy::GenerationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
