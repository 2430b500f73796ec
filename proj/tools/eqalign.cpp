// eqalign command-line front end.
//
// Exit codes: 0 success, 1 runtime failure (gateway, solver, I/O), 2 usage or validation error.

#include <fmt/format.h>

#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "eqalign/augment.hpp"
#include "eqalign/beosonic.hpp"
#include "eqalign/dataset.hpp"
#include "eqalign/density.hpp"
#include "eqalign/error.hpp"
#include "eqalign/eval.hpp"
#include "eqalign/gateway.hpp"
#include "eqalign/io.hpp"
#include "eqalign/run_config.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace eqalign;

namespace {

int cmd_validate(const fs::path& path, bool as_json) {
    const Dataset ds = load_dataset(path);
    const PromptStats s = prompt_stats(ds);
    if (as_json) {
        json j = {{"total_prompts", s.total_prompts},
                  {"total_annotations", s.total_annotations},
                  {"vocab_size", s.vocab_size},
                  {"avg_words_per_prompt", s.avg_words_per_prompt},
                  {"gv_avg", s.gv_avg},
                  {"gv_min", s.gv_min},
                  {"gv_max", s.gv_max}};
        std::cout << j.dump(2) << '\n';
        return 0;
    }
    std::cout << fmt::format("{:<28}{:>10}\n", "Total prompts", s.total_prompts)
              << fmt::format("{:<28}{:>10}\n", "Total annotations", s.total_annotations)
              << fmt::format("{:<28}{:>10}\n", "Vocabulary size", s.vocab_size)
              << fmt::format("{:<28}{:>10.2f}\n", "Avg. words per prompt", s.avg_words_per_prompt)
              << fmt::format("{:<28}{:>10.2f}\n", "Avg. generalized variance", s.gv_avg)
              << fmt::format("{:<28}{:>10.2f}\n", "Min. generalized variance", s.gv_min)
              << fmt::format("{:<28}{:>10.2f}\n", "Max. generalized variance", s.gv_max);
    return 0;
}

int cmd_split(const fs::path& path, const SplitSpec& spec, const fs::path& out_dir) {
    const Dataset ds = load_dataset(path);
    const auto [train, val, test] = split_dataset(ds, spec);
    fs::create_directories(out_dir);
    save_dataset(train, out_dir / "train.json");
    save_dataset(val, out_dir / "val.json");
    save_dataset(test, out_dir / "test.json");
    std::cout << fmt::format("train {} / val {} / test {} -> {}\n", train.entries.size(), val.entries.size(),
                             test.entries.size(), out_dir.string());
    return 0;
}

int cmd_augment(const fs::path& train_path, const fs::path& dict_path, const AugmentConfig& cfg, const fs::path& out) {
    const Dataset train = load_dataset(train_path);
    const SynonymDict dict = load_synonyms(dict_path);
    const Dataset aug = augment_prompts(train, dict, cfg);
    save_dataset(aug, out);
    std::cout << fmt::format("{} entries -> {} entries ({:.2f}x)\n", train.entries.size(), aug.entries.size(),
                             static_cast<double>(aug.entries.size()) / static_cast<double>(train.entries.size()));
    return 0;
}

int cmd_render(double x, double y, const fs::path& out, const std::string& format, const FreqGrid& grid) {
    CurveFormat f;
    if (format == "csv") f = CurveFormat::Csv;
    else if (format == "svg") f = CurveFormat::Svg;
    else throw validation_error(fmt::format("unknown format '{}' (csv, svg)", format));
    const auto curve = frequency_response(make_coord(x, y), grid);
    io::write_atomic(out, render_curve(curve, f));
    return 0;
}

std::vector<BeoCoord> read_points(const fs::path& path) {
    const json j = json::parse(io::read_file(path), nullptr, false);
    if (j.is_discarded()) throw validation_error(fmt::format("{}: not valid JSON", path.string()));
    // Either a bare [[x, y], ...] list or {"points": [[x, y], ...]}.
    const json& arr = j.is_object() && j.contains("points") ? j.at("points") : j;
    if (!arr.is_array()) throw validation_error(fmt::format("{}: expected an array of [x, y] pairs", path.string()));
    std::vector<BeoCoord> pts;
    for (const auto& p : arr) {
        if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
            throw validation_error(fmt::format("{}: every point must be [x, y]", path.string()));
        }
        pts.push_back(make_coord(p[0].get<double>(), p[1].get<double>()));
    }
    return pts;
}

int cmd_density(const fs::path& in, bool reflect, const fs::path& out, std::size_t resolution,
                const std::vector<double>& bandwidth, double scale) {
    const auto pts = read_points(in);
    KdeConfig cfg;
    cfg.reflect = reflect;
    cfg.resolution = resolution;
    cfg.bandwidth_scale = scale;
    if (!bandwidth.empty()) {
        if (bandwidth.size() != 2) throw validation_error("--bandwidth takes two values: hx hy");
        cfg.bandwidth = std::pair{bandwidth[0], bandwidth[1]};
    }
    const auto g = kde(pts, cfg);
    std::ostringstream os;
    write_grid_csv(g, os);
    io::write_atomic(out, os.str());
    std::cout << fmt::format("{} points, {} local maxima, grid {}x{} -> {}\n", pts.size(), count_local_maxima(g),
                             g.resolution, g.resolution, out.string());
    return 0;
}

int cmd_eval(const fs::path& config, const std::string& metric, const std::string& mode, const fs::path& out) {
    RunConfig cfg = load_run_config(config);
    if (!metric.empty()) cfg.metric.metric = parse_metric(metric);
    if (!mode.empty()) cfg.gateway.mode = parse_gateway_mode(mode);
    const fs::path dir = !out.empty() ? out : cfg.out_dir;
    if (dir.empty()) throw validation_error("no output directory (use --out or set out_dir in the config)");
    const RunOutput res = execute_run(cfg);
    write_run(res, dir);
    std::vector<double> d;
    for (const auto& p : res.run.per_prompt) {
        if (p.ok()) d.push_back(p.distance);
    }
    const auto b = boxplot_summary(d);
    std::cout << fmt::format("{}: {} prompts, {} errors, median {} ({}) -> {}\n", res.run.name, res.run.per_prompt.size(),
                             res.run.error_count(), io::format_double(b.median), to_string(res.run.metric), dir.string());
    return 0;
}

int cmd_compare(const std::vector<fs::path>& dirs, const fs::path& out) {
    if (dirs.size() < 2) throw validation_error("compare needs at least 2 run directories");
    std::vector<EvalRun> runs;
    for (const auto& d : dirs) {
        EvalRun r = read_run_distances(d / "distances.csv");
        const fs::path manifest = d / "run.json";
        if (fs::exists(manifest)) {
            const json m = json::parse(io::read_file(manifest), nullptr, false);
            if (m.is_discarded()) throw validation_error(fmt::format("{}: not valid JSON", manifest.string()));
            r.metric = parse_metric(m.value("metric", "w1"));
            r.recommender = m.value("recommender", r.name);
        }
        runs.push_back(std::move(r));
    }
    for (std::size_t i = 1; i < runs.size(); ++i) {
        if (runs[i].metric != runs[0].metric) {
            throw validation_error(fmt::format("runs use different metrics ({} vs {})", to_string(runs[0].metric),
                                               to_string(runs[i].metric)));
        }
    }
    // Same run passed twice (or two runs sharing a name) still needs distinct labels.
    for (std::size_t i = 0; i < runs.size(); ++i) {
        int dup = 1;
        for (std::size_t j = 0; j < i; ++j) {
            if (runs[j].name == runs[i].name) ++dup;
        }
        if (dup > 1) runs[i].name += fmt::format("#{}", dup);
    }
    const TestReport rep = compare(runs);
    emit_report(rep, runs, out);
    std::cout << fmt::format("Kruskal-Wallis H = {:.4f}, p = {:.4g} over {} prompts\n", rep.kw_h, rep.kw_p,
                             rep.prompt_ids.size());
    for (std::size_t a = 0; a < runs.size(); ++a) {
        for (std::size_t b = a + 1; b < runs.size(); ++b) {
            std::cout << fmt::format("  {} vs {}: p = {:.4g}\n", runs[a].name, runs[b].name, rep.dunn_p[a][b]);
        }
    }
    std::cout << fmt::format("report -> {}\n", out.string());
    return 0;
}

int cmd_cassette_verify(const fs::path& path) {
    Cassette c;
    c.load(path);
    const auto bad = c.verify();
    if (!bad.empty()) {
        std::cerr << fmt::format("{}: {} of {} records have a stale hash (first at record {})\n", path.string(), bad.size(),
                                 c.size(), bad.front() + 1);
        return 2;
    }
    std::cout << fmt::format("{}: {} records, all hashes match\n", path.string(), c.size());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Distributional EQ recommendation: datasets, transport metrics, evaluation"};
    app.require_subcommand(1);

    std::string dataset_path;
    bool as_json = false;
    auto* validate = app.add_subcommand("validate", "Check a dataset file and print its prompt statistics");
    validate->add_option("dataset", dataset_path, "Dataset JSON")->required();
    validate->add_flag("--json", as_json, "Machine-readable output");

    SplitSpec spec;
    std::string split_out = "splits";
    auto* split = app.add_subcommand("split", "Seeded train/val/test split");
    split->add_option("dataset", dataset_path, "Dataset JSON")->required();
    split->add_option("--train", spec.train_n, "Train size")->capture_default_str();
    split->add_option("--val", spec.val_n, "Validation size")->capture_default_str();
    split->add_option("--test", spec.test_n, "Test size")->capture_default_str();
    split->add_option("--seed", spec.seed, "Shuffle seed")->capture_default_str();
    split->add_option("--out-dir", split_out, "Directory for train/val/test.json")->capture_default_str();

    std::string train_path, dict_path, aug_out;
    AugmentConfig acfg;
    auto* augment = app.add_subcommand("augment", "Synonym variants with blurred labels");
    augment->add_option("--train", train_path, "Train split JSON")->required();
    augment->add_option("--dict", dict_path, "Synonym dictionary JSON")->required();
    augment->add_option("--factor", acfg.target_factor, "Variants per entry (upper bound)")->capture_default_str();
    augment->add_option("--blur", acfg.max_blur_db, "Max label blur in dB")->capture_default_str();
    augment->add_option("--seed", acfg.seed, "Seed")->capture_default_str();
    augment->add_option("--out", aug_out, "Output dataset JSON")->required();

    double rx = 0.0, ry = 0.0;
    std::string render_out, render_fmt = "csv";
    FreqGrid grid;
    auto* render = app.add_subcommand("render-eq", "Gain curve for a controller setting");
    render->add_option("--x", rx, "Smile weight in dB")->required();
    render->add_option("--y", ry, "Tilt weight in dB")->required();
    render->add_option("--out", render_out, "Output file")->required();
    render->add_option("--format", render_fmt, "csv or svg")->capture_default_str();
    render->add_option("--f-min", grid.f_min, "Lowest frequency (Hz)")->capture_default_str();
    render->add_option("--f-max", grid.f_max, "Highest frequency (Hz)")->capture_default_str();
    render->add_option("--points", grid.n_points, "Number of log-spaced frequencies")->capture_default_str();

    std::string dens_in, dens_out;
    bool reflect = false;
    std::size_t resolution = 32;
    std::vector<double> bandwidth;
    double scale = 1.0;
    auto* density = app.add_subcommand("density", "Grid KDE of a point set as row,col,prob CSV");
    density->add_option("--in", dens_in, "Points JSON ([[x, y], ...])")->required();
    density->add_flag("--reflect", reflect, "Mirror points across the square's edges");
    density->add_option("--out", dens_out, "Output CSV")->required();
    density->add_option("--resolution", resolution, "Grid cells per side")->capture_default_str();
    density->add_option("--bandwidth", bandwidth, "hx hy (default: Scott's rule)")->expected(2);
    density->add_option("--scale", scale, "Bandwidth multiplier")->capture_default_str();

    std::string config_path, metric, gateway_mode, eval_out;
    auto* eval = app.add_subcommand("eval", "Evaluate a recommender on the test split");
    eval->add_option("--config", config_path, "Run config JSON")->required();
    eval->add_option("--metric", metric, "Override metric: w1, reflective-w1, sinkhorn, sliced-w1");
    eval->add_option("--gateway-mode", gateway_mode, "Override gateway mode: live, record, replay, stub");
    eval->add_option("--out", eval_out, "Output directory (overrides out_dir)");

    std::vector<std::string> run_dirs;
    std::string compare_out = "compare";
    auto* cmp = app.add_subcommand("compare", "Significance tests and boxplot across runs");
    cmp->add_option("runs", run_dirs, "Run directories written by eval")->required();
    cmp->add_option("--out", compare_out, "Report directory")->capture_default_str();

    std::string cassette_path;
    auto* cassette = app.add_subcommand("cassette", "Cassette utilities");
    cassette->require_subcommand(1);
    auto* verify = cassette->add_subcommand("verify", "Recompute every request hash");
    verify->add_option("file", cassette_path, "Cassette JSONL")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*validate) return cmd_validate(dataset_path, as_json);
        if (*split) return cmd_split(dataset_path, spec, split_out);
        if (*augment) return cmd_augment(train_path, dict_path, acfg, aug_out);
        if (*render) return cmd_render(rx, ry, render_out, render_fmt, grid);
        if (*density) return cmd_density(dens_in, reflect, dens_out, resolution, bandwidth, scale);
        if (*eval) return cmd_eval(config_path, metric, gateway_mode, eval_out);
        if (*cmp) {
            std::vector<fs::path> dirs(run_dirs.begin(), run_dirs.end());
            return cmd_compare(dirs, compare_out);
        }
        if (*verify) return cmd_cassette_verify(cassette_path);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.kind() == ErrorKind::Validation ? 2 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
