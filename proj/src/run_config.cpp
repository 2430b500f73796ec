#include "eqalign/run_config.hpp"

#include <fmt/format.h>

#include "eqalign/error.hpp"
#include "eqalign/io.hpp"
#include "eqalign/prompts.hpp"
#include "eqalign/recommend.hpp"

namespace eqalign {

using nlohmann::json;

namespace {

template <class T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw validation_error(fmt::format("config field '{}' has the wrong type", key));
    }
}

const json& section(const json& j, const char* key) {
    static const json empty = json::object();
    if (!j.contains(key)) return empty;
    if (!j.at(key).is_object()) throw validation_error(fmt::format("config section '{}' must be an object", key));
    return j.at(key);
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    if (p.empty()) return {};
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

void reject_unknown(const json& j, std::initializer_list<const char*> allowed, const char* where) {
    for (const auto& [k, v] : j.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || k == a;
        if (!ok) throw validation_error(fmt::format("unknown field '{}' in {}", k, where));
    }
}

}  // namespace

void RunConfig::validate() const {
    if (dataset.empty()) throw validation_error("config needs a dataset path");
    metric.validate();
    static const char* names[] = {"oracle", "random", "preset", "text2beosonic", "static_icl", "rag", "rag_qa"};
    if (std::find(std::begin(names), std::end(names), recommender.name) == std::end(names)) {
        throw validation_error(fmt::format("unknown recommender '{}'", recommender.name));
    }
    if (recommender.n_samples == 0) throw validation_error("n_samples must be >= 1");
    if (gateway.mode == GatewayMode::Replay && gateway.cassette.empty()) {
        throw validation_error("replay mode needs a cassette path");
    }
    if (gateway.mode == GatewayMode::Replay && !std::filesystem::exists(gateway.cassette)) {
        throw validation_error(fmt::format("cassette not found: {}", gateway.cassette.string()));
    }
}

RunConfig parse_run_config(const json& j, const std::filesystem::path& base_dir) {
    if (!j.is_object()) throw validation_error("config must be a JSON object");
    reject_unknown(j, {"dataset", "split", "metric", "recommender", "gateway", "seed", "run_name", "out_dir"}, "config");
    RunConfig c;
    c.dataset = resolve(base_dir, get_or<std::string>(j, "dataset", ""));
    c.seed = get_or<std::uint64_t>(j, "seed", 0);
    c.run_name = get_or<std::string>(j, "run_name", "");
    c.out_dir = resolve(base_dir, get_or<std::string>(j, "out_dir", ""));

    const auto& s = section(j, "split");
    reject_unknown(s, {"train", "val", "test", "seed"}, "split");
    c.split.train_n = get_or<std::size_t>(s, "train", c.split.train_n);
    c.split.val_n = get_or<std::size_t>(s, "val", c.split.val_n);
    c.split.test_n = get_or<std::size_t>(s, "test", c.split.test_n);
    c.split.seed = get_or<std::uint64_t>(s, "seed", c.split.seed);

    const auto& m = section(j, "metric");
    reject_unknown(m, {"name", "resolution", "bandwidth", "bandwidth_scale", "min_bandwidth", "epsilon", "max_iters",
                       "tolerance", "cost_power", "projections", "projection_seed"},
                   "metric");
    c.metric.metric = parse_metric(get_or<std::string>(m, "name", "w1"));
    c.metric.kde.resolution = get_or<std::size_t>(m, "resolution", c.metric.kde.resolution);
    if (m.contains("bandwidth")) {
        const auto& bw = m.at("bandwidth");
        if (bw.is_string() && bw.get<std::string>() == "scott") {
            c.metric.kde.bandwidth.reset();
        } else if (bw.is_array() && bw.size() == 2 && bw[0].is_number() && bw[1].is_number()) {
            c.metric.kde.bandwidth = std::pair{bw[0].get<double>(), bw[1].get<double>()};
        } else {
            throw validation_error("metric.bandwidth must be \"scott\" or [hx, hy]");
        }
    }
    c.metric.kde.bandwidth_scale = get_or<double>(m, "bandwidth_scale", c.metric.kde.bandwidth_scale);
    c.metric.kde.min_bandwidth = get_or<double>(m, "min_bandwidth", c.metric.kde.min_bandwidth);
    c.metric.sinkhorn.epsilon = get_or<double>(m, "epsilon", c.metric.sinkhorn.epsilon);
    c.metric.sinkhorn.max_iters = get_or<std::size_t>(m, "max_iters", c.metric.sinkhorn.max_iters);
    c.metric.sinkhorn.tolerance = get_or<double>(m, "tolerance", c.metric.sinkhorn.tolerance);
    c.metric.sinkhorn.cost_power = get_or<int>(m, "cost_power", c.metric.sinkhorn.cost_power);
    c.metric.projections = get_or<std::size_t>(m, "projections", c.metric.projections);
    c.metric.projection_seed = get_or<std::uint64_t>(m, "projection_seed", c.metric.projection_seed);

    const auto& r = section(j, "recommender");
    reject_unknown(r, {"name", "n_samples", "k", "static_examples", "sigma", "model", "temperature", "max_tokens",
                       "retries", "qa_predictions"},
                   "recommender");
    c.recommender.name = get_or<std::string>(r, "name", c.recommender.name);
    c.recommender.n_samples = get_or<std::size_t>(r, "n_samples", c.recommender.n_samples);
    c.recommender.k = get_or<std::size_t>(r, "k", c.recommender.k);
    c.recommender.static_examples = get_or<std::size_t>(r, "static_examples", c.recommender.static_examples);
    c.recommender.sigma = get_or<double>(r, "sigma", c.recommender.sigma);
    auto& st = c.recommender.strategy;
    st.model = get_or<std::string>(r, "model", st.model);
    st.temperature = get_or<double>(r, "temperature", st.temperature);
    st.max_tokens = get_or<std::size_t>(r, "max_tokens", st.max_tokens);
    st.retries = get_or<std::size_t>(r, "retries", st.retries);
    st.qa_predictions = get_or<std::size_t>(r, "qa_predictions", st.qa_predictions);

    const auto& g = section(j, "gateway");
    reject_unknown(g, {"mode", "cassette", "max_in_flight", "embedding_model", "timeout_s", "base_url"}, "gateway");
    c.gateway.mode = parse_gateway_mode(get_or<std::string>(g, "mode", "stub"));
    c.gateway.cassette = resolve(base_dir, get_or<std::string>(g, "cassette", ""));
    c.gateway.max_in_flight = get_or<std::size_t>(g, "max_in_flight", c.gateway.max_in_flight);
    c.gateway.embedding_model = get_or<std::string>(g, "embedding_model", c.gateway.embedding_model);
    c.gateway.timeout_s = get_or<double>(g, "timeout_s", c.gateway.timeout_s);
    c.gateway.base_url = get_or<std::string>(g, "base_url", "");
    if (c.run_name.empty()) c.run_name = c.recommender.name;
    return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    const json j = json::parse(io::read_file(path), nullptr, false);
    if (j.is_discarded()) throw validation_error(fmt::format("{}: not valid JSON", path.string()));
    auto c = parse_run_config(j, path.parent_path());
    c.source = path;
    return c;
}

namespace {

bool needs_gateway(const std::string& name) {
    return name != "oracle" && name != "random" && name != "preset";
}

json config_snapshot(const RunConfig& c) {
    json m = {{"name", to_string(c.metric.metric)},
              {"resolution", c.metric.kde.resolution},
              {"bandwidth_scale", c.metric.kde.bandwidth_scale},
              {"min_bandwidth", c.metric.kde.min_bandwidth},
              {"epsilon", c.metric.sinkhorn.epsilon},
              {"max_iters", c.metric.sinkhorn.max_iters},
              {"tolerance", c.metric.sinkhorn.tolerance},
              {"cost_power", c.metric.sinkhorn.cost_power},
              {"projections", c.metric.projections},
              {"projection_seed", c.metric.projection_seed}};
    if (c.metric.kde.bandwidth) m["bandwidth"] = {c.metric.kde.bandwidth->first, c.metric.kde.bandwidth->second};
    else m["bandwidth"] = "scott";
    const auto& r = c.recommender;
    return {{"split", {{"train", c.split.train_n}, {"val", c.split.val_n}, {"test", c.split.test_n}, {"seed", c.split.seed}}},
            {"metric", m},
            {"recommender",
             {{"name", r.name},
              {"n_samples", r.n_samples},
              {"k", r.k},
              {"static_examples", r.static_examples},
              {"sigma", r.sigma},
              {"model", r.strategy.model},
              {"temperature", r.strategy.temperature},
              {"max_tokens", r.strategy.max_tokens},
              {"retries", r.strategy.retries},
              {"qa_predictions", r.strategy.qa_predictions}}},
            {"gateway", {{"mode", to_string(c.gateway.mode)}, {"embedding_model", c.gateway.embedding_model}}},
            {"seed", c.seed}};
}

}  // namespace

RunOutput execute_run(const RunConfig& cfg) {
    cfg.validate();
    const Dataset ds = load_dataset(cfg.dataset);
    const auto [train, val, test] = split_dataset(ds, cfg.split);

    std::unique_ptr<Gateway> gw;
    if (needs_gateway(cfg.recommender.name)) gw = std::make_unique<Gateway>(cfg.gateway);

    std::unique_ptr<Recommender> rec;
    const auto& r = cfg.recommender;
    if (r.name == "oracle") {
        rec = make_oracle_replay(ds);
    } else if (r.name == "random") {
        rec = make_random_gaussian(r.sigma);
    } else if (r.name == "preset") {
        rec = static_preset_baseline(train);
    } else if (r.name == "text2beosonic") {
        rec = make_text2beosonic(ExpertMapping::builtin(), *gw, r.strategy);
    } else if (r.name == "static_icl") {
        std::vector<Example> ex;
        for (std::size_t i = 0; i < std::min(r.static_examples, train.entries.size()); ++i) {
            ex.emplace_back(train.entries[i].prompt, train.entries[i].responses);
        }
        rec = make_static_icl(std::move(ex), *gw, r.strategy);
    } else {
        auto index = build_index(train, embedder_of(*gw));
        rec = r.name == "rag" ? make_rag(std::move(index), r.k, *gw, r.strategy)
                              : make_rag_qa(std::move(index), r.k, *gw, r.strategy);
    }

    EvalOptions opts;
    opts.n_samples = r.n_samples;
    opts.seed = cfg.seed;
    // A replay must reproduce the recording exactly, so any failure is fatal.
    if (cfg.gateway.mode == GatewayMode::Replay) opts.max_error_fraction = 0.0;
    RunOutput out;
    out.run = evaluate(*rec, test, cfg.metric, opts);
    out.run.name = cfg.run_name;
    if (gw) gw->flush();

    json hashes = {{"dataset", io::sha256_file(cfg.dataset)}};
    hashes["config"] = cfg.source.empty() ? json(nullptr) : json(io::sha256_file(cfg.source));
    hashes["cassette"] = (!cfg.gateway.cassette.empty() && std::filesystem::exists(cfg.gateway.cassette))
                             ? json(io::sha256_file(cfg.gateway.cassette))
                             : json(nullptr);
    json tpl = json::object();
    for (const auto& name : prompts::template_names()) tpl[name] = io::sha256_hex(prompts::template_text(name));
    hashes["templates"] = tpl;

    json errors = json::array();
    for (const auto& p : out.run.per_prompt) {
        if (!p.ok()) errors.push_back({{"prompt_id", p.id}, {"error", p.error}});
    }
    out.manifest = {{"run_name", out.run.name},
                    {"recommender", out.run.recommender},
                    {"metric", to_string(out.run.metric)},
                    {"n_samples", out.run.n_samples},
                    {"seed", out.run.seed},
                    {"test_prompts", out.run.per_prompt.size()},
                    {"errors", errors},
                    {"template_version", std::string(prompts::kTemplateVersion)},
                    {"config", config_snapshot(cfg)},
                    {"hashes", hashes}};
    return out;
}

void write_run(const RunOutput& out, const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw io_error(fmt::format("cannot create {}: {}", out_dir.string(), ec.message()));
    io::write_atomic(out_dir / "distances.csv", distances_csv({out.run}));
    io::write_atomic(out_dir / "run.json", out.manifest.dump(2) + "\n");
}

}  // namespace eqalign
