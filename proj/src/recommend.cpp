#include "eqalign/recommend.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "eqalign/error.hpp"
#include "eqalign/parse.hpp"
#include "eqalign/prompts.hpp"
#include "eqalign/rng.hpp"

namespace eqalign {

namespace {

class FnRecommender final : public Recommender {
public:
    using Fn = std::function<std::vector<BeoCoord>(std::string_view, std::size_t, std::uint64_t)>;
    FnRecommender(std::string name, Fn fn) : name_(std::move(name)), fn_(std::move(fn)) {}
    std::string name() const override { return name_; }
    std::vector<BeoCoord> recommend(std::string_view prompt, std::size_t n, std::uint64_t seed) override {
        if (n == 0) throw validation_error("n_samples must be >= 1");
        return fn_(prompt, n, seed);
    }

private:
    std::string name_;
    Fn fn_;
};

std::string pair_text(const BeoCoord& p) { return fmt::format("[{}, {}]", p.x, p.y); }

std::string pairs_text(std::span<const BeoCoord> pts) {
    std::string s = "[";
    for (std::size_t i = 0; i < pts.size(); ++i) s += (i ? ", " : "") + pair_text(pts[i]);
    return s + "]";
}

// One sampled model call with the corrective re-prompt loop.
std::vector<BeoCoord> ask(Gateway& gw, const std::string& system, std::string_view prompt, std::size_t count,
                          std::uint64_t seed, const StrategyConfig& cfg) {
    LlmRequest req;
    req.model = cfg.model;
    req.temperature = cfg.temperature;
    req.max_tokens = cfg.max_tokens;
    req.seed = seed;
    req.messages = {{"system", system}, {"user", std::string(prompt)}};
    std::string last_error;
    for (std::size_t attempt = 0; attempt <= cfg.retries; ++attempt) {
        const LlmResponse res = gw.chat(req);
        try {
            return parse_coords(res.text, count);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::Parse) throw;
            last_error = e.what();
        }
        req.messages.push_back({"assistant", res.text});
        req.messages.push_back(
            {"user", prompts::render("retry", {{"error", last_error}, {"count", std::to_string(count)}})});
    }
    throw parse_error(fmt::format("no usable answer after {} retries: {}", cfg.retries, last_error));
}

std::vector<double> unit(std::vector<double> v) {
    double n2 = 0.0;
    for (double x : v) n2 += x * x;
    const double n = std::sqrt(n2);
    if (!(n > 1e-12) || !std::isfinite(n)) throw gateway_error("degenerate embedding (zero or non-finite norm)");
    for (double& x : v) x /= n;
    return v;
}

void check_index(const RetrievalIndex& index, std::size_t k) {
    if (index.items.empty()) throw validation_error("retrieval index is empty");
    if (k == 0) throw validation_error("k must be >= 1");
    if (k > index.items.size()) {
        throw validation_error(fmt::format("k = {} exceeds index size {}", k, index.items.size()));
    }
}

}  // namespace

std::uint64_t call_seed(std::uint64_t seed, std::size_t i) { return derive_seed(seed, i); }

// ---------------------------------------------------------------------------
// Baselines

std::vector<BeoCoord> random_gaussian_baseline(std::size_t n_samples, std::uint64_t seed, double sigma) {
    if (n_samples == 0) throw validation_error("n_samples must be >= 1");
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw validation_error("sigma must be non-negative");
    Rng rng(seed);
    const double mx = rng.uniform(-kBound, kBound), my = rng.uniform(-kBound, kBound);
    std::vector<BeoCoord> out;
    out.reserve(n_samples);
    for (std::size_t i = 0; i < n_samples; ++i) {
        const double x = mx + sigma * rng.normal();
        const double y = my + sigma * rng.normal();
        out.push_back(clamp(x, y));
    }
    return out;
}

std::unique_ptr<Recommender> make_random_gaussian(double sigma) {
    return std::make_unique<FnRecommender>(
        "random", [sigma](std::string_view, std::size_t n, std::uint64_t seed) {
            return random_gaussian_baseline(n, seed, sigma);
        });
}

BeoCoord response_centroid(const Dataset& ds) {
    double sx = 0.0, sy = 0.0;
    std::size_t n = 0;
    for (const auto& e : ds.entries) {
        for (const auto& p : e.responses) {
            sx += p.x;
            sy += p.y;
            ++n;
        }
    }
    if (n == 0) throw validation_error("centroid of an empty dataset");
    return clamp(sx / static_cast<double>(n), sy / static_cast<double>(n));
}

std::unique_ptr<Recommender> static_preset_baseline(const Dataset& train) {
    if (train.entries.empty()) throw validation_error("static preset needs a non-empty train set");
    const BeoCoord c = response_centroid(train);
    return std::make_unique<FnRecommender>(
        "preset", [c](std::string_view, std::size_t n, std::uint64_t) { return std::vector<BeoCoord>(n, c); });
}

std::unique_ptr<Recommender> make_oracle_replay(const Dataset& ds) {
    std::map<std::string, ResponseSet, std::less<>> table;
    for (const auto& e : ds.entries) table.emplace(e.prompt, e.responses);
    return std::make_unique<FnRecommender>(
        "oracle", [table = std::move(table)](std::string_view prompt, std::size_t n, std::uint64_t seed) {
            const auto it = table.find(prompt);
            if (it == table.end()) throw validation_error(fmt::format("oracle has no responses for prompt '{}'", prompt));
            const auto& r = it->second;
            if (r.size() == n) return r;
            Rng rng(seed);
            std::vector<BeoCoord> out;
            out.reserve(n);
            for (std::size_t i = 0; i < n; ++i) out.push_back(r[rng.below(r.size())]);
            return out;
        });
}

// ---------------------------------------------------------------------------
// Retrieval

Embedder embedder_of(Gateway& gw) {
    return [&gw](const std::vector<std::string>& inputs) { return gw.embed(inputs); };
}

RetrievalIndex build_index(const Dataset& train, const Embedder& embed) {
    if (train.entries.empty()) throw validation_error("cannot index an empty train set");
    std::vector<std::string> texts;
    for (const auto& e : train.entries) texts.push_back(e.prompt);
    auto vecs = embed(texts);
    if (vecs.size() != texts.size()) {
        throw gateway_error(fmt::format("embedder returned {} vectors for {} prompts", vecs.size(), texts.size()));
    }
    RetrievalIndex index;
    for (std::size_t i = 0; i < texts.size(); ++i) {
        if (i > 0 && vecs[i].size() != index.dim()) {
            throw gateway_error(fmt::format("embedding dimension mismatch: {} vs {}", vecs[i].size(), index.dim()));
        }
        index.items.push_back({train.entries[i].prompt, train.entries[i].responses, unit(std::move(vecs[i]))});
    }
    return index;
}

std::vector<std::size_t> rank_by_vector(const RetrievalIndex& index, std::span<const double> query, std::size_t k) {
    check_index(index, k);
    if (query.size() != index.dim()) {
        throw gateway_error(fmt::format("query dimension {} does not match index dimension {}", query.size(), index.dim()));
    }
    std::vector<double> score(index.items.size());
    for (std::size_t i = 0; i < index.items.size(); ++i) {
        const auto& e = index.items[i].embedding;
        score[i] = std::inner_product(e.begin(), e.end(), query.begin(), 0.0);
    }
    std::vector<std::size_t> order(index.items.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
    order.resize(k);
    return order;
}

std::vector<Example> retrieve(const RetrievalIndex& index, std::string_view prompt, std::size_t k, const Embedder& embed) {
    check_index(index, k);
    auto q = embed({std::string(prompt)});
    if (q.size() != 1) throw gateway_error("embedder returned the wrong number of vectors");
    const auto query = unit(std::move(q[0]));
    std::vector<Example> out;
    for (std::size_t i : rank_by_vector(index, query, k)) out.emplace_back(index.items[i].prompt, index.items[i].responses);
    return out;
}

// ---------------------------------------------------------------------------
// Model-backed strategies

void ExpertMapping::validate() const {
    if (entries.empty()) throw validation_error("expert mapping is empty");
    std::set<std::string> seen;
    for (const auto& [d, c] : entries) {
        if (d.empty()) throw validation_error("expert mapping has an empty descriptor");
        for (char ch : d) {
            if (ch >= 'A' && ch <= 'Z') throw validation_error(fmt::format("descriptor '{}' is not lower-case", d));
        }
        if (!seen.insert(d).second) throw validation_error(fmt::format("duplicate descriptor '{}'", d));
        if (!in_square(c.x, c.y)) throw validation_error(fmt::format("descriptor '{}' maps outside the square", d));
    }
}

ExpertMapping ExpertMapping::builtin() {
    // Entries other than "warm" are illustrative and follow the axis semantics.
    return {{
        {"warm", {0.0, -6.0}},
        {"bright", {0.0, 6.0}},
        {"dark", {-2.0, -5.0}},
        {"bassy", {3.0, -5.0}},
        {"airy", {3.0, 5.0}},
        {"crisp", {2.0, 4.0}},
        {"muffled", {-4.0, -4.0}},
        {"thin", {-3.0, 4.0}},
        {"scooped", {6.0, 0.0}},
        {"punchy", {4.0, -2.0}},
        {"present", {-5.0, 1.0}},
        {"neutral", {0.0, 0.0}},
    }};
}

std::string text2beosonic_system(const ExpertMapping& mapping) {
    std::string table;
    for (const auto& [d, c] : mapping.entries) table += fmt::format("- {}: {}\n", d, pair_text(c));
    if (!table.empty()) table.pop_back();
    return prompts::render("text2beosonic", {{"mapping", table}, {"count", "1"}});
}

std::string examples_block(std::span<const Example> examples) {
    std::string out;
    for (std::size_t i = 0; i < examples.size(); ++i) {
        if (i) out += "\n\n";
        out += fmt::format("Request: {}\nSettings: {}", examples[i].first, pairs_text(examples[i].second));
    }
    return out;
}

std::vector<BeoCoord> text2beosonic(std::string_view prompt, const ExpertMapping& mapping, Gateway& gw,
                                    std::size_t n_samples, std::uint64_t seed, const StrategyConfig& cfg) {
    mapping.validate();
    const std::string system = text2beosonic_system(mapping);
    std::vector<BeoCoord> out;
    for (std::size_t i = 0; i < n_samples; ++i) out.push_back(ask(gw, system, prompt, 1, call_seed(seed, i), cfg)[0]);
    return out;
}

std::vector<BeoCoord> static_icl(std::string_view prompt, std::span<const Example> examples, Gateway& gw,
                                 std::size_t n_samples, std::uint64_t seed, const StrategyConfig& cfg) {
    if (examples.empty()) throw validation_error("static ICL needs at least one example");
    const std::string system = prompts::render("static_icl", {{"examples", examples_block(examples)}, {"count", "1"}});
    std::vector<BeoCoord> out;
    for (std::size_t i = 0; i < n_samples; ++i) out.push_back(ask(gw, system, prompt, 1, call_seed(seed, i), cfg)[0]);
    return out;
}

std::vector<BeoCoord> rag(std::string_view prompt, const RetrievalIndex& index, std::size_t k, Gateway& gw,
                          std::size_t n_samples, std::uint64_t seed, const StrategyConfig& cfg) {
    const auto examples = retrieve(index, prompt, k, embedder_of(gw));
    const std::string system = prompts::render("rag", {{"examples", examples_block(examples)}, {"count", "1"}});
    std::vector<BeoCoord> out;
    for (std::size_t i = 0; i < n_samples; ++i) out.push_back(ask(gw, system, prompt, 1, call_seed(seed, i), cfg)[0]);
    return out;
}

std::vector<BeoCoord> rag_qa(std::string_view prompt, const RetrievalIndex& index, std::size_t k, Gateway& gw,
                             std::size_t n_samples, std::uint64_t seed, const StrategyConfig& cfg) {
    if (cfg.qa_predictions == 0) throw validation_error("qa_predictions must be >= 1");
    const auto examples = retrieve(index, prompt, k, embedder_of(gw));
    const std::string system = prompts::render(
        "rag_qa", {{"examples", examples_block(examples)}, {"count", std::to_string(cfg.qa_predictions)}});
    std::vector<BeoCoord> out;
    for (std::size_t i = 0; i < n_samples; ++i) {
        const std::uint64_t s = call_seed(seed, i);
        const auto preds = ask(gw, system, prompt, cfg.qa_predictions, s, cfg);
        Rng pick(derive_seed(s, 0x7069636bULL));
        out.push_back(preds[pick.below(preds.size())]);
    }
    return out;
}

std::unique_ptr<Recommender> make_text2beosonic(ExpertMapping mapping, Gateway& gw, StrategyConfig cfg) {
    mapping.validate();
    return std::make_unique<FnRecommender>(
        "text2beosonic", [m = std::move(mapping), &gw, cfg](std::string_view p, std::size_t n, std::uint64_t s) {
            return text2beosonic(p, m, gw, n, s, cfg);
        });
}

std::unique_ptr<Recommender> make_static_icl(std::vector<Example> examples, Gateway& gw, StrategyConfig cfg) {
    if (examples.empty()) throw validation_error("static ICL needs at least one example");
    return std::make_unique<FnRecommender>(
        "static_icl", [ex = std::move(examples), &gw, cfg](std::string_view p, std::size_t n, std::uint64_t s) {
            return static_icl(p, ex, gw, n, s, cfg);
        });
}

std::unique_ptr<Recommender> make_rag(RetrievalIndex index, std::size_t k, Gateway& gw, StrategyConfig cfg) {
    check_index(index, k);
    return std::make_unique<FnRecommender>(
        "rag", [idx = std::move(index), k, &gw, cfg](std::string_view p, std::size_t n, std::uint64_t s) {
            return rag(p, idx, k, gw, n, s, cfg);
        });
}

std::unique_ptr<Recommender> make_rag_qa(RetrievalIndex index, std::size_t k, Gateway& gw, StrategyConfig cfg) {
    check_index(index, k);
    return std::make_unique<FnRecommender>(
        "rag_qa", [idx = std::move(index), k, &gw, cfg](std::string_view p, std::size_t n, std::uint64_t s) {
            return rag_qa(p, idx, k, gw, n, s, cfg);
        });
}

}  // namespace eqalign
