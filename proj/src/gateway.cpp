#include "eqalign/gateway.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <condition_variable>
#include <cstdlib>
#include <regex>

#include "eqalign/dataset.hpp"
#include "eqalign/error.hpp"
#include "eqalign/rng.hpp"
#include "httplib.h"

namespace eqalign {

using nlohmann::json;

void LlmRequest::validate() const {
    if (model.empty()) throw validation_error("model name is empty");
    if (messages.empty()) throw validation_error("chat request has no messages");
    if (!(temperature >= 0.0) || temperature > 2.0) {
        throw validation_error(fmt::format("temperature must be in [0, 2], got {}", temperature));
    }
    if (max_tokens == 0) throw validation_error("max_tokens must be positive");
}

json LlmRequest::to_json() const {
    json msgs = json::array();
    for (const auto& m : messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
    return {{"model", model}, {"messages", msgs}, {"temperature", temperature}, {"max_tokens", max_tokens}, {"seed", seed}};
}

GatewayMode parse_gateway_mode(const std::string& s) {
    if (s == "live") return GatewayMode::Live;
    if (s == "record") return GatewayMode::Record;
    if (s == "replay") return GatewayMode::Replay;
    if (s == "stub") return GatewayMode::Stub;
    throw validation_error(fmt::format("unknown gateway mode '{}' (live, record, replay, stub)", s));
}

std::string to_string(GatewayMode m) {
    switch (m) {
        case GatewayMode::Live: return "live";
        case GatewayMode::Record: return "record";
        case GatewayMode::Replay: return "replay";
        case GatewayMode::Stub: return "stub";
    }
    return "stub";
}

void GatewayConfig::resolve_and_validate() {
    if (base_url.empty()) {
        if (const char* v = std::getenv("EQALIGN_BASE_URL")) base_url = v;
    }
    if (api_key.empty()) {
        if (const char* v = std::getenv("EQALIGN_API_KEY")) api_key = v;
    }
    if (max_in_flight == 0) throw validation_error("max_in_flight must be >= 1");
    const bool http = mode == GatewayMode::Live || mode == GatewayMode::Record;
    if (http && (base_url.empty() || api_key.empty())) {
        throw validation_error(fmt::format("{} mode needs EQALIGN_BASE_URL and EQALIGN_API_KEY", to_string(mode)));
    }
    if ((mode == GatewayMode::Replay || mode == GatewayMode::Record) && cassette.empty()) {
        throw validation_error(fmt::format("{} mode needs a cassette path", to_string(mode)));
    }
    if (mode == GatewayMode::Replay && !std::filesystem::exists(cassette)) {
        throw validation_error(fmt::format("cassette not found: {}", cassette.string()));
    }
}

// ---------------------------------------------------------------------------
// HTTP backend

namespace {

class HttpBackend final : public Backend {
public:
    HttpBackend(const std::string& base_url, std::string api_key, double timeout_s)
        : api_key_(std::move(api_key)), timeout_s_(timeout_s) {
        static const std::regex re(R"(^(https?://[^/]+)(/.*)?$)");
        std::smatch m;
        if (!std::regex_match(base_url, m, re)) throw validation_error(fmt::format("bad base URL '{}'", base_url));
        origin_ = m[1].str();
        prefix_ = m[2].matched ? m[2].str() : "";
        while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
    }

    json post(const std::string& endpoint, const json& body) override {
        httplib::Client cli(origin_);
        const auto secs = static_cast<time_t>(timeout_s_);
        cli.set_connection_timeout(secs, 0);
        cli.set_read_timeout(secs, 0);
        cli.set_write_timeout(secs, 0);
        const httplib::Headers headers = {{"Authorization", "Bearer " + api_key_}};
        auto res = cli.Post(prefix_ + endpoint, headers, body.dump(), "application/json");
        if (!res) throw gateway_error(fmt::format("POST {} failed: {}", endpoint, httplib::to_string(res.error())));
        if (res->status != 200) {
            throw gateway_error(fmt::format("POST {} returned HTTP {}: {}", endpoint, res->status, res->body.substr(0, 200)));
        }
        json j = json::parse(res->body, nullptr, false);
        if (j.is_discarded()) throw gateway_error(fmt::format("POST {} returned a non-JSON body", endpoint));
        return j;
    }

private:
    std::string origin_, prefix_, api_key_;
    double timeout_s_;
};

// ---------------------------------------------------------------------------
// Stub backend

class StubBackend final : public Backend {
public:
    explicit StubBackend(std::size_t dim) : dim_(dim) {}

    json post(const std::string& endpoint, const json& body) override {
        if (endpoint == "/v1/chat/completions") return chat(body);
        if (endpoint == "/v1/embeddings") return embeddings(body);
        throw gateway_error(fmt::format("stub backend has no endpoint {}", endpoint));
    }

private:
    static json chat(const json& body) {
        static const std::regex want(R"(exactly (\d+) coordinate pair)");
        std::size_t n = 1;
        for (const auto& m : body.at("messages")) {
            const auto content = m.at("content").get<std::string>();
            std::smatch sm;
            if (std::regex_search(content, sm, want)) n = std::stoul(sm[1].str());
        }
        Rng rng(fnv1a(canonical_json(body)));
        std::string text;
        for (std::size_t i = 0; i < n; ++i) {
            // two decimals, like a model would write them
            const double x = std::round(rng.uniform(-kBound, kBound) * 100.0) / 100.0;
            const double y = std::round(rng.uniform(-kBound, kBound) * 100.0) / 100.0;
            text += fmt::format("{}[{}, {}]", i ? ", " : "", x, y);
        }
        if (n != 1) text = "[" + text + "]";
        return {{"object", "chat.completion"},
                {"model", body.value("model", "stub")},
                {"choices", json::array({{{"index", 0},
                                          {"message", {{"role", "assistant"}, {"content", text}}},
                                          {"finish_reason", "stop"}}})}};
    }

    json embeddings(const json& body) const {
        json data = json::array();
        std::size_t idx = 0;
        for (const auto& in : body.at("input")) {
            std::vector<double> v(dim_, 0.0);
            for (const auto& tok : tokenize(in.get<std::string>())) {
                const std::uint64_t h = fnv1a(tok);
                v[h % dim_] += (h >> 63) ? -1.0 : 1.0;
            }
            data.push_back({{"object", "embedding"}, {"index", idx++}, {"embedding", v}});
        }
        return {{"object", "list"}, {"model", body.value("model", "stub")}, {"data", data}};
    }

    std::size_t dim_;
};

}  // namespace

std::unique_ptr<Backend> make_http_backend(const std::string& base_url, const std::string& api_key, double timeout_s) {
    return std::make_unique<HttpBackend>(base_url, api_key, timeout_s);
}

std::unique_ptr<Backend> make_stub_backend(std::size_t embedding_dim) {
    if (embedding_dim == 0) throw validation_error("embedding dimension must be positive");
    return std::make_unique<StubBackend>(embedding_dim);
}

// ---------------------------------------------------------------------------
// Gateway

struct Gateway::Limiter {
    explicit Limiter(std::size_t cap) : cap(cap) {}
    std::mutex mu;
    std::condition_variable cv;
    std::size_t cap, active = 0, peak = 0;

    void acquire() {
        std::unique_lock lock(mu);
        cv.wait(lock, [&] { return active < cap; });
        ++active;
        peak = std::max(peak, active);
    }
    void release() {
        {
            std::lock_guard lock(mu);
            --active;
        }
        cv.notify_one();
    }
};

namespace {

std::unique_ptr<Backend> default_backend(const GatewayConfig& cfg) {
    switch (cfg.mode) {
        case GatewayMode::Live:
        case GatewayMode::Record: return make_http_backend(cfg.base_url, cfg.api_key, cfg.timeout_s);
        case GatewayMode::Stub: return make_stub_backend();
        case GatewayMode::Replay: return nullptr;
    }
    return nullptr;
}

}  // namespace

Gateway::Gateway(GatewayConfig cfg) : Gateway(cfg, nullptr) {}

Gateway::Gateway(GatewayConfig cfg, std::unique_ptr<Backend> backend) : cfg_(std::move(cfg)) {
    const bool injected = backend != nullptr;
    if (!injected) cfg_.resolve_and_validate();
    backend_ = injected ? std::move(backend) : default_backend(cfg_);
    limiter_ = std::make_unique<Limiter>(std::max<std::size_t>(cfg_.max_in_flight, 1));
    if (!cfg_.cassette.empty() && std::filesystem::exists(cfg_.cassette)) cassette_.load(cfg_.cassette);
    if (cfg_.mode == GatewayMode::Replay && cfg_.cassette.empty()) {
        throw validation_error("replay mode needs a cassette path");
    }
}

Gateway::~Gateway() = default;

std::size_t Gateway::peak_in_flight() const {
    std::lock_guard lock(limiter_->mu);
    return limiter_->peak;
}

json Gateway::exchange(const std::string& endpoint, const json& body) {
    const json request = {{"endpoint", endpoint}, {"body", body}};
    const std::string hash = request_hash(request);
    const bool stored = cfg_.mode != GatewayMode::Live && !cfg_.cassette.empty();
    if (cfg_.mode == GatewayMode::Replay || stored) {
        if (auto hit = cassette_.find(hash)) return *hit;
        if (cfg_.mode == GatewayMode::Replay) {
            throw gateway_error(fmt::format("request {} not found in cassette {}", hash.substr(0, 12), cfg_.cassette.string()));
        }
    }
    if (!backend_) throw gateway_error("gateway has no backend");
    limiter_->acquire();
    json response;
    try {
        response = backend_->post(endpoint, body);
    } catch (...) {
        limiter_->release();
        throw;
    }
    limiter_->release();
    if (stored) cassette_.add(hash, request, response);
    return response;
}

LlmResponse Gateway::chat(const LlmRequest& req) {
    req.validate();
    const json res = exchange("/v1/chat/completions", req.to_json());
    try {
        const auto& choice = res.at("choices").at(0);
        LlmResponse out;
        const auto& content = choice.at("message").at("content");
        out.text = content.is_string() ? content.get<std::string>() : std::string();
        const std::string fr = choice.value("finish_reason", "stop");
        out.finish_reason = fr == "stop" ? FinishReason::Stop : fr == "length" ? FinishReason::Length : FinishReason::Other;
        return out;
    } catch (const json::exception& e) {
        throw gateway_error(fmt::format("malformed chat response: {}", e.what()));
    }
}

std::vector<std::vector<double>> Gateway::embed(const std::vector<std::string>& inputs) {
    if (inputs.empty()) return {};
    const json res = exchange("/v1/embeddings", {{"model", cfg_.embedding_model}, {"input", inputs}});
    try {
        const auto& data = res.at("data");
        if (data.size() != inputs.size()) {
            throw gateway_error(fmt::format("asked for {} embeddings, got {}", inputs.size(), data.size()));
        }
        std::vector<std::vector<double>> out(inputs.size());
        for (std::size_t i = 0; i < data.size(); ++i) {
            const std::size_t idx = data[i].value("index", i);
            if (idx >= out.size()) throw gateway_error("embedding index out of range");
            out[idx] = data[i].at("embedding").get<std::vector<double>>();
        }
        return out;
    } catch (const json::exception& e) {
        throw gateway_error(fmt::format("malformed embeddings response: {}", e.what()));
    }
}

void Gateway::flush() {
    if (cfg_.mode == GatewayMode::Live || cfg_.mode == GatewayMode::Replay || cfg_.cassette.empty()) return;
    cassette_.save(cfg_.cassette);
}

}  // namespace eqalign
