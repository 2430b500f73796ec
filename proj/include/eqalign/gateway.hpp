#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace eqalign {

struct ChatMessage {
    std::string role;  // "system", "user" or "assistant"
    std::string content;
};

struct LlmRequest {
    std::string model;
    std::vector<ChatMessage> messages;
    double temperature = 1.0;
    std::size_t max_tokens = 256;
    /// Forwarded as the `seed` body field so sampled calls are distinguishable
    /// (and reproducible on servers that honour it).
    std::uint64_t seed = 0;

    void validate() const;
    nlohmann::json to_json() const;
};

enum class FinishReason { Stop, Length, Other };

struct LlmResponse {
    std::string text;
    FinishReason finish_reason = FinishReason::Stop;
};

/// Sorted-key, whitespace-free serialisation; runs of whitespace inside
/// string values are collapsed to one space.
std::string canonical_json(const nlohmann::json& j);
std::string request_hash(const nlohmann::json& request);

/// JSON Lines log of (hash, request, response) exchanges. Thread-safe.
class Cassette {
public:
    Cassette() = default;
    /// Replace the contents with the records in a JSONL file.
    void load(const std::filesystem::path& path);

    std::optional<nlohmann::json> find(const std::string& hash) const;
    /// Adds the record unless the hash is already present. Returns true when added.
    bool add(const std::string& hash, const nlohmann::json& request, const nlohmann::json& response);
    std::size_t size() const;

    std::string serialize() const;
    void save(const std::filesystem::path& path) const;

    /// Recomputes every hash from its stored request; returns the indices that disagree.
    std::vector<std::size_t> verify() const;

private:
    struct Record {
        std::string hash;
        nlohmann::json request;
        nlohmann::json response;
    };
    mutable std::mutex mu_;
    std::vector<Record> records_;
    std::map<std::string, std::size_t> index_;
};

/// Raw endpoint access: POST a JSON body to /v1/chat/completions or /v1/embeddings.
class Backend {
public:
    virtual ~Backend() = default;
    virtual nlohmann::json post(const std::string& endpoint, const nlohmann::json& body) = 0;
};

/// OpenAI-compatible HTTP endpoint.
std::unique_ptr<Backend> make_http_backend(const std::string& base_url, const std::string& api_key,
                                           double timeout_s = 60.0);

/// Offline stand-in. Chat answers are pseudo-random coordinate arrays keyed
/// by the request hash, sized from the "exactly N coordinate pair" phrase in
/// the system prompt; embeddings are signed hashed bags of words.
std::unique_ptr<Backend> make_stub_backend(std::size_t embedding_dim = 64);

enum class GatewayMode { Live, Record, Replay, Stub };

GatewayMode parse_gateway_mode(const std::string& s);
std::string to_string(GatewayMode m);

struct GatewayConfig {
    GatewayMode mode = GatewayMode::Stub;
    std::string base_url;  // defaults to $EQALIGN_BASE_URL
    std::string api_key;   // defaults to $EQALIGN_API_KEY
    std::filesystem::path cassette;
    std::size_t max_in_flight = 4;
    std::string embedding_model = "text-embedding-3-small";
    double timeout_s = 60.0;

    /// Fills base_url / api_key from the environment when empty, then checks
    /// mode requirements (replay needs a cassette, live needs URL and key).
    void resolve_and_validate();
};

/// Chat and embedding calls routed through a cassette according to the mode.
///  Live   - straight to HTTP, nothing stored.
///  Record - HTTP, every exchange appended to the cassette.
///  Replay - cassette only; an unknown request is a Gateway error.
///  Stub   - stub backend; exchanges are stored when a cassette path is set.
class Gateway {
public:
    explicit Gateway(GatewayConfig cfg);
    /// Test seam: use the given backend instead of HTTP / stub.
    Gateway(GatewayConfig cfg, std::unique_ptr<Backend> backend);
    ~Gateway();

    LlmResponse chat(const LlmRequest& req);
    std::vector<std::vector<double>> embed(const std::vector<std::string>& inputs);

    /// Persist the cassette (record/stub modes). No-op otherwise.
    void flush();

    const GatewayConfig& config() const { return cfg_; }
    const Cassette& cassette() const { return cassette_; }
    std::size_t peak_in_flight() const;

private:
    nlohmann::json exchange(const std::string& endpoint, const nlohmann::json& body);

    GatewayConfig cfg_;
    std::unique_ptr<Backend> backend_;
    Cassette cassette_;
    struct Limiter;
    std::unique_ptr<Limiter> limiter_;
};

}  // namespace eqalign
