#include <fmt/format.h>

#include <cctype>
#include <sstream>

#include "eqalign/error.hpp"
#include "eqalign/gateway.hpp"
#include "eqalign/io.hpp"

namespace eqalign {

using nlohmann::json;

namespace {

std::string collapse_ws(const std::string& s) {
    std::string out;
    bool pending = false;
    for (char c : s) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            pending = !out.empty();
            continue;
        }
        if (pending) out.push_back(' ');
        pending = false;
        out.push_back(c);
    }
    return out;
}

json normalise(const json& j) {
    if (j.is_string()) return collapse_ws(j.get<std::string>());
    if (j.is_array()) {
        json out = json::array();
        for (const auto& e : j) out.push_back(normalise(e));
        return out;
    }
    if (j.is_object()) {
        json out = json::object();
        for (const auto& [k, v] : j.items()) out[k] = normalise(v);
        return out;
    }
    return j;
}

}  // namespace

std::string canonical_json(const json& j) {
    // nlohmann::json keeps object keys in a std::map, so dump() is already key-sorted.
    return normalise(j).dump(-1, ' ', false, json::error_handler_t::strict);
}

std::string request_hash(const json& request) { return io::sha256_hex(canonical_json(request)); }

void Cassette::load(const std::filesystem::path& path) {
    const std::string text = io::read_file(path);
    std::vector<Record> records;
    std::map<std::string, std::size_t> index;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object() || !j.contains("hash") || !j.contains("request") ||
            !j.contains("response") || !j["hash"].is_string()) {
            throw validation_error(fmt::format("{}:{}: malformed cassette record", path.string(), lineno));
        }
        Record r{j["hash"].get<std::string>(), j["request"], j["response"]};
        if (!index.contains(r.hash)) index.emplace(r.hash, records.size());
        records.push_back(std::move(r));
    }
    std::lock_guard lock(mu_);
    records_ = std::move(records);
    index_ = std::move(index);
}

std::optional<json> Cassette::find(const std::string& hash) const {
    std::lock_guard lock(mu_);
    const auto it = index_.find(hash);
    if (it == index_.end()) return std::nullopt;
    return records_[it->second].response;
}

bool Cassette::add(const std::string& hash, const json& request, const json& response) {
    std::lock_guard lock(mu_);
    if (index_.contains(hash)) return false;
    index_.emplace(hash, records_.size());
    records_.push_back({hash, request, response});
    return true;
}

std::size_t Cassette::size() const {
    std::lock_guard lock(mu_);
    return records_.size();
}

std::string Cassette::serialize() const {
    std::lock_guard lock(mu_);
    // Sorted by hash so the file is independent of the order concurrent calls finished in.
    std::string out;
    for (const auto& [hash, idx] : index_) {
        const auto& r = records_[idx];
        json line = {{"hash", r.hash}, {"request", r.request}, {"response", r.response}};
        out += line.dump();
        out += '\n';
    }
    return out;
}

void Cassette::save(const std::filesystem::path& path) const { io::write_atomic(path, serialize()); }

std::vector<std::size_t> Cassette::verify() const {
    std::lock_guard lock(mu_);
    std::vector<std::size_t> bad;
    for (std::size_t i = 0; i < records_.size(); ++i) {
        if (request_hash(records_[i].request) != records_[i].hash) bad.push_back(i);
    }
    return bad;
}

}  // namespace eqalign
