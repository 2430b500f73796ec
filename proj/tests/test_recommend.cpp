#include <gtest/gtest.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <map>
#include <mutex>

#include "eqalign/error.hpp"
#include "eqalign/io.hpp"
#include "eqalign/prompts.hpp"
#include "eqalign/recommend.hpp"
#include "eqalign/rng.hpp"
#include "test_util.hpp"

using namespace eqalign;
using nlohmann::json;

namespace {

// Chat answers come from a callback; embeddings from a fixed table (unknown
// texts get a hashed fallback).
class ScriptedBackend final : public Backend {
public:
    using Chat = std::function<std::string(const json& body, int call)>;
    ScriptedBackend(Chat chat, std::map<std::string, std::vector<double>> emb = {})
        : chat_(std::move(chat)), emb_(std::move(emb)) {}

    json post(const std::string& endpoint, const json& body) override {
        std::lock_guard lock(mu_);
        if (endpoint == "/v1/embeddings") {
            json data = json::array();
            for (const auto& in : body.at("input")) {
                const auto it = emb_.find(in.get<std::string>());
                std::vector<double> v = it != emb_.end() ? it->second : std::vector<double>{1.0, 0.0, 0.0};
                data.push_back({{"embedding", v}});
            }
            return {{"data", data}};
        }
        bodies.push_back(body);
        const int call = calls++;
        return {{"choices", json::array({{{"message", {{"content", chat_(body, call)}}}, {"finish_reason", "stop"}}})}};
    }

    int calls = 0;
    std::vector<json> bodies;

private:
    Chat chat_;
    std::map<std::string, std::vector<double>> emb_;
    std::mutex mu_;
};

struct Scripted {
    ScriptedBackend* backend;
    std::unique_ptr<Gateway> gw;
};

Scripted scripted(ScriptedBackend::Chat chat, std::map<std::string, std::vector<double>> emb = {}) {
    auto b = std::make_unique<ScriptedBackend>(std::move(chat), std::move(emb));
    auto* raw = b.get();
    GatewayConfig cfg;
    cfg.mode = GatewayMode::Stub;
    return {raw, std::make_unique<Gateway>(cfg, std::move(b))};
}

Scripted constant(const std::string& answer) {
    return scripted([answer](const json&, int) { return answer; });
}

Dataset small_train() {
    Dataset ds;
    ds.entries.push_back({"a", "warm and cozy", {}, {{0, -5}, {1, -4}}});
    ds.entries.push_back({"b", "bright and airy", {}, {{2, 5}, {3, 4}}});
    ds.entries.push_back({"c", "deep bass", {}, {{3, -5}, {4, -5}}});
    return ds;
}

const Dataset& fixture() {
    static const Dataset ds = load_dataset(testutil::kData / "synthetic-120.json");
    return ds;
}

void expect_in_square(const std::vector<BeoCoord>& pts, std::size_t n) {
    ASSERT_EQ(pts.size(), n);
    for (const auto& p : pts) EXPECT_TRUE(in_square(p.x, p.y));
}

}  // namespace

TEST(Prompts, TemplatesMatchShippedFiles) {
    EXPECT_EQ(prompts::kTemplateVersion, "v1");
    const auto names = prompts::template_names();
    EXPECT_EQ(names.size(), 5u);
    for (const auto& n : names) {
        EXPECT_EQ(prompts::template_text(n), io::read_file(testutil::kData / "templates" / "v1" / (n + ".txt"))) << n;
    }
}

TEST(Prompts, Render) {
    const auto s = prompts::render("retry", {{"error", "bad"}, {"count", "3"}});
    EXPECT_NE(s.find("bad"), std::string::npos);
    EXPECT_NE(s.find("exactly 3 coordinate pair"), std::string::npos);
    EXPECT_EQ(s.find("{{"), std::string::npos);
    EXPECT_THROW(prompts::render("retry", {{"count", "3"}}), Error);
    EXPECT_THROW(prompts::render("nope", {}), Error);
}

TEST(RandomBaseline, Deterministic) {
    EXPECT_EQ(random_gaussian_baseline(11, 5), random_gaussian_baseline(11, 5));
    EXPECT_NE(random_gaussian_baseline(11, 5), random_gaussian_baseline(11, 6));
}

TEST(RandomBaseline, ClampedIntoSquare) {
    const auto pts = random_gaussian_baseline(10000, 3);
    double mx = 0, my = 0;
    for (const auto& p : pts) {
        EXPECT_TRUE(in_square(p.x, p.y));
        mx += p.x / 10000.0;
        my += p.y / 10000.0;
    }
    EXPECT_TRUE(in_square(mx, my));
}

TEST(RandomBaseline, SpreadMatchesSigma) {
    // centre draws far from the edges keep clamping out of the picture
    double ss = 0;
    int n = 0;
    for (std::uint64_t s = 0; s < 400 && n < 20000; ++s) {
        const auto pts = random_gaussian_baseline(200, s, 0.5);
        double mx = 0, my = 0;
        for (const auto& p : pts) mx += p.x / 200.0, my += p.y / 200.0;
        if (std::abs(mx) > 3.5 || std::abs(my) > 3.5) continue;
        for (const auto& p : pts) ss += (p.x - mx) * (p.x - mx), ++n;
    }
    EXPECT_NEAR(std::sqrt(ss / n), 0.5, 0.02);
}

TEST(StaticPreset, Constant) {
    Dataset ds;
    ds.entries.push_back({"a", "p", {}, {{1, -2}, {1, -2}}});
    ds.entries.push_back({"b", "q", {}, {{1, -2}, {1, -2}, {1, -2}}});
    auto rec = static_preset_baseline(ds);
    for (const auto& p : rec->recommend("anything", 5, 1)) EXPECT_EQ(p, (BeoCoord{1, -2}));
}

TEST(StaticPreset, SymmetricCentroid) {
    Dataset ds;
    ds.entries.push_back({"a", "p", {}, {{1, 2}, {-1, -2}}});
    ds.entries.push_back({"b", "q", {}, {{-3, 5}, {3, -5}}});
    const auto c = response_centroid(ds);
    EXPECT_NEAR(c.x, 0.0, 1e-9);
    EXPECT_NEAR(c.y, 0.0, 1e-9);
    EXPECT_THROW(static_preset_baseline(Dataset{}), Error);
}

TEST(StaticPreset, FixtureCentroid) {
    const auto c = response_centroid(fixture());
    EXPECT_NEAR(c.x, std::stod(fixture().metadata.at("expected_centroid_x")), 1e-12);
    EXPECT_NEAR(c.y, std::stod(fixture().metadata.at("expected_centroid_y")), 1e-12);
}

TEST(OracleReplay, ReturnsRecordedResponses) {
    auto rec = make_oracle_replay(fixture());
    const auto& e = fixture().entries[3];
    EXPECT_EQ(rec->recommend(e.prompt, e.responses.size(), 1), e.responses);
    const auto more = rec->recommend(e.prompt, 20, 1);
    expect_in_square(more, 20);
    for (const auto& p : more) EXPECT_NE(std::find(e.responses.begin(), e.responses.end(), p), e.responses.end());
    EXPECT_THROW(rec->recommend("not a prompt in the set", 11, 1), Error);
}

TEST(Retrieval, BuildIndex) {
    Gateway gw([] {
        GatewayConfig c;
        c.mode = GatewayMode::Stub;
        return c;
    }());
    const auto [train, val, test] = split_dataset(fixture(), {60, 30, 30, 7});
    const auto index = build_index(train, embedder_of(gw));
    ASSERT_EQ(index.items.size(), 60u);
    EXPECT_EQ(index.dim(), 64u);
    for (const auto& it : index.items) {
        double n2 = 0;
        for (double v : it.embedding) n2 += v * v;
        EXPECT_NEAR(n2, 1.0, 1e-6);
    }
    const auto again = build_index(train, embedder_of(gw));
    for (std::size_t i = 0; i < 60; ++i) EXPECT_EQ(index.items[i].embedding, again.items[i].embedding);
}

TEST(Retrieval, DegenerateEmbedding) {
    const Embedder zero = [](const std::vector<std::string>& in) {
        return std::vector<std::vector<double>>(in.size(), std::vector<double>(4, 0.0));
    };
    try {
        build_index(small_train(), zero);
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("degenerate embedding"), std::string::npos);
    }
}

TEST(Retrieval, DimensionMismatch) {
    const Embedder ragged = [](const std::vector<std::string>& in) {
        std::vector<std::vector<double>> out;
        for (std::size_t i = 0; i < in.size(); ++i) out.push_back(std::vector<double>(2 + i, 1.0));
        return out;
    };
    EXPECT_THROW(build_index(small_train(), ragged), Error);
}

TEST(Retrieval, HandComputedRanking) {
    // unit vectors; query (0.6, 0.8, 0): dots are 0.6, 0.8, 0.0
    const std::map<std::string, std::vector<double>> table = {{"warm and cozy", {1, 0, 0}},
                                                              {"bright and airy", {0, 1, 0}},
                                                              {"deep bass", {0, 0, 1}},
                                                              {"query", {0.6, 0.8, 0}}};
    const Embedder emb = [&](const std::vector<std::string>& in) {
        std::vector<std::vector<double>> out;
        for (const auto& s : in) out.push_back(table.at(s));
        return out;
    };
    const auto index = build_index(small_train(), emb);
    const auto top = retrieve(index, "query", 3, emb);
    ASSERT_EQ(top.size(), 3u);
    EXPECT_EQ(top[0].first, "bright and airy");
    EXPECT_EQ(top[1].first, "warm and cozy");
    EXPECT_EQ(top[2].first, "deep bass");
    EXPECT_EQ(retrieve(index, "deep bass", 1, emb)[0].first, "deep bass");
    EXPECT_THROW(retrieve(index, "query", 0, emb), Error);
    EXPECT_THROW(retrieve(index, "query", 4, emb), Error);
}

TEST(Retrieval, TiesKeepInsertionOrder) {
    RetrievalIndex idx;
    idx.items = {{"a", {}, {1, 0}}, {"b", {}, {0, 1}}, {"c", {}, {1, 0}}, {"d", {}, {0.6, 0.8}}};
    const std::vector<double> q = {1, 0};
    EXPECT_EQ(rank_by_vector(idx, q, 4), (std::vector<std::size_t>{0, 2, 3, 1}));
}

TEST(Retrieval, PermutationStable) {
    std::mt19937_64 g(3);
    std::normal_distribution<double> nd;
    RetrievalIndex idx;
    for (int i = 0; i < 30; ++i) {
        std::vector<double> v(8);
        double n = 0;
        for (auto& x : v) x = nd(g), n += x * x;
        for (auto& x : v) x /= std::sqrt(n);
        idx.items.push_back({"p" + std::to_string(i), {}, v});
    }
    const std::vector<double> q = idx.items[4].embedding;
    auto names = [](const RetrievalIndex& ix, const std::vector<std::size_t>& r) {
        std::vector<std::string> s;
        for (auto i : r) s.push_back(ix.items[i].prompt);
        return s;
    };
    const auto base = names(idx, rank_by_vector(idx, q, 10));
    EXPECT_EQ(base[0], "p4");
    auto shuffled = idx;
    std::shuffle(shuffled.items.begin(), shuffled.items.end(), g);
    EXPECT_EQ(names(shuffled, rank_by_vector(shuffled, q, 10)), base);
}

TEST(ExpertMapping, Validation) {
    const auto m = ExpertMapping::builtin();
    EXPECT_NO_THROW(m.validate());
    EXPECT_EQ(m.entries.front().first, "warm");
    EXPECT_EQ(m.entries.front().second, (BeoCoord{0, -6}));
    ExpertMapping dup{{{"warm", {0, 0}}, {"warm", {1, 1}}}};
    EXPECT_THROW(dup.validate(), Error);
    ExpertMapping upper{{{"Warm", {0, 0}}}};
    EXPECT_THROW(upper.validate(), Error);
    EXPECT_THROW(ExpertMapping{}.validate(), Error);
}

TEST(Text2Beosonic, WarmAnswer) {
    auto s = constant("[0, -6]");
    const auto out = text2beosonic("make it warm", ExpertMapping::builtin(), *s.gw, 11, 7);
    expect_in_square(out, 11);
    for (const auto& p : out) EXPECT_EQ(p, (BeoCoord{0, -6}));
    EXPECT_EQ(s.backend->calls, 11);
    const auto& sys = s.backend->bodies[0].at("messages")[0].at("content").get<std::string>();
    EXPECT_EQ(sys, text2beosonic_system(ExpertMapping::builtin()));
    EXPECT_NE(sys.find("warm: [0, -6]"), std::string::npos);
    // each call carries its own seed
    EXPECT_NE(s.backend->bodies[0].at("seed"), s.backend->bodies[1].at("seed"));
    EXPECT_EQ(s.backend->bodies[0].at("seed").get<std::uint64_t>(), call_seed(7, 0));
}

TEST(Text2Beosonic, TolerantParsing) {
    auto s = constant("x=2.5, y=-1");
    for (const auto& p : text2beosonic("p", ExpertMapping::builtin(), *s.gw, 3, 1)) EXPECT_EQ(p, (BeoCoord{2.5, -1}));
}

TEST(Text2Beosonic, RetriesThenFails) {
    auto s = constant("Sounds lovely, make it warmer.");
    StrategyConfig cfg;
    cfg.retries = 3;
    try {
        text2beosonic("p", ExpertMapping::builtin(), *s.gw, 1, 1, cfg);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Parse);
        EXPECT_NE(std::string(e.what()).find("after 3 retries"), std::string::npos);
    }
    EXPECT_EQ(s.backend->calls, 4);
    const auto& last = s.backend->bodies.back().at("messages");
    ASSERT_EQ(last.size(), 8u);  // system, user, then three assistant/correction pairs
    EXPECT_EQ(last[2].at("role"), "assistant");
    EXPECT_EQ(last[3].at("role"), "user");
}

TEST(Text2Beosonic, RecoversOnRetry) {
    auto s = scripted([](const json&, int call) { return call == 0 ? std::string("hmm") : std::string("[1, 1]"); });
    const auto out = text2beosonic("p", ExpertMapping::builtin(), *s.gw, 1, 1);
    EXPECT_EQ(out[0], (BeoCoord{1, 1}));
    EXPECT_EQ(s.backend->calls, 2);
}

TEST(StaticIcl, ExamplesInPrompt) {
    auto s = constant("(3, 4)");
    const auto train = small_train();
    std::vector<Example> ex;
    for (const auto& e : train.entries) ex.emplace_back(e.prompt, e.responses);
    const auto out = static_icl("p", ex, *s.gw, 2, 1);
    EXPECT_EQ(out, (std::vector<BeoCoord>{{3, 4}, {3, 4}}));
    const auto sys = s.backend->bodies[0].at("messages")[0].at("content").get<std::string>();
    EXPECT_NE(sys.find(examples_block(ex)), std::string::npos);
    EXPECT_NE(sys.find("Request: warm and cozy\nSettings: [[0, -5], [1, -4]]"), std::string::npos);
    EXPECT_THROW(static_icl("p", {}, *s.gw, 2, 1), Error);
}

TEST(Rag, RetrievalOrderInPrompt) {
    const std::map<std::string, std::vector<double>> table = {{"warm and cozy", {1, 0, 0}},
                                                              {"bright and airy", {0, 1, 0}},
                                                              {"deep bass", {0, 0, 1}},
                                                              {"query", {0.1, 0.5, 0.86}}};
    auto s = scripted([](const json&, int) { return std::string("[0, 0]"); }, table);
    const auto index = build_index(small_train(), embedder_of(*s.gw));
    rag("query", index, 2, *s.gw, 1, 1);
    const auto sys = s.backend->bodies[0].at("messages")[0].at("content").get<std::string>();
    const auto p1 = sys.find("Request: deep bass"), p2 = sys.find("Request: bright and airy");
    ASSERT_NE(p1, std::string::npos);
    ASSERT_NE(p2, std::string::npos);
    EXPECT_LT(p1, p2);
    EXPECT_EQ(sys.find("warm and cozy"), std::string::npos);
    EXPECT_THROW(rag("query", index, 0, *s.gw, 1, 1), Error);
}

TEST(RagQa, PicksSeededElement) {
    std::string arr = "[";
    std::vector<BeoCoord> pairs;
    for (int i = 0; i < 11; ++i) {
        pairs.push_back({-5.0 + i, 5.0 - i});
        arr += (i ? ", " : "") + std::string("[") + std::to_string(-5 + i) + ", " + std::to_string(5 - i) + "]";
    }
    arr += "]";
    auto s = constant(arr);
    const auto index = build_index(small_train(), embedder_of(*s.gw));
    const std::uint64_t seed = 99;
    const auto out = rag_qa("p", index, 1, *s.gw, 1, seed);
    Rng pick(derive_seed(call_seed(seed, 0), 0x7069636bULL));
    EXPECT_EQ(out[0], pairs[pick.below(11)]);
    const auto sys = s.backend->bodies[0].at("messages")[0].at("content").get<std::string>();
    EXPECT_NE(sys.find("exactly 11 coordinate pair"), std::string::npos);

    // marginal over seeds: every element chosen a plausible number of times
    std::map<double, int> counts;
    for (std::uint64_t sd = 1; sd <= 1000; ++sd) counts[rag_qa("p", index, 1, *s.gw, 1, sd)[0].x]++;
    ASSERT_EQ(counts.size(), 11u);
    for (const auto& [x, c] : counts) {
        EXPECT_GE(c, 60) << x;
        EXPECT_LE(c, 130) << x;
    }
}

TEST(RagQa, IdenticalPredictions) {
    std::string arr = "[";
    for (int i = 0; i < 11; ++i) arr += (i ? ", " : "") + std::string("[1.5, -0.5]");
    auto s = constant(arr + "]");
    const auto index = build_index(small_train(), embedder_of(*s.gw));
    for (std::uint64_t sd = 0; sd < 20; ++sd) EXPECT_EQ(rag_qa("p", index, 2, *s.gw, 1, sd)[0], (BeoCoord{1.5, -0.5}));
}

TEST(RagQa, WrongLengthFails) {
    std::string arr = "[";
    for (int i = 0; i < 10; ++i) arr += (i ? ", " : "") + std::string("[1, 1]");
    auto s = constant(arr + "]");
    const auto index = build_index(small_train(), embedder_of(*s.gw));
    try {
        rag_qa("p", index, 1, *s.gw, 1, 1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Parse);
    }
    EXPECT_EQ(s.backend->calls, 4);
}

TEST(Strategies, ReplayDeterminism) {
    testutil::TempDir dir("strategies");
    const auto cassette = dir / "c.jsonl";
    const auto train = small_train();
    auto run_all = [&](Gateway& gw) {
        std::vector<std::vector<BeoCoord>> out;
        std::vector<Example> ex;
        for (const auto& e : train.entries) ex.emplace_back(e.prompt, e.responses);
        const auto index = build_index(train, embedder_of(gw));
        out.push_back(make_text2beosonic(ExpertMapping::builtin(), gw)->recommend("make it warm", 11, 3));
        out.push_back(make_static_icl(ex, gw)->recommend("make it warm", 11, 3));
        out.push_back(make_rag(index, 2, gw)->recommend("make it warm", 11, 3));
        out.push_back(make_rag_qa(index, 2, gw)->recommend("make it warm", 11, 3));
        return out;
    };
    GatewayConfig rec;
    rec.mode = GatewayMode::Stub;
    rec.cassette = cassette;
    std::vector<std::vector<BeoCoord>> first;
    {
        Gateway gw(rec);
        first = run_all(gw);
        gw.flush();
    }
    for (const auto& o : first) expect_in_square(o, 11);
    GatewayConfig rep;
    rep.mode = GatewayMode::Replay;
    rep.cassette = cassette;
    Gateway gw(rep);
    EXPECT_EQ(run_all(gw), first);
}
