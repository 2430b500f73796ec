#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "eqalign/augment.hpp"
#include "eqalign/error.hpp"
#include "test_util.hpp"

using namespace eqalign;

namespace {

Dataset one(const std::string& prompt, ResponseSet responses = {{1, 1}, {-2, 3}}) {
    Dataset ds;
    ds.entries.push_back({"p1", prompt, {}, std::move(responses)});
    return ds;
}

std::vector<std::string> words(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    for (std::string w; in >> w;) out.push_back(w);
    return out;
}

}  // namespace

TEST(Synonyms, Validation) {
    EXPECT_NO_THROW(validate_synonyms({{"warm", {"cozy"}}}));
    EXPECT_THROW(validate_synonyms({{"warm", {"warm"}}}), Error);
    EXPECT_THROW(validate_synonyms({{"warm", {}}}), Error);
    EXPECT_THROW(validate_synonyms({{"Warm", {"cozy"}}}), Error);
    EXPECT_THROW(parse_synonyms(R"({"warm": "cozy"})"), Error);
    EXPECT_THROW(parse_synonyms("[1]"), Error);
    EXPECT_EQ(parse_synonyms(R"({"warm": ["cozy", "cozy", "mellow"]})").at("warm"),
              (std::vector<std::string>{"cozy", "mellow"}));
}

TEST(Synonyms, ShippedDictionaryLoads) {
    const auto dict = load_synonyms(testutil::kData / "synonyms.json");
    EXPECT_GT(dict.size(), 20u);
}

TEST(Augment, EmptyDictionaryIsIdentity) {
    const auto ds = one("make it warm");
    const auto out = augment_prompts(ds, {}, {});
    ASSERT_EQ(out.entries.size(), 1u);
    EXPECT_EQ(out.entries[0].prompt, "make it warm");
    EXPECT_EQ(out.entries[0].responses, ds.entries[0].responses);
}

TEST(Augment, SingleWordSubstitution) {
    const SynonymDict dict = {{"warm", {"cozy", "mellow"}}};
    const auto out = augment_prompts(one("make it warm"), dict, {});
    ASSERT_EQ(out.entries.size(), 3u);
    EXPECT_EQ(out.entries[1].prompt, "make it cozy");
    EXPECT_EQ(out.entries[2].prompt, "make it mellow");
    EXPECT_EQ(out.entries[1].id, "p1~aug001");
    EXPECT_EQ(out.entries[1].audio_type, out.entries[0].audio_type);
}

TEST(Augment, KeepsPunctuationAndCase) {
    const SynonymDict dict = {{"warm", {"cozy"}}};
    EXPECT_EQ(enumerate_variants("Warm, please.", dict, 5), (std::vector<std::string>{"Cozy, please."}));
    EXPECT_EQ(enumerate_variants("so  warm!\n", dict, 5), (std::vector<std::string>{"so  cozy!\n"}));
}

TEST(Augment, OneWordVariantsFirst) {
    const SynonymDict dict = {{"warm", {"cozy", "mellow"}}, {"bass", {"low end"}}};
    const auto v = enumerate_variants("warm bass", dict, 100);
    EXPECT_EQ(v, (std::vector<std::string>{"cozy bass", "mellow bass", "warm low end", "cozy low end", "mellow low end"}));
    EXPECT_EQ(enumerate_variants("warm bass", dict, 2).size(), 2u);
}

TEST(Augment, VariantsDifferOnlyAtDictionaryWords) {
    const auto dict = load_synonyms(testutil::kData / "synonyms.json");
    const auto ds = load_dataset(testutil::kData / "synthetic-120.json");
    for (std::size_t i = 0; i < 10; ++i) {
        const auto& base = ds.entries[i].prompt;
        const auto bw = words(base);
        for (const auto& v : enumerate_variants(base, dict, 60)) {
            // multi-word synonyms shift positions, so only check single-word swaps
            const auto vw = words(v);
            if (vw.size() != bw.size()) continue;
            for (std::size_t k = 0; k < bw.size(); ++k) {
                if (vw[k] == bw[k]) continue;
                const auto toks = tokenize(bw[k]);
                ASSERT_EQ(toks.size(), 1u);
                EXPECT_TRUE(dict.contains(toks[0])) << base << " -> " << v;
            }
        }
    }
}

TEST(Augment, FactorOnFixture) {
    const auto ds = load_dataset(testutil::kData / "synthetic-120.json");
    const auto [train, val, test] = split_dataset(ds, {60, 30, 30, 7});
    const auto out = augment_prompts(train, load_synonyms(testutil::kData / "synonyms.json"), {50.0, 0.3, 7});
    const double factor = static_cast<double>(out.entries.size()) / static_cast<double>(train.entries.size());
    EXPECT_GE(factor, 45.0);
    EXPECT_LE(factor, 55.0);
    EXPECT_NO_THROW(out.validate());
    std::set<std::string> prompts;
    for (const auto& e : out.entries) EXPECT_TRUE(prompts.insert(e.prompt + "|" + e.id.substr(0, e.id.find('~'))).second);
}

TEST(Augment, Deterministic) {
    const auto ds = load_dataset(testutil::kData / "synthetic-120.json");
    const auto [train, val, test] = split_dataset(ds, {60, 30, 30, 7});
    const auto dict = load_synonyms(testutil::kData / "synonyms.json");
    EXPECT_EQ(serialize_dataset(augment_prompts(train, dict, {20.0, 0.3, 3})),
              serialize_dataset(augment_prompts(train, dict, {20.0, 0.3, 3})));
    EXPECT_NE(serialize_dataset(augment_prompts(train, dict, {20.0, 0.3, 3})),
              serialize_dataset(augment_prompts(train, dict, {20.0, 0.3, 4})));
}

TEST(Augment, BlurBoundAndOriginalsUntouched) {
    const auto ds = load_dataset(testutil::kData / "synthetic-120.json");
    const auto [train, val, test] = split_dataset(ds, {60, 30, 30, 7});
    const auto out = augment_prompts(train, load_synonyms(testutil::kData / "synonyms.json"), {10.0, 0.3, 7});
    std::map<std::string, const PromptEntry*> originals;
    for (const auto& e : train.entries) originals[e.id] = &e;
    for (const auto& e : out.entries) {
        const auto base = originals.at(e.id.substr(0, e.id.find('~')));
        ASSERT_EQ(e.responses.size(), base->responses.size());
        if (e.id == base->id) {
            EXPECT_EQ(e.responses, base->responses);
            continue;
        }
        for (std::size_t i = 0; i < e.responses.size(); ++i) {
            EXPECT_LE(std::abs(e.responses[i].x - base->responses[i].x), 0.3 + 1e-12);
            EXPECT_LE(std::abs(e.responses[i].y - base->responses[i].y), 0.3 + 1e-12);
        }
    }
}

TEST(Blur, ZeroIsIdentity) {
    const ResponseSet pts = {{1.25, -3}, {6, 6}, {-6, 0}};
    EXPECT_EQ(blur_labels(pts, 0.0, 9), pts);
}

TEST(Blur, ClampsAtCorner) {
    const ResponseSet pts(200, {6, 6});
    for (const auto& p : blur_labels(pts, 0.3, 9)) {
        EXPECT_LE(p.x, 6.0);
        EXPECT_LE(p.y, 6.0);
        EXPECT_GE(p.x, 5.7);
        EXPECT_GE(p.y, 5.7);
    }
    EXPECT_THROW(blur_labels(pts, -0.1, 9), Error);
}

TEST(Augment, ConfigValidation) {
    EXPECT_THROW(augment_prompts(one("x"), {}, {0.5, 0.3, 1}), Error);
    EXPECT_THROW(augment_prompts(one("x"), {}, {2.0, 6.0, 1}), Error);
    EXPECT_THROW(augment_prompts(Dataset{}, {}, {}), Error);
    EXPECT_THROW(augment_prompts(one("x"), {{"x", {"x"}}}, {}), Error);
}
