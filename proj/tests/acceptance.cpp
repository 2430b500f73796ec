// Acceptance suite. Prints one PASS/FAIL line per criterion and exits non-zero
// if any criterion fails. Tolerances are fixed here, not read from anywhere.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "eqalign/augment.hpp"
#include "eqalign/dataset.hpp"
#include "eqalign/density.hpp"
#include "eqalign/error.hpp"
#include "eqalign/eval.hpp"
#include "eqalign/parse.hpp"
#include "eqalign/recommend.hpp"
#include "eqalign/rng.hpp"
#include "eqalign/run_config.hpp"
#include "eqalign/stats.hpp"
#include "eqalign/transport.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace eqalign;

namespace {

const fs::path kData = EQALIGN_DATA_DIR;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::vector<BeoCoord> random_points(std::mt19937_64& g, std::size_t n) {
    std::uniform_real_distribution<double> u(-kBound, kBound);
    std::vector<BeoCoord> pts(n);
    for (auto& p : pts) p = {u(g), u(g)};
    return pts;
}

DiscreteMeasure random_measure(std::mt19937_64& g, std::size_t n) {
    std::uniform_real_distribution<double> w(0.05, 1.0);
    auto pts = random_points(g, n);
    std::vector<double> ws(n);
    for (auto& x : ws) x = w(g);
    const double s = std::accumulate(ws.begin(), ws.end(), 0.0);
    for (auto& x : ws) x /= s;
    return {std::move(pts), std::move(ws)};
}

double dist(const BeoCoord& a, const BeoCoord& b) { return std::hypot(a.x - b.x, a.y - b.y); }

// Minimum average matching cost by enumerating every permutation.
double brute_force_matching(const std::vector<BeoCoord>& a, const std::vector<BeoCoord>& b) {
    std::vector<std::size_t> perm(a.size());
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double c = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) c += dist(a[i], b[perm[i]]);
        best = std::min(best, c);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best / static_cast<double>(a.size());
}

Outcome criterion1() {
    std::mt19937_64 g(101);
    std::uniform_int_distribution<std::size_t> size(1, 6);
    double worst = 0.0;
    const auto t0 = Clock::now();
    for (int t = 0; t < 200; ++t) {
        const std::size_t n = size(g);
        const auto a = random_points(g, n), b = random_points(g, n);
        const double ref = brute_force_matching(a, b);
        const double ex = w1_exact(DiscreteMeasure::uniform(a), DiscreteMeasure::uniform(b)).distance;
        const double as = w1_assignment(a, b);
        worst = std::max({worst, std::abs(ex - ref), std::abs(as - ref)});
    }
    const double secs = seconds_since(t0);
    return {worst <= 1e-9 && secs < 5.0, fmt::format("max |err| {:.3g}, {:.2f} s", worst, secs)};
}

Outcome criterion2() {
    std::mt19937_64 g(202);
    std::uniform_int_distribution<std::size_t> size(1, 50);
    double sym = 0.0, self = 0.0, slack = std::numeric_limits<double>::infinity();
    for (int t = 0; t < 100; ++t) {
        const auto a = random_measure(g, size(g)), b = random_measure(g, size(g)), c = random_measure(g, size(g));
        const double ab = w1_exact(a, b).distance, ba = w1_exact(b, a).distance;
        const double bc = w1_exact(b, c).distance, ac = w1_exact(a, c).distance;
        sym = std::max(sym, std::abs(ab - ba));
        self = std::max({self, w1_exact(a, a).distance, w1_exact(b, b).distance});
        slack = std::min(slack, ab + bc - ac);
    }
    return {sym <= 1e-9 && self <= 1e-9 && slack >= -1e-9,
            fmt::format("symmetry {:.3g}, self {:.3g}, min triangle slack {:.3g}", sym, self, slack)};
}

Outcome criterion3() {
    std::mt19937_64 g(303);
    std::uniform_int_distribution<std::size_t> size(2, 30);
    SinkhornConfig cfg;
    cfg.epsilon = 0.01;
    cfg.cost_power = 1;
    double worst_ratio = 0.0, worst_self = 0.0, min_val = std::numeric_limits<double>::infinity();
    const auto t0 = Clock::now();
    for (int t = 0; t < 50; ++t) {
        const auto mu = DiscreteMeasure::uniform(random_points(g, size(g)));
        const auto nu = DiscreteMeasure::uniform(random_points(g, size(g)));
        const double w = w1_exact(mu, nu).distance;
        const double s = sinkhorn_divergence(mu, nu, cfg);
        worst_ratio = std::max(worst_ratio, std::abs(s - w) / (0.05 * w + 0.01));
        worst_self = std::max(worst_self, sinkhorn_divergence(mu, mu, cfg));
        min_val = std::min(min_val, s);
    }
    const double secs = seconds_since(t0);
    const bool ok = worst_ratio <= 1.0 && worst_self <= 1e-6 && min_val >= -1e-6 && secs < 30.0;
    return {ok, fmt::format("worst |S-W1| at {:.3f} of bound, max S(mu,mu) {:.3g}, min S {:.4g}, {:.2f} s",
                            worst_ratio, worst_self, min_val, secs)};
}

Outcome criterion4() {
    const auto mu = DiscreteMeasure::uniform({{0.0, 0.0}});
    const auto nu = DiscreteMeasure::uniform({{3.0, 4.0}});
    const double s = sliced_w1(mu, nu, 100000, 42);
    // Independent Monte Carlo estimate of E|<theta, v>| for v = (3, 4).
    std::mt19937_64 g(4242);
    std::uniform_real_distribution<double> ang(0.0, 2.0 * std::numbers::pi);
    double acc = 0.0;
    for (int i = 0; i < 100000; ++i) {
        const double th = ang(g);
        acc += std::abs(3.0 * std::cos(th) + 4.0 * std::sin(th));
    }
    const double mc = acc / 100000.0;
    const double closed = 10.0 / std::numbers::pi;
    const bool ok = std::abs(s - 3.1831) <= 0.02 && std::abs(mc - closed) <= 0.02;
    return {ok, fmt::format("sliced {:.4f}, oracle MC {:.4f}, closed form {:.4f}", s, mc, closed)};
}

Outcome criterion5() {
    // Eleven points standardised to unit sample deviation in each dimension.
    std::vector<double> xs = {-1.7, -0.9, -0.4, -0.1, 0.0, 0.2, 0.3, 0.8, 1.1, 1.9, 2.4};
    std::vector<double> ys = {0.5, -1.2, 2.2, 0.1, -0.3, 1.4, -2.0, 0.9, -0.6, 0.0, 1.7};
    auto standardise = [](std::vector<double>& v) {
        const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
        double ss = 0.0;
        for (double x : v) ss += (x - m) * (x - m);
        const double sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
        for (double& x : v) x = (x - m) / sd;
    };
    standardise(xs);
    standardise(ys);
    std::vector<BeoCoord> pts;
    for (std::size_t i = 0; i < xs.size(); ++i) pts.push_back({xs[i], ys[i]});
    const auto [hx, hy] = scott_bandwidth(pts);
    const bool ok = std::abs(hx - 0.6707) <= 1e-3 && std::abs(hy - 0.6707) <= 1e-3;
    return {ok, fmt::format("h = ({:.5f}, {:.5f})", hx, hy)};
}

double sup_deviation(const GridDensity& g) {
    const double flat = 1.0 / static_cast<double>(g.cell_prob.size());
    double m = 0.0;
    for (double p : g.cell_prob) m = std::max(m, std::abs(p - flat));
    return m;
}

Outcome criterion6() {
    int wins = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        Rng rng(seed);
        std::vector<BeoCoord> pts(500);
        for (auto& p : pts) p = {rng.uniform(-kBound, kBound), rng.uniform(-kBound, kBound)};
        KdeConfig cfg;
        const double refl = sup_deviation(reflective_kde(pts, cfg));
        const double stdv = sup_deviation(standard_kde(pts, cfg));
        if (refl < stdv) ++wins;
    }
    return {wins >= 19, fmt::format("reflective closer to flat in {}/20 trials", wins)};
}

Outcome criterion7() {
    Rng rng(5);
    std::vector<BeoCoord> pts;
    for (const BeoCoord mode : {BeoCoord{-3.0, 3.0}, BeoCoord{3.0, -3.0}}) {
        for (int i = 0; i < 200; ++i) pts.push_back(clamp(mode.x + rng.normal(), mode.y + rng.normal()));
    }
    auto count = [&](bool reflect, double scale) {
        KdeConfig cfg;
        cfg.reflect = reflect;
        cfg.bandwidth_scale = scale;
        return count_local_maxima(kde(pts, cfg));
    };
    const std::size_t r1 = count(true, 1.0), r2 = count(true, 2.0), s3 = count(false, 3.0);
    const bool ok = r1 == 2 && r2 == 2 && s3 == 1;
    return {ok, fmt::format("reflective maxima {} (1x), {} (2x); standard maxima {} (3x, expected 1)", r1, r2, s3)};
}

Outcome criterion8() {
    const std::vector<BeoCoord> set = {{-1.0, 2.0}, {0.5, -0.5}, {3.0, 1.0}, {-2.5, -4.0}, {4.0, 4.5}};
    const double same = reflective_kantorovich(set, set);
    KdeConfig cfg;
    cfg.bandwidth = std::pair{0.25, 0.25};
    cfg.resolution = 32;
    const std::vector<BeoCoord> a = {{-3.0, 3.0}}, b = {{3.0, -3.0}};
    const double d = reflective_kantorovich(a, b, cfg);
    const bool ok = std::abs(same) <= 1e-9 && std::abs(d - 8.485) <= 0.25;
    return {ok, fmt::format("identical {:.3g}, singletons {:.4f}", same, d)};
}

// --- statistics oracle, independent of the library's ranking code --------

double oracle_h(const std::vector<double>& pooled, const std::vector<std::size_t>& sizes) {
    const std::size_t n = pooled.size();
    std::vector<double> sorted = pooled;
    std::sort(sorted.begin(), sorted.end());
    auto rank_of = [&](double v) {
        const auto lo = std::lower_bound(sorted.begin(), sorted.end(), v) - sorted.begin();
        const auto hi = std::upper_bound(sorted.begin(), sorted.end(), v) - sorted.begin();
        return 0.5 * static_cast<double>(lo + 1 + hi);
    };
    double ties = 0.0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && sorted[j] == sorted[i]) ++j;
        const double t = static_cast<double>(j - i);
        ties += t * t * t - t;
        i = j;
    }
    const double N = static_cast<double>(n);
    double acc = 0.0;
    std::size_t off = 0;
    for (std::size_t s : sizes) {
        double r = 0.0;
        for (std::size_t i = 0; i < s; ++i) r += rank_of(pooled[off + i]);
        acc += r * r / static_cast<double>(s);
        off += s;
    }
    const double h = 12.0 / (N * (N + 1.0)) * acc - 3.0 * (N + 1.0);
    return h / (1.0 - ties / (N * N * N - N));
}

std::vector<double> oracle_mean_ranks(const std::vector<double>& pooled, const std::vector<std::size_t>& sizes) {
    std::vector<double> sorted = pooled;
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> means;
    std::size_t off = 0;
    for (std::size_t s : sizes) {
        double r = 0.0;
        for (std::size_t i = 0; i < s; ++i) {
            const double v = pooled[off + i];
            const auto lo = std::lower_bound(sorted.begin(), sorted.end(), v) - sorted.begin();
            const auto hi = std::upper_bound(sorted.begin(), sorted.end(), v) - sorted.begin();
            r += 0.5 * static_cast<double>(lo + 1 + hi);
        }
        means.push_back(r / static_cast<double>(s));
        off += s;
    }
    return means;
}

struct OracleP {
    double kw = 0.0;
    std::vector<std::vector<double>> dunn;  // Bonferroni-adjusted, upper triangle used
};

OracleP permutation_oracle(const Groups& groups, std::uint64_t seed) {
    std::vector<double> pooled;
    std::vector<std::size_t> sizes;
    for (const auto& g : groups) {
        pooled.insert(pooled.end(), g.begin(), g.end());
        sizes.push_back(g.size());
    }
    const std::size_t k = groups.size();
    const double h0 = oracle_h(pooled, sizes);
    const auto m0 = oracle_mean_ranks(pooled, sizes);
    std::mt19937_64 g(seed);
    const int n_perm = 100000;
    int kw_hits = 0;
    std::vector<std::vector<int>> hits(k, std::vector<int>(k, 0));
    std::vector<double> work = pooled;
    for (int r = 0; r < n_perm; ++r) {
        std::shuffle(work.begin(), work.end(), g);
        if (oracle_h(work, sizes) >= h0 - 1e-9) ++kw_hits;
        const auto m = oracle_mean_ranks(work, sizes);
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = i + 1; j < k; ++j)
                if (std::abs(m[i] - m[j]) >= std::abs(m0[i] - m0[j]) - 1e-9) ++hits[i][j];
    }
    OracleP out;
    out.kw = static_cast<double>(kw_hits) / n_perm;
    out.dunn.assign(k, std::vector<double>(k, 1.0));
    const double pairs = static_cast<double>(k * (k - 1) / 2);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = i + 1; j < k; ++j)
            out.dunn[i][j] = std::min(1.0, pairs * static_cast<double>(hits[i][j]) / n_perm);
    return out;
}

Outcome criterion9() {
    const std::vector<Groups> fixtures = {
        {{1, 2, 3}, {4, 5, 6}},
        {{1.2, 3.4, 2.2, 5.0, 3.4}, {4.1, 6.3, 5.0, 7.7}, {2.0, 8.8, 9.1, 6.6, 7.2, 3.4}},
        {{0.8, 1.9, 2.5, 3.1, 0.4, 2.2, 1.7, 2.9},
         {2.6, 3.8, 4.4, 1.5, 3.3, 4.9, 2.1, 3.6, 5.2},
         {3.9, 5.5, 4.7, 6.1, 2.8, 5.0, 6.6, 4.2, 5.8, 3.0}},
    };
    double worst = 0.0;
    for (std::size_t f = 0; f < fixtures.size(); ++f) {
        const auto& grp = fixtures[f];
        const auto oracle = permutation_oracle(grp, 9000 + f);
        const auto kw = kruskal_wallis(grp, PMethod::Permutation);
        const auto dunn = dunn_posthoc(grp, Correction::Bonferroni, PMethod::Permutation);
        worst = std::max(worst, std::abs(kw.p - oracle.kw));
        for (std::size_t i = 0; i < grp.size(); ++i)
            for (std::size_t j = i + 1; j < grp.size(); ++j) worst = std::max(worst, std::abs(dunn[i][j] - oracle.dunn[i][j]));
    }
    const double h = kruskal_wallis(fixtures[0]).h;
    double rank_inv = 0.0;
    for (const auto& grp : fixtures) {
        Groups e = grp;
        for (auto& g : e)
            for (auto& v : g) v = std::exp(v);
        rank_inv = std::max(rank_inv, std::abs(kruskal_wallis(grp).h - kruskal_wallis(e).h));
    }
    const bool ok = worst <= 0.01 && std::abs(h - 3.857) <= 1e-3 && rank_inv <= 1e-9;
    return {ok, fmt::format("max |p - oracle| {:.4f}, H {:.4f}, exp() H drift {:.3g}", worst, h, rank_inv)};
}

Outcome criterion10() {
    const auto t0 = Clock::now();
    const std::vector<std::string> names = {"oracle", "preset", "random"};
    std::vector<EvalRun> first;
    std::string csv_a, csv_b;
    for (int pass = 0; pass < 2; ++pass) {
        std::vector<EvalRun> runs;
        for (const auto& n : names) runs.push_back(execute_run(load_run_config(kData / "configs" / (n + ".json"))).run);
        (pass == 0 ? csv_a : csv_b) = distances_csv(runs);
        if (pass == 0) first = runs;
    }
    const double secs = seconds_since(t0);
    const auto report = compare(first);
    std::vector<double> med;
    for (const auto& r : first) {
        std::vector<double> d;
        for (const auto& p : r.per_prompt) d.push_back(p.distance);
        med.push_back(boxplot_summary(d).median);
    }
    const double p_or = report.dunn_p[0][2];
    const bool sizes_ok = std::all_of(first.begin(), first.end(), [](const EvalRun& r) {
        return r.per_prompt.size() == 30 && r.error_count() == 0 && r.n_samples == 11 && r.metric == Metric::ReflectiveW1;
    });
    const bool ok = sizes_ok && med[0] < med[1] && med[1] < med[2] && p_or <= 0.01 && secs < 120.0 && csv_a == csv_b;
    return {ok, fmt::format("medians oracle {:.3f} < preset {:.3f} < random {:.3f}; Dunn p(oracle, random) {:.3g}; "
                            "reproducible {}; {:.1f} s for two passes",
                            med[0], med[1], med[2], p_or, csv_a == csv_b ? "yes" : "no", secs)};
}

Outcome criterion11() {
    const auto ds = load_dataset(kData / "synthetic-120.json");
    const auto st = prompt_stats(ds);
    const auto& md = ds.metadata;
    auto num = [&](const char* key) { return std::stod(md.at(std::string("expected_") + key)); };
    auto close = [](double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(b)); };
    const BeoCoord c = response_centroid(ds);
    const bool counts = st.total_prompts == static_cast<std::size_t>(num("total_prompts")) &&
                        st.total_annotations == static_cast<std::size_t>(num("total_annotations")) &&
                        st.vocab_size == static_cast<std::size_t>(num("vocab_size"));
    const bool reals = close(st.avg_words_per_prompt, num("avg_words_per_prompt")) && close(st.gv_avg, num("gv_avg")) &&
                       close(st.gv_min, num("gv_min")) && close(st.gv_max, num("gv_max")) &&
                       close(c.x, num("centroid_x")) && close(c.y, num("centroid_y"));
    return {counts && reals, fmt::format("{} prompts, {} annotations, vocab {}, {:.4f} words, gv avg {:.4f}",
                                         st.total_prompts, st.total_annotations, st.vocab_size,
                                         st.avg_words_per_prompt, st.gv_avg)};
}

Outcome criterion12() {
    const auto ds = load_dataset(kData / "synthetic-120.json");
    const auto [train, val, test] = split_dataset(ds, {60, 30, 30, 7});
    const auto val_before = serialize_dataset(val), test_before = serialize_dataset(test);
    const auto dict = load_synonyms(kData / "synonyms.json");
    const auto aug = augment_prompts(train, dict, {50.0, 0.3, 7});
    const double factor = static_cast<double>(aug.entries.size()) / static_cast<double>(train.entries.size());

    std::map<std::string, const PromptEntry*> source;
    for (const auto& e : train.entries) source[e.id] = &e;
    double worst_blur = 0.0;
    bool linked = true;
    for (const auto& e : aug.entries) {
        const auto pos = e.id.find("~aug");
        const auto it = source.find(e.id.substr(0, pos));
        if (it == source.end() || it->second->responses.size() != e.responses.size()) {
            linked = false;
            continue;
        }
        for (std::size_t i = 0; i < e.responses.size(); ++i) {
            worst_blur = std::max({worst_blur, std::abs(e.responses[i].x - it->second->responses[i].x),
                                   std::abs(e.responses[i].y - it->second->responses[i].y)});
        }
    }
    std::set<std::string> held;
    for (const auto* s : {&val, &test})
        for (const auto& e : s->entries) held.insert(e.id);
    bool disjoint = true;
    for (const auto& e : aug.entries) {
        if (held.count(e.id.substr(0, e.id.find("~aug")))) disjoint = false;
    }
    const bool untouched = serialize_dataset(val) == val_before && serialize_dataset(test) == test_before && disjoint;
    const bool ok = factor >= 45.0 && factor <= 55.0 && linked && worst_blur <= 0.3 + 1e-12 && untouched;
    return {ok, fmt::format("{} -> {} entries ({:.2f}x), max blur {:.4f} dB, held-out splits untouched: {}",
                            train.entries.size(), aug.entries.size(), factor, worst_blur, untouched ? "yes" : "no")};
}

Outcome criterion13() {
    using nlohmann::json;
    auto read_lines = [](const fs::path& p) {
        std::vector<json> out;
        std::ifstream in(p);
        for (std::string line; std::getline(in, line);)
            if (!line.empty()) out.push_back(json::parse(line));
        return out;
    };
    const auto valid = read_lines(kData / "parser_corpus" / "valid.jsonl");
    const auto invalid = read_lines(kData / "parser_corpus" / "invalid.jsonl");
    int ok_valid = 0, ok_invalid = 0;
    for (const auto& c : valid) {
        try {
            const auto got = parse_coords(c.at("text").get<std::string>(), c.at("expected_count").get<std::size_t>());
            const auto& exp = c.at("expected");
            bool same = got.size() == exp.size();
            for (std::size_t i = 0; same && i < got.size(); ++i) {
                same = std::abs(got[i].x - exp[i][0].get<double>()) <= 1e-12 &&
                       std::abs(got[i].y - exp[i][1].get<double>()) <= 1e-12;
            }
            if (same) ++ok_valid;
        } catch (...) {
        }
    }
    for (const auto& c : invalid) {
        try {
            parse_coords(c.at("text").get<std::string>(), c.at("expected_count").get<std::size_t>());
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::Parse) ++ok_invalid;
        } catch (...) {
        }
    }
    const bool ok = valid.size() == 40 && invalid.size() == 20 && ok_valid == 40 && ok_invalid == 20;
    return {ok, fmt::format("valid {}/{}, structured errors {}/{}", ok_valid, valid.size(), ok_invalid, invalid.size())};
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"exact OT matches brute force", criterion1},
        {"W1 metric axioms", criterion2},
        {"Sinkhorn fidelity", criterion3},
        {"sliced W1 closed form", criterion4},
        {"Scott bandwidth", criterion5},
        {"reflective KDE flatter on uniform data", criterion6},
        {"mode counts under reflective / standard KDE", criterion7},
        {"reflective Kantorovich sanity", criterion8},
        {"rank test p-values vs permutation oracle", criterion9},
        {"offline end-to-end protocol", criterion10},
        {"dataset statistics match metadata", criterion11},
        {"augmentation contract", criterion12},
        {"parser corpus", criterion13},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        if (!o.pass) ++failed;
        std::printf("criterion %zu: %s  %s (%s)\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first, o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
