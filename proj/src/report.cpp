#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <sstream>

#include "eqalign/error.hpp"
#include "eqalign/eval.hpp"
#include "eqalign/io.hpp"

namespace eqalign {

namespace {

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::vector<double> used_values(const EvalRun& run, const TestReport& rep) {
    std::map<std::string, double> by_id;
    for (const auto& r : run.per_prompt) {
        if (r.ok()) by_id[r.id] = r.distance;
    }
    std::vector<double> out;
    for (const auto& id : rep.prompt_ids) out.push_back(by_id.at(id));
    return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(std::move(cur));
    return out;
}

}  // namespace

std::string distances_csv(const std::vector<EvalRun>& runs) {
    std::string out = "run,prompt_id,distance\n";
    for (const auto& run : runs) {
        for (const auto& r : run.per_prompt) {
            out += fmt::format("{},{},{}\n", csv_field(run.name), csv_field(r.id), r.ok() ? io::format_double(r.distance) : "");
        }
    }
    return out;
}

std::string summary_csv(const std::vector<EvalRun>& runs, const TestReport& report) {
    std::string out = "run,n,median,q1,q3,whisker_lo,whisker_hi,notch_lo,notch_hi\n";
    for (const auto& run : runs) {
        const auto v = used_values(run, report);
        const auto b = boxplot_summary(v);
        out += fmt::format("{},{},{},{},{},{},{},{},{}\n", csv_field(run.name), b.n, io::format_double(b.median),
                           io::format_double(b.q1), io::format_double(b.q3), io::format_double(b.whisker_lo),
                           io::format_double(b.whisker_hi), io::format_double(b.notch_lo), io::format_double(b.notch_hi));
    }
    return out;
}

std::string tests_csv(const TestReport& report) {
    std::string out = "test,run_a,run_b,statistic,p\n";
    out += fmt::format("kruskal_wallis,,,{},{}\n", io::format_double(report.kw_h), io::format_double(report.kw_p));
    for (std::size_t a = 0; a < report.names.size(); ++a) {
        for (std::size_t b = a + 1; b < report.names.size(); ++b) {
            out += fmt::format("dunn_bonferroni,{},{},,{}\n", csv_field(report.names[a]), csv_field(report.names[b]),
                               io::format_double(report.dunn_p[a][b]));
        }
    }
    return out;
}

std::string boxplot_svg(const std::vector<EvalRun>& runs, const TestReport& report) {
    const std::size_t k = runs.size();
    std::vector<BoxplotSummary> boxes;
    double top = 0.0;
    for (const auto& run : runs) {
        boxes.push_back(boxplot_summary(used_values(run, report)));
        const auto& b = boxes.back();
        top = std::max({top, b.whisker_hi, b.notch_hi, b.q3});
        for (double o : b.outliers) top = std::max(top, o);
    }
    if (!(top > 0.0)) top = 1.0;
    top *= 1.05;

    const double left = 70.0, plot_top = 40.0 + 28.0 * static_cast<double>(report.brackets.size());
    const double plot_h = 320.0, slot = 140.0;
    const double width = left + slot * static_cast<double>(k) + 30.0;
    const double height = plot_top + plot_h + 60.0;
    auto ypos = [&](double v) { return plot_top + plot_h * (1.0 - v / top); };
    auto xpos = [&](std::size_t i) { return left + slot * (static_cast<double>(i) + 0.5); };

    std::ostringstream s;
    s << fmt::format(R"(<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" width="{:.0f}" height="{:.0f}" viewBox="0 0 {:.0f} {:.0f}" font-family="sans-serif" font-size="12">
<rect width="100%" height="100%" fill="white"/>
)",
                     width, height, width, height);
    // axis and ticks
    s << fmt::format(R"(<line x1="{:.2f}" y1="{:.2f}" x2="{:.2f}" y2="{:.2f}" stroke="black"/>)", left, plot_top, left,
                     plot_top + plot_h)
      << '\n';
    for (int t = 0; t <= 5; ++t) {
        const double v = top * t / 5.0;
        s << fmt::format(R"(<line x1="{:.2f}" y1="{:.2f}" x2="{:.2f}" y2="{:.2f}" stroke="black"/>)", left - 5, ypos(v), left,
                         ypos(v))
          << '\n';
        s << fmt::format(R"(<text x="{:.2f}" y="{:.2f}" text-anchor="end">{:.2f}</text>)", left - 8, ypos(v) + 4, v) << '\n';
    }
    s << fmt::format(R"~(<text x="16" y="{:.2f}" transform="rotate(-90 16 {:.2f})" text-anchor="middle">{}</text>)~",
                     plot_top + plot_h / 2, plot_top + plot_h / 2, io::xml_escape("distance (" + to_string(runs[0].metric) + ")"))
      << '\n';

    for (std::size_t i = 0; i < k; ++i) {
        const auto& b = boxes[i];
        const double x = xpos(i), hw = 30.0, nw = 15.0;
        s << fmt::format(R"(<line x1="{0:.2f}" y1="{1:.2f}" x2="{0:.2f}" y2="{2:.2f}" stroke="black"/>)", x, ypos(b.whisker_lo),
                         ypos(b.q1))
          << '\n';
        s << fmt::format(R"(<line x1="{0:.2f}" y1="{1:.2f}" x2="{0:.2f}" y2="{2:.2f}" stroke="black"/>)", x, ypos(b.q3),
                         ypos(b.whisker_hi))
          << '\n';
        for (double w : {b.whisker_lo, b.whisker_hi}) {
            s << fmt::format(R"(<line x1="{:.2f}" y1="{:.2f}" x2="{:.2f}" y2="{:.2f}" stroke="black"/>)", x - nw, ypos(w), x + nw,
                             ypos(w))
              << '\n';
        }
        s << fmt::format(
                 R"(<polygon points="{:.2f},{:.2f} {:.2f},{:.2f} {:.2f},{:.2f} {:.2f},{:.2f} {:.2f},{:.2f} {:.2f},{:.2f} {:.2f},{:.2f} {:.2f},{:.2f} {:.2f},{:.2f} {:.2f},{:.2f}" fill="#9ecae1" stroke="black"/>)",
                 x - hw, ypos(b.q1), x - hw, ypos(b.notch_lo), x - nw, ypos(b.median), x - hw, ypos(b.notch_hi), x - hw,
                 ypos(b.q3), x + hw, ypos(b.q3), x + hw, ypos(b.notch_hi), x + nw, ypos(b.median), x + hw, ypos(b.notch_lo),
                 x + hw, ypos(b.q1))
          << '\n';
        s << fmt::format(R"(<line x1="{:.2f}" y1="{:.2f}" x2="{:.2f}" y2="{:.2f}" stroke="black" stroke-width="2"/>)", x - nw,
                         ypos(b.median), x + nw, ypos(b.median))
          << '\n';
        for (double o : b.outliers) {
            s << fmt::format(R"(<circle cx="{:.2f}" cy="{:.2f}" r="3" fill="none" stroke="black"/>)", x, ypos(o)) << '\n';
        }
        s << fmt::format(R"(<text x="{:.2f}" y="{:.2f}" text-anchor="middle">{}</text>)", x, plot_top + plot_h + 20,
                         io::xml_escape(report.names[i]))
          << '\n';
    }

    // narrow brackets sit lowest
    auto order = report.brackets;
    std::stable_sort(order.begin(), order.end(), [](const Bracket& p, const Bracket& q) { return (p.b - p.a) < (q.b - q.a); });
    for (std::size_t t = 0; t < order.size(); ++t) {
        const auto& br = order[t];
        const char* color = br.level <= 0.01 ? "red" : "black";
        const double y = plot_top - 12.0 - 28.0 * static_cast<double>(t);
        const double x1 = xpos(br.a), x2 = xpos(br.b);
        s << fmt::format(R"(<polyline points="{:.2f},{:.2f} {:.2f},{:.2f} {:.2f},{:.2f} {:.2f},{:.2f}" fill="none" stroke="{}"/>)",
                         x1, y + 8, x1, y, x2, y, x2, y + 8, color)
          << '\n';
        s << fmt::format(R"(<text x="{:.2f}" y="{:.2f}" text-anchor="middle" fill="{}">p={:.3g}</text>)", (x1 + x2) / 2, y - 3,
                         color, br.p)
          << '\n';
    }
    s << fmt::format(R"(<text x="{:.2f}" y="{:.2f}" text-anchor="middle">Kruskal-Wallis H={:.3f}, p={:.3g}</text>)", width / 2,
                     height - 12, report.kw_h, report.kw_p)
      << '\n';
    s << "</svg>\n";
    return s.str();
}

void emit_report(const TestReport& report, const std::vector<EvalRun>& runs, const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw io_error(fmt::format("cannot create {}: {}", out_dir.string(), ec.message()));
    io::write_atomic(out_dir / "distances.csv", distances_csv(runs));
    io::write_atomic(out_dir / "summary.csv", summary_csv(runs, report));
    io::write_atomic(out_dir / "tests.csv", tests_csv(report));
    io::write_atomic(out_dir / "boxplot.svg", boxplot_svg(runs, report));
}

EvalRun read_run_distances(const std::filesystem::path& csv_path) {
    std::istringstream in(io::read_file(csv_path));
    std::string line;
    if (!std::getline(in, line) || line != "run,prompt_id,distance") {
        throw validation_error(fmt::format("{}: not a distances.csv file", csv_path.string()));
    }
    EvalRun run;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 3) throw validation_error(fmt::format("{}:{}: expected 3 fields", csv_path.string(), lineno));
        if (run.name.empty()) run.name = f[0];
        if (f[0] != run.name) throw validation_error(fmt::format("{}: more than one run in file", csv_path.string()));
        PromptResult r;
        r.id = f[1];
        if (f[2].empty()) {
            r.error = "errored in source run";
        } else {
            const char* end = f[2].data() + f[2].size();
            const auto [ptr, err] = std::from_chars(f[2].data(), end, r.distance);
            if (err != std::errc() || ptr != end) {
                throw validation_error(fmt::format("{}:{}: bad distance '{}'", csv_path.string(), lineno, f[2]));
            }
        }
        run.per_prompt.push_back(std::move(r));
    }
    if (run.per_prompt.empty()) throw validation_error(fmt::format("{}: no rows", csv_path.string()));
    run.recommender = run.name;
    return run;
}

}  // namespace eqalign
