#include "eqalign/beosonic.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <sstream>

#include "eqalign/error.hpp"
#include "eqalign/io.hpp"

namespace eqalign {

bool in_square(double x, double y) noexcept {
    return std::isfinite(x) && std::isfinite(y) && std::abs(x) <= kBound && std::abs(y) <= kBound;
}

BeoCoord clamp(double x, double y) {
    if (!std::isfinite(x) || !std::isfinite(y)) {
        throw validation_error(fmt::format("non-finite coordinate ({}, {})", x, y));
    }
    return {std::clamp(x, -kBound, kBound), std::clamp(y, -kBound, kBound)};
}

BeoCoord make_coord(double x, double y) {
    if (!std::isfinite(x) || !std::isfinite(y)) {
        throw validation_error(fmt::format("non-finite coordinate ({}, {})", x, y));
    }
    if (!in_square(x, y)) {
        throw validation_error(fmt::format("coordinate out of range: ({}, {})", x, y));
    }
    return {x, y};
}

void FreqGrid::validate() const {
    if (!(f_min > 0.0) || !std::isfinite(f_min)) throw validation_error("f_min must be > 0");
    if (!(f_max > f_min) || !std::isfinite(f_max)) throw validation_error("f_max must exceed f_min");
    if (n_points < 2) throw validation_error("frequency grid needs at least 2 points");
}

std::vector<double> FreqGrid::frequencies() const {
    validate();
    std::vector<double> f(n_points);
    const double lo = std::log(f_min);
    const double hi = std::log(f_max);
    for (std::size_t i = 0; i < n_points; ++i) {
        const double u = static_cast<double>(i) / static_cast<double>(n_points - 1);
        f[i] = std::exp(lo + u * (hi - lo));
    }
    // pin the end points so round-off in exp(log(.)) doesn't leak into output
    f.front() = f_min;
    f.back() = f_max;
    return f;
}

double smile_shape(double u) noexcept { return std::cos(2.0 * std::numbers::pi * u); }

double tilt_shape(double u) noexcept { return 2.0 * u - 1.0; }

GainCurve frequency_response(const BeoCoord& coord, const FreqGrid& grid) {
    if (!in_square(coord.x, coord.y)) throw validation_error("coordinate out of range");
    GainCurve curve;
    curve.freqs = grid.frequencies();
    curve.gains_db.resize(curve.freqs.size());
    const double n = static_cast<double>(grid.n_points - 1);
    for (std::size_t i = 0; i < curve.freqs.size(); ++i) {
        // exact grid position; recomputing u from the frequency would add round-off
        const double u = static_cast<double>(i) / n;
        curve.gains_db[i] = coord.x * smile_shape(u) + coord.y * tilt_shape(u);
    }
    return curve;
}

namespace {

void write_csv(const GainCurve& curve, std::ostream& out) {
    out << "freq_hz,gain_db\n";
    for (std::size_t i = 0; i < curve.freqs.size(); ++i) {
        out << io::format_double(curve.freqs[i]) << ',' << io::format_double(curve.gains_db[i]) << '\n';
    }
}

void write_svg(const GainCurve& curve, std::ostream& out) {
    constexpr double W = 640, H = 360, L = 60, R = 20, T = 20, B = 40;
    constexpr double g_lim = 12.0;
    const double lf0 = std::log10(curve.freqs.front());
    const double lf1 = std::log10(curve.freqs.back());
    auto px = [&](double f) { return L + (std::log10(f) - lf0) / (lf1 - lf0) * (W - L - R); };
    auto py = [&](double g) { return T + (g_lim - g) / (2 * g_lim) * (H - T - B); };

    out << fmt::format(R"(<?xml version="1.0" encoding="UTF-8"?>)"
                       "\n"
                       R"(<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}">)"
                       "\n",
                       W, H, W, H);
    out << fmt::format(R"(<rect x="0" y="0" width="{}" height="{}" fill="white"/>)"
                       "\n",
                       W, H);
    for (double g = -12; g <= 12; g += 6) {
        out << fmt::format(R"(<line x1="{:.2f}" y1="{:.2f}" x2="{:.2f}" y2="{:.2f}" stroke="#ddd"/>)"
                           "\n",
                           L, py(g), W - R, py(g));
        out << fmt::format(R"(<text x="{:.2f}" y="{:.2f}" font-size="11" text-anchor="end">{} dB</text>)"
                           "\n",
                           L - 6, py(g) + 4, g);
    }
    for (double f : {20.0, 100.0, 1000.0, 10000.0, 20000.0}) {
        if (f < curve.freqs.front() || f > curve.freqs.back()) continue;
        out << fmt::format(R"(<text x="{:.2f}" y="{:.2f}" font-size="11" text-anchor="middle">{} Hz</text>)"
                           "\n",
                           px(f), H - B + 16, f);
    }
    out << R"(<polyline fill="none" stroke="#1f77b4" stroke-width="2" points=")";
    for (std::size_t i = 0; i < curve.freqs.size(); ++i) {
        if (i) out << ' ';
        out << fmt::format("{:.2f},{:.2f}", px(curve.freqs[i]), py(curve.gains_db[i]));
    }
    out << "\"/>\n</svg>\n";
}

}  // namespace

void render_curve(const GainCurve& curve, CurveFormat format, std::ostream& out) {
    if (curve.freqs.size() != curve.gains_db.size() || curve.freqs.size() < 2) {
        throw validation_error("gain curve needs matching freq/gain arrays of length >= 2");
    }
    if (format == CurveFormat::Csv) {
        write_csv(curve, out);
    } else {
        write_svg(curve, out);
    }
    if (!out) throw io_error("failed writing curve");
}

std::string render_curve(const GainCurve& curve, CurveFormat format) {
    std::ostringstream ss;
    render_curve(curve, format, ss);
    return ss.str();
}

}  // namespace eqalign
