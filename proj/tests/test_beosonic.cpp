#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "eqalign/beosonic.hpp"
#include "eqalign/error.hpp"
#include "test_util.hpp"

using namespace eqalign;

namespace {

// Gain at normalised log-frequency u, evaluated on a grid whose endpoints hit u = 0 and u = 1.
double gain_at(const BeoCoord& c, double u) {
    const FreqGrid g{20.0, 20000.0, 3};
    const auto curve = frequency_response(c, g);
    if (u == 0.0) return curve.gains_db.front();
    if (u == 1.0) return curve.gains_db.back();
    return curve.gains_db[1];  // u = 0.5
}

}  // namespace

TEST(Clamp, IdentityInside) {
    EXPECT_EQ(clamp(0.0, 0.0), (BeoCoord{0.0, 0.0}));
    EXPECT_EQ(clamp(-2.5, 3.25), (BeoCoord{-2.5, 3.25}));
}

TEST(Clamp, BoundsOutside) { EXPECT_EQ(clamp(8.2, -9.0), (BeoCoord{6.0, -6.0})); }

TEST(Clamp, RejectsNonFinite) {
    EXPECT_THROW(clamp(std::nan(""), 0.0), Error);
    EXPECT_THROW(clamp(0.0, std::numeric_limits<double>::infinity()), Error);
}

TEST(MakeCoord, RejectsOutOfRange) {
    try {
        make_coord(7.0, 0.0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Validation);
        EXPECT_NE(std::string(e.what()).find("coordinate out of range"), std::string::npos);
    }
}

TEST(FreqGrid, LogSpacedAndIncreasing) {
    const FreqGrid g;
    const auto f = g.frequencies();
    ASSERT_EQ(f.size(), 256u);
    EXPECT_DOUBLE_EQ(f.front(), 20.0);
    EXPECT_NEAR(f.back(), 20000.0, 1e-9);
    for (std::size_t i = 1; i < f.size(); ++i) {
        EXPECT_LT(f[i - 1], f[i]);
        if (i >= 2) EXPECT_NEAR(std::log(f[i]) - std::log(f[i - 1]), std::log(f[i - 1]) - std::log(f[i - 2]), 1e-12);
    }
}

TEST(FreqGrid, Validation) {
    EXPECT_THROW((FreqGrid{0.0, 100.0, 10}.validate()), Error);
    EXPECT_THROW((FreqGrid{100.0, 100.0, 10}.validate()), Error);
    EXPECT_THROW((FreqGrid{20.0, 100.0, 1}.validate()), Error);
}

TEST(FrequencyResponse, OriginIsFlat) {
    const auto c = frequency_response({0.0, 0.0});
    for (double g : c.gains_db) EXPECT_EQ(g, 0.0);
}

TEST(FrequencyResponse, TiltEndpoints) {
    EXPECT_NEAR(gain_at({0.0, -6.0}, 0.0), 6.0, 1e-12);
    EXPECT_NEAR(gain_at({0.0, -6.0}, 1.0), -6.0, 1e-12);
}

TEST(FrequencyResponse, SmileShape) {
    EXPECT_NEAR(gain_at({6.0, 0.0}, 0.5), -6.0, 1e-12);
    EXPECT_NEAR(gain_at({6.0, 0.0}, 0.0), 6.0, 1e-12);
    EXPECT_NEAR(gain_at({6.0, 0.0}, 1.0), 6.0, 1e-12);
}

TEST(FrequencyResponse, BoundedByTwelve) {
    std::mt19937_64 g(3);
    for (const auto& p : testutil::random_points(g, 200)) {
        for (double v : frequency_response(p).gains_db) EXPECT_LE(std::abs(v), 12.0 + 1e-12);
    }
}

TEST(FrequencyResponse, Linearity) {
    std::mt19937_64 g(11);
    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    for (int t = 0; t < 50; ++t) {
        const auto pts = testutil::random_points(g, 2, -3.0, 3.0);
        const double a = coef(g), b = coef(g);
        const BeoCoord mix{a * pts[0].x + b * pts[1].x, a * pts[0].y + b * pts[1].y};
        const auto ca = frequency_response(pts[0]), cb = frequency_response(pts[1]), cm = frequency_response(mix);
        for (std::size_t i = 0; i < cm.gains_db.size(); ++i) {
            EXPECT_NEAR(cm.gains_db[i], a * ca.gains_db[i] + b * cb.gains_db[i], 1e-12);
        }
    }
}

TEST(FrequencyResponse, OddSymmetry) {
    std::mt19937_64 g(12);
    for (const auto& p : testutil::random_points(g, 50)) {
        const auto pos = frequency_response(p), neg = frequency_response({-p.x, -p.y});
        for (std::size_t i = 0; i < pos.gains_db.size(); ++i) EXPECT_EQ(pos.gains_db[i], -neg.gains_db[i]);
    }
}

TEST(FrequencyResponse, CornerOrdering) {
    const BeoCoord corners[] = {{6, 6}, {6, -6}, {-6, 6}, {-6, -6}};
    for (const auto& c : corners) {
        EXPECT_LE(gain_at(c, 0.0), gain_at({6, -6}, 0.0));  // most bass
        EXPECT_LE(gain_at(c, 1.0), gain_at({6, 6}, 1.0));   // most treble
        EXPECT_GE(gain_at(c, 0.0), gain_at({-6, 6}, 0.0));  // least bass
        EXPECT_GE(gain_at(c, 1.0), gain_at({-6, -6}, 1.0)); // least treble
    }
}

TEST(RenderCurve, FlatCsv) {
    const auto csv = render_curve(frequency_response({0, 0}, {20.0, 20000.0, 4}), CurveFormat::Csv);
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "freq_hz,gain_db");
    int rows = 0;
    while (std::getline(in, line)) {
        ++rows;
        EXPECT_EQ(line.substr(line.find(',') + 1), "0");
    }
    EXPECT_EQ(rows, 4);
}

TEST(RenderCurve, TwoPointGrid) {
    const auto csv = render_curve(frequency_response({1, 2}, {20.0, 20000.0, 2}), CurveFormat::Csv);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
}

TEST(RenderCurve, SvgWellFormed) {
    std::mt19937_64 g(4);
    for (const auto& p : testutil::random_points(g, 5)) {
        const auto svg = render_curve(frequency_response(p), CurveFormat::Svg);
        EXPECT_TRUE(testutil::xml_well_formed(svg));
        EXPECT_NE(svg.find("<svg"), std::string::npos);
    }
}

TEST(RenderCurve, RejectsMismatchedCurve) {
    GainCurve bad{{20.0, 40.0}, {0.0}};
    EXPECT_THROW(render_curve(bad, CurveFormat::Csv), Error);
}
