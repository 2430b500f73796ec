#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace eqalign {

/// Half-width of the controller square in dB. Both axes span [-kBound, kBound].
inline constexpr double kBound = 6.0;

/// A position of the two-axis timbre controller. x weights the smile curve
/// (positive boosts the band edges), y weights the spectral tilt (negative
/// boosts bass). Always inside the square; construct through clamp() or
/// make_coord() when the input is untrusted.
struct BeoCoord {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const BeoCoord&, const BeoCoord&) = default;
};

/// Clamp a raw pair into the square. Throws on non-finite input.
BeoCoord clamp(double x, double y);

/// Validate without clamping. Throws "coordinate out of range" for points outside the square.
BeoCoord make_coord(double x, double y);

bool in_square(double x, double y) noexcept;

/// Log-spaced frequency axis.
struct FreqGrid {
    double f_min = 20.0;
    double f_max = 20000.0;
    std::size_t n_points = 256;

    void validate() const;
    std::vector<double> frequencies() const;
};

struct GainCurve {
    std::vector<double> freqs;
    std::vector<double> gains_db;
};

/// Smile basis on normalised log-frequency u in [0, 1]: +1 at the band edges, -1 mid-band.
double smile_shape(double u) noexcept;
/// Tilt basis on normalised log-frequency u in [0, 1]: -1 at f_min, +1 at f_max.
double tilt_shape(double u) noexcept;

GainCurve frequency_response(const BeoCoord& coord, const FreqGrid& grid = {});

enum class CurveFormat { Csv, Svg };

void render_curve(const GainCurve& curve, CurveFormat format, std::ostream& out);
std::string render_curve(const GainCurve& curve, CurveFormat format);

}  // namespace eqalign
