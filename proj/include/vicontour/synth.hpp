#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "vicontour/raster.hpp"
#include "vicontour/rng.hpp"
#include "vicontour/types.hpp"

namespace vic {

/// Black disc on white background.
struct DiscShape {
    Vec2 center;
    double radius = 0.0;
};

/// Straight edge through `point` with direction (cos angle, sin angle);
/// the silhouette occupies the side toward +X2 (rows below the line), so
/// the segment normal e_r points into the background.
struct HalfPlaneShape {
    Vec2 point;
    double angle = 0.0;
};

/// Simple counterclockwise polygon; the interior is the silhouette.
struct PolygonShape {
    std::vector<Vec2> vertices;
};

struct Scene {
    std::variant<DiscShape, HalfPlaneShape, PolygonShape> shape;
    int width = 0;
    int height = 0;
};

/// Zero-mean Gaussian pixel noise and optional quantization, all driven by
/// the portable counter-based generator so results are bit-reproducible.
struct NoiseSpec {
    double sigma0 = 0.0;      ///< standard deviation, fraction of dynamic range
    std::uint64_t seed = 0;
    int quantizeBits = 0;     ///< 0 = none
};

/// Renders the exact pixel-coverage image: each value is the background
/// (white) area fraction of the unit square centered at the pixel.
RasterImage render(const Scene& scene);

/// Adds noise, then quantizes to 2^bits levels and clamps to [0,1] when
/// quantizeBits is set. Identity when sigma0 == 0 and no quantization.
RasterImage applyNoise(const RasterImage& img, const NoiseSpec& spec);

/// Disc scene with center and radius offsets drawn uniformly from [0,1) px,
/// sized so the disc keeps at least `margin` pixels to every border.
Scene discTrialScene(double baseRadius, SplitMix& rng, double margin = 4.0);

/// Exact area of the intersection between a disc (radius r, centered at the
/// origin) and the axis-aligned box [x0,x1] x [y0,y1].
double circleBoxArea(double r, double x0, double x1, double y0, double y1);

nlohmann::json sceneToJson(const Scene& scene);
Scene sceneFromJson(const nlohmann::json& j);

}  // namespace vic
