#include "vicontour/synth.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

namespace vic {

namespace {

// Area of ∫0^t sqrt(r^2 - u^2) du for t in [0, r].
double circularSliceArea(double r, double t) {
    t = std::clamp(t, 0.0, r);
    return 0.5 * (t * std::sqrt(std::max(r * r - t * t, 0.0)) +
                  r * r * std::asin(std::clamp(t / r, -1.0, 1.0)));
}

// Area of the disc intersected with [0,x] x [0,y] for x, y >= 0.
double quadrantArea(double r, double x, double y) {
    x = std::min(x, r);
    y = std::min(y, r);
    if (x <= 0.0 || y <= 0.0) return 0.0;
    const double xs = y >= r ? 0.0 : std::sqrt(r * r - y * y);
    if (x <= xs) return x * y;
    return y * xs + circularSliceArea(r, x) - circularSliceArea(r, xs);
}

// Signed version for a corner at (x, y) of either sign.
double cornerArea(double r, double x, double y) {
    const double s = (x < 0.0) != (y < 0.0) ? -1.0 : 1.0;
    return s * quadrantArea(r, std::abs(x), std::abs(y));
}

// Sutherland-Hodgman clip of a polygon against the half-plane n.X <= c.
void clipHalfPlane(std::vector<Vec2>& poly, const Vec2& n, double c,
                   std::vector<Vec2>& scratch) {
    scratch.clear();
    const size_t m = poly.size();
    for (size_t i = 0; i < m; ++i) {
        const Vec2& a = poly[i];
        const Vec2& b = poly[(i + 1) % m];
        const double da = n.dot(a) - c;
        const double db = n.dot(b) - c;
        if (da <= 0.0) {
            scratch.push_back(a);
            if (db > 0.0) scratch.push_back(a + (b - a) * (da / (da - db)));
        } else if (db <= 0.0) {
            scratch.push_back(a + (b - a) * (da / (da - db)));
        }
    }
    poly.swap(scratch);
}

double shoelaceArea(const std::vector<Vec2>& poly) {
    double area = 0.0;
    const size_t m = poly.size();
    for (size_t i = 0; i < m; ++i) {
        const Vec2& a = poly[i];
        const Vec2& b = poly[(i + 1) % m];
        area += a.x * b.y - a.y * b.x;
    }
    return 0.5 * area;
}

RasterImage renderDisc(const DiscShape& d, int width, int height) {
    if (d.radius <= 0.0) throw InvalidArgumentError("disc radius must be > 0");
    RasterImage img(width, height, 1.0);
    const double rr = d.radius;
    for (int j = 0; j < height; ++j) {
        const double dy = j - d.center.y;
        for (int i = 0; i < width; ++i) {
            const double dx = i - d.center.x;
            const double dist = std::hypot(dx, dy);
            if (dist <= rr - 0.7072) {
                img.at(i, j) = 0.0;
            } else if (dist < rr + 0.7072) {
                const double inside =
                    circleBoxArea(rr, dx - 0.5, dx + 0.5, dy - 0.5, dy + 0.5);
                img.at(i, j) = 1.0 - inside;
            }
        }
    }
    return img;
}

RasterImage renderHalfPlane(const HalfPlaneShape& h, int width, int height) {
    // silhouette where (X - p) . n > 0, with n the +X2-side normal
    const Vec2 n{-std::sin(h.angle), std::cos(h.angle)};
    const double c = n.dot(h.point);
    RasterImage img(width, height, 1.0);
    std::vector<Vec2> poly, scratch;
    poly.reserve(8);
    scratch.reserve(8);
    for (int j = 0; j < height; ++j) {
        for (int i = 0; i < width; ++i) {
            const double s = n.dot(Vec2(i, j)) - c;
            if (s <= -0.7072) continue;  // pure background
            if (s >= 0.7072) {
                img.at(i, j) = 0.0;
                continue;
            }
            poly.assign({Vec2(i - 0.5, j - 0.5), Vec2(i + 0.5, j - 0.5),
                         Vec2(i + 0.5, j + 0.5), Vec2(i - 0.5, j + 0.5)});
            clipHalfPlane(poly, n * -1.0, -c, scratch);  // keep n.X >= c
            img.at(i, j) = 1.0 - std::abs(shoelaceArea(poly));
        }
    }
    return img;
}

RasterImage renderPolygon(const PolygonShape& p, int width, int height) {
    if (p.vertices.size() < 3) {
        throw InvalidArgumentError("polygon needs at least 3 vertices");
    }
    RasterImage img(width, height, 1.0);
    std::vector<Vec2> poly, scratch;
    for (int j = 0; j < height; ++j) {
        for (int i = 0; i < width; ++i) {
            poly.assign(p.vertices.begin(), p.vertices.end());
            clipHalfPlane(poly, {-1, 0}, -(i - 0.5), scratch);
            clipHalfPlane(poly, {1, 0}, i + 0.5, scratch);
            clipHalfPlane(poly, {0, -1}, -(j - 0.5), scratch);
            clipHalfPlane(poly, {0, 1}, j + 0.5, scratch);
            if (poly.size() >= 3) {
                img.at(i, j) = 1.0 - std::abs(shoelaceArea(poly));
            }
        }
    }
    return img;
}

}  // namespace

double circleBoxArea(double r, double x0, double x1, double y0, double y1) {
    return cornerArea(r, x1, y1) - cornerArea(r, x0, y1) -
           cornerArea(r, x1, y0) + cornerArea(r, x0, y0);
}

RasterImage render(const Scene& scene) {
    if (scene.width <= 0 || scene.height <= 0) {
        throw InvalidArgumentError("scene image size must be positive");
    }
    return std::visit(
        [&](const auto& shape) -> RasterImage {
            using T = std::decay_t<decltype(shape)>;
            if constexpr (std::is_same_v<T, DiscShape>) {
                return renderDisc(shape, scene.width, scene.height);
            } else if constexpr (std::is_same_v<T, HalfPlaneShape>) {
                return renderHalfPlane(shape, scene.width, scene.height);
            } else {
                return renderPolygon(shape, scene.width, scene.height);
            }
        },
        scene.shape);
}

RasterImage applyNoise(const RasterImage& img, const NoiseSpec& spec) {
    if (spec.sigma0 < 0.0) throw InvalidArgumentError("noise sigma0 must be >= 0");
    RasterImage out = img;
    auto vals = out.values();
    if (spec.sigma0 > 0.0) {
        for (size_t k = 0; k < vals.size(); ++k) {
            vals[k] += spec.sigma0 * rng::gaussianAt(spec.seed, k);
        }
    }
    if (spec.quantizeBits > 0) {
        const double maxval = static_cast<double>((1ll << spec.quantizeBits) - 1);
        for (double& v : vals) {
            v = std::clamp(std::round(std::clamp(v, 0.0, 1.0) * maxval) / maxval,
                           0.0, 1.0);
        }
        out.setBitDepth(spec.quantizeBits);
    }
    return out;
}

Scene discTrialScene(double baseRadius, SplitMix& rng, double margin) {
    if (baseRadius <= 0.0) throw InvalidArgumentError("disc radius must be > 0");
    const double cx = rng.uniform();
    const double cy = rng.uniform();
    const double dr = rng.uniform();
    const int m = static_cast<int>(std::ceil(baseRadius + 1.0 + margin));
    Scene scene;
    scene.width = 2 * m + 2;
    scene.height = 2 * m + 2;
    scene.shape = DiscShape{Vec2(m + cx, m + cy), baseRadius + dr};
    return scene;
}

nlohmann::json sceneToJson(const Scene& scene) {
    nlohmann::json j{{"width", scene.width}, {"height", scene.height}};
    std::visit(
        [&](const auto& shape) {
            using T = std::decay_t<decltype(shape)>;
            if constexpr (std::is_same_v<T, DiscShape>) {
                j["shape"] = "disc";
                j["center"] = {shape.center.x, shape.center.y};
                j["radius"] = shape.radius;
            } else if constexpr (std::is_same_v<T, HalfPlaneShape>) {
                j["shape"] = "halfplane";
                j["point"] = {shape.point.x, shape.point.y};
                j["angle"] = shape.angle;
            } else {
                j["shape"] = "polygon";
                auto verts = nlohmann::json::array();
                for (const Vec2& v : shape.vertices) verts.push_back({v.x, v.y});
                j["vertices"] = verts;
            }
        },
        scene.shape);
    return j;
}

Scene sceneFromJson(const nlohmann::json& j) {
    Scene scene;
    scene.width = j.at("width").get<int>();
    scene.height = j.at("height").get<int>();
    const std::string kind = j.at("shape").get<std::string>();
    if (kind == "disc") {
        scene.shape = DiscShape{Vec2(j.at("center")[0], j.at("center")[1]),
                                j.at("radius").get<double>()};
    } else if (kind == "halfplane") {
        scene.shape = HalfPlaneShape{Vec2(j.at("point")[0], j.at("point")[1]),
                                     j.at("angle").get<double>()};
    } else if (kind == "polygon") {
        PolygonShape p;
        for (const auto& v : j.at("vertices")) p.vertices.emplace_back(v[0], v[1]);
        scene.shape = p;
    } else {
        throw InvalidArgumentError("unknown scene shape: " + kind);
    }
    return scene;
}

}  // namespace vic
