#include "vicontour/curve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

namespace vic {

namespace {

constexpr double kStationarySpeed = 1e-12;

double wrapUnit(double x1) {
    double w = x1 - std::floor(x1);
    // x1 == 1 stays at the end of the last span rather than wrapping to 0
    if (w == 0.0 && x1 > 0.0) w = 1.0;
    return w;
}

}  // namespace

void CurveFamily::validateParams(const CurveParams& p) const {
    if (p.size() != paramCount()) {
        throw InvalidArgumentError(name() + ": expected " +
                                   std::to_string(paramCount()) +
                                   " parameters, got " + std::to_string(p.size()));
    }
    for (double v : p.values) {
        if (!std::isfinite(v)) {
            throw InvalidArgumentError(name() + ": non-finite parameter");
        }
    }
}

// ---------------------------------------------------------------------------
// SegmentCurve

Vec2 SegmentCurve::point(const CurveParams& p, double x1) const {
    return {p[0] + x1 * (p[2] - p[0]), p[1] + x1 * (p[3] - p[1])};
}

Vec2 SegmentCurve::derivX1(const CurveParams& p, double) const {
    return {p[2] - p[0], p[3] - p[1]};
}

Vec2 SegmentCurve::derivX1X1(const CurveParams&, double) const { return {0, 0}; }

void SegmentCurve::shapeDerivatives(const CurveParams&, double x1,
                                    std::span<Vec2> dXdL,
                                    std::span<Vec2> dXdLdX1) const {
    dXdL[0] = {1.0 - x1, 0.0};
    dXdL[1] = {0.0, 1.0 - x1};
    dXdL[2] = {x1, 0.0};
    dXdL[3] = {0.0, x1};
    dXdLdX1[0] = {-1.0, 0.0};
    dXdLdX1[1] = {0.0, -1.0};
    dXdLdX1[2] = {1.0, 0.0};
    dXdLdX1[3] = {0.0, 1.0};
}

CurveParams SegmentCurve::reversed(const CurveParams& p) const {
    return CurveParams{{p[2], p[3], p[0], p[1]}};
}

// ---------------------------------------------------------------------------
// ConstrainedSegmentCurve

Vec2 ConstrainedSegmentCurve::point(const CurveParams& p, double x1) const {
    const double t = (x1 - 0.5) * length_;
    return {midX_ + t * std::cos(p[1]), p[0] + t * std::sin(p[1])};
}

Vec2 ConstrainedSegmentCurve::derivX1(const CurveParams& p, double) const {
    return {length_ * std::cos(p[1]), length_ * std::sin(p[1])};
}

Vec2 ConstrainedSegmentCurve::derivX1X1(const CurveParams&, double) const {
    return {0, 0};
}

void ConstrainedSegmentCurve::shapeDerivatives(const CurveParams& p, double x1,
                                               std::span<Vec2> dXdL,
                                               std::span<Vec2> dXdLdX1) const {
    const double t = (x1 - 0.5) * length_;
    dXdL[0] = {0.0, 1.0};
    dXdL[1] = {-t * std::sin(p[1]), t * std::cos(p[1])};
    dXdLdX1[0] = {0.0, 0.0};
    dXdLdX1[1] = {-length_ * std::sin(p[1]), length_ * std::cos(p[1])};
}

// ---------------------------------------------------------------------------
// CircleCurve

Vec2 CircleCurve::point(const CurveParams& p, double x1) const {
    const double a = kTwoPi * x1;
    return {p[0] + p[2] * std::cos(a), p[1] + p[2] * std::sin(a)};
}

Vec2 CircleCurve::derivX1(const CurveParams& p, double x1) const {
    const double a = kTwoPi * x1;
    return {-p[2] * kTwoPi * std::sin(a), p[2] * kTwoPi * std::cos(a)};
}

Vec2 CircleCurve::derivX1X1(const CurveParams& p, double x1) const {
    const double a = kTwoPi * x1;
    const double w2 = kTwoPi * kTwoPi;
    return {-p[2] * w2 * std::cos(a), -p[2] * w2 * std::sin(a)};
}

void CircleCurve::shapeDerivatives(const CurveParams&, double x1,
                                   std::span<Vec2> dXdL,
                                   std::span<Vec2> dXdLdX1) const {
    const double a = kTwoPi * x1;
    dXdL[0] = {1.0, 0.0};
    dXdL[1] = {0.0, 1.0};
    dXdL[2] = {std::cos(a), std::sin(a)};
    dXdLdX1[0] = {0.0, 0.0};
    dXdLdX1[1] = {0.0, 0.0};
    dXdLdX1[2] = {-kTwoPi * std::sin(a), kTwoPi * std::cos(a)};
}

// ---------------------------------------------------------------------------
// ClosedCubicBSplineCurve

ClosedCubicBSplineCurve::ClosedCubicBSplineCurve(int controlPoints)
    : numControl_(controlPoints) {
    if (controlPoints < 4) {
        throw InvalidArgumentError("bspline: need at least 4 control points");
    }
}

ClosedCubicBSplineCurve::Basis ClosedCubicBSplineCurve::basisAt(double x1) const {
    const double P = static_cast<double>(numControl_);
    const double t = wrapUnit(x1) * P;
    int span = static_cast<int>(std::floor(t));
    span = std::clamp(span, 0, numControl_ - 1);
    const double u = t - span;
    const double v = 1.0 - u;

    Basis b;
    b.span = span;
    b.b[0] = v * v * v / 6.0;
    b.b[1] = (3.0 * u * u * u - 6.0 * u * u + 4.0) / 6.0;
    b.b[2] = (-3.0 * u * u * u + 3.0 * u * u + 3.0 * u + 1.0) / 6.0;
    b.b[3] = u * u * u / 6.0;

    const double du0 = -0.5 * v * v;
    const double du1 = (9.0 * u * u - 12.0 * u) / 6.0;
    const double du2 = (-9.0 * u * u + 6.0 * u + 3.0) / 6.0;
    const double du3 = 0.5 * u * u;

    const double ddu0 = v;
    const double ddu1 = 3.0 * u - 2.0;
    const double ddu2 = 1.0 - 3.0 * u;
    const double ddu3 = u;

    // chain rule through t = x1 * P
    b.db[0] = du0 * P;
    b.db[1] = du1 * P;
    b.db[2] = du2 * P;
    b.db[3] = du3 * P;
    b.ddb[0] = ddu0 * P * P;
    b.ddb[1] = ddu1 * P * P;
    b.ddb[2] = ddu2 * P * P;
    b.ddb[3] = ddu3 * P * P;
    return b;
}

Vec2 ClosedCubicBSplineCurve::point(const CurveParams& p, double x1) const {
    const Basis bs = basisAt(x1);
    Vec2 r{0, 0};
    for (int k = 0; k < 4; ++k) {
        const int q = (bs.span + k - 1 + numControl_) % numControl_;
        r += Vec2{p[2 * q], p[2 * q + 1]} * bs.b[k];
    }
    return r;
}

Vec2 ClosedCubicBSplineCurve::derivX1(const CurveParams& p, double x1) const {
    const Basis bs = basisAt(x1);
    Vec2 r{0, 0};
    for (int k = 0; k < 4; ++k) {
        const int q = (bs.span + k - 1 + numControl_) % numControl_;
        r += Vec2{p[2 * q], p[2 * q + 1]} * bs.db[k];
    }
    return r;
}

Vec2 ClosedCubicBSplineCurve::derivX1X1(const CurveParams& p, double x1) const {
    const Basis bs = basisAt(x1);
    Vec2 r{0, 0};
    for (int k = 0; k < 4; ++k) {
        const int q = (bs.span + k - 1 + numControl_) % numControl_;
        r += Vec2{p[2 * q], p[2 * q + 1]} * bs.ddb[k];
    }
    return r;
}

void ClosedCubicBSplineCurve::shapeDerivatives(const CurveParams&, double x1,
                                               std::span<Vec2> dXdL,
                                               std::span<Vec2> dXdLdX1) const {
    const Basis bs = basisAt(x1);
    std::fill(dXdL.begin(), dXdL.end(), Vec2{0, 0});
    std::fill(dXdLdX1.begin(), dXdLdX1.end(), Vec2{0, 0});
    for (int k = 0; k < 4; ++k) {
        const int q = (bs.span + k - 1 + numControl_) % numControl_;
        dXdL[2 * q] += Vec2{bs.b[k], 0.0};
        dXdL[2 * q + 1] += Vec2{0.0, bs.b[k]};
        dXdLdX1[2 * q] += Vec2{bs.db[k], 0.0};
        dXdLdX1[2 * q + 1] += Vec2{0.0, bs.db[k]};
    }
}

CurveParams ClosedCubicBSplineCurve::reversed(const CurveParams& p) const {
    CurveParams r = p;
    for (int q = 0; q < numControl_; ++q) {
        const int s = (numControl_ - q) % numControl_;
        r[2 * q] = p[2 * s];
        r[2 * q + 1] = p[2 * s + 1];
    }
    return r;
}

double ClosedCubicBSplineCurve::circleShrinkFactor(int controlPoints) {
    return (4.0 + 2.0 * std::cos(kTwoPi / controlPoints)) / 6.0;
}

// ---------------------------------------------------------------------------
// Free operations

FrameAtPoint evalFrame(const CurveFamily& family, const CurveParams& p, double x1) {
    family.validateParams(p);
    FrameAtPoint f;
    f.point = family.point(p, x1);
    const Vec2 d1 = family.derivX1(p, x1);
    f.speed = d1.norm();
    if (f.speed <= kStationarySpeed) {
        throw StationaryPointError(family.name() + ": stationary point at x1=" +
                                   std::to_string(x1));
    }
    f.es = d1 / f.speed;
    f.er = outwardNormal(f.es);
    const Vec2 d2 = family.derivX1X1(p, x1);
    f.curvature = -d2.dot(f.er) / (f.speed * f.speed);
    return f;
}

namespace {

double compositeSimpson(const CurveFamily& family, const CurveParams& p,
                        double a, double b, int panels) {
    const double h = (b - a) / panels;
    double sum = family.derivX1(p, a).norm() + family.derivX1(p, b).norm();
    for (int i = 1; i < panels; ++i) {
        sum += (i % 2 ? 4.0 : 2.0) * family.derivX1(p, a + i * h).norm();
    }
    return sum * h / 3.0;
}

double adaptiveArcLength(const CurveFamily& family, const CurveParams& p,
                         double a, double b) {
    double coarse = compositeSimpson(family, p, a, b, 64);
    int panels = std::max(64, 4 * static_cast<int>(std::ceil(coarse)));
    if (panels % 2) ++panels;
    double prev = compositeSimpson(family, p, a, b, panels);
    for (int iter = 0; iter < 12; ++iter) {
        panels *= 2;
        const double cur = compositeSimpson(family, p, a, b, panels);
        if (std::abs(cur - prev) < 1e-7 * std::abs(cur)) return cur;
        prev = cur;
    }
    return prev;
}

}  // namespace

double arcLength(const CurveFamily& family, const CurveParams& p) {
    family.validateParams(p);
    const double L = adaptiveArcLength(family, p, 0.0, 1.0);
    if (L <= 0.0 || !std::isfinite(L)) {
        throw StationaryPointError(family.name() + ": degenerate curve length");
    }
    return L;
}

double arcLengthTo(const CurveFamily& family, const CurveParams& p, double x1) {
    family.validateParams(p);
    if (x1 <= 0.0) return 0.0;
    return adaptiveArcLength(family, p, 0.0, std::min(x1, 1.0));
}

AdmissibilityReport checkAdmissibility(const CurveFamily& family,
                                       const CurveParams& p, double R) {
    family.validateParams(p);
    AdmissibilityReport rep;

    const int n = 4096;
    double minSpeed = std::numeric_limits<double>::infinity();
    double maxSpeed = 0.0;
    double minSpeedX1 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x1 = (i + 0.5) / n;
        const double s = family.derivX1(p, x1).norm();
        if (s < minSpeed) {
            minSpeed = s;
            minSpeedX1 = x1;
        }
        maxSpeed = std::max(maxSpeed, s);
    }
    if (minSpeed <= std::max(kStationarySpeed, 1e-8 * maxSpeed)) {
        rep.errors.push_back("stationary point near x1=" + std::to_string(minSpeedX1) +
                             " (speed " + std::to_string(minSpeed) + ")");
        return rep;
    }

    for (int i = 0; i < n; ++i) {
        const double x1 = (i + 0.5) / n;
        const FrameAtPoint f = evalFrame(family, p, x1);
        const double rhoR = std::abs(f.curvature) * R;
        if (rhoR > rep.worstRhoR) {
            rep.worstRhoR = rhoR;
            rep.worstX1 = x1;
        }
    }
    if (rep.worstRhoR >= 1.0) {
        rep.warnings.push_back("virtual image overlaps itself: |rho|R = " +
                               std::to_string(rep.worstRhoR) + " at x1=" +
                               std::to_string(rep.worstX1));
    }
    return rep;
}

double signedArea(const CurveFamily& family, const CurveParams& p) {
    family.validateParams(p);
    const int n = 4096;
    double area = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x1 = (i + 0.5) / n;
        const Vec2 X = family.point(p, x1);
        const Vec2 d = family.derivX1(p, x1);
        area += X.x * d.y - X.y * d.x;
    }
    return 0.5 * area / n;
}

CurveParams ensureCounterclockwise(const CurveFamily& family, const CurveParams& p) {
    if (family.closed() && signedArea(family, p) < 0.0) {
        return family.reversed(p);
    }
    return p;
}

// ---------------------------------------------------------------------------
// Serialization

nlohmann::json curveToJson(const CurveFamily& family, const CurveParams& p) {
    nlohmann::json meta = nlohmann::json::object();
    if (const auto* bs = dynamic_cast<const ClosedCubicBSplineCurve*>(&family)) {
        meta["control_points"] = bs->numControl();
    } else if (const auto* cs = dynamic_cast<const ConstrainedSegmentCurve*>(&family)) {
        meta["length"] = cs->length();
        meta["mid_x"] = cs->midX();
    }
    return nlohmann::json{
        {"family", family.name()}, {"params", p.values}, {"meta", meta}};
}

std::shared_ptr<const CurveFamily> makeFamily(const std::string& kind,
                                              const nlohmann::json& meta) {
    if (kind == "circle") return std::make_shared<CircleCurve>();
    if (kind == "segment") return std::make_shared<SegmentCurve>();
    if (kind == "segment2") {
        return std::make_shared<ConstrainedSegmentCurve>(
            meta.at("length").get<double>(), meta.at("mid_x").get<double>());
    }
    if (kind == "bspline") {
        return std::make_shared<ClosedCubicBSplineCurve>(
            meta.value("control_points", 10));
    }
    throw InvalidArgumentError("unknown curve family: " + kind);
}

std::pair<std::shared_ptr<const CurveFamily>, CurveParams> curveFromJson(
    const nlohmann::json& j) {
    auto family = makeFamily(j.at("family").get<std::string>(),
                             j.value("meta", nlohmann::json::object()));
    CurveParams p{j.at("params").get<std::vector<double>>()};
    family->validateParams(p);
    return {family, p};
}

}  // namespace vic
