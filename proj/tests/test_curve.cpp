#include <cmath>
#include <vector>

#include <doctest.h>
#include <nlohmann/json.hpp>

#include "vicontour/curve.hpp"
#include "vicontour/rng.hpp"

using namespace vic;

namespace {

// Central finite difference of the curve point w.r.t. one shape parameter.
Vec2 fdShapeDeriv(const CurveFamily& fam, const CurveParams& p, int q,
                  double x1, double h = 1e-6) {
    CurveParams lo = p, hi = p;
    lo[q] -= h;
    hi[q] += h;
    return (fam.point(hi, x1) - fam.point(lo, x1)) / (2.0 * h);
}

Vec2 fdMixedDeriv(const CurveFamily& fam, const CurveParams& p, int q,
                  double x1, double h = 1e-6) {
    CurveParams lo = p, hi = p;
    lo[q] -= h;
    hi[q] += h;
    return (fam.derivX1(hi, x1) - fam.derivX1(lo, x1)) / (2.0 * h);
}

void checkShapeDerivs(const CurveFamily& fam, const CurveParams& p,
                      double tol) {
    std::vector<Vec2> dXdL(static_cast<size_t>(fam.paramCount()));
    std::vector<Vec2> dXdLdX1(dXdL.size());
    for (double x1 : {0.05, 0.3, 0.62, 0.97}) {
        fam.shapeDerivatives(p, x1, dXdL, dXdLdX1);
        for (int q = 0; q < fam.paramCount(); ++q) {
            const Vec2 fd = fdShapeDeriv(fam, p, q, x1);
            CHECK((dXdL[static_cast<size_t>(q)] - fd).norm() <=
                  tol * (1.0 + fd.norm()));
            const Vec2 fdm = fdMixedDeriv(fam, p, q, x1);
            CHECK((dXdLdX1[static_cast<size_t>(q)] - fdm).norm() <=
                  tol * (1.0 + fdm.norm()));
        }
    }
}

CurveParams splineCircleParams(int nControl, double cx, double cy,
                               double curveRadius) {
    const double shrink = ClosedCubicBSplineCurve::circleShrinkFactor(nControl);
    const double rq = curveRadius / shrink;
    CurveParams p;
    p.values.resize(static_cast<size_t>(2 * nControl));
    for (int q = 0; q < nControl; ++q) {
        const double a = kTwoPi * q / nControl;
        p[2 * q] = cx + rq * std::cos(a);
        p[2 * q + 1] = cy + rq * std::sin(a);
    }
    return p;
}

}  // namespace

TEST_CASE("circle frame at the rightmost point") {
    CircleCurve circle;
    CurveParams p{{0.0, 0.0, 100.0}};
    const FrameAtPoint f = evalFrame(circle, p, 0.0);
    CHECK(f.point.x == doctest::Approx(100.0));
    CHECK(f.point.y == doctest::Approx(0.0));
    CHECK(f.es.x == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(f.es.y == doctest::Approx(1.0));
    // outward normal is the tangent rotated by -pi/2
    CHECK(f.er.x == doctest::Approx(1.0));
    CHECK(f.er.y == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(f.speed == doctest::Approx(kTwoPi * 100.0));
    CHECK(f.curvature == doctest::Approx(0.01));
}

TEST_CASE("frames stay orthonormal along every family") {
    CircleCurve circle;
    SegmentCurve segment;
    ConstrainedSegmentCurve segment2(100.0, 60.0);
    ClosedCubicBSplineCurve spline(8);

    const CurveParams pc{{12.0, -3.0, 40.0}};
    const CurveParams ps{{1.0, 2.0, 31.0, 17.0}};
    const CurveParams p2{{60.3, 0.21}};
    const CurveParams pb = splineCircleParams(8, 50.0, 50.0, 30.0);

    auto checkFrames = [](const CurveFamily& fam, const CurveParams& p) {
        for (int k = 0; k < 37; ++k) {
            const double x1 = (k + 0.5) / 37.0;
            const FrameAtPoint f = evalFrame(fam, p, x1);
            CHECK(f.es.norm() == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(f.er.norm() == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(std::abs(f.es.dot(f.er)) < 1e-12);
            CHECK(f.speed > 0.0);
        }
    };
    checkFrames(circle, pc);
    checkFrames(segment, ps);
    checkFrames(segment2, p2);
    checkFrames(spline, pb);
}

TEST_CASE("segment frame and reversal") {
    SegmentCurve seg;
    CurveParams p{{0.0, 0.0, 10.0, 0.0}};
    const FrameAtPoint f = evalFrame(seg, p, 0.25);
    CHECK(f.es.x == doctest::Approx(1.0));
    CHECK(f.er.x == doctest::Approx(0.0));
    CHECK(f.er.y == doctest::Approx(-1.0));
    CHECK(f.speed == doctest::Approx(10.0));
    CHECK(f.curvature == doctest::Approx(0.0));
    CHECK(f.point.x == doctest::Approx(2.5));

    const CurveParams rev = seg.reversed(p);
    const FrameAtPoint fr = evalFrame(seg, rev, 0.75);
    CHECK(fr.point.x == doctest::Approx(2.5));
    CHECK(fr.er.y == doctest::Approx(1.0));  // normal flips with orientation
}

TEST_CASE("arc length of the basic families") {
    CircleCurve circle;
    CHECK(arcLength(circle, CurveParams{{5.0, 7.0, 100.0}}) ==
          doctest::Approx(kTwoPi * 100.0).epsilon(1e-10));

    SegmentCurve seg;
    CHECK(arcLength(seg, CurveParams{{0.0, 0.0, 3.0, 4.0}}) ==
          doctest::Approx(5.0).epsilon(1e-12));

    ConstrainedSegmentCurve seg2(18.85, 40.0);
    CHECK(arcLength(seg2, CurveParams{{10.0, 0.3}}) ==
          doctest::Approx(18.85).epsilon(1e-12));
}

TEST_CASE("partial arc length is monotone and consistent") {
    CircleCurve circle;
    CurveParams p{{0.0, 0.0, 25.0}};
    const double total = arcLength(circle, p);
    CHECK(arcLengthTo(circle, p, 1.0) == doctest::Approx(total).epsilon(1e-10));
    CHECK(arcLengthTo(circle, p, 0.5) ==
          doctest::Approx(total / 2.0).epsilon(1e-10));
    double prev = 0.0;
    for (int k = 1; k <= 10; ++k) {
        const double s = arcLengthTo(circle, p, k / 10.0);
        CHECK(s > prev);
        prev = s;
    }
}

TEST_CASE("analytic shape derivatives match finite differences") {
    CircleCurve circle;
    checkShapeDerivs(circle, CurveParams{{12.0, -3.0, 40.0}}, 1e-6);

    SegmentCurve seg;
    checkShapeDerivs(seg, CurveParams{{1.0, 2.0, 31.0, 17.0}}, 1e-6);

    ConstrainedSegmentCurve seg2(100.0, 60.0);
    checkShapeDerivs(seg2, CurveParams{{60.3, 0.21}}, 1e-5);

    ClosedCubicBSplineCurve spline(10);
    checkShapeDerivs(spline, splineCircleParams(10, 0.0, 0.0, 50.0), 1e-6);
}

TEST_CASE("closed cubic spline on circular control points") {
    const int nc = 10;
    ClosedCubicBSplineCurve spline(nc);
    const double shrink = ClosedCubicBSplineCurve::circleShrinkFactor(nc);
    CHECK(shrink > 0.9);
    CHECK(shrink < 1.0);

    const double r = 100.0;
    const CurveParams p = splineCircleParams(nc, 0.0, 0.0, r);
    // ten-lobed radius ripple around the target circle stays below 0.05 px
    for (int k = 0; k < 100; ++k) {
        const double x1 = k / 100.0;
        CHECK(std::abs(spline.point(p, x1).norm() - r) < 0.05);
    }
    CHECK(arcLength(spline, p) == doctest::Approx(kTwoPi * r).epsilon(1e-3));
    CHECK(signedArea(spline, p) > 0.0);
    // convex control polygon gives positive curvature everywhere
    for (int k = 0; k < 100; ++k) {
        CHECK(evalFrame(spline, p, k / 100.0).curvature > 0.0);
    }
    // closure: the curve is periodic in x1
    const Vec2 a = spline.point(p, 0.0);
    const Vec2 b = spline.point(p, 1.0 - 1e-12);
    CHECK((a - b).norm() < 1e-8);
}

TEST_CASE("degenerate spline reports the stationary point") {
    ClosedCubicBSplineCurve spline(6);
    CurveParams p;
    p.values.assign(12, 5.0);  // all control points coincide
    CHECK_THROWS_AS(evalFrame(spline, p, 0.3), StationaryPointError);
}

TEST_CASE("admissibility flags over-curved configurations") {
    CircleCurve circle;
    const AdmissibilityReport ok =
        checkAdmissibility(circle, CurveParams{{50.0, 50.0, 100.0}}, 2.0);
    CHECK(ok.ok());
    CHECK(ok.worstRhoR == doctest::Approx(0.02).epsilon(1e-6));

    const AdmissibilityReport bad =
        checkAdmissibility(circle, CurveParams{{50.0, 50.0, 1.5}}, 2.0);
    CHECK_FALSE(bad.warnings.empty());  // band overlaps itself, |rho| R > 1
    CHECK(bad.worstRhoR > 1.0);

    ClosedCubicBSplineCurve spline(6);
    CurveParams flat;
    flat.values.assign(12, 1.0);
    CHECK_FALSE(checkAdmissibility(spline, flat, 2.0).ok());
}

TEST_CASE("counterclockwise normalization flips clockwise curves") {
    ClosedCubicBSplineCurve spline(8);
    CurveParams ccw = splineCircleParams(8, 0.0, 0.0, 20.0);
    CurveParams cw = spline.reversed(ccw);
    CHECK(signedArea(spline, cw) < 0.0);
    const CurveParams fixed = ensureCounterclockwise(spline, cw);
    CHECK(signedArea(spline, fixed) > 0.0);
    const CurveParams kept = ensureCounterclockwise(spline, ccw);
    for (int q = 0; q < spline.paramCount(); ++q) CHECK(kept[q] == ccw[q]);
}

TEST_CASE("curve JSON round trip") {
    CircleCurve circle;
    const CurveParams p{{12.25, -3.5, 41.0}};
    const nlohmann::json j = curveToJson(circle, p);
    const auto [fam, q] = curveFromJson(j);
    CHECK(fam->name() == "circle");
    REQUIRE(q.size() == 3);
    for (int i = 0; i < 3; ++i) CHECK(q[i] == p[i]);

    ConstrainedSegmentCurve seg2(77.5, 40.0);
    const nlohmann::json j2 = curveToJson(seg2, CurveParams{{10.0, 0.31}});
    const auto [fam2, q2] = curveFromJson(j2);
    CHECK(fam2->name() == "segment2");
    const auto& c2 = dynamic_cast<const ConstrainedSegmentCurve&>(*fam2);
    CHECK(c2.length() == doctest::Approx(77.5));
    CHECK(c2.midX() == doctest::Approx(40.0));

    ClosedCubicBSplineCurve spline(7);
    const CurveParams pb = splineCircleParams(7, 5.0, 6.0, 15.0);
    const auto [fam3, q3] = curveFromJson(curveToJson(spline, pb));
    CHECK(fam3->name() == "bspline");
    REQUIRE(q3.size() == 14);
    for (int i = 0; i < 14; ++i) CHECK(q3[i] == pb[i]);
}

TEST_CASE("parameter validation rejects wrong arity") {
    CircleCurve circle;
    CHECK_THROWS_AS(circle.validateParams(CurveParams{{1.0, 2.0}}),
                    InvalidArgumentError);
    const double nan = std::nan("");
    CHECK_THROWS_AS(evalFrame(circle, CurveParams{{1.0, 2.0, nan}}, 0.1),
                    InvalidArgumentError);
}
