#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "vicontour/types.hpp"

namespace vic {

/// Ordered shape parameters of a curve family (pixel units, or radians for
/// angular parameters).
struct CurveParams {
    std::vector<double> values;

    CurveParams() = default;
    explicit CurveParams(std::vector<double> v) : values(std::move(v)) {}

    int size() const { return static_cast<int>(values.size()); }
    double& operator[](int i) { return values[static_cast<size_t>(i)]; }
    double operator[](int i) const { return values[static_cast<size_t>(i)]; }
};

/// Local differential geometry of the curve at one x1.
struct FrameAtPoint {
    Vec2 point;        ///< X^c in pixels
    Vec2 es;           ///< unit tangent
    Vec2 er;           ///< unit normal, es rotated by -pi/2 (outward on CCW closed curves)
    double speed = 0;  ///< ||dX^c/dx1||
    double curvature = 0;  ///< rho, 1/pixels
};

struct AdmissibilityReport {
    std::vector<std::string> errors;
    std::vector<std::string> warnings;
    double worstRhoR = 0.0;  ///< max |rho|*R over the sampled x1
    double worstX1 = 0.0;

    bool ok() const { return errors.empty(); }
};

/// A parametrized plane curve X^c(x1, lambda), x1 in [0,1], with analytic
/// first and mixed derivatives. Implementations are immutable and thread-safe.
class CurveFamily {
public:
    virtual ~CurveFamily() = default;

    virtual std::string name() const = 0;
    virtual int paramCount() const = 0;
    virtual bool closed() const = 0;

    virtual Vec2 point(const CurveParams& p, double x1) const = 0;
    virtual Vec2 derivX1(const CurveParams& p, double x1) const = 0;
    virtual Vec2 derivX1X1(const CurveParams& p, double x1) const = 0;

    /// Writes dX^c/dlambda_p into dXdL and d2X^c/(dlambda_p dx1) into
    /// dXdLdX1, one entry per parameter. Both spans must have paramCount()
    /// elements.
    virtual void shapeDerivatives(const CurveParams& p, double x1,
                                  std::span<Vec2> dXdL,
                                  std::span<Vec2> dXdLdX1) const = 0;

    /// Parameters describing the same curve traversed in the opposite
    /// direction (identity for families that are intrinsically oriented).
    virtual CurveParams reversed(const CurveParams& p) const { return p; }

    void validateParams(const CurveParams& p) const;
};

/// Straight segment between two endpoints: params [ax, ay, bx, by].
class SegmentCurve final : public CurveFamily {
public:
    std::string name() const override { return "segment"; }
    int paramCount() const override { return 4; }
    bool closed() const override { return false; }
    Vec2 point(const CurveParams& p, double x1) const override;
    Vec2 derivX1(const CurveParams& p, double x1) const override;
    Vec2 derivX1X1(const CurveParams& p, double x1) const override;
    void shapeDerivatives(const CurveParams& p, double x1, std::span<Vec2> dXdL,
                          std::span<Vec2> dXdLdX1) const override;
    CurveParams reversed(const CurveParams& p) const override;
};

/// Two-parameter segment used by the line studies: params [ordinate, angle].
/// Length and midpoint abscissa are frozen structural data; the segment is
/// centered at (midX, ordinate) with direction (cos angle, sin angle).
class ConstrainedSegmentCurve final : public CurveFamily {
public:
    ConstrainedSegmentCurve(double length, double midX)
        : length_(length), midX_(midX) {}

    std::string name() const override { return "segment2"; }
    int paramCount() const override { return 2; }
    bool closed() const override { return false; }
    Vec2 point(const CurveParams& p, double x1) const override;
    Vec2 derivX1(const CurveParams& p, double x1) const override;
    Vec2 derivX1X1(const CurveParams& p, double x1) const override;
    void shapeDerivatives(const CurveParams& p, double x1, std::span<Vec2> dXdL,
                          std::span<Vec2> dXdLdX1) const override;

    double length() const { return length_; }
    double midX() const { return midX_; }

private:
    double length_;
    double midX_;
};

/// Circle: params [cx, cy, r], X^c = c + r (cos 2 pi x1, sin 2 pi x1).
/// Always counterclockwise.
class CircleCurve final : public CurveFamily {
public:
    std::string name() const override { return "circle"; }
    int paramCount() const override { return 3; }
    bool closed() const override { return true; }
    Vec2 point(const CurveParams& p, double x1) const override;
    Vec2 derivX1(const CurveParams& p, double x1) const override;
    Vec2 derivX1X1(const CurveParams& p, double x1) const override;
    void shapeDerivatives(const CurveParams& p, double x1, std::span<Vec2> dXdL,
                          std::span<Vec2> dXdLdX1) const override;
};

/// Uniform closed cubic B-spline with P control points: params
/// [q0x, q0y, ..., q(P-1)x, q(P-1)y]; x1 in [0,1) maps linearly onto the P
/// knot spans.
class ClosedCubicBSplineCurve final : public CurveFamily {
public:
    explicit ClosedCubicBSplineCurve(int controlPoints);

    std::string name() const override { return "bspline"; }
    int paramCount() const override { return 2 * numControl_; }
    bool closed() const override { return true; }
    Vec2 point(const CurveParams& p, double x1) const override;
    Vec2 derivX1(const CurveParams& p, double x1) const override;
    Vec2 derivX1X1(const CurveParams& p, double x1) const override;
    void shapeDerivatives(const CurveParams& p, double x1, std::span<Vec2> dXdL,
                          std::span<Vec2> dXdLdX1) const override;
    CurveParams reversed(const CurveParams& p) const override;

    int numControl() const { return numControl_; }

    /// Control points on a circle produce a spline of slightly smaller
    /// radius; this is the shrink ratio (curve radius / control radius).
    static double circleShrinkFactor(int controlPoints);

private:
    struct Basis {
        int span;
        double b[4], db[4], ddb[4];  ///< value and derivatives w.r.t. x1
    };
    Basis basisAt(double x1) const;

    int numControl_;
};

FrameAtPoint evalFrame(const CurveFamily& family, const CurveParams& p, double x1);

/// Total curve length by adaptive composite Simpson quadrature.
double arcLength(const CurveFamily& family, const CurveParams& p);

/// Curvilinear abscissa s(x1).
double arcLengthTo(const CurveFamily& family, const CurveParams& p, double x1);

AdmissibilityReport checkAdmissibility(const CurveFamily& family,
                                       const CurveParams& p, double R);

/// Shoelace area of the closed curve (positive when counterclockwise).
double signedArea(const CurveFamily& family, const CurveParams& p);

/// Reverses the parameters if the closed curve is clockwise, so that e_r
/// points outward.
CurveParams ensureCounterclockwise(const CurveFamily& family, const CurveParams& p);

nlohmann::json curveToJson(const CurveFamily& family, const CurveParams& p);
std::pair<std::shared_ptr<const CurveFamily>, CurveParams> curveFromJson(
    const nlohmann::json& j);

/// Factory by family name; meta carries structural data ("control_points",
/// "length", "mid_x").
std::shared_ptr<const CurveFamily> makeFamily(const std::string& kind,
                                              const nlohmann::json& meta);

}  // namespace vic
