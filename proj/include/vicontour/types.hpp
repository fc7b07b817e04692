#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace vic {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2() = default;
    Vec2(double x_, double y_) : x(x_), y(y_) {}

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    Vec2 operator/(double s) const { return {x / s, y / s}; }
    Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
    Vec2& operator-=(const Vec2& o) { x -= o.x; y -= o.y; return *this; }

    double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    double norm() const { return std::hypot(x, y); }
    double squaredNorm() const { return x * x + y * y; }
};

inline Vec2 operator*(double s, const Vec2& v) { return v * s; }

/// Rotation of a unit tangent by -pi/2: e_r = e_s x e_z.
/// For a positively oriented (counterclockwise) closed curve this points outward.
inline Vec2 outwardNormal(const Vec2& es) { return {es.y, -es.x}; }

class VicError : public std::runtime_error {
public:
    explicit VicError(const std::string& msg) : std::runtime_error(msg) {}
};

/// The curve violates ||dXc/dx1|| > 0 at some x1.
class StationaryPointError : public VicError {
public:
    explicit StationaryPointError(const std::string& msg) : VicError(msg) {}
};

/// A sample point fell outside the valid image rectangle.
class OutOfBoundsError : public VicError {
public:
    explicit OutOfBoundsError(const std::string& msg) : VicError(msg) {}
};

class PgmFormatError : public VicError {
public:
    explicit PgmFormatError(const std::string& msg) : VicError(msg) {}
};

/// The sampled band shows no discernible black/white contrast.
class DegenerateContrastError : public VicError {
public:
    explicit DegenerateContrastError(const std::string& msg) : VicError(msg) {}
};

/// A 1D profile does not contain a usable 0 -> 1 transition.
class NoEdgeError : public VicError {
public:
    explicit NoEdgeError(const std::string& msg) : VicError(msg) {}
};

class SingularSystemError : public VicError {
public:
    explicit SingularSystemError(const std::string& msg) : VicError(msg) {}
};

class InvalidArgumentError : public VicError {
public:
    explicit InvalidArgumentError(const std::string& msg) : VicError(msg) {}
};

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

}  // namespace vic
