#pragma once

#include <span>
#include <string>
#include <vector>

#include "vicontour/types.hpp"

namespace vic {

/// Dense grayscale raster with values in [0,1]; black silhouette = 0, white
/// background = 1. Pixel (i,j) holds the value at the integer coordinate
/// point X = (i, j): i is the column (X1), j the row (X2). Immutable use
/// after construction is thread-safe.
class RasterImage {
public:
    RasterImage() = default;
    RasterImage(int width, int height, double fill = 0.0)
        : width_(width), height_(height),
          values_(static_cast<size_t>(width) * height, fill) {}

    int width() const { return width_; }
    int height() const { return height_; }

    /// Bit depth of the source file, 0 when synthetic/unquantized.
    int bitDepth() const { return bitDepth_; }
    void setBitDepth(int bits) { bitDepth_ = bits; }

    double at(int i, int j) const { return values_[static_cast<size_t>(j) * width_ + i]; }
    double& at(int i, int j) { return values_[static_cast<size_t>(j) * width_ + i]; }

    std::span<const double> values() const { return values_; }
    std::span<double> values() { return values_; }

private:
    int width_ = 0;
    int height_ = 0;
    int bitDepth_ = 0;
    std::vector<double> values_;
};

/// Loads a P2/P5 PGM with maxval 255 or 65535; values are scaled to
/// raw/maxval and the bit depth recorded.
RasterImage loadPgm(const std::string& path);

/// Writes binary P5 at the image's bit depth (8 when unset); exact inverse
/// of loadPgm at the stored depth.
void savePgm(const RasterImage& img, const std::string& path);

/// Bilinear interpolation of the four surrounding pixel-center values.
/// Throws OutOfBoundsError outside [0,width-1] x [0,height-1].
double sampleBilinear(const RasterImage& img, const Vec2& X);

/// Analytic gradient of the bilinear interpolant (per-cell bilinear in
/// position), consistent with sampleBilinear.
Vec2 gradientBilinear(const RasterImage& img, const Vec2& X);

bool inBounds(const RasterImage& img, const Vec2& X);

/// Affine gray-level model of the band: f = a*(ideal - 1/2) + 1/2 + b.
struct AffineGrayCorrection {
    double amplitude = 1.0;  ///< contrast a, > 0
    double bias = 0.0;       ///< luminance b

    double blackLevel() const { return bias + (1.0 - amplitude) / 2.0; }
    double whiteLevel() const { return bias + (1.0 + amplitude) / 2.0; }

    /// Maps a sampled gray value back to the ideal 0..1 range.
    double apply(double f) const { return (f - blackLevel()) / amplitude; }
};

/// Fits the correction from band samples: black level = mean f over
/// x2 in [-1,-0.75], white level = mean over [0.75,1]. Throws
/// DegenerateContrastError when white - black < 0.05.
AffineGrayCorrection fitAffineCorrection(std::span<const double> x2,
                                         std::span<const double> f);

}  // namespace vic
