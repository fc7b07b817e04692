#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include "vicontour/curve.hpp"
#include "vicontour/raster.hpp"
#include "vicontour/types.hpp"

namespace vic {

/// Regular midpoint-rule lattice over the virtual image domain
/// [0,1] x [-1,1]. Along the curve the mapped spacing stays below 1/3
/// pixel (n1 >= 3L); across the band it stays below 1/24 pixel
/// (n2 >= 48R) because quadrature noise in x2 feeds straight into the
/// measured edge position.
struct VirtualGrid {
    double R = 2.0;  ///< band half-width in pixels
    int n1 = 0;      ///< samples along x1
    int n2 = 0;      ///< samples along x2

    double x1At(int k) const { return (k + 0.5) / n1; }

    /// Cross-band nodes use a per-column golden-ratio phase instead of the
    /// plain midpoint offset 1/2. For bands aligned with the pixel lattice
    /// every column sees the interpolation kinks at the same sub-cell
    /// position and the quadrature error turns into a coherent bias of order
    /// 1/n2; rotating the phase column by column makes those errors average
    /// out along x1 while changing nothing for generic orientations.
    double x2Phase(int k) const {
        const double kGoldenRatioConj = 0.6180339887498949;
        const double f = (k + 1) * kGoldenRatioConj;
        return f - std::floor(f);
    }
    double x2At(int k, int m) const {
        return -1.0 + 2.0 * (m + x2Phase(k)) / n2;
    }
    /// Midpoint-rule cell area dx1*dx2.
    double cellArea() const { return 2.0 / (static_cast<double>(n1) * n2); }

    static VirtualGrid make(double R, double curveLength,
                            bool allowSmallR = false, int n1Override = 0,
                            int n2Override = 0);
};

/// Gray level of the elementary virtual image: linear ramp from 0 at
/// x2 = -1 (silhouette) to 1 at x2 = +1 (background).
inline double gLevel(double x2) { return (1.0 + x2) / 2.0; }

/// Physical-frame position of the virtual-image sample (x1, x2):
/// X = X^c + R x2 e_r.
inline Vec2 mapToImage(const FrameAtPoint& frame, double R, double x2) {
    return frame.point + (R * x2) * frame.er;
}

/// psi = (1/2) integral (f - g)^2 over the band, midpoint rule. `corr` is
/// applied to the sampled values (identity by default).
double costPsi(const RasterImage& img, const CurveFamily& family,
               const CurveParams& p, const VirtualGrid& grid,
               const AffineGrayCorrection& corr = {});

/// Analytic gradient of psi w.r.t. the shape parameters.
Eigen::VectorXd gradPsi(const RasterImage& img, const CurveFamily& family,
                        const CurveParams& p, const VirtualGrid& grid,
                        const AffineGrayCorrection& corr = {});

/// Gauss-Newton Hessian: the gradient-product term only; symmetric PSD.
Eigen::MatrixXd hessianGn(const RasterImage& img, const CurveFamily& family,
                          const CurveParams& p, const VirtualGrid& grid,
                          const AffineGrayCorrection& corr = {});

/// Full Hessian including the residual-weighted terms; second image
/// derivatives are differenced at band scale (2 px) so that sub-pixel
/// interpolation kinks average out, and the mixed curve derivative is
/// differenced in the parameters. Validation use only, never the solver.
Eigen::MatrixXd hessianFull(const RasterImage& img, const CurveFamily& family,
                            const CurveParams& p, const VirtualGrid& grid,
                            const AffineGrayCorrection& corr = {});

struct SolveOptions {
    double R = 2.0;
    double tolPx = 1e-6;   ///< convergence: max curve-point displacement per step
    int maxIter = 100;
    bool correction = true;  ///< refit the affine gray correction each iteration
    double rInit = 0.0;      ///< > R: start wide and shrink toward R
    int n1Override = 0;
    int n2Override = 0;
    bool allowSmallR = false;
};

struct TraceEntry {
    double psi = 0.0;
    double stepNorm = 0.0;
    double maxDisplacementPx = 0.0;
};

struct MeasurementResult {
    CurveParams params;
    double psi = 0.0;
    int iterations = 0;
    bool converged = false;
    std::string status;  ///< "converged", "max_iterations", "line_search_failed", ...
    std::vector<TraceEntry> trace;
    AffineGrayCorrection correction;
    VirtualGrid grid;
};

/// Damped Gauss-Newton iteration on psi. Out-of-bounds trial steps are
/// rejected by the damping loop; non-convergence is reported in the result,
/// not thrown. Throws only when the initial configuration is unusable.
MeasurementResult solve(const RasterImage& img, const CurveFamily& family,
                        const CurveParams& init, const SolveOptions& options = {});

/// Degenerate 1D VIC on a single profile (values at integer positions
/// 0..size-1 with one black-to-white transition): returns the edge abscissa
/// lambda solving (1/2R) integral_{lambda-R}^{lambda+R} (F - 1/2) dX = 0 on
/// the linear interpolation of the profile.
double solve1d(std::span<const double> profile, double R, double lambda0);

nlohmann::json measurementToJson(const MeasurementResult& result);

/// Threshold-at-0.5 moment initialization: centroid + equivalent radius for
/// circles, principal axis for segments. Returns parameters for `family`.
CurveParams autoInit(const RasterImage& img, const CurveFamily& family);

}  // namespace vic
