#pragma once

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "vicontour/curve.hpp"
#include "vicontour/raster.hpp"
#include "vicontour/vic.hpp"

namespace vic {

/// Signed distance indicator per x1 column. mu > 0 means the true boundary
/// lies along +e_r (outside the current curve); R*mu expresses it in pixels.
struct MuProfile {
    std::vector<double> x1;
    std::vector<double> sPx;  ///< curvilinear abscissa, pixels
    std::vector<double> mu;   ///< dimensionless, |mu| <= 1
    std::vector<double> rMu;  ///< pixels
};

/// Single-sided amplitude spectrum of R*mu, normalized so a pure sinusoid of
/// amplitude A reports A at its wavelength. Harmonics k >= 1; dc kept apart.
struct Spectrum {
    double dc = 0.0;                   ///< |mean| of the signal
    std::vector<double> wavelengths;   ///< L/k, strictly decreasing
    std::vector<double> amplitudes;

    /// Largest non-DC amplitude and its wavelength.
    std::pair<double, double> peak() const;
};

MuProfile muProfile(const RasterImage& img, const CurveFamily& family,
                    const CurveParams& p, const VirtualGrid& grid,
                    const AffineGrayCorrection& corr = {});

Spectrum muSpectrum(const MuProfile& profile, double curveLength);

/// Discretization-floor standard deviation, empirical rule N/(20L).
double predictSigmaD(int numParams, double curveLength);

/// Noise-induced standard deviation sigma_eff * sqrt(2N/(RL)) with
/// sigma_eff^2 = sigma0^2 + sigma_0q^2; quantization noise
/// sigma_0q = 1/(2^bits sqrt(12)) enters when bitDepth > 0.
double predictSigmaN(double sigma0, int numParams, double R, double curveLength,
                     int bitDepth = 0);

double quantizationNoise(int bitDepth);

/// Uniform luminance offset b shifts the measured edge by delta = 2Rb.
double predictBrightnessBias(double R, double b);

struct UncertaintyReport {
    double sigmaD = 0.0;           ///< px
    double sigmaN = 0.0;           ///< px
    double sigma0q = 0.0;          ///< gray fraction
    double sigma0Effective = 0.0;  ///< gray fraction
    double predictedBiasPx = 0.0;  ///< signed, from the fitted luminance bias
    double peakAmplitudePx = 0.0;
    double peakWavelengthPx = 0.0;
    double headlineSigma = 0.0;  ///< max(sigmaD, sigmaN)
    // inputs
    int numParams = 0;
    double curveLength = 0.0;
    double R = 0.0;
    double sigma0 = 0.0;
    int bitDepth = 0;
    double fittedBias = 0.0;
};

/// Bundles the predictors and the mu-spectrum summary for a converged fit.
/// sigma0 is the caller's image-noise estimate; the image's recorded bit
/// depth feeds the quantization term.
UncertaintyReport uncertaintyReport(const RasterImage& img,
                                    const CurveFamily& family,
                                    const CurveParams& p,
                                    const VirtualGrid& grid, double sigma0);

nlohmann::json reportToJson(const UncertaintyReport& rep);
void writeMuProfileCsv(const MuProfile& profile, const std::string& path);
void writeSpectrumCsv(const Spectrum& spectrum, const std::string& path);

}  // namespace vic
