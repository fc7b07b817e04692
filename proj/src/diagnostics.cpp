#include "vicontour/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

namespace vic {

MuProfile muProfile(const RasterImage& img, const CurveFamily& family,
                    const CurveParams& p, const VirtualGrid& grid,
                    const AffineGrayCorrection& corr) {
    family.validateParams(p);
    MuProfile prof;
    prof.x1.reserve(grid.n1);
    prof.sPx.reserve(grid.n1);
    prof.mu.reserve(grid.n1);
    prof.rMu.reserve(grid.n1);

    double s = 0.0;
    for (int k = 0; k < grid.n1; ++k) {
        const double x1 = grid.x1At(k);
        const FrameAtPoint frame = evalFrame(family, p, x1);
        double mu = 0.0;
        for (int m = 0; m < grid.n2; ++m) {
            // Plain midpoint nodes rather than the solver's per-column
            // phases: this integrand does not vanish at x2 = +-1, so an
            // off-center node ladder would leak an O(1/n2) boundary term
            // into every column of the profile.
            const double x2 = -1.0 + 2.0 * (m + 0.5) / grid.n2;
            const double f =
                corr.apply(sampleBilinear(img, mapToImage(frame, grid.R, x2)));
            mu += 0.5 - f;
        }
        mu *= 2.0 / grid.n2;

        prof.x1.push_back(x1);
        prof.sPx.push_back(s + 0.5 * frame.speed / grid.n1);
        prof.mu.push_back(mu);
        prof.rMu.push_back(grid.R * mu);
        s += frame.speed / grid.n1;
    }
    return prof;
}

std::pair<double, double> Spectrum::peak() const {
    double bestA = 0.0, bestW = 0.0;
    for (size_t k = 0; k < amplitudes.size(); ++k) {
        if (amplitudes[k] > bestA) {
            bestA = amplitudes[k];
            bestW = wavelengths[k];
        }
    }
    return {bestA, bestW};
}

Spectrum muSpectrum(const MuProfile& profile, double curveLength) {
    const int n = static_cast<int>(profile.rMu.size());
    if (n < 2) throw InvalidArgumentError("muSpectrum: profile too short");
    for (int k = 1; k < n; ++k) {
        const double step = profile.x1[k] - profile.x1[k - 1];
        if (std::abs(step - profile.x1[1] + profile.x1[0]) > 1e-9) {
            throw InvalidArgumentError("muSpectrum: non-uniform x1 sampling");
        }
    }

    Spectrum spec;
    const int kmax = n / 2;
    spec.wavelengths.reserve(kmax);
    spec.amplitudes.reserve(kmax);
    for (int k = 0; k <= kmax; ++k) {
        double re = 0.0, im = 0.0;
        const double w = kTwoPi * k / n;
        for (int m = 0; m < n; ++m) {
            re += profile.rMu[m] * std::cos(w * m);
            im -= profile.rMu[m] * std::sin(w * m);
        }
        const double mag = std::hypot(re, im) / n;
        if (k == 0) {
            spec.dc = mag;
        } else {
            const bool nyquist = (2 * k == n);
            spec.wavelengths.push_back(curveLength / k);
            spec.amplitudes.push_back(nyquist ? mag : 2.0 * mag);
        }
    }
    return spec;
}

double predictSigmaD(int numParams, double curveLength) {
    if (numParams < 1 || curveLength <= 0.0) {
        throw InvalidArgumentError("predictSigmaD: need N >= 1 and L > 0");
    }
    return numParams / (20.0 * curveLength);
}

double quantizationNoise(int bitDepth) {
    if (bitDepth <= 0) return 0.0;
    return 1.0 / (std::pow(2.0, bitDepth) * std::sqrt(12.0));
}

double predictSigmaN(double sigma0, int numParams, double R, double curveLength,
                     int bitDepth) {
    if (R <= 0.0 || curveLength <= 0.0) {
        throw InvalidArgumentError("predictSigmaN: need R > 0 and L > 0");
    }
    const double q = quantizationNoise(bitDepth);
    const double sigmaEff = std::sqrt(sigma0 * sigma0 + q * q);
    return sigmaEff * std::sqrt(2.0 * numParams / (R * curveLength));
}

double predictBrightnessBias(double R, double b) { return 2.0 * R * b; }

UncertaintyReport uncertaintyReport(const RasterImage& img,
                                    const CurveFamily& family,
                                    const CurveParams& p,
                                    const VirtualGrid& grid, double sigma0) {
    UncertaintyReport rep;
    rep.numParams = family.paramCount();
    rep.curveLength = arcLength(family, p);
    rep.R = grid.R;
    rep.sigma0 = sigma0;
    rep.bitDepth = img.bitDepth();

    rep.sigmaD = predictSigmaD(rep.numParams, rep.curveLength);
    rep.sigmaN = predictSigmaN(sigma0, rep.numParams, grid.R, rep.curveLength,
                               img.bitDepth());
    rep.sigma0q = quantizationNoise(img.bitDepth());
    rep.sigma0Effective = std::sqrt(sigma0 * sigma0 + rep.sigma0q * rep.sigma0q);
    rep.headlineSigma = std::max(rep.sigmaD, rep.sigmaN);

    MuProfile prof = muProfile(img, family, p, grid);
    // brightness bias from the band's own gray statistics
    std::vector<double> x2(static_cast<size_t>(grid.n1) * grid.n2);
    std::vector<double> f(x2.size());
    for (int k = 0; k < grid.n1; ++k) {
        const FrameAtPoint frame = evalFrame(family, p, grid.x1At(k));
        for (int m = 0; m < grid.n2; ++m) {
            const size_t idx = static_cast<size_t>(k) * grid.n2 + m;
            x2[idx] = grid.x2At(k, m);
            f[idx] = sampleBilinear(img, mapToImage(frame, grid.R, x2[idx]));
        }
    }
    try {
        const AffineGrayCorrection corr = fitAffineCorrection(x2, f);
        rep.fittedBias = corr.bias;
        rep.predictedBiasPx = predictBrightnessBias(grid.R, corr.bias);
    } catch (const DegenerateContrastError&) {
        rep.fittedBias = 0.0;
        rep.predictedBiasPx = 0.0;
    }

    const Spectrum spec = muSpectrum(prof, rep.curveLength);
    const auto [amp, wav] = spec.peak();
    rep.peakAmplitudePx = amp;
    rep.peakWavelengthPx = wav;
    return rep;
}

nlohmann::json reportToJson(const UncertaintyReport& rep) {
    return nlohmann::json{
        {"sigma_d_px", rep.sigmaD},
        {"sigma_n_px", rep.sigmaN},
        {"sigma_0q", rep.sigma0q},
        {"sigma_0_effective", rep.sigma0Effective},
        {"predicted_bias_px", rep.predictedBiasPx},
        {"spectrum_peak", {{"amplitude_px", rep.peakAmplitudePx},
                           {"wavelength_px", rep.peakWavelengthPx}}},
        {"headline_sigma_px", rep.headlineSigma},
        {"inputs", {{"num_params", rep.numParams},
                    {"curve_length_px", rep.curveLength},
                    {"R", rep.R},
                    {"sigma0", rep.sigma0},
                    {"bit_depth", rep.bitDepth},
                    {"fitted_bias", rep.fittedBias}}}};
}

void writeMuProfileCsv(const MuProfile& profile, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw VicError("cannot write " + path);
    out << "x1,s_px,mu,R_mu\n";
    out.precision(12);
    for (size_t k = 0; k < profile.x1.size(); ++k) {
        out << profile.x1[k] << ',' << profile.sPx[k] << ',' << profile.mu[k]
            << ',' << profile.rMu[k] << '\n';
    }
}

void writeSpectrumCsv(const Spectrum& spectrum, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw VicError("cannot write " + path);
    out << "wavelength_px,amplitude_px\n";
    out.precision(12);
    for (size_t k = 0; k < spectrum.wavelengths.size(); ++k) {
        out << spectrum.wavelengths[k] << ',' << spectrum.amplitudes[k] << '\n';
    }
}

}  // namespace vic
