#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "vicontour/types.hpp"

namespace vic {

enum class StudyKind { Disc, Segment, OneD, Bias };

struct StudyConfig {
    StudyKind kind = StudyKind::Disc;
    int trials = 100;          ///< disc study trial count
    std::uint64_t seed = 42;
    double R = 2.0;
    double sigma0 = 0.0;
    int quantizeBits = 8;      ///< 0 = keep the exact rendering
    double radius = 100.0;     ///< disc / bias study base radius
    double L = 100.0;          ///< segment study window length
    int levels = 10;           ///< levels per swept variable (segment study)
    bool correction = true;
    int threads = 0;           ///< 0 = hardware concurrency (capped by VICONTOUR_THREADS)
    int n1Override = 0;
    int n2Override = 0;
};

struct TrialRecord {
    std::vector<double> truth;
    std::vector<double> measured;
    double signedError = 0.0;  ///< px, normal-projected curve distance
    int iterations = 0;
    double psi = 0.0;
    bool converged = false;
};

struct StudyResult {
    StudyConfig config;
    std::vector<TrialRecord> trials;
    double mean = 0.0;    ///< px, over converged trials (pooled samples for segments)
    double stddev = 0.0;  ///< px
    double predictedSigmaD = 0.0;
    double predictedSigmaN = 0.0;
    int failures = 0;
    double maxAbsError = 0.0;  ///< 1D study
};

/// Disc trials: random sub-pixel center/radius, render, optional noise and
/// quantization, solve from truth perturbed by uniform +-0.5 px per
/// parameter; signed error is the mean normal-projected curve distance.
StudyResult runDiscStudy(const StudyConfig& config);

/// Line study: levels^3 sweep of edge angle over [0, pi/4], midpoint
/// ordinate offset over [0,1) px and measured-window length offset over
/// [0,1) px; mean/stddev are pooled over the per-x1 distance profile of all
/// trials.
StudyResult runSegmentStudy(const StudyConfig& config);

/// 1D exactness sweep: X0 over [-0.5, 0.5] (levels points) for R in
/// {1.6, 2, 3} plus an out-of-bound reference at R = 1.4 (reported only).
StudyResult runOneDStudy(const StudyConfig& config);

/// Brightness/contrast study on a disc: gray map F -> a(F-1/2)+1/2+b over a
/// grid of (a,b), solved with the correction both off and on. signedError is
/// the inward edge displacement (positive should match 2Rb).
StudyResult runBiasStudy(const StudyConfig& config);

StudyResult runStudy(const StudyConfig& config);

void writeTrialsCsv(const StudyResult& result, const std::string& path);
nlohmann::json summaryToJson(const StudyResult& result);

/// Least-squares constant c of the model sigma = c / L.
double fitInverseLaw(const std::vector<double>& lengths,
                     const std::vector<double>& sigmas);

}  // namespace vic
