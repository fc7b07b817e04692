#include "vicontour/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "vicontour/diagnostics.hpp"
#include "vicontour/rng.hpp"
#include "vicontour/synth.hpp"
#include "vicontour/vic.hpp"

namespace vic {

namespace {

int resolveThreads(int requested) {
    int t = requested > 0 ? requested
                          : static_cast<int>(std::thread::hardware_concurrency());
    if (const char* env = std::getenv("VICONTOUR_THREADS")) {
        const int cap = std::atoi(env);
        if (cap > 0) t = std::min(t, cap);
    }
    return std::max(t, 1);
}

template <typename Fn>
void parallelFor(int n, int threads, Fn&& fn) {
    threads = std::min(threads, n);
    if (threads <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int w = 0; w < threads; ++w) {
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

/// Mean over x1 of (X^c(a) - X^c(b)) . e_r(b): the normal-projected curve
/// distance used as the scalar error of a trial.
double meanNormalDistance(const CurveFamily& family, const CurveParams& a,
                          const CurveParams& b) {
    const int samples = 256;
    double acc = 0.0;
    for (int k = 0; k < samples; ++k) {
        const double x1 = (k + 0.5) / samples;
        const FrameAtPoint ref = evalFrame(family, b, x1);
        acc += (family.point(a, x1) - ref.point).dot(ref.er);
    }
    return acc / samples;
}

void aggregate(StudyResult& result) {
    double sum = 0.0, sumsq = 0.0;
    int n = 0;
    for (const TrialRecord& t : result.trials) {
        if (!t.converged) {
            ++result.failures;
            continue;
        }
        sum += t.signedError;
        sumsq += t.signedError * t.signedError;
        ++n;
    }
    if (n > 0) {
        result.mean = sum / n;
        result.stddev =
            n > 1 ? std::sqrt(std::max(0.0, (sumsq - sum * sum / n) / (n - 1)))
                  : 0.0;
    }
}

}  // namespace

StudyResult runDiscStudy(const StudyConfig& config) {
    StudyResult result;
    result.config = config;
    result.trials.resize(static_cast<size_t>(config.trials));

    const CircleCurve circle;
    parallelFor(config.trials, resolveThreads(config.threads), [&](int t) {
        SplitMix rng(rng::subSeed(config.seed, static_cast<std::uint64_t>(t)));
        const Scene scene = discTrialScene(config.radius, rng, config.R + 2.0);
        const auto& disc = std::get<DiscShape>(scene.shape);

        RasterImage img = render(scene);
        if (config.sigma0 > 0.0 || config.quantizeBits > 0) {
            img = applyNoise(img, NoiseSpec{config.sigma0, rng.next(),
                                            config.quantizeBits});
        }

        const CurveParams truth{{disc.center.x, disc.center.y, disc.radius}};
        CurveParams init = truth;
        for (int q = 0; q < 3; ++q) init[q] += rng.uniform(-0.5, 0.5);

        TrialRecord rec;
        rec.truth = truth.values;
        try {
            SolveOptions opts;
            opts.R = config.R;
            opts.correction = config.correction;
            opts.n1Override = config.n1Override;
            opts.n2Override = config.n2Override;
            const MeasurementResult m = solve(img, circle, init, opts);
            rec.measured = m.params.values;
            rec.iterations = m.iterations;
            rec.psi = m.psi;
            rec.converged = m.converged;
            if (m.converged) {
                rec.signedError = meanNormalDistance(circle, m.params, truth);
            }
        } catch (const VicError&) {
            rec.converged = false;
        }
        result.trials[static_cast<size_t>(t)] = rec;
    });

    aggregate(result);
    const double L = kTwoPi * (config.radius + 0.5);
    result.predictedSigmaD = predictSigmaD(3, L);
    result.predictedSigmaN =
        predictSigmaN(config.sigma0, 3, config.R, L, config.quantizeBits);
    return result;
}

StudyResult runSegmentStudy(const StudyConfig& config) {
    StudyResult result;
    result.config = config;
    const int levels = std::max(config.levels, 1);
    const int total = levels * levels * levels;
    result.trials.resize(static_cast<size_t>(total));

    const int m = static_cast<int>(std::ceil(config.R)) + 8;
    const int side = static_cast<int>(std::ceil(config.L + 1.0)) + 2 * m;
    const double cx = (side - 1) / 2.0;
    const double cy = cx;

    // pooled first/second moments of the per-x1 distance profile
    std::vector<double> poolSum(static_cast<size_t>(total), 0.0);
    std::vector<double> poolSq(static_cast<size_t>(total), 0.0);
    std::vector<int> poolN(static_cast<size_t>(total), 0);
    const int profileSamples = 256;

    parallelFor(total, resolveThreads(config.threads), [&](int t) {
        const int ia = t / (levels * levels);
        const int iy = (t / levels) % levels;
        const int il = t % levels;
        const double theta =
            levels > 1 ? ia * (kPi / 4.0) / (levels - 1) : 0.0;
        const double dy = static_cast<double>(iy) / levels;
        const double dL = static_cast<double>(il) / levels;

        const double windowLength = config.L + dL;
        Scene scene;
        scene.width = side;
        scene.height = side;
        scene.shape = HalfPlaneShape{Vec2(cx, cy + dy), theta};

        RasterImage img = render(scene);
        SplitMix rng(rng::subSeed(config.seed, static_cast<std::uint64_t>(t)));
        if (config.sigma0 > 0.0 || config.quantizeBits > 0) {
            img = applyNoise(img, NoiseSpec{config.sigma0, rng.next(),
                                            config.quantizeBits});
        }

        const ConstrainedSegmentCurve family(windowLength, cx);
        const CurveParams truth{{cy + dy, theta}};
        CurveParams init = truth;
        init[0] += rng.uniform(-0.5, 0.5);
        init[1] += rng.uniform(-0.01, 0.01);

        TrialRecord rec;
        rec.truth = {truth[0], truth[1], windowLength};
        try {
            SolveOptions opts;
            opts.R = config.R;
            opts.correction = config.correction;
            opts.n1Override = config.n1Override;
            opts.n2Override = config.n2Override;
            const MeasurementResult res = solve(img, family, init, opts);
            rec.measured = res.params.values;
            rec.iterations = res.iterations;
            rec.psi = res.psi;
            rec.converged = res.converged;
            if (res.converged) {
                // perpendicular distance to the exact edge at matched x1
                const Vec2 erTrue{std::sin(theta), -std::cos(theta)};
                const Vec2 pTrue{cx, cy + dy};
                double acc = 0.0;
                for (int k = 0; k < profileSamples; ++k) {
                    const double x1 = (k + 0.5) / profileSamples;
                    const double d =
                        (family.point(res.params, x1) - pTrue).dot(erTrue);
                    acc += d;
                    poolSq[static_cast<size_t>(t)] += d * d;
                }
                poolSum[static_cast<size_t>(t)] = acc;
                poolN[static_cast<size_t>(t)] = profileSamples;
                rec.signedError = acc / profileSamples;
            }
        } catch (const VicError&) {
            rec.converged = false;
        }
        result.trials[static_cast<size_t>(t)] = rec;
    });

    double sum = 0.0, sq = 0.0;
    long n = 0;
    for (int t = 0; t < total; ++t) {
        if (!result.trials[static_cast<size_t>(t)].converged) {
            ++result.failures;
            continue;
        }
        sum += poolSum[static_cast<size_t>(t)];
        sq += poolSq[static_cast<size_t>(t)];
        n += poolN[static_cast<size_t>(t)];
    }
    if (n > 0) {
        result.mean = sum / n;
        result.stddev = std::sqrt(std::max(0.0, sq / n - result.mean * result.mean));
    }
    result.predictedSigmaD = predictSigmaD(2, config.L);
    result.predictedSigmaN =
        predictSigmaN(config.sigma0, 2, config.R, config.L, config.quantizeBits);
    return result;
}

StudyResult runOneDStudy(const StudyConfig& config) {
    StudyResult result;
    result.config = config;

    const std::vector<double> rValues{1.4, 1.6, 2.0, 3.0};
    const int points = 101;
    for (double R : rValues) {
        const int M = 2 * static_cast<int>(std::ceil(R)) + 7;
        const double center = (M - 1) / 2.0;
        for (int k = 0; k < points; ++k) {
            const double x0 = -0.5 + static_cast<double>(k) / (points - 1);
            std::vector<double> profile(static_cast<size_t>(M));
            for (int i = 0; i < M; ++i) {
                // pixel-integrated step edge at center + x0
                profile[static_cast<size_t>(i)] =
                    std::clamp(i + 0.5 - (center + x0), 0.0, 1.0);
            }
            TrialRecord rec;
            rec.truth = {x0, R};
            const double lambda = solve1d(profile, R, center);
            rec.measured = {lambda - center};
            rec.signedError = lambda - center - x0;
            rec.converged = true;
            result.trials.push_back(rec);
            if (R > 1.5) {
                result.maxAbsError =
                    std::max(result.maxAbsError, std::abs(rec.signedError));
            }
        }
    }
    aggregate(result);
    return result;
}

StudyResult runBiasStudy(const StudyConfig& config) {
    StudyResult result;
    result.config = config;

    const double radius = config.radius + 0.3;
    const int m = static_cast<int>(std::ceil(radius + 1.0 + config.R + 2.0));
    Scene scene;
    scene.width = 2 * m + 2;
    scene.height = 2 * m + 2;
    scene.shape = DiscShape{Vec2(m + 0.37, m + 0.61), radius};
    const RasterImage clean = render(scene);
    const auto& disc = std::get<DiscShape>(scene.shape);
    const CurveParams truth{{disc.center.x, disc.center.y, disc.radius}};

    // (a, b) pairs chosen to keep a*(F-1/2)+1/2+b inside [0,1]
    const std::vector<std::pair<double, double>> grid{
        {1.0, 0.0},   {0.8, 0.0},   {0.5, 0.0},  {0.8, 0.02},
        {0.8, -0.02}, {0.8, 0.05},  {0.8, -0.05}};

    const CircleCurve circle;
    for (const auto& [a, b] : grid) {
        RasterImage mapped = clean;
        for (double& v : mapped.values()) v = a * (v - 0.5) + 0.5 + b;
        if (config.quantizeBits > 0) {
            mapped = applyNoise(mapped, NoiseSpec{0.0, 0, config.quantizeBits});
        }

        for (int corrOn = 0; corrOn <= 1; ++corrOn) {
            CurveParams init = truth;
            init[0] += 0.31;
            init[1] -= 0.22;
            init[2] += 0.27;

            TrialRecord rec;
            rec.truth = {a, b, static_cast<double>(corrOn)};
            try {
                SolveOptions opts;
                opts.R = config.R;
                opts.correction = corrOn == 1;
                opts.n1Override = config.n1Override;
                opts.n2Override = config.n2Override;
                const MeasurementResult res = solve(mapped, circle, init, opts);
                rec.measured = res.params.values;
                rec.iterations = res.iterations;
                rec.psi = res.psi;
                rec.converged = res.converged;
                if (res.converged) {
                    // inward displacement of the measured curve, positive = 2Rb
                    rec.signedError = meanNormalDistance(circle, truth, res.params);
                }
            } catch (const VicError&) {
                rec.converged = false;
            }
            result.trials.push_back(rec);
        }
    }
    aggregate(result);
    return result;
}

StudyResult runStudy(const StudyConfig& config) {
    switch (config.kind) {
        case StudyKind::Disc: return runDiscStudy(config);
        case StudyKind::Segment: return runSegmentStudy(config);
        case StudyKind::OneD: return runOneDStudy(config);
        case StudyKind::Bias: return runBiasStudy(config);
    }
    throw InvalidArgumentError("unknown study kind");
}

void writeTrialsCsv(const StudyResult& result, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw VicError("cannot write " + path);
    out.precision(12);

    size_t nTruth = 0, nMeasured = 0;
    for (const TrialRecord& t : result.trials) {
        nTruth = std::max(nTruth, t.truth.size());
        nMeasured = std::max(nMeasured, t.measured.size());
    }
    out << "trial";
    for (size_t i = 0; i < nTruth; ++i) out << ",truth" << i;
    for (size_t i = 0; i < nMeasured; ++i) out << ",measured" << i;
    out << ",signed_error_px,iterations,psi,converged\n";

    for (size_t t = 0; t < result.trials.size(); ++t) {
        const TrialRecord& rec = result.trials[t];
        out << t;
        for (size_t i = 0; i < nTruth; ++i) {
            out << ',';
            if (i < rec.truth.size()) out << rec.truth[i];
        }
        for (size_t i = 0; i < nMeasured; ++i) {
            out << ',';
            if (i < rec.measured.size()) out << rec.measured[i];
        }
        out << ',' << rec.signedError << ',' << rec.iterations << ',' << rec.psi
            << ',' << (rec.converged ? 1 : 0) << '\n';
    }
}

nlohmann::json summaryToJson(const StudyResult& result) {
    const char* kind = "disc";
    switch (result.config.kind) {
        case StudyKind::Disc: kind = "disc"; break;
        case StudyKind::Segment: kind = "segment"; break;
        case StudyKind::OneD: kind = "one_d"; break;
        case StudyKind::Bias: kind = "bias"; break;
    }
    return nlohmann::json{
        {"study", kind},
        {"config", {{"trials", result.config.trials},
                    {"seed", result.config.seed},
                    {"R", result.config.R},
                    {"sigma0", result.config.sigma0},
                    {"quantize_bits", result.config.quantizeBits},
                    {"radius", result.config.radius},
                    {"L", result.config.L},
                    {"levels", result.config.levels},
                    {"correction", result.config.correction}}},
        {"mean_px", result.mean},
        {"stddev_px", result.stddev},
        {"predicted_sigma_d_px", result.predictedSigmaD},
        {"predicted_sigma_n_px", result.predictedSigmaN},
        {"max_abs_error_px", result.maxAbsError},
        {"converged_trials",
         static_cast<int>(result.trials.size()) - result.failures},
        {"failures", result.failures}};
}

double fitInverseLaw(const std::vector<double>& lengths,
                     const std::vector<double>& sigmas) {
    if (lengths.size() != sigmas.size() || lengths.empty()) {
        throw InvalidArgumentError("fitInverseLaw: mismatched inputs");
    }
    double num = 0.0, den = 0.0;
    for (size_t i = 0; i < lengths.size(); ++i) {
        num += sigmas[i] / lengths[i];
        den += 1.0 / (lengths[i] * lengths[i]);
    }
    return num / den;
}

}  // namespace vic
