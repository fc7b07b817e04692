// Command-line frontend: synthetic scene rendering, contour measurement,
// band diagnostics and repeatability studies, all file-based.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "vicontour/bench.hpp"
#include "vicontour/curve.hpp"
#include "vicontour/diagnostics.hpp"
#include "vicontour/raster.hpp"
#include "vicontour/synth.hpp"
#include "vicontour/vic.hpp"

namespace {

using nlohmann::json;

std::pair<double, double> parsePair(const std::string& s, char sep) {
    const auto pos = s.find(sep);
    if (pos == std::string::npos) {
        throw CLI::ValidationError("expected two values separated by '" +
                                   std::string(1, sep) + "': " + s);
    }
    try {
        return {std::stod(s.substr(0, pos)), std::stod(s.substr(pos + 1))};
    } catch (const std::exception&) {
        throw CLI::ValidationError("bad numeric pair: " + s);
    }
}

void writeJsonFile(const json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw vic::VicError("cannot write " + path);
    out << j.dump(2) << '\n';
}

json readJsonFile(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw vic::VicError("cannot read " + path);
    return json::parse(in);
}

std::shared_ptr<const vic::CurveFamily> familyFromFlags(
    const std::string& name, int controlPoints, double length, double midX) {
    json meta;
    if (name == "bspline") meta["control_points"] = controlPoints;
    if (name == "segment2") {
        meta["length"] = length;
        meta["mid_x"] = midX;
    }
    return vic::makeFamily(name, meta);
}

vic::CurveParams parseInit(const std::string& init,
                           const vic::CurveFamily& family,
                           const vic::RasterImage& img) {
    if (init == "auto") return vic::autoInit(img, family);
    json j;
    if (!init.empty() && (init.front() == '[' || init.front() == '{')) {
        j = json::parse(init);
    } else {
        j = readJsonFile(init);
    }
    if (j.is_object()) {
        // accept a previous measurement or curve description
        if (j.contains("params")) j = j["params"];
        else if (j.contains("curve") && j["curve"].contains("params"))
            j = j["curve"]["params"];
    }
    vic::CurveParams p{j.get<std::vector<double>>()};
    family.validateParams(p);
    return p;
}

int runSynth(const std::string& sceneKind, const std::string& center,
             double radius, const std::string& point, double angle,
             const std::string& vertices, const std::string& size,
             double sigma0, std::uint64_t seed, int bits,
             const std::string& outPath) {
    vic::Scene scene;
    const auto [w, h] = parsePair(size, 'x');
    scene.width = static_cast<int>(w);
    scene.height = static_cast<int>(h);

    if (sceneKind == "disc") {
        const auto [cx, cy] = parsePair(center, ',');
        scene.shape = vic::DiscShape{vic::Vec2(cx, cy), radius};
    } else if (sceneKind == "halfplane") {
        const auto [px, py] = parsePair(point, ',');
        scene.shape = vic::HalfPlaneShape{vic::Vec2(px, py), angle};
    } else if (sceneKind == "polygon") {
        vic::PolygonShape poly;
        std::istringstream in(vertices);
        std::string token;
        while (in >> token) {
            const auto [x, y] = parsePair(token, ',');
            poly.vertices.emplace_back(x, y);
        }
        if (poly.vertices.size() < 3) {
            throw CLI::ValidationError("--vertices needs at least 3 x,y pairs");
        }
        scene.shape = std::move(poly);
    } else {
        throw CLI::ValidationError("unknown scene: " + sceneKind);
    }

    vic::RasterImage img = vic::render(scene);
    if (sigma0 > 0.0 || bits > 0) {
        img = vic::applyNoise(img, vic::NoiseSpec{sigma0, seed, bits});
    } else {
        img.setBitDepth(16);  // keep sub-1e-4 precision in the file
        img = vic::applyNoise(img, vic::NoiseSpec{0.0, 0, 16});
    }
    vic::savePgm(img, outPath);

    json sidecar = vic::sceneToJson(scene);
    sidecar["noise"] = {{"sigma0", sigma0}, {"seed", seed}, {"bits", bits}};
    sidecar["image"] = outPath;
    writeJsonFile(sidecar, outPath + ".json");
    std::cout << "wrote " << outPath << " (" << scene.width << "x"
              << scene.height << ") and " << outPath << ".json\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sub-pixel contour measurement on grayscale images"};
    app.require_subcommand(1);

    // ---- synth ----
    auto* synth = app.add_subcommand("synth", "Render an exact-coverage test image");
    std::string sceneKind = "disc", center = "50,50", point = "50,50";
    std::string vertices, size = "101x101", synthOut = "scene.pgm";
    double radius = 30.0, angle = 0.0, synthSigma0 = 0.0;
    std::uint64_t synthSeed = 0;
    int synthBits = 0;
    synth->add_option("--scene", sceneKind, "disc | halfplane | polygon");
    synth->add_option("--center", center, "disc center, x,y");
    synth->add_option("--radius", radius, "disc radius, px");
    synth->add_option("--point", point, "half-plane edge point, x,y");
    synth->add_option("--angle", angle, "half-plane edge angle, rad");
    synth->add_option("--vertices", vertices, "polygon, space-separated x,y pairs");
    synth->add_option("--size", size, "image size, WxH");
    synth->add_option("--noise", synthSigma0, "Gaussian noise sigma (gray fraction)");
    synth->add_option("--seed", synthSeed, "noise seed");
    synth->add_option("--bits", synthBits, "quantization depth (0 = 16-bit exact)");
    synth->add_option("--out", synthOut, "output PGM path");

    // ---- measure ----
    auto* measure = app.add_subcommand("measure", "Fit a curve family to an image");
    std::string imagePath, familyName = "circle", initSpec = "auto";
    std::string measureOut = "measurement.json";
    int controlPoints = 10, maxIter = 100, n1Override = 0, n2Override = 0;
    double segLength = 100.0, segMidX = 50.0;
    double R = 2.0, tol = 1e-6, rInit = 0.0;
    bool noCorrection = false, allowSmallR = false;
    measure->add_option("--image", imagePath, "input PGM")->required();
    measure->add_option("--family", familyName,
                        "circle | segment | segment2 | bspline");
    measure->add_option("--init", initSpec,
                        "JSON array, JSON file, or 'auto'");
    measure->add_option("--control-points", controlPoints, "bspline control count");
    measure->add_option("--length", segLength, "segment2 frozen length");
    measure->add_option("--mid-x", segMidX, "segment2 frozen midpoint abscissa");
    measure->add_option("--R", R, "band half-width, px");
    measure->add_option("--tol", tol, "convergence tolerance, px");
    measure->add_option("--max-iter", maxIter, "iteration cap");
    measure->add_option("--r-init", rInit, "initial widened half-width");
    measure->add_option("--n1", n1Override, "override samples along the curve");
    measure->add_option("--n2", n2Override, "override samples across the band");
    measure->add_flag("--no-correction", noCorrection,
                      "disable the affine gray correction");
    measure->add_flag("--allow-small-R", allowSmallR,
                      "permit R < 1.5 (uncertain regime)");
    measure->add_option("--out", measureOut, "result JSON path");

    // ---- diagnose ----
    auto* diagnose = app.add_subcommand(
        "diagnose", "Band residual profile, spectrum and uncertainty report");
    std::string diagImage, diagFamily = "circle", diagParams;
    std::string outProfile = "mu_profile.csv", outSpectrum = "spectrum.csv";
    std::string outReport = "report.json";
    int diagControl = 10, diagN1 = 0, diagN2 = 0;
    double diagLength = 100.0, diagMidX = 50.0, diagR = 2.0, diagSigma0 = 0.0;
    bool diagAllowSmallR = false;
    diagnose->add_option("--image", diagImage, "input PGM")->required();
    diagnose->add_option("--family", diagFamily,
                         "circle | segment | segment2 | bspline");
    diagnose->add_option("--params", diagParams,
                         "JSON array or measurement JSON file")->required();
    diagnose->add_option("--control-points", diagControl, "bspline control count");
    diagnose->add_option("--length", diagLength, "segment2 frozen length");
    diagnose->add_option("--mid-x", diagMidX, "segment2 frozen midpoint abscissa");
    diagnose->add_option("--R", diagR, "band half-width, px");
    diagnose->add_option("--sigma0", diagSigma0, "image noise estimate");
    diagnose->add_option("--n1", diagN1, "override samples along the curve");
    diagnose->add_option("--n2", diagN2, "override samples across the band");
    diagnose->add_flag("--allow-small-R", diagAllowSmallR, "permit R < 1.5");
    diagnose->add_option("--out-profile", outProfile, "residual profile CSV");
    diagnose->add_option("--out-spectrum", outSpectrum, "spectrum CSV");
    diagnose->add_option("--out-report", outReport, "uncertainty report JSON");

    // ---- bench ----
    auto* bench = app.add_subcommand("bench", "Repeatability / bias studies");
    std::string studyName = "disc";
    std::string outTrials = "trials.csv", outSummary = "summary.json";
    vic::StudyConfig cfg;
    bool benchNoCorrection = false;
    bench->add_option("--study", studyName, "disc | segment | one_d | bias");
    bench->add_option("--trials", cfg.trials, "trial count (disc study)");
    bench->add_option("--seed", cfg.seed, "study seed");
    bench->add_option("--R", cfg.R, "band half-width, px");
    bench->add_option("--noise", cfg.sigma0, "Gaussian noise sigma");
    bench->add_option("--bits", cfg.quantizeBits, "quantization depth (0 = none)");
    bench->add_option("--radius", cfg.radius, "disc radius, px");
    bench->add_option("--L", cfg.L, "segment window length, px");
    bench->add_option("--levels", cfg.levels, "levels per swept variable");
    bench->add_option("--threads", cfg.threads, "worker threads (0 = auto)");
    bench->add_option("--n1", cfg.n1Override, "override samples along the curve");
    bench->add_option("--n2", cfg.n2Override, "override samples across the band");
    bench->add_flag("--no-correction", benchNoCorrection,
                    "disable the affine gray correction");
    bench->add_option("--out-trials", outTrials, "per-trial CSV path");
    bench->add_option("--out-summary", outSummary, "summary JSON path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) {
            return runSynth(sceneKind, center, radius, point, angle, vertices,
                            size, synthSigma0, synthSeed, synthBits, synthOut);
        }

        if (measure->parsed()) {
            if (R < 1.5 && allowSmallR) {
                std::cerr << "warning: R < 1.5 px, sub-pixel exactness is not "
                             "guaranteed\n";
            }
            const vic::RasterImage img = vic::loadPgm(imagePath);
            const auto family =
                familyFromFlags(familyName, controlPoints, segLength, segMidX);
            const vic::CurveParams init = parseInit(initSpec, *family, img);

            vic::SolveOptions opts;
            opts.R = R;
            opts.tolPx = tol;
            opts.maxIter = maxIter;
            opts.correction = !noCorrection;
            opts.rInit = rInit;
            opts.n1Override = n1Override;
            opts.n2Override = n2Override;
            opts.allowSmallR = allowSmallR;

            const vic::MeasurementResult result =
                vic::solve(img, *family, init, opts);
            json out = vic::measurementToJson(result);
            out["curve"] = vic::curveToJson(*family, result.params);
            writeJsonFile(out, measureOut);
            std::cout << "status: " << result.status << " after "
                      << result.iterations << " iterations, cost "
                      << result.psi << "; wrote " << measureOut << '\n';
            return result.converged ? 0 : 2;
        }

        if (diagnose->parsed()) {
            const vic::RasterImage img = vic::loadPgm(diagImage);
            const auto family =
                familyFromFlags(diagFamily, diagControl, diagLength, diagMidX);
            const vic::CurveParams p = parseInit(diagParams, *family, img);

            const double L = vic::arcLength(*family, p);
            const vic::VirtualGrid grid =
                vic::VirtualGrid::make(diagR, L, diagAllowSmallR, diagN1, diagN2);

            const vic::MuProfile prof = vic::muProfile(img, *family, p, grid);
            const vic::Spectrum spec = vic::muSpectrum(prof, L);
            const vic::UncertaintyReport rep =
                vic::uncertaintyReport(img, *family, p, grid, diagSigma0);

            vic::writeMuProfileCsv(prof, outProfile);
            vic::writeSpectrumCsv(spec, outSpectrum);
            writeJsonFile(vic::reportToJson(rep), outReport);
            std::cout << "expected scatter " << rep.headlineSigma
                      << " px; spectrum peak " << rep.peakAmplitudePx
                      << " px at wavelength " << rep.peakWavelengthPx
                      << " px; wrote " << outProfile << ", " << outSpectrum
                      << ", " << outReport << '\n';
            return 0;
        }

        // bench
        if (studyName == "disc") cfg.kind = vic::StudyKind::Disc;
        else if (studyName == "segment") cfg.kind = vic::StudyKind::Segment;
        else if (studyName == "one_d") cfg.kind = vic::StudyKind::OneD;
        else if (studyName == "bias") cfg.kind = vic::StudyKind::Bias;
        else throw CLI::ValidationError("unknown study: " + studyName);
        cfg.correction = !benchNoCorrection;

        const vic::StudyResult result = vic::runStudy(cfg);
        vic::writeTrialsCsv(result, outTrials);
        writeJsonFile(vic::summaryToJson(result), outSummary);
        std::cout << "study " << studyName << ": mean " << result.mean
                  << " px, stddev " << result.stddev << " px, max |err| "
                  << result.maxAbsError << " px, failures " << result.failures
                  << "; wrote " << outTrials << " and " << outSummary << '\n';
        return result.failures == 0 ? 0 : 2;
    } catch (const CLI::Error& e) {
        std::cerr << e.what() << '\n';
        return 1;
    } catch (const vic::VicError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
