#include "vicontour/raster.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>

namespace vic {

namespace {

// Reads the next whitespace-delimited token, skipping '#' comment lines.
std::string nextToken(std::istream& in) {
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {}
            continue;
        }
        if (!std::isspace(c)) {
            tok.push_back(static_cast<char>(c));
            while ((c = in.peek()) != EOF && !std::isspace(c)) {
                tok.push_back(static_cast<char>(in.get()));
            }
            return tok;
        }
    }
    throw PgmFormatError("unexpected end of PGM header");
}

int parseInt(std::istream& in, const char* what) {
    const std::string tok = nextToken(in);
    try {
        size_t pos = 0;
        const int v = std::stoi(tok, &pos);
        if (pos != tok.size()) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        throw PgmFormatError(std::string("malformed PGM ") + what + ": '" + tok + "'");
    }
}

}  // namespace

RasterImage loadPgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw PgmFormatError("cannot open " + path);

    const std::string magic = nextToken(in);
    if (magic != "P2" && magic != "P5") {
        throw PgmFormatError("unsupported PGM magic '" + magic + "' in " + path);
    }
    const int width = parseInt(in, "width");
    const int height = parseInt(in, "height");
    const int maxval = parseInt(in, "maxval");
    if (width <= 0 || height <= 0) throw PgmFormatError("bad PGM size in " + path);
    if (maxval != 255 && maxval != 65535) {
        throw PgmFormatError("unsupported PGM maxval " + std::to_string(maxval));
    }

    RasterImage img(width, height);
    img.setBitDepth(maxval == 255 ? 8 : 16);
    const double scale = 1.0 / maxval;
    const size_t n = static_cast<size_t>(width) * height;

    if (magic == "P2") {
        for (size_t k = 0; k < n; ++k) {
            const int v = parseInt(in, "pixel");
            if (v < 0 || v > maxval) throw PgmFormatError("PGM pixel out of range");
            img.values()[k] = v * scale;
        }
    } else {
        // exactly one whitespace byte separates maxval from the payload
        const int sep = in.get();
        if (sep == EOF || !std::isspace(sep)) {
            throw PgmFormatError("missing separator before PGM payload in " + path);
        }
        const int bytesPerPixel = maxval == 255 ? 1 : 2;
        std::vector<std::uint8_t> raw(n * bytesPerPixel);
        in.read(reinterpret_cast<char*>(raw.data()),
                static_cast<std::streamsize>(raw.size()));
        if (static_cast<size_t>(in.gcount()) != raw.size()) {
            throw PgmFormatError("truncated PGM payload in " + path);
        }
        for (size_t k = 0; k < n; ++k) {
            const int v = bytesPerPixel == 1
                              ? raw[k]
                              : (raw[2 * k] << 8) | raw[2 * k + 1];  // big-endian
            img.values()[k] = v * scale;
        }
    }
    return img;
}

void savePgm(const RasterImage& img, const std::string& path) {
    const int bits = img.bitDepth() == 16 ? 16 : 8;
    const int maxval = (1 << bits) - 1;

    std::ofstream out(path, std::ios::binary);
    if (!out) throw PgmFormatError("cannot write " + path);
    out << "P5\n# pixel (i,j) value sits at integer coordinates (i,j), pixel centers\n"
        << img.width() << " " << img.height() << "\n" << maxval << "\n";

    const size_t n = static_cast<size_t>(img.width()) * img.height();
    for (size_t k = 0; k < n; ++k) {
        const double v = std::clamp(img.values()[k], 0.0, 1.0);
        const int q = static_cast<int>(std::lround(v * maxval));
        if (bits == 8) {
            out.put(static_cast<char>(q));
        } else {
            out.put(static_cast<char>(q >> 8));
            out.put(static_cast<char>(q & 0xFF));
        }
    }
    if (!out) throw PgmFormatError("write failure on " + path);
}

bool inBounds(const RasterImage& img, const Vec2& X) {
    return X.x >= 0.0 && X.x <= img.width() - 1.0 &&
           X.y >= 0.0 && X.y <= img.height() - 1.0;
}

namespace {

struct Cell {
    int i0, j0;
    double u, v;      // fractional position within the cell
    double f00, f10, f01, f11;
};

Cell locate(const RasterImage& img, const Vec2& X) {
    if (!inBounds(img, X)) {
        throw OutOfBoundsError("sample at (" + std::to_string(X.x) + ", " +
                               std::to_string(X.y) + ") outside image " +
                               std::to_string(img.width()) + "x" +
                               std::to_string(img.height()));
    }
    Cell c;
    c.i0 = std::min(static_cast<int>(std::floor(X.x)), img.width() - 2);
    c.j0 = std::min(static_cast<int>(std::floor(X.y)), img.height() - 2);
    c.i0 = std::max(c.i0, 0);
    c.j0 = std::max(c.j0, 0);
    c.u = X.x - c.i0;
    c.v = X.y - c.j0;
    c.f00 = img.at(c.i0, c.j0);
    c.f10 = img.at(c.i0 + 1, c.j0);
    c.f01 = img.at(c.i0, c.j0 + 1);
    c.f11 = img.at(c.i0 + 1, c.j0 + 1);
    return c;
}

}  // namespace

double sampleBilinear(const RasterImage& img, const Vec2& X) {
    const Cell c = locate(img, X);
    return (1 - c.u) * (1 - c.v) * c.f00 + c.u * (1 - c.v) * c.f10 +
           (1 - c.u) * c.v * c.f01 + c.u * c.v * c.f11;
}

Vec2 gradientBilinear(const RasterImage& img, const Vec2& X) {
    const Cell c = locate(img, X);
    return {(1 - c.v) * (c.f10 - c.f00) + c.v * (c.f11 - c.f01),
            (1 - c.u) * (c.f01 - c.f00) + c.u * (c.f11 - c.f10)};
}

AffineGrayCorrection fitAffineCorrection(std::span<const double> x2,
                                         std::span<const double> f) {
    if (x2.size() != f.size() || x2.empty()) {
        throw InvalidArgumentError("fitAffineCorrection: mismatched sample arrays");
    }
    double blackSum = 0.0, whiteSum = 0.0;
    size_t blackCount = 0, whiteCount = 0;
    for (size_t k = 0; k < x2.size(); ++k) {
        if (x2[k] <= -0.75) {
            blackSum += f[k];
            ++blackCount;
        } else if (x2[k] >= 0.75) {
            whiteSum += f[k];
            ++whiteCount;
        }
    }
    if (blackCount == 0 || whiteCount == 0) {
        throw InvalidArgumentError("fitAffineCorrection: band does not reach |x2| >= 0.75");
    }
    const double black = blackSum / blackCount;
    const double white = whiteSum / whiteCount;
    if (white - black < 0.05) {
        throw DegenerateContrastError("no discernible edge: white - black = " +
                                      std::to_string(white - black));
    }
    AffineGrayCorrection corr;
    corr.amplitude = white - black;
    corr.bias = (white + black - 1.0) / 2.0;
    return corr;
}

}  // namespace vic
