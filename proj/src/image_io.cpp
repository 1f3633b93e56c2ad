#include "sbv/image_io.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <vector>

#include <png.h>

#include "sbv/threading.hpp"

namespace sbv {

namespace {

// Reads one whitespace-delimited PGM header token, skipping '#' comments.
std::string next_pgm_token(std::istream& in) {
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {
            }
            continue;
        }
        if (!std::isspace(c)) {
            tok.push_back(static_cast<char>(c));
            while ((c = in.peek()) != EOF && !std::isspace(c) && c != '#')
                tok.push_back(static_cast<char>(in.get()));
            return tok;
        }
    }
    throw ParseError("unexpected end of PGM header");
}

long parse_header_int(const std::string& tok, const char* what) {
    try {
        std::size_t pos = 0;
        long v = std::stol(tok, &pos);
        if (pos != tok.size()) throw ParseError("");
        return v;
    } catch (...) {
        throw ParseError(std::string("malformed PGM header: bad ") + what);
    }
}

struct PngReadCloser {
    png_structp png = nullptr;
    png_infop info = nullptr;
    FILE* fp = nullptr;
    ~PngReadCloser() {
        if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
        if (fp) std::fclose(fp);
    }
};

GrayImage load_png(const std::string& path) {
    PngReadCloser ctx;
    ctx.fp = std::fopen(path.c_str(), "rb");
    if (!ctx.fp) throw IoError("cannot open image file: " + path);

    unsigned char sig[8];
    if (std::fread(sig, 1, 8, ctx.fp) != 8 || png_sig_cmp(sig, 0, 8))
        throw ParseError("not a PNG file: " + path);

    ctx.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!ctx.png) throw IoError("libpng initialization failed");
    ctx.info = png_create_info_struct(ctx.png);
    if (!ctx.info) throw IoError("libpng initialization failed");

    if (setjmp(png_jmpbuf(ctx.png))) throw ParseError("corrupt PNG data in " + path);

    png_init_io(ctx.png, ctx.fp);
    png_set_sig_bytes(ctx.png, 8);
    png_read_info(ctx.png, ctx.info);

    const png_uint_32 w = png_get_image_width(ctx.png, ctx.info);
    const png_uint_32 h = png_get_image_height(ctx.png, ctx.info);
    const int bit_depth = png_get_bit_depth(ctx.png, ctx.info);
    const int color_type = png_get_color_type(ctx.png, ctx.info);

    if (bit_depth > 8)
        throw ParseError("unsupported PNG bit depth " + std::to_string(bit_depth) + " in " + path);
    if (w < 1 || h < 1) throw ParseError("empty PNG in " + path);

    // Normalize every variant to 8-bit RGB rows.
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(ctx.png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(ctx.png);
    if (png_get_valid(ctx.png, ctx.info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(ctx.png);
    if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA)
        png_set_gray_to_rgb(ctx.png);
    png_set_strip_alpha(ctx.png);
    png_set_interlace_handling(ctx.png);
    png_read_update_info(ctx.png, ctx.info);

    if (png_get_rowbytes(ctx.png, ctx.info) != static_cast<std::size_t>(w) * 3)
        throw ParseError("unexpected PNG row layout in " + path);

    std::vector<unsigned char> data(static_cast<std::size_t>(w) * h * 3);
    std::vector<png_bytep> rows(h);
    for (png_uint_32 v = 0; v < h; ++v) rows[v] = data.data() + static_cast<std::size_t>(v) * w * 3;
    png_read_image(ctx.png, rows.data());
    png_read_end(ctx.png, nullptr);

    const bool was_gray =
        color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA;

    GrayImage img(static_cast<int>(w), static_cast<int>(h));
    for (std::size_t i = 0; i < static_cast<std::size_t>(w) * h; ++i) {
        const unsigned char r = data[3 * i], g = data[3 * i + 1], b = data[3 * i + 2];
        if (was_gray) {
            img.pixels[i] = r;  // identity for gray sources
        } else {
            const double luma = 0.299 * r + 0.587 * g + 0.114 * b;
            img.pixels[i] = static_cast<std::uint8_t>(std::lround(luma));
        }
    }
    return img;
}

}  // namespace

GrayImage load_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open image file: " + path);

    const std::string magic = next_pgm_token(in);
    if (magic != "P5") throw ParseError("not a binary PGM (P5) file: " + path);
    const long w = parse_header_int(next_pgm_token(in), "width");
    const long h = parse_header_int(next_pgm_token(in), "height");
    const long maxval = parse_header_int(next_pgm_token(in), "maxval");
    if (w < 1 || h < 1) throw ParseError("malformed PGM header: non-positive dimensions in " + path);
    if (maxval > 255)
        throw ParseError("unsupported PGM bit depth (maxval " + std::to_string(maxval) + ") in " + path);
    if (maxval < 1) throw ParseError("malformed PGM header: bad maxval in " + path);
    in.get();  // single whitespace byte after maxval

    GrayImage img(static_cast<int>(w), static_cast<int>(h));
    in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
    if (in.gcount() != static_cast<std::streamsize>(img.pixels.size()))
        throw ParseError("truncated PGM payload in " + path);
    return img;
}

GrayImage load_image(const std::string& path) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw IoError("cannot open image file: " + path);
    unsigned char sig[2] = {0, 0};
    probe.read(reinterpret_cast<char*>(sig), 2);
    probe.close();
    if (sig[0] == 'P' && sig[1] == '5') return load_pgm(path);
    if (sig[0] == 0x89 && sig[1] == 'P') return load_png(path);
    throw ParseError("unrecognized image format (expected PGM P5 or PNG): " + path);
}

void save_pgm(const GrayImage& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write image file: " + path);
    out << "P5\n" << img.width << " " << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.pixels.data()),
              static_cast<std::streamsize>(img.pixels.size()));
    if (!out) throw IoError("write failed: " + path);
}

void save_float_image(const FloatImage& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write PFM file: " + path);
    out << "Pf\n" << img.width << " " << img.height << "\n-1.0\n";
    std::vector<float> row(static_cast<std::size_t>(img.width));
    for (int v = img.height - 1; v >= 0; --v) {  // PFM rows run bottom-up
        for (int u = 0; u < img.width; ++u) {
            const float x = img.at(u, v);
            row[static_cast<std::size_t>(u)] =
                is_valid(x) ? x : -std::numeric_limits<float>::infinity();
        }
        out.write(reinterpret_cast<const char*>(row.data()),
                  static_cast<std::streamsize>(row.size() * sizeof(float)));
    }
    if (!out) throw IoError("write failed: " + path);
}

FloatImage load_float_image(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open PFM file: " + path);
    const std::string magic = next_pgm_token(in);
    if (magic != "Pf") throw ParseError("not a grayscale PFM file: " + path);
    const long w = parse_header_int(next_pgm_token(in), "width");
    const long h = parse_header_int(next_pgm_token(in), "height");
    double scale = 0.0;
    try {
        scale = std::stod(next_pgm_token(in));
    } catch (...) {
        throw ParseError("malformed PFM header: bad scale in " + path);
    }
    if (w < 1 || h < 1 || scale == 0.0) throw ParseError("malformed PFM header in " + path);
    in.get();

    const bool file_little = scale < 0.0;
    const bool host_little = std::endian::native == std::endian::little;

    FloatImage img(static_cast<int>(w), static_cast<int>(h));
    std::vector<float> row(static_cast<std::size_t>(w));
    for (int v = img.height - 1; v >= 0; --v) {
        in.read(reinterpret_cast<char*>(row.data()),
                static_cast<std::streamsize>(row.size() * sizeof(float)));
        if (in.gcount() != static_cast<std::streamsize>(row.size() * sizeof(float)))
            throw ParseError("truncated PFM payload in " + path);
        for (int u = 0; u < img.width; ++u) {
            float x = row[static_cast<std::size_t>(u)];
            if (file_little != host_little) {
                auto bits = std::bit_cast<std::uint32_t>(x);
                bits = ((bits & 0xFF000000u) >> 24) | ((bits & 0x00FF0000u) >> 8) |
                       ((bits & 0x0000FF00u) << 8) | ((bits & 0x000000FFu) << 24);
                x = std::bit_cast<float>(bits);
            }
            img.at(u, v) = std::isfinite(x) ? x : invalid_value();
        }
    }
    return img;
}

GrayImage depth_preview(const DepthMap& depth, double z_min, double z_max) {
    if (!(z_max > z_min)) throw ParamError("depth preview needs z_max > z_min");
    GrayImage img(depth.width, depth.height);
    const double span = z_max - z_min;
    for (std::size_t i = 0; i < depth.values.size(); ++i) {
        const float z = depth.values[i];
        if (is_invalid(z)) continue;
        const double t = std::clamp((static_cast<double>(z) - z_min) / span, 0.0, 1.0);
        img.pixels[i] = static_cast<std::uint8_t>(std::lround(255.0 * t));
    }
    return img;
}

GrayImage gaussian_smooth(const GrayImage& img, double sigma, int threads) {
    if (sigma < 0.0) throw DomainError("gaussian_smooth requires sigma >= 0");
    if (sigma == 0.0) return img;

    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
    double sum = 0.0;
    for (int k = -radius; k <= radius; ++k) {
        const double w = std::exp(-(static_cast<double>(k) * k) / (2.0 * sigma * sigma));
        kernel[static_cast<std::size_t>(k + radius)] = w;
        sum += w;
    }
    for (double& w : kernel) w /= sum;

    const int width = img.width, height = img.height;
    std::vector<double> tmp(static_cast<std::size_t>(width) * height);

    parallel_chunks(height, threads, [&](int v0, int v1) {
        for (int v = v0; v < v1; ++v)
            for (int u = 0; u < width; ++u) {
                double acc = 0.0;
                for (int k = -radius; k <= radius; ++k)
                    acc += kernel[static_cast<std::size_t>(k + radius)] * img.at_clamped(u + k, v);
                tmp[static_cast<std::size_t>(v) * width + u] = acc;
            }
    });

    GrayImage out(width, height);
    parallel_chunks(height, threads, [&](int v0, int v1) {
        for (int v = v0; v < v1; ++v)
            for (int u = 0; u < width; ++u) {
                double acc = 0.0;
                for (int k = -radius; k <= radius; ++k) {
                    const int vv = std::clamp(v + k, 0, height - 1);
                    acc += kernel[static_cast<std::size_t>(k + radius)] *
                           tmp[static_cast<std::size_t>(vv) * width + u];
                }
                out.at(u, v) =
                    static_cast<std::uint8_t>(std::clamp<long>(std::lround(acc), 0, 255));
            }
    });
    return out;
}

}  // namespace sbv
