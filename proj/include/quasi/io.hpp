#pragma once

#include <png.h>

#include <algorithm>
#include <csetjmp>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "quasi/image.hpp"

namespace quasi {

// Supported formats: binary PGM (P5, 8 or 16 bit), grayscale PNG (8 or 16 bit) and raw
// little-endian float32 with a `<path>.dims` sidecar holding "width height". Integer
// formats are normalized to [0, 1] on load and quantized with round-half-up on save.

enum class ImageFormat { Pgm8, Pgm16, Png8, Png16, RawFloat32 };

namespace detail {

inline std::string lower_extension(const std::string& path) {
    std::string ext = std::filesystem::path(path).extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext;
}

inline std::string dims_path(const std::string& path) { return path + ".dims"; }

inline std::uint32_t quantize(double v, std::uint32_t maxval) {
    const double s = std::floor(v * static_cast<double>(maxval) + 0.5);
    return static_cast<std::uint32_t>(std::clamp(s, 0.0, static_cast<double>(maxval)));
}

/// Writes through a temporary next to `path` and renames on success, so a failed save never
/// leaves a partial file behind.
template <class Writer>
void write_atomically(const std::string& path, Writer&& writer) {
    const std::string tmp = path + ".partial";
    try {
        writer(tmp);
        std::error_code ec;
        std::filesystem::rename(tmp, path, ec);
        require(!ec, ErrorKind::Io, "cannot move " + tmp + " to " + path + ": " + ec.message());
    } catch (...) {
        std::error_code ec;
        std::filesystem::remove(tmp, ec);
        throw;
    }
}

inline std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), ErrorKind::Io, "cannot open " + path + " for writing");
    return out;
}

inline std::vector<unsigned char> read_all(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), ErrorKind::Io, "cannot open " + path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// --- PGM --------------------------------------------------------------------

inline Image2D load_pgm(const std::string& path) {
    const auto bytes = read_all(path);
    std::size_t pos = 0;
    auto skip_space = [&] {
        while (pos < bytes.size()) {
            if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (std::isspace(bytes[pos])) {
                ++pos;
            } else {
                break;
            }
        }
    };
    auto read_uint = [&](const char* field) {
        skip_space();
        std::uint64_t v = 0;
        std::size_t start = pos;
        while (pos < bytes.size() && std::isdigit(bytes[pos]) && pos - start < 10) v = v * 10 + (bytes[pos++] - '0');
        require(pos > start, ErrorKind::Io, std::string("malformed PGM header (") + field + ") in " + path);
        return v;
    };

    require(bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '5', ErrorKind::Io, "not a binary PGM: " + path);
    pos = 2;
    const auto w = read_uint("width");
    const auto h = read_uint("height");
    const auto maxval = read_uint("maxval");
    require(w > 0 && h > 0 && maxval > 0 && maxval <= 65535, ErrorKind::Io, "unsupported PGM header in " + path);
    require(pos < bytes.size() && std::isspace(bytes[pos]), ErrorKind::Io, "malformed PGM header in " + path);
    ++pos;

    const std::size_t bps = maxval > 255 ? 2 : 1;
    const std::size_t n = static_cast<std::size_t>(w * h);
    require(bytes.size() - pos >= n * bps, ErrorKind::Io, "truncated PGM data in " + path);

    Image2D img(static_cast<std::size_t>(w), static_cast<std::size_t>(h));
    const double scale = 1.0 / static_cast<double>(maxval);
    for (std::size_t i = 0; i < n; ++i) {
        std::uint32_t v = bytes[pos + i * bps];
        if (bps == 2) v = (v << 8) | bytes[pos + i * bps + 1];
        img[i] = static_cast<double>(std::min<std::uint32_t>(v, static_cast<std::uint32_t>(maxval))) * scale;
    }
    return img;
}

inline void save_pgm(const std::string& path, const Image2D& img, bool sixteen_bit) {
    const std::uint32_t maxval = sixteen_bit ? 65535 : 255;
    auto out = open_out(path);
    out << "P5\n" << img.width() << ' ' << img.height() << '\n' << maxval << '\n';
    std::vector<unsigned char> buf;
    buf.reserve(img.size() * (sixteen_bit ? 2 : 1));
    for (double v : img) {
        const std::uint32_t q = quantize(v, maxval);
        if (sixteen_bit) buf.push_back(static_cast<unsigned char>(q >> 8));
        buf.push_back(static_cast<unsigned char>(q & 0xff));
    }
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    require(static_cast<bool>(out), ErrorKind::Io, "write failed for " + path);
}

// --- raw float32 --------------------------------------------------------------

inline Image2D load_raw(const std::string& path) {
    std::ifstream dims(dims_path(path));
    require(static_cast<bool>(dims), ErrorKind::Io, "missing dimension sidecar " + dims_path(path));
    long long w = 0, h = 0;
    require(static_cast<bool>(dims >> w >> h) && w > 0 && h > 0, ErrorKind::Io,
            "malformed dimension sidecar " + dims_path(path));

    const auto bytes = read_all(path);
    const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
    require(bytes.size() == n * sizeof(float), ErrorKind::Io,
            "raw file " + path + " holds " + std::to_string(bytes.size()) + " bytes, expected " +
                std::to_string(n * sizeof(float)));
    Image2D img(static_cast<std::size_t>(w), static_cast<std::size_t>(h));
    for (std::size_t i = 0; i < n; ++i) {
        float v;
        std::memcpy(&v, bytes.data() + i * sizeof(float), sizeof(float));
        img[i] = static_cast<double>(v);
    }
    return img;
}

inline void save_raw(const std::string& path, const Image2D& img) {
    auto out = open_out(path);
    std::vector<float> buf(img.begin(), img.end());
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
    require(static_cast<bool>(out), ErrorKind::Io, "write failed for " + path);
}

// --- PNG ------------------------------------------------------------------------

struct FileCloser {
    void operator()(std::FILE* f) const noexcept { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

// libpng reports errors by longjmp to png_jmpbuf. Everything with a destructor is constructed
// before setjmp, and no C++ temporaries are alive across libpng calls.

inline Image2D load_png(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    require(fp != nullptr, ErrorKind::Io, "cannot open " + path);
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    require(png != nullptr, ErrorKind::Io, "libpng initialisation failed");
    png_infop info = png_create_info_struct(png);

    std::vector<unsigned char> buf;
    std::vector<png_bytep> rows;
    // written between setjmp and a possible longjmp
    volatile png_uint_32 w = 0, h = 0;
    volatile int depth = 0;
    volatile bool gray = false;
    volatile bool failed = false;

    if (info == nullptr || setjmp(png_jmpbuf(png))) {
        failed = true;
    } else {
        png_init_io(png, fp.get());
        png_read_info(png, info);
        w = png_get_image_width(png, info);
        h = png_get_image_height(png, info);
        const int color = png_get_color_type(png, info);
        depth = png_get_bit_depth(png, info);
        gray = color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA;
        if (gray) {
            if (depth < 8) {
                png_set_expand_gray_1_2_4_to_8(png);
                depth = 8;
            }
            if (color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_strip_alpha(png);
            png_read_update_info(png, info);
            const std::size_t row_bytes = png_get_rowbytes(png, info);
            buf.resize(row_bytes * h);
            rows.resize(h);
            for (std::size_t y = 0; y < h; ++y) rows[y] = buf.data() + y * row_bytes;
            png_read_image(png, rows.data());
        }
    }
    png_destroy_read_struct(&png, info != nullptr ? &info : nullptr, nullptr);
    require(!failed, ErrorKind::Io, "malformed or truncated PNG: " + path);
    require(gray, ErrorKind::Io, "only grayscale PNG is supported: " + path);

    Image2D img(w, h);
    const bool wide = depth == 16;
    const double maxval = wide ? 65535.0 : 255.0;
    for (std::size_t y = 0; y < img.height(); ++y)
        for (std::size_t x = 0; x < img.width(); ++x) {
            // 16-bit samples are stored big-endian
            const double v = wide ? static_cast<double>((rows[y][2 * x] << 8) | rows[y][2 * x + 1])
                                         : static_cast<double>(rows[y][x]);
            img(x, y) = v / maxval;
        }
    return img;
}

inline void save_png(const std::string& path, const Image2D& img, bool sixteen_bit) {
    const std::uint32_t maxval = sixteen_bit ? 65535 : 255;
    const std::size_t bps = sixteen_bit ? 2 : 1;
    std::vector<unsigned char> buf(img.size() * bps);
    for (std::size_t i = 0; i < img.size(); ++i) {
        const std::uint32_t q = quantize(img[i], maxval);
        if (sixteen_bit) {
            buf[2 * i] = static_cast<unsigned char>(q >> 8);
            buf[2 * i + 1] = static_cast<unsigned char>(q & 0xff);
        } else {
            buf[i] = static_cast<unsigned char>(q);
        }
    }
    std::vector<png_bytep> rows(img.height());
    for (std::size_t y = 0; y < img.height(); ++y) rows[y] = buf.data() + y * img.width() * bps;

    FilePtr fp(std::fopen(path.c_str(), "wb"));
    require(fp != nullptr, ErrorKind::Io, "cannot open " + path + " for writing");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    require(png != nullptr, ErrorKind::Io, "libpng initialisation failed");
    png_infop info = png_create_info_struct(png);
    volatile bool failed = false;
    if (info == nullptr || setjmp(png_jmpbuf(png))) {
        failed = true;
    } else {
        png_init_io(png, fp.get());
        png_set_IHDR(png, info, static_cast<png_uint_32>(img.width()), static_cast<png_uint_32>(img.height()),
                     sixteen_bit ? 16 : 8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                     PNG_FILTER_TYPE_DEFAULT);
        png_write_info(png, info);
        png_write_image(png, rows.data());
        png_write_end(png, nullptr);
    }
    png_destroy_write_struct(&png, info != nullptr ? &info : nullptr);
    require(!failed, ErrorKind::Io, "PNG encoding failed for " + path);
    require(std::fflush(fp.get()) == 0, ErrorKind::Io, "write failed for " + path);
}

}  // namespace detail

/// Picks a format from the file extension. Integer formats default to 16 bit on save.
inline ImageFormat format_from_path(const std::string& path, bool sixteen_bit = true) {
    const std::string ext = detail::lower_extension(path);
    if (ext == ".pgm") return sixteen_bit ? ImageFormat::Pgm16 : ImageFormat::Pgm8;
    if (ext == ".png") return sixteen_bit ? ImageFormat::Png16 : ImageFormat::Png8;
    if (ext == ".raw" || ext == ".f32") return ImageFormat::RawFloat32;
    throw Error(ErrorKind::Io, "unrecognised image extension '" + ext + "' for " + path);
}

inline Image2D load_image(const std::string& path) {
    detail::require(std::filesystem::exists(path), ErrorKind::Io, "no such file: " + path);
    Image2D img;
    switch (format_from_path(path)) {
        case ImageFormat::Pgm8:
        case ImageFormat::Pgm16: img = detail::load_pgm(path); break;
        case ImageFormat::Png8:
        case ImageFormat::Png16: img = detail::load_png(path); break;
        case ImageFormat::RawFloat32: img = detail::load_raw(path); break;
    }
    detail::require(img.all_finite(), ErrorKind::InvalidInput, "non-finite pixel in " + path);
    return img;
}

inline void save_image(const std::string& path, const Image2D& img, ImageFormat format) {
    detail::require(!img.empty(), ErrorKind::InvalidInput, "refusing to save an empty image");
    switch (format) {
        case ImageFormat::Pgm8:
        case ImageFormat::Pgm16:
            detail::write_atomically(path, [&](const std::string& p) {
                detail::save_pgm(p, img, format == ImageFormat::Pgm16);
            });
            break;
        case ImageFormat::Png8:
        case ImageFormat::Png16:
            detail::write_atomically(path, [&](const std::string& p) {
                detail::save_png(p, img, format == ImageFormat::Png16);
            });
            break;
        case ImageFormat::RawFloat32:
            detail::write_atomically(detail::dims_path(path), [&](const std::string& p) {
                auto out = detail::open_out(p);
                out << img.width() << ' ' << img.height() << '\n';
            });
            detail::write_atomically(path, [&](const std::string& p) { detail::save_raw(p, img); });
            break;
    }
}

inline void save_image(const std::string& path, const Image2D& img) { save_image(path, img, format_from_path(path)); }

}  // namespace quasi
