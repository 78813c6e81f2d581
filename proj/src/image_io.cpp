#include "avshield/image_io.hpp"

#include <cmath>
#include <cstdio>
#include <vector>

#include <png.h>

namespace avshield {

PortraitImage load_png(const std::string& path) {
    FILE* fp = std::fopen(path.c_str(), "rb");
    if (!fp) throw IoError("cannot open PNG: " + path);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        if (png) png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        throw IoError("png: allocation failure");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        throw IoError("png: failed to read " + path);
    }
    png_init_io(png, fp);
    png_read_info(png, info);

    // normalize every variant to 16-bit RGB
    png_set_expand(png);
    if (png_get_color_type(png, info) & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    if (png_get_bit_depth(png, info) < 16) png_set_expand_16(png);
    if ((png_get_color_type(png, info) & PNG_COLOR_MASK_COLOR) == 0) png_set_gray_to_rgb(png);
    png_set_swap(png); // little-endian rows
    png_read_update_info(png, info);

    const int h = static_cast<int>(png_get_image_height(png, info));
    const int w = static_cast<int>(png_get_image_width(png, info));
    std::vector<std::uint16_t> row(static_cast<std::size_t>(w) * 3);

    PortraitImage img;
    img.height = h;
    img.width = w;
    img.pixels.assign(static_cast<std::size_t>(3) * h * w, 0.0);
    for (int y = 0; y < h; ++y) {
        png_read_row(png, reinterpret_cast<png_bytep>(row.data()), nullptr);
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c)
                img.at(c, y, x) = row[static_cast<std::size_t>(x) * 3 + c] / 65535.0;
    }
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    return img;
}

void save_png(const PortraitImage& img, const std::string& path, int bit_depth) {
    if (bit_depth != 8 && bit_depth != 16) throw IoError("save_png: bit depth must be 8 or 16");
    img.validate();
    FILE* fp = std::fopen(path.c_str(), "wb");
    if (!fp) throw IoError("cannot write PNG: " + path);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        if (png) png_destroy_write_struct(&png, &info);
        std::fclose(fp);
        throw IoError("png: allocation failure");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        std::fclose(fp);
        throw IoError("png: failed to write " + path);
    }
    png_init_io(png, fp);
    png_set_IHDR(png, info, img.width, img.height, bit_depth, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    if (bit_depth == 16) {
        png_set_swap(png);
        std::vector<std::uint16_t> row(static_cast<std::size_t>(img.width) * 3);
        for (int y = 0; y < img.height; ++y) {
            for (int x = 0; x < img.width; ++x)
                for (int c = 0; c < 3; ++c)
                    row[static_cast<std::size_t>(x) * 3 + c] = static_cast<std::uint16_t>(
                        std::lround(std::clamp(img.at(c, y, x), 0.0, 1.0) * 65535.0));
            png_write_row(png, reinterpret_cast<png_bytep>(row.data()));
        }
    } else {
        std::vector<unsigned char> row(static_cast<std::size_t>(img.width) * 3);
        for (int y = 0; y < img.height; ++y) {
            for (int x = 0; x < img.width; ++x)
                for (int c = 0; c < 3; ++c)
                    row[static_cast<std::size_t>(x) * 3 + c] = static_cast<unsigned char>(
                        std::lround(std::clamp(img.at(c, y, x), 0.0, 1.0) * 255.0));
            png_write_row(png, row.data());
        }
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
}

} // namespace avshield
