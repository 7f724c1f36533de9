#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>

#include "mwqed/cli.hpp"
#include "mwqed/errors.hpp"
#include "mwqed/units.hpp"

#ifdef MWQED_HAVE_PNG
#include <png.h>
#endif

namespace mwqed::cli {

namespace {

using RGB = std::array<unsigned char, 3>;

// viridis sampled at 9 points
const std::array<std::array<double, 3>, 9> viridis = {{
    {0.267, 0.005, 0.329},
    {0.283, 0.141, 0.458},
    {0.254, 0.265, 0.530},
    {0.207, 0.372, 0.553},
    {0.164, 0.471, 0.558},
    {0.128, 0.567, 0.551},
    {0.135, 0.659, 0.518},
    {0.267, 0.749, 0.441},
    {0.993, 0.906, 0.144},
}};

RGB colormap(double x) {
    if (!std::isfinite(x)) x = 0.0;
    x = std::clamp(x, 0.0, 1.0) * (viridis.size() - 1);
    const size_t i = std::min(static_cast<size_t>(x), viridis.size() - 2);
    const double f = x - i;
    RGB c;
    for (int k = 0; k < 3; ++k)
        c[k] = static_cast<unsigned char>(std::lround(255.0 * ((1 - f) * viridis[i][k] + f * viridis[i + 1][k])));
    return c;
}

RGB hsv(double h, double s, double v) {
    h = std::fmod(h, 1.0);
    if (h < 0) h += 1.0;
    const double x = h * 6.0;
    const int i = static_cast<int>(x) % 6;
    const double f = x - std::floor(x);
    const double p = v * (1 - s), q = v * (1 - s * f), t = v * (1 - s * (1 - f));
    double r = 0, g = 0, b = 0;
    switch (i) {
        case 0: r = v, g = t, b = p; break;
        case 1: r = q, g = v, b = p; break;
        case 2: r = p, g = v, b = t; break;
        case 3: r = p, g = q, b = v; break;
        case 4: r = t, g = p, b = v; break;
        default: r = v, g = p, b = q; break;
    }
    auto u8 = [](double c) { return static_cast<unsigned char>(std::lround(255.0 * std::clamp(c, 0.0, 1.0))); };
    return {u8(r), u8(g), u8(b)};
}

#ifdef MWQED_HAVE_PNG
void png_append(png_structp png, png_bytep data, png_size_t len) {
    auto* out = static_cast<std::string*>(png_get_io_ptr(png));
    out->append(reinterpret_cast<const char*>(data), len);
}
void png_noop_flush(png_structp) {}
#endif

void line(Image& img, int x0, int y0, int x1, int y1, RGB c) {
    const int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
    const int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    for (;;) {
        img.set(x0, y0, c[0], c[1], c[2]);
        if (x0 == x1 && y0 == y1) break;
        const int e2 = 2 * err;
        if (e2 >= dy) {
            err += dy;
            x0 += sx;
        }
        if (e2 <= dx) {
            err += dx;
            y0 += sy;
        }
    }
}

}  // namespace

void Image::set(int x, int y, unsigned char r, unsigned char g, unsigned char b) {
    if (x < 0 || y < 0 || x >= width || y >= height) return;
    const size_t i = 3 * (static_cast<size_t>(y) * width + x);
    rgb[i] = r;
    rgb[i + 1] = g;
    rgb[i + 2] = b;
}

bool png_available() {
#ifdef MWQED_HAVE_PNG
    return true;
#else
    return false;
#endif
}

std::string encode_png(const Image& img) {
#ifdef MWQED_HAVE_PNG
    if (img.width <= 0 || img.height <= 0) return {};
    std::string out;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) return {};
    png_infop info = png_create_info_struct(png);
    if (!info || setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        return {};
    }
    png_set_write_fn(png, &out, png_append, png_noop_flush);
    png_set_IHDR(png, info, img.width, img.height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < img.height; ++y)
        png_write_row(png, const_cast<png_bytep>(img.rgb.data() + 3 * static_cast<size_t>(y) * img.width));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return out;
#else
    (void)img;
    return {};
#endif
}

Image heatmap(const std::vector<std::vector<double>>& values, Normalization norm, int cell_w, int cell_h) {
    Image img;
    if (values.empty() || values.front().empty()) {
        warn("render: empty grid, nothing drawn");
        return img;
    }
    const int rows = static_cast<int>(values.size());
    const int cols = static_cast<int>(values.front().size());
    img.width = cols * cell_w;
    img.height = rows * cell_h;
    img.rgb.assign(3 * static_cast<size_t>(img.width) * img.height, 0);
    double gmax = 0.0;
    for (const auto& r : values)
        for (double v : r)
            if (std::isfinite(v)) gmax = std::max(gmax, v);
    for (int i = 0; i < rows; ++i) {
        double m = gmax;
        if (norm == Normalization::per_row) {
            m = 0.0;
            for (double v : values[i])
                if (std::isfinite(v)) m = std::max(m, v);
        }
        for (int j = 0; j < cols; ++j) {
            const double v = j < static_cast<int>(values[i].size()) ? values[i][j] : 0.0;
            const RGB c = colormap(m > 0.0 ? v / m : 0.0);
            for (int y = 0; y < cell_h; ++y)
                for (int x = 0; x < cell_w; ++x) img.set(j * cell_w + x, i * cell_h + y, c[0], c[1], c[2]);
        }
    }
    return img;
}

void overlay_point(Image& img, double col, double row, int cell_w, int cell_h) {
    const int x = static_cast<int>(std::lround((col + 0.5) * cell_w));
    const int y = static_cast<int>(std::lround((row + 0.5) * cell_h));
    img.set(x, y, 255, 255, 255);
}

Image lineout(const std::vector<double>& x, const std::vector<std::vector<double>>& ys, int width, int height) {
    Image img;
    if (x.size() < 2 || ys.empty()) {
        warn("render: empty series, nothing drawn");
        return img;
    }
    img.width = width;
    img.height = height;
    img.rgb.assign(3 * static_cast<size_t>(width) * height, 255);
    double x0 = *std::min_element(x.begin(), x.end()), x1 = *std::max_element(x.begin(), x.end());
    double y0 = 0.0, y1 = 0.0;
    bool first = true;
    for (const auto& y : ys)
        for (double v : y) {
            if (!std::isfinite(v)) continue;
            if (first) y0 = y1 = v, first = false;
            y0 = std::min(y0, v);
            y1 = std::max(y1, v);
        }
    if (x1 == x0) x1 = x0 + 1.0;
    if (y1 == y0) y1 = y0 + 1.0;
    const int m = 20;
    auto px = [&](double v) { return m + static_cast<int>(std::lround((v - x0) / (x1 - x0) * (width - 2 * m))); };
    auto py = [&](double v) {
        return height - m - static_cast<int>(std::lround((v - y0) / (y1 - y0) * (height - 2 * m)));
    };
    const RGB axis = {0, 0, 0};
    line(img, m, height - m, width - m, height - m, axis);
    line(img, m, m, m, height - m, axis);
    static const RGB palette[] = {{31, 119, 180}, {214, 39, 40}, {44, 160, 44}, {148, 103, 189}, {255, 127, 14}};
    for (size_t k = 0; k < ys.size(); ++k) {
        const RGB c = palette[k % 5];
        for (size_t i = 1; i < x.size() && i < ys[k].size(); ++i) {
            if (!std::isfinite(ys[k][i - 1]) || !std::isfinite(ys[k][i])) continue;
            line(img, px(x[i - 1]), py(ys[k][i - 1]), px(x[i]), py(ys[k][i]), c);
        }
    }
    return img;
}

Image domain_coloring(const std::vector<std::vector<std::complex<double>>>& values) {
    Image img;
    if (values.empty() || values.front().empty()) {
        warn("render: empty grid, nothing drawn");
        return img;
    }
    img.height = static_cast<int>(values.size());
    img.width = static_cast<int>(values.front().size());
    img.rgb.assign(3 * static_cast<size_t>(img.width) * img.height, 0);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            const auto z = values[y][x];
            const double mag = std::abs(z);
            const double h = std::arg(z) / (2.0 * pi);
            const double l = mag > 0.0 ? std::log2(mag) : -60.0;
            const double frac = l - std::floor(l);
            const RGB c = hsv(h, 0.9, 0.55 + 0.45 * frac);
            img.set(x, y, c[0], c[1], c[2]);
        }
    return img;
}

}  // namespace mwqed::cli
