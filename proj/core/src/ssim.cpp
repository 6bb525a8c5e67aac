#include "promptaug/error.hpp"
#include "promptaug/metrics.hpp"

namespace promptaug::metrics {

GrayImage to_luma(const RgbImage& image) {
    GrayImage out{image.width, image.height, {}};
    const std::size_t n = static_cast<std::size_t>(image.width) * image.height;
    if (image.pixels.size() != n * 3) {
        throw DataError("RGB image buffer does not match its dimensions");
    }
    out.pixels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.pixels[i] = 0.299 * image.pixels[3 * i] + 0.587 * image.pixels[3 * i + 1] + 0.114 * image.pixels[3 * i + 2];
    }
    return out;
}

namespace {

/// Summed-area table with a zero first row and column.
std::vector<double> integral(std::uint32_t w, std::uint32_t h, const std::function<double(std::size_t)>& value) {
    const std::size_t stride = w + 1;
    std::vector<double> s(stride * (h + 1), 0.0);
    for (std::uint32_t y = 0; y < h; ++y) {
        double row = 0.0;
        for (std::uint32_t x = 0; x < w; ++x) {
            row += value(static_cast<std::size_t>(y) * w + x);
            s[(y + 1) * stride + x + 1] = s[y * stride + x + 1] + row;
        }
    }
    return s;
}

double box(const std::vector<double>& s, std::size_t stride, std::size_t x, std::size_t y, std::size_t k) {
    return s[(y + k) * stride + x + k] - s[y * stride + x + k] - s[(y + k) * stride + x] + s[y * stride + x];
}

} // namespace

double ssim(const GrayImage& a, const GrayImage& b, const SsimParams& params) {
    if (a.width != b.width || a.height != b.height) {
        throw DataError("ssim: image sizes differ (" + std::to_string(a.width) + "x" + std::to_string(a.height) +
                        " vs " + std::to_string(b.width) + "x" + std::to_string(b.height) + ")");
    }
    const std::uint32_t k = params.window;
    if (k < 2 || a.width < k || a.height < k) {
        throw DataError("ssim: images must be at least " + std::to_string(k) + "x" + std::to_string(k));
    }
    const std::uint32_t w = a.width;
    const std::uint32_t h = a.height;
    const auto sx = integral(w, h, [&](std::size_t i) { return a.pixels[i]; });
    const auto sy = integral(w, h, [&](std::size_t i) { return b.pixels[i]; });
    const auto sxx = integral(w, h, [&](std::size_t i) { return a.pixels[i] * a.pixels[i]; });
    const auto syy = integral(w, h, [&](std::size_t i) { return b.pixels[i] * b.pixels[i]; });
    const auto sxy = integral(w, h, [&](std::size_t i) { return a.pixels[i] * b.pixels[i]; });

    const double np = static_cast<double>(k) * k;
    const double cov_norm = np / (np - 1.0);
    const double c1 = (params.k1 * params.data_range) * (params.k1 * params.data_range);
    const double c2 = (params.k2 * params.data_range) * (params.k2 * params.data_range);
    const std::size_t stride = w + 1;

    std::vector<double> values;
    values.reserve(static_cast<std::size_t>(w - k + 1) * (h - k + 1));
    for (std::size_t y = 0; y + k <= h; ++y) {
        for (std::size_t x = 0; x + k <= w; ++x) {
            const double ux = box(sx, stride, x, y, k) / np;
            const double uy = box(sy, stride, x, y, k) / np;
            const double uxx = box(sxx, stride, x, y, k) / np;
            const double uyy = box(syy, stride, x, y, k) / np;
            const double uxy = box(sxy, stride, x, y, k) / np;
            const double vx = cov_norm * (uxx - ux * ux);
            const double vy = cov_norm * (uyy - uy * uy);
            const double vxy = cov_norm * (uxy - ux * uy);
            const double num = (2.0 * ux * uy + c1) * (2.0 * vxy + c2);
            const double den = (ux * ux + uy * uy + c1) * (vx + vy + c2);
            values.push_back(num / den);
        }
    }
    return pairwise_sum(values) / static_cast<double>(values.size());
}

double ssim(const RgbImage& a, const RgbImage& b, const SsimParams& params) {
    return ssim(to_luma(a), to_luma(b), params);
}

} // namespace promptaug::metrics
