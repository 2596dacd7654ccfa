#include "tamperkit/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <vector>

namespace tamperkit {

namespace {

// Releases libpng's internal state on every exit path.
struct PngImage {
    png_image image;
    PngImage() {
        std::memset(&image, 0, sizeof(image));
        image.version = PNG_IMAGE_VERSION;
    }
    ~PngImage() { png_image_free(&image); }
    PngImage(const PngImage&) = delete;
    PngImage& operator=(const PngImage&) = delete;
};

}  // namespace

Raster read_png(const std::filesystem::path& path) {
    PngImage png;
    if (!png_image_begin_read_from_file(&png.image, path.c_str())) {
        throw Error(ErrorKind::Io, "cannot read PNG '" + path.string() + "': " + png.image.message);
    }
    const bool gray = (png.image.format & PNG_FORMAT_FLAG_COLOR) == 0;
    png.image.format = gray ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
    const int channels = gray ? 1 : 3;
    const int width = static_cast<int>(png.image.width);
    const int height = static_cast<int>(png.image.height);
    std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(png.image));
    if (!png_image_finish_read(&png.image, nullptr, buffer.data(), 0, nullptr)) {
        throw Error(ErrorKind::Io, "cannot decode PNG '" + path.string() + "': " + png.image.message);
    }
    std::vector<double> data(buffer.size());
    std::transform(buffer.begin(), buffer.end(), data.begin(), [](std::uint8_t v) { return v / 255.0; });
    return Raster(width, height, channels, std::move(data));
}

void write_png(const std::filesystem::path& path, const Raster& img) {
    PngImage png;
    png.image.width = static_cast<png_uint_32>(img.width());
    png.image.height = static_cast<png_uint_32>(img.height());
    png.image.format = img.channels() == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
    std::vector<std::uint8_t> buffer(img.size());
    auto src = img.data();
    for (std::size_t i = 0; i < buffer.size(); ++i) {
        const double v = std::round(src[i] * 255.0);
        buffer[i] = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
    }
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    if (!png_image_write_to_file(&png.image, path.c_str(), 0, buffer.data(), 0, nullptr)) {
        throw Error(ErrorKind::Io, "cannot write PNG '" + path.string() + "': " + png.image.message);
    }
}

}  // namespace tamperkit
