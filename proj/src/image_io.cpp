#include "ocrpipe/image_io.hpp"

#include <cctype>
#include <fstream>

#include <png.h>

#include "json.hpp"

namespace ocrpipe {

namespace fs = std::filesystem;

namespace {

std::string lower_extension(const fs::path& path) {
  std::string ext = path.extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return ext;
}

LineImage read_png(const fs::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw std::runtime_error("cannot read PNG '" + path.string() + "': " + image.message);
  }
  image.format = PNG_FORMAT_GRAY;
  if (image.width < 1 || image.height < 1) {
    png_image_free(&image);
    throw std::runtime_error("empty PNG '" + path.string() + "'");
  }
  Raster8 pixels(image.height, image.width);
  if (!png_image_finish_read(&image, nullptr, pixels.data(), 0, nullptr)) {
    const std::string message = image.message;
    png_image_free(&image);
    throw std::runtime_error("cannot decode PNG '" + path.string() + "': " + message);
  }
  return LineImage(std::move(pixels));
}

// Skips whitespace and '#' comments between PGM header tokens.
int read_pgm_int(std::istream& in) {
  while (true) {
    const int c = in.peek();
    if (c == '#') {
      std::string discard;
      std::getline(in, discard);
    } else if (std::isspace(c)) {
      in.get();
    } else {
      break;
    }
  }
  int value = -1;
  if (!(in >> value)) throw std::runtime_error("malformed PGM header");
  return value;
}

LineImage read_pgm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  std::string magic(2, '\0');
  in.read(magic.data(), 2);
  if (magic != "P5" && magic != "P2") throw std::runtime_error("'" + path.string() + "' is not a PGM");
  const int width = read_pgm_int(in);
  const int height = read_pgm_int(in);
  const int maxval = read_pgm_int(in);
  if (width < 1 || height < 1 || maxval < 1 || maxval > 65535) {
    throw std::runtime_error("unsupported PGM geometry in '" + path.string() + "'");
  }
  Raster8 pixels(height, width);
  auto rescale = [maxval](int v) {
    return static_cast<std::uint8_t>(maxval == 255 ? v : (v * 255 + maxval / 2) / maxval);
  };
  if (magic == "P2") {
    for (Eigen::Index i = 0; i < pixels.size(); ++i) pixels.data()[i] = rescale(read_pgm_int(in));
  } else {
    in.get();  // single whitespace after maxval
    const int bytes = maxval < 256 ? 1 : 2;
    std::vector<unsigned char> raw(std::size_t(pixels.size()) * bytes);
    in.read(reinterpret_cast<char*>(raw.data()), std::streamsize(raw.size()));
    if (in.gcount() != std::streamsize(raw.size())) {
      throw std::runtime_error("truncated PGM '" + path.string() + "'");
    }
    for (Eigen::Index i = 0; i < pixels.size(); ++i) {
      const int v = bytes == 1 ? raw[i] : (raw[2 * i] << 8) | raw[2 * i + 1];
      pixels.data()[i] = rescale(v);
    }
  }
  return LineImage(std::move(pixels));
}

}  // namespace

bool is_image_file(const fs::path& path) {
  const auto ext = lower_extension(path);
  return ext == ".png" || ext == ".pgm";
}

LineImage read_image(const fs::path& path) {
  const auto ext = lower_extension(path);
  if (ext == ".png") return read_png(path);
  if (ext == ".pgm") return read_pgm(path);
  throw std::runtime_error("unsupported image format '" + path.string() + "'");
}

void write_png(const LineImage& img, const fs::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = png_uint_32(img.width());
  image.height = png_uint_32(img.height());
  image.format = PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&image, path.c_str(), 0, img.pixels().data(), 0, nullptr)) {
    throw std::runtime_error("cannot write PNG '" + path.string() + "': " + image.message);
  }
}

void write_pgm(const LineImage& img, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << "P5\n" << img.width() << ' ' << img.height() << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels().data()), std::streamsize(img.pixels().size()));
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

void write_image(const LineImage& img, const fs::path& path) {
  const auto ext = lower_extension(path);
  if (ext == ".png") return write_png(img, path);
  if (ext == ".pgm") return write_pgm(img, path);
  throw std::runtime_error("unsupported image format '" + path.string() + "'");
}

Baseline read_baseline(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  const auto j = nlohmann::json::parse(in);
  return {j.at("slope").get<double>(), j.value("intercept", 0.0)};
}

void write_baseline(const Baseline& baseline, const fs::path& path) {
  std::ofstream out(path);
  out << nlohmann::json{{"slope", baseline.slope}, {"intercept", baseline.intercept}}.dump() << '\n';
}

}  // namespace ocrpipe
