#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "mvc/dataio.hpp"
#include "mvc/errors.hpp"

namespace mvc::data {

namespace {

std::vector<char> read_all(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ParseError("cannot open image " + path.string());
  return std::vector<char>((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

template <typename T>
void put_le(std::string& out, T v) {
  char raw[sizeof(T)];
  std::memcpy(raw, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
  out.append(raw, sizeof(T));
}

template <typename T>
T get_le(const char* p) {
  char raw[sizeof(T)];
  std::memcpy(raw, p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
  T v;
  std::memcpy(&v, raw, sizeof(T));
  return v;
}

void write_bytes(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write image " + path.string());
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw std::runtime_error("failed writing image " + path.string());
}

}  // namespace

void write_ppm(const Image& img, const std::filesystem::path& path) {
  std::string out = "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  out.reserve(out.size() + static_cast<std::size_t>(3 * img.width * img.height));
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c) {
        const float v = std::clamp(img.at(c, y, x), 0.f, 1.f);
        out.push_back(static_cast<char>(static_cast<unsigned char>(std::floor(v * 255.f + 0.5f))));
      }
  write_bytes(path, out);
}

Image read_ppm(const std::filesystem::path& path) {
  const auto bytes = read_all(path);
  std::size_t pos = 0;
  auto token = [&]() {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
    std::string t;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) t.push_back(bytes[pos++]);
    return t;
  };
  if (token() != "P6") throw ParseError(path.string() + ": not a binary PPM (P6)");
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(token());
    h = std::stoi(token());
    maxval = std::stoi(token());
  } catch (const std::exception&) {
    throw ParseError(path.string() + ": malformed PPM header");
  }
  if (w <= 0 || h <= 0 || maxval != 255) throw ParseError(path.string() + ": unsupported PPM geometry or maxval");
  ++pos;  // single whitespace byte after maxval
  const std::size_t n = static_cast<std::size_t>(3 * w * h);
  if (bytes.size() < pos + n) throw ParseError(path.string() + ": truncated PPM payload");
  Image img(h, w);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + pos);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) img.at(c, y, x) = static_cast<float>(*p++) / 255.f;
  return img;
}

void write_tensor_image(const Image& img, const std::filesystem::path& path, TensorDtype dtype) {
  std::string out = "MVIM";
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(dtype));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(img.height));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(img.width));
  for (float v : img.data) {
    if (dtype == TensorDtype::f32)
      put_le<float>(out, v);
    else
      put_le<double>(out, static_cast<double>(v));
  }
  write_bytes(path, out);
}

Image read_tensor_image(const std::filesystem::path& path) {
  const auto bytes = read_all(path);
  if (bytes.size() < 16 || std::memcmp(bytes.data(), "MVIM", 4) != 0)
    throw ParseError(path.string() + ": not an MVIM tensor image");
  const auto code = get_le<std::uint32_t>(bytes.data() + 4);
  const auto h = get_le<std::uint32_t>(bytes.data() + 8);
  const auto w = get_le<std::uint32_t>(bytes.data() + 12);
  if (code != 1 && code != 2) throw ParseError(path.string() + ": unknown dtype code " + std::to_string(code));
  const std::size_t elem = code == 1 ? 4 : 8;
  const std::size_t n = 3ull * h * w;
  if (h == 0 || w == 0 || bytes.size() != 16 + n * elem) throw ParseError(path.string() + ": payload size mismatch");
  Image img(static_cast<int>(h), static_cast<int>(w));
  for (std::size_t i = 0; i < n; ++i) {
    const char* p = bytes.data() + 16 + i * elem;
    img.data[i] = code == 1 ? get_le<float>(p) : static_cast<float>(get_le<double>(p));
  }
  return img;
}

Image read_image(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ParseError("cannot open image " + path.string());
  char magic[4] = {};
  f.read(magic, 4);
  if (std::memcmp(magic, "MVIM", 4) == 0) return read_tensor_image(path);
  if (magic[0] == 'P' && magic[1] == '6') return read_ppm(path);
  throw ParseError(path.string() + ": unrecognized image format");
}

Image extract_region(const Image& img, const BBox& box) {
  const int x0 = std::clamp(static_cast<int>(std::lround(box.x)), 0, img.width - 1);
  const int y0 = std::clamp(static_cast<int>(std::lround(box.y)), 0, img.height - 1);
  const int x1 = std::clamp(static_cast<int>(std::lround(box.x + box.w)), x0 + 1, img.width);
  const int y1 = std::clamp(static_cast<int>(std::lround(box.y + box.h)), y0 + 1, img.height);
  Image out(y1 - y0, x1 - x0);
  for (int c = 0; c < 3; ++c)
    for (int y = y0; y < y1; ++y)
      for (int x = x0; x < x1; ++x) out.at(c, y - y0, x - x0) = img.at(c, y, x);
  return out;
}

}  // namespace mvc::data
