#include "thermofoot/io.hpp"

#include "thermofoot/error.hpp"
#include "thermofoot/serialization.hpp"

#include <png.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace thermofoot::io {

namespace {

[[noreturn]] void io_fail(const fs::path& path, const std::string& what) {
  throw Error(Errc::IoError, path.string() + ": " + what);
}

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
  using U = std::conditional_t<sizeof(T) == 2, std::uint16_t, std::uint32_t>;
  const U bits = std::bit_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

template <typename T>
T get_le(const std::uint8_t* p) {
  using U = std::conditional_t<sizeof(T) == 2, std::uint16_t, std::uint32_t>;
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) bits |= static_cast<U>(U(p[i]) << (8 * i));
  return std::bit_cast<T>(bits);
}

template <typename T>
Grid<T> read_grid(const fs::path& path, int rows, int cols) {
  const auto bytes = read_bytes(path);
  const std::size_t expected = static_cast<std::size_t>(rows) * cols * sizeof(T);
  if (bytes.size() != expected)
    throw Error(Errc::DimensionMismatch, path.string() + ": expected " + std::to_string(expected) +
                                             " bytes, found " + std::to_string(bytes.size()));
  Grid<T> g(rows, cols);
  for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = get_le<T>(bytes.data() + i * sizeof(T));
  return g;
}

template <typename T>
std::vector<std::uint8_t> grid_bytes(const Grid<T>& g) {
  std::vector<std::uint8_t> out;
  out.reserve(static_cast<std::size_t>(g.size()) * sizeof(T));
  for (Eigen::Index i = 0; i < g.size(); ++i) put_le(out, g.data()[i]);
  return out;
}

} // namespace

nlohmann::json read_json(const fs::path& path) {
  try {
    return nlohmann::json::parse(read_text(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ParseError, path.string() + ": " + e.what());
  }
}

fs::path sidecar_path(const fs::path& data_path) { return fs::path(data_path.string() + ".json"); }

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) io_fail(path, "cannot open for reading");
  return {std::istreambuf_iterator<char>(in), {}};
}

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) io_fail(path, "cannot open for reading");
  return {std::istreambuf_iterator<char>(in), {}};
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) io_fail(path, "cannot open for writing");
  out << text;
  if (!out) io_fail(path, "write failed");
}

void write_bytes(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) io_fail(path, "cannot open for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) io_fail(path, "write failed");
}

void write_raw_frame(const fs::path& path, const RawFrame& frame) {
  write_bytes(path, grid_bytes(frame.counts));
  write_text(sidecar_path(path), frame_sidecar(frame).dump(2) + "\n");
}

RawFrame read_raw_frame(const fs::path& path, const SensorSpec& sensor) {
  const auto meta = read_json(sidecar_path(path));
  RawFrame frame = frame_from_sidecar(meta);
  const int width = meta.value("width", sensor.width), height = meta.value("height", sensor.height);
  if (width != sensor.width || height != sensor.height)
    throw Error(Errc::DimensionMismatch, path.string() + ": frame is " + std::to_string(width) + "x" +
                                             std::to_string(height) + ", sensor expects " +
                                             std::to_string(sensor.width) + "x" + std::to_string(sensor.height));
  frame.counts = read_grid<std::uint16_t>(path, height, width);
  return frame;
}

void write_temperature_map(const fs::path& path, const TemperatureMap& map) {
  write_bytes(path, grid_bytes(map.temps));
  write_text(sidecar_path(path), map_sidecar(map).dump(2) + "\n");
}

TemperatureMap read_temperature_map(const fs::path& path) {
  const auto meta = read_json(sidecar_path(path));
  TemperatureMap map = map_from_sidecar(meta);
  map.temps = read_grid<float>(path, meta.at("height").get<int>(), meta.at("width").get<int>());
  return map;
}

void write_temperature_csv(const fs::path& path, const TemperatureMap& map) {
  std::ostringstream out;
  char buf[32];
  for (int r = 0; r < map.rows(); ++r) {
    for (int c = 0; c < map.cols(); ++c) {
      if (c) out << ',';
      const float v = map.temps(r, c);
      if (is_valid(v)) {
        std::snprintf(buf, sizeof buf, "%.3f", double(v));
        out << buf;
      } else {
        out << "nan";
      }
    }
    out << '\n';
  }
  write_text(path, out.str());
}

void write_calibration(const fs::path& path, const CalibrationCurve& curve) {
  write_text(path, nlohmann::json(curve).dump(2) + "\n");
}

CalibrationCurve read_calibration(const fs::path& path) {
  try {
    return read_json(path).get<CalibrationCurve>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ParseError, path.string() + ": " + e.what());
  }
}

std::vector<CalibrationSample> read_calibration_samples(const fs::path& path) {
  std::istringstream in(read_text(path));
  std::string line;
  std::vector<CalibrationSample> out;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (lineno == 1 && line.find_first_of("0123456789") != 0 && line[0] != '-' && line[0] != '.') continue;
    CalibrationSample s;
    char comma = 0;
    std::istringstream fields(line);
    if (!(fields >> s.reference_temp_c >> comma >> s.mean_counts) || comma != ',')
      throw Error(Errc::ParseError, path.string() + ":" + std::to_string(lineno) +
                                        ": expected 'reference_temp_c,mean_counts'");
    out.push_back(s);
  }
  return out;
}

std::string encode_rle(const Mask& mask) {
  std::ostringstream out;
  out << "RLE1 " << mask.rows() << ' ' << mask.cols() << '\n';
  std::uint8_t current = 0;
  long run = 0;
  bool first = true;
  auto flush = [&] {
    out << (first ? "" : " ") << run;
    first = false;
  };
  for (Eigen::Index i = 0; i < mask.size(); ++i) {
    const std::uint8_t v = mask.data()[i] ? 1 : 0;
    if (v != current) {
      flush();
      current = v;
      run = 0;
    }
    ++run;
  }
  flush();
  out << '\n';
  return out.str();
}

Mask decode_rle(const std::string& text) {
  std::istringstream in(text);
  std::string magic;
  long rows = 0, cols = 0;
  if (!(in >> magic >> rows >> cols) || magic != "RLE1" || rows <= 0 || cols <= 0)
    throw Error(Errc::ParseError, "bad RLE header");
  Mask m = Mask::Zero(rows, cols);
  long pos = 0, run = 0;
  std::uint8_t value = 0;
  while (in >> run) {
    if (run < 0 || pos + run > m.size()) throw Error(Errc::ParseError, "RLE runs exceed mask size");
    for (long k = 0; k < run; ++k) m.data()[pos + k] = value;
    pos += run;
    value ^= 1;
  }
  if (pos != m.size()) throw Error(Errc::ParseError, "RLE runs do not cover the mask");
  return m;
}

void write_mask_rle(const fs::path& path, const Mask& mask) { write_text(path, encode_rle(mask)); }
Mask read_mask_rle(const fs::path& path) { return decode_rle(read_text(path)); }

namespace {

std::vector<std::uint8_t> encode_png_raw(int rows, int cols, int color_type, int channels,
                                         const std::uint8_t* pixels) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw Error(Errc::IoError, "png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  std::vector<std::uint8_t> out;
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(Errc::IoError, "PNG encoding failed");
  }
  png_set_write_fn(
      png, &out,
      [](png_structp p, png_bytep data, png_size_t len) {
        auto* v = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(p));
        v->insert(v->end(), data, data + len);
      },
      nullptr);
  png_set_IHDR(png, info, static_cast<png_uint_32>(cols), static_cast<png_uint_32>(rows), 8, color_type,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int r = 0; r < rows; ++r)
    png_write_row(png, const_cast<png_bytep>(pixels + static_cast<std::size_t>(r) * cols * channels));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

} // namespace

std::vector<std::uint8_t> encode_png(const RgbImage& image) {
  return encode_png_raw(image.rows, image.cols, PNG_COLOR_TYPE_RGB, 3, image.data.data());
}

std::vector<std::uint8_t> encode_png_gray(const Mask& mask) {
  std::vector<std::uint8_t> px(static_cast<std::size_t>(mask.size()));
  for (Eigen::Index i = 0; i < mask.size(); ++i) px[static_cast<std::size_t>(i)] = mask.data()[i] ? 255 : 0;
  return encode_png_raw(static_cast<int>(mask.rows()), static_cast<int>(mask.cols()), PNG_COLOR_TYPE_GRAY, 1,
                        px.data());
}

void write_png(const fs::path& path, const RgbImage& image) { write_bytes(path, encode_png(image)); }
void write_mask_png(const fs::path& path, const Mask& mask) { write_bytes(path, encode_png_gray(mask)); }

RgbImage decode_png(const std::vector<std::uint8_t>& bytes) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()))
    throw Error(Errc::ParseError, std::string("PNG decode failed: ") + image.message);
  image.format = PNG_FORMAT_RGB;
  RgbImage out(static_cast<int>(image.height), static_cast<int>(image.width));
  if (!png_image_finish_read(&image, nullptr, out.data.data(), 0, nullptr)) {
    png_image_free(&image);
    throw Error(Errc::ParseError, std::string("PNG decode failed: ") + image.message);
  }
  return out;
}

} // namespace thermofoot::io
