#pragma once

#include "thermofoot/grid.hpp"
#include "thermofoot/radiometry.hpp"
#include "thermofoot/render.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace thermofoot::io {

namespace fs = std::filesystem;

/// Sidecar path for a binary grid file: "<path>.json".
fs::path sidecar_path(const fs::path& data_path);

/// Little-endian u16, row-major, plus a JSON sidecar with view, angle, timestamp and frame id.
void write_raw_frame(const fs::path& path, const RawFrame& frame);
RawFrame read_raw_frame(const fs::path& path, const SensorSpec& sensor = {});

/// Little-endian f32, row-major, plus sidecar. NaN marks invalid pixels.
void write_temperature_map(const fs::path& path, const TemperatureMap& map);
TemperatureMap read_temperature_map(const fs::path& path);
/// One scanline per row; invalid pixels are written as "nan".
void write_temperature_csv(const fs::path& path, const TemperatureMap& map);

void write_calibration(const fs::path& path, const CalibrationCurve& curve);
CalibrationCurve read_calibration(const fs::path& path);
/// CSV with header "reference_temp_c,mean_counts".
std::vector<CalibrationSample> read_calibration_samples(const fs::path& path);

/// Run-length text: "RLE1 <rows> <cols>" then alternating run lengths starting with zeros.
std::string encode_rle(const Mask& mask);
Mask decode_rle(const std::string& text);
void write_mask_rle(const fs::path& path, const Mask& mask);
Mask read_mask_rle(const fs::path& path);

std::vector<std::uint8_t> encode_png(const RgbImage& image);
std::vector<std::uint8_t> encode_png_gray(const Mask& mask);  // 0 / 255
void write_png(const fs::path& path, const RgbImage& image);
void write_mask_png(const fs::path& path, const Mask& mask);
RgbImage decode_png(const std::vector<std::uint8_t>& bytes);

std::string read_text(const fs::path& path);
nlohmann::json read_json(const fs::path& path);  // ParseError on malformed input
std::vector<std::uint8_t> read_bytes(const fs::path& path);
void write_text(const fs::path& path, const std::string& text);
void write_bytes(const fs::path& path, const std::vector<std::uint8_t>& bytes);

} // namespace thermofoot::io
