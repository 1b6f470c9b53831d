#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "empathd/geometry.hpp"
#include "empathd/image.hpp"

namespace empathd {

// 8-bit RGB PNG <-> linear float image (value / 255).
std::vector<std::uint8_t> encode_png(const Image& img);
Image decode_png_rgb(const std::vector<std::uint8_t>& bytes);
void write_png(const Image& img, const std::string& path);
Image read_png_rgb(const std::string& path);

// 16-bit grayscale PNG of millimetres <-> depth plane in metres.
void write_depth_png(const Plane& depthMetres, const std::string& path);
Plane read_depth_png(const std::string& path);

void write_mask_png(const SegmentMask& mask, const std::string& path);

nlohmann::json intrinsics_to_json(const CameraIntrinsics& k);
CameraIntrinsics intrinsics_from_json(const nlohmann::json& j);

nlohmann::json pose_to_json(const Pose& p);  // {"T":[3], "R":[9] row-major}
Pose pose_from_json(const nlohmann::json& j);

nlohmann::json geometry_to_json(const PhoneGeometry& g);
PhoneGeometry geometry_from_json(const nlohmann::json& j);

// Directory of NNNNNN.color.png / NNNNNN.depth.png pairs plus intrinsics.json.
std::vector<RgbdFrame> load_rgbd_sequence(const std::string& directory);
void write_rgbd_frame(const RgbdFrame& frame, const std::string& directory, int index);
void write_intrinsics(const CameraIntrinsics& k, const std::string& directory);

std::string frame_stem(int index);  // "000042"

std::vector<std::uint8_t> read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes);
nlohmann::json read_json_file(const std::string& path);  // throws ConfigError

}  // namespace empathd
