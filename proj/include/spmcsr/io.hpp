#ifndef SPMCSR_IO_HPP
#define SPMCSR_IO_HPP

// File formats: 8-bit PNG (gray or RGB) and binary PGM images, Middlebury
// .flo flow files, and sequence directories.

#include "spmcsr/core.hpp"

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace spmcsr {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One entry for gray images, three (r, g, b) for color.
struct ImageChannels {
  std::vector<Image> channels;

  bool is_color() const { return channels.size() == 3; }
  /// Gray passthrough, BT.601 luminance for color.
  Image luminance() const;
};

/// 8-bit code for an intensity: round(v * 255) clamped to [0, 255].
std::uint8_t quantize8(double v);

ImageChannels read_image(const std::filesystem::path &path);
Image read_gray(const std::filesystem::path &path);
/// Format picked from the extension (.png, .pgm).
void write_image(const std::filesystem::path &path, const Image &gray);
void write_image(const std::filesystem::path &path, const ImageChannels &img);

ImageChannels read_png(const std::filesystem::path &path);
void write_png(const std::filesystem::path &path, const ImageChannels &img);
Image read_pgm(const std::filesystem::path &path);
void write_pgm(const std::filesystem::path &path, const Image &gray);

/// Tag at the start of every .flo file: the float32 202021.25 ("PIEH").
inline constexpr float kFloTag = 202021.25f;

/// Values are stored as little-endian float32.
Flow read_flo(const std::filesystem::path &path);
void write_flo(const std::filesystem::path &path, const Flow &flow);
std::vector<std::uint8_t> encode_flo(const Flow &flow);
Flow decode_flo(const std::vector<std::uint8_t> &bytes);

/// Directory holding frame_0000.png, frame_0001.png, ... and sequence.txt
/// (frames, reference, alpha, seed as key=value lines).
struct SequenceDirectory {
  std::vector<Image> frames;
  std::size_t reference_index = 0;
  int alpha = 1;
  std::uint64_t seed = 0;
};

inline constexpr const char *kSequenceManifestName = "sequence.txt";

std::string frame_file_name(std::size_t index, const std::string &extension = ".png");
/// Flow F_{i->0} for frame offset i = index - reference.
std::string flow_to_ref_name(long offset);
/// Flow F_{0->i}.
std::string flow_from_ref_name(long offset);

void write_sequence_dir(const std::filesystem::path &dir, const SequenceDirectory &seq);
SequenceDirectory read_sequence_dir(const std::filesystem::path &dir);

/// Image files in dir (png/pgm) sorted by name.
std::vector<std::filesystem::path> list_image_files(const std::filesystem::path &dir);

}  // namespace spmcsr

#endif  // SPMCSR_IO_HPP
