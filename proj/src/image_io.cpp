#include "spmcsr/io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace spmcsr {

namespace fs = std::filesystem;

std::uint8_t quantize8(double v) {
  const double q = std::round(v * 255.0);
  if (!(q > 0.0)) return 0;
  if (q >= 255.0) return 255;
  return static_cast<std::uint8_t>(q);
}

Image ImageChannels::luminance() const {
  if (channels.size() == 1) return channels[0];
  if (channels.size() == 3) return to_luminance(channels[0], channels[1], channels[2]);
  throw std::invalid_argument("ImageChannels: expected 1 or 3 channels");
}

namespace {

std::string lower_extension(const fs::path &p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return char(std::tolower(c)); });
  return ext;
}

}  // namespace

ImageChannels read_png(const fs::path &path) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.string().c_str())) {
    throw IoError("cannot read PNG " + path.string() + ": " + image.message);
  }
  const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const int nc = color ? 3 : 1;
  std::vector<png_byte> buf(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr)) {
    png_image_free(&image);
    throw IoError("cannot decode PNG " + path.string() + ": " + image.message);
  }
  const Eigen::Index w = image.width, h = image.height;
  ImageChannels out;
  out.channels.assign(nc, Image(h, w));
  for (Eigen::Index y = 0; y < h; ++y)
    for (Eigen::Index x = 0; x < w; ++x)
      for (int c = 0; c < nc; ++c) out.channels[c](y, x) = buf[std::size_t((y * w + x) * nc + c)] / 255.0;
  return out;
}

void write_png(const fs::path &path, const ImageChannels &img) {
  const auto nc = img.channels.size();
  if (nc != 1 && nc != 3) throw std::invalid_argument("write_png: expected 1 or 3 channels");
  const Image &first = img.channels[0];
  for (const auto &c : img.channels) require_same_shape(c, first, "write_png");
  const Eigen::Index w = first.cols(), h = first.rows();
  std::vector<png_byte> buf(std::size_t(w * h) * nc);
  for (Eigen::Index y = 0; y < h; ++y)
    for (Eigen::Index x = 0; x < w; ++x)
      for (std::size_t c = 0; c < nc; ++c) buf[std::size_t(y * w + x) * nc + c] = quantize8(img.channels[c](y, x));

  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(w);
  image.height = static_cast<png_uint_32>(h);
  image.format = nc == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&image, path.string().c_str(), 0, buf.data(), 0, nullptr)) {
    throw IoError("cannot write PNG " + path.string() + ": " + image.message);
  }
}

Image read_pgm(const fs::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  auto token = [&]() {
    std::string t;
    while (in) {
      const int c = in.get();
      if (c == '#') {
        std::string skip;
        std::getline(in, skip);
      } else if (std::isspace(c)) {
        if (!t.empty()) break;
      } else if (c != EOF) {
        t.push_back(char(c));
      }
    }
    return t;
  };
  if (token() != "P5") throw IoError(path.string() + ": only binary (P5) PGM is supported");
  const long w = std::stol(token()), h = std::stol(token()), maxval = std::stol(token());
  if (w < 1 || h < 1 || maxval < 1 || maxval > 255) throw IoError(path.string() + ": unsupported PGM header");
  std::vector<unsigned char> buf(std::size_t(w * h));
  in.read(reinterpret_cast<char *>(buf.data()), std::streamsize(buf.size()));
  if (in.gcount() != std::streamsize(buf.size())) throw IoError(path.string() + ": truncated PGM");
  Image img(h, w);
  for (long i = 0; i < w * h; ++i) img.data()[i] = double(buf[std::size_t(i)]) / double(maxval);
  return img;
}

void write_pgm(const fs::path &path, const Image &gray) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "P5\n" << gray.cols() << " " << gray.rows() << "\n255\n";
  std::vector<unsigned char> buf(std::size_t(gray.size()));
  for (Eigen::Index i = 0; i < gray.size(); ++i) buf[std::size_t(i)] = quantize8(gray.data()[i]);
  out.write(reinterpret_cast<const char *>(buf.data()), std::streamsize(buf.size()));
  if (!out) throw IoError("cannot write " + path.string());
}

ImageChannels read_image(const fs::path &path) {
  const auto ext = lower_extension(path);
  if (ext == ".png") return read_png(path);
  if (ext == ".pgm") return ImageChannels{{read_pgm(path)}};
  throw IoError("unsupported image format: " + path.string());
}

Image read_gray(const fs::path &path) { return read_image(path).luminance(); }

void write_image(const fs::path &path, const ImageChannels &img) {
  const auto ext = lower_extension(path);
  if (ext == ".png") return write_png(path, img);
  if (ext == ".pgm") {
    if (img.channels.size() != 1) throw IoError("PGM output must be single-channel");
    return write_pgm(path, img.channels[0]);
  }
  throw IoError("unsupported image format: " + path.string());
}

void write_image(const fs::path &path, const Image &gray) { write_image(path, ImageChannels{{gray}}); }

std::vector<fs::path> list_image_files(const fs::path &dir) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto &e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const auto ext = lower_extension(e.path());
    if (ext == ".png" || ext == ".pgm") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

std::string frame_file_name(std::size_t index, const std::string &extension) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%04zu", index);
  return std::string(buf) + extension;
}

std::string flow_to_ref_name(long offset) { return "flow_" + std::to_string(offset) + "_to_ref.flo"; }
std::string flow_from_ref_name(long offset) { return "flow_ref_to_" + std::to_string(offset) + ".flo"; }

void write_sequence_dir(const fs::path &dir, const SequenceDirectory &seq) {
  fs::create_directories(dir);
  for (std::size_t i = 0; i < seq.frames.size(); ++i) write_image(dir / frame_file_name(i), seq.frames[i]);
  std::ofstream out(dir / kSequenceManifestName);
  if (!out) throw IoError("cannot write " + (dir / kSequenceManifestName).string());
  out << "frames=" << seq.frames.size() << "\n"
      << "reference=" << seq.reference_index << "\n"
      << "alpha=" << seq.alpha << "\n"
      << "seed=" << seq.seed << "\n";
}

SequenceDirectory read_sequence_dir(const fs::path &dir) {
  std::ifstream in(dir / kSequenceManifestName);
  if (!in) throw IoError("missing " + (dir / kSequenceManifestName).string());
  std::map<std::string, std::string> kv;
  for (std::string line; std::getline(in, line);) {
    const auto eq = line.find('=');
    if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto get = [&](const char *key) {
    const auto it = kv.find(key);
    if (it == kv.end()) throw IoError(std::string("sequence manifest lacks '") + key + "'");
    return it->second;
  };
  SequenceDirectory seq;
  const std::size_t n = std::stoul(get("frames"));
  seq.reference_index = std::stoul(get("reference"));
  seq.alpha = std::stoi(get("alpha"));
  seq.seed = kv.count("seed") ? std::stoull(kv["seed"]) : 0;
  for (std::size_t i = 0; i < n; ++i) {
    fs::path p = dir / frame_file_name(i);
    if (!fs::exists(p)) p = dir / frame_file_name(i, ".pgm");
    seq.frames.push_back(read_gray(p));
  }
  if (seq.reference_index >= n) throw IoError("sequence manifest: reference index out of range");
  return seq;
}

}  // namespace spmcsr
