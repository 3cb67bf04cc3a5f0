#ifndef SPMCSR_MANIFEST_HPP
#define SPMCSR_MANIFEST_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace spmcsr {

/// Record written next to every CLI output. The stored argv is enough to
/// re-run the command.
struct RunManifest {
  std::string command;
  std::vector<std::pair<std::string, std::string>> params;  // resolved values, in order
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::uint64_t seed = 0;
  std::string version;
  double seconds = 0.0;
  std::vector<std::string> argv;

  void set(const std::string &key, std::string value);
  const std::string *find(const std::string &key) const;

  std::string serialize() const;
  static RunManifest parse(const std::string &text);
  void write(const std::filesystem::path &path) const;
  static RunManifest read(const std::filesystem::path &path);
};

std::string toolkit_version();

}  // namespace spmcsr

#endif  // SPMCSR_MANIFEST_HPP
