#include "spmcsr/manifest.hpp"

#include "spmcsr/io.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace spmcsr {

namespace {

// Values are single-line; backslash and newline are escaped.
std::string escape(const std::string &s) {
  std::string out;
  for (char c : s) {
    if (c == '\\') out += "\\\\";
    else if (c == '\n') out += "\\n";
    else out.push_back(c);
  }
  return out;
}

std::string unescape(const std::string &s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\\' && i + 1 < s.size()) {
      out.push_back(s[i + 1] == 'n' ? '\n' : s[i + 1]);
      ++i;
    } else {
      out.push_back(s[i]);
    }
  }
  return out;
}

}  // namespace

std::string toolkit_version() {
#ifdef SPMCSR_VERSION
  return SPMCSR_VERSION;
#else
  return "unknown";
#endif
}

void RunManifest::set(const std::string &key, std::string value) {
  for (auto &[k, v] : params) {
    if (k == key) {
      v = std::move(value);
      return;
    }
  }
  params.emplace_back(key, std::move(value));
}

const std::string *RunManifest::find(const std::string &key) const {
  for (const auto &[k, v] : params)
    if (k == key) return &v;
  return nullptr;
}

std::string RunManifest::serialize() const {
  std::ostringstream out;
  out << "command=" << escape(command) << "\n";
  out << "version=" << escape(version) << "\n";
  out << "seed=" << seed << "\n";
  out << "seconds=" << std::setprecision(6) << seconds << "\n";
  for (const auto &[k, v] : params) out << "param." << k << "=" << escape(v) << "\n";
  for (const auto &i : inputs) out << "input=" << escape(i) << "\n";
  for (const auto &o : outputs) out << "output=" << escape(o) << "\n";
  for (const auto &a : argv) out << "argv=" << escape(a) << "\n";
  return out.str();
}

RunManifest RunManifest::parse(const std::string &text) {
  RunManifest m;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("manifest: malformed line '" + line + "'");
    const std::string key = line.substr(0, eq);
    const std::string value = unescape(line.substr(eq + 1));
    if (key == "command") m.command = value;
    else if (key == "version") m.version = value;
    else if (key == "seed") m.seed = std::stoull(value);
    else if (key == "seconds") m.seconds = std::stod(value);
    else if (key.rfind("param.", 0) == 0) m.params.emplace_back(key.substr(6), value);
    else if (key == "input") m.inputs.push_back(value);
    else if (key == "output") m.outputs.push_back(value);
    else if (key == "argv") m.argv.push_back(value);
  }
  return m;
}

void RunManifest::write(const std::filesystem::path &path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << serialize();
}

RunManifest RunManifest::read(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

}  // namespace spmcsr
