#include "calibench/manifest.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "calibench/errors.hpp"
#include "calibench/text.hpp"

namespace calibench {

using nlohmann::json;

const char* tool_version() { return "0.1.0"; }

namespace {

/// Two independently seeded 64-bit FNV passes -> 32 hex characters.
std::string digest128(const std::string& bytes) {
  uint64_t a = text::fnv1a64(bytes);
  uint64_t b = text::fnv1a64(bytes, 0x9e3779b97f4a7c15ull);
  return text::hex64(a) + text::hex64(b);
}

}  // namespace

std::string RunManifest::hash() const {
  std::ostringstream core;
  core << "version\x1f" << version << "\x1e";
  core << "config\x1f" << config_snapshot << "\x1e";
  for (const auto& [label, h] : input_hashes) {
    core << "input\x1f" << label << "\x1f" << h << "\x1e";
  }
  for (const auto& [name, seed] : seeds) {
    core << "seed\x1f" << name << "\x1f" << seed << "\x1e";
  }
  return digest128(core.str());
}

std::string hash_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot hash missing file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return digest128(buf.str());
}

std::string hash_bytes(const std::string& bytes) { return digest128(bytes); }

std::string now_rfc3339() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
#if defined(_WIN32)
  gmtime_s(&tm, &t);
#else
  gmtime_r(&t, &tm);
#endif
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void save_manifest(const RunManifest& m, const std::string& path) {
  json j{{"version", m.version},
         {"config", m.config_snapshot},
         {"input_hashes", m.input_hashes},
         {"seeds", m.seeds},
         {"created_at", m.created_at},
         {"hash", m.hash()}};
  std::ofstream out(path);
  if (!out) throw DataError("cannot write manifest: " + path);
  out << j.dump(2) << "\n";
}

RunManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
  RunManifest m;
  m.version = j.value("version", std::string(tool_version()));
  m.config_snapshot = j.value("config", std::string());
  if (j.contains("input_hashes")) {
    m.input_hashes = j["input_hashes"].get<std::map<std::string, std::string>>();
  }
  if (j.contains("seeds")) {
    m.seeds = j["seeds"].get<std::map<std::string, std::uint64_t>>();
  }
  m.created_at = j.value("created_at", std::string());
  if (j.contains("hash") && j["hash"].get<std::string>() != m.hash()) {
    throw DataError(path + ": stored manifest hash does not match its contents");
  }
  return m;
}

}  // namespace calibench
