#pragma once

/// Run manifests tie every emitted artifact back to the exact inputs that
/// produced it: a snapshot of the run configuration, content hashes of the
/// input files, the seeds in play, and the tool version. The manifest hash
/// covers only that deterministic core — timestamps ride along for humans
/// but do not perturb the hash, so warm-cache re-runs stay byte-identical.

#include <cstdint>
#include <map>
#include <string>

namespace calibench {

/// Library version (matches the CMake project version).
const char* tool_version();

struct RunManifest {
  std::string version = tool_version();
  /// Canonical JSON text of the configuration that drove the run.
  std::string config_snapshot;
  /// Label (usually the input path) -> content hash.
  std::map<std::string, std::string> input_hashes;
  std::map<std::string, std::uint64_t> seeds;
  /// RFC3339 creation time; excluded from hash().
  std::string created_at;

  /// 32-hex digest over version, config snapshot, input hashes, and seeds.
  std::string hash() const;
};

/// Content hash of a file (DataError when unreadable). Same digest family
/// as RunManifest::hash so manifests and caches stay consistent.
std::string hash_file(const std::string& path);

/// Hash of an in-memory buffer, for inputs that never touch disk.
std::string hash_bytes(const std::string& bytes);

std::string now_rfc3339();

void save_manifest(const RunManifest& m, const std::string& path);
RunManifest load_manifest(const std::string& path);

}  // namespace calibench
