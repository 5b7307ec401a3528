#pragma once

// Shared fixtures and independent oracles for the test suites. The oracles
// deliberately use different algorithm families from the library code they
// check: the closure oracle is whole-set relaxation instead of
// level-synchronized breadth-first search, and the regression oracles are
// plain long-double loops instead of decomposition-based linear algebra.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "calibench/calibration.hpp"
#include "calibench/inference.hpp"
#include "calibench/kb.hpp"

namespace support {

/// Self-deleting directory under the system temp path.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

/// Writes `content` to `path` verbatim, truncating any existing file.
void write_file(const std::string& path, const std::string& content);

// ---------------------------------------------------------------------------
// Closure oracle

/// (subject, predicate, object, domain, truth) — the identity the closure
/// deduplicates on.
using FactKey = std::tuple<std::string, std::string, std::string, int, bool>;

FactKey key_of(const calibench::KnowledgeTriple& t, bool truth);
FactKey key_of(const calibench::DerivedFact& f);

/// Iterate-until-fixed-point closure: repeatedly sweeps the whole fact set,
/// relaxing unary rules at premise cost + 1 and transitive joins at
/// lhs + rhs + 1, until no minimal cost improves. Returns every derivable
/// key whose minimal cost is within max_depth, mapped to that cost. Base
/// triples seed cost 0 but are excluded from the result; imported facts
/// enter first-wins (true ones also serve as cost-0 premises).
std::map<FactKey, int> naive_closure(const calibench::KnowledgeBase& kb,
                                     const std::vector<calibench::DerivedFact>& imported,
                                     int max_depth);

/// Same relaxation run without a cap; true when it reaches keys the capped
/// run cannot, i.e. the expected value of the closure's truncated flag.
bool naive_truncated(const calibench::KnowledgeBase& kb,
                     const std::vector<calibench::DerivedFact>& imported, int max_depth);

/// Randomized toy knowledge base: a handful of entities and predicates with
/// random rule flags (transitive / symmetric / negation / inverse, the
/// inverse sometimes pointing back into the pool), up to `max_triples` base
/// triples, and occasionally a few imported facts.
struct RandomKb {
  calibench::KnowledgeBase kb;
  std::vector<calibench::DerivedFact> imported;
  int max_depth = 3;
};
RandomKb make_random_kb(uint64_t seed, std::size_t max_triples = 30);

// ---------------------------------------------------------------------------
// Regression oracles (long-double accumulation, plain loops)

struct BruteFit {
  std::vector<double> coef;
  std::vector<std::vector<double>> vcov;
};

/// Coefficients via normal equations + Gaussian elimination with partial
/// pivoting; variance per the requested sandwich, with no small-sample
/// degrees-of-freedom correction (the convention the library pins).
BruteFit brute_hc0(const std::vector<std::vector<double>>& X, const std::vector<double>& y);
BruteFit brute_cluster(const std::vector<std::vector<double>>& X, const std::vector<double>& y,
                       const std::vector<std::int64_t>& cluster);
/// Two-way: V(cluster1) + V(cluster2) - V(intersection), before any
/// positive-semidefinite projection.
BruteFit brute_cluster2(const std::vector<std::vector<double>>& X, const std::vector<double>& y,
                        const std::vector<std::int64_t>& c1,
                        const std::vector<std::int64_t>& c2);

// ---------------------------------------------------------------------------
// Calibration fixtures

/// n scored records at one stated confidence with exactly n_correct correct
/// answers — the shape the headline accuracy/confidence/bias numbers need.
std::vector<calibench::ScoredRecord> scored_fixture(std::size_t n, std::size_t n_correct,
                                                    double confidence);

// ---------------------------------------------------------------------------
// Scale knowledge base on disk

struct ScaleKbPaths {
  std::string predicates;
  std::string triples;
  std::string imported;
};

/// Writes a knowledge base whose closure at depth 3 supports at least
/// `per_cell` questions in every (domain, question-type) cell of the five
/// sampled types: per domain one transitive chain (length chosen so both the
/// plain spans and the deeper composite spans clear the quota), `per_cell`
/// negated facts, `per_cell` inverse facts, and `per_cell` imported
/// time-anchored facts (half true, half false).
ScaleKbPaths write_scale_kb(const std::filesystem::path& dir, std::size_t per_cell);

}  // namespace support
