#include "support.hpp"

#include <unistd.h>

#include <atomic>
#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "calibench/stats.hpp"

namespace support {

using calibench::DerivedFact;
using calibench::Domain;
using calibench::KnowledgeBase;
using calibench::KnowledgeTriple;
using calibench::PredicateMeta;

TempDir::TempDir(const std::string& tag) {
  static std::atomic<uint64_t> counter{0};
  uint64_t id = counter.fetch_add(1);
  path_ = std::filesystem::temp_directory_path() /
          ("calibench-test-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(id));
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("test support: cannot write " + path);
  out << content;
}

// ---------------------------------------------------------------------------
// Closure oracle

FactKey key_of(const KnowledgeTriple& t, bool truth) {
  return {t.subject, t.predicate, t.object, static_cast<int>(t.domain), truth};
}

FactKey key_of(const DerivedFact& f) { return key_of(f.triple, f.truth); }

namespace {

struct OracleFact {
  KnowledgeTriple triple;
  bool truth = true;
  int cost = 0;
};

/// Whole-set relaxation until no minimal cost improves. Candidates costlier
/// than `cap` are discarded, which cannot disturb cheaper facts: every
/// sub-derivation of a within-cap derivation is itself within the cap.
std::map<FactKey, int> relax_all(const KnowledgeBase& kb,
                                 const std::vector<DerivedFact>& imported, int cap) {
  std::map<FactKey, int> cost;
  for (const auto& t : kb.dump()) cost[key_of(t, true)] = 0;
  for (const auto& f : imported) {
    FactKey k = key_of(f);
    if (cost.find(k) == cost.end()) cost.emplace(std::move(k), 0);
  }

  auto relax = [&](const KnowledgeTriple& t, bool truth, int c) {
    if (c > cap) return false;
    FactKey k = key_of(t, truth);
    auto it = cost.find(k);
    if (it != cost.end() && it->second <= c) return false;
    if (it == cost.end()) {
      cost.emplace(std::move(k), c);
    } else {
      it->second = c;
    }
    return true;
  };

  bool changed = true;
  while (changed) {
    changed = false;
    std::vector<OracleFact> trues;
    for (const auto& [k, c] : cost) {
      if (!std::get<4>(k)) continue;  // false facts are never premises
      trues.push_back(OracleFact{KnowledgeTriple{std::get<0>(k), std::get<1>(k), std::get<2>(k),
                                                 static_cast<Domain>(std::get<3>(k))},
                                 true, c});
    }
    for (const auto& f : trues) {
      if (!kb.has_predicate(f.triple.predicate)) continue;
      const PredicateMeta& meta = kb.predicate(f.triple.predicate);
      if (meta.negation_form) {
        changed |= relax({f.triple.subject, *meta.negation_form, f.triple.object,
                          f.triple.domain},
                         false, f.cost + 1);
      }
      if (meta.symmetric) {
        changed |= relax({f.triple.object, f.triple.predicate, f.triple.subject,
                          f.triple.domain},
                         true, f.cost + 1);
      }
      if (meta.inverse_form) {
        changed |= relax({f.triple.object, *meta.inverse_form, f.triple.subject,
                          f.triple.domain},
                         true, f.cost + 1);
      }
    }
    for (const auto& lhs : trues) {
      if (!kb.has_predicate(lhs.triple.predicate)) continue;
      if (!kb.predicate(lhs.triple.predicate).transitive) continue;
      for (const auto& rhs : trues) {
        if (rhs.triple.predicate != lhs.triple.predicate) continue;
        if (lhs.triple.object != rhs.triple.subject) continue;
        changed |= relax({lhs.triple.subject, lhs.triple.predicate, rhs.triple.object,
                          lhs.triple.domain},
                         true, lhs.cost + rhs.cost + 1);
      }
    }
  }
  return cost;
}

std::map<FactKey, int> drop_base(std::map<FactKey, int> cost, const KnowledgeBase& kb) {
  for (const auto& t : kb.dump()) cost.erase(key_of(t, true));
  return cost;
}

}  // namespace

std::map<FactKey, int> naive_closure(const KnowledgeBase& kb,
                                     const std::vector<DerivedFact>& imported, int max_depth) {
  return drop_base(relax_all(kb, imported, max_depth), kb);
}

bool naive_truncated(const KnowledgeBase& kb, const std::vector<DerivedFact>& imported,
                     int max_depth) {
  auto capped = naive_closure(kb, imported, max_depth);
  auto full = drop_base(relax_all(kb, imported, 1 << 20), kb);
  return full.size() > capped.size();
}

RandomKb make_random_kb(uint64_t seed, std::size_t max_triples) {
  calibench::stats::Rng rng(seed);
  RandomKb out;

  std::vector<std::string> entities;
  std::size_t n_entities = 6 + rng.below(4);
  for (std::size_t i = 0; i < n_entities; ++i) entities.push_back("e" + std::to_string(i));

  std::vector<Domain> domains;
  std::size_t n_domains = 1 + rng.below(3);
  for (std::size_t i = 0; i < n_domains; ++i) domains.push_back(rng.pick(calibench::all_domains()));

  std::vector<std::string> pool;
  std::size_t n_preds = 3 + rng.below(3);
  for (std::size_t i = 0; i < n_preds; ++i) pool.push_back("p" + std::to_string(i));
  for (const auto& name : pool) {
    PredicateMeta meta;
    meta.name = name;
    meta.transitive = rng.bernoulli(0.45);
    meta.symmetric = rng.bernoulli(0.25);
    if (rng.bernoulli(0.35)) {
      // Negation sometimes lands on a pool predicate: the derived false fact
      // then shares its triple shape with true facts of that predicate.
      meta.negation_form = rng.bernoulli(0.5) ? rng.pick(pool) : "not_" + name;
    }
    if (rng.bernoulli(0.45)) {
      // Inverses that point back into the pool chain derivations further.
      meta.inverse_form = rng.bernoulli(0.6) ? rng.pick(pool) : "v_" + name;
    }
    out.kb.register_predicate(meta);
  }

  std::size_t n_triples = 5 + rng.below(max_triples - 4);
  for (std::size_t i = 0; i < n_triples; ++i) {
    KnowledgeTriple t;
    t.subject = rng.pick(entities);
    t.object = rng.pick(entities);
    t.predicate = rng.pick(pool);
    t.domain = rng.pick(domains);
    out.kb.add(std::move(t));
  }

  if (rng.bernoulli(0.5)) {
    std::size_t n_imported = 1 + rng.below(4);
    for (std::size_t i = 0; i < n_imported; ++i) {
      DerivedFact f;
      if (!out.kb.dump().empty() && rng.bernoulli(0.3)) {
        f.triple = rng.pick(out.kb.dump());  // collides with a base triple
      } else {
        f.triple.subject = rng.pick(entities);
        f.triple.object = rng.pick(entities);
        f.triple.predicate = rng.bernoulli(0.5) ? rng.pick(pool) : "t" + std::to_string(i);
        f.triple.domain = rng.pick(domains);
      }
      f.truth = rng.bernoulli(0.7);
      f.type = calibench::ReasoningType::Temporal;
      f.depth = 0;
      f.evidence = {f.triple};
      out.imported.push_back(std::move(f));
    }
  }

  out.max_depth = 1 + static_cast<int>(rng.below(3));
  return out;
}

// ---------------------------------------------------------------------------
// Regression oracles

namespace {

using ld = long double;
using Matrix = std::vector<std::vector<ld>>;

Matrix xtx(const std::vector<std::vector<double>>& X) {
  std::size_t k = X.front().size();
  Matrix a(k, std::vector<ld>(k, 0.0L));
  for (const auto& row : X) {
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < k; ++j) a[i][j] += static_cast<ld>(row[i]) * row[j];
    }
  }
  return a;
}

/// Gauss-Jordan inverse with partial pivoting.
Matrix invert(Matrix a) {
  std::size_t k = a.size();
  Matrix inv(k, std::vector<ld>(k, 0.0L));
  for (std::size_t i = 0; i < k; ++i) inv[i][i] = 1.0L;
  for (std::size_t col = 0; col < k; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < k; ++r) {
      if (std::fabs(static_cast<double>(a[r][col])) >
          std::fabs(static_cast<double>(a[pivot][col]))) {
        pivot = r;
      }
    }
    if (a[pivot][col] == 0.0L) throw std::runtime_error("oracle: singular design");
    std::swap(a[pivot], a[col]);
    std::swap(inv[pivot], inv[col]);
    ld d = a[col][col];
    for (std::size_t j = 0; j < k; ++j) {
      a[col][j] /= d;
      inv[col][j] /= d;
    }
    for (std::size_t r = 0; r < k; ++r) {
      if (r == col) continue;
      ld m = a[r][col];
      if (m == 0.0L) continue;
      for (std::size_t j = 0; j < k; ++j) {
        a[r][j] -= m * a[col][j];
        inv[r][j] -= m * inv[col][j];
      }
    }
  }
  return inv;
}

std::vector<ld> coefficients(const std::vector<std::vector<double>>& X,
                             const std::vector<double>& y, const Matrix& bread) {
  std::size_t k = X.front().size();
  std::vector<ld> xty(k, 0.0L);
  for (std::size_t i = 0; i < X.size(); ++i) {
    for (std::size_t j = 0; j < k; ++j) xty[j] += static_cast<ld>(X[i][j]) * y[i];
  }
  std::vector<ld> beta(k, 0.0L);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) beta[i] += bread[i][j] * xty[j];
  }
  return beta;
}

std::vector<ld> residuals(const std::vector<std::vector<double>>& X,
                          const std::vector<double>& y, const std::vector<ld>& beta) {
  std::vector<ld> e(X.size(), 0.0L);
  for (std::size_t i = 0; i < X.size(); ++i) {
    ld fit = 0.0L;
    for (std::size_t j = 0; j < beta.size(); ++j) fit += static_cast<ld>(X[i][j]) * beta[j];
    e[i] = static_cast<ld>(y[i]) - fit;
  }
  return e;
}

Matrix cluster_meat(const std::vector<std::vector<double>>& X, const std::vector<ld>& e,
                    const std::vector<std::int64_t>& cluster) {
  std::size_t k = X.front().size();
  std::map<std::int64_t, std::vector<ld>> scores;
  for (std::size_t i = 0; i < X.size(); ++i) {
    auto& s = scores.try_emplace(cluster[i], std::vector<ld>(k, 0.0L)).first->second;
    for (std::size_t j = 0; j < k; ++j) s[j] += static_cast<ld>(X[i][j]) * e[i];
  }
  Matrix meat(k, std::vector<ld>(k, 0.0L));
  for (const auto& [id, s] : scores) {
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < k; ++j) meat[i][j] += s[i] * s[j];
    }
  }
  return meat;
}

BruteFit sandwich(const std::vector<std::vector<double>>& X, const std::vector<double>& y,
                  const Matrix& meat_matrix) {
  Matrix bread = invert(xtx(X));
  std::vector<ld> beta = coefficients(X, y, bread);
  std::size_t k = bread.size();
  Matrix v(k, std::vector<ld>(k, 0.0L));
  // v = bread * meat * bread
  Matrix tmp(k, std::vector<ld>(k, 0.0L));
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      for (std::size_t m = 0; m < k; ++m) tmp[i][j] += bread[i][m] * meat_matrix[m][j];
    }
  }
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      for (std::size_t m = 0; m < k; ++m) v[i][j] += tmp[i][m] * bread[m][j];
    }
  }
  BruteFit out;
  out.coef.assign(beta.begin(), beta.end());
  out.vcov.assign(k, std::vector<double>(k, 0.0));
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) out.vcov[i][j] = static_cast<double>(v[i][j]);
  }
  return out;
}

}  // namespace

BruteFit brute_hc0(const std::vector<std::vector<double>>& X, const std::vector<double>& y) {
  Matrix bread = invert(xtx(X));
  std::vector<ld> beta = coefficients(X, y, bread);
  std::vector<ld> e = residuals(X, y, beta);
  std::size_t k = X.front().size();
  Matrix meat(k, std::vector<ld>(k, 0.0L));
  for (std::size_t i = 0; i < X.size(); ++i) {
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t b = 0; b < k; ++b) {
        meat[a][b] += static_cast<ld>(X[i][a]) * X[i][b] * e[i] * e[i];
      }
    }
  }
  return sandwich(X, y, meat);
}

BruteFit brute_cluster(const std::vector<std::vector<double>>& X, const std::vector<double>& y,
                       const std::vector<std::int64_t>& cluster) {
  Matrix bread = invert(xtx(X));
  std::vector<ld> beta = coefficients(X, y, bread);
  std::vector<ld> e = residuals(X, y, beta);
  return sandwich(X, y, cluster_meat(X, e, cluster));
}

BruteFit brute_cluster2(const std::vector<std::vector<double>>& X, const std::vector<double>& y,
                        const std::vector<std::int64_t>& c1,
                        const std::vector<std::int64_t>& c2) {
  Matrix bread = invert(xtx(X));
  std::vector<ld> beta = coefficients(X, y, bread);
  std::vector<ld> e = residuals(X, y, beta);

  // Intersection ids: one id per distinct (c1, c2) pair.
  std::map<std::pair<std::int64_t, std::int64_t>, std::int64_t> pairs;
  std::vector<std::int64_t> c12(X.size());
  for (std::size_t i = 0; i < X.size(); ++i) {
    auto key = std::make_pair(c1[i], c2[i]);
    auto it = pairs.find(key);
    if (it == pairs.end()) it = pairs.emplace(key, static_cast<std::int64_t>(pairs.size())).first;
    c12[i] = it->second;
  }

  Matrix m1 = cluster_meat(X, e, c1);
  Matrix m2 = cluster_meat(X, e, c2);
  Matrix m12 = cluster_meat(X, e, c12);
  std::size_t k = X.front().size();
  Matrix meat(k, std::vector<ld>(k, 0.0L));
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) meat[i][j] = m1[i][j] + m2[i][j] - m12[i][j];
  }
  return sandwich(X, y, meat);
}

// ---------------------------------------------------------------------------
// Calibration fixtures

std::vector<calibench::ScoredRecord> scored_fixture(std::size_t n, std::size_t n_correct,
                                                    double confidence) {
  std::vector<calibench::ScoredRecord> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    calibench::ScoredRecord r;
    r.question_id = "q" + std::to_string(i);
    r.model = "fixture";
    r.truth = true;
    r.answer = i < n_correct ? calibench::Answer::Yes : calibench::Answer::No;
    r.correct = i < n_correct;
    r.confidence = confidence;
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Scale knowledge base

ScaleKbPaths write_scale_kb(const std::filesystem::path& dir, std::size_t per_cell) {
  std::filesystem::create_directories(dir);
  ScaleKbPaths paths{(dir / "predicates.json").string(), (dir / "triples.txt").string(),
                     (dir / "temporal.jsonl").string()};

  nlohmann::json manifest;
  manifest["predicates"] = nlohmann::json::array();
  std::ofstream triples(paths.triples);
  std::ofstream temporal(paths.imported);
  if (!triples || !temporal) throw std::runtime_error("cannot write scale kb files");

  // Chain with n nodes: gap-2 spans (depth 1) count n-2, deeper spans within
  // the depth-3 cap (gaps 3 and 4) count 2n-7 together.
  std::size_t nodes = std::max(per_cell + 2, (per_cell + 9) / 2);

  const auto& domains = calibench::all_domains();
  for (std::size_t di = 0; di < domains.size(); ++di) {
    std::string dom = calibench::to_string(domains[di]);
    std::string tag = "d" + std::to_string(di);
    std::string chain_pred = "linked_to_" + tag;
    std::string inv_pred = "holds_" + tag;
    std::string neg_pred = "lacks_" + tag;
    std::string time_pred = "active_in_" + tag;

    manifest["predicates"].push_back({{"name", chain_pred}, {"transitive", true}});
    manifest["predicates"].push_back({{"name", inv_pred}, {"inverse_form", "held_by_" + tag}});
    manifest["predicates"].push_back({{"name", neg_pred}, {"negation_form", "has_" + tag}});
    manifest["predicates"].push_back({{"name", time_pred}});

    for (std::size_t i = 0; i + 1 < nodes; ++i) {
      triples << tag << "x" << i << "|" << chain_pred << "|" << tag << "x" << (i + 1) << "|"
              << dom << "\n";
    }
    for (std::size_t i = 0; i < per_cell; ++i) {
      triples << tag << "owner" << i << "|" << inv_pred << "|" << tag << "item" << i << "|" << dom
              << "\n";
      triples << tag << "case" << i << "|" << neg_pred << "|" << tag << "trait" << i << "|" << dom
              << "\n";
      nlohmann::json fact{{"subject", tag + "event" + std::to_string(i)},
                          {"predicate", time_pred},
                          {"object", tag + "era" + std::to_string(i)},
                          {"domain", dom},
                          {"truth", i % 2 == 0},
                          {"type", "Temporal"}};
      temporal << fact.dump() << "\n";
    }
  }

  std::ofstream preds(paths.predicates);
  if (!preds) throw std::runtime_error("cannot write scale kb manifest");
  preds << manifest.dump(2) << "\n";
  return paths;
}

}  // namespace support
