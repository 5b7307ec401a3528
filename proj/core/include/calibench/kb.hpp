#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace calibench {

/// The ten knowledge domains questions are drawn from.
enum class Domain {
  Culture,
  Geography,
  Health,
  History,
  Math,
  Nature,
  People,
  Religion,
  Society,
  Technology,
};

const std::vector<Domain>& all_domains();
std::string to_string(Domain d);
std::optional<Domain> parse_domain(const std::string& name);

struct KnowledgeTriple {
  std::string subject;
  std::string predicate;
  std::string object;
  Domain domain = Domain::Culture;

  auto operator<=>(const KnowledgeTriple&) const = default;
};

/// Rule hooks and rendering metadata for one predicate. Loaded from a
/// manifest file; predicates without an entry get a bare one (no rule flags).
struct PredicateMeta {
  std::string name;
  std::optional<std::string> negation_form;
  std::optional<std::string> inverse_form;
  bool symmetric = false;
  bool transitive = false;
  /// Question surface form; when absent, underscores in the name become spaces.
  std::optional<std::string> surface;
};

struct ImportRejection {
  std::size_t line = 0;
  std::string reason;
};

struct ImportReport {
  std::size_t lines_read = 0;
  std::size_t kept = 0;
  std::size_t duplicates = 0;
  std::vector<ImportRejection> rejected;
  /// Predicates seen in the data but missing from the manifest; a bare
  /// PredicateMeta is registered for each.
  std::vector<std::string> auto_registered;
};

class KnowledgeBase {
 public:
  /// Adds a triple after normalization. Returns false for duplicates.
  bool add(KnowledgeTriple t);

  void register_predicate(PredicateMeta meta);
  bool has_predicate(const std::string& name) const;
  const PredicateMeta& predicate(const std::string& name) const;
  const std::map<std::string, PredicateMeta>& predicates() const { return predicates_; }

  /// Indexed lookup; at least one field must be bound. Full scans must go
  /// through dump() instead.
  std::vector<const KnowledgeTriple*> lookup(
      const std::optional<std::string>& subject,
      const std::optional<std::string>& predicate,
      const std::optional<std::string>& object) const;

  const std::vector<KnowledgeTriple>& dump() const { return triples_; }
  std::size_t size() const { return triples_.size(); }

 private:
  std::vector<std::size_t> lookup_indices(const KnowledgeTriple& t) const;

  std::vector<KnowledgeTriple> triples_;
  std::map<std::string, std::vector<std::size_t>> by_subject_;
  std::map<std::string, std::vector<std::size_t>> by_predicate_;
  std::map<std::string, std::vector<std::size_t>> by_object_;
  std::map<std::string, PredicateMeta> predicates_;
};

/// Field normalization applied on import: trim plus collapse of internal
/// whitespace runs. Case is preserved.
std::string normalize_field(const std::string& raw);

/// Loads a predicate manifest (JSON). Also registers bare entries for any
/// negation/inverse forms that lack one, so derived facts stay renderable.
void load_predicate_manifest(KnowledgeBase& kb, const std::string& path);

/// Imports pipe-separated triples (`subject | predicate | object | domain`).
/// Records with fewer than 3 fields or empty fields are rejected with their
/// line number; an unknown domain tag is a hard DataError. Records with
/// 3 fields require default_domain.
ImportReport import_triples(KnowledgeBase& kb, std::istream& in,
                            std::optional<Domain> default_domain = std::nullopt);
ImportReport import_triples_file(KnowledgeBase& kb, const std::string& path,
                                 std::optional<Domain> default_domain = std::nullopt);

void save_kb(const KnowledgeBase& kb, const std::string& path);
KnowledgeBase load_kb(const std::string& path);

}  // namespace calibench
