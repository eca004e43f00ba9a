#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "devrec/ingest.hpp"

namespace devrec {

struct OntClass {
  ConceptId id;
  std::string label;
  std::optional<ConceptId> parent;
};

struct OntInstance {
  std::string id;
  ConceptId class_id;
  std::vector<std::string> surface_forms;
};

struct RuleRequirement {
  ConceptId class_id;
  int min_count = 1;
};

/// Conjunctive presence rule: when every required class is matched at least
/// `min_count` times (instances of subclasses count), `conclude` is added.
struct AnnotationRule {
  std::string id;
  std::vector<RuleRequirement> require;
  ConceptId conclude;
};

struct InstanceMatch {
  std::string instance_id;
  ConceptId class_id;
  std::size_t start = 0;  ///< first token, inclusive
  std::size_t end = 0;    ///< last token, inclusive

  bool operator==(const InstanceMatch&) const = default;
};

/// Similarity assigned to concepts that live in different trees.
inline constexpr double kDisjointSimilarity = 0.05;

/// Immutable class forest + instances + rules. Construct through
/// `Ontology::from_json` / `load_ontology`, which validate every invariant.
class Ontology {
 public:
  Ontology() = default;

  static Ontology from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;

  const std::vector<OntClass>& classes() const noexcept { return classes_; }
  const std::vector<OntInstance>& instances() const noexcept { return instances_; }
  const std::vector<AnnotationRule>& rules() const noexcept { return rules_; }

  bool contains(std::string_view concept_id) const;
  const OntClass& get_class(std::string_view concept_id) const;
  const OntInstance* find_instance(std::string_view instance_id) const;

  /// Root depth is 1. Throws `UnknownConcept`.
  int depth(std::string_view concept_id) const;
  /// Throws `UnknownConcept`.
  bool is_a(std::string_view concept_id, std::string_view ancestor_id) const;

  /// Longest-match-first, left-to-right, non-overlapping. When two
  /// instances share a surface form the smaller instance id wins.
  std::vector<InstanceMatch> match_instances(const std::vector<std::string>& tokens) const;

  /// Matched classes plus the conclusion of every satisfied rule.
  ConceptSet apply_rules(const std::vector<InstanceMatch>& matches) const;

  /// Wu-Palmer: 2 depth(lca) / (depth(a) + depth(b)); `kDisjointSimilarity`
  /// across trees.
  double concept_similarity(std::string_view a, std::string_view b) const;

  /// Tokenized surface forms of an instance, cached at load.
  const std::vector<std::vector<std::string>>& surface_tokens(std::string_view instance_id) const;

 private:
  struct FormEntry {
    std::vector<std::string> tokens;
    std::size_t instance = 0;
  };

  std::size_t class_index(std::string_view concept_id) const;
  void validate_and_index();

  std::vector<OntClass> classes_;
  std::vector<OntInstance> instances_;
  std::vector<AnnotationRule> rules_;

  std::map<std::string, std::size_t, std::less<>> class_by_id_;
  std::map<std::string, std::size_t, std::less<>> instance_by_id_;
  std::vector<int> depth_;
  std::vector<std::optional<std::size_t>> parent_;
  std::vector<std::vector<std::vector<std::string>>> instance_forms_;
  // First token -> forms starting with it, longest first then instance id.
  std::map<std::string, std::vector<FormEntry>, std::less<>> forms_by_head_;
};

Ontology load_ontology(const std::string& path);

/// `annotate` leaves every field but `concepts` untouched.
Artifact annotate(Artifact artifact, const Ontology& ontology);

}  // namespace devrec
