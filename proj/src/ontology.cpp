#include "devrec/ontology.hpp"

#include <algorithm>
#include <set>

#include "devrec/error.hpp"
#include "devrec/text.hpp"

namespace devrec {

namespace {

std::string required_string(const nlohmann::json& obj, const char* key, std::string_view where) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string() || it->get<std::string>().empty()) {
    throw Error(ErrorCode::ParseError, std::string(where) + ": missing string field '" + key + "'");
  }
  return it->get<std::string>();
}

const nlohmann::json& array_field(const nlohmann::json& doc, const char* key) {
  auto it = doc.find(key);
  if (it == doc.end()) throw Error(ErrorCode::ParseError, std::string("missing '") + key + "' array");
  if (!it->is_array()) throw Error(ErrorCode::ParseError, std::string("'") + key + "' must be an array");
  return *it;
}

}  // namespace

Ontology Ontology::from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw Error(ErrorCode::ParseError, "ontology document must be an object");
  Ontology o;
  const auto& classes = array_field(doc, "classes");
  for (std::size_t i = 0; i < classes.size(); ++i) {
    const auto& c = classes[i];
    const auto where = "classes[" + std::to_string(i) + "]";
    if (!c.is_object()) throw Error(ErrorCode::ParseError, where + " is not an object");
    OntClass cls;
    cls.id = required_string(c, "id", where);
    cls.label = c.value("label", cls.id);
    if (auto p = c.find("parent"); p != c.end() && !p->is_null()) {
      if (!p->is_string()) throw Error(ErrorCode::ParseError, cls.id + ": parent must be a string");
      cls.parent = p->get<std::string>();
    }
    o.classes_.push_back(std::move(cls));
  }
  const auto& instances = array_field(doc, "instances");
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto& in = instances[i];
    const auto where = "instances[" + std::to_string(i) + "]";
    if (!in.is_object()) throw Error(ErrorCode::ParseError, where + " is not an object");
    OntInstance inst;
    inst.id = required_string(in, "id", where);
    inst.class_id = required_string(in, "class", inst.id);
    auto forms = in.find("surface_forms");
    if (forms == in.end() || !forms->is_array() || forms->empty()) {
      throw Error(ErrorCode::ParseError, inst.id + ": surface_forms must be a non-empty array");
    }
    for (const auto& f : *forms) {
      if (!f.is_string()) throw Error(ErrorCode::ParseError, inst.id + ": surface form must be a string");
      inst.surface_forms.push_back(f.get<std::string>());
    }
    o.instances_.push_back(std::move(inst));
  }
  const auto& rules = array_field(doc, "rules");
  for (std::size_t i = 0; i < rules.size(); ++i) {
    const auto& r = rules[i];
    const auto where = "rules[" + std::to_string(i) + "]";
    if (!r.is_object()) throw Error(ErrorCode::ParseError, where + " is not an object");
    AnnotationRule rule;
    rule.id = required_string(r, "id", where);
    rule.conclude = required_string(r, "conclude", rule.id);
    auto req = r.find("require");
    if (req == r.end() || !req->is_array() || req->empty()) {
      throw Error(ErrorCode::ParseError, rule.id + ": require must be a non-empty array");
    }
    for (const auto& q : *req) {
      if (!q.is_object()) throw Error(ErrorCode::ParseError, rule.id + ": requirement is not an object");
      RuleRequirement rr;
      rr.class_id = required_string(q, "class", rule.id);
      const auto min = q.value("min", 1);
      if (min < 1) throw Error(ErrorCode::ParseError, rule.id + ": min must be positive");
      rr.min_count = min;
      rule.require.push_back(std::move(rr));
    }
    o.rules_.push_back(std::move(rule));
  }
  o.validate_and_index();
  return o;
}

void Ontology::validate_and_index() {
  for (std::size_t i = 0; i < classes_.size(); ++i) {
    if (!class_by_id_.emplace(classes_[i].id, i).second) {
      throw Error(ErrorCode::DuplicateId, "class '" + classes_[i].id + "' defined twice");
    }
  }
  parent_.assign(classes_.size(), std::nullopt);
  for (std::size_t i = 0; i < classes_.size(); ++i) {
    if (!classes_[i].parent) continue;
    auto it = class_by_id_.find(*classes_[i].parent);
    if (it == class_by_id_.end()) {
      throw Error(ErrorCode::DanglingReference,
                  "class '" + classes_[i].id + "' has unknown parent '" + *classes_[i].parent + "'");
    }
    parent_[i] = it->second;
  }

  // Depth by walking parents; a walk longer than the class count is a cycle.
  depth_.assign(classes_.size(), 0);
  for (std::size_t i = 0; i < classes_.size(); ++i) {
    int d = 1;
    auto cur = parent_[i];
    while (cur) {
      if (*cur == i || d > static_cast<int>(classes_.size())) {
        throw Error(ErrorCode::CycleDetected, "class '" + classes_[i].id + "' is its own ancestor");
      }
      ++d;
      cur = parent_[*cur];
    }
    depth_[i] = d;
  }

  instance_forms_.clear();
  for (std::size_t i = 0; i < instances_.size(); ++i) {
    const auto& inst = instances_[i];
    if (!instance_by_id_.emplace(inst.id, i).second) {
      throw Error(ErrorCode::DuplicateId, "instance '" + inst.id + "' defined twice");
    }
    if (!class_by_id_.contains(inst.class_id)) {
      throw Error(ErrorCode::DanglingReference,
                  "instance '" + inst.id + "' refers to unknown class '" + inst.class_id + "'");
    }
    std::vector<std::vector<std::string>> forms;
    for (const auto& f : inst.surface_forms) {
      auto tokens = tokenize(f);
      if (tokens.empty()) {
        throw Error(ErrorCode::ParseError, "instance '" + inst.id + "': surface form '" + f + "' has no tokens");
      }
      forms.push_back(std::move(tokens));
    }
    instance_forms_.push_back(std::move(forms));
  }

  std::set<std::string, std::less<>> rule_ids;
  for (const auto& rule : rules_) {
    if (!rule_ids.insert(rule.id).second) {
      throw Error(ErrorCode::DuplicateId, "rule '" + rule.id + "' defined twice");
    }
    if (!class_by_id_.contains(rule.conclude)) {
      throw Error(ErrorCode::DanglingReference,
                  "rule '" + rule.id + "' concludes unknown concept '" + rule.conclude + "'");
    }
    std::set<std::string, std::less<>> seen;
    for (const auto& req : rule.require) {
      if (!class_by_id_.contains(req.class_id)) {
        throw Error(ErrorCode::DanglingReference,
                    "rule '" + rule.id + "' requires unknown class '" + req.class_id + "'");
      }
      if (!seen.insert(req.class_id).second) {
        throw Error(ErrorCode::DuplicateId, "rule '" + rule.id + "' requires '" + req.class_id + "' twice");
      }
      const bool populated = std::any_of(instances_.begin(), instances_.end(), [&](const OntInstance& inst) {
        return is_a(inst.class_id, req.class_id);
      });
      if (!populated) {
        throw Error(ErrorCode::DanglingReference, "rule '" + rule.id + "' requires class '" + req.class_id +
                                                      "' which has no instances");
      }
    }
  }

  forms_by_head_.clear();
  for (std::size_t i = 0; i < instances_.size(); ++i) {
    for (const auto& tokens : instance_forms_[i]) {
      forms_by_head_[tokens.front()].push_back(FormEntry{tokens, i});
    }
  }
  for (auto& [head, entries] : forms_by_head_) {
    std::sort(entries.begin(), entries.end(), [&](const FormEntry& a, const FormEntry& b) {
      if (a.tokens.size() != b.tokens.size()) return a.tokens.size() > b.tokens.size();
      return instances_[a.instance].id < instances_[b.instance].id;
    });
  }
}

nlohmann::json Ontology::to_json() const {
  nlohmann::json doc;
  doc["classes"] = nlohmann::json::array();
  for (const auto& c : classes_) {
    nlohmann::json j{{"id", c.id}, {"label", c.label}};
    if (c.parent) j["parent"] = *c.parent;
    doc["classes"].push_back(std::move(j));
  }
  doc["instances"] = nlohmann::json::array();
  for (const auto& i : instances_) {
    doc["instances"].push_back({{"id", i.id}, {"class", i.class_id}, {"surface_forms", i.surface_forms}});
  }
  doc["rules"] = nlohmann::json::array();
  for (const auto& r : rules_) {
    nlohmann::json req = nlohmann::json::array();
    for (const auto& q : r.require) req.push_back({{"class", q.class_id}, {"min", q.min_count}});
    doc["rules"].push_back({{"id", r.id}, {"require", std::move(req)}, {"conclude", r.conclude}});
  }
  return doc;
}

bool Ontology::contains(std::string_view concept_id) const { return class_by_id_.contains(concept_id); }

std::size_t Ontology::class_index(std::string_view concept_id) const {
  auto it = class_by_id_.find(concept_id);
  if (it == class_by_id_.end()) {
    throw Error(ErrorCode::UnknownConcept, "unknown concept '" + std::string(concept_id) + "'");
  }
  return it->second;
}

const OntClass& Ontology::get_class(std::string_view concept_id) const {
  return classes_[class_index(concept_id)];
}

const OntInstance* Ontology::find_instance(std::string_view instance_id) const {
  auto it = instance_by_id_.find(instance_id);
  return it == instance_by_id_.end() ? nullptr : &instances_[it->second];
}

const std::vector<std::vector<std::string>>& Ontology::surface_tokens(std::string_view instance_id) const {
  auto it = instance_by_id_.find(instance_id);
  if (it == instance_by_id_.end()) {
    throw Error(ErrorCode::UnknownConcept, "unknown instance '" + std::string(instance_id) + "'");
  }
  return instance_forms_[it->second];
}

int Ontology::depth(std::string_view concept_id) const { return depth_[class_index(concept_id)]; }

bool Ontology::is_a(std::string_view concept_id, std::string_view ancestor_id) const {
  const auto target = class_index(ancestor_id);
  std::optional<std::size_t> cur = class_index(concept_id);
  while (cur) {
    if (*cur == target) return true;
    cur = parent_[*cur];
  }
  return false;
}

std::vector<InstanceMatch> Ontology::match_instances(const std::vector<std::string>& tokens) const {
  std::vector<InstanceMatch> matches;
  std::size_t i = 0;
  while (i < tokens.size()) {
    const FormEntry* hit = nullptr;
    if (auto it = forms_by_head_.find(tokens[i]); it != forms_by_head_.end()) {
      for (const auto& entry : it->second) {
        const auto n = entry.tokens.size();
        if (i + n <= tokens.size() && std::equal(entry.tokens.begin(), entry.tokens.end(), tokens.begin() + i)) {
          hit = &entry;
          break;
        }
      }
    }
    if (!hit) {
      ++i;
      continue;
    }
    const auto& inst = instances_[hit->instance];
    matches.push_back(InstanceMatch{inst.id, inst.class_id, i, i + hit->tokens.size() - 1});
    i += hit->tokens.size();
  }
  return matches;
}

ConceptSet Ontology::apply_rules(const std::vector<InstanceMatch>& matches) const {
  ConceptSet concepts;
  std::map<std::string, int, std::less<>> per_class;
  for (const auto& m : matches) {
    concepts.insert(m.class_id);
    ++per_class[m.class_id];
  }
  for (const auto& rule : rules_) {
    const bool fires = std::all_of(rule.require.begin(), rule.require.end(), [&](const RuleRequirement& req) {
      int count = 0;
      for (const auto& [cls, n] : per_class) {
        if (is_a(cls, req.class_id)) count += n;
      }
      return count >= req.min_count;
    });
    if (fires) concepts.insert(rule.conclude);
  }
  return concepts;
}

double Ontology::concept_similarity(std::string_view a, std::string_view b) const {
  const auto ia = class_index(a);
  const auto ib = class_index(b);
  if (ia == ib) return 1.0;
  std::vector<std::size_t> chain_a;
  for (std::optional<std::size_t> cur = ia; cur; cur = parent_[*cur]) chain_a.push_back(*cur);
  for (std::optional<std::size_t> cur = ib; cur; cur = parent_[*cur]) {
    if (std::find(chain_a.begin(), chain_a.end(), *cur) != chain_a.end()) {
      return 2.0 * depth_[*cur] / static_cast<double>(depth_[ia] + depth_[ib]);
    }
  }
  return kDisjointSimilarity;
}

Ontology load_ontology(const std::string& path) {
  const auto text = read_file(path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::ParseError, path + ": " + e.what());
  }
  return Ontology::from_json(doc);
}

Artifact annotate(Artifact artifact, const Ontology& ontology) {
  auto tokens = tokenize(artifact.title);
  auto body = tokenize(artifact.body);
  tokens.insert(tokens.end(), std::make_move_iterator(body.begin()), std::make_move_iterator(body.end()));
  artifact.concepts = ontology.apply_rules(ontology.match_instances(tokens));
  return artifact;
}

}  // namespace devrec
