#include "devrec/profile.hpp"

#include <algorithm>
#include <cmath>

#include "devrec/error.hpp"
#include "devrec/ontology.hpp"

namespace devrec {

namespace {

std::string_view to_string(AppMethod m) {
  switch (m) {
    case AppMethod::Native: return "native";
    case AppMethod::Hybrid: return "hybrid";
    case AppMethod::Cross: return "cross";
  }
  return "native";
}

AppMethod parse_app_method(std::string_view name) {
  if (name == "native") return AppMethod::Native;
  if (name == "hybrid") return AppMethod::Hybrid;
  if (name == "cross" || name == "cross-platform") return AppMethod::Cross;
  throw Error(ErrorCode::InvalidField, "unknown app method '" + std::string(name) + "'");
}

// Looks a form field up under its dimension first, then at top level.
const nlohmann::json* form_field(const nlohmann::json& form, const char* dimension, const char* key) {
  if (auto dim = form.find(dimension); dim != form.end() && dim->is_object()) {
    if (auto it = dim->find(key); it != dim->end() && !it->is_null()) return &*it;
  }
  if (auto it = form.find(key); it != form.end() && !it->is_null()) return &*it;
  return nullptr;
}

template <typename Container>
Container string_collection(const nlohmann::json* v, const char* key) {
  Container out;
  if (!v) return out;
  auto push = [&](const nlohmann::json& e) {
    if (!e.is_string()) throw Error(ErrorCode::InvalidField, std::string(key) + " entries must be strings");
    out.insert(out.end(), e.get<std::string>());
  };
  if (v->is_string()) {
    push(*v);
  } else if (v->is_array()) {
    for (const auto& e : *v) push(e);
  } else {
    throw Error(ErrorCode::InvalidField, std::string(key) + " must be a string or an array of strings");
  }
  return out;
}

std::optional<int> non_negative_int(const nlohmann::json* v, const char* key) {
  if (!v) return std::nullopt;
  if (!v->is_number_integer()) throw Error(ErrorCode::InvalidField, std::string(key) + " must be an integer");
  const auto value = v->get<long long>();
  if (value < 0 || value > 1000) {
    throw Error(ErrorCode::InvalidField, std::string(key) + " out of range: " + std::to_string(value));
  }
  return static_cast<int>(value);
}

std::optional<std::string> optional_text(const nlohmann::json* v, const char* key) {
  if (!v) return std::nullopt;
  if (!v->is_string()) throw Error(ErrorCode::InvalidField, std::string(key) + " must be a string");
  return v->get<std::string>();
}

bool flag(const nlohmann::json* v, const char* key, bool fallback) {
  if (!v) return fallback;
  if (!v->is_boolean()) throw Error(ErrorCode::InvalidField, std::string(key) + " must be a boolean");
  return v->get<bool>();
}

nlohmann::json optional_json(const auto& opt) {
  return opt ? nlohmann::json(*opt) : nlohmann::json(nullptr);
}

template <typename T>
std::optional<T> optional_from(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<T>();
}

Timestamp timestamp_field(const nlohmann::json& j, const char* key) {
  const auto text = j.at(key).get<std::string>();
  const auto ts = parse_timestamp(text);
  if (!ts) throw Error(ErrorCode::InvalidField, std::string(key) + ": bad timestamp '" + text + "'");
  return *ts;
}

}  // namespace

std::optional<FeedbackSignal> parse_feedback_signal(std::string_view name) {
  if (name == "relevant") return FeedbackSignal::Relevant;
  if (name == "not_relevant") return FeedbackSignal::NotRelevant;
  return std::nullopt;
}

std::string_view to_string(FeedbackSignal signal) {
  return signal == FeedbackSignal::Relevant ? "relevant" : "not_relevant";
}

void to_json(nlohmann::json& j, const UserProfile& p) {
  nlohmann::json methods = nlohmann::json::array();
  for (auto m : p.domain_of_interest.app_methods) methods.push_back(to_string(m));
  nlohmann::json interests = nlohmann::json::object();
  for (const auto& [concept_id, w] : p.interests) {
    interests[concept_id] = {{"weight", w.weight}, {"last_updated", format_timestamp(w.last_updated)}};
  }
  nlohmann::json feedback = nlohmann::json::array();
  for (const auto& e : p.feedback) {
    feedback.push_back({{"artifact_id", e.artifact_id},
                        {"signal", to_string(e.signal)},
                        {"at", format_timestamp(e.at)}});
  }
  j = {
      {"user_id", p.user_id},
      {"personal",
       {{"age", optional_json(p.personal.age)},
        {"location", optional_json(p.personal.location)},
        {"job_title", optional_json(p.personal.job_title)},
        {"years_experience", optional_json(p.personal.years_experience)},
        {"social_ids", p.personal.social_ids}}},
      {"domain_of_interest",
       {{"dev_domains", p.domain_of_interest.dev_domains},
        {"app_methods", methods},
        {"methodologies", p.domain_of_interest.methodologies},
        {"repo_hosts", p.domain_of_interest.repo_hosts},
        {"languages", p.domain_of_interest.languages},
        {"ides", p.domain_of_interest.ides}}},
      {"software_project",
       {{"requirements", p.software_project.requirements},
        {"modeling", p.software_project.modeling},
        {"paradigm", p.software_project.paradigm},
        {"frontend_tools", p.software_project.frontend_tools},
        {"backend_tools", p.software_project.backend_tools}}},
      {"dev_environment",
       {{"infrastructure", p.dev_environment.infrastructure},
        {"backend_servers", p.dev_environment.backend_servers},
        {"testing_tools", p.dev_environment.testing_tools},
        {"debugging_tools", p.dev_environment.debugging_tools}}},
      {"security", {{"pseudonymous", true}, {"share_social", p.security.share_social}}},
      {"interests", interests},
      {"delivery", {{"default_k", p.delivery.default_k}, {"strict_filter", p.delivery.strict_filter}}},
      {"quality", {{"last_eval", optional_json(p.quality.last_eval)}}},
      {"feedback", feedback},
      {"updated_at", format_timestamp(p.updated_at)},
  };
}

void from_json(const nlohmann::json& j, UserProfile& p) {
  p = UserProfile{};
  p.user_id = j.at("user_id").get<std::string>();
  const auto& personal = j.at("personal");
  p.personal.age = optional_from<int>(personal, "age");
  p.personal.location = optional_from<std::string>(personal, "location");
  p.personal.job_title = optional_from<std::string>(personal, "job_title");
  p.personal.years_experience = optional_from<int>(personal, "years_experience");
  p.personal.social_ids = personal.value("social_ids", std::vector<std::string>{});

  const auto& doi = j.at("domain_of_interest");
  p.domain_of_interest.dev_domains = doi.value("dev_domains", std::set<std::string>{});
  for (const auto& m : doi.value("app_methods", std::vector<std::string>{})) {
    p.domain_of_interest.app_methods.insert(parse_app_method(m));
  }
  p.domain_of_interest.methodologies = doi.value("methodologies", std::set<std::string>{});
  p.domain_of_interest.repo_hosts = doi.value("repo_hosts", std::set<std::string>{});
  p.domain_of_interest.languages = doi.value("languages", std::set<std::string>{});
  p.domain_of_interest.ides = doi.value("ides", std::set<std::string>{});

  const auto& sp = j.at("software_project");
  p.software_project.requirements = sp.value("requirements", std::vector<std::string>{});
  p.software_project.modeling = sp.value("modeling", std::set<std::string>{});
  p.software_project.paradigm = sp.value("paradigm", std::set<std::string>{});
  p.software_project.frontend_tools = sp.value("frontend_tools", std::set<std::string>{});
  p.software_project.backend_tools = sp.value("backend_tools", std::set<std::string>{});

  const auto& env = j.at("dev_environment");
  p.dev_environment.infrastructure = env.value("infrastructure", std::set<std::string>{});
  p.dev_environment.backend_servers = env.value("backend_servers", std::set<std::string>{});
  p.dev_environment.testing_tools = env.value("testing_tools", std::set<std::string>{});
  p.dev_environment.debugging_tools = env.value("debugging_tools", std::set<std::string>{});

  p.security.pseudonymous = true;
  p.security.share_social = j.at("security").value("share_social", false);

  for (const auto& [concept_id, w] : j.at("interests").items()) {
    p.interests[concept_id] = InterestWeight{w.at("weight").get<double>(), timestamp_field(w, "last_updated")};
  }
  const auto& delivery = j.at("delivery");
  p.delivery.default_k = delivery.value("default_k", 10);
  p.delivery.strict_filter = delivery.value("strict_filter", false);
  p.quality.last_eval = optional_from<std::map<std::string, double>>(j.at("quality"), "last_eval");
  for (const auto& e : j.value("feedback", nlohmann::json::array())) {
    FeedbackEvent ev;
    ev.user_id = p.user_id;
    ev.artifact_id = e.at("artifact_id").get<std::string>();
    const auto signal = parse_feedback_signal(e.at("signal").get<std::string>());
    if (!signal) throw Error(ErrorCode::InvalidField, "bad feedback signal in profile " + p.user_id);
    ev.signal = *signal;
    ev.at = timestamp_field(e, "at");
    p.feedback.push_back(std::move(ev));
  }
  p.updated_at = timestamp_field(j, "updated_at");
}

void validate_user_id(std::string_view user_id) {
  const bool ok = !user_id.empty() && user_id.size() <= 128 && user_id.front() != '.' &&
                  std::all_of(user_id.begin(), user_id.end(), [](char c) {
                    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                           c == '_' || c == '-' || c == '.';
                  });
  if (!ok) throw Error(ErrorCode::InvalidField, "invalid user id '" + std::string(user_id) + "'");
}

UserProfile create_profile(const nlohmann::json& form, Timestamp now) {
  if (!form.is_object()) throw Error(ErrorCode::InvalidField, "profile form must be a JSON object");
  UserProfile p;
  const nlohmann::json* uid = nullptr;
  for (const char* key : {"user_id", "user"}) {
    if (auto it = form.find(key); it != form.end() && it->is_string()) {
      uid = &*it;
      break;
    }
  }
  if (!uid) throw Error(ErrorCode::InvalidField, "form needs a user_id");
  p.user_id = uid->get<std::string>();
  validate_user_id(p.user_id);

  p.personal.age = non_negative_int(form_field(form, "personal", "age"), "age");
  p.personal.location = optional_text(form_field(form, "personal", "location"), "location");
  p.personal.job_title = optional_text(form_field(form, "personal", "job_title"), "job_title");
  p.personal.years_experience =
      non_negative_int(form_field(form, "personal", "years_experience"), "years_experience");
  p.personal.social_ids =
      string_collection<std::vector<std::string>>(form_field(form, "personal", "social_ids"), "social_ids");

  auto& doi = p.domain_of_interest;
  constexpr const char* kDoi = "domain_of_interest";
  doi.dev_domains = string_collection<std::set<std::string>>(form_field(form, kDoi, "dev_domains"), "dev_domains");
  for (const auto& m : string_collection<std::vector<std::string>>(form_field(form, kDoi, "app_methods"),
                                                                   "app_methods")) {
    doi.app_methods.insert(parse_app_method(m));
  }
  doi.methodologies =
      string_collection<std::set<std::string>>(form_field(form, kDoi, "methodologies"), "methodologies");
  doi.repo_hosts = string_collection<std::set<std::string>>(form_field(form, kDoi, "repo_hosts"), "repo_hosts");
  doi.languages = string_collection<std::set<std::string>>(form_field(form, kDoi, "languages"), "languages");
  doi.ides = string_collection<std::set<std::string>>(form_field(form, kDoi, "ides"), "ides");

  auto& sp = p.software_project;
  constexpr const char* kSp = "software_project";
  sp.requirements =
      string_collection<std::vector<std::string>>(form_field(form, kSp, "requirements"), "requirements");
  sp.modeling = string_collection<std::set<std::string>>(form_field(form, kSp, "modeling"), "modeling");
  sp.paradigm = string_collection<std::set<std::string>>(form_field(form, kSp, "paradigm"), "paradigm");
  sp.frontend_tools =
      string_collection<std::set<std::string>>(form_field(form, kSp, "frontend_tools"), "frontend_tools");
  sp.backend_tools =
      string_collection<std::set<std::string>>(form_field(form, kSp, "backend_tools"), "backend_tools");

  auto& env = p.dev_environment;
  constexpr const char* kEnv = "dev_environment";
  env.infrastructure =
      string_collection<std::set<std::string>>(form_field(form, kEnv, "infrastructure"), "infrastructure");
  env.backend_servers =
      string_collection<std::set<std::string>>(form_field(form, kEnv, "backend_servers"), "backend_servers");
  env.testing_tools =
      string_collection<std::set<std::string>>(form_field(form, kEnv, "testing_tools"), "testing_tools");
  env.debugging_tools =
      string_collection<std::set<std::string>>(form_field(form, kEnv, "debugging_tools"), "debugging_tools");

  p.security.share_social = flag(form_field(form, "security", "share_social"), "share_social", false);

  if (const auto* k = form_field(form, "delivery", "default_k")) {
    if (!k->is_number_integer() || k->get<long long>() < 1) {
      throw Error(ErrorCode::InvalidField, "default_k must be a positive integer");
    }
    p.delivery.default_k = k->get<int>();
  }
  p.delivery.strict_filter = flag(form_field(form, "delivery", "strict_filter"), "strict_filter", false);

  for (const auto& c : string_collection<std::set<std::string>>(form_field(form, "interests", "interest_concepts"),
                                                                "interest_concepts")) {
    p.interests[c] = InterestWeight{1.0, now};
  }
  p.updated_at = now;
  return p;
}

UserProfile apply_decay(UserProfile profile, Timestamp now, double half_life_days) {
  if (!(half_life_days > 0.0)) throw Error(ErrorCode::InvalidField, "half-life must be positive");
  for (const auto& [concept_id, w] : profile.interests) {
    if (now < w.last_updated) {
      throw Error(ErrorCode::ClockSkew, "decay time " + format_timestamp(now) + " precedes last update of " +
                                            concept_id + " at " + format_timestamp(w.last_updated));
    }
  }
  for (auto it = profile.interests.begin(); it != profile.interests.end();) {
    auto& w = it->second;
    const double days = days_between(w.last_updated, now);
    w.weight *= std::exp2(-days / half_life_days);
    w.last_updated = now;
    if (w.weight < kPruneThreshold) {
      it = profile.interests.erase(it);
    } else {
      ++it;
    }
  }
  profile.updated_at = std::max(profile.updated_at, now);
  return profile;
}

UserProfile ingest_posts(UserProfile profile, const std::vector<Artifact>& posts, const Ontology& ontology,
                         Timestamp now, const ProfileConfig& config) {
  profile = apply_decay(std::move(profile), now, config.half_life_days);
  for (const auto& post : posts) {
    for (const auto& c : annotate(post, ontology).concepts) {
      auto& w = profile.interests[c];
      w.weight += config.post_increment;
      w.last_updated = now;
    }
  }
  profile.updated_at = std::max(profile.updated_at, now);
  return profile;
}

UserProfile record_feedback(UserProfile profile, const FeedbackEvent& event, const ConceptLookup& lookup,
                            const ProfileConfig& config) {
  if (!event.user_id.empty() && event.user_id != profile.user_id) {
    throw Error(ErrorCode::InvalidField, "feedback for '" + event.user_id + "' applied to '" + profile.user_id + "'");
  }
  const ConceptSet* concepts = lookup ? lookup(event.artifact_id) : nullptr;
  if (!concepts) throw Error(ErrorCode::UnknownArtifact, "unknown artifact '" + event.artifact_id + "'");

  profile = apply_decay(std::move(profile), event.at, config.half_life_days);
  for (const auto& c : *concepts) {
    if (event.signal == FeedbackSignal::Relevant) {
      auto& w = profile.interests[c];
      w.weight += config.relevant_increment;
      w.last_updated = event.at;
      continue;
    }
    auto it = profile.interests.find(c);
    if (it == profile.interests.end()) continue;
    it->second.weight = std::max(0.0, it->second.weight - config.not_relevant_penalty);
    it->second.last_updated = event.at;
    if (it->second.weight == 0.0) profile.interests.erase(it);
  }
  FeedbackEvent logged = event;
  logged.user_id = profile.user_id;
  profile.feedback.push_back(std::move(logged));
  profile.updated_at = std::max(profile.updated_at, event.at);
  return profile;
}

std::vector<std::pair<ConceptId, double>> top_interests(const UserProfile& profile, std::size_t k) {
  std::vector<std::pair<ConceptId, double>> ranked;
  for (const auto& [concept_id, w] : profile.interests) {
    if (w.weight > 0.0) ranked.emplace_back(concept_id, w.weight);
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (ranked.size() > k) ranked.resize(k);
  double total = 0.0;
  for (const auto& [c, w] : ranked) total += w;
  for (auto& [c, w] : ranked) w /= total;
  return ranked;
}

}  // namespace devrec
