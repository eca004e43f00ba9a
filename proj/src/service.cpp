#include "devrec/service.hpp"

#include <charconv>

#include <fmt/format.h>
#include <httplib.h>

#include "devrec/error.hpp"
#include "devrec/ontology.hpp"

namespace devrec {

namespace {

using Params = std::multimap<std::string, std::string>;

std::optional<std::string> param(const Params& params, const std::string& key) {
  auto it = params.find(key);
  if (it == params.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> size_param(const Params& params, const std::string& key) {
  const auto v = param(params, key);
  if (!v) return std::nullopt;
  std::size_t out = 0;
  const auto* end = v->data() + v->size();
  auto [ptr, ec] = std::from_chars(v->data(), end, out);
  if (ec != std::errc() || ptr != end || out == 0) {
    throw Error(ErrorCode::InvalidField, key + " must be a positive integer");
  }
  return out;
}

std::optional<double> real_param(const Params& params, const std::string& key) {
  const auto v = param(params, key);
  if (!v) return std::nullopt;
  try {
    std::size_t used = 0;
    const double out = std::stod(*v, &used);
    if (used != v->size()) throw std::invalid_argument(key);
    return out;
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidField, key + " must be a number");
  }
}

std::optional<bool> bool_param(const Params& params, const std::string& key) {
  const auto v = param(params, key);
  if (!v) return std::nullopt;
  if (*v == "1" || *v == "true" || *v == "yes" || v->empty()) return true;
  if (*v == "0" || *v == "false" || *v == "no") return false;
  throw Error(ErrorCode::InvalidField, key + " must be a boolean");
}

nlohmann::json parse_body(const std::string& body) {
  try {
    return nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::ParseError, std::string("request body: ") + e.what());
  }
}

std::string required_string(const nlohmann::json& body, const char* key) {
  auto it = body.find(key);
  if (it == body.end() || !it->is_string() || it->get<std::string>().empty()) {
    throw Error(ErrorCode::InvalidField, std::string("missing string field '") + key + "'");
  }
  return it->get<std::string>();
}

Timestamp timestamp_or(const std::optional<std::string>& text, Timestamp fallback) {
  if (!text) return fallback;
  const auto ts = parse_timestamp(*text);
  if (!ts) throw Error(ErrorCode::InvalidField, "bad timestamp '" + *text + "'");
  return *ts;
}

Artifact artifact_from_request(nlohmann::json j, Timestamp now, ArtifactKind default_kind) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidField, "artifact must be an object");
  if (!j.contains("created_at")) j["created_at"] = format_timestamp(now);
  if (!j.contains("kind")) j["kind"] = to_string(default_kind);
  auto a = j.get<Artifact>();
  if (a.id.empty()) throw Error(ErrorCode::MissingIdentity, "artifact has no id");
  a.created_at = std::min(a.created_at, now);
  return a;
}

ApiResponse ok(nlohmann::json body, int status = 200) { return {status, std::move(body)}; }

}  // namespace

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownUser:
    case ErrorCode::UnknownArtifact:
    case ErrorCode::UnknownConcept:
      return 404;
    case ErrorCode::DuplicateUser:
    case ErrorCode::DuplicateArtifactId:
    case ErrorCode::DuplicateId:
      return 409;
    case ErrorCode::IngestDisabled:
      return 403;
    case ErrorCode::StoreUnavailable:
      return 503;
    default:
      return 400;
  }
}

SearchResponse execute_search(const InvertedIndex& index, const SynsetLexicon& lexicon, const UserProfile* profile,
                              const SearchRequest& request) {
  SearchResponse response;
  auto& opts = response.options;
  opts.k = request.k.value_or(profile ? static_cast<std::size_t>(profile->delivery.default_k) : 10);
  opts.strict = request.strict.value_or(profile ? profile->delivery.strict_filter : false);
  opts.beta = request.beta;
  opts.tau = request.tau;
  if (opts.k == 0) throw Error(ErrorCode::InvalidField, "k must be positive");
  if (!(opts.beta >= 0.0)) throw Error(ErrorCode::InvalidField, "beta must be non-negative");
  if (!(request.expansion.alpha > 0.0 && request.expansion.alpha < 1.0)) {
    throw Error(ErrorCode::InvalidField, "alpha must lie in (0,1)");
  }
  response.query = request.expand ? expand(request.query, lexicon, index.ontology(), request.expansion)
                                  : original_query(request.query);
  response.results = search(index, response.query, profile, opts);
  return response;
}

std::string format_result_line(std::size_t rank, const RankedResult& r) {
  std::string terms;
  for (const auto& t : r.matched_terms) {
    if (!terms.empty()) terms.push_back(',');
    terms += t;
  }
  return fmt::format("{}\t{}\t{:.17g}\t{:.17g}\t{:.17g}\t{}", rank, r.artifact_id, r.final_score, r.cosine,
                     r.interest_overlap, terms);
}

nlohmann::json results_json(const std::vector<RankedResult>& results, const InvertedIndex& index) {
  nlohmann::json out = nlohmann::json::array();
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    nlohmann::json item{{"rank", i + 1},
                        {"artifact_id", r.artifact_id},
                        {"final", r.final_score},
                        {"cosine", r.cosine},
                        {"overlap", r.interest_overlap},
                        {"matched_terms", r.matched_terms}};
    if (const auto* a = index.find_artifact(r.artifact_id)) {
      item["title"] = a->title;
      item["kind"] = to_string(a->kind);
      item["created_at"] = format_timestamp(a->created_at);
      item["concepts"] = a->concepts;
    }
    out.push_back(std::move(item));
  }
  return out;
}

nlohmann::json search_response_json(const SearchRequest& request, const SearchResponse& response,
                                    const InvertedIndex& index) {
  nlohmann::json expansion = nlohmann::json::array();
  for (const auto& t : response.query.expansion_terms()) {
    expansion.push_back({{"term", t}, {"weight", response.query.terms.at(t)}});
  }
  nlohmann::json echo{{"query", request.query},
                      {"user", request.user ? nlohmann::json(*request.user) : nlohmann::json(nullptr)},
                      {"k", response.options.k},
                      {"beta", response.options.beta},
                      {"strict", response.options.strict},
                      {"tau", response.options.tau},
                      {"expand", request.expand},
                      {"alpha", request.expansion.alpha},
                      {"original_terms", response.query.original_terms},
                      {"expansion_terms", expansion}};
  return {{"request", echo}, {"results", results_json(response.results, index)}};
}

Service::Service(InvertedIndex index, SynsetLexicon lexicon, ProfileStore store, bool allow_ingest, Clock clock,
                 ProfileConfig profile_config)
    : index_(std::move(index)),
      lexicon_(std::move(lexicon)),
      store_(std::move(store)),
      allow_ingest_(allow_ingest),
      clock_(std::move(clock)),
      profile_config_(profile_config) {}

std::unique_ptr<Service> Service::from_config(const ServiceConfig& config, Clock clock) {
  auto index = InvertedIndex::load(config.index_path);
  if (!config.ontology_path.empty()) {
    const auto ontology = load_ontology(config.ontology_path);
    if (ontology.to_json() != index.ontology().to_json()) {
      throw Error(ErrorCode::DanglingReference,
                  "ontology '" + config.ontology_path + "' differs from the one the index was built with");
    }
  }
  auto lexicon = config.lexicon_path.empty() ? SynsetLexicon{} : load_lexicon(config.lexicon_path);
  ProfileStore store(config.profiles_path);
  store.list_users();
  return std::make_unique<Service>(std::move(index), std::move(lexicon), std::move(store), config.allow_ingest,
                                   std::move(clock));
}

std::size_t Service::indexed() const {
  std::shared_lock lock(index_mutex_);
  return index_.size();
}

std::mutex& Service::user_mutex(const std::string& user) {
  std::lock_guard lock(users_mutex_);
  auto& slot = user_mutexes_[user];
  if (!slot) slot = std::make_unique<std::mutex>();
  return *slot;
}

template <typename Fn>
ApiResponse Service::guarded(Fn&& fn) const {
  try {
    return fn();
  } catch (const Error& e) {
    return {http_status(e.code()), {{"error", {{"code", to_string(e.code())}, {"message", e.what()}}}}};
  } catch (const nlohmann::json::exception& e) {
    return {400, {{"error", {{"code", "ParseError"}, {"message", e.what()}}}}};
  } catch (const std::exception& e) {
    return {500, {{"error", {{"code", "Internal"}, {"message", e.what()}}}}};
  }
}

ApiResponse Service::health() const {
  return ok({{"status", "ok"}, {"indexed", indexed()}});
}

ApiResponse Service::search(const Params& params) const {
  return guarded([&] {
    SearchRequest req;
    req.query = param(params, "q").value_or("");
    req.user = param(params, "user");
    if (req.user && req.user->empty()) req.user.reset();
    req.k = size_param(params, "k");
    req.beta = real_param(params, "beta").value_or(req.beta);
    req.strict = bool_param(params, "strict");
    req.tau = real_param(params, "tau").value_or(req.tau);
    req.expand = bool_param(params, "expand").value_or(true);
    req.expansion.alpha = real_param(params, "alpha").value_or(req.expansion.alpha);

    std::optional<UserProfile> profile;
    if (req.user) profile = store_.load(*req.user);
    std::shared_lock lock(index_mutex_);
    const auto response = execute_search(index_, lexicon_, profile ? &*profile : nullptr, req);
    return ok(search_response_json(req, response, index_));
  });
}

ApiResponse Service::recommend(const Params& params) const {
  return guarded([&] {
    const auto user = param(params, "user");
    UserProfile profile;
    if (user && !user->empty()) profile = store_.load(*user);
    RecommendOptions opts;
    opts.k = size_param(params, "k").value_or(static_cast<std::size_t>(profile.delivery.default_k));
    std::shared_lock lock(index_mutex_);
    const auto results = devrec::recommend(profile, index_, index_.ontology(), opts);
    nlohmann::json drivers = nlohmann::json::array();
    for (const auto& [c, w] : top_interests(profile, opts.interest_k)) drivers.push_back({{"concept", c}, {"weight", w}});
    return ok({{"request",
                {{"user", user ? nlohmann::json(*user) : nlohmann::json(nullptr)},
                 {"k", opts.k},
                 {"cold_start", drivers.empty()},
                 {"interests", drivers}}},
               {"results", results_json(results, index_)}});
  });
}

ApiResponse Service::get_profile(const std::string& user) const {
  return guarded([&] { return ok(nlohmann::json(store_.load(user))); });
}

ApiResponse Service::create_profile(const std::string& body) {
  return guarded([&] {
    const auto form = parse_body(body);
    const auto user = form.value("user_id", form.value("user", std::string()));
    validate_user_id(user);
    std::lock_guard lock(user_mutex(user));
    return ok(nlohmann::json(store_.create(form, clock_())), 201);
  });
}

ApiResponse Service::decay_profile(const std::string& user, const Params& params) {
  return guarded([&] {
    validate_user_id(user);
    const auto now = timestamp_or(param(params, "now"), clock_());
    const auto half_life = real_param(params, "half_life").value_or(profile_config_.half_life_days);
    const bool dry_run = bool_param(params, "dry_run").value_or(false);
    std::lock_guard lock(user_mutex(user));
    auto profile = apply_decay(store_.load(user), now, half_life);
    if (!dry_run) store_.save(profile);
    auto body = nlohmann::json(profile);
    body["dry_run"] = dry_run;
    return ok(std::move(body));
  });
}

ApiResponse Service::feedback(const std::string& body) {
  return guarded([&] {
    const auto j = parse_body(body);
    FeedbackEvent event;
    event.user_id = required_string(j, "user");
    event.artifact_id = required_string(j, "artifact");
    const auto signal = parse_feedback_signal(required_string(j, "signal"));
    if (!signal) throw Error(ErrorCode::InvalidField, "signal must be 'relevant' or 'not_relevant'");
    event.signal = *signal;
    event.at = timestamp_or(j.contains("at") ? std::optional(j.at("at").get<std::string>()) : std::nullopt, clock_());
    validate_user_id(event.user_id);

    std::lock_guard lock(user_mutex(event.user_id));
    auto profile = store_.load(event.user_id);
    {
      std::shared_lock index_lock(index_mutex_);
      profile = record_feedback(
          std::move(profile), event, [&](std::string_view id) { return index_.doc_concepts(id); }, profile_config_);
    }
    store_.save(profile);
    return ok(nlohmann::json(profile));
  });
}

ApiResponse Service::ingest_posts(const std::string& user, const std::string& body) {
  return guarded([&] {
    validate_user_id(user);
    const auto j = parse_body(body);
    const auto& list = j.is_array() ? j : j.at("posts");
    if (!list.is_array()) throw Error(ErrorCode::InvalidField, "posts must be an array");
    const auto now = clock_();
    std::vector<Artifact> posts;
    for (const auto& p : list) posts.push_back(artifact_from_request(p, now, ArtifactKind::Post));

    std::lock_guard lock(user_mutex(user));
    auto profile = store_.load(user);
    {
      std::shared_lock index_lock(index_mutex_);
      profile = devrec::ingest_posts(std::move(profile), posts, index_.ontology(), now, profile_config_);
    }
    store_.save(profile);
    return ok(nlohmann::json(profile));
  });
}

ApiResponse Service::get_artifact(const std::string& id) const {
  return guarded([&] {
    std::shared_lock lock(index_mutex_);
    const auto* a = index_.find_artifact(id);
    if (!a) throw Error(ErrorCode::UnknownArtifact, "unknown artifact '" + id + "'");
    return ok(nlohmann::json(*a));
  });
}

ApiResponse Service::ingest_artifact(const std::string& body) {
  return guarded([&] {
    if (!allow_ingest_) throw Error(ErrorCode::IngestDisabled, "artifact ingestion is disabled (--allow-ingest)");
    auto artifact = artifact_from_request(parse_body(body), clock_(), ArtifactKind::Post);
    std::unique_lock lock(index_mutex_);
    artifact = annotate(std::move(artifact), index_.ontology());
    nlohmann::json stored = artifact;
    const bool indexed = index_.add_document(std::move(artifact));
    return ok({{"indexed", indexed}, {"artifact", stored}, {"size", index_.size()}}, indexed ? 201 : 200);
  });
}

void Service::mount(httplib::Server& server) {
  auto reply = [](httplib::Response& res, const ApiResponse& r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Allow-Headers", "Content-Type"},
                              {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
  server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
  server.Get("/health", [this, reply](const httplib::Request&, httplib::Response& res) { reply(res, health()); });
  server.Get("/search", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, search(req.params));
  });
  server.Get("/recommend", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, recommend(req.params));
  });
  server.Get(R"(/profile/([^/]+))", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, get_profile(req.matches[1]));
  });
  server.Post("/profile", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, create_profile(req.body));
  });
  server.Post(R"(/profile/([^/]+)/decay)", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, decay_profile(req.matches[1], req.params));
  });
  server.Post("/feedback", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, feedback(req.body));
  });
  server.Post(R"(/posts/([^/]+))", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, ingest_posts(req.matches[1], req.body));
  });
  server.Get(R"(/artifact/(.+))", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, get_artifact(req.matches[1]));
  });
  server.Post("/artifact", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, ingest_artifact(req.body));
  });
}

}  // namespace devrec
