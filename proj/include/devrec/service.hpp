#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "devrec/index.hpp"
#include "devrec/profile.hpp"
#include "devrec/query_expansion.hpp"
#include "devrec/recommend.hpp"

namespace httplib {
class Server;
}

namespace devrec {

/// Search parameters as accepted by both the CLI and the HTTP API. Unset
/// `k` / `strict` fall back to the user's delivery settings, then to the
/// library defaults.
struct SearchRequest {
  std::string query;
  std::optional<std::string> user;
  std::optional<std::size_t> k;
  double beta = 0.5;
  std::optional<bool> strict;
  double tau = 0.25;
  bool expand = true;
  ExpansionOptions expansion;
};

struct SearchResponse {
  ExpandedQuery query;
  SearchOptions options;
  std::vector<RankedResult> results;
};

SearchResponse execute_search(const InvertedIndex& index, const SynsetLexicon& lexicon, const UserProfile* profile,
                              const SearchRequest& request);

/// `rank<TAB>artifact_id<TAB>final<TAB>cosine<TAB>overlap<TAB>matched_terms`;
/// scores use 17 significant digits, matched terms are comma-separated.
std::string format_result_line(std::size_t rank, const RankedResult& result);

/// Structured search body including the request echo block.
nlohmann::json search_response_json(const SearchRequest& request, const SearchResponse& response,
                                     const InvertedIndex& index);

nlohmann::json results_json(const std::vector<RankedResult>& results, const InvertedIndex& index);

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string index_path;
  std::string ontology_path;
  std::string lexicon_path;
  std::string profiles_path = "profiles";
  bool allow_ingest = false;
};

/// Response produced by a handler: HTTP status plus JSON body.
struct ApiResponse {
  int status = 200;
  nlohmann::json body;
};

/// The delivery service. Handlers are plain methods so they can be driven
/// without sockets; `mount` binds them to an httplib server.
///
/// The index is shared read-only; `ingest_artifact` takes the writer lock.
/// Profile mutations are serialized per user.
class Service {
 public:
  using Clock = std::function<Timestamp()>;

  Service(InvertedIndex index, SynsetLexicon lexicon, ProfileStore store, bool allow_ingest = false,
          Clock clock = now_utc, ProfileConfig profile_config = {});

  /// Loads every artifact named in the config; aborts with the failing
  /// cause. The ontology file, when given, must match the index's.
  static std::unique_ptr<Service> from_config(const ServiceConfig& config, Clock clock = now_utc);

  ApiResponse health() const;
  ApiResponse search(const std::multimap<std::string, std::string>& params) const;
  ApiResponse recommend(const std::multimap<std::string, std::string>& params) const;
  ApiResponse get_profile(const std::string& user) const;
  ApiResponse create_profile(const std::string& body);
  ApiResponse decay_profile(const std::string& user, const std::multimap<std::string, std::string>& params);
  ApiResponse feedback(const std::string& body);
  ApiResponse ingest_posts(const std::string& user, const std::string& body);
  ApiResponse get_artifact(const std::string& id) const;
  ApiResponse ingest_artifact(const std::string& body);

  void mount(httplib::Server& server);

  std::size_t indexed() const;

 private:
  std::mutex& user_mutex(const std::string& user);
  template <typename Fn>
  ApiResponse guarded(Fn&& fn) const;

  InvertedIndex index_;
  mutable std::shared_mutex index_mutex_;
  SynsetLexicon lexicon_;
  ProfileStore store_;
  bool allow_ingest_;
  Clock clock_;
  ProfileConfig profile_config_;

  std::mutex users_mutex_;
  std::map<std::string, std::unique_ptr<std::mutex>> user_mutexes_;
};

/// Maps an error code to its HTTP status.
int http_status(ErrorCode code);

}  // namespace devrec
