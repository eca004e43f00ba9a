#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "devrec/ingest.hpp"
#include "devrec/timestamp.hpp"

namespace devrec {

class Ontology;

enum class AppMethod { Native, Hybrid, Cross };

struct PersonalData {
  std::optional<int> age;
  std::optional<std::string> location;
  std::optional<std::string> job_title;
  std::optional<int> years_experience;
  std::vector<std::string> social_ids;

  bool operator==(const PersonalData&) const = default;
};

struct DomainOfInterest {
  std::set<std::string> dev_domains;
  std::set<AppMethod> app_methods;
  std::set<std::string> methodologies;
  std::set<std::string> repo_hosts;
  std::set<std::string> languages;
  std::set<std::string> ides;

  bool operator==(const DomainOfInterest&) const = default;
};

struct SoftwareProject {
  std::vector<std::string> requirements;
  std::set<std::string> modeling;
  std::set<std::string> paradigm;
  std::set<std::string> frontend_tools;
  std::set<std::string> backend_tools;

  bool operator==(const SoftwareProject&) const = default;
};

struct DevEnvironment {
  std::set<std::string> infrastructure;
  std::set<std::string> backend_servers;
  std::set<std::string> testing_tools;
  std::set<std::string> debugging_tools;

  bool operator==(const DevEnvironment&) const = default;
};

struct SecuritySettings {
  bool pseudonymous = true;  // always true; identities stay undisclosed
  bool share_social = false;

  bool operator==(const SecuritySettings&) const = default;
};

struct InterestWeight {
  double weight = 0.0;
  Timestamp last_updated{};

  bool operator==(const InterestWeight&) const = default;
};

struct DeliverySettings {
  int default_k = 10;
  bool strict_filter = false;

  bool operator==(const DeliverySettings&) const = default;
};

struct QualityRecord {
  std::optional<std::map<std::string, double>> last_eval;

  bool operator==(const QualityRecord&) const = default;
};

enum class FeedbackSignal { Relevant, NotRelevant };

std::optional<FeedbackSignal> parse_feedback_signal(std::string_view name);
std::string_view to_string(FeedbackSignal signal);

struct FeedbackEvent {
  std::string user_id;
  std::string artifact_id;
  FeedbackSignal signal = FeedbackSignal::Relevant;
  Timestamp at{};

  bool operator==(const FeedbackEvent&) const = default;
};

/// The eight-dimension user model. `interests` carries the temporal
/// dimension; `feedback` is the history used to keep browsing fresh.
struct UserProfile {
  std::string user_id;
  PersonalData personal;
  DomainOfInterest domain_of_interest;
  SoftwareProject software_project;
  DevEnvironment dev_environment;
  SecuritySettings security;
  std::map<ConceptId, InterestWeight> interests;
  DeliverySettings delivery;
  QualityRecord quality;
  std::vector<FeedbackEvent> feedback;
  Timestamp updated_at{};

  bool operator==(const UserProfile&) const = default;
};

void to_json(nlohmann::json& j, const UserProfile& p);
void from_json(const nlohmann::json& j, UserProfile& p);

/// Weight changes applied by implicit and explicit profiling.
struct ProfileConfig {
  double half_life_days = 30.0;
  double post_increment = 1.0;
  double relevant_increment = 1.0;
  double not_relevant_penalty = 0.5;
};

/// Weights below this are dropped after decay.
inline constexpr double kPruneThreshold = 1e-4;

/// Builds a profile from the explicit form document. Dimension fields may be
/// nested under their dimension key (`personal`, `domain_of_interest`, ...)
/// or given at top level; `interest_concepts` seeds weight 1.0 at `now`.
/// Throws `InvalidField`.
UserProfile create_profile(const nlohmann::json& form, Timestamp now);

/// Throws `InvalidField` unless the id is a non-empty `[A-Za-z0-9_.-]` token
/// that does not start with a dot.
void validate_user_id(std::string_view user_id);

/// w <- w * 2^(-days / half_life) for every interest. Throws `ClockSkew` when
/// `now` precedes any `last_updated`.
UserProfile apply_decay(UserProfile profile, Timestamp now, double half_life_days = 30.0);

UserProfile ingest_posts(UserProfile profile, const std::vector<Artifact>& posts, const Ontology& ontology,
                         Timestamp now, const ProfileConfig& config = {});

/// Resolves an artifact id to its annotated concepts, or nullptr.
using ConceptLookup = std::function<const ConceptSet*(std::string_view artifact_id)>;

/// Throws `UnknownArtifact`.
UserProfile record_feedback(UserProfile profile, const FeedbackEvent& event, const ConceptLookup& lookup,
                            const ProfileConfig& config = {});

/// Top-k by weight (ties by concept id), renormalized to sum to one.
std::vector<std::pair<ConceptId, double>> top_interests(const UserProfile& profile, std::size_t k);

/// One JSON document per user under a directory.
class ProfileStore {
 public:
  explicit ProfileStore(std::filesystem::path root);

  const std::filesystem::path& root() const noexcept { return root_; }

  bool exists(std::string_view user_id) const;
  void save(const UserProfile& profile) const;
  /// Throws `UnknownUser`.
  UserProfile load(std::string_view user_id) const;
  /// create_profile + save; throws `DuplicateUser` if the user is present.
  UserProfile create(const nlohmann::json& form, Timestamp now) const;
  std::vector<std::string> list_users() const;

 private:
  std::filesystem::path path_for(std::string_view user_id) const;
  void ensure_root() const;

  std::filesystem::path root_;
};

}  // namespace devrec
