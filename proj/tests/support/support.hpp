#pragma once

// Fixtures, generators and brute-force oracles shared by the unit and
// acceptance tests. The oracles deliberately avoid the library's index and
// vector code: they count with std::map and score with plain loops.

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

#include <fmt/format.h>

#include "devrec/eval.hpp"
#include "devrec/index.hpp"
#include "devrec/ingest.hpp"
#include "devrec/ontology.hpp"
#include "devrec/profile.hpp"
#include "devrec/query_expansion.hpp"
#include "devrec/text.hpp"
#include "devrec/timestamp.hpp"

namespace devrec::testing {

inline std::string data_path(const std::string& name) { return std::string(DEVREC_DATA_DIR) + "/" + name; }
inline std::string fixture_path(const std::string& name) {
  return std::string(DEVREC_TEST_DATA_DIR) + "/" + name;
}

inline Timestamp ts(std::string_view text) {
  auto t = parse_timestamp(text);
  if (!t) throw std::invalid_argument("bad test timestamp");
  return *t;
}

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            fmt::format("devrec-test-{}-{}-{}", ::getpid(), counter++, rd());
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

struct CommandResult {
  int exit_code = -1;
  std::string out;
};

/// Runs a shell command and captures stdout.
inline CommandResult run_command(const std::string& command) {
  CommandResult r;
  FILE* pipe = ::popen(command.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t n = 0;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = ::pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

inline std::string cli() { return DEVREC_CLI; }

// Thing -> Content -> {Tutorial, Job}; a second tree Other -> Misc.
inline Ontology tree_ontology() {
  return Ontology::from_json(nlohmann::json::parse(R"({
    "classes": [
      {"id": "t:Thing", "label": "thing"},
      {"id": "t:Content", "label": "content", "parent": "t:Thing"},
      {"id": "t:Tutorial", "label": "tutorial", "parent": "t:Content"},
      {"id": "t:Job", "label": "job", "parent": "t:Content"},
      {"id": "t:Other", "label": "other"},
      {"id": "t:Misc", "label": "misc", "parent": "t:Other"}
    ],
    "instances": [
      {"id": "scrumTutorial", "class": "t:Tutorial", "surface_forms": ["scrum tutorial", "scrum"]},
      {"id": "jobAd", "class": "t:Job", "surface_forms": ["job opening", "vacancy"]},
      {"id": "miscThing", "class": "t:Misc", "surface_forms": ["widget"]}
    ],
    "rules": []
  })"));
}

inline Ontology shipped_ontology() { return load_ontology(data_path("mad-ontology.json")); }
inline SynsetLexicon shipped_lexicon() { return load_lexicon(data_path("mad-synsets.tsv")); }

/// The three tweets, ingested with origin "tweet" and annotated.
inline std::vector<Artifact> tweet_corpus(const Ontology& ontology) {
  const auto parsed = parse_source(SourceFormat::JsonLines, read_file(data_path("tweets.jsonl")), "tweet");
  std::vector<Artifact> out;
  for (const auto& r : cleanse(parsed.records)) {
    out.push_back(annotate(normalize(r, std::nullopt, ts("2019-04-01T00:00:00Z")), ontology));
  }
  return out;
}

/// Benchmark corpus, shipped ontology and lexicon, and profile u1, all
/// prepared through the command-line tool.
struct CliWorkspace {
  std::string corpus, index, ontology, lexicon, profiles;
};

inline CliWorkspace prepare_cli_workspace(const TempDir& dir) {
  CliWorkspace w{dir.file("corpus.jsonl"), dir.file("index.bin"), data_path("mad-ontology.json"),
                 data_path("mad-synsets.tsv"), dir.file("profiles")};
  const std::vector<std::string> steps{
      fmt::format("{} ingest --in {} --format jsonl --origin bench --out {} --now 2019-04-01T00:00:00Z 2>/dev/null",
                  cli(), fixture_path("bench/corpus.jsonl"), w.corpus),
      fmt::format("{} index --corpus {} --ontology {} --out {} 2>&1", cli(), w.corpus, w.ontology, w.index),
      fmt::format("{} profile init --profiles {} --file {} --now 2019-04-01T00:00:00Z 2>&1", cli(), w.profiles,
                  fixture_path("u1-form.json")),
  };
  for (const auto& step : steps) {
    if (run_command(step).exit_code != 0) throw std::runtime_error("workspace step failed: " + step);
  }
  return w;
}

// ---------------------------------------------------------------------------
// Oracles

/// Lowercase, split on anything not [a-z0-9] or a non-ASCII byte, drop short
/// tokens and stop words. Written independently of `tokenize`.
inline std::vector<std::string> naive_tokens(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (cur.size() >= 2 && !is_stop_word(cur)) out.push_back(cur);
    cur.clear();
  };
  for (unsigned char c : text) {
    if (std::isalnum(c) || c >= 0x80) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else {
      flush();
    }
  }
  flush();
  return out;
}

/// term -> artifact id -> tf, counted with nested loops.
using BruteCounts = std::map<std::string, std::map<std::string, std::uint32_t>>;

inline BruteCounts brute_counts(const std::vector<Artifact>& corpus, bool double_title = true) {
  BruteCounts counts;
  for (const auto& a : corpus) {
    for (const auto& t : naive_tokens(a.title)) counts[t][a.id] += double_title ? 2 : 1;
    for (const auto& t : naive_tokens(a.body)) counts[t][a.id] += 1;
  }
  return counts;
}

using SparseMap = std::map<std::string, double>;

inline double brute_cosine(const SparseMap& a, const SparseMap& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (const auto& [t, w] : a) {
    na += w * w;
    if (auto it = b.find(t); it != b.end()) dot += w * it->second;
  }
  for (const auto& [t, w] : b) nb += w * w;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

struct BruteResult {
  std::string id;
  double cosine = 0.0;
  double overlap = 0.0;
  double final_score = 0.0;
};

/// Scores every document directly from the brute-force counts.
inline std::vector<BruteResult> brute_search(const std::vector<Artifact>& corpus, const ExpandedQuery& query,
                                             const WeightedInterests& interests, const Ontology& ontology,
                                             double beta, bool strict, double tau) {
  const auto counts = brute_counts(corpus);
  std::set<std::string> indexed;
  for (const auto& [term, docs] : counts) {
    for (const auto& [id, tf] : docs) indexed.insert(id);
  }
  const double n = static_cast<double>(indexed.size());
  auto idf = [&](const std::string& term) { return std::log(1.0 + n / static_cast<double>(counts.at(term).size())); };

  SparseMap q;
  for (const auto& [term, w] : query.terms) {
    if (counts.contains(term)) q[term] = w * idf(term);
  }
  std::vector<BruteResult> out;
  for (const auto& a : corpus) {
    if (!indexed.contains(a.id)) continue;
    SparseMap d;
    bool shares = false;
    for (const auto& [term, docs] : counts) {
      if (auto it = docs.find(a.id); it != docs.end()) {
        d[term] = it->second * idf(term);
        if (q.contains(term)) shares = true;
      }
    }
    if (!shares) continue;
    double best = 0.0, overlap = 0.0;
    for (const auto& [c, w] : interests) {
      double m = 0.0;
      for (const auto& dc : a.concepts) m = std::max(m, ontology.concept_similarity(c, dc));
      best = std::max(best, m);
      overlap += w * m;
    }
    overlap = std::min(overlap, 1.0);
    if (strict && !interests.empty() && best < tau) continue;
    BruteResult r{a.id, brute_cosine(q, d), overlap, 0.0};
    r.final_score = r.cosine * (1.0 + beta * r.overlap);
    out.push_back(r);
  }
  std::sort(out.begin(), out.end(), [](const BruteResult& x, const BruteResult& y) {
    if (x.final_score != y.final_score) return x.final_score > y.final_score;
    return x.id < y.id;
  });
  return out;
}

/// True when `got` matches `want` position by position, allowing two ids to
/// trade places only when their scores are within `eps`.
inline bool same_ranking(const std::vector<RankedResult>& got, const std::vector<BruteResult>& want,
                         double eps = 1e-12) {
  if (got.size() != want.size()) return false;
  std::map<std::string, const BruteResult*> by_id;
  for (const auto& w : want) by_id[w.id] = &w;
  for (std::size_t i = 0; i < got.size(); ++i) {
    if (std::abs(got[i].final_score - want[i].final_score) > eps) return false;
    auto it = by_id.find(got[i].artifact_id);
    if (it == by_id.end()) return false;
    if (std::abs(got[i].final_score - it->second->final_score) > eps) return false;
    if (std::abs(got[i].cosine - it->second->cosine) > eps) return false;
    if (std::abs(got[i].interest_overlap - it->second->overlap) > eps) return false;
    by_id.erase(it);
  }
  return by_id.empty();
}

/// `query<TAB>rank<TAB>artifact` lines, ordered by rank within each query.
inline Run read_run(const std::string& path) {
  std::map<std::string, std::map<int, std::string>> ranked;
  std::istringstream in(read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream cols(line);
    std::string query, artifact;
    int rank = 0;
    if (!(cols >> query >> rank >> artifact)) throw std::invalid_argument("bad run line: " + line);
    ranked[query][rank] = artifact;
  }
  Run run;
  for (auto& [query, by_rank] : ranked) {
    for (auto& [rank, id] : by_rank) run[query].push_back(id);
  }
  return run;
}

/// Rows of the hand-computed metric table: name -> {P, R, MRR, nDCG}.
inline std::map<std::string, Metrics> read_expected_metrics(const std::string& path) {
  std::map<std::string, Metrics> out;
  std::istringstream in(read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream cols(line);
    std::string name;
    Metrics m;
    if (!(cols >> name >> m.precision >> m.recall >> m.mrr >> m.ndcg)) {
      throw std::invalid_argument("bad metrics line: " + line);
    }
    out[name] = m;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Generators

/// Random corpus over a Zipf-ish vocabulary `w0..w{vocab-1}`; some documents
/// get concepts drawn from `concepts`.
inline std::vector<Artifact> synthetic_corpus(std::mt19937_64& rng, std::size_t docs, std::size_t vocab,
                                              std::size_t max_len, const std::vector<ConceptId>& concepts = {}) {
  std::vector<double> weights(vocab);
  for (std::size_t i = 0; i < vocab; ++i) weights[i] = 1.0 / static_cast<double>(i + 1);
  std::discrete_distribution<std::size_t> word(weights.begin(), weights.end());
  std::uniform_int_distribution<std::size_t> len(1, max_len);
  std::uniform_int_distribution<std::size_t> title_len(0, 4);
  std::uniform_int_distribution<std::size_t> concept_count(0, 3);
  std::vector<Artifact> out;
  out.reserve(docs);
  for (std::size_t d = 0; d < docs; ++d) {
    Artifact a;
    a.id = fmt::format("syn:{:05}", d);
    a.kind = ArtifactKind::Post;
    a.source = "syn";
    a.created_at = ts("2020-01-01T00:00:00Z") + std::chrono::hours(static_cast<int>(d));
    for (std::size_t i = 0, n = title_len(rng); i < n; ++i) a.title += fmt::format("w{} ", word(rng));
    for (std::size_t i = 0, n = len(rng); i < n; ++i) a.body += fmt::format("w{} ", word(rng));
    if (!concepts.empty()) {
      std::uniform_int_distribution<std::size_t> pick(0, concepts.size() - 1);
      for (std::size_t i = 0, n = concept_count(rng); i < n; ++i) a.concepts.insert(concepts[pick(rng)]);
    }
    out.push_back(std::move(a));
  }
  return out;
}

inline ExpandedQuery random_query(std::mt19937_64& rng, std::size_t vocab, std::size_t max_terms) {
  std::uniform_int_distribution<std::size_t> term(0, vocab - 1);
  std::uniform_int_distribution<std::size_t> count(1, max_terms);
  std::uniform_int_distribution<int> coin(0, 2);
  ExpandedQuery q;
  for (std::size_t i = 0, n = count(rng); i < n; ++i) {
    const auto t = fmt::format("w{}", term(rng));
    if (coin(rng) == 0 && !q.original_terms.contains(t)) {
      q.terms.emplace(t, 0.5);
    } else {
      q.terms[t] = 1.0;
      q.original_terms.insert(t);
    }
  }
  return q;
}

inline std::vector<ConceptId> class_ids(const Ontology& ontology) {
  std::vector<ConceptId> out;
  for (const auto& c : ontology.classes()) out.push_back(c.id);
  return out;
}

inline UserProfile random_profile(std::mt19937_64& rng, const std::string& user, const std::vector<ConceptId>& concepts) {
  std::uniform_real_distribution<double> weight(0.0, 5.0);
  std::uniform_int_distribution<int> days(0, 400);
  std::uniform_int_distribution<int> coin(0, 1);
  std::uniform_int_distribution<std::size_t> pick(0, concepts.size() - 1);
  const auto base = ts("2021-01-01T00:00:00Z");
  UserProfile p;
  p.user_id = user;
  if (coin(rng)) p.personal.age = 20 + days(rng) % 40;
  if (coin(rng)) p.personal.location = "Loc " + std::to_string(days(rng));
  if (coin(rng)) p.personal.job_title = "developer";
  if (coin(rng)) p.personal.years_experience = days(rng) % 20;
  if (coin(rng)) p.personal.social_ids = {"@" + user, "gh:" + user};
  p.domain_of_interest.dev_domains = {"health", "education"};
  if (coin(rng)) p.domain_of_interest.app_methods = {AppMethod::Native, AppMethod::Cross};
  p.domain_of_interest.methodologies = {"scrum"};
  if (coin(rng)) p.domain_of_interest.languages = {"kotlin", "swift"};
  if (coin(rng)) p.software_project.requirements = {"offline sync", "push notifications"};
  if (coin(rng)) p.dev_environment.testing_tools = {"espresso"};
  p.security.share_social = coin(rng) == 1;
  for (std::size_t i = 0, n = pick(rng) % 6; i < n; ++i) {
    p.interests[concepts[pick(rng)]] = {weight(rng), base + std::chrono::days(days(rng))};
  }
  p.delivery.default_k = 1 + days(rng) % 30;
  p.delivery.strict_filter = coin(rng) == 1;
  if (coin(rng)) p.quality.last_eval = std::map<std::string, double>{{"P@10", weight(rng) / 5}, {"MRR", 0.5}};
  if (coin(rng)) p.feedback.push_back({user, "syn:00001", FeedbackSignal::NotRelevant, base});
  p.updated_at = base + std::chrono::days(days(rng));
  return p;
}

}  // namespace devrec::testing
