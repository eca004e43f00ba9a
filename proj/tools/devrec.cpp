// devrec command line: corpus ingestion, indexing, search, profiles,
// recommendation, classification, evaluation and the HTTP service.

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "devrec/error.hpp"
#include "devrec/eval.hpp"
#include "devrec/index.hpp"
#include "devrec/ingest.hpp"
#include "devrec/ontology.hpp"
#include "devrec/profile.hpp"
#include "devrec/query_expansion.hpp"
#include "devrec/recommend.hpp"
#include "devrec/service.hpp"
#include "devrec/timestamp.hpp"

// After the Eigen-based headers: <resolv.h> defines a `_res` macro.
#include <CLI11.hpp>
#include <fmt/format.h>
#include <httplib.h>

namespace {

using namespace devrec;

Timestamp timestamp_arg(const std::string& text) {
  if (text.empty()) return now_utc();
  const auto ts = parse_timestamp(text);
  if (!ts) throw Error(ErrorCode::InvalidField, "bad timestamp '" + text + "'");
  return *ts;
}

void print_json(const nlohmann::json& j) { std::cout << j.dump(2) << '\n'; }

struct IngestArgs {
  std::string in, format, origin, kind, out, now;
  bool append = false;
};

int run_ingest(const IngestArgs& a) {
  std::optional<ArtifactKind> kind;
  if (!a.kind.empty()) {
    kind = parse_artifact_kind(a.kind);
    if (!kind) throw Error(ErrorCode::InvalidField, "unknown kind '" + a.kind + "'");
  }
  const auto parsed = parse_source(parse_source_format(a.format), read_file(a.in), a.origin);
  const auto cleansed = cleanse(parsed.records);
  const auto now = timestamp_arg(a.now);

  Corpus corpus;
  if (a.append && std::filesystem::exists(a.out)) corpus = Corpus(read_corpus(read_file(a.out)));
  const auto before = corpus.size();
  std::size_t missing_identity = 0;
  for (const auto& r : cleansed) {
    try {
      corpus.add(normalize(r, kind, now));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::MissingIdentity) throw;
      ++missing_identity;
    }
  }
  write_file(a.out, write_corpus(corpus.artifacts()));
  std::cerr << fmt::format("parsed {} records ({} skipped), {} after cleansing, {} written to {}\n",
                           parsed.records.size(), parsed.skipped, cleansed.size(), corpus.size() - before, a.out);
  if (missing_identity > 0) std::cerr << fmt::format("{} records without identity dropped\n", missing_identity);
  return 0;
}

int run_index(const std::string& corpus_path, const std::string& ontology_path, const std::string& out) {
  auto ontology = load_ontology(ontology_path);
  auto corpus = read_corpus(read_file(corpus_path));
  for (auto& a : corpus) a = annotate(std::move(a), ontology);
  const auto index = InvertedIndex::build(std::move(corpus), std::move(ontology));
  index.save(out);
  std::cerr << fmt::format("indexed {} artifacts ({} without tokens excluded), {} terms -> {}\n", index.size(),
                           index.excluded_count(), index.vocabulary_size(), out);
  return 0;
}

struct SearchArgs {
  std::string index, lexicon, profiles = "profiles", user, query;
  std::optional<std::size_t> k;
  double beta = 0.5;
  bool strict = false;
  double tau = 0.25;
  bool no_expand = false;
  double alpha = 0.5;
  std::size_t max_per_term = 5;
  bool json = false;
};

int run_search(const SearchArgs& a) {
  const auto index = InvertedIndex::load(a.index);
  const auto lexicon = a.lexicon.empty() ? SynsetLexicon{} : load_lexicon(a.lexicon);
  std::optional<UserProfile> profile;
  if (!a.user.empty()) profile = ProfileStore(a.profiles).load(a.user);

  SearchRequest req;
  req.query = a.query;
  if (!a.user.empty()) req.user = a.user;
  req.k = a.k;
  req.beta = a.beta;
  if (a.strict) req.strict = true;
  req.tau = a.tau;
  req.expand = !a.no_expand;
  req.expansion.alpha = a.alpha;
  req.expansion.max_per_term = a.max_per_term;

  const auto response = execute_search(index, lexicon, profile ? &*profile : nullptr, req);
  if (a.json) {
    print_json(search_response_json(req, response, index));
  } else {
    for (std::size_t i = 0; i < response.results.size(); ++i) {
      std::cout << format_result_line(i + 1, response.results[i]) << '\n';
    }
  }
  return 0;
}

int run_recommend(const std::string& index_path, const std::string& ontology_path, const std::string& profiles,
                  const std::string& user, std::optional<std::size_t> k, bool json) {
  const auto index = InvertedIndex::load(index_path);
  if (!ontology_path.empty() && load_ontology(ontology_path).to_json() != index.ontology().to_json()) {
    throw Error(ErrorCode::DanglingReference, "ontology '" + ontology_path + "' differs from the index's");
  }
  UserProfile profile;
  if (!user.empty()) profile = ProfileStore(profiles).load(user);
  RecommendOptions opts;
  opts.k = k.value_or(static_cast<std::size_t>(profile.delivery.default_k));
  const auto results = recommend(profile, index, index.ontology(), opts);
  if (json) {
    print_json(results_json(results, index));
  } else {
    for (std::size_t i = 0; i < results.size(); ++i) std::cout << format_result_line(i + 1, results[i]) << '\n';
  }
  return 0;
}

int run_classify(const std::string& index_path, const std::string& labels, const std::string& artifact_id) {
  const auto index = InvertedIndex::load(index_path);
  const auto* artifact = index.find_artifact(artifact_id);
  if (!artifact) throw Error(ErrorCode::UnknownArtifact, "unknown artifact '" + artifact_id + "'");
  const auto result = classify_artifact(*artifact, index, parse_labels(read_file(labels)));
  std::cout << fmt::format("{}\t{:.17g}\n", result.label, result.confidence);
  return 0;
}

struct EvalArgs {
  std::string index, lexicon, queries, qrels, user, profiles = "profiles";
  std::size_t k = 10;
  bool no_expand = false;
  bool json = false;
};

int run_eval(const EvalArgs& a) {
  const auto index = InvertedIndex::load(a.index);
  const auto lexicon = a.lexicon.empty() ? SynsetLexicon{} : load_lexicon(a.lexicon);
  const auto judgments = parse_qrels(read_file(a.qrels));
  std::optional<ProfileStore> store;
  std::optional<UserProfile> profile;
  if (!a.user.empty()) {
    store.emplace(a.profiles);
    profile = store->load(a.user);
  }

  Run run;
  for (const auto& [qid, text] : parse_queries(read_file(a.queries))) {
    SearchRequest req;
    req.query = text;
    req.k = a.k;
    req.expand = !a.no_expand;
    auto& ranking = run[qid];
    for (const auto& r : execute_search(index, lexicon, profile ? &*profile : nullptr, req).results) {
      ranking.push_back(r.artifact_id);
    }
  }
  const auto report = evaluate(run, judgments, a.k);
  const auto summary = report.summary();

  if (profile) {
    profile->quality.last_eval = summary;
    store->save(*profile);
  }

  if (a.json) {
    nlohmann::json per_query = nlohmann::json::object();
    for (const auto& [qid, m] : report.per_query) {
      per_query[qid] = {{"precision", m.precision}, {"recall", m.recall}, {"mrr", m.mrr}, {"ndcg", m.ndcg}};
    }
    print_json({{"k", report.k},
                {"evaluated", report.evaluated},
                {"skipped", report.skipped},
                {"macro", summary},
                {"per_query", per_query}});
    return 0;
  }
  std::cout << fmt::format("{:<12}{:>10}{:>10}{:>10}{:>10}\n", "query", fmt::format("P@{}", a.k),
                           fmt::format("R@{}", a.k), "MRR", fmt::format("nDCG@{}", a.k));
  for (const auto& [qid, m] : report.per_query) {
    std::cout << fmt::format("{:<12}{:>10.4f}{:>10.4f}{:>10.4f}{:>10.4f}\n", qid, m.precision, m.recall, m.mrr,
                             m.ndcg);
  }
  std::cout << fmt::format("{:<12}{:>10.4f}{:>10.4f}{:>10.4f}{:>10.4f}\n", "macro", report.macro.precision,
                           report.macro.recall, report.macro.mrr, report.macro.ndcg);
  std::cout << fmt::format("evaluated {} queries, skipped {} without relevant judgments\n", report.evaluated,
                           report.skipped);
  return 0;
}

int run_serve(const ServiceConfig& config) {
  if (config.index_path.empty()) throw Error(ErrorCode::InvalidField, "--index is required");
  auto service = Service::from_config(config);
  httplib::Server server;
  service->mount(server);
  std::cerr << fmt::format("serving {} artifacts on http://{}:{}\n", service->indexed(), config.host, config.port);
  if (!server.listen(config.host, config.port)) {
    throw Error(ErrorCode::StoreUnavailable, fmt::format("cannot listen on {}:{}", config.host, config.port));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"devrec: ontology-driven recommendation for mobile app developers"};
  app.require_subcommand(1);
  int status = 0;

  IngestArgs ingest;
  auto* ingest_cmd = app.add_subcommand("ingest", "Parse, cleanse and normalize a source dump into a corpus");
  ingest_cmd->add_option("--in", ingest.in, "Source file")->required();
  ingest_cmd->add_option("--format", ingest.format, "jsonl, csv or xml")->required();
  ingest_cmd->add_option("--origin", ingest.origin, "Source name used as id prefix")->required();
  ingest_cmd->add_option("--kind", ingest.kind, "Default artifact kind");
  ingest_cmd->add_option("--out", ingest.out, "Corpus JSON-lines file")->required();
  ingest_cmd->add_option("--now", ingest.now, "Ingestion timestamp (default: current time)");
  ingest_cmd->add_flag("--append", ingest.append, "Add to an existing corpus file");
  ingest_cmd->callback([&] { status = run_ingest(ingest); });

  std::string corpus_path, ontology_path, index_out;
  auto* index_cmd = app.add_subcommand("index", "Annotate a corpus and build the search index");
  index_cmd->add_option("--corpus", corpus_path)->required();
  index_cmd->add_option("--ontology", ontology_path)->required();
  index_cmd->add_option("--out", index_out)->required();
  index_cmd->callback([&] { status = run_index(corpus_path, ontology_path, index_out); });

  SearchArgs search;
  auto* search_cmd = app.add_subcommand("search", "Ranked, expanded, personalized search");
  search_cmd->add_option("--index", search.index)->required();
  search_cmd->add_option("--lexicon", search.lexicon, "Synset lexicon TSV");
  search_cmd->add_option("--profiles", search.profiles, "Profile store directory")->capture_default_str();
  search_cmd->add_option("--user", search.user);
  search_cmd->add_option("--query,-q", search.query)->required();
  search_cmd->add_option("-k", search.k, "Result count (default: the user's delivery setting or 10)");
  search_cmd->add_option("--beta", search.beta)->capture_default_str();
  search_cmd->add_flag("--strict", search.strict, "Drop results unrelated to the user's interests");
  search_cmd->add_option("--tau", search.tau)->capture_default_str();
  search_cmd->add_option("--alpha", search.alpha, "Weight of expansion terms")->capture_default_str();
  search_cmd->add_option("--max-per-term", search.max_per_term)->capture_default_str();
  search_cmd->add_flag("--no-expand", search.no_expand);
  search_cmd->add_flag("--json", search.json, "Print the structured response");
  search_cmd->callback([&] { status = run_search(search); });

  auto* profile_cmd = app.add_subcommand("profile", "Manage user profiles");
  profile_cmd->require_subcommand(1);
  std::string profiles = "profiles", user, form_file, now_text, posts_file, artifact, signal;
  double half_life = ProfileConfig{}.half_life_days;
  bool dry_run = false;
  auto store_opt = [&](CLI::App* cmd) {
    cmd->add_option("--profiles", profiles, "Profile store directory")->capture_default_str();
  };

  auto* init_cmd = profile_cmd->add_subcommand("init", "Create a profile from an explicit form");
  init_cmd->add_option("--file", form_file)->required();
  init_cmd->add_option("--now", now_text);
  store_opt(init_cmd);
  init_cmd->callback([&] {
    const auto form = nlohmann::json::parse(read_file(form_file));
    print_json(ProfileStore(profiles).create(form, timestamp_arg(now_text)));
  });

  auto* show_cmd = profile_cmd->add_subcommand("show", "Print a profile");
  show_cmd->add_option("--user", user)->required();
  store_opt(show_cmd);
  show_cmd->callback([&] { print_json(ProfileStore(profiles).load(user)); });

  auto* decay_cmd = profile_cmd->add_subcommand("decay", "Apply temporal decay to interest weights");
  decay_cmd->add_option("--user", user)->required();
  decay_cmd->add_option("--now", now_text);
  decay_cmd->add_option("--half-life", half_life, "Days")->capture_default_str();
  decay_cmd->add_flag("--dry-run", dry_run, "Print without saving");
  store_opt(decay_cmd);
  decay_cmd->callback([&] {
    ProfileStore store(profiles);
    const auto profile = apply_decay(store.load(user), timestamp_arg(now_text), half_life);
    if (!dry_run) store.save(profile);
    print_json(profile);
  });

  std::string profile_index, profile_ontology;
  auto* posts_cmd = profile_cmd->add_subcommand("ingest-posts", "Implicit profiling from a user's posts");
  posts_cmd->add_option("--user", user)->required();
  posts_cmd->add_option("--posts", posts_file, "Posts as corpus JSON-lines")->required();
  auto* posts_onto = posts_cmd->add_option("--ontology", profile_ontology);
  posts_cmd->add_option("--index", profile_index, "Use the ontology embedded in an index")->excludes(posts_onto);
  posts_cmd->add_option("--now", now_text);
  store_opt(posts_cmd);
  posts_cmd->callback([&] {
    if (profile_ontology.empty() && profile_index.empty()) {
      throw CLI::RequiredError("--ontology or --index");
    }
    const auto ontology =
        profile_ontology.empty() ? InvertedIndex::load(profile_index).ontology() : load_ontology(profile_ontology);
    ProfileStore store(profiles);
    const auto posts = read_corpus(read_file(posts_file));
    const auto profile = ingest_posts(store.load(user), posts, ontology, timestamp_arg(now_text));
    store.save(profile);
    print_json(profile);
  });

  auto* feedback_cmd = profile_cmd->add_subcommand("feedback", "Record explicit relevance feedback");
  feedback_cmd->add_option("--user", user)->required();
  feedback_cmd->add_option("--index", profile_index)->required();
  feedback_cmd->add_option("--artifact", artifact)->required();
  feedback_cmd->add_option("--signal", signal, "relevant or not_relevant")->required();
  feedback_cmd->add_option("--now", now_text);
  store_opt(feedback_cmd);
  feedback_cmd->callback([&] {
    const auto index = InvertedIndex::load(profile_index);
    const auto parsed = parse_feedback_signal(signal);
    if (!parsed) throw Error(ErrorCode::InvalidField, "signal must be 'relevant' or 'not_relevant'");
    ProfileStore store(profiles);
    const FeedbackEvent event{user, artifact, *parsed, timestamp_arg(now_text)};
    const auto profile =
        record_feedback(store.load(user), event, [&](std::string_view id) { return index.doc_concepts(id); });
    store.save(profile);
    print_json(profile);
  });

  std::string rec_index, rec_ontology, rec_profiles = "profiles", rec_user;
  std::optional<std::size_t> rec_k;
  bool rec_json = false;
  auto* rec_cmd = app.add_subcommand("recommend", "Query-less feed from the user's interests");
  rec_cmd->add_option("--index", rec_index)->required();
  rec_cmd->add_option("--ontology", rec_ontology, "Checked against the index's ontology");
  rec_cmd->add_option("--profiles", rec_profiles)->capture_default_str();
  rec_cmd->add_option("--user", rec_user);
  rec_cmd->add_option("-k", rec_k);
  rec_cmd->add_flag("--json", rec_json);
  rec_cmd->callback([&] { status = run_recommend(rec_index, rec_ontology, rec_profiles, rec_user, rec_k, rec_json); });

  std::string cls_index, cls_labels, cls_artifact;
  auto* cls_cmd = app.add_subcommand("classify", "Nearest-centroid label for an indexed artifact");
  cls_cmd->add_option("--index", cls_index)->required();
  cls_cmd->add_option("--labels", cls_labels, "artifact_id<TAB>label")->required();
  cls_cmd->add_option("--artifact", cls_artifact)->required();
  cls_cmd->callback([&] { status = run_classify(cls_index, cls_labels, cls_artifact); });

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Run queries and score them against graded judgments");
  eval_cmd->add_option("--index", eval.index)->required();
  eval_cmd->add_option("--lexicon", eval.lexicon);
  eval_cmd->add_option("--queries", eval.queries, "query_id<TAB>text")->required();
  eval_cmd->add_option("--qrels", eval.qrels, "query_id<TAB>artifact_id<TAB>grade")->required();
  eval_cmd->add_option("-k", eval.k)->capture_default_str()->check(CLI::PositiveNumber);
  eval_cmd->add_option("--user", eval.user, "Personalize the run and store the metrics in this profile");
  eval_cmd->add_option("--profiles", eval.profiles)->capture_default_str();
  eval_cmd->add_flag("--no-expand", eval.no_expand);
  eval_cmd->add_flag("--json", eval.json);
  eval_cmd->callback([&] { status = run_eval(eval); });

  ServiceConfig serve;
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP service");
  const char* config_env = std::getenv("DEVREC_CONFIG");
  serve_cmd->set_config("--config", config_env ? config_env : "", "Config file mirroring the flags (env DEVREC_CONFIG)");
  serve_cmd->add_option("--host", serve.host)->capture_default_str();
  serve_cmd->add_option("--port", serve.port)->capture_default_str();
  serve_cmd->add_option("--index", serve.index_path);
  serve_cmd->add_option("--ontology", serve.ontology_path);
  serve_cmd->add_option("--lexicon", serve.lexicon_path);
  serve_cmd->add_option("--profiles", serve.profiles_path)->capture_default_str();
  serve_cmd->add_flag("--allow-ingest", serve.allow_ingest, "Enable POST /artifact");
  serve_cmd->callback([&] { status = run_serve(serve); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: ParseError: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return status;
}
