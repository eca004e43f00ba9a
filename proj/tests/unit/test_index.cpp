#include <random>

#include <gtest/gtest.h>

#include "devrec/error.hpp"
#include "devrec/index.hpp"
#include "devrec/profile.hpp"
#include "support.hpp"

using namespace devrec;
using namespace devrec::testing;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorCode::ParseError;
}

Artifact doc(std::string id, std::string title, std::string body, ConceptSet concepts = {}) {
  Artifact a;
  a.id = std::move(id);
  a.title = std::move(title);
  a.body = std::move(body);
  a.source = "t";
  a.created_at = ts("2020-01-01T00:00:00Z");
  a.concepts = std::move(concepts);
  return a;
}

void expect_matches_brute(const InvertedIndex& index, const std::vector<Artifact>& corpus) {
  const auto counts = brute_counts(corpus);
  EXPECT_EQ(index.vocabulary_size(), counts.size());
  std::set<std::string> indexed;
  for (const auto& [term, docs] : counts) {
    ASSERT_EQ(index.df(term), docs.size()) << term;
    std::vector<std::pair<std::string, std::uint32_t>> want(docs.begin(), docs.end());
    ASSERT_EQ(index.postings(term), want) << term;
    for (const auto& [id, tf] : docs) indexed.insert(id);
  }
  EXPECT_EQ(index.size(), indexed.size());
  EXPECT_EQ(index.excluded_count(), corpus.size() - indexed.size());
}

std::vector<std::string> ids(const std::vector<RankedResult>& results) {
  std::vector<std::string> out;
  for (const auto& r : results) out.push_back(r.artifact_id);
  return out;
}

std::set<std::string> candidates(const InvertedIndex& index, const ExpandedQuery& q) {
  std::set<std::string> out;
  for (const auto& r : search(index, q, nullptr, {.k = index.size() + 1})) out.insert(r.artifact_id);
  return out;
}

}  // namespace

TEST(Index, ScrumCountingExample) {
  const auto index = InvertedIndex::build(
      {doc("d1", "", "scrum sprint scrum"), doc("d2", "", "kanban board"), doc("d3", "", "waterfall plan")},
      tree_ontology());
  EXPECT_EQ(index.size(), 3u);
  EXPECT_EQ(index.df("scrum"), 1u);
  const std::vector<std::pair<std::string, std::uint32_t>> want{{"d1", 2}};
  EXPECT_EQ(index.postings("scrum"), want);
  EXPECT_EQ(index.df("missing"), 0u);
  EXPECT_TRUE(index.postings("missing").empty());
}

TEST(Index, TitleCountsTwice) {
  const auto index = InvertedIndex::build({doc("d1", "scrum", "scrum")}, tree_ontology());
  EXPECT_EQ(index.postings("scrum").at(0).second, 3u);
  const auto single = InvertedIndex::build({doc("d1", "scrum", "scrum")}, tree_ontology(), {.double_title = false});
  EXPECT_EQ(single.postings("scrum").at(0).second, 2u);
}

TEST(Index, EmptyCorpus) {
  const auto index = InvertedIndex::build({}, tree_ontology());
  EXPECT_EQ(index.size(), 0u);
  EXPECT_TRUE(search(index, original_query("scrum"), nullptr).empty());
}

TEST(Index, ExcludesTokenlessDocuments) {
  const auto index = InvertedIndex::build({doc("d1", "", "the a of"), doc("d2", "", "scrum")}, tree_ontology());
  EXPECT_EQ(index.size(), 1u);
  EXPECT_EQ(index.excluded_count(), 1u);
  EXPECT_FALSE(index.find("d1"));
}

TEST(Index, DuplicateArtifactId) {
  EXPECT_EQ(code_of([] { InvertedIndex::build({doc("d1", "", "a1"), doc("d1", "", "b2")}, tree_ontology()); }),
            ErrorCode::DuplicateArtifactId);
  auto index = InvertedIndex::build({doc("d1", "", "scrum")}, tree_ontology());
  EXPECT_EQ(code_of([&] { index.add_document(doc("d1", "", "other")); }), ErrorCode::DuplicateArtifactId);
}

TEST(Index, MatchesBruteCounterOn100Docs) {
  std::mt19937_64 rng(7);
  const auto corpus = synthetic_corpus(rng, 100, 300, 40);
  expect_matches_brute(InvertedIndex::build(corpus, tree_ontology()), corpus);
}

TEST(Index, IdfAndDocumentVector) {
  const auto index = InvertedIndex::build(
      {doc("d1", "", "scrum scrum"), doc("d2", "", "kanban"), doc("d3", "", "waterfall")}, tree_ontology());
  const auto id = *index.term_id("scrum");
  EXPECT_NEAR(index.idf(id), std::log(4.0), 1e-12);
  const auto v = index.document_vector(*index.find("d1"));
  EXPECT_NEAR(v.coeff(id), 2.0 * std::log(4.0), 1e-12);
  EXPECT_NEAR(index.doc_norm(*index.find("d1")), 2.0 * std::log(4.0), 1e-12);
}

TEST(Index, QueryVectorDropsUnknownTerms) {
  const auto index = InvertedIndex::build({doc("d1", "", "scrum"), doc("d2", "", "kanban")}, tree_ontology());
  ExpandedQuery q;
  q.terms = {{"scrum", 1.0}, {"nowhere", 1.0}, {"kanban", 0.5}};
  const auto v = index.query_vector(q);
  EXPECT_EQ(v.nonZeros(), 2);
  EXPECT_NEAR(v.coeff(*index.term_id("kanban")), 0.5 * std::log(3.0), 1e-12);
}

TEST(IndexProperty, IncrementalAddMatchesBuild) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    auto corpus = synthetic_corpus(rng, 60, 80, 20);
    corpus.push_back(doc("empty", "", "the"));
    const auto built = InvertedIndex::build(corpus, tree_ontology());
    InvertedIndex incremental(tree_ontology());
    for (const auto& a : corpus) incremental.add_document(a);
    ASSERT_EQ(built.size(), incremental.size());
    ASSERT_EQ(built.excluded_count(), incremental.excluded_count());
    ASSERT_EQ(built.vocabulary_size(), incremental.vocabulary_size());
    for (TermId t = 0; t < static_cast<TermId>(built.vocabulary_size()); ++t) {
      const auto& term = built.term(t);
      ASSERT_EQ(built.postings(term), incremental.postings(term));
    }
    expect_matches_brute(incremental, corpus);
    const auto q = random_query(rng, 80, 4);
    ASSERT_EQ(search(built, q, nullptr, {.k = 100}), search(incremental, q, nullptr, {.k = 100}));
  }
}

TEST(InterestOverlap, HandExamples) {
  const auto onto = tree_ontology();
  EXPECT_NEAR(interest_overlap({"t:Job"}, {{"t:Tutorial", 0.75}, {"t:Job", 0.25}}, onto), 0.75, 1e-4);
  EXPECT_DOUBLE_EQ(interest_overlap({"t:Job"}, {{"t:Job", 1.0}}, onto), 1.0);
  EXPECT_EQ(interest_overlap({"t:Job"}, {}, onto), 0.0);
  EXPECT_EQ(interest_overlap({}, {{"t:Job", 1.0}}, onto), 0.0);
  EXPECT_EQ(interest_overlap({"t:Job"}, {{"x:Unknown", 1.0}}, onto), 0.0);
  EXPECT_NEAR(max_interest_similarity({"t:Misc"}, {{"t:Job", 1.0}}, onto), 0.05, 1e-12);
}

TEST(Search, TweetScenario) {
  const auto onto = shipped_ontology();
  const auto lexicon = shipped_lexicon();
  const auto index = InvertedIndex::build(tweet_corpus(onto), onto);

  const auto a = search(index, expand("tutorials on MAD methodologies", lexicon, onto), nullptr);
  ASSERT_GE(a.size(), 2u);
  EXPECT_EQ((std::set<std::string>{a[0].artifact_id, a[1].artifact_id}),
            (std::set<std::string>{"tweet:1", "tweet:3"}));
  for (std::size_t i = 2; i < a.size(); ++i) EXPECT_LT(a[i].final_score, a[1].final_score);

  const auto b = search(index, expand("job in a MAD project", lexicon, onto), nullptr);
  ASSERT_FALSE(b.empty());
  EXPECT_EQ(b[0].artifact_id, "tweet:2");
  for (std::size_t i = 1; i < b.size(); ++i) EXPECT_LT(b[i].final_score, b[0].final_score);
}

TEST(Search, MatchedTermsAndTruncation) {
  const auto index = InvertedIndex::build(
      {doc("d1", "", "scrum sprint"), doc("d2", "", "scrum kanban"), doc("d3", "", "sprint")}, tree_ontology());
  const auto r = search(index, original_query("scrum sprint"), nullptr, {.k = 2});
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r[0].artifact_id, "d1");
  EXPECT_EQ(r[0].matched_terms, (std::set<std::string>{"scrum", "sprint"}));
  EXPECT_NEAR(r[0].cosine, r[0].final_score, 0.0);
}

TEST(SearchProperty, BruteForceEquivalence) {
  const auto onto = tree_ontology();
  const auto concepts = class_ids(onto);
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> beta(0.0, 2.0), tau(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  for (int corpus_no = 0; corpus_no < 20; ++corpus_no) {
    const auto corpus = synthetic_corpus(rng, 20 + corpus_no * 9, 150, 30, concepts);
    const auto index = InvertedIndex::build(corpus, onto);
    expect_matches_brute(index, corpus);
    for (int query_no = 0; query_no < 10; ++query_no) {
      const auto q = random_query(rng, 150, 5);
      const auto profile = random_profile(rng, "u", concepts);
      const bool use_profile = coin(rng);
      const SearchOptions options{.k = index.size(), .beta = beta(rng), .strict = coin(rng), .tau = tau(rng)};
      const auto got = search(index, q, use_profile ? &profile : nullptr, options);
      const auto want = brute_search(corpus, q, use_profile ? top_interests(profile, 10) : WeightedInterests{}, onto,
                                     options.beta, options.strict, options.tau);
      ASSERT_TRUE(same_ranking(got, want)) << "corpus " << corpus_no << " query " << query_no;
    }
  }
}

TEST(SearchProperty, TopKIsPrefixOfFullRanking) {
  std::mt19937_64 rng(5);
  const auto corpus = synthetic_corpus(rng, 20, 40, 15);
  const auto index = InvertedIndex::build(corpus, tree_ontology());
  for (int i = 0; i < 50; ++i) {
    const auto q = random_query(rng, 40, 3);
    const auto full = search(index, q, nullptr, {.k = 20});
    const auto top = search(index, q, nullptr, {.k = 5});
    ASSERT_EQ(top, std::vector<RankedResult>(full.begin(), full.begin() + std::min<std::size_t>(5, full.size())));
  }
}

TEST(SearchProperty, QueryScalingKeepsOrder) {
  const auto onto = tree_ontology();
  std::mt19937_64 rng(99);
  const auto corpus = synthetic_corpus(rng, 150, 200, 40, class_ids(onto));
  const auto index = InvertedIndex::build(corpus, onto);
  const auto profile = random_profile(rng, "u", class_ids(onto));
  for (int i = 0; i < 100; ++i) {
    const auto q = random_query(rng, 200, 5);
    const auto base = search(index, q, &profile, {.k = 150});
    for (double lambda : {0.1, 3.0, 10.0}) {
      auto scaled = q;
      for (auto& [term, w] : scaled.terms) w *= lambda;
      const auto got = search(index, scaled, &profile, {.k = 150});
      ASSERT_EQ(ids(got), ids(base)) << "lambda " << lambda;
      for (std::size_t r = 0; r < got.size(); ++r) ASSERT_NEAR(got[r].cosine, base[r].cosine, 1e-12);
    }
  }
}

TEST(SearchProperty, ZeroBetaIsPureCosine) {
  const auto onto = tree_ontology();
  std::mt19937_64 rng(3);
  const auto corpus = synthetic_corpus(rng, 120, 100, 30, class_ids(onto));
  const auto index = InvertedIndex::build(corpus, onto);
  for (int i = 0; i < 50; ++i) {
    const auto profile = random_profile(rng, "u", class_ids(onto));
    const auto q = random_query(rng, 100, 4);
    const auto with = search(index, q, &profile, {.k = 120, .beta = 0.0});
    const auto without = search(index, q, nullptr, {.k = 120});
    ASSERT_EQ(ids(with), ids(without));
    for (const auto& r : with) ASSERT_EQ(r.final_score, r.cosine);
  }
}

TEST(SearchProperty, BoostBound) {
  const auto onto = tree_ontology();
  std::mt19937_64 rng(17);
  const auto corpus = synthetic_corpus(rng, 100, 100, 30, class_ids(onto));
  const auto index = InvertedIndex::build(corpus, onto);
  for (int i = 0; i < 50; ++i) {
    const auto profile = random_profile(rng, "u", class_ids(onto));
    for (const auto& r : search(index, random_query(rng, 100, 4), &profile, {.k = 100, .beta = 1.5})) {
      ASSERT_GE(r.interest_overlap, 0.0);
      ASSERT_LE(r.interest_overlap, 1.0);
      ASSERT_LE(r.final_score, r.cosine * 2.5 + 1e-15);
      if (r.interest_overlap == 1.0) ASSERT_DOUBLE_EQ(r.final_score, r.cosine * 2.5);
    }
  }
}

TEST(SearchProperty, StrictFilterOnlyRemoves) {
  const auto onto = tree_ontology();
  std::mt19937_64 rng(23);
  const auto corpus = synthetic_corpus(rng, 100, 60, 20, class_ids(onto));
  const auto index = InvertedIndex::build(corpus, onto);
  for (int i = 0; i < 30; ++i) {
    auto profile = random_profile(rng, "u", class_ids(onto));
    const auto q = random_query(rng, 60, 3);
    const auto loose = candidates(index, q);
    for (const auto& r : search(index, q, &profile, {.k = 100, .strict = true, .tau = 0.5})) {
      ASSERT_TRUE(loose.contains(r.artifact_id));
      if (!profile.interests.empty()) {
        ASSERT_GE(max_interest_similarity(*index.doc_concepts(r.artifact_id), top_interests(profile, 10), onto),
                  0.5);
      }
    }
  }
}

TEST(SearchProperty, ExpansionOnlyAddsCandidates) {
  const auto onto = shipped_ontology();
  const auto lexicon = shipped_lexicon();
  std::vector<std::string> words;
  for (const auto& s : lexicon.synsets) {
    for (const auto& t : s.terms) words.push_back(t);
  }
  for (const auto& inst : onto.instances()) {
    for (const auto& f : inst.surface_forms) words.push_back(f);
  }
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<std::size_t> pick(0, words.size() - 1);
  std::uniform_int_distribution<int> len(1, 8);
  std::vector<Artifact> corpus;
  for (int d = 0; d < 200; ++d) {
    std::string body;
    for (int i = 0, n = len(rng); i < n; ++i) body += words[pick(rng)] + " ";
    corpus.push_back(annotate(doc(fmt::format("d{:03}", d), "", body), onto));
  }
  const auto index = InvertedIndex::build(corpus, onto);
  for (int i = 0; i < 100; ++i) {
    std::string query = words[pick(rng)] + " " + words[pick(rng)];
    const auto plain = candidates(index, original_query(query));
    const auto expanded = candidates(index, expand(query, lexicon, onto));
    for (const auto& id : plain) ASSERT_TRUE(expanded.contains(id)) << query;
  }
}

TEST(SearchProperty, Deterministic) {
  std::mt19937_64 rng(41);
  const auto corpus = synthetic_corpus(rng, 80, 50, 20);
  const auto a = InvertedIndex::build(corpus, tree_ontology());
  const auto b = InvertedIndex::build(corpus, tree_ontology());
  EXPECT_EQ(a.serialize(), b.serialize());
  const auto q = random_query(rng, 50, 4);
  EXPECT_EQ(search(a, q, nullptr, {.k = 80}), search(b, q, nullptr, {.k = 80}));
}

TEST(IndexIo, RoundTripGivesIdenticalResults) {
  const auto onto = tree_ontology();
  std::mt19937_64 rng(8);
  const auto corpus = synthetic_corpus(rng, 150, 120, 30, class_ids(onto));
  const auto index = InvertedIndex::build(corpus, onto);
  TempDir dir;
  index.save(dir.file("index.bin"));
  const auto loaded = InvertedIndex::load(dir.file("index.bin"));
  EXPECT_EQ(loaded.serialize(), index.serialize());
  EXPECT_EQ(loaded.ontology().to_json(), onto.to_json());
  expect_matches_brute(loaded, corpus);
  for (int i = 0; i < 20; ++i) {
    const auto profile = random_profile(rng, "u", class_ids(onto));
    const auto q = random_query(rng, 120, 4);
    const auto want = search(index, q, &profile, {.k = 150});
    const auto got = search(loaded, q, &profile, {.k = 150});
    ASSERT_EQ(got, want);
    for (std::size_t r = 0; r < got.size(); ++r) {
      ASSERT_EQ(std::bit_cast<std::uint64_t>(got[r].final_score), std::bit_cast<std::uint64_t>(want[r].final_score));
    }
  }
}

TEST(IndexIo, RejectsCorruptInput) {
  const auto bytes = InvertedIndex::build({doc("d1", "", "scrum"), doc("d2", "", "kanban")}, tree_ontology())
                         .serialize();
  EXPECT_EQ(code_of([] { InvertedIndex::deserialize("nonsense"); }), ErrorCode::ParseError);
  EXPECT_EQ(code_of([&] { InvertedIndex::deserialize(bytes.substr(0, bytes.size() - 1)); }), ErrorCode::ParseError);
  EXPECT_EQ(code_of([&] { InvertedIndex::deserialize(bytes + "x"); }), ErrorCode::ParseError);
  auto bad_version = bytes;
  bad_version[8] = 9;
  EXPECT_EQ(code_of([&] { InvertedIndex::deserialize(bad_version); }), ErrorCode::ParseError);
  for (std::size_t cut = 0; cut < bytes.size(); cut += 7) {
    EXPECT_THROW(InvertedIndex::deserialize(bytes.substr(0, cut)), Error);
  }
}
