#include "devrec/eval.hpp"

#include <algorithm>
#include <functional>
#include <set>

#include <fmt/format.h>

#include "devrec/error.hpp"
#include "devrec/text.hpp"

namespace devrec {

namespace {

template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (trim(line).empty() || trim(line).front() == '#') continue;
    fn(line_no, line);
  }
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> cols;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    cols.push_back(trim(line.substr(start, tab - start)));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return cols;
}

std::size_t relevant_in_top(const std::vector<std::string>& ranked, const std::map<std::string, int>& judged,
                            std::size_t k) {
  std::size_t hits = 0;
  for (std::size_t i = 0; i < std::min(k, ranked.size()); ++i) {
    if (auto it = judged.find(ranked[i]); it != judged.end() && it->second >= 1) ++hits;
  }
  return hits;
}

std::size_t relevant_total(const std::map<std::string, int>& judged) {
  return static_cast<std::size_t>(
      std::count_if(judged.begin(), judged.end(), [](const auto& e) { return e.second >= 1; }));
}

}  // namespace

int Judgments::grade(const std::string& query_id, const std::string& artifact_id) const {
  auto it = entries.find({query_id, artifact_id});
  return it == entries.end() ? 0 : it->second;
}

std::map<std::string, int> Judgments::for_query(const std::string& query_id) const {
  std::map<std::string, int> out;
  for (auto it = entries.lower_bound({query_id, std::string()}); it != entries.end() && it->first.first == query_id;
       ++it) {
    out.emplace(it->first.second, it->second);
  }
  return out;
}

Judgments parse_qrels(std::string_view tsv) {
  Judgments j;
  for_each_line(tsv, [&](std::size_t line_no, std::string_view line) {
    const auto cols = split_tabs(line);
    if (cols.size() != 3 || cols[0].empty() || cols[1].empty()) {
      throw Error(ErrorCode::ParseError, fmt::format("qrels line {}: expected query<TAB>artifact<TAB>grade", line_no));
    }
    int grade = 0;
    try {
      std::size_t used = 0;
      grade = std::stoi(std::string(cols[2]), &used);
      if (used != cols[2].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw Error(ErrorCode::ParseError, fmt::format("qrels line {}: bad grade '{}'", line_no, cols[2]));
    }
    if (grade < 0 || grade > 3) {
      throw Error(ErrorCode::InvalidField, fmt::format("qrels line {}: grade {} outside [0,3]", line_no, grade));
    }
    if (!j.entries.emplace(std::pair{std::string(cols[0]), std::string(cols[1])}, grade).second) {
      throw Error(ErrorCode::DuplicateId, fmt::format("qrels line {}: duplicate judgment", line_no));
    }
  });
  return j;
}

std::vector<std::pair<std::string, std::string>> parse_queries(std::string_view tsv) {
  std::vector<std::pair<std::string, std::string>> out;
  std::set<std::string, std::less<>> ids;
  for_each_line(tsv, [&](std::size_t line_no, std::string_view line) {
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos) {
      throw Error(ErrorCode::ParseError, fmt::format("queries line {}: expected id<TAB>text", line_no));
    }
    std::string id(trim(line.substr(0, tab)));
    if (!ids.insert(id).second) throw Error(ErrorCode::DuplicateId, fmt::format("queries line {}: duplicate id", line_no));
    out.emplace_back(std::move(id), std::string(trim(line.substr(tab + 1))));
  });
  return out;
}

double precision_at_k(const std::vector<std::string>& ranked, const std::map<std::string, int>& judged,
                      std::size_t k) {
  return static_cast<double>(relevant_in_top(ranked, judged, k)) / static_cast<double>(k);
}

double recall_at_k(const std::vector<std::string>& ranked, const std::map<std::string, int>& judged,
                   std::size_t k) {
  const auto total = relevant_total(judged);
  return total == 0 ? 0.0 : static_cast<double>(relevant_in_top(ranked, judged, k)) / static_cast<double>(total);
}

double reciprocal_rank(const std::vector<std::string>& ranked, const std::map<std::string, int>& judged,
                       std::size_t k) {
  for (std::size_t i = 0; i < std::min(k, ranked.size()); ++i) {
    if (auto it = judged.find(ranked[i]); it != judged.end() && it->second >= 1) return 1.0 / static_cast<double>(i + 1);
  }
  return 0.0;
}

double ndcg_at_k(const std::vector<std::string>& ranked, const std::map<std::string, int>& judged,
                 std::size_t k) {
  const auto depth = std::min(k, ranked.size());
  Eigen::ArrayXd gains(static_cast<Eigen::Index>(depth));
  for (std::size_t i = 0; i < depth; ++i) {
    auto it = judged.find(ranked[i]);
    gains[static_cast<Eigen::Index>(i)] = it == judged.end() ? 0.0 : it->second;
  }
  std::vector<double> ideal_grades;
  for (const auto& [id, g] : judged) ideal_grades.push_back(g);
  std::sort(ideal_grades.begin(), ideal_grades.end(), std::greater<>());
  ideal_grades.resize(std::min(k, ideal_grades.size()));
  const Eigen::Map<const Eigen::ArrayXd> ideal(ideal_grades.data(), static_cast<Eigen::Index>(ideal_grades.size()));
  const double idcg = dcg(ideal);
  return idcg > 0.0 ? dcg(gains) / idcg : 0.0;
}

std::map<std::string, double> EvalReport::summary() const {
  return {{fmt::format("P@{}", k), macro.precision},
          {fmt::format("R@{}", k), macro.recall},
          {"MRR", macro.mrr},
          {fmt::format("nDCG@{}", k), macro.ndcg}};
}

EvalReport evaluate(const Run& run, const Judgments& judgments, std::size_t k) {
  if (k == 0) throw Error(ErrorCode::InvalidField, "k must be at least 1");
  if (run.empty()) throw Error(ErrorCode::EmptyRun, "run contains no queries");
  EvalReport report;
  report.k = k;
  for (const auto& [qid, ranked] : run) {
    std::set<std::string, std::less<>> unique(ranked.begin(), ranked.end());
    if (unique.size() != ranked.size()) {
      throw Error(ErrorCode::InvalidField, "run for query '" + qid + "' lists an artifact twice");
    }
    const auto judged = judgments.for_query(qid);
    if (relevant_total(judged) == 0) {
      ++report.skipped;
      continue;
    }
    Metrics m{precision_at_k(ranked, judged, k), recall_at_k(ranked, judged, k),
              reciprocal_rank(ranked, judged, k), ndcg_at_k(ranked, judged, k)};
    report.per_query.emplace(qid, m);
    report.macro.precision += m.precision;
    report.macro.recall += m.recall;
    report.macro.mrr += m.mrr;
    report.macro.ndcg += m.ndcg;
    ++report.evaluated;
  }
  if (report.evaluated > 0) {
    const auto n = static_cast<double>(report.evaluated);
    report.macro.precision /= n;
    report.macro.recall /= n;
    report.macro.mrr /= n;
    report.macro.ndcg /= n;
  }
  return report;
}

}  // namespace devrec
