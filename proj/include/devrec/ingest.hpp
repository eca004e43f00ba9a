#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "devrec/timestamp.hpp"

namespace devrec {

using ConceptId = std::string;
using ConceptSet = std::set<ConceptId>;

enum class SourceFormat { JsonLines, Csv, XmlLite };

/// Accepts `jsonl`, `json-lines`, `csv`, `xml`, `xml-lite`.
SourceFormat parse_source_format(std::string_view name);
std::string_view to_string(SourceFormat format);

struct SourceRecord {
  std::string source_id;
  SourceFormat format = SourceFormat::JsonLines;
  std::map<std::string, std::string> fields;
  std::string origin;

  bool operator==(const SourceRecord&) const = default;
};

enum class ArtifactKind { CodeSnippet, QaThread, Tutorial, ApiDoc, Library, Post };

std::optional<ArtifactKind> parse_artifact_kind(std::string_view name);
std::string_view to_string(ArtifactKind kind);

struct Artifact {
  std::string id;
  ArtifactKind kind = ArtifactKind::Post;
  std::string title;
  std::string body;
  std::optional<std::string> url;
  std::string source;
  Timestamp created_at{};
  std::set<std::string> tags;
  ConceptSet concepts;

  bool operator==(const Artifact&) const = default;
};

void to_json(nlohmann::json& j, const Artifact& a);
void from_json(const nlohmann::json& j, Artifact& a);

struct ParseResult {
  std::vector<SourceRecord> records;
  std::size_t skipped = 0;
};

/// Splits a payload into records. Malformed records are skipped and counted;
/// only an empty payload aborts.
///
/// Each record needs an `id` (or `source_id`) field and at least one of
/// `title` / `body`. CSV payloads start with a header row and follow RFC 4180
/// quoting. xml-lite payloads are `<record>` elements holding flat child
/// elements, optionally wrapped in one root element.
ParseResult parse_source(SourceFormat format, std::string_view payload, std::string_view origin);

/// Trims and strips control characters, drops records with empty title+body,
/// and collapses duplicates (same origin+source_id, or identical title+body
/// after whitespace normalization). Among duplicates the earliest
/// `created_at` survives; missing or unparseable timestamps sort last and
/// ties fall back to input order. Survivors keep their input order.
std::vector<SourceRecord> cleanse(const std::vector<SourceRecord>& records);

/// Which source fields feed which artifact field. The first alias present
/// wins.
struct FieldMap {
  std::vector<std::string> title{"title", "subject", "name"};
  std::vector<std::string> body{"body", "text", "content", "description", "question"};
  std::vector<std::string> url{"url", "link", "href"};
  std::vector<std::string> created_at{"created_at", "date", "timestamp", "published"};
  std::vector<std::string> kind{"kind", "type"};
  std::vector<std::string> tags{"tags", "labels"};
};

/// Maps a cleansed record onto an Artifact with id `origin:source_id`.
/// Missing or unparseable `created_at` becomes `ingested_at`; timestamps
/// after `ingested_at` are clamped to it.
Artifact normalize(const SourceRecord& record, std::optional<ArtifactKind> kind_hint,
                   Timestamp ingested_at, const FieldMap& field_map = {});

/// Collapses whitespace runs to one space and trims.
std::string normalize_whitespace(std::string_view text);

/// Artifacts keyed by id; insertion order is preserved.
class Corpus {
 public:
  Corpus() = default;
  explicit Corpus(std::vector<Artifact> artifacts);

  /// Throws `DuplicateArtifactId` on collision.
  void add(Artifact artifact);

  const Artifact* find(std::string_view id) const;
  const std::vector<Artifact>& artifacts() const noexcept { return artifacts_; }
  std::size_t size() const noexcept { return artifacts_.size(); }

 private:
  std::vector<Artifact> artifacts_;
  std::map<std::string, std::size_t, std::less<>> by_id_;
};

/// One artifact per line; `concepts` is written only when non-empty.
std::string write_corpus(const std::vector<Artifact>& artifacts);
std::vector<Artifact> read_corpus(std::string_view jsonl);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

}  // namespace devrec
