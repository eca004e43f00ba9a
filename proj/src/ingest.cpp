#include "devrec/ingest.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "devrec/error.hpp"
#include "devrec/text.hpp"

namespace devrec {

namespace {

bool valid_utf8(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t extra = 0;
    if (c < 0x80) {
      extra = 0;
    } else if ((c & 0xE0) == 0xC0 && c >= 0xC2) {
      extra = 1;
    } else if ((c & 0xF0) == 0xE0) {
      extra = 2;
    } else if ((c & 0xF8) == 0xF0 && c <= 0xF4) {
      extra = 3;
    } else {
      return false;
    }
    if (i + extra >= s.size() && extra > 0) return false;
    for (std::size_t k = 1; k <= extra; ++k) {
      if ((static_cast<unsigned char>(s[i + k]) & 0xC0) != 0x80) return false;
    }
    i += extra + 1;
  }
  return true;
}

// Returns the record's source id, or empty when the record is unusable.
std::string identity_of(const std::map<std::string, std::string>& fields) {
  for (const char* key : {"id", "source_id"}) {
    if (auto it = fields.find(key); it != fields.end()) {
      const auto id = trim(it->second);
      if (!id.empty()) return std::string(id);
    }
  }
  return {};
}

bool has_content_field(const std::map<std::string, std::string>& fields) {
  return fields.contains("title") || fields.contains("body");
}

bool accept(SourceRecord& record, std::string_view origin, SourceFormat format) {
  record.source_id = identity_of(record.fields);
  if (record.source_id.empty() || !has_content_field(record.fields)) return false;
  for (const auto& [k, v] : record.fields) {
    if (!valid_utf8(k) || !valid_utf8(v)) return false;
  }
  record.origin = std::string(origin);
  record.format = format;
  return true;
}

std::string json_value_text(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_null()) return {};
  if (v.is_array()) {
    std::string out;
    for (const auto& e : v) {
      if (!out.empty()) out.push_back(',');
      out += json_value_text(e);
    }
    return out;
  }
  return v.dump();
}

std::vector<std::string_view> split_lines(std::string_view payload) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= payload.size()) {
    auto end = payload.find('\n', start);
    if (end == std::string_view::npos) end = payload.size();
    auto line = payload.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  return lines;
}

ParseResult parse_json_lines(std::string_view payload, std::string_view origin) {
  ParseResult result;
  for (const auto line : split_lines(payload)) {
    if (trim(line).empty()) continue;
    SourceRecord record;
    try {
      const auto j = nlohmann::json::parse(line);
      if (!j.is_object()) {
        ++result.skipped;
        continue;
      }
      for (const auto& [key, value] : j.items()) record.fields[key] = json_value_text(value);
    } catch (const nlohmann::json::exception&) {
      ++result.skipped;
      continue;
    }
    if (accept(record, origin, SourceFormat::JsonLines)) {
      result.records.push_back(std::move(record));
    } else {
      ++result.skipped;
    }
  }
  return result;
}

// RFC 4180 rows; quoted fields may span lines. A row with an unterminated
// quote is reported as malformed via `ok`.
struct CsvRow {
  std::vector<std::string> cells;
  bool ok = true;
};

std::vector<CsvRow> split_csv(std::string_view payload) {
  std::vector<CsvRow> rows;
  CsvRow row;
  std::string cell;
  bool in_quotes = false;
  bool row_has_data = false;
  for (std::size_t i = 0; i < payload.size(); ++i) {
    const char c = payload[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < payload.size() && payload[i + 1] == '"') {
          cell.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        cell.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        in_quotes = true;
        row_has_data = true;
        break;
      case ',':
        row.cells.push_back(std::move(cell));
        cell.clear();
        row_has_data = true;
        break;
      case '\r':
        break;
      case '\n':
        if (row_has_data || !cell.empty()) {
          row.cells.push_back(std::move(cell));
          rows.push_back(std::move(row));
        }
        row = {};
        cell.clear();
        row_has_data = false;
        break;
      default:
        cell.push_back(c);
        row_has_data = true;
    }
  }
  if (in_quotes) row.ok = false;
  if (row_has_data || !cell.empty()) {
    row.cells.push_back(std::move(cell));
    rows.push_back(std::move(row));
  }
  return rows;
}

ParseResult parse_csv(std::string_view payload, std::string_view origin) {
  ParseResult result;
  auto rows = split_csv(payload);
  if (rows.empty()) return result;
  std::vector<std::string> header;
  for (const auto& h : rows.front().cells) header.emplace_back(trim(h));
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (!row.ok || row.cells.size() != header.size()) {
      ++result.skipped;
      continue;
    }
    SourceRecord record;
    for (std::size_t c = 0; c < header.size(); ++c) record.fields[header[c]] = row.cells[c];
    if (accept(record, origin, SourceFormat::Csv)) {
      result.records.push_back(std::move(record));
    } else {
      ++result.skipped;
    }
  }
  return result;
}

std::optional<std::string> decode_entities(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '<') return std::nullopt;
    if (text[i] != '&') {
      out.push_back(text[i]);
      continue;
    }
    const auto end = text.find(';', i);
    if (end == std::string_view::npos) return std::nullopt;
    const auto name = text.substr(i + 1, end - i - 1);
    if (name == "amp") out.push_back('&');
    else if (name == "lt") out.push_back('<');
    else if (name == "gt") out.push_back('>');
    else if (name == "quot") out.push_back('"');
    else if (name == "apos") out.push_back('\'');
    else return std::nullopt;
    i = end;
  }
  return out;
}

// Parses the children of one <record>; nullopt when malformed.
std::optional<std::map<std::string, std::string>> parse_xml_record(std::string_view inner) {
  std::map<std::string, std::string> fields;
  std::size_t pos = 0;
  while (true) {
    pos = inner.find_first_not_of(" \t\r\n", pos);
    if (pos == std::string_view::npos) break;
    if (inner[pos] != '<') return std::nullopt;
    const auto tag_end = inner.find('>', pos);
    if (tag_end == std::string_view::npos) return std::nullopt;
    auto tag = inner.substr(pos + 1, tag_end - pos - 1);
    if (tag.empty() || tag.front() == '/') return std::nullopt;
    if (tag.back() == '/') {
      fields[std::string(trim(tag.substr(0, tag.size() - 1)))] = "";
      pos = tag_end + 1;
      continue;
    }
    const std::string close = "</" + std::string(tag) + ">";
    const auto close_pos = inner.find(close, tag_end + 1);
    if (close_pos == std::string_view::npos) return std::nullopt;
    auto raw = inner.substr(tag_end + 1, close_pos - tag_end - 1);
    std::optional<std::string> value;
    constexpr std::string_view cdata_open = "<![CDATA[";
    if (raw.starts_with(cdata_open) && raw.ends_with("]]>")) {
      value = std::string(raw.substr(cdata_open.size(), raw.size() - cdata_open.size() - 3));
    } else {
      value = decode_entities(raw);
    }
    if (!value) return std::nullopt;
    fields[std::string(tag)] = std::move(*value);
    pos = close_pos + close.size();
  }
  return fields;
}

ParseResult parse_xml_lite(std::string_view payload, std::string_view origin) {
  ParseResult result;
  constexpr std::string_view open = "<record>";
  constexpr std::string_view close = "</record>";
  std::size_t pos = 0;
  while (true) {
    const auto start = payload.find(open, pos);
    if (start == std::string_view::npos) break;
    const auto inner_start = start + open.size();
    const auto next_open = payload.find(open, inner_start);
    const auto end = payload.find(close, inner_start);
    if (end == std::string_view::npos || (next_open != std::string_view::npos && next_open < end)) {
      ++result.skipped;
      pos = next_open == std::string_view::npos ? payload.size() : next_open;
      continue;
    }
    SourceRecord record;
    auto fields = parse_xml_record(payload.substr(inner_start, end - inner_start));
    if (fields) {
      record.fields = std::move(*fields);
      if (accept(record, origin, SourceFormat::XmlLite)) {
        result.records.push_back(std::move(record));
      } else {
        ++result.skipped;
      }
    } else {
      ++result.skipped;
    }
    pos = end + close.size();
  }
  return result;
}

std::string strip_controls(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (const char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
      out.push_back(' ');
    } else if (c < 0x20 || c == 0x7F) {
      continue;
    } else {
      out.push_back(ch);
    }
  }
  return std::string(trim(out));
}

const std::string* first_field(const SourceRecord& record, const std::vector<std::string>& aliases) {
  for (const auto& alias : aliases) {
    if (auto it = record.fields.find(alias); it != record.fields.end()) return &it->second;
  }
  return nullptr;
}

}  // namespace

SourceFormat parse_source_format(std::string_view name) {
  if (name == "jsonl" || name == "json-lines") return SourceFormat::JsonLines;
  if (name == "csv") return SourceFormat::Csv;
  if (name == "xml" || name == "xml-lite") return SourceFormat::XmlLite;
  throw Error(ErrorCode::UnsupportedFormat, "unknown source format '" + std::string(name) + "'");
}

std::string_view to_string(SourceFormat format) {
  switch (format) {
    case SourceFormat::JsonLines: return "json-lines";
    case SourceFormat::Csv: return "csv";
    case SourceFormat::XmlLite: return "xml-lite";
  }
  return "json-lines";
}

std::optional<ArtifactKind> parse_artifact_kind(std::string_view name) {
  if (name == "code_snippet") return ArtifactKind::CodeSnippet;
  if (name == "qa_thread") return ArtifactKind::QaThread;
  if (name == "tutorial") return ArtifactKind::Tutorial;
  if (name == "api_doc") return ArtifactKind::ApiDoc;
  if (name == "library") return ArtifactKind::Library;
  if (name == "post") return ArtifactKind::Post;
  return std::nullopt;
}

std::string_view to_string(ArtifactKind kind) {
  switch (kind) {
    case ArtifactKind::CodeSnippet: return "code_snippet";
    case ArtifactKind::QaThread: return "qa_thread";
    case ArtifactKind::Tutorial: return "tutorial";
    case ArtifactKind::ApiDoc: return "api_doc";
    case ArtifactKind::Library: return "library";
    case ArtifactKind::Post: return "post";
  }
  return "post";
}

void to_json(nlohmann::json& j, const Artifact& a) {
  j = nlohmann::json{{"id", a.id},
                     {"kind", to_string(a.kind)},
                     {"title", a.title},
                     {"body", a.body},
                     {"source", a.source},
                     {"created_at", format_timestamp(a.created_at)},
                     {"tags", a.tags}};
  if (a.url) j["url"] = *a.url;
  if (!a.concepts.empty()) j["concepts"] = a.concepts;
}

void from_json(const nlohmann::json& j, Artifact& a) {
  a.id = j.at("id").get<std::string>();
  const auto kind_name = j.value("kind", std::string("post"));
  const auto kind = parse_artifact_kind(kind_name);
  if (!kind) throw Error(ErrorCode::InvalidField, "artifact " + a.id + ": unknown kind '" + kind_name + "'");
  a.kind = *kind;
  a.title = j.value("title", std::string());
  a.body = j.value("body", std::string());
  if (auto it = j.find("url"); it != j.end() && it->is_string()) {
    a.url = it->get<std::string>();
  } else {
    a.url.reset();
  }
  a.source = j.value("source", std::string());
  const auto created = j.at("created_at").get<std::string>();
  const auto ts = parse_timestamp(created);
  if (!ts) throw Error(ErrorCode::InvalidField, "artifact " + a.id + ": bad created_at '" + created + "'");
  a.created_at = *ts;
  a.tags = j.value("tags", std::set<std::string>{});
  a.concepts = j.value("concepts", ConceptSet{});
}

ParseResult parse_source(SourceFormat format, std::string_view payload, std::string_view origin) {
  if (payload.empty()) throw Error(ErrorCode::EmptyPayload, "payload has zero bytes");
  switch (format) {
    case SourceFormat::JsonLines: return parse_json_lines(payload, origin);
    case SourceFormat::Csv: return parse_csv(payload, origin);
    case SourceFormat::XmlLite: return parse_xml_lite(payload, origin);
  }
  throw Error(ErrorCode::UnsupportedFormat, "unknown source format");
}

std::string normalize_whitespace(std::string_view text) {
  std::string out;
  bool pending_space = false;
  for (const char c : text) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

std::vector<SourceRecord> cleanse(const std::vector<SourceRecord>& records) {
  std::vector<SourceRecord> cleaned;
  cleaned.reserve(records.size());
  for (const auto& in : records) {
    SourceRecord r = in;
    r.source_id = strip_controls(r.source_id);
    for (auto& [key, value] : r.fields) value = strip_controls(value);
    const auto title = r.fields.contains("title") ? r.fields["title"] : std::string();
    const auto body = r.fields.contains("body") ? r.fields["body"] : std::string();
    if (title.empty() && body.empty()) continue;
    cleaned.push_back(std::move(r));
  }

  std::vector<std::optional<Timestamp>> created(cleaned.size());
  for (std::size_t i = 0; i < cleaned.size(); ++i) {
    if (auto it = cleaned[i].fields.find("created_at"); it != cleaned[i].fields.end()) {
      created[i] = parse_timestamp(it->second);
    }
  }
  std::vector<std::size_t> order(cleaned.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (created[a].has_value() != created[b].has_value()) return created[a].has_value();
    return created[a] && *created[a] < *created[b];
  });

  std::unordered_set<std::string> seen_ids;
  std::unordered_set<std::string> seen_texts;
  std::vector<bool> keep(cleaned.size(), false);
  for (const auto i : order) {
    const auto& r = cleaned[i];
    auto id_key = r.origin + '\x1f' + r.source_id;
    const auto title = r.fields.contains("title") ? r.fields.at("title") : std::string();
    const auto body = r.fields.contains("body") ? r.fields.at("body") : std::string();
    auto text_key = normalize_whitespace(title) + '\x1f' + normalize_whitespace(body);
    if (seen_ids.contains(id_key) || seen_texts.contains(text_key)) continue;
    seen_ids.insert(std::move(id_key));
    seen_texts.insert(std::move(text_key));
    keep[i] = true;
  }

  std::vector<SourceRecord> out;
  for (std::size_t i = 0; i < cleaned.size(); ++i) {
    if (keep[i]) out.push_back(std::move(cleaned[i]));
  }
  return out;
}

Artifact normalize(const SourceRecord& record, std::optional<ArtifactKind> kind_hint,
                   Timestamp ingested_at, const FieldMap& field_map) {
  auto source_id = std::string(trim(record.source_id));
  if (source_id.empty()) source_id = identity_of(record.fields);
  if (source_id.empty()) {
    throw Error(ErrorCode::MissingIdentity, "record from '" + record.origin + "' has no source id");
  }

  Artifact a;
  a.id = record.origin + ":" + source_id;
  a.source = record.origin;
  if (const auto* v = first_field(record, field_map.title)) a.title = *v;
  if (const auto* v = first_field(record, field_map.body)) a.body = *v;
  if (const auto* v = first_field(record, field_map.url); v && !v->empty()) a.url = *v;

  a.created_at = ingested_at;
  if (const auto* v = first_field(record, field_map.created_at)) {
    if (auto ts = parse_timestamp(trim(*v))) a.created_at = std::min(*ts, ingested_at);
  }

  a.kind = kind_hint.value_or(ArtifactKind::Post);
  if (const auto* v = first_field(record, field_map.kind)) {
    if (auto k = parse_artifact_kind(trim(*v))) a.kind = *k;
  }

  if (const auto* v = first_field(record, field_map.tags)) {
    std::string_view rest = *v;
    while (!rest.empty()) {
      const auto cut = rest.find_first_of(",|");
      const auto tag = trim(rest.substr(0, cut));
      if (!tag.empty()) a.tags.emplace(tag);
      if (cut == std::string_view::npos) break;
      rest.remove_prefix(cut + 1);
    }
  }
  return a;
}

Corpus::Corpus(std::vector<Artifact> artifacts) {
  for (auto& a : artifacts) add(std::move(a));
}

void Corpus::add(Artifact artifact) {
  if (by_id_.contains(artifact.id)) {
    throw Error(ErrorCode::DuplicateArtifactId, "artifact id '" + artifact.id + "' already in corpus");
  }
  by_id_.emplace(artifact.id, artifacts_.size());
  artifacts_.push_back(std::move(artifact));
}

const Artifact* Corpus::find(std::string_view id) const {
  auto it = by_id_.find(id);
  return it == by_id_.end() ? nullptr : &artifacts_[it->second];
}

std::string write_corpus(const std::vector<Artifact>& artifacts) {
  std::string out;
  for (const auto& a : artifacts) {
    out += nlohmann::json(a).dump();
    out.push_back('\n');
  }
  return out;
}

std::vector<Artifact> read_corpus(std::string_view jsonl) {
  std::vector<Artifact> artifacts;
  std::size_t line_no = 0;
  for (const auto line : split_lines(jsonl)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      artifacts.push_back(nlohmann::json::parse(line).get<Artifact>());
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::ParseError, "corpus line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return artifacts;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::StoreUnavailable, "cannot write '" + path + "'");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error(ErrorCode::StoreUnavailable, "short write to '" + path + "'");
}

}  // namespace devrec
