#include <bit>
#include <cmath>

#include "devrec/error.hpp"
#include "devrec/index.hpp"

namespace devrec {

// Layout (all integers little-endian):
//   "DEVRECIX" u32 version u32 flags
//   u64 N u64 excluded
//   str ontology-json
//   u64 V, V x str term
//   u64 V, V x u64 df
//   N x { str artifact-json, u64 n, n x (u32 term, u32 tf), f64 norm }
//   V x { u64 len, len x (u32 doc, u32 tf) }
//   "END!"
// where str = u64 length + bytes.

namespace {

constexpr std::string_view kMagic = "DEVRECIX";
constexpr std::string_view kTrailer = "END!";
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  void raw(std::string_view bytes) { out_.append(bytes); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(std::string_view s) {
    u64(s.size());
    raw(s);
  }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view in) : in_(in) {}

  std::string_view raw(std::size_t n) {
    need(n);
    auto s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const auto n = u64();
    return std::string(raw(static_cast<std::size_t>(n)));
  }
  // Guards count fields before they size allocations.
  std::size_t count(std::size_t min_bytes_each) {
    const auto n = u64();
    if (min_bytes_each > 0 && n > (in_.size() - pos_) / min_bytes_each) corrupt("count exceeds payload");
    return static_cast<std::size_t>(n);
  }
  bool at_end() const { return pos_ == in_.size(); }

  [[noreturn]] static void corrupt(const std::string& what) {
    throw Error(ErrorCode::ParseError, "corrupt index: " + what);
  }

 private:
  void need(std::size_t n) const {
    if (n > in_.size() - pos_) corrupt("truncated");
  }

  std::string_view in_;
  std::size_t pos_ = 0;
};

}  // namespace

struct IndexCodec {
  static std::string encode(const InvertedIndex& index) {
    Writer w;
    w.raw(kMagic);
    w.u32(kVersion);
    w.u32(index.config_.double_title ? 1u : 0u);
    w.u64(index.docs_.size());
    w.u64(index.excluded_);
    w.str(index.ontology_.to_json().dump());
    w.u64(index.terms_.size());
    for (const auto& t : index.terms_) w.str(t);
    w.u64(index.postings_.size());
    for (const auto& list : index.postings_) w.u64(list.size());
    for (const auto& d : index.docs_) {
      w.str(nlohmann::json(d.artifact).dump());
      w.u64(d.counts.size());
      for (const auto& [term, tf] : d.counts) {
        w.u32(static_cast<std::uint32_t>(term));
        w.u32(tf);
      }
      w.f64(d.norm);
    }
    for (const auto& list : index.postings_) {
      w.u64(list.size());
      for (const auto& p : list) {
        w.u32(p.doc);
        w.u32(p.tf);
      }
    }
    w.raw(kTrailer);
    return w.take();
  }

  static InvertedIndex decode(std::string_view bytes) {
    Reader r(bytes);
    if (r.raw(kMagic.size()) != kMagic) Reader::corrupt("bad magic");
    const auto version = r.u32();
    if (version != kVersion) Reader::corrupt("unsupported format version " + std::to_string(version));
    IndexConfig config;
    config.double_title = (r.u32() & 1u) != 0;
    const auto n_docs = r.u64();
    const auto excluded = r.u64();

    Ontology ontology;
    try {
      ontology = Ontology::from_json(nlohmann::json::parse(r.str()));
    } catch (const nlohmann::json::exception& e) {
      Reader::corrupt(std::string("ontology section: ") + e.what());
    }
    InvertedIndex index(std::move(ontology), config);
    index.excluded_ = static_cast<std::size_t>(excluded);

    const auto n_terms = r.count(8);
    index.terms_.reserve(n_terms);
    for (std::size_t i = 0; i < n_terms; ++i) {
      auto t = r.str();
      if (!index.term_by_name_.emplace(t, static_cast<TermId>(i)).second) Reader::corrupt("duplicate term " + t);
      index.terms_.push_back(std::move(t));
    }
    if (r.count(8) != n_terms) Reader::corrupt("df table size mismatch");
    std::vector<std::uint64_t> dfs(n_terms);
    for (auto& df : dfs) df = r.u64();

    for (std::uint64_t i = 0; i < n_docs; ++i) {
      InvertedIndex::Document d;
      try {
        d.artifact = nlohmann::json::parse(r.str()).get<Artifact>();
      } catch (const nlohmann::json::exception& e) {
        Reader::corrupt(std::string("document section: ") + e.what());
      }
      const auto n_counts = r.count(8);
      d.counts.reserve(n_counts);
      for (std::size_t c = 0; c < n_counts; ++c) {
        const auto term = r.u32();
        const auto tf = r.u32();
        if (term >= n_terms || tf == 0) Reader::corrupt("bad term count in " + d.artifact.id);
        d.counts.emplace_back(static_cast<TermId>(term), tf);
      }
      d.norm = r.f64();
      if (!(d.norm > 0.0) || !std::isfinite(d.norm)) Reader::corrupt("bad norm for " + d.artifact.id);
      if (!index.doc_by_id_.emplace(d.artifact.id, static_cast<InvertedIndex::DocId>(i)).second) {
        Reader::corrupt("duplicate document " + d.artifact.id);
      }
      index.docs_.push_back(std::move(d));
    }

    index.postings_.resize(n_terms);
    for (std::size_t t = 0; t < n_terms; ++t) {
      const auto len = r.count(8);
      if (len != dfs[t] || len == 0 || len > n_docs) Reader::corrupt("df mismatch for term " + index.terms_[t]);
      auto& list = index.postings_[t];
      list.reserve(len);
      for (std::size_t k = 0; k < len; ++k) {
        const auto doc = r.u32();
        const auto tf = r.u32();
        if (doc >= n_docs) Reader::corrupt("posting points past the corpus");
        list.push_back(InvertedIndex::Posting{doc, tf});
      }
    }
    if (r.raw(kTrailer.size()) != kTrailer || !r.at_end()) Reader::corrupt("bad trailer");
    return index;
  }
};

std::string InvertedIndex::serialize() const { return IndexCodec::encode(*this); }

InvertedIndex InvertedIndex::deserialize(std::string_view bytes) { return IndexCodec::decode(bytes); }

void InvertedIndex::save(const std::string& path) const { write_file(path, serialize()); }

InvertedIndex InvertedIndex::load(const std::string& path) { return deserialize(read_file(path)); }

}  // namespace devrec
