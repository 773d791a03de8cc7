#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace rk {

using json = nlohmann::json;

enum class SourceKg { kConceptNet, kAtomic };

std::string to_string(SourceKg kg);
SourceKg source_kg_from_string(const std::string& name);

// One knowledge-graph edge. head/tail are whitespace-normalized, case
// preserved; row is the 0-based record index in the source dump.
struct Triple {
  std::string head;
  std::string relation;
  std::string tail;
  SourceKg source_kg = SourceKg::kConceptNet;
  std::size_t row = 0;

  std::string id() const { return "t" + std::to_string(row); }
};

// A relation's verbalization pattern. Must contain "{head}" exactly once;
// may contain "{tail}" once to splice the answer mid-sentence (the rendered
// question then carries an answer hole instead).
struct RelationTemplate {
  std::string relation;
  std::string pattern;
};

class TemplateTable {
 public:
  // Compiled-in copy of the shipped table (data/relation_templates.json).
  static const TemplateTable& builtin();
  static TemplateTable load(const std::filesystem::path& path);
  static TemplateTable from_json(const json& doc);

  bool contains(const std::string& relation, SourceKg kg) const;
  const RelationTemplate& get(const std::string& relation, SourceKg kg) const;
  const std::string& version() const { return version_; }
  std::size_t size() const;
  std::vector<RelationTemplate> relations(SourceKg kg) const;

 private:
  std::string version_;
  std::map<std::string, RelationTemplate> conceptnet_;
  std::map<std::string, RelationTemplate> atomic_;

  const std::map<std::string, RelationTemplate>& section(SourceKg kg) const;
  friend TemplateTable make_table(std::string version,
                                  std::vector<RelationTemplate> conceptnet,
                                  std::vector<RelationTemplate> atomic);
};

// Builds a table programmatically (used by tests and synthetic data).
TemplateTable make_table(std::string version,
                         std::vector<RelationTemplate> conceptnet,
                         std::vector<RelationTemplate> atomic);

enum class PairLabel { kReasonable, kUnreasonable };

struct QAPair {
  std::string question;  // may contain the answer hole marker
  std::string answer;
  PairLabel label = PairLabel::kReasonable;
  std::string origin_triple_id;
};

struct TrainingExample {
  std::string question;
  std::string correct_answer;
  std::string incorrect_answer;
  std::string origin_triple_id;

  json to_json() const;
  static TrainingExample from_json(const json& row);
};

struct RejectRecord {
  std::size_t row = 0;
  std::string reason;
  std::string raw;

  json to_json() const;
};

enum class TripleFormat { kTsv, kCsv, kJsonl };

TripleFormat triple_format_from_string(const std::string& name);

// Column/field mapping for triple dumps.
struct TripleSchema {
  TripleFormat format = TripleFormat::kTsv;
  int head_column = 0;
  int relation_column = 1;
  int tail_column = 2;
  std::string head_key = "head";
  std::string relation_key = "relation";
  std::string tail_key = "tail";
  // ATOMIC dumps use the literal tail "none" for empty annotations; those
  // rows carry no usable answer text and are rejected when this is set.
  bool reject_none_tails = true;
};

struct TripleLoadResult {
  std::vector<Triple> triples;
  std::vector<RejectRecord> rejects;
};

// Reads a triple dump. Records that do not yield a valid Triple (unknown
// relation, missing fields, empty head/tail) go to the rejects report in
// file order; nothing is silently dropped. Throws IoError if the file is
// unreadable and DataError if no triple parses at all.
TripleLoadResult load_triples(const std::filesystem::path& path,
                              const TripleSchema& schema, SourceKg kg,
                              const TemplateTable& templates);

// Applies the relation's template: question = pattern with the head
// spliced in (first letter capitalized), answer = tail verbatim.
// Deterministic; throws DataError for an unmapped relation.
QAPair verbalize(const Triple& triple, const TemplateTable& templates);

// Draws a replacement tail from the pool, never equal to the triple's own
// tail (after whitespace normalization). Deterministic in (triple, pool,
// seed). Throws DataError when the pool has no second distinct value.
std::string sample_negative(const Triple& triple,
                            const std::vector<std::string>& tail_pool,
                            std::uint64_t seed);

struct CorpusBuildOptions {
  std::uint64_t seed = 0;
  double split_ratio = 0.89;  // train share of examples
  std::optional<std::size_t> max_examples;
};

struct CorpusStats {
  std::string source_kg;
  std::string template_version;
  std::uint64_t seed = 0;
  double split_ratio = 0.0;
  std::size_t triples_in = 0;
  std::size_t examples_retained = 0;
  std::size_t rejected = 0;
  std::size_t train_pairs = 0;  // training examples (one positive + one negative each)
  std::size_t valid_pairs = 0;
  std::size_t qa_pairs_total = 0;

  json to_json() const;
};

struct Corpus {
  std::vector<TrainingExample> train;
  std::vector<TrainingExample> valid;
  std::vector<RejectRecord> rejects;
  CorpusStats stats;
};

// Pairs each verbalized triple with a sampled negative tail and splits the
// result into train/valid with a seeded partition. Per-triple sampling
// seeds derive from (seed, row), so output is independent of evaluation
// order. Triples whose negative cannot be sampled become rejects.
Corpus build_corpus(const std::vector<Triple>& triples,
                    const TemplateTable& templates,
                    const CorpusBuildOptions& options);

void write_corpus(const Corpus& corpus, const std::filesystem::path& out_dir);
std::vector<TrainingExample> read_corpus_file(const std::filesystem::path& path);

}  // namespace rk
