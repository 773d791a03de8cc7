#include "reasonkit/kg_pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "reasonkit/errors.hpp"
#include "reasonkit/io.hpp"
#include "reasonkit/rng.hpp"
#include "reasonkit/text.hpp"

namespace rk {

std::string to_string(SourceKg kg) {
  return kg == SourceKg::kConceptNet ? "conceptnet" : "atomic";
}

SourceKg source_kg_from_string(const std::string& name) {
  const std::string n = to_lower(name);
  if (n == "conceptnet" || n == "conceptnet-style" || n == "concept") {
    return SourceKg::kConceptNet;
  }
  if (n == "atomic" || n == "atomic-style") return SourceKg::kAtomic;
  throw ConfigError("unknown source KG: " + name);
}

TripleFormat triple_format_from_string(const std::string& name) {
  const std::string n = to_lower(name);
  if (n == "tsv") return TripleFormat::kTsv;
  if (n == "csv") return TripleFormat::kCsv;
  if (n == "jsonl") return TripleFormat::kJsonl;
  throw ConfigError("unknown triple format: " + name);
}

// ---------------------------------------------------------------------------
// Template table

namespace {

struct TemplateEntry {
  const char* relation;
  const char* pattern;
};

constexpr TemplateEntry kConceptNetTemplates[] = {
    {"AtLocation", "{head} located or found at"},
    {"CapableOf", "{head} is capable of"},
    {"Causes", "{head} causes"},
    {"CausesDesire", "{head} makes someone want"},
    {"CreatedBy", "{head} is created by"},
    {"DefinedAs", "{head} is defined as"},
    {"DesireOf", "{head} is the desire of"},
    {"Desires", "{head} desires"},
    {"HasA", "{head} has"},
    {"HasFirstSubevent", "{head} begins with the event or action"},
    {"HasLastSubevent", "{head} ends with the event or action"},
    {"HasPainCharacter", "{head} has pain character"},
    {"HasPainIntensity", "{head} has pain intensity"},
    {"HasPrerequisite", "{head} requires"},
    {"HasProperty", "{head} can be characterized by being or having"},
    {"HasSubevent", "{head} includes the event or action"},
    {"InheritsFrom", "{head} inherits from"},
    {"InstanceOf", "{head} is an example of"},
    {"IsA", "{head} is a type of"},
    {"LocatedNear", "{head} is located near"},
    {"LocationOfAction", "{head} is the location of the action"},
    {"MadeOf", "{head} is made of"},
    {"MotivatedByGoal", "{head} is a step towards accomplishing the goal"},
    {"NotCapableOf", "{head} is not capable of"},
    {"NotDesires", "{head} does not desire"},
    {"NotHasA", "{head} does not have"},
    {"NotHasProperty", "{head} is not characterized by being or having"},
    {"NotIsA", "{head} is not a type of"},
    {"NotMadeOf", "{head} is not made of"},
    {"PartOf", "{head} is a part of"},
    {"ReceivesAction", "{head} can receive or be affected by the action"},
    {"RelatedTo", "{head} is related to"},
    {"SymbolOf", "{head} is a symbol of"},
    {"UsedFor", "{head} is used for"},
};

constexpr TemplateEntry kAtomicTemplates[] = {
    {"HasSubEvent", "{head} includes the event or action"},
    {"HinderedBy", "{head} can be hindered by"},
    {"MadeUpOf", "{head} is made up of"},
    {"ObjectUse", "{head} is used for"},
    {"isAfter", "After {tail}, {head}"},
    {"isBefore", "Before {tail}, {head}"},
    {"isFilledBy", "{head}, and the blank can be filled by"},
    {"oEffect", "{head}, as a result, PersonX will"},
    {"oReact", "{head}, as a result, others feel"},
    {"oWant", "{head}, as a result, others want"},
    {"xAttr", "{head}, so PersonX is seen as"},
    {"xEffect", "{head}, as a result, PersonX will"},
    {"xIntent", "{head}, because PersonX wanted"},
    {"xNeed", "{head}, but before, PersonX needed"},
    {"xReact", "{head}, as a result, PersonX feels"},
    {"xReason", "{head}, because"},
    {"xWant", "{head}, as a result, PersonX wants"},
};

std::size_t count_occurrences(const std::string& s, std::string_view needle) {
  std::size_t count = 0;
  for (auto pos = s.find(needle); pos != std::string::npos;
       pos = s.find(needle, pos + needle.size())) {
    ++count;
  }
  return count;
}

void validate_pattern(const RelationTemplate& t) {
  if (count_occurrences(t.pattern, "{head}") != 1) {
    throw ConfigError("template for '" + t.relation +
                      "' must contain {head} exactly once: " + t.pattern);
  }
  if (count_occurrences(t.pattern, "{tail}") > 1) {
    throw ConfigError("template for '" + t.relation +
                      "' may contain {tail} at most once: " + t.pattern);
  }
}

}  // namespace

TemplateTable make_table(std::string version,
                         std::vector<RelationTemplate> conceptnet,
                         std::vector<RelationTemplate> atomic) {
  TemplateTable table;
  table.version_ = std::move(version);
  for (auto& t : conceptnet) {
    validate_pattern(t);
    table.conceptnet_[t.relation] = std::move(t);
  }
  for (auto& t : atomic) {
    validate_pattern(t);
    table.atomic_[t.relation] = std::move(t);
  }
  return table;
}

const TemplateTable& TemplateTable::builtin() {
  static const TemplateTable table = [] {
    std::vector<RelationTemplate> cn, at;
    for (const auto& e : kConceptNetTemplates) cn.push_back({e.relation, e.pattern});
    for (const auto& e : kAtomicTemplates) at.push_back({e.relation, e.pattern});
    return make_table("1", std::move(cn), std::move(at));
  }();
  return table;
}

TemplateTable TemplateTable::load(const std::filesystem::path& path) {
  json doc = json::parse(read_file(path), nullptr, false);
  if (doc.is_discarded()) {
    throw DataError("template file is not valid JSON: " + path.string());
  }
  return from_json(doc);
}

TemplateTable TemplateTable::from_json(const json& doc) {
  if (!doc.is_object()) throw DataError("template table must be a JSON object");
  std::vector<RelationTemplate> cn, at;
  auto read_section = [&doc](const char* key, std::vector<RelationTemplate>& out) {
    if (!doc.contains(key)) return;
    for (const auto& [relation, pattern] : doc.at(key).items()) {
      out.push_back({relation, pattern.get<std::string>()});
    }
  };
  read_section("conceptnet", cn);
  read_section("atomic", at);
  std::string version = doc.value("version", "unversioned");
  return make_table(std::move(version), std::move(cn), std::move(at));
}

const std::map<std::string, RelationTemplate>& TemplateTable::section(SourceKg kg) const {
  return kg == SourceKg::kConceptNet ? conceptnet_ : atomic_;
}

bool TemplateTable::contains(const std::string& relation, SourceKg kg) const {
  return section(kg).count(relation) > 0;
}

const RelationTemplate& TemplateTable::get(const std::string& relation, SourceKg kg) const {
  const auto& sec = section(kg);
  const auto it = sec.find(relation);
  if (it == sec.end()) {
    throw DataError("no template for relation '" + relation + "' in " + to_string(kg));
  }
  return it->second;
}

std::size_t TemplateTable::size() const { return conceptnet_.size() + atomic_.size(); }

std::vector<RelationTemplate> TemplateTable::relations(SourceKg kg) const {
  std::vector<RelationTemplate> out;
  for (const auto& [_, t] : section(kg)) out.push_back(t);
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

json TrainingExample::to_json() const {
  return json{{"question", question},
              {"correct_answer", correct_answer},
              {"incorrect_answer", incorrect_answer},
              {"origin_triple_id", origin_triple_id}};
}

TrainingExample TrainingExample::from_json(const json& row) {
  if (!row.contains("question") || !row.contains("correct_answer") ||
      !row.contains("incorrect_answer")) {
    throw DataError("training example record missing required fields");
  }
  TrainingExample ex;
  ex.question = row.at("question").get<std::string>();
  ex.correct_answer = row.at("correct_answer").get<std::string>();
  ex.incorrect_answer = row.at("incorrect_answer").get<std::string>();
  ex.origin_triple_id = row.value("origin_triple_id", "");
  return ex;
}

json RejectRecord::to_json() const {
  return json{{"row", row}, {"reason", reason}, {"raw", raw}};
}

json CorpusStats::to_json() const {
  return json{{"source_kg", source_kg},
              {"template_version", template_version},
              {"seed", seed},
              {"split_ratio", split_ratio},
              {"triples_in", triples_in},
              {"examples_retained", examples_retained},
              {"rejected", rejected},
              {"train_pairs", train_pairs},
              {"valid_pairs", valid_pairs},
              {"qa_pairs_total", qa_pairs_total}};
}

// ---------------------------------------------------------------------------
// Loading

namespace {

struct RawTriple {
  std::string head, relation, tail;
};

std::optional<RawTriple> extract_columns(const std::vector<std::string>& cells,
                                         const TripleSchema& schema) {
  const int max_col = std::max({schema.head_column, schema.relation_column,
                                schema.tail_column});
  if (int(cells.size()) <= max_col) return std::nullopt;
  return RawTriple{cells[std::size_t(schema.head_column)],
                   cells[std::size_t(schema.relation_column)],
                   cells[std::size_t(schema.tail_column)]};
}

}  // namespace

TripleLoadResult load_triples(const std::filesystem::path& path,
                              const TripleSchema& schema, SourceKg kg,
                              const TemplateTable& templates) {
  const auto lines = read_lines(path);
  TripleLoadResult result;
  std::size_t row = 0;
  for (const auto& line : lines) {
    if (line.empty()) continue;
    const std::size_t this_row = row++;
    std::optional<RawTriple> raw;
    switch (schema.format) {
      case TripleFormat::kTsv:
        raw = extract_columns(split_tsv_line(line), schema);
        break;
      case TripleFormat::kCsv:
        raw = extract_columns(split_csv_line(line), schema);
        break;
      case TripleFormat::kJsonl: {
        json rec = json::parse(line, nullptr, false);
        if (!rec.is_discarded() && rec.is_object() && rec.contains(schema.head_key) &&
            rec.contains(schema.relation_key) && rec.contains(schema.tail_key) &&
            rec.at(schema.head_key).is_string() &&
            rec.at(schema.relation_key).is_string() &&
            rec.at(schema.tail_key).is_string()) {
          raw = RawTriple{rec.at(schema.head_key).get<std::string>(),
                          rec.at(schema.relation_key).get<std::string>(),
                          rec.at(schema.tail_key).get<std::string>()};
        }
        break;
      }
    }
    if (!raw) {
      result.rejects.push_back({this_row, "malformed-record", line});
      continue;
    }
    Triple t;
    t.head = normalize_ws(raw->head);
    t.relation = normalize_ws(raw->relation);
    t.tail = normalize_ws(raw->tail);
    t.source_kg = kg;
    t.row = this_row;
    if (t.head.empty()) {
      result.rejects.push_back({this_row, "empty-head", line});
      continue;
    }
    if (t.tail.empty()) {
      result.rejects.push_back({this_row, "empty-tail", line});
      continue;
    }
    if (schema.reject_none_tails && to_lower(t.tail) == "none") {
      result.rejects.push_back({this_row, "none-tail", line});
      continue;
    }
    if (!templates.contains(t.relation, kg)) {
      result.rejects.push_back({this_row, "unknown-relation", line});
      continue;
    }
    result.triples.push_back(std::move(t));
  }
  if (result.triples.empty()) {
    throw DataError("no parseable triples in " + path.string());
  }
  return result;
}

// ---------------------------------------------------------------------------
// Verbalization and negative sampling

namespace {

std::string replace_once(std::string s, std::string_view needle, std::string_view value) {
  const auto pos = s.find(needle);
  if (pos != std::string::npos) s.replace(pos, needle.size(), value);
  return s;
}

}  // namespace

QAPair verbalize(const Triple& triple, const TemplateTable& templates) {
  const RelationTemplate& tmpl = templates.get(triple.relation, triple.source_kg);
  std::string question = replace_once(tmpl.pattern, "{head}", triple.head);
  question = replace_once(std::move(question), "{tail}", kAnswerHole);
  QAPair pair;
  pair.question = capitalize_first(normalize_ws(question));
  pair.answer = triple.tail;
  pair.label = PairLabel::kReasonable;
  pair.origin_triple_id = triple.id();
  return pair;
}

std::string sample_negative(const Triple& triple,
                            const std::vector<std::string>& tail_pool,
                            std::uint64_t seed) {
  // Need at least two distinct values so exclusion can succeed.
  std::string first_norm;
  bool has_distinct = false;
  for (const auto& tail : tail_pool) {
    const std::string n = normalize_ws(tail);
    if (first_norm.empty() && !n.empty()) {
      first_norm = n;
    } else if (!n.empty() && n != first_norm) {
      has_distinct = true;
      break;
    }
  }
  if (tail_pool.size() < 2 || !has_distinct) {
    throw DataError("cannot sample a negative tail: pool has no two distinct values");
  }

  const std::string own = normalize_ws(triple.tail);
  Rng rng(seed);
  for (int attempt = 0; attempt < 100; ++attempt) {
    const auto& candidate = tail_pool[std::size_t(rng.uniform(tail_pool.size()))];
    if (normalize_ws(candidate) != own) return candidate;
  }
  // Degenerate pools (the true tail dominating the multiset) fall back to a
  // uniform draw over the distinct other values, still seeded.
  std::vector<std::string> others;
  for (const auto& tail : tail_pool) {
    const std::string n = normalize_ws(tail);
    if (n != own && std::find(others.begin(), others.end(), tail) == others.end()) {
      others.push_back(tail);
    }
  }
  if (others.empty()) {
    throw DataError("cannot sample a negative tail: all pool values equal the true tail");
  }
  return others[std::size_t(rng.uniform(others.size()))];
}

// ---------------------------------------------------------------------------
// Corpus assembly

Corpus build_corpus(const std::vector<Triple>& triples,
                    const TemplateTable& templates,
                    const CorpusBuildOptions& options) {
  if (triples.empty()) throw DataError("cannot build a corpus from zero triples");
  if (options.split_ratio < 0.0 || options.split_ratio > 1.0) {
    throw ConfigError("split_ratio must lie in [0, 1]");
  }

  // Canonicalize the pool so negative draws depend only on (seed, row),
  // not on the order triples arrived in.
  std::vector<std::string> tail_pool;
  tail_pool.reserve(triples.size());
  for (const auto& t : triples) tail_pool.push_back(t.tail);
  std::sort(tail_pool.begin(), tail_pool.end());
  tail_pool.erase(std::unique(tail_pool.begin(), tail_pool.end()), tail_pool.end());

  Corpus corpus;
  std::vector<TrainingExample> examples;
  examples.reserve(triples.size());
  for (const auto& triple : triples) {
    try {
      const QAPair positive = verbalize(triple, templates);
      TrainingExample ex;
      ex.question = positive.question;
      ex.correct_answer = positive.answer;
      ex.incorrect_answer =
          sample_negative(triple, tail_pool, mix_seed(options.seed, triple.row));
      ex.origin_triple_id = triple.id();
      examples.push_back(std::move(ex));
    } catch (const DataError& e) {
      corpus.rejects.push_back({triple.row, e.what(),
                                triple.head + " | " + triple.relation + " | " + triple.tail});
    }
  }
  if (examples.empty()) throw DataError("no training examples could be built");

  if (options.max_examples && examples.size() > *options.max_examples) {
    Rng rng(mix_seed(options.seed, 0xCA11ED));
    const auto keep = rng.sample_indices(examples.size(), *options.max_examples);
    std::vector<TrainingExample> capped;
    capped.reserve(keep.size());
    for (const auto idx : keep) capped.push_back(std::move(examples[idx]));
    examples = std::move(capped);
  }

  const std::size_t n = examples.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(mix_seed(options.seed, 0x59117));
  rng.shuffle(order);

  const auto train_count =
      std::size_t(std::llround(options.split_ratio * double(n)));
  std::vector<std::size_t> train_idx(order.begin(), order.begin() + long(train_count));
  std::vector<std::size_t> valid_idx(order.begin() + long(train_count), order.end());
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(valid_idx.begin(), valid_idx.end());
  for (const auto i : train_idx) corpus.train.push_back(examples[i]);
  for (const auto i : valid_idx) corpus.valid.push_back(examples[i]);

  corpus.stats.source_kg = to_string(triples.front().source_kg);
  corpus.stats.template_version = templates.version();
  corpus.stats.seed = options.seed;
  corpus.stats.split_ratio = options.split_ratio;
  corpus.stats.triples_in = triples.size();
  corpus.stats.examples_retained = n;
  corpus.stats.rejected = corpus.rejects.size();
  corpus.stats.train_pairs = corpus.train.size();
  corpus.stats.valid_pairs = corpus.valid.size();
  corpus.stats.qa_pairs_total = 2 * n;
  return corpus;
}

void write_corpus(const Corpus& corpus, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  auto dump = [](const std::vector<TrainingExample>& examples) {
    std::vector<json> rows;
    rows.reserve(examples.size());
    for (const auto& ex : examples) rows.push_back(ex.to_json());
    return rows;
  };
  write_jsonl(out_dir / "train.jsonl", dump(corpus.train));
  write_jsonl(out_dir / "valid.jsonl", dump(corpus.valid));
  std::vector<json> rejects;
  rejects.reserve(corpus.rejects.size());
  for (const auto& r : corpus.rejects) rejects.push_back(r.to_json());
  write_jsonl(out_dir / "rejects.jsonl", rejects);
  write_json(out_dir / "corpus_stats.json", corpus.stats.to_json());
}

std::vector<TrainingExample> read_corpus_file(const std::filesystem::path& path) {
  const auto rows = read_jsonl(path);
  std::vector<TrainingExample> examples;
  examples.reserve(rows.size());
  for (const auto& row : rows) examples.push_back(TrainingExample::from_json(row));
  if (examples.empty()) throw DataError("corpus file has no examples: " + path.string());
  return examples;
}

}  // namespace rk
