#pragma once

#include <string>
#include <vector>

#include "reasonkit/kg_pipeline.hpp"
#include "reasonkit/trainer.hpp"

namespace rk {

// Per-command sections of the run configuration. Every field round-trips
// through JSON losslessly so reruns from the persisted config reproduce
// the original artifacts byte for byte.

struct ConvertSection {
  std::string triples;
  std::string format = "tsv";
  std::string source_kg = "conceptnet";
  std::string templates;  // empty selects the compiled-in table
  double split_ratio = 0.89;
  std::uint64_t max_examples = 0;  // 0 disables the cap
  int head_column = 0;
  int relation_column = 1;
  int tail_column = 2;
  std::string head_key = "head";
  std::string relation_key = "relation";
  std::string tail_key = "tail";
  bool reject_none_tails = true;

  json to_json() const;
  static ConvertSection from_json(const json& doc);
  bool operator==(const ConvertSection&) const = default;
};

struct TrainSection {
  std::string corpus_dir;  // holds train.jsonl and valid.jsonl
  TrainConfig config;
  std::uint64_t vocab_max_size = 0;
  std::uint64_t vocab_min_count = 1;
  std::string embeddings;  // external-pretrained backend table

  json to_json() const;
  static TrainSection from_json(const json& doc);
};

struct BenchmarkRef {
  std::string dataset;
  std::string path;

  json to_json() const;
  static BenchmarkRef from_json(const json& doc);
  bool operator==(const BenchmarkRef&) const = default;
};

struct EvaluateSection {
  std::string checkpoint;
  std::vector<BenchmarkRef> benchmarks;
  bool dump_scores = false;

  json to_json() const;
  static EvaluateSection from_json(const json& doc);
};

struct SourceRef {
  std::string name;
  std::vector<std::string> paths;  // corpus JSONL files

  json to_json() const;
  static SourceRef from_json(const json& doc);
  bool operator==(const SourceRef&) const = default;
};

struct AnalyzeSection {
  std::vector<SourceRef> sources;
  std::vector<BenchmarkRef> eval_sets;
  int topk = 3;
  std::uint64_t max_queries = 5;  // benchmark questions used as retrieval queries
  std::string embeddings;         // external embedder; empty uses the checkpoint
  std::string checkpoint;

  json to_json() const;
  static AnalyzeSection from_json(const json& doc);
};

struct RunConfig {
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  ConvertSection convert;
  TrainSection train;
  EvaluateSection evaluate;
  AnalyzeSection analyze;

  json to_json() const;
  static RunConfig from_json(const json& doc);
  static RunConfig load(const std::filesystem::path& path);
};

}  // namespace rk
