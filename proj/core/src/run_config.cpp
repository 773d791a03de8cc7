#include "reasonkit/run_config.hpp"

#include "reasonkit/errors.hpp"
#include "reasonkit/io.hpp"

namespace rk {

json ConvertSection::to_json() const {
  return json{{"triples", triples},
              {"format", format},
              {"source_kg", source_kg},
              {"templates", templates},
              {"split_ratio", split_ratio},
              {"max_examples", max_examples},
              {"head_column", head_column},
              {"relation_column", relation_column},
              {"tail_column", tail_column},
              {"head_key", head_key},
              {"relation_key", relation_key},
              {"tail_key", tail_key},
              {"reject_none_tails", reject_none_tails}};
}

ConvertSection ConvertSection::from_json(const json& doc) {
  ConvertSection s;
  s.triples = doc.value("triples", std::string());
  s.format = doc.value("format", std::string("tsv"));
  s.source_kg = doc.value("source_kg", std::string("conceptnet"));
  s.templates = doc.value("templates", std::string());
  s.split_ratio = doc.value("split_ratio", 0.89);
  s.max_examples = doc.value("max_examples", std::uint64_t(0));
  s.head_column = doc.value("head_column", 0);
  s.relation_column = doc.value("relation_column", 1);
  s.tail_column = doc.value("tail_column", 2);
  s.head_key = doc.value("head_key", std::string("head"));
  s.relation_key = doc.value("relation_key", std::string("relation"));
  s.tail_key = doc.value("tail_key", std::string("tail"));
  s.reject_none_tails = doc.value("reject_none_tails", true);
  return s;
}

json TrainSection::to_json() const {
  return json{{"corpus_dir", corpus_dir},
              {"config", config.to_json()},
              {"vocab_max_size", vocab_max_size},
              {"vocab_min_count", vocab_min_count},
              {"embeddings", embeddings}};
}

TrainSection TrainSection::from_json(const json& doc) {
  TrainSection s;
  s.corpus_dir = doc.value("corpus_dir", std::string());
  if (doc.contains("config")) s.config = TrainConfig::from_json(doc.at("config"));
  s.vocab_max_size = doc.value("vocab_max_size", std::uint64_t(0));
  s.vocab_min_count = doc.value("vocab_min_count", std::uint64_t(1));
  s.embeddings = doc.value("embeddings", std::string());
  return s;
}

json BenchmarkRef::to_json() const {
  return json{{"dataset", dataset}, {"path", path}};
}

BenchmarkRef BenchmarkRef::from_json(const json& doc) {
  BenchmarkRef b;
  b.dataset = doc.value("dataset", std::string());
  b.path = doc.value("path", std::string());
  return b;
}

json EvaluateSection::to_json() const {
  json refs = json::array();
  for (const auto& b : benchmarks) refs.push_back(b.to_json());
  return json{{"checkpoint", checkpoint},
              {"benchmarks", refs},
              {"dump_scores", dump_scores}};
}

EvaluateSection EvaluateSection::from_json(const json& doc) {
  EvaluateSection s;
  s.checkpoint = doc.value("checkpoint", std::string());
  if (doc.contains("benchmarks")) {
    for (const auto& b : doc.at("benchmarks")) {
      s.benchmarks.push_back(BenchmarkRef::from_json(b));
    }
  }
  s.dump_scores = doc.value("dump_scores", false);
  return s;
}

json SourceRef::to_json() const {
  return json{{"name", name}, {"paths", paths}};
}

SourceRef SourceRef::from_json(const json& doc) {
  SourceRef s;
  s.name = doc.value("name", std::string());
  if (doc.contains("paths")) s.paths = doc.at("paths").get<std::vector<std::string>>();
  return s;
}

json AnalyzeSection::to_json() const {
  json sources_json = json::array();
  for (const auto& s : sources) sources_json.push_back(s.to_json());
  json evals_json = json::array();
  for (const auto& e : eval_sets) evals_json.push_back(e.to_json());
  return json{{"sources", sources_json},
              {"eval_sets", evals_json},
              {"topk", topk},
              {"max_queries", max_queries},
              {"embeddings", embeddings},
              {"checkpoint", checkpoint}};
}

AnalyzeSection AnalyzeSection::from_json(const json& doc) {
  AnalyzeSection s;
  if (doc.contains("sources")) {
    for (const auto& x : doc.at("sources")) s.sources.push_back(SourceRef::from_json(x));
  }
  if (doc.contains("eval_sets")) {
    for (const auto& x : doc.at("eval_sets")) {
      s.eval_sets.push_back(BenchmarkRef::from_json(x));
    }
  }
  s.topk = doc.value("topk", 3);
  s.max_queries = doc.value("max_queries", std::uint64_t(5));
  s.embeddings = doc.value("embeddings", std::string());
  s.checkpoint = doc.value("checkpoint", std::string());
  return s;
}

json RunConfig::to_json() const {
  return json{{"seed", seed},
              {"out_dir", out_dir},
              {"convert", convert.to_json()},
              {"train", train.to_json()},
              {"evaluate", evaluate.to_json()},
              {"analyze", analyze.to_json()}};
}

RunConfig RunConfig::from_json(const json& doc) {
  RunConfig c;
  c.seed = doc.value("seed", std::uint64_t(0));
  c.out_dir = doc.value("out_dir", std::string("out"));
  if (doc.contains("convert")) c.convert = ConvertSection::from_json(doc.at("convert"));
  if (doc.contains("train")) c.train = TrainSection::from_json(doc.at("train"));
  if (doc.contains("evaluate")) {
    c.evaluate = EvaluateSection::from_json(doc.at("evaluate"));
  }
  if (doc.contains("analyze")) c.analyze = AnalyzeSection::from_json(doc.at("analyze"));
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  const json doc = json::parse(read_file(path), nullptr, false);
  if (doc.is_discarded()) {
    throw ConfigError("run config is not valid JSON: " + path.string());
  }
  return RunConfig::from_json(doc);
}

}  // namespace rk
