// Command-line front end: convert triples to a QA corpus, train the
// classifier, evaluate benchmarks, and run corpus analyses. Every command
// takes a JSON run config, applies flag overrides, and persists the
// effective config plus input fingerprints next to its artifacts.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>

#include <CLI11.hpp>

#include "reasonkit/analysis.hpp"
#include "reasonkit/encoder.hpp"
#include "reasonkit/errors.hpp"
#include "reasonkit/io.hpp"
#include "reasonkit/kg_pipeline.hpp"
#include "reasonkit/mcq_eval.hpp"
#include "reasonkit/run_config.hpp"
#include "reasonkit/scorer.hpp"
#include "reasonkit/text.hpp"
#include "reasonkit/trainer.hpp"
#include "reasonkit/vocab.hpp"

namespace fs = std::filesystem;
using rk::json;

namespace {

void write_provenance(const rk::RunConfig& cfg, const fs::path& out_dir,
                      const std::vector<std::string>& input_paths) {
  rk::write_json(out_dir / "run_config.json", cfg.to_json());
  json fingerprints = json::object();
  for (const auto& p : input_paths) {
    if (!p.empty() && fs::exists(p)) fingerprints[p] = rk::file_fingerprint(p);
  }
  rk::write_json(out_dir / "inputs.json", fingerprints);
}

rk::TemplateTable load_templates(const std::string& path) {
  if (path.empty()) return rk::TemplateTable::builtin();
  return rk::TemplateTable::load(path);
}

int cmd_convert(const rk::RunConfig& cfg) {
  const auto& cv = cfg.convert;
  if (cv.triples.empty()) throw rk::ConfigError("convert.triples path is required");
  const rk::TemplateTable templates = load_templates(cv.templates);

  rk::TripleSchema schema;
  schema.format = rk::triple_format_from_string(cv.format);
  schema.head_column = cv.head_column;
  schema.relation_column = cv.relation_column;
  schema.tail_column = cv.tail_column;
  schema.head_key = cv.head_key;
  schema.relation_key = cv.relation_key;
  schema.tail_key = cv.tail_key;
  schema.reject_none_tails = cv.reject_none_tails;

  const rk::SourceKg kg = rk::source_kg_from_string(cv.source_kg);
  auto loaded = rk::load_triples(cv.triples, schema, kg, templates);

  rk::CorpusBuildOptions options;
  options.seed = cfg.seed;
  options.split_ratio = cv.split_ratio;
  if (cv.max_examples > 0) options.max_examples = cv.max_examples;

  rk::Corpus corpus = rk::build_corpus(loaded.triples, templates, options);
  corpus.rejects.insert(corpus.rejects.begin(), loaded.rejects.begin(),
                        loaded.rejects.end());
  std::stable_sort(corpus.rejects.begin(), corpus.rejects.end(),
                   [](const auto& a, const auto& b) { return a.row < b.row; });
  corpus.stats.rejected = corpus.rejects.size();

  const fs::path out_dir = cfg.out_dir;
  rk::write_corpus(corpus, out_dir);
  write_provenance(cfg, out_dir, {cv.triples, cv.templates});
  std::cout << "wrote " << corpus.train.size() << " train and " << corpus.valid.size()
            << " valid examples to " << out_dir.string() << "\n";
  return 0;
}

std::unique_ptr<rk::Encoder> build_encoder(const rk::RunConfig& cfg,
                                           const std::vector<rk::TrainingExample>& train) {
  const auto& spec = cfg.train.config.encoder;
  if (spec.kind == rk::kExternalPretrainedKind) {
    if (cfg.train.embeddings.empty()) {
      throw rk::ConfigError("external encoder needs train.embeddings");
    }
    return std::make_unique<rk::PrecomputedEmbeddings>(
        rk::PrecomputedEmbeddings::load_jsonl(cfg.train.embeddings,
                                              spec.max_sequence_length));
  }
  std::vector<std::string> texts;
  texts.reserve(train.size() * 3);
  for (const auto& ex : train) {
    texts.push_back(ex.question);
    texts.push_back(ex.correct_answer);
    texts.push_back(ex.incorrect_answer);
  }
  const rk::Vocab vocab = rk::Vocab::build(texts, cfg.train.vocab_max_size,
                                           std::size_t(cfg.train.vocab_min_count));
  return std::make_unique<rk::ToyTransformer>(spec, vocab);
}

int cmd_train(const rk::RunConfig& cfg, bool resume) {
  if (cfg.train.corpus_dir.empty()) {
    throw rk::ConfigError("train.corpus_dir is required");
  }
  const fs::path corpus_dir = cfg.train.corpus_dir;
  const auto train = rk::read_corpus_file(corpus_dir / "train.jsonl");
  const auto valid = rk::read_corpus_file(corpus_dir / "valid.jsonl");

  rk::ReasonablenessModel model(build_encoder(cfg, train));
  rk::Trainer trainer(model, cfg.train.config);

  const fs::path out_dir = cfg.out_dir;
  fs::create_directories(out_dir);
  const fs::path state_path = out_dir / "train_state.bin";

  std::optional<rk::TrainState> resume_state;
  if (resume && fs::exists(state_path)) {
    resume_state = rk::TrainState::load(state_path);
    std::cout << "resuming after epoch " << resume_state->completed_epochs << "\n";
  }

  std::ofstream metrics_file(out_dir / "metrics.jsonl",
                             resume_state ? std::ios::app : std::ios::trunc);
  if (!metrics_file) throw rk::IoError("cannot write metrics stream");
  const rk::MetricsSink sink = [&metrics_file](const json& record) {
    metrics_file << record.dump() << "\n";
    metrics_file.flush();
  };
  const auto save_state = [&state_path](const rk::TrainState& st) {
    st.save(state_path);
  };

  const rk::TrainReport report =
      trainer.fit(train, valid, sink, resume_state ? &*resume_state : nullptr,
                  save_state);

  const json metadata{{"train_config", cfg.train.config.to_json()},
                      {"corpus_dir", cfg.train.corpus_dir},
                      {"best_epoch", report.best_epoch}};
  model.save(out_dir / "checkpoint.rkc", metadata);
  rk::write_json(out_dir / "train_report.json", report.to_json());
  write_provenance(cfg, out_dir,
                   {(corpus_dir / "train.jsonl").string(),
                    (corpus_dir / "valid.jsonl").string(), cfg.train.embeddings});
  std::cout << "trained " << report.epochs.size() << " epochs, best epoch "
            << report.best_epoch << " (" << report.stop_reason << ")\n";
  return 0;
}

int cmd_evaluate(const rk::RunConfig& cfg, const std::set<std::string>& only) {
  if (cfg.evaluate.checkpoint.empty()) {
    throw rk::ConfigError("evaluate.checkpoint is required");
  }
  if (cfg.evaluate.benchmarks.empty()) {
    throw rk::ConfigError("evaluate.benchmarks is empty");
  }
  const rk::ReasonablenessModel model =
      rk::ReasonablenessModel::load(cfg.evaluate.checkpoint);

  const fs::path out_dir = cfg.out_dir;
  json sections = json::array();
  std::vector<std::string> inputs{cfg.evaluate.checkpoint};
  for (const auto& ref : cfg.evaluate.benchmarks) {
    if (!only.empty() && !only.count(ref.dataset)) continue;
    const rk::Dataset dataset = rk::dataset_from_string(ref.dataset);
    const auto instances = rk::load_benchmark(ref.path, dataset);
    const rk::EvalReport report =
        rk::evaluate(instances, model, ref.dataset, cfg.evaluate.dump_scores);
    sections.push_back(report.to_json());
    if (cfg.evaluate.dump_scores) {
      rk::write_jsonl(out_dir / ("scores_" + ref.dataset + ".jsonl"),
                      report.per_instance);
    }
    inputs.push_back(ref.path);
    std::cout << ref.dataset << ": accuracy " << report.accuracy << " over "
              << report.instance_count << " instances\n";
  }
  if (sections.empty()) {
    throw rk::ConfigError("no benchmark matched the --dataset filter");
  }
  rk::write_json(out_dir / "eval_report.json", json{{"benchmarks", sections}});
  write_provenance(cfg, out_dir, inputs);
  return 0;
}

// Knowledge sentences of a converted corpus file: the positive assembled
// question-answer surface forms.
std::vector<std::string> corpus_sentences(const std::vector<std::string>& paths) {
  std::vector<std::string> sentences;
  for (const auto& path : paths) {
    for (const auto& ex : rk::read_corpus_file(path)) {
      sentences.push_back(rk::assemble_sequence(ex.question, ex.correct_answer));
    }
  }
  return sentences;
}

int cmd_analyze(const rk::RunConfig& cfg, const std::set<std::string>& only) {
  const auto& an = cfg.analyze;
  if (an.sources.empty()) throw rk::ConfigError("analyze.sources is empty");
  if (an.eval_sets.empty()) throw rk::ConfigError("analyze.eval_sets is empty");

  std::vector<std::string> inputs;
  std::map<std::string, std::vector<std::string>> source_texts;
  for (const auto& src : an.sources) {
    source_texts[src.name] = corpus_sentences(src.paths);
    for (const auto& p : src.paths) inputs.push_back(p);
  }

  struct EvalSet {
    std::string name;
    std::vector<std::string> texts;
    std::vector<std::string> queries;
  };
  std::vector<EvalSet> eval_sets;
  for (const auto& ref : an.eval_sets) {
    if (!only.empty() && !only.count(ref.dataset)) continue;
    const auto instances =
        rk::load_benchmark(ref.path, rk::dataset_from_string(ref.dataset));
    EvalSet set;
    set.name = ref.dataset;
    for (const auto& inst : instances) {
      set.texts.push_back(inst.question);
      for (const auto& opt : inst.options) set.texts.push_back(opt);
      if (set.queries.size() < an.max_queries) set.queries.push_back(inst.question);
    }
    eval_sets.push_back(std::move(set));
    inputs.push_back(ref.path);
  }
  if (eval_sets.empty()) {
    throw rk::ConfigError("no eval set matched the --dataset filter");
  }

  json overlap_rows = json::array();
  for (const auto& set : eval_sets) {
    for (const auto& src : an.sources) {
      const auto report =
          rk::vocab_overlap(set.texts, source_texts.at(src.name), set.name, src.name);
      overlap_rows.push_back(report.to_json());
    }
  }
  const fs::path out_dir = cfg.out_dir;
  rk::write_json(out_dir / "overlap_report.json", json{{"overlap", overlap_rows}});

  // Retrieval needs an embedder: an external table when given, otherwise
  // the trained model's features.
  std::unique_ptr<rk::Embedder> embedder;
  std::optional<rk::ReasonablenessModel> model;
  if (!an.embeddings.empty()) {
    embedder = std::make_unique<rk::PrecomputedEmbedder>(
        rk::PrecomputedEmbedder::load_jsonl(an.embeddings));
    inputs.push_back(an.embeddings);
  } else if (!an.checkpoint.empty()) {
    model = rk::ReasonablenessModel::load(an.checkpoint);
    embedder = std::make_unique<rk::ModelEmbedder>(*model);
    inputs.push_back(an.checkpoint);
  }
  if (embedder) {
    json retrieval_rows = json::array();
    for (const auto& set : eval_sets) {
      for (const auto& src : an.sources) {
        for (const auto& query : set.queries) {
          const auto result = rk::retrieve_nearest(query, source_texts.at(src.name),
                                                   *embedder, an.topk);
          json row = result.to_json();
          row["eval_set"] = set.name;
          row["source"] = src.name;
          retrieval_rows.push_back(std::move(row));
        }
      }
    }
    rk::write_json(out_dir / "retrieval_report.json",
                   json{{"topk", an.topk}, {"retrieval", retrieval_rows}});
  }
  write_provenance(cfg, out_dir, inputs);
  std::cout << "wrote overlap matrix (" << overlap_rows.size() << " cells) to "
            << out_dir.string() << "\n";
  return 0;
}

struct CliOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> loss;
  std::optional<double> margin;
  std::optional<std::string> contrastive;
  std::optional<double> tau;
  std::optional<double> lambda;
  std::optional<std::string> out;
  std::optional<int> topk;
  bool dump_scores = false;
  std::vector<std::string> datasets;
  bool resume = false;
};

void apply_overrides(rk::RunConfig& cfg, const CliOverrides& ov) {
  if (ov.seed) {
    cfg.seed = *ov.seed;
    cfg.train.config.seed = *ov.seed;
  }
  if (ov.loss) cfg.train.config.loss.kind = *ov.loss;
  if (ov.margin) cfg.train.config.loss.margin = *ov.margin;
  if (ov.contrastive) {
    if (*ov.contrastive != "on" && *ov.contrastive != "off") {
      throw rk::ConfigError("--contrastive takes on or off");
    }
    cfg.train.config.loss.contrastive_enabled = *ov.contrastive == "on";
  }
  if (ov.tau) cfg.train.config.loss.temperature = *ov.tau;
  if (ov.lambda) cfg.train.config.loss.contrastive_weight = *ov.lambda;
  if (ov.out) cfg.out_dir = *ov.out;
  if (ov.topk) cfg.analyze.topk = *ov.topk;
  if (ov.dump_scores) cfg.evaluate.dump_scores = true;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Knowledge-graph QA corpus builder, classifier trainer and evaluator"};
  app.require_subcommand(1);

  std::string config_path;
  CliOverrides ov;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "Run config JSON")->required();
    cmd->add_option("--seed", ov.seed, "Override every seed in the config");
    cmd->add_option("--out", ov.out, "Override the output directory");
  };

  auto* convert = app.add_subcommand("convert", "Triples to QA training corpus");
  add_common(convert);

  auto* train = app.add_subcommand("train", "Train the reasonableness classifier");
  add_common(train);
  train->add_option("--loss", ov.loss, "Main loss")->check(CLI::IsMember({"tbl", "mrl"}));
  train->add_option("--margin", ov.margin, "Ranking-loss margin");
  train->add_option("--contrastive", ov.contrastive, "Contrastive term: on or off")
      ->check(CLI::IsMember({"on", "off"}));
  train->add_option("--tau", ov.tau, "Contrastive temperature");
  train->add_option("--lambda", ov.lambda, "Contrastive weight");
  train->add_flag("--resume", ov.resume, "Continue from train_state.bin if present");

  auto* evaluate = app.add_subcommand("evaluate", "Score multiple-choice benchmarks");
  add_common(evaluate);
  evaluate->add_option("--dataset", ov.datasets, "Only these benchmark names");
  evaluate->add_flag("--dump-scores", ov.dump_scores, "Write per-instance scores");

  auto* analyze = app.add_subcommand("analyze", "Vocabulary overlap and retrieval");
  add_common(analyze);
  analyze->add_option("--dataset", ov.datasets, "Only these eval-set names");
  analyze->add_option("--topk", ov.topk, "Retrieval depth");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    rk::RunConfig cfg = rk::RunConfig::load(config_path);
    apply_overrides(cfg, ov);
    const std::set<std::string> only(ov.datasets.begin(), ov.datasets.end());
    if (convert->parsed()) return cmd_convert(cfg);
    if (train->parsed()) return cmd_train(cfg, ov.resume);
    if (evaluate->parsed()) return cmd_evaluate(cfg, only);
    if (analyze->parsed()) return cmd_analyze(cfg, only);
    return 1;
  } catch (const rk::ConfigError& e) {
    std::cerr << json{{"error", "config"}, {"message", e.what()}}.dump() << "\n";
    return 1;
  } catch (const rk::NumericError& e) {
    std::cerr << json{{"error", "numeric"}, {"message", e.what()}}.dump() << "\n";
    return 3;
  } catch (const rk::Error& e) {
    std::cerr << json{{"error", "data"}, {"message", e.what()}}.dump() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", "internal"}, {"message", e.what()}}.dump() << "\n";
    return 2;
  }
}
