#include <doctest.h>

#include <string>
#include <vector>

#include "reasonkit/io.hpp"
#include "reasonkit/kg_pipeline.hpp"
#include "reasonkit/scorer.hpp"
#include "reasonkit/text.hpp"
#include "support/helpers.hpp"

using namespace rk;
using rktest::run_cli;
using rktest::TempDir;

namespace {

// Sixteen triples over built-in relations with distinct tails so negative
// sampling always has a pool.
void write_fixture_triples(const std::filesystem::path& path) {
  std::string tsv;
  const char* rows[] = {
      "chopstick\tAtLocation\tdining hall",
      "mop\tAtLocation\tsupply closet",
      "kayak\tAtLocation\tboat house",
      "ledger\tAtLocation\taccounting office",
      "spatula\tUsedFor\tflipping pancakes",
      "whistle\tUsedFor\tstarting races",
      "lantern\tUsedFor\tlighting trails",
      "stapler\tUsedFor\tbinding reports",
      "beaver\tCapableOf\tbuilding dams",
      "sprinter\tCapableOf\twinning medals",
      "compiler\tCapableOf\tcatching typos",
      "magnet\tCapableOf\tholding notes",
      "glacier\tHasProperty\tslow moving",
      "chili\tHasProperty\tvery spicy",
      "anvil\tHasProperty\textremely heavy",
      "silk\tHasProperty\tsmooth to touch",
  };
  for (const auto* row : rows) {
    tsv += row;
    tsv += '\n';
  }
  write_file(path, tsv);
}

json convert_config(const TempDir& dir, const std::string& out_name) {
  json cfg{{"seed", 5},
           {"out_dir", dir.file(out_name).string()},
           {"convert", json{{"triples", dir.file("triples.tsv").string()},
                            {"format", "tsv"},
                            {"source_kg", "conceptnet"},
                            {"split_ratio", 0.75}}}};
  return cfg;
}

json small_train_config(const std::string& corpus_dir, const std::string& out_dir) {
  return json{
      {"seed", 9},
      {"out_dir", out_dir},
      {"train",
       json{{"corpus_dir", corpus_dir},
            {"config",
             json{{"batch_size", 8},
                  {"max_epochs", 2},
                  {"learning_rate", 1e-3},
                  {"early_stop_delta", 1e-12},
                  {"grad_clip_norm", 1.0},
                  {"seed", 9},
                  {"loss", json{{"kind", "tbl"},
                                {"margin", 1.0},
                                {"contrastive_enabled", false},
                                {"temperature", 0.1},
                                {"contrastive_weight", 1.0}}},
                  {"encoder", json{{"kind", "toy-transformer"},
                                   {"max_sequence_length", 16},
                                   {"hidden_size", 16},
                                   {"num_layers", 1},
                                   {"num_heads", 2},
                                   {"ffn_size", 24}}}}}}}};
}

void write_copa_fixture(const std::filesystem::path& path) {
  write_file(
      path,
      R"({"premise": "The lamp flickered.", "choice1": "The bulb was loose.", "choice2": "The rug was new.", "question": "cause", "idx": 0, "label": 0}
{"premise": "She watered the plant.", "choice1": "It wilted instantly.", "choice2": "It grew taller.", "question": "effect", "idx": 1, "label": 1}
)");
}

void write_sct_fixture(const std::filesystem::path& path) {
  write_file(
      path,
      "InputStoryid,InputSentence1,InputSentence2,InputSentence3,InputSentence4,"
      "RandomFifthSentenceQuiz1,RandomFifthSentenceQuiz2,AnswerRightEnding\n"
      "cli-1,Tom packed a bag.,He drove north.,The road was clear.,"
      "He reached the cabin.,He unpacked and rested.,He sold the cabin.,1\n");
}

// convert + train in one go; returns the checkpoint path.
std::string prepare_checkpoint(const TempDir& dir) {
  write_fixture_triples(dir.file("triples.tsv"));
  write_json(dir.file("cv.json"), convert_config(dir, "corpus"));
  REQUIRE(run_cli({"convert", "--config", dir.file("cv.json").string()}) == 0);
  write_json(dir.file("tr.json"),
             small_train_config(dir.file("corpus").string(),
                                dir.file("model").string()));
  REQUIRE(run_cli({"train", "--config", dir.file("tr.json").string()}) == 0);
  return dir.file("model/checkpoint.rkc").string();
}

}  // namespace

TEST_CASE("cli rejects bad invocations with exit code 1") {
  CHECK(run_cli({}) == 1);
  CHECK(run_cli({"frobnicate"}) == 1);
  CHECK(run_cli({"convert"}) == 1);  // --config is required

  TempDir dir("cliusage");
  write_json(dir.file("cfg.json"), json{{"seed", 1}});
  CHECK(run_cli({"train", "--config", dir.file("cfg.json").string(), "--loss",
                 "huber"}) == 1);
  CHECK(run_cli({"train", "--config", dir.file("cfg.json").string(),
                 "--contrastive", "maybe"}) == 1);

  // Unreadable config is an I/O failure, not a usage failure.
  std::string output;
  CHECK(run_cli({"convert", "--config", dir.file("absent.json").string()},
                &output) == 2);
  CHECK(output.find("\"error\"") != std::string::npos);

  // A config without the required section fails cleanly.
  CHECK(run_cli({"convert", "--config", dir.file("cfg.json").string()}) == 1);
}

TEST_CASE("convert writes the corpus artifacts with stable bytes") {
  TempDir dir("clicv");
  write_fixture_triples(dir.file("triples.tsv"));

  write_json(dir.file("cv1.json"), convert_config(dir, "out1"));
  std::string output;
  REQUIRE(run_cli({"convert", "--config", dir.file("cv1.json").string()},
                  &output) == 0);
  CHECK(output.find("12 train") != std::string::npos);

  for (const char* name : {"train.jsonl", "valid.jsonl", "rejects.jsonl",
                           "corpus_stats.json", "run_config.json", "inputs.json"}) {
    CAPTURE(name);
    CHECK(std::filesystem::exists(dir.file("out1") / name));
  }

  const json stats = json::parse(read_file(dir.file("out1/corpus_stats.json")));
  CHECK(stats.at("triples_in") == 16);
  CHECK(stats.at("examples_retained") == 16);
  CHECK(stats.at("train_pairs") == 12);
  CHECK(stats.at("valid_pairs") == 4);
  CHECK(stats.at("rejected") == 0);
  CHECK(stats.at("qa_pairs_total") == 32);

  const auto train = read_corpus_file(dir.file("out1/train.jsonl"));
  for (const auto& ex : train) {
    CHECK(ex.correct_answer != ex.incorrect_answer);
    CHECK(!ex.question.empty());
  }

  // Same config and seed into another directory: identical corpus bytes.
  write_json(dir.file("cv2.json"), convert_config(dir, "out2"));
  REQUIRE(run_cli({"convert", "--config", dir.file("cv2.json").string()}) == 0);
  for (const char* name : {"train.jsonl", "valid.jsonl", "corpus_stats.json"}) {
    CAPTURE(name);
    CHECK(file_fingerprint(dir.file("out1") / name) ==
          file_fingerprint(dir.file("out2") / name));
  }

  // A different seed changes the sampled negatives.
  write_json(dir.file("cv3.json"), convert_config(dir, "out3"));
  REQUIRE(run_cli({"convert", "--config", dir.file("cv3.json").string(),
                   "--seed", "6"}) == 0);
  CHECK(file_fingerprint(dir.file("out1/train.jsonl")) !=
        file_fingerprint(dir.file("out3/train.jsonl")));
  const json cfg3 = json::parse(read_file(dir.file("out3/run_config.json")));
  CHECK(cfg3.at("seed") == 6);
}

TEST_CASE("convert reports unusable rows in the rejects file") {
  TempDir dir("clirej");
  write_file(dir.file("triples.tsv"),
             "chopstick\tAtLocation\tdining hall\n"
             "mop\tAtLocation\tsupply closet\n"
             "kayak\tNotARelation\tboat house\n");
  write_json(dir.file("cv.json"), convert_config(dir, "out"));
  REQUIRE(run_cli({"convert", "--config", dir.file("cv.json").string()}) == 0);

  const json stats = json::parse(read_file(dir.file("out/corpus_stats.json")));
  CHECK(stats.at("triples_in") == 2);
  CHECK(stats.at("rejected") == 1);
  const auto rejects = read_jsonl(dir.file("out/rejects.jsonl"));
  REQUIRE(rejects.size() == 1);
  CHECK(rejects[0].at("reason") == "unknown-relation");
  CHECK(rejects[0].at("row") == 2);
}

TEST_CASE("train writes checkpoint, report, metrics and state") {
  TempDir dir("clitr");
  write_fixture_triples(dir.file("triples.tsv"));
  write_json(dir.file("cv.json"), convert_config(dir, "corpus"));
  REQUIRE(run_cli({"convert", "--config", dir.file("cv.json").string()}) == 0);

  write_json(dir.file("tr.json"),
             small_train_config(dir.file("corpus").string(),
                                dir.file("model").string()));
  std::string output;
  REQUIRE(run_cli({"train", "--config", dir.file("tr.json").string(), "--loss",
                   "mrl", "--margin", "0.7"},
                  &output) == 0);
  CHECK(output.find("trained") != std::string::npos);

  for (const char* name : {"checkpoint.rkc", "train_report.json", "metrics.jsonl",
                           "train_state.bin", "run_config.json", "inputs.json"}) {
    CAPTURE(name);
    CHECK(std::filesystem::exists(dir.file("model") / name));
  }

  const json report = json::parse(read_file(dir.file("model/train_report.json")));
  CHECK(report.at("epochs").size() == 2);
  CHECK(report.at("stop_reason") == "max_epochs");

  // Flag overrides surface in the persisted effective config.
  const json effective = json::parse(read_file(dir.file("model/run_config.json")));
  CHECK(effective.at("train").at("config").at("loss").at("kind") == "mrl");
  CHECK(effective.at("train").at("config").at("loss").at("margin") == 0.7);

  const auto metrics = read_jsonl(dir.file("model/metrics.jsonl"));
  std::size_t steps = 0, epochs = 0;
  for (const auto& r : metrics) {
    if (r.at("type") == "step") ++steps;
    if (r.at("type") == "epoch") ++epochs;
  }
  CHECK(epochs == 2);
  CHECK(steps == 2 * ((12 + 7) / 8));

  const auto model = ReasonablenessModel::load(dir.file("model/checkpoint.rkc"));
  CHECK(model.metadata().at("train_config").at("loss").at("kind") == "mrl");
  CHECK(model.metadata().at("best_epoch") == report.at("best_epoch"));

  // Missing corpus directory is a data error.
  write_json(dir.file("tr_bad.json"),
             small_train_config(dir.file("nowhere").string(),
                                dir.file("model2").string()));
  CHECK(run_cli({"train", "--config", dir.file("tr_bad.json").string()}) == 2);
}

TEST_CASE("evaluate writes per-benchmark sections and score dumps") {
  TempDir dir("cliev");
  const std::string ckpt = prepare_checkpoint(dir);
  write_copa_fixture(dir.file("copa.jsonl"));
  write_sct_fixture(dir.file("sct.csv"));

  json cfg{{"seed", 9},
           {"out_dir", dir.file("eval").string()},
           {"evaluate",
            json{{"checkpoint", ckpt},
                 {"benchmarks",
                  json::array({json{{"dataset", "copa"},
                                    {"path", dir.file("copa.jsonl").string()}},
                               json{{"dataset", "sct"},
                                    {"path", dir.file("sct.csv").string()}}})},
                 {"dump_scores", false}}}};
  write_json(dir.file("ev.json"), cfg);

  REQUIRE(run_cli({"evaluate", "--config", dir.file("ev.json").string(),
                   "--dump-scores"}) == 0);
  const json report = json::parse(read_file(dir.file("eval/eval_report.json")));
  REQUIRE(report.at("benchmarks").size() == 2);
  CHECK(report.at("benchmarks")[0].at("dataset") == "copa");
  CHECK(report.at("benchmarks")[0].at("instance_count") == 2);
  CHECK(report.at("benchmarks")[1].at("dataset") == "sct");
  CHECK(report.at("benchmarks")[0].at("diagnostics").contains("pct_accurate"));

  const auto dumped = read_jsonl(dir.file("eval/scores_copa.jsonl"));
  REQUIRE(dumped.size() == 2);
  CHECK(dumped[0].at("id") == "copa-0");
  CHECK(dumped[0].at("scores").size() == 2);
  CHECK(std::filesystem::exists(dir.file("eval/scores_sct.jsonl")));

  // Dataset filter narrows the sections.
  cfg["out_dir"] = dir.file("eval_copa").string();
  write_json(dir.file("ev2.json"), cfg);
  REQUIRE(run_cli({"evaluate", "--config", dir.file("ev2.json").string(),
                   "--dataset", "copa"}) == 0);
  const json filtered = json::parse(read_file(dir.file("eval_copa/eval_report.json")));
  CHECK(filtered.at("benchmarks").size() == 1);

  CHECK(run_cli({"evaluate", "--config", dir.file("ev2.json").string(),
                 "--dataset", "nosuch"}) == 1);

  json empty_cfg{{"out_dir", dir.file("eval3").string()},
                 {"evaluate", json{{"checkpoint", ckpt},
                                   {"benchmarks", json::array()}}}};
  write_json(dir.file("ev3.json"), empty_cfg);
  CHECK(run_cli({"evaluate", "--config", dir.file("ev3.json").string()}) == 1);
}

TEST_CASE("analyze writes the overlap matrix and retrieval rows") {
  TempDir dir("clian");
  const std::string ckpt = prepare_checkpoint(dir);
  write_copa_fixture(dir.file("copa.jsonl"));

  json cfg{
      {"seed", 9},
      {"out_dir", dir.file("analysis").string()},
      {"analyze",
       json{{"sources",
             json::array(
                 {json{{"name", "kg-train"},
                       {"paths", json::array({dir.file("corpus/train.jsonl").string()})}},
                  json{{"name", "kg-valid"},
                       {"paths", json::array({dir.file("corpus/valid.jsonl").string()})}}})},
            {"eval_sets", json::array({json{{"dataset", "copa"},
                                            {"path", dir.file("copa.jsonl").string()}}})},
            {"topk", 2},
            {"max_queries", 2},
            {"checkpoint", ckpt}}}};
  write_json(dir.file("an.json"), cfg);

  REQUIRE(run_cli({"analyze", "--config", dir.file("an.json").string()}) == 0);

  const json overlap = json::parse(read_file(dir.file("analysis/overlap_report.json")));
  REQUIRE(overlap.at("overlap").size() == 2);  // one eval set x two sources
  for (const auto& row : overlap.at("overlap")) {
    CHECK(row.at("eval_name") == "copa");
    CHECK(row.at("overlap_pct").get<double>() >= 0.0);
    CHECK(row.at("overlap_pct").get<double>() <= 100.0);
  }

  const json retrieval =
      json::parse(read_file(dir.file("analysis/retrieval_report.json")));
  CHECK(retrieval.at("topk") == 2);
  // two sources x two queries
  REQUIRE(retrieval.at("retrieval").size() == 4);
  for (const auto& row : retrieval.at("retrieval")) {
    CHECK(row.at("results").size() == 2);
    CHECK(row.contains("eval_set"));
    CHECK(row.contains("source"));
  }

  // Retrieval depth override.
  cfg["out_dir"] = dir.file("analysis1").string();
  write_json(dir.file("an1.json"), cfg);
  REQUIRE(run_cli({"analyze", "--config", dir.file("an1.json").string(), "--topk",
                   "1"}) == 0);
  const json shallow =
      json::parse(read_file(dir.file("analysis1/retrieval_report.json")));
  for (const auto& row : shallow.at("retrieval")) {
    CHECK(row.at("results").size() == 1);
  }

  // Sources that point nowhere fail as I/O errors; an empty source list is
  // a config error.
  json bad = cfg;
  bad["analyze"]["sources"][0]["paths"][0] = dir.file("missing.jsonl").string();
  write_json(dir.file("an_bad.json"), bad);
  CHECK(run_cli({"analyze", "--config", dir.file("an_bad.json").string()}) == 2);

  json none = cfg;
  none["analyze"]["sources"] = json::array();
  write_json(dir.file("an_none.json"), none);
  CHECK(run_cli({"analyze", "--config", dir.file("an_none.json").string()}) == 1);
}
