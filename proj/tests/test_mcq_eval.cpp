#include <doctest.h>

#include <map>
#include <string>
#include <vector>

#include "reasonkit/errors.hpp"
#include "reasonkit/io.hpp"
#include "reasonkit/mcq_eval.hpp"
#include "reasonkit/rng.hpp"
#include "support/helpers.hpp"

using namespace rk;

namespace {

MCQInstance make_instance(std::string id, std::string question,
                          std::vector<std::string> options, int gold) {
  MCQInstance inst;
  inst.id = std::move(id);
  inst.question = std::move(question);
  inst.options = std::move(options);
  inst.gold_index = gold;
  return inst;
}

// Scores each option by a fixed table so instance-level calls are
// enumerable by hand.
rktest::FnScorer table_scorer(std::map<std::string, double> table) {
  return rktest::FnScorer(
      [table = std::move(table)](const std::string&, const std::string& a) {
        return table.at(a);
      });
}

}  // namespace

TEST_CASE("dataset names resolve with their aliases") {
  CHECK(dataset_from_string("copa") == Dataset::kCopa);
  CHECK(dataset_from_string("COPA") == Dataset::kCopa);
  CHECK(dataset_from_string("openbookqa") == Dataset::kOpenbookqa);
  CHECK(dataset_from_string("obqa") == Dataset::kOpenbookqa);
  CHECK(dataset_from_string("siqa") == Dataset::kSiqa);
  CHECK(dataset_from_string("SocialIQA") == Dataset::kSiqa);
  CHECK(dataset_from_string("csqa") == Dataset::kCsqa);
  CHECK(dataset_from_string("commonsenseqa") == Dataset::kCsqa);
  CHECK(dataset_from_string("sct") == Dataset::kSct);
  CHECK(dataset_from_string("storycloze") == Dataset::kSct);
  CHECK_THROWS_AS(dataset_from_string("riddlesense"), ConfigError);

  CHECK(to_string(Dataset::kCopa) == "copa");
  CHECK(expected_options(Dataset::kCopa) == 2);
  CHECK(expected_options(Dataset::kOpenbookqa) == 4);
  CHECK(expected_options(Dataset::kSiqa) == 3);
  CHECK(expected_options(Dataset::kCsqa) == 5);
  CHECK(expected_options(Dataset::kSct) == 2);
}

TEST_CASE("instances reject bad shapes") {
  auto inst = make_instance("x", "q", {"a", "b"}, 0);
  CHECK_NOTHROW(inst.validate());

  inst.options = {"a"};
  CHECK_THROWS_AS(inst.validate(), DataError);
  inst.options = {"a", "b", "c", "d", "e", "f"};
  CHECK_THROWS_AS(inst.validate(), DataError);

  inst.options = {"a", "b"};
  inst.gold_index = 2;
  CHECK_THROWS_AS(inst.validate(), DataError);
  inst.gold_index = -1;
  CHECK_THROWS_AS(inst.validate(), DataError);

  inst.gold_index = 0;
  inst.options = {"same  text", "same text"};
  CHECK_THROWS_WITH_AS(inst.validate(), doctest::Contains("duplicate"), DataError);
}

TEST_CASE("copa files verbalize premise and connective") {
  rktest::TempDir dir("copa");
  write_file(
      dir.file("val.jsonl"),
      R"({"premise": "My body cast a shadow over the grass.", "choice1": "The sun was rising.", "choice2": "The grass was cut.", "question": "cause", "idx": 0, "label": 0}
{"premise": "The woman tolerated her friend's difficult behavior.", "choice1": "Her friend apologized.", "choice2": "The woman felt guilty.", "question": "effect", "idx": 7, "label": 1}
)");
  const auto got = load_benchmark(dir.file("val.jsonl"), Dataset::kCopa);
  REQUIRE(got.size() == 2);
  CHECK(got[0].id == "copa-0");
  CHECK(got[0].question == "My body cast a shadow over the grass because");
  CHECK(got[0].options[0] == "the sun was rising.");
  CHECK(got[0].options[1] == "the grass was cut.");
  CHECK(got[0].gold_index == 0);
  CHECK(got[1].id == "copa-7");
  CHECK(got[1].question == "The woman tolerated her friend's difficult behavior so");
  CHECK(got[1].options[0] == "her friend apologized.");
  CHECK(got[1].gold_index == 1);

  write_file(dir.file("bad_q.jsonl"),
             R"({"premise": "P.", "choice1": "a", "choice2": "b", "question": "why", "label": 0})"
             "\n");
  CHECK_THROWS_WITH_AS(load_benchmark(dir.file("bad_q.jsonl"), Dataset::kCopa),
                       doctest::Contains("cause or effect"), DataError);

  write_file(dir.file("no_label.jsonl"),
             R"({"premise": "P.", "choice1": "a", "choice2": "b", "question": "cause"})"
             "\n");
  CHECK_THROWS_WITH_AS(load_benchmark(dir.file("no_label.jsonl"), Dataset::kCopa),
                       doctest::Contains("integer label"), DataError);

  write_file(dir.file("dup.jsonl"),
             R"({"premise": "P.", "choice1": "Same.", "choice2": "same.", "question": "cause", "label": 0})"
             "\n");
  CHECK_THROWS_WITH_AS(load_benchmark(dir.file("dup.jsonl"), Dataset::kCopa),
                       doctest::Contains("duplicate"), DataError);

  write_file(dir.file("empty.jsonl"), "\n\n");
  CHECK_THROWS_WITH_AS(load_benchmark(dir.file("empty.jsonl"), Dataset::kCopa),
                       doctest::Contains("no instances"), DataError);
}

TEST_CASE("lettered-choice files map answerKey to an index") {
  rktest::TempDir dir("letters");
  write_file(
      dir.file("obqa.jsonl"),
      R"({"id": "7-980", "question": {"stem": "The sun is responsible for", "choices": [{"text": "puppies learning new tricks", "label": "A"}, {"text": "children growing up and getting old", "label": "B"}, {"text": "flowers wilting in a vase", "label": "C"}, {"text": "plants sprouting, blooming and wilting", "label": "D"}]}, "answerKey": "D"})"
      "\n");
  const auto obqa = load_benchmark(dir.file("obqa.jsonl"), Dataset::kOpenbookqa);
  REQUIRE(obqa.size() == 1);
  CHECK(obqa[0].id == "7-980");
  CHECK(obqa[0].question == "The sun is responsible for");
  CHECK(obqa[0].options.size() == 4);
  CHECK(obqa[0].options[3] == "plants sprouting, blooming and wilting");
  CHECK(obqa[0].gold_index == 3);

  write_file(
      dir.file("csqa.jsonl"),
      R"({"question": {"stem": "Where would you find a single shower curtain being used?", "choices": [{"label": "A", "text": "bathtub"}, {"label": "B", "text": "washing area"}, {"label": "C", "text": "hotel"}, {"label": "D", "text": "shower stall"}, {"label": "E", "text": "department store"}]}, "answerKey": "C"})"
      "\n");
  const auto csqa = load_benchmark(dir.file("csqa.jsonl"), Dataset::kCsqa);
  REQUIRE(csqa.size() == 1);
  CHECK(csqa[0].id == "csqa-0");
  CHECK(csqa[0].options.size() == 5);
  CHECK(csqa[0].gold_index == 2);

  write_file(
      dir.file("short.jsonl"),
      R"({"id": "few-1", "question": {"stem": "Q", "choices": [{"label": "A", "text": "x"}, {"label": "B", "text": "y"}, {"label": "C", "text": "z"}]}, "answerKey": "B"})"
      "\n");
  CHECK_THROWS_WITH_AS(load_benchmark(dir.file("short.jsonl"), Dataset::kOpenbookqa),
                       doctest::Contains("few-1"), DataError);

  write_file(
      dir.file("nokey.jsonl"),
      R"({"id": "k-2", "question": {"stem": "Q", "choices": [{"label": "A", "text": "x"}, {"label": "B", "text": "y"}, {"label": "C", "text": "z"}, {"label": "D", "text": "w"}]}, "answerKey": "E"})"
      "\n");
  CHECK_THROWS_WITH_AS(load_benchmark(dir.file("nokey.jsonl"), Dataset::kOpenbookqa),
                       doctest::Contains("matches no choice"), DataError);
}

TEST_CASE("siqa labels come from the sidecar file or the record") {
  rktest::TempDir dir("siqa");
  const std::string rows =
      R"({"context": "Tracy has two kids.", "question": "What will Tracy want to do next?", "answerA": "rest", "answerB": "play", "answerC": "cook"}
{"context": "Jan moved away.", "question": "Why did Jan do this?", "answerA": "new job", "answerB": "boredom", "answerC": "weather"}
)";
  write_file(dir.file("dev.jsonl"), rows);
  write_file(dir.file("dev-labels.lst"), "2\n3\n");
  const auto got = load_benchmark(dir.file("dev.jsonl"), Dataset::kSiqa);
  REQUIRE(got.size() == 2);
  CHECK(got[0].id == "siqa-0");
  CHECK(got[0].question == "Tracy has two kids. What will Tracy want to do next?");
  CHECK(got[0].options == std::vector<std::string>{"rest", "play", "cook"});
  CHECK(got[0].gold_index == 1);
  CHECK(got[1].gold_index == 2);

  write_file(dir.file("inline.jsonl"),
             R"({"context": "C.", "question": "Q?", "answerA": "a", "answerB": "b", "answerC": "c", "label": "1"}
{"context": "D.", "question": "R?", "answerA": "d", "answerB": "e", "answerC": "f", "label": 3}
)");
  const auto inlined = load_benchmark(dir.file("inline.jsonl"), Dataset::kSiqa);
  REQUIRE(inlined.size() == 2);
  CHECK(inlined[0].gold_index == 0);
  CHECK(inlined[1].gold_index == 2);

  write_file(dir.file("mismatch.jsonl"), rows);
  write_file(dir.file("mismatch-labels.lst"), "2\n");
  CHECK_THROWS_WITH_AS(load_benchmark(dir.file("mismatch.jsonl"), Dataset::kSiqa),
                       doctest::Contains("label count mismatch"), DataError);

  write_file(dir.file("unlabeled.jsonl"),
             R"({"context": "C.", "question": "Q?", "answerA": "a", "answerB": "b", "answerC": "c"})"
             "\n");
  CHECK_THROWS_WITH_AS(load_benchmark(dir.file("unlabeled.jsonl"), Dataset::kSiqa),
                       doctest::Contains("no label"), DataError);

  write_file(dir.file("badlabel.jsonl"),
             R"({"context": "C.", "question": "Q?", "answerA": "a", "answerB": "b", "answerC": "c", "label": "4"})"
             "\n");
  CHECK_THROWS_WITH_AS(load_benchmark(dir.file("badlabel.jsonl"), Dataset::kSiqa),
                       doctest::Contains("1, 2 or 3"), DataError);
}

TEST_CASE("story cloze rows join the four sentences") {
  rktest::TempDir dir("sct");
  write_file(
      dir.file("test.csv"),
      "InputStoryid,InputSentence1,InputSentence2,InputSentence3,InputSentence4,"
      "RandomFifthSentenceQuiz1,RandomFifthSentenceQuiz2,AnswerRightEnding\n"
      "st-01,Rick grew up poor.,He joined a gang.,\"He was shot, twice.\","
      "He reflected on his life.,Rick turned his life around.,Rick bought a yacht.,1\n"
      ",Ann loved tea.,She ran out.,She went shopping.,The store had a sale.,"
      "She bought two boxes.,She burned the store down.,1\n");
  const auto got = load_benchmark(dir.file("test.csv"), Dataset::kSct);
  REQUIRE(got.size() == 2);
  CHECK(got[0].id == "st-01");
  CHECK(got[0].question ==
        "Rick grew up poor. He joined a gang. He was shot, twice. "
        "He reflected on his life.");
  CHECK(got[0].options[0] == "Rick turned his life around.");
  CHECK(got[0].options[1] == "Rick bought a yacht.");
  CHECK(got[0].gold_index == 0);
  CHECK(got[1].id == "sct-2");

  // Column lookup is by header name, not position.
  write_file(
      dir.file("shuffled.csv"),
      "AnswerRightEnding,RandomFifthSentenceQuiz2,RandomFifthSentenceQuiz1,"
      "InputSentence4,InputSentence3,InputSentence2,InputSentence1,InputStoryid\n"
      "2,Good ending.,Bad ending.,S4.,S3.,S2.,S1.,st-77\n");
  const auto shuffled = load_benchmark(dir.file("shuffled.csv"), Dataset::kSct);
  REQUIRE(shuffled.size() == 1);
  CHECK(shuffled[0].id == "st-77");
  CHECK(shuffled[0].question == "S1. S2. S3. S4.");
  CHECK(shuffled[0].options[1] == "Good ending.");
  CHECK(shuffled[0].gold_index == 1);

  write_file(dir.file("nocol.csv"),
             "InputStoryid,InputSentence1\nst-1,Once upon a time.\n");
  CHECK_THROWS_WITH_AS(load_benchmark(dir.file("nocol.csv"), Dataset::kSct),
                       doctest::Contains("lacks column"), DataError);

  write_file(
      dir.file("badgold.csv"),
      "InputStoryid,InputSentence1,InputSentence2,InputSentence3,InputSentence4,"
      "RandomFifthSentenceQuiz1,RandomFifthSentenceQuiz2,AnswerRightEnding\n"
      "st-1,A.,B.,C.,D.,E.,F.,3\n");
  CHECK_THROWS_WITH_AS(load_benchmark(dir.file("badgold.csv"), Dataset::kSct),
                       doctest::Contains("1 or 2"), DataError);

  write_file(dir.file("headeronly.csv"),
             "InputStoryid,InputSentence1,InputSentence2,InputSentence3,"
             "InputSentence4,RandomFifthSentenceQuiz1,RandomFifthSentenceQuiz2,"
             "AnswerRightEnding\n");
  CHECK_THROWS_WITH_AS(load_benchmark(dir.file("headeronly.csv"), Dataset::kSct),
                       doctest::Contains("no instances"), DataError);
}

TEST_CASE("answer selection is argmax with ties to the lowest index") {
  const auto inst =
      make_instance("t", "pick", {"low", "high", "mid", "high2"}, 1);
  const auto scorer = table_scorer(
      {{"low", 0.1}, {"high", 0.9}, {"mid", 0.5}, {"high2", 0.9}});
  const auto sel = select_answer(inst, scorer);
  CHECK(sel.predicted_index == 1);
  REQUIRE(sel.scores.size() == 4);
  CHECK(sel.scores[0] == doctest::Approx(0.1));
  CHECK(sel.scores[3] == doctest::Approx(0.9));

  const rktest::FnScorer flat([](const std::string&, const std::string&) {
    return 0.25;
  });
  CHECK(select_answer(inst, flat).predicted_index == 0);
}

TEST_CASE("selection depends on content, not option position") {
  Rng rng(404);
  const auto fn = rktest::hash_scorer(11);
  const rktest::FnScorer scorer(fn);
  for (int trial = 0; trial < 25; ++trial) {
    std::vector<std::string> options;
    for (int i = 0; i < 4; ++i) {
      options.push_back("opt " + std::to_string(trial) + "-" + std::to_string(i));
    }
    auto inst = make_instance("p", "q " + std::to_string(trial), options, 0);
    const auto base = select_answer(inst, scorer);
    const std::string winner = inst.options[std::size_t(base.predicted_index)];

    std::vector<std::size_t> perm{0, 1, 2, 3};
    rng.shuffle(perm);
    MCQInstance shuffled = inst;
    for (std::size_t i = 0; i < perm.size(); ++i) {
      shuffled.options[i] = inst.options[perm[i]];
    }
    const auto moved = select_answer(shuffled, scorer);
    CHECK(shuffled.options[std::size_t(moved.predicted_index)] == winner);
  }
}

TEST_CASE("accuracy counts gold argmax hits") {
  const auto scorer = table_scorer({{"right", 0.8},
                                    {"wrong", 0.2},
                                    {"worse", 0.1},
                                    {"best", 0.95},
                                    {"good", 0.9}});
  std::vector<MCQInstance> instances{
      make_instance("a", "q1", {"right", "wrong"}, 0),         // hit
      make_instance("b", "q2", {"wrong", "right", "worse"}, 1),  // hit
      make_instance("c", "q3", {"good", "best"}, 0),           // miss
      make_instance("d", "q4", {"worse", "wrong"}, 0),         // miss
  };
  CHECK(accuracy(instances, scorer) == doctest::Approx(0.5));
  CHECK_THROWS_AS(accuracy({}, scorer), DataError);
}

TEST_CASE("diagnostics aggregate per-option calls at the 0.5 boundary") {
  const auto scorer = table_scorer({{"g+", 0.9},
                                    {"d-", 0.1},
                                    {"e-", 0.2},
                                    {"g-", 0.3},
                                    {"d+", 0.7},
                                    {"h+", 0.8},
                                    {"half", 0.5}});
  std::vector<MCQInstance> instances{
      // gold positive, distractors negative: the ideal call.
      make_instance("A", "q", {"g+", "d-", "e-"}, 0),
      // everything negative.
      make_instance("B", "q", {"g-", "d-"}, 0),
      // everything positive.
      make_instance("C", "q", {"g+", "d+", "h+"}, 0),
      // gold negative while a distractor is positive.
      make_instance("D", "q", {"g-", "d+"}, 0),
  };
  const auto rep = diagnostics(instances, scorer);
  CHECK(rep.pct_all_negative == doctest::Approx(25.0));
  CHECK(rep.pct_all_positive == doctest::Approx(25.0));
  CHECK(rep.pct_incorrect_as_negative == doctest::Approx(50.0));
  CHECK(rep.pct_correct_as_positive == doctest::Approx(50.0));
  CHECK(rep.pct_accurate == doctest::Approx(25.0));

  // Exactly 0.5 counts as a negative call.
  const auto boundary = diagnostics({make_instance("E", "q", {"half", "g+"}, 0)},
                                    table_scorer({{"half", 0.5}, {"g+", 0.9}}));
  CHECK(boundary.pct_all_positive == doctest::Approx(0.0));
  CHECK(boundary.pct_correct_as_positive == doctest::Approx(0.0));

  CHECK_THROWS_AS(diagnostics({}, scorer), DataError);
}

TEST_CASE("diagnostics match exhaustive enumeration for random scorers") {
  Rng rng(2024);
  for (int model = 0; model < 20; ++model) {
    const auto fn = rktest::hash_scorer(1000 + std::uint64_t(model));
    const rktest::FnScorer scorer(fn);

    std::vector<MCQInstance> instances;
    const int n = 40;
    for (int i = 0; i < n; ++i) {
      const int arity = 2 + int(rng.uniform(4));
      std::vector<std::string> options;
      for (int k = 0; k < arity; ++k) {
        options.push_back("m" + std::to_string(model) + " opt " +
                          std::to_string(i) + "." + std::to_string(k));
      }
      instances.push_back(make_instance("i" + std::to_string(i),
                                        "question " + std::to_string(i), options,
                                        int(rng.uniform(std::uint64_t(arity)))));
    }

    // Independent oracle: walk every option call directly.
    int all_neg = 0, all_pos = 0, incor_neg = 0, cor_pos = 0, accurate = 0;
    for (const auto& inst : instances) {
      bool an = true, ap = true, in = true, cp = false;
      for (std::size_t k = 0; k < inst.options.size(); ++k) {
        const bool pos = fn(inst.question, inst.options[k]) > 0.5;
        an = an && !pos;
        ap = ap && pos;
        if (int(k) == inst.gold_index) {
          cp = pos;
        } else if (pos) {
          in = false;
        }
      }
      all_neg += an;
      all_pos += ap;
      incor_neg += in;
      cor_pos += cp;
      accurate += (in && cp);
    }

    const auto rep = diagnostics(instances, scorer);
    CHECK(rep.pct_all_negative == doctest::Approx(100.0 * all_neg / n).epsilon(1e-12));
    CHECK(rep.pct_all_positive == doctest::Approx(100.0 * all_pos / n).epsilon(1e-12));
    CHECK(rep.pct_incorrect_as_negative ==
          doctest::Approx(100.0 * incor_neg / n).epsilon(1e-12));
    CHECK(rep.pct_correct_as_positive ==
          doctest::Approx(100.0 * cor_pos / n).epsilon(1e-12));
    CHECK(rep.pct_accurate == doctest::Approx(100.0 * accurate / n).epsilon(1e-12));
  }
}

TEST_CASE("evaluate matches accuracy and diagnostics computed separately") {
  const auto fn = rktest::hash_scorer(77);
  const rktest::FnScorer scorer(fn);
  std::vector<MCQInstance> instances;
  for (int i = 0; i < 30; ++i) {
    instances.push_back(make_instance(
        "e" + std::to_string(i), "stem " + std::to_string(i),
        {"choice a" + std::to_string(i), "choice b" + std::to_string(i),
         "choice c" + std::to_string(i)},
        i % 3));
  }

  const auto report = evaluate(instances, scorer, "fixture", true);
  CHECK(report.dataset == "fixture");
  CHECK(report.instance_count == instances.size());
  CHECK(report.accuracy == doctest::Approx(accuracy(instances, scorer)).epsilon(1e-12));
  const auto diag = diagnostics(instances, scorer);
  CHECK(report.diagnostics.to_json() == diag.to_json());

  REQUIRE(report.per_instance.size() == instances.size());
  const auto& row = report.per_instance[4];
  CHECK(row.at("id") == "e4");
  CHECK(row.at("gold_index") == 1);
  CHECK(row.at("scores").size() == 3);
  const auto sel = select_answer(instances[4], scorer);
  CHECK(row.at("predicted_index") == sel.predicted_index);
  CHECK(row.at("correct") == (sel.predicted_index == instances[4].gold_index));

  const auto quiet = evaluate(instances, scorer, "fixture", false);
  CHECK(quiet.per_instance.empty());
  CHECK(quiet.to_json() == report.to_json());
  CHECK(report.to_json().at("accuracy") == report.accuracy);

  CHECK_THROWS_AS(evaluate({}, scorer, "fixture", false), DataError);
}
