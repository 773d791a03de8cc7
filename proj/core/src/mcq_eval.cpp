#include "reasonkit/mcq_eval.hpp"

#include <algorithm>
#include <cctype>

#include "reasonkit/errors.hpp"
#include "reasonkit/io.hpp"
#include "reasonkit/text.hpp"

namespace rk {

Dataset dataset_from_string(const std::string& name) {
  const std::string n = to_lower(name);
  if (n == "copa") return Dataset::kCopa;
  if (n == "openbookqa" || n == "obqa") return Dataset::kOpenbookqa;
  if (n == "siqa" || n == "socialiqa") return Dataset::kSiqa;
  if (n == "csqa" || n == "commonsenseqa") return Dataset::kCsqa;
  if (n == "sct" || n == "storycloze") return Dataset::kSct;
  throw ConfigError("unknown dataset: " + name);
}

std::string to_string(Dataset dataset) {
  switch (dataset) {
    case Dataset::kCopa: return "copa";
    case Dataset::kOpenbookqa: return "openbookqa";
    case Dataset::kSiqa: return "siqa";
    case Dataset::kCsqa: return "csqa";
    case Dataset::kSct: return "sct";
  }
  return "unknown";
}

int expected_options(Dataset dataset) {
  switch (dataset) {
    case Dataset::kCopa: return 2;
    case Dataset::kOpenbookqa: return 4;
    case Dataset::kSiqa: return 3;
    case Dataset::kCsqa: return 5;
    case Dataset::kSct: return 2;
  }
  return 0;
}

void MCQInstance::validate() const {
  if (options.size() < 2 || options.size() > 5) {
    throw DataError("instance " + id + " has " + std::to_string(options.size()) +
                    " options, want 2-5");
  }
  if (gold_index < 0 || std::size_t(gold_index) >= options.size()) {
    throw DataError("instance " + id + " gold index out of range");
  }
  for (std::size_t i = 0; i < options.size(); ++i) {
    for (std::size_t j = i + 1; j < options.size(); ++j) {
      if (normalize_ws(options[i]) == normalize_ws(options[j])) {
        throw DataError("instance " + id + " has duplicate options");
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Loaders

namespace {

void check_arity(const MCQInstance& inst, Dataset dataset) {
  inst.validate();
  const int want = expected_options(dataset);
  if (int(inst.options.size()) != want) {
    throw DataError("instance " + inst.id + " has " +
                    std::to_string(inst.options.size()) + " options, " +
                    to_string(dataset) + " requires " + std::to_string(want));
  }
}

std::string require_string(const json& row, const char* key, const std::string& id) {
  if (!row.contains(key) || !row.at(key).is_string()) {
    throw DataError("instance " + id + " lacks string field '" + key + "'");
  }
  return row.at(key).get<std::string>();
}

std::string lower_first(std::string text) {
  for (char& c : text) {
    const auto uc = static_cast<unsigned char>(c);
    if (uc >= 0x80) break;
    if (std::isalpha(uc)) {
      c = char(std::tolower(uc));
      break;
    }
    if (!std::isspace(uc)) break;
  }
  return text;
}

std::string strip_final_period(std::string text) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) {
    text.pop_back();
  }
  if (!text.empty() && text.back() == '.') text.pop_back();
  return text;
}

// SuperGLUE-style JSONL: premise, choice1, choice2, question (cause or
// effect), label. The premise and choice are joined with the connective
// the question type implies.
std::vector<MCQInstance> load_copa(const std::filesystem::path& path) {
  std::vector<MCQInstance> out;
  std::size_t row_index = 0;
  for (const auto& row : read_jsonl(path)) {
    MCQInstance inst;
    inst.id = row.contains("idx") ? "copa-" + row.at("idx").dump()
                                  : "copa-" + std::to_string(row_index);
    const std::string premise = require_string(row, "premise", inst.id);
    const std::string qtype = require_string(row, "question", inst.id);
    std::string connective;
    if (qtype == "cause") {
      connective = " because";
    } else if (qtype == "effect") {
      connective = " so";
    } else {
      throw DataError("instance " + inst.id + " question type must be cause or effect");
    }
    inst.question = normalize_ws(strip_final_period(premise) + connective);
    inst.options.push_back(lower_first(require_string(row, "choice1", inst.id)));
    inst.options.push_back(lower_first(require_string(row, "choice2", inst.id)));
    if (!row.contains("label") || !row.at("label").is_number_integer()) {
      throw DataError("instance " + inst.id + " lacks an integer label");
    }
    inst.gold_index = row.at("label").get<int>();
    check_arity(inst, Dataset::kCopa);
    out.push_back(std::move(inst));
    ++row_index;
  }
  if (out.empty()) throw DataError("no instances in " + path.string());
  return out;
}

// Shared by OpenBookQA and CommonsenseQA: question.stem plus lettered
// choices, gold given by answerKey.
std::vector<MCQInstance> load_lettered_choices(const std::filesystem::path& path,
                                               Dataset dataset) {
  std::vector<MCQInstance> out;
  std::size_t row_index = 0;
  for (const auto& row : read_jsonl(path)) {
    MCQInstance inst;
    inst.id = row.contains("id") && row.at("id").is_string()
                  ? row.at("id").get<std::string>()
                  : to_string(dataset) + "-" + std::to_string(row_index);
    if (!row.contains("question") || !row.at("question").is_object()) {
      throw DataError("instance " + inst.id + " lacks a question object");
    }
    const json& q = row.at("question");
    inst.question = require_string(q, "stem", inst.id);
    if (!q.contains("choices") || !q.at("choices").is_array()) {
      throw DataError("instance " + inst.id + " lacks a choices array");
    }
    const std::string answer_key = require_string(row, "answerKey", inst.id);
    inst.gold_index = -1;
    for (const auto& choice : q.at("choices")) {
      const std::string label = require_string(choice, "label", inst.id);
      if (label == answer_key) inst.gold_index = int(inst.options.size());
      inst.options.push_back(require_string(choice, "text", inst.id));
    }
    if (inst.gold_index < 0) {
      throw DataError("instance " + inst.id + " answerKey matches no choice");
    }
    check_arity(inst, dataset);
    out.push_back(std::move(inst));
    ++row_index;
  }
  if (out.empty()) throw DataError("no instances in " + path.string());
  return out;
}

// Native JSONL with context/question/answerA-C. Labels come from a
// "label" field (1-3) or the sibling "<stem>-labels.lst" file.
std::vector<MCQInstance> load_siqa(const std::filesystem::path& path) {
  const auto rows = read_jsonl(path);
  std::vector<std::string> labels;
  const auto labels_path =
      path.parent_path() / (path.stem().string() + "-labels.lst");
  if (std::filesystem::exists(labels_path)) {
    for (const auto& line : read_lines(labels_path)) {
      if (!line.empty()) labels.push_back(normalize_ws(line));
    }
    if (labels.size() != rows.size()) {
      throw DataError("label count mismatch between " + path.string() + " and " +
                      labels_path.string());
    }
  }
  std::vector<MCQInstance> out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const json& row = rows[i];
    MCQInstance inst;
    inst.id = "siqa-" + std::to_string(i);
    inst.question = normalize_ws(require_string(row, "context", inst.id) + " " +
                                 require_string(row, "question", inst.id));
    inst.options.push_back(require_string(row, "answerA", inst.id));
    inst.options.push_back(require_string(row, "answerB", inst.id));
    inst.options.push_back(require_string(row, "answerC", inst.id));
    std::string label;
    if (!labels.empty()) {
      label = labels[i];
    } else if (row.contains("label")) {
      label = row.at("label").is_string() ? row.at("label").get<std::string>()
                                          : row.at("label").dump();
    } else {
      throw DataError("instance " + inst.id +
                      " has no label; supply a -labels.lst file or label field");
    }
    if (label != "1" && label != "2" && label != "3") {
      throw DataError("instance " + inst.id + " label must be 1, 2 or 3");
    }
    inst.gold_index = label[0] - '1';
    check_arity(inst, Dataset::kSiqa);
    out.push_back(std::move(inst));
  }
  if (out.empty()) throw DataError("no instances in " + path.string());
  return out;
}

// Story Cloze CSV: four story sentences, two candidate endings, 1-based
// right-ending column.
std::vector<MCQInstance> load_sct(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  if (lines.empty()) throw DataError("no instances in " + path.string());
  const auto header = split_csv_line(lines[0]);
  auto col = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      throw DataError(path.string() + " lacks column " + name);
    }
    return std::size_t(it - header.begin());
  };
  const std::size_t id_col = col("InputStoryid");
  const std::size_t sent_cols[4] = {col("InputSentence1"), col("InputSentence2"),
                                    col("InputSentence3"), col("InputSentence4")};
  const std::size_t quiz1_col = col("RandomFifthSentenceQuiz1");
  const std::size_t quiz2_col = col("RandomFifthSentenceQuiz2");
  const std::size_t answer_col = col("AnswerRightEnding");

  std::vector<MCQInstance> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto cells = split_csv_line(lines[i]);
    const std::size_t need = std::max({id_col, sent_cols[3], quiz2_col, answer_col});
    if (cells.size() <= need) {
      throw DataError(path.string() + ":" + std::to_string(i + 1) + " has too few cells");
    }
    MCQInstance inst;
    inst.id = cells[id_col].empty() ? "sct-" + std::to_string(i) : cells[id_col];
    std::string story;
    for (const auto c : sent_cols) {
      if (!story.empty()) story += ' ';
      story += cells[c];
    }
    inst.question = normalize_ws(story);
    inst.options.push_back(cells[quiz1_col]);
    inst.options.push_back(cells[quiz2_col]);
    const std::string answer = normalize_ws(cells[answer_col]);
    if (answer != "1" && answer != "2") {
      throw DataError("instance " + inst.id + " right ending must be 1 or 2");
    }
    inst.gold_index = answer[0] - '1';
    check_arity(inst, Dataset::kSct);
    out.push_back(std::move(inst));
  }
  if (out.empty()) throw DataError("no instances in " + path.string());
  return out;
}

}  // namespace

std::vector<MCQInstance> load_benchmark(const std::filesystem::path& path,
                                        Dataset dataset) {
  switch (dataset) {
    case Dataset::kCopa: return load_copa(path);
    case Dataset::kOpenbookqa: return load_lettered_choices(path, dataset);
    case Dataset::kSiqa: return load_siqa(path);
    case Dataset::kCsqa: return load_lettered_choices(path, dataset);
    case Dataset::kSct: return load_sct(path);
  }
  throw ConfigError("unhandled dataset");
}

// ---------------------------------------------------------------------------
// Scoring

namespace {

std::vector<double> option_scores(const MCQInstance& instance, const Scorer& scorer) {
  std::vector<TextPair> inputs;
  inputs.reserve(instance.options.size());
  for (const auto& option : instance.options) {
    inputs.push_back({instance.question, option});
  }
  const auto pairs = scorer.score_batch(inputs);
  std::vector<double> scores;
  scores.reserve(pairs.size());
  for (const auto& p : pairs) scores.push_back(reasonableness(p));
  return scores;
}

int argmax_lowest(const std::vector<double>& scores) {
  int best = 0;
  for (int i = 1; i < int(scores.size()); ++i) {
    if (scores[std::size_t(i)] > scores[std::size_t(best)]) best = i;
  }
  return best;
}

}  // namespace

Selection select_answer(const MCQInstance& instance, const Scorer& scorer) {
  instance.validate();
  Selection sel;
  sel.scores = option_scores(instance, scorer);
  sel.predicted_index = argmax_lowest(sel.scores);
  return sel;
}

double accuracy(const std::vector<MCQInstance>& instances, const Scorer& scorer) {
  if (instances.empty()) throw DataError("accuracy over an empty instance set");
  std::size_t hits = 0;
  for (const auto& inst : instances) {
    if (select_answer(inst, scorer).predicted_index == inst.gold_index) ++hits;
  }
  return double(hits) / double(instances.size());
}

json DiagnosticsReport::to_json() const {
  return json{{"pct_all_negative", pct_all_negative},
              {"pct_all_positive", pct_all_positive},
              {"pct_incorrect_as_negative", pct_incorrect_as_negative},
              {"pct_correct_as_positive", pct_correct_as_positive},
              {"pct_accurate", pct_accurate}};
}

namespace {

struct InstanceCalls {
  bool all_negative = true;
  bool all_positive = true;
  bool incorrect_as_negative = true;
  bool correct_as_positive = false;
};

InstanceCalls classify(const MCQInstance& inst, const std::vector<double>& scores) {
  InstanceCalls calls;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool positive = scores[i] > 0.5;
    calls.all_negative &= !positive;
    calls.all_positive &= positive;
    if (int(i) == inst.gold_index) {
      calls.correct_as_positive = positive;
    } else if (positive) {
      calls.incorrect_as_negative = false;
    }
  }
  return calls;
}

}  // namespace

DiagnosticsReport diagnostics(const std::vector<MCQInstance>& instances,
                              const Scorer& scorer) {
  if (instances.empty()) throw DataError("diagnostics over an empty instance set");
  std::size_t all_neg = 0, all_pos = 0, incor_neg = 0, cor_pos = 0, accurate = 0;
  for (const auto& inst : instances) {
    inst.validate();
    const auto calls = classify(inst, option_scores(inst, scorer));
    all_neg += calls.all_negative;
    all_pos += calls.all_positive;
    incor_neg += calls.incorrect_as_negative;
    cor_pos += calls.correct_as_positive;
    accurate += calls.incorrect_as_negative && calls.correct_as_positive;
  }
  const double denom = double(instances.size()) / 100.0;
  DiagnosticsReport rep;
  rep.pct_all_negative = double(all_neg) / denom;
  rep.pct_all_positive = double(all_pos) / denom;
  rep.pct_incorrect_as_negative = double(incor_neg) / denom;
  rep.pct_correct_as_positive = double(cor_pos) / denom;
  rep.pct_accurate = double(accurate) / denom;
  return rep;
}

json EvalReport::to_json() const {
  return json{{"dataset", dataset},
              {"instance_count", instance_count},
              {"accuracy", accuracy},
              {"diagnostics", diagnostics.to_json()}};
}

EvalReport evaluate(const std::vector<MCQInstance>& instances, const Scorer& scorer,
                    const std::string& dataset_name, bool dump_scores) {
  if (instances.empty()) throw DataError("evaluate over an empty instance set");
  EvalReport report;
  report.dataset = dataset_name;
  report.instance_count = instances.size();
  std::size_t hits = 0, all_neg = 0, all_pos = 0, incor_neg = 0, cor_pos = 0,
              accurate = 0;
  for (const auto& inst : instances) {
    inst.validate();
    const auto scores = option_scores(inst, scorer);
    const int predicted = argmax_lowest(scores);
    const bool correct = predicted == inst.gold_index;
    hits += correct;
    const auto calls = classify(inst, scores);
    all_neg += calls.all_negative;
    all_pos += calls.all_positive;
    incor_neg += calls.incorrect_as_negative;
    cor_pos += calls.correct_as_positive;
    accurate += calls.incorrect_as_negative && calls.correct_as_positive;
    if (dump_scores) {
      report.per_instance.push_back(json{{"id", inst.id},
                                         {"gold_index", inst.gold_index},
                                         {"predicted_index", predicted},
                                         {"correct", correct},
                                         {"scores", scores}});
    }
  }
  report.accuracy = double(hits) / double(instances.size());
  const double denom = double(instances.size()) / 100.0;
  report.diagnostics.pct_all_negative = double(all_neg) / denom;
  report.diagnostics.pct_all_positive = double(all_pos) / denom;
  report.diagnostics.pct_incorrect_as_negative = double(incor_neg) / denom;
  report.diagnostics.pct_correct_as_positive = double(cor_pos) / denom;
  report.diagnostics.pct_accurate = double(accurate) / denom;
  return report;
}

}  // namespace rk
