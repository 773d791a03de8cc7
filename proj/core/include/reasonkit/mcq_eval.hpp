#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "reasonkit/scorer.hpp"

namespace rk {

enum class Dataset { kCopa, kOpenbookqa, kSiqa, kCsqa, kSct };

Dataset dataset_from_string(const std::string& name);
std::string to_string(Dataset dataset);
int expected_options(Dataset dataset);  // copa 2, openbookqa 4, siqa 3, csqa 5, sct 2

struct MCQInstance {
  std::string id;
  std::string question;  // context and question merged
  std::vector<std::string> options;
  int gold_index = 0;

  void validate() const;
};

// Reads a benchmark file in its native schema (see docs/datasets.md).
// Instances violating the dataset's option arity raise DataError naming
// the instance id.
std::vector<MCQInstance> load_benchmark(const std::filesystem::path& path,
                                        Dataset dataset);

struct Selection {
  int predicted_index = 0;
  std::vector<double> scores;  // reasonableness per option, input order
};

// Argmax reasonableness over the options; ties go to the lowest index.
Selection select_answer(const MCQInstance& instance, const Scorer& scorer);

double accuracy(const std::vector<MCQInstance>& instances, const Scorer& scorer);

struct DiagnosticsReport {
  double pct_all_negative = 0.0;
  double pct_all_positive = 0.0;
  double pct_incorrect_as_negative = 0.0;
  double pct_correct_as_positive = 0.0;
  double pct_accurate = 0.0;

  json to_json() const;
};

// Per-option positive/negative calls at the 0.5 boundary (p_plus > 0.5 is
// positive), aggregated per instance:
//   all_negative: every option called negative
//   all_positive: every option called positive
//   incorrect_as_negative: every non-gold option called negative
//   correct_as_positive: the gold option called positive
//   accurate: incorrect_as_negative and correct_as_positive both hold
DiagnosticsReport diagnostics(const std::vector<MCQInstance>& instances,
                              const Scorer& scorer);

struct EvalReport {
  std::string dataset;
  std::size_t instance_count = 0;
  double accuracy = 0.0;
  DiagnosticsReport diagnostics;
  std::vector<json> per_instance;  // filled when dump_scores is set

  json to_json() const;  // summary only; per_instance ships as JSONL
};

// Scores every instance once and derives accuracy plus diagnostics.
EvalReport evaluate(const std::vector<MCQInstance>& instances, const Scorer& scorer,
                    const std::string& dataset_name, bool dump_scores);

}  // namespace rk
