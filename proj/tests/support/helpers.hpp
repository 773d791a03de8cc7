#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "reasonkit/kg_pipeline.hpp"
#include "reasonkit/mcq_eval.hpp"
#include "reasonkit/scorer.hpp"

namespace rktest {

// Unique scratch directory under the process temp root; removed on scope
// exit so parallel test cases never collide.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path file(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// Runs the built command-line binary with the given arguments. Returns the
// exit code; stdout and stderr are captured into *output when non-null.
int run_cli(const std::vector<std::string>& args, std::string* output = nullptr);

// Scorer stub driven by a plain function over (question, answer).
class FnScorer : public rk::Scorer {
 public:
  using Fn = std::function<double(const std::string&, const std::string&)>;
  explicit FnScorer(Fn fn) : fn_(std::move(fn)) {}
  rk::ScorePair score(const std::string& question,
                      const std::string& answer) const override;

 private:
  Fn fn_;
};

// Deterministic pseudo-random scorer: p_plus is a hash of (seed, q, a)
// mapped into (0, 1). Distinct inputs essentially never tie.
FnScorer::Fn hash_scorer(std::uint64_t seed);

// Symmetric central difference of f at x.
double central_diff(const std::function<double(double)>& f, double x,
                    double h = 1e-6);

// Relative gap |a - b| / max(1, |a|, |b|).
double rel_gap(double a, double b);

// Group-structured knowledge graph that a small encoder can separate:
// entities are "<group-word> <item-word>", and relation r accepts tails
// from group r only, mirroring type-constrained relations in real graphs
// (a location-like relation takes location-like tails). Every generated
// triple respects the rule, so reasonableness is decidable from the
// surface tokens alone. Requires relations <= groups.
struct SyntheticKgConfig {
  int groups = 10;
  int items_per_group = 20;  // groups * items_per_group entities total
  int relations = 6;
  int tails_per_head = 4;  // triples = groups * items * relations * this
  int mcq_count = 200;     // held-out 4-option questions
  std::uint64_t seed = 7;
};

struct SyntheticKg {
  rk::TemplateTable templates;
  std::vector<rk::Triple> triples;
  std::vector<rk::MCQInstance> mcq;
};

SyntheticKg make_synthetic_kg(const SyntheticKgConfig& config);

// Drops corpus examples whose sampled negative answer happens to satisfy
// the generator's compatibility rule, leaving cleanly separable pairs.
// Returns the number of removed examples.
std::size_t prune_false_negatives(rk::Corpus& corpus,
                                  const SyntheticKgConfig& config);

// Writes the triples as a TSV dump (head, relation, tail per line).
void write_triples_tsv(const std::filesystem::path& path,
                       const std::vector<rk::Triple>& triples);

}  // namespace rktest
