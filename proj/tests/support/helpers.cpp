#include "support/helpers.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "reasonkit/rng.hpp"
#include "reasonkit/text.hpp"

namespace fs = std::filesystem;

namespace rktest {

namespace {
std::atomic<int> g_dir_counter{0};
}

TempDir::TempDir(const std::string& tag) {
  const int n = g_dir_counter.fetch_add(1);
  path_ = fs::temp_directory_path() /
          ("rk_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(n));
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

int run_cli(const std::vector<std::string>& args, std::string* output) {
  std::string cmd = RK_CLI_PATH;
  for (const auto& a : args) cmd += " '" + a + "'";
  TempDir capture("cli_out");
  const fs::path log = capture.file("log.txt");
  cmd += " >" + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  if (output) {
    std::ifstream in(log);
    std::ostringstream buf;
    buf << in.rdbuf();
    *output = buf.str();
  }
  if (status < 0) return -1;
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

rk::ScorePair FnScorer::score(const std::string& question,
                              const std::string& answer) const {
  rk::ScorePair s;
  s.p_plus = fn_(question, answer);
  s.p_minus = 1.0 - s.p_plus;
  s.h = Eigen::VectorXd::Zero(4);
  return s;
}

FnScorer::Fn hash_scorer(std::uint64_t seed) {
  return [seed](const std::string& q, const std::string& a) {
    std::uint64_t h = seed ^ 0x9e3779b97f4a7c15ULL;
    for (const char c : q) h = (h ^ std::uint64_t(std::uint8_t(c))) * 0x100000001b3ULL;
    h = (h ^ 0x1f) * 0x100000001b3ULL;
    for (const char c : a) h = (h ^ std::uint64_t(std::uint8_t(c))) * 0x100000001b3ULL;
    h = rk::mix_seed(h, 3);
    // Map into the open interval (0, 1).
    return (double(h >> 11) + 0.5) / 9007199254740992.0;
  };
}

double central_diff(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

double rel_gap(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

namespace {

const char* kGroupWords[] = {
    "amber",  "basalt", "cedar",  "dune",    "ember",  "fjord",  "garnet",
    "harbor", "iris",   "juniper", "kelp",   "lagoon", "maple",  "nectar",
    "onyx",   "pearl",  "quartz", "reef",    "sage",   "tundra", "umber",
    "violet", "willow", "xenon",  "yarrow",  "zephyr", "bramble", "cobalt",
    "drift",  "eddy",   "flint",  "grove",   "heath",  "inlet",  "jasper",
    "knoll",  "larch",  "mirth",  "nimbus",  "orchid"};

const char* kItemWords[] = {"alpha",   "bravo",  "charlie", "delta",  "echo",
                            "foxtrot", "golf",   "hotel",   "india",  "juliet",
                            "kilo",    "lima",   "mike",    "november", "oscar",
                            "papa",    "quebec", "romeo",   "sierra", "tango"};

const char* kRelationVerbs[] = {"matches", "follows", "precedes", "contains",
                                "carries", "visits",  "nears",    "guards"};

std::string entity(int group, int item) {
  return std::string(kGroupWords[group]) + " " + kItemWords[item];
}

}  // namespace

SyntheticKg make_synthetic_kg(const SyntheticKgConfig& config) {
  const int G = config.groups;
  const int M = config.items_per_group;
  const int R = config.relations;
  if (G < 2 || G > 40 || M < 1 || M > 20 || R < 1 || R > 8 || R > G ||
      config.tails_per_head > M) {
    throw std::invalid_argument("synthetic kg config out of range");
  }

  SyntheticKg out;
  std::vector<rk::RelationTemplate> rels;
  for (int r = 0; r < R; ++r) {
    rels.push_back({"rel" + std::to_string(r),
                    std::string("{head} ") + kRelationVerbs[r]});
  }
  out.templates = rk::make_table("synthetic", rels, {});

  rk::Rng rng(rk::mix_seed(config.seed, 0x5EED));
  std::size_t row = 0;
  for (int r = 0; r < R; ++r) {
    for (int g = 0; g < G; ++g) {
      const int tail_group = r;
      for (int i = 0; i < M; ++i) {
        const auto picks =
            rng.sample_indices(std::size_t(M), std::size_t(config.tails_per_head));
        for (const std::size_t j : picks) {
          rk::Triple t;
          t.head = entity(g, i);
          t.relation = "rel" + std::to_string(r);
          t.tail = entity(tail_group, int(j));
          t.source_kg = rk::SourceKg::kConceptNet;
          t.row = row++;
          out.triples.push_back(std::move(t));
        }
      }
    }
  }

  rk::Rng mcq_rng(rk::mix_seed(config.seed, 0xBE7C));
  for (int q = 0; q < config.mcq_count; ++q) {
    const int r = int(mcq_rng.uniform(std::uint64_t(R)));
    const int g = int(mcq_rng.uniform(std::uint64_t(G)));
    const int tail_group = r;
    rk::Triple t;
    t.head = entity(g, int(mcq_rng.uniform(std::uint64_t(M))));
    t.relation = "rel" + std::to_string(r);
    t.tail = entity(tail_group, int(mcq_rng.uniform(std::uint64_t(M))));
    const rk::QAPair pair = rk::verbalize(t, out.templates);

    rk::MCQInstance inst;
    inst.id = "syn" + std::to_string(q);
    inst.question = pair.question;
    inst.gold_index = int(mcq_rng.uniform(4));
    std::set<std::string> used{pair.answer};
    for (int o = 0; o < 4; ++o) {
      if (o == inst.gold_index) {
        inst.options.push_back(pair.answer);
        continue;
      }
      // Distractors come from groups incompatible with the relation.
      std::string candidate;
      do {
        const int wrong_group = int(mcq_rng.uniform(std::uint64_t(G)));
        if (wrong_group == tail_group) continue;
        candidate = entity(wrong_group, int(mcq_rng.uniform(std::uint64_t(M))));
      } while (candidate.empty() || used.count(candidate));
      used.insert(candidate);
      inst.options.push_back(candidate);
    }
    inst.validate();
    out.mcq.push_back(std::move(inst));
  }
  return out;
}

std::size_t prune_false_negatives(rk::Corpus& corpus,
                                  const SyntheticKgConfig& config) {
  const int G = config.groups;
  auto group_of = [&](const std::string& word) {
    for (int g = 0; g < G; ++g) {
      if (word == kGroupWords[g]) return g;
    }
    return -1;
  };
  auto compatible = [&](const rk::TrainingExample& ex) {
    const auto q = rk::tokenize(rk::to_lower(ex.question), /*keep_punct=*/false);
    const auto a = rk::tokenize(rk::to_lower(ex.incorrect_answer), false);
    if (q.size() < 3 || a.empty()) return false;
    const int neg = group_of(a[0]);
    if (neg < 0) return false;
    for (int r = 0; r < config.relations; ++r) {
      if (q[2] == kRelationVerbs[r]) return neg == r;
    }
    return false;
  };
  std::size_t dropped = 0;
  for (auto* split : {&corpus.train, &corpus.valid}) {
    const auto keep_end = std::remove_if(split->begin(), split->end(), compatible);
    dropped += std::size_t(split->end() - keep_end);
    split->erase(keep_end, split->end());
  }
  return dropped;
}

void write_triples_tsv(const fs::path& path, const std::vector<rk::Triple>& triples) {
  std::ofstream out(path);
  for (const auto& t : triples) {
    out << t.head << "\t" << t.relation << "\t" << t.tail << "\n";
  }
}

}  // namespace rktest
