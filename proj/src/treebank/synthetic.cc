#include "spad/treebank/synthetic.h"

#include <algorithm>
#include <set>

#include "spad/base/error.h"
#include "spad/base/rng.h"

namespace spad::treebank {

namespace {

constexpr int kMaxAttempts = 1000;

const PosClass *FindClass(const SynthGrammarConfig &c, const std::string &name) {
  for (const auto &pc : c.pos_classes) {
    if (pc.name == name) return &pc;
  }
  return nullptr;
}

std::string PseudoWord(Rng &rng) {
  static const char *kOnsets[] = {"b", "d",  "f",  "g",  "k",  "l",  "m",
                                  "n", "p",  "r",  "s",  "t",  "v",  "z",
                                  "br", "tr", "st", "pl", "gr", "sh", "ch"};
  static const char *kVowels[] = {"a", "e", "i", "o", "u", "ai", "ou", "ee"};
  const int syllables = 1 + static_cast<int>(rng.UniformInt(3));
  std::string w;
  for (int s = 0; s < syllables; ++s) {
    w += kOnsets[rng.UniformInt(std::size(kOnsets))];
    w += kVowels[rng.UniformInt(std::size(kVowels))];
  }
  if (rng.Bernoulli(0.4)) w += "n";
  return w;
}

struct Lexicon {
  std::map<std::string, std::vector<std::string>> words;
  std::map<std::string, std::vector<double>> cumulative;  // Zipf weights
};

Lexicon BuildLexicon(const SynthGrammarConfig &config) {
  Lexicon lex;
  Rng rng = Rng::Derive(config.seed, "lexicon");
  std::set<std::string> used;
  for (const auto &pc : config.pos_classes) {
    for (const auto &w : pc.words) used.insert(w);
  }
  for (const auto &pc : config.pos_classes) {
    std::vector<std::string> words;
    if (!pc.words.empty()) {
      words = pc.words;
    } else {
      if (!pc.share_class.empty()) {
        const auto &shared = lex.words.at(pc.share_class);
        for (int i = 0; i < pc.share_count; ++i) words.push_back(shared[i]);
      }
      while (static_cast<int>(words.size()) < pc.size) {
        std::string w = PseudoWord(rng);
        if (used.insert(w).second) words.push_back(w);
      }
    }
    std::vector<double> cum;
    double total = 0.0;
    for (size_t r = 0; r < words.size(); ++r) {
      total += 1.0 / static_cast<double>(r + 1);
      cum.push_back(total);
    }
    for (double &c : cum) c /= total;
    lex.words[pc.name] = std::move(words);
    lex.cumulative[pc.name] = std::move(cum);
  }
  return lex;
}

size_t Choose(const std::vector<double> &cumulative, Rng &rng) {
  const double u = rng.Uniform();
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  if (it == cumulative.end()) return cumulative.size() - 1;
  return static_cast<size_t>(it - cumulative.begin());
}

class Generator {
 public:
  Generator(const SynthGrammarConfig &config, const Lexicon &lexicon)
      : config_(config), lexicon_(lexicon) {
    for (const auto &[lhs, prods] : config.templates) {
      const auto &w = config.weights.at(lhs);
      std::vector<size_t> terminal_only, all;
      size_t min_nt = SIZE_MAX;
      for (size_t i = 0; i < prods.size(); ++i) {
        if (w[i] <= 0.0) continue;
        size_t nts = 0;
        for (const auto &sym : prods[i].rhs) nts += config.templates.count(sym);
        min_nt = std::min(min_nt, nts);
        all.push_back(i);
      }
      for (size_t i : all) {
        size_t nts = 0;
        for (const auto &sym : prods[i].rhs) nts += config.templates.count(sym);
        if (nts == min_nt) terminal_only.push_back(i);
      }
      full_[lhs] = Cumulative(all, w);
      shallow_[lhs] = Cumulative(terminal_only, w);
    }
  }

  // Appends tokens for one sentence; returns false if it grew too long.
  bool Sample(Rng &rng, Sentence &out) {
    tokens_.clear();
    tags_.clear();
    heads_.clear();
    labels_.clear();
    const int root = Expand(config_.start, 0, rng);
    if (root < 0 || static_cast<int>(tokens_.size()) > config_.max_len) {
      return false;
    }
    heads_[root - 1] = 0;
    labels_[root - 1] = "root";
    out.tokens = tokens_;
    DepTree tree;
    tree.heads = heads_;
    tree.labels = labels_;
    out.gold_tree = std::move(tree);
    out.gold_tags = TagSeq{tags_};
    return true;
  }

 private:
  struct Choice {
    std::vector<size_t> index;
    std::vector<double> cumulative;
  };

  static Choice Cumulative(const std::vector<size_t> &idx,
                           const std::vector<double> &w) {
    Choice c;
    double total = 0.0;
    for (size_t i : idx) total += w[i];
    double run = 0.0;
    for (size_t i : idx) {
      run += w[i];
      c.index.push_back(i);
      c.cumulative.push_back(run / total);
    }
    return c;
  }

  // Returns the 1-based index of the head token of the expanded span, or -1
  // when the sentence already exceeds the length cap.
  int Expand(const std::string &symbol, int depth, Rng &rng) {
    if (static_cast<int>(tokens_.size()) > config_.max_len) return -1;
    auto nt = config_.templates.find(symbol);
    if (nt == config_.templates.end()) {
      const PosClass *pc = FindClass(config_, symbol);
      const auto &words = lexicon_.words.at(symbol);
      tokens_.push_back(words[Choose(lexicon_.cumulative.at(symbol), rng)]);
      tags_.push_back(TagId(pc->tag));
      heads_.push_back(-1);
      labels_.push_back("");
      return static_cast<int>(tokens_.size());
    }
    if (depth > config_.max_depth + 32) {
      throw ConfigError("grammar does not terminate under max_depth");
    }
    const Choice &choice =
        depth >= config_.max_depth ? shallow_.at(symbol) : full_.at(symbol);
    const Production &p = nt->second[choice.index[Choose(choice.cumulative, rng)]];
    std::vector<int> child_heads;
    for (const auto &sym : p.rhs) {
      const int h = Expand(sym, depth + 1, rng);
      if (h < 0) return -1;
      child_heads.push_back(h);
    }
    const int head = child_heads[p.head];
    for (size_t k = 0; k < child_heads.size(); ++k) {
      if (static_cast<int>(k) == p.head) continue;
      heads_[child_heads[k] - 1] = head;
      std::string label = p.rhs[k];
      std::transform(label.begin(), label.end(), label.begin(),
                     [](unsigned char c) { return std::tolower(c); });
      labels_[child_heads[k] - 1] = label;
    }
    return head;
  }

  const SynthGrammarConfig &config_;
  const Lexicon &lexicon_;
  std::map<std::string, Choice> full_;
  std::map<std::string, Choice> shallow_;
  std::vector<std::string> tokens_;
  std::vector<int> tags_;
  std::vector<int> heads_;
  std::vector<std::string> labels_;
};

}  // namespace

void SynthGrammarConfig::Validate() const {
  if (max_len < 1) throw ConfigError("max_len must be >= 1");
  if (max_depth < 1) throw ConfigError("max_depth must be >= 1");
  std::set<std::string> names;
  for (const auto &pc : pos_classes) {
    if (pc.name.empty()) throw ConfigError("pos class without a name");
    if (templates.count(pc.name)) {
      throw ConfigError("symbol " + pc.name + " is both class and nonterminal");
    }
    if (TagId(pc.tag) < 0) {
      throw ConfigError("class " + pc.name + " has unknown tag " + pc.tag);
    }
    if (pc.words.empty() && pc.size < 1) {
      throw ConfigError("class " + pc.name + " has no words");
    }
    if (!pc.share_class.empty()) {
      if (!names.count(pc.share_class)) {
        throw ConfigError("class " + pc.name +
                          " shares from an undefined or later class");
      }
      const PosClass *src = FindClass(*this, pc.share_class);
      const int src_size = src->words.empty() ? src->size
                                              : static_cast<int>(src->words.size());
      if (pc.share_count < 0 || pc.share_count > pc.size ||
          pc.share_count > src_size) {
        throw ConfigError("class " + pc.name + " has a bad share_count");
      }
    }
    if (!names.insert(pc.name).second) {
      throw ConfigError("duplicate pos class " + pc.name);
    }
  }
  if (!templates.count(start)) {
    throw ConfigError("start symbol " + start + " has no templates");
  }
  for (const auto &[lhs, prods] : templates) {
    auto w = weights.find(lhs);
    if (w == weights.end() || w->second.size() != prods.size()) {
      throw ConfigError("weights for " + lhs + " do not match its templates");
    }
    double total = 0.0;
    for (double x : w->second) {
      if (!(x >= 0.0)) throw ConfigError("negative weight for " + lhs);
      total += x;
    }
    if (total <= 0.0) throw ConfigError("all weights zero for " + lhs);
    for (const auto &p : prods) {
      if (p.rhs.empty()) throw ConfigError("empty production for " + lhs);
      if (p.head < 0 || p.head >= static_cast<int>(p.rhs.size())) {
        throw ConfigError("head index out of range in a production of " + lhs);
      }
      for (const auto &sym : p.rhs) {
        if (!templates.count(sym) && !names.count(sym)) {
          throw ConfigError("undefined symbol " + sym + " in " + lhs);
        }
      }
    }
  }
  for (const auto &[lhs, w] : weights) {
    if (!templates.count(lhs)) throw ConfigError("weights for unknown " + lhs);
  }
}

SynthGrammarConfig DefaultGrammarConfig() {
  SynthGrammarConfig c;
  c.pos_classes = {
      {"DET", "DET", 5, {}, "", 0},
      {"ADJ", "ADJ", 20, {}, "", 0},
      {"VERB_T", "VERB", 25, {}, "", 0},
      {"VERB_I", "VERB", 12, {}, "", 0},
      {"NOUN", "NOUN", 50, {}, "VERB_T", 6},
      {"PROPN", "PROPN", 12, {}, "", 0},
      {"PRON", "PRON", 5, {}, "", 0},
      {"AUX", "AUX", 3, {}, "", 0},
      {"ADV", "ADV", 8, {}, "", 0},
      {"ADP_N", "ADP", 4, {}, "", 0},
      {"ADP_V", "ADP", 4, {}, "", 0},
      {"PUNCT", "PUNCT", 1, {"."}, "", 0},
  };
  c.templates["S"] = {{{"NP", "VP", "PUNCT"}, 1}, {{"NP", "VP"}, 1}};
  c.weights["S"] = {3, 1};
  c.templates["NP"] = {{{"DET", "NOUN"}, 1},        {{"DET", "ADJ", "NOUN"}, 2},
                       {{"DET", "NOUN", "PPN"}, 1}, {{"PRON"}, 0},
                       {{"PROPN"}, 0},              {{"DET", "ADJ", "ADJ", "NOUN"}, 3}};
  c.weights["NP"] = {4, 2, 1.5, 1.5, 1.5, 0.5};
  c.templates["PPN"] = {{{"ADP_N", "NP"}, 1}};
  c.weights["PPN"] = {1};
  c.templates["VP"] = {{{"VERB_T", "NP"}, 0},         {{"VERB_I"}, 0},
                       {{"VERB_T", "NP", "PPV"}, 0},  {{"AUX", "VERB_T", "NP"}, 1},
                       {{"VERB_I", "ADV"}, 0},        {{"VERB_I", "PPV"}, 0},
                       {{"ADV", "VERB_T", "NP"}, 1}};
  c.weights["VP"] = {4, 1.5, 1.5, 1, 1, 1, 0.5};
  c.templates["PPV"] = {{{"ADP_V", "NP"}, 1}};
  c.weights["PPV"] = {1};
  c.max_len = 40;
  c.max_depth = 6;
  c.seed = 1;
  return c;
}

SynthGrammarConfig GrammarFromJson(const nlohmann::json &j) {
  static const std::set<std::string> kKeys = {
      "pos_classes", "templates", "weights", "max_len", "seed", "max_depth", "start"};
  if (!j.is_object()) throw ConfigError("grammar config must be a JSON object");
  for (const auto &[k, v] : j.items()) {
    if (!kKeys.count(k)) throw ConfigError("unknown grammar key: " + k);
  }
  for (const char *k : {"pos_classes", "templates", "weights", "max_len", "seed"}) {
    if (!j.contains(k)) throw ConfigError(std::string("missing grammar key: ") + k);
  }
  SynthGrammarConfig c;
  try {
    // An ordered list keeps lexicon generation stable; an object form is
    // also accepted with sharing sources moved first.
    const auto &classes = j.at("pos_classes");
    std::vector<std::pair<std::string, nlohmann::json>> entries;
    if (classes.is_array()) {
      for (const auto &spec : classes) {
        entries.emplace_back(spec.at("name").get<std::string>(), spec);
      }
    } else {
      for (const auto &[name, spec] : classes.items()) entries.emplace_back(name, spec);
    }
    for (const auto &[name, spec] : entries) {
      PosClass pc;
      pc.name = name;
      pc.tag = spec.value("tag", name);
      pc.size = spec.value("size", 0);
      if (spec.contains("words")) {
        pc.words = spec.at("words").get<std::vector<std::string>>();
        pc.size = static_cast<int>(pc.words.size());
      }
      if (spec.contains("share")) {
        pc.share_class = spec.at("share").at("class").get<std::string>();
        pc.share_count = spec.at("share").at("count").get<int>();
      }
      c.pos_classes.push_back(std::move(pc));
    }
    if (!classes.is_array()) {
      std::stable_sort(c.pos_classes.begin(), c.pos_classes.end(),
                       [](const PosClass &a, const PosClass &b) {
                         return a.share_class.empty() && !b.share_class.empty();
                       });
    }
    for (const auto &[lhs, prods] : j.at("templates").items()) {
      for (const auto &p : prods) {
        c.templates[lhs].push_back(
            {p.at("rhs").get<std::vector<std::string>>(), p.value("head", 0)});
      }
    }
    for (const auto &[lhs, w] : j.at("weights").items()) {
      c.weights[lhs] = w.get<std::vector<double>>();
    }
    c.max_len = j.at("max_len").get<int>();
    c.seed = j.at("seed").get<uint64_t>();
    c.max_depth = j.value("max_depth", c.max_depth);
    c.start = j.value("start", c.start);
  } catch (const nlohmann::json::exception &e) {
    throw ConfigError(std::string("malformed grammar config: ") + e.what());
  }
  c.Validate();
  return c;
}

nlohmann::json GrammarToJson(const SynthGrammarConfig &c) {
  nlohmann::json j;
  nlohmann::json classes = nlohmann::json::array();
  for (const auto &pc : c.pos_classes) {
    nlohmann::json spec = {{"name", pc.name}, {"tag", pc.tag}};
    if (!pc.words.empty()) {
      spec["words"] = pc.words;
    } else {
      spec["size"] = pc.size;
    }
    if (!pc.share_class.empty()) {
      spec["share"] = {{"class", pc.share_class}, {"count", pc.share_count}};
    }
    classes.push_back(spec);
  }
  j["pos_classes"] = classes;
  nlohmann::json templates = nlohmann::json::object();
  for (const auto &[lhs, prods] : c.templates) {
    nlohmann::json list = nlohmann::json::array();
    for (const auto &p : prods) list.push_back({{"rhs", p.rhs}, {"head", p.head}});
    templates[lhs] = list;
  }
  j["templates"] = templates;
  j["weights"] = c.weights;
  j["max_len"] = c.max_len;
  j["max_depth"] = c.max_depth;
  j["start"] = c.start;
  j["seed"] = c.seed;
  return j;
}

Corpus GenerateSynthetic(const SynthGrammarConfig &config, int n,
                         uint64_t seed) {
  if (n < 0) throw ConfigError("sentence count must be >= 0");
  config.Validate();
  const Lexicon lexicon = BuildLexicon(config);
  Generator gen(config, lexicon);
  Rng rng = Rng::Derive(seed, "synthetic");
  Corpus corpus;
  corpus.reserve(n);
  for (int i = 0; i < n; ++i) {
    Sentence s;
    s.id = std::to_string(seed) + "-" + std::to_string(i);
    int attempts = 0;
    while (!gen.Sample(rng, s)) {
      if (++attempts >= kMaxAttempts) {
        throw ConfigError("grammar cannot produce sentences within max_len");
      }
    }
    corpus.push_back(std::move(s));
  }
  return corpus;
}

}  // namespace spad::treebank
