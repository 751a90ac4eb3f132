#include "spad/treebank/conllu.h"

#include <charconv>
#include <fstream>
#include <sstream>

#include "spad/base/error.h"

namespace spad::treebank {

namespace {

std::vector<std::string_view> SplitTabs(std::string_view line) {
  std::vector<std::string_view> out;
  size_t start = 0;
  while (true) {
    const size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return out;
}

bool ParseInt(std::string_view s, int &out) {
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

struct Pending {
  Sentence sentence;
  std::vector<std::string> heads;
  std::vector<std::string> labels;
  std::vector<std::string> upos;
  int first_line = 0;
};

Sentence Finish(Pending &p, int ordinal) {
  Sentence &s = p.sentence;
  const int n = s.size();
  if (s.id.empty()) s.id = "s" + std::to_string(ordinal);
  auto all_blank = [](const std::vector<std::string> &col) {
    for (const auto &v : col) {
      if (v != "_") return false;
    }
    return true;
  };
  if (!all_blank(p.heads)) {
    DepTree tree;
    for (int i = 0; i < n; ++i) {
      int h;
      if (!ParseInt(p.heads[i], h)) {
        throw ValidityError("sentence " + s.id + ": bad HEAD '" + p.heads[i] +
                            "' on token " + std::to_string(i + 1));
      }
      tree.heads.push_back(h);
    }
    if (!all_blank(p.labels)) tree.labels = p.labels;
    tree.Validate();
    s.gold_tree = std::move(tree);
  }
  if (!all_blank(p.upos)) {
    TagSeq tags;
    for (int i = 0; i < n; ++i) {
      const int t = TagId(p.upos[i]);
      if (t < 0) {
        throw ValidityError("sentence " + s.id + ": unknown UPOS '" +
                            p.upos[i] + "'");
      }
      tags.tags.push_back(t);
    }
    s.gold_tags = std::move(tags);
  }
  s.Validate();
  return s;
}

}  // namespace

Corpus ParseConllu(std::string_view text) {
  Corpus corpus;
  Pending pending;
  bool open = false;
  int line_no = 0;
  size_t pos = 0;
  auto flush = [&]() {
    if (open) {
      corpus.push_back(Finish(pending, static_cast<int>(corpus.size()) + 1));
    }
    pending = Pending();
    open = false;
  };
  while (pos <= text.size()) {
    size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) {
      flush();
      if (eol == text.size()) break;
      continue;
    }
    if (line[0] == '#') {
      constexpr std::string_view kSentId = "# sent_id = ";
      if (line.substr(0, kSentId.size()) == kSentId) {
        pending.sentence.id = std::string(line.substr(kSentId.size()));
        if (!open) pending.first_line = line_no;
      }
      continue;
    }
    auto cols = SplitTabs(line);
    if (cols.size() < 8) {
      throw ParseError(line_no, "expected at least 8 tab-separated columns, got " +
                                    std::to_string(cols.size()));
    }
    if (cols[0].find('-') != std::string_view::npos) {
      throw ParseError(line_no, "multiword token ranges are not supported");
    }
    if (cols[0].find('.') != std::string_view::npos) {
      throw ParseError(line_no, "empty nodes are not supported");
    }
    int id;
    if (!ParseInt(cols[0], id) || id != pending.sentence.size() + 1) {
      throw ParseError(line_no, "token ids must run 1..n, got '" +
                                    std::string(cols[0]) + "'");
    }
    if (cols[1].empty()) throw ParseError(line_no, "empty FORM");
    if (!open) {
      open = true;
      if (pending.first_line == 0) pending.first_line = line_no;
    }
    pending.sentence.tokens.emplace_back(cols[1]);
    pending.upos.emplace_back(cols[3]);
    pending.heads.emplace_back(cols[6]);
    pending.labels.emplace_back(cols[7]);
    if (eol == text.size()) break;
  }
  flush();
  return corpus;
}

std::string WriteConllu(const Corpus &corpus) {
  std::string out;
  for (size_t k = 0; k < corpus.size(); ++k) {
    const Sentence &s = corpus[k];
    if (k) out += '\n';
    if (!s.id.empty()) out += "# sent_id = " + s.id + "\n";
    for (int i = 0; i < s.size(); ++i) {
      out += std::to_string(i + 1);
      out += '\t';
      out += s.tokens[i];
      out += "\t_\t";
      out += s.gold_tags ? UposTags()[s.gold_tags->tags[i]] : "_";
      out += "\t_\t_\t";
      out += s.gold_tree ? std::to_string(s.gold_tree->heads[i]) : "_";
      out += '\t';
      out += s.gold_tree && !s.gold_tree->labels.empty()
                 ? s.gold_tree->labels[i]
                 : "_";
      out += "\t_\t_\n";
    }
  }
  return out;
}

Corpus ReadConlluFile(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ParseConllu(ss.str());
}

void WriteConlluFile(const std::string &path, const Corpus &corpus) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << WriteConllu(corpus);
  if (!out) throw IoError("write failed: " + path);
}

LengthCapReport ApplyLengthCap(Corpus &corpus, int max_len) {
  LengthCapReport report;
  Corpus kept;
  for (auto &s : corpus) {
    if (s.size() > max_len) {
      ++report.skipped;
    } else {
      kept.push_back(std::move(s));
    }
  }
  report.kept = static_cast<int>(kept.size());
  corpus = std::move(kept);
  return report;
}

}  // namespace spad::treebank
