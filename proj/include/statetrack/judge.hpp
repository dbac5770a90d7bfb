#pragma once

// Text-similarity judges scoring predicted verbs and object descriptions
// against ground truth on {-1, 0, 1}.

#include <algorithm>
#include <cctype>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "statetrack/error.hpp"
#include "statetrack/io.hpp"

namespace statetrack {

enum class JudgeKind { rule_based, external };

class Judge {
 public:
  virtual ~Judge() = default;
  virtual JudgeKind kind() const = 0;
  virtual int judge_verb(const std::string& gt_verb, const std::string& pred_verb) const = 0;
  virtual int judge_object(const std::string& gt_text, const std::string& pred_text) const = 0;
};

// Token-set judge. Texts are lower-cased, split on non-alphanumerics,
// stripped of stopwords and mapped to canonical tokens via the synonym
// tables. Prediction tokens contained in the ground truth score 1 (for
// objects, containment either way, since over- and under-specified
// descriptions count); disjoint token sets score -1; partial overlap 0.
class RuleBasedJudge final : public Judge {
 public:
  struct Tables {
    std::map<std::string, std::string> verbs;
    std::map<std::string, std::string> objects;
    std::set<std::string> stopwords;
  };

  static Tables default_tables() {
    Tables t;
    t.stopwords = {"a",  "an", "the", "of",  "to",   "and",  "with", "from", "into", "in",  "on",
                   "out", "up", "off", "its", "it",   "is",   "some", "one",  "two",  "three", "by",
                   "for", "at", "his", "her", "their", "this", "that", "then", "apart", "away"};
    for (const auto& w : {"cut", "cuts", "cutting", "slice", "slices", "sliced", "slicing", "chop", "chops", "chopped",
                          "chopping", "dice", "diced", "dicing", "halve", "halved", "halving"}) {
      t.verbs[w] = "cut";
    }
    for (const auto& w : {"peel", "peels", "peeled", "peeling", "skin", "skinned"}) t.verbs[w] = "peel";
    for (const auto& w : {"tear", "tears", "tore", "torn", "tearing", "rip", "rips", "ripped", "ripping"}) {
      t.verbs[w] = "tear";
    }
    for (const auto& w : {"break", "breaks", "broke", "broken", "breaking", "crack", "cracks", "cracked", "cracking",
                          "snap", "snapped"}) {
      t.verbs[w] = "break";
    }
    for (const auto& w : {"pull", "pulls", "pulled", "pulling", "draw", "drew", "drawn", "extract", "extracted"}) {
      t.verbs[w] = "pull";
    }
    for (const auto& w : {"fold", "folds", "folded", "folding"}) t.verbs[w] = "fold";
    for (const auto& w : {"open", "opens", "opened", "opening", "unwrap", "unwrapped"}) t.verbs[w] = "open";
    for (const auto& w : {"pour", "pours", "poured", "pouring"}) t.verbs[w] = "pour";
    for (const auto& w : {"mix", "mixes", "mixed", "mixing", "stir", "stirs", "stirred", "stirring"}) {
      t.verbs[w] = "mix";
    }
    for (const auto& w : {"burn", "burns", "burned", "burnt", "burning", "ignite", "ignites", "ignited", "light", "lit"}) {
      t.verbs[w] = "burn";
    }
    for (const auto& w : {"melt", "melts", "melted", "melting"}) t.verbs[w] = "melt";
    for (const auto& w : {"emerge", "emerges", "emerged", "emerging", "hatch", "hatches", "hatched"}) {
      t.verbs[w] = "emerge";
    }
    for (const auto& w : {"piece", "pieces", "chunk", "chunks", "slice", "slices", "half", "halves", "fragment",
                          "fragments", "bit", "bits", "portion", "portions", "part", "parts", "wedge", "wedges"}) {
      t.objects[w] = "piece";
    }
    for (const auto& w : {"peel", "peels", "peeling", "peelings", "skin", "skins", "rind", "rinds"}) t.objects[w] = "skin";
    for (const auto& w : {"sheet", "sheets", "leaf", "leaves"}) t.objects[w] = "sheet";
    for (const auto& w : {"apple", "apples"}) t.objects[w] = "apple";
    return t;
  }

  RuleBasedJudge() : tables_(default_tables()) {}
  explicit RuleBasedJudge(Tables tables) : tables_(std::move(tables)) {}

  // {"verbs": {word: canonical}, "objects": {...}, "stopwords": [...]};
  // entries are merged over the defaults.
  static RuleBasedJudge from_json(const json& doc, const std::string& where = "synonyms") {
    JsonReader r(doc, where);
    auto t = default_tables();
    if (r.has("verbs")) {
      for (const auto& [k, v] : r.get<std::map<std::string, std::string>>("verbs")) t.verbs[k] = v;
    }
    if (r.has("objects")) {
      for (const auto& [k, v] : r.get<std::map<std::string, std::string>>("objects")) t.objects[k] = v;
    }
    if (r.has("stopwords")) {
      for (const auto& w : r.get<std::vector<std::string>>("stopwords")) t.stopwords.insert(w);
    }
    return RuleBasedJudge(std::move(t));
  }

  JudgeKind kind() const override { return JudgeKind::rule_based; }

  int judge_verb(const std::string& gt_verb, const std::string& pred_verb) const override {
    return score(normalize(gt_verb, tables_.verbs), normalize(pred_verb, tables_.verbs), false);
  }

  int judge_object(const std::string& gt_text, const std::string& pred_text) const override {
    return score(normalize(gt_text, tables_.objects), normalize(pred_text, tables_.objects), true);
  }

  std::set<std::string> normalize(const std::string& text, const std::map<std::string, std::string>& table) const {
    std::set<std::string> out;
    std::string token;
    auto flush = [&] {
      if (token.empty()) return;
      if (!tables_.stopwords.count(token)) {
        auto it = table.find(token);
        out.insert(it == table.end() ? token : it->second);
      }
      token.clear();
    };
    for (unsigned char ch : text) {
      if (std::isalnum(ch)) {
        token.push_back(static_cast<char>(std::tolower(ch)));
      } else {
        flush();
      }
    }
    flush();
    return out;
  }

 private:
  static int score(const std::set<std::string>& gt, const std::set<std::string>& pred, bool symmetric) {
    if (gt.empty() || pred.empty()) return 0;
    auto subset = [](const std::set<std::string>& a, const std::set<std::string>& b) {
      return std::includes(b.begin(), b.end(), a.begin(), a.end());
    };
    if (subset(pred, gt) || (symmetric && subset(gt, pred))) return 1;
    for (const auto& t : pred) {
      if (gt.count(t)) return 0;
    }
    return -1;
  }

  Tables tables_;
};

// Prompt templates for an external LLM judge, queried at temperature 0.
struct JudgePrompts {
  static constexpr const char* kVerbSystem = "You are a highly intelligent assistant that can analyze actions in text.";
  static constexpr const char* kObjectSystem =
      "You are a highly intelligent assistant that can analyze actions and resulting objects in text.";

  static std::string verb(const std::string& gt, const std::string& pred) {
    return "Given a particular action description of '" + gt + "', is '" + pred +
           "' similar to the verbs in this action? Please rate from -1 to 1, where -1 means completely unrelated, "
           "0 means ambiguous, and 1 means '" +
           pred + "' captures the meaning of '" + gt +
           "' or is directly in it. Brief/general descriptions should still be considered as +1. Please answer "
           "with a single integer.";
  }

  static std::string object(const std::string& gt, const std::string& pred) {
    return "Given the object description '" + gt + "', is '" + pred +
           "' similar to it? Please rate from -1 to 1, where -1 means completely unrelated, 0 means ambiguous, "
           "and 1 means '" +
           pred + "' is similar. Over- or under-specified descriptions should still be considered as +1. Please "
           "answer with a single integer.";
  }
};

// Parses a reply that must be exactly one integer in {-1, 0, 1}
// (surrounding whitespace and a leading '+' allowed).
inline int parse_judge_reply(const std::string& reply) {
  std::size_t b = 0, e = reply.size();
  while (b < e && std::isspace(static_cast<unsigned char>(reply[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(reply[e - 1]))) --e;
  const auto s = reply.substr(b, e - b);
  if (s == "1" || s == "+1") return 1;
  if (s == "0" || s == "+0" || s == "-0") return 0;
  if (s == "-1") return -1;
  throw JudgeProtocolError("judge reply is not a single integer in {-1, 0, 1}: '" + s.substr(0, 80) + "'");
}

// Sends the prompts through a caller-supplied transport
// (system prompt, user prompt) -> reply text.
class ExternalJudge final : public Judge {
 public:
  using Transport = std::function<std::string(const std::string& system, const std::string& user)>;

  explicit ExternalJudge(Transport transport) : transport_(std::move(transport)) {}

  JudgeKind kind() const override { return JudgeKind::external; }

  int judge_verb(const std::string& gt_verb, const std::string& pred_verb) const override {
    return parse_judge_reply(transport_(JudgePrompts::kVerbSystem, JudgePrompts::verb(gt_verb, pred_verb)));
  }

  int judge_object(const std::string& gt_text, const std::string& pred_text) const override {
    return parse_judge_reply(transport_(JudgePrompts::kObjectSystem, JudgePrompts::object(gt_text, pred_text)));
  }

 private:
  Transport transport_;
};

}  // namespace statetrack
