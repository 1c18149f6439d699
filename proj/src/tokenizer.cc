//
// smited - Copyright 2026 The smited Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "smited/tokenizer.h"

#include <array>
#include <cctype>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "smited/error.h"

namespace smited {
namespace {

constexpr std::array<std::string_view, 5> kSpecials = {"[PAD]", "[UNK]", "[MASK]",
                                                       "[BOS]", "[EOS]"};

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
    s.remove_prefix(1);
  }
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
    s.remove_suffix(1);
  }
  return s;
}

}  // namespace

TokenSequence tokenize(std::string_view smiles) {
  TokenSequence ts;
  ts.source = std::string(smiles);
  std::size_t i = 0;
  while (i < smiles.size()) {
    const char c = smiles[i];
    std::size_t len = 1;
    if (c == '[') {
      const std::size_t close = smiles.find(']', i);
      if (close == std::string_view::npos) {
        throw DataError("UnmatchedBracket",
                        "'[' at offset " + std::to_string(i) + " never closed");
      }
      len = close - i + 1;
    } else if ((c == 'B' || c == 'C') && i + 1 < smiles.size() &&
               smiles[i + 1] == (c == 'B' ? 'r' : 'l')) {
      len = 2;
    } else if (c == '%' && i + 2 < smiles.size() &&
               std::isdigit(static_cast<unsigned char>(smiles[i + 1])) &&
               std::isdigit(static_cast<unsigned char>(smiles[i + 2]))) {
      len = 3;
    }
    ts.tokens.emplace_back(smiles.substr(i, len));
    i += len;
  }
  return ts;
}

Vocabulary::Vocabulary() {
  for (std::string_view s : kSpecials) add(s);
}

Vocabulary::Vocabulary(const std::vector<std::string> &tokens) : Vocabulary() {
  for (const auto &t : tokens) {
    if (find(t)) throw DataError("DuplicateToken", "token '" + t + "' repeats");
    add(t);
  }
}

std::span<const std::string_view> Vocabulary::special_tokens() {
  return kSpecials;
}

void Vocabulary::add(std::string_view token) {
  if (find(token)) return;
  ids_.emplace(std::string(token), static_cast<int>(tokens_.size()));
  tokens_.emplace_back(token);
}

Vocabulary Vocabulary::build(std::istream &corpus) {
  Vocabulary vocab;
  std::string line;
  std::size_t molecules = 0;
  while (std::getline(corpus, line)) {
    const std::string_view s = trim(line);
    if (s.empty()) continue;
    ++molecules;
    for (const auto &t : tokenize(s).tokens) vocab.add(t);
  }
  if (molecules == 0) throw DataError("EmptyCorpus", "no SMILES in corpus");
  return vocab;
}

Vocabulary Vocabulary::build(std::span<const std::string> corpus) {
  std::ostringstream joined;
  for (const auto &s : corpus) joined << s << '\n';
  std::istringstream in(joined.str());
  return build(in);
}

std::optional<int> Vocabulary::find(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

int Vocabulary::id_of(std::string_view token) const {
  return find(token).value_or(kUnk);
}

const std::string &Vocabulary::token_of(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw DataError("UnknownId", "id " + std::to_string(id) +
                                     " outside vocabulary of " +
                                     std::to_string(tokens_.size()));
  }
  return tokens_[static_cast<std::size_t>(id)];
}

void Vocabulary::write_tsv(std::ostream &out) const {
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    out << tokens_[i] << '\t' << i << '\n';
  }
}

Vocabulary Vocabulary::read_tsv(std::istream &in) {
  std::vector<std::string> tokens;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.rfind('\t');
    if (tab == std::string::npos) {
      throw DataError("MalformedVocabulary",
                      "line " + std::to_string(line_no) + " lacks a tab");
    }
    const std::string token = line.substr(0, tab);
    std::size_t id = 0;
    try {
      id = std::stoul(line.substr(tab + 1));
    } catch (const std::exception &) {
      throw DataError("MalformedVocabulary",
                      "line " + std::to_string(line_no) + " has a bad id");
    }
    if (id != tokens.size()) {
      throw DataError("MalformedVocabulary",
                      "ids must be contiguous from 0; line " +
                          std::to_string(line_no));
    }
    tokens.push_back(token);
  }
  if (tokens.size() < kSpecials.size()) {
    throw DataError("MalformedVocabulary", "missing special tokens");
  }
  for (std::size_t i = 0; i < kSpecials.size(); ++i) {
    if (tokens[i] != kSpecials[i]) {
      throw DataError("MalformedVocabulary", "special token " +
                                                 std::string(kSpecials[i]) +
                                                 " not at id " + std::to_string(i));
    }
  }
  return Vocabulary(std::vector<std::string>(tokens.begin() + kSpecials.size(),
                                             tokens.end()));
}

void Vocabulary::save_tsv(const std::filesystem::path &path) const {
  std::ofstream out(path);
  if (!out) throw DataError("IoError", "cannot write " + path.string());
  write_tsv(out);
}

Vocabulary Vocabulary::load_tsv(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw DataError("IoError", "cannot read " + path.string());
  return read_tsv(in);
}

std::vector<int> encode(const TokenSequence &ts, const Vocabulary &vocab,
                        std::size_t max_len) {
  if (ts.tokens.size() + 2 > max_len) {
    throw DataError("TooLong", "'" + ts.source + "' needs " +
                                   std::to_string(ts.tokens.size() + 2) +
                                   " slots, limit is " + std::to_string(max_len));
  }
  std::vector<int> ids(max_len, Vocabulary::kPad);
  ids[0] = Vocabulary::kBos;
  for (std::size_t i = 0; i < ts.tokens.size(); ++i) {
    ids[i + 1] = vocab.id_of(ts.tokens[i]);
  }
  ids[ts.tokens.size() + 1] = Vocabulary::kEos;
  return ids;
}

std::string decode(std::span<const int> ids, const Vocabulary &vocab) {
  std::string out;
  for (int id : ids) {
    const std::string &token = vocab.token_of(id);
    if (!Vocabulary::is_special(id)) out += token;
  }
  return out;
}

std::size_t framed_length(std::string_view smiles) {
  return tokenize(smiles).tokens.size() + 2;
}

}  // namespace smited
