//
// smited - Copyright 2026 The smited Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef SMITED_TOKENIZER_H_
#define SMITED_TOKENIZER_H_

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace smited {

struct TokenSequence {
  std::vector<std::string> tokens;
  std::string source;
};

// Regex-level SMILES tokens: bracket atoms, Cl/Br, and %NN ring closures are
// single tokens; every other character is its own token. Concatenating the
// tokens always reproduces the input. Throws DataError("UnmatchedBracket").
TokenSequence tokenize(std::string_view smiles);

// Token <-> id table. Ids 0..4 are the reserved specials; corpus tokens
// follow in first-seen order.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kMask = 2;
  static constexpr int kBos = 3;
  static constexpr int kEos = 4;
  static constexpr int kSpecialCount = 5;

  Vocabulary();
  // Specials followed by `tokens` (which must not repeat or contain specials).
  explicit Vocabulary(const std::vector<std::string> &tokens);

  static std::span<const std::string_view> special_tokens();
  static bool is_special(int id) { return id >= 0 && id < kSpecialCount; }

  // Throws DataError("EmptyCorpus") when no SMILES lines are present.
  static Vocabulary build(std::istream &corpus);
  static Vocabulary build(std::span<const std::string> corpus);

  std::size_t size() const noexcept { return tokens_.size(); }
  std::optional<int> find(std::string_view token) const;
  // Unknown tokens map to kUnk.
  int id_of(std::string_view token) const;
  // Throws DataError("UnknownId").
  const std::string &token_of(int id) const;
  const std::vector<std::string> &tokens() const noexcept { return tokens_; }

  void add(std::string_view token);

  // UTF-8 TSV, one "token<TAB>id" per line sorted by id.
  void save_tsv(const std::filesystem::path &path) const;
  static Vocabulary load_tsv(const std::filesystem::path &path);
  void write_tsv(std::ostream &out) const;
  static Vocabulary read_tsv(std::istream &in);

  bool operator==(const Vocabulary &other) const {
    return tokens_ == other.tokens_;
  }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
};

// [BOS] ids [EOS] [PAD]... of exactly max_len entries. Throws
// DataError("TooLong") when tokens + 2 > max_len.
std::vector<int> encode(const TokenSequence &ts, const Vocabulary &vocab,
                        std::size_t max_len);
// Drops specials and concatenates the remaining tokens.
std::string decode(std::span<const int> ids, const Vocabulary &vocab);

// Framed length: token count plus the two sequence markers.
std::size_t framed_length(std::string_view smiles);

}  // namespace smited

#endif  // SMITED_TOKENIZER_H_
