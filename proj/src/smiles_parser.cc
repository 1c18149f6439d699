//
// smited - Copyright 2026 The smited Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include <cctype>
#include <map>

#include "smited/smiles.h"

namespace smited::chem {

SmilesError::SmilesError(std::string kind, std::size_t offset,
                         const std::string &detail)
    : DataError(kind, kind + " at offset " + std::to_string(offset) + ": " +
                          detail),
      offset_(offset) { }

namespace {

struct BondSpec {
  std::optional<BondOrder> order;
  char direction = 0;
  std::size_t offset = 0;

  bool present() const { return order.has_value() || direction != 0; }
};

struct RingOpening {
  std::size_t atom;
  BondSpec bond;
  std::size_t offset;
};

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) { }

  MolecularGraph run() {
    if (text_.empty()) throw SmilesError("EmptyInput", 0, "empty SMILES");
    bool expect_atom = true;  // start, after '.', after '('
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (c == '(') {
        if (!prev_ || pending_.present()) {
          throw SmilesError("UnexpectedCharacter", pos_, "misplaced '('");
        }
        branches_.push_back({*prev_, pos_});
        ++pos_;
        expect_atom = true;
      } else if (c == ')') {
        if (branches_.empty()) {
          throw SmilesError("UnbalancedParenthesis", pos_, "unmatched ')'");
        }
        if (expect_atom || pending_.present()) {
          throw SmilesError("UnexpectedCharacter", pos_, "empty branch");
        }
        prev_ = branches_.back().first;
        branches_.pop_back();
        ++pos_;
      } else if (c == '.') {
        if (!prev_ || pending_.present() || !branches_.empty() || expect_atom) {
          throw SmilesError("UnexpectedCharacter", pos_, "misplaced '.'");
        }
        prev_.reset();
        ++pos_;
        expect_atom = true;
      } else if (is_bond_char(c)) {
        if (pending_.present() || !prev_) {
          throw SmilesError("UnexpectedCharacter", pos_, "misplaced bond");
        }
        pending_ = read_bond();
      } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '%') {
        if (!prev_ || expect_atom) {
          throw SmilesError("UnexpectedCharacter", pos_,
                            "ring closure without an atom");
        }
        ring_closure();
      } else {
        add_atom(c == '[' ? read_bracket_atom() : read_organic_atom());
        expect_atom = false;
      }
    }
    if (!branches_.empty()) {
      throw SmilesError("UnbalancedParenthesis", branches_.back().second,
                        "unclosed '('");
    }
    if (!rings_.empty()) {
      throw SmilesError("UnclosedRingBond", rings_.begin()->second.offset,
                        "ring bond " + std::to_string(rings_.begin()->first) +
                            " never closed");
    }
    if (pending_.present() || expect_atom) {
      throw SmilesError("UnexpectedCharacter", text_.size(),
                        "SMILES ends without an atom");
    }
    return std::move(graph_);
  }

 private:
  static bool is_bond_char(char c) {
    return c == '-' || c == '=' || c == '#' || c == ':' || c == '/' ||
           c == '\\' || c == '$';
  }

  BondSpec read_bond() {
    BondSpec spec;
    spec.offset = pos_;
    switch (text_[pos_]) {
      case '-': spec.order = BondOrder::kSingle; break;
      case '=': spec.order = BondOrder::kDouble; break;
      case '#': spec.order = BondOrder::kTriple; break;
      case ':': spec.order = BondOrder::kAromatic; break;
      case '/':
      case '\\':
        spec.order = BondOrder::kSingle;
        spec.direction = text_[pos_];
        break;
      default:
        throw SmilesError("UnexpectedCharacter", pos_,
                          "unsupported bond symbol");
    }
    ++pos_;
    return spec;
  }

  BondOrder default_order(std::size_t a, std::size_t b) const {
    return graph_.atom(a).aromatic && graph_.atom(b).aromatic
               ? BondOrder::kAromatic
               : BondOrder::kSingle;
  }

  void connect(std::size_t a, std::size_t b, const BondSpec &spec,
               std::size_t offset) {
    if (a == b || graph_.bond_between(a, b)) {
      throw SmilesError("InvalidBond", offset, "duplicate or self bond");
    }
    graph_.add_bond(a, b, spec.order.value_or(default_order(a, b)),
                    spec.direction);
  }

  void add_atom(Atom atom) {
    const std::size_t offset = atom_offset_;
    const std::size_t id = graph_.add_atom(std::move(atom));
    if (prev_) connect(*prev_, id, pending_, offset);
    pending_ = {};
    prev_ = id;
  }

  void ring_closure() {
    const std::size_t start = pos_;
    int number;
    if (text_[pos_] == '%') {
      if (pos_ + 2 >= text_.size() ||
          !std::isdigit(static_cast<unsigned char>(text_[pos_ + 1])) ||
          !std::isdigit(static_cast<unsigned char>(text_[pos_ + 2]))) {
        throw SmilesError("UnexpectedCharacter", pos_,
                          "'%' must be followed by two digits");
      }
      number = (text_[pos_ + 1] - '0') * 10 + (text_[pos_ + 2] - '0');
      pos_ += 3;
    } else {
      number = text_[pos_] - '0';
      ++pos_;
    }
    auto it = rings_.find(number);
    if (it == rings_.end()) {
      rings_[number] = {*prev_, pending_, start};
    } else {
      const RingOpening open = it->second;
      rings_.erase(it);
      BondSpec spec = pending_;
      if (open.bond.present()) {
        if (spec.present() && spec.order != open.bond.order) {
          throw SmilesError("InvalidBond", start, "conflicting ring bond");
        }
        if (!spec.present()) {
          spec = open.bond;
          // A direction written at the opening reads from the opening atom.
          if (spec.direction) spec.direction = spec.direction == '/' ? '\\' : '/';
        }
      }
      connect(*prev_, open.atom, spec, start);
    }
    pending_ = {};
  }

  Atom read_organic_atom() {
    atom_offset_ = pos_;
    const char c = text_[pos_];
    Atom atom;
    if (c == 'B' && pos_ + 1 < text_.size() && text_[pos_ + 1] == 'r') {
      atom.element = "Br";
      pos_ += 2;
    } else if (c == 'C' && pos_ + 1 < text_.size() && text_[pos_ + 1] == 'l') {
      atom.element = "Cl";
      pos_ += 2;
    } else if (c == 'B' || c == 'C' || c == 'N' || c == 'O' || c == 'P' ||
               c == 'S' || c == 'F' || c == 'I') {
      atom.element = std::string(1, c);
      ++pos_;
    } else if (c == 'b' || c == 'c' || c == 'n' || c == 'o' || c == 'p' ||
               c == 's') {
      atom.element = std::string(1, static_cast<char>(std::toupper(c)));
      atom.aromatic = true;
      ++pos_;
    } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '*') {
      throw SmilesError("UnknownElement", pos_,
                        std::string("'") + c +
                            "' is not an organic-subset element");
    } else {
      throw SmilesError("UnexpectedCharacter", pos_,
                        std::string("unexpected '") + c + "'");
    }
    return atom;
  }

  Atom read_bracket_atom() {
    atom_offset_ = pos_;
    const std::size_t open = pos_;
    const std::size_t close = text_.find(']', open);
    if (close == std::string_view::npos) {
      throw SmilesError("MalformedBracketAtom", open, "missing ']'");
    }
    std::string_view body = text_.substr(open + 1, close - open - 1);
    pos_ = close + 1;
    std::size_t i = 0;
    auto fail = [&](const std::string &why) -> SmilesError {
      return SmilesError("MalformedBracketAtom", open + 1 + i, why);
    };
    auto digit = [&](std::size_t k) {
      return k < body.size() && std::isdigit(static_cast<unsigned char>(body[k]));
    };
    Atom atom;
    atom.bracket = true;
    while (digit(i)) atom.isotope = atom.isotope * 10 + (body[i++] - '0');
    if (i >= body.size()) throw fail("missing element symbol");
    // Element: aromatic two-letter forms, then title-case, then aromatic
    // single letters.
    static constexpr std::string_view kAromatic2[] = {"se", "as", "te", "si"};
    static constexpr std::string_view kAromatic1 = "bcnops";
    bool matched = false;
    for (std::string_view sym : kAromatic2) {
      if (body.substr(i, 2) == sym) {
        atom.element = std::string(1, static_cast<char>(std::toupper(sym[0]))) +
                       sym[1];
        atom.aromatic = true;
        i += 2;
        matched = true;
        break;
      }
    }
    if (!matched && std::isupper(static_cast<unsigned char>(body[i]))) {
      if (i + 1 < body.size() &&
          std::islower(static_cast<unsigned char>(body[i + 1])) &&
          atomic_number(body.substr(i, 2)) > 0) {
        atom.element = std::string(body.substr(i, 2));
        i += 2;
      } else if (atomic_number(body.substr(i, 1)) > 0) {
        atom.element = std::string(body.substr(i, 1));
        i += 1;
      } else {
        throw SmilesError("UnknownElement", open + 1 + i,
                          "unknown element in '" + std::string(body) + "'");
      }
      matched = true;
    }
    if (!matched && kAromatic1.find(body[i]) != std::string_view::npos) {
      atom.element = std::string(1, static_cast<char>(std::toupper(body[i])));
      atom.aromatic = true;
      ++i;
      matched = true;
    }
    if (!matched) {
      throw SmilesError("UnknownElement", open + 1 + i,
                        "unknown element in '" + std::string(body) + "'");
    }
    if (i < body.size() && body[i] == '@') {
      const std::size_t start = i;
      ++i;
      if (i < body.size() && body[i] == '@') {
        ++i;
      } else {
        while (i < body.size() && std::isupper(static_cast<unsigned char>(body[i])) &&
               body[i] != 'H') {
          ++i;
        }
        while (digit(i)) ++i;
      }
      atom.chirality = std::string(body.substr(start, i - start));
    }
    atom.explicit_h = 0;
    if (i < body.size() && body[i] == 'H') {
      ++i;
      int h = 1;
      if (digit(i)) h = body[i++] - '0';
      atom.explicit_h = h;
    }
    if (i < body.size() && (body[i] == '+' || body[i] == '-')) {
      const char sign = body[i++];
      int magnitude = 1;
      if (digit(i)) {
        magnitude = 0;
        while (digit(i)) magnitude = magnitude * 10 + (body[i++] - '0');
      } else {
        while (i < body.size() && body[i] == sign) {
          ++magnitude;
          ++i;
        }
      }
      atom.charge = sign == '+' ? magnitude : -magnitude;
    }
    if (i < body.size() && body[i] == ':') {
      ++i;
      if (!digit(i)) throw fail("atom class needs digits");
      while (digit(i)) atom.atom_class = atom.atom_class * 10 + (body[i++] - '0');
    }
    if (i != body.size()) throw fail("unexpected text in bracket atom");
    return atom;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t atom_offset_ = 0;
  MolecularGraph graph_;
  std::optional<std::size_t> prev_;
  BondSpec pending_;
  std::vector<std::pair<std::size_t, std::size_t>> branches_;
  std::map<int, RingOpening> rings_;
};

}  // namespace

MolecularGraph parse(std::string_view smiles) { return Parser(smiles).run(); }

}  // namespace smited::chem
