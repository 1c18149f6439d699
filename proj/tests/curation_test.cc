//
// smited - Copyright 2026 The smited Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "smited/curation.h"

#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "smited/error.h"
#include "smited/smiles.h"
#include "smited/tokenizer.h"
#include "test_support.h"

namespace smited {
namespace {

std::vector<std::string> lines_of(const std::string &text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

TEST(CurateTest, DuplicateEthanol) {
  std::istringstream in("CCO\nOCC\nC\n");
  std::ostringstream out;
  const CurationReport r = curate(in, out);
  EXPECT_EQ(lines_of(out.str()).size(), 2u);
  EXPECT_EQ(r.duplicates_removed, 1u);
  EXPECT_EQ(r.output_count, 2u);
  EXPECT_TRUE(r.conserved());
  EXPECT_NE(r.to_text().find("duplicates_removed=1"), std::string::npos);
  EXPECT_NE(r.to_json().find("\"duplicates_removed\": 1"), std::string::npos);
}

TEST(CurateTest, ParseFailure) {
  std::istringstream in("C1CC\n");
  std::ostringstream out;
  const CurationReport r = curate(in, out);
  EXPECT_TRUE(out.str().empty());
  EXPECT_EQ(r.parse_failures, 1u);
  EXPECT_EQ(r.output_count, 0u);
}

TEST(CurateTest, ValenceFailureAndComponents) {
  std::istringstream in("F=F\nO.CC\nCC.O\n");
  std::ostringstream out;
  const CurationReport r = curate(in, out);
  EXPECT_EQ(r.valence_failures, 1u);
  EXPECT_EQ(r.duplicates_removed, 1u);
  EXPECT_EQ(lines_of(out.str()), std::vector<std::string>{chem::canonical_smiles("CC.O")});
}

// Randomized corpora with planted duplicates (renumbered spellings) and
// malformed lines.
std::string random_corpus(Rng &rng, std::size_t n) {
  std::string text;
  std::vector<chem::MolecularGraph> seen;
  static const std::vector<std::string> kBroken = {"C1CC", "C(", "X", "[Cq]",
                                                   "F=F", "CC)", "C%1"};
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.uniform();
    if (u < 0.15) {
      text += kBroken[rng.below(kBroken.size())];
    } else if (u < 0.35 && !seen.empty()) {
      const chem::MolecularGraph &g = seen[rng.below(seen.size())];
      const auto perm = testing::random_permutation(rng, g.atom_count());
      // Written through the canonical form of a renumbered copy.
      text += chem::canonicalize(chem::renumber(g, perm));
    } else {
      seen.push_back(testing::random_molecule(rng, 12));
      text += chem::canonicalize(seen.back());
    }
    text += '\n';
  }
  return text;
}

TEST(CurateTest, ConservationOnRandomCorpora) {
  Rng rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    const std::string text = random_corpus(rng, 80);
    std::istringstream in(text);
    std::ostringstream out;
    const CurationReport r = curate(in, out);
    EXPECT_EQ(r.input_count, 80u);
    EXPECT_TRUE(r.conserved());
    const auto written = lines_of(out.str());
    EXPECT_EQ(written.size(), r.output_count);
    const std::set<std::string> unique(written.begin(), written.end());
    EXPECT_EQ(unique.size(), written.size());
    std::size_t histogram_total = 0;
    for (const auto &[len, count] : r.token_length_histogram) histogram_total += count;
    EXPECT_EQ(histogram_total, r.output_count);
  }
}

TEST(CurateTest, OrderIndependentOfThreads) {
  Rng rng(5);
  const std::string text = random_corpus(rng, 300);
  std::string reference;
  for (std::size_t threads : {1u, 2u, 4u}) {
    for (std::size_t batch : {7u, 4096u}) {
      std::istringstream in(text);
      std::ostringstream out;
      curate(in, out, {threads, batch});
      if (reference.empty()) reference = out.str();
      EXPECT_EQ(out.str(), reference) << threads << " threads, batch " << batch;
    }
  }
}

TEST(LengthCutoffTest, Examples) {
  std::istringstream ones("C\nO\nN\n");
  EXPECT_EQ(length_cutoff_analysis(ones, 202), 1.0);
  std::istringstream framed("C\nCC\n");
  EXPECT_EQ(length_cutoff_analysis(framed, 2), 0.0);
  std::istringstream empty("");
  EXPECT_THROW(length_cutoff_analysis(empty, 10), DataError);
}

TEST(LengthCutoffTest, MatchesRecount) {
  const auto &corpus = testing::reference_molecules();
  std::string text;
  for (const auto &s : corpus) text += s + "\n";
  for (std::size_t d : {4u, 8u, 12u, 20u}) {
    std::size_t below = 0;
    for (const auto &s : corpus) {
      if (tokenize(s).tokens.size() + 2 < d) ++below;
    }
    std::istringstream in(text);
    EXPECT_DOUBLE_EQ(length_cutoff_analysis(in, d),
                     static_cast<double>(below) / static_cast<double>(corpus.size()));
  }
}

}  // namespace
}  // namespace smited
