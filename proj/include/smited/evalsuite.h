//
// smited - Copyright 2026 The smited Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef SMITED_EVALSUITE_H_
#define SMITED_EVALSUITE_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "smited/training.h"

namespace smited {

inline constexpr std::array<std::string_view, 6> kFamilies = {"CC", "CO", "CN",
                                                              "CS", "CF", "CP"};
inline constexpr std::size_t kFamilyMaxCarbons = 10;

// n "C" tokens followed by the family's second letter; the CC family is
// therefore the chain of n + 1 carbons.
std::string family_member(std::string_view family, std::size_t n);

struct FamilyTriple {
  std::string a;  // C_n F_CC
  std::string b;  // C_k F_i
  std::string c;  // composition: the F_i member carrying every carbon of a and b
  std::string family;
  std::size_t n = 0;
  std::size_t k = 0;
};

struct FamilyDataset {
  std::vector<std::string> molecules;  // 6 families x 10 members
  std::vector<FamilyTriple> triples;   // 6 families x 20, family-major
};

FamilyDataset generate_families();

using EmbeddingTable = std::map<std::string, std::vector<double>, std::less<>>;

// alpha * e(a) + beta * e(b) + B0 = e(c).
struct LinearProbe {
  double alpha = 0.0;
  double beta = 0.0;
  std::vector<double> b0;
  std::vector<std::size_t> fit_triples;  // indices into the triple list
  double r2 = 0.0;                       // on the held-out triples
  double mse = 0.0;
  std::size_t held_out = 0;

  std::vector<double> predict(std::span<const double> a,
                              std::span<const double> b) const;
};

// One seeded triple index per family.
std::vector<std::size_t> sample_probe_triples(std::span<const FamilyTriple> triples,
                                              std::uint64_t seed);

// Least squares over the stacked vector equations of `fit`; R^2 and MSE
// pooled over every coordinate of the remaining triples. Throws
// NumericalError("DegenerateSystem") when alpha and beta are not
// identifiable and DataError("MissingEmbedding") for absent molecules.
LinearProbe fit_linear_probe(std::span<const FamilyTriple> triples,
                             const EmbeddingTable &embeddings,
                             std::span<const std::size_t> fit);

// Tanimoto between the fingerprints of decoded and expected; 0 when the
// decoded text does not parse or fails valence.
double decoded_similarity(std::string_view decoded, std::string_view expected);

struct FewshotRecord {
  std::string a, b, expected, decoded;
  double tanimoto = 0.0;
};

struct FewshotReport {
  std::vector<FewshotRecord> records;
  double mean_tanimoto = 0.0;
  double best_tanimoto = 0.0;
  double worst_tanimoto = 0.0;
};

// Decodes probe.predict(e(a), e(b)) for each listed triple.
FewshotReport fewshot_arithmetic(const Model &model, const LinearProbe &probe,
                                 std::span<const FamilyTriple> triples,
                                 std::span<const std::size_t> which,
                                 const EmbeddingTable &embeddings);

struct LatentEvalReport {
  EmbedMode mode = EmbedMode::kLatent;
  LinearProbe probe;
  FewshotReport fewshot;
};

// Full pipeline for one embedding mode: families, embeddings, probe fit on
// one seeded triple per family, hold-out validation and few-shot decoding
// of the held-out triples.
LatentEvalReport evaluate_latent(const Model &model, EmbedMode mode,
                                 std::uint64_t seed);

nlohmann::ordered_json to_json(const LatentEvalReport &report);

struct GenerationMetrics {
  std::size_t generated = 0;
  std::size_t valid = 0;
  double validity = 0.0;
  double uniqueness = 0.0;
  double novelty = 0.0;
  double snn = 0.0;
  double scaf = 0.0;
  double intdiv = 0.0;
};

// Throws DataError("EmptyInput") when either list is empty.
GenerationMetrics generation_metrics(std::span<const std::string> generated,
                                     std::span<const std::string> reference);
nlohmann::ordered_json to_json(const GenerationMetrics &metrics);
std::string to_table(const GenerationMetrics &metrics);

// CSV "smiles,e0,...,e{L-1}" with round-trip precision.
void write_embedding_csv(std::ostream &out, std::span<const std::string> smiles,
                         const Tensor &embeddings);

}  // namespace smited

#endif  // SMITED_EVALSUITE_H_
