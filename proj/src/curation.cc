//
// smited - Copyright 2026 The smited Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "smited/curation.h"

#include <algorithm>
#include <istream>
#include <nlohmann/json.hpp>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>
#include <unordered_map>
#include <vector>

#include "smited/error.h"
#include "smited/smiles.h"
#include "smited/tokenizer.h"

namespace smited {
namespace {

enum class Outcome { kOk, kParseFailure, kValenceFailure };

struct Canonicalized {
  Outcome outcome = Outcome::kOk;
  std::string smiles;
};

Canonicalized canonicalize_line(const std::string &line) {
  std::istringstream fields(line);
  std::string smiles;
  fields >> smiles;
  if (smiles.empty()) return {Outcome::kParseFailure, {}};
  chem::MolecularGraph g;
  try {
    g = chem::parse(smiles);
  } catch (const chem::SmilesError &) {
    return {Outcome::kParseFailure, {}};
  } catch (const DataError &) {
    return {Outcome::kParseFailure, {}};
  }
  if (!chem::check_valence(g).valid()) return {Outcome::kValenceFailure, {}};
  return {Outcome::kOk, chem::canonicalize(g)};
}

// Dedup set keyed by a 64-bit hash; colliding strings are compared in full.
class SeenSet {
 public:
  bool insert(const std::string &s) {
    auto &bucket = buckets_[chem::fnv1a64(s)];
    if (std::find(bucket.begin(), bucket.end(), s) != bucket.end()) return false;
    bucket.push_back(s);
    return true;
  }

 private:
  std::unordered_map<std::uint64_t, std::vector<std::string>> buckets_;
};

void canonicalize_batch(const std::vector<std::string> &lines,
                        std::vector<Canonicalized> &results,
                        std::size_t threads) {
  results.assign(lines.size(), {});
  threads = std::max<std::size_t>(1, std::min(threads, lines.size()));
  if (threads == 1) {
    for (std::size_t i = 0; i < lines.size(); ++i) {
      results[i] = canonicalize_line(lines[i]);
    }
    return;
  }
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < lines.size(); i += threads) {
        results[i] = canonicalize_line(lines[i]);
      }
    });
  }
  for (auto &th : pool) th.join();
}

}  // namespace

std::string CurationReport::to_text() const {
  std::ostringstream os;
  os << "input_count=" << input_count << '\n'
     << "parse_failures=" << parse_failures << '\n'
     << "valence_failures=" << valence_failures << '\n'
     << "duplicates_removed=" << duplicates_removed << '\n'
     << "output_count=" << output_count << '\n';
  for (const auto &[len, count] : token_length_histogram) {
    os << "token_length." << len << '=' << count << '\n';
  }
  return os.str();
}

std::string CurationReport::to_json() const {
  nlohmann::ordered_json j;
  j["input_count"] = input_count;
  j["parse_failures"] = parse_failures;
  j["valence_failures"] = valence_failures;
  j["duplicates_removed"] = duplicates_removed;
  j["output_count"] = output_count;
  nlohmann::ordered_json hist = nlohmann::ordered_json::object();
  for (const auto &[len, count] : token_length_histogram) {
    hist[std::to_string(len)] = count;
  }
  j["token_length_histogram"] = hist;
  return j.dump(2);
}

CurationReport curate(std::istream &in, std::ostream &out,
                      const CurationOptions &options) {
  CurationReport report;
  SeenSet seen;
  std::vector<std::string> batch;
  std::vector<Canonicalized> results;
  const std::size_t batch_size = std::max<std::size_t>(1, options.batch_size);
  auto flush = [&] {
    canonicalize_batch(batch, results, options.threads);
    for (const Canonicalized &r : results) {
      ++report.input_count;
      switch (r.outcome) {
        case Outcome::kParseFailure: ++report.parse_failures; break;
        case Outcome::kValenceFailure: ++report.valence_failures; break;
        case Outcome::kOk:
          if (!seen.insert(r.smiles)) {
            ++report.duplicates_removed;
          } else {
            ++report.output_count;
            ++report.token_length_histogram[tokenize(r.smiles).tokens.size()];
            out << r.smiles << '\n';
          }
          break;
      }
    }
    batch.clear();
  };
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    batch.push_back(line);
    if (batch.size() == batch_size) flush();
  }
  if (in.bad()) throw DataError("IoError", "failed reading corpus");
  if (!batch.empty()) flush();
  if (!out) throw DataError("IoError", "failed writing curated corpus");
  return report;
}

double length_cutoff_analysis(std::istream &corpus, std::size_t max_tokens) {
  std::size_t total = 0, below = 0;
  std::string line;
  while (std::getline(corpus, line)) {
    std::istringstream fields(line);
    std::string smiles;
    fields >> smiles;
    if (smiles.empty()) continue;
    ++total;
    if (framed_length(smiles) < max_tokens) ++below;
  }
  if (total == 0) throw DataError("EmptyCorpus", "no SMILES in corpus");
  return static_cast<double>(below) / static_cast<double>(total);
}

}  // namespace smited
