#include "figqa/dataset.hpp"

#include <algorithm>
#include <numeric>

#include "figqa/digest.hpp"
#include "figqa/errors.hpp"

namespace figqa {
namespace {

std::string join_key(const StratumKey& key) {
  std::string out;
  for (std::size_t i = 0; i < key.size(); ++i) {
    if (i > 0) out += " | ";
    out += key[i];
  }
  return out;
}

}  // namespace

std::optional<StratumKey> stratum_of(const VerifiedRecord& record, const std::vector<StratumField>& fields) {
  StratumKey key;
  for (StratumField field : fields) {
    switch (field) {
      case StratumField::kQuestionType:
        if (!record.question_type) return std::nullopt;
        key.push_back(*record.question_type);
        break;
      case StratumField::kDomain:
        if (record.primary_category.empty()) return std::nullopt;
        key.push_back(record.primary_category);
        break;
      case StratumField::kFigureType:
        if (!record.figure_type) return std::nullopt;
        key.push_back(*record.figure_type);
        break;
    }
  }
  return key;
}

std::map<StratumKey, std::size_t> proportional_allocation(const std::map<StratumKey, std::size_t>& populations,
                                                          std::size_t n, std::vector<std::string>* notes) {
  std::size_t total = 0;
  for (const auto& [key, count] : populations) total += count;
  if (n > total) {
    throw InsufficientStratum("requested " + std::to_string(n) + " records but only " + std::to_string(total) +
                              " are eligible");
  }
  std::map<StratumKey, std::size_t> allocation;
  if (total == 0) return allocation;

  struct Share {
    const StratumKey* key;
    std::size_t population;
    std::size_t remainder_numerator;  // (n * population) mod total
  };
  std::vector<Share> shares;
  std::size_t assigned = 0;
  for (const auto& [key, count] : populations) {
    const std::size_t product = n * count;
    allocation[key] = product / total;
    assigned += product / total;
    shares.push_back({&key, count, product % total});
  }
  std::stable_sort(shares.begin(), shares.end(), [](const Share& a, const Share& b) {
    if (a.remainder_numerator != b.remainder_numerator) return a.remainder_numerator > b.remainder_numerator;
    if (a.population != b.population) return a.population > b.population;
    return *a.key < *b.key;
  });
  for (std::size_t i = 0; assigned < n; ++i, ++assigned) ++allocation[*shares[i % shares.size()].key];

  // Seats beyond a stratum's population spill to the largest strata with room.
  std::size_t spill = 0;
  for (auto& [key, seats] : allocation) {
    const std::size_t population = populations.at(key);
    if (seats > population) {
      if (notes) {
        notes->push_back("stratum " + join_key(key) + " allocated " + std::to_string(seats) + " of " +
                         std::to_string(population) + "; spilling the excess");
      }
      spill += seats - population;
      seats = population;
    }
  }
  while (spill > 0) {
    const StratumKey* roomiest = nullptr;
    std::size_t room = 0;
    for (const auto& [key, seats] : allocation) {
      const std::size_t free = populations.at(key) - seats;
      if (free > room) {
        room = free;
        roomiest = &key;
      }
    }
    const std::size_t moved = std::min(room, spill);
    allocation[*roomiest] += moved;
    spill -= moved;
  }
  return allocation;
}

SampleResult stratified_sample(const std::vector<VerifiedRecord>& records, std::size_t n,
                               const std::vector<StratumField>& fields, std::uint64_t seed) {
  SampleResult result;
  std::map<StratumKey, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (auto key = stratum_of(records[i], fields)) {
      members[*key].push_back(i);
    } else {
      ++result.excluded_unlabeled;
    }
  }
  std::map<StratumKey, std::size_t> populations;
  for (const auto& [key, indices] : members) populations[key] = indices.size();
  result.allocation = proportional_allocation(populations, n, &result.notes);

  std::vector<std::size_t> chosen;
  chosen.reserve(n);
  for (auto& [key, indices] : members) {
    const std::size_t take = result.allocation[key];
    SeededRng rng(derive_seed(seed, join_key(key)));
    for (std::size_t i = 0; i < take; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.uniform(indices.size() - i));
      std::swap(indices[i], indices[j]);
      chosen.push_back(indices[i]);
    }
  }
  std::sort(chosen.begin(), chosen.end());
  result.records.reserve(chosen.size());
  for (std::size_t index : chosen) result.records.push_back(records[index]);
  return result;
}

}  // namespace figqa
