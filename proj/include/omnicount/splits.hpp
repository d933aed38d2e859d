#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "omnicount/annotations.hpp"

namespace omnicount {

struct ZeroShotSplit {
  std::vector<std::string> train_classes;  // sorted
  std::vector<std::string> test_classes;   // sorted
};

struct FewShotSplit {
  std::map<std::string, std::vector<std::string>> train_images;  // label -> sorted image ids
  std::vector<std::string> test_images;                          // sorted
};

// Class-disjoint split. Classes occurring in an excluded domain always go to
// test; the rest are shuffled with `seed` and the first round(ratio * K)
// (K = all classes, clamped so both sides are non-empty) go to train.
ZeroShotSplit generate_zero_shot_split(const std::vector<AnnotationRecord>& records, double ratio,
                                       std::uint64_t seed,
                                       const std::set<std::string>& excluded_domains = {});

// Per class, min(shots, available) seeded images go to train; every image not
// chosen for any class is test. shots must be in [1, 5].
FewShotSplit generate_few_shot_split(const std::vector<AnnotationRecord>& records, int shots,
                                     std::uint64_t seed);

}  // namespace omnicount
