#include "omnicount/splits.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace omnicount {
namespace {

// Unbiased index in [0, n) from the raw mt19937_64 stream; std distributions
// are implementation-defined, which would make splits toolchain-dependent.
std::uint64_t uniform_index(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t v = rng();
  while (v >= limit) v = rng();
  return v % n;
}

template <typename T>
void seeded_shuffle(std::vector<T>& items, std::mt19937_64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::swap(items[i - 1], items[uniform_index(rng, i)]);
  }
}

}  // namespace

ZeroShotSplit generate_zero_shot_split(const std::vector<AnnotationRecord>& records, double ratio,
                                       std::uint64_t seed,
                                       const std::set<std::string>& excluded_domains) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw Error(ErrorKind::InvalidArgument, "ratio must be in (0, 1)");
  std::set<std::string> all;
  std::set<std::string> forced_test;
  for (const auto& rec : records) {
    const bool excluded = excluded_domains.contains(rec.domain);
    for (const auto& obj : rec.objects) {
      all.insert(obj.label);
      if (excluded) forced_test.insert(obj.label);
    }
  }
  if (all.size() < 2) throw Error(ErrorKind::TooFewClasses, "need at least two classes");

  std::vector<std::string> eligible;
  for (const auto& label : all) {
    if (!forced_test.contains(label)) eligible.push_back(label);
  }
  std::mt19937_64 rng(seed);
  seeded_shuffle(eligible, rng);

  const long k = static_cast<long>(all.size());
  long n_train = std::lround(ratio * static_cast<double>(k));
  n_train = std::clamp(n_train, 1L, k - 1);
  n_train = std::min(n_train, static_cast<long>(eligible.size()));

  ZeroShotSplit split;
  split.train_classes.assign(eligible.begin(), eligible.begin() + n_train);
  std::set<std::string> train(split.train_classes.begin(), split.train_classes.end());
  for (const auto& label : all) {
    if (!train.contains(label)) split.test_classes.push_back(label);
  }
  std::sort(split.train_classes.begin(), split.train_classes.end());
  return split;
}

FewShotSplit generate_few_shot_split(const std::vector<AnnotationRecord>& records, int shots,
                                     std::uint64_t seed) {
  if (shots < 1 || shots > 5) throw Error(ErrorKind::InvalidArgument, "shots must be in [1, 5]");
  std::map<std::string, std::set<std::string>> images_by_class;
  std::set<std::string> all_images;
  for (const auto& rec : records) {
    all_images.insert(rec.image_id);
    for (const auto& obj : rec.objects) {
      if (obj.gt_count > 0) images_by_class[obj.label].insert(rec.image_id);
    }
  }

  FewShotSplit split;
  std::set<std::string> train_union;
  std::mt19937_64 rng(seed);
  for (const auto& [label, images] : images_by_class) {
    std::vector<std::string> pool(images.begin(), images.end());
    const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(shots), pool.size());
    // Partial Fisher-Yates: the first `take` slots are the sample.
    for (std::size_t i = 0; i < take; ++i) {
      std::swap(pool[i], pool[i + uniform_index(rng, pool.size() - i)]);
    }
    std::vector<std::string> chosen(pool.begin(), pool.begin() + static_cast<long>(take));
    std::sort(chosen.begin(), chosen.end());
    train_union.insert(chosen.begin(), chosen.end());
    split.train_images[label] = std::move(chosen);
  }
  for (const auto& id : all_images) {
    if (!train_union.contains(id)) split.test_images.push_back(id);
  }
  return split;
}

}  // namespace omnicount
