#include "driftqa/strategy.hpp"

#include <algorithm>
#include <unordered_set>

#include "driftqa/error.hpp"
#include "driftqa/random.hpp"

namespace driftqa {

std::string_view to_string(StrategyKind kind) noexcept {
  switch (kind) {
    case StrategyKind::AddOnlyRandom: return "add-only-random";
    case StrategyKind::AddOnlyPrioritized: return "add-only-prioritized";
    case StrategyKind::AddDeleteRandom: return "add-delete-random";
    case StrategyKind::AddDeletePrioritized: return "add-delete-prioritized";
  }
  return "unknown";
}

StrategyKind strategy_from_string(std::string_view name) {
  for (StrategyKind k : kAllStrategies) {
    if (to_string(k) == name) return k;
  }
  throw Error(ErrorKind::Parse, "unknown strategy '" + std::string(name) + "'");
}

bool deletes(StrategyKind kind) noexcept {
  return kind == StrategyKind::AddDeleteRandom || kind == StrategyKind::AddDeletePrioritized;
}

bool prioritized(StrategyKind kind) noexcept {
  return kind == StrategyKind::AddOnlyPrioritized || kind == StrategyKind::AddDeletePrioritized;
}

TestSetState TestSetState::initial(const Dataset& test, const MaskedDataset& pool) {
  TestSetState s;
  s.members_.reserve(test.size());
  for (std::size_t r = 0; r < test.size(); ++r) {
    s.members_.push_back({test.ids()[r], Origin::Initial, test.labels()[r]});
  }
  s.remaining_ = pool.ids();
  std::sort(s.remaining_.begin(), s.remaining_.end());
  s.reindex();
  for (SampleId id : s.remaining_) {
    if (s.contains(id)) {
      throw Error(ErrorKind::Consistency, "id " + std::to_string(id) + " is in both test and pool");
    }
  }
  return s;
}

void TestSetState::reindex() {
  member_index_.clear();
  member_index_.reserve(members_.size());
  for (std::size_t i = 0; i < members_.size(); ++i) member_index_.emplace(members_[i].id, i);
}

std::size_t TestSetState::count(Origin origin) const noexcept {
  return static_cast<std::size_t>(std::count_if(members_.begin(), members_.end(),
                                                [&](const Member& m) { return m.origin == origin; }));
}

std::vector<SampleId> TestSetState::member_ids() const {
  std::vector<SampleId> out;
  out.reserve(members_.size());
  for (const auto& m : members_) out.push_back(m.id);
  return out;
}

std::vector<int> TestSetState::member_labels() const {
  std::vector<int> out;
  out.reserve(members_.size());
  for (const auto& m : members_) out.push_back(m.label);
  return out;
}

BatchSchedule batch_budget(std::size_t pool_size, std::size_t iterations) {
  if (iterations == 0) throw Error(ErrorKind::Domain, "iteration count must be at least 1");
  BatchSchedule s;
  s.iterations = iterations;
  s.per_batch = pool_size / iterations;
  s.final_batch = s.per_batch + pool_size % iterations;
  return s;
}

namespace {

double sigma_of(const ScoredDataset& scored, const std::unordered_map<SampleId, std::size_t>& index,
                const BinnedPredictor& predictor, SampleId id) {
  auto it = index.find(id);
  if (it == index.end()) {
    throw Error(ErrorKind::Consistency, "no base-model score for id " + std::to_string(id));
  }
  return predictor.predict(scored.confidence[it->second]).sigma;
}

// Ids ordered by sigma (descending or ascending), ties by ascending id.
std::vector<SampleId> rank_by_sigma(std::vector<SampleId> ids, const ScoredDataset& scored,
                                    const BinnedPredictor& predictor, bool descending,
                                    std::size_t budget) {
  const auto index = scored.index();
  std::vector<std::pair<double, SampleId>> keyed;
  keyed.reserve(ids.size());
  for (SampleId id : ids) keyed.emplace_back(sigma_of(scored, index, predictor, id), id);
  std::sort(keyed.begin(), keyed.end(), [descending](const auto& a, const auto& b) {
    if (a.first != b.first) return descending ? a.first > b.first : a.first < b.first;
    return a.second < b.second;
  });
  std::vector<SampleId> out;
  const std::size_t n = std::min(budget, keyed.size());
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(keyed[i].second);
  return out;
}

std::vector<SampleId> sample_uniform(std::vector<SampleId> ids, std::size_t budget, std::uint64_t seed) {
  std::sort(ids.begin(), ids.end());
  const std::size_t n = std::min(budget, ids.size());
  Rng rng = make_rng(seed);
  // Partial Fisher-Yates.
  for (std::size_t i = 0; i < n; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, ids.size() - 1);
    std::swap(ids[i], ids[pick(rng)]);
  }
  ids.resize(n);
  return ids;
}

}  // namespace

std::vector<SampleId> select_additions(StrategyKind kind, const TestSetState& state,
                                       const ScoredDataset& scored, const BinnedPredictor& predictor,
                                       std::size_t budget, std::uint64_t seed) {
  if (budget == 0) return {};
  if (prioritized(kind)) {
    return rank_by_sigma(state.remaining_pool_ids(), scored, predictor, /*descending=*/true, budget);
  }
  return sample_uniform(state.remaining_pool_ids(), budget, seed);
}

std::vector<SampleId> select_deletions(StrategyKind kind, const TestSetState& state,
                                       const ScoredDataset& scored, const BinnedPredictor& predictor,
                                       std::size_t budget, std::uint64_t seed) {
  if (!deletes(kind) || budget == 0) return {};
  std::vector<SampleId> candidates;
  for (const auto& m : state.members()) {
    if (m.origin == Origin::Initial) candidates.push_back(m.id);
  }
  if (prioritized(kind)) {
    return rank_by_sigma(std::move(candidates), scored, predictor, /*descending=*/false, budget);
  }
  return sample_uniform(std::move(candidates), budget, seed);
}

TestSetState apply_iteration(const TestSetState& state, std::span<const SampleId> additions,
                             std::span<const SampleId> deletions, const MaskedDataset& pool) {
  TestSetState next = state;

  std::unordered_set<SampleId> remaining(state.remaining_.begin(), state.remaining_.end());
  std::unordered_set<SampleId> added;
  for (SampleId id : additions) {
    if (state.contains(id)) {
      throw Error(ErrorKind::Consistency, "addition " + std::to_string(id) + " is already a test member");
    }
    if (!remaining.contains(id) || !added.insert(id).second) {
      throw Error(ErrorKind::Consistency, "addition " + std::to_string(id) + " is not an unlabeled pool sample");
    }
  }
  std::unordered_set<SampleId> removed;
  for (SampleId id : deletions) {
    auto it = state.member_index_.find(id);
    if (it == state.member_index_.end()) {
      throw Error(ErrorKind::Consistency, "deletion " + std::to_string(id) + " is not a test member");
    }
    if (state.members_[it->second].origin != Origin::Initial) {
      throw Error(ErrorKind::Consistency, "deletion " + std::to_string(id) + " was added from the pool");
    }
    if (!removed.insert(id).second) {
      throw Error(ErrorKind::Consistency, "deletion " + std::to_string(id) + " listed twice");
    }
  }

  std::erase_if(next.members_, [&](const Member& m) { return removed.contains(m.id); });
  for (SampleId id : additions) {
    auto row = pool.row_of(id);
    if (!row) throw Error(ErrorKind::Consistency, "addition " + std::to_string(id) + " not in pool data");
    next.members_.push_back({id, Origin::Pool, pool.reveal(*row)});
    next.revealed_.push_back(id);
  }
  std::erase_if(next.remaining_, [&](SampleId id) { return added.contains(id); });
  next.reindex();
  ++next.iteration_;
  return next;
}

}  // namespace driftqa
