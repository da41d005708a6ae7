#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "driftqa/basemodel.hpp"
#include "driftqa/data.hpp"
#include "driftqa/predictor.hpp"

namespace driftqa {

enum class StrategyKind {
  AddOnlyRandom,
  AddOnlyPrioritized,
  AddDeleteRandom,
  AddDeletePrioritized,
};

inline constexpr StrategyKind kAllStrategies[] = {
    StrategyKind::AddOnlyRandom, StrategyKind::AddOnlyPrioritized,
    StrategyKind::AddDeleteRandom, StrategyKind::AddDeletePrioritized};

std::string_view to_string(StrategyKind kind) noexcept;
StrategyKind strategy_from_string(std::string_view name);
bool deletes(StrategyKind kind) noexcept;
bool prioritized(StrategyKind kind) noexcept;

enum class Origin : std::uint8_t { Initial, Pool };

struct Member {
  SampleId id;
  Origin origin;
  int label;
};

/**
 * The working test set plus the bookkeeping of which pool samples have been
 * labeled. Pool labels enter the state only through apply_iteration().
 */
class TestSetState {
 public:
  static TestSetState initial(const Dataset& test, const MaskedDataset& pool);

  const std::vector<Member>& members() const noexcept { return members_; }
  const std::vector<SampleId>& revealed_pool_ids() const noexcept { return revealed_; }
  // Ascending.
  const std::vector<SampleId>& remaining_pool_ids() const noexcept { return remaining_; }
  std::size_t iteration() const noexcept { return iteration_; }

  std::size_t size() const noexcept { return members_.size(); }
  std::size_t count(Origin origin) const noexcept;
  bool contains(SampleId id) const { return member_index_.contains(id); }

  std::vector<SampleId> member_ids() const;
  std::vector<int> member_labels() const;

  friend TestSetState apply_iteration(const TestSetState& state, std::span<const SampleId> additions,
                                      std::span<const SampleId> deletions, const MaskedDataset& pool);

 private:
  void reindex();

  std::vector<Member> members_;
  std::unordered_map<SampleId, std::size_t> member_index_;
  std::vector<SampleId> revealed_;
  std::vector<SampleId> remaining_;
  std::size_t iteration_ = 0;
};

// floor(pool / iterations) per minibatch; the last minibatch also takes the remainder.
struct BatchSchedule {
  std::size_t per_batch = 0;
  std::size_t final_batch = 0;
  std::size_t iterations = 0;

  std::size_t at(std::size_t iteration) const noexcept {
    return iteration + 1 == iterations ? final_batch : per_batch;
  }
};

BatchSchedule batch_budget(std::size_t pool_size, std::size_t iterations = 40);

// Labels to request next. `scored` must cover every remaining pool id.
std::vector<SampleId> select_additions(StrategyKind kind, const TestSetState& state,
                                       const ScoredDataset& scored, const BinnedPredictor& predictor,
                                       std::size_t budget, std::uint64_t seed);

// Initial-origin members to retire; always empty for add-only kinds.
std::vector<SampleId> select_deletions(StrategyKind kind, const TestSetState& state,
                                       const ScoredDataset& scored, const BinnedPredictor& predictor,
                                       std::size_t budget, std::uint64_t seed);

// Reveals the additions' labels from `pool`, moves them into the test set,
// removes deletions and advances the iteration counter.
TestSetState apply_iteration(const TestSetState& state, std::span<const SampleId> additions,
                             std::span<const SampleId> deletions, const MaskedDataset& pool);

}  // namespace driftqa
