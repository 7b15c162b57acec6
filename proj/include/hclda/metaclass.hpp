#pragma once

#include <algorithm>
#include <cstdio>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hclda/cross_validation.hpp"
#include "hclda/dataset.hpp"
#include "hclda/errors.hpp"
#include "hclda/lda.hpp"
#include "hclda/parallel.hpp"

namespace hclda {

/// Disjoint, covering blocks of class labels. Blocks are kept sorted
/// internally and ordered by their smallest member, so block indices are a
/// deterministic function of the content.
struct MetaclassPartition {
  int J = 0;
  std::vector<std::vector<int>> blocks;

  int m() const { return static_cast<int>(blocks.size()); }
};

inline MetaclassPartition make_partition(std::vector<std::vector<int>> blocks,
                                         int J) {
  if (J < 1) throw InvalidPartition("class count must be at least 1");
  std::vector<char> seen(J, 0);
  for (auto& block : blocks) {
    if (block.empty()) throw InvalidPartition("empty block");
    std::sort(block.begin(), block.end());
    for (const int label : block) {
      if (label < 1 || label > J) {
        throw InvalidPartition("label " + std::to_string(label) +
                               " outside {1.." + std::to_string(J) + "}");
      }
      if (seen[label - 1]) {
        throw InvalidPartition("label " + std::to_string(label) +
                               " appears in two blocks");
      }
      seen[label - 1] = 1;
    }
  }
  for (int j = 0; j < J; ++j) {
    if (!seen[j]) {
      throw InvalidPartition("label " + std::to_string(j + 1) +
                             " not covered by any block");
    }
  }
  std::sort(blocks.begin(), blocks.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  return MetaclassPartition{J, std::move(blocks)};
}

inline MetaclassPartition singleton_partition(int J) {
  std::vector<std::vector<int>> blocks(J);
  for (int j = 0; j < J; ++j) blocks[j] = {j + 1};
  return make_partition(std::move(blocks), J);
}

inline MetaclassPartition one_block_partition(int J) {
  std::vector<int> all(J);
  std::iota(all.begin(), all.end(), 1);
  return make_partition({std::move(all)}, J);
}

/// Replaces each label by the index of its containing block (1-based).
inline LabeledDataset relabel(const LabeledDataset& data,
                              const MetaclassPartition& partition) {
  std::vector<int> block_of(partition.J, 0);
  for (int b = 0; b < partition.m(); ++b) {
    for (const int label : partition.blocks[b]) block_of[label - 1] = b + 1;
  }
  LabeledDataset out;
  out.X = data.X;
  out.J = partition.m();
  out.y.resize(data.y.size());
  for (std::size_t i = 0; i < data.y.size(); ++i) {
    const int label = data.y[i];
    if (label < 1 || label > partition.J) {
      throw InvalidPartition("label " + std::to_string(label) +
                             " not covered by the partition");
    }
    out.y[i] = block_of[label - 1];
  }
  return out;
}

/// Row indices (ascending) of the observations whose class lies in `block`.
inline std::vector<int> block_observations(const LabeledDataset& data,
                                           const std::vector<int>& block) {
  std::vector<char> member(data.J + 1, 0);
  for (const int label : block) member[label] = 1;
  std::vector<int> rows;
  for (int i = 0; i < data.n(); ++i) {
    if (member[data.y[i]]) rows.push_back(i);
  }
  return rows;
}

/// Extracts a block's observations with labels compacted to 1..|block|
/// following the block's (sorted) class order.
inline LabeledDataset block_subdataset(const LabeledDataset& data,
                                       const std::vector<int>& block,
                                       const std::vector<int>& rows) {
  std::vector<int> compact(data.J + 1, 0);
  for (std::size_t k = 0; k < block.size(); ++k) compact[block[k]] = static_cast<int>(k) + 1;
  LabeledDataset sub;
  sub.J = static_cast<int>(block.size());
  sub.X.resize(static_cast<int>(rows.size()), data.p());
  sub.y.resize(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    sub.X.row(static_cast<int>(r)) = data.X.row(rows[r]);
    sub.y[r] = compact[data.y[rows[r]]];
  }
  return sub;
}

/// Stage-1 discriminates between metaclasses; stage-2 models exist only for
/// blocks holding more than one class. stage1 is absent for the one-block
/// partition, where routing is constant.
struct TwoStageModel {
  MetaclassPartition partition;
  int D_requested = 0;
  double delta = 0.0;
  std::optional<DiscriminantModel> stage1;
  std::map<int, DiscriminantModel> stage2;  // block index (0-based) -> model
};

inline TwoStageModel two_stage_fit(const LabeledDataset& data,
                                   const MetaclassPartition& partition,
                                   int D, double delta) {
  validate(data);
  if (partition.J != data.J) {
    throw InvalidPartition("partition covers " + std::to_string(partition.J) +
                           " classes, dataset has " + std::to_string(data.J));
  }
  if (D < 1) throw InvalidDimension("projected dimension must be positive");

  TwoStageModel model;
  model.partition = partition;
  model.D_requested = D;
  model.delta = delta;

  const int m = partition.m();
  const int p = data.p();
  if (m >= 2) {
    const LabeledDataset relabeled = relabel(data, partition);
    model.stage1 =
        fit_lda(class_statistics(relabeled, delta), std::min(D, std::min(m - 1, p)));
  }
  for (int b = 0; b < m; ++b) {
    const auto& block = partition.blocks[b];
    if (block.size() < 2) continue;
    const std::vector<int> rows = block_observations(data, block);
    if (rows.size() < 2) {
      throw InsufficientData("block starting at class " +
                             std::to_string(block.front()) +
                             " has fewer than 2 observations");
    }
    const LabeledDataset sub = block_subdataset(data, block, rows);
    DiscriminantModel fitted = fit_lda(
        class_statistics(sub, delta),
        std::min(D, std::min(static_cast<int>(block.size()) - 1, p)));
    fitted.labels.assign(block.begin(), block.end());
    model.stage2.emplace(b, std::move(fitted));
  }
  return model;
}

inline int two_stage_predict(const TwoStageModel& model,
                             const Eigen::Ref<const Eigen::VectorXd>& x) {
  int b = 0;
  if (model.stage1.has_value()) {
    b = classify(*model.stage1, x) - 1;  // stage-1 labels are block indices
  }
  const auto& block = model.partition.blocks[b];
  if (block.size() == 1) return block[0];
  return classify(model.stage2.at(b), x);
}

/// Shared machinery for scoring two-stage CV across many candidate
/// partitions of one dataset: the fast workspace is built once and the
/// per-block stage-2 masks are memoized by block content. Observation i
/// counts as correct when stage 1 routes it to its own block and the
/// stage-2 leave-one-out allocation inside that block recovers its label.
class TwoStageCvContext {
 public:
  TwoStageCvContext(const LabeledDataset& data, int D, double delta,
                    CvEngine engine, bool loo_means = true)
      : data_(data), D_(D), delta_(delta), engine_(engine),
        loo_means_(loo_means) {
    validate(data_);
    if (D < 1) throw InvalidDimension("projected dimension must be positive");
    if (engine_ == CvEngine::fast) workspace_.emplace(data_, delta_);
  }

  double cv(const MetaclassPartition& partition, unsigned threads = 0) {
    if (partition.J != data_.J) {
      throw InvalidPartition("partition does not match the dataset classes");
    }
    const int n = data_.n();
    const int m = partition.m();

    // Stage 1 over the relabeled data; trivially correct when m == 1.
    std::vector<std::uint8_t> stage1(n, 1);
    if (m >= 2) {
      if (engine_ == CvEngine::fast) {
        stage1 = workspace_->evaluate_blocks(partition.blocks, D_, loo_means_,
                                             threads)
                     .correct;
      } else {
        stage1 = exact_loo_allocations(relabel(data_, partition),
                                       std::min(D_, std::min(m - 1, data_.p())),
                                       delta_, threads)
                     .correct;
      }
    }

    int wrong = 0;
    std::vector<std::uint8_t> combined = stage1;
    for (int b = 0; b < m; ++b) {
      const auto& block = partition.blocks[b];
      if (block.size() < 2) continue;
      const std::vector<int> rows = block_observations(data_, block);
      const std::vector<std::uint8_t>& mask = stage2_mask(block, rows, threads);
      for (std::size_t r = 0; r < rows.size(); ++r) {
        if (!mask[r]) combined[rows[r]] = 0;
      }
    }
    for (int i = 0; i < n; ++i) wrong += (combined[i] == 0);
    return static_cast<double>(wrong) / static_cast<double>(n);
  }

  /// Leave-one-out correctness of the within-block classifier, aligned with
  /// the block's rows in ascending global order. Memoized by block content.
  const std::vector<std::uint8_t>& stage2_mask(const std::vector<int>& block,
                                               const std::vector<int>& rows,
                                               unsigned threads = 0) {
    {
      std::lock_guard<std::mutex> lock(mutex_);
      const auto it = cache_.find(block);
      if (it != cache_.end()) return it->second;
    }
    const LabeledDataset sub = block_subdataset(data_, block, rows);
    const int D_block = std::min(
        D_, std::min(static_cast<int>(block.size()) - 1, data_.p()));
    std::vector<std::uint8_t> mask;
    if (engine_ == CvEngine::fast) {
      mask = fast_loo_allocations(sub, D_block, delta_, loo_means_, threads)
                 .correct;
    } else {
      mask = exact_loo_allocations(sub, D_block, delta_, threads).correct;
    }
    std::lock_guard<std::mutex> lock(mutex_);
    return cache_.emplace(block, std::move(mask)).first->second;
  }

  const LabeledDataset& data() const { return data_; }

 private:
  LabeledDataset data_;
  int D_;
  double delta_;
  CvEngine engine_;
  bool loo_means_;
  std::optional<FastCvWorkspace> workspace_;
  std::map<std::vector<int>, std::vector<std::uint8_t>> cache_;
  std::mutex mutex_;
};

/// Leave-one-out error of the two-stage rule under a fixed partition.
inline double two_stage_cv(const LabeledDataset& data,
                           const MetaclassPartition& partition, int D,
                           double delta, CvEngine engine,
                           bool loo_means = true, unsigned threads = 0) {
  TwoStageCvContext context(data, D, delta, engine, loo_means);
  return context.cv(partition, threads);
}

/// One row of the greedy merge history. `merged_a/merged_b` are the smallest
/// labels of the two blocks joined at this step; step 0 records the untouched
/// singleton partition.
struct MergeStep {
  int t = 0;
  int merged_a = 0;
  int merged_b = 0;
  MetaclassPartition partition;
  double cv = 0.0;
};

struct MergeTrace {
  std::vector<MergeStep> steps;
  int selected_t = 0;
};

/// CV-minimizing step; ties resolve to the smallest t (fewest merges).
inline int select_step(const MergeTrace& trace) {
  if (trace.steps.empty()) throw InvalidInput("empty merge trace");
  int best = 0;
  double best_cv = trace.steps[0].cv;
  for (std::size_t s = 1; s < trace.steps.size(); ++s) {
    if (trace.steps[s].cv < best_cv) {
      best_cv = trace.steps[s].cv;
      best = static_cast<int>(s);
    }
  }
  return best;
}

inline MetaclassPartition select_partition(const MergeTrace& trace) {
  return trace.steps[select_step(trace)].partition;
}

/// Greedy hierarchical merging driven by two-stage CV: starts from the
/// singleton partition and at every step joins the pair with the smallest CV
/// (ties to the lexicographically smallest representatives), down to a single
/// block. A candidate whose evaluation fails numerically is scored +inf and
/// never chosen.
inline MergeTrace hierarchical_fit(const LabeledDataset& data, int D,
                                   double delta, CvEngine engine,
                                   bool loo_means = true,
                                   unsigned threads = 0) {
  validate(data);
  if (data.J < 2) throw InvalidInput("hierarchical merging needs J >= 2");
  if (D < 1) throw InvalidDimension("projected dimension must be positive");

  TwoStageCvContext context(data, D, delta, engine, loo_means);
  MergeTrace trace;
  MetaclassPartition current = singleton_partition(data.J);
  trace.steps.push_back({0, 0, 0, current, context.cv(current, threads)});

  for (int t = 1; current.m() >= 2; ++t) {
    const int m = current.m();
    struct Candidate {
      int a, b;
      MetaclassPartition partition;
      double cv;
    };
    std::vector<Candidate> candidates;
    candidates.reserve(static_cast<std::size_t>(m) * (m - 1) / 2);
    for (int a = 0; a < m; ++a) {
      for (int b = a + 1; b < m; ++b) {
        std::vector<std::vector<int>> blocks;
        blocks.reserve(m - 1);
        std::vector<int> merged = current.blocks[a];
        merged.insert(merged.end(), current.blocks[b].begin(),
                      current.blocks[b].end());
        blocks.push_back(std::move(merged));
        for (int k = 0; k < m; ++k) {
          if (k != a && k != b) blocks.push_back(current.blocks[k]);
        }
        candidates.push_back({a, b, make_partition(std::move(blocks), data.J),
                              std::numeric_limits<double>::infinity()});
      }
    }

    parallel_for(
        candidates.size(),
        [&](std::size_t k) {
          try {
            candidates[k].cv = context.cv(candidates[k].partition, 1);
          } catch (const NumericalError& err) {
            std::fprintf(stderr,
                         "warning: merge of blocks {%d, %d} skipped: %s\n",
                         current.blocks[candidates[k].a].front(),
                         current.blocks[candidates[k].b].front(), err.what());
            candidates[k].cv = std::numeric_limits<double>::infinity();
          }
        },
        threads);

    // Candidates are enumerated in lexicographic representative order, so the
    // first strict minimum realizes the tie rule.
    std::size_t winner = 0;
    for (std::size_t k = 1; k < candidates.size(); ++k) {
      if (candidates[k].cv < candidates[winner].cv) winner = k;
    }
    const Candidate& chosen = candidates[winner];
    trace.steps.push_back({t, current.blocks[chosen.a].front(),
                           current.blocks[chosen.b].front(), chosen.partition,
                           chosen.cv});
    current = chosen.partition;
  }

  trace.selected_t = select_step(trace);
  return trace;
}

}  // namespace hclda
