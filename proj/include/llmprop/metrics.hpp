// Copyright (c) 2026, The llmprop Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "llmprop/common.hpp"

namespace llmprop {

/// Mean absolute difference.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar mae(const Eigen::DenseBase<DerivedA>& pred, const Eigen::DenseBase<DerivedB>& target) {
    if (pred.size() == 0) throw NumericError("mae of an empty input");
    if (pred.size() != target.size()) throw NumericError("mae: length mismatch");
    return (pred.derived().array() - target.derived().array()).abs().mean();
}

/// Area under the ROC curve, equal to the Mann-Whitney statistic
/// P(score_pos > score_neg) + P(tie) / 2. Ties get midranks; the numerator is
/// accumulated as an integer so the value matches pairwise counting exactly.
template <typename DerivedS, typename DerivedL>
double roc_auc(const Eigen::DenseBase<DerivedS>& scores, const Eigen::DenseBase<DerivedL>& labels) {
    const Eigen::Index n = scores.size();
    if (n != labels.size()) throw NumericError("roc_auc: length mismatch");
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::sort(order.begin(), order.end(),
              [&](Eigen::Index a, Eigen::Index b) { return scores.derived()(a) < scores.derived()(b); });

    std::int64_t n_pos = 0;
    std::int64_t twice_rank_sum = 0; // sum over positives of 2 * midrank (1-based)
    for (Eigen::Index i = 0; i < n;) {
        Eigen::Index j = i + 1;
        while (j < n && scores.derived()(order[j]) == scores.derived()(order[i])) ++j;
        // ranks i+1 .. j share midrank (i+1+j)/2
        const std::int64_t twice_midrank = static_cast<std::int64_t>(i + 1 + j);
        for (Eigen::Index k = i; k < j; ++k) {
            if (labels.derived()(order[k]) > 0) {
                ++n_pos;
                twice_rank_sum += twice_midrank;
            }
        }
        i = j;
    }
    const std::int64_t n_neg = static_cast<std::int64_t>(n) - n_pos;
    if (n_pos == 0 || n_neg == 0) throw NumericError("roc_auc undefined: labels contain a single class");
    const std::int64_t twice_u = twice_rank_sum - n_pos * (n_pos + 1);
    return static_cast<double>(twice_u) / static_cast<double>(2 * n_pos * n_neg);
}

enum class MetricName { mae, auc };

struct MetricsReport {
    Task task = Task::band_gap;
    MetricName metric = MetricName::mae;
    double value = 0;
    std::size_t n = 0;
    std::size_t skipped = 0;       // records lacking the label
    double mean_prediction = 0;    // original units, or mean probability
    std::string units;
    std::string checkpoint_hash;
    std::string split_manifest_hash;
    std::vector<std::pair<std::string, std::string>> notes;

    std::string metric_name() const { return metric == MetricName::mae ? "MAE" : "AUC"; }
    /// Full-precision key=value block.
    std::string serialize() const;
    /// One rounded line for humans.
    std::string summary() const;
};

} // namespace llmprop
