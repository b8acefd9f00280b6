// Copyright (c) 2026, The llmprop Authors
// SPDX-License-Identifier: Apache-2.0

#include "llmprop/metrics.hpp"

#include <cstdio>

namespace llmprop {

std::string MetricsReport::serialize() const {
    std::string out;
    auto kv = [&](std::string_view k, const std::string& v) {
        out += k;
        out += '=';
        out += v;
        out += '\n';
    };
    kv("task", std::string(to_string(task)));
    kv("metric", metric_name());
    kv("value", format_double(value));
    kv("n", std::to_string(n));
    kv("skipped", std::to_string(skipped));
    kv("mean_prediction", format_double(mean_prediction));
    kv("units", units);
    kv("checkpoint_hash", checkpoint_hash);
    kv("split_manifest_hash", split_manifest_hash);
    for (const auto& [k, v] : notes) kv(k, v);
    return out;
}

std::string MetricsReport::summary() const {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s %s = %.4f %s (n=%zu)", std::string(to_string(task)).c_str(),
                  metric_name().c_str(), value, metric == MetricName::mae ? units.c_str() : "", n);
    return buf;
}

} // namespace llmprop
